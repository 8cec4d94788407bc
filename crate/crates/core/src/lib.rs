pub mod error;
pub mod model;
pub mod fisher;
pub mod quadrature;
pub mod bayes;
pub mod montecarlo;
pub mod ingest;
pub mod report;
