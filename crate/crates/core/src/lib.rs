//! Generic local identifiability and expected dimension of linear
//! compartmental models, decided from the model graph.

pub mod auxgraph;
pub mod corpus;
pub mod det;
pub mod error;
pub mod forest;
pub mod ident;
pub mod model;
pub mod poly;
pub mod sweeps;
pub mod transforms;

pub use error::AnalysisError;
pub use model::{CompartmentId, Model, ModelError, Param};
pub use poly::{LambdaPoly, Polynomial};
