pub mod benchmark;
pub mod closed;
pub mod density;
pub mod error;
pub mod graph;
pub mod hamiltonian;
pub mod instances;
pub mod ode;
pub mod open;
pub mod problem;
pub mod schedule;
pub mod semiclassical;
pub mod spectrum;
pub mod table;

pub use error::{Error, Result};
