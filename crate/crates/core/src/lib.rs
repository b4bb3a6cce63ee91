//! Constrained monotone submodular maximization behind query-counting oracles.

pub mod cardinality;
pub mod constraints;
pub mod curvature;
pub mod error;
pub mod exact;
pub mod instance;
pub mod knapsack;
pub mod oracle;
pub mod psystem;
pub mod report;
pub mod set;

pub use error::{Error, Result};
pub use instance::{gen_instance, GeneratorSpec, Instance};
pub use oracle::{FunctionSpec, QueryCountingOracle, SetFunction, ValueOracle};
pub use report::RunReport;
pub use set::ElementSet;
