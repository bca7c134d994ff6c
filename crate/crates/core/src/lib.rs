pub mod constraint;
pub mod corpus;
pub mod error;
pub mod kvtext;
pub mod level;
pub mod metrics;
pub mod optim;
pub mod pipeline;
pub mod policy;
pub mod reward;
pub mod tensor;
pub mod toy;
pub mod trainer;

pub use error::{Error, Result};
pub use level::{Band, CefrLevel};
