//! Session logs: schema, persistence, and dataset assembly.

pub mod build;
pub mod context;
pub mod io;
pub mod records;

pub use build::{build_eval_set, build_training_set};
pub use context::{ContextItem, Dataset, TrainingContext};
pub use io::{read_log, write_log};
pub use records::{ItemRecord, PurchaseRecord, QueryRecord, SessionRecord};
