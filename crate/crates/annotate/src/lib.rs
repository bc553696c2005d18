//! Double-annotation workflow for word-internal dependency trees.
//!
//! Each word is annotated by two randomly assigned annotators. Identical
//! submissions become the final answer; differing ones go to an expert,
//! whose decision the annotators either accept by resubmitting it or
//! dispute with a complaint that a senior expert settles. State changes are
//! events in an append-only log, exposed over HTTP by [`api`].

pub mod api;
pub mod error;
pub mod export;
pub mod modelcheck;
pub mod service;
pub mod store;
pub mod workflow;

pub use error::{Result, ServiceError};
pub use export::{Export, ProjectStats, SubmissionRecord};
pub use modelcheck::{model_check, ModelCheckReport};
pub use service::{AnnotatorView, Service};
pub use workflow::{Event, Task, TaskSpec, TaskState, Workspace};
