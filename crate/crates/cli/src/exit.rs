//! Exit statuses: 0 success, 1 usage, 2 data, 3 numeric failure.

use thiserror::Error;
use wordtree_annotate::ServiceError;

pub const USAGE: u8 = 1;
pub const DATA: u8 = 2;
pub const NUMERIC: u8 = 3;

/// A command line or configuration the program cannot act on.
#[derive(Debug, Error)]
#[error("{0}")]
pub struct Usage(pub String);

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

/// Status for an error, judged by the first cause that has a known kind.
pub fn code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<Usage>() {
            return USAGE;
        }
        if let Some(e) = cause.downcast_ref::<wordtree_core::Error>() {
            return match e {
                wordtree_core::Error::NonFinite(_) | wordtree_core::Error::Shape { .. } => NUMERIC,
                _ => DATA,
            };
        }
        if let Some(ServiceError::Core(e)) = cause.downcast_ref::<ServiceError>() {
            return if e.is_numeric() { NUMERIC } else { DATA };
        }
    }
    DATA
}
