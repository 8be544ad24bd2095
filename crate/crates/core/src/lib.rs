// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod corpus;
pub mod curve;
pub mod diagnostics;
pub mod error;
pub mod graph;
pub mod grid;
pub mod norms;
pub mod oracle;
pub mod runlog;
