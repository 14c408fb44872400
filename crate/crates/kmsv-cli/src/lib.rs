//! Library surface of the experiment runner, kept separate from the binary
//! so integration tests can drive the pipeline directly.

pub mod config;
pub mod pipeline;
pub mod plot;

/// Process exit code for an error, per the CLI contract:
/// 2 config/validation, 3 data format, 4 numerical failure, 1 otherwise.
pub fn exit_code(err: &kmsv::Error) -> i32 {
    match err {
        kmsv::Error::InvalidParameter(_) | kmsv::Error::InvalidInput(_) => 2,
        kmsv::Error::Format { .. } => 3,
        kmsv::Error::Solver { .. } | kmsv::Error::Numerical(_) => 4,
        kmsv::Error::Metric(_) => 4,
        kmsv::Error::Io(_) => 1,
    }
}
