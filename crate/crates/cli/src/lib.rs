//! Library side of the command-line front end: config handling and the
//! theorem-verification suites, shared with the integration tests.

pub mod config;
pub mod verify;
