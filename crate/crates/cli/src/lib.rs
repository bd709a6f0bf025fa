//! Library surface behind the `qmodc` binary: linear segment fitting for
//! amplitude loads, classical value parsing/rendering, and the example
//! corpus manifest. The integration tests drive the compiler through this
//! crate so they exercise exactly what the binary ships.

pub mod coefs;
pub mod manifest;
pub mod values;
