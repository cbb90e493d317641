//! Library surface of the command-line front end, split out so integration
//! tests can parse and serialize instances without spawning the binary.

pub mod commands;
pub mod error;
pub mod instance;
pub mod report;
