//! File formats and command implementations behind the `polysep` binary.

pub mod commands;
pub mod files;
