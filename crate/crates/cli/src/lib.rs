//! Netlist format and subcommands behind the `osc-logic` binary.
//!
//! Exit codes: 0 success, 1 not locked / truth-table mismatch / stability
//! verdict mismatch, 2 parse or usage error, 3 simulation or I/O error.

pub mod commands;
pub mod netlist;

pub use commands::{CliError, Outcome};
pub use netlist::{emit_netlist, parse_netlist, NetlistError, SimConfig};
