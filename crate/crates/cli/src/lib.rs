//! Command-line front end: netlist text format, scenario assembly, CSV
//! artifacts and the `mona` binary's subcommands.

mod app;
mod error;
pub mod netlist;
pub mod output;
pub mod scenario;

pub use app::run_cli;
pub use error::{CliError, CliResult};
pub use netlist::{parse_netlist, Netlist};
pub use output::{write_audit, write_eoc, write_trace};
pub use scenario::Scenario;
