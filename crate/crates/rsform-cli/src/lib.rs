//! Text formats, reports and subcommands for the `rsform` command-line tool.

pub mod commands;
pub mod doc;
pub mod expr;
pub mod report;

pub use commands::{report, run_command, CliError, Command, Options};
pub use doc::{parse_document, Backend, InputDocument, Object};
pub use expr::{parse_expression, print_jet, ParseError};
