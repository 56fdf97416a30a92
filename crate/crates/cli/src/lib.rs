//! Model files, JSON reports and the check suites behind the `rockland`
//! command.

pub mod commands;
pub mod dsl;
pub mod report;
pub mod suites;
