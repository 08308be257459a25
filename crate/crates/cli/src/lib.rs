//! Front end for the scoreforge consistency tests: problem documents in,
//! verdict documents out.

pub mod document;
pub mod plan;
pub mod report;
pub mod runner;
