//! Ward activity monitoring: sensor event ledger, workflow definition
//! language, and the runtime that executes workflow instances over event
//! logs to produce compliance alerts.

pub mod engine;
pub mod epi;
pub mod his;
pub mod hygiene;
pub mod ledger;
pub mod simward;
pub mod wfdl;
