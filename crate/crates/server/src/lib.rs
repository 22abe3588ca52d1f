//! HTTP service and command-line front end for [`harmonia`].

pub mod api;
pub mod cli;

pub use api::{router, AppState};
