//! HTTP service and command-line front end for the PPML ranking engine.

pub mod api;
pub mod cli;
pub mod state;

pub use api::router;
pub use state::AppState;
