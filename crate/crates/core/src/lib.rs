pub mod error;
pub mod lemmas;
pub mod multiindex;
pub mod par;

pub use error::{Error, Result};
pub mod grid;
pub mod warning;
pub mod propagator;
pub mod galilean;
pub mod gauge;
pub mod diagnostics;
pub mod witness;
pub mod profile;
pub mod config;
pub mod record;
pub mod runner;
