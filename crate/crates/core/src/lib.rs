pub mod background;
pub mod certifier;
pub mod config;
pub mod error;
pub mod evolution;
pub mod modes;
pub mod run;
pub mod sbp;
pub mod superenergy;

pub use error::{Error, Result};
