//! Boolean promise-CSP toolkit: relational structures, the fixed-template
//! families, polymorphism checks, LP/IP relaxations, classification, and
//! tableau certificates.

pub mod classify;
pub mod cli;
pub mod error;
pub mod limits;
pub mod polymorphisms;
pub mod relax;
pub mod solve;
pub mod structures;
pub mod tableaux;
pub mod templates;

pub use error::{PcspError, Result};
