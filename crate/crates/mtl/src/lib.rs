//! Growth of free group automorphisms and the peripheral structures their
//! mapping tori are organized around.

pub mod autos;
pub mod config;
pub mod driver;
pub mod error;
pub mod growth;
pub mod json;
pub mod rng;
pub mod splittings;
pub mod subgroups;
pub mod suspension;
pub mod words;

pub use error::{Error, Result};
