//! Spider walks: k interacting random walkers on a graph whose joint moves
//! are restricted by a local configuration rule, together with the chain
//! machinery used to analyse them.

pub mod chain;
pub mod classify;
pub mod dynamics;
pub mod error;
pub mod graphs;
pub mod quotient;
pub mod spider;

pub use error::{Error, Result};
