//! Sociolinguistic marker extraction joined with socioeconomic, spatial,
//! temporal and social-network attributes of post authors.

pub mod analysis;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod geoloc;
pub mod lingmark;
pub mod pipeline;
pub mod report;
pub mod rng;
pub mod ses;
pub mod socionet;
pub mod synth;
pub mod table;

pub use error::{Error, Result};
