//! Spider configurations, admissibility rules and the spider graph.

mod build;
mod config;
mod geometry;
mod rule;

pub use build::{build_spider_network, check_irreducible, config_diameter, ConfigDiameter, Irreducibility, SpiderNetwork};
pub use config::{stretch_index, unstretch, Config};
pub use geometry::{global_position, integer_enumeration, midpoint_height};
pub use rule::{ConfigRule, RuleDocument, SpiderDynamics};
pub(crate) use build::{config_diameter_with, maybe_cut};
pub(crate) use rule::ball_vertices;
