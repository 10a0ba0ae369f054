//! Lumpability, factor chains, stationary laws and exact speeds.

mod factor;
mod keys;
mod lump;

pub use factor::{
    exact_speed, explore_factor_chain, factor_chain, ksk_identity_check, ExploreOptions, FactorChain, FactorDocument,
    Stationary,
};
pub use keys::{confluence_key, pair_key, ConfluenceKey, PairKey};
pub use lump::{lumpability_check, BlockKey, LumpWitness, LumpabilityVerdict, Partition, LUMP_TOLERANCE};
