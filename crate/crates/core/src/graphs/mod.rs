//! Graph substrates: lazily generated infinite graphs with transition rates,
//! and their finite truncations.

mod families;
mod network;
mod vertex;

pub use families::{
    generate, DecoratedLine, FamilySpec, LampertiHalfLine, Limits, Line, Neighbor, Offset, ProductZ3Z, RootedTree,
    StarOfSegments, Substrate, TreeGeometry, TreeWithEnd,
};
pub use network::{materialize_ball, FiniteNetwork, NetworkDocument};
pub use vertex::VertexId;
