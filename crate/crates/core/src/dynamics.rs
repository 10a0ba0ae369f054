//! Rate oracles shared by the simulator and the factor-chain explorer.

use std::fmt;
use std::hash::Hash;

use crate::graphs::{FiniteNetwork, Substrate, VertexId};

/// A continuous-time chain given by its outgoing rates, generated on demand.
pub trait Dynamics: Sync {
    type State: Clone + Eq + Hash + fmt::Debug + fmt::Display + Send + Sync;

    /// Outgoing `(target, rate)` pairs; targets are distinct and differ from `s`.
    fn moves(&self, s: &Self::State) -> Vec<(Self::State, f64)>;

    /// An equivalent state under a symmetry of the dynamics, with the
    /// height shift to add back. Keeps long simulations on short addresses.
    fn recenter(&self, _s: &Self::State) -> Option<(Self::State, f64)> {
        None
    }
}

/// A single walker on a substrate.
#[derive(Clone, Copy, Debug)]
pub struct Walk<'a> {
    pub sub: &'a dyn Substrate,
}

impl<'a> Walk<'a> {
    pub fn new(sub: &'a dyn Substrate) -> Self {
        Walk { sub }
    }
}

impl Dynamics for Walk<'_> {
    type State = VertexId;

    fn moves(&self, s: &VertexId) -> Vec<(VertexId, f64)> {
        self.sub.neighbors(s).into_iter().map(|n| (n.vertex, n.forward)).collect()
    }

    fn recenter(&self, s: &VertexId) -> Option<(VertexId, f64)> {
        self.sub.recenter(std::slice::from_ref(s)).map(|(mut v, h)| (v.remove(0), h))
    }
}

impl<L: Clone + Eq + Hash + Sync> Dynamics for FiniteNetwork<L> {
    type State = usize;

    fn moves(&self, s: &usize) -> Vec<(usize, f64)> {
        self.rates(*s).to_vec()
    }
}
