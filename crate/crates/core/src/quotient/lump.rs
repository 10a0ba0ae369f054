use std::collections::BTreeMap;
use std::fmt::{Debug, Display};
use std::hash::Hash;

use rayon::prelude::*;
use serde::Serialize;

use crate::graphs::FiniteNetwork;

/// Default tolerance for comparing aggregate rates.
pub const LUMP_TOLERANCE: f64 = 1e-12;

/// Bounds shared by all block keys.
pub trait BlockKey: Clone + Ord + Hash + Display + Debug + Send + Sync {}
impl<T: Clone + Ord + Hash + Display + Debug + Send + Sync> BlockKey for T {}

/// Interior states grouped by key. Boundary states carry keys too, so rates
/// into them can be aggregated, but only keys with an interior member form
/// blocks.
#[derive(Clone, Debug)]
pub struct Partition<K> {
    pub blocks: Vec<K>,
    /// Interior members per block, in network order.
    pub members: Vec<Vec<usize>>,
    /// Key of every network state.
    pub keys: Vec<K>,
}

impl<K: BlockKey> Partition<K> {
    pub fn from_key<L: Clone + Eq + Hash>(net: &FiniteNetwork<L>, key: impl Fn(&L) -> K) -> Self {
        let keys: Vec<K> = net.labels().iter().map(key).collect();
        let mut by_key: BTreeMap<K, Vec<usize>> = BTreeMap::new();
        for i in net.interior() {
            by_key.entry(keys[i].clone()).or_default().push(i);
        }
        let (blocks, members) = by_key.into_iter().unzip();
        Partition { blocks, members, keys }
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn representative(&self, block: usize) -> usize {
        self.members[block][0]
    }

    pub fn block_index(&self, key: &K) -> Option<usize> {
        self.blocks.binary_search(key).ok()
    }
}

/// Two members of `block` whose aggregate rates into `target` differ.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LumpWitness {
    pub block: String,
    pub target: String,
    pub first: String,
    pub second: String,
    pub rates: (f64, f64),
}

impl Display for LumpWitness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "block {}: {} and {} send rate {} and {} into {}",
            self.block, self.first, self.second, self.rates.0, self.rates.1, self.target
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LumpabilityVerdict {
    pub lumpable: bool,
    pub witness: Option<LumpWitness>,
    pub blocks: usize,
    pub states_checked: usize,
    /// Largest deviation of an aggregate rate from the block's first member.
    pub max_deviation: f64,
}

/// Aggregate outgoing rate per target label, over a state's moves.
pub(crate) fn aggregate<T: Ord + Clone>(moves: impl IntoIterator<Item = (T, f64)>) -> BTreeMap<T, f64> {
    let mut out = BTreeMap::new();
    for (t, r) in moves {
        *out.entry(t).or_insert(0.0) += r;
    }
    out
}

pub(crate) fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * 1f64.max(a.abs()).max(b.abs())
}

/// First target on which two aggregate maps disagree.
pub(crate) fn first_difference<T: Ord + Clone>(
    a: &BTreeMap<T, f64>,
    b: &BTreeMap<T, f64>,
    tol: f64,
) -> (Option<(T, f64, f64)>, f64) {
    let mut worst = 0.0f64;
    let mut found = None;
    for t in a.keys().chain(b.keys()) {
        let (x, y) = (a.get(t).copied().unwrap_or(0.0), b.get(t).copied().unwrap_or(0.0));
        worst = worst.max((x - y).abs());
        if found.is_none() && !close(x, y, tol) {
            found = Some((t.clone(), x, y));
        }
    }
    (found, worst)
}

/// Strong lumpability: every interior member of a block sends the same
/// total rate into each other block.
pub fn lumpability_check<L, K>(net: &FiniteNetwork<L>, partition: &Partition<K>, tol: f64) -> LumpabilityVerdict
where
    L: Clone + Eq + Hash + Display + Sync,
    K: BlockKey,
{
    let profile = |x: usize| {
        let own = &partition.keys[x];
        aggregate(net.rates(x).iter().filter(|&&(y, _)| partition.keys[y] != *own).map(|&(y, r)| (partition.keys[y].clone(), r)))
    };
    let results: Vec<(Option<LumpWitness>, f64)> = (0..partition.len())
        .into_par_iter()
        .map(|b| {
            let members = &partition.members[b];
            let first = profile(members[0]);
            let mut worst = 0.0f64;
            for &x in &members[1..] {
                let (diff, dev) = first_difference(&first, &profile(x), tol);
                worst = worst.max(dev);
                if let Some((target, r1, r2)) = diff {
                    let w = LumpWitness {
                        block: partition.blocks[b].to_string(),
                        target: target.to_string(),
                        first: net.label(members[0]).to_string(),
                        second: net.label(x).to_string(),
                        rates: (r1, r2),
                    };
                    return (Some(w), worst);
                }
            }
            (None, worst)
        })
        .collect();
    let max_deviation = results.iter().map(|r| r.1).fold(0.0, f64::max);
    let witness = results.into_iter().find_map(|r| r.0);
    LumpabilityVerdict {
        lumpable: witness.is_none(),
        witness,
        blocks: partition.len(),
        states_checked: partition.members.iter().map(Vec::len).sum(),
        max_deviation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{Limits, Line, Substrate, TreeWithEnd};
    use crate::spider::{build_spider_network, Config, ConfigRule};

    #[test]
    fn line_span_is_lumpable() {
        let line = Line::new(0.7, 0.3).unwrap();
        let rule = ConfigRule::bounded_span_left(2, 4).unwrap();
        let spn = build_spider_network(&line, &rule, &Config::from_ints(&[0, 1]).unwrap(), 20, &Limits::default())
            .unwrap();
        let part = Partition::from_key(&spn.net, |c: &Config| c.span(&line));
        assert_eq!(part.blocks, vec![1, 2, 3, 4]);
        let v = lumpability_check(&spn.net, &part, LUMP_TOLERANCE);
        assert!(v.lumpable, "{:?}", v.witness);
    }

    #[test]
    fn single_block_is_trivially_lumpable() {
        let line = Line::new(0.7, 0.3).unwrap();
        let rule = ConfigRule::bounded_span_left(2, 3).unwrap();
        let spn = build_spider_network(&line, &rule, &Config::from_ints(&[0, 1]).unwrap(), 10, &Limits::default())
            .unwrap();
        let part = Partition::from_key(&spn.net, |_: &Config| 0u8);
        assert!(lumpability_check(&spn.net, &part, LUMP_TOLERANCE).lumpable);
    }

    #[test]
    fn leg_parity_on_biased_tree_is_not_lumpable() {
        let t = TreeWithEnd::with_bias(3, 0.3).unwrap();
        let rule = ConfigRule::bounded_span(2, 3).unwrap();
        let start = Config::new(vec![t.root(), t.father(&t.root()).unwrap()]).unwrap();
        let spn = build_spider_network(&t, &rule, &start, 7, &Limits::default()).unwrap();
        let part = Partition::from_key(&spn.net, |c: &Config| {
            let crate::graphs::VertexId::End { up, word } = c.leg(0) else { unreachable!() };
            (word.len() as i64 - *up as i64).rem_euclid(2)
        });
        let v = lumpability_check(&spn.net, &part, LUMP_TOLERANCE);
        assert!(!v.lumpable);
        let w = v.witness.unwrap();
        assert_ne!(w.rates.0, w.rates.1);
        assert_ne!(w.first, w.second);
    }
}
