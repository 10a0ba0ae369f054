use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt::Display;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use super::lump::{aggregate, close, first_difference, BlockKey, LumpWitness, Partition, LUMP_TOLERANCE};
use crate::chain::linalg::SparseMatrix;
use crate::chain::{hitting_times_with, HitMode, JumpChain, Provenance, SpeedReport};
use crate::dynamics::Dynamics;
use crate::error::{Error, Result};
use crate::graphs::FiniteNetwork;

/// Height increments are compared on a grid of this resolution.
const DH_GRID: f64 = (1u64 << 20) as f64;

/// Lumped chain on blocks of a partition.
#[derive(Clone, Debug)]
pub struct FactorChain<K> {
    pub blocks: Vec<K>,
    /// Off-diagonal block rates q~(i, j), sorted by target.
    pub rates: Vec<Vec<(usize, f64)>>,
    /// Rate of moves that stay inside the block.
    pub self_rate: Vec<f64>,
    /// Mean holding time per jump of the underlying chain.
    pub holding: Vec<f64>,
    /// Mean height increment per jump of the underlying chain.
    pub dh: Vec<f64>,
    pub has_height: bool,
    /// States compared per block.
    pub checked: Vec<usize>,
    /// Keys reached from the blocks but with no interior member.
    pub excluded: Vec<K>,
    /// Rate from each block into excluded keys.
    pub leak: Vec<f64>,
}

/// Outgoing behaviour of one representative.
struct Profile<K> {
    label: String,
    by_target: BTreeMap<(K, i64), f64>,
    exit: f64,
    drift: f64,
}

fn profile<K: BlockKey>(label: String, moves: impl IntoIterator<Item = (K, f64, f64)>) -> Profile<K> {
    let moves: Vec<(K, f64, f64)> = moves.into_iter().collect();
    let exit = moves.iter().map(|m| m.1).sum();
    let drift = moves.iter().map(|m| m.1 * m.2).sum();
    let by_target = aggregate(moves.into_iter().map(|(k, r, dh)| ((k, (dh * DH_GRID).round() as i64), r)));
    Profile { label, by_target, exit, drift }
}

fn not_lumpable<K: BlockKey>(block: &K, target: &(K, i64), a: (&str, f64), b: (&str, f64)) -> Error {
    let w = LumpWitness {
        block: block.to_string(),
        target: format!("{} with height step {}", target.0, target.1 as f64 / DH_GRID),
        first: a.0.to_string(),
        second: b.0.to_string(),
        rates: (a.1, b.1),
    };
    Error::NotLumpable(w.to_string())
}

/// Assemble a factor chain from per-block representative profiles, refusing
/// when two representatives of a block disagree.
fn assemble<K: BlockKey>(
    keys: Vec<K>,
    profiles: Vec<Vec<Profile<K>>>,
    has_height: bool,
    tol: f64,
) -> Result<FactorChain<K>> {
    let index: BTreeMap<&K, usize> = keys.iter().enumerate().map(|(i, k)| (k, i)).collect();
    let n = keys.len();
    let mut rates = Vec::with_capacity(n);
    let mut self_rate = Vec::with_capacity(n);
    let mut holding = Vec::with_capacity(n);
    let mut dh = Vec::with_capacity(n);
    let mut checked = Vec::with_capacity(n);
    let mut excluded = BTreeMap::new();
    let mut leak = Vec::with_capacity(n);
    for (b, reps) in profiles.iter().enumerate() {
        let first = &reps[0];
        for other in &reps[1..] {
            if let (Some((t, x, y)), _) = first_difference(&first.by_target, &other.by_target, tol) {
                return Err(not_lumpable(&keys[b], &t, (&first.label, x), (&other.label, y)));
            }
            if !close(first.drift, other.drift, tol) {
                return Err(Error::NotLumpable(format!(
                    "block {}: mean height drift {} at {} but {} at {}",
                    keys[b], first.drift, first.label, other.drift, other.label
                )));
            }
        }
        let mut row: BTreeMap<usize, f64> = BTreeMap::new();
        let mut own = 0.0;
        let mut lost = 0.0;
        for ((k, _), r) in &first.by_target {
            match index.get(k) {
                Some(&j) if j == b => own += r,
                Some(&j) => *row.entry(j).or_insert(0.0) += r,
                None => {
                    lost += r;
                    excluded.insert(k.clone(), ());
                }
            }
        }
        rates.push(row.into_iter().collect());
        self_rate.push(own);
        leak.push(lost);
        if first.exit > 0.0 {
            holding.push(1.0 / first.exit);
            dh.push(first.drift / first.exit);
        } else {
            holding.push(f64::INFINITY);
            dh.push(0.0);
        }
        checked.push(reps.len());
    }
    Ok(FactorChain {
        blocks: keys,
        rates,
        self_rate,
        holding,
        dh,
        has_height,
        checked,
        excluded: excluded.into_keys().collect(),
        leak,
    })
}

/// Factor chain of a finite network. Every interior member of every block
/// is compared, including the distribution of height increments.
pub fn factor_chain<L, K>(
    net: &FiniteNetwork<L>,
    partition: &Partition<K>,
    height: Option<&dyn Fn(&L) -> Result<f64>>,
    tol: f64,
) -> Result<FactorChain<K>>
where
    L: Clone + Eq + Hash + Display,
    K: BlockKey,
{
    if partition.is_empty() {
        return Err(Error::Parameter("partition has no interior blocks".into()));
    }
    let heights: Option<Vec<f64>> = match height {
        Some(h) => Some(net.labels().iter().map(h).collect::<Result<_>>()?),
        None => None,
    };
    let step = |x: usize, y: usize| heights.as_ref().map_or(0.0, |h| h[y] - h[x]);
    let profiles = partition
        .members
        .iter()
        .map(|members| {
            members
                .iter()
                .map(|&x| {
                    let moves = net.rates(x).iter().map(|&(y, r)| (partition.keys[y].clone(), r, step(x, y)));
                    profile(net.label(x).to_string(), moves)
                })
                .collect()
        })
        .collect();
    assemble(partition.blocks.clone(), profiles, heights.is_some(), tol)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExploreOptions {
    /// Representatives expanded per block.
    pub reps_per_block: usize,
    pub max_blocks: usize,
    pub tol: f64,
}

impl Default for ExploreOptions {
    fn default() -> Self {
        ExploreOptions { reps_per_block: 4, max_blocks: 100_000, tol: LUMP_TOLERANCE }
    }
}

/// Factor chain of an infinite chain, discovered breadth-first from `start`.
/// Each block keeps the first `reps_per_block` states reached in it; all of
/// them are expanded and their aggregate behaviour compared.
pub fn explore_factor_chain<D, K>(
    dynamics: &D,
    start: &D::State,
    key: impl Fn(&D::State) -> Result<K>,
    height: Option<&dyn Fn(&D::State) -> Result<f64>>,
    opts: ExploreOptions,
) -> Result<FactorChain<K>>
where
    D: Dynamics,
    K: BlockKey,
{
    if opts.reps_per_block == 0 {
        return Err(Error::Parameter("reps_per_block must be >= 1".into()));
    }
    let mut block_of: HashMap<K, usize> = HashMap::new();
    let mut keys: Vec<K> = Vec::new();
    let mut reps: Vec<usize> = Vec::new();
    let mut profiles: Vec<Vec<Profile<K>>> = Vec::new();
    let mut seen: HashSet<D::State> = HashSet::new();
    let mut queue: VecDeque<(D::State, usize)> = VecDeque::new();

    let mut admit = |state: &D::State,
                     k: K,
                     keys: &mut Vec<K>,
                     reps: &mut Vec<usize>,
                     profiles: &mut Vec<Vec<Profile<K>>>,
                     queue: &mut VecDeque<(D::State, usize)>|
     -> Result<()> {
        let b = match block_of.get(&k) {
            Some(&b) => b,
            None => {
                if keys.len() >= opts.max_blocks {
                    return Err(Error::Size { what: "factor blocks".into(), count: keys.len() + 1, cap: opts.max_blocks });
                }
                block_of.insert(k.clone(), keys.len());
                keys.push(k);
                reps.push(0);
                profiles.push(Vec::new());
                keys.len() - 1
            }
        };
        if reps[b] < opts.reps_per_block && seen.insert(state.clone()) {
            reps[b] += 1;
            queue.push_back((state.clone(), b));
        }
        Ok(())
    };

    admit(start, key(start)?, &mut keys, &mut reps, &mut profiles, &mut queue)?;
    while let Some((x, b)) = queue.pop_front() {
        let hx = height.map(|h| h(&x)).transpose()?;
        let mut moves = Vec::new();
        for (y, r) in dynamics.moves(&x) {
            let ky = key(&y)?;
            let dh = match (height, hx) {
                (Some(h), Some(hx)) => h(&y)? - hx,
                _ => 0.0,
            };
            admit(&y, ky.clone(), &mut keys, &mut reps, &mut profiles, &mut queue)?;
            moves.push((ky, r, dh));
        }
        profiles[b].push(profile(x.to_string(), moves));
    }

    // order blocks by key
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&a, &b| keys[a].cmp(&keys[b]));
    let mut slots: Vec<Option<Vec<Profile<K>>>> = profiles.into_iter().map(Some).collect();
    let sorted_keys = order.iter().map(|&i| keys[i].clone()).collect();
    let sorted_profiles = order.iter().map(|&i| slots[i].take().expect("each block once")).collect();
    assemble(sorted_keys, sorted_profiles, height.is_some(), opts.tol)
}

/// Stationary laws of a factor chain.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Stationary {
    /// Left null vector of the block generator.
    pub continuous: Vec<f64>,
    /// Stationary law of the underlying jump chain projected on blocks.
    pub jump: Vec<f64>,
    /// max_j |(Pi q~)_j| for the continuous law.
    pub residual: f64,
}

impl<K: BlockKey> FactorChain<K> {
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn index_of(&self, key: &K) -> Option<usize> {
        self.blocks.iter().position(|k| k == key)
    }

    pub fn rate(&self, i: usize, j: usize) -> f64 {
        self.rates[i].iter().find(|e| e.0 == j).map_or(0.0, |e| e.1)
    }

    pub fn exit_rate(&self, i: usize) -> f64 {
        self.rates[i].iter().map(|e| e.1).sum::<f64>() + self.self_rate[i]
    }

    fn check_closed(&self) -> Result<()> {
        if let Some(b) = self.leak.iter().position(|&l| l > 0.0) {
            return Err(Error::Truncation(format!(
                "block {} leaks rate {} into blocks without interior members: {:?}",
                self.blocks[b],
                self.leak[b],
                self.excluded.iter().map(|k| k.to_string()).collect::<Vec<_>>()
            )));
        }
        Ok(())
    }

    /// Connected components of the block graph (support is symmetric).
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.len();
        let mut undirected = vec![Vec::new(); n];
        for i in 0..n {
            for &(j, _) in &self.rates[i] {
                undirected[i].push(j);
                undirected[j].push(i);
            }
        }
        let mut comp = vec![usize::MAX; n];
        let mut out = Vec::new();
        for s in 0..n {
            if comp[s] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut members = vec![s];
            comp[s] = id;
            let mut head = 0;
            while head < members.len() {
                let x = members[head];
                head += 1;
                for &y in &undirected[x] {
                    if comp[y] == usize::MAX {
                        comp[y] = id;
                        members.push(y);
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }

    /// Solve Pi q~ = 0, sum Pi = 1 with one coordinate grounded.
    pub fn stationary(&self) -> Result<Stationary> {
        if self.is_empty() {
            return Err(Error::Parameter("empty factor chain".into()));
        }
        self.check_closed()?;
        let comps = self.components();
        if comps.len() > 1 {
            return Err(Error::Reducible(
                comps.iter().map(|c| c.iter().map(|&i| self.blocks[i].to_string()).collect()).collect(),
            ));
        }
        let n = self.len();
        let out: Vec<f64> = (0..n).map(|i| self.rates[i].iter().map(|e| e.1).sum()).collect();
        let mut pi = vec![1.0; n];
        if n > 1 {
            let mut rows: Vec<Vec<(usize, f64)>> = (1..n).map(|j| vec![(j - 1, -out[j])]).collect();
            let mut rhs = vec![0.0; n - 1];
            for i in 0..n {
                for &(j, q) in &self.rates[i] {
                    if j == 0 {
                        continue;
                    }
                    if i == 0 {
                        rhs[j - 1] -= q;
                    } else {
                        rows[j - 1].push((i - 1, q));
                    }
                }
            }
            let sol = SparseMatrix::from_rows(rows).solve_direct(&[rhs])?.remove(0);
            pi[1..].copy_from_slice(&sol);
        }
        let total: f64 = pi.iter().sum();
        pi.iter_mut().for_each(|p| *p /= total);
        let mut flow = vec![0.0; n];
        for i in 0..n {
            flow[i] -= pi[i] * out[i];
            for &(j, q) in &self.rates[i] {
                flow[j] += pi[i] * q;
            }
        }
        let residual = flow.iter().fold(0.0f64, |m, f| m.max(f.abs()));
        if pi.iter().any(|p| *p < -1e-12) || !(residual < 1e-10) {
            return Err(Error::Singular(format!("stationary solve residual {residual:e}")));
        }
        let weights: Vec<f64> = (0..n).map(|i| pi[i].max(0.0) * self.exit_rate(i)).collect();
        let wsum: f64 = weights.iter().sum();
        let jump = if wsum > 0.0 { weights.iter().map(|w| w / wsum).collect() } else { pi.clone() };
        Ok(Stationary { continuous: pi, jump, residual })
    }

    /// Block chain as a network (off-diagonal rates only).
    pub fn to_network(&self) -> Result<FiniteNetwork<String>> {
        let labels = self.blocks.iter().map(|k| k.to_string()).collect();
        FiniteNetwork::from_rows(labels, 0, self.rates.clone(), vec![false; self.len()])
    }

    /// Projected jump chain of the underlying walk, self-loops included.
    pub fn jump_chain(&self) -> JumpChain {
        let n = self.len();
        let mut exit = Vec::with_capacity(n);
        let mut probs = Vec::with_capacity(n);
        let mut holding = Vec::with_capacity(n);
        for i in 0..n {
            let e = self.exit_rate(i);
            let mut row: Vec<(usize, f64)> = self.rates[i].iter().map(|&(j, q)| (j, q / e)).collect();
            if self.self_rate[i] > 0.0 {
                row.push((i, self.self_rate[i] / e));
            }
            exit.push(e);
            probs.push(row);
            holding.push(self.holding[i]);
        }
        JumpChain { exit, probs, holding }
    }

    pub fn to_document(&self, st: &Stationary) -> FactorDocument {
        let mut rates = Vec::new();
        for (i, row) in self.rates.iter().enumerate() {
            for &(j, q) in row {
                rates.push((i, j, q));
            }
        }
        FactorDocument {
            blocks: self.blocks.iter().map(|k| k.to_string()).collect(),
            rates,
            pi: st.jump.clone(),
            pi_continuous: st.continuous.clone(),
            holding: self.holding.clone(),
            dh: self.dh.clone(),
        }
    }
}

/// JSON form of a solved factor chain. `pi` is the jump-chain law used for
/// the drift and holding averages.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorDocument {
    pub blocks: Vec<String>,
    pub rates: Vec<(usize, usize, f64)>,
    pub pi: Vec<f64>,
    pub pi_continuous: Vec<f64>,
    pub holding: Vec<f64>,
    #[serde(rename = "dH")]
    pub dh: Vec<f64>,
}

/// V = D / T with D = sum Pi dh and T = sum Pi holding under the projected
/// jump-chain law. A chain with no moves at all has speed 0.
pub fn exact_speed<K: BlockKey>(fc: &FactorChain<K>, label: &str) -> Result<SpeedReport> {
    if !fc.has_height {
        return Err(Error::Height("factor chain was built without a height functional".into()));
    }
    let report = |speed, drift, holding| SpeedReport {
        label: label.to_string(),
        provenance: Provenance::Exact,
        speed,
        stderr: None,
        drift,
        holding,
        replicas: 0,
        n_jumps: 0,
        seed: None,
    };
    if (0..fc.len()).all(|i| fc.exit_rate(i) == 0.0) {
        return Ok(report(0.0, Some(0.0), None));
    }
    let st = fc.stationary()?;
    let d: f64 = st.jump.iter().zip(&fc.dh).map(|(p, h)| p * h).sum();
    let t: f64 = st.jump.iter().zip(&fc.holding).map(|(p, h)| p * h).sum();
    Ok(report(d / t, Some(d), Some(t)))
}

/// |sum_{i in B} Pi(i) m_{i,B} - 1| with return times in the projected
/// jump chain.
pub fn ksk_identity_check<K: BlockKey>(fc: &FactorChain<K>, st: &Stationary, target: &[usize]) -> Result<f64> {
    let net = fc.to_network()?;
    let jc = fc.jump_chain();
    let report = hitting_times_with(&net, &jc, target, HitMode::Return)?;
    let sum: f64 = target.iter().map(|&b| st.jump[b] * report.steps[b]).sum();
    Ok((sum - 1.0).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{Limits, Line, Substrate, VertexId};
    use crate::spider::{build_spider_network, Config, ConfigRule, SpiderDynamics};

    fn line_factor(p: f64, q: f64, s: u64) -> FactorChain<u64> {
        let line = Line::new(p, q).unwrap();
        let rule = ConfigRule::bounded_span_left(2, s).unwrap();
        let d = SpiderDynamics::new(&line, &rule);
        let h = |c: &Config| Ok(c.leg(0).as_int().unwrap() as f64);
        explore_factor_chain(&d, &Config::from_ints(&[0, 1]).unwrap(), |c| Ok(c.span(&line)), Some(&h), ExploreOptions::default())
            .unwrap()
    }

    #[test]
    fn line_spider_three_states() {
        let fc = line_factor(0.7, 0.3, 3);
        assert_eq!(fc.blocks, vec![1, 2, 3]);
        let st = fc.stationary().unwrap();
        for (a, b) in st.jump.iter().zip([0.25, 0.5, 0.25]) {
            assert!((a - b).abs() < 1e-15);
        }
        let v = exact_speed(&fc, "line").unwrap();
        assert!((v.speed - 0.4 * (2.0 / 3.0)).abs() < 1e-14);
        assert!(ksk_identity_check(&fc, &st, &[0]).unwrap() < 1e-12);
        assert!(ksk_identity_check(&fc, &st, &[0, 1, 2]).unwrap() < 1e-15);
    }

    #[test]
    fn finite_and_lazy_agree() {
        let line = Line::new(0.6, 0.9).unwrap();
        let rule = ConfigRule::bounded_span_left(2, 4).unwrap();
        let spn = build_spider_network(&line, &rule, &Config::from_ints(&[0, 1]).unwrap(), 16, &Limits::default())
            .unwrap();
        let part = Partition::from_key(&spn.net, |c: &Config| c.span(&line));
        let h = |c: &Config| Ok(line.height(c.leg(0)).unwrap());
        let finite = factor_chain(&spn.net, &part, Some(&h), LUMP_TOLERANCE).unwrap();
        let lazy = line_factor(0.6, 0.9, 4);
        assert_eq!(finite.blocks, lazy.blocks);
        assert_eq!(finite.rates, lazy.rates);
        assert_eq!(finite.dh, lazy.dh);
        assert!(finite.checked.iter().all(|&c| c > 4));
    }

    #[test]
    fn single_block_partition() {
        let line = Line::new(0.5, 0.5).unwrap();
        let net = crate::graphs::materialize_ball(&line, &VertexId::Int(0), 4, &Limits::default()).unwrap();
        let part = Partition::from_key(&net, |_: &VertexId| 0u8);
        // boundary states share the key, so nothing leaks
        let fc = factor_chain(&net, &part, None, LUMP_TOLERANCE).unwrap();
        assert_eq!(fc.stationary().unwrap().jump, vec![1.0]);
        assert!(matches!(exact_speed(&fc, "x"), Err(Error::Height(_))));
    }

    #[test]
    fn symmetric_two_state() {
        let fc = FactorChain {
            blocks: vec!['a', 'b'],
            rates: vec![vec![(1, 2.0)], vec![(0, 2.0)]],
            self_rate: vec![0.0, 0.0],
            holding: vec![0.5, 0.5],
            dh: vec![0.0, 0.0],
            has_height: true,
            checked: vec![1, 1],
            excluded: vec![],
            leak: vec![0.0, 0.0],
        };
        assert_eq!(fc.stationary().unwrap().continuous, vec![0.5, 0.5]);
    }

    #[test]
    fn reducible_reported() {
        let fc = FactorChain {
            blocks: vec![0u8, 1, 2],
            rates: vec![vec![(1, 1.0)], vec![(0, 1.0)], vec![]],
            self_rate: vec![0.0, 0.0, 1.0],
            holding: vec![1.0; 3],
            dh: vec![0.0; 3],
            has_height: true,
            checked: vec![1; 3],
            excluded: vec![],
            leak: vec![0.0; 3],
        };
        match fc.stationary() {
            Err(Error::Reducible(c)) => assert_eq!(c, vec![vec!["0".to_string(), "1".to_string()], vec!["2".to_string()]]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn frozen_spider_has_zero_speed() {
        let line = Line::new(0.7, 0.3).unwrap();
        let rule = ConfigRule::bounded_span_left(2, 1).unwrap();
        let d = SpiderDynamics::new(&line, &rule);
        let h = |c: &Config| Ok(c.leg(0).as_int().unwrap() as f64);
        let fc = explore_factor_chain(&d, &Config::from_ints(&[0, 1]).unwrap(), |c| Ok(c.span(&line)), Some(&h), ExploreOptions::default())
            .unwrap();
        assert_eq!(fc.len(), 1);
        assert_eq!(exact_speed(&fc, "frozen").unwrap().speed, 0.0);
    }

    #[test]
    fn json_document() {
        let fc = line_factor(0.7, 0.3, 3);
        let st = fc.stationary().unwrap();
        let doc = fc.to_document(&st);
        let text = serde_json::to_string(&doc).unwrap();
        assert!(text.contains("\"dH\""));
        let back: FactorDocument = serde_json::from_str(&text).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.blocks, vec!["1", "2", "3"]);
    }
}
