use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::vertex::VertexId;
use crate::error::{Error, Result};

/// One entry of a neighbour oracle: the neighbour and the rates of the edge
/// in both directions.
#[derive(Clone, Debug, PartialEq)]
pub struct Neighbor {
    pub vertex: VertexId,
    /// q(x, vertex)
    pub forward: f64,
    /// q(vertex, x)
    pub backward: f64,
}

impl Neighbor {
    fn new(vertex: VertexId, forward: f64, backward: f64) -> Self {
        Neighbor { vertex, forward, backward }
    }
}

/// Translation offset used by explicit configuration tables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Offset {
    Int(i64),
    Pair(i64, i64),
}

/// Geometry of tree substrates: where the geodesic between two vertices turns.
pub trait TreeGeometry {
    /// Steps from `a` and from `b` up to their confluent (the turning vertex
    /// of the geodesic).
    fn confluence(&self, a: &VertexId, b: &VertexId) -> (u64, u64);
}

/// A lazily generated graph with transition rates.
///
/// The oracle must be deterministic and reentrant: the same vertex always
/// yields the same neighbour list in the same order.
pub trait Substrate: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;
    fn root(&self) -> VertexId;
    fn contains(&self, v: &VertexId) -> bool;
    fn neighbors(&self, v: &VertexId) -> Vec<Neighbor>;
    fn max_degree(&self) -> usize;
    /// Graph distance.
    fn distance(&self, a: &VertexId, b: &VertexId) -> u64;

    fn height(&self, _v: &VertexId) -> Option<f64> {
        None
    }

    fn tree(&self) -> Option<&dyn TreeGeometry> {
        None
    }

    /// Translate `base` by `offset`, for families with a translation action.
    fn offset(&self, _base: &VertexId, _offset: Offset) -> Option<VertexId> {
        None
    }

    /// Image of `legs` under a rate-preserving automorphism that brings
    /// them near the root, with the height lost on the way.
    fn recenter(&self, _legs: &[VertexId]) -> Option<(Vec<VertexId>, f64)> {
        None
    }
}

/// Explicit size limits for materialization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Limits {
    pub max_degree: usize,
    pub max_vertices: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_degree: 64, max_vertices: 5_000_000 }
    }
}

/// Serializable description of a substrate family and its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    /// ℤ with q(x,x+1)=p, q(x,x-1)=q.
    Line { p: f64, q: f64 },
    /// ℕ with mean drift c/(2x); c=1 recurrent, c=-1 null recurrent.
    LampertiHalfline { c: f64 },
    /// Homogeneous tree of degree m, simple random walk with unit rates.
    RootedTree { m: usize },
    /// Tree with a distinguished end. With `a`: rate 1-a to the father and
    /// a/(m-1) to each son. Without `a`: unit rates (simple random walk).
    TreeWithEnd {
        m: usize,
        #[serde(default)]
        a: Option<f64>,
    },
    /// ℤ₃ × ℤ with unit rates.
    ProductZ3Z,
    /// ℤ with a pendant vertex attached at every power of two.
    DecoratedLine,
    /// Segments [0..N], N = 1..=n_max, glued at 0.
    StarOfSegments { n_max: u32, p: f64 },
}

impl FamilySpec {
    pub fn name(&self) -> &'static str {
        match self {
            FamilySpec::Line { .. } => "line",
            FamilySpec::LampertiHalfline { .. } => "lamperti_halfline",
            FamilySpec::RootedTree { .. } => "rooted_tree",
            FamilySpec::TreeWithEnd { .. } => "tree_with_end",
            FamilySpec::ProductZ3Z => "product_z3_z",
            FamilySpec::DecoratedLine => "decorated_line",
            FamilySpec::StarOfSegments { .. } => "star_of_segments",
        }
    }
}

/// Build the substrate described by `spec`, enforcing `limits.max_degree`.
pub fn generate(spec: &FamilySpec, limits: &Limits) -> Result<Arc<dyn Substrate>> {
    let sub: Arc<dyn Substrate> = match *spec {
        FamilySpec::Line { p, q } => Arc::new(Line::new(p, q)?),
        FamilySpec::LampertiHalfline { c } => Arc::new(LampertiHalfLine::with_drift_coefficient(c)?),
        FamilySpec::RootedTree { m } => Arc::new(RootedTree::new(m)?),
        FamilySpec::TreeWithEnd { m, a: Some(a) } => Arc::new(TreeWithEnd::with_bias(m, a)?),
        FamilySpec::TreeWithEnd { m, a: None } => Arc::new(TreeWithEnd::simple(m)?),
        FamilySpec::ProductZ3Z => Arc::new(ProductZ3Z),
        FamilySpec::DecoratedLine => Arc::new(DecoratedLine),
        FamilySpec::StarOfSegments { n_max, p } => Arc::new(StarOfSegments::new(n_max, p)?),
    };
    if sub.max_degree() > limits.max_degree {
        return Err(Error::Size {
            what: format!("degree of {}", sub.name()),
            count: sub.max_degree(),
            cap: limits.max_degree,
        });
    }
    Ok(sub)
}

fn check_rate(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{name} must be positive and finite, got {v}")))
    }
}

fn check_tree_degree(m: usize) -> Result<()> {
    if m < 3 {
        return Err(Error::Parameter(format!("tree degree must be >= 3, got {m}")));
    }
    if m > u8::MAX as usize {
        return Err(Error::Parameter(format!("tree degree {m} too large")));
    }
    Ok(())
}

// ---------------------------------------------------------------------------

/// Nearest-neighbour walk on ℤ.
#[derive(Clone, Debug)]
pub struct Line {
    pub p: f64,
    pub q: f64,
}

impl Line {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        check_rate("p", p)?;
        check_rate("q", q)?;
        Ok(Line { p, q })
    }
}

impl Substrate for Line {
    fn name(&self) -> &'static str {
        "line"
    }
    fn root(&self) -> VertexId {
        VertexId::Int(0)
    }
    fn contains(&self, v: &VertexId) -> bool {
        matches!(v, VertexId::Int(_))
    }
    fn neighbors(&self, v: &VertexId) -> Vec<Neighbor> {
        let Some(x) = v.as_int() else { return Vec::new() };
        vec![
            Neighbor::new(VertexId::Int(x + 1), self.p, self.q),
            Neighbor::new(VertexId::Int(x - 1), self.q, self.p),
        ]
    }
    fn max_degree(&self) -> usize {
        2
    }
    fn distance(&self, a: &VertexId, b: &VertexId) -> u64 {
        int_distance(a, b)
    }
    fn height(&self, v: &VertexId) -> Option<f64> {
        v.as_int().map(|x| x as f64)
    }
    fn offset(&self, base: &VertexId, offset: Offset) -> Option<VertexId> {
        match offset {
            Offset::Int(d) => base.as_int().map(|x| VertexId::Int(x + d)),
            Offset::Pair(..) => None,
        }
    }
}

fn int_distance(a: &VertexId, b: &VertexId) -> u64 {
    match (a, b) {
        (VertexId::Int(x), VertexId::Int(y)) => x.abs_diff(*y),
        _ => u64::MAX,
    }
}

// ---------------------------------------------------------------------------

type RateFn = Arc<dyn Fn(u64) -> f64 + Send + Sync>;

/// Nearest-neighbour walk on {0, 1, 2, ...} with q(0,1)=1 and
/// q(x,x+1)=f(x), q(x,x-1)=1-f(x) for x >= 1.
#[derive(Clone)]
pub struct LampertiHalfLine {
    forward: RateFn,
    label: String,
}

impl fmt::Debug for LampertiHalfLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LampertiHalfLine").field("label", &self.label).finish()
    }
}

impl LampertiHalfLine {
    /// Drift c/(2x), i.e. f(x) = (2x + c)/(4x). Requires |c| < 2.
    pub fn with_drift_coefficient(c: f64) -> Result<Self> {
        if !(c.is_finite() && c.abs() < 2.0) {
            return Err(Error::Parameter(format!("drift coefficient must satisfy |c| < 2, got {c}")));
        }
        Ok(LampertiHalfLine {
            forward: Arc::new(move |x| (2.0 * x as f64 + c) / (4.0 * x as f64)),
            label: format!("drift {c}/(2x)"),
        })
    }

    /// Arbitrary forward-rate function; values must lie in (0,1) for x >= 1.
    pub fn with_rate_fn(label: impl Into<String>, f: impl Fn(u64) -> f64 + Send + Sync + 'static) -> Self {
        LampertiHalfLine { forward: Arc::new(f), label: label.into() }
    }

    /// q(x, x+1).
    pub fn forward_rate(&self, x: u64) -> f64 {
        if x == 0 {
            1.0
        } else {
            (self.forward)(x)
        }
    }

    /// q(x, x-1); zero at the origin.
    pub fn backward_rate(&self, x: u64) -> f64 {
        if x == 0 {
            0.0
        } else {
            1.0 - (self.forward)(x)
        }
    }
}

impl Substrate for LampertiHalfLine {
    fn name(&self) -> &'static str {
        "lamperti_halfline"
    }
    fn root(&self) -> VertexId {
        VertexId::Int(0)
    }
    fn contains(&self, v: &VertexId) -> bool {
        matches!(v, VertexId::Int(x) if *x >= 0)
    }
    fn neighbors(&self, v: &VertexId) -> Vec<Neighbor> {
        let Some(x) = v.as_int().filter(|x| *x >= 0) else { return Vec::new() };
        let ux = x as u64;
        let mut out = vec![Neighbor::new(
            VertexId::Int(x + 1),
            self.forward_rate(ux),
            self.backward_rate(ux + 1),
        )];
        if x > 0 {
            out.push(Neighbor::new(
                VertexId::Int(x - 1),
                self.backward_rate(ux),
                self.forward_rate(ux - 1),
            ));
        }
        out
    }
    fn max_degree(&self) -> usize {
        2
    }
    fn distance(&self, a: &VertexId, b: &VertexId) -> u64 {
        int_distance(a, b)
    }
    fn height(&self, v: &VertexId) -> Option<f64> {
        v.as_int().map(|x| x as f64)
    }
    fn offset(&self, base: &VertexId, offset: Offset) -> Option<VertexId> {
        match offset {
            Offset::Int(d) => base.as_int().map(|x| x + d).filter(|y| *y >= 0).map(VertexId::Int),
            Offset::Pair(..) => None,
        }
    }
}

// ---------------------------------------------------------------------------

/// Homogeneous tree of degree `m` seen from a root: the root has `m`
/// children, every other vertex `m - 1`. Unit rates.
#[derive(Clone, Debug)]
pub struct RootedTree {
    pub m: usize,
}

impl RootedTree {
    pub fn new(m: usize) -> Result<Self> {
        check_tree_degree(m)?;
        Ok(RootedTree { m })
    }
}

fn common_prefix(a: &[u8], b: &[u8]) -> usize {
    a.iter().zip(b).take_while(|(x, y)| x == y).count()
}

impl Substrate for RootedTree {
    fn name(&self) -> &'static str {
        "rooted_tree"
    }
    fn root(&self) -> VertexId {
        VertexId::Rooted(Vec::new())
    }
    fn contains(&self, v: &VertexId) -> bool {
        match v {
            VertexId::Rooted(w) => w.iter().enumerate().all(|(i, &c)| {
                let arity = if i == 0 { self.m } else { self.m - 1 };
                (c as usize) < arity
            }),
            _ => false,
        }
    }
    fn neighbors(&self, v: &VertexId) -> Vec<Neighbor> {
        let VertexId::Rooted(w) = v else { return Vec::new() };
        let mut out = Vec::with_capacity(self.m);
        if !w.is_empty() {
            out.push(Neighbor::new(VertexId::Rooted(w[..w.len() - 1].to_vec()), 1.0, 1.0));
        }
        let arity = if w.is_empty() { self.m } else { self.m - 1 };
        for c in 0..arity {
            let mut child = w.clone();
            child.push(c as u8);
            out.push(Neighbor::new(VertexId::Rooted(child), 1.0, 1.0));
        }
        out
    }
    fn max_degree(&self) -> usize {
        self.m
    }
    fn distance(&self, a: &VertexId, b: &VertexId) -> u64 {
        match (a, b) {
            (VertexId::Rooted(x), VertexId::Rooted(y)) => {
                let p = common_prefix(x, y);
                (x.len() + y.len() - 2 * p) as u64
            }
            _ => u64::MAX,
        }
    }
    fn height(&self, v: &VertexId) -> Option<f64> {
        match v {
            VertexId::Rooted(w) => Some(w.len() as f64),
            _ => None,
        }
    }
    fn tree(&self) -> Option<&dyn TreeGeometry> {
        Some(self)
    }
}

impl TreeGeometry for RootedTree {
    fn confluence(&self, a: &VertexId, b: &VertexId) -> (u64, u64) {
        match (a, b) {
            (VertexId::Rooted(x), VertexId::Rooted(y)) => {
                let p = common_prefix(x, y);
                ((x.len() - p) as u64, (y.len() - p) as u64)
            }
            _ => (u64::MAX, u64::MAX),
        }
    }
}

// ---------------------------------------------------------------------------

/// Homogeneous tree of degree `m` organised by horocycles with respect to a
/// distinguished end ω. Every vertex has one father (toward ω) and `m - 1`
/// sons; the height h(x) = d(x, x⋏o) - d(o, x⋏o) increases toward the sons.
#[derive(Clone, Debug)]
pub struct TreeWithEnd {
    pub m: usize,
    /// Rate to the father.
    pub father_rate: f64,
    /// Rate to each son.
    pub son_rate: f64,
}

impl TreeWithEnd {
    /// p(x, x⁻) = 1 - a, p(x⁻, x) = a/(m-1).
    pub fn with_bias(m: usize, a: f64) -> Result<Self> {
        check_tree_degree(m)?;
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::Parameter(format!("bias a must lie in (0,1), got {a}")));
        }
        Ok(TreeWithEnd { m, father_rate: 1.0 - a, son_rate: a / (m - 1) as f64 })
    }

    /// Simple random walk: unit rate on every edge.
    pub fn simple(m: usize) -> Result<Self> {
        check_tree_degree(m)?;
        Ok(TreeWithEnd { m, father_rate: 1.0, son_rate: 1.0 })
    }

    pub fn with_rates(m: usize, father_rate: f64, son_rate: f64) -> Result<Self> {
        check_tree_degree(m)?;
        check_rate("father rate", father_rate)?;
        check_rate("son rate", son_rate)?;
        Ok(TreeWithEnd { m, father_rate, son_rate })
    }

    pub fn father(&self, v: &VertexId) -> Option<VertexId> {
        let VertexId::End { up, word } = v else { return None };
        Some(if word.is_empty() {
            VertexId::End { up: up + 1, word: Vec::new() }
        } else {
            VertexId::End { up: *up, word: word[..word.len() - 1].to_vec() }
        })
    }

    pub fn sons(&self, v: &VertexId) -> Vec<VertexId> {
        let VertexId::End { up, word } = v else { return Vec::new() };
        (0..self.m - 1)
            .map(|c| {
                if word.is_empty() && *up > 0 && c == 0 {
                    VertexId::End { up: up - 1, word: Vec::new() }
                } else {
                    let mut w = word.clone();
                    w.push(c as u8);
                    VertexId::End { up: *up, word: w }
                }
            })
            .collect()
    }

    /// Confluent with respect to ω: steps up from each vertex.
    fn meet(a: &VertexId, b: &VertexId) -> Option<(u64, u64)> {
        let (VertexId::End { up: ua, word: wa }, VertexId::End { up: ub, word: wb }) = (a, b) else {
            return None;
        };
        let (ua, ub) = (*ua as u64, *ub as u64);
        let (la, lb) = (wa.len() as u64, wb.len() as u64);
        Some(if ua == ub {
            let p = common_prefix(wa, wb) as u64;
            (la - p, lb - p)
        } else if ua > ub {
            // b lies below branch 0 of a's ancestor level; a's word starts
            // with a nonzero letter (or is empty), so the prefixes split at once.
            (la, lb + (ua - ub))
        } else {
            (la + (ub - ua), lb)
        })
    }
}

impl Substrate for TreeWithEnd {
    fn name(&self) -> &'static str {
        "tree_with_end"
    }
    fn root(&self) -> VertexId {
        VertexId::End { up: 0, word: Vec::new() }
    }
    fn contains(&self, v: &VertexId) -> bool {
        match v {
            VertexId::End { up, word } => {
                word.iter().all(|&c| (c as usize) < self.m - 1) && !(*up > 0 && word.first() == Some(&0))
            }
            _ => false,
        }
    }
    fn neighbors(&self, v: &VertexId) -> Vec<Neighbor> {
        let Some(father) = self.father(v) else { return Vec::new() };
        let mut out = Vec::with_capacity(self.m);
        out.push(Neighbor::new(father, self.father_rate, self.son_rate));
        for son in self.sons(v) {
            out.push(Neighbor::new(son, self.son_rate, self.father_rate));
        }
        out
    }
    fn max_degree(&self) -> usize {
        self.m
    }
    fn distance(&self, a: &VertexId, b: &VertexId) -> u64 {
        Self::meet(a, b).map_or(u64::MAX, |(i, j)| i + j)
    }
    fn height(&self, v: &VertexId) -> Option<f64> {
        match v {
            VertexId::End { up, word } => Some(word.len() as f64 - *up as f64),
            _ => None,
        }
    }
    fn tree(&self) -> Option<&dyn TreeGeometry> {
        Some(self)
    }
    fn recenter(&self, legs: &[VertexId]) -> Option<(Vec<VertexId>, f64)> {
        let mut top = legs.first()?.clone();
        for leg in &legs[1..] {
            let (up, _) = Self::meet(&top, leg)?;
            for _ in 0..up {
                top = self.father(&top)?;
            }
        }
        let base = self.height(&top)?;
        let mut out = Vec::with_capacity(legs.len());
        for leg in legs {
            let mut word = Vec::new();
            let mut v = leg.clone();
            while v != top {
                let f = self.father(&v)?;
                word.push(self.sons(&f).iter().position(|s| *s == v)? as u8);
                v = f;
            }
            word.reverse();
            out.push(VertexId::End { up: 0, word });
        }
        Some((out, base))
    }
}

impl TreeGeometry for TreeWithEnd {
    fn confluence(&self, a: &VertexId, b: &VertexId) -> (u64, u64) {
        Self::meet(a, b).unwrap_or((u64::MAX, u64::MAX))
    }
}

// ---------------------------------------------------------------------------

/// ℤ₃ × ℤ with unit rates.
#[derive(Clone, Copy, Debug)]
pub struct ProductZ3Z;

impl Substrate for ProductZ3Z {
    fn name(&self) -> &'static str {
        "product_z3_z"
    }
    fn root(&self) -> VertexId {
        VertexId::Product { u: 0, x: 0 }
    }
    fn contains(&self, v: &VertexId) -> bool {
        matches!(v, VertexId::Product { u, .. } if *u < 3)
    }
    fn neighbors(&self, v: &VertexId) -> Vec<Neighbor> {
        let VertexId::Product { u, x } = *v else { return Vec::new() };
        vec![
            Neighbor::new(VertexId::Product { u: (u + 1) % 3, x }, 1.0, 1.0),
            Neighbor::new(VertexId::Product { u: (u + 2) % 3, x }, 1.0, 1.0),
            Neighbor::new(VertexId::Product { u, x: x + 1 }, 1.0, 1.0),
            Neighbor::new(VertexId::Product { u, x: x - 1 }, 1.0, 1.0),
        ]
    }
    fn max_degree(&self) -> usize {
        4
    }
    fn distance(&self, a: &VertexId, b: &VertexId) -> u64 {
        match (a, b) {
            (VertexId::Product { u: ua, x: xa }, VertexId::Product { u: ub, x: xb }) => {
                let du = (*ua as i64 - *ub as i64).rem_euclid(3);
                du.min(3 - du) as u64 + xa.abs_diff(*xb)
            }
            _ => u64::MAX,
        }
    }
    fn height(&self, v: &VertexId) -> Option<f64> {
        match v {
            VertexId::Product { x, .. } => Some(*x as f64),
            _ => None,
        }
    }
    fn offset(&self, base: &VertexId, offset: Offset) -> Option<VertexId> {
        let VertexId::Product { u, x } = *base else { return None };
        match offset {
            Offset::Pair(du, dx) => Some(VertexId::Product { u: (u as i64 + du).rem_euclid(3) as u8, x: x + dx }),
            Offset::Int(dx) => Some(VertexId::Product { u, x: x + dx }),
        }
    }
}

// ---------------------------------------------------------------------------

/// ℤ with one extra pendant vertex attached at each site 2^k, k >= 0.
/// Unit rates.
#[derive(Clone, Copy, Debug)]
pub struct DecoratedLine;

impl DecoratedLine {
    pub fn has_pendant(x: i64) -> bool {
        x > 0 && (x & (x - 1)) == 0
    }
}

impl Substrate for DecoratedLine {
    fn name(&self) -> &'static str {
        "decorated_line"
    }
    fn root(&self) -> VertexId {
        VertexId::Decorated { x: 0, pendant: false }
    }
    fn contains(&self, v: &VertexId) -> bool {
        match v {
            VertexId::Decorated { x, pendant } => !pendant || Self::has_pendant(*x),
            _ => false,
        }
    }
    fn neighbors(&self, v: &VertexId) -> Vec<Neighbor> {
        match *v {
            VertexId::Decorated { x, pendant: true } => {
                vec![Neighbor::new(VertexId::Decorated { x, pendant: false }, 1.0, 1.0)]
            }
            VertexId::Decorated { x, pendant: false } => {
                let mut out = vec![
                    Neighbor::new(VertexId::Decorated { x: x + 1, pendant: false }, 1.0, 1.0),
                    Neighbor::new(VertexId::Decorated { x: x - 1, pendant: false }, 1.0, 1.0),
                ];
                if Self::has_pendant(x) {
                    out.push(Neighbor::new(VertexId::Decorated { x, pendant: true }, 1.0, 1.0));
                }
                out
            }
            _ => Vec::new(),
        }
    }
    fn max_degree(&self) -> usize {
        3
    }
    fn distance(&self, a: &VertexId, b: &VertexId) -> u64 {
        match (a, b) {
            (VertexId::Decorated { x: xa, pendant: pa }, VertexId::Decorated { x: xb, pendant: pb }) => {
                if xa == xb {
                    (pa != pb) as u64
                } else {
                    xa.abs_diff(*xb) + *pa as u64 + *pb as u64
                }
            }
            _ => u64::MAX,
        }
    }
    fn height(&self, v: &VertexId) -> Option<f64> {
        match v {
            VertexId::Decorated { x, .. } => Some(*x as f64),
            _ => None,
        }
    }
}

// ---------------------------------------------------------------------------

/// Segments [0, 1_N, ..., N_N] for N = 1..=n_max with their 0's identified.
///
/// Rates: from the hub to 1_N proportional to (1/2)^N (renormalized over
/// N <= n_max); inside a segment p outward, q = 1 - p inward; the tip N_N
/// only moves inward with rate q. The discrete chain's tip self-loop of
/// probability p becomes extra holding time: with total rate 1 elsewhere,
/// expected continuous hitting times equal expected step counts of the
/// discrete chain.
#[derive(Clone, Debug)]
pub struct StarOfSegments {
    pub n_max: u32,
    pub p: f64,
    pub q: f64,
    hub_weights: Vec<f64>,
}

impl StarOfSegments {
    pub fn new(n_max: u32, p: f64) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::Parameter("star needs at least one segment (N_max >= 1)".into()));
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Parameter(format!("p must lie in (0,1), got {p}")));
        }
        let raw: Vec<f64> = (1..=n_max).map(|n| 0.5f64.powi(n as i32)).collect();
        let total: f64 = raw.iter().sum();
        Ok(StarOfSegments { n_max, p, q: 1.0 - p, hub_weights: raw.iter().map(|w| w / total).collect() })
    }

    /// Rate from the hub into segment `n`.
    pub fn hub_rate(&self, n: u32) -> f64 {
        self.hub_weights[(n - 1) as usize]
    }

    pub fn site(seg: u32, offset: u32) -> VertexId {
        if offset == 0 {
            VertexId::HUB
        } else {
            VertexId::Segment { seg, offset }
        }
    }

    /// Rate of the move `from -> to` where both lie on segment `seg`.
    fn rate(&self, seg: u32, from: u32, to: u32) -> f64 {
        if from == 0 {
            self.hub_rate(seg)
        } else if to > from {
            self.p
        } else {
            self.q
        }
    }
}

impl Substrate for StarOfSegments {
    fn name(&self) -> &'static str {
        "star_of_segments"
    }
    fn root(&self) -> VertexId {
        VertexId::HUB
    }
    fn contains(&self, v: &VertexId) -> bool {
        match *v {
            VertexId::Segment { seg: 0, offset: 0 } => true,
            VertexId::Segment { seg, offset } => seg >= 1 && seg <= self.n_max && offset >= 1 && offset <= seg,
            _ => false,
        }
    }
    fn neighbors(&self, v: &VertexId) -> Vec<Neighbor> {
        match *v {
            VertexId::Segment { offset: 0, .. } => (1..=self.n_max)
                .map(|n| Neighbor::new(Self::site(n, 1), self.hub_rate(n), self.q))
                .collect(),
            VertexId::Segment { seg, offset } => {
                let mut out = Vec::with_capacity(2);
                if offset < seg {
                    out.push(Neighbor::new(
                        Self::site(seg, offset + 1),
                        self.rate(seg, offset, offset + 1),
                        self.rate(seg, offset + 1, offset),
                    ));
                }
                out.push(Neighbor::new(
                    Self::site(seg, offset - 1),
                    self.rate(seg, offset, offset - 1),
                    self.rate(seg, offset - 1, offset),
                ));
                out
            }
            _ => Vec::new(),
        }
    }
    fn max_degree(&self) -> usize {
        (self.n_max as usize).max(2)
    }
    fn distance(&self, a: &VertexId, b: &VertexId) -> u64 {
        match (a, b) {
            (VertexId::Segment { seg: sa, offset: oa }, VertexId::Segment { seg: sb, offset: ob }) => {
                if *oa == 0 || *ob == 0 || sa != sb {
                    (*oa + *ob) as u64
                } else {
                    oa.abs_diff(*ob) as u64
                }
            }
            _ => u64::MAX,
        }
    }
    fn height(&self, v: &VertexId) -> Option<f64> {
        match v {
            VertexId::Segment { offset, .. } => Some(*offset as f64),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_neighbors() {
        let line = Line::new(0.7, 0.3).unwrap();
        assert_eq!(
            line.neighbors(&VertexId::Int(5)),
            vec![
                Neighbor::new(VertexId::Int(6), 0.7, 0.3),
                Neighbor::new(VertexId::Int(4), 0.3, 0.7)
            ]
        );
    }

    #[test]
    fn lamperti_drift_at_two() {
        let lam = LampertiHalfLine::with_drift_coefficient(1.0).unwrap();
        let f = lam.forward_rate(2);
        assert_eq!(f, 5.0 / 8.0);
        assert_eq!(2.0 * f - 1.0, 1.0 / (2.0 * 2.0));
    }

    #[test]
    fn tree_with_end_rates() {
        let t = TreeWithEnd::with_bias(3, 0.5).unwrap();
        for v in [t.root(), VertexId::End { up: 3, word: vec![1, 0] }] {
            let nb = t.neighbors(&v);
            assert_eq!(nb.len(), 3);
            assert_eq!(nb[0].forward, 0.5);
            assert_eq!(t.height(&nb[0].vertex), Some(t.height(&v).unwrap() - 1.0));
            for s in &nb[1..] {
                assert_eq!(s.forward, 0.25);
                assert_eq!(t.height(&s.vertex), Some(t.height(&v).unwrap() + 1.0));
            }
        }
    }

    #[test]
    fn tree_with_end_son_zero_of_ancestor_is_canonical() {
        let t = TreeWithEnd::simple(3).unwrap();
        let a1 = VertexId::End { up: 1, word: vec![] };
        assert_eq!(t.sons(&a1)[0], t.root());
        assert_eq!(t.father(&t.root()), Some(a1));
    }

    #[test]
    fn invalid_parameters() {
        assert!(TreeWithEnd::with_bias(3, 1.0).is_err());
        assert!(TreeWithEnd::with_bias(2, 0.5).is_err());
        assert!(RootedTree::new(2).is_err());
        assert!(StarOfSegments::new(0, 0.6).is_err());
        assert!(Line::new(0.0, 1.0).is_err());
        assert!(LampertiHalfLine::with_drift_coefficient(2.5).is_err());
        let tight = Limits { max_degree: 3, ..Limits::default() };
        assert!(matches!(
            generate(&FamilySpec::StarOfSegments { n_max: 5, p: 0.6 }, &tight),
            Err(Error::Size { .. })
        ));
    }

    #[test]
    fn star_hub_weights_sum_to_one() {
        let s = StarOfSegments::new(6, 0.6).unwrap();
        let total: f64 = (1..=6).map(|n| s.hub_rate(n)).sum();
        assert!((total - 1.0).abs() < 1e-15);
        assert!((s.hub_rate(1) / s.hub_rate(2) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn family_spec_json() {
        let spec: FamilySpec = serde_json::from_str(r#"{"family":"tree_with_end","m":3,"a":0.5}"#).unwrap();
        assert_eq!(spec, FamilySpec::TreeWithEnd { m: 3, a: Some(0.5) });
        assert!(serde_json::from_str::<FamilySpec>(r#"{"family":"line","p":1,"q":1,"x":2}"#).is_err());
    }
}
