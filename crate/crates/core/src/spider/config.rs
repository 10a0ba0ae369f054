use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graphs::{Substrate, VertexId};

/// Ordered leg positions of a spider. Legs are pairwise distinct.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Config(Vec<VertexId>);

impl Config {
    pub fn new(legs: Vec<VertexId>) -> Result<Self> {
        if legs.is_empty() {
            return Err(Error::Parameter("a configuration needs at least one leg".into()));
        }
        let cfg = Config(legs);
        if !cfg.legs_distinct() {
            return Err(Error::RuleViolation { config: cfg.to_string(), reason: "two legs share a position".into() });
        }
        Ok(cfg)
    }

    pub fn from_ints(xs: &[i64]) -> Result<Self> {
        Self::new(xs.iter().map(|&x| VertexId::Int(x)).collect())
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    pub fn legs(&self) -> &[VertexId] {
        &self.0
    }

    pub fn leg(&self, i: usize) -> &VertexId {
        &self.0[i]
    }

    /// The base site (first leg).
    pub fn site(&self) -> &VertexId {
        &self.0[0]
    }

    pub fn contains(&self, v: &VertexId) -> bool {
        self.0.contains(v)
    }

    /// Copy with leg `i` moved to `v` (no admissibility check).
    pub fn with_leg(&self, i: usize, v: VertexId) -> Config {
        let mut legs = self.0.clone();
        legs[i] = v;
        Config(legs)
    }

    /// Relabel legs: leg `i` of the result is leg `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Config {
        Config(perm.iter().map(|&p| self.0[p].clone()).collect())
    }

    fn legs_distinct(&self) -> bool {
        self.0.iter().enumerate().all(|(i, a)| self.0[i + 1..].iter().all(|b| a != b))
    }

    /// Consecutive legs at distance 1.
    pub fn is_lined(&self, sub: &dyn Substrate) -> bool {
        self.0.windows(2).all(|w| sub.distance(&w[0], &w[1]) == 1)
    }

    /// Largest pairwise leg distance.
    pub fn span(&self, sub: &dyn Substrate) -> u64 {
        let mut best = 0;
        for (i, a) in self.0.iter().enumerate() {
            for b in &self.0[i + 1..] {
                best = best.max(sub.distance(a, b));
            }
        }
        best
    }
}

impl fmt::Display for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str(")")
    }
}

impl FromStr for Config {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let inner = s
            .strip_prefix('(')
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| Error::Address(s.to_string()))?;
        Config::new(inner.split(';').map(str::parse).collect::<Result<Vec<_>>>()?)
    }
}

/// Stretched-line index of a 2-leg configuration (x, x+i) on the integers,
/// i ∈ {1, 2}: 2x + i - 1.
pub fn stretch_index(cfg: &Config) -> Option<i64> {
    match cfg.legs() {
        [VertexId::Int(x), VertexId::Int(y)] if y - x == 1 || y - x == 2 => Some(2 * x + (y - x) - 1),
        _ => None,
    }
}

/// Inverse of [`stretch_index`].
pub fn unstretch(n: i64) -> Config {
    let x = n.div_euclid(2);
    let i = n.rem_euclid(2) + 1;
    Config(vec![VertexId::Int(x), VertexId::Int(x + i)])
}
