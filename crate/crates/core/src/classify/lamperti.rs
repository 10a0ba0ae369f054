use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphs::{Limits, Substrate, VertexId};
use crate::spider::{build_spider_network, stretch_index, unstretch, Config, ConfigRule};

/// Default half-width of the undecidable zone around the thresholds ±1.
pub const DEFAULT_MARGIN: f64 = 0.05;

/// Profiles must reach at least this far out.
pub const MIN_COVERAGE: f64 = 1e3;

/// Slack for the pointwise bounds on 2xμ(x).
const POINTWISE_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictClass {
    PositiveRecurrent,
    NullRecurrent,
    Recurrent,
    Inconclusive,
    Transient,
}

impl VerdictClass {
    pub fn as_str(self) -> &'static str {
        match self {
            VerdictClass::PositiveRecurrent => "positive_recurrent",
            VerdictClass::NullRecurrent => "null_recurrent",
            VerdictClass::Recurrent => "recurrent",
            VerdictClass::Inconclusive => "inconclusive",
            VerdictClass::Transient => "transient",
        }
    }

    /// Order from most to least recurrent. Null recurrence and plain
    /// recurrence share a rank; inconclusive sits between them and transience.
    pub fn rank(self) -> u8 {
        match self {
            VerdictClass::PositiveRecurrent => 0,
            VerdictClass::NullRecurrent | VerdictClass::Recurrent => 1,
            VerdictClass::Inconclusive => 2,
            VerdictClass::Transient => 3,
        }
    }
}

impl fmt::Display for VerdictClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A classification of a truncated process. It is evidence about the
/// infinite process, never a proof.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub class: VerdictClass,
    /// Named criterion values, in the order they were computed.
    pub evidence: Vec<(String, f64)>,
    pub notes: Vec<String>,
}

impl Verdict {
    /// "transient-evidence", "null_recurrent-evidence", ...
    pub fn label(&self) -> String {
        format!("{}-evidence", self.class)
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.evidence.iter().find(|e| e.0 == name).map(|e| e.1)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())?;
        for (k, v) in &self.evidence {
            write!(f, " {k}={v:.6}")?;
        }
        Ok(())
    }
}

/// Constant fit of g(x) = 2xμ(x) over a window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitFit {
    pub window: (f64, f64),
    pub points: usize,
    /// Weighted least-squares constant, weights x.
    pub limit: f64,
    /// Same fit on the upper half of the window.
    pub tail_limit: f64,
    /// Half the range of g over the window.
    pub band: f64,
    pub g_min: f64,
    pub g_max: f64,
}

/// Mean jump-chain drift μ(x) at increasing sample points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftProfile {
    pub label: String,
    pub x: Vec<f64>,
    pub mu: Vec<f64>,
    /// Fit over the largest decade, when it holds enough points.
    pub fit: Option<LimitFit>,
}

impl DriftProfile {
    pub fn new(label: impl Into<String>, x: Vec<f64>, mu: Vec<f64>) -> Result<Self> {
        if x.len() != mu.len() || x.is_empty() {
            return Err(Error::Parameter(format!("profile needs matching nonempty samples, got {} and {}", x.len(), mu.len())));
        }
        if !x.windows(2).all(|w| w[0] < w[1]) || !(x[0] > 0.0) {
            return Err(Error::Parameter("sample points must be positive and strictly increasing".into()));
        }
        if let Some(i) = mu.iter().position(|m| !(m.is_finite() && m.abs() <= 1.0)) {
            return Err(Error::Parameter(format!("drift {} at x={} is outside [-1, 1]", mu[i], x[i])));
        }
        let top = *x.last().expect("nonempty");
        let mut p = DriftProfile { label: label.into(), x, mu, fit: None };
        p.fit = p.fit_window((top / 10.0, top)).ok();
        Ok(p)
    }

    /// g(x) = 2xμ(x).
    pub fn scaled(&self) -> Vec<f64> {
        self.x.iter().zip(&self.mu).map(|(x, m)| 2.0 * x * m).collect()
    }

    pub fn fit_window(&self, window: (f64, f64)) -> Result<LimitFit> {
        let g = self.scaled();
        let inside: Vec<usize> = (0..self.x.len()).filter(|&i| self.x[i] >= window.0 && self.x[i] <= window.1).collect();
        if inside.len() < 4 {
            return Err(Error::Parameter(format!("fit window {window:?} holds {} points, need 4", inside.len())));
        }
        let fit = |idx: &[usize]| {
            let (num, den) = idx.iter().fold((0.0, 0.0), |(n, d), &i| (n + self.x[i] * g[i], d + self.x[i]));
            num / den
        };
        let mid = 0.5 * (window.0 + window.1);
        let upper: Vec<usize> = inside.iter().copied().filter(|&i| self.x[i] >= mid).collect();
        let g_min = inside.iter().map(|&i| g[i]).fold(f64::INFINITY, f64::min);
        let g_max = inside.iter().map(|&i| g[i]).fold(f64::NEG_INFINITY, f64::max);
        Ok(LimitFit {
            window,
            points: inside.len(),
            limit: fit(&inside),
            tail_limit: if upper.is_empty() { fit(&inside) } else { fit(&upper) },
            band: 0.5 * (g_max - g_min),
            g_min,
            g_max,
        })
    }
}

/// Classify with the fit over the largest decade of the profile.
pub fn lamperti_classify(profile: &DriftProfile, margin: f64) -> Result<Verdict> {
    let top = *profile.x.last().expect("nonempty");
    lamperti_classify_window(profile, (top / 10.0, top), margin)
}

/// Classify with the fit over an explicit window.
pub fn lamperti_classify_window(profile: &DriftProfile, window: (f64, f64), margin: f64) -> Result<Verdict> {
    lamperti_classify_fit(profile, &profile.fit_window(window)?, margin)
}

/// Transience needs both fits above 1 + margin and g > 1 throughout the
/// window; positive recurrence the mirror image below -1. Otherwise the
/// pointwise bounds 0 >= μ(x) >= -1/(2x) give null recurrence and
/// μ(x) <= 1/(2x) recurrence. Each condition is monotone in μ.
fn lamperti_classify_fit(profile: &DriftProfile, fit: &LimitFit, margin: f64) -> Result<Verdict> {
    if !(margin.is_finite() && margin >= 0.0) {
        return Err(Error::Parameter(format!("margin must be nonnegative, got {margin}")));
    }
    let top = *profile.x.last().expect("nonempty");
    if top < MIN_COVERAGE {
        return Err(Error::Parameter(format!("profile reaches x={top}, need at least {MIN_COVERAGE}")));
    }
    let lo = fit.limit.min(fit.tail_limit);
    let hi = fit.limit.max(fit.tail_limit);
    let class = if lo > 1.0 + margin && fit.g_min > 1.0 {
        VerdictClass::Transient
    } else if hi < -1.0 - margin && fit.g_max < -1.0 {
        VerdictClass::PositiveRecurrent
    } else if fit.g_max <= POINTWISE_SLACK && fit.g_min >= -1.0 - POINTWISE_SLACK {
        VerdictClass::NullRecurrent
    } else if fit.g_max <= 1.0 + POINTWISE_SLACK {
        VerdictClass::Recurrent
    } else {
        VerdictClass::Inconclusive
    };
    let mut notes = Vec::new();
    if (fit.limit - fit.tail_limit).abs() > margin {
        notes.push(format!("fit has not settled: L={} on the window, {} on its upper half", fit.limit, fit.tail_limit));
    }
    if class == VerdictClass::Inconclusive {
        notes.push(format!("L within margin {margin} of a threshold or pointwise bounds violated"));
    }
    Ok(Verdict {
        class,
        evidence: vec![
            ("L".into(), fit.limit),
            ("L_tail".into(), fit.tail_limit),
            ("band".into(), fit.band),
            ("g_min".into(), fit.g_min),
            ("g_max".into(), fit.g_max),
            ("margin".into(), margin),
            ("window_lo".into(), fit.window.0),
            ("window_hi".into(), fit.window.1),
        ],
        notes,
    })
}

/// Jump-chain drift of the height functional at each point.
pub fn walk_drift_profile(sub: &dyn Substrate, points: &[VertexId]) -> Result<DriftProfile> {
    let mut x = Vec::with_capacity(points.len());
    let mut mu = Vec::with_capacity(points.len());
    for v in points {
        let h = sub.height(v).ok_or_else(|| Error::Height(v.to_string()))?;
        let (mut num, mut den) = (0.0, 0.0);
        for nb in sub.neighbors(v) {
            let hy = sub.height(&nb.vertex).ok_or_else(|| Error::Height(nb.vertex.to_string()))?;
            num += nb.forward * (hy - h);
            den += nb.forward;
        }
        if den == 0.0 {
            return Err(Error::Absorbing(v.to_string()));
        }
        x.push(h);
        mu.push(num / den);
    }
    DriftProfile::new(format!("walk on {}", sub.name()), x, mu)
}

/// Drift of the 2-leg span-2 spider along its stretched line: the spider
/// graph with the first leg on the left is the path
/// (x,x+1) - (x,x+2) - (x+1,x+2) - ..., indexed by 2x + i - 1. The drift at
/// each stretched index is read off the built spider network.
pub fn spider_drift_profile(sub: &dyn Substrate, s: u64, points: &[u64]) -> Result<DriftProfile> {
    if s != 2 {
        return Err(Error::Parameter(format!("the stretched line needs span 2, got {s}")));
    }
    let Some(&top) = points.iter().max() else {
        return Err(Error::Parameter("no sample points".into()));
    };
    let rule = ConfigRule::bounded_span_left(2, 2)?;
    let start = Config::new(vec![VertexId::Int(0), VertexId::Int(1)])?;
    let radius = top / 2 + 6;
    let spn = build_spider_network(sub, &rule, &start, radius, &Limits::default())?;
    let mut x = Vec::with_capacity(points.len());
    let mut mu = Vec::with_capacity(points.len());
    for &n in points {
        let cfg = unstretch(n as i64);
        let i = spn.net.index_of(&cfg).ok_or_else(|| Error::NotFound(cfg.to_string()))?;
        if spn.net.is_boundary(i) {
            return Err(Error::Truncation(format!("{cfg} touches the ball boundary")));
        }
        let (mut num, mut den) = (0.0, 0.0);
        for &(j, r) in spn.net.rates(i) {
            let m = stretch_index(spn.config(j))
                .ok_or_else(|| Error::RuleViolation { config: spn.config(j).to_string(), reason: "off the stretched line".into() })?;
            num += r * (m - n as i64) as f64;
            den += r;
        }
        x.push(n as f64);
        mu.push(num / den);
    }
    DriftProfile::new(format!("span-2 spider on {}", sub.name()), x, mu)
}
