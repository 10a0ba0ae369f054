//! Canned experiments with fixed parameters.

use spiderlab::chain::{hitting_times, mc_speed, HitMode, McOptions};
use spiderlab::classify::{
    distortion_scan, distortion_scan_sites, lamperti_classify, resistance_growth, spider_drift_profile,
    spider_resistance_growth, walk_drift_profile, SiteSelection, DEFAULT_MARGIN,
};
use spiderlab::graphs::{
    materialize_ball, DecoratedLine, LampertiHalfLine, Limits, Line, ProductZ3Z, StarOfSegments, Substrate, TreeWithEnd,
    VertexId,
};
use spiderlab::quotient::{exact_speed, explore_factor_chain, ksk_identity_check, pair_key, ExploreOptions, FactorChain, PairKey};
use spiderlab::spider::{build_spider_network, midpoint_height, Config, ConfigRule, SpiderDynamics};

use crate::output::{finish, row, Artifacts};
use crate::CliError;

pub type PresetFn = fn(u64, &mut Artifacts) -> Result<(), CliError>;

pub struct Preset {
    pub name: &'static str,
    pub example: &'static str,
    pub runtime: &'static str,
    pub stochastic: bool,
    pub run: PresetFn,
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "line-speed",
        example: "two-leg spider on the biased line, V(s) = (p-q)(1-1/s)",
        runtime: "15 s",
        stochastic: true,
        run: line_speed,
    },
    Preset {
        name: "tree-speed-decay",
        example: "two-leg spider on the 3-regular tree with an end, V(s) -> 0",
        runtime: "5 s",
        stochastic: false,
        run: tree_speed_decay,
    },
    Preset {
        name: "tree-factor-rates",
        example: "factor chain rates q((l,k),(l',k')) of the two-leg tree spider",
        runtime: "1 s",
        stochastic: false,
        run: tree_factor_rates,
    },
    Preset {
        name: "tree-end-speed",
        example: "tree with an end, a=1/2: speed for span 1 to 4",
        runtime: "30 s",
        stochastic: true,
        run: tree_end_speed,
    },
    Preset {
        name: "lamperti",
        example: "recurrent walk with transient spider, null recurrent walk with positive recurrent spider",
        runtime: "10 s",
        stochastic: false,
        run: lamperti,
    },
    Preset {
        name: "star-ergodicity",
        example: "star of segments, E[T_0 | 1_N] ~ (p/q)^N for walker and spider",
        runtime: "5 s",
        stochastic: false,
        run: star_ergodicity,
    },
    Preset {
        name: "distortion-decorated-line",
        example: "line with pendants at powers of two: configuration diameters are unbounded",
        runtime: "5 s",
        stochastic: false,
        run: distortion_decorated_line,
    },
    Preset {
        name: "distortion-bounds",
        example: "bounded-span spiders on line, tree and Z3 x Z: diameters within 2k(s+k)",
        runtime: "10 s",
        stochastic: false,
        run: distortion_bounds,
    },
];

pub fn find(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

fn num(x: f64) -> String {
    x.to_string()
}

fn line_factor(line: &Line, s: u64) -> spiderlab::Result<FactorChain<u64>> {
    let rule = ConfigRule::bounded_span_left(2, s)?;
    let d = SpiderDynamics::new(line, &rule);
    let h = |c: &Config| line.height(c.leg(0)).ok_or_else(|| spiderlab::Error::Height(c.to_string()));
    explore_factor_chain(&d, &Config::from_ints(&[0, 1])?, |c| Ok(c.span(line)), Some(&h), ExploreOptions::default())
}

fn tree_start(t: &TreeWithEnd) -> spiderlab::Result<Config> {
    let root = t.root();
    let father = t.father(&root).ok_or_else(|| spiderlab::Error::NotFound(format!("father of {root}")))?;
    Config::new(vec![root, father])
}

fn tree_factor(t: &TreeWithEnd, s: u64) -> spiderlab::Result<FactorChain<PairKey>> {
    let rule = ConfigRule::bounded_span(2, s)?;
    let d = SpiderDynamics::new(t, &rule);
    let h = |c: &Config| midpoint_height(c, t);
    explore_factor_chain(&d, &tree_start(t)?, |c| pair_key(c, t), Some(&h), ExploreOptions::default())
}

fn line_speed(seed: u64, out: &mut Artifacts) -> Result<(), CliError> {
    let (p, q) = (0.7, 0.3);
    let line = Line::new(p, q)?;
    let mut w = out.csv("line-speed", &["s", "V_exact", "V_formula", "V_mc", "stderr"])?;
    for s in 2..=12u64 {
        let exact = exact_speed(&line_factor(&line, s)?, "line")?;
        let rule = ConfigRule::bounded_span_left(2, s)?;
        let d = SpiderDynamics::new(&line, &rule);
        let opts = McOptions { n_jumps: 20_000, replicas: 16, seed };
        let h = |c: &Config| Ok(c.leg(0).as_int().unwrap_or_default() as f64);
        let mc = mc_speed(&d, &Config::from_ints(&[0, 1])?, h, opts, "line")?;
        let formula = (p - q) * (1.0 - 1.0 / s as f64);
        row(&mut w, [s.to_string(), num(exact.speed), num(formula), num(mc.speed), num(mc.stderr.unwrap_or(f64::NAN))])?;
    }
    finish(w)
}

fn tree_speed_decay(_seed: u64, out: &mut Artifacts) -> Result<(), CliError> {
    let t = TreeWithEnd::simple(3)?;
    let mut w = out.csv("tree-speed-decay", &["s", "V", "Pi_B", "ksk_residual", "blocks"])?;
    for s in [3u64, 6, 12, 24, 48] {
        let fc = tree_factor(&t, s)?;
        let st = fc.stationary()?;
        let b: Vec<usize> = (0..fc.len()).filter(|&i| fc.blocks[i].k == 0).collect();
        let pi_b: f64 = b.iter().map(|&i| st.jump[i]).sum();
        let ksk = ksk_identity_check(&fc, &st, &b)?;
        let v = exact_speed(&fc, "tree")?.speed;
        row(&mut w, [s.to_string(), num(v), num(pi_b), num(ksk), fc.len().to_string()])?;
    }
    finish(w)
}

fn tree_factor_rates(_seed: u64, out: &mut Artifacts) -> Result<(), CliError> {
    let t = TreeWithEnd::simple(3)?;
    let fc = tree_factor(&t, 6)?;
    let st = fc.stationary()?;
    let mut w = out.csv("tree-factor-rates", &["from", "to", "rate"])?;
    for (i, targets) in fc.rates.iter().enumerate() {
        for &(j, r) in targets {
            row(&mut w, [fc.blocks[i].to_string(), fc.blocks[j].to_string(), num(r)])?;
        }
    }
    finish(w)?;
    out.json("tree-factor-rates", &fc.to_document(&st))
}

fn tree_end_speed(seed: u64, out: &mut Artifacts) -> Result<(), CliError> {
    let t = TreeWithEnd::with_bias(3, 0.5)?;
    let mut w = out.csv("tree-end-speed", &["s", "V_exact", "V_mc", "stderr"])?;
    for s in 1..=4u64 {
        let exact = exact_speed(&tree_factor(&t, s)?, "tree")?;
        let rule = ConfigRule::bounded_span(2, s)?;
        let d = SpiderDynamics::new(&t, &rule);
        let opts = McOptions { n_jumps: 50_000, replicas: 16, seed };
        let (mc, se) = match mc_speed(&d, &tree_start(&t)?, |c: &Config| midpoint_height(c, &t), opts, "tree") {
            Ok(r) => (num(r.speed), num(r.stderr.unwrap_or(f64::NAN))),
            // a frozen spider has nothing to simulate
            Err(spiderlab::Error::Frozen(_)) => (String::new(), String::new()),
            Err(e) => return Err(e.into()),
        };
        row(&mut w, [s.to_string(), num(exact.speed), mc, se])?;
    }
    finish(w)
}

fn lamperti(_seed: u64, out: &mut Artifacts) -> Result<(), CliError> {
    let limits = Limits::default();
    let walk_points: Vec<VertexId> = (1..=10_000).map(VertexId::Int).collect();
    let spider_points: Vec<u64> = (1..=20_000).collect();
    let radii: Vec<u64> = (9..=14).map(|k| 1u64 << k).collect();
    let mut w = out.csv("lamperti", &["c", "chain", "method", "verdict", "L", "R_last", "increment_ratio"])?;
    for c in [1.0, -1.0] {
        let h = LampertiHalfLine::with_drift_coefficient(c)?;
        let walk = lamperti_classify(&walk_drift_profile(&h, &walk_points)?, DEFAULT_MARGIN)?;
        let spider = lamperti_classify(&spider_drift_profile(&h, 2, &spider_points)?, DEFAULT_MARGIN)?;
        for (chain, v) in [("walk", walk), ("spider", spider)] {
            let l = v.value("L").map(num).unwrap_or_default();
            row(&mut w, [num(c), chain.into(), "drift".into(), v.class.to_string(), l, String::new(), String::new()])?;
        }
        if c > 0.0 {
            let rule = ConfigRule::bounded_span_left(2, 2)?;
            let walk = resistance_growth(&h, &radii, &limits)?;
            let spider = spider_resistance_growth(&h, &rule, &Config::from_ints(&[0, 1])?, &radii, &limits)?;
            for (chain, g) in [("walk", walk), ("spider", spider)] {
                let v = &g.verdict;
                let get = |k| v.value(k).map(num).unwrap_or_default();
                row(&mut w, [num(c), chain.into(), "resistance".into(), v.label(), String::new(), get("R_last"), get("increment_ratio")])?;
            }
        }
    }
    finish(w)
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    sxy / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>()
}

fn star_ergodicity(_seed: u64, out: &mut Artifacts) -> Result<(), CliError> {
    let ratio = 2f64.sqrt();
    let star = StarOfSegments::new(12, ratio / (1.0 + ratio))?;
    let limits = Limits::default();
    let missing = |what: String| spiderlab::Error::NotFound(what);

    let net = materialize_ball(&star, &VertexId::HUB, 13, &limits)?;
    let hub = net.index_of(&VertexId::HUB).ok_or_else(|| missing("hub".into()))?;
    let walk = hitting_times(&net, &[hub], HitMode::Hit)?;

    let rule = ConfigRule::bounded_span(2, 2)?;
    let cfg = |a: VertexId, b: VertexId| Config::new(vec![a, b]);
    let spn = build_spider_network(&star, &rule, &cfg(VertexId::HUB, StarOfSegments::site(1, 1))?, 20, &limits)?;
    let mut target = vec![spn.start()];
    target.extend(spn.net.index_of(&cfg(StarOfSegments::site(1, 1), VertexId::HUB)?));
    let spider = hitting_times(&spn.net, &target, HitMode::Hit)?;
    let spider_time = |c: Config| spn.net.index_of(&c).map(|i| spider.time[i]).ok_or_else(|| missing(c.to_string()));

    let mut w = out.csv("star-ergodicity", &["N", "walker", "spider_inside", "spider_from_hub"])?;
    let (mut ns, mut logs) = (Vec::new(), [Vec::new(), Vec::new(), Vec::new()]);
    for n in 4..=12u32 {
        let site = StarOfSegments::site(n, 1);
        let a = net.index_of(&site).map(|i| walk.time[i]).ok_or_else(|| missing(site.to_string()))?;
        let b = spider_time(cfg(StarOfSegments::site(n, 1), StarOfSegments::site(n, 2))?)?;
        let c = spider_time(cfg(VertexId::HUB, StarOfSegments::site(n, 1))?)?;
        row(&mut w, [n.to_string(), num(a), num(b), num(c)])?;
        ns.push(f64::from(n));
        for (l, v) in logs.iter_mut().zip([a, b, c]) {
            l.push(v.ln());
        }
    }
    finish(w)?;
    let mut w = out.csv("star-ergodicity-slopes", &["series", "slope", "reference"])?;
    let refs = [ratio.ln(), 2.0 * ratio.ln(), 2.0 * ratio.ln()];
    for ((name, l), r) in ["walker", "spider_inside", "spider_from_hub"].iter().zip(&logs).zip(refs) {
        row(&mut w, [name.to_string(), num(slope(&ns, l)), num(r)])?;
    }
    finish(w)
}

fn distortion_decorated_line(_seed: u64, out: &mut Artifacts) -> Result<(), CliError> {
    let rule = ConfigRule::bounded_span(2, 2)?;
    let sites: Vec<VertexId> = (3..=5).map(|k| VertexId::Decorated { x: (1 << k) + (1 << (k - 1)), pendant: false }).collect();
    let r = distortion_scan_sites(&DecoratedLine, &rule, 100, &SiteSelection::Sites(sites), &Limits::default())?;
    let mut w = out.csv("distortion-decorated-line", &["k", "site", "diameter", "truncated"])?;
    for (k, s) in (3..=5).zip(&r.sites) {
        row(&mut w, [k.to_string(), s.site.clone(), s.diameter.to_string(), s.truncated.to_string()])?;
    }
    finish(w)
}

fn distortion_bounds(_seed: u64, out: &mut Artifacts) -> Result<(), CliError> {
    let limits = Limits::default();
    let line = Line::new(1.0, 1.0)?;
    let tree = TreeWithEnd::simple(3)?;
    let cases: [(&dyn Substrate, ConfigRule, u64); 3] = [
        (&line, ConfigRule::bounded_span(2, 3)?, 20),
        (&tree, ConfigRule::bounded_span(2, 3)?, 10),
        (&ProductZ3Z, ConfigRule::product_z3_z_table(), 12),
    ];
    let mut w = out.csv(
        "distortion-bounds",
        &["substrate", "k", "s", "radius", "max_diameter", "bound", "truncated", "alpha", "beta"],
    )?;
    for (sub, rule, radius) in cases {
        let r = distortion_scan(sub, &rule, radius, &limits)?;
        row(
            &mut w,
            [
                r.substrate.clone(),
                r.k.to_string(),
                r.span.to_string(),
                radius.to_string(),
                r.max_diameter().to_string(),
                r.diameter_bound.to_string(),
                r.any_truncated().to_string(),
                num(r.alpha),
                num(r.beta),
            ],
        )?;
    }
    finish(w)
}
