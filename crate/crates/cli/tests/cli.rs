use std::path::Path;
use std::process::{Command, Output};

fn spiderlab(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_spiderlab"));
    cmd.args(args).env_remove("SPIDERLAB_THREADS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited")
}

fn body(path: &Path) -> String {
    let text = std::fs::read_to_string(path).unwrap();
    let (first, rest) = text.split_once('\n').unwrap();
    assert!(first.starts_with("# generated_unix="), "{first}");
    assert!(!text.contains('\r'));
    rest.to_string()
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    body(path).lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn list_presets_names_the_experiments() {
    let o = spiderlab(&["list-presets"], &[]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    for name in ["line-speed", "tree-speed-decay", "lamperti", "star-ergodicity", "tree-end-speed", "distortion-decorated-line"] {
        let line = text.lines().find(|l| l.starts_with(name)).unwrap_or_else(|| panic!("{name} missing"));
        assert!(line.contains(" s "), "no runtime in {line}");
    }
    assert!(text.contains("star of segments"));
    assert!(text.contains("pendants at powers of two"));
}

#[test]
fn line_speed_preset_matches_formula_and_reproduces() {
    let dir = tempfile::tempdir().unwrap();
    let out = |sub: &str| dir.path().join(sub).to_string_lossy().into_owned();
    assert_eq!(code(&spiderlab(&["preset", "line-speed", "--seed", "5", "--out", &out("a")], &[])), 0);
    assert_eq!(code(&spiderlab(&["preset", "line-speed", "--seed", "5", "--out", &out("b"), "--threads", "1"], &[])), 0);
    assert_eq!(code(&spiderlab(&["preset", "line-speed", "--seed", "6", "--out", &out("c")], &[("SPIDERLAB_THREADS", "2")])), 0);
    let a = dir.path().join("a/line-speed.csv");
    let table = rows(&a);
    assert_eq!(table.len(), 11);
    assert!(body(&a).starts_with("s,V_exact,V_formula,V_mc,stderr\n"));
    for r in &table {
        let f = |i: usize| r[i].parse::<f64>().unwrap();
        assert!((f(1) - f(2)).abs() < 1e-10);
        assert!((f(3) - f(1)).abs() < 5.0 * f(4));
    }
    assert_eq!(body(&a), body(&dir.path().join("b/line-speed.csv")));
    assert_ne!(body(&a), body(&dir.path().join("c/line-speed.csv")));
}

#[test]
fn tree_speed_decay_preset_is_decreasing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_string_lossy().into_owned();
    assert_eq!(code(&spiderlab(&["preset", "tree-speed-decay", "--out", &out], &[])), 0);
    let table = rows(&dir.path().join("tree-speed-decay.csv"));
    let col = |i: usize| table.iter().map(|r| r[i].parse::<f64>().unwrap()).collect::<Vec<_>>();
    assert!(col(1).windows(2).all(|w| w[1] < w[0]));
    assert!(col(2).windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn lamperti_preset_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_string_lossy().into_owned();
    assert_eq!(code(&spiderlab(&["preset", "lamperti", "--out", &out], &[])), 0);
    let table = rows(&dir.path().join("lamperti.csv"));
    let verdict = |c: &str, chain: &str, method: &str| {
        table.iter().find(|r| r[0] == c && r[1] == chain && r[2] == method).map(|r| r[3].clone()).unwrap()
    };
    assert_eq!(verdict("1", "walk", "drift"), "recurrent");
    assert_eq!(verdict("1", "spider", "drift"), "transient");
    assert_eq!(verdict("-1", "walk", "drift"), "null_recurrent");
    assert_eq!(verdict("-1", "spider", "drift"), "positive_recurrent");
    assert_eq!(verdict("1", "spider", "resistance"), "transient-evidence");
}

const FULL: &str = r#"{
  "schema": 1,
  "name": "line3",
  "substrate": {"family": "line", "p": 0.7, "q": 0.3},
  "rule": {"kind": "bounded_span", "k": 2, "s": 3, "left_leg": true},
  "seed": 42,
  "output": {"dir": "artifacts"},
  "analyses": [
    {"kind": "build", "radius": 6},
    {"kind": "simulate", "n_jumps": 50, "replicas": 2},
    {"kind": "speed_exact", "key": "span", "height": "first_leg"},
    {"kind": "speed_mc", "n_jumps": 2000, "replicas": 4, "height": "first_leg"},
    {"kind": "lumpability", "radius": 8, "key": "shape"},
    {"kind": "resistance", "radii": [8, 16, 32, 64]},
    {"kind": "distortion", "radius": 20},
    {"kind": "hitting", "radius": 8, "target": [["0", "1"]], "mode": "hit"},
    {"kind": "preset", "name": "tree-factor-rates"}
  ]
}"#;

#[test]
fn scenario_runs_every_analysis() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "line3.json", FULL);
    let o = spiderlab(&["validate", &path], &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = spiderlab(&["run", &path], &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let art = dir.path().join("artifacts");
    for f in [
        "line3_00_build.json",
        "line3_01_simulate.csv",
        "line3_02_speed_exact.csv",
        "line3_02_speed_exact_factor.json",
        "line3_03_speed_mc.csv",
        "line3_04_lumpability.json",
        "line3_05_resistance.csv",
        "line3_05_resistance_verdict.json",
        "line3_06_distortion.csv",
        "line3_06_distortion.json",
        "line3_07_hitting.csv",
        "line3_tree-factor-rates.csv",
    ] {
        assert!(art.join(f).exists(), "{f} missing");
    }
    let exact = rows(&art.join("line3_02_speed_exact.csv"));
    let v: f64 = exact[0][1].parse().unwrap();
    assert!((v - 0.4 * (1.0 - 1.0 / 3.0)).abs() < 1e-12);
    let lump: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(art.join("line3_04_lumpability.json")).unwrap()).unwrap();
    assert_eq!(lump["lumpable"], true);

    // identical scenario and seed: identical bodies
    let first: Vec<String> = ["line3_01_simulate.csv", "line3_03_speed_mc.csv"].iter().map(|f| body(&art.join(f))).collect();
    assert_eq!(code(&spiderlab(&["run", &path, "--threads", "1"], &[])), 0);
    let second: Vec<String> = ["line3_01_simulate.csv", "line3_03_speed_mc.csv"].iter().map(|f| body(&art.join(f))).collect();
    assert_eq!(first, second);
}

#[test]
fn validation_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("unknown_key", FULL.replace("\"seed\": 42", "\"seed\": 42, \"threads\": 3")),
        ("no_seed", FULL.replace("\"seed\": 42,", "")),
        ("bad_schema", FULL.replace("\"schema\": 1", "\"schema\": 7")),
        ("bad_preset", FULL.replace("tree-factor-rates", "tree-factor")),
        ("bad_family", FULL.replace("\"family\": \"line\"", "\"family\": \"circle\"")),
        ("bad_rate", FULL.replace("\"p\": 0.7", "\"p\": 0")),
        ("bad_key", FULL.replace("\"key\": \"shape\"", "\"key\": \"pair\"")),
        ("small_radius", FULL.replace("[8, 16, 32, 64]", "[4, 16, 32, 64]")),
    ];
    for (name, text) in cases {
        let path = write(dir.path(), &format!("{name}.json"), &text);
        for cmd in ["validate", "run"] {
            let o = spiderlab(&[cmd, &path], &[]);
            assert_eq!(code(&o), 2, "{name} {cmd}: {}", String::from_utf8_lossy(&o.stderr));
            assert!(!o.stderr.is_empty());
        }
    }
    assert_eq!(code(&spiderlab(&["validate", "/no/such/file.json"], &[])), 2);
    assert_eq!(code(&spiderlab(&["preset", "no-such-preset"], &[])), 2);
    assert_eq!(code(&spiderlab(&["list-presets"], &[("SPIDERLAB_THREADS", "0")])), 2);
}

#[test]
fn numerical_failures_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    // span does not lump the biased tree spider: equal spans, different height steps
    let text = r#"{"schema": 1, "name": "tree", "substrate": {"family": "tree_with_end", "m": 3, "a": 0.3},
        "rule": {"kind": "bounded_span", "k": 2, "s": 3},
        "analyses": [{"kind": "speed_exact", "key": "span", "height": "midpoint"}]}"#;
    let path = write(dir.path(), "tree.json", text);
    assert_eq!(code(&spiderlab(&["validate", &path], &[])), 0);
    let o = spiderlab(&["run", &path], &[]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not lumpable"));
}
