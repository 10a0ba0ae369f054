//! Sparse solvers checked against dense LU solves of the same equations.

use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use spiderlab::chain::{effective_resistance, hitting_times, reversible_measure, HitMode};
use spiderlab::graphs::FiniteNetwork;
use spiderlab::quotient::{factor_chain, Partition, LUMP_TOLERANCE};

/// Connected graph: a path 0..n plus extra chords, each edge with its own
/// pair of rates.
fn arb_edges() -> impl Strategy<Value = (usize, Vec<(usize, usize, f64, f64)>)> {
    (3usize..12).prop_flat_map(|n| {
        let path = proptest::collection::vec((0.1f64..2.0, 0.1f64..2.0), n - 1);
        let chords = proptest::collection::vec((0..n, 0..n, 0.1f64..2.0, 0.1f64..2.0), 0..n);
        (Just(n), path, chords).prop_map(|(n, path, chords)| {
            let mut edges: Vec<_> = path.into_iter().enumerate().map(|(i, (a, b))| (i, i + 1, a, b)).collect();
            for (i, j, a, b) in chords {
                let (i, j) = (i.min(j), i.max(j));
                if j > i + 1 && !edges.iter().any(|e| e.0 == i && e.1 == j) {
                    edges.push((i, j, a, b));
                }
            }
            (n, edges)
        })
    })
}

fn generator(n: usize, edges: &[(usize, usize, f64, f64)]) -> DMatrix<f64> {
    let mut q = DMatrix::zeros(n, n);
    for &(i, j, a, b) in edges {
        q[(i, j)] += a;
        q[(j, i)] += b;
    }
    for i in 0..n {
        let exit: f64 = q.row(i).sum();
        q[(i, i)] = -exit;
    }
    q
}

proptest! {
    #[test]
    fn hitting_times_match_dense((n, edges) in arb_edges()) {
        let net = FiniteNetwork::from_edges((0..n as u32).collect(), 0, &edges, &[]).unwrap();
        let report = hitting_times(&net, &[0], HitMode::Hit).unwrap();
        // -Q m = 1 off the target, m = 0 on it
        let q = generator(n, &edges);
        let a = -q.view((1, 1), (n - 1, n - 1)).clone_owned();
        let m = a.lu().solve(&DVector::from_element(n - 1, 1.0)).unwrap();
        prop_assert_eq!(report.time[0], 0.0);
        for x in 1..n {
            prop_assert!((report.time[x] - m[x - 1]).abs() <= 1e-9 * m[x - 1].max(1.0));
        }
        prop_assert!(report.residual < 1e-10);
    }

    #[test]
    fn resistance_matches_dense_laplacian((n, edges) in arb_edges(), weights in proptest::collection::vec(0.2f64..5.0, 12)) {
        // rates c(x,y)/mu(x) with mu(0) = 1 make the conductances exactly c
        let mu: Vec<f64> = (0..n).map(|x| if x == 0 { 1.0 } else { weights[x] }).collect();
        let rev: Vec<_> = edges.iter().map(|&(i, j, c, _)| (i, j, c / mu[i], c / mu[j])).collect();
        let net = FiniteNetwork::from_edges((0..n as u32).collect(), 0, &rev, &[]).unwrap();
        let sol = effective_resistance(&net, &0, &[n as u32 - 1]).unwrap();

        let mut lap = DMatrix::<f64>::zeros(n, n);
        for &(i, j, c, _) in &edges {
            lap[(i, j)] -= c;
            lap[(j, i)] -= c;
            lap[(i, i)] += c;
            lap[(j, j)] += c;
        }
        let grounded = lap.view((0, 0), (n - 1, n - 1)).clone_owned();
        let mut e = DVector::zeros(n - 1);
        e[0] = 1.0;
        let v = grounded.lu().solve(&e).unwrap();
        prop_assert!((sol.resistance - v[0]).abs() <= 1e-10 * v[0]);
    }

    #[test]
    fn stationary_law_matches_dense_null_vector((n, edges) in arb_edges()) {
        let net = FiniteNetwork::from_edges((0..n as u32).collect(), 0, &edges, &[]).unwrap();
        let part = Partition::from_key(&net, |x: &u32| *x);
        let fc = factor_chain(&net, &part, None, LUMP_TOLERANCE).unwrap();
        let st = fc.stationary().unwrap();
        // pi Q = 0, sum pi = 1: replace one equation by the normalization
        let mut a = generator(n, &edges).transpose();
        for j in 0..n {
            a[(n - 1, j)] = 1.0;
        }
        let mut rhs = DVector::zeros(n);
        rhs[n - 1] = 1.0;
        let pi = a.lu().solve(&rhs).unwrap();
        for x in 0..n {
            prop_assert!((st.continuous[x] - pi[x]).abs() < 1e-10);
        }
    }
}

#[test]
fn birth_death_hitting_closed_form() {
    // unit rates on 0..=n, reflected at n: the jump chain needs x(2n - x) steps to reach 0
    let n = 40usize;
    let edges: Vec<_> = (0..n).map(|i| (i, i + 1, 1.0, 1.0)).collect();
    let net = FiniteNetwork::from_edges((0..=n as u32).collect(), 0, &edges, &[]).unwrap();
    let report = hitting_times(&net, &[0], HitMode::Hit).unwrap();
    for x in 0..=n {
        assert_relative_eq!(report.steps[x], (x * (2 * n - x)) as f64, max_relative = 1e-12);
    }
    assert!(report.residual < 1e-10);
}

#[test]
fn reversible_measure_of_biased_path() {
    // mu(x) = (p/q)^x
    let (p, q) = (0.7, 0.3);
    let edges: Vec<_> = (0..10).map(|i| (i, i + 1, p, q)).collect();
    let net = FiniteNetwork::from_edges((0..=10u32).collect(), 0, &edges, &[]).unwrap();
    let rs = reversible_measure(&net).unwrap();
    for (x, mu) in rs.mu.iter().enumerate() {
        assert_relative_eq!(*mu, (p / q).powi(x as i32), max_relative = 1e-12);
    }
}
