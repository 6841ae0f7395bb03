use std::collections::{BTreeMap, BTreeSet};

use irrev::barriers::{self, ThetaChoice};
use irrev::diagonal::{is_free_diagonal, max_free_diagonal, monomial_subrank_power};
use irrev::entropy::{argmax_fq, f_q, fq_max, rho_grid_oracle_dense, rho_upper, search_theta};
use irrev::linalg::{flattening_ranks, rank_exact};
use irrev::{ExactMatrix, Point, Rational, RhoOptions, Support, SupportDistribution, Tensor, Theta};
use proptest::prelude::*;
use proptest::strategy::ValueTree;

fn support_strategy(max_dim: usize, max_points: usize) -> impl Strategy<Value = Support> {
    [1..=max_dim, 1..=max_dim, 1..=max_dim].prop_flat_map(move |dims| {
        let point = [0..dims[0], 0..dims[1], 0..dims[2]];
        prop::collection::btree_set(point, 1..=max_points).prop_map(move |pts| Support::new(dims, pts).unwrap())
    })
}

fn tensor_strategy() -> impl Strategy<Value = Tensor> {
    [2..=3usize, 1..=3usize, 1..=3usize]
        .prop_flat_map(|dims| {
            let point = [0..dims[0], 0..dims[1], 0..dims[2]];
            let value = prop::sample::select(vec![-2i64, -1, 1, 2, 3]);
            let most = 6.min(dims.iter().product());
            (Just(dims), prop::collection::btree_map(point, value, 2..=most), 0..3usize)
        })
        .prop_filter_map("simple tensor", |(dims, entries, turns)| {
            let t = Tensor::new(dims, entries.into_iter().map(|(p, v)| (p, Rational::from_integer(v.into())))).ok()?;
            // so that any leg may be the one forced to have size >= 2
            Some((0..turns).fold(t, |t, _| t.rotate_legs()))
        })
}

fn theta_strategy() -> impl Strategy<Value = Theta> {
    [0.01..1.0f64, 0.01..1.0f64, 0.01..1.0f64].prop_map(|w| Theta::from_weights(w).unwrap())
}

fn rho(s: &Support, th: Theta) -> f64 {
    rho_upper(s, th, &RhoOptions::default()).unwrap().value
}

/// Gaussian elimination modulo 2^61 - 1.
fn rank_mod_p(rows: usize, cols: usize, m: &[Vec<i64>]) -> usize {
    const P: i128 = (1 << 61) - 1;
    let mut a: Vec<Vec<i128>> = m.iter().map(|r| r.iter().map(|&x| (x as i128).rem_euclid(P)).collect()).collect();
    let pow = |mut b: i128, mut e: i128| {
        let mut acc = 1i128;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * b % P;
            }
            b = b * b % P;
            e >>= 1;
        }
        acc
    };
    let mut rank = 0;
    for c in 0..cols {
        let Some(piv) = (rank..rows).find(|&r| a[r][c] != 0) else { continue };
        a.swap(rank, piv);
        let inv = pow(a[rank][c], P - 2);
        for r in 0..rows {
            if r != rank && a[r][c] != 0 {
                let f = a[r][c] * inv % P;
                for x in c..cols {
                    a[r][x] = (a[r][x] - f * a[rank][x]).rem_euclid(P);
                }
            }
        }
        rank += 1;
    }
    rank
}

#[test]
fn rank_matches_mod_p_on_random_matrices() {
    // entries in -3..=3 on at most 6x6: every minor is below 6! * 3^6 < p
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    let strat = (1..=6usize, 1..=6usize).prop_flat_map(|(r, c)| {
        (Just(r), Just(c), prop::collection::vec(prop::collection::vec(-3i64..=3, c), r))
    });
    for _ in 0..100 {
        let (r, c, m) = strat.new_tree(&mut runner).unwrap().current();
        let exact = ExactMatrix::new(
            r,
            c,
            (0..r).flat_map(|i| (0..c).map(move |j| (i, j))).map(|(i, j)| ((i, j), Rational::from_integer(m[i][j].into()))),
        )
        .unwrap();
        assert_eq!(rank_exact(&exact), rank_mod_p(r, c, &m), "{m:?}");
    }
}

#[test]
fn fq_argmax_is_stationary() {
    for q in 1..=20u32 {
        let x = argmax_fq(q).unwrap();
        let qf = f64::from(q);
        assert!(x > 0.0 && x < 1.0 / (3.0 * qf));
        let derivative = qf * ((2.0 / 3.0 - qf * x) * (1.0 / 3.0 - qf * x) / (4.0 * x * x)).log2();
        assert!(derivative.abs() < 1e-9, "q={q}: f'(x) = {derivative}");
        let h = 1e-6 * x;
        let fd = (f_q(q, x + h).unwrap() - f_q(q, x - h).unwrap()) / (2.0 * h);
        assert!(fd.abs() < 1e-5, "q={q}: finite difference {fd}");
        // and it is a maximum on a coarse sweep
        let best = fq_max(q).unwrap();
        for step in 0..=200 {
            let y = f64::from(step) / 200.0 / (3.0 * qf);
            assert!(f_q(q, y).unwrap() <= best + 1e-12);
        }
    }
}

#[test]
fn optimizer_matches_cw_closed_form() {
    for q in 1..=10u32 {
        let s = Tensor::big_cw(q as usize).unwrap().support();
        let r = rho(&s, Theta::uniform());
        assert!((r - fq_max(q).unwrap()).abs() < 1e-6, "q={q}: {r}");
    }
}

#[test]
fn unit_powers_and_theta_search_on_symmetric_support() {
    let s = Tensor::cw(3).unwrap().support();
    let found = search_theta(&s, &RhoOptions::default()).unwrap();
    assert!((found.rho.value - rho(&s, Theta::uniform())).abs() < 1e-8);
}

fn relabel(s: &Support, perms: &[Vec<usize>; 3]) -> Support {
    Support::new(s.dims(), s.points().iter().map(|p| [0, 1, 2].map(|a| perms[a][p[a]]))).unwrap()
}

fn rotate(s: &Support) -> Support {
    let [n1, n2, n3] = s.dims();
    Support::new([n3, n1, n2], s.points().iter().map(|p| [p[2], p[0], p[1]])).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kron_support_is_multiplicative(s in tensor_strategy(), t in tensor_strategy()) {
        let k = s.kron(&t).unwrap();
        prop_assert_eq!(k.support().len(), s.support().len() * t.support().len());
        prop_assert_eq!(k.support(), s.support().kron(&t.support()).unwrap());
    }

    #[test]
    fn flattening_ranks_multiply_and_add(s in tensor_strategy(), t in tensor_strategy()) {
        let (rs, rt) = (flattening_ranks(&s), flattening_ranks(&t));
        let k = flattening_ranks(&s.kron(&t).unwrap());
        let d = flattening_ranks(&s.dsum(&t).unwrap());
        for a in 0..3 {
            prop_assert_eq!(k[a], rs[a] * rt[a]);
            prop_assert_eq!(d[a], rs[a] + rt[a]);
        }
    }

    #[test]
    fn rho_is_invariant_under_relabeling(
        s in support_strategy(3, 6),
        th in theta_strategy(),
        seed in any::<u64>(),
    ) {
        let perms = [0, 1, 2].map(|a| {
            let n = s.dims()[a];
            let mut p: Vec<usize> = (0..n).collect();
            // deterministic shuffle from the seed
            for x in (1..n).rev() {
                let y = (seed.rotate_left(7 * a as u32 + x as u32) % (x as u64 + 1)) as usize;
                p.swap(x, y);
            }
            p
        });
        let base = rho(&s, th);
        prop_assert!((rho(&relabel(&s, &perms), th) - base).abs() < 1e-7);
        let [t1, t2, t3] = th.weights();
        let rotated = Theta::new(t3, t1, t2).unwrap_or_else(|_| Theta::from_weights([t3, t1, t2]).unwrap());
        prop_assert!((rho(&rotate(&s), rotated) - base).abs() < 1e-7);
    }

    #[test]
    fn rho_is_additive_under_kron(s in support_strategy(3, 4), t in support_strategy(3, 4), th in theta_strategy()) {
        let k = s.kron(&t).unwrap();
        prop_assert!((rho(&k, th) - rho(&s, th) - rho(&t, th)).abs() < 1e-6);
    }

    #[test]
    fn rho_is_bracketed(s in support_strategy(4, 8), th in theta_strategy()) {
        let r = rho_upper(&s, th, &RhoOptions::default()).unwrap();
        let w = th.weights();
        let dims = s.dims();
        // each marginal has at most min(dim, |S|) atoms
        let cap: f64 = (0..3).map(|a| w[a] * (dims[a].min(s.len()) as f64).log2()).sum();
        prop_assert!(r.value <= cap + 1e-9);
        prop_assert!(r.value >= SupportDistribution::uniform(&s).objective(th) - 1e-12);
        prop_assert!((r.argmax.objective(th) - r.value).abs() < 1e-12);
        prop_assert!(r.residual <= 1e-10);
    }

    #[test]
    fn grid_never_exceeds_optimizer(s in support_strategy(3, 4), th in theta_strategy()) {
        let grid = rho_grid_oracle_dense(&s, th, 24).unwrap();
        prop_assert!(grid <= rho(&s, th) + 1e-9);
    }

    #[test]
    fn objective_is_concave(
        s in support_strategy(3, 8),
        th in theta_strategy(),
        a in prop::collection::vec(0.0..1.0f64, 8),
        b in prop::collection::vec(0.0..1.0f64, 8),
        lambda in 0.0..=1.0f64,
    ) {
        let n = s.len();
        let norm = |v: &[f64]| {
            let v: Vec<f64> = v[..n].iter().map(|x| x + 1e-3).collect();
            let sum: f64 = v.iter().sum();
            let mut v: Vec<f64> = v.iter().map(|x| x / sum).collect();
            let drift = 1.0 - v.iter().sum::<f64>();
            v[0] += drift;
            v
        };
        let (pa, pb) = (norm(&a), norm(&b));
        let mix: Vec<f64> = pa.iter().zip(&pb).map(|(x, y)| lambda * x + (1.0 - lambda) * y).collect();
        let value = |p: Vec<f64>| SupportDistribution::new(&s, p).map(|d| d.objective(th));
        if let (Ok(va), Ok(vb), Ok(vm)) = (value(pa), value(pb), value(mix)) {
            prop_assert!(vm >= lambda * va + (1.0 - lambda) * vb - 1e-12);
        }
    }

    #[test]
    fn free_diagonal_witnesses_and_sandwich(t in tensor_strategy()) {
        let s = t.support();
        let found = max_free_diagonal(&s, 1_000_000);
        prop_assert!(found.exact);
        prop_assert!(is_free_diagonal(&s, &found.witness).unwrap());
        let best = search_theta(&s, &RhoOptions::with_tol(1e-10)).unwrap();
        prop_assert!((found.size as f64).log2() <= best.rho.value + 1e-9);
        prop_assert!((found.size as f64).log2() <= rho(&s, Theta::uniform()) + 1e-9);
    }
}

/// Every subset check, for cross-validating the branch-and-bound on tiny supports.
fn brute_force_free_diagonal(s: &Support) -> usize {
    let pts = s.points();
    let n = pts.len();
    assert!(n <= 16);
    let mut best = 0;
    for mask in 1u32..(1 << n) {
        let chosen: Vec<Point> = (0..n).filter(|x| mask >> x & 1 == 1).map(|x| pts[x]).collect();
        if chosen.len() <= best {
            continue;
        }
        let proj: [BTreeSet<usize>; 3] = [0, 1, 2].map(|a| chosen.iter().map(|p| p[a]).collect());
        if proj.iter().any(|p| p.len() != chosen.len()) {
            continue;
        }
        let boxed = pts.iter().filter(|p| (0..3).all(|a| proj[a].contains(&p[a]))).count();
        if boxed == chosen.len() {
            best = chosen.len();
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn branch_and_bound_matches_brute_force(s in support_strategy(4, 12)) {
        let found = max_free_diagonal(&s, u64::MAX);
        prop_assert!(found.exact);
        prop_assert_eq!(found.size, brute_force_free_diagonal(&s));
    }
}

#[test]
fn family_diagonals_match_brute_force() {
    for t in [
        Tensor::matmul(2, 2, 2).unwrap(),
        Tensor::w_state(),
        Tensor::cw(2).unwrap(),
        Tensor::cw(3).unwrap(),
        Tensor::big_cw(1).unwrap(),
        Tensor::group_z3(),
    ] {
        let s = t.support();
        assert_eq!(max_free_diagonal(&s, u64::MAX).size, brute_force_free_diagonal(&s));
    }
}

#[test]
fn supermultiplicativity_and_sandwich_on_powers() {
    let h = irrev::entropy::h_third();
    for (t, k_max) in [(Tensor::w_state(), 3), (Tensor::cw(2).unwrap(), 2)] {
        let sizes: BTreeMap<u32, usize> = (1..=k_max)
            .map(|k| {
                let p = monomial_subrank_power(&t, k, irrev::diagonal::DEFAULT_NODE_BUDGET).unwrap();
                assert!(p.exact);
                (k, p.size)
            })
            .collect();
        for (&k1, &a) in &sizes {
            for (&k2, &b) in &sizes {
                if let Some(&c) = sizes.get(&(k1 + k2)) {
                    assert!(c >= a * b);
                }
            }
        }
        let cap = rho(&t.support(), Theta::uniform());
        for (&k, &size) in &sizes {
            assert!((size as f64).log2() / f64::from(k) <= cap + 1e-9);
        }
    }
    let w2 = monomial_subrank_power(&Tensor::w_state(), 2, u64::MAX).unwrap();
    assert!(w2.size >= 2 && w2.size <= 3);
    assert!(w2.per_copy_rate <= h + 1e-9);
}

#[test]
fn search_theta_never_beats_monomial_bound() {
    let t = Tensor::big_cw(2).unwrap();
    let report = barriers::irr_lower(&t, ThetaChoice::Search, &RhoOptions::default()).unwrap();
    let uniform = barriers::irr_lower(&t, ThetaChoice::default(), &RhoOptions::default()).unwrap();
    assert!(report.irr_lb >= uniform.irr_lb - 1e-9);
}
