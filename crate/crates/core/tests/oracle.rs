mod common;

use common::{exact_binom_tail, exact_hypergeometric, rel_close, Binomials};
use elliptest::{
    binom_tail, conditional_thresholds, hypergeom_pmf, meta_p_value, meta_threshold, Hypergeometric,
    MetaMode,
};

#[test]
fn hypergeometric_matches_big_rational_enumeration() {
    let b = Binomials::new(60);
    for r in 0..=30usize {
        for m in 0..=30usize {
            for t in 0..=(r + m) {
                let exact = exact_hypergeometric(&b, r, m, t);
                let dist = Hypergeometric::new(r as u64, m as u64, t as u64).unwrap();
                for i in 0..exact.pmf.len() {
                    let ii = i as i64;
                    let pmf = hypergeom_pmf(r as u64, m as u64, t as u64, ii).unwrap().value();
                    assert!(rel_close(pmf, exact.pmf[i], 1e-12), "pmf r={r} m={m} t={t} i={i}");
                    assert!(rel_close(dist.left_tail(ii).value(), exact.left[i], 1e-12));
                    assert!(rel_close(dist.right_tail(ii).value(), exact.right[i], 1e-12));
                }
            }
        }
    }
}

#[test]
fn paper_block_thresholds_match_oracle() {
    let b = Binomials::new(250);
    let exact = exact_hypergeometric(&b, 125, 125, 125);
    let (c1, c2) = conditional_thresholds(125, 125, 125, 0.05).unwrap();
    let (c1, c2) = (c1 as usize, c2 as usize);
    assert!(exact.left[c1] <= 0.025 && exact.left[c1 + 1] > 0.025);
    assert!(exact.right[c2] <= 0.025 && exact.right[c2 - 1] > 0.025);

    // Tails far out in the r = 62, m = 125 configuration used downstream.
    let b = Binomials::new(187);
    for t in [0usize, 1, 40, 93, 150, 187] {
        let exact = exact_hypergeometric(&b, 62, 125, t);
        let dist = Hypergeometric::new(62, 125, t as u64).unwrap();
        for i in 0..exact.pmf.len() {
            if exact.pmf[i] == 0.0 {
                continue;
            }
            assert!(rel_close(dist.left_tail(i as i64).value(), exact.left[i], 1e-11), "t={t} i={i}");
            assert!(rel_close(dist.right_tail(i as i64).value(), exact.right[i], 1e-11), "t={t} i={i}");
        }
    }
}

#[test]
fn binomial_tail_matches_rational_sum() {
    for &(num, den) in &[(1u64, 20u64), (1, 2), (1, 4), (1, 10), (3, 7)] {
        let p = num as f64 / den as f64;
        for n in [1usize, 5, 12, 20] {
            for c in 0..=n {
                let got = binom_tail(n as u64, p, c as i64).unwrap().value();
                let want = exact_binom_tail(n, num, den, c);
                assert!(rel_close(got, want, 1e-12), "n={n} p={p} c={c}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn meta_threshold_size_on_grid() {
    for n in 1..=20u64 {
        for &(num, den) in &[(1u64, 20u64), (1, 10), (1, 4), (1, 2)] {
            let alpha = num as f64 / den as f64;
            for &beta in &[0.01, 0.05, 0.1, 0.5] {
                let c = meta_threshold(n, alpha, beta).unwrap();
                if c <= n {
                    let size = exact_binom_tail(n as usize, num, den, c as usize);
                    assert!(size <= beta, "n={n} alpha={alpha} beta={beta}");
                }
                if c >= 1 {
                    // One step lower must already exceed beta, up to exact ties
                    // that f64 arithmetic cannot resolve.
                    let wider = exact_binom_tail(n as usize, num, den, (c - 1) as usize);
                    assert!(wider > beta * (1.0 - 1e-12), "n={n} alpha={alpha} beta={beta} c={c} wider={wider}");
                }
                for x in 0..=n {
                    if x >= c {
                        assert!(meta_p_value(x, n, alpha, MetaMode::Inclusive).unwrap() <= beta);
                    }
                    let inc = meta_p_value(x, n, alpha, MetaMode::Inclusive).unwrap();
                    let exc = meta_p_value(x, n, alpha, MetaMode::Exclusive).unwrap();
                    let pmf = elliptest::Binomial::new(n, alpha).unwrap().pmf(x as i64).value();
                    assert!((exc - (inc - pmf)).abs() <= 1e-12);
                    if x < n {
                        let next = meta_p_value(x + 1, n, alpha, MetaMode::Inclusive).unwrap();
                        assert!((exc - next).abs() <= 1e-12);
                    }
                }
            }
        }
    }
}
