use std::borrow::Cow;

use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{FnTable, SegmentedFactorizer, TableValues};
use crate::error::{Error, Result};
use crate::expansions::{choose_truncation, CoefficientSeries, Truncation};
use crate::ramanujan::ramanujan_sum_factored;
use crate::sum::{chunked_exact_sum, ExactSum};

/// Chunk count used by [`brute_force_convolution`]. Any value gives the
/// same bits; this one just keeps all cores busy.
pub const DEFAULT_CHUNKS: usize = 256;
const SEGMENT: u64 = 1 << 16;

pub(crate) fn real_values(t: &FnTable) -> Cow<'_, [f64]> {
    match t.values() {
        TableValues::Real(v) => Cow::Borrowed(v.as_slice()),
        TableValues::Int(v) => Cow::Owned(v.iter().map(|&x| x as f64).collect()),
    }
}

fn check_lengths(f: &FnTable, g: &FnTable, n: u64, h: u64) -> Result<()> {
    f.check_covers(n)?;
    g.check_covers(n.checked_add(h).ok_or(Error::Overflow("N + h"))?)
}

/// `Σ_{n≤N} f(n) g(n+h)`, exactly summed and correctly rounded.
pub fn brute_force_convolution(f: &FnTable, g: &FnTable, n: u64, h: u64) -> Result<f64> {
    brute_force_convolution_chunked(f, g, n, h, DEFAULT_CHUNKS)
}

/// [`brute_force_convolution`] with an explicit chunk count; the result does
/// not depend on it.
pub fn brute_force_convolution_chunked(
    f: &FnTable,
    g: &FnTable,
    n: u64,
    h: u64,
    chunks: usize,
) -> Result<f64> {
    check_lengths(f, g, n, h)?;
    let (fv, gv) = (real_values(f), real_values(g));
    Ok(convolution_range(&fv, &gv, 1, n, h, chunks).value())
}

/// Exact sum of `f(n) g(n+h)` over `lo ≤ n ≤ hi` (tables indexed from 1).
pub(crate) fn convolution_range(
    fv: &[f64],
    gv: &[f64],
    lo: u64,
    hi: u64,
    h: u64,
    chunks: usize,
) -> ExactSum {
    chunked_exact_sum(lo, hi + 1, chunks, |n| {
        fv[n as usize - 1] * gv[(n + h) as usize - 1]
    })
}

/// A truncated main-term series value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MainTerm {
    pub value: f64,
    pub truncation: Truncation,
}

/// `Σ_{r≤R} f̂(r) ĝ(r) w_r(h)` with `w_r(0) = φ(r)` and `w_r(h) = c_r(h)`,
/// `R` chosen by [`choose_truncation`] for `target`.
pub fn main_term(
    f: &CoefficientSeries,
    g: &CoefficientSeries,
    h: u64,
    target: f64,
) -> Result<MainTerm> {
    let truncation = choose_truncation(f, g, h, target)?;
    let ladder = main_term_ladder(f, g, h, truncation.r)?;
    Ok(MainTerm {
        value: *ladder.last().expect("ladder is nonempty"),
        truncation,
    })
}

/// Partial sums of the main-term series at `R = 1, 2, 4, …, r_max`.
/// `r_max` must be a power of two.
pub fn main_term_ladder(
    f: &CoefficientSeries,
    g: &CoefficientSeries,
    h: u64,
    r_max: u64,
) -> Result<Vec<f64>> {
    if !r_max.is_power_of_two() {
        return Err(crate::error::invalid(format!(
            "ladder end must be a power of two, got {r_max}"
        )));
    }
    let factorizer = SegmentedFactorizer::new(r_max)?;
    let levels = r_max.trailing_zeros() as usize;
    // level k covers (2^{k-1}, 2^k], level 0 is r = 1
    let mut pieces = vec![(0usize, 1u64, 1u64)];
    for k in 1..=levels {
        let (lo, hi) = ((1u64 << (k - 1)) + 1, 1u64 << k);
        let mut a = lo;
        while a <= hi {
            let b = (a + SEGMENT - 1).min(hi);
            pieces.push((k, a, b));
            a = b + 1;
        }
    }
    let partials: Vec<ExactSum> = pieces
        .par_iter()
        .map(|&(_, lo, hi)| {
            let mut acc = ExactSum::new();
            factorizer.for_each(lo, hi, |r, factors| {
                let a = f.coeff_factored(r, factors.iter());
                if a == 0.0 {
                    return;
                }
                let b = g.coeff_factored(r, factors.iter());
                if b == 0.0 {
                    return;
                }
                let w = ramanujan_sum_factored(factors.iter(), h);
                acc.add(a * b * w as f64);
            });
            acc
        })
        .collect();
    let mut running = ExactSum::new();
    let mut ladder = Vec::with_capacity(levels + 1);
    let mut level = 0;
    for (&(k, _, _), part) in pieces.iter().zip(&partials) {
        if k != level {
            ladder.push(running.value());
            level = k;
        }
        running.merge(part);
    }
    ladder.push(running.value());
    Ok(ladder)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{build_table, TableKind};
    use crate::expansions::{jordan_series, sigma_series, tail_bound};
    use crate::parseval::constants::{corollary1_constant, delta_constant, sigma_mean_constant};

    fn ones(limit: usize) -> FnTable {
        FnTable::custom("one", TableValues::Int(vec![1; limit])).unwrap()
    }

    #[test]
    fn brute_force_small_examples() {
        assert_eq!(
            brute_force_convolution(&ones(10), &ones(10), 10, 0).unwrap(),
            10.0
        );
        let f = build_table(TableKind::SigmaS { s: -1.0 }, 10).unwrap();
        let v = brute_force_convolution(&f, &f, 3, 0).unwrap();
        assert!((v - (1.0 + 2.25 + 16.0 / 9.0)).abs() < 1e-14);
        assert!((v - 5.0278).abs() < 1e-4);
        assert!(matches!(
            brute_force_convolution(&f, &f, 9, 2),
            Err(Error::OutOfRange { .. })
        ));
        assert!(brute_force_convolution(&f, &f, 11, 0).is_err());
    }

    #[test]
    fn brute_force_is_chunking_invariant() {
        let f = build_table(TableKind::SigmaS { s: -0.5 }, 200_010).unwrap();
        let g = crate::arith::jordan_ratio_table(0.7, 200_010).unwrap();
        let one = brute_force_convolution_chunked(&f, &g, 200_000, 7, 1).unwrap();
        for chunks in [2, 3, 64, 1000] {
            let v = brute_force_convolution_chunked(&f, &g, 200_000, 7, chunks).unwrap();
            assert_eq!(v.to_bits(), one.to_bits(), "{chunks} chunks");
        }
    }

    #[test]
    fn brute_force_near_unshifted_mean() {
        let n = 1_000_000u64;
        let f = build_table(TableKind::SigmaS { s: -1.0 }, n as usize).unwrap();
        let v = brute_force_convolution(&f, &f, n, 0).unwrap();
        let main = n as f64 * sigma_mean_constant(1.0, 1.0).unwrap();
        // error of order (log N)^3
        assert!((v - main).abs() < (n as f64).ln().powi(3), "{v} vs {main}");
    }

    #[test]
    fn main_term_examples() {
        let f = sigma_series(1.0).unwrap();
        let m = main_term(&f, &f, 0, 1e-9).unwrap();
        assert!((m.value - 3.005_142).abs() < 1e-6);
        assert!(m.truncation.tail <= 1e-9 && !m.truncation.capped);
        let m2 = main_term(&f, &f, 2, 1e-10).unwrap();
        let c = corollary1_constant(1.0, 1.0, 2).unwrap();
        assert!((m2.value - c).abs() <= m2.truncation.tail + 1e-12);
        let unit = CoefficientSeries::finite("unit", vec![1.0], 1.0, None).unwrap();
        for h in [0, 1, 12, 97] {
            assert_eq!(main_term(&unit, &unit, h, 1e-9).unwrap().value, 1.0);
        }
    }

    #[test]
    fn sigma_pairs_match_closed_forms() {
        for (s, t) in [(1.0, 1.0), (1.0, 2.0), (0.5, 0.5)] {
            let (f, g) = (sigma_series(s).unwrap(), sigma_series(t).unwrap());
            for h in [1, 2, 6] {
                let m = main_term(&f, &g, h, 1e-9).unwrap();
                let c = corollary1_constant(s, t, h).unwrap();
                assert!(
                    (m.value - c).abs() <= m.truncation.tail + 1e-12 * c,
                    "{s} {t} {h}: {} vs {c}",
                    m.value
                );
            }
        }
    }

    #[test]
    fn jordan_pairs_match_euler_products() {
        for (s, t) in [(1.0, 1.0), (2.0, 1.0), (0.5, 0.5)] {
            let (f, g) = (jordan_series(s).unwrap(), jordan_series(t).unwrap());
            for h in [0, 1, 2, 6] {
                let m = main_term(&f, &g, h, 1e-9).unwrap();
                let d = delta_constant(s, t, h, 1e-10).unwrap();
                assert!(
                    (m.value - d).abs() <= m.truncation.tail + 1e-10,
                    "{s} {t} {h}: {} vs {d}",
                    m.value
                );
            }
        }
    }

    #[test]
    fn ladder_is_consistent_with_direct_truncation() {
        let f = sigma_series(1.5).unwrap();
        let g = jordan_series(1.0).unwrap();
        let ladder = main_term_ladder(&f, &g, 6, 1 << 18).unwrap();
        assert_eq!(ladder.len(), 19);
        let direct: f64 = (1..=1000u64)
            .map(|r| {
                let fac = crate::arith::FactoredInteger::trial_division(r).unwrap();
                let it = || fac.factors().iter().copied();
                f.coeff_factored(r, it())
                    * g.coeff_factored(r, it())
                    * ramanujan_sum_factored(it(), 6) as f64
            })
            .collect::<ExactSum>()
            .value();
        // 1024 is the 10th rung; compare partial sums that share r ≤ 1000
        assert!((ladder[10] - direct).abs() <= tail_bound(&f, &g, 6, 1000));
        assert!(main_term_ladder(&f, &g, 6, 12).is_err());
    }
}
