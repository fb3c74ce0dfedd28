//! Ramanujan expansions `f(n) = Σ_r f̂(r) c_r(n)` with certified coefficient
//! decay `|f̂(r)| ≤ C / r^{1+δ}`.
//!
//! Two classical families are built in:
//!
//! * `σ_s(n)/n^s = Σ_{d|n} d^{-s}` has `f̂(r) = ζ(s+1) / r^{s+1}`;
//! * `φ_s(n)/n^s = Σ_{d|n} μ(d) d^{-s}` has `f̂(r) = μ(r) / (ζ(s+1) J_{s+1}(r))`.
//!
//! Both follow from `Σ_{d|n} a(d) = Σ_r c_r(n) Σ_m a(rm)/(rm)`. Expansions are
//! not unique in general (the zero function has nontrivial ones), so these
//! are one fixed representation, validated by reconstructing the function
//! values from truncated sums.

use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{multiplicative_table, sigma_real, zeta, ArithTables, FactoredInteger};
use crate::error::{invalid, Result};
use crate::sum::NeumaierSum;

/// Truncation points are powers of two up to `2^MAX_TRUNCATION_LOG2`.
pub const MAX_TRUNCATION_LOG2: u32 = 26;
/// Range over which the Jordan-series envelope constant is measured.
pub const ENVELOPE_SAMPLE: u64 = 10_000;
const ENVELOPE_HEADROOM: f64 = 1.1;
const ZETA_TOL: f64 = 1e-15;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum SeriesKind {
    /// Coefficients of `σ_s(n)/n^s`.
    Sigma { s: f64 },
    /// Coefficients of `φ_s(n)/n^s`.
    Jordan { s: f64 },
    /// Explicit coefficients for `r = 1..=len`, zero beyond.
    Finite { coefficients: Vec<f64> },
}

/// A Ramanujan-coefficient provider with its decay envelope.
#[derive(Clone, Debug, Serialize)]
pub struct CoefficientSeries {
    label: String,
    kind: SeriesKind,
    // ζ(s+1) for sigma, 1/ζ(s+1) for jordan, unused for finite
    #[serde(skip)]
    scale: f64,
    decay_c: f64,
    decay_delta: f64,
}

fn check_exponent(s: f64) -> Result<()> {
    if s > 0.0 && s.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!(
            "series parameter s must be positive and finite, got {s}"
        )))
    }
}

/// Expansion of `σ_s(n)/n^s`: `f̂(r) = ζ(s+1)/r^{s+1}`, envelope `C = ζ(s+1)`, `δ = s`.
pub fn sigma_series(s: f64) -> Result<CoefficientSeries> {
    check_exponent(s)?;
    let z = zeta(s + 1.0, ZETA_TOL)?;
    Ok(CoefficientSeries {
        label: format!("sigma_{s}(n)/n^{s}"),
        kind: SeriesKind::Sigma { s },
        scale: z,
        decay_c: z,
        decay_delta: s,
    })
}

/// Expansion of `φ_s(n)/n^s`: `f̂(r) = μ(r)/(ζ(s+1) J_{s+1}(r))`, `δ = s`.
///
/// The envelope constant is the largest `|f̂(r)| r^{1+s}` over
/// `r ≤ 10^4`, inflated by 10%.
pub fn jordan_series(s: f64) -> Result<CoefficientSeries> {
    check_exponent(s)?;
    let z = zeta(s + 1.0, ZETA_TOL)?;
    let mut series = CoefficientSeries {
        label: format!("phi_{s}(n)/n^{s}"),
        kind: SeriesKind::Jordan { s },
        scale: 1.0 / z,
        decay_c: f64::INFINITY,
        decay_delta: s,
    };
    let coeffs = series.coefficients(ENVELOPE_SAMPLE)?;
    let sup = coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| c.abs() * ((i + 1) as f64).powf(1.0 + s))
        .fold(0.0, f64::max);
    series.decay_c = sup * ENVELOPE_HEADROOM;
    Ok(series)
}

impl CoefficientSeries {
    /// A series with finitely many nonzero coefficients `coefficients[r-1]`.
    ///
    /// With `decay_c = None` the envelope constant is measured from the
    /// coefficients; an explicit constant must dominate them.
    pub fn finite(
        label: impl Into<String>,
        coefficients: Vec<f64>,
        decay_delta: f64,
        decay_c: Option<f64>,
    ) -> Result<Self> {
        if !(decay_delta > 0.0) || !decay_delta.is_finite() {
            return Err(invalid(format!(
                "decay_delta must be positive, got {decay_delta}"
            )));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(invalid("coefficients must be finite"));
        }
        let measured = coefficients
            .iter()
            .enumerate()
            .map(|(i, c)| c.abs() * ((i + 1) as f64).powf(1.0 + decay_delta))
            .fold(0.0, f64::max);
        let decay_c = match decay_c {
            Some(c) if c > 0.0 && c >= measured => c,
            Some(c) => {
                return Err(invalid(format!(
                    "decay_c = {c} does not dominate the coefficients (need at least {measured})"
                )))
            }
            None => measured.max(f64::MIN_POSITIVE),
        };
        Ok(Self {
            label: label.into(),
            kind: SeriesKind::Finite { coefficients },
            scale: 1.0,
            decay_c,
            decay_delta,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn kind(&self) -> &SeriesKind {
        &self.kind
    }

    pub fn decay_c(&self) -> f64 {
        self.decay_c
    }

    pub fn decay_delta(&self) -> f64 {
        self.decay_delta
    }

    /// `f̂(r)`, factoring `r` by trial division when needed.
    pub fn coeff(&self, r: u64) -> Result<f64> {
        if r == 0 {
            return Err(invalid("coefficient index r must be positive"));
        }
        Ok(match &self.kind {
            SeriesKind::Jordan { .. } => {
                let f = FactoredInteger::trial_division(r)?;
                self.coeff_factored(r, f.factors().iter().copied())
            }
            _ => self.coeff_factored(r, std::iter::empty()),
        })
    }

    /// `f̂(r)` given the prime factorization of `r`.
    pub fn coeff_factored<I>(&self, r: u64, factors: I) -> f64
    where
        I: IntoIterator<Item = (u64, u32)>,
    {
        match &self.kind {
            SeriesKind::Sigma { s } => self.scale * (r as f64).powf(-(s + 1.0)),
            SeriesKind::Jordan { s } => {
                // μ(r)/J_{s+1}(r) = ∏_{p|r} -1/(p^{s+1} - 1) for squarefree r
                let mut v = self.scale;
                for (p, e) in factors {
                    if e > 1 {
                        return 0.0;
                    }
                    v /= -((p as f64).powf(s + 1.0) - 1.0);
                }
                v
            }
            SeriesKind::Finite { coefficients } => {
                coefficients.get(r as usize - 1).copied().unwrap_or(0.0)
            }
        }
    }

    /// `f̂(1..=r_max)` computed in bulk.
    pub fn coefficients(&self, r_max: u64) -> Result<Vec<f64>> {
        let n = r_max as usize;
        Ok(match &self.kind {
            SeriesKind::Sigma { s } => (1..=r_max)
                .map(|r| self.scale * (r as f64).powf(-(s + 1.0)))
                .collect(),
            SeriesKind::Jordan { s } => {
                let s1 = s + 1.0;
                let mut v = multiplicative_table(n, 1.0, |p, e, _| {
                    if e == 1 {
                        -1.0 / ((p as f64).powf(s1) - 1.0)
                    } else {
                        0.0
                    }
                })?;
                v.iter_mut().for_each(|x| *x *= self.scale);
                v
            }
            SeriesKind::Finite { coefficients } => {
                let mut v = coefficients.clone();
                v.resize(n, 0.0);
                v
            }
        })
    }

    /// Index of the last nonzero coefficient, if the series is finite.
    pub fn support(&self) -> Option<u64> {
        match &self.kind {
            SeriesKind::Finite { coefficients } => Some(coefficients.len() as u64),
            _ => None,
        }
    }

    /// Checks `|f̂(r)|·r^{1+δ} ≤ C` for every `r ≤ r_max`, up to rounding.
    /// On failure returns the first offending `r` and its ratio.
    pub fn certify_decay(&self, r_max: u64) -> Result<std::result::Result<(), (u64, f64)>> {
        let coeffs = self.coefficients(r_max)?;
        for (i, c) in coeffs.iter().enumerate() {
            let r = (i + 1) as u64;
            let ratio = c.abs() * (r as f64).powf(1.0 + self.decay_delta);
            if ratio > self.decay_c * (1.0 + 1e-12) {
                return Ok(Err((r, ratio)));
            }
        }
        Ok(Ok(()))
    }
}

/// Partial sum `Σ_{r≤R} f̂(r)·c_r(n)` with compensated accumulation.
pub fn truncated_eval(
    series: &CoefficientSeries,
    n: u64,
    r_max: u64,
    tables: &ArithTables,
) -> Result<f64> {
    Ok(truncated_eval_many(series, &[n], r_max, tables)?[0])
}

/// [`truncated_eval`] for many `n` at once, sharing the coefficient vector.
pub fn truncated_eval_many(
    series: &CoefficientSeries,
    ns: &[u64],
    r_max: u64,
    tables: &ArithTables,
) -> Result<Vec<f64>> {
    if r_max == 0 {
        return Err(invalid("truncation R must be at least 1"));
    }
    tables.check_modulus(r_max)?;
    let coeffs = series.coefficients(r_max)?;
    Ok(ns
        .par_iter()
        .map(|&n| {
            let mut acc = NeumaierSum::new();
            for (i, &a) in coeffs.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let r = (i + 1) as u64;
                let d = if n == 0 { r } else { num_integer::gcd(n, r) };
                let q = r / d;
                let c = tables.mobius(q) * (tables.phi(r) / tables.phi(q));
                acc.add(a * c as f64);
            }
            acc.value()
        })
        .collect())
}

/// Bound on `|Σ_{r>R} f̂(r) c_r(n)|` from `|c_r(n)| ≤ σ_1(n)` and the envelope.
pub fn single_tail_bound(series: &CoefficientSeries, n: u64, r_max: u64) -> Result<f64> {
    if n == 0 || r_max == 0 {
        return Err(invalid("n and R must be positive"));
    }
    let sigma1 = sigma_real(&FactoredInteger::trial_division(n)?, 1.0);
    let delta = series.decay_delta;
    Ok(series.decay_c * sigma1 * (r_max as f64).powf(-delta) / delta)
}

/// Certified bound on `|Σ_{r>R} f̂(r) ĝ(r) w_r(h)|`, with `w_r(0) = φ(r)` and
/// `w_r(h) = c_r(h)` otherwise.
///
/// Uses `|f̂ ĝ| ≤ C_f C_g r^{-2-2δ'}`, `δ' = min(δ_f, δ_g)`, then `φ(r) ≤ r`
/// (h = 0) or `|c_r(h)| ≤ σ_1(h)` (h ≥ 1) and `Σ_{r>R} r^{-a} ≤ R^{1-a}/(a-1)`.
///
/// The tail is exactly zero once `R` reaches the support of a finite series.
pub fn tail_bound(f: &CoefficientSeries, g: &CoefficientSeries, h: u64, r_max: u64) -> f64 {
    let support = match (f.support(), g.support()) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    };
    if support.is_some_and(|l| r_max >= l) {
        return 0.0;
    }
    let cc = f.decay_c * g.decay_c;
    let d = f.decay_delta.min(g.decay_delta);
    let r = r_max.max(1) as f64;
    if h == 0 {
        cc * r.powf(-2.0 * d) / (2.0 * d)
    } else {
        let sigma1 = sigma_real(&FactoredInteger::trial_division(h).expect("h >= 1"), 1.0);
        cc * sigma1 * r.powf(-1.0 - 2.0 * d) / (1.0 + 2.0 * d)
    }
}

/// A chosen truncation point and its certified tail.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Truncation {
    pub r: u64,
    pub tail: f64,
    /// The target could not be met below `2^26`; `r` is the cap.
    pub capped: bool,
}

/// Smallest power of two `R ≤ 2^26` with `tail_bound(f, g, h, R) ≤ target`.
/// Unreachable targets return the cap with `capped` set.
pub fn choose_truncation(
    f: &CoefficientSeries,
    g: &CoefficientSeries,
    h: u64,
    target: f64,
) -> Result<Truncation> {
    if !(target > 0.0) {
        return Err(invalid(format!(
            "tail target must be positive, got {target}"
        )));
    }
    for k in 0..=MAX_TRUNCATION_LOG2 {
        let r = 1u64 << k;
        let tail = tail_bound(f, g, h, r);
        if tail <= target {
            return Ok(Truncation {
                r,
                tail,
                capped: false,
            });
        }
    }
    let r = 1u64 << MAX_TRUNCATION_LOG2;
    Ok(Truncation {
        r,
        tail: tail_bound(f, g, h, r),
        capped: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{build_table, TableKind};
    use std::f64::consts::PI;

    fn tables() -> &'static ArithTables {
        static T: std::sync::OnceLock<ArithTables> = std::sync::OnceLock::new();
        T.get_or_init(|| ArithTables::new(1 << 14).unwrap())
    }

    // envelope C = 1 with the given δ and unbounded support
    fn unit(delta: f64) -> CoefficientSeries {
        CoefficientSeries {
            label: "unit".into(),
            kind: SeriesKind::Sigma { s: delta },
            scale: 1.0,
            decay_c: 1.0,
            decay_delta: delta,
        }
    }

    #[test]
    fn sigma_series_values() {
        let f = sigma_series(1.0).unwrap();
        assert!((f.coeff(1).unwrap() - PI * PI / 6.0).abs() < 1e-14);
        assert!((f.decay_c() - 1.644_934).abs() < 1e-6);
        assert_eq!(f.decay_delta(), 1.0);
        assert!(sigma_series(0.0).is_err());
        assert!(sigma_series(-1.0).is_err());
    }

    #[test]
    fn jordan_series_values() {
        let g = jordan_series(1.0).unwrap();
        assert!((g.coeff(1).unwrap() - 6.0 / (PI * PI)).abs() < 1e-14);
        assert!((g.coeff(1).unwrap() - 0.607_927).abs() < 1e-6);
        assert_eq!(g.coeff(4).unwrap(), 0.0);
        // μ(6)/(ζ(2) J_2(6)) with J_2(6) = 24
        assert!((g.coeff(6).unwrap() - 6.0 / (PI * PI) / 24.0).abs() < 1e-15);
        assert!(jordan_series(0.0).is_err());
    }

    #[test]
    fn bulk_and_pointwise_coefficients_agree() {
        for series in [sigma_series(0.5).unwrap(), jordan_series(1.5).unwrap()] {
            let bulk = series.coefficients(3000).unwrap();
            for r in 1..=3000u64 {
                let one = series.coeff(r).unwrap();
                assert!((bulk[r as usize - 1] - one).abs() <= 1e-15 * one.abs());
            }
        }
    }

    #[test]
    fn decay_certificates() {
        for s in [0.5, 1.0, 2.0] {
            for series in [sigma_series(s).unwrap(), jordan_series(s).unwrap()] {
                assert_eq!(
                    series.certify_decay(10_000).unwrap(),
                    Ok(()),
                    "{}",
                    series.label()
                );
            }
        }
        let bad = CoefficientSeries::finite("x", vec![1.0, 1.0], 1.0, None).unwrap();
        assert_eq!(bad.decay_c(), 4.0);
        assert!(CoefficientSeries::finite("x", vec![1.0, 1.0], 1.0, Some(2.0)).is_err());
    }

    #[test]
    fn truncated_eval_examples() {
        let t = tables();
        let f = sigma_series(1.0).unwrap();
        let z2 = PI * PI / 6.0;
        assert!((truncated_eval(&f, 17, 1, t).unwrap() - z2).abs() < 1e-15);
        assert!((truncated_eval(&f, 1, 2, t).unwrap() - z2 * 0.75).abs() < 1e-14);
        assert!((truncated_eval(&f, 1, 2, t).unwrap() - 1.233_700).abs() < 1e-6);
        // σ_1(2)/2 = 1.5 and σ_1(6)/6 = 2
        assert!((truncated_eval(&f, 2, 1 << 14, t).unwrap() - 1.5).abs() < 1e-3);
        assert!((truncated_eval(&f, 6, 10_000, t).unwrap() - 2.0).abs() < 1e-3);
        // n = 1: ζ(2) Σ μ(r)/r² → 1
        assert!((truncated_eval(&f, 1, 1 << 14, t).unwrap() - 1.0).abs() < 1e-4);
        assert!(truncated_eval(&f, 1, 0, t).is_err());
    }

    #[test]
    fn jordan_reconstruction_examples() {
        let t = tables();
        let g1 = jordan_series(1.0).unwrap();
        assert!((truncated_eval(&g1, 1, 1 << 14, t).unwrap() - 1.0).abs() < 1e-4);
        let g2 = jordan_series(2.0).unwrap();
        assert!((truncated_eval(&g2, 6, 10_000, t).unwrap() - 24.0 / 36.0).abs() < 1e-3);
    }

    #[test]
    fn reconstruction_error_decreases_and_is_bounded() {
        let t = tables();
        let ns: Vec<u64> = (1..=1000).collect();
        for s in [0.5, 1.0, 2.0] {
            let sig = build_table(TableKind::SigmaS { s: -s }, 1000).unwrap();
            let jr = crate::arith::jordan_ratio_table(s, 1000).unwrap();
            for (series, exact) in [
                (sigma_series(s).unwrap(), sig),
                (jordan_series(s).unwrap(), jr),
            ] {
                let mut last = f64::INFINITY;
                for k in [8u32, 10, 12, 14] {
                    let r = 1u64 << k;
                    let approx = truncated_eval_many(&series, &ns, r, t).unwrap();
                    let mut worst: f64 = 0.0;
                    for (&n, a) in ns.iter().zip(&approx) {
                        let err = (a - exact.get(n as usize).unwrap()).abs();
                        assert!(err <= single_tail_bound(&series, n, r).unwrap());
                        worst = worst.max(err);
                    }
                    assert!(worst < last, "{} R={r}: {worst} !< {last}", series.label());
                    last = worst;
                }
            }
        }
    }

    #[test]
    fn tail_bound_examples() {
        let one = unit(1.0);
        assert!((tail_bound(&one, &one, 0, 100) - 5e-5).abs() < 1e-18);
        assert!((tail_bound(&one, &one, 2, 100) - 1e-6).abs() < 1e-18);
        for r in [1u64, 8, 1024] {
            let ratio = tail_bound(&one, &one, 0, r) / tail_bound(&one, &one, 0, 2 * r);
            assert!(ratio >= 4.0 * (1.0 - 1e-12));
        }
    }

    #[test]
    fn tail_bound_monotone_nonnegative() {
        let f = sigma_series(0.5).unwrap();
        let g = jordan_series(2.0).unwrap();
        for h in [0, 1, 6] {
            let mut last = f64::INFINITY;
            for r in 1..2000 {
                let t = tail_bound(&f, &g, h, r);
                assert!(t >= 0.0 && t <= last);
                last = t;
            }
        }
    }

    #[test]
    fn choose_truncation_examples() {
        let one = unit(1.0);
        let t = choose_truncation(&one, &one, 0, 5e-5).unwrap();
        assert_eq!(
            t,
            Truncation {
                r: 128,
                tail: tail_bound(&one, &one, 0, 128),
                capped: false
            }
        );
        assert_eq!(choose_truncation(&one, &one, 0, 1.0).unwrap().r, 1);
        let slow = unit(0.1);
        let t = choose_truncation(&slow, &slow, 0, 1e-8).unwrap();
        assert!(t.capped);
        assert_eq!(t.r, 1 << 26);
        assert!(choose_truncation(&one, &one, 0, 0.0).is_err());
        let short = CoefficientSeries::finite("short", vec![1.0, 0.5, 0.25], 1.0, None).unwrap();
        let t = choose_truncation(&short, &sigma_series(1.0).unwrap(), 3, 1e-300).unwrap();
        assert_eq!((t.r, t.tail, t.capped), (4, 0.0, false));
    }
}
