//! Closed-form main-term constants and the two error envelopes.

use crate::arith::{primes_up_to, sigma_real, zeta, FactoredInteger};
use crate::error::{invalid, Error, Result};
use crate::sum::NeumaierSum;

const ZETA_TOL: f64 = 1e-15;
// π(x) < ROSSER_SCHOENFELD · x / ln x for all x > 1
const ROSSER_SCHOENFELD: f64 = 1.25506;
/// Primes up to this bound enter the Euler products one by one.
const EULER_SPLIT: u64 = 1000;
/// Tolerances below this are raised to it.
pub const MIN_DELTA_TOL: f64 = 1e-13;

fn check_pair(s: f64, t: f64) -> Result<()> {
    if s > 0.0 && t > 0.0 && s.is_finite() && t.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!(
            "s and t must be positive and finite, got s = {s}, t = {t}"
        )))
    }
}

/// `ζ(s+1) ζ(t+1) / ζ(s+t+2) · σ_{-(s+t+1)}(h)` for `h ≥ 1`: the mean of
/// `σ_s(n)/n^s · σ_t(n+h)/(n+h)^t`.
pub fn corollary1_constant(s: f64, t: f64, h: u64) -> Result<f64> {
    check_pair(s, t)?;
    if h == 0 {
        return Err(invalid(
            "the shifted constant needs h >= 1; use sigma_mean_constant for h = 0",
        ));
    }
    let ratio = zeta(s + 1.0, ZETA_TOL)? * zeta(t + 1.0, ZETA_TOL)? / zeta(s + t + 2.0, ZETA_TOL)?;
    let f = FactoredInteger::trial_division(h)?;
    Ok(ratio * sigma_real(&f, -(s + t + 1.0)))
}

/// `ζ(s+1) ζ(t+1) ζ(s+t+1) / ζ(s+t+2)`: the unshifted mean of
/// `σ_s(n)/n^s · σ_t(n)/n^t`, from `Σ_r φ(r)/r^u = ζ(u-1)/ζ(u)`.
pub fn sigma_mean_constant(s: f64, t: f64) -> Result<f64> {
    check_pair(s, t)?;
    Ok(
        zeta(s + 1.0, ZETA_TOL)? * zeta(t + 1.0, ZETA_TOL)? * zeta(s + t + 1.0, ZETA_TOL)?
            / zeta(s + t + 2.0, ZETA_TOL)?,
    )
}

/// Mean of `φ_s(n)/n^s · φ_t(n+h)/(n+h)^t` as an Euler product, to within `tol`.
///
/// With `a = p^{-(s+1)}` and `b = p^{-(t+1)}` the local factor is
/// `1 - a - b + p·ab` for `p | h` and `1 - a - b` otherwise. `h = 0` is
/// treated as divisible by every prime, giving the unshifted mean.
///
/// Primes up to 1000 (and the prime divisors of `h`) are multiplied in
/// directly. The remaining logarithm `Σ_{p>1000} log(1 - x_p)` is expanded
/// as `-Σ_m x_p^m / m`, and each resulting prime sum `Σ_{p>P} p^{-σ}` is
/// evaluated through `Σ_k μ(k)/k · log ζ_{>P}(kσ)`, where `ζ_{>P}` is zeta
/// with the Euler factors of `p ≤ P` removed. All truncations are bounded
/// with `π(x) < 1.25506 x / ln x`.
pub fn delta_constant(s: f64, t: f64, h: u64, tol: f64) -> Result<f64> {
    check_pair(s, t)?;
    if !(tol > 0.0) {
        return Err(invalid(format!("tolerance must be positive, got {tol}")));
    }
    // Δ ≤ 1, so an absolute error ε in log Δ costs at most about ε in Δ
    let tol = 0.5 * tol.max(MIN_DELTA_TOL);
    let (sa, sb) = (s + 1.0, t + 1.0);
    let coprime = |p: f64| p.powf(-sa) + p.powf(-sb);
    let dividing = |p: f64| p.powf(-sa) + p.powf(-sb) - p.powf(-(s + t + 1.0));

    let small = primes_up_to(EULER_SPLIT)?;
    let mut log = NeumaierSum::new();
    for &p in &small {
        let x = if h == 0 || h % p == 0 {
            dividing(p as f64)
        } else {
            coprime(p as f64)
        };
        log.add((-x).ln_1p());
    }
    let terms: Vec<(f64, f64)> = if h == 0 {
        vec![(1.0, sa), (1.0, sb), (-1.0, s + t + 1.0)]
    } else {
        for &(p, _) in FactoredInteger::trial_division(h)?.factors() {
            if p > EULER_SPLIT {
                let pf = p as f64;
                log.add((-dividing(pf)).ln_1p() - (-coprime(pf)).ln_1p());
            }
        }
        vec![(1.0, sa), (1.0, sb)]
    };
    log.add(-neg_log_tail(&terms, &small, EULER_SPLIT, tol)?);
    Ok(log.value().exp())
}

/// Upper bound for `Σ_{p>P} p^{-σ}`, `σ > 1`.
fn prime_tail_bound(sigma: f64, p: u64) -> f64 {
    let pf = p as f64;
    ROSSER_SCHOENFELD * sigma * pf.powf(1.0 - sigma) / ((sigma - 1.0) * pf.ln())
}

/// `Σ_{p>P} -log(1 - x_p)` with `x_p = Σ_j c_j p^{-σ_j}`, all `σ_j > 1`.
fn neg_log_tail(terms: &[(f64, f64)], small: &[u64], split: u64, tol: f64) -> Result<f64> {
    let sigma_min = terms.iter().map(|t| t.1).fold(f64::INFINITY, f64::min);
    let c_total: f64 = terms.iter().map(|t| t.0.abs()).sum();
    // for p > P: |x_p| ≤ X and |x_p| ≤ c_total p^{-σ_min}
    let x_max: f64 = terms
        .iter()
        .map(|&(c, sg)| c.abs() * ((split + 1) as f64).powf(-sg))
        .sum();
    if x_max >= 0.5 {
        return Err(Error::Domain(
            "Euler-product tail does not converge fast enough".into(),
        ));
    }
    let base = c_total * prime_tail_bound(sigma_min, split) / (1.0 - x_max);
    let mut m_max = 1;
    while base * x_max.powi(m_max) > 0.25 * tol {
        m_max += 1;
        if m_max > 200 {
            return Err(Error::Domain(
                "Euler-product tail expansion did not converge".into(),
            ));
        }
    }
    // powers of the polynomial x = Σ c_j p^{-σ_j}, as (coefficient, exponent) lists
    let mut powers: Vec<Vec<(f64, f64)>> = vec![terms.to_vec()];
    for _ in 1..m_max {
        let last = powers.last().expect("nonempty");
        let mut next: Vec<(f64, f64)> = Vec::new();
        for &(c1, e1) in last {
            for &(c2, e2) in terms {
                let e = e1 + e2;
                match next.iter_mut().find(|(_, x)| (x - e).abs() <= 1e-12 * e) {
                    Some(slot) => slot.0 += c1 * c2,
                    None => next.push((c1 * c2, e)),
                }
            }
        }
        powers.push(next);
    }
    let weight: f64 = powers
        .iter()
        .enumerate()
        .map(|(i, poly)| poly.iter().map(|t| t.0.abs()).sum::<f64>() / (i + 1) as f64)
        .sum();
    let per_sum_tol = 0.75 * tol / weight.max(1.0);
    let mut total = NeumaierSum::new();
    for (i, poly) in powers.iter().enumerate() {
        for &(c, e) in poly {
            if c != 0.0 {
                total.add(c * prime_sum_above(e, small, split, per_sum_tol)? / (i + 1) as f64);
            }
        }
    }
    Ok(total.value())
}

/// `Σ_{p>P} p^{-σ}` to within `tol`, from
/// `Σ_{p>P} p^{-σ} = Σ_k μ(k)/k · log ζ_{>P}(kσ)`.
fn prime_sum_above(sigma: f64, small: &[u64], split: u64, tol: f64) -> Result<f64> {
    // log ζ_{>P}(u) ≤ Σ_{p>P} p^{-u}/(1 - p^{-u}) ≤ 2 B(u), and B shrinks by at
    // least P^{-σ} per step in k, so the tail after K is below 4 B((K+1)σ).
    let mut k_max = 1u64;
    while 4.0 * prime_tail_bound((k_max + 1) as f64 * sigma, split) > 0.5 * tol {
        k_max += 1;
    }
    let zeta_tol = (0.5 * tol / k_max as f64).max(ZETA_TOL);
    let mut acc = NeumaierSum::new();
    for k in 1..=k_max {
        let mu = FactoredInteger::trial_division(k)?.mobius();
        if mu == 0 {
            continue;
        }
        let u = k as f64 * sigma;
        let mut log_zeta = NeumaierSum::new();
        log_zeta.add(zeta(u, zeta_tol)?.ln());
        for &p in small {
            log_zeta.add((-(p as f64).powf(-u)).ln_1p());
        }
        acc.add(mu as f64 * log_zeta.value() / k as f64);
    }
    Ok(acc.value())
}

/// Shape of the improved error term, times `scale`:
/// `N^{1-δ} (log N)^{4-2δ}` for `δ < 1`, `(log N)^3` for `δ = 1`, `1` for `δ > 1`.
pub fn error_bound_new(n: f64, delta: f64, scale: f64) -> Result<f64> {
    check_envelope_args(n, delta, scale)?;
    let l = n.ln();
    let shape = if delta < 1.0 {
        n.powf(1.0 - delta) * l.powf(4.0 - 2.0 * delta)
    } else if delta == 1.0 {
        l.powi(3)
    } else {
        1.0
    };
    Ok(scale * shape)
}

/// Shape of the earlier error term, times `scale`:
/// `N^{2/(1+2δ)} (log N)^{(5+2δ)/(1+2δ)}`, defined only for `δ > 1/2`.
pub fn error_bound_old(n: f64, delta: f64, scale: f64) -> Result<f64> {
    check_envelope_args(n, delta, scale)?;
    if delta <= 0.5 {
        return Err(Error::Domain(format!(
            "the earlier error term needs delta > 1/2, got {delta}"
        )));
    }
    let q = 1.0 + 2.0 * delta;
    Ok(scale * n.powf(2.0 / q) * n.ln().powf((5.0 + 2.0 * delta) / q))
}

fn check_envelope_args(n: f64, delta: f64, scale: f64) -> Result<()> {
    if !(n >= 2.0) || !n.is_finite() {
        return Err(invalid(format!("N must be at least 2, got {n}")));
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(invalid(format!("delta must be positive, got {delta}")));
    }
    if !(scale >= 0.0) || !scale.is_finite() {
        return Err(invalid(format!("scale must be nonnegative, got {scale}")));
    }
    Ok(())
}
