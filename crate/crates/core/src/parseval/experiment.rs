use std::path::Path;

use serde::{Deserialize, Serialize};

use super::constants::{
    corollary1_constant, delta_constant, error_bound_new, error_bound_old, sigma_mean_constant,
};
use super::convolution::{convolution_range, main_term_ladder, real_values, DEFAULT_CHUNKS};
use super::fit::{fit_exponent, ExponentFit};
use crate::arith::{
    build_table, jordan_ratio_table, FactoredInteger, FnTable, TableKind, TableValues,
    MAX_SIEVE_LIMIT,
};
use crate::error::{invalid, Error, Result};
use crate::expansions::{
    choose_truncation, jordan_series, sigma_series, tail_bound, CoefficientSeries,
};
use crate::sum::ExactSum;

pub const DEFAULT_TAIL_TARGET: f64 = 1e-9;
/// Experiments refuse `N + h` beyond this.
pub const MAX_EXPERIMENT_N: u64 = 100_000_000;
/// Largest coefficient list accepted from a file.
pub const MAX_CUSTOM_COEFFICIENTS: usize = 4096;
/// Allowed growth of the normalized error across the grid.
pub const GROWTH_TOLERANCE: f64 = 0.1;
const DELTA_TOL: f64 = 1e-12;

/// The pair `(f, g)` under test.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "pair", rename_all = "snake_case")]
pub enum PairSpec {
    /// `f = σ_s(n)/n^s`, `g = σ_t(n)/n^t`.
    Sigma { s: f64, t: f64 },
    /// `f = φ_s(n)/n^s`, `g = φ_t(n)/n^t`.
    Jordan { s: f64, t: f64 },
    /// Finite expansions read from a file.
    Custom {
        f: CoefficientSeries,
        g: CoefficientSeries,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CustomSeriesFile {
    label: String,
    decay_delta: f64,
    #[serde(default)]
    decay_c: Option<f64>,
    coefficients: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CustomPairFile {
    f: CustomSeriesFile,
    #[serde(default)]
    g: Option<CustomSeriesFile>,
}

impl CustomSeriesFile {
    fn into_series(self) -> Result<CoefficientSeries> {
        if self.coefficients.is_empty() || self.coefficients.len() > MAX_CUSTOM_COEFFICIENTS {
            return Err(invalid(format!(
                "series '{}' needs between 1 and {MAX_CUSTOM_COEFFICIENTS} coefficients, got {}",
                self.label,
                self.coefficients.len()
            )));
        }
        CoefficientSeries::finite(
            self.label,
            self.coefficients,
            self.decay_delta,
            self.decay_c,
        )
    }
}

impl PairSpec {
    /// Parses a pair file:
    /// `{"f": {"label", "decay_delta", "decay_c"?, "coefficients"}, "g"?: {...}}`.
    /// `coefficients[r-1]` is `f̂(r)`; a missing `g` means `g = f`.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: CustomPairFile = serde_json::from_str(text)?;
        let f = file.f.into_series()?;
        let g = match file.g {
            Some(g) => g.into_series()?,
            None => f.clone(),
        };
        Ok(PairSpec::Custom { f, g })
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn name(&self) -> &'static str {
        match self {
            PairSpec::Sigma { .. } => "sigma",
            PairSpec::Jordan { .. } => "jordan",
            PairSpec::Custom { .. } => "custom",
        }
    }

    /// The `(s, t)` columns: the series parameters, or the decay exponents
    /// for custom pairs.
    pub fn parameters(&self) -> (f64, f64) {
        match self {
            PairSpec::Sigma { s, t } | PairSpec::Jordan { s, t } => (*s, *t),
            PairSpec::Custom { f, g } => (f.decay_delta(), g.decay_delta()),
        }
    }

    pub fn series(&self) -> Result<(CoefficientSeries, CoefficientSeries)> {
        Ok(match self {
            PairSpec::Sigma { s, t } => (sigma_series(*s)?, sigma_series(*t)?),
            PairSpec::Jordan { s, t } => (jordan_series(*s)?, jordan_series(*t)?),
            PairSpec::Custom { f, g } => (f.clone(), g.clone()),
        })
    }

    /// Values of `f` and `g` on `1..=limit`.
    pub fn tables(&self, limit: usize) -> Result<(FnTable, FnTable)> {
        Ok(match self {
            PairSpec::Sigma { s, t } => (
                build_table(TableKind::SigmaS { s: -s }, limit)?,
                build_table(TableKind::SigmaS { s: -t }, limit)?,
            ),
            PairSpec::Jordan { s, t } => (
                jordan_ratio_table(*s, limit)?,
                jordan_ratio_table(*t, limit)?,
            ),
            PairSpec::Custom { f, g } => (
                finite_series_table(f, limit)?,
                finite_series_table(g, limit)?,
            ),
        })
    }
}

/// `f(n) = Σ_{r≤L} f̂(r) c_r(n)` for a finite series, on `1..=limit`.
///
/// Rewrites the sum as `Σ_{d|n, d≤L} b_d` with `b_d = d Σ_{m≤L/d} μ(m) f̂(dm)`
/// and sieves over multiples of `d`.
pub fn finite_series_table(series: &CoefficientSeries, limit: usize) -> Result<FnTable> {
    let support = series
        .support()
        .ok_or_else(|| invalid("series is not finite"))? as usize;
    let coeffs = series.coefficients(support as u64)?;
    let mobius: Vec<i64> = (1..=support as u64)
        .map(|m| FactoredInteger::trial_division(m).map(|f| f.mobius()))
        .collect::<Result<_>>()?;
    let mut values = vec![0.0; limit];
    for d in 1..=support {
        let b = d as f64
            * (1..=support / d)
                .map(|m| mobius[m - 1] as f64 * coeffs[d * m - 1])
                .collect::<ExactSum>()
                .value();
        if b != 0.0 {
            for n in (d..=limit).step_by(d) {
                values[n - 1] += b;
            }
        }
    }
    FnTable::custom(series.label().to_string(), TableValues::Real(values))
}

/// Everything one Parseval experiment needs.
#[derive(Clone, Debug, Serialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub pair: PairSpec,
    pub h: u64,
    pub grid: Vec<u64>,
    /// Per-`N` series tail target is `tail_target · shape(N) / N`, where
    /// `shape` is the improved error envelope with unit constant.
    pub tail_target: f64,
}

impl ExperimentConfig {
    pub fn new(pair: PairSpec, h: u64, grid: Vec<u64>) -> Self {
        Self {
            pair,
            h,
            grid,
            tail_target: DEFAULT_TAIL_TARGET,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(w) = self.grid.windows(2).find(|w| w[1] <= w[0]) {
            return Err(invalid(format!(
                "grid must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        if let Some(&n) = self.grid.first() {
            if n < 2 {
                return Err(invalid(format!("grid values must be at least 2, got {n}")));
            }
        }
        if !(self.tail_target > 0.0) || !self.tail_target.is_finite() {
            return Err(invalid(format!(
                "tail target must be positive, got {}",
                self.tail_target
            )));
        }
        if let PairSpec::Sigma { s, t } | PairSpec::Jordan { s, t } = self.pair {
            if !(s > 0.0 && t > 0.0 && s.is_finite() && t.is_finite()) {
                return Err(invalid(format!(
                    "s and t must be positive, got s = {s}, t = {t}"
                )));
            }
        }
        let top = self
            .grid
            .last()
            .copied()
            .unwrap_or(0)
            .saturating_add(self.h);
        if top > MAX_EXPERIMENT_N {
            return Err(Error::OutOfRange {
                what: "N + h",
                value: top,
                limit: MAX_EXPERIMENT_N,
            });
        }
        Ok(())
    }
}

/// One grid point of an experiment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvolutionReport {
    pub n: u64,
    pub h: u64,
    pub s: f64,
    pub t: f64,
    /// `Σ_{n≤N} f(n) g(n+h)`.
    pub actual: f64,
    /// Truncated series `Σ_{r≤R} f̂(r) ĝ(r) w_r(h)`.
    pub series_value: f64,
    /// `N · series_value`.
    pub main: f64,
    /// `actual − main`.
    pub signed_error: f64,
    /// `signed_error / main`.
    pub relative_error: f64,
    pub bound_new: f64,
    /// `None` when the earlier envelope does not apply (`δ ≤ 1/2`).
    pub bound_old: Option<f64>,
    pub r: u64,
    pub tail: f64,
    pub capped: bool,
}

/// Agreement of the series value with an independent closed form.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrossCheck {
    pub reference_name: &'static str,
    pub reference: f64,
    pub series_value: f64,
    pub difference: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Normalized error `|signed_error| / shape(N)` must not grow by more than
/// 10% over its first value.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthGate {
    pub normalized: Vec<f64>,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentRun {
    pub config: ExperimentConfig,
    pub label_f: String,
    pub label_g: String,
    pub delta: f64,
    pub reports: Vec<ConvolutionReport>,
    /// Fitted constant of the improved envelope (max normalized error).
    pub scale_new: f64,
    pub scale_old: Option<f64>,
    pub growth: GrowthGate,
    pub fit: Option<ExponentFit>,
    /// Why no fit is present, if it is not.
    pub fit_note: Option<String>,
    pub cross_check: Option<CrossCheck>,
}

impl ExperimentRun {
    /// True when every gate passed.
    pub fn passed(&self) -> bool {
        self.growth.passed && self.cross_check.as_ref().map_or(true, |c| c.passed)
    }
}

/// Runs a Parseval experiment: brute-force sums against truncated main terms
/// on every grid point, plus the stability and consistency gates.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentRun> {
    config.validate()?;
    let (f, g) = config.pair.series()?;
    let delta = f.decay_delta().min(g.decay_delta());
    let (s, t) = config.pair.parameters();
    let h = config.h;
    let shape = |n: u64| error_bound_new(n as f64, delta, 1.0);

    let truncations = config
        .grid
        .iter()
        .map(|&n| choose_truncation(&f, &g, h, config.tail_target * shape(n)? / n as f64))
        .collect::<Result<Vec<_>>>()?;
    let r_top = truncations.iter().map(|t| t.r).max().unwrap_or(1);
    let ladder = main_term_ladder(&f, &g, h, r_top)?;

    let mut reports = Vec::with_capacity(config.grid.len());
    if let Some(&n_max) = config.grid.last() {
        let limit = (n_max + h) as usize;
        if limit > MAX_SIEVE_LIMIT {
            return Err(Error::Resource(format!("table limit {limit} too large")));
        }
        let (ft, gt) = config.pair.tables(limit)?;
        let (fv, gv) = (real_values(&ft), real_values(&gt));
        let mut running = ExactSum::new();
        let mut prev = 0;
        for (&n, tr) in config.grid.iter().zip(&truncations) {
            running.merge(&convolution_range(&fv, &gv, prev + 1, n, h, DEFAULT_CHUNKS));
            prev = n;
            let actual = running.value();
            let series_value = ladder[tr.r.trailing_zeros() as usize];
            let main = n as f64 * series_value;
            let signed_error = actual - main;
            reports.push(ConvolutionReport {
                n,
                h,
                s,
                t,
                actual,
                series_value,
                main,
                signed_error,
                relative_error: signed_error / main,
                bound_new: 0.0,
                bound_old: None,
                r: tr.r,
                tail: tr.tail,
                capped: tr.capped,
            });
        }
    }

    let normalized = reports
        .iter()
        .map(|r| Ok(r.signed_error.abs() / shape(r.n)?))
        .collect::<Result<Vec<f64>>>()?;
    let scale_new = normalized.iter().copied().fold(0.0, f64::max);
    let passed = normalized
        .first()
        .map_or(true, |&first| scale_new <= (1.0 + GROWTH_TOLERANCE) * first);
    let scale_old = if delta > 0.5 {
        let mut m: f64 = 0.0;
        for r in &reports {
            m = m.max(r.signed_error.abs() / error_bound_old(r.n as f64, delta, 1.0)?);
        }
        Some(m)
    } else {
        None
    };
    for r in &mut reports {
        r.bound_new = error_bound_new(r.n as f64, delta, scale_new)?;
        r.bound_old = match scale_old {
            Some(c) => Some(error_bound_old(r.n as f64, delta, c)?),
            None => None,
        };
    }

    let (fit, fit_note) = match fit_exponent(&reports) {
        Ok(fit) => (Some(fit), None),
        Err(e @ Error::InsufficientData { .. }) => (None, Some(e.to_string())),
        Err(e) => return Err(e),
    };

    let top_tail = tail_bound(&f, &g, h, r_top);
    let cross_check = cross_check(&config.pair, h, *ladder.last().expect("nonempty"), top_tail)?;

    Ok(ExperimentRun {
        config: config.clone(),
        label_f: f.label().to_string(),
        label_g: g.label().to_string(),
        delta,
        reports,
        scale_new,
        scale_old,
        growth: GrowthGate { normalized, passed },
        fit,
        fit_note,
        cross_check,
    })
}

fn cross_check(
    pair: &PairSpec,
    h: u64,
    series_value: f64,
    tail: f64,
) -> Result<Option<CrossCheck>> {
    let (name, reference, ref_tol) = match *pair {
        PairSpec::Sigma { s, t } if h == 0 => {
            ("sigma_mean_constant", sigma_mean_constant(s, t)?, 0.0)
        }
        PairSpec::Sigma { s, t } => ("corollary1_constant", corollary1_constant(s, t, h)?, 0.0),
        PairSpec::Jordan { s, t } => (
            "delta_constant",
            delta_constant(s, t, h, DELTA_TOL)?,
            DELTA_TOL,
        ),
        PairSpec::Custom { .. } => return Ok(None),
    };
    let tolerance = tail + ref_tol + 1e-12 * reference.abs();
    let difference = series_value - reference;
    Ok(Some(CrossCheck {
        reference_name: name,
        reference,
        series_value,
        difference,
        tolerance,
        passed: difference.abs() <= tolerance,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parseval::brute_force_convolution;

    #[test]
    fn empty_grid_gives_no_reports() {
        let cfg = ExperimentConfig::new(PairSpec::Sigma { s: 1.0, t: 1.0 }, 0, vec![]);
        let run = run_experiment(&cfg).unwrap();
        assert!(run.reports.is_empty());
        assert!(run.fit.is_none() && run.fit_note.is_some());
        assert!(run.passed());
    }

    #[test]
    fn validation() {
        let pair = PairSpec::Sigma { s: 1.0, t: 1.0 };
        let bad = |grid: Vec<u64>| {
            ExperimentConfig::new(pair.clone(), 0, grid)
                .validate()
                .is_err()
        };
        assert!(bad(vec![100, 100]));
        assert!(bad(vec![1000, 100]));
        assert!(bad(vec![1]));
        assert!(bad(vec![MAX_EXPERIMENT_N + 1]));
        let neg = ExperimentConfig::new(PairSpec::Jordan { s: -1.0, t: 1.0 }, 1, vec![10]);
        assert!(neg.validate().is_err());
    }

    #[test]
    fn sigma_unshifted_reports() {
        let cfg =
            ExperimentConfig::new(PairSpec::Sigma { s: 1.0, t: 1.0 }, 0, vec![10_000, 100_000]);
        let run = run_experiment(&cfg).unwrap();
        assert_eq!(run.reports.len(), 2);
        for r in &run.reports {
            assert!((r.main / r.n as f64 - 3.005_142).abs() < 1e-6);
            assert_eq!(r.signed_error, r.actual - r.main);
            assert!(r.tail <= 1e-9 * (r.n as f64).ln().powi(3) / r.n as f64);
            assert!(r.signed_error.abs() <= r.bound_new);
        }
        assert!(run.cross_check.as_ref().unwrap().passed);
        // prefix accumulation equals a fresh sum
        let (ft, _) = cfg.pair.tables(100_000).unwrap();
        assert_eq!(
            brute_force_convolution(&ft, &ft, 10_000, 0).unwrap(),
            run.reports[0].actual
        );
    }

    #[test]
    fn jordan_run_carries_delta_check() {
        let cfg = ExperimentConfig::new(
            PairSpec::Jordan { s: 1.0, t: 1.0 },
            1,
            vec![1000, 10_000, 100_000],
        );
        let run = run_experiment(&cfg).unwrap();
        let c = run.cross_check.unwrap();
        assert_eq!(c.reference_name, "delta_constant");
        assert!(c.passed, "{c:?}");
        assert!(run.fit.is_some());
    }

    #[test]
    fn custom_pair_file() {
        let text = r#"{"f": {"label": "c2", "decay_delta": 1.0, "coefficients": [0.0, 1.0]}}"#;
        let pair = PairSpec::from_json(text).unwrap();
        // c_2(n) = 1 for even n, -1 for odd n
        let (ft, _) = pair.tables(6).unwrap();
        assert_eq!(ft.reals().unwrap(), &[-1.0, 1.0, -1.0, 1.0, -1.0, 1.0]);
        // mean of c_2(n) c_2(n+1) is c_2(1)·[r = 2] = -1 exactly
        let run = run_experiment(&ExperimentConfig::new(pair, 1, vec![10, 100, 1000])).unwrap();
        for r in &run.reports {
            assert_eq!(r.signed_error, 0.0);
            assert_eq!(r.tail, 0.0);
        }
        assert!(run.fit.is_none());
        assert!(PairSpec::from_json(
            r#"{"f": {"label": "x", "decay_delta": 1.0, "coefficients": []}}"#
        )
        .is_err());
        assert!(
            PairSpec::from_json(r#"{"f": {"label": "x", "delta": 1.0, "coefficients": [1]}}"#)
                .is_err()
        );
    }

    #[test]
    fn finite_table_matches_direct_ramanujan_sums() {
        let coeffs = vec![0.5, -0.25, 0.0, 1.0 / 16.0, 0.2, 0.0, 0.0, -0.1];
        let series = CoefficientSeries::finite("mix", coeffs.clone(), 1.0, None).unwrap();
        let t = finite_series_table(&series, 200).unwrap();
        let at = crate::arith::ArithTables::new(16).unwrap();
        for n in 1..=200u64 {
            let want: f64 = coeffs
                .iter()
                .enumerate()
                .map(|(i, a)| {
                    a * crate::ramanujan::ramanujan_sum_holder(i as u64 + 1, n, &at).unwrap() as f64
                })
                .sum();
            assert!((t.get(n as usize).unwrap() - want).abs() < 1e-13);
        }
    }
}
