//! Soliton center tracking and fits of the logarithmic separation laws.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ComplexField;

/// A component must peak at least this many times above its far field.
pub const DOMINANCE: f64 = 5.0;

/// Window radius (in units of `1/c`) of the centroid.
pub const WINDOW_DECAY_LENGTHS: f64 = 10.0;

/// Center of one dominant bump of `|w|`.
///
/// The discrete maximum is refined by a parabola through its two neighbours;
/// the center is the `|w|^4` centroid over `|x - peak| <= 10/c`, using
/// periodic distances.
pub fn center_of(field: &ComplexField, c: f64) -> Result<f64> {
    if !(c > 0.0) {
        return Err(Error::InvalidParameter(format!("c must be positive, got {c}")));
    }
    field.check_finite()?;
    let grid = field.grid();
    let n = grid.len();
    let amp: Vec<f64> = field.values().iter().map(|z| z.norm()).collect();
    let (jmax, &peak) = amp
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("grids are non-empty");
    if peak == 0.0 {
        return Err(Error::Tracking("field vanishes identically".into()));
    }
    let (fm, f0, fp) = (amp[(jmax + n - 1) % n], peak, amp[(jmax + 1) % n]);
    let curv = fm - 2.0 * f0 + fp;
    let shift = if curv < 0.0 { 0.5 * (fm - fp) / curv } else { 0.0 };
    let x_peak = grid.node(jmax) + shift * grid.dx();

    let period = 2.0 * grid.half_width();
    let radius = WINDOW_DECAY_LENGTHS / c;
    let (mut num, mut den, mut far) = (0.0, 0.0, 0.0f64);
    for (j, a) in amp.iter().enumerate() {
        let mut d = grid.node(j) - x_peak;
        d -= period * (d / period).round();
        if d.abs() <= radius {
            let w = a.powi(4);
            num += d * w;
            den += w;
        } else {
            far = far.max(*a);
        }
    }
    if peak < DOMINANCE * far {
        return Err(Error::Tracking(format!(
            "no dominant peak: maximum {peak:.3e} vs far-field level {far:.3e}"
        )));
    }
    let mut center = x_peak + num / den;
    center -= period * ((center + grid.half_width()) / period).floor();
    Ok(center)
}

/// `(sigma1_hat, sigma2_hat)`: centers of the `u` and `v` components.
pub fn find_centers(u: &ComplexField, v: &ComplexField, c: f64) -> Result<(f64, f64)> {
    u.same_grid(v)?;
    Ok((center_of(u, c)?, center_of(v, c)?))
}

/// Separation law the measurements are compared against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SeparationLaw {
    /// `y = (1/c) log t + (1/c) log Omega_c`.
    Nonsym { c: f64, omega_c: f64 },
    /// `y = log t + (1/2) log log t + log Omega`.
    Sym { omega_cap: f64 },
}

impl SeparationLaw {
    pub fn predict(&self, t: f64) -> f64 {
        match *self {
            SeparationLaw::Nonsym { c, omega_c } => (omega_c * t).ln() / c,
            SeparationLaw::Sym { omega_cap } => t.ln() + 0.5 * t.ln().ln() + omega_cap.ln(),
        }
    }

    pub fn slope(&self) -> f64 {
        match *self {
            SeparationLaw::Nonsym { c, .. } => 1.0 / c,
            SeparationLaw::Sym { .. } => 1.0,
        }
    }

    pub fn intercept(&self) -> f64 {
        match *self {
            SeparationLaw::Nonsym { c, omega_c } => omega_c.ln() / c,
            SeparationLaw::Sym { omega_cap } => omega_cap.ln(),
        }
    }

    /// Decay length of the wider soliton.
    pub fn decay_length(&self) -> f64 {
        match *self {
            SeparationLaw::Nonsym { c, .. } => 1.0 / c,
            SeparationLaw::Sym { .. } => 1.0,
        }
    }
}

/// One tracked sample of a simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrackedSample {
    pub t: f64,
    pub sigma1_hat: f64,
    pub sigma2_hat: f64,
    pub y: f64,
    pub mass_u: f64,
    pub mass_v: f64,
    pub energy: f64,
    pub momentum: f64,
    pub y_pred: f64,
    /// `sup |u(x) - v(-x)|`.
    pub symmetry_error: f64,
}

/// Time series of tracked quantities.
#[derive(Debug, Clone, Default, Serialize)]
pub struct TrajectoryRecord {
    pub samples: Vec<TrackedSample>,
}

impl TrajectoryRecord {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn separations(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.y).collect()
    }

    /// Samples with `t_min <= t <= t_max`.
    pub fn window(&self, t_min: f64, t_max: f64) -> TrajectoryRecord {
        TrajectoryRecord {
            samples: self
                .samples
                .iter()
                .filter(|s| s.t >= t_min && s.t <= t_max)
                .copied()
                .collect(),
        }
    }

    /// Checks strictly increasing times and finite separations.
    pub fn validate(&self) -> Result<()> {
        for w in self.samples.windows(2) {
            if !(w[1].t > w[0].t) {
                return Err(Error::Tracking(format!(
                    "times not increasing at t = {}",
                    w[1].t
                )));
            }
        }
        if self.samples.iter().any(|s| !s.y.is_finite()) {
            return Err(Error::Tracking("non-finite separation".into()));
        }
        Ok(())
    }

    /// Largest `|q(t) - q(t0)| / |q(t0)|` over the record for a quantity.
    pub fn relative_drift(&self, f: impl Fn(&TrackedSample) -> f64) -> f64 {
        let Some(first) = self.samples.first() else {
            return 0.0;
        };
        let q0 = f(first);
        let scale = if q0 != 0.0 { q0.abs() } else { 1.0 };
        self.samples
            .iter()
            .map(|s| (f(s) - q0).abs() / scale)
            .fold(0.0, f64::max)
    }
}

/// Model for [`fit_log`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FitModel {
    /// `y = p log t + q`; coefficients `[p, q]`.
    PureLog,
    /// `y = p log t + r log log t + q`; coefficients `[p, r, q]`.
    LogPlusLogLog,
    /// `y = slope log t + r log log t + q` with the slope held fixed;
    /// coefficients `[r, q]`.
    LogLogFixedSlope { slope: f64 },
}

impl FitModel {
    pub fn name(&self) -> &'static str {
        match self {
            FitModel::PureLog => "pure_log",
            FitModel::LogPlusLogLog => "log_plus_loglog",
            FitModel::LogLogFixedSlope { .. } => "loglog_fixed_slope",
        }
    }

    pub fn coefficient_names(&self) -> &'static [&'static str] {
        match self {
            FitModel::PureLog => &["p", "q"],
            FitModel::LogPlusLogLog => &["p", "r", "q"],
            FitModel::LogLogFixedSlope { .. } => &["r", "q"],
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub model: FitModel,
    pub coefficients: Vec<f64>,
    pub residual_rms: f64,
    /// 2-norm condition number of the column-equilibrated design matrix.
    pub condition_number: f64,
    pub window: [f64; 2],
}

impl FitResult {
    pub fn evaluate(&self, t: f64) -> f64 {
        let c = &self.coefficients;
        match self.model {
            FitModel::PureLog => c[0] * t.ln() + c[1],
            FitModel::LogPlusLogLog => c[0] * t.ln() + c[1] * t.ln().ln() + c[2],
            FitModel::LogLogFixedSlope { slope } => slope * t.ln() + c[0] * t.ln().ln() + c[1],
        }
    }
}

pub const MIN_FIT_SAMPLES: usize = 30;
pub const MIN_FIT_SPAN: f64 = 8.0;
pub const MAX_CONDITION: f64 = 1e8;

/// Least-squares fit of a logarithmic law by SVD.
pub fn fit_log(times: &[f64], y: &[f64], model: FitModel) -> Result<FitResult> {
    if times.len() != y.len() {
        return Err(Error::InvalidParameter("times and values differ in length".into()));
    }
    if times.len() < MIN_FIT_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "need at least {MIN_FIT_SAMPLES} samples, got {}",
            times.len()
        )));
    }
    if times.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("non-finite sample".into()));
    }
    let t_min = times.iter().copied().fold(f64::INFINITY, f64::min);
    let t_max = times.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let needs_loglog = !matches!(model, FitModel::PureLog);
    if t_min <= 0.0 || (needs_loglog && t_min <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "times must exceed {} for this model, minimum is {t_min}",
            if needs_loglog { 1 } else { 0 }
        )));
    }
    if t_max < MIN_FIT_SPAN * t_min * (1.0 - 1e-12) {
        return Err(Error::IllConditioned(format!(
            "time span factor {:.4} below the required {MIN_FIT_SPAN}",
            t_max / t_min
        )));
    }
    let rows = times.len();
    let (cols, target): (usize, Vec<f64>) = match model {
        FitModel::PureLog => (2, y.to_vec()),
        FitModel::LogPlusLogLog => (3, y.to_vec()),
        FitModel::LogLogFixedSlope { slope } => (
            2,
            times.iter().zip(y).map(|(t, v)| v - slope * t.ln()).collect(),
        ),
    };
    let design = DMatrix::from_fn(rows, cols, |i, j| {
        let lt = times[i].ln();
        match (model, j) {
            (FitModel::PureLog, 0) => lt,
            (FitModel::LogPlusLogLog, 0) => lt,
            (FitModel::LogPlusLogLog, 1) => lt.ln(),
            (FitModel::LogLogFixedSlope { .. }, 0) => lt.ln(),
            _ => 1.0,
        }
    });
    let scales: Vec<f64> = (0..cols).map(|j| design.column(j).norm()).collect();
    let mut scaled = design.clone();
    for (j, s) in scales.iter().enumerate() {
        scaled.column_mut(j).scale_mut(1.0 / s);
    }
    let svd = scaled.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition_number = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition_number <= MAX_CONDITION) {
        return Err(Error::IllConditioned(format!(
            "design condition number {condition_number:.3e} exceeds {MAX_CONDITION:.0e}"
        )));
    }
    let rhs = DVector::from_vec(target.clone());
    let sol = svd
        .solve(&rhs, 0.0)
        .map_err(|e| Error::Numerical(format!("least-squares solve failed: {e}")))?;
    let coefficients: Vec<f64> = sol.iter().zip(&scales).map(|(v, s)| v / s).collect();
    let fitted = &design * DVector::from_vec(coefficients.clone());
    let residual_rms = ((fitted - rhs).norm_squared() / rows as f64).sqrt();
    Ok(FitResult {
        model,
        coefficients,
        residual_rms,
        condition_number,
        window: [t_min, t_max],
    })
}

/// Tolerances of a regime comparison. `None` disables a check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeTolerances {
    /// Relative tolerance on the fitted slope.
    pub slope_rel: Option<f64>,
    /// Intercept tolerance in units of the decay length.
    pub intercept_decay_lengths: Option<f64>,
    /// Accepted range of the log log coefficient (symmetric law).
    pub loglog_range: Option<[f64; 2]>,
    pub mass_drift: Option<f64>,
    pub energy_drift: Option<f64>,
    /// Bound on `sup |u(x) - v(-x)|`.
    pub symmetry: Option<f64>,
}

impl Default for RegimeTolerances {
    fn default() -> Self {
        Self {
            slope_rel: Some(0.15),
            intercept_decay_lengths: None,
            loglog_range: Some([0.25, 0.75]),
            mass_drift: Some(1e-10),
            energy_drift: Some(1e-6),
            symmetry: None,
        }
    }
}

/// One named check of a regime report.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub expected: String,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegimeReport {
    pub law: SeparationLaw,
    pub predicted_slope: f64,
    pub predicted_intercept: f64,
    /// Pure-log fit of the measured separation.
    pub pure_log: FitResult,
    /// Log log coefficient fit (symmetric law only), slope fixed at 1.
    pub loglog: Option<FitResult>,
    /// Unconstrained three-coefficient fit, reported for reference.
    pub loglog_free: Option<FitResult>,
    pub max_prediction_gap: f64,
    pub mass_u_drift: f64,
    pub mass_v_drift: f64,
    pub energy_drift: f64,
    pub max_symmetry_error: f64,
    pub checks: Vec<Check>,
    pub pass: bool,
}

/// Compares a tracked record with a separation law.
pub fn regime_report(
    record: &TrajectoryRecord,
    law: SeparationLaw,
    tol: &RegimeTolerances,
) -> Result<RegimeReport> {
    record.validate()?;
    let times = record.times();
    let ys = record.separations();
    let pure_log = fit_log(&times, &ys, FitModel::PureLog)?;
    let (loglog, loglog_free) = match law {
        SeparationLaw::Sym { .. } => (
            Some(fit_log(&times, &ys, FitModel::LogLogFixedSlope { slope: 1.0 })?),
            fit_log(&times, &ys, FitModel::LogPlusLogLog).ok(),
        ),
        SeparationLaw::Nonsym { .. } => (None, None),
    };
    let max_prediction_gap = record
        .samples
        .iter()
        .map(|s| (s.y - law.predict(s.t)).abs())
        .fold(0.0, f64::max);
    let mass_u_drift = record.relative_drift(|s| s.mass_u);
    let mass_v_drift = record.relative_drift(|s| s.mass_v);
    let energy_drift = record.relative_drift(|s| s.energy);
    let max_symmetry_error = record
        .samples
        .iter()
        .map(|s| s.symmetry_error)
        .fold(0.0, f64::max);

    let mut checks = Vec::new();
    if let (Some(rel), SeparationLaw::Nonsym { .. }) = (tol.slope_rel, law) {
        let p = pure_log.coefficients[0];
        checks.push(Check {
            name: "slope".into(),
            measured: p,
            expected: format!("{} within {}%", law.slope(), rel * 100.0),
            pass: ((p - law.slope()) / law.slope()).abs() <= rel,
        });
    }
    if let Some(k) = tol.intercept_decay_lengths {
        let (q, expected) = match (&loglog, law) {
            (Some(fit), SeparationLaw::Sym { .. }) => (fit.coefficients[1], law.intercept()),
            _ => (pure_log.coefficients[1], law.intercept()),
        };
        checks.push(Check {
            name: "intercept".into(),
            measured: q,
            expected: format!("{expected} within {} decay lengths", k),
            pass: (q - expected).abs() <= k * law.decay_length(),
        });
    }
    if let (Some([lo, hi]), Some(fit)) = (tol.loglog_range, &loglog) {
        let r = fit.coefficients[0];
        checks.push(Check {
            name: "loglog_coefficient".into(),
            measured: r,
            expected: format!("[{lo}, {hi}]"),
            pass: r >= lo && r <= hi,
        });
    }
    if let Some(m) = tol.mass_drift {
        let drift = mass_u_drift.max(mass_v_drift);
        checks.push(Check {
            name: "mass_drift".into(),
            measured: drift,
            expected: format!("<= {m:e}"),
            pass: drift <= m,
        });
    }
    if let Some(e) = tol.energy_drift {
        checks.push(Check {
            name: "energy_drift".into(),
            measured: energy_drift,
            expected: format!("<= {e:e}"),
            pass: energy_drift <= e,
        });
    }
    if let Some(s) = tol.symmetry {
        checks.push(Check {
            name: "symmetry".into(),
            measured: max_symmetry_error,
            expected: format!("<= {s:e}"),
            pass: max_symmetry_error <= s,
        });
    }
    let pass = checks.iter().all(|c| c.pass);
    Ok(RegimeReport {
        law,
        predicted_slope: law.slope(),
        predicted_intercept: law.intercept(),
        pure_log,
        loglog,
        loglog_free,
        max_prediction_gap,
        mass_u_drift,
        mass_v_drift,
        energy_drift,
        max_symmetry_error,
        checks,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::solitons::q_scaled;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn bump(g: Grid, c: f64, at: f64, phase: impl Fn(f64) -> f64) -> ComplexField {
        ComplexField::from_fn(g, |x| Complex64::from_polar(q_scaled(c, x - at), phase(x)))
    }

    #[test]
    fn center_of_symmetric_bump() {
        let g = Grid::new(40.0, 2048).unwrap();
        let f = bump(g, 0.5, 3.0, |x| 0.3 * x * x);
        let c = center_of(&f, 0.5).unwrap();
        assert!((c - 3.0).abs() <= g.dx() * g.dx(), "{c}");
    }

    #[test]
    fn two_peaks_are_rejected() {
        let g = Grid::new(40.0, 2048).unwrap();
        let f = ComplexField::from_real_fn(g, |x| q_scaled(1.0, x - 10.0) + 0.8 * q_scaled(1.0, x + 15.0));
        assert!(matches!(center_of(&f, 1.0), Err(Error::Tracking(_))));
        assert!(center_of(&ComplexField::zeros(g), 1.0).is_err());
    }

    #[test]
    fn synthetic_pure_log_fit() {
        let times: Vec<f64> = (0..40).map(|i| 10.0 * 1.08f64.powi(i)).collect();
        let y: Vec<f64> = times.iter().map(|t| 2.0 * t.ln() + 3.0).collect();
        let fit = fit_log(&times, &y, FitModel::PureLog).unwrap();
        assert!((fit.coefficients[0] - 2.0).abs() < 1e-10);
        assert!((fit.coefficients[1] - 3.0).abs() < 1e-10);
        assert!(fit.residual_rms < 1e-12);
    }

    #[test]
    fn fit_preconditions() {
        let times: Vec<f64> = (0..40).map(|i| 10.0 + i as f64 * 0.1).collect();
        let y = vec![1.0; 40];
        assert!(matches!(fit_log(&times, &y, FitModel::PureLog), Err(Error::IllConditioned(_))));
        assert!(fit_log(&times[..10], &y[..10], FitModel::PureLog).is_err());
        let early: Vec<f64> = (0..40).map(|i| 0.5 + i as f64).collect();
        assert!(fit_log(&early, &y, FitModel::LogPlusLogLog).is_err());
    }

    #[test]
    fn exact_law_passes_report() {
        let law = SeparationLaw::Nonsym { c: 0.5, omega_c: 3.3 };
        let samples = (0..50)
            .map(|i| {
                let t = 50.0 * 1.1f64.powi(i);
                TrackedSample {
                    t,
                    sigma1_hat: 0.0,
                    sigma2_hat: 0.0,
                    y: law.predict(t),
                    mass_u: 2.0,
                    mass_v: 4.0,
                    energy: -1.0,
                    momentum: 0.0,
                    y_pred: law.predict(t),
                    symmetry_error: 0.0,
                }
            })
            .collect();
        let rec = TrajectoryRecord { samples };
        let tol = RegimeTolerances {
            slope_rel: Some(0.01),
            intercept_decay_lengths: Some(0.01),
            ..RegimeTolerances::default()
        };
        let rep = regime_report(&rec, law, &tol).unwrap();
        assert!(rep.pass, "{:?}", rep.checks);
        assert!(rep.max_prediction_gap < 1e-12);
    }

    proptest! {
        #[test]
        fn centers_follow_translation(s in -10.0f64..10.0, at in -5.0f64..5.0) {
            let g = Grid::new(40.0, 1024).unwrap();
            let a = center_of(&bump(g, 1.0, at, |_| 0.0), 1.0).unwrap();
            let b = center_of(&bump(g, 1.0, at + s, |_| 0.0), 1.0).unwrap();
            prop_assert!((b - a - s).abs() <= g.dx() * g.dx());
        }

        #[test]
        fn centers_ignore_phase(at in -5.0f64..5.0, k in -3.0f64..3.0) {
            let g = Grid::new(40.0, 1024).unwrap();
            let plain = bump(g, 0.7, at, |_| 0.0);
            let rotated = plain.map_with_x(|x, z| z * Complex64::from_polar(1.0, k * x + 0.2 * x * x));
            prop_assert!((center_of(&plain, 0.7).unwrap() - center_of(&rotated, 0.7).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn fit_round_trip(p in 0.5f64..3.0, r in -1.0f64..1.0, q in -5.0f64..5.0) {
            let times: Vec<f64> = (0..60).map(|i| 20.0 * 1.06f64.powi(i)).collect();
            let y: Vec<f64> = times.iter().map(|t| p * t.ln() + r * t.ln().ln() + q).collect();
            let fit = fit_log(&times, &y, FitModel::LogPlusLogLog).unwrap();
            prop_assert!((fit.coefficients[0] - p).abs() < 1e-8);
            prop_assert!((fit.coefficients[1] - r).abs() < 1e-7);
            prop_assert!((fit.coefficients[2] - q).abs() < 1e-7);
        }
    }
}
