//! Reduced modulation systems for the soliton separation.
//!
//! * non-symmetric: `sigma' = 2 beta`, `beta' = -(c+1) alpha_c e^{-2c sigma}`
//! * symmetric: `sigma' = 2 beta`, `beta' = -2 alpha sigma e^{-2 sigma}`
//! * phase-coupled ("book") system, integrated in real variables:
//!   `sigma'' = -c_sigma e^{-sigma} cos gamma`, `gamma'' = c_gamma e^{-sigma} sin gamma`
//!
//! All three are integrated with classical fixed-step RK4. For the book
//! system the state keeps `beta = sigma'/2` so that every model shares the
//! `sigma' = 2 beta` convention.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Separation below which a trajectory is treated as a collision.
pub const COLLAPSE_SIGMA: f64 = -30.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    Nonsym { c: f64, alpha_c: f64 },
    Sym { alpha: f64 },
    Book { c_gamma: f64, c_sigma: f64 },
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            ModelSpec::Nonsym { c, alpha_c } => c > 0.0 && alpha_c > 0.0,
            ModelSpec::Sym { alpha } => alpha > 0.0,
            ModelSpec::Book { c_gamma, c_sigma } => c_gamma > 0.0 && c_sigma > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "model constants must be positive: {self:?}"
            )))
        }
    }

    pub fn is_book(&self) -> bool {
        matches!(self, ModelSpec::Book { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ReducedState {
    pub sigma: f64,
    /// Half of the separation velocity.
    pub beta: f64,
    pub gamma: f64,
    pub gamma_dot: f64,
}

impl ReducedState {
    pub fn new(sigma: f64, beta: f64) -> Self {
        Self {
            sigma,
            beta,
            ..Self::default()
        }
    }

    /// Book-system state from `(sigma, gamma, sigma', gamma')`.
    pub fn book(sigma: f64, gamma: f64, sigma_dot: f64, gamma_dot: f64) -> Self {
        Self {
            sigma,
            beta: 0.5 * sigma_dot,
            gamma,
            gamma_dot,
        }
    }

    pub fn sigma_dot(&self) -> f64 {
        2.0 * self.beta
    }

    fn is_finite(&self) -> bool {
        self.sigma.is_finite()
            && self.beta.is_finite()
            && self.gamma.is_finite()
            && self.gamma_dot.is_finite()
    }

    fn axpy(&self, h: f64, d: &ReducedState) -> ReducedState {
        ReducedState {
            sigma: self.sigma + h * d.sigma,
            beta: self.beta + h * d.beta,
            gamma: self.gamma + h * d.gamma,
            gamma_dot: self.gamma_dot + h * d.gamma_dot,
        }
    }
}

/// Time derivative of the state.
pub fn rhs(model: &ModelSpec, s: &ReducedState) -> ReducedState {
    match *model {
        ModelSpec::Nonsym { c, alpha_c } => ReducedState {
            sigma: 2.0 * s.beta,
            beta: -(c + 1.0) * alpha_c * (-2.0 * c * s.sigma).exp(),
            gamma: 0.0,
            gamma_dot: 0.0,
        },
        ModelSpec::Sym { alpha } => ReducedState {
            sigma: 2.0 * s.beta,
            beta: -2.0 * alpha * s.sigma * (-2.0 * s.sigma).exp(),
            gamma: 0.0,
            gamma_dot: 0.0,
        },
        ModelSpec::Book { c_gamma, c_sigma } => {
            let e = (-s.sigma).exp();
            ReducedState {
                sigma: 2.0 * s.beta,
                beta: -0.5 * c_sigma * e * s.gamma.cos(),
                gamma: s.gamma_dot,
                gamma_dot: c_gamma * e * s.gamma.sin(),
            }
        }
    }
}

/// One classical RK4 step.
pub fn rk4_step(model: &ModelSpec, s: &ReducedState, h: f64) -> ReducedState {
    let k1 = rhs(model, s);
    let k2 = rhs(model, &s.axpy(0.5 * h, &k1));
    let k3 = rhs(model, &s.axpy(0.5 * h, &k2));
    let k4 = rhs(model, &s.axpy(h, &k3));
    ReducedState {
        sigma: s.sigma + h / 6.0 * (k1.sigma + 2.0 * k2.sigma + 2.0 * k3.sigma + k4.sigma),
        beta: s.beta + h / 6.0 * (k1.beta + 2.0 * k2.beta + 2.0 * k3.beta + k4.beta),
        gamma: s.gamma + h / 6.0 * (k1.gamma + 2.0 * k2.gamma + 2.0 * k3.gamma + k4.gamma),
        gamma_dot: s.gamma_dot
            + h / 6.0 * (k1.gamma_dot + 2.0 * k2.gamma_dot + 2.0 * k3.gamma_dot + k4.gamma_dot),
    }
}

/// Recorded samples of a reduced trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub model: ModelSpec,
    pub times: Vec<f64>,
    pub states: Vec<ReducedState>,
    /// Set when the run stopped early on a collision or overflow.
    pub halt: Option<String>,
}

impl Trajectory {
    fn new(model: ModelSpec, t0: f64, s0: ReducedState) -> Self {
        Self {
            model,
            times: vec![t0],
            states: vec![s0],
            halt: None,
        }
    }

    pub fn last(&self) -> (f64, ReducedState) {
        (*self.times.last().unwrap(), *self.states.last().unwrap())
    }

    pub fn sigmas(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.sigma).collect()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn into_result(self) -> Result<Trajectory> {
        match &self.halt {
            Some(detail) => Err(Error::Blowup {
                t: self.last().0,
                detail: detail.clone(),
            }),
            None => Ok(self),
        }
    }
}

fn check_inputs(model: &ModelSpec, s0: &ReducedState, t0: f64, t1: f64, dt: f64) -> Result<()> {
    model.validate()?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    if !(t1 >= t0 && t0.is_finite() && t1.is_finite()) {
        return Err(Error::InvalidParameter(format!("need t0 <= t1, got [{t0}, {t1}]")));
    }
    if !s0.is_finite() {
        return Err(Error::InvalidParameter("non-finite initial state".into()));
    }
    Ok(())
}

fn halted(s: &ReducedState) -> Option<String> {
    if !s.is_finite() {
        Some("state became non-finite".into())
    } else if s.sigma < COLLAPSE_SIGMA {
        Some(format!("separation fell below {COLLAPSE_SIGMA} (collision)"))
    } else {
        None
    }
}

/// Fixed-step integration recording every `stride`-th step and the end point.
/// Stops early (with `halt` set) on collision or overflow.
pub fn integrate_partial(
    model: &ModelSpec,
    state0: ReducedState,
    t0: f64,
    t1: f64,
    dt: f64,
    stride: usize,
) -> Result<Trajectory> {
    check_inputs(model, &state0, t0, t1, dt)?;
    let stride = stride.max(1);
    let steps = ((t1 - t0) / dt).round() as usize;
    let h = if steps > 0 { (t1 - t0) / steps as f64 } else { 0.0 };
    let mut traj = Trajectory::new(*model, t0, state0);
    let mut s = state0;
    for n in 1..=steps {
        s = rk4_step(model, &s, h);
        let t = t0 + n as f64 * h;
        if let Some(reason) = halted(&s) {
            traj.times.push(t);
            traj.states.push(s);
            traj.halt = Some(reason);
            break;
        }
        if n % stride == 0 || n == steps {
            traj.times.push(t);
            traj.states.push(s);
        }
    }
    Ok(traj)
}

/// [`integrate_partial`] with every step recorded; a collision is an error.
pub fn integrate(
    model: &ModelSpec,
    state0: ReducedState,
    t0: f64,
    t1: f64,
    dt: f64,
) -> Result<Trajectory> {
    integrate_partial(model, state0, t0, t1, dt, 1)?.into_result()
}

/// Integration with the step proportional to time: the interval is cut into
/// segments `[t, 2t]`, each integrated with `dt = rel_dt * t` (its start).
/// Records `samples_per_segment` points per segment.
pub fn integrate_log_partial(
    model: &ModelSpec,
    state0: ReducedState,
    t0: f64,
    t1: f64,
    rel_dt: f64,
    samples_per_segment: usize,
) -> Result<Trajectory> {
    if !(t0 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "log-stretched integration needs t0 > 0, got {t0}"
        )));
    }
    check_inputs(model, &state0, t0, t1, rel_dt * t0)?;
    let samples = samples_per_segment.max(1);
    let mut traj = Trajectory::new(*model, t0, state0);
    let mut s = state0;
    let mut t = t0;
    while t < t1 && traj.halt.is_none() {
        let end = (2.0 * t).min(t1);
        let steps = (((end - t) / (rel_dt * t)).ceil() as usize).max(samples);
        let steps = steps.div_ceil(samples) * samples;
        let h = (end - t) / steps as f64;
        let stride = steps / samples;
        for n in 1..=steps {
            s = rk4_step(model, &s, h);
            let tn = t + n as f64 * h;
            if let Some(reason) = halted(&s) {
                traj.times.push(tn);
                traj.states.push(s);
                traj.halt = Some(reason);
                break;
            }
            if n % stride == 0 {
                traj.times.push(tn);
                traj.states.push(s);
            }
        }
        t = end;
    }
    Ok(traj)
}

/// [`integrate_log_partial`] with a collision reported as an error.
pub fn integrate_log(
    model: &ModelSpec,
    state0: ReducedState,
    t0: f64,
    t1: f64,
    rel_dt: f64,
    samples_per_segment: usize,
) -> Result<Trajectory> {
    integrate_log_partial(model, state0, t0, t1, rel_dt, samples_per_segment)?.into_result()
}

/// `g = beta^2 - ((1+c) alpha_c / 2c) e^{-2c sigma}` (non-symmetric) or
/// `H = 2 beta^2 - alpha (2 sigma + 1) e^{-2 sigma}` (symmetric).
pub fn first_integral(model: &ModelSpec, s: &ReducedState) -> Result<f64> {
    match *model {
        ModelSpec::Nonsym { c, alpha_c } => {
            Ok(s.beta * s.beta - (1.0 + c) * alpha_c / (2.0 * c) * (-2.0 * c * s.sigma).exp())
        }
        ModelSpec::Sym { alpha } => Ok(2.0 * s.beta * s.beta
            - alpha * (2.0 * s.sigma + 1.0) * (-2.0 * s.sigma).exp()),
        ModelSpec::Book { .. } => Err(Error::Unsupported(
            "no first integral is implemented for the phase-coupled system".into(),
        )),
    }
}

/// Exact logarithmic solution of the non-symmetric model:
/// `sigma = (1/c) log(Omega_c t)`, `beta = 1/(2ct)`.
pub fn nonsym_exact(c: f64, omega_c: f64, t: f64) -> ReducedState {
    ReducedState::new((omega_c * t).ln() / c, 1.0 / (2.0 * c * t))
}

/// Approximate symmetric law `sigma_0 = log t + (1/2) log log t + log Omega`
/// and `beta_0 = sigma_0'/2`.
pub fn sym_formal(omega_cap: f64, t: f64) -> ReducedState {
    let lt = t.ln();
    let sigma = lt + 0.5 * lt.ln() + omega_cap.ln();
    let sigma_dot = 1.0 / t + 0.5 / (t * lt);
    ReducedState::new(sigma, 0.5 * sigma_dot)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    DivergentLinear,
    Logarithmic,
    BoundedOscillatory,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegimeClassification {
    pub label: Regime,
    /// Least-squares slope of sigma against log t over the second half of the
    /// samples (in log time).
    pub log_slope: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    /// Sign changes of sigma' along the whole trajectory.
    pub sign_changes: usize,
    /// `(t sigma')` at the end divided by its value at the geometric midpoint.
    pub growth_ratio: f64,
    pub note: String,
}

/// Sign changes of sigma' needed to call a trajectory oscillatory
/// (two per period, twenty periods).
pub const MIN_SIGN_CHANGES: usize = 40;

/// Labels a trajectory as linear divergence, logarithmic growth or bounded
/// oscillation, or reports it as inconclusive.
pub fn classify_regime(traj: &Trajectory) -> RegimeClassification {
    let sig = traj.sigmas();
    let sigma_min = sig.iter().copied().fold(f64::INFINITY, f64::min);
    let sigma_max = sig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sign_changes = 0;
    let mut last_sign = 0.0;
    for s in &traj.states {
        let d = s.sigma_dot();
        if d != 0.0 {
            let sg = d.signum();
            if last_sign != 0.0 && sg != last_sign {
                sign_changes += 1;
            }
            last_sign = sg;
        }
    }
    let mut out = RegimeClassification {
        label: Regime::Inconclusive,
        log_slope: f64::NAN,
        sigma_min,
        sigma_max,
        sign_changes,
        growth_ratio: f64::NAN,
        note: String::new(),
    };
    if let Some(reason) = &traj.halt {
        out.note = format!("integration halted: {reason}");
        return out;
    }
    if traj.len() < 8 {
        out.note = "too few samples".into();
        return out;
    }
    let (t_start, t_end) = (traj.times[0], *traj.times.last().unwrap());
    if sign_changes >= MIN_SIGN_CHANGES {
        let width = sigma_max - sigma_min;
        let half = sig.len() / 2;
        let early = sig[..half].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let late = sig[half..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if width.is_finite() && (late - early).abs() <= 0.05 * width.max(1e-12) + 1e-9 {
            out.label = Regime::BoundedOscillatory;
            out.note = format!("{sign_changes} turning points, sigma in [{sigma_min:.6}, {sigma_max:.6}]");
        } else {
            out.note = "oscillating but the envelope drifts".into();
        }
        return out;
    }
    if t_start <= 0.0 || t_end / t_start < 100.0 {
        out.note = "needs t0 > 0 and at least two decades of time".into();
        return out;
    }
    let t_mid = (t_start * t_end).sqrt();
    let j_mid = traj.times.partition_point(|&t| t < t_mid).min(traj.len() - 1);
    let (_, s_end) = traj.last();
    let mid = traj.times[j_mid] * traj.states[j_mid].sigma_dot();
    let end = t_end * s_end.sigma_dot();
    out.growth_ratio = end / mid;
    out.log_slope = log_slope(&traj.times[j_mid..], &sig[j_mid..]);
    let late_monotone = traj.states[j_mid..].iter().all(|s| s.sigma_dot() > 0.0);
    if !late_monotone {
        out.note = "separation not monotonically increasing in the late window".into();
        return out;
    }
    let span = t_end / t_mid;
    if out.growth_ratio >= span.sqrt() {
        out.label = Regime::DivergentLinear;
        out.note = format!("t sigma' grows by {:.3e} over the late window", out.growth_ratio);
    } else if out.growth_ratio > 0.5 && out.growth_ratio < 2.0 {
        out.label = Regime::Logarithmic;
        out.note = format!("sigma ~ {:.6} log t", out.log_slope);
    } else {
        out.note = format!("growth ratio {:.3e} fits neither law", out.growth_ratio);
    }
    out
}

fn log_slope(times: &[f64], sigma: &[f64]) -> f64 {
    let n = times.len() as f64;
    let xs: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = sigma.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(sigma).map(|(x, y)| (x - mx) * (y - my)).sum();
    sxy / sxx
}

/// Writes `t,sigma,beta,[gamma,gamma_dot,]first_integral` rows.
/// The first-integral column is empty for the book model.
pub fn write_trajectory_csv<W: Write>(mut out: W, traj: &Trajectory) -> std::io::Result<()> {
    let book = traj.model.is_book();
    if book {
        writeln!(out, "t,sigma,beta,gamma,gamma_dot,first_integral")?;
    } else {
        writeln!(out, "t,sigma,beta,first_integral")?;
    }
    for (t, s) in traj.times.iter().zip(&traj.states) {
        let fi = first_integral(&traj.model, s)
            .map(|v| format!("{v:.16e}"))
            .unwrap_or_default();
        if book {
            writeln!(
                out,
                "{t:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{fi}",
                s.sigma, s.beta, s.gamma, s.gamma_dot
            )?;
        } else {
            writeln!(out, "{t:.16e},{:.16e},{:.16e},{fi}", s.sigma, s.beta)?;
        }
    }
    Ok(())
}

/// One point of a book-system scan.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BookScanPoint {
    pub gamma0: f64,
    pub sigma_dot0: f64,
    pub gamma_dot0: f64,
    pub label: Regime,
}

/// Scans initial `(gamma(0), sigma'(0), gamma'(0))` with `sigma(0) = 0`,
/// integrating each start over `[1, t_end]`.
pub fn book_scan(
    c_gamma: f64,
    c_sigma: f64,
    gammas: &[f64],
    sigma_dots: &[f64],
    gamma_dots: &[f64],
    t_end: f64,
    dt: f64,
) -> Result<Vec<BookScanPoint>> {
    let model = ModelSpec::Book { c_gamma, c_sigma };
    let mut out = Vec::new();
    for &g in gammas {
        for &sd in sigma_dots {
            for &gd in gamma_dots {
                let s0 = ReducedState::book(0.0, g, sd, gd);
                let stride = ((0.05 / dt).round() as usize).max(1);
                let traj = integrate_partial(&model, s0, 1.0, t_end, dt, stride)?;
                out.push(BookScanPoint {
                    gamma0: g,
                    sigma_dot0: sd,
                    gamma_dot0: gd,
                    label: classify_regime(&traj).label,
                });
            }
        }
    }
    Ok(out)
}
