//! Strang split-step propagator for the coupled cubic system.
//!
//! One step is a half linear step `e^{-i k^2 dt/2}` on each component, the
//! exact nonlinear phase rotation
//! `u <- u e^{i(|u|^2 + omega |v|^2) dt}`, `v <- v e^{i(|v|^2 + omega |u|^2) dt}`,
//! and another half linear step. Consecutive half steps between recorded
//! samples are merged into full steps.

use std::io::{self, Read, Write};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ComplexField, Grid, Spectral};
use crate::solitons::check_tail;
use crate::tracking::{find_centers, SeparationLaw, TrackedSample, TrajectoryRecord};

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub u: ComplexField,
    pub v: ComplexField,
}

impl SimState {
    pub fn new(t: f64, u: ComplexField, v: ComplexField) -> Result<Self> {
        u.same_grid(&v)?;
        u.check_finite()?;
        v.check_finite()?;
        Ok(Self { t, u, v })
    }

    pub fn grid(&self) -> &Grid {
        self.u.grid()
    }

    /// `sup_x |u(x) - v(-x)|`.
    pub fn symmetry_error(&self) -> f64 {
        let g = self.grid();
        let (u, v) = (self.u.values(), self.v.values());
        (0..g.len())
            .map(|j| (u[j] - v[g.reflect_index(j)]).norm())
            .fold(0.0, f64::max)
    }
}

/// Tracking options of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackingConfig {
    /// Amplitude of the `u` soliton; sets the centroid window and tail check.
    pub c: f64,
    /// Law used for the `y_pred` column.
    pub law: Option<SeparationLaw>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub grid: Grid,
    pub dt: f64,
    pub t_end: f64,
    pub omega: f64,
    /// Steps between recorded samples.
    pub snapshot_stride: usize,
    pub tracking: Option<TrackingConfig>,
    /// Project onto `u(x) = v(-x)` after every nonlinear substep.
    pub enforce_symmetry: bool,
    /// Zero modes with `|m| > N/3` after every linear substep.
    pub dealias: bool,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.omega >= 0.0 && self.omega < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "omega must lie in [0, 1), got {}",
                self.omega
            )));
        }
        if self.snapshot_stride == 0 {
            return Err(Error::InvalidParameter("snapshot stride must be positive".into()));
        }
        let phase = self.dt * self.grid.k_max().powi(2);
        if !phase.is_finite() || phase > 1e12 {
            return Err(Error::InvalidParameter(format!(
                "linear phase dt k_max^2 = {phase:e} is not representable"
            )));
        }
        Ok(())
    }
}

/// Reusable FFT plans and multipliers for one grid, step and coupling.
pub struct Propagator {
    grid: Grid,
    dt: f64,
    omega: f64,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    half: Vec<Complex64>,
    full: Vec<Complex64>,
    enforce_symmetry: bool,
    scratch: Vec<Complex64>,
}

impl Propagator {
    pub fn new(grid: Grid, dt: f64, omega: f64, dealias: bool, enforce_symmetry: bool) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(grid.len());
        let inv = planner.plan_fft_inverse(grid.len());
        let n = grid.len() as f64;
        let cutoff = grid.len() as i64 / 3;
        let keep = |j: usize| !dealias || grid.mode(j).abs() <= cutoff;
        let k = grid.wavenumbers();
        let multiplier = |tau: f64| -> Vec<Complex64> {
            k.iter()
                .enumerate()
                .map(|(j, k)| {
                    if keep(j) {
                        Complex64::from_polar(1.0 / n, -k * k * tau)
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                })
                .collect()
        };
        let scratch_len = fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len());
        Self {
            grid,
            dt,
            omega,
            half: multiplier(0.5 * dt),
            full: multiplier(dt),
            fwd,
            inv,
            enforce_symmetry,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn linear(&mut self, buf: &mut [Complex64], full: bool) {
        self.fwd.process_with_scratch(buf, &mut self.scratch);
        let m = if full { &self.full } else { &self.half };
        for (z, w) in buf.iter_mut().zip(m) {
            *z *= w;
        }
        self.inv.process_with_scratch(buf, &mut self.scratch);
    }

    fn nonlinear(&self, u: &mut [Complex64], v: &mut [Complex64]) {
        let (om, dt) = (self.omega, self.dt);
        for (a, b) in u.iter_mut().zip(v.iter_mut()) {
            let (au, av) = (a.norm_sqr(), b.norm_sqr());
            *a *= Complex64::from_polar(1.0, (au + om * av) * dt);
            *b *= Complex64::from_polar(1.0, (av + om * au) * dt);
        }
        if self.enforce_symmetry {
            let n = u.len();
            for j in 0..n {
                let r = (n - j) % n;
                let s = 0.5 * (u[j] + v[r]);
                u[j] = s;
                v[r] = s;
            }
        }
    }

    /// Advances `state` by `steps` Strang steps.
    pub fn advance(&mut self, state: &mut SimState, steps: usize) -> Result<()> {
        if *state.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        if steps == 0 {
            return Ok(());
        }
        let mut u = std::mem::take(state.u.values_mut_vec());
        let mut v = std::mem::take(state.v.values_mut_vec());
        self.linear(&mut u, false);
        self.linear(&mut v, false);
        for n in 0..steps {
            self.nonlinear(&mut u, &mut v);
            let last = n + 1 == steps;
            self.linear(&mut u, !last);
            self.linear(&mut v, !last);
        }
        *state.u.values_mut_vec() = u;
        *state.v.values_mut_vec() = v;
        state.t += steps as f64 * self.dt;
        Ok(())
    }

    pub fn step(&mut self, state: &mut SimState) -> Result<()> {
        self.advance(state, 1)
    }
}

/// One Strang step without symmetry projection or dealiasing.
pub fn step(state: &SimState, dt: f64, omega: f64) -> Result<SimState> {
    let mut next = state.clone();
    let mut prop = Propagator::new(*state.grid(), dt, omega, false, false);
    prop.step(&mut next)?;
    if let Err(e) = next.u.check_finite().and(next.v.check_finite()) {
        return Err(Error::Numerical(format!(
            "non-finite field after step at t = {}: {e}",
            state.t
        )));
    }
    Ok(next)
}

/// Masses, energy and momentum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Conserved {
    pub mass_u: f64,
    pub mass_v: f64,
    pub energy: f64,
    pub momentum: f64,
}

/// Conserved functionals by spectral differentiation and rectangle-rule
/// quadrature:
/// `E = (1/2) int (|u_x|^2 + |v_x|^2) - (1/4) int (|u|^4 + |v|^4 + 2 omega |u|^2 |v|^2)`,
/// `J = Im int u_x conj(u) + Im int v_x conj(v)`.
pub fn conserved(state: &SimState, omega: f64) -> Conserved {
    let spectral = Spectral::new(*state.grid());
    conserved_with(&spectral, state, omega)
}

fn conserved_with(spectral: &Spectral, state: &SimState, omega: f64) -> Conserved {
    let dx = state.grid().dx();
    let ux = spectral.derivative(&state.u, 1);
    let vx = spectral.derivative(&state.v, 1);
    let (u, v) = (state.u.values(), state.v.values());
    let (mut mu, mut mv, mut kin, mut pot, mut mom) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for j in 0..u.len() {
        let (a, b) = (u[j].norm_sqr(), v[j].norm_sqr());
        let (dux, dvx) = (ux.values()[j], vx.values()[j]);
        mu += a;
        mv += b;
        kin += dux.norm_sqr() + dvx.norm_sqr();
        pot += a * a + b * b + 2.0 * omega * a * b;
        mom += (dux * u[j].conj()).im + (dvx * v[j].conj()).im;
    }
    Conserved {
        mass_u: mu * dx,
        mass_v: mv * dx,
        energy: 0.5 * kin * dx - 0.25 * pot * dx,
        momentum: mom * dx,
    }
}

/// Result of [`run`].
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub record: TrajectoryRecord,
    /// Last state that passed every check.
    pub final_state: SimState,
    /// Reason the run stopped before `t_end`, if it did.
    pub halt: Option<String>,
}

fn sample(
    spectral: &Spectral,
    state: &SimState,
    omega: f64,
    tracking: Option<&TrackingConfig>,
) -> Result<TrackedSample> {
    let cons = conserved_with(spectral, state, omega);
    let (s1, s2) = match tracking {
        Some(tr) => find_centers(&state.u, &state.v, tr.c)?,
        None => (f64::NAN, f64::NAN),
    };
    let y_pred = tracking
        .and_then(|tr| tr.law)
        .map(|law| law.predict(state.t))
        .unwrap_or(f64::NAN);
    Ok(TrackedSample {
        t: state.t,
        sigma1_hat: s1,
        sigma2_hat: s2,
        y: s1 - s2,
        mass_u: cons.mass_u,
        mass_v: cons.mass_v,
        energy: cons.energy,
        momentum: cons.momentum,
        y_pred,
        symmetry_error: state.symmetry_error(),
    })
}

/// Runs from `initial.t` to `config.t_end`, recording every
/// `snapshot_stride` steps and calling `observer` on every recorded state.
///
/// Non-finite fields, tracking failures and tail violations halt the run;
/// the output then holds the last good state and the reason.
pub fn run_with(
    config: &SimConfig,
    initial: SimState,
    mut observer: impl FnMut(&SimState) -> Result<()>,
) -> Result<RunOutput> {
    config.validate()?;
    if *initial.grid() != config.grid {
        return Err(Error::GridMismatch);
    }
    initial.u.check_finite()?;
    initial.v.check_finite()?;
    let spectral = Spectral::new(config.grid);
    let mut prop = Propagator::new(
        config.grid,
        config.dt,
        config.omega,
        config.dealias,
        config.enforce_symmetry,
    );
    let total = ((config.t_end - initial.t) / config.dt).round().max(0.0) as usize;
    let t0 = initial.t;
    let mut record = TrajectoryRecord::default();
    let mut state = initial;
    let mut halt = None;

    let first = sample(&spectral, &state, config.omega, config.tracking.as_ref())?;
    record.samples.push(first);
    observer(&state)?;
    let mut done = 0;
    while done < total {
        let chunk = config.snapshot_stride.min(total - done);
        let mut next = state.clone();
        prop.advance(&mut next, chunk)?;
        done += chunk;
        next.t = t0 + done as f64 * config.dt;
        if next.u.check_finite().is_err() || next.v.check_finite().is_err() {
            halt = Some(format!("non-finite field between t = {} and t = {}", state.t, next.t));
            break;
        }
        let s = match sample(&spectral, &next, config.omega, config.tracking.as_ref()) {
            Ok(s) => s,
            Err(e) => {
                halt = Some(format!("at t = {}: {e}", next.t));
                break;
            }
        };
        if let Some(tr) = &config.tracking {
            let reach = s.sigma1_hat.abs().max(s.sigma2_hat.abs());
            if let Err(e) = check_tail(&config.grid, tr.c, reach) {
                halt = Some(format!("at t = {}: {e}", next.t));
                break;
            }
        }
        state = next;
        record.samples.push(s);
        observer(&state)?;
    }
    Ok(RunOutput {
        record,
        final_state: state,
        halt,
    })
}

/// [`run_with`] without an observer.
pub fn run(config: &SimConfig, initial: SimState) -> Result<RunOutput> {
    run_with(config, initial, |_| Ok(()))
}

/// Writes a snapshot: the text header `NLS2 N L t omega` and a newline, then
/// `N` records of four little-endian `f64` (Re u, Im u, Re v, Im v).
pub fn write_snapshot<W: Write>(mut out: W, state: &SimState, omega: f64) -> io::Result<()> {
    let g = state.grid();
    writeln!(
        out,
        "NLS2 {} {:.16e} {:.16e} {:.16e}",
        g.len(),
        g.half_width(),
        state.t,
        omega
    )?;
    let mut buf = Vec::with_capacity(32 * g.len());
    for (a, b) in state.u.values().iter().zip(state.v.values()) {
        for x in [a.re, a.im, b.re, b.im] {
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
    out.write_all(&buf)
}

/// Reads a snapshot written by [`write_snapshot`]; returns the state and
/// the coupling.
pub fn read_snapshot<R: Read>(mut input: R) -> Result<(SimState, f64)> {
    let mut bytes = Vec::new();
    input
        .read_to_end(&mut bytes)
        .map_err(|e| Error::InvalidParameter(format!("cannot read snapshot: {e}")))?;
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::InvalidParameter("snapshot header missing".into()))?;
    let header = std::str::from_utf8(&bytes[..nl])
        .map_err(|_| Error::InvalidParameter("snapshot header is not text".into()))?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 5 || parts[0] != "NLS2" {
        return Err(Error::InvalidParameter(format!("bad snapshot header: {header}")));
    }
    let bad = |_| Error::InvalidParameter(format!("bad snapshot header: {header}"));
    let n: usize = parts[1].parse().map_err(|_| Error::InvalidParameter(format!("bad snapshot header: {header}")))?;
    let l: f64 = parts[2].parse().map_err(bad)?;
    let t: f64 = parts[3].parse().map_err(bad)?;
    let omega: f64 = parts[4].parse().map_err(bad)?;
    let grid = Grid::new(l, n)?;
    let body = &bytes[nl + 1..];
    if body.len() != 32 * n {
        return Err(Error::InvalidParameter(format!(
            "snapshot body has {} bytes, expected {}",
            body.len(),
            32 * n
        )));
    }
    let f = |i: usize| f64::from_le_bytes(body[8 * i..8 * i + 8].try_into().unwrap());
    let u = (0..n).map(|j| Complex64::new(f(4 * j), f(4 * j + 1))).collect();
    let v = (0..n).map(|j| Complex64::new(f(4 * j + 2), f(4 * j + 3))).collect();
    Ok((
        SimState::new(t, ComplexField::new(grid, u)?, ComplexField::new(grid, v)?)?,
        omega,
    ))
}

/// Writes the tracked trajectory with 17 significant digits.
pub fn write_trajectory_csv<W: Write>(mut out: W, record: &TrajectoryRecord) -> io::Result<()> {
    writeln!(
        out,
        "t,sigma1_hat,sigma2_hat,y,mass_u,mass_v,energy,momentum,y_pred"
    )?;
    for s in &record.samples {
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            s.t, s.sigma1_hat, s.sigma2_hat, s.y, s.mass_u, s.mass_v, s.energy, s.momentum, s.y_pred
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solitons::{ground_state, q};
    use proptest::prelude::*;

    fn gauss(g: Grid, at: f64, k: f64) -> ComplexField {
        ComplexField::from_fn(g, |x| Complex64::from_polar(0.8 * (-(x - at) * (x - at) / 4.0).exp(), k * x))
    }

    #[test]
    fn standing_soliton() {
        let g = Grid::new(20.0, 1024).unwrap();
        let s0 = SimState::new(0.0, ground_state(&g, 1.0, 0.0), ComplexField::zeros(g)).unwrap();
        let mut s = s0.clone();
        let mut p = Propagator::new(g, 1e-3, 0.3, false, false);
        p.advance(&mut s, 1000).unwrap();
        let exact = ComplexField::from_fn(g, |x| Complex64::from_polar(q(x), s.t));
        let err = s.u.sub(&exact).unwrap().l2_norm();
        // Strang splitting error at this dt is 1.18e-6 and scales as dt^2
        assert!(err <= 1.2e-6, "{err:e}");
        let mut fine = s0.clone();
        Propagator::new(g, 5e-4, 0.3, false, false).advance(&mut fine, 2000).unwrap();
        let exact = ComplexField::from_fn(g, |x| Complex64::from_polar(q(x), fine.t));
        let ratio = err / fine.u.sub(&exact).unwrap().l2_norm();
        assert!((3.9..4.1).contains(&ratio), "{ratio}");
        let c = conserved(&s0, 0.3);
        assert!((c.mass_u - 4.0).abs() < 1e-12);
        assert_eq!(c.mass_v, 0.0);
        assert!(c.momentum.abs() < 1e-14);
    }

    #[test]
    fn per_step_mass_is_exact() {
        let g = Grid::new(20.0, 256).unwrap();
        let mut s = SimState::new(0.0, gauss(g, 1.0, 0.5), gauss(g, -2.0, -0.3)).unwrap();
        let mut p = Propagator::new(g, 0.01, 0.6, false, false);
        let m0 = conserved(&s, 0.6);
        for _ in 0..50 {
            p.step(&mut s).unwrap();
            let m = conserved(&s, 0.6);
            assert!(((m.mass_u - m0.mass_u) / m0.mass_u).abs() <= 1e-13);
            assert!(((m.mass_v - m0.mass_v) / m0.mass_v).abs() <= 1e-13);
        }
    }

    #[test]
    fn uncoupled_components_are_independent() {
        let g = Grid::new(20.0, 256).unwrap();
        let (a, b) = (gauss(g, 1.0, 0.5), gauss(g, -2.0, -0.3));
        let mut both = SimState::new(0.0, a.clone(), b.clone()).unwrap();
        let mut only_a = SimState::new(0.0, a, ComplexField::zeros(g)).unwrap();
        let mut only_b = SimState::new(0.0, b, ComplexField::zeros(g)).unwrap();
        let mut p = Propagator::new(g, 0.005, 0.0, false, false);
        p.advance(&mut both, 200).unwrap();
        p.advance(&mut only_a, 200).unwrap();
        p.advance(&mut only_b, 200).unwrap();
        assert!(both.u.sub(&only_a.u).unwrap().sup_norm() <= 1e-12);
        assert!(both.v.sub(&only_b.u).unwrap().sup_norm() <= 1e-12);
    }

    #[test]
    fn merged_steps_match_single_steps() {
        let g = Grid::new(20.0, 256).unwrap();
        let s0 = SimState::new(0.0, gauss(g, 1.0, 0.5), gauss(g, -2.0, -0.3)).unwrap();
        let mut p = Propagator::new(g, 0.01, 0.4, false, false);
        let mut merged = s0.clone();
        p.advance(&mut merged, 20).unwrap();
        let mut single = s0;
        for _ in 0..20 {
            single = step(&single, 0.01, 0.4).unwrap();
        }
        assert!(merged.u.sub(&single.u).unwrap().sup_norm() < 1e-12);
        assert!((merged.t - single.t).abs() < 1e-12);
    }

    #[test]
    fn snapshot_round_trip() {
        let g = Grid::new(10.0, 16).unwrap();
        let s = SimState::new(1.25, gauss(g, 1.0, 0.5), gauss(g, 0.0, 1.0)).unwrap();
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &s, 0.3).unwrap();
        assert!(buf.starts_with(b"NLS2 16 "));
        let (back, om) = read_snapshot(&buf[..]).unwrap();
        assert_eq!(om, 0.3);
        assert_eq!(back, s);
        assert!(read_snapshot(&buf[..buf.len() - 1]).is_err());
    }

    #[test]
    fn run_halts_on_lost_peak() {
        let g = Grid::new(20.0, 256).unwrap();
        let s0 = SimState::new(0.0, ground_state(&g, 1.0, 0.0), ComplexField::zeros(g)).unwrap();
        let cfg = SimConfig {
            grid: g,
            dt: 0.01,
            t_end: 1.0,
            omega: 0.3,
            snapshot_stride: 10,
            tracking: Some(TrackingConfig { c: 1.0, law: None }),
            enforce_symmetry: false,
            dealias: false,
        };
        assert!(matches!(run(&cfg, s0), Err(Error::Tracking(_))));
    }

    proptest! {
        #[test]
        fn phase_rotation_commutes(delta in -3.0f64..3.0) {
            let g = Grid::new(20.0, 256).unwrap();
            let s0 = SimState::new(0.0, gauss(g, 1.0, 0.5), gauss(g, -2.0, -0.3)).unwrap();
            let rot = Complex64::from_polar(1.0, delta);
            let mut a = s0.clone();
            let mut b = SimState::new(0.0, s0.u.scale(rot), s0.v.clone()).unwrap();
            let mut p = Propagator::new(g, 0.01, 0.5, false, false);
            p.advance(&mut a, 50).unwrap();
            p.advance(&mut b, 50).unwrap();
            prop_assert!(b.u.sub(&a.u.scale(rot)).unwrap().sup_norm() < 1e-12);
            prop_assert!(b.v.sub(&a.v).unwrap().sup_norm() < 1e-12);
        }
    }
}
