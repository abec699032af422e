//! Initial data for the two regime runs.
//!
//! The non-symmetric run starts on the exact logarithmic solution of the
//! reduced model. The symmetric run starts on the zero-energy orbit of the
//! measured projected potential: the initial relative speed is
//! `sqrt(2 V)` with `V = 4 int_{sigma0}^inf a(s) ds`, and the start time is
//! the time the formal zero-energy orbit needs to climb from its turning
//! point `sigma = -1/2` to `sigma0`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{ComplexField, Grid};
use crate::interactions::{alpha_c, capital_omega, interaction_at, symmetric_alpha, symmetric_omega};
use crate::reduced_ode::nonsym_exact;
use crate::sim::SimState;
use crate::solitons::{build_ansatz, AnsatzMode, SolitonParams};
use crate::tracking::SeparationLaw;

/// A ready-to-run initial state with the parameters it was built from.
#[derive(Debug, Clone)]
pub struct RegimeSetup {
    pub state: SimState,
    pub params: SolitonParams,
    pub t0: f64,
    pub law: SeparationLaw,
    /// `alpha_c` or `alpha`.
    pub alpha: f64,
    /// `Omega_c` or `Omega`.
    pub omega_cap: f64,
}

/// Zero-energy data of the symmetric reduced dynamics.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Separatrix {
    /// `4 int a` from the measured projections.
    pub potential: f64,
    /// `alpha (2 sigma0 + 1) e^{-2 sigma0}`.
    pub formal_potential: f64,
    /// Initial relative speed `sigma_dot(t0)`.
    pub sigma_dot: f64,
    /// Start time on the formal zero-energy orbit.
    pub t0: f64,
}

fn simpson(a: f64, b: f64, intervals: usize, f: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let n = intervals + intervals % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a)? + f(b)?;
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h)?;
    }
    Ok(acc * h / 3.0)
}

/// Non-symmetric initial data at `t0 = e^{c sigma0} / Omega_c`.
///
/// `sim_grid` carries the run; `a_profile` is the solved profile `A`.
pub fn nonsym_setup(
    sim_grid: &Grid,
    c: f64,
    omega: f64,
    sigma0: f64,
    a_profile: &ComplexField,
) -> Result<RegimeSetup> {
    let alpha = alpha_c(c, omega, a_profile)?.alpha_c;
    let omega_cap = capital_omega(c, alpha);
    let t0 = (c * sigma0).exp() / omega_cap;
    let exact = nonsym_exact(c, omega_cap, t0);
    let params = SolitonParams::nonsymmetric_split(c, omega, exact.sigma, exact.beta);
    let (u, v) = build_ansatz(sim_grid, &params, t0, a_profile, AnsatzMode::Nonsymmetric)?;
    Ok(RegimeSetup {
        state: SimState::new(t0, u, v)?,
        params,
        t0,
        law: SeparationLaw::Nonsym { c, omega_c: omega_cap },
        alpha,
        omega_cap,
    })
}

/// Zero-energy orbit through `sigma0`, with `a` measured on `proj_grid`
/// over `[sigma0, sigma0 + 25]` where the integrand has decayed by `e^{-50}`.
pub fn symmetric_separatrix(
    proj_grid: &Grid,
    omega: f64,
    sigma0: f64,
    b_profile: &ComplexField,
) -> Result<Separatrix> {
    if !(sigma0 > 0.0) {
        return Err(Error::InvalidParameter(format!("sigma0 must be positive, got {sigma0}")));
    }
    let alpha = symmetric_alpha(omega);
    let a = |s: f64| -> Result<f64> {
        Ok(interaction_at(proj_grid, 1.0, omega, s, b_profile, AnsatzMode::Symmetric, 0.0)?.a_measured)
    };
    let potential = 4.0 * simpson(sigma0, sigma0 + 25.0, 200, a)?;
    if !(potential > 0.0) {
        return Err(Error::Numerical(format!(
            "projected potential {potential} is not positive"
        )));
    }
    // t(sigma) = int e^s / sqrt(2 alpha (2s + 1)) ds from -1/2; s = -1/2 + w^2
    let t0 = simpson(0.0, (sigma0 + 0.5).sqrt(), 4000, |w| {
        Ok((w * w - 0.5).exp() / alpha.sqrt())
    })?;
    Ok(Separatrix {
        potential,
        formal_potential: alpha * (2.0 * sigma0 + 1.0) * (-2.0 * sigma0).exp(),
        sigma_dot: (2.0 * potential).sqrt(),
        t0,
    })
}

/// Mirror-symmetric initial data on the measured zero-energy orbit.
pub fn sym_setup(
    sim_grid: &Grid,
    proj_grid: &Grid,
    omega: f64,
    sigma0: f64,
    b_profile: &ComplexField,
) -> Result<(RegimeSetup, Separatrix)> {
    let sep = symmetric_separatrix(proj_grid, omega, sigma0, b_profile)?;
    let params = SolitonParams::symmetric(omega, sigma0, 0.5 * sep.sigma_dot);
    let (u, v) = build_ansatz(sim_grid, &params, sep.t0, b_profile, AnsatzMode::Symmetric)?;
    let omega_cap = symmetric_omega(omega);
    Ok((
        RegimeSetup {
            state: SimState::new(sep.t0, u, v)?,
            params,
            t0: sep.t0,
            law: SeparationLaw::Sym { omega_cap },
            alpha: symmetric_alpha(omega),
            omega_cap,
        },
        sep,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interactions::default_projection_grid;
    use crate::linops::{default_profile_grid, solve_a, solve_b};
    use crate::tracking::find_centers;

    #[test]
    fn nonsym_start_sits_on_the_exact_law() {
        let g = Grid::new(80.0, 2048).unwrap();
        let a = solve_a(0.5, 0.3, &default_profile_grid()).unwrap().field;
        let s = nonsym_setup(&g, 0.5, 0.3, 10.0, &a).unwrap();
        assert!((s.params.separation() - 10.0).abs() < 1e-12);
        assert!((s.law.predict(s.t0) - 10.0).abs() < 1e-12);
        assert!((s.omega_cap - 3.3247).abs() < 1e-3);
        let (c1, c2) = find_centers(&s.state.u, &s.state.v, 0.5).unwrap();
        assert!((c1 - c2 - 10.0).abs() < 0.1);
        // the split keeps the centre of mass at rest
        let p = s.params;
        assert!((2.0 * p.beta1 + 4.0 * p.beta2).abs() < 1e-15);
    }

    #[test]
    fn separatrix_matches_the_formal_orbit_closely() {
        let b = solve_b(0.5, &default_profile_grid()).unwrap().field;
        let sep = symmetric_separatrix(&default_projection_grid(), 0.5, 10.0, &b).unwrap();
        let ratio = sep.potential / sep.formal_potential;
        assert!((ratio - 1.0).abs() < 0.05, "{ratio}");
        // closed form check of the start time against a crude midpoint rule
        let alpha = 16.0f64;
        let m = 200_000;
        let h = 10.5 / m as f64;
        let crude: f64 = (0..m)
            .map(|i| {
                let s = -0.5 + (i as f64 + 0.5) * h;
                s.exp() / (2.0 * alpha * (2.0 * s + 1.0)).sqrt() * h
            })
            .sum();
        assert!((crude - sep.t0).abs() < 1e-3 * sep.t0, "{crude} {}", sep.t0);
    }

    #[test]
    fn sym_start_is_mirror_symmetric() {
        let b = solve_b(0.5, &default_profile_grid()).unwrap().field;
        let g = Grid::new(40.0, 512).unwrap();
        let (s, _) = sym_setup(&g, &default_projection_grid(), 0.5, 10.0, &b).unwrap();
        assert!(s.state.symmetry_error() < 1e-11);
        assert!((s.omega_cap - 8.0).abs() < 1e-14);
    }
}
