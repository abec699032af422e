//! Error fields of the two-soliton ansatz, their projections onto the
//! translation directions, and the closed-form interaction constants.
//!
//! In the non-symmetric mode
//!
//! ```text
//! F = 3|P|^2 phi + 3|phi|^2 P + |phi|^2 phi - omega e^{2c(x - sigma1)} |R|^2 P
//! G = omega |P + phi|^2 R
//! a = <F, d1P> / (2c),   b = <G, d2R> / 2
//! ```
//!
//! and the leading-order predictions are `a = alpha_c e^{-2c sigma}`,
//! `b = -c alpha_c e^{-2c sigma}`. The symmetric mode (`c = 1`) adds
//! `omega (2 Re(conj(R) psi) + |psi|^2) P` to `F`; `G` is the mirror image of
//! `F` and the predictions become `a = -b = alpha sigma e^{-2 sigma}` with
//! `alpha = 32 omega`.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{inner, integrate, ComplexField, Grid};
use crate::linops::{apply_with, OperatorKind, OperatorSpec, Representation, forcing_a};
use crate::solitons::{build_parts, exp_weighted_q, AnsatzMode, AnsatzParts, SolitonParams};

/// Error field `F` of the `u` equation.
pub fn f_from_parts(parts: &AnsatzParts) -> ComplexField {
    let prm = parts.params;
    let (c, omega) = (prm.c, prm.omega);
    let grid = *parts.p.grid();
    let vals: Vec<Complex64> = (0..grid.len())
        .map(|j| {
            let x = grid.node(j);
            let p = parts.p.values()[j];
            let phi = parts.phi.values()[j];
            let r = parts.r.values()[j];
            let p2 = p.norm_sqr();
            let phi2 = phi.norm_sqr();
            // e^{2c(x - sigma1)} P, evaluated without the growing exponential
            let weighted_p = if p.norm() > 0.0 {
                p / p.norm() * exp_weighted_q(c, 2.0 * c, x - prm.sigma1)
            } else {
                Complex64::new(0.0, 0.0)
            };
            let mut f = phi * (3.0 * p2) + p * (3.0 * phi2) + phi * phi2
                - weighted_p * (omega * r.norm_sqr());
            if parts.mode == AnsatzMode::Symmetric {
                let psi = parts.psi.values()[j];
                f += p * (omega * (2.0 * (r.conj() * psi).re + psi.norm_sqr()));
            }
            f
        })
        .collect();
    ComplexField::new(grid, vals).expect("finite ansatz pieces give a finite field")
}

/// Error field `G` of the `v` equation.
pub fn g_from_parts(parts: &AnsatzParts) -> ComplexField {
    let prm = parts.params;
    let omega = prm.omega;
    let grid = *parts.p.grid();
    let vals: Vec<Complex64> = (0..grid.len())
        .map(|j| {
            let x = grid.node(j);
            let p = parts.p.values()[j];
            let phi = parts.phi.values()[j];
            let r = parts.r.values()[j];
            match parts.mode {
                AnsatzMode::Nonsymmetric => r * (omega * (p + phi).norm_sqr()),
                AnsatzMode::Symmetric => {
                    let psi = parts.psi.values()[j];
                    let r2 = r.norm_sqr();
                    let psi2 = psi.norm_sqr();
                    let weighted_r = if r.norm() > 0.0 {
                        r / r.norm() * exp_weighted_q(1.0, -2.0, x - prm.sigma2)
                    } else {
                        Complex64::new(0.0, 0.0)
                    };
                    psi * (3.0 * r2) + r * (3.0 * psi2) + psi * psi2
                        - weighted_r * (omega * p.norm_sqr())
                        + r * (omega * (2.0 * (p.conj() * phi).re + phi.norm_sqr()))
                }
            }
        })
        .collect();
    ComplexField::new(grid, vals).expect("finite ansatz pieces give a finite field")
}

/// `F` for the given parameters at time `t`.
pub fn compute_f(
    grid: &Grid,
    params: &SolitonParams,
    t: f64,
    profile: &ComplexField,
    mode: AnsatzMode,
) -> Result<ComplexField> {
    Ok(f_from_parts(&build_parts(grid, params, t, profile, mode)?))
}

/// `G` for the given parameters at time `t`.
pub fn compute_g(
    grid: &Grid,
    params: &SolitonParams,
    t: f64,
    profile: &ComplexField,
    mode: AnsatzMode,
) -> Result<ComplexField> {
    Ok(g_from_parts(&build_parts(grid, params, t, profile, mode)?))
}

/// `a = <F, d1P> / (2c)`.
pub fn project_a(parts: &AnsatzParts, f: &ComplexField, t: f64) -> Result<f64> {
    Ok(inner(f, &parts.d1_p(t))? / (2.0 * parts.params.c))
}

/// `b = <G, d2R> / 2`.
pub fn project_b(parts: &AnsatzParts, g: &ComplexField, t: f64) -> Result<f64> {
    Ok(0.5 * inner(g, &parts.d2_r(t))?)
}

/// The two contributions to `alpha_c` and the cross-check of the second.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AlphaBreakdown {
    /// `4 c^2 omega ||e^{cx} Q||^2`.
    pub leading: f64,
    /// `<L_c A, A> / 2` from the operator applied to the solved profile.
    pub half_quadratic_form: f64,
    /// `c kappa omega <e^{cx} Q^2, A> / 2` from the forcing.
    pub half_forcing_pairing: f64,
    pub alpha_c: f64,
}

impl AlphaBreakdown {
    pub fn evaluation_gap(&self) -> f64 {
        (self.half_quadratic_form - self.half_forcing_pairing).abs()
    }
}

/// `alpha_c = 4 c^2 omega ||e^{cx}Q||^2 + <L_c A, A>/2` on the profile grid.
pub fn alpha_c(c: f64, omega: f64, a_profile: &ComplexField) -> Result<AlphaBreakdown> {
    let grid = *a_profile.grid();
    let weighted = ComplexField::from_real_fn(grid, |x| exp_weighted_q(1.0, c, x));
    let leading = 4.0 * c * c * omega * integrate(&weighted.norm_sqr_field())?.re;
    let op = OperatorSpec::new(OperatorKind::Lc { c, omega }, grid);
    let la = apply_with(&op, a_profile, Representation::FiniteDifference)?;
    let half_quadratic_form = 0.5 * inner(&la, a_profile)?;
    let forcing = ComplexField::from_real_fn(grid, |x| forcing_a(c, omega, x));
    let half_forcing_pairing = 0.5 * inner(&forcing, a_profile)?;
    let alpha_c = leading + half_forcing_pairing;
    if !(alpha_c > 0.0 && alpha_c.is_finite()) {
        return Err(Error::Numerical(format!(
            "alpha_c = {alpha_c} is not positive; check the profile solve"
        )));
    }
    Ok(AlphaBreakdown {
        leading,
        half_quadratic_form,
        half_forcing_pairing,
        alpha_c,
    })
}

/// Exact value of `||e^{cx} Q||^2 = 4 pi c / sin(pi c)` for `0 < c < 1`.
pub fn weighted_mass_exact(c: f64) -> f64 {
    4.0 * PI * c / (PI * c).sin()
}

/// `Omega_c = sqrt(2c(c+1) alpha_c)`.
pub fn capital_omega(c: f64, alpha_c: f64) -> f64 {
    (2.0 * c * (c + 1.0) * alpha_c).sqrt()
}

/// `alpha = 32 omega` of the symmetric interaction.
pub fn symmetric_alpha(omega: f64) -> f64 {
    32.0 * omega
}

/// `Omega = sqrt(4 alpha) = 8 sqrt(2 omega)`.
pub fn symmetric_omega(omega: f64) -> f64 {
    (4.0 * symmetric_alpha(omega)).sqrt()
}

/// Measured and predicted projections at one separation.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct InteractionReport {
    pub sigma: f64,
    pub a_measured: f64,
    pub b_measured: f64,
    pub a_predicted: f64,
    pub b_predicted: f64,
    pub ratio_a: f64,
    pub ratio_b: f64,
    /// `alpha_c` (non-symmetric) or `alpha` (symmetric).
    pub alpha_c: f64,
    /// `Omega_c` or `Omega`.
    pub omega_cap: f64,
    pub f_norm: f64,
    pub g_norm: f64,
}

/// Static projections at separation `sigma` with zero phases and velocities.
///
/// `alpha` is `alpha_c` in the non-symmetric mode and is ignored in the
/// symmetric mode, where `alpha = 32 omega`.
pub fn interaction_at(
    grid: &Grid,
    c: f64,
    omega: f64,
    sigma: f64,
    profile: &ComplexField,
    mode: AnsatzMode,
    alpha: f64,
) -> Result<InteractionReport> {
    let params = match mode {
        AnsatzMode::Nonsymmetric => SolitonParams::nonsymmetric_split(c, omega, sigma, 0.0),
        AnsatzMode::Symmetric => SolitonParams::symmetric(omega, sigma, 0.0),
    };
    let parts = build_parts(grid, &params, 0.0, profile, mode)?;
    let f = f_from_parts(&parts);
    let g = g_from_parts(&parts);
    let a_measured = project_a(&parts, &f, 0.0)?;
    let b_measured = project_b(&parts, &g, 0.0)?;
    let (a_predicted, b_predicted, alpha, omega_cap) = match mode {
        AnsatzMode::Nonsymmetric => {
            let e = (-2.0 * c * sigma).exp();
            (alpha * e, -c * alpha * e, alpha, capital_omega(c, alpha))
        }
        AnsatzMode::Symmetric => {
            let al = symmetric_alpha(omega);
            let lead = al * sigma * (-2.0 * sigma).exp();
            (lead, -lead, al, symmetric_omega(omega))
        }
    };
    Ok(InteractionReport {
        sigma,
        a_measured,
        b_measured,
        a_predicted,
        b_predicted,
        ratio_a: a_measured / a_predicted,
        ratio_b: b_measured / b_predicted,
        alpha_c: alpha,
        omega_cap,
        f_norm: f.l2_norm(),
        g_norm: g.l2_norm(),
    })
}

/// Runs [`interaction_at`] over a list of separations.
pub fn sweep(
    grid: &Grid,
    c: f64,
    omega: f64,
    sigmas: &[f64],
    profile: &ComplexField,
    mode: AnsatzMode,
    alpha: f64,
) -> Result<Vec<InteractionReport>> {
    sigmas
        .iter()
        .map(|&s| interaction_at(grid, c, omega, s, profile, mode, alpha))
        .collect()
}

/// Least-squares slope `k` of `log norm = -k sigma + const`.
pub fn decay_exponent(sigmas: &[f64], norms: &[f64]) -> Result<f64> {
    if sigmas.len() != norms.len() || sigmas.len() < 2 {
        return Err(Error::InvalidParameter(
            "decay fit needs at least two matching samples".into(),
        ));
    }
    let n = sigmas.len() as f64;
    let ys: Vec<f64> = norms.iter().map(|v| v.ln()).collect();
    let mx = sigmas.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = sigmas.iter().map(|s| (s - mx).powi(2)).sum();
    let sxy: f64 = sigmas.iter().zip(&ys).map(|(s, y)| (s - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::IllConditioned("all separations coincide".into()));
    }
    Ok(-sxy / sxx)
}

/// Fraction of `||G||^2` carried by `|x - sigma2| <= sigma/2`.
pub fn g_mass_fraction_near_v(g: &ComplexField, params: &SolitonParams) -> f64 {
    let grid = g.grid();
    let half = 0.5 * params.separation();
    let (mut near, mut total) = (0.0, 0.0);
    for (j, z) in g.values().iter().enumerate() {
        let w = z.norm_sqr();
        total += w;
        if (grid.node(j) - params.sigma2).abs() <= half {
            near += w;
        }
    }
    if total > 0.0 {
        near / total
    } else {
        0.0
    }
}

/// Writes the sweep table with 17 significant digits.
pub fn write_sweep_csv<W: Write>(mut out: W, rows: &[InteractionReport]) -> std::io::Result<()> {
    writeln!(out, "sigma,a_measured,a_predicted,ratio_a,b_measured,b_predicted,ratio_b")?;
    for r in rows {
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.sigma, r.a_measured, r.a_predicted, r.ratio_a, r.b_measured, r.b_predicted, r.ratio_b
        )?;
    }
    Ok(())
}

/// Standard grid for projection sweeps: `L = 80`, `N = 16384`.
pub fn default_projection_grid() -> Grid {
    Grid::new(80.0, 16384).expect("static grid parameters are valid")
}
