//! Ground-state profiles and the corrected two-soliton ansatz.
//!
//! The ground state is `Q(x) = sqrt(2) sech(x)`, the positive even solution of
//! `Q'' - Q + Q^3 = 0`, and `Q_c(x) = c Q(c x)`. The ansatz places `Q_c` in
//! the `u` component at `sigma1` and `Q` in the `v` component at `sigma2`,
//! with the interaction correction `phi` carried by `u` near `sigma2`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ComplexField, Grid};

/// `kappa = 2 sqrt(2)`, the tail constant in `Q(x) = kappa e^x - e^{2x} Q(x)`.
pub const KAPPA: f64 = 2.0 * std::f64::consts::SQRT_2;

/// Tail level that the periodic box must push the widest soliton below.
pub const TAIL_LIMIT: f64 = 1e-12;

#[inline]
pub fn sech(x: f64) -> f64 {
    1.0 / x.cosh()
}

#[inline]
pub fn q(x: f64) -> f64 {
    std::f64::consts::SQRT_2 * sech(x)
}

#[inline]
pub fn q_prime(x: f64) -> f64 {
    -q(x) * x.tanh()
}

/// `Q_c(x) = c Q(c x)`.
#[inline]
pub fn q_scaled(c: f64, x: f64) -> f64 {
    c * q(c * x)
}

#[inline]
pub fn q_scaled_prime(c: f64, x: f64) -> f64 {
    c * c * q_prime(c * x)
}

/// `(Lambda Q_c)(x) = Q_c(x) + x Q_c'(x)`.
#[inline]
pub fn lambda_q(c: f64, x: f64) -> f64 {
    q_scaled(c, x) + x * q_scaled_prime(c, x)
}

/// `e^{w y} Q_c(y)` evaluated without forming the large exponential.
pub fn exp_weighted_q(c: f64, w: f64, y: f64) -> f64 {
    let a = c * y;
    if a >= 0.0 {
        KAPPA * c * ((w - c) * y).exp() / (1.0 + (-2.0 * a).exp())
    } else {
        KAPPA * c * ((w + c) * y).exp() / (1.0 + (2.0 * a).exp())
    }
}

/// Samples of `c sqrt(2) sech(c (x - center))`.
pub fn ground_state(grid: &Grid, c: f64, center: f64) -> ComplexField {
    ComplexField::from_real_fn(*grid, |x| q_scaled(c, x - center))
}

/// Samples of `Lambda Q_c = Q_c + x Q_c'`.
pub fn lambda_profile(grid: &Grid, c: f64) -> ComplexField {
    ComplexField::from_real_fn(*grid, |x| lambda_q(c, x))
}

/// `sup_{x <= 0} |Q(x)(1 + e^{2x}) - kappa e^x|` over the grid nodes.
pub fn asymptotic_identity_residual(grid: &Grid) -> f64 {
    grid.nodes()
        .into_iter()
        .filter(|&x| x <= 0.0)
        .map(|x| (q(x) * (1.0 + (2.0 * x).exp()) - KAPPA * x.exp()).abs())
        .fold(0.0, f64::max)
}

/// Which corrected ansatz to assemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnsatzMode {
    /// Amplitudes `c < 1` and `1`; correction `phi` built from profile `A`.
    Nonsymmetric,
    /// Equal amplitudes; corrections `phi` and `psi` built from profile `B`.
    Symmetric,
}

/// Modulation parameters of the two-soliton ansatz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolitonParams {
    pub sigma1: f64,
    pub sigma2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub c: f64,
    pub omega: f64,
}

impl SolitonParams {
    /// Static configuration with the separation split in the ratio used for
    /// the non-symmetric construction: `sigma1 = sigma/(c+1)`,
    /// `sigma2 = -c sigma/(c+1)`, and likewise for the relative velocity.
    pub fn nonsymmetric_split(c: f64, omega: f64, sigma: f64, beta: f64) -> Self {
        Self {
            sigma1: sigma / (c + 1.0),
            sigma2: -c * sigma / (c + 1.0),
            gamma1: 0.0,
            gamma2: 0.0,
            beta1: beta / (c + 1.0),
            beta2: -c * beta / (c + 1.0),
            c,
            omega,
        }
    }

    /// Mirror-symmetric configuration: `sigma1 = -sigma2 = sigma/2`,
    /// `beta1 = -beta2 = beta/2`, `c = 1`.
    pub fn symmetric(omega: f64, sigma: f64, beta: f64) -> Self {
        Self {
            sigma1: sigma / 2.0,
            sigma2: -sigma / 2.0,
            gamma1: 0.0,
            gamma2: 0.0,
            beta1: beta / 2.0,
            beta2: -beta / 2.0,
            c: 1.0,
            omega,
        }
    }

    pub fn separation(&self) -> f64 {
        self.sigma1 - self.sigma2
    }

    pub fn relative_velocity(&self) -> f64 {
        self.beta1 - self.beta2
    }

    /// Checks `0 < c <= 1`, `0 < omega < c(c+1)/2` and finiteness.
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.sigma1, self.sigma2, self.gamma1, self.gamma2, self.beta1, self.beta2, self.c,
            self.omega,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite soliton parameter".into()));
        }
        if !(self.c > 0.0 && self.c <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "amplitude ratio c must lie in (0, 1], got {}",
                self.c
            )));
        }
        let bound = 0.5 * self.c * (self.c + 1.0);
        if !(self.omega > 0.0 && self.omega < bound) {
            return Err(Error::InvalidParameter(format!(
                "coupling omega must lie in (0, c(c+1)/2) = (0, {bound}), got {}",
                self.omega
            )));
        }
        Ok(())
    }

    /// `Gamma_1 = c^2 t + gamma1 + beta1 x` with `x` the absolute coordinate.
    #[inline]
    pub fn gamma_u(&self, t: f64, x: f64) -> f64 {
        self.c * self.c * t + self.gamma1 + self.beta1 * x
    }

    /// `Gamma_2 = t + gamma2 + beta2 x`.
    #[inline]
    pub fn gamma_v(&self, t: f64, x: f64) -> f64 {
        t + self.gamma2 + self.beta2 * x
    }
}

/// Ansatz pieces sampled on one grid.
#[derive(Debug, Clone)]
pub struct AnsatzParts {
    pub mode: AnsatzMode,
    pub params: SolitonParams,
    /// `P = Q_c(x - sigma1) e^{i Gamma_1}`.
    pub p: ComplexField,
    /// `phi = e^{-c sigma} A(x - sigma2) e^{i Gamma_1}` (B in symmetric mode).
    pub phi: ComplexField,
    /// `R = Q(x - sigma2) e^{i Gamma_2}`.
    pub r: ComplexField,
    /// `psi = e^{-sigma} B(sigma1 - x) e^{i Gamma_2}`; zero in non-symmetric mode.
    pub psi: ComplexField,
}

impl AnsatzParts {
    pub fn u(&self) -> ComplexField {
        self.p.add(&self.phi).expect("parts share a grid")
    }

    pub fn v(&self) -> ComplexField {
        self.r.add(&self.psi).expect("parts share a grid")
    }

    /// `Q_c'(x - sigma1) e^{i Gamma_1}`.
    pub fn d1_p(&self, t: f64) -> ComplexField {
        let p = self.params;
        ComplexField::from_fn(*self.p.grid(), |x| {
            Complex64::from_polar(q_scaled_prime(p.c, x - p.sigma1), p.gamma_u(t, x))
        })
    }

    /// `Q'(x - sigma2) e^{i Gamma_2}`.
    pub fn d2_r(&self, t: f64) -> ComplexField {
        let p = self.params;
        ComplexField::from_fn(*self.r.grid(), |x| {
            Complex64::from_polar(q_prime(x - p.sigma2), p.gamma_v(t, x))
        })
    }
}

/// Checks that the widest soliton tail has decayed below [`TAIL_LIMIT`]
/// before reaching the periodic boundary.
pub fn check_tail(grid: &Grid, c: f64, max_offset: f64) -> Result<()> {
    let gap = grid.half_width() - max_offset.abs();
    let tail = if gap <= 0.0 { f64::INFINITY } else { q_scaled(c, gap) };
    if tail < TAIL_LIMIT {
        Ok(())
    } else {
        Err(Error::TailViolation {
            tail,
            limit: TAIL_LIMIT,
            detail: format!(
                "Q_c(L - |sigma|) with c = {c}, L = {}, |sigma| = {}",
                grid.half_width(),
                max_offset.abs()
            ),
        })
    }
}

/// Assemble all ansatz pieces at time `t`.
///
/// `profile` is the solved correction profile: `A` for the non-symmetric
/// mode, `B` for the symmetric mode (used for both `phi` and `psi`).
pub fn build_parts(
    grid: &Grid,
    params: &SolitonParams,
    t: f64,
    profile: &ComplexField,
    mode: AnsatzMode,
) -> Result<AnsatzParts> {
    params.validate()?;
    let sigma = params.separation();
    if sigma <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "separation sigma1 - sigma2 must be positive, got {sigma}"
        )));
    }
    if mode == AnsatzMode::Symmetric && params.c != 1.0 {
        return Err(Error::InvalidParameter(format!(
            "symmetric ansatz requires c = 1, got {}",
            params.c
        )));
    }
    check_tail(grid, params.c, params.sigma1.abs().max(params.sigma2.abs()))?;

    let c = params.c;
    let p = *params;
    let weight = (-c * sigma).exp();
    let pf = ComplexField::from_fn(*grid, |x| {
        Complex64::from_polar(q_scaled(c, x - p.sigma1), p.gamma_u(t, x))
    });
    let phi = ComplexField::from_fn(*grid, |x| {
        profile.sample_at(x - p.sigma2) * weight * Complex64::from_polar(1.0, p.gamma_u(t, x))
    });
    let r = ComplexField::from_fn(*grid, |x| {
        Complex64::from_polar(q(x - p.sigma2), p.gamma_v(t, x))
    });
    let psi = match mode {
        AnsatzMode::Nonsymmetric => ComplexField::zeros(*grid),
        AnsatzMode::Symmetric => ComplexField::from_fn(*grid, |x| {
            profile.sample_at(p.sigma1 - x) * weight * Complex64::from_polar(1.0, p.gamma_v(t, x))
        }),
    };
    Ok(AnsatzParts {
        mode,
        params: p,
        p: pf,
        phi,
        r,
        psi,
    })
}

/// `(U, V) = (P + phi, R)` in the non-symmetric mode and
/// `(P + phi, R + psi)` in the symmetric mode.
pub fn build_ansatz(
    grid: &Grid,
    params: &SolitonParams,
    t: f64,
    profile: &ComplexField,
    mode: AnsatzMode,
) -> Result<(ComplexField, ComplexField)> {
    let parts = build_parts(grid, params, t, profile, mode)?;
    Ok((parts.u(), parts.v()))
}
