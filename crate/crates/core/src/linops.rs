//! Linearized Schrodinger operators around the ground state.
//!
//! Every operator has the form `-d^2/dx^2 + m^2 - V(x)` with `V` a multiple
//! of `Q^2`:
//!
//! | kind     | `m^2` | `V`         |
//! |----------|-------|-------------|
//! | `LPlus`  | 1     | `3 Q^2`     |
//! | `LMinus` | 1     | `Q^2`       |
//! | `Lc`     | `c^2` | `omega Q^2` |
//! | `LOne`   | 1     | `omega Q^2` |
//!
//! `apply` works either spectrally on the periodic grid or with the
//! fourth-order finite-difference stencil used by the solves. Solves and
//! eigenvalue probes use the finite-difference matrix with homogeneous
//! Dirichlet conditions at `x = -L` and `x = L`.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::banded::BandedMatrix;
use crate::error::{Error, Result};
use crate::grid::{ComplexField, Grid, Spectral};
use crate::solitons::{ground_state, lambda_profile, q, q_prime, q_scaled, KAPPA};

/// Relative residual every linear solve must reach.
pub const SOLVE_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OperatorKind {
    LPlus,
    LMinus,
    Lc { c: f64, omega: f64 },
    LOne { omega: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorSpec {
    pub kind: OperatorKind,
    pub grid: Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Spectral,
    FiniteDifference,
}

impl OperatorSpec {
    pub fn new(kind: OperatorKind, grid: Grid) -> Self {
        Self { kind, grid }
    }

    pub fn mass(&self) -> f64 {
        match self.kind {
            OperatorKind::LPlus | OperatorKind::LMinus | OperatorKind::LOne { .. } => 1.0,
            OperatorKind::Lc { c, .. } => c * c,
        }
    }

    /// Potential `V(x)`, entering the operator with a minus sign.
    pub fn potential(&self, x: f64) -> f64 {
        let q2 = q(x) * q(x);
        match self.kind {
            OperatorKind::LPlus => 3.0 * q2,
            OperatorKind::LMinus => q2,
            OperatorKind::Lc { omega, .. } | OperatorKind::LOne { omega } => omega * q2,
        }
    }

    /// Checks the parameter range in which the operator is coercive and
    /// therefore invertible.
    pub fn check_coercive(&self) -> Result<()> {
        match self.kind {
            OperatorKind::Lc { c, omega } => {
                let bound = 0.5 * c * (c + 1.0);
                if c > 0.0 && c <= 1.0 && omega > 0.0 && omega < bound {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!(
                        "L_c needs 0 < c <= 1 and 0 < omega < c(c+1)/2 = {bound}; got c = {c}, omega = {omega}"
                    )))
                }
            }
            OperatorKind::LOne { omega } => {
                if omega > 0.0 && omega < 1.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!(
                        "L_1 needs 0 < omega < 1, got {omega}"
                    )))
                }
            }
            OperatorKind::LPlus | OperatorKind::LMinus => Err(Error::InvalidParameter(
                "L_+ and L_- have a kernel and are not solved directly".into(),
            )),
        }
    }

    /// Finite-difference matrix on the interior nodes `1..N`.
    pub fn fd_matrix(&self) -> BandedMatrix {
        let n = self.grid.len() - 1;
        let h2 = self.grid.dx() * self.grid.dx();
        let (d0, d1, d2) = (30.0 / (12.0 * h2), -16.0 / (12.0 * h2), 1.0 / (12.0 * h2));
        let m2 = self.mass();
        let mut a = BandedMatrix::zeros(n, 2, 2);
        for i in 0..n {
            let x = self.grid.node(i + 1);
            a.set(i, i, d0 + m2 - self.potential(x));
            if i >= 1 {
                a.set(i, i - 1, d1);
            }
            if i + 1 < n {
                a.set(i, i + 1, d1);
            }
            if i >= 2 {
                a.set(i, i - 2, d2);
            }
            if i + 2 < n {
                a.set(i, i + 2, d2);
            }
        }
        a
    }
}

pub fn apply(op: &OperatorSpec, f: &ComplexField) -> Result<ComplexField> {
    apply_with(op, f, Representation::Spectral)
}

/// `-f'' + m^2 f - V f` in the chosen representation.
pub fn apply_with(
    op: &OperatorSpec,
    f: &ComplexField,
    repr: Representation,
) -> Result<ComplexField> {
    if *f.grid() != op.grid {
        return Err(Error::GridMismatch);
    }
    f.check_finite()?;
    let m2 = op.mass();
    match repr {
        Representation::Spectral => {
            let spectral = Spectral::new(op.grid);
            let minus_d2 = spectral.apply_symbol(f, |_, k| Complex64::new(k * k, 0.0));
            let values = minus_d2
                .values()
                .iter()
                .zip(f.values())
                .enumerate()
                .map(|(j, (d, z))| d + z * (m2 - op.potential(op.grid.node(j))))
                .collect();
            ComplexField::new(op.grid, values)
        }
        Representation::FiniteDifference => {
            let n = op.grid.len();
            let h2 = op.grid.dx() * op.grid.dx();
            let vals = f.values();
            let at = |i: i64| {
                if i <= 0 || i >= n as i64 {
                    Complex64::new(0.0, 0.0)
                } else {
                    vals[i as usize]
                }
            };
            let mut out = vec![Complex64::new(0.0, 0.0); n];
            for (j, o) in out.iter_mut().enumerate().skip(1) {
                let i = j as i64;
                let lap = (-at(i - 2) + at(i - 1) * 16.0 - at(i) * 30.0 + at(i + 1) * 16.0
                    - at(i + 2))
                    / (12.0 * h2);
                let x = op.grid.node(j);
                *o = -lap + at(i) * (m2 - op.potential(x));
            }
            ComplexField::new(op.grid, out)
        }
    }
}

/// Solves `op u = rhs` for a coercive operator (`Lc` or `LOne`).
///
/// The residual is measured with the same finite-difference operator; a
/// residual above [`SOLVE_TOLERANCE`] (relative to `||rhs||`) is an error.
pub fn solve(op: &OperatorSpec, rhs: &ComplexField) -> Result<ComplexField> {
    op.check_coercive()?;
    if *rhs.grid() != op.grid {
        return Err(Error::GridMismatch);
    }
    rhs.check_finite()?;
    let lu = op.fd_matrix().factor()?;
    let interior = &rhs.values()[1..];
    let re: Vec<f64> = interior.iter().map(|z| z.re).collect();
    let im: Vec<f64> = interior.iter().map(|z| z.im).collect();
    let has_im = im.iter().any(|&v| v != 0.0);
    let ure = lu.solve(&re);
    let uim = if has_im { lu.solve(&im) } else { vec![0.0; im.len()] };
    let mut values = Vec::with_capacity(op.grid.len());
    values.push(Complex64::new(0.0, 0.0));
    values.extend(ure.iter().zip(&uim).map(|(&a, &b)| Complex64::new(a, b)));
    let u = ComplexField::new(op.grid, values)?;

    let rhs_norm = interior_norm(rhs);
    if rhs_norm > 0.0 {
        let residual = relative_fd_residual(op, &u, rhs)?;
        if !(residual <= SOLVE_TOLERANCE) {
            return Err(Error::SolverResidual {
                residual,
                tolerance: SOLVE_TOLERANCE,
            });
        }
    }
    Ok(u)
}

fn interior_norm(f: &ComplexField) -> f64 {
    (f.grid().dx() * f.values()[1..].iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt()
}

/// `||op_fd u - rhs|| / ||rhs||` over the interior nodes.
pub fn relative_fd_residual(op: &OperatorSpec, u: &ComplexField, rhs: &ComplexField) -> Result<f64> {
    let lu = apply_with(op, u, Representation::FiniteDifference)?;
    let r = lu.sub(rhs)?;
    Ok(interior_norm(&r) / interior_norm(rhs))
}

/// A solved correction profile with its diagnostics.
#[derive(Debug, Clone)]
pub struct SolvedProfile {
    pub field: ComplexField,
    /// Relative residual of the finite-difference solve.
    pub relative_residual: f64,
    /// Relative residual against the spectral operator (discretization check).
    pub spectral_residual: f64,
    /// `sup |profile| / envelope` over `|x| <= L - 5`.
    pub decay_constant: f64,
}

impl SolvedProfile {
    pub fn values(&self) -> Vec<f64> {
        self.field.real_parts()
    }
}

/// Default box for profile solves: `L = 60`, `N = 8192`.
pub fn default_profile_grid() -> Grid {
    Grid::new(60.0, 8192).expect("static grid parameters are valid")
}

/// Forcing `c kappa omega e^{cx} Q^2` of the `A` equation.
pub fn forcing_a(c: f64, omega: f64, x: f64) -> f64 {
    c * KAPPA * omega * (c * x).exp() * q(x) * q(x)
}

/// Forcing `kappa omega e^{x} Q^2` of the `B` equation.
pub fn forcing_b(omega: f64, x: f64) -> f64 {
    KAPPA * omega * x.exp() * q(x) * q(x)
}

fn decay_ratio(field: &ComplexField, envelope: impl Fn(f64) -> f64) -> f64 {
    let g = field.grid();
    let limit = g.half_width() - 5.0;
    field
        .values()
        .iter()
        .enumerate()
        .filter(|(j, _)| g.node(*j).abs() <= limit)
        .map(|(j, z)| z.norm() / envelope(g.node(j)))
        .fold(0.0, f64::max)
}

fn solve_profile(
    op: OperatorSpec,
    rhs: ComplexField,
    envelope: impl Fn(f64) -> f64,
) -> Result<SolvedProfile> {
    let field = solve(&op, &rhs)?;
    let relative_residual = relative_fd_residual(&op, &field, &rhs)?;
    let spectral_residual = apply(&op, &field)?.sub(&rhs)?.l2_norm() / rhs.l2_norm();
    let decay_constant = decay_ratio(&field, envelope);
    Ok(SolvedProfile {
        field,
        relative_residual,
        spectral_residual,
        decay_constant,
    })
}

/// L2 residuals of the kernel and generalized-kernel identities of `L_+`
/// and `L_-` with the spectral operator.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct IdentityResiduals {
    /// `||L_- Q||`.
    pub l_minus_q: f64,
    /// `||L_+ Q'||`.
    pub l_plus_q_prime: f64,
    /// `||L_- (xQ) + 2Q'||`.
    pub l_minus_xq: f64,
    /// `||L_+ (Lambda Q) + 2Q||`.
    pub l_plus_lambda_q: f64,
}

impl IdentityResiduals {
    pub fn max(&self) -> f64 {
        self.l_minus_q
            .max(self.l_plus_q_prime)
            .max(self.l_minus_xq)
            .max(self.l_plus_lambda_q)
    }
}

pub fn identity_residuals(grid: &Grid) -> Result<IdentityResiduals> {
    let qf = ground_state(grid, 1.0, 0.0);
    let dq = ComplexField::from_real_fn(*grid, q_prime);
    let lm = OperatorSpec::new(OperatorKind::LMinus, *grid);
    let lp = OperatorSpec::new(OperatorKind::LPlus, *grid);
    let xq = qf.map_with_x(|x, z| z * x);
    Ok(IdentityResiduals {
        l_minus_q: apply(&lm, &qf)?.l2_norm(),
        l_plus_q_prime: apply(&lp, &dq)?.l2_norm(),
        l_minus_xq: apply(&lm, &xq)?.add(&dq.scale_real(2.0))?.l2_norm(),
        l_plus_lambda_q: apply(&lp, &lambda_profile(grid, 1.0))?.add(&qf.scale_real(2.0))?.l2_norm(),
    })
}

/// Solves `L_c A = c kappa omega e^{cx} Q^2` for `0 < c < 1`.
pub fn solve_a(c: f64, omega: f64, grid: &Grid) -> Result<SolvedProfile> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "profile A needs 0 < c < 1, got {c} (c = 1 is the symmetric profile B)"
        )));
    }
    let op = OperatorSpec::new(OperatorKind::Lc { c, omega }, *grid);
    op.check_coercive()?;
    let rhs = ComplexField::from_real_fn(*grid, |x| forcing_a(c, omega, x));
    solve_profile(op, rhs, |x| q_scaled(c, x))
}

/// Solves `L_1 B = kappa omega e^{x} Q^2` for `0 < omega < 1`.
pub fn solve_b(omega: f64, grid: &Grid) -> Result<SolvedProfile> {
    let op = OperatorSpec::new(OperatorKind::LOne { omega }, *grid);
    op.check_coercive()?;
    let rhs = ComplexField::from_real_fn(*grid, |x| forcing_b(omega, x));
    solve_profile(op, rhs, |x| (1.0 + x.abs()) * q(x))
}

/// Result of the smallest-eigenvalue probe.
#[derive(Debug, Clone)]
pub struct EigenEstimate {
    pub value: f64,
    pub iterations: usize,
    /// `||A x - lambda x|| / ||x||` for the final iterate.
    pub residual: f64,
    /// Normalized eigenvector on the full grid (zero at node 0).
    pub vector: Vec<f64>,
}

/// Smallest eigenvalue of the finite-difference operator by shifted inverse
/// iteration. The shift sits below `min(m^2 - V)`, which bounds the discrete
/// spectrum from below, so the iteration converges to the lowest eigenpair.
pub fn min_eigenvalue(op: &OperatorSpec) -> Result<EigenEstimate> {
    const MAX_ITER: usize = 5000;
    let a = op.fd_matrix();
    let n = a.dim();
    let m2 = op.mass();
    let floor = (1..=n)
        .map(|j| m2 - op.potential(op.grid.node(j)))
        .fold(f64::INFINITY, f64::min);
    let shift = floor - 0.05 * (1.0 + floor.abs());
    let mut shifted = a.clone();
    shifted.shift_diagonal(-shift);
    let lu = shifted.factor()?;

    let mut x: Vec<f64> = (1..=n)
        .map(|j| op.potential(op.grid.node(j)) + 1e-3)
        .collect();
    normalize(&mut x);
    let mut lambda = rayleigh(&a, &x);
    let mut change = f64::INFINITY;
    for it in 1..=MAX_ITER {
        let mut y = lu.solve(&x);
        normalize(&mut y);
        let next = rayleigh(&a, &y);
        change = (next - lambda).abs();
        lambda = next;
        x = y;
        if it >= 3 && change <= 1e-14 * (1.0 + lambda.abs()) {
            let ax = a.mul_vec(&x);
            let residual = ax
                .iter()
                .zip(&x)
                .map(|(p, q)| (p - lambda * q).powi(2))
                .sum::<f64>()
                .sqrt();
            let mut vector = Vec::with_capacity(n + 1);
            vector.push(0.0);
            let scale = op.grid.dx().sqrt().recip();
            vector.extend(x.iter().map(|v| v * scale));
            return Ok(EigenEstimate {
                value: lambda,
                iterations: it,
                residual,
                vector,
            });
        }
    }
    Err(Error::Stagnation {
        iterations: MAX_ITER,
        change,
    })
}

fn normalize(x: &mut [f64]) {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let sign = if x.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
    for v in x.iter_mut() {
        *v *= sign / norm;
    }
}

fn rayleigh(a: &BandedMatrix, x: &[f64]) -> f64 {
    a.mul_vec(x).iter().zip(x).map(|(p, q)| p * q).sum()
}

/// Writes `x,value` rows with 17 significant digits.
pub fn write_profile_csv<W: Write>(mut out: W, field: &ComplexField) -> std::io::Result<()> {
    writeln!(out, "x,value")?;
    for (j, z) in field.values().iter().enumerate() {
        writeln!(out, "{:.16e},{:.16e}", field.grid().node(j), z.re)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::inner;
    use proptest::prelude::*;

    fn statics() -> Grid {
        Grid::new(25.0, 4096).unwrap()
    }

    #[test]
    fn kernel_identities() {
        // wide box: odd profiles are discontinuous under periodic wrap at L = 25
        let g = Grid::new(40.0, 4096).unwrap();
        let qf = ground_state(&g, 1.0, 0.0);
        let lminus = OperatorSpec::new(OperatorKind::LMinus, g);
        let lplus = OperatorSpec::new(OperatorKind::LPlus, g);
        assert!(apply(&lminus, &qf).unwrap().l2_norm() <= 1e-8);
        let dq = ComplexField::from_real_fn(g, q_prime);
        let res = apply(&lplus, &dq).unwrap().l2_norm();
        assert!(res <= 1e-8, "{res}");
        let xq = qf.map_with_x(|x, z| z * x);
        let lhs = apply(&lminus, &xq).unwrap();
        let rhs = dq.scale_real(-2.0);
        assert!(lhs.sub(&rhs).unwrap().l2_norm() <= 1e-8);
        let lq = lambda_profile(&g, 1.0);
        let lhs = apply(&lplus, &lq).unwrap();
        assert!(lhs.sub(&qf.scale_real(-2.0)).unwrap().l2_norm() <= 1e-8);
        assert!(identity_residuals(&g).unwrap().max() <= 1e-8);
    }

    #[test]
    fn fd_and_spectral_agree_on_smooth_fields() {
        let g = statics();
        let f = ComplexField::from_fn(g, |x| Complex64::new(q(x), 0.3 * q_prime(x)));
        let op = OperatorSpec::new(OperatorKind::Lc { c: 0.5, omega: 0.3 }, g);
        let a = apply_with(&op, &f, Representation::Spectral).unwrap();
        let b = apply_with(&op, &f, Representation::FiniteDifference).unwrap();
        assert!(a.sub(&b).unwrap().l2_norm() < 1e-6);
    }

    #[test]
    fn resolvent_recovers_power_of_ground_state() {
        // omega = rho(rho+1)/2 with rho = 0.4 gives L_c Q^rho = (c^2 - rho^2) Q^rho.
        let g = default_profile_grid();
        let (c, rho) = (0.5, 0.4);
        let omega = 0.5 * rho * (rho + 1.0);
        let op = OperatorSpec::new(OperatorKind::Lc { c, omega }, g);
        let qr = ComplexField::from_real_fn(g, |x| q(x).powf(rho));
        let rhs = apply(&op, &qr).unwrap();
        let eig_res = rhs.sub(&qr.scale_real(c * c - rho * rho)).unwrap().l2_norm() / qr.l2_norm();
        assert!(eig_res < 1e-6, "{eig_res}");
        let u = solve(&op, &rhs).unwrap();
        assert!(u.sub(&qr).unwrap().l2_norm() < 1e-6);
    }

    #[test]
    fn solve_zero_and_linearity() {
        let g = Grid::new(30.0, 2048).unwrap();
        let op = OperatorSpec::new(OperatorKind::LOne { omega: 0.5 }, g);
        let zero = solve(&op, &ComplexField::zeros(g)).unwrap();
        assert_eq!(zero.sup_norm(), 0.0);
        let rhs = ComplexField::from_fn(g, |x| Complex64::new(q(x) * q(x), x * q(x)));
        let u1 = solve(&op, &rhs).unwrap();
        let u2 = solve(&op, &rhs.scale_real(2.0)).unwrap();
        assert!(u2.sub(&u1.scale_real(2.0)).unwrap().sup_norm() < 1e-13);
    }

    #[test]
    fn solve_rejects_non_coercive_parameters() {
        let g = statics();
        let rhs = ground_state(&g, 1.0, 0.0);
        for kind in [
            OperatorKind::Lc { c: 0.5, omega: 0.4 },
            OperatorKind::LOne { omega: 1.0 },
            OperatorKind::LPlus,
        ] {
            let op = OperatorSpec::new(kind, g);
            assert!(solve(&op, &rhs).is_err());
        }
        assert!(solve_a(1.0, 0.3, &g).is_err());
        assert!(solve_b(1.5, &g).is_err());
    }

    #[test]
    fn profile_a_properties() {
        let g = default_profile_grid();
        let a = solve_a(0.5, 0.3, &g).unwrap();
        assert!(a.relative_residual <= 1e-8);
        assert!(a.spectral_residual <= 1e-6, "{}", a.spectral_residual);
        let op = OperatorSpec::new(OperatorKind::Lc { c: 0.5, omega: 0.3 }, g);
        let la = apply(&op, &a.field).unwrap();
        assert!(inner(&la, &a.field).unwrap() > 0.0);
        assert!(a.decay_constant.is_finite() && a.decay_constant > 0.0);
    }

    #[test]
    fn profile_b_matches_its_forcing_pointwise() {
        let g = default_profile_grid();
        let omega = 0.5;
        let b = solve_b(omega, &g).unwrap();
        assert!(b.relative_residual <= 1e-8);
        let op = OperatorSpec::new(OperatorKind::LOne { omega }, g);
        let lb = apply_with(&op, &b.field, Representation::FiniteDifference).unwrap();
        for (j, z) in lb.values().iter().enumerate().skip(1) {
            let f = forcing_b(omega, g.node(j));
            if f > 1e-10 {
                assert!((z.re / f - 1.0).abs() < 1e-4, "x = {}", g.node(j));
            }
        }
    }

    #[test]
    fn smallest_eigenvalues() {
        let g = statics();
        let lminus = min_eigenvalue(&OperatorSpec::new(OperatorKind::LMinus, g)).unwrap();
        assert!(lminus.value.abs() < 1e-6, "{}", lminus.value);
        let lplus = min_eigenvalue(&OperatorSpec::new(OperatorKind::LPlus, g)).unwrap();
        assert!((lplus.value + 3.0).abs() < 1e-6, "{}", lplus.value);
        let lc = min_eigenvalue(&OperatorSpec::new(
            OperatorKind::Lc { c: 0.5, omega: 0.28 },
            default_profile_grid(),
        ))
        .unwrap();
        assert!((lc.value - 0.09).abs() < 1e-6, "{}", lc.value);
    }

    #[test]
    fn profile_csv_has_seventeen_digits() {
        let g = Grid::new(5.0, 8).unwrap();
        let f = ground_state(&g, 1.0, 0.0);
        let mut buf = Vec::new();
        write_profile_csv(&mut buf, &f).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let row = text.lines().nth(1).unwrap();
        let first = row.split(',').next().unwrap();
        let mantissa = first.split('e').next().unwrap().replace(['-', '.'], "");
        assert_eq!(mantissa.len(), 17);
        assert_eq!(first.parse::<f64>().unwrap(), -5.0);
    }

    proptest! {
        #[test]
        fn operators_are_self_adjoint(a in -2.0f64..2.0, b in -2.0f64..2.0, s in 0.3f64..1.5, shift in -3.0f64..3.0) {
            let g = Grid::new(25.0, 1024).unwrap();
            let f = ComplexField::from_fn(g, |x| Complex64::new(a * q(s * x), b * x * q(x - shift)));
            let h = ComplexField::from_fn(g, |x| Complex64::new(q(x + shift) * (1.0 + 0.2 * x), a * q(x) * q(x)));
            for kind in [OperatorKind::LPlus, OperatorKind::LMinus, OperatorKind::Lc { c: 0.7, omega: 0.4 }, OperatorKind::LOne { omega: 0.6 }] {
                let op = OperatorSpec::new(kind, g);
                let lhs = inner(&apply(&op, &f).unwrap(), &h).unwrap();
                let rhs = inner(&f, &apply(&op, &h).unwrap()).unwrap();
                prop_assert!((lhs - rhs).abs() <= 1e-10);
            }
        }

        #[test]
        fn solve_inverts_apply(w in 0.5f64..2.0, shift in -5.0f64..5.0) {
            let g = Grid::new(40.0, 4096).unwrap();
            let op = OperatorSpec::new(OperatorKind::Lc { c: 0.6, omega: 0.3 }, g);
            let f = ComplexField::from_real_fn(g, |x| q(w * (x - shift)));
            let rhs = apply_with(&op, &f, Representation::FiniteDifference).unwrap();
            let back = solve(&op, &rhs).unwrap();
            prop_assert!(back.sub(&f).unwrap().l2_norm() <= 1e-6 * f.l2_norm());
        }
    }
}
