//! One function per experiment kind. Each writes its artifacts through a
//! [`RunWriter`] and returns whether its checks passed.

use std::path::Path;

use serde::Serialize;
use serde_json::json;

use cnls::grid::Grid;
use cnls::interactions::{
    alpha_c, capital_omega, decay_exponent, g_mass_fraction_near_v, sweep, symmetric_alpha,
    symmetric_omega, weighted_mass_exact, write_sweep_csv,
};
use cnls::linops::{
    identity_residuals, min_eigenvalue, solve_a, solve_b, write_profile_csv, OperatorKind,
    OperatorSpec,
};
use cnls::reduced_ode::{
    book_scan, classify_regime, first_integral, integrate_log_partial, integrate_partial,
    nonsym_exact, sym_formal, write_trajectory_csv as write_ode_csv, ModelSpec, ReducedState,
    Regime,
};
use cnls::setup::{nonsym_setup, sym_setup, RegimeSetup, Separatrix};
use cnls::sim::{run_with, write_snapshot, write_trajectory_csv, RunOutput, SimConfig, TrackingConfig};
use cnls::solitons::SolitonParams;
use cnls::tracking::{fit_log, regime_report, FitModel, RegimeTolerances};
use cnls::AnsatzMode;

use crate::config::{hex_digest, Kind, RunConfig};
use crate::output::{to_json, RunWriter, Status};
use crate::CliError;

/// What an experiment reports back to the runner.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub status: Status,
    pub message: String,
}

impl Outcome {
    fn checked(pass: bool, message: impl Into<String>) -> Self {
        Self {
            status: if pass { Status::Pass } else { Status::ToleranceFailure },
            message: message.into(),
        }
    }
}

type Res<T> = std::result::Result<T, CliError>;

pub fn run_experiment(config: &RunConfig, writer: &mut RunWriter) -> Res<Outcome> {
    match config.kind {
        Kind::Constants => constants(config, writer),
        Kind::Operators => operators(config, writer),
        Kind::Projections => projections(config, writer),
        Kind::Reduce => reduce(config, writer),
        Kind::Simulate => simulate(config, writer, false),
        Kind::Regime => simulate(config, writer, true),
        Kind::Fit => fit(config, writer),
    }
}

fn grid(config: &RunConfig, half: &str, n: &str) -> Res<Grid> {
    Ok(Grid::new(config.f64(half), config.usize(n))?)
}

fn csv<F>(write: F) -> Res<Vec<u8>>
where
    F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
{
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(buf)
}

fn constants(config: &RunConfig, writer: &mut RunWriter) -> Res<Outcome> {
    let (c, omega) = (config.f64("c"), config.f64("omega"));
    let pgrid = grid(config, "profile_half_width", "profile_n")?;
    let a = solve_a(c, omega, &pgrid)?;
    let br = alpha_c(c, omega, &a.field)?;
    let om = capital_omega(c, br.alpha_c);
    writer.write("profile_a.csv", &csv(|b| write_profile_csv(b, &a.field))?)?;
    let report = json!({
        "c": c,
        "omega": omega,
        "alpha_c": br.alpha_c,
        "omega_c": om,
        "alpha_breakdown": br,
        "evaluation_gap": br.evaluation_gap(),
        "weighted_mass_exact": weighted_mass_exact(c),
        "profile_a": {
            "relative_residual": a.relative_residual,
            "spectral_residual": a.spectral_residual,
            "decay_constant": a.decay_constant,
        },
        "symmetric": {
            "alpha": symmetric_alpha(omega),
            "omega": symmetric_omega(omega),
        },
    });
    writer.write("constants.json", &to_json(&report))?;
    let pass = a.relative_residual <= 1e-8 && br.alpha_c > 0.0;
    Ok(Outcome::checked(pass, format!("alpha_c = {}, Omega_c = {om}", br.alpha_c)))
}

#[derive(Serialize)]
struct EigenCheck {
    operator: &'static str,
    value: f64,
    expected: f64,
    error: f64,
    iterations: usize,
}

fn operators(config: &RunConfig, writer: &mut RunWriter) -> Res<Outcome> {
    let tol = config.f64("tolerance");
    let g = grid(config, "grid_half_width", "grid_n")?;
    let res = identity_residuals(&g)?;
    let (c, omega) = (config.f64("c"), config.f64("omega"));
    // omega = rho(rho+1)/2 makes Q^rho a positive eigenfunction with eigenvalue c^2 - rho^2
    let rho = 0.5 * ((1.0 + 8.0 * omega).sqrt() - 1.0);
    let pgrid = grid(config, "profile_half_width", "profile_n")?;
    let mut eigen = Vec::new();
    for (name, kind, expected) in [
        ("L_minus", OperatorKind::LMinus, 0.0),
        ("L_plus", OperatorKind::LPlus, -3.0),
        ("L_c", OperatorKind::Lc { c, omega }, c * c - rho * rho),
    ] {
        let e = min_eigenvalue(&OperatorSpec::new(kind, pgrid))?;
        eigen.push(EigenCheck {
            operator: name,
            value: e.value,
            expected,
            error: (e.value - expected).abs(),
            iterations: e.iterations,
        });
    }
    let pass = res.max() <= tol && eigen.iter().all(|e| e.error <= tol);
    let report = json!({
        "grid": {"half_width": g.half_width(), "n": g.len()},
        "identity_residuals": res,
        "max_residual": res.max(),
        "smallest_eigenvalues": eigen,
        "rho": rho,
        "tolerance": tol,
        "pass": pass,
    });
    writer.write("operators.json", &to_json(&report))?;
    Ok(Outcome::checked(pass, format!("max identity residual {:e}", res.max())))
}

fn projections(config: &RunConfig, writer: &mut RunWriter) -> Res<Outcome> {
    let omega = config.f64("omega");
    let symmetric = config.text("mode") == "symmetric";
    let pgrid = grid(config, "profile_half_width", "profile_n")?;
    let g = grid(config, "grid_half_width", "grid_n")?;
    let (lo, hi, step) = (config.f64("sigma_min"), config.f64("sigma_max"), config.f64("sigma_step"));
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    let sigmas: Vec<f64> = (0..count).map(|i| lo + i as f64 * step).collect();
    let (c, mode, profile, alpha) = if symmetric {
        (1.0, AnsatzMode::Symmetric, solve_b(omega, &pgrid)?, symmetric_alpha(omega))
    } else {
        let c = config.f64("c");
        let a = solve_a(c, omega, &pgrid)?;
        let al = alpha_c(c, omega, &a.field)?.alpha_c;
        (c, AnsatzMode::Nonsymmetric, a, al)
    };
    let rows = sweep(&g, c, omega, &sigmas, &profile.field, mode, alpha)?;
    writer.write("sweep.csv", &csv(|b| write_sweep_csv(b, &rows))?)?;
    let f_norms: Vec<f64> = rows.iter().map(|r| r.f_norm).collect();
    let g_norms: Vec<f64> = rows.iter().map(|r| r.g_norm).collect();
    let (f_decay, g_decay) = if rows.len() >= 2 {
        (decay_exponent(&sigmas, &f_norms).ok(), decay_exponent(&sigmas, &g_norms).ok())
    } else {
        (None, None)
    };
    let near_v = match (mode, sigmas.last()) {
        (AnsatzMode::Nonsymmetric, Some(&s)) => {
            let params = SolitonParams::nonsymmetric_split(c, omega, s, 0.0);
            let gf = cnls::interactions::compute_g(&g, &params, 0.0, &profile.field, mode)?;
            Some(g_mass_fraction_near_v(&gf, &params))
        }
        _ => None,
    };
    let tol = config.f64("ratio_tol");
    let pass = rows.iter().all(|r| (r.ratio_a - 1.0).abs() <= tol);
    let report = json!({
        "mode": config.text("mode"),
        "c": c,
        "omega": omega,
        "alpha": alpha,
        "rows": rows,
        "f_decay_exponent": f_decay,
        "g_decay_exponent": g_decay,
        "g_mass_fraction_near_v": near_v,
        "profile_relative_residual": profile.relative_residual,
        "ratio_tol": tol,
        "pass": pass,
    });
    writer.write("projections.json", &to_json(&report))?;
    Ok(Outcome::checked(pass, format!("{} separations", rows.len())))
}

fn interaction_constant(config: &RunConfig, c: f64) -> Res<f64> {
    if let Some(a) = config.opt_f64("alpha") {
        return Ok(a);
    }
    let omega = config.f64("omega");
    if c == 1.0 {
        return Ok(symmetric_alpha(omega));
    }
    let pgrid = Grid::new(60.0, 8192)?;
    Ok(alpha_c(c, omega, &solve_a(c, omega, &pgrid)?.field)?.alpha_c)
}

fn reduce(config: &RunConfig, writer: &mut RunWriter) -> Res<Outcome> {
    let model_name = config.text("model");
    if model_name == "book" {
        return reduce_book(config, writer);
    }
    let (model, law_state): (ModelSpec, Box<dyn Fn(f64) -> ReducedState>) = if model_name == "nonsym" {
        let c = config.f64("c");
        let al = interaction_constant(config, c)?;
        let om = capital_omega(c, al);
        (ModelSpec::Nonsym { c, alpha_c: al }, Box::new(move |t| nonsym_exact(c, om, t)))
    } else {
        let al = interaction_constant(config, 1.0)?;
        let om = (4.0 * al).sqrt();
        (ModelSpec::Sym { alpha: al }, Box::new(move |t| sym_formal(om, t)))
    };
    let t0 = match (config.opt_f64("t0"), model) {
        (Some(t), _) => t,
        (None, ModelSpec::Nonsym { c, alpha_c }) => (10.0 * c).exp() / capital_omega(c, alpha_c),
        (None, _) => 100.0,
    };
    let t_end = config.opt_f64("t_end").unwrap_or(100.0 * t0);
    if t_end <= t0 {
        return Err(CliError::Input(format!("t_end = {t_end} must exceed t0 = {t0}")));
    }
    let rel_dt = config.f64("rel_dt");
    let per = config.usize("samples_per_segment");
    if config.bool("scan") {
        let mut labels = Vec::new();
        for i in 0..10 {
            for j in 0..10 {
                let s0 = ReducedState::new(6.0 + i as f64, -0.02 + 0.005 * j as f64);
                let traj = integrate_log_partial(&model, s0, t0, t_end, rel_dt, per)?;
                let cls = classify_regime(&traj);
                labels.push(json!({"sigma0": s0.sigma, "beta0": s0.beta, "label": cls.label, "note": cls.note}));
            }
        }
        let oscillatory = labels.iter().filter(|l| l["label"] == json!(Regime::BoundedOscillatory)).count();
        let report = json!({"model": model, "t0": t0, "t_end": t_end, "starts": labels, "bounded_oscillatory": oscillatory});
        writer.write("scan.json", &to_json(&report))?;
        return Ok(Outcome::checked(true, format!("{oscillatory} bounded_oscillatory of 100")));
    }
    let law0 = law_state(t0);
    let sigma0 = config.opt_f64("sigma0").unwrap_or(law0.sigma);
    let beta0 = match (config.opt_f64("beta0"), model) {
        (Some(b), _) => b,
        // zero first integral: the orbit that neither escapes linearly nor returns
        (None, ModelSpec::Sym { alpha }) => (0.5 * alpha * (2.0 * sigma0 + 1.0) * (-2.0 * sigma0).exp()).sqrt(),
        (None, _) => law0.beta,
    };
    let s0 = ReducedState::new(sigma0, beta0);
    let traj = integrate_log_partial(&model, s0, t0, t_end, rel_dt, per)?;
    writer.write("trajectory.csv", &csv(|b| write_ode_csv(b, &traj))?)?;
    let i0 = first_integral(&model, &s0)?;
    let mut drift = 0.0f64;
    let mut law_gap = 0.0f64;
    for (t, s) in traj.times.iter().zip(&traj.states) {
        drift = drift.max((first_integral(&model, s)? - i0).abs());
        let law = law_state(*t).sigma;
        law_gap = law_gap.max(((s.sigma - law) / law).abs());
    }
    let cls = classify_regime(&traj);
    let (t_last, last) = traj.last();
    let report = json!({
        "model": model,
        "t0": t0,
        "t_end": t_end,
        "initial": s0,
        "final": {"t": t_last, "state": last},
        "first_integral": i0,
        "first_integral_drift": drift,
        "max_relative_gap_to_law": law_gap,
        "classification": cls,
        "halt": traj.halt,
    });
    writer.write("reduce.json", &to_json(&report))?;
    Ok(Outcome::checked(true, format!("{:?}", cls.label)))
}

fn reduce_book(config: &RunConfig, writer: &mut RunWriter) -> Res<Outcome> {
    let (cg, cs) = (config.f64("c_gamma"), config.f64("c_sigma"));
    let model = ModelSpec::Book { c_gamma: cg, c_sigma: cs };
    let t0 = config.opt_f64("t0").unwrap_or(1.0);
    let t_end = config.opt_f64("t_end").unwrap_or(200.0);
    if t_end <= t0 {
        return Err(CliError::Input(format!("t_end = {t_end} must exceed t0 = {t0}")));
    }
    let dt = config.f64("dt");
    if config.bool("scan") {
        let pi = std::f64::consts::PI;
        let points = book_scan(cg, cs, &[0.0, 0.5 * pi, pi], &[0.0, 0.5], &[0.0, 1.0], t_end, dt)?;
        let count = |r: Regime| points.iter().filter(|p| p.label == r).count();
        let report = json!({
            "model": model,
            "t_end": t_end,
            "points": points,
            "bounded_oscillatory": count(Regime::BoundedOscillatory),
            "divergent_linear": count(Regime::DivergentLinear),
            "logarithmic": count(Regime::Logarithmic),
            "inconclusive": count(Regime::Inconclusive),
        });
        writer.write("scan.json", &to_json(&report))?;
        return Ok(Outcome::checked(true, format!("{} starts classified", points.len())));
    }
    let s0 = ReducedState::book(
        config.opt_f64("sigma0").unwrap_or(0.0),
        config.f64("gamma0"),
        config.f64("sigma_dot0"),
        config.f64("gamma_dot0"),
    );
    let stride = ((0.05 / dt).round() as usize).max(1);
    let traj = integrate_partial(&model, s0, t0, t_end, dt, stride)?;
    writer.write("trajectory.csv", &csv(|b| write_ode_csv(b, &traj))?)?;
    let cls = classify_regime(&traj);
    let (t_last, last) = traj.last();
    let report = json!({
        "model": model,
        "t0": t0,
        "t_end": t_end,
        "initial": s0,
        "final": {"t": t_last, "state": last},
        "classification": cls,
        "halt": traj.halt,
    });
    writer.write("reduce.json", &to_json(&report))?;
    Ok(Outcome::checked(true, format!("{:?}", cls.label)))
}

fn build_setup(config: &RunConfig) -> Res<(RegimeSetup, Option<Separatrix>, Grid)> {
    let omega = config.f64("omega");
    let g = grid(config, "grid_half_width", "grid_n")?;
    let pgrid = grid(config, "profile_half_width", "profile_n")?;
    let sigma0 = config.f64("sigma0");
    if config.text("mode") == "symmetric" {
        let b = solve_b(omega, &pgrid)?;
        let proj = grid(config, "projection_half_width", "projection_n")?;
        let (setup, sep) = sym_setup(&g, &proj, omega, sigma0, &b.field)?;
        Ok((setup, Some(sep), g))
    } else {
        let c = config.f64("c");
        let a = solve_a(c, omega, &pgrid)?;
        Ok((nonsym_setup(&g, c, omega, sigma0, &a.field)?, None, g))
    }
}

fn simulate(config: &RunConfig, writer: &mut RunWriter, judge: bool) -> Res<Outcome> {
    let (setup, sep, g) = build_setup(config)?;
    let omega = config.f64("omega");
    let c = setup.params.c;
    let dt = config.f64("dt");
    let t_end = config.f64("t_end_factor") * setup.t0;
    let steps = ((t_end - setup.t0) / dt).round();
    if steps > config.usize("max_steps") as f64 {
        return Err(CliError::Input(format!(
            "the run needs {steps} steps, above max_steps = {}",
            config.usize("max_steps")
        )));
    }
    let sim = SimConfig {
        grid: g,
        dt,
        t_end,
        omega,
        snapshot_stride: config.usize("sample_every"),
        tracking: Some(TrackingConfig { c, law: Some(setup.law) }),
        enforce_symmetry: config.bool("enforce_symmetry"),
        dealias: config.bool("dealias"),
    };
    let every = config.usize("snapshot_every");
    let mut snapshots: Vec<(String, Vec<u8>)> = Vec::new();
    let mut index = 0usize;
    let out: RunOutput = run_with(&sim, setup.state.clone(), |state| {
        if every > 0 && index % every == 0 {
            let mut bytes = Vec::new();
            write_snapshot(&mut bytes, state, omega)
                .map_err(|e| cnls::Error::Numerical(format!("snapshot encoding failed: {e}")))?;
            snapshots.push((format!("snapshot_{index:06}.nls2"), bytes));
        }
        index += 1;
        Ok(())
    })?;
    for (name, bytes) in &snapshots {
        writer.write(name, bytes)?;
    }
    let mut final_bytes = Vec::new();
    write_snapshot(&mut final_bytes, &out.final_state, omega)?;
    writer.write("final.nls2", &final_bytes)?;
    writer.write("trajectory.csv", &csv(|b| write_trajectory_csv(b, &out.record))?)?;

    let record = &out.record;
    let summary = json!({
        "mode": config.text("mode"),
        "c": c,
        "omega": omega,
        "t0": setup.t0,
        "t_end": t_end,
        "final_t": out.final_state.t,
        "initial_params": setup.params,
        "alpha": setup.alpha,
        "omega_cap": setup.omega_cap,
        "law": setup.law,
        "separatrix": sep,
        "samples": record.samples.len(),
        "mass_u_drift": record.relative_drift(|s| s.mass_u),
        "mass_v_drift": record.relative_drift(|s| s.mass_v),
        "energy_drift": record.relative_drift(|s| s.energy),
        "max_symmetry_error": record.samples.iter().map(|s| s.symmetry_error).fold(0.0, f64::max),
        "halt": out.halt,
    });
    writer.write("simulate.json", &to_json(&summary))?;
    if let Some(reason) = &out.halt {
        return Err(CliError::Fault(format!("run halted: {reason}")));
    }
    if !judge {
        return Ok(Outcome::checked(true, format!("{} samples", record.samples.len())));
    }
    let symmetric = config.text("mode") == "symmetric";
    let tol = RegimeTolerances {
        slope_rel: (!symmetric).then(|| config.f64("slope_tol")),
        intercept_decay_lengths: config.opt_f64("intercept_tol"),
        loglog_range: symmetric.then(|| [config.f64("loglog_min"), config.f64("loglog_max")]),
        mass_drift: Some(config.f64("mass_tol")),
        energy_drift: Some(config.f64("energy_tol")),
        symmetry: symmetric.then(|| config.f64("symmetry_tol")),
    };
    let report = regime_report(record, setup.law, &tol)?;
    writer.write("regime.json", &to_json(&json!({"report": report, "tolerances": tol})))?;
    let failed: Vec<&str> = report.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    let message = if failed.is_empty() {
        "all checks passed".to_string()
    } else {
        format!("failed checks: {}", failed.join(", "))
    };
    Ok(Outcome::checked(report.pass, message))
}

/// Reads the `t` and `y` columns of a trajectory CSV.
pub fn read_ty(path: &Path) -> Res<(Vec<f64>, Vec<f64>)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| CliError::Input(format!("{} is empty", path.display())))?
        .split(',')
        .map(str::trim)
        .collect();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| *h == name)
            .ok_or_else(|| CliError::Input(format!("{} has no {name:?} column", path.display())))
    };
    let (it, iy) = (col("t")?, col("y")?);
    let (mut ts, mut ys) = (Vec::new(), Vec::new());
    for (n, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let parse = |i: usize| -> Res<f64> {
            fields
                .get(i)
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| CliError::Input(format!("{} line {}: bad number", path.display(), n + 2)))
        };
        ts.push(parse(it)?);
        ys.push(parse(iy)?);
    }
    Ok((ts, ys))
}

fn fit(config: &RunConfig, writer: &mut RunWriter) -> Res<Outcome> {
    let input = Path::new(config.text("input"));
    let (ts, ys) = read_ty(input)?;
    let input_sha256 = hex_digest(&std::fs::read(input)?);
    let t_min = config.opt_f64("t_min").unwrap_or(f64::NEG_INFINITY);
    let t_max = config.opt_f64("t_max").unwrap_or(f64::INFINITY);
    let (ts, ys): (Vec<f64>, Vec<f64>) = ts
        .into_iter()
        .zip(ys)
        .filter(|(t, _)| *t >= t_min && *t <= t_max)
        .unzip();
    let model = match config.text("model") {
        "pure_log" => FitModel::PureLog,
        "log_plus_loglog" => FitModel::LogPlusLogLog,
        _ => FitModel::LogLogFixedSlope { slope: config.f64("slope") },
    };
    let res = fit_log(&ts, &ys, model)?;
    let names = model.coefficient_names();
    let coef = |name: &str| names.iter().position(|n| *n == name).map(|i| res.coefficients[i]);
    let mut pass = true;
    let mut tolerances = serde_json::Map::new();
    if let (Some(expected), Some(p)) = (config.opt_f64("expected_slope"), coef("p")) {
        let tol = config.f64("slope_tol");
        pass &= ((p - expected) / expected).abs() <= tol;
        tolerances.insert("expected_slope".into(), json!(expected));
        tolerances.insert("slope_tol".into(), json!(tol));
    }
    if let Some(r) = coef("r") {
        if let Some(lo) = config.opt_f64("loglog_min") {
            pass &= r >= lo;
            tolerances.insert("loglog_min".into(), json!(lo));
        }
        if let Some(hi) = config.opt_f64("loglog_max") {
            pass &= r <= hi;
            tolerances.insert("loglog_max".into(), json!(hi));
        }
    }
    let named: serde_json::Map<String, serde_json::Value> = names
        .iter()
        .zip(&res.coefficients)
        .map(|(n, v)| (n.to_string(), json!(v)))
        .collect();
    let report = json!({
        "model": model.name(),
        "input_sha256": input_sha256,
        "coefficients": named,
        "residual_rms": res.residual_rms,
        "condition_number": res.condition_number,
        "window": res.window,
        "samples": ts.len(),
        "pass": pass,
        "tolerances": tolerances,
    });
    writer.write("fit.json", &to_json(&report))?;
    Ok(Outcome::checked(pass, format!("coefficients {:?}", res.coefficients)))
}
