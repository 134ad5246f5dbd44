use crate::config::{ConfigError, ExperimentConfig, ExperimentKind};
use crate::report::{create_dir, fmt_f64, write_file, Csv, Report};
use crate::CliError;
use hypowave_core::experiments::{
    beam_study, loglog_slope, prepare_sweep_point, run_escape, run_sweep, BeamStudySpec, EscapeSpec, SweepSpec,
};
use hypowave_core::flow::integrate_bicharacteristic;
use hypowave_core::frames::{format_frame, parse_frame, BUILTIN_FRAMES};
use hypowave_core::nilpotent::{graded_parts, nilpotent_approx, nilpotent_convergence, sr_flag};
use hypowave_core::wave::{observability_quotient, write_checkpoint, StencilOrder};
use hypowave_core::{builtin_frame, SubRiemannianFrame};
use std::path::{Path, PathBuf};

/// Runs `config`, writes its outputs under `config.out` and returns the report.
///
/// `config.jobs > 0` runs inside a dedicated pool of that many threads.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Report, CliError> {
    config.validate()?;
    let go = || -> Result<Report, CliError> {
        let out = config.out.as_path();
        create_dir(out)?;
        let mut extra = Vec::new();
        let mut report = match config.kind {
            ExperimentKind::Flow => flow(config)?,
            ExperimentKind::Beam => beam(config)?,
            ExperimentKind::Wave => wave(config, out, &mut extra)?,
            ExperimentKind::Sweep => sweep(config)?,
            ExperimentKind::Nilpotent => nilpotent(config, out, &mut extra)?,
            ExperimentKind::Escape => escape(config)?,
        };
        report.write(out, config, &extra)?;
        Ok(report)
    };
    if config.jobs == 0 {
        go()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.jobs)
            .build()
            .map_err(|e| ConfigError::Invalid(format!("cannot start {} worker threads: {e}", config.jobs)))?
            .install(go)
    }
}

fn load_frame(name: &str) -> Result<SubRiemannianFrame, CliError> {
    if BUILTIN_FRAMES.contains(&name) {
        return Ok(builtin_frame(name)?);
    }
    let path = Path::new(name);
    if !path.exists() {
        return Err(ConfigError::Value { key: "frame".into(), msg: format!("`{name}` is neither a built-in frame nor a file") }.into());
    }
    let text = std::fs::read_to_string(path).map_err(|cause| CliError::ConfigIo { path: path.to_path_buf(), cause })?;
    Ok(parse_frame(&text)?)
}

fn require_heisenberg(config: &ExperimentConfig) -> Result<(), CliError> {
    if config.frame.starts_with("heisenberg") {
        Ok(())
    } else {
        Err(ConfigError::Value { key: "frame".into(), msg: format!("`{}` runs on the heisenberg family only", config.kind) }.into())
    }
}

fn order(config: &ExperimentConfig) -> StencilOrder {
    match config.order {
        2 => StencilOrder::Second,
        4 => StencilOrder::Fourth,
        6 => StencilOrder::Sixth,
        _ => StencilOrder::Eighth,
    }
}

fn f(v: f64) -> String {
    fmt_f64(v)
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_else(|| "none".into())
}

fn list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.4e}")).collect::<Vec<_>>().join(", ")
}

/// `flow.csv`: `t, x1..xn, xi1..xin, gstar`.
fn flow(config: &ExperimentConfig) -> Result<Report, CliError> {
    let frame = load_frame(&config.frame)?;
    let traj = integrate_bicharacteristic(&frame, &config.x0, &config.xi0, config.t_final, config.dt)?;
    let n = frame.dim();
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("x{i}")));
    header.extend((1..=n).map(|i| format!("xi{i}")));
    header.push("gstar".into());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut csv = Csv::new("flow.csv", &header);
    for (t, p) in traj.times.iter().zip(&traj.states) {
        let mut row = vec![f(*t)];
        row.extend(p.x.iter().map(|v| f(*v)));
        row.extend(p.xi.iter().map(|v| f(*v)));
        row.push(f(frame.g_star(p)?));
        csv.row(row);
    }
    let mut r = Report::default();
    let rate = traj.drift / traj.duration().max(f64::MIN_POSITIVE);
    r.notes.push(format!("samples: {}", traj.len()));
    r.notes.push(format!("gstar: {}", f(traj.hamiltonian_value)));
    r.check("hamiltonian conserved", rate <= 1e-9 * traj.hamiltonian_value.abs().max(1.0), format!("drift {rate:.3e} per unit time"));
    r.tables.push(csv);
    Ok(r)
}

/// `beam_energy.csv`: `k, t, total_energy, outside_energy`;
/// `beam_residual.csv`: `k, residual, frozen_residual`.
fn beam(config: &ExperimentConfig) -> Result<Report, CliError> {
    require_heisenberg(config)?;
    const SAMPLES: usize = 5;
    let spec = BeamStudySpec {
        eps: config.eps[0],
        t_final: config.t_final,
        cutoff: config.cutoff,
        box_half_width: config.half_width,
        ks: config.k.clone(),
        energy_times: (0..SAMPLES).map(|i| config.t_final * i as f64 / (SAMPLES - 1) as f64).collect(),
        tube_radius: 0.1,
        with_frozen_control: true,
    };
    let rows = beam_study(&spec)?;
    let mut energy = Csv::new("beam_energy.csv", &["k", "t", "total_energy", "outside_energy"]);
    let mut residual = Csv::new("beam_residual.csv", &["k", "residual", "frozen_residual"]);
    for row in &rows {
        for &(t, e, o) in &row.energies {
            energy.row(vec![f(row.k), f(t), f(e), f(o)]);
        }
        residual.row(vec![f(row.k), f(row.residual), opt(row.frozen_residual)]);
    }
    let mut r = Report::default();
    if rows.len() >= 2 {
        let ks: Vec<f64> = rows.iter().map(|row| row.k).collect();
        let slope = loglog_slope(&ks, &rows.iter().map(|row| row.residual).collect::<Vec<_>>());
        let frozen: Vec<f64> = rows.iter().filter_map(|row| row.frozen_residual).collect();
        let frozen_slope = loglog_slope(&ks, &frozen);
        r.notes.push(format!("residual slope: {}", f(slope)));
        r.notes.push(format!("frozen-phase residual slope: {}", f(frozen_slope)));
        r.check("residual slope -1/2", (slope + 0.5).abs() <= 0.15, format!("slope {slope:.4}, window -0.5 ± 0.15"));
        r.check("frozen phase breaks the slope", (frozen_slope + 0.5).abs() > 0.15, format!("slope {frozen_slope:.4}"));
    }
    let low: Vec<_> = rows.iter().filter(|row| row.k <= 160.0).collect();
    if low.len() >= 2 {
        let mut var: f64 = 0.0;
        for j in 0..SAMPLES {
            let e: Vec<f64> = low.iter().map(|row| row.energies[j].1).collect();
            let lo = e.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = e.iter().cloned().fold(0.0, f64::max);
            var = var.max((hi - lo) / lo);
        }
        let frac: Vec<f64> =
            low.iter().map(|row| row.energies.iter().map(|e| e.2 / e.1).sum::<f64>() / SAMPLES as f64).collect();
        r.check("beam energy stable in k", var <= 0.25, format!("variation {:.2}% for k <= 160", 100.0 * var));
        r.check("tube exterior fraction decreasing", frac.windows(2).all(|w| w[1] < w[0]), format!("fractions {}", list(&frac)));
    }
    r.tables.push(energy);
    r.tables.push(residual);
    Ok(r)
}

fn sweep_spec(config: &ExperimentConfig, points: Vec<(f64, f64)>) -> SweepSpec {
    SweepSpec {
        points,
        t_final: config.t_final,
        half_width: config.half_width,
        cutoff_factor: config.cutoff,
        points_per_wavelength: config.ppw,
        order: order(config),
        grid: config.grid.clone(),
        jobs: config.jobs,
        ..SweepSpec::default()
    }
}

/// `wave_steps.csv`: `t, energy, omega_increment`; `wave_summary.csv`: one row.
fn wave(config: &ExperimentConfig, out: &Path, extra: &mut Vec<PathBuf>) -> Result<Report, CliError> {
    require_heisenberg(config)?;
    let (eps, k) = (config.eps[0], config.k[0]);
    let spec = sweep_spec(config, vec![(eps, k)]);
    let setup = prepare_sweep_point(&spec, eps, k)?;
    let omega = config.omega.clone().unwrap_or_else(|| setup.omega.clone());
    let distance = omega.distance_from(&[0.0; 3]);
    if setup.tube_reach >= distance {
        return Err(hypowave_core::Error::Precondition(format!(
            "eps = {eps}: confinement radius + cutoff = {:.6} reaches omega at distance {distance:.6}",
            setup.tube_reach
        ))
        .into());
    }
    let chk = out.join("initial.chk");
    write_checkpoint(&chk, setup.op.grid(), &setup.state).map_err(|cause| CliError::Io { path: chk.clone(), cause })?;
    extra.push(chk);
    let run = observability_quotient(setup.state, &setup.op, &omega, setup.steps)?;
    let mut steps = Csv::new("wave_steps.csv", &["t", "energy", "omega_increment"]);
    for s in &run.history {
        steps.row(vec![f(s.t), f(s.energy), f(s.omega_increment)]);
    }
    let mut summary = Csv::new(
        "wave_summary.csv",
        &["eps", "k", "t_final", "steps", "nodes", "quotient", "energy_drift", "tube_reach", "omega_distance"],
    );
    let nodes: usize = setup.counts.iter().product();
    summary.row(vec![
        f(eps),
        f(k),
        f(run.steps as f64 * run.dt),
        run.steps.to_string(),
        nodes.to_string(),
        f(run.quotient),
        f(run.energy_drift),
        f(setup.tube_reach),
        f(distance),
    ]);
    let mut r = Report::default();
    r.notes.push(format!("grid: {:?}", setup.counts));
    r.notes.push(format!("quotient: {}", f(run.quotient)));
    r.check("discrete energy conserved", run.energy_drift <= 1e-8, format!("relative drift {:.3e}", run.energy_drift));
    r.tables.push(steps);
    r.tables.push(summary);
    Ok(r)
}

/// `sweep.csv`: `eps, k, t_final, steps, nodes, quotient, energy_drift, tube_reach, omega_distance`.
fn sweep(config: &ExperimentConfig) -> Result<Report, CliError> {
    require_heisenberg(config)?;
    if config.omega.is_some() {
        return Err(ConfigError::Value { key: "omega".into(), msg: "sweep fixes omega from half_width".into() }.into());
    }
    let spec = sweep_spec(config, config.eps.iter().copied().zip(config.k.iter().copied()).collect());
    let rows = run_sweep(&spec)?;
    let mut csv = Csv::new(
        "sweep.csv",
        &["eps", "k", "t_final", "steps", "nodes", "quotient", "energy_drift", "tube_reach", "omega_distance"],
    );
    for row in &rows {
        let rep = &row.report;
        csv.row(vec![
            f(rep.eps),
            f(rep.k),
            f(rep.t_final),
            row.steps.to_string(),
            row.counts.iter().product::<usize>().to_string(),
            f(rep.quotient),
            f(rep.energy_drift),
            f(row.tube_reach),
            f(row.omega_distance),
        ]);
    }
    let q: Vec<f64> = rows.iter().map(|row| row.report.quotient).collect();
    let mut r = Report::default();
    r.check("observability quotient decreasing", q.windows(2).all(|w| w[1] < w[0]), format!("quotients {}", list(&q)));
    if q.len() >= 2 {
        let ratio = q[q.len() - 1] / q[0];
        r.check("final quotient at most 0.2 of first", ratio <= 0.2, format!("ratio {ratio:.4}"));
    }
    r.tables.push(csv);
    Ok(r)
}

/// `nilpotent.txt`: flag, graded parts and the approximation in frame format;
/// `nilpotent_convergence.csv`: `eps, field, sup_norm, ratio`.
fn nilpotent(config: &ExperimentConfig, out: &Path, extra: &mut Vec<PathBuf>) -> Result<Report, CliError> {
    let frame = load_frame(&config.frame)?;
    let q = &config.point;
    let flag = sr_flag(&frame, q)?;
    let approx = nilpotent_approx(&frame, q)?;
    let mut text = format!(
        "growth_vector = {:?}\nweights = {:?}\nstep = {}\nhomogeneous_dimension = {}\n",
        flag.growth_vector, flag.weights, flag.step, flag.homogeneous_dimension
    );
    for (i, field) in frame.fields().iter().enumerate() {
        for (deg, part) in &graded_parts(&field.translate(q), &flag.weights).parts {
            let comps: Vec<String> = part.components().iter().map(|c| c.to_string()).collect();
            text.push_str(&format!("field {} degree {deg}: ({})\n", i + 1, comps.join(", ")));
        }
    }
    text.push_str("\n# nilpotent approximation\n");
    text.push_str(&format_frame(&approx));
    let path = out.join("nilpotent.txt");
    write_file(&path, &text)?;
    print!("{text}");
    extra.push(path);

    let mut eps = config.eps.clone();
    eps.sort_by(|a, b| b.total_cmp(a));
    let rows = nilpotent_convergence(&frame, q, &eps)?;
    let mut csv = Csv::new("nilpotent_convergence.csv", &["eps", "field", "sup_norm", "ratio"]);
    let mut ratios = Vec::new();
    let mut exact = true;
    for (j, row) in rows.iter().enumerate() {
        for (i, &s) in row.sup_norms.iter().enumerate() {
            exact &= s == 0.0;
            let ratio = j.checked_sub(1).map(|p| {
                let prev = &rows[p];
                // observed order rescaled to a halving of ε
                let order = (prev.sup_norms[i] / s).ln() / (prev.eps / row.eps).ln();
                2f64.powf(order)
            });
            if let Some(v) = ratio.filter(|v| v.is_finite()) {
                ratios.push(v);
            }
            csv.row(vec![f(row.eps), (i + 1).to_string(), f(s), opt(ratio)]);
        }
    }
    let mut r = Report::default();
    r.notes.push(format!("growth vector {:?}, weights {:?}", flag.growth_vector, flag.weights));
    let pass = if exact { true } else { !ratios.is_empty() && ratios.iter().all(|v| (1.8..=2.2).contains(v)) };
    let detail = if exact { "frame is homogeneous, distances vanish".to_string() } else { format!("ratios {}", list(&ratios)) };
    r.check("nilpotent convergence O(eps)", pass, detail);
    r.tables.push(csv);
    Ok(r)
}

/// `escape.csv`: `eps, id, escape_time, bound, pass`.
fn escape(config: &ExperimentConfig) -> Result<Report, CliError> {
    require_heisenberg(config)?;
    let spec = EscapeSpec {
        eps: config.eps.clone(),
        samples: config.samples,
        horizon: config.horizon,
        dt_factor: config.dt,
        seed: config.seed,
        ..EscapeSpec::default()
    };
    let s = run_escape(&spec)?;
    let mut csv = Csv::new("escape.csv", &["eps", "id", "escape_time", "bound", "pass"]);
    for row in &s.rows {
        let bound = s.bound(row.eps, spec.tolerance);
        let pass = matches!((row.escape_time, bound), (Some(t), Some(b)) if t <= b);
        csv.row(vec![f(row.eps), row.id.to_string(), opt(row.escape_time), opt(bound), pass.to_string()]);
    }
    let mut r = Report::default();
    r.notes.push(format!("kappa: {}", opt(s.kappa)));
    for (e, m) in &s.scaled_max {
        r.notes.push(format!("eps {}: eps * max escape = {}", f(*e), opt(*m)));
    }
    let finite = s.rows.iter().all(|row| row.escape_time.is_some());
    r.check("all escape times finite", finite, format!("{} samples", s.rows.len()));
    r.check("eps * max escape within tolerance of kappa", s.pass, format!("kappa {}", opt(s.kappa)));
    r.tables.push(csv);
    Ok(r)
}
