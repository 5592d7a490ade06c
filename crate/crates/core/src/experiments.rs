//! Experiment pipelines behind the `nlpme` driver.
//!
//! Each pipeline writes its CSV and SVG artifacts into the output directory,
//! records named checks, and finishes with `manifest.txt`. A numerical abort
//! still leaves a partial manifest behind before the error is returned.

use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{
    BarrierSpec, ComparisonSpec, DualitySpec, Experiment, ExperimentConfig, InitialData,
    PropagationMode,
};
use crate::diagnostics::{
    asymptotic_report, energy_monotonicity, family_snap_times, finite_propagation,
    infinite_propagation_witness, l1_distance, lp_norm, mass, max_relative_increase, rescaled_runs,
    scaling_commutation, smoothing_fit,
};
use crate::error::{invalid, Error, Result};
use crate::grid::{make_grid, Field, FracOrder, Grid1D};
use crate::integrated::{
    differentiate_primitive, integrate_density, integrated_dt, simulate_integrated,
    step_integrated, verify_barrier, BarrierSearch, Bump, IntegratedRun, PrimitiveField,
};
use crate::output::{
    read_csv, time_label, ArtifactWriter, Check, Figure, RunManifest, Series, Table,
};
use crate::selfsimilar::{
    exponents_fpme, exponents_m1, manufacture_fpme_profile, map_fpme_to_m1, profile_residual,
    ProfileKind,
};
use crate::solver::{continuation_limit, gaussian, mollified_dirac, simulate_m1, Trajectory};

/// Relative clipped mass allowed in any run.
pub const CLIP_TOLERANCE: f64 = 1e-8;
/// Margin on the fitted smoothing constant.
pub const SMOOTHING_MARGIN: f64 = 2.0;
/// Largest repair of the integrated scheme, relative to the mass.
pub const REPAIR_TOLERANCE: f64 = 1e-6;
const MAX_PLOTTED: usize = 8;

fn bump_density(grid: &Grid1D, mass_target: f64, center: f64, half_width: f64) -> Result<Field> {
    let b = Bump {
        center,
        half_width,
        height: 1.0,
    };
    let f = Field::from_fn(grid, |x| b.eval(x))?;
    let m = mass(&f);
    if !(m > 0.0) {
        return Err(invalid("half_width", "bump is not resolved by the grid"));
    }
    f.map(|v| v * mass_target / m)
}

/// Initial density of the configuration sampled on `grid`. A Heaviside
/// primitive becomes a mollified Dirac mass.
pub fn initial_density(data: &InitialData, grid: &Grid1D) -> Result<Field> {
    match data {
        InitialData::Gaussian {
            mass,
            width,
            center,
        } => Ok(gaussian(grid, *mass, *width, *center)),
        InitialData::Dirac { mass, center } => Ok(mollified_dirac(grid, *mass, *center)),
        InitialData::HeavisidePrimitive { mass, x0 } => Ok(mollified_dirac(grid, *mass, *x0)),
        InitialData::Bump {
            mass,
            center,
            half_width,
        } => bump_density(grid, *mass, *center, *half_width),
        InitialData::TwoBump {
            masses,
            centers,
            half_widths,
        } => {
            let a = bump_density(grid, masses[0], centers[0], half_widths[0])?;
            let b = bump_density(grid, masses[1], centers[1], half_widths[1])?;
            a.axpby(1.0, &b, 1.0)
        }
        InitialData::File { path } => density_from_file(path, grid),
        InitialData::Zero => Ok(Field::zeros(grid)),
    }
}

fn density_from_file(path: &Path, grid: &Grid1D) -> Result<Field> {
    let t = read_csv(path)?;
    if t.columns.len() != 2 || t.rows() != grid.n() {
        return Err(invalid(
            "initial_data.path",
            format!("expected two columns and {} rows", grid.n()),
        ));
    }
    let tol = 1e-9 * grid.half_length();
    if t.columns[0]
        .iter()
        .zip(grid.nodes())
        .any(|(a, b)| (a - b).abs() > tol)
    {
        return Err(invalid(
            "initial_data.path",
            "x column does not match the configured grid",
        ));
    }
    if t.columns[1].iter().any(|&v| v < 0.0) {
        return Err(Error::NegativeInput("initial data file"));
    }
    Field::new(grid, t.columns[1].clone())
}

/// Initial primitive; a Heaviside primitive is kept as a sharp jump.
pub fn initial_primitive(data: &InitialData, grid: &Grid1D) -> Result<PrimitiveField> {
    match data {
        InitialData::HeavisidePrimitive { mass, x0 } => PrimitiveField::heaviside(grid, *mass, *x0),
        other => integrate_density(&initial_density(other, grid)?),
    }
}

fn config_grid(cfg: &ExperimentConfig) -> Result<Grid1D> {
    make_grid(cfg.grid.half_length, cfg.grid.n)
}

/// Runs the configured experiment and writes its artifacts into
/// `cfg.output_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunManifest> {
    let start = Instant::now();
    let mut writer = ArtifactWriter::new(&cfg.output_dir)?;
    let mut checks = Vec::new();
    let outcome = dispatch(cfg, &mut writer, &mut checks);
    let manifest = RunManifest {
        experiment: cfg.experiment.name().to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.source.clone(),
        wall_clock_secs: start.elapsed().as_secs_f64(),
        checks,
        files: writer.files().to_vec(),
        error: outcome.as_ref().err().map(ToString::to_string),
    };
    writer.finish(&manifest)?;
    outcome.map(|()| manifest)
}

fn dispatch(cfg: &ExperimentConfig, w: &mut ArtifactWriter, checks: &mut Vec<Check>) -> Result<()> {
    match cfg.experiment {
        Experiment::Simulate => simulate(cfg, w, checks),
        Experiment::Integrated => integrated(cfg, w, checks),
        Experiment::Continuation => continuation(cfg, w, checks),
        Experiment::Propagation => propagation(cfg, w, checks),
        Experiment::Smoothing => smoothing(cfg, w, checks),
        Experiment::Asymptotics => asymptotics(cfg, w, checks),
        Experiment::TransformCheck => transform(cfg, w, checks),
        Experiment::BarrierCheck => barrier(cfg, w, checks),
    }
}

fn plotted_indices(k: usize) -> Vec<usize> {
    if k <= MAX_PLOTTED {
        return (0..k).collect();
    }
    let mut idx: Vec<usize> = (0..MAX_PLOTTED)
        .map(|i| i * (k - 1) / (MAX_PLOTTED - 1))
        .collect();
    idx.dedup();
    idx
}

fn profile_figure(
    title: &str,
    y_label: &str,
    grid: &Grid1D,
    curves: &[(String, &[f64])],
) -> Figure {
    profile_figure_at(title, y_label, &grid.nodes(), curves)
}

fn profile_figure_at(title: &str, y_label: &str, x: &[f64], curves: &[(String, &[f64])]) -> Figure {
    Figure {
        title: title.into(),
        x_label: "x".into(),
        y_label: y_label.into(),
        log_x: false,
        log_y: false,
        series: curves
            .iter()
            .map(|(label, y)| Series {
                label: label.clone(),
                x: x.to_vec(),
                y: y.to_vec(),
            })
            .collect(),
    }
}

fn write_trajectory(w: &mut ArtifactWriter, traj: &Trajectory, prefix: &str) -> Result<()> {
    let labelled: Vec<(String, &Field)> = traj
        .times
        .iter()
        .zip(&traj.snapshots)
        .map(|(&t, u)| (time_label(t), u))
        .collect();
    w.csv(
        &format!("{prefix}snapshots.csv"),
        &Table::from_fields(&labelled)?,
    )?;
    let col = |f: fn(&crate::solver::SnapshotDiagnostics) -> f64| -> Vec<f64> {
        traj.diagnostics.iter().map(f).collect()
    };
    let (ms, sup, l2, l4, en) = (
        col(|d| d.mass),
        col(|d| d.sup),
        col(|d| d.l2),
        col(|d| d.l4),
        col(|d| d.second_energy),
    );
    let table = Table::series(
        "t",
        &traj.times,
        &[
            ("mass", &ms),
            ("sup", &sup),
            ("l2", &l2),
            ("l4", &l4),
            ("second_energy", &en),
        ],
    )?;
    w.csv(&format!("{prefix}diagnostics.csv"), &table)?;
    let curves: Vec<(String, &[f64])> = plotted_indices(traj.times.len())
        .into_iter()
        .map(|i| (time_label(traj.times[i]), traj.snapshots[i].values()))
        .collect();
    w.svg(
        &format!("{prefix}density.svg"),
        &profile_figure("density evolution", "u", traj.grid(), &curves),
    )?;
    w.svg(
        &format!("{prefix}decay.svg"),
        &Figure {
            title: "sup-norm decay".into(),
            x_label: "t".into(),
            y_label: "sup u".into(),
            log_x: true,
            log_y: true,
            series: vec![Series {
                label: "sup u".into(),
                x: traj.times.clone(),
                y: sup,
            }],
        },
    )
}

fn smoothing_ratios(traj: &Trajectory) -> Result<Vec<(f64, f64)>> {
    let ex = exponents_m1(traj.params.m, traj.params.s, traj.params.n_dim, 1.0)?;
    let gamma = ex.alpha2;
    let delta = 2.0 * (1.0 - traj.params.s) * ex.beta2;
    Ok(traj
        .times
        .iter()
        .zip(&traj.diagnostics)
        .filter(|(&t, d)| t > 0.0 && d.mass > 0.0)
        .map(|(&t, d)| (t, d.sup / (t.powf(-gamma) * d.mass.powf(delta))))
        .collect())
}

/// Smallest `C` with `‖u(t)‖_∞ ≤ C t^{-γ} M^δ` over `t ≥ t_fit`, or over the
/// later half of the run when it ends before `t_fit`.
pub fn fitted_smoothing_constant(traj: &Trajectory, t_fit: f64) -> Result<f64> {
    let pts = smoothing_ratios(traj)?;
    let Some(&(t_last, _)) = pts.last() else {
        return Ok(0.0);
    };
    let cut = if t_last >= t_fit { t_fit } else { 0.5 * t_last };
    Ok(pts
        .iter()
        .filter(|(t, _)| *t >= cut)
        .map(|p| p.1)
        .fold(0.0, f64::max))
}

/// Largest ratio of the sup-norm to `SMOOTHING_MARGIN · c t^{-γ} M^δ` over
/// all `t > 0`; at most one when the bound holds.
pub fn smoothing_bound_ratio(traj: &Trajectory, c: f64) -> Result<f64> {
    let pts = smoothing_ratios(traj)?;
    if pts.is_empty() || pts.iter().all(|p| p.1 == 0.0) {
        return Ok(0.0);
    }
    Ok(pts
        .iter()
        .map(|p| p.1 / (SMOOTHING_MARGIN * c))
        .fold(0.0, f64::max))
}

/// The automatic per-run checks: mass, clipping, and monotone decay of the
/// sup-norm, `L^p` norms and second energy, plus the smoothing bound.
pub fn trajectory_checks(traj: &Trajectory, cfg: &ExperimentConfig) -> Result<Vec<Check>> {
    let tol = cfg.checks.monotone_tolerance;
    let m0 = traj.diagnostics.first().map_or(0.0, |d| d.mass);
    let clip = if m0 > 0.0 {
        traj.clipped_mass / m0
    } else {
        traj.clipped_mass
    };
    let sup: Vec<f64> = traj.diagnostics.iter().map(|d| d.sup).collect();
    let mut out = vec![
        Check::below("mass_drift", traj.mass_drift(), cfg.checks.mass_tolerance),
        Check::below("clipped_mass_fraction", clip, CLIP_TOLERANCE),
        Check::at_most("sup_increase", max_relative_increase(&sup), tol),
    ];
    let mut energy = 0.0f64;
    for &p in &cfg.checks.p_list {
        let r = energy_monotonicity(traj, p, tol)?;
        out.push(Check::at_most(
            &format!("l{p}_increase"),
            r.lp_violation,
            tol,
        ));
        energy = energy.max(r.energy_violation);
    }
    out.push(Check::at_most("second_energy_increase", energy, tol));
    let c = fitted_smoothing_constant(traj, 1.0)?;
    out.push(Check::at_most(
        "smoothing_bound_ratio",
        smoothing_bound_ratio(traj, c)?,
        1.0,
    ));
    Ok(out)
}

fn run_m1(cfg: &ExperimentConfig) -> Result<(Field, Trajectory)> {
    let grid = config_grid(cfg)?;
    let u0 = initial_density(&cfg.initial_data, &grid)?;
    let traj = simulate_m1(&u0, &cfg.model, cfg.time.t_end, &cfg.time.snap_times())?;
    Ok((u0, traj))
}

fn simulate(cfg: &ExperimentConfig, w: &mut ArtifactWriter, checks: &mut Vec<Check>) -> Result<()> {
    let (u0, traj) = run_m1(cfg)?;
    write_trajectory(w, &traj, "")?;
    checks.extend(trajectory_checks(&traj, cfg)?);
    if let Some(sc) = &cfg.scaling {
        let r = scaling_commutation(&u0, &cfg.model, sc.lambda, sc.t)?;
        let t = Table::from_fields(&[
            ("direct".into(), &r.direct),
            ("rescaled".into(), &r.rescaled),
        ])?;
        w.csv("scaling.csv", &t)?;
        w.svg(
            "scaling.svg",
            &profile_figure(
                "scaling self-consistency",
                "u",
                u0.grid(),
                &[
                    ("direct".into(), r.direct.values()),
                    ("rescaled".into(), r.rescaled.values()),
                ],
            ),
        )?;
        checks.push(Check::below(
            "scaling_relative_l1",
            r.relative_l1,
            sc.tolerance,
        ));
    }
    Ok(())
}

fn write_integrated(w: &mut ArtifactWriter, run: &IntegratedRun) -> Result<()> {
    let faces = run.snapshots[0].faces();
    let labels: Vec<String> = run.times.iter().map(|&t| time_label(t)).collect();
    let prims: Vec<(&str, &[f64])> = labels
        .iter()
        .zip(&run.snapshots)
        .map(|(l, v)| (l.as_str(), v.values()))
        .collect();
    w.csv("primitive.csv", &Table::series("x_face", &faces, &prims)?)?;
    let dens: Vec<Field> = run
        .snapshots
        .iter()
        .map(differentiate_primitive)
        .collect::<Result<_>>()?;
    let refs: Vec<(String, &Field)> = labels.iter().cloned().zip(&dens).collect();
    w.csv("density.csv", &Table::from_fields(&refs)?)?;
    let pick = plotted_indices(run.times.len());
    let curves: Vec<(String, &[f64])> = pick
        .iter()
        .map(|&i| (labels[i].clone(), run.snapshots[i].values()))
        .collect();
    w.svg(
        "primitive.svg",
        &profile_figure_at("integrated model: primitive", "v", &faces, &curves),
    )?;
    let curves: Vec<(String, &[f64])> = pick
        .iter()
        .map(|&i| (labels[i].clone(), dens[i].values()))
        .collect();
    w.svg(
        "density.svg",
        &profile_figure("integrated model: density", "v_x", dens[0].grid(), &curves),
    )?;
    Ok(())
}

fn integrated(
    cfg: &ExperimentConfig,
    w: &mut ArtifactWriter,
    checks: &mut Vec<Check>,
) -> Result<()> {
    let grid = config_grid(cfg)?;
    let alpha = FracOrder::new(cfg.alpha())?;
    let v0 = initial_primitive(&cfg.initial_data, &grid)?;
    let run = simulate_integrated(
        &v0,
        cfg.model.m,
        alpha,
        cfg.time.t_end,
        &cfg.time.snap_times(),
    )?;
    write_integrated(w, &run)?;
    let scale = v0.total_mass().max(f64::MIN_POSITIVE);
    checks.push(Check::at_most(
        "max_repair_relative",
        run.max_repair / scale,
        REPAIR_TOLERANCE,
    ));
    if let Some(d) = &cfg.duality {
        let levels = duality_levels(cfg, d)?;
        let ns: Vec<f64> = levels.iter().map(|l| l.0 as f64).collect();
        let rel: Vec<f64> = levels.iter().map(|l| l.1).collect();
        w.csv(
            "duality.csv",
            &Table::series("n", &ns, &[("l1_relative", &rel)])?,
        )?;
        for (n, r) in &levels {
            checks.push(Check::below(
                &format!("duality_l1_relative_n{n}"),
                *r,
                d.tolerance,
            ));
        }
        if rel.len() > 1 {
            checks.push(Check::holds(
                "duality_improves_under_refinement",
                rel.windows(2).all(|p| p[1] < p[0]),
            ));
        }
    }
    if let Some(c) = &cfg.comparison {
        let viol = comparison_violations(&grid, cfg.model.m, alpha, c, cfg.seed)?;
        let idx: Vec<f64> = (0..viol.len()).map(|i| i as f64).collect();
        w.csv(
            "comparison.csv",
            &Table::series("pair", &idx, &[("violation", &viol)])?,
        )?;
        let worst = viol.iter().copied().fold(0.0, f64::max);
        checks.push(Check::below("comparison_violation", worst, c.tolerance));
    }
    Ok(())
}

/// Relative L¹ distance between the derivative of the integrated solution and
/// the density solution at `t_end`, for each grid size of the refinement.
pub fn duality_levels(cfg: &ExperimentConfig, d: &DualitySpec) -> Result<Vec<(usize, f64)>> {
    let alpha = FracOrder::new(cfg.alpha())?;
    let t = cfg.time.t_end;
    crate::parallel::map(&d.refine, |&n| {
        let grid = make_grid(cfg.grid.half_length, n)?;
        let u0 = initial_density(&cfg.initial_data, &grid)?;
        let traj = simulate_m1(&u0, &cfg.model, t, &[t])?;
        let v0 = integrate_density(&u0)?;
        let run = simulate_integrated(&v0, cfg.model.m, alpha, t, &[t])?;
        let ui = differentiate_primitive(&run.snapshots[0])?;
        let u = &traj.snapshots[0];
        let norm = lp_norm(u, 1.0)?;
        Ok((
            n,
            if norm > 0.0 {
                l1_distance(&ui, u)? / norm
            } else {
                0.0
            },
        ))
    })
}

/// Random ordered pair of primitives `a ≤ b`: `b` carries the density of `a`
/// shifted left plus a nonnegative extra bump.
fn random_pair(grid: &Grid1D, rng: &mut ChaCha8Rng) -> Result<(PrimitiveField, PrimitiveField)> {
    let l = grid.half_length();
    let m = rng.random_range(0.5..2.0);
    let width = rng.random_range(0.3..1.0);
    let center = rng.random_range(-0.3 * l..0.3 * l);
    let shift = rng.random_range(0.0..1.0);
    let extra = rng.random_range(0.0..0.5);
    let extra_center = rng.random_range(-0.3 * l..0.3 * l);
    let u = gaussian(grid, m, width, center);
    let v = gaussian(grid, m, width, center - shift).axpby(
        1.0,
        &gaussian(grid, extra, 0.5, extra_center),
        1.0,
    )?;
    let a = integrate_density(&u)?;
    let b = integrate_density(&v)?;
    // both primitives come from positive densities; order holds up to roundoff
    let gap = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| x - y)
        .fold(f64::NEG_INFINITY, f64::max);
    if gap > 1e-12 {
        return Err(Error::Verification(format!(
            "generated pair is not ordered ({gap:e})"
        )));
    }
    Ok((a, b))
}

/// Largest `max(a - b)` over `steps` common steps for each of `spec.pairs`
/// seeded random ordered pairs.
pub fn comparison_violations(
    grid: &Grid1D,
    m: f64,
    alpha: FracOrder,
    spec: &ComparisonSpec,
    seed: u64,
) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<_> = (0..spec.pairs)
        .map(|_| random_pair(grid, &mut rng))
        .collect::<Result<_>>()?;
    crate::parallel::map(&pairs, |(a0, b0)| {
        let (mut a, mut b) = (a0.clone(), b0.clone());
        let mut worst = 0.0f64;
        for _ in 0..spec.steps {
            let dt = integrated_dt(&a, m, alpha, 0.4).min(integrated_dt(&b, m, alpha, 0.4));
            a = step_integrated(&a, m, alpha, dt)?;
            b = step_integrated(&b, m, alpha, dt)?;
            let v = a
                .values()
                .iter()
                .zip(b.values())
                .map(|(x, y)| x - y)
                .fold(0.0, f64::max);
            worst = worst.max(v);
        }
        Ok(worst)
    })
}

fn continuation(
    cfg: &ExperimentConfig,
    w: &mut ArtifactWriter,
    checks: &mut Vec<Check>,
) -> Result<()> {
    let spec = cfg
        .continuation
        .as_ref()
        .ok_or_else(|| invalid("continuation", "missing section"))?;
    let grid = config_grid(cfg)?;
    let u0 = initial_density(&cfg.initial_data, &grid)?;
    let rep = continuation_limit(
        &u0,
        &cfg.model,
        &spec.schedule,
        cfg.time.t_end,
        spec.checkpoint,
    )?;
    let idx: Vec<f64> = (0..rep.schedule.len()).map(|i| i as f64).collect();
    let eps: Vec<f64> = rep.schedule.iter().map(|s| s.0).collect();
    let del: Vec<f64> = rep.schedule.iter().map(|s| s.1).collect();
    let mu: Vec<f64> = rep.schedule.iter().map(|s| s.2).collect();
    w.csv(
        "schedule.csv",
        &Table::series(
            "run",
            &idx,
            &[
                ("eps", &eps),
                ("delta", &del),
                ("mu", &mu),
                ("mass_drift", &rep.mass_drifts),
            ],
        )?,
    )?;
    let didx: Vec<f64> = (0..rep.distances.len()).map(|i| i as f64).collect();
    w.csv(
        "distances.csv",
        &Table::series("pair", &didx, &[("l2_distance", &rep.distances)])?,
    )?;
    let fields: Vec<(String, &Field)> = rep
        .runs
        .iter()
        .enumerate()
        .map(|(i, r)| {
            (
                format!("run={i}"),
                r.at(spec.checkpoint).expect("checkpoint recorded"),
            )
        })
        .collect();
    w.csv("checkpoint.csv", &Table::from_fields(&fields)?)?;
    let curves: Vec<(String, &[f64])> = fields
        .iter()
        .map(|(l, f)| (l.clone(), f.values()))
        .collect();
    w.svg(
        "checkpoint.svg",
        &profile_figure("regularization continuation", "u", &grid, &curves),
    )?;
    if rep.distances.len() > 1 {
        checks.push(Check::holds(
            "continuation_distances_decreasing",
            rep.decreasing,
        ));
    }
    let drift = rep.mass_drifts.iter().copied().fold(0.0, f64::max);
    checks.push(Check::below("mass_drift", drift, cfg.checks.mass_tolerance));
    Ok(())
}

fn propagation(
    cfg: &ExperimentConfig,
    w: &mut ArtifactWriter,
    checks: &mut Vec<Check>,
) -> Result<()> {
    let spec = cfg
        .propagation
        .as_ref()
        .ok_or_else(|| invalid("propagation", "missing section"))?;
    let (_, traj) = run_m1(cfg)?;
    write_trajectory(w, &traj, "")?;
    checks.extend(trajectory_checks(&traj, cfg)?);
    match spec.mode {
        PropagationMode::Finite => {
            let rep = finite_propagation(&traj, spec.threshold_rel, spec.window, spec.tolerance)?;
            let fit: Vec<f64> = rep
                .times
                .iter()
                .map(|t| rep.affine_fit.0 + rep.affine_fit.1 * t)
                .collect();
            w.csv(
                "support.csv",
                &Table::series(
                    "t",
                    &rep.times,
                    &[("support_radius", &rep.support_radii), ("affine_fit", &fit)],
                )?,
            )?;
            w.svg(
                "support.svg",
                &Figure {
                    title: "support radius".into(),
                    x_label: "t".into(),
                    y_label: "R(t)".into(),
                    log_x: false,
                    log_y: false,
                    series: vec![
                        Series {
                            label: "support".into(),
                            x: rep.times.clone(),
                            y: rep.support_radii.clone(),
                        },
                        Series {
                            label: "affine fit".into(),
                            x: rep.times.clone(),
                            y: fit,
                        },
                    ],
                },
            )?;
            checks.push(Check::below(
                "support_fit_residual",
                rep.fit_residual,
                spec.tolerance,
            ));
        }
        PropagationMode::Infinite => {
            let rep = infinite_propagation_witness(&traj, spec.probe_radius, spec.t_probe)?;
            w.csv(
                "tails.csv",
                &Table::series("t", &traj.times, &[("tail_mass", &rep.tail_masses)])?,
            )?;
            let i = traj
                .times
                .iter()
                .position(|&t| t == spec.t_probe)
                .expect("probe time recorded");
            let mut c = Check::holds(
                "tail_mass beyond probe radius > 1e3 x clipping floor",
                rep.verdict,
            );
            c.value = rep.tail_masses[i];
            checks.push(c);
            if let Some(b) = &cfg.barrier {
                barrier_pipeline(cfg, b, w, checks)?;
            }
        }
    }
    Ok(())
}

fn smoothing(
    cfg: &ExperimentConfig,
    w: &mut ArtifactWriter,
    checks: &mut Vec<Check>,
) -> Result<()> {
    let spec = cfg
        .smoothing
        .ok_or_else(|| invalid("smoothing", "missing section"))?;
    let (_, traj) = run_m1(cfg)?;
    write_trajectory(w, &traj, "")?;
    checks.extend(trajectory_checks(&traj, cfg)?);
    let ex = exponents_m1(cfg.model.m, cfg.model.s, cfg.model.n_dim, 1.0)?;
    let fit = smoothing_fit(&traj, &ex, spec.window)?;
    let lx: Vec<f64> = fit.times.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = fit.values.iter().map(|v| v.ln()).collect();
    let (a, _) = crate::diagnostics::linear_fit(&lx, &ly);
    let fitted: Vec<f64> = fit
        .times
        .iter()
        .map(|t| (a + fit.fitted_exponent * t.ln()).exp())
        .collect();
    let theory: Vec<f64> = {
        let t0 = fit.times[0];
        fit.times
            .iter()
            .map(|t| fit.values[0] * (t / t0).powf(-fit.theory_exponent))
            .collect()
    };
    w.csv(
        "smoothing_fit.csv",
        &Table::series(
            "t",
            &fit.times,
            &[("sup", &fit.values), ("fit", &fitted), ("theory", &theory)],
        )?,
    )?;
    w.svg(
        "smoothing_fit.svg",
        &Figure {
            title: "smoothing exponent".into(),
            x_label: "t".into(),
            y_label: "sup u".into(),
            log_x: true,
            log_y: true,
            series: vec![
                Series {
                    label: "sup u".into(),
                    x: fit.times.clone(),
                    y: fit.values.clone(),
                },
                Series {
                    label: format!("fit {:.4}", fit.fitted_exponent),
                    x: fit.times.clone(),
                    y: fitted,
                },
                Series {
                    label: format!("theory {:.4}", -fit.theory_exponent),
                    x: fit.times.clone(),
                    y: theory,
                },
            ],
        },
    )?;
    checks.push(Check::below(
        "smoothing_gap",
        fit.relative_gap,
        spec.tolerance,
    ));
    Ok(())
}

fn asymptotics(
    cfg: &ExperimentConfig,
    w: &mut ArtifactWriter,
    checks: &mut Vec<Check>,
) -> Result<()> {
    let spec = cfg
        .asymptotics
        .as_ref()
        .ok_or_else(|| invalid("asymptotics", "missing section"))?;
    let grid = config_grid(cfg)?;
    let u0 = initial_density(&cfg.initial_data, &grid)?;
    let runs = rescaled_runs(
        &u0,
        &cfg.model,
        &spec.lambdas,
        &family_snap_times(spec.t_probe),
    )?;
    let m0 = mass(&u0);
    let family_drift = runs
        .iter()
        .flat_map(|r| r.diagnostics.iter().map(|d| d.mass))
        .map(|m| {
            if m0 > 0.0 {
                ((m - m0) / m0).abs()
            } else {
                m.abs()
            }
        })
        .fold(0.0, f64::max);
    checks.push(Check::below(
        "family_mass_drift",
        family_drift,
        cfg.checks.mass_tolerance,
    ));
    let c = fitted_smoothing_constant(&runs[0], spec.t_probe)?;
    let uniform = runs
        .iter()
        .map(|r| smoothing_bound_ratio(r, c))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    checks.push(Check::at_most("family_smoothing_bound_ratio", uniform, 1.0));

    let members: Vec<(String, &Field)> = runs
        .iter()
        .zip(&spec.lambdas)
        .map(|(r, l)| {
            (
                format!("lambda={l}"),
                r.at(spec.t_probe).expect("probe time recorded"),
            )
        })
        .collect();
    w.csv("family.csv", &Table::from_fields(&members)?)?;
    let curves: Vec<(String, &[f64])> = members
        .iter()
        .map(|(l, f)| (l.clone(), f.values()))
        .collect();
    w.svg(
        "family.svg",
        &profile_figure("rescaled family", "u", &grid, &curves),
    )?;

    let pairs: Vec<f64> = (0..spec.lambdas.len() - 1).map(|i| i as f64).collect();
    let mut profile_done = false;
    for &p in &spec.p_list {
        let rep = asymptotic_report(&runs, &spec.lambdas, spec.t_probe, p)?;
        w.csv(
            &format!("distances_l{p}.csv"),
            &Table::series("pair", &pairs, &[("distance", &rep.distances)])?,
        )?;
        let (wt, wd): (Vec<f64>, Vec<f64>) = rep.weighted.iter().copied().unzip();
        w.csv(
            &format!("weighted_l{p}.csv"),
            &Table::series("t", &wt, &[("weighted_distance", &wd)])?,
        )?;
        checks.push(Check::holds(
            &format!("family_l{p}_distances_decreasing"),
            rep.decreasing,
        ));
        checks.push(Check::holds(
            &format!("weighted_l{p}_distance_decreasing"),
            rep.weighted_decreasing,
        ));
        if !profile_done {
            let idx: Vec<f64> = (0..rep.profile_l1.len()).map(|i| i as f64).collect();
            w.csv(
                "profiles_l1.csv",
                &Table::series("member", &idx, &[("profile_l1_t_2t", &rep.profile_l1)])?,
            )?;
            checks.push(Check::holds(
                "extracted_profiles_converge",
                rep.profiles_converge,
            ));
            profile_done = true;
        }
    }
    Ok(())
}

/// Source and mapped profile residuals at one grid size.
#[derive(Debug, Clone)]
pub struct TransformLevel {
    pub n: usize,
    pub source: Field,
    pub mapped: Field,
    pub source_residual: Field,
    pub mapped_residual: Field,
    pub source_norm: f64,
    pub mapped_norm: f64,
}

/// Manufactures the FPME profile on each refinement level, maps it and
/// evaluates both profile residuals.
pub fn transform_levels(cfg: &ExperimentConfig) -> Result<Vec<TransformLevel>> {
    let spec = cfg
        .transform
        .as_ref()
        .ok_or_else(|| invalid("transform", "missing section"))?;
    let beta1 = exponents_fpme(spec.q, spec.sigma, 1)?;
    crate::parallel::map(&spec.refine, |&n| {
        let grid = make_grid(cfg.grid.half_length, n)?;
        let phi1 = manufacture_fpme_profile(&grid, spec.q, spec.sigma, spec.mass, spec.tau_end)?;
        let r1 = profile_residual(&phi1, ProfileKind::Fpme { beta1 }, spec.q, spec.sigma)?;
        let mp = map_fpme_to_m1(&phi1, spec.q, spec.sigma, 1, 1.0)?;
        let r2 = profile_residual(&mp.profile, mp.kind, mp.m, mp.s)?;
        Ok(TransformLevel {
            n,
            source_norm: r1.normalized(),
            mapped_norm: r2.normalized(),
            source: phi1,
            mapped: mp.profile,
            source_residual: r1.residual,
            mapped_residual: r2.residual,
        })
    })
}

fn transform(
    cfg: &ExperimentConfig,
    w: &mut ArtifactWriter,
    checks: &mut Vec<Check>,
) -> Result<()> {
    let spec = cfg
        .transform
        .as_ref()
        .ok_or_else(|| invalid("transform", "missing section"))?;
    let levels = transform_levels(cfg)?;
    let ns: Vec<f64> = levels.iter().map(|l| l.n as f64).collect();
    let src: Vec<f64> = levels.iter().map(|l| l.source_norm).collect();
    let dst: Vec<f64> = levels.iter().map(|l| l.mapped_norm).collect();
    let ratio: Vec<f64> = src.iter().zip(&dst).map(|(a, b)| b / a).collect();
    w.csv(
        "refinement.csv",
        &Table::series(
            "n",
            &ns,
            &[
                ("source_residual", &src),
                ("mapped_residual", &dst),
                ("ratio", &ratio),
            ],
        )?,
    )?;
    let fine = levels.last().expect("at least two levels");
    let grid = fine.source.grid().clone();
    w.csv(
        "profiles.csv",
        &Table::from_fields(&[
            ("fpme_profile".into(), &fine.source),
            ("mapped_profile".into(), &fine.mapped),
            ("fpme_residual".into(), &fine.source_residual),
            ("mapped_residual".into(), &fine.mapped_residual),
        ])?,
    )?;
    w.svg(
        "profiles.svg",
        &profile_figure(
            "profiles",
            "phi",
            &grid,
            &[
                ("fpme".into(), fine.source.values()),
                ("mapped".into(), fine.mapped.values()),
            ],
        ),
    )?;
    w.svg(
        "residuals.svg",
        &profile_figure(
            "residual map",
            "residual",
            &grid,
            &[
                ("fpme".into(), fine.source_residual.values()),
                ("mapped".into(), fine.mapped_residual.values()),
            ],
        ),
    )?;
    for (l, r) in levels.iter().zip(&ratio) {
        checks.push(Check::below(
            &format!("residual_closure_ratio_n{}", l.n),
            *r,
            spec.factor,
        ));
    }
    checks.push(Check::holds(
        "mapped_residual_decreases_under_refinement",
        dst.windows(2).all(|p| p[1] < p[0]),
    ));
    Ok(())
}

/// Probe points `x0 - start - step i` and `count` times spread over `[0, t1]`.
pub fn barrier_search(b: &BarrierSpec) -> BarrierSearch {
    BarrierSearch {
        taus: b.taus.clone(),
        xis: b.xis.clone(),
        probe_x: (0..b.probe_count)
            .map(|i| b.x0 - b.probe_start - b.probe_step * i as f64)
            .collect(),
        probe_t: (0..b.probe_times)
            .map(|i| b.t1 * i as f64 / (b.probe_times - 1) as f64)
            .collect(),
        safety: b.safety,
    }
}

fn barrier_pipeline(
    cfg: &ExperimentConfig,
    b: &BarrierSpec,
    w: &mut ArtifactWriter,
    checks: &mut Vec<Check>,
) -> Result<()> {
    let grid = config_grid(cfg)?;
    let alpha = cfg.alpha();
    let v0 = initial_primitive(&cfg.initial_data, &grid)?;
    let mut snaps = cfg.time.snap_times();
    for t in [0.0, b.t1] {
        if !snaps.contains(&t) {
            snaps.push(t);
        }
    }
    snaps.sort_by(f64::total_cmp);
    let run = simulate_integrated(
        &v0,
        cfg.model.m,
        FracOrder::new(alpha)?,
        cfg.time.t_end,
        &snaps,
    )?;
    let rep = verify_barrier(
        &run,
        cfg.model.m,
        alpha,
        b.x0,
        b.x1,
        b.t1,
        &barrier_search(b),
    )?;
    let faces = v0.faces();
    let phi_at = |t: f64| -> Vec<f64> {
        faces
            .iter()
            .map(|&x| rep.params.eval(&rep.g.bump, x, t))
            .collect()
    };
    let (phi0, phi1) = (phi_at(0.0), phi_at(b.t1));
    let vt1 = run.at(b.t1).expect("t1 recorded");
    w.csv(
        "barrier.csv",
        &Table::series(
            "x_face",
            &faces,
            &[
                ("v_t0", v0.values()),
                ("phi_t0", &phi0),
                ("v_t1", vt1.values()),
                ("phi_t1", &phi1),
            ],
        )?,
    )?;
    w.svg(
        "barrier.svg",
        &profile_figure_at(
            "barrier below the integrated solution",
            "v",
            &faces,
            &[
                ("v(0)".into(), v0.values()),
                ("phi(0)".into(), &phi0),
                (format!("v({})", b.t1), vt1.values()),
                (format!("phi({})", b.t1), &phi1),
            ],
        ),
    )?;
    let probe_t = barrier_search(b).probe_t;
    let probe_x = barrier_search(b).probe_x;
    let bump = &rep.g.bump;
    let mut res_x = Vec::new();
    let mut res_v = Vec::new();
    for &x in &probe_x {
        let r = crate::integrated::barrier_inequality_residual(&rep.params, bump, x, &probe_t);
        res_x.push(x);
        res_v.push(r.into_iter().fold(f64::NEG_INFINITY, f64::max));
    }
    w.csv(
        "barrier_residual.csv",
        &Table::series("x", &res_x, &[("max_residual", &res_v)])?,
    )?;
    checks.push(Check::at_most(
        "barrier_initial_margin_negated",
        -rep.initial_margin,
        0.0,
    ));
    checks.push(Check::at_most(
        "barrier_right_margin_negated",
        -rep.right_margin,
        0.0,
    ));
    checks.push(Check::at_most(
        "barrier_subsolution_residual",
        rep.max_residual,
        0.0,
    ));
    checks.push(Check::above("barrier_phi_x1", rep.phi_x1, 0.0));
    checks.push(Check::at_most(
        "barrier_phi_x1_minus_v_x1",
        rep.phi_x1 - rep.v_x1,
        0.0,
    ));
    checks.push(Check::above("v_x1_t1", rep.v_x1, 0.0));
    checks.push(Check::at_most("v_x1_t0", v0.at(b.x1), 0.0));
    Ok(())
}

fn barrier(cfg: &ExperimentConfig, w: &mut ArtifactWriter, checks: &mut Vec<Check>) -> Result<()> {
    let b = cfg
        .barrier
        .as_ref()
        .ok_or_else(|| invalid("barrier", "missing section"))?;
    barrier_pipeline(cfg, b, w, checks)
}
