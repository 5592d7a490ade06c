//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nlpme::config::parse_config_at;
use nlpme::experiments::run_experiment;
use nlpme::grid::{
    frac_laplacian, make_grid, mollified_frac_laplacian, riesz_gradient, Field, FracOrder,
};
use nlpme::output::RunManifest;

const EIGEN_TOL: f64 = 1e-10;
const MOLLIFIED_ORDER: f64 = 1.5;
const MOLLIFIED_S: f64 = 0.9;

struct Outcome {
    pass: bool,
    detail: String,
    elapsed: Duration,
    budget: Duration,
}

struct Harness {
    configs: PathBuf,
    scratch: tempfile::TempDir,
    /// Output directories of every config run, for the determinism rerun.
    runs: BTreeMap<String, PathBuf>,
}

impl Harness {
    fn run(&mut self, name: &str) -> Result<RunManifest, String> {
        let path = self.configs.join(format!("{name}.toml"));
        let text =
            std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        let mut cfg =
            parse_config_at(&text, Some(&self.configs)).map_err(|e| format!("{name}: {e}"))?;
        let out = self.scratch.path().join("first").join(name);
        cfg.output_dir = out.clone();
        let manifest = run_experiment(&cfg).map_err(|e| format!("{name}: {e}"))?;
        self.runs.insert(name.to_string(), out);
        Ok(manifest)
    }

    /// Runs the configs and requires every listed check prefix to be present
    /// and every check of the run to pass.
    fn criterion(&mut self, runs: &[(&str, &[&str])]) -> (bool, String) {
        let mut pass = true;
        let mut notes = Vec::new();
        for (name, required) in runs {
            match self.run(name) {
                Ok(m) => {
                    for prefix in *required {
                        match m.check(prefix) {
                            Some(c) => notes.push(format!("{} = {:.3e}", prefix, c.value)),
                            None => {
                                pass = false;
                                notes.push(format!("{name}: missing check {prefix}"));
                            }
                        }
                    }
                    for c in m.checks.iter().filter(|c| !c.pass) {
                        pass = false;
                        notes.push(format!("{name}: FAIL {} ({:e})", c.name, c.value));
                    }
                    if let Some(e) = &m.error {
                        pass = false;
                        notes.push(format!("{name}: {e}"));
                    }
                }
                Err(e) => {
                    pass = false;
                    notes.push(e);
                }
            }
        }
        (pass, notes.join("; "))
    }
}

fn timed(budget_secs: u64, f: impl FnOnce() -> (bool, String)) -> Outcome {
    let start = Instant::now();
    let (pass, detail) = f();
    Outcome {
        pass,
        detail,
        elapsed: start.elapsed(),
        budget: Duration::from_secs(budget_secs),
    }
}

fn rel_l2(a: &Field, b: &Field) -> f64 {
    let num: f64 = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).powi(2))
        .sum();
    let den: f64 = b.values().iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

fn operator_exactness() -> (bool, String) {
    let g = make_grid(PI, 256).unwrap();
    let mut worst = 0.0f64;
    for alpha in [0.25, 0.5, 0.75, 1.0] {
        let order = FracOrder::new(alpha).unwrap();
        for j in 1..128 {
            let k = j as f64;
            let c = Field::from_fn(&g, |x| (k * x).cos()).unwrap();
            let lap = Field::from_fn(&g, |x| k.powf(2.0 * alpha) * (k * x).cos()).unwrap();
            worst = worst.max(rel_l2(&frac_laplacian(&c, order).unwrap(), &lap));
            // Riesz gradient with pressure order s = 1 - α
            let sn = Field::from_fn(&g, |x| (k * x).sin()).unwrap();
            let grad =
                Field::from_fn(&g, |x| k.powf(1.0 - 2.0 * (1.0 - alpha)) * (k * x).cos()).unwrap();
            if alpha < 1.0 {
                worst = worst.max(rel_l2(&riesz_gradient(&sn, 1.0 - alpha).unwrap(), &grad));
            }
        }
    }
    (
        worst < EIGEN_TOL,
        format!("max relative error {worst:.2e} (tol {EIGEN_TOL:e})"),
    )
}

fn mollified_errors() -> Vec<f64> {
    let g = make_grid(8.0, 512).unwrap();
    let f = Field::from_fn(&g, |x| (-x * x / 4.0).exp()).unwrap();
    let exact = frac_laplacian(&f, FracOrder::new(1.0 - MOLLIFIED_S).unwrap()).unwrap();
    [0.2, 0.1, 0.05]
        .iter()
        .map(|&e| {
            rel_l2(
                &mollified_frac_laplacian(&f, MOLLIFIED_S, e).unwrap(),
                &exact,
            )
        })
        .collect()
}

fn mollified_convergence() -> (bool, String) {
    let errs = mollified_errors();
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let pass = orders.iter().all(|&p| p >= MOLLIFIED_ORDER);
    let errs: Vec<String> = errs.iter().map(|e| format!("{e:.3e}")).collect();
    (
        pass,
        format!(
            "errors [{}], orders {orders:.3?} (need >= {MOLLIFIED_ORDER})",
            errs.join(", ")
        ),
    )
}

fn csv_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).into_iter().flatten().flatten() {
        let p = entry.path();
        if p.extension().is_some_and(|e| e == "csv") {
            out.insert(
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            );
        }
    }
    out
}

fn determinism(h: &mut Harness) -> (bool, String) {
    let mut pass = true;
    let mut notes = Vec::new();
    // direct criteria: bitwise equal numbers
    if operator_exactness().1 != operator_exactness().1 {
        pass = false;
        notes.push("operator errors differ".to_string());
    }
    let (a, b) = (mollified_errors(), mollified_errors());
    if a.iter().zip(&b).any(|(x, y)| x.to_bits() != y.to_bits()) {
        pass = false;
        notes.push("mollified errors differ".to_string());
    }
    let runs: Vec<(String, PathBuf)> = h.runs.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
    let mut files = 0;
    for (name, first) in runs {
        let path = h.configs.join(format!("{name}.toml"));
        let text = std::fs::read_to_string(&path).unwrap();
        let mut cfg = parse_config_at(&text, Some(&h.configs)).unwrap();
        cfg.output_dir = h.scratch.path().join("second").join(&name);
        if let Err(e) = run_experiment(&cfg) {
            pass = false;
            notes.push(format!("{name}: {e}"));
            continue;
        }
        let x = csv_files(&first);
        let y = csv_files(&cfg.output_dir);
        if x.is_empty() || x != y {
            pass = false;
            notes.push(format!("{name}: CSV outputs differ"));
        }
        files += x.len();
    }
    notes.insert(0, format!("{files} CSV files compared"));
    (pass, notes.join("; "))
}

fn main() -> ExitCode {
    let mut h = Harness {
        configs: Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs"),
        scratch: tempfile::tempdir().expect("temporary directory"),
        runs: BTreeMap::new(),
    };
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    results.push(("operator exactness", timed(1, operator_exactness)));
    results.push((
        "mollified-operator convergence",
        timed(10, mollified_convergence),
    ));
    results.push((
        "conservation and monotonicity",
        timed(180, || {
            let req: &[&str] = &[
                "mass_drift",
                "sup_increase",
                "l2_increase",
                "l4_increase",
                "second_energy_increase",
            ];
            let (mut pass, mut notes) = (true, Vec::new());
            for cfg in [
                "conservation_m1.5_s0.3",
                "conservation_m2_s0.5",
                "conservation_m3_s0.7",
            ] {
                let start = Instant::now();
                let (p, d) = h.criterion(&[(cfg, req)]);
                let secs = start.elapsed().as_secs_f64();
                // each case has its own 60 s budget
                pass &= p && secs <= 60.0;
                notes.push(format!("{cfg}: {d} ({secs:.2} s)"));
            }
            (pass, notes.join(" | "))
        }),
    ));
    results.push((
        "smoothing exponent",
        timed(120, || h.criterion(&[("smoothing", &["smoothing_gap"])])),
    ));
    results.push((
        "scaling self-consistency",
        timed(120, || {
            h.criterion(&[("scaling", &["scaling_relative_l1"])])
        }),
    ));
    results.push((
        "finite propagation",
        timed(60, || {
            h.criterion(&[("finite_propagation", &["support_fit_residual"])])
        }),
    ));
    results.push((
        "infinite-propagation witness",
        timed(120, || {
            h.criterion(&[
                (
                    "barrier",
                    &[
                        "barrier_initial_margin_negated",
                        "barrier_right_margin_negated",
                        "barrier_subsolution_residual",
                        "v_x1_t1",
                    ],
                ),
                ("infinite_propagation", &["tail_mass"]),
            ])
        }),
    ));
    results.push((
        "duality",
        timed(120, || {
            h.criterion(&[(
                "duality",
                &[
                    "duality_l1_relative_n1024",
                    "duality_l1_relative_n2048",
                    "duality_improves_under_refinement",
                ],
            )])
        }),
    ));
    results.push((
        "comparison principle",
        timed(60, || {
            h.criterion(&[("comparison", &["comparison_violation"])])
        }),
    ));
    results.push((
        "transformation closure",
        timed(180, || {
            h.criterion(&[(
                "transform",
                &[
                    "residual_closure_ratio_n512",
                    "residual_closure_ratio_n1024",
                    "mapped_residual_decreases_under_refinement",
                ],
            )])
        }),
    ));
    results.push((
        "asymptotics",
        timed(600, || {
            let req: &[&str] = &[
                "family_l2_distances_decreasing",
                "extracted_profiles_converge",
            ];
            h.criterion(&[("asymptotics_m1.5", req), ("asymptotics_m3", req)])
        }),
    ));
    let det = {
        let start = Instant::now();
        let (pass, detail) = determinism(&mut h);
        Outcome {
            pass,
            detail,
            elapsed: start.elapsed(),
            budget: Duration::from_secs(900),
        }
    };
    results.push(("determinism", det));

    let mut all = true;
    for (i, (name, o)) in results.iter().enumerate() {
        let in_budget = o.elapsed <= o.budget;
        let pass = o.pass && in_budget;
        all &= pass;
        println!(
            "{} {:>2}. {name}: {} [{:.2} s, budget {} s{}]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            o.elapsed.as_secs_f64(),
            o.budget.as_secs(),
            if in_budget { "" } else { ", EXCEEDED" }
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
