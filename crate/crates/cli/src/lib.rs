//! Configuration-file-driven entry point: assemble systems, solve
//! boundary-value problems, scan spectra, and verify operator invariants,
//! emitting CSV and plain-text artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use quasidiff::config::{BuiltProblem, FunctionalConfig, ProblemConfig};
use quasidiff::operator::sample;
use quasidiff::problems::krein::KreinScanOptions;
use quasidiff::solver::solution_summary;
use quasidiff::spectral::{ScanOptions, SpectralWindow};
use quasidiff::{
    apply_t, assemble_system, check_symmetry, find_eigenvalues, fredholm_index,
    functional_pairing, solve_bvp, FunctionalData, OperatorSpec,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Assemble,
    Solve,
    Spectrum,
    Verify,
}

impl std::str::FromStr for Action {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "assemble" => Action::Assemble,
            "solve" => Action::Solve,
            "spectrum" => Action::Spectrum,
            "verify" => Action::Verify,
            other => bail!("unknown action {:?}; expected assemble | solve | spectrum | verify", other),
        })
    }
}

/// One run: a problem, exactly one action, its parameters, and an output
/// directory.
#[derive(Debug, Deserialize)]
pub struct RunConfig {
    #[serde(default)]
    pub action: Option<String>,
    #[serde(default)]
    pub out: Option<String>,
    pub problem: ProblemConfig,
    #[serde(default)]
    pub assemble: Option<AssembleParams>,
    #[serde(default)]
    pub solve: Option<SolveParams>,
    #[serde(default)]
    pub spectrum: Option<SpectrumParams>,
    #[serde(default)]
    pub verify: Option<VerifyParams>,
}

#[derive(Debug, Clone, Deserialize, Default)]
pub struct AssembleParams {
    #[serde(default)]
    pub lambda: Option<[f64; 2]>,
    #[serde(default)]
    pub f: Option<FunctionalConfig>,
}

#[derive(Debug, Clone, Deserialize, Default)]
pub struct SolveParams {
    #[serde(default)]
    pub lambda: Option<[f64; 2]>,
    #[serde(default)]
    pub f: Option<FunctionalConfig>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct SpectrumParams {
    /// Real window [lo, hi]; mutually exclusive with `rect`.
    #[serde(default)]
    pub window: Option<[f64; 2]>,
    /// Complex rectangle [re_lo, re_hi, im_lo, im_hi].
    #[serde(default)]
    pub rect: Option<[f64; 4]>,
    #[serde(default)]
    pub grid: Option<usize>,
    #[serde(default)]
    pub grid_im: Option<usize>,
    #[serde(default)]
    pub eigenfunctions: Option<bool>,
    #[serde(default)]
    pub root_tol: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Default)]
pub struct VerifyParams {
    /// Test trajectories per weak-form draw.
    #[serde(default)]
    pub trials: Option<usize>,
    /// Random functional draws for the weak-form suite.
    #[serde(default)]
    pub draws: Option<usize>,
    /// Randomized boundary-matrix draws for the index identity.
    #[serde(default)]
    pub index_draws: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
}

pub struct RunOutcome {
    pub report: String,
    pub passed: bool,
    pub artifacts: Vec<PathBuf>,
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let config: RunConfig = toml::from_str(&text).context("parsing config")?;
    Ok(config)
}

fn complex_of(pair: Option<[f64; 2]>) -> Complex64 {
    match pair {
        Some([re, im]) => Complex64::new(re, im),
        None => Complex64::ZERO,
    }
}

fn write_artifact(dir: &Path, name: &str, contents: &str, artifacts: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    artifacts.push(path);
    Ok(())
}

/// Execute one configured run, writing artifacts under `out_dir`.
pub fn run(config: &RunConfig, action: Action, out_dir: &Path) -> Result<RunOutcome> {
    fs::create_dir_all(out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;
    let mut artifacts = Vec::new();
    let problem = config.problem.build().map_err(|e| anyhow!("{}", e))?;

    match (&problem, action) {
        (BuiltProblem::Spec(spec), Action::Assemble) => {
            let params = config.assemble.clone().unwrap_or_default();
            let lambda = complex_of(params.lambda);
            let data = match &params.f {
                Some(f) => f.build(spec.m).map_err(|e| anyhow!("{}", e))?,
                None => FunctionalData::zero(spec.m),
            };
            let system = assemble_system(spec, lambda, &data).map_err(|e| anyhow!("{}", e))?;
            write_artifact(out_dir, "system.txt", &system.render(), &mut artifacts)?;
            Ok(RunOutcome {
                report: format!("assembled {}-dimensional system at lambda = {}\n", system.dim, lambda),
                passed: true,
                artifacts,
            })
        }
        (BuiltProblem::Spec(spec), Action::Solve) => {
            let params = config.solve.clone().unwrap_or_default();
            let lambda = complex_of(params.lambda);
            let data = match &params.f {
                Some(f) => f.build(spec.m).map_err(|e| anyhow!("{}", e))?,
                None => FunctionalData::zero(spec.m),
            };
            let solution = solve_bvp(spec, lambda, &data).map_err(|e| anyhow!("{}", e))?;
            write_artifact(out_dir, "trajectory.csv", &solution.trajectory.to_csv(), &mut artifacts)?;
            let mut report = format!(
                "solvable,kernel_dim,defect_dim,residual\n{}\n",
                solution_summary(&solution)
            );
            if let Some(note) = &solution.conditioning_note {
                writeln!(report, "note: {}", note)?;
            }
            write_artifact(out_dir, "report.txt", &report, &mut artifacts)?;
            Ok(RunOutcome {
                report,
                passed: solution.solvable,
                artifacts,
            })
        }
        (BuiltProblem::Spec(spec), Action::Spectrum) => {
            let params = config
                .spectrum
                .clone()
                .ok_or_else(|| anyhow!("spectrum action needs a [spectrum] block"))?;
            let window = match (params.window, params.rect) {
                (Some([lo, hi]), None) => SpectralWindow::Real { lo, hi },
                (None, Some([a, b, c, d])) => SpectralWindow::Rect { re: (a, b), im: (c, d) },
                _ => bail!("spectrum needs exactly one of `window` or `rect`"),
            };
            let mut opts = ScanOptions::default();
            if let Some(g) = params.grid {
                opts.grid = g;
            }
            if let Some(g) = params.grid_im {
                opts.grid_im = g;
            }
            if let Some(t) = params.root_tol {
                opts.root_tol = t;
            }
            opts.compute_eigenfunctions = params.eigenfunctions.unwrap_or(false);
            let result = find_eigenvalues(spec, window, &opts).map_err(|e| anyhow!("{}", e))?;
            write_artifact(out_dir, "spectrum.csv", &result.to_csv(), &mut artifacts)?;
            for (k, ev) in result.eigenvalues.iter().enumerate() {
                if let Some(tr) = &ev.eigenfunction {
                    write_artifact(
                        out_dir,
                        &format!("eigenfunction_{:03}.csv", k),
                        &tr.to_csv(),
                        &mut artifacts,
                    )?;
                }
            }
            Ok(RunOutcome {
                report: format!("{} eigenvalue(s) found\n", result.eigenvalues.len()),
                passed: true,
                artifacts,
            })
        }
        (BuiltProblem::Krein(solver), Action::Spectrum) => {
            let params = config
                .spectrum
                .clone()
                .ok_or_else(|| anyhow!("spectrum action needs a [spectrum] block"))?;
            let [lo, hi] = params
                .window
                .ok_or_else(|| anyhow!("the krein family scans real windows only"))?;
            let mut opts = KreinScanOptions::default();
            if let Some(g) = params.grid {
                opts.grid = g;
            }
            if let Some(t) = params.root_tol {
                opts.root_tol = t;
            }
            let roots = solver
                .find_eigenvalues(lo, hi, &opts)
                .map_err(|e| anyhow!("{}", e))?;
            let mut csv = String::from("re(lambda), im(lambda), multiplicity, residual\n");
            for &(l, r) in &roots {
                writeln!(csv, "{}, 0, 1, {}", l, r)?;
            }
            write_artifact(out_dir, "spectrum.csv", &csv, &mut artifacts)?;
            if params.eigenfunctions.unwrap_or(false) {
                for (k, &(l, _)) in roots.iter().enumerate() {
                    let tr = solver.eigenfunction(l).map_err(|e| anyhow!("{}", e))?;
                    write_artifact(
                        out_dir,
                        &format!("eigenfunction_{:03}.csv", k),
                        &tr.to_csv(),
                        &mut artifacts,
                    )?;
                }
            }
            Ok(RunOutcome {
                report: format!("{} eigenvalue(s) found\n", roots.len()),
                passed: true,
                artifacts,
            })
        }
        (BuiltProblem::Spec(spec), Action::Verify) => {
            let params = config.verify.clone().unwrap_or_default();
            let outcome = verify_spec(spec, &params)?;
            write_artifact(out_dir, "report.txt", &outcome.0, &mut artifacts)?;
            Ok(RunOutcome {
                report: outcome.0,
                passed: outcome.1,
                artifacts,
            })
        }
        (BuiltProblem::Krein(solver), Action::Verify) => {
            let params = config.verify.clone().unwrap_or_default();
            let outcome = verify_krein(solver, &params)?;
            write_artifact(out_dir, "report.txt", &outcome.0, &mut artifacts)?;
            Ok(RunOutcome {
                report: outcome.0,
                passed: outcome.1,
                artifacts,
            })
        }
        (BuiltProblem::Krein(_), Action::Assemble | Action::Solve) => {
            bail!("the krein family supports the spectrum and verify actions")
        }
    }
}

fn spec_is_real(spec: &OperatorSpec) -> bool {
    let sampled_real = |cf: &quasidiff::CoefficientFunction| {
        (0..32).all(|k| cf.eval_raw((k as f64 + 0.5) / 32.0).im.abs() < 1e-13)
    };
    spec.p.values().all(|e| {
        sampled_real(&e.base)
            && e.lambda_part.as_ref().map(|l| sampled_real(l)).unwrap_or(true)
    }) && spec.u.iter().all(|z| z.im == 0.0)
        && spec.v.iter().all(|z| z.im == 0.0)
        && spec.q.iter().all(|z| z.im == 0.0)
}

fn verify_spec(spec: &OperatorSpec, params: &VerifyParams) -> Result<(String, bool)> {
    let trials = params.trials.unwrap_or(20);
    let draws = params.draws.unwrap_or(3);
    let index_draws = params.index_draws.unwrap_or(20);
    let seed = params.seed.unwrap_or(0);
    let mut report = String::new();
    let mut all_pass = true;
    let mut record = |line: String, ok: bool, report: &mut String, all: &mut bool| {
        writeln!(report, "{} {}", if ok { "PASS" } else { "FAIL" }, line).unwrap();
        *all &= ok;
    };

    // index identity over randomized boundary matrices
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut index_ok = true;
    for _ in 0..index_draws {
        let randomized = sample::randomize_boundary(spec, &mut rng);
        let data = FunctionalData::zero(spec.m);
        let sol = solve_bvp(&randomized, Complex64::ZERO, &data).map_err(|e| anyhow!("{}", e))?;
        let index = fredholm_index(&randomized);
        if sol.kernel_dim as i64 - sol.defect_dim as i64 != index {
            index_ok = false;
            break;
        }
    }
    record(
        format!("index identity: kernel - defect = n - m - rank U + rank V over {} draws", index_draws),
        index_ok,
        &mut report,
        &mut all_pass,
    );

    // weak-form consistency of solve against the defining pairing
    let mut weak_ok = true;
    let mut worst: f64 = 0.0;
    for draw in 0..draws {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1000 + draw as u64));
        let f0 = sample::random_smooth(&mut rng, false);
        let data = FunctionalData::from_f0(spec.m, f0);
        let scale = 1.0 + data.norm();
        let sol = solve_bvp(spec, Complex64::ZERO, &data).map_err(|e| anyhow!("{}", e))?;
        if !sol.solvable {
            continue;
        }
        let trial = trial_of(spec, &data, &sol)?;
        let zs = sample::sample_test_space(spec, trials, &mut rng).map_err(|e| anyhow!("{}", e))?;
        for z in &zs {
            let lhs = apply_t(spec, Complex64::ZERO, &trial, z).map_err(|e| anyhow!("{}", e))?;
            let rhs = functional_pairing(spec, &data, z).map_err(|e| anyhow!("{}", e))?;
            let defect = (lhs - rhs).norm();
            worst = worst.max(defect / scale);
            if defect > 1e-7 * scale {
                weak_ok = false;
            }
        }
    }
    record(
        format!(
            "weak-form consistency: max normalized defect {:.3e} over {} draws x {} tests",
            worst, draws, trials
        ),
        weak_ok,
        &mut report,
        &mut all_pass,
    );

    // symmetry, when the data is real
    if spec_is_real(spec) {
        let sym = check_symmetry(spec, trials.min(10)).map_err(|e| anyhow!("{}", e))?;
        record(
            format!("symmetry: sigma = {:.3e}", sym.sigma),
            sym.sigma < 1e-8,
            &mut report,
            &mut all_pass,
        );
    } else {
        writeln!(report, "SKIP symmetry: spec has complex data")?;
    }

    Ok((report, all_pass))
}

/// Rebuild the (n+1)-component trial trajectory from a solved system.
fn trial_of(
    spec: &OperatorSpec,
    data: &FunctionalData,
    sol: &quasidiff::BvpSolution,
) -> Result<quasidiff::VectorTrajectory> {
    quasidiff::operator::trial_from_trajectory(spec, Complex64::ZERO, data, &sol.trajectory)
        .map_err(|e| anyhow!("{}", e))
}

fn verify_krein(solver: &quasidiff::KreinSolver, params: &VerifyParams) -> Result<(String, bool)> {
    let trials = params.trials.unwrap_or(10);
    let mut report = String::new();
    let mut all_pass = true;

    let sector = solver.positivity_sector(trials).map_err(|e| anyhow!("{}", e))?;
    let positive = sector
        .samples
        .iter()
        .all(|s| s.re > 0.0 && s.im.abs() <= 1e-9 * s.norm());
    writeln!(
        report,
        "{} positivity: numerical range on the positive real axis (half-angle {:.3e})",
        if positive { "PASS" } else { "FAIL" },
        sector.half_angle
    )?;
    all_pass &= positive;

    // atom-weight scaling: doubling all weights halves every eigenvalue
    if !solver.measure().atoms.is_empty() {
        let doubled = solver.measure().scaled(2.0);
        let doubled_solver = quasidiff::problems::krein_feller(
            &quasidiff::MonotoneMap::Expression(solver.h().clone()),
            doubled,
        )
        .map_err(|e| anyhow!("{}", e))?;
        let opts = KreinScanOptions::default();
        let base = solver.find_eigenvalues(0.01, 100.0, &opts).map_err(|e| anyhow!("{}", e))?;
        let scaled = doubled_solver
            .find_eigenvalues(0.005, 50.0, &opts)
            .map_err(|e| anyhow!("{}", e))?;
        let mut ok = base.len() == scaled.len();
        if ok {
            for (&(l, _), &(l2, _)) in base.iter().zip(scaled.iter()) {
                if (l2 - 0.5 * l).abs() > 1e-9 * l.max(1.0) {
                    ok = false;
                }
            }
        }
        writeln!(
            report,
            "{} mass scaling: doubling atom weights halves the spectrum",
            if ok { "PASS" } else { "FAIL" }
        )?;
        all_pass &= ok;
    }

    Ok((report, all_pass))
}
