//! Command definitions and dispatch for the `mra` binary.
//!
//! Subcommands: `generate` (draw a signal and noisy shifted observations),
//! `estimate` (debiased shift-invariant features), `solve
//! {rrr|em|bispectrum|sdp}` (the four recovery routes), `score` (orbit
//! comparison), and `experiment {fig1|fig2|fig3}` (the benchmark sweeps).
//! Global flags pick the master seed, output directory, thread count, and
//! desk- versus full-scale sweep defaults; a JSON config file can override
//! the experiment settings on top of the flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::json;
use sparse_mra::bispectrum_inversion::invert_bispectrum;
use sparse_mra::em::{em_solve, EmConfig};
use sparse_mra::invariants::estimate_invariants;
use sparse_mra::io::{
    AtomFile, EstimateFile, InvariantsFile, ObservationsFile, SignalFile,
};
use sparse_mra::orbit::align_to_orbit;
use sparse_mra::rng::{child_seed, substream};
use sparse_mra::rrr::{rrr_solve, RrrConfig};
use sparse_mra::sdp::{build_sdp, extract_signal, solve_sdp, SdpConfig};
use sparse_mra::signal::{
    generate_observations, sample_bernoulli_signal, sample_fixed_sparsity,
    AtomProfile, SparseSignal,
};

use crate::experiments::{self, fig1, fig2, fig3};
use crate::files;

/// Sparse multireference alignment toolkit.
#[derive(Debug, Parser)]
#[command(
    name = "mra",
    version,
    about = "Generate shifted noisy observations of sparse binary signals, \
estimate shift-invariant features, and recover the signal orbit."
)]
pub struct Cli {
    /// Global options shared by every subcommand.
    #[command(flatten)]
    pub global: GlobalOpts,
    /// Selected subcommand.
    #[command(subcommand)]
    pub command: Command,
}

/// Options accepted before (or after) any subcommand.
#[derive(Debug, Args)]
pub struct GlobalOpts {
    /// Master seed; every randomized step derives a child stream from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Directory output files are written into.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads for the sweeps (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Run sweeps at full replication scale instead of the quicker desk
    /// scale (raises per-cell trial counts).
    #[arg(long, global = true)]
    pub paper_scale: bool,
    /// JSON settings file applied on top of the flags (see `FileConfig`).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

/// Top-level subcommands.
#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a sparse binary signal and a batch of noisy shifted
    /// observations; writes signal.json and observations.json.
    Generate(GenerateArgs),
    /// Estimate the debiased mean, power spectrum, and bispectrum from an
    /// observation batch; writes invariants.json and power_spectrum.csv.
    Estimate(EstimateArgs),
    /// Recover a signal estimate with one of the solvers.
    #[command(subcommand)]
    Solve(SolveCommand),
    /// Compare an estimate to a reference signal over all shifts; writes
    /// score.json and prints the report.
    Score(ScoreArgs),
    /// Run one of the benchmark sweeps, writing resumable CSV tables.
    #[command(subcommand)]
    Experiment(ExperimentCommand),
}

/// Arguments of `generate`.
#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Signal length.
    #[arg(long = "L")]
    pub len: usize,
    /// Exact sparsity: the support is uniform over sets of this size.
    #[arg(long = "M", conflicts_with = "q")]
    pub sparsity: Option<usize>,
    /// Bernoulli parameter: each entry is 1 independently with this
    /// probability.
    #[arg(long)]
    pub q: Option<f64>,
    /// Number of observations.
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Noise standard deviation.
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    /// Atom profile JSON (`{"samples": [...]}`, one sample per signal
    /// position); omitted means a unit impulse, i.e. plain binary spikes.
    #[arg(long)]
    pub atom: Option<PathBuf>,
    /// Also export the observation matrix as observations.csv.
    #[arg(long)]
    pub csv: bool,
}

/// Arguments of `estimate`.
#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Observations file: JSON as written by `generate`, or a headerless
    /// CSV matrix (one observation per row; requires --sigma).
    #[arg(long)]
    pub obs: PathBuf,
    /// Noise level assumed by the debiasing; overrides the value stored in
    /// a JSON observations file and is required for CSV input.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Atom profile the observations were generated with; the features are
    /// deconvolved by it. Omitted means a unit impulse.
    #[arg(long)]
    pub atom: Option<PathBuf>,
}

/// Solver subcommands.
#[derive(Debug, Subcommand)]
pub enum SolveCommand {
    /// Relaxed alternating projections between the known-spectrum set and
    /// the binary-sparsity set; writes estimate_rrr.json.
    Rrr(RrrArgs),
    /// Expectation-maximization over shifts on the raw observations;
    /// writes estimate_em.json and em_delta_trace.csv.
    Em(EmArgs),
    /// Phase marching on the estimated bispectrum with gradient
    /// refinement; writes estimate_bispectrum.json and
    /// bispectrum_diagnostics.json.
    Bispectrum(BispectrumArgs),
    /// Lifted convex relaxation of the power-spectrum constraints; writes
    /// estimate_sdp.json and sdp_diagnostics.json.
    Sdp(SdpArgs),
}

/// Arguments of `solve rrr`.
#[derive(Debug, Args)]
pub struct RrrArgs {
    /// Power spectrum: a bare JSON array or any JSON object with a
    /// `power_spectrum` field (e.g. invariants.json).
    #[arg(long)]
    pub ps: PathBuf,
    /// Sparsity the projection enforces.
    #[arg(long = "M")]
    pub sparsity: usize,
    /// Relaxation parameter in (0, 2).
    #[arg(long, default_value_t = 0.5)]
    pub beta: f64,
    /// Stop once the binarized iterate reproduces the spectrum to this
    /// relative residual.
    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,
    /// Iteration cap.
    #[arg(long, default_value_t = 1_000_000)]
    pub max_iter: usize,
}

/// Arguments of `solve em`.
#[derive(Debug, Args)]
pub struct EmArgs {
    /// Observations file (JSON, or headerless CSV with --sigma).
    #[arg(long)]
    pub obs: PathBuf,
    /// Noise level; overrides the stored value, required for CSV input.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Bernoulli prior parameter.
    #[arg(long, default_value_t = 0.2)]
    pub q: f64,
    /// Stop once the iterate moves less than this in Euclidean norm.
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
    /// Iteration cap per restart.
    #[arg(long, default_value_t = 10_000)]
    pub max_iter: usize,
    /// Independent restarts; the best posterior score wins.
    #[arg(long, default_value_t = 1)]
    pub restarts: usize,
}

/// Arguments of `solve bispectrum`.
#[derive(Debug, Args)]
pub struct BispectrumArgs {
    /// Invariants file as written by `estimate`.
    #[arg(long)]
    pub invariants: PathBuf,
}

/// Arguments of `solve sdp`.
#[derive(Debug, Args)]
pub struct SdpArgs {
    /// Power spectrum: a bare JSON array or any JSON object with a
    /// `power_spectrum` field.
    #[arg(long)]
    pub ps: PathBuf,
    /// Residual tolerance of the splitting solver.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Outer-iteration cap.
    #[arg(long, default_value_t = 50_000)]
    pub max_outer: usize,
    /// Inner alternating-projection cap per outer iteration.
    #[arg(long, default_value_t = 2000)]
    pub max_inner: usize,
    /// Initial penalty weight of the splitting (adapted during the run).
    #[arg(long, default_value_t = 1.0)]
    pub rho: f64,
}

/// Arguments of `score`.
#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Estimate file: any JSON object with a `values` array
    /// (estimate_*.json or signal.json).
    #[arg(long)]
    pub estimate: PathBuf,
    /// Reference file, same accepted shapes.
    #[arg(long)]
    pub truth: PathBuf,
    /// Also search reflected shifts (the features cannot distinguish a
    /// signal from its reversal).
    #[arg(long)]
    pub reflections: bool,
}

/// Benchmark sweeps.
#[derive(Debug, Subcommand)]
pub enum ExperimentCommand {
    /// Iterations-to-convergence of the alternating-projection solver over
    /// a sparsity sweep on exact spectra.
    Fig1(ExperimentArgs),
    /// Error versus noise level for EM and the bispectrum route.
    Fig2(ExperimentArgs),
    /// Exact-recovery rate of the convex relaxation over a length/sparsity
    /// grid.
    Fig3(ExperimentArgs),
}

/// Grid overrides shared by the sweep subcommands. Flags that do not apply
/// to the chosen sweep are rejected.
#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Signal lengths to sweep, comma-separated (fig1, fig3).
    #[arg(long = "L", value_delimiter = ',')]
    pub l_list: Option<Vec<usize>>,
    /// Sparsities to sweep, comma-separated (fig1, fig3).
    #[arg(long = "M", value_delimiter = ',')]
    pub m_list: Option<Vec<usize>>,
    /// Bernoulli parameters to sweep, comma-separated (fig2).
    #[arg(long, value_delimiter = ',')]
    pub q: Option<Vec<f64>>,
    /// Noise levels to sweep, comma-separated (fig2).
    #[arg(long, value_delimiter = ',')]
    pub sigma: Option<Vec<f64>>,
    /// Trials per grid cell.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Delete this sweep's previous results in --out and start over.
    #[arg(long)]
    pub fresh: bool,
}

/// Optional JSON settings file (`--config`). Every field is optional;
/// present fields override the corresponding flag or default.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    /// Replaces the master seed.
    pub seed: Option<u64>,
    /// Overrides for `experiment fig1`.
    #[serde(default)]
    pub fig1: Fig1Overrides,
    /// Overrides for `experiment fig2`.
    #[serde(default)]
    pub fig2: Fig2Overrides,
    /// Overrides for `experiment fig3`.
    #[serde(default)]
    pub fig3: Fig3Overrides,
}

/// `fig1` section of the settings file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fig1Overrides {
    pub l_list: Option<Vec<usize>>,
    pub m_list: Option<Vec<usize>>,
    pub trials: Option<usize>,
    pub beta: Option<f64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
}

/// `fig2` section of the settings file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fig2Overrides {
    pub len: Option<usize>,
    pub n: Option<usize>,
    pub q_list: Option<Vec<f64>>,
    pub sigma_list: Option<Vec<f64>>,
    pub trials: Option<usize>,
    pub em_tol: Option<f64>,
    pub em_max_iter: Option<usize>,
    pub em_restarts: Option<usize>,
}

/// `fig3` section of the settings file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fig3Overrides {
    pub l_list: Option<Vec<usize>>,
    pub m_list: Option<Vec<usize>>,
    pub trials: Option<usize>,
    pub tol: Option<f64>,
    pub max_outer: Option<usize>,
    pub max_inner: Option<usize>,
}

/// Execute a parsed command line.
pub fn run(cli: Cli) -> Result<()> {
    if cli.global.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.global.threads)
            .build_global()
            .context("thread pool already configured")?;
    }
    let overrides: FileConfig = match &cli.global.config {
        Some(path) => files::read_json(path)?,
        None => FileConfig::default(),
    };
    let seed = overrides.seed.unwrap_or(cli.global.seed);
    let out = cli.global.out.clone();
    match cli.command {
        Command::Generate(args) => cmd_generate(&args, seed, &out),
        Command::Estimate(args) => cmd_estimate(&args, &out),
        Command::Solve(solve) => match solve {
            SolveCommand::Rrr(args) => cmd_solve_rrr(&args, seed, &out),
            SolveCommand::Em(args) => cmd_solve_em(&args, seed, &out),
            SolveCommand::Bispectrum(args) => cmd_solve_bispectrum(&args, &out),
            SolveCommand::Sdp(args) => cmd_solve_sdp(&args, seed, &out),
        },
        Command::Score(args) => cmd_score(&args, &out),
        Command::Experiment(experiment) => cmd_experiment(
            experiment,
            &overrides,
            seed,
            cli.global.paper_scale,
            &out,
        ),
    }
}

fn load_atom(path: Option<&PathBuf>, len: usize) -> Result<AtomProfile<f64>> {
    match path {
        None => Ok(AtomProfile::delta(len)),
        Some(path) => {
            let file: AtomFile = files::read_json(path)?;
            if file.samples.len() != len {
                bail!(
                    "atom in {} has {} samples but the signal length is {len}; \
atoms span the whole signal (zero-pad localized profiles)",
                    path.display(),
                    file.samples.len()
                );
            }
            Ok(file.to_atom()?)
        }
    }
}

fn cmd_generate(args: &GenerateArgs, seed: u64, out: &Path) -> Result<()> {
    let mut rng = substream(seed, 0);
    let signal: SparseSignal<f64> = match (args.sparsity, args.q) {
        (Some(m), None) => sample_fixed_sparsity(args.len, m, &mut rng)?,
        (None, Some(q)) => sample_bernoulli_signal(args.len, q, &mut rng),
        _ => bail!("pass exactly one of --M (exact sparsity) or --q (Bernoulli)"),
    };
    let atom = load_atom(args.atom.as_ref(), args.len)?;
    let set = generate_observations(
        &signal,
        &atom,
        args.n,
        args.sigma,
        child_seed(seed, 1),
    );
    files::write_json(&out.join("signal.json"), &SignalFile::from_signal(&signal))?;
    let obs = ObservationsFile::from_set(&set);
    files::write_json(&out.join("observations.json"), &obs)?;
    if args.csv {
        files::write_observations_csv(&out.join("observations.csv"), &obs)?;
    }
    println!(
        "generate: L = {}, support size = {}, n = {}, sigma = {} -> {}",
        args.len,
        signal.support().len(),
        args.n,
        args.sigma,
        out.join("observations.json").display()
    );
    Ok(())
}

fn cmd_estimate(args: &EstimateArgs, out: &Path) -> Result<()> {
    let file = files::read_observations(&args.obs, args.sigma)?;
    let set = file.to_set()?;
    let atom = load_atom(args.atom.as_ref(), set.len())?;
    let estimates = estimate_invariants(&set, set.sigma(), &atom)?;
    files::write_json(
        &out.join("invariants.json"),
        &InvariantsFile::from_estimates(&estimates),
    )?;
    files::write_power_spectrum_csv(
        &out.join("power_spectrum.csv"),
        &estimates.power_spectrum_est,
    )?;
    println!(
        "estimate: n = {}, sigma = {}, mean = {:.6} -> {}",
        estimates.n_used,
        estimates.sigma_assumed,
        estimates.mean_est,
        out.join("invariants.json").display()
    );
    Ok(())
}

fn cmd_solve_rrr(args: &RrrArgs, seed: u64, out: &Path) -> Result<()> {
    let ps = files::read_power_spectrum(&args.ps)?;
    let config = RrrConfig {
        beta: args.beta,
        tol: args.tol,
        max_iter: args.max_iter,
        seed: child_seed(seed, 0),
    };
    let result = rrr_solve(&ps, args.sparsity, &config)?;
    let mut estimate = EstimateFile::new("rrr", result.estimate.values().to_vec());
    estimate.iterations = Some(result.iterations);
    estimate.converged = Some(result.converged);
    estimate.residual = Some(result.final_residual);
    files::write_json(&out.join("estimate_rrr.json"), &estimate)?;
    println!(
        "rrr: converged = {}, iterations = {}, residual = {:.3e}",
        result.converged, result.iterations, result.final_residual
    );
    Ok(())
}

fn cmd_solve_em(args: &EmArgs, seed: u64, out: &Path) -> Result<()> {
    let file = files::read_observations(&args.obs, args.sigma)?;
    let set = file.to_set()?;
    let config = EmConfig {
        q: args.q,
        tol: args.tol,
        max_iter: args.max_iter,
        seed: child_seed(seed, 0),
        restarts: args.restarts,
    };
    let result = em_solve(&set, set.sigma(), &config)?;
    let mut estimate = EstimateFile::new("em", result.estimate.values().to_vec());
    estimate.continuous = Some(result.continuous.clone());
    estimate.iterations = Some(result.iterations);
    estimate.converged = Some(result.converged);
    estimate.score = Some(result.score);
    files::write_json(&out.join("estimate_em.json"), &estimate)?;
    let rows: Vec<Vec<String>> = result
        .delta_trace
        .iter()
        .enumerate()
        .map(|(i, delta)| vec![(i + 1).to_string(), delta.to_string()])
        .collect();
    experiments::write_summary(
        &out.join("em_delta_trace.csv"),
        "# em-delta v1: iteration,delta",
        &["iteration", "delta"],
        &rows,
    )?;
    println!(
        "em: converged = {}, iterations = {}, score = {:.6}",
        result.converged, result.iterations, result.score
    );
    Ok(())
}

fn cmd_solve_bispectrum(args: &BispectrumArgs, out: &Path) -> Result<()> {
    let file: InvariantsFile = files::read_json(&args.invariants)?;
    let estimates = file.to_estimates()?;
    let result = invert_bispectrum(&estimates)?;
    let mut estimate =
        EstimateFile::new("bispectrum", result.estimate.values().to_vec());
    estimate.continuous = Some(result.continuous.clone());
    estimate.iterations = Some(result.refine_steps);
    estimate.residual = Some(result.final_residual);
    files::write_json(&out.join("estimate_bispectrum.json"), &estimate)?;
    let diagnostics = json!({
        "initial_residual": result.initial_residual,
        "final_residual": result.final_residual,
        "refine_steps": result.refine_steps,
        "imaginary_ratio": result.imaginary_ratio,
        "imaginary_warning": result.imaginary_warning,
    });
    files::write_json(&out.join("bispectrum_diagnostics.json"), &diagnostics)?;
    println!(
        "bispectrum: residual {:.3e} -> {:.3e} in {} refine steps{}",
        result.initial_residual,
        result.final_residual,
        result.refine_steps,
        if result.imaginary_warning {
            " (warning: large imaginary residue)"
        } else {
            ""
        }
    );
    Ok(())
}

fn cmd_solve_sdp(args: &SdpArgs, seed: u64, out: &Path) -> Result<()> {
    let ps = files::read_power_spectrum(&args.ps)?;
    let problem = build_sdp(&ps, child_seed(seed, 0))?;
    let config = SdpConfig {
        tol: args.tol,
        max_outer: args.max_outer,
        max_inner: args.max_inner,
        rho: args.rho,
    };
    let solution = solve_sdp(&problem, &config)?;
    let diagnostics = json!({
        "objective_value": solution.objective_value,
        "eigenvalues": solution.eigenvalues,
        "rank1_gap": solution.rank1_gap,
        "iterations": solution.iterations,
        "converged": solution.converged,
        "infeasible": solution.infeasible,
        "residuals": {
            "trace": solution.residuals.trace,
            "diagonal": solution.residuals.diagonal,
            "gauge": solution.residuals.gauge,
            "negativity": solution.residuals.negativity,
            "splitting": solution.residuals.splitting,
            "max": solution.residuals.max(),
        },
    });
    files::write_json(&out.join("sdp_diagnostics.json"), &diagnostics)?;
    if solution.infeasible {
        eprintln!(
            "sdp: warning: residuals plateaued at {:.3e}; the spectrum may \
not belong to any binary signal",
            solution.residuals.max()
        );
    }
    let extraction = extract_signal(&solution)
        .context("sdp solution has no usable leading direction")?;
    let mut estimate =
        EstimateFile::new("sdp", extraction.estimate.values().to_vec());
    estimate.continuous = Some(extraction.rescaled_eigenvector.clone());
    estimate.iterations = Some(solution.iterations);
    estimate.converged = Some(solution.converged);
    estimate.residual = Some(extraction.ps_relative_error);
    estimate.rank1_gap = Some(solution.rank1_gap);
    files::write_json(&out.join("estimate_sdp.json"), &estimate)?;
    println!(
        "sdp: converged = {}, iterations = {}, rank-1 gap = {:.3e}, \
verified = {}",
        solution.converged,
        solution.iterations,
        solution.rank1_gap,
        extraction.verified
    );
    Ok(())
}

fn cmd_score(args: &ScoreArgs, out: &Path) -> Result<()> {
    /// Accepts any of the JSON shapes that carry a `values` array.
    #[derive(Deserialize)]
    struct ValuesOnly {
        values: Vec<f64>,
    }
    let estimate: ValuesOnly = files::read_json(&args.estimate)?;
    let truth: ValuesOnly = files::read_json(&args.truth)?;
    let error = align_to_orbit(&estimate.values, &truth.values, args.reflections)?;
    let report = json!({
        "relative_error": error.relative_error,
        "best_shift": error.best_shift,
        "reflected": error.reflected,
        "reflections_allowed": args.reflections,
    });
    println!("{}", serde_json::to_string_pretty(&report)?);
    files::write_json(&out.join("score.json"), &report)?;
    Ok(())
}

fn reject_flags(used: &[(&str, bool)], sweep: &str, applies: &str) -> Result<()> {
    for (flag, set) in used {
        if *set {
            bail!("{flag} does not apply to {sweep}; it sweeps {applies}");
        }
    }
    Ok(())
}

fn cmd_experiment(
    command: ExperimentCommand,
    overrides: &FileConfig,
    seed: u64,
    paper_scale: bool,
    out: &Path,
) -> Result<()> {
    match command {
        ExperimentCommand::Fig1(args) => {
            reject_flags(
                &[("--q", args.q.is_some()), ("--sigma", args.sigma.is_some())],
                "fig1",
                "L and M",
            )?;
            let mut config = fig1::Fig1Config::defaults(seed, paper_scale);
            if let Some(l) = args.l_list {
                config.l_list = l;
            }
            if let Some(m) = args.m_list {
                config.m_list = m;
            }
            if let Some(t) = args.trials {
                config.trials = t;
            }
            let o = &overrides.fig1;
            config.l_list = o.l_list.clone().unwrap_or(config.l_list);
            config.m_list = o.m_list.clone().unwrap_or(config.m_list);
            config.trials = o.trials.unwrap_or(config.trials);
            config.beta = o.beta.unwrap_or(config.beta);
            config.tol = o.tol.unwrap_or(config.tol);
            config.max_iter = o.max_iter.unwrap_or(config.max_iter);
            let outcome = fig1::run(&config, out, args.fresh)?;
            for cell in &outcome.cells {
                println!(
                    "fig1 L = {:>3} M = {:>2}: {}/{} converged, median {} iterations",
                    cell.len,
                    cell.sparsity,
                    cell.converged,
                    cell.trials,
                    cell.median_iterations
                );
            }
        }
        ExperimentCommand::Fig2(args) => {
            reject_flags(
                &[
                    ("--L", args.l_list.is_some()),
                    ("--M", args.m_list.is_some()),
                ],
                "fig2",
                "q and sigma",
            )?;
            let mut config = fig2::Fig2Config::defaults(seed, paper_scale);
            if let Some(q) = args.q {
                config.q_list = q;
            }
            if let Some(sigma) = args.sigma {
                config.sigma_list = sigma;
            }
            if let Some(t) = args.trials {
                config.trials = t;
            }
            let o = &overrides.fig2;
            config.len = o.len.unwrap_or(config.len);
            config.n = o.n.unwrap_or(config.n);
            config.q_list = o.q_list.clone().unwrap_or(config.q_list);
            config.sigma_list = o.sigma_list.clone().unwrap_or(config.sigma_list);
            config.trials = o.trials.unwrap_or(config.trials);
            config.em_tol = o.em_tol.unwrap_or(config.em_tol);
            config.em_max_iter = o.em_max_iter.unwrap_or(config.em_max_iter);
            config.em_restarts = o.em_restarts.unwrap_or(config.em_restarts);
            let outcome = fig2::run(&config, out, args.fresh)?;
            for slopes in &outcome.slopes {
                println!(
                    "fig2 q = {} {:<10}: slope {:.2} (sigma <= {}), {:.2} \
(sigma >= {}), steepest {:.2} on [{:.3}, {:.3}]",
                    slopes.q,
                    slopes.solver,
                    slopes.slope_low,
                    fig2::LOW_FIT_MAX_SIGMA,
                    slopes.slope_high,
                    fig2::HIGH_FIT_MIN_SIGMA,
                    slopes.slope_steepest,
                    slopes.steepest_sigma.0,
                    slopes.steepest_sigma.1
                );
            }
        }
        ExperimentCommand::Fig3(args) => {
            reject_flags(
                &[("--q", args.q.is_some()), ("--sigma", args.sigma.is_some())],
                "fig3",
                "L and M",
            )?;
            let mut config = fig3::Fig3Config::defaults(seed, paper_scale);
            if let Some(l) = args.l_list {
                config.l_list = l;
            }
            if let Some(m) = args.m_list {
                config.m_list = m;
            }
            if let Some(t) = args.trials {
                config.trials = t;
            }
            let o = &overrides.fig3;
            config.l_list = o.l_list.clone().unwrap_or(config.l_list);
            config.m_list = o.m_list.clone().unwrap_or(config.m_list);
            config.trials = o.trials.unwrap_or(config.trials);
            config.tol = o.tol.unwrap_or(config.tol);
            config.max_outer = o.max_outer.unwrap_or(config.max_outer);
            config.max_inner = o.max_inner.unwrap_or(config.max_inner);
            let outcome = fig3::run(&config, out, args.fresh)?;
            for cell in &outcome.cells {
                println!(
                    "fig3 L = {:>3} M = {:>2}: {}/{} recovered, mean orbit \
error {:.3e}",
                    cell.len,
                    cell.sparsity,
                    cell.recovered,
                    cell.trials,
                    cell.mean_orbit_error
                );
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_tree_is_well_formed() {
        Cli::command().debug_assert();
    }

    #[test]
    fn generate_rejects_both_sampling_modes() {
        let result = Cli::try_parse_from([
            "mra", "generate", "--L", "10", "--M", "2", "--q", "0.2",
        ]);
        assert!(result.is_err(), "--M and --q are mutually exclusive");
    }

    #[test]
    fn list_flags_split_on_commas() {
        let cli = Cli::try_parse_from([
            "mra",
            "experiment",
            "fig3",
            "--L",
            "8,12",
            "--M",
            "1,2,3",
            "--trials",
            "4",
        ])
        .unwrap();
        match cli.command {
            Command::Experiment(ExperimentCommand::Fig3(args)) => {
                assert_eq!(args.l_list.as_deref(), Some(&[8, 12][..]));
                assert_eq!(args.m_list.as_deref(), Some(&[1, 2, 3][..]));
                assert_eq!(args.trials, Some(4));
                assert!(!args.fresh);
            }
            other => panic!("parsed into the wrong command: {other:?}"),
        }
    }

    #[test]
    fn global_flags_parse_after_the_subcommand() {
        let cli = Cli::try_parse_from([
            "mra", "estimate", "--obs", "x.json", "--seed", "7", "--out", "d",
        ])
        .unwrap();
        assert_eq!(cli.global.seed, 7);
        assert_eq!(cli.global.out, PathBuf::from("d"));
    }

    #[test]
    fn settings_file_rejects_unknown_keys() {
        let good: Result<FileConfig, _> =
            serde_json::from_str(r#"{"seed": 3, "fig1": {"trials": 2}}"#);
        assert!(good.is_ok());
        let bad: Result<FileConfig, _> =
            serde_json::from_str(r#"{"fig1": {"trails": 2}}"#);
        assert!(bad.is_err(), "typoed keys must not be ignored silently");
    }
}
