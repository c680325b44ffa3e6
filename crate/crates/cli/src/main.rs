//! `magres`: spectra, band constants, resonances, quasimodes and expansion
//! comparisons for radial magnetic fields.

mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use magres::field::{FieldKind, FieldProfile, FieldSpec};
use magres::fit::linear_fit;
use magres::levels::{
    anharmonic_samples, compare, island_samples, landau_resonance_samples, well_samples, ExpansionParams,
};
use magres::quasimode::{build_quasimode, landau_energy, quasimode_residual, tz_window, Cutoff, DEFAULT_DELTA};
use magres::radial::{default_m_range, level_rows, merged_levels, Boundary, RadialGrid, Scale, SweepOptions};
use magres::scaling::{find_resonances, ScalingSetup, Window};
use magres::step::{
    band_table, minimize_band, spectral_constants, StepMode, StepParams, DEFAULT_BRACKET, SCAN_STEP,
};
use magres::MagresError;
use serde::{Deserialize, Serialize};

use output::{num, RunManifest, Sink, Table};

/// Request error (exit code 2).
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(Usage(msg.into()).into())
}

#[derive(Parser)]
#[command(name = "magres", version, about = "Spectra and resonances of planar magnetic Laplacians with radial fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Merged lowest levels over angular momentum sectors.
    Spectrum(SpectrumArgs),
    /// Step-field band function, its minimum and spectral constants.
    Band(BandArgs),
    /// θ-robust complex-scaled eigenvalues of a compactly supported field.
    Resonances(ResonanceArgs),
    /// Cut-off Landau quasimodes and their residuals.
    Quasimode(QuasimodeArgs),
    /// Direct spectra against the real-part expansions.
    Compare(CompareArgs),
    /// Rerun a manifest written by an earlier command.
    Replay(ReplayArgs),
}

/// Flags shared by the commands; each command uses the ones that apply.
#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
struct Common {
    /// Radial grid points.
    #[arg(long)]
    grid_n: Option<usize>,
    /// Outer radius of the radial grid.
    #[arg(long)]
    rmax: Option<f64>,
    /// First scaling angle.
    #[arg(long)]
    theta1: Option<f64>,
    /// Second scaling angle.
    #[arg(long)]
    theta2: Option<f64>,
    /// CSV output path; JSON companions and the manifest go next to it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct SpectrumArgs {
    /// Field configuration (JSON).
    #[arg(long)]
    field: PathBuf,
    /// Field strength b (operator -(∇ - ibA)²).
    #[arg(long, conflicts_with = "h")]
    b: Option<f64>,
    /// Semiclassical parameter h (operator (-ih∇ - A)²).
    #[arg(long)]
    h: Option<f64>,
    /// Number of distinct levels.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
    levels: u64,
    #[arg(long, allow_hyphen_values = true)]
    m_min: Option<i64>,
    #[arg(long, allow_hyphen_values = true)]
    m_max: Option<i64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct BandArgs {
    /// Step ratio a (field a for τ < 0, 1 for τ > 0).
    #[arg(long, allow_hyphen_values = true)]
    a: f64,
    /// Grid refinement factor, e.g. `2x`.
    #[arg(long, default_value = "1x", value_parser = parse_resolution)]
    resolution: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct ResonanceArgs {
    #[arg(long)]
    field: PathBuf,
    /// Comma-separated h values.
    #[arg(long, value_delimiter = ',', required = true)]
    h: Vec<f64>,
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    m_min: i64,
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    m_max: i64,
    /// Search window re_lo,re_hi,im_lo,im_hi (default [0.6h, 1.4h] + i[-0.28h, 0]).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, num_args = 4)]
    window: Option<Vec<f64>>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct QuasimodeArgs {
    /// Comma-separated field strengths b = 1/h.
    #[arg(long, value_delimiter = ',', required = true)]
    b: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    n: usize,
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    m: i64,
    /// Radius of the constant-field disk.
    #[arg(long, default_value_t = 1.0)]
    r0: f64,
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    delta: f64,
    /// Window rate c in S(h) = exp(-c r0²/h) (default (1-δ)²/4).
    #[arg(long)]
    c: Option<f64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Model {
    Landau,
    Anharmonic,
    Step,
    Well,
    Island,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct CompareArgs {
    #[arg(long, value_enum)]
    model: Model,
    /// Comma-separated h values (landau, anharmonic, well).
    #[arg(long, value_delimiter = ',')]
    h: Vec<f64>,
    /// Comma-separated field strengths (island, h = 1/b).
    #[arg(long, value_delimiter = ',')]
    b: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    n: usize,
    /// Sector of the anharmonic comparison.
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    m: i64,
    #[arg(long, default_value_t = 1.0)]
    b0: f64,
    #[arg(long, default_value_t = 2.0)]
    gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    rho1: f64,
    #[arg(long, default_value_t = 1.5)]
    rho2: f64,
    /// Disk radius of the landau resonance comparison.
    #[arg(long, default_value_t = 1.0)]
    r0: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Clone)]
struct ReplayArgs {
    manifest: PathBuf,
    /// Write to this CSV path instead of the recorded one.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_resolution(s: &str) -> std::result::Result<usize, String> {
    let digits = s.strip_suffix('x').unwrap_or(s);
    match digits.parse::<usize>() {
        Ok(n) if n >= 1 => Ok(n),
        _ => Err(format!("expected a factor like `2x`, got `{s}`")),
    }
}

fn load_field(path: &PathBuf) -> Result<FieldSpec> {
    if !path.exists() {
        return usage(format!("field file not found: {}", path.display()));
    }
    Ok(FieldSpec::load(path)?)
}

fn solver<T: Serialize>(args: &T) -> Result<serde_json::Value> {
    Ok(serde_json::to_value(args)?)
}

fn run_spectrum(args: &SpectrumArgs, spec: &FieldSpec) -> Result<()> {
    let n_max = (args.levels - 1) as usize;
    let scale = match (args.b, args.h) {
        (_, Some(h)) => Scale::Semiclassical(h),
        (Some(b), None) => Scale::Field(b),
        (None, None) => Scale::Field(1.0),
    };
    let (lo, hi) = default_m_range(n_max);
    let m_range = (args.m_min.unwrap_or(lo), args.m_max.unwrap_or(hi));
    let profile = FieldProfile::from_spec(spec)?;
    let n = args.common.grid_n.unwrap_or(4000);
    let (grid, boundary) = if spec.kind == FieldKind::IslandAnnular {
        let rho2 = spec.param("rho2")?;
        (RadialGrid::new(rho2, n)?, Boundary::NeumannFar)
    } else {
        (RadialGrid::new(args.common.rmax.unwrap_or(20.0), n)?, Boundary::DirichletFar)
    };
    let options = SweepOptions {
        boundary,
        extrapolate: true,
    };
    let levels = merged_levels(&profile, scale, &grid, n_max, m_range, options)?;
    let mut table = Table::new(&["m", "index", "eigenvalue", "b_or_h", "gridN", "r_max"]);
    for (m, k, value, s, gn, r) in level_rows(&levels, scale, &grid) {
        table.push(vec![m.to_string(), k.to_string(), num(value), num(s), gn.to_string(), num(r)]);
    }
    Sink::new(args.common.out.clone()).emit(&table, &[], "spectrum", Some(spec), solver(args)?)
}

fn run_band(args: &BandArgs) -> Result<()> {
    let mode = if args.a > -1.0 && args.a < 0.0 {
        StepMode::Theorem
    } else {
        StepMode::Validation
    };
    let params = StepParams::for_bracket(args.a, mode, DEFAULT_BRACKET, 1.0)?.refined(args.resolution)?;
    let constants = if mode == StepMode::Theorem {
        serde_json::to_value(spectral_constants(&params)?)?
    } else {
        let min = minimize_band(&params, DEFAULT_BRACKET)?;
        serde_json::json!({
            "a": args.a,
            "beta": min.beta,
            "zeta": min.zeta,
            "half_length": params.half_length,
            "intervals": params.intervals,
        })
    };
    let mut table = Table::new(&["a", "xi", "mu"]);
    for (xi, mu) in band_table(&params, DEFAULT_BRACKET.0, DEFAULT_BRACKET.1, SCAN_STEP)? {
        table.push(vec![num(args.a), num(xi), num(mu)]);
    }
    let companions = [("constants", constants)];
    Sink::new(args.common.out.clone()).emit(&table, &companions, "band", None, solver(args)?)
}

fn scaling_setup(common: &Common, support: f64) -> Result<ScalingSetup> {
    let mut setup = ScalingSetup::for_support(support);
    if let Some(t) = common.theta1 {
        setup.thetas.0 = t;
    }
    if let Some(t) = common.theta2 {
        setup.thetas.1 = t;
    }
    if setup.thetas.0 == setup.thetas.1 {
        return usage(format!("scaling angles must differ, both are {}", setup.thetas.0));
    }
    if let Some(n) = common.grid_n {
        setup.grid_n = n;
    }
    if let Some(r) = common.rmax {
        setup.r_max = r;
    }
    Ok(setup)
}

fn run_resonances(args: &ResonanceArgs, spec: &FieldSpec) -> Result<()> {
    let profile = FieldProfile::from_spec(spec)?;
    if !profile.is_compact() {
        return usage("resonances need a compactly supported field (set R0)");
    }
    let setup = scaling_setup(&args.common, profile.support())?;
    let fixed = match &args.window {
        Some(w) => Some(Window::new(w[0], w[1], w[2], w[3])?),
        None => None,
    };
    let mut table = Table::new(&["m", "h", "theta1", "theta2", "reZ", "imZ", "drift", "gridN"]);
    let mut lowest = Vec::new();
    for &h in &args.h {
        let window = fixed.unwrap_or_else(|| Window::landau(h));
        let set = find_resonances(&profile, h, (args.m_min, args.m_max), &window, &setup)?;
        for (m, h, t1, t2, re, im, drift, gn) in set.rows() {
            table.push(vec![
                m.to_string(),
                num(h),
                num(t1),
                num(t2),
                num(re),
                num(im),
                num(drift),
                gn.to_string(),
            ]);
        }
        table.trailer.push(format!(
            "h={} resonances={} continuum_motion={}",
            num(h),
            set.resonances.len(),
            num(set.continuum_motion)
        ));
        if let Some(r) = set.resonances.first() {
            lowest.push((h, r.z.im));
        }
    }
    if args.h.len() >= 3 && lowest.len() == args.h.len() {
        let xs: Vec<f64> = lowest.iter().map(|p| 1.0 / p.0).collect();
        let ys: Vec<f64> = lowest.iter().map(|p| p.1.abs().ln()).collect();
        let fit = linear_fit(&xs, &ys)?;
        table.trailer.push(format!(
            "fit log|imZ| vs 1/h: slope={} intercept={} r2={}",
            num(fit.slope),
            num(fit.intercept),
            num(fit.r2)
        ));
    }
    Sink::new(args.common.out.clone()).emit(&table, &[], "resonances", Some(spec), solver(args)?)
}

fn run_quasimode(args: &QuasimodeArgs) -> Result<()> {
    let cutoff = Cutoff::new(args.r0, args.delta)?;
    let rmax = args.common.rmax.unwrap_or(2.0 * args.r0);
    let grid = RadialGrid::new(rmax, args.common.grid_n.unwrap_or((rmax * 2500.0).ceil() as usize))?;
    let profile = FieldProfile::constant_disk(args.r0)?;
    let c = args.c.unwrap_or((1.0 - args.delta).powi(2) / 4.0);
    let mut table = Table::new(&["model", "n", "m", "b", "r0", "delta", "norm_defect", "residual"]);
    let mut windows = Vec::new();
    for &b in &args.b {
        let q = build_quasimode(args.n, args.m, b, cutoff, &grid)?;
        let (residual, _) = quasimode_residual(&q, &profile)?;
        table.push(vec![
            "landau".into(),
            args.n.to_string(),
            args.m.to_string(),
            num(b),
            num(args.r0),
            num(args.delta),
            num(q.norm_defect()),
            num(residual),
        ]);
        let h = 1.0 / b;
        windows.push(tz_window(landau_energy(args.n, args.m, 1.0) * h, h, c, args.r0)?);
    }
    let companions = [("windows", serde_json::to_value(windows)?)];
    Sink::new(args.common.out.clone()).emit(&table, &companions, "quasimode", None, solver(args)?)
}

fn require(values: &[f64], flag: &str) -> Result<()> {
    if values.len() < 3 {
        return usage(format!("--{flag} needs at least three values, got {}", values.len()));
    }
    Ok(())
}

fn run_compare(args: &CompareArgs) -> Result<()> {
    let common = &args.common;
    let samples: Vec<(ExpansionParams, f64)> = match args.model {
        Model::Step => return usage("the step model has no direct solver; use `band` for its constants"),
        Model::Well => {
            require(&args.h, "h")?;
            let grid = RadialGrid::new(common.rmax.unwrap_or(4.0), common.grid_n.unwrap_or(4000))?;
            well_samples(args.b0, args.n, &args.h, &grid)?
        }
        Model::Anharmonic => {
            require(&args.h, "h")?;
            if args.n != 0 {
                return usage("the anharmonic comparison covers n = 0 only");
            }
            let grid = RadialGrid::new(common.rmax.unwrap_or(6.0), common.grid_n.unwrap_or(6000))?;
            anharmonic_samples(args.gamma, args.m, &args.h, &grid)?
        }
        Model::Island => {
            require(&args.b, "b")?;
            island_samples(args.rho1, args.rho2, args.n, &args.b, common.grid_n.unwrap_or(3000))?
        }
        Model::Landau => {
            require(&args.h, "h")?;
            if args.n != 0 {
                return usage("the landau resonance comparison covers n = 0 only");
            }
            landau_resonance_samples(args.r0, &args.h, &scaling_setup(common, args.r0)?)?
        }
    };
    let report = compare(&samples)?;
    let mut table = Table::new(&["model", "n", "h", "expansion", "direct", "diff", "ratio", "observed_order"]);
    for row in &report.rows {
        table.push(vec![
            row.model.clone(),
            row.n.to_string(),
            num(row.h),
            num(row.expansion),
            num(row.direct),
            num(row.difference),
            num(row.ratio),
            num(row.observed_order),
        ]);
    }
    let bundle: Vec<&ExpansionParams> = samples.iter().map(|s| &s.0).collect();
    let companions = [("coefficients", serde_json::to_value(bundle)?)];
    Sink::new(common.out.clone()).emit(&table, &companions, "compare", None, solver(args)?)
}

fn run_replay(args: &ReplayArgs) -> Result<()> {
    let manifest = RunManifest::load(&args.manifest)?;
    let recorded = args
        .manifest
        .parent()
        .map(|dir| dir.join(manifest.outputs.first().cloned().unwrap_or_default()));
    let out = args.out.clone().or(recorded);
    let field = || {
        manifest
            .field
            .clone()
            .ok_or_else(|| Usage(format!("manifest {} has no field", args.manifest.display())))
    };
    fn decode<T: serde::de::DeserializeOwned>(v: &serde_json::Value) -> Result<T> {
        serde_json::from_value(v.clone()).context("manifest arguments do not match the command")
    }
    match manifest.command.as_str() {
        "spectrum" => {
            let mut a: SpectrumArgs = decode(&manifest.solver)?;
            a.common.out = out;
            run_spectrum(&a, &field()?)
        }
        "band" => {
            let mut a: BandArgs = decode(&manifest.solver)?;
            a.common.out = out;
            run_band(&a)
        }
        "resonances" => {
            let mut a: ResonanceArgs = decode(&manifest.solver)?;
            a.common.out = out;
            run_resonances(&a, &field()?)
        }
        "quasimode" => {
            let mut a: QuasimodeArgs = decode(&manifest.solver)?;
            a.common.out = out;
            run_quasimode(&a)
        }
        "compare" => {
            let mut a: CompareArgs = decode(&manifest.solver)?;
            a.common.out = out;
            run_compare(&a)
        }
        other => bail!(Usage(format!("unknown command `{other}` in manifest"))),
    }
}

fn run(cli: Cli) -> Result<()> {
    magres::configure_threads()?;
    match &cli.command {
        Command::Spectrum(a) => run_spectrum(a, &load_field(&a.field)?),
        Command::Band(a) => run_band(a),
        Command::Resonances(a) => run_resonances(a, &load_field(&a.field)?),
        Command::Quasimode(a) => run_quasimode(a),
        Command::Compare(a) => run_compare(a),
        Command::Replay(a) => run_replay(a),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<Usage>().is_some() {
        return 2;
    }
    match err.downcast_ref::<MagresError>() {
        Some(e) if e.is_usage() => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
