//! Command-line front end.
//!
//! Exit status is 0 on success, 1 on usage errors and 2 when a computation fails.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::eos::{AnsatzSpec, MacroEos};
use crate::error::Error;
use crate::family::{log_grid, sweep_with_threads, uniform_grid, FamilyTable};
use crate::io::{self, format_float};
use crate::phase_plane::{self, HeteroclinicOptions, PlaneTrajectory, SEpsOptions};
use crate::polytrope::{dominance_check, fit_power_law, mr_exponent};
use crate::spiral::{fit_spiral, predict_curve, tail_window, FitMode, Window};
use crate::steady_state::{solve_radial, SolveOptions};
use crate::svg::{self, Bounds, PlotStyle, Series};

pub const THREADS_ENV: &str = "VLASOV_SPIRAL_THREADS";

#[derive(Debug, Parser)]
#[command(name = "vlasov-spiral", version, about = "Steady states of the spherical Vlasov-Poisson system and their mass-radius spirals")]
pub struct RunConfig {
    /// Worker threads for sweeps (defaults to all cores).
    #[arg(long, global = true, env = THREADS_ENV)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate g, h, g' and h/g of a model.
    Eos(EosArgs),
    /// Solve one steady state.
    Solve(SolveArgs),
    /// Solve a family over a grid of central values.
    Sweep(SweepArgs),
    /// Fit the spiral model to a family table.
    SpiralFit(SpiralFitArgs),
    /// Integrate a homology-plane trajectory.
    Phase(PhaseArgs),
    /// Check the mass-radius power law of a polytrope family.
    PolyCheck(PolyCheckArgs),
    /// Render a CSV as an SVG chart.
    Plot(PlotArgs),
}

fn parse_model(s: &str) -> std::result::Result<AnsatzSpec, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_mode(s: &str) -> std::result::Result<FitMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Clone, Args)]
pub struct ModelArg {
    /// king | woolley-dickens | wilson | exp:a,b | poly:k,l,amp | hybrid:k
    #[arg(long, default_value = "king", value_parser = parse_model)]
    pub model: AnsatzSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Spacing {
    Uniform,
    Log,
}

#[derive(Debug, Args)]
pub struct EosArgs {
    #[command(flatten)]
    pub model: ModelArg,
    #[arg(long, default_value_t = 1e-3)]
    pub y_min: f64,
    #[arg(long, default_value_t = 30.0)]
    pub y_max: f64,
    #[arg(long, default_value_t = 50)]
    pub samples: usize,
    #[arg(long, value_enum, default_value_t = Spacing::Log)]
    pub spacing: Spacing,
    /// CSV output (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub model: ModelArg,
    #[arg(long)]
    pub gamma: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub rtol: f64,
    #[arg(long)]
    pub r_max: Option<f64>,
    /// Extra dense samples per accepted step in the profile.
    #[arg(long, default_value_t = 0)]
    pub samples_per_step: usize,
    /// Profile CSV output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub model: ModelArg,
    #[arg(long, default_value_t = 0.2)]
    pub gamma_min: f64,
    #[arg(long, default_value_t = 28.0)]
    pub gamma_max: f64,
    #[arg(long, default_value_t = 1500)]
    pub samples: usize,
    #[arg(long, value_enum, default_value_t = Spacing::Uniform)]
    pub spacing: Spacing,
    #[arg(long, default_value_t = 1e-10)]
    pub rtol: f64,
    /// Family CSV output (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WindowArgs {
    #[arg(long, default_value = "fixed", value_parser = parse_mode)]
    pub mode: FitMode,
    /// Fit the last N theoretical windings (smallest ε).
    #[arg(long, default_value_t = 2.0)]
    pub tail_windings: f64,
    /// Explicit ln ε window, overriding --tail-windings.
    #[arg(long, requires = "window_hi", allow_hyphen_values = true)]
    pub window_lo: Option<f64>,
    #[arg(long, requires = "window_lo", allow_hyphen_values = true)]
    pub window_hi: Option<f64>,
}

impl WindowArgs {
    fn window(&self, table: &FamilyTable) -> crate::Result<Window> {
        match (self.window_lo, self.window_hi) {
            (Some(lo), Some(hi)) => Ok(Window { lo, hi }),
            _ => tail_window(table, self.tail_windings),
        }
    }
}

#[derive(Debug, Args)]
pub struct SpiralFitArgs {
    /// Family CSV.
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub window: WindowArgs,
    /// Report output (also printed to stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlaneSystem {
    /// ε = 0 heteroclinic orbit from P to Q.
    S0,
    /// Regular system at fixed ε.
    SEps,
}

#[derive(Debug, Args)]
pub struct PhaseArgs {
    #[arg(long, value_enum, default_value_t = PlaneSystem::S0)]
    pub system: PlaneSystem,
    #[command(flatten)]
    pub model: ModelArg,
    #[arg(long, default_value_t = 1e-8)]
    pub eps: f64,
    #[arg(long, default_value_t = 1e4)]
    pub x_end: f64,
    #[arg(long, default_value_t = 40.0)]
    pub s_end: f64,
    #[arg(long)]
    pub rtol: Option<f64>,
    /// Trajectory CSV output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PolyCheckArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub k: f64,
    #[arg(long, default_value_t = 0.0)]
    pub l: f64,
    #[arg(long, default_value_t = 1.0)]
    pub amp: f64,
    #[arg(long, default_value_t = 0.5)]
    pub gamma_min: f64,
    #[arg(long, default_value_t = 4.0)]
    pub gamma_max: f64,
    #[arg(long, default_value_t = 20)]
    pub samples: usize,
    /// Compare this model's family against the fitted power law; without it
    /// the verdict is whether the slope matches within 1e-3.
    #[arg(long, value_parser = parse_model)]
    pub against: Option<AnsatzSpec>,
    #[arg(long, default_value_t = 0.5)]
    pub against_gamma_min: f64,
    #[arg(long, default_value_t = 20.0)]
    pub against_gamma_max: f64,
    #[arg(long, default_value_t = 60)]
    pub against_samples: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// CSV to plot (family, profile or trajectory).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "R")]
    pub x_col: String,
    #[arg(long, default_value = "M")]
    pub y_col: String,
    /// Overlay the fitted spiral and add a blow-up of its center (family CSV only).
    #[arg(long)]
    pub overlay: bool,
    #[command(flatten)]
    pub window: WindowArgs,
    #[arg(long, default_value = "")]
    pub title: String,
    #[arg(long)]
    pub out: PathBuf,
}

enum Failure {
    Usage(String),
    Compute(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Compute(e)
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn input_file(flag: &str, path: &Path) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Failure::Usage(format!("{flag}: no such file {}", path.display())))
    }
}

fn eos_for(spec: AnsatzSpec) -> CliResult<MacroEos> {
    Ok(MacroEos::new(spec)?)
}

fn grid(lo: f64, hi: f64, n: usize, spacing: Spacing) -> CliResult<Vec<f64>> {
    if n == 0 || !(hi >= lo) || (spacing == Spacing::Log && !(lo > 0.0)) {
        return Err(Failure::Usage(format!("bad grid: [{lo}, {hi}] with {n} samples")));
    }
    Ok(match spacing {
        Spacing::Uniform => uniform_grid(lo, hi, n),
        Spacing::Log => log_grid(lo, hi, n),
    })
}

fn emit_csv(out: &mut dyn Write, path: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> crate::Result<()>) -> CliResult<()> {
    match path {
        Some(p) => {
            let f = std::fs::File::create(p).map_err(|e| Failure::Usage(format!("--out: cannot write {}: {e}", p.display())))?;
            let mut w = std::io::BufWriter::new(f);
            write(&mut w)?;
        }
        None => write(out)?,
    }
    Ok(())
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| Failure::Usage(format!("--out: cannot write {}: {e}", path.display())))
}

fn cmd_eos(a: &EosArgs, out: &mut dyn Write) -> CliResult<()> {
    let eos = eos_for(a.model.model)?;
    let ys = grid(a.y_min, a.y_max, a.samples, a.spacing)?;
    let rows: Vec<[f64; 5]> = ys
        .iter()
        .map(|&y| {
            let (g, h) = (eos.g(y), eos.h(y));
            [y, g, h, eos.g_prime(y), h / g]
        })
        .collect();
    emit_csv(out, a.out.as_deref(), |w| io::write_csv(w, &["y", "g", "h", "g_prime", "alpha"], &rows, &[]))
}

fn cmd_solve(a: &SolveArgs, out: &mut dyn Write) -> CliResult<()> {
    let eos = eos_for(a.model.model)?;
    let mut opts = SolveOptions::default().with_rtol(a.rtol).with_samples_per_step(a.samples_per_step);
    if let Some(r) = a.r_max {
        opts = opts.with_r_max(r);
    }
    let p = solve_radial(&eos, a.gamma, &opts)?;
    if let Some(path) = &a.out {
        emit_csv(out, Some(path), |w| io::write_profile(w, &p))?;
    }
    writeln!(
        out,
        "gamma={} eps={} R={} M={} E0={} steps={}",
        format_float(p.gamma),
        format_float(p.eps),
        format_float(p.radius),
        format_float(p.mass),
        format_float(p.cutoff_energy),
        p.step_count()
    )
    .map_err(Error::from)?;
    Ok(())
}

fn cmd_sweep(a: &SweepArgs, threads: Option<usize>, out: &mut dyn Write) -> CliResult<()> {
    let eos = eos_for(a.model.model)?;
    let g = grid(a.gamma_min, a.gamma_max, a.samples, a.spacing)?;
    let table = sweep_with_threads(&eos, &g, &SolveOptions::default().with_rtol(a.rtol), threads)?;
    emit_csv(out, a.out.as_deref(), |w| io::write_family(w, &table))?;
    if a.out.is_some() {
        writeln!(out, "rows={} skipped={}", table.len(), table.skipped.len()).map_err(Error::from)?;
    }
    Ok(())
}

fn cmd_spiral_fit(a: &SpiralFitArgs, out: &mut dyn Write) -> CliResult<()> {
    input_file("--input", &a.input)?;
    let table = io::read_family_file(&a.input)?;
    let fit = fit_spiral(&table, a.window.window(&table)?, a.window.mode)?;
    let text = io::fit_report_text(&fit);
    if let Some(p) = &a.out {
        write_text(p, &text)?;
    }
    out.write_all(text.as_bytes()).map_err(Error::from)?;
    Ok(())
}

fn cmd_phase(a: &PhaseArgs, out: &mut dyn Write) -> CliResult<()> {
    let traj: PlaneTrajectory = match a.system {
        PlaneSystem::S0 => {
            let mut o = HeteroclinicOptions { s_end: a.s_end, ..Default::default() };
            if let Some(r) = a.rtol {
                o.rtol = r;
            }
            phase_plane::heteroclinic_v0(&o)?
        }
        PlaneSystem::SEps => {
            let mut o = SEpsOptions::default();
            if let Some(r) = a.rtol {
                o.rtol = r;
            }
            phase_plane::s_eps_solve(&eos_for(a.model.model)?, a.eps, a.x_end, &o)?
        }
    };
    if let Some(path) = &a.out {
        emit_csv(out, Some(path), |w| io::write_trajectory(w, &traj))?;
    }
    let l = traj.last();
    writeln!(
        out,
        "X={} v1={} v2={} distance_to_Q={} samples={}",
        format_float(l.x),
        format_float(l.v1),
        format_float(l.v2),
        format_float(phase_plane::distance_to_q(&traj)),
        traj.samples.len()
    )
    .map_err(Error::from)?;
    Ok(())
}

fn cmd_poly_check(a: &PolyCheckArgs, threads: Option<usize>, out: &mut dyn Write) -> CliResult<()> {
    let spec = AnsatzSpec::polytrope(a.k, a.l, a.amp);
    let eos = eos_for(spec)?;
    let expected = mr_exponent(a.k, a.l)?;
    let opts = SolveOptions::default();
    let poly = sweep_with_threads(&eos, &grid(a.gamma_min, a.gamma_max, a.samples, Spacing::Log)?, &opts, threads)?;
    let text = match a.against {
        Some(other) => {
            let g = grid(a.against_gamma_min, a.against_gamma_max, a.against_samples, Spacing::Log)?;
            let table = sweep_with_threads(&eos_for(other)?, &g, &opts, threads)?;
            io::dominance_report_text(&dominance_check(&table, &poly)?)
        }
        None => {
            let law = fit_power_law(&poly)?;
            io::poly_report_text(law.slope, Some(expected), law.constant, (law.slope - expected).abs() <= 1e-3)
        }
    };
    if let Some(p) = &a.out {
        write_text(p, &text)?;
    }
    out.write_all(text.as_bytes()).map_err(Error::from)?;
    Ok(())
}

fn cmd_plot(a: &PlotArgs) -> CliResult<()> {
    input_file("--input", &a.input)?;
    let csv = io::read_csv_file(&a.input)?;
    let x = csv.column(&a.x_col).map_err(|e| Failure::Usage(format!("--x-col: {e}")))?;
    let y = csv.column(&a.y_col).map_err(|e| Failure::Usage(format!("--y-col: {e}")))?;
    let data = Series::new(a.input.display().to_string(), x.iter().zip(&y).map(|(&a, &b)| [a, b]).collect());
    let mut style = PlotStyle { title: a.title.clone(), x_label: a.x_col.clone(), y_label: a.y_col.clone(), ..Default::default() };
    if a.overlay {
        let table = io::read_family_file(&a.input)?;
        let window = a.window.window(&table)?;
        let fit = fit_spiral(&table, window, a.window.mode)?;
        let n = 600;
        let eps: Vec<f64> = (0..n).map(|i| (window.lo + (window.hi - window.lo) * i as f64 / (n - 1) as f64).exp()).collect();
        style.overlay = Some(Series::new("fitted spiral", predict_curve(&fit, &eps)).with_color("#c0392b").dashed());
        let tail: Vec<[f64; 2]> = table.rows.iter().filter(|r| window.contains(r.eps.ln())).map(|r| [r.radius, r.mass]).collect();
        let hw = tail.iter().map(|p| (p[0] - fit.center[0]).abs()).fold(0.0, f64::max);
        let hh = tail.iter().map(|p| (p[1] - fit.center[1]).abs()).fold(0.0, f64::max);
        if hw > 0.0 && hh > 0.0 {
            style.blowup = Some(Bounds::around(fit.center, 1.1 * hw, 1.1 * hh));
        }
    }
    svg::write_svg(&a.out, &[data], &style)?;
    Ok(())
}

/// Parses `args` (program name first), runs the subcommand and returns the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match RunConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let threads = cfg.threads;
    let result = match &cfg.command {
        Command::Eos(a) => cmd_eos(a, out),
        Command::Solve(a) => cmd_solve(a, out),
        Command::Sweep(a) => cmd_sweep(a, threads, out),
        Command::SpiralFit(a) => cmd_spiral_fit(a, out),
        Command::Phase(a) => cmd_phase(a, out),
        Command::PolyCheck(a) => cmd_poly_check(a, threads, out),
        Command::Plot(a) => cmd_plot(a),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            1
        }
        Err(Failure::Compute(e)) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}
