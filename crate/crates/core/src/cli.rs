//! Command-line front end.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use faer::c64;
use serde::Serialize;
use serde_json::json;

use crate::error::{MorError, Result};
use crate::framework::{reduce, FrameworkOptions};
use crate::init::{balanced_truncation, hankel_singular_values, to_canonical, InitMode};
use crate::linalg::{CMat, RMat};
use crate::linf::{linf_norm, LinfOptions, Maximizer};
use crate::mtx::{read_mtx, write_mtx};
use crate::system::{DescriptorSystem, FrequencyResponse, SchurSystem};

pub const SCHEMA: u32 = 1;

#[derive(Parser, Debug)]
#[command(name = "linf-mor", version, about = "L-infinity optimal model order reduction")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Compute a reduced model of order r.
    Reduce(ReduceArgs),
    /// L∞ norm of a system, or of its difference with a reduced model.
    LinfNorm(NormArgs),
    /// Balanced truncation to order r.
    Bt(BtArgs),
    /// Hankel singular values.
    Hankel(HankelArgs),
    /// Sampled error curve between a system and a reduced model.
    ErrorCurve(CurveArgs),
}

#[derive(Args, Debug, Clone)]
pub struct SystemArgs {
    /// Directory holding E.mtx, A.mtx, B.mtx, C.mtx and optionally D.mtx.
    #[arg(long)]
    pub dir: Option<PathBuf>,
    #[arg(long = "e")]
    pub e: Option<PathBuf>,
    #[arg(long = "a")]
    pub a: Option<PathBuf>,
    #[arg(long = "b")]
    pub b: Option<PathBuf>,
    #[arg(long = "c")]
    pub c: Option<PathBuf>,
    #[arg(long = "d")]
    pub d: Option<PathBuf>,
    /// Seed for the randomized regularity probe.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "grid-points", default_value_t = 2048)]
    pub grid_points: usize,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
pub enum InitArg {
    Bt,
    Dominant,
}

#[derive(Args, Debug)]
pub struct ReduceArgs {
    #[command(flatten)]
    pub sys: SystemArgs,
    #[arg(long)]
    pub r: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, value_enum, default_value = "bt")]
    pub init: InitArg,
    /// Require the reduced spectral abscissa to stay below this negative bound.
    #[arg(long, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    #[arg(long = "max-outer", default_value_t = 30)]
    pub max_outer: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct NormArgs {
    #[command(flatten)]
    pub sys: SystemArgs,
    /// Directory with reduced_{E,A,B,C,D}.mtx; the norm of the difference is computed.
    #[arg(long)]
    pub reduced: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BtArgs {
    #[command(flatten)]
    pub sys: SystemArgs,
    #[arg(long)]
    pub r: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct HankelArgs {
    #[command(flatten)]
    pub sys: SystemArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CurveArgs {
    #[command(flatten)]
    pub sys: SystemArgs,
    #[arg(long)]
    pub reduced: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

/// A loaded system plus notes about defaults that were applied.
pub struct Loaded {
    pub sys: DescriptorSystem,
    pub notes: Vec<String>,
}

fn locate(dir: Option<&Path>, explicit: Option<&PathBuf>, names: &[&str]) -> Option<PathBuf> {
    if let Some(p) = explicit {
        return Some(p.clone());
    }
    let dir = dir?;
    names.iter().map(|n| dir.join(n)).find(|p| p.exists())
}

fn names(prefix: &str, m: &str) -> Vec<String> {
    let up = m.to_ascii_uppercase();
    vec![format!("{prefix}{up}.mtx"), format!("{prefix}{m}.mtx")]
}

fn load_with_prefix(dir: Option<&Path>, files: [Option<&PathBuf>; 5], prefix: &str) -> Result<Loaded> {
    let find = |k: usize, m: &str| {
        let n = names(prefix, m);
        locate(dir, files[k], &[n[0].as_str(), n[1].as_str()])
    };
    let need = |k: usize, m: &str| -> Result<RMat> {
        let p = find(k, m).ok_or_else(|| MorError::DimensionMismatch(format!("no file given for {}", m.to_ascii_uppercase())))?;
        read_mtx(&p)
    };
    let a = need(1, "a")?;
    let b = need(2, "b")?;
    let c = need(3, "c")?;
    let mut notes = Vec::new();
    let n = a.nrows();
    let e = match find(0, "e") {
        Some(p) => read_mtx(&p)?,
        None => {
            notes.push("E not given; identity assumed".to_string());
            RMat::identity(n, n)
        }
    };
    let d = match find(4, "d") {
        Some(p) => read_mtx(&p)?,
        None => {
            notes.push("D not given; zero assumed".to_string());
            RMat::zeros(c.nrows(), b.ncols())
        }
    };
    Ok(Loaded {
        sys: DescriptorSystem::new(e, a, b, c, d)?,
        notes,
    })
}

pub fn load_system(args: &SystemArgs) -> Result<Loaded> {
    let files = [args.e.as_ref(), args.a.as_ref(), args.b.as_ref(), args.c.as_ref(), args.d.as_ref()];
    let loaded = load_with_prefix(args.dir.as_deref(), files, "")?;
    if !loaded.sys.is_regular(args.seed) {
        return Err(MorError::SingularPencil { re: f64::NAN, im: f64::NAN });
    }
    Ok(loaded)
}

/// Reads `reduced_*.mtx` from `dir`, falling back to plain `E.mtx` etc.
pub fn load_reduced(dir: &Path) -> Result<DescriptorSystem> {
    let none = [None; 5];
    let prefixed = dir.join("reduced_A.mtx").exists() || dir.join("reduced_a.mtx").exists();
    let prefix = if prefixed { "reduced_" } else { "" };
    Ok(load_with_prefix(Some(dir), none, prefix)?.sys)
}

pub fn write_system(dir: &Path, prefix: &str, sys: &DescriptorSystem) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (name, m) in [("E", &sys.e), ("A", &sys.a), ("B", &sys.b), ("C", &sys.c), ("D", &sys.d)] {
        write_mtx(&dir.join(format!("{prefix}{name}.mtx")), m)?;
    }
    Ok(())
}

/// `H_1 - H_2`.
struct Difference<'a> {
    a: &'a dyn FrequencyResponse,
    b: &'a dyn FrequencyResponse,
}

impl FrequencyResponse for Difference<'_> {
    fn dims(&self) -> (usize, usize) {
        self.a.dims()
    }
    fn eval(&self, s: c64) -> Result<CMat> {
        Ok(self.a.eval(s)? - self.b.eval(s)?)
    }
}

fn linf_opts(args: &SystemArgs) -> LinfOptions {
    LinfOptions {
        grid_points: args.grid_points,
        ..Default::default()
    }
}

/// L∞ norm of `full - red` (or of `full` alone).
fn norm_of(full: &DescriptorSystem, red: Option<&DescriptorSystem>, opts: &LinfOptions) -> Result<crate::linf::LinfResult> {
    let fs = SchurSystem::new(full)?;
    let mut pl: Vec<c64> = fs.poles().to_vec();
    let rs = match red {
        Some(r) => {
            if (r.p(), r.m()) != (full.p(), full.m()) {
                return Err(MorError::DimensionMismatch(format!(
                    "reduced model is {}x{}, full system is {}x{}",
                    r.p(),
                    r.m(),
                    full.p(),
                    full.m()
                )));
            }
            let s = SchurSystem::new(r)?;
            pl.extend_from_slice(s.poles());
            Some(s)
        }
        None => None,
    };
    let sigma = |w: f64| -> Result<f64> {
        let s = c64::new(0.0, w);
        let h = match &rs {
            Some(r) => (Difference { a: &fs, b: r }).eval(s)?,
            None => fs.eval(s)?,
        };
        crate::linalg::sigma_max(&h)
    };
    linf_norm(sigma, &[], &pl, opts)
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<()> {
    let s = serde_json::to_string_pretty(v).map_err(|e| MorError::Io(std::io::Error::other(e)))?;
    fs::write(path, s + "\n")?;
    Ok(())
}

fn run_reduce(a: &ReduceArgs) -> Result<()> {
    let loaded = load_system(&a.sys)?;
    let mut opts = FrameworkOptions::new(a.r);
    opts.tol = a.tol;
    opts.init = match a.init {
        InitArg::Bt => InitMode::Bt,
        InitArg::Dominant => InitMode::Dominant,
    };
    opts.beta = a.beta;
    opts.max_outer = a.max_outer;
    opts.linf = linf_opts(&a.sys);
    let rep = reduce(&loaded.sys, &opts)?;
    fs::create_dir_all(&a.out)?;
    let red = rep.reduced.to_descriptor();
    write_system(&a.out, "reduced_", &red)?;
    let mut notes = loaded.notes.clone();
    notes.extend(rep.notes.iter().cloned());
    let report = json!({
        "schema": SCHEMA,
        "n": loaded.sys.n(),
        "m": loaded.sys.m(),
        "p": loaded.sys.p(),
        "r": a.r,
        "seed": a.sys.seed,
        "options": opts,
        "error": rep.error,
        "omega": rep.omega,
        "best_iter": rep.best_iter,
        "termination": rep.termination,
        "init_mode": rep.init_mode,
        "hankel": rep.hankel,
        "inner_feasible": rep.inner_feasible,
        "rows": rep.rows,
        "notes": notes,
        "reduced_files": ["reduced_E.mtx", "reduced_A.mtx", "reduced_B.mtx", "reduced_C.mtx", "reduced_D.mtx"],
        "timings": rep.timings,
    });
    write_json(&a.out.join("report.json"), &report)?;
    println!("error {:.12e} at omega {:.6e} after {} iterations ({:?})", rep.error, rep.omega, rep.rows.len(), rep.termination);
    Ok(())
}

fn run_norm(a: &NormArgs) -> Result<()> {
    let loaded = load_system(&a.sys)?;
    let red = a.reduced.as_deref().map(load_reduced).transpose()?;
    let res = norm_of(&loaded.sys, red.as_ref(), &linf_opts(&a.sys))?;
    println!("{:.15e} at omega {:.15e}", res.value, res.omega);
    if let Some(out) = &a.out {
        fs::create_dir_all(out)?;
        write_json(
            &out.join("linf.json"),
            &json!({"schema": SCHEMA, "value": res.value, "omega": res.omega, "maximizers": res.maximizers}),
        )?;
    }
    Ok(())
}

fn run_bt(a: &BtArgs) -> Result<()> {
    let loaded = load_system(&a.sys)?;
    let (bt, hsv) = balanced_truncation(&loaded.sys, a.r)?;
    let red = to_canonical(&bt).map(|c| c.to_descriptor()).unwrap_or(bt);
    write_system(&a.out, "reduced_", &red)?;
    let res = norm_of(&loaded.sys, Some(&red), &linf_opts(&a.sys))?;
    write_json(
        &a.out.join("bt.json"),
        &json!({"schema": SCHEMA, "r": a.r, "error": res.value, "omega": res.omega, "hankel": hsv}),
    )?;
    println!("{:.12e}", res.value);
    Ok(())
}

fn run_hankel(a: &HankelArgs) -> Result<()> {
    let loaded = load_system(&a.sys)?;
    let hsv = hankel_singular_values(&loaded.sys)?;
    for v in &hsv {
        println!("{v:.15e}");
    }
    if let Some(out) = &a.out {
        fs::create_dir_all(out)?;
        write_json(&out.join("hankel.json"), &json!({"schema": SCHEMA, "hankel": hsv}))?;
    }
    Ok(())
}

fn run_curve(a: &CurveArgs) -> Result<()> {
    let loaded = load_system(&a.sys)?;
    let red = load_reduced(&a.reduced)?;
    let res = norm_of(&loaded.sys, Some(&red), &linf_opts(&a.sys))?;
    fs::create_dir_all(&a.out)?;
    let mut csv = String::from("omega,sigma_max\n");
    let mut last = f64::NEG_INFINITY;
    for &(w, s) in &res.samples {
        if w > last && s.is_finite() {
            csv.push_str(&format!("{w:e},{s:e}\n"));
            last = w;
        }
    }
    fs::write(a.out.join("error_curve.csv"), csv)?;
    let maxs: Vec<Maximizer> = res.maximizers.clone();
    write_json(&a.out.join("maximizers.json"), &json!({"schema": SCHEMA, "value": res.value, "maximizers": maxs}))?;
    Ok(())
}

fn init_threads() {
    if let Some(n) = std::env::var("LINF_MOR_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

/// Exit status for an error: 1 for bad input, 2 for numerical failure.
pub fn exit_code(e: &MorError) -> u8 {
    match e {
        MorError::Io(_) | MorError::ParseError { .. } | MorError::DimensionMismatch(_) => 1,
        _ => 2,
    }
}

pub fn run(cli: Cli) -> Result<()> {
    init_threads();
    match &cli.command {
        Command::Reduce(a) => run_reduce(a),
        Command::LinfNorm(a) => run_norm(a),
        Command::Bt(a) => run_bt(a),
        Command::Hankel(a) => run_hankel(a),
        Command::ErrorCurve(a) => run_curve(a),
    }
}

pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
