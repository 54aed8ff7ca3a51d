//! Command-line driver: argument parsing, run configuration, dispatch and
//! serialization of reports.

use std::ffi::OsString;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize, de::DeserializeOwned};

use crate::angular::{SectorGeometry, Truncation, lambda_kappa};
use crate::bessel::{bessel_k, bessel_k_ln};
use crate::error::{Error, Result};
use crate::extension::{ExtensionAudit, ScalingFlow, audit_extension, scaling_flow};
use crate::fiber::{ExtensionParameter, FiberClass, FiberOperator, OuterWall, classify_self_adjoint, fiber_matrix};
use crate::geometry::{PolygonDomain, PolygonReport, polygon_report};
use crate::grid::RadialGrid;
use crate::linalg::{ConvergenceTag, EigenOptions};
use crate::spectra::{
    SpectralReport, VirialEntry, WeylProbe, assemble_sector_with, default_truncation, sector_spectrum, virial_table,
    weyl_probe,
};

/// Environment variable capping the sweep worker pool.
pub const THREADS_ENV: &str = "SECTOR_DIRAC_THREADS";

#[derive(Debug, Parser)]
#[command(name = "sector-dirac", version, about = "Dirac operators with infinite-mass boundary conditions on planar sectors")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct OmegaArgs {
    /// Half-aperture ω in radians.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "omega_frac")]
    pub omega: Option<f64>,
    /// ω = pπ/q.
    #[arg(long, num_args = 2, value_names = ["P", "Q"], allow_hyphen_values = true)]
    pub omega_frac: Option<Vec<f64>>,
}

impl OmegaArgs {
    fn geometry(&self) -> Result<SectorGeometry> {
        match (&self.omega, &self.omega_frac) {
            (Some(w), _) => SectorGeometry::new(*w),
            (None, Some(pq)) => SectorGeometry::from_fraction(pq[0], pq[1]),
            (None, None) => Err(Error::Configuration("one of --omega or --omega-frac is required".into())),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Write to this file (atomically) instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct RadialArgs {
    #[arg(long, default_value_t = 1e-3)]
    pub r_min: f64,
    #[arg(long, default_value_t = 20.0)]
    pub r_max: f64,
    /// Radial nodes.
    #[arg(long, default_value_t = 600)]
    pub n_r: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TruncationArg {
    Galerkin,
    Involutive,
}

#[derive(Debug, Clone, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub omega: OmegaArgs,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub mass: f64,
    /// Phase s of γ = e^{is}; defaults to 0 (γ = 1) when ω > π/2.
    #[arg(long, allow_hyphen_values = true)]
    pub gamma_phase: Option<f64>,
    #[arg(long, default_value_t = 8)]
    pub n_modes: usize,
    #[command(flatten)]
    pub radial: RadialArgs,
    /// Eigenpairs nearest 0.
    #[arg(long, default_value_t = 8)]
    pub k: usize,
    #[arg(long, value_enum)]
    pub truncation: Option<TruncationArg>,
    #[arg(long, default_value_t = 0x5EC7_0D1A)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convexity and per-fiber self-adjointness.
    Classify {
        #[command(flatten)]
        omega: OmegaArgs,
        #[arg(long)]
        kappa: Option<i64>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Angular eigenvalues λ_κ.
    Modes {
        #[command(flatten)]
        omega: OmegaArgs,
        #[arg(long, default_value_t = 4)]
        kmax: i64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// K_ν(r) at one or more radii.
    Bessel {
        #[arg(long, allow_hyphen_values = true)]
        nu: f64,
        #[arg(long, value_delimiter = ',', required = true)]
        r: Vec<f64>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Eigenvalues of one discretized fiber.
    Fiber {
        #[command(flatten)]
        omega: OmegaArgs,
        #[arg(long, default_value_t = 0)]
        kappa: i64,
        #[arg(long, allow_hyphen_values = true)]
        gamma_phase: Option<f64>,
        #[command(flatten)]
        radial: RadialArgs,
        #[arg(long, default_value_t = 8)]
        k: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Eigenvalues of the massive sector operator.
    Spectrum {
        #[command(flatten)]
        spec: SpectrumArgs,
        /// Parameter sweep KEY=V1,V2,... with KEY one of omega, mass, r-max, n-modes, n-r.
        #[arg(long)]
        sweep: Option<String>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Weyl-sequence quotient for a probe scale n.
    Weyl {
        #[arg(long)]
        n: u32,
        #[arg(long, allow_hyphen_values = true)]
        mass: f64,
        #[arg(long, allow_hyphen_values = true)]
        lambda: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Virial defects of the computed eigenpairs.
    Virial {
        #[command(flatten)]
        spec: SpectrumArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Criteria audit of the extension with parameter γ = e^{is}.
    Extension {
        #[command(flatten)]
        omega: OmegaArgs,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        gamma_phase: f64,
        #[arg(long)]
        alpha: Option<f64>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Classification of a polygon given as a JSON array of [x, y] pairs.
    Polygon {
        path: PathBuf,
        #[command(flatten)]
        out: OutputArgs,
    },
}

/// Everything needed to reproduce a run; embedded in every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub omega: Option<f64>,
    pub mass: Option<f64>,
    pub gamma_phase: Option<f64>,
    pub n_modes: Option<usize>,
    pub r_min: Option<f64>,
    pub r_max: Option<f64>,
    pub n_r: Option<usize>,
    pub k: Option<usize>,
    pub kappa: Option<i64>,
    pub truncation: Option<Truncation>,
    pub seed: Option<u64>,
    pub output_path: Option<String>,
    pub format: Format,
}

impl RunConfig {
    fn bare(command: &str, out: &OutputArgs) -> Self {
        Self {
            command: command.to_string(),
            omega: None,
            mass: None,
            gamma_phase: None,
            n_modes: None,
            r_min: None,
            r_max: None,
            n_r: None,
            k: None,
            kappa: None,
            truncation: None,
            seed: None,
            output_path: out.output.as_ref().map(|p| p.display().to_string()),
            format: out.format,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutput<T> {
    pub config: RunConfig,
    pub result: T,
}

// ------------------------------------------------------------------ reports

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberRow {
    pub kappa: i64,
    pub lambda: f64,
    pub class: FiberClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyReport {
    pub omega: f64,
    pub convex: bool,
    pub lambda0: f64,
    pub nu0: f64,
    pub fibers: Vec<FiberRow>,
    pub summary: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeRow {
    pub kappa: i64,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BesselRow {
    pub nu: f64,
    pub r: f64,
    pub value: f64,
    pub ln_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberReport {
    pub kappa: i64,
    pub lambda: f64,
    pub class: FiberClass,
    pub eigenvalues: Vec<f64>,
    pub residual_norms: Vec<f64>,
    pub convergence_tag: ConvergenceTag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VirialReport {
    pub spectrum: SpectralReport,
    pub entries: Vec<VirialEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtensionReport {
    pub audit: ExtensionAudit,
    pub scaling: Option<ScalingFlow>,
}

// ------------------------------------------------------------ serialization

/// Writes every float with 17 significant digits.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sig17;

impl serde_json::ser::Formatter for Sig17 {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write!(w, "{v:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        write!(w, "{:.16e}", f64::from(v))
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sig17);
    value.serialize(&mut ser).map_err(|e| Error::Io(e.to_string()))?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
}

pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("line {}, column {}: {e}", e.line(), e.column())))
}

fn csv_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Two columns, LF line endings.
pub fn eigenvalue_csv(values: &[f64]) -> String {
    let mut s = String::from("index,eigenvalue\n");
    for (i, v) in values.iter().enumerate() {
        s.push_str(&format!("{i},{}\n", csv_float(*v)));
    }
    s
}

/// Writes through a temporary file in the target directory.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.to_string()))?;
    Ok(())
}

fn emit(out: &OutputArgs, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match &out.output {
        Some(p) => write_atomic(p, text),
        None => Ok(stdout.write_all(text.as_bytes())?),
    }
}

fn no_csv(command: &str) -> Error {
    Error::Configuration(format!("csv output is not available for `{command}`"))
}

// ---------------------------------------------------------------- commands

pub fn classify(geom: &SectorGeometry, kappa: Option<i64>) -> Result<ClassifyReport> {
    let kappas: Vec<i64> = match kappa {
        Some(k) => vec![k],
        None => vec![0, 1, 2],
    };
    let fibers = kappas
        .iter()
        .map(|&k| Ok(FiberRow { kappa: k, lambda: lambda_kappa(k, geom), class: classify_self_adjoint(geom, k)? }))
        .collect::<Result<Vec<_>>>()?;
    let convex = geom.is_convex();
    let summary = if convex {
        format!("convex; self-adjoint; λ₀ = {}", geom.lambda0())
    } else {
        format!(
            "non-convex; one-parameter family of self-adjoint extensions γ = e^(is), distinguished γ = 1; ν₀ = {}",
            geom.nu0()
        )
    };
    Ok(ClassifyReport { omega: geom.omega(), convex, lambda0: geom.lambda0(), nu0: geom.nu0(), fibers, summary })
}

fn resolve_gamma(geom: &SectorGeometry, phase: Option<f64>) -> Result<Option<ExtensionParameter>> {
    match (geom.is_convex(), phase) {
        (true, None) => Ok(None),
        (true, Some(_)) => Err(Error::Configuration(format!(
            "ω = {} ≤ π/2: operator already self-adjoint, --gamma-phase does not apply",
            geom.omega()
        ))),
        (false, p) => Ok(Some(ExtensionParameter::from_phase(p.unwrap_or(0.0))?)),
    }
}

fn spectrum_config(command: &str, spec: &SpectrumArgs, out: &OutputArgs) -> Result<(RunConfig, SectorGeometry)> {
    let geom = spec.omega.geometry()?;
    let gamma = resolve_gamma(&geom, spec.gamma_phase)?;
    let truncation = match spec.truncation {
        Some(TruncationArg::Galerkin) => Truncation::Galerkin,
        Some(TruncationArg::Involutive) => Truncation::Involutive,
        None => default_truncation(spec.mass),
    };
    let cfg = RunConfig {
        omega: Some(geom.omega()),
        mass: Some(spec.mass),
        gamma_phase: gamma.map(|g| g.phase()),
        n_modes: Some(spec.n_modes),
        r_min: Some(spec.radial.r_min),
        r_max: Some(spec.radial.r_max),
        n_r: Some(spec.radial.n_r),
        k: Some(spec.k),
        truncation: Some(truncation),
        seed: Some(spec.seed),
        ..RunConfig::bare(command, out)
    };
    Ok((cfg, geom))
}

fn field<T: Copy>(v: Option<T>, name: &str) -> Result<T> {
    v.ok_or_else(|| Error::Configuration(format!("missing `{name}` in run configuration")))
}

/// Runs the spectral solve described by a validated configuration.
pub fn run_spectrum(cfg: &RunConfig) -> Result<(SpectralReport, Vec<VirialEntry>)> {
    let geom = SectorGeometry::new(field(cfg.omega, "omega")?)?;
    let gamma = resolve_gamma(&geom, cfg.gamma_phase)?;
    let grid = RadialGrid::uniform(field(cfg.r_min, "r_min")?, field(cfg.r_max, "r_max")?, field(cfg.n_r, "n_r")?)?;
    let mass = field(cfg.mass, "mass")?;
    let truncation = cfg.truncation.unwrap_or_else(|| default_truncation(mass));
    let asm = assemble_sector_with(&geom, mass, gamma, field(cfg.n_modes, "n_modes")?, &grid, truncation, OuterWall::InfiniteMass)?;
    let opts = EigenOptions { seed: cfg.seed.unwrap_or(EigenOptions::default().seed), ..EigenOptions::default() };
    let k = field(cfg.k, "k")?.min(asm.matrix.dim());
    let (report, sol) = sector_spectrum(&asm, k, &opts)?;
    let entries = virial_table(&asm, &sol);
    Ok((report, entries))
}

fn apply_sweep(base: &RunConfig, sweep: &str) -> Result<Vec<RunConfig>> {
    let (key, values) = sweep
        .split_once('=')
        .ok_or_else(|| Error::Configuration(format!("sweep `{sweep}` is not of the form KEY=V1,V2,...")))?;
    let parsed: Vec<f64> = values
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| Error::Configuration(format!("sweep value `{v}`: {e}"))))
        .collect::<Result<_>>()?;
    if parsed.is_empty() {
        return Err(Error::Configuration("empty sweep".into()));
    }
    let as_count = |v: f64| -> Result<usize> {
        if v >= 0.0 && v.fract() == 0.0 {
            Ok(v as usize)
        } else {
            Err(Error::Configuration(format!("sweep value {v} is not a count")))
        }
    };
    parsed
        .iter()
        .map(|&v| {
            let mut c = base.clone();
            match key.trim() {
                "omega" => c.omega = Some(v),
                "mass" => c.mass = Some(v),
                "r-max" => c.r_max = Some(v),
                "n-modes" => c.n_modes = Some(as_count(v)?),
                "n-r" => c.n_r = Some(as_count(v)?),
                other => return Err(Error::Configuration(format!("unknown sweep key `{other}`"))),
            }
            // validate before dispatch
            SectorGeometry::new(field(c.omega, "omega")?)?;
            Ok(c)
        })
        .collect()
}

fn indexed_path(path: &Path, i: usize) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}.{i}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{i}"),
    };
    path.with_file_name(name)
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .parse()
            .map_err(|_| Error::Configuration(format!("{THREADS_ENV} = `{v}` is not a thread count")))?;
        if n == 0 {
            return Err(Error::Configuration(format!("{THREADS_ENV} must be positive")));
        }
        b = b.num_threads(n);
    }
    b.build().map_err(|e| Error::Configuration(e.to_string()))
}

fn spectrum_text(format: Format, out: &RunOutput<SpectralReport>) -> Result<String> {
    match format {
        Format::Json => to_json(out),
        Format::Csv => Ok(eigenvalue_csv(&out.result.eigenvalues)),
    }
}

fn refine_code(tag: ConvergenceTag) -> i32 {
    if tag == ConvergenceTag::Refine { 3 } else { 0 }
}

fn dispatch(cmd: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Classify { omega, kappa, out } => {
            let geom = omega.geometry()?;
            let rep = classify(&geom, kappa)?;
            writeln!(stderr, "{}", rep.summary)?;
            let cfg = RunConfig { omega: Some(geom.omega()), kappa, ..RunConfig::bare("classify", &out) };
            let text = match out.format {
                Format::Json => to_json(&RunOutput { config: cfg, result: rep })?,
                Format::Csv => {
                    let mut s = String::from("kappa,lambda,class\n");
                    for f in &rep.fibers {
                        let c = match f.class {
                            FiberClass::SelfAdjoint => "self-adjoint",
                            FiberClass::DeficiencyOne => "deficiency-one",
                        };
                        s.push_str(&format!("{},{},{c}\n", f.kappa, csv_float(f.lambda)));
                    }
                    s
                }
            };
            emit(&out, &text, stdout)?;
            Ok(0)
        }
        Command::Modes { omega, kmax, out } => {
            let geom = omega.geometry()?;
            if kmax < 0 {
                return Err(Error::InvalidArgument("--kmax must be ≥ 0".into()));
            }
            let rows: Vec<ModeRow> =
                (-kmax - 1..=kmax).map(|k| ModeRow { kappa: k, lambda: lambda_kappa(k, &geom) }).collect();
            let cfg = RunConfig { omega: Some(geom.omega()), ..RunConfig::bare("modes", &out) };
            let text = match out.format {
                Format::Json => to_json(&RunOutput { config: cfg, result: rows })?,
                Format::Csv => {
                    let mut s = String::from("kappa,lambda\n");
                    for r in &rows {
                        s.push_str(&format!("{},{}\n", r.kappa, csv_float(r.lambda)));
                    }
                    s
                }
            };
            emit(&out, &text, stdout)?;
            Ok(0)
        }
        Command::Bessel { nu, r, out } => {
            let rows = r
                .iter()
                .map(|&x| Ok(BesselRow { nu, r: x, value: bessel_k(nu, x)?, ln_value: bessel_k_ln(nu, x)? }))
                .collect::<Result<Vec<_>>>()?;
            let cfg = RunConfig::bare("bessel", &out);
            let text = match out.format {
                Format::Json => to_json(&RunOutput { config: cfg, result: rows })?,
                Format::Csv => {
                    let mut s = String::from("nu,r,value\n");
                    for b in &rows {
                        s.push_str(&format!("{},{},{}\n", csv_float(b.nu), csv_float(b.r), csv_float(b.value)));
                    }
                    s
                }
            };
            emit(&out, &text, stdout)?;
            Ok(0)
        }
        Command::Fiber { omega, kappa, gamma_phase, radial, k, out } => {
            let geom = omega.geometry()?;
            let op = FiberOperator::new(geom, kappa)?;
            let class = classify_self_adjoint(&geom, kappa)?;
            let gamma = match class {
                FiberClass::DeficiencyOne => Some(ExtensionParameter::from_phase(gamma_phase.unwrap_or(0.0))?),
                FiberClass::SelfAdjoint if gamma_phase.is_some() => {
                    return Err(Error::Configuration("--gamma-phase applies only to a deficient fiber".into()));
                }
                FiberClass::SelfAdjoint => None,
            };
            let grid = RadialGrid::uniform(radial.r_min, radial.r_max, radial.n_r)?;
            let m = fiber_matrix(&op, &grid, OuterWall::InfiniteMass, gamma)?;
            let sol = crate::linalg::eigs_nearest(&m, k.clamp(1, m.dim()), 0.0, &EigenOptions::default())?;
            let rep = FiberReport {
                kappa,
                lambda: op.lambda,
                class,
                eigenvalues: sol.values.clone(),
                residual_norms: sol.residuals.clone(),
                convergence_tag: sol.tag,
            };
            let cfg = RunConfig {
                omega: Some(geom.omega()),
                kappa: Some(kappa),
                gamma_phase: gamma.map(|g| g.phase()),
                r_min: Some(radial.r_min),
                r_max: Some(radial.r_max),
                n_r: Some(radial.n_r),
                k: Some(k),
                ..RunConfig::bare("fiber", &out)
            };
            let text = match out.format {
                Format::Json => to_json(&RunOutput { config: cfg, result: rep.clone() })?,
                Format::Csv => eigenvalue_csv(&rep.eigenvalues),
            };
            emit(&out, &text, stdout)?;
            Ok(refine_code(rep.convergence_tag))
        }
        Command::Spectrum { spec, sweep, out } => {
            let (cfg, _) = spectrum_config("spectrum", &spec, &out)?;
            let configs = match &sweep {
                Some(s) => apply_sweep(&cfg, s)?,
                None => vec![cfg],
            };
            let pool = thread_pool()?;
            let results: Vec<Result<RunOutput<SpectralReport>>> = pool.install(|| {
                configs
                    .par_iter()
                    .map(|c| run_spectrum(c).map(|(r, _)| RunOutput { config: c.clone(), result: r }))
                    .collect()
            });
            let results = results.into_iter().collect::<Result<Vec<_>>>()?;
            let mut code = 0;
            for r in &results {
                if r.result.convergence_tag == ConvergenceTag::Refine {
                    writeln!(stderr, "warning: eigenpairs did not reach the residual bound; tagged `refine`")?;
                    code = 3;
                }
                if let Some(note) = &r.result.gap_note {
                    writeln!(stderr, "note: {note}")?;
                }
            }
            match (&out.output, sweep.is_some()) {
                (Some(p), true) => {
                    for (i, r) in results.iter().enumerate() {
                        write_atomic(&indexed_path(p, i), &spectrum_text(out.format, r)?)?;
                    }
                }
                (Some(p), false) => {
                    write_atomic(p, &spectrum_text(out.format, &results[0])?)?;
                    if out.format == Format::Json {
                        write_atomic(&p.with_extension("csv"), &eigenvalue_csv(&results[0].result.eigenvalues))?;
                    }
                }
                (None, true) => match out.format {
                    Format::Json => stdout.write_all(to_json(&results)?.as_bytes())?,
                    Format::Csv => return Err(no_csv("spectrum --sweep without --output")),
                },
                (None, false) => stdout.write_all(spectrum_text(out.format, &results[0])?.as_bytes())?,
            }
            Ok(code)
        }
        Command::Weyl { n, mass, lambda, out } => {
            let probe: WeylProbe = weyl_probe(n, mass, lambda)?;
            if out.format == Format::Csv {
                return Err(no_csv("weyl"));
            }
            let cfg = RunConfig { mass: Some(mass), ..RunConfig::bare("weyl", &out) };
            emit(&out, &to_json(&RunOutput { config: cfg, result: probe })?, stdout)?;
            Ok(0)
        }
        Command::Virial { spec, out } => {
            let (cfg, _) = spectrum_config("virial", &spec, &out)?;
            let (spectrum, entries) = run_spectrum(&cfg)?;
            let code = refine_code(spectrum.convergence_tag);
            let text = match out.format {
                Format::Json => to_json(&RunOutput { config: cfg, result: VirialReport { spectrum, entries } })?,
                Format::Csv => {
                    let mut s = String::from("lambda,defect,relative_defect,within_gap,flagged_continuum\n");
                    for e in &entries {
                        s.push_str(&format!(
                            "{},{},{},{},{}\n",
                            csv_float(e.lambda),
                            csv_float(e.defect),
                            csv_float(e.relative_defect),
                            e.within_gap,
                            e.flagged_continuum
                        ));
                    }
                    s
                }
            };
            emit(&out, &text, stdout)?;
            Ok(code)
        }
        Command::Extension { omega, gamma_phase, alpha, out } => {
            let geom = omega.geometry()?;
            let gamma = ExtensionParameter::from_phase(gamma_phase)?;
            let audit = audit_extension(&geom, &gamma)?;
            let scaling = alpha.map(|a| scaling_flow(&gamma, a, &geom)).transpose()?;
            if let Some(s) = &scaling {
                writeln!(stderr, "scaled γ phase = {}", s.s_out)?;
            }
            writeln!(
                stderr,
                "charge conjugation: {}; scaling: {}; H^1/2: {}",
                verdict(audit.charge_conjugation),
                verdict(audit.scale_invariant),
                verdict(audit.h_half)
            )?;
            if out.format == Format::Csv {
                return Err(no_csv("extension"));
            }
            let cfg = RunConfig { omega: Some(geom.omega()), gamma_phase: Some(gamma.phase()), ..RunConfig::bare("extension", &out) };
            emit(&out, &to_json(&RunOutput { config: cfg, result: ExtensionReport { audit, scaling } })?, stdout)?;
            Ok(0)
        }
        Command::Polygon { path, out } => {
            let text = std::fs::read_to_string(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            let poly = PolygonDomain::from_json(&text)?;
            let rep: PolygonReport = polygon_report(&poly);
            writeln!(stderr, "{:?}", rep.classification)?;
            let cfg = RunConfig::bare("polygon", &out);
            let body = match out.format {
                Format::Json => to_json(&RunOutput { config: cfg, result: rep })?,
                Format::Csv => {
                    let mut s = String::from("x,y,interior_angle,half_aperture,reflex\n");
                    for c in &rep.corners {
                        s.push_str(&format!(
                            "{},{},{},{},{}\n",
                            csv_float(c.vertex[0]),
                            csv_float(c.vertex[1]),
                            csv_float(c.interior_angle),
                            csv_float(c.half_aperture),
                            c.reflex
                        ));
                    }
                    s
                }
            };
            emit(&out, &body, stdout)?;
            Ok(0)
        }
    }
}

fn verdict(b: bool) -> &'static str {
    if b { "pass" } else { "fail" }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code; never panics on user input.
pub fn execute<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if code == 0 { write!(stdout, "{e}") } else { write!(stderr, "{e}") };
            return code;
        }
    };
    match dispatch(cli.command, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = execute(std::iter::once("sector-dirac").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn classify_cases() {
        let (c, _, e) = run(&["classify", "--omega", "1.0"]);
        assert_eq!(c, 0);
        assert!(e.starts_with("convex; self-adjoint"));
        let (c, _, e) = run(&["classify", "--omega", "2.4"]);
        assert_eq!(c, 0);
        assert!(e.starts_with("non-convex; one-parameter family"));
        assert_eq!(run(&["classify", "--omega", "4.0"]).0, 2);
        assert_eq!(run(&["classify"]).0, 2);
    }

    #[test]
    fn omega_fraction_hits_boundary() {
        let (c, out, _) = run(&["classify", "--omega-frac", "1", "2"]);
        assert_eq!(c, 0);
        let rep: RunOutput<ClassifyReport> = from_json(&out).unwrap();
        assert!(rep.result.convex);
    }

    #[test]
    fn json_uses_17_digits() {
        let s = to_json(&0.1f64).unwrap();
        assert_eq!(s.trim(), "1.0000000000000001e-1");
        assert_eq!(from_json::<f64>(&s).unwrap(), 0.1);
    }

    #[test]
    fn csv_is_lf_only() {
        let s = eigenvalue_csv(&[-1.0, 1.0]);
        assert!(!s.contains('\r'));
        assert_eq!(s.lines().count(), 3);
    }

    #[test]
    fn sweep_parsing() {
        let out = OutputArgs { format: Format::Json, output: None };
        let base = RunConfig { omega: Some(1.0), ..RunConfig::bare("spectrum", &out) };
        assert_eq!(apply_sweep(&base, "r-max=20,40").unwrap().len(), 2);
        assert!(apply_sweep(&base, "bogus=1").is_err());
        assert!(apply_sweep(&base, "n-modes=2.5").is_err());
        assert!(apply_sweep(&base, "omega=4").is_err());
    }
}
