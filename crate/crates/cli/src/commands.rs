//! Subcommand runners: parameter resolution (flags over config file over
//! defaults), the computations, deterministic artifact writing, and the run
//! manifest. Every number printed by a report is also stored in the
//! manifest.

use crate::error::{CliError, CliResult};
use crate::jsonout::{fmt_f64, Json};
use crate::svg::{write_polyline_plot, PlotSpec};
use crate::weights::parse_weights;
use infladiff_core::*;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use std::io::Write as _;
use std::path::{Path, PathBuf};

const VERSION: &str = env!("CARGO_PKG_VERSION");

// ---------------------------------------------------------------------------
// run report: printed summary mirrored into manifest.json

struct RunReport {
    command: &'static str,
    parameters: Vec<(String, Json)>,
    summary: Vec<(String, Json)>,
    outputs: Vec<PathBuf>,
}

fn render_inline(v: &Json) -> String {
    match v {
        Json::Str(s) => s.clone(),
        Json::Float(x) => fmt_f64(*x),
        Json::Int(n) => n.to_string(),
        Json::Bool(b) => b.to_string(),
        other => other.render().split_whitespace().collect::<Vec<_>>().join(" "),
    }
}

impl RunReport {
    fn new(command: &'static str) -> Self {
        RunReport {
            command,
            parameters: Vec::new(),
            summary: Vec::new(),
            outputs: Vec::new(),
        }
    }

    fn param(&mut self, key: &str, value: impl Into<Json>) {
        self.parameters.push((key.to_string(), value.into()));
    }

    fn stat(&mut self, key: &str, value: impl Into<Json>) {
        self.summary.push((key.to_string(), value.into()));
    }

    fn output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    fn print_summary(&self) {
        for (key, value) in &self.summary {
            println!("{key} = {}", render_inline(value));
        }
        for path in &self.outputs {
            println!("wrote {}", path.display());
        }
    }

    fn finish(self, manifest_path: &Path) -> CliResult<()> {
        self.print_summary();
        let doc = Json::Map(vec![
            ("command".into(), Json::from(self.command)),
            ("version".into(), Json::from(VERSION)),
            ("parameters".into(), Json::Map(self.parameters)),
            ("summary".into(), Json::Map(self.summary)),
            (
                "outputs".into(),
                Json::List(
                    self.outputs
                        .iter()
                        .map(|p| Json::from(p.display().to_string()))
                        .collect(),
                ),
            ),
        ]);
        std::fs::write(manifest_path, doc.render())?;
        println!("wrote {}", manifest_path.display());
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// config files

fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> CliResult<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", p.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("bad config {}: {e}", p.display())))
        }
    }
}

fn require_m(m: Option<u32>) -> CliResult<u32> {
    match m {
        Some(m) if m >= 1 => Ok(m),
        Some(_) => Err(CliError::Config("m must be >= 1".into())),
        None => Err(CliError::Config("missing required parameter m".into())),
    }
}

fn positive(name: &str, v: f64) -> CliResult<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(CliError::Config(format!("{name} must be positive, got {v}")))
    }
}

// ---------------------------------------------------------------------------
// csv helpers

fn open_out(path: &Path) -> CliResult<std::io::BufWriter<std::fs::File>> {
    Ok(std::io::BufWriter::new(std::fs::File::create(path)?))
}

fn write_patch_csv(path: &Path, patch: &TilingPatch) -> CliResult<()> {
    let mut w = open_out(path)?;
    writeln!(w, "index,a,b,type,position_float")?;
    for idx in 0..patch.len() {
        let p = patch.position(idx);
        writeln!(
            w,
            "{idx},{},{},{},{}",
            p.a,
            p.b,
            patch.tile_type(idx).index(),
            fmt_f64(patch.value(idx))
        )?;
    }
    Ok(())
}

fn write_patch_json(path: &Path, patch: &TilingPatch) -> CliResult<()> {
    let rows: Vec<Json> = (0..patch.len())
        .map(|idx| {
            let p = patch.position(idx);
            Json::Map(vec![
                ("index".into(), Json::from(idx)),
                ("a".into(), Json::from(p.a)),
                ("b".into(), Json::from(p.b)),
                ("type".into(), Json::from(patch.tile_type(idx).index())),
                ("position_float".into(), Json::from(patch.value(idx))),
            ])
        })
        .collect();
    std::fs::write(path, Json::List(rows).render())?;
    Ok(())
}

fn write_paircorr_csv(path: &Path, table: &PairCorrTable) -> CliResult<()> {
    let mut w = open_out(path)?;
    writeln!(w, "i,j,a,b,z_float,value,provenance")?;
    let label = table.provenance().label();
    for (i, j, z, value) in table.sorted_entries() {
        writeln!(
            w,
            "{},{},{},{},{},{},{label}",
            i.index(),
            j.index(),
            z.a,
            z.b,
            fmt_f64(table.ctx().value(z)),
            fmt_f64(value)
        )?;
    }
    Ok(())
}

fn write_xy_csv(path: &Path, header: &str, xs: &[f64], ys: &[f64]) -> CliResult<()> {
    let mut w = open_out(path)?;
    writeln!(w, "{header}")?;
    for (x, y) in xs.iter().zip(ys) {
        writeln!(w, "{},{}", fmt_f64(*x), fmt_f64(*y))?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// generate

#[derive(Debug, clap::Args)]
pub struct GenerateArgs {
    /// Family parameter m >= 1
    #[arg(long)]
    pub m: Option<u32>,
    /// Square-substitution steps applied to the seed 0|0
    #[arg(long)]
    pub iterations: Option<u32>,
    /// Output path; .json switches the format, anything else writes CSV
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Manifest path
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// JSON config file; flags override its values
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GenerateConfig {
    m: Option<u32>,
    iterations: Option<u32>,
    out: Option<PathBuf>,
    manifest: Option<PathBuf>,
}

pub fn run_generate(args: GenerateArgs) -> CliResult<()> {
    let cfg: GenerateConfig = load_config(args.config.as_deref())?;
    let m = require_m(args.m.or(cfg.m))?;
    let iterations = args.iterations.or(cfg.iterations).unwrap_or(8);
    let out = args
        .out
        .or(cfg.out)
        .unwrap_or_else(|| PathBuf::from("patch.csv"));
    let manifest = args
        .manifest
        .or(cfg.manifest)
        .unwrap_or_else(|| PathBuf::from("manifest.json"));

    let words = fixed_point_patch(m, iterations)?;
    let patch = to_point_set(&words)?;
    let dens = density(&patch)?;
    let (f0, f1) = letter_frequencies(&patch)?;

    let mut report = RunReport::new("generate");
    report.param("m", m);
    report.param("iterations", iterations);
    report.stat("tiles", patch.len());
    report.stat("marker_index", patch.marker_index());
    report.stat("radius", patch.radius());
    report.stat("density", dens);
    report.stat("density_closed_form", density_closed_form(m));
    report.stat("frequency_0", f0);
    report.stat("frequency_1", f1);

    if out.extension().is_some_and(|e| e == "json") {
        write_patch_json(&out, &patch)?;
    } else {
        write_patch_csv(&out, &patch)?;
    }
    report.output(&out);
    report.finish(&manifest)
}

// ---------------------------------------------------------------------------
// classify

#[derive(Debug, clap::Args)]
pub struct ClassifyArgs {
    /// Single family parameter to classify
    #[arg(long, conflicts_with = "range")]
    pub m: Option<u32>,
    /// Inclusive range of parameters, e.g. 1..50
    #[arg(long)]
    pub range: Option<String>,
    /// Print the reports as JSON instead of a table
    #[arg(long)]
    pub json: bool,
    /// Manifest path
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// JSON config file; flags override its values
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassifyConfig {
    m: Option<u32>,
    range: Option<String>,
    json: Option<bool>,
    manifest: Option<PathBuf>,
}

fn parse_range(text: &str) -> CliResult<(u32, u32)> {
    let cleaned = text.replace("..=", "..");
    let (lo, hi) = cleaned
        .split_once("..")
        .ok_or_else(|| CliError::Config(format!("range must look like 1..50, got {text:?}")))?;
    let lo: u32 = lo
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("bad range start {lo:?}")))?;
    let hi: u32 = hi
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("bad range end {hi:?}")))?;
    if lo < 1 || hi < lo {
        return Err(CliError::Config(format!("empty or invalid range {text:?}")));
    }
    Ok((lo, hi))
}

fn report_to_json(r: &SpectrumReport) -> Json {
    let opt = |v: Option<Json>| v.unwrap_or(Json::Str("-".into()));
    Json::Map(vec![
        ("m".into(), Json::from(r.m)),
        ("lambda_plus".into(), Json::from(r.lambda_plus)),
        ("pv_status".into(), Json::from(format!("{:?}", r.pv_status))),
        (
            "spectral_type".into(),
            Json::from(format!("{:?}", r.spectral_type)),
        ),
        ("ell".into(), opt(r.ell.map(Json::from))),
        ("coincidence".into(), opt(r.coincidence.map(Json::from))),
        ("height".into(), opt(r.height.map(Json::from))),
    ])
}

pub fn run_classify(args: ClassifyArgs) -> CliResult<()> {
    let cfg: ClassifyConfig = load_config(args.config.as_deref())?;
    let json = args.json || cfg.json.unwrap_or(false);
    let manifest = args
        .manifest
        .or(cfg.manifest)
        .unwrap_or_else(|| PathBuf::from("manifest.json"));
    let range = match (args.m.or(cfg.m), args.range.or(cfg.range)) {
        (Some(m), None) => (require_m(Some(m))?, m),
        (None, Some(r)) => parse_range(&r)?,
        (None, None) => return Err(CliError::Config("need --m or --range".into())),
        (Some(_), Some(_)) => {
            return Err(CliError::Config("--m and --range are mutually exclusive".into()))
        }
    };

    let reports: Vec<SpectrumReport> = (range.0..=range.1).map(spectral_type).collect();

    if json {
        print!(
            "{}",
            Json::List(reports.iter().map(report_to_json).collect()).render()
        );
    } else {
        println!(
            "{:>4}  {:<20} {:<10} {:<28} {:>4} {:>12} {:>7}",
            "m", "lambda_plus", "pv", "spectral_type", "ell", "coincidence", "height"
        );
        for r in &reports {
            let fmt_opt_u = |v: Option<u32>| v.map_or("-".to_string(), |x| x.to_string());
            println!(
                "{:>4}  {:<20} {:<10} {:<28} {:>4} {:>12} {:>7}",
                r.m,
                fmt_f64(r.lambda_plus),
                format!("{:?}", r.pv_status),
                format!("{:?}", r.spectral_type),
                fmt_opt_u(r.ell),
                r.coincidence.map_or("-".to_string(), |b| b.to_string()),
                r.height.map_or("-".to_string(), |h| h.to_string()),
            );
        }
    }

    let mut report = RunReport::new("classify");
    report.param("range_start", range.0);
    report.param("range_end", range.1);
    report.stat("pure_point_members", {
        Json::List(
            reports
                .iter()
                .filter(|r| r.spectral_type == SpectralType::PurePoint)
                .map(|r| Json::from(r.m))
                .collect(),
        )
    });
    report.stat(
        "reports",
        Json::List(reports.iter().map(report_to_json).collect()),
    );
    let doc = Json::Map(vec![
        ("command".into(), Json::from("classify")),
        ("version".into(), Json::from(VERSION)),
        ("parameters".into(), Json::Map(report.parameters)),
        ("summary".into(), Json::Map(report.summary)),
        ("outputs".into(), Json::List(Vec::new())),
    ]);
    std::fs::write(&manifest, doc.render())?;
    if json {
        // keep stdout machine-readable
        eprintln!("wrote {}", manifest.display());
    } else {
        println!("wrote {}", manifest.display());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// paircorr / renorm-solve

#[derive(Debug, clap::Args)]
pub struct PaircorrArgs {
    /// Family parameter m >= 1
    #[arg(long)]
    pub m: Option<u32>,
    /// Window radius for the empirical pair counts
    #[arg(long)]
    pub radius: Option<f64>,
    /// Largest displacement magnitude tabulated
    #[arg(long)]
    pub zmax: Option<f64>,
    /// Check the empirical table against the renormalisation system
    #[arg(long)]
    pub check_renorm: bool,
    /// Solve the renormalisation system and write the solved table
    #[arg(long)]
    pub solve: bool,
    /// Displacement radius of the solved table
    #[arg(long)]
    pub rmax: Option<f64>,
    /// Output CSV path
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Manifest path
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// JSON config file; flags override its values
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PaircorrConfig {
    m: Option<u32>,
    radius: Option<f64>,
    zmax: Option<f64>,
    check_renorm: Option<bool>,
    solve: Option<bool>,
    rmax: Option<f64>,
    out: Option<PathBuf>,
    manifest: Option<PathBuf>,
}

pub fn run_paircorr(args: PaircorrArgs, force_solve: bool) -> CliResult<()> {
    let cfg: PaircorrConfig = load_config(args.config.as_deref())?;
    let m = require_m(args.m.or(cfg.m))?;
    let radius = positive("radius", args.radius.or(cfg.radius).unwrap_or(2000.0))?;
    let zmax = positive("zmax", args.zmax.or(cfg.zmax).unwrap_or(30.0))?;
    let rmax = positive("rmax", args.rmax.or(cfg.rmax).unwrap_or(30.0))?;
    let check_renorm = args.check_renorm || cfg.check_renorm.unwrap_or(false);
    let solve = force_solve || args.solve || cfg.solve.unwrap_or(false);
    let out = args
        .out
        .or(cfg.out)
        .unwrap_or_else(|| PathBuf::from("nu.csv"));
    let manifest = args
        .manifest
        .or(cfg.manifest)
        .unwrap_or_else(|| PathBuf::from("manifest.json"));

    let mut report = RunReport::new(if force_solve { "renorm-solve" } else { "paircorr" });
    report.param("m", m);
    report.param("radius", radius);
    report.param("zmax", zmax);
    report.param("check_renorm", check_renorm);
    report.param("solve", solve);
    report.param("rmax", rmax);

    let patch = patch_with_min_radius(m, radius + zmax + 2.0)?;
    let empirical = empirical_pair_corr(&patch, radius, zmax)?;
    let zero = QuadInt::ZERO;
    report.stat("window_points", patch.window_range(radius).len());
    report.stat("empirical_entries", empirical.entry_count());
    report.stat(
        "empirical_nu00_at_0",
        empirical.get(TileType::Zero, TileType::Zero, zero)?,
    );
    report.stat(
        "empirical_nu11_at_0",
        empirical.get(TileType::One, TileType::One, zero)?,
    );
    report.stat("empirical_symmetry_defect", empirical.symmetry_defect());

    if check_renorm {
        let system = derive_renorm_system(m);
        let stats = check_renorm_residuals(&empirical, &system)?;
        report.stat("residual_max", stats.max);
        report.stat("residual_mean", stats.mean);
        report.stat("residual_count", stats.count);
        report.stat("residual_tested_radius", stats.tested_radius);
    }

    if solve {
        let solution = solve_renorm(m, rmax)?;
        let system = derive_renorm_system(m);
        let solved_stats = check_renorm_residuals(&solution.table, &system)?;
        report.stat("core_size", solution.core_size);
        report.stat("kernel_dim", solution.kernel_dim);
        report.stat("frequency_check_error", solution.frequency_check_error);
        report.stat(
            "solved_nu00_at_0",
            solution.table.get(TileType::Zero, TileType::Zero, zero)?,
        );
        report.stat(
            "solved_nu11_at_0",
            solution.table.get(TileType::One, TileType::One, zero)?,
        );
        report.stat("solved_residual_max", solved_stats.max);
        report.stat(
            "max_deviation_vs_empirical",
            solution.table.max_abs_deviation(&empirical),
        );
        write_paircorr_csv(&out, &solution.table)?;
    } else {
        write_paircorr_csv(&out, &empirical)?;
    }
    report.output(&out);
    report.finish(&manifest)
}

// ---------------------------------------------------------------------------
// diffract

#[derive(Debug, clap::Args)]
pub struct DiffractArgs {
    /// Family parameter m >= 1
    #[arg(long)]
    pub m: Option<u32>,
    /// Tile weights "u0,u1"; the token `lambda` resolves per m
    #[arg(long)]
    pub weights: Option<String>,
    /// Window half-length R
    #[arg(long = "R")]
    pub r: Option<f64>,
    /// Largest wavenumber on the grid
    #[arg(long)]
    pub kmax: Option<f64>,
    /// Grid step
    #[arg(long)]
    pub dk: Option<f64>,
    /// Spectrum CSV path (columns k,intensity)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Distribution-function CSV path (columns x,F); default derives from --out
    #[arg(long)]
    pub dist_out: Option<PathBuf>,
    /// Optional SVG plot of F with the eta_u(0) x reference line
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Manifest path
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// JSON config file; flags override its values
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DiffractConfig {
    m: Option<u32>,
    weights: Option<String>,
    #[serde(alias = "R")]
    r: Option<f64>,
    kmax: Option<f64>,
    dk: Option<f64>,
    out: Option<PathBuf>,
    dist_out: Option<PathBuf>,
    svg: Option<PathBuf>,
    manifest: Option<PathBuf>,
}

fn derived_dist_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "spectrum".into());
    out.with_file_name(format!("{stem}_F.csv"))
}

pub fn run_diffract(args: DiffractArgs) -> CliResult<()> {
    let cfg: DiffractConfig = load_config(args.config.as_deref())?;
    let m = require_m(args.m.or(cfg.m))?;

    let classification = spectral_type(m);
    if classification.spectral_type == SpectralType::PurePoint {
        return Err(CliError::Config(format!(
            "m = {m} has pure point diffraction ({:?}); the singular-continuous \
             numerics do not apply -- see `infladiff classify --m {m}`",
            classification.pv_status
        )));
    }

    let weights_literal = args
        .weights
        .or(cfg.weights)
        .unwrap_or_else(|| "1-lambda,1".to_string());
    let lambda = RingContext::new(m).lambda_plus();
    let (u0, u1) = parse_weights(&weights_literal, lambda).map_err(CliError::Config)?;
    let scheme = WeightScheme::new(u0, u1);

    let r = positive("R", args.r.or(cfg.r).unwrap_or(4000.0))?;
    let kmax = positive("kmax", args.kmax.or(cfg.kmax).unwrap_or(25.0))?;
    let dk = positive("dk", args.dk.or(cfg.dk).unwrap_or(0.0005))?;
    let out = args
        .out
        .or(cfg.out)
        .unwrap_or_else(|| PathBuf::from("spectrum.csv"));
    let dist_out = args
        .dist_out
        .or(cfg.dist_out)
        .unwrap_or_else(|| derived_dist_path(&out));
    let svg = args.svg.or(cfg.svg);
    let manifest = args
        .manifest
        .or(cfg.manifest)
        .unwrap_or_else(|| PathBuf::from("manifest.json"));

    let mut report = RunReport::new("diffract");
    report.param("m", m);
    report.param("weights", weights_literal.as_str());
    report.param("u0_re", u0.re);
    report.param("u0_im", u0.im);
    report.param("u1_re", u1.re);
    report.param("u1_im", u1.im);
    report.param("R", r);
    report.param("kmax", kmax);
    report.param("dk", dk);

    let patch = patch_with_min_radius(m, r + 1.0)?;
    let grid = diffraction_grid(&patch, &scheme, kmax, dk, r)?;
    let f = distribution_function(&grid)?;

    let eta0 = eta_zero(m, &scheme);
    let i0 = bragg_intensity(m, &scheme);
    let x_end = *f.x_values.last().unwrap();
    let f_end = *f.f_values.last().unwrap();
    report.stat("eta0", eta0);
    report.stat("bragg_intensity_at_0", i0);
    report.stat("grid_points", grid.k_values.len());
    report.stat("window_points", patch.window_range(r).len());
    report.stat("f_end", f_end);
    report.stat("x_end", x_end);
    report.stat("average_slope", f_end / x_end);
    report.stat("average_slope_over_eta0", f_end / (x_end * eta0));

    write_xy_csv(&out, "k,intensity", &grid.k_values, &grid.intensities)?;
    report.output(&out);
    write_xy_csv(&dist_out, "x,F", &f.x_values, &f.f_values)?;
    report.output(&dist_out);
    if let Some(svg_path) = svg {
        write_polyline_plot(
            &svg_path,
            &PlotSpec {
                title: &format!("distribution function F, m = {m}, weights {weights_literal}"),
                x_label: "x",
                y_label: "F(x)",
                xs: &f.x_values,
                ys: &f.f_values,
                reference_slope: Some(eta0),
            },
        )?;
        report.output(&svg_path);
    }
    report.finish(&manifest)
}

// ---------------------------------------------------------------------------
// bragg

#[derive(Debug, clap::Args)]
pub struct BraggArgs {
    /// Family parameter m >= 1
    #[arg(long)]
    pub m: Option<u32>,
    /// Tile weights "u0,u1"; the token `lambda` resolves per m
    #[arg(long)]
    pub weights: Option<String>,
    /// Manifest path
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// JSON config file; flags override its values
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct BraggConfig {
    m: Option<u32>,
    weights: Option<String>,
    manifest: Option<PathBuf>,
}

pub fn run_bragg(args: BraggArgs) -> CliResult<()> {
    let cfg: BraggConfig = load_config(args.config.as_deref())?;
    let m = require_m(args.m.or(cfg.m))?;
    let weights_literal = args
        .weights
        .or(cfg.weights)
        .unwrap_or_else(|| "1,1".to_string());
    let ctx = RingContext::new(m);
    let (u0, u1) = parse_weights(&weights_literal, ctx.lambda_plus()).map_err(CliError::Config)?;
    let scheme = WeightScheme::new(u0, u1);

    let mut report = RunReport::new("bragg");
    report.param("m", m);
    report.param("weights", weights_literal.as_str());
    report.stat("lambda_plus", ctx.lambda_plus());
    report.stat("density", density_closed_form(m));
    report.stat("bragg_intensity_at_0", bragg_intensity(m, &scheme));
    report.stat("eta0", eta_zero(m, &scheme));
    let manifest = args
        .manifest
        .or(cfg.manifest)
        .unwrap_or_else(|| PathBuf::from("manifest.json"));
    report.finish(&manifest)
}
