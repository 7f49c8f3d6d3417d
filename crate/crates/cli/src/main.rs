use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use snowmetric::compacta::{hausdorff_distance, FinitePointSet, PointMetric, ProductQuotient, ProductSnowflake};
use snowmetric::measure::{regularity_scan, Grid, IntervalMetric, QuotientMetric, Snowflake};
use snowmetric::product::{cube, cube_inside_unit, cubes_at_scale, is_admissible};
use snowmetric::quotient::{distance_restricted, DistanceOptions, DistanceResult, HierarchicalSolver};
use snowmetric::rigidity::{block_zero_levels, oscillation_bound, rescaling_probe};
use snowmetric::{validate_config, ConfigFile, Dyadic, Error, GridInterval, Shortcut, SnowflakeConfig};

mod manifest;

const EXIT_USAGE: u8 = 64;
const DEFAULT_LEVEL: u32 = 4;

#[derive(Parser)]
#[command(name = "snowmetric", version, about = "Distances, measures and rigidity probes on snowflaked lines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Serialize)]
struct Common {
    /// JSON config: {"s": [..], "l": int, "c": real, "tol"?: real, "max_level"?: int}
    #[arg(long)]
    config: PathBuf,
    /// Write the payload here, with a `<out>.manifest.json` sidecar, instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Check the admissibility inequalities of a config.
    Validate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        json: bool,
    },
    /// Quotient distance between two dyadic points.
    Dist(DistArgs),
    /// Cube corner table at one scale, as CSV.
    Cubes {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scale: u32,
        #[arg(long)]
        inside_unit: bool,
        #[arg(long)]
        admissible_only: bool,
    },
    /// Ball-measure ratios m(B(x, r)) / r^alpha at random centers.
    Regularity(RegularityArgs),
    /// Hausdorff distance between two point sets read from CSV.
    Hausdorff(HausdorffArgs),
    /// Rescaling probe or oscillation bounds.
    Rigidity(RigidityArgs),
}

#[derive(Args, Serialize)]
struct DistArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    x: String,
    #[arg(long)]
    y: String,
    /// Truncation level; defaults to the config's `max_level`, else 4.
    #[arg(long)]
    level: Option<u32>,
    #[arg(long)]
    tol: Option<f64>,
    /// Restrict to the grid cell with these endpoints, e.g. `0,1/4`.
    #[arg(long)]
    restricted: Option<String>,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum LineMetric {
    Snowflake,
    Quotient,
}

#[derive(Args, Serialize)]
struct RegularityArgs {
    #[command(flatten)]
    common: Common,
    /// `auto` for 1/s, or a number.
    #[arg(long, default_value = "auto")]
    alpha: String,
    /// Radii `h^n` for `n` in this inclusive range, e.g. `1..3`.
    #[arg(long, default_value = "1..3")]
    levels: String,
    #[arg(long, value_enum, default_value_t = LineMetric::Snowflake)]
    metric: LineMetric,
    #[arg(long, default_value_t = 8)]
    centers: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the samples as CSV (center, radius, estimate, ratio) to this path.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum SetMetric {
    Snowflake,
    Quotient,
    Ds,
}

#[derive(Args, Serialize)]
struct HausdorffArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    metric: SetMetric,
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    /// Truncation for the quotient metric.
    #[arg(long)]
    level: Option<u32>,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum RigidityMode {
    Probe,
    Oscillation,
}

#[derive(Args, Serialize)]
struct RigidityArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    mode: RigidityMode,
    #[arg(long, default_value = "0")]
    x0: String,
    /// Probe levels, or grid levels for the oscillation bound; `a..b` inclusive.
    /// In probe mode `auto` takes the first three block-of-zeros levels of x0.
    #[arg(long, default_value = "1..3")]
    levels: String,
    /// Shortcut pushed by the probe, as `level,index`.
    #[arg(long, default_value = "1,0")]
    shortcut: String,
    /// Probe: truncation relative to each level. Oscillation: added to the grid level.
    #[arg(long, default_value_t = 1)]
    trunc: u32,
    #[arg(long, default_value_t = 1.0)]
    lipschitz: f64,
    #[arg(long)]
    json: bool,
}

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Resource(_) => 3,
            Error::Internal(_) => 1,
            _ => 2,
        };
        Self { code, message: e.to_string() }
    }
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure { code, message: message.into() }
}

type Run<T = ()> = std::result::Result<T, Failure>;

struct Loaded {
    file: ConfigFile,
    cfg: SnowflakeConfig,
}

impl Loaded {
    fn opts(&self, tol: Option<f64>) -> DistanceOptions {
        DistanceOptions { tol: tol.or(self.file.tol).unwrap_or(DistanceOptions::default().tol), ..Default::default() }
    }

    fn level(&self, level: Option<u32>) -> u32 {
        level.or(self.file.max_level).unwrap_or(DEFAULT_LEVEL)
    }
}

fn load(path: &Path) -> Run<Loaded> {
    let text = fs::read_to_string(path).map_err(|e| fail(2, format!("cannot read {}: {e}", path.display())))?;
    let file: ConfigFile = serde_json::from_str(&text).map_err(|e| fail(2, format!("bad config {}: {e}", path.display())))?;
    let cfg = file.snowflake()?;
    Ok(Loaded { file, cfg })
}

fn dyadic(label: &str, s: &str) -> Run<Dyadic> {
    s.trim().parse().map_err(|e: Error| fail(2, format!("--{label}: {e}")))
}

fn range(label: &str, s: &str) -> Run<Vec<u32>> {
    let parsed = match s.split_once("..") {
        Some((a, b)) => a.trim().parse::<u32>().ok().zip(b.trim().parse::<u32>().ok()),
        None => s.trim().parse::<u32>().ok().map(|a| (a, a)),
    };
    match parsed {
        Some((a, b)) if a <= b => Ok((a..=b).collect()),
        _ => Err(fail(2, format!("--{label}: expected `a..b` with a <= b, got `{s}`"))),
    }
}

/// Emits `body` to `--out` with its manifest, or to stdout.
fn emit(common: &Common, command: &str, params: &impl Serialize, body: &str) -> Run {
    match &common.out {
        Some(path) => manifest::write_with_sidecar(path, &common.config, command, params, body.as_bytes()),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn to_json(v: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable payload");
    s.push('\n');
    s
}

fn validate(common: &Common, json: bool) -> Run {
    let loaded = load(&common.config)?;
    let report = validate_config(&loaded.cfg);
    let body = if json {
        to_json(&report)
    } else {
        let mut out = format!("s = {}, l = {}, c = {}, mu = {}\n", report.s, report.l, report.c, report.mu);
        for c in &report.checks {
            out += &format!("{:<5} {:<12} {}  ({} <= {})\n", if c.pass { "PASS" } else { "FAIL" }, c.family, c.statement, c.lhs, c.rhs);
        }
        out += &format!("window {} <= mu <= {}: {}\n", report.lower_bound, report.upper_bound, report.combined_pass);
        if report.degenerate {
            out += "degenerate: all exponents are 1, no shortcuts\n";
        }
        out
    };
    emit(common, "validate", &json!({ "json": json }), &body)?;
    if report.admissible() {
        Ok(())
    } else {
        Err(fail(2, "config is not admissible"))
    }
}

fn dist(args: &DistArgs) -> Run {
    let loaded = load(&args.common.config)?;
    let cfg = &loaded.cfg;
    let (x, y) = (dyadic("x", &args.x)?, dyadic("y", &args.y)?);
    let level = loaded.level(args.level);
    let opts = loaded.opts(args.tol);
    let r: DistanceResult = match &args.restricted {
        Some(spec) => {
            let (a, b) = spec.split_once(',').ok_or_else(|| fail(2, "--restricted: expected `a,b`"))?;
            let (a, b) = (dyadic("restricted", a)?, dyadic("restricted", b)?);
            let cell = GridInterval::from_endpoints(cfg, &a, &b)
                .ok_or_else(|| fail(2, format!("--restricted: [{a}, {b}] is not a grid cell")))?;
            distance_restricted(cfg, &cell, &x, &y, level, &opts)?
        }
        None => HierarchicalSolver::new(cfg.clone(), opts).distance(&x, &y, level)?,
    };
    let snow = (&x - &y).abs().to_f64()?.powf(cfg.s());
    if r.value > snow {
        return Err(fail(2, format!("computed {} exceeds |x-y|^s = {snow}", r.value)));
    }
    let body = if args.json {
        let witness: Vec<[String; 2]> = r.witness.pairs.iter().map(|(a, b)| [a.to_string(), b.to_string()]).collect();
        to_json(&json!({
            "x": x, "y": y, "level": level, "value": r.value, "history": r.history,
            "converged": r.converged, "last_decrement": r.last_decrement(), "witness": witness,
            "window": [r.window.lo.to_string(), r.window.hi.to_string()],
        }))
    } else {
        format!("{}\n", r.value)
    };
    emit(&args.common, "dist", args, &body)
}

fn cubes(common: &Common, scale: u32, inside_unit: bool, admissible_only: bool) -> Run {
    let loaded = load(&common.config)?;
    let cfg = &loaded.cfg;
    let mut w = csv::Writer::from_writer(vec![]);
    let dim = cfg.dim();
    let mut header = vec!["scale".to_string()];
    header.extend((0..dim).map(|k| format!("offset{k}")));
    header.extend((0..dim).map(|k| format!("lower{k}")));
    header.extend((0..dim).map(|k| format!("upper{k}")));
    header.extend(["inside_unit".into(), "admissible".into()]);
    w.write_record(&header).map_err(|e| fail(1, e.to_string()))?;
    for idx in cubes_at_scale(cfg, scale, admissible_only) {
        let inside = cube_inside_unit(cfg, &idx);
        if inside_unit && !inside {
            continue;
        }
        let c = cube(cfg, &idx)?;
        let mut row = vec![scale.to_string()];
        row.extend(idx.offset.iter().map(i64::to_string));
        row.extend(c.lower.iter().map(f64::to_string));
        row.extend(c.upper.iter().map(f64::to_string));
        row.extend([inside.to_string(), is_admissible(cfg, &idx).to_string()]);
        w.write_record(&row).map_err(|e| fail(1, e.to_string()))?;
    }
    let body = String::from_utf8(w.into_inner().map_err(|e| fail(1, e.to_string()))?).expect("csv is utf-8");
    let params = json!({ "scale": scale, "inside_unit": inside_unit, "admissible_only": admissible_only });
    emit(common, "cubes", &params, &body)
}

fn regularity(args: &RegularityArgs) -> Run {
    let loaded = load(&args.common.config)?;
    let cfg = &loaded.cfg;
    let alpha = match args.alpha.as_str() {
        "auto" => cfg.alpha_layer(),
        a => a.parse().map_err(|_| fail(2, format!("--alpha: expected `auto` or a number, got `{a}`")))?,
    };
    let levels = range("levels", &args.levels)?;
    let radii: Vec<f64> = levels.iter().map(|&n| cfg.h_f64().powi(n as i32)).collect();
    let grid = Grid::new(cfg.l(), levels.last().copied().unwrap_or(0) + 2);
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let bits = cfg.l() * grid.level;
    if bits > 62 {
        return Err(fail(3, format!("grid of 2^{bits} cells is too fine")));
    }
    let centers: Vec<Dyadic> =
        (0..args.centers).map(|_| Dyadic::from(rng.gen_range(0..=(1i64 << bits))).mul_pow2(-(bits as i64))).collect();
    let metric: Box<dyn IntervalMetric> = match args.metric {
        LineMetric::Snowflake => Box::new(Snowflake { s: cfg.s() }),
        LineMetric::Quotient => Box::new(QuotientMetric::new(cfg.clone(), loaded.level(None), loaded.opts(None))),
    };
    let report = regularity_scan(metric.as_ref(), alpha, &centers, &radii, grid)?;
    let summary = json!({
        "alpha": alpha, "max_ratio": report.max_ratio, "min_ratio": report.min_ratio,
        "spread": report.spread(), "samples": report.samples.len(),
    });
    if let Some(path) = &args.csv {
        let mut w = csv::Writer::from_writer(vec![]);
        for s in &report.samples {
            w.serialize(s).map_err(|e| fail(1, e.to_string()))?;
        }
        let body = w.into_inner().map_err(|e| fail(1, e.to_string()))?;
        manifest::write_with_sidecar(path, &args.common.config, "regularity", args, &body)?;
    }
    emit(&args.common, "regularity", args, &to_json(&summary))
}

fn read_points(path: &Path) -> Run<FinitePointSet> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| fail(2, format!("cannot read {}: {e}", path.display())))?;
    let mut points = vec![];
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| fail(2, format!("{}: {e}", path.display())))?;
        let row: Option<Vec<f64>> = rec.iter().map(|f| f.parse().ok()).collect();
        match row {
            Some(p) => points.push(p),
            None if i == 0 => continue,
            None => return Err(fail(2, format!("{}: row {} is not numeric", path.display(), i + 1))),
        }
    }
    Ok(FinitePointSet::new(points)?)
}

fn hausdorff(args: &HausdorffArgs) -> Run {
    let loaded = load(&args.common.config)?;
    let cfg = &loaded.cfg;
    let (a, b) = (read_points(&args.a)?, read_points(&args.b)?);
    let metric: Box<dyn PointMetric> = match args.metric {
        SetMetric::Snowflake => Box::new(Snowflake { s: cfg.s() }),
        SetMetric::Ds => Box::new(ProductSnowflake(cfg.clone())),
        SetMetric::Quotient => {
            Box::new(ProductQuotient { cfg: cfg.clone(), truncation: loaded.level(args.level), opts: loaded.opts(None) })
        }
    };
    let value = hausdorff_distance(metric.as_ref(), &a, &b)?;
    let body = to_json(&json!({ "metric": args.metric, "a_points": a.len(), "b_points": b.len(), "distance": value }));
    emit(&args.common, "hausdorff", args, &body)
}

fn rigidity(args: &RigidityArgs) -> Run {
    let loaded = load(&args.common.config)?;
    let cfg = &loaded.cfg;
    let opts = loaded.opts(None);
    let payload: Value = match args.mode {
        RigidityMode::Probe => {
            let x0 = dyadic("x0", &args.x0)?;
            let levels = if args.levels == "auto" {
                block_zero_levels(&x0, cfg.l(), 3)?
            } else {
                range("levels", &args.levels)?
            };
            let (lv, ix) = args.shortcut.split_once(',').ok_or_else(|| fail(2, "--shortcut: expected `level,index`"))?;
            let lv: u32 = lv.trim().parse().map_err(|_| fail(2, "--shortcut: bad level"))?;
            let ix: i64 = ix.trim().parse().map_err(|_| fail(2, "--shortcut: bad index"))?;
            if lv == 0 {
                return Err(fail(2, "--shortcut: levels start at 1"));
            }
            let probe = rescaling_probe(cfg, &x0, &Shortcut::new(cfg, lv, ix), &levels, args.trunc, &opts)?;
            json!({ "probe": probe, "violations": probe.violations() })
        }
        RigidityMode::Oscillation => {
            let bounds = range("levels", &args.levels)?
                .into_iter()
                .map(|g| oscillation_bound(cfg, args.lipschitz, g, g + args.trunc, &opts))
                .collect::<snowmetric::Result<Vec<_>>>()?;
            json!({ "bounds": bounds })
        }
    };
    let body = if args.json {
        to_json(&payload)
    } else {
        let mut out = String::new();
        if let Some(rows) = payload["probe"]["levels"].as_array() {
            out += "level\tgap\tbound\tslack\tholds\n";
            for r in rows {
                out += &format!("{}\t{}\t{}\t{}\t{}\n", r["level"], r["gap"], r["bound"], r["slack"], r["holds"]);
            }
        } else if let Some(rows) = payload["bounds"].as_array() {
            out += "grid_level\ttruncation\tvalue\n";
            for r in rows {
                out += &format!("{}\t{}\t{}\n", r["grid_level"], r["truncation"], r["value"]);
            }
        }
        out
    };
    emit(&args.common, "rigidity", args, &body)
}

fn run(cli: Cli) -> Run {
    match cli.command {
        Command::Validate { common, json } => validate(&common, json),
        Command::Dist(a) => dist(&a),
        Command::Cubes { common, scale, inside_unit, admissible_only } => cubes(&common, scale, inside_unit, admissible_only),
        Command::Regularity(a) => regularity(&a),
        Command::Hausdorff(a) => hausdorff(&a),
        Command::Rigidity(a) => rigidity(&a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
