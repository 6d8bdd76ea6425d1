//! `mdregions`: rate regions, closed forms, witness search, and decoding
//! trials for multiple-description problems.
//!
//! Every command is deterministic given `--seed` and emits either JSON
//! (structures) or CSV (grids); `--validate` checks JSON outputs against the
//! schemas shipped under `docs/schemas` and re-parses CSV outputs. Exit
//! codes: 0 success, 2 invalid input, 3 search came up empty, 4 resource cap.

mod explore;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use mdregions::combinatorics::{count_qstar, enumerate_qstar, DescSet};
use mdregions::error::Error;
use mdregions::gaussian::{GaussianSpec, GaussianSystem};
use mdregions::gaussian_md;
use mdregions::pmf::JointPmf;
use mdregions::polyhedra::{project_to_totals, HPolyhedron};
use mdregions::regions::{build_region, RateVariable, Scheme, Witness};
use mdregions::sim::{threshold_sweep, threshold_sweep_seq, TrialConfig};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "mdregions", version, about = "Multiple-description rate regions")]
struct Cli {
    /// Seed for randomized commands; overrides any seed in a config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write the result to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Check inputs and the result against the shipped schemas.
    #[arg(long, global = true)]
    validate: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a scheme's rate constraints from a witness distribution.
    Region(RegionArgs),
    /// Compare two projected regions for mutual containment.
    Compare(CompareArgs),
    /// Quadratic-Gaussian closed forms.
    Gaussian {
        #[command(subcommand)]
        cmd: GaussianCmd,
    },
    /// Grid search for a witness meeting distortion targets.
    Explore(ExploreArgs),
    /// Monte Carlo encoding trials over a rate sweep.
    Simulate(SimulateArgs),
    /// Superset-closed decoder families.
    Qstar(QstarArgs),
}

#[derive(Args)]
struct RegionArgs {
    /// One of: ec, zb, vkg, cms.
    #[arg(long)]
    scheme: String,
    /// Discrete witness: joint pmf JSON file.
    #[arg(long)]
    pmf: Option<PathBuf>,
    /// Gaussian witness: system spec JSON file.
    #[arg(long)]
    gaussian: Option<PathBuf>,
    /// Project onto the per-description total rates.
    #[arg(long)]
    project: bool,
}

#[derive(Args)]
struct CompareArgs {
    /// First projected region (JSON file).
    a: PathBuf,
    /// Second projected region (JSON file).
    b: PathBuf,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Subcommand)]
enum GaussianCmd {
    /// Two-description solution for individual and joint targets.
    #[command(name = "ozarow")]
    Ozarow {
        #[arg(long)]
        d1: f64,
        #[arg(long)]
        d2: f64,
        #[arg(long)]
        d12: f64,
    },
    /// Sum-rate surcharge in bits.
    #[command(name = "delta")]
    Delta {
        #[arg(long)]
        d1: f64,
        #[arg(long)]
        d2: f64,
        #[arg(long)]
        d12: f64,
    },
    /// Pair (2,3) distortion forced by the (1,2) design.
    #[command(name = "d23star")]
    D23Star {
        #[arg(long)]
        d1: f64,
        #[arg(long)]
        d2: f64,
        #[arg(long)]
        d3: f64,
        #[arg(long)]
        d12: f64,
    },
    /// Two-description region, or the witness achieving it.
    #[command(name = "symmetric")]
    Symmetric {
        #[arg(long)]
        d1: f64,
        #[arg(long)]
        d2: f64,
        #[arg(long)]
        d12: f64,
        /// Emit the Gaussian witness spec instead of the region.
        #[arg(long)]
        witness: bool,
    },
    /// Three-description region, or one of its corners.
    #[command(name = "three")]
    Three {
        #[arg(long)]
        d1: f64,
        #[arg(long)]
        d2: f64,
        #[arg(long)]
        d3: f64,
        #[arg(long)]
        d12: f64,
        /// Corner label, a permutation of "123".
        #[arg(long)]
        corner: Option<String>,
    },
    /// Chain region for L descriptions.
    #[command(name = "chain")]
    Chain {
        /// Individual targets d1,...,dL (comma separated).
        #[arg(long, value_delimiter = ',')]
        d: Vec<f64>,
        /// Joint target for the extreme pair (1, L).
        #[arg(long)]
        d_1l: f64,
    },
    /// Classify a grid of (d12, d23) operating points (CSV).
    #[command(name = "regime-map")]
    RegimeMap {
        #[arg(long)]
        d1: f64,
        #[arg(long)]
        d2: f64,
        #[arg(long)]
        d3: f64,
        #[arg(long)]
        d12_lo: Option<f64>,
        #[arg(long)]
        d12_hi: Option<f64>,
        #[arg(long, default_value_t = 50)]
        d12_n: usize,
        #[arg(long)]
        d23_lo: Option<f64>,
        #[arg(long)]
        d23_hi: Option<f64>,
        #[arg(long, default_value_t = 50)]
        d23_n: usize,
        /// Run on one thread; the grid is identical either way.
        #[arg(long)]
        seq: bool,
    },
    /// Extra sum rate forced by keeping the codebooks unshared.
    #[command(name = "iq-excess")]
    IqExcess {
        #[arg(long)]
        d1: f64,
        #[arg(long)]
        d2: f64,
    },
}

#[derive(Args)]
struct ExploreArgs {
    /// One of: ec, zb, vkg, cms.
    #[arg(long)]
    scheme: String,
    #[arg(long = "L", default_value_t = 2)]
    l: usize,
    /// Cardinality of each auxiliary alphabet (at most 4).
    #[arg(long, default_value_t = 2)]
    card: usize,
    /// Probability grid step (at least 0.02).
    #[arg(long, default_value_t = 0.05)]
    step: f64,
    /// Distortion target per decoder, e.g. --target 12=0.05 (repeatable).
    #[arg(long = "target")]
    targets: Vec<String>,
    /// "sum" or a single coordinate "r1".."rL".
    #[arg(long, default_value = "sum")]
    objective: String,
    #[arg(long, default_value_t = 2)]
    restarts: usize,
    #[arg(long, default_value_t = 12)]
    max_sweeps: usize,
}

#[derive(Args)]
struct SimulateArgs {
    /// Trial plan (JSON file).
    #[arg(long)]
    config: PathBuf,
    /// Rate variable to sweep, e.g. rp1 or rs12.
    #[arg(long)]
    sweep: String,
    #[arg(long)]
    from: f64,
    #[arg(long)]
    to: f64,
    #[arg(long, default_value_t = 11)]
    points: usize,
    /// Run trials on one thread; points are identical either way.
    #[arg(long)]
    seq: bool,
}

#[derive(Args)]
struct QstarArgs {
    /// Number of descriptions.
    #[arg(long = "L")]
    l: usize,
    /// Print only the family count.
    #[arg(long)]
    count_only: bool,
}

/// A failed run: machine-readable message plus the process exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure { code, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::BudgetExceeded(_)
            | Error::Blowup { .. }
            | Error::DimensionTooHigh { .. } => 4,
            _ => 2,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure { code: 2, message: format!("bad JSON: {e}") }
    }
}

/// What a successful command emits.
enum Doc {
    /// Schema name and payload.
    Json(&'static str, Value),
    Csv(CsvKind, String),
}

#[derive(Clone, Copy)]
enum CsvKind {
    Regime,
    Sweep,
}

fn schema_text(name: &str) -> &'static str {
    match name {
        "constraint_set" => include_str!("../../../docs/schemas/constraint_set.schema.json"),
        "h_polyhedron" => include_str!("../../../docs/schemas/h_polyhedron.schema.json"),
        "ozarow_pair" => include_str!("../../../docs/schemas/ozarow_pair.schema.json"),
        "three_desc_region" => {
            include_str!("../../../docs/schemas/three_desc_region.schema.json")
        }
        "chain_region" => include_str!("../../../docs/schemas/chain_region.schema.json"),
        "corner_point" => include_str!("../../../docs/schemas/corner_point.schema.json"),
        "pmf" => include_str!("../../../docs/schemas/pmf.schema.json"),
        "gaussian_spec" => include_str!("../../../docs/schemas/gaussian_spec.schema.json"),
        "compare_report" => include_str!("../../../docs/schemas/compare_report.schema.json"),
        "explore_result" => include_str!("../../../docs/schemas/explore_result.schema.json"),
        "qstar" => include_str!("../../../docs/schemas/qstar.schema.json"),
        "scalar" => include_str!("../../../docs/schemas/scalar.schema.json"),
        "trial_config" => include_str!("../../../docs/schemas/trial_config.schema.json"),
        _ => unreachable!("unknown schema {name}"),
    }
}

fn check_schema(name: &'static str, value: &Value, role: &str) -> Result<(), Failure> {
    let schema: Value =
        serde_json::from_str(schema_text(name)).expect("embedded schema parses");
    jsonschema::validate(&schema, value)
        .map_err(|e| Failure::new(2, format!("{role} failed schema {name}: {e}")))
}

fn read_json(path: &Path) -> Result<Value, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::new(2, format!("cannot read {}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

/// Reads and deserializes an input file, schema-checking it first when
/// `--validate` is on.
fn read_input<T: serde::de::DeserializeOwned>(
    path: &Path,
    schema: &'static str,
    validate: bool,
) -> Result<T, Failure> {
    let value = read_json(path)?;
    if validate {
        check_schema(schema, &value, &format!("input {}", path.display()))?;
    }
    Ok(serde_json::from_value(value)?)
}

fn check_csv(kind: CsvKind, text: &str) -> Result<(), Failure> {
    let bad = |msg: String| Failure::new(2, format!("output failed CSV check: {msg}"));
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad("empty output".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    match kind {
        CsvKind::Regime => {
            if header != "d12,d23,regime,sum_rate_lb,cms_sum_rate" {
                return Err(bad(format!("unexpected header {header:?}")));
            }
            for (i, line) in lines.enumerate() {
                let f: Vec<&str> = line.split(',').collect();
                if f.len() != 5 {
                    return Err(bad(format!("row {i} has {} fields", f.len())));
                }
                for j in [0usize, 1, 3, 4] {
                    if f[j].parse::<f64>().is_err() {
                        return Err(bad(format!("row {i} field {j} is not a number")));
                    }
                }
                if !["complete_region", "min_sum_rate", "unknown"].contains(&f[2]) {
                    return Err(bad(format!("row {i} has unknown regime {:?}", f[2])));
                }
            }
        }
        CsvKind::Sweep => {
            if cols.len() < 3 || cols[0] != "rate" || cols[1] != "successes" || cols[2] != "trials"
            {
                return Err(bad(format!("unexpected header {header:?}")));
            }
            if cols[3..].iter().any(|c| !c.starts_with("d_")) {
                return Err(bad(format!("unexpected header {header:?}")));
            }
            for (i, line) in lines.enumerate() {
                let f: Vec<&str> = line.split(',').collect();
                if f.len() != cols.len() {
                    return Err(bad(format!("row {i} has {} fields", f.len())));
                }
                if f[0].parse::<f64>().is_err()
                    || f[1].parse::<u64>().is_err()
                    || f[2].parse::<u64>().is_err()
                    || f[3..].iter().any(|x| x.parse::<f64>().is_err())
                {
                    return Err(bad(format!("row {i} has a malformed field")));
                }
            }
        }
    }
    Ok(())
}

fn emit(out: &Option<PathBuf>, validate: bool, doc: Doc) -> Result<(), Failure> {
    let text = match &doc {
        Doc::Json(schema, value) => {
            if validate {
                check_schema(schema, value, "output")?;
            }
            let mut s = serde_json::to_string_pretty(value)?;
            s.push('\n');
            s
        }
        Doc::Csv(kind, body) => {
            if validate {
                check_csv(*kind, body)?;
            }
            body.clone()
        }
    };
    match out {
        Some(p) => fs::write(p, text)
            .map_err(|e| Failure::new(2, format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_doc<T: serde::Serialize>(schema: &'static str, value: &T) -> Result<Doc, Failure> {
    Ok(Doc::Json(schema, serde_json::to_value(value)?))
}

/// Largest description index named by any `U`/`V` variable.
fn infer_l(names: &[String]) -> Result<usize, Failure> {
    let mut l = 0;
    for n in names {
        if let Some(rest) = n.strip_prefix('V').or_else(|| n.strip_prefix('U')) {
            if let Ok(s) = DescSet::parse(16, rest) {
                l = l.max(s.indices().into_iter().max().unwrap_or(0));
            }
        }
    }
    if l == 0 {
        return Err(Failure::new(
            2,
            "cannot infer the description count: no U/V variable names an index",
        ));
    }
    Ok(l)
}

fn cmd_region(args: &RegionArgs, validate: bool) -> Result<Doc, Failure> {
    let scheme = Scheme::from_str(&args.scheme)?;
    let (witness, names) = match (&args.pmf, &args.gaussian) {
        (Some(p), None) => {
            let pmf: JointPmf = read_input(p, "pmf", validate)?;
            let names = pmf.names().to_vec();
            (Witness::Discrete(pmf), names)
        }
        (None, Some(p)) => {
            let spec: GaussianSpec = read_input(p, "gaussian_spec", validate)?;
            let names: Vec<String> = spec.vars.iter().map(|v| v.name.clone()).collect();
            (Witness::Gaussian(GaussianSystem::resolve(&spec)?), names)
        }
        _ => {
            return Err(Failure::new(
                2,
                "exactly one of --pmf and --gaussian is required",
            ))
        }
    };
    let l = infer_l(&names)?;
    let cs = build_region(scheme, l, &witness)?;
    if args.project {
        to_doc("h_polyhedron", &project_to_totals(&cs)?)
    } else {
        to_doc("constraint_set", &cs)
    }
}

fn first_outside(region: &HPolyhedron, other: &HPolyhedron, tol: f64) -> Result<Value, Failure> {
    for v in region.vertices()?.vertices {
        if !other.contains_point(&v, tol) {
            return Ok(json!(v));
        }
    }
    Ok(Value::Null)
}

fn cmd_compare(args: &CompareArgs, validate: bool) -> Result<Doc, Failure> {
    let pa: HPolyhedron = read_input(&args.a, "h_polyhedron", validate)?;
    let pb: HPolyhedron = read_input(&args.b, "h_polyhedron", validate)?;
    if pa.names != pb.names {
        return Err(Failure::new(
            2,
            format!(
                "regions are over different coordinates: {:?} vs {:?}",
                pa.names, pb.names
            ),
        ));
    }
    let qa = pa.resolve_equalities()?.reduce();
    let qb = pb.resolve_equalities()?.reduce();
    let a_in_b = qb.contains(&qa, args.tol)?;
    let b_in_a = qa.contains(&qb, args.tol)?;
    let witness_a = if a_in_b { Value::Null } else { first_outside(&qa, &qb, args.tol)? };
    let witness_b = if b_in_a { Value::Null } else { first_outside(&qb, &qa, args.tol)? };
    Ok(Doc::Json(
        "compare_report",
        json!({
            "names": pa.names,
            "a_subset_of_b": a_in_b,
            "b_subset_of_a": b_in_a,
            "equal": a_in_b && b_in_a,
            "tol": args.tol,
            "witness_a_not_in_b": witness_a,
            "witness_b_not_in_a": witness_b,
        }),
    ))
}

fn fmt_float(x: f64) -> String {
    format!("{x}")
}

fn cmd_gaussian(cmd: &GaussianCmd) -> Result<Doc, Failure> {
    match cmd {
        GaussianCmd::Ozarow { d1, d2, d12 } => {
            to_doc("ozarow_pair", &gaussian_md::ozarow(*d1, *d2, *d12)?)
        }
        GaussianCmd::Delta { d1, d2, d12 } => {
            to_doc("scalar", &gaussian_md::delta(*d1, *d2, *d12)?)
        }
        GaussianCmd::D23Star { d1, d2, d3, d12 } => {
            to_doc("scalar", &gaussian_md::d23_star(*d1, *d2, *d3, *d12)?)
        }
        GaussianCmd::Symmetric { d1, d2, d12, witness } => {
            if *witness {
                to_doc("gaussian_spec", &gaussian_md::symmetric_witness(*d1, *d2, *d12)?)
            } else {
                to_doc("h_polyhedron", &gaussian_md::symmetric_region(*d1, *d2, *d12)?)
            }
        }
        GaussianCmd::Three { d1, d2, d3, d12, corner } => match corner {
            Some(label) => to_doc(
                "corner_point",
                &gaussian_md::three_description_corner(label, *d1, *d2, *d3, *d12)?,
            ),
            None => to_doc(
                "three_desc_region",
                &gaussian_md::three_description_region(*d1, *d2, *d3, *d12)?,
            ),
        },
        GaussianCmd::Chain { d, d_1l } => {
            to_doc("chain_region", &gaussian_md::chain_region(d, *d_1l)?)
        }
        GaussianCmd::RegimeMap {
            d1,
            d2,
            d3,
            d12_lo,
            d12_hi,
            d12_n,
            d23_lo,
            d23_hi,
            d23_n,
            seq,
        } => {
            let m12 = d1.min(*d2);
            let m23 = d2.min(*d3);
            let r12 = (
                d12_lo.unwrap_or(0.02 * m12),
                d12_hi.unwrap_or(0.98 * m12),
                *d12_n,
            );
            let r23 = (
                d23_lo.unwrap_or(0.02 * m23),
                d23_hi.unwrap_or(0.98 * m23),
                *d23_n,
            );
            let rows = if *seq {
                gaussian_md::regime_map_seq(*d1, *d2, *d3, r12, r23)?
            } else {
                gaussian_md::regime_map(*d1, *d2, *d3, r12, r23)?
            };
            let mut csv = String::from("d12,d23,regime,sum_rate_lb,cms_sum_rate\n");
            for r in rows {
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    fmt_float(r.d12),
                    fmt_float(r.d23),
                    r.regime,
                    fmt_float(r.sum_rate_lb),
                    fmt_float(r.cms_sum_rate),
                ));
            }
            Ok(Doc::Csv(CsvKind::Regime, csv))
        }
        GaussianCmd::IqExcess { d1, d2 } => {
            to_doc("scalar", &gaussian_md::unshared_excess(*d1, *d2)?)
        }
    }
}

fn parse_targets(raw: &[String], l: usize) -> Result<Vec<(DescSet, f64)>, Failure> {
    let mut out = Vec::with_capacity(raw.len());
    for t in raw {
        let (subset, value) = t
            .split_once('=')
            .ok_or_else(|| Failure::new(2, format!("target {t:?} is not SUBSET=VALUE")))?;
        let s = DescSet::parse(l, subset)?;
        let d: f64 = value
            .parse()
            .map_err(|_| Failure::new(2, format!("target value {value:?} is not a number")))?;
        out.push((s, d));
    }
    Ok(out)
}

fn cmd_explore(args: &ExploreArgs, seed: Option<u64>) -> Result<Doc, Failure> {
    let scheme = Scheme::from_str(&args.scheme)?;
    let targets = parse_targets(&args.targets, args.l)?;
    let params = explore::Params {
        scheme,
        l: args.l,
        card: args.card,
        step: args.step,
        targets,
        objective: explore::Objective::parse(&args.objective, args.l)?,
        seed: seed.unwrap_or(0),
        restarts: args.restarts,
        max_sweeps: args.max_sweeps,
    };
    let result = explore::run(&params)?;
    if !result.feasible {
        return Err(Failure::new(
            3,
            "no witness on the grid meets every distortion target",
        ));
    }
    to_doc("explore_result", &result)
}

/// Accepts any casing of `r1`, `rp1`, `rs12` and canonicalizes it.
fn parse_axis(raw: &str) -> Result<RateVariable, Failure> {
    let t = raw.to_lowercase();
    let canon = if let Some(rest) = t.strip_prefix("rp") {
        format!("Rp{rest}")
    } else if let Some(rest) = t.strip_prefix("rs") {
        format!("Rs{rest}")
    } else if let Some(rest) = t.strip_prefix('r') {
        format!("R{rest}")
    } else {
        return Err(Failure::new(2, format!("bad sweep variable {raw:?}")));
    };
    Ok(RateVariable::from_str(&canon)?)
}

fn cmd_simulate(args: &SimulateArgs, seed: Option<u64>, validate: bool) -> Result<Doc, Failure> {
    let mut cfg: TrialConfig = read_input(&args.config, "trial_config", validate)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let axis = parse_axis(&args.sweep)?;
    let rows = if args.seq {
        threshold_sweep_seq(&cfg, &axis, args.from, args.to, args.points)?
    } else {
        threshold_sweep(&cfg, &axis, args.from, args.to, args.points)?
    };
    let mut csv = String::from("rate,successes,trials");
    if let Some(first) = rows.first() {
        for (s, _) in &first.mean_distortions {
            csv.push_str(&format!(",d_{}", s.digits()));
        }
    }
    csv.push('\n');
    for p in rows {
        csv.push_str(&format!("{},{},{}", fmt_float(p.rate), p.successes, p.trials));
        for (_, d) in &p.mean_distortions {
            csv.push_str(&format!(",{}", fmt_float(*d)));
        }
        csv.push('\n');
    }
    Ok(Doc::Csv(CsvKind::Sweep, csv))
}

fn cmd_qstar(args: &QstarArgs) -> Result<Doc, Failure> {
    if args.count_only {
        if args.l == 0 || args.l > 6 {
            return Err(Failure::new(2, "counting supports 1 <= L <= 6"));
        }
        return to_doc("scalar", &(count_qstar(args.l) as u64));
    }
    if args.l == 0 || args.l > 5 {
        return Err(Failure::new(2, "enumeration supports 1 <= L <= 5"));
    }
    let families = enumerate_qstar(args.l)?;
    let listed: Vec<Vec<String>> = families
        .iter()
        .map(|q| q.members().iter().map(DescSet::digits).collect())
        .collect();
    Ok(Doc::Json(
        "qstar",
        json!({ "l": args.l, "count": listed.len(), "families": listed }),
    ))
}

fn configure_threads() -> Result<(), Failure> {
    match std::env::var("MDREGIONS_THREADS") {
        Err(_) => Ok(()),
        Ok(raw) => {
            let n: usize = raw
                .parse()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| {
                    Failure::new(2, format!("MDREGIONS_THREADS must be a positive integer, got {raw:?}"))
                })?;
            mdregions::par::configure_threads(n)?;
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    configure_threads()?;
    let doc = match &cli.command {
        Command::Region(a) => cmd_region(a, cli.validate)?,
        Command::Compare(a) => cmd_compare(a, cli.validate)?,
        Command::Gaussian { cmd } => cmd_gaussian(cmd)?,
        Command::Explore(a) => cmd_explore(a, cli.seed)?,
        Command::Simulate(a) => cmd_simulate(a, cli.seed, cli.validate)?,
        Command::Qstar(a) => cmd_qstar(a)?,
    };
    emit(&cli.out, cli.validate, doc)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", json!({ "error": f.message, "code": f.code }));
            ExitCode::from(f.code)
        }
    }
}
