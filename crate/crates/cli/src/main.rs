#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use oscbump::bumps::{
    ap_constant, bump_constant_k, necessity_constants, separated_log_bump, two_weight_ap, unbumped_direct, Gauges,
    SeparatedPreset,
};
use oscbump::grid::{shifted_grids, Cube, DyadicGrid, FunctionSource, Lattice, SampledFunction, Weight};
use oscbump::harness::{corollary_suite, refinement_sweep, run_scenario, Scenario};
use oscbump::numeric::log_grid;
use oscbump::operators::{commutator_kernel_apply, commutator_recursive, hilbert, hilbert_at};
use oscbump::oscillation::{bmo_seminorm, osc_seminorm, root_bmo_check, OscReport};
use oscbump::orlicz::orlicz_average;
use oscbump::sparse::{apply_sparse, apply_sparse_adjoint, build_sparse_stopping, verify_or_build_exceptional, SparseFamily};
use oscbump::young::{bp_tail, bp_default_ladder, check_duality_sandwich, YoungFunction};
use oscbump::Error;

#[derive(Parser)]
#[command(name = "oscbump", version, about = "Young functions, Orlicz averages, sparse commutators and bump conditions")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Global {
    /// Grid depth: the lattice has 2^depth samples.
    #[arg(long, global = true)]
    depth: Option<u32>,
    /// Number of shifted dyadic grids.
    #[arg(long, global = true)]
    shifts: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Truncated domain `x0,x1`.
    #[arg(long, global = true, default_value = "0,1", allow_hyphen_values = true)]
    domain: String,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Cmd {
    /// Young functions.
    #[command(subcommand)]
    Young(YoungCmd),
    /// Orlicz averages.
    #[command(subcommand)]
    Orlicz(OrliczCmd),
    /// Oscillation seminorms.
    #[command(subcommand)]
    Osc(OscCmd),
    /// Sparse families and sparse operators.
    #[command(subcommand)]
    Sparse(SparseCmd),
    /// Hilbert transform and its commutators.
    #[command(subcommand)]
    Op(OpCmd),
    /// Bump, necessity and A_p constants.
    #[command(subcommand)]
    Bump(BumpCmd),
    /// Run a scenario file.
    Run {
        scenario: PathBuf,
        /// Comma-separated depths for a refinement sweep.
        #[arg(long)]
        sweep: Option<String>,
    },
    /// Run the shipped scenario suite.
    Suite,
}

#[derive(Subcommand)]
enum YoungCmd {
    /// Tabulate Φ, Φ⁻¹ and the associate.
    Inspect {
        gauge: String,
        #[arg(long, default_value_t = 13)]
        points: usize,
    },
    /// Invariants, duality sandwich and optionally the B_p tail.
    Check {
        gauge: String,
        #[arg(long)]
        p: Option<f64>,
    },
}

#[derive(Subcommand)]
enum OrliczCmd {
    /// `‖f‖_{Φ,Q}`; the cube defaults to the whole domain.
    Avg {
        #[arg(long)]
        gauge: String,
        #[arg(long)]
        f: String,
        /// `a,side`
        #[arg(long)]
        cube: Option<String>,
    },
}

#[derive(Subcommand)]
enum OscCmd {
    Bmo {
        #[arg(long)]
        b: String,
    },
    Phi {
        #[arg(long)]
        gauge: String,
        #[arg(long)]
        b: String,
    },
    /// Compare `‖b‖_{Osc(exp L^a)}` with `‖b^a‖_BMO^{1/a}`.
    Rootcheck {
        #[arg(long)]
        b: String,
        #[arg(long)]
        a: f64,
    },
}

#[derive(Subcommand)]
enum SparseCmd {
    /// Stopping-time family of `f` on the standard grid.
    Build {
        #[arg(long)]
        f: String,
        #[arg(long, default_value_t = 4.0)]
        ratio: f64,
    },
    /// Certify a family file, or a cube list `a:side;a:side` on the standard grid.
    Verify {
        family: Option<PathBuf>,
        #[arg(long)]
        cubes: Option<String>,
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Apply the sparse commutator of a family file.
    Apply {
        family: PathBuf,
        #[arg(long)]
        b: String,
        #[arg(long)]
        m: u32,
        #[arg(long)]
        f: String,
        #[arg(long)]
        adjoint: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Form {
    Kernel,
    Recursive,
}

#[derive(Subcommand)]
enum OpCmd {
    Hilbert {
        #[arg(long)]
        f: String,
        /// Evaluate at these comma-separated points instead of the lattice.
        #[arg(long, allow_hyphen_values = true)]
        at: Option<String>,
    },
    Commutator {
        #[arg(long)]
        b: String,
        #[arg(long)]
        m: u32,
        #[arg(long)]
        f: String,
        #[arg(long, value_enum, default_value_t = Form::Kernel)]
        form: Form,
    },
}

#[derive(Args)]
struct Pair {
    #[arg(long, default_value = "constant(1)")]
    u: String,
    #[arg(long, default_value = "constant(1)")]
    v: String,
    #[arg(long)]
    p: f64,
}

#[derive(Subcommand)]
enum BumpCmd {
    /// Bump constant K; unbumped gauges unless `--gauges` gives a JSON file or record.
    #[command(name = "K")]
    K {
        #[arg(long)]
        b: String,
        #[arg(long)]
        m: u32,
        #[command(flatten)]
        pair: Pair,
        #[arg(long)]
        gauges: Option<String>,
    },
    /// Separated log-bump preset such as `cor1.3(1,0.5)`.
    Preset {
        preset: String,
        #[command(flatten)]
        pair: Pair,
        /// Symbol for the oscillation factor.
        #[arg(long)]
        b: Option<String>,
        #[arg(long)]
        a_gauge: Option<String>,
        #[arg(long)]
        d_gauge: Option<String>,
    },
    /// The two necessary suprema.
    Necessity {
        #[arg(long)]
        b: String,
        #[arg(long)]
        m: u32,
        #[command(flatten)]
        pair: Pair,
    },
    /// `[w]_{A_p}`, or the two-weight constant of `(w, v)` when `--v` is given.
    Ap {
        #[arg(long)]
        w: String,
        #[arg(long)]
        v: Option<String>,
        #[arg(long)]
        p: f64,
    },
}

/// Output of a command: JSON, an optional CSV rendering and whether hard checks passed.
struct Output {
    json: Value,
    csv: Option<String>,
    ok: bool,
}

impl Output {
    fn new(json: Value) -> Output {
        Output { json, csv: None, ok: true }
    }

    fn csv(mut self, csv: String) -> Output {
        self.csv = Some(csv);
        self
    }

    fn ok(mut self, ok: bool) -> Output {
        self.ok = ok;
        self
    }
}

struct Ctx {
    lattice: Lattice,
    grids: Vec<DyadicGrid>,
}

impl Ctx {
    fn new(g: &Global) -> Result<Ctx> {
        let d = parse_list(&g.domain)?;
        if d.len() != 2 {
            bail!("--domain expects `x0,x1`, got `{}`", g.domain);
        }
        let lattice = Lattice::with_depth(d[0], d[1], g.depth.unwrap_or(10))?;
        let grids = shifted_grids(lattice, g.shifts.unwrap_or(1))?;
        Ok(Ctx { lattice, grids })
    }

    fn function(&self, src: &str) -> Result<SampledFunction> {
        let source = match src.strip_prefix("csv:") {
            Some(path) => FunctionSource::Csv { csv: path.into() },
            None => FunctionSource::Generator(src.into()),
        };
        source.resolve(self.lattice, None).with_context(|| format!("resolving `{src}`"))
    }

    fn weight(&self, src: &str) -> Result<Weight> {
        Weight::new(self.function(src)?).with_context(|| format!("weight `{src}`"))
    }
}

fn parse_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<f64>().with_context(|| format!("bad number `{s}`")))
        .collect()
}

fn parse_cube(text: &str, sep: char) -> Result<Cube> {
    let parts: Vec<&str> = text.split(sep).collect();
    if parts.len() != 2 {
        bail!("cube expects `a{sep}side`, got `{text}`");
    }
    let a = parts[0].trim().parse::<f64>().with_context(|| format!("bad cube `{text}`"))?;
    let side = parts[1].trim().parse::<f64>().with_context(|| format!("bad cube `{text}`"))?;
    Ok(Cube::new(a, side)?)
}

fn gauge_arg(text: &str) -> Result<YoungFunction> {
    let t = text.trim();
    if !t.starts_with('{') && Path::new(t).is_file() {
        return Ok(YoungFunction::parse(&fs::read_to_string(t)?)?);
    }
    Ok(YoungFunction::parse(t)?)
}

fn to_json<T: ?Sized + serde::Serialize>(x: &T) -> Result<Value> {
    Ok(serde_json::to_value(x)?)
}

fn csv_table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn function_output(f: &SampledFunction) -> Result<Output> {
    let xs = f.lattice.midpoints();
    let csv = csv_table(&["x", "value"], xs.iter().zip(&f.values).map(|(x, v)| vec![x.to_string(), v.to_string()]))?;
    Ok(Output::new(json!({ "lattice": f.lattice, "x": xs, "values": f.values })).csv(csv))
}

fn osc_output(r: &OscReport) -> Result<Output> {
    let csv = csv_table(
        &["a", "side", "value"],
        r.per_cube.iter().map(|(q, v)| vec![q.a.to_string(), q.side.to_string(), v.to_string()]),
    )?;
    let json = json!({
        "seminorm": r.seminorm,
        "attaining_cube": r.attaining_cube,
        "gauge": r.gauge,
        "cubes_scanned": r.per_cube.len(),
    });
    Ok(Output::new(json).csv(csv))
}

/// Flattens a JSON value into `key,value` rows with dotted paths.
fn flatten(prefix: &str, v: &Value, rows: &mut Vec<Vec<String>>) {
    let join = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(m) => m.iter().for_each(|(k, x)| flatten(&join(k), x, rows)),
        Value::Array(a) => a.iter().enumerate().for_each(|(i, x)| flatten(&join(&i.to_string()), x, rows)),
        Value::String(s) => rows.push(vec![prefix.into(), s.clone()]),
        other => rows.push(vec![prefix.into(), other.to_string()]),
    }
}

fn young(cmd: YoungCmd) -> Result<Output> {
    match cmd {
        YoungCmd::Inspect { gauge, points } => {
            let phi = gauge_arg(&gauge)?;
            let rows: Vec<Value> = log_grid(1e-2, 1e2, points.max(2))
                .into_iter()
                .map(|t| {
                    json!({
                        "t": t,
                        "phi": phi.eval(t),
                        "inverse": phi.eval_inverse(t),
                        "associate": phi.associate(t).ok(),
                    })
                })
                .collect();
            let csv = csv_table(
                &["t", "phi", "inverse", "associate"],
                rows.iter().map(|r| {
                    ["t", "phi", "inverse", "associate"]
                        .iter()
                        .map(|k| match &r[*k] {
                            Value::Null => String::new(),
                            v => v.to_string(),
                        })
                        .collect()
                }),
            )?;
            let json = json!({
                "gauge": phi,
                "display": phi.to_string(),
                "invariants": phi.check_invariants(),
                "table": rows,
            });
            Ok(Output::new(json).csv(csv))
        }
        YoungCmd::Check { gauge, p } => {
            let phi = gauge_arg(&gauge)?;
            let inv = phi.check_invariants();
            let sandwich = match check_duality_sandwich(&phi, &log_grid(1e-3, 1e3, 50)) {
                Ok(r) => Some(r),
                Err(Error::NoFiniteAssociate(_)) => None,
                Err(e) => return Err(e.into()),
            };
            let bp = p.map(|p| bp_tail(&phi, p, &bp_default_ladder())).transpose()?;
            let ok = inv.holds() && sandwich.as_ref().is_none_or(|s| s.holds);
            let json = json!({
                "gauge": phi,
                "display": phi.to_string(),
                "invariants": inv,
                "invariants_hold": inv.holds(),
                "sandwich": sandwich,
                "bp": bp,
                "passed": ok,
            });
            Ok(Output::new(json).ok(ok))
        }
    }
}

fn orlicz(cmd: OrliczCmd, ctx: &Ctx) -> Result<Output> {
    let OrliczCmd::Avg { gauge, f, cube } = cmd;
    let phi = gauge_arg(&gauge)?;
    let f = ctx.function(&f)?;
    let q = match cube {
        Some(c) => parse_cube(&c, ',')?,
        None => ctx.lattice.domain(),
    };
    Ok(Output::new(to_json(&orlicz_average(&phi, &f, &q)?)?))
}

fn osc(cmd: OscCmd, ctx: &Ctx) -> Result<Output> {
    match cmd {
        OscCmd::Bmo { b } => osc_output(&bmo_seminorm(&ctx.function(&b)?, &ctx.grids)?),
        OscCmd::Phi { gauge, b } => osc_output(&osc_seminorm(&gauge_arg(&gauge)?, &ctx.function(&b)?, &ctx.grids)?),
        OscCmd::Rootcheck { b, a } => {
            let r = root_bmo_check(&ctx.function(&b)?, a, &ctx.grids[0])?;
            let ok = r.chain_holds;
            Ok(Output::new(to_json(&r)?).ok(ok))
        }
    }
}

fn load_family(path: &Path) -> Result<SparseFamily> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn sparse(cmd: SparseCmd, ctx: &Ctx) -> Result<Output> {
    match cmd {
        SparseCmd::Build { f, ratio } => {
            let fam = build_sparse_stopping(&ctx.function(&f)?, &ctx.grids[0], ratio)?;
            Ok(Output::new(to_json(&fam)?))
        }
        SparseCmd::Verify { family, cubes, delta } => {
            let result = match (family, cubes) {
                (Some(path), None) => {
                    let mut fam = load_family(&path)?;
                    if let Some(d) = delta {
                        fam.delta = d;
                    }
                    fam.reverify()
                }
                (None, Some(list)) => {
                    let cubes = list
                        .split(';')
                        .filter(|s| !s.trim().is_empty())
                        .map(|s| parse_cube(s, ':'))
                        .collect::<Result<Vec<_>>>()?;
                    verify_or_build_exceptional(&ctx.grids[0], &cubes, delta.unwrap_or(0.5))
                }
                _ => bail!("give either a family file or --cubes"),
            };
            match result {
                Ok(fam) => Ok(Output::new(json!({
                    "sparse": true,
                    "cubes": fam.len(),
                    "delta": fam.delta,
                    "min_ratio": fam.min_ratio(),
                }))),
                Err(Error::NotSparse { cube, ratio, delta }) => Ok(Output::new(json!({
                    "sparse": false,
                    "offending_cube": cube,
                    "ratio": ratio,
                    "delta": delta,
                }))
                .ok(false)),
                Err(e) => Err(e.into()),
            }
        }
        SparseCmd::Apply { family, b, m, f, adjoint } => {
            let fam = load_family(&family)?.reverify()?;
            let local = Ctx { lattice: fam.grid.lattice, grids: vec![fam.grid] };
            let (b, f) = (local.function(&b)?, local.function(&f)?);
            let out = if adjoint { apply_sparse_adjoint(&fam, &b, m, &f)? } else { apply_sparse(&fam, &b, m, &f)? };
            function_output(&out)
        }
    }
}

fn op(cmd: OpCmd, ctx: &Ctx) -> Result<Output> {
    match cmd {
        OpCmd::Hilbert { f, at: None } => function_output(&hilbert(&ctx.function(&f)?)),
        OpCmd::Hilbert { f, at: Some(points) } => {
            let xs = parse_list(&points)?;
            let vals = hilbert_at(&ctx.function(&f)?, &xs)?;
            let csv = csv_table(&["x", "value"], xs.iter().zip(&vals).map(|(x, v)| vec![x.to_string(), v.to_string()]))?;
            Ok(Output::new(json!({ "x": xs, "values": vals })).csv(csv))
        }
        OpCmd::Commutator { b, m, f, form } => {
            let (b, f) = (ctx.function(&b)?, ctx.function(&f)?);
            let out = match form {
                Form::Kernel => commutator_kernel_apply(&b, m, &f)?,
                Form::Recursive => commutator_recursive(&b, m, &f)?,
            };
            function_output(&out)
        }
    }
}

fn bump(cmd: BumpCmd, ctx: &Ctx) -> Result<Output> {
    match cmd {
        BumpCmd::K { b, m, pair, gauges } => {
            let (b, u, v) = (ctx.function(&b)?, ctx.weight(&pair.u)?, ctx.weight(&pair.v)?);
            let g = match &gauges {
                None => Gauges::unbumped(pair.p)?,
                Some(text) => {
                    let t = text.trim();
                    let body = if t.starts_with('{') { t.to_string() } else { fs::read_to_string(t)? };
                    serde_json::from_str::<Gauges>(&body).context("parsing gauges")?
                }
            };
            let rep = bump_constant_k(&g, &b, m, &u, &v, pair.p, &ctx.grids)?;
            let mut json = json!({ "bump": rep });
            if gauges.is_none() {
                let (first, second) = unbumped_direct(&b, m, &u, &v, pair.p, &ctx.grids)?;
                json["unbumped_direct"] = json!({ "first": first, "second": second, "sum": first.value + second.value });
            }
            Ok(Output::new(json))
        }
        BumpCmd::Preset { preset, pair, b, a_gauge, d_gauge } => {
            let preset = SeparatedPreset::parse(&preset)?;
            let free = match (a_gauge, d_gauge) {
                (None, None) => None,
                (a, d) => {
                    let (da, dd) = preset.free_defaults(pair.p)?;
                    Some((a.map(|g| gauge_arg(&g)).transpose()?.unwrap_or(da), d.map(|g| gauge_arg(&g)).transpose()?.unwrap_or(dd)))
                }
            };
            let b = b.map(|s| ctx.function(&s)).transpose()?;
            let (u, v) = (ctx.weight(&pair.u)?, ctx.weight(&pair.v)?);
            Ok(Output::new(to_json(&separated_log_bump(&preset, free, b.as_ref(), &u, &v, pair.p, &ctx.grids)?)?))
        }
        BumpCmd::Necessity { b, m, pair } => {
            let (b, u, v) = (ctx.function(&b)?, ctx.weight(&pair.u)?, ctx.weight(&pair.v)?);
            Ok(Output::new(to_json(&necessity_constants(&b, m, &u, &v, pair.p, &ctx.grids)?)?))
        }
        BumpCmd::Ap { w, v, p } => {
            let w = ctx.weight(&w)?;
            let rep = match v {
                None => ap_constant(&w, p, &ctx.grids)?,
                Some(v) => two_weight_ap(&w, &ctx.weight(&v)?, p, &ctx.grids)?,
            };
            Ok(Output::new(to_json(&rep)?))
        }
    }
}

fn run(path: &Path, sweep: Option<String>, g: &Global) -> Result<Output> {
    let (mut s, base) = Scenario::load(path).with_context(|| format!("loading {}", path.display()))?;
    if let Some(seed) = g.seed {
        s.seed = seed;
    }
    if let Some(d) = g.depth {
        s.grid.depth = d;
    }
    if let Some(k) = g.shifts {
        s.grid.shifts = k;
    }
    match sweep {
        None => {
            let rep = run_scenario(&s, Some(&base))?;
            let csv = rep.checks_csv()?;
            let ok = rep.passed;
            Ok(Output::new(to_json(&rep)?).csv(csv).ok(ok))
        }
        Some(list) => {
            let depths = list
                .split(',')
                .map(|d| d.trim().parse::<u32>().with_context(|| format!("bad depth `{d}`")))
                .collect::<Result<Vec<_>>>()?;
            let table = refinement_sweep(&s, &depths, Some(&base))?;
            let ok = table.rows.iter().all(|r| r.hard_checks_pass);
            let csv = table.to_csv()?;
            Ok(Output::new(to_json(&table)?).csv(csv).ok(ok))
        }
    }
}

fn suite(g: &Global) -> Result<Output> {
    let rep = corollary_suite(g.seed.unwrap_or(0))?;
    let mut csv = String::new();
    for (i, r) in rep.reports.iter().enumerate() {
        let part = r.checks_csv()?;
        // Keep the header of the first report only.
        let body = if i == 0 { part.as_str() } else { part.split_once('\n').map_or("", |x| x.1) };
        csv.push_str(body);
    }
    let ok = rep.all_hard_pass;
    Ok(Output::new(to_json(&rep)?).csv(csv).ok(ok))
}

fn dispatch(cli: Cli) -> Result<(Output, Global)> {
    let g = cli.global;
    let out = match cli.cmd {
        Cmd::Young(c) => young(c)?,
        Cmd::Orlicz(c) => orlicz(c, &Ctx::new(&g)?)?,
        Cmd::Osc(c) => osc(c, &Ctx::new(&g)?)?,
        Cmd::Sparse(c) => sparse(c, &Ctx::new(&g)?)?,
        Cmd::Op(c) => op(c, &Ctx::new(&g)?)?,
        Cmd::Bump(c) => bump(c, &Ctx::new(&g)?)?,
        Cmd::Run { scenario, sweep } => run(&scenario, sweep, &g)?,
        Cmd::Suite => suite(&g)?,
    };
    Ok((out, g))
}

fn write(out: &Output, g: &Global) -> Result<()> {
    let text = match g.format {
        Format::Json => serde_json::to_string_pretty(&out.json)? + "\n",
        Format::Csv => match &out.csv {
            Some(c) => c.clone(),
            None => {
                let mut rows = Vec::new();
                flatten("", &out.json, &mut rows);
                csv_table(&["key", "value"], rows)?
            }
        },
    };
    match &g.out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli).and_then(|(out, g)| write(&out, &g).map(|_| out.ok)) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
