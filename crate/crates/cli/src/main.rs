use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use cbjump::laplace::{solve_u, solve_v};
use cbjump::maxjump::{
    global_max_jump_density, global_max_jump_law, local_max_jump_cdf, max_jump_atom_at_zero, tail_asymptote,
    JumpLawQuery, Window,
};
use cbjump::simulate::{ensemble, SamplePath, Sampler, SmallJumps};
use cbjump::validate::experiments::{run_experiment, Overrides, PRESETS};
use cbjump::validate::sim_defaults;
use cbjump::{Mechanism, MechanismConfig};

mod grid;

#[derive(Parser)]
#[command(name = "cbjump", version, about = "Laws of continuous-state branching processes")]
struct Cli {
    /// Worker threads for simulation (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Tabulate Phi and Phi' on a lambda grid.
    Phi {
        #[command(flatten)]
        mech: MechArg,
        /// Comma list or start:stop:count.
        #[arg(long, default_value = "0:10:11")]
        lambda: String,
    },
    /// Solve the v- or u-flow from one starting value.
    Flow {
        #[command(flatten)]
        mech: MechArg,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        t: f64,
        #[arg(long, value_enum, default_value_t = FlowArg::V)]
        kind: FlowArg,
        #[arg(long, default_value_t = 101)]
        points: usize,
    },
    /// Maximal-jump law on an r grid, for a window (0, t] or t = inf.
    Maxjump {
        #[command(flatten)]
        mech: MechArg,
        #[arg(long, default_value_t = 1.0)]
        x: f64,
        #[arg(long, default_value = "inf")]
        t: String,
        #[arg(long)]
        r: String,
    },
    /// Simulate replicates and write one stats row per path.
    Simulate(SimArgs),
    /// Run a named validation experiment.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct MechArg {
    /// Mechanism config (JSON).
    #[arg(long)]
    mech: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum FlowArg {
    V,
    U,
}

#[derive(Args)]
struct SimArgs {
    #[command(flatten)]
    mech: MechArg,
    #[arg(long, default_value_t = 1.0)]
    x: f64,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    /// Horizon.
    #[arg(long = "T", default_value_t = 1.0)]
    horizon: f64,
    /// Fixed small-jump cutoff; the default depends on the mechanism.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, default_value_t = 0x5eed)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Record times, comma separated (default: the horizon).
    #[arg(long)]
    record: Option<String>,
    /// Also write every path (n <= 1000).
    #[arg(long)]
    paths: bool,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long, required_unless_present = "list")]
    experiment: Option<String>,
    /// List experiments and exit.
    #[arg(long)]
    list: bool,
    /// Replace the experiment's mechanism.
    #[arg(long)]
    mech: Option<PathBuf>,
    #[arg(long)]
    x: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    dt: Option<f64>,
    /// Levels for convergence experiments, comma separated.
    #[arg(long)]
    ladder: Option<String>,
}

/// JSON summary written next to the maximal-jump CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxJumpSummary {
    pub mechanism: MechanismConfig,
    pub x: f64,
    /// `None` for the whole lifetime.
    pub t: Option<f64>,
    pub atom_at_zero: f64,
    /// Location (`None` when infinite) and mass of the atom at `sup π`.
    pub atom_at_sup: Option<(Option<f64>, f64)>,
    pub h0: bool,
    pub h1: bool,
    pub h2: String,
    pub largest_root: Option<f64>,
    pub criticality: String,
}

enum Outcome {
    Done(String),
    Failed(String),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: --threads: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(Outcome::Done(msg)) => {
            println!("{msg}");
            ExitCode::SUCCESS
        }
        Ok(Outcome::Failed(msg)) => {
            println!("{msg}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn load_mech(path: &Path) -> Result<(MechanismConfig, Mechanism)> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read mechanism file {}", path.display()))?;
    let cfg = MechanismConfig::from_json(&text).with_context(|| format!("in {}", path.display()))?;
    let mech = cfg.build().with_context(|| format!("in {}", path.display()))?;
    Ok((cfg, mech))
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn strings(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

fn run(cli: &Cli) -> Result<Outcome> {
    fs::create_dir_all(&cli.out).with_context(|| format!("cannot create {}", cli.out.display()))?;
    match &cli.cmd {
        Cmd::Phi { mech, lambda } => {
            let (_, m) = load_mech(&mech.mech)?;
            let grid = grid::parse(lambda)?;
            let rows = grid
                .iter()
                .map(|&l| Ok(vec![fmt(l), fmt(m.phi(l)?), fmt(m.phi_prime(l)?)]))
                .collect::<Result<Vec<_>>>()?;
            let path = cli.out.join("phi.csv");
            write_csv(&path, &strings(&["lambda", "phi", "phi_prime"]), &rows)?;
            Ok(Outcome::Done(format!("{} rows -> {}", rows.len(), path.display())))
        }
        Cmd::Flow { mech, lambda, t, kind, points } => {
            let (_, m) = load_mech(&mech.mech)?;
            if *points < 2 {
                bail!("--points must be at least 2");
            }
            let sol = match kind {
                FlowArg::V => solve_v(&m, *lambda, *t)?,
                FlowArg::U => solve_u(&m, *lambda, *t)?,
            };
            let rows: Vec<Vec<String>> = (0..*points)
                .map(|i| {
                    let s = t * i as f64 / (*points - 1) as f64;
                    vec![fmt(s), fmt(sol.value(s))]
                })
                .collect();
            let path = cli.out.join("flow.csv");
            write_csv(&path, &strings(&["t", "value"]), &rows)?;
            Ok(Outcome::Done(format!("value at t = {t}: {} -> {}", sol.terminal(), path.display())))
        }
        Cmd::Maxjump { mech, x, t, r } => maxjump(cli, &mech.mech, *x, t, r),
        Cmd::Simulate(a) => simulate(cli, a),
        Cmd::Validate(a) => validate(cli, a),
    }
}

fn maxjump(cli: &Cli, mech: &Path, x: f64, t: &str, r: &str) -> Result<Outcome> {
    let (cfg, m) = load_mech(mech)?;
    let window = match t {
        "inf" | "infinity" => Window::Infinite,
        s => Window::Finite(s.parse::<f64>().map_err(|_| anyhow!("--t must be a number or inf, got '{s}'"))?),
    };
    let grid = grid::parse(r)?;
    let mut atom_at_sup = None;
    let mut rows = Vec::new();
    for &r in &grid {
        let q = JumpLawQuery::new(&m, x, window, r);
        let cdf = match window {
            Window::Finite(_) => local_max_jump_cdf(&q)?,
            Window::Infinite => {
                let law = global_max_jump_law(&q)?;
                if let Some(a) = law.atom_at_sup {
                    atom_at_sup = Some((a.location.finite(), a.mass));
                }
                law.cdf
            }
        };
        let density = match window {
            Window::Infinite => global_max_jump_density(&m, x, r).ok(),
            Window::Finite(_) => None,
        };
        let asymptote = tail_asymptote(&q).ok().and_then(|a| a.value());
        let opt = |v: Option<f64>| v.map(fmt).unwrap_or_default();
        rows.push(vec![fmt(r), fmt(cdf), opt(density), opt(asymptote)]);
    }
    let a = m.check_assumptions();
    let summary = MaxJumpSummary {
        mechanism: cfg,
        x,
        t: match window {
            Window::Finite(t) => Some(t),
            Window::Infinite => None,
        },
        atom_at_zero: max_jump_atom_at_zero(&m, x, window)?,
        atom_at_sup,
        h0: a.h0,
        h1: a.h1,
        h2: format!("{:?}", a.h2).to_lowercase(),
        largest_root: a.largest_root_q,
        criticality: format!("{:?}", m.classify()).to_lowercase(),
    };
    let csv_path = cli.out.join("maxjump.csv");
    write_csv(&csv_path, &strings(&["r", "cdf", "density", "asymptote"]), &rows)?;
    write_json(&cli.out.join("maxjump.json"), &summary)?;
    let first = rows.first().map(|r| format!("cdf({}) = {}", r[0], r[1])).unwrap_or_default();
    Ok(Outcome::Done(format!("{first}; {} rows -> {}", rows.len(), csv_path.display())))
}

fn simulate(cli: &Cli, a: &SimArgs) -> Result<Outcome> {
    let (_, m) = load_mech(&a.mech.mech)?;
    if !(a.x > 0.0) {
        bail!("--x must be positive");
    }
    if a.paths && a.n > 1000 {
        bail!("--paths needs n <= 1000");
    }
    let mut cfg = sim_defaults(&m, a.x, a.dt);
    cfg.horizon = a.horizon;
    cfg.seed = a.seed;
    cfg.n = a.n;
    if let Some(e) = a.eps {
        cfg.cutoff = SmallJumps::Absolute(e);
    }
    cfg.record_times = match &a.record {
        Some(s) => grid::parse(s)?,
        None => vec![a.horizon],
    };
    cfg.record_path = a.paths;
    cfg.validate()?;

    let times = cfg.record_times.clone();
    let mut header = strings(&["replicate", "H", "width", "sigma", "supjump_global", "jumps", "cause"]);
    for t in &times {
        header.push(format!("supjump@{t}"));
    }
    for t in &times {
        header.push(format!("X@{t}"));
    }
    let row = |i: usize, s: &cbjump::simulate::PathStats| {
        let mut r = vec![
            i.to_string(),
            s.height.map(fmt).unwrap_or_default(),
            fmt(s.width),
            fmt(s.sigma),
            fmt(s.sup_jump),
            s.jumps.to_string(),
            format!("{:?}", s.cause).to_lowercase(),
        ];
        r.extend(s.sup_jump_at.iter().map(|&v| fmt(v)));
        r.extend(s.x_at.iter().map(|&v| fmt(v)));
        r
    };
    let stats_path = cli.out.join("simulate.csv");
    let extinct;
    if a.paths {
        let paths: Vec<SamplePath> = cbjump::simulate::ensemble_paths(Sampler::Path, &m, a.x, &cfg)?;
        let rows: Vec<_> = paths.iter().enumerate().map(|(i, p)| row(i, &p.stats)).collect();
        write_csv(&stats_path, &header, &rows)?;
        let mut prow = Vec::new();
        for (i, p) in paths.iter().enumerate() {
            for (t, x) in p.times.iter().zip(&p.values) {
                prow.push(vec![i.to_string(), fmt(*t), fmt(*x)]);
            }
        }
        write_csv(&cli.out.join("paths.csv"), &strings(&["replicate", "t", "x"]), &prow)?;
        extinct = paths.iter().filter(|p| p.stats.height.is_some()).count();
    } else {
        let stats = ensemble(Sampler::Path, &m, a.x, &cfg)?;
        let rows: Vec<_> = stats.iter().enumerate().map(|(i, s)| row(i, s)).collect();
        write_csv(&stats_path, &header, &rows)?;
        extinct = stats.iter().filter(|s| s.height.is_some()).count();
    }
    Ok(Outcome::Done(format!("{} replicates, {extinct} extinct by {} -> {}", a.n, a.horizon, stats_path.display())))
}

fn validate(cli: &Cli, a: &ValidateArgs) -> Result<Outcome> {
    if a.list {
        for p in PRESETS {
            println!("{:<14} {}", p.name, p.about);
        }
        return Ok(Outcome::Done(format!("{} experiments", PRESETS.len())));
    }
    let name = a.experiment.as_deref().expect("clap requires it");
    let mut o = Overrides {
        x: a.x,
        n: a.n,
        seed: a.seed,
        dt: a.dt,
        ..Default::default()
    };
    if let Some(p) = &a.mech {
        o.mech = Some(load_mech(p)?.1);
    }
    if let Some(l) = &a.ladder {
        o.ladder = Some(grid::parse(l)?);
    }
    let out = run_experiment(name, &o)?;
    let path = cli.out.join(format!("validate-{name}.json"));
    write_json(&path, &out)?;
    for c in &out.checks {
        let goal = match (c.target, c.bounds) {
            (Some(t), _) => format!("{t:.6}"),
            (None, Some((lo, hi))) => format!("[{lo:.4}, {hi:.4}]"),
            _ => "-".into(),
        };
        println!(
            "{}  {:<60} {:>12.6} ± {:<9.2e} {}",
            if c.pass { "pass" } else { "FAIL" },
            c.name,
            c.estimate,
            c.std_error,
            goal
        );
        for w in &c.warnings {
            println!("      note: {w}");
        }
    }
    let failed = out.checks.iter().filter(|c| !c.pass).count();
    let msg = format!("{name}: {}/{} checks passed -> {}", out.checks.len() - failed, out.checks.len(), path.display());
    Ok(if failed == 0 { Outcome::Done(msg) } else { Outcome::Failed(msg) })
}
