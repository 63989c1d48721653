use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use prefplan_core::{
    build_gridworld, evaluate, extract_policy, fixtures, parse_gpf, plan_lex, plan_product, product, simulate,
    validate_mdp, EncodingParams, Gpf, GridworldSpec, LabeledMdp, OccupancyPlan, PlanStatus, PlanWarning, Policy,
    PreferenceAutomaton, ProductMdp,
};
use prefplan_milp::{MilpConfig, SolverError};
use rayon::prelude::*;

/// Preference-based planning over labeled MDPs.
///
/// Model arguments take a file path or `builtin:<name>` for a shipped
/// fixture (fig1_automaton, fig2_automaton, micro_automaton,
/// micro3_automaton, micro1_mdp, micro2_mdp, micro3_mdp, gridworld_5x5).
#[derive(Parser)]
#[command(name = "prefplan", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for an optimal policy at one horizon.
    Plan(PlanArgs),
    /// Solve for every horizon in a range and print CSV.
    Sweep(SweepArgs),
    /// Evaluate a policy exactly.
    Eval(EvalArgs),
    /// Estimate a policy's terminal distribution by simulation.
    Simulate(SimulateArgs),
    /// Check model files for consistency.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct ModelArgs {
    /// Labeled MDP document.
    #[arg(long, conflicts_with = "grid", required_unless_present = "grid")]
    mdp: Option<String>,
    /// Gridworld document.
    #[arg(long)]
    grid: Option<String>,
    /// Preference automaton document.
    #[arg(long)]
    automaton: String,
    /// Preference formula; defaults to the automaton document's formula.
    #[arg(long)]
    pref: Option<String>,
}

#[derive(Args)]
struct SolverArgs {
    /// Margin separating the outcomes of each comparison.
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
    /// Enumerate all binary assignments up to this many binaries.
    #[arg(long, default_value_t = 16)]
    enum_threshold: usize,
    /// Branch-and-bound node limit.
    #[arg(long, default_value_t = 100_000)]
    node_limit: usize,
}

#[derive(Args)]
struct PlanArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    horizon: usize,
    /// Where to write the policy.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    t_min: usize,
    #[arg(long)]
    t_max: usize,
    /// Where to write the CSV; standard output if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Record wall-clock milliseconds; without it the column is 0 so the
    /// output is reproducible byte for byte.
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    policy: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    policy: PathBuf,
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long, conflicts_with = "grid", required_unless_present = "grid")]
    mdp: Option<String>,
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    automaton: Option<String>,
}

fn read_source(source: &str) -> Result<String> {
    if let Some(name) = source.strip_prefix("builtin:") {
        return fixtures::builtin(name).map(str::to_owned).ok_or_else(|| anyhow!("no built-in fixture `{name}`"));
    }
    fs::read_to_string(source).with_context(|| format!("reading {source}"))
}

fn load_mdp(mdp: Option<&str>, grid: Option<&str>) -> Result<LabeledMdp> {
    match (mdp, grid) {
        (Some(m), _) => Ok(LabeledMdp::from_json(&read_source(m)?).with_context(|| format!("loading {m}"))?),
        (None, Some(g)) => {
            let spec = GridworldSpec::from_json(&read_source(g)?).with_context(|| format!("loading {g}"))?;
            Ok(build_gridworld(&spec)?)
        }
        (None, None) => bail!("one of --mdp or --grid is required"),
    }
}

struct Model {
    mdp: LabeledMdp,
    automaton: PreferenceAutomaton,
    product: ProductMdp,
    gpf: Gpf,
}

impl ModelArgs {
    fn load(&self) -> Result<Model> {
        let mdp = load_mdp(self.mdp.as_deref(), self.grid.as_deref())?;
        let automaton = PreferenceAutomaton::from_json(&read_source(&self.automaton)?)
            .with_context(|| format!("loading {}", self.automaton))?;
        let text = match (&self.pref, automaton.gpf_text()) {
            (Some(p), _) => p.clone(),
            (None, Some(p)) => p.to_owned(),
            (None, None) => bail!("--pref is required: the automaton declares no formula"),
        };
        let gpf = parse_gpf(&text, &automaton).with_context(|| format!("parsing preference `{text}`"))?;
        let product = product(&mdp, &automaton)?;
        Ok(Model { mdp, automaton, product, gpf })
    }
}

impl SolverArgs {
    fn config(&self) -> MilpConfig {
        MilpConfig { enum_threshold: self.enum_threshold, node_limit: self.node_limit, ..Default::default() }
    }
}

fn params(horizon: usize, solver: &SolverArgs) -> Result<EncodingParams> {
    if horizon == 0 {
        bail!("--horizon must be at least 1");
    }
    let p = EncodingParams::new(horizon).with_epsilon(solver.epsilon);
    p.validate()?;
    Ok(p)
}

/// Plans `gpf`, dispatching a root `lex(...)` to lexicographic planning.
fn solve(model: &Model, params: &EncodingParams, config: &MilpConfig) -> Result<(Option<usize>, OccupancyPlan)> {
    match &model.gpf {
        Gpf::Lex(children) => {
            let (i, plan) = plan_lex(&model.product, children, params, config)?;
            Ok((Some(i), plan))
        }
        g => Ok((None, plan_product(&model.product, g, params, config)?)),
    }
}

fn status_name(status: PlanStatus) -> &'static str {
    match status {
        PlanStatus::Optimal => "optimal",
        PlanStatus::Infeasible => "infeasible",
    }
}

fn report_warnings(plan: &OccupancyPlan) {
    for w in &plan.warnings {
        let PlanWarning::TieBand { apf, gap } = w;
        eprintln!("warning: TieBandWarning: `{apf}` masses differ by {gap:e}, inside the margin");
    }
}

fn cmd_plan(args: &PlanArgs) -> Result<ExitCode> {
    let model = args.model.load()?;
    let params = params(args.horizon, &args.solver)?;
    let (lex_index, plan) = solve(&model, &params, &args.solver.config())?;
    report_warnings(&plan);
    println!("status {}", status_name(plan.status));
    if let Some(i) = lex_index {
        println!("lex_index {i}");
    }
    println!("objective {:.6}", plan.objective);
    for a in &plan.apfs {
        println!("apf {} value {:.6} z {}", a.name, a.value, u8::from(a.satisfied));
    }
    println!("nodes {}", plan.nodes);
    if plan.status == PlanStatus::Infeasible {
        return Ok(ExitCode::from(2));
    }
    if let Some(out) = &args.out {
        let policy = extract_policy(&plan, &model.product);
        fs::write(out, policy.to_json(&model.mdp, &model.automaton)).with_context(|| format!("writing {}", out.display()))?;
    }
    Ok(ExitCode::SUCCESS)
}

struct SweepRow {
    horizon: usize,
    outcome: Result<OccupancyPlan, String>,
    ms: u128,
}

fn cmd_sweep(args: &SweepArgs) -> Result<ExitCode> {
    if args.t_min == 0 || args.t_min > args.t_max {
        bail!("need 1 <= --t-min <= --t-max");
    }
    let model = args.model.load()?;
    if model.gpf.is_lex() {
        bail!("sweep does not support lex(...); sweep each formula separately");
    }
    params(args.t_min, &args.solver)?;
    let config = args.solver.config();
    let apf_names: Vec<String> = model.gpf.distinct_apfs().iter().map(|a| a.name.clone()).collect();

    let rows: Vec<SweepRow> = (args.t_min..=args.t_max)
        .into_par_iter()
        .map(|t| {
            let start = Instant::now();
            let outcome = params(t, &args.solver)
                .and_then(|p| Ok(plan_product(&model.product, &model.gpf, &p, &config)?))
                .map_err(|e| error_text(&e));
            SweepRow { horizon: t, outcome, ms: start.elapsed().as_millis() }
        })
        .collect();

    let mut out: Box<dyn std::io::Write> = match &args.out {
        Some(p) => Box::new(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(std::io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(&mut out);
    let mut header = vec!["T".to_string(), "objective".to_string()];
    header.extend(apf_names.iter().map(|n| format!("v_{n}")));
    header.extend(apf_names.iter().map(|n| format!("z_{n}")));
    header.extend(["ms", "nodes", "status"].map(String::from));
    w.write_record(&header)?;

    let mut objectives = Vec::new();
    for row in &rows {
        let ms = if args.timing { row.ms } else { 0 };
        let mut rec = vec![row.horizon.to_string()];
        match &row.outcome {
            Ok(plan) => {
                report_warnings(plan);
                objectives.push(plan.objective);
                rec.push(format!("{:.6}", plan.objective));
                let find = |n: &String| plan.apfs.iter().find(|a| &a.name == n);
                rec.extend(apf_names.iter().map(|n| format!("{:.6}", find(n).map_or(0.0, |a| a.value))));
                rec.extend(apf_names.iter().map(|n| u8::from(find(n).is_some_and(|a| a.satisfied)).to_string()));
                rec.extend([ms.to_string(), plan.nodes.to_string(), status_name(plan.status).to_string()]);
            }
            Err(msg) => {
                rec.push(String::new());
                rec.extend(apf_names.iter().map(|_| String::new()));
                rec.extend(apf_names.iter().map(|_| String::new()));
                rec.extend([ms.to_string(), String::new(), format!("error: {msg}")]);
            }
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    let nondecreasing = objectives.windows(2).all(|p| p[1] >= p[0] - 1e-6);
    eprintln!("objective nondecreasing in T: {nondecreasing}");
    Ok(ExitCode::SUCCESS)
}

fn load_policy(path: &Path, model: &Model) -> Result<Policy> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Policy::from_json(&text, &model.mdp, &model.automaton)?)
}

fn evaluable(gpf: &Gpf) -> Result<&Gpf> {
    if gpf.is_lex() {
        bail!("lex(...) has no pointwise value; evaluate one of its formulas");
    }
    Ok(gpf)
}

fn cmd_eval(args: &EvalArgs) -> Result<ExitCode> {
    let model = args.model.load()?;
    let policy = load_policy(&args.policy, &model)?;
    let result = evaluate(&model.product, &policy, evaluable(&model.gpf)?, policy.horizon)?;
    println!("value {:.6}", result.value);
    for (name, v) in &result.apf_values {
        println!("apf {name} value {v:.6}");
    }
    for (q, m) in result.terminal.mass().iter().enumerate() {
        if *m > 0.0 {
            println!("terminal {} {:.6}", model.automaton.states()[q], m);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_simulate(args: &SimulateArgs) -> Result<ExitCode> {
    if args.n == 0 {
        bail!("--n must be at least 1");
    }
    let model = args.model.load()?;
    let policy = load_policy(&args.policy, &model)?;
    let oracle = evaluate(&model.product, &policy, evaluable(&model.gpf)?, policy.horizon)?;
    let emp = simulate(&model.product, &policy, policy.horizon, args.n, args.seed)?;
    let mut distance: f64 = 0.0;
    for (q, (&f, &m)) in emp.frequencies.iter().zip(oracle.terminal.mass()).enumerate() {
        distance = distance.max((f - m).abs());
        if f > 0.0 || m > 0.0 {
            println!("terminal {} empirical {:.6} oracle {:.6}", model.automaton.states()[q], f, m);
        }
    }
    println!("max_distance {distance:.6}");
    Ok(ExitCode::SUCCESS)
}

fn cmd_validate(args: &ValidateArgs) -> Result<ExitCode> {
    let mdp = load_mdp(args.mdp.as_deref(), args.grid.as_deref())?;
    let mut problems: Vec<String> = validate_mdp(&mdp).iter().map(ToString::to_string).collect();
    if let Some(a) = &args.automaton {
        match PreferenceAutomaton::from_json(&read_source(a)?) {
            Ok(automaton) => {
                if let Err(e) = product(&mdp, &automaton) {
                    problems.push(e.to_string());
                }
            }
            Err(e) => problems.push(format!("automaton: {e}")),
        }
    }
    for p in &problems {
        println!("{p}");
    }
    if problems.is_empty() {
        println!("ok");
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}

fn error_text(e: &anyhow::Error) -> String {
    if let Some(SolverError::NodeLimitExceeded { limit, bound, .. }) = e.downcast_ref::<SolverError>() {
        return format!("node limit {limit} reached, bound {bound:.6}");
    }
    format!("{e:#}")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Plan(a) => cmd_plan(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Validate(a) => cmd_validate(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
