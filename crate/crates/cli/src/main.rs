//! `codelv`: check, render, verify and simulate codel-based components.

mod load;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use codelv::simulator::{self, monitor, replay, DurationPolicy, SimConfig, Trace};
use codelv::spec_ast::Property;
use codelv::template::{generate_dot, generate_skeleton, generate_task_dot, parse_template, render};
use codelv::tts::{build_tts, default_schedulability, TtsOptions};
use codelv::verifier::{compute_bound, min_cores, verify, ExploreConfig, Verdict, VerifyOptions};
use load::{parse_duration, Inputs};
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_VIOLATION: u8 = 1;
const EXIT_INCONCLUSIVE: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Parser, Debug)]
#[command(name = "codelv", version, about = "Timing analysis for codel-based robotic components", arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse and resolve specifications; print diagnostics and a summary.
    Check(CheckArgs),
    /// Graphviz rendering of service and task state machines.
    Dot(DotArgs),
    /// Expand a template or generate codel skeletons.
    Render(RenderArgs),
    /// Model-check timing properties.
    Verify(VerifyArgs),
    /// Smallest core count on which every property holds.
    Mincores(MincoresArgs),
    /// Run the system with concrete durations and monitor the trace.
    Simulate(SimulateArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args, Debug)]
struct SpecArgs {
    /// Component specification files (.gen).
    #[arg(required = true)]
    specs: Vec<PathBuf>,
    /// Port wiring file (`writer.port -> reader.port` per line).
    #[arg(long)]
    wiring: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[command(flatten)]
    spec: SpecArgs,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Also print the normalized form of every specification.
    #[arg(long)]
    pretty: bool,
    /// Write the resolved model (access sets, conflicts) as JSON.
    #[arg(long)]
    emit_model: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DotArgs {
    #[command(flatten)]
    spec: SpecArgs,
    /// Only this service (`component.Service`).
    #[arg(long, conflicts_with = "task")]
    service: Option<String>,
    /// Only this task's permanent activity (`component/task`).
    #[arg(long)]
    task: Option<String>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RenderArgs {
    #[command(flatten)]
    spec: SpecArgs,
    /// Template file.
    #[arg(long, required_unless_present = "skeleton", conflicts_with = "skeleton")]
    template: Option<PathBuf>,
    /// Write C codel stubs under this directory instead.
    #[arg(long)]
    skeleton: Option<PathBuf>,
    /// Component to render (default: the first one).
    #[arg(long)]
    component: Option<String>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ModelArgs {
    #[command(flatten)]
    spec: SpecArgs,
    /// Client requests (.scn).
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Properties (.prop); the schedulability of every periodic task when absent.
    #[arg(long)]
    props: Option<PathBuf>,
    /// Maximum number of stored symbolic states.
    #[arg(long, env = "CODELV_BUDGET", default_value_t = 5_000_000)]
    budget: usize,
    /// Exploration worker threads.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Store every zone instead of merging included ones.
    #[arg(long)]
    no_subsumption: bool,
    /// Take every resource lock exclusively, even for readers.
    #[arg(long)]
    exclusive_locks: bool,
    /// Every codel takes exactly its WCET.
    #[arg(long)]
    pinned: bool,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the JSON report here as well.
    #[arg(long)]
    report: Option<PathBuf>,
}

impl ModelArgs {
    fn options(&self) -> VerifyOptions {
        VerifyOptions {
            explore: ExploreConfig {
                budget: self.budget,
                subsumption: !self.no_subsumption,
                workers: self.workers,
                stop_when_all_violated: true,
            },
            exclusive_locks: self.exclusive_locks,
            pinned_durations: self.pinned,
            witnesses: true,
        }
    }
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 1)]
    cores: u32,
    /// Compute the tightest bound of this bounded-response property.
    #[arg(long)]
    bound: Option<String>,
    /// Write the witness trace of the first violated property (CSV).
    #[arg(long)]
    witness_csv: Option<PathBuf>,
    /// Write the compiled timed transition system (JSON).
    #[arg(long)]
    emit_tts: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MincoresArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Largest core count tried.
    #[arg(long, default_value_t = 8)]
    max: u32,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Policy {
    Fixed,
    Uniform,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    spec: SpecArgs,
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    cores: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Policy::Fixed)]
    policy: Policy,
    /// Force a codel duration: `function=duration` (e.g. `mv_goto_plan=3000us`).
    #[arg(long, value_parser = parse_inject)]
    inject: Vec<(String, u64)>,
    /// Simulated time (default: the scenario horizon, else 1s).
    #[arg(long, value_parser = parse_duration)]
    horizon: Option<u64>,
    #[arg(long)]
    exclusive_locks: bool,
    /// Number of runs with consecutive seeds.
    #[arg(long, default_value_t = 1)]
    runs: u64,
    /// Trace output (CSV), last run only.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Trace output (JSON), last run only.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Monitor violations (JSON).
    #[arg(long)]
    report: Option<PathBuf>,
    /// Replay this recorded CSV trace instead of simulating.
    #[arg(long, conflicts_with_all = ["runs", "inject", "csv", "json"])]
    replay: Option<PathBuf>,
    /// Properties monitored during a replay; the schedulability of every
    /// periodic task when absent.
    #[arg(long, requires = "replay")]
    props: Option<PathBuf>,
}

fn parse_inject(s: &str) -> Result<(String, u64), String> {
    let (k, v) = s.split_once('=').ok_or("expected `codel=duration`")?;
    Ok((k.trim().to_string(), parse_duration(v.trim())?))
}

fn main() -> ExitCode {
    // exit quietly when the reader of stdout goes away (`codelv ... | head`)
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Check(a) => cmd_check(a),
        Command::Dot(a) => cmd_dot(a),
        Command::Render(a) => cmd_render(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Mincores(a) => cmd_mincores(a),
        Command::Simulate(a) => cmd_simulate(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            if let Some(load::Failed(diags)) = e.downcast_ref::<load::Failed>() {
                for d in diags {
                    eprintln!("{}", d);
                }
                return ExitCode::from(EXIT_VIOLATION);
            }
            eprintln!("error: {:#}", e);
            ExitCode::from(EXIT_INCONCLUSIVE)
        }
    }
}

fn write_or_print(path: &Option<PathBuf>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{}", text);
            Ok(())
        }
    }
}

fn cmd_check(a: CheckArgs) -> Result<u8> {
    let inputs = Inputs::load(&a.spec.specs, a.spec.wiring.as_deref())?;
    let model = &inputs.model;
    for d in &inputs.diagnostics {
        eprintln!("{}", d);
    }
    if let Some(p) = &a.emit_model {
        std::fs::write(p, serde_json::to_string_pretty(&model.to_json())?).with_context(|| format!("writing {}", p.display()))?;
    }
    match a.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&model.to_json())?),
        Format::Text => {
            for (i, c) in model.components.iter().enumerate() {
                println!("{}: {}", c.name(), model.summary(i));
                if a.pretty {
                    print!("{}", codelv::spec_ast::pretty_print(&c.spec));
                }
            }
            println!("{} resources, {} conflicting codel pairs", model.resources.len(), model.conflicts.len());
        }
    }
    Ok(0)
}

fn cmd_dot(a: DotArgs) -> Result<u8> {
    let inputs = Inputs::load(&a.spec.specs, a.spec.wiring.as_deref())?;
    let mut out = String::new();
    for c in &inputs.model.components {
        let spec = &c.spec;
        for s in &spec.services {
            if s.codels.iter().all(|k| k.state.is_none()) {
                continue;
            }
            let full = format!("{}.{}", spec.name, s.name);
            if a.task.is_some() || a.service.as_ref().is_some_and(|x| *x != full) {
                continue;
            }
            out.push_str(&generate_dot(s));
        }
        for t in &spec.tasks {
            let full = format!("{}/{}", spec.name, t.name);
            if t.codels.is_empty() || a.service.is_some() || a.task.as_ref().is_some_and(|x| *x != full) {
                continue;
            }
            out.push_str(&generate_task_dot(t));
        }
    }
    if out.is_empty() {
        bail!("nothing to draw");
    }
    write_or_print(&a.output, &out)?;
    Ok(0)
}

fn cmd_render(a: RenderArgs) -> Result<u8> {
    let inputs = Inputs::load(&a.spec.specs, a.spec.wiring.as_deref())?;
    let model = &inputs.model;
    let ci = match &a.component {
        Some(n) => model.component_index(n).with_context(|| format!("unknown component `{}`", n))?,
        None => 0,
    };
    if let Some(dir) = &a.skeleton {
        for (rel, text) in generate_skeleton(model, ci) {
            let path = dir.join(rel);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
            println!("{}", path.display());
        }
        return Ok(0);
    }
    let tpath = a.template.as_ref().expect("clap requires --template");
    let source = std::fs::read_to_string(tpath).with_context(|| format!("reading {}", tpath.display()))?;
    let t = match parse_template(&source) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("{}:{}", tpath.display(), e);
            return Ok(EXIT_VIOLATION);
        }
    };
    match render(&t, model, model.components[ci].name()) {
        Ok(text) => {
            write_or_print(&a.output, &text)?;
            Ok(0)
        }
        Err(e) => {
            eprintln!("{}:{}", tpath.display(), e);
            Ok(EXIT_VIOLATION)
        }
    }
}

fn verdict_code(vs: impl IntoIterator<Item = Verdict>) -> u8 {
    let vs: Vec<Verdict> = vs.into_iter().collect();
    if vs.contains(&Verdict::Violated) {
        EXIT_VIOLATION
    } else if vs.contains(&Verdict::Inconclusive) {
        EXIT_INCONCLUSIVE
    } else {
        0
    }
}

fn emit(format: Format, report: &Option<PathBuf>, value: &serde_json::Value, text: impl FnOnce() -> String) -> Result<()> {
    let pretty = serde_json::to_string_pretty(value)?;
    if let Some(p) = report {
        std::fs::write(p, &pretty).with_context(|| format!("writing {}", p.display()))?;
    }
    match format {
        Format::Json => println!("{}", pretty),
        Format::Text => print!("{}", text()),
    }
    Ok(())
}

fn cmd_verify(a: VerifyArgs) -> Result<u8> {
    let m = &a.model;
    let inputs = Inputs::load(&m.spec.specs, m.spec.wiring.as_deref())?;
    let scenario = inputs.scenario(m.scenario.as_deref())?;
    let props = inputs.properties(m.props.as_deref())?;
    let opts = m.options();
    if let Some(p) = &a.emit_tts {
        let tts = build_tts(
            &inputs.model,
            a.cores,
            &scenario,
            &TtsOptions {
                exclusive_locks: opts.exclusive_locks,
                properties: if props.is_empty() { default_schedulability(&inputs.model) } else { props.clone() },
                pinned_durations: opts.pinned_durations,
            },
        )?;
        std::fs::write(p, serde_json::to_string_pretty(&tts.to_json())?).with_context(|| format!("writing {}", p.display()))?;
    }
    if let Some(name) = &a.bound {
        let prop: &Property = props.iter().find(|p| p.name() == name).with_context(|| format!("no property named `{}`", name))?;
        let b = compute_bound(&inputs.model, &scenario, prop, a.cores, &opts)?;
        let value = json!({ "cores": a.cores, "bound": b });
        let verdict = |v: Option<Verdict>| v.map_or("-".to_string(), |v| format!("{:?}", v));
        emit(m.format, &m.report, &value, || match b.bound {
            Some(v) => format!(
                "{}: bound {}us ({} at the bound, {} one microsecond below)\n",
                b.property,
                v,
                verdict(b.at_bound),
                verdict(b.below_bound)
            ),
            None if b.at_bound.is_none() => format!("{}: the trigger never occurs\n", b.property),
            None => format!("{}: no finite bound found ({})\n", b.property, verdict(b.at_bound)),
        })?;
        return Ok(match (b.bound, b.at_bound) {
            (Some(_), Some(Verdict::Holds)) => 0,
            (None, None) => 0,
            (_, Some(Verdict::Inconclusive)) => EXIT_INCONCLUSIVE,
            _ => EXIT_VIOLATION,
        });
    }
    let report = verify(&inputs.model, &scenario, &props, a.cores, &opts)?;
    for r in &report.results {
        for w in &r.warnings {
            eprintln!("warning: {}", w);
        }
    }
    if let Some(path) = &a.witness_csv {
        if let Some(w) = report.results.iter().find_map(|r| r.witness.as_ref()) {
            std::fs::write(path, w.trace.to_csv()?).with_context(|| format!("writing {}", path.display()))?;
        }
    }
    let value = serde_json::to_value(&report)?;
    emit(m.format, &m.report, &value, || {
        let mut s = String::new();
        for r in &report.results {
            s.push_str(&format!("{}: {:?}\n", r.name, r.verdict));
            if let Some(w) = &r.witness {
                for e in &w.trace.events {
                    s.push_str(&format!("    {}\n", e));
                }
            }
        }
        s.push_str(&format!("{} states explored on {} core(s)\n", report.total_states(), report.cores));
        s
    })?;
    Ok(verdict_code(report.results.iter().map(|r| r.verdict)))
}

fn cmd_mincores(a: MincoresArgs) -> Result<u8> {
    let m = &a.model;
    if a.max == 0 {
        bail!("--max must be at least 1");
    }
    let inputs = Inputs::load(&m.spec.specs, m.spec.wiring.as_deref())?;
    let scenario = inputs.scenario(m.scenario.as_deref())?;
    let props = inputs.properties(m.props.as_deref())?;
    let r = min_cores(&inputs.model, &scenario, &props, a.max, &m.options())?;
    let value = serde_json::to_value(&r)?;
    emit(m.format, &m.report, &value, || {
        let mut s = String::new();
        for (n, v) in &r.tried {
            s.push_str(&format!("{} core(s): {:?}\n", n, v));
        }
        match r.cores {
            Some(n) => s.push_str(&format!("minimum: {} core(s)\n", n)),
            None => s.push_str(&format!("no core count up to {} satisfies every property\n", a.max)),
        }
        s
    })?;
    Ok(match (r.cores, r.uncertain) {
        (Some(_), false) => 0,
        (_, true) => EXIT_INCONCLUSIVE,
        (None, false) => EXIT_VIOLATION,
    })
}

fn cmd_simulate(a: SimulateArgs) -> Result<u8> {
    let inputs = Inputs::load(&a.spec.specs, a.spec.wiring.as_deref())?;
    let scenario = inputs.scenario(a.scenario.as_deref())?;
    let model = &inputs.model;
    if let Some(path) = &a.replay {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let trace = Trace::from_csv(&text)?;
        let mut properties = inputs.properties(a.props.as_deref())?;
        if properties.is_empty() {
            properties = default_schedulability(model);
        }
        let tts = build_tts(model, a.cores, &scenario, &TtsOptions { exclusive_locks: a.exclusive_locks, properties, ..Default::default() })?;
        return Ok(match replay(&trace, &tts) {
            Ok(o) => {
                println!("replayed {} steps; trace is consistent with the model", o.steps);
                for name in &o.confirmed {
                    println!("confirmed violation: {}", name);
                }
                0
            }
            Err(e) => {
                eprintln!("{}: {}", path.display(), e);
                EXIT_VIOLATION
            }
        });
    }
    let horizon = a.horizon.or((scenario.horizon > 0).then_some(scenario.horizon)).unwrap_or(1_000_000);
    let mut all = Vec::new();
    let mut last = None;
    for k in 0..a.runs.max(1) {
        let cfg = SimConfig {
            seed: a.seed + k,
            cores: a.cores,
            policy: match a.policy {
                Policy::Fixed => DurationPolicy::Fixed,
                Policy::Uniform => DurationPolicy::Uniform,
            },
            inject: a.inject.clone(),
            horizon,
            exclusive_locks: a.exclusive_locks,
            ..Default::default()
        };
        let trace = simulator::simulate(model, &scenario, &cfg)?;
        for v in monitor(&trace, model) {
            eprintln!("seed {}: {}", cfg.seed, v);
            all.push(json!({ "seed": cfg.seed, "violation": v }));
        }
        if trace.truncated {
            eprintln!("seed {}: run truncated at {}us (event cap)", cfg.seed, trace.end_time);
        }
        last = Some(trace);
    }
    let trace = last.expect("at least one run");
    if let Some(p) = &a.csv {
        std::fs::write(p, trace.to_csv()?).with_context(|| format!("writing {}", p.display()))?;
    }
    if let Some(p) = &a.json {
        std::fs::write(p, serde_json::to_string_pretty(&trace)?).with_context(|| format!("writing {}", p.display()))?;
    }
    if let Some(p) = &a.report {
        std::fs::write(p, serde_json::to_string_pretty(&json!({ "runs": a.runs.max(1), "violations": all }))?)
            .with_context(|| format!("writing {}", p.display()))?;
    }
    if a.csv.is_none() && a.json.is_none() {
        for e in &trace.events {
            println!("{}", e);
        }
    }
    Ok(if all.is_empty() { 0 } else { EXIT_VIOLATION })
}
