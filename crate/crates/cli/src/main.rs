//! Batch front door: instance generation, pipeline runs, repair and
//! evaluation of solution texts, brute-force reference optima, grammar
//! checks, toy training, and the acceptance benchmark suites.
//!
//! Output is one JSON record per line, ordered by instance id, so runs
//! diff cleanly; `--pretty` renders a human table instead. Exit codes:
//! 0 success, 2 acceptance/feasibility failure, 3 input error.

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use feasolve::bopo::{train_toy, ToySoftmaxPolicy};
use feasolve::decode::{
    DecodeConfig, HeuristicPolicy, PolicySource, ScriptedPolicy, UniformValidPolicy,
};
use feasolve::error::OracleError;
use feasolve::gen::{random_instance, Distribution};
use feasolve::grammar::{solution_to_text, GrammarEngine};
use feasolve::oracle::brute_force;
use feasolve::problems::{check_feasibility, objective, optimality_gap, ProblemKind};
use feasolve::repair::repair;
use feasolve::sampler::{adaptive_best_of_n, best_of_n, SamplerConfig};
use feasolve::verify;
use feasolve::Instance;
use rayon::prelude::*;
use serde::Serialize;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "feasolve", version, about = "Constrained-generation toolkit for combinatorial optimization")]
struct Cli {
    /// Base seed for all randomized work
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file or directory (verb-dependent; default stdout)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Tsp,
    Op,
    Cvrp,
    Mis,
    Mvc,
    Pfsp,
    Jssp,
}

impl From<KindArg> for ProblemKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Tsp => ProblemKind::Tsp,
            KindArg::Op => ProblemKind::Op,
            KindArg::Cvrp => ProblemKind::Cvrp,
            KindArg::Mis => ProblemKind::Mis,
            KindArg::Mvc => ProblemKind::Mvc,
            KindArg::Pfsp => ProblemKind::Pfsp,
            KindArg::Jssp => ProblemKind::Jssp,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Single,
    FixedN,
    Adaptive,
}

#[derive(Subcommand)]
enum Verb {
    /// Generate seeded instances
    Gen {
        #[arg(long)]
        kind: KindArg,
        #[arg(long)]
        size: usize,
        #[arg(long, default_value_t = 1)]
        count: usize,
        /// uniform | gm | er | ba (default depends on kind)
        #[arg(long)]
        dist: Option<String>,
        /// Machine count for pfsp/jssp
        #[arg(long)]
        machines: Option<usize>,
    },
    /// Decode, repair, and score instances end to end
    Solve {
        /// Instance JSON files
        #[arg(required = true)]
        instances: Vec<PathBuf>,
        /// uniform | heuristic | scripted:<text file>
        #[arg(long, default_value = "uniform")]
        policy: String,
        #[arg(long, value_enum, default_value_t = ModeArg::Single)]
        mode: ModeArg,
        /// Sample count for fixed-n mode
        #[arg(long, default_value_t = 8)]
        n_samples: usize,
        #[arg(long, default_value_t = 0.7)]
        temperature: f64,
        /// Human-readable table instead of JSON lines
        #[arg(long)]
        pretty: bool,
    },
    /// Repair a solution text against an instance
    Repair {
        #[arg(long)]
        instance: PathBuf,
        /// Solution text, or @path to read it from a file
        #[arg(long)]
        text: String,
    },
    /// Feasibility and objective of a solution text
    Eval {
        #[arg(long)]
        instance: PathBuf,
        /// Solution text, or @path to read it from a file
        #[arg(long)]
        text: String,
    },
    /// Brute-force reference optimum
    Oracle {
        #[arg(required = true)]
        instances: Vec<PathBuf>,
    },
    /// Validate a solution text against the output grammar
    GrammarCheck {
        #[arg(long)]
        kind: KindArg,
        #[arg(long)]
        size: usize,
        /// Solution text, or @path to read it from a file; omit with
        /// --dump to print the grammar
        #[arg(long)]
        text: Option<String>,
        /// Print the grammar productions
        #[arg(long)]
        dump: bool,
    },
    /// Preference-train a toy softmax policy on one instance
    TrainToy {
        #[arg(long)]
        problem: KindArg,
        #[arg(long, default_value_t = 4)]
        size: usize,
        #[arg(long, default_value_t = 400)]
        steps: usize,
        /// Step size (default 1/(L sqrt(T)) with L estimated)
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long, default_value_t = 8)]
        k: usize,
    },
    /// Run acceptance-criterion suites
    Bench {
        /// feasibility | grammar | locality | lemma1 | sampling |
        /// bopo-grad | oracle-equiv | all
        #[arg(default_value = "all")]
        suite: String,
    },
}

#[derive(Serialize)]
struct SolveRecord {
    id: String,
    kind: &'static str,
    size: usize,
    feasible_before_repair: bool,
    repair_invoked: bool,
    feasible_after_repair: bool,
    objective: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    gap: Option<f64>,
    samples_used: usize,
    wall_ms: u128,
    solution: String,
}

#[derive(Serialize)]
struct SolveAggregates {
    instances: usize,
    feasibility_rate_before: f64,
    feasibility_rate_after: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    mean_gap: Option<f64>,
    mean_samples: f64,
}

fn load_instance(path: &Path) -> Result<Instance> {
    let raw = fs::read_to_string(path)
        .with_context(|| format!("reading instance file {}", path.display()))?;
    Instance::from_json(&raw).map_err(|e| anyhow!("parsing {}: {}", path.display(), e))
}

fn text_arg(text: &str) -> Result<String> {
    match text.strip_prefix('@') {
        Some(path) => {
            let raw = fs::read_to_string(path)
                .with_context(|| format!("reading solution text from {}", path))?;
            Ok(raw.trim_end_matches('\n').to_string())
        }
        None => Ok(text.to_string()),
    }
}

enum Output {
    Stdout,
    File(std::io::BufWriter<fs::File>),
}

impl Output {
    fn new(out: &Option<PathBuf>) -> Result<Self> {
        match out {
            None => Ok(Output::Stdout),
            Some(p) => {
                let f = fs::File::create(p)
                    .with_context(|| format!("creating output file {}", p.display()))?;
                Ok(Output::File(std::io::BufWriter::new(f)))
            }
        }
    }

    fn line(&mut self, s: &str) -> Result<()> {
        match self {
            Output::Stdout => println!("{}", s),
            Output::File(w) => writeln!(w, "{}", s)?,
        }
        Ok(())
    }
}

fn build_policy(spec: &str, inst: &Instance, engine: &GrammarEngine) -> Result<Box<dyn PolicySource>> {
    if spec == "uniform" {
        return Ok(Box::new(UniformValidPolicy));
    }
    if spec == "heuristic" {
        return Ok(Box::new(HeuristicPolicy::new(inst.clone())));
    }
    if let Some(path) = spec.strip_prefix("scripted:") {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading script from {}", path))?;
        let policy = ScriptedPolicy::from_text(&engine.grammar.vocab, text.trim_end_matches('\n'))
            .map_err(|(off, pos)| {
                anyhow!("script does not tokenize at byte {} (token {})", off, pos)
            })?;
        return Ok(Box::new(policy));
    }
    bail!("unknown policy '{}': expected uniform, heuristic, or scripted:<file>", spec)
}

fn solve_one(
    inst: &Instance,
    policy_spec: &str,
    mode: ModeArg,
    n_samples: usize,
    temperature: f64,
    seed: u64,
) -> Result<SolveRecord> {
    let t0 = Instant::now();
    let engine = GrammarEngine::new(inst.kind(), inst.size())
        .map_err(|e| anyhow!("building grammar for {}: {}", inst.id, e))?;
    let policy = build_policy(policy_spec, inst, &engine)?;
    let cfg = DecodeConfig {
        temperature,
        seed,
        ..DecodeConfig::default()
    };
    let (solution, feasible_before, repaired, samples_used) = match mode {
        ModeArg::Single => {
            let raw = feasolve::decode::sample_solution(&engine, policy.as_ref(), inst, &cfg)?;
            let feasible = check_feasibility(inst, &raw)?.feasible;
            let out = repair(inst, &raw)?;
            (out.repaired, feasible, out.modified, 1)
        }
        ModeArg::FixedN => {
            let (best, trace) = best_of_n(&engine, policy.as_ref(), inst, &cfg, n_samples)?;
            let all_raw_feasible = trace.records.iter().all(|r| r.feasible_before_repair);
            (best, all_raw_feasible, !all_raw_feasible, trace.samples_used)
        }
        ModeArg::Adaptive => {
            let sampler_cfg = SamplerConfig::default();
            let (best, trace) =
                adaptive_best_of_n(&engine, policy.as_ref(), inst, &cfg, &sampler_cfg)?;
            let all_raw_feasible = trace.records.iter().all(|r| r.feasible_before_repair);
            (best, all_raw_feasible, !all_raw_feasible, trace.samples_used)
        }
    };
    let feasible_after = check_feasibility(inst, &solution)?.feasible;
    let value = objective(inst, &solution)?;
    let gap = match brute_force(inst) {
        Ok(opt) => optimality_gap(value, opt.value, inst.kind().sense()).ok(),
        Err(OracleError::TooLarge) => None,
        Err(e) => return Err(anyhow!("oracle on {}: {}", inst.id, e)),
    };
    Ok(SolveRecord {
        id: inst.id.clone(),
        kind: inst.kind().name(),
        size: inst.size(),
        feasible_before_repair: feasible_before,
        repair_invoked: repaired,
        feasible_after_repair: feasible_after,
        objective: value,
        gap,
        samples_used,
        wall_ms: t0.elapsed().as_millis(),
        solution: solution_to_text(inst.kind(), &solution, value)
            .map_err(|e| anyhow!("serializing solution for {}: {}", inst.id, e))?,
    })
}

fn run_gen(
    kind: ProblemKind,
    size: usize,
    count: usize,
    dist: Option<String>,
    machines: Option<usize>,
    seed: u64,
    out: &Option<PathBuf>,
) -> Result<()> {
    let dist = match &dist {
        Some(s) => Distribution::parse(s)
            .ok_or_else(|| anyhow!("unknown distribution '{}': expected uniform, gm, er, ba", s))?,
        None => Distribution::default_for(kind),
    };
    match (kind, dist) {
        (ProblemKind::Mis | ProblemKind::Mvc, Distribution::Uniform | Distribution::GaussianMixture) => {
            bail!("graph problems need a graph distribution (er or ba)")
        }
        (ProblemKind::Mis | ProblemKind::Mvc, _) => {}
        (_, Distribution::ErdosRenyi | Distribution::BarabasiAlbert) => {
            bail!("geometric problems need a coordinate distribution (uniform or gm)")
        }
        _ => {}
    }
    if let Some(dir) = out {
        fs::create_dir_all(dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
    }
    for i in 0..count {
        let inst = random_instance(kind, size, machines, seed.wrapping_add(i as u64), dist)
            .map_err(|e| anyhow!("generating instance {}: {}", i, e))?;
        let json = inst.to_json();
        match out {
            Some(dir) => {
                let path = dir.join(format!("{}.json", inst.id));
                fs::write(&path, format!("{}\n", json))
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            None => println!("{}", json),
        }
    }
    Ok(())
}

fn run_solve(
    paths: &[PathBuf],
    policy: &str,
    mode: ModeArg,
    n_samples: usize,
    temperature: f64,
    pretty: bool,
    seed: u64,
    out: &Option<PathBuf>,
) -> Result<ExitCode> {
    let mut instances: Vec<Instance> = paths
        .iter()
        .map(|p| load_instance(p))
        .collect::<Result<_>>()?;
    instances.sort_by(|a, b| a.id.cmp(&b.id));
    let results: Vec<Result<SolveRecord>> = instances
        .par_iter()
        .enumerate()
        .map(|(i, inst)| {
            solve_one(inst, policy, mode, n_samples, temperature, seed.wrapping_add(i as u64))
        })
        .collect();
    let mut records = Vec::new();
    for r in results {
        records.push(r?);
    }
    let n = records.len();
    let before = records.iter().filter(|r| r.feasible_before_repair).count();
    let after = records.iter().filter(|r| r.feasible_after_repair).count();
    let gaps: Vec<f64> = records.iter().filter_map(|r| r.gap).collect();
    let aggregates = SolveAggregates {
        instances: n,
        feasibility_rate_before: 100.0 * before as f64 / n as f64,
        feasibility_rate_after: 100.0 * after as f64 / n as f64,
        mean_gap: if gaps.is_empty() {
            None
        } else {
            Some(gaps.iter().sum::<f64>() / gaps.len() as f64)
        },
        mean_samples: records.iter().map(|r| r.samples_used as f64).sum::<f64>() / n as f64,
    };
    let mut output = Output::new(out)?;
    if pretty {
        output.line(&format!(
            "{:<24} {:>5} {:>8} {:>8} {:>12} {:>8} {:>8}",
            "id", "size", "pre-ok", "post-ok", "objective", "gap%", "samples"
        ))?;
        for r in &records {
            output.line(&format!(
                "{:<24} {:>5} {:>8} {:>8} {:>12.4} {:>8} {:>8}",
                r.id,
                r.size,
                r.feasible_before_repair,
                r.feasible_after_repair,
                r.objective,
                r.gap.map_or("-".to_string(), |g| format!("{:.2}", 100.0 * g)),
                r.samples_used
            ))?;
        }
        output.line(&format!(
            "feasibility {:.1}% -> {:.1}%, mean gap {}, mean samples {:.2}",
            aggregates.feasibility_rate_before,
            aggregates.feasibility_rate_after,
            aggregates
                .mean_gap
                .map_or("-".to_string(), |g| format!("{:.2}%", 100.0 * g)),
            aggregates.mean_samples
        ))?;
    } else {
        for r in &records {
            output.line(&serde_json::to_string(r)?)?;
        }
        output.line(&serde_json::to_string(&serde_json::json!({
            "aggregates": aggregates
        }))?)?;
    }
    if after != n {
        eprintln!("post-repair feasibility below 100%");
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn run_repair(instance: &Path, text: &str, out: &Option<PathBuf>) -> Result<()> {
    let inst = load_instance(instance)?;
    let engine = GrammarEngine::new(inst.kind(), inst.size())
        .map_err(|e| anyhow!("building grammar: {}", e))?;
    let sol = engine
        .parse(&text_arg(text)?)
        .map_err(|e| anyhow!("parsing solution text: {}", e))?;
    let outcome = repair(&inst, &sol)?;
    let value = objective(&inst, &outcome.repaired)?;
    let mut output = Output::new(out)?;
    output.line(&serde_json::to_string(&serde_json::json!({
        "id": inst.id,
        "modified": outcome.modified,
        "distance_moved": outcome.distance_moved,
        "violation_magnitude": outcome.input_magnitude,
        "locality_bound": outcome.alpha_bound * outcome.input_magnitude,
        "objective": value,
        "solution": solution_to_text(inst.kind(), &outcome.repaired, value)
            .map_err(|e| anyhow!("serializing repaired solution: {}", e))?,
    }))?)?;
    Ok(())
}

fn run_eval(instance: &Path, text: &str, out: &Option<PathBuf>) -> Result<()> {
    let inst = load_instance(instance)?;
    let engine = GrammarEngine::new(inst.kind(), inst.size())
        .map_err(|e| anyhow!("building grammar: {}", e))?;
    let sol = engine
        .parse(&text_arg(text)?)
        .map_err(|e| anyhow!("parsing solution text: {}", e))?;
    let report = check_feasibility(&inst, &sol)?;
    let value = if report.feasible {
        Some(objective(&inst, &sol)?)
    } else {
        None
    };
    let mut output = Output::new(out)?;
    output.line(&serde_json::to_string(&serde_json::json!({
        "id": inst.id,
        "feasible": report.feasible,
        "violation_magnitude": report.magnitude,
        "violations": report
            .violations
            .iter()
            .map(|v| format!("{}: {}", v.constraint, v.detail))
            .collect::<Vec<_>>(),
        "objective": value,
    }))?)?;
    Ok(())
}

fn run_oracle(paths: &[PathBuf], out: &Option<PathBuf>) -> Result<()> {
    let mut instances: Vec<Instance> = paths
        .iter()
        .map(|p| load_instance(p))
        .collect::<Result<_>>()?;
    instances.sort_by(|a, b| a.id.cmp(&b.id));
    let results: Vec<(String, Result<feasolve::oracle::OracleResult>)> = instances
        .par_iter()
        .map(|inst| (inst.id.clone(), brute_force(inst).map_err(|e| anyhow!("{}", e))))
        .collect();
    let mut output = Output::new(out)?;
    for (inst, (id, res)) in instances.iter().zip(results) {
        match res {
            Ok(r) => output.line(&serde_json::to_string(&serde_json::json!({
                "id": id,
                "optimum": r.value,
                "explored": r.explored,
                "wall_ms": r.wall.as_millis(),
                "solution": solution_to_text(inst.kind(), &r.solution, r.value)
                    .map_err(|e| anyhow!("serializing optimum: {}", e))?,
            }))?)?,
            Err(e) => output.line(&serde_json::to_string(&serde_json::json!({
                "id": id,
                "error": e.to_string(),
            }))?)?,
        }
    }
    Ok(())
}

fn run_grammar_check(
    kind: ProblemKind,
    size: usize,
    text: Option<&str>,
    dump: bool,
    out: &Option<PathBuf>,
) -> Result<ExitCode> {
    let engine =
        GrammarEngine::new(kind, size).map_err(|e| anyhow!("building grammar: {}", e))?;
    let mut output = Output::new(out)?;
    if dump {
        for line in engine.grammar.dump().lines() {
            output.line(line)?;
        }
    }
    let Some(text) = text else {
        if !dump {
            bail!("nothing to do: pass --text or --dump");
        }
        return Ok(ExitCode::SUCCESS);
    };
    let text = text_arg(text)?;
    match engine.validate_text(&text) {
        Ok(tokens) => {
            output.line(&serde_json::to_string(&serde_json::json!({
                "valid": true,
                "tokens": tokens.len(),
            }))?)?;
            Ok(ExitCode::SUCCESS)
        }
        Err(e) => {
            output.line(&serde_json::to_string(&serde_json::json!({
                "valid": false,
                "error": e.to_string(),
            }))?)?;
            Ok(ExitCode::from(2))
        }
    }
}

fn run_train_toy(
    kind: ProblemKind,
    size: usize,
    steps: usize,
    lr: Option<f64>,
    beta: f64,
    k: usize,
    seed: u64,
    out: &Option<PathBuf>,
) -> Result<()> {
    let inst = random_instance(kind, size, Some(2), seed, Distribution::default_for(kind))
        .map_err(|e| anyhow!("generating training instance: {}", e))?;
    let mut policy = ToySoftmaxPolicy::new(&inst, 10_000)
        .map_err(|e| anyhow!("enumerating the feasible set: {}", e))?;
    let trace = train_toy(&mut policy, &inst, steps, lr, k, beta, seed)
        .map_err(|e| anyhow!("training: {}", e))?;
    let mut output = Output::new(out)?;
    output.line(&serde_json::to_string(&serde_json::json!({
        "id": inst.id,
        "solutions": policy.solutions.len(),
        "learning_rate": trace.learning_rate,
    }))?)?;
    for s in &trace.steps {
        output.line(&format!("{}\t{:.6}\t{:.6e}", s.step, s.loss, s.grad_norm_sq))?;
    }
    let best = policy
        .probabilities()
        .into_iter()
        .zip(&policy.solutions)
        .max_by(|a, b| a.0.partial_cmp(&b.0).expect("finite probabilities"))
        .map(|(p, s)| (p, s.clone()))
        .expect("non-empty feasible set");
    let value = objective(&inst, &best.1)?;
    output.line(&serde_json::to_string(&serde_json::json!({
        "modal_probability": best.0,
        "modal_objective": value,
        "initial_modal_probability": trace.initial_probs.iter().cloned().fold(0.0, f64::max),
    }))?)?;
    Ok(())
}

fn run_bench(suite: &str, seed: u64, out: &Option<PathBuf>) -> Result<ExitCode> {
    let reports = if suite == "all" {
        verify::run_all(seed)
    } else {
        match verify::run_suite(suite, seed) {
            Some(r) => vec![r],
            None => bail!(
                "unknown suite '{}': expected one of {} or all",
                suite,
                verify::SUITES.join(", ")
            ),
        }
    };
    let mut output = Output::new(out)?;
    let mut ok = true;
    for report in &reports {
        for check in &report.checks {
            let status = if check.passed { "PASS" } else { "FAIL" };
            output.line(&format!(
                "[{}] criterion {:>2} ({}): {} - {}",
                status, check.criterion, report.suite, check.name, check.detail
            ))?;
            ok &= check.passed;
        }
        output.line(&format!("suite {} finished in {} ms", report.suite, report.wall_ms))?;
    }
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .context("configuring the worker pool")?;
    }
    match cli.verb {
        Verb::Gen {
            kind,
            size,
            count,
            dist,
            machines,
        } => {
            run_gen(kind.into(), size, count, dist, machines, cli.seed, &cli.out)?;
            Ok(ExitCode::SUCCESS)
        }
        Verb::Solve {
            instances,
            policy,
            mode,
            n_samples,
            temperature,
            pretty,
        } => run_solve(
            &instances,
            &policy,
            mode,
            n_samples,
            temperature,
            pretty,
            cli.seed,
            &cli.out,
        ),
        Verb::Repair { instance, text } => {
            run_repair(&instance, &text, &cli.out)?;
            Ok(ExitCode::SUCCESS)
        }
        Verb::Eval { instance, text } => {
            run_eval(&instance, &text, &cli.out)?;
            Ok(ExitCode::SUCCESS)
        }
        Verb::Oracle { instances } => {
            run_oracle(&instances, &cli.out)?;
            Ok(ExitCode::SUCCESS)
        }
        Verb::GrammarCheck {
            kind,
            size,
            text,
            dump,
        } => run_grammar_check(kind.into(), size, text.as_deref(), dump, &cli.out),
        Verb::TrainToy {
            problem,
            size,
            steps,
            lr,
            beta,
            k,
        } => {
            run_train_toy(problem.into(), size, steps, lr, beta, k, cli.seed, &cli.out)?;
            Ok(ExitCode::SUCCESS)
        }
        Verb::Bench { suite } => run_bench(&suite, cli.seed, &cli.out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {:#}", e);
            ExitCode::from(3)
        }
    }
}
