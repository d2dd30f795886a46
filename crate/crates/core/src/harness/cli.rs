//! `tbrl` command line.
//!
//! Settings are resolved in order: built-in defaults, `--config <file>`,
//! `--key=value` overrides for any config key, then the named global flags.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use super::{
    create_run_dir, load_policy, run_experiment, train_cell, Cell, EpisodeSetup, Evaluator, ExperimentReport,
    HarnessError, PolicySet, RunConfig, EXPERIMENT_IDS,
};
use crate::env::{episode_csv_row, ActionMode, EPISODE_HEADER, Task};
use crate::pretrain::{collect_pretrain_data, pretrain, Dataset};
use crate::robots::{make_robot, ReferenceMotion, RobotVariant};

#[derive(Debug, Parser)]
#[command(name = "tbrl", version, about = "Train and compare position- and torque-based biped locomotion policies")]
#[command(after_help = "Any config key can be set as --key=value (see --dump-config).")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Args)]
struct Global {
    /// TOML file of config keys.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_name = "DIR")]
    out_dir: Option<PathBuf>,
    /// position or torque
    #[arg(long, global = true)]
    mode: Option<ActionMode>,
    /// squat or walk
    #[arg(long, global = true)]
    task: Option<Task>,
    /// A or B
    #[arg(long, global = true)]
    robot: Option<RobotVariant>,
    /// Policy frequency, Hz.
    #[arg(long, global = true)]
    freq: Option<f64>,
    /// Print every config key with its effective value and exit.
    #[arg(long, global = true)]
    dump_config: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train one policy with PPO.
    Train {
        /// Initial policy checkpoint (e.g. from `pretrain`).
        #[arg(long)]
        init: Option<PathBuf>,
    },
    /// Collect gravity-compensation training data.
    CollectPretrain {
        /// Dataset file; defaults to a new run directory.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Fit a torque policy to gravity-compensation data.
    Pretrain {
        /// Dataset from `collect-pretrain`; collected on the fly if absent.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Checkpoint file; defaults to a new run directory.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Evaluate a policy deterministically for `eval_episodes` episodes.
    Eval {
        #[arg(long)]
        policy: PathBuf,
        /// Also write the inner-loop trace of the first episode.
        #[arg(long)]
        trace: bool,
    },
    /// Run an experiment recipe.
    Exp {
        /// Experiment id (1-7, freq, pretrain).
        id: String,
        /// Single policy for the configured mode.
        #[arg(long)]
        policy: Option<PathBuf>,
        /// Trained position-mode walking policies, one per seed.
        #[arg(long)]
        position_policy: Vec<PathBuf>,
        /// Trained torque-mode walking policies, one per seed.
        #[arg(long)]
        torque_policy: Vec<PathBuf>,
    },
    /// Write trajectory CSVs for external plotting.
    Plotdata {
        /// Roll out this policy; without it, only reference motions are written.
        #[arg(long)]
        policy: Option<PathBuf>,
        /// Number of samples per reference cycle.
        #[arg(long, default_value_t = 200)]
        points: usize,
    },
}

/// Flags handled by clap; everything else starting with `--` that names a
/// config key is treated as an override.
const CLAP_FLAGS: &[&str] = &[
    "config", "seed", "out-dir", "mode", "task", "robot", "freq", "dump-config", "help", "version", "init", "output",
    "data", "policy", "trace", "position-policy", "torque-policy", "points",
];

/// Splits `--key=value` / `--key value` config overrides out of `args`.
fn split_overrides(args: &[String]) -> Result<(Vec<String>, Vec<(String, String)>), HarnessError> {
    let mut rest = Vec::new();
    let mut overrides = Vec::new();
    let mut it = args.iter().peekable();
    while let Some(a) = it.next() {
        let Some(body) = a.strip_prefix("--") else {
            rest.push(a.clone());
            continue;
        };
        let (name, inline) = match body.split_once('=') {
            Some((n, v)) => (n, Some(v.to_string())),
            None => (body, None),
        };
        if body.is_empty() || CLAP_FLAGS.contains(&name) || !RunConfig::is_key(name) {
            rest.push(a.clone());
            continue;
        }
        let value = match inline {
            Some(v) => v,
            None => it.next().cloned().ok_or_else(|| HarnessError::Usage(format!("--{name} needs a value")))?,
        };
        overrides.push((name.to_string(), value));
    }
    Ok((rest, overrides))
}

fn resolve(global: &Global, overrides: &[(String, String)]) -> Result<RunConfig, HarnessError> {
    let mut cfg = match &global.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    for (k, v) in overrides {
        cfg.set(k, v)?;
    }
    if let Some(s) = global.seed {
        cfg.seed = s;
    }
    if let Some(d) = &global.out_dir {
        cfg.out_dir = d.clone();
    }
    if let Some(m) = global.mode {
        cfg.mode = m;
    }
    if let Some(t) = global.task {
        cfg.task = t;
    }
    if let Some(r) = global.robot {
        cfg.robot = r;
    }
    if let Some(f) = global.freq {
        if !(f > 0.0) {
            return Err(HarnessError::Usage(format!("--freq must be positive, got {f}")));
        }
        cfg.freq = f;
    }
    Ok(cfg)
}

/// Runs the command line `args` (without the program name) and returns the
/// process exit status.
pub fn run(args: &[String]) -> i32 {
    let (rest, overrides) = match split_overrides(args) {
        Ok(v) => v,
        Err(e) => return report_error(&e),
    };
    let cli = match Cli::try_parse_from(std::iter::once("tbrl".to_string()).chain(rest)) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli, &overrides) {
        Ok(()) => 0,
        Err(e) => report_error(&e),
    }
}

fn report_error(e: &HarnessError) -> i32 {
    eprintln!("error: {e}");
    if let HarnessError::Usage(_) = e {
        eprintln!("run `tbrl --help` for usage");
    }
    e.exit_code()
}

fn dispatch(cli: Cli, overrides: &[(String, String)]) -> Result<(), HarnessError> {
    let cfg = resolve(&cli.global, overrides)?;
    if cli.global.dump_config {
        print!("{}", cfg.dump_documented());
        return Ok(());
    }
    let Some(command) = cli.command else {
        return Err(HarnessError::Usage("no subcommand given".into()));
    };
    match command {
        Command::Train { init } => train(&cfg, init),
        Command::CollectPretrain { output } => collect(&cfg, output),
        Command::Pretrain { data, output } => fit(&cfg, data, output),
        Command::Eval { policy, trace } => eval(&cfg, &policy, trace),
        Command::Exp { id, policy, position_policy, torque_policy } => {
            let set = PolicySet { position: position_policy, torque: torque_policy, single: policy };
            let report = run_experiment(&id, &cfg, &set)?;
            println!("experiment {id} ({}) written to {}", report.name, report.dir().display());
            println!("{}", serde_json::to_string_pretty(&report.summary).unwrap_or_default());
            Ok(())
        }
        Command::Plotdata { policy, points } => plotdata(&cfg, policy, points),
    }
}

fn train(cfg: &RunConfig, init: Option<PathBuf>) -> Result<(), HarnessError> {
    let dir = create_run_dir(&cfg.out_dir, &format!("train-{}-{}", cfg.mode, cfg.task))?;
    let mut cell = Cell::new("run", cfg.clone());
    cell.init = init;
    let result = train_cell(&cell, &dir);
    let mut report = ExperimentReport::new("train", "single training run", cfg, &dir);
    report.seeds = vec![cfg.seed];
    report.set("final_reward", result.final_reward);
    report.set("final_step_reward", result.final_step_reward);
    let error = result.error.clone();
    report.add_cells(vec![result]);
    report.write()?;
    println!("run directory {}", dir.display());
    match error {
        Some(e) => Err(HarnessError::Run(format!("training failed: {e}"))),
        None => Ok(()),
    }
}

fn torque_run(cfg: &RunConfig) -> RunConfig {
    RunConfig { mode: ActionMode::Torque, ..cfg.clone() }
}

fn collect(cfg: &RunConfig, output: Option<PathBuf>) -> Result<(), HarnessError> {
    let run = torque_run(cfg);
    let path = match output {
        Some(p) => p,
        None => create_run_dir(&cfg.out_dir, "collect")?.join("pretrain_data.bin"),
    };
    let data = collect_pretrain_data(&run.collect(), &run.env())?;
    data.save(&path)?;
    let (single, double) = data.support_fractions();
    println!(
        "{} rows ({:.0}% single support, {:.0}% double) written to {}",
        data.len(),
        100.0 * single,
        100.0 * double,
        path.display()
    );
    Ok(())
}

fn fit(cfg: &RunConfig, data: Option<PathBuf>, output: Option<PathBuf>) -> Result<(), HarnessError> {
    let run = torque_run(cfg);
    let env = run.env();
    let dataset = match &data {
        Some(p) => Dataset::load(p)?,
        None => collect_pretrain_data(&run.collect(), &env)?,
    };
    let dir = create_run_dir(&cfg.out_dir, "pretrain")?;
    let (ckpt, fit) = pretrain(&env, &dataset, &run.regress())?;
    let path = output.unwrap_or_else(|| dir.join("pretrained.bin"));
    ckpt.save(&path).map_err(|e| HarnessError::Run(format!("{}: {e}", path.display())))?;

    let mut report = ExperimentReport::new("pretrain", "gravity-compensation fit", cfg, &dir);
    report.seeds = vec![cfg.seed];
    report.set("rows", dataset.len());
    report.set("steps", fit.steps);
    report.set("stop", format!("{:?}", fit.stop));
    report.set("relative_torque_error", fit.relative_torque_error());
    report.write_csv("fit.csv", &fit.evals)?;
    report.add_artifact(&path);
    report.write()?;
    println!(
        "{} steps, held-out torque error {:.2}% of mean squared target; checkpoint {}",
        fit.steps,
        100.0 * fit.relative_torque_error(),
        path.display()
    );
    Ok(())
}

fn eval(cfg: &RunConfig, policy: &std::path::Path, trace: bool) -> Result<(), HarnessError> {
    let net = load_policy(policy)?;
    let dir = create_run_dir(&cfg.out_dir, &format!("eval-{}-{}", cfg.mode, cfg.task))?;
    let mut ev = Evaluator::new(cfg.env(), None)?;
    let mut records = Vec::new();
    for k in 0..cfg.eval_episodes.max(1) {
        let setup = EpisodeSetup { record_trace: trace && k == 0, ..EpisodeSetup::default() };
        let r = ev.run(&net, cfg.seed + k as u64, &setup)?;
        if setup.record_trace {
            let f = std::fs::File::create(dir.join("trace.csv"))?;
            crate::dynamics::TraceRow::write_csv(&r.trace, std::io::BufWriter::new(f))?;
        }
        records.push(r.record);
    }
    let mut out = std::io::BufWriter::new(std::fs::File::create(dir.join("episodes.csv"))?);
    writeln!(out, "{EPISODE_HEADER}")?;
    for r in &records {
        writeln!(out, "{}", episode_csv_row(r))?;
    }
    out.flush()?;
    let returns: Vec<f64> = records.iter().map(|r| r.ret).collect();
    let falls = records.iter().filter(|r| r.termination.is_failure()).count();
    println!(
        "{} episodes: mean reward {:.2}, {falls} falls; results in {}",
        records.len(),
        super::stats::mean(&returns),
        dir.display()
    );
    Ok(())
}

fn plotdata(cfg: &RunConfig, policy: Option<PathBuf>, points: usize) -> Result<(), HarnessError> {
    let dir = create_run_dir(&cfg.out_dir, "plotdata")?;
    let model = make_robot(cfg.robot);
    for (name, motion) in [("squat", ReferenceMotion::squat(&model)), ("walk", ReferenceMotion::walk(&model))] {
        std::fs::write(dir.join(format!("reference_{name}.csv")), motion.to_csv(points.max(2)))?;
    }
    if let Some(p) = policy {
        let net = load_policy(&p)?;
        let mut ev = Evaluator::new(cfg.env(), None)?;
        let r = ev.run(&net, cfg.seed, &EpisodeSetup { record_trace: true, ..EpisodeSetup::default() })?;
        let f = std::fs::File::create(dir.join("trace.csv"))?;
        crate::dynamics::TraceRow::write_csv(&r.trace, std::io::BufWriter::new(f))?;
        let mut out = std::io::BufWriter::new(std::fs::File::create(dir.join("steps.csv"))?);
        writeln!(out, "step,base_x,phase,reward,command0,command1,command2,command3,command4,command5")?;
        for (k, info) in r.infos.iter().enumerate() {
            let c: Vec<String> = info.command_torque.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{k},{},{},{},{}", r.base_x[k], info.phase, info.reward.total, c.join(","))?;
        }
        out.flush()?;
    }
    println!("plot data written to {}", dir.display());
    Ok(())
}

/// One line per experiment id, for help text and the README.
pub fn experiment_list() -> String {
    EXPERIMENT_IDS.iter().map(|(id, d)| format!("{id:>9}  {d}\n")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn overrides_are_split_out() {
        let (rest, ov) = split_overrides(&args("train --mode torque --lr-start=1e-4 --n_envs 4 --seed 3")).unwrap();
        assert_eq!(rest, args("train --mode torque --seed 3"));
        assert_eq!(ov, vec![("lr-start".to_string(), "1e-4".to_string()), ("n_envs".to_string(), "4".to_string())]);
    }

    #[test]
    fn flags_take_precedence_over_overrides() {
        let cli = Cli::try_parse_from(args("tbrl --seed 5 train")).unwrap();
        let cfg = resolve(&cli.global, &[("seed".into(), "9".into()), ("batch_size".into(), "512".into())]).unwrap();
        assert_eq!(cfg.seed, 5);
        assert_eq!(cfg.batch_size, 512);
    }

    #[test]
    fn unknown_flag_and_subcommand_exit_2() {
        assert_eq!(run(&args("train --no-such-flag")), 2);
        assert_eq!(run(&args("frobnicate")), 2);
        assert_eq!(run(&args("")), 2);
    }

    #[test]
    fn missing_config_is_usage_error() {
        let cli = Cli::try_parse_from(args("tbrl --config /nonexistent/run.toml train")).unwrap();
        let err = resolve(&cli.global, &[]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("/nonexistent/run.toml"));
    }
}
