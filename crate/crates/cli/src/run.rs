use std::io::{IsTerminal, Write};
use std::path::PathBuf;

use clap::Args;

use iterprior::agents::{Agent, LlmAgent, LlmAgentSpec, LlmClient, SimulatedAgent};
use iterprior::chains::{detect_convergence, persist, run_ensemble, EnsembleConfig};
use iterprior::Error;

use crate::config::{now, AgentConfig, AgentKind, Artifacts, Manifest, RunFile, SimPrior, CONVERGENCE, RECORDS};
use crate::tasks::registry;
use crate::{CliError, CliResult};

#[derive(Args, Debug)]
pub struct RunArgs {
    /// Task name, builtin or from --task-file.
    #[arg(long)]
    task: Option<String>,
    /// TOML file with extra task definitions.
    #[arg(long)]
    task_file: Option<PathBuf>,
    /// TOML file with run settings; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    agent: Option<AgentKind>,
    /// Number of chains [default: 100]
    #[arg(long)]
    chains: Option<usize>,
    /// Iterations per chain [default: 12]
    #[arg(long)]
    iters: Option<u32>,
    /// Base seed [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory [default: runs/<timestamp>-seed<seed>]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads [default: available cores]
    #[arg(long)]
    parallel: Option<usize>,
    /// Simulated agent's prior: uniform, beta:A,B or sparse-strong[:ALPHA] [default: uniform]
    #[arg(long)]
    sim_prior: Option<SimPrior>,
    /// Significance level of the convergence tests [default: 0.05]
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    model: Option<String>,
    /// Chat completions URL.
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    temperature: Option<f64>,
    /// Environment variable holding the API key [default: OPENAI_API_KEY]
    #[arg(long)]
    api_key_env: Option<String>,
    /// Simultaneous requests to the endpoint [default: 8]
    #[arg(long)]
    max_concurrent: Option<usize>,
    /// Append every request and response to llm_exchanges.jsonl in the output directory.
    #[arg(long)]
    log_exchanges: bool,
}

struct Plan {
    task_name: String,
    agent: AgentConfig,
    ensemble: EnsembleConfig,
    alpha: f64,
    out: PathBuf,
    log_exchanges: bool,
}

fn plan(args: RunArgs, file: RunFile) -> CliResult<Plan> {
    let task_name = args
        .task
        .or(file.task)
        .ok_or_else(|| CliError::usage("no task given; use --task or set `task` in the config file"))?;
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let ensemble = EnsembleConfig {
        n_chains: args.chains.or(file.chains).unwrap_or(100),
        n_iterations: args.iters.or(file.iters).unwrap_or(12),
        base_seed: seed,
        parallel: args.parallel.or(file.parallel),
    };
    ensemble.validate().map_err(CliError::usage)?;
    let alpha = args.alpha.or(file.alpha).unwrap_or(0.05);
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(CliError::usage(format!("--alpha must lie in (0, 1), got {alpha}")));
    }
    let agent = match args.agent.or(file.agent).unwrap_or(AgentKind::Sim) {
        AgentKind::Sim => AgentConfig::Sim {
            prior: args.sim_prior.or(file.sim_prior).unwrap_or(SimPrior::Uniform),
        },
        AgentKind::Llm => {
            let mut spec = file.llm.unwrap_or_default();
            if let Some(m) = args.model {
                spec.model = m;
            }
            if let Some(e) = args.endpoint {
                spec.endpoint = e;
            }
            if let Some(t) = args.temperature {
                spec.temperature = t;
            }
            if let Some(k) = args.api_key_env {
                spec.api_key_env = k;
            }
            if let Some(c) = args.max_concurrent {
                spec.max_concurrent = c;
            }
            AgentConfig::Llm(spec)
        }
    };
    let out = match args.out.or(file.out) {
        Some(p) => p,
        None => PathBuf::from("runs").join(format!("{}-seed{seed}", chrono::Utc::now().format("%Y%m%dT%H%M%SZ"))),
    };
    Ok(Plan {
        task_name,
        agent,
        ensemble,
        alpha,
        out,
        log_exchanges: args.log_exchanges,
    })
}

fn llm_agent(spec: &LlmAgentSpec) -> CliResult<LlmAgent> {
    match LlmClient::from_env(spec.clone()) {
        Ok(c) => Ok(LlmAgent::new(c)),
        Err(e @ Error::MissingCredential(_)) => Err(CliError::usage(format!("{e}; no requests were sent"))),
        Err(e @ Error::Config(_)) => Err(CliError::usage(e)),
        Err(e) => Err(e.into()),
    }
}

pub fn run(args: RunArgs) -> CliResult<()> {
    let file = match &args.config {
        Some(p) => RunFile::load(p)?,
        None => RunFile::default(),
    };
    let task_file = args.task_file.clone().or_else(|| file.task_file.clone());
    let mut plan = plan(args, file)?;
    let reg = registry(task_file.as_deref())?;
    let task = reg.lookup(&plan.task_name).map_err(CliError::usage)?.clone();

    let mut exchanges = None;
    if let AgentConfig::Llm(spec) = &mut plan.agent {
        if plan.log_exchanges {
            spec.log_dir = Some(plan.out.clone());
            exchanges = Some("llm_exchanges.jsonl".to_string());
        }
    }
    let agent: Box<dyn Agent> = match &plan.agent {
        AgentConfig::Sim { prior } => {
            Box::new(SimulatedAgent::new(&task, prior.build(&task)?).map_err(CliError::usage)?)
        }
        AgentConfig::Llm(spec) => Box::new(llm_agent(spec)?),
    };

    std::fs::create_dir_all(&plan.out)?;
    let mut manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        task: task.clone(),
        agent: plan.agent.clone(),
        ensemble: plan.ensemble,
        convergence_alpha: plan.alpha,
        started_at: now(),
        finished_at: None,
        artifacts: Artifacts {
            records: RECORDS.into(),
            convergence: CONVERGENCE.into(),
            exchanges,
        },
        chains_failed: None,
        error: None,
    };
    manifest.write(&plan.out)?;

    let label = task.name.clone();
    let live = std::io::stderr().is_terminal();
    let progress = move |done: usize, total: usize| {
        let mut err = std::io::stderr().lock();
        if live {
            let _ = write!(err, "\r{label}: {done}/{total} chains");
            if done == total {
                let _ = writeln!(err);
            }
        } else if done == total {
            let _ = writeln!(err, "{label}: {done}/{total} chains");
        }
        let _ = err.flush();
    };
    let result = run_ensemble(&task, agent.as_ref(), &plan.ensemble, Some(&progress));
    let set = match result {
        Ok(set) => set,
        Err(e) => {
            manifest.finished_at = Some(now());
            manifest.chains_failed = Some(plan.ensemble.n_chains);
            manifest.error = Some(e.to_string());
            manifest.write(&plan.out)?;
            return Err(CliError::failed(format!("run failed: {e}")));
        }
    };
    persist(&set, plan.out.join(RECORDS))?;

    let convergence = match detect_convergence(&set, plan.alpha) {
        Ok(report) => {
            match report.first_converged_iteration {
                Some(t) => println!("converged at iteration {t} (alpha {})", plan.alpha),
                None => println!("no convergence within {} iterations", report.final_iteration),
            }
            if let Some(w) = &report.warning {
                eprintln!("warning: {w}");
            }
            serde_json::to_value(&report).map_err(CliError::failed)?
        }
        Err(e) => {
            eprintln!("warning: convergence not assessed: {e}");
            serde_json::json!({ "error": e.to_string() })
        }
    };
    let text = serde_json::to_string_pretty(&convergence).map_err(CliError::failed)?;
    std::fs::write(plan.out.join(CONVERGENCE), text + "\n")?;

    manifest.finished_at = Some(now());
    manifest.chains_failed = Some(set.failed_count());
    manifest.write(&plan.out)?;
    if set.failed_count() > 0 {
        eprintln!("{} of {} chains failed; see {RECORDS}", set.failed_count(), set.len());
    }
    println!("wrote {}", plan.out.display());
    Ok(())
}
