//! Engine run orchestration: instance loading, the checkpoint resume gate,
//! lock files, record keeping.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use anyhow::Context;
use metaopt::anneal::{AnnealConfig, Annealer};
use metaopt::bnb::{BnbConfig, BnbSolver};
use metaopt::store::{params_match, Checkpoint, CheckpointStore};
use metaopt::tsp::{sample_coords, InitialTour, TspProblem};
use metaopt::{CityGraph, Tour};
use serde_json::json;

use crate::instance::{load_instance, write_instance, InstanceFile};
use crate::records::{append_record, next_run_index, RunRecord};
use crate::{resolve_checkpoint_dir, BnbArgs, CliError, GenArgs, SaArgs};

pub fn cmd_gen(args: GenArgs) -> Result<(), CliError> {
    if args.n == 0 {
        return Err(CliError::Usage("--n must be at least 1".into()));
    }
    if args.sigma <= 0.0 || args.sigma.is_nan() {
        return Err(CliError::Usage(format!(
            "--sigma must be positive, got {}",
            args.sigma
        )));
    }
    if !args.mu.is_finite() {
        return Err(CliError::Usage(format!(
            "--mu must be finite, got {}",
            args.mu
        )));
    }
    let coords = sample_coords(args.n, args.seed, args.mu, args.sigma);
    write_instance(
        &args.out,
        &InstanceFile {
            n: args.n,
            coords: Some(coords),
            matrix: None,
        },
    )?;
    log::info!("wrote {}-city instance to {}", args.n, args.out.display());
    Ok(())
}

fn parse_time_limit(seconds: Option<f64>) -> Result<Option<Duration>, CliError> {
    match seconds {
        None => Ok(None),
        Some(s) if s.is_finite() && s >= 0.0 => Ok(Some(Duration::from_secs_f64(s))),
        Some(s) => Err(CliError::Usage(format!(
            "--time-limit must be a non-negative number of seconds, got {s}"
        ))),
    }
}

/// Exclusive run guard: at most one engine run per name at a time.
/// The lock file disappears when the run finishes.
struct RunLock {
    path: PathBuf,
}

impl RunLock {
    fn acquire(root: &Path, name: &str) -> Result<Self, CliError> {
        std::fs::create_dir_all(root)
            .with_context(|| format!("creating checkpoint root {}", root.display()))?;
        let path = root.join(format!("{name}.lock"));
        match std::fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
        {
            Ok(_) => Ok(Self { path }),
            Err(err) if err.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(CliError::Internal(anyhow::anyhow!(
                    "another run holds the lock {}; remove the file if it is stale",
                    path.display()
                )))
            }
            Err(err) => Err(CliError::Internal(
                anyhow::Error::new(err).context(format!("creating lock {}", path.display())),
            )),
        }
    }
}

impl Drop for RunLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}

/// Resume gate: decode the saved parameters and require exact structural
/// equality with the current instance before handing back the state blob.
fn gate_resume(ckpt: &Checkpoint, current: &CityGraph, name: &str) -> Result<Vec<u8>, CliError> {
    let saved: CityGraph =
        serde_json::from_slice(&ckpt.params_blob).context("decoding saved problem parameters")?;
    if !params_match(&saved, current) {
        return Err(CliError::ParamsMismatch(format!(
            "checkpoint for `{name}` was created with different problem parameters; \
             refusing to resume (rerun with a fresh --name or matching instance)"
        )));
    }
    Ok(ckpt.state_blob.clone())
}

fn print_record(record: &RunRecord) -> Result<(), CliError> {
    println!("{}", serde_json::to_string(record)?);
    Ok(())
}

pub fn cmd_run_sa(args: SaArgs) -> Result<(), CliError> {
    let graph = load_instance(&args.common.instance)?;
    let root = resolve_checkpoint_dir(args.common.checkpoint_dir.clone());
    let _lock = RunLock::acquire(&root, &args.common.name)?;
    let store = CheckpointStore::new(&root);
    let time_limit = parse_time_limit(args.common.time_limit)?;

    let mut annealer = match store.load_latest(&args.common.name)? {
        Some(ckpt) => {
            let state_blob = gate_resume(&ckpt, &graph, &args.common.name)?;
            Annealer::resume_from_blob(TspProblem::new(graph.clone()), &state_blob)
                .context("decoding checkpoint state as a simulated-annealing state")?
        }
        None => Annealer::new(TspProblem::new(graph.clone()), args.common.seed)?,
    };

    let config = AnnealConfig {
        n_iters: args.iters,
        reset_p: args.reset_p,
        time_limit,
    };
    config
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;

    let initial_cost = annealer.state().engine.best_cost.value();
    let started = Instant::now();
    let outcome = annealer.anneal(&config)?;
    let wall_seconds = started.elapsed().as_secs_f64();

    if args.common.persist {
        let params_blob = serde_json::to_vec(&graph)?;
        store.persist(&args.common.name, &params_blob, &annealer.state_blob())?;
    }

    let record = RunRecord {
        name: args.common.name.clone(),
        engine: "sa".into(),
        run_index: next_run_index(&root, &args.common.name)?,
        initial_cost: Some(initial_cost),
        best_cost: Some(outcome.best_cost.value()),
        wall_seconds,
        status: if outcome.hit_time_limit {
            "time-limit"
        } else {
            "completed"
        }
        .into(),
        config: json!({
            "iters": args.iters,
            "reset_p": args.reset_p,
            "time_limit": args.common.time_limit,
            "seed": args.common.seed,
        }),
    };
    append_record(&root, &record)?;
    print_record(&record)
}

fn parse_initial(value: &str) -> Result<InitialTour, CliError> {
    match value {
        "identity" => Ok(InitialTour::Identity),
        "none" => Ok(InitialTour::None),
        path => {
            let bytes =
                std::fs::read(path).with_context(|| format!("reading initial tour file {path}"))?;
            let tour: Tour = serde_json::from_slice(&bytes)
                .with_context(|| format!("parsing initial tour file {path}"))?;
            Ok(InitialTour::Fixed(tour))
        }
    }
}

pub fn cmd_run_bnb(args: BnbArgs) -> Result<(), CliError> {
    let graph = load_instance(&args.common.instance)?;
    let root = resolve_checkpoint_dir(args.common.checkpoint_dir.clone());
    let _lock = RunLock::acquire(&root, &args.common.name)?;
    let store = CheckpointStore::new(&root);
    let time_limit = parse_time_limit(args.common.time_limit)?;
    let initial = parse_initial(&args.initial)?;

    let mut solver = match store.load_latest(&args.common.name)? {
        Some(ckpt) => {
            let state_blob = gate_resume(&ckpt, &graph, &args.common.name)?;
            BnbSolver::resume_from_blob(
                TspProblem::with_initial(graph.clone(), initial),
                &state_blob,
            )
            .context("decoding checkpoint state as a branch-and-bound state")?
        }
        None => BnbSolver::new(
            TspProblem::with_initial(graph.clone(), initial),
            args.common.seed,
        )?,
    };

    let config = BnbConfig {
        iters_limit: args.iters_limit,
        time_limit,
        bnb_type: args.bnb_type.to_core(),
        strategy: args.strategy.to_core(),
        pruning: true,
    };
    config
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;

    let initial_cost = solver.state().best_cost.map(|c| c.value());
    let started = Instant::now();
    let outcome = solver.solve(&config)?;
    let wall_seconds = started.elapsed().as_secs_f64();

    if args.common.persist {
        let params_blob = serde_json::to_vec(&graph)?;
        store.persist(&args.common.name, &params_blob, &solver.state_blob())?;
    }

    let status = serde_json::to_value(outcome.status)?
        .as_str()
        .expect("status serializes as a string")
        .to_string();
    let record = RunRecord {
        name: args.common.name.clone(),
        engine: "bnb".into(),
        run_index: next_run_index(&root, &args.common.name)?,
        initial_cost,
        best_cost: outcome.best.as_ref().map(|inc| inc.cost.value()),
        wall_seconds,
        status,
        config: json!({
            "strategy": format!("{:?}", args.strategy).to_lowercase(),
            "type": format!("{:?}", args.bnb_type).to_lowercase(),
            "iters_limit": args.iters_limit,
            "time_limit": args.common.time_limit,
            "seed": args.common.seed,
            "initial": args.initial,
        }),
    };
    append_record(&root, &record)?;
    print_record(&record)
}
