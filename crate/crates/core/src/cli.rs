//! Command-line front door: `run` (leave-one-out experiments), `genbench`
//! (synthetic benchmark files), and `report` (tables / plot data from result
//! directories).
//!
//! Exit codes: 0 success, 1 data/runtime failures, 2 usage errors (including
//! unknown method tokens).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::benchmark::{
    aggregate_csv_string, aggregate_results, generate_synthetic_family, load_tabular_benchmark,
    method_csv_string, run_leave_one_out, synthetic_true_similarities, Aggregate, DriverKind,
    MethodSpec, Protocol, ProtocolMeta, ResultCell, ResultSet, SyntheticFamily, SyntheticSpec,
};
use crate::error::{Error, Result};
use crate::optimizer::{DesignerSpec, ExperimentResult};
use crate::transfer::DesignConfig;

#[derive(Debug, Parser)]
#[command(name = "spacetx", version, about = "Transfer-learning search-space design for hyperparameter tuning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a leave-one-out experiment over a tabular benchmark.
    Run(RunArgs),
    /// Generate a synthetic transfer-family benchmark file.
    Genbench(GenbenchArgs),
    /// Render tables or plot data from a result directory.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Benchmark JSON file.
    #[arg(long)]
    pub benchmark: PathBuf,
    /// Comma-separated method tokens, e.g. rs,gp,box-gp,ellipsoid-gp,ours-gp.
    #[arg(long, value_delimiter = ',', required = true)]
    pub methods: Vec<String>,
    /// Evaluations per run (N_T).
    #[arg(long, default_value_t = 50)]
    pub trial_num: usize,
    /// Repetitions per (task, method) cell.
    #[arg(long, default_value_t = 20)]
    pub rep: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Observations kept per source task (N_S).
    #[arg(long, default_value_t = 100)]
    pub n_source_obs: usize,
    /// Random initial configurations per run.
    #[arg(long, default_value_t = 3)]
    pub n_init: usize,
    #[arg(long)]
    pub alpha_min: Option<f64>,
    #[arg(long)]
    pub alpha_max: Option<f64>,
    /// Source tasks sampled per design call.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub n_candidates: Option<usize>,
    /// Worker threads for experiment cells (default: available parallelism).
    #[arg(long, env = "SPACETX_JOBS")]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    ShiftedQuadratic,
    ShiftedBranin,
}

#[derive(Debug, Clone, Args)]
pub struct GenbenchArgs {
    #[arg(long, value_enum)]
    pub family: FamilyArg,
    #[arg(long, default_value_t = 6)]
    pub n_tasks: usize,
    #[arg(long, default_value_t = 0.1)]
    pub shift_scale: f64,
    #[arg(long, default_value_t = 2000)]
    pub n_grid: usize,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Negate the surfaces of odd-indexed tasks.
    #[arg(long, default_value_t = false)]
    pub adversarial: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Table,
    Plotdata,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Directory written by `run`.
    #[arg(long)]
    pub result_dir: PathBuf,
    #[arg(long, value_enum, default_value_t = ReportFormat::Table)]
    pub format: ReportFormat,
}

/// Machine-readable record of everything a run needs to be replayed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub benchmark: String,
    pub methods: Vec<String>,
    pub trial_num: usize,
    pub rep: usize,
    pub seed: u64,
    pub n_source_obs: usize,
    pub n_init: usize,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub k: usize,
    pub n_candidates: usize,
    pub min_space_size: usize,
    pub task_ids: Vec<String>,
}

impl Manifest {
    /// Reconstructs the equivalent `run` arguments.
    pub fn to_run_args(&self, out_dir: PathBuf) -> RunArgs {
        RunArgs {
            benchmark: PathBuf::from(&self.benchmark),
            methods: self.methods.clone(),
            trial_num: self.trial_num,
            rep: self.rep,
            seed: self.seed,
            out_dir,
            n_source_obs: self.n_source_obs,
            n_init: self.n_init,
            alpha_min: Some(self.alpha_min),
            alpha_max: Some(self.alpha_max),
            k: Some(self.k),
            n_candidates: Some(self.n_candidates),
            jobs: None,
        }
    }
}

const VALID_DESIGNERS: &str = "<none>, box, ellipsoid, ours, ours-v1, ours-v2";

/// Parses a `<designer>-<driver>` token (bare `rs`/`gp` means no designer).
pub fn parse_method(token: &str, cfg: &DesignConfig) -> Result<MethodSpec> {
    let (designer_str, driver_str) = match token.rsplit_once('-') {
        None => ("", token),
        Some((d, r)) => (d, r),
    };
    let driver = match driver_str {
        "rs" => DriverKind::RandomSearch,
        "gp" => DriverKind::GpBo,
        other => {
            return Err(Error::InvalidArgument(format!(
                "method `{token}`: unknown driver `{other}` (drivers: rs, gp)"
            )))
        }
    };
    let designer = match designer_str {
        "" => DesignerSpec::None,
        "box" => DesignerSpec::Box,
        "ellipsoid" => DesignerSpec::Ellipsoid,
        "ours" => DesignerSpec::Ours(cfg.clone()),
        "ours-v1" => DesignerSpec::OursMostSimilar(cfg.clone()),
        "ours-v2" => DesignerSpec::OursSingleSample(cfg.clone()),
        other => {
            return Err(Error::InvalidArgument(format!(
                "method `{token}`: unknown designer `{other}` (designers: {VALID_DESIGNERS})"
            )))
        }
    };
    Ok(MethodSpec {
        name: token.to_string(),
        driver,
        designer,
    })
}

fn design_config_from(args: &RunArgs) -> Result<DesignConfig> {
    let defaults = DesignConfig::default();
    let cfg = DesignConfig {
        alpha_min: args.alpha_min.unwrap_or(defaults.alpha_min),
        alpha_max: args.alpha_max.unwrap_or(defaults.alpha_max),
        k: args.k.unwrap_or(defaults.k),
        n_candidates: args.n_candidates.unwrap_or(defaults.n_candidates),
        min_space_size: defaults.min_space_size,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Writes through a temp file and renames, so readers never see partial files.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn cmd_run(args: &RunArgs) -> Result<()> {
    // method tokens are checked before anything touches the file system, so a
    // bad token is always a usage error
    let cfg = design_config_from(args)?;
    let methods = args
        .methods
        .iter()
        .map(|t| parse_method(t, &cfg))
        .collect::<Result<Vec<_>>>()?;
    if methods.is_empty() {
        return Err(Error::InvalidArgument("--methods must be non-empty".into()));
    }
    if args.trial_num < 1 {
        return Err(Error::InvalidArgument("--trial-num must be >= 1".into()));
    }

    let benchmark = load_tabular_benchmark(&args.benchmark)?;
    let protocol = Protocol {
        n_source_obs: args.n_source_obs,
        trials: args.trial_num,
        n_init: args.n_init,
        reps: args.rep,
        base_seed: args.seed,
        ..Protocol::new(args.seed)
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let results = pool.install(|| run_leave_one_out(&benchmark, &methods, &protocol))?;
    let aggregate = aggregate_results(&results)?;

    std::fs::create_dir_all(&args.out_dir)?;
    for method in &results.meta.method_names {
        let path = args.out_dir.join(format!("{method}.csv"));
        write_atomic(&path, &method_csv_string(&results, method))?;
    }
    write_atomic(&args.out_dir.join("aggregate.csv"), &aggregate_csv_string(&aggregate))?;

    let manifest = Manifest {
        benchmark: args.benchmark.display().to_string(),
        methods: args.methods.clone(),
        trial_num: args.trial_num,
        rep: args.rep,
        seed: args.seed,
        n_source_obs: args.n_source_obs,
        n_init: args.n_init,
        alpha_min: cfg.alpha_min,
        alpha_max: cfg.alpha_max,
        k: cfg.k,
        n_candidates: cfg.n_candidates,
        min_space_size: cfg.min_space_size,
        task_ids: results.meta.task_ids.clone(),
    };
    write_atomic(
        &args.out_dir.join("manifest.json"),
        &format!("{}\n", serde_json::to_string_pretty(&manifest)?),
    )?;

    let final_rows: Vec<String> = aggregate
        .methods
        .iter()
        .map(|r| format!("{}={:.4}", r.method, r.mean_nce.last().copied().unwrap_or(f64::NAN)))
        .collect();
    println!(
        "wrote {} method files to {} (final mean NCE: {})",
        results.meta.method_names.len(),
        args.out_dir.display(),
        final_rows.join(", ")
    );
    Ok(())
}

pub fn cmd_genbench(args: &GenbenchArgs) -> Result<()> {
    let spec = SyntheticSpec {
        family: match args.family {
            FamilyArg::ShiftedQuadratic => SyntheticFamily::ShiftedQuadratic,
            FamilyArg::ShiftedBranin => SyntheticFamily::ShiftedBranin,
        },
        n_tasks: args.n_tasks,
        shift_scale: args.shift_scale,
        n_grid: args.n_grid,
        noise_std: args.noise,
        adversarial: args.adversarial,
    };
    spec.validate()?;
    let benchmark = generate_synthetic_family(&spec, args.seed)?;
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    write_atomic(&args.out, &benchmark.to_json_string())?;
    println!(
        "wrote {} tasks x {} rows to {}",
        benchmark.tasks.len(),
        benchmark.tasks[0].rows.len(),
        args.out.display()
    );
    println!("true-surface similarity per task pair:");
    for (a, b, s) in synthetic_true_similarities(&spec, args.seed)? {
        println!("  {a} ~ {b}: {s:.4}");
    }
    Ok(())
}

fn parse_method_csv(path: &Path) -> Result<Vec<(String, usize, usize, f64)>> {
    let text = std::fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(Error::BenchmarkFormat(format!(
                "{}: line {}: expected 6 fields",
                path.display(),
                lineno + 1
            )));
        }
        let parse_err = |what: &str| {
            Error::BenchmarkFormat(format!("{}: line {}: bad {what}", path.display(), lineno + 1))
        };
        rows.push((
            fields[0].to_string(),
            fields[1].parse().map_err(|_| parse_err("rep"))?,
            fields[2].parse().map_err(|_| parse_err("trial"))?,
            fields[4].parse().map_err(|_| parse_err("nce"))?,
        ));
    }
    Ok(rows)
}

/// Rebuilds a ResultSet (NCE only) from a result directory, verifying that
/// every cell the manifest promises is present.
fn load_result_dir(dir: &Path) -> Result<(Manifest, ResultSet)> {
    let manifest: Manifest =
        serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json"))?)?;
    let mut cells = BTreeMap::new();
    for method in &manifest.methods {
        let path = dir.join(format!("{method}.csv"));
        let mut nce_by_cell: BTreeMap<(String, usize), Vec<(usize, f64)>> = BTreeMap::new();
        for (task, rep, trial, nce) in parse_method_csv(&path)? {
            nce_by_cell.entry((task, rep)).or_default().push((trial, nce));
        }
        for ((task, rep), mut trials) in nce_by_cell {
            trials.sort_unstable_by_key(|(t, _)| *t);
            let nce: Vec<f64> = trials.iter().map(|(_, n)| *n).collect();
            let result = ExperimentResult {
                evaluations: Vec::new(),
                incumbent_trajectory: Vec::new(),
                designed_space_sizes: Vec::new(),
                seed: 0,
                region_extractions: Vec::new(),
                tracked_membership: Vec::new(),
            };
            cells.insert((task, method.clone(), rep), ResultCell { result, nce });
        }
    }
    let results = ResultSet {
        meta: ProtocolMeta {
            n_source_obs: manifest.n_source_obs,
            trials: manifest.trial_num,
            n_init: manifest.n_init,
            reps: manifest.rep,
            base_seed: manifest.seed,
            method_names: manifest.methods.clone(),
            task_ids: manifest.task_ids.clone(),
        },
        cells,
    };
    Ok((manifest, results))
}

pub fn cmd_report(args: &ReportArgs) -> Result<()> {
    let (_, results) = load_result_dir(&args.result_dir)?;
    // aggregate_results re-checks completeness and lists missing cells
    let aggregate: Aggregate = aggregate_results(&results)?;
    match args.format {
        ReportFormat::Table => {
            let mut rows: Vec<(&str, f64)> = aggregate
                .methods
                .iter()
                .map(|r| (r.method.as_str(), *r.mean_nce.last().expect("trials >= 1")))
                .collect();
            rows.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("finite NCE"));
            println!("method,final_mean_nce");
            for (method, nce) in rows {
                println!("{method},{nce}");
            }
        }
        ReportFormat::Plotdata => {
            for row in &aggregate.methods {
                let mut out = String::from("trial,mean_nce,std_nce\n");
                for t in 0..row.mean_nce.len() {
                    out.push_str(&format!("{},{},{}\n", t + 1, row.mean_nce[t], row.std_nce[t]));
                }
                let path = args.result_dir.join(format!("plotdata_{}.csv", row.method));
                write_atomic(&path, &out)?;
                println!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}

/// Maps an error to the documented exit code: 2 for usage errors, 1 otherwise.
pub fn exit_code_for(error: &Error) -> i32 {
    match error {
        Error::InvalidArgument(_) => 2,
        _ => 1,
    }
}

pub fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => cmd_run(&args),
        Command::Genbench(args) => cmd_genbench(&args),
        Command::Report(args) => cmd_report(&args),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_tokens_parse() {
        let cfg = DesignConfig::default();
        for (token, driver) in [
            ("rs", DriverKind::RandomSearch),
            ("gp", DriverKind::GpBo),
            ("box-rs", DriverKind::RandomSearch),
            ("box-gp", DriverKind::GpBo),
            ("ellipsoid-gp", DriverKind::GpBo),
            ("ours-rs", DriverKind::RandomSearch),
            ("ours-gp", DriverKind::GpBo),
            ("ours-v1-gp", DriverKind::GpBo),
            ("ours-v2-rs", DriverKind::RandomSearch),
        ] {
            let m = parse_method(token, &cfg).unwrap();
            assert_eq!(m.driver, driver, "{token}");
            assert_eq!(m.name, token);
        }
        assert!(matches!(
            parse_method("ours-gp", &cfg).unwrap().designer,
            DesignerSpec::Ours(_)
        ));
        assert!(matches!(
            parse_method("ours-v1-gp", &cfg).unwrap().designer,
            DesignerSpec::OursMostSimilar(_)
        ));
    }

    #[test]
    fn bad_tokens_name_the_problem() {
        let cfg = DesignConfig::default();
        let err = parse_method("foo-gp", &cfg).unwrap_err();
        assert!(err.to_string().contains("foo"));
        assert!(err.to_string().contains("ours-v2"), "{err}");
        assert_eq!(exit_code_for(&err), 2);

        let err = parse_method("ours-xx", &cfg).unwrap_err();
        assert!(err.to_string().contains("drivers"), "{err}");
    }

    #[test]
    fn manifest_round_trips_to_args() {
        let manifest = Manifest {
            benchmark: "b.json".into(),
            methods: vec!["rs".into(), "ours-gp".into()],
            trial_num: 10,
            rep: 2,
            seed: 7,
            n_source_obs: 50,
            n_init: 3,
            alpha_min: 0.05,
            alpha_max: 0.95,
            k: 5,
            n_candidates: 2000,
            min_space_size: 1,
            task_ids: vec!["task0".into()],
        };
        let args = manifest.to_run_args(PathBuf::from("out2"));
        assert_eq!(args.methods, manifest.methods);
        assert_eq!(args.trial_num, 10);
        assert_eq!(args.seed, 7);
        let json = serde_json::to_string(&manifest).unwrap();
        let back: Manifest = serde_json::from_str(&json).unwrap();
        assert_eq!(back, manifest);
    }
}
