//! `mt gen`, `mt run`, `mt mine` and `mt eval`.

use std::path::{Path, PathBuf};

use anyhow::anyhow;
use clap::Args;
use mt_core::campaign::{
    read_text, to_pretty_json, write_text, CampaignDir, GenerateSection, CATALOG_FILE, CONSTRAINTS_FILE,
    DATASET_FILE, MUTATION_FILE, TRIALS_FILE,
};
use mt_core::catalog::{builtin_catalog, load_catalog, match_mrs, Catalog};
use mt_core::datagen::{self, default_profiles, stratify, GenError, GenProfile, TestDatum};
use mt_core::digest::sha256_hex;
use mt_core::dsl::InputKind;
use mt_core::executor::{self, run_campaign, CampaignConfig, MutantSelection};
use mt_core::miner::{mine_all, ConstraintReport, MineError, MineOptions};
use mt_core::mutation::{check_provenance, kill_matrix, score, MutantKey, ScoreInputs};
use mt_core::sut::{load_external, Registry};

use crate::error::{CliError, CliResult};

/// Root for default campaign paths: `$MT_HOME`, else `runs`.
pub fn mt_home() -> PathBuf {
    std::env::var_os("MT_HOME").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("runs"))
}

fn default_path(file: &str) -> PathBuf {
    mt_home().join("default").join(file)
}

fn campaign_dir_of(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

fn file_name(path: &Path) -> CliResult<String> {
    path.file_name()
        .and_then(|n| n.to_str())
        .map(str::to_string)
        .ok_or_else(|| CliError::invalid(anyhow!("`{}` does not name a file", path.display())))
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn run_in_pool<R: Send>(jobs: usize, f: impl FnOnce() -> R + Send) -> CliResult<R> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build().map_err(CliError::internal)?;
    Ok(pool.install(f))
}

// ---------------------------------------------------------------- gen

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    /// Input kind: scalar-int, scalar-float, list-int or list-float.
    #[arg(long, default_value = "list-float")]
    pub kind: String,
    /// Number of data, split across the four default sign strata.
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// JSON list of generation profiles, replacing the default strata.
    #[arg(long)]
    pub profiles: Option<PathBuf>,
    /// Draw full-precision floats instead of a two-decimal grid.
    #[arg(long)]
    pub full_precision: bool,
    /// Dataset file; its directory becomes the campaign directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn cmd_gen(args: &GenArgs) -> CliResult<String> {
    let kind = InputKind::parse(&args.kind)
        .ok_or_else(|| CliError::invalid(anyhow!("unknown input kind `{}`", args.kind)))?;
    let profiles: Vec<GenProfile> = match &args.profiles {
        Some(p) => {
            let text = read_text(p)?;
            serde_json::from_str(&text).map_err(|e| CliError::invalid(anyhow!("{}: {e}", p.display())))?
        }
        None => {
            if args.n == 0 {
                return Err(CliError::invalid(GenError::InvalidProfile("n must be at least 1".into())));
            }
            default_profiles(args.n)
                .into_iter()
                .map(|p| GenProfile { decimals: if args.full_precision { None } else { p.decimals }, ..p })
                .collect()
        }
    };
    let data = stratify(kind, &profiles, args.seed).map_err(CliError::invalid)?;
    let out = args.out.clone().unwrap_or_else(|| default_path(DATASET_FILE));
    let mut dir = CampaignDir::open_or_new(campaign_dir_of(&out))?;
    let hash = write_text(&out, &datagen::to_jsonl(&data)).map_err(environment)?;
    dir.manifest.generate = Some(GenerateSection {
        kind,
        profiles,
        seed: args.seed,
        dataset_file: file_name(&out)?,
        dataset_hash: hash,
    });
    dir.save().map_err(environment)?;
    Ok(format!("wrote {} data to {}", data.len(), out.display()))
}

fn environment(e: mt_core::campaign::CampaignError) -> CliError {
    CliError::environment(e)
}

// ---------------------------------------------------------------- run

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Comma-separated SUT ids, or `all` for every SUT matching the dataset.
    #[arg(long, default_value = "all")]
    pub suts: String,
    /// `builtin` or a catalog JSON file.
    #[arg(long, default_value = "builtin")]
    pub catalog: String,
    /// Comma-separated MR ids to run (default: every matching MR).
    #[arg(long)]
    pub mrs: Option<String>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Parameter bindings sampled per (MR, datum).
    #[arg(long, default_value_t = 3)]
    pub bindings: usize,
    /// Campaign seed; defaults to the dataset's generation seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// `none`, `all`, or comma-separated mutant ids.
    #[arg(long, default_value = "none")]
    pub mutants: String,
    /// JSON manifest of external SUTs to register.
    #[arg(long)]
    pub external: Option<PathBuf>,
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Record the wall-clock start time in the manifest (breaks byte-identity).
    #[arg(long)]
    pub stamp: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_list(s: &str) -> Vec<String> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty()).map(str::to_string).collect()
}

pub fn parse_mutants(s: &str) -> MutantSelection {
    match s {
        "none" => MutantSelection::None,
        "all" => MutantSelection::All,
        other => MutantSelection::Only(parse_list(other)),
    }
}

pub fn build_registry(external: Option<&Path>) -> CliResult<Registry> {
    let mut reg = Registry::builtin();
    if let Some(path) = external {
        for ext in load_external(path).map_err(CliError::invalid)? {
            reg.add_external(ext);
        }
    }
    Ok(reg)
}

fn load_catalog_ref(r: &str) -> CliResult<Catalog> {
    if r == "builtin" {
        Ok(builtin_catalog())
    } else {
        load_catalog(r).map_err(CliError::invalid)
    }
}

fn read_dataset(path: &Path) -> CliResult<(String, Vec<TestDatum>)> {
    let text = read_text(path)?;
    let data = datagen::from_jsonl(&text).map_err(|e| CliError::invalid(anyhow!("{}: {e}", path.display())))?;
    if data.is_empty() {
        return Err(CliError::invalid(anyhow!("{} holds no data", path.display())));
    }
    Ok((text, data))
}

fn select_suts(spec: &str, reg: &Registry, catalog: &Catalog, data: &[TestDatum]) -> Vec<String> {
    if spec != "all" {
        return parse_list(spec);
    }
    reg.list_suts()
        .iter()
        .filter(|s| !match_mrs(catalog, s).is_empty() && data.iter().all(|d| d.values.conforms(s.input_kind)))
        .map(|s| s.id.clone())
        .collect()
}

pub fn cmd_run(args: &RunArgs) -> CliResult<String> {
    if args.bindings == 0 {
        return Err(CliError::invalid(anyhow!("--bindings must be at least 1")));
    }
    let data_path = args.data.clone().unwrap_or_else(|| default_path(DATASET_FILE));
    let out = args.out.clone().unwrap_or_else(|| default_path(TRIALS_FILE));
    let (data_text, data) = read_dataset(&data_path)?;
    let catalog = load_catalog_ref(&args.catalog)?;
    let registry = build_registry(args.external.as_deref())?;

    let root = campaign_dir_of(&out);
    let data_dir = CampaignDir::open_or_new(campaign_dir_of(&data_path))?;
    let mut dir = CampaignDir::open_or_new(&root)?;
    let data_file = file_name(&data_path)?;
    let same_dir = std::fs::canonicalize(campaign_dir_of(&data_path)).ok() == std::fs::canonicalize(&root).ok();
    if !same_dir {
        // Keep the campaign self-contained: copy the dataset in.
        write_text(&root.join(&data_file), &data_text).map_err(environment)?;
    }
    let dataset_hash = sha256_hex(data_text.as_bytes());
    let generate =
        data_dir.manifest.generate.clone().filter(|g| g.dataset_file == data_file && g.dataset_hash == dataset_hash);
    let seed = args.seed.or(generate.as_ref().map(|g| g.seed)).unwrap_or(0);

    let config = CampaignConfig {
        suts: select_suts(&args.suts, &registry, &catalog, &data),
        mutants: parse_mutants(&args.mutants),
        mrs: args.mrs.as_deref().map(parse_list),
        catalog: args.catalog.clone(),
        dataset: data_file.clone(),
        params_per_datum: args.bindings,
        seed,
    };
    let started_at = args.stamp.then(now_rfc3339);
    let jobs = args.jobs.unwrap_or_else(default_jobs);
    let records = run_campaign(&config, &registry, &catalog, &data, jobs).map_err(CliError::invalid)?;

    let trials_hash = write_text(&out, &executor::trials_to_jsonl(&records)).map_err(environment)?;
    let catalog_text = catalog.to_json();
    write_text(&root.join(CATALOG_FILE), &catalog_text).map_err(environment)?;
    let m = &mut dir.manifest;
    m.generate = generate.or(m.generate.take().filter(|g| g.dataset_hash == dataset_hash));
    m.config_hash = Some(config.hash());
    m.config = Some(config);
    m.seed = Some(seed);
    m.catalog_file = Some(CATALOG_FILE.into());
    m.catalog_hash = Some(catalog.hash());
    m.dataset_hash = Some(dataset_hash);
    m.started_at = started_at;
    m.trial_count = Some(records.len());
    m.trials_file = Some(file_name(&out)?);
    m.trials_hash = Some(trials_hash);
    m.mine_options = None;
    m.constraints_file = None;
    m.constraints_hash = None;
    m.mutation_file = None;
    m.mutation_hash = None;
    dir.save().map_err(environment)?;
    Ok(format!("wrote {} trial records to {}", records.len(), out.display()))
}

fn now_rfc3339() -> String {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    format!("unix:{secs}")
}

// ---------------------------------------------------------------- mine

#[derive(Debug, Clone, Args)]
pub struct MineArgs {
    #[arg(long)]
    pub trials: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    pub min_support: usize,
    /// Minimum precision of an accepted constraint.
    #[arg(long, default_value_t = 1.0)]
    pub precision: f64,
    /// Ranked candidates kept per (SUT, MR) while searching.
    #[arg(long, default_value_t = 100)]
    pub max_results: usize,
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn cmd_mine(args: &MineArgs) -> CliResult<String> {
    if !(0.0..=1.0).contains(&args.precision) || args.min_support == 0 || args.max_results == 0 {
        return Err(CliError::invalid(anyhow!(
            "--precision must lie in [0, 1]; --min-support and --max-results must be positive"
        )));
    }
    let trials_path = args.trials.clone().unwrap_or_else(|| default_path(TRIALS_FILE));
    let out = args.out.clone().unwrap_or_else(|| default_path(CONSTRAINTS_FILE));
    let src = CampaignDir::open(campaign_dir_of(&trials_path))
        .map_err(|e| CliError::from(e).context("trial log has no readable campaign manifest"))?;
    if src.manifest.trials_file.as_deref() != Some(file_name(&trials_path)?.as_str()) {
        return Err(CliError::invalid(anyhow!("{} is not the trial log of its campaign", trials_path.display())));
    }
    let trials = src.trials()?;
    let options = MineOptions { min_support: args.min_support, min_precision: args.precision, max_results: args.max_results };
    let jobs = args.jobs.unwrap_or_else(default_jobs);
    let verdicts = run_in_pool(jobs, || mine_all(&trials, &options))?.map_err(|e| match e {
        MineError::MutantTrials(_) => CliError::invalid(e),
        other => CliError::internal(other),
    })?;
    let m = &src.manifest;
    let report = ConstraintReport {
        catalog_hash: m.catalog_hash.clone().unwrap_or_default(),
        dataset_hash: m.dataset_hash.clone().unwrap_or_default(),
        trials_hash: m.trials_hash.clone().unwrap_or_default(),
        options: options.clone(),
        verdicts,
    };
    let hash = write_text(&out, &to_pretty_json(&report)).map_err(environment)?;
    let mut dir = if campaign_dir_of(&out) == src.root { src } else { CampaignDir::open_or_new(campaign_dir_of(&out))? };
    dir.manifest.mine_options = Some(options);
    dir.manifest.constraints_file = Some(file_name(&out)?);
    dir.manifest.constraints_hash = Some(hash);
    dir.manifest.mutation_file = None;
    dir.manifest.mutation_hash = None;
    dir.save().map_err(environment)?;
    Ok(format!("wrote {} verdicts to {}", report.verdicts.len(), out.display()))
}

// ---------------------------------------------------------------- eval

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub constraints: Option<PathBuf>,
    /// `all`, `none`, or comma-separated mutant ids.
    #[arg(long, default_value = "all")]
    pub mutants: String,
    /// Evaluation seed; defaults to the campaign seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also measure false positives on a fresh dataset generated with this seed.
    #[arg(long)]
    pub holdout_seed: Option<u64>,
    /// Evaluate against this catalog instead of the campaign's.
    #[arg(long)]
    pub catalog: Option<String>,
    /// Evaluate against this dataset instead of the campaign's.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub external: Option<PathBuf>,
    /// Also write the evaluation trial log here.
    #[arg(long)]
    pub trials_out: Option<PathBuf>,
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn cmd_eval(args: &EvalArgs) -> CliResult<String> {
    let cpath = args.constraints.clone().unwrap_or_else(|| default_path(CONSTRAINTS_FILE));
    let out = args.out.clone().unwrap_or_else(|| default_path(MUTATION_FILE));
    let src = CampaignDir::open(campaign_dir_of(&cpath))
        .map_err(|e| CliError::from(e).context("constraint report has no readable campaign manifest"))?;
    let m = src.manifest.clone();
    let ctext = if m.constraints_file.as_deref() == Some(file_name(&cpath)?.as_str()) {
        src.read_verified(&m.constraints_file, &m.constraints_hash, "constraint report")?
    } else {
        read_text(&cpath)?
    };
    let report: ConstraintReport =
        serde_json::from_str(&ctext).map_err(|e| CliError::invalid(anyhow!("{}: {e}", cpath.display())))?;
    let constraints_hash = sha256_hex(ctext.as_bytes());

    let catalog = match &args.catalog {
        Some(r) => load_catalog_ref(r)?,
        None => src.catalog()?,
    };
    let config = m.config.clone().ok_or_else(|| CliError::invalid(anyhow!("campaign has not been run")))?;
    let (dataset_hash, data) = match &args.data {
        Some(p) => {
            let (text, data) = read_dataset(p)?;
            (sha256_hex(text.as_bytes()), data)
        }
        None => {
            let text = src.read_verified(&Some(config.dataset.clone()), &m.dataset_hash, "dataset")?;
            let data = datagen::from_jsonl(&text).map_err(|e| CliError::invalid(anyhow!("{}: {e}", config.dataset)))?;
            (sha256_hex(text.as_bytes()), data)
        }
    };
    check_provenance(&report, &catalog.hash(), &dataset_hash).map_err(CliError::provenance)?;

    let registry = build_registry(args.external.as_deref())?;
    let seed = args.seed.unwrap_or(config.seed);
    let eval_config = CampaignConfig { mutants: parse_mutants(&args.mutants), seed, ..config.clone() };
    let jobs = args.jobs.unwrap_or_else(default_jobs);
    let trials = run_campaign(&eval_config, &registry, &catalog, &data, jobs).map_err(CliError::invalid)?;
    if let Some(p) = &args.trials_out {
        write_text(p, &executor::trials_to_jsonl(&trials)).map_err(environment)?;
    }

    let held_out_trials = match args.holdout_seed {
        None => None,
        Some(hs) => {
            let g = m.generate.as_ref().ok_or_else(|| {
                CliError::invalid(anyhow!("--holdout-seed needs the campaign's generation profiles"))
            })?;
            let fresh = stratify(g.kind, &g.profiles, hs).map_err(CliError::invalid)?;
            let cfg = CampaignConfig { mutants: MutantSelection::None, seed: hs, ..config.clone() };
            Some((hs, run_campaign(&cfg, &registry, &catalog, &fresh, jobs).map_err(CliError::invalid)?))
        }
    };

    let expected: Vec<MutantKey> = eval_config
        .suts
        .iter()
        .filter_map(|id| registry.get(id))
        .filter(|s| !match_mrs(&catalog, s).is_empty())
        .flat_map(|s| {
            s.mutants
                .iter()
                .filter(|mu| match &eval_config.mutants {
                    MutantSelection::None => false,
                    MutantSelection::All => true,
                    MutantSelection::Only(ids) => ids.contains(&mu.id),
                })
                .map(|mu| MutantKey { sut: s.id.clone(), mutant: mu.id.clone() })
        })
        .collect();
    let matrix = kill_matrix(&trials, &report, &expected);
    let inputs = ScoreInputs {
        catalog_hash: &catalog.hash(),
        dataset_hash: &dataset_hash,
        constraints_hash: &constraints_hash,
        seed,
        trials: &trials,
        held_out: held_out_trials.as_ref().map(|(s, t)| (*s, t.as_slice())),
    };
    let result = score(&matrix, &report, &inputs);
    let hash = write_text(&out, &to_pretty_json(&result)).map_err(environment)?;
    let mut dir = if campaign_dir_of(&out) == src.root { src } else { CampaignDir::open_or_new(campaign_dir_of(&out))? };
    dir.manifest.mutation_file = Some(file_name(&out)?);
    dir.manifest.mutation_hash = Some(hash);
    dir.save().map_err(environment)?;
    let fmt = |s: Option<f64>| s.map_or("n/a".to_string(), |v| format!("{v:.3}"));
    Ok(format!(
        "{} mutants; score unconstrained {} constrained {}; wrote {}",
        result.mutant_count,
        fmt(result.scores[&mt_core::mutation::Mode::Unconstrained].score),
        fmt(result.scores[&mt_core::mutation::Mode::Constrained].score),
        out.display()
    ))
}
