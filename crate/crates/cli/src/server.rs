//! HTTP API for the explorer: read-only views of campaigns plus constrained
//! re-runs, which create child campaigns under `<parent>/children/`.

use std::collections::{BTreeSet, HashMap};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use anyhow::anyhow;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use clap::Args;
use mt_core::campaign::{
    discover, to_pretty_json, write_text, CampaignDir, CampaignError, Manifest, ParentLink, CATALOG_FILE,
    DATASET_FILE, TRIALS_FILE,
};
use mt_core::catalog::Catalog;
use mt_core::datagen::{default_profiles, generate_filtered, to_jsonl};
use mt_core::digest::sha256_hex;
use mt_core::executor::{run_campaign, trials_to_jsonl, CampaignConfig, MutantSelection, TrialRecord, Verdict};
use mt_core::miner::{FeatureValue, FeatureVector, FLAG_FEATURES, NUMERIC_FEATURES};
use mt_core::miner::{apply_constraint, constraint_metrics, Atom, AtomOp, Metrics};
use mt_core::miner::Evidence;
use mt_core::sut::Registry;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::commands::{build_registry, mt_home};
use crate::error::{CliError, CliResult};

/// Largest page the trials endpoint serves.
pub const MAX_PAGE: usize = 1000;
pub const DEFAULT_PAGE: usize = 100;
/// Draw budget for rejection sampling in re-runs.
pub const MAX_DRAWS: u64 = 1_000_000;
/// Upper bound on data requested by one re-run.
pub const MAX_RERUN_DATA: usize = 10_000;
const SEARCH_DEPTH: usize = 8;

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    /// Directory searched for campaigns.
    #[arg(long, env = "MT_HOME")]
    pub root: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    /// Catalog served at /api/catalog: `builtin` or a catalog JSON file.
    #[arg(long, default_value = "builtin")]
    pub catalog: String,
    /// JSON manifest of external SUTs available to re-runs.
    #[arg(long)]
    pub external: Option<PathBuf>,
}

pub struct AppState {
    root: PathBuf,
    catalog: Catalog,
    registry: Registry,
    locks: Mutex<HashMap<PathBuf, Arc<Mutex<()>>>>,
    trials: Mutex<HashMap<String, Arc<Vec<TrialRecord>>>>,
    tmp_counter: AtomicU64,
}

impl AppState {
    pub fn new(root: PathBuf, catalog: Catalog, registry: Registry) -> Arc<Self> {
        Arc::new(AppState {
            root,
            catalog,
            registry,
            locks: Mutex::default(),
            trials: Mutex::default(),
            tmp_counter: AtomicU64::new(0),
        })
    }

    fn find(&self, id: &str) -> Result<CampaignDir, ApiError> {
        for path in self.campaign_paths() {
            if let Ok(dir) = CampaignDir::open(&path) {
                if dir.id() == id {
                    return Ok(dir);
                }
            }
        }
        Err(ApiError::not_found(format!("no campaign with id {id}")))
    }

    fn campaign_paths(&self) -> Vec<PathBuf> {
        discover(&self.root, SEARCH_DEPTH)
            .into_iter()
            .filter(|p| !p.components().any(|c| c.as_os_str().to_string_lossy().starts_with(".tmp-")))
            .collect()
    }

    fn rel(&self, p: &Path) -> String {
        p.strip_prefix(&self.root).unwrap_or(p).display().to_string()
    }

    fn trials_of(&self, dir: &CampaignDir) -> Result<Arc<Vec<TrialRecord>>, ApiError> {
        let key = dir.manifest.trials_hash.clone().ok_or_else(|| ApiError::not_found("campaign has no trial log"))?;
        if let Some(t) = self.trials.lock().unwrap_or_else(|e| e.into_inner()).get(&key) {
            return Ok(t.clone());
        }
        let t = Arc::new(dir.trials()?);
        self.trials.lock().unwrap_or_else(|e| e.into_inner()).insert(key, t.clone());
        Ok(t)
    }

    fn lock_for(&self, parent: &Path) -> Arc<Mutex<()>> {
        self.locks.lock().unwrap_or_else(|e| e.into_inner()).entry(parent.to_path_buf()).or_default().clone()
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError { status, message: message.into() }
    }
    fn bad_request(m: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, m)
    }
    fn not_found(m: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, m)
    }
}

impl From<CampaignError> for ApiError {
    fn from(e: CampaignError) -> Self {
        let status = match e {
            CampaignError::Provenance { .. } => StatusCode::CONFLICT,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;
type Shared = State<Arc<AppState>>;

async fn blocking<T: Send + 'static>(
    state: Arc<AppState>,
    f: impl FnOnce(&AppState) -> ApiResult<T> + Send + 'static,
) -> ApiResult<T> {
    tokio::task::spawn_blocking(move || f(&state))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/campaigns", get(list_campaigns))
        .route("/api/campaigns/{id}", get(campaign_detail))
        .route("/api/campaigns/{id}/trials", get(list_trials))
        .route("/api/campaigns/{id}/features", get(features))
        .route("/api/campaigns/{id}/constraints", post(evaluate_constraint))
        .route("/api/campaigns/{id}/rerun", post(rerun))
        .route("/api/catalog", get(catalog))
        .layer(tower_http::cors::CorsLayer::permissive())
        .with_state(state)
}

// ------------------------------------------------------------ campaigns

#[derive(Debug, Serialize)]
struct Summary {
    campaign_id: String,
    path: String,
    parent_id: Option<String>,
    seed: Option<u64>,
    suts: Vec<String>,
    trial_count: Option<usize>,
    has_constraints: bool,
    has_mutation: bool,
}

fn summary(state: &AppState, dir: &CampaignDir) -> Summary {
    let m = &dir.manifest;
    Summary {
        campaign_id: dir.id(),
        path: state.rel(&dir.root),
        parent_id: m.parent.as_ref().map(|p| p.campaign_id.clone()),
        seed: m.seed,
        suts: m.config.as_ref().map(|c| c.suts.clone()).unwrap_or_default(),
        trial_count: m.trial_count,
        has_constraints: m.constraints_hash.is_some(),
        has_mutation: m.mutation_hash.is_some(),
    }
}

async fn list_campaigns(State(state): Shared) -> ApiResult<Json<Vec<Summary>>> {
    blocking(state, |s| {
        let dirs = s.campaign_paths().into_iter().filter_map(|p| CampaignDir::open(p).ok());
        Ok(Json(dirs.map(|d| summary(s, &d)).collect()))
    })
    .await
}

async fn campaign_detail(State(state): Shared, UrlPath(id): UrlPath<String>) -> ApiResult<Json<Value>> {
    blocking(state, move |s| {
        let dir = s.find(&id)?;
        let constraints = match dir.manifest.constraints_hash {
            Some(_) => Some(dir.constraints()?),
            None => None,
        };
        let mutation = match dir.manifest.mutation_hash {
            Some(_) => Some(dir.mutation()?),
            None => None,
        };
        let children: Vec<String> = s
            .campaign_paths()
            .into_iter()
            .filter_map(|p| CampaignDir::open(p).ok())
            .filter(|c| c.manifest.parent.as_ref().is_some_and(|p| p.campaign_id == id))
            .map(|c| c.id())
            .collect();
        Ok(Json(json!({
            "summary": summary(s, &dir),
            "manifest": dir.manifest,
            "constraints": constraints,
            "mutation": mutation,
            "children": children,
        })))
    })
    .await
}

// ------------------------------------------------------------ trials

#[derive(Debug, Default, Deserialize)]
pub struct TrialQuery {
    sut: Option<String>,
    mr: Option<String>,
    verdict: Option<String>,
    /// Mutant id, or `-` for unmutated trials.
    mutant: Option<String>,
    offset: Option<usize>,
    limit: Option<usize>,
}

async fn list_trials(
    State(state): Shared,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<TrialQuery>,
) -> ApiResult<Response> {
    let limit = q.limit.unwrap_or(DEFAULT_PAGE);
    if limit > MAX_PAGE {
        return Err(ApiError::bad_request(format!("limit must be at most {MAX_PAGE}")));
    }
    let verdict = match &q.verdict {
        Some(v) => Some(Verdict::parse(v).ok_or_else(|| ApiError::bad_request(format!("unknown verdict `{v}`")))?),
        None => None,
    };
    blocking(state, move |s| {
        let dir = s.find(&id)?;
        let trials = s.trials_of(&dir)?;
        let keep = |t: &&TrialRecord| {
            q.sut.as_ref().is_none_or(|x| &t.sut_id == x)
                && q.mr.as_ref().is_none_or(|x| &t.mr_id == x)
                && verdict.is_none_or(|v| t.verdict == v)
                && q.mutant.as_ref().is_none_or(|x| t.mutant_id.as_deref().unwrap_or("-") == x)
        };
        let matching: Vec<&TrialRecord> = trials.iter().filter(keep).collect();
        let page: Vec<&TrialRecord> = matching.iter().skip(q.offset.unwrap_or(0)).take(limit).copied().collect();
        let mut headers = HeaderMap::new();
        headers.insert("x-total-count", HeaderValue::from(matching.len()));
        Ok((headers, Json(page)).into_response())
    })
    .await
}

#[derive(Debug, Deserialize)]
pub struct GroupQuery {
    sut: Option<String>,
    mr: Option<String>,
}

async fn features(
    State(state): Shared,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<GroupQuery>,
) -> ApiResult<Json<Value>> {
    let (Some(sut), Some(mr)) = (q.sut, q.mr) else {
        return Err(ApiError::bad_request("both `sut` and `mr` are required"));
    };
    blocking(state, move |s| {
        let dir = s.find(&id)?;
        let trials = s.trials_of(&dir)?;
        let rows: Vec<Value> = trials
            .iter()
            .filter(|t| t.sut_id == sut && t.mr_id == mr && t.mutant_id.is_none())
            .map(|t| json!({ "trial_id": t.trial_id, "verdict": t.verdict, "features": FeatureVector::extract(t).to_json() }))
            .collect();
        Ok(Json(json!({ "sut": sut, "mr": mr, "trials": rows })))
    })
    .await
}

// ------------------------------------------------------------ constraints

fn validate_atoms(atoms: &[Atom], params: &BTreeSet<String>) -> ApiResult<()> {
    for a in atoms {
        let f = a.feature.as_str();
        let ok = match a.value {
            FeatureValue::Flag(_) => FLAG_FEATURES.contains(&f) && a.op == AtomOp::Eq,
            FeatureValue::Num(v) => v.is_finite() && (NUMERIC_FEATURES.contains(&f) || params.contains(f)),
        };
        if !ok {
            let known = FLAG_FEATURES.contains(&f) || NUMERIC_FEATURES.contains(&f) || params.contains(f);
            return Err(ApiError::bad_request(if known {
                format!("atom on `{f}` has the wrong value type or operator")
            } else {
                format!("unknown feature `{f}`")
            }));
        }
    }
    Ok(())
}

fn param_names<'a>(trials: impl Iterator<Item = &'a TrialRecord>) -> BTreeSet<String> {
    trials.flat_map(|t| t.param_binding.keys().cloned()).collect()
}

#[derive(Debug, Deserialize)]
pub struct ConstraintRequest {
    sut: Option<String>,
    mr: Option<String>,
    atoms: Vec<Atom>,
}

#[derive(Debug, Serialize)]
struct ConstraintResponse {
    #[serde(flatten)]
    metrics: Metrics,
    in_region: Evidence,
    out_region: Evidence,
}

fn partition_evidence(atoms: &[Atom], trials: &[&TrialRecord]) -> (Evidence, Evidence) {
    let p = apply_constraint(atoms, trials);
    let pick = |idx: &[usize]| Evidence::count(&idx.iter().map(|&i| trials[i]).collect::<Vec<_>>());
    (pick(&p.in_region), pick(&p.out_region))
}

async fn evaluate_constraint(
    State(state): Shared,
    UrlPath(id): UrlPath<String>,
    Json(req): Json<ConstraintRequest>,
) -> ApiResult<Json<ConstraintResponse>> {
    blocking(state, move |s| {
        let dir = s.find(&id)?;
        let trials = s.trials_of(&dir)?;
        let group: Vec<&TrialRecord> = trials
            .iter()
            .filter(|t| t.mutant_id.is_none())
            .filter(|t| req.sut.as_ref().is_none_or(|x| &t.sut_id == x))
            .filter(|t| req.mr.as_ref().is_none_or(|x| &t.mr_id == x))
            .collect();
        validate_atoms(&req.atoms, &param_names(group.iter().copied()))?;
        let (in_region, out_region) = partition_evidence(&req.atoms, &group);
        Ok(Json(ConstraintResponse { metrics: constraint_metrics(&req.atoms, &group), in_region, out_region }))
    })
    .await
}

// ------------------------------------------------------------ re-run

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct RerunRequest {
    sut: String,
    mr: String,
    atoms: Vec<Atom>,
    seed: u64,
    n: Option<usize>,
}

#[derive(Debug, Serialize)]
pub struct RerunResponse {
    campaign_id: String,
    path: String,
    partial: bool,
    requested: usize,
    accepted: usize,
    draws: u64,
    trial_count: usize,
    in_region: Evidence,
    out_region: Evidence,
    warning: Option<String>,
}

async fn rerun(
    State(state): Shared,
    UrlPath(id): UrlPath<String>,
    Json(req): Json<RerunRequest>,
) -> ApiResult<Json<RerunResponse>> {
    blocking(state, move |s| {
        let parent = s.find(&id)?;
        let lock = s.lock_for(&parent.root);
        let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());
        create_child(s, &parent, &id, req).map(Json)
    })
    .await
}

fn create_child(s: &AppState, parent: &CampaignDir, parent_id: &str, req: RerunRequest) -> ApiResult<RerunResponse> {
    let pm = &parent.manifest;
    let config = pm.config.as_ref().ok_or_else(|| ApiError::bad_request("parent campaign has not been run"))?;
    let catalog = parent.catalog()?;
    let sut = s.registry.get(&req.sut).ok_or_else(|| ApiError::bad_request(format!("unknown SUT `{}`", req.sut)))?;
    let spec = catalog.get(&req.mr).ok_or_else(|| ApiError::bad_request(format!("unknown MR `{}`", req.mr)))?;
    if spec.input_kind != sut.input_kind {
        return Err(ApiError::bad_request(format!("MR `{}` does not apply to SUT `{}`", req.mr, req.sut)));
    }
    let params: BTreeSet<String> = spec.params.iter().map(|p| p.name.clone()).collect();
    validate_atoms(&req.atoms, &params)?;
    let default_n = pm.generate.as_ref().map_or(200, |g| g.profiles.iter().map(|p| p.n).sum());
    let n = req.n.unwrap_or(default_n);
    if n == 0 || n > MAX_RERUN_DATA {
        return Err(ApiError::bad_request(format!("n must lie in 1..={MAX_RERUN_DATA}")));
    }

    let key = sha256_hex(serde_json::to_string(&req).expect("request serializes").as_bytes())[..16].to_string();
    let children = parent.root.join("children");
    let target = children.join(&key);
    if let Ok(existing) = CampaignDir::open(&target) {
        return describe_child(s, &existing);
    }

    let profiles = match &pm.generate {
        Some(g) if g.kind == sut.input_kind => g.profiles.clone(),
        _ => default_profiles(n),
    };
    // Parameter atoms cannot steer input generation; they only split the result.
    let input_atoms: Vec<&Atom> = req.atoms.iter().filter(|a| !params.contains(&a.feature)).collect();
    let empty = Default::default();
    let filtered = generate_filtered(sut.input_kind, &profiles, req.seed, n, MAX_DRAWS, |x| {
        let fv = FeatureVector::of_input(x, &empty);
        input_atoms.iter().all(|a| a.matches(&fv))
    })
    .map_err(|e| ApiError::bad_request(e.to_string()))?;

    let child_config = CampaignConfig {
        suts: vec![req.sut.clone()],
        mutants: MutantSelection::None,
        mrs: Some(vec![req.mr.clone()]),
        catalog: config.catalog.clone(),
        dataset: DATASET_FILE.into(),
        params_per_datum: config.params_per_datum,
        seed: req.seed,
    };
    let records = run_campaign(&child_config, &s.registry, &catalog, &filtered.data, 1)
        .map_err(|e| ApiError::bad_request(e.to_string()))?;

    let tmp = children.join(format!(".tmp-{key}-{}-{}", std::process::id(), s.tmp_counter.fetch_add(1, Ordering::Relaxed)));
    let write = || -> Result<(), CampaignError> {
        let dataset_hash = write_text(&tmp.join(DATASET_FILE), &to_jsonl(&filtered.data))?;
        let trials_hash = write_text(&tmp.join(TRIALS_FILE), &trials_to_jsonl(&records))?;
        write_text(&tmp.join(CATALOG_FILE), &catalog.to_json())?;
        let manifest = Manifest {
            config_hash: Some(child_config.hash()),
            config: Some(child_config.clone()),
            seed: Some(req.seed),
            catalog_file: Some(CATALOG_FILE.into()),
            catalog_hash: Some(catalog.hash()),
            dataset_hash: Some(dataset_hash),
            trial_count: Some(records.len()),
            trials_file: Some(TRIALS_FILE.into()),
            trials_hash: Some(trials_hash),
            parent: Some(ParentLink {
                campaign_id: parent_id.to_string(),
                sut: req.sut.clone(),
                mr: req.mr.clone(),
                atoms: req.atoms.clone(),
                seed: req.seed,
                requested: n,
                accepted: filtered.data.len(),
                draws: filtered.draws,
                partial: !filtered.complete,
            }),
            ..Manifest::default()
        };
        write_text(&tmp.join(mt_core::campaign::MANIFEST_FILE), &to_pretty_json(&manifest))?;
        Ok(())
    };
    if let Err(e) = write() {
        let _ = std::fs::remove_dir_all(&tmp);
        return Err(e.into());
    }
    if std::fs::rename(&tmp, &target).is_err() {
        // Another process created the same child first; theirs is identical.
        let _ = std::fs::remove_dir_all(&tmp);
    }
    describe_child(s, &CampaignDir::open(&target)?)
}

fn describe_child(s: &AppState, child: &CampaignDir) -> ApiResult<RerunResponse> {
    let link = child.manifest.parent.clone().ok_or_else(|| ApiError::new(StatusCode::CONFLICT, "not a child campaign"))?;
    let trials = s.trials_of(child)?;
    let refs: Vec<&TrialRecord> = trials.iter().collect();
    let (in_region, out_region) = partition_evidence(&link.atoms, &refs);
    let warning = if link.accepted == 0 {
        Some(format!("no data satisfied the constraint within {} draws", link.draws))
    } else if link.partial {
        Some(format!("only {} of {} data satisfied the constraint within {} draws", link.accepted, link.requested, link.draws))
    } else {
        None
    };
    Ok(RerunResponse {
        campaign_id: child.id(),
        path: s.rel(&child.root),
        partial: link.partial,
        requested: link.requested,
        accepted: link.accepted,
        draws: link.draws,
        trial_count: trials.len(),
        in_region,
        out_region,
        warning,
    })
}

// ------------------------------------------------------------ catalog

async fn catalog(State(state): Shared) -> Response {
    let mut headers = HeaderMap::new();
    headers.insert(header::CONTENT_TYPE, HeaderValue::from_static("application/json"));
    headers.insert("x-catalog-hash", HeaderValue::from_str(&state.catalog.hash()).expect("hex is a valid header"));
    (headers, state.catalog.to_json()).into_response()
}

// ------------------------------------------------------------ entry point

pub fn serve(args: &ServeArgs) -> CliResult<()> {
    let root = args.root.clone().unwrap_or_else(mt_home);
    let catalog = if args.catalog == "builtin" {
        mt_core::catalog::builtin_catalog()
    } else {
        mt_core::catalog::load_catalog(&args.catalog).map_err(CliError::invalid)?
    };
    let registry = build_registry(args.external.as_deref())?;
    let addr: SocketAddr = format!("{}:{}", args.host, args.port)
        .parse()
        .map_err(|e| CliError::invalid(anyhow!("bad listen address: {e}")))?;
    let rt = tokio::runtime::Runtime::new().map_err(CliError::environment)?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| CliError::environment(anyhow!("cannot listen on {addr}: {e}")))?;
        eprintln!("serving {} on http://{addr}", root.display());
        let app = router(AppState::new(root, catalog, registry));
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(CliError::internal)
    })
}
