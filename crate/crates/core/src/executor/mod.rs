//! Runs bound MRs against SUTs and records one [`TrialRecord`] per
//! (target, MR, datum, binding).

mod relation;
mod transform;

pub use relation::{compare, evaluate_relation, NonFiniteOutput, Verdict};
pub use transform::{transform_input, TransformError};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{match_mrs, Catalog};
use crate::datagen::TestDatum;
use crate::digest::sha256_hex;
use crate::dsl::{instantiate_mr, Binding, MrSpec, ParamKind};
use crate::input::Input;
use crate::seed::{fnv1a, mix, rng};
use crate::sut::{Registry, SutOutcome, Target};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_id: String,
    pub sut_id: String,
    pub mutant_id: Option<String>,
    pub mr_id: String,
    pub param_binding: Binding,
    pub source_input: Input<f64>,
    /// Absent only when the transformation itself failed.
    pub followup_input: Option<Input<f64>>,
    pub source_output: Option<f64>,
    pub followup_output: Option<f64>,
    pub verdict: Verdict,
    pub error_detail: Option<String>,
    /// `[campaign seed, datum_id, binding index]`; see [`trial_seed`].
    pub seed_path: Vec<u64>,
}

impl TrialRecord {
    pub fn datum_id(&self) -> u64 {
        self.seed_path[1]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MutantSelection {
    #[default]
    None,
    All,
    Only(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub suts: Vec<String>,
    #[serde(default)]
    pub mutants: MutantSelection,
    /// Restricts the catalog to these MR ids when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mrs: Option<Vec<String>>,
    /// `"builtin"` or the catalog file the campaign was started with.
    pub catalog: String,
    pub dataset: String,
    pub params_per_datum: usize,
    pub seed: u64,
}

impl CampaignConfig {
    pub fn hash(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("config serializes").as_bytes())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("params_per_datum must be at least 1")]
    ZeroBindings,
    #[error("unknown SUT `{0}`")]
    UnknownSut(String),
    #[error("unknown mutant `{mutant}` of SUT `{sut}`")]
    UnknownMutant { sut: String, mutant: String },
    #[error("unknown MR `{0}`")]
    UnknownMr(String),
    #[error("datum {datum_id} does not conform to {sut} input kind {kind}")]
    DatasetKind { sut: String, datum_id: u64, kind: String },
    #[error("cannot sample parameter `{0}`: domain holds no admissible value")]
    EmptyDomain(String),
    #[error("worker pool: {0}")]
    Pool(String),
}

/// Seed of one trial, derived from the campaign seed, the MR id, the datum
/// and the binding index. It does not depend on the SUT, so a SUT and its
/// mutants see identical bindings and permutations.
pub fn trial_seed(seed: u64, mr_id: &str, datum_id: u64, binding_idx: u64) -> u64 {
    mix(mix(mix(seed, fnv1a(mr_id)), datum_id), binding_idx)
}

pub fn trial_id(sut: &str, mutant: Option<&str>, mr: &str, datum_id: u64, binding_idx: u64) -> String {
    format!("{sut}:{}:{mr}:{datum_id}:{binding_idx}", mutant.unwrap_or("-"))
}

/// Draws each parameter uniformly from its domain, in declaration order.
pub fn sample_binding(spec: &MrSpec, trial_seed: u64) -> Result<Binding, ConfigError> {
    let mut r = rng(trial_seed);
    let mut b = Binding::new();
    for p in &spec.params {
        let v = match p.kind {
            ParamKind::Int => {
                let (lo, hi) = p
                    .domain
                    .int_bounds()
                    .ok_or_else(|| ConfigError::EmptyDomain(p.name.clone()))?;
                r.random_range(lo..=hi) as f64
            }
            ParamKind::Float => {
                let (lo, hi) = (p.domain.lo, p.domain.hi);
                let mut v = r.random_range(lo..=hi);
                let mut tries = 0;
                while !p.domain.contains(v) {
                    tries += 1;
                    if tries > 1000 {
                        return Err(ConfigError::EmptyDomain(p.name.clone()));
                    }
                    v = r.random_range(lo..=hi);
                }
                v
            }
        };
        b.insert(p.name.clone(), v);
    }
    Ok(b)
}

struct Planned<'a> {
    target: Target<'a>,
    spec: &'a MrSpec,
    datum: &'a TestDatum,
    binding_idx: u64,
}

fn targets<'r>(registry: &'r Registry, config: &CampaignConfig) -> Result<Vec<Target<'r>>, ConfigError> {
    let mut out = Vec::new();
    for id in &config.suts {
        let sut = registry.get(id).ok_or_else(|| ConfigError::UnknownSut(id.clone()))?;
        out.push(Target::Sut(sut));
        match &config.mutants {
            MutantSelection::None => {}
            MutantSelection::All => out.extend(sut.mutants.iter().map(|m| Target::Mutant(sut, m))),
            MutantSelection::Only(ids) => {
                for m in &sut.mutants {
                    if ids.contains(&m.id) {
                        out.push(Target::Mutant(sut, m));
                    }
                }
            }
        }
    }
    if let MutantSelection::Only(ids) = &config.mutants {
        for m in ids {
            if !out.iter().any(|t| t.mutant_id() == Some(m.as_str())) {
                let sut = config.suts.first().cloned().unwrap_or_default();
                return Err(ConfigError::UnknownMutant { sut, mutant: m.clone() });
            }
        }
    }
    Ok(out)
}

fn mr_set<'c>(catalog: &'c Catalog, config: &CampaignConfig, target: &Target<'_>) -> Vec<&'c MrSpec> {
    match_mrs(catalog, target.sut())
        .into_iter()
        .filter(|m| config.mrs.as_ref().is_none_or(|ids| ids.contains(&m.id)))
        .collect()
}

/// Number of trials `run_campaign` will record.
pub fn planned_trial_count(
    config: &CampaignConfig,
    registry: &Registry,
    catalog: &Catalog,
    dataset: &[TestDatum],
) -> Result<usize, ConfigError> {
    let ts = targets(registry, config)?;
    Ok(ts
        .iter()
        .map(|t| mr_set(catalog, config, t).len() * dataset.len() * config.params_per_datum)
        .sum())
}

/// Executes every planned trial on a pool of `jobs` workers and returns the
/// records sorted by `trial_id`. The result does not depend on `jobs`.
///
/// SUT failures, crashes and timeouts become ERROR trials; the campaign
/// itself only fails on configuration problems.
pub fn run_campaign(
    config: &CampaignConfig,
    registry: &Registry,
    catalog: &Catalog,
    dataset: &[TestDatum],
    jobs: usize,
) -> Result<Vec<TrialRecord>, ConfigError> {
    if config.params_per_datum == 0 {
        return Err(ConfigError::ZeroBindings);
    }
    if let Some(ids) = &config.mrs {
        if let Some(bad) = ids.iter().find(|id| catalog.get(id).is_none()) {
            return Err(ConfigError::UnknownMr(bad.clone()));
        }
    }
    let ts = targets(registry, config)?;
    let mut plan = Vec::new();
    for t in &ts {
        let mrs = mr_set(catalog, config, t);
        if mrs.is_empty() {
            continue;
        }
        let kind = t.sut().input_kind;
        if let Some(d) = dataset.iter().find(|d| !d.values.conforms(kind)) {
            return Err(ConfigError::DatasetKind {
                sut: t.sut().id.clone(),
                datum_id: d.datum_id,
                kind: kind.as_str().into(),
            });
        }
        for spec in mrs {
            for datum in dataset {
                for binding_idx in 0..config.params_per_datum as u64 {
                    plan.push(Planned { target: *t, spec, datum, binding_idx });
                }
            }
        }
    }
    // Surface domain problems before any SUT runs.
    for p in plan.iter().filter(|p| p.datum.datum_id == plan[0].datum.datum_id && p.binding_idx == 0) {
        sample_binding(p.spec, 0)?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| ConfigError::Pool(e.to_string()))?;
    let seed = config.seed;
    let mut records: Vec<TrialRecord> =
        pool.install(|| plan.par_iter().map(|p| execute(registry, p, seed)).collect::<Result<_, _>>())?;
    records.sort_by(|a, b| a.trial_id.cmp(&b.trial_id));
    Ok(records)
}

fn execute(registry: &Registry, p: &Planned<'_>, seed: u64) -> Result<TrialRecord, ConfigError> {
    let datum_id = p.datum.datum_id;
    let ts = trial_seed(seed, &p.spec.id, datum_id, p.binding_idx);
    let binding = sample_binding(p.spec, ts)?;
    let trial_id = trial_id(&p.target.sut().id, p.target.mutant_id(), &p.spec.id, datum_id, p.binding_idx);
    let bound = instantiate_mr::<f64>(p.spec, &binding).expect("sampled binding lies in the domain");
    let source = &p.datum.values;

    let call = |input: &Input<f64>, which: &str| -> Result<f64, String> {
        match registry.invoke_with_id(p.target, input, &format!("{trial_id}:{which}")) {
            Ok(SutOutcome::Value(v)) => Ok(v),
            Ok(SutOutcome::Failure(reason)) => Err(format!("{which}: {reason}")),
            Err(e) => Err(format!("{which}: {e}")),
        }
    };
    let mut errors = Vec::new();
    let source_output = call(source, "source").map_err(|e| errors.push(e)).ok();
    let followup_input = match transform_input(&bound, source, ts) {
        Ok(x) => Some(x),
        Err(e) => {
            errors.push(format!("transform: {}", e.detail()));
            None
        }
    };
    let followup_output = match &followup_input {
        Some(x) => call(x, "followup").map_err(|e| errors.push(e)).ok(),
        None => None,
    };

    let verdict = match (source_output, followup_output) {
        (Some(s), Some(f)) => match evaluate_relation(&bound, s, f, source.len()) {
            Ok(v) => v,
            Err(_) => {
                errors.push("relation: non-finite".into());
                Verdict::Error
            }
        },
        _ => Verdict::Error,
    };
    Ok(TrialRecord {
        trial_id,
        sut_id: p.target.sut().id.clone(),
        mutant_id: p.target.mutant_id().map(str::to_string),
        mr_id: p.spec.id.clone(),
        param_binding: binding,
        source_input: source.clone(),
        followup_input,
        source_output,
        followup_output,
        verdict,
        error_detail: (!errors.is_empty()).then(|| errors.join("; ")),
        seed_path: vec![seed, datum_id, p.binding_idx],
    })
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("malformed trial log line {line}: {reason}")]
pub struct TrialLogError {
    pub line: usize,
    pub reason: String,
}

pub fn trials_to_jsonl(records: &[TrialRecord]) -> String {
    let mut s = String::new();
    for r in records {
        s.push_str(&serde_json::to_string(r).expect("record serializes"));
        s.push('\n');
    }
    s
}

pub fn trials_from_jsonl(text: &str) -> Result<Vec<TrialRecord>, TrialLogError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| TrialLogError {
                line: i + 1,
                reason: e.to_string(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::builtin_catalog;
    use crate::datagen::{generate_dataset, GenProfile, SignMix};
    use crate::dsl::InputKind;

    fn config(suts: &[&str]) -> CampaignConfig {
        CampaignConfig {
            suts: suts.iter().map(|s| s.to_string()).collect(),
            mutants: MutantSelection::None,
            mrs: None,
            catalog: "builtin".into(),
            dataset: "data.jsonl".into(),
            params_per_datum: 1,
            seed: 7,
        }
    }

    fn data(n: usize, sign_mix: SignMix, seed: u64) -> Vec<TestDatum> {
        let p = GenProfile { n, sign_mix, ..GenProfile::default() };
        generate_dataset(InputKind::ListFloat, &p, seed).unwrap()
    }

    #[test]
    fn trial_count_arithmetic() {
        let reg = Registry::builtin();
        let cat = builtin_catalog();
        let ds = data(10, SignMix::Any, 1);
        let recs = run_campaign(&config(&["sum"]), &reg, &cat, &ds, 2).unwrap();
        assert_eq!(recs.len(), 60);
        assert_eq!(planned_trial_count(&config(&["sum"]), &reg, &cat, &ds).unwrap(), 60);
        let mut ids: Vec<_> = recs.iter().map(|r| r.trial_id.clone()).collect();
        ids.dedup();
        assert_eq!(ids.len(), 60);
        assert!(recs.windows(2).all(|w| w[0].trial_id < w[1].trial_id));
    }

    #[test]
    fn empty_dataset_yields_no_trials() {
        let recs = run_campaign(&config(&["sum", "max"]), &Registry::builtin(), &builtin_catalog(), &[], 1).unwrap();
        assert!(recs.is_empty());
    }

    #[test]
    fn sum_permutative_all_hold() {
        let reg = Registry::builtin();
        let cat = builtin_catalog();
        let ds = data(50, SignMix::Any, 2);
        let mut cfg = config(&["sum"]);
        cfg.mrs = Some(vec!["permutative".into()]);
        cfg.params_per_datum = 3;
        let recs = run_campaign(&cfg, &reg, &cat, &ds, 4).unwrap();
        assert_eq!(recs.len(), 150);
        assert!(recs.iter().all(|r| r.verdict == Verdict::Holds), "{recs:?}");
    }

    #[test]
    fn sum_of_squares_additive_by_stratum() {
        let reg = Registry::builtin();
        let cat = builtin_catalog();
        let mut cfg = config(&["sum_of_squares"]);
        cfg.mrs = Some(vec!["additive".into()]);
        let nonneg = run_campaign(&cfg, &reg, &cat, &data(50, SignMix::Nonneg, 3), 1).unwrap();
        assert!(nonneg.iter().all(|r| r.verdict == Verdict::Holds));
        let nonpos = run_campaign(&cfg, &reg, &cat, &data(50, SignMix::Nonpos, 3), 1).unwrap();
        // Oracle: recompute sum((x+c)^2) - sum(x^2) directly.
        for r in &nonpos {
            let c = r.param_binding["c"];
            let delta: f64 = r.source_input.values().iter().map(|x| (x + c) * (x + c) - x * x).sum();
            if delta < -1e-6 {
                assert_eq!(r.verdict, Verdict::Violated);
            }
        }
        assert!(nonpos.iter().any(|r| r.verdict == Verdict::Violated));
    }

    #[test]
    fn exclude_last_on_singletons_errors() {
        let reg = Registry::builtin();
        let cat = builtin_catalog();
        let p = GenProfile { n: 5, len_range: [1, 1], ..GenProfile::default() };
        let ds = generate_dataset(InputKind::ListFloat, &p, 1).unwrap();
        let mut cfg = config(&["min"]);
        cfg.mrs = Some(vec!["exclusive".into()]);
        let recs = run_campaign(&cfg, &reg, &cat, &ds, 1).unwrap();
        for r in &recs {
            assert_eq!(r.verdict, Verdict::Error);
            assert_eq!(r.followup_input, Some(Input::List(vec![])));
            assert!(r.followup_output.is_none());
            assert!(r.error_detail.as_deref().unwrap().contains("empty-input"));
        }
    }

    #[test]
    fn jobs_do_not_change_output() {
        let reg = Registry::builtin();
        let cat = builtin_catalog();
        let ds = data(20, SignMix::Any, 9);
        let mut cfg = config(&["sum", "median", "variance"]);
        cfg.params_per_datum = 2;
        cfg.mutants = MutantSelection::All;
        let a = trials_to_jsonl(&run_campaign(&cfg, &reg, &cat, &ds, 1).unwrap());
        let b = trials_to_jsonl(&run_campaign(&cfg, &reg, &cat, &ds, 8).unwrap());
        assert_eq!(a, b);
        assert_eq!(trials_to_jsonl(&trials_from_jsonl(&a).unwrap()), a);
    }

    #[test]
    fn mutants_share_bindings() {
        let reg = Registry::builtin();
        let cat = builtin_catalog();
        let ds = data(5, SignMix::Any, 4);
        let mut cfg = config(&["sum"]);
        cfg.mutants = MutantSelection::Only(vec!["sum_mutant_plus_to_minus".into()]);
        let recs = run_campaign(&cfg, &reg, &cat, &ds, 1).unwrap();
        let base: Vec<_> = recs.iter().filter(|r| r.mutant_id.is_none()).collect();
        let mutant: Vec<_> = recs.iter().filter(|r| r.mutant_id.is_some()).collect();
        assert_eq!(base.len(), mutant.len());
        for (a, b) in base.iter().zip(&mutant) {
            assert_eq!(a.param_binding, b.param_binding);
            assert_eq!(a.followup_input, b.followup_input);
        }
    }

    #[test]
    fn config_errors() {
        let reg = Registry::builtin();
        let cat = builtin_catalog();
        let ds = data(2, SignMix::Any, 1);
        assert_eq!(
            run_campaign(&config(&["nope"]), &reg, &cat, &ds, 1),
            Err(ConfigError::UnknownSut("nope".into()))
        );
        let mut cfg = config(&["sum"]);
        cfg.params_per_datum = 0;
        assert_eq!(run_campaign(&cfg, &reg, &cat, &ds, 1), Err(ConfigError::ZeroBindings));
        let mut cfg = config(&["sum"]);
        cfg.mutants = MutantSelection::Only(vec!["ghost".into()]);
        assert!(matches!(run_campaign(&cfg, &reg, &cat, &ds, 1), Err(ConfigError::UnknownMutant { .. })));
        let mut cfg = config(&["sum"]);
        cfg.mrs = Some(vec!["ghost".into()]);
        assert_eq!(run_campaign(&cfg, &reg, &cat, &ds, 1), Err(ConfigError::UnknownMr("ghost".into())));
        let scalars = generate_dataset(InputKind::ScalarFloat, &GenProfile { n: 2, ..GenProfile::default() }, 1).unwrap();
        assert!(matches!(
            run_campaign(&config(&["sum"]), &reg, &cat, &scalars, 1),
            Err(ConfigError::DatasetKind { .. })
        ));
    }

    #[test]
    fn binding_sampling_respects_domain() {
        let cat = builtin_catalog();
        let spec = cat.get("additive").unwrap();
        for s in 0..500 {
            let b = sample_binding(spec, s).unwrap();
            assert!(spec.params[0].domain.contains(b["c"]));
        }
        let int_spec = crate::dsl::parse_mr(
            "mr i { input: list-int; param k: int in (0, 3); follow: add(k); expect: out_f >= out_s; }",
        )
        .unwrap();
        for s in 0..100 {
            let k = sample_binding(&int_spec, s).unwrap()["k"];
            assert!(k == 1.0 || k == 2.0);
        }
    }

    #[test]
    fn record_serialization_shape() {
        let reg = Registry::builtin();
        let cat = builtin_catalog();
        let ds = vec![TestDatum { datum_id: 0, values: Input::List(vec![1.0, 2.0]), stratum: "any".into() }];
        let mut cfg = config(&["sum"]);
        cfg.mrs = Some(vec!["permutative".into()]);
        let recs = run_campaign(&cfg, &reg, &cat, &ds, 1).unwrap();
        let v: serde_json::Value = serde_json::from_str(&serde_json::to_string(&recs[0]).unwrap()).unwrap();
        assert_eq!(v["trial_id"], "sum:-:permutative:0:0");
        assert_eq!(v["mutant_id"], serde_json::Value::Null);
        assert_eq!(v["verdict"], "HOLDS");
        assert_eq!(v["source_output"], 3.0);
        assert_eq!(v["seed_path"], serde_json::json!([7, 0, 0]));
    }
}
