//! Constraint mining: where in the input space does an MR hold for a SUT?

mod explain;
mod features;
mod search;

pub use explain::{explain, Boundary, Explanation};
pub use features::{FeatureValue, FeatureVector, BASE_FEATURES, FLAG_FEATURES, NUMERIC_FEATURES};
pub use search::{
    apply_constraint, constraint_metrics, display_atoms, mine_constraints, Atom, AtomOp, Constraint, Metrics,
    MineResult, Partition,
};

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::executor::{TrialRecord, Verdict};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MineOptions {
    pub min_support: usize,
    pub min_precision: f64,
    /// Ranked candidates kept per group; the total count is still reported.
    pub max_results: usize,
}

impl Default for MineOptions {
    fn default() -> Self {
        MineOptions { min_support: 5, min_precision: 1.0, max_results: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MineError {
    #[error("insufficient data: {usable} non-ERROR trials, {min_support} required")]
    InsufficientData { usable: usize, min_support: usize },
    #[error("trial {0} belongs to a different (SUT, MR) group")]
    MixedGroup(String),
    #[error("trial {0} was run against a mutant; constraints are mined on unmutated SUTs only")]
    MutantTrials(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Evidence {
    pub holds: usize,
    pub violated: usize,
    pub error: usize,
}

impl Evidence {
    pub fn count(trials: &[&TrialRecord]) -> Self {
        let mut e = Evidence::default();
        for t in trials {
            e.add(t.verdict);
        }
        e
    }

    pub fn add(&mut self, v: Verdict) {
        match v {
            Verdict::Holds => self.holds += 1,
            Verdict::Violated => self.violated += 1,
            Verdict::Error => self.error += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.holds + self.violated + self.error
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Applicable,
    Conditional,
    Inapplicable,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintAtoms {
    pub atoms: Vec<Atom>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MrSutVerdict {
    pub sut: String,
    pub mr: String,
    pub status: Status,
    /// The selected constraint of a CONDITIONAL verdict.
    pub constraint: Option<ConstraintAtoms>,
    pub metrics: Option<Metrics>,
    pub evidence: Evidence,
    pub explanation: Explanation,
    pub total_candidates: u64,
    /// Top of the ranked candidate list.
    pub candidates: Vec<Constraint>,
}

impl MrSutVerdict {
    /// Whether a trial of this group lies in the constrained region.
    /// APPLICABLE admits everything, CONDITIONAL its region, anything else nothing.
    pub fn admits(&self, fv: &FeatureVector) -> bool {
        match (self.status, &self.constraint) {
            (Status::Applicable, _) => true,
            (Status::Conditional, Some(c)) => c.atoms.iter().all(|a| a.matches(fv)),
            _ => false,
        }
    }
}

/// Candidates listed per verdict in reports.
pub const REPORT_CANDIDATES: usize = 10;

/// Applicability status of one (SUT, MR) group from its trials and mining result.
pub fn classify(trials: &[&TrialRecord], mined: &Result<MineResult, MineError>, options: &MineOptions) -> MrSutVerdict {
    let evidence = Evidence::count(trials);
    let (sut, mr) = trials
        .first()
        .map(|t| (t.sut_id.clone(), t.mr_id.clone()))
        .unwrap_or_default();
    let (status, selected) = match mined {
        Err(_) => (Status::Undetermined, None),
        Ok(_) if evidence.violated == 0 => (Status::Applicable, None),
        Ok(_) if evidence.holds == 0 => (Status::Inapplicable, None),
        Ok(m) => match m.ranked.first() {
            Some(c) => (Status::Conditional, Some(c.clone())),
            None => (Status::Undetermined, None),
        },
    };
    let metrics = match status {
        Status::Applicable | Status::Inapplicable => {
            Some(Metrics::from_counts(evidence.holds + evidence.violated, evidence.holds, evidence.holds))
        }
        Status::Conditional => selected.as_ref().map(|c| c.metrics),
        Status::Undetermined => None,
    };
    let rejected = match (status, mined) {
        (Status::Undetermined, Ok(m)) => m.best_rejected.as_ref(),
        _ => None,
    };
    let insufficient = matches!(mined, Err(MineError::InsufficientData { .. }));
    let explanation = explain(status, selected.as_ref(), rejected, insufficient, trials, options);
    let (total_candidates, candidates) = match mined {
        Ok(m) => (m.total_candidates, m.ranked.iter().take(REPORT_CANDIDATES).cloned().collect()),
        Err(_) => (0, Vec::new()),
    };
    MrSutVerdict {
        sut,
        mr,
        status,
        constraint: selected.map(|c| ConstraintAtoms { atoms: c.atoms }),
        metrics,
        evidence,
        explanation,
        total_candidates,
        candidates,
    }
}

/// Groups unmutated trials by (SUT, MR).
pub fn group_trials(trials: &[TrialRecord]) -> BTreeMap<(String, String), Vec<&TrialRecord>> {
    let mut groups: BTreeMap<(String, String), Vec<&TrialRecord>> = BTreeMap::new();
    for t in trials {
        groups.entry((t.sut_id.clone(), t.mr_id.clone())).or_default().push(t);
    }
    groups
}

/// Mines and classifies every (SUT, MR) group, ordered by (SUT, MR).
/// Fails if any trial targets a mutant.
pub fn mine_all(trials: &[TrialRecord], options: &MineOptions) -> Result<Vec<MrSutVerdict>, MineError> {
    if let Some(t) = trials.iter().find(|t| t.mutant_id.is_some()) {
        return Err(MineError::MutantTrials(t.trial_id.clone()));
    }
    let groups: Vec<Vec<&TrialRecord>> = group_trials(trials).into_values().collect();
    Ok(groups
        .par_iter()
        .map(|g| classify(g, &mine_constraints(g, options), options))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub catalog_hash: String,
    pub dataset_hash: String,
    pub trials_hash: String,
    pub options: MineOptions,
    pub verdicts: Vec<MrSutVerdict>,
}

impl ConstraintReport {
    pub fn verdict(&self, sut: &str, mr: &str) -> Option<&MrSutVerdict> {
        self.verdicts.iter().find(|v| v.sut == sut && v.mr == mr)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::input::Input;

    fn trial(i: usize, xs: &[f64], c: f64, verdict: Verdict) -> TrialRecord {
        TrialRecord {
            trial_id: format!("s:-:m:{i}:0"),
            sut_id: "s".into(),
            mutant_id: None,
            mr_id: "m".into(),
            param_binding: [("c".to_string(), c)].into(),
            source_input: Input::List(xs.to_vec()),
            followup_input: None,
            source_output: None,
            followup_output: None,
            verdict,
            error_detail: None,
            seed_path: vec![0, i as u64, 0],
        }
    }

    /// Holds iff every element is nonnegative.
    fn nonneg_fixture() -> Vec<TrialRecord> {
        let lists: [&[f64]; 12] = [
            &[1.0, 2.0],
            &[0.0, 5.0, 3.0],
            &[4.0],
            &[2.5, 2.5],
            &[7.0, 1.0, 1.0, 9.0],
            &[3.0],
            &[-1.0, 2.0],
            &[-3.0],
            &[-0.5, -2.0],
            &[6.0, -4.0, 1.0],
            &[-8.0, 8.0],
            &[-2.0, -2.0, 0.0],
        ];
        lists
            .iter()
            .enumerate()
            .map(|(i, xs)| {
                let v = if xs.iter().all(|&x| x >= 0.0) { Verdict::Holds } else { Verdict::Violated };
                trial(i, xs, 1.0 + i as f64 / 10.0, v)
            })
            .collect()
    }

    fn refs(ts: &[TrialRecord]) -> Vec<&TrialRecord> {
        ts.iter().collect()
    }

    #[test]
    fn all_hold_gives_trivial_constraint_and_applicable() {
        let ts: Vec<_> = (0..10).map(|i| trial(i, &[i as f64], 1.0, Verdict::Holds)).collect();
        let r = refs(&ts);
        let opts = MineOptions::default();
        let mined = mine_constraints(&r, &opts);
        let top = &mined.as_ref().unwrap().ranked[0];
        assert!(top.atoms.is_empty());
        assert_eq!(top.metrics.coverage, 1.0);
        let v = classify(&r, &mined, &opts);
        assert_eq!(v.status, Status::Applicable);
        assert!(v.explanation.violated_witnesses.is_empty());
    }

    #[test]
    fn insufficient_data() {
        let mut ts: Vec<_> = (0..3).map(|i| trial(i, &[1.0], 1.0, Verdict::Holds)).collect();
        ts.push(trial(3, &[], 1.0, Verdict::Error));
        let r = refs(&ts);
        let mined = mine_constraints(&r, &MineOptions::default());
        assert_eq!(mined, Err(MineError::InsufficientData { usable: 3, min_support: 5 }));
        let v = classify(&r, &mined, &MineOptions::default());
        assert_eq!(v.status, Status::Undetermined);
        assert_eq!(v.evidence.error, 1);
    }

    #[test]
    fn recovers_nonneg_region() {
        let ts = nonneg_fixture();
        let r = refs(&ts);
        let opts = MineOptions::default();
        let mined = mine_constraints(&r, &opts).unwrap();
        let top = &mined.ranked[0];
        assert_eq!(top.metrics.precision, 1.0);
        assert_eq!(top.metrics.coverage, 1.0);
        assert_eq!(top.metrics.support, 6);
        // Ties at full coverage with one atom break on support then name.
        assert_eq!(top.atoms, vec![Atom::flag("all_nonneg", true)]);
        for c in &mined.ranked {
            assert_eq!(constraint_metrics(&c.atoms, &r), c.metrics, "{c:?}");
        }
        let v = classify(&r, &Ok(mined), &opts);
        assert_eq!(v.status, Status::Conditional);
        assert_eq!(v.constraint.unwrap().atoms, vec![Atom::flag("all_nonneg", true)]);
        assert_eq!(v.explanation.boundary.as_ref().unwrap().feature, "all_nonneg");
        assert!(v.explanation.violated_witnesses.len() <= 3);
        assert!(v.explanation.holds_witnesses.len() <= 3);
    }

    #[test]
    fn uniform_violation_is_inapplicable() {
        let ts: Vec<_> = (0..6).map(|i| trial(i, &[1.0], 1.0, Verdict::Violated)).collect();
        let r = refs(&ts);
        let opts = MineOptions::default();
        let v = classify(&r, &mine_constraints(&r, &opts), &opts);
        assert_eq!(v.status, Status::Inapplicable);
        assert!(v.explanation.holds_witnesses.is_empty());
    }

    #[test]
    fn undetermined_reports_best_rejected() {
        // Identical inputs with opposite verdicts: no atom can separate them.
        let ts: Vec<_> = (0..10)
            .map(|i| trial(i, &[1.0, 2.0], 1.0, if i % 2 == 0 { Verdict::Holds } else { Verdict::Violated }))
            .collect();
        let r = refs(&ts);
        let opts = MineOptions::default();
        let mined = mine_constraints(&r, &opts);
        assert!(mined.as_ref().unwrap().ranked.is_empty());
        let v = classify(&r, &mined, &opts);
        assert_eq!(v.status, Status::Undetermined);
        let rej = v.explanation.rejected.as_ref().unwrap();
        assert_eq!(rej.metrics.precision, 0.5);
        assert!(v.explanation.text.contains("below"));
    }

    #[test]
    fn apply_constraint_examples() {
        let ts = nonneg_fixture();
        let r = refs(&ts);
        let p = apply_constraint(&[Atom::flag("all_nonneg", true)], &r);
        assert_eq!(p.in_region.len(), 6);
        assert_eq!(apply_constraint(&[], &r).in_region.len(), 12);
        let both = [Atom::ge("min_elem", 0.0), Atom::le("list_len", 1.0)];
        let p = apply_constraint(&both, &r);
        let expect: Vec<usize> = ts
            .iter()
            .enumerate()
            .filter(|(_, t)| {
                let xs = t.source_input.values();
                xs.len() <= 1 && xs.iter().all(|&x| x >= 0.0) && !xs.is_empty()
            })
            .map(|(i, _)| i)
            .collect();
        assert_eq!(p.in_region, expect);
    }

    #[test]
    fn mixed_groups_and_mutants_rejected() {
        let mut ts = nonneg_fixture();
        ts[3].mr_id = "other".into();
        assert!(matches!(mine_constraints(&refs(&ts), &MineOptions::default()), Err(MineError::MixedGroup(_))));
        let mut ts = nonneg_fixture();
        ts[0].mutant_id = Some("m1".into());
        assert!(matches!(mine_all(&ts, &MineOptions::default()), Err(MineError::MutantTrials(_))));
    }

    #[test]
    fn relaxed_precision_grows_candidates() {
        let ts = nonneg_fixture();
        let r = refs(&ts);
        let strict = mine_constraints(&r, &MineOptions::default()).unwrap();
        let loose = mine_constraints(&r, &MineOptions { min_precision: 0.5, ..MineOptions::default() }).unwrap();
        assert!(loose.total_candidates >= strict.total_candidates);
    }

    #[test]
    fn max_results_truncates_but_counts() {
        let ts = nonneg_fixture();
        let r = refs(&ts);
        let full = mine_constraints(&r, &MineOptions { max_results: 10_000, min_support: 1, ..MineOptions::default() }).unwrap();
        let few = mine_constraints(&r, &MineOptions { max_results: 3, min_support: 1, ..MineOptions::default() }).unwrap();
        assert_eq!(few.total_candidates, full.total_candidates);
        assert_eq!(few.ranked[..], full.ranked[..3]);
    }
}
