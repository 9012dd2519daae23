//! Kill matrices and mutation scores for unconstrained vs. constrained MR suites.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::executor::{TrialRecord, Verdict};
use crate::miner::{ConstraintReport, FeatureVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Unconstrained,
    Constrained,
}

pub const MODES: [Mode; 2] = [Mode::Unconstrained, Mode::Constrained];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Cell {
    Killed,
    Survived,
    NoData,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("constraint report is stale: {what} hash {found} does not match {expected}")]
    StaleConstraints { what: &'static str, expected: String, found: String },
}

/// Fails unless the report was mined against this catalog and dataset.
pub fn check_provenance(report: &ConstraintReport, catalog_hash: &str, dataset_hash: &str) -> Result<(), EvalError> {
    for (what, expected, found) in [
        ("catalog", &report.catalog_hash, catalog_hash),
        ("dataset", &report.dataset_hash, dataset_hash),
    ] {
        if expected != found {
            return Err(EvalError::StaleConstraints { what, expected: expected.clone(), found: found.to_string() });
        }
    }
    Ok(())
}

/// Whether a trial is admitted by `mode`. Constrained mode admits by the
/// mined verdict of the trial's (SUT, MR); groups without one admit nothing.
pub fn admitted(report: &ConstraintReport, mode: Mode, t: &TrialRecord) -> bool {
    match mode {
        Mode::Unconstrained => true,
        Mode::Constrained => report
            .verdict(&t.sut_id, &t.mr_id)
            .is_some_and(|v| v.admits(&FeatureVector::extract(t))),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MutantKey {
    pub sut: String,
    pub mutant: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KillMatrix {
    pub mutants: Vec<MutantKey>,
    pub mrs: Vec<String>,
    /// `cells[(mutant, mr, mode)]`; every combination is present.
    #[serde(skip)]
    pub cells: BTreeMap<(MutantKey, String, Mode), Cell>,
    /// Mutants whose every trial was an ERROR.
    pub degenerate: Vec<MutantKey>,
}

impl KillMatrix {
    pub fn cell(&self, m: &MutantKey, mr: &str, mode: Mode) -> Cell {
        self.cells.get(&(m.clone(), mr.to_string(), mode)).copied().unwrap_or(Cell::NoData)
    }

    pub fn killed(&self, m: &MutantKey, mode: Mode) -> bool {
        self.mrs.iter().any(|mr| self.cell(m, mr, mode) == Cell::Killed)
    }
}

/// Builds the kill matrix from mutant trials. `expected` lists every mutant
/// that should appear, so mutants without matching MRs still count.
pub fn kill_matrix(trials: &[TrialRecord], report: &ConstraintReport, expected: &[MutantKey]) -> KillMatrix {
    #[derive(Default)]
    struct Acc {
        admitted: usize,
        violated: usize,
    }
    let mut acc: BTreeMap<(MutantKey, String, Mode), Acc> = BTreeMap::new();
    let mut mrs = BTreeSet::new();
    let mut all_error: BTreeMap<MutantKey, bool> = expected.iter().map(|k| (k.clone(), true)).collect();
    for t in trials {
        let Some(m) = &t.mutant_id else { continue };
        let key = MutantKey { sut: t.sut_id.clone(), mutant: m.clone() };
        mrs.insert(t.mr_id.clone());
        let e = all_error.entry(key.clone()).or_insert(true);
        *e &= t.verdict == Verdict::Error;
        for mode in MODES {
            let a = acc.entry((key.clone(), t.mr_id.clone(), mode)).or_default();
            if t.verdict != Verdict::Error && admitted(report, mode, t) {
                a.admitted += 1;
                a.violated += usize::from(t.verdict == Verdict::Violated);
            }
        }
    }
    let mutants: Vec<MutantKey> = all_error.keys().cloned().collect();
    let mrs: Vec<String> = mrs.into_iter().collect();
    let mut cells = BTreeMap::new();
    for m in &mutants {
        for mr in &mrs {
            for mode in MODES {
                let cell = match acc.get(&(m.clone(), mr.clone(), mode)) {
                    Some(a) if a.violated > 0 => Cell::Killed,
                    Some(a) if a.admitted > 0 => Cell::Survived,
                    _ => Cell::NoData,
                };
                cells.insert((m.clone(), mr.clone(), mode), cell);
            }
        }
    }
    let degenerate = all_error
        .iter()
        .filter(|(k, &e)| e && acc.keys().any(|(m, _, _)| m == *k))
        .map(|(k, _)| k.clone())
        .collect();
    KillMatrix { mutants, mrs, cells, degenerate }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FalsePositives {
    pub admitted: usize,
    pub violated: usize,
    /// `violated / admitted`; null when nothing was admitted.
    pub rate: Option<f64>,
}

/// VIOLATED trials on unmutated SUTs among admitted non-ERROR trials.
pub fn false_positives(trials: &[TrialRecord], report: &ConstraintReport, mode: Mode) -> FalsePositives {
    let (mut admitted_n, mut violated) = (0, 0);
    for t in trials.iter().filter(|t| t.mutant_id.is_none() && t.verdict != Verdict::Error) {
        if admitted(report, mode, t) {
            admitted_n += 1;
            violated += usize::from(t.verdict == Verdict::Violated);
        }
    }
    FalsePositives {
        admitted: admitted_n,
        violated,
        rate: (admitted_n > 0).then(|| violated as f64 / admitted_n as f64),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeScore {
    pub killed: usize,
    pub total: usize,
    /// `killed / total`; null when there are no mutants.
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseCell {
    pub sut: String,
    pub mutant: String,
    pub mr: String,
    pub mode: Mode,
    pub cell: Cell,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairBreakdown {
    pub sut: String,
    pub mr: String,
    pub status: Option<crate::miner::Status>,
    pub mutants: usize,
    pub killed_unconstrained: usize,
    pub killed_constrained: usize,
    pub false_positives_unconstrained: FalsePositives,
    pub false_positives_constrained: FalsePositives,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FalsePositiveSection {
    pub seed: u64,
    pub unconstrained: FalsePositives,
    pub constrained: FalsePositives,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MutationReport {
    pub catalog_hash: String,
    pub dataset_hash: String,
    pub constraints_hash: String,
    pub seed: u64,
    pub mutant_count: usize,
    pub scores: BTreeMap<Mode, ModeScore>,
    pub held_in: FalsePositiveSection,
    pub held_out: Option<FalsePositiveSection>,
    /// Killed and no-data cells; any cell not listed survived.
    pub matrix: Vec<SparseCell>,
    pub degenerate_mutants: Vec<MutantKey>,
    pub breakdown: Vec<PairBreakdown>,
}

pub struct ScoreInputs<'a> {
    pub catalog_hash: &'a str,
    pub dataset_hash: &'a str,
    pub constraints_hash: &'a str,
    pub seed: u64,
    /// Mutant and unmutated trials on the evaluation dataset.
    pub trials: &'a [TrialRecord],
    /// Unmutated trials on a fresh dataset, with its seed.
    pub held_out: Option<(u64, &'a [TrialRecord])>,
}

pub fn mode_score(matrix: &KillMatrix, mode: Mode) -> ModeScore {
    let killed = matrix.mutants.iter().filter(|m| matrix.killed(m, mode)).count();
    let total = matrix.mutants.len();
    ModeScore { killed, total, score: (total > 0).then(|| killed as f64 / total as f64) }
}

/// Assembles the report from a kill matrix and the trial logs it came from.
pub fn score(matrix: &KillMatrix, report: &ConstraintReport, inputs: &ScoreInputs<'_>) -> MutationReport {
    let scores = MODES.iter().map(|&m| (m, mode_score(matrix, m))).collect();
    let section = |seed, trials: &[TrialRecord]| FalsePositiveSection {
        seed,
        unconstrained: false_positives(trials, report, Mode::Unconstrained),
        constrained: false_positives(trials, report, Mode::Constrained),
    };
    let mut matrix_cells = Vec::new();
    for ((m, mr, mode), cell) in &matrix.cells {
        if *cell != Cell::Survived {
            matrix_cells.push(SparseCell {
                sut: m.sut.clone(),
                mutant: m.mutant.clone(),
                mr: mr.clone(),
                mode: *mode,
                cell: *cell,
            });
        }
    }
    let mut pairs: BTreeMap<(String, String), Vec<&TrialRecord>> = BTreeMap::new();
    for t in inputs.trials {
        pairs.entry((t.sut_id.clone(), t.mr_id.clone())).or_default().push(t);
    }
    let breakdown = pairs
        .into_iter()
        .map(|((sut, mr), ts)| {
            let base: Vec<TrialRecord> = ts.iter().filter(|t| t.mutant_id.is_none()).map(|t| (*t).clone()).collect();
            let muts: Vec<&MutantKey> = matrix.mutants.iter().filter(|k| k.sut == sut).collect();
            let kills = |mode| muts.iter().filter(|k| matrix.cell(k, &mr, mode) == Cell::Killed).count();
            PairBreakdown {
                status: report.verdict(&sut, &mr).map(|v| v.status),
                mutants: muts.len(),
                killed_unconstrained: kills(Mode::Unconstrained),
                killed_constrained: kills(Mode::Constrained),
                false_positives_unconstrained: false_positives(&base, report, Mode::Unconstrained),
                false_positives_constrained: false_positives(&base, report, Mode::Constrained),
                sut,
                mr,
            }
        })
        .collect();
    MutationReport {
        catalog_hash: inputs.catalog_hash.into(),
        dataset_hash: inputs.dataset_hash.into(),
        constraints_hash: inputs.constraints_hash.into(),
        seed: inputs.seed,
        mutant_count: matrix.mutants.len(),
        scores,
        held_in: section(inputs.seed, inputs.trials),
        held_out: inputs.held_out.map(|(seed, ts)| section(seed, ts)),
        matrix: matrix_cells,
        degenerate_mutants: matrix.degenerate.clone(),
        breakdown,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::input::Input;
    use crate::miner::{Atom, ConstraintAtoms, Evidence, Explanation, MineOptions, MrSutVerdict, Status};

    fn t(sut: &str, mutant: Option<&str>, mr: &str, i: u64, xs: &[f64], v: Verdict) -> TrialRecord {
        TrialRecord {
            trial_id: crate::executor::trial_id(sut, mutant, mr, i, 0),
            sut_id: sut.into(),
            mutant_id: mutant.map(Into::into),
            mr_id: mr.into(),
            param_binding: Default::default(),
            source_input: Input::List(xs.to_vec()),
            followup_input: None,
            source_output: None,
            followup_output: None,
            verdict: v,
            error_detail: None,
            seed_path: vec![0, i, 0],
        }
    }

    fn verdict(mr: &str, status: Status, atoms: Option<Vec<Atom>>) -> MrSutVerdict {
        MrSutVerdict {
            sut: "s".into(),
            mr: mr.into(),
            status,
            constraint: atoms.map(|atoms| ConstraintAtoms { atoms }),
            metrics: None,
            evidence: Evidence::default(),
            explanation: crate::miner::explain(Status::Applicable, None, None, false, &[], &MineOptions::default()),
            total_candidates: 0,
            candidates: vec![],
        }
    }

    fn report(verdicts: Vec<MrSutVerdict>) -> ConstraintReport {
        ConstraintReport {
            catalog_hash: "c".into(),
            dataset_hash: "d".into(),
            trials_hash: "t".into(),
            options: MineOptions::default(),
            verdicts,
        }
    }

    #[test]
    fn constrained_region_decides_kills() {
        let rep = report(vec![
            verdict("a", Status::Conditional, Some(vec![Atom::flag("all_nonneg", true)])),
            verdict("b", Status::Inapplicable, None),
        ]);
        let trials = vec![
            t("s", Some("m1"), "a", 0, &[-1.0], Verdict::Violated),
            t("s", Some("m1"), "a", 1, &[1.0], Verdict::Holds),
            t("s", Some("m2"), "a", 0, &[-1.0], Verdict::Holds),
            t("s", Some("m2"), "a", 1, &[1.0], Verdict::Violated),
            t("s", Some("m1"), "b", 0, &[1.0], Verdict::Violated),
            t("s", Some("m2"), "b", 0, &[1.0], Verdict::Error),
        ];
        let k = kill_matrix(&trials, &rep, &[]);
        let m1 = MutantKey { sut: "s".into(), mutant: "m1".into() };
        let m2 = MutantKey { sut: "s".into(), mutant: "m2".into() };
        assert_eq!(k.cell(&m1, "a", Mode::Unconstrained), Cell::Killed);
        assert_eq!(k.cell(&m1, "a", Mode::Constrained), Cell::Survived);
        assert_eq!(k.cell(&m2, "a", Mode::Constrained), Cell::Killed);
        assert_eq!(k.cell(&m1, "b", Mode::Constrained), Cell::NoData);
        assert_eq!(k.cell(&m2, "b", Mode::Unconstrained), Cell::NoData);
        assert!(k.degenerate.is_empty());
        assert_eq!(mode_score(&k, Mode::Unconstrained).score, Some(1.0));
        assert_eq!(mode_score(&k, Mode::Constrained).score, Some(0.5));
    }

    #[test]
    fn zero_mutants_score_is_null() {
        let k = kill_matrix(&[], &report(vec![]), &[]);
        let s = mode_score(&k, Mode::Constrained);
        assert_eq!(s.score, None);
        assert_eq!(serde_json::to_value(&s).unwrap()["score"], serde_json::Value::Null);
    }

    #[test]
    fn error_never_kills_and_flags_degenerate() {
        let trials = vec![
            t("s", Some("m"), "a", 0, &[1.0], Verdict::Error),
            t("s", Some("m"), "a", 1, &[2.0], Verdict::Error),
        ];
        let k = kill_matrix(&trials, &report(vec![verdict("a", Status::Applicable, None)]), &[]);
        let m = MutantKey { sut: "s".into(), mutant: "m".into() };
        assert_eq!(k.cell(&m, "a", Mode::Unconstrained), Cell::NoData);
        assert_eq!(k.degenerate, vec![m]);
    }

    #[test]
    fn false_positive_rates() {
        let rep = report(vec![verdict("a", Status::Conditional, Some(vec![Atom::ge("min_elem", 0.0)]))]);
        let trials = vec![
            t("s", None, "a", 0, &[-1.0], Verdict::Violated),
            t("s", None, "a", 1, &[1.0], Verdict::Holds),
            t("s", None, "a", 2, &[2.0], Verdict::Holds),
            t("s", None, "a", 3, &[], Verdict::Error),
        ];
        let u = false_positives(&trials, &rep, Mode::Unconstrained);
        assert_eq!((u.admitted, u.violated), (3, 1));
        let c = false_positives(&trials, &rep, Mode::Constrained);
        assert_eq!((c.admitted, c.violated, c.rate), (2, 0, Some(0.0)));
    }

    #[test]
    fn provenance_check() {
        let rep = report(vec![]);
        assert!(check_provenance(&rep, "c", "d").is_ok());
        assert!(matches!(check_provenance(&rep, "x", "d"), Err(EvalError::StaleConstraints { what: "catalog", .. })));
        assert!(matches!(check_provenance(&rep, "c", "x"), Err(EvalError::StaleConstraints { what: "dataset", .. })));
    }

    #[test]
    fn explanation_is_structural() {
        let e: Explanation = verdict("a", Status::Applicable, None).explanation;
        assert_eq!(e.template, "applicable.no-violations");
    }
}
