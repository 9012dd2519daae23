//! Exhaustive search over conjunctions of at most two atoms.
//!
//! Thresholds are the feature values observed in the trial set. One-atom
//! candidates come from a sorted sweep per (feature, direction). Two-atom
//! candidates fix the first atom as a bitset and sweep the second family
//! restricted to it, so each family pair costs one pass per first atom.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeSet, BinaryHeap};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::features::{FeatureValue, FeatureVector, FLAG_FEATURES, NUMERIC_FEATURES};
use super::{Evidence, MineError, MineOptions};
use crate::executor::{TrialRecord, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AtomOp {
    Ge,
    Le,
    Eq,
}

impl AtomOp {
    pub fn symbol(self) -> &'static str {
        match self {
            AtomOp::Ge => ">=",
            AtomOp::Le => "<=",
            AtomOp::Eq => "=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub feature: String,
    pub op: AtomOp,
    pub value: FeatureValue,
}

impl Atom {
    pub fn ge(feature: &str, t: f64) -> Self {
        Atom { feature: feature.into(), op: AtomOp::Ge, value: FeatureValue::Num(t) }
    }

    pub fn le(feature: &str, t: f64) -> Self {
        Atom { feature: feature.into(), op: AtomOp::Le, value: FeatureValue::Num(t) }
    }

    pub fn flag(feature: &str, v: bool) -> Self {
        Atom { feature: feature.into(), op: AtomOp::Eq, value: FeatureValue::Flag(v) }
    }

    /// Atoms over undefined features, unknown names or mismatched types never match.
    pub fn matches(&self, fv: &FeatureVector) -> bool {
        match (fv.get(&self.feature), self.op, self.value) {
            (Some(FeatureValue::Num(x)), AtomOp::Ge, FeatureValue::Num(t)) => x >= t,
            (Some(FeatureValue::Num(x)), AtomOp::Le, FeatureValue::Num(t)) => x <= t,
            (Some(FeatureValue::Num(x)), AtomOp::Eq, FeatureValue::Num(t)) => x == t,
            (Some(FeatureValue::Flag(b)), AtomOp::Eq, FeatureValue::Flag(v)) => b == v,
            _ => false,
        }
    }

    /// Canonical order used for tie-breaking: feature name, operator, value.
    pub fn cmp_lex(&self, other: &Atom) -> Ordering {
        self.feature
            .cmp(&other.feature)
            .then(self.op.cmp(&other.op))
            .then_with(|| match (self.value, other.value) {
                (FeatureValue::Num(a), FeatureValue::Num(b)) => a.total_cmp(&b),
                (FeatureValue::Flag(a), FeatureValue::Flag(b)) => a.cmp(&b),
                (FeatureValue::Flag(_), FeatureValue::Num(_)) => Ordering::Less,
                (FeatureValue::Num(_), FeatureValue::Flag(_)) => Ordering::Greater,
            })
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.value {
            FeatureValue::Num(t) => write!(f, "{} {} {}", self.feature, self.op.symbol(), t),
            FeatureValue::Flag(b) => write!(f, "{} {} {}", self.feature, self.op.symbol(), b),
        }
    }
}

pub fn display_atoms(atoms: &[Atom]) -> String {
    if atoms.is_empty() {
        return "true".into();
    }
    atoms.iter().map(Atom::to_string).collect::<Vec<_>>().join(" and ")
}

fn cmp_atoms(a: &[Atom], b: &[Atom]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.cmp_lex(y) {
            Ordering::Equal => {}
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub support: usize,
    pub precision: f64,
    pub coverage: f64,
}

impl Metrics {
    /// `support` non-ERROR trials in the region, `holds` of them HOLD, out of
    /// `total_holds` HOLDS overall. Precision of an empty region is 0.
    pub fn from_counts(support: usize, holds: usize, total_holds: usize) -> Self {
        Metrics {
            support,
            precision: if support == 0 { 0.0 } else { holds as f64 / support as f64 },
            coverage: if total_holds == 0 { 0.0 } else { holds as f64 / total_holds as f64 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub atoms: Vec<Atom>,
    pub metrics: Metrics,
}

impl Constraint {
    pub fn matches(&self, fv: &FeatureVector) -> bool {
        self.atoms.iter().all(|a| a.matches(fv))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub in_region: Vec<usize>,
    pub out_region: Vec<usize>,
}

/// Splits trial indices by whether every atom matches the trial's features.
pub fn apply_constraint(atoms: &[Atom], trials: &[&TrialRecord]) -> Partition {
    let (mut in_region, mut out_region) = (Vec::new(), Vec::new());
    for (i, t) in trials.iter().enumerate() {
        let fv = FeatureVector::extract(t);
        if atoms.iter().all(|a| a.matches(&fv)) {
            in_region.push(i);
        } else {
            out_region.push(i);
        }
    }
    Partition { in_region, out_region }
}

/// Brute-force metrics of a conjunction over a trial set; ERROR trials are ignored.
pub fn constraint_metrics(atoms: &[Atom], trials: &[&TrialRecord]) -> Metrics {
    let mut support = 0;
    let mut holds = 0;
    let mut total_holds = 0;
    for t in trials {
        if t.verdict == Verdict::Error {
            continue;
        }
        let h = t.verdict == Verdict::Holds;
        total_holds += usize::from(h);
        if atoms.iter().all(|a| a.matches(&FeatureVector::extract(t))) {
            support += 1;
            holds += usize::from(h);
        }
    }
    Metrics::from_counts(support, holds, total_holds)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MineResult {
    /// Accepted candidates, best first, truncated to `max_results`.
    pub ranked: Vec<Constraint>,
    /// Number of accepted candidates before truncation.
    pub total_candidates: u64,
    /// Highest-precision candidate that met `min_support` but not `min_precision`.
    pub best_rejected: Option<Constraint>,
    pub evidence: Evidence,
}

struct Bits(Vec<u64>);

impl Bits {
    fn new(n: usize) -> Self {
        Bits(vec![0; n.div_ceil(64)])
    }
    fn set(&mut self, i: usize) {
        self.0[i >> 6] |= 1 << (i & 63);
    }
    fn get(&self, i: usize) -> bool {
        (self.0[i >> 6] >> (i & 63)) & 1 == 1
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Dir {
    Ge,
    Le,
}

enum Family {
    /// Rows with a defined value, ordered so prefixes are `feature >= t` (or `<= t`).
    Num { feature: usize, dir: Dir, order: Vec<usize> },
    Flag { feature: usize, value: bool },
}

struct Table<'a> {
    holds: Vec<bool>,
    total_holds: usize,
    num_names: Vec<String>,
    num: Vec<Vec<Option<f64>>>,
    flag: Vec<Vec<bool>>,
    opts: &'a MineOptions,
}

/// A one-atom candidate with its member set.
struct Single {
    family: usize,
    atom: Atom,
    set: Bits,
    size: usize,
}

/// Ordering for the accepted list: coverage desc, atom count asc, support desc, atoms lex.
struct Ranked(Constraint, usize);

impl Ranked {
    fn key(&self) -> (Reverse<usize>, usize, Reverse<usize>) {
        (Reverse(self.1), self.0.atoms.len(), Reverse(self.0.metrics.support))
    }
}

impl PartialEq for Ranked {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Ranked {}
impl PartialOrd for Ranked {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Ranked {
    fn cmp(&self, o: &Self) -> Ordering {
        self.key().cmp(&o.key()).then_with(|| cmp_atoms(&self.0.atoms, &o.0.atoms))
    }
}

struct Collector<'a> {
    table: &'a Table<'a>,
    heap: BinaryHeap<Ranked>,
    total: u64,
    rejected: Option<(Constraint, usize)>,
}

impl Collector<'_> {
    /// `atoms` is only called when the candidate may be kept.
    fn offer(&mut self, n_atoms: usize, support: usize, holds: usize, atoms: impl Fn() -> Vec<Atom>) {
        let opts = self.table.opts;
        if support < opts.min_support || support == 0 {
            return;
        }
        let build = || {
            let mut a = atoms();
            a.sort_by(Atom::cmp_lex);
            a
        };
        let key = (Reverse(holds), n_atoms, Reverse(support));
        if holds as f64 / support as f64 >= opts.min_precision {
            self.total += 1;
            if self.heap.len() >= opts.max_results
                && key > self.heap.peek().expect("heap is full").key()
            {
                return;
            }
            let m = Metrics::from_counts(support, holds, self.table.total_holds);
            self.heap.push(Ranked(Constraint { atoms: build(), metrics: m }, holds));
            if self.heap.len() > opts.max_results {
                self.heap.pop();
            }
            return;
        }
        // Rejected: keep the best by precision, then the accepted-list order.
        let better = match &self.rejected {
            None => true,
            Some((c, h0)) => {
                let s0 = c.metrics.support;
                match (holds * s0).cmp(&(h0 * support)) {
                    Ordering::Greater => true,
                    Ordering::Less => false,
                    Ordering::Equal => match key.cmp(&(Reverse(*h0), c.atoms.len(), Reverse(s0))) {
                        Ordering::Less => true,
                        Ordering::Greater => false,
                        Ordering::Equal => cmp_atoms(&build(), &c.atoms) == Ordering::Less,
                    },
                }
            }
        };
        if better {
            let m = Metrics::from_counts(support, holds, self.table.total_holds);
            self.rejected = Some((Constraint { atoms: build(), metrics: m }, holds));
        }
    }
}

impl Table<'_> {
    fn families(&self) -> Vec<Family> {
        let mut out = Vec::new();
        for (feature, col) in self.num.iter().enumerate() {
            let mut asc: Vec<usize> = (0..col.len()).filter(|&i| col[i].is_some()).collect();
            asc.sort_by(|&a, &b| col[a].unwrap().total_cmp(&col[b].unwrap()).then(a.cmp(&b)));
            let desc: Vec<usize> = asc.iter().rev().copied().collect();
            out.push(Family::Num { feature, dir: Dir::Ge, order: desc });
            out.push(Family::Num { feature, dir: Dir::Le, order: asc });
        }
        for feature in 0..self.flag.len() {
            out.push(Family::Flag { feature, value: true });
            out.push(Family::Flag { feature, value: false });
        }
        out
    }

    fn num_atom(&self, feature: usize, dir: Dir, t: f64) -> Atom {
        let name = &self.num_names[feature];
        match dir {
            Dir::Ge => Atom::ge(name, t),
            Dir::Le => Atom::le(name, t),
        }
    }

    fn flag_atom(&self, feature: usize, value: bool) -> Atom {
        Atom::flag(FLAG_FEATURES[feature], value)
    }

    /// Same-feature pairs are only useful as intervals `t1 <= f <= t2`.
    fn compatible(fams: &[Family], i: usize, j: usize) -> bool {
        match (&fams[i], &fams[j]) {
            (Family::Num { feature: a, dir: da, .. }, Family::Num { feature: b, dir: db, .. }) => a != b || da != db,
            (Family::Flag { feature: a, .. }, Family::Flag { feature: b, .. }) => a != b,
            _ => true,
        }
    }

    /// Emits one candidate per distinct threshold of family `fam`, restricted
    /// to rows in `within` (all rows when `None`).
    fn sweep(
        &self,
        fam: &Family,
        within: Option<(&Bits, usize)>,
        mut emit: impl FnMut(Atom, usize, usize, usize),
    ) {
        let inside = |i: usize| within.is_none_or(|(b, _)| b.get(i));
        match fam {
            Family::Num { feature, dir, order } => {
                let col = &self.num[*feature];
                let (mut all, mut s, mut h, mut last_s) = (0usize, 0usize, 0usize, 0usize);
                for (k, &i) in order.iter().enumerate() {
                    all += 1;
                    if inside(i) {
                        s += 1;
                        h += usize::from(self.holds[i]);
                    }
                    let v = col[i].expect("ordered rows are defined");
                    let group_end = order.get(k + 1).is_none_or(|&n| col[n].expect("defined") != v);
                    if group_end && s > last_s {
                        last_s = s;
                        emit(self.num_atom(*feature, *dir, v), s, h, all);
                        if within.is_some_and(|(_, size)| s == size) {
                            break;
                        }
                    }
                }
            }
            Family::Flag { feature, value } => {
                let col = &self.flag[*feature];
                let (mut all, mut s, mut h) = (0usize, 0usize, 0usize);
                for (i, &v) in col.iter().enumerate() {
                    if v == *value {
                        all += 1;
                        if inside(i) {
                            s += 1;
                            h += usize::from(self.holds[i]);
                        }
                    }
                }
                if s > 0 {
                    emit(self.flag_atom(*feature, *value), s, h, all);
                }
            }
        }
    }

    fn members(&self, fam: &Family, atom: &Atom) -> Bits {
        let n = self.holds.len();
        let mut b = Bits::new(n);
        match fam {
            Family::Num { feature, dir, .. } => {
                let FeatureValue::Num(t) = atom.value else { unreachable!() };
                for (i, v) in self.num[*feature].iter().enumerate() {
                    if let Some(v) = v {
                        if (*dir == Dir::Ge && *v >= t) || (*dir == Dir::Le && *v <= t) {
                            b.set(i);
                        }
                    }
                }
            }
            Family::Flag { feature, value } => {
                for (i, v) in self.flag[*feature].iter().enumerate() {
                    if v == value {
                        b.set(i);
                    }
                }
            }
        }
        b
    }
}

/// Ranked constraints under which the MR holds for one (SUT, MR) group.
pub fn mine_constraints(trials: &[&TrialRecord], options: &MineOptions) -> Result<MineResult, MineError> {
    if let Some(first) = trials.first() {
        if let Some(t) = trials.iter().find(|t| t.sut_id != first.sut_id || t.mr_id != first.mr_id) {
            return Err(MineError::MixedGroup(t.trial_id.clone()));
        }
    }
    if let Some(t) = trials.iter().find(|t| t.mutant_id.is_some()) {
        return Err(MineError::MutantTrials(t.trial_id.clone()));
    }
    let evidence = Evidence::count(trials);
    let rows: Vec<(&TrialRecord, FeatureVector)> = trials
        .iter()
        .filter(|t| t.verdict != Verdict::Error)
        .map(|t| (*t, FeatureVector::extract(t)))
        .collect();
    if rows.len() < options.min_support.max(1) {
        return Err(MineError::InsufficientData { usable: rows.len(), min_support: options.min_support });
    }
    let params: BTreeSet<&str> = rows.iter().flat_map(|(_, f)| f.params.keys().map(String::as_str)).collect();
    let mut num_names: Vec<String> = NUMERIC_FEATURES.iter().map(|s| s.to_string()).collect();
    num_names.extend(params.iter().map(|s| s.to_string()));
    let table = Table {
        holds: rows.iter().map(|(t, _)| t.verdict == Verdict::Holds).collect(),
        total_holds: evidence.holds,
        num: num_names
            .iter()
            .map(|name| {
                rows.iter()
                    .map(|(_, f)| match f.get(name) {
                        Some(FeatureValue::Num(v)) => Some(v),
                        _ => None,
                    })
                    .collect()
            })
            .collect(),
        flag: FLAG_FEATURES
            .iter()
            .map(|name| rows.iter().map(|(_, f)| f.get(name) == Some(FeatureValue::Flag(true))).collect())
            .collect(),
        num_names,
        opts: options,
    };

    let mut col = Collector { table: &table, heap: BinaryHeap::new(), total: 0, rejected: None };
    col.offer(0, rows.len(), evidence.holds, Vec::new);

    let fams = table.families();
    let mut singles = Vec::new();
    for (fi, fam) in fams.iter().enumerate() {
        let mut found = Vec::new();
        table.sweep(fam, None, |atom, s, h, _| found.push((atom, s, h)));
        for (atom, s, h) in found {
            let a = atom.clone();
            col.offer(1, s, h, || vec![a.clone()]);
            if s >= options.min_support && s < rows.len() {
                let set = table.members(fam, &atom);
                singles.push(Single { family: fi, atom, set, size: s });
            }
        }
    }

    for first in &singles {
        for (fj, fam) in fams.iter().enumerate().skip(first.family + 1) {
            if !Table::compatible(&fams, first.family, fj) {
                continue;
            }
            table.sweep(fam, Some((&first.set, first.size)), |atom, s, h, all| {
                // Either atom alone already selects this set.
                if s == first.size || s == all {
                    return;
                }
                col.offer(2, s, h, || vec![first.atom.clone(), atom.clone()]);
            });
        }
    }

    let ranked = col.heap.into_sorted_vec().into_iter().map(|r| r.0).collect();
    Ok(MineResult {
        ranked,
        total_candidates: col.total,
        best_rejected: col.rejected.map(|(c, _)| c),
        evidence,
    })
}
