use serde::{Deserialize, Serialize};

use super::features::{FeatureValue, FeatureVector};
use super::search::{display_atoms, Atom, AtomOp, Constraint, Metrics};
use super::{Evidence, MineOptions, Status};
use crate::executor::{TrialRecord, Verdict};

const WITNESSES: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Boundary {
    pub feature: String,
    pub op: AtomOp,
    pub threshold: FeatureValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejected {
    pub atoms: Vec<Atom>,
    pub metrics: Metrics,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    /// Rationale template id, e.g. `conditional.region`.
    pub template: String,
    pub text: String,
    pub holds_witnesses: Vec<String>,
    pub violated_witnesses: Vec<String>,
    pub error_witnesses: Vec<String>,
    pub boundary: Option<Boundary>,
    pub in_region: Option<Evidence>,
    pub out_region: Option<Evidence>,
    pub rejected: Option<Rejected>,
}

/// Distance of a trial from an atom's boundary. Flags use a numeric proxy
/// where one exists (`all_nonneg` is `min_elem >= 0`, `all_nonpos` is
/// `max_elem <= 0`); undefined values are infinitely far.
fn distance(atom: &Atom, fv: &FeatureVector) -> f64 {
    let num = |name: &str, t: f64| match fv.get(name) {
        Some(FeatureValue::Num(x)) => (x - t).abs(),
        _ => f64::INFINITY,
    };
    match (atom.feature.as_str(), atom.value) {
        (_, FeatureValue::Num(t)) => num(&atom.feature, t),
        ("all_nonneg", _) => num("min_elem", 0.0),
        ("all_nonpos", _) => num("max_elem", 0.0),
        _ => 0.0,
    }
}

fn witnesses(trials: &[&TrialRecord], verdict: Verdict, boundary: Option<&Atom>) -> Vec<String> {
    let mut ws: Vec<(f64, &str)> = trials
        .iter()
        .filter(|t| t.verdict == verdict)
        .map(|t| {
            let d = boundary.map_or(0.0, |a| distance(a, &FeatureVector::extract(t)));
            (d, t.trial_id.as_str())
        })
        .collect();
    ws.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(b.1)));
    ws.into_iter().take(WITNESSES).map(|(_, id)| id.to_string()).collect()
}

/// Structural explanation of a verdict: counts, boundary and the witness
/// trials nearest to it. Every witness id comes from `trials`.
pub fn explain(
    status: Status,
    constraint: Option<&Constraint>,
    rejected: Option<&Constraint>,
    insufficient: bool,
    trials: &[&TrialRecord],
    options: &MineOptions,
) -> Explanation {
    let ev = Evidence::count(trials);
    let boundary_atom = constraint.or(rejected).and_then(|c| c.atoms.first());
    let mut e = Explanation {
        template: String::new(),
        text: String::new(),
        holds_witnesses: Vec::new(),
        violated_witnesses: Vec::new(),
        error_witnesses: witnesses(trials, Verdict::Error, None),
        boundary: boundary_atom.map(|a| Boundary { feature: a.feature.clone(), op: a.op, threshold: a.value }),
        in_region: None,
        out_region: None,
        rejected: None,
    };
    let errors = if ev.error > 0 {
        format!("; {} ERROR trials excluded from both classes", ev.error)
    } else {
        String::new()
    };
    match status {
        Status::Applicable => {
            e.template = "applicable.no-violations".into();
            e.text = format!("all {} evaluated trials hold{errors}", ev.holds);
            e.holds_witnesses = witnesses(trials, Verdict::Holds, None);
        }
        Status::Inapplicable => {
            e.template = "inapplicable.no-holds".into();
            e.text = format!("all {} evaluated trials violate the relation{errors}", ev.violated);
            e.violated_witnesses = witnesses(trials, Verdict::Violated, None);
        }
        Status::Conditional => {
            let c = constraint.expect("conditional verdicts carry a constraint");
            let (mut inside, mut outside) = (Evidence::default(), Evidence::default());
            for t in trials {
                if c.matches(&FeatureVector::extract(t)) {
                    inside.add(t.verdict);
                } else {
                    outside.add(t.verdict);
                }
            }
            e.template = "conditional.region".into();
            e.text = format!(
                "{} of {} trials with {} hold (precision {}); outside it {} hold and {} violate{errors}",
                inside.holds,
                c.metrics.support,
                display_atoms(&c.atoms),
                c.metrics.precision,
                outside.holds,
                outside.violated,
            );
            e.holds_witnesses = witnesses(trials, Verdict::Holds, boundary_atom);
            e.violated_witnesses = witnesses(trials, Verdict::Violated, boundary_atom);
            e.in_region = Some(inside);
            e.out_region = Some(outside);
        }
        Status::Undetermined if insufficient => {
            e.template = "undetermined.insufficient-data".into();
            e.text = format!(
                "only {} non-ERROR trials, {} required{errors}",
                ev.holds + ev.violated,
                options.min_support
            );
        }
        Status::Undetermined => {
            e.template = "undetermined.no-candidate".into();
            e.holds_witnesses = witnesses(trials, Verdict::Holds, boundary_atom);
            e.violated_witnesses = witnesses(trials, Verdict::Violated, boundary_atom);
            match rejected {
                Some(r) => {
                    let reason = format!(
                        "precision {} below the required {}",
                        r.metrics.precision, options.min_precision
                    );
                    e.text = format!(
                        "{} hold and {} violate; best candidate {} rejected: {reason}{errors}",
                        ev.holds,
                        ev.violated,
                        display_atoms(&r.atoms)
                    );
                    e.rejected = Some(Rejected { atoms: r.atoms.clone(), metrics: r.metrics, reason });
                }
                None => {
                    e.text = format!(
                        "{} hold and {} violate; no candidate reaches support {}{errors}",
                        ev.holds, ev.violated, options.min_support
                    );
                }
            }
        }
    }
    e
}
