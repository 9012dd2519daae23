//! Seeded random test data.
//!
//! Every datum has its own generator keyed by `mix(stratum_seed, index)`, so
//! a dataset is a pure function of (input kind, profiles, seed) and strata can
//! be generated independently.

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::InputKind;
use crate::input::Input;
use crate::seed::{mix, rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignMix {
    Any,
    Nonneg,
    Nonpos,
    MixedForced,
}

impl SignMix {
    pub fn as_str(self) -> &'static str {
        match self {
            SignMix::Any => "any",
            SignMix::Nonneg => "nonneg",
            SignMix::Nonpos => "nonpos",
            SignMix::MixedForced => "mixed-forced",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenProfile {
    pub n: usize,
    pub len_range: [usize; 2],
    pub value_range: [f64; 2],
    pub sign_mix: SignMix,
    pub duplicates_allowed: bool,
    /// Decimal places of the value grid; `None` draws full-precision floats.
    pub decimals: Option<u32>,
}

impl Default for GenProfile {
    fn default() -> Self {
        GenProfile {
            n: 200,
            len_range: [1, 12],
            value_range: [-100.0, 100.0],
            sign_mix: SignMix::Any,
            duplicates_allowed: true,
            decimals: Some(2),
        }
    }
}

/// Four strata (any, nonneg, nonpos, mixed-forced) sharing `n` as evenly as
/// possible; earlier strata take the remainder and empty strata are dropped.
pub fn default_profiles(n: usize) -> Vec<GenProfile> {
    let strata = [SignMix::Any, SignMix::Nonneg, SignMix::Nonpos, SignMix::MixedForced];
    strata
        .iter()
        .enumerate()
        .map(|(i, &sign_mix)| GenProfile {
            n: n / 4 + usize::from(i < n % 4),
            sign_mix,
            ..GenProfile::default()
        })
        .filter(|p| p.n > 0)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenError {
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("malformed dataset line {line}: {reason}")]
    Format { line: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestDatum {
    pub datum_id: u64,
    pub values: Input<f64>,
    pub stratum: String,
}

/// Values are drawn from either an integer grid `k / scale` or a continuous range.
#[derive(Debug, Clone, Copy)]
enum Sampler {
    Grid { kmin: i64, kmax: i64, scale: f64 },
    Continuous { lo: f64, hi: f64 },
}

impl Sampler {
    fn draw(&self, r: &mut ChaCha8Rng) -> f64 {
        match *self {
            Sampler::Grid { kmin, kmax, scale } => r.random_range(kmin..=kmax) as f64 / scale,
            Sampler::Continuous { lo, hi } => r.random_range(lo..=hi),
        }
    }

    /// Strictly positive (or negative) subset, if nonempty.
    fn signed(&self, positive: bool) -> Option<Sampler> {
        match *self {
            Sampler::Grid { kmin, kmax, scale } => {
                let (a, b) = if positive { (kmin.max(1), kmax) } else { (kmin, kmax.min(-1)) };
                (a <= b).then_some(Sampler::Grid { kmin: a, kmax: b, scale })
            }
            Sampler::Continuous { lo, hi } => {
                if positive && hi > 0.0 {
                    Some(Sampler::Continuous { lo: lo.max(f64::MIN_POSITIVE), hi })
                } else if !positive && lo < 0.0 {
                    Some(Sampler::Continuous { lo, hi: hi.min(-f64::MIN_POSITIVE) })
                } else {
                    None
                }
            }
        }
    }

    fn capacity(&self) -> f64 {
        match *self {
            Sampler::Grid { kmin, kmax, .. } => (kmax - kmin + 1) as f64,
            Sampler::Continuous { .. } => f64::INFINITY,
        }
    }
}

struct Plan {
    kind: InputKind,
    profile: GenProfile,
    values: Sampler,
    forced: Option<(Sampler, Sampler)>,
}

impl Plan {
    fn new(kind: InputKind, profile: &GenProfile) -> Result<Self, GenError> {
        let bad = |m: String| Err(GenError::InvalidProfile(m));
        let [min_len, max_len] = profile.len_range;
        let [lo, hi] = profile.value_range;
        if profile.n == 0 {
            return bad("n must be at least 1".into());
        }
        if min_len > max_len {
            return bad(format!("len_range [{min_len}, {max_len}] is empty"));
        }
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return bad(format!("value_range [{lo}, {hi}] must be finite with lo < hi"));
        }
        let (lo, hi) = match profile.sign_mix {
            SignMix::Nonneg => (lo.max(0.0), hi),
            SignMix::Nonpos => (lo, hi.min(0.0)),
            SignMix::Any | SignMix::MixedForced => (lo, hi),
        };
        if lo > hi {
            return bad(format!("value_range has no {} values", profile.sign_mix.as_str()));
        }
        let decimals = if kind.is_int() { Some(0) } else { profile.decimals };
        let values = match decimals {
            Some(d) if d > 9 => return bad(format!("{d} decimals exceeds the supported 9")),
            Some(d) => {
                let scale = 10f64.powi(d as i32);
                let (kmin, kmax) = ((lo * scale).ceil(), (hi * scale).floor());
                if kmin > kmax || kmin.abs() > 9.0e15 || kmax.abs() > 9.0e15 {
                    return bad(format!("no grid points of {d} decimals in [{lo}, {hi}]"));
                }
                Sampler::Grid { kmin: kmin as i64, kmax: kmax as i64, scale }
            }
            None => Sampler::Continuous { lo, hi },
        };
        let forced = if profile.sign_mix == SignMix::MixedForced {
            match (values.signed(true), values.signed(false)) {
                (Some(p), Some(n)) => Some((p, n)),
                _ => return bad("mixed-forced needs both positive and negative values".into()),
            }
        } else {
            None
        };
        if kind.is_list() && !profile.duplicates_allowed && values.capacity() < max_len as f64 {
            return bad("too few distinct values for lists without duplicates".into());
        }
        Ok(Plan { kind, profile: profile.clone(), values, forced })
    }

    fn draw_distinct(&self, s: &Sampler, r: &mut ChaCha8Rng, taken: &[f64]) -> f64 {
        let mut v = s.draw(r);
        if !self.profile.duplicates_allowed {
            // Capacity was checked up front, so this terminates quickly in practice.
            for _ in 0..10_000 {
                if !taken.contains(&v) {
                    break;
                }
                v = s.draw(r);
            }
        }
        v
    }

    /// Overwrites one element with a draw from `s` unless some element already
    /// satisfies `has`. Elements of the opposite sign are spared when possible,
    /// so an earlier forced value survives.
    fn force_sign(&self, xs: &mut [f64], s: &Sampler, r: &mut ChaCha8Rng, has: impl Fn(f64) -> bool) {
        if xs.iter().any(|&x| has(x)) {
            return;
        }
        let zeros: Vec<usize> = (0..xs.len()).filter(|&i| xs[i] == 0.0).collect();
        let i = match zeros.choose(r) {
            Some(&i) => i,
            None => r.random_range(0..xs.len()),
        };
        let others: Vec<f64> = xs.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &x)| x).collect();
        xs[i] = self.draw_distinct(s, r, &others);
    }

    fn datum(&self, r: &mut ChaCha8Rng) -> Input<f64> {
        if !self.kind.is_list() {
            return Input::Scalar(self.values.draw(r));
        }
        let [min_len, max_len] = self.profile.len_range;
        let len = r.random_range(min_len..=max_len);
        let mut xs: Vec<f64> = Vec::with_capacity(len);
        for _ in 0..len {
            let v = self.draw_distinct(&self.values, r, &xs);
            xs.push(v);
        }
        if let (Some((pos, neg)), true) = (self.forced, len >= 2) {
            self.force_sign(&mut xs, &pos, r, |x| x > 0.0);
            self.force_sign(&mut xs, &neg, r, |x| x < 0.0);
        }
        Input::List(xs)
    }
}

pub fn generate_dataset(kind: InputKind, profile: &GenProfile, seed: u64) -> Result<Vec<TestDatum>, GenError> {
    stratify(kind, std::slice::from_ref(profile), seed)
}

/// Concatenates one dataset per profile, each generated from
/// `mix(seed, stratum_index)`. Datum ids run consecutively from 0.
pub fn stratify(kind: InputKind, profiles: &[GenProfile], seed: u64) -> Result<Vec<TestDatum>, GenError> {
    if profiles.is_empty() {
        return Err(GenError::InvalidProfile("at least one profile is required".into()));
    }
    let plans = profiles
        .iter()
        .map(|p| Plan::new(kind, p))
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = Vec::with_capacity(profiles.iter().map(|p| p.n).sum());
    for (s, plan) in plans.iter().enumerate() {
        let child = mix(seed, s as u64);
        for i in 0..plan.profile.n {
            let mut r = rng(mix(child, i as u64));
            out.push(TestDatum {
                datum_id: out.len() as u64,
                values: plan.datum(&mut r),
                stratum: plan.profile.sign_mix.as_str().to_string(),
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Filtered {
    pub data: Vec<TestDatum>,
    /// False when the quota was not filled within the draw budget.
    pub complete: bool,
    pub draws: u64,
}

/// Rejection sampling: draws round-robin over the profiles until `n` data
/// satisfy `accept` or `max_draws` draws have been made.
pub fn generate_filtered(
    kind: InputKind,
    profiles: &[GenProfile],
    seed: u64,
    n: usize,
    max_draws: u64,
    accept: impl Fn(&Input<f64>) -> bool,
) -> Result<Filtered, GenError> {
    if profiles.is_empty() {
        return Err(GenError::InvalidProfile("at least one profile is required".into()));
    }
    let plans = profiles
        .iter()
        .map(|p| Plan::new(kind, p))
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = Vec::new();
    let mut draw = 0u64;
    while out.len() < n && draw < max_draws {
        let s = (draw % plans.len() as u64) as usize;
        let mut r = rng(mix(mix(seed, s as u64), draw));
        let values = plans[s].datum(&mut r);
        draw += 1;
        if accept(&values) {
            out.push(TestDatum {
                datum_id: out.len() as u64,
                values,
                stratum: plans[s].profile.sign_mix.as_str().to_string(),
            });
        }
    }
    let complete = out.len() == n;
    Ok(Filtered { data: out, complete, draws: draw })
}

pub fn to_jsonl(data: &[TestDatum]) -> String {
    let mut s = String::new();
    for d in data {
        s.push_str(&serde_json::to_string(d).expect("datum serializes"));
        s.push('\n');
    }
    s
}

pub fn from_jsonl(text: &str) -> Result<Vec<TestDatum>, GenError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| GenError::Format {
                line: i + 1,
                reason: e.to_string(),
            })
        })
        .collect()
}
