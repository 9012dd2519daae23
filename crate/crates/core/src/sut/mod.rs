//! Subject functions under test: the built-in corpus, its mutants, and
//! externally hosted SUTs reached over a line-delimited JSON protocol.

pub mod builtin;
mod external;

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::InputKind;
use crate::input::Input;

pub use builtin::EMPTY_INPUT;
pub use external::{load_external, ExternalError, ExternalSpec, ExternalSut, DEFAULT_TIMEOUT};

use builtin::{builtin_suts, Kernel};

/// Failure reason for outputs that are NaN or infinite.
pub const NON_FINITE_OUTPUT: &str = "non-finite-output";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputKind {
    Int,
    Float,
}

/// Ground-truth properties, established analytically for builtins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleFlag {
    OrderInsensitive,
    MonotoneInElements,
    SignSymmetric,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Implementation {
    Builtin(String),
    External { command: String, args: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MutantDescriptor {
    pub id: String,
    pub parent_sut: String,
    pub description: String,
    pub implementation: Implementation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SutDescriptor {
    pub id: String,
    pub input_kind: InputKind,
    pub output_kind: OutputKind,
    pub implementation: Implementation,
    pub oracle_flags: BTreeSet<OracleFlag>,
    pub mutants: Vec<MutantDescriptor>,
}

impl SutDescriptor {
    pub fn has_flag(&self, flag: OracleFlag) -> bool {
        self.oracle_flags.contains(&flag)
    }

    pub fn mutant(&self, id: &str) -> Option<&MutantDescriptor> {
        self.mutants.iter().find(|m| m.id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SutOutcome {
    Value(f64),
    Failure(String),
}

impl SutOutcome {
    pub fn value(&self) -> Option<f64> {
        match self {
            SutOutcome::Value(v) => Some(*v),
            SutOutcome::Failure(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InvokeError {
    #[error("input does not conform to {expected}")]
    KindMismatch { expected: InputKind },
    #[error("no implementation registered for `{0}`")]
    UnknownTarget(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("external SUT timed out")]
    Timeout,
}

/// A SUT or one of its mutants.
#[derive(Debug, Clone, Copy)]
pub enum Target<'a> {
    Sut(&'a SutDescriptor),
    Mutant(&'a SutDescriptor, &'a MutantDescriptor),
}

impl<'a> Target<'a> {
    pub fn sut(&self) -> &'a SutDescriptor {
        match self {
            Target::Sut(s) | Target::Mutant(s, _) => s,
        }
    }

    pub fn mutant_id(&self) -> Option<&'a str> {
        match self {
            Target::Sut(_) => None,
            Target::Mutant(_, m) => Some(&m.id),
        }
    }

    fn implementation(&self) -> &'a Implementation {
        match self {
            Target::Sut(s) => &s.implementation,
            Target::Mutant(_, m) => &m.implementation,
        }
    }
}

impl fmt::Display for Target<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Sut(s) => f.write_str(&s.id),
            Target::Mutant(s, m) => write!(f, "{}:{}", s.id, m.id),
        }
    }
}

/// Immutable after construction; safe to share across worker threads.
pub struct Registry {
    suts: Vec<SutDescriptor>,
    kernels: HashMap<String, Kernel<f64>>,
    externals: HashMap<String, ExternalSut>,
}

impl Registry {
    pub fn empty() -> Self {
        Registry {
            suts: Vec::new(),
            kernels: HashMap::new(),
            externals: HashMap::new(),
        }
    }

    /// The built-in corpus with every hand-seeded mutant.
    pub fn builtin() -> Self {
        let mut reg = Registry::empty();
        for b in builtin_suts::<f64>() {
            let mutants = b
                .mutants
                .iter()
                .map(|m| {
                    reg.kernels.insert(m.id.clone(), m.kernel);
                    MutantDescriptor {
                        id: m.id.clone(),
                        parent_sut: b.id.to_string(),
                        description: m.description.to_string(),
                        implementation: Implementation::Builtin(m.id.clone()),
                    }
                })
                .collect();
            reg.kernels.insert(b.id.to_string(), b.kernel);
            reg.suts.push(SutDescriptor {
                id: b.id.to_string(),
                input_kind: b.input_kind,
                output_kind: b.output_kind,
                implementation: Implementation::Builtin(b.id.to_string()),
                oracle_flags: b.flags.iter().copied().collect(),
                mutants,
            });
        }
        reg
    }

    /// Adds an external SUT. An id already present is replaced.
    pub fn add_external(&mut self, ext: ExternalSut) {
        let id = ext.descriptor.id.clone();
        self.suts.retain(|s| s.id != id);
        self.suts.push(ext.descriptor.clone());
        self.externals.insert(id, ext);
    }

    pub fn list_suts(&self) -> &[SutDescriptor] {
        &self.suts
    }

    pub fn get(&self, id: &str) -> Option<&SutDescriptor> {
        self.suts.iter().find(|s| s.id == id)
    }

    pub fn target(&self, sut: &str, mutant: Option<&str>) -> Option<Target<'_>> {
        let s = self.get(sut)?;
        match mutant {
            None => Some(Target::Sut(s)),
            Some(m) => Some(Target::Mutant(s, s.mutant(m)?)),
        }
    }

    pub fn invoke(&self, target: Target<'_>, input: &Input<f64>) -> Result<SutOutcome, InvokeError> {
        self.invoke_with_id(target, input, "0")
    }

    /// `request_id` is echoed through the external protocol.
    pub fn invoke_with_id(
        &self,
        target: Target<'_>,
        input: &Input<f64>,
        request_id: &str,
    ) -> Result<SutOutcome, InvokeError> {
        let sut = target.sut();
        if !input.conforms(sut.input_kind) {
            return Err(InvokeError::KindMismatch {
                expected: sut.input_kind,
            });
        }
        let outcome = match target.implementation() {
            Implementation::Builtin(name) => {
                let kernel = self
                    .kernels
                    .get(name)
                    .ok_or_else(|| InvokeError::UnknownTarget(name.clone()))?;
                let r = match (kernel, input) {
                    (Kernel::List(f), Input::List(xs)) => f(xs),
                    (Kernel::Scalar(f), Input::Scalar(x)) => f(*x),
                    _ => {
                        return Err(InvokeError::KindMismatch {
                            expected: sut.input_kind,
                        })
                    }
                };
                match r {
                    Ok(v) => SutOutcome::Value(v),
                    Err(reason) => SutOutcome::Failure(reason.to_string()),
                }
            }
            Implementation::External { .. } => self
                .externals
                .get(&sut.id)
                .ok_or_else(|| InvokeError::UnknownTarget(sut.id.clone()))?
                .invoke(request_id, input)?,
        };
        Ok(match outcome {
            SutOutcome::Value(v) if !v.is_finite() => SutOutcome::Failure(NON_FINITE_OUTPUT.into()),
            other => other,
        })
    }
}

impl Default for Registry {
    fn default() -> Self {
        Registry::builtin()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_registry_contents() {
        let reg = Registry::builtin();
        let ids: Vec<_> = reg.list_suts().iter().map(|s| s.id.as_str()).collect();
        for id in [
            "sum", "min", "max", "mean", "median", "product", "count_positive", "abs_sum",
            "range_span", "sorted_check", "sum_of_squares", "clamped_sum",
        ] {
            assert!(ids.contains(&id), "{id}");
        }
        assert!(ids.len() >= 25);
        let sum = reg.get("sum").unwrap();
        assert_eq!(sum.input_kind, InputKind::ListFloat);
        assert!(sum.has_flag(OracleFlag::OrderInsensitive));
        assert!(reg.get("no_such_sut").is_none());
        let again: Vec<_> = Registry::builtin().list_suts().iter().map(|s| s.id.clone()).collect();
        assert_eq!(again, ids);
    }

    #[test]
    fn invoke_examples() {
        let reg = Registry::builtin();
        let sum = reg.target("sum", None).unwrap();
        assert_eq!(reg.invoke(sum, &Input::List(vec![1.0, 2.0, 3.0])), Ok(SutOutcome::Value(6.0)));
        let min = reg.target("min", None).unwrap();
        assert_eq!(
            reg.invoke(min, &Input::List(vec![])),
            Ok(SutOutcome::Failure(EMPTY_INPUT.into()))
        );
        let m = reg.target("sum", Some("sum_mutant_plus_to_minus")).unwrap();
        assert_eq!(reg.invoke(m, &Input::List(vec![1.0, 2.0, 3.0])), Ok(SutOutcome::Value(-4.0)));
    }

    #[test]
    fn kind_mismatch_is_an_error() {
        let reg = Registry::builtin();
        let sum = reg.target("sum", None).unwrap();
        assert!(matches!(reg.invoke(sum, &Input::Scalar(1.0)), Err(InvokeError::KindMismatch { .. })));
    }

    #[test]
    fn non_finite_output_is_a_failure() {
        let reg = Registry::builtin();
        let p = reg.target("product", None).unwrap();
        let big = Input::List(vec![1e300, 1e300]);
        assert_eq!(reg.invoke(p, &big), Ok(SutOutcome::Failure(NON_FINITE_OUTPUT.into())));
    }
}
