use serde::de::{self, Deserializer};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

use crate::dsl::InputKind;
use crate::scalar::Scalar;

/// One SUT argument, a scalar or a list.
///
/// On the wire an input is the argument tuple: `[3.0]` for a scalar and
/// `[[1.0,2.0]]` for a list.
#[derive(Debug, Clone, PartialEq)]
pub enum Input<T> {
    Scalar(T),
    List(Vec<T>),
}

impl<T: Scalar> Input<T> {
    /// Elements as a slice; a scalar is a one-element slice.
    pub fn values(&self) -> &[T] {
        match self {
            Input::Scalar(v) => std::slice::from_ref(v),
            Input::List(xs) => xs,
        }
    }

    /// Value bound to the `n` symbol: list length, 1 for scalars.
    pub fn len(&self) -> usize {
        self.values().len()
    }

    pub fn is_empty(&self) -> bool {
        self.values().is_empty()
    }

    /// Shape matches the kind and, for int kinds, every value is integral.
    pub fn conforms(&self, kind: InputKind) -> bool {
        let shape = matches!(
            (self, kind.is_list()),
            (Input::Scalar(_), false) | (Input::List(_), true)
        );
        shape && (!kind.is_int() || self.values().iter().all(|v| v.fract() == T::zero()))
    }

    pub fn map<U>(&self, f: impl Fn(T) -> U) -> Input<U> {
        match self {
            Input::Scalar(v) => Input::Scalar(f(*v)),
            Input::List(xs) => Input::List(xs.iter().map(|x| f(*x)).collect()),
        }
    }
}

impl<T: Serialize> Serialize for Input<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(1))?;
        match self {
            Input::Scalar(v) => seq.serialize_element(v)?,
            Input::List(xs) => seq.serialize_element(xs)?,
        }
        seq.end()
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Arg<T> {
    List(Vec<T>),
    Scalar(T),
}

impl<'de, T: Deserialize<'de>> Deserialize<'de> for Input<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let mut args: Vec<Arg<T>> = Vec::deserialize(d)?;
        if args.len() != 1 {
            return Err(de::Error::invalid_length(args.len(), &"a one-argument tuple"));
        }
        Ok(match args.pop().expect("length checked") {
            Arg::List(xs) => Input::List(xs),
            Arg::Scalar(v) => Input::Scalar(v),
        })
    }
}
