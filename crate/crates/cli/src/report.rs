//! The report document every command emits, and the exit-code contract.

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use unicov::quotient::Counterexample;
use unicov::PointId;

use crate::io::InputDigest;

pub const SCHEMA: &str = "unicov-report/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    /// Every verdict is as claimed.
    Ok,
    /// A verifier found a counterexample.
    Counterexample,
    /// A budget ran out before a verdict.
    Inconclusive,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::Counterexample => 1,
            Status::Inconclusive => 2,
        }
    }

    /// The worse of two statuses.
    pub fn and(self, other: Status) -> Status {
        self.max(other)
    }
}

impl PartialOrd for Status {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Status {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        let rank = |s: &Status| match s {
            Status::Ok => 0,
            Status::Inconclusive => 1,
            Status::Counterexample => 2,
        };
        rank(self).cmp(&rank(other))
    }
}

pub const INPUT_ERROR: i32 = 3;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budgets {
    pub radius: usize,
    pub ident_budget: usize,
    pub coset_rows: usize,
    pub product_bound: usize,
    pub group_bound: usize,
}

/// A fixed element moving a point within a scale.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmallMotion {
    pub scale: usize,
    pub permutation: Vec<PointId>,
    pub point: PointId,
}

/// What `verify --replay` re-checks, and against which input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Replay {
    Map {
        input: String,
        sha256: String,
        counterexamples: Vec<Counterexample>,
    },
    Action {
        input: String,
        sha256: String,
        motions: Vec<SmallMotion>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub command: Value,
    pub inputs: Vec<InputDigest>,
    pub budgets: Budgets,
    pub status: Status,
    pub exit_code: i32,
    pub result: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replay: Option<Replay>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<u128>,
}

/// JSON number when it fits, decimal string otherwise.
pub fn int(v: &BigInt) -> Value {
    i64::try_from(v).map_or_else(|_| Value::String(v.to_string()), Value::from)
}

pub fn ints(v: &[BigInt]) -> Value {
    Value::Array(v.iter().map(int).collect())
}
