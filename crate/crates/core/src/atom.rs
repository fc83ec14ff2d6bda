use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// A point of an atomic measure space.
///
/// Canonical order: integers by `|i|` with the nonnegative one first
/// (`0, 1, -1, 2, -2, ...`); pairs by `|i + j|`, then componentwise.
/// Integers precede pairs.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AtomId {
    Int(i64),
    Pair(i64, i64),
}

impl AtomId {
    fn key(&self) -> (u8, u128, i128, i128) {
        match *self {
            AtomId::Int(i) => (0, i.unsigned_abs() as u128, (i < 0) as i128, 0),
            AtomId::Pair(i, j) => (1, (i as i128 + j as i128).unsigned_abs(), i as i128, j as i128),
        }
    }
}

impl Ord for AtomId {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

impl PartialOrd for AtomId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for AtomId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AtomId::Int(i) => write!(f, "{i}"),
            AtomId::Pair(i, j) => write!(f, "({i},{j})"),
        }
    }
}

impl FromStr for AtomId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || Error::ParseAtom(s.to_string());
        let t = s.trim();
        if let Some(inner) = t.strip_prefix('(').and_then(|r| r.strip_suffix(')')) {
            let (a, b) = inner.split_once(',').ok_or_else(err)?;
            let a = a.trim().parse().map_err(|_| err())?;
            let b = b.trim().parse().map_err(|_| err())?;
            Ok(AtomId::Pair(a, b))
        } else {
            t.parse().map(AtomId::Int).map_err(|_| err())
        }
    }
}
