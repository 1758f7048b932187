//! Keys with a deterministic total order.
//!
//! A key is an extended integer (a finite value or the `-inf` sentinel) paired
//! with the insertion serial of its node. Keys compare by value first and by
//! serial second, so no two live nodes ever compare equal.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Finite integer or the negative-infinity sentinel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KeyValue {
    NegInf,
    Finite(i64),
}

impl KeyValue {
    pub fn is_neg_inf(self) -> bool {
        matches!(self, KeyValue::NegInf)
    }

    pub fn finite(self) -> Option<i64> {
        match self {
            KeyValue::Finite(v) => Some(v),
            KeyValue::NegInf => None,
        }
    }
}

impl Ord for KeyValue {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (KeyValue::NegInf, KeyValue::NegInf) => Ordering::Equal,
            (KeyValue::NegInf, KeyValue::Finite(_)) => Ordering::Less,
            (KeyValue::Finite(_), KeyValue::NegInf) => Ordering::Greater,
            (KeyValue::Finite(a), KeyValue::Finite(b)) => a.cmp(b),
        }
    }
}

impl PartialOrd for KeyValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for KeyValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KeyValue::NegInf => f.write_str("-inf"),
            KeyValue::Finite(v) => write!(f, "{v}"),
        }
    }
}

/// Amount subtracted by a decrease-key: a nonnegative integer or infinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Delta {
    Finite(i64),
    Infinite,
}

impl fmt::Display for Delta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Delta::Finite(d) => write!(f, "{d}"),
            Delta::Infinite => f.write_str("inf"),
        }
    }
}

/// A node key. Ordered lexicographically by `(value, serial)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Key {
    pub value: KeyValue,
    pub serial: u64,
}

impl Key {
    pub fn new(value: i64, serial: u64) -> Self {
        Key {
            value: KeyValue::Finite(value),
            serial,
        }
    }

    /// Key after subtracting `delta`. Saturates into the sentinel only for
    /// an infinite delta; finite arithmetic is checked.
    pub fn decreased(self, delta: Delta) -> Option<Key> {
        let value = match (self.value, delta) {
            (_, Delta::Infinite) | (KeyValue::NegInf, _) => KeyValue::NegInf,
            (KeyValue::Finite(v), Delta::Finite(d)) => KeyValue::Finite(v.checked_sub(d)?),
        };
        Some(Key { value, ..self })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neg_inf_is_below_everything() {
        let inf = Key {
            value: KeyValue::NegInf,
            serial: 99,
        };
        assert!(inf < Key::new(i64::MIN, 0));
    }

    #[test]
    fn ties_break_by_serial() {
        assert!(Key::new(0, 1) < Key::new(0, 2));
        assert!(Key::new(-1, 9) < Key::new(0, 0));
    }

    #[test]
    fn decrease() {
        assert_eq!(Key::new(-2, 0).decreased(Delta::Finite(1)), Some(Key::new(-3, 0)));
        assert!(Key::new(5, 0).decreased(Delta::Infinite).unwrap().value.is_neg_inf());
        assert_eq!(Key::new(i64::MIN, 0).decreased(Delta::Finite(1)), None);
    }
}
