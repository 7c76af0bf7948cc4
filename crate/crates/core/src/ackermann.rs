//! Exact evaluation of the Ackermann table a_{i,j} and its inverses.
//!
//! The displayed recurrence is evaluated literally: a_{1,j} = 2^j,
//! a_{i,1} = 2, and a_{i,j} = w · a_{i−1,w} with w = a_{i,j−1}.  Note that
//! the literal recurrence gives a_{2,2} = 8, not 2^2; this implementation
//! follows the recurrence and makes no use of closed forms beyond row 1.

use std::fmt;
use std::sync::Mutex;

use num_bigint::BigUint;
use num_traits::One;
use once_cell::sync::Lazy;
use thiserror::Error;

/// Default saturation cap: 2^4096.
pub const DEFAULT_CAP_BITS: u64 = 4096;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AckError {
    #[error("indices must be ≥ 1")]
    BadIndex,
    #[error("target {0} exceeds the saturation cap")]
    AboveCap(u64),
}

/// An Ackermann-table entry: exact, or saturated at the configured cap.
/// Arithmetic on saturated values stays saturated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AckValue {
    Exact(BigUint),
    Saturated,
}

impl AckValue {
    pub fn is_saturated(&self) -> bool {
        matches!(self, AckValue::Saturated)
    }

    /// Compares against a machine-word threshold; saturated values dominate.
    pub fn at_least(&self, m: u64) -> bool {
        match self {
            AckValue::Exact(v) => *v >= BigUint::from(m),
            AckValue::Saturated => true,
        }
    }

    pub fn exact(&self) -> Option<&BigUint> {
        match self {
            AckValue::Exact(v) => Some(v),
            AckValue::Saturated => None,
        }
    }
}

impl fmt::Display for AckValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AckValue::Exact(v) => write!(f, "{v}"),
            AckValue::Saturated => write!(f, "SATURATED"),
        }
    }
}

#[derive(Debug, Default, Clone)]
struct Row {
    vals: Vec<AckValue>,
    saturated: bool,
}

/// Memoized Ackermann table with a saturation cap.
pub struct AckTable {
    cap_bits: u64,
    cap: BigUint,
    rows: Mutex<Vec<Row>>,
}

impl AckTable {
    pub fn with_cap_bits(cap_bits: u64) -> Self {
        AckTable {
            cap_bits,
            cap: BigUint::one() << cap_bits,
            rows: Mutex::new(Vec::new()),
        }
    }

    pub fn cap_bits(&self) -> u64 {
        self.cap_bits
    }

    /// a_{i,j} for i, j ≥ 1.
    pub fn ack(&self, i: u64, j: u64) -> Result<AckValue, AckError> {
        if i == 0 || j == 0 {
            return Err(AckError::BadIndex);
        }
        if i == 1 {
            return Ok(if j <= self.cap_bits {
                AckValue::Exact(BigUint::one() << j)
            } else {
                AckValue::Saturated
            });
        }
        loop {
            {
                let rows = self.rows.lock().unwrap();
                if let Some(row) = rows.get(i as usize) {
                    if row.saturated && row.vals.len() < j as usize {
                        return Ok(AckValue::Saturated);
                    }
                    if let Some(v) = row.vals.get(j as usize - 1) {
                        return Ok(v.clone());
                    }
                }
            }
            self.extend_row(i, j)?;
        }
    }

    /// Computes row i up to column j (or up to its saturation point).
    fn extend_row(&self, i: u64, j: u64) -> Result<(), AckError> {
        let (mut vals, saturated) = {
            let rows = self.rows.lock().unwrap();
            match rows.get(i as usize) {
                Some(r) => (r.vals.clone(), r.saturated),
                None => (Vec::new(), false),
            }
        };
        if !saturated {
            while (vals.len() as u64) < j {
                let next = if vals.is_empty() {
                    AckValue::Exact(BigUint::from(2u32))
                } else {
                    match vals.last().unwrap() {
                        AckValue::Saturated => AckValue::Saturated,
                        AckValue::Exact(w) => {
                            // a_{i,j} ≥ 2^j for all i, so w beyond the cap's
                            // bit count forces saturation of w · a_{i−1,w}.
                            if *w > BigUint::from(self.cap_bits) {
                                AckValue::Saturated
                            } else {
                                let wv: u64 = w.try_into().expect("w bounded by cap_bits");
                                match self.ack(i - 1, wv)? {
                                    AckValue::Saturated => AckValue::Saturated,
                                    AckValue::Exact(sub) => {
                                        let prod = w * sub;
                                        if prod > self.cap {
                                            AckValue::Saturated
                                        } else {
                                            AckValue::Exact(prod)
                                        }
                                    }
                                }
                            }
                        }
                    }
                };
                let is_sat = next.is_saturated();
                vals.push(next);
                if is_sat {
                    break;
                }
            }
        }
        let mut rows = self.rows.lock().unwrap();
        if rows.len() <= i as usize {
            rows.resize(i as usize + 1, Row::default());
        }
        let row = &mut rows[i as usize];
        if vals.len() > row.vals.len() {
            row.saturated = vals.last().is_some_and(AckValue::is_saturated);
            row.vals = vals;
        }
        Ok(())
    }

    /// Minimal j with a_{i,j} ≥ m.
    pub fn row_inverse(&self, i: u64, m: u64) -> Result<u64, AckError> {
        if i == 0 || m == 0 {
            return Err(AckError::BadIndex);
        }
        if BigUint::from(m) > self.cap {
            return Err(AckError::AboveCap(m));
        }
        let mut j = 1u64;
        loop {
            if self.ack(i, j)?.at_least(m) {
                return Ok(j);
            }
            j += 1;
        }
    }

    /// α(n,m) = min{i ≥ 1 | a_{i,j} ≥ m}, where j = max{⌈n/m⌉, 3}.
    pub fn alpha(&self, n: u64, m: u64) -> Result<u64, AckError> {
        if n == 0 || m == 0 {
            return Err(AckError::BadIndex);
        }
        let j = n.div_ceil(m).max(3);
        let mut i = 1u64;
        loop {
            if self.ack(i, j)?.at_least(m) {
                return Ok(i);
            }
            i += 1;
        }
    }

    /// α(n) = α(n, n).
    pub fn alpha1(&self, n: u64) -> Result<u64, AckError> {
        self.alpha(n, n)
    }
}

static DEFAULT_TABLE: Lazy<AckTable> = Lazy::new(|| AckTable::with_cap_bits(DEFAULT_CAP_BITS));

pub fn ack(i: u64, j: u64) -> Result<AckValue, AckError> {
    DEFAULT_TABLE.ack(i, j)
}

pub fn row_inverse(i: u64, m: u64) -> Result<u64, AckError> {
    DEFAULT_TABLE.row_inverse(i, m)
}

pub fn alpha(n: u64, m: u64) -> Result<u64, AckError> {
    DEFAULT_TABLE.alpha(n, m)
}

pub fn alpha1(n: u64) -> Result<u64, AckError> {
    DEFAULT_TABLE.alpha1(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact(i: u64, j: u64) -> BigUint {
        match ack(i, j).unwrap() {
            AckValue::Exact(v) => v,
            AckValue::Saturated => panic!("a_{{{i},{j}}} saturated"),
        }
    }

    #[test]
    fn first_row_is_powers_of_two() {
        for j in 1..=20 {
            assert_eq!(exact(1, j), BigUint::one() << j);
        }
    }

    #[test]
    fn first_column_is_two() {
        for i in 1..=10 {
            assert_eq!(exact(i, 1), BigUint::from(2u32));
        }
    }

    #[test]
    fn literal_recurrence_values() {
        assert_eq!(exact(2, 2), BigUint::from(8u32));
        assert_eq!(exact(2, 3), BigUint::from(2048u32));
        assert_eq!(exact(3, 2), BigUint::from(16u32));
        // a_{2,4} = 2048 · 2^2048
        assert_eq!(exact(2, 4), BigUint::from(2048u32) * (BigUint::one() << 2048));
    }

    #[test]
    fn saturation() {
        assert!(ack(2, 5).unwrap().is_saturated());
        assert!(ack(1, 5000).unwrap().is_saturated());
        assert!(!ack(1, 4096).unwrap().is_saturated());
    }

    #[test]
    fn strictly_increasing_in_j() {
        for i in 1..=4u64 {
            let mut prev: Option<BigUint> = None;
            for j in 1..=6u64 {
                match ack(i, j).unwrap() {
                    AckValue::Exact(v) => {
                        if let Some(p) = prev {
                            assert!(v > p, "a_{{{i},{j}}} not increasing");
                        }
                        prev = Some(v);
                    }
                    AckValue::Saturated => break,
                }
            }
        }
    }

    #[test]
    fn row_inverse_examples() {
        assert_eq!(row_inverse(1, 8).unwrap(), 3);
        for i in 1..=6 {
            assert_eq!(row_inverse(i, 2).unwrap(), 1);
        }
        assert_eq!(row_inverse(2, 9).unwrap(), 3);
    }

    #[test]
    fn row_inverse_inverts_ack() {
        for i in 1..=3u64 {
            for j in 1..=4u64 {
                if let AckValue::Exact(v) = ack(i, j).unwrap() {
                    if let Ok(small) = u64::try_from(&v) {
                        assert_eq!(row_inverse(i, small).unwrap(), j, "i={i} j={j}");
                    }
                }
            }
        }
    }

    #[test]
    fn alpha_examples() {
        assert_eq!(alpha(8, 8).unwrap(), 1);
        assert_eq!(alpha(9, 9).unwrap(), 2);
        assert_eq!(alpha1(8).unwrap(), 1);
        for n in 2..=6u64 {
            assert_eq!(alpha(n, 2).unwrap(), 1);
        }
    }

    #[test]
    fn alpha_monotone_sampled() {
        let grid: Vec<u64> = vec![1, 2, 3, 8, 9, 100, 2048, 2049, 100_000, 1_000_000];
        for &m in &grid {
            let mut prev: Option<u64> = None;
            for &n in &grid {
                let a = alpha(n, m).unwrap();
                if let Some(p) = prev {
                    assert!(a <= p, "alpha not non-increasing in n? n={n} m={m}");
                }
                prev = Some(a);
            }
        }
        // non-decreasing in m for fixed n
        for &n in &grid {
            let mut prev: Option<u64> = None;
            for &m in grid.iter().filter(|&&m| m <= n.max(2)) {
                let a = alpha(n, m).unwrap();
                if let Some(p) = prev {
                    assert!(a >= p, "alpha not non-decr in m? n={n} m={m}");
                }
                prev = Some(a);
            }
        }
    }
}
