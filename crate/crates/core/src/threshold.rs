// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Exact rational thresholds.
//!
//! Both CAA thresholds are compared against integer counts ("at least 7 edges
//! for 0.7 of 10"), so the value is kept as the decimal fraction the user typed
//! and every comparison is done in integer arithmetic.

use std::fmt;

use crate::error::{Error, Result};

/// Digits kept after the decimal point. Longer expansions are truncated.
const MAX_FRACTION_DIGITS: u32 = 18;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    num: u128,
    den: u128,
    value: f64,
}

impl Threshold {
    /// Builds a threshold in `[0, 1]` from the shortest decimal form of `value`.
    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() || !(0.0..=1.0).contains(&value) {
            return Err(Error::InvalidParameter(format!(
                "threshold {value} is outside [0, 1]"
            )));
        }
        let text = format!("{value}");
        let (int_part, frac_part) = match text.split_once('.') {
            Some((i, f)) => (i, f),
            None => (text.as_str(), ""),
        };
        let frac_part = &frac_part[..frac_part.len().min(MAX_FRACTION_DIGITS as usize)];
        let den = 10u128.pow(frac_part.len() as u32);
        let int: u128 = int_part.parse().expect("formatted f64 integer part");
        let frac: u128 = if frac_part.is_empty() {
            0
        } else {
            frac_part.parse().expect("formatted f64 fraction")
        };
        Ok(Threshold {
            num: int * den + frac,
            den,
            value,
        })
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    /// `count >= self * size`, exactly.
    pub fn reached_by(&self, count: usize, size: usize) -> bool {
        (count as u128) * self.den >= self.num * (size as u128)
    }

    /// `count > self * size`, exactly.
    pub fn exceeded_by(&self, count: usize, size: usize) -> bool {
        (count as u128) * self.den > self.num * (size as u128)
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_products_are_exact() {
        let t = Threshold::new(0.7).unwrap();
        assert!(t.reached_by(7, 10));
        assert!(!t.reached_by(6, 10));
        // 0.7 * 9 = 6.3
        assert!(!t.reached_by(6, 9));
        assert!(t.reached_by(7, 9));
        assert!(t.exceeded_by(4, 5));
        assert!(!t.exceeded_by(3, 5) && t.exceeded_by(4, 5));

        // 0.1 * 3 is 0.30000000000000004 in floating point
        let t = Threshold::new(0.1).unwrap();
        assert!(t.reached_by(3, 30));
        assert!(!t.exceeded_by(3, 30));
    }

    #[test]
    fn bounds() {
        assert!(Threshold::new(-0.1).is_err());
        assert!(Threshold::new(1.5).is_err());
        assert!(Threshold::new(f64::NAN).is_err());
        let one = Threshold::new(1.0).unwrap();
        assert!(one.reached_by(5, 5));
        assert!(!one.exceeded_by(5, 5));
        assert!(Threshold::new(0.0).unwrap().is_zero());
    }
}
