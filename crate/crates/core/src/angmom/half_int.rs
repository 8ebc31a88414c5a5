use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// An integer or half-integer quantum number, stored as twice its value.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HalfInt(i32);

impl HalfInt {
    pub const ZERO: HalfInt = HalfInt(0);
    pub const HALF: HalfInt = HalfInt(1);
    pub const ONE: HalfInt = HalfInt(2);

    #[inline]
    pub const fn from_twice(twice: i32) -> Self {
        HalfInt(twice)
    }

    #[inline]
    pub const fn from_int(value: i32) -> Self {
        HalfInt(2 * value)
    }

    #[inline]
    pub const fn twice(self) -> i32 {
        self.0
    }

    #[inline]
    pub fn value(self) -> f64 {
        f64::from(self.0) * 0.5
    }

    #[inline]
    pub const fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }

    /// Integer value, if this is an integer.
    #[inline]
    pub const fn as_int(self) -> Option<i32> {
        if self.is_integer() {
            Some(self.0 / 2)
        } else {
            None
        }
    }

    #[inline]
    pub const fn abs(self) -> Self {
        HalfInt(self.0.abs())
    }

    /// `j(j+1)`
    #[inline]
    pub fn casimir(self) -> f64 {
        let j = self.value();
        j * (j + 1.0)
    }

    /// Whether `m` is a valid projection of `self`: `|m| <= j` and `j - m` integer.
    #[inline]
    pub const fn admits(self, m: HalfInt) -> bool {
        self.0 >= 0 && m.0.abs() <= self.0 && (self.0 - m.0) % 2 == 0
    }

    /// Projections `-j, -j+1, ..., j`.
    pub fn projections(self) -> impl Iterator<Item = HalfInt> + Clone {
        (0..=self.0.max(-1)).map(move |k| HalfInt(2 * k - self.0))
    }

    /// `(-1)^self` for an integer value.
    ///
    /// Panics if `self` is a half-integer.
    #[inline]
    pub fn phase(self) -> f64 {
        assert!(self.is_integer(), "(-1)^{self} is not real");
        if (self.0 / 2) % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

impl From<i32> for HalfInt {
    fn from(value: i32) -> Self {
        HalfInt::from_int(value)
    }
}

impl Add for HalfInt {
    type Output = HalfInt;
    #[inline]
    fn add(self, rhs: HalfInt) -> HalfInt {
        HalfInt(self.0 + rhs.0)
    }
}

impl Sub for HalfInt {
    type Output = HalfInt;
    #[inline]
    fn sub(self, rhs: HalfInt) -> HalfInt {
        HalfInt(self.0 - rhs.0)
    }
}

impl Neg for HalfInt {
    type Output = HalfInt;
    #[inline]
    fn neg(self) -> HalfInt {
        HalfInt(-self.0)
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

/// Error from parsing a [`HalfInt`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseHalfIntError(String);

impl fmt::Display for ParseHalfIntError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "`{}` is not an integer or half-integer", self.0)
    }
}

impl std::error::Error for ParseHalfIntError {}

/// Accepts `3`, `-7/2` and `-3.5`.
impl FromStr for HalfInt {
    type Err = ParseHalfIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseHalfIntError(s.to_owned());
        let t = s.trim().replace('\u{2212}', "-");
        if let Some((num, den)) = t.split_once('/') {
            if den.trim() != "2" {
                return Err(err());
            }
            return num.trim().parse::<i32>().map(HalfInt).map_err(|_| err());
        }
        if let Ok(v) = t.parse::<i32>() {
            return v.checked_mul(2).map(HalfInt).ok_or_else(err);
        }
        let v: f64 = t.parse().map_err(|_| err())?;
        let twice = 2.0 * v;
        if !twice.is_finite() || twice.fract() != 0.0 || twice.abs() > f64::from(i32::MAX) {
            return Err(err());
        }
        Ok(HalfInt(twice as i32))
    }
}
