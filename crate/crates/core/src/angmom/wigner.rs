use std::collections::HashMap;
use std::sync::{OnceLock, RwLock};

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::HalfInt;

type Key = [i32; 6];

/// Memo table of 3j symbols keyed on the raw doubled arguments.
///
/// Values are computed exactly and rounded once, so a hit is bit-identical to
/// a cold evaluation.
#[derive(Debug, Default)]
pub struct CoefCache {
    table: RwLock<HashMap<Key, f64>>,
}

impl CoefCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn wigner3j(
        &self,
        j1: HalfInt,
        j2: HalfInt,
        j3: HalfInt,
        m1: HalfInt,
        m2: HalfInt,
        m3: HalfInt,
    ) -> f64 {
        let key = [
            j1.twice(),
            j2.twice(),
            j3.twice(),
            m1.twice(),
            m2.twice(),
            m3.twice(),
        ];
        if !admissible(key) {
            return 0.0;
        }
        if let Some(&v) = self.table.read().expect("3j cache poisoned").get(&key) {
            return v;
        }
        let v = racah_exact(key);
        self.table
            .write()
            .expect("3j cache poisoned")
            .entry(key)
            .or_insert(v);
        v
    }

    pub fn len(&self) -> usize {
        self.table.read().expect("3j cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn global() -> &'static CoefCache {
    static CACHE: OnceLock<CoefCache> = OnceLock::new();
    CACHE.get_or_init(CoefCache::new)
}

/// Wigner 3j symbol. Returns exactly zero whenever a selection rule fails.
pub fn wigner3j(j1: HalfInt, j2: HalfInt, j3: HalfInt, m1: HalfInt, m2: HalfInt, m3: HalfInt) -> f64 {
    global().wigner3j(j1, j2, j3, m1, m2, m3)
}

/// Same value as [`wigner3j`], bypassing the process-wide cache.
pub fn wigner3j_uncached(
    j1: HalfInt,
    j2: HalfInt,
    j3: HalfInt,
    m1: HalfInt,
    m2: HalfInt,
    m3: HalfInt,
) -> f64 {
    let key = [
        j1.twice(),
        j2.twice(),
        j3.twice(),
        m1.twice(),
        m2.twice(),
        m3.twice(),
    ];
    if admissible(key) {
        racah_exact(key)
    } else {
        0.0
    }
}

/// Clebsch–Gordan coefficient `<j1 m1 j2 m2 | J M>`.
pub fn clebsch_gordan(j1: HalfInt, m1: HalfInt, j2: HalfInt, m2: HalfInt, j: HalfInt, m: HalfInt) -> f64 {
    let w = wigner3j(j1, j2, j, m1, m2, -m);
    if w == 0.0 {
        return 0.0;
    }
    let phase = (j1 - j2 + m).phase();
    phase * (f64::from(j.twice() + 1)).sqrt() * w
}

fn admissible([tj1, tj2, tj3, tm1, tm2, tm3]: Key) -> bool {
    let pair_ok = |tj: i32, tm: i32| tj >= 0 && tm.abs() <= tj && (tj - tm) % 2 == 0;
    pair_ok(tj1, tm1)
        && pair_ok(tj2, tm2)
        && pair_ok(tj3, tm3)
        && tm1 + tm2 + tm3 == 0
        && (tj1 + tj2 + tj3) % 2 == 0
        && tj3 >= (tj1 - tj2).abs()
        && tj3 <= tj1 + tj2
}

fn factorial(n: i32) -> BigUint {
    debug_assert!(n >= 0);
    (2..=n as u32).fold(BigUint::one(), |acc, k| acc * k)
}

/// Racah's single-sum formula in exact rational arithmetic.
fn racah_exact([tj1, tj2, tj3, tm1, tm2, tm3]: Key) -> f64 {
    // every combination below is an integer once the selection rules hold
    let h = |twice: i32| {
        debug_assert!(twice % 2 == 0);
        twice / 2
    };
    let a = h(tj1 + tj2 - tj3);
    let b = h(tj1 - tj2 + tj3);
    let c = h(-tj1 + tj2 + tj3);
    let total = h(tj1 + tj2 + tj3);

    let mut prefactor = factorial(a) * factorial(b) * factorial(c);
    for (tj, tm) in [(tj1, tm1), (tj2, tm2), (tj3, tm3)] {
        prefactor *= factorial(h(tj + tm)) * factorial(h(tj - tm));
    }
    let prefactor_den = factorial(total + 1);

    let k_min = 0.max(h(tj2 - tj3 - tm1)).max(h(tj1 - tj3 + tm2));
    let k_max = a.min(h(tj1 - tm1)).min(h(tj2 + tm2));

    let mut sum = BigRational::zero();
    for k in k_min..=k_max {
        let den = factorial(k)
            * factorial(h(tj3 - tj2 + tm1) + k)
            * factorial(h(tj3 - tj1 - tm2) + k)
            * factorial(a - k)
            * factorial(h(tj1 - tm1) - k)
            * factorial(h(tj2 + tm2) - k);
        let num = if k % 2 == 0 { BigInt::one() } else { -BigInt::one() };
        sum += BigRational::new(num, BigInt::from_biguint(Sign::Plus, den));
    }
    if sum.is_zero() {
        return 0.0;
    }

    let overall = if h(tj1 - tj2 - tm3) % 2 == 0 { 1.0 } else { -1.0 };
    let sign = if sum.is_negative() { -overall } else { overall };

    let s_num = sum.numer().magnitude();
    let s_den = sum.denom().magnitude();
    let square_num = prefactor * s_num * s_num;
    let square_den = prefactor_den * s_den * s_den;
    sign * sqrt_ratio(&square_num, &square_den)
}

/// `sqrt(p / q)` rounded from an integer quotient carrying ~110 significant bits.
fn sqrt_ratio(p: &BigUint, q: &BigUint) -> f64 {
    let mut shift = q.bits() as i64 - p.bits() as i64 + 110;
    if shift % 2 != 0 {
        shift += 1;
    }
    let quotient = if shift >= 0 {
        (p << shift as u64) / q
    } else {
        p / (q << (-shift) as u64)
    };
    let root = quotient.to_f64().expect("quotient fits in f64").sqrt();
    scale_pow2(root, -(shift / 2))
}

fn scale_pow2(mut x: f64, mut exp: i64) -> f64 {
    while exp > 512 {
        x *= 2f64.powi(512);
        exp -= 512;
    }
    while exp < -512 {
        x *= 2f64.powi(-512);
        exp += 512;
    }
    x * 2f64.powi(exp as i32)
}
