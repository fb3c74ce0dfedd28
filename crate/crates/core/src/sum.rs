//! Floating-point accumulation.
//!
//! [`ExactSum`] is a fixed-point superaccumulator: every finite `f64` is an
//! integer multiple of `2^-1074`, so a sufficiently wide integer holds any sum
//! of doubles without rounding. The only rounding happens once, in
//! [`ExactSum::value`], which is correctly rounded (nearest, ties to even).
//! The result therefore does not depend on the order of additions or on how
//! the input was split into chunks, which is what makes the parallel
//! reductions in this crate bit-reproducible.
//!
//! [`NeumaierSum`] is the cheaper Kahan–Babuška compensated accumulator, used
//! for short series where order independence is not required.

use rayon::prelude::*;

const LIMB_BITS: u32 = 32;
const LIMB_MASK: i64 = (1 << LIMB_BITS) - 1;
// 2045 exponent positions + 53 mantissa bits + 64 bits of carry headroom.
const LIMBS: usize = 70;
// Each add touches a limb with |delta| < 2^32, so 2^30 adds never overflow i64.
const NORMALIZE_EVERY: u32 = 1 << 30;

/// Order-independent, exactly rounded sum of `f64` values.
#[derive(Clone, Debug)]
pub struct ExactSum {
    limbs: [i64; LIMBS],
    pending: u32,
    // NaN / infinity inputs are accumulated separately with IEEE semantics.
    special: f64,
}

impl Default for ExactSum {
    fn default() -> Self {
        Self::new()
    }
}

impl ExactSum {
    pub fn new() -> Self {
        Self {
            limbs: [0; LIMBS],
            pending: 0,
            special: 0.0,
        }
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        if x == 0.0 {
            return;
        }
        if !x.is_finite() {
            self.special += x;
            return;
        }
        let bits = x.to_bits();
        let biased = ((bits >> 52) & 0x7ff) as u32;
        let frac = bits & ((1u64 << 52) - 1);
        // x = mant * 2^(pos - 1074)
        let (mant, pos) = if biased == 0 {
            (frac, 0u32)
        } else {
            (frac | (1u64 << 52), biased - 1)
        };
        let limb = (pos / LIMB_BITS) as usize;
        let shifted = (mant as u128) << (pos % LIMB_BITS);
        let parts = [
            (shifted & LIMB_MASK as u128) as i64,
            ((shifted >> 32) & LIMB_MASK as u128) as i64,
            (shifted >> 64) as i64,
        ];
        if x < 0.0 {
            for (k, p) in parts.iter().enumerate() {
                self.limbs[limb + k] -= p;
            }
        } else {
            for (k, p) in parts.iter().enumerate() {
                self.limbs[limb + k] += p;
            }
        }
        self.pending += 1;
        if self.pending >= NORMALIZE_EVERY {
            self.normalize();
        }
    }

    /// Adds another accumulator into this one without rounding.
    pub fn merge(&mut self, other: &ExactSum) {
        let mut other = other.clone();
        other.normalize();
        self.normalize();
        for (a, b) in self.limbs.iter_mut().zip(other.limbs.iter()) {
            *a += *b;
        }
        self.special += other.special;
        self.pending = 1;
        self.normalize();
    }

    fn normalize(&mut self) {
        for i in 0..LIMBS - 1 {
            let carry = self.limbs[i] >> LIMB_BITS;
            self.limbs[i] -= carry << LIMB_BITS;
            self.limbs[i + 1] += carry;
        }
        self.pending = 0;
    }

    /// The sum, rounded once to the nearest `f64`.
    pub fn value(&self) -> f64 {
        if self.special != 0.0 || self.special.is_nan() {
            return self.special;
        }
        let mut mag = self.limbs;
        normalize_limbs(&mut mag);
        let negative = mag[LIMBS - 1] < 0;
        if negative {
            for l in mag.iter_mut() {
                *l = -*l;
            }
            normalize_limbs(&mut mag);
        }
        let v = round_scaled_integer(&mag);
        if negative {
            -v
        } else {
            v
        }
    }
}

fn normalize_limbs(limbs: &mut [i64; LIMBS]) {
    for i in 0..LIMBS - 1 {
        let carry = limbs[i] >> LIMB_BITS;
        limbs[i] -= carry << LIMB_BITS;
        limbs[i + 1] += carry;
    }
}

/// Rounds the nonnegative integer held in normalized limbs, times 2^-1074.
fn round_scaled_integer(limbs: &[i64; LIMBS]) -> f64 {
    let Some(top_nonzero) = limbs.iter().rposition(|&l| l != 0) else {
        return 0.0;
    };
    let top = top_nonzero.max(2);
    let t: u128 =
        ((limbs[top] as u128) << 64) | ((limbs[top - 1] as u128) << 32) | (limbs[top - 2] as u128);
    let sticky = limbs[..top - 2].iter().any(|&l| l != 0);
    let base = (LIMB_BITS as i32) * (top as i32 - 2) - 1074;
    let bit_len = 128 - t.leading_zeros() as i32;
    if bit_len <= 53 {
        // only reachable when top == 2, i.e. base == -1074; exact
        return t as f64 * f64::from_bits(1);
    }
    let shift = (bit_len - 53) as u32;
    let mut mant = t >> shift;
    let rem = t & ((1u128 << shift) - 1);
    let half = 1u128 << (shift - 1);
    let round_up = rem > half || (rem == half && (sticky || mant & 1 == 1));
    let mut exp = base + shift as i32;
    if round_up {
        mant += 1;
        if mant == 1u128 << 53 {
            mant >>= 1;
            exp += 1;
        }
    }
    scale_pow2(mant as f64, exp)
}

/// `m * 2^exp` for an integer-valued `m < 2^53`, exact unless it overflows.
fn scale_pow2(m: f64, exp: i32) -> f64 {
    if exp > 1023 {
        return m * pow2(1023) * pow2(exp - 1023);
    }
    if exp < -1022 {
        // m >= 2^52 here, so the product stays representable.
        return m * pow2(-1022) * pow2(exp + 1022);
    }
    m * pow2(exp)
}

fn pow2(exp: i32) -> f64 {
    if exp > 1023 {
        f64::INFINITY
    } else if exp >= -1022 {
        f64::from_bits(((exp + 1023) as u64) << 52)
    } else if exp >= -1074 {
        f64::from_bits(1u64 << (exp + 1074))
    } else {
        0.0
    }
}

impl Extend<f64> for ExactSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.add(x);
        }
    }
}

impl FromIterator<f64> for ExactSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = ExactSum::new();
        acc.extend(iter);
        acc
    }
}

/// Kahan–Babuška (Neumaier) compensated summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = NeumaierSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Sums `term(i)` for `i` in `lo..hi`, split into `chunks` contiguous pieces
/// that are evaluated in parallel and reduced in index order.
///
/// The result is identical for every `chunks >= 1` and every thread count.
pub fn chunked_exact_sum<F>(lo: u64, hi: u64, chunks: usize, term: F) -> ExactSum
where
    F: Fn(u64) -> f64 + Sync,
{
    if hi <= lo {
        return ExactSum::new();
    }
    let chunks = chunks.max(1) as u64;
    let len = hi - lo;
    let step = len.div_ceil(chunks);
    let partials: Vec<ExactSum> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let a = lo + c * step;
            let b = (a + step).min(hi);
            (a..b).map(&term).collect()
        })
        .collect();
    let mut total = ExactSum::new();
    for p in &partials {
        total.merge(p);
    }
    total
}
