use crate::error::{invalid, Error, Result};

/// Largest limit accepted by the in-memory sieves.
pub const MAX_SIEVE_LIMIT: usize = 1 << 31;

/// Smallest-prime-factor table for `2 ≤ n ≤ limit`.
#[derive(Clone, Debug)]
pub struct SpfTable {
    limit: usize,
    spf: Vec<u32>,
    primes: Vec<u32>,
}

/// Builds the smallest-prime-factor table with a linear sieve.
pub fn build_spf_sieve(limit: usize) -> Result<SpfTable> {
    if limit < 2 {
        return Err(invalid(format!(
            "sieve limit must be at least 2, got {limit}"
        )));
    }
    if limit > MAX_SIEVE_LIMIT {
        return Err(Error::Resource(format!(
            "sieve limit {limit} exceeds the supported maximum {MAX_SIEVE_LIMIT}"
        )));
    }
    let mut spf = alloc_zeroed::<u32>(limit + 1)?;
    let mut primes = Vec::new();
    for i in 2..=limit {
        if spf[i] == 0 {
            spf[i] = i as u32;
            primes.push(i as u32);
        }
        let si = spf[i];
        for &p in &primes {
            let m = i * p as usize;
            if p > si || m > limit {
                break;
            }
            spf[m] = p;
        }
    }
    Ok(SpfTable { limit, spf, primes })
}

impl SpfTable {
    pub fn new(limit: usize) -> Result<Self> {
        build_spf_sieve(limit)
    }

    pub fn limit(&self) -> usize {
        self.limit
    }

    /// Smallest prime factor of `n`, for `2 ≤ n ≤ limit`.
    pub fn spf(&self, n: usize) -> Option<u32> {
        if (2..=self.limit).contains(&n) {
            Some(self.spf[n])
        } else {
            None
        }
    }

    pub fn is_prime(&self, n: usize) -> bool {
        self.spf(n) == Some(n as u32)
    }

    /// All primes up to the limit, ascending.
    pub fn primes(&self) -> &[u32] {
        &self.primes
    }

    pub(crate) fn raw(&self) -> &[u32] {
        &self.spf
    }
}

pub(crate) fn alloc_zeroed<T: Clone + Default>(len: usize) -> Result<Vec<T>> {
    let mut v = Vec::new();
    v.try_reserve_exact(len)
        .map_err(|e| Error::Resource(format!("cannot allocate {len} table entries: {e}")))?;
    v.resize(len, T::default());
    Ok(v)
}

/// Primes `≤ limit` by an odd-only sieve of Eratosthenes.
pub fn primes_up_to(limit: u64) -> Result<Vec<u64>> {
    if limit > MAX_SIEVE_LIMIT as u64 {
        return Err(Error::Resource(format!(
            "prime sieve limit {limit} exceeds {MAX_SIEVE_LIMIT}"
        )));
    }
    if limit < 2 {
        return Ok(Vec::new());
    }
    // index i stands for 2i + 1
    let half = (limit as usize - 1) / 2 + 1;
    let mut composite = alloc_zeroed::<bool>(half)?;
    let mut i = 1;
    while (2 * i + 1) * (2 * i + 1) <= limit as usize {
        if !composite[i] {
            let p = 2 * i + 1;
            let mut j = p * p / 2;
            while j < half {
                composite[j] = true;
                j += p;
            }
        }
        i += 1;
    }
    let mut primes = vec![2];
    primes.extend(
        (1..half)
            .filter(|&i| !composite[i])
            .map(|i| 2 * i as u64 + 1),
    );
    Ok(primes)
}

/// Largest value accepted by [`SegmentedFactorizer`].
pub const MAX_SEGMENTED: u64 = 1 << 32;
const MAX_DISTINCT: usize = 10;

/// Factorizes every integer of a range segment by segment, using only the
/// primes up to the square root of the range end.
pub struct SegmentedFactorizer {
    primes: Vec<u64>,
    hi: u64,
}

/// Factorization of one integer, stored inline.
#[derive(Clone, Copy, Debug, Default)]
pub struct InlineFactors {
    len: u8,
    items: [(u32, u8); MAX_DISTINCT],
}

impl InlineFactors {
    fn push(&mut self, p: u64, e: u32) {
        self.items[self.len as usize] = (p as u32, e as u8);
        self.len += 1;
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, u32)> + '_ {
        self.items[..self.len as usize]
            .iter()
            .map(|&(p, e)| (p as u64, e as u32))
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

impl SegmentedFactorizer {
    /// Prepares to factorize integers up to `hi` inclusive.
    pub fn new(hi: u64) -> Result<Self> {
        if hi >= MAX_SEGMENTED {
            return Err(Error::Resource(format!(
                "segmented factorization limited to values below {MAX_SEGMENTED}, got {hi}"
            )));
        }
        let root = (hi as f64).sqrt() as u64 + 1;
        Ok(Self {
            primes: primes_up_to(root)?,
            hi,
        })
    }

    /// Calls `visit(n, factors)` for every `n` in `lo..=hi`, ascending.
    /// Factors are listed with strictly increasing primes.
    pub fn for_each(&self, lo: u64, hi: u64, mut visit: impl FnMut(u64, &InlineFactors)) {
        assert!(
            hi <= self.hi,
            "range end {hi} beyond prepared bound {}",
            self.hi
        );
        let lo = lo.max(1);
        if hi < lo {
            return;
        }
        let len = (hi - lo + 1) as usize;
        let mut rem: Vec<u64> = (lo..=hi).collect();
        let mut facs = vec![InlineFactors::default(); len];
        for &p in &self.primes {
            if p * p > hi {
                break;
            }
            let first = lo.div_ceil(p) * p;
            let mut m = first;
            while m <= hi {
                let i = (m - lo) as usize;
                let mut e = 0;
                while rem[i] % p == 0 {
                    rem[i] /= p;
                    e += 1;
                }
                facs[i].push(p, e);
                m += p;
            }
        }
        for i in 0..len {
            if rem[i] > 1 {
                facs[i].push(rem[i], 1);
            }
            visit(lo + i as u64, &facs[i]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial_spf(n: usize) -> usize {
        (2..=n).find(|d| n % d == 0).unwrap()
    }

    #[test]
    fn small_values() {
        let t = build_spf_sieve(10).unwrap();
        assert_eq!(t.spf(9), Some(3));
        assert_eq!(t.spf(10), Some(2));
        assert_eq!(t.spf(7), Some(7));
        assert_eq!(t.spf(11), None);
        assert_eq!(t.primes(), &[2, 3, 5, 7]);
    }

    #[test]
    fn rejects_bad_limits() {
        assert!(matches!(build_spf_sieve(1), Err(Error::InvalidArgument(_))));
        assert!(matches!(
            build_spf_sieve(MAX_SIEVE_LIMIT + 1),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn agrees_with_trial_division() {
        let t = build_spf_sieve(5000).unwrap();
        for n in 2..=5000 {
            let p = t.spf(n).unwrap() as usize;
            assert_eq!(p, trial_spf(n), "n = {n}");
            assert!(p == n || p * p <= n);
        }
    }

    #[test]
    fn large_prime_fixed_point() {
        let t = build_spf_sieve(1_000_000).unwrap();
        // 999983 is the largest prime below 10^6 (trial division confirms)
        assert_eq!(trial_spf(999_983), 999_983);
        assert_eq!(t.spf(999_983), Some(999_983));
        assert!(t.is_prime(999_983));
    }

    #[test]
    fn eratosthenes_matches_spf() {
        let t = build_spf_sieve(100_000).unwrap();
        let p = primes_up_to(100_000).unwrap();
        let q: Vec<u64> = t.primes().iter().map(|&x| x as u64).collect();
        assert_eq!(p, q);
        assert!(primes_up_to(1).unwrap().is_empty());
        assert_eq!(primes_up_to(2).unwrap(), vec![2]);
        assert_eq!(primes_up_to(3).unwrap(), vec![2, 3]);
    }

    #[test]
    fn segmented_factorizations_multiply_back() {
        let f = SegmentedFactorizer::new(200_000).unwrap();
        let mut count = 0;
        f.for_each(150_000, 200_000, |n, facs| {
            let prod: u64 = facs.iter().map(|(p, e)| p.pow(e)).product();
            assert_eq!(prod, n);
            let ps: Vec<u64> = facs.iter().map(|(p, _)| p).collect();
            assert!(ps.windows(2).all(|w| w[0] < w[1]));
            count += 1;
        });
        assert_eq!(count, 50_001);
        f.for_each(1, 1, |n, facs| {
            assert_eq!(n, 1);
            assert!(facs.is_empty());
        });
    }
}
