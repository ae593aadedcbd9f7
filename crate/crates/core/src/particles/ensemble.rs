use crate::error::{Error, Result};

/// States allowed in an enumerated ensemble unless the caller raises it.
pub const DEFAULT_STATE_BUDGET: usize = 2_000_000;

/// `C(n, k)`, exact for the sizes used here.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k as u128 {
        acc = acc * (n as u128 - i) / (i + 1);
    }
    acc
}

/// Number of ways to put `r` particles on `s` sites.
fn compositions(r: usize, s: usize) -> u128 {
    if s == 0 {
        return u128::from(r == 0);
    }
    binomial((r + s - 1) as u64, (s - 1) as u64)
}

/// Exclusion configurations on `Λ_n` with `ℓ` particles, in lexicographic
/// order of the occupation vector read from site `-n` to `n`.
///
/// Bit `i` of a state is the occupation of site `i - n`.
#[derive(Debug, Clone)]
pub struct ExclusionEnsemble {
    n: usize,
    ell: usize,
    states: Vec<u64>,
}

impl ExclusionEnsemble {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn sites(&self) -> usize {
        2 * self.n + 1
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, index: usize) -> u64 {
        self.states[index]
    }

    pub fn states(&self) -> &[u64] {
        &self.states
    }

    /// Lexicographic rank of an occupation bitmask.
    pub fn rank(&self, state: u64) -> Option<usize> {
        let sites = self.sites();
        if state >> sites != 0 || state.count_ones() as usize != self.ell {
            return None;
        }
        let mut rank: u128 = 0;
        let mut left = self.ell as u64;
        for i in 0..sites {
            if state >> i & 1 == 1 {
                // configurations with the same prefix and a hole at i come first
                rank += binomial((sites - i - 1) as u64, left);
                left -= 1;
            }
        }
        Some(rank as usize)
    }

    pub fn unrank(&self, rank: usize) -> Option<u64> {
        (rank < self.len()).then(|| unrank_exclusion(self.sites(), self.ell, rank))
    }
}

fn unrank_exclusion(sites: usize, ell: usize, mut rank: usize) -> u64 {
    let mut left = ell as u64;
    let mut state = 0u64;
    for i in 0..sites {
        if left == 0 {
            break;
        }
        let hole_here = binomial((sites - i - 1) as u64, left) as usize;
        if rank >= hole_here {
            rank -= hole_here;
            state |= 1 << i;
            left -= 1;
        }
    }
    state
}

/// All exclusion configurations with `ℓ` particles on `Λ_n`.
pub fn enumerate_exclusion(n: usize, ell: usize) -> Result<ExclusionEnsemble> {
    enumerate_exclusion_with_budget(n, ell, DEFAULT_STATE_BUDGET)
}

pub fn enumerate_exclusion_with_budget(n: usize, ell: usize, budget: usize) -> Result<ExclusionEnsemble> {
    let sites = 2 * n + 1;
    if sites > 63 {
        return Err(Error::ParameterDomain(format!("box radius {n} is above the supported maximum of 31")));
    }
    if ell > sites {
        return Err(Error::ParameterDomain(format!("{ell} particles do not fit on {sites} sites")));
    }
    let count = binomial(sites as u64, ell as u64);
    if count > budget as u128 {
        return Err(Error::Capacity { count, budget });
    }
    let states = (0..count as usize).map(|r| unrank_exclusion(sites, ell, r)).collect();
    Ok(ExclusionEnsemble { n, ell, states })
}

/// Zero-range configurations: compositions of `ℓ` into `2n+1` parts,
/// lexicographic in `(ξ_{-n}, …, ξ_n)`.
#[derive(Debug, Clone)]
pub struct ZeroRangeEnsemble {
    n: usize,
    ell: usize,
    /// Row-major `len × sites` occupation numbers.
    occupations: Vec<u16>,
}

impl ZeroRangeEnsemble {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn sites(&self) -> usize {
        2 * self.n + 1
    }

    pub fn len(&self) -> usize {
        self.occupations.len() / self.sites()
    }

    pub fn is_empty(&self) -> bool {
        self.occupations.is_empty()
    }

    /// Density `ρ = ℓ / (2n+1)`.
    pub fn density(&self) -> f64 {
        self.ell as f64 / self.sites() as f64
    }

    pub fn state(&self, index: usize) -> &[u16] {
        let s = self.sites();
        &self.occupations[index * s..(index + 1) * s]
    }

    pub fn states(&self) -> impl Iterator<Item = &[u16]> + '_ {
        self.occupations.chunks_exact(self.sites())
    }

    pub fn rank(&self, xi: &[u16]) -> Option<usize> {
        let sites = self.sites();
        if xi.len() != sites || xi.iter().map(|&v| v as usize).sum::<usize>() != self.ell {
            return None;
        }
        let mut rank: u128 = 0;
        let mut left = self.ell;
        for (i, &v) in xi.iter().enumerate().take(sites - 1) {
            for smaller in 0..v as usize {
                rank += compositions(left - smaller, sites - i - 1);
            }
            left -= v as usize;
        }
        Some(rank as usize)
    }

    pub fn unrank(&self, rank: usize) -> Option<Vec<u16>> {
        (rank < self.len()).then(|| unrank_composition(self.sites(), self.ell, rank))
    }
}

fn unrank_composition(sites: usize, ell: usize, mut rank: usize) -> Vec<u16> {
    let mut out = Vec::with_capacity(sites);
    let mut left = ell;
    for i in 0..sites - 1 {
        let mut v = 0;
        loop {
            let block = compositions(left - v, sites - i - 1) as usize;
            if rank < block {
                break;
            }
            rank -= block;
            v += 1;
        }
        out.push(v as u16);
        left -= v;
    }
    out.push(left as u16);
    out
}

/// All zero-range configurations with `ℓ` particles on `Λ_n`.
pub fn enumerate_zero_range(n: usize, ell: usize) -> Result<ZeroRangeEnsemble> {
    enumerate_zero_range_with_budget(n, ell, DEFAULT_STATE_BUDGET)
}

pub fn enumerate_zero_range_with_budget(n: usize, ell: usize, budget: usize) -> Result<ZeroRangeEnsemble> {
    let sites = 2 * n + 1;
    if ell > u16::MAX as usize {
        return Err(Error::ParameterDomain(format!("{ell} particles exceed the per-site counter")));
    }
    let count = compositions(ell, sites);
    if count > budget as u128 {
        return Err(Error::Capacity { count, budget });
    }
    let count = count as usize;
    let mut occupations = Vec::with_capacity(count * sites);
    // Walk the compositions in lexicographic order directly.
    let mut xi = vec![0u16; sites];
    xi[sites - 1] = ell as u16;
    for r in 0..count {
        if r > 0 {
            next_composition(&mut xi);
        }
        occupations.extend_from_slice(&xi);
    }
    Ok(ZeroRangeEnsemble { n, ell, occupations })
}

/// Lexicographic successor among compositions with a fixed total.
fn next_composition(xi: &mut [u16]) {
    let s = xi.len();
    // rightmost position before the last with particles to its right
    let Some(i) = (0..s - 1).rev().find(|&i| xi[i + 1..].iter().any(|&v| v > 0)) else {
        return;
    };
    let tail: u16 = xi[i + 1..].iter().sum();
    xi[i] += 1;
    for v in &mut xi[i + 1..] {
        *v = 0;
    }
    xi[s - 1] = tail - 1;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exclusion_counts() {
        assert_eq!(enumerate_exclusion(1, 2).unwrap().len(), 3);
        assert_eq!(enumerate_exclusion(2, 2).unwrap().len(), 10);
        let e = enumerate_exclusion(3, 0).unwrap();
        assert_eq!(e.len(), 1);
        assert_eq!(e.state(0), 0);
        assert!(enumerate_exclusion(1, 4).is_err());
    }

    #[test]
    fn exclusion_rank_roundtrip() {
        for ell in 0..=7 {
            let e = enumerate_exclusion(3, ell).unwrap();
            assert_eq!(e.len() as u128, binomial(7, ell as u64));
            for (i, &s) in e.states().iter().enumerate() {
                assert_eq!(s.count_ones() as usize, ell);
                assert_eq!(e.rank(s), Some(i));
                assert_eq!(e.unrank(i), Some(s));
            }
            // lexicographic from site -n: occupation vectors increase
            let words: Vec<Vec<u8>> = e
                .states()
                .iter()
                .map(|s| (0..7).map(|i| (s >> i & 1) as u8).collect())
                .collect();
            assert!(words.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn zero_range_counts() {
        assert_eq!(enumerate_zero_range(1, 2).unwrap().len(), 6);
        assert_eq!(enumerate_zero_range(1, 1).unwrap().len(), 3);
        assert_eq!(enumerate_zero_range(2, 0).unwrap().len(), 1);
        assert_eq!(enumerate_zero_range(2, 6).unwrap().len(), 210);
    }

    #[test]
    fn zero_range_rank_roundtrip() {
        let z = enumerate_zero_range(2, 4).unwrap();
        assert_eq!(z.len() as u128, binomial(8, 4));
        let all: Vec<Vec<u16>> = z.states().map(|s| s.to_vec()).collect();
        assert!(all.windows(2).all(|w| w[0] < w[1]));
        for (i, s) in all.iter().enumerate() {
            assert_eq!(s.iter().sum::<u16>(), 4);
            assert_eq!(z.rank(s), Some(i));
            assert_eq!(z.unrank(i).as_deref(), Some(s.as_slice()));
        }
    }

    #[test]
    fn capacity_budget() {
        match enumerate_zero_range_with_budget(3, 10, 1000) {
            Err(Error::Capacity { count, budget }) => {
                assert_eq!(count, binomial(16, 6));
                assert_eq!(budget, 1000);
            }
            other => panic!("expected capacity error, got {other:?}"),
        }
    }
}
