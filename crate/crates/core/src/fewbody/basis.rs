use crate::error::{Error, Result};

/// `n choose k`, zero when `k > n`.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Binomial with signed arguments, zero outside the admissible range.
pub fn binomial_signed(n: i64, k: i64) -> u128 {
    if n < 0 || k < 0 || k > n {
        0
    } else {
        binomial(n as u64, k as u64)
    }
}

/// All `n`-particle occupation patterns of `sites` modes, in lexicographic
/// order of their sorted site lists. Bit `p` of a mask is local site `p`
/// (0-based), so `{1, 3}` in 1-based notation is `0b101`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectorBasis {
    sites: usize,
    particles: usize,
    states: Vec<u64>,
}

impl SectorBasis {
    pub fn new(sites: usize, particles: usize) -> Result<Self> {
        if sites > 64 {
            return Err(Error::config(format!("at most 64 modes supported, got {sites}")));
        }
        if particles > sites {
            return Err(Error::config(format!(
                "{particles} fermions do not fit into {sites} modes"
            )));
        }
        let mut states = Vec::with_capacity(binomial(sites as u64, particles as u64) as usize);
        let mut positions: Vec<usize> = (0..particles).collect();
        loop {
            states.push(positions.iter().fold(0u64, |m, &p| m | (1 << p)));
            // advance to the next combination in lexicographic order
            let mut i = particles;
            loop {
                if i == 0 {
                    return Ok(SectorBasis {
                        sites,
                        particles,
                        states,
                    });
                }
                i -= 1;
                if positions[i] < sites - particles + i {
                    break;
                }
            }
            positions[i] += 1;
            for j in i + 1..particles {
                positions[j] = positions[j - 1] + 1;
            }
        }
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[u64] {
        &self.states
    }

    pub fn state(&self, index: usize) -> u64 {
        self.states[index]
    }

    /// Occupied local positions (0-based, ascending) of basis state `index`.
    pub fn occupied(&self, index: usize) -> Vec<usize> {
        bits(self.states[index]).collect()
    }

    /// Position of `mask` in the lexicographic ordering.
    pub fn index_of(&self, mask: u64) -> Option<usize> {
        if mask.count_ones() as usize != self.particles
            || (self.sites < 64 && mask >> self.sites != 0)
        {
            return None;
        }
        let n = self.sites as u64;
        let k = self.particles as u64;
        let mut rank: u128 = 0;
        let mut next = 0u64;
        for (i, p) in bits(mask).enumerate() {
            let p = p as u64;
            for skipped in next..p {
                rank += binomial(n - 1 - skipped, k - 1 - i as u64);
            }
            next = p + 1;
        }
        Some(rank as usize)
    }
}

/// Set bit positions of `mask`, ascending.
pub fn bits(mut mask: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if mask == 0 {
            None
        } else {
            let p = mask.trailing_zeros() as usize;
            mask &= mask - 1;
            Some(p)
        }
    })
}

pub fn mask_from_positions(positions: &[usize]) -> u64 {
    positions.iter().fold(0u64, |m, &p| m | (1 << p))
}

/// Sign and result of applying `c_i^dagger c_j` to the ascending-order
/// basis state `mask`, or `None` when it annihilates the state.
pub fn hop(mask: u64, i: usize, j: usize) -> Option<(u64, f64)> {
    if mask & (1 << j) == 0 {
        return None;
    }
    let removed = mask & !(1 << j);
    if i != j && removed & (1 << i) != 0 {
        return None;
    }
    let below = |m: u64, p: usize| (m & ((1u64 << p) - 1)).count_ones();
    let parity = below(mask, j) + below(removed, i);
    let sign = if parity % 2 == 0 { 1.0 } else { -1.0 };
    Some((removed | (1 << i), sign))
}

/// Every nonzero matrix element `<target| c_i^dagger c_j |source>` of a
/// sector, grouped by source state.
#[derive(Debug, Clone)]
pub struct HopTable {
    pub entries: Vec<HopEntry>,
}

#[derive(Debug, Clone, Copy)]
pub struct HopEntry {
    pub source: u32,
    pub target: u32,
    pub i: u16,
    pub j: u16,
    pub sign: f64,
}

impl HopTable {
    pub fn new(basis: &SectorBasis) -> Self {
        let mut entries = Vec::new();
        for (source, &mask) in basis.states().iter().enumerate() {
            for j in bits(mask) {
                for i in 0..basis.sites() {
                    if let Some((m, sign)) = hop(mask, i, j) {
                        let target = basis.index_of(m).expect("hop stays in sector");
                        entries.push(HopEntry {
                            source: source as u32,
                            target: target as u32,
                            i: i as u16,
                            j: j as u16,
                            sign,
                        });
                    }
                }
            }
        }
        HopTable { entries }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn one_based(basis: &SectorBasis) -> Vec<Vec<usize>> {
        (0..basis.dim())
            .map(|k| basis.occupied(k).into_iter().map(|p| p + 1).collect())
            .collect()
    }

    #[test]
    fn small_enumerations() {
        let b = SectorBasis::new(3, 2).unwrap();
        assert_eq!(one_based(&b), vec![vec![1, 2], vec![1, 3], vec![2, 3]]);
        let vac = SectorBasis::new(7, 0).unwrap();
        assert_eq!(vac.states(), &[0]);
        assert_eq!(SectorBasis::new(15, 4).unwrap().dim(), 1365);
        assert!(SectorBasis::new(3, 4).is_err());
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(15, 4), 1365);
        assert_eq!(binomial(4, 5), 0);
        assert_eq!(binomial(0, 0), 1);
        assert_eq!(binomial(60, 30), 118_264_581_564_861_424);
        assert_eq!(binomial_signed(-1, 0), 0);
        assert_eq!(binomial_signed(3, -1), 0);
    }

    #[test]
    fn hop_signs() {
        // c_2^dag c_0 on {0,1}: remove 0 (sign +), add 2 past one particle (sign -)
        assert_eq!(hop(0b011, 2, 0), Some((0b110, -1.0)));
        assert_eq!(hop(0b011, 1, 0), None);
        assert_eq!(hop(0b101, 1, 0), Some((0b110, 1.0)));
        assert_eq!(hop(0b101, 2, 2), Some((0b101, 1.0)));
    }

    proptest! {
        #[test]
        fn lexicographic_and_ranked(sites in 0usize..13, frac in 0.0f64..=1.0) {
            let n = (sites as f64 * frac).round() as usize;
            let b = SectorBasis::new(sites, n).unwrap();
            prop_assert_eq!(b.dim() as u128, binomial(sites as u64, n as u64));
            let lists = (0..b.dim()).map(|k| b.occupied(k)).collect::<Vec<_>>();
            prop_assert!(lists.windows(2).all(|w| w[0] < w[1]));
            for (k, &m) in b.states().iter().enumerate() {
                prop_assert_eq!(b.index_of(m), Some(k));
            }
        }
    }
}
