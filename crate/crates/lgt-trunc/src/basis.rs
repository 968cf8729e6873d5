//! Truncated Hilbert-space bases and index maps for the four models.
//!
//! Ordering conventions are fixed here so serialized state vectors are
//! portable across runs: link fields ascend from -Lambda to +Lambda, product
//! bases are lexicographic with the first component most significant, and the
//! Schwinger basis orders occupation strings as binary numbers with site 0
//! as the most significant bit.

use std::collections::HashMap;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BasisError {
    #[error("electric field n = {n} outside truncation |n| <= {lambda}")]
    FieldOutOfRange { n: i64, lambda: u32 },
    #[error("configuration has {got} components, basis has {expected}")]
    ConfigLength { got: usize, expected: usize },
    #[error("index {index} outside basis of dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("no gauge-invariant configurations survive the truncation")]
    EmptyBasis,
    #[error("number of staggered sites must be even and positive, got {0}")]
    OddSiteCount(usize),
    #[error("occupation string {0:#b} is not in the basis")]
    UnknownConfiguration(u64),
}

pub type Result<T> = std::result::Result<T, BasisError>;

/// Electric basis of a single U(1) link truncated at `|n| <= lambda`,
/// ordered `-lambda ..= lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinkBasis {
    lambda: u32,
}

impl LinkBasis {
    pub fn new(lambda: u32) -> Self {
        LinkBasis { lambda }
    }

    pub fn lambda(&self) -> u32 {
        self.lambda
    }

    pub fn dim(&self) -> usize {
        2 * self.lambda as usize + 1
    }

    pub fn index_of(&self, n: i64) -> Result<usize> {
        if n.unsigned_abs() > self.lambda as u64 {
            return Err(BasisError::FieldOutOfRange { n, lambda: self.lambda });
        }
        Ok((n + self.lambda as i64) as usize)
    }

    pub fn field_of(&self, index: usize) -> Result<i64> {
        if index >= self.dim() {
            return Err(BasisError::IndexOutOfRange { index, dim: self.dim() });
        }
        Ok(index as i64 - self.lambda as i64)
    }

    pub fn fields(&self) -> impl Iterator<Item = i64> + '_ {
        -(self.lambda as i64)..=self.lambda as i64
    }
}

/// Lexicographic product of `num_plaquettes` links, first plaquette most
/// significant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainBasis {
    num_plaquettes: usize,
    link: LinkBasis,
}

impl ChainBasis {
    pub fn new(num_plaquettes: usize, lambda: u32) -> Self {
        ChainBasis { num_plaquettes, link: LinkBasis::new(lambda) }
    }

    pub fn num_plaquettes(&self) -> usize {
        self.num_plaquettes
    }

    pub fn link(&self) -> LinkBasis {
        self.link
    }

    pub fn lambda(&self) -> u32 {
        self.link.lambda
    }

    pub fn dim(&self) -> usize {
        self.link.dim().pow(self.num_plaquettes as u32)
    }

    pub fn index_of(&self, config: &[i64]) -> Result<usize> {
        if config.len() != self.num_plaquettes {
            return Err(BasisError::ConfigLength { got: config.len(), expected: self.num_plaquettes });
        }
        let mut idx = 0usize;
        for &n in config {
            idx = idx * self.link.dim() + self.link.index_of(n)?;
        }
        Ok(idx)
    }

    pub fn config_of(&self, index: usize) -> Result<Vec<i64>> {
        if index >= self.dim() {
            return Err(BasisError::IndexOutOfRange { index, dim: self.dim() });
        }
        let d = self.link.dim();
        let mut config = vec![0i64; self.num_plaquettes];
        let mut rest = index;
        for slot in config.iter_mut().rev() {
            *slot = self.link.field_of(rest % d).expect("in range");
            rest /= d;
        }
        Ok(config)
    }
}

/// Gauss-law-resolved basis of the open-boundary Schwinger model: fermion
/// occupation strings whose induced link fields all satisfy `|E| <= lambda`,
/// in a fixed total-charge sector.
#[derive(Debug, Clone)]
pub struct SchwingerBasis {
    num_sites: usize,
    lambda: u32,
    e_left: i64,
    charge: i64,
    configs: Vec<u64>,
    index: HashMap<u64, usize>,
}

/// Staggered charge of site `x` with occupation `f`: `f - 1` on odd sites,
/// `f` on even sites.
pub fn staggered_charge(x: usize, occupied: bool) -> i64 {
    i64::from(occupied) - i64::from(x % 2 == 1)
}

/// Occupation of site `x` in the strong-coupling vacuum (odd sites filled).
pub fn vacuum_occupation(x: usize) -> bool {
    x % 2 == 1
}

impl SchwingerBasis {
    /// Enumerates the Gauss-law-consistent, truncation-respecting occupation
    /// strings. Site 0 is the most significant bit of the configuration word.
    pub fn enumerate(num_sites: usize, lambda: u32, e_left: i64, charge: i64) -> Result<Self> {
        if num_sites == 0 || num_sites % 2 != 0 || num_sites > 63 {
            return Err(BasisError::OddSiteCount(num_sites));
        }
        let mut configs = Vec::new();
        for word in 0u64..(1u64 << num_sites) {
            if Self::accepts(word, num_sites, lambda, e_left, charge) {
                configs.push(word);
            }
        }
        if configs.is_empty() {
            return Err(BasisError::EmptyBasis);
        }
        let index = configs.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        Ok(SchwingerBasis { num_sites, lambda, e_left, charge, configs, index })
    }

    fn accepts(word: u64, num_sites: usize, lambda: u32, e_left: i64, charge: i64) -> bool {
        let mut total = 0i64;
        let mut e = e_left;
        for x in 0..num_sites {
            let q = staggered_charge(x, word & (1 << (num_sites - 1 - x)) != 0);
            total += q;
            e += q;
            // internal links only; the rightmost field is the fixed external one
            if x + 1 < num_sites && e.unsigned_abs() > lambda as u64 {
                return false;
            }
        }
        total == charge
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    pub fn lambda(&self) -> u32 {
        self.lambda
    }

    pub fn e_left(&self) -> i64 {
        self.e_left
    }

    pub fn charge(&self) -> i64 {
        self.charge
    }

    pub fn dim(&self) -> usize {
        self.configs.len()
    }

    pub fn config(&self, index: usize) -> Result<u64> {
        self.configs
            .get(index)
            .copied()
            .ok_or(BasisError::IndexOutOfRange { index, dim: self.dim() })
    }

    pub fn index_of(&self, config: u64) -> Result<usize> {
        self.index.get(&config).copied().ok_or(BasisError::UnknownConfiguration(config))
    }

    pub fn occupied(&self, config: u64, site: usize) -> bool {
        config & (1 << (self.num_sites - 1 - site)) != 0
    }

    /// Link fields `E_0 .. E_(N-2)` induced by Gauss's law.
    pub fn link_fields(&self, config: u64) -> Vec<i64> {
        let mut e = self.e_left;
        (0..self.num_sites - 1)
            .map(|x| {
                e += staggered_charge(x, self.occupied(config, x));
                e
            })
            .collect()
    }

    /// Occupation word of the strong-coupling vacuum.
    pub fn vacuum_config(&self) -> u64 {
        let mut word = 0u64;
        for x in 0..self.num_sites {
            if vacuum_occupation(x) {
                word |= 1 << (self.num_sites - 1 - x);
            }
        }
        word
    }
}

/// Two-site Hubbard-Holstein basis: one spinless fermion and a boson mode
/// per site truncated at occupation `boson_cutoff`.
///
/// Index layout: `fermion_site * (cutoff+1)^2 + n_left * (cutoff+1) + n_right`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HolsteinBasis {
    boson_cutoff: u32,
}

impl HolsteinBasis {
    pub fn new(boson_cutoff: u32) -> Self {
        HolsteinBasis { boson_cutoff }
    }

    pub fn boson_cutoff(&self) -> u32 {
        self.boson_cutoff
    }

    pub fn boson_dim(&self) -> usize {
        self.boson_cutoff as usize + 1
    }

    pub fn dim(&self) -> usize {
        2 * self.boson_dim() * self.boson_dim()
    }

    pub fn index_of(&self, fermion_site: usize, n_left: u32, n_right: u32) -> Result<usize> {
        if fermion_site > 1 {
            return Err(BasisError::IndexOutOfRange { index: fermion_site, dim: 2 });
        }
        for n in [n_left, n_right] {
            if n > self.boson_cutoff {
                return Err(BasisError::FieldOutOfRange { n: n as i64, lambda: self.boson_cutoff });
            }
        }
        let d = self.boson_dim();
        Ok(fermion_site * d * d + n_left as usize * d + n_right as usize)
    }

    pub fn state_of(&self, index: usize) -> Result<(usize, u32, u32)> {
        if index >= self.dim() {
            return Err(BasisError::IndexOutOfRange { index, dim: self.dim() });
        }
        let d = self.boson_dim();
        Ok(((index / (d * d)), ((index / d) % d) as u32, (index % d) as u32))
    }
}
