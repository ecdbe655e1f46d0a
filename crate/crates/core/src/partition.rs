//! Level-m cell structure on the unit interval: the lexicographic word
//! list, per-cell measures, and the uniform subintervals they code.

use crate::error::{Error, Result};
use crate::ifs::{cell_count, cell_measure, enumerate_words_capped, Word, DEFAULT_CELL_CAP};
use crate::math::kahan_sum;
use std::sync::Arc;

/// The level-m partition for alphabet size k. Immutable once built.
#[derive(Clone, Debug)]
pub struct Partition {
    k: usize,
    level: usize,
    p: Vec<f64>,
    words: Vec<Word>,
    measures: Vec<f64>,
}

impl Partition {
    /// Uniform weights (measure of every cell is k^-m).
    pub fn uniform(k: usize, level: usize) -> Result<Arc<Self>> {
        Self::with_weights(k, level, vec![1.0 / k as f64; k])
    }

    pub fn with_weights(k: usize, level: usize, p: Vec<f64>) -> Result<Arc<Self>> {
        Self::with_weights_capped(k, level, p, DEFAULT_CELL_CAP)
    }

    pub fn with_weights_capped(
        k: usize,
        level: usize,
        p: Vec<f64>,
        cap: u64,
    ) -> Result<Arc<Self>> {
        crate::ifs::validate_probabilities(&p, k)?;
        let words = enumerate_words_capped(k, level, cap)?;
        let measures = words
            .iter()
            .map(|w| cell_measure(w, &p))
            .collect::<Result<Vec<_>>>()?;
        Ok(Arc::new(Partition {
            k,
            level,
            p,
            words,
            measures,
        }))
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn weights(&self) -> &[f64] {
        &self.p
    }

    pub fn is_uniform(&self) -> bool {
        let u = 1.0 / self.k as f64;
        self.p.iter().all(|&x| (x - u).abs() <= 1e-15)
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn word(&self, i: usize) -> &Word {
        &self.words[i]
    }

    pub fn measures(&self) -> &[f64] {
        &self.measures
    }

    pub fn measure(&self, i: usize) -> f64 {
        self.measures[i]
    }

    pub fn total_measure(&self) -> f64 {
        kahan_sum(self.measures.iter().copied())
    }

    /// Subinterval [a, b] coded by the i-th word; cells tile [0,1] with
    /// a shared endpoint between neighbours.
    pub fn interval(&self, i: usize) -> (f64, f64) {
        let n = self.len() as f64;
        (i as f64 / n, (i + 1) as f64 / n)
    }

    pub fn midpoint(&self, i: usize) -> f64 {
        let n = self.len() as f64;
        (i as f64 + 0.5) / n
    }

    pub fn cell_width(&self) -> f64 {
        1.0 / self.len() as f64
    }

    pub fn index_of(&self, w: &Word) -> usize {
        w.lex_index(self.k)
    }
}

/// Subinterval of [0,1] coded by a word: `a = sum (w_i - 1) k^-i`,
/// `b = a + k^-m`. The empty word codes the whole interval.
pub fn interval_cell(word: &Word, k: usize) -> Result<(f64, f64)> {
    let n = cell_count(k, word.len(), DEFAULT_CELL_CAP)? as f64;
    let idx = word.lex_index(k) as f64;
    Ok((idx / n, (idx + 1.0) / n))
}

/// The level-m word whose half-open cell [a, a + k^-m) contains x;
/// x = 1 resolves to the last word. Base-k digit extraction; needs no
/// enumeration, so only the f64-exactness limit k^m < 2^53 applies.
pub fn word_of_point(x: f64, k: usize, m: usize) -> Result<Word> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidConfig(format!("point {x} outside [0,1]")));
    }
    let mut n: u64 = 1;
    for _ in 0..m {
        n = n
            .checked_mul(k as u64)
            .filter(|&v| v < (1u64 << 53))
            .ok_or(Error::CapExceeded {
                level: m,
                requested: (k as u128).pow(m as u32),
                cap: 1 << 53,
            })?;
    }
    let mut idx = (x * n as f64).floor() as u64;
    if idx >= n {
        idx = n - 1;
    }
    Ok(Word::from_lex_index(idx as usize, k, m))
}

/// Scale bookkeeping for two-parameter studies: alphabet size, contraction
/// ratio, similarity dimension, the two error exponents, and the cell count.
#[derive(Clone, Debug)]
pub struct RateModel {
    pub k: usize,
    /// Contraction ratio of the attractor-side system.
    pub q: f64,
    /// Similarity dimension log k / log(1/q).
    pub s: f64,
    /// Projection regularity exponent (empirical fit, not certified).
    pub alpha: f64,
    /// Consistency order of the nonlocal surrogate.
    pub beta: f64,
    pub level: usize,
    pub n_cells: u64,
}

impl RateModel {
    pub fn new(k: usize, q: f64, alpha: f64, beta: f64, level: usize) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::InvalidConfig(format!("ratio {q} not in (0,1)")));
        }
        if alpha <= 0.0 || beta <= 0.0 {
            return Err(Error::InvalidConfig("exponents must be positive".into()));
        }
        let s = (k as f64).ln() / (1.0 / q).ln();
        let n_cells = (k as u64)
            .checked_pow(level as u32)
            .ok_or(Error::CapExceeded {
                level,
                requested: u128::MAX,
                cap: u64::MAX,
            })?;
        Ok(RateModel {
            k,
            q,
            s,
            alpha,
            beta,
            level,
            n_cells,
        })
    }

    /// Coupling that balances the network and consistency error terms:
    /// epsilon = c * N_m^(-alpha / (beta s)) = c * q^(alpha m / beta).
    pub fn balanced_epsilon(&self, c: f64) -> f64 {
        c * (self.n_cells as f64).powf(-self.alpha / (self.beta * self.s))
    }
}
