//! Words over a finite alphabet, iterated function systems of similitudes,
//! and the symbolic projection onto the attractor.
//!
//! A word `w = (w_1 .. w_m)` with letters in `1..=k` addresses the cell
//! reached by composing the maps `f_{w_1} o ... o f_{w_m}`. All orderings
//! in the library are lexicographic over fixed-length words.

use crate::error::{Error, Result};
use serde::Deserialize;
use std::fmt;
use std::str::FromStr;

/// Default cap on the number of level-m cells (3^10).
pub const DEFAULT_CELL_CAP: u64 = 59_049;

/// A finite word; the empty word is allowed.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Word(Vec<u8>);

impl Word {
    pub fn new(letters: Vec<u8>, k: usize) -> Result<Self> {
        for &l in &letters {
            if l == 0 || l as usize > k {
                return Err(Error::InvalidLetter { letter: l, k });
            }
        }
        Ok(Word(letters))
    }

    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn letters(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Concatenation `self . other` (descend into `other` inside this cell).
    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    /// Lexicographic index among all words of the same length.
    pub fn lex_index(&self, k: usize) -> usize {
        self.0
            .iter()
            .fold(0usize, |acc, &l| acc * k + (l as usize - 1))
    }

    /// Inverse of `lex_index` at a fixed length.
    pub fn from_lex_index(mut idx: usize, k: usize, len: usize) -> Word {
        let mut letters = vec![0u8; len];
        for slot in letters.iter_mut().rev() {
            *slot = (idx % k) as u8 + 1;
            idx /= k;
        }
        Word(letters)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &l in &self.0 {
            write!(f, "{}", l)?;
        }
        Ok(())
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "w({})", self)
    }
}

impl FromStr for Word {
    type Err = Error;

    /// Parses a digit string such as "213"; requires k <= 9.
    fn from_str(s: &str) -> Result<Self> {
        let mut letters = Vec::with_capacity(s.len());
        for c in s.chars() {
            let d = c
                .to_digit(10)
                .ok_or_else(|| Error::Parse(format!("bad word digit '{c}'")))?;
            if d == 0 {
                return Err(Error::Parse("word digits start at 1".into()));
            }
            letters.push(d as u8);
        }
        Ok(Word(letters))
    }
}

/// Number of level-m cells, guarded by `cap`.
pub fn cell_count(k: usize, m: usize, cap: u64) -> Result<usize> {
    let mut n: u128 = 1;
    for _ in 0..m {
        n *= k as u128;
        if n > cap as u128 {
            return Err(Error::CapExceeded {
                level: m,
                requested: (k as u128).pow(m as u32),
                cap,
            });
        }
    }
    Ok(n as usize)
}

/// All words of length `m` in lexicographic order.
pub fn enumerate_words(k: usize, m: usize) -> Result<Vec<Word>> {
    enumerate_words_capped(k, m, DEFAULT_CELL_CAP)
}

pub fn enumerate_words_capped(k: usize, m: usize, cap: u64) -> Result<Vec<Word>> {
    if k < 2 {
        return Err(Error::InvalidConfig("alphabet size must be >= 2".into()));
    }
    let n = cell_count(k, m, cap)?;
    Ok((0..n).map(|i| Word::from_lex_index(i, k, m)).collect())
}

/// Cylinder measure of a word under a probability vector: the product of
/// the letter probabilities; the empty word has measure 1.
pub fn cell_measure(word: &Word, p: &[f64]) -> Result<f64> {
    let k = p.len();
    let mut m = 1.0;
    for &l in word.letters() {
        if l == 0 || l as usize > k {
            return Err(Error::InvalidLetter { letter: l, k });
        }
        m *= p[l as usize - 1];
    }
    Ok(m)
}

/// One similitude x -> L x + t with contraction ratio `ratio` (|L| = ratio).
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Similitude {
    /// Row-major d x d linear part.
    pub linear: Vec<Vec<f64>>,
    pub offset: Vec<f64>,
    pub ratio: f64,
}

impl Similitude {
    /// Pure scaling by `ratio` toward `offset / (1 - ratio)`... i.e. x -> ratio*x + offset.
    pub fn scaling(dim: usize, ratio: f64, offset: Vec<f64>) -> Self {
        let linear = (0..dim)
            .map(|i| (0..dim).map(|j| if i == j { ratio } else { 0.0 }).collect())
            .collect();
        Similitude {
            linear,
            offset,
            ratio,
        }
    }

    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (i, row) in self.linear.iter().enumerate() {
            let mut acc = self.offset[i];
            for (j, &a) in row.iter().enumerate() {
                acc += a * x[j];
            }
            out[i] = acc;
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if self.offset.len() != dim || self.linear.len() != dim {
            return Err(Error::InvalidIfs("map dimension mismatch".into()));
        }
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(Error::InvalidIfs(format!(
                "contraction ratio {} not in (0,1)",
                self.ratio
            )));
        }
        // Similitude check: L^T L = ratio^2 I.
        for i in 0..dim {
            if self.linear[i].len() != dim {
                return Err(Error::InvalidIfs("linear part not square".into()));
            }
        }
        for a in 0..dim {
            for b in 0..dim {
                let dot: f64 = (0..dim).map(|r| self.linear[r][a] * self.linear[r][b]).sum();
                let target = if a == b { self.ratio * self.ratio } else { 0.0 };
                if (dot - target).abs() > 1e-9 {
                    return Err(Error::InvalidIfs(
                        "linear part is not a similarity of the declared ratio".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// A probabilistic iterated function system of `k` similitudes in R^d.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IfsSpec {
    pub k: usize,
    pub maps: Vec<Similitude>,
    pub p: Vec<f64>,
}

impl IfsSpec {
    pub fn new(maps: Vec<Similitude>, p: Vec<f64>) -> Result<Self> {
        let spec = IfsSpec {
            k: maps.len(),
            maps,
            p,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 || self.maps.len() != self.k {
            return Err(Error::InvalidIfs(format!(
                "need k >= 2 maps, got k={} with {} maps",
                self.k,
                self.maps.len()
            )));
        }
        let dim = self.maps[0].dim();
        for m in &self.maps {
            m.validate(dim)?;
        }
        validate_probabilities(&self.p, self.k)?;
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.maps[0].dim()
    }

    /// Common contraction ratio, when all maps share one.
    pub fn common_ratio(&self) -> Option<f64> {
        let q = self.maps[0].ratio;
        if self
            .maps
            .iter()
            .all(|m| (m.ratio - q).abs() <= 1e-12)
        {
            Some(q)
        } else {
            None
        }
    }

    /// Barycenter of the stationary measure, by fixed-point iteration.
    pub fn centroid(&self) -> Vec<f64> {
        let dim = self.dim();
        let mut b = vec![0.0; dim];
        let mut tmp = vec![0.0; dim];
        let mut next = vec![0.0; dim];
        for _ in 0..200 {
            next.iter_mut().for_each(|v| *v = 0.0);
            for (map, &pi) in self.maps.iter().zip(&self.p) {
                map.apply(&b, &mut tmp);
                for i in 0..dim {
                    next[i] += pi * tmp[i];
                }
            }
            b.copy_from_slice(&next);
        }
        b
    }

    /// Crude radius bound: a ball around `center` of this radius is mapped
    /// into itself by every map, so it contains the attractor.
    pub fn radius_bound(&self) -> f64 {
        let center = self.centroid();
        let dim = self.dim();
        let mut tmp = vec![0.0; dim];
        let mut r: f64 = 0.0;
        for map in &self.maps {
            map.apply(&center, &mut tmp);
            let d: f64 = (0..dim)
                .map(|i| (tmp[i] - center[i]) * (tmp[i] - center[i]))
                .sum::<f64>()
                .sqrt();
            r = r.max(d / (1.0 - map.ratio));
        }
        r
    }

    /// Diameter bound for the attractor.
    pub fn diameter_bound(&self) -> f64 {
        2.0 * self.radius_bound()
    }

    /// Load from a JSON file with keys `k`, `maps` (linear/offset/ratio), `p`.
    pub fn from_json_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let spec: IfsSpec =
            serde_json::from_str(&text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }
}

pub fn validate_probabilities(p: &[f64], k: usize) -> Result<()> {
    if p.len() != k {
        return Err(Error::InvalidProbabilities(format!(
            "expected {k} entries, got {}",
            p.len()
        )));
    }
    if p.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::InvalidProbabilities(
            "entries must be strictly positive".into(),
        ));
    }
    let s = crate::math::kahan_sum(p.iter().copied());
    if (s - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidProbabilities(format!(
            "entries sum to {s}, expected 1"
        )));
    }
    Ok(())
}

/// Finite truncation of the symbolic projection: `f_{w_1} o .. o f_{w_m}(base)`.
/// The empty word returns `base` unchanged.
pub fn project_point(word: &Word, ifs: &IfsSpec, base: &[f64]) -> Vec<f64> {
    let dim = ifs.dim();
    let mut x = base.to_vec();
    let mut tmp = vec![0.0; dim];
    for &l in word.letters().iter().rev() {
        ifs.maps[l as usize - 1].apply(&x, &mut tmp);
        x.copy_from_slice(&tmp);
    }
    x
}

/// Distance bound from the truncated projection to any infinite extension:
/// (product of the word's ratios) times the attractor diameter bound.
pub fn projection_error_bound(word: &Word, ifs: &IfsSpec) -> f64 {
    let shrink: f64 = word
        .letters()
        .iter()
        .map(|&l| ifs.maps[l as usize - 1].ratio)
        .product();
    shrink * ifs.diameter_bound()
}

/// Sierpinski gasket: three half-scale maps toward the triangle vertices
/// (0,0), (1,0), (1/2, sqrt(3)/2), uniform weights.
pub fn sg_preset() -> IfsSpec {
    let vertices = [
        vec![0.0, 0.0],
        vec![1.0, 0.0],
        vec![0.5, 3f64.sqrt() / 2.0],
    ];
    let maps = vertices
        .iter()
        .map(|v| Similitude::scaling(2, 0.5, v.iter().map(|c| c * 0.5).collect()))
        .collect();
    IfsSpec::new(maps, vec![1.0 / 3.0; 3]).expect("preset is valid")
}

/// Model system on [0,1]: k affine maps x -> x/k + (i-1)/k.
pub fn interval_preset(k: usize, p: Option<Vec<f64>>) -> Result<IfsSpec> {
    if k < 2 {
        return Err(Error::InvalidConfig("alphabet size must be >= 2".into()));
    }
    let maps = (0..k)
        .map(|i| Similitude::scaling(1, 1.0 / k as f64, vec![i as f64 / k as f64]))
        .collect();
    let p = p.unwrap_or_else(|| vec![1.0 / k as f64; k]);
    IfsSpec::new(maps, p)
}

/// Named presets selectable from config files.
pub fn ifs_preset(name: &str) -> Result<IfsSpec> {
    match name {
        "sg" | "sierpinski" => Ok(sg_preset()),
        "interval2" => interval_preset(2, None),
        "interval3" => interval_preset(3, None),
        other => Err(Error::UnknownPreset(other.into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumerate_base_cases() {
        let w = enumerate_words(2, 1).unwrap();
        assert_eq!(w.len(), 2);
        assert_eq!(w[0].letters(), &[1]);
        assert_eq!(w[1].letters(), &[2]);

        let w = enumerate_words(3, 0).unwrap();
        assert_eq!(w.len(), 1);
        assert!(w[0].is_empty());
    }

    #[test]
    fn enumerate_is_lexicographic() {
        let w = enumerate_words(3, 2).unwrap();
        assert_eq!(w.len(), 9);
        let expect: [&[u8]; 4] = [&[1, 1], &[1, 2], &[1, 3], &[2, 1]];
        for (i, e) in expect.iter().enumerate() {
            assert_eq!(w[i].letters(), *e);
        }
        let mut sorted = w.clone();
        sorted.sort();
        assert_eq!(sorted, w);
    }

    #[test]
    fn enumerate_respects_cap() {
        let err = enumerate_words_capped(3, 11, DEFAULT_CELL_CAP).unwrap_err();
        match err {
            Error::CapExceeded { .. } => {}
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn measures_are_letter_products() {
        let p3 = [1.0 / 3.0; 3];
        assert_eq!(cell_measure(&Word::empty(), &p3).unwrap(), 1.0);
        let w = Word::new(vec![1, 3], 3).unwrap();
        assert!((cell_measure(&w, &p3).unwrap() - 1.0 / 9.0).abs() < 1e-16);

        let p = [0.2, 0.3, 0.5];
        let w = Word::new(vec![1, 1, 3], 3).unwrap();
        assert_eq!(cell_measure(&w, &p).unwrap(), 0.2 * 0.2 * 0.5);
    }

    #[test]
    fn word_round_trips_through_digits() {
        let w: Word = "213".parse().unwrap();
        assert_eq!(w.letters(), &[2, 1, 3]);
        assert_eq!(w.to_string(), "213");
        assert_eq!(Word::from_lex_index(w.lex_index(3), 3, 3), w);
    }

    #[test]
    fn sg_preset_shape() {
        let sg = sg_preset();
        assert_eq!(sg.k, 3);
        assert!(sg.maps.iter().all(|m| m.ratio == 0.5));
        let s = (3f64).ln() / (2f64).ln();
        assert!((s - 1.58496).abs() < 1e-5);
        assert_eq!(sg.common_ratio(), Some(0.5));
    }

    #[test]
    fn deep_word_contracts_to_fixed_point() {
        let sg = sg_preset();
        let base = sg.centroid();
        let w = Word::new(vec![1; 20], 3).unwrap();
        let p = project_point(&w, &sg, &base);
        let d = (p[0] * p[0] + p[1] * p[1]).sqrt();
        assert!(d < 1e-5, "distance to fixed point of the first map: {d}");
        assert!(projection_error_bound(&w, &sg) < 1e-4);
    }

    #[test]
    fn empty_word_projects_to_base() {
        let sg = sg_preset();
        let base = vec![0.25, 0.1];
        assert_eq!(project_point(&Word::empty(), &sg, &base), base);
    }

    #[test]
    fn projection_composes_maps() {
        // Hand-composed f_2(f_3(base)).
        let sg = sg_preset();
        let base = vec![0.3, 0.2];
        let w = Word::new(vec![2, 3], 3).unwrap();
        let got = project_point(&w, &sg, &base);
        let inner = [0.5 * base[0] + 0.25, 0.5 * base[1] + 3f64.sqrt() / 4.0];
        let expect = [0.5 * inner[0] + 0.5, 0.5 * inner[1]];
        assert!((got[0] - expect[0]).abs() < 1e-15);
        assert!((got[1] - expect[1]).abs() < 1e-15);
    }

    #[test]
    fn projection_contraction_in_base_point() {
        let sg = sg_preset();
        let w = Word::new(vec![2, 3, 1, 3], 3).unwrap();
        let a = project_point(&w, &sg, &[0.0, 0.0]);
        let b = project_point(&w, &sg, &[1.0, 0.5]);
        let d: f64 = (0..2)
            .map(|i| (a[i] - b[i]) * (a[i] - b[i]))
            .sum::<f64>()
            .sqrt();
        let base_d = (1.0f64 + 0.25).sqrt();
        let shrink = 0.5f64.powi(4);
        assert!(d <= shrink * base_d * (1.0 + 1e-12));
    }

    #[test]
    fn interval_preset_matches_subdivision() {
        let ifs = interval_preset(3, None).unwrap();
        let got = project_point(&Word::new(vec![2], 3).unwrap(), &ifs, &[0.0]);
        assert!((got[0] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(ifs.common_ratio(), Some(1.0 / 3.0));
    }

    #[test]
    fn bad_probability_vectors_rejected() {
        assert!(interval_preset(3, Some(vec![0.5, 0.5])).is_err());
        assert!(interval_preset(3, Some(vec![0.5, 0.6, -0.1])).is_err());
        assert!(interval_preset(3, Some(vec![0.2, 0.3, 0.6])).is_err());
    }
}
