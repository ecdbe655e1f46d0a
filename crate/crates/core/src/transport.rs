//! Cell averages and step functions: the level-m action of the isometry
//! between functions on the attractor and functions on [0, 1].
//!
//! Functions are represented by their per-cell averages in lexicographic
//! word order; kernels by per-cell-pair averages. Averages on the interval
//! use Gauss-Legendre quadrature (exact for polynomial data up to the rule
//! degree) or deterministic symbolic anchors (descendant-cell midpoints),
//! which make interval-side and attractor-side averages agree bit for bit.

use crate::error::{Error, Result};
use crate::ifs::{cell_count, IfsSpec, Word, DEFAULT_CELL_CAP};
use crate::math::{gauss_legendre, kahan_sum};
use crate::partition::Partition;
use std::io::Write as IoWrite;
use std::sync::Arc;

/// Per-cell quadrature used when averaging pointwise-defined data.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CellQuad {
    /// Gauss-Legendre with the given node count per cell.
    Gauss(usize),
    /// Midpoints of all descendant cells the given number of levels below,
    /// equally weighted.
    Anchors(usize),
}

impl Default for CellQuad {
    fn default() -> Self {
        CellQuad::Gauss(8)
    }
}

impl CellQuad {
    /// Nodes and weights for one cell, weights summing to the cell width.
    fn rule(&self, part: &Partition, cell: usize) -> (Vec<f64>, Vec<f64>) {
        match *self {
            CellQuad::Gauss(n) => {
                let (a, b) = part.interval(cell);
                let (xs, ws) = gauss_legendre(n);
                let mid = 0.5 * (a + b);
                let half = 0.5 * (b - a);
                (
                    xs.iter().map(|x| mid + half * x).collect(),
                    ws.iter().map(|w| w * half).collect(),
                )
            }
            CellQuad::Anchors(depth) => {
                let k = part.k();
                let sub = k.pow(depth as u32);
                let fine_total = (part.len() * sub) as f64;
                let w = 1.0 / fine_total;
                let base = cell * sub;
                (
                    (0..sub)
                        .map(|j| ((base + j) as f64 + 0.5) / fine_total)
                        .collect(),
                    vec![w; sub],
                )
            }
        }
    }
}

/// A piecewise-constant function over a level-m partition.
#[derive(Clone, Debug)]
pub struct StepFunction {
    partition: Arc<Partition>,
    pub values: Vec<f64>,
}

impl StepFunction {
    pub fn new(partition: Arc<Partition>, values: Vec<f64>) -> Result<Self> {
        if values.len() != partition.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {} cells",
                values.len(),
                partition.len()
            )));
        }
        Ok(StepFunction { partition, values })
    }

    pub fn constant(partition: Arc<Partition>, c: f64) -> Self {
        let n = partition.len();
        StepFunction {
            partition,
            values: vec![c; n],
        }
    }

    pub fn partition(&self) -> &Arc<Partition> {
        &self.partition
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Measure-weighted integral: sum of u_w nu(K_w).
    pub fn integral(&self) -> f64 {
        kahan_sum(
            self.values
                .iter()
                .zip(self.partition.measures())
                .map(|(u, m)| u * m),
        )
    }

    /// Measure-weighted L2 norm.
    pub fn l2_norm(&self) -> f64 {
        kahan_sum(
            self.values
                .iter()
                .zip(self.partition.measures())
                .map(|(u, m)| u * u * m),
        )
        .max(0.0)
        .sqrt()
    }

    /// Measure-weighted L2 distance to another step function (same level).
    pub fn l2_distance(&self, other: &StepFunction) -> Result<f64> {
        if other.len() != self.len() {
            return Err(Error::DimensionMismatch(
                "step functions live on different partitions".into(),
            ));
        }
        Ok(kahan_sum(
            self.values
                .iter()
                .zip(&other.values)
                .zip(self.partition.measures())
                .map(|((a, b), m)| (a - b) * (a - b) * m),
        )
        .max(0.0)
        .sqrt())
    }

    /// Average descendant values down to a coarser level, children weighted
    /// by the letter probabilities.
    pub fn coarsen(&self, to_level: usize) -> Result<StepFunction> {
        let m = self.partition.level();
        if to_level > m {
            return Err(Error::InvalidConfig(format!(
                "cannot coarsen level {m} to finer level {to_level}"
            )));
        }
        let k = self.partition.k();
        let p = self.partition.weights().to_vec();
        let coarse = Partition::with_weights(k, to_level, p.clone())?;
        let mut values = self.values.clone();
        let mut level = m;
        while level > to_level {
            let n = values.len() / k;
            let mut next = vec![0.0; n];
            for (i, slot) in next.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (j, &pj) in p.iter().enumerate() {
                    acc += pj * values[i * k + j];
                }
                *slot = acc;
            }
            values = next;
            level -= 1;
        }
        StepFunction::new(coarse, values)
    }

    /// CSV with columns `word,value`.
    pub fn write_csv<W: IoWrite>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "word,value")?;
        for (w, v) in self.partition.words().iter().zip(&self.values) {
            writeln!(out, "{},{}", w, v)?;
        }
        Ok(())
    }
}

/// A step kernel: per-cell-pair averages, dense row-major storage.
#[derive(Clone, Debug)]
pub struct StepKernel {
    partition: Arc<Partition>,
    pub entries: Vec<f64>,
}

impl StepKernel {
    pub fn new(partition: Arc<Partition>, entries: Vec<f64>) -> Result<Self> {
        let n = partition.len();
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for {n}x{n} kernel",
                entries.len()
            )));
        }
        Ok(StepKernel { partition, entries })
    }

    pub fn partition(&self) -> &Arc<Partition> {
        &self.partition
    }

    pub fn n(&self) -> usize {
        self.partition.len()
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.n() + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let n = self.n();
        &self.entries[row * n..(row + 1) * n]
    }

    /// Exact L2(lambda x lambda) distance to the block-average projection
    /// at a coarser level. The receiver is treated as exact step data.
    pub fn projection_error(&self, to_level: usize) -> Result<f64> {
        let m = self.partition.level();
        if to_level > m {
            return Err(Error::InvalidConfig(
                "projection level must be at most the kernel level".into(),
            ));
        }
        let n = self.n();
        let k = self.partition.k();
        let block = k.pow((m - to_level) as u32);
        let coarse = n / block;
        let cell_area = (1.0 / n as f64) * (1.0 / n as f64);
        let mut err2 = 0.0;
        for bi in 0..coarse {
            for bj in 0..coarse {
                let mut mean = 0.0;
                for i in 0..block {
                    for j in 0..block {
                        mean += self.entry(bi * block + i, bj * block + j);
                    }
                }
                mean /= (block * block) as f64;
                let mut acc = 0.0;
                for i in 0..block {
                    for j in 0..block {
                        let d = self.entry(bi * block + i, bj * block + j) - mean;
                        acc += d * d;
                    }
                }
                err2 += acc * cell_area;
            }
        }
        Ok(err2.max(0.0).sqrt())
    }

    /// CSV with columns `word_row,word_col,value`; zero entries are skipped
    /// when `sparse` is set.
    pub fn write_csv<W: IoWrite>(&self, out: &mut W, sparse: bool) -> Result<()> {
        writeln!(out, "word_row,word_col,value")?;
        let words = self.partition.words();
        for (i, wr) in words.iter().enumerate() {
            for (j, wc) in words.iter().enumerate() {
                let v = self.entry(i, j);
                if sparse && v == 0.0 {
                    continue;
                }
                writeln!(out, "{},{},{}", wr, wc, v)?;
            }
        }
        Ok(())
    }
}

/// Per-cell averages of a pointwise function on [0, 1].
pub fn cell_averages<F>(f: F, partition: &Arc<Partition>, quad: CellQuad) -> Result<StepFunction>
where
    F: Fn(f64) -> f64,
{
    let n = partition.len();
    let h = partition.cell_width();
    let mut values = vec![0.0; n];
    for (i, slot) in values.iter_mut().enumerate() {
        let (xs, ws) = quad.rule(partition, i);
        let mut acc = 0.0;
        for (x, w) in xs.iter().zip(&ws) {
            let v = f(*x);
            if !v.is_finite() {
                return Err(Error::NonFiniteValue(format!("f({x}) = {v}")));
            }
            acc += w * v;
        }
        *slot = acc / h;
    }
    StepFunction::new(partition.clone(), values)
}

/// Per-cell-pair averages of a pointwise kernel on [0, 1]^2 (tensorized
/// quadrature). Pairs of cells separated by more than `support_radius`
/// are set to exactly zero without evaluating the kernel.
pub fn kernel_cell_averages<F>(
    kernel: F,
    partition: &Arc<Partition>,
    quad: CellQuad,
    support_radius: Option<f64>,
) -> Result<StepKernel>
where
    F: Fn(f64, f64) -> f64,
{
    let n = partition.len();
    let h = partition.cell_width();
    let cell_area = h * h;
    let rules: Vec<(Vec<f64>, Vec<f64>)> = (0..n).map(|i| quad.rule(partition, i)).collect();
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        let mid_i = partition.midpoint(i);
        for j in 0..n {
            if let Some(r) = support_radius {
                let gap = (mid_i - partition.midpoint(j)).abs() - h;
                if gap > r {
                    continue;
                }
            }
            let (xs, wxs) = &rules[i];
            let (ys, wys) = &rules[j];
            let mut acc = 0.0;
            for (x, wx) in xs.iter().zip(wxs) {
                let mut inner = 0.0;
                for (y, wy) in ys.iter().zip(wys) {
                    let v = kernel(*x, *y);
                    if !v.is_finite() {
                        return Err(Error::NonFiniteValue(format!("W({x},{y}) = {v}")));
                    }
                    inner += wy * v;
                }
                acc += wx * inner;
            }
            entries[i * n + j] = acc / cell_area;
        }
    }
    StepKernel::new(partition.clone(), entries)
}

/// Measure-weighted integral of a step function.
pub fn integral_of_step(u: &StepFunction) -> f64 {
    u.integral()
}

/// L2(lambda) distance between the step reconstruction of `u` and a
/// pointwise function, by per-cell quadrature. By the measure isometry this
/// is also the attractor-side L2 distance.
pub fn l2_error<F>(u: &StepFunction, f: F, quad: CellQuad) -> f64
where
    F: Fn(f64) -> f64,
{
    let part = u.partition();
    let mut acc = Vec::with_capacity(part.len());
    for i in 0..part.len() {
        let (xs, ws) = quad.rule(part, i);
        let mut cell = 0.0;
        for (x, w) in xs.iter().zip(&ws) {
            let d = u.values[i] - f(*x);
            cell += w * d * d;
        }
        acc.push(cell);
    }
    kahan_sum(acc.into_iter()).max(0.0).sqrt()
}

/// Attractor-side cell averages of a function on R^d: every level-m cell is
/// averaged over the anchor points of its depth-`depth` descendants, weighted
/// by the letter probabilities. Deeper `depth` refines the average.
pub fn fractal_cell_averages<F>(
    f: F,
    ifs: &IfsSpec,
    m: usize,
    depth: usize,
) -> Result<StepFunction>
where
    F: Fn(&[f64]) -> f64,
{
    let k = ifs.k;
    cell_count(k, m + depth, DEFAULT_CELL_CAP)?;
    let partition = Partition::with_weights(k, m, ifs.p.clone())?;
    let anchors = descendant_anchors(ifs, depth);
    let words = partition.words().to_vec();
    let mut values = vec![0.0; words.len()];
    for (slot, w) in values.iter_mut().zip(&words) {
        let mut acc = 0.0;
        for (point, weight) in &anchors {
            let mapped = crate::ifs::project_point(w, ifs, point);
            let v = f(&mapped);
            if !v.is_finite() {
                return Err(Error::NonFiniteValue(format!("f({mapped:?}) = {v}")));
            }
            acc += weight * v;
        }
        *slot = acc;
    }
    StepFunction::new(partition, values)
}

/// Attractor-side cell-pair averages of a kernel on R^d x R^d over symbolic
/// descendant anchors.
pub fn fractal_kernel_averages<F>(
    kernel: F,
    ifs: &IfsSpec,
    m: usize,
    depth: usize,
) -> Result<StepKernel>
where
    F: Fn(&[f64], &[f64]) -> f64,
{
    let k = ifs.k;
    cell_count(k, m + depth, DEFAULT_CELL_CAP)?;
    let partition = Partition::with_weights(k, m, ifs.p.clone())?;
    let anchors = descendant_anchors(ifs, depth);
    let words = partition.words().to_vec();
    let n = words.len();
    // Anchor points per cell, in descendant lexicographic order.
    let per_cell: Vec<Vec<Vec<f64>>> = words
        .iter()
        .map(|w| {
            anchors
                .iter()
                .map(|(point, _)| crate::ifs::project_point(w, ifs, point))
                .collect()
        })
        .collect();
    let weights: Vec<f64> = anchors.iter().map(|(_, wgt)| *wgt).collect();
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for (pi, wi) in per_cell[i].iter().zip(&weights) {
                let mut inner = 0.0;
                for (pj, wj) in per_cell[j].iter().zip(&weights) {
                    inner += wj * kernel(pi, pj);
                }
                acc += wi * inner;
            }
            entries[i * n + j] = acc;
        }
    }
    StepKernel::new(partition, entries)
}

/// Anchor points f_v(base) with relative measures, for all depth-`depth`
/// words v, base at the attractor barycenter.
fn descendant_anchors(ifs: &IfsSpec, depth: usize) -> Vec<(Vec<f64>, f64)> {
    let base = ifs.centroid();
    let words = crate::ifs::enumerate_words_capped(ifs.k, depth, DEFAULT_CELL_CAP)
        .expect("depth capped by caller");
    words
        .into_iter()
        .map(|v| {
            let weight = crate::ifs::cell_measure(&v, &ifs.p).expect("valid word");
            (crate::ifs::project_point(&v, ifs, &base), weight)
        })
        .collect()
}

/// Pull a kernel on the attractor back to the unit square through the
/// depth-`depth` truncation of the symbolic coordinate: each argument is
/// coded to a word and mapped to its anchor point.
pub fn pullback_kernel<F>(kernel: F, ifs: &IfsSpec, depth: usize) -> impl Fn(f64, f64) -> f64
where
    F: Fn(&[f64], &[f64]) -> f64,
{
    let ifs = ifs.clone();
    let base = ifs.centroid();
    let k = ifs.k;
    move |x: f64, y: f64| {
        let wx = crate::partition::word_of_point(x, k, depth).expect("point in [0,1]");
        let wy = crate::partition::word_of_point(y, k, depth).expect("point in [0,1]");
        let px = crate::ifs::project_point(&wx, &ifs, &base);
        let py = crate::ifs::project_point(&wy, &ifs, &base);
        kernel(&px, &py)
    }
}

/// Function version of `pullback_kernel`.
pub fn pullback_function<F>(f: F, ifs: &IfsSpec, depth: usize) -> impl Fn(f64) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    let ifs = ifs.clone();
    let base = ifs.centroid();
    let k = ifs.k;
    move |x: f64| {
        let w = crate::partition::word_of_point(x, k, depth).expect("point in [0,1]");
        f(&crate::ifs::project_point(&w, &ifs, &base))
    }
}

/// Level-m cell-pair averages of an interval-side kernel, computed through
/// the word machinery: every cell is refined `depth` levels, each descendant
/// contributes its interval midpoint. With the same anchors this agrees bit
/// for bit with `kernel_cell_averages(.., CellQuad::Anchors(depth), ..)`.
pub fn lifted_kernel_cell_averages<F>(
    kernel: F,
    partition: &Arc<Partition>,
    depth: usize,
) -> Result<StepKernel>
where
    F: Fn(f64, f64) -> f64,
{
    let k = partition.k();
    let m = partition.level();
    cell_count(k, m + depth, DEFAULT_CELL_CAP)?;
    let descendants = crate::ifs::enumerate_words_capped(k, depth, DEFAULT_CELL_CAP)?;
    let fine_total = (partition.len() * descendants.len()) as f64;
    let n = partition.len();
    // Midpoint of the interval coded by w . v, through word concatenation.
    let anchor = |w: &Word, v: &Word| -> f64 {
        let full = w.concat(v);
        (full.lex_index(k) as f64 + 0.5) / fine_total
    };
    let words = partition.words().to_vec();
    // Same float operations as kernel_cell_averages with anchor quadrature:
    // per-anchor weight 1/fine_total, one division by the cell area at the end.
    let h = partition.cell_width();
    let cell_area = h * h;
    let w_anchor = 1.0 / fine_total;
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for vi in &descendants {
                let x = anchor(&words[i], vi);
                let mut inner = 0.0;
                for vj in &descendants {
                    let y = anchor(&words[j], vj);
                    inner += w_anchor * kernel(x, y);
                }
                acc += w_anchor * inner;
            }
            entries[i * n + j] = acc / cell_area;
        }
    }
    StepKernel::new(partition.clone(), entries)
}
