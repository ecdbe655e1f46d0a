//! Averaged kernel weights on level-m partitions.
//!
//! Every entry is a cell-pair average of a scaled convolution kernel. For
//! two uniform cells the double integral reduces to the kernel integrated
//! against a tent of half-width h, and for piecewise-polynomial profiles
//! that tent integral has a closed form. Row-sum invariants then hold at
//! machine precision instead of quadrature precision.
//!
//! Boundary handling: periodic wrapping (single image), Dirichlet zero
//! extension (interior weights plus a per-cell absorption column), and
//! Neumann even reflection at both endpoints.

use crate::error::{Error, Result};
use crate::kernel::{KernelFamily, Parity};
use crate::math::{kahan_sum, wrap_torus};
use crate::partition::Partition;
use crate::reference::TrigPoly;
use rayon::prelude::*;
use std::io::Write as IoWrite;
use std::sync::Arc;

/// Role of the matrix in the particle systems; fixes sign/positivity checks
/// and whether the diffusion prefactor is folded into the entries.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WeightMode {
    /// Raw odd-kernel averages (antisymmetric), per-row drift applied later.
    Transport,
    /// Even-kernel averages scaled by 2 kappa / (m2 eps^2).
    Heat { kappa: f64 },
    /// Oriented one-sided averages a_{wv} for monotone flux coupling.
    Upwind,
    /// Raw averages of any admissible kernel.
    LinearGeneric,
}

impl WeightMode {
    pub fn name(&self) -> &'static str {
        match self {
            WeightMode::Transport => "transport",
            WeightMode::Heat { .. } => "heat",
            WeightMode::Upwind => "upwind",
            WeightMode::LinearGeneric => "linear_generic",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Periodic,
    Dirichlet,
    Neumann,
}

impl Boundary {
    pub fn name(&self) -> &'static str {
        match self {
            Boundary::Periodic => "periodic",
            Boundary::Dirichlet => "dirichlet",
            Boundary::Neumann => "neumann",
        }
    }
}

/// Sparse banded matrix of cell-pair averaged kernel values.
#[derive(Clone, Debug)]
pub struct WeightMatrix {
    level: usize,
    k: usize,
    epsilon: f64,
    mode: WeightMode,
    boundary: Boundary,
    /// Scalar folded into the stored entries (1 except for heat mode).
    prefactor: f64,
    rows: Vec<Vec<(u32, f64)>>,
    /// Transposed rows; built for upwind mode where both orientations act.
    cols: Option<Vec<Vec<(u32, f64)>>>,
    measures: Vec<f64>,
    /// Raw exterior-mass column for the Dirichlet zero extension.
    absorption: Option<Vec<f64>>,
    /// Band half-width used at assembly, in cells.
    band_cells: usize,
}

impl WeightMatrix {
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn mode(&self) -> WeightMode {
        self.mode
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn prefactor(&self) -> f64 {
        self.prefactor
    }

    pub fn band_cells(&self) -> usize {
        self.band_cells
    }

    pub fn measures(&self) -> &[f64] {
        &self.measures
    }

    pub fn absorption(&self) -> Option<&[f64]> {
        self.absorption.as_deref()
    }

    pub fn row(&self, i: usize) -> &[(u32, f64)] {
        &self.rows[i]
    }

    /// Transposed row (incoming entries), present in upwind mode.
    pub fn col(&self, j: usize) -> Option<&[(u32, f64)]> {
        self.cols.as_ref().map(|c| c[j].as_slice())
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        match self.rows[i].binary_search_by_key(&(j as u32), |&(c, _)| c) {
            Ok(pos) => self.rows[i][pos].1,
            Err(_) => 0.0,
        }
    }

    pub fn stored_entries(&self) -> usize {
        self.rows.iter().map(|r| r.len()).sum()
    }

    /// Measure-weighted row sum of the stored entries.
    pub fn weighted_row_sum(&self, i: usize) -> f64 {
        kahan_sum(
            self.rows[i]
                .iter()
                .map(|&(c, v)| v * self.measures[c as usize]),
        )
    }

    /// Measure-weighted row sum with the prefactor divided back out.
    pub fn raw_weighted_row_sum(&self, i: usize) -> f64 {
        self.weighted_row_sum(i) / self.prefactor
    }

    /// Largest total interaction rate of any cell, absorption included;
    /// reciprocal time scale for explicit stepping.
    pub fn max_rate(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n() {
            let mut rate: f64 = self.rows[i]
                .iter()
                .map(|&(c, v)| v.abs() * self.measures[c as usize])
                .sum();
            if let Some(alpha) = &self.absorption {
                rate += self.prefactor * alpha[i];
            }
            worst = worst.max(rate);
        }
        worst
    }

    /// out_w = sum_v entry(w,v) u_v nu(K_v).
    pub fn apply(&self, u: &[f64], out: &mut [f64]) {
        for (i, slot) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for &(c, v) in &self.rows[i] {
                acc += v * u[c as usize] * self.measures[c as usize];
            }
            *slot = acc;
        }
    }

    /// Sparse CSV with columns `row_word,col_word,value`.
    pub fn write_csv<W: IoWrite>(&self, out: &mut W, part: &Partition) -> Result<()> {
        writeln!(out, "row_word,col_word,value")?;
        for (i, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                writeln!(out, "{},{},{}", part.word(i), part.word(c as usize), v)?;
            }
        }
        Ok(())
    }

    /// JSON header describing the stored matrix.
    pub fn header_json(&self) -> serde_json::Value {
        let mut h = serde_json::json!({
            "m": self.level,
            "k": self.k,
            "epsilon": self.epsilon,
            "mode": self.mode.name(),
            "prefactor": self.prefactor,
            "boundary": self.boundary.name(),
            "band_cells": self.band_cells,
            "stored_entries": self.stored_entries(),
        });
        if let WeightMode::Heat { kappa } = self.mode {
            h["kappa"] = serde_json::json!(kappa);
        }
        h
    }
}

/// Kernel integrated against the tent (h - |z - c|)^+ : the overlap factor
/// of two width-h cells whose left endpoints differ by c. Closed form via
/// the profile antiderivatives; `scale` carries eps^(1-a).
fn tent_integral(kf: &KernelFamily, c: f64, h: f64) -> f64 {
    let eps = kf.epsilon;
    let profile = kf.profile();
    let scale = eps.powi(1 - kf.scaling_exponent);
    let left = profile.integral_linear_weight((c - h) / eps, c / eps, h - c, eps);
    let right = profile.integral_linear_weight(c / eps, (c + h) / eps, h + c, -eps);
    scale * (left + right)
}

/// Tent integral with the three periodic images that can intersect the
/// support when eps * Z < 1/2.
fn tent_integral_periodic(kf: &KernelFamily, c: f64, h: f64) -> f64 {
    tent_integral(kf, c, h) + tent_integral(kf, c - 1.0, h) + tent_integral(kf, c + 1.0, h)
}

fn require_parity(kf: &KernelFamily, mode: WeightMode) -> Result<()> {
    let ok = match mode {
        WeightMode::Transport => kf.parity == Parity::Odd,
        WeightMode::Heat { .. } => kf.parity == Parity::Even,
        WeightMode::Upwind => kf.parity == Parity::OneSided,
        WeightMode::LinearGeneric => true,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "{} mode cannot use a {:?} kernel",
            mode.name(),
            kf.parity
        )))
    }
}

/// Assemble the averaged weight matrix for a kernel family on a level-m
/// partition. Entries outside the support band are exactly zero and are
/// not stored.
pub fn averaged_weights(
    kf: &KernelFamily,
    part: &Arc<Partition>,
    mode: WeightMode,
    boundary: Boundary,
) -> Result<WeightMatrix> {
    require_parity(kf, mode)?;
    if !part.is_uniform() {
        return Err(Error::InvalidConfig(
            "kernel weights are defined for the uniform-weight model system".into(),
        ));
    }
    match boundary {
        Boundary::Periodic => {}
        Boundary::Dirichlet | Boundary::Neumann => {
            if kf.parity != Parity::Even {
                return Err(Error::InvalidConfig(
                    "boundary variants are defined for even kernels".into(),
                ));
            }
            if boundary == Boundary::Neumann {
                let extent = kf.scaled_extent();
                if extent >= 1.0 {
                    return Err(Error::ReflectionOverlap { extent });
                }
            }
        }
    }
    if boundary == Boundary::Periodic {
        kf.check_period()?;
    }

    let n = part.len();
    let h = part.cell_width();
    let prefactor = match mode {
        WeightMode::Heat { kappa } => kf.heat_prefactor(kappa),
        _ => 1.0,
    };
    let h2 = h * h;
    let band = (kf.scaled_extent() / h).ceil() as usize + 1;
    let lefts: Vec<f64> = (0..n).map(|i| part.interval(i).0).collect();

    let rows: Vec<Vec<(u32, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row = Vec::new();
            let mut push = |j: usize, raw: f64| {
                if raw != 0.0 {
                    row.push((j as u32, prefactor * raw));
                }
            };
            match boundary {
                Boundary::Periodic => {
                    let lo = i as isize - band as isize;
                    let hi = i as isize + band as isize;
                    if (hi - lo) as usize + 1 >= n {
                        for j in 0..n {
                            push(j, periodic_entry(kf, mode, lefts[i], lefts[j], h) / h2);
                        }
                    } else {
                        let mut cols: Vec<usize> = (lo..=hi)
                            .map(|j| j.rem_euclid(n as isize) as usize)
                            .collect();
                        cols.sort_unstable();
                        cols.dedup();
                        for j in cols {
                            push(j, periodic_entry(kf, mode, lefts[i], lefts[j], h) / h2);
                        }
                    }
                }
                Boundary::Dirichlet => {
                    for j in 0..n {
                        push(j, tent_integral(kf, lefts[i] - lefts[j], h) / h2);
                    }
                }
                Boundary::Neumann => {
                    for j in 0..n {
                        let direct = tent_integral(kf, lefts[i] - lefts[j], h);
                        let mu = lefts[i] + lefts[j] + h;
                        let reflected = tent_integral(kf, mu, h) + tent_integral(kf, mu - 2.0, h);
                        push(j, (direct + reflected) / h2);
                    }
                }
            }
            row
        })
        .collect();

    let absorption = if boundary == Boundary::Dirichlet {
        let eps = kf.epsilon;
        let profile = kf.profile();
        Some(
            (0..n)
                .map(|i| {
                    let a = lefts[i];
                    let right_tail = profile.integral_of_tail(a / eps, (a + h) / eps);
                    let left_tail =
                        profile.integral_of_tail((1.0 - a - h) / eps, (1.0 - a) / eps);
                    (eps / h) * (right_tail + left_tail)
                })
                .collect(),
        )
    } else {
        None
    };

    let cols = if mode == WeightMode::Upwind {
        let mut cols: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
        for (i, row) in rows.iter().enumerate() {
            for &(c, v) in row {
                cols[c as usize].push((i as u32, v));
            }
        }
        Some(cols)
    } else {
        None
    };

    Ok(WeightMatrix {
        level: part.level(),
        k: part.k(),
        epsilon: kf.epsilon,
        mode,
        boundary,
        prefactor,
        rows,
        cols,
        measures: part.measures().to_vec(),
        absorption,
        band_cells: band,
    })
}

/// One raw periodic entry; upwind orients the tent by the column offset.
fn periodic_entry(kf: &KernelFamily, mode: WeightMode, left_i: f64, left_j: f64, h: f64) -> f64 {
    match mode {
        // a_{wv}: mass the one-sided kernel carries from cell w forward
        // into cell v, so the tent sits at the column offset.
        WeightMode::Upwind => tent_integral_periodic(kf, left_j - left_i, h) * h,
        _ => tent_integral_periodic(kf, left_i - left_j, h),
    }
}

/// Dirichlet zero extension: interior pair averages on [0,1]^2 plus the
/// raw per-cell exterior mass (the absorption column).
pub fn dirichlet_variant(
    kf: &KernelFamily,
    part: &Arc<Partition>,
    kappa: f64,
) -> Result<WeightMatrix> {
    averaged_weights(kf, part, WeightMode::Heat { kappa }, Boundary::Dirichlet)
}

/// Neumann even reflection at both endpoints; preserves constants exactly.
pub fn neumann_variant(
    kf: &KernelFamily,
    part: &Arc<Partition>,
    kappa: f64,
) -> Result<WeightMatrix> {
    averaged_weights(kf, part, WeightMode::Heat { kappa }, Boundary::Neumann)
}

/// Operator family whose distance to its local target is measured by
/// `consistency_error`.
#[derive(Clone, Copy, Debug)]
pub enum ConsistencyMode {
    /// Nonlocal derivative against u'.
    Transport,
    /// Scaled diffusion kernel against kappa u''.
    Heat { kappa: f64 },
    /// Conservative centered flux against -(u^2/2)'.
    BurgersCentered,
    /// One-sided monotone flux against (u^2/2)'.
    Upwind,
}

/// L2 distance on an n-point torus grid between the nonlocal operator
/// applied to a trigonometric polynomial and its local target. The kernel
/// integral is evaluated per profile piece with Gauss-Legendre in the
/// scaled variable, so the quadrature error is negligible against the
/// consistency error being measured.
pub fn consistency_error(
    kf: &KernelFamily,
    mode: ConsistencyMode,
    u: &TrigPoly,
    n_grid: usize,
) -> Result<f64> {
    kf.check_period()?;
    match mode {
        ConsistencyMode::Transport | ConsistencyMode::BurgersCentered => {
            if kf.parity != Parity::Odd {
                return Err(Error::InvalidConfig("mode needs an odd kernel".into()));
            }
        }
        ConsistencyMode::Heat { .. } => {
            if kf.parity != Parity::Even {
                return Err(Error::InvalidConfig("mode needs an even kernel".into()));
            }
        }
        ConsistencyMode::Upwind => {
            if kf.parity != Parity::OneSided {
                return Err(Error::InvalidConfig("mode needs a one-sided kernel".into()));
            }
        }
    }

    let eps = kf.epsilon;
    let scale = eps.powi(1 - kf.scaling_exponent);
    // Gauss nodes per profile piece in the scaled variable.
    let mut nodes: Vec<(f64, f64)> = Vec::new();
    for piece in kf.profile().pieces() {
        let (xs, ws) = crate::math::gauss_legendre_on(piece.lo, piece.hi, 24);
        for (t, w) in xs.iter().zip(&ws) {
            nodes.push((*t, w * kf.profile().eval(*t)));
        }
    }

    let du = u.derivative();
    let ddu = du.derivative();
    let flux = |s: f64| 0.5 * s * s;

    let mut acc = 0.0;
    for j in 0..n_grid {
        let x = (j as f64 + 0.5) / n_grid as f64;
        let ux = u.eval(x);
        let apply = |g: &dyn Fn(f64) -> f64| -> f64 {
            let gx = g(x);
            let mut s = 0.0;
            for &(t, w) in &nodes {
                s += w * (g(x - eps * t) - gx);
            }
            scale * s
        };
        let err = match mode {
            ConsistencyMode::Transport => apply(&|y| u.eval(y)) - du.eval(x),
            ConsistencyMode::Heat { kappa } => {
                kf.heat_prefactor(kappa) * apply(&|y| u.eval(y)) - kappa * ddu.eval(x)
            }
            ConsistencyMode::BurgersCentered => {
                -apply(&|y| flux(u.eval(y))) + u.eval(x) * du.eval(x)
            }
            ConsistencyMode::Upwind => {
                let g = |a: f64, b: f64| {
                    let ap = a.max(0.0);
                    let bm = b.min(0.0);
                    0.5 * ap * ap + 0.5 * bm * bm
                };
                let mut s = 0.0;
                for &(t, w) in &nodes {
                    let z = eps * t;
                    s += w * (g(ux, u.eval(x + z)) - g(u.eval(x - z), ux));
                }
                scale * s - ux * du.eval(x)
            }
        };
        acc += err * err;
    }
    Ok((acc / n_grid as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::make_kernel;

    fn uniform(k: usize, m: usize) -> Arc<Partition> {
        Partition::uniform(k, m).unwrap()
    }

    #[test]
    fn even_box_level1_closed_form() {
        let kf = make_kernel("even_box", 1.0 / 3.0).unwrap();
        let part = uniform(3, 1);
        let wm = averaged_weights(&kf, &part, WeightMode::LinearGeneric, Boundary::Periodic)
            .unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.5 } else { 0.75 };
                assert!(
                    (wm.entry(i, j) - expect).abs() < 1e-12,
                    "({i},{j}): {}",
                    wm.entry(i, j)
                );
            }
        }
    }

    #[test]
    fn entries_match_midpoint_quadrature_oracle() {
        // 1000x1000 midpoint oracle on the periodized kernel.
        let kf = make_kernel("even_box", 0.22).unwrap();
        let part = uniform(3, 2);
        let wm = averaged_weights(&kf, &part, WeightMode::LinearGeneric, Boundary::Periodic)
            .unwrap();
        let h = part.cell_width();
        let n = 1000;
        for (i, j) in [(0usize, 0usize), (0, 1), (4, 6), (0, 8)] {
            let (ax, _) = part.interval(i);
            let (ay, _) = part.interval(j);
            let mut acc = 0.0;
            for a in 0..n {
                let x = ax + (a as f64 + 0.5) * h / n as f64;
                for b in 0..n {
                    let y = ay + (b as f64 + 0.5) * h / n as f64;
                    acc += kf.scaled_eval(wrap_torus(x - y));
                }
            }
            acc /= (n * n) as f64;
            assert!(
                (wm.entry(i, j) - acc).abs() < 2e-3,
                "({i},{j}): {} vs {acc}",
                wm.entry(i, j)
            );
        }
    }

    #[test]
    fn row_sums_even_one_odd_zero() {
        for k in [2usize, 3] {
            for m in 1..=5 {
                for eps_pow in 2..=5 {
                    let eps = 0.5f64.powi(eps_pow);
                    let part = uniform(k, m);
                    let even = make_kernel("even_box", eps).unwrap();
                    let wm = averaged_weights(
                        &even,
                        &part,
                        WeightMode::LinearGeneric,
                        Boundary::Periodic,
                    )
                    .unwrap();
                    for i in 0..part.len() {
                        assert!(
                            (wm.weighted_row_sum(i) - 1.0).abs() < 1e-12,
                            "even k={k} m={m} eps={eps} row {i}"
                        );
                    }

                    let odd = make_kernel("odd_box", eps).unwrap();
                    let wo =
                        averaged_weights(&odd, &part, WeightMode::Transport, Boundary::Periodic)
                            .unwrap();
                    for i in 0..part.len() {
                        assert!(
                            wo.weighted_row_sum(i).abs() < 1e-12,
                            "odd k={k} m={m} eps={eps} row {i}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn parity_transfers_to_matrix() {
        let part = uniform(2, 5);
        let odd = make_kernel("odd_box", 0.1).unwrap();
        let wo = averaged_weights(&odd, &part, WeightMode::Transport, Boundary::Periodic)
            .unwrap();
        let even = make_kernel("even_box", 0.1).unwrap();
        let we = averaged_weights(&even, &part, WeightMode::Heat { kappa: 1.0 }, Boundary::Periodic)
            .unwrap();
        let n = part.len();
        for i in 0..n {
            for j in 0..n {
                assert!(
                    (wo.entry(i, j) + wo.entry(j, i)).abs() < 1e-12,
                    "antisymmetry ({i},{j})"
                );
                assert!((we.entry(i, j) - we.entry(j, i)).abs() < 1e-12 * we.prefactor());
                assert!(we.entry(i, j) >= -1e-14);
            }
        }
    }

    #[test]
    fn heat_prefactor_is_folded() {
        let eps = 0.125;
        let kappa = 0.7;
        let kf = make_kernel("even_box", eps).unwrap();
        let part = uniform(2, 4);
        let heat = averaged_weights(&kf, &part, WeightMode::Heat { kappa }, Boundary::Periodic)
            .unwrap();
        let raw = averaged_weights(&kf, &part, WeightMode::LinearGeneric, Boundary::Periodic)
            .unwrap();
        let pf = 2.0 * kappa / (kf.m2() * eps * eps);
        assert!((heat.prefactor() - pf).abs() < 1e-12);
        for i in 0..part.len() {
            assert!((heat.raw_weighted_row_sum(i) - raw.weighted_row_sum(i)).abs() < 1e-12);
        }
    }

    #[test]
    fn scaling_identity_halved_epsilon() {
        // Halving eps equals pre-scaling the profile: profile'(t) = 2^a profile(2t).
        let eps = 0.2;
        let preset = make_kernel("odd_box", eps / 2.0).unwrap();
        let rescaled = crate::kernel::make_kernel_custom(
            "odd_box_prescaled",
            Parity::Odd,
            vec![
                crate::kernel::Piece {
                    lo: -0.5,
                    hi: 0.0,
                    coeffs: vec![4.0],
                },
                crate::kernel::Piece {
                    lo: 0.0,
                    hi: 0.5,
                    coeffs: vec![-4.0],
                },
            ],
            eps,
        )
        .unwrap();
        let part = uniform(2, 4);
        let a = averaged_weights(&preset, &part, WeightMode::Transport, Boundary::Periodic)
            .unwrap();
        let b = averaged_weights(&rescaled, &part, WeightMode::Transport, Boundary::Periodic)
            .unwrap();
        for i in 0..part.len() {
            for j in 0..part.len() {
                assert!(
                    (a.entry(i, j) - b.entry(i, j)).abs() < 1e-10 * (1.0 + a.entry(i, j).abs()),
                    "({i},{j})"
                );
            }
        }
    }

    #[test]
    fn band_is_pruned_and_wide_enough() {
        let kf = make_kernel("even_box", 0.0625).unwrap();
        let part = uniform(2, 6);
        let wm = averaged_weights(&kf, &part, WeightMode::LinearGeneric, Boundary::Periodic)
            .unwrap();
        let n = part.len();
        let needed = (kf.scaled_extent() * n as f64).ceil() as usize + 1;
        assert!(wm.band_cells() >= needed);
        // Far pairs are not stored at all.
        assert_eq!(wm.entry(0, n / 2), 0.0);
        assert!(wm.stored_entries() < n * n / 2);
    }

    #[test]
    fn dirichlet_mass_splits_into_interior_and_absorbed() {
        let kf = make_kernel("even_box", 1.0 / 3.0).unwrap();
        let part = uniform(3, 1);
        let wm = dirichlet_variant(&kf, &part, 1.0).unwrap();
        let alpha = wm.absorption().unwrap();
        // Hand value for the first cell.
        assert!((alpha[0] - 0.25).abs() < 1e-12, "alpha = {}", alpha[0]);
        for i in 0..part.len() {
            let total = wm.raw_weighted_row_sum(i) + alpha[i];
            assert!((total - 1.0).abs() < 1e-12, "row {i}: {total}");
        }

        // Interior cells far from both endpoints absorb nothing.
        let fine = uniform(3, 4);
        let kf = make_kernel("even_box", 0.05).unwrap();
        let wm = dirichlet_variant(&kf, &fine, 1.0).unwrap();
        let alpha = wm.absorption().unwrap();
        let mid = fine.len() / 2;
        assert_eq!(alpha[mid], 0.0);
        assert!(alpha[0] > 0.0);
    }

    #[test]
    fn dirichlet_absorption_matches_quadrature_oracle() {
        // For the box profile the exterior mass at x is exactly
        // (max(0, eps - x) + max(0, x + eps - 1)) / (2 eps); average it over
        // each cell with a fine midpoint rule.
        let eps = 0.21;
        let kf = make_kernel("even_box", eps).unwrap();
        let part = uniform(3, 2);
        let wm = dirichlet_variant(&kf, &part, 1.0).unwrap();
        let alpha = wm.absorption().unwrap();
        let h = part.cell_width();
        let n = 20_000;
        for i in 0..part.len() {
            let (a, _) = part.interval(i);
            let mut acc = 0.0;
            for s in 0..n {
                let x = a + (s as f64 + 0.5) * h / n as f64;
                acc += ((eps - x).max(0.0) + (x + eps - 1.0).max(0.0)) / (2.0 * eps);
            }
            acc /= n as f64;
            assert!(
                (alpha[i] - acc).abs() < 1e-8,
                "cell {i}: {} vs {acc}",
                alpha[i]
            );
        }
    }

    #[test]
    fn neumann_preserves_constants_and_matches_reflection_oracle() {
        let eps = 0.18;
        let kf = make_kernel("even_box", eps).unwrap();
        let part = uniform(3, 2);
        let wm = neumann_variant(&kf, &part, 1.0).unwrap();
        for i in 0..part.len() {
            assert!(
                (wm.raw_weighted_row_sum(i) - 1.0).abs() < 1e-12,
                "row {i}: {}",
                wm.raw_weighted_row_sum(i)
            );
        }

        // Interior cells see the whole-line weights.
        let interior = part.len() / 2;
        let free = averaged_weights(&kf, &part, WeightMode::Heat { kappa: 1.0 }, Boundary::Dirichlet)
            .unwrap();
        for j in 0..part.len() {
            assert!((wm.entry(interior, j) - free.entry(interior, j)).abs() < 1e-12);
        }

        // Boundary cell against a brute-force reflected-kernel quadrature.
        let h = part.cell_width();
        let reflect = |y: f64| -> f64 {
            // fold y into [0,1] by reflections at 0 and 1
            let mut t = y.rem_euclid(2.0);
            if t > 1.0 {
                t = 2.0 - t;
            }
            t
        };
        let n = 1500;
        for j in 0..3 {
            let mut acc = 0.0;
            for a in 0..n {
                let x = (a as f64 + 0.5) * h / n as f64; // cell 0
                for b in 0..n {
                    let y = -1.0 + (b as f64 + 0.5) * 3.0 / (n as f64); // whole line segment [-1,2]
                    let yf = reflect(y);
                    let (c0, c1) = part.interval(j);
                    if yf >= c0 && yf < c1 {
                        acc += kf.scaled_eval(x - y) * 3.0 / n as f64;
                    }
                }
            }
            acc /= n as f64; // average over x
            let got = wm.entry(0, j) / wm.prefactor() * h; // raw integral against the cell
            assert!(
                (got - acc).abs() < 1e-3,
                "col {j}: {got} vs oracle {acc}"
            );
        }
    }

    #[test]
    fn upwind_orientation_and_conservation_structure() {
        let eps = 0.05;
        let kf = make_kernel("upwind_box", eps).unwrap();
        let part = uniform(2, 5);
        let wm = averaged_weights(&kf, &part, WeightMode::Upwind, Boundary::Periodic).unwrap();
        let n = part.len();
        // One-sided: mass flows forward, so a_{w,w+gap} > 0 and a_{w,w-gap} = 0
        // beyond the immediate overlap.
        assert!(wm.entry(0, 1) > 0.0);
        assert_eq!(wm.entry(0, n - 2), 0.0);
        // Total outgoing rate equals integral of the scaled kernel: 1/eps.
        for i in 0..n {
            let total: f64 = wm.row(i).iter().map(|&(_, v)| v).sum();
            assert!((total - 1.0 / eps).abs() < 1e-9, "row {i}: {total}");
        }
        // Transpose is available.
        assert!(wm.col(0).is_some());
    }

    #[test]
    fn consistency_orders() {
        let u = TrigPoly::from_modes(0.0, &[(1, 0.0, 1.0)]); // sin 2 pi x
        let grid = 1 << 11;

        // Heat: slope 2 over halving eps.
        let mut prev = None;
        for p in 3..=6 {
            let eps = 0.5f64.powi(p);
            let kf = make_kernel("even_box", eps).unwrap();
            let e = consistency_error(&kf, ConsistencyMode::Heat { kappa: 1.0 }, &u, grid)
                .unwrap();
            if let Some(last) = prev {
                let ratio: f64 = last / e;
                assert!(
                    (ratio - 4.0).abs() < 0.6,
                    "heat ratio at eps=2^-{p}: {ratio}"
                );
            }
            prev = Some(e);
        }

        // Transport: the odd symmetric profile kills the second moment, so
        // the observed order is 2 even though the guaranteed bound is 1.
        let kf = make_kernel("odd_box", 0.01).unwrap();
        let e = consistency_error(&kf, ConsistencyMode::Transport, &u, grid).unwrap();
        let du_norm = (2.0 * std::f64::consts::PI).powi(2) / 2f64.sqrt(); // |u''|_L2
        assert!(e <= kf.c_eta * 0.01 * du_norm * 1.01, "bound violated: {e}");

        // Constant data: exactly zero under every zero-mass form.
        let c = TrigPoly::constant(0.8);
        let e0 = consistency_error(&kf, ConsistencyMode::Transport, &c, 128).unwrap();
        assert!(e0 < 1e-14);
    }
}
