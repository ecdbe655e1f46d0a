//! Scaled nonlocal kernel families: piecewise-polynomial base profiles on
//! bounded support, their exact moments, and periodized evaluation.
//!
//! A family is `kernel_eps(z) = eps^-a * profile(z / eps)` with `a = 1` for
//! even diffusion profiles and `a = 2` for odd derivative-type and one-sided
//! upwind profiles. Moments of the profile are stored in closed form so the
//! normalization checks and prefactors are exact.

use crate::error::{Error, Result};
use crate::math::wrap_torus;

/// One polynomial piece on [lo, hi]; coefficients in increasing degree.
#[derive(Clone, Debug)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub coeffs: Vec<f64>,
}

impl Piece {
    fn eval(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
    }

    /// Exact integral of t^j * poly(t) over [a, b] (clipped to the piece).
    fn moment_on(&self, j: u32, a: f64, b: f64) -> f64 {
        let a = a.max(self.lo);
        let b = b.min(self.hi);
        if b <= a {
            return 0.0;
        }
        let mut acc = 0.0;
        for (i, &c) in self.coeffs.iter().enumerate() {
            let pow = i as u32 + j + 1;
            acc += c * (b.powi(pow as i32) - a.powi(pow as i32)) / pow as f64;
        }
        acc
    }

    /// Exact integral of poly(t) * (a0 + a1 t) over [a, b] (clipped).
    fn linear_weighted_on(&self, a: f64, b: f64, a0: f64, a1: f64) -> f64 {
        let a = a.max(self.lo);
        let b = b.min(self.hi);
        if b <= a {
            return 0.0;
        }
        let mut acc = 0.0;
        for (i, &c) in self.coeffs.iter().enumerate() {
            let p1 = i as u32 + 1;
            let p2 = i as u32 + 2;
            acc += c * a0 * (b.powi(p1 as i32) - a.powi(p1 as i32)) / p1 as f64;
            acc += c * a1 * (b.powi(p2 as i32) - a.powi(p2 as i32)) / p2 as f64;
        }
        acc
    }
}

/// Piecewise polynomial with sorted, non-overlapping pieces.
#[derive(Clone, Debug)]
pub struct PiecewisePoly {
    pieces: Vec<Piece>,
}

impl PiecewisePoly {
    pub fn new(mut pieces: Vec<Piece>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::InvalidConfig("profile needs at least one piece".into()));
        }
        pieces.sort_by(|a, b| a.lo.partial_cmp(&b.lo).unwrap());
        for p in &pieces {
            if !(p.lo < p.hi) || !p.lo.is_finite() || !p.hi.is_finite() {
                return Err(Error::InvalidConfig("piece bounds out of order".into()));
            }
        }
        for w in pieces.windows(2) {
            if w[0].hi > w[1].lo + 1e-15 {
                return Err(Error::InvalidConfig("pieces overlap".into()));
            }
        }
        Ok(PiecewisePoly { pieces })
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn support(&self) -> (f64, f64) {
        (
            self.pieces.first().unwrap().lo,
            self.pieces.last().unwrap().hi,
        )
    }

    /// Pointwise value; on an exact boundary between pieces (or at the edge
    /// of the support) the mean of the one-sided values is returned.
    pub fn eval(&self, t: f64) -> f64 {
        let (lo, hi) = self.support();
        if t < lo || t > hi {
            return 0.0;
        }
        let mut left: Option<f64> = None;
        let mut right: Option<f64> = None;
        for p in &self.pieces {
            if t > p.lo && t < p.hi {
                return p.eval(t);
            }
            if t == p.hi {
                left = Some(p.eval(t));
            }
            if t == p.lo {
                right = Some(p.eval(t));
            }
        }
        match (left, right) {
            (Some(a), Some(b)) => 0.5 * (a + b),
            (Some(a), None) => 0.5 * a,
            (None, Some(b)) => 0.5 * b,
            (None, None) => 0.0,
        }
    }

    /// Exact moment: integral of t^j * profile(t).
    pub fn moment(&self, j: u32) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.moment_on(j, p.lo, p.hi))
            .sum()
    }

    /// Integral of |t|^j * |profile(t)|. Exact when each piece keeps one
    /// sign; sign-changing pieces fall back to a fine composite rule.
    pub fn abs_moment(&self, j: u32) -> f64 {
        let mut acc = 0.0;
        for p in &self.pieces {
            if let Some(sign) = piece_sign(p) {
                // Split at 0 so |t|^j is polynomial on each part.
                let neg = p.moment_on(j, p.lo, p.hi.min(0.0));
                let pos = p.moment_on(j, p.lo.max(0.0), p.hi);
                let neg_sign = if j % 2 == 1 { -1.0 } else { 1.0 };
                acc += sign * (neg_sign * neg + pos);
            } else {
                let n = 4096;
                let h = (p.hi - p.lo) / n as f64;
                let mut s = 0.0;
                for i in 0..n {
                    let t = p.lo + (i as f64 + 0.5) * h;
                    s += t.abs().powi(j as i32) * p.eval(t).abs();
                }
                acc += s * h;
            }
        }
        acc
    }

    /// Integral of profile over [s0, s1].
    pub fn definite_integral(&self, s0: f64, s1: f64) -> f64 {
        self.pieces.iter().map(|p| p.moment_on(0, s0, s1)).sum()
    }

    /// Integral of profile(t) * (a0 + a1 t) over [s0, s1].
    pub fn integral_linear_weight(&self, s0: f64, s1: f64, a0: f64, a1: f64) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.linear_weighted_on(s0, s1, a0, a1))
            .sum()
    }

    /// Right tail mass: integral of profile over [s, support end].
    pub fn tail(&self, s: f64) -> f64 {
        let (_, hi) = self.support();
        self.definite_integral(s, hi)
    }

    /// Integral over s in [s0, s1] of tail(s); Fubini gives the closed form.
    pub fn integral_of_tail(&self, s0: f64, s1: f64) -> f64 {
        self.integral_linear_weight(s0, s1, -s0, 1.0) + (s1 - s0) * self.tail(s1)
    }
}

fn piece_sign(p: &Piece) -> Option<f64> {
    let n = 64;
    let mut sign = 0.0f64;
    for i in 0..=n {
        let t = p.lo + (p.hi - p.lo) * i as f64 / n as f64;
        let v = p.eval(t);
        if v > 1e-14 {
            if sign < 0.0 {
                return None;
            }
            sign = 1.0;
        } else if v < -1e-14 {
            if sign > 0.0 {
                return None;
            }
            sign = -1.0;
        }
    }
    Some(if sign == 0.0 { 1.0 } else { sign })
}

/// Symmetry class of a base profile.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Odd,
    Even,
    OneSided,
}

impl Parity {
    pub fn scaling_exponent(self) -> i32 {
        match self {
            Parity::Even => 1,
            Parity::Odd | Parity::OneSided => 2,
        }
    }
}

/// A scaled kernel family with exact profile moments.
#[derive(Clone, Debug)]
pub struct KernelFamily {
    pub name: String,
    pub parity: Parity,
    pub scaling_exponent: i32,
    pub epsilon: f64,
    profile: PiecewisePoly,
    /// Profile moments: integral of t^j * profile for j = 0..4.
    pub moments: [f64; 5],
    /// Half the second absolute moment: 0.5 * integral of t^2 |profile|.
    pub c_eta: f64,
    /// First absolute moment: integral of |t| |profile|.
    pub abs_m1: f64,
}

impl KernelFamily {
    pub fn profile(&self) -> &PiecewisePoly {
        &self.profile
    }

    pub fn m2(&self) -> f64 {
        self.moments[2]
    }

    pub fn m4(&self) -> f64 {
        self.moments[4]
    }

    /// Largest |t| in the profile support.
    pub fn support_extent(&self) -> f64 {
        let (lo, hi) = self.profile.support();
        lo.abs().max(hi.abs())
    }

    /// Scaled support radius eps * Z.
    pub fn scaled_extent(&self) -> f64 {
        self.epsilon * self.support_extent()
    }

    /// Unperiodized scaled kernel eps^-a profile(z / eps).
    pub fn scaled_eval(&self, z: f64) -> f64 {
        self.epsilon.powi(-self.scaling_exponent) * self.profile.eval(z / self.epsilon)
    }

    /// Single-image periodization is valid only when the scaled support
    /// stays inside half the period.
    pub fn check_period(&self) -> Result<()> {
        let extent = self.scaled_extent();
        if extent >= 0.5 {
            Err(Error::PeriodOverlap { extent })
        } else {
            Ok(())
        }
    }

    /// Kernel value at the periodic representative of z in (-1/2, 1/2].
    pub fn periodized_eval(&self, z: f64) -> Result<f64> {
        self.check_period()?;
        Ok(self.scaled_eval(wrap_torus(z)))
    }

    /// Heat-operator prefactor 2 kappa / (m2 eps^2).
    pub fn heat_prefactor(&self, kappa: f64) -> f64 {
        2.0 * kappa / (self.m2() * self.epsilon * self.epsilon)
    }
}

/// Preset names accepted by `make_kernel`.
pub fn kernel_preset_names() -> &'static [&'static str] {
    &["odd_box", "even_box", "upwind_box"]
}

/// Build a preset kernel family at scale `epsilon`.
///
/// * `odd_box`:    -sign(z) on [-1, 1]; integral of z * profile is -1.
/// * `even_box`:   1/2 on [-1, 1]; unit mass, m2 = 1/3, m4 = 1/5.
/// * `upwind_box`: 1/2 on [0, 2]; unit mass and unit first moment.
pub fn make_kernel(preset: &str, epsilon: f64) -> Result<KernelFamily> {
    let (parity, pieces) = match preset {
        "odd_box" => (
            Parity::Odd,
            vec![
                Piece {
                    lo: -1.0,
                    hi: 0.0,
                    coeffs: vec![1.0],
                },
                Piece {
                    lo: 0.0,
                    hi: 1.0,
                    coeffs: vec![-1.0],
                },
            ],
        ),
        "even_box" => (
            Parity::Even,
            vec![Piece {
                lo: -1.0,
                hi: 1.0,
                coeffs: vec![0.5],
            }],
        ),
        "upwind_box" => (
            Parity::OneSided,
            vec![Piece {
                lo: 0.0,
                hi: 2.0,
                coeffs: vec![0.5],
            }],
        ),
        other => return Err(Error::UnknownPreset(other.into())),
    };
    make_kernel_custom(preset, parity, pieces, epsilon)
}

/// Build a kernel family from explicit pieces, enforcing the moment
/// constraints of the parity class.
pub fn make_kernel_custom(
    name: &str,
    parity: Parity,
    pieces: Vec<Piece>,
    epsilon: f64,
) -> Result<KernelFamily> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidConfig(format!("epsilon {epsilon} must be > 0")));
    }
    let profile = PiecewisePoly::new(pieces)?;
    let moments = [
        profile.moment(0),
        profile.moment(1),
        profile.moment(2),
        profile.moment(3),
        profile.moment(4),
    ];
    let tol = 1e-12;
    let fail = |which: &str, value: f64| {
        Err(Error::MomentConstraint(format!(
            "{which} = {value} for parity {parity:?}"
        )))
    };
    match parity {
        Parity::Odd => {
            if moments[0].abs() > tol {
                return fail("integral", moments[0]);
            }
            if (moments[1] + 1.0).abs() > tol {
                return fail("first moment (expected -1)", moments[1]);
            }
            if moments[2].abs() > tol {
                return fail("second moment", moments[2]);
            }
            // Structural oddness.
            for i in 0..=64 {
                let t = profile.support().1 * i as f64 / 64.0;
                if (profile.eval(t) + profile.eval(-t)).abs() > 1e-12 {
                    return fail("odd symmetry at sample point", t);
                }
            }
        }
        Parity::Even => {
            if (moments[0] - 1.0).abs() > tol {
                return fail("integral (expected 1)", moments[0]);
            }
            if moments[1].abs() > tol {
                return fail("first moment", moments[1]);
            }
            if moments[3].abs() > tol {
                return fail("third moment", moments[3]);
            }
            if !(moments[2] > 0.0) {
                return fail("second moment (expected > 0)", moments[2]);
            }
            check_nonnegative(&profile)?;
        }
        Parity::OneSided => {
            if profile.support().0 < -1e-15 {
                return Err(Error::MomentConstraint(
                    "one-sided profile must live in [0, inf)".into(),
                ));
            }
            if (moments[0] - 1.0).abs() > tol {
                return fail("integral (expected 1)", moments[0]);
            }
            if (moments[1] - 1.0).abs() > tol {
                return fail("first moment (expected 1)", moments[1]);
            }
            check_nonnegative(&profile)?;
        }
    }
    let c_eta = 0.5 * profile.abs_moment(2);
    let abs_m1 = profile.abs_moment(1);
    Ok(KernelFamily {
        name: name.to_string(),
        parity,
        scaling_exponent: parity.scaling_exponent(),
        epsilon,
        profile,
        moments,
        c_eta,
        abs_m1,
    })
}

fn check_nonnegative(profile: &PiecewisePoly) -> Result<()> {
    for p in profile.pieces() {
        for i in 0..=256 {
            let t = p.lo + (p.hi - p.lo) * i as f64 / 256.0;
            if p.eval(t) < -1e-14 {
                return Err(Error::MomentConstraint(format!(
                    "profile negative at t = {t}"
                )));
            }
        }
    }
    Ok(())
}
