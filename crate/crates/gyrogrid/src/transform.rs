//! Lift 1-D guiding-center wavefunctions to two-dimensional plane
//! wavefunctions through the symmetric-gauge coherent-state kernel, plus the
//! theta-function closed forms and the Husimi Q density.
//!
//! All lengths are in magnetic units; the gauge is fixed to symmetric.

use ndarray::{Array1, Array2};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::states::SampledWavefunction;
use crate::C64;

const RT_PI: f64 = 1.772_453_850_905_516_1;

/// A complex wavefunction on a uniform 2-D grid (symmetric gauge).
#[derive(Debug, Clone)]
pub struct Wavefunction2D {
    pub x1s: Array1<f64>,
    pub x2s: Array1<f64>,
    /// values[[i, j]] = Ψ(x1s[i], x2s[j]).
    pub values: Array2<C64>,
}

impl Wavefunction2D {
    pub fn dx1(&self) -> f64 {
        self.x1s[1] - self.x1s[0]
    }

    pub fn dx2(&self) -> f64 {
        self.x2s[1] - self.x2s[0]
    }

    fn weight(i: usize, n: usize) -> f64 {
        if i == 0 || i == n - 1 {
            0.5
        } else {
            1.0
        }
    }

    /// Trapezoid ∫|Ψ|² dx₁dx₂.
    pub fn norm_sq(&self) -> f64 {
        let (n1, n2) = self.values.dim();
        let mut acc = 0.0;
        for i in 0..n1 {
            for j in 0..n2 {
                acc += Self::weight(i, n1) * Self::weight(j, n2) * self.values[[i, j]].norm_sqr();
            }
        }
        acc * self.dx1() * self.dx2()
    }

    /// Trapezoid ⟨self|other⟩ on a shared grid.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        let (n1, n2) = self.values.dim();
        if other.values.dim() != (n1, n2)
            || (self.x1s[0] - other.x1s[0]).abs() > 1e-9
            || (self.x2s[0] - other.x2s[0]).abs() > 1e-9
        {
            return Err(Error::GridMismatch);
        }
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n1 {
            for j in 0..n2 {
                acc += Self::weight(i, n1)
                    * Self::weight(j, n2)
                    * self.values[[i, j]].conj()
                    * other.values[[i, j]];
            }
        }
        Ok(acc * self.dx1() * self.dx2())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Symmetric-gauge LLL kernel
/// K₀(x₁,x₂;X) = (√2 π^(3/4))^(−1) e^(−(X−x₁)²/2) e^(−i x₂ X) e^(i x₁x₂/2).
pub fn kernel_k0(x1: f64, x2: f64, x_big: f64) -> C64 {
    let norm = 1.0 / (std::f64::consts::SQRT_2 * std::f64::consts::PI.powf(0.75));
    let gauss = (-(x_big - x1) * (x_big - x1) / 2.0).exp();
    C64::from_polar(norm * gauss, -x2 * x_big + x1 * x2 / 2.0)
}

/// Lift a normalized 1-D wavefunction to the plane by trapezoid quadrature
/// of the kernel integral. Errors if the grid-level unitarity defect of the
/// lift exceeds 1%.
pub fn lift_to_2d(
    psi: &SampledWavefunction,
    x1s: &Array1<f64>,
    x2s: &Array1<f64>,
) -> Result<Wavefunction2D> {
    let nx = psi.len();
    let dx = psi.dx();
    let norm = 1.0 / (std::f64::consts::SQRT_2 * std::f64::consts::PI.powf(0.75));

    // Ψ(x₁,x₂) = e^(i x₁x₂/2) Σ_n w_n ψ(X_n) e^(−(X_n−x₁)²/2) e^(−i x₂ X_n)
    let rows: Vec<Vec<C64>> = x1s
        .as_slice()
        .unwrap()
        .par_iter()
        .map(|&x1| {
            // Gaussian window against the integrand for this row.
            let windowed: Vec<C64> = (0..nx)
                .map(|k| {
                    let w = if k == 0 || k == nx - 1 { 0.5 } else { 1.0 };
                    let g = (-(psi.xs[k] - x1) * (psi.xs[k] - x1) / 2.0).exp();
                    psi.values[k] * (w * g * dx * norm)
                })
                .collect();
            x2s.iter()
                .map(|&x2| {
                    let mut acc = C64::new(0.0, 0.0);
                    for k in 0..nx {
                        if windowed[k].norm_sqr() > 0.0 {
                            acc += windowed[k] * C64::from_polar(1.0, -x2 * psi.xs[k]);
                        }
                    }
                    acc * C64::from_polar(1.0, x1 * x2 / 2.0)
                })
                .collect()
        })
        .collect();

    let mut values = Array2::zeros((x1s.len(), x2s.len()));
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            values[[i, j]] = v;
        }
    }
    let out = Wavefunction2D { x1s: x1s.clone(), x2s: x2s.clone(), values };
    let defect = (out.norm_sq() / psi.norm_sq() - 1.0).abs();
    if defect > 0.01 {
        return Err(Error::GridTooCoarse { defect });
    }
    Ok(out)
}

/// Generalized elliptic theta function characteristics.
#[derive(Debug, Clone, Copy)]
pub struct ThetaSpec {
    pub a: f64,
    pub b: f64,
    pub tau: C64,
    pub n_terms: i64,
}

impl ThetaSpec {
    /// Truncation derived from Im τ: |e^(iπ(n+a)²τ)| < 1e−16 at |n| = n_terms.
    pub fn new(a: f64, b: f64, tau: C64) -> Result<Self> {
        if tau.im <= 0.0 {
            return Err(Error::BadTau { im_tau: tau.im });
        }
        let n_terms = (37.0 / (std::f64::consts::PI * tau.im)).sqrt().ceil() as i64 + 2;
        Ok(Self { a, b, tau, n_terms })
    }
}

/// ϑ[a;b](z, τ) = Σ_n e^(iπ(n+a)²τ) e^(i2π(n+a)(z+b)), summed over the
/// truncation window centered where the summand peaks.
pub fn theta(spec: &ThetaSpec, z: C64) -> Result<C64> {
    if spec.tau.im <= 0.0 {
        return Err(Error::BadTau { im_tau: spec.tau.im });
    }
    let zb = z + spec.b;
    // Peak of |summand| in the continuous index.
    let center = -spec.a - zb.im / spec.tau.im;
    let lo = (center.floor() as i64 - spec.n_terms).min(-spec.n_terms);
    let hi = (center.ceil() as i64 + spec.n_terms).max(spec.n_terms);
    let i_pi = C64::new(0.0, std::f64::consts::PI);
    let mut acc = C64::new(0.0, 0.0);
    for n in lo..=hi {
        let na = n as f64 + spec.a;
        let exponent = i_pi * (na * na * spec.tau + 2.0 * na * zb);
        acc += exponent.exp();
    }
    Ok(acc)
}

/// Zak wavefunction of the flux-1/2 lattice (L₀ = √π in magnetic units):
/// Ψ_k(x₁,x₂) = (√2 π^(3/4))^(−1) e^(−x₁(x₁−ix₂)/2)
///              ϑ[k₂/2√π; −k₁/√π](−i(x₁−ix₂)/√π, 2i).
pub fn zak_wavefunction_2d(
    k1: f64,
    k2: f64,
    x1s: &Array1<f64>,
    x2s: &Array1<f64>,
) -> Result<Wavefunction2D> {
    let spec = ThetaSpec::new(k2 / (2.0 * RT_PI), -k1 / RT_PI, C64::new(0.0, 2.0))?;
    let norm = 1.0 / (std::f64::consts::SQRT_2 * std::f64::consts::PI.powf(0.75));
    let mut values = Array2::zeros((x1s.len(), x2s.len()));
    for (i, &x1) in x1s.iter().enumerate() {
        for (j, &x2) in x2s.iter().enumerate() {
            let w = C64::new(x1, -x2);
            let z = C64::new(0.0, -1.0) * w / RT_PI;
            let pref = (C64::new(-x1, 0.0) * w / 2.0).exp() * norm;
            values[[i, j]] = pref * theta(&spec, z)?;
        }
    }
    Ok(Wavefunction2D { x1s: x1s.clone(), x2s: x2s.clone(), values })
}

/// Closed-form lift of the approximate codeword ψ_j with squeezing Δ:
/// the Δ-corrected theta form (reduces to the Zak form as Δ → 0).
pub fn confined_wavefunction_2d(
    j: u8,
    delta: f64,
    x1s: &Array1<f64>,
    x2s: &Array1<f64>,
) -> Result<Wavefunction2D> {
    if j > 1 {
        return Err(Error::InvalidParameter(format!("codeword index must be 0 or 1, got {j}")));
    }
    if !(delta > 0.0 && delta <= 0.5) {
        return Err(Error::InvalidParameter(format!("Δ must lie in (0, 0.5], got {delta}")));
    }
    let d2 = delta * delta;
    let d4 = d2 * d2;
    let denom = 1.0 + d2 + d4;
    let spec = ThetaSpec::new(
        f64::from(j) / 2.0,
        0.0,
        C64::new(0.0, 2.0 * (1.0 + d2) / denom),
    )?;
    let amp = (2.0 * d2 / (std::f64::consts::PI * denom)).sqrt();
    let mut values = Array2::zeros((x1s.len(), x2s.len()));
    for (i, &x1) in x1s.iter().enumerate() {
        for (jx, &x2) in x2s.iter().enumerate() {
            let w = C64::new(x1, -x2);
            let z = C64::new(0.0, -1.0) * w / (RT_PI * denom);
            let gauss = (w * w * (d2 / (2.0 * denom))).exp();
            let pref = (C64::new(-x1, 0.0) * w / 2.0).exp();
            values[[i, jx]] = amp * gauss * pref * theta(&spec, z)?;
        }
    }
    Ok(Wavefunction2D { x1s: x1s.clone(), x2s: x2s.clone(), values })
}

/// Largest relative defect of the four-fold rotation identity
/// Ψ(x₂, −x₁) = iⁿ Ψ(x₁, x₂) over the grid, normalized to max |Ψ|.
/// The grid must be square and symmetric about the origin.
pub fn rotation_fourier_check(psi: &Wavefunction2D, n: i32) -> Result<f64> {
    let len = psi.x1s.len();
    if psi.x2s.len() != len {
        return Err(Error::NonSquareGrid);
    }
    for i in 0..len {
        if (psi.x1s[i] - psi.x2s[i]).abs() > 1e-9
            || (psi.x1s[i] + psi.x1s[len - 1 - i]).abs() > 1e-9
        {
            return Err(Error::NonSquareGrid);
        }
    }
    let phase = C64::new(0.0, 1.0).powi(n);
    let peak = psi.max_abs();
    let mut worst = 0.0f64;
    for i in 0..len {
        for j in 0..len {
            // Ψ(x₂ⱼ, −x₁ᵢ) = values[[j, len−1−i]].
            let rotated = psi.values[[j, len - 1 - i]];
            let defect = (rotated - phase * psi.values[[i, j]]).norm();
            worst = worst.max(defect);
        }
    }
    Ok(worst / peak)
}

/// Husimi Q density |lift(ψ)|² on the grid; non-negative by construction.
pub fn husimi(
    psi: &SampledWavefunction,
    x1s: &Array1<f64>,
    x2s: &Array1<f64>,
) -> Result<Array2<f64>> {
    let lifted = lift_to_2d(psi, x1s, x2s)?;
    Ok(lifted.values.mapv(|v| v.norm_sqr()))
}

/// Default 2-D window [−4√π, 4√π]² with 256 points per side.
pub fn default_grid_2d() -> (Array1<f64>, Array1<f64>) {
    let g = crate::states::uniform_grid(-4.0 * RT_PI, 4.0 * RT_PI, 256);
    (g.clone(), g)
}
