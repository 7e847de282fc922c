//! Analytic approximate grid states, Hadamard-eigenstate combinations, the
//! unitary 1-D Fourier transform, and overlap/fidelity machinery.
//!
//! All states are sampled on uniform grids; quadrature is the trapezoid rule
//! throughout. After normalization a state is rotated so its
//! largest-magnitude sample is real and positive, which makes serialized
//! output reproducible.

use ndarray::{Array1, Array2};
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::C64;

/// Uniform grid from `min` to `max` inclusive with `n` points.
pub fn uniform_grid(min: f64, max: f64, n: usize) -> Array1<f64> {
    assert!(n >= 2, "grid needs at least two points");
    let dx = (max - min) / (n - 1) as f64;
    Array1::from_iter((0..n).map(|i| min + dx * i as f64))
}

/// A complex wavefunction sampled on a uniform grid.
#[derive(Debug, Clone)]
pub struct SampledWavefunction {
    pub xs: Array1<f64>,
    pub values: Array1<C64>,
}

impl SampledWavefunction {
    pub fn new(xs: Array1<f64>, values: Array1<C64>) -> Result<Self> {
        if xs.len() != values.len() || xs.len() < 2 {
            return Err(Error::GridMismatch);
        }
        Ok(Self { xs, values })
    }

    pub fn dx(&self) -> f64 {
        self.xs[1] - self.xs[0]
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    fn grids_match(&self, other: &Self) -> bool {
        self.len() == other.len()
            && (self.xs[0] - other.xs[0]).abs() < 1e-9
            && (self.dx() - other.dx()).abs() < 1e-12
    }

    /// Trapezoid-rule ⟨self|other⟩.
    pub fn overlap(&self, other: &Self) -> Result<C64> {
        if !self.grids_match(other) {
            return Err(Error::GridMismatch);
        }
        let n = self.len();
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n {
            let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            acc += self.values[i].conj() * other.values[i] * w;
        }
        Ok(acc * self.dx())
    }

    /// Trapezoid-rule L² norm squared.
    pub fn norm_sq(&self) -> f64 {
        let n = self.len();
        let mut acc = 0.0;
        for i in 0..n {
            let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            acc += self.values[i].norm_sqr() * w;
        }
        acc * self.dx()
    }

    /// |∫|ψ|²dx − 1|.
    pub fn norm_defect(&self) -> f64 {
        (self.norm_sq() - 1.0).abs()
    }

    /// Normalize and fix the global phase: the largest-magnitude sample
    /// becomes real positive.
    pub fn normalize(&mut self) {
        let norm = self.norm_sq().sqrt();
        if norm == 0.0 {
            return;
        }
        let (mut best, mut best_mag) = (0usize, 0.0f64);
        for (i, v) in self.values.iter().enumerate() {
            let m = v.norm();
            if m > best_mag {
                best_mag = m;
                best = i;
            }
        }
        let phase = if best_mag > 0.0 {
            self.values[best] / best_mag
        } else {
            C64::new(1.0, 0.0)
        };
        let scale = phase.conj() / norm;
        self.values.mapv_inplace(|v| v * scale);
    }
}

/// Comb parameters of an approximate grid state.
#[derive(Debug, Clone, Copy)]
pub struct GridStateParams {
    pub delta: f64,
    pub n_peaks: i64,
}

impl GridStateParams {
    /// Peak count derived from Δ so the dropped comb tail is below 1e−12.
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidParameter(format!("Δ must lie in (0,1), got {delta}")));
        }
        let n_peaks = (3.0 / (std::f64::consts::PI.sqrt() * delta * delta)).ceil() as i64 + 2;
        Ok(Self { delta, n_peaks })
    }
}

/// Unnormalized approximate codeword
/// ψ_j(X) = (√2/π^(1/4)) e^(−X²Δ²/2) Σ_n exp(−(X−2√πn−j√π)²/2Δ²).
pub fn approx_grid_state_raw(
    j: u8,
    params: &GridStateParams,
    xs: &Array1<f64>,
) -> Result<SampledWavefunction> {
    if j > 1 {
        return Err(Error::InvalidParameter(format!("codeword index must be 0 or 1, got {j}")));
    }
    let need = 4.0 / params.delta;
    let (min, max) = (xs[0], xs[xs.len() - 1]);
    if min > -need || max < need {
        return Err(Error::GridTooNarrow { min, max, need });
    }
    let rt_pi = std::f64::consts::PI.sqrt();
    let shift = f64::from(j) * rt_pi;
    let d2 = params.delta * params.delta;
    let norm0 = std::f64::consts::SQRT_2 / std::f64::consts::PI.powf(0.25);
    let values = Array1::from_iter(xs.iter().map(|&x| {
        let envelope = (-x * x * d2 / 2.0).exp();
        let mut comb = 0.0;
        for n in -params.n_peaks..=params.n_peaks {
            let center = 2.0 * rt_pi * n as f64 + shift;
            comb += (-(x - center) * (x - center) / (2.0 * d2)).exp();
        }
        C64::new(norm0 * envelope * comb, 0.0)
    }));
    SampledWavefunction::new(xs.clone(), values)
}

/// Trapezoid-normalized approximate codeword ψ_j.
pub fn approx_grid_state(
    j: u8,
    params: &GridStateParams,
    xs: &Array1<f64>,
) -> Result<SampledWavefunction> {
    let mut psi = approx_grid_state_raw(j, params, xs)?;
    psi.normalize();
    Ok(psi)
}

/// Hadamard eigenstate combinations
/// ψ_H+ = cos(π/8)ψ₀ + sin(π/8)ψ₁, ψ_H− = −sin(π/8)ψ₀ + cos(π/8)ψ₁,
/// renormalized on the shared grid.
pub fn hadamard_pair(
    psi0: &SampledWavefunction,
    psi1: &SampledWavefunction,
) -> Result<(SampledWavefunction, SampledWavefunction)> {
    if !psi0.grids_match(psi1) {
        return Err(Error::GridMismatch);
    }
    let (c, s) = {
        let t = std::f64::consts::PI / 8.0;
        (t.cos(), t.sin())
    };
    let plus = Array1::from_iter(
        psi0.values.iter().zip(psi1.values.iter()).map(|(a, b)| a * c + b * s),
    );
    let minus = Array1::from_iter(
        psi0.values.iter().zip(psi1.values.iter()).map(|(a, b)| -a * s + b * c),
    );
    let mut plus = SampledWavefunction::new(psi0.xs.clone(), plus)?;
    let mut minus = SampledWavefunction::new(psi0.xs.clone(), minus)?;
    plus.normalize();
    minus.normalize();
    Ok((plus, minus))
}

/// Unitary continuous Fourier transform ψ̃(P) = (2π)^(−1/2)∫ψ(X)e^(−iXP)dX
/// evaluated on the centered reciprocal grid (FFT-based rectangle rule).
pub fn fourier_1d(psi: &SampledWavefunction) -> SampledWavefunction {
    let n = psi.len();
    let dx = psi.dx();
    let x0 = psi.xs[0];
    let dp = 2.0 * std::f64::consts::PI / (n as f64 * dx);
    let p0 = -(n as f64 / 2.0).floor() * dp;

    // ψ̃(p_j) = dx/√(2π) e^(−i x₀ p_j) Σ_n [ψ(x_n) e^(−i n dx p₀)] e^(−2πi nj/N)
    let mut buf: Vec<C64> = psi
        .values
        .iter()
        .enumerate()
        .map(|(k, v)| v * C64::from_polar(1.0, -(k as f64) * dx * p0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);

    let scale = dx / (2.0 * std::f64::consts::PI).sqrt();
    let ps = Array1::from_iter((0..n).map(|j| p0 + dp * j as f64));
    let values = Array1::from_iter(
        buf.into_iter()
            .enumerate()
            .map(|(j, v)| v * scale * C64::from_polar(1.0, -x0 * (p0 + dp * j as f64))),
    );
    SampledWavefunction { xs: ps, values }
}

/// Normalized Hermite functions h_m(x) for m = 0..=m_max, row per m.
pub fn hermite_functions(m_max: usize, xs: &Array1<f64>) -> Array2<f64> {
    let n = xs.len();
    let mut h = Array2::zeros((m_max + 1, n));
    let norm0 = std::f64::consts::PI.powf(-0.25);
    for (i, &x) in xs.iter().enumerate() {
        h[[0, i]] = norm0 * (-x * x / 2.0).exp();
        if m_max >= 1 {
            h[[1, i]] = std::f64::consts::SQRT_2 * x * h[[0, i]];
        }
        for m in 1..m_max {
            let mf = m as f64;
            h[[m + 1, i]] = ((2.0 / (mf + 1.0)).sqrt() * x * h[[m, i]])
                - ((mf / (mf + 1.0)).sqrt() * h[[m - 1, i]]);
        }
    }
    h
}

/// Render a Fock-basis vector on a grid: ψ(X) = Σ_m c_m h_m(X).
pub fn render_fock(coeffs: &[C64], xs: &Array1<f64>) -> SampledWavefunction {
    let m_max = coeffs.len().saturating_sub(1);
    let h = hermite_functions(m_max, xs);
    let values = Array1::from_iter((0..xs.len()).map(|i| {
        coeffs
            .iter()
            .enumerate()
            .fold(C64::new(0.0, 0.0), |acc, (m, c)| acc + c * h[[m, i]])
    }));
    SampledWavefunction { xs: xs.clone(), values }
}

/// Fock expansion coefficients c_m = ⟨h_m|ψ⟩ by trapezoid quadrature.
pub fn fock_expansion(psi: &SampledWavefunction, m_max: usize) -> Vec<C64> {
    let h = hermite_functions(m_max, &psi.xs);
    let dx = psi.dx();
    let n = psi.len();
    (0..=m_max)
        .map(|m| {
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..n {
                let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
                acc += psi.values[i] * h[[m, i]] * w;
            }
            acc * dx
        })
        .collect()
}

/// Global-phase-free fidelity |⟨a|b⟩|² of two normalized grid states
/// (inputs are normalized internally).
pub fn fidelity(a: &SampledWavefunction, b: &SampledWavefunction) -> Result<f64> {
    let ov = a.overlap(b)?;
    let na = a.norm_sq();
    let nb = b.norm_sq();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::InvalidParameter("fidelity of a null state".to_string()));
    }
    Ok(ov.norm_sqr() / (na * nb))
}

/// Fidelity between Fock-coefficient vectors (phase-free).
pub fn fidelity_fock(a: &[C64], b: &[C64]) -> f64 {
    let ov: C64 = a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum();
    let na: f64 = a.iter().map(|x| x.norm_sqr()).sum();
    let nb: f64 = b.iter().map(|x| x.norm_sqr()).sum();
    ov.norm_sqr() / (na * nb)
}

/// Default grid for Δ = 0.25 states: X ∈ [−24, 24] with 4096 points.
pub fn default_grid() -> Array1<f64> {
    uniform_grid(-24.0, 24.0, 4096)
}
