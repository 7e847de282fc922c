//! Circuit-level spectra with external flux biases, noise-operator matrix
//! elements in the LLL, and the current-source logical-Z protocol.
//!
//! External fluxes enter as phase offsets inside the two Josephson cosines:
//! the junction-loop flux φᵢ^ext with a minus sign and the gyrator-loop flux
//! φ_Gi^ext with a plus sign, so that after the LLL projection the
//! Hamiltonian reads −V₀[cos(2√πX + φ_G1 − φ_1) + cos(2√πP + φ_G2 − φ_2)].
//! Fluxoid quantization is not enforced for the gyrator loop; all fluxes are
//! continuous parameters.

use ndarray::{Array1, Array2};
use rayon::prelude::*;
use serde::Serialize;

use crate::eigh::eigh;
use crate::error::{Error, Result};
use crate::operators::{
    displacement_matrix, eye, kron, quadrature_matrices, HermitianMatrix,
};
use crate::params::{consts, map_circuit_to_model, v0, CircuitParams, ModelParams};
use crate::spectra::{
    confined_hamiltonian_with_phases, eigensolve, eigensolve_mod4, lll_confined_hamiltonian,
    EigenSolution, SweepResult,
};
use crate::C64;

const RT_PI: f64 = 1.772_453_850_905_516_1;

/// Two-mode circuit Hamiltonian with external flux biases, in units of ħω_c.
pub fn flux_biased_hamiltonian(
    circ: &CircuitParams,
    n_max: usize,
    m_max: usize,
) -> Result<HermitianMatrix> {
    if circ.inductance.is_none() {
        return Err(Error::MissingInductance);
    }
    let (_, model) = map_circuit_to_model(circ)?;
    let ext = circ.ext_fluxes;
    let theta1 = ext.phi_g1 - ext.phi1;
    let theta2 = ext.phi_g2 - ext.phi2;
    confined_hamiltonian_with_phases(&model, n_max, m_max, theta1, theta2, (0.0, 0.0))
}

/// Which external flux a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FluxAxis {
    Phi1,
    Phi2,
    PhiG1,
    PhiG2,
}

impl FluxAxis {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "phi1" => Ok(Self::Phi1),
            "phi2" => Ok(Self::Phi2),
            "phi-g1" | "phi_g1" => Ok(Self::PhiG1),
            "phi-g2" | "phi_g2" => Ok(Self::PhiG2),
            other => Err(Error::InvalidParameter(format!(
                "unknown flux axis '{other}' (expected phi1|phi2|phi-g1|phi-g2)"
            ))),
        }
    }
}

/// Sweep the lowest `levels` of the circuit spectrum against one external
/// flux, the others held at their `circ` values.
pub fn flux_sweep(
    circ: &CircuitParams,
    axis: FluxAxis,
    grid: &[f64],
    levels: usize,
    n_max: usize,
    m_max: usize,
) -> Result<SweepResult> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let rows: Vec<Vec<f64>> = grid
        .par_iter()
        .map(|&phi| {
            let mut c = *circ;
            match axis {
                FluxAxis::Phi1 => c.ext_fluxes.phi1 = phi,
                FluxAxis::Phi2 => c.ext_fluxes.phi2 = phi,
                FluxAxis::PhiG1 => c.ext_fluxes.phi_g1 = phi,
                FluxAxis::PhiG2 => c.ext_fluxes.phi_g2 = phi,
            }
            let h = flux_biased_hamiltonian(&c, n_max, m_max)?;
            let sol = eigensolve(&h, levels)?;
            Ok(sol.values)
        })
        .collect::<Result<_>>()?;

    Ok(SweepResult {
        axis_name: format!("{axis:?}").to_lowercase(),
        axis: grid.to_vec(),
        energies: rows,
        sectors: None,
        metadata: serde_json::json!({ "n_max": n_max, "m_max": m_max }),
    })
}

/// Central-difference |dE/dφ| of every swept level at the grid point nearest
/// `phi`, normalized by each level's sweep range.
pub fn sweet_spot_defect(sweep: &SweepResult, phi: f64) -> Result<Vec<f64>> {
    let n = sweep.axis.len();
    if n < 3 {
        return Err(Error::EmptyGrid);
    }
    let mut idx = 0usize;
    for (i, &x) in sweep.axis.iter().enumerate() {
        if (x - phi).abs() < (sweep.axis[idx] - phi).abs() {
            idx = i;
        }
    }
    let i = idx.clamp(1, n - 2);
    let dphi = sweep.axis[i + 1] - sweep.axis[i - 1];
    let levels = sweep.energies[0].len();
    let mut out = Vec::with_capacity(levels);
    for l in 0..levels {
        let lo = sweep.energies.iter().map(|r| r[l]).fold(f64::INFINITY, f64::min);
        let hi = sweep.energies.iter().map(|r| r[l]).fold(f64::NEG_INFINITY, f64::max);
        let range = (hi - lo).max(1e-300);
        let deriv = (sweep.energies[i + 1][l] - sweep.energies[i - 1][l]) / dphi;
        out.push(deriv.abs() / range);
    }
    Ok(out)
}

/// One noise operator's LLL matrix element between the Hadamard pair.
#[derive(Debug, Clone, Serialize)]
pub struct NoiseReport {
    pub label: String,
    pub magnitude: f64,
    /// Below the 1e−8 numerical-zero threshold.
    pub vanishes: bool,
}

/// Threshold below which an LLL matrix element counts as zero.
pub const NOISE_ZERO_THRESHOLD: f64 = 1e-8;

fn matrix_function(h: &Array2<C64>, f: impl Fn(f64) -> f64) -> Result<Array2<C64>> {
    let (w, v) = eigh(h)?;
    let dim = h.nrows();
    let mut out = Array2::zeros((dim, dim));
    for k in 0..dim {
        let fk = f(w[k]);
        for i in 0..dim {
            for j in 0..dim {
                out[[i, j]] += v[[i, k]] * fk * v[[j, k]].conj();
            }
        }
    }
    Ok(out)
}

/// Flux-noise matrix elements ⟨ψ_H−|Π O Π|ψ_H+⟩ for the six operators
/// O ∈ {φ₁, φ₂, sin φ₁, sin φ₂, sin(φ₁/2), sin(φ₂/2)}, plus a parity
/// control element against the lowest odd state.
pub fn noise_matrix_elements(
    circ: &CircuitParams,
    n_max: usize,
    m_max: usize,
) -> Result<Vec<NoiseReport>> {
    if circ.inductance.is_none() {
        return Err(Error::MissingInductance);
    }
    let ext = circ.ext_fluxes;
    if ext.phi1 != 0.0 || ext.phi2 != 0.0 || ext.phi_g1 != 0.0 || ext.phi_g2 != 0.0 {
        return Err(Error::InvalidParameter(
            "noise elements are defined at zero external fluxes".to_string(),
        ));
    }
    let (_, model) = map_circuit_to_model(circ)?;
    let lam = model.flux.lambda();

    // Hadamard pair (and the odd control state) from the LLL Hamiltonian.
    let h_lll = lll_confined_hamiltonian(&model, m_max)?;
    let sol = eigensolve_mod4(&h_lll, (m_max + 1).min(12))?;
    let sectors = sol.sectors.as_ref().unwrap();
    let pick = |s: u8| -> Result<Array1<C64>> {
        sectors
            .iter()
            .position(|&x| x == s)
            .map(|i| sol.vectors.column(i).to_owned())
            .ok_or_else(|| Error::InvalidParameter(format!("no state found in sector {s}")))
    };
    let psi_plus = pick(0)?;
    let psi_minus = pick(2)?;
    let psi_odd = pick(1)?;

    // Reduced phase operators in the two-mode basis:
    // φ₁ = λ√2 (X_a + X_b),  φ₂ = λ√2 (P_b − P_a).
    let (xa, pa) = quadrature_matrices(n_max);
    let (xb, pb) = quadrature_matrices(m_max);
    let id_a = eye(n_max + 1);
    let id_b = eye(m_max + 1);
    let s2 = std::f64::consts::SQRT_2;
    let phi1 = (kron(&xa.entries, &id_b) + kron(&id_a, &xb.entries)).mapv(|z| z * (lam * s2));
    let phi2 = (kron(&id_a, &pb.entries) - kron(&pa.entries, &id_b)).mapv(|z| z * (lam * s2));

    let lll_block = |op: &Array2<C64>| -> Array2<C64> {
        let mb = m_max + 1;
        let mut out = Array2::zeros((mb, mb));
        for m1 in 0..mb {
            for m2 in 0..mb {
                out[[m1, m2]] = op[[m1, m2]];
            }
        }
        out
    };
    let sandwich = |op: &Array2<C64>, bra: &Array1<C64>, ket: &Array1<C64>| -> f64 {
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..op.nrows() {
            for j in 0..op.ncols() {
                acc += bra[i].conj() * op[[i, j]] * ket[j];
            }
        }
        acc.norm()
    };

    let mut reports = Vec::new();
    for (label, base, half) in [
        ("phi1", &phi1, false),
        ("phi2", &phi2, false),
        ("sin(phi1)", &phi1, false),
        ("sin(phi2)", &phi2, false),
        ("sin(phi1/2)", &phi1, true),
        ("sin(phi2/2)", &phi2, true),
    ] {
        let op = if label.starts_with("sin") {
            let scale = if half { 0.5 } else { 1.0 };
            matrix_function(base, |x| (scale * x).sin())?
        } else {
            base.clone()
        };
        let block = lll_block(&op);
        let magnitude = sandwich(&block, &psi_minus, &psi_plus);
        reports.push(NoiseReport {
            label: label.to_string(),
            magnitude,
            vanishes: magnitude < NOISE_ZERO_THRESHOLD,
        });
    }

    // Control: the same sandwich against an odd state is generically finite.
    let sin_phi1 = matrix_function(&phi1, f64::sin)?;
    let control = sandwich(&lll_block(&sin_phi1), &psi_odd, &psi_plus);
    reports.push(NoiseReport {
        label: "control: sin(phi1) odd-vs-H+".to_string(),
        magnitude: control,
        vanishes: control < NOISE_ZERO_THRESHOLD,
    });
    Ok(reports)
}

/// Piecewise-constant current drive on one gyrator port.
#[derive(Debug, Clone, Serialize)]
pub struct DriveProtocol {
    /// (current in amperes, duration in seconds) per segment.
    pub segments: Vec<(f64, f64)>,
    /// Port 1 drives X (logical Z); port 2 drives P (logical X).
    pub port: u8,
}

impl DriveProtocol {
    pub fn constant(current: f64, duration: f64, port: u8) -> Result<Self> {
        if duration <= 0.0 {
            return Err(Error::InvalidParameter("segment duration must be > 0".to_string()));
        }
        if port != 1 && port != 2 {
            return Err(Error::InvalidParameter(format!("port must be 1 or 2, got {port}")));
        }
        Ok(Self { segments: vec![(current, duration)], port })
    }
}

/// Gate time t_Z = ħπ/(I₁ Φ₀ₛ) of the constant-current logical Z.
pub fn gate_time_z(current: f64) -> Result<f64> {
    if current <= 0.0 {
        return Err(Error::ZeroCurrent);
    }
    Ok(consts::HBAR * std::f64::consts::PI / (current * consts::PHI0_SC))
}

/// Outcome of a logical-gate simulation in the LLL.
#[derive(Debug, Clone, Serialize)]
pub struct GateOutcome {
    /// |⟨ψ_in| Z̄† U |ψ_in⟩|² (or X̄ on port 2).
    pub gate_fidelity: f64,
    /// |⟨ψ_in| U |ψ_in⟩|², the plain return probability.
    pub return_fidelity: f64,
    /// Worst per-segment norm defect of the evolved state.
    pub norm_defect: f64,
    #[serde(skip)]
    pub final_state: Array1<C64>,
}

/// Evolve an approximate codeword under
/// H = −V₀[cos(2√πX) + cos(2√πP)] − (I(t)Φ₀ₛ/√π)·Q in the truncated
/// guiding-center Fock basis (Q = X on port 1, P on port 2) and compare
/// against the ideal logical gate e^(i√π Q).
pub fn simulate_z_gate(
    v0_joules: f64,
    delta: f64,
    protocol: &DriveProtocol,
    m_max: usize,
) -> Result<GateOutcome> {
    if v0_joules <= 0.0 {
        return Err(Error::InvalidParameter(format!("V₀ must be > 0, got {v0_joules}")));
    }
    let psi_in = codeword_fock(0, delta, m_max)?;
    simulate_gate_from(&psi_in, v0_joules, protocol, m_max)
}

/// Same as [`simulate_z_gate`] but starting from a caller-supplied state.
pub fn simulate_gate_from(
    psi_in: &Array1<C64>,
    v0_joules: f64,
    protocol: &DriveProtocol,
    m_max: usize,
) -> Result<GateOutcome> {
    let dim = m_max + 1;
    if psi_in.len() != dim {
        return Err(Error::GridMismatch);
    }
    let (x, p) = quadrature_matrices(m_max);
    let drive_quad = if protocol.port == 1 { &x.entries } else { &p.entries };

    // H_GKP as the four-displacement sum (rad/s once scaled by V₀/ħ).
    let lam_half = (2.0 * std::f64::consts::PI).sqrt(); // 2√π X = √(2π)(b+b†)… λ at flux 1/2
    let mut gkp = Array2::<C64>::zeros((dim, dim));
    for alpha in [
        C64::new(lam_half, 0.0),
        C64::new(-lam_half, 0.0),
        C64::new(0.0, lam_half),
        C64::new(0.0, -lam_half),
    ] {
        gkp += &displacement_matrix(alpha, m_max).entries;
    }
    let gkp = gkp.mapv(|z| z * (-0.5 * v0_joules / consts::HBAR));

    let mut psi = psi_in.clone();
    let mut norm_defect = 0.0f64;
    for &(current, duration) in &protocol.segments {
        if duration <= 0.0 {
            return Err(Error::InvalidParameter("segment duration must be > 0".to_string()));
        }
        let drive_coeff = -current * consts::PHI0_SC / (RT_PI * consts::HBAR);
        let h = &gkp + &drive_quad.mapv(|z| z * drive_coeff);
        let (w, v) = eigh(&h)?;
        // ψ ← V e^(−iωt) V† ψ
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        for k in 0..dim {
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..dim {
                acc += v[[i, k]].conj() * psi[i];
            }
            amps[k] = acc * C64::from_polar(1.0, -w[k] * duration);
        }
        for i in 0..dim {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..dim {
                acc += v[[i, k]] * amps[k];
            }
            psi[i] = acc;
        }
        let nrm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        norm_defect = norm_defect.max((nrm - 1.0).abs());
    }

    // Ideal logical gate on the drive quadrature: e^(i√π Q).
    let logical = matrix_function_unitary(drive_quad, |x| RT_PI * x)?;
    let mut target = vec![C64::new(0.0, 0.0); dim];
    for i in 0..dim {
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..dim {
            acc += logical[[i, j]] * psi_in[j];
        }
        target[i] = acc;
    }
    let overlap_gate: C64 = target.iter().zip(psi.iter()).map(|(a, b)| a.conj() * b).sum();
    let overlap_return: C64 = psi_in.iter().zip(psi.iter()).map(|(a, b)| a.conj() * b).sum();

    Ok(GateOutcome {
        gate_fidelity: overlap_gate.norm_sqr(),
        return_fidelity: overlap_return.norm_sqr(),
        norm_defect,
        final_state: psi,
    })
}

/// e^(i f(A)) for Hermitian A via its spectral decomposition.
fn matrix_function_unitary(a: &Array2<C64>, f: impl Fn(f64) -> f64) -> Result<Array2<C64>> {
    let (w, v) = eigh(a)?;
    let dim = a.nrows();
    let mut out = Array2::zeros((dim, dim));
    for k in 0..dim {
        let phase = C64::from_polar(1.0, f(w[k]));
        for i in 0..dim {
            for j in 0..dim {
                out[[i, j]] += v[[i, k]] * phase * v[[j, k]].conj();
            }
        }
    }
    Ok(out)
}

/// Fock coefficients of the approximate codeword ψ_j at squeezing Δ,
/// normalized in the truncated basis.
pub fn codeword_fock(j: u8, delta: f64, m_max: usize) -> Result<Array1<C64>> {
    use crate::states::{approx_grid_state, fock_expansion, uniform_grid, GridStateParams};
    let params = GridStateParams::new(delta)?;
    let extent = (6.0 / delta).max((2.0 * m_max as f64 + 1.0).sqrt() + 6.0);
    let n = ((2.0 * extent / 0.01) as usize).next_power_of_two().clamp(2048, 32768);
    let xs = uniform_grid(-extent, extent, n);
    let psi = approx_grid_state(j, &params, &xs)?;
    let coeffs = fock_expansion(&psi, m_max);
    let norm: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if norm < 0.99 {
        return Err(Error::InvalidParameter(format!(
            "codeword leaks out of the m ≤ {m_max} basis (captured norm {norm})"
        )));
    }
    Ok(Array1::from_iter(coeffs.into_iter().map(|c| c / norm)))
}

/// Spectrum shift under static charge offsets (γ₁, γ₂) on the dynamical
/// momenta: gauge invariance makes it vanish.
pub fn charge_offset_spectrum_shift(
    model: &ModelParams,
    n_max: usize,
    m_max: usize,
    offsets: (f64, f64),
    levels: usize,
) -> Result<f64> {
    let h0 = confined_hamiltonian_with_phases(model, n_max, m_max, 0.0, 0.0, (0.0, 0.0))?;
    let h1 = confined_hamiltonian_with_phases(model, n_max, m_max, 0.0, 0.0, offsets)?;
    let a = eigensolve(&h0, levels)?;
    let b = eigensolve(&h1, levels)?;
    Ok(a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max))
}

/// Identify which sorted level of a zero-flux circuit solve carries the
/// odd-Fourier Hadamard state ψ_H− (sector 2).
pub fn hadamard_minus_level(sol: &EigenSolution) -> Option<usize> {
    sol.sectors.as_ref()?.iter().position(|&s| s == 2)
}

/// V₀ = E_J e^(−πq/2p) in joules for a circuit.
pub fn v0_joules(circ: &CircuitParams) -> Result<f64> {
    let (_, model) = map_circuit_to_model(circ)?;
    Ok(v0(&model) * consts::HBAR * circ.gyration_conductance / circ.capacitance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::BasisTag;
    use crate::params::consts::{PLANCK_H, TWO_E2_OVER_H};
    use crate::params::FluxRatio;
    use crate::spectra::confined_hamiltonian;

    fn table_ii() -> CircuitParams {
        CircuitParams::new(1.434e-15, Some(2.3e-6), 3.5e9 * PLANCK_H, TWO_E2_OVER_H).unwrap()
    }

    #[test]
    fn zero_flux_bias_matches_confined_hamiltonian() {
        let circ = table_ii();
        let (_, model) = map_circuit_to_model(&circ).unwrap();
        let a = flux_biased_hamiltonian(&circ, 6, 24).unwrap();
        let b = confined_hamiltonian(&model, 6, 24).unwrap();
        let defect = (&a.entries - &b.entries)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(defect < 1e-12, "entrywise defect {defect:e}");
    }

    #[test]
    fn spectrum_two_pi_periodic_in_flux() {
        let mut circ = table_ii();
        let base = eigensolve(&flux_biased_hamiltonian(&circ, 5, 20).unwrap(), 4).unwrap();
        circ.ext_fluxes.phi1 = 2.0 * std::f64::consts::PI;
        let shifted = eigensolve(&flux_biased_hamiltonian(&circ, 5, 20).unwrap(), 4).unwrap();
        for (a, b) in base.values.iter().zip(&shifted.values) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn spectrum_symmetric_under_flux_sign_flip() {
        let mut circ = table_ii();
        circ.ext_fluxes.phi1 = 0.7;
        circ.ext_fluxes.phi_g2 = -0.3;
        let plus = eigensolve(&flux_biased_hamiltonian(&circ, 5, 20).unwrap(), 4).unwrap();
        circ.ext_fluxes.phi1 = -0.7;
        circ.ext_fluxes.phi_g2 = 0.3;
        let minus = eigensolve(&flux_biased_hamiltonian(&circ, 5, 20).unwrap(), 4).unwrap();
        for (a, b) in plus.values.iter().zip(&minus.values) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn charge_offsets_leave_spectrum_invariant() {
        // Gauge invariance is exact; the finite-basis defect falls below
        // 1e−9 once the Landau truncation is converged.
        let flux = FluxRatio::new(1, 2).unwrap();
        let model = ModelParams::new(flux, 0.3, 0.5).unwrap();
        let shift = charge_offset_spectrum_shift(&model, 20, 48, (0.15, -0.2), 5).unwrap();
        assert!(shift < 1e-9, "gauge-away violated: {shift:e}");
    }

    #[test]
    fn gate_time_arithmetic() {
        // ħπ/(1 nA · Φ₀ₛ) ≈ 1.602e−10 s; doubling the current halves it.
        let t = gate_time_z(1e-9).unwrap();
        assert!((t - 1.602e-10).abs() / 1.602e-10 < 1e-3, "t_Z = {t}");
        let t2 = gate_time_z(2e-9).unwrap();
        assert!((t - 2.0 * t2).abs() < 1e-18);
        assert!(gate_time_z(1e3).unwrap() < 1e-21);
        assert!(matches!(gate_time_z(0.0), Err(Error::ZeroCurrent)));
    }

    #[test]
    fn zero_current_keeps_eigenstate_stationary() {
        // An eigenstate of the truncated GKP Hamiltonian only picks up a
        // phase under drift.
        let m_max = 60;
        let v0_si = 1e-25;
        let lam = (2.0 * std::f64::consts::PI).sqrt();
        let mut gkp = Array2::<C64>::zeros((m_max + 1, m_max + 1));
        for alpha in [
            C64::new(lam, 0.0),
            C64::new(-lam, 0.0),
            C64::new(0.0, lam),
            C64::new(0.0, -lam),
        ] {
            gkp += &displacement_matrix(alpha, m_max).entries;
        }
        let gkp_h = HermitianMatrix::new(
            gkp.mapv(|z| z * C64::new(-0.5, 0.0)),
            BasisTag::FockSingle { m_max },
            0.0,
        )
        .unwrap();
        let sol = eigensolve(&gkp_h, 1).unwrap();
        let psi0 = sol.vectors.column(0).to_owned();
        let protocol = DriveProtocol {
            segments: vec![(0.0, 1e-9)],
            port: 1,
        };
        let out = simulate_gate_from(&psi0, v0_si, &protocol, m_max).unwrap();
        assert!(out.return_fidelity > 1.0 - 1e-6, "fidelity {}", out.return_fidelity);
        assert!(out.norm_defect < 1e-9);
    }

    #[test]
    fn noise_axis_parser() {
        assert_eq!(FluxAxis::parse("phi1").unwrap(), FluxAxis::Phi1);
        assert_eq!(FluxAxis::parse("phi-g2").unwrap(), FluxAxis::PhiG2);
        assert!(FluxAxis::parse("bogus").is_err());
    }
}
