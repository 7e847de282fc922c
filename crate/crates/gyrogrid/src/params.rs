//! Parameter containers and the circuit ↔ crystal-electron mapping.
//!
//! Internally everything is dimensionless: energies in units of ħω_c and
//! lengths in units of the magnetic length l_B. SI values enter only through
//! [`CircuitParams`] and leave through [`DerivedQuantities`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact 2019 SI constants plus quantities derived from them.
pub mod consts {
    /// Elementary charge (C), exact.
    pub const E_CHARGE: f64 = 1.602_176_634e-19;
    /// Planck constant (J·s), exact.
    pub const PLANCK_H: f64 = 6.626_070_15e-34;
    /// Reduced Planck constant (J·s).
    pub const HBAR: f64 = PLANCK_H / (2.0 * std::f64::consts::PI);
    /// Superconducting flux quantum Φ₀ₛ = h/2e (Wb).
    pub const PHI0_SC: f64 = PLANCK_H / (2.0 * E_CHARGE);
    /// Superconducting conductance quantum G₀ = (2e)²/h (S).
    pub const G0_SC: f64 = 4.0 * E_CHARGE * E_CHARGE / PLANCK_H;
    /// The gyration conductance 2e²/h that puts the circuit at flux 1/2 (S).
    pub const TWO_E2_OVER_H: f64 = 2.0 * E_CHARGE * E_CHARGE / PLANCK_H;
}

/// Coprime pair (p, q) encoding the rational flux Φ/Φ₀ = p/q.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FluxRatio {
    p: u32,
    q: u32,
}

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl FluxRatio {
    pub fn new(p: u32, q: u32) -> Result<Self> {
        if p == 0 || q == 0 {
            return Err(Error::InvalidParameter(format!(
                "flux ratio needs p ≥ 1 and q ≥ 1, got {p}/{q}"
            )));
        }
        if gcd(p, q) != 1 {
            return Err(Error::InvalidParameter(format!(
                "flux ratio {p}/{q} is not in lowest terms"
            )));
        }
        Ok(Self { p, q })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    /// Φ/Φ₀ = p/q.
    pub fn ratio(&self) -> f64 {
        f64::from(self.p) / f64::from(self.q)
    }

    /// Inverse flux q/p, the Hofstadter-butterfly axis.
    pub fn inverse_ratio(&self) -> f64 {
        f64::from(self.q) / f64::from(self.p)
    }

    /// Lattice constant L₀ in magnetic units, L₀/l_B = √(2πp/q).
    pub fn lattice_constant(&self) -> f64 {
        (2.0 * std::f64::consts::PI * self.ratio()).sqrt()
    }

    /// Displacement magnitude λ = √(πq/p) entering every crystal coupling.
    pub fn lambda(&self) -> f64 {
        (std::f64::consts::PI / self.ratio()).sqrt()
    }

    /// LLL projection factor V₀/V = e^(−πq/2p).
    pub fn v0_factor(&self) -> f64 {
        (-std::f64::consts::PI * f64::from(self.q) / (2.0 * f64::from(self.p))).exp()
    }

    /// Best rational approximation p/q of `x` with q ≤ `max_den`, by
    /// continued fractions. Errors if no convergent lands within `tol`
    /// relative.
    pub fn approximate(x: f64, max_den: u32, tol: f64) -> Result<Self> {
        if !(x.is_finite() && x > 0.0) {
            return Err(Error::InvalidParameter(format!("flux ratio must be positive, got {x}")));
        }
        let (mut p0, mut q0, mut p1, mut q1) = (0u64, 1u64, 1u64, 0u64);
        let mut frac = x;
        for _ in 0..64 {
            let a = frac.floor() as u64;
            let p2 = a * p1 + p0;
            let q2 = a * q1 + q0;
            if q2 > u64::from(max_den) {
                break;
            }
            (p0, q0, p1, q1) = (p1, q1, p2, q2);
            if p1 > 0 && ((p1 as f64 / q1 as f64) - x).abs() <= tol * x {
                return Ok(Self { p: p1 as u32, q: q1 as u32 });
            }
            let rem = frac - a as f64;
            if rem.abs() < 1e-15 {
                break;
            }
            frac = 1.0 / rem;
        }
        Err(Error::NonRationalFlux { value: x, max_den: u64::from(max_den), tol })
    }
}

/// Dimensionless model of the crystal electron: flux ratio plus the two
/// energy ratios V/ħω_c and ħω₀/V (zero meaning no confinement).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ModelParams {
    pub flux: FluxRatio,
    pub v_over_hwc: f64,
    pub hw0_over_v: f64,
}

impl ModelParams {
    pub fn new(flux: FluxRatio, v_over_hwc: f64, hw0_over_v: f64) -> Result<Self> {
        if !(v_over_hwc > 0.0 && v_over_hwc.is_finite()) {
            return Err(Error::InvalidParameter(format!("V/ħω_c must be > 0, got {v_over_hwc}")));
        }
        if !(hw0_over_v >= 0.0 && hw0_over_v.is_finite()) {
            return Err(Error::InvalidParameter(format!("ħω₀/V must be ≥ 0, got {hw0_over_v}")));
        }
        Ok(Self { flux, v_over_hwc, hw0_over_v })
    }

    /// Model with the LLL confinement strength w = ħω₀²/(ω_c V₀) prescribed
    /// directly; `v_over_hwc` fixes the overall energy scale.
    pub fn from_lll_confinement(flux: FluxRatio, v_over_hwc: f64, w: f64) -> Result<Self> {
        if !(w >= 0.0 && w.is_finite()) {
            return Err(Error::InvalidParameter(format!("ħω₀²/ω_cV₀ must be ≥ 0, got {w}")));
        }
        let hw0_over_v = (w * flux.v0_factor() / v_over_hwc).sqrt();
        Self::new(flux, v_over_hwc, hw0_over_v)
    }

    /// (ω₀/ω_c)² = (V/ħω_c · ħω₀/V)², the coefficient of the quadratic
    /// two-mode coupling in units of ħω_c.
    pub fn omega0_sq_over_wc_sq(&self) -> f64 {
        let r = self.v_over_hwc * self.hw0_over_v;
        r * r
    }

    /// LLL confinement strength w = ħω₀²/(ω_c V₀).
    pub fn lll_confinement(&self) -> f64 {
        self.omega0_sq_over_wc_sq() / v0(self)
    }
}

/// V₀/ħω_c = (V/ħω_c)·e^(−πq/2p).
pub fn v0(model: &ModelParams) -> f64 {
    model.v_over_hwc * model.flux.v0_factor()
}

/// Squeezing parameter Δ = (ħω₀²/4πω_cV₀)^(1/4).
pub fn squeeze_delta(model: &ModelParams) -> Result<f64> {
    if model.hw0_over_v == 0.0 {
        return Err(Error::ZeroConfinement);
    }
    Ok((model.lll_confinement() / (4.0 * std::f64::consts::PI)).powf(0.25))
}

/// External reduced fluxes (radians) threading the four circuit loops.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct ExtFluxes {
    pub phi1: f64,
    pub phi2: f64,
    pub phi_g1: f64,
    pub phi_g2: f64,
}

/// SI description of the gyrator-coupled pair of fluxonia.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CircuitParams {
    /// Shunt capacitance C (F).
    pub capacitance: f64,
    /// Shunt inductance L (H); `None` removes the confinement.
    pub inductance: Option<f64>,
    /// Josephson energy E_J (J).
    pub josephson_energy: f64,
    /// Gyration conductance G (S).
    pub gyration_conductance: f64,
    /// External reduced fluxes.
    pub ext_fluxes: ExtFluxes,
}

impl CircuitParams {
    pub fn new(
        capacitance: f64,
        inductance: Option<f64>,
        josephson_energy: f64,
        gyration_conductance: f64,
    ) -> Result<Self> {
        if !(capacitance > 0.0) {
            return Err(Error::InvalidParameter(format!("C must be > 0, got {capacitance}")));
        }
        if let Some(l) = inductance {
            if !(l > 0.0) {
                return Err(Error::InvalidParameter(format!("L must be > 0, got {l}")));
            }
        }
        if !(josephson_energy > 0.0) {
            return Err(Error::InvalidParameter(format!("E_J must be > 0, got {josephson_energy}")));
        }
        if !(gyration_conductance > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "G must be > 0, got {gyration_conductance}"
            )));
        }
        Ok(Self {
            capacitance,
            inductance,
            josephson_energy,
            gyration_conductance,
            ext_fluxes: ExtFluxes::default(),
        })
    }

    pub fn with_ext_fluxes(mut self, ext: ExtFluxes) -> Self {
        self.ext_fluxes = ext;
        self
    }

    /// Construct from the energy ratios E_J/E_C and E_L/E_C at flux 1/2,
    /// with the capacitance fixing the absolute scale.
    pub fn from_energy_ratios(ej_over_ec: f64, el_over_ec: f64, capacitance: f64) -> Result<Self> {
        use consts::*;
        if !(ej_over_ec > 0.0 && el_over_ec >= 0.0) {
            return Err(Error::InvalidParameter("energy ratios must be positive".to_string()));
        }
        let e_c = E_CHARGE * E_CHARGE / (2.0 * capacitance);
        let e_j = ej_over_ec * e_c;
        let inductance = if el_over_ec > 0.0 {
            let e_l = el_over_ec * e_c;
            Some(PHI0_SC * PHI0_SC / (4.0 * std::f64::consts::PI.powi(2) * e_l))
        } else {
            None
        };
        Self::new(capacitance, inductance, e_j, TWO_E2_OVER_H)
    }
}

/// SI quantities derived from [`CircuitParams`] via the gyrator ↔ magnetic
/// field correspondence.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DerivedQuantities {
    /// Cyclotron frequency ω_c = G/C (rad/s).
    pub omega_c: f64,
    /// LC frequency ω_LC = 1/√(LC) (rad/s), absent without L.
    pub omega_lc: Option<f64>,
    /// Charging energy E_C = e²/2C (J).
    pub e_c: f64,
    /// Inductive energy E_L = Φ₀ₛ²/4π²L (J), absent without L.
    pub e_l: Option<f64>,
    /// Flux ratio recovered from G/G₀.
    pub flux: FluxRatio,
    /// V₀/V = e^(−πq/2p).
    pub v0_over_v: f64,
    /// Squeezing parameter Δ, absent without L.
    pub delta: Option<f64>,
}

/// Maximum denominator accepted when recovering p/q from G/G₀.
pub const FLUX_MAX_DENOMINATOR: u32 = 64;
/// Relative tolerance of the rational-flux recovery.
pub const FLUX_TOLERANCE: f64 = 1e-9;

/// Map circuit parameters onto the dimensionless crystal-electron model:
/// ω_c = G/C, p/q = G/G₀, V/ħω_c = E_J/ħω_c, ħω₀/V = ħω_LC/E_J.
pub fn map_circuit_to_model(circ: &CircuitParams) -> Result<(DerivedQuantities, ModelParams)> {
    use consts::*;
    let omega_c = circ.gyration_conductance / circ.capacitance;
    let flux = FluxRatio::approximate(
        circ.gyration_conductance / G0_SC,
        FLUX_MAX_DENOMINATOR,
        FLUX_TOLERANCE,
    )?;
    let e_c = E_CHARGE * E_CHARGE / (2.0 * circ.capacitance);
    let v_over_hwc = circ.josephson_energy / (HBAR * omega_c);

    let (omega_lc, e_l, hw0_over_v) = match circ.inductance {
        Some(l) => {
            let w_lc = 1.0 / (l * circ.capacitance).sqrt();
            let e_l = PHI0_SC * PHI0_SC / (4.0 * std::f64::consts::PI.powi(2) * l);
            (Some(w_lc), Some(e_l), HBAR * w_lc / circ.josephson_energy)
        }
        None => (None, None, 0.0),
    };

    let model = ModelParams::new(flux, v_over_hwc, hw0_over_v)?;
    let delta = omega_lc.map(|w_lc| {
        // Δ⁴ = ħω₀²/(4π ω_c V₀) evaluated directly in SI.
        let v0_si = circ.josephson_energy * flux.v0_factor();
        (HBAR * w_lc * w_lc / (4.0 * std::f64::consts::PI * omega_c * v0_si)).powf(0.25)
    });

    let derived = DerivedQuantities {
        omega_c,
        omega_lc,
        e_c,
        e_l,
        flux,
        v0_over_v: flux.v0_factor(),
        delta,
    };
    Ok((derived, model))
}
