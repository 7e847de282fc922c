//! Ladder, quadrature, displacement, and magnetic-translation operators in
//! truncated bases.
//!
//! Displacement matrix elements use the closed form
//! ⟨m|D(α)|n⟩ = √(n!/m!) α^(m−n) e^(−|α|²/2) L_n^(m−n)(|α|²) for m ≥ n,
//! with factorial ratios through log-accumulators and associated Laguerre
//! polynomials through the three-term upward recurrence. Complex powers α^k
//! are built by repeated multiplication so that purely real or purely
//! imaginary arguments keep exact zero components; sums of the four
//! displacements ±λ, ±iλ then cancel exactly outside the mod-4 sectors.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::FluxRatio;
use crate::C64;

/// Which truncated basis a matrix lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BasisTag {
    /// Single-mode Fock basis |m⟩, m = 0..=m_max.
    FockSingle { m_max: usize },
    /// Product basis |n, m⟩ with n the Landau index, m the guiding-center
    /// index; row index is n·(m_max+1) + m.
    FockProduct { n_max: usize, m_max: usize },
    /// Landau index ⊗ magnetic Bloch register |n; l⟩, l = 0..p−1.
    BlochLl { n_max: usize, p: u32 },
    /// Magnetic Bloch register alone, dimension p.
    BlochLll { p: u32 },
}

impl BasisTag {
    pub fn dim(&self) -> usize {
        match *self {
            BasisTag::FockSingle { m_max } => m_max + 1,
            BasisTag::FockProduct { n_max, m_max } => (n_max + 1) * (m_max + 1),
            BasisTag::BlochLl { n_max, p } => (n_max + 1) * p as usize,
            BasisTag::BlochLll { p } => p as usize,
        }
    }
}

/// Absolute elementwise tolerance of the Hermiticity contract.
pub const HERMITICITY_TOL: f64 = 1e-12;

/// Dense complex self-adjoint operator in a declared truncated basis.
#[derive(Debug, Clone)]
pub struct HermitianMatrix {
    pub entries: Array2<C64>,
    pub basis: BasisTag,
    /// Truncation-quality scalar reported by the builder (0 when exact).
    pub trunc_defect: f64,
}

/// Largest elementwise deviation of a square matrix from its own conjugate
/// transpose.
pub fn hermiticity_defect(m: &Array2<C64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..=i {
            let d = (m[[i, j]] - m[[j, i]].conj()).norm();
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

impl HermitianMatrix {
    /// Wrap a matrix after checking the Hermiticity and dimension contracts.
    pub fn new(entries: Array2<C64>, basis: BasisTag, trunc_defect: f64) -> Result<Self> {
        if entries.nrows() != basis.dim() || entries.ncols() != basis.dim() {
            return Err(Error::InvalidParameter(format!(
                "matrix is {}x{} but basis dimension is {}",
                entries.nrows(),
                entries.ncols(),
                basis.dim()
            )));
        }
        let defect = hermiticity_defect(&entries);
        if defect > HERMITICITY_TOL {
            return Err(Error::NonHermitianInput { defect });
        }
        Ok(Self { entries, basis, trunc_defect })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }
}

/// Dense unitary (up to truncation) operator with its unitarity defect.
///
/// A truncated displacement is never unitary near the basis edge (the top
/// Fock states leak out by construction), so the reported defect is measured
/// on the faithful half-truncation block: max |(U†U − 1)_{ij}| for
/// i, j ≤ dim/2.
#[derive(Debug, Clone)]
pub struct UnitaryMatrix {
    pub entries: Array2<C64>,
    pub basis: BasisTag,
    /// max |(U†U − 1)_{ij}| over the half-truncation block.
    pub unitarity_defect: f64,
    /// Set when |α|² exceeds the basis size and the representation is
    /// seriously truncated.
    pub truncation_warning: bool,
}

impl UnitaryMatrix {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }
}

/// max |(U†U − 1)_{ij}| over the upper-left `block`×`block` corner.
pub fn unitarity_defect_block(u: &Array2<C64>, block: usize) -> f64 {
    let n = u.nrows();
    let b = block.min(n);
    let mut worst = 0.0f64;
    for i in 0..b {
        for j in 0..b {
            let mut s = C64::new(0.0, 0.0);
            for k in 0..n {
                s += u[[k, i]].conj() * u[[k, j]];
            }
            if i == j {
                s -= 1.0;
            }
            let d = s.norm();
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

/// Unitarity defect over the full matrix (appropriate for exactly unitary
/// constructions such as the magnetic translations).
pub fn unitarity_defect(u: &Array2<C64>) -> f64 {
    unitarity_defect_block(u, u.nrows())
}

/// Truncated annihilation operator b: sub-diagonal √m, dimension m_max+1.
pub fn ladder_matrix(m_max: usize) -> Array2<C64> {
    let dim = m_max + 1;
    let mut b = Array2::zeros((dim, dim));
    for m in 1..dim {
        b[[m - 1, m]] = C64::new((m as f64).sqrt(), 0.0);
    }
    b
}

/// Quadratures X = (b+b†)/√2 and P = (b−b†)/(i√2) in the Fock basis.
pub fn quadrature_matrices(m_max: usize) -> (HermitianMatrix, HermitianMatrix) {
    let dim = m_max + 1;
    let basis = BasisTag::FockSingle { m_max };
    let mut x = Array2::zeros((dim, dim));
    let mut p = Array2::zeros((dim, dim));
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    for m in 1..dim {
        let c = (m as f64).sqrt() * inv_sqrt2;
        x[[m - 1, m]] = C64::new(c, 0.0);
        x[[m, m - 1]] = C64::new(c, 0.0);
        p[[m - 1, m]] = C64::new(0.0, -c);
        p[[m, m - 1]] = C64::new(0.0, c);
    }
    (
        HermitianMatrix { entries: x, basis, trunc_defect: 0.0 },
        HermitianMatrix { entries: p, basis, trunc_defect: 0.0 },
    )
}

/// ln(m!) for m = 0..=m_max, accumulated term by term.
fn log_factorials(m_max: usize) -> Vec<f64> {
    let mut lf = vec![0.0f64; m_max + 1];
    for m in 1..=m_max {
        lf[m] = lf[m - 1] + (m as f64).ln();
    }
    lf
}

/// Displacement operator D(α) = exp(α b† − α* b) in the truncated Fock basis.
///
/// Entries along the k-th diagonal share a real magnitude
/// T_j = √(j!/(j+k)!) |α|^k e^(−x/2) L_j^(k)(x), built by the scaled upward
/// Laguerre recurrence (bounded by 1, so no overflow at any truncation), and
/// a unit phase (α/|α|)^k computed by repeated multiplication — purely real
/// or imaginary α keeps exact zero components.
pub fn displacement_matrix(alpha: C64, m_max: usize) -> UnitaryMatrix {
    let dim = m_max + 1;
    let x = alpha.norm_sqr();
    if x == 0.0 {
        return UnitaryMatrix {
            entries: eye(dim),
            basis: BasisTag::FockSingle { m_max },
            unitarity_defect: 0.0,
            truncation_warning: false,
        };
    }
    let lf = log_factorials(m_max);
    let modulus = alpha.norm();
    let phase = alpha / modulus;
    let neg_conj_phase = -phase.conj();
    let mut phase_pow = Vec::with_capacity(dim);
    let mut neg_conj_pow = Vec::with_capacity(dim);
    phase_pow.push(C64::new(1.0, 0.0));
    neg_conj_pow.push(C64::new(1.0, 0.0));
    for k in 1..dim {
        phase_pow.push(phase_pow[k - 1] * phase);
        neg_conj_pow.push(neg_conj_pow[k - 1] * neg_conj_phase);
    }

    let mut d = Array2::zeros((dim, dim));
    let mut t = vec![0.0f64; dim];
    // Diagonal band k = m − n ≥ 0 fills the lower triangle; the upper one
    // follows from ⟨m|D(α)|n⟩ = √(m!/n!) (−α*)^(n−m) e^(−x/2) L_m^(n−m)(x).
    for k in 0..dim {
        let kk = k as f64;
        let count = dim - k;
        // T_0 = |⟨k|D|0⟩| ≤ 1, then the scaled three-term recurrence.
        t[0] = (kk * modulus.ln() - 0.5 * lf[k] - 0.5 * x).exp();
        if count > 1 {
            t[1] = t[0] * (1.0 + kk - x) / (1.0 + kk).sqrt();
        }
        for j in 1..count.saturating_sub(1) {
            let jf = j as f64;
            let r0 = ((jf + 1.0) / (jf + 1.0 + kk)).sqrt();
            let r1 = (jf / (jf + kk)).sqrt();
            t[j + 1] = ((2.0 * jf + 1.0 + kk - x) * r0 * t[j]
                - (jf + kk) * r0 * r1 * t[j - 1])
                / (jf + 1.0);
        }
        for n in 0..count {
            let m = n + k;
            d[[m, n]] = phase_pow[k] * t[n];
            if k > 0 {
                d[[n, m]] = neg_conj_pow[k] * t[n];
            }
        }
    }

    let defect = unitarity_defect_block(&d, m_max / 2 + 1);
    UnitaryMatrix {
        entries: d,
        basis: BasisTag::FockSingle { m_max },
        unitarity_defect: defect,
        truncation_warning: x > m_max as f64,
    }
}

/// Magnetic translation pair (T₁(qL₀/p), T₂(qL₀/p)) as p×p unitaries on the
/// Bloch register at crystal momentum (k₁, k₂); momenta outside the
/// Brillouin zone wrap around.
pub fn mto_pair(flux: FluxRatio, k1: f64, k2: f64) -> (UnitaryMatrix, UnitaryMatrix) {
    let p = flux.p() as usize;
    let pf = f64::from(flux.p());
    let qf = f64::from(flux.q());
    let l0 = flux.lattice_constant();
    let tau = 2.0 * std::f64::consts::PI;

    // Brillouin zone: k₁ ∈ [0, 2π/qL₀), k₂ ∈ [0, 2π/L₀).
    let k1 = k1.rem_euclid(tau / (qf * l0));
    let k2 = k2.rem_euclid(tau / l0);

    let basis = BasisTag::BlochLll { p: flux.p() };
    let mut t1 = Array2::zeros((p, p));
    let mut t2 = Array2::zeros((p, p));
    let hop = C64::from_polar(1.0, k1 * qf * l0 / pf);
    for l in 0..p {
        t1[[(l + 1) % p, l]] = hop;
        let phase = qf * (k2 * l0 + tau * l as f64) / pf;
        t2[[l, l]] = C64::from_polar(1.0, phase);
    }
    (
        UnitaryMatrix {
            entries: t1,
            basis,
            unitarity_defect: 0.0,
            truncation_warning: false,
        },
        UnitaryMatrix {
            entries: t2,
            basis,
            unitarity_defect: 0.0,
            truncation_warning: false,
        },
    )
}

/// Kronecker product with row index (i_a, i_b) → i_a · dim_b + i_b.
pub fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (ra, ca) = a.dim();
    let (rb, cb) = b.dim();
    let mut out = Array2::zeros((ra * rb, ca * cb));
    for ia in 0..ra {
        for ja in 0..ca {
            let av = a[[ia, ja]];
            if av == C64::new(0.0, 0.0) {
                continue;
            }
            for ib in 0..rb {
                for jb in 0..cb {
                    out[[ia * rb + ib, ja * cb + jb]] = av * b[[ib, jb]];
                }
            }
        }
    }
    out
}

/// Identity matrix.
pub fn eye(dim: usize) -> Array2<C64> {
    Array2::from_diag_elem(dim, C64::new(1.0, 0.0))
}
