//! Hamiltonian assembly and spectral sweeps.
//!
//! Builders return [`HermitianMatrix`] in the basis named by their tag;
//! energies are in units of ħω_c unless stated otherwise (the Harper
//! Hamiltonian is scaled by the caller-supplied v₀).

use ndarray::{Array1, Array2};
use rayon::prelude::*;
use serde::Serialize;

use crate::eigh::eigh;
use crate::error::{Error, Result};
use crate::operators::{
    displacement_matrix, eye, hermiticity_defect, kron, ladder_matrix, mto_pair, BasisTag,
    HermitianMatrix,
};
use crate::params::{v0, FluxRatio, ModelParams};
use crate::C64;

/// Eigenvalues (ascending) with orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct EigenSolution {
    pub values: Vec<f64>,
    pub vectors: Array2<C64>,
    pub basis: BasisTag,
    /// Fourier-parity sector (m − n) mod 4 per eigenvector, when the solve
    /// was sector-resolved.
    pub sectors: Option<Vec<u8>>,
}

impl EigenSolution {
    /// max residual ‖Hv − λv‖ over the returned pairs.
    pub fn max_residual(&self, h: &HermitianMatrix) -> f64 {
        let mut worst = 0.0f64;
        for (j, &lam) in self.values.iter().enumerate() {
            let v = self.vectors.column(j);
            let hv = h.entries.dot(&v);
            let r: f64 = hv
                .iter()
                .zip(v.iter())
                .map(|(a, b)| (a - b * lam).norm_sqr())
                .sum::<f64>()
                .sqrt();
            worst = worst.max(r);
        }
        worst
    }

    /// max |⟨v_i|v_j⟩ − δ_ij| over the returned pairs.
    pub fn max_overlap_defect(&self) -> f64 {
        let n = self.values.len();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                let mut s = C64::new(0.0, 0.0);
                for k in 0..self.vectors.nrows() {
                    s += self.vectors[[k, i]].conj() * self.vectors[[k, j]];
                }
                if i == j {
                    s -= 1.0;
                }
                worst = worst.max(s.norm());
            }
        }
        worst
    }
}

/// Dense solve returning the lowest `count` eigenpairs.
pub fn eigensolve(h: &HermitianMatrix, count: usize) -> Result<EigenSolution> {
    if count > h.dim() {
        return Err(Error::InvalidParameter(format!(
            "requested {count} eigenpairs of a {}-dimensional matrix",
            h.dim()
        )));
    }
    let defect = hermiticity_defect(&h.entries);
    if defect > crate::operators::HERMITICITY_TOL {
        return Err(Error::NonHermitianInput { defect });
    }
    let (w, v) = eigh(&h.entries)?;
    let dim = h.dim();
    let mut vectors = Array2::zeros((dim, count));
    for j in 0..count {
        vectors.column_mut(j).assign(&v.column(j));
    }
    Ok(EigenSolution { values: w[..count].to_vec(), vectors, basis: h.basis, sectors: None })
}

/// Fourier-parity sector (m − n) mod 4 of a basis index.
fn sector_of_index(basis: BasisTag, idx: usize) -> Option<u8> {
    match basis {
        BasisTag::FockSingle { .. } => Some((idx % 4) as u8),
        BasisTag::FockProduct { m_max, .. } => {
            let m = idx % (m_max + 1);
            let n = idx / (m_max + 1);
            Some((((m % 4) + 4 - (n % 4)) % 4) as u8)
        }
        _ => None,
    }
}

/// Sector-resolved solve for Hamiltonians that commute with the four-fold
/// rotation e^(−iπ/2 (a†a − b†b)). Eigenvectors come out exactly
/// sector-pure, which fixes the phase/rotation ambiguity of numerically
/// degenerate pairs. Errors if the matrix leaks between sectors.
pub fn eigensolve_mod4(h: &HermitianMatrix, count: usize) -> Result<EigenSolution> {
    let dim = h.dim();
    if count > dim {
        return Err(Error::InvalidParameter(format!(
            "requested {count} eigenpairs of a {dim}-dimensional matrix"
        )));
    }
    // Partition basis indices by sector.
    let mut groups: [Vec<usize>; 4] = Default::default();
    for idx in 0..dim {
        let s = sector_of_index(h.basis, idx).ok_or_else(|| {
            Error::InvalidParameter("sector solve needs a Fock basis".to_string())
        })?;
        groups[s as usize].push(idx);
    }
    // The symmetry must be exact: verify off-sector entries vanish.
    let mut leak = 0.0f64;
    for i in 0..dim {
        let si = sector_of_index(h.basis, i).unwrap();
        for j in 0..dim {
            if sector_of_index(h.basis, j).unwrap() != si {
                leak = leak.max(h.entries[[i, j]].norm());
            }
        }
    }
    if leak > 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "matrix couples mod-4 sectors (leak {leak:e}); use eigensolve instead"
        )));
    }

    let solved: Vec<(u8, Vec<f64>, Array2<C64>, &Vec<usize>)> = groups
        .iter()
        .enumerate()
        .filter(|(_, g)| !g.is_empty())
        .map(|(s, g)| {
            let n = g.len();
            let mut block = Array2::zeros((n, n));
            for (bi, &i) in g.iter().enumerate() {
                for (bj, &j) in g.iter().enumerate() {
                    block[[bi, bj]] = h.entries[[i, j]];
                }
            }
            let (w, v) = eigh(&block)?;
            Ok((s as u8, w, v, g))
        })
        .collect::<Result<_>>()?;

    // Merge ascending across sectors.
    let mut order: Vec<(f64, usize, usize)> = Vec::new();
    for (gi, (_, w, _, _)) in solved.iter().enumerate() {
        for (k, &val) in w.iter().enumerate() {
            order.push((val, gi, k));
        }
    }
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    order.truncate(count);

    let mut values = Vec::with_capacity(count);
    let mut sectors = Vec::with_capacity(count);
    let mut vectors = Array2::zeros((dim, count));
    for (col, &(val, gi, k)) in order.iter().enumerate() {
        let (s, _, v, g) = &solved[gi];
        values.push(val);
        sectors.push(*s);
        for (bi, &i) in g.iter().enumerate() {
            vectors[[i, col]] = v[[bi, k]];
        }
    }
    Ok(EigenSolution { values, vectors, basis: h.basis, sectors: Some(sectors) })
}

/// LLL-projected crystal Hamiltonian (Harper form) at one Bloch momentum:
/// H = −(v₀/2)[T₁(qL₀/p) + T₂(qL₀/p) + h.c.], a p×p matrix in units of the
/// caller's v₀.
pub fn harper_hamiltonian(flux: FluxRatio, k1: f64, k2: f64, v0_scale: f64) -> HermitianMatrix {
    let (t1, t2) = mto_pair(flux, k1, k2);
    let sum = &t1.entries + &t2.entries;
    let h = (&sum + &sum.t().mapv(|z| z.conj())).mapv(|z| z * (-0.5 * v0_scale));
    HermitianMatrix { entries: h, basis: BasisTag::BlochLll { p: flux.p() }, trunc_defect: 0.0 }
}

/// |⟨n_max|D(λ)|0⟩| = e^(−λ²/2) λ^n_max / √(n_max!), the weight a builder
/// leaves on its topmost Landau level.
fn top_level_coupling(lambda: f64, n_max: usize) -> f64 {
    let mut log = -0.5 * lambda * lambda + (n_max as f64) * lambda.ln();
    for k in 1..=n_max {
        log -= 0.5 * (k as f64).ln();
    }
    log.exp()
}

/// Crystal electron at rational flux without confinement, in the
/// Landau ⊗ Bloch product basis:
/// H/ħω_c = (a†a + 1/2) − (V/2ħω_c)[D_a(iλ)T₁ + D_a(−λ)T₂ + h.c.].
pub fn crystal_hamiltonian(
    model: &ModelParams,
    k1: f64,
    k2: f64,
    n_max: usize,
) -> Result<HermitianMatrix> {
    if model.hw0_over_v != 0.0 {
        return Err(Error::InvalidParameter(
            "crystal_hamiltonian describes the unconfined lattice; use confined_hamiltonian"
                .to_string(),
        ));
    }
    let flux = model.flux;
    let p = flux.p() as usize;
    let lam = flux.lambda();
    let rv = model.v_over_hwc;

    let (t1, t2) = mto_pair(flux, k1, k2);
    let da_i = displacement_matrix(C64::new(0.0, lam), n_max);
    let da_m = displacement_matrix(C64::new(-lam, 0.0), n_max);

    let mut h = Array2::zeros(((n_max + 1) * p, (n_max + 1) * p));
    // Kinetic term (a†a + 1/2) ⊗ 1.
    for n in 0..=n_max {
        for l in 0..p {
            h[[n * p + l, n * p + l]] = C64::new(n as f64 + 0.5, 0.0);
        }
    }
    let coupling = kron(&da_i.entries, &t1.entries) + kron(&da_m.entries, &t2.entries);
    let coupling = &coupling + &coupling.t().mapv(|z| z.conj());
    h -= &coupling.mapv(|z| z * (0.5 * rv));

    let trunc_defect = rv * top_level_coupling(lam, n_max);
    HermitianMatrix::new(h, BasisTag::BlochLl { n_max, p: flux.p() }, trunc_defect)
}

/// Confined two-mode Hamiltonian in the Fock product basis:
/// H/ħω_c = a†a + (ω₀/ω_c)²(a†a + b†b + ab + a†b†)
///          − (V/2ħω_c)[D_a(λ)D_b(−λ) + D_a(iλ)D_b(iλ) + h.c.].
pub fn confined_hamiltonian(
    model: &ModelParams,
    n_max: usize,
    m_max: usize,
) -> Result<HermitianMatrix> {
    if model.hw0_over_v <= 0.0 {
        return Err(Error::ZeroConfinement);
    }
    confined_hamiltonian_with_phases(model, n_max, m_max, 0.0, 0.0, (0.0, 0.0))
}

/// Confined Hamiltonian with phase offsets θ₁, θ₂ inside the two crystal
/// cosines (reduced external fluxes) and optional charge offsets (γ₁, γ₂) on
/// the dynamical-momentum quadratures.
pub fn confined_hamiltonian_with_phases(
    model: &ModelParams,
    n_max: usize,
    m_max: usize,
    theta1: f64,
    theta2: f64,
    charge_offsets: (f64, f64),
) -> Result<HermitianMatrix> {
    let flux = model.flux;
    let lam = flux.lambda();
    let rv = model.v_over_hwc;
    let u = model.omega0_sq_over_wc_sq();

    let a = ladder_matrix(n_max);
    let b = ladder_matrix(m_max);
    let ad = a.t().mapv(|z| z.conj());
    let bd = b.t().mapv(|z| z.conj());
    let na = ad.dot(&a);
    let nb = bd.dot(&b);
    let id_a = eye(n_max + 1);
    let id_b = eye(m_max + 1);

    let mut h = kron(&na, &id_b).mapv(|z| z * (1.0 + u));
    h += &kron(&id_a, &nb).mapv(|z| z * u);
    let anomalous = kron(&a, &b);
    h += &(&anomalous + &anomalous.t().mapv(|z| z.conj())).mapv(|z| z * u);

    // Crystal cosines with external-flux phase offsets.
    let da_r = displacement_matrix(C64::new(lam, 0.0), n_max);
    let db_mr = displacement_matrix(C64::new(-lam, 0.0), m_max);
    let da_i = displacement_matrix(C64::new(0.0, lam), n_max);
    let db_i = displacement_matrix(C64::new(0.0, lam), m_max);
    let term2 = kron(&da_r.entries, &db_mr.entries).mapv(|z| z * C64::from_polar(1.0, theta2));
    let term1 = kron(&da_i.entries, &db_i.entries).mapv(|z| z * C64::from_polar(1.0, theta1));
    let pot = &term1 + &term2;
    h -= &(&pot + &pot.t().mapv(|z| z.conj())).mapv(|z| z * (0.5 * rv));

    // Static charge offsets enter only the kinetic quadratures:
    // ħω_c[γ₂ X_a + γ₁ P_a + (γ₁² + γ₂²)/2].
    let (g1, g2) = charge_offsets;
    if g1 != 0.0 || g2 != 0.0 {
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        let xa = (&a + &ad).mapv(|z| z * inv_sqrt2);
        let pa = (&a - &ad).mapv(|z| z * C64::new(0.0, inv_sqrt2));
        h += &kron(&xa, &id_b).mapv(|z| z * g2);
        h += &kron(&pa, &id_b).mapv(|z| z * g1);
        let shift = 0.5 * (g1 * g1 + g2 * g2);
        for i in 0..h.nrows() {
            h[[i, i]] += shift;
        }
    }

    let trunc_defect = rv * top_level_coupling(lam, n_max).max(top_level_coupling(lam, m_max));
    HermitianMatrix::new(h, BasisTag::FockProduct { n_max, m_max }, trunc_defect)
}

/// LLL-projected confined Hamiltonian in the guiding-center Fock basis:
/// H/ħω_c = (ω₀/ω_c)² b†b − (V₀/2ħω_c)[D(iλ) + D(−iλ) + D(λ) + D(−λ)].
/// Matrix entries vanish identically unless m₁ ≡ m₂ (mod 4).
pub fn lll_confined_hamiltonian(model: &ModelParams, m_max: usize) -> Result<HermitianMatrix> {
    let lam = model.flux.lambda();
    let v0_hwc = v0(model);
    let u = model.omega0_sq_over_wc_sq();

    let mut h = Array2::zeros((m_max + 1, m_max + 1));
    for m in 0..=m_max {
        h[[m, m]] = C64::new(u * m as f64, 0.0);
    }
    for alpha in [
        C64::new(lam, 0.0),
        C64::new(-lam, 0.0),
        C64::new(0.0, lam),
        C64::new(0.0, -lam),
    ] {
        h -= &displacement_matrix(alpha, m_max).entries.mapv(|z| z * (0.5 * v0_hwc));
    }
    let trunc_defect = v0_hwc * top_level_coupling(lam, m_max);
    HermitianMatrix::new(h, BasisTag::FockSingle { m_max }, trunc_defect)
}

/// Weight of a product-basis state on the n = 0 stratum.
pub fn lll_weight(state: &EigenSolution, which: usize) -> Result<f64> {
    let BasisTag::FockProduct { m_max, .. } = state.basis else {
        return Err(Error::InvalidParameter(
            "lll_weight needs a state in the Fock product basis".to_string(),
        ));
    };
    if which >= state.values.len() {
        return Err(Error::InvalidParameter(format!(
            "state index {which} out of range ({} available)",
            state.values.len()
        )));
    }
    let col = state.vectors.column(which);
    Ok((0..=m_max).map(|m| col[m].norm_sqr()).sum())
}

/// Restrict a product-basis vector to its n = 0 block (not renormalized).
pub fn project_lll(state: &EigenSolution, which: usize) -> Result<Array1<C64>> {
    let BasisTag::FockProduct { m_max, .. } = state.basis else {
        return Err(Error::InvalidParameter(
            "project_lll needs a state in the Fock product basis".to_string(),
        ));
    };
    let col = state.vectors.column(which);
    Ok(Array1::from_iter((0..=m_max).map(|m| col[m])))
}

/// One row per grid point of a one-parameter sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub axis_name: String,
    pub axis: Vec<f64>,
    /// Energies per grid point, each row sorted ascending.
    pub energies: Vec<Vec<f64>>,
    /// Sector label per energy, when the solve was sector-resolved.
    pub sectors: Option<Vec<Vec<u8>>>,
    /// Truncations and model parameters the sweep was run with.
    pub metadata: serde_json::Value,
}

/// How butterfly energies are scaled.
#[derive(Debug, Clone, Copy)]
pub enum ButterflyUnits {
    /// Energies in units of V₀ (Harper spectrum as published).
    V0,
    /// Energies in units of ħω_c, using v₀ = (V/ħω_c)·e^(−πq/2p) per flux.
    HwcWith { v_over_hwc: f64 },
}

/// Coprime flux ratios with p, q ≤ `max_pq` and inverse ratio q/p ∈ (0, `max_inverse`],
/// sorted by q/p.
pub fn farey_fluxes(max_pq: u32, max_inverse: f64) -> Vec<FluxRatio> {
    let mut out = Vec::new();
    for p in 1..=max_pq {
        for q in 1..=max_pq {
            if f64::from(q) / f64::from(p) <= max_inverse + 1e-12 {
                if let Ok(f) = FluxRatio::new(p, q) {
                    out.push(f);
                }
            }
        }
    }
    out.sort_by(|a, b| a.inverse_ratio().total_cmp(&b.inverse_ratio()));
    out.dedup();
    out
}

/// Uniform k-grid over the magnetic Brillouin zone, endpoints excluded.
pub fn k_grid(flux: FluxRatio, n1: usize, n2: usize) -> Vec<(f64, f64)> {
    let l0 = flux.lattice_constant();
    let tau = 2.0 * std::f64::consts::PI;
    let dk1 = tau / (f64::from(flux.q()) * l0) / n1 as f64;
    let dk2 = tau / l0 / n2 as f64;
    let mut ks = Vec::with_capacity(n1 * n2);
    for i in 0..n1 {
        for j in 0..n2 {
            ks.push((i as f64 * dk1, j as f64 * dk2));
        }
    }
    ks
}

/// Hofstadter butterfly: for each flux, the union over the k-grid of all p
/// Harper eigenvalues.
pub fn butterfly(
    flux_list: &[FluxRatio],
    grid: (usize, usize),
    units: ButterflyUnits,
) -> Result<SweepResult> {
    if flux_list.is_empty() || grid.0 == 0 || grid.1 == 0 {
        return Err(Error::EmptyGrid);
    }
    let rows: Vec<(f64, Vec<f64>)> = flux_list
        .par_iter()
        .map(|&flux| {
            let scale = match units {
                ButterflyUnits::V0 => 1.0,
                ButterflyUnits::HwcWith { v_over_hwc } => v_over_hwc * flux.v0_factor(),
            };
            let mut energies = Vec::with_capacity(grid.0 * grid.1 * flux.p() as usize);
            for (k1, k2) in k_grid(flux, grid.0, grid.1) {
                let h = harper_hamiltonian(flux, k1, k2, scale);
                let (w, _) = eigh(&h.entries)?;
                energies.extend(w);
            }
            energies.sort_by(f64::total_cmp);
            Ok((flux.inverse_ratio(), energies))
        })
        .collect::<Result<_>>()?;

    Ok(SweepResult {
        axis_name: "q_over_p".to_string(),
        axis: rows.iter().map(|r| r.0).collect(),
        energies: rows.into_iter().map(|r| r.1).collect(),
        sectors: None,
        metadata: serde_json::json!({ "grid": [grid.0, grid.1] }),
    })
}

/// Crystal band sweep over flux ratios (the split-Landau-level picture):
/// union of all eigenvalues of the full crystal Hamiltonian over the k-grid,
/// in units of ħω_c.
pub fn crystal_bands(
    flux_list: &[FluxRatio],
    v_over_hwc: f64,
    n_max: usize,
    grid: (usize, usize),
) -> Result<SweepResult> {
    if flux_list.is_empty() || grid.0 == 0 || grid.1 == 0 {
        return Err(Error::EmptyGrid);
    }
    let rows: Vec<(f64, Vec<f64>)> = flux_list
        .par_iter()
        .map(|&flux| {
            let model = ModelParams::new(flux, v_over_hwc, 0.0)?;
            let mut energies = Vec::new();
            for (k1, k2) in k_grid(flux, grid.0, grid.1) {
                let h = crystal_hamiltonian(&model, k1, k2, n_max)?;
                let (w, _) = eigh(&h.entries)?;
                energies.extend(w);
            }
            energies.sort_by(f64::total_cmp);
            Ok((flux.inverse_ratio(), energies))
        })
        .collect::<Result<_>>()?;

    Ok(SweepResult {
        axis_name: "q_over_p".to_string(),
        axis: rows.iter().map(|r| r.0).collect(),
        energies: rows.into_iter().map(|r| r.1).collect(),
        sectors: None,
        metadata: serde_json::json!({ "grid": [grid.0, grid.1], "n_max": n_max, "v_over_hwc": v_over_hwc }),
    })
}

/// Sweep of the confined spectrum against ħω₀/V at fixed V/ħω_c;
/// returns the lowest `levels` eigenvalues with their parity sectors.
pub fn confined_sweep(
    flux: FluxRatio,
    v_over_hwc: f64,
    hw0_over_v_values: &[f64],
    levels: usize,
    n_max: usize,
    m_max: usize,
) -> Result<SweepResult> {
    if hw0_over_v_values.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let rows: Vec<(Vec<f64>, Vec<u8>)> = hw0_over_v_values
        .par_iter()
        .map(|&r_w| {
            let model = ModelParams::new(flux, v_over_hwc, r_w)?;
            let h = confined_hamiltonian(&model, n_max, m_max)?;
            let sol = eigensolve_mod4(&h, levels)?;
            Ok((sol.values, sol.sectors.unwrap()))
        })
        .collect::<Result<_>>()?;

    Ok(SweepResult {
        axis_name: "hw0_over_v".to_string(),
        axis: hw0_over_v_values.to_vec(),
        energies: rows.iter().map(|r| r.0.clone()).collect(),
        sectors: Some(rows.into_iter().map(|r| r.1).collect()),
        metadata: serde_json::json!({
            "n_max": n_max, "m_max": m_max, "v_over_hwc": v_over_hwc,
            "flux": [flux.p(), flux.q()],
        }),
    })
}

/// Linear fit of ln(E₁−E₀) against V/ħω₀.
#[derive(Debug, Clone, Serialize)]
pub struct GapFit {
    /// Decay constant α in E₁−E₀ ≈ c·exp(−α·V/ħω₀).
    pub alpha: f64,
    /// Prefactor c in units of ħω_c.
    pub prefactor: f64,
    pub r_squared: f64,
    /// (V/ħω₀, gap/ħω_c) samples entering the fit.
    pub points: Vec<(f64, f64)>,
}

/// Fit the exponential gap law over a window of ħω₀/V values.
pub fn fit_gap_law(sweep: &SweepResult, window: (f64, f64)) -> Result<GapFit> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut points = Vec::new();
    for (i, &r_w) in sweep.axis.iter().enumerate() {
        if r_w < window.0 - 1e-12 || r_w > window.1 + 1e-12 {
            continue;
        }
        let row = &sweep.energies[i];
        if row.len() < 2 {
            return Err(Error::InvalidParameter("gap fit needs ≥ 2 levels per point".into()));
        }
        let gap = row[1] - row[0];
        if gap <= 0.0 {
            return Err(Error::InvalidParameter(format!("non-positive gap at ħω₀/V = {r_w}")));
        }
        xs.push(1.0 / r_w);
        ys.push(gap.ln());
        points.push((1.0 / r_w, gap));
    }
    if xs.len() < 3 {
        return Err(Error::EmptyGrid);
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let e = y - (slope * x + intercept);
            e * e
        })
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    Ok(GapFit {
        alpha: -slope,
        prefactor: intercept.exp(),
        r_squared: 1.0 - ss_res / ss_tot,
        points,
    })
}

/// Grid location where the parity sectors of two adjacent levels swap.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LevelCrossing {
    pub level_low: usize,
    pub axis_before: f64,
    pub axis_after: f64,
}

/// Detect a crossing between sorted levels `a` and `a+1` by watching their
/// sector labels swap along the sweep.
pub fn detect_crossing(sweep: &SweepResult, level: usize) -> Option<LevelCrossing> {
    let sectors = sweep.sectors.as_ref()?;
    for i in 0..sweep.axis.len() - 1 {
        let (s0, s1) = (&sectors[i], &sectors[i + 1]);
        if s0.len() <= level + 1 || s1.len() <= level + 1 {
            continue;
        }
        if s0[level] != s1[level]
            && s0[level + 1] != s1[level + 1]
            && s0[level] == s1[level + 1]
            && s0[level + 1] == s1[level]
        {
            return Some(LevelCrossing {
                level_low: level,
                axis_before: sweep.axis[i],
                axis_after: sweep.axis[i + 1],
            });
        }
    }
    None
}

/// Shift of the lowest `count` eigenvalues when both truncations double.
pub fn convergence_defect(
    model: &ModelParams,
    n_max: usize,
    m_max: usize,
    count: usize,
) -> Result<f64> {
    let coarse = eigensolve_mod4(&confined_hamiltonian(model, n_max, m_max)?, count)?;
    let fine = eigensolve_mod4(&confined_hamiltonian(model, 2 * n_max, 2 * m_max)?, count)?;
    Ok(coarse
        .values
        .iter()
        .zip(&fine.values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::squeeze_delta;

    fn flux(p: u32, q: u32) -> FluxRatio {
        FluxRatio::new(p, q).unwrap()
    }

    #[test]
    fn eigensolve_identity_and_diag() {
        let h = HermitianMatrix::new(eye(4), BasisTag::BlochLll { p: 4 }, 0.0).unwrap();
        let sol = eigensolve(&h, 4).unwrap();
        assert!(sol.values.iter().all(|&v| (v - 1.0).abs() < 1e-14));

        let mut d = Array2::zeros((3, 3));
        d[[0, 0]] = C64::new(3.0, 0.0);
        d[[1, 1]] = C64::new(1.0, 0.0);
        d[[2, 2]] = C64::new(2.0, 0.0);
        let h = HermitianMatrix::new(d, BasisTag::BlochLll { p: 3 }, 0.0).unwrap();
        let sol = eigensolve(&h, 3).unwrap();
        assert_eq!(sol.values.len(), 3);
        assert!((sol.values[0] - 1.0).abs() < 1e-14);
        assert!((sol.values[1] - 2.0).abs() < 1e-14);
        assert!((sol.values[2] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn eigensolve_random_hermitian_residuals() {
        let n = 50;
        let mut h = Array2::zeros((n, n));
        let mut seed = 42u64;
        let mut rand = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for i in 0..n {
            for j in 0..=i {
                let v = if i == j {
                    C64::new(rand(), 0.0)
                } else {
                    C64::new(rand(), rand())
                };
                h[[i, j]] = v;
                h[[j, i]] = v.conj();
            }
        }
        let norm = h.iter().map(|z| z.norm()).fold(0.0, f64::max) * n as f64;
        let hm = HermitianMatrix::new(h, BasisTag::BlochLll { p: n as u32 }, 0.0).unwrap();
        let sol = eigensolve(&hm, n).unwrap();
        assert!(sol.max_residual(&hm) < 1e-9 * norm);
        assert!(sol.max_overlap_defect() < 1e-10);
        for w in sol.values.windows(2) {
            assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn eigensolve_rejects_non_hermitian() {
        let mut m = eye(2);
        m[[0, 1]] = C64::new(0.5, 0.0);
        assert!(matches!(
            HermitianMatrix::new(m, BasisTag::BlochLll { p: 2 }, 0.0),
            Err(Error::NonHermitianInput { .. })
        ));
    }

    #[test]
    fn harper_trivial_flux_is_minus_two() {
        let h = harper_hamiltonian(flux(1, 1), 0.0, 0.0, 1.0);
        assert_eq!(h.dim(), 1);
        assert!((h.entries[[0, 0]].re + 2.0).abs() < 1e-14);
    }

    #[test]
    fn harper_p2_eigenvalues_are_pm_sqrt2() {
        let h = harper_hamiltonian(flux(2, 1), 0.0, 0.0, 1.0);
        let sol = eigensolve(&h, 2).unwrap();
        assert!((sol.values[0] + 2.0f64.sqrt()).abs() < 1e-10);
        assert!((sol.values[1] - 2.0f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn harper_code_space_energy_at_half_flux() {
        let h = harper_hamiltonian(flux(1, 2), 0.0, 0.0, 1.0);
        assert!((h.entries[[0, 0]].re + 2.0).abs() < 1e-12);
        // Second minimal-energy Bloch state at k₂ = π/L₀.
        let k2 = std::f64::consts::PI / flux(1, 2).lattice_constant();
        let h2 = harper_hamiltonian(flux(1, 2), 0.0, k2, 1.0);
        assert!((h2.entries[[0, 0]].re - h.entries[[0, 0]].re).abs() < 1e-10);
    }

    #[test]
    fn harper_closed_form_at_p1() {
        // p = 1: E(k) = −v₀[cos(qk₁L₀) + cos(qk₂L₀)].
        let f = flux(1, 1);
        let l0 = f.lattice_constant();
        for (k1, k2) in k_grid(f, 5, 5) {
            let h = harper_hamiltonian(f, k1, k2, 1.0);
            let want = -((k1 * l0).cos() + (k2 * l0).cos());
            assert!((h.entries[[0, 0]].re - want).abs() < 1e-12);
        }
    }

    #[test]
    fn harper_spectrum_periodic_in_k2_shift() {
        // Appendix-A degeneracy: spectrum invariant under k₂ → k₂ + 2π/qL₀.
        let f = flux(5, 3);
        let l0 = f.lattice_constant();
        let shift = 2.0 * std::f64::consts::PI / (3.0 * l0);
        for (k1, k2) in [(0.05, 0.11), (0.2, 0.3)] {
            let a = eigensolve(&harper_hamiltonian(f, k1, k2, 1.0), 5).unwrap();
            let b = eigensolve(&harper_hamiltonian(f, k1, k2 + shift, 1.0), 5).unwrap();
            for (x, y) in a.values.iter().zip(&b.values) {
                assert!((x - y).abs() < 1e-12, "spectrum moved under k₂ shift");
            }
        }
    }

    #[test]
    fn butterfly_half_flux_bounded_and_ground() {
        let res = butterfly(&[flux(1, 2)], (16, 16), ButterflyUnits::V0).unwrap();
        let row = &res.energies[0];
        assert!(row.iter().all(|&e| (-2.0 - 1e-12..=2.0 + 1e-12).contains(&e)));
        assert!((row[0] + 2.0).abs() < 1e-9);
    }

    #[test]
    fn butterfly_empty_grid_rejected() {
        assert!(matches!(butterfly(&[], (4, 4), ButterflyUnits::V0), Err(Error::EmptyGrid)));
    }

    #[test]
    fn butterfly_spectrum_negation_symmetry() {
        // Half-integer k offsets flip the spectrum sign; on a full even grid
        // the union is symmetric under E → −E.
        for f in [flux(1, 2), flux(3, 2), flux(5, 2)] {
            let res = butterfly(&[f], (8, 8), ButterflyUnits::V0).unwrap();
            let row = &res.energies[0];
            let mut neg: Vec<f64> = row.iter().map(|e| -e).collect();
            neg.sort_by(f64::total_cmp);
            for (a, b) in row.iter().zip(&neg) {
                assert!((a - b).abs() < 1e-9, "asymmetry at flux {}/{}", f.p(), f.q());
            }
        }
    }

    #[test]
    fn farey_enumeration_matches_figure_axis() {
        let fluxes = farey_fluxes(12, 4.0);
        assert!(fluxes.iter().all(|f| f.p() <= 12 && f.q() <= 12));
        assert!(fluxes.iter().all(|f| f.inverse_ratio() <= 4.0 + 1e-12));
        assert!(fluxes.contains(&flux(1, 2)));
        assert!(fluxes.contains(&flux(12, 11)));
        // Sorted by q/p and unique.
        for w in fluxes.windows(2) {
            assert!(w[0].inverse_ratio() < w[1].inverse_ratio() + 1e-15);
        }
    }

    #[test]
    fn crystal_v_to_zero_recovers_landau_levels() {
        let model = ModelParams::new(flux(2, 1), 1e-9, 0.0).unwrap();
        let h = crystal_hamiltonian(&model, 0.3, 0.4, 5).unwrap();
        let sol = eigensolve(&h, h.dim()).unwrap();
        for (i, &v) in sol.values.iter().enumerate() {
            let n = i / 2; // p = 2 degeneracy per level
            assert!((v - (n as f64 + 0.5)).abs() < 1e-6, "level {i} = {v}");
        }
    }

    #[test]
    fn crystal_lowest_band_matches_harper_perturbatively() {
        // At weak coupling the lowest crystal eigenvalue sits at
        // 1/2 − 2V₀ + O((V/ħω_c)²).
        let rv = 0.04;
        let model = ModelParams::new(flux(1, 2), rv, 0.0).unwrap();
        let h = crystal_hamiltonian(&model, 0.0, 0.0, 14).unwrap();
        let sol = eigensolve(&h, 1).unwrap();
        let v0_hwc = v0(&model);
        let predicted = 0.5 - 2.0 * v0_hwc;
        assert!(
            (sol.values[0] - predicted).abs() < 2.0 * rv * rv,
            "got {}, harper {}",
            sol.values[0],
            predicted
        );
    }

    #[test]
    fn crystal_lowest_level_follows_harper_subbands() {
        // Weak coupling, flux 2/1: the two lowest crystal eigenvalues per k
        // reproduce 1/2 + v₀·(p = 2 Harper spectrum) up to O((V/ħω_c)²),
        // i.e. the Landau level is split into p subbands.
        let rv = 0.05;
        let f = flux(2, 1);
        let model = ModelParams::new(f, rv, 0.0).unwrap();
        let v0_hwc = v0(&model);
        let mut max_width = 0.0f64;
        for (k1, k2) in k_grid(f, 4, 4) {
            let crystal = eigensolve(&crystal_hamiltonian(&model, k1, k2, 12).unwrap(), 2).unwrap();
            let harper = eigensolve(&harper_hamiltonian(f, k1, k2, v0_hwc), 2).unwrap();
            for i in 0..2 {
                let want = 0.5 + harper.values[i];
                assert!(
                    (crystal.values[i] - want).abs() < 5.0 * rv * rv,
                    "k=({k1},{k2}) level {i}: {} vs {}",
                    crystal.values[i],
                    want
                );
            }
            max_width = max_width.max(crystal.values[1] - crystal.values[0]);
        }
        // The split is resolved: subband separation on the scale of v₀.
        assert!(max_width > v0_hwc);
    }

    #[test]
    fn confined_quadratic_part_matches_normal_modes() {
        // V → 0: lowest excitations approach the Bogoliubov frequencies
        // Ω± = (√(1+4u) ± 1)/2 of the quadratic two-mode form.
        let model = ModelParams::new(flux(1, 2), 1e-8, 2.0e7).unwrap();
        let u = model.omega0_sq_over_wc_sq();
        assert!((u - 0.04).abs() < 1e-9);
        let h = confined_hamiltonian(&model, 10, 10).unwrap();
        let sol = eigensolve_mod4(&h, 4).unwrap();
        let root = (1.0f64 + 4.0 * u).sqrt();
        let omega_minus = (root - 1.0) / 2.0;
        let e0 = (root - 1.0 - 2.0 * u) / 2.0;
        assert!((sol.values[0] - e0).abs() < 1e-6, "ground {} vs {}", sol.values[0], e0);
        assert!(
            (sol.values[1] - sol.values[0] - omega_minus).abs() < 1e-6,
            "slow-mode gap {} vs {}",
            sol.values[1] - sol.values[0],
            omega_minus
        );
    }

    #[test]
    fn confined_rejects_zero_confinement() {
        let model = ModelParams::new(flux(1, 2), 0.25, 0.0).unwrap();
        assert!(matches!(confined_hamiltonian(&model, 4, 4), Err(Error::ZeroConfinement)));
    }

    #[test]
    fn lll_mod4_sparsity_exact() {
        let model = ModelParams::from_lll_confinement(flux(1, 2), 0.25, 0.05).unwrap();
        let h = lll_confined_hamiltonian(&model, 80).unwrap();
        for i in 0..=80usize {
            for j in 0..=80usize {
                if (i % 4) != (j % 4) {
                    assert_eq!(h.entries[[i, j]], C64::new(0.0, 0.0), "({i},{j})");
                }
            }
        }
    }

    #[test]
    fn lll_sector_purity_of_eigenvectors() {
        let model = ModelParams::from_lll_confinement(flux(1, 2), 0.25, 0.05).unwrap();
        let h = lll_confined_hamiltonian(&model, 120).unwrap();
        let sol = eigensolve_mod4(&h, 4).unwrap();
        let sectors = sol.sectors.as_ref().unwrap();
        // Ground pair: even (0) then the odd-Fourier partner (2).
        assert_eq!(sectors[0], 0);
        assert_eq!(sectors[1], 2);
        for (j, &s) in sectors.iter().enumerate() {
            for m in 0..=120usize {
                if (m % 4) as u8 != s {
                    assert!(
                        sol.vectors[[m, j]].norm() < 1e-12,
                        "leakage at level {j}, m = {m}"
                    );
                }
            }
        }
    }

    #[test]
    fn lll_quasi_degenerate_pair_gap_scale() {
        // w = 0.05: pair splitting tiny; distance to level 2 of order
        // the envelope quantum 4πΔ²·V₀.
        let v_over_hwc = 0.25;
        let model = ModelParams::from_lll_confinement(flux(1, 2), v_over_hwc, 0.05).unwrap();
        let v0_hwc = v0(&model);
        let h = lll_confined_hamiltonian(&model, 160).unwrap();
        let sol = eigensolve_mod4(&h, 3).unwrap();
        let pair = sol.values[1] - sol.values[0];
        let gap2 = sol.values[2] - sol.values[1];
        assert!(pair < 0.05 * v0_hwc, "pair split {pair} too large");
        assert!(gap2 > 0.2 * v0_hwc && gap2 < 2.0 * v0_hwc, "gap {} vs V₀ {}", gap2, v0_hwc);
        let delta = squeeze_delta(&model).unwrap();
        let envelope_quantum = 4.0 * std::f64::consts::PI * delta * delta * v0_hwc;
        assert!((gap2 - envelope_quantum).abs() / envelope_quantum < 0.35);
    }

    #[test]
    fn lll_ground_energy_extrapolates_to_minus_two_v0() {
        // ω₀ = 0 (free GKP Hamiltonian in the truncated basis): the ground
        // energy approaches −2V₀ like a/M with a slowly decaying correction;
        // extrapolating E(M) = E∞ + a/M + b/M^(3/2) over doubling M recovers
        // the band bottom to better than 1e−3·V₀.
        let model = ModelParams::new(flux(1, 2), 0.25, 0.0).unwrap();
        let v0_hwc = v0(&model);
        let ms = [400usize, 800, 1600];
        let mut e = Vec::new();
        for &m_max in &ms {
            let h = lll_confined_hamiltonian(&model, m_max).unwrap();
            let sol = eigensolve_mod4(&h, 1).unwrap();
            e.push(sol.values[0]);
        }
        let d1 = e[0] - e[1];
        let d2 = e[1] - e[2];
        let basis = |m: f64| (1.0 / m, m.powf(-1.5));
        let (x0, y0) = basis(ms[0] as f64);
        let (x1, y1) = basis(ms[1] as f64);
        let (x2, y2) = basis(ms[2] as f64);
        // Solve d1 = a(x0−x1) + b(y0−y1), d2 = a(x1−x2) + b(y1−y2).
        let det = (x0 - x1) * (y1 - y2) - (x1 - x2) * (y0 - y1);
        let a = (d1 * (y1 - y2) - d2 * (y0 - y1)) / det;
        let b = ((x0 - x1) * d2 - (x1 - x2) * d1) / det;
        let e_inf = e[2] - a * x2 - b * y2;
        assert!(
            (e_inf + 2.0 * v0_hwc).abs() < 1e-3 * v0_hwc,
            "extrapolated {} vs {}",
            e_inf,
            -2.0 * v0_hwc
        );
        // Monotone approach from above.
        assert!(e[0] > e[1] && e[1] > e[2] && e[2] > -2.0 * v0_hwc);
    }

    #[test]
    fn gap_law_fit_recovers_synthetic_exponential() {
        let sweep = SweepResult {
            axis_name: "hw0_over_v".to_string(),
            axis: vec![0.08, 0.1, 0.125, 0.15, 0.2],
            energies: vec![0.08, 0.1, 0.125, 0.15, 0.2]
                .into_iter()
                .map(|r: f64| {
                    let gap = 0.7 * (-2.5 / r).exp();
                    vec![0.0, gap]
                })
                .collect(),
            sectors: None,
            metadata: serde_json::Value::Null,
        };
        let fit = fit_gap_law(&sweep, (0.08, 0.2)).unwrap();
        assert!((fit.alpha - 2.5).abs() < 1e-9);
        assert!((fit.prefactor - 0.7).abs() < 1e-9);
        assert!(fit.r_squared > 1.0 - 1e-12);
    }
}
