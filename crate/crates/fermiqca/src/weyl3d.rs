//! Discrete Weyl and Dirac fermions in three dimensions.
//!
//! Weyl sites carry two modes, label 0 = ↑z and label 1 = ↓z. The step is
//! U = T₁T₂T₃ with T₁ applied first, so the single-particle block is
//! exp(−i𝐩₃σ₃)·exp(−i𝐩₂σ₂)·exp(−i𝐩₁σ₁). The Dirac variant uses spinors
//! (r₁, r₂, l₁, l₂), αᵢ = diag(σᵢ, −σᵢ) and β = offdiag(I, I), and applies the
//! mass factor last.

use serde::Serialize;

use crate::causality::Region;
use crate::decomposition::{FactorTag, LocalUnitaryFactor};
use crate::dirac1d::{momenta, steps_for};
use crate::error::{domain, Result};
use crate::fock::{lower_on, second_quantize, Lattice, MatrixOperator, Mode, Ordering};
use crate::linalg::{eigenphases, expm_herm, pauli_x, pauli_y, pauli_z, CMat, C64, ONE, ZERO};
use crate::symbolic::SymbolicOperator;

pub const UP: usize = 0;
pub const DOWN: usize = 1;

#[derive(Clone, Debug)]
pub struct SpinorAlgebra {
    pub sigma: [CMat; 3],
    pub alpha: [CMat; 3],
    pub beta: CMat,
}

impl SpinorAlgebra {
    pub fn new() -> Self {
        let sigma = [pauli_x(), pauli_y(), pauli_z()];
        let alpha = sigma.clone().map(|s| block_diag(&s, &s.scale_real(-1.0)));
        let id = CMat::identity(2);
        let z = CMat::zeros(2, 2);
        let beta = CMat::from_fn(4, 4, |r, c| {
            let (br, bc) = (r / 2, c / 2);
            if br != bc {
                id[(r % 2, c % 2)]
            } else {
                z[(r % 2, c % 2)]
            }
        });
        SpinorAlgebra { sigma, alpha, beta }
    }
}

impl Default for SpinorAlgebra {
    fn default() -> Self {
        Self::new()
    }
}

fn block_diag(a: &CMat, b: &CMat) -> CMat {
    let (n, m) = (a.rows(), b.rows());
    CMat::from_fn(n + m, n + m, |r, c| match (r < n, c < n) {
        (true, true) => a[(r, c)],
        (false, false) => b[(r - n, c - n)],
        _ => ZERO,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Weyl3DParams {
    pub sites_per_axis: usize,
    pub spacing: f64,
    pub mass: f64,
}

impl Weyl3DParams {
    pub fn new(sites_per_axis: usize, spacing: f64, mass: f64) -> Result<Self> {
        if sites_per_axis < 3 || sites_per_axis % 2 == 0 {
            return domain(format!("sites per axis must be odd and at least 3, got {sites_per_axis}"));
        }
        if !(spacing > 0.0) || !spacing.is_finite() {
            return domain(format!("spacing must be positive, got {spacing}"));
        }
        Ok(Weyl3DParams { sites_per_axis, spacing, mass })
    }
}

/// exp(−i𝐩₃σ₃)·exp(−i𝐩₂σ₂)·exp(−i𝐩₁σ₁).
pub fn weyl_block_step(p: [f64; 3]) -> CMat {
    let alg = SpinorAlgebra::new();
    let mut u = CMat::identity(2);
    for i in 0..3 {
        u = expm_herm(&alg.sigma[i], p[i]).matmul(&u);
    }
    u
}

/// exp(−iMβ)·exp(−i𝐩₃α₃)·exp(−i𝐩₂α₂)·exp(−i𝐩₁α₁).
pub fn dirac3d_block_step(p: [f64; 3], m: f64) -> CMat {
    let alg = SpinorAlgebra::new();
    let mut u = CMat::identity(4);
    for i in 0..3 {
        u = expm_herm(&alg.alpha[i], p[i]).matmul(&u);
    }
    expm_herm(&alg.beta, m).matmul(&u)
}

/// ‖weyl_block_step(εp̄)^{t/ε} − exp(−i p̄·σ̄ t)‖.
pub fn weyl_continuum_error(p: [f64; 3], t: f64, eps: f64) -> Result<f64> {
    let steps = steps_for(t, eps)?;
    let alg = SpinorAlgebra::new();
    let u = weyl_block_step(p.map(|x| x * eps)).powi(steps);
    let mut h = CMat::zeros(2, 2);
    for i in 0..3 {
        h = &h + &alg.sigma[i].scale_real(p[i]);
    }
    Ok((&u - &expm_herm(&h, t)).spectral_norm())
}

/// ‖dirac3d_block_step(εp̄, mε)^{t/ε} − exp(−i(p̄·ᾱ + mβ)t)‖.
pub fn dirac3d_continuum_error(m: f64, p: [f64; 3], t: f64, eps: f64) -> Result<f64> {
    let steps = steps_for(t, eps)?;
    let alg = SpinorAlgebra::new();
    let u = dirac3d_block_step(p.map(|x| x * eps), m * eps).powi(steps);
    let mut h = alg.beta.scale_real(m);
    for i in 0..3 {
        h = &h + &alg.alpha[i].scale_real(p[i]);
    }
    Ok((&u - &expm_herm(&h, t)).spectral_norm())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Dispersion3DRow {
    pub k: [i64; 3],
    pub omega_plus: f64,
    pub omega_minus: f64,
}

/// Eigenphases of the Weyl block on the full momentum grid.
pub fn weyl_dispersion(n: usize) -> Vec<Dispersion3DRow> {
    let ms = momenta(n);
    let mut rows = Vec::with_capacity(n * n * n);
    for &(k1, p1) in &ms {
        for &(k2, p2) in &ms {
            for &(k3, p3) in &ms {
                let ph = eigenphases(&weyl_block_step([p1, p2, p3]));
                rows.push(Dispersion3DRow { k: [k1, k2, k3], omega_plus: ph[1], omega_minus: ph[0] });
            }
        }
    }
    rows
}

/// Creation-operator coefficients (on ↑z, ↓z) of the ↑ and ↓ modes along
/// `axis` (0 = x, 1 = y, 2 = z).
pub fn spin_basis(axis: usize) -> [[C64; 2]; 2] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    match axis {
        0 => [[C64::new(h, 0.0), C64::new(h, 0.0)], [C64::new(h, 0.0), C64::new(-h, 0.0)]],
        1 => [[C64::new(h, 0.0), C64::new(0.0, h)], [C64::new(h, 0.0), C64::new(0.0, -h)]],
        _ => [[ONE, ZERO], [ZERO, ONE]],
    }
}

pub fn mode(site: &[usize], spin: usize) -> Mode {
    Mode::physical(site.to_vec(), spin)
}

fn shifted(lattice: &Lattice, site: &[usize], axis: usize, forward: bool) -> Option<Vec<usize>> {
    let n = lattice.extents()[axis];
    let mut s = site.to_vec();
    if forward {
        if s[axis] + 1 < n {
            s[axis] += 1;
        } else if lattice.periodic()[axis] {
            s[axis] = 0;
        } else {
            return None;
        }
    } else if s[axis] > 0 {
        s[axis] -= 1;
    } else if lattice.periodic()[axis] {
        s[axis] = n - 1;
    } else {
        return None;
    }
    Some(s)
}

/// Single-particle matrix of Tᵢ over the modes of `lattice` in lattice
/// order: ↑ moves by +eᵢ and ↓ by −eᵢ, in the spin basis of the axis.
pub fn shift_single_particle(axis: usize, lattice: &Lattice) -> Result<CMat> {
    if axis >= lattice.dims() || lattice.dims() != 3 {
        return domain("conditional shifts need a three-dimensional lattice and axis in 0..3");
    }
    if !lattice.periodic()[axis] {
        return domain("the shifted axis must be periodic");
    }
    let modes = lattice.modes().to_vec();
    let index = |s: &[usize], spin: usize| modes.iter().position(|m| m.site == s && m.label == spin).unwrap();
    let basis = spin_basis(axis);
    let dim = modes.len();
    let mut u = CMat::zeros(dim, dim);
    for site in lattice.sites() {
        for (dir, fwd) in [(0usize, true), (1usize, false)] {
            let to = shifted(lattice, &site, axis, fwd).expect("periodic axis");
            // |to, e_dir⟩⟨site, e_dir| with e_dir the rotated spin vector.
            for a in 0..2 {
                for b in 0..2 {
                    u[(index(&to, a), index(&site, b))] += basis[dir][a] * basis[dir][b].conj();
                }
            }
        }
    }
    Ok(u)
}

/// Tᵢ as the second quantization of the single-particle shift.
pub fn build_ti(axis: usize, lattice: &Lattice, ordering: &Ordering) -> Result<MatrixOperator> {
    second_quantize(&shift_single_particle(axis, lattice)?, lattice.modes(), ordering)
}

/// Tᵢ = exp(−i Σ_𝐩 𝐩ᵢ ψ†_𝐩 σᵢ ψ_𝐩) by exponentiating the single-particle
/// generator, built from momenta along the axis.
pub fn build_ti_momentum(axis: usize, lattice: &Lattice, ordering: &Ordering) -> Result<MatrixOperator> {
    let n = lattice.extents()[axis];
    if n % 2 == 0 {
        return domain("momentum form needs an odd extent along the axis");
    }
    let modes = lattice.modes().to_vec();
    let sigma = SpinorAlgebra::new().sigma[axis].clone();
    let mut h = SymbolicOperator::zero();
    for mi in &modes {
        for mj in &modes {
            let same_rest = (0..3).all(|d| d == axis || mi.site[d] == mj.site[d]);
            if !same_rest {
                continue;
            }
            let dx = mi.site[axis] as f64 - mj.site[axis] as f64;
            let c: C64 = momenta(n).iter().map(|&(_, p)| C64::from_polar(p / n as f64, p * dx)).sum::<C64>()
                * sigma[(mi.label, mj.label)];
            if c.norm() < 1e-15 {
                continue;
            }
            h = h.add(&SymbolicOperator::create(mi).mul(&SymbolicOperator::annihilate(mj)).scale(c));
        }
    }
    let h = lower_on(&h, &modes, ordering)?;
    Ok(h.map_matrix(|m| expm_herm(m, 1.0)))
}

fn combo_create(site: &[usize], coeffs: [C64; 2]) -> SymbolicOperator {
    let mut s = SymbolicOperator::zero();
    for (spin, c) in coeffs.iter().enumerate() {
        s = s.add(&SymbolicOperator::create(&mode(site, spin)).scale(*c));
    }
    s
}

/// Swap of two orthonormal mode combinations: I − (b†−a†)(b−a).
fn combo_swap(a: &SymbolicOperator, b: &SymbolicOperator, support: &[Mode], ordering: &Ordering) -> Result<(MatrixOperator, SymbolicOperator)> {
    let left = b.sub(a);
    let kernel = left.mul(&left.adjoint());
    let k = lower_on(&kernel, support, ordering)?;
    let gen = kernel.scale(C64::new(-std::f64::consts::FRAC_PI_2, 0.0));
    Ok((k.map_matrix(|m| &CMat::identity(m.rows()) - m), gen))
}

/// Tᵢ as two layers of swaps in the spin basis of the axis:
/// ψ_{(n,↓)} ↔ ψ_{(n−eᵢ,↑)} for every n, then ψ_{(n,↑)} ↔ ψ_{(n,↓)}.
/// Factors are in application order.
pub fn swap_decompose_ti(axis: usize, lattice: &Lattice, ordering: &Ordering) -> Result<Vec<LocalUnitaryFactor>> {
    if axis >= 3 || lattice.dims() != 3 || !lattice.periodic()[axis] {
        return domain("swap decomposition needs a periodic axis of a three-dimensional lattice");
    }
    let [up, down] = spin_basis(axis);
    let mut out = Vec::new();
    for site in lattice.sites() {
        let prev = shifted(lattice, &site, axis, false).expect("periodic axis");
        let a = combo_create(&site, down);
        let b = combo_create(&prev, up);
        let support = [mode(&site, UP), mode(&site, DOWN), mode(&prev, UP), mode(&prev, DOWN)];
        let (m, g) = combo_swap(&a, &b, &support, ordering)?;
        out.push(LocalUnitaryFactor {
            matrix: m,
            region: Region::new([site.clone(), prev]),
            tag: FactorTag::Swap,
            host: site.clone(),
            generator: Some(g),
            group: 0,
        });
    }
    for site in lattice.sites() {
        let a = combo_create(&site, up);
        let b = combo_create(&site, down);
        let support = [mode(&site, UP), mode(&site, DOWN)];
        let (m, g) = combo_swap(&a, &b, &support, ordering)?;
        out.push(LocalUnitaryFactor {
            matrix: m,
            region: Region::new([site.clone()]),
            tag: FactorTag::Swap,
            host: site,
            generator: Some(g),
            group: 1,
        });
    }
    Ok(out)
}

/// Lattice of `n` sites along `axis` (periodic) and extent 1 elsewhere, with
/// two spin modes per site.
pub fn axis_line(axis: usize, n: usize) -> Result<Lattice> {
    let mut ext = vec![1, 1, 1];
    let mut per = vec![false, false, false];
    ext[axis] = n;
    per[axis] = true;
    Lattice::new(ext, per, 2)
}
