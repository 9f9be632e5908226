//! Discrete-time Dirac fermions on a ring.
//!
//! Each site n carries modes l (label 0) and r (label 1), so the site-major
//! ordering is π(n,l) = 2n, π(n,r) = 2n+1. Spinors are written in the basis
//! (r, l), with β = offdiag(1, 1) and α₁ = diag(1, −1). One step is U = W·T:
//! the conditional shift T acts first, then the mass unitary W.
//!
//! Momenta are 𝐩 = 2πk/N for k ∈ {−(N−1)/2, …, (N−1)/2} and
//! ψ†_𝐩 = N^{−1/2} Σ_n e^{i𝐩n} ψ†_n.

use std::f64::consts::PI;

use serde::Serialize;

use crate::causality::Region;
use crate::decomposition::{fermionic_swap, swap_generator, FactorTag, LocalUnitaryFactor};
use crate::error::{domain, Error, Result};
use crate::fock::{lower_on, second_quantize, Lattice, MatrixOperator, Mode, Ordering};
use crate::linalg::{eigenphases, expm_herm, CMat, C64, ONE, ZERO};
use crate::symbolic::SymbolicOperator;

pub const LEFT: usize = 0;
pub const RIGHT: usize = 1;

pub fn beta() -> CMat {
    CMat::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
}

pub fn alpha1() -> CMat {
    CMat::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]])
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiracParams {
    pub sites: usize,
    pub ring_length: f64,
    pub spacing: f64,
    pub mass_coupling: f64,
    pub mass: f64,
    pub steps: usize,
    pub time: f64,
}

impl DiracParams {
    /// Lattice-unit parameters: spacing 1, so M = m.
    pub fn new(sites: usize, mass_coupling: f64) -> Result<Self> {
        Self::with_spacing(sites, 1.0, mass_coupling, 0)
    }

    /// Physical parameters: spacing ε, mass m, τ steps; M = mε, L = Nε, t = τε.
    pub fn with_spacing(sites: usize, spacing: f64, mass: f64, steps: usize) -> Result<Self> {
        if sites < 3 || sites % 2 == 0 {
            return domain(format!("number of sites must be odd and at least 3, got {sites}"));
        }
        if !(spacing > 0.0) || !spacing.is_finite() {
            return domain(format!("spacing must be positive, got {spacing}"));
        }
        Ok(DiracParams {
            sites,
            ring_length: sites as f64 * spacing,
            spacing,
            mass_coupling: mass * spacing,
            mass,
            steps,
            time: steps as f64 * spacing,
        })
    }

    pub fn lattice(&self) -> Lattice {
        Lattice::line(self.sites, true, 2).expect("valid ring")
    }
}

pub fn mode(n: usize, chirality: usize) -> Mode {
    Mode::physical(vec![n], chirality)
}

/// (k, 𝐩) pairs in ascending k.
pub fn momenta(n: usize) -> Vec<(i64, f64)> {
    let h = (n as i64 - 1) / 2;
    (-h..=h).map(|k| (k, 2.0 * PI * k as f64 / n as f64)).collect()
}

fn ring_modes(params: &DiracParams) -> Vec<Mode> {
    (0..params.sites).flat_map(|n| [mode(n, LEFT), mode(n, RIGHT)]).collect()
}

fn index_of(n: usize, chirality: usize) -> usize {
    2 * n + chirality
}

/// Single-particle permutation of T in the mode order l0, r0, l1, r1, …
pub fn shift_single_particle(sites: usize) -> CMat {
    let mut u = CMat::zeros(2 * sites, 2 * sites);
    for n in 0..sites {
        u[(index_of((n + 1) % sites, RIGHT), index_of(n, RIGHT))] = ONE;
        u[(index_of((n + sites - 1) % sites, LEFT), index_of(n, LEFT))] = ONE;
    }
    u
}

/// T as the second quantization of the single-particle shift.
pub fn build_t(params: &DiracParams, ordering: &Ordering) -> Result<MatrixOperator> {
    second_quantize(&shift_single_particle(params.sites), &ring_modes(params), ordering)
}

/// Σ_𝐩 𝐩 ψ†_𝐩 α₁ ψ_𝐩 written in position space.
pub fn momentum_generator(params: &DiracParams) -> SymbolicOperator {
    let n = params.sites;
    let mut h = SymbolicOperator::zero();
    for x in 0..n {
        for y in 0..n {
            // Σ_𝐩 𝐩 e^{i𝐩(x−y)}/N
            let c: C64 = momenta(n)
                .iter()
                .map(|&(_, p)| C64::from_polar(p / n as f64, p * (x as f64 - y as f64)))
                .sum();
            if c.norm() < 1e-15 {
                continue;
            }
            for (ch, sign) in [(RIGHT, 1.0), (LEFT, -1.0)] {
                let t = SymbolicOperator::create(&mode(x, ch)).mul(&SymbolicOperator::annihilate(&mode(y, ch)));
                h = h.add(&t.scale(c * sign));
            }
        }
    }
    h
}

/// T = exp(−i Σ_𝐩 𝐩 ψ†_𝐩 α₁ ψ_𝐩) by exponentiating the many-body generator.
pub fn build_t_momentum(params: &DiracParams, ordering: &Ordering) -> Result<MatrixOperator> {
    let h = lower_on(&momentum_generator(params), &ring_modes(params), ordering)?;
    Ok(h.map_matrix(|m| expm_herm(m, 1.0)))
}

/// exp(−iM ψ†_n β ψ_n) on the two modes of site n.
pub fn mass_factor(n: usize, m: f64, ordering: &Ordering) -> Result<MatrixOperator> {
    let (l, r) = (mode(n, LEFT), mode(n, RIGHT));
    let h = lower_on(&SymbolicOperator::hopping(&r, &l), &[l, r], ordering)?;
    Ok(h.map_matrix(|x| expm_herm(x, m)))
}

/// W = ∏_n exp(−iM ψ†_n β ψ_n).
pub fn build_w(params: &DiracParams, ordering: &Ordering) -> Result<MatrixOperator> {
    let factors: Vec<MatrixOperator> =
        (0..params.sites).map(|n| mass_factor(n, params.mass_coupling, ordering)).collect::<Result<_>>()?;
    let mut w = MatrixOperator::product(&factors, ordering)?;
    if w.modes().is_empty() {
        w = MatrixOperator::identity(ring_modes(params));
    }
    Ok(w)
}

/// W = exp(−iM Σ_𝐩 ψ†_𝐩 β ψ_𝐩) from the total generator.
pub fn build_w_momentum(params: &DiracParams, ordering: &Ordering) -> Result<MatrixOperator> {
    let mut h = SymbolicOperator::zero();
    for n in 0..params.sites {
        h = h.add(&SymbolicOperator::hopping(&mode(n, RIGHT), &mode(n, LEFT)));
    }
    let h = lower_on(&h, &ring_modes(params), ordering)?;
    Ok(h.map_matrix(|m| expm_herm(m, params.mass_coupling)))
}

/// One step U = W·T.
pub fn build_step(params: &DiracParams, ordering: &Ordering) -> Result<MatrixOperator> {
    build_w(params, ordering)?.mul(&build_t(params, ordering)?, ordering)
}

/// The two swap layers of T: ψ_{n,l} ↔ ψ_{n−1,r} for every n (applied first),
/// then ψ_{n,r} ↔ ψ_{n,l}. Factors are in application order.
pub fn swap_decompose_t(params: &DiracParams, ordering: &Ordering) -> Result<Vec<LocalUnitaryFactor>> {
    let n = params.sites;
    let mut out = Vec::with_capacity(2 * n);
    for x in 0..n {
        let prev = (x + n - 1) % n;
        let (a, b) = (mode(x, LEFT), mode(prev, RIGHT));
        out.push(LocalUnitaryFactor {
            matrix: fermionic_swap(&a, &b, ordering)?,
            region: Region::new([vec![x], vec![prev]]),
            tag: FactorTag::Swap,
            host: vec![x],
            generator: Some(swap_generator(&a, &b)),
            group: 0,
        });
    }
    for x in 0..n {
        let (a, b) = (mode(x, RIGHT), mode(x, LEFT));
        out.push(LocalUnitaryFactor {
            matrix: fermionic_swap(&a, &b, ordering)?,
            region: Region::new([vec![x]]),
            tag: FactorTag::Swap,
            host: vec![x],
            generator: Some(swap_generator(&a, &b)),
            group: 1,
        });
    }
    Ok(out)
}

/// The on-site mass factors of W as a commuting layer.
pub fn mass_layer(params: &DiracParams, ordering: &Ordering) -> Result<Vec<LocalUnitaryFactor>> {
    (0..params.sites)
        .map(|n| {
            let (l, r) = (mode(n, LEFT), mode(n, RIGHT));
            Ok(LocalUnitaryFactor {
                matrix: mass_factor(n, params.mass_coupling, ordering)?,
                region: Region::new([vec![n]]),
                tag: FactorTag::OnSite,
                host: vec![n],
                generator: Some(SymbolicOperator::hopping(&r, &l).scale(C64::new(params.mass_coupling, 0.0))),
                group: 2,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SingleParticleBlock {
    pub momentum: f64,
    pub matrix: CMat,
}

/// exp(−iMβ)·exp(−i𝐩α₁) in the (r, l) basis.
pub fn block_step(p: f64, m: f64) -> SingleParticleBlock {
    let shift = CMat::diag(&[C64::from_polar(1.0, -p), C64::from_polar(1.0, p)]);
    let (c, s) = (m.cos(), m.sin());
    let mass = CMat::from_rows(&[vec![C64::new(c, 0.0), C64::new(0.0, -s)], vec![C64::new(0.0, -s), C64::new(c, 0.0)]]);
    SingleParticleBlock { momentum: p, matrix: mass.matmul(&shift) }
}

/// Non-negative eigenphase ω of the block (eigenphases are ±ω).
pub fn block_omega(p: f64, m: f64) -> f64 {
    let ph = eigenphases(&block_step(p, m).matrix);
    ph[1].abs().max(ph[0].abs()).min(PI)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DispersionRow {
    pub k: i64,
    pub p: f64,
    pub mass_coupling: f64,
    pub omega: f64,
}

pub fn dispersion(params: &DiracParams) -> Vec<DispersionRow> {
    momenta(params.sites)
        .into_iter()
        .map(|(k, p)| DispersionRow { k, p, mass_coupling: params.mass_coupling, omega: block_omega(p, params.mass_coupling) })
        .collect()
}

/// Number of steps t/ε, which must be a non-negative integer.
pub fn steps_for(t: f64, eps: f64) -> Result<u64> {
    if !(eps > 0.0) || !eps.is_finite() {
        return domain(format!("spacing must be positive, got {eps}"));
    }
    let r = t / eps;
    let k = r.round();
    if (r - k).abs() > 1e-9 * r.abs().max(1.0) || k < 0.0 {
        return domain(format!("t/ε = {r} is not a non-negative integer"));
    }
    Ok(k as u64)
}

/// ‖block_step(pε, mε)^{t/ε} − exp(−i(pα₁ + mβ)t)‖.
pub fn continuum_error(m: f64, p: f64, t: f64, eps: f64) -> Result<f64> {
    let steps = steps_for(t, eps)?;
    if (p * eps).abs() >= PI {
        return domain(format!("|pε| = {} is not below π", (p * eps).abs()));
    }
    let u = block_step(p * eps, m * eps).matrix.powi(steps);
    let h = &alpha1().scale_real(p) + &beta().scale_real(m);
    Ok((&u - &expm_herm(&h, t)).spectral_norm())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub epsilon: f64,
    pub steps: u64,
    pub error: f64,
}

pub fn convergence(m: f64, p: f64, t: f64, eps: &[f64]) -> Result<Vec<ConvergenceRow>> {
    eps.iter()
        .map(|&e| Ok(ConvergenceRow { epsilon: e, steps: steps_for(t, e)?, error: continuum_error(m, p, t, e)? }))
        .collect()
}

/// Matrix of an operator on the one-particle sector, in the order of `modes`.
pub fn one_particle_matrix(op: &MatrixOperator, modes: &[Mode], ordering: &Ordering) -> Result<CMat> {
    let full = op.embed(modes, ordering)?;
    let sorted = full.modes().to_vec();
    let idx: Vec<usize> = modes
        .iter()
        .map(|m| sorted.iter().position(|s| s == m).ok_or_else(|| Error::Domain(format!("mode {m} not in support"))))
        .collect::<Result<_>>()?;
    let mat = full.matrix();
    Ok(CMat::from_fn(modes.len(), modes.len(), |i, j| mat[(1 << idx[i], 1 << idx[j])]))
}

/// Momentum-basis blocks of a one-particle matrix given in the order
/// l0, r0, l1, r1, …; each block is in the (r, l) basis.
pub fn momentum_blocks(u: &CMat, sites: usize) -> Vec<(f64, CMat)> {
    let norm = 1.0 / (sites as f64).sqrt();
    momenta(sites)
        .into_iter()
        .map(|(_, p)| {
            let vec_for = |ch: usize| -> Vec<C64> {
                let mut v = vec![ZERO; 2 * sites];
                for n in 0..sites {
                    v[index_of(n, ch)] = C64::from_polar(norm, p * n as f64);
                }
                v
            };
            let basis = [vec_for(RIGHT), vec_for(LEFT)];
            let block = CMat::from_fn(2, 2, |i, j| {
                let uj = u.matvec(&basis[j]);
                crate::linalg::inner(&basis[i], &uj)
            });
            (p, block)
        })
        .collect()
}

pub fn ring_ordering(params: &DiracParams) -> Ordering {
    Ordering::site_major(&params.lattice())
}

pub fn ring_mode_list(params: &DiracParams) -> Vec<Mode> {
    ring_modes(params)
}
