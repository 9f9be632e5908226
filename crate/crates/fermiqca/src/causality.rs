//! Localization and causality of fermionic operators.
//!
//! An operator is localized on a region R when it lies in the algebra generated
//! by the modes of R. The test projects onto that algebra with the
//! trace-preserving conditional expectation: in the basis ordered with the
//! R-modes first (a sign twist of the occupation basis) the algebra is
//! `O ⊗ I`, and the projection is a normalized partial trace. The result
//! coincides with the Hilbert-Schmidt projection onto the span of all
//! monomials over the R-modes, without enumerating the 4^|R| monomials.
//!
//! Operators are handled on their own support, so the cost depends on the
//! support size and not on 𝒩 or on |R|.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{Lattice, LocalKernel, Mode, MatrixOperator, Ordering};
use crate::linalg::{CMat, ZERO};
use crate::symbolic::SymbolicOperator;

pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Region {
    pub sites: BTreeSet<Vec<usize>>,
}

impl Region {
    pub fn new<I: IntoIterator<Item = Vec<usize>>>(sites: I) -> Self {
        Region { sites: sites.into_iter().collect() }
    }

    pub fn neighborhood(lattice: &Lattice, site: &[usize]) -> Self {
        Region::new(lattice.neighborhood(site))
    }

    pub fn around(lattice: &Lattice, site: &[usize], radius: usize) -> Self {
        Region::new(lattice.neighborhood_radius(site, radius))
    }

    pub fn contains_site(&self, site: &[usize]) -> bool {
        self.sites.contains(site)
    }

    pub fn contains(&self, mode: &Mode) -> bool {
        self.sites.contains(&mode.site)
    }

    pub fn union(&self, other: &Region) -> Region {
        Region { sites: self.sites.union(&other.sites).cloned().collect() }
    }

    /// Modes of `ordering` living on the region, in π order.
    pub fn modes(&self, ordering: &Ordering) -> Vec<Mode> {
        ordering.modes().iter().filter(|m| self.contains(m)).cloned().collect()
    }
}

/// Projection of `op` onto the algebra of the region's modes, together with
/// the spectral-norm residual ‖op − projection‖.
#[derive(Clone, Debug)]
pub struct Localization {
    pub projected: MatrixOperator,
    pub residual: f64,
}

pub fn localize_on(op: &MatrixOperator, region: &Region, ordering: &Ordering, tol: f64) -> Result<Localization> {
    let op = op.in_order(ordering)?;
    let support = op.modes().to_vec();
    let inside: Vec<usize> = (0..support.len()).filter(|&i| region.contains(&support[i])).collect();
    if inside.len() == support.len() {
        return Ok(Localization { projected: op, residual: 0.0 });
    }
    let n = support.len();
    let k = inside.len();
    let rest = n - k;
    let kernel = LocalKernel::new(&inside);
    let ldim = 1usize << k;
    let a = op.matrix();
    let mut proj = CMat::zeros(ldim, ldim);
    let sign = |x: usize| if x.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
    for r in 0..1usize << n {
        if r & kernel.qmask != 0 {
            continue;
        }
        let cm = kernel.cmask(r);
        for sc in 0..ldim {
            let col = r | kernel.scatter[sc];
            let cs = sign(sc & cm);
            for sr in 0..ldim {
                let v = a[(r | kernel.scatter[sr], col)];
                if v != ZERO {
                    proj[(sr, sc)] += v * (cs * sign(sr & cm));
                }
            }
        }
    }
    let proj = proj.scale_real(1.0 / (1u64 << rest) as f64);
    let projected = MatrixOperator::new(inside.iter().map(|&i| support[i].clone()).collect(), proj)?;
    let back = projected.embed(&support, ordering)?;
    let residual = (a - back.matrix()).residual_norm(tol);
    Ok(Localization { projected, residual })
}

pub fn localization_residual(op: &MatrixOperator, region: &Region, ordering: &Ordering, tol: f64) -> Result<f64> {
    Ok(localize_on(op, region, ordering, tol)?.residual)
}

pub fn is_localized(op: &MatrixOperator, region: &Region, ordering: &Ordering, tol: f64) -> Result<bool> {
    Ok(localization_residual(op, region, ordering, tol)? <= tol)
}

/// Heisenberg image U† a_mode U.
pub fn heisenberg_image(u: &MatrixOperator, mode: &Mode, ordering: &Ordering) -> Result<MatrixOperator> {
    let a = crate::fock::lower_on(&SymbolicOperator::annihilate(mode), &[mode.clone()], ordering)?;
    u.adjoint().mul(&a.mul(u, ordering)?, ordering)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModeLocalization {
    pub mode: String,
    pub region: Vec<Vec<usize>>,
    pub residual_norm: f64,
    pub pass: bool,
}

fn check_unitary(u: &MatrixOperator, tol: f64) -> Result<()> {
    let d = u.matrix().unitarity_defect();
    if d > tol {
        return Err(Error::Contract(format!("operator is not unitary (defect {d:.3e})")));
    }
    Ok(())
}

/// Localization of U† a U on the neighborhood of each mode's site.
pub fn causality_report(
    u: &MatrixOperator,
    lattice: &Lattice,
    ordering: &Ordering,
    tol: f64,
) -> Result<Vec<ModeLocalization>> {
    check_unitary(u, tol)?;
    let mut out = Vec::with_capacity(ordering.len());
    for mode in ordering.modes() {
        let img = heisenberg_image(u, mode, ordering)?;
        let region = Region::neighborhood(lattice, &mode.site);
        let residual = localization_residual(&img, &region, ordering, tol)?;
        out.push(ModeLocalization {
            mode: mode.to_string(),
            region: region.sites.iter().cloned().collect(),
            residual_norm: residual,
            pass: residual <= tol,
        });
    }
    Ok(out)
}

pub fn is_causal(u: &MatrixOperator, lattice: &Lattice, ordering: &Ordering, tol: f64) -> Result<bool> {
    Ok(causality_report(u, lattice, ordering, tol)?.iter().all(|r| r.pass))
}

/// (odd, even) parts with respect to the global parity. Conjugation by the
/// global parity restricts to conjugation by the parity of the support.
pub fn parity_split(op: &MatrixOperator) -> (MatrixOperator, MatrixOperator) {
    let m = op.matrix();
    let dim = m.rows();
    let odd = CMat::from_fn(dim, dim, |i, j| if (i ^ j).count_ones() % 2 == 1 { m[(i, j)] } else { ZERO });
    let even = CMat::from_fn(dim, dim, |i, j| if (i ^ j).count_ones() % 2 == 0 { m[(i, j)] } else { ZERO });
    (
        MatrixOperator::new(op.modes().to_vec(), odd).expect("same shape"),
        MatrixOperator::new(op.modes().to_vec(), even).expect("same shape"),
    )
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Lemma1Report {
    pub forward: Vec<ModeLocalization>,
    pub inverse: Vec<ModeLocalization>,
    pub pass: bool,
}

/// Causality of U and of U†.
pub fn check_lemma1(u: &MatrixOperator, lattice: &Lattice, ordering: &Ordering, tol: f64) -> Result<Lemma1Report> {
    let forward = causality_report(u, lattice, ordering, tol)?;
    if let Some(bad) = forward.iter().find(|r| !r.pass) {
        return Err(Error::Contract(format!(
            "input is not causal: mode {} leaks (residual {:.3e})",
            bad.mode, bad.residual_norm
        )));
    }
    let inverse = causality_report(&u.adjoint(), lattice, ordering, tol)?;
    let pass = inverse.iter().all(|r| r.pass);
    Ok(Lemma1Report { forward, inverse, pass })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParityPurity {
    pub mode: String,
    pub even_norm: f64,
}

/// Norm of the even part of U† a U for every mode.
pub fn lemma2_even_parts(u: &MatrixOperator, ordering: &Ordering) -> Result<Vec<ParityPurity>> {
    ordering
        .modes()
        .iter()
        .map(|m| {
            let img = heisenberg_image(u, m, ordering)?;
            let (_, even) = parity_split(&img);
            Ok(ParityPurity { mode: m.to_string(), even_norm: even.matrix().spectral_norm() })
        })
        .collect()
}

/// max over outside modes y of ‖{O, a_y}‖ and ‖{O, a†_y}‖.
pub fn outside_anticommutator_norm(op: &MatrixOperator, region: &Region, ordering: &Ordering) -> Result<f64> {
    let mut worst = 0.0f64;
    for y in ordering.modes().iter().filter(|m| !region.contains(m)) {
        let a = crate::fock::lower_on(&SymbolicOperator::annihilate(y), &[y.clone()], ordering)?;
        for b in [a.clone(), a.adjoint()] {
            let ab = op.mul(&b, ordering)?;
            let ba = b.mul(op, ordering)?;
            let anti = ab.add(&ba, ordering)?;
            worst = worst.max(anti.matrix().spectral_norm());
        }
    }
    Ok(worst)
}

/// Modes of `ordering` on the given sites.
pub fn modes_on_sites(sites: &BTreeSet<Vec<usize>>, ordering: &Ordering) -> Vec<Mode> {
    ordering.modes().iter().filter(|m| sites.contains(&m.site)).cloned().collect()
}
