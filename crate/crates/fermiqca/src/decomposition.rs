//! Local decomposition of causal fermionic unitaries on a doubled system.
//!
//! Every physical mode a gets a copy b on the same site, right after it in π.
//! With the fermionic swaps S = exp[i(π/2)(b†−a†)(b−a)] = I − (b†−a†)(b−a)
//! and the global swap 𝐒 = ∏ S, the copy evolution is U_B = 𝐒 U_A 𝐒 and
//!
//! ```text
//! U_A U_B† = (∏_x S_x) · (∏_y U_B S_y U_B†)
//! ```
//!
//! where each conjugated swap is localized on the neighborhood of y and the
//! conjugated swaps commute. Factor lists are in application order: the first
//! factor acts first.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use serde::Serialize;

use crate::causality::{causality_report, localize_on, Region};
use crate::error::{domain, Error, Result};
use crate::fock::{lower_on, Lattice, Mode, ModeKind, MatrixOperator, Ordering, StateVector};
use crate::linalg::{CMat, C64};
use crate::rng::{random_even_hermitian, random_state, Rng};
use crate::symbolic::SymbolicOperator;

#[derive(Clone, Debug)]
pub struct DoubledSystem {
    pub base: Lattice,
    pub lattice: Lattice,
    pub ordering: Ordering,
}

impl DoubledSystem {
    pub fn new(base: &Lattice) -> Result<Self> {
        if base.modes().iter().any(|m| m.kind != ModeKind::Physical) {
            return domain("base lattice must contain physical modes only");
        }
        let mut lattice = base.clone();
        for m in base.modes() {
            lattice.add_mode(m.copy_of())?;
        }
        let ordering = Ordering::site_major(&lattice);
        Ok(DoubledSystem { base: base.clone(), lattice, ordering })
    }

    pub fn physical_modes(&self) -> Vec<Mode> {
        self.ordering.modes().iter().filter(|m| m.kind == ModeKind::Physical).cloned().collect()
    }

    /// Ordering of the physical modes alone, in the doubled π order.
    pub fn physical_ordering(&self) -> Ordering {
        Ordering::from_modes(self.physical_modes()).expect("unique modes")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorTag {
    Swap,
    ConjugatedSwap,
    OnSite,
}

#[derive(Clone, Debug)]
pub struct LocalUnitaryFactor {
    pub matrix: MatrixOperator,
    pub region: Region,
    pub tag: FactorTag,
    /// Site whose neighborhood the factor lives on.
    pub host: Vec<usize>,
    /// Hermitian H with matrix = exp(−iH), when known symbolically.
    pub generator: Option<SymbolicOperator>,
    /// Index of the commuting group the factor belongs to.
    pub group: usize,
}

/// (b† − a†)(b − a) for the pair (a, b).
pub fn swap_kernel(a: &Mode, b: &Mode) -> SymbolicOperator {
    let left = SymbolicOperator::create(b).sub(&SymbolicOperator::create(a));
    let right = SymbolicOperator::annihilate(b).sub(&SymbolicOperator::annihilate(a));
    left.mul(&right)
}

/// H with exp(−iH) = S, namely H = −(π/2)(b†−a†)(b−a).
pub fn swap_generator(a: &Mode, b: &Mode) -> SymbolicOperator {
    swap_kernel(a, b).scale(C64::new(-PI / 2.0, 0.0))
}

/// The fermionic swap of `m1` and `m2`, supported on the two modes.
pub fn fermionic_swap(m1: &Mode, m2: &Mode, ordering: &Ordering) -> Result<MatrixOperator> {
    if m1 == m2 {
        return domain(format!("cannot swap mode {m1} with itself"));
    }
    let k = lower_on(&swap_kernel(m1, m2), &[m1.clone(), m2.clone()], ordering)?;
    // K² = 2K, so exp(iπK/2) = I − K exactly.
    Ok(k.map_matrix(|m| &CMat::identity(m.rows()) - m))
}

/// Relabel a physical-mode operator onto the copy modes. Equal to 𝐒 U 𝐒
/// because conjugation by 𝐒 is the *-isomorphism a_x ↦ b_x and the local
/// basis is defined by the support list, which relabeling preserves.
pub fn build_ub(u_a: &MatrixOperator, doubled: &DoubledSystem) -> Result<MatrixOperator> {
    let mut modes = Vec::with_capacity(u_a.modes().len());
    for m in u_a.modes() {
        if m.kind != ModeKind::Physical || !doubled.ordering.contains(m) {
            return Err(Error::Contract(format!("U_A acts on non-physical mode {m}")));
        }
        modes.push(m.copy_of());
    }
    MatrixOperator::new(modes, u_a.matrix().clone())
}

/// 𝐒 U_A 𝐒 computed by explicit conjugation with the swaps of every pair
/// touched by U_A. Dense in 2·|support| modes.
pub fn build_ub_by_conjugation(u_a: &MatrixOperator, doubled: &DoubledSystem) -> Result<MatrixOperator> {
    let ord = &doubled.ordering;
    let mut swaps = Vec::new();
    for m in u_a.modes() {
        swaps.push(fermionic_swap(m, &m.copy_of(), ord)?);
    }
    let mut acc = u_a.clone();
    for s in &swaps {
        acc = s.mul(&acc, ord)?.mul(s, ord)?;
    }
    Ok(acc)
}

/// U_B S_y U_B† for physical mode y.
pub fn conjugated_swap(u_b: &MatrixOperator, y: &Mode, ordering: &Ordering) -> Result<MatrixOperator> {
    let s = fermionic_swap(y, &y.copy_of(), ordering)?;
    u_b.mul(&s, ordering)?.mul(&u_b.adjoint(), ordering)
}

/// I − (b′† − a†)(b′ − a) with b′ = U_B b_y U_B†.
pub fn conjugated_swap_from_image(u_b: &MatrixOperator, y: &Mode, ordering: &Ordering) -> Result<MatrixOperator> {
    let b = y.copy_of();
    let bop = lower_on(&SymbolicOperator::annihilate(&b), &[b.clone()], ordering)?;
    let aop = lower_on(&SymbolicOperator::annihilate(y), &[y.clone()], ordering)?;
    let bprime = u_b.mul(&bop, ordering)?.mul(&u_b.adjoint(), ordering)?;
    let d = bprime.sub(&aop, ordering)?;
    let k = d.adjoint().mul(&d, ordering)?;
    let id = MatrixOperator::identity(k.modes().to_vec());
    id.sub(&k, ordering)
}

#[derive(Clone, Debug)]
pub struct Theorem1Factors {
    pub factors: Vec<LocalUnitaryFactor>,
    pub u_b: MatrixOperator,
    /// Unprojected U_B S_y U_B† per physical mode, same order as the
    /// conjugated-swap factors.
    pub conjugated: Vec<MatrixOperator>,
    pub localization_residuals: Vec<f64>,
}

/// Conjugated swaps (localized on neighborhoods) followed by the plain swaps.
pub fn theorem1_factorize(u_a: &MatrixOperator, doubled: &DoubledSystem, tol: f64) -> Result<Theorem1Factors> {
    let ord = &doubled.ordering;
    let phys = doubled.physical_ordering();
    for r in causality_report(u_a, &doubled.base, &phys, tol)? {
        if !r.pass {
            return Err(Error::Contract(format!(
                "U_A is not causal: image of mode {} leaks outside its neighborhood (residual {:.3e})",
                r.mode, r.residual_norm
            )));
        }
    }
    let u_b = build_ub(u_a, doubled)?;
    let mut factors = Vec::new();
    let mut conjugated = Vec::new();
    let mut residuals = Vec::new();
    for y in phys.modes() {
        let c = conjugated_swap(&u_b, y, ord)?;
        let region = Region::neighborhood(&doubled.lattice, &y.site);
        let loc = localize_on(&c, &region, ord, tol)?;
        if loc.residual > tol {
            return Err(Error::Contract(format!(
                "conjugated swap for {y} is not localized (residual {:.3e})",
                loc.residual
            )));
        }
        residuals.push(loc.residual);
        conjugated.push(c);
        factors.push(LocalUnitaryFactor {
            matrix: loc.projected,
            region,
            tag: FactorTag::ConjugatedSwap,
            host: y.site.clone(),
            generator: None,
            group: 0,
        });
    }
    for x in phys.modes() {
        factors.push(LocalUnitaryFactor {
            matrix: fermionic_swap(x, &x.copy_of(), ord)?,
            region: Region::new([x.site.clone()]),
            tag: FactorTag::Swap,
            host: x.site.clone(),
            generator: Some(swap_generator(x, &x.copy_of())),
            group: 1,
        });
    }
    Ok(Theorem1Factors { factors, u_b, conjugated, localization_residuals: residuals })
}

/// Product of factor matrices in application order.
pub fn factor_product(factors: &[LocalUnitaryFactor], ordering: &Ordering) -> Result<MatrixOperator> {
    let ops: Vec<MatrixOperator> = factors.iter().map(|f| f.matrix.clone()).collect();
    MatrixOperator::product(&ops, ordering)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Theorem1Check {
    /// ‖∏ factors − U_A U_B†‖ (exact when `method == "dense"`, otherwise a
    /// certified upper bound).
    pub product_residual: f64,
    pub method: String,
    /// max ‖(∏ factors − U_A U_B†) v‖ over random unit vectors v.
    pub probe_residual: f64,
    pub max_localization_residual: f64,
    pub max_commutator: f64,
    pub swap_relabel_residual: f64,
    pub factor_count: usize,
}

/// Mode count up to which the factor product is formed densely.
pub const DENSE_PRODUCT_MODES: usize = 8;

/// Verify the factorization identity, localization and commutation.
///
/// For larger systems the product residual is bounded by telescoping:
/// ∏S·∏F − U_A U_B† = 𝐒(∏F − ∏C) with C_y = U_B S_y U_B† exactly, so
/// ‖·‖ ≤ Σ_y ‖F_y − C_y‖ (unitary factors), given that U_B is the 𝐒-image of
/// U_A, which `swap_relabel_residual` certifies on generators.
pub fn check_theorem1(
    u_a: &MatrixOperator,
    doubled: &DoubledSystem,
    result: &Theorem1Factors,
    probes: usize,
    rng: &mut Rng,
    tol: f64,
) -> Result<Theorem1Check> {
    let ord = &doubled.ordering;
    let conj: Vec<&LocalUnitaryFactor> =
        result.factors.iter().filter(|f| f.tag == FactorTag::ConjugatedSwap).collect();

    let mut max_comm = 0.0f64;
    for i in 0..conj.len() {
        for j in i + 1..conj.len() {
            let ab = conj[i].matrix.mul(&conj[j].matrix, ord)?;
            let ba = conj[j].matrix.mul(&conj[i].matrix, ord)?;
            let d = ab.sub(&ba, ord)?;
            max_comm = max_comm.max(d.matrix().residual_norm(tol));
        }
    }

    // 𝐒 a_x 𝐒 = b_x on every generator.
    let mut relabel = 0.0f64;
    for x in doubled.physical_modes() {
        let s = fermionic_swap(&x, &x.copy_of(), ord)?;
        let a = lower_on(&SymbolicOperator::annihilate(&x), &[x.clone()], ord)?;
        let b = lower_on(&SymbolicOperator::annihilate(&x.copy_of()), &[x.copy_of()], ord)?;
        let img = s.mul(&a, ord)?.mul(&s, ord)?;
        relabel = relabel.max(img.distance(&b, ord)?);
    }

    let (product_residual, method) = if ord.len() <= DENSE_PRODUCT_MODES {
        let prod = factor_product(&result.factors, ord)?;
        let target = u_a.mul(&result.u_b.adjoint(), ord)?;
        (prod.to_full(ord).map(|p| (&p - &target.to_full(ord).unwrap()).spectral_norm())?, "dense".to_string())
    } else {
        let mut bound = relabel;
        for (f, c) in conj.iter().zip(&result.conjugated) {
            bound += f.matrix.distance(c, ord)?;
            bound += c.matrix().unitarity_defect() * c.dim() as f64;
        }
        (bound, "certified_bound".to_string())
    };

    // Independent probe: U_B† applied as 𝐒 U_A† 𝐒.
    let mut probe = 0.0f64;
    let dim = 1usize << ord.len();
    let swaps: Vec<MatrixOperator> = doubled
        .physical_modes()
        .iter()
        .map(|x| fermionic_swap(x, &x.copy_of(), ord))
        .collect::<Result<_>>()?;
    let ua_dag = u_a.adjoint();
    for _ in 0..probes {
        let v = random_state(dim, rng);
        let mut lhs = v.clone();
        for f in &result.factors {
            f.matrix.apply_in_place(&mut lhs, ord)?;
        }
        let mut rhs = v;
        for s in &swaps {
            s.apply_in_place(&mut rhs, ord)?;
        }
        ua_dag.apply_in_place(&mut rhs, ord)?;
        for s in &swaps {
            s.apply_in_place(&mut rhs, ord)?;
        }
        u_a.apply_in_place(&mut rhs, ord)?;
        probe = probe.max(crate::linalg::vec_sub_norm(&lhs, &rhs));
    }

    Ok(Theorem1Check {
        product_residual,
        method,
        probe_residual: probe,
        max_localization_residual: result.localization_residuals.iter().cloned().fold(0.0, f64::max),
        max_commutator: max_comm,
        swap_relabel_residual: relabel,
        factor_count: result.factors.len(),
    })
}

/// |⟨ψ|U_B U_A† M U_A U_B†|ψ⟩ − ⟨ψ|U_A† M U_A|ψ⟩| for ψ with empty copy modes.
pub fn measurement_equivalence_check(
    u_a: &MatrixOperator,
    doubled: &DoubledSystem,
    m_a: &MatrixOperator,
    psi: &StateVector,
) -> Result<f64> {
    let ord = &doubled.ordering;
    if m_a.modes().iter().any(|m| m.kind != ModeKind::Physical) {
        return Err(Error::Contract("measured operator must act on physical modes".into()));
    }
    let copy_mask = ord
        .modes()
        .iter()
        .enumerate()
        .filter(|(_, m)| m.kind == ModeKind::Copy)
        .fold(0usize, |acc, (p, _)| acc | 1 << p);
    if psi.amps.iter().enumerate().any(|(n, a)| n & copy_mask != 0 && a.norm() > 1e-14) {
        return Err(Error::Contract("state has occupied copy modes".into()));
    }
    let u_b = build_ub(u_a, doubled)?;
    let expect = |state: &StateVector| -> Result<C64> {
        let m = m_a.apply(state, ord)?;
        Ok(state.inner(&m))
    };
    let lhs_state = u_a.apply(&u_b.adjoint().apply(psi, ord)?, ord)?;
    let rhs_state = u_a.apply(psi, ord)?;
    Ok((expect(&lhs_state)? - expect(&rhs_state)?).norm())
}

/// Random causal unitary on a line: on-site layer, one layer of disjoint
/// nearest-neighbor gates with a random offset, on-site layer. All gates are
/// exponentials of random even Hermitian generators.
pub fn random_causal_brickwork(lattice: &Lattice, ordering: &Ordering, rng: &mut Rng) -> Result<MatrixOperator> {
    if lattice.dims() != 1 {
        return domain("brickwork generator expects a one-dimensional lattice");
    }
    let n = lattice.extents()[0];
    let gate = |sites: &[usize], rng: &mut Rng| -> Result<MatrixOperator> {
        let modes: Vec<Mode> =
            ordering.modes().iter().filter(|m| sites.contains(&m.site[0])).cloned().collect();
        let h = random_even_hermitian(modes.len(), rng).scale_real(2.0);
        MatrixOperator::new(modes, crate::linalg::expm_herm(&h, 1.0))
    };
    let mut layers: Vec<MatrixOperator> = Vec::new();
    for x in 0..n {
        layers.push(gate(&[x], rng)?);
    }
    let offset = crate::rng::below(rng, 2);
    let pairs = if lattice.periodic()[0] { n / 2 } else { (n - offset) / 2 };
    for p in 0..pairs {
        let x = offset + 2 * p;
        layers.push(gate(&[x % n, (x + 1) % n], rng)?);
    }
    for x in 0..n {
        layers.push(gate(&[x], rng)?);
    }
    MatrixOperator::product(&layers, ordering)
}

/// Exhaustive search for the cyclic shift on a ring of `n` single-mode sites
/// as a product of `depth` layers of disjoint nearest-neighbor fermionic swaps.
/// Returns the layers (pairs per layer) of the first decomposition found.
///
/// Swap products act on modes as permutations, and the second-quantized map
/// is faithful on permutations, so comparing permutations is exact.
pub fn shift_swap_search(n: usize, depth: usize) -> Option<Vec<Vec<(usize, usize)>>> {
    let edges: Vec<(usize, usize)> = (0..n).map(|x| (x, (x + 1) % n)).collect();
    let mut matchings: Vec<Vec<(usize, usize)>> = Vec::new();
    for mask in 0u64..1 << edges.len() {
        let chosen: Vec<(usize, usize)> = (0..edges.len()).filter(|i| mask >> i & 1 == 1).map(|i| edges[i]).collect();
        let mut used = BTreeSet::new();
        if chosen.iter().all(|&(a, b)| used.insert(a) && used.insert(b)) {
            matchings.push(chosen);
        }
    }
    let target: Vec<usize> = (0..n).map(|x| (x + 1) % n).collect();
    let mut stack: Vec<Vec<usize>> = vec![vec![]];
    while let Some(choice) = stack.pop() {
        if choice.len() == depth {
            let mut perm: Vec<usize> = (0..n).collect();
            for &layer in &choice {
                for &(a, b) in &matchings[layer] {
                    for p in perm.iter_mut() {
                        if *p == a {
                            *p = b;
                        } else if *p == b {
                            *p = a;
                        }
                    }
                }
            }
            if perm == target {
                return Some(choice.iter().map(|&i| matchings[i].clone()).collect());
            }
            continue;
        }
        for i in (0..matchings.len()).rev() {
            let mut next = choice.clone();
            next.push(i);
            stack.push(next);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::creation_matrix;
    use crate::linalg::{expm_herm, ONE};

    fn doubled_line(n: usize, labels: usize) -> DoubledSystem {
        DoubledSystem::new(&Lattice::line(n, false, labels).unwrap()).unwrap()
    }

    #[test]
    fn swap_exchanges_modes_and_squares_to_identity() {
        let d = doubled_line(1, 1);
        let ord = &d.ordering;
        let (a, b) = (ord.mode(0).clone(), ord.mode(1).clone());
        let s = fermionic_swap(&a, &b, ord).unwrap().to_full(ord).unwrap();
        let ca = creation_matrix(&a, ord).unwrap().into_matrix();
        let cb = creation_matrix(&b, ord).unwrap().into_matrix();
        assert_eq!(s.matmul(&ca).matmul(&s), cb);
        assert_eq!(s.matmul(&s), CMat::identity(4));
        assert_eq!(s.column(0)[0], ONE);
    }

    #[test]
    fn swap_matches_exponential_oracle() {
        let d = doubled_line(1, 1);
        let ord = &d.ordering;
        let (a, b) = (ord.mode(0).clone(), ord.mode(1).clone());
        let k = lower_on(&swap_kernel(&a, &b), &[a.clone(), b.clone()], ord).unwrap();
        let oracle = expm_herm(k.matrix(), -PI / 2.0);
        let s = fermionic_swap(&a, &b, ord).unwrap();
        assert!((&oracle - s.matrix()).max_abs() < 1e-13);
    }

    #[test]
    fn identity_unitary_gives_identity_product() {
        let d = doubled_line(3, 1);
        let u = MatrixOperator::identity(d.physical_modes());
        let res = theorem1_factorize(&u, &d, 1e-10).unwrap();
        let prod = factor_product(&res.factors, &d.ordering).unwrap();
        let id = MatrixOperator::identity(prod.modes().to_vec());
        assert!(prod.distance(&id, &d.ordering).unwrap() < 1e-12);
    }

    #[test]
    fn ub_relabel_equals_conjugation() {
        let d = doubled_line(2, 1);
        let ord = &d.ordering;
        let a0 = d.physical_modes()[0].clone();
        let n = lower_on(&SymbolicOperator::number(&a0), &[a0.clone()], ord).unwrap();
        let u = n.map_matrix(|m| expm_herm(m, 0.7));
        let ub = build_ub(&u, &d).unwrap();
        let expect = lower_on(&SymbolicOperator::number(&a0.copy_of()), &[a0.copy_of()], ord)
            .unwrap()
            .map_matrix(|m| expm_herm(m, 0.7));
        assert!(ub.distance(&expect, ord).unwrap() < 1e-15);
        let conj = build_ub_by_conjugation(&u, &d).unwrap();
        assert!(conj.distance(&ub, ord).unwrap() < 1e-12);
    }

    #[test]
    fn non_causal_input_is_rejected() {
        let d = doubled_line(5, 1);
        let ph = d.physical_modes();
        let s = fermionic_swap(&ph[0], &ph[2], &d.ordering).unwrap();
        assert!(matches!(theorem1_factorize(&s, &d, 1e-10), Err(Error::Contract(_))));
    }

    #[test]
    fn brickwork_factorization_dense() {
        let d = doubled_line(3, 1);
        let mut rng = crate::rng::seeded(11);
        let u = random_causal_brickwork(&d.base, &d.physical_ordering(), &mut rng).unwrap();
        let res = theorem1_factorize(&u, &d, 1e-10).unwrap();
        let chk = check_theorem1(&u, &d, &res, 2, &mut rng, 1e-10).unwrap();
        assert_eq!(chk.method, "dense");
        assert!(chk.product_residual < 1e-10, "{chk:?}");
        assert!(chk.probe_residual < 1e-10);
        assert!(chk.max_commutator < 1e-10);
        for (y, c) in d.physical_modes().iter().zip(&res.conjugated) {
            let alt = conjugated_swap_from_image(&res.u_b, y, &d.ordering).unwrap();
            assert!(alt.distance(c, &d.ordering).unwrap() < 1e-10);
        }
    }

    #[test]
    fn brickwork_factorization_bounded() {
        let d = doubled_line(3, 2);
        let mut rng = crate::rng::seeded(5);
        let u = random_causal_brickwork(&d.base, &d.physical_ordering(), &mut rng).unwrap();
        let res = theorem1_factorize(&u, &d, 1e-10).unwrap();
        let chk = check_theorem1(&u, &d, &res, 2, &mut rng, 1e-10).unwrap();
        assert_eq!(chk.method, "certified_bound");
        assert!(chk.product_residual < 1e-9, "{chk:?}");
        assert!(chk.probe_residual < 1e-10);
        assert!(chk.max_commutator < 1e-10);
    }

    #[test]
    fn shift_search_small_rings() {
        assert!(shift_swap_search(3, 2).is_some());
        for n in 4..=7 {
            assert!(shift_swap_search(n, 2).is_none(), "ring of {n}");
        }
    }
}
