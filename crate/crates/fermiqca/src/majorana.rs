//! Majorana ancilla pairs that restore qubit locality.
//!
//! A pair of ancilla modes c_(x,y) at site x and c_(y,x) at site y gives
//! Majoranas m = c + c† and M_(x,y) = i m_(x,y) m_(y,x), with M² = I. M is even
//! and commutes with every physical operator, so multiplying a monomial that
//! is odd on sites x and y by M leaves its action on the M = +1 eigenspace
//! unchanged while making each site's part even, which cancels the
//! Jordan-Wigner strings between x and y.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::causality::Region;
use crate::decomposition::LocalUnitaryFactor;
use crate::error::{domain, Error, Result};
use crate::fock::{lower_on, vacuum, Lattice, MatrixOperator, Mode, ModeKind, Ordering, StateVector};
use crate::jwmap::qubit_support;
use crate::linalg::{expm_herm, log_unitary_generator, CMat, C64, I, ZERO};
use crate::symbolic::{majorana_pair_product, Letter, Monomial, SymbolicOperator};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AncillaPair {
    pub id: usize,
    pub c_at_x: Mode,
    pub c_at_y: Mode,
}

impl AncillaPair {
    pub fn modes(&self) -> [Mode; 2] {
        [self.c_at_x.clone(), self.c_at_y.clone()]
    }

    fn joins(&self, x: &[usize], y: &[usize]) -> bool {
        (self.c_at_x.site == x && self.c_at_y.site == y) || (self.c_at_x.site == y && self.c_at_y.site == x)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RegistryEntry {
    pub pair_id: usize,
    pub site_x: Vec<usize>,
    pub site_y: Vec<usize>,
    pub pi_positions: [usize; 2],
}

/// Ancilla pairs introduced so far. A site pair gets at most one ancilla pair,
/// shared by every factor that needs it.
#[derive(Clone, Debug, Default)]
pub struct AncillaRegistry {
    pairs: Vec<AncillaPair>,
}

impl AncillaRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn pairs(&self) -> &[AncillaPair] {
        &self.pairs
    }

    pub fn find(&self, x: &[usize], y: &[usize]) -> Option<&AncillaPair> {
        self.pairs.iter().find(|p| p.joins(x, y))
    }

    /// The pair joining sites x and y, adding its two ancilla modes to the
    /// lattice if it does not exist yet. The flag is true for a new pair.
    pub fn get_or_add(&mut self, lattice: &mut Lattice, x: &[usize], y: &[usize]) -> Result<(AncillaPair, bool)> {
        if x == y {
            return domain("an ancilla pair needs two distinct sites");
        }
        if let Some(p) = self.find(x, y) {
            return Ok((p.clone(), false));
        }
        let next_label = |lat: &Lattice, s: &[usize]| {
            lat.modes_at(s).iter().filter(|m| m.kind == ModeKind::Ancilla).count()
        };
        let cx = Mode::ancilla(x.to_vec(), next_label(lattice, x));
        lattice.add_mode(cx.clone())?;
        let cy = Mode::ancilla(y.to_vec(), next_label(lattice, y));
        lattice.add_mode(cy.clone())?;
        let pair = AncillaPair { id: self.pairs.len(), c_at_x: cx, c_at_y: cy };
        self.pairs.push(pair.clone());
        Ok((pair, true))
    }

    pub fn entries(&self, ordering: &Ordering) -> Result<Vec<RegistryEntry>> {
        self.pairs
            .iter()
            .map(|p| {
                Ok(RegistryEntry {
                    pair_id: p.id,
                    site_x: p.c_at_x.site.clone(),
                    site_y: p.c_at_y.site.clone(),
                    pi_positions: [ordering.pi(&p.c_at_x)?, ordering.pi(&p.c_at_y)?],
                })
            })
            .collect()
    }

    /// Number of ancilla modes hosted by each site.
    pub fn ancillas_per_site(&self) -> BTreeMap<Vec<usize>, usize> {
        let mut out = BTreeMap::new();
        for p in &self.pairs {
            for m in p.modes() {
                *out.entry(m.site).or_insert(0) += 1;
            }
        }
        out
    }
}

/// m = c + c† for an ancilla mode.
pub fn majorana_op(anc: &Mode, ordering: &Ordering) -> Result<MatrixOperator> {
    if anc.kind != ModeKind::Ancilla {
        return domain(format!("{anc} is not an ancilla mode"));
    }
    ordering.pi(anc)?;
    MatrixOperator::new(vec![anc.clone()], CMat::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]))
}

/// M = i m_(x,y) m_(y,x).
pub fn pair_operator(pair: &AncillaPair, ordering: &Ordering) -> Result<MatrixOperator> {
    let modes = pair.modes();
    lower_on(&majorana_pair_product(&modes[0], &modes[1]), &modes, ordering)
}

/// ∏ (1 + M)/2 over the given pairs.
pub fn plus_projector(pairs: &[AncillaPair], ordering: &Ordering) -> Result<MatrixOperator> {
    let mut acc = MatrixOperator::identity(Vec::new());
    for p in pairs {
        let m = pair_operator(p, ordering)?;
        let proj = m.map_matrix(|x| (&CMat::identity(x.rows()) + x).scale_real(0.5));
        acc = acc.mul(&proj, ordering)?;
    }
    Ok(acc)
}

fn check_disjoint(pairs: &[AncillaPair]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for p in pairs {
        for m in p.modes() {
            if !seen.insert(m.clone()) {
                return domain(format!("ancilla pairs overlap on mode {m}"));
            }
        }
    }
    Ok(())
}

/// ∏ (1/√2)(m_(x,y) − i m_(y,x)) |Ω⟩, applied in the given order.
pub fn prepare_plus_state(pairs: &[AncillaPair], ordering: &Ordering) -> Result<StateVector> {
    check_disjoint(pairs)?;
    let mut state = vacuum(ordering);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for p in pairs {
        let [cx, cy] = p.modes();
        let sym = SymbolicOperator::monomial(C64::new(h, 0.0), vec![Letter::MajoranaX(cx.clone())])
            .add(&SymbolicOperator::monomial(C64::new(0.0, -h), vec![Letter::MajoranaX(cy.clone())]));
        let op = lower_on(&sym, &[cx, cy], ordering)?;
        state = op.apply(&state, ordering)?;
    }
    Ok(state)
}

/// Letters of a monomial grouped by site, in order of first appearance, with
/// the sign of the reordering.
fn group_by_site(term: &Monomial) -> (f64, Vec<(Vec<usize>, Vec<Letter>)>) {
    let mut order: Vec<Vec<usize>> = Vec::new();
    for l in &term.letters {
        if !order.contains(&l.mode().site) {
            order.push(l.mode().site.clone());
        }
    }
    let gid: Vec<usize> =
        term.letters.iter().map(|l| order.iter().position(|s| *s == l.mode().site).unwrap()).collect();
    let mut inversions = 0usize;
    for i in 0..gid.len() {
        for j in i + 1..gid.len() {
            if gid[i] > gid[j] {
                inversions += 1;
            }
        }
    }
    let groups = order
        .iter()
        .enumerate()
        .map(|(g, s)| {
            let ls = term.letters.iter().zip(&gid).filter(|(_, &k)| k == g).map(|(l, _)| l.clone()).collect();
            (s.clone(), ls)
        })
        .collect();
    (if inversions % 2 == 0 { 1.0 } else { -1.0 }, groups)
}

/// Sites on which the monomial has an odd number of letters, paired in
/// ascending lattice order.
fn odd_site_pairs(sites: Vec<Vec<usize>>, lattice: &Lattice) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    let mut sites = sites;
    sites.sort_by_key(|s| lattice.site_index(s));
    if sites.len() % 2 == 1 {
        return Err(Error::Contract("odd monomial cannot be repaired with Majorana pairs".into()));
    }
    if sites.len() > 4 {
        return Err(Error::Unsupported(format!(
            "monomial is odd on {} sites; only hopping and two-pair quartic patterns are supported",
            sites.len()
        )));
    }
    Ok(sites.chunks(2).map(|c| (c[0].clone(), c[1].clone())).collect())
}

/// Insert i m_(x,y) m_(y,x) between the x-part and y-part of the monomial for
/// every pair of sites on which it is odd. Letters are grouped by site first.
pub fn substitute(term: &Monomial, lattice: &mut Lattice, registry: &mut AncillaRegistry) -> Result<SymbolicOperator> {
    if term.letters.len() > 4 {
        return Err(Error::Unsupported(format!(
            "monomial of degree {} is beyond the quadratic and quartic patterns",
            term.letters.len()
        )));
    }
    let (sign, groups) = group_by_site(term);
    let odd: Vec<Vec<usize>> = groups.iter().filter(|(_, l)| l.len() % 2 == 1).map(|(s, _)| s.clone()).collect();
    let pairs = odd_site_pairs(odd, lattice)?;
    if pairs.is_empty() {
        return Ok(SymbolicOperator::from_terms(vec![term.clone()]));
    }
    let mut inserts: BTreeMap<Vec<usize>, AncillaPair> = BTreeMap::new();
    for (x, y) in &pairs {
        let (p, _) = registry.get_or_add(lattice, x, y)?;
        inserts.insert(x.clone(), p);
    }
    let mut letters = Vec::new();
    let mut coeff = term.coeff * sign;
    // Each pair goes right after whichever of its sites comes first.
    let mut inserted: Vec<AncillaPair> = Vec::new();
    for (site, ls) in &groups {
        letters.extend(ls.iter().cloned());
        if let Some(p) = pairs.iter().find(|(x, y)| x == site || y == site) {
            let first_seen = !inserted.iter().any(|q| q.joins(&p.0, &p.1));
            let pair = inserts[&p.0].clone();
            if first_seen {
                letters.push(Letter::MajoranaX(pair.c_at_x.clone()));
                letters.push(Letter::MajoranaX(pair.c_at_y.clone()));
                coeff *= I;
                inserted.push(pair);
            }
        }
    }
    Ok(SymbolicOperator::monomial(coeff, letters))
}

#[derive(Clone, Debug)]
pub struct Localized {
    pub factor: LocalUnitaryFactor,
    pub new_pairs: Vec<AncillaPair>,
    /// Pairs whose M operators appear in the repaired generator.
    pub used_pairs: Vec<AncillaPair>,
    /// ‖(V − U)P‖ with P the projector onto M = +1 for the used pairs.
    pub eigenspace_residual: f64,
    pub qubit_support: Vec<usize>,
}

/// Even Hermitian H with exp(−iH) equal to the factor's matrix, in π order of
/// the support.
pub fn factor_generator(factor: &LocalUnitaryFactor, ordering: &Ordering, tol: f64) -> Result<MatrixOperator> {
    let u = factor.matrix.in_order(ordering)?;
    let h = match &factor.generator {
        Some(g) => lower_on(g, u.modes(), ordering)?,
        None => {
            let m = u.matrix();
            let odd = CMat::from_fn(m.rows(), m.cols(), |r, c| if (r ^ c).count_ones() % 2 == 1 { m[(r, c)] } else { ZERO });
            if odd.max_abs() > tol {
                return Err(Error::Contract("factor does not conserve fermion parity".into()));
            }
            let h = log_unitary_generator(m);
            let even = CMat::from_fn(h.rows(), h.cols(), |r, c| if (r ^ c).count_ones() % 2 == 0 { h[(r, c)] } else { ZERO });
            MatrixOperator::new(u.modes().to_vec(), even)?
        }
    };
    let back = expm_herm(h.matrix(), 1.0);
    let err = (&back - u.matrix()).spectral_norm();
    if !h.matrix().is_hermitian(tol) || err > tol.max(1e-9) {
        return Err(Error::Contract(format!(
            "factor is not the exponential of an even Hermitian generator (mismatch {err:.3e})"
        )));
    }
    Ok(h)
}

/// Split a generator by the set of sites on which its entries change parity.
fn components_by_odd_sites(h: &MatrixOperator) -> BTreeMap<Vec<Vec<usize>>, CMat> {
    let mut sites: Vec<Vec<usize>> = h.modes().iter().map(|m| m.site.clone()).collect();
    sites.sort();
    sites.dedup();
    let masks: Vec<usize> = sites
        .iter()
        .map(|s| h.modes().iter().enumerate().filter(|(_, m)| &m.site == s).fold(0, |a, (i, _)| a | 1 << i))
        .collect();
    let m = h.matrix();
    let mut out: BTreeMap<Vec<Vec<usize>>, CMat> = BTreeMap::new();
    for r in 0..m.rows() {
        for c in 0..m.cols() {
            let v = m[(r, c)];
            if v == ZERO {
                continue;
            }
            let key: Vec<Vec<usize>> = sites
                .iter()
                .zip(&masks)
                .filter(|(_, &mk)| ((r ^ c) & mk).count_ones() % 2 == 1)
                .map(|(s, _)| s.clone())
                .collect();
            out.entry(key).or_insert_with(|| CMat::zeros(m.rows(), m.cols()))[(r, c)] = v;
        }
    }
    out
}

fn region_qubits(region: &Region, ordering: &Ordering) -> BTreeSet<usize> {
    ordering.modes().iter().enumerate().filter(|(_, m)| region.contains(m)).map(|(q, _)| q).collect()
}

/// Make a factor qubit-local on its region by multiplying every generator
/// component whose Jordan-Wigner image leaves the region by the M operators
/// of its odd sites. New ancilla modes are added to `lattice`; orderings are
/// always `Ordering::site_major(lattice)`, which places each ancilla right
/// after its host site's physical modes.
pub fn localize(
    factor: &LocalUnitaryFactor,
    lattice: &mut Lattice,
    registry: &mut AncillaRegistry,
    tol: f64,
) -> Result<Localized> {
    let ord0 = Ordering::site_major(lattice);
    let h = factor_generator(factor, &ord0, tol)?;
    let allowed0 = region_qubits(&factor.region, &ord0);
    let comps = components_by_odd_sites(&h);

    let mut flagged: Vec<(Vec<Vec<usize>>, CMat)> = Vec::new();
    let mut kept = CMat::zeros(h.dim(), h.dim());
    for (sites, mat) in comps {
        let part = MatrixOperator::new(h.modes().to_vec(), mat.clone())?;
        if qubit_support(&part, &ord0, 0.0)?.is_subset(&allowed0) {
            kept = &kept + &mat;
        } else {
            flagged.push((sites, mat));
        }
    }
    if flagged.is_empty() {
        let qs = qubit_support(&factor.matrix, &ord0, 1e-13)?;
        return Ok(Localized {
            factor: factor.clone(),
            new_pairs: Vec::new(),
            used_pairs: Vec::new(),
            eigenspace_residual: 0.0,
            qubit_support: qs.into_iter().collect(),
        });
    }

    let mut new_pairs = Vec::new();
    let mut used: Vec<AncillaPair> = Vec::new();
    let mut plan: Vec<(CMat, Vec<AncillaPair>)> = Vec::new();
    for (sites, mat) in flagged {
        let mut ps = Vec::new();
        for (x, y) in odd_site_pairs(sites, lattice)? {
            let (p, fresh) = registry.get_or_add(lattice, &x, &y)?;
            if fresh {
                new_pairs.push(p.clone());
            }
            if !used.contains(&p) {
                used.push(p.clone());
            }
            ps.push(p);
        }
        plan.push((mat, ps));
    }

    let ord = Ordering::site_major(lattice);
    let mut hnew = MatrixOperator::new(h.modes().to_vec(), kept)?;
    for (mat, ps) in plan {
        let mut term = MatrixOperator::new(h.modes().to_vec(), mat)?;
        for p in &ps {
            term = term.mul(&pair_operator(p, &ord)?, &ord)?;
        }
        hnew = hnew.add(&term, &ord)?;
    }
    let hnew = hnew.in_order(&ord)?;
    let v = hnew.map_matrix(|m| expm_herm(m, 1.0));

    let proj = plus_projector(&used, &ord)?;
    let lhs = v.mul(&proj, &ord)?;
    let rhs = factor.matrix.mul(&proj, &ord)?;
    let residual = lhs.distance(&rhs, &ord)?;

    let qs = qubit_support(&v, &ord, 1e-13)?;
    let allowed = region_qubits(&factor.region, &ord);
    if !qs.is_subset(&allowed) {
        return Err(Error::Contract("Majorana substitution did not produce a qubit-local factor".into()));
    }
    let mut out = factor.clone();
    out.matrix = v;
    out.generator = None;
    Ok(Localized { factor: out, new_pairs, used_pairs: used, eigenspace_residual: residual, qubit_support: qs.into_iter().collect() })
}

/// Substitute a whole symbolic operator term by term, but only the monomials
/// whose Jordan-Wigner image leaves `region`.
pub fn substitute_flagged(
    op: &SymbolicOperator,
    region: &Region,
    lattice: &mut Lattice,
    registry: &mut AncillaRegistry,
) -> Result<(SymbolicOperator, Vec<usize>)> {
    let ord = Ordering::site_major(lattice);
    let allowed = region_qubits(region, &ord);
    let mut out = SymbolicOperator::zero();
    let mut flagged = Vec::new();
    for (i, t) in op.terms().iter().enumerate() {
        let single = SymbolicOperator::from_terms(vec![t.clone()]);
        let qs = crate::jwmap::jw(&single, &ord)?.support();
        if qs.is_subset(&allowed) {
            out = out.add(&single);
        } else {
            flagged.push(i);
            out = out.add(&substitute(t, lattice, registry)?);
        }
    }
    Ok((out, flagged))
}

/// Symbolic M_(x,y) for a registered pair.
pub fn pair_symbol(pair: &AncillaPair) -> SymbolicOperator {
    majorana_pair_product(&pair.c_at_x, &pair.c_at_y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::annihilation_matrix;
    use crate::linalg::ONE;

    fn ring_with_pair(n: usize) -> (Lattice, AncillaRegistry, AncillaPair) {
        let mut lat = Lattice::line(n, true, 1).unwrap();
        let mut reg = AncillaRegistry::new();
        let (p, fresh) = reg.get_or_add(&mut lat, &[0], &[n - 1]).unwrap();
        assert!(fresh);
        (lat, reg, p)
    }

    #[test]
    fn majorana_squares_to_identity_and_anticommutes() {
        let (lat, _, p) = ring_with_pair(3);
        let ord = Ordering::site_major(&lat);
        let m = majorana_op(&p.c_at_x, &ord).unwrap();
        let id = MatrixOperator::identity(vec![]);
        assert!(m.mul(&m, &ord).unwrap().distance(&id, &ord).unwrap() == 0.0);
        let a = annihilation_matrix(ord.mode(0), &ord).unwrap();
        let anti = m.mul(&a, &ord).unwrap().add(&a.mul(&m, &ord).unwrap(), &ord).unwrap();
        assert_eq!(anti.matrix().max_abs(), 0.0);
        assert!(majorana_op(ord.mode(0), &ord).is_err());
    }

    #[test]
    fn plus_state_is_plus_one_eigenstate() {
        let (lat, _, p) = ring_with_pair(3);
        let ord = Ordering::site_major(&lat);
        let s = prepare_plus_state(&[p.clone()], &ord).unwrap();
        let m = pair_operator(&p, &ord).unwrap();
        let ms = m.apply(&s, &ord).unwrap();
        assert!(crate::linalg::vec_sub_norm(&ms.amps, &s.amps) < 1e-12);
        assert!((s.norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn overlapping_pairs_rejected() {
        let (lat, _, p) = ring_with_pair(3);
        let ord = Ordering::site_major(&lat);
        assert!(prepare_plus_state(&[p.clone(), p], &ord).is_err());
    }

    #[test]
    fn hopping_substitution_inserts_pair() {
        let mut lat = Lattice::line(5, true, 1).unwrap();
        let mut reg = AncillaRegistry::new();
        let x = Mode::physical(vec![0], 0);
        let y = Mode::physical(vec![4], 0);
        let t = Monomial::new(ONE, vec![Letter::Annihilate(x.clone()), Letter::Annihilate(y.clone())]);
        let s = substitute(&t, &mut lat, &mut reg).unwrap();
        assert_eq!(reg.pairs().len(), 1);
        assert_eq!(s.terms()[0].letters.len(), 4);
        assert_eq!(s.terms()[0].coeff, I);
    }

    fn boundary_swap_factor(lat: &Lattice, with_generator: bool) -> LocalUnitaryFactor {
        use crate::decomposition::{fermionic_swap, swap_generator, FactorTag};
        let ord = Ordering::site_major(lat);
        let x = Mode::physical(vec![0], 0);
        let y = Mode::physical(vec![4], 0);
        LocalUnitaryFactor {
            matrix: fermionic_swap(&x, &y, &ord).unwrap(),
            region: Region::new([vec![0], vec![4]]),
            tag: FactorTag::Swap,
            host: vec![0],
            generator: with_generator.then(|| swap_generator(&x, &y)),
            group: 0,
        }
    }

    #[test]
    fn boundary_swap_is_repaired_with_one_pair() {
        for with_gen in [true, false] {
            let mut lat = Lattice::line(5, true, 1).unwrap();
            let mut reg = AncillaRegistry::new();
            let f = boundary_swap_factor(&lat, with_gen);
            let out = localize(&f, &mut lat, &mut reg, 1e-10).unwrap();
            assert_eq!(out.new_pairs.len(), 1);
            assert!(out.eigenspace_residual < 1e-10, "{}", out.eigenspace_residual);
            let ord = Ordering::site_major(&lat);
            let allowed = region_qubits(&f.region, &ord);
            assert!(out.qubit_support.iter().all(|q| allowed.contains(q)));
            let before = qubit_support(&f.matrix, &ord, 1e-13).unwrap();
            assert!(!before.is_subset(&allowed));
        }
    }

    #[test]
    fn local_factor_is_unchanged() {
        use crate::decomposition::{fermionic_swap, FactorTag};
        let mut lat = Lattice::line(5, true, 1).unwrap();
        let ord = Ordering::site_major(&lat);
        let (x, y) = (Mode::physical(vec![1], 0), Mode::physical(vec![2], 0));
        let f = LocalUnitaryFactor {
            matrix: fermionic_swap(&x, &y, &ord).unwrap(),
            region: Region::new([vec![1], vec![2]]),
            tag: FactorTag::Swap,
            host: vec![1],
            generator: None,
            group: 0,
        };
        let mut reg = AncillaRegistry::new();
        let out = localize(&f, &mut lat, &mut reg, 1e-10).unwrap();
        assert!(out.new_pairs.is_empty());
        assert_eq!(out.factor.matrix, f.matrix);
    }
}
