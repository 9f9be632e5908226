use std::collections::BTreeSet;

use fermiqca::causality::Region;
use fermiqca::decomposition::{FactorTag, LocalUnitaryFactor};
use fermiqca::dirac1d::{mass_layer, swap_decompose_t, DiracParams};
use fermiqca::fock::{lower, lower_on, Lattice, Mode, Ordering};
use fermiqca::jwmap::{jw, qubit_support};
use fermiqca::linalg::{eigh, expm_herm, CMat, C64};
use fermiqca::majorana::{localize, pair_operator, plus_projector, prepare_plus_state, substitute, AncillaRegistry};
use fermiqca::symbolic::{Letter, Monomial, SymbolicOperator};
use proptest::prelude::*;

const TOL: f64 = 1e-10;

fn site(s: usize) -> Mode {
    Mode::physical(vec![s], 0)
}

fn ring_with_pairs(n: usize, joins: &[(usize, usize)]) -> (Lattice, AncillaRegistry) {
    let mut lat = Lattice::line(n, true, 1).unwrap();
    let mut reg = AncillaRegistry::new();
    for &(x, y) in joins {
        reg.get_or_add(&mut lat, &[x], &[y]).unwrap();
    }
    (lat, reg)
}

fn qubits_of_sites(sites: &[usize], ord: &Ordering) -> BTreeSet<usize> {
    ord.modes().iter().enumerate().filter(|(_, m)| sites.contains(&m.site[0])).map(|(q, _)| q).collect()
}

#[test]
fn pair_operators_are_commuting_reflections() {
    let (lat, reg) = ring_with_pairs(5, &[(0, 2), (1, 3)]);
    let ord = Ordering::site_major(&lat);
    let ms: Vec<CMat> = reg.pairs().iter().map(|p| pair_operator(p, &ord).unwrap().to_full(&ord).unwrap()).collect();
    let dim = 1 << ord.len();
    for (i, m) in ms.iter().enumerate() {
        assert!(m.is_hermitian(1e-15));
        assert!((&m.matmul(m) - &CMat::identity(dim)).max_abs() < 1e-15);
        let (vals, _) = eigh(m);
        assert_eq!(vals.iter().filter(|v| (**v - 1.0).abs() < 1e-12).count(), dim / 2);
        assert_eq!(vals.iter().filter(|v| (**v + 1.0).abs() < 1e-12).count(), dim / 2);
        for other in &ms[i + 1..] {
            assert!(m.commutator(other).max_abs() < 1e-15);
        }
        for s in 0..5 {
            let a = lower(&SymbolicOperator::annihilate(&site(s)), &ord).unwrap().to_full(&ord).unwrap();
            assert!(m.commutator(&a).max_abs() < 1e-15);
        }
    }
}

#[test]
fn plus_state_is_order_independent_up_to_sign() {
    let (lat, reg) = ring_with_pairs(5, &[(0, 2), (1, 3)]);
    let ord = Ordering::site_major(&lat);
    let pairs = reg.pairs().to_vec();
    let fwd = prepare_plus_state(&pairs, &ord).unwrap();
    let rev: Vec<_> = pairs.iter().rev().cloned().collect();
    let bwd = prepare_plus_state(&rev, &ord).unwrap();
    assert!((fwd.inner(&bwd).norm() - 1.0).abs() < 1e-14);
    let p = plus_projector(&pairs, &ord).unwrap();
    assert!((fwd.inner(&p.apply(&fwd, &ord).unwrap()).re - 1.0).abs() < 1e-14);
}

#[test]
fn localized_dirac_factors_respect_ancilla_budget() {
    for n in [5, 7] {
        let params = DiracParams::new(n, 0.4).unwrap();
        let mut lat = params.lattice();
        let ord0 = Ordering::site_major(&lat);
        let mut factors = swap_decompose_t(&params, &ord0).unwrap();
        factors.extend(mass_layer(&params, &ord0).unwrap());
        let mut reg = AncillaRegistry::new();
        for f in &factors {
            let out = localize(f, &mut lat, &mut reg, TOL).unwrap();
            assert!(out.eigenspace_residual < TOL);
            let ord = Ordering::site_major(&lat);
            let allowed: Vec<usize> = f.region.sites.iter().map(|s| s[0]).collect();
            assert!(out.qubit_support.iter().all(|q| qubits_of_sites(&allowed, &ord).contains(q)));
        }
        assert_eq!(reg.pairs().len(), 1, "ring of {n}");
        for (s, count) in reg.ancillas_per_site() {
            assert!(count <= 2 * lat.neighborhood(&s).len());
        }
    }
}

#[test]
fn torus_hopping_factor_becomes_qubit_local() {
    let mut lat = Lattice::new(vec![2, 2], vec![true, true], 1).unwrap();
    let (x, y) = (Mode::physical(vec![0, 0], 0), Mode::physical(vec![1, 0], 0));
    let ord0 = Ordering::site_major(&lat);
    let gen = SymbolicOperator::hopping(&x, &y).scale(C64::new(0.8, 0.0));
    let h = lower_on(&gen, &[x.clone(), y.clone()], &ord0).unwrap();
    let factor = LocalUnitaryFactor {
        matrix: h.map_matrix(|m| expm_herm(m, 1.0)),
        region: Region::new([x.site.clone(), y.site.clone()]),
        tag: FactorTag::OnSite,
        host: x.site.clone(),
        generator: Some(gen),
        group: 0,
    };
    let region_qubits = |ord: &Ordering| qubits_of_sites_2d(&[x.site.clone(), y.site.clone()], ord);
    assert!(!qubit_support(&factor.matrix, &ord0, 1e-13).unwrap().is_subset(&region_qubits(&ord0)));
    let mut reg = AncillaRegistry::new();
    let out = localize(&factor, &mut lat, &mut reg, TOL).unwrap();
    let ord = Ordering::site_major(&lat);
    assert_eq!(out.new_pairs.len(), 1);
    assert!(out.eigenspace_residual < TOL, "{}", out.eigenspace_residual);
    assert!(qubit_support(&out.factor.matrix, &ord, 1e-13).unwrap().is_subset(&region_qubits(&ord)));
}

fn qubits_of_sites_2d(sites: &[Vec<usize>], ord: &Ordering) -> BTreeSet<usize> {
    ord.modes().iter().enumerate().filter(|(_, m)| sites.contains(&m.site)).map(|(q, _)| q).collect()
}

fn monomial(letters: Vec<Letter>) -> Monomial {
    Monomial::new(C64::new(0.7, -0.2), letters)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn substituted_hopping_is_site_local_and_agrees_on_plus_space(x in 0usize..5, y in 0usize..5) {
        prop_assume!(x != y);
        let mut lat = Lattice::line(5, true, 1).unwrap();
        let mut reg = AncillaRegistry::new();
        let term = monomial(vec![Letter::Create(site(x)), Letter::Annihilate(site(y))]);
        let sub = substitute(&term, &mut lat, &mut reg).unwrap();
        let ord = Ordering::site_major(&lat);
        prop_assert!(jw(&sub, &ord).unwrap().support().is_subset(&qubits_of_sites(&[x, y], &ord)));
        let p = plus_projector(reg.pairs(), &ord).unwrap().to_full(&ord).unwrap();
        let orig = lower(&SymbolicOperator::from_terms(vec![term]), &ord).unwrap().to_full(&ord).unwrap();
        let repl = lower(&sub, &ord).unwrap().to_full(&ord).unwrap();
        prop_assert!((&orig.matmul(&p) - &repl.matmul(&p)).max_abs() < 1e-14);
    }

    #[test]
    fn substituted_quartic_agrees_on_plus_space(perm in Just((0usize..5).collect::<Vec<_>>()).prop_shuffle()) {
        let (w, x, y, z) = (perm[0], perm[1], perm[2], perm[3]);
        let mut lat = Lattice::line(5, true, 1).unwrap();
        let mut reg = AncillaRegistry::new();
        let term = monomial(vec![
            Letter::Create(site(w)),
            Letter::Create(site(x)),
            Letter::Annihilate(site(y)),
            Letter::Annihilate(site(z)),
        ]);
        let sub = substitute(&term, &mut lat, &mut reg).unwrap();
        prop_assert_eq!(reg.pairs().len(), 2);
        let ord = Ordering::site_major(&lat);
        let p = plus_projector(reg.pairs(), &ord).unwrap().to_full(&ord).unwrap();
        let orig = lower(&SymbolicOperator::from_terms(vec![term]), &ord).unwrap().to_full(&ord).unwrap();
        let repl = lower(&sub, &ord).unwrap().to_full(&ord).unwrap();
        prop_assert!((&orig.matmul(&p) - &repl.matmul(&p)).max_abs() < 1e-14);
    }
}
