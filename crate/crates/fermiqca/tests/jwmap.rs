use std::collections::BTreeSet;

use fermiqca::fock::{lower, lower_on, Lattice, Mode, Ordering};
use fermiqca::jwmap::{jw, jw_locality_report, qubit_support};
use fermiqca::linalg::{pauli_z, CMat, C64};
use fermiqca::symbolic::{Letter, Monomial, SymbolicOperator};
use proptest::prelude::*;

fn setup(n: usize, labels: usize) -> (Lattice, Ordering) {
    let lat = Lattice::line(n, false, labels).unwrap();
    let ord = Ordering::site_major(&lat);
    (lat, ord)
}

/// Z on every qubit below k, `op` on k, identity above, assembled by
/// Kronecker products (left factor = high bits).
fn string_oracle(op: &CMat, k: usize, n: usize) -> CMat {
    let mut low = CMat::identity(1);
    for _ in 0..k {
        low = pauli_z().kron(&low);
    }
    CMat::identity(1 << (n - 1 - k)).kron(&op.kron(&low))
}

fn lowering() -> CMat {
    CMat::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]])
}

/// Qubits on which `m` is not of the form I ⊗ m'.
fn nontrivial_qubits(m: &CMat, n: usize) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    for q in 0..n {
        let bit = 1 << q;
        let trivial = (0..m.rows()).all(|r| {
            (0..m.cols()).all(|c| {
                let z = m[(r, c)];
                if (r ^ c) & bit != 0 {
                    z.norm() < 1e-14
                } else {
                    (z - m[(r ^ bit, c ^ bit)]).norm() < 1e-14
                }
            })
        });
        if !trivial {
            out.insert(q);
        }
    }
    out
}

fn monomial(letters: &[(bool, usize)], coeff: (f64, f64), ord: &Ordering) -> SymbolicOperator {
    let ls = letters
        .iter()
        .map(|&(c, i)| {
            let m = ord.mode(i).clone();
            if c {
                Letter::Create(m)
            } else {
                Letter::Annihilate(m)
            }
        })
        .collect();
    SymbolicOperator::from_terms(vec![Monomial::new(C64::new(coeff.0, coeff.1), ls)])
}

fn letters(modes: usize, max_len: usize) -> impl Strategy<Value = Vec<(bool, usize)>> {
    prop::collection::vec((any::<bool>(), 0..modes), 1..=max_len)
}

#[test]
fn ladder_images_match_kronecker_strings() {
    let (_, ord) = setup(5, 1);
    for k in 0..5 {
        let m = ord.mode(k);
        let a = jw(&SymbolicOperator::annihilate(m), &ord).unwrap().to_matrix(5).unwrap();
        let expect = string_oracle(&lowering(), k, 5);
        assert!((&a - &expect).max_abs() < 1e-15, "mode {k}");
        let c = jw(&SymbolicOperator::create(m), &ord).unwrap().to_matrix(5).unwrap();
        assert!((&c - &expect.adjoint()).max_abs() < 1e-15, "mode {k}");
    }
}

#[test]
fn interior_hopping_on_doubled_site_is_local_but_wraparound_is_not() {
    let lat = Lattice::line(5, true, 2).unwrap();
    let ord = Ordering::site_major(&lat);
    let m = |s: usize, l: usize| Mode::physical(vec![s], l);
    let near = SymbolicOperator::hopping(&m(1, 1), &m(2, 0));
    assert!(jw_locality_report(&near, &ord, &lat).unwrap().all_local());
    let wrap = SymbolicOperator::hopping(&m(4, 1), &m(0, 0));
    let report = jw_locality_report(&wrap, &ord, &lat).unwrap();
    assert_eq!(report.flagged(), vec![0, 1]);
    assert_eq!(report.entries[0].qubit_support, (0..10).collect::<Vec<_>>());
}

proptest! {
    #[test]
    fn image_equals_fock_matrix(ls in letters(5, 4), re in -2.0f64..2.0, im in -2.0f64..2.0) {
        let (_, ord) = setup(5, 1);
        let s = monomial(&ls, (re, im), &ord);
        let pauli = jw(&s, &ord).unwrap().to_matrix(5).unwrap();
        let fock = lower(&s, &ord).unwrap().to_full(&ord).unwrap();
        prop_assert!((&pauli - &fock).max_abs() < 1e-13);
    }

    #[test]
    fn image_commutes_with_adjoint(ls in letters(4, 4), re in -2.0f64..2.0, im in -2.0f64..2.0) {
        let (_, ord) = setup(4, 1);
        let s = monomial(&ls, (re, im), &ord);
        let lhs = jw(&s.adjoint(), &ord).unwrap().to_matrix(4).unwrap();
        let rhs = jw(&s, &ord).unwrap().adjoint().to_matrix(4).unwrap();
        prop_assert!((&lhs - &rhs).max_abs() < 1e-13);
    }

    #[test]
    fn image_is_multiplicative(a in letters(4, 3), b in letters(4, 3)) {
        let (_, ord) = setup(4, 1);
        let (sa, sb) = (monomial(&a, (1.0, 0.5), &ord), monomial(&b, (-0.3, 1.0), &ord));
        let lhs = jw(&sa.mul(&sb), &ord).unwrap().to_matrix(4).unwrap();
        let rhs = jw(&sa, &ord).unwrap().mul(&jw(&sb, &ord).unwrap()).to_matrix(4).unwrap();
        prop_assert!((&lhs - &rhs).max_abs() < 1e-13);
    }

    #[test]
    fn even_same_site_monomials_stay_on_their_site(
        site in 0usize..3,
        labels in prop::collection::vec((any::<bool>(), 0usize..2), 1..3),
    ) {
        let (lat, ord) = setup(3, 2);
        let mut ls: Vec<(bool, usize)> = labels.iter().map(|&(c, l)| (c, 2 * site + l)).collect();
        if ls.len() % 2 == 1 {
            ls.push((true, 2 * site));
        }
        let s = monomial(&ls, (1.0, 0.0), &ord);
        let support = jw(&s, &ord).unwrap().support();
        prop_assert!(support.iter().all(|q| q / 2 == site));
        prop_assert!(jw_locality_report(&s, &ord, &lat).unwrap().all_local());
    }

    #[test]
    fn qubit_support_is_exact_for_distinct_letters(
        picks in prop::sample::subsequence((0usize..6).collect::<Vec<_>>(), 1..4),
        kinds in prop::collection::vec(any::<bool>(), 4),
    ) {
        let (_, ord) = setup(6, 1);
        let ls: Vec<(bool, usize)> = picks.iter().zip(&kinds).map(|(&q, &c)| (c, q)).collect();
        let s = monomial(&ls, (1.0, 0.0), &ord);
        let modes: Vec<Mode> = s.modes().into_iter().collect();
        let op = lower_on(&s, &modes, &ord).unwrap();
        let oracle = nontrivial_qubits(&op.to_full(&ord).unwrap(), 6);
        prop_assert_eq!(qubit_support(&op, &ord, 1e-12).unwrap(), oracle);
    }
}
