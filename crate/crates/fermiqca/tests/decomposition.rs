use fermiqca::causality::{parity_split, Region};
use fermiqca::decomposition::{
    build_ub, fermionic_swap, measurement_equivalence_check, random_causal_brickwork, theorem1_factorize, DoubledSystem, FactorTag,
};
use fermiqca::fock::{lower_on, Lattice, MatrixOperator, Mode, ModeKind, StateVector};
use fermiqca::linalg::{CMat, C64};
use fermiqca::rng::{complex_normal, random_hermitian, seeded};
use fermiqca::symbolic::SymbolicOperator;
use proptest::prelude::*;

const TOL: f64 = 1e-10;

fn doubled(n: usize, periodic: bool) -> DoubledSystem {
    DoubledSystem::new(&Lattice::line(n, periodic, 1).unwrap()).unwrap()
}

fn annihilator(m: &Mode, d: &DoubledSystem) -> MatrixOperator {
    lower_on(&SymbolicOperator::annihilate(m), &[m.clone()], &d.ordering).unwrap()
}

/// Random unit vector with every copy mode empty.
fn physical_state(d: &DoubledSystem, seed: u64) -> StateVector {
    let copy_mask = d
        .ordering
        .modes()
        .iter()
        .enumerate()
        .filter(|(_, m)| m.kind == ModeKind::Copy)
        .fold(0usize, |acc, (p, _)| acc | 1 << p);
    let mut rng = seeded(seed);
    let amps = (0..1usize << d.ordering.len())
        .map(|n| if n & copy_mask == 0 { complex_normal(&mut rng) } else { C64::new(0.0, 0.0) })
        .collect();
    StateVector::new(amps).unwrap().normalized()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn swap_exchanges_exactly_one_pair(x in 0usize..5, y in 0usize..5) {
        prop_assume!(x != y);
        let lat = Lattice::line(5, false, 1).unwrap();
        let ord = fermiqca::fock::Ordering::site_major(&lat);
        let s = fermionic_swap(ord.mode(x), ord.mode(y), &ord).unwrap();
        let a = |k: usize| lower_on(&SymbolicOperator::annihilate(ord.mode(k)), &[ord.mode(k).clone()], &ord).unwrap();
        for z in 0..5 {
            let image = s.mul(&a(z), &ord).unwrap().mul(&s, &ord).unwrap();
            let target = if z == x { a(y) } else if z == y { a(x) } else { a(z) };
            prop_assert!(image.distance(&target, &ord).unwrap() < 1e-14);
        }
    }

    #[test]
    fn factors_multiply_to_ua_ub_dagger(seed in any::<u64>(), periodic in any::<bool>()) {
        let d = doubled(3, periodic);
        let mut rng = seeded(seed);
        let u = random_causal_brickwork(&d.base, &d.physical_ordering(), &mut rng).unwrap();
        let res = theorem1_factorize(&u, &d, TOL).unwrap();
        let ord = &d.ordering;
        let mut product = CMat::identity(1 << ord.len());
        for f in &res.factors {
            product = f.matrix.to_full(ord).unwrap().matmul(&product);
        }
        let target = u.to_full(ord).unwrap().matmul(&res.u_b.to_full(ord).unwrap().adjoint());
        prop_assert!((&product - &target).spectral_norm() < TOL);
        for f in res.factors.iter().filter(|f| f.tag == FactorTag::ConjugatedSwap) {
            prop_assert_eq!(&f.region, &Region::neighborhood(&d.lattice, &f.host));
            let (odd, _) = parity_split(&f.matrix);
            prop_assert!(odd.matrix().max_abs() < 1e-12);
        }
    }

    #[test]
    fn conjugated_copy_annihilators_stay_odd(seed in any::<u64>()) {
        let d = doubled(3, false);
        let mut rng = seeded(seed);
        let u = random_causal_brickwork(&d.base, &d.physical_ordering(), &mut rng).unwrap();
        let u_b = build_ub(&u, &d).unwrap();
        for y in d.physical_modes() {
            let b = annihilator(&y.copy_of(), &d);
            let image = u_b.mul(&b, &d.ordering).unwrap().mul(&u_b.adjoint(), &d.ordering).unwrap();
            let (_, even) = parity_split(&image);
            prop_assert!(even.matrix().max_abs() < 1e-12);
        }
    }

    #[test]
    fn copies_are_invisible_to_physical_measurements(seed in any::<u64>()) {
        let d = doubled(3, false);
        let mut rng = seeded(seed);
        let u = random_causal_brickwork(&d.base, &d.physical_ordering(), &mut rng).unwrap();
        let phys = d.physical_modes();
        let m = MatrixOperator::new(phys.clone(), random_hermitian(1 << phys.len(), &mut rng)).unwrap();
        let psi = physical_state(&d, seed ^ 0x5eed);
        prop_assert!(measurement_equivalence_check(&u, &d, &m, &psi).unwrap() < 1e-12);
    }
}
