use fermiqca::causality::{
    causality_report, check_lemma1, heisenberg_image, is_causal, is_localized, lemma2_even_parts, localization_residual,
    outside_anticommutator_norm, parity_split, Region,
};
use fermiqca::decomposition::{fermionic_swap, random_causal_brickwork};
use fermiqca::fock::{lower_on, Lattice, MatrixOperator, Mode, Ordering};
use fermiqca::rng::{random_hermitian, seeded};
use fermiqca::symbolic::SymbolicOperator;
use proptest::prelude::*;

const TOL: f64 = 1e-10;

fn setup(n: usize) -> (Lattice, Ordering) {
    let lat = Lattice::line(n, false, 1).unwrap();
    let ord = Ordering::site_major(&lat);
    (lat, ord)
}

/// Random Hermitian operator on the modes of `sites`, written on all modes.
fn random_on(sites: &[usize], ord: &Ordering, seed: u64) -> MatrixOperator {
    let modes: Vec<Mode> = ord.modes().iter().filter(|m| sites.contains(&m.site[0])).cloned().collect();
    let mut rng = seeded(seed);
    let op = MatrixOperator::new(modes.clone(), random_hermitian(1 << modes.len(), &mut rng)).unwrap();
    op.embed(ord.modes(), ord).unwrap()
}

fn region_from_mask(mask: u32, n: usize) -> Region {
    Region::new((0..n).filter(|s| mask >> s & 1 == 1).map(|s| vec![s]))
}

fn sites_strategy(n: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::sample::subsequence((0..n).collect::<Vec<_>>(), 1..=2)
}

#[test]
fn swap_maps_annihilators_and_breaks_causality_only_at_its_ends() {
    let (lat, ord) = setup(5);
    let (a, b) = (ord.mode(0).clone(), ord.mode(3).clone());
    let s = fermionic_swap(&a, &b, &ord).unwrap();
    let img = heisenberg_image(&s, &a, &ord).unwrap();
    let target = lower_on(&SymbolicOperator::annihilate(&b), &[b.clone()], &ord).unwrap();
    assert!(img.distance(&target, &ord).unwrap() < 1e-14);
    assert!(!is_causal(&s, &lat, &ord, TOL).unwrap());
    let failing: Vec<String> = causality_report(&s, &lat, &ord, TOL).unwrap().into_iter().filter(|r| !r.pass).map(|r| r.mode).collect();
    assert_eq!(failing, vec![a.to_string(), b.to_string()]);
}

#[test]
fn neighbor_swap_is_causal_and_odd_preserving() {
    let (lat, ord) = setup(4);
    let s = fermionic_swap(ord.mode(1), ord.mode(2), &ord).unwrap();
    assert!(check_lemma1(&s, &lat, &ord, TOL).unwrap().pass);
    assert!(lemma2_even_parts(&s, &ord).unwrap().iter().all(|p| p.even_norm < 1e-14));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn localization_holds_exactly_on_supersets(sites in sites_strategy(4), seed in any::<u64>()) {
        let (_, ord) = setup(4);
        let op = random_on(&sites, &ord, seed);
        for mask in 0u32..16 {
            let region = region_from_mask(mask, 4);
            let covers = sites.iter().all(|s| region.contains_site(&[*s]));
            prop_assert_eq!(is_localized(&op, &region, &ord, TOL).unwrap(), covers, "mask {}", mask);
            if covers {
                prop_assert!(localization_residual(&op, &region, &ord, TOL).unwrap() < 1e-12);
            }
        }
    }

    #[test]
    fn odd_operators_localize_where_they_anticommute(sites in sites_strategy(4), seed in any::<u64>()) {
        let (_, ord) = setup(4);
        let (odd, _) = parity_split(&random_on(&sites, &ord, seed));
        for mask in 0u32..16 {
            let region = region_from_mask(mask, 4);
            let anti = outside_anticommutator_norm(&odd, &region, &ord).unwrap();
            let local = is_localized(&odd, &region, &ord, TOL).unwrap();
            prop_assert_eq!(anti < TOL, local, "mask {} anticommutator {}", mask, anti);
        }
    }

    #[test]
    fn composing_two_causal_unitaries_spreads_at_most_two_sites(seed in any::<u64>()) {
        let (lat, ord) = setup(6);
        let mut rng = seeded(seed);
        let u = random_causal_brickwork(&lat, &ord, &mut rng).unwrap();
        let v = random_causal_brickwork(&lat, &ord, &mut rng).unwrap();
        prop_assert!(is_causal(&u, &lat, &ord, TOL).unwrap());
        prop_assert!(is_causal(&v, &lat, &ord, TOL).unwrap());
        let w = u.mul(&v, &ord).unwrap();
        for m in ord.modes() {
            let img = heisenberg_image(&w, m, &ord).unwrap();
            prop_assert!(is_localized(&img, &Region::around(&lat, &m.site, 2), &ord, TOL).unwrap());
        }
        prop_assert!(lemma2_even_parts(&w, &ord).unwrap().iter().all(|p| p.even_norm < 1e-12));
    }
}
