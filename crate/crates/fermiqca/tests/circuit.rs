use fermiqca::circuit::{compile, compile_dirac1d, prepare_majorana_circuit, simulate, Circuit};
use fermiqca::decomposition::{random_causal_brickwork, theorem1_factorize, DoubledSystem};
use fermiqca::dirac1d::{build_step, DiracParams};
use fermiqca::fock::{Lattice, Mode, Ordering};
use fermiqca::linalg::{fidelity, vec_norm, C64, ZERO};
use fermiqca::majorana::{plus_projector, prepare_plus_state, AncillaPair, AncillaRegistry};
use fermiqca::rng::{random_state, seeded};

fn normalized(mut v: Vec<C64>) -> Vec<C64> {
    let n = vec_norm(&v);
    v.iter_mut().for_each(|z| *z /= n);
    v
}

#[test]
fn dirac_ring_of_three_matches_fock_evolution() {
    let params = DiracParams::new(3, 0.4).unwrap();
    let model = compile_dirac1d(&params, 5, 1e-10).unwrap();
    assert_eq!(model.registry.pairs().len(), 1);
    assert!(model.max_eigenspace_residual < 1e-12);
    let ord = &model.ordering;
    let proj = plus_projector(model.registry.pairs(), ord).unwrap();
    let step = build_step(&params, ord).unwrap();
    let mut rng = seeded(3);
    for _ in 0..3 {
        let raw = random_state(1 << ord.len(), &mut rng);
        let mut psi = raw.clone();
        proj.apply_in_place(&mut psi, ord).unwrap();
        let psi = normalized(psi);
        let mut expect = psi.clone();
        for _ in 0..5 {
            step.apply_in_place(&mut expect, ord).unwrap();
        }
        let got = simulate(&model.circuit, &psi).unwrap();
        assert!(fidelity(&got, &expect) >= 1.0 - 1e-9);
    }
}

#[test]
fn dirac_depth_is_independent_of_ring_size() {
    let a = compile_dirac1d(&DiracParams::new(9, 0.3).unwrap(), 1, 1e-10).unwrap();
    let b = compile_dirac1d(&DiracParams::new(15, 0.3).unwrap(), 1, 1e-10).unwrap();
    assert_eq!(a.circuit.depth(), b.circuit.depth());
    assert_eq!(a.circuit.gate_count() * 15, b.circuit.gate_count() * 9);
    assert_eq!(a.circuit.depth(), 4);
    assert!(a.circuit.gates().all(|g| g.qubits.len() <= fermiqca::circuit::MAX_GATE_QUBITS));
}

#[test]
fn zero_steps_compile_to_empty_circuit() {
    let m = compile_dirac1d(&DiracParams::new(5, 0.0).unwrap(), 0, 1e-10).unwrap();
    assert_eq!(m.circuit.gate_count(), 0);
}

#[test]
fn compiled_dirac_circuit_survives_json() {
    let m = compile_dirac1d(&DiracParams::new(5, 0.7).unwrap(), 2, 1e-10).unwrap();
    let text = m.circuit.to_json();
    assert_eq!(Circuit::from_json(&text).unwrap(), m.circuit);
}

#[test]
fn unrepaired_boundary_swap_is_rejected() {
    let params = DiracParams::new(5, 0.2).unwrap();
    let ord = Ordering::site_major(&params.lattice());
    let factors = fermiqca::dirac1d::swap_decompose_t(&params, &ord).unwrap();
    let err = compile(&factors, &ord, 1e-10).unwrap_err();
    assert!(matches!(err, fermiqca::Error::Contract(_)), "{err}");
}

fn pair_lattice(sites: usize) -> (Lattice, AncillaRegistry) {
    let mut lattice = Lattice::line(sites, false, 1).unwrap();
    let mut reg = AncillaRegistry::new();
    reg.get_or_add(&mut lattice, &[0], &[sites - 1]).unwrap();
    if sites > 2 {
        reg.get_or_add(&mut lattice, &[1], &[sites - 2]).unwrap();
    }
    (lattice, reg)
}

#[test]
fn majorana_preparation_matches_plus_state() {
    for sites in [2usize, 4, 5] {
        let (lattice, reg) = pair_lattice(sites);
        let ord = Ordering::site_major(&lattice);
        let c = prepare_majorana_circuit(reg.pairs(), &ord).unwrap();
        let mut zero = vec![ZERO; 1 << c.num_qubits];
        zero[0] = C64::new(1.0, 0.0);
        let out = simulate(&c, &zero).unwrap();
        let target = prepare_plus_state(reg.pairs(), &ord).unwrap();
        let n = ord.len();
        // flags end up back in |0>
        let leaked: f64 = out.iter().skip(1 << n).map(|z| z.norm_sqr()).sum();
        assert!(leaked < 1e-20);
        assert!(fidelity(&out[..1 << n], &target.amps) >= 1.0 - 1e-10);
    }
}

#[test]
fn adjacent_pair_needs_no_flags() {
    let pair = AncillaPair {
        id: 0,
        c_at_x: Mode::ancilla(vec![0], 0),
        c_at_y: Mode::ancilla(vec![1], 0),
    };
    let ord = Ordering::from_modes(vec![pair.c_at_x.clone(), pair.c_at_y.clone()]).unwrap();
    let c = prepare_majorana_circuit(std::slice::from_ref(&pair), &ord).unwrap();
    assert_eq!(c.num_qubits, 2);
    assert_eq!(c.gate_count(), 1);
}

#[test]
fn theorem1_factors_compile_to_swapped_unitary() {
    let doubled = DoubledSystem::new(&Lattice::line(3, false, 1).unwrap()).unwrap();
    let ord = &doubled.ordering;
    let mut rng = seeded(21);
    let u = random_causal_brickwork(&doubled.base, &doubled.physical_ordering(), &mut rng).unwrap();
    let res = theorem1_factorize(&u, &doubled, 1e-10).unwrap();
    let c = compile(&res.factors, ord, 1e-10).unwrap();
    let phys = doubled.physical_ordering();
    let ub_dag = res.u_b.adjoint();
    for _ in 0..20 {
        let small = random_state(1 << phys.len(), &mut rng);
        let mut psi = vec![ZERO; 1 << ord.len()];
        for (i, z) in small.iter().enumerate() {
            let full = (0..phys.len())
                .filter(|b| i >> b & 1 == 1)
                .map(|b| 1usize << ord.pi(phys.mode(b)).unwrap())
                .sum::<usize>();
            psi[full] = *z;
        }
        let mut expect = psi.clone();
        ub_dag.apply_in_place(&mut expect, ord).unwrap();
        u.apply_in_place(&mut expect, ord).unwrap();
        let got = simulate(&c, &psi).unwrap();
        let diff: f64 = got.iter().zip(&expect).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        assert!(diff < 1e-9, "{diff}");
    }
}
