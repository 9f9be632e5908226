//! Named verification suites with JSON reports.
//!
//! Every suite is a pure function of its configuration: the same seed gives a
//! byte-identical report.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::causality::{causality_report, check_lemma1, lemma2_even_parts, Region};
use crate::circuit::{circuit_unitary, compile, compile_dirac1d, parity_ladder, prepare_majorana_circuit, simulate, Circuit};
use crate::decomposition::{
    check_theorem1, fermionic_swap, random_causal_brickwork, shift_swap_search, theorem1_factorize, DoubledSystem,
    FactorTag, LocalUnitaryFactor,
};
use crate::dirac1d::{build_step, DiracParams};
use crate::error::{domain, Error, Result};
use crate::fock::{creation_matrix, lower, lower_on, max_modes, Lattice, MatrixOperator, Mode, Ordering};
use crate::jwmap::jw;
use crate::linalg::{expm_herm, fidelity, vec_norm, CMat, C64, ONE, ZERO};
use crate::majorana::{localize, pair_operator, plus_projector, prepare_plus_state, AncillaRegistry};
use crate::rng::{below, complex_normal, random_state, seeded, Rng};
use crate::symbolic::{Letter, Monomial, SymbolicOperator};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Car,
    Jw,
    Causality,
    Theorem1,
    Lemma1,
    Lemma2,
    Majorana,
    Circuit,
    Endtoend,
}

impl Suite {
    pub const ALL: [Suite; 9] = [
        Suite::Car,
        Suite::Jw,
        Suite::Causality,
        Suite::Theorem1,
        Suite::Lemma1,
        Suite::Lemma2,
        Suite::Majorana,
        Suite::Circuit,
        Suite::Endtoend,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Car => "car",
            Suite::Jw => "jw",
            Suite::Causality => "causality",
            Suite::Theorem1 => "theorem1",
            Suite::Lemma1 => "lemma1",
            Suite::Lemma2 => "lemma2",
            Suite::Majorana => "majorana",
            Suite::Circuit => "circuit",
            Suite::Endtoend => "endtoend",
        }
    }

    /// Mode count used when none is given.
    pub fn default_modes(self) -> usize {
        match self {
            Suite::Car | Suite::Jw | Suite::Theorem1 | Suite::Lemma1 | Suite::Lemma2 => 6,
            Suite::Causality | Suite::Majorana | Suite::Circuit => 5,
            Suite::Endtoend => 3,
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Domain(format!("unknown suite '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteConfig {
    pub modes: Option<usize>,
    pub seed: u64,
    pub tol: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig { modes: None, seed: 0, tol: 1e-10 }
    }
}

/// One assertion. `pass` is `value <= tolerance` unless `expect_above`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub expect_above: bool,
    pub pass: bool,
}

impl Check {
    pub fn below(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Check { name: name.into(), value, tolerance, expect_above: false, pass: value <= tolerance }
    }

    pub fn above(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check { name: name.into(), value, tolerance: threshold, expect_above: true, pass: value > threshold }
    }

    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Check::below(name, if ok { 0.0 } else { 1.0 }, 0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub modes: usize,
    pub seed: u64,
    pub tol: f64,
    pub pass: bool,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

pub fn run_suite(suite: Suite, cfg: &SuiteConfig) -> Result<SuiteReport> {
    let modes = cfg.modes.unwrap_or(suite.default_modes());
    if modes == 0 {
        return domain("--modes must be positive");
    }
    let mut rng = seeded(cfg.seed);
    let tol = cfg.tol;
    let checks = match suite {
        Suite::Car => car_suite(modes)?,
        Suite::Jw => jw_suite(modes, 200, &mut rng)?,
        Suite::Causality => causality_suite(modes, tol, &mut rng)?,
        Suite::Theorem1 => theorem1_suite(modes, 3, tol, &mut rng)?,
        Suite::Lemma1 => lemma_suite(modes, 3, tol, true, &mut rng)?,
        Suite::Lemma2 => lemma_suite(modes, 3, tol, false, &mut rng)?,
        Suite::Majorana => majorana_suite(modes, tol)?,
        Suite::Circuit => circuit_suite(modes, tol)?,
        Suite::Endtoend => endtoend_suite(modes, tol, &mut rng)?,
    };
    Ok(SuiteReport {
        suite: suite.name().into(),
        modes,
        seed: cfg.seed,
        tol,
        pass: checks.iter().all(|c| c.pass),
        checks,
    })
}

fn check_cap(modes: usize) -> Result<()> {
    if modes > max_modes() {
        return Err(Error::Resource(format!("{modes} modes exceed the dense cap of {}", max_modes())));
    }
    Ok(())
}

/// Column map of a matrix with at most one nonzero per column.
fn column_map(m: &CMat) -> Option<Vec<Option<(usize, C64)>>> {
    (0..m.cols())
        .map(|c| {
            let nz: Vec<usize> = (0..m.rows()).filter(|&r| m[(r, c)] != ZERO).collect();
            match nz.as_slice() {
                [] => Some(None),
                [r] => Some(Some((*r, m[(*r, c)]))),
                _ => None,
            }
        })
        .collect()
}

type ColumnMap = Vec<Option<(usize, C64)>>;

fn compose(a: &ColumnMap, b: &ColumnMap) -> ColumnMap {
    b.iter().map(|e| e.and_then(|(r, z)| a[r].map(|(r2, w)| (r2, w * z)))).collect()
}

/// max |({A,B} − δ I)_{rc}| for column-map matrices, computed exactly.
fn anticommutator_defect(a: &ColumnMap, b: &ColumnMap, delta: bool) -> f64 {
    let ab = compose(a, b);
    let ba = compose(b, a);
    let dim = a.len();
    let mut worst = 0.0f64;
    for c in 0..dim {
        let mut col: Vec<(usize, C64)> = Vec::new();
        for e in [ab[c], ba[c]].into_iter().flatten() {
            match col.iter_mut().find(|(r, _)| *r == e.0) {
                Some(x) => x.1 += e.1,
                None => col.push(e),
            }
        }
        if delta {
            match col.iter_mut().find(|(r, _)| *r == c) {
                Some(x) => x.1 -= ONE,
                None => col.push((c, -ONE)),
            }
        }
        for (_, z) in col {
            worst = worst.max(z.norm());
        }
    }
    worst
}

fn car_suite(modes: usize) -> Result<Vec<Check>> {
    check_cap(modes)?;
    let lattice = Lattice::line(modes, false, 1)?;
    let ord = Ordering::site_major(&lattice);
    let mut create = Vec::with_capacity(modes);
    let mut annihilate = Vec::with_capacity(modes);
    for m in ord.modes() {
        let full = creation_matrix(m, &ord)?.to_full(&ord)?;
        let cm = column_map(&full).ok_or_else(|| Error::Contract(format!("creation matrix of {m} is not monomial")))?;
        let am = column_map(&full.adjoint()).expect("adjoint of a monomial matrix");
        create.push(cm);
        annihilate.push(am);
    }
    let (mut aa, mut ad) = (0.0f64, 0.0f64);
    for i in 0..modes {
        for j in 0..modes {
            aa = aa.max(anticommutator_defect(&annihilate[i], &annihilate[j], false));
            aa = aa.max(anticommutator_defect(&create[i], &create[j], false));
            ad = ad.max(anticommutator_defect(&annihilate[i], &create[j], i == j));
        }
    }
    Ok(vec![Check::below("anticommutator_aa", aa, 0.0), Check::below("anticommutator_a_adag", ad, 0.0)])
}

/// Product of 1..=4 random ladder letters with a Gaussian coefficient.
pub fn random_monomial(ordering: &Ordering, rng: &mut Rng) -> SymbolicOperator {
    let len = 1 + below(rng, 4);
    let letters = (0..len)
        .map(|_| {
            let m = ordering.mode(below(rng, ordering.len())).clone();
            if below(rng, 2) == 0 {
                Letter::Create(m)
            } else {
                Letter::Annihilate(m)
            }
        })
        .collect();
    SymbolicOperator::from_terms(vec![Monomial::new(complex_normal(rng), letters)])
}

fn jw_suite(modes: usize, samples: usize, rng: &mut Rng) -> Result<Vec<Check>> {
    check_cap(modes)?;
    let ord = Ordering::site_major(&Lattice::line(modes, false, 1)?);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let op = random_monomial(&ord, rng);
        let q = jw(&op, &ord)?.to_matrix(modes)?;
        let f = lower(&op, &ord)?.to_full(&ord)?;
        worst = worst.max((&q - &f).frobenius_norm());
    }
    Ok(vec![Check::below(format!("jw_vs_lower_{samples}_monomials"), worst, 1e-13)])
}

fn causality_suite(modes: usize, tol: f64, rng: &mut Rng) -> Result<Vec<Check>> {
    check_cap(modes)?;
    if modes < 2 {
        return domain("causality suite needs at least 2 sites");
    }
    let lattice = Lattice::line(modes, false, 1)?;
    let ord = Ordering::site_major(&lattice);
    let mut worst = 0.0f64;
    for _ in 0..3 {
        let u = random_causal_brickwork(&lattice, &ord, rng)?;
        for r in causality_report(&u, &lattice, &ord, tol)? {
            worst = worst.max(r.residual_norm);
        }
    }
    let mut checks = vec![Check::below("brickwork_causal", worst, tol)];
    if modes >= 4 {
        let s = fermionic_swap(ord.mode(0), ord.mode(modes - 1), &ord)?;
        let leak = causality_report(&s, &lattice, &ord, tol)?.iter().map(|r| r.residual_norm).fold(0.0, f64::max);
        checks.push(Check::above("distant_swap_detected_noncausal", leak, tol));
    }
    checks.push(Check::holds("shift_ring3_depth2_swap_product_exists", shift_swap_search(3, 2).is_some()));
    for n in 4..=6 {
        checks.push(Check::holds(format!("shift_ring{n}_no_depth2_swap_product"), shift_swap_search(n, 2).is_none()));
    }
    Ok(checks)
}

/// Base line for a physical mode count: two labels per site when even and at
/// least 4, otherwise one.
pub fn base_line(modes: usize) -> Result<Lattice> {
    if modes >= 4 && modes % 2 == 0 {
        Lattice::line(modes / 2, false, 2)
    } else {
        Lattice::line(modes, false, 1)
    }
}

fn theorem1_suite(modes: usize, samples: usize, tol: f64, rng: &mut Rng) -> Result<Vec<Check>> {
    check_cap(2 * modes)?;
    let doubled = DoubledSystem::new(&base_line(modes)?)?;
    let phys = doubled.physical_ordering();
    let mut checks = Vec::new();
    for i in 0..samples {
        let u = random_causal_brickwork(&doubled.base, &phys, rng)?;
        let res = theorem1_factorize(&u, &doubled, tol)?;
        let chk = check_theorem1(&u, &doubled, &res, 1, rng, tol)?;
        checks.push(Check::below(format!("sample{i}_product_residual_{}", chk.method), chk.product_residual, tol));
        checks.push(Check::below(format!("sample{i}_probe_residual"), chk.probe_residual, tol));
        checks.push(Check::below(format!("sample{i}_localization"), chk.max_localization_residual, tol));
        checks.push(Check::below(format!("sample{i}_conjugated_swaps_commute"), chk.max_commutator, tol));
    }
    Ok(checks)
}

fn lemma_suite(modes: usize, samples: usize, tol: f64, first: bool, rng: &mut Rng) -> Result<Vec<Check>> {
    check_cap(modes)?;
    let lattice = base_line(modes)?;
    let ord = Ordering::site_major(&lattice);
    let mut checks = Vec::new();
    for i in 0..samples {
        let u = random_causal_brickwork(&lattice, &ord, rng)?;
        if first {
            let rep = check_lemma1(&u, &lattice, &ord, tol)?;
            let worst = rep.inverse.iter().map(|r| r.residual_norm).fold(0.0, f64::max);
            checks.push(Check::below(format!("sample{i}_inverse_causal"), worst, tol));
        } else {
            let worst = lemma2_even_parts(&u, &ord)?.iter().map(|p| p.even_norm).fold(0.0, f64::max);
            checks.push(Check::below(format!("sample{i}_image_even_part"), worst, 1e-12));
        }
    }
    Ok(checks)
}

fn ring_sites(modes: usize) -> Result<usize> {
    if modes < 3 || modes % 2 == 0 {
        return domain(format!("ring size must be odd and at least 3, got {modes}"));
    }
    Ok(modes)
}

fn exp_factor(
    h: &SymbolicOperator,
    support: &[Mode],
    region: Region,
    host: Vec<usize>,
    ordering: &Ordering,
) -> Result<LocalUnitaryFactor> {
    let m = lower_on(h, support, ordering)?;
    Ok(LocalUnitaryFactor {
        matrix: m.map_matrix(|x| expm_herm(x, 1.0)),
        region,
        tag: FactorTag::OnSite,
        host,
        generator: Some(h.clone()),
        group: 0,
    })
}

fn majorana_suite(modes: usize, tol: f64) -> Result<Vec<Check>> {
    let n = ring_sites(modes)?;
    let base = Lattice::line(n, true, 2)?;
    let ord0 = Ordering::site_major(&base);
    let (x, y) = (vec![n - 1], vec![0]);
    let region = Region::new([x.clone(), y.clone()]);
    let r = |s: &[usize]| Mode::physical(s.to_vec(), 1);
    let l = |s: &[usize]| Mode::physical(s.to_vec(), 0);
    let h1 = SymbolicOperator::hopping(&r(&x), &r(&y)).scale(C64::new(0.3, 0.0));
    let h2 = SymbolicOperator::hopping(&l(&y), &l(&x))
        .scale(C64::new(0.7, 0.0))
        .add(&SymbolicOperator::number(&l(&x)).scale(C64::new(0.2, 0.0)));
    let f1 = exp_factor(&h1, &[r(&x), r(&y)], region.clone(), x.clone(), &ord0)?;
    let f2 = exp_factor(&h2, &[l(&x), l(&y)], region, x.clone(), &ord0)?;

    let run = |order: [&LocalUnitaryFactor; 2]| -> Result<(Lattice, AncillaRegistry, Vec<MatrixOperator>, f64)> {
        let mut lat = base.clone();
        let mut reg = AncillaRegistry::new();
        let mut out = Vec::new();
        let mut worst = 0.0f64;
        for f in order {
            let loc = localize(f, &mut lat, &mut reg, tol)?;
            worst = worst.max(loc.eigenspace_residual);
            out.push(loc.factor.matrix);
        }
        Ok((lat, reg, out, worst))
    };
    let (lat, reg, fwd, worst_fwd) = run([&f1, &f2])?;
    let (_, _, rev, worst_rev) = run([&f2, &f1])?;
    let ord = Ordering::site_major(&lat);
    let order_dep = fwd[0].distance(&rev[1], &ord)?.max(fwd[1].distance(&rev[0], &ord)?);

    let proj = plus_projector(reg.pairs(), &ord)?;
    let repaired = fwd[0].mul(&fwd[1], &ord)?.mul(&proj, &ord)?;
    let original = f1.matrix.mul(&f2.matrix, &ord)?.mul(&proj, &ord)?;
    let product_dev = repaired.distance(&original, &ord)?;

    let psi = prepare_plus_state(reg.pairs(), &ord)?;
    let mut eig = 0.0f64;
    for p in reg.pairs() {
        let m = pair_operator(p, &ord)?;
        let mpsi = m.apply(&psi, &ord)?;
        eig = eig.max(mpsi.amps.iter().zip(&psi.amps).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt());
    }
    Ok(vec![
        Check::below("pairs_registered", reg.pairs().len() as f64 - 1.0, 0.0),
        Check::below("repaired_agree_on_plus_eigenspace", worst_fwd.max(worst_rev), tol),
        Check::below("repaired_product_on_plus_eigenspace", product_dev, tol),
        Check::below("registration_order_independence", order_dep, tol),
        Check::below("plus_state_eigenvalue", eig, 1e-12),
    ])
}

fn fock_reference(params: &DiracParams, ord: &Ordering, psi: &[C64], steps: usize) -> Result<Vec<C64>> {
    let step = build_step(params, ord)?;
    let mut v = psi.to_vec();
    for _ in 0..steps {
        step.apply_in_place(&mut v, ord)?;
    }
    Ok(v)
}

fn plus_projected_state(reg: &AncillaRegistry, ord: &Ordering, rng: &mut Rng) -> Result<Vec<C64>> {
    let mut psi = random_state(1 << ord.len(), rng);
    plus_projector(reg.pairs(), ord)?.apply_in_place(&mut psi, ord)?;
    let n = vec_norm(&psi);
    Ok(psi.into_iter().map(|z| z / n).collect())
}

fn ladder_identity_residual(targets: &[usize], flag: usize, n: usize) -> Result<f64> {
    let ladder = circuit_unitary(&parity_ladder(targets, flag, n)?)?;
    let z_on = |qs: &[usize]| {
        let d = 1usize << n;
        CMat::from_fn(d, d, |r, c| {
            if r != c {
                ZERO
            } else if qs.iter().filter(|&&q| r >> q & 1 == 1).count() % 2 == 1 {
                -ONE
            } else {
                ONE
            }
        })
    };
    let mut all = targets.to_vec();
    all.push(flag);
    let lhs = z_on(&[flag]).matmul(&ladder);
    let rhs = ladder.matmul(&z_on(&all));
    Ok((&lhs - &rhs).max_abs())
}

fn circuit_suite(modes: usize, tol: f64) -> Result<Vec<Check>> {
    let n = ring_sites(modes)?;
    let mut checks = Vec::new();

    checks.push(Check::below("ladder_identity_5_qubits", ladder_identity_residual(&[0, 1, 2, 3], 4, 5)?, 1e-13));
    let ladder = parity_ladder(&[0, 1, 2, 3], 4, 5)?;
    checks.push(Check::holds("ladder_gate_count_equals_targets", ladder.gate_count() == 4));

    let a = compile_dirac1d(&DiracParams::new(n, 0.3)?, 1, tol)?;
    let b = compile_dirac1d(&DiracParams::new(n + 6, 0.3)?, 1, tol)?;
    checks.push(Check::holds("depth_independent_of_ring_size", a.circuit.depth() == b.circuit.depth()));
    checks.push(Check::holds(
        "gate_count_linear_in_ring_size",
        a.circuit.gate_count() * (n + 6) == b.circuit.gate_count() * n,
    ));
    checks.push(Check::below("boundary_repair_eigenspace_residual", a.max_eigenspace_residual, tol));
    let json_ok = Circuit::from_json(&a.circuit.to_json()).map(|c| c == a.circuit).unwrap_or(false);
    checks.push(Check::holds("json_round_trip", json_ok));

    let ord = &a.ordering;
    let prep = prepare_majorana_circuit(a.registry.pairs(), ord)?;
    if prep.num_qubits <= max_modes() {
        let mut zero = vec![ZERO; 1 << prep.num_qubits];
        zero[0] = ONE;
        let out = simulate(&prep, &zero)?;
        let target = prepare_plus_state(a.registry.pairs(), ord)?;
        let f = fidelity(&out[..1 << ord.len()], &target.amps);
        checks.push(Check::below("majorana_preparation_infidelity", 1.0 - f, 1e-10));
    }
    Ok(checks)
}

fn endtoend_suite(modes: usize, tol: f64, rng: &mut Rng) -> Result<Vec<Check>> {
    let n = ring_sites(modes)?;
    let params = DiracParams::new(n, 0.4)?;
    let model = compile_dirac1d(&params, 5, tol)?;
    let ord = &model.ordering;
    check_cap(ord.len())?;
    let mut worst = 0.0f64;
    for _ in 0..3 {
        let psi = plus_projected_state(&model.registry, ord, rng)?;
        let expect = fock_reference(&params, ord, &psi, 5)?;
        let got = simulate(&model.circuit, &psi)?;
        worst = worst.max(1.0 - fidelity(&got, &expect));
    }
    let mut checks = vec![Check::below("dirac_circuit_vs_fock_5_steps_infidelity", worst, 1e-9)];

    let doubled = DoubledSystem::new(&Lattice::line(3, false, 1)?)?;
    let dord = &doubled.ordering;
    let phys = doubled.physical_ordering();
    let u = random_causal_brickwork(&doubled.base, &phys, rng)?;
    let res = theorem1_factorize(&u, &doubled, tol)?;
    let circ = compile(&res.factors, dord, tol)?;
    let ub_dag = res.u_b.adjoint();
    let copy_mask: usize =
        (0..dord.len()).filter(|&q| dord.mode(q).kind != crate::fock::ModeKind::Physical).map(|q| 1 << q).sum();
    let mut dev = 0.0f64;
    for _ in 0..5 {
        let mut psi = random_state(1 << dord.len(), rng);
        psi.iter_mut().enumerate().filter(|(i, _)| i & copy_mask != 0).for_each(|(_, z)| *z = ZERO);
        let nrm = vec_norm(&psi);
        psi.iter_mut().for_each(|z| *z /= nrm);
        let mut expect = psi.clone();
        ub_dag.apply_in_place(&mut expect, dord)?;
        u.apply_in_place(&mut expect, dord)?;
        let got = simulate(&circ, &psi)?;
        dev = dev.max(crate::linalg::vec_sub_norm(&got, &expect));
    }
    checks.push(Check::below("theorem1_circuit_vs_swapped_unitary", dev, tol));
    checks.push(Check::holds("theorem1_circuit_depth", circ.depth() > 0));
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("bogus".parse::<Suite>().is_err());
    }

    #[test]
    fn single_mode_car() {
        let r = run_suite(Suite::Car, &SuiteConfig { modes: Some(1), ..Default::default() }).unwrap();
        assert!(r.pass, "{}", r.to_json());
    }

    #[test]
    fn column_map_rejects_dense_columns() {
        let m = CMat::from_real_rows(&[&[1.0, 0.0], &[1.0, 0.0]]);
        assert!(column_map(&m).is_none());
    }
}
