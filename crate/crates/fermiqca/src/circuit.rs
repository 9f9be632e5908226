//! Layered qubit circuits compiled from local fermionic factors.
//!
//! A gate acts on an ascending list of qubits; bit i of its matrix index is
//! the state of the i-th listed qubit. Qubit q of a circuit is the mode at
//! π-position q, so a Fock amplitude vector is also the Jordan-Wigner qubit
//! state.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::causality::Region;
use crate::decomposition::LocalUnitaryFactor;
use crate::dirac1d::{mass_layer, swap_decompose_t, DiracParams};
use crate::error::{domain, Error, Result};
use crate::fock::{Lattice, Ordering};
use crate::jwmap::qubit_gate;
use crate::linalg::{expm_herm, pauli_z, CMat, C64, ONE, ZERO};
use crate::majorana::{localize, AncillaPair, AncillaRegistry};

pub const MAX_GATE_QUBITS: usize = 6;

#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    pub qubits: Vec<usize>,
    pub matrix: CMat,
}

impl Gate {
    pub fn new(qubits: Vec<usize>, matrix: CMat) -> Result<Self> {
        if qubits.is_empty() || qubits.len() > MAX_GATE_QUBITS {
            return domain(format!("gates act on 1..={MAX_GATE_QUBITS} qubits, got {}", qubits.len()));
        }
        if qubits.windows(2).any(|w| w[0] >= w[1]) {
            return domain("gate qubits must be strictly ascending");
        }
        if matrix.rows() != 1 << qubits.len() || matrix.cols() != matrix.rows() {
            return domain("gate matrix does not match its qubit count");
        }
        if matrix.unitarity_defect() > 1e-12 {
            return domain(format!("gate is not unitary (defect {:.3e})", matrix.unitarity_defect()));
        }
        Ok(Gate { qubits, matrix })
    }

    /// CNOT with `control` and `target`.
    pub fn cnot(control: usize, target: usize) -> Result<Self> {
        let (lo, hi) = (control.min(target), control.max(target));
        let cbit = usize::from(control > target);
        let tbit = 1 - cbit;
        let m = CMat::from_fn(4, 4, |r, c| {
            let flip = if c >> cbit & 1 == 1 { c ^ (1 << tbit) } else { c };
            if r == flip {
                ONE
            } else {
                ZERO
            }
        });
        Gate::new(vec![lo, hi], m)
    }

    pub fn inverse(&self) -> Gate {
        Gate { qubits: self.qubits.clone(), matrix: self.matrix.adjoint() }
    }

    fn overlaps(&self, other: &Gate) -> bool {
        self.qubits.iter().any(|q| other.qubits.contains(q))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    pub num_qubits: usize,
    pub layers: Vec<Vec<Gate>>,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        Circuit { num_qubits, layers: Vec::new() }
    }

    pub fn gate_count(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn gates(&self) -> impl Iterator<Item = &Gate> {
        self.layers.iter().flatten()
    }

    /// Gates of `other` appended after the gates of `self`, one layer each
    /// layer of `other`.
    pub fn then(&self, other: &Circuit) -> Circuit {
        let mut out = self.clone();
        out.num_qubits = self.num_qubits.max(other.num_qubits);
        out.layers.extend(other.layers.iter().cloned());
        out
    }

    pub fn inverse(&self) -> Circuit {
        Circuit {
            num_qubits: self.num_qubits,
            layers: self.layers.iter().rev().map(|l| l.iter().map(Gate::inverse).collect()).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (i, layer) in self.layers.iter().enumerate() {
            let mut used = BTreeSet::new();
            for g in layer {
                for &q in &g.qubits {
                    if q >= self.num_qubits {
                        return domain(format!("gate qubit {q} out of range in layer {i}"));
                    }
                    if !used.insert(q) {
                        return domain(format!("layer {i} uses qubit {q} twice"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Place gates in the earliest layer allowed. Gates with equal `group`
    /// commute and may be reordered; a gate must follow every earlier
    /// overlapping gate of another group.
    pub fn schedule(num_qubits: usize, gates: Vec<(Gate, usize)>) -> Circuit {
        let mut layers: Vec<Vec<Gate>> = Vec::new();
        let mut placed: Vec<(usize, usize, Gate)> = Vec::new();
        for (g, group) in gates {
            let min = placed
                .iter()
                .filter(|(_, grp, h)| *grp != group && h.overlaps(&g))
                .map(|(l, _, _)| l + 1)
                .max()
                .unwrap_or(0);
            let mut layer = min;
            while layer < layers.len() && layers[layer].iter().any(|h| h.overlaps(&g)) {
                layer += 1;
            }
            if layer == layers.len() {
                layers.push(Vec::new());
            }
            layers[layer].push(g.clone());
            placed.push((layer, group, g));
        }
        for l in &mut layers {
            l.sort_by(|a, b| a.qubits.cmp(&b.qubits));
        }
        Circuit { num_qubits, layers }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&CircuitJson::from(self)).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Circuit> {
        let j: CircuitJson = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let mut layers = Vec::with_capacity(j.layers.len());
        for l in j.layers {
            let mut gates = Vec::with_capacity(l.len());
            for g in l {
                let n = g.re.len();
                if g.im.len() != n || g.re.iter().chain(&g.im).any(|r| r.len() != n) {
                    return Err(Error::Parse("gate matrix rows are ragged".into()));
                }
                let m = CMat::from_fn(n, n, |r, c| C64::new(g.re[r][c], g.im[r][c]));
                gates.push(Gate::new(g.qubits, m)?);
            }
            layers.push(gates);
        }
        let c = Circuit { num_qubits: j.num_qubits, layers };
        c.validate()?;
        Ok(c)
    }
}

#[derive(Serialize, Deserialize)]
struct GateJson {
    qubits: Vec<usize>,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct CircuitJson {
    num_qubits: usize,
    layers: Vec<Vec<GateJson>>,
}

impl From<&Circuit> for CircuitJson {
    fn from(c: &Circuit) -> Self {
        CircuitJson {
            num_qubits: c.num_qubits,
            layers: c
                .layers
                .iter()
                .map(|l| {
                    l.iter()
                        .map(|g| {
                            let n = g.matrix.rows();
                            GateJson {
                                qubits: g.qubits.clone(),
                                re: (0..n).map(|r| g.matrix.row(r).iter().map(|z| z.re).collect()).collect(),
                                im: (0..n).map(|r| g.matrix.row(r).iter().map(|z| z.im).collect()).collect(),
                            }
                        })
                        .collect()
                })
                .collect(),
        }
    }
}

/// Apply one gate in place.
pub fn apply_gate(gate: &Gate, state: &mut [C64]) {
    let k = gate.qubits.len();
    let mask = gate.qubits.iter().fold(0usize, |m, &q| m | 1 << q);
    let scatter: Vec<usize> =
        (0..1usize << k).map(|s| (0..k).filter(|i| s >> i & 1 == 1).fold(0, |a, i| a | 1 << gate.qubits[i])).collect();
    let mut buf = vec![ZERO; 1 << k];
    for base in 0..state.len() {
        if base & mask != 0 {
            continue;
        }
        for (s, b) in buf.iter_mut().enumerate() {
            *b = state[base | scatter[s]];
        }
        for (r, &off) in scatter.iter().enumerate() {
            state[base | off] = gate.matrix.row(r).iter().zip(&buf).map(|(a, b)| a * b).sum();
        }
    }
}

/// Apply the layers in order.
pub fn simulate(circuit: &Circuit, state: &[C64]) -> Result<Vec<C64>> {
    if state.len() != 1 << circuit.num_qubits {
        return domain(format!("state length {} does not match {} qubits", state.len(), circuit.num_qubits));
    }
    let mut out = state.to_vec();
    for layer in &circuit.layers {
        for g in layer {
            apply_gate(g, &mut out);
        }
    }
    Ok(out)
}

/// Dense unitary of the whole circuit, column by column.
pub fn circuit_unitary(circuit: &Circuit) -> Result<CMat> {
    let dim = 1usize << circuit.num_qubits;
    let mut out = CMat::zeros(dim, dim);
    for c in 0..dim {
        let mut e = vec![ZERO; dim];
        e[c] = ONE;
        for (r, z) in simulate(circuit, &e)?.into_iter().enumerate() {
            out[(r, c)] = z;
        }
    }
    Ok(out)
}

fn region_qubits(region: &Region, ordering: &Ordering) -> BTreeSet<usize> {
    ordering.modes().iter().enumerate().filter(|(_, m)| region.contains(m)).map(|(q, _)| q).collect()
}

/// One gate per non-identity factor, scheduled by commuting group. Every
/// gate must stay on the qubits of its factor's region.
pub fn compile(factors: &[LocalUnitaryFactor], ordering: &Ordering, tol: f64) -> Result<Circuit> {
    let mut gates = Vec::new();
    for (i, f) in factors.iter().enumerate() {
        let id = CMat::identity(f.matrix.dim());
        if (f.matrix.matrix() - &id).max_abs() <= tol {
            continue;
        }
        let (qubits, m) = qubit_gate(&f.matrix, ordering, 1e-13)?;
        let allowed = region_qubits(&f.region, ordering);
        if let Some(q) = qubits.iter().find(|q| !allowed.contains(q)) {
            let host: Vec<String> = f.host.iter().map(|x| x.to_string()).collect();
            return Err(Error::Contract(format!(
                "factor {i} ({:?} hosted at ({})) acts on qubit {q} outside its region; repair it with Majorana ancillas first",
                f.tag,
                host.join(",")
            )));
        }
        gates.push((Gate::new(qubits, m)?, f.group));
    }
    Ok(Circuit::schedule(ordering.len(), gates))
}

/// CNOTs from each target onto the flag, in the order given.
pub fn parity_ladder(targets: &[usize], flag: usize, num_qubits: usize) -> Result<Circuit> {
    if targets.contains(&flag) {
        return domain("flag qubit is one of the targets");
    }
    let mut c = Circuit::new(num_qubits);
    for &t in targets {
        c.layers.push(vec![Gate::cnot(t, flag)?]);
    }
    c.validate()?;
    Ok(c)
}

/// ℬ = (1/√2)(c†_x − i c†_y) + h.c. with the Jordan-Wigner strings below c_x
/// and between c_x and c_y replaced by Z on the given flags. Local qubit
/// order: c_x, c_y, then the flags that are present.
fn flagged_b(has_below: bool, has_between: bool) -> CMat {
    let n = 2 + usize::from(has_below) + usize::from(has_between);
    let f_below = 2;
    let f_between = 2 + usize::from(has_below);
    let z = pauli_z();
    let raise = CMat::from_real_rows(&[&[0.0, 0.0], &[1.0, 0.0]]);
    let op = |factors: &[(usize, &CMat)]| -> CMat {
        let mut m = CMat::identity(1);
        for q in (0..n).rev() {
            let f = factors.iter().find(|(p, _)| *p == q).map(|(_, m)| (*m).clone()).unwrap_or_else(|| CMat::identity(2));
            m = m.kron(&f);
        }
        m
    };
    let mut cx_f: Vec<(usize, &CMat)> = vec![(0, &raise)];
    let mut cy_f: Vec<(usize, &CMat)> = vec![(0, &z), (1, &raise)];
    if has_below {
        cx_f.push((f_below, &z));
        cy_f.push((f_below, &z));
    }
    if has_between {
        cy_f.push((f_between, &z));
    }
    let cx = op(&cx_f);
    let cy = op(&cy_f);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let b = &cx.scale_real(h) - &cy.scale(C64::new(0.0, h));
    &b + &b.adjoint()
}

/// Circuit preparing ∏ (1/√2)(c†_x − i c†_y)|Ω⟩ from |0…0⟩, up to a global
/// phase. Each pair uses e^{i(π/2)ℬ}; where ℬ has Jordan-Wigner strings, their
/// parities are first copied to flag qubits (appended after the mode qubits)
/// and uncomputed afterwards.
pub fn prepare_majorana_circuit(pairs: &[AncillaPair], ordering: &Ordering) -> Result<Circuit> {
    let mut seen = BTreeSet::new();
    for p in pairs {
        for m in p.modes() {
            if !seen.insert(m.clone()) {
                return domain(format!("ancilla pairs overlap on mode {m}"));
            }
        }
    }
    let n = ordering.len();
    let mut needs_flags = false;
    let mut plan = Vec::new();
    for p in pairs {
        let (qa, qb) = (ordering.pi(&p.c_at_x)?, ordering.pi(&p.c_at_y)?);
        // Keep the ℬ orientation: c_x is the first term regardless of π order.
        let below: Vec<usize> = (0..qa.min(qb)).collect();
        let between: Vec<usize> = (qa.min(qb) + 1..qa.max(qb)).collect();
        needs_flags |= !below.is_empty() || !between.is_empty();
        plan.push((qa, qb, below, between));
    }
    let total = if needs_flags { n + 2 } else { n };
    let (f1, f2) = (n, n + 1);
    let mut c = Circuit::new(total);
    for (qa, qb, below, between) in plan {
        let pre = parity_ladder(&below, f1, total)?.then(&parity_ladder(&between, f2, total)?);
        let bm = flagged_b(!below.is_empty(), !between.is_empty());
        // Local qubit order of `bm` is (c_x, c_y, flags); rewrite for ascending qubits.
        let mut local: Vec<usize> = vec![qa, qb];
        if !below.is_empty() {
            local.push(f1);
        }
        if !between.is_empty() {
            local.push(f2);
        }
        let g = expm_herm(&bm, -std::f64::consts::FRAC_PI_2);
        let gate = permute_gate(&local, &g)?;
        c = c.then(&pre);
        c.layers.push(vec![gate]);
        c = c.then(&pre.inverse());
    }
    Ok(c)
}

/// Re-express a gate given on qubits in arbitrary order as a gate on the
/// same qubits in ascending order.
pub fn permute_gate(qubits: &[usize], m: &CMat) -> Result<Gate> {
    let mut sorted = qubits.to_vec();
    sorted.sort();
    let k = qubits.len();
    // bit i of the local index refers to qubits[i]; new bit j to sorted[j].
    let newpos: Vec<usize> = qubits.iter().map(|q| sorted.iter().position(|s| s == q).unwrap()).collect();
    let map = |s: usize| (0..k).filter(|i| s >> i & 1 == 1).fold(0, |a, i| a | 1 << newpos[i]);
    let mut out = CMat::zeros(1 << k, 1 << k);
    for r in 0..1usize << k {
        for col in 0..1usize << k {
            out[(map(r), map(col))] = m[(r, col)];
        }
    }
    Gate::new(sorted, out)
}

/// Compiled one-step Dirac circuit together with the mode layout it uses.
#[derive(Clone, Debug)]
pub struct CompiledModel {
    pub circuit: Circuit,
    pub lattice: Lattice,
    pub ordering: Ordering,
    pub registry: AncillaRegistry,
    pub max_eigenspace_residual: f64,
}

/// Swap layers of T followed by the mass layer, each factor made qubit-local
/// (the ring's boundary swap gets an ancilla pair), repeated `steps` times.
pub fn compile_dirac1d(params: &DiracParams, steps: usize, tol: f64) -> Result<CompiledModel> {
    let mut lattice = params.lattice();
    let ord0 = Ordering::site_major(&lattice);
    let mut factors = swap_decompose_t(params, &ord0)?;
    factors.extend(mass_layer(params, &ord0)?);
    let mut registry = AncillaRegistry::new();
    let mut repaired = Vec::with_capacity(factors.len());
    let mut worst = 0.0f64;
    for f in &factors {
        let out = localize(f, &mut lattice, &mut registry, tol)?;
        worst = worst.max(out.eigenspace_residual);
        repaired.push(out.factor);
    }
    let ordering = Ordering::site_major(&lattice);
    let one = compile(&repaired, &ordering, tol)?;
    let mut circuit = Circuit::new(ordering.len());
    for _ in 0..steps {
        circuit = circuit.then(&one);
    }
    Ok(CompiledModel { circuit, lattice, ordering, registry, max_eigenspace_residual: worst })
}
