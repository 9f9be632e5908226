//! Fermionic modes on a lattice, occupation-number states and operators.
//!
//! Basis convention: bit k of a basis index is the occupation of the mode with
//! π = k, bit 0 least significant. Basis states are built with creation
//! operators applied in ascending π from left to right,
//! `|n⟩ = a†_{j1} a†_{j2} ⋯ |Ω⟩` with `j1 < j2 < ⋯`, so `a†_k` picks up
//! `(−1)^(#occupied modes with π < k)`.
//!
//! [`MatrixOperator`] stores an operator as a dense matrix over a subset of
//! modes (its support). The local basis uses the same convention with the
//! support list playing the role of π. Embedding into a larger mode set is the
//! unique *-homomorphism that sends local creation operators to global ones;
//! an operator supported on a few modes therefore never needs the full 2^𝒩
//! matrix unless explicitly requested.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::linalg::{determinant, CMat, C64, I, ONE, ZERO};
use crate::symbolic::{Letter, SymbolicOperator};

/// Default cap on the number of modes for dense 2^𝒩 representations.
pub const DEFAULT_MAX_MODES: usize = 16;

/// Dense cap, overridable through `FERMIQCA_MAX_MODES`.
pub fn max_modes() -> usize {
    std::env::var("FERMIQCA_MAX_MODES")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .unwrap_or(DEFAULT_MAX_MODES)
}

fn check_cap(n: usize) -> Result<()> {
    let cap = max_modes();
    if n > cap {
        return Err(Error::Resource(format!(
            "{n} modes exceed the dense cap of {cap} (set FERMIQCA_MAX_MODES to override)"
        )));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeKind {
    Physical,
    Copy,
    Ancilla,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Mode {
    pub site: Vec<usize>,
    pub label: usize,
    pub kind: ModeKind,
}

impl Mode {
    pub fn new(site: Vec<usize>, label: usize, kind: ModeKind) -> Self {
        Mode { site, label, kind }
    }

    pub fn physical(site: Vec<usize>, label: usize) -> Self {
        Mode::new(site, label, ModeKind::Physical)
    }

    pub fn ancilla(site: Vec<usize>, label: usize) -> Self {
        Mode::new(site, label, ModeKind::Ancilla)
    }

    /// The copy-kind partner of a physical mode.
    pub fn copy_of(&self) -> Self {
        Mode::new(self.site.clone(), self.label, ModeKind::Copy)
    }

    /// The physical partner of a copy mode.
    pub fn physical_of(&self) -> Self {
        Mode::new(self.site.clone(), self.label, ModeKind::Physical)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = match self.kind {
            ModeKind::Physical => 'a',
            ModeKind::Copy => 'b',
            ModeKind::Ancilla => 'c',
        };
        let site: Vec<String> = self.site.iter().map(|s| s.to_string()).collect();
        write!(f, "{k}{}@({})", self.label, site.join(","))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    extents: Vec<usize>,
    periodic: Vec<bool>,
    modes: Vec<Mode>,
}

impl Lattice {
    /// Lattice with `labels_per_site` physical modes on every site.
    pub fn new(extents: Vec<usize>, periodic: Vec<bool>, labels_per_site: usize) -> Result<Self> {
        if extents.is_empty() || extents.len() != periodic.len() {
            return domain("extents and periodic flags must be non-empty and of equal length");
        }
        for (d, (&e, &p)) in extents.iter().zip(&periodic).enumerate() {
            if e == 0 {
                return domain(format!("extent of dimension {d} is zero"));
            }
            if e == 1 && p {
                return domain(format!("dimension {d} has extent 1 with periodic wrap"));
            }
        }
        let mut lat = Lattice { extents, periodic, modes: Vec::new() };
        for site in lat.sites() {
            for label in 0..labels_per_site {
                lat.modes.push(Mode::physical(site.clone(), label));
            }
        }
        Ok(lat)
    }

    pub fn line(n: usize, periodic: bool, labels_per_site: usize) -> Result<Self> {
        Lattice::new(vec![n], vec![periodic], labels_per_site)
    }

    pub fn dims(&self) -> usize {
        self.extents.len()
    }

    pub fn extents(&self) -> &[usize] {
        &self.extents
    }

    pub fn periodic(&self) -> &[bool] {
        &self.periodic
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn num_sites(&self) -> usize {
        self.extents.iter().product()
    }

    pub fn contains_site(&self, site: &[usize]) -> bool {
        site.len() == self.dims() && site.iter().zip(&self.extents).all(|(s, e)| s < e)
    }

    /// Row-major site index; the last coordinate varies fastest.
    pub fn site_index(&self, site: &[usize]) -> usize {
        site.iter().zip(&self.extents).fold(0, |acc, (s, e)| acc * e + s)
    }

    pub fn site_from_index(&self, mut idx: usize) -> Vec<usize> {
        let mut site = vec![0; self.dims()];
        for d in (0..self.dims()).rev() {
            site[d] = idx % self.extents[d];
            idx /= self.extents[d];
        }
        site
    }

    /// All sites in row-major order.
    pub fn sites(&self) -> Vec<Vec<usize>> {
        (0..self.num_sites()).map(|i| self.site_from_index(i)).collect()
    }

    /// Add a mode; (site, label, kind) must be new and the site must exist.
    pub fn add_mode(&mut self, mode: Mode) -> Result<()> {
        if !self.contains_site(&mode.site) {
            return domain(format!("mode {mode} lies outside the lattice"));
        }
        if self.modes.contains(&mode) {
            return domain(format!("mode {mode} already present"));
        }
        self.modes.push(mode);
        Ok(())
    }

    pub fn modes_at(&self, site: &[usize]) -> Vec<Mode> {
        self.modes.iter().filter(|m| m.site == site).cloned().collect()
    }

    /// Sites within `radius` steps in every direction, with periodic wrap.
    pub fn neighborhood_radius(&self, site: &[usize], radius: usize) -> Vec<Vec<usize>> {
        let mut per_dim: Vec<BTreeSet<usize>> = Vec::with_capacity(self.dims());
        for d in 0..self.dims() {
            let e = self.extents[d] as i64;
            let mut set = BTreeSet::new();
            for off in -(radius as i64)..=(radius as i64) {
                let x = site[d] as i64 + off;
                if self.periodic[d] {
                    set.insert(x.rem_euclid(e) as usize);
                } else if (0..e).contains(&x) {
                    set.insert(x as usize);
                }
            }
            per_dim.push(set);
        }
        let mut out: Vec<Vec<usize>> = vec![Vec::new()];
        for set in per_dim {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    set.iter().map(move |&x| {
                        let mut p = prefix.clone();
                        p.push(x);
                        p
                    })
                })
                .collect();
        }
        out.sort_by_key(|s| self.site_index(s));
        out
    }

    /// Radius-1 hypercube (side 3) around `site`.
    pub fn neighborhood(&self, site: &[usize]) -> Vec<Vec<usize>> {
        self.neighborhood_radius(site, 1)
    }
}

/// The Jordan-Wigner enumeration π of a set of modes.
#[derive(Clone, Debug, PartialEq)]
pub struct Ordering {
    modes: Vec<Mode>,
    index: HashMap<Mode, usize>,
}

impl Ordering {
    /// π given explicitly: `modes[k]` receives π = k.
    pub fn from_modes(modes: Vec<Mode>) -> Result<Self> {
        let mut index = HashMap::with_capacity(modes.len());
        for (k, m) in modes.iter().enumerate() {
            if index.insert(m.clone(), k).is_some() {
                return domain(format!("mode {m} listed twice"));
            }
        }
        Ok(Ordering { modes, index })
    }

    /// Row-major sites, all modes of a site consecutive. Within a site,
    /// physical/copy modes come first ordered by (label, kind), so each copy
    /// follows its physical partner; ancillas follow in label order.
    pub fn site_major(lattice: &Lattice) -> Self {
        let mut modes = lattice.modes().to_vec();
        modes.sort_by_key(|m| {
            let group = u8::from(m.kind == ModeKind::Ancilla);
            (lattice.site_index(&m.site), group, m.label, m.kind)
        });
        Ordering::from_modes(modes).expect("lattice modes are unique")
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn contains(&self, mode: &Mode) -> bool {
        self.index.contains_key(mode)
    }

    pub fn pi(&self, mode: &Mode) -> Result<usize> {
        self.index
            .get(mode)
            .copied()
            .ok_or_else(|| Error::Domain(format!("mode {mode} is not in the ordering")))
    }

    pub fn mode(&self, pi: usize) -> &Mode {
        &self.modes[pi]
    }

    pub fn positions(&self, modes: &[Mode]) -> Result<Vec<usize>> {
        modes.iter().map(|m| self.pi(m)).collect()
    }

    /// Modes sorted by π.
    pub fn sorted(&self, modes: &[Mode]) -> Result<Vec<Mode>> {
        let mut pos = self.positions(modes)?;
        pos.sort_unstable();
        pos.dedup();
        Ok(pos.into_iter().map(|p| self.modes[p].clone()).collect())
    }

    /// Whether all modes sharing a site occupy consecutive π values.
    pub fn is_same_site_consecutive(&self) -> bool {
        let mut seen: BTreeSet<&[usize]> = BTreeSet::new();
        let mut prev: Option<&[usize]> = None;
        for m in &self.modes {
            let s = m.site.as_slice();
            if prev != Some(s) {
                if !seen.insert(s) {
                    return false;
                }
                prev = Some(s);
            }
        }
        true
    }

    /// Ordering restricted to `modes`, keeping their relative π order.
    pub fn restrict(&self, modes: &[Mode]) -> Result<Ordering> {
        Ordering::from_modes(self.sorted(modes)?)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    pub amps: Vec<C64>,
}

impl StateVector {
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        if !amps.len().is_power_of_two() {
            return domain("state length must be a power of two");
        }
        Ok(StateVector { amps })
    }

    pub fn basis(num_modes: usize, index: usize) -> Self {
        let mut amps = vec![ZERO; 1 << num_modes];
        amps[index] = ONE;
        StateVector { amps }
    }

    pub fn num_modes(&self) -> usize {
        self.amps.len().trailing_zeros() as usize
    }

    pub fn norm(&self) -> f64 {
        crate::linalg::vec_norm(&self.amps)
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        StateVector { amps: self.amps.iter().map(|a| a / n).collect() }
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm() - 1.0).abs() <= tol
    }

    pub fn inner(&self, other: &StateVector) -> C64 {
        crate::linalg::inner(&self.amps, &other.amps)
    }
}

/// |Ω⟩: amplitude 1 on the all-zeros bitstring.
pub fn vacuum(ordering: &Ordering) -> StateVector {
    StateVector::basis(ordering.len(), 0)
}

/// Action of one ladder or Majorana letter at bit `p` on basis state `n`.
pub(crate) fn letter_action(letter: &Letter, p: usize, n: usize) -> Option<(C64, usize)> {
    let bit = 1usize << p;
    let sign = if (n & (bit - 1)).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
    let occupied = n & bit != 0;
    match letter {
        Letter::Create(_) => (!occupied).then(|| (C64::new(sign, 0.0), n | bit)),
        Letter::Annihilate(_) => occupied.then(|| (C64::new(sign, 0.0), n ^ bit)),
        Letter::MajoranaX(_) => Some((C64::new(sign, 0.0), n ^ bit)),
        Letter::MajoranaY(_) => {
            let phase = if occupied { -I } else { I };
            Some((phase * sign, n ^ bit))
        }
    }
}

/// a†_mode as a full-space operator.
pub fn creation_matrix(mode: &Mode, ordering: &Ordering) -> Result<MatrixOperator> {
    let sym = SymbolicOperator::monomial(ONE, vec![Letter::Create(mode.clone())]);
    lower(&sym, ordering)
}

pub fn annihilation_matrix(mode: &Mode, ordering: &Ordering) -> Result<MatrixOperator> {
    Ok(creation_matrix(mode, ordering)?.adjoint())
}

/// Matrix of a symbolic operator over all modes of `ordering`.
pub fn lower(symbolic: &SymbolicOperator, ordering: &Ordering) -> Result<MatrixOperator> {
    check_cap(ordering.len())?;
    let mat = lower_matrix(symbolic, ordering)?;
    Ok(MatrixOperator { modes: ordering.modes().to_vec(), mat })
}

/// Matrix of a symbolic operator over `modes` only (local basis in π order).
pub fn lower_on(symbolic: &SymbolicOperator, modes: &[Mode], ordering: &Ordering) -> Result<MatrixOperator> {
    let sub = ordering.restrict(modes)?;
    for m in symbolic.modes() {
        if !sub.contains(&m) {
            return domain(format!("mode {m} not in the requested support"));
        }
    }
    check_cap(sub.len())?;
    let mat = lower_matrix(symbolic, &sub)?;
    Ok(MatrixOperator { modes: sub.modes().to_vec(), mat })
}

fn lower_matrix(symbolic: &SymbolicOperator, ordering: &Ordering) -> Result<CMat> {
    let dim = 1usize << ordering.len();
    let mut mat = CMat::zeros(dim, dim);
    for term in symbolic.terms() {
        let pos: Vec<usize> = term.letters.iter().map(|l| ordering.pi(l.mode())).collect::<Result<_>>()?;
        for col in 0..dim {
            let mut amp = term.coeff;
            let mut n = col;
            let mut alive = true;
            for (letter, &p) in term.letters.iter().zip(&pos).rev() {
                match letter_action(letter, p, n) {
                    Some((s, next)) => {
                        amp *= s;
                        n = next;
                    }
                    None => {
                        alive = false;
                        break;
                    }
                }
            }
            if alive {
                mat[(n, col)] += amp;
            }
        }
    }
    Ok(mat)
}

/// Global parity P = ∏(I − 2n_i) as a diagonal ±1 vector.
pub fn parity_diagonal(num_modes: usize) -> Vec<f64> {
    (0..1usize << num_modes).map(|n| if n.count_ones() % 2 == 0 { 1.0 } else { -1.0 }).collect()
}

/// Second quantization Γ(u) of a single-particle unitary u acting on `modes`
/// (u indexed in the order of `modes`). Matrix elements are minors
/// det u[occ(n'), occ(n)] in the π-sorted local basis.
pub fn second_quantize(u: &CMat, modes: &[Mode], ordering: &Ordering) -> Result<MatrixOperator> {
    if u.rows() != modes.len() || u.cols() != modes.len() {
        return domain("single-particle matrix does not match the mode list");
    }
    let sorted = ordering.sorted(modes)?;
    if sorted.len() != modes.len() {
        return domain("duplicate modes");
    }
    check_cap(sorted.len())?;
    let perm: Vec<usize> = sorted.iter().map(|m| modes.iter().position(|x| x == m).unwrap()).collect();
    let k = sorted.len();
    let dim = 1usize << k;
    let mut mat = CMat::zeros(dim, dim);
    let occ = |n: usize| -> Vec<usize> { (0..k).filter(|b| n >> b & 1 == 1).map(|b| perm[b]).collect() };
    for col in 0..dim {
        let oc = occ(col);
        for row in 0..dim {
            if row.count_ones() != col.count_ones() {
                continue;
            }
            let or = occ(row);
            let minor = CMat::from_fn(or.len(), oc.len(), |i, j| u[(or[i], oc[j])]);
            mat[(row, col)] = determinant(&minor);
        }
    }
    Ok(MatrixOperator { modes: sorted, mat })
}

/// Dense operator over a support of modes. Bit i of the local basis index is the
/// occupation of `modes[i]`; the list order acts as the local π.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixOperator {
    modes: Vec<Mode>,
    mat: CMat,
}

impl MatrixOperator {
    pub fn new(modes: Vec<Mode>, mat: CMat) -> Result<Self> {
        if mat.rows() != 1 << modes.len() || mat.cols() != 1 << modes.len() {
            return domain(format!(
                "matrix is {}x{} but {} modes need dimension {}",
                mat.rows(),
                mat.cols(),
                modes.len(),
                1usize << modes.len()
            ));
        }
        let unique: BTreeSet<&Mode> = modes.iter().collect();
        if unique.len() != modes.len() {
            return domain("duplicate modes in support");
        }
        Ok(MatrixOperator { modes, mat })
    }

    pub fn identity(modes: Vec<Mode>) -> Self {
        let dim = 1 << modes.len();
        MatrixOperator { modes, mat: CMat::identity(dim) }
    }

    /// Full-space operator over every mode of `ordering`.
    pub fn full(ordering: &Ordering, mat: CMat) -> Result<Self> {
        MatrixOperator::new(ordering.modes().to_vec(), mat)
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn adjoint(&self) -> Self {
        MatrixOperator { modes: self.modes.clone(), mat: self.mat.adjoint() }
    }

    pub fn scale(&self, s: C64) -> Self {
        MatrixOperator { modes: self.modes.clone(), mat: self.mat.scale(s) }
    }

    pub fn map_matrix(&self, f: impl FnOnce(&CMat) -> CMat) -> Self {
        MatrixOperator { modes: self.modes.clone(), mat: f(&self.mat) }
    }

    /// Same operator with its support sorted by π.
    pub fn in_order(&self, ordering: &Ordering) -> Result<Self> {
        let pos = ordering.positions(&self.modes)?;
        let mut idx: Vec<usize> = (0..self.modes.len()).collect();
        idx.sort_by_key(|&i| pos[i]);
        if idx.iter().enumerate().all(|(a, &b)| a == b) {
            return Ok(self.clone());
        }
        let k = self.modes.len();
        // inv[i] = new bit position of old bit i.
        let mut inv = vec![0; k];
        for (new, &old) in idx.iter().enumerate() {
            inv[old] = new;
        }
        let dim = self.dim();
        let mut newidx = vec![0usize; dim];
        let mut sign = vec![1.0f64; dim];
        for s in 0..dim {
            let mut t = 0;
            let mut inversions = 0u32;
            for i in 0..k {
                if s >> i & 1 == 1 {
                    t |= 1 << inv[i];
                    for j in i + 1..k {
                        if s >> j & 1 == 1 && inv[j] < inv[i] {
                            inversions += 1;
                        }
                    }
                }
            }
            newidx[s] = t;
            sign[s] = if inversions % 2 == 0 { 1.0 } else { -1.0 };
        }
        let mut mat = CMat::zeros(dim, dim);
        for r in 0..dim {
            for col in 0..dim {
                let v = self.mat[(r, col)];
                if v != ZERO {
                    mat[(newidx[r], newidx[col])] = v * (sign[r] * sign[col]);
                }
            }
        }
        Ok(MatrixOperator { modes: idx.iter().map(|&i| self.modes[i].clone()).collect(), mat })
    }

    /// Embed into the algebra of `target` (a superset of the support). The
    /// result is supported on `target` sorted by π.
    pub fn embed(&self, target: &[Mode], ordering: &Ordering) -> Result<Self> {
        let this = self.in_order(ordering)?;
        let tgt = ordering.sorted(target)?;
        if tgt == this.modes {
            return Ok(this);
        }
        let qpos: Vec<usize> = this
            .modes
            .iter()
            .map(|m| {
                tgt.iter()
                    .position(|t| t == m)
                    .ok_or_else(|| Error::Domain(format!("mode {m} missing from embedding target")))
            })
            .collect::<Result<_>>()?;
        check_cap(tgt.len())?;
        let n = tgt.len();
        let dim = 1usize << n;
        let mut out = CMat::zeros(dim, dim);
        let kernel = LocalKernel::new(&qpos);
        let k = qpos.len();
        let ldim = 1usize << k;
        for r in 0..dim {
            if r & kernel.qmask != 0 {
                continue;
            }
            let cm = kernel.cmask(r);
            for sc in 0..ldim {
                let colsign = parity_sign(sc & cm);
                let col = r | kernel.scatter[sc];
                for sr in 0..ldim {
                    let v = this.mat[(sr, sc)];
                    if v != ZERO {
                        out[(r | kernel.scatter[sr], col)] = v * (colsign * parity_sign(sr & cm));
                    }
                }
            }
        }
        Ok(MatrixOperator { modes: tgt, mat: out })
    }

    /// Full 2^𝒩 matrix over every mode of `ordering`.
    pub fn to_full(&self, ordering: &Ordering) -> Result<CMat> {
        Ok(self.embed(ordering.modes(), ordering)?.mat)
    }

    fn union_modes(&self, other: &Self, ordering: &Ordering) -> Result<Vec<Mode>> {
        let mut all = self.modes.clone();
        all.extend(other.modes.iter().cloned());
        ordering.sorted(&all)
    }

    pub fn mul(&self, other: &Self, ordering: &Ordering) -> Result<Self> {
        let u = self.union_modes(other, ordering)?;
        let b = other.embed(&u, ordering)?;
        if self.modes.len() == u.len() {
            let a = self.embed(&u, ordering)?;
            return Ok(MatrixOperator { modes: u, mat: a.mat.matmul(&b.mat) });
        }
        // Narrow left factor: act on each column of the right one.
        let sub = Ordering::from_modes(u.clone())?;
        let dim = b.dim();
        let mut cols = b.mat.transpose();
        for chunk in cols.data_mut().chunks_mut(dim) {
            self.apply_in_place(chunk, &sub)?;
        }
        Ok(MatrixOperator { modes: u, mat: cols.transpose() })
    }

    pub fn add(&self, other: &Self, ordering: &Ordering) -> Result<Self> {
        let u = self.union_modes(other, ordering)?;
        let a = self.embed(&u, ordering)?;
        let b = other.embed(&u, ordering)?;
        Ok(MatrixOperator { modes: u, mat: &a.mat + &b.mat })
    }

    pub fn sub(&self, other: &Self, ordering: &Ordering) -> Result<Self> {
        self.add(&other.scale(-ONE), ordering)
    }

    /// Spectral norm of `self − other`, evaluated on the union of supports.
    pub fn distance(&self, other: &Self, ordering: &Ordering) -> Result<f64> {
        let d = self.sub(other, ordering)?;
        Ok(d.mat.spectral_norm())
    }

    /// Product of operators in application order: `ops[0]` acts first.
    pub fn product(ops: &[MatrixOperator], ordering: &Ordering) -> Result<Self> {
        let mut acc = MatrixOperator::identity(Vec::new());
        for op in ops {
            acc = op.mul(&acc, ordering)?;
        }
        Ok(acc)
    }

    /// Apply to a full-space state over every mode of `ordering`.
    pub fn apply(&self, state: &StateVector, ordering: &Ordering) -> Result<StateVector> {
        let mut amps = state.amps.clone();
        self.apply_in_place(&mut amps, ordering)?;
        Ok(StateVector { amps })
    }

    pub fn apply_in_place(&self, amps: &mut [C64], ordering: &Ordering) -> Result<()> {
        if amps.len() != 1 << ordering.len() {
            return domain("state dimension does not match the ordering");
        }
        let this = self.in_order(ordering)?;
        let qpos = ordering.positions(&this.modes)?;
        let kernel = LocalKernel::new(&qpos);
        let ldim = 1usize << qpos.len();
        let mut gathered = vec![ZERO; ldim];
        let mut out = vec![ZERO; ldim];
        for r in 0..amps.len() {
            if r & kernel.qmask != 0 {
                continue;
            }
            let cm = kernel.cmask(r);
            for s in 0..ldim {
                gathered[s] = amps[r | kernel.scatter[s]] * parity_sign(s & cm);
            }
            for (sr, o) in out.iter_mut().enumerate() {
                *o = this.mat.row(sr).iter().zip(&gathered).map(|(a, b)| a * b).sum();
            }
            for s in 0..ldim {
                amps[r | kernel.scatter[s]] = out[s] * parity_sign(s & cm);
            }
        }
        Ok(())
    }
}

fn parity_sign(x: usize) -> f64 {
    if x.count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Index bookkeeping for acting with a local operator whose support sits at
/// bit positions `qpos` (ascending) of a larger basis.
pub(crate) struct LocalKernel {
    pub qmask: usize,
    pub scatter: Vec<usize>,
    below: Vec<usize>,
}

impl LocalKernel {
    pub fn new(qpos: &[usize]) -> Self {
        let k = qpos.len();
        let qmask = qpos.iter().fold(0, |m, &p| m | 1 << p);
        let scatter = (0..1usize << k)
            .map(|s| (0..k).filter(|i| s >> i & 1 == 1).fold(0, |acc, i| acc | 1 << qpos[i]))
            .collect();
        let below = qpos.iter().map(|&p| ((1usize << p) - 1) & !qmask).collect();
        LocalKernel { qmask, scatter, below }
    }

    /// Bit i is set when an odd number of occupied outside modes in `r` sit
    /// below support mode i. The sign of local state s is then
    /// (−1)^popcount(s & cmask).
    pub fn cmask(&self, r: usize) -> usize {
        self.below
            .iter()
            .enumerate()
            .fold(0, |m, (i, &b)| if (r & b).count_ones() % 2 == 1 { m | 1 << i } else { m })
    }
}
