//! Jordan-Wigner map from fermionic monomials to Pauli strings.
//!
//! `a†_q ↦ σ+_q ∏_{p<q} Z_p` with σ+ = |1⟩⟨0|. The raising and lowering letters
//! stay symbolic in [`PauliSum::simplify`]; [`PauliSum::canonical`] expands them
//! into X and Y.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{Lattice, MatrixOperator, Mode, Ordering};
use crate::linalg::{CMat, C64, I, ONE, ZERO};
use crate::symbolic::{Letter, Monomial, SymbolicOperator};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PauliLetter {
    X,
    Y,
    Z,
    Plus,
    Minus,
}

impl PauliLetter {
    pub fn matrix(self) -> CMat {
        match self {
            PauliLetter::X => crate::linalg::pauli_x(),
            PauliLetter::Y => crate::linalg::pauli_y(),
            PauliLetter::Z => crate::linalg::pauli_z(),
            PauliLetter::Plus => CMat::from_real_rows(&[&[0.0, 0.0], &[1.0, 0.0]]),
            PauliLetter::Minus => CMat::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]),
        }
    }

    fn symbol(self) -> char {
        match self {
            PauliLetter::X => 'X',
            PauliLetter::Y => 'Y',
            PauliLetter::Z => 'Z',
            PauliLetter::Plus => '+',
            PauliLetter::Minus => '-',
        }
    }

    fn from_symbol(c: char) -> Option<Self> {
        Some(match c {
            'X' => PauliLetter::X,
            'Y' => PauliLetter::Y,
            'Z' => PauliLetter::Z,
            '+' => PauliLetter::Plus,
            '-' => PauliLetter::Minus,
            _ => return None,
        })
    }

    fn is_pauli(self) -> bool {
        matches!(self, PauliLetter::X | PauliLetter::Y | PauliLetter::Z)
    }

    fn adjoint(self) -> Self {
        match self {
            PauliLetter::Plus => PauliLetter::Minus,
            PauliLetter::Minus => PauliLetter::Plus,
            p => p,
        }
    }
}

/// Product of two single-qubit letters as a short sum over {I, letters}.
fn letter_product(a: PauliLetter, b: PauliLetter) -> Vec<(C64, Option<PauliLetter>)> {
    use PauliLetter::*;
    if a.is_pauli() && b.is_pauli() {
        return match (a, b) {
            (p, q) if p == q => vec![(ONE, None)],
            (X, Y) => vec![(I, Some(Z))],
            (Y, X) => vec![(-I, Some(Z))],
            (Y, Z) => vec![(I, Some(X))],
            (Z, Y) => vec![(-I, Some(X))],
            (Z, X) => vec![(I, Some(Y))],
            (X, Z) => vec![(-I, Some(Y))],
            _ => unreachable!(),
        };
    }
    // Mixed products: decompose in the basis {I, Z, σ+, σ−}.
    let m = a.matrix().matmul(&b.matrix());
    let parts = [
        ((m[(0, 0)] + m[(1, 1)]) * 0.5, None),
        ((m[(0, 0)] - m[(1, 1)]) * 0.5, Some(Z)),
        (m[(1, 0)], Some(Plus)),
        (m[(0, 1)], Some(Minus)),
    ];
    parts.into_iter().filter(|(c, _)| *c != ZERO).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct PauliTerm {
    pub coeff: C64,
    pub letters: BTreeMap<usize, PauliLetter>,
}

impl PauliTerm {
    pub fn new(coeff: C64, letters: BTreeMap<usize, PauliLetter>) -> Self {
        PauliTerm { coeff, letters }
    }

    pub fn identity(coeff: C64) -> Self {
        PauliTerm { coeff, letters: BTreeMap::new() }
    }

    pub fn mul(&self, other: &PauliTerm) -> Vec<PauliTerm> {
        let mut partial = vec![PauliTerm::new(self.coeff * other.coeff, self.letters.clone())];
        for (&q, &b) in &other.letters {
            let mut next = Vec::new();
            for t in partial {
                match t.letters.get(&q).copied() {
                    None => {
                        let mut t = t;
                        t.letters.insert(q, b);
                        next.push(t);
                    }
                    Some(a) => {
                        for (c, l) in letter_product(a, b) {
                            let mut letters = t.letters.clone();
                            match l {
                                Some(l) => letters.insert(q, l),
                                None => letters.remove(&q),
                            };
                            next.push(PauliTerm::new(t.coeff * c, letters));
                        }
                    }
                }
            }
            partial = next;
        }
        partial
    }

    pub fn adjoint(&self) -> PauliTerm {
        PauliTerm::new(self.coeff.conj(), self.letters.iter().map(|(&q, &l)| (q, l.adjoint())).collect())
    }

    /// Image of basis state `n`: every letter has at most one nonzero per column.
    fn act(&self, n: usize) -> Option<(C64, usize)> {
        let mut amp = self.coeff;
        let mut out = n;
        for (&q, &l) in &self.letters {
            let bit = (n >> q) & 1;
            let m = l.matrix();
            let (row, v) = if m[(0, bit)] != ZERO { (0, m[(0, bit)]) } else { (1, m[(1, bit)]) };
            if v == ZERO {
                return None;
            }
            amp *= v;
            if row != bit {
                out ^= 1 << q;
            }
        }
        Some((amp, out))
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct PauliSum {
    pub terms: Vec<PauliTerm>,
}

impl PauliSum {
    pub fn zero() -> Self {
        PauliSum { terms: Vec::new() }
    }

    pub fn from_terms(terms: Vec<PauliTerm>) -> Self {
        PauliSum { terms }
    }

    pub fn mul(&self, other: &PauliSum) -> PauliSum {
        let mut terms = Vec::new();
        for a in &self.terms {
            for b in &other.terms {
                terms.extend(a.mul(b));
            }
        }
        PauliSum { terms }
    }

    pub fn add(&self, other: &PauliSum) -> PauliSum {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        PauliSum { terms }
    }

    pub fn scale(&self, c: C64) -> PauliSum {
        PauliSum { terms: self.terms.iter().map(|t| PauliTerm::new(t.coeff * c, t.letters.clone())).collect() }
    }

    pub fn adjoint(&self) -> PauliSum {
        PauliSum { terms: self.terms.iter().map(PauliTerm::adjoint).collect() }
    }

    /// Merge equal letter maps (σ± kept) and drop zero coefficients.
    pub fn simplify(&self) -> PauliSum {
        let mut merged: BTreeMap<Vec<(usize, PauliLetter)>, C64> = BTreeMap::new();
        let mut order: Vec<Vec<(usize, PauliLetter)>> = Vec::new();
        for t in &self.terms {
            let key: Vec<(usize, PauliLetter)> = t.letters.iter().map(|(&q, &l)| (q, l)).collect();
            let e = merged.entry(key.clone()).or_insert_with(|| {
                order.push(key);
                ZERO
            });
            *e += t.coeff;
        }
        let terms = order
            .into_iter()
            .filter_map(|k| {
                let c = merged[&k];
                (c.norm() > 1e-15).then(|| PauliTerm::new(c, k.into_iter().collect()))
            })
            .collect();
        PauliSum { terms }
    }

    /// Expand σ± = (X ∓ iY)/2, merge and sort: the unique Pauli-basis form.
    pub fn canonical(&self) -> PauliSum {
        let mut terms = Vec::new();
        for t in &self.terms {
            let mut partial = vec![PauliTerm::identity(t.coeff)];
            for (&q, &l) in &t.letters {
                let choices: Vec<(C64, PauliLetter)> = match l {
                    PauliLetter::Plus => vec![(C64::new(0.5, 0.0), PauliLetter::X), (C64::new(0.0, -0.5), PauliLetter::Y)],
                    PauliLetter::Minus => vec![(C64::new(0.5, 0.0), PauliLetter::X), (C64::new(0.0, 0.5), PauliLetter::Y)],
                    p => vec![(ONE, p)],
                };
                partial = partial
                    .into_iter()
                    .flat_map(|p| {
                        choices.iter().map(move |&(c, l)| {
                            let mut letters = p.letters.clone();
                            letters.insert(q, l);
                            PauliTerm::new(p.coeff * c, letters)
                        })
                    })
                    .collect();
            }
            terms.extend(partial);
        }
        let mut s = PauliSum { terms }.simplify();
        s.terms.sort_by(|a, b| {
            let ka: Vec<_> = a.letters.iter().collect();
            let kb: Vec<_> = b.letters.iter().collect();
            ka.cmp(&kb)
        });
        s
    }

    /// Qubits carrying a non-identity letter in some term.
    pub fn support(&self) -> BTreeSet<usize> {
        self.simplify().terms.iter().flat_map(|t| t.letters.keys().copied()).collect()
    }

    pub fn to_matrix(&self, num_qubits: usize) -> Result<CMat> {
        if let Some(q) = self.terms.iter().flat_map(|t| t.letters.keys()).max() {
            if *q >= num_qubits {
                return Err(Error::Domain(format!("qubit {q} outside register of {num_qubits}")));
            }
        }
        let dim = 1usize << num_qubits;
        let mut m = CMat::zeros(dim, dim);
        for t in &self.terms {
            for col in 0..dim {
                if let Some((v, row)) = t.act(col) {
                    m[(row, col)] += v;
                }
            }
        }
        Ok(m)
    }

    /// One term per line: `coeff * [X3 Z1 +0]`, qubits descending.
    pub fn to_text(&self) -> String {
        self.to_string()
    }

    pub fn parse(text: &str) -> Result<PauliSum> {
        let mut terms = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let (coeff, rest) =
                line.split_once(" * ").ok_or_else(|| Error::Parse(format!("missing ' * ' in '{line}'")))?;
            let coeff = parse_complex(coeff.trim())?;
            let body = rest
                .trim()
                .strip_prefix('[')
                .and_then(|r| r.strip_suffix(']'))
                .ok_or_else(|| Error::Parse(format!("letters must be bracketed in '{line}'")))?;
            let mut letters = BTreeMap::new();
            for tok in body.split_whitespace() {
                let mut chars = tok.chars();
                let sym = chars.next().and_then(PauliLetter::from_symbol);
                let q = chars.as_str().parse::<usize>().ok();
                match (sym, q) {
                    (Some(l), Some(q)) => {
                        if letters.insert(q, l).is_some() {
                            return Err(Error::Parse(format!("qubit {q} repeated in '{line}'")));
                        }
                    }
                    _ => return Err(Error::Parse(format!("bad letter '{tok}'"))),
                }
            }
            terms.push(PauliTerm::new(coeff, letters));
        }
        Ok(PauliSum { terms })
    }
}

fn format_complex(z: C64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{:?}{}{:?}i", z.re, sign, z.im.abs())
}

fn parse_complex(s: &str) -> Result<C64> {
    let body = s.strip_suffix('i').ok_or_else(|| Error::Parse(format!("coefficient '{s}' lacks imaginary part")))?;
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'))
        .ok_or_else(|| Error::Parse(format!("cannot split coefficient '{s}'")))?;
    let re = body[..split].parse::<f64>().map_err(|e| Error::Parse(e.to_string()))?;
    let im = body[split..].parse::<f64>().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(C64::new(re, im))
}

impl fmt::Display for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in &self.terms {
            let letters: Vec<String> = t.letters.iter().rev().map(|(q, l)| format!("{}{q}", l.symbol())).collect();
            writeln!(f, "{} * [{}]", format_complex(t.coeff), letters.join(" "))?;
        }
        Ok(())
    }
}

fn letter_image(letter: &Letter, q: usize) -> PauliSum {
    let mut letters: BTreeMap<usize, PauliLetter> = (0..q).map(|p| (p, PauliLetter::Z)).collect();
    let l = match letter {
        Letter::Create(_) => PauliLetter::Plus,
        Letter::Annihilate(_) => PauliLetter::Minus,
        Letter::MajoranaX(_) => PauliLetter::X,
        Letter::MajoranaY(_) => PauliLetter::Y,
    };
    letters.insert(q, l);
    PauliSum::from_terms(vec![PauliTerm::new(ONE, letters)])
}

fn jw_monomial(term: &Monomial, ordering: &Ordering) -> Result<PauliSum> {
    let mut acc = PauliSum::from_terms(vec![PauliTerm::identity(term.coeff)]);
    for l in &term.letters {
        let q = ordering.pi(l.mode())?;
        acc = acc.mul(&letter_image(l, q)).simplify();
    }
    Ok(acc)
}

/// Jordan-Wigner image under `ordering`; σ± are kept as letters.
pub fn jw(symbolic: &SymbolicOperator, ordering: &Ordering) -> Result<PauliSum> {
    let mut out = PauliSum::zero();
    for t in symbolic.terms() {
        out = out.add(&jw_monomial(t, ordering)?);
    }
    Ok(out.simplify())
}

pub fn support(p: &PauliSum) -> BTreeSet<usize> {
    p.support()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonomialLocality {
    pub term_index: usize,
    pub term: String,
    pub sites: Vec<Vec<usize>>,
    pub qubit_support: Vec<usize>,
    pub allowed_qubits: Vec<usize>,
    pub local: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalityReport {
    pub entries: Vec<MonomialLocality>,
}

impl LocalityReport {
    pub fn all_local(&self) -> bool {
        self.entries.iter().all(|e| e.local)
    }

    pub fn flagged(&self) -> Vec<usize> {
        self.entries.iter().filter(|e| !e.local).map(|e| e.term_index).collect()
    }
}

/// Qubits of all modes on the union of neighborhoods of `sites`.
pub fn neighborhood_qubits(sites: &BTreeSet<Vec<usize>>, ordering: &Ordering, lattice: &Lattice) -> BTreeSet<usize> {
    let hood: BTreeSet<Vec<usize>> = sites.iter().flat_map(|s| lattice.neighborhood(s)).collect();
    ordering.modes().iter().enumerate().filter(|(_, m)| hood.contains(&m.site)).map(|(q, _)| q).collect()
}

/// For each monomial: is its qubit support inside the π-image of the
/// neighborhood of the sites it touches?
pub fn jw_locality_report(symbolic: &SymbolicOperator, ordering: &Ordering, lattice: &Lattice) -> Result<LocalityReport> {
    let mut entries = Vec::new();
    for (i, t) in symbolic.terms().iter().enumerate() {
        let sites = t.sites();
        let qs = jw_monomial(t, ordering)?.support();
        let allowed = neighborhood_qubits(&sites, ordering, lattice);
        entries.push(MonomialLocality {
            term_index: i,
            term: SymbolicOperator::from_terms(vec![t.clone()]).to_string(),
            sites: sites.into_iter().collect(),
            local: qs.is_subset(&allowed),
            qubit_support: qs.into_iter().collect(),
            allowed_qubits: allowed.into_iter().collect(),
        });
    }
    Ok(LocalityReport { entries })
}

/// Qubits on which the Jordan-Wigner image of `op` acts nontrivially: the π
/// positions of its support plus every gap of outside modes that a Z-string
/// crosses. A gap is crossed when some nonzero entry changes the parity of the
/// support modes above it. Entries below `tol` in magnitude are ignored.
pub fn qubit_support(op: &MatrixOperator, ordering: &Ordering, tol: f64) -> Result<BTreeSet<usize>> {
    let op = op.in_order(ordering)?;
    let qpos = ordering.positions(op.modes())?;
    let mut out: BTreeSet<usize> = qpos.iter().cloned().collect();
    let k = qpos.len();
    if k == 0 {
        return Ok(out);
    }
    // flips[i]: some entry flips the parity of support bits i..k.
    let mut flips = vec![false; k];
    let m = op.matrix();
    for r in 0..m.rows() {
        for col in 0..m.cols() {
            if m[(r, col)].norm() <= tol {
                continue;
            }
            let x = r ^ col;
            for (i, f) in flips.iter_mut().enumerate() {
                if (x >> i).count_ones() % 2 == 1 {
                    *f = true;
                }
            }
        }
    }
    for i in 0..k {
        if flips[i] {
            let lo = if i == 0 { 0 } else { qpos[i - 1] + 1 };
            out.extend(lo..qpos[i]);
        }
    }
    Ok(out)
}

/// The qubit gate equal to the Jordan-Wigner image of `op`: ascending qubit
/// indices and a matrix whose bit i refers to the i-th listed qubit.
pub fn qubit_gate(op: &MatrixOperator, ordering: &Ordering, tol: f64) -> Result<(Vec<usize>, CMat)> {
    let qubits: Vec<usize> = qubit_support(op, ordering, tol)?.into_iter().collect();
    let modes: Vec<Mode> = qubits.iter().map(|&q| ordering.mode(q).clone()).collect();
    let embedded = op.embed(&modes, ordering)?;
    Ok((qubits, embedded.into_matrix()))
}
