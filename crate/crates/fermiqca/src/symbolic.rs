//! Complex-weighted sums of products of ladder and Majorana letters.

use std::collections::BTreeSet;
use std::fmt;

use crate::fock::Mode;
use crate::linalg::{C64, I, ONE};

/// A single-mode factor. `MajoranaX(c) = c + c†`, `MajoranaY(c) = i(c† − c)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Letter {
    Create(Mode),
    Annihilate(Mode),
    MajoranaX(Mode),
    MajoranaY(Mode),
}

impl Letter {
    pub fn mode(&self) -> &Mode {
        match self {
            Letter::Create(m) | Letter::Annihilate(m) | Letter::MajoranaX(m) | Letter::MajoranaY(m) => m,
        }
    }

    /// Adjoint letter and the scalar it picks up.
    pub fn adjoint(&self) -> Letter {
        match self {
            Letter::Create(m) => Letter::Annihilate(m.clone()),
            Letter::Annihilate(m) => Letter::Create(m.clone()),
            other => other.clone(),
        }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Letter::Create(m) => write!(f, "{m}†"),
            Letter::Annihilate(m) => write!(f, "{m}"),
            Letter::MajoranaX(m) => write!(f, "mx[{m}]"),
            Letter::MajoranaY(m) => write!(f, "my[{m}]"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Monomial {
    pub coeff: C64,
    pub letters: Vec<Letter>,
}

impl Monomial {
    pub fn new(coeff: C64, letters: Vec<Letter>) -> Self {
        Monomial { coeff, letters }
    }

    pub fn is_even(&self) -> bool {
        self.letters.len() % 2 == 0
    }

    pub fn adjoint(&self) -> Monomial {
        Monomial {
            coeff: self.coeff.conj(),
            letters: self.letters.iter().rev().map(Letter::adjoint).collect(),
        }
    }

    pub fn modes(&self) -> BTreeSet<Mode> {
        self.letters.iter().map(|l| l.mode().clone()).collect()
    }

    pub fn sites(&self) -> BTreeSet<Vec<usize>> {
        self.letters.iter().map(|l| l.mode().site.clone()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct SymbolicOperator {
    terms: Vec<Monomial>,
}

impl SymbolicOperator {
    pub fn zero() -> Self {
        SymbolicOperator { terms: Vec::new() }
    }

    pub fn identity() -> Self {
        Self::scalar(ONE)
    }

    pub fn scalar(c: C64) -> Self {
        Self::monomial(c, Vec::new())
    }

    pub fn monomial(coeff: C64, letters: Vec<Letter>) -> Self {
        SymbolicOperator { terms: vec![Monomial::new(coeff, letters)] }
    }

    pub fn from_terms(terms: Vec<Monomial>) -> Self {
        SymbolicOperator { terms }
    }

    pub fn create(m: &Mode) -> Self {
        Self::monomial(ONE, vec![Letter::Create(m.clone())])
    }

    pub fn annihilate(m: &Mode) -> Self {
        Self::monomial(ONE, vec![Letter::Annihilate(m.clone())])
    }

    /// a†_m a_m.
    pub fn number(m: &Mode) -> Self {
        Self::monomial(ONE, vec![Letter::Create(m.clone()), Letter::Annihilate(m.clone())])
    }

    /// a†_x a_y + a†_y a_x.
    pub fn hopping(x: &Mode, y: &Mode) -> Self {
        let t = Self::monomial(ONE, vec![Letter::Create(x.clone()), Letter::Annihilate(y.clone())]);
        t.add(&t.adjoint())
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        SymbolicOperator { terms }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-ONE))
    }

    pub fn scale(&self, c: C64) -> Self {
        SymbolicOperator { terms: self.terms.iter().map(|t| Monomial::new(t.coeff * c, t.letters.clone())).collect() }
    }

    /// Product in written order: `self · other`.
    pub fn mul(&self, other: &Self) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                let mut letters = a.letters.clone();
                letters.extend(b.letters.iter().cloned());
                terms.push(Monomial::new(a.coeff * b.coeff, letters));
            }
        }
        SymbolicOperator { terms }
    }

    pub fn adjoint(&self) -> Self {
        SymbolicOperator { terms: self.terms.iter().map(Monomial::adjoint).collect() }
    }

    pub fn modes(&self) -> BTreeSet<Mode> {
        self.terms.iter().flat_map(|t| t.modes()).collect()
    }

    /// Merge identical letter sequences and drop zero coefficients.
    pub fn simplify(&self, tol: f64) -> Self {
        let mut out: Vec<Monomial> = Vec::new();
        for t in &self.terms {
            match out.iter_mut().find(|o| o.letters == t.letters) {
                Some(o) => o.coeff += t.coeff,
                None => out.push(t.clone()),
            }
        }
        out.retain(|t| t.coeff.norm() > tol);
        SymbolicOperator { terms: out }
    }

    pub fn is_even(&self) -> bool {
        self.terms.iter().all(Monomial::is_even)
    }
}

/// i·m_x·m_y as a symbolic operator.
pub fn majorana_pair_product(x: &Mode, y: &Mode) -> SymbolicOperator {
    SymbolicOperator::monomial(I, vec![Letter::MajoranaX(x.clone()), Letter::MajoranaX(y.clone())])
}

impl fmt::Display for SymbolicOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({}{:+}i)", t.coeff.re, t.coeff.im)?;
            for l in &t.letters {
                write!(f, " {l}")?;
            }
        }
        Ok(())
    }
}
