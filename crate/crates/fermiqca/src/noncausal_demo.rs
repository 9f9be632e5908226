//! Continuous-time hopping on a discrete line leaks to every site at once.

use crate::error::{domain, Result};
use crate::linalg::{CMat, C64};

/// Open chain with nearest-neighbour hopping −α(a†_x a_{x+1} + h.c.). The
/// on-site U term needs two particles on a site, so it has no effect in the
/// one-particle sector used here.
#[derive(Clone, Debug, PartialEq)]
pub struct HoppingChain {
    pub sites: usize,
    pub hopping: f64,
    pub onsite_u: f64,
}

impl HoppingChain {
    pub fn new(sites: usize, hopping: f64, onsite_u: f64) -> Result<Self> {
        if sites < 3 {
            return domain(format!("chain needs at least 3 sites, got {sites}"));
        }
        if !(hopping > 0.0) || !hopping.is_finite() {
            return domain(format!("hopping must be positive, got {hopping}"));
        }
        Ok(HoppingChain { sites, hopping, onsite_u })
    }

    pub fn single_particle_hamiltonian(&self) -> CMat {
        CMat::from_fn(self.sites, self.sites, |r, c| {
            if r.abs_diff(c) == 1 {
                C64::new(-self.hopping, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }
}

/// exp(−iHt) by Taylor series with scaling and squaring. Entries that are
/// structurally tiny (high powers of Ht) keep their relative accuracy when no
/// squaring is needed, i.e. for ‖Ht‖₁ ≤ 1.
pub fn propagator(h: &CMat, t: f64) -> CMat {
    let a = h.scale(C64::new(0.0, -t));
    let norm = a.norm_1();
    let squarings = if norm <= 1.0 { 0 } else { norm.log2().ceil() as u32 };
    let a = a.scale_real(0.5f64.powi(squarings as i32));
    let n = a.rows();
    let mut sum = CMat::identity(n);
    let mut term = CMat::identity(n);
    for k in 1..200 {
        term = term.matmul(&a).scale_real(1.0 / k as f64);
        let before = sum.clone();
        sum += &term;
        if sum == before {
            break;
        }
    }
    for _ in 0..squarings {
        sum = sum.matmul(&sum);
    }
    sum
}

/// |⟨n| e^{−iHt} |0⟩| for a particle starting at site 0.
pub fn leakage_amplitude(chain: &HoppingChain, n: usize, t: f64) -> Result<f64> {
    if n >= chain.sites {
        return domain(format!("site {n} is outside a chain of {}", chain.sites));
    }
    if t == 0.0 {
        return Ok(if n == 0 { 1.0 } else { 0.0 });
    }
    let u = propagator(&chain.single_particle_hamiltonian(), t);
    Ok(u[(n, 0)].norm())
}

/// Leading Taylor term (αt)ⁿ/n!: the single shortest path from 0 to n.
pub fn leading_order(chain: &HoppingChain, n: usize, t: f64) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * chain.hopping * t / k as f64)
}

/// Least-squares slope of log amplitude against log t.
pub fn loglog_slope(chain: &HoppingChain, n: usize, times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return domain("need at least two times for a slope");
    }
    let pts: Vec<(f64, f64)> = times
        .iter()
        .map(|&t| Ok((t.ln(), leakage_amplitude(chain, n, t)?.ln())))
        .collect::<Result<_>>()?;
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LeakageRow {
    pub t: f64,
    pub site: usize,
    pub amplitude: f64,
}

/// Amplitudes on a (t, site) grid, ordered by t then site.
pub fn leakage_table(chain: &HoppingChain, times: &[f64], sites: &[usize]) -> Result<Vec<LeakageRow>> {
    let mut out = Vec::with_capacity(times.len() * sites.len());
    for &t in times {
        let u = propagator(&chain.single_particle_hamiltonian(), t);
        for &n in sites {
            if n >= chain.sites {
                return domain(format!("site {n} is outside a chain of {}", chain.sites));
            }
            out.push(LeakageRow { t, site: n, amplitude: u[(n, 0)].norm() });
        }
    }
    Ok(out)
}
