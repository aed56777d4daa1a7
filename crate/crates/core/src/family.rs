//! One-parameter families of steady states parameterized by the central value γ.

use rayon::prelude::*;

use crate::eos::{AnsatzSpec, MacroEos};
use crate::error::{Error, Result};
use crate::steady_state::{solve_radial, SolveOptions};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyRow {
    pub gamma: f64,
    pub eps: f64,
    pub radius: f64,
    pub mass: f64,
}

/// A grid point whose solve failed.
#[derive(Debug, Clone, PartialEq)]
pub struct SkippedPoint {
    pub gamma: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilyTable {
    pub spec: AnsatzSpec,
    pub rows: Vec<FamilyRow>,
    pub skipped: Vec<SkippedPoint>,
}

impl FamilyTable {
    pub fn new(spec: AnsatzSpec, rows: Vec<FamilyRow>) -> Self {
        Self { spec, rows, skipped: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn ln_eps(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.eps.ln()).collect()
    }

    pub fn radii(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.radius).collect()
    }

    pub fn masses(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.mass).collect()
    }
}

/// ε_γ = 1/h(γ).
pub fn eps_of_gamma(eos: &MacroEos, gamma: f64) -> f64 {
    1.0 / eos.h(gamma)
}

/// `n` points uniformly spaced on [lo, hi].
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// `n` points log-spaced on [lo, hi].
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    uniform_grid(lo.ln(), hi.ln(), n).into_iter().map(f64::exp).collect()
}

/// Solves every grid point; failures go to the skip report.
pub fn sweep(eos: &MacroEos, gamma_grid: &[f64], opts: &SolveOptions) -> Result<FamilyTable> {
    if gamma_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain("gamma grid must be strictly increasing".into()));
    }
    let results: Vec<_> = gamma_grid
        .par_iter()
        .map(|&gamma| solve_radial(eos, gamma, opts).map(|p| (gamma, p.eps, p.radius, p.mass)))
        .collect();
    let mut rows = Vec::with_capacity(results.len());
    let mut skipped = Vec::new();
    for (res, &gamma) in results.into_iter().zip(gamma_grid) {
        match res {
            Ok((gamma, eps, radius, mass)) => rows.push(FamilyRow { gamma, eps, radius, mass }),
            Err(e) => skipped.push(SkippedPoint { gamma, reason: e.to_string() }),
        }
    }
    Ok(FamilyTable { spec: *eos.spec(), rows, skipped })
}

/// [`sweep`] on a dedicated pool of `threads` workers (`None` uses the global pool).
pub fn sweep_with_threads(eos: &MacroEos, gamma_grid: &[f64], opts: &SolveOptions, threads: Option<usize>) -> Result<FamilyTable> {
    match threads {
        None => sweep(eos, gamma_grid, opts),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Domain(format!("thread pool: {e}")))?;
            pool.install(|| sweep(eos, gamma_grid, opts))
        }
    }
}
