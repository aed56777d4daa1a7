//! Scaling structure of polytropic families `f = (E₀ − E)₊^k L^l` and the
//! power-law mass–radius relation it implies.

use crate::eos::AnsatzSpec;
use crate::error::{Error, Result};
use crate::family::FamilyTable;

/// Exponents of the scaling β ↦ (γ β^{−2}, R β^{radius_exp}, M β^{mass_exp}).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingLaw {
    pub k: f64,
    pub l: f64,
    pub beta: f64,
    pub radius_exp: f64,
    pub mass_exp: f64,
    pub mr_exp: f64,
}

impl ScalingLaw {
    pub fn new(k: f64, l: f64, beta: f64) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(Error::Domain(format!("beta must be positive, got {beta}")));
        }
        Ok(Self {
            k,
            l,
            beta,
            radius_exp: (2.0 * (k + l) + 1.0) / (2.0 + 2.0 * l),
            mass_exp: (2.0 * k - 2.0 * l - 3.0) / (2.0 + 2.0 * l),
            mr_exp: mr_exponent(k, l)?,
        })
    }
}

/// Exponent of M = C R^{(2(k−l)−3)/(2(k+l)+1)}.
pub fn mr_exponent(k: f64, l: f64) -> Result<f64> {
    let den = 2.0 * (k + l) + 1.0;
    if den == 0.0 {
        return Err(Error::DegenerateLaw);
    }
    Ok((2.0 * (k - l) - 3.0) / den)
}

/// (γ, R, M) of one steady state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateSummary {
    pub gamma: f64,
    pub radius: f64,
    pub mass: f64,
}

/// The β-image of a polytropic steady state.
pub fn scaling_map(s: StateSummary, beta: f64, k: f64, l: f64) -> Result<StateSummary> {
    if !(beta > 0.0) {
        return Err(Error::Domain(format!("beta must be positive, got {beta}")));
    }
    let rexp = (2.0 * (k + l) + 1.0) / (2.0 + 2.0 * l);
    let mexp = (2.0 * k - 2.0 * l - 3.0) / (2.0 + 2.0 * l);
    Ok(StateSummary {
        gamma: s.gamma * beta.powi(-2),
        radius: s.radius * beta.powf(rexp),
        mass: s.mass * beta.powf(mexp),
    })
}

/// Least-squares line ln M = ln C + slope · ln R.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit {
    pub slope: f64,
    pub constant: f64,
}

impl PowerLawFit {
    pub fn mass_at(&self, radius: f64) -> f64 {
        self.constant * radius.powf(self.slope)
    }
}

fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Fits M = C R^slope to a family table.
pub fn fit_power_law(table: &FamilyTable) -> Result<PowerLawFit> {
    if table.len() < 5 {
        return Err(Error::InsufficientData(format!("power-law fit needs at least 5 rows, got {}", table.len())));
    }
    let (rmin, rmax) = table.rows.iter().fold((f64::INFINITY, 0.0_f64), |(lo, hi), r| (lo.min(r.radius), hi.max(r.radius)));
    if !(rmax >= 1.5 * rmin) {
        return Err(Error::InsufficientData(format!("radius spread {:.4} is below the factor 1.5 needed", rmax / rmin)));
    }
    let lr: Vec<f64> = table.rows.iter().map(|r| r.radius.ln()).collect();
    let lm: Vec<f64> = table.rows.iter().map(|r| r.mass.ln()).collect();
    let (slope, intercept) = linear_fit(&lr, &lm);
    Ok(PowerLawFit { slope, constant: intercept.exp() })
}

/// Least-squares slope of ln M against ln R.
pub fn fit_mr_exponent(table: &FamilyTable) -> Result<f64> {
    Ok(fit_power_law(table)?.slope)
}

/// (max − min)/mean of the mass column.
pub fn mass_variation(table: &FamilyTable) -> f64 {
    let m = table.masses();
    let (lo, hi) = m.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    (hi - lo) / (m.iter().sum::<f64>() / m.len() as f64)
}

/// M·R^{−mr_exp} across the table.
pub fn mass_radius_constants(table: &FamilyTable, mr_exp: f64) -> Vec<f64> {
    table.rows.iter().map(|r| r.mass * r.radius.powf(-mr_exp)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DominanceRow {
    pub gamma: f64,
    pub radius: f64,
    pub mass: f64,
    pub reference_mass: f64,
    /// (M_ref − M)/M_ref.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DominanceReport {
    pub slope: f64,
    /// Exponent of the reference family's law when it is a polytrope.
    pub slope_expected: Option<f64>,
    pub c_fitted: f64,
    /// R range shared by both tables.
    pub overlap: (f64, f64),
    pub rows: Vec<DominanceRow>,
    pub verdict: bool,
}

/// Whether every row of `table` has M strictly below the power law fitted
/// to `reference` at equal R.
pub fn dominance_check(table: &FamilyTable, reference: &FamilyTable) -> Result<DominanceReport> {
    let law = fit_power_law(reference)?;
    let range = |t: &FamilyTable| t.rows.iter().fold((f64::INFINITY, 0.0_f64), |(lo, hi), r| (lo.min(r.radius), hi.max(r.radius)));
    let (a, b) = (range(table), range(reference));
    let overlap = (a.0.max(b.0), a.1.min(b.1));
    if table.is_empty() || !(overlap.1 > overlap.0) {
        return Err(Error::InsufficientData("no overlapping radius range".into()));
    }
    let rows: Vec<DominanceRow> = table
        .rows
        .iter()
        .map(|r| {
            let reference_mass = law.mass_at(r.radius);
            DominanceRow {
                gamma: r.gamma,
                radius: r.radius,
                mass: r.mass,
                reference_mass,
                margin: (reference_mass - r.mass) / reference_mass,
            }
        })
        .collect();
    let slope_expected = match reference.spec {
        AnsatzSpec::Polytrope { k, l, .. } => mr_exponent(k, l).ok(),
        _ => None,
    };
    Ok(DominanceReport {
        slope: law.slope,
        slope_expected,
        c_fitted: law.constant,
        overlap,
        verdict: rows.iter().all(|r| r.margin > 0.0),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eos::MacroEos;
    use crate::family::{log_grid, sweep};
    use crate::steady_state::{solve_radial, SolveOptions};

    #[test]
    fn exponent_examples() {
        assert!((mr_exponent(1.0, 0.0).unwrap() + 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(mr_exponent(1.5, 0.0).unwrap(), 0.0);
        assert!((mr_exponent(2.0, 0.0).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(mr_exponent(-0.5, 0.0), Err(Error::DegenerateLaw));
        assert_eq!(mr_exponent(-1.0, 0.5), Err(Error::DegenerateLaw));
    }

    #[test]
    fn scaling_law_consistency() {
        for k in [-0.9, -0.2, 0.0, 1.0, 2.5, 3.4] {
            for l in [0.0, 0.5, 1.0, 2.0] {
                if (k + l + 0.5_f64).abs() < 1e-12 {
                    continue;
                }
                let s = ScalingLaw::new(k, l, 2.0).unwrap();
                assert!((s.mr_exp - s.mass_exp / s.radius_exp).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn scaling_map_group_property() {
        let s = StateSummary { gamma: 1.3, radius: 0.7, mass: 2.1 };
        assert_eq!(scaling_map(s, 1.0, 1.0, 0.0).unwrap(), s);
        let back = scaling_map(scaling_map(s, 3.0, 1.0, 1.0).unwrap(), 1.0 / 3.0, 1.0, 1.0).unwrap();
        assert!(((back.gamma - s.gamma) / s.gamma).abs() < 1e-14);
        assert!(((back.radius - s.radius) / s.radius).abs() < 1e-14);
        assert!(((back.mass - s.mass) / s.mass).abs() < 1e-14);
    }

    #[test]
    fn scaling_map_matches_solver() {
        let eos = MacroEos::new(AnsatzSpec::polytrope(1.0, 0.0, 1.0)).unwrap();
        let opts = SolveOptions::default();
        let p = solve_radial(&eos, 1.0, &opts).unwrap();
        let pred = scaling_map(StateSummary { gamma: 1.0, radius: p.radius, mass: p.mass }, 2.0, 1.0, 0.0).unwrap();
        let q = solve_radial(&eos, pred.gamma, &opts).unwrap();
        assert!(((q.radius - pred.radius) / pred.radius).abs() < 1e-6);
        assert!(((q.mass - pred.mass) / pred.mass).abs() < 1e-6);
    }

    #[test]
    fn exponent_fits_and_constant_c() {
        for (k, expected) in [(1.0, -1.0 / 3.0), (2.0, 0.2)] {
            let eos = MacroEos::new(AnsatzSpec::polytrope(k, 0.0, 1.0)).unwrap();
            let t = sweep(&eos, &log_grid(0.5, 2.0, 20), &SolveOptions::default()).unwrap();
            assert!((fit_mr_exponent(&t).unwrap() - expected).abs() < 1e-3);
            let c = mass_radius_constants(&t, expected);
            let mean = c.iter().sum::<f64>() / c.len() as f64;
            assert!(c.iter().all(|x| ((x - mean) / mean).abs() < 1e-5));
        }
        let eos = MacroEos::new(AnsatzSpec::polytrope(1.5, 0.0, 1.0)).unwrap();
        let t = sweep(&eos, &log_grid(0.5, 4.0, 12), &SolveOptions::default()).unwrap();
        assert!(mass_variation(&t) < 1e-6);
    }

    #[test]
    fn power_law_needs_spread() {
        let eos = MacroEos::new(AnsatzSpec::polytrope(1.0, 0.0, 1.0)).unwrap();
        let t = sweep(&eos, &log_grid(1.0, 1.01, 6), &SolveOptions::default()).unwrap();
        assert!(matches!(fit_mr_exponent(&t), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn wilson_dominance() {
        let opts = SolveOptions::default();
        let wilson = sweep(&MacroEos::new(AnsatzSpec::WILSON).unwrap(), &log_grid(0.5, 20.0, 60), &opts).unwrap();
        let poly = sweep(&MacroEos::new(AnsatzSpec::polytrope(2.0, 0.0, 0.5)).unwrap(), &log_grid(0.05, 20.0, 30), &opts).unwrap();
        let rep = dominance_check(&wilson, &poly).unwrap();
        assert!(rep.verdict);
        assert!((rep.slope - 0.2).abs() < 1e-6);
        assert!((rep.slope_expected.unwrap() - 0.2).abs() < 1e-15);
        // the models become tangent as γ → 0
        assert!(rep.rows[0].margin < rep.rows[rep.rows.len() / 4].margin);
        let selfcheck = dominance_check(&wilson, &wilson).unwrap();
        assert!(!selfcheck.verdict);
    }
}
