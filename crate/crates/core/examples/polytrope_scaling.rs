//! Polytropes: the scaling symmetry γ ↦ β^{−2}γ and the mass–radius power
//! law M = C R^{(2(k−l)−3)/(2(k+l)+1)} it implies.
//!
//!     cargo run --release --example polytrope_scaling

use vlasov_spiral::family::{log_grid, sweep};
use vlasov_spiral::polytrope::{fit_power_law, mass_variation, mr_exponent, scaling_map, StateSummary};
use vlasov_spiral::steady_state::{solve_radial, SolveOptions};
use vlasov_spiral::{AnsatzSpec, MacroEos};

fn main() -> vlasov_spiral::Result<()> {
    let opts = SolveOptions::default();
    println!("scaling map against direct solves (gamma = 1):");
    for (k, l) in [(1.0, 0.0), (1.0, 1.0)] {
        let eos = MacroEos::new(AnsatzSpec::polytrope(k, l, 1.0))?;
        let base = solve_radial(&eos, 1.0, &opts)?;
        for beta in [0.5, 2.0] {
            let pred = scaling_map(StateSummary { gamma: 1.0, radius: base.radius, mass: base.mass }, beta, k, l)?;
            let got = solve_radial(&eos, pred.gamma, &opts)?;
            println!(
                "  k={k} l={l} beta={beta}: R rel {:.1e}, M rel {:.1e}",
                ((got.radius - pred.radius) / pred.radius).abs(),
                ((got.mass - pred.mass) / pred.mass).abs()
            );
        }
    }

    println!("\nfitted ln M - ln R slopes over gamma in [0.5, 4]:");
    for k in [0.0, 1.0, 1.5, 2.0, 3.0] {
        let eos = MacroEos::new(AnsatzSpec::polytrope(k, 0.0, 1.0))?;
        let table = sweep(&eos, &log_grid(0.5, 4.0, 20), &opts)?;
        let law = fit_power_law(&table)?;
        println!(
            "  k={k}: slope {:+.6} (expected {:+.6}), C = {:.6}, mass spread {:.1e}",
            law.slope,
            mr_exponent(k, 0.0)?,
            law.constant,
            mass_variation(&table)
        );
    }
    Ok(())
}
