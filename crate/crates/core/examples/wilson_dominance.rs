//! Wilson models against the k = 2 polytrope with amplitude 1/2: at equal
//! radius every Wilson mass lies below the polytrope's M = C R^{1/5}.
//!
//!     cargo run --release --example wilson_dominance

use vlasov_spiral::family::{log_grid, sweep};
use vlasov_spiral::polytrope::dominance_check;
use vlasov_spiral::steady_state::SolveOptions;
use vlasov_spiral::{AnsatzSpec, MacroEos};

fn main() -> vlasov_spiral::Result<()> {
    let opts = SolveOptions::default();
    let wilson = sweep(&MacroEos::new(AnsatzSpec::WILSON)?, &log_grid(0.5, 20.0, 80), &opts)?;
    let poly = sweep(&MacroEos::new(AnsatzSpec::polytrope(2.0, 0.0, 0.5))?, &log_grid(0.05, 20.0, 40), &opts)?;
    let rep = dominance_check(&wilson, &poly)?;
    println!("polytrope law: M = {:.6} R^{:.6}", rep.c_fitted, rep.slope);
    println!("shared R range: [{:.4}, {:.4}]", rep.overlap.0, rep.overlap.1);
    println!("{:>8} {:>10} {:>10} {:>10} {:>8}", "gamma", "R", "M", "M_poly", "margin");
    for r in rep.rows.iter().step_by(8) {
        println!("{:>8.3} {:>10.5} {:>10.5} {:>10.5} {:>8.4}", r.gamma, r.radius, r.mass, r.reference_mass, r.margin);
    }
    println!("dominated: {}", rep.verdict);
    Ok(())
}
