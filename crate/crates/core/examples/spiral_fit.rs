//! Fit the spiral law to the tail of the King and Woolley–Dickens families,
//! in fixed and free mode, and measure the winding spacing and contraction.
//!
//!     cargo run --release --example spiral_fit

use vlasov_spiral::family::{sweep, uniform_grid};
use vlasov_spiral::spiral::{
    fit_spiral, tail_window, turning_points, winding_length, winding_metrics, CenterEstimate, FitMode, ASYMPTOTIC_LN_EPS,
    DECAY_THEORY, NU_THEORY,
};
use vlasov_spiral::steady_state::SolveOptions;
use vlasov_spiral::{AnsatzSpec, MacroEos};

fn main() -> vlasov_spiral::Result<()> {
    println!("theory: nu = {NU_THEORY:.6}, d = {DECAY_THEORY}, same-type spacing = {:.4}, ratio = {:.4}", winding_length(), (-DECAY_THEORY * winding_length()).exp());
    for (name, spec) in [("King", AnsatzSpec::KING), ("Woolley-Dickens", AnsatzSpec::WOOLLEY_DICKENS)] {
        let table = sweep(&MacroEos::new(spec)?, &uniform_grid(0.2, 28.0, 1500), &SolveOptions::default())?;
        let window = tail_window(&table, 2.0)?;
        let fixed = fit_spiral(&table, window, FitMode::Fixed)?;
        let free = fit_spiral(&table, window, FitMode::Free)?;
        println!("\n{name}: window ln eps in [{:.3}, {:.3}]", window.lo, window.hi);
        println!("  fixed: center ({:.6}, {:.6}), rms {:.4}", fixed.center[0], fixed.center[1], fixed.rms_resid);
        println!("  free:  nu {:.5}, d {:.5}, rms {:.4}", free.nu, free.decay, free.rms_resid);
        println!("  A = [[{:.4}, {:.4}], [{:.4}, {:.4}]]", fixed.amp[(0, 0)], fixed.amp[(0, 1)], fixed.amp[(1, 0)], fixed.amp[(1, 1)]);

        let tp = turning_points(&table)?;
        for (label, c) in [("fit center", CenterEstimate::Given(fixed.center)), ("last-four mean", CenterEstimate::LastFourMean)] {
            let w = winding_metrics(&tp, c, ASYMPTOTIC_LN_EPS)?;
            println!(
                "  {label:>14}: same-type {:.4}, opposite-type {:.4}, ratio {:.4}",
                w.asymptotic_same_type.unwrap_or(f64::NAN),
                w.asymptotic_opposite_type.unwrap_or(f64::NAN),
                w.asymptotic_ratio.unwrap_or(f64::NAN)
            );
        }
    }
    Ok(())
}
