//! Mass–radius diagram of the King family with the fitted spiral overlaid
//! and a blow-up of its center, written as SVG.
//!
//!     cargo run --release --example mass_radius_plot -- [out.svg]

use vlasov_spiral::family::{sweep, uniform_grid};
use vlasov_spiral::spiral::{fit_spiral, predict_curve, tail_window, FitMode};
use vlasov_spiral::steady_state::SolveOptions;
use vlasov_spiral::svg::{write_svg, Bounds, PlotStyle, Series};
use vlasov_spiral::{AnsatzSpec, MacroEos};

fn main() -> vlasov_spiral::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "king_mass_radius.svg".into());
    let table = sweep(&MacroEos::new(AnsatzSpec::KING)?, &uniform_grid(0.2, 28.0, 1500), &SolveOptions::default())?;
    let window = tail_window(&table, 2.0)?;
    let fit = fit_spiral(&table, window, FitMode::Fixed)?;

    let eps: Vec<f64> = (0..600).map(|i| (window.lo + (window.hi - window.lo) * i as f64 / 599.0).exp()).collect();
    let data = Series::new("King", table.rows.iter().map(|r| [r.radius, r.mass]).collect());
    let style = PlotStyle {
        title: "King model".into(),
        x_label: "R".into(),
        y_label: "M".into(),
        blowup: Some(Bounds::around(fit.center, 0.01, 0.004)),
        overlay: Some(Series::new("fitted spiral", predict_curve(&fit, &eps)).with_color("#c0392b").dashed()),
    };
    write_svg(out.as_ref(), &[data], &style)?;
    println!("center ({:.6}, {:.6}), rms {:.4} -> {out}", fit.center[0], fit.center[1], fit.rms_resid);
    Ok(())
}
