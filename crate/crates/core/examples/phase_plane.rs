//! Homology plane: fixed points of the limit system, the heteroclinic orbit
//! from P to Q, convergence of the regular system as ε → 0, and the spiral
//! traced by V(x̄/ε, ε).
//!
//!     cargo run --release --example phase_plane

use vlasov_spiral::family::log_grid;
use vlasov_spiral::phase_plane::{
    a0_eigenstructure, convergence_gap, default_heteroclinic, distance_to_q, s0_linearization, FixedPoint, Q,
};
use vlasov_spiral::spiral::{fit_v_spiral, FitMode};
use vlasov_spiral::{AnsatzSpec, MacroEos};

fn main() -> vlasov_spiral::Result<()> {
    for (name, p) in [("P", FixedPoint::P), ("Q", FixedPoint::Q)] {
        let lin = s0_linearization(p);
        println!("{name} = {:?}: eigenvalues {} and {}", p.coords(), lin.eigenvalues[0], lin.eigenvalues[1]);
        if let Some(v) = lin.eigenvectors {
            println!("  eigenvectors ({:.6}, {:.6}), ({:.6}, {:.6})", v[0][0], v[0][1], v[1][0], v[1][1]);
        }
    }
    let a0 = a0_eigenstructure();
    println!("A(0) eigenvalues {} and {}", a0.eigenvalues[0], a0.eigenvalues[1]);

    let v0 = default_heteroclinic()?;
    let (x0, x1) = v0.x_range();
    println!("\nheteroclinic: {} samples, X in [{x0:.3e}, {x1:.3e}], ends {:.2e} from Q", v0.samples.len(), distance_to_q(v0));
    println!("region violations: {}", v0.region_violations());

    let king = MacroEos::new(AnsatzSpec::KING)?;
    println!("\nsup |V(X, eps) - V0(X)| for X in (1, 50]:");
    for eps in [1e-2, 1e-4, 1e-6, 1e-8] {
        println!("  eps = {eps:e}: {:.4e}", convergence_gap(&king, eps, 50.0)?);
    }

    let eps = log_grid(1e-12, 1e-5, 200);
    for x_bar in [1e-3, 1e-4] {
        let fit = fit_v_spiral(&king, x_bar, &eps, FitMode::Free)?;
        let d = (fit.center[0] - Q[0]).hypot(fit.center[1] - Q[1]);
        println!("\nx_bar = {x_bar:e}: spiral center ({:.4}, {:.4}), {d:.4} from Q, nu = {:.5}", fit.center[0], fit.center[1], fit.nu);
    }
    Ok(())
}
