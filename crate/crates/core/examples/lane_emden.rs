//! The k = −1/2 polytrope reduces to the n = 1 Lane–Emden equation, whose
//! solution sin(ar)/(ar) gives R and M in closed form.
//!
//!     cargo run --release --example lane_emden -- [gamma]

use std::f64::consts::PI;

use vlasov_spiral::steady_state::{evaluate_profile, solve_radial, SolveOptions};
use vlasov_spiral::{AnsatzSpec, MacroEos};

fn main() -> vlasov_spiral::Result<()> {
    let gamma: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1.0);
    let eos = MacroEos::new(AnsatzSpec::polytrope(-0.5, 0.0, 1.0))?;
    let p = solve_radial(&eos, gamma, &SolveOptions::default())?;

    // ρ = c·y with c = 2^{3/2}π², so y'' + (2/r)y' = −4πc·y and a² = 4πc
    let a = (4.0 * PI * 2f64.powf(1.5) * PI * PI).sqrt();
    let r_exact = PI / a;
    let m_exact = gamma * PI / a;
    println!("gamma = {gamma}");
    println!("R = {:.12}  exact {:.12}  rel {:.1e}", p.radius, r_exact, ((p.radius - r_exact) / r_exact).abs());
    println!("M = {:.12}  exact {:.12}  rel {:.1e}", p.mass, m_exact, ((p.mass - m_exact) / m_exact).abs());
    println!("E0 = {:.12}, {} steps", p.cutoff_energy, p.step_count());

    let worst = (1..20)
        .map(|i| {
            let r = p.radius * i as f64 / 20.0;
            let (y, _, _, _) = evaluate_profile(&p, r).unwrap();
            let exact = gamma * (a * r).sin() / (a * r);
            (y - exact).abs() / gamma
        })
        .fold(0.0, f64::max);
    println!("max |y - y_exact| / gamma on the interior = {worst:.1e}");
    Ok(())
}
