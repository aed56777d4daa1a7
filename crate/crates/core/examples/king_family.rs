//! Sweep the King family over γ ∈ [0.2, 28], write the family CSV and list
//! the turning points of R and M against ln ε.
//!
//!     cargo run --release --example king_family -- [out.csv]

use vlasov_spiral::family::{sweep, uniform_grid};
use vlasov_spiral::io::write_family_file;
use vlasov_spiral::spiral::turning_points;
use vlasov_spiral::steady_state::SolveOptions;
use vlasov_spiral::{AnsatzSpec, MacroEos};

fn main() -> vlasov_spiral::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "king_family.csv".into());
    let eos = MacroEos::new(AnsatzSpec::KING)?;
    let table = sweep(&eos, &uniform_grid(0.2, 28.0, 1500), &SolveOptions::default())?;
    write_family_file(out.as_ref(), &table)?;
    println!("{} rows, {} skipped -> {out}", table.len(), table.skipped.len());

    let tp = turning_points(&table)?;
    println!("{:>6} {:>10} {:>10} {:>12} {:>12}", "kind", "gamma", "ln eps", "R", "M");
    for p in &tp.points {
        println!("{:>6} {:>10.4} {:>10.4} {:>12.6} {:>12.6}", p.kind.label(), p.gamma, p.ln_eps, p.point[0], p.point[1]);
    }
    println!("alternating R/M extrema: {}", tp.is_alternating());
    Ok(())
}
