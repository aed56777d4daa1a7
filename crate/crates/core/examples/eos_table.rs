//! Macroscopic equation of state for the exponential family: g, h, the
//! series/closed-form values against quadrature, and the ratio α(x) = h/g.
//!
//!     cargo run --release --example eos_table

use vlasov_spiral::{AnsatzSpec, MacroEos};

fn main() -> vlasov_spiral::Result<()> {
    let models = [
        ("King", AnsatzSpec::KING),
        ("Woolley-Dickens", AnsatzSpec::WOOLLEY_DICKENS),
        ("Wilson", AnsatzSpec::WILSON),
        ("a=0, b=1", AnsatzSpec::ExpFamily { a: 0, b: 1 }),
    ];
    for (name, spec) in models {
        let eos = MacroEos::new(spec)?;
        println!("{name} ({spec})");
        println!("{:>8} {:>14} {:>14} {:>10} {:>10}", "y", "g(y)", "h(y)", "rel g", "rel h");
        for y in [1e-3, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 30.0] {
            let (g, h) = (eos.g(y), eos.h(y));
            let rg = ((g - eos.g_quadrature(y)?) / g).abs();
            let rh = ((h - eos.h_quadrature(y)?) / h).abs();
            println!("{y:>8.3} {g:>14.6e} {h:>14.6e} {rg:>10.1e} {rh:>10.1e}");
        }
        for x in [1e-10, 1e-4, 1e-2, 1.0] {
            println!("  alpha({x:e}) = {:.8}", eos.alpha(x)?);
        }
        println!();
    }
    Ok(())
}
