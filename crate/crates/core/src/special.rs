//! Special functions needed by the macroscopic equations of state.

use std::f64::consts::PI;

/// `√π / 2`, i.e. Γ(3/2).
pub const GAMMA_3_2: f64 = 0.886_226_925_452_758_0;

/// Lower incomplete gamma γ(3/2, y) = (√π/2) erf(√y) − √y e^{−y}.
///
/// Loses relative accuracy for small `y` through cancellation; callers use a
/// power series there.
pub fn lower_gamma_3_2(y: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    let s = y.sqrt();
    GAMMA_3_2 * libm::erf(s) - s * (-y).exp()
}

/// Lower incomplete gamma γ(5/2, y) by the recurrence γ(s+1, y) = s γ(s, y) − y^s e^{−y}.
pub fn lower_gamma_5_2(y: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    1.5 * lower_gamma_3_2(y) - y * y.sqrt() * (-y).exp()
}

/// Euler's gamma function.
pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// Beta function B(a, b) for positive arguments.
pub fn beta(a: f64, b: f64) -> f64 {
    if a + b < 170.0 {
        libm::tgamma(a) * libm::tgamma(b) / libm::tgamma(a + b)
    } else {
        (libm::lgamma(a) + libm::lgamma(b) - libm::lgamma(a + b)).exp()
    }
}

/// B(1/2, 3/2) = π/2; exposed for tests and the n = 1 Lane–Emden oracle.
pub const BETA_HALF_THREE_HALVES: f64 = PI / 2.0;
