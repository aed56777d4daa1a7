//! Microscopic ansatz functions φ and the macroscopic density and pressure
//! functions g, h they induce, together with the homology function α = p/ρ.
//!
//! For an ansatz `f = φ(E₀ − E)` the density and radial pressure are
//! functions of the effective potential `y = E₀ − U`:
//!
//! ```text
//! g(y) = 2^{5/2} π ∫₀^y φ(η) (y − η)^{1/2} dη
//! h(y) = 2^{7/2} π / 3 ∫₀^y φ(η) (y − η)^{3/2} dη
//! ```
//!
//! Every variant has a direct evaluation path (power series, closed form via
//! incomplete gamma functions, or Beta functions) and an independent
//! quadrature path ([`MacroEos::g_quadrature`], [`MacroEos::h_quadrature`]).

use std::fmt;
use std::f64::consts::PI;
use std::str::FromStr;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::quad;
use crate::special::{beta, lower_gamma_3_2, lower_gamma_5_2};

/// 2^{5/2} π, the prefactor of g.
pub const G_PREFACTOR: f64 = 5.656_854_249_492_381 * PI;
/// 2^{7/2} π / 3, the prefactor of h.
pub const H_PREFACTOR: f64 = 11.313_708_498_984_761 * PI / 3.0;

/// Selector for the microscopic equation of state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnsatzSpec {
    /// φ(η) = e^η − a − bη for η > 0.
    ExpFamily { a: u8, b: u8 },
    /// φ(η) = amplitude · η₊^k, optionally multiplied by L^l.
    Polytrope { k: f64, l: f64, amplitude: f64 },
    /// φ(η) = η^k on (0, 1], e^{η−1} above.
    HybridExpPoly { k: f64 },
}

impl AnsatzSpec {
    pub const KING: AnsatzSpec = AnsatzSpec::ExpFamily { a: 1, b: 0 };
    pub const WOOLLEY_DICKENS: AnsatzSpec = AnsatzSpec::ExpFamily { a: 0, b: 0 };
    pub const WILSON: AnsatzSpec = AnsatzSpec::ExpFamily { a: 1, b: 1 };

    pub fn polytrope(k: f64, l: f64, amplitude: f64) -> Self {
        AnsatzSpec::Polytrope { k, l, amplitude }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            AnsatzSpec::ExpFamily { a, b } => {
                if a > 1 || b > 1 {
                    return Err(Error::Spec(format!("exp-family flags must be 0 or 1, got a = {a}, b = {b}")));
                }
            }
            AnsatzSpec::Polytrope { k, l, amplitude } => {
                if !(k > -1.0) || !k.is_finite() {
                    return Err(Error::Spec(format!("polytrope requires k > -1, got {k}")));
                }
                if !(l >= 0.0) || !l.is_finite() {
                    return Err(Error::Spec(format!("polytrope requires l >= 0, got {l}")));
                }
                if !(amplitude > 0.0) || !amplitude.is_finite() {
                    return Err(Error::Spec(format!("polytrope requires amplitude > 0, got {amplitude}")));
                }
            }
            AnsatzSpec::HybridExpPoly { k } => {
                if !(k > 0.0 && k < 1.5) {
                    return Err(Error::Spec(format!("hybrid ansatz requires 0 < k < 3/2, got {k}")));
                }
            }
        }
        Ok(())
    }

    /// φ(η); assumes a validated spec.
    pub fn phi_unchecked(&self, eta: f64) -> f64 {
        if eta <= 0.0 {
            return 0.0;
        }
        match *self {
            AnsatzSpec::ExpFamily { a, b } => {
                // e^η − 1 via expm1 keeps the King and Wilson forms accurate near 0
                let em1 = eta.exp_m1();
                em1 + (1.0 - a as f64) - b as f64 * eta
            }
            AnsatzSpec::Polytrope { k, amplitude, .. } => amplitude * eta.powf(k),
            AnsatzSpec::HybridExpPoly { k } => {
                if eta <= 1.0 {
                    eta.powf(k)
                } else {
                    (eta - 1.0).exp()
                }
            }
        }
    }

    /// Angular-momentum exponent l (zero except for anisotropic polytropes).
    pub fn angular_exponent(&self) -> f64 {
        match *self {
            AnsatzSpec::Polytrope { l, .. } => l,
            _ => 0.0,
        }
    }
}

impl fmt::Display for AnsatzSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            AnsatzSpec::ExpFamily { a, b } => write!(f, "exp:{a},{b}"),
            AnsatzSpec::Polytrope { k, l, amplitude } => write!(f, "poly:{k},{l},{amplitude}"),
            AnsatzSpec::HybridExpPoly { k } => write!(f, "hybrid:{k}"),
        }
    }
}

/// Parses `king`, `woolley-dickens`, `wilson`, `exp:a,b`, `poly:k,l,amp` or
/// `hybrid:k`, and validates the result.
impl FromStr for AnsatzSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let nums = |body: &str, n: usize| -> Result<Vec<f64>> {
            let v = body
                .split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad number {t:?} in model {s:?}"))))
                .collect::<Result<Vec<_>>>()?;
            if v.len() != n {
                return Err(Error::Parse(format!("model {s:?} needs {n} parameters, got {}", v.len())));
            }
            Ok(v)
        };
        let spec = match s.trim() {
            "king" => AnsatzSpec::KING,
            "woolley-dickens" | "wd" => AnsatzSpec::WOOLLEY_DICKENS,
            "wilson" => AnsatzSpec::WILSON,
            t => match t.split_once(':') {
                Some(("exp", body)) => {
                    let v = nums(body, 2)?;
                    let flag = |x: f64| match x {
                        0.0 => Ok(0),
                        1.0 => Ok(1),
                        _ => Err(Error::Spec(format!("exp-family flags must be 0 or 1, got {x}"))),
                    };
                    AnsatzSpec::ExpFamily { a: flag(v[0])?, b: flag(v[1])? }
                }
                Some(("poly", body)) => {
                    let v = nums(body, 3)?;
                    AnsatzSpec::polytrope(v[0], v[1], v[2])
                }
                Some(("hybrid", body)) => AnsatzSpec::HybridExpPoly { k: nums(body, 1)?[0] },
                _ => return Err(Error::Parse(format!("unknown model {s:?}"))),
            },
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// φ(η) for `spec`, validating the parameters first.
pub fn phi(spec: &AnsatzSpec, eta: f64) -> Result<f64> {
    spec.validate()?;
    Ok(spec.phi_unchecked(eta))
}

/// Macroscopic equation of state induced by an ansatz.
///
/// For polytropes with `l > 0` the density carries an extra `r^{2l}` factor;
/// that factor lives in the radial solver and `g`, `h` here are the
/// y-dependent parts only.
#[derive(Debug, Clone)]
pub struct MacroEos {
    spec: AnsatzSpec,
    series_cutoff: f64,
    quad_tol: f64,
    density_prefactor: f64,
}

impl MacroEos {
    pub fn new(spec: AnsatzSpec) -> Result<Self> {
        spec.validate()?;
        let density_prefactor = match spec {
            AnsatzSpec::Polytrope { k, l, amplitude } => {
                if l == 0.0 {
                    amplitude * G_PREFACTOR * beta(k + 1.0, 1.5)
                } else {
                    cached_velocity_prefactor(k, l, amplitude)?
                }
            }
            _ => 0.0,
        };
        Ok(Self {
            spec,
            series_cutoff: 1.0,
            quad_tol: 1e-12,
            density_prefactor,
        })
    }

    pub fn with_series_cutoff(mut self, y_star: f64) -> Self {
        self.series_cutoff = y_star;
        self
    }

    pub fn with_quad_tol(mut self, tol: f64) -> Self {
        self.quad_tol = tol;
        self
    }

    pub fn spec(&self) -> &AnsatzSpec {
        &self.spec
    }

    pub fn series_cutoff(&self) -> f64 {
        self.series_cutoff
    }

    pub fn quad_tol(&self) -> f64 {
        self.quad_tol
    }

    /// Polytropes only: c in `g(y) = c·y^{k+l+3/2}`.
    pub fn density_prefactor(&self) -> Option<f64> {
        matches!(self.spec, AnsatzSpec::Polytrope { .. }).then_some(self.density_prefactor)
    }

    fn polytrope_exponent(&self) -> f64 {
        match self.spec {
            AnsatzSpec::Polytrope { k, l, .. } => k + l + 1.5,
            _ => f64::NAN,
        }
    }

    /// Density g(y).
    pub fn g(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        match self.spec {
            AnsatzSpec::ExpFamily { a, b } => {
                if y <= self.series_cutoff {
                    G_PREFACTOR * exp_series(y, a, b, Moment::Density).0
                } else {
                    G_PREFACTOR * exp_closed(y, a, b, Moment::Density)
                }
            }
            AnsatzSpec::Polytrope { .. } => self.density_prefactor * y.powf(self.polytrope_exponent()),
            AnsatzSpec::HybridExpPoly { k } => G_PREFACTOR * hybrid_integral(y, k, 0.5),
        }
    }

    /// Pressure h(y).
    pub fn h(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        match self.spec {
            AnsatzSpec::ExpFamily { a, b } => {
                if y <= self.series_cutoff {
                    H_PREFACTOR * exp_series(y, a, b, Moment::Pressure).0
                } else {
                    H_PREFACTOR * exp_closed(y, a, b, Moment::Pressure)
                }
            }
            AnsatzSpec::Polytrope { .. } => {
                let n = self.polytrope_exponent();
                self.density_prefactor * y.powf(n + 1.0) / (n + 1.0)
            }
            AnsatzSpec::HybridExpPoly { k } => H_PREFACTOR * hybrid_integral(y, k, 1.5),
        }
    }

    /// g'(y), used by the start-up series of the radial solver.
    pub fn g_prime(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        match self.spec {
            AnsatzSpec::ExpFamily { a, b } => {
                if y <= self.series_cutoff {
                    G_PREFACTOR * exp_series(y, a, b, Moment::Density).1
                } else {
                    let s = y.sqrt();
                    G_PREFACTOR * (y.exp() * lower_gamma_3_2(y) + (1.0 - a as f64) * s - b as f64 * (2.0 / 3.0) * y * s)
                }
            }
            AnsatzSpec::Polytrope { .. } => {
                let n = self.polytrope_exponent();
                self.density_prefactor * n * y.powf(n - 1.0)
            }
            AnsatzSpec::HybridExpPoly { k } => {
                if y <= 1.0 {
                    G_PREFACTOR * beta(k + 1.0, 1.5) * (k + 1.5) * y.powf(k + 0.5)
                } else {
                    let core = hybrid_core(y, k, -0.5) * 0.5;
                    let t = y - 1.0;
                    G_PREFACTOR * (core + t.exp() * lower_gamma_3_2(t) + t.sqrt())
                }
            }
        }
    }

    /// Exact power series for the exp family (any y, intended for y ≤ y*).
    pub fn g_series(&self, y: f64) -> Option<f64> {
        match self.spec {
            AnsatzSpec::ExpFamily { a, b } if y > 0.0 => Some(G_PREFACTOR * exp_series(y, a, b, Moment::Density).0),
            AnsatzSpec::ExpFamily { .. } => Some(0.0),
            _ => None,
        }
    }

    pub fn h_series(&self, y: f64) -> Option<f64> {
        match self.spec {
            AnsatzSpec::ExpFamily { a, b } if y > 0.0 => Some(H_PREFACTOR * exp_series(y, a, b, Moment::Pressure).0),
            AnsatzSpec::ExpFamily { .. } => Some(0.0),
            _ => None,
        }
    }

    /// Incomplete-gamma closed form for the exp family (intended for y > y*).
    pub fn g_closed(&self, y: f64) -> Option<f64> {
        match self.spec {
            AnsatzSpec::ExpFamily { a, b } if y > 0.0 => Some(G_PREFACTOR * exp_closed(y, a, b, Moment::Density)),
            AnsatzSpec::ExpFamily { .. } => Some(0.0),
            _ => None,
        }
    }

    pub fn h_closed(&self, y: f64) -> Option<f64> {
        match self.spec {
            AnsatzSpec::ExpFamily { a, b } if y > 0.0 => Some(H_PREFACTOR * exp_closed(y, a, b, Moment::Pressure)),
            AnsatzSpec::ExpFamily { .. } => Some(0.0),
            _ => None,
        }
    }

    /// g(y) by adaptive quadrature of the defining integral.
    pub fn g_quadrature(&self, y: f64) -> Result<f64> {
        if y <= 0.0 {
            return Ok(0.0);
        }
        match self.spec {
            AnsatzSpec::Polytrope { k, l, amplitude } if l > 0.0 => velocity_space_density(k, l, amplitude, y, self.quad_tol),
            _ => Ok(G_PREFACTOR * self.defining_integral(y, 0.5)?),
        }
    }

    /// h(y) by adaptive quadrature of the defining integral.
    ///
    /// For anisotropic polytropes the radial pressure is recovered from
    /// `h' = g` applied to the quadrature value of g.
    pub fn h_quadrature(&self, y: f64) -> Result<f64> {
        if y <= 0.0 {
            return Ok(0.0);
        }
        match self.spec {
            AnsatzSpec::Polytrope { l, .. } if l > 0.0 => {
                let n = self.polytrope_exponent();
                Ok(self.g_quadrature(y)? * y / (n + 1.0))
            }
            _ => Ok(H_PREFACTOR * self.defining_integral(y, 1.5)?),
        }
    }

    /// ∫₀^y φ(η)(y−η)^s dη, split at y/2: the lower half in η (or in
    /// u = η^{k+1} for power-law φ), the upper half in t = √(y−η).
    fn defining_integral(&self, y: f64, s: f64) -> Result<f64> {
        let tol = self.quad_tol;
        let spec = self.spec;
        let split = 0.5 * y;
        let mut breaks_low = vec![0.0, split];
        let mut breaks_up = vec![split, y];
        if let AnsatzSpec::HybridExpPoly { .. } = spec {
            if 1.0 < split {
                breaks_low = vec![0.0, 1.0, split];
            } else if 1.0 < y {
                breaks_up = vec![split, 1.0, y];
            }
        }
        let power = match spec {
            AnsatzSpec::Polytrope { k, .. } | AnsatzSpec::HybridExpPoly { k } => Some(k),
            _ => None,
        };
        let mut total = 0.0;
        for w in breaks_low.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let part = match power {
                // power-law piece: η^k dη = du with η = ((k+1)u)^{1/(k+1)}
                Some(k) if lo == 0.0 => {
                    let amp = match spec {
                        AnsatzSpec::Polytrope { amplitude, .. } => amplitude,
                        _ => 1.0,
                    };
                    let u_hi = hi.powf(k + 1.0) / (k + 1.0);
                    amp * quad::integrate_checked(
                        |u| {
                            let eta = ((k + 1.0) * u).powf(1.0 / (k + 1.0));
                            (y - eta).powf(s)
                        },
                        0.0,
                        u_hi,
                        tol,
                        0.0,
                    )?
                }
                _ => quad::integrate_checked(|eta| spec.phi_unchecked(eta) * (y - eta).powf(s), lo, hi, tol, 0.0)?,
            };
            total += part;
        }
        for w in breaks_up.windows(2) {
            let (t_lo, t_hi) = ((y - w[1]).max(0.0).sqrt(), (y - w[0]).sqrt());
            let part = quad::integrate_checked(
                |t| spec.phi_unchecked(y - t * t) * 2.0 * t.powf(2.0 * s + 1.0),
                t_lo,
                t_hi,
                tol,
                0.0,
            )?;
            total += part;
        }
        Ok(total)
    }

    /// Unique y ≥ 0 with h(y) = p, by safeguarded Newton iteration on
    /// ln h with a bisection fallback.
    pub fn invert_h(&self, p: f64) -> Result<f64> {
        if !(p >= 0.0) || !p.is_finite() {
            return Err(Error::Domain(format!("invert_h needs a finite p >= 0, got {p}")));
        }
        if p == 0.0 {
            return Ok(0.0);
        }
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        while self.h(hi) < p {
            lo = hi;
            hi *= 2.0;
            if hi > 1e6 {
                return Err(Error::Domain(format!("pressure {p:e} out of range")));
            }
        }
        let target = p.ln();
        let mut y = if lo == 0.0 {
            // local power-law guess below the first bracket point
            let q = hi * self.g(hi) / self.h(hi);
            hi * (p / self.h(hi)).powf(1.0 / q)
        } else {
            0.5 * (lo + hi)
        };
        if !(y > lo && y < hi) {
            y = 0.5 * (lo + hi);
        }
        for _ in 0..200 {
            let hv = self.h(y);
            let f = hv.ln() - target;
            if f == 0.0 {
                return Ok(y);
            }
            if f > 0.0 {
                hi = y;
            } else {
                lo = y;
            }
            let slope = self.g(y) / hv;
            let mut next = y - f / slope;
            if !(next > lo && next < hi) || !next.is_finite() {
                next = 0.5 * (lo + hi);
            }
            if (next - y).abs() <= 4.0 * f64::EPSILON * y || hi - lo <= 4.0 * f64::EPSILON * hi {
                return Ok(next);
            }
            y = next;
        }
        Ok(y)
    }

    /// α(x) = p/ρ at inverse pressure x = 1/p.
    pub fn alpha(&self, x: f64) -> Result<f64> {
        match self.spec {
            AnsatzSpec::Polytrope { .. } => {
                let y = self.invert_h(1.0 / checked_x(x)?)?;
                Ok(y / (self.polytrope_exponent() + 1.0))
            }
            _ => Ok(1.0 + self.alpha_gap(x)?),
        }
    }

    /// α(x) − 1 = (h − g)/g, with g − h taken from its exact closed form so
    /// that the gap keeps full relative accuracy as x → 0.
    pub fn alpha_gap(&self, x: f64) -> Result<f64> {
        let y = self.invert_h(1.0 / checked_x(x)?)?;
        Ok(self.gap_at_y(y))
    }

    /// (h − g)/g as a function of y > 0.
    pub fn gap_at_y(&self, y: f64) -> f64 {
        match self.spec {
            AnsatzSpec::ExpFamily { .. } => -self.g_minus_h(y) / self.g(y),
            AnsatzSpec::Polytrope { .. } => y / (self.polytrope_exponent() + 1.0) - 1.0,
            AnsatzSpec::HybridExpPoly { .. } => -self.g_minus_h(y) / self.g(y),
        }
    }

    /// Exact g(y) − h(y) from the integration-by-parts identity
    /// g − h = (2^{7/2}π/3)[φ(0⁺) y^{3/2} + ∫₀^y (φ' − φ)(η)(y−η)^{3/2} dη].
    pub fn g_minus_h(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        match self.spec {
            AnsatzSpec::ExpFamily { a, b } => {
                let (a, b) = (a as f64, b as f64);
                let y32 = y * y.sqrt();
                let y52 = y32 * y;
                let y72 = y52 * y;
                H_PREFACTOR * ((1.0 - a) * y32 + (a - b) * 0.4 * y52 + b * (4.0 / 35.0) * y72)
            }
            AnsatzSpec::Polytrope { .. } => self.g(y) - self.h(y),
            AnsatzSpec::HybridExpPoly { k } => {
                let c = y.min(1.0);
                // ∫₀^c k η^{k−1}(y−η)^{3/2} dη with u = η^k
                let rise = if y <= 1.0 {
                    k * beta(k, 2.5) * y.powf(k + 1.5)
                } else {
                    quad::integrate(|u| (y - u.powf(1.0 / k)).powf(1.5), 0.0, c.powf(k), 1e-13, 0.0, 4000).value
                };
                H_PREFACTOR * (rise - hybrid_core(y, k, 1.5))
            }
        }
    }
}

fn checked_x(x: f64) -> Result<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(Error::Domain(format!("alpha needs x > 0, got {x}")))
    }
}

#[derive(Clone, Copy)]
enum Moment {
    Density,
    Pressure,
}

/// Series ∑ (1/j! − a[j=0] − b[j=1]) B(j+1, s+1) y^{j+s+1} and its y-derivative,
/// with s = 1/2 (density) or 3/2 (pressure). The prefactor is applied by the caller.
fn exp_series(y: f64, a: u8, b: u8, moment: Moment) -> (f64, f64) {
    let s1 = match moment {
        Moment::Density => 1.5,
        Moment::Pressure => 2.5,
    };
    // t_j = Γ(s+1) y^{j+s+1} / Γ(j+s+2) = B(j+1, s+1) y^{j+s+1} / j!
    let mut term = y.powf(s1) / s1;
    let mut sum = 0.0;
    let mut dsum = 0.0;
    for j in 0..400 {
        let weight = match j {
            0 => 1.0 - a as f64,
            1 => 1.0 - b as f64,
            _ => 1.0,
        };
        let contrib = weight * term;
        sum += contrib;
        dsum += contrib * (j as f64 + s1) / y;
        if j >= 2 && term < 1e-17 * sum {
            break;
        }
        term *= y / (j as f64 + s1 + 1.0);
    }
    (sum, dsum)
}

fn exp_closed(y: f64, a: u8, b: u8, moment: Moment) -> f64 {
    let (a, b) = (a as f64, b as f64);
    let y32 = y * y.sqrt();
    match moment {
        Moment::Density => y.exp() * lower_gamma_3_2(y) - a * (2.0 / 3.0) * y32 - b * (4.0 / 15.0) * y32 * y,
        Moment::Pressure => y.exp() * lower_gamma_5_2(y) - a * 0.4 * y32 * y - b * (4.0 / 35.0) * y32 * y * y,
    }
}

/// ∫₀^{min(y,1)} η^k (y−η)^s dη.
fn hybrid_core(y: f64, k: f64, s: f64) -> f64 {
    if y <= 1.0 {
        return beta(k + 1.0, s + 1.0) * y.powf(k + s + 1.0);
    }
    quad::integrate(
        |u| {
            let eta = ((k + 1.0) * u).powf(1.0 / (k + 1.0));
            (y - eta).powf(s)
        },
        0.0,
        1.0 / (k + 1.0),
        1e-14,
        0.0,
        4000,
    )
    .value
}

/// ∫₀^y φ(η)(y−η)^s dη for the hybrid ansatz.
fn hybrid_integral(y: f64, k: f64, s: f64) -> f64 {
    if y <= 1.0 {
        return hybrid_core(y, k, s);
    }
    let t = y - 1.0;
    let tail = if s == 0.5 { lower_gamma_3_2(t) } else { lower_gamma_5_2(t) };
    hybrid_core(y, k, s) + t.exp() * tail
}

/// ρ at r = 1 for `f = amplitude·(y − |v|²/2)₊^k · |x × v|^{2l}`, by direct
/// quadrature over velocity space in spherical coordinates (|v|, θ); the
/// azimuth contributes 2π.
pub fn velocity_space_density(k: f64, l: f64, amplitude: f64, y: f64, tol: f64) -> Result<f64> {
    if y <= 0.0 {
        return Ok(0.0);
    }
    let vmax = (2.0 * y).sqrt();
    let mut inner_err: Option<Error> = None;
    let outer = quad::integrate(
        |theta: f64| {
            let st = theta.sin();
            // |v| = vmax·sin ψ removes the (y − v²/2)^k endpoint behaviour
            let inner = quad::integrate_checked(
                |psi: f64| {
                    let v = vmax * psi.sin();
                    let e = y * psi.cos().powi(2);
                    e.powf(k) * (v * st).powf(2.0 * l) * v * v * vmax * psi.cos()
                },
                0.0,
                std::f64::consts::FRAC_PI_2,
                tol,
                0.0,
            );
            match inner {
                Ok(v) => v * st,
                Err(e) => {
                    inner_err.get_or_insert(e);
                    0.0
                }
            }
        },
        0.0,
        PI,
        tol,
        0.0,
        4000,
    );
    if let Some(e) = inner_err {
        return Err(e);
    }
    if !outer.converged {
        return Err(Error::Quadrature { lo: 0.0, hi: PI, err: outer.error });
    }
    Ok(2.0 * PI * amplitude * outer.value)
}

fn cached_velocity_prefactor(k: f64, l: f64, amplitude: f64) -> Result<f64> {
    use std::collections::HashMap;
    use std::sync::Mutex;
    static CACHE: OnceLock<Mutex<HashMap<(u64, u64), f64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (k.to_bits(), l.to_bits());
    if let Some(c) = cache.lock().expect("prefactor cache poisoned").get(&key) {
        return Ok(c * amplitude);
    }
    let c = velocity_space_density(k, l, 1.0, 1.0, 1e-12)?;
    cache.lock().expect("prefactor cache poisoned").insert(key, c);
    Ok(c * amplitude)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn model_selectors() {
        assert_eq!("king".parse::<AnsatzSpec>().unwrap(), "exp:1,0".parse().unwrap());
        assert_eq!("woolley-dickens".parse::<AnsatzSpec>().unwrap(), AnsatzSpec::WOOLLEY_DICKENS);
        assert_eq!("wilson".parse::<AnsatzSpec>().unwrap(), AnsatzSpec::ExpFamily { a: 1, b: 1 });
        assert_eq!("poly:-0.5,0,1".parse::<AnsatzSpec>().unwrap(), AnsatzSpec::polytrope(-0.5, 0.0, 1.0));
        for s in [AnsatzSpec::KING, AnsatzSpec::ExpFamily { a: 0, b: 1 }, AnsatzSpec::polytrope(2.5, 0.5, 0.3), AnsatzSpec::HybridExpPoly { k: 0.75 }] {
            assert_eq!(s.to_string().parse::<AnsatzSpec>().unwrap(), s);
        }
        assert!(matches!("exp:2,0".parse::<AnsatzSpec>(), Err(Error::Spec(_))));
        assert!(matches!("poly:1,0".parse::<AnsatzSpec>(), Err(Error::Parse(_))));
        assert!(matches!("plummer".parse::<AnsatzSpec>(), Err(Error::Parse(_))));
        assert!(matches!("hybrid:2".parse::<AnsatzSpec>(), Err(Error::Spec(_))));
    }

    #[test]
    fn phi_examples() {
        let king = AnsatzSpec::KING;
        assert_eq!(phi(&king, -0.5).unwrap(), 0.0);
        assert!((phi(&king, 1.0).unwrap() - 1.718_281_828_459_045).abs() < 1e-15);
        let poly = AnsatzSpec::polytrope(2.0, 0.0, 0.5);
        assert_eq!(phi(&poly, 2.0).unwrap(), 2.0);
        assert_eq!(phi(&AnsatzSpec::WOOLLEY_DICKENS, 1e-300).unwrap(), 1.0);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(matches!(phi(&AnsatzSpec::ExpFamily { a: 2, b: 0 }, 1.0), Err(Error::Spec(_))));
        assert!(MacroEos::new(AnsatzSpec::polytrope(-1.0, 0.0, 1.0)).is_err());
        assert!(MacroEos::new(AnsatzSpec::polytrope(1.0, 0.0, 0.0)).is_err());
        assert!(MacroEos::new(AnsatzSpec::polytrope(1.0, -0.5, 1.0)).is_err());
        assert!(MacroEos::new(AnsatzSpec::HybridExpPoly { k: 1.5 }).is_err());
        assert!(MacroEos::new(AnsatzSpec::HybridExpPoly { k: 0.0 }).is_err());
    }

    #[test]
    fn g_at_zero_is_zero() {
        for spec in [AnsatzSpec::KING, AnsatzSpec::WILSON, AnsatzSpec::polytrope(1.0, 0.0, 1.0), AnsatzSpec::HybridExpPoly { k: 0.5 }] {
            let eos = MacroEos::new(spec).unwrap();
            assert_eq!(eos.g(0.0), 0.0);
            assert_eq!(eos.h(0.0), 0.0);
            assert_eq!(eos.g(-3.0), 0.0);
        }
    }

    #[test]
    fn woolley_dickens_g_at_one() {
        // 2^{5/2} π e γ(3/2, 1)
        let eos = MacroEos::new(AnsatzSpec::WOOLLEY_DICKENS).unwrap();
        let lg = 0.886_226_925_452_758 * 0.842_700_792_949_714_9 - (-1.0f64).exp();
        let expected = G_PREFACTOR * 1f64.exp() * lg;
        assert!(rel(eos.g(1.0), expected) < 1e-14);
        assert!((eos.g(1.0) - 18.306).abs() < 1e-3);
        assert!(rel(eos.g_quadrature(1.0).unwrap(), expected) < 1e-12);
    }

    #[test]
    fn polytrope_half_g_at_one() {
        let eos = MacroEos::new(AnsatzSpec::polytrope(-0.5, 0.0, 1.0)).unwrap();
        let expected = 2f64.powf(1.5) * PI * PI;
        assert!(rel(eos.g(1.0), expected) < 1e-14);
        assert!((eos.g(1.0) - 27.915_457).abs() < 1e-5);
        assert!(rel(eos.g_quadrature(1.0).unwrap(), expected) < 1e-11);
    }

    #[test]
    fn polytrope_pressure_ratio() {
        for k in [-0.5, 0.0, 1.0, 2.5] {
            let eos = MacroEos::new(AnsatzSpec::polytrope(k, 0.0, 1.0)).unwrap();
            for y in [0.1, 1.0, 7.0] {
                assert!(rel(eos.h(y) / eos.g(y), y / (k + 2.5)) < 1e-13);
            }
        }
    }

    #[test]
    fn king_h_matches_quadrature() {
        let eos = MacroEos::new(AnsatzSpec::KING).unwrap();
        assert!(rel(eos.h(2.0), eos.h_quadrature(2.0).unwrap()) < 1e-10);
    }

    #[test]
    fn series_closed_switch_is_continuous() {
        for spec in [AnsatzSpec::KING, AnsatzSpec::WOOLLEY_DICKENS, AnsatzSpec::WILSON, AnsatzSpec::ExpFamily { a: 0, b: 1 }] {
            let eos = MacroEos::new(spec).unwrap();
            let y = eos.series_cutoff();
            assert!(rel(eos.g_series(y).unwrap(), eos.g_closed(y).unwrap()) < 1e-10);
            assert!(rel(eos.h_series(y).unwrap(), eos.h_closed(y).unwrap()) < 1e-10);
            let below = eos.g(y * (1.0 - 1e-12));
            let above = eos.g(y * (1.0 + 1e-12));
            assert!(rel(below, above) < 1e-10);
        }
    }

    #[test]
    fn invert_h_round_trips() {
        let eos = MacroEos::new(AnsatzSpec::KING).unwrap();
        assert_eq!(eos.invert_h(0.0).unwrap(), 0.0);
        assert!(rel(eos.invert_h(eos.h(2.0)).unwrap(), 2.0) < 1e-12);
        let wd = MacroEos::new(AnsatzSpec::WOOLLEY_DICKENS).unwrap();
        assert!(rel(wd.invert_h(wd.h(17.3)).unwrap(), 17.3) < 1e-12);
        assert!(rel(wd.invert_h(wd.h(1e-6)).unwrap(), 1e-6) < 1e-12);
        assert!(eos.invert_h(-1.0).is_err());
    }

    #[test]
    fn alpha_limits() {
        let king = MacroEos::new(AnsatzSpec::KING).unwrap();
        assert!(king.alpha_gap(1e-10).unwrap().abs() <= 1e-4);
        assert!(king.alpha(0.0).is_err());
        assert!(king.alpha(-1.0).is_err());
        let poly = MacroEos::new(AnsatzSpec::polytrope(1.0, 0.0, 1.0)).unwrap();
        // α grows without bound as x → 0 for polytropes
        assert!(poly.alpha(1e-12).unwrap() > poly.alpha(1e-6).unwrap());
        assert!(poly.alpha(1e-12).unwrap() > 10.0);
        let y = poly.invert_h(1e6).unwrap();
        assert!(rel(poly.alpha(1e-6).unwrap(), y / 3.5) < 1e-13);
    }

    #[test]
    fn gap_identity_matches_direct_difference() {
        for spec in [AnsatzSpec::KING, AnsatzSpec::WOOLLEY_DICKENS, AnsatzSpec::WILSON, AnsatzSpec::ExpFamily { a: 0, b: 1 }, AnsatzSpec::HybridExpPoly { k: 0.7 }] {
            let eos = MacroEos::new(spec).unwrap();
            for y in [0.3, 1.0, 2.5, 6.0] {
                let direct = eos.g(y) - eos.h(y);
                assert!(((eos.g_minus_h(y) - direct) / eos.g(y)).abs() < 1e-11, "{spec:?} y={y}");
            }
        }
    }

    #[test]
    fn hybrid_matches_quadrature() {
        let eos = MacroEos::new(AnsatzSpec::HybridExpPoly { k: 0.7 }).unwrap();
        for y in [0.2, 0.9, 1.3, 5.0, 20.0] {
            assert!(rel(eos.g(y), eos.g_quadrature(y).unwrap()) < 1e-9, "g at {y}");
            assert!(rel(eos.h(y), eos.h_quadrature(y).unwrap()) < 1e-9, "h at {y}");
        }
        // α → 1 for the hybrid ansatz as well
        assert!(eos.alpha_gap(1e-10).unwrap().abs() < 1e-3);
    }

    #[test]
    fn velocity_prefactor_matches_beta_closed_form() {
        for (k, l) in [(1.0, 1.0), (0.5, 2.0), (1.0, 0.0)] {
            let brute = velocity_space_density(k, l, 1.0, 1.0, 1e-12).unwrap();
            let closed = 2.0 * PI * beta(l + 1.0, 0.5) * 2f64.powf(l + 0.5) * beta(k + 1.0, l + 1.5);
            assert!(rel(brute, closed) < 1e-10, "k={k} l={l}: {brute} vs {closed}");
        }
        let eos = MacroEos::new(AnsatzSpec::polytrope(1.0, 0.0, 1.0)).unwrap();
        assert!(rel(velocity_space_density(1.0, 0.0, 1.0, 1.0, 1e-12).unwrap(), eos.density_prefactor().unwrap()) < 1e-10);
    }

    #[test]
    fn anisotropic_h_derivative_is_g() {
        let eos = MacroEos::new(AnsatzSpec::polytrope(1.0, 1.0, 1.0)).unwrap();
        let y = 0.8;
        let d = 1e-5;
        let fd = (eos.h(y + d) - eos.h(y - d)) / (2.0 * d);
        assert!(rel(fd, eos.g(y)) < 1e-8);
    }
}
