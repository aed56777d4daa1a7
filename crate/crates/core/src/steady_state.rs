//! Radial steady states: integration of `y' = −m/r²`, `m' = 4πr²ρ(r, y)` from
//! the centre to the first zero of y.

use std::f64::consts::PI;

use crate::eos::MacroEos;
use crate::error::{Error, Result};
use crate::ode::{self, Control, DenseStep, StepperOptions};
use crate::roots;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Relative tolerance of the stepper, in [1e−13, 1e−6].
    pub rtol: f64,
    /// Integration cutoff; defaults to 10⁴·max((γ/g(γ))^{1/2}, 1).
    pub r_max: Option<f64>,
    pub max_steps: usize,
    /// Extra dense-output samples stored inside each accepted step.
    pub samples_per_step: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            r_max: None,
            max_steps: 200_000,
            samples_per_step: 0,
        }
    }
}

impl SolveOptions {
    pub fn with_rtol(mut self, rtol: f64) -> Self {
        self.rtol = rtol;
        self
    }

    pub fn with_samples_per_step(mut self, n: usize) -> Self {
        self.samples_per_step = n;
        self
    }

    pub fn with_r_max(mut self, r_max: f64) -> Self {
        self.r_max = Some(r_max);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileSample {
    pub r: f64,
    pub y: f64,
    pub m: f64,
    pub rho: f64,
    pub p: f64,
}

/// y(r) = γ + a r^{q} + b r^{2q} with q = 2 + 2l, valid near r = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
struct StartSeries {
    gamma: f64,
    a: f64,
    b: f64,
    q: f64,
}

impl StartSeries {
    fn y(&self, r: f64) -> f64 {
        let rq = r.powf(self.q);
        self.gamma + self.a * rq + self.b * rq * rq
    }

    fn m(&self, r: f64) -> f64 {
        let rq = r.powf(self.q);
        // m = −r² y'
        -r * (self.q * self.a * rq + 2.0 * self.q * self.b * rq * rq)
    }
}

/// A solved radial steady state.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    pub gamma: f64,
    pub eps: f64,
    pub radius: f64,
    pub mass: f64,
    pub cutoff_energy: f64,
    pub samples: Vec<ProfileSample>,
    eos: MacroEos,
    l: f64,
    start: StartSeries,
    r0: f64,
    segments: Vec<DenseStep<2>>,
}

impl RadialProfile {
    pub fn eos(&self) -> &MacroEos {
        &self.eos
    }

    /// Radius where the integration switched from the start series to the stepper.
    pub fn start_radius(&self) -> f64 {
        self.r0
    }

    /// Number of accepted integrator steps inside [r₀, R].
    pub fn step_count(&self) -> usize {
        self.segments.len()
    }

    /// Density and radial pressure at (r, y).
    pub fn moments_at(&self, r: f64, y: f64) -> (f64, f64) {
        moments(&self.eos, self.l, r, y)
    }

    /// Profile represented by samples alone (r = 0 first, increasing r), as
    /// produced by reconstructions from plane trajectories. Between samples
    /// the state is interpolated by cubic Hermite polynomials using the exact
    /// derivatives y' = −m/r², m' = 4πr²ρ. `radius` and `mass` are those of
    /// the last sample.
    pub fn from_samples(eos: &MacroEos, gamma: f64, samples: Vec<ProfileSample>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InsufficientData("a profile needs at least two samples".into()));
        }
        if samples.windows(2).any(|w| !(w[1].r > w[0].r)) {
            return Err(Error::Integrity("profile samples must have strictly increasing r".into()));
        }
        let l = eos.spec().angular_exponent();
        let q = 2.0 + 2.0 * l;
        let a = -4.0 * PI * eos.g(gamma) / ((q + 1.0) * q);
        let b = -4.0 * PI * eos.g_prime(gamma) * a / ((2.0 * q + 1.0) * 2.0 * q);
        let last = *samples.last().expect("non-empty");
        Ok(Self {
            gamma,
            eps: 1.0 / eos.h(gamma),
            radius: last.r,
            mass: last.m,
            cutoff_energy: -last.m / last.r,
            r0: if samples[0].r == 0.0 { 0.0 } else { samples[0].r },
            samples,
            eos: eos.clone(),
            l,
            start: StartSeries { gamma, a, b, q },
            segments: Vec::new(),
        })
    }

    fn hermite_state(&self, r: f64) -> (f64, f64) {
        let idx = self.samples.partition_point(|s| s.r < r).clamp(1, self.samples.len() - 1);
        let (s0, s1) = (&self.samples[idx - 1], &self.samples[idx]);
        let h = s1.r - s0.r;
        let t = (r - s0.r) / h;
        let deriv = |s: &ProfileSample| {
            let dy = if s.r > 0.0 { -s.m / (s.r * s.r) } else { 0.0 };
            (dy, 4.0 * PI * s.r * s.r * s.rho)
        };
        let (dy0, dm0) = deriv(s0);
        let (dy1, dm1) = deriv(s1);
        let h00 = (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t);
        let h10 = t * (1.0 - t) * (1.0 - t);
        let h01 = t * t * (3.0 - 2.0 * t);
        let h11 = t * t * (t - 1.0);
        (
            h00 * s0.y + h10 * h * dy0 + h01 * s1.y + h11 * h * dy1,
            h00 * s0.m + h10 * h * dm0 + h01 * s1.m + h11 * h * dm1,
        )
    }

    fn state_at(&self, r: f64) -> (f64, f64) {
        if self.segments.is_empty() {
            return self.hermite_state(r);
        }
        if r <= self.r0 {
            return (self.start.y(r), self.start.m(r).max(0.0));
        }
        let idx = self.segments.partition_point(|s| s.t1() < r).min(self.segments.len() - 1);
        let s = &self.segments[idx];
        let [y, m] = s.eval(r.min(self.radius));
        (y, m)
    }
}

fn moments(eos: &MacroEos, l: f64, r: f64, y: f64) -> (f64, f64) {
    let y = y.max(0.0);
    if l == 0.0 {
        (eos.g(y), eos.h(y))
    } else {
        let w = r.powf(2.0 * l);
        (w * eos.g(y), w * eos.h(y))
    }
}

/// Solves the radial problem with central value y(0) = γ.
pub fn solve_radial(eos: &MacroEos, gamma: f64, opts: &SolveOptions) -> Result<RadialProfile> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::Domain(format!("gamma must be positive, got {gamma}")));
    }
    if !(1e-13..=1e-6).contains(&opts.rtol) {
        return Err(Error::Domain(format!("rtol must lie in [1e-13, 1e-6], got {:e}", opts.rtol)));
    }
    let l = eos.spec().angular_exponent();
    let g0 = eos.g(gamma);
    let gp0 = eos.g_prime(gamma);
    let q = 2.0 + 2.0 * l;
    let a = -4.0 * PI * g0 / ((q + 1.0) * q);
    let b = -4.0 * PI * gp0 * a / ((2.0 * q + 1.0) * 2.0 * q);
    let start = StartSeries { gamma, a, b, q };
    let r0 = (1e-12 * gamma / a.abs()).powf(1.0 / q);
    let length_scale = (gamma / g0).sqrt();
    let r_max = opts.r_max.unwrap_or(1e4 * length_scale.max(1.0));
    if !(r_max > r0) {
        return Err(Error::Domain(format!("r_max = {r_max:e} does not exceed the start radius {r0:e}")));
    }

    let mass_scale = gamma * length_scale;
    let mut stepper = StepperOptions::new(opts.rtol, 0.0);
    stepper.atol = [1e-3 * opts.rtol * gamma, 1e-3 * opts.rtol * mass_scale];
    stepper.max_steps = opts.max_steps;

    let rhs = |r: f64, s: &[f64; 2]| {
        let rho = moments_rho(eos, l, r, s[0]);
        [-s[1] / (r * r), 4.0 * PI * r * r * rho]
    };
    let mut segments: Vec<DenseStep<2>> = Vec::new();
    let run = ode::integrate(rhs, r0, [start.y(r0), start.m(r0)], r_max, &stepper, |step| {
        segments.push(*step);
        if step.y1()[0] <= 0.0 {
            Control::Stop
        } else {
            Control::Continue
        }
    })?;
    if !run.stopped {
        return Err(Error::NoZeroFound { r_max, y_end: run.y[0] });
    }
    let last = *segments.last().expect("stopped run has at least one step");
    let radius = if last.y1()[0] == 0.0 {
        last.t1()
    } else {
        let xtol = 1e-13 * last.t1();
        roots::brent(|r| last.eval_component(r, 0), last.t0, last.t1(), xtol, 200)
            .ok_or_else(|| Error::Integrity("zero of y not bracketed in final step".into()))?
    };

    let mut samples = Vec::with_capacity(segments.len() * (opts.samples_per_step + 1) + 2);
    let push = |samples: &mut Vec<ProfileSample>, r: f64, y: f64, m: f64| {
        let (rho, p) = moments(eos, l, r, y);
        samples.push(ProfileSample { r, y, m, rho, p });
    };
    push(&mut samples, 0.0, gamma, 0.0);
    push(&mut samples, r0, start.y(r0), start.m(r0));
    let n_sub = opts.samples_per_step + 1;
    for seg in &segments {
        let end = seg.t1().min(radius);
        for j in 1..=n_sub {
            let r = seg.t0 + (end - seg.t0) * j as f64 / n_sub as f64;
            if r >= radius {
                break;
            }
            let [y, m] = seg.eval(r);
            push(&mut samples, r, y, m);
        }
    }
    // m is nondecreasing; keep the interpolated endpoint from dipping below
    // the last sample where ρ has already fallen to round-off
    let mass = last.eval_component(radius, 1).max(samples.last().map_or(0.0, |s| s.m));
    push(&mut samples, radius, 0.0, mass);

    Ok(RadialProfile {
        gamma,
        eps: 1.0 / eos.h(gamma),
        radius,
        mass,
        cutoff_energy: -mass / radius,
        samples,
        eos: eos.clone(),
        l,
        start,
        r0,
        segments,
    })
}

fn moments_rho(eos: &MacroEos, l: f64, r: f64, y: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    if l == 0.0 {
        eos.g(y)
    } else {
        r.powf(2.0 * l) * eos.g(y)
    }
}

/// (y, m, ρ, p) at radius r ∈ [0, R], from the dense-output representation.
pub fn evaluate_profile(profile: &RadialProfile, r: f64) -> Result<(f64, f64, f64, f64)> {
    if !(r >= 0.0 && r <= profile.radius) {
        return Err(Error::Domain(format!("r = {r} outside [0, {}]", profile.radius)));
    }
    if r == profile.radius && !profile.segments.is_empty() {
        return Ok((0.0, profile.mass, 0.0, 0.0));
    }
    let (y, m) = profile.state_at(r);
    let (rho, p) = profile.moments_at(r, y);
    Ok((y, m, rho, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eos::AnsatzSpec;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    fn lane_emden_radius() -> f64 {
        2f64.powf(-1.75) / PI.sqrt()
    }

    #[test]
    fn lane_emden_closed_form() {
        let eos = MacroEos::new(AnsatzSpec::polytrope(-0.5, 0.0, 1.0)).unwrap();
        let prof = solve_radial(&eos, 1.0, &SolveOptions::default()).unwrap();
        assert!(rel(prof.radius, lane_emden_radius()) < 1e-8, "R = {}", prof.radius);
        assert!(rel(prof.mass, lane_emden_radius()) < 1e-8, "M = {}", prof.mass);
        let omega = 2f64.powf(1.75) * PI.powf(1.5);
        for r in [0.01, 0.05, 0.1, 0.15] {
            let (y, ..) = evaluate_profile(&prof, r).unwrap();
            let exact = (omega * r).sin() / (omega * r);
            assert!((y - exact).abs() < 1e-9, "y({r}) = {y} vs {exact}");
        }
    }

    #[test]
    fn lane_emden_radius_is_gamma_independent() {
        let eos = MacroEos::new(AnsatzSpec::polytrope(-0.5, 0.0, 1.0)).unwrap();
        let r1 = solve_radial(&eos, 1.0, &SolveOptions::default()).unwrap().radius;
        for gamma in [0.5, 2.0] {
            let r = solve_radial(&eos, gamma, &SolveOptions::default()).unwrap().radius;
            assert!(rel(r, r1) < 1e-8);
        }
    }

    #[test]
    fn cutoff_energy_is_minus_m_over_r() {
        for spec in [AnsatzSpec::KING, AnsatzSpec::WOOLLEY_DICKENS, AnsatzSpec::WILSON] {
            let eos = MacroEos::new(spec).unwrap();
            let p = solve_radial(&eos, 3.0, &SolveOptions::default()).unwrap();
            assert!(rel(p.cutoff_energy, -p.mass / p.radius) < 1e-12);
            assert!(p.cutoff_energy < 0.0);
        }
    }

    #[test]
    fn steep_polytrope_has_no_zero() {
        let eos = MacroEos::new(AnsatzSpec::polytrope(4.0, 0.0, 1.0)).unwrap();
        match solve_radial(&eos, 1.0, &SolveOptions::default()) {
            Err(Error::NoZeroFound { r_max, y_end }) => {
                assert!(r_max > 0.0);
                assert!(y_end > 0.0);
            }
            other => panic!("expected NoZeroFound, got {other:?}"),
        }
    }

    #[test]
    fn bad_inputs() {
        let eos = MacroEos::new(AnsatzSpec::KING).unwrap();
        assert!(solve_radial(&eos, 0.0, &SolveOptions::default()).is_err());
        assert!(solve_radial(&eos, 1.0, &SolveOptions::default().with_rtol(1e-3)).is_err());
        let p = solve_radial(&eos, 1.0, &SolveOptions::default()).unwrap();
        assert!(evaluate_profile(&p, -1e-3).is_err());
        assert!(evaluate_profile(&p, p.radius * 1.01).is_err());
    }

    #[test]
    fn profile_endpoints() {
        let eos = MacroEos::new(AnsatzSpec::KING).unwrap();
        let p = solve_radial(&eos, 4.0, &SolveOptions::default()).unwrap();
        let (y, m, rho, pr) = evaluate_profile(&p, p.radius).unwrap();
        assert_eq!((y, rho, pr), (0.0, 0.0, 0.0));
        assert_eq!(m, p.mass);
        let (y0, m0, rho0, p0) = evaluate_profile(&p, 0.0).unwrap();
        assert_eq!(y0, 4.0);
        assert_eq!(m0, 0.0);
        assert_eq!(rho0, eos.g(4.0));
        assert_eq!(p0, eos.h(4.0));
        // the final stepper state sits on the zero
        let [y_end, _] = p.segments.last().unwrap().eval(p.radius);
        assert!(y_end.abs() <= 1e-10 * p.gamma);
    }

    #[test]
    fn monotone_samples() {
        let eos = MacroEos::new(AnsatzSpec::WOOLLEY_DICKENS).unwrap();
        let p = solve_radial(&eos, 10.0, &SolveOptions::default()).unwrap();
        for w in p.samples.windows(2) {
            assert!(w[1].r > w[0].r);
            assert!(w[1].y < w[0].y);
            assert!(w[1].m > w[0].m);
        }
    }

    #[test]
    fn mass_matches_trapezoid_of_samples() {
        let eos = MacroEos::new(AnsatzSpec::KING).unwrap();
        let p = solve_radial(&eos, 5.0, &SolveOptions::default().with_samples_per_step(40)).unwrap();
        let mid = p.samples.len() / 2;
        let mut acc = 0.0;
        for w in p.samples[..=mid].windows(2) {
            let f0 = w[0].r * w[0].r * w[0].rho;
            let f1 = w[1].r * w[1].r * w[1].rho;
            acc += 0.5 * (f0 + f1) * (w[1].r - w[0].r);
        }
        assert!(rel(4.0 * PI * acc, p.samples[mid].m) < 1e-6);
    }

    #[test]
    fn dr_dy_consistency() {
        let eos = MacroEos::new(AnsatzSpec::KING).unwrap();
        let p = solve_radial(&eos, 6.0, &SolveOptions::default()).unwrap();
        for frac in [0.2, 0.5, 0.8] {
            let r = frac * p.radius;
            let d = 1e-6 * p.radius;
            let (y_plus, ..) = evaluate_profile(&p, r + d).unwrap();
            let (y_minus, ..) = evaluate_profile(&p, r - d).unwrap();
            let (_, m, ..) = evaluate_profile(&p, r).unwrap();
            let dr_dy = 2.0 * d / (y_plus - y_minus);
            assert!((dr_dy * (-m / (r * r)) - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn refinement_converges() {
        let eos = MacroEos::new(AnsatzSpec::KING).unwrap();
        let solve = |rtol| {
            let p = solve_radial(&eos, 8.0, &SolveOptions::default().with_rtol(rtol)).unwrap();
            (p.radius, p.mass)
        };
        let a = solve(1e-8);
        let b = solve(5e-9);
        let c = solve(2.5e-9);
        let d1 = (a.0 - b.0).abs() + (a.1 - b.1).abs();
        let d2 = (b.0 - c.0).abs() + (b.1 - c.1).abs();
        assert!(d2 < 10.0 * d1.max(1e-14));
    }

    #[test]
    fn polytrope_scaling() {
        for (k, l, tol) in [(1.0, 0.0, 1e-6), (1.0, 1.0, 1e-5)] {
            let eos = MacroEos::new(AnsatzSpec::polytrope(k, l, 1.0)).unwrap();
            let base = solve_radial(&eos, 1.0, &SolveOptions::default()).unwrap();
            for beta in [0.5f64, 2.0] {
                let scaled = solve_radial(&eos, beta.powi(-2), &SolveOptions::default()).unwrap();
                let rexp = (2.0 * (k + l) + 1.0) / (2.0 + 2.0 * l);
                let mexp = (2.0 * k - 2.0 * l - 3.0) / (2.0 + 2.0 * l);
                assert!(rel(scaled.radius / base.radius, beta.powf(rexp)) < tol);
                assert!(rel(scaled.mass / base.mass, beta.powf(mexp)) < tol);
            }
        }
    }
}
