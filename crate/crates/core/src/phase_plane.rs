//! Homology variables v₁ = m/r, v₂ = 4πr²p against X = p_c/p, the limiting
//! autonomous system (S₀) with its saddle P = (0,0) and stable focus
//! Q = (2,2), and the ε-dependent system (S_ε) satisfied by every steady state.

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::{Complex, Matrix2, Vector2};

use crate::eos::MacroEos;
use crate::error::{Error, Result};
use crate::ode::{self, Control, DenseStep, StepperOptions};
use crate::roots;
use crate::steady_state::{ProfileSample, RadialProfile};

/// The saddle P.
pub const P: [f64; 2] = [0.0, 0.0];
/// The stable focus Q.
pub const Q: [f64; 2] = [2.0, 2.0];

/// Right-hand side ζ(v) of (S₀).
pub fn s0_field(v: [f64; 2]) -> [f64; 2] {
    [v[1] - v[0], v[1] * (2.0 - v[0])]
}

/// Jacobian of ζ.
pub fn s0_jacobian(v: [f64; 2]) -> Matrix2<f64> {
    Matrix2::new(-1.0, 1.0, -v[1], 2.0 - v[0])
}

/// div((1/v₂)·ζ), the Dulac quantity on the positive quadrant.
pub fn dulac_divergence(v: [f64; 2]) -> f64 {
    -1.0 / v[1]
}

/// Membership in 𝓜 = {v₂ < 8 + 2v₁} ∩ (0,12)².
pub fn in_region(v: [f64; 2]) -> bool {
    v[0] > 0.0 && v[1] > 0.0 && v[0] < 12.0 && v[1] < 12.0 && v[1] < 8.0 + 2.0 * v[0]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixedPoint {
    P,
    Q,
}

impl FixedPoint {
    pub fn coords(self) -> [f64; 2] {
        match self {
            FixedPoint::P => P,
            FixedPoint::Q => Q,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Linearization {
    pub jacobian: Matrix2<f64>,
    pub eigenvalues: [Complex<f64>; 2],
    /// Unit eigenvectors for real eigenvalues, in the order of `eigenvalues`.
    pub eigenvectors: Option<[Vector2<f64>; 2]>,
}

fn sorted_eigenvalues(m: &Matrix2<f64>) -> [Complex<f64>; 2] {
    let ev = m.complex_eigenvalues();
    let mut out = [ev[0], ev[1]];
    out.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    out
}

fn real_eigenvector(m: &Matrix2<f64>, lambda: f64) -> Vector2<f64> {
    // rows of (m − λI) are orthogonal to the eigenvector; use the larger one
    let r0 = Vector2::new(m[(0, 0)] - lambda, m[(0, 1)]);
    let r1 = Vector2::new(m[(1, 0)], m[(1, 1)] - lambda);
    let row = if r0.norm() >= r1.norm() { r0 } else { r1 };
    let v = Vector2::new(-row[1], row[0]);
    let v = v / v.norm();
    if v[0] < 0.0 || (v[0] == 0.0 && v[1] < 0.0) {
        -v
    } else {
        v
    }
}

/// Jacobian of (S₀) at a fixed point and its eigenpairs.
pub fn s0_linearization(point: FixedPoint) -> Linearization {
    let jacobian = s0_jacobian(point.coords());
    let eigenvalues = sorted_eigenvalues(&jacobian);
    let eigenvectors = (eigenvalues[0].im == 0.0 && eigenvalues[1].im == 0.0)
        .then(|| [real_eigenvector(&jacobian, eigenvalues[0].re), real_eigenvector(&jacobian, eigenvalues[1].re)]);
    Linearization { jacobian, eigenvalues, eigenvectors }
}

/// The limit matrix A(0) = ½[[1, −1], [2, 0]] and its eigenvalues 1/4 ± (√7/4)i.
#[derive(Debug, Clone, PartialEq)]
pub struct A0Eigen {
    pub matrix: Matrix2<f64>,
    pub eigenvalues: [Complex<f64>; 2],
    pub closed_form: [Complex<f64>; 2],
}

pub fn a0_eigenstructure() -> A0Eigen {
    let matrix = Matrix2::new(0.5, -0.5, 1.0, 0.0);
    let w = 7f64.sqrt() / 4.0;
    A0Eigen {
        eigenvalues: sorted_eigenvalues(&matrix),
        closed_form: [Complex::new(0.25, w), Complex::new(0.25, -w)],
        matrix,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneSample {
    pub x: f64,
    pub v1: f64,
    pub v2: f64,
    /// Orbit parameter of (S₀) trajectories.
    pub s: Option<f64>,
}

impl PlaneSample {
    pub fn v(&self) -> [f64; 2] {
        [self.v1, self.v2]
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Dense {
    None,
    /// state (v₁, v₂, ln X) against s
    OrbitParameter(Vec<DenseStep<3>>),
    /// state (v₁, v₂) against ln X
    LogX(Vec<DenseStep<2>>),
}

/// A solution of (S₀) or (S_ε) sampled against X.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneTrajectory {
    /// ε, or 0 for the limit system.
    pub eps: f64,
    pub samples: Vec<PlaneSample>,
    dense: Dense,
}

impl PlaneTrajectory {
    pub fn from_samples(eps: f64, samples: Vec<PlaneSample>) -> Self {
        Self { eps, samples, dense: Dense::None }
    }

    pub fn x_range(&self) -> (f64, f64) {
        (self.samples.first().map_or(f64::NAN, |s| s.x), self.samples.last().map_or(f64::NAN, |s| s.x))
    }

    pub fn last(&self) -> &PlaneSample {
        self.samples.last().expect("trajectory has samples")
    }

    /// V(X) from the dense representation, `None` outside the computed range.
    pub fn at_x(&self, x: f64) -> Option<[f64; 2]> {
        let (lo, hi) = self.x_range();
        if !(x >= lo && x <= hi) {
            return None;
        }
        let lx = x.ln();
        match &self.dense {
            Dense::LogX(segs) => {
                let i = segs.partition_point(|s| s.t1() < lx).min(segs.len() - 1);
                Some(segs[i].eval(lx))
            }
            Dense::OrbitParameter(segs) => {
                let i = segs.partition_point(|s| s.y1()[2] < lx).min(segs.len() - 1);
                let seg = &segs[i];
                let (a, b) = (seg.t0, seg.t1());
                let s = if seg.y0()[2] >= lx {
                    a
                } else if seg.y1()[2] <= lx {
                    b
                } else {
                    roots::brent(|s| seg.eval_component(s, 2) - lx, a, b, 1e-15 * b.abs().max(1.0), 200)?
                };
                let st = seg.eval(s);
                Some([st[0], st[1]])
            }
            Dense::None => {
                let i = self.samples.partition_point(|s| s.x < x).clamp(1, self.samples.len() - 1);
                let (s0, s1) = (&self.samples[i - 1], &self.samples[i]);
                let t = (lx - s0.x.ln()) / (s1.x.ln() - s0.x.ln());
                Some([s0.v1 + t * (s1.v1 - s0.v1), s0.v2 + t * (s1.v2 - s0.v2)])
            }
        }
    }

    /// Samples outside 𝓜.
    pub fn region_violations(&self) -> usize {
        self.samples.iter().filter(|s| !in_region(s.v())).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeteroclinicOptions {
    pub delta: f64,
    pub s_end: f64,
    pub rtol: f64,
    pub q_tol: f64,
}

impl Default for HeteroclinicOptions {
    fn default() -> Self {
        Self { delta: 1e-8, s_end: 40.0, rtol: 1e-12, q_tol: 1e-6 }
    }
}

/// The heteroclinic orbit V⁰ of (S₀) from P to Q, with X(s) = exp ∫ v₁ ds.
///
/// The orbit leaves P along (1,3)/√10 at distance `delta`; along the unstable
/// manifold v₁ ≈ C e^{2s}, so the part of ∫v₁ before the start point is v₁(0)/2.
pub fn heteroclinic_v0(opts: &HeteroclinicOptions) -> Result<PlaneTrajectory> {
    if !(opts.delta > 0.0 && opts.delta <= 1e-6) {
        return Err(Error::Domain(format!("delta must lie in (0, 1e-6], got {:e}", opts.delta)));
    }
    let n = 10f64.sqrt();
    let v0 = [opts.delta / n, 3.0 * opts.delta / n];
    let y0 = [v0[0], v0[1], 0.5 * v0[0]];
    let mut stepper = StepperOptions::new(opts.rtol, 0.0);
    stepper.atol = [opts.rtol * opts.delta, opts.rtol * opts.delta, opts.rtol * opts.delta];
    let rhs = |_s: f64, z: &[f64; 3]| {
        let f = s0_field([z[0], z[1]]);
        [f[0], f[1], z[0]]
    };
    let mut segs: Vec<DenseStep<3>> = Vec::new();
    let mut left_region = None;
    let mut samples = vec![PlaneSample { x: y0[2].exp(), v1: y0[0], v2: y0[1], s: Some(0.0) }];
    ode::integrate(rhs, 0.0, y0, opts.s_end, &stepper, |step| {
        let z = step.y1();
        if !in_region([z[0], z[1]]) {
            left_region = Some((step.t1(), z));
            return Control::Stop;
        }
        segs.push(*step);
        samples.push(PlaneSample { x: z[2].exp(), v1: z[0], v2: z[1], s: Some(step.t1()) });
        Control::Continue
    })?;
    if let Some((s, z)) = left_region {
        return Err(Error::Integrity(format!("S0 orbit left the invariant region at s = {s}: v = ({}, {})", z[0], z[1])));
    }
    let traj = PlaneTrajectory { eps: 0.0, samples, dense: Dense::OrbitParameter(segs) };
    let d = distance_to_q(&traj);
    if !(d <= opts.q_tol) {
        return Err(Error::Integrity(format!("S0 orbit ends {d:e} from Q at s = {}; extend s_end", opts.s_end)));
    }
    Ok(traj)
}

/// Distance of the trajectory's last point from Q.
pub fn distance_to_q(traj: &PlaneTrajectory) -> f64 {
    let l = traj.last();
    (l.v1 - Q[0]).hypot(l.v2 - Q[1])
}

static DEFAULT_V0: OnceLock<std::result::Result<PlaneTrajectory, Error>> = OnceLock::new();

/// [`heteroclinic_v0`] with default options, computed once per process.
pub fn default_heteroclinic() -> Result<&'static PlaneTrajectory> {
    DEFAULT_V0
        .get_or_init(|| heteroclinic_v0(&HeteroclinicOptions::default()))
        .as_ref()
        .map_err(Clone::clone)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SEpsOptions {
    /// X_start − 1.
    pub delta_x: f64,
    pub rtol: f64,
}

impl Default for SEpsOptions {
    fn default() -> Self {
        Self { delta_x: 1e-6, rtol: 1e-11 }
    }
}

/// Right-hand side of (S_ε) in u = ln X.
fn s_eps_rhs(eos: &MacroEos, eps: f64, u: f64, v: &[f64; 2]) -> [f64; 2] {
    let alpha = eos.alpha(eps * u.exp()).unwrap_or(f64::NAN);
    let q = v[1] / v[0];
    [q - alpha, q * (2.0 * alpha - v[0])]
}

/// Solves (S_ε) from X = 1 + δ_X to `x_end`.
pub fn s_eps_solve(eos: &MacroEos, eps: f64, x_end: f64, opts: &SEpsOptions) -> Result<PlaneTrajectory> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::Domain(format!("eps must be positive, got {eps}")));
    }
    let x_start = 1.0 + opts.delta_x;
    if !(x_end > x_start) {
        return Err(Error::Domain(format!("X_end = {x_end} must exceed X_start = {x_start}")));
    }
    let a = eos.alpha(eps)?;
    let y0 = [2.0 * a * opts.delta_x, 6.0 * a * a * opts.delta_x];
    let mut stepper = StepperOptions::new(opts.rtol, 0.0);
    stepper.atol = [opts.rtol * opts.delta_x; 2];
    let mut segs: Vec<DenseStep<2>> = Vec::new();
    let mut samples = vec![PlaneSample { x: x_start, v1: y0[0], v2: y0[1], s: None }];
    let mut crossed = None;
    ode::integrate(|u, v| s_eps_rhs(eos, eps, u, v), opts.delta_x.ln_1p(), y0, x_end.ln(), &stepper, |step| {
        let v = step.y1();
        if !(v[0] > 0.0 && v[1] > 0.0) {
            crossed = Some((step.t1().exp(), v));
            return Control::Stop;
        }
        segs.push(*step);
        samples.push(PlaneSample { x: step.t1().exp(), v1: v[0], v2: v[1], s: None });
        Control::Continue
    })?;
    if let Some((x, v)) = crossed {
        return Err(Error::Integrity(format!("S_eps solution left the positive quadrant at X = {x}: v = ({}, {})", v[0], v[1])));
    }
    // the last accepted step ends exactly at ln(x_end); pin X to avoid exp∘ln rounding
    if let Some(last) = samples.last_mut() {
        last.x = x_end;
    }
    Ok(PlaneTrajectory { eps, samples, dense: Dense::LogX(segs) })
}

/// Maps a radial profile (l = 0) to homology variables; the centre and the
/// boundary (p = 0) are excluded.
pub fn profile_to_v(profile: &RadialProfile) -> Result<PlaneTrajectory> {
    if profile.eos().spec().angular_exponent() != 0.0 {
        return Err(Error::Domain("homology variables need an isotropic (l = 0) profile".into()));
    }
    let pc = 1.0 / profile.eps;
    let samples = profile
        .samples
        .iter()
        .filter(|s| s.r > 0.0 && s.p > 0.0)
        .map(|s| PlaneSample { x: pc / s.p, v1: s.m / s.r, v2: 4.0 * PI * s.r * s.r * s.p, s: None })
        .collect();
    Ok(PlaneTrajectory::from_samples(profile.eps, samples))
}

/// sup over interior samples of |X dv/dX − rhs_ε(X, v)|, with X dv/dX from
/// three-point differences in ln X.
pub fn s_eps_residual(traj: &PlaneTrajectory, eos: &MacroEos) -> f64 {
    let s = &traj.samples;
    let mut worst: f64 = 0.0;
    for i in 1..s.len().saturating_sub(1) {
        let (u0, u1, u2) = (s[i - 1].x.ln(), s[i].x.ln(), s[i + 1].x.ln());
        let (h0, h1) = (u1 - u0, u2 - u1);
        if !(h0 > 0.0 && h1 > 0.0) {
            continue;
        }
        let d = |f0: f64, f1: f64, f2: f64| (-h1 / (h0 * (h0 + h1))) * f0 + ((h1 - h0) / (h0 * h1)) * f1 + (h0 / (h1 * (h0 + h1))) * f2;
        let dv1 = d(s[i - 1].v1, s[i].v1, s[i + 1].v1);
        let dv2 = d(s[i - 1].v2, s[i].v2, s[i + 1].v2);
        let rhs = s_eps_rhs(eos, traj.eps, u1, &[s[i].v1, s[i].v2]);
        worst = worst.max((dv1 - rhs[0]).abs()).max((dv2 - rhs[1]).abs());
    }
    worst
}

/// Reconstructs r = √(εXV₂/4π), y = h⁻¹(1/(εX)), m = r·V₁ from a plane
/// trajectory; the result starts at r = 0 with y = h⁻¹(1/ε).
pub fn v_to_profile(traj: &PlaneTrajectory, eos: &MacroEos) -> Result<RadialProfile> {
    if !(traj.eps > 0.0) {
        return Err(Error::Domain("reconstruction needs eps > 0".into()));
    }
    let gamma = eos.invert_h(1.0 / traj.eps)?;
    let mut samples = Vec::with_capacity(traj.samples.len() + 1);
    samples.push(ProfileSample { r: 0.0, y: gamma, m: 0.0, rho: eos.g(gamma), p: eos.h(gamma) });
    for s in &traj.samples {
        let x = traj.eps * s.x;
        let r = (x * s.v2 / (4.0 * PI)).sqrt();
        let y = eos.invert_h(1.0 / x)?;
        let last = samples.last().expect("non-empty");
        if !(r > last.r) {
            return Err(Error::Integrity(format!("reconstructed r is not increasing at X = {}", s.x)));
        }
        samples.push(ProfileSample { r, y, m: r * s.v1, rho: eos.g(y), p: eos.h(y) });
    }
    RadialProfile::from_samples(eos, gamma, samples)
}

/// Log-spaced comparison grid on (1, X̄].
pub fn gap_grid(x_bar: f64, n: usize) -> Vec<f64> {
    let lo = (1e-4 * (x_bar - 1.0)).ln();
    let hi = (x_bar - 1.0).ln();
    (0..n).map(|i| 1.0 + (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// Pointwise deviations |V(X,ε) − V⁰(X)| on [`gap_grid`].
pub fn gap_profile(eos: &MacroEos, eps: f64, x_bar: f64) -> Result<Vec<(f64, f64)>> {
    if !(x_bar > 1.0) {
        return Err(Error::Domain(format!("X_bar must exceed 1, got {x_bar}")));
    }
    let v0 = default_heteroclinic()?;
    let grid = gap_grid(x_bar, 240);
    let traj = s_eps_solve(eos, eps, x_bar, &SEpsOptions { delta_x: 1e-6_f64.min(0.5 * (grid[0] - 1.0)), ..Default::default() })?;
    grid.iter()
        .map(|&x| {
            let a = traj.at_x(x).ok_or_else(|| Error::Integrity(format!("S_eps solution missing at X = {x}")))?;
            let b = v0.at_x(x).ok_or_else(|| Error::Integrity(format!("V0 missing at X = {x}")))?;
            Ok((x, (a[0] - b[0]).hypot(a[1] - b[1])))
        })
        .collect()
}

/// sup_X |V(X,ε) − V⁰(X)| over X ∈ (1, X̄].
pub fn convergence_gap(eos: &MacroEos, eps: f64, x_bar: f64) -> Result<f64> {
    Ok(gap_profile(eos, eps, x_bar)?.into_iter().map(|(_, d)| d).fold(0.0, f64::max))
}

/// Smallest κ with |V(X,ε) − V⁰(X)| ≤ κ(X−1) on the first decade of the grid.
pub fn convergence_kappa(eos: &MacroEos, eps: f64, x_bar: f64) -> Result<f64> {
    let prof = gap_profile(eos, eps, x_bar)?;
    let x_cap = 1.0 + 1e-3 * (x_bar - 1.0);
    Ok(prof.into_iter().filter(|(x, _)| *x <= x_cap).map(|(x, d)| d / (x - 1.0)).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eos::AnsatzSpec;
    use crate::steady_state::{evaluate_profile, solve_radial, SolveOptions};

    #[test]
    fn field_fixed_points_and_boundary() {
        assert_eq!(s0_field([0.0, 0.0]), [0.0, 0.0]);
        assert_eq!(s0_field([2.0, 2.0]), [0.0, 0.0]);
        let z = s0_field([1.0, 10.0]);
        assert!(-2.0 * z[0] + z[1] < 0.0);
    }

    #[test]
    fn linearizations() {
        let p = s0_linearization(FixedPoint::P);
        assert!((p.eigenvalues[0].re - 2.0).abs() < 1e-12 && (p.eigenvalues[1].re + 1.0).abs() < 1e-12);
        let [e_u, e_s] = p.eigenvectors.unwrap();
        let n = 10f64.sqrt();
        assert!((e_u - Vector2::new(1.0 / n, 3.0 / n)).norm() < 1e-12);
        assert!((e_s - Vector2::new(1.0, 0.0)).norm() < 1e-12);
        let q = s0_linearization(FixedPoint::Q);
        let w = 7f64.sqrt() / 2.0;
        assert!((q.eigenvalues[0] - Complex::new(-0.5, w)).norm() < 1e-12);
        assert!((q.eigenvalues[1] - Complex::new(-0.5, -w)).norm() < 1e-12);
        assert!(q.eigenvectors.is_none());
    }

    #[test]
    fn a0_matches_closed_form() {
        let a = a0_eigenstructure();
        for i in 0..2 {
            assert!((a.eigenvalues[i] - a.closed_form[i]).norm() < 1e-12);
        }
        assert!((a.matrix.trace() - 0.5).abs() < 1e-15);
        assert!((a.matrix.determinant() - 0.5).abs() < 1e-15);
        assert!((a.eigenvalues[0].im - 0.661_437_8).abs() < 1e-7);
    }

    #[test]
    fn dulac_matches_finite_differences() {
        for v in [[0.5, 1.0], [3.0, 2.0], [1.0, 7.0]] {
            let d = 1e-6;
            let f = |v: [f64; 2]| {
                let z = s0_field(v);
                [z[0] / v[1], z[1] / v[1]]
            };
            let div = (f([v[0] + d, v[1]])[0] - f([v[0] - d, v[1]])[0]) / (2.0 * d)
                + (f([v[0], v[1] + d])[1] - f([v[0], v[1] - d])[1]) / (2.0 * d);
            assert!((div - dulac_divergence(v)).abs() < 1e-8);
        }
    }

    #[test]
    fn heteroclinic_reaches_q_and_starts_on_the_manifold() {
        let t = heteroclinic_v0(&HeteroclinicOptions::default()).unwrap();
        assert!(distance_to_q(&t) < 1e-6, "distance {}", distance_to_q(&t));
        assert_eq!(t.region_violations(), 0);
        for s in t.samples.iter().filter(|s| s.x - 1.0 < 1e-2 && s.x - 1.0 > 1e-5) {
            assert!((s.v2 / s.v1 - 3.0).abs() < 0.05);
            assert!((s.v1 / (s.x - 1.0) - 2.0).abs() < 0.05);
        }
        for s in &t.samples[1..] {
            assert!(dulac_divergence(s.v()) < 0.0);
        }
    }

    #[test]
    fn heteroclinic_is_insensitive_to_delta() {
        let a = heteroclinic_v0(&HeteroclinicOptions::default()).unwrap();
        let b = heteroclinic_v0(&HeteroclinicOptions { delta: 1e-7, ..Default::default() }).unwrap();
        let mut worst: f64 = 0.0;
        for x in gap_grid(50.0, 100).into_iter().filter(|&x| x >= 1.1) {
            let (va, vb) = (a.at_x(x).unwrap(), b.at_x(x).unwrap());
            worst = worst.max((va[0] - vb[0]).abs()).max((va[1] - vb[1]).abs());
        }
        assert!(worst < 1e-6, "{worst}");
    }

    #[test]
    fn s_eps_start_asymptotics() {
        let eos = MacroEos::new(AnsatzSpec::KING).unwrap();
        let eps = 1e-3;
        let a = eos.alpha(eps).unwrap();
        let t = s_eps_solve(&eos, eps, 100.0, &SEpsOptions::default()).unwrap();
        for s in t.samples.iter().filter(|s| s.x - 1.0 < 1e-5) {
            assert!((s.v1 / (s.x - 1.0) / (2.0 * a) - 1.0).abs() < 0.01);
            assert!((s.v2 / s.v1 / (3.0 * a) - 1.0).abs() < 0.01);
        }
    }

    #[test]
    #[ignore = "unattainable as stated: V0(1e4) itself lies 0.152 from Q"]
    fn s_eps_small_eps_within_point_one_of_q_at_1e4() {
        let eos = MacroEos::new(AnsatzSpec::KING).unwrap();
        let t = s_eps_solve(&eos, 1e-8, 1e4, &SEpsOptions::default()).unwrap();
        assert!(distance_to_q(&t) < 0.1, "{}", distance_to_q(&t));
    }

    #[test]
    fn s_eps_small_eps_follows_v0_into_q() {
        let eos = MacroEos::new(AnsatzSpec::KING).unwrap();
        let v0 = default_heteroclinic().unwrap();
        let t = s_eps_solve(&eos, 1e-12, 1e4, &SEpsOptions::default()).unwrap();
        let (a, b) = (t.last().v(), v0.at_x(1e4).unwrap());
        assert!((a[0] - b[0]).hypot(a[1] - b[1]) < 1e-3);
        assert_eq!(t.region_violations(), 0);
        let far = s_eps_solve(&eos, 1e-16, 1e8, &SEpsOptions::default()).unwrap();
        assert!(distance_to_q(&far) < 0.1);
        assert_eq!(far.region_violations(), 0);
    }

    #[test]
    fn s_eps_insensitive_to_start_offset() {
        let eos = MacroEos::new(AnsatzSpec::KING).unwrap();
        let a = s_eps_solve(&eos, 1e-3, 3.0, &SEpsOptions::default()).unwrap();
        let b = s_eps_solve(&eos, 1e-3, 3.0, &SEpsOptions { delta_x: 5e-7, ..Default::default() }).unwrap();
        let (va, vb) = (a.at_x(2.0).unwrap(), b.at_x(2.0).unwrap());
        assert!((va[0] - vb[0]).abs() < 1e-8 && (va[1] - vb[1]).abs() < 1e-8);
    }

    #[test]
    fn profile_maps_into_the_plane() {
        let eos = MacroEos::new(AnsatzSpec::KING).unwrap();
        let prof = solve_radial(&eos, 5.0, &SolveOptions::default().with_samples_per_step(8)).unwrap();
        let t = profile_to_v(&prof).unwrap();
        let first = t.samples[0];
        assert!(first.x - 1.0 < 1e-9 && first.v1 < 1e-4 && first.v2 < 1e-4);
        let a = eos.alpha(prof.eps).unwrap();
        let near: Vec<_> = t.samples.iter().filter(|s| s.x - 1.0 < 1e-3).collect();
        assert!(!near.is_empty());
        for s in near {
            assert!((s.v2 / s.v1 / (3.0 * a) - 1.0).abs() < 0.05);
        }
        let res = s_eps_residual(&t, &eos);
        assert!(res <= 1e-4, "residual {res}");
    }

    #[test]
    fn round_trip_and_direct_reconstruction() {
        let eos = MacroEos::new(AnsatzSpec::KING).unwrap();
        let prof = solve_radial(&eos, 5.0, &SolveOptions::default()).unwrap();
        let back = v_to_profile(&profile_to_v(&prof).unwrap(), &eos).unwrap();
        assert_eq!(back.gamma, eos.invert_h(1.0 / prof.eps).unwrap());
        assert!(((back.gamma - 5.0) / 5.0).abs() < 1e-12);
        for (a, b) in prof.samples[1..prof.samples.len() - 1].iter().zip(&back.samples[1..]) {
            assert!(((a.r - b.r) / a.r).abs() < 1e-6);
            assert!((a.y - b.y).abs() < 1e-6 * prof.gamma);
            assert!((a.m - b.m).abs() < 1e-6 * prof.mass);
        }

        let traj = s_eps_solve(&eos, prof.eps, 1e6, &SEpsOptions::default()).unwrap();
        let rec = v_to_profile(&traj, &eos).unwrap();
        for s in rec.samples.iter().skip(1).step_by(7) {
            let (y, m, ..) = evaluate_profile(&prof, s.r).unwrap();
            assert!((y - s.y).abs() < 1e-6 * prof.gamma, "y at r = {}", s.r);
            assert!((m - s.m).abs() < 1e-6 * prof.mass, "m at r = {}", s.r);
        }
        // dm/dr = 4πr²ρ on the reconstruction
        let i = rec.samples.len() / 2;
        let (s0, s1, s2) = (&rec.samples[i - 1], &rec.samples[i], &rec.samples[i + 1]);
        let fd = (s2.m - s0.m) / (s2.r - s0.r);
        let exact = 4.0 * PI * s1.r * s1.r * s1.rho;
        assert!(((fd - exact) / exact).abs() < 1e-2);
        let (_, m_mid, ..) = evaluate_profile(&rec, 0.5 * (s1.r + s2.r)).unwrap();
        let (_, m_dir, ..) = evaluate_profile(&prof, 0.5 * (s1.r + s2.r)).unwrap();
        assert!(((m_mid - m_dir) / m_dir).abs() < 1e-5);
    }

    #[test]
    fn convergence_gap_shrinks() {
        let eos = MacroEos::new(AnsatzSpec::KING).unwrap();
        let g: Vec<f64> = [1e-2, 1e-4, 1e-6].iter().map(|&e| convergence_gap(&eos, e, 50.0).unwrap()).collect();
        assert!(g[0] > g[1] && g[1] > g[2], "{g:?}");
        let k: Vec<f64> = [1e-2, 1e-4, 1e-6].iter().map(|&e| convergence_kappa(&eos, e, 50.0).unwrap()).collect();
        assert!(k[0] > k[1] && k[1] > k[2], "{k:?}");
    }
}
