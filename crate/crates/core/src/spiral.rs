//! Spiral structure of mass–radius curves: turning points, winding metrics
//! and least-squares fits of
//!
//! ```text
//! z(ε) = c + ε^d · A · (cos(ν ln ε), sin(ν ln ε))
//! ```
//!
//! in the (R, M) plane or in the homology plane.

use nalgebra::{DMatrix, DVector, Matrix2, SymmetricEigen, Vector2};
use rayon::prelude::*;

use crate::eos::MacroEos;
use crate::error::{Error, Result};
use crate::family::FamilyTable;
use crate::lm::{levenberg_marquardt, LmOptions, LmReport};
use crate::phase_plane::{s_eps_solve, SEpsOptions};

/// √7/4.
pub const NU_THEORY: f64 = 0.661_437_827_766_147_8;
/// 1/4.
pub const DECAY_THEORY: f64 = 0.25;

/// Length in ln ε of one full turn at the theoretical rate.
pub fn winding_length() -> f64 {
    2.0 * std::f64::consts::PI / NU_THEORY
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitMode {
    /// d = 1/4 and ν = √7/4 pinned.
    Fixed,
    /// d and ν fitted as well.
    Free,
}

impl std::str::FromStr for FitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(FitMode::Fixed),
            "free" => Ok(FitMode::Free),
            other => Err(Error::Parse(format!("fit mode must be 'fixed' or 'free', got '{other}'"))),
        }
    }
}

/// A closed ln ε interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
}

impl Window {
    pub fn contains(&self, l: f64) -> bool {
        l >= self.lo && l <= self.hi
    }
}

/// The last `windings` theoretical turns of a table, measured from its smallest ε.
pub fn tail_window(table: &FamilyTable, windings: f64) -> Result<Window> {
    let lo = table.ln_eps().into_iter().fold(f64::INFINITY, f64::min);
    if !lo.is_finite() {
        return Err(Error::InsufficientData("empty table".into()));
    }
    Ok(Window { lo, hi: lo + windings * winding_length() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpiralFit {
    pub center: [f64; 2],
    pub amp: Matrix2<f64>,
    pub nu: f64,
    pub decay: f64,
    /// RMS residual relative to the median local amplitude, with both
    /// measured in coordinates standardized per axis and scaled by ε^{−1/4}.
    pub rms_resid: f64,
    pub window: Window,
    pub mode: FitMode,
    pub iterations: usize,
}

impl SpiralFit {
    pub fn predict(&self, ln_eps: f64) -> [f64; 2] {
        let e = (self.decay * ln_eps).exp();
        let (s, c) = (self.nu * ln_eps).sin_cos();
        let u = Vector2::new(e * c, e * s);
        let v = self.amp * u;
        [self.center[0] + v[0], self.center[1] + v[1]]
    }
}

/// Model evaluations at the given ε (ε > 0).
pub fn predict_curve(fit: &SpiralFit, eps_grid: &[f64]) -> Vec<[f64; 2]> {
    eps_grid.iter().map(|e| fit.predict(e.ln())).collect()
}

/// Signed number of turns of `points` around `center` (counterclockwise positive).
pub fn winding_turns(points: &[[f64; 2]], center: [f64; 2]) -> f64 {
    let mut total = 0.0;
    for w in points.windows(2) {
        let a = (w[0][1] - center[1]).atan2(w[0][0] - center[0]);
        let b = (w[1][1] - center[1]).atan2(w[1][0] - center[0]);
        let mut d = b - a;
        while d > std::f64::consts::PI {
            d -= 2.0 * std::f64::consts::PI;
        }
        while d < -std::f64::consts::PI {
            d += 2.0 * std::f64::consts::PI;
        }
        total += d;
    }
    total / (2.0 * std::f64::consts::PI)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TurningKind {
    RMax,
    RMin,
    MMax,
    MMin,
}

impl TurningKind {
    pub fn label(self) -> &'static str {
        match self {
            TurningKind::RMax => "R-max",
            TurningKind::RMin => "R-min",
            TurningKind::MMax => "M-max",
            TurningKind::MMin => "M-min",
        }
    }

    fn is_radius(self) -> bool {
        matches!(self, TurningKind::RMax | TurningKind::RMin)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurningPoint {
    pub ln_eps: f64,
    pub gamma: f64,
    pub kind: TurningKind,
    /// Extremal value of the coordinate.
    pub value: f64,
    /// (R, M) at the vertex.
    pub point: [f64; 2],
}

/// Turning points in table order (increasing γ, decreasing ε).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TurningPointSet {
    pub points: Vec<TurningPoint>,
}

impl TurningPointSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn of_coordinate(&self, radius: bool) -> Vec<TurningPoint> {
        self.points.iter().filter(|p| p.kind.is_radius() == radius).copied().collect()
    }

    pub fn of_kind(&self, kind: TurningKind) -> Vec<TurningPoint> {
        self.points.iter().filter(|p| p.kind == kind).copied().collect()
    }

    /// Consecutive extrema of each coordinate alternate between max and min.
    pub fn is_alternating(&self) -> bool {
        [true, false].iter().all(|&radius| self.of_coordinate(radius).windows(2).all(|w| w[0].kind != w[1].kind))
    }
}

/// Vertex (x, y) of the parabola through three points.
fn parabola_vertex(x: [f64; 3], y: [f64; 3]) -> (f64, f64) {
    let d01 = (y[1] - y[0]) / (x[1] - x[0]);
    let d12 = (y[2] - y[1]) / (x[2] - x[1]);
    let a = (d12 - d01) / (x[2] - x[0]);
    let xv = 0.5 * (x[0] + x[1]) - d01 / (2.0 * a);
    (xv, quadratic_through(x, y, xv))
}

fn quadratic_through(x: [f64; 3], y: [f64; 3], t: f64) -> f64 {
    let d01 = (y[1] - y[0]) / (x[1] - x[0]);
    let d12 = (y[2] - y[1]) / (x[2] - x[1]);
    let a = (d12 - d01) / (x[2] - x[0]);
    y[0] + d01 * (t - x[0]) + a * (t - x[0]) * (t - x[1])
}

/// Turning points of columns given against `ln_eps`.
pub fn turning_points_of(ln_eps: &[f64], gamma: &[f64], z: &[[f64; 2]]) -> Result<TurningPointSet> {
    if z.len() < 3 {
        return Err(Error::InsufficientData(format!("turning points need at least 3 rows, got {}", z.len())));
    }
    let mut points = Vec::new();
    for i in 1..z.len() - 1 {
        for coord in 0..2 {
            let (a, b, c) = (z[i - 1][coord], z[i][coord], z[i + 1][coord]);
            let is_max = b > a && b >= c;
            let is_min = b < a && b <= c;
            if !(is_max || is_min) {
                continue;
            }
            let xs = [ln_eps[i - 1], ln_eps[i], ln_eps[i + 1]];
            let (xv, yv) = parabola_vertex(xs, [a, b, c]);
            let xv = if xv.is_finite() { xv } else { xs[1] };
            let other = 1 - coord;
            let ov = quadratic_through(xs, [z[i - 1][other], z[i][other], z[i + 1][other]], xv);
            let gv = quadratic_through(xs, [gamma[i - 1], gamma[i], gamma[i + 1]], xv);
            let mut point = [0.0; 2];
            point[coord] = yv;
            point[other] = ov;
            let kind = match (coord, is_max) {
                (0, true) => TurningKind::RMax,
                (0, false) => TurningKind::RMin,
                (_, true) => TurningKind::MMax,
                (_, false) => TurningKind::MMin,
            };
            points.push(TurningPoint { ln_eps: xv, gamma: gv, kind, value: yv, point });
        }
    }
    points.sort_by(|p, q| q.ln_eps.total_cmp(&p.ln_eps));
    Ok(TurningPointSet { points })
}

/// Interior local extrema of R and M against ln ε, refined by parabolic interpolation.
pub fn turning_points(table: &FamilyTable) -> Result<TurningPointSet> {
    let l = table.ln_eps();
    let g: Vec<f64> = table.rows.iter().map(|r| r.gamma).collect();
    let z: Vec<[f64; 2]> = table.rows.iter().map(|r| [r.radius, r.mass]).collect();
    turning_points_of(&l, &g, &z)
}

/// Center estimate used for amplitude ratios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CenterEstimate {
    /// Mean of the (R, M) points of the last four turning points.
    LastFourMean,
    Given([f64; 2]),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spacing {
    pub kind: TurningKind,
    /// ln ε of the earlier (larger-ε) extremum.
    pub from: f64,
    pub to: f64,
    pub length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeRatio {
    pub kind: TurningKind,
    pub from: f64,
    pub to: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindingReport {
    pub center: [f64; 2],
    pub same_type: Vec<Spacing>,
    pub opposite_type: Vec<Spacing>,
    pub ratios: Vec<AmplitudeRatio>,
    /// Means over entries lying entirely below the asymptotic threshold.
    pub asymptotic_same_type: Option<f64>,
    pub asymptotic_opposite_type: Option<f64>,
    /// Geometric mean of the asymptotic per-winding amplitude ratios.
    pub asymptotic_ratio: Option<f64>,
}

/// ln(1e−4): entries with both ends below this count as asymptotic.
pub const ASYMPTOTIC_LN_EPS: f64 = -9.210_340_371_976_182;

/// Spacings of extrema in ln ε and per-winding amplitude ratios.
pub fn winding_metrics(tp: &TurningPointSet, center: CenterEstimate, asymptotic_below: f64) -> Result<WindingReport> {
    let kinds = [TurningKind::RMax, TurningKind::RMin, TurningKind::MMax, TurningKind::MMin];
    if kinds.iter().all(|&k| tp.of_kind(k).len() < 2) || tp.len() < 3 {
        return Err(Error::InsufficientData("winding metrics need at least 3 extrema with a repeated type".into()));
    }
    let center = match center {
        CenterEstimate::Given(c) => c,
        CenterEstimate::LastFourMean => {
            let tail = &tp.points[tp.len().saturating_sub(4)..];
            let n = tail.len() as f64;
            [tail.iter().map(|p| p.point[0]).sum::<f64>() / n, tail.iter().map(|p| p.point[1]).sum::<f64>() / n]
        }
    };
    let mut same_type = Vec::new();
    let mut ratios = Vec::new();
    for kind in kinds {
        for w in tp.of_kind(kind).windows(2) {
            same_type.push(Spacing { kind, from: w[0].ln_eps, to: w[1].ln_eps, length: w[0].ln_eps - w[1].ln_eps });
            let dist = |p: &TurningPoint| (p.point[0] - center[0]).hypot(p.point[1] - center[1]);
            ratios.push(AmplitudeRatio { kind, from: w[0].ln_eps, to: w[1].ln_eps, ratio: dist(&w[1]) / dist(&w[0]) });
        }
    }
    let mut opposite_type = Vec::new();
    for radius in [true, false] {
        for w in tp.of_coordinate(radius).windows(2) {
            if w[0].kind != w[1].kind {
                opposite_type.push(Spacing { kind: w[1].kind, from: w[0].ln_eps, to: w[1].ln_eps, length: w[0].ln_eps - w[1].ln_eps });
            }
        }
    }
    let mean = |v: Vec<f64>| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
    let asym = |s: &Spacing| s.from < asymptotic_below && s.to < asymptotic_below;
    let asymptotic_same_type = mean(same_type.iter().filter(|s| asym(s)).map(|s| s.length).collect());
    let asymptotic_opposite_type = mean(opposite_type.iter().filter(|s| asym(s)).map(|s| s.length).collect());
    let asymptotic_ratio = mean(
        ratios
            .iter()
            .filter(|r| r.from < asymptotic_below && r.to < asymptotic_below)
            .map(|r| r.ratio.ln())
            .collect(),
    )
    .map(f64::exp);
    Ok(WindingReport {
        center,
        same_type,
        opposite_type,
        ratios,
        asymptotic_same_type,
        asymptotic_opposite_type,
        asymptotic_ratio,
    })
}

struct SpiralData<'a> {
    l: &'a [f64],
    z: &'a [[f64; 2]],
    scale: [f64; 2],
}

impl SpiralData<'_> {
    fn weight(&self, l: f64) -> f64 {
        (-DECAY_THEORY * l).exp()
    }

    /// Residuals and Jacobian for p = (c₁, c₂, a₁₁, a₁₂, a₂₁, a₂₂[, d, ν]);
    /// `pinned` supplies (d, ν) when p has six entries.
    fn eval(&self, p: &[f64], pinned: (f64, f64)) -> (DVector<f64>, DMatrix<f64>) {
        let free = p.len() == 8;
        let (d, nu) = if free { (p[6], p[7]) } else { pinned };
        let n = self.l.len();
        let mut r = DVector::zeros(2 * n);
        let mut j = DMatrix::zeros(2 * n, p.len());
        for (i, (&l, z)) in self.l.iter().zip(self.z).enumerate() {
            let e = (d * l).exp();
            let (s, c) = (nu * l).sin_cos();
            let u = [e * c, e * s];
            let du_dnu = [-e * l * s, e * l * c];
            let w = self.weight(l);
            for k in 0..2 {
                let (a1, a2) = (p[2 + 2 * k], p[3 + 2 * k]);
                let au = a1 * u[0] + a2 * u[1];
                let f = w / self.scale[k];
                let row = 2 * i + k;
                r[row] = (p[k] + au - z[k]) * f;
                j[(row, k)] = f;
                j[(row, 2 + 2 * k)] = u[0] * f;
                j[(row, 3 + 2 * k)] = u[1] * f;
                if free {
                    j[(row, 6)] = l * au * f;
                    j[(row, 7)] = (a1 * du_dnu[0] + a2 * du_dnu[1]) * f;
                }
            }
        }
        (r, j)
    }

    /// Amplitude matrix from principal axes of the centered, ε^{−1/4}-scaled
    /// data, rotated onto the model phase by orthogonal Procrustes.
    fn initial_amp(&self, center: [f64; 2], d: f64, nu: f64) -> Matrix2<f64> {
        let n = self.l.len() as f64;
        let mut cov = Matrix2::zeros();
        let mut ws = Vec::with_capacity(self.l.len());
        for (&l, z) in self.l.iter().zip(self.z) {
            let e = (-d * l).exp();
            let w = Vector2::new((z[0] - center[0]) * e / self.scale[0], (z[1] - center[1]) * e / self.scale[1]);
            cov += w * w.transpose() / n;
            ws.push(w);
        }
        let eig = SymmetricEigen::new(cov);
        let axes = eig.eigenvectors * Matrix2::from_diagonal(&eig.eigenvalues.map(|s| (2.0 * s.max(0.0)).sqrt().max(1e-300)));
        let inv = axes.try_inverse().unwrap_or_else(Matrix2::identity);
        let mut m = Matrix2::zeros();
        for (&l, w) in self.l.iter().zip(&ws) {
            let (s, c) = (nu * l).sin_cos();
            m += (inv * w) * Vector2::new(c, s).transpose();
        }
        let svd = m.svd(true, true);
        let rot = svd.u.expect("u requested") * svd.v_t.expect("v_t requested");
        let standardized = axes * rot;
        Matrix2::new(
            standardized[(0, 0)] * self.scale[0],
            standardized[(0, 1)] * self.scale[0],
            standardized[(1, 0)] * self.scale[1],
            standardized[(1, 1)] * self.scale[1],
        )
    }
}

fn std_dev(v: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = v.clone().count() as f64;
    let mean = v.clone().sum::<f64>() / n;
    (v.map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Fits the spiral model to points z against ln ε inside `window`.
pub fn fit_points(ln_eps: &[f64], z: &[[f64; 2]], window: Window, mode: FitMode) -> Result<SpiralFit> {
    let (l, z): (Vec<f64>, Vec<[f64; 2]>) = ln_eps.iter().zip(z).filter(|(l, _)| window.contains(**l)).map(|(l, z)| (*l, *z)).unzip();
    if l.len() < 8 {
        return Err(Error::InsufficientData(format!("window holds {} points; at least 8 needed", l.len())));
    }
    let extent = l.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)) - l.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if extent < 1.5 * winding_length() * (1.0 - 1e-9) {
        return Err(Error::InsufficientData(format!(
            "window spans {extent:.4} in ln eps; 1.5 windings need {:.4}",
            1.5 * winding_length()
        )));
    }
    let scale = [std_dev(z.iter().map(|p| p[0])), std_dev(z.iter().map(|p| p[1]))];
    if !(scale[0] > 0.0 && scale[1] > 0.0) {
        return Err(Error::InsufficientData("data has no spread in one coordinate".into()));
    }
    let data = SpiralData { l: &l, z: &z, scale };

    let gamma_dummy: Vec<f64> = (0..l.len()).map(|i| i as f64).collect();
    let tp = turning_points_of(&l, &gamma_dummy, &z).unwrap_or_default();
    let center0 = if tp.len() >= 4 {
        let tail = &tp.points[tp.len() - 4..];
        [tail.iter().map(|p| p.point[0]).sum::<f64>() / 4.0, tail.iter().map(|p| p.point[1]).sum::<f64>() / 4.0]
    } else {
        let n = z.len() as f64;
        [z.iter().map(|p| p[0]).sum::<f64>() / n, z.iter().map(|p| p[1]).sum::<f64>() / n]
    };
    // With d and ν pinned the model is linear in (c, A), so the six-parameter
    // stage is cheap; in free mode it is run over a grid of rates and the best
    // one seeds the full fit.
    let mut rates = vec![NU_THEORY];
    if mode == FitMode::Free {
        rates.extend((0..=12).map(|i| NU_THEORY * (0.7 + 0.05 * i as f64)));
        let half: Vec<f64> = [true, false]
            .iter()
            .flat_map(|&radius| {
                tp.of_coordinate(radius).windows(2).filter(|w| w[0].kind != w[1].kind).map(|w| w[0].ln_eps - w[1].ln_eps).collect::<Vec<_>>()
            })
            .collect();
        if !half.is_empty() {
            rates.push(std::f64::consts::PI * half.len() as f64 / half.iter().sum::<f64>());
        }
    }
    let opts = LmOptions::default();
    let mut best: Option<(f64, LmReport)> = None;
    for &nu0 in &rates {
        let a0 = data.initial_amp(center0, DECAY_THEORY, nu0);
        let p0 = [center0[0], center0[1], a0[(0, 0)], a0[(0, 1)], a0[(1, 0)], a0[(1, 1)]];
        match levenberg_marquardt(|p| data.eval(p, (DECAY_THEORY, nu0)), &p0, &opts) {
            Ok(rep) if best.as_ref().is_none_or(|(_, b)| rep.cost < b.cost) => best = Some((nu0, rep)),
            Ok(_) => {}
            Err(e) if mode == FitMode::Fixed => return Err(e),
            Err(_) => {}
        }
    }
    let (nu0, stage) = best.ok_or(Error::FitNonConvergence { iterations: opts.max_iter, cost: f64::NAN })?;
    let (params, iterations) = match mode {
        FitMode::Fixed => (stage.params, stage.iterations),
        FitMode::Free => {
            let mut p = stage.params.clone();
            p.extend_from_slice(&[DECAY_THEORY, nu0]);
            let full = levenberg_marquardt(|q| data.eval(q, (DECAY_THEORY, nu0)), &p, &opts)?;
            (full.params, stage.iterations + full.iterations)
        }
    };
    let (decay, nu) = match mode {
        FitMode::Fixed => (DECAY_THEORY, NU_THEORY),
        FitMode::Free => (params[6], params[7]),
    };
    let amp = Matrix2::new(params[2], params[3], params[4], params[5]);
    let fit = SpiralFit {
        center: [params[0], params[1]],
        amp,
        nu,
        decay,
        rms_resid: 0.0,
        window,
        mode,
        iterations,
    };
    let rms_resid = relative_rms(&fit, &data);
    Ok(SpiralFit { rms_resid, ..fit })
}

fn relative_rms(fit: &SpiralFit, data: &SpiralData) -> f64 {
    let mut sq = 0.0;
    let mut amps = Vec::with_capacity(data.l.len());
    for (&l, z) in data.l.iter().zip(data.z) {
        let w = data.weight(l);
        let p = fit.predict(l);
        let res = [(p[0] - z[0]) * w / data.scale[0], (p[1] - z[1]) * w / data.scale[1]];
        sq += res[0] * res[0] + res[1] * res[1];
        let a = [(p[0] - fit.center[0]) * w / data.scale[0], (p[1] - fit.center[1]) * w / data.scale[1]];
        amps.push(a[0].hypot(a[1]));
    }
    amps.sort_by(f64::total_cmp);
    let mid = amps.len() / 2;
    let median = if amps.len() % 2 == 0 { 0.5 * (amps[mid - 1] + amps[mid]) } else { amps[mid] };
    (sq / data.l.len() as f64).sqrt() / median
}

/// Fits the spiral model to a family's (R, M) data inside `window`.
pub fn fit_spiral(table: &FamilyTable, window: Window, mode: FitMode) -> Result<SpiralFit> {
    let l = table.ln_eps();
    let z: Vec<[f64; 2]> = table.rows.iter().map(|r| [r.radius, r.mass]).collect();
    fit_points(&l, &z, window, mode)
}

/// Homology-plane points V(x̄/ε, ε) for each ε of the grid.
pub fn v_plane_points(eos: &MacroEos, x_bar: f64, eps_grid: &[f64]) -> Result<Vec<[f64; 2]>> {
    if let Some(e) = eps_grid.iter().find(|&&e| !(x_bar / e >= 10.0)) {
        return Err(Error::Domain(format!("x_bar / eps = {} is below 10 at eps = {e:e}", x_bar / e)));
    }
    eps_grid
        .par_iter()
        .map(|&eps| s_eps_solve(eos, eps, x_bar / eps, &SEpsOptions::default()).map(|t| t.last().v()))
        .collect()
}

/// Fits the spiral model to V(x̄/ε, ε) over the grid.
pub fn fit_v_spiral(eos: &MacroEos, x_bar: f64, eps_grid: &[f64], mode: FitMode) -> Result<SpiralFit> {
    let z = v_plane_points(eos, x_bar, eps_grid)?;
    let l: Vec<f64> = eps_grid.iter().map(|e| e.ln()).collect();
    let window = Window {
        lo: l.iter().copied().fold(f64::INFINITY, f64::min),
        hi: l.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    };
    fit_points(&l, &z, window, mode)
}
