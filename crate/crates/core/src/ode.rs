//! Dormand–Prince 5(4) integrator with PI step-size control and the
//! fourth-order continuous extension of Hairer, Nørsett & Wanner.
//!
//! The integrator hands every accepted step to a callback as a
//! [`DenseStep`], which can be evaluated anywhere inside the step. Event
//! location and sampling are built on top of that by the callers.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Step-size control settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperOptions<const N: usize> {
    pub rtol: f64,
    pub atol: [f64; N],
    pub h_init: Option<f64>,
    pub h_max: f64,
    pub max_steps: usize,
}

impl<const N: usize> StepperOptions<N> {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol: [atol; N],
            h_init: None,
            h_max: f64::INFINITY,
            max_steps: 1_000_000,
        }
    }

    pub fn with_h_init(mut self, h: f64) -> Self {
        self.h_init = Some(h);
        self
    }

    pub fn with_h_max(mut self, h: f64) -> Self {
        self.h_max = h;
        self
    }
}

/// One accepted step together with its continuous extension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenseStep<const N: usize> {
    pub t0: f64,
    pub h: f64,
    rcont: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn y0(&self) -> [f64; N] {
        self.rcont[0]
    }

    pub fn y1(&self) -> [f64; N] {
        let mut out = [0.0; N];
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.rcont[0][i] + self.rcont[1][i];
        }
        out
    }

    /// Interpolated state at `t`; accurate to fourth order inside the step.
    pub fn eval(&self, t: f64) -> [f64; N] {
        let theta = (t - self.t0) / self.h;
        let theta1 = 1.0 - theta;
        let mut out = [0.0; N];
        for (i, o) in out.iter_mut().enumerate() {
            let r = &self.rcont;
            *o = r[0][i] + theta * (r[1][i] + theta1 * (r[2][i] + theta * (r[3][i] + theta1 * r[4][i])));
        }
        out
    }

    /// One component of [`DenseStep::eval`].
    pub fn eval_component(&self, t: f64, i: usize) -> f64 {
        let theta = (t - self.t0) / self.h;
        let theta1 = 1.0 - theta;
        let r = &self.rcont;
        r[0][i] + theta * (r[1][i] + theta1 * (r[2][i] + theta * (r[3][i] + theta1 * r[4][i])))
    }
}

/// Returned by the per-step callback.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

/// Final state of an integration run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integration<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
    pub accepted: usize,
    pub rejected: usize,
    pub stopped: bool,
}

#[inline]
fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        if *c != 0.0 {
            for i in 0..N {
                out[i] += h * c * k[i];
            }
        }
    }
    out
}

fn error_norm<const N: usize>(err: &[f64; N], y0: &[f64; N], y1: &[f64; N], opts: &StepperOptions<N>) -> f64 {
    let mut acc = 0.0;
    for i in 0..N {
        let scale = opts.atol[i] + opts.rtol * y0[i].abs().max(y1[i].abs());
        let q = err[i] / scale;
        acc += q * q;
    }
    (acc / N as f64).sqrt()
}

fn initial_step<const N: usize, F>(rhs: &mut F, t0: f64, y0: &[f64; N], f0: &[f64; N], span: f64, opts: &StepperOptions<N>) -> f64
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let mut dnf = 0.0;
    let mut dny = 0.0;
    for i in 0..N {
        let sk = opts.atol[i] + opts.rtol * y0[i].abs();
        dnf += (f0[i] / sk).powi(2);
        dny += (y0[i] / sk).powi(2);
    }
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 { 1e-6 } else { 0.01 * (dny / dnf).sqrt() };
    h = h.min(opts.h_max).min(span);
    let y1 = axpy(y0, h, &[(1.0, f0)]);
    let f1 = rhs(t0 + h, &y1);
    let mut der2 = 0.0;
    for i in 0..N {
        let sk = opts.atol[i] + opts.rtol * y0[i].abs();
        der2 += ((f1[i] - f0[i]) / sk).powi(2);
    }
    let der2 = der2.sqrt() / h;
    let der12 = der2.max(dnf.sqrt());
    let h1 = if der12 <= 1e-15 { (h * 1e-3).max(1e-6) } else { (0.01 / der12).powf(0.2) };
    (100.0 * h).min(h1).min(opts.h_max).min(span)
}

/// Integrates `y' = rhs(t, y)` from `t0` towards `t_end > t0`.
///
/// `on_step` sees every accepted step and may stop the integration early.
/// Steps with non-finite right-hand sides are rejected and retried smaller.
pub fn integrate<const N: usize, F, S>(
    mut rhs: F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    opts: &StepperOptions<N>,
    mut on_step: S,
) -> Result<Integration<N>>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
    S: FnMut(&DenseStep<N>) -> Control,
{
    if !(t_end > t0) {
        return Err(Error::Domain(format!("t_end = {t_end} must exceed t0 = {t0}")));
    }
    const BETA: f64 = 0.04;
    const SAFE: f64 = 0.9;
    const FACC1: f64 = 1.0 / 0.2;
    const FACC2: f64 = 1.0 / 10.0;
    let expo1 = 0.2 - BETA * 0.75;

    let mut t = t0;
    let mut y = y0;
    let mut k1 = rhs(t, &y);
    let mut h = match opts.h_init {
        Some(h) => h.min(t_end - t0),
        None => initial_step(&mut rhs, t0, &y0, &k1, t_end - t0, opts),
    };
    let mut facold: f64 = 1e-4;
    let mut last_rejected = false;
    let mut accepted = 0;
    let mut rejected = 0;

    loop {
        if accepted + rejected >= opts.max_steps {
            return Err(Error::TooManySteps(opts.max_steps));
        }
        let remaining = t_end - t;
        let at_end = h >= remaining * (1.0 - 1e-14);
        if at_end {
            h = remaining;
        }
        if h <= 16.0 * f64::EPSILON * t.abs().max(f64::MIN_POSITIVE) {
            return Err(Error::StepUnderflow { t, h });
        }

        let k2 = rhs(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
        let k3 = rhs(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = rhs(t + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = rhs(t + C5 * h, &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = rhs(t + h, &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
        let y_new = axpy(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = rhs(t + h, &y_new);

        let mut err = [0.0; N];
        for i in 0..N {
            err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let e = error_norm(&err, &y, &y_new, opts);

        if !e.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
            rejected += 1;
            last_rejected = true;
            h *= 0.1;
            continue;
        }

        let fac11 = e.powf(expo1);
        if e <= 1.0 {
            let mut rcont = [[0.0; N]; 5];
            for i in 0..N {
                let dy = y_new[i] - y[i];
                let bspl = h * k1[i] - dy;
                rcont[0][i] = y[i];
                rcont[1][i] = dy;
                rcont[2][i] = bspl;
                rcont[3][i] = dy - h * k7[i] - bspl;
                rcont[4][i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            let step = DenseStep { t0: t, h, rcont };
            accepted += 1;
            t = if at_end { t_end } else { t + h };
            y = y_new;
            k1 = k7;

            if on_step(&step) == Control::Stop {
                return Ok(Integration { t, y, accepted, rejected, stopped: true });
            }
            if at_end {
                return Ok(Integration { t, y, accepted, rejected, stopped: false });
            }

            let mut fac = fac11 / facold.powf(BETA);
            fac = FACC2.max(FACC1.min(fac / SAFE));
            let mut h_new = h / fac;
            if last_rejected {
                h_new = h_new.min(h);
            }
            facold = e.max(1e-4);
            last_rejected = false;
            h = h_new.min(opts.h_max);
        } else {
            rejected += 1;
            last_rejected = true;
            h /= FACC1.min(fac11 / SAFE);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_end_value() {
        let opts = StepperOptions::<1>::new(1e-10, 1e-14);
        let out = integrate(|_, y| [-y[0]], 0.0, [1.0], 5.0, &opts, |_| Control::Continue).unwrap();
        assert!((out.y[0] - (-5.0f64).exp()).abs() < 1e-11);
        assert_eq!(out.t, 5.0);
    }

    #[test]
    fn dense_output_tracks_harmonic_oscillator() {
        let opts = StepperOptions::<2>::new(1e-11, 1e-13);
        let mut worst: f64 = 0.0;
        integrate(|_, y| [y[1], -y[0]], 0.0, [0.0, 1.0], 10.0, &opts, |step| {
            for j in 1..4 {
                let t = step.t0 + step.h * j as f64 / 4.0;
                let y = step.eval(t);
                worst = worst.max((y[0] - t.sin()).abs()).max((y[1] - t.cos()).abs());
            }
            Control::Continue
        })
        .unwrap();
        assert!(worst < 1e-8, "dense output error {worst}");
    }

    #[test]
    fn callback_can_stop() {
        let opts = StepperOptions::<1>::new(1e-8, 1e-12);
        let out = integrate(|_, _| [1.0], 0.0, [0.0], 100.0, &opts, |s| if s.y1()[0] > 1.0 { Control::Stop } else { Control::Continue }).unwrap();
        assert!(out.stopped);
        assert!(out.t < 100.0);
    }

    #[test]
    fn rejects_empty_span() {
        let opts = StepperOptions::<1>::new(1e-8, 1e-12);
        assert!(integrate(|_, y| [y[0]], 1.0, [0.0], 1.0, &opts, |_| Control::Continue).is_err());
    }
}
