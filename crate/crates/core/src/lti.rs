//! Continuous-time closed loops: transfer functions, state-space realization,
//! fixed-step simulation, and pole analysis.
//!
//! A training run is modeled as a unity-feedback loop around a controller
//! `C(s)`: the tracked parameter is `theta(s) = C/(C+1) * theta_star/s`. The
//! constructors here build that loop (and its forward-forward variant) from a
//! controller transfer function; [`simulate`] integrates the realization with
//! classical RK4; [`poles`] classifies stability; [`final_value`] evaluates
//! the steady state symbolically from the coefficient lists.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fmt::fmt_g;
use crate::num;
use crate::poly;

/// Rational function in `s`, coefficients in descending powers.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferFunction {
    pub num: Vec<f64>,
    pub den: Vec<f64>,
}

impl TransferFunction {
    /// Builds a transfer function, trimming exact leading zeros. The
    /// denominator must not be the zero polynomial.
    pub fn new(num: Vec<f64>, den: Vec<f64>) -> Result<Self> {
        if den.is_empty() || poly::is_zero(&den) {
            return Err(Error::InvalidController(String::from(
                "denominator polynomial is zero",
            )));
        }
        let num = if num.is_empty() {
            vec![0.0]
        } else {
            poly::trim(&num)
        };
        let den = poly::trim(&den);
        Ok(TransferFunction { num, den })
    }

    /// Constant gain `k` (a pure P controller).
    pub fn constant(k: f64) -> Self {
        TransferFunction {
            num: vec![k],
            den: vec![1.0],
        }
    }

    /// Ideal PID controller `(kd s^2 + kp s + ki) / s`. With `ki = kd = 0`
    /// this collapses to the constant gain `kp`.
    pub fn pid(kp: f64, ki: f64, kd: f64) -> Self {
        if ki == 0.0 && kd == 0.0 {
            return Self::constant(kp);
        }
        TransferFunction {
            num: poly::trim(&[kd, kp, ki]),
            den: vec![1.0, 0.0],
        }
    }

    pub fn num_degree(&self) -> usize {
        poly::degree(&self.num)
    }

    pub fn den_degree(&self) -> usize {
        poly::degree(&self.den)
    }

    /// Proper means `deg(num) <= deg(den)`.
    pub fn is_proper(&self) -> bool {
        self.num_degree() <= self.den_degree()
    }

    /// Evaluates the rational function at a complex point.
    pub fn eval(&self, s: Complex64) -> Complex64 {
        poly::eval_complex(&self.num, s) / poly::eval_complex(&self.den, s)
    }
}

fn controller_parts(controller: &TransferFunction) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    if poly::is_zero(&controller.num) {
        return Err(Error::InvalidController(String::from(
            "zero controller closes a degenerate loop",
        )));
    }
    let num_c = poly::trim(&controller.num);
    let den_c = poly::trim(&controller.den);
    let loop_den = poly::trim(&poly::add(&num_c, &den_c));
    if poly::is_zero(&loop_den) {
        return Err(Error::InvalidController(String::from(
            "controller has loop gain -1; the closed loop is degenerate",
        )));
    }
    Ok((num_c, den_c, loop_den))
}

/// Full closed-loop output `theta(s) = C/(C+1) * theta_star/s` as one rational
/// function (the step source is folded in, so the result has a pole at 0).
pub fn closed_loop(controller: &TransferFunction, theta_star: f64) -> Result<TransferFunction> {
    let (num_c, _, loop_den) = controller_parts(controller)?;
    TransferFunction::new(
        poly::scale(&num_c, theta_star),
        poly::shift_up(&loop_den, 1),
    )
}

/// Source-free loop `C/(C+1)`; drive it with a step of amplitude `theta_star`
/// to reproduce [`closed_loop`] in the time domain.
pub fn closed_loop_system(controller: &TransferFunction) -> Result<TransferFunction> {
    let (num_c, _, loop_den) = controller_parts(controller)?;
    TransferFunction::new(num_c, loop_den)
}

/// Forward-forward closed loop
/// `theta(s) = 1/(C+1) * ((2 lambda - 1) theta_star + th) / s`.
///
/// When `lambda = 0.5` the numerator constant is `th` alone: the optimum
/// drops out of the loop entirely.
pub fn ffnn_closed_loop(
    controller: &TransferFunction,
    lambda: f64,
    th: f64,
    theta_star: f64,
) -> Result<TransferFunction> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidInput(format!(
            "positive-sample portion must be in [0, 1], got {lambda}"
        )));
    }
    let (_, den_c, loop_den) = controller_parts(controller)?;
    let gain = (2.0 * lambda - 1.0) * theta_star + th;
    TransferFunction::new(poly::scale(&den_c, gain), poly::shift_up(&loop_den, 1))
}

/// Source-free forward-forward loop `1/(C+1)`; drive it with a step of
/// amplitude `(2 lambda - 1) theta_star + th`.
pub fn ffnn_closed_loop_system(controller: &TransferFunction) -> Result<TransferFunction> {
    let (_, den_c, loop_den) = controller_parts(controller)?;
    TransferFunction::new(den_c, loop_den)
}

/// The singular part of the SGD-driven GAN generator branch,
/// `((theta_d_star/kp)^2 s - 4) / s`: the radicand of the closed-form
/// generator solution as a rational function. Its pole at `s = 0` is what
/// makes the SGD generator loop marginally stable.
pub fn gan_sgd_generator_system(theta_d_star: f64, kp: f64) -> TransferFunction {
    let c = theta_d_star / kp;
    TransferFunction {
        num: vec![c * c, -4.0],
        den: vec![1.0, 0.0],
    }
}

/// Single-input single-output state-space realization in controllable
/// canonical form. `a` is `n x n` row-major.
#[derive(Debug, Clone)]
pub struct StateSpace {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub d: f64,
    pub n: usize,
}

impl StateSpace {
    /// Frequency response `C (sI - A)^{-1} B + D` by dense complex
    /// elimination; `n` stays small here so this is plenty.
    pub fn eval(&self, s: Complex64) -> Complex64 {
        let n = self.n;
        if n == 0 {
            return Complex64::new(self.d, 0.0);
        }
        // Build (sI - A) | B and solve.
        let mut m = vec![Complex64::new(0.0, 0.0); n * n];
        let mut rhs: Vec<Complex64> = self.b.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        for i in 0..n {
            for j in 0..n {
                let a = -self.a[i * n + j];
                m[i * n + j] = if i == j {
                    s + a
                } else {
                    Complex64::new(a, 0.0)
                };
            }
        }
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&p, &q| {
                    m[p * n + col]
                        .norm_sqr()
                        .partial_cmp(&m[q * n + col].norm_sqr())
                        .unwrap_or(core::cmp::Ordering::Equal)
                })
                .unwrap();
            if pivot != col {
                for j in 0..n {
                    m.swap(col * n + j, pivot * n + j);
                }
                rhs.swap(col, pivot);
            }
            let diag = m[col * n + col];
            for row in col + 1..n {
                let factor = m[row * n + col] / diag;
                for j in col..n {
                    let v = m[col * n + j];
                    m[row * n + j] -= factor * v;
                }
                let r = rhs[col];
                rhs[row] -= factor * r;
            }
        }
        for col in (0..n).rev() {
            let mut acc = rhs[col];
            for j in col + 1..n {
                acc -= m[col * n + j] * rhs[j];
            }
            rhs[col] = acc / m[col * n + col];
        }
        let mut y = Complex64::new(self.d, 0.0);
        for (ci, xi) in self.c.iter().zip(rhs.iter()) {
            y += *ci * *xi;
        }
        y
    }
}

/// Controllable canonical realization of a proper transfer function. No
/// pole-zero cancellation is attempted; `(s+1)/(s+1)` yields an order-1
/// realization whose response matches unity.
pub fn to_state_space(tf: &TransferFunction) -> Result<StateSpace> {
    if !tf.is_proper() {
        return Err(Error::ImproperSystem(String::from(
            "numerator degree exceeds denominator degree; close the loop first",
        )));
    }
    let den = poly::trim(&tf.den);
    let num = poly::trim(&tf.num);
    let n = den.len() - 1;
    let a0 = den[0];
    // Monic denominator [1, a1..an] and numerator padded to n+1 terms.
    let an: Vec<f64> = den.iter().map(|&c| c / a0).collect();
    let mut bn = vec![0.0; n + 1 - num.len()];
    bn.extend(num.iter().map(|&c| c / a0));

    let d = bn[0];
    let mut a = vec![0.0; n * n];
    for i in 0..n.saturating_sub(1) {
        a[i * n + i + 1] = 1.0;
    }
    if n > 0 {
        for j in 0..n {
            a[(n - 1) * n + j] = -an[n - j];
        }
    }
    let mut b = vec![0.0; n];
    if n > 0 {
        b[n - 1] = 1.0;
    }
    let c: Vec<f64> = (0..n).map(|i| bn[n - i] - an[n - i] * d).collect();
    Ok(StateSpace { a, b, c, d, n })
}

/// Input signal for time-domain simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Source {
    Step(f64),
    Sine { amplitude: f64, omega: f64 },
    Zero,
}

impl Source {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Source::Step(a) => a,
            Source::Sine { amplitude, omega } => amplitude * num::sin(omega * t),
            Source::Zero => 0.0,
        }
    }
}

/// Uniformly sampled signal.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub dt: f64,
    pub values: Vec<f64>,
    pub label: String,
}

impl TimeSeries {
    pub fn new(dt: f64, values: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidInput(format!(
                "dt must be finite and positive, got {dt}"
            )));
        }
        if values.is_empty() {
            return Err(Error::InvalidInput(String::from(
                "time series must be non-empty",
            )));
        }
        Ok(TimeSeries {
            dt,
            values,
            label: label.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }

    /// CSV with a `t,value` header, one row per sample, `%.9g` formatting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,value\n");
        for (i, &v) in self.values.iter().enumerate() {
            out.push_str(&fmt_g(self.time(i), 9));
            out.push(',');
            out.push_str(&fmt_g(v, 9));
            out.push('\n');
        }
        out
    }
}

/// Classical fixed-step RK4 integration of `x' = Ax + Bu`, `y = Cx + Du` from
/// `x(0) = 0`. Output has `floor(horizon/dt) + 1` samples (including t = 0).
pub fn simulate(ss: &StateSpace, source: Source, dt: f64, horizon: f64) -> Result<TimeSeries> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidInput(format!(
            "dt must be finite and positive, got {dt}"
        )));
    }
    if horizon < dt {
        return Err(Error::InvalidInput(format!(
            "horizon {horizon} must be at least one step dt = {dt}"
        )));
    }
    let steps = num::floor(horizon / dt) as usize;
    let n = ss.n;
    let mut x = vec![0.0; n];
    let mut out = Vec::with_capacity(steps + 1);

    let deriv = |x: &[f64], u: f64, dx: &mut [f64]| {
        for (i, slot) in dx.iter_mut().enumerate() {
            let mut acc = ss.b[i] * u;
            let row = &ss.a[i * n..(i + 1) * n];
            for (aij, xj) in row.iter().zip(x.iter()) {
                acc += aij * xj;
            }
            *slot = acc;
        }
    };
    let output = |x: &[f64], u: f64| -> f64 {
        let mut y = ss.d * u;
        for (ci, xi) in ss.c.iter().zip(x.iter()) {
            y += ci * xi;
        }
        y
    };

    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];

    for step in 0..=steps {
        let t = step as f64 * dt;
        let y = output(&x, source.value(t));
        if !y.is_finite() {
            return Err(Error::Diverged {
                at: step,
                context: "state-space simulation",
            });
        }
        out.push(y);
        if step == steps {
            break;
        }

        let (u0, um, u1) = (
            source.value(t),
            source.value(t + 0.5 * dt),
            source.value(t + dt),
        );
        deriv(&x, u0, &mut k1);
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * dt * k1[i];
        }
        deriv(&tmp, um, &mut k2);
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * dt * k2[i];
        }
        deriv(&tmp, um, &mut k3);
        for i in 0..n {
            tmp[i] = x[i] + dt * k3[i];
        }
        deriv(&tmp, u1, &mut k4);
        for i in 0..n {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    TimeSeries::new(dt, out, "response")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabilityClass {
    Stable,
    Marginal,
    Unstable,
}

/// Pole set and the stability class it implies.
#[derive(Debug, Clone)]
pub struct Stability {
    pub poles: Vec<Complex64>,
    pub class: StabilityClass,
}

/// Tolerance on pole real parts for the marginal band.
pub const STABILITY_TOL: f64 = 1e-9;

/// All denominator roots by Aberth-Ehrlich simultaneous iteration
/// (tolerance 1e-12, at most 1000 sweeps), classified per [`StabilityClass`]:
/// stable iff every real part is below `-STABILITY_TOL`; marginal iff the
/// largest real part sits in the tolerance band and no axis pole repeats;
/// unstable otherwise.
pub fn poles(tf: &TransferFunction) -> Result<Stability> {
    let den = poly::trim(&tf.den);
    if poly::degree(&den) < 1 {
        return Err(Error::InvalidInput(String::from(
            "denominator must have degree >= 1 to carry poles",
        )));
    }
    let roots = aberth(&den)?;
    Ok(classify(roots))
}

fn classify(roots: Vec<Complex64>) -> Stability {
    let tol = STABILITY_TOL;
    let max_re = roots.iter().map(|r| r.re).fold(f64::NEG_INFINITY, f64::max);
    let scale = roots.iter().map(|r| r.norm()).fold(1.0, f64::max);
    let class = if max_re < -tol {
        StabilityClass::Stable
    } else if max_re <= tol {
        // Repeated pole on the axis -> polynomial growth -> unstable.
        let mut repeated = false;
        for (i, a) in roots.iter().enumerate() {
            if a.re.abs() > tol {
                continue;
            }
            for b in roots.iter().skip(i + 1) {
                if b.re.abs() <= tol && (a - b).norm() < 1e-7 * scale {
                    repeated = true;
                }
            }
        }
        if repeated {
            StabilityClass::Unstable
        } else {
            StabilityClass::Marginal
        }
    } else {
        StabilityClass::Unstable
    };
    Stability {
        poles: roots,
        class,
    }
}

fn aberth(den: &[f64]) -> Result<Vec<Complex64>> {
    let n = den.len() - 1;
    let monic: Vec<f64> = den.iter().map(|&c| c / den[0]).collect();
    let dmonic = poly::derivative(&monic);

    // Initial guesses on a circle of radius 1 + max|coef|, angles offset so
    // no guess starts on the real axis.
    let radius = 1.0 + monic.iter().map(|c| c.abs()).fold(0.0, f64::max);
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| {
            let angle = 2.0 * core::f64::consts::PI * k as f64 / n as f64 + 0.4;
            Complex64::new(radius * num::cos(angle), radius * num::sin(angle))
        })
        .collect();

    let tol = 1e-12;
    let mut best_residual = f64::INFINITY;
    for _ in 0..1000 {
        let mut moved = 0.0f64;
        for k in 0..n {
            let pk = poly::eval_complex(&monic, z[k]);
            let dk = poly::eval_complex(&dmonic, z[k]);
            if pk.norm() == 0.0 {
                continue;
            }
            let newton = if dk.norm() == 0.0 {
                // Sitting on a critical point; nudge off it.
                Complex64::new(1e-6, 1e-6)
            } else {
                pk / dk
            };
            let mut repulsion = Complex64::new(0.0, 0.0);
            for j in 0..n {
                if j != k {
                    let diff = z[k] - z[j];
                    if diff.norm() > 0.0 {
                        repulsion += diff.inv();
                    }
                }
            }
            let denom = Complex64::new(1.0, 0.0) - newton * repulsion;
            let correction = if denom.norm() == 0.0 {
                newton
            } else {
                newton / denom
            };
            z[k] -= correction;
            moved = moved.max(correction.norm() / (1.0 + z[k].norm()));
        }
        if moved < tol {
            // Collapse numerically-real roots onto the axis.
            let scale = z.iter().map(|r| r.norm()).fold(1.0, f64::max);
            for r in z.iter_mut() {
                if r.im.abs() < 1e-10 * scale {
                    r.im = 0.0;
                }
            }
            return Ok(z);
        }
        best_residual = best_residual.min(
            z.iter()
                .map(|&zk| poly::eval_complex(&monic, zk).norm())
                .fold(0.0, f64::max),
        );
    }
    Err(Error::NoConvergence {
        residual: best_residual,
    })
}

/// Final value of the loop output under a step source, evaluated symbolically:
/// the single source pole at `s = 0` is cancelled and the remaining rational
/// function is read off at `s = 0`, scaled by the step amplitude. Errors if
/// the remaining dynamics are not strictly stable.
pub fn final_value(tf: &TransferFunction, source: &Source) -> Result<f64> {
    let amplitude = match source {
        Source::Step(a) => *a,
        _ => {
            return Err(Error::InvalidInput(String::from(
                "final value is defined for step sources only",
            )))
        }
    };
    let num = poly::trim(&tf.num);
    let den = poly::trim(&tf.den);
    let scale = den.iter().map(|c| c.abs()).fold(0.0, f64::max);
    let tail = *den.last().expect("trimmed denominator is non-empty");

    if tail.abs() > 1e-12 * scale {
        // No pole at the origin: the output decays (if stable) to zero.
        let st = poles(tf)?;
        if st.class == StabilityClass::Unstable {
            return Err(Error::FinalValueUndefined(String::from("unstable loop")));
        }
        return Ok(0.0);
    }

    let reduced = &den[..den.len() - 1];
    let reduced_tail = *reduced.last().expect("degree >= 1 denominator");
    if reduced_tail.abs() <= 1e-12 * scale {
        return Err(Error::FinalValueUndefined(String::from(
            "repeated pole at the origin",
        )));
    }
    if poly::degree(reduced) >= 1 {
        let rest = aberth(&poly::trim(reduced))?;
        if rest.iter().any(|r| r.re >= -STABILITY_TOL) {
            return Err(Error::FinalValueUndefined(String::from(
                "loop dynamics beyond the source pole are not strictly stable",
            )));
        }
    }
    Ok(amplitude * num.last().expect("non-empty numerator") / reduced_tail)
}
