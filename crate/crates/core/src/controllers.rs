//! Discrete controller update rules shared between scalar loop simulations and
//! network training, plus the continuous-time transfer function of each rule.
//!
//! Every rule maps a gradient vector to a parameter update `delta`; the caller
//! applies `theta += delta`. State (momentum, derivative and filter taps,
//! fuzzy error memory) is per parameter.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::lti::TransferFunction;
use crate::num;
use crate::poly;

/// The update rules. The first seven are the comparison set; `RsSgd` is the
/// residual-connection rule `delta = -r g - r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ControllerKind {
    Sgd,
    Sgdm,
    Adam,
    Pid,
    LpfSgd,
    HpfSgd,
    FuzzyPid,
    RsSgd,
}

impl ControllerKind {
    /// The seven-optimizer comparison set, in reporting order.
    pub const COMPARISON_SET: [ControllerKind; 7] = [
        ControllerKind::Sgd,
        ControllerKind::Sgdm,
        ControllerKind::Adam,
        ControllerKind::Pid,
        ControllerKind::LpfSgd,
        ControllerKind::HpfSgd,
        ControllerKind::FuzzyPid,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ControllerKind::Sgd => "sgd",
            ControllerKind::Sgdm => "sgdm",
            ControllerKind::Adam => "adam",
            ControllerKind::Pid => "pid",
            ControllerKind::LpfSgd => "lpf-sgd",
            ControllerKind::HpfSgd => "hpf-sgd",
            ControllerKind::FuzzyPid => "fuzzypid",
            ControllerKind::RsSgd => "rs-sgd",
        }
    }

    pub fn parse(s: &str) -> Option<ControllerKind> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "sgd" => Some(ControllerKind::Sgd),
            "sgdm" => Some(ControllerKind::Sgdm),
            "adam" => Some(ControllerKind::Adam),
            "pid" => Some(ControllerKind::Pid),
            "lpf" | "lpfsgd" => Some(ControllerKind::LpfSgd),
            "hpf" | "hpfsgd" => Some(ControllerKind::HpfSgd),
            "fuzzypid" | "fuzzy" => Some(ControllerKind::FuzzyPid),
            "rs" | "rssgd" => Some(ControllerKind::RsSgd),
            _ => None,
        }
    }
}

/// Second-order IIR section. `b` are the input taps, `a` the output taps with
/// `a[0] == 1` after normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct IirFilter {
    pub gain: f64,
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl IirFilter {
    pub fn new(gain: f64, b: [f64; 3], a: [f64; 3]) -> Result<Self> {
        if a[0] == 0.0 {
            return Err(Error::InvalidInput(String::from(
                "leading output tap must be nonzero",
            )));
        }
        let a0 = a[0];
        Ok(IirFilter {
            gain: gain / a0,
            b,
            a: [1.0, a[1] / a0, a[2] / a0],
        })
    }

    /// Half-band low-pass coefficients, taken verbatim from the filter table.
    /// The output taps (1, 0, -1) put the discrete poles at z = +/-1.
    pub fn low_pass() -> Self {
        IirFilter {
            gain: 0.49968,
            b: [1.0, -0.99937, 0.00063],
            a: [1.0, 0.0, -1.0],
        }
    }

    /// Half-band high-pass: same gain and output taps as the low-pass, the
    /// middle input tap flips sign.
    pub fn high_pass() -> Self {
        IirFilter {
            gain: 0.49968,
            b: [1.0, 0.99937, 0.00063],
            a: [1.0, 0.0, -1.0],
        }
    }

    /// Standard half-band 2nd-order Butterworth low-pass, for sensitivity
    /// studies against the verbatim table coefficients.
    pub fn butterworth_low_pass() -> Self {
        let k = 1.0 / (2.0 + core::f64::consts::SQRT_2);
        IirFilter {
            gain: 1.0,
            b: [k, 2.0 * k, k],
            a: [1.0, 0.0, (2.0 - core::f64::consts::SQRT_2) * k],
        }
    }

    pub fn butterworth_high_pass() -> Self {
        let k = 1.0 / (2.0 + core::f64::consts::SQRT_2);
        IirFilter {
            gain: 1.0,
            b: [k, -2.0 * k, k],
            a: [1.0, 0.0, (2.0 - core::f64::consts::SQRT_2) * k],
        }
    }

    /// Direct-form recurrence
    /// `y = gain*(b0 x + b1 x[-1] + b2 x[-2]) - a1 y[-1] - a2 y[-2]`.
    pub fn step(&self, st: &mut IirState, x: f64) -> f64 {
        let y = self.gain * (self.b[0] * x + self.b[1] * st.x1 + self.b[2] * st.x2)
            - self.a[1] * st.y1
            - self.a[2] * st.y2;
        st.x2 = st.x1;
        st.x1 = x;
        st.y2 = st.y1;
        st.y1 = y;
        y
    }
}

/// Filter delay line, zero-initialized.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IirState {
    pub x1: f64,
    pub x2: f64,
    pub y1: f64,
    pub y2: f64,
}

/// Gains and hyperparameters for every rule. Unused fields are ignored by the
/// kinds that do not read them.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerConfig {
    pub kind: ControllerKind,
    /// Learning rate `r`.
    pub lr: f64,
    /// Momentum / smoothing factor `alpha` shared by SGDM and the PID family.
    pub momentum: f64,
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Fuzzy universe half-range: errors are clamped to `[-phi, phi]`.
    pub phi: f64,
    /// Fuzzy adjustment strength.
    pub kappa: f64,
    /// Frozen adaption factor used only by the Adam transfer function.
    pub adam_m: f64,
    pub filter: IirFilter,
}

impl ControllerConfig {
    /// Defaults: `r = 0.02` (Adam keeps its conventional `0.001`),
    /// `alpha = 0.9`, PID gains `(1, 5, 100)`, Adam moments `(0.9, 0.999)`
    /// with `epsilon = 1e-8`, fuzzy universe `0.02` with strength `0.1`.
    pub fn new(kind: ControllerKind) -> Self {
        ControllerConfig {
            kind,
            lr: if kind == ControllerKind::Adam {
                0.001
            } else {
                0.02
            },
            momentum: 0.9,
            kp: 1.0,
            ki: 5.0,
            kd: 100.0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            phi: 0.02,
            kappa: 0.1,
            adam_m: 1.0,
            filter: match kind {
                ControllerKind::HpfSgd => IirFilter::high_pass(),
                _ => IirFilter::low_pass(),
            },
        }
    }

    pub fn with_lr(mut self, lr: f64) -> Self {
        self.lr = lr;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::InvalidInput(format!(
                "learning rate must be > 0, got {}",
                self.lr
            )));
        }
        if !(0.0..=1.0).contains(&self.momentum) {
            return Err(Error::InvalidInput(format!(
                "momentum must be in [0, 1], got {}",
                self.momentum
            )));
        }
        if self.kp < 0.0 || self.ki < 0.0 || self.kd < 0.0 {
            return Err(Error::InvalidInput(String::from(
                "PID gains must be non-negative",
            )));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0 < b && b < 1.0) {
                return Err(Error::InvalidInput(format!(
                    "{name} must be in (0, 1), got {b}"
                )));
            }
        }
        if self.epsilon <= 0.0 {
            return Err(Error::InvalidInput(String::from("epsilon must be > 0")));
        }
        if self.phi <= 0.0 {
            return Err(Error::InvalidInput(String::from(
                "fuzzy universe phi must be > 0",
            )));
        }
        if self.kappa < 0.0 {
            return Err(Error::InvalidInput(String::from(
                "fuzzy strength kappa must be >= 0",
            )));
        }
        Ok(())
    }
}

/// Per-parameter buffers; all zero-initialized.
#[derive(Debug, Clone, Default)]
struct ControllerState {
    /// Momentum accumulator `V`.
    v: Vec<f64>,
    /// Filtered gradient-difference buffer `D`.
    d: Vec<f64>,
    /// Previous raw gradient, for the derivative channel.
    g_prev: Vec<f64>,
    /// Adam first and second moments.
    m: Vec<f64>,
    v2: Vec<f64>,
    /// Step count; bias correction uses `t` starting at 1.
    t: u64,
    /// IIR delay lines for the filtered rules.
    taps: Vec<IirState>,
    /// Previous fuzzy error, for `ec = e - e_prev`.
    e_prev: Vec<f64>,
    /// Last effective fuzzy gains (introspection only).
    eff_kp: f64,
    eff_ki: f64,
    eff_kd: f64,
}

/// A configured rule plus its per-parameter state. One controller owns one
/// parameter tensor for the duration of a run.
#[derive(Debug, Clone)]
pub struct Controller {
    cfg: ControllerConfig,
    state: ControllerState,
    len: usize,
}

impl Controller {
    pub fn new(cfg: ControllerConfig, len: usize) -> Result<Self> {
        cfg.validate()?;
        let mut state = ControllerState::default();
        match cfg.kind {
            ControllerKind::Sgd | ControllerKind::RsSgd => {}
            ControllerKind::Sgdm => state.v = vec![0.0; len],
            ControllerKind::Adam => {
                state.m = vec![0.0; len];
                state.v2 = vec![0.0; len];
            }
            ControllerKind::Pid => {
                state.v = vec![0.0; len];
                state.d = vec![0.0; len];
                state.g_prev = vec![0.0; len];
            }
            ControllerKind::FuzzyPid => {
                state.v = vec![0.0; len];
                state.d = vec![0.0; len];
                state.g_prev = vec![0.0; len];
                state.e_prev = vec![0.0; len];
                state.eff_kp = cfg.kp;
                state.eff_ki = cfg.ki;
                state.eff_kd = cfg.kd;
            }
            ControllerKind::LpfSgd | ControllerKind::HpfSgd => {
                state.taps = vec![IirState::default(); len]
            }
        }
        Ok(Controller { cfg, state, len })
    }

    pub fn cfg(&self) -> &ControllerConfig {
        &self.cfg
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Steps taken so far.
    pub fn steps(&self) -> u64 {
        self.state.t
    }

    /// Last effective fuzzy gains `(kp, ki, kd)`; the base gains until the
    /// first fuzzy step.
    pub fn effective_gains(&self) -> (f64, f64, f64) {
        (self.state.eff_kp, self.state.eff_ki, self.state.eff_kd)
    }

    /// Online Adam adaption factor for parameter `i`, reconstructed from the
    /// running moment sums. `None` before the first step or for other kinds.
    pub fn adam_adaption(&self, i: usize) -> Option<f64> {
        if self.cfg.kind != ControllerKind::Adam || self.state.t == 0 || i >= self.len {
            return None;
        }
        let t = self.state.t as i32;
        let v_hat = self.state.v2[i] / (1.0 - num::powi(self.cfg.beta2, t));
        let moment_scale = (1.0 - self.cfg.beta1) / (1.0 - num::powi(self.cfg.beta1, t));
        Some(1.0 / (num::sqrt(v_hat) + self.cfg.epsilon) * moment_scale)
    }

    /// Computes the update for `grad`, returning `delta` with
    /// `theta <- theta + delta`.
    pub fn step(&mut self, grad: &[f64]) -> Result<Vec<f64>> {
        let mut delta = vec![0.0; grad.len()];
        self.step_into(grad, &mut delta)?;
        Ok(delta)
    }

    /// In-place variant of [`Controller::step`].
    pub fn step_into(&mut self, grad: &[f64], delta: &mut [f64]) -> Result<()> {
        if grad.len() != self.len {
            return Err(Error::ShapeMismatch {
                expected: self.len,
                got: grad.len(),
            });
        }
        if delta.len() != self.len {
            return Err(Error::ShapeMismatch {
                expected: self.len,
                got: delta.len(),
            });
        }
        if let Some(index) = grad.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        self.state.t += 1;
        let lr = self.cfg.lr;
        match self.cfg.kind {
            ControllerKind::Sgd => {
                for (d, &g) in delta.iter_mut().zip(grad) {
                    *d = -lr * g;
                }
            }
            ControllerKind::RsSgd => {
                // Residual-style update: the skip path contributes a constant
                // unit gradient alongside the backprop one.
                for (d, &g) in delta.iter_mut().zip(grad) {
                    *d = -lr * g - lr;
                }
            }
            ControllerKind::Sgdm => {
                let alpha = self.cfg.momentum;
                for ((d, &g), v) in delta.iter_mut().zip(grad).zip(&mut self.state.v) {
                    *v = alpha * *v - lr * g;
                    *d = *v;
                }
            }
            ControllerKind::Adam => {
                let (b1, b2, eps) = (self.cfg.beta1, self.cfg.beta2, self.cfg.epsilon);
                let t = self.state.t as i32;
                let bc1 = 1.0 - num::powi(b1, t);
                let bc2 = 1.0 - num::powi(b2, t);
                for i in 0..self.len {
                    let g = grad[i];
                    self.state.m[i] = b1 * self.state.m[i] + (1.0 - b1) * g;
                    self.state.v2[i] = b2 * self.state.v2[i] + (1.0 - b2) * g * g;
                    let m_hat = self.state.m[i] / bc1;
                    let v_hat = self.state.v2[i] / bc2;
                    delta[i] = -lr * m_hat / (num::sqrt(v_hat) + eps);
                }
            }
            ControllerKind::Pid => self.pid_family_step(grad, delta, false),
            ControllerKind::FuzzyPid => self.pid_family_step(grad, delta, true),
            ControllerKind::LpfSgd | ControllerKind::HpfSgd => {
                let filter = self.cfg.filter.clone();
                for ((d, &g), taps) in delta.iter_mut().zip(grad).zip(&mut self.state.taps) {
                    *d = -lr * filter.step(taps, g);
                }
            }
        }
        Ok(())
    }

    /// PID rule: momentum accumulator plus a smoothed gradient-difference
    /// channel scaled by `r*kd`. The fuzzy variant rescales the active gains
    /// each step from the error `e = -g` and its increment.
    fn pid_family_step(&mut self, grad: &[f64], delta: &mut [f64], fuzzy: bool) {
        let ControllerConfig {
            lr,
            momentum: alpha,
            kd,
            ..
        } = self.cfg;
        for i in 0..self.len {
            let g = grad[i];
            let f = if fuzzy {
                let e = -g;
                let ec = e - self.state.e_prev[i];
                self.state.e_prev[i] = e;
                let factor = fuzzy_factor(&self.cfg, e, ec);
                self.state.eff_kp = self.cfg.kp * factor;
                self.state.eff_ki = self.cfg.ki * factor;
                self.state.eff_kd = self.cfg.kd * factor;
                factor
            } else {
                1.0
            };
            let v = alpha * self.state.v[i] - (f * lr) * g;
            let d = alpha * self.state.d[i] + (1.0 - alpha) * (g - self.state.g_prev[i]);
            self.state.v[i] = v;
            self.state.d[i] = d;
            self.state.g_prev[i] = g;
            delta[i] = v - (f * lr) * kd * d;
        }
    }
}

/// Gaussian membership width: the universe maps to `[-1, 1]` and the bell has
/// `sigma = 1/3` so saturation reaches `1 - exp(-4.5)`.
const MEMBERSHIP_SIGMA: f64 = 1.0 / 3.0;

fn membership(x: f64) -> f64 {
    num::exp(-x * x / (2.0 * MEMBERSHIP_SIGMA * MEMBERSHIP_SIGMA))
}

fn signed_activation(x: f64) -> f64 {
    let s = if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    };
    s * (1.0 - membership(x))
}

/// Multiplicative fuzzy adjustment `1 + Defuzzy(e, ec)`.
pub fn fuzzy_factor(cfg: &ControllerConfig, e: f64, ec: f64) -> f64 {
    let e_hat = (e.clamp(-cfg.phi, cfg.phi)) / cfg.phi;
    let ec_hat = (ec.clamp(-cfg.phi, cfg.phi)) / cfg.phi;
    let defuzzy = cfg.kappa * (signed_activation(e_hat) + signed_activation(ec_hat)) / 2.0;
    1.0 + defuzzy
}

/// Fuzzy gain scheduling: clamps `(e, ec)` into the universe, evaluates the
/// Gaussian membership, and scales each base gain by the same smooth signed
/// adjustment.
pub fn fuzzy_adjust(cfg: &ControllerConfig, e: f64, ec: f64) -> (f64, f64, f64) {
    let f = fuzzy_factor(cfg, e, ec);
    (cfg.kp * f, cfg.ki * f, cfg.kd * f)
}

/// A controller transfer function; `linearized_fuzzy` marks the fuzzy PID,
/// whose gains vary at runtime, linearized here at its base gains.
#[derive(Debug, Clone)]
pub struct ControllerTf {
    pub tf: TransferFunction,
    pub linearized_fuzzy: bool,
}

/// Continuous-time transfer function of each rule, with the momentum factors
/// entering through their logarithms:
///
/// - SGD: `r`
/// - SGDM: `r + (r/s) * 1/(s - ln alpha)`
/// - PID: the SGDM form plus `kd * s`
/// - Adam (frozen adaption `M`): `kp/M + (ki/M) * 1/(s (s - ln beta1))`
/// - filtered SGD: `r * gain * B(s)/A(s)` with the filter taps read as
///   s-polynomial coefficients
/// - residual SGD: `r + r/s`
pub fn controller_tf(cfg: &ControllerConfig) -> Result<ControllerTf> {
    cfg.validate()?;
    let r = cfg.lr;
    let plain = |tf: TransferFunction| ControllerTf {
        tf,
        linearized_fuzzy: false,
    };
    match cfg.kind {
        ControllerKind::Sgd => Ok(plain(TransferFunction::constant(r))),
        ControllerKind::Sgdm => {
            let la = ln_momentum(cfg.momentum)?;
            Ok(plain(TransferFunction::new(
                vec![r, -r * la, r],
                vec![1.0, -la, 0.0],
            )?))
        }
        ControllerKind::Pid | ControllerKind::FuzzyPid => {
            let la = ln_momentum(cfg.momentum)?;
            let tf = TransferFunction::new(
                vec![cfg.kd, r - cfg.kd * la, -r * la, r],
                vec![1.0, -la, 0.0],
            )?;
            Ok(ControllerTf {
                tf,
                linearized_fuzzy: cfg.kind == ControllerKind::FuzzyPid,
            })
        }
        ControllerKind::Adam => {
            let lb = num::ln(cfg.beta1);
            let m = cfg.adam_m;
            if m == 0.0 {
                return Err(Error::InvalidInput(String::from(
                    "frozen adaption factor must be nonzero",
                )));
            }
            Ok(plain(TransferFunction::new(
                vec![cfg.kp / m, -cfg.kp * lb / m, cfg.ki / m],
                vec![1.0, -lb, 0.0],
            )?))
        }
        ControllerKind::LpfSgd | ControllerKind::HpfSgd => {
            let f = &cfg.filter;
            let num = poly::scale(&[f.b[0], f.b[1], f.b[2]], r * f.gain);
            Ok(plain(TransferFunction::new(
                num,
                vec![f.a[0], f.a[1], f.a[2]],
            )?))
        }
        ControllerKind::RsSgd => Ok(plain(TransferFunction::new(vec![r, r], vec![1.0, 0.0])?)),
    }
}

fn ln_momentum(alpha: f64) -> Result<f64> {
    if alpha <= 0.0 {
        return Err(Error::InvalidInput(String::from(
            "momentum must be positive to form the transfer function",
        )));
    }
    Ok(num::ln(alpha))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(ctrl: &mut Controller, g: f64) -> f64 {
        ctrl.step(&[g]).unwrap()[0]
    }

    #[test]
    fn sgd_step_is_scaled_gradient() {
        let cfg = ControllerConfig::new(ControllerKind::Sgd).with_lr(0.1);
        let mut ctrl = Controller::new(cfg, 1).unwrap();
        assert_eq!(scalar(&mut ctrl, 2.0), -0.2);
    }

    #[test]
    fn sgdm_hand_iteration() {
        let mut cfg = ControllerConfig::new(ControllerKind::Sgdm).with_lr(0.1);
        cfg.momentum = 0.9;
        let mut ctrl = Controller::new(cfg, 1).unwrap();
        let d1 = scalar(&mut ctrl, 1.0);
        let d2 = scalar(&mut ctrl, 1.0);
        assert!((d1 + 0.1).abs() < 1e-15);
        assert!((d2 + 0.19).abs() < 1e-15);
    }

    #[test]
    fn adam_first_step_is_bias_corrected() {
        let cfg = ControllerConfig::new(ControllerKind::Adam);
        let mut ctrl = Controller::new(cfg, 1).unwrap();
        let d = scalar(&mut ctrl, 1.0);
        assert!((d + 0.001 / (1.0 + 1e-8)).abs() < 1e-15, "d = {d}");
    }

    #[test]
    fn adam_adaption_matches_brute_force_sums() {
        let cfg = ControllerConfig::new(ControllerKind::Adam);
        let (b1, b2, eps) = (cfg.beta1, cfg.beta2, cfg.epsilon);
        let mut ctrl = Controller::new(cfg, 1).unwrap();
        let grads = [1.0, -0.5, 0.25, 2.0, -1.5, 0.1];
        for (t, &g) in grads.iter().enumerate() {
            ctrl.step(&[g]).unwrap();
            let t1 = t + 1;
            // Exact running sums for the adaption factor.
            let num: f64 = grads[..t1]
                .iter()
                .enumerate()
                .map(|(i, &gi)| num::powi(b2, (t - i) as i32) * gi * gi)
                .sum();
            let den: f64 = (1..=t1).map(|i| num::powi(b2, i as i32 - 1)).sum();
            let scale: f64 = (1..=t1).map(|i| num::powi(b1, i as i32 - 1)).sum();
            let want = 1.0 / (num::sqrt(num / den) + eps) / scale;
            let got = ctrl.adam_adaption(0).unwrap();
            assert!(
                (want - got).abs() <= 1e-12 * want.abs(),
                "t={t1}: {want} vs {got}"
            );
        }
    }

    #[test]
    fn rs_sgd_adds_constant_term() {
        let cfg = ControllerConfig::new(ControllerKind::RsSgd).with_lr(0.02);
        let mut ctrl = Controller::new(cfg, 1).unwrap();
        let d = scalar(&mut ctrl, 0.0);
        assert!((d + 0.02).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_finite_gradient() {
        let cfg = ControllerConfig::new(ControllerKind::Sgd);
        let mut ctrl = Controller::new(cfg, 3).unwrap();
        let err = ctrl.step(&[0.0, f64::NAN, 1.0]).unwrap_err();
        assert_eq!(err, Error::NonFinite { index: 1 });
    }

    #[test]
    fn rejects_shape_mismatch() {
        let cfg = ControllerConfig::new(ControllerKind::Sgd);
        let mut ctrl = Controller::new(cfg, 2).unwrap();
        assert!(matches!(
            ctrl.step(&[1.0]),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn fuzzy_adjust_is_identity_at_zero_error() {
        let cfg = ControllerConfig::new(ControllerKind::FuzzyPid);
        let (kp, ki, kd) = fuzzy_adjust(&cfg, 0.0, 0.0);
        assert_eq!((kp, ki, kd), (cfg.kp, cfg.ki, cfg.kd));
    }

    #[test]
    fn fuzzy_adjust_saturated_positive() {
        let cfg = ControllerConfig::new(ControllerKind::FuzzyPid);
        let (kp, _, _) = fuzzy_adjust(&cfg, cfg.phi, cfg.phi);
        let expected = 1.0 + 0.1 * (1.0 - num::exp(-4.5));
        assert!((kp - expected * cfg.kp).abs() < 1e-12, "kp = {kp}");
        assert!((kp / cfg.kp - 1.09889).abs() < 1e-5);
    }

    #[test]
    fn fuzzy_strength_zero_is_plain_pid() {
        let mut cfg = ControllerConfig::new(ControllerKind::FuzzyPid);
        cfg.kappa = 0.0;
        for (e, ec) in [(0.5, -0.1), (-3.0, 2.0), (0.01, 0.005)] {
            let (kp, ki, kd) = fuzzy_adjust(&cfg, e, ec);
            assert_eq!((kp, ki, kd), (cfg.kp, cfg.ki, cfg.kd));
        }
    }

    #[test]
    fn filter_constructor_normalizes_leading_tap() {
        let f = IirFilter::new(1.0, [2.0, 0.0, 0.0], [2.0, 1.0, 0.5]).unwrap();
        assert_eq!(f.a, [1.0, 0.5, 0.25]);
        assert_eq!(f.gain, 0.5);
        assert!(IirFilter::new(1.0, [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]).is_err());
    }

    #[test]
    fn config_validation_rejects_bad_fields() {
        let mut cfg = ControllerConfig::new(ControllerKind::Sgd);
        cfg.lr = 0.0;
        assert!(cfg.validate().is_err());
        let mut cfg = ControllerConfig::new(ControllerKind::Sgdm);
        cfg.momentum = 1.5;
        assert!(cfg.validate().is_err());
        let mut cfg = ControllerConfig::new(ControllerKind::Adam);
        cfg.beta2 = 1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = ControllerConfig::new(ControllerKind::FuzzyPid);
        cfg.phi = 0.0;
        assert!(cfg.validate().is_err());
        let mut cfg = ControllerConfig::new(ControllerKind::Pid);
        cfg.kd = -1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn fuzzy_step_updates_effective_gains() {
        let cfg = ControllerConfig::new(ControllerKind::FuzzyPid);
        let (kp, ki, kd) = (cfg.kp, cfg.ki, cfg.kd);
        let mut ctrl = Controller::new(cfg, 1).unwrap();
        assert_eq!(ctrl.effective_gains(), (kp, ki, kd));
        // Large negative gradient saturates both fuzzy inputs positive on
        // the first step, raising all three gains by the same factor.
        ctrl.step(&[-5.0]).unwrap();
        let (ekp, eki, ekd) = ctrl.effective_gains();
        let factor = 1.0 + 0.1 * (1.0 - num::exp(-4.5));
        assert!((ekp - kp * factor).abs() < 1e-12);
        assert!((eki - ki * factor).abs() < 1e-12);
        assert!((ekd - kd * factor).abs() < 1e-12);
    }

    #[test]
    fn lpf_first_output_is_gain() {
        let filter = IirFilter::low_pass();
        let mut st = IirState::default();
        assert!((filter.step(&mut st, 1.0) - 0.49968).abs() < 1e-12);
    }

    #[test]
    fn iir_zero_input_zero_output() {
        let filter = IirFilter::high_pass();
        let mut st = IirState::default();
        for _ in 0..50 {
            assert_eq!(filter.step(&mut st, 0.0), 0.0);
        }
    }

    #[test]
    fn iir_matches_convolution_oracle() {
        // Impulse response from the recurrence, then convolution against a
        // random input must reproduce the filter output (linearity).
        let filter = IirFilter::low_pass();
        let mut st = IirState::default();
        let mut h = Vec::with_capacity(100);
        for t in 0..100 {
            h.push(filter.step(&mut st, if t == 0 { 1.0 } else { 0.0 }));
        }
        // Same impulse response expanded analytically: the output taps
        // (1, 0, -1) feed y[t-2] straight back, so
        //   h[0] = G b0, h[1] = G b1, h[2] = G (b0 + b2),
        //   and the tail alternates h[2], h[1].
        let g = filter.gain;
        for (t, &ht) in h.iter().enumerate() {
            let want = match t {
                0 => g * filter.b[0],
                1 => g * filter.b[1],
                t if t % 2 == 0 => g * (filter.b[0] + filter.b[2]),
                _ => g * filter.b[1],
            };
            assert!((ht - want).abs() < 1e-12, "h[{t}] = {ht}, want {want}");
        }

        let mut rng = crate::rng::Rng::new(11);
        let xs: Vec<f64> = (0..100).map(|_| rng.uniform() * 2.0 - 1.0).collect();
        let mut st = IirState::default();
        for t in 0..xs.len() {
            let direct = filter.step(&mut st, xs[t]);
            let convolved: f64 = (0..=t).map(|k| h[k] * xs[t - k]).sum();
            assert!((direct - convolved).abs() < 1e-9, "t = {t}");
        }
    }

    #[test]
    fn lpf_hpf_coefficient_relationship() {
        let lp = IirFilter::low_pass();
        let hp = IirFilter::high_pass();
        assert_eq!(lp.gain, hp.gain);
        assert_eq!(lp.a, hp.a);
        assert_eq!(lp.b[0], hp.b[0]);
        assert_eq!(lp.b[2], hp.b[2]);
        assert_eq!(lp.b[1], -hp.b[1]);
    }

    #[test]
    fn controller_tf_sgd_is_constant() {
        let cfg = ControllerConfig::new(ControllerKind::Sgd);
        let ctf = controller_tf(&cfg).unwrap();
        assert_eq!(ctf.tf.num, vec![0.02]);
        assert_eq!(ctf.tf.den, vec![1.0]);
        assert!(!ctf.linearized_fuzzy);
    }

    #[test]
    fn controller_tf_sgdm_uses_log_momentum() {
        let cfg = ControllerConfig::new(ControllerKind::Sgdm);
        let ctf = controller_tf(&cfg).unwrap();
        let la = num::ln(0.9);
        assert!((la + 0.10536).abs() < 1e-5);
        assert_eq!(ctf.tf.num, vec![0.02, -0.02 * la, 0.02]);
        assert_eq!(ctf.tf.den, vec![1.0, -la, 0.0]);
    }

    #[test]
    fn controller_tf_rs_sgd() {
        let cfg = ControllerConfig::new(ControllerKind::RsSgd);
        let ctf = controller_tf(&cfg).unwrap();
        assert_eq!(ctf.tf.num, vec![0.02, 0.02]);
        assert_eq!(ctf.tf.den, vec![1.0, 0.0]);
    }

    #[test]
    fn controller_tf_fuzzy_is_flagged() {
        let cfg = ControllerConfig::new(ControllerKind::FuzzyPid);
        let ctf = controller_tf(&cfg).unwrap();
        assert!(ctf.linearized_fuzzy);
        let pid = controller_tf(&ControllerConfig::new(ControllerKind::Pid)).unwrap();
        assert_eq!(ctf.tf, pid.tf);
    }

    #[test]
    fn reduction_sgdm_alpha_zero_is_sgd() {
        let mut rng = crate::rng::Rng::new(5);
        let mut cfg = ControllerConfig::new(ControllerKind::Sgdm);
        cfg.momentum = 0.0;
        let mut sgdm = Controller::new(cfg, 1).unwrap();
        let mut sgd = Controller::new(ControllerConfig::new(ControllerKind::Sgd), 1).unwrap();
        for _ in 0..1000 {
            let g = rng.normal();
            assert_eq!(scalar(&mut sgdm, g), scalar(&mut sgd, g));
        }
    }

    #[test]
    fn reduction_fuzzy_kappa_zero_is_pid() {
        let mut rng = crate::rng::Rng::new(6);
        let mut cfg = ControllerConfig::new(ControllerKind::FuzzyPid);
        cfg.kappa = 0.0;
        let mut fuzzy = Controller::new(cfg, 1).unwrap();
        let mut pid = Controller::new(ControllerConfig::new(ControllerKind::Pid), 1).unwrap();
        for _ in 0..1000 {
            let g = rng.normal();
            assert_eq!(scalar(&mut fuzzy, g), scalar(&mut pid, g));
        }
    }

    #[test]
    fn reduction_pid_without_derivative_is_sgdm() {
        let mut rng = crate::rng::Rng::new(7);
        let mut pid_cfg = ControllerConfig::new(ControllerKind::Pid);
        pid_cfg.kd = 0.0;
        pid_cfg.momentum = 1.0;
        let mut sgdm_cfg = ControllerConfig::new(ControllerKind::Sgdm);
        sgdm_cfg.momentum = 1.0;
        let mut pid = Controller::new(pid_cfg, 1).unwrap();
        let mut sgdm = Controller::new(sgdm_cfg, 1).unwrap();
        for _ in 0..1000 {
            let g = rng.normal();
            assert_eq!(scalar(&mut pid, g), scalar(&mut sgdm, g));
        }
    }

    #[test]
    fn adam_update_magnitude_is_bounded() {
        // Steady gradient streams: the bias-corrected ratio never exceeds 1,
        // so |delta| <= lr at any scale or sign.
        for g in [0.3, -0.3, 5.0, -5.0, 1e3, 1e-2] {
            let cfg = ControllerConfig::new(ControllerKind::Adam);
            let lr = cfg.lr;
            let mut ctrl = Controller::new(cfg, 1).unwrap();
            for _ in 0..500 {
                let d = scalar(&mut ctrl, g);
                assert!(
                    d.abs() <= lr * (1.0 + 1e-6),
                    "g = {g}: |delta| = {}",
                    d.abs()
                );
            }
        }
        // Varying same-sign gradients obey the general (1-b1)/sqrt(1-b2)
        // step bound instead.
        let cfg = ControllerConfig::new(ControllerKind::Adam);
        let bound = cfg.lr * (1.0 - cfg.beta1) / num::sqrt(1.0 - cfg.beta2) * (1.0 + 1e-6);
        let mut ctrl = Controller::new(cfg, 1).unwrap();
        let mut rng = crate::rng::Rng::new(8);
        for _ in 0..500 {
            let g = 0.1 + rng.uniform() * 5.0;
            let d = scalar(&mut ctrl, g);
            assert!(d.abs() <= bound, "|delta| = {}", d.abs());
        }
    }

    #[test]
    fn sgd_scales_linearly_adam_is_scale_free() {
        let mut rng = crate::rng::Rng::new(9);
        let gs: Vec<f64> = (0..200).map(|_| 1.0 + rng.uniform() * 3.0).collect();

        let mut sgd_a = Controller::new(ControllerConfig::new(ControllerKind::Sgd), 1).unwrap();
        let mut sgd_b = Controller::new(ControllerConfig::new(ControllerKind::Sgd), 1).unwrap();
        for &g in &gs {
            assert_eq!(2.0 * scalar(&mut sgd_a, g), scalar(&mut sgd_b, 2.0 * g));
        }

        let mut adam_a = Controller::new(ControllerConfig::new(ControllerKind::Adam), 1).unwrap();
        let mut adam_b = Controller::new(ControllerConfig::new(ControllerKind::Adam), 1).unwrap();
        let c = 7.5;
        for &g in &gs {
            let da = scalar(&mut adam_a, g);
            let db = scalar(&mut adam_b, c * g);
            assert!((da - db).abs() < 1e-6, "{da} vs {db}");
        }
    }
}
