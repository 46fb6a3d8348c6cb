//! Discrete closed-loop scalar simulations: a single tracked parameter driven
//! by a controller, in the wirings that correspond to backprop training,
//! forward-forward training, a two-player GAN, and the four-signal CycleGAN.
//!
//! All loops start from zero state, use the squared-error convention
//! `gradient = -(reference - signal)`, and run for a fixed iteration count
//! with `dt = 1` per iteration.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::controllers::{Controller, ControllerConfig};
use crate::error::{Error, Result};
use crate::lti::TimeSeries;
use crate::num;

/// Reference signal, sampled per iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LoopSource {
    Step {
        amplitude: f64,
    },
    /// `amplitude * sin(2 pi t / period)`.
    Sine {
        amplitude: f64,
        period: usize,
    },
}

impl LoopSource {
    pub fn value(&self, t: usize) -> f64 {
        match *self {
            LoopSource::Step { amplitude } => amplitude,
            LoopSource::Sine { amplitude, period } => {
                amplitude * num::sin(2.0 * core::f64::consts::PI * t as f64 / period as f64)
            }
        }
    }
}

/// Which discrete wiring to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoopKind {
    OneNode,
    Ffnn,
    Gan,
    CycleGan,
}

/// Configuration shared by all loop kinds.
#[derive(Debug, Clone)]
pub struct LoopConfig {
    pub controller: ControllerConfig,
    pub theta_star: f64,
    pub iterations: usize,
    pub source: LoopSource,
    /// Forward-forward positive portion.
    pub lambda: f64,
    /// Forward-forward threshold.
    pub th: f64,
}

impl LoopConfig {
    /// Defaults: unit target, 2000 iterations, sine period 200,
    /// `lambda = 0.5`, `th = 1`.
    pub fn new(controller: ControllerConfig) -> Self {
        LoopConfig {
            controller,
            theta_star: 1.0,
            iterations: 2000,
            source: LoopSource::Sine {
                amplitude: 1.0,
                period: 200,
            },
            lambda: 0.5,
            th: 1.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidInput(String::from(
                "need at least one iteration",
            )));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::InvalidInput(format!(
                "positive portion must be in [0, 1], got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

const DIVERGENCE_LIMIT: f64 = 1e6;

fn check(value: f64, at: usize, context: &'static str) -> Result<f64> {
    if !value.is_finite() || value.abs() > DIVERGENCE_LIMIT {
        return Err(Error::Diverged { at, context });
    }
    Ok(value)
}

/// Single tracked parameter under a step (or other) reference:
/// `theta <- theta + step(-e)`, `e = reference - theta`, starting at zero.
/// The trace includes the initial sample, so it has `iterations + 1` points.
pub fn one_node(cfg: &LoopConfig) -> Result<TimeSeries> {
    cfg.validate()?;
    let reference = match cfg.source {
        LoopSource::Step { .. } => LoopSource::Step {
            amplitude: cfg.theta_star,
        },
        sine => sine,
    };
    let mut ctrl = Controller::new(cfg.controller.clone(), 1)?;
    let mut theta = 0.0f64;
    let mut trace = Vec::with_capacity(cfg.iterations + 1);
    trace.push(theta);
    let mut delta = [0.0f64];
    for t in 0..cfg.iterations {
        let e = reference.value(t) - theta;
        ctrl.step_into(&[-e], &mut delta)?;
        theta = check(theta + delta[0], t, "one-node loop")?;
        trace.push(theta);
    }
    TimeSeries::new(1.0, trace, cfg.controller.kind.name())
}

/// Forward-forward node: the fixed point is `(2 lambda - 1) theta_star + th`.
pub fn ffnn_node(cfg: &LoopConfig) -> Result<TimeSeries> {
    cfg.validate()?;
    let target = (2.0 * cfg.lambda - 1.0) * cfg.theta_star + cfg.th;
    let mut ctrl = Controller::new(cfg.controller.clone(), 1)?;
    let mut theta = 0.0f64;
    let mut trace = Vec::with_capacity(cfg.iterations + 1);
    trace.push(theta);
    let mut delta = [0.0f64];
    for t in 0..cfg.iterations {
        let e = target - theta;
        ctrl.step_into(&[-e], &mut delta)?;
        theta = check(theta + delta[0], t, "forward-forward loop")?;
        trace.push(theta);
    }
    TimeSeries::new(1.0, trace, cfg.controller.kind.name())
}

/// Two-player loop: the generator chases the feedback error, the
/// discriminator is driven by the generator-weighted error. Update order per
/// iteration is error, then generator, then discriminator.
pub fn gan_loop(cfg: &LoopConfig) -> Result<(TimeSeries, TimeSeries)> {
    cfg.validate()?;
    let mut gen_ctrl = Controller::new(cfg.controller.clone(), 1)?;
    let mut dis_ctrl = Controller::new(cfg.controller.clone(), 1)?;
    let (mut g, mut d) = (0.0f64, 0.0f64);
    let mut gen_trace = Vec::with_capacity(cfg.iterations + 1);
    let mut dis_trace = Vec::with_capacity(cfg.iterations + 1);
    gen_trace.push(g);
    dis_trace.push(d);
    let mut delta = [0.0f64];
    for t in 0..cfg.iterations {
        let e = cfg.source.value(t) - d;
        gen_ctrl.step_into(&[-e], &mut delta)?;
        g = check(g + delta[0], t, "gan generator")?;
        dis_ctrl.step_into(&[-(g * e)], &mut delta)?;
        d = check(d + delta[0], t, "gan discriminator")?;
        gen_trace.push(g);
        dis_trace.push(d);
    }
    Ok((
        TimeSeries::new(1.0, gen_trace, "generator")?,
        TimeSeries::new(1.0, dis_trace, "discriminator")?,
    ))
}

/// Four-signal cycle loop sharing one summed error: two generators driven by
/// the error directly, two discriminators by their paired generator's
/// weighted error. Returns `[g_a, g_b, d_a, d_b]`.
pub fn cyclegan_loop(cfg: &LoopConfig) -> Result<[TimeSeries; 4]> {
    cfg.validate()?;
    let mut ctrl_ga = Controller::new(cfg.controller.clone(), 1)?;
    let mut ctrl_gb = Controller::new(cfg.controller.clone(), 1)?;
    let mut ctrl_da = Controller::new(cfg.controller.clone(), 1)?;
    let mut ctrl_db = Controller::new(cfg.controller.clone(), 1)?;
    let (mut g_a, mut g_b, mut d_a, mut d_b) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut traces: [Vec<f64>; 4] = [
        Vec::with_capacity(cfg.iterations + 1),
        Vec::with_capacity(cfg.iterations + 1),
        Vec::with_capacity(cfg.iterations + 1),
        Vec::with_capacity(cfg.iterations + 1),
    ];
    for (trace, value) in traces.iter_mut().zip([g_a, g_b, d_a, d_b]) {
        trace.push(value);
    }
    let mut delta = [0.0f64];
    for t in 0..cfg.iterations {
        let r = cfg.source.value(t);
        // Four bracketed error terms share one scalar error signal; the
        // generator product appears twice, as printed.
        let e = (r - d_a) + (r - d_b) + (r - g_a * g_b) + (r - g_b * g_a);
        ctrl_ga.step_into(&[-e], &mut delta)?;
        g_a = check(g_a + delta[0], t, "cycle generator a")?;
        ctrl_gb.step_into(&[-e], &mut delta)?;
        g_b = check(g_b + delta[0], t, "cycle generator b")?;
        ctrl_da.step_into(&[-(g_a * e)], &mut delta)?;
        d_a = check(d_a + delta[0], t, "cycle discriminator a")?;
        ctrl_db.step_into(&[-(g_b * e)], &mut delta)?;
        d_b = check(d_b + delta[0], t, "cycle discriminator b")?;
        traces[0].push(g_a);
        traces[1].push(g_b);
        traces[2].push(d_a);
        traces[3].push(d_b);
    }
    let [ta, tb, tc, td] = traces;
    Ok([
        TimeSeries::new(1.0, ta, "generator-a")?,
        TimeSeries::new(1.0, tb, "generator-b")?,
        TimeSeries::new(1.0, tc, "discriminator-a")?,
        TimeSeries::new(1.0, td, "discriminator-b")?,
    ])
}
