//! Step-response and classification metrics, plus deterministic SVG rendering.
//!
//! The same figures are extracted from simulated loop responses and from
//! empirical training curves, which is what lets the two be compared by rank
//! correlation.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fmt::fmt_g;
use crate::lti::TimeSeries;
use crate::nn::TrainCurve;
use crate::num;

/// Step-response figures. Times are in trace time units (`dt * samples`).
///
/// The final value is the mean of the last 5% of samples. Overshoot compares
/// the global peak against the peak of that settled tail, so monotone
/// approaches report exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct StepMetrics {
    /// 10% -> 90% crossing time of the final value.
    pub rise_time: f64,
    /// Time of the global peak.
    pub peak_time: f64,
    /// Peak exceedance above the settled level, percent of the final value.
    pub overshoot_pct: f64,
    /// Last exit of the +/-2% band around the final value.
    pub settling_time: f64,
    /// `|target - final|`.
    pub steady_state_error: f64,
    pub final_value: f64,
    /// False when the trace never leaves zero or is still outside the
    /// settling band at the end of the horizon.
    pub settled: bool,
}

/// Extracts [`StepMetrics`] from a trace. A trace stuck at zero against a
/// nonzero target is reported unsettled rather than as an error.
pub fn step_metrics(trace: &TimeSeries, target: f64) -> Result<StepMetrics> {
    let n = trace.len();
    if n < 3 {
        return Err(Error::InvalidInput(format!(
            "trace too short for metrics: {n} samples"
        )));
    }
    let y = &trace.values;
    let tail_len = ((n as f64 * 0.05) as usize).max(1);
    let tail = &y[n - tail_len..];
    let final_value = tail.iter().sum::<f64>() / tail_len as f64;
    let scale = y.iter().fold(0.0f64, |m, &v| m.max(v.abs()));

    if final_value.abs() <= 1e-9 * scale.max(1e-12) || scale == 0.0 {
        return Ok(StepMetrics {
            rise_time: 0.0,
            peak_time: 0.0,
            overshoot_pct: 0.0,
            settling_time: 0.0,
            steady_state_error: (target - final_value).abs(),
            final_value,
            settled: false,
        });
    }

    // Work in units of the final value so falling responses are handled the
    // same way as rising ones.
    let sign = if final_value < 0.0 { -1.0 } else { 1.0 };
    let f = final_value.abs();
    let v: Vec<f64> = y.iter().map(|&x| x * sign).collect();

    let t10 = v.iter().position(|&x| x >= 0.1 * f);
    let t90 = v.iter().position(|&x| x >= 0.9 * f);
    let rise_time = match (t10, t90) {
        (Some(a), Some(b)) if b >= a => (b - a) as f64 * trace.dt,
        _ => f64::INFINITY,
    };

    let (peak_idx, peak) =
        v.iter()
            .enumerate()
            .fold((0usize, f64::NEG_INFINITY), |(bi, bv), (i, &x)| {
                if x > bv {
                    (i, x)
                } else {
                    (bi, bv)
                }
            });
    let tail_peak = v[n - tail_len..]
        .iter()
        .fold(f64::NEG_INFINITY, |m, &x| m.max(x));
    let overshoot_pct = ((peak - tail_peak) / f * 100.0).max(0.0);

    let band = 0.02 * f;
    let last_exit = v.iter().rposition(|&x| (x - f).abs() > band);
    let (settling_time, settled_band) = match last_exit {
        None => (0.0, true),
        Some(i) if i + 1 < n => ((i + 1) as f64 * trace.dt, true),
        Some(i) => (i as f64 * trace.dt, false),
    };

    Ok(StepMetrics {
        rise_time,
        peak_time: peak_idx as f64 * trace.dt,
        overshoot_pct,
        settling_time,
        steady_state_error: (target - final_value).abs(),
        final_value,
        settled: settled_band && rise_time.is_finite(),
    })
}

/// Fraction of predictions matching labels.
pub fn accuracy(preds: &[usize], labels: &[usize]) -> Result<f64> {
    if preds.is_empty() || preds.len() != labels.len() {
        return Err(Error::InvalidInput(format!(
            "need equal, non-empty prediction/label lists (got {} / {})",
            preds.len(),
            labels.len()
        )));
    }
    let correct = preds.iter().zip(labels).filter(|(p, l)| p == l).count();
    Ok(correct as f64 / preds.len() as f64)
}

/// Percent error: `100 - accuracy * 100`.
pub fn error_rate(preds: &[usize], labels: &[usize]) -> Result<f64> {
    Ok(100.0 - accuracy(preds, labels)? * 100.0)
}

/// Kendall rank correlation (tau-a; tied pairs count zero).
pub fn kendall_tau(a: &[f64], b: &[f64]) -> Result<f64> {
    let n = a.len();
    if n < 2 || b.len() != n {
        return Err(Error::InvalidInput(String::from(
            "rank correlation needs at least two paired entries",
        )));
    }
    let mut s = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let da = a[i] - a[j];
            let db = b[i] - b[j];
            let sa = if da > 0.0 {
                1.0
            } else if da < 0.0 {
                -1.0
            } else {
                0.0
            };
            let sb = if db > 0.0 {
                1.0
            } else if db < 0.0 {
                -1.0
            } else {
                0.0
            };
            s += sa * sb;
        }
    }
    Ok(s / (n * (n - 1) / 2) as f64)
}

/// One controller's simulated response paired with its training curve.
#[derive(Debug, Clone)]
pub struct ResponseCurvePair {
    pub label: String,
    pub response: TimeSeries,
    pub curve: TrainCurve,
}

#[derive(Debug, Clone)]
pub struct ConsistencyEntry {
    pub label: String,
    pub rise_time: f64,
    pub epochs_to_target: f64,
}

/// Rank agreement between simulated rise times and epochs-to-threshold.
#[derive(Debug, Clone)]
pub struct ConsistencyReport {
    pub entries: Vec<ConsistencyEntry>,
    pub tau: f64,
}

/// First epoch (1-based) whose test accuracy reaches `frac` of the run's own
/// final accuracy. Scale-free, so runs of different quality can be ranked.
pub fn epochs_to_fraction(curve: &TrainCurve, frac: f64) -> f64 {
    let last = match curve.test_acc.last() {
        Some(&v) => v,
        None => return f64::INFINITY,
    };
    let threshold = frac * last;
    curve
        .test_acc
        .iter()
        .position(|&a| a >= threshold)
        .map(|i| (i + 1) as f64)
        .unwrap_or(f64::INFINITY)
}

/// Orders controllers by simulated rise time and by epochs to 90% of final
/// test accuracy, reporting the Kendall tau between the two orderings.
pub fn compare_response_to_curve(pairs: &[ResponseCurvePair]) -> Result<ConsistencyReport> {
    if pairs.len() < 2 {
        return Err(Error::InvalidInput(String::from(
            "ordering comparison needs at least two controllers",
        )));
    }
    let mut entries = Vec::with_capacity(pairs.len());
    for pair in pairs {
        let metrics = step_metrics(&pair.response, 1.0)?;
        entries.push(ConsistencyEntry {
            label: pair.label.clone(),
            rise_time: metrics.rise_time,
            epochs_to_target: epochs_to_fraction(&pair.curve, 0.9),
        });
    }
    let rises: Vec<f64> = entries.iter().map(|e| e.rise_time).collect();
    let epochs: Vec<f64> = entries.iter().map(|e| e.epochs_to_target).collect();
    Ok(ConsistencyReport {
        tau: kendall_tau(&rises, &epochs)?,
        entries,
    })
}

/// Spectral power of a trace in a frequency band, `lo..hi` in cycles per
/// sample (Nyquist is 0.5). The mean is removed first. Direct DFT; traces
/// here are a few thousand samples.
pub fn band_power(series: &TimeSeries, lo: f64, hi: f64) -> f64 {
    let n = series.len();
    if n < 2 {
        return 0.0;
    }
    let mean = series.values.iter().sum::<f64>() / n as f64;
    let x: Vec<f64> = series.values.iter().map(|&v| v - mean).collect();
    let mut power = 0.0;
    for k in 1..=n / 2 {
        let freq = k as f64 / n as f64;
        if freq < lo || freq >= hi {
            continue;
        }
        let (mut re, mut im) = (0.0, 0.0);
        let w = -2.0 * core::f64::consts::PI * k as f64 / n as f64;
        for (t, &xt) in x.iter().enumerate() {
            let angle = w * t as f64;
            re += xt * num::cos(angle);
            im += xt * num::sin(angle);
        }
        power += (re * re + im * im) / (n as f64 * n as f64);
    }
    power
}

/// Windowed amplitude stability of a (nominally periodic) trace.
#[derive(Debug, Clone)]
pub struct DriftReport {
    pub window_amplitudes: Vec<f64>,
    /// max/min window amplitude over the inspected span.
    pub ratio: f64,
    pub passed: bool,
}

/// Checks that a trace keeps producing cycles of comparable amplitude: after
/// discarding the first quarter as transient, per-period peak-to-peak
/// amplitudes must stay within a factor of two of each other and must not
/// collapse below 5% of the overall span.
pub fn bounded_drift(series: &TimeSeries, period: usize) -> Result<DriftReport> {
    if period == 0 || series.len() < 2 * period {
        return Err(Error::InvalidInput(String::from(
            "drift check needs at least two full periods",
        )));
    }
    let start = series.len() / 4;
    let span = {
        let max = series
            .values
            .iter()
            .fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let min = series.values.iter().fold(f64::INFINITY, |m, &v| m.min(v));
        max - min
    };
    let mut amplitudes = Vec::new();
    let mut i = start;
    while i + period <= series.len() {
        let w = &series.values[i..i + period];
        let max = w.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let min = w.iter().fold(f64::INFINITY, |m, &v| m.min(v));
        amplitudes.push(max - min);
        i += period;
    }
    if amplitudes.len() < 2 {
        return Err(Error::InvalidInput(String::from(
            "drift check needs at least two windows after the transient",
        )));
    }
    let max = amplitudes.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let min = amplitudes.iter().fold(f64::INFINITY, |m, &v| m.min(v));
    let ratio = if min > 0.0 { max / min } else { f64::INFINITY };
    let passed = ratio <= 2.0 && min >= 0.05 * span && span.is_finite() && span > 0.0;
    Ok(DriftReport {
        window_amplitudes: amplitudes,
        ratio,
        passed,
    })
}

const SVG_WIDTH: f64 = 800.0;
const SVG_HEIGHT: f64 = 500.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

/// Renders traces as a standalone SVG document (fixed 800x500 canvas, axes,
/// one polyline per trace, legend in input order). Output bytes are a pure
/// function of the input.
pub fn render_svg(traces: &[TimeSeries]) -> Result<String> {
    if traces.is_empty() {
        return Err(Error::InvalidInput(String::from("nothing to plot")));
    }
    let (ml, mr, mt, mb) = (60.0, 150.0, 20.0, 40.0);
    let (pw, ph) = (SVG_WIDTH - ml - mr, SVG_HEIGHT - mt - mb);

    let mut tmax = f64::MIN;
    let (mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY);
    for tr in traces {
        tmax = tmax.max(tr.time(tr.len() - 1));
        for &v in &tr.values {
            ymin = ymin.min(v);
            ymax = ymax.max(v);
        }
    }
    if tmax <= 0.0 {
        tmax = 1.0;
    }
    if (ymax - ymin).abs() < 1e-12 {
        ymin -= 1.0;
        ymax += 1.0;
    }

    let x_of = |t: f64| ml + t / tmax * pw;
    let y_of = |v: f64| mt + (1.0 - (v - ymin) / (ymax - ymin)) * ph;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" \
         width=\"{SVG_WIDTH}\" height=\"{SVG_HEIGHT}\" \
         viewBox=\"0 0 {SVG_WIDTH} {SVG_HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    // Axes.
    svg.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        mt + ph,
        ml + pw,
        mt + ph
    ));
    svg.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{mt}\" x2=\"{ml}\" y2=\"{}\" stroke=\"black\"/>\n",
        mt + ph
    ));
    for (t, anchor) in [(0.0, "start"), (tmax, "end")] {
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"{anchor}\">{}</text>\n",
            x_of(t),
            mt + ph + 16.0,
            fmt_g(t, 6)
        ));
    }
    for v in [ymin, ymax] {
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"end\">{}</text>\n",
            ml - 4.0,
            y_of(v) + 4.0,
            fmt_g(v, 6)
        ));
    }
    for (idx, tr) in traces.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let mut points = String::new();
        for (i, &v) in tr.values.iter().enumerate() {
            if i > 0 {
                points.push(' ');
            }
            points.push_str(&format!("{:.2},{:.2}", x_of(tr.time(i)), y_of(v)));
        }
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{points}\"/>\n"
        ));
    }
    for (idx, tr) in traces.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let y = mt + 14.0 + idx as f64 * 18.0;
        let x = ml + pw + 10.0;
        svg.push_str(&format!(
            "<line x1=\"{x:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"{color}\" stroke-width=\"3\"/>\n",
            x + 18.0
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\">{}</text>\n",
            x + 24.0,
            y + 4.0,
            escape_xml(&tr.label)
        ));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn escape_xml(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn series(dt: f64, values: Vec<f64>) -> TimeSeries {
        TimeSeries::new(dt, values, "test").unwrap()
    }

    #[test]
    fn rise_time_of_first_order_response() {
        let dt = 1e-3;
        let n = 10_000;
        let values: Vec<f64> = (0..=n).map(|i| 1.0 - num::exp(-(i as f64) * dt)).collect();
        let m = step_metrics(&series(dt, values), 1.0).unwrap();
        assert!(
            (m.rise_time - num::ln(9.0)).abs() < 0.01,
            "rise = {}",
            m.rise_time
        );
        assert_eq!(m.overshoot_pct, 0.0);
        assert!(m.settled);
    }

    #[test]
    fn overshoot_of_underdamped_second_order() {
        // zeta = 0.1, wn = 1: peak = 1 + exp(-zeta pi / sqrt(1 - zeta^2)).
        let (zeta, dt) = (0.1, 1e-3);
        let wd = num::sqrt(1.0 - zeta * zeta);
        let n = 100_000;
        let values: Vec<f64> = (0..=n)
            .map(|i| {
                let t = i as f64 * dt;
                let phase = num::cos(wd * t) + zeta / wd * num::sin(wd * t);
                1.0 - num::exp(-zeta * t) * phase
            })
            .collect();
        let m = step_metrics(&series(dt, values), 1.0).unwrap();
        let expected = num::exp(-zeta * core::f64::consts::PI / wd) * 100.0;
        assert!(
            (m.overshoot_pct - expected).abs() < 0.5,
            "overshoot = {}",
            m.overshoot_pct
        );
    }

    #[test]
    fn constant_trace_at_target() {
        let m = step_metrics(&series(1.0, vec![2.0; 50]), 2.0).unwrap();
        assert_eq!(m.rise_time, 0.0);
        assert_eq!(m.overshoot_pct, 0.0);
        assert_eq!(m.settling_time, 0.0);
        assert_eq!(m.steady_state_error, 0.0);
        assert!(m.settled);
    }

    #[test]
    fn zero_trace_is_unsettled_not_error() {
        let m = step_metrics(&series(1.0, vec![0.0; 50]), 1.0).unwrap();
        assert!(!m.settled);
        assert_eq!(m.steady_state_error, 1.0);
    }

    #[test]
    fn short_trace_errors() {
        assert!(step_metrics(&series(1.0, vec![0.0, 1.0]), 1.0).is_err());
    }

    #[test]
    fn accuracy_cases() {
        assert_eq!(accuracy(&[1, 2, 3], &[1, 2, 3]).unwrap(), 1.0);
        assert_eq!(accuracy(&[0, 0, 0], &[1, 2, 3]).unwrap(), 0.0);
        let acc = accuracy(
            &[1, 1, 1, 1, 1, 1, 1, 1, 1, 0],
            &[1, 1, 1, 1, 1, 1, 1, 1, 1, 1],
        )
        .unwrap();
        assert!((acc - 0.9).abs() < 1e-12);
        assert!(accuracy(&[], &[]).is_err());
        assert!((error_rate(&[0, 0], &[0, 1]).unwrap() - 50.0).abs() < 1e-12);
    }

    #[test]
    fn kendall_identical_and_reversed() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        let b = [10.0, 20.0, 30.0, 40.0, 50.0];
        let c = [5.0, 4.0, 3.0, 2.0, 1.0];
        assert_eq!(kendall_tau(&a, &b).unwrap(), 1.0);
        assert_eq!(kendall_tau(&a, &c).unwrap(), -1.0);
        assert!(kendall_tau(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn response_curve_comparison_orders_agree() {
        // Slow riser paired with slow learner and vice versa -> tau = 1;
        // swapping the curves reverses it.
        let make = |rise_scale: f64| {
            let n = 400;
            let values: Vec<f64> = (0..n)
                .map(|i| 1.0 - (-(i as f64) / rise_scale).exp())
                .collect();
            TimeSeries::new(1.0, values, "sim").unwrap()
        };
        let curve = |epochs_to: usize| {
            let mut c = TrainCurve::new();
            for e in 1..=10 {
                let acc = if e >= epochs_to { 0.95 } else { 0.2 };
                c.train_loss.push(1.0);
                c.train_acc.push(acc);
                c.test_acc.push(acc);
            }
            c
        };
        let fast = make(5.0);
        let slow = make(40.0);
        let agree = [
            ResponseCurvePair {
                label: "fast".into(),
                response: fast.clone(),
                curve: curve(2),
            },
            ResponseCurvePair {
                label: "slow".into(),
                response: slow.clone(),
                curve: curve(8),
            },
        ];
        assert_eq!(compare_response_to_curve(&agree).unwrap().tau, 1.0);
        let disagree = [
            ResponseCurvePair {
                label: "fast".into(),
                response: fast,
                curve: curve(8),
            },
            ResponseCurvePair {
                label: "slow".into(),
                response: slow,
                curve: curve(2),
            },
        ];
        assert_eq!(compare_response_to_curve(&disagree).unwrap().tau, -1.0);
        assert!(compare_response_to_curve(&disagree[..1]).is_err());
    }

    #[test]
    fn accuracy_is_order_invariant() {
        let preds = [1usize, 2, 0, 1, 1, 2];
        let labels = [1usize, 0, 0, 1, 2, 2];
        let base = accuracy(&preds, &labels).unwrap();
        let perm = [5usize, 3, 0, 4, 2, 1];
        let p2: Vec<usize> = perm.iter().map(|&i| preds[i]).collect();
        let l2: Vec<usize> = perm.iter().map(|&i| labels[i]).collect();
        assert_eq!(base, accuracy(&p2, &l2).unwrap());
    }

    #[test]
    fn band_power_detects_high_frequency() {
        let n = 512;
        let slow: Vec<f64> = (0..n)
            .map(|t| num::sin(2.0 * core::f64::consts::PI * t as f64 * 0.01))
            .collect();
        let fast: Vec<f64> = (0..n)
            .map(|t| num::sin(2.0 * core::f64::consts::PI * t as f64 * 0.3))
            .collect();
        let p_slow = band_power(&series(1.0, slow), 0.125, 0.5);
        let p_fast = band_power(&series(1.0, fast), 0.125, 0.5);
        assert!(p_fast > 100.0 * p_slow.max(1e-12), "{p_fast} vs {p_slow}");
    }

    #[test]
    fn bounded_drift_passes_steady_sine_fails_decay() {
        let period = 50;
        let n = 1000;
        let steady: Vec<f64> = (0..n)
            .map(|t| num::sin(2.0 * core::f64::consts::PI * t as f64 / period as f64))
            .collect();
        let decaying: Vec<f64> = (0..n)
            .map(|t| {
                num::exp(-(t as f64) / 150.0)
                    * num::sin(2.0 * core::f64::consts::PI * t as f64 / period as f64)
            })
            .collect();
        assert!(bounded_drift(&series(1.0, steady), period).unwrap().passed);
        assert!(
            !bounded_drift(&series(1.0, decaying), period)
                .unwrap()
                .passed
        );
    }

    #[test]
    fn svg_one_polyline_per_trace() {
        let svg = render_svg(&[series(1.0, vec![1.0; 10])]).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 1);
        let two = render_svg(&[
            series(1.0, vec![1.0; 10]),
            TimeSeries::new(1.0, vec![0.0; 10], "other").unwrap(),
        ])
        .unwrap();
        assert_eq!(two.matches("<polyline").count(), 2);
        // Legend lists labels in input order.
        let first = two.find(">test<").unwrap();
        let second = two.find(">other<").unwrap();
        assert!(first < second);
    }

    #[test]
    fn svg_is_deterministic() {
        let traces = [series(0.5, vec![0.0, 0.3, 0.9, 1.0, 1.0])];
        assert_eq!(render_svg(&traces).unwrap(), render_svg(&traces).unwrap());
    }
}
