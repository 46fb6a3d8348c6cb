//! Minibatch backprop training with controller-driven parameter updates.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::controllers::{Controller, ControllerConfig};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::fmt::fmt_g;
use crate::nn::mlp::{backward, Mlp};
use crate::num;
use crate::rng::Rng;

/// Shared training hyperparameters. `lambda`/`th` only matter for the
/// forward-forward trainer.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub controller: ControllerConfig,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub label_smoothing: f64,
    pub lambda: f64,
    pub th: f64,
}

impl TrainConfig {
    pub fn new(controller: ControllerConfig) -> Self {
        TrainConfig {
            controller,
            epochs: 10,
            batch_size: 100,
            seed: 42,
            label_smoothing: 0.1,
            lambda: 0.5,
            th: 1.0,
        }
    }
}

/// Per-epoch training curve.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainCurve {
    pub train_loss: Vec<f64>,
    pub train_acc: Vec<f64>,
    pub test_acc: Vec<f64>,
}

impl TrainCurve {
    pub fn new() -> Self {
        TrainCurve {
            train_loss: Vec::new(),
            train_acc: Vec::new(),
            test_acc: Vec::new(),
        }
    }

    pub fn epochs(&self) -> usize {
        self.test_acc.len()
    }

    /// CSV with an `epoch,train_loss,train_acc,test_acc` header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,train_acc,test_acc\n");
        for i in 0..self.epochs() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                i + 1,
                fmt_g(self.train_loss[i], 9),
                fmt_g(self.train_acc[i], 9),
                fmt_g(self.test_acc[i], 9),
            ));
        }
        out
    }
}

impl Default for TrainCurve {
    fn default() -> Self {
        Self::new()
    }
}

/// Cross-entropy with label smoothing against softmax outputs. Returns the
/// mean loss and the gradient at the softmax pre-activation, already divided
/// by the batch size.
pub fn softmax_xent(
    probs: &[f64],
    labels: &[u8],
    classes: usize,
    smoothing: f64,
) -> (f64, Vec<f64>) {
    let n = labels.len();
    let mut delta = vec![0.0; probs.len()];
    let mut loss = 0.0;
    let off = smoothing / classes as f64;
    for (r, &label) in labels.iter().enumerate() {
        let row = &probs[r * classes..(r + 1) * classes];
        let drow = &mut delta[r * classes..(r + 1) * classes];
        for c in 0..classes {
            let q = off
                + if c == label as usize {
                    1.0 - smoothing
                } else {
                    0.0
                };
            loss -= q * num::ln(row[c].max(1e-300));
            drow[c] = (row[c] - q) / n as f64;
        }
    }
    (loss / n as f64, delta)
}

/// Binary cross-entropy against sigmoid outputs. Returns the mean loss and
/// the gradient at the sigmoid pre-activation, divided by the batch size.
pub fn bce(preds: &[f64], targets: &[f64]) -> (f64, Vec<f64>) {
    let n = preds.len();
    let mut delta = vec![0.0; n];
    let mut loss = 0.0;
    for i in 0..n {
        let (p, y) = (preds[i], targets[i]);
        loss -= y * num::ln(p.max(1e-300)) + (1.0 - y) * num::ln((1.0 - p).max(1e-300));
        delta[i] = (p - y) / n as f64;
    }
    (loss / n as f64, delta)
}

pub(crate) fn batch_to_f64(data: &Dataset, indices: &[usize]) -> (Vec<f64>, Vec<u8>) {
    let width = data.width();
    let mut images = Vec::with_capacity(indices.len() * width);
    let mut labels = Vec::with_capacity(indices.len());
    for &i in indices {
        images.extend(data.image(i).iter().map(|&p| p as f64));
        labels.push(data.label(i));
    }
    (images, labels)
}

pub(crate) fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Test-set accuracy of a classifier network.
pub fn evaluate(mlp: &Mlp, data: &Dataset) -> Result<f64> {
    let classes = mlp.output_width();
    let mut correct = 0usize;
    let chunk = 256;
    let mut i = 0;
    while i < data.len() {
        let hi = (i + chunk).min(data.len());
        let indices: Vec<usize> = (i..hi).collect();
        let (images, labels) = batch_to_f64(data, &indices);
        let pass = mlp.forward(&images)?;
        for (r, &label) in labels.iter().enumerate() {
            let row = &pass.output()[r * classes..(r + 1) * classes];
            correct += usize::from(argmax(row) == label as usize);
        }
        i = hi;
    }
    Ok(correct as f64 / data.len() as f64)
}

/// One controller per parameter tensor (a weight matrix or a bias vector).
pub(crate) fn controllers_for(mlp: &Mlp, cfg: &ControllerConfig) -> Result<Vec<Controller>> {
    let mut out = Vec::with_capacity(mlp.layers.len() * 2);
    for layer in &mlp.layers {
        out.push(Controller::new(cfg.clone(), layer.w.len())?);
        out.push(Controller::new(cfg.clone(), layer.b.len())?);
    }
    Ok(out)
}

/// Minibatch backprop with cross-entropy (label smoothing per config); every
/// parameter tensor is updated by its own controller instance. Records one
/// curve point per epoch; non-finite loss aborts with the offending epoch.
pub fn train_backprop(
    mlp: &mut Mlp,
    train: &Dataset,
    test: &Dataset,
    cfg: &TrainConfig,
) -> Result<TrainCurve> {
    if train.width() != mlp.input_width() {
        return Err(Error::ShapeMismatch {
            expected: mlp.input_width(),
            got: train.width(),
        });
    }
    if cfg.batch_size == 0 || cfg.epochs == 0 {
        return Err(Error::InvalidInput(String::from(
            "epochs and batch size must be nonzero",
        )));
    }
    let classes = mlp.output_width();
    let mut ctrls = controllers_for(mlp, &cfg.controller)?;
    let mut rng = Rng::new(cfg.seed);
    let mut indices: Vec<usize> = (0..train.len()).collect();
    let mut curve = TrainCurve::new();

    for epoch in 0..cfg.epochs {
        rng.shuffle(&mut indices);
        let mut epoch_loss = 0.0;
        let mut seen = 0usize;
        let mut correct = 0usize;

        for batch in indices.chunks(cfg.batch_size) {
            let (images, labels) = batch_to_f64(train, batch);
            let pass = mlp.forward(&images)?;
            let (loss, delta) = softmax_xent(pass.output(), &labels, classes, cfg.label_smoothing);
            if !loss.is_finite() {
                return Err(Error::Diverged {
                    at: epoch,
                    context: "training loss",
                });
            }
            epoch_loss += loss * labels.len() as f64;
            for (r, &label) in labels.iter().enumerate() {
                let row = &pass.output()[r * classes..(r + 1) * classes];
                correct += usize::from(argmax(row) == label as usize);
            }
            seen += labels.len();

            let bw = backward(mlp, &images, &pass, &delta)?;
            apply_updates(mlp, &bw.grads, &mut ctrls)?;
        }

        mlp.check_finite(epoch)?;
        curve.train_loss.push(epoch_loss / seen as f64);
        curve.train_acc.push(correct as f64 / seen as f64);
        curve.test_acc.push(evaluate(mlp, test)?);
    }
    Ok(curve)
}

pub(crate) fn apply_updates(
    mlp: &mut Mlp,
    grads: &[super::mlp::LayerGrads],
    ctrls: &mut [Controller],
) -> Result<()> {
    let mut scratch: Vec<f64> = Vec::new();
    for (l, layer) in mlp.layers.iter_mut().enumerate() {
        scratch.resize(layer.w.len(), 0.0);
        ctrls[2 * l].step_into(&grads[l].dw, &mut scratch[..layer.w.len()])?;
        for (w, d) in layer.w.iter_mut().zip(&scratch) {
            *w += d;
        }
        scratch.resize(layer.b.len().max(scratch.len()), 0.0);
        ctrls[2 * l + 1].step_into(&grads[l].db, &mut scratch[..layer.b.len()])?;
        for (b, d) in layer.b.iter_mut().zip(&scratch) {
            *b += d;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controllers::ControllerKind;
    use crate::data::{synthetic, SyntheticKind};
    use crate::nn::mlp::Activation;

    fn blob_sets() -> (Dataset, Dataset) {
        let train = synthetic(SyntheticKind::blobs(), 400, 10).unwrap();
        let test = synthetic(SyntheticKind::blobs(), 200, 11).unwrap();
        (train, test)
    }

    fn toy_net(seed: u64) -> Mlp {
        let mut rng = Rng::new(seed);
        Mlp::new(
            &[784, 16, 10],
            &[Activation::Relu, Activation::Softmax],
            &mut rng,
        )
        .unwrap()
    }

    #[test]
    fn backprop_learns_blobs() {
        let (train, test) = blob_sets();
        let mut mlp = toy_net(1);
        let mut cfg = TrainConfig::new(ControllerConfig::new(ControllerKind::Adam));
        cfg.epochs = 10;
        cfg.batch_size = 20;
        cfg.controller.lr = 0.01;
        let curve = train_backprop(&mut mlp, &train, &test, &cfg).unwrap();
        assert_eq!(curve.epochs(), 10);
        assert!(
            *curve.test_acc.last().unwrap() > 0.95,
            "final acc = {}",
            curve.test_acc.last().unwrap()
        );
    }

    #[test]
    fn training_is_bit_reproducible() {
        let (train, test) = blob_sets();
        let mut cfg = TrainConfig::new(ControllerConfig::new(ControllerKind::Sgdm));
        cfg.epochs = 3;
        let mut a = toy_net(2);
        let mut b = toy_net(2);
        let ca = train_backprop(&mut a, &train, &test, &cfg).unwrap();
        let cb = train_backprop(&mut b, &train, &test, &cfg).unwrap();
        assert_eq!(ca, cb);
        for (la, lb) in a.layers.iter().zip(&b.layers) {
            assert_eq!(la.w, lb.w);
            assert_eq!(la.b, lb.b);
        }
    }

    #[test]
    fn fuzzy_with_zero_strength_matches_pid_curves() {
        let (train, test) = blob_sets();
        let mut pid_cfg = TrainConfig::new(ControllerConfig::new(ControllerKind::Pid));
        pid_cfg.epochs = 3;
        let mut fuzzy_cfg = TrainConfig::new(ControllerConfig::new(ControllerKind::FuzzyPid));
        fuzzy_cfg.epochs = 3;
        fuzzy_cfg.controller.kappa = 0.0;
        let mut a = toy_net(3);
        let mut b = toy_net(3);
        let pid_curve = train_backprop(&mut a, &train, &test, &pid_cfg).unwrap();
        let fuzzy_curve = train_backprop(&mut b, &train, &test, &fuzzy_cfg).unwrap();
        assert_eq!(pid_curve, fuzzy_curve);
    }

    #[test]
    fn zero_net_balanced_labels_zero_bias_gradient() {
        // Zero weights give a uniform softmax; with labels balanced across
        // the batch the output-bias gradient cancels exactly.
        let mut rng = Rng::new(8);
        let mut mlp = Mlp::new(&[4, 3], &[Activation::Softmax], &mut rng).unwrap();
        for w in mlp.layers[0].w.iter_mut() {
            *w = 0.0;
        }
        let images: Vec<f64> = (0..12).map(|i| (i as f64 * 0.61).cos()).collect();
        let labels = [0u8, 1, 2];
        let pass = mlp.forward(&images).unwrap();
        let (_, delta) = softmax_xent(pass.output(), &labels, 3, 0.1);
        let bw = backward(&mlp, &images, &pass, &delta).unwrap();
        for &db in &bw.grads[0].db {
            assert!(db.abs() < 1e-12, "bias gradient {db}");
        }
    }

    #[test]
    fn smoothed_xent_gradient_sums_to_zero_rowwise() {
        // Softmax delta rows always sum to zero: probabilities and smoothed
        // targets both sum to one.
        let probs = [0.7, 0.2, 0.1, 0.25, 0.5, 0.25];
        let (_, delta) = softmax_xent(&probs, &[0, 2], 3, 0.1);
        for row in delta.chunks(3) {
            let s: f64 = row.iter().sum();
            assert!(s.abs() < 1e-12);
        }
    }

    #[test]
    fn duplicated_batch_leaves_mean_gradient_unchanged() {
        let mut rng = Rng::new(9);
        let mlp = Mlp::new(
            &[4, 6, 3],
            &[Activation::Tanh, Activation::Softmax],
            &mut rng,
        )
        .unwrap();
        let images: Vec<f64> = (0..8).map(|i| (i as f64 * 0.37).sin()).collect();
        let labels = [1u8, 2u8];
        let doubled: Vec<f64> = images.iter().chain(images.iter()).copied().collect();
        let labels2 = [1u8, 2u8, 1u8, 2u8];

        let pass = mlp.forward(&images).unwrap();
        let (_, delta) = softmax_xent(pass.output(), &labels, 3, 0.1);
        let bw = backward(&mlp, &images, &pass, &delta).unwrap();

        let pass2 = mlp.forward(&doubled).unwrap();
        let (_, delta2) = softmax_xent(pass2.output(), &labels2, 3, 0.1);
        let bw2 = backward(&mlp, &doubled, &pass2, &delta2).unwrap();

        for (a, b) in bw.grads.iter().zip(&bw2.grads) {
            for (x, y) in a.dw.iter().zip(&b.dw) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
