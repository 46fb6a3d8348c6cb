//! Forward-forward training: each layer learns locally to push the goodness
//! (sum of squared activations) above a threshold for positive samples and
//! below it for negative samples. No gradient ever crosses a layer boundary.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::data::{make_pos_neg, Dataset, NUM_CLASSES};
use crate::error::{Error, Result};
use crate::nn::mlp::{Activation, Layer, LayerGrads, Mlp};
use crate::nn::train::{controllers_for, TrainConfig, TrainCurve};
use crate::num;
use crate::rng::Rng;

/// Sum of squared activations of one sample's layer output.
pub fn goodness(activations: &[f64]) -> f64 {
    activations.iter().map(|&x| x * x).sum()
}

fn softplus(x: f64) -> f64 {
    // Stable log(1 + e^x).
    if x > 30.0 {
        x
    } else if x < -30.0 {
        0.0
    } else {
        num::ln(1.0 + num::exp(x))
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + num::exp(-x))
}

/// Row-normalizes in place: `x / (||x|| + 1e-8)` per sample, so the next
/// layer cannot read goodness straight off its input scale.
fn normalize_rows(values: &mut [f64], width: usize) {
    for row in values.chunks_mut(width) {
        let norm = num::sqrt(row.iter().map(|&x| x * x).sum::<f64>()) + 1e-8;
        for v in row.iter_mut() {
            *v /= norm;
        }
    }
}

fn layer_forward(layer: &Layer, input: &[f64]) -> (Vec<f64>, usize) {
    let (zin, zout) = (layer.inputs, layer.outputs);
    let n = input.len() / zin;
    let mut h = vec![0.0; n * zout];
    for r in 0..n {
        let row = &input[r * zin..(r + 1) * zin];
        let out = &mut h[r * zout..(r + 1) * zout];
        for (o, ho) in out.iter_mut().enumerate() {
            let wrow = &layer.w[o * zin..(o + 1) * zin];
            let mut acc = layer.b[o];
            for (wi, xi) in wrow.iter().zip(row.iter()) {
                acc += wi * xi;
            }
            *ho = acc.max(0.0);
        }
    }
    (h, n)
}

/// Local objective for one layer on one signed batch: positives minimize
/// `softplus(th - g)`, negatives `softplus(g - th)`. Gradients accumulate
/// into `grads`; returns the summed loss. For ReLU the pre-activation
/// derivative folds into the activations themselves (`2h`).
fn accumulate_layer_grads(
    layer: &Layer,
    input: &[f64],
    h: &[f64],
    positive: bool,
    th: f64,
    inv_total: f64,
    grads: &mut LayerGrads,
) -> f64 {
    let (zin, zout) = (layer.inputs, layer.outputs);
    let n = input.len() / zin;
    let mut loss = 0.0;
    for r in 0..n {
        let hrow = &h[r * zout..(r + 1) * zout];
        let g = goodness(hrow);
        let u = g - th;
        let (sample_loss, dldg) = if positive {
            (softplus(-u), sigmoid(u) - 1.0)
        } else {
            (softplus(u), sigmoid(u))
        };
        loss += sample_loss;
        let scale = dldg * inv_total;
        let xrow = &input[r * zin..(r + 1) * zin];
        for (o, &ho) in hrow.iter().enumerate() {
            if ho == 0.0 {
                continue;
            }
            let d = scale * 2.0 * ho;
            grads.db[o] += d;
            let wrow = &mut grads.dw[o * zin..(o + 1) * zin];
            for (wg, &x) in wrow.iter_mut().zip(xrow.iter()) {
                *wg += d * x;
            }
        }
    }
    loss
}

/// Predicts by embedding each candidate label and summing goodness across all
/// layers; the argmax wins. `image` is one raw sample (f64 pixels).
pub fn ff_predict(mlp: &Mlp, image: &[f64]) -> usize {
    let width = mlp.input_width();
    debug_assert_eq!(image.len(), width);
    let mut best = (0usize, f64::NEG_INFINITY);
    let mut candidate = image.to_vec();
    for label in 0..NUM_CLASSES {
        for (i, px) in candidate.iter_mut().take(NUM_CLASSES).enumerate() {
            *px = if i == label { 1.0 } else { 0.0 };
        }
        let mut current = candidate.clone();
        let mut total = 0.0;
        for layer in &mlp.layers {
            let (h, _) = layer_forward(layer, &current);
            total += goodness(&h);
            current = h;
            normalize_rows(&mut current, layer.outputs);
        }
        if total > best.1 {
            best = (label, total);
        }
    }
    best.0
}

fn ff_accuracy(mlp: &Mlp, data: &Dataset, limit: usize) -> f64 {
    let n = data.len().min(limit);
    if n == 0 {
        return 0.0;
    }
    let mut correct = 0usize;
    for i in 0..n {
        let image: Vec<f64> = data.image(i).iter().map(|&p| p as f64).collect();
        correct += usize::from(ff_predict(mlp, &image) == data.label(i) as usize);
    }
    correct as f64 / n as f64
}

/// Samples looked at per epoch when estimating accuracies; the full test set
/// is scored once after the last epoch.
const EVAL_CAP: usize = 1000;

/// Layer-local forward-forward training. The network must be a plain ReLU
/// stack (no classifier head); predictions come from label-embedded goodness.
/// Per-epoch accuracies are estimated on a capped subsample; the final
/// test accuracy in the curve is exact.
pub fn train_forward_forward(
    mlp: &mut Mlp,
    train: &Dataset,
    test: &Dataset,
    cfg: &TrainConfig,
) -> Result<TrainCurve> {
    if mlp.layers.iter().any(|l| l.act != Activation::Relu) {
        return Err(Error::InvalidInput(String::from(
            "forward-forward training expects an all-ReLU stack",
        )));
    }
    if train.width() != mlp.input_width() || train.width() < NUM_CLASSES {
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

    let mut ctrls = controllers_for(mlp, &cfg.controller)?;
    let mut rng = Rng::new(cfg.seed);
    let mut indices: Vec<usize> = (0..train.len()).collect();
    let mut curve = TrainCurve::new();

    for epoch in 0..cfg.epochs {
        rng.shuffle(&mut indices);
        let mut epoch_loss = 0.0;
        let mut seen = 0usize;

        for batch in indices.chunks(cfg.batch_size) {
            let images: Vec<f32> = batch
                .iter()
                .flat_map(|&i| train.image(i).iter().copied())
                .collect();
            let labels: Vec<u8> = batch.iter().map(|&i| train.label(i)).collect();
            let (pos, neg) = make_pos_neg(&images, &labels, train.width(), cfg.lambda, &mut rng)?;
            let mut pos_input: Vec<f64> = pos.images.iter().map(|&p| p as f64).collect();
            let mut neg_input: Vec<f64> = neg.images.iter().map(|&p| p as f64).collect();
            let total = pos.len() + neg.len();
            if total == 0 {
                continue;
            }
            let inv_total = 1.0 / total as f64;

            for (l, layer) in mlp.layers.iter_mut().enumerate() {
                let (pos_h, _) = layer_forward(layer, &pos_input);
                let (neg_h, _) = layer_forward(layer, &neg_input);
                let mut grads = LayerGrads {
                    dw: vec![0.0; layer.w.len()],
                    db: vec![0.0; layer.b.len()],
                };
                let mut loss = 0.0;
                loss += accumulate_layer_grads(
                    layer, &pos_input, &pos_h, true, cfg.th, inv_total, &mut grads,
                );
                loss += accumulate_layer_grads(
                    layer, &neg_input, &neg_h, false, cfg.th, inv_total, &mut grads,
                );
                epoch_loss += loss;
                if !loss.is_finite() {
                    return Err(Error::Diverged {
                        at: epoch,
                        context: "forward-forward loss",
                    });
                }

                let mut scratch = vec![0.0; layer.w.len()];
                ctrls[2 * l].step_into(&grads.dw, &mut scratch)?;
                for (w, d) in layer.w.iter_mut().zip(&scratch) {
                    *w += d;
                }
                let mut scratch_b = vec![0.0; layer.b.len()];
                ctrls[2 * l + 1].step_into(&grads.db, &mut scratch_b)?;
                for (b, d) in layer.b.iter_mut().zip(&scratch_b) {
                    *b += d;
                }

                // Detached, normalized activations feed the next layer.
                pos_input = pos_h;
                normalize_rows(&mut pos_input, layer.outputs);
                neg_input = neg_h;
                normalize_rows(&mut neg_input, layer.outputs);
            }
            seen += total;
        }

        mlp.check_finite(epoch)?;
        curve.train_loss.push(epoch_loss / seen.max(1) as f64);
        curve.train_acc.push(ff_accuracy(mlp, train, EVAL_CAP));
        let test_limit = if epoch + 1 == cfg.epochs {
            usize::MAX
        } else {
            EVAL_CAP
        };
        curve.test_acc.push(ff_accuracy(mlp, test, test_limit));
    }
    Ok(curve)
}
