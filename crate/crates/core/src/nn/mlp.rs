//! Dense feed-forward network with explicit forward/backward passes.
//!
//! Batches are row-major `n x width` slices of `f64`. The backward pass takes
//! the loss gradient at the last layer's pre-activation, which is where both
//! softmax/cross-entropy and sigmoid/BCE heads fuse to `prediction - target`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::num;
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Relu,
    Sigmoid,
    Tanh,
    Softmax,
}

#[derive(Debug, Clone)]
pub struct Layer {
    /// Row-major `outputs x inputs`.
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    pub act: Activation,
    pub inputs: usize,
    pub outputs: usize,
}

#[derive(Debug, Clone)]
pub struct Mlp {
    pub layers: Vec<Layer>,
}

impl Mlp {
    /// Builds a network with the given layer sizes and activations
    /// (`acts.len() == sizes.len() - 1`). Weights are scaled-normal
    /// initialized (He-style for ReLU layers), biases are zero.
    pub fn new(sizes: &[usize], acts: &[Activation], rng: &mut Rng) -> Result<Self> {
        if sizes.len() < 2 || acts.len() != sizes.len() - 1 {
            return Err(Error::InvalidInput(format!(
                "need n+1 sizes for n activations, got {} sizes and {} activations",
                sizes.len(),
                acts.len()
            )));
        }
        if sizes.contains(&0) {
            return Err(Error::InvalidInput(String::from(
                "layer sizes must be nonzero",
            )));
        }
        let mut layers = Vec::with_capacity(acts.len());
        for (i, &act) in acts.iter().enumerate() {
            let (fan_in, fan_out) = (sizes[i], sizes[i + 1]);
            let std = match act {
                Activation::Relu => num::sqrt(2.0 / fan_in as f64),
                _ => num::sqrt(1.0 / fan_in as f64),
            };
            let w = (0..fan_in * fan_out).map(|_| std * rng.normal()).collect();
            layers.push(Layer {
                w,
                b: vec![0.0; fan_out],
                act,
                inputs: fan_in,
                outputs: fan_out,
            });
        }
        Ok(Mlp { layers })
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().expect("at least one layer").outputs
    }

    /// Errors if any parameter went non-finite.
    pub fn check_finite(&self, at: usize) -> Result<()> {
        for layer in &self.layers {
            if layer.w.iter().chain(&layer.b).any(|p| !p.is_finite()) {
                return Err(Error::Diverged {
                    at,
                    context: "network parameters",
                });
            }
        }
        Ok(())
    }

    /// Forward pass over a row-major batch; caches pre- and post-activation
    /// values of every layer for the backward pass.
    pub fn forward(&self, input: &[f64]) -> Result<ForwardPass> {
        let width = self.input_width();
        if input.is_empty() || !input.len().is_multiple_of(width) {
            return Err(Error::ShapeMismatch {
                expected: width,
                got: input.len(),
            });
        }
        let n = input.len() / width;
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post = Vec::with_capacity(self.layers.len());
        let mut current = input;
        for layer in &self.layers {
            let (zin, zout) = (layer.inputs, layer.outputs);
            let mut z = vec![0.0; n * zout];
            for r in 0..n {
                let row = &current[r * zin..(r + 1) * zin];
                let out = &mut z[r * zout..(r + 1) * zout];
                for (o, zo) in out.iter_mut().enumerate() {
                    let wrow = &layer.w[o * zin..(o + 1) * zin];
                    let mut acc = layer.b[o];
                    for (wi, xi) in wrow.iter().zip(row.iter()) {
                        acc += wi * xi;
                    }
                    *zo = acc;
                }
            }
            let mut a = z.clone();
            apply_activation(layer.act, &mut a, zout);
            pre.push(z);
            post.push(a);
            current = post.last().expect("just pushed").as_slice();
        }
        Ok(ForwardPass { n, pre, post })
    }
}

fn apply_activation(act: Activation, values: &mut [f64], width: usize) {
    match act {
        Activation::Identity => {}
        Activation::Relu => {
            for v in values.iter_mut() {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
        }
        Activation::Sigmoid => {
            for v in values.iter_mut() {
                *v = 1.0 / (1.0 + num::exp(-*v));
            }
        }
        Activation::Tanh => {
            for v in values.iter_mut() {
                *v = num::tanh(*v);
            }
        }
        Activation::Softmax => {
            for row in values.chunks_mut(width) {
                let max = row.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x));
                let mut sum = 0.0;
                for v in row.iter_mut() {
                    *v = num::exp(*v - max);
                    sum += *v;
                }
                for v in row.iter_mut() {
                    *v /= sum;
                }
            }
        }
    }
}

/// Cached activations from [`Mlp::forward`]: `pre[l]` and `post[l]` are the
/// `n x outputs` pre- and post-activation values of layer `l`.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub n: usize,
    pub pre: Vec<Vec<f64>>,
    pub post: Vec<Vec<f64>>,
}

impl ForwardPass {
    pub fn output(&self) -> &[f64] {
        self.post.last().expect("at least one layer")
    }
}

#[derive(Debug, Clone)]
pub struct LayerGrads {
    pub dw: Vec<f64>,
    pub db: Vec<f64>,
}

/// Result of a backward pass: per-layer parameter gradients plus the loss
/// gradient at the network input (needed to chain networks, e.g. GAN).
#[derive(Debug, Clone)]
pub struct Backward {
    pub grads: Vec<LayerGrads>,
    pub input_delta: Vec<f64>,
}

/// Backpropagates `delta_last_pre` (the loss gradient at the final layer's
/// pre-activation, batch scaling already applied) through the cached pass.
/// Softmax is only supported as the output activation, where the fused head
/// never needs its Jacobian.
pub fn backward(
    mlp: &Mlp,
    input: &[f64],
    pass: &ForwardPass,
    delta_last_pre: &[f64],
) -> Result<Backward> {
    let layers = &mlp.layers;
    let last = layers.len() - 1;
    if delta_last_pre.len() != pass.n * layers[last].outputs {
        return Err(Error::ShapeMismatch {
            expected: pass.n * layers[last].outputs,
            got: delta_last_pre.len(),
        });
    }
    if layers[..last].iter().any(|l| l.act == Activation::Softmax) {
        return Err(Error::InvalidInput(String::from(
            "softmax is only supported on the output layer",
        )));
    }

    let n = pass.n;
    let mut grads: Vec<LayerGrads> = layers
        .iter()
        .map(|l| LayerGrads {
            dw: vec![0.0; l.w.len()],
            db: vec![0.0; l.b.len()],
        })
        .collect();
    let mut delta = delta_last_pre.to_vec();

    for l in (0..layers.len()).rev() {
        let layer = &layers[l];
        let (zin, zout) = (layer.inputs, layer.outputs);
        let below: &[f64] = if l == 0 { input } else { &pass.post[l - 1] };

        {
            let g = &mut grads[l];
            for r in 0..n {
                let drow = &delta[r * zout..(r + 1) * zout];
                let arow = &below[r * zin..(r + 1) * zin];
                for (o, &d) in drow.iter().enumerate() {
                    g.db[o] += d;
                    let wrow = &mut g.dw[o * zin..(o + 1) * zin];
                    for (wg, &a) in wrow.iter_mut().zip(arow.iter()) {
                        *wg += d * a;
                    }
                }
            }
        }

        // Push the delta through W and the activation derivative below.
        let mut below_delta = vec![0.0; n * zin];
        for r in 0..n {
            let drow = &delta[r * zout..(r + 1) * zout];
            let target = &mut below_delta[r * zin..(r + 1) * zin];
            for (o, &d) in drow.iter().enumerate() {
                let wrow = &layer.w[o * zin..(o + 1) * zin];
                for (t, &w) in target.iter_mut().zip(wrow.iter()) {
                    *t += d * w;
                }
            }
        }
        if l > 0 {
            let prev = &layers[l - 1];
            multiply_activation_derivative(
                prev.act,
                &pass.pre[l - 1],
                &pass.post[l - 1],
                &mut below_delta,
            );
        }
        delta = below_delta;
    }

    Ok(Backward {
        grads,
        input_delta: delta,
    })
}

fn multiply_activation_derivative(act: Activation, pre: &[f64], post: &[f64], delta: &mut [f64]) {
    match act {
        Activation::Identity => {}
        Activation::Relu => {
            for (d, &z) in delta.iter_mut().zip(pre.iter()) {
                if z <= 0.0 {
                    *d = 0.0;
                }
            }
        }
        Activation::Sigmoid => {
            for (d, &a) in delta.iter_mut().zip(post.iter()) {
                *d *= a * (1.0 - a);
            }
        }
        Activation::Tanh => {
            for (d, &a) in delta.iter_mut().zip(post.iter()) {
                *d *= 1.0 - a * a;
            }
        }
        Activation::Softmax => unreachable!("rejected before the loop"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_network_passes_input_through() {
        let mut rng = Rng::new(1);
        let mut mlp = Mlp::new(&[3, 3], &[Activation::Identity], &mut rng).unwrap();
        // Overwrite with the identity.
        for o in 0..3 {
            for i in 0..3 {
                mlp.layers[0].w[o * 3 + i] = f64::from(u8::from(o == i));
            }
        }
        let input = [0.5, -1.0, 2.0, 1.0, 2.0, 3.0];
        let pass = mlp.forward(&input).unwrap();
        assert_eq!(pass.output(), &input);
    }

    #[test]
    fn softmax_of_equal_logits_is_uniform() {
        let mut rng = Rng::new(2);
        let mut mlp = Mlp::new(&[2, 2], &[Activation::Softmax], &mut rng).unwrap();
        for w in mlp.layers[0].w.iter_mut() {
            *w = 0.0;
        }
        let pass = mlp.forward(&[3.0, -1.0]).unwrap();
        assert!((pass.output()[0] - 0.5).abs() < 1e-12);
        assert!((pass.output()[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let mut rng = Rng::new(3);
        let mlp = Mlp::new(
            &[4, 8, 5],
            &[Activation::Relu, Activation::Softmax],
            &mut rng,
        )
        .unwrap();
        let input: Vec<f64> = (0..12).map(|i| i as f64 / 3.0 - 2.0).collect();
        let pass = mlp.forward(&input).unwrap();
        for row in pass.output().chunks(5) {
            let sum: f64 = row.iter().sum();
            assert!((sum - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn forward_is_deterministic() {
        let mut rng = Rng::new(4);
        let mlp = Mlp::new(
            &[5, 7, 3],
            &[Activation::Tanh, Activation::Softmax],
            &mut rng,
        )
        .unwrap();
        let input: Vec<f64> = (0..10).map(|i| (i as f64).sin()).collect();
        let a = mlp.forward(&input).unwrap();
        let b = mlp.forward(&input).unwrap();
        assert_eq!(a.output(), b.output());
    }

    #[test]
    fn forward_rejects_ragged_batch() {
        let mut rng = Rng::new(5);
        let mlp = Mlp::new(&[3, 2], &[Activation::Identity], &mut rng).unwrap();
        assert!(matches!(
            mlp.forward(&[1.0, 2.0]),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn backward_rejects_hidden_softmax() {
        let mut rng = Rng::new(6);
        let mlp = Mlp::new(
            &[2, 2, 2],
            &[Activation::Softmax, Activation::Softmax],
            &mut rng,
        )
        .unwrap();
        let input = [0.1, 0.2];
        let pass = mlp.forward(&input).unwrap();
        let delta = vec![0.0; 2];
        assert!(backward(&mlp, &input, &pass, &delta).is_err());
    }
}
