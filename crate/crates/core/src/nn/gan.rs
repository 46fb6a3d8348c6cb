//! Minimal GAN: both players are dense networks updated by the same
//! controller kind, with alternating non-saturating updates.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::controllers::ControllerConfig;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::nn::mlp::{backward, Activation, Mlp};
use crate::nn::train::{apply_updates, batch_to_f64, bce, controllers_for};
use crate::rng::Rng;

#[derive(Debug, Clone)]
pub struct GanConfig {
    pub controller: ControllerConfig,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub noise_dim: usize,
    pub hidden: usize,
    /// Hidden layer count for both players.
    pub depth: usize,
    /// Epochs (1-based) at which an 8x8 grid of samples is captured.
    pub dump_epochs: Vec<usize>,
}

impl GanConfig {
    /// Generation-task defaults: learning rate 2e-4, 200 epochs, batch 100,
    /// 64-dim noise, four hidden layers of 256.
    pub fn new(mut controller: ControllerConfig) -> Self {
        controller.lr = 2e-4;
        GanConfig {
            controller,
            epochs: 200,
            batch_size: 100,
            seed: 42,
            noise_dim: 64,
            hidden: 256,
            depth: 4,
            dump_epochs: vec![1, 50, 100, 200],
        }
    }
}

/// Noise-to-sample generator: ReLU stack with a sigmoid pixel head.
pub fn build_generator(cfg: &GanConfig, data_width: usize, rng: &mut Rng) -> Result<Mlp> {
    let mut sizes = vec![cfg.noise_dim];
    sizes.extend(core::iter::repeat_n(cfg.hidden, cfg.depth));
    sizes.push(data_width);
    let mut acts = vec![Activation::Relu; cfg.depth];
    acts.push(Activation::Sigmoid);
    Mlp::new(&sizes, &acts, rng)
}

/// Sample-to-probability discriminator with a single sigmoid output.
pub fn build_discriminator(cfg: &GanConfig, data_width: usize, rng: &mut Rng) -> Result<Mlp> {
    let mut sizes = vec![data_width];
    sizes.extend(core::iter::repeat_n(cfg.hidden, cfg.depth));
    sizes.push(1);
    let mut acts = vec![Activation::Relu; cfg.depth];
    acts.push(Activation::Sigmoid);
    Mlp::new(&sizes, &acts, rng)
}

/// A captured grid of generated samples.
#[derive(Debug, Clone)]
pub struct SampleDump {
    pub epoch: usize,
    pub count: usize,
    pub width: usize,
    /// `count x width` pixels in [0, 1].
    pub images: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct GanOutput {
    pub g_loss: Vec<f64>,
    pub d_loss: Vec<f64>,
    /// Mean discriminator output on generated samples, per epoch.
    pub d_on_fake: Vec<f64>,
    pub dumps: Vec<SampleDump>,
}

/// Alternating training: the discriminator sees one real and one generated
/// batch per step, then the generator takes a non-saturating step through
/// the updated discriminator. Divergence (non-finite loss or parameters)
/// aborts with the epoch index.
pub fn train_gan(
    generator: &mut Mlp,
    discriminator: &mut Mlp,
    data: &Dataset,
    cfg: &GanConfig,
) -> Result<GanOutput> {
    if generator.output_width() != data.width()
        || discriminator.input_width() != data.width()
        || discriminator.output_width() != 1
    {
        return Err(Error::InvalidInput(String::from(
            "generator/discriminator widths do not match the dataset",
        )));
    }
    if cfg.batch_size == 0 || cfg.epochs == 0 {
        return Err(Error::InvalidInput(String::from(
            "epochs and batch size must be nonzero",
        )));
    }
    let noise_dim = generator.input_width();
    let mut g_ctrls = controllers_for(generator, &cfg.controller)?;
    let mut d_ctrls = controllers_for(discriminator, &cfg.controller)?;
    let mut rng = Rng::new(cfg.seed);
    // Fixed probe noise so dumps across epochs show the same latent points.
    let mut probe_rng = Rng::new(cfg.seed ^ 0x9e3779b97f4a7c15);
    let probe: Vec<f64> = (0..64 * noise_dim).map(|_| probe_rng.normal()).collect();

    let mut indices: Vec<usize> = (0..data.len()).collect();
    let mut out = GanOutput {
        g_loss: Vec::new(),
        d_loss: Vec::new(),
        d_on_fake: Vec::new(),
        dumps: Vec::new(),
    };

    for epoch in 0..cfg.epochs {
        rng.shuffle(&mut indices);
        let (mut gl_sum, mut dl_sum, mut fake_sum) = (0.0, 0.0, 0.0);
        let mut batches = 0usize;

        for batch in indices.chunks(cfg.batch_size) {
            let n = batch.len();
            let (real, _) = batch_to_f64(data, batch);
            let noise: Vec<f64> = (0..n * noise_dim).map(|_| rng.normal()).collect();

            // Discriminator: real toward 1, generated toward 0.
            let fake_pass = generator.forward(&noise)?;
            let fake = fake_pass.output().to_vec();

            let real_pass = discriminator.forward(&real)?;
            let (loss_real, delta_real) = bce(real_pass.output(), &vec![1.0; n]);
            let bw_real = backward(discriminator, &real, &real_pass, &delta_real)?;

            let fake_d_pass = discriminator.forward(&fake)?;
            let (loss_fake, delta_fake) = bce(fake_d_pass.output(), &vec![0.0; n]);
            let bw_fake = backward(discriminator, &fake, &fake_d_pass, &delta_fake)?;

            let mut d_grads = bw_real.grads;
            for (acc, extra) in d_grads.iter_mut().zip(&bw_fake.grads) {
                for (a, b) in acc.dw.iter_mut().zip(&extra.dw) {
                    *a += b;
                }
                for (a, b) in acc.db.iter_mut().zip(&extra.db) {
                    *a += b;
                }
            }
            apply_updates(discriminator, &d_grads, &mut d_ctrls)?;

            // Generator: non-saturating objective through the updated critic.
            let fake_pass = generator.forward(&noise)?;
            let fake = fake_pass.output().to_vec();
            let d_pass = discriminator.forward(&fake)?;
            let preds = d_pass.output();
            let mut g_loss = 0.0;
            let mut delta_d: Vec<f64> = Vec::with_capacity(n);
            for &p in preds {
                g_loss -= crate::num::ln(p.max(1e-300));
                delta_d.push((p - 1.0) / n as f64);
            }
            g_loss /= n as f64;
            fake_sum += preds.iter().sum::<f64>() / n as f64;

            let bw_d = backward(discriminator, &fake, &d_pass, &delta_d)?;
            // Through the generator's sigmoid head.
            let mut delta_g: Vec<f64> = bw_d.input_delta;
            for (d, &x) in delta_g.iter_mut().zip(fake.iter()) {
                *d *= x * (1.0 - x);
            }
            let bw_g = backward(generator, &noise, &fake_pass, &delta_g)?;
            apply_updates(generator, &bw_g.grads, &mut g_ctrls)?;

            let d_loss = loss_real + loss_fake;
            if !(g_loss.is_finite() && d_loss.is_finite()) {
                return Err(Error::Diverged {
                    at: epoch,
                    context: "gan training loss",
                });
            }
            gl_sum += g_loss;
            dl_sum += d_loss;
            batches += 1;
        }

        generator.check_finite(epoch)?;
        discriminator.check_finite(epoch)?;
        out.g_loss.push(gl_sum / batches as f64);
        out.d_loss.push(dl_sum / batches as f64);
        out.d_on_fake.push(fake_sum / batches as f64);

        if cfg.dump_epochs.contains(&(epoch + 1)) {
            let pass = generator.forward(&probe)?;
            out.dumps.push(SampleDump {
                epoch: epoch + 1,
                count: 64,
                width: data.width(),
                images: pass.output().to_vec(),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controllers::ControllerKind;
    use crate::data::{synthetic, SyntheticKind};

    fn tiny_cfg(kind: ControllerKind) -> GanConfig {
        let mut cfg = GanConfig::new(ControllerConfig::new(kind));
        cfg.epochs = 2;
        cfg.batch_size = 50;
        cfg.noise_dim = 8;
        cfg.hidden = 16;
        cfg.depth = 2;
        cfg.dump_epochs = vec![1, 2];
        cfg
    }

    #[test]
    fn gan_runs_and_dumps_samples() {
        let data = synthetic(SyntheticKind::blobs(), 200, 1).unwrap();
        let cfg = tiny_cfg(ControllerKind::Adam);
        let mut rng = Rng::new(cfg.seed);
        let mut g = build_generator(&cfg, data.width(), &mut rng).unwrap();
        let mut d = build_discriminator(&cfg, data.width(), &mut rng).unwrap();
        let out = train_gan(&mut g, &mut d, &data, &cfg).unwrap();
        assert_eq!(out.g_loss.len(), 2);
        assert_eq!(out.dumps.len(), 2);
        assert_eq!(out.dumps[0].epoch, 1);
        assert_eq!(out.dumps[0].images.len(), 64 * data.width());
        for &p in &out.d_on_fake {
            assert!((0.0..=1.0).contains(&p));
        }
    }

    #[test]
    fn untrained_generator_mean_is_far_from_real_mean() {
        let data = synthetic(SyntheticKind::blobs(), 200, 2).unwrap();
        let cfg = tiny_cfg(ControllerKind::Sgd);
        let mut rng = Rng::new(cfg.seed);
        let mut g = build_generator(&cfg, data.width(), &mut rng).unwrap();
        let mut d = build_discriminator(&cfg, data.width(), &mut rng).unwrap();
        let out = train_gan(&mut g, &mut d, &data, &cfg).unwrap();
        let dump = &out.dumps[0];
        let fake_mean: f64 = dump.images.iter().sum::<f64>() / dump.images.len() as f64;
        let real_mean: f64 =
            data.images().iter().map(|&p| p as f64).sum::<f64>() / data.images().len() as f64;
        assert!(
            (fake_mean - real_mean).abs() > 0.1,
            "{fake_mean} vs {real_mean}"
        );
    }

    #[test]
    fn gan_training_is_reproducible() {
        let data = synthetic(SyntheticKind::blobs(), 120, 3).unwrap();
        let cfg = tiny_cfg(ControllerKind::Adam);
        let run = || {
            let mut rng = Rng::new(cfg.seed);
            let mut g = build_generator(&cfg, data.width(), &mut rng).unwrap();
            let mut d = build_discriminator(&cfg, data.width(), &mut rng).unwrap();
            train_gan(&mut g, &mut d, &data, &cfg).unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.g_loss, b.g_loss);
        assert_eq!(a.d_on_fake, b.d_on_fake);
    }
}
