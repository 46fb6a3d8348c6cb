//! From-scratch dense networks trained by backprop, forward-forward, and a
//! minimal GAN, all updated through the controller rules in
//! [`crate::controllers`].

mod ff;
mod gan;
mod mlp;
mod train;

pub use ff::{ff_predict, goodness, train_forward_forward};
pub use gan::{build_discriminator, build_generator, train_gan, GanConfig, GanOutput, SampleDump};
pub use mlp::{backward, Activation, Backward, ForwardPass, Layer, LayerGrads, Mlp};
pub use train::{bce, evaluate, softmax_xent, train_backprop, TrainConfig, TrainCurve};
