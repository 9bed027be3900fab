//! The two generators and two patch discriminators, built from declarative
//! layer specs.

use ndarray::{Array4, ArrayD};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{
    backward_seq, forward_seq, Conv2d, ConvTranspose2d, InstanceNorm2d, Layer, LeakyRelu, Param,
    ReflectionPad2d, Relu, ResidualBlock, Tanh,
};
use crate::scalar::Scalar;

pub const WEIGHT_INIT_STD: f64 = 0.02;

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    Instance,
    None,
}

#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorSpec {
    pub in_channels: usize,
    pub encoder_channels: Vec<usize>,
    pub n_residual_blocks: usize,
    pub decoder_channels: Vec<usize>,
    pub out_channels: usize,
    pub norm_kind: NormKind,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        GeneratorSpec {
            in_channels: 3,
            encoder_channels: vec![64, 128, 256],
            n_residual_blocks: 6,
            decoder_channels: vec![128, 64],
            out_channels: 3,
            norm_kind: NormKind::Instance,
        }
    }
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        if self.in_channels == 0 {
            return Err(Error::config("generator.in_channels", "must be positive"));
        }
        if self.out_channels == 0 {
            return Err(Error::config("generator.out_channels", "must be positive"));
        }
        if self.encoder_channels.is_empty() {
            return Err(Error::config("generator.encoder_channels", "must be non-empty"));
        }
        if self.encoder_channels.iter().any(|&c| c == 0) {
            return Err(Error::config("generator.encoder_channels", "zero channel count"));
        }
        if !self.encoder_channels.windows(2).all(|p| p[0] < p[1]) {
            return Err(Error::config(
                "generator.encoder_channels",
                "must be strictly increasing",
            ));
        }
        if self.decoder_channels.iter().any(|&c| c == 0) {
            return Err(Error::config("generator.decoder_channels", "zero channel count"));
        }
        if !self.decoder_channels.windows(2).all(|p| p[0] > p[1]) {
            return Err(Error::config(
                "generator.decoder_channels",
                "must be strictly decreasing",
            ));
        }
        Ok(())
    }
}

#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiscriminatorSpec {
    pub in_channels: usize,
    pub layer_channels: Vec<usize>,
    pub kernel_size: usize,
    pub strides: Vec<usize>,
    pub final_stride: usize,
    pub leaky_slope: f64,
    pub norm_kind: NormKind,
}

impl Default for DiscriminatorSpec {
    fn default() -> Self {
        DiscriminatorSpec {
            in_channels: 3,
            layer_channels: vec![32, 64, 128, 256],
            kernel_size: 4,
            strides: vec![2, 2, 2, 1],
            final_stride: 1,
            leaky_slope: 0.2,
            norm_kind: NormKind::Instance,
        }
    }
}

impl DiscriminatorSpec {
    pub fn validate(&self) -> Result<()> {
        if self.in_channels == 0 {
            return Err(Error::config("discriminator.in_channels", "must be positive"));
        }
        if self.layer_channels.is_empty() {
            return Err(Error::config(
                "discriminator.layer_channels",
                "must be non-empty",
            ));
        }
        if self.layer_channels.iter().any(|&c| c == 0) {
            return Err(Error::config(
                "discriminator.layer_channels",
                "zero channel count",
            ));
        }
        if self.strides.len() != self.layer_channels.len() {
            return Err(Error::config(
                "discriminator.strides",
                "length must match layer_channels",
            ));
        }
        if self.strides.iter().any(|&s| s == 0) || self.final_stride == 0 {
            return Err(Error::config("discriminator.strides", "zero stride"));
        }
        if self.kernel_size == 0 {
            return Err(Error::config("discriminator.kernel_size", "must be positive"));
        }
        if !(self.leaky_slope > 0.0 && self.leaky_slope < 1.0) {
            return Err(Error::config(
                "discriminator.leaky_slope",
                "must lie in (0, 1)",
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum NetworkRole {
    GXy,
    FYx,
    DX,
    DY,
}

#[derive(Clone, PartialEq, Debug)]
pub enum NetworkSpec {
    Generator(GeneratorSpec),
    Discriminator(DiscriminatorSpec),
}

/// A built network: its role, the spec it was built from, and the layer
/// stack holding the trainable parameters.
pub struct Network<F: Scalar> {
    pub role: NetworkRole,
    pub spec: NetworkSpec,
    layers: Vec<Box<dyn Layer<F>>>,
}

impl<F: Scalar> std::fmt::Debug for Network<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Network")
            .field("role", &self.role)
            .field("layers", &self.layers.len())
            .finish()
    }
}

impl<F: Scalar> Network<F> {
    pub fn forward(&mut self, x: &Array4<F>, cache: bool) -> Result<Array4<F>> {
        forward_seq(&mut self.layers, x, cache)
    }

    pub fn backward(&mut self, grad_out: &Array4<F>) -> Array4<F> {
        backward_seq(&mut self.layers, grad_out)
    }

    pub fn visit_params(&mut self, f: &mut dyn FnMut(&mut Param<F>)) {
        for layer in &mut self.layers {
            layer.visit_params(f);
        }
    }

    pub fn zero_grads(&mut self) {
        self.visit_params(&mut |p| p.zero_grad());
    }

    pub fn clear_cache(&mut self) {
        for layer in &mut self.layers {
            layer.clear_cache();
        }
    }

    pub fn param_count(&mut self) -> usize {
        let mut n = 0;
        self.visit_params(&mut |p| n += p.len());
        n
    }

    /// Parameter values in visiting order, for checkpointing.
    pub fn state(&mut self) -> Vec<ArrayD<F>> {
        let mut out = Vec::new();
        self.visit_params(&mut |p| out.push(p.value.clone()));
        out
    }

    pub fn load_state(&mut self, state: &[ArrayD<F>]) -> Result<()> {
        let mut idx = 0;
        let mut err = None;
        self.visit_params(&mut |p| {
            if err.is_some() {
                return;
            }
            match state.get(idx) {
                Some(v) if v.shape() == p.value.shape() => p.value.assign(v),
                Some(v) => {
                    err = Some(Error::shape(
                        format!("parameter {idx} shape {:?}", p.value.shape()),
                        format!("{:?}", v.shape()),
                    ))
                }
                None => err = Some(Error::shape(format!("{} parameter tensors", idx + 1),
                    format!("{}", state.len()))),
            }
            idx += 1;
        });
        if let Some(e) = err {
            return Err(e);
        }
        if idx != state.len() {
            return Err(Error::shape(
                format!("{idx} parameter tensors"),
                format!("{}", state.len()),
            ));
        }
        Ok(())
    }
}

/// Encoder / residual / decoder generator with a tanh head. Fully
/// convolutional and size-preserving for inputs divisible by the total
/// downsampling factor.
pub fn build_generator<F: Scalar>(
    spec: &GeneratorSpec,
    seed: u64,
    role: NetworkRole,
) -> Result<Network<F>> {
    spec.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let normalize = spec.norm_kind == NormKind::Instance;
    let std = WEIGHT_INIT_STD;
    let mut layers: Vec<Box<dyn Layer<F>>> = Vec::new();

    // First encoder stage: 7x7 convolution at full resolution.
    layers.push(Box::new(ReflectionPad2d::new(3)));
    layers.push(Box::new(Conv2d::new(
        spec.in_channels,
        spec.encoder_channels[0],
        7,
        1,
        0,
        std,
        &mut rng,
    )));
    if normalize {
        layers.push(Box::new(InstanceNorm2d::new()));
    }
    layers.push(Box::new(Relu::new()));

    // Downsampling stages.
    for pair in spec.encoder_channels.windows(2) {
        layers.push(Box::new(Conv2d::new(pair[0], pair[1], 3, 2, 1, std, &mut rng)));
        if normalize {
            layers.push(Box::new(InstanceNorm2d::new()));
        }
        layers.push(Box::new(Relu::new()));
    }

    let bottleneck = *spec.encoder_channels.last().unwrap();
    for _ in 0..spec.n_residual_blocks {
        layers.push(Box::new(ResidualBlock::new(bottleneck, normalize, std, &mut rng)));
    }

    // Upsampling stages.
    let mut prev = bottleneck;
    for &ch in &spec.decoder_channels {
        layers.push(Box::new(ConvTranspose2d::new(prev, ch, 3, 2, 1, 1, std, &mut rng)));
        if normalize {
            layers.push(Box::new(InstanceNorm2d::new()));
        }
        layers.push(Box::new(Relu::new()));
        prev = ch;
    }

    layers.push(Box::new(ReflectionPad2d::new(3)));
    layers.push(Box::new(Conv2d::new(prev, spec.out_channels, 7, 1, 0, std, &mut rng)));
    layers.push(Box::new(Tanh::new()));

    Ok(Network {
        role,
        spec: NetworkSpec::Generator(spec.clone()),
        layers,
    })
}

/// Patch discriminator: stacked strided convolutions ending in a
/// single-channel score map with no output nonlinearity.
pub fn build_discriminator<F: Scalar>(
    spec: &DiscriminatorSpec,
    seed: u64,
    role: NetworkRole,
) -> Result<Network<F>> {
    spec.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let std = WEIGHT_INIT_STD;
    let mut layers: Vec<Box<dyn Layer<F>>> = Vec::new();
    let mut prev = spec.in_channels;
    for (i, (&ch, &s)) in spec.layer_channels.iter().zip(&spec.strides).enumerate() {
        layers.push(Box::new(Conv2d::new(prev, ch, spec.kernel_size, s, 1, std, &mut rng)));
        // No normalization on the first layer, matching the usual patch
        // discriminator layout.
        if i > 0 && spec.norm_kind == NormKind::Instance {
            layers.push(Box::new(InstanceNorm2d::new()));
        }
        layers.push(Box::new(LeakyRelu::new(spec.leaky_slope)));
        prev = ch;
    }
    layers.push(Box::new(Conv2d::new(
        prev,
        1,
        spec.kernel_size,
        spec.final_stride,
        1,
        std,
        &mut rng,
    )));

    Ok(Network {
        role,
        spec: NetworkSpec::Discriminator(spec.clone()),
        layers,
    })
}

/// Receptive field of one output score: 1 + sum over layers of
/// (k_i - 1) * prod of the strides of all earlier layers.
pub fn receptive_field(spec: &DiscriminatorSpec) -> usize {
    let mut rf = 1usize;
    let mut jump = 1usize;
    for &s in spec.strides.iter().chain(std::iter::once(&spec.final_stride)) {
        rf += (spec.kernel_size - 1) * jump;
        jump *= s;
    }
    rf
}
