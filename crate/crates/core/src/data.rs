//! Dataset container and construction of forward-forward positive/negative
//! batches. File parsing lives in the companion crate; everything here is
//! pure.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::rng::Rng;

pub const IMAGE_WIDTH: usize = 784;
pub const NUM_CLASSES: usize = 10;

/// Flat image dataset: `len x width` pixels in `[0, 1]`, one label per row.
#[derive(Debug, Clone)]
pub struct Dataset {
    images: Vec<f32>,
    labels: Vec<u8>,
    width: usize,
    pub name: String,
}

impl Dataset {
    pub fn new(
        images: Vec<f32>,
        labels: Vec<u8>,
        width: usize,
        name: impl Into<String>,
    ) -> Result<Self> {
        if width == 0 || labels.is_empty() {
            return Err(Error::InvalidInput(String::from(
                "dataset must be non-empty",
            )));
        }
        if images.len() != labels.len() * width {
            return Err(Error::ShapeMismatch {
                expected: labels.len() * width,
                got: images.len(),
            });
        }
        if let Some(i) = images.iter().position(|&p| !(0.0..=1.0).contains(&p)) {
            return Err(Error::InvalidInput(format!(
                "pixel {i} out of range [0, 1]: {}",
                images[i]
            )));
        }
        if let Some(i) = labels.iter().position(|&l| l as usize >= NUM_CLASSES) {
            return Err(Error::InvalidInput(format!(
                "label {i} out of range: {}",
                labels[i]
            )));
        }
        Ok(Dataset {
            images,
            labels,
            width,
            name: name.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn image(&self, i: usize) -> &[f32] {
        &self.images[i * self.width..(i + 1) * self.width]
    }

    pub fn label(&self, i: usize) -> u8 {
        self.labels[i]
    }

    pub fn images(&self) -> &[f32] {
        &self.images
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    /// New dataset from a list of row indices (rows may repeat).
    pub fn subset(&self, indices: &[usize], name: impl Into<String>) -> Dataset {
        let mut images = Vec::with_capacity(indices.len() * self.width);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            images.extend_from_slice(self.image(i));
            labels.push(self.labels[i]);
        }
        Dataset {
            images,
            labels,
            width: self.width,
            name: name.into(),
        }
    }

    /// First `n` rows (or all of them, whichever is smaller).
    pub fn head(&self, n: usize, name: impl Into<String>) -> Dataset {
        let n = n.min(self.len());
        Dataset {
            images: self.images[..n * self.width].to_vec(),
            labels: self.labels[..n].to_vec(),
            width: self.width,
            name: name.into(),
        }
    }
}

/// Writes a one-hot label into the embedding pixels (the first
/// `NUM_CLASSES` positions of the image).
pub fn embed_label(image: &mut [f32], label: u8) {
    for (i, px) in image.iter_mut().take(NUM_CLASSES).enumerate() {
        *px = if i == label as usize { 1.0 } else { 0.0 };
    }
}

/// A labeled minibatch (row-major images).
#[derive(Debug, Clone)]
pub struct Batch {
    pub images: Vec<f32>,
    pub labels: Vec<u8>,
    pub width: usize,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn image(&self, i: usize) -> &[f32] {
        &self.images[i * self.width..(i + 1) * self.width]
    }
}

/// Embedded label of row `i` of a pos/neg batch (argmax over the embedding
/// pixels).
pub fn embedded_label(batch: &Batch, i: usize) -> u8 {
    let img = batch.image(i);
    let mut best = 0usize;
    for c in 1..NUM_CLASSES {
        if img[c] > img[best] {
            best = c;
        }
    }
    best as u8
}

/// Splits a minibatch into positives and negatives: a fraction `lambda`
/// (rounded) keeps its true label embedded; the rest get a uniformly random
/// wrong label.
pub fn make_pos_neg(
    images: &[f32],
    labels: &[u8],
    width: usize,
    lambda: f64,
    rng: &mut Rng,
) -> Result<(Batch, Batch)> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidInput(format!(
            "positive portion must be in [0, 1], got {lambda}"
        )));
    }
    let n = labels.len();
    if images.len() != n * width || width < NUM_CLASSES {
        return Err(Error::ShapeMismatch {
            expected: n * width,
            got: images.len(),
        });
    }
    let n_pos = crate::num::round(lambda * n as f64) as usize;
    let n_pos = n_pos.min(n);

    let mut pos = Batch {
        images: Vec::with_capacity(n_pos * width),
        labels: Vec::new(),
        width,
    };
    let mut neg = Batch {
        images: Vec::with_capacity((n - n_pos) * width),
        labels: Vec::new(),
        width,
    };

    for i in 0..n {
        let row = &images[i * width..(i + 1) * width];
        let label = labels[i];
        if i < n_pos {
            let start = pos.images.len();
            pos.images.extend_from_slice(row);
            embed_label(&mut pos.images[start..], label);
            pos.labels.push(label);
        } else {
            let wrong = {
                let r = rng.below(NUM_CLASSES - 1) as u8;
                if r >= label {
                    r + 1
                } else {
                    r
                }
            };
            let start = neg.images.len();
            neg.images.extend_from_slice(row);
            embed_label(&mut neg.images[start..], wrong);
            neg.labels.push(label);
        }
    }
    Ok((pos, neg))
}

/// Disjoint near-equal folds by shuffled index; returns `(train, test)` index
/// pairs whose test folds cover every row exactly once.
pub fn kfold(dataset: &Dataset, k: usize, seed: u64) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    let n = dataset.len();
    if k < 2 || k > n {
        return Err(Error::InvalidInput(format!(
            "fold count {k} not in [2, {n}]"
        )));
    }
    let mut indices: Vec<usize> = (0..n).collect();
    Rng::new(seed).shuffle(&mut indices);

    let base = n / k;
    let extra = n % k;
    let mut splits = Vec::with_capacity(k);
    let mut start = 0;
    for fold in 0..k {
        let size = base + usize::from(fold < extra);
        let test: Vec<usize> = indices[start..start + size].to_vec();
        let train: Vec<usize> = indices[..start]
            .iter()
            .chain(&indices[start + size..])
            .copied()
            .collect();
        splits.push((train, test));
        start += size;
    }
    Ok(splits)
}

/// Synthetic two-class data mapped into the first two pixels of the standard
/// image frame; everything else stays zero. Meant for fast end-to-end runs
/// without any dataset on disk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SyntheticKind {
    /// Two Gaussian blobs around (0.3, 0.3) and (0.7, 0.7); per-axis
    /// separation is `separation_sigmas` standard deviations.
    Blobs { separation_sigmas: f64 },
    /// The four XOR corners of the unit square plus Gaussian jitter.
    Xor { noise: f64 },
}

impl SyntheticKind {
    pub fn blobs() -> Self {
        SyntheticKind::Blobs {
            separation_sigmas: 4.0,
        }
    }

    pub fn xor() -> Self {
        SyntheticKind::Xor { noise: 0.0 }
    }
}

pub fn synthetic(kind: SyntheticKind, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidInput(String::from(
            "need at least one sample",
        )));
    }
    let mut rng = Rng::new(seed);
    let mut images = vec![0.0f32; n * IMAGE_WIDTH];
    let mut labels = vec![0u8; n];
    match kind {
        SyntheticKind::Blobs { separation_sigmas } => {
            if separation_sigmas <= 0.0 {
                return Err(Error::InvalidInput(String::from(
                    "separation must be positive",
                )));
            }
            let sigma = 0.4 / separation_sigmas;
            for i in 0..n {
                let class = (i % 2) as u8;
                let center = if class == 0 { 0.3 } else { 0.7 };
                let x = center + sigma * rng.normal();
                let y = center + sigma * rng.normal();
                images[i * IMAGE_WIDTH] = x.clamp(0.0, 1.0) as f32;
                images[i * IMAGE_WIDTH + 1] = y.clamp(0.0, 1.0) as f32;
                labels[i] = class;
            }
        }
        SyntheticKind::Xor { noise } => {
            const CORNERS: [(f64, f64, u8); 4] =
                [(0.0, 0.0, 0), (1.0, 0.0, 1), (0.0, 1.0, 1), (1.0, 1.0, 0)];
            for i in 0..n {
                let (cx, cy, class) = CORNERS[i % 4];
                let x = cx + noise * rng.normal();
                let y = cy + noise * rng.normal();
                images[i * IMAGE_WIDTH] = x.clamp(0.0, 1.0) as f32;
                images[i * IMAGE_WIDTH + 1] = y.clamp(0.0, 1.0) as f32;
                labels[i] = class;
            }
        }
    }
    Dataset::new(images, labels, IMAGE_WIDTH, "synthetic")
}
