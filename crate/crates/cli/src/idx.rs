//! IDX container parsing (big-endian, standard magics) with transparent gzip
//! support, plus byte-exact re-serialization.

use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use ctrloptim_core::data::Dataset;
use flate2::read::GzDecoder;

use crate::{Error, Result};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

/// Environment variable naming the default dataset root.
pub const DATA_DIR_ENV: &str = "CTRLOPTIM_DATA_DIR";

fn read_file(path: &Path) -> Result<Vec<u8>> {
    let mut raw = Vec::new();
    File::open(path)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?
        .read_to_end(&mut raw)?;
    // Gzip sniffing by magic bytes.
    if raw.len() >= 2 && raw[0] == 0x1f && raw[1] == 0x8b {
        let mut out = Vec::new();
        GzDecoder::new(&raw[..]).read_to_end(&mut out)?;
        return Ok(out);
    }
    Ok(raw)
}

fn be_u32(bytes: &[u8], offset: usize, what: &str) -> Result<u32> {
    let end = offset + 4;
    if bytes.len() < end {
        return Err(Error::Format(format!(
            "truncated IDX file while reading {what}"
        )));
    }
    Ok(u32::from_be_bytes([
        bytes[offset],
        bytes[offset + 1],
        bytes[offset + 2],
        bytes[offset + 3],
    ]))
}

/// Parses paired image/label IDX files into a dataset (pixels scaled by
/// 1/255). Errors on wrong magics, truncation, or count mismatch.
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<Dataset> {
    let img = read_file(images_path)?;
    let magic = be_u32(&img, 0, "image magic")?;
    if magic != IMAGE_MAGIC {
        return Err(Error::Format(format!(
            "{}: wrong magic {magic:#010x}, expected {IMAGE_MAGIC:#010x}",
            images_path.display()
        )));
    }
    let count = be_u32(&img, 4, "image count")? as usize;
    let rows = be_u32(&img, 8, "row count")? as usize;
    let cols = be_u32(&img, 12, "column count")? as usize;
    let width = rows * cols;
    let pixels = &img[16..];
    if pixels.len() != count * width {
        return Err(Error::Format(format!(
            "{}: expected {} pixel bytes, found {}",
            images_path.display(),
            count * width,
            pixels.len()
        )));
    }

    let lab = read_file(labels_path)?;
    let magic = be_u32(&lab, 0, "label magic")?;
    if magic != LABEL_MAGIC {
        return Err(Error::Format(format!(
            "{}: wrong magic {magic:#010x}, expected {LABEL_MAGIC:#010x}",
            labels_path.display()
        )));
    }
    let label_count = be_u32(&lab, 4, "label count")? as usize;
    let labels = &lab[8..];
    if labels.len() != label_count {
        return Err(Error::Format(format!(
            "{}: expected {label_count} label bytes, found {}",
            labels_path.display(),
            labels.len()
        )));
    }
    if label_count != count {
        return Err(Error::Format(format!(
            "image/label count mismatch: {count} images, {label_count} labels"
        )));
    }

    let images: Vec<f32> = pixels.iter().map(|&p| p as f32 / 255.0).collect();
    let name = images_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "idx".to_string());
    Ok(Dataset::new(images, labels.to_vec(), width, name)?)
}

/// Writes a dataset back out as a pair of IDX files. Loading then saving
/// reproduces the original bytes (pixels round-trip through 1/255 exactly).
pub fn save_idx(dataset: &Dataset, images_path: &Path, labels_path: &Path) -> Result<()> {
    let n = dataset.len() as u32;
    let side = (dataset.width() as f64).sqrt().round() as u32;
    let (rows, cols) = if (side * side) as usize == dataset.width() {
        (side, side)
    } else {
        (1, dataset.width() as u32)
    };

    let mut img = Vec::with_capacity(16 + dataset.images().len());
    img.extend_from_slice(&IMAGE_MAGIC.to_be_bytes());
    img.extend_from_slice(&n.to_be_bytes());
    img.extend_from_slice(&rows.to_be_bytes());
    img.extend_from_slice(&cols.to_be_bytes());
    img.extend(dataset.images().iter().map(|&p| (p * 255.0).round() as u8));
    File::create(images_path)?.write_all(&img)?;

    let mut lab = Vec::with_capacity(8 + dataset.len());
    lab.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    lab.extend_from_slice(&n.to_be_bytes());
    lab.extend_from_slice(dataset.labels());
    File::create(labels_path)?.write_all(&lab)?;
    Ok(())
}

fn first_existing(dir: &Path, names: &[&str]) -> Option<PathBuf> {
    names.iter().map(|n| dir.join(n)).find(|p| p.exists())
}

/// The four standard MNIST files under `dir`, if present (plain or gzipped).
pub fn find_mnist(dir: &Path) -> Option<MnistPaths> {
    Some(MnistPaths {
        train_images: first_existing(
            dir,
            &[
                "train-images-idx3-ubyte",
                "train-images-idx3-ubyte.gz",
                "train-images.idx3-ubyte",
            ],
        )?,
        train_labels: first_existing(
            dir,
            &[
                "train-labels-idx1-ubyte",
                "train-labels-idx1-ubyte.gz",
                "train-labels.idx1-ubyte",
            ],
        )?,
        test_images: first_existing(
            dir,
            &[
                "t10k-images-idx3-ubyte",
                "t10k-images-idx3-ubyte.gz",
                "t10k-images.idx3-ubyte",
            ],
        )?,
        test_labels: first_existing(
            dir,
            &[
                "t10k-labels-idx1-ubyte",
                "t10k-labels-idx1-ubyte.gz",
                "t10k-labels.idx1-ubyte",
            ],
        )?,
    })
}

#[derive(Debug, Clone)]
pub struct MnistPaths {
    pub train_images: PathBuf,
    pub train_labels: PathBuf,
    pub test_images: PathBuf,
    pub test_labels: PathBuf,
}

/// Dataset root: `CTRLOPTIM_DATA_DIR` if set, else `./data`.
pub fn data_dir(cli_override: Option<&Path>) -> PathBuf {
    if let Some(p) = cli_override {
        return p.to_path_buf();
    }
    std::env::var_os(DATA_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("data"))
}

/// Loads MNIST train/test from a directory.
pub fn load_mnist(dir: &Path) -> Result<(Dataset, Dataset)> {
    let paths = find_mnist(dir).ok_or_else(|| {
        Error::Format(format!(
            "MNIST IDX files not found under {} (set {DATA_DIR_ENV} or pass --data-dir)",
            dir.display()
        ))
    })?;
    let mut train = load_idx(&paths.train_images, &paths.train_labels)?;
    train.name = "mnist-train".to_string();
    let mut test = load_idx(&paths.test_images, &paths.test_labels)?;
    test.name = "mnist-test".to_string();
    Ok((train, test))
}
