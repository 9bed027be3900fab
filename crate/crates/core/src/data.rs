//! Unpaired two-domain dataset ingestion: trainA/trainB/testA/testB folder
//! layout, [-1, 1] normalization, and epoch iteration.

use std::path::{Path, PathBuf};

use image::imageops::FilterType;
use image::RgbImage;
use ndarray::Array3;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const RECOGNIZED_EXTENSIONS: [&str; 3] = ["jpg", "jpeg", "png"];

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    fn folder(self, domain: char) -> String {
        match self {
            Split::Train => format!("train{domain}"),
            Split::Test => format!("test{domain}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct UnpairedDataset {
    pub root: PathBuf,
    pub split: Split,
    pub domain_a: Vec<PathBuf>,
    pub domain_b: Vec<PathBuf>,
    pub image_size: usize,
}

pub struct Sample<F: Scalar> {
    pub image_a: Array3<F>,
    pub image_b: Array3<F>,
    pub index_a: usize,
    pub index_b: usize,
}

/// List the raster images directly inside `dir`, sorted lexicographically.
pub fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Err(Error::dataset(dir, "expected folder is missing"));
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|e| e.to_str())
                    .map(|e| RECOGNIZED_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
                    .unwrap_or(false)
        })
        .collect();
    files.sort();
    Ok(files)
}

pub fn load_dataset(root: &Path, split: Split, image_size: usize) -> Result<UnpairedDataset> {
    let dir_a = root.join(split.folder('A'));
    let dir_b = root.join(split.folder('B'));
    let domain_a = list_images(&dir_a)?;
    let domain_b = list_images(&dir_b)?;
    if domain_a.is_empty() {
        return Err(Error::dataset(&dir_a, "no images found"));
    }
    if domain_b.is_empty() {
        return Err(Error::dataset(&dir_b, "no images found"));
    }
    Ok(UnpairedDataset {
        root: root.to_path_buf(),
        split,
        domain_a,
        domain_b,
        image_size,
    })
}

/// Decode a 3-channel raster image from disk.
pub fn load_rgb(path: &Path) -> Result<RgbImage> {
    let img = image::open(path)?;
    if img.color().channel_count() != 3 {
        return Err(Error::Format(format!(
            "{}: expected a 3-channel image, got {:?}",
            path.display(),
            img.color()
        )));
    }
    Ok(img.to_rgb8())
}

/// Resize to `image_size` square (bilinear) and map pixels to [-1, 1].
pub fn to_tensor<F: Scalar>(pixels: &RgbImage, image_size: usize) -> Array3<F> {
    let resized;
    let img = if pixels.dimensions() == (image_size as u32, image_size as u32) {
        pixels
    } else {
        resized = image::imageops::resize(
            pixels,
            image_size as u32,
            image_size as u32,
            FilterType::Triangle,
        );
        &resized
    };
    let scale = F::of_f64(1.0 / 127.5);
    let mut t = Array3::zeros((3, image_size, image_size));
    for (x, y, p) in img.enumerate_pixels() {
        for c in 0..3 {
            t[[c, y as usize, x as usize]] = F::of_f64(p.0[c] as f64) * scale - F::one();
        }
    }
    t
}

/// Inverse of `to_tensor`: clamp to [-1, 1] and quantize back to 8-bit RGB.
pub fn from_tensor<F: Scalar>(img: &Array3<F>) -> Result<RgbImage> {
    let (c, h, w) = img.dim();
    if c != 3 {
        return Err(Error::Format(format!("expected 3 channels, got {c}")));
    }
    let mut out = RgbImage::new(w as u32, h as u32);
    for (x, y, p) in out.enumerate_pixels_mut() {
        for ci in 0..3 {
            let v = img[[ci, y as usize, x as usize]]
                .as_f64()
                .clamp(-1.0, 1.0);
            p.0[ci] = ((v + 1.0) * 127.5).round() as u8;
        }
    }
    Ok(out)
}

/// One epoch over the dataset: the larger domain is visited exactly once in
/// shuffled order, the smaller wraps around its own shuffled order, and the
/// pairing is random. Deterministic given the seed.
pub struct EpochIter<'a, F: Scalar> {
    ds: &'a UnpairedDataset,
    order_a: Vec<usize>,
    order_b: Vec<usize>,
    pos: usize,
    len: usize,
    _marker: std::marker::PhantomData<F>,
}

impl<F: Scalar> Iterator for EpochIter<'_, F> {
    type Item = Result<Sample<F>>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.pos >= self.len {
            return None;
        }
        let index_a = self.order_a[self.pos % self.order_a.len()];
        let index_b = self.order_b[self.pos % self.order_b.len()];
        self.pos += 1;
        let load = |path: &Path| -> Result<Array3<F>> {
            Ok(to_tensor(&load_rgb(path)?, self.ds.image_size))
        };
        let sample = load(&self.ds.domain_a[index_a]).and_then(|image_a| {
            let image_b = load(&self.ds.domain_b[index_b])?;
            Ok(Sample {
                image_a,
                image_b,
                index_a,
                index_b,
            })
        });
        Some(sample)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let rem = self.len - self.pos;
        (rem, Some(rem))
    }
}

pub fn iterate_epoch<F: Scalar>(ds: &UnpairedDataset, seed: u64) -> EpochIter<'_, F> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut order_a: Vec<usize> = (0..ds.domain_a.len()).collect();
    let mut order_b: Vec<usize> = (0..ds.domain_b.len()).collect();
    order_a.shuffle(&mut rng);
    order_b.shuffle(&mut rng);
    let len = ds.domain_a.len().max(ds.domain_b.len());
    EpochIter {
        ds,
        order_a,
        order_b,
        pos: 0,
        len,
        _marker: std::marker::PhantomData,
    }
}

/// Epoch length: max(|A|, |B|).
pub fn epoch_len(ds: &UnpairedDataset) -> usize {
    ds.domain_a.len().max(ds.domain_b.len())
}
