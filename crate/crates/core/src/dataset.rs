//! IDX-format dataset loading, pixel normalization, and the class-group
//! schedule that drives incremental training.
//!
//! The idx container is big-endian: a 32-bit magic, 32-bit dimension sizes,
//! then the raw payload. Images use magic `0x00000803` (count, rows, cols),
//! labels `0x00000801` (count). Gzip-compressed streams are accepted and
//! decompressed transparently.

use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

/// Standard file names of the four-file layout inside a dataset directory.
pub const TRAIN_IMAGES: &str = "train-images-idx3-ubyte";
pub const TRAIN_LABELS: &str = "train-labels-idx1-ubyte";
pub const TEST_IMAGES: &str = "t10k-images-idx3-ubyte";
pub const TEST_LABELS: &str = "t10k-labels-idx1-ubyte";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    Mnist,
    FashionMnist,
    Synthetic,
}

impl Source {
    pub fn as_str(&self) -> &'static str {
        match self {
            Source::Mnist => "mnist",
            Source::FashionMnist => "fashion-mnist",
            Source::Synthetic => "synthetic",
        }
    }
}

/// Images exactly as decoded from an idx stream: byte pixels, no scaling.
#[derive(Debug, Clone, PartialEq)]
pub struct RawImages {
    pub rows: usize,
    pub cols: usize,
    /// `count * rows * cols` bytes, image-major.
    pub pixels: Vec<u8>,
}

impl RawImages {
    pub fn count(&self) -> usize {
        if self.rows * self.cols == 0 {
            0
        } else {
            self.pixels.len() / (self.rows * self.cols)
        }
    }
}

fn gunzip_if_needed(bytes: &[u8]) -> Result<Vec<u8>> {
    if bytes.len() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b {
        let mut out = Vec::new();
        GzDecoder::new(bytes).read_to_end(&mut out)?;
        Ok(out)
    } else {
        Ok(bytes.to_vec())
    }
}

fn read_be_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or(Error::IdxTruncated {
            expected: offset + 4,
            found: bytes.len(),
        })
}

/// Parse an idx image stream (gzipped or plain) into raw byte images.
pub fn load_idx_images(bytes: &[u8]) -> Result<RawImages> {
    let bytes = gunzip_if_needed(bytes)?;
    let magic = read_be_u32(&bytes, 0)?;
    if magic != IMAGE_MAGIC {
        return Err(Error::IdxMagic {
            expected: IMAGE_MAGIC,
            found: magic,
        });
    }
    let count = read_be_u32(&bytes, 4)? as usize;
    let rows = read_be_u32(&bytes, 8)? as usize;
    let cols = read_be_u32(&bytes, 12)? as usize;
    let expected = count * rows * cols;
    let payload = &bytes[16..];
    if payload.len() != expected {
        return Err(Error::IdxTruncated {
            expected,
            found: payload.len(),
        });
    }
    Ok(RawImages {
        rows,
        cols,
        pixels: payload.to_vec(),
    })
}

/// Parse an idx label stream (gzipped or plain); labels must be in 0..=9.
pub fn load_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let bytes = gunzip_if_needed(bytes)?;
    let magic = read_be_u32(&bytes, 0)?;
    if magic != LABEL_MAGIC {
        return Err(Error::IdxMagic {
            expected: LABEL_MAGIC,
            found: magic,
        });
    }
    let count = read_be_u32(&bytes, 4)? as usize;
    let payload = &bytes[8..];
    if payload.len() != count {
        return Err(Error::IdxTruncated {
            expected: count,
            found: payload.len(),
        });
    }
    for (index, &value) in payload.iter().enumerate() {
        if value > 9 {
            return Err(Error::LabelRange { value, index });
        }
    }
    Ok(payload.to_vec())
}

/// Serialize raw images into idx bytes (the inverse of [`load_idx_images`]).
pub fn write_idx_images(images: &RawImages) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + images.pixels.len());
    out.extend_from_slice(&IMAGE_MAGIC.to_be_bytes());
    out.extend_from_slice(&(images.count() as u32).to_be_bytes());
    out.extend_from_slice(&(images.rows as u32).to_be_bytes());
    out.extend_from_slice(&(images.cols as u32).to_be_bytes());
    out.extend_from_slice(&images.pixels);
    out
}

/// Serialize labels into idx bytes (the inverse of [`load_idx_labels`]).
pub fn write_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

/// A labeled image collection. Pixels are stored as the original bytes and
/// exposed scaled to `[0,1]` (value / 255).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    source: Source,
    split: Split,
    rows: usize,
    cols: usize,
    pixels: Vec<u8>,
    labels: Vec<u8>,
}

impl Dataset {
    pub fn from_parts(
        source: Source,
        split: Split,
        images: RawImages,
        labels: Vec<u8>,
    ) -> Result<Self> {
        if images.count() != labels.len() {
            return Err(Error::Validation(format!(
                "{} images but {} labels",
                images.count(),
                labels.len()
            )));
        }
        Ok(Self {
            source,
            split,
            rows: images.rows,
            cols: images.cols,
            pixels: images.pixels,
            labels,
        })
    }

    /// Load one split from `dir` using the standard four-file layout.
    /// Falls back to the `.gz` variant of each file when the plain one is
    /// absent.
    pub fn load_dir(dir: &Path, source: Source, split: Split) -> Result<Self> {
        let (image_name, label_name) = match split {
            Split::Train => (TRAIN_IMAGES, TRAIN_LABELS),
            Split::Test => (TEST_IMAGES, TEST_LABELS),
        };
        let images = load_idx_images(&read_maybe_gz(dir, image_name)?)?;
        let labels = load_idx_labels(&read_maybe_gz(dir, label_name)?)?;
        Self::from_parts(source, split, images, labels)
    }

    pub fn source(&self) -> Source {
        self.source
    }

    pub fn split(&self) -> Split {
        self.split
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, i: usize) -> u8 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    /// Image `i` as a `[1, rows, cols]` tensor scaled to `[0,1]`.
    pub fn image_tensor(&self, i: usize) -> Tensor {
        let n = self.rows * self.cols;
        let data: Vec<f64> = self.pixels[i * n..(i + 1) * n]
            .iter()
            .map(|&p| f64::from(p) / 255.0)
            .collect();
        Tensor::new(vec![1, self.rows, self.cols], data).expect("image shape")
    }

    /// Copy image `i`, scaled to `[0,1]`, into `out` (length rows*cols).
    pub fn write_image_into(&self, i: usize, out: &mut [f64]) {
        let n = self.rows * self.cols;
        for (dst, &src) in out.iter_mut().zip(&self.pixels[i * n..(i + 1) * n]) {
            *dst = f64::from(src) / 255.0;
        }
    }

    /// Number of examples per class id 0..=9.
    pub fn class_counts(&self) -> [usize; 10] {
        let mut counts = [0usize; 10];
        for &l in &self.labels {
            counts[l as usize] += 1;
        }
        counts
    }

    /// The distinct class ids present, ascending.
    pub fn classes(&self) -> Vec<u8> {
        let counts = self.class_counts();
        (0u8..10).filter(|&c| counts[c as usize] > 0).collect()
    }

    /// Exactly the examples whose label is in `classes`, original order
    /// preserved. An empty result is an error: evaluating or training on
    /// nothing signals an upstream bug.
    pub fn subset_by_classes(&self, classes: &[u8]) -> Result<Dataset> {
        let mut member = [false; 10];
        for &c in classes {
            if c > 9 {
                return Err(Error::Validation(format!("class id {c} out of range")));
            }
            member[c as usize] = true;
        }
        let n = self.rows * self.cols;
        let mut pixels = Vec::new();
        let mut labels = Vec::new();
        for (i, &l) in self.labels.iter().enumerate() {
            if member[l as usize] {
                pixels.extend_from_slice(&self.pixels[i * n..(i + 1) * n]);
                labels.push(l);
            }
        }
        if labels.is_empty() {
            return Err(Error::EmptySubset(classes.to_vec()));
        }
        Ok(Dataset {
            source: self.source,
            split: self.split,
            rows: self.rows,
            cols: self.cols,
            pixels,
            labels,
        })
    }

    /// Keep at most `cap` examples per class (first occurrences win).
    /// Used to cut smoke-test runs down to size; `None` keeps everything.
    pub fn cap_per_class(&self, cap: Option<usize>) -> Dataset {
        let Some(cap) = cap else {
            return self.clone();
        };
        let n = self.rows * self.cols;
        let mut taken = [0usize; 10];
        let mut pixels = Vec::new();
        let mut labels = Vec::new();
        for (i, &l) in self.labels.iter().enumerate() {
            if taken[l as usize] < cap {
                taken[l as usize] += 1;
                pixels.extend_from_slice(&self.pixels[i * n..(i + 1) * n]);
                labels.push(l);
            }
        }
        Dataset {
            source: self.source,
            split: self.split,
            rows: self.rows,
            cols: self.cols,
            pixels,
            labels,
        }
    }

    pub fn to_raw_images(&self) -> RawImages {
        RawImages {
            rows: self.rows,
            cols: self.cols,
            pixels: self.pixels.clone(),
        }
    }
}

fn read_maybe_gz(dir: &Path, name: &str) -> Result<Vec<u8>> {
    let plain = dir.join(name);
    if plain.exists() {
        return Ok(std::fs::read(plain)?);
    }
    let gz = dir.join(format!("{name}.gz"));
    if gz.exists() {
        return Ok(std::fs::read(gz)?);
    }
    Err(Error::Validation(format!(
        "dataset file not found: {} (also tried .gz) in {}",
        name,
        dir.display()
    )))
}

/// Ordered partition of the class set into the groups trained one at a time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IncrementSchedule {
    groups: Vec<Vec<u8>>,
    group_size: usize,
}

impl IncrementSchedule {
    pub fn groups(&self) -> &[Vec<u8>] {
        &self.groups
    }

    pub fn group(&self, i: usize) -> &[u8] {
        &self.groups[i]
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn group_size(&self) -> usize {
        self.group_size
    }

    /// Classes covered by groups `0..=upto`, ascending.
    pub fn seen_classes(&self, upto: usize) -> Vec<u8> {
        let mut seen: Vec<u8> = self.groups[..=upto].iter().flatten().copied().collect();
        seen.sort_unstable();
        seen
    }
}

/// Chunk the class set into contiguous groups of `group_size` following
/// `order` (explicit permutation) or natural ascending order. The final
/// group may be smaller when the sizes do not divide evenly.
pub fn build_increments(
    class_ids: &[u8],
    group_size: usize,
    order: Option<&[u8]>,
) -> Result<IncrementSchedule> {
    if group_size == 0 {
        return Err(Error::Validation("group_size must be at least 1".into()));
    }
    let mut sorted_ids = class_ids.to_vec();
    sorted_ids.sort_unstable();
    sorted_ids.dedup();
    if sorted_ids.len() != class_ids.len() {
        return Err(Error::Validation("class_ids contains duplicates".into()));
    }
    let sequence: Vec<u8> = match order {
        Some(order) => {
            let mut check = order.to_vec();
            check.sort_unstable();
            if check != sorted_ids {
                return Err(Error::Validation(format!(
                    "order {:?} is not a permutation of the class set {:?}",
                    order, sorted_ids
                )));
            }
            order.to_vec()
        }
        None => sorted_ids,
    };
    let groups = sequence.chunks(group_size).map(<[u8]>::to_vec).collect();
    Ok(IncrementSchedule { groups, group_size })
}

/// Deterministic synthetic dataset: each class gets a smooth template and
/// every example is a seeded perturbation of its class template. Useful for
/// tests and smoke runs where the real files are not wanted.
pub fn synthetic(
    classes: &[u8],
    per_class: usize,
    rows: usize,
    cols: usize,
    split: Split,
    seed: u64,
) -> Dataset {
    let n = rows * cols;
    let mut pixels = Vec::with_capacity(classes.len() * per_class * n);
    let mut labels = Vec::with_capacity(classes.len() * per_class);
    for &class in classes {
        let mut template = vec![0.0f64; n];
        for y in 0..rows {
            for x in 0..cols {
                let fy = y as f64 / rows as f64;
                let fx = x as f64 / cols as f64;
                let c = f64::from(class);
                template[y * cols + x] = 0.5
                    + 0.5 * ((c + 1.0) * std::f64::consts::PI * fy).sin()
                        * ((c * 0.7 + 1.3) * std::f64::consts::PI * fx).cos();
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(
            seed ^ (u64::from(class) << 32) ^ if split == Split::Test { 0x5eed } else { 0 },
        );
        for _ in 0..per_class {
            for &t in &template {
                let noisy = (t + rng.gen_range(-0.15..0.15)).clamp(0.0, 1.0);
                pixels.push((noisy * 255.0).round() as u8);
            }
            labels.push(class);
        }
    }
    Dataset {
        source: Source::Synthetic,
        split,
        rows,
        cols,
        pixels,
        labels,
    }
}
