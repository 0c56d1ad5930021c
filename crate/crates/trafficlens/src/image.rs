//! Byte blocks as 28×28 grayscale images and their on-disk containers.
//!
//! Datasets are stored in the MNIST-style IDX layout: an `idx3` file of
//! pixels, an `idx1` file of labels, and a `classes.txt` sidecar mapping
//! label indices to names (one per line, index = line number).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::nn::tensor::Tensor;
use crate::scalar::Scalar;

pub const IMAGE_SIDE: usize = 28;
pub const IMAGE_PIXELS: usize = IMAGE_SIDE * IMAGE_SIDE;

/// IDX magic for unsigned-byte rank-3 data (images).
pub const IDX3_MAGIC: u32 = 0x0000_0803;
/// IDX magic for unsigned-byte rank-1 data (labels).
pub const IDX1_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("byte block must be exactly {IMAGE_PIXELS} bytes, got {0}")]
    WrongLength(usize),
    #[error("dataset has no samples")]
    EmptyDataset,
    #[error("{0} classes cannot be labelled with one byte (max 255)")]
    TooManyClasses(usize),
    #[error("label index {index} out of range for {classes} classes")]
    LabelOutOfRange { index: u32, classes: usize },
    #[error("class name {0:?} must be non-empty and single-line")]
    InvalidClassName(String),
    #[error("bad IDX magic: expected {expected:#010x}, got {got:#010x}")]
    BadMagic { expected: u32, got: u32 },
    #[error("image count {images} does not match label count {labels}")]
    CountMismatch { images: u32, labels: u32 },
    #[error("file ends before the declared {0} samples")]
    Truncated(u32),
    #[error("expected 28x28 images, got {rows}x{cols}")]
    BadDimensions { rows: u32, cols: u32 },
    #[error("png encoding failed: {0}")]
    Png(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One 28×28 grayscale sample; byte `i` is the pixel at row `i / 28`,
/// column `i % 28`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageSample {
    pub pixels: [u8; IMAGE_PIXELS],
    /// Index into the dataset's class-name table.
    pub label_index: u32,
}

/// An ordered set of samples plus the class-name table their labels index.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ImageDataset {
    pub samples: Vec<ImageSample>,
    pub class_names: Vec<String>,
}

/// Reinterprets a 784-byte block as an image, byte-for-byte.
pub fn bytes_to_image(block: &[u8], label_index: u32) -> Result<ImageSample, ImageError> {
    let pixels: [u8; IMAGE_PIXELS] = block
        .try_into()
        .map_err(|_| ImageError::WrongLength(block.len()))?;
    Ok(ImageSample { pixels, label_index })
}

/// `1×28×28` training tensor with every pixel scaled to `[0, 1]` by `/255`.
pub fn to_normalized_tensor<T: Scalar>(sample: &ImageSample) -> Tensor<T> {
    let scale = T::one() / T::from_f64(255.0);
    let data = sample.pixels.iter().map(|&p| T::from_usize(p as usize) * scale).collect();
    Tensor::from_vec(&[1, IMAGE_SIDE, IMAGE_SIDE], data)
        .expect("pixel count matches the fixed shape")
}

/// The `classes.txt` sidecar next to an IDX image file.
pub fn classes_path(image_path: &Path) -> PathBuf {
    image_path.with_file_name("classes.txt")
}

pub(crate) fn validate(dataset: &ImageDataset) -> Result<(), ImageError> {
    if dataset.samples.is_empty() {
        return Err(ImageError::EmptyDataset);
    }
    if dataset.class_names.len() > 255 {
        return Err(ImageError::TooManyClasses(dataset.class_names.len()));
    }
    for name in &dataset.class_names {
        if name.is_empty() || name.contains('\n') || name.contains('\r') {
            return Err(ImageError::InvalidClassName(name.clone()));
        }
    }
    for s in &dataset.samples {
        if s.label_index as usize >= dataset.class_names.len() {
            return Err(ImageError::LabelOutOfRange {
                index: s.label_index,
                classes: dataset.class_names.len(),
            });
        }
    }
    Ok(())
}

/// Writes `<image_path>` (idx3), `<label_path>` (idx1) and the `classes.txt`
/// sidecar next to the image file. All integers are big-endian.
pub fn write_idx(
    dataset: &ImageDataset,
    image_path: &Path,
    label_path: &Path,
) -> Result<(), ImageError> {
    validate(dataset)?;
    let count = dataset.samples.len() as u32;

    let mut img = BufWriter::new(File::create(image_path)?);
    img.write_all(&IDX3_MAGIC.to_be_bytes())?;
    img.write_all(&count.to_be_bytes())?;
    img.write_all(&(IMAGE_SIDE as u32).to_be_bytes())?;
    img.write_all(&(IMAGE_SIDE as u32).to_be_bytes())?;
    for s in &dataset.samples {
        img.write_all(&s.pixels)?;
    }
    img.flush()?;

    let mut lab = BufWriter::new(File::create(label_path)?);
    lab.write_all(&IDX1_MAGIC.to_be_bytes())?;
    lab.write_all(&count.to_be_bytes())?;
    for s in &dataset.samples {
        lab.write_all(&[s.label_index as u8])?;
    }
    lab.flush()?;

    let mut names = BufWriter::new(File::create(classes_path(image_path))?);
    for name in &dataset.class_names {
        writeln!(names, "{name}")?;
    }
    names.flush()?;
    Ok(())
}

fn read_be_u32(r: &mut impl Read, declared: u32) -> Result<u32, ImageError> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => ImageError::Truncated(declared),
        _ => ImageError::Io(e),
    })?;
    Ok(u32::from_be_bytes(buf))
}

/// Reads a dataset back from the IDX pair plus the class-name sidecar.
///
/// Bytes beyond the declared sample count are tolerated and ignored, so a
/// reader can consume files with trailing padding; short files are an error.
pub fn read_idx(
    image_path: &Path,
    label_path: &Path,
    names_path: &Path,
) -> Result<ImageDataset, ImageError> {
    let mut img = BufReader::new(File::open(image_path)?);
    let magic = read_be_u32(&mut img, 0)?;
    if magic != IDX3_MAGIC {
        return Err(ImageError::BadMagic { expected: IDX3_MAGIC, got: magic });
    }
    let count = read_be_u32(&mut img, 0)?;
    let rows = read_be_u32(&mut img, count)?;
    let cols = read_be_u32(&mut img, count)?;
    if rows != IMAGE_SIDE as u32 || cols != IMAGE_SIDE as u32 {
        return Err(ImageError::BadDimensions { rows, cols });
    }

    let mut lab = BufReader::new(File::open(label_path)?);
    let lab_magic = read_be_u32(&mut lab, 0)?;
    if lab_magic != IDX1_MAGIC {
        return Err(ImageError::BadMagic { expected: IDX1_MAGIC, got: lab_magic });
    }
    let lab_count = read_be_u32(&mut lab, 0)?;
    if lab_count != count {
        return Err(ImageError::CountMismatch { images: count, labels: lab_count });
    }

    let class_names: Vec<String> = BufReader::new(File::open(names_path)?)
        .lines()
        .collect::<Result<_, _>>()?;

    let mut samples = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let mut pixels = [0u8; IMAGE_PIXELS];
        img.read_exact(&mut pixels).map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => ImageError::Truncated(count),
            _ => ImageError::Io(e),
        })?;
        let mut label = [0u8; 1];
        lab.read_exact(&mut label).map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => ImageError::Truncated(count),
            _ => ImageError::Io(e),
        })?;
        let label_index = label[0] as u32;
        if label_index as usize >= class_names.len() {
            return Err(ImageError::LabelOutOfRange {
                index: label_index,
                classes: class_names.len(),
            });
        }
        samples.push(ImageSample { pixels, label_index });
    }
    Ok(ImageDataset { samples, class_names })
}

/// Saves one sample as an 8-bit grayscale PNG with exact pixel values.
pub fn write_png(sample: &ImageSample, path: &Path) -> Result<(), ImageError> {
    let img = ::image::GrayImage::from_raw(
        IMAGE_SIDE as u32,
        IMAGE_SIDE as u32,
        sample.pixels.to_vec(),
    )
    .expect("buffer length matches the fixed dimensions");
    img.save_with_format(path, ::image::ImageFormat::Png)
        .map_err(|e| ImageError::Png(e.to_string()))
}
