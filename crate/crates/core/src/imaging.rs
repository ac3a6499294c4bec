//! Image files, seeded noise and synthetic test images.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use image::{DynamicImage, ImageBuffer, ImageFormat, Luma};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::field::{FieldError, ScalarField, Shape};

/// Header of the raw-field sidecar format.
pub const SIDECAR_MAGIC: &[u8; 8] = b"VOSFLD01";

#[derive(Debug, Error)]
pub enum ImagingError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("image codec error: {0}")]
    Codec(#[from] image::ImageError),
    #[error("unsupported image format: {0}")]
    Unsupported(String),
    #[error("malformed field file: {0}")]
    Malformed(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("noise variance must be finite and nonnegative, got {0}")]
    NegativeVariance(f64),
    #[error("invalid synthetic image: {0}")]
    InvalidSynthetic(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BitDepth {
    #[default]
    Eight,
    Sixteen,
}

impl BitDepth {
    fn max_value(self) -> f64 {
        match self {
            Self::Eight => 255.0,
            Self::Sixteen => 65535.0,
        }
    }
}

fn format_for(path: &Path) -> Result<ImageFormat, ImagingError> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default();
    match ext.as_str() {
        "png" => Ok(ImageFormat::Png),
        "pgm" | "pnm" => Ok(ImageFormat::Pnm),
        _ => Err(ImagingError::Unsupported(path.display().to_string())),
    }
}

/// Loads a grayscale PNG or PGM, scaled to `[0, 1]`. Colour images are
/// converted to luma.
pub fn load_image(path: impl AsRef<Path>) -> Result<ScalarField, ImagingError> {
    let path = path.as_ref();
    let format = format_for(path)?;
    let reader = BufReader::new(File::open(path)?);
    let img = image::load(reader, format)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let shape = Shape::new(h, w)?;
    let values: Vec<f64> = match img {
        DynamicImage::ImageLuma8(b) => b.into_raw().into_iter().map(|v| v as f64 / 255.0).collect(),
        DynamicImage::ImageLuma16(b) => b.into_raw().into_iter().map(|v| v as f64 / 65535.0).collect(),
        other => {
            log::warn!("{}: converting colour image to grayscale", path.display());
            other.into_luma16().into_raw().into_iter().map(|v| v as f64 / 65535.0).collect()
        }
    };
    Ok(ScalarField::from_values(shape, values)?)
}

/// Quantises `v ∈ [0, 1]` to `0..=max`, rounding halves up.
fn quantize(v: f64, max: f64) -> f64 {
    (v.clamp(0.0, 1.0) * max + 0.5).floor().min(max)
}

/// Saves as PNG or binary PGM, chosen by extension. Values are clamped to
/// `[0, 1]` and rounded half up.
pub fn save_image(field: &ScalarField, path: impl AsRef<Path>, depth: BitDepth) -> Result<(), ImagingError> {
    let path = path.as_ref();
    let format = format_for(path)?;
    let (w, h) = (field.width() as u32, field.height() as u32);
    let max = depth.max_value();
    let img = match depth {
        BitDepth::Eight => {
            let raw = field.values().map(|v| quantize(v, max) as u8).collect();
            DynamicImage::ImageLuma8(ImageBuffer::<Luma<u8>, _>::from_raw(w, h, raw).expect("buffer size"))
        }
        BitDepth::Sixteen => {
            let raw = field.values().map(|v| quantize(v, max) as u16).collect();
            DynamicImage::ImageLuma16(ImageBuffer::<Luma<u16>, _>::from_raw(w, h, raw).expect("buffer size"))
        }
    };
    let mut out = BufWriter::new(File::create(path)?);
    img.write_to(&mut out, format)?;
    out.flush()?;
    Ok(())
}

/// Writes the exact values: magic, `u32` width, `u32` height, then `f64`
/// samples, all little-endian and row-major.
pub fn write_field(field: &ScalarField, mut out: impl Write) -> Result<(), ImagingError> {
    out.write_all(SIDECAR_MAGIC)?;
    let dim = |n: usize| u32::try_from(n).map_err(|_| ImagingError::Malformed("dimension exceeds u32".into()));
    out.write_all(&dim(field.width())?.to_le_bytes())?;
    out.write_all(&dim(field.height())?.to_le_bytes())?;
    for v in field.values() {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_field(mut input: impl Read) -> Result<ScalarField, ImagingError> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != SIDECAR_MAGIC {
        return Err(ImagingError::Malformed("bad magic".into()));
    }
    let mut word = [0u8; 4];
    input.read_exact(&mut word)?;
    let w = u32::from_le_bytes(word) as usize;
    input.read_exact(&mut word)?;
    let h = u32::from_le_bytes(word) as usize;
    let shape = Shape::new(h, w)?;
    let mut data = Vec::with_capacity(shape.len());
    let mut buf = [0u8; 8];
    for _ in 0..shape.len() {
        input
            .read_exact(&mut buf)
            .map_err(|_| ImagingError::Malformed("truncated data".into()))?;
        data.push(f64::from_le_bytes(buf));
    }
    if input.read(&mut buf)? != 0 {
        return Err(ImagingError::Malformed("trailing bytes".into()));
    }
    Ok(ScalarField::from_values(shape, data)?)
}

pub fn save_field(field: &ScalarField, path: impl AsRef<Path>) -> Result<(), ImagingError> {
    let mut out = BufWriter::new(File::create(path)?);
    write_field(field, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn load_field(path: impl AsRef<Path>) -> Result<ScalarField, ImagingError> {
    read_field(BufReader::new(File::open(path)?))
}

/// Loads a sidecar (`.vosf`) or an image file by extension.
pub fn load_any(path: impl AsRef<Path>) -> Result<ScalarField, ImagingError> {
    let path = path.as_ref();
    match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("vosf") => load_field(path),
        _ => load_image(path),
    }
}

/// Additive Gaussian noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub mean: f64,
    pub variance: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(mean: f64, variance: f64, seed: u64) -> Result<Self, ImagingError> {
        if !(variance.is_finite() && variance >= 0.0) || !mean.is_finite() {
            return Err(ImagingError::NegativeVariance(variance));
        }
        Ok(Self { mean, variance, seed })
    }

    pub fn zero_mean(variance: f64, seed: u64) -> Result<Self, ImagingError> {
        Self::new(0.0, variance, seed)
    }
}

/// `u + n` with `n ~ N(mean, variance)` i.i.d. from a ChaCha8 stream; not
/// clamped.
pub fn add_gaussian_noise(u: &ScalarField, spec: &NoiseSpec) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let normal = Normal::new(spec.mean, spec.variance.sqrt()).expect("validated variance");
    u.map(|p| [p[0] + normal.sample(&mut rng)])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SyntheticKind {
    /// An affine ramp with a centred square of side `size/2` carrying a
    /// different affine function.
    PiecewiseAffineSquare,
    /// `a·x1 + b·x2 + c`, not normalised.
    AffinePlane { a: f64, b: f64, c: f64 },
    RadialQuadratic,
    SaddleQuadratic,
    ProductQuadratic,
    /// Two crossing plane waves, `frequency` in radians per unit length.
    Harmonic { frequency: f64 },
}

impl SyntheticKind {
    pub fn cli_name(&self) -> &'static str {
        match self {
            Self::PiecewiseAffineSquare => "affine",
            Self::AffinePlane { .. } => "plane",
            Self::RadialQuadratic => "radial",
            Self::SaddleQuadratic => "saddle",
            Self::ProductQuadratic => "product",
            Self::Harmonic { .. } => "harmonic",
        }
    }
}

impl FromStr for SyntheticKind {
    type Err = ImagingError;

    fn from_str(s: &str) -> Result<Self, ImagingError> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "affine" | "piecewise-affine" => Self::PiecewiseAffineSquare,
            "plane" => Self::AffinePlane { a: 0.3, b: 0.2, c: 0.5 },
            "radial" => Self::RadialQuadratic,
            "saddle" => Self::SaddleQuadratic,
            "product" => Self::ProductQuadratic,
            "harmonic" | "texture" => Self::Harmonic { frequency: 24.0 },
            _ => return Err(ImagingError::InvalidSynthetic(format!("unknown kind '{s}'"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub kind: SyntheticKind,
    /// Edge length of the square image.
    pub size: usize,
}

impl SyntheticSpec {
    pub fn new(kind: SyntheticKind, size: usize) -> Self {
        Self { kind, size }
    }
}

/// Centred coordinates `(x1, x2)` of pixel `(i, j)` with one spacing for
/// both axes, chosen so the longer axis spans `[−1, 1]`.
pub fn centered_coordinates(shape: Shape, i: usize, j: usize) -> (f64, f64) {
    let h = 2.0 / (shape.height.max(shape.width) - 1) as f64;
    (
        (i as f64 - (shape.height - 1) as f64 / 2.0) * h,
        (j as f64 - (shape.width - 1) as f64 / 2.0) * h,
    )
}

fn normalized(f: ScalarField) -> ScalarField {
    let (lo, hi) = f.min_max();
    if hi == lo {
        return f.map(|_| [0.0]);
    }
    f.map(|p| [(p[0] - lo) / (hi - lo)])
}

pub fn synthesize(spec: &SyntheticSpec) -> Result<ScalarField, ImagingError> {
    let n = spec.size;
    if matches!(spec.kind, SyntheticKind::PiecewiseAffineSquare) && n < 8 {
        return Err(ImagingError::InvalidSynthetic(format!("piecewise affine square needs size >= 8, got {n}")));
    }
    let shape = Shape::square(n)?;
    let at = |g: &dyn Fn(f64, f64) -> f64| {
        ScalarField::from_scalar_fn(shape, |i, j| {
            let (x1, x2) = centered_coordinates(shape, i, j);
            g(x1, x2)
        })
    };
    Ok(match spec.kind {
        SyntheticKind::PiecewiseAffineSquare => {
            let (lo, hi) = (n / 4, n / 4 + n / 2);
            normalized(ScalarField::from_scalar_fn(shape, |i, j| {
                let (x1, x2) = centered_coordinates(shape, i, j);
                let inside = (lo..hi).contains(&i) && (lo..hi).contains(&j);
                if inside {
                    1.0 - 0.4 * x1 + 0.5 * x2
                } else {
                    0.3 * x1 + 0.2 * x2
                }
            }))
        }
        SyntheticKind::AffinePlane { a, b, c } => at(&|x1, x2| a * x1 + b * x2 + c),
        SyntheticKind::RadialQuadratic => normalized(at(&|x1, x2| x1 * x1 + x2 * x2)),
        SyntheticKind::SaddleQuadratic => normalized(at(&|x1, x2| x1 * x1 - x2 * x2)),
        SyntheticKind::ProductQuadratic => normalized(at(&|x1, x2| x1 * x2)),
        SyntheticKind::Harmonic { frequency } => {
            let (c, s) = (0.6f64, 0.8f64);
            normalized(at(&|x1, x2| (frequency * x1).sin() + (0.6 * frequency * (c * x1 + s * x2)).sin()))
        }
    })
}
