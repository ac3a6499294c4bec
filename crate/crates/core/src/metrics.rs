//! SSIM, PSNR and relative error for images with dynamic range 1.

use thiserror::Error;

use crate::field::{FieldError, ScalarField};

/// Side of the SSIM window.
pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;
/// Dynamic range of every metric.
pub const DYNAMIC_RANGE: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("reference image has zero norm")]
    ZeroReference,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityTriple {
    pub ssim: f64,
    /// `+∞` for identical images.
    pub psnr: f64,
    pub rel_error: f64,
}

impl QualityTriple {
    pub fn measure(u: &ScalarField, reference: &ScalarField) -> Result<Self, MetricError> {
        Ok(Self {
            ssim: ssim(u, reference)?,
            psnr: psnr(u, reference)?,
            rel_error: rel_error(u, reference)?,
        })
    }
}

/// Normalised 1-D Gaussian taps of length `len`.
pub(crate) fn gaussian_taps(len: usize, sigma: f64) -> Vec<f64> {
    let c = (len as f64 - 1.0) / 2.0;
    let taps: Vec<f64> = (0..len)
        .map(|k| (-(k as f64 - c).powi(2) / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / s).collect()
}

/// Separable "valid" correlation of a row-major `h × w` image.
fn filter_valid(data: &[f64], h: usize, w: usize, ti: &[f64], tj: &[f64]) -> (Vec<f64>, usize, usize) {
    let (oh, ow) = (h + 1 - ti.len(), w + 1 - tj.len());
    let mut rows = vec![0.0; h * ow];
    for i in 0..h {
        let src = &data[i * w..(i + 1) * w];
        for j in 0..ow {
            rows[i * ow + j] = tj.iter().zip(&src[j..]).map(|(t, v)| t * v).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for i in 0..oh {
        for (k, t) in ti.iter().enumerate() {
            let src = &rows[(i + k) * ow..(i + k + 1) * ow];
            for (o, v) in out[i * ow..(i + 1) * ow].iter_mut().zip(src) {
                *o += t * v;
            }
        }
    }
    (out, oh, ow)
}

/// Mean SSIM over all window positions fully inside the image.
///
/// The window is an `11 × 11` Gaussian with `σ = 1.5`; along an axis shorter
/// than 11 pixels it is truncated to that length and renormalised.
pub fn ssim(u: &ScalarField, reference: &ScalarField) -> Result<f64, MetricError> {
    u.check_same_shape(reference)?;
    let (h, w) = (u.height(), u.width());
    let ti = gaussian_taps(SSIM_WINDOW.min(h), SSIM_SIGMA);
    let tj = gaussian_taps(SSIM_WINDOW.min(w), SSIM_SIGMA);
    let x = u.to_values();
    let y = reference.to_values();
    let prod = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).collect::<Vec<_>>();
    let (mx, oh, ow) = filter_valid(&x, h, w, &ti, &tj);
    let (my, ..) = filter_valid(&y, h, w, &ti, &tj);
    let (xx, ..) = filter_valid(&prod(&x, &x), h, w, &ti, &tj);
    let (yy, ..) = filter_valid(&prod(&y, &y), h, w, &ti, &tj);
    let (xy, ..) = filter_valid(&prod(&x, &y), h, w, &ti, &tj);
    let c1 = (SSIM_K1 * DYNAMIC_RANGE).powi(2);
    let c2 = (SSIM_K2 * DYNAMIC_RANGE).powi(2);
    let total: f64 = (0..oh * ow)
        .map(|k| {
            let (a, b) = (mx[k], my[k]);
            let vx = xx[k] - a * a;
            let vy = yy[k] - b * b;
            let cxy = xy[k] - a * b;
            ((2.0 * a * b + c1) * (2.0 * cxy + c2)) / ((a * a + b * b + c1) * (vx + vy + c2))
        })
        .sum();
    Ok(total / (oh * ow) as f64)
}

pub fn mse(u: &ScalarField, reference: &ScalarField) -> Result<f64, MetricError> {
    u.check_same_shape(reference)?;
    let s: f64 = u.values().zip(reference.values()).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(s / u.shape().len() as f64)
}

/// `10·log10(1/MSE)` in dB; `+∞` when the images agree.
pub fn psnr(u: &ScalarField, reference: &ScalarField) -> Result<f64, MetricError> {
    let m = mse(u, reference)?;
    if m == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (DYNAMIC_RANGE * DYNAMIC_RANGE / m).log10())
}

/// `‖u − ref‖₂ / ‖ref‖₂`.
pub fn rel_error(u: &ScalarField, reference: &ScalarField) -> Result<f64, MetricError> {
    u.check_same_shape(reference)?;
    let r = reference.l2_norm();
    if r == 0.0 {
        return Err(MetricError::ZeroReference);
    }
    Ok((u - reference).l2_norm() / r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Shape;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, seed: u64) -> ScalarField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ScalarField::random_uniform(Shape::square(n).unwrap(), 0.0, 1.0, &mut rng)
    }

    /// Direct per-window evaluation with the full 2-D kernel.
    #[allow(clippy::needless_range_loop)]
    fn ssim_naive(u: &ScalarField, r: &ScalarField) -> f64 {
        let (h, w) = (u.height(), u.width());
        let (wh, ww) = (SSIM_WINDOW.min(h), SSIM_WINDOW.min(w));
        let gauss = |len: usize, k: usize| {
            let c = (len as f64 - 1.0) / 2.0;
            (-(k as f64 - c).powi(2) / (2.0 * 1.5 * 1.5)).exp()
        };
        let mut kernel = vec![vec![0.0; ww]; wh];
        let mut s = 0.0;
        for a in 0..wh {
            for b in 0..ww {
                kernel[a][b] = gauss(wh, a) * gauss(ww, b);
                s += kernel[a][b];
            }
        }
        let (c1, c2) = (0.01f64.powi(2), 0.03f64.powi(2));
        let mut total = 0.0;
        let mut count = 0;
        for i in 0..=h - wh {
            for j in 0..=w - ww {
                let (mut mx, mut my) = (0.0, 0.0);
                for a in 0..wh {
                    for b in 0..ww {
                        let g = kernel[a][b] / s;
                        mx += g * u.value(i + a, j + b);
                        my += g * r.value(i + a, j + b);
                    }
                }
                let (mut vx, mut vy, mut cxy) = (0.0, 0.0, 0.0);
                for a in 0..wh {
                    for b in 0..ww {
                        let g = kernel[a][b] / s;
                        let dx = u.value(i + a, j + b) - mx;
                        let dy = r.value(i + a, j + b) - my;
                        vx += g * dx * dx;
                        vy += g * dy * dy;
                        cxy += g * dx * dy;
                    }
                }
                total += ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
                count += 1;
            }
        }
        total / count as f64
    }

    #[test]
    fn ssim_examples() {
        let r = random(24, 1);
        assert!((ssim(&r, &r).unwrap() - 1.0).abs() <= 1e-12);

        let shifted = r.map(|p| [p[0] + 0.5]);
        let v = ssim(&shifted, &r).unwrap();
        assert!(v < 1.0);
        assert!((v - ssim_naive(&shifted, &r)).abs() <= 1e-10);

        let inverted = r.map(|p| [1.0 - p[0]]);
        let v = ssim(&inverted, &r).unwrap();
        let oracle = ssim_naive(&inverted, &r);
        assert!(v < 0.0 && oracle < 0.0);
        assert!((v - oracle).abs() <= 1e-10);
    }

    #[test]
    fn ssim_small_and_rectangular() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = ScalarField::random_uniform(Shape::new(6, 17).unwrap(), 0.0, 1.0, &mut rng);
        let b = ScalarField::random_uniform(Shape::new(6, 17).unwrap(), 0.0, 1.0, &mut rng);
        assert!((ssim(&a, &b).unwrap() - ssim_naive(&a, &b)).abs() <= 1e-10);
        assert!(ssim(&a, &random(6, 1)).is_err());
    }

    #[test]
    fn psnr_examples() {
        let s = Shape::square(4).unwrap();
        let z = ScalarField::zeros(s);
        assert!((psnr(&ScalarField::constant(s, [0.1]), &z).unwrap() - 20.0).abs() <= 1e-12);
        assert_eq!(psnr(&ScalarField::constant(s, [1.0]), &z).unwrap(), 0.0);
        assert_eq!(psnr(&z, &z).unwrap(), f64::INFINITY);
        let (a, b) = (random(16, 2), random(16, 3));
        let mut total = 0.0;
        for i in 0..16 {
            for j in 0..16 {
                total += (a.value(i, j) - b.value(i, j)).powi(2);
            }
        }
        let oracle = 10.0 * (1.0 / (total / 256.0)).log10();
        assert!((psnr(&a, &b).unwrap() - oracle).abs() <= 1e-12);
    }

    #[test]
    fn rel_error_examples() {
        let r = random(16, 4);
        assert_eq!(rel_error(&r, &r).unwrap(), 0.0);
        assert!((rel_error(&r.scaled(2.0), &r).unwrap() - 1.0).abs() <= 1e-15);
        let u = random(16, 5);
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..16 {
            for j in 0..16 {
                num += (u.value(i, j) - r.value(i, j)).powi(2);
                den += r.value(i, j).powi(2);
            }
        }
        assert!((rel_error(&u, &r).unwrap() - (num / den).sqrt()).abs() <= 1e-12);
        let z = ScalarField::zeros(r.shape());
        assert_eq!(rel_error(&u, &z), Err(MetricError::ZeroReference));
    }

    #[test]
    fn triple_of_identical_images() {
        let r = random(12, 6);
        let q = QualityTriple::measure(&r, &r).unwrap();
        assert!((q.ssim - 1.0).abs() < 1e-12);
        assert_eq!(q.psnr, f64::INFINITY);
        assert_eq!(q.rel_error, 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn ssim_is_symmetric(seed in 0u64..1000) {
            let (a, b) = (random(16, seed), random(16, seed + 1000));
            let d = ssim(&a, &b).unwrap() - ssim(&b, &a).unwrap();
            prop_assert!(d.abs() <= 1e-12);
            let v = ssim(&a, &b).unwrap();
            prop_assert!((-1.0..=1.0).contains(&v));
        }

        #[test]
        fn psnr_decreases_with_mse(e1 in 1e-4f64..0.5, factor in 1.01f64..10.0) {
            let s = Shape::square(4).unwrap();
            let z = ScalarField::zeros(s);
            let p1 = psnr(&ScalarField::constant(s, [e1.sqrt()]), &z).unwrap();
            let p2 = psnr(&ScalarField::constant(s, [(e1 * factor).sqrt()]), &z).unwrap();
            prop_assert!(p2 < p1);
        }

        #[test]
        fn rel_error_is_homogeneous(seed in 0u64..1000, t in -5.0f64..5.0) {
            let (u, r) = (random(8, seed), random(8, seed + 1));
            let d = &u - &r;
            let scaled = &r + &d.scaled(t);
            let lhs = rel_error(&scaled, &r).unwrap();
            let rhs = t.abs() * rel_error(&u, &r).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs));
        }
    }
}
