use crate::error::{invalid, Result};
use crate::scalar::Scalar;

use super::perturbation::{check_pairs, Pair, Starred};

pub const DEFAULT_DYNAMIC_RANGE: f64 = 255.0;
const WINDOW_MAX: usize = 11;
const WINDOW_SIGMA: f64 = 1.5;
const K1: f64 = 0.01;
const K2: f64 = 0.03;

/// Normalized 2-D Gaussian window of side `k`, row-major over `(i1, i2)`.
fn gaussian_window(k: usize) -> Vec<f64> {
    let c = (k as f64 - 1.0) / 2.0;
    let g: Vec<f64> = (0..k).map(|i| (-(i as f64 - c).powi(2) / (2.0 * WINDOW_SIGMA * WINDOW_SIGMA)).exp()).collect();
    let mut w: Vec<f64> = (0..k * k).map(|n| g[n / k] * g[n % k]).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    w
}

/// SSIM of two `W×H×C` frames (mode-1 fastest): per channel, a Gaussian
/// window of side `min(11, W, H)` and `σ = 1.5` slides over all valid
/// positions; the local indices are averaged over positions and channels.
pub fn ssim_frame<S: Scalar>(a: &[S], b: &[S], frame_dims: [usize; 3], dynamic_range: f64) -> Result<f64> {
    let [w, h, channels] = frame_dims;
    if a.len() != w * h * channels || b.len() != a.len() {
        return invalid("frame lengths do not match the frame extents");
    }
    if !(dynamic_range > 0.0) {
        return invalid("dynamic range must be positive");
    }
    let k = WINDOW_MAX.min(w).min(h);
    if k < 2 {
        return invalid(format!("SSIM window side {k} is below 2"));
    }
    let c1 = (K1 * dynamic_range).powi(2);
    let c2 = (K2 * dynamic_range).powi(2);
    let window = gaussian_window(k);
    let mut total = 0.0;
    let mut count = 0usize;
    let mut pa = vec![0.0; k * k];
    let mut pb = vec![0.0; k * k];
    for c in 0..channels {
        let base = c * w * h;
        for j0 in 0..=h - k {
            for i0 in 0..=w - k {
                for dj in 0..k {
                    for di in 0..k {
                        let off = base + (i0 + di) + w * (j0 + dj);
                        pa[di * k + dj] = a[off].as_f64();
                        pb[di * k + dj] = b[off].as_f64();
                    }
                }
                let mu_a: f64 = window.iter().zip(&pa).map(|(g, x)| g * x).sum();
                let mu_b: f64 = window.iter().zip(&pb).map(|(g, x)| g * x).sum();
                let mut var_a = 0.0;
                let mut var_b = 0.0;
                let mut cov = 0.0;
                for n in 0..k * k {
                    let da = pa[n] - mu_a;
                    let db = pb[n] - mu_b;
                    var_a += window[n] * da * da;
                    var_b += window[n] * db * db;
                    cov += window[n] * da * db;
                }
                let num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2);
                let den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
                total += num / den;
                count += 1;
            }
        }
    }
    Ok(total / count as f64)
}

fn frame_dims(d: [usize; 4]) -> [usize; 3] {
    [d[0], d[1], d[2]]
}

/// Mean of [`ssim_frame`] over every frame of every sample.
pub fn mssim<S: Scalar>(pairs: &[Pair<'_, S>], dynamic_range: f64) -> Result<f64> {
    check_pairs(pairs)?;
    let mut total = 0.0;
    let mut frames = 0;
    for (c, a) in pairs {
        for t in 0..c.dims()[3] {
            total += ssim_frame(c.frame(t), a.frame(t), frame_dims(c.dims()), dynamic_range)?;
            frames += 1;
        }
    }
    Ok(total / frames as f64)
}

/// Mean SSIM over active frames only (max-abs perturbation above `eps`);
/// 1.0 with the empty flag when no frame is active.
pub fn ssim_star<S: Scalar>(pairs: &[Pair<'_, S>], eps: f64, dynamic_range: f64) -> Result<Starred> {
    check_pairs(pairs)?;
    if !(eps > 0.0) {
        return invalid("activity threshold must be positive");
    }
    let mut total = 0.0;
    let mut frames = 0;
    for (c, a) in pairs {
        for t in 0..c.dims()[3] {
            let active = c.frame(t).iter().zip(a.frame(t)).any(|(&x, &y)| (y - x).abs().as_f64() > eps);
            if active {
                total += ssim_frame(c.frame(t), a.frame(t), frame_dims(c.dims()), dynamic_range)?;
                frames += 1;
            }
        }
    }
    Ok(match frames {
        0 => Starred { value: 1.0, empty: true },
        n => Starred { value: total / n as f64, empty: false },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_is_normalized_and_symmetric() {
        let w = gaussian_window(11);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(w[0], w[120]);
        assert!(w[60] > w[59]);
    }

    #[test]
    fn constant_frames() {
        let a = vec![0.0; 8 * 8 * 3];
        let b = vec![255.0; 8 * 8 * 3];
        let c1 = (0.01f64 * 255.0).powi(2);
        let expected = c1 / (255.0f64.powi(2) + c1);
        let s = ssim_frame(&a, &b, [8, 8, 3], 255.0).unwrap();
        assert!((s - expected).abs() < 1e-12, "{s} vs {expected}");
    }

    #[test]
    fn tiny_window_rejected() {
        let a = vec![1.0; 5];
        assert!(ssim_frame(&a, &a, [5, 1, 1], 255.0).is_err());
        assert!(ssim_frame(&a, &a, [2, 2, 1], 255.0).is_err());
    }
}
