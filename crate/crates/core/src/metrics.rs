//! Image comparison metrics and the metric → uncertainty transform.
//!
//! All uncertainties share one scale: `[0, 1]`, higher meaning a worse
//! reconstruction.

use crate::error::{Error, Result};
use crate::image::Image;
use crate::umap::UncertaintyKind;

/// PSNR reported for (near) identical images.
pub const PSNR_CAP_DB: f64 = 100.0;
/// PSNR at or above which uncertainty is zero.
pub const PSNR_UNCERTAINTY_CAP_DB: f64 = 50.0;
const MSE_FLOOR: f64 = 1e-10;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

fn check_shapes(a: &Image, b: &Image) -> Result<()> {
    if !a.same_shape(b) {
        return Err(Error::InvalidArgument(format!(
            "image shapes differ: {}x{}x{} vs {}x{}x{}",
            a.width(),
            a.height(),
            a.channels(),
            b.width(),
            b.height(),
            b.channels()
        )));
    }
    Ok(())
}

pub fn mse(a: &Image, b: &Image) -> Result<f64> {
    check_shapes(a, b)?;
    let n = a.data().len();
    if n == 0 {
        return Ok(0.0);
    }
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| {
            let d = *x as f64 - *y as f64;
            d * d
        })
        .sum();
    Ok(sum / n as f64)
}

/// Peak signal-to-noise ratio with peak 1.0, capped at [`PSNR_CAP_DB`].
pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    Ok(psnr_from_mse(mse(a, b)?))
}

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse < MSE_FLOOR {
        PSNR_CAP_DB
    } else {
        10.0 * (1.0 / mse).log10()
    }
}

fn gaussian_window() -> [f64; SSIM_WINDOW] {
    let mut w = [0.0; SSIM_WINDOW];
    let c = (SSIM_WINDOW / 2) as f64;
    for (i, v) in w.iter_mut().enumerate() {
        let d = i as f64 - c;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    w
}

/// Separable "valid" filtering: output is `(w-10) × (h-10)`.
fn filter_valid(src: &[f64], w: usize, h: usize, k: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let ow = w + 1 - SSIM_WINDOW;
    let oh = h + 1 - SSIM_WINDOW;
    let mut tmp = vec![0.0; ow * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..ow {
            tmp[y * ow + x] = k.iter().zip(&row[x..x + SSIM_WINDOW]).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            let mut acc = 0.0;
            for (i, kv) in k.iter().enumerate() {
                acc += kv * tmp[(y + i) * ow + x];
            }
            out[y * ow + x] = acc;
        }
    }
    out
}

/// Mean structural similarity with an 11×11 Gaussian window (σ = 1.5),
/// evaluated over fully-covered window positions; channels averaged.
pub fn ssim(a: &Image, b: &Image) -> Result<f64> {
    check_shapes(a, b)?;
    let (w, h, ch) = (a.width(), a.height(), a.channels());
    if w.min(h) < SSIM_WINDOW {
        return Err(Error::InvalidArgument(format!(
            "SSIM needs images of at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {w}x{h}"
        )));
    }
    let k = gaussian_window();
    let c1 = (SSIM_K1 * 1.0f64).powi(2);
    let c2 = (SSIM_K2 * 1.0f64).powi(2);
    let mut total = 0.0;
    for c in 0..ch {
        let xs: Vec<f64> = a.data().iter().skip(c).step_by(ch).map(|v| *v as f64).collect();
        let ys: Vec<f64> = b.data().iter().skip(c).step_by(ch).map(|v| *v as f64).collect();
        let xx: Vec<f64> = xs.iter().map(|v| v * v).collect();
        let yy: Vec<f64> = ys.iter().map(|v| v * v).collect();
        let xy: Vec<f64> = xs.iter().zip(&ys).map(|(p, q)| p * q).collect();
        let mx = filter_valid(&xs, w, h, &k);
        let my = filter_valid(&ys, w, h, &k);
        let sxx = filter_valid(&xx, w, h, &k);
        let syy = filter_valid(&yy, w, h, &k);
        let sxy = filter_valid(&xy, w, h, &k);
        let n = mx.len();
        let mut acc = 0.0;
        for i in 0..n {
            let (ux, uy) = (mx[i], my[i]);
            let vx = sxx[i] - ux * ux;
            let vy = syy[i] - uy * uy;
            let cov = sxy[i] - ux * uy;
            acc += ((2.0 * ux * uy + c1) * (2.0 * cov + c2))
                / ((ux * ux + uy * uy + c1) * (vx + vy + c2));
        }
        total += acc / n as f64;
    }
    Ok(total / ch as f64)
}

/// Maps a raw metric value onto the shared `[0, 1]` uncertainty scale.
pub fn to_uncertainty(value: f64, kind: UncertaintyKind) -> Result<f64> {
    let u = match kind {
        UncertaintyKind::Psnr => 1.0 - value.clamp(0.0, PSNR_UNCERTAINTY_CAP_DB) / PSNR_UNCERTAINTY_CAP_DB,
        UncertaintyKind::Ssim => (1.0 - value).clamp(0.0, 1.0),
        UncertaintyKind::Mse => value.clamp(0.0, 1.0),
        UncertaintyKind::LpipsReserved => return Err(Error::UnsupportedKind(kind)),
    };
    Ok(if u.is_nan() { 1.0 } else { u })
}

/// Computes the metric for `kind` and transforms it to an uncertainty.
pub fn uncertainty_between(gt: &Image, synth: &Image, kind: UncertaintyKind) -> Result<f64> {
    let raw = match kind {
        UncertaintyKind::Psnr => psnr(gt, synth)?,
        UncertaintyKind::Ssim => ssim(gt, synth)?,
        UncertaintyKind::Mse => mse(gt, synth)?,
        UncertaintyKind::LpipsReserved => return Err(Error::UnsupportedKind(kind)),
    };
    to_uncertainty(raw, kind)
}
