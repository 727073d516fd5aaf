//! Fixtures shared by the benchmarks.

use pun_core::geometry::{anchors_for_view, angular_distance, sample_candidates, ANCHOR_N_SIDE, DEFAULT_RADIUS};
use pun_core::predictor::Predictor;
use pun_core::{Image, Result, UMap, UncertaintyKind, Viewpoint};

/// Deterministic pseudo-random values in `[0, 1)`.
fn hashed(i: usize, salt: u64) -> f64 {
    let mut x = (i as u64 ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15)).wrapping_add(0x632b_e59b_d9b4_e019);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    ((x ^ (x >> 31)) >> 11) as f64 / (1u64 << 53) as f64
}

/// `steps` maps at random views with random values.
pub fn history(steps: usize, seed: u64) -> Vec<UMap> {
    sample_candidates(steps, seed, DEFAULT_RADIUS)
        .unwrap()
        .into_iter()
        .enumerate()
        .map(|(t, v)| {
            let values = (0..48).map(|i| hashed(i + 48 * t, seed)).collect();
            UMap::new(values, anchors_for_view(&v, ANCHOR_N_SIDE).unwrap(), v, UncertaintyKind::Psnr, t).unwrap()
        })
        .collect()
}

pub fn candidates(n: usize, seed: u64) -> Vec<Viewpoint> {
    sample_candidates(n, seed, DEFAULT_RADIUS).unwrap()
}

/// Image-free predictor whose maps grow with distance from the source view.
pub struct DistancePredictor;

impl Predictor for DistancePredictor {
    fn needs_image(&self) -> bool {
        false
    }

    fn predict(&mut self, _: Option<&Image>, view: &Viewpoint, kind: UncertaintyKind) -> Result<UMap> {
        let anchors = anchors_for_view(view, ANCHOR_N_SIDE)?;
        let d = view.dir();
        let values = anchors.iter().map(|a| angular_distance(a, &d) / std::f64::consts::PI).collect();
        UMap::new(values, anchors, *view, kind, 0)
    }
}
