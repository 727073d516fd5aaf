//! One selection round: candidates interpolated against the map history,
//! redundancy filtering, aggregation and argmax.

use rayon::prelude::*;

use crate::avs::interpolate::interpolate;
use crate::avs::policy::{AggregatePolicy, FilterPolicy};
use crate::error::{Error, Result};
use crate::geometry::{angular_distance, view_frame, UnitDir, Viewpoint};
use crate::umap::UMap;

/// Floor applied to each factor of the product aggregate.
pub const PRODUCT_FLOOR: f64 = 1e-12;
/// Sample points on the neighbour ring used by the diff aggregate.
pub const DIFF_RING_POINTS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    pub viewpoints: Vec<Viewpoint>,
    /// `values[i][s]` is candidate `i` interpolated in the map of step `s`.
    pub values: Vec<Vec<f64>>,
    /// Per-candidate neighbour mean in the latest map. Only filled for the
    /// diff aggregate.
    pub neighbor_mean: Vec<f64>,
    pub alive: Vec<bool>,
    pub filter_exhausted: bool,
}

impl CandidateSet {
    /// All candidates start alive.
    pub fn new(viewpoints: Vec<Viewpoint>, values: Vec<Vec<f64>>, neighbor_mean: Vec<f64>) -> Result<Self> {
        let n = viewpoints.len();
        if n == 0 {
            return Err(Error::InvalidArgument("candidate set is empty".into()));
        }
        if values.len() != n || !(neighbor_mean.is_empty() || neighbor_mean.len() == n) {
            return Err(Error::InvalidArgument("candidate arrays disagree in length".into()));
        }
        let steps = values[0].len();
        if steps == 0 || values.iter().any(|v| v.len() != steps) {
            return Err(Error::InvalidArgument("every candidate needs a value for each step".into()));
        }
        if values.iter().flatten().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidArgument("interpolated values must lie in [0, 1]".into()));
        }
        if neighbor_mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("neighbour means must be finite".into()));
        }
        Ok(CandidateSet { viewpoints, values, neighbor_mean, alive: vec![true; n], filter_exhausted: false })
    }

    /// Interpolates every candidate against every map in `history`.
    pub fn from_history(viewpoints: Vec<Viewpoint>, history: &[UMap], agg: AggregatePolicy) -> Result<Self> {
        let Some(current) = history.last() else {
            return Err(Error::InvalidArgument("map history is empty".into()));
        };
        let values: Vec<Vec<f64>> = viewpoints
            .par_iter()
            .map(|v| {
                let d = v.dir();
                history.iter().map(|u| interpolate(u, &d)).collect()
            })
            .collect();
        let neighbor_mean = match agg {
            AggregatePolicy::NeighborDiff { radius_deg } => viewpoints
                .par_iter()
                .map(|v| {
                    let ring = ring_dirs(&v.dir(), radius_deg.to_radians(), DIFF_RING_POINTS);
                    ring.iter().map(|d| interpolate(current, d)).sum::<f64>() / ring.len() as f64
                })
                .collect(),
            _ => Vec::new(),
        };
        CandidateSet::new(viewpoints, values, neighbor_mean)
    }

    pub fn len(&self) -> usize {
        self.viewpoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.viewpoints.is_empty()
    }

    pub fn steps(&self) -> usize {
        self.values[0].len()
    }

    pub fn alive_count(&self) -> usize {
        self.alive.iter().filter(|a| **a).count()
    }

    /// Aggregate score of candidate `i`.
    pub fn score(&self, i: usize, agg: AggregatePolicy) -> Result<f64> {
        let context = match agg {
            AggregatePolicy::NeighborDiff { .. } => Some(*self.neighbor_mean.get(i).ok_or_else(|| {
                Error::InvalidArgument("diff aggregate needs neighbour means".into())
            })?),
            _ => None,
        };
        Ok(aggregate(&self.values[i], agg, context))
    }
}

/// `n` directions at angle `radius` around `center`, evenly spaced.
pub fn ring_dirs(center: &UnitDir, radius: f64, n: usize) -> Vec<UnitDir> {
    let frame = view_frame(center);
    let (sr, cr) = radius.sin_cos();
    (0..n)
        .map(|k| {
            let phi = std::f64::consts::TAU * k as f64 / n as f64;
            let v = frame.forward.as_vector() * cr
                + (frame.right.as_vector() * phi.cos() + frame.up.as_vector() * phi.sin()) * sr;
            UnitDir::new_unchecked(v.normalize())
        })
        .collect()
}

/// Marks redundant candidates dead. When nothing survives every candidate
/// is revived and `filter_exhausted` is set.
pub fn filter_redundant(c: &mut CandidateSet, selected: &[Viewpoint], policy: FilterPolicy) {
    let n = c.len();
    c.alive = vec![true; n];
    c.filter_exhausted = false;
    match policy {
        FilterPolicy::Disable => {}
        FilterPolicy::SmallThreshold { threshold } => {
            for (alive, vals) in c.alive.iter_mut().zip(&c.values) {
                *alive = !vals.iter().any(|v| *v < threshold);
            }
        }
        FilterPolicy::Top32 { count } => {
            let mut order: Vec<usize> = (0..n).collect();
            for s in 0..c.steps() {
                order.sort_by(|&a, &b| c.values[a][s].total_cmp(&c.values[b][s]).then(a.cmp(&b)));
                for &i in order.iter().take(count) {
                    c.alive[i] = false;
                }
            }
        }
        FilterPolicy::SingleAngular { min_sep_deg } => {
            let limit = min_sep_deg.to_radians();
            let sel: Vec<UnitDir> = selected.iter().map(Viewpoint::dir).collect();
            for (alive, v) in c.alive.iter_mut().zip(&c.viewpoints) {
                let d = v.dir();
                *alive = !sel.iter().any(|s| angular_distance(s, &d) < limit);
            }
        }
    }
    if !c.alive.iter().any(|a| *a) {
        c.alive = vec![true; n];
        c.filter_exhausted = true;
    }
}

/// Scores one candidate's history. `neighbor_mean` is only read by the
/// diff aggregate.
pub fn aggregate(values: &[f64], policy: AggregatePolicy, neighbor_mean: Option<f64>) -> f64 {
    let last = values.last().copied().unwrap_or(0.0);
    match policy {
        AggregatePolicy::ProductAll => values.iter().map(|v| v.max(PRODUCT_FLOOR).ln()).sum::<f64>().exp(),
        AggregatePolicy::LastOnly => last,
        AggregatePolicy::NeighborDiff { .. } => last - neighbor_mean.unwrap_or(last),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    pub index: usize,
    pub score: f64,
}

/// Highest-scoring alive candidate; ties go to the lowest index.
pub fn argmax_alive(c: &CandidateSet, agg: AggregatePolicy) -> Result<Selection> {
    let mut best: Option<Selection> = None;
    for i in (0..c.len()).filter(|&i| c.alive[i]) {
        let score = c.score(i, agg)?;
        if best.is_none_or(|b| score > b.score) {
            best = Some(Selection { index: i, score });
        }
    }
    best.ok_or_else(|| Error::InvalidArgument("no alive candidate".into()))
}

/// Filters `c` in place, then picks the argmax.
pub fn select_next(
    c: &mut CandidateSet,
    selected: &[Viewpoint],
    filter: FilterPolicy,
    agg: AggregatePolicy,
) -> Result<Selection> {
    filter_redundant(c, selected, filter);
    argmax_alive(c, agg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::sample_candidates;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn set(values: Vec<Vec<f64>>) -> CandidateSet {
        let n = values.len();
        CandidateSet::new(sample_candidates(n, 0, 2.73).unwrap(), values, vec![0.0; n]).unwrap()
    }

    #[test]
    fn threshold_kills_on_any_step() {
        let mut c = set(vec![vec![0.05, 0.9], vec![0.5, 0.5]]);
        filter_redundant(&mut c, &[], FilterPolicy::default());
        assert_eq!(c.alive, vec![false, true]);
        assert!(!c.filter_exhausted);
    }

    #[test]
    fn everything_dead_is_revived_and_flagged() {
        let mut c = set(vec![vec![0.05], vec![0.01]]);
        filter_redundant(&mut c, &[], FilterPolicy::default());
        assert_eq!(c.alive, vec![true, true]);
        assert!(c.filter_exhausted);
        let s = argmax_alive(&c, AggregatePolicy::ProductAll).unwrap();
        assert_eq!(s.index, 0);
    }

    #[test]
    fn disable_keeps_all_512() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let vals = (0..512).map(|_| vec![rng.random::<f64>() * 0.05]).collect();
        let mut c = set(vals);
        filter_redundant(&mut c, &[], FilterPolicy::Disable);
        assert_eq!(c.alive_count(), 512);
    }

    #[test]
    fn top_count_ranks_with_index_ties() {
        let mut c = set(vec![vec![0.3, 0.9], vec![0.3, 0.1], vec![0.3, 0.8], vec![0.2, 0.7]]);
        filter_redundant(&mut c, &[], FilterPolicy::Top32 { count: 2 });
        // step 0 kills 3 (0.2) and 0 (first of the 0.3 tie); step 1 kills 1 and 3
        assert_eq!(c.alive, vec![false, false, true, false]);
    }

    #[test]
    fn angular_boundary_is_strict() {
        let start = Viewpoint::new(90.0, 0.0, 2.73).unwrap();
        let near = Viewpoint::new(90.0, 4.9, 2.73).unwrap();
        let far = Viewpoint::new(90.0, 5.1, 2.73).unwrap();
        let mut c = CandidateSet::new(vec![near, far], vec![vec![0.5], vec![0.5]], vec![]).unwrap();
        filter_redundant(&mut c, &[start], FilterPolicy::SingleAngular { min_sep_deg: 5.0 });
        assert_eq!(c.alive, vec![false, true]);
    }

    #[test]
    fn aggregate_examples() {
        let p = |v: &[f64]| aggregate(v, AggregatePolicy::ProductAll, None);
        assert!((p(&[0.9, 0.9]) - 0.81).abs() < 1e-12);
        assert!((p(&[0.95, 0.2]) - 0.19).abs() < 1e-12);
        assert_eq!(
            aggregate(&[0.0, 0.7], AggregatePolicy::LastOnly, None),
            aggregate(&[1.0, 0.7], AggregatePolicy::LastOnly, None)
        );
        let floored = p(&[0.0, 0.5, 0.4]);
        assert!((floored / (1e-12 * 0.2) - 1.0).abs() < 1e-9);
        assert!(floored < p(&[1e-6, 1e-6]));
        let d = aggregate(&[0.2, 0.3], AggregatePolicy::NeighborDiff { radius_deg: 5.0 }, Some(0.5));
        assert!((d + 0.2).abs() < 1e-15);
    }

    #[test]
    fn stable_product_matches_direct_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            let n = rng.random_range(1..20);
            let v: Vec<f64> = (0..n).map(|_| rng.random_range(1e-6..=1.0)).collect();
            let direct: f64 = v.iter().product();
            let stable = aggregate(&v, AggregatePolicy::ProductAll, None);
            assert!(((stable - direct) / direct).abs() < 1e-9);
        }
    }

    #[test]
    fn scaling_last_step_keeps_product_argmax() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let vals: Vec<Vec<f64>> = (0..32).map(|_| (0..3).map(|_| rng.random_range(0.2..0.9)).collect()).collect();
            let scaled: Vec<Vec<f64>> = vals.iter().map(|v| vec![v[0], v[1], v[2] * 0.9]).collect();
            let a = argmax_alive(&set(vals), AggregatePolicy::ProductAll).unwrap();
            let b = argmax_alive(&set(scaled), AggregatePolicy::ProductAll).unwrap();
            assert_eq!(a.index, b.index);
        }
    }

    #[test]
    fn ring_points_sit_at_the_radius() {
        let c = Viewpoint::new(33.0, 250.0, 1.0).unwrap().dir();
        let ring = ring_dirs(&c, 5f64.to_radians(), 8);
        for d in &ring {
            assert!((angular_distance(&c, d).to_degrees() - 5.0).abs() < 1e-9);
        }
        let spread = angular_distance(&ring[0], &ring[4]).to_degrees();
        assert!((spread - 10.0).abs() < 1e-6);
    }

    #[test]
    fn diff_requires_context() {
        let c = CandidateSet::new(sample_candidates(2, 0, 2.73).unwrap(), vec![vec![0.5]; 2], vec![]).unwrap();
        assert!(argmax_alive(&c, AggregatePolicy::NeighborDiff { radius_deg: 5.0 }).is_err());
        assert!(argmax_alive(&c, AggregatePolicy::LastOnly).is_ok());
    }
}
