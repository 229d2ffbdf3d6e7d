//! Cost matrices from zone polygons.

mod io;

pub use io::{read_geojson, read_zone_text};

use std::collections::{HashMap, HashSet};

use num_traits::Float;
use rand::distr::uniform::SampleUniform;
use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::matrix::DenseMatrix;
use crate::polytope::CostMatrix;
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("zone {zone:?} has {count} corners, need at least 3")]
    TooFewCorners { zone: String, count: usize },
    #[error("zone {zone:?} has a non-finite corner")]
    NonFiniteCorner { zone: String },
    #[error("duplicate zone id {0:?}")]
    DuplicateZone(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("feature {index}: {message}")]
    Feature { index: usize, message: String },
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("noise amplitude must be positive and finite")]
    InvalidEpsilon,
}

/// Planar zone outline. Coordinates must already be projected.
#[derive(Debug, Clone, PartialEq)]
pub struct ZonePolygon<T> {
    zone_id: String,
    corners: Vec<(T, T)>,
}

impl<T: Float> ZonePolygon<T> {
    pub fn new(zone_id: impl Into<String>, corners: Vec<(T, T)>) -> Result<Self, GeometryError> {
        let zone_id = zone_id.into();
        if corners.len() < 3 {
            return Err(GeometryError::TooFewCorners {
                zone: zone_id,
                count: corners.len(),
            });
        }
        if corners.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(GeometryError::NonFiniteCorner { zone: zone_id });
        }
        Ok(Self { zone_id, corners })
    }

    pub fn zone_id(&self) -> &str {
        &self.zone_id
    }

    pub fn corners(&self) -> &[(T, T)] {
        &self.corners
    }

    /// Arithmetic mean of the corner points (not the area centroid).
    pub fn corner_mean(&self) -> (T, T) {
        let k = T::from(self.corners.len()).unwrap();
        let (sx, sy) = self
            .corners
            .iter()
            .fold((T::zero(), T::zero()), |(ax, ay), &(x, y)| (ax + x, ay + y));
        (sx / k, sy / k)
    }

    /// Copy shifted by `(dx, dy)`.
    pub fn translated(&self, dx: T, dy: T) -> Self {
        Self {
            zone_id: self.zone_id.clone(),
            corners: self.corners.iter().map(|&(x, y)| (x + dx, y + dy)).collect(),
        }
    }
}

/// Ordered zones. The order fixes row and column indices everywhere
/// downstream.
#[derive(Debug, Clone, PartialEq)]
pub struct ZoneSet<T> {
    zones: Vec<ZonePolygon<T>>,
}

impl<T: Float> ZoneSet<T> {
    pub fn new(zones: Vec<ZonePolygon<T>>) -> Result<Self, GeometryError> {
        let mut seen = HashSet::new();
        for z in &zones {
            if !seen.insert(z.zone_id.as_str()) {
                return Err(GeometryError::DuplicateZone(z.zone_id.clone()));
            }
        }
        Ok(Self { zones })
    }

    pub fn len(&self) -> usize {
        self.zones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zones.is_empty()
    }

    pub fn zones(&self) -> &[ZonePolygon<T>] {
        &self.zones
    }

    pub fn ids(&self) -> Vec<String> {
        self.zones.iter().map(|z| z.zone_id.clone()).collect()
    }

    pub fn index_of(&self, zone_id: &str) -> Option<usize> {
        self.zones.iter().position(|z| z.zone_id == zone_id)
    }

    /// Lookup table from id to index.
    pub fn index(&self) -> HashMap<String, usize> {
        self.zones
            .iter()
            .enumerate()
            .map(|(i, z)| (z.zone_id.clone(), i))
            .collect()
    }
}

/// Settings for [`cost_adjacency`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdjacencyOptions<T> {
    /// Cost between distinct zones that share a corner.
    pub adjacent_cost: T,
    /// Corners closer than this count as shared. 0 means exact equality.
    pub snap_tolerance: T,
}

impl<T: Float> Default for AdjacencyOptions<T> {
    fn default() -> Self {
        Self {
            adjacent_cost: T::from(0.1).unwrap(),
            snap_tolerance: T::zero(),
        }
    }
}

fn finish<T: Scalar>(c: DenseMatrix<T>) -> CostMatrix<T> {
    CostMatrix::new(c).expect("geometric costs are finite and nonnegative")
}

/// 0 on the diagonal, `adjacent_cost` between zones sharing a corner, 1
/// otherwise.
pub fn cost_adjacency<T: Float + Scalar>(zs: &ZoneSet<T>, opts: AdjacencyOptions<T>) -> CostMatrix<T> {
    let n = zs.len();
    let mut c = DenseMatrix::from_fn(n, n, |i, j| if i == j { T::zero() } else { T::one() });
    let mut mark = |i: usize, j: usize| {
        if i != j {
            c[(i, j)] = opts.adjacent_cost;
            c[(j, i)] = opts.adjacent_cost;
        }
    };

    if opts.snap_tolerance <= T::zero() {
        let mut by_corner: HashMap<(u64, u64), Vec<usize>> = HashMap::new();
        for (z, zone) in zs.zones.iter().enumerate() {
            for &(x, y) in &zone.corners {
                let key = (coord_key(x), coord_key(y));
                let owners = by_corner.entry(key).or_default();
                if owners.last() != Some(&z) {
                    owners.push(z);
                }
            }
        }
        for owners in by_corner.values() {
            for (a, &i) in owners.iter().enumerate() {
                for &j in &owners[a + 1..] {
                    mark(i, j);
                }
            }
        }
    } else {
        let tol2 = opts.snap_tolerance * opts.snap_tolerance;
        for i in 0..n {
            for j in i + 1..n {
                let close = zs.zones[i].corners.iter().any(|&(ax, ay)| {
                    zs.zones[j]
                        .corners
                        .iter()
                        .any(|&(bx, by)| (ax - bx) * (ax - bx) + (ay - by) * (ay - by) <= tol2)
                });
                if close {
                    mark(i, j);
                }
            }
        }
    }
    finish(c)
}

/// Bit pattern with `-0.0` folded onto `0.0`, so equal coordinates hash
/// equal.
fn coord_key<T: Float>(v: T) -> u64 {
    (v.to_f64().unwrap() + 0.0).to_bits()
}

/// Euclidean distance between corner means.
pub fn cost_centroid<T: Float + Scalar>(zs: &ZoneSet<T>) -> CostMatrix<T> {
    let centers: Vec<_> = zs.zones.iter().map(ZonePolygon::corner_mean).collect();
    let n = zs.len();
    let mut c = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let d = distance(centers[i], centers[j]);
            c[(i, j)] = d;
            c[(j, i)] = d;
        }
    }
    finish(c)
}

/// Distance between the closest pair of corners of two zones; 0 on the
/// diagonal.
pub fn cost_nearest_corner<T: Float + Scalar>(zs: &ZoneSet<T>) -> CostMatrix<T> {
    let n = zs.len();
    let mut c = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = nearest_corner_pair(&zs.zones[i], &zs.zones[j]);
            let d = distance(zs.zones[i].corners[a], zs.zones[j].corners[b]);
            c[(i, j)] = d;
            c[(j, i)] = d;
        }
    }
    finish(c)
}

/// Indices of the closest corner pair; ties go to the lowest index in `a`,
/// then in `b`.
pub fn nearest_corner_pair<T: Float>(a: &ZonePolygon<T>, b: &ZonePolygon<T>) -> (usize, usize) {
    let mut best = (0, 0);
    let mut best_d2 = T::infinity();
    for (p, &(ax, ay)) in a.corners.iter().enumerate() {
        for (q, &(bx, by)) in b.corners.iter().enumerate() {
            let d2 = (ax - bx) * (ax - bx) + (ay - by) * (ay - by);
            if d2 < best_d2 {
                best_d2 = d2;
                best = (p, q);
            }
        }
    }
    best
}

fn distance<T: Float>(a: (T, T), b: (T, T)) -> T {
    (a.0 - b.0).hypot(a.1 - b.1)
}

/// Adds independent `U[0, epsilon)` noise to every entry, drawn in
/// row-major order from a ChaCha8 stream seeded with `seed`.
pub fn perturb_costs<T>(c: &CostMatrix<T>, epsilon: T, seed: u64) -> Result<CostMatrix<T>, GeometryError>
where
    T: Float + Scalar + SampleUniform,
{
    if !(epsilon > T::zero()) || !epsilon.is_finite() {
        return Err(GeometryError::InvalidEpsilon);
    }
    let noise = Uniform::new(T::zero(), epsilon).map_err(|_| GeometryError::InvalidEpsilon)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = c.n();
    let m = DenseMatrix::from_fn(n, n, |i, j| c.get(i, j) + noise.sample(&mut rng));
    Ok(finish(m))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(id: &str, x: f64, y: f64) -> ZonePolygon<f64> {
        ZonePolygon::new(id, vec![(x, y), (x + 1.0, y), (x + 1.0, y + 1.0), (x, y + 1.0)]).unwrap()
    }

    #[test]
    fn triangles_sharing_one_vertex_are_adjacent() {
        let a = ZonePolygon::new("a", vec![(0.0, 0.0), (1.0, 0.0), (0.5, 1.0)]).unwrap();
        let b = ZonePolygon::new("b", vec![(1.0, 0.0), (2.0, 0.0), (1.5, 1.0)]).unwrap();
        let zs = ZoneSet::new(vec![a, b]).unwrap();
        let c = cost_adjacency(&zs, AdjacencyOptions::default());
        assert_eq!(c.matrix().to_rows(), vec![vec![0.0, 0.1], vec![0.1, 0.0]]);
    }

    #[test]
    fn single_zone_and_disjoint_squares() {
        let zs = ZoneSet::new(vec![square("a", 0.0, 0.0)]).unwrap();
        assert_eq!(cost_adjacency(&zs, AdjacencyOptions::default()).matrix().to_rows(), vec![vec![0.0]]);
        let zs = ZoneSet::new(vec![square("a", 0.0, 0.0), square("b", 10.0, 10.0)]).unwrap();
        assert_eq!(
            cost_adjacency(&zs, AdjacencyOptions::default()).matrix().to_rows(),
            vec![vec![0.0, 1.0], vec![1.0, 0.0]]
        );
    }

    #[test]
    fn snap_tolerance_admits_near_misses() {
        let zs = ZoneSet::new(vec![square("a", 0.0, 0.0), square("b", 1.0 + 1e-9, 0.0)]).unwrap();
        assert_eq!(cost_adjacency(&zs, AdjacencyOptions::default()).get(0, 1), 1.0);
        let opts = AdjacencyOptions {
            snap_tolerance: 1e-6,
            ..Default::default()
        };
        assert_eq!(cost_adjacency(&zs, opts).get(0, 1), 0.1);
    }

    #[test]
    fn negative_zero_matches_zero() {
        let a = ZonePolygon::new("a", vec![(-0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]).unwrap();
        let b = ZonePolygon::new("b", vec![(0.0, 0.0), (-1.0, 0.0), (0.0, -1.0)]).unwrap();
        let zs = ZoneSet::new(vec![a, b]).unwrap();
        assert_eq!(cost_adjacency(&zs, AdjacencyOptions::default()).get(1, 0), 0.1);
    }

    #[test]
    fn centroid_distance() {
        let zs = ZoneSet::new(vec![square("a", 0.0, 0.0), square("b", 3.0, 0.0)]).unwrap();
        let c = cost_centroid(&zs);
        assert_eq!(c.get(0, 1), 3.0);
        assert_eq!(c.get(1, 1), 0.0);
        let moved = ZoneSet::new(zs.zones().iter().map(|z| z.translated(0.25, -0.5)).collect()).unwrap();
        assert_eq!(cost_centroid(&moved), c);
    }

    #[test]
    fn corner_mean_is_not_area_centroid() {
        // extra collinear corner pulls the mean but not the area centroid
        let z = ZonePolygon::new("a", vec![(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (2.0, 2.0), (0.0, 2.0)]).unwrap();
        assert_eq!(z.corner_mean(), (1.0, 0.8));
    }

    #[test]
    fn nearest_corners() {
        let zs = ZoneSet::new(vec![square("a", 0.0, 0.0), square("b", 3.0, 0.0)]).unwrap();
        let c = cost_nearest_corner(&zs);
        assert_eq!(c.get(0, 1), 2.0);
        assert_eq!(c.get(1, 0), 2.0);
        let zs = ZoneSet::new(vec![square("a", 0.0, 0.0), square("b", 1.0, 1.0)]).unwrap();
        assert_eq!(cost_nearest_corner(&zs).get(0, 1), 0.0);
    }

    #[test]
    fn nearest_pair_ties_take_lowest_indices() {
        let a = square("a", 0.0, 0.0);
        let b = square("b", 2.0, 0.0);
        // corners 1 and 2 of a are both 1 away from corners 0 and 3 of b
        assert_eq!(nearest_corner_pair(&a, &b), (1, 0));
    }

    #[test]
    fn noise_is_bounded_and_reproducible() {
        let zs = ZoneSet::new(vec![square("a", 0.0, 0.0), square("b", 1.0, 0.0), square("c", 5.0, 5.0)]).unwrap();
        let c = cost_adjacency(&zs, AdjacencyOptions::default());
        let p = perturb_costs(&c, 1e-4, 7).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let d = p.get(i, j) - c.get(i, j);
                assert!((0.0..1e-4).contains(&d));
            }
        }
        assert_eq!(perturb_costs(&c, 1e-4, 7).unwrap(), p);
        assert!(perturb_costs(&c, 0.0, 7).is_err());
    }

    #[test]
    fn distinct_seeds_give_distinct_noise() {
        let c = CostMatrix::two_level(4, 0.0, 1.0).unwrap();
        let draws: Vec<_> = (0..100).map(|s| perturb_costs(&c, 1e-4, s).unwrap()).collect();
        for a in 0..draws.len() {
            for b in a + 1..draws.len() {
                assert_ne!(draws[a], draws[b]);
            }
        }
    }

    #[test]
    fn validation() {
        assert!(ZonePolygon::new("a", vec![(0.0, 0.0), (1.0, 1.0)]).is_err());
        assert!(ZonePolygon::new("a", vec![(0.0, 0.0), (1.0, 1.0), (f64::NAN, 0.0)]).is_err());
        assert!(ZoneSet::new(vec![square("a", 0.0, 0.0), square("a", 1.0, 0.0)]).is_err());
    }
}
