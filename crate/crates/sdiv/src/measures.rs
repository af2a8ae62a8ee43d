//! Empirical measures, 1D push-forwards and reproducible direction sampling.
//!
//! An [`EmpiricalMeasure`] is a weighted point cloud in `R^d`. Projecting it
//! onto a unit vector θ gives the push-forward measure `θ#μ`, represented as a
//! [`SortedSupport1D`] whose atoms are the inner products `⟨θ, x_i⟩` in
//! ascending order. Directions are sampled uniformly on the unit sphere by
//! normalizing standard Gaussian vectors, which is exact in every dimension.
//!
//! Randomness is reproducible through [`SeedSpec`]: the l-th direction is a
//! pure function of `(master_seed, l)`, so a direction list can be generated
//! in any order, in parallel, or as a prefix of a longer list.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result};

const WEIGHT_SUM_TOL: f64 = 1e-12;
const UNIT_NORM_TOL: f64 = 1e-12;
const ORTHO_TOL: f64 = 1e-10;

/// A weighted point cloud in `R^d` with weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    points: Array2<f64>,
    weights: Vec<f64>,
}

impl EmpiricalMeasure {
    /// Builds a measure from points and explicit nonnegative weights.
    pub fn new(points: Array2<f64>, weights: Vec<f64>) -> Result<Self> {
        let (n, d) = points.dim();
        if n == 0 || d == 0 {
            return Err(Error::Empty("point set"));
        }
        if weights.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: weights.len() });
        }
        if !points.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("points"));
        }
        let mut sum = 0.0;
        for &w in &weights {
            if !w.is_finite() {
                return Err(Error::NonFinite("weights"));
            }
            if w < 0.0 {
                return Err(Error::NegativeWeight(w));
            }
            sum += w;
        }
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::WeightSum(sum));
        }
        Ok(Self { points, weights })
    }

    /// Builds the uniform empirical measure `(1/n) Σ δ_{x_i}`.
    pub fn uniform(points: Array2<f64>) -> Result<Self> {
        let n = points.nrows();
        if n == 0 {
            return Err(Error::Empty("point set"));
        }
        let w = 1.0 / n as f64;
        Self::new(points, vec![w; n])
    }

    /// Number of atoms.
    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        false // n >= 1 by construction
    }

    /// Ambient dimension d.
    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn points(&self) -> ArrayView2<'_, f64> {
        self.points.view()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// True when every weight equals `1/n` within `1e-12`.
    pub fn has_uniform_weights(&self) -> bool {
        let w = 1.0 / self.len() as f64;
        self.weights.iter().all(|&wi| (wi - w).abs() <= WEIGHT_SUM_TOL)
    }

    /// Push-forward by `x ↦ ⟨θ, x⟩`: locations sorted ascending, weights
    /// carried along by the same (stable) permutation.
    pub fn project(&self, theta: &Direction) -> Result<SortedSupport1D> {
        if theta.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: theta.dim() });
        }
        let raw = self.points.dot(theta.as_array());
        let mut order: Vec<usize> = (0..raw.len()).collect();
        order.sort_by(|&i, &j| raw[i].total_cmp(&raw[j]));
        let locations: Vec<f64> = order.iter().map(|&i| raw[i]).collect();
        let weights: Vec<f64> = order.iter().map(|&i| self.weights[i]).collect();
        Ok(SortedSupport1D { locations, weights })
    }

    /// Shifts every atom by `v`; weights unchanged.
    pub fn translate(&self, v: &[f64]) -> Result<Self> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: v.len() });
        }
        if !v.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("translation vector"));
        }
        let mut points = self.points.clone();
        for mut row in points.rows_mut() {
            for (x, &vi) in row.iter_mut().zip(v) {
                *x += vi;
            }
        }
        Ok(Self { points, weights: self.weights.clone() })
    }

    /// Maps every atom `x` to `Q x` for an orthogonal `Q` (`QᵀQ = I` within 1e-10).
    pub fn rotate(&self, q: ArrayView2<'_, f64>) -> Result<Self> {
        let d = self.dim();
        if q.dim() != (d, d) {
            return Err(Error::DimensionMismatch { expected: d, got: q.nrows() });
        }
        let qtq = q.t().dot(&q);
        let mut dev: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let target = if i == j { 1.0 } else { 0.0 };
                dev = dev.max((qtq[[i, j]] - target).abs());
            }
        }
        if dev > ORTHO_TOL {
            return Err(Error::NotOrthogonal(dev));
        }
        // row vectors: (Q x)ᵀ = xᵀ Qᵀ
        let points = self.points.dot(&q.t());
        Ok(Self { points, weights: self.weights.clone() })
    }
}

/// A unit vector on the sphere `S^{d-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction(Array1<f64>);

impl Direction {
    pub fn new(components: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Empty("direction"));
        }
        if !components.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("direction"));
        }
        let norm = components.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > UNIT_NORM_TOL {
            return Err(Error::InvalidConfig(format!(
                "direction norm must be 1 within 1e-12, got {norm}"
            )));
        }
        Ok(Self(Array1::from(components)))
    }

    /// Normalizes an arbitrary nonzero vector onto the sphere.
    pub fn from_unnormalized(components: Vec<f64>) -> Result<Self> {
        let norm = components.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::Degenerate("cannot normalize a zero-norm vector"));
        }
        Ok(Self(Array1::from_iter(components.iter().map(|x| x / norm))))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn components(&self) -> &[f64] {
        self.0.as_slice().expect("contiguous")
    }

    pub fn as_array(&self) -> &Array1<f64> {
        &self.0
    }

    pub fn dot(&self, x: ArrayView1<'_, f64>) -> f64 {
        self.0.dot(&x)
    }
}

/// A one-dimensional discrete measure with ascending atom locations.
///
/// Exactly tied locations are kept as separate atoms; every 1D divergence in
/// [`crate::onedim`] tolerates repeats.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedSupport1D {
    locations: Vec<f64>,
    weights: Vec<f64>,
}

impl SortedSupport1D {
    /// Validates already-sorted atoms.
    pub fn new(locations: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if locations.is_empty() {
            return Err(Error::Empty("support"));
        }
        if locations.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: locations.len(),
                got: weights.len(),
            });
        }
        if !locations.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("locations"));
        }
        if locations.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Unsorted);
        }
        let mut sum = 0.0;
        for &w in &weights {
            if !w.is_finite() {
                return Err(Error::NonFinite("weights"));
            }
            if w < 0.0 {
                return Err(Error::NegativeWeight(w));
            }
            sum += w;
        }
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::WeightSum(sum));
        }
        Ok(Self { locations, weights })
    }

    /// Sorts atoms by location (stable) and validates.
    pub fn from_unsorted(locations: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if locations.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: locations.len(),
                got: weights.len(),
            });
        }
        if !locations.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("locations"));
        }
        let mut order: Vec<usize> = (0..locations.len()).collect();
        order.sort_by(|&i, &j| locations[i].total_cmp(&locations[j]));
        let locs = order.iter().map(|&i| locations[i]).collect();
        let ws = order.iter().map(|&i| weights[i]).collect();
        Self::new(locs, ws)
    }

    /// Uniform measure on the given values (sorted internally).
    pub fn uniform(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        if n == 0 {
            return Err(Error::Empty("support"));
        }
        let w = 1.0 / n as f64;
        Self::from_unsorted(values, vec![w; n])
    }

    /// A single atom of mass one.
    pub fn dirac(location: f64) -> Self {
        Self { locations: vec![location], weights: vec![1.0] }
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn locations(&self) -> &[f64] {
        &self.locations
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Master seed plus a deterministic substream derivation.
///
/// `stream(l)` yields an independent generator for substream `l`;
/// `child(i)` derives a fresh [`SeedSpec`] for nested scopes (experiment →
/// grid cell → replication). Both are injective in the index for a fixed
/// master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedSpec {
    master_seed: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    /// Independent generator for substream `index`.
    pub fn stream(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(index);
        rng
    }

    /// Derives a child seed; distinct indices give distinct children.
    pub fn child(&self, index: u64) -> SeedSpec {
        SeedSpec::new(splitmix64(self.master_seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15)))
    }
}

// SplitMix64 finalizer; bijective on u64.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The l-th i.i.d. uniform direction on `S^{d-1}` for this seed.
///
/// A d-vector of standard normals is drawn from substream `l` and normalized;
/// a zero-norm draw (probability zero) is discarded and redrawn from the same
/// stream.
pub fn direction_at(d: usize, index: u64, seed: &SeedSpec) -> Direction {
    let mut rng = seed.stream(index);
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        if let Ok(dir) = Direction::from_unnormalized(v) {
            return dir;
        }
    }
}

/// `count` i.i.d. uniform directions on `S^{d-1}`, one substream each.
pub fn sample_directions(d: usize, count: usize, seed: &SeedSpec) -> Result<Vec<Direction>> {
    if d == 0 {
        return Err(Error::Empty("dimension"));
    }
    if count == 0 {
        return Err(Error::Empty("direction count"));
    }
    Ok((0..count).map(|l| direction_at(d, l as u64, seed)).collect())
}
