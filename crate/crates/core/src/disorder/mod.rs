//! Spatially correlated random disorder: valley couplings, potential
//! offsets and tunnel couplings drawn from Gaussian-kernel random fields.

mod fields;
mod interp;
mod landscape;
mod sampling;

pub use fields::{
    sample_alloy_potential, sample_gate_potential, sample_tunnel_field, sample_valley_coupling,
    PotentialField, PotentialSource, TunnelField, ValleyCouplingField,
};
pub use interp::{interpolate_field, CubicSpline, LineField, RegularGrid};
pub use landscape::{
    sample_landscape_bundle, sample_valley_map, ChannelFields, CrossChannel, GateCorrelation,
    LandscapeBundle, LandscapeConfig, TunnelSpec, ValleyMap,
};
pub use sampling::{
    cholesky_with_jitter, sample_gaussian_field, sample_line_family, sample_regular_line_pair,
    CholeskyFactor,
};

use crate::error::{invalid, Result};
use nalgebra::DMatrix;

/// A finite set of labelled points in the plane (nm).
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    points: Vec<[f64; 2]>,
    labels: Vec<String>,
}

impl PointSet {
    pub fn new(points: Vec<[f64; 2]>, labels: Vec<String>) -> Result<Self> {
        if points.is_empty() {
            return Err(invalid("points", "point set must be non-empty"));
        }
        if labels.len() != points.len() {
            return Err(invalid("labels", "one label per point is required"));
        }
        if points.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(invalid("points", "coordinates must be finite"));
        }
        Ok(Self { points, labels })
    }

    /// Unlabelled points.
    pub fn from_points(points: Vec<[f64; 2]>) -> Result<Self> {
        let labels = vec![String::new(); points.len()];
        Self::new(points, labels)
    }

    /// `n` equally spaced points on the horizontal line at height `y`.
    pub fn line(x0: f64, dx: f64, n: usize, y: f64, label: &str) -> Result<Self> {
        let points = (0..n).map(|i| [x0 + dx * i as f64, y]).collect();
        Self::new(points, vec![label.to_string(); n])
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.points[i], self.points[j]);
        (a[0] - b[0]).hypot(a[1] - b[1])
    }

    /// If the points lie on a horizontal line with uniform increasing
    /// spacing, returns (x0, dx).
    pub(crate) fn as_regular_line(&self) -> Option<(f64, f64)> {
        let n = self.points.len();
        if n < 2 {
            return None;
        }
        let y = self.points[0][1];
        let x0 = self.points[0][0];
        let dx = self.points[1][0] - x0;
        if dx <= 0.0 {
            return None;
        }
        let tol = 1e-9 * dx;
        self.points.iter().enumerate().all(|(i, p)| {
            (p[1] - y).abs() <= tol && (p[0] - (x0 + dx * i as f64)).abs() <= tol
        })
        .then_some((x0, dx))
    }
}

/// Gaussian covariance kernel `variance · exp(−d²/2ℓ²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    /// Field variance (μeV² for energy fields, dimensionless for log fields).
    pub variance: f64,
    /// Correlation length ℓ in nm.
    pub correlation_length: f64,
}

impl KernelSpec {
    pub fn new(variance: f64, correlation_length: f64) -> Result<Self> {
        if !(variance >= 0.0) || !variance.is_finite() {
            return Err(invalid("variance", format!("must be finite and ≥ 0, got {variance}")));
        }
        if !(correlation_length > 0.0) || !correlation_length.is_finite() {
            return Err(invalid(
                "correlation_length",
                format!("must be finite and > 0, got {correlation_length}"),
            ));
        }
        Ok(Self { variance, correlation_length })
    }

    #[inline]
    pub fn eval(&self, d: f64) -> f64 {
        let r = d / self.correlation_length;
        self.variance * (-0.5 * r * r).exp()
    }
}

/// Dense covariance matrix `C_ij = k(|p_i − p_j|)`.
pub fn build_covariance(ps: &PointSet, k: &KernelSpec) -> DMatrix<f64> {
    let n = ps.len();
    let mut c = DMatrix::zeros(n, n);
    for i in 0..n {
        c[(i, i)] = k.variance;
        for j in 0..i {
            let v = k.eval(ps.distance(i, j));
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    c
}
