use super::{build_covariance, KernelSpec, PointSet};
use crate::error::{Error, Result};
use crate::rng;
use nalgebra::{Complex, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::FftPlanner;

/// Relative diagonal jitters tried in order before giving up.
const JITTER_LADDER: [f64; 5] = [1e-12, 1e-11, 1e-10, 1e-9, 1e-8];

/// Lower-triangular factor of `C + jitter·I`.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    pub l: DMatrix<f64>,
    /// Absolute jitter added to the diagonal (μeV² or field units²).
    pub jitter: f64,
}

/// Cholesky factorization with escalating diagonal jitter relative to
/// `variance`. A zero variance yields the zero factor.
pub fn cholesky_with_jitter(c: &DMatrix<f64>, variance: f64) -> Result<CholeskyFactor> {
    let n = c.nrows();
    if variance == 0.0 {
        return Ok(CholeskyFactor { l: DMatrix::zeros(n, n), jitter: 0.0 });
    }
    let mut last = 0.0;
    for rel in JITTER_LADDER {
        let jitter = rel * variance;
        let mut a = c.clone();
        for i in 0..n {
            a[(i, i)] += jitter;
        }
        if let Some(chol) = a.cholesky() {
            return Ok(CholeskyFactor { l: chol.unpack(), jitter });
        }
        last = jitter;
    }
    Err(Error::IllConditionedKernel { jitter: last })
}

fn standard_normals(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Draws one realization of the zero-mean Gaussian field with kernel `k`
/// on `ps`, deterministic in `seed`.
///
/// Regular 1D grids use circulant embedding; every other point set is
/// sampled through a dense jittered Cholesky factor.
pub fn sample_gaussian_field(ps: &PointSet, k: &KernelSpec, seed: u64) -> Result<Vec<f64>> {
    let n = ps.len();
    if k.variance == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let mut rng = rng::stream(seed);
    if let Some((_, dx)) = ps.as_regular_line() {
        return Ok(circulant_pair(n, dx, k, &mut rng)?.0);
    }
    let c = build_covariance(ps, k);
    let f = cholesky_with_jitter(&c, k.variance)?;
    let z = DVector::from_vec(standard_normals(&mut rng, n));
    Ok((f.l * z).iter().copied().collect())
}

/// Two independent realizations on the regular grid `x_i = x0 + i·dx`.
pub fn sample_regular_line_pair(
    n: usize,
    dx: f64,
    k: &KernelSpec,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if k.variance == 0.0 {
        return Ok((vec![0.0; n], vec![0.0; n]));
    }
    circulant_pair(n, dx, k, &mut rng::stream(seed))
}

fn circulant_pair(
    n: usize,
    dx: f64,
    k: &KernelSpec,
    rng: &mut impl Rng,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 1 {
        let s = k.variance.sqrt();
        return Ok((vec![s * rng.sample::<f64, _>(StandardNormal)], vec![
            s * rng.sample::<f64, _>(StandardNormal),
        ]));
    }
    // Period long enough that the kernel has decayed below 1e-31 at the wrap.
    let tail = (24.0 * k.correlation_length / dx).ceil() as usize;
    let m = (2 * (n - 1)).max(tail).max(2).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(m);

    let mut spectrum: Vec<Complex<f64>> = (0..m)
        .map(|j| Complex::new(k.eval(j.min(m - j) as f64 * dx), 0.0))
        .collect();
    fft.process(&mut spectrum);
    let lmax = spectrum.iter().map(|z| z.re).fold(0.0, f64::max);
    let mut buf = Vec::with_capacity(m);
    for z in &spectrum {
        let mut lam = z.re;
        if lam < 0.0 {
            if lam < -1e-10 * lmax {
                return Err(Error::IllConditionedKernel { jitter: -lam });
            }
            lam = 0.0;
        }
        let a: f64 = rng.sample(StandardNormal);
        let b: f64 = rng.sample(StandardNormal);
        buf.push(Complex::new(a, b) * (lam / m as f64).sqrt());
    }
    fft.process(&mut buf);
    Ok((buf[..n].iter().map(|z| z.re).collect(), buf[..n].iter().map(|z| z.im).collect()))
}

/// Jointly samples the field on a family of horizontal lines sharing the
/// regular x-grid, with the exact separable covariance
/// `k(Δx, Δy) = variance·exp(−Δx²/2ℓ²)·exp(−Δy²/2ℓ²)`.
///
/// Returns one vector of length `n` per entry of `ys`.
pub fn sample_line_family(
    n: usize,
    dx: f64,
    ys: &[f64],
    k: &KernelSpec,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let m = ys.len();
    if k.variance == 0.0 {
        return Ok(vec![vec![0.0; n]; m]);
    }
    // Independent unit-variance x-lines, mixed across y by the Cholesky
    // factor of the y-correlation matrix.
    let unit = KernelSpec::new(1.0, k.correlation_length)?;
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut rng = rng::stream(seed);
    while cols.len() < m {
        let (a, b) = circulant_pair(n, dx, &unit, &mut rng)?;
        cols.push(a);
        if cols.len() < m {
            cols.push(b);
        }
    }
    let yps = PointSet::from_points(ys.iter().map(|&y| [0.0, y]).collect())?;
    let cy = build_covariance(&yps, &KernelSpec::new(k.variance, k.correlation_length)?);
    let ly = cholesky_with_jitter(&cy, k.variance)?.l;
    let mut out = vec![vec![0.0; n]; m];
    for (a, row) in out.iter_mut().enumerate() {
        for (b, col) in cols.iter().enumerate().take(a + 1) {
            let w = ly[(a, b)];
            if w != 0.0 {
                for (o, &v) in row.iter_mut().zip(col) {
                    *o += w * v;
                }
            }
        }
    }
    Ok(out)
}
