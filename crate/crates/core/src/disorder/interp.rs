use crate::error::{invalid, Error, Result};

/// Uniform 1D grid `x_i = x0 + i·dx`, `i < n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularGrid {
    pub x0: f64,
    pub dx: f64,
    pub n: usize,
}

impl RegularGrid {
    pub fn new(x0: f64, dx: f64, n: usize) -> Result<Self> {
        if !(dx > 0.0) || n == 0 {
            return Err(invalid("grid", format!("need dx > 0 and n ≥ 1 (dx={dx}, n={n})")));
        }
        Ok(Self { x0, dx, n })
    }

    /// Smallest grid with spacing ≤ `max_dx` covering [lo, hi].
    pub fn covering(lo: f64, hi: f64, max_dx: f64) -> Result<Self> {
        if !(hi > lo) {
            return Err(invalid("grid", format!("empty range [{lo}, {hi}]")));
        }
        let cells = ((hi - lo) / max_dx).ceil().max(4.0) as usize;
        Self::new(lo, (hi - lo) / cells as f64, cells + 1)
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + self.dx * i as f64
    }

    pub fn end(&self) -> f64 {
        self.x(self.n - 1)
    }
}

/// Clamped cubic spline on a uniform grid. End slopes come from
/// fourth-order one-sided differences, so the interpolant is O(h⁴)
/// accurate for smooth data, C² inside and exact at the nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    grid: RegularGrid,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn new(grid: RegularGrid, y: Vec<f64>) -> Result<Self> {
        if y.len() != grid.n {
            return Err(invalid("values", "length must equal grid size"));
        }
        let n = grid.n;
        let h = grid.dx;
        let mut m = vec![0.0; n];
        if n >= 5 {
            let s0 = (-25.0 * y[0] + 48.0 * y[1] - 36.0 * y[2] + 16.0 * y[3] - 3.0 * y[4])
                / (12.0 * h);
            let sn = (25.0 * y[n - 1] - 48.0 * y[n - 2] + 36.0 * y[n - 3] - 16.0 * y[n - 4]
                + 3.0 * y[n - 5])
                / (12.0 * h);
            // Tridiagonal system for the second derivatives (Thomas algorithm).
            let mut diag = vec![4.0; n];
            let off = 1.0;
            let mut rhs = vec![0.0; n];
            diag[0] = 2.0;
            diag[n - 1] = 2.0;
            rhs[0] = 6.0 * ((y[1] - y[0]) / h - s0) / h;
            rhs[n - 1] = 6.0 * (sn - (y[n - 1] - y[n - 2]) / h) / h;
            for i in 1..n - 1 {
                rhs[i] = 6.0 * (y[i + 1] - 2.0 * y[i] + y[i - 1]) / (h * h);
            }
            for i in 1..n {
                let w = off / diag[i - 1];
                diag[i] -= w * off;
                rhs[i] -= w * rhs[i - 1];
            }
            m[n - 1] = rhs[n - 1] / diag[n - 1];
            for i in (0..n - 1).rev() {
                m[i] = (rhs[i] - off * m[i + 1]) / diag[i];
            }
        }
        Ok(Self { grid, y, m })
    }

    pub fn grid(&self) -> RegularGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    fn locate(&self, x: f64) -> Result<(usize, f64)> {
        let g = self.grid;
        let (lo, hi) = (g.x0, g.end());
        let tol = 1e-9 * g.dx;
        if !(x >= lo - tol && x <= hi + tol) {
            return Err(Error::OutOfDomain { x, lo, hi });
        }
        if g.n == 1 {
            return Ok((0, 0.0));
        }
        let mut s = ((x - lo) / g.dx).clamp(0.0, (g.n - 1) as f64);
        // Node positions recomputed as x0 + i·dx land within roundoff of i.
        if (s - s.round()).abs() < 1e-9 {
            s = s.round();
        }
        let i = (s.floor() as usize).min(g.n - 2);
        Ok((i, s - i as f64))
    }

    /// Interpolated value.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let (i, t) = self.locate(x)?;
        if self.grid.n == 1 {
            return Ok(self.y[0]);
        }
        let h = self.grid.dx;
        let u = 1.0 - t;
        let (mi, mj) = (self.m[i], self.m[i + 1]);
        Ok(u * self.y[i] + t * self.y[i + 1] + h * h / 6.0 * ((u * u * u - u) * mi + (t * t * t - t) * mj))
    }

    /// First derivative of the interpolant.
    pub fn derivative(&self, x: f64) -> Result<f64> {
        let (i, t) = self.locate(x)?;
        if self.grid.n == 1 {
            return Ok(0.0);
        }
        let h = self.grid.dx;
        let u = 1.0 - t;
        let (mi, mj) = (self.m[i], self.m[i + 1]);
        Ok((self.y[i + 1] - self.y[i]) / h + h / 6.0 * (-(3.0 * u * u - 1.0) * mi + (3.0 * t * t - 1.0) * mj))
    }
}

/// A scalar field sampled on a regular line, with cubic interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct LineField {
    spline: CubicSpline,
}

impl LineField {
    pub fn new(grid: RegularGrid, values: Vec<f64>) -> Result<Self> {
        Ok(Self { spline: CubicSpline::new(grid, values)? })
    }

    pub fn grid(&self) -> RegularGrid {
        self.spline.grid()
    }

    pub fn values(&self) -> &[f64] {
        self.spline.values()
    }

    pub fn at(&self, x: f64) -> Result<f64> {
        self.spline.eval(x)
    }

    pub fn slope(&self, x: f64) -> Result<f64> {
        self.spline.derivative(x)
    }
}

/// Value of `field` at `x` (nm).
pub fn interpolate_field(field: &LineField, x: f64) -> Result<f64> {
    field.at(x)
}
