use super::{Dimensionality, GateLayout};
use crate::error::{invalid, Error, Result};
use serde::{Deserialize, Serialize};

/// Gate-to-well distance (nm); taken as the standard deviation of the
/// screening kernel.
pub const SCREENING_DEPTH: f64 = 40.0;

/// meV of potential energy per mV of gate voltage.
pub const DEFAULT_LEVER_ARM: f64 = 0.1;

/// Largest allowed grid spacing (nm).
pub const MAX_SPACING: f64 = 1.0;

/// Rectangle [x0, x0 + (nx+1)hx] × [y0, y0 + (ny+1)hy] with Dirichlet walls;
/// the unknowns are the nx × ny interior nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub x0: f64,
    pub y0: f64,
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
}

impl Region {
    /// Smallest uniform grid on the rectangle with spacing ≤ `h_max`.
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64, h_max: f64) -> Result<Self> {
        if !(h_max > 0.0) {
            return Err(invalid("h_max", "must be > 0"));
        }
        if h_max > MAX_SPACING {
            return Err(Error::GridTooCoarse { spacing: h_max });
        }
        if !(x1 > x0 && y1 > y0) {
            return Err(invalid("region", "empty rectangle"));
        }
        let cells = |l: f64| ((l / h_max) - 1e-9).ceil().max(2.0) as usize;
        let (cx, cy) = (cells(x1 - x0), cells(y1 - y0));
        Ok(Self { x0, y0, nx: cx - 1, ny: cy - 1, hx: (x1 - x0) / cx as f64, hy: (y1 - y0) / cy as f64 })
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + (i + 1) as f64 * self.hx
    }

    pub fn y(&self, j: usize) -> f64 {
        self.y0 + (j + 1) as f64 * self.hy
    }

    pub fn x1(&self) -> f64 {
        self.x0 + (self.nx + 1) as f64 * self.hx
    }

    pub fn y1(&self) -> f64 {
        self.y0 + (self.ny + 1) as f64 * self.hy
    }

    pub fn center(&self) -> (f64, f64) {
        (0.5 * (self.x0 + self.x1()), 0.5 * (self.y0 + self.y1()))
    }
}

/// Potential energy (meV) on the interior nodes of a region, x fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialGrid {
    pub region: Region,
    pub values: Vec<f64>,
}

impl PotentialGrid {
    pub fn from_fn(region: Region, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(region.len());
        for j in 0..region.ny {
            for i in 0..region.nx {
                values.push(f(region.x(i), region.y(j)));
            }
        }
        Self { region, values }
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.region.nx + i]
    }

    /// Position and value of the grid minimum.
    pub fn minimum(&self) -> (f64, f64, f64) {
        let (k, v) = self
            .values
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |(bk, bv), (k, &v)| if v < bv { (k, v) } else { (bk, bv) });
        let r = &self.region;
        (r.x(k % r.nx), r.y(k / r.nx), v)
    }

    /// Strict local minima over the 8-neighborhood, excluding the outermost
    /// interior ring.
    pub fn local_minima(&self) -> Vec<(f64, f64, f64)> {
        let r = &self.region;
        let mut out = Vec::new();
        for j in 1..r.ny.saturating_sub(1) {
            for i in 1..r.nx.saturating_sub(1) {
                let v = self.at(i, j);
                let mut lowest = true;
                'n: for dj in -1i64..=1 {
                    for di in -1i64..=1 {
                        if (di, dj) != (0, 0) && self.at((i as i64 + di) as usize, (j as i64 + dj) as usize) <= v {
                            lowest = false;
                            break 'n;
                        }
                    }
                }
                if lowest {
                    out.push((r.x(i), r.y(j), v));
                }
            }
        }
        out
    }

    /// Adds the energy e·E·(r − r₀)·n̂ of a lateral field `e_lat` (V/m)
    /// along heading `angle`, with r₀ the region center.
    pub fn with_field(&self, e_lat: f64, angle: f64) -> Self {
        let (cx, cy) = self.region.center();
        let (c, s) = (angle.cos(), angle.sin());
        // V/m · nm = 1e-9 V → 1e-6 meV per unit charge.
        let k = e_lat * 1e-6;
        let r = self.region;
        let mut out = self.clone();
        for j in 0..r.ny {
            for i in 0..r.nx {
                out.values[j * r.nx + i] += k * ((r.x(i) - cx) * c + (r.y(j) - cy) * s);
            }
        }
        out
    }
}

/// Blurred indicator of the gate strip [a, b].
fn strip(x: f64, a: f64, b: f64, sigma: f64) -> f64 {
    let s = std::f64::consts::SQRT_2 * sigma;
    0.5 * (libm::erf((b - x) / s) - libm::erf((a - x) / s))
}

/// Per-node strip weights for the gates intersecting the kernel support,
/// returned as (first gate index, weights[gate][node]).
fn strip_weights(nodes: &[f64], pitch: f64, gap: f64, sigma: f64) -> (i64, Vec<Vec<f64>>) {
    let reach = 8.0 * sigma + pitch;
    let lo = ((nodes[0] - reach) / pitch).floor() as i64;
    let hi = ((nodes[nodes.len() - 1] + reach) / pitch).ceil() as i64;
    let w = (lo..=hi)
        .map(|g| {
            let a = g as f64 * pitch + 0.5 * gap;
            let b = (g + 1) as f64 * pitch - 0.5 * gap;
            nodes.iter().map(|&x| strip(x, a, b, sigma)).collect()
        })
        .collect();
    (lo, w)
}

/// Potential energy of an arbitrary voltage pattern on the layout geometry.
/// Gaps carry 0 V; positive voltage lowers the electron energy.
pub fn potential_from_pattern(
    layout: &GateLayout,
    region: Region,
    lever_arm: f64,
    voltage: impl Fn(i64, i64) -> f64,
) -> Result<PotentialGrid> {
    layout.validate()?;
    let sigma = SCREENING_DEPTH;
    let xs: Vec<f64> = (0..region.nx).map(|i| region.x(i)).collect();
    let ys: Vec<f64> = (0..region.ny).map(|j| region.y(j)).collect();
    let (ix0, wx) = strip_weights(&xs, layout.pitch, layout.gap, sigma);
    let mut values = vec![0.0; region.len()];
    match layout.dimensionality {
        Dimensionality::Clavier => {
            let mut row = vec![0.0; region.nx];
            for (gi, w) in wx.iter().enumerate() {
                let v = voltage(ix0 + gi as i64, 0);
                for (r, &wi) in row.iter_mut().zip(w) {
                    *r += v * wi;
                }
            }
            for j in 0..region.ny {
                for i in 0..region.nx {
                    values[j * region.nx + i] = -lever_arm * row[i];
                }
            }
        }
        Dimensionality::Clavette => {
            let (iy0, wy) = strip_weights(&ys, layout.pitch, layout.gap, sigma);
            // A[gate_j][node_i] = Σ_gi V(gi, gj) wx[gi][node_i]
            let a: Vec<Vec<f64>> = (0..wy.len())
                .map(|gj| {
                    let mut acc = vec![0.0; region.nx];
                    for (gi, w) in wx.iter().enumerate() {
                        let v = voltage(ix0 + gi as i64, iy0 + gj as i64);
                        if v != 0.0 {
                            for (s, &wi) in acc.iter_mut().zip(w) {
                                *s += v * wi;
                            }
                        }
                    }
                    acc
                })
                .collect();
            for j in 0..region.ny {
                let row = &mut values[j * region.nx..(j + 1) * region.nx];
                for (gj, aj) in a.iter().enumerate() {
                    let wj = wy[gj][j];
                    if wj != 0.0 {
                        for (r, &ai) in row.iter_mut().zip(aj) {
                            *r -= lever_arm * wj * ai;
                        }
                    }
                }
            }
        }
    }
    Ok(PotentialGrid { region, values })
}

/// Conveyor potential at time τ with the default lever arm.
pub fn potential_from_gates(layout: &GateLayout, tau: f64, region: Region) -> Result<PotentialGrid> {
    potential_from_pattern(layout, region, DEFAULT_LEVER_ARM, |i, j| layout.voltage(i, j, tau))
}
