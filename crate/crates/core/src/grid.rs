//! Tensor grids: the periodic collocation grid carrying operators, and the
//! denser sampling grid used for classification and quadrature.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Periodic collocation grid for operator assembly.
///
/// Points per axis run over `x_j = -l + 2l*j/n_axis`, `j = 0..n_axis`, so the
/// box is `[-l, l)^dim` with periodic wrap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: usize,
    /// Box half-width.
    pub l: f64,
    /// Points per axis (even).
    pub n_axis: usize,
    /// Semiclassical parameter.
    pub h: f64,
    /// Dilation angle in radians.
    pub theta: f64,
}

/// Matrix side `n_axis^dim` is capped to keep dense solves at desk scale.
pub const SIZE_CAP: usize = 10_000;

impl GridSpec {
    pub fn new(dim: usize, l: f64, n_axis: usize, h: f64, theta: f64) -> Result<Self> {
        let g = GridSpec {
            dim,
            l,
            n_axis,
            h,
            theta,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.dim > 2 {
            return Err(Error::InvalidGrid(format!("dimension {} not in {{1,2}}", self.dim)));
        }
        if self.n_axis % 2 != 0 || self.n_axis < 4 {
            return Err(Error::InvalidGrid(format!("points per axis {} must be even and >= 4", self.n_axis)));
        }
        if !(self.h > 0.0) {
            return Err(Error::InvalidGrid(format!("h = {} must be positive", self.h)));
        }
        if !(0.0..=0.15).contains(&self.theta) {
            return Err(Error::InvalidGrid(format!("theta = {} outside [0, 0.15]", self.theta)));
        }
        if !(self.l > 0.0) {
            return Err(Error::InvalidGrid("box half-width must be positive".into()));
        }
        if self.side() > SIZE_CAP {
            return Err(Error::InvalidGrid(format!(
                "matrix side {} exceeds cap {}",
                self.side(),
                SIZE_CAP
            )));
        }
        Ok(())
    }

    /// Dense matrix side `n_axis^dim`.
    pub fn side(&self) -> usize {
        self.n_axis.pow(self.dim as u32)
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.l / self.n_axis as f64
    }

    /// Cell volume `dx^dim`.
    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.dim as i32)
    }

    /// 1D collocation abscissas.
    pub fn axis(&self) -> Vec<f64> {
        let dx = self.dx();
        (0..self.n_axis).map(|j| -self.l + dx * j as f64).collect()
    }

    /// Fourier frequencies `k_m` such that the mode is `exp(i k_m x)`, in FFT
    /// ordering (0, 1, .., n/2-1, -n/2, .., -1) scaled by `pi/l`.
    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.n_axis as isize;
        let scale = std::f64::consts::PI / self.l;
        (0..n)
            .map(|m| {
                let m = if m <= n / 2 - 1 { m } else { m - n };
                scale * m as f64
            })
            .collect()
    }

    /// Grid momentum cutoff `h * pi * n /(2 l)`: largest `|h k|` on the grid.
    pub fn momentum_cutoff(&self) -> f64 {
        self.h * std::f64::consts::PI * self.n_axis as f64 / (2.0 * self.l)
    }

    /// Coordinates of the flat-index point.
    pub fn point(&self, idx: usize) -> Vec<f64> {
        let dx = self.dx();
        match self.dim {
            1 => vec![-self.l + dx * idx as f64],
            2 => {
                let i = idx / self.n_axis;
                let j = idx % self.n_axis;
                vec![-self.l + dx * i as f64, -self.l + dx * j as f64]
            }
            _ => unreachable!(),
        }
    }

    /// Iterate flat indices with coordinates.
    pub fn points(&self) -> impl Iterator<Item = (usize, Vec<f64>)> + '_ {
        (0..self.side()).map(|idx| (idx, self.point(idx)))
    }
}

/// Plain sampling grid for classification, fills and quadrature; no spectral
/// role, so it can be much denser than the collocation grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldGrid {
    pub dim: usize,
    pub half_width: f64,
    pub points_per_axis: usize,
}

impl FieldGrid {
    pub fn new(dim: usize, half_width: f64, points_per_axis: usize) -> Self {
        assert!(dim >= 1 && dim <= 2 && points_per_axis >= 4);
        FieldGrid {
            dim,
            half_width,
            points_per_axis,
        }
    }

    /// Cell width; nodes are cell midpoints, so the box is covered exactly.
    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.points_per_axis as f64
    }

    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Midpoint coordinates of the flat-index cell.
    pub fn point(&self, idx: usize) -> Vec<f64> {
        let dx = self.dx();
        let x0 = -self.half_width + 0.5 * dx;
        match self.dim {
            1 => vec![x0 + dx * idx as f64],
            2 => {
                let i = idx / self.points_per_axis;
                let j = idx % self.points_per_axis;
                vec![x0 + dx * i as f64, x0 + dx * j as f64]
            }
            _ => unreachable!(),
        }
    }

    pub fn index(&self, multi: &[usize]) -> usize {
        match self.dim {
            1 => multi[0],
            2 => multi[0] * self.points_per_axis + multi[1],
            _ => unreachable!(),
        }
    }

    /// 4-neighbourhood (2 in 1D) of a flat index.
    pub fn neighbors(&self, idx: usize, out: &mut Vec<usize>) {
        out.clear();
        let n = self.points_per_axis;
        match self.dim {
            1 => {
                if idx > 0 {
                    out.push(idx - 1);
                }
                if idx + 1 < n {
                    out.push(idx + 1);
                }
            }
            2 => {
                let i = idx / n;
                let j = idx % n;
                if i > 0 {
                    out.push(idx - n);
                }
                if i + 1 < n {
                    out.push(idx + n);
                }
                if j > 0 {
                    out.push(idx - 1);
                }
                if j + 1 < n {
                    out.push(idx + 1);
                }
            }
            _ => unreachable!(),
        }
    }

    /// True if the flat index lies on the outer layer of the grid.
    pub fn on_boundary(&self, idx: usize) -> bool {
        let n = self.points_per_axis;
        match self.dim {
            1 => idx == 0 || idx == n - 1,
            2 => {
                let i = idx / n;
                let j = idx % n;
                i == 0 || j == 0 || i == n - 1 || j == n - 1
            }
            _ => unreachable!(),
        }
    }

    /// Grid refined by a factor two (same box).
    pub fn refined(&self) -> FieldGrid {
        FieldGrid {
            dim: self.dim,
            half_width: self.half_width,
            points_per_axis: self.points_per_axis * 2,
        }
    }
}
