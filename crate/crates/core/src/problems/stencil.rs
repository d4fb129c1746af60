//! Five-point stencils on a uniform `nx x ny` grid.
//!
//! Unknowns are numbered row-major with `x` running fastest, so grid point
//! `(ix, iy)` is unknown `iy * nx + ix`. Neighbours that fall outside the
//! grid are dropped and the centre coefficient is left unchanged (Dirichlet
//! truncation).
//!
//! Orientation: `west = (ix-1, iy)`, `east = (ix+1, iy)`,
//! `north = (ix, iy-1)`, `south = (ix, iy+1)`.

use crate::error::{Error, Result};
use crate::kernels::CsrMatrix;

/// `epsilon` of the unsymmetric convection-like stencil.
pub const PTP1_EPSILON: f64 = 1.0 - 0.001;

/// Stencil weights for one interior point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FivePoint {
    pub north: f64,
    pub west: f64,
    pub centre: f64,
    pub east: f64,
    pub south: f64,
}

impl FivePoint {
    pub fn row_sum(&self) -> f64 {
        self.north + self.west + self.centre + self.east + self.south
    }
}

/// Modified Poisson stencil: `-1` north/west, `4` centre, `-eps` east/south.
pub const PTP1: FivePoint = FivePoint {
    north: -1.0,
    west: -1.0,
    centre: 4.0,
    east: -PTP1_EPSILON,
    south: -PTP1_EPSILON,
};

/// Shifted (indefinite) Laplacian: `-1` on every neighbour, `1` centre.
pub const PTP2: FivePoint = FivePoint {
    north: -1.0,
    west: -1.0,
    centre: 1.0,
    east: -1.0,
    south: -1.0,
};

/// Assembles a five-point stencil matrix. Rows are emitted in increasing
/// column order directly, so no sorting pass is needed.
pub fn five_point(nx: usize, ny: usize, w: FivePoint) -> Result<CsrMatrix> {
    if nx < 2 || ny < 2 {
        return Err(Error::InvalidArgument(format!(
            "stencil grid must be at least 2x2, got {nx}x{ny}"
        )));
    }
    let n = nx * ny;
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::with_capacity(5 * n);
    let mut values = Vec::with_capacity(5 * n);
    row_ptr.push(0);
    for iy in 0..ny {
        for ix in 0..nx {
            let k = iy * nx + ix;
            if iy > 0 {
                col_idx.push(k - nx);
                values.push(w.north);
            }
            if ix > 0 {
                col_idx.push(k - 1);
                values.push(w.west);
            }
            col_idx.push(k);
            values.push(w.centre);
            if ix + 1 < nx {
                col_idx.push(k + 1);
                values.push(w.east);
            }
            if iy + 1 < ny {
                col_idx.push(k + nx);
                values.push(w.south);
            }
            row_ptr.push(col_idx.len());
        }
    }
    CsrMatrix::new(n, n, row_ptr, col_idx, values)
}

pub fn stencil_ptp1(nx: usize, ny: usize) -> Result<CsrMatrix> {
    five_point(nx, ny, PTP1)
}

pub fn stencil_ptp2(nx: usize, ny: usize) -> Result<CsrMatrix> {
    five_point(nx, ny, PTP2)
}

/// Stored entries of a truncated five-point stencil.
pub fn five_point_nnz(nx: usize, ny: usize) -> usize {
    5 * nx * ny - 2 * nx - 2 * ny
}
