//! Uniform rectangular grids on the unit square, lowest-order Raviart-Thomas
//! velocity / piecewise-constant pressure numbering, and assembly of the
//! weighted H(div) matrix and the mixed saddle-point system.
//!
//! Velocity degrees of freedom are the average normal velocities across the
//! edges, measured against a globally fixed normal: `+x` for vertical edges and
//! `+y` for horizontal edges. Numbering is raster order, all vertical edges
//! first, then all horizontal edges, each row-major.

use crate::coeff::CoefficientField;
use crate::error::{AsmgError, Result};
use crate::linalg::{CsrMatrix, DenseMatrix, Operator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Orientation {
    /// Normal `+x`.
    Vertical,
    /// Normal `+y`.
    Horizontal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeInfo {
    pub orientation: Orientation,
    /// Adjacent cells on the `-normal` and `+normal` side.
    pub cells: [Option<usize>; 2],
    pub boundary: bool,
}

/// Local edge order used by every element matrix: left, right, bottom, top.
pub const LOCAL_EDGES: usize = 4;

/// Outward-normal sign of each local edge relative to its global normal.
pub const CELL_EDGE_SIGNS: [f64; LOCAL_EDGES] = [-1.0, 1.0, -1.0, 1.0];

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    n: usize,
    h: f64,
    edges: Vec<EdgeInfo>,
    cells: Vec<[usize; LOCAL_EDGES]>,
}

impl Grid {
    /// Grid of `n x n` cells for multilevel use; `n` must be a power of two, `n >= 2`.
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 || !n.is_power_of_two() {
            return Err(AsmgError::Config(format!(
                "grid size must be a power of two >= 2 (multilevel coarsening halves it), got {n}"
            )));
        }
        Ok(Self::build(n))
    }

    /// Grid of any size `n >= 1`; only usable on a single level.
    pub fn with_cells(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(AsmgError::Config("grid needs at least one cell".into()));
        }
        Ok(Self::build(n))
    }

    fn build(n: usize) -> Self {
        let nv = n * (n + 1);
        let mut edges = Vec::with_capacity(2 * nv);
        for j in 0..n {
            for i in 0..=n {
                let minus = (i > 0).then(|| j * n + i - 1);
                let plus = (i < n).then(|| j * n + i);
                edges.push(EdgeInfo {
                    orientation: Orientation::Vertical,
                    cells: [minus, plus],
                    boundary: i == 0 || i == n,
                });
            }
        }
        for j in 0..=n {
            for i in 0..n {
                let minus = (j > 0).then(|| (j - 1) * n + i);
                let plus = (j < n).then(|| j * n + i);
                edges.push(EdgeInfo {
                    orientation: Orientation::Horizontal,
                    cells: [minus, plus],
                    boundary: j == 0 || j == n,
                });
            }
        }
        let mut cells = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                cells.push([
                    j * (n + 1) + i,
                    j * (n + 1) + i + 1,
                    nv + j * n + i,
                    nv + (j + 1) * n + i,
                ]);
            }
        }
        Self {
            n,
            h: 1.0 / n as f64,
            edges,
            cells,
        }
    }

    /// Cells per side.
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn h(&self) -> f64 {
        self.h
    }

    #[inline]
    pub fn num_cells(&self) -> usize {
        self.n * self.n
    }

    #[inline]
    pub fn num_edges(&self) -> usize {
        2 * self.n * (self.n + 1)
    }

    #[inline]
    pub fn num_vertical_edges(&self) -> usize {
        self.n * (self.n + 1)
    }

    pub fn edge_table(&self) -> &[EdgeInfo] {
        &self.edges
    }

    pub fn cell_table(&self) -> &[[usize; LOCAL_EDGES]] {
        &self.cells
    }

    /// Edges of a cell in local order (left, right, bottom, top).
    #[inline]
    pub fn cell_edges(&self, cell: usize) -> [usize; LOCAL_EDGES] {
        self.cells[cell]
    }

    #[inline]
    pub fn cell_index(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    /// Column and row of a cell.
    #[inline]
    pub fn cell_coords(&self, cell: usize) -> (usize, usize) {
        (cell % self.n, cell / self.n)
    }

    /// Vertical edge on grid line `x = i h`, in cell row `j`.
    #[inline]
    pub fn vertical_edge(&self, i: usize, j: usize) -> usize {
        j * (self.n + 1) + i
    }

    /// Horizontal edge on grid line `y = j h`, in cell column `i`.
    #[inline]
    pub fn horizontal_edge(&self, i: usize, j: usize) -> usize {
        self.num_vertical_edges() + j * self.n + i
    }

    /// Orientation and lattice coordinates `(i, j)` of an edge, as accepted by
    /// [`Grid::vertical_edge`] / [`Grid::horizontal_edge`].
    pub fn edge_coords(&self, e: usize) -> (Orientation, usize, usize) {
        let nv = self.num_vertical_edges();
        if e < nv {
            (Orientation::Vertical, e % (self.n + 1), e / (self.n + 1))
        } else {
            let k = e - nv;
            (Orientation::Horizontal, k % self.n, k / self.n)
        }
    }
}

/// Weighted RT0 element mass matrix, local order (left, right, bottom, top).
pub fn local_mass_matrix(alpha: f64, h: f64) -> Result<DenseMatrix> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(AsmgError::InvalidCoefficient(format!(
            "element coefficient must be positive and finite, got {alpha}"
        )));
    }
    let d = alpha * h * h / 3.0;
    let o = alpha * h * h / 6.0;
    Ok(DenseMatrix::from_rows(&[
        &[d, o, 0.0, 0.0],
        &[o, d, 0.0, 0.0],
        &[0.0, 0.0, d, o],
        &[0.0, 0.0, o, d],
    ]))
}

/// Element div-div matrix. Each basis function has divergence `+-1/h` on the
/// cell, so entries are `s_i s_j` with `s` the outward signs, independent of `h`.
pub fn local_divdiv_matrix() -> DenseMatrix {
    DenseMatrix::from_fn(LOCAL_EDGES, LOCAL_EDGES, |i, j| CELL_EDGE_SIGNS[i] * CELL_EDGE_SIGNS[j])
}

/// Element matrix of `(alpha u, v) + (div u, div v)`.
pub fn local_velocity_matrix(alpha: f64, h: f64) -> Result<DenseMatrix> {
    let mut m = local_mass_matrix(alpha, h)?;
    m.add_assign_scaled(1.0, &local_divdiv_matrix());
    Ok(m)
}

fn check_field(grid: &Grid, field: &CoefficientField) -> Result<()> {
    if field.n() != grid.n() {
        return Err(AsmgError::Dimension {
            context: "coefficient field vs grid",
            expected: grid.n(),
            found: field.n(),
        });
    }
    Ok(())
}

fn assemble_elements(grid: &Grid, mut element: impl FnMut(usize) -> Result<DenseMatrix>) -> Result<CsrMatrix> {
    let mut t = Vec::with_capacity(16 * grid.num_cells());
    for c in 0..grid.num_cells() {
        let em = element(c)?;
        let dofs = grid.cell_edges(c);
        for (a, &ga) in dofs.iter().enumerate() {
            for (b, &gb) in dofs.iter().enumerate() {
                t.push((ga, gb, em[(a, b)]));
            }
        }
    }
    CsrMatrix::from_triplets(grid.num_edges(), grid.num_edges(), &t)
}

/// Weighted velocity mass matrix `M_alpha`.
pub fn assemble_mass(grid: &Grid, field: &CoefficientField) -> Result<CsrMatrix> {
    check_field(grid, field)?;
    assemble_elements(grid, |c| local_mass_matrix(field.alpha()[c], grid.h()))
}

/// Global div-div matrix.
pub fn assemble_divdiv(grid: &Grid) -> Result<CsrMatrix> {
    let d = local_divdiv_matrix();
    assemble_elements(grid, |_| Ok(d.clone()))
}

/// Matrix of the weighted H(div) inner product on the velocity space.
pub fn assemble_velocity(grid: &Grid, field: &CoefficientField) -> Result<CsrMatrix> {
    check_field(grid, field)?;
    assemble_elements(grid, |c| local_velocity_matrix(field.alpha()[c], grid.h()))
}

/// Divergence matrix, one row per cell: `B[T, e] = (div phi_e, 1)_T = +-h`.
pub fn assemble_divergence(grid: &Grid) -> Result<CsrMatrix> {
    let h = grid.h();
    let mut t = Vec::with_capacity(4 * grid.num_cells());
    for c in 0..grid.num_cells() {
        for (k, &e) in grid.cell_edges(c).iter().enumerate() {
            t.push((c, e, CELL_EDGE_SIGNS[k] * h));
        }
    }
    CsrMatrix::from_triplets(grid.num_cells(), grid.num_edges(), &t)
}

/// The mixed system
/// `[[M_alpha, -B^T], [-B, 0]] (u, p) = (rhs_u, rhs_p)`
/// together with the velocity matrix `A = M_alpha + B^T M_p^{-1} B` and the
/// diagonal pressure mass matrix used by the block preconditioner.
#[derive(Debug, Clone)]
pub struct SaddleSystem {
    pub n: usize,
    pub h: f64,
    pub m_alpha: CsrMatrix,
    pub b_div: CsrMatrix,
    pub a: CsrMatrix,
    /// Diagonal of the P0 mass matrix (all entries `h^2`).
    pub m_p: Vec<f64>,
    pub rhs_u: Vec<f64>,
    pub rhs_p: Vec<f64>,
}

impl SaddleSystem {
    pub fn dim_u(&self) -> usize {
        self.m_alpha.nrows()
    }

    pub fn dim_p(&self) -> usize {
        self.b_div.nrows()
    }

    pub fn rhs(&self) -> Vec<f64> {
        let mut r = self.rhs_u.clone();
        r.extend_from_slice(&self.rhs_p);
        r
    }

    /// Sets the pressure right-hand side from a cellwise source `f`:
    /// `rhs_p = -M_p f` (the velocity side stays zero for homogeneous pressure data).
    pub fn set_source(&mut self, f: &[f64]) -> Result<()> {
        if f.len() != self.dim_p() {
            return Err(AsmgError::Dimension {
                context: "source vector",
                expected: self.dim_p(),
                found: f.len(),
            });
        }
        self.rhs_p = f.iter().zip(&self.m_p).map(|(fi, mi)| -fi * mi).collect();
        Ok(())
    }

    /// Assembled indefinite matrix.
    pub fn full_matrix(&self) -> CsrMatrix {
        let nu = self.dim_u();
        let mut t = Vec::with_capacity(self.m_alpha.nnz() + 2 * self.b_div.nnz());
        for i in 0..nu {
            let (c, v) = self.m_alpha.row(i);
            t.extend(c.iter().zip(v).map(|(&c, &v)| (i, c, v)));
        }
        for p in 0..self.dim_p() {
            let (c, v) = self.b_div.row(p);
            for (&e, &val) in c.iter().zip(v) {
                t.push((nu + p, e, -val));
                t.push((e, nu + p, -val));
            }
        }
        let dim = nu + self.dim_p();
        CsrMatrix::from_triplets(dim, dim, &t).expect("indices in range")
    }
}

impl Operator for SaddleSystem {
    fn dim(&self) -> usize {
        self.dim_u() + self.dim_p()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        let nu = self.dim_u();
        let (u, p) = x.split_at(nu);
        let (yu, yp) = y.split_at_mut(nu);
        self.m_alpha.spmv(u, yu);
        let mut btp = vec![0.0; nu];
        self.b_div.spmv_transpose_add(p, &mut btp);
        for (a, b) in yu.iter_mut().zip(&btp) {
            *a -= b;
        }
        self.b_div.spmv(u, yp);
        yp.iter_mut().for_each(|v| *v = -*v);
        Ok(())
    }
}

/// Assembles all blocks of the mixed system with zero right-hand side.
pub fn assemble_saddle(grid: &Grid, field: &CoefficientField) -> Result<SaddleSystem> {
    let m_alpha = assemble_mass(grid, field)?;
    let b_div = assemble_divergence(grid)?;
    let a = assemble_velocity(grid, field)?;
    let h2 = grid.h() * grid.h();
    Ok(SaddleSystem {
        n: grid.n(),
        h: grid.h(),
        m_p: vec![h2; grid.num_cells()],
        rhs_u: vec![0.0; grid.num_edges()],
        rhs_p: vec![0.0; grid.num_cells()],
        m_alpha,
        b_div,
        a,
    })
}

/// Cellwise averages of the source that is `c` on `[0.2,0.3]x[0.7,0.8]`,
/// `-c` on `[0.7,0.8]x[0.2,0.3]` and zero elsewhere.
pub fn assemble_rhs(grid: &Grid, c: f64) -> Vec<f64> {
    let n = grid.n();
    let nf = n as f64;
    // box bounds in cell units
    let plus = ([0.2 * nf, 0.3 * nf], [0.7 * nf, 0.8 * nf]);
    let minus = ([0.7 * nf, 0.8 * nf], [0.2 * nf, 0.3 * nf]);
    let overlap = |lo: f64, hi: f64, k: usize| -> f64 {
        let (a, b) = (k as f64, k as f64 + 1.0);
        (hi.min(b) - lo.max(a)).max(0.0)
    };
    let mut f = vec![0.0; grid.num_cells()];
    if c == 0.0 {
        return f;
    }
    for j in 0..n {
        for i in 0..n {
            let wp = overlap(plus.0[0], plus.0[1], i) * overlap(plus.1[0], plus.1[1], j);
            let wm = overlap(minus.0[0], minus.0[1], i) * overlap(minus.1[0], minus.1[1], j);
            f[grid.cell_index(i, j)] = c * (wp - wm);
        }
    }
    f
}
