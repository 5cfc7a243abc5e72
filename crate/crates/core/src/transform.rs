//! Overlapping coverings, the fine/coarse splitting of edge DOFs and the
//! compatible two-level basis transformation.
//!
//! For a grid with `n` even, each edge of the coarse grid (`H = 2h`) is the
//! union of two fine edges `a` (lower `x` or `y`) and `b`. The transformed
//! basis keeps every other fine edge ("interior") and replaces each pair by a
//! half-difference and a half-sum,
//!
//! ```text
//! u_d = (u_a - u_b) / 2,   u_s = (u_a + u_b) / 2,
//! ```
//!
//! so that `u = J u_hat` with `u_a = u_s + u_d`, `u_b = u_s - u_d`. The
//! half-sum is the average normal velocity over the coarse edge, i.e. the
//! coarse RT0 DOF, so the coarse block indexes coarse edges. Two-level ordering is
//! `[interior | differences | sums]`, the first two groups forming the fine
//! set of size `N1` and the sums the coarse set of size `N2 = |E_H|`.

use std::collections::HashMap;

use crate::coeff::CoefficientField;
use crate::error::{AsmgError, Result};
use crate::linalg::{CsrMatrix, DenseMatrix};
use crate::mesh::{local_velocity_matrix, Grid, Orientation};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    /// Fine edge not lying on a coarse edge; index into the interior block.
    Interior(usize),
    /// Fine edge lying on coarse edge `coarse`, `pos` 0 for the lower half.
    Pair { coarse: usize, pos: u8 },
}

/// Global two-level transformation for one level.
#[derive(Debug, Clone)]
pub struct TwoLevelTransform {
    n: usize,
    slots: Vec<Slot>,
    interior: Vec<usize>,
    pairs: Vec<[usize; 2]>,
}

impl TwoLevelTransform {
    pub fn new(fine: &Grid) -> Result<Self> {
        let n = fine.n();
        if n < 2 || !n.is_multiple_of(2) {
            return Err(AsmgError::Config(format!("cannot coarsen a grid with {n} cells per side")));
        }
        let coarse = Grid::with_cells(n / 2)?;
        let mut slots = Vec::with_capacity(fine.num_edges());
        let mut interior = Vec::with_capacity(n * n);
        let mut pairs = vec![[usize::MAX; 2]; coarse.num_edges()];
        for e in 0..fine.num_edges() {
            let slot = match fine.edge_coords(e) {
                (Orientation::Vertical, i, j) if i % 2 == 0 => Slot::Pair {
                    coarse: coarse.vertical_edge(i / 2, j / 2),
                    pos: (j % 2) as u8,
                },
                (Orientation::Horizontal, i, j) if j % 2 == 0 => Slot::Pair {
                    coarse: coarse.horizontal_edge(i / 2, j / 2),
                    pos: (i % 2) as u8,
                },
                _ => {
                    interior.push(e);
                    Slot::Interior(interior.len() - 1)
                }
            };
            if let Slot::Pair { coarse, pos } = slot {
                pairs[coarse][pos as usize] = e;
            }
            slots.push(slot);
        }
        debug_assert!(pairs.iter().all(|p| p[0] != usize::MAX && p[1] != usize::MAX));
        Ok(Self {
            n,
            slots,
            interior,
            pairs,
        })
    }

    /// Cells per side of the fine grid.
    pub fn n_fine(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.slots.len()
    }

    pub fn num_interior(&self) -> usize {
        self.interior.len()
    }

    pub fn num_coarse(&self) -> usize {
        self.pairs.len()
    }

    /// Size of the fine set (interior edges plus half-differences).
    pub fn n1(&self) -> usize {
        self.interior.len() + self.pairs.len()
    }

    /// Size of the coarse set, `|E_H|`.
    pub fn n2(&self) -> usize {
        self.pairs.len()
    }

    pub fn slot(&self, e: usize) -> Slot {
        self.slots[e]
    }

    pub fn pairs(&self) -> &[[usize; 2]] {
        &self.pairs
    }

    pub fn interior_edges(&self) -> &[usize] {
        &self.interior
    }

    #[inline]
    pub fn diff_index(&self, coarse: usize) -> usize {
        self.interior.len() + coarse
    }

    #[inline]
    pub fn sum_index(&self, coarse: usize) -> usize {
        self.n1() + coarse
    }

    /// `u = J u_hat`.
    pub fn from_two_level(&self, uh: &[f64], u: &mut [f64]) {
        for (k, &e) in self.interior.iter().enumerate() {
            u[e] = uh[k];
        }
        let (ni, n1) = (self.interior.len(), self.n1());
        for (c, &[a, b]) in self.pairs.iter().enumerate() {
            let (d, s) = (uh[ni + c], uh[n1 + c]);
            u[a] = s + d;
            u[b] = s - d;
        }
    }

    /// `u_hat = J^{-1} u`.
    pub fn to_two_level(&self, u: &[f64], uh: &mut [f64]) {
        for (k, &e) in self.interior.iter().enumerate() {
            uh[k] = u[e];
        }
        let (ni, n1) = (self.interior.len(), self.n1());
        for (c, &[a, b]) in self.pairs.iter().enumerate() {
            uh[ni + c] = 0.5 * (u[a] - u[b]);
            uh[n1 + c] = 0.5 * (u[a] + u[b]);
        }
    }

    /// `d_hat = J^T d`, the transform of residuals and right-hand sides.
    pub fn apply_jt(&self, d: &[f64], dh: &mut [f64]) {
        for (k, &e) in self.interior.iter().enumerate() {
            dh[k] = d[e];
        }
        let (ni, n1) = (self.interior.len(), self.n1());
        for (c, &[a, b]) in self.pairs.iter().enumerate() {
            dh[ni + c] = d[a] - d[b];
            dh[n1 + c] = d[a] + d[b];
        }
    }

    /// `J` as a sparse matrix (rows: edges, columns: two-level indices).
    pub fn j_matrix(&self) -> CsrMatrix {
        let mut t = Vec::with_capacity(self.interior.len() + 4 * self.pairs.len());
        for (k, &e) in self.interior.iter().enumerate() {
            t.push((e, k, 1.0));
        }
        for (c, &[a, b]) in self.pairs.iter().enumerate() {
            let (d, s) = (self.diff_index(c), self.sum_index(c));
            t.extend([(a, d, 1.0), (a, s, 1.0), (b, d, -1.0), (b, s, 1.0)]);
        }
        CsrMatrix::from_triplets(self.dim(), self.dim(), &t).expect("indices in range")
    }

    /// `J^{-1}` as a sparse matrix, entries in `{1, +-1/2}`.
    pub fn j_inverse_matrix(&self) -> CsrMatrix {
        let mut t = Vec::with_capacity(self.interior.len() + 4 * self.pairs.len());
        for (k, &e) in self.interior.iter().enumerate() {
            t.push((k, e, 1.0));
        }
        for (c, &[a, b]) in self.pairs.iter().enumerate() {
            let (d, s) = (self.diff_index(c), self.sum_index(c));
            t.extend([(d, a, 0.5), (d, b, -0.5), (s, a, 0.5), (s, b, 0.5)]);
        }
        CsrMatrix::from_triplets(self.dim(), self.dim(), &t).expect("indices in range")
    }

    /// `J^T A J`.
    pub fn transform_matrix(&self, a: &CsrMatrix) -> Result<CsrMatrix> {
        CsrMatrix::triple_product(&self.j_matrix(), a)
    }

    /// Local transformation of a subdomain whose edge set is `dofs` (sorted).
    /// Fails if some coarse edge has only one of its halves in `dofs`.
    pub fn local(&self, dofs: &[usize]) -> Result<LocalTwoLevel> {
        let pos: HashMap<usize, usize> = dofs.iter().enumerate().map(|(p, &e)| (e, p)).collect();
        let mut fine = Vec::new();
        let mut coarse = Vec::new();
        for &e in dofs {
            match self.slots[e] {
                Slot::Interior(k) => fine.push(k),
                Slot::Pair { coarse: c, pos: p } => {
                    let partner = self.pairs[c][1 - p as usize];
                    if !pos.contains_key(&partner) {
                        return Err(AsmgError::Internal(format!(
                            "subdomain contains edge {e} but not its partner {partner} on coarse edge {c}"
                        )));
                    }
                    if p == 0 {
                        fine.push(self.diff_index(c));
                        coarse.push(c);
                    }
                }
            }
        }
        fine.sort_unstable();
        coarse.sort_unstable();
        let ni = self.interior.len();
        let mut columns = Vec::with_capacity(dofs.len());
        for &g in &fine {
            if g < ni {
                columns.push(vec![(pos[&self.interior[g]], 1.0)]);
            } else {
                let [a, b] = self.pairs[g - ni];
                columns.push(vec![(pos[&a], 1.0), (pos[&b], -1.0)]);
            }
        }
        for &c in &coarse {
            let [a, b] = self.pairs[c];
            columns.push(vec![(pos[&a], 1.0), (pos[&b], 1.0)]);
        }
        Ok(LocalTwoLevel { fine, coarse, columns })
    }

    /// Checks `R_i J = J_i R_hat_i` entrywise for one subdomain.
    pub fn check_compatibility(&self, dofs: &[usize], local: &LocalTwoLevel) -> Result<()> {
        let j = self.j_matrix();
        let mut lhs = Vec::new();
        for (r, &e) in dofs.iter().enumerate() {
            let (cols, vals) = j.row(e);
            lhs.extend(cols.iter().zip(vals).map(|(&c, &v)| (r, c, v)));
        }
        let mut rhs = Vec::new();
        for (t, col) in local.columns.iter().enumerate() {
            let g = local.global_index(self, t);
            rhs.extend(col.iter().map(|&(r, v)| (r, g, v)));
        }
        let key = |x: &(usize, usize, f64)| (x.0, x.1);
        lhs.sort_by_key(key);
        rhs.sort_by_key(key);
        if lhs != rhs {
            return Err(AsmgError::Internal("two-level transforms are not compatible".into()));
        }
        Ok(())
    }
}

/// Local counterpart `J_i` of the two-level transform on one subdomain.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalTwoLevel {
    /// Global two-level indices (all `< N1`) of the local fine set, sorted.
    pub fine: Vec<usize>,
    /// Coarse edges of the local coarse set, sorted.
    pub coarse: Vec<usize>,
    /// Column `t` of `J_i`: `(local dof position, +-1)` entries. Local
    /// two-level order is `fine` followed by `coarse`.
    pub columns: Vec<Vec<(usize, f64)>>,
}

impl LocalTwoLevel {
    pub fn n1(&self) -> usize {
        self.fine.len()
    }

    pub fn n2(&self) -> usize {
        self.coarse.len()
    }

    /// Global two-level index of local two-level index `t` (the map `R_hat_i`).
    pub fn global_index(&self, global: &TwoLevelTransform, t: usize) -> usize {
        if t < self.fine.len() {
            self.fine[t]
        } else {
            global.sum_index(self.coarse[t - self.fine.len()])
        }
    }

    /// Dense `J_i^T A_i J_i`, exactly symmetric.
    pub fn transform(&self, a: &DenseMatrix) -> DenseMatrix {
        let m = self.columns.len();
        // B = A J_i, column by column
        let mut b = DenseMatrix::zeros(m, a.nrows());
        for (t, col) in self.columns.iter().enumerate() {
            let row = b.row_mut(t);
            for &(p, s) in col {
                for (x, y) in row.iter_mut().zip(a.row(p)) {
                    *x += s * y;
                }
            }
        }
        let mut out = DenseMatrix::zeros(m, m);
        for s in 0..m {
            for t in s..m {
                let bt = b.row(t);
                out[(s, t)] = self.columns[s].iter().map(|&(p, v)| v * bt[p]).sum();
            }
        }
        out.symmetrize_from_upper();
        out
    }
}

/// Half-open box of cells `[i0, i1) x [j0, j1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellBox {
    pub i0: usize,
    pub j0: usize,
    pub i1: usize,
    pub j1: usize,
}

impl CellBox {
    pub fn contains(&self, other: &CellBox) -> bool {
        self.i0 <= other.i0 && other.i1 <= self.i1 && self.j0 <= other.j0 && other.j1 <= self.j1
    }

    /// The same region on the grid coarsened by two.
    pub fn coarsen(&self) -> CellBox {
        CellBox {
            i0: self.i0 / 2,
            j0: self.j0 / 2,
            i1: self.i1.div_ceil(2),
            j1: self.j1.div_ceil(2),
        }
    }

    pub fn cells(&self, grid: &Grid) -> Vec<usize> {
        let mut out = Vec::with_capacity((self.i1 - self.i0) * (self.j1 - self.j0));
        for j in self.j0..self.j1 {
            for i in self.i0..self.i1 {
                out.push(grid.cell_index(i, j));
            }
        }
        out
    }

    /// All edges of the cells in the box, sorted.
    pub fn edges(&self, grid: &Grid) -> Vec<usize> {
        let mut out: Vec<usize> = self.cells(grid).iter().flat_map(|&c| grid.cell_edges(c)).collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Subdomain {
    pub cell_box: CellBox,
    pub cells: Vec<usize>,
    /// Local DOFs in ascending global edge order; position = local index (the map `R_i`).
    pub dofs: Vec<usize>,
}

/// Staggered square subdomains of `sub x sub` cells at offsets that are multiples of `stride`.
#[derive(Debug, Clone, PartialEq)]
pub struct Covering {
    pub n: usize,
    pub sub: usize,
    pub stride: usize,
    pub subdomains: Vec<Subdomain>,
    /// Number of subdomains containing each cell.
    pub multiplicity: Vec<u32>,
}

/// Builds the covering of `grid` by `sub_cells x sub_cells` subdomains shifted
/// by `stride`. Grids smaller than a subdomain are covered by one subdomain.
pub fn build_covering(grid: &Grid, sub_cells: usize, stride: usize) -> Result<Covering> {
    let n = grid.n();
    if sub_cells == 0 || stride == 0 {
        return Err(AsmgError::Config("subdomain size and stride must be positive".into()));
    }
    let (sub, stride) = if sub_cells >= n { (n, n) } else { (sub_cells, stride) };
    if stride > sub {
        return Err(AsmgError::Config(format!(
            "stride {stride} larger than subdomain size {sub} leaves cells uncovered"
        )));
    }
    if !(n - sub).is_multiple_of(stride) {
        return Err(AsmgError::Config(format!(
            "subdomains of {sub} cells with stride {stride} do not tile a grid of {n} cells"
        )));
    }
    let count = (n - sub) / stride + 1;
    let mut subdomains = Vec::with_capacity(count * count);
    let mut multiplicity = vec![0u32; grid.num_cells()];
    for bj in 0..count {
        for bi in 0..count {
            let cell_box = CellBox {
                i0: bi * stride,
                j0: bj * stride,
                i1: bi * stride + sub,
                j1: bj * stride + sub,
            };
            let cells = cell_box.cells(grid);
            for &c in &cells {
                multiplicity[c] += 1;
            }
            subdomains.push(Subdomain {
                cell_box,
                dofs: cell_box.edges(grid),
                cells,
            });
        }
    }
    Ok(Covering {
        n,
        sub,
        stride,
        subdomains,
        multiplicity,
    })
}

impl Covering {
    pub fn len(&self) -> usize {
        self.subdomains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subdomains.is_empty()
    }

    /// Number of subdomains containing the box.
    pub fn box_multiplicity(&self, b: &CellBox) -> usize {
        self.subdomains.iter().filter(|s| s.cell_box.contains(b)).count()
    }
}

/// Element matrices from which the matrix of one level is assembled. On the
/// finest level these are the cells; on coarser levels the local Schur
/// complements of the previous level, each supported on a patch of cells.
#[derive(Debug, Clone)]
pub struct LevelElements {
    pub boxes: Vec<CellBox>,
    /// Sorted global DOFs of each element.
    pub dofs: Vec<Vec<usize>>,
    pub matrices: Vec<DenseMatrix>,
}

impl LevelElements {
    /// RT0 element matrices of all cells, with DOFs in ascending edge order.
    pub fn from_cells(grid: &Grid, field: &CoefficientField) -> Result<Self> {
        if field.n() != grid.n() {
            return Err(AsmgError::Dimension {
                context: "coefficient field vs grid",
                expected: grid.n(),
                found: field.n(),
            });
        }
        let mut boxes = Vec::with_capacity(grid.num_cells());
        let mut dofs = Vec::with_capacity(grid.num_cells());
        let mut matrices = Vec::with_capacity(grid.num_cells());
        for c in 0..grid.num_cells() {
            let (i, j) = grid.cell_coords(c);
            boxes.push(CellBox {
                i0: i,
                j0: j,
                i1: i + 1,
                j1: j + 1,
            });
            let local = local_velocity_matrix(field.alpha()[c], grid.h())?;
            let edges = grid.cell_edges(c);
            let mut order: Vec<usize> = (0..edges.len()).collect();
            order.sort_by_key(|&k| edges[k]);
            dofs.push(order.iter().map(|&k| edges[k]).collect());
            matrices.push(local.select(&order, &order));
        }
        Ok(Self { boxes, dofs, matrices })
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    /// Assembles the global matrix `sum_e P_e^T A_e P_e`.
    pub fn assemble(&self, dim: usize) -> Result<CsrMatrix> {
        let mut t = Vec::new();
        for (dofs, m) in self.dofs.iter().zip(&self.matrices) {
            for (a, &ga) in dofs.iter().enumerate() {
                for (b, &gb) in dofs.iter().enumerate() {
                    t.push((ga, gb, m[(a, b)]));
                }
            }
        }
        CsrMatrix::from_triplets(dim, dim, &t)
    }

    /// For every element, the number of subdomains containing it; each element
    /// must lie in at least one subdomain.
    pub fn multiplicities(&self, covering: &Covering) -> Result<Vec<usize>> {
        self.boxes
            .iter()
            .enumerate()
            .map(|(e, b)| match covering.box_multiplicity(b) {
                0 => Err(AsmgError::Internal(format!("element {e} ({b:?}) lies in no subdomain"))),
                m => Ok(m),
            })
            .collect()
    }

    /// Indices of the elements contained in each subdomain.
    pub fn elements_per_subdomain(&self, covering: &Covering) -> Vec<Vec<usize>> {
        covering
            .subdomains
            .iter()
            .map(|s| (0..self.len()).filter(|&e| s.cell_box.contains(&self.boxes[e])).collect())
            .collect()
    }

    /// Local matrix `A_i = sum_{e in Omega_i} A_e / mu(e)` in the subdomain's DOF order.
    pub fn assemble_local(&self, sub: &Subdomain, members: &[usize], mult: &[usize]) -> Result<DenseMatrix> {
        let m = sub.dofs.len();
        let mut a = DenseMatrix::zeros(m, m);
        for &e in members {
            let w = 1.0 / mult[e] as f64;
            let pos: Vec<usize> = self.dofs[e]
                .iter()
                .map(|g| {
                    sub.dofs
                        .binary_search(g)
                        .map_err(|_| AsmgError::Internal(format!("element {e} DOF {g} outside subdomain")))
                })
                .collect::<Result<_>>()?;
            let em = &self.matrices[e];
            for (p, &lp) in pos.iter().enumerate() {
                for (q, &lq) in pos.iter().enumerate() {
                    a[(lp, lq)] += w * em[(p, q)];
                }
            }
        }
        Ok(a)
    }
}

/// Local matrix of subdomain `i` on the finest level.
pub fn assemble_local(grid: &Grid, field: &CoefficientField, covering: &Covering, i: usize) -> Result<DenseMatrix> {
    let elements = LevelElements::from_cells(grid, field)?;
    let mult = elements.multiplicities(covering)?;
    let members = &elements.elements_per_subdomain(covering)[i];
    elements.assemble_local(&covering.subdomains[i], members, &mult)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::{gen_random_field, IslandLayout};
    use crate::linalg::symmetric_eigenvalues;
    use crate::mesh::assemble_velocity;

    #[test]
    fn covering_counts() {
        let c = build_covering(&Grid::new(16).unwrap(), 8, 4).unwrap();
        assert_eq!(c.len(), 9);
        let c = build_covering(&Grid::new(8).unwrap(), 8, 4).unwrap();
        assert_eq!(c.len(), 1);
        assert!(c.multiplicity.iter().all(|&m| m == 1));
        let c = build_covering(&Grid::new(32).unwrap(), 8, 4).unwrap();
        assert_eq!(c.len(), 49);
        assert_eq!(*c.multiplicity.iter().max().unwrap(), 4);
        assert!(c.multiplicity.iter().all(|&m| [1, 2, 4].contains(&m)));
        assert!(build_covering(&Grid::new(16).unwrap(), 8, 3).is_err());
        assert!(build_covering(&Grid::new(16).unwrap(), 4, 8).is_err());
    }

    #[test]
    fn splitting_counts() {
        let t = TwoLevelTransform::new(&Grid::new(4).unwrap()).unwrap();
        assert_eq!((t.n1(), t.n2(), t.dim()), (28, 12, 40));
        assert_eq!(t.num_interior(), 16);
        for n in [2usize, 8, 32] {
            let t = TwoLevelTransform::new(&Grid::new(n).unwrap()).unwrap();
            let coarse = Grid::with_cells(n / 2).unwrap();
            assert_eq!(t.n2(), coarse.num_edges());
            assert_eq!(t.n1() + t.n2(), Grid::new(n).unwrap().num_edges());
        }
    }

    #[test]
    fn j_and_inverse() {
        let t = TwoLevelTransform::new(&Grid::new(4).unwrap()).unwrap();
        let prod = t.j_matrix().matmul(&t.j_inverse_matrix()).unwrap();
        assert_eq!(prod, CsrMatrix::identity(40));
        let u: Vec<f64> = (0..40).map(|i| (i as f64).sin()).collect();
        let mut uh = vec![0.0; 40];
        let mut back = vec![0.0; 40];
        t.to_two_level(&u, &mut uh);
        t.from_two_level(&uh, &mut back);
        for (a, b) in u.iter().zip(&back) {
            assert!((a - b).abs() < 1e-15);
        }
        let mut dh = vec![0.0; 40];
        t.apply_jt(&u, &mut dh);
        let dh_ref = t.j_matrix().transpose().mul_vec(&u);
        assert_eq!(dh, dh_ref);
    }

    #[test]
    fn congruence_keeps_definiteness() {
        let g = Grid::new(4).unwrap();
        let f = gen_random_field(4, 6, 1, &IslandLayout::default()).unwrap();
        let a = assemble_velocity(&g, &f).unwrap();
        let t = TwoLevelTransform::new(&g).unwrap();
        let ah = t.transform_matrix(&a).unwrap();
        assert!(ah.is_exactly_symmetric());
        assert!(symmetric_eigenvalues(&ah.to_dense()).unwrap()[0] > 0.0);
    }

    #[test]
    fn compatibility_and_local_transform() {
        let g = Grid::new(16).unwrap();
        let f = gen_random_field(16, 4, 3, &IslandLayout::default()).unwrap();
        let t = TwoLevelTransform::new(&g).unwrap();
        let cov = build_covering(&g, 8, 4).unwrap();
        let a = assemble_velocity(&g, &f).unwrap();
        let ah = t.transform_matrix(&a).unwrap();
        let elements = LevelElements::from_cells(&g, &f).unwrap();
        let mult = elements.multiplicities(&cov).unwrap();
        let members = elements.elements_per_subdomain(&cov);
        let mut sum = DenseMatrix::zeros(t.dim(), t.dim());
        for (i, s) in cov.subdomains.iter().enumerate() {
            let lt = t.local(&s.dofs).unwrap();
            t.check_compatibility(&s.dofs, &lt).unwrap();
            let ai = elements.assemble_local(s, &members[i], &mult).unwrap();
            let ahi = lt.transform(&ai);
            for p in 0..ahi.nrows() {
                for q in 0..ahi.nrows() {
                    sum[(lt.global_index(&t, p), lt.global_index(&t, q))] += ahi[(p, q)];
                }
            }
        }
        assert!(sum.rel_frobenius_diff(&ah.to_dense()) < 1e-13);
    }

    #[test]
    fn local_splitting_identity() {
        for (n, cells) in [(8usize, 8usize), (16, 8)] {
            let g = Grid::new(n).unwrap();
            let f = gen_random_field(n, 6, 11, &IslandLayout::default()).unwrap();
            let cov = build_covering(&g, cells, cells / 2).unwrap();
            let a = assemble_velocity(&g, &f).unwrap();
            let mut sum = vec![];
            for i in 0..cov.len() {
                let ai = assemble_local(&g, &f, &cov, i).unwrap();
                assert!(ai.cholesky().is_ok());
                let dofs = &cov.subdomains[i].dofs;
                for p in 0..dofs.len() {
                    for q in 0..dofs.len() {
                        sum.push((dofs[p], dofs[q], ai[(p, q)]));
                    }
                }
            }
            let s = CsrMatrix::from_triplets(a.nrows(), a.nrows(), &sum).unwrap();
            assert!(s.rel_frobenius_diff(&a).unwrap() < 1e-13);
            if cov.len() == 1 {
                let a1 = assemble_local(&g, &f, &cov, 0).unwrap();
                assert_eq!(a1, a.to_dense());
            }
        }
    }
}
