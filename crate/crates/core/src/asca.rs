//! Additive Schur complement approximation and the multilevel hierarchy.
//!
//! On every level the matrix is split over an overlapping covering into SPD
//! local matrices `A_i`, each is transformed to the local two-level basis,
//! and the local Schur complements `S_i` of the fine blocks are summed into
//! the coarse matrix `Q = sum_i R_{i:2}^T S_i R_{i:2}`, which becomes the
//! matrix of the next level. The `S_i` also serve as the element matrices
//! from which the next level's local matrices are assembled.

use crate::coeff::CoefficientField;
use crate::error::{AsmgError, Result};
use crate::linalg::{Cholesky, CsrMatrix, DenseMatrix};
use crate::mesh::{assemble_velocity, Grid};
use crate::precond::ilue::Ilue;
use crate::transform::{build_covering, Covering, LevelElements, TwoLevelTransform};
use crate::util::par_map;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HierarchyConfig {
    /// Number of coarsening steps; the hierarchy has `levels + 1` matrices.
    pub levels: usize,
    /// Subdomain side in cells (power of two, at least 4).
    pub sub_cells: usize,
    /// Smallest admissible coarsest grid.
    pub coarsest_n: usize,
}

impl Default for HierarchyConfig {
    fn default() -> Self {
        Self {
            levels: 1,
            sub_cells: 8,
            coarsest_n: 4,
        }
    }
}

impl HierarchyConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.sub_cells < 4 || !self.sub_cells.is_power_of_two() {
            return Err(AsmgError::Config(format!(
                "subdomain size must be a power of two >= 4 so that subdomains align with coarse cells, got {}",
                self.sub_cells
            )));
        }
        if self.coarsest_n == 0 {
            return Err(AsmgError::Config("coarsest grid must have at least one cell".into()));
        }
        if !n.is_power_of_two() || self.levels >= usize::BITS as usize || n < (self.coarsest_n << self.levels) {
            return Err(AsmgError::Config(format!(
                "grid of {n} cells cannot be coarsened {} times down to at least {} cells per side",
                self.levels, self.coarsest_n
            )));
        }
        Ok(())
    }
}

/// Local data of one subdomain in the two-level basis.
#[derive(Debug, Clone)]
pub struct LocalBlock {
    /// Global two-level indices of the local fine set (`R_{i:1}`), sorted.
    pub fine: Vec<usize>,
    /// Coarse edges of the local coarse set (`R_{i:2}`), sorted.
    pub coarse: Vec<usize>,
    pub a11: DenseMatrix,
    pub chol11: Cholesky,
    pub a12: DenseMatrix,
    pub a22: DenseMatrix,
    pub schur: DenseMatrix,
}

/// `S = A22 - A21 A11^{-1} A12` given the Cholesky factor of `A11`.
pub fn local_schur(chol11: &Cholesky, a12: &DenseMatrix, a22: &DenseMatrix) -> DenseMatrix {
    let (n1, n2) = (a12.nrows(), a12.ncols());
    // W^T rows: columns of L^{-1} A12
    let mut wt = DenseMatrix::zeros(n2, n1);
    let mut col = vec![0.0; n1];
    for c in 0..n2 {
        for (r, v) in col.iter_mut().enumerate() {
            *v = a12[(r, c)];
        }
        chol11.forward_in_place(&mut col);
        wt.row_mut(c).copy_from_slice(&col);
    }
    let mut s = a22.clone();
    for p in 0..n2 {
        for q in p..n2 {
            let dot: f64 = wt.row(p).iter().zip(wt.row(q)).map(|(a, b)| a * b).sum();
            s[(p, q)] = a22[(p, q)] - dot;
        }
    }
    s.symmetrize_from_upper();
    s
}

/// One level `k < l` of the hierarchy.
#[derive(Debug, Clone)]
pub struct AuxLevel {
    pub grid: Grid,
    /// `A^{(k)}`.
    pub a: CsrMatrix,
    pub transform: TwoLevelTransform,
    /// `J^T A J`.
    pub a_hat: CsrMatrix,
    pub covering: Covering,
    pub blocks: Vec<LocalBlock>,
    /// `D = sum_i R_{i:1}^T A_{i:11} R_{i:1}`.
    pub d11: CsrMatrix,
    pub ilue: Ilue,
    /// ASCA coarse matrix, equal to `A^{(k+1)}`.
    pub q: CsrMatrix,
}

impl AuxLevel {
    pub fn n1(&self) -> usize {
        self.transform.n1()
    }

    pub fn n2(&self) -> usize {
        self.transform.n2()
    }
}

#[derive(Debug, Clone)]
pub struct CoarsestLevel {
    pub grid: Grid,
    pub a: CsrMatrix,
    pub chol: Cholesky,
}

#[derive(Debug, Clone)]
pub struct Hierarchy {
    pub config: HierarchyConfig,
    pub levels: Vec<AuxLevel>,
    pub coarsest: CoarsestLevel,
}

impl Hierarchy {
    /// Number of coarsening steps `l`.
    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    /// `A^{(k)}` for `k = 0..=l`.
    pub fn matrix(&self, k: usize) -> &CsrMatrix {
        if k < self.levels.len() {
            &self.levels[k].a
        } else {
            &self.coarsest.a
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix(0).nrows()
    }

    pub fn nnz_per_level(&self) -> Vec<usize> {
        (0..=self.depth()).map(|k| self.matrix(k).nnz()).collect()
    }
}

/// Builds one auxiliary level from its element matrices.
pub fn build_level(grid: Grid, elements: &LevelElements, sub_cells: usize) -> Result<(AuxLevel, LevelElements)> {
    let a = elements.assemble(grid.num_edges())?;
    let covering = build_covering(&grid, sub_cells, sub_cells / 2)?;
    let transform = TwoLevelTransform::new(&grid)?;
    let mult = elements.multiplicities(&covering)?;
    let members = elements.elements_per_subdomain(&covering);

    let locals = par_map(covering.len(), |i| {
        let sub = &covering.subdomains[i];
        let ai = elements.assemble_local(sub, &members[i], &mult)?;
        let lt = transform.local(&sub.dofs)?;
        transform.check_compatibility(&sub.dofs, &lt)?;
        let ah = lt.transform(&ai);
        let (n1, n2) = (lt.n1(), lt.n2());
        let a11 = ah.block(0, 0, n1, n1);
        let chol11 = a11
            .cholesky()
            .map_err(|e| e.with_context(format!("subdomain {i} fine block")))?;
        let a12 = ah.block(0, n1, n1, n2);
        let a22 = ah.block(n1, n1, n2, n2);
        let schur = local_schur(&chol11, &a12, &a22);
        Ok(LocalBlock {
            fine: lt.fine,
            coarse: lt.coarse,
            a11,
            chol11,
            a12,
            a22,
            schur,
        })
    })?;

    let (n1, n2) = (transform.n1(), transform.n2());
    let mut tq = Vec::new();
    let mut td = Vec::new();
    for b in &locals {
        for (p, &gp) in b.coarse.iter().enumerate() {
            for (q, &gq) in b.coarse.iter().enumerate() {
                tq.push((gp, gq, b.schur[(p, q)]));
            }
        }
        for (p, &gp) in b.fine.iter().enumerate() {
            for (q, &gq) in b.fine.iter().enumerate() {
                td.push((gp, gq, b.a11[(p, q)]));
            }
        }
    }
    let q = CsrMatrix::from_triplets(n2, n2, &tq)?;
    let d11 = CsrMatrix::from_triplets(n1, n1, &td)?;
    let pieces: Vec<(&[usize], &Cholesky)> = locals.iter().map(|b| (b.fine.as_slice(), &b.chol11)).collect();
    let ilue = Ilue::from_cholesky_pieces(n1, &pieces)?;
    let a_hat = transform.transform_matrix(&a)?;

    let next = LevelElements {
        boxes: covering.subdomains.iter().map(|s| s.cell_box.coarsen()).collect(),
        dofs: locals.iter().map(|b| b.coarse.clone()).collect(),
        matrices: locals.iter().map(|b| b.schur.clone()).collect(),
    };
    let level = AuxLevel {
        grid,
        a,
        transform,
        a_hat,
        covering,
        blocks: locals,
        d11,
        ilue,
        q,
    };
    Ok((level, next))
}

/// Builds levels `0..l` and factorizes the coarsest matrix.
pub fn build_hierarchy(grid: &Grid, field: &CoefficientField, config: HierarchyConfig) -> Result<Hierarchy> {
    config.validate(grid.n())?;
    let mut elements = LevelElements::from_cells(grid, field)?;
    let mut levels = Vec::with_capacity(config.levels);
    let mut g = grid.clone();
    for _ in 0..config.levels {
        let coarse = Grid::with_cells(g.n() / 2)?;
        let (level, next) = build_level(g, &elements, config.sub_cells)?;
        levels.push(level);
        elements = next;
        g = coarse;
    }
    let a = match levels.last() {
        Some(l) => l.q.clone(),
        None => assemble_velocity(grid, field)?,
    };
    let chol = a
        .to_dense()
        .cholesky()
        .map_err(|e| e.with_context("coarsest level"))?;
    Ok(Hierarchy {
        config,
        levels,
        coarsest: CoarsestLevel { grid: g, a, chol },
    })
}
