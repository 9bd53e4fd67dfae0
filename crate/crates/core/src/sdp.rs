//! Block-diagonal semidefinite programs and a dense primal-dual
//! interior-point solver.
//!
//! Problems are in the standard primal form
//!
//! ```text
//!     maximize   <C, X>
//!     subject to <A_k, X> = b_k,   k = 1..m
//!                X = diag(X_1, ..., X_q) >= 0
//! ```
//!
//! with dual `minimize b'y  s.t.  sum_k y_k A_k - C = Z >= 0`.
//!
//! The solver follows the HKM search direction with a Mehrotra
//! predictor-corrector, starting from the infeasible point `X = Z = eta*I`,
//! `y = 0`. Constraint matrices are stored sparsely (upper triangle), which
//! keeps the Schur complement assembly cheap for coefficient-matching
//! constraints where each `A_k` touches few Gram entries.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use thiserror::Error;

pub type BlockMatrix = Vec<DMatrix<f64>>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SdpError {
    #[error("problem has no blocks")]
    NoBlocks,
    #[error("problem has no constraints")]
    NoConstraints,
    #[error("entry ({row}, {col}) is outside block {block} of size {size}")]
    EntryOutOfBounds {
        block: usize,
        row: usize,
        col: usize,
        size: usize,
    },
    #[error("block {block} of size {size} exceeds the limit of {limit}")]
    BlockTooLarge {
        block: usize,
        size: usize,
        limit: usize,
    },
    #[error("tolerance {0} outside (0, 1e-2]")]
    BadTolerance(f64),
    #[error("matrix is not symmetric (asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("matrix is not square ({0}x{1})")]
    NotSquare(usize, usize),
}

/// Symmetric block-diagonal matrix given by its upper-triangle entries.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseBlockSym {
    entries: BTreeMap<(usize, usize, usize), f64>,
}

impl SparseBlockSym {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `value` to entry `(row, col)` of `block` (and its mirror).
    pub fn add(&mut self, block: usize, row: usize, col: usize, value: f64) {
        let key = (block, row.min(col), row.max(col));
        *self.entries.entry(key).or_insert(0.0) += value;
    }

    /// Upper-triangle entries `(block, row, col, value)` with `row <= col`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, usize, f64)> + '_ {
        self.entries
            .iter()
            .filter(|(_, &v)| v != 0.0)
            .map(|(&(b, r, c), &v)| (b, r, c, v))
    }

    pub fn is_empty(&self) -> bool {
        self.entries().next().is_none()
    }

    /// `<self, X>` for a block matrix `X` (full symmetric inner product).
    pub fn dot(&self, x: &[DMatrix<f64>]) -> f64 {
        self.entries()
            .map(|(b, r, c, v)| {
                if r == c {
                    v * x[b][(r, c)]
                } else {
                    v * (x[b][(r, c)] + x[b][(c, r)])
                }
            })
            .sum()
    }

    pub fn to_dense(&self, sizes: &[usize]) -> BlockMatrix {
        let mut out: BlockMatrix = sizes.iter().map(|&s| DMatrix::zeros(s, s)).collect();
        for (b, r, c, v) in self.entries() {
            out[b][(r, c)] += v;
            if r != c {
                out[b][(c, r)] += v;
            }
        }
        out
    }

    /// Builds from dense symmetric blocks (`None` for an all-zero block).
    pub fn from_dense(blocks: &[Option<DMatrix<f64>>]) -> Result<Self, SdpError> {
        let mut out = Self::new();
        for (b, m) in blocks.iter().enumerate() {
            let Some(m) = m else { continue };
            check_symmetric(m, 1e-14)?;
            for c in 0..m.ncols() {
                for r in 0..=c {
                    if m[(r, c)] != 0.0 {
                        out.add(b, r, c, m[(r, c)]);
                    }
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub a: SparseBlockSym,
    pub b: f64,
}

/// Block-diagonal SDP in primal maximization form.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SdpProblem {
    pub block_sizes: Vec<usize>,
    pub objective: SparseBlockSym,
    pub constraints: Vec<Constraint>,
}

/// Default upper limit on a single block dimension.
pub const DEFAULT_BLOCK_LIMIT: usize = 400;

impl SdpProblem {
    pub fn new(block_sizes: Vec<usize>) -> Self {
        Self {
            block_sizes,
            ..Self::default()
        }
    }

    pub fn add_constraint(&mut self, a: SparseBlockSym, b: f64) -> usize {
        self.constraints.push(Constraint { a, b });
        self.constraints.len() - 1
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn validate(&self) -> Result<(), SdpError> {
        if self.block_sizes.is_empty() {
            return Err(SdpError::NoBlocks);
        }
        if self.constraints.is_empty() {
            return Err(SdpError::NoConstraints);
        }
        for (block, &size) in self.block_sizes.iter().enumerate() {
            if size > DEFAULT_BLOCK_LIMIT {
                return Err(SdpError::BlockTooLarge {
                    block,
                    size,
                    limit: DEFAULT_BLOCK_LIMIT,
                });
            }
        }
        let mats = std::iter::once(&self.objective).chain(self.constraints.iter().map(|c| &c.a));
        for m in mats {
            for (block, row, col, _) in m.entries() {
                let size = self.block_sizes.get(block).copied().unwrap_or(0);
                if col >= size {
                    return Err(SdpError::EntryOutOfBounds {
                        block,
                        row,
                        col,
                        size,
                    });
                }
            }
        }
        Ok(())
    }

    /// Plain-text dump in the SDPA sparse format.
    ///
    /// SDPA's primal is `min c'x s.t. sum_i F_i x_i - F_0 >= 0`; this problem is
    /// its dual with `F_0 = C`, `F_k = A_k`, `c_k = b_k`.
    pub fn to_sdpa(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "* polysep SDP dump: max <C,X> s.t. <A_k,X> = b_k, X psd");
        let _ = writeln!(s, "{}", self.constraints.len());
        let _ = writeln!(s, "{}", self.block_sizes.len());
        let sizes: Vec<String> = self.block_sizes.iter().map(|s| s.to_string()).collect();
        let _ = writeln!(s, "{}", sizes.join(" "));
        let b: Vec<String> = self
            .constraints
            .iter()
            .map(|c| format!("{:e}", c.b))
            .collect();
        let _ = writeln!(s, "{}", b.join(" "));
        let mats = std::iter::once(&self.objective).chain(self.constraints.iter().map(|c| &c.a));
        for (k, m) in mats.enumerate() {
            for (block, r, c, v) in m.entries() {
                let _ = writeln!(s, "{k} {} {} {} {v:e}", block + 1, r + 1, c + 1);
            }
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    NumericalTrouble,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub status: SdpStatus,
    pub x: BlockMatrix,
    pub y: Vec<f64>,
    pub s: BlockMatrix,
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// `|pobj - dobj| / (1 + |pobj| + |dobj|)`.
    pub gap: f64,
    /// `max_k |<A_k, X> - b_k|`.
    pub primal_residual: f64,
    /// Frobenius norm of `sum_k y_k A_k - C - Z`.
    pub dual_residual: f64,
    pub iterations: usize,
    /// Indices of constraints dropped by the rank pre-check.
    pub dropped_constraints: Vec<usize>,
    /// Normalized Farkas ray `y / |b'y|` when the status is `Infeasible`.
    pub infeasibility_ray: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 100,
        }
    }
}

const STEP_FRACTION: f64 = 0.95;
const CONDITION_LIMIT: f64 = 1e14;

/// Solves the SDP to tolerance `opts.tol`.
pub fn solve(problem: &SdpProblem, opts: &SolverOptions) -> Result<SdpSolution, SdpError> {
    if !(opts.tol > 0.0 && opts.tol <= 1e-2) {
        return Err(SdpError::BadTolerance(opts.tol));
    }
    problem.validate()?;
    Ok(Solver::new(problem, opts).run())
}

/// A block index and the `(row, col, value)` entries in it.
type BlockEntries = (usize, Vec<(usize, usize, f64)>);

struct Solver<'a> {
    problem: &'a SdpProblem,
    opts: SolverOptions,
    sizes: Vec<usize>,
    /// Retained constraint indices.
    active: Vec<usize>,
    dropped: Vec<usize>,
    /// Full (both-triangle) entries per retained constraint, grouped by block.
    rows: Vec<Vec<BlockEntries>>,
    b: DVector<f64>,
    c: BlockMatrix,
    inconsistent: bool,
}

impl<'a> Solver<'a> {
    fn new(problem: &'a SdpProblem, opts: &SolverOptions) -> Self {
        let sizes = problem.block_sizes.clone();
        let (active, dropped, inconsistent) = rank_precheck(problem);
        let rows = active
            .iter()
            .map(|&k| {
                let mut by_block: BTreeMap<usize, Vec<(usize, usize, f64)>> = BTreeMap::new();
                for (b, r, c, v) in problem.constraints[k].a.entries() {
                    let e = by_block.entry(b).or_default();
                    e.push((r, c, v));
                    if r != c {
                        e.push((c, r, v));
                    }
                }
                by_block.into_iter().collect()
            })
            .collect();
        let b = DVector::from_iterator(
            active.len(),
            active.iter().map(|&k| problem.constraints[k].b),
        );
        let c = problem.objective.to_dense(&sizes);
        Self {
            problem,
            opts: *opts,
            sizes,
            active,
            dropped,
            rows,
            b,
            c,
            inconsistent,
        }
    }

    fn a_op(&self, x: &[DMatrix<f64>]) -> DVector<f64> {
        DVector::from_iterator(
            self.rows.len(),
            self.rows.iter().map(|row| {
                row.iter()
                    .map(|(blk, ents)| {
                        ents.iter()
                            .map(|&(r, c, v)| v * x[*blk][(r, c)])
                            .sum::<f64>()
                    })
                    .sum::<f64>()
            }),
        )
    }

    fn a_adj(&self, y: &DVector<f64>) -> BlockMatrix {
        let mut out: BlockMatrix = self.sizes.iter().map(|&s| DMatrix::zeros(s, s)).collect();
        for (k, row) in self.rows.iter().enumerate() {
            for (blk, ents) in row {
                for &(r, c, v) in ents {
                    out[*blk][(r, c)] += y[k] * v;
                }
            }
        }
        out
    }

    /// Schur complement `M_ij = tr(A_i X A_j Z^{-1})`.
    fn schur(&self, x: &[DMatrix<f64>], zinv: &[DMatrix<f64>]) -> DMatrix<f64> {
        let m = self.rows.len();
        let mut out = DMatrix::zeros(m, m);
        // constraints touching each block, for the inner loop
        let mut touching: Vec<Vec<(usize, usize)>> = vec![Vec::new(); self.sizes.len()];
        for (i, row) in self.rows.iter().enumerate() {
            for (pos, (blk, _)) in row.iter().enumerate() {
                touching[*blk].push((i, pos));
            }
        }
        for (j, row_j) in self.rows.iter().enumerate() {
            for (blk, ents_j) in row_j {
                let n = self.sizes[*blk];
                let xb = &x[*blk];
                let zb = &zinv[*blk];
                // W = X A_j Z^{-1}
                let mut w = DMatrix::<f64>::zeros(n, n);
                for &(r, c, v) in ents_j {
                    for col in 0..n {
                        let zc = v * zb[(c, col)];
                        if zc == 0.0 {
                            continue;
                        }
                        for row in 0..n {
                            w[(row, col)] += xb[(row, r)] * zc;
                        }
                    }
                }
                for &(i, pos) in &touching[*blk] {
                    if i > j {
                        break;
                    }
                    let s: f64 = self.rows[i][pos]
                        .1
                        .iter()
                        .map(|&(r, c, v)| v * w[(r, c)])
                        .sum();
                    out[(i, j)] += s;
                }
            }
        }
        for j in 0..m {
            for i in 0..j {
                out[(j, i)] = out[(i, j)];
            }
        }
        out
    }

    fn run(&self) -> SdpSolution {
        let n_total: usize = self.sizes.iter().sum();
        let eta = 1.0 + self.b.amax();
        let mut x: BlockMatrix = self
            .sizes
            .iter()
            .map(|&s| DMatrix::identity(s, s) * eta)
            .collect();
        let mut z = x.clone();
        let mut y = DVector::zeros(self.rows.len());

        if self.inconsistent {
            return self.finish(SdpStatus::Infeasible, x, y, z, 0, None);
        }

        let b_norm = self.b.amax();
        let c_norm = frob(&self.c);
        let tol = self.opts.tol;

        for iter in 0..self.opts.max_iter {
            let ax = self.a_op(&x);
            let r_p = &self.b - &ax;
            let aty = self.a_adj(&y);
            let r_d: BlockMatrix = (0..self.sizes.len())
                .map(|k| &self.c[k] - &aty[k] + &z[k])
                .collect();
            let pobj = dot(&self.c, &x);
            let dobj = self.b.dot(&y);
            let xz = dot(&x, &z);
            let mu = xz / n_total as f64;

            let pinf = r_p.amax() / (1.0 + b_norm);
            let dinf = frob(&r_d) / (1.0 + c_norm);
            let scale = 1.0 + pobj.abs() + dobj.abs();
            let gap = (pobj - dobj).abs() / scale;
            if pinf <= tol && dinf <= tol && gap <= tol && xz / scale <= tol {
                return self.finish(SdpStatus::Optimal, x, y, z, iter, None);
            }
            if dobj < 0.0 && (c_norm + frob(&r_d)) <= tol * (-dobj) {
                let ray = Some(y.iter().map(|v| v / -dobj).collect());
                return self.finish(SdpStatus::Infeasible, x, y, z, iter, ray);
            }

            let Some(zinv) = inverses(&z) else {
                return self.finish(SdpStatus::NumericalTrouble, x, y, z, iter, None);
            };
            let schur = self.schur(&x, &zinv);
            let Some(chol) = factor_schur(schur) else {
                return self.finish(SdpStatus::NumericalTrouble, x, y, z, iter, None);
            };

            // X R_d Z^{-1}, shared by predictor and corrector
            let xrz: BlockMatrix = (0..self.sizes.len())
                .map(|k| &x[k] * &r_d[k] * &zinv[k])
                .collect();

            // predictor (affine scaling)
            let (dx_a, dy_a, dz_a) = self.direction(&x, &zinv, &xrz, &r_d, &chol, None);
            let ap = max_step(&x, &dx_a).min(1.0);
            let ad = max_step(&z, &dz_a).min(1.0);
            let mu_aff = (0..self.sizes.len())
                .map(|k| {
                    let xa = &x[k] + &dx_a[k] * ap;
                    let za = &z[k] + &dz_a[k] * ad;
                    xa.dot(&za)
                })
                .sum::<f64>()
                / n_total as f64;
            let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);
            let _ = dy_a;

            // corrector: target sigma*mu*I - dX_a dZ_a
            let target: BlockMatrix = (0..self.sizes.len())
                .map(|k| {
                    let n = self.sizes[k];
                    DMatrix::identity(n, n) * (sigma * mu) - &dx_a[k] * &dz_a[k]
                })
                .collect();
            let (dx, dy, dz) = self.direction(&x, &zinv, &xrz, &r_d, &chol, Some(&target));
            let ap = (STEP_FRACTION * max_step(&x, &dx)).min(1.0);
            let ad = (STEP_FRACTION * max_step(&z, &dz)).min(1.0);
            if ap < 1e-12 && ad < 1e-12 {
                return self.finish(SdpStatus::NumericalTrouble, x, y, z, iter, None);
            }
            for k in 0..self.sizes.len() {
                x[k] += &dx[k] * ap;
                z[k] += &dz[k] * ad;
                symmetrize(&mut x[k]);
                symmetrize(&mut z[k]);
            }
            y += dy * ad;
        }
        let iters = self.opts.max_iter;
        self.finish(SdpStatus::IterationLimit, x, y, z, iters, None)
    }

    /// HKM direction for complementarity target `target` (zero for the
    /// predictor).
    fn direction(
        &self,
        x: &[DMatrix<f64>],
        zinv: &[DMatrix<f64>],
        xrz: &[DMatrix<f64>],
        r_d: &[DMatrix<f64>],
        chol: &Cholesky<f64, nalgebra::Dyn>,
        target: Option<&BlockMatrix>,
    ) -> (BlockMatrix, DVector<f64>, BlockMatrix) {
        let nb = self.sizes.len();
        let kz: BlockMatrix = (0..nb)
            .map(|k| match target {
                Some(t) => &t[k] * &zinv[k],
                None => DMatrix::zeros(self.sizes[k], self.sizes[k]),
            })
            .collect();
        let inner: BlockMatrix = (0..nb).map(|k| &kz[k] + &xrz[k]).collect();
        let rhs = self.a_op(&inner) - &self.b;
        let dy = chol.solve(&rhs);
        let aty = self.a_adj(&dy);
        let dz: BlockMatrix = (0..nb).map(|k| &aty[k] - &r_d[k]).collect();
        let dx: BlockMatrix = (0..nb)
            .map(|k| {
                let mut d = &kz[k] - &x[k] - &x[k] * &dz[k] * &zinv[k];
                symmetrize(&mut d);
                d
            })
            .collect();
        (dx, dy, dz)
    }

    fn finish(
        &self,
        status: SdpStatus,
        x: BlockMatrix,
        y: DVector<f64>,
        z: BlockMatrix,
        iterations: usize,
        ray: Option<Vec<f64>>,
    ) -> SdpSolution {
        let mut y_full = vec![0.0; self.problem.constraints.len()];
        for (i, &k) in self.active.iter().enumerate() {
            y_full[k] = y[i];
        }
        let ray = ray.map(|r| {
            let mut full = vec![0.0; self.problem.constraints.len()];
            for (i, &k) in self.active.iter().enumerate() {
                full[k] = r[i];
            }
            full
        });
        let primal_residual = self
            .problem
            .constraints
            .iter()
            .map(|c| (c.a.dot(&x) - c.b).abs())
            .fold(0.0, f64::max);
        let aty = self.a_adj(&y);
        let dual_residual = frob(
            &(0..self.sizes.len())
                .map(|k| &aty[k] - &self.c[k] - &z[k])
                .collect::<Vec<_>>(),
        );
        let pobj = dot(&self.c, &x);
        let dobj = self.b.dot(&y);
        SdpSolution {
            status,
            primal_objective: pobj,
            dual_objective: dobj,
            gap: (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs()),
            primal_residual,
            dual_residual,
            x,
            y: y_full,
            s: z,
            iterations,
            dropped_constraints: self.dropped.clone(),
            infeasibility_ray: ray,
        }
    }
}

/// Drops linearly dependent constraints (modified Gram-Schmidt on the
/// vectorized `A_k`). Returns the kept indices, the dropped indices, and
/// whether a dropped row had a right-hand side inconsistent with the rest.
fn rank_precheck(problem: &SdpProblem) -> (Vec<usize>, Vec<usize>, bool) {
    let mut index: BTreeMap<(usize, usize, usize), usize> = BTreeMap::new();
    let vecs: Vec<Vec<(usize, f64)>> = problem
        .constraints
        .iter()
        .map(|c| {
            c.a.entries()
                .map(|(b, r, col, v)| {
                    let next = index.len();
                    let w = if r == col {
                        v
                    } else {
                        v * std::f64::consts::SQRT_2
                    };
                    (*index.entry((b, r, col)).or_insert(next), w)
                })
                .collect()
        })
        .collect();
    let dim = index.len();
    let mut basis: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut active = Vec::new();
    let mut dropped = Vec::new();
    let mut inconsistent = false;
    for (k, sparse) in vecs.iter().enumerate() {
        let mut v = vec![0.0; dim];
        for &(i, w) in sparse {
            v[i] += w;
        }
        let norm0 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let mut rhs = problem.constraints[k].b;
        for (q, qb) in &basis {
            let proj: f64 = q.iter().zip(&v).map(|(a, b)| a * b).sum();
            if proj != 0.0 {
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= proj * qi;
                }
                rhs -= proj * qb;
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm <= 1e-10 * norm0.max(1.0) {
            if rhs.abs() > 1e-9 * (1.0 + problem.constraints[k].b.abs()) {
                inconsistent = true;
            }
            dropped.push(k);
        } else {
            for vi in &mut v {
                *vi /= norm;
            }
            basis.push((v, rhs / norm));
            active.push(k);
        }
    }
    (active, dropped, inconsistent)
}

fn factor_schur(m: DMatrix<f64>) -> Option<Cholesky<f64, nalgebra::Dyn>> {
    let diag_max = m.diagonal().amax();
    if !diag_max.is_finite() {
        return None;
    }
    if let Some(ch) = Cholesky::new(m.clone()) {
        return Some(ch);
    }
    // regularize once, then give up if the system is still too ill-conditioned
    let n = m.nrows();
    let reg = &m + DMatrix::identity(n, n) * (diag_max * 1e-14).max(1e-300);
    let ch = Cholesky::new(reg)?;
    let l = ch.l_dirty();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..n {
        lo = lo.min(l[(i, i)].abs());
        hi = hi.max(l[(i, i)].abs());
    }
    if (hi / lo).powi(2) > CONDITION_LIMIT * 1e2 {
        return None;
    }
    Some(ch)
}

fn inverses(z: &[DMatrix<f64>]) -> Option<BlockMatrix> {
    z.iter()
        .map(|m| Cholesky::new(m.clone()).map(|c| c.inverse()))
        .collect()
}

/// Largest `alpha` with `x + alpha*dx` positive semidefinite in every block.
fn max_step(x: &[DMatrix<f64>], dx: &[DMatrix<f64>]) -> f64 {
    let mut alpha = f64::INFINITY;
    for (xb, db) in x.iter().zip(dx) {
        let lam = if xb.nrows() == 1 {
            db[(0, 0)] / xb[(0, 0)]
        } else {
            let Some(ch) = Cholesky::new(xb.clone()) else {
                return 0.0;
            };
            let l = ch.l();
            let Some(li_d) = l.solve_lower_triangular(db) else {
                return 0.0;
            };
            let Some(w) = l.solve_lower_triangular(&li_d.transpose()) else {
                return 0.0;
            };
            let mut w = w;
            symmetrize(&mut w);
            SymmetricEigen::new(w).eigenvalues.min()
        };
        if lam < 0.0 {
            alpha = alpha.min(-1.0 / lam);
        }
    }
    alpha
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

fn dot(a: &[DMatrix<f64>], b: &[DMatrix<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn frob(a: &[DMatrix<f64>]) -> f64 {
    a.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt()
}

fn check_symmetric(m: &DMatrix<f64>, rel: f64) -> Result<(), SdpError> {
    if m.nrows() != m.ncols() {
        return Err(SdpError::NotSquare(m.nrows(), m.ncols()));
    }
    let scale = m.amax().max(1.0);
    let asym = (m - m.transpose()).amax();
    if asym > rel * scale {
        return Err(SdpError::NotSymmetric(asym));
    }
    Ok(())
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> Result<f64, SdpError> {
    check_symmetric(m, 1e-12)?;
    if m.nrows() == 0 {
        return Ok(f64::INFINITY);
    }
    let mut s = m.clone();
    symmetrize(&mut s);
    Ok(SymmetricEigen::new(s).eigenvalues.min())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn single(block: usize, r: usize, c: usize, v: f64) -> SparseBlockSym {
        let mut a = SparseBlockSym::new();
        a.add(block, r, c, v);
        a
    }

    #[test]
    fn trace_one_feasibility() {
        let mut p = SdpProblem::new(vec![2]);
        let mut tr = SparseBlockSym::new();
        tr.add(0, 0, 0, 1.0);
        tr.add(0, 1, 1, 1.0);
        p.add_constraint(tr, 1.0);
        let sol = solve(&p, &SolverOptions::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.x[0].trace() - 1.0).abs() < 1e-8);
        assert!(min_eigenvalue(&sol.x[0]).unwrap() > -1e-8);
    }

    /// maximize -x11 with x12 = 0.3, x22 = 1; the PSD condition forces x11 >= 0.09.
    fn completion_problem() -> SdpProblem {
        let mut p = SdpProblem::new(vec![2]);
        p.objective = single(0, 0, 0, -1.0);
        // <A, X> = 2*x12 for an off-diagonal entry 1
        p.add_constraint(single(0, 0, 1, 0.5), 0.3);
        p.add_constraint(single(0, 1, 1, 1.0), 1.0);
        p
    }

    #[test]
    fn psd_completion_optimum() {
        let sol = solve(&completion_problem(), &SolverOptions::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.x[0][(0, 0)] - 0.09).abs() < 1e-6, "{}", sol.x[0]);
        assert!((sol.primal_objective + 0.09).abs() < 1e-6);
        assert!(sol.primal_objective <= sol.dual_objective + 1e-8);
    }

    #[test]
    fn negative_diagonal_is_infeasible() {
        let mut p = SdpProblem::new(vec![2]);
        p.add_constraint(single(0, 0, 0, 1.0), -1.0);
        let sol = solve(&p, &SolverOptions::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Infeasible);
        let ray = sol.infeasibility_ray.unwrap();
        assert!(ray[0] > 0.0);
    }

    #[test]
    fn dependent_constraints_are_dropped() {
        let mut p = completion_problem();
        p.add_constraint(single(0, 1, 1, 2.0), 2.0);
        let sol = solve(&p, &SolverOptions::default()).unwrap();
        assert_eq!(sol.dropped_constraints, vec![2]);
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.x[0][(0, 0)] - 0.09).abs() < 1e-6);

        let mut q = completion_problem();
        q.add_constraint(single(0, 1, 1, 2.0), 3.0);
        let sol = solve(&q, &SolverOptions::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Infeasible);
    }

    #[test]
    fn input_validation() {
        let p = SdpProblem::new(vec![2]);
        assert_eq!(
            solve(&p, &SolverOptions::default()).unwrap_err(),
            SdpError::NoConstraints
        );
        let mut q = SdpProblem::new(vec![2]);
        q.add_constraint(single(0, 0, 2, 1.0), 1.0);
        assert!(matches!(
            solve(&q, &SolverOptions::default()),
            Err(SdpError::EntryOutOfBounds { .. })
        ));
        let bad = SolverOptions {
            tol: 0.5,
            max_iter: 10,
        };
        assert!(matches!(
            solve(&completion_problem(), &bad),
            Err(SdpError::BadTolerance(_))
        ));
    }

    #[test]
    fn min_eigenvalue_examples() {
        assert!((min_eigenvalue(&DMatrix::identity(3, 3)).unwrap() - 1.0).abs() < 1e-12);
        assert!((min_eigenvalue(&dmatrix![0.0, 1.0; 1.0, 0.0]).unwrap() + 1.0).abs() < 1e-12);
        assert!((min_eigenvalue(&dmatrix![2.0, 1.0; 1.0, 2.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(
            min_eigenvalue(&dmatrix![0.0, 1.0; 0.0, 0.0]),
            Err(SdpError::NotSymmetric(_))
        ));
    }

    #[test]
    fn sdpa_dump_lists_every_entry() {
        let s = completion_problem().to_sdpa();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[1], "2");
        assert_eq!(lines[3], "2");
        assert_eq!(lines.len(), 5 + 3);
        assert!(lines.contains(&"0 1 1 1 -1e0"));
    }
}
