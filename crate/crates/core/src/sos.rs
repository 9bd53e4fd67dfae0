//! Truncated quadratic module membership as semidefinite programs.
//!
//! A polynomial `q` lies in `Q_l(f)` when
//! `q = s_0 + s_1 f_1 + ... + s_t f_t` with each `s_i` a sum of squares and
//! `deg(s_0) <= l`, `deg(s_i f_i) <= l`. Each `s_i` is parameterized as
//! `z_i' G_i z_i` over a monomial basis `z_i` of half-degree
//! `floor((l - deg f_i) / 2)`, with `G_i` positive semidefinite, and the
//! identity is imposed coefficient by coefficient on every monomial of degree
//! at most `l`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::poly::{Monomial, Polynomial};
use crate::sdp::{self, SdpError, SdpProblem, SdpSolution, SdpStatus, SparseBlockSym};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SosError {
    #[error("level {level} is below the degree {degree} of {what}")]
    LevelTooSmall {
        level: u32,
        degree: u32,
        what: &'static str,
    },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("no certificate at this level: slack {slack:e} (solver status {status:?})")]
    NegativeSlack { slack: f64, status: SdpStatus },
    #[error(transparent)]
    Sdp(#[from] SdpError),
}

/// All monomials in `n` variables of total degree at most `d`, in graded
/// lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct MonomialBasis {
    pub n: usize,
    pub d: u32,
    pub elements: Vec<Monomial>,
}

impl MonomialBasis {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// `z(x)`, the basis evaluated at a point.
    pub fn evaluate(&self, x: &[f64]) -> Vec<f64> {
        self.elements.iter().map(|m| m.evaluate(x)).collect()
    }
}

pub fn basis(n: usize, d: u32) -> MonomialBasis {
    let mut elements = Vec::new();
    for deg in 0..=d {
        let mut exps = vec![0u32; n];
        homogeneous(n, deg, 0, &mut exps, &mut elements);
    }
    MonomialBasis { n, d, elements }
}

/// Pushes the monomials of exact degree `left` in variables `i..`, highest
/// power of the earliest variable first.
fn homogeneous(n: usize, left: u32, i: usize, exps: &mut Vec<u32>, out: &mut Vec<Monomial>) {
    if n == 0 {
        if left == 0 {
            out.push(Monomial::new(Vec::new()));
        }
        return;
    }
    if i == n - 1 {
        exps[i] = left;
        out.push(Monomial::new(exps.clone()));
        exps[i] = 0;
        return;
    }
    for e in (0..=left).rev() {
        exps[i] = e;
        homogeneous(n, left - e, i + 1, exps, out);
    }
    exps[i] = 0;
}

/// `s = z' G z` expanded into a polynomial.
pub fn gram_polynomial(basis: &MonomialBasis, gram: &DMatrix<f64>) -> Polynomial {
    let mut s = Polynomial::zero(basis.n);
    for (r, zr) in basis.elements.iter().enumerate() {
        s.add_term(zr.mul(zr), gram[(r, r)]);
        for (c, zc) in basis.elements.iter().enumerate().skip(r + 1) {
            s.add_term(zr.mul(zc), 2.0 * gram[(r, c)]);
        }
    }
    s
}

/// SOS multipliers for one quadratic-module expression, with `f_0 = 1`
/// implicit. `grams[0]`/`bases[0]` belong to `s_0`, entry `i + 1` to
/// `generators[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QmCertificate {
    pub generators: Vec<Polynomial>,
    pub grams: Vec<DMatrix<f64>>,
    pub bases: Vec<MonomialBasis>,
    pub level: u32,
}

impl QmCertificate {
    pub fn n(&self) -> usize {
        self.bases[0].n
    }

    /// The multiplier `s_i` (index 0 is `s_0`).
    pub fn multiplier(&self, i: usize) -> Polynomial {
        gram_polynomial(&self.bases[i], &self.grams[i])
    }

    /// `s_0 + sum_i s_i f_i`.
    pub fn expand(&self) -> Polynomial {
        let mut out = self.multiplier(0);
        for (i, f) in self.generators.iter().enumerate() {
            out = &out + &(&self.multiplier(i + 1) * f);
        }
        out
    }

    /// The same expression evaluated pointwise through the Gram forms.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        let quad = |i: usize| {
            let z = nalgebra::DVector::from_vec(self.bases[i].evaluate(x));
            z.dot(&(&self.grams[i] * &z))
        };
        let mut v = quad(0);
        for (i, f) in self.generators.iter().enumerate() {
            v += quad(i + 1) * f.eval_unchecked(x);
        }
        v
    }

    /// Smallest eigenvalue over all Gram matrices.
    pub fn min_gram_eigenvalue(&self) -> f64 {
        self.grams
            .iter()
            .map(|g| sdp::min_eigenvalue(g).unwrap_or(f64::NEG_INFINITY))
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest degree of a term `s_i f_i` (with `f_0 = 1`).
    pub fn max_term_degree(&self) -> u32 {
        let mut deg = 2 * self.bases[0].d;
        for (i, f) in self.generators.iter().enumerate() {
            deg = deg.max(2 * self.bases[i + 1].d + f.total_degree());
        }
        deg
    }
}

/// Coefficient-wise max-norm of `target - (s_0 + sum_i s_i f_i)`.
pub fn reconstruct_residual(cert: &QmCertificate, target: &Polynomial) -> f64 {
    (target - &cert.expand()).max_abs_coefficient()
}

/// Block layout of one quadratic-module expression inside a larger SDP.
#[derive(Debug, Clone, PartialEq)]
pub struct QmLayout {
    /// `f_0 = 1` followed by the generators.
    pub multipliers: Vec<Polynomial>,
    pub bases: Vec<MonomialBasis>,
    /// SDP block index of each multiplier's Gram matrix.
    pub blocks: Vec<usize>,
    pub level: u32,
}

impl QmLayout {
    /// Lays out Gram blocks for `Q_l(generators)` starting at `first_block`.
    pub fn new(
        n: usize,
        generators: &[Polynomial],
        level: u32,
        first_block: usize,
    ) -> Result<Self, SosError> {
        let mut multipliers = vec![Polynomial::constant(n, 1.0)];
        for g in generators {
            if g.n() != n {
                return Err(SosError::DimensionMismatch {
                    expected: n,
                    found: g.n(),
                });
            }
            if g.total_degree() > level {
                return Err(SosError::LevelTooSmall {
                    level,
                    degree: g.total_degree(),
                    what: "a generator",
                });
            }
            multipliers.push(g.clone());
        }
        let bases = multipliers
            .iter()
            .map(|f| basis(n, (level - f.total_degree()) / 2))
            .collect();
        let blocks = (first_block..first_block + multipliers.len()).collect();
        Ok(Self {
            multipliers,
            bases,
            blocks,
            level,
        })
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.bases.iter().map(MonomialBasis::len).collect()
    }

    /// For every monomial, the linear form giving its coefficient in
    /// `sum_i (z_i' G_i z_i) f_i`.
    pub fn coefficient_rows(&self) -> BTreeMap<Monomial, SparseBlockSym> {
        let mut rows: BTreeMap<Monomial, SparseBlockSym> = BTreeMap::new();
        for ((f, b), &blk) in self.multipliers.iter().zip(&self.bases).zip(&self.blocks) {
            for (r, zr) in b.elements.iter().enumerate() {
                for (c, zc) in b.elements.iter().enumerate().skip(r) {
                    let zz = zr.mul(zc);
                    for (m, coef) in f.terms() {
                        rows.entry(zz.mul(m)).or_default().add(blk, r, c, coef);
                    }
                }
            }
        }
        rows
    }

    /// `sum_i |z_i|^2 f_i`: the polynomial added when every Gram block is
    /// shifted by the identity.
    pub fn identity_shift(&self) -> Polynomial {
        let mut out = Polynomial::zero(self.bases[0].n);
        for (f, b) in self.multipliers.iter().zip(&self.bases) {
            let mut norm2 = Polynomial::zero(b.n);
            for z in &b.elements {
                norm2.add_term(z.mul(z), 1.0);
            }
            out = &out + &(&norm2 * f);
        }
        out
    }

    pub fn certificate(&self, grams: Vec<DMatrix<f64>>) -> QmCertificate {
        QmCertificate {
            generators: self.multipliers[1..].to_vec(),
            grams,
            bases: self.bases.clone(),
            level: self.level,
        }
    }

    pub fn trace_objective(&self, weight: f64, objective: &mut SparseBlockSym) {
        for (b, &blk) in self.bases.iter().zip(&self.blocks) {
            for r in 0..b.len() {
                objective.add(blk, r, r, weight);
            }
        }
    }
}

/// A bounded scalar `t = t+ - t-` carried by four 1x1 blocks
/// (`t+`, `t-`, and their complements), so `t` lives in `[-lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlackBlocks {
    pub plus: usize,
    pub minus: usize,
}

impl SlackBlocks {
    /// Appends the four blocks and the two bound constraints.
    pub fn append(problem: &mut SdpProblem, lower: f64, upper: f64) -> Self {
        let plus = problem.block_sizes.len();
        problem.block_sizes.extend([1, 1, 1, 1]);
        let minus = plus + 1;
        let mut cap = SparseBlockSym::new();
        cap.add(plus, 0, 0, 1.0);
        cap.add(plus + 2, 0, 0, 1.0);
        problem.add_constraint(cap, upper);
        let mut floor = SparseBlockSym::new();
        floor.add(minus, 0, 0, 1.0);
        floor.add(plus + 3, 0, 0, 1.0);
        problem.add_constraint(floor, lower);
        problem.objective.add(plus, 0, 0, 1.0);
        problem.objective.add(minus, 0, 0, -1.0);
        Self { plus, minus }
    }

    /// Adds `coef * t` to a linear form.
    pub fn add_to(&self, row: &mut SparseBlockSym, coef: f64) {
        row.add(self.plus, 0, 0, coef);
        row.add(self.minus, 0, 0, -coef);
    }

    pub fn value(&self, sol: &SdpSolution) -> f64 {
        sol.x[self.plus][(0, 0)] - sol.x[self.minus][(0, 0)]
    }
}

/// Weight of the Gram trace regularizer in max-slack objectives; keeps the
/// optimal face bounded.
pub const TRACE_WEIGHT: f64 = 1e-4;

/// The max-slack SDP for `target ∈ Q_l(f)` and the maps needed to read a
/// certificate back out.
#[derive(Debug, Clone)]
pub struct MembershipProgram {
    pub problem: SdpProblem,
    pub layout: QmLayout,
    pub slack: SlackBlocks,
    /// Constraint index for each monomial of degree `<= l`.
    pub monomial_rows: Vec<(Monomial, usize)>,
    pub target: Polynomial,
}

/// Compiles `target ∈ Q_l(f)` into an SDP.
///
/// Every Gram block is written as `G_i = G_i' + t I` with `G_i' >= 0`, and
/// `t` is maximized: `t >= 0` certifies membership and `t > 0` certifies it
/// with every Gram strictly positive definite. Blocks `0..=f.len()` hold
/// `G_0'..G_t'`, followed by four scalar blocks carrying `t`.
pub fn assemble_membership(
    target: &Polynomial,
    f: &[Polynomial],
    level: u32,
) -> Result<MembershipProgram, SosError> {
    let n = target.n();
    if target.total_degree() > level {
        return Err(SosError::LevelTooSmall {
            level,
            degree: target.total_degree(),
            what: "the target",
        });
    }
    let layout = QmLayout::new(n, f, level, 0)?;
    let mut problem = SdpProblem::new(layout.block_sizes());
    let bound = 1.0 + target.max_abs_coefficient();
    let slack = SlackBlocks::append(&mut problem, bound, bound);
    layout.trace_objective(-TRACE_WEIGHT, &mut problem.objective);

    let shift = layout.identity_shift();
    let mut rows = layout.coefficient_rows();
    let mut monomial_rows = Vec::new();
    for m in basis(n, level).elements {
        let mut row = rows.remove(&m).unwrap_or_default();
        slack.add_to(&mut row, shift.coefficient(&m));
        let k = problem.add_constraint(row, target.coefficient(&m));
        monomial_rows.push((m, k));
    }
    Ok(MembershipProgram {
        problem,
        layout,
        slack,
        monomial_rows,
        target: target.clone(),
    })
}

impl MembershipProgram {
    pub fn solve(&self, opts: &sdp::SolverOptions) -> Result<SdpSolution, SosError> {
        Ok(sdp::solve(&self.problem, opts)?)
    }

    /// Reads the Gram matrices `G_i = G_i' + t I` out of a solution.
    ///
    /// Fails with `NegativeSlack` unless the solver reached optimality with
    /// `t >= -tol`.
    pub fn extract_certificate(
        &self,
        sol: &SdpSolution,
        tol: f64,
    ) -> Result<QmCertificate, SosError> {
        let t = if sol.status == SdpStatus::Optimal {
            self.slack.value(sol)
        } else {
            f64::NEG_INFINITY
        };
        if t < -tol {
            return Err(SosError::NegativeSlack {
                slack: t,
                status: sol.status,
            });
        }
        let grams = self
            .layout
            .blocks
            .iter()
            .map(|&b| {
                let g = &sol.x[b];
                g + DMatrix::identity(g.nrows(), g.ncols()) * t
            })
            .collect();
        Ok(self.layout.certificate(grams))
    }
}
