//! Search for a polynomial `p` with `p >= 1` on `A` and `p <= 0` on `B`,
//! certified by `p - 1 - t ∈ Q_l(g)` and `-p - t ∈ Q_l(h)` for a slack `t > 0`.
//!
//! At a fixed degree `d` and level `l` a single SDP carries the Gram matrices
//! of both quadratic-module expressions `sigma_A` and `sigma_B`. The
//! coefficients of `p` do not appear as variables: `p = sigma_A + 1 + t`
//! on the monomials of degree `<= d`, so the two memberships reduce to
//!
//! ```text
//!     sigma_A[a] + sigma_B[a] + 2t [a = 0] = -[a = 0]     for |a| <= d
//!     sigma_A[a] = 0,  sigma_B[a] = 0                     for d < |a| <= l
//! ```
//!
//! and `t` is maximized (capped at [`SLACK_CAP`]).

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::poly::{Monomial, Polynomial};
use crate::sdp::{self, SdpError, SdpProblem, SdpStatus, SolverOptions, SparseBlockSym};
use crate::semialg::{SemialgError, SemialgebraicSet};
use crate::sos::{self, QmCertificate, QmLayout, SlackBlocks, SosError, TRACE_WEIGHT};

/// Upper cap on the slack `t`; separable problems are otherwise unbounded
/// (scale `p`).
pub const SLACK_CAP: f64 = 1.0;
/// Lower bound on `t`. `p = 0, t = -1` is always feasible, so this never binds.
pub const SLACK_FLOOR: f64 = -2.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SeparatorError {
    #[error("sets live in different dimensions ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("level {level} is below max(degree, generator degrees) = {required}")]
    LevelTooSmall { level: u32, required: u32 },
    #[error("hierarchy bounds need 1 <= degree_max <= level_max (got {degree_max}, {level_max})")]
    BadHierarchyBounds { degree_max: u32, level_max: u32 },
    #[error("no separator at degree {degree}, level {level} (slack {slack:?})")]
    InfeasibleAtLevel {
        degree: u32,
        level: u32,
        slack: Option<f64>,
    },
    #[error("SDP solver stopped with status {status:?} at degree {degree}, level {level}")]
    Solver {
        degree: u32,
        level: u32,
        status: SdpStatus,
    },
    #[error("no separator found for any degree/level in the hierarchy ({} attempts)", .trace.len())]
    ExhaustedHierarchy { trace: Vec<Attempt> },
    #[error(transparent)]
    Sos(#[from] SosError),
    #[error(transparent)]
    Sdp(#[from] SdpError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparatorOptions {
    /// Success requires the optimal slack to exceed this.
    pub margin: f64,
    pub solver: SolverOptions,
    /// Append the redundant generator `n - |x|^2` to both sets.
    pub ball: bool,
}

impl Default for SeparatorOptions {
    fn default() -> Self {
        Self {
            margin: 1e-4,
            solver: SolverOptions::default(),
            ball: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparatorProblem {
    pub a: SemialgebraicSet,
    pub b: SemialgebraicSet,
    pub degree: u32,
    pub level: u32,
    pub options: SeparatorOptions,
}

impl SeparatorProblem {
    pub fn new(
        a: SemialgebraicSet,
        b: SemialgebraicSet,
        degree: u32,
        level: u32,
        options: SeparatorOptions,
    ) -> Result<Self, SeparatorError> {
        if a.n() != b.n() {
            return Err(SeparatorError::DimensionMismatch(a.n(), b.n()));
        }
        let required = min_level(&a, &b, degree, options.ball);
        if level < required {
            return Err(SeparatorError::LevelTooSmall { level, required });
        }
        Ok(Self {
            a,
            b,
            degree,
            level,
            options,
        })
    }

    fn generators(&self, set: &SemialgebraicSet) -> Vec<Polynomial> {
        let mut g = set.generators().to_vec();
        if self.options.ball {
            g.push(Polynomial::ball_generator(set.n()));
        }
        g
    }
}

fn min_level(a: &SemialgebraicSet, b: &SemialgebraicSet, degree: u32, ball: bool) -> u32 {
    let gens = a.max_generator_degree().max(b.max_generator_degree());
    degree.max(gens).max(if ball { 2 } else { 0 })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveDiagnostics {
    pub status: SdpStatus,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
    pub num_constraints: usize,
    pub block_sizes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AttemptOutcome {
    Separated { slack: f64 },
    Infeasible { slack: Option<f64> },
    SolverFailure { status: SdpStatus },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Attempt {
    pub degree: u32,
    pub level: u32,
    pub outcome: AttemptOutcome,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparatorResult {
    pub p: Polynomial,
    /// Certificate of `p - 1 - slack` over the generators of `A`.
    pub cert_a: QmCertificate,
    /// Certificate of `-p - slack` over the generators of `B`.
    pub cert_b: QmCertificate,
    pub slack: f64,
    pub level: u32,
    pub degree: u32,
    pub diagnostics: SolveDiagnostics,
    /// Every hierarchy attempt up to and including this one.
    pub trace: Vec<Attempt>,
}

impl SeparatorResult {
    /// The polynomial `cert_a` must reproduce: `p - 1 - slack`.
    pub fn target_a(&self) -> Polynomial {
        &self.p - &Polynomial::constant(self.p.n(), 1.0 + self.slack)
    }

    /// The polynomial `cert_b` must reproduce: `-p - slack`.
    pub fn target_b(&self) -> Polynomial {
        &(-&self.p) - &Polynomial::constant(self.p.n(), self.slack)
    }

    pub fn residual_a(&self) -> f64 {
        sos::reconstruct_residual(&self.cert_a, &self.target_a())
    }

    pub fn residual_b(&self) -> f64 {
        sos::reconstruct_residual(&self.cert_b, &self.target_b())
    }

    pub fn min_gram_eigenvalue(&self) -> f64 {
        self.cert_a
            .min_gram_eigenvalue()
            .min(self.cert_b.min_gram_eigenvalue())
    }
}

/// Solves the joint max-slack SDP at one `(degree, level)`.
pub fn solve_fixed_level(prob: &SeparatorProblem) -> Result<SeparatorResult, SeparatorError> {
    let n = prob.a.n();
    let (d, l) = (prob.degree, prob.level);
    let layout_a = QmLayout::new(n, &prob.generators(&prob.a), l, 0)?;
    let layout_b = QmLayout::new(n, &prob.generators(&prob.b), l, layout_a.blocks.len())?;

    let mut sizes = layout_a.block_sizes();
    sizes.extend(layout_b.block_sizes());
    let mut problem = SdpProblem::new(sizes);
    let slack = SlackBlocks::append(&mut problem, -SLACK_FLOOR, SLACK_CAP);
    layout_a.trace_objective(-TRACE_WEIGHT, &mut problem.objective);
    layout_b.trace_objective(-TRACE_WEIGHT, &mut problem.objective);

    let mut rows_a = layout_a.coefficient_rows();
    let mut rows_b = layout_b.coefficient_rows();
    for m in sos::basis(n, l).elements {
        let ra = rows_a.remove(&m).unwrap_or_default();
        let rb = rows_b.remove(&m).unwrap_or_default();
        if m.degree() <= d {
            let mut row = merge(ra, rb);
            if m.is_constant() {
                slack.add_to(&mut row, 2.0);
                problem.add_constraint(row, -1.0);
            } else {
                problem.add_constraint(row, 0.0);
            }
        } else {
            problem.add_constraint(ra, 0.0);
            problem.add_constraint(rb, 0.0);
        }
    }

    let sol = sdp::solve(&problem, &prob.options.solver)?;
    let diagnostics = SolveDiagnostics {
        status: sol.status,
        iterations: sol.iterations,
        primal_residual: sol.primal_residual,
        dual_residual: sol.dual_residual,
        gap: sol.gap,
        num_constraints: problem.num_constraints(),
        block_sizes: problem.block_sizes.clone(),
    };
    match sol.status {
        SdpStatus::Optimal => {}
        SdpStatus::Infeasible => {
            return Err(SeparatorError::InfeasibleAtLevel {
                degree: d,
                level: l,
                slack: None,
            })
        }
        status => {
            return Err(SeparatorError::Solver {
                degree: d,
                level: l,
                status,
            })
        }
    }
    let t = slack.value(&sol);
    if t <= prob.options.margin {
        return Err(SeparatorError::InfeasibleAtLevel {
            degree: d,
            level: l,
            slack: Some(t),
        });
    }

    let grams = |layout: &QmLayout| -> Vec<DMatrix<f64>> {
        layout.blocks.iter().map(|&b| sol.x[b].clone()).collect()
    };
    let cert_a = layout_a.certificate(grams(&layout_a));
    let cert_b = layout_b.certificate(grams(&layout_b));

    let sigma_a = cert_a.expand();
    let mut p = Polynomial::zero(n);
    for (m, c) in sigma_a.terms() {
        if m.degree() <= d {
            p.add_term(m.clone(), c);
        }
    }
    p.add_term(Monomial::one(n), 1.0 + t);

    Ok(SeparatorResult {
        p,
        cert_a,
        cert_b,
        slack: t,
        level: l,
        degree: d,
        trace: vec![Attempt {
            degree: d,
            level: l,
            outcome: AttemptOutcome::Separated { slack: t },
            iterations: sol.iterations,
        }],
        diagnostics,
    })
}

fn merge(a: SparseBlockSym, b: SparseBlockSym) -> SparseBlockSym {
    let mut out = a;
    for (blk, r, c, v) in b.entries() {
        out.add(blk, r, c, v);
    }
    out
}

/// Iterates `d = 1..=degree_max` and, for each `d`, even levels from the
/// smallest admissible one up to `level_max`; returns the first success.
pub fn run_hierarchy(
    a: &SemialgebraicSet,
    b: &SemialgebraicSet,
    degree_max: u32,
    level_max: u32,
    options: SeparatorOptions,
) -> Result<SeparatorResult, SeparatorError> {
    if degree_max < 1 || level_max < degree_max {
        return Err(SeparatorError::BadHierarchyBounds {
            degree_max,
            level_max,
        });
    }
    if a.n() != b.n() {
        return Err(SeparatorError::DimensionMismatch(a.n(), b.n()));
    }
    let mut trace = Vec::new();
    for d in 1..=degree_max {
        let start = min_level(a, b, d, options.ball).next_multiple_of(2);
        for l in (start..=level_max).step_by(2) {
            let prob = SeparatorProblem::new(a.clone(), b.clone(), d, l, options)?;
            match solve_fixed_level(&prob) {
                Ok(mut res) => {
                    trace.append(&mut res.trace);
                    res.trace = trace;
                    return Ok(res);
                }
                Err(SeparatorError::InfeasibleAtLevel { slack, .. }) => trace.push(Attempt {
                    degree: d,
                    level: l,
                    outcome: AttemptOutcome::Infeasible { slack },
                    iterations: 0,
                }),
                Err(SeparatorError::Solver { status, .. }) => trace.push(Attempt {
                    degree: d,
                    level: l,
                    outcome: AttemptOutcome::SolverFailure { status },
                    iterations: 0,
                }),
                Err(e) => return Err(e),
            }
        }
    }
    Err(SeparatorError::ExhaustedHierarchy { trace })
}

/// Sample-level check of the separation contract.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparationReport {
    pub resolution: usize,
    pub tol: f64,
    pub samples_a: usize,
    pub samples_b: usize,
    pub min_on_a: f64,
    pub argmin_on_a: Vec<f64>,
    pub max_on_b: f64,
    pub argmax_on_b: Vec<f64>,
    /// Sample points violating the contract (at most a few per set).
    pub witnesses: Vec<Witness>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub set: &'static str,
    pub point: Vec<f64>,
    pub value: f64,
}

const MAX_WITNESSES: usize = 8;

/// Checks `min_A p >= 1 - tol` and `max_B p <= tol` over grid samples.
pub fn verify_separation(
    p: &Polynomial,
    a: &SemialgebraicSet,
    b: &SemialgebraicSet,
    resolution: usize,
    tol: f64,
) -> Result<SeparationReport, SemialgError> {
    let ca = a.sample_grid(resolution)?;
    if ca.is_empty() {
        return Err(SemialgError::EmptySample("A"));
    }
    let cb = b.sample_grid(resolution)?;
    if cb.is_empty() {
        return Err(SemialgError::EmptySample("B"));
    }
    let mut witnesses = Vec::new();
    let mut extreme = |cloud: &crate::semialg::SampleCloud, set: &'static str| {
        let sign = if set == "A" { 1.0 } else { -1.0 };
        let mut best = (f64::INFINITY, Vec::new());
        let mut bad: Vec<Witness> = Vec::new();
        for x in &cloud.points {
            let v = p.eval_unchecked(x);
            if sign * v < best.0 {
                best = (sign * v, x.clone());
            }
            let violated = if set == "A" { v < 1.0 - tol } else { v > tol };
            if violated {
                bad.push(Witness {
                    set,
                    point: x.clone(),
                    value: v,
                });
            }
        }
        // keep the worst violations
        bad.sort_by(|u, w| (sign * u.value).total_cmp(&(sign * w.value)));
        witnesses.extend(bad.into_iter().take(MAX_WITNESSES));
        (sign * best.0, best.1)
    };
    let (min_a, argmin_a) = extreme(&ca, "A");
    let (max_b, argmax_b) = extreme(&cb, "B");
    Ok(SeparationReport {
        resolution,
        tol,
        samples_a: ca.len(),
        samples_b: cb.len(),
        pass: min_a >= 1.0 - tol && max_b <= tol,
        min_on_a: min_a,
        argmin_on_a: argmin_a,
        max_on_b: max_b,
        argmax_on_b: argmax_b,
        witnesses,
    })
}

/// Certificate-side check: both reconstructions within `tol`, every Gram
/// with min eigenvalue `>= -tol`, and positive slack.
pub fn verify_certificate(result: &SeparatorResult, tol: f64) -> bool {
    check_certificates(&result.p, result.slack, &result.cert_a, &result.cert_b, tol).pass
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    pub residual_a: f64,
    pub residual_b: f64,
    pub min_gram_eigenvalue: f64,
    pub slack: f64,
    pub tol: f64,
    pub pass: bool,
}

/// [`verify_certificate`] on loose parts: `cert_a` must reproduce
/// `p - 1 - slack` and `cert_b` must reproduce `-p - slack`.
pub fn check_certificates(
    p: &Polynomial,
    slack: f64,
    cert_a: &QmCertificate,
    cert_b: &QmCertificate,
    tol: f64,
) -> CertificateReport {
    let n = p.n();
    let target_a = p - &Polynomial::constant(n, 1.0 + slack);
    let target_b = &(-p) - &Polynomial::constant(n, slack);
    let residual_a = sos::reconstruct_residual(cert_a, &target_a);
    let residual_b = sos::reconstruct_residual(cert_b, &target_b);
    let min_gram_eigenvalue = cert_a
        .min_gram_eigenvalue()
        .min(cert_b.min_gram_eigenvalue());
    CertificateReport {
        residual_a,
        residual_b,
        min_gram_eigenvalue,
        slack,
        tol,
        pass: slack > 0.0 && residual_a <= tol && residual_b <= tol && min_gram_eigenvalue >= -tol,
    }
}

/// Index from monomials to coefficients, handy for comparing separators.
pub fn coefficient_map(p: &Polynomial) -> BTreeMap<Monomial, f64> {
    p.terms().map(|(m, c)| (m.clone(), c)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(n: usize, gens: &[&str]) -> SemialgebraicSet {
        SemialgebraicSet::parse(n, gens).unwrap()
    }

    fn disks() -> (SemialgebraicSet, SemialgebraicSet) {
        (
            set(2, &["1/16 - (x1 + 1/2)^2 - x2^2"]),
            set(2, &["1/16 - (x1 - 1/2)^2 - x2^2"]),
        )
    }

    #[test]
    fn opposite_faces_in_one_dimension() {
        let a = set(1, &["x1 - 1"]);
        let b = set(1, &["-x1 - 1"]);
        let prob = SeparatorProblem::new(a.clone(), b.clone(), 1, 2, Default::default()).unwrap();
        let res = solve_fixed_level(&prob).unwrap();
        assert!(res.slack > 0.0);
        assert!(res.p.total_degree() <= 1);
        assert!(verify_certificate(&res, 1e-6));
        assert!(res.p.evaluate(&[1.0]).unwrap() >= 1.0);
        assert!(res.p.evaluate(&[-1.0]).unwrap() <= 0.0);
    }

    #[test]
    fn disjoint_disks_at_degree_one() {
        let (a, b) = disks();
        let prob = SeparatorProblem::new(a.clone(), b.clone(), 1, 4, Default::default()).unwrap();
        let res = solve_fixed_level(&prob).unwrap();
        assert!(verify_certificate(&res, 1e-6), "{:?}", res.diagnostics);
        let rep = verify_separation(&res.p, &a, &b, 201, 1e-3).unwrap();
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn identical_sets_are_never_separated() {
        let (a, _) = disks();
        for (d, l) in [(1, 2), (2, 4)] {
            let prob =
                SeparatorProblem::new(a.clone(), a.clone(), d, l, Default::default()).unwrap();
            match solve_fixed_level(&prob) {
                Err(SeparatorError::InfeasibleAtLevel { slack, .. }) => {
                    if let Some(t) = slack {
                        assert!(t < 0.0, "{t}");
                    }
                }
                other => panic!("unexpected {other:?}"),
            }
        }
        assert!(matches!(
            run_hierarchy(&a, &a, 2, 4, Default::default()),
            Err(SeparatorError::ExhaustedHierarchy { .. })
        ));
    }

    #[test]
    fn level_validation() {
        let (a, b) = disks();
        assert!(matches!(
            SeparatorProblem::new(a.clone(), b.clone(), 3, 2, Default::default()),
            Err(SeparatorError::LevelTooSmall { .. })
        ));
        assert!(matches!(
            run_hierarchy(&a, &b, 0, 4, Default::default()),
            Err(SeparatorError::BadHierarchyBounds { .. })
        ));
        assert!(matches!(
            run_hierarchy(&a, &b, 3, 2, Default::default()),
            Err(SeparatorError::BadHierarchyBounds { .. })
        ));
    }

    #[test]
    fn certificate_check_rejects_corruption_and_zero_slack() {
        let (a, b) = disks();
        let res = run_hierarchy(&a, &b, 1, 4, Default::default()).unwrap();
        assert!(verify_certificate(&res, 1e-6));
        let mut corrupted = res.clone();
        corrupted.cert_a.grams[0][(0, 0)] += 0.1;
        assert!(!verify_certificate(&corrupted, 1e-6));
        let mut flat = res.clone();
        flat.slack = 0.0;
        assert!(!verify_certificate(&flat, 1e-6));
    }

    #[test]
    fn empty_sample_is_reported() {
        let a = set(2, &["1 - x1^2 - x2^2"]);
        let empty = set(2, &["-1 - x1^2"]);
        let one = Polynomial::constant(2, 1.0);
        assert_eq!(
            verify_separation(&one, &a, &empty, 21, 1e-3),
            Err(SemialgError::EmptySample("B"))
        );
    }
}
