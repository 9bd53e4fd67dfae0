//! JSON problem and result files.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use polysep::separator::{
    Attempt, AttemptOutcome, SeparationReport, SeparatorResult, SolveDiagnostics,
};
use polysep::sos::{MonomialBasis, QmCertificate};
use polysep::{Monomial, Polynomial, SemialgebraicSet};

/// Text and coefficient list of a polynomial may differ by at most this much.
pub const TERM_AGREEMENT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ProblemOptions {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree_max: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level_max: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ball: Option<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub n: usize,
    #[serde(rename = "A_generators")]
    pub a_generators: Vec<String>,
    #[serde(rename = "B_generators")]
    pub b_generators: Vec<String>,
    #[serde(default)]
    pub options: ProblemOptions,
}

impl ProblemFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn sets(&self) -> Result<(SemialgebraicSet, SemialgebraicSet)> {
        if self.n == 0 {
            bail!("dimension n must be positive");
        }
        let a = SemialgebraicSet::parse(self.n, &self.a_generators)
            .map_err(|e| anyhow!("set A: {e}"))?;
        let b = SemialgebraicSet::parse(self.n, &self.b_generators)
            .map_err(|e| anyhow!("set B: {e}"))?;
        Ok((a, b))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TermJson {
    pub exponents: Vec<u32>,
    pub coefficient: f64,
}

/// A polynomial as text (for people) plus a coefficient list (for machines).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PolyJson {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terms: Option<Vec<TermJson>>,
}

impl PolyJson {
    pub fn from_poly(p: &Polynomial) -> Self {
        Self {
            text: p.to_string(),
            terms: Some(
                p.terms()
                    .map(|(m, c)| TermJson {
                        exponents: m.exponents().to_vec(),
                        coefficient: c,
                    })
                    .collect(),
            ),
        }
    }

    /// Parses the text and, when present, checks it against the term list.
    pub fn to_poly(&self, n: usize) -> Result<Polynomial> {
        let from_text = Polynomial::parse(&self.text, n)
            .map_err(|e| anyhow!("polynomial '{}': {e}", self.text))?;
        if let Some(terms) = &self.terms {
            let from_terms = Polynomial::from_terms(
                n,
                terms
                    .iter()
                    .map(|t| (Monomial::new(t.exponents.clone()), t.coefficient)),
            )
            .map_err(|e| anyhow!("term list of '{}': {e}", self.text))?;
            let diff = (&from_text - &from_terms).max_abs_coefficient();
            let scale = from_terms.max_abs_coefficient().max(1.0);
            if diff > TERM_AGREEMENT_TOL * scale {
                bail!("text and term list of '{}' disagree by {diff:e}", self.text);
            }
            return Ok(from_terms);
        }
        Ok(from_text)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MultiplierJson {
    /// Exponent vectors of the monomial basis `z`.
    pub basis: Vec<Vec<u32>>,
    /// Gram matrix, row-major, `basis.len()^2` entries.
    pub gram: Vec<f64>,
}

/// `s_0 + sum_i s_i f_i`; `multipliers[0]` is `s_0`, `multipliers[i+1]` pairs
/// with `generators[i]`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CertificateJson {
    pub level: u32,
    pub generators: Vec<PolyJson>,
    pub multipliers: Vec<MultiplierJson>,
}

impl CertificateJson {
    pub fn from_cert(c: &QmCertificate) -> Self {
        Self {
            level: c.level,
            generators: c.generators.iter().map(PolyJson::from_poly).collect(),
            multipliers: c
                .bases
                .iter()
                .zip(&c.grams)
                .map(|(b, g)| MultiplierJson {
                    basis: b.elements.iter().map(|m| m.exponents().to_vec()).collect(),
                    gram: g.transpose().iter().copied().collect(),
                })
                .collect(),
        }
    }

    pub fn to_cert(&self, n: usize) -> Result<QmCertificate> {
        if self.multipliers.len() != self.generators.len() + 1 {
            bail!(
                "certificate has {} multipliers for {} generators",
                self.multipliers.len(),
                self.generators.len()
            );
        }
        let generators = self
            .generators
            .iter()
            .map(|g| g.to_poly(n))
            .collect::<Result<Vec<_>>>()?;
        let mut bases = Vec::new();
        let mut grams = Vec::new();
        for m in &self.multipliers {
            let k = m.basis.len();
            if k == 0 || m.gram.len() != k * k {
                bail!(
                    "Gram matrix has {} entries for a basis of size {k}",
                    m.gram.len()
                );
            }
            if let Some(e) = m.basis.iter().find(|e| e.len() != n) {
                bail!("basis monomial {e:?} does not have {n} exponents");
            }
            let d = m
                .basis
                .iter()
                .map(|e| e.iter().sum::<u32>())
                .max()
                .unwrap_or(0);
            bases.push(MonomialBasis {
                n,
                d,
                elements: m.basis.iter().map(|e| Monomial::new(e.clone())).collect(),
            });
            grams.push(DMatrix::from_row_slice(k, k, &m.gram));
        }
        Ok(QmCertificate {
            generators,
            grams,
            bases,
            level: self.level,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CertificatesJson {
    #[serde(rename = "A")]
    pub a: CertificateJson,
    #[serde(rename = "B")]
    pub b: CertificateJson,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct WitnessJson {
    pub set: String,
    pub point: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SeparationJson {
    pub resolution: usize,
    pub tol: f64,
    pub samples_a: usize,
    pub samples_b: usize,
    pub min_on_a: f64,
    pub argmin_on_a: Vec<f64>,
    pub max_on_b: f64,
    pub argmax_on_b: Vec<f64>,
    pub witnesses: Vec<WitnessJson>,
    pub pass: bool,
}

impl From<&SeparationReport> for SeparationJson {
    fn from(r: &SeparationReport) -> Self {
        Self {
            resolution: r.resolution,
            tol: r.tol,
            samples_a: r.samples_a,
            samples_b: r.samples_b,
            min_on_a: r.min_on_a,
            argmin_on_a: r.argmin_on_a.clone(),
            max_on_b: r.max_on_b,
            argmax_on_b: r.argmax_on_b.clone(),
            witnesses: r
                .witnesses
                .iter()
                .map(|w| WitnessJson {
                    set: w.set.to_string(),
                    point: w.point.clone(),
                    value: w.value,
                })
                .collect(),
            pass: r.pass,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SolverJson {
    pub status: String,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
    pub num_constraints: usize,
    pub block_sizes: Vec<usize>,
}

impl From<&SolveDiagnostics> for SolverJson {
    fn from(d: &SolveDiagnostics) -> Self {
        Self {
            status: format!("{:?}", d.status),
            iterations: d.iterations,
            primal_residual: d.primal_residual,
            dual_residual: d.dual_residual,
            gap: d.gap,
            num_constraints: d.num_constraints,
            block_sizes: d.block_sizes.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AttemptJson {
    pub degree: u32,
    pub level: u32,
    pub outcome: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slack: Option<f64>,
}

impl From<&Attempt> for AttemptJson {
    fn from(a: &Attempt) -> Self {
        let (outcome, slack) = match &a.outcome {
            AttemptOutcome::Separated { slack } => ("separated".to_string(), Some(*slack)),
            AttemptOutcome::Infeasible { slack } => ("infeasible".to_string(), *slack),
            AttemptOutcome::SolverFailure { status } => (format!("solver:{status:?}"), None),
        };
        Self {
            degree: a.degree,
            level: a.level,
            outcome,
            slack,
        }
    }
}

/// Bound calculator output (also embedded in result files).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BoundReport {
    pub n: usize,
    pub dist_resolution: usize,
    pub dist_estimate: f64,
    pub lipschitz_l: f64,
    pub jackson_target_err: f64,
    pub jackson_m: u64,
    pub loj_c: f64,
    #[serde(rename = "T")]
    pub t_exp: f64,
    #[serde(rename = "C")]
    pub c_jackson: f64,
    pub log10_gamma_a: f64,
    pub log10_gamma_b: f64,
    /// log10 of the separation degree bound at the given T.
    pub log10_separation_degree: f64,
    /// The same bound with T = 1.
    pub log10_separation_degree_t1: f64,
    /// The bound is `10^(log10_separation_degree_without_c) * C^c_exponent`.
    pub log10_separation_degree_without_c: f64,
    pub c_exponent: f64,
    pub separation_degree: String,
    /// Same quantities after scaling coordinates by `1/sqrt(n)` (unit-ball form).
    pub rescaled: RescaledBounds,
    pub generator_norms_a: Vec<f64>,
    pub generator_norms_b: Vec<f64>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RescaledBounds {
    pub dist_estimate: f64,
    pub lipschitz_l: f64,
    pub jackson_m: u64,
    pub log10_separation_degree: f64,
    pub log10_separation_degree_t1: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ResultFile {
    pub tool_version: String,
    pub n: usize,
    pub p: PolyJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<u32>,
    /// Certificates are for `p - 1 - slack` (A) and `-p - slack` (B).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slack: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ball: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificates: Option<CertificatesJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verification: Option<SeparationJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoundReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverJson>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<AttemptJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<f64>,
}

impl ResultFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn from_result(res: &SeparatorResult, ball: bool) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            n: res.p.n(),
            p: PolyJson::from_poly(&res.p),
            degree: Some(res.degree),
            level: Some(res.level),
            slack: Some(res.slack),
            ball: Some(ball),
            certificates: Some(CertificatesJson {
                a: CertificateJson::from_cert(&res.cert_a),
                b: CertificateJson::from_cert(&res.cert_b),
            }),
            verification: None,
            bounds: None,
            solver: Some((&res.diagnostics).into()),
            trace: res.trace.iter().map(AttemptJson::from).collect(),
            timing_ms: None,
        }
    }
}

/// Trace document written when the hierarchy finds nothing.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ExhaustedFile {
    pub tool_version: String,
    pub status: String,
    pub trace: Vec<AttemptJson>,
}
