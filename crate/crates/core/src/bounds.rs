//! Closed-form degree bounds for polynomial separation.
//!
//! All bound arithmetic happens in base-10 logarithms: the separation bound
//! exceeds `f64::MAX` already for small dimensions.

use std::fmt;

use thiserror::Error;

use crate::grid::GridError;
use crate::poly::Polynomial;
use crate::semialg::SemialgebraicSet;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundsError {
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("the effective Putinar bound needs n >= 2, got {0}")]
    DimensionTooSmall(u32),
    #[error("Lojasiewicz exponent T must be >= 1, got {0}")]
    ExponentTooSmall(f64),
    #[error("eps(p) = {0} is outside (0, 1]; p must be positive on the set")]
    BadEpsilon(f64),
}

fn positive(name: &'static str, value: f64) -> Result<f64, BoundsError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(BoundsError::NonPositive { name, value })
    }
}

/// A positive quantity stored as its base-10 logarithm.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LogScaleValue {
    pub log10_value: f64,
}

impl LogScaleValue {
    pub fn from_log10(log10_value: f64) -> Self {
        assert!(log10_value.is_finite(), "log-scale value must be finite");
        Self { log10_value }
    }

    pub fn from_value(v: f64) -> Self {
        Self::from_log10(v.log10())
    }

    /// The plain value; `inf` when it overflows `f64`.
    pub fn value(&self) -> f64 {
        10f64.powf(self.log10_value)
    }

    pub fn max(self, other: Self) -> Self {
        if other.log10_value > self.log10_value {
            other
        } else {
            self
        }
    }
}

impl fmt::Display for LogScaleValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "10^{:.4}", self.log10_value)
    }
}

/// Parameters shared by the effective Putinar and separation bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundParams {
    pub n: u32,
    /// Lojasiewicz exponent `T`.
    pub t_exp: f64,
    /// Lojasiewicz coefficient.
    pub loj_c: f64,
    /// Number of generators.
    pub r: u32,
    /// Maximum generator degree.
    pub deg_f: u32,
    /// Absolute constant of the multivariate Jackson theorem.
    pub c_jackson: f64,
    pub dist: f64,
}

impl BoundParams {
    pub fn validate(&self) -> Result<(), BoundsError> {
        if self.n < 2 {
            return Err(BoundsError::DimensionTooSmall(self.n));
        }
        if !(self.t_exp >= 1.0 && self.t_exp.is_finite()) {
            return Err(BoundsError::ExponentTooSmall(self.t_exp));
        }
        positive("Lojasiewicz coefficient", self.loj_c)?;
        positive("r", self.r as f64)?;
        positive("deg_f", self.deg_f as f64)?;
        positive("Jackson constant C", self.c_jackson)?;
        positive("dist(A, B)", self.dist)?;
        Ok(())
    }
}

/// Lipschitz constant `3 / dist(A, B)` of the continuous separator.
pub fn lipschitz_l(dist: f64) -> Result<f64, BoundsError> {
    Ok(3.0 / positive("dist(A, B)", dist)?)
}

/// Smallest `m >= 1` with `C * L * n^{3/2} / m <= target_err`.
pub fn jackson_degree(l: f64, n: u32, target_err: f64, c: f64) -> Result<u64, BoundsError> {
    positive("L", l)?;
    positive("n", n as f64)?;
    positive("target error", target_err)?;
    positive("C", c)?;
    let num = c * l * (n as f64).powf(1.5);
    let err_at = |m: u64| num / m as f64;
    let mut m = (num / target_err).ceil().max(1.0) as u64;
    // the ceiling can be off by one after rounding in the division
    while m > 1 && err_at(m - 1) <= target_err {
        m -= 1;
    }
    while err_at(m) > target_err {
        m += 1;
    }
    Ok(m)
}

/// `gamma(n, f) = n^3 2^{5nT} r^n c^{2n} deg(f)^n`.
pub fn gamma(n: u32, t_exp: f64, loj_c: f64, r: u32, deg_f: u32) -> LogScaleValue {
    let nf = n as f64;
    LogScaleValue::from_log10(
        3.0 * nf.log10()
            + 5.0 * nf * t_exp * 2f64.log10()
            + nf * (r as f64).log10()
            + 2.0 * nf * loj_c.log10()
            + nf * (deg_f as f64).log10(),
    )
}

/// Level from which every `p` positive on `S(f)` lies in `Q_l(f)`:
/// `gamma(n, f) deg(p)^{3.5nT} eps(p)^{-2.5nT}`.
#[allow(clippy::too_many_arguments)]
pub fn putinar_level(
    n: u32,
    t_exp: f64,
    loj_c: f64,
    r: u32,
    deg_f: u32,
    deg_p: u32,
    eps_p: f64,
) -> Result<LogScaleValue, BoundsError> {
    if !(eps_p > 0.0 && eps_p <= 1.0) {
        return Err(BoundsError::BadEpsilon(eps_p));
    }
    positive("deg(p)", deg_p as f64)?;
    let nt = n as f64 * t_exp;
    let g = gamma(n, t_exp, loj_c, r, deg_f);
    Ok(LogScaleValue::from_log10(
        g.log10_value + 3.5 * nt * (deg_p as f64).log10() - 2.5 * nt * eps_p.log10(),
    ))
}

/// Degree from which a separating polynomial with a Putinar certificate
/// exists: `max(gamma_g, gamma_h) C^{3.5nT} n^{3nT} (6 / dist)^{6nT}`.
pub fn putinar_separation_degree(
    params: &BoundParams,
    gamma_g: LogScaleValue,
    gamma_h: LogScaleValue,
) -> Result<LogScaleValue, BoundsError> {
    params.validate()?;
    let nf = params.n as f64;
    let nt = nf * params.t_exp;
    Ok(LogScaleValue::from_log10(
        gamma_g.max(gamma_h).log10_value
            + 3.5 * nt * params.c_jackson.log10()
            + 3.0 * nt * nf.log10()
            + 6.0 * nt * (6.0 / params.dist).log10(),
    ))
}

/// The same bound when the active-constraint gradients are independent,
/// which gives `T = 1`.
pub fn putinar_separation_degree_t1(
    params: &BoundParams,
    gamma_g: LogScaleValue,
    gamma_h: LogScaleValue,
) -> Result<LogScaleValue, BoundsError> {
    putinar_separation_degree(
        &BoundParams {
            t_exp: 1.0,
            ..*params
        },
        gamma_g,
        gamma_h,
    )
}

/// Box sup-norm estimate of each generator.
pub fn generator_norms(set: &SemialgebraicSet, resolution: usize) -> Result<Vec<f64>, GridError> {
    set.generators()
        .iter()
        .map(|g| g.sup_norm_grid(resolution))
        .collect()
}

/// Rescales every generator with estimated norm above 1/2 down to norm 1/2.
/// The set itself is unchanged.
pub fn normalize_generators(
    set: &SemialgebraicSet,
    resolution: usize,
) -> Result<SemialgebraicSet, GridError> {
    let norms = generator_norms(set, resolution)?;
    let gens: Vec<Polynomial> = set
        .generators()
        .iter()
        .zip(norms)
        .map(|(g, norm)| {
            if norm > 0.5 {
                g.scale(0.5 / norm)
            } else {
                g.clone()
            }
        })
        .collect();
    Ok(SemialgebraicSet::new(set.n(), gens).expect("same dimension and count"))
}
