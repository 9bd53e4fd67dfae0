//! Basic semialgebraic sets `S(g) = {x : g_i(x) >= 0}` inside `[-1, 1]^n`,
//! grid sampling, and the sample-level distance tools built on it.

use thiserror::Error;

use crate::grid::{BoxGrid, GridError, DEFAULT_SAMPLE_BUDGET};
use crate::poly::{PolyError, Polynomial};

/// Slack allowed on generator values when collecting grid samples, so that
/// boundary nodes survive round-off.
pub const CLOUD_MEMBERSHIP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SemialgError {
    #[error("a semialgebraic set needs at least one generator")]
    NoGenerators,
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("no grid sample of set {0} at this resolution (set empty or grid too coarse)")]
    EmptySample(&'static str),
    #[error("set distance must be positive, got {0}")]
    NonPositiveDistance(f64),
    #[error("polynomial is identically zero")]
    ZeroPolynomial,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemialgebraicSet {
    n: usize,
    generators: Vec<Polynomial>,
}

impl SemialgebraicSet {
    pub fn new(n: usize, generators: Vec<Polynomial>) -> Result<Self, SemialgError> {
        if generators.is_empty() {
            return Err(SemialgError::NoGenerators);
        }
        if let Some(g) = generators.iter().find(|g| g.n() != n) {
            return Err(PolyError::DimensionMismatch {
                expected: n,
                found: g.n(),
            }
            .into());
        }
        Ok(Self { n, generators })
    }

    /// Parses each generator with the polynomial grammar.
    pub fn parse<S: AsRef<str>>(n: usize, generators: &[S]) -> Result<Self, SemialgError> {
        let gens = generators
            .iter()
            .map(|s| Polynomial::parse(s.as_ref(), n))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(n, gens)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn generators(&self) -> &[Polynomial] {
        &self.generators
    }

    pub fn max_generator_degree(&self) -> u32 {
        self.generators
            .iter()
            .map(Polynomial::total_degree)
            .max()
            .unwrap_or(0)
    }

    /// Same set with every generator multiplied by a positive constant.
    pub fn scaled(&self, factor: f64) -> Self {
        assert!(factor > 0.0, "generator scale must be positive");
        Self {
            n: self.n,
            generators: self.generators.iter().map(|g| g.scale(factor)).collect(),
        }
    }

    /// Same set with `g` appended as an extra (redundant) generator.
    pub fn with_generator(&self, g: Polynomial) -> Self {
        let mut generators = self.generators.clone();
        generators.push(g);
        Self {
            n: self.n,
            generators,
        }
    }

    fn min_generator(&self, x: &[f64]) -> f64 {
        self.generators
            .iter()
            .map(|g| g.eval_unchecked(x))
            .fold(f64::INFINITY, f64::min)
    }

    /// Exact sign test: every generator is `>= 0` at `x`.
    pub fn contains(&self, x: &[f64]) -> Result<bool, SemialgError> {
        self.generators[0].check_point(x)?;
        Ok(self.min_generator(x) >= 0.0)
    }

    /// All nodes of the uniform `resolution^n` grid that lie in the set.
    pub fn sample_grid(&self, resolution: usize) -> Result<SampleCloud, SemialgError> {
        self.sample_grid_with_budget(resolution, DEFAULT_SAMPLE_BUDGET)
    }

    pub fn sample_grid_with_budget(
        &self,
        resolution: usize,
        budget: usize,
    ) -> Result<SampleCloud, SemialgError> {
        let grid = BoxGrid::with_budget(self.n, resolution, budget)?;
        let mut x = vec![0.0; self.n];
        let mut points = Vec::new();
        for i in 0..grid.len() {
            grid.point_into(i, &mut x);
            if self.min_generator(&x) >= -CLOUD_MEMBERSHIP_TOL {
                points.push(x.clone());
            }
        }
        Ok(SampleCloud { points, resolution })
    }
}

/// Grid points of a set; used as a finite proxy for the set itself.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleCloud {
    pub points: Vec<Vec<f64>>,
    pub resolution: usize,
}

impl SampleCloud {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// Euclidean distance from `x` to the nearest cloud point (infinite for an empty cloud).
    pub fn distance_to(&self, x: &[f64]) -> f64 {
        self.points
            .iter()
            .map(|q| sq_dist(q, x))
            .fold(f64::INFINITY, f64::min)
            .sqrt()
    }

    /// Minimum pairwise distance between two clouds.
    pub fn distance_to_cloud(&self, other: &SampleCloud) -> f64 {
        self.points
            .iter()
            .map(|a| {
                other
                    .points
                    .iter()
                    .map(|b| sq_dist(a, b))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(f64::INFINITY, f64::min)
            .sqrt()
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum()
}

/// Upper estimate of `dist(A, B)` from the grid clouds of both sets.
pub fn dist_estimate(
    a: &SemialgebraicSet,
    b: &SemialgebraicSet,
    resolution: usize,
) -> Result<f64, SemialgError> {
    let ca = a.sample_grid(resolution)?;
    if ca.is_empty() {
        return Err(SemialgError::EmptySample("A"));
    }
    let cb = b.sample_grid(resolution)?;
    if cb.is_empty() {
        return Err(SemialgError::EmptySample("B"));
    }
    Ok(ca.distance_to_cloud(&cb))
}

/// The continuous separator `u(x) = 2 - 3 dist(x, A) / dist(A, B)`, with
/// `dist(x, A)` measured against a sample cloud of `A`.
///
/// `u = 2` on `A`, `u <= -1` wherever `dist(x, A) >= dist(A, B)`, and `u` is
/// `3 / dist(A, B)`-Lipschitz.
pub fn u_eval(x: &[f64], a_cloud: &SampleCloud, dist_ab: f64) -> Result<f64, SemialgError> {
    if dist_ab.is_nan() || dist_ab <= 0.0 {
        return Err(SemialgError::NonPositiveDistance(dist_ab));
    }
    if a_cloud.is_empty() {
        return Err(SemialgError::EmptySample("A"));
    }
    Ok(2.0 - 3.0 * a_cloud.distance_to(x) / dist_ab)
}

/// Sample estimate of `eps(p) = min_A p / ||p||`.
pub fn eps_estimate(
    p: &Polynomial,
    a: &SemialgebraicSet,
    resolution: usize,
) -> Result<f64, SemialgError> {
    if p.is_zero() {
        return Err(SemialgError::ZeroPolynomial);
    }
    let cloud = a.sample_grid(resolution)?;
    if cloud.is_empty() {
        return Err(SemialgError::EmptySample("A"));
    }
    let min_a = cloud
        .points
        .iter()
        .map(|x| p.eval_unchecked(x))
        .fold(f64::INFINITY, f64::min);
    let norm = p.sup_norm_grid(resolution)?;
    Ok(min_a / norm)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(n: usize, gens: &[&str]) -> SemialgebraicSet {
        SemialgebraicSet::parse(n, gens).unwrap()
    }

    #[test]
    fn membership_examples() {
        let disk = set(2, &["1 - x1^2 - x2^2"]);
        assert!(disk.contains(&[0.0, 0.0]).unwrap());
        assert!(!disk.contains(&[1.0, 1.0]).unwrap());
        let lem = set(2, &["-16/9*(x1^2+x2^2)^2 + x2^2 - x1^2"]);
        assert!(lem.contains(&[0.0, 0.7]).unwrap());
        assert!(disk.contains(&[0.0]).is_err());
    }

    #[test]
    fn constructor_validation() {
        assert_eq!(
            SemialgebraicSet::new(2, vec![]),
            Err(SemialgError::NoGenerators)
        );
        assert!(SemialgebraicSet::new(2, vec![Polynomial::variable(3, 0)]).is_err());
        assert!(SemialgebraicSet::parse(2, &["x1 +"]).is_err());
    }

    #[test]
    fn sample_grid_examples() {
        let disk = set(2, &["1 - x1^2 - x2^2"]);
        let c = disk.sample_grid(3).unwrap();
        assert_eq!(c.len(), 5);
        for expected in [[0.0, 0.0], [1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]] {
            assert!(c.points.iter().any(|p| p[..] == expected[..]));
        }
        assert!(set(1, &["-1 - x1^2"]).sample_grid(11).unwrap().is_empty());
        assert_eq!(
            set(2, &["1 - x1^2", "1 - x2^2"])
                .sample_grid(3)
                .unwrap()
                .len(),
            9
        );
        assert!(disk.sample_grid_with_budget(101, 1000).is_err());
    }

    #[test]
    fn dist_examples() {
        let a = set(2, &["1/16 - (x1 + 1/2)^2 - x2^2"]);
        let b = set(2, &["1/16 - (x1 - 1/2)^2 - x2^2"]);
        let d = dist_estimate(&a, &b, 201).unwrap();
        assert!((d - 0.5).abs() < 1e-12, "{d}");
        assert_eq!(dist_estimate(&a, &a, 41).unwrap(), 0.0);
        let empty = set(2, &["-1 - x1^2"]);
        assert_eq!(
            dist_estimate(&a, &empty, 21),
            Err(SemialgError::EmptySample("B"))
        );
    }

    #[test]
    fn u_eval_examples() {
        let cloud = SampleCloud {
            points: vec![vec![0.0, 0.0]],
            resolution: 2,
        };
        assert_eq!(u_eval(&[0.0, 0.0], &cloud, 0.5).unwrap(), 2.0);
        assert_eq!(u_eval(&[0.5, 0.0], &cloud, 0.5).unwrap(), -1.0);
        assert!((u_eval(&[0.0, 0.25], &cloud, 0.75).unwrap() - 1.0).abs() < 1e-15);
        assert!(u_eval(&[0.0, 0.0], &cloud, 0.0).is_err());
        let empty = SampleCloud {
            points: vec![],
            resolution: 2,
        };
        assert!(u_eval(&[0.0, 0.0], &empty, 1.0).is_err());
    }

    #[test]
    fn eps_examples() {
        let one = Polynomial::constant(2, 1.0);
        let disk = set(2, &["1 - x1^2 - x2^2"]);
        assert_eq!(eps_estimate(&one, &disk, 11).unwrap(), 1.0);

        let face = set(1, &["x1 - 1"]);
        let x1 = Polynomial::variable(1, 0);
        assert_eq!(eps_estimate(&x1, &face, 11).unwrap(), 1.0);

        // min of 2 + x1 on the disk is 1 at (-1, 0), max on the box is 3 at x1 = 1.
        let q = Polynomial::parse("2 + x1", 2).unwrap();
        let e = eps_estimate(&q, &disk, 201).unwrap();
        assert!((e - 1.0 / 3.0).abs() < 1e-12, "{e}");

        assert_eq!(
            eps_estimate(&Polynomial::zero(2), &disk, 11),
            Err(SemialgError::ZeroPolynomial)
        );
    }
}
