//! The "cookie" parametric diffusion problem.
//!
//! `-div(sigma grad u) = 1` on the unit square with zero Dirichlet data, where
//! `sigma = 1 + rho_i` on disc `D_i` and `1` elsewhere. Discretizing with
//! face-centred five-point finite differences gives
//! `(K_0 ⊗ I ⊗ ... ⊗ I + sum_i K_{D_i} ⊗ ... ⊗ diag(rho) ⊗ ...) u = f`,
//! with one tensor mode per parameter holding its sampled values.

use nalgebra::DVector;

use crate::error::{TtError, TtResult};
use crate::linalg::Mat;
use crate::tensor::TTTensor;

use super::kronecker::{KroneckerSumOperator, ModeFactor};

pub const MIN_GRID: usize = 8;

/// A disc-shaped subdomain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disc {
    pub center: (f64, f64),
    pub radius: f64,
}

impl Disc {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (dx, dy) = (x - self.center.0, y - self.center.1);
        dx * dx + dy * dy <= self.radius * self.radius
    }
}

/// `count` disjoint discs centred on a `ceil(sqrt(count))` square grid.
pub fn disc_layout(count: usize) -> Vec<Disc> {
    let m = (count as f64).sqrt().ceil().max(1.0) as usize;
    let radius = 0.35 / m as f64;
    (0..count)
        .map(|i| Disc {
            center: (
                ((i % m) as f64 + 0.5) / m as f64,
                ((i / m) as f64 + 0.5) / m as f64,
            ),
            radius,
        })
        .collect()
}

/// Assembled problem.
#[derive(Debug, Clone)]
pub struct CookieProblem {
    pub operator: KroneckerSumOperator,
    pub rhs: TTTensor,
    pub discs: Vec<Disc>,
    /// Parameter samples shared by every parameter mode.
    pub samples: Vec<f64>,
    /// Interior nodes per side.
    pub grid: usize,
}

/// Five-point stiffness matrix of `-div(c grad .)` on a `grid x grid` interior
/// mesh; `c` is evaluated at face midpoints.
pub fn diffusion_matrix(grid: usize, coefficient: impl Fn(f64, f64) -> f64) -> Mat {
    let h = 1.0 / (grid as f64 + 1.0);
    let scale = 1.0 / (h * h);
    let size = grid * grid;
    let mut k = Mat::zeros(size, size);
    let node = |i: usize, j: usize| i + grid * j;
    for j in 0..grid {
        for i in 0..grid {
            let (x, y) = ((i as f64 + 1.0) * h, (j as f64 + 1.0) * h);
            let p = node(i, j);
            let faces: [(f64, f64, Option<usize>); 4] = [
                (x - 0.5 * h, y, (i > 0).then(|| node(i - 1, j))),
                (x + 0.5 * h, y, (i + 1 < grid).then(|| node(i + 1, j))),
                (x, y - 0.5 * h, (j > 0).then(|| node(i, j - 1))),
                (x, y + 0.5 * h, (j + 1 < grid).then(|| node(i, j + 1))),
            ];
            for (fx, fy, nb) in faces {
                let c = coefficient(fx, fy) * scale;
                k[(p, p)] += c;
                if let Some(q) = nb {
                    k[(p, q)] -= c;
                }
            }
        }
    }
    k
}

fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    (0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect()
}

/// Builds the operator and the constant right-hand side.
///
/// `d_params` is the number of Kronecker terms and the tensor order: mode 1
/// is the spatial grid (`grid^2` unknowns) and modes `2..=d_params` carry the
/// `n_samples` values of the coefficients on discs `1..d_params`. With
/// `d_params = 1` the system is the plain Poisson problem, stored with a
/// trailing singleton mode.
pub fn build_cookie_problem(
    d_params: usize,
    grid: usize,
    n_samples: usize,
    rho_range: (f64, f64),
) -> TtResult<CookieProblem> {
    if grid < MIN_GRID {
        return Err(TtError::InvalidGrid(format!(
            "grid size must be >= {MIN_GRID}, got {grid}"
        )));
    }
    if d_params == 0 || n_samples == 0 {
        return Err(TtError::InvalidConfig(
            "need d_params >= 1 and n_samples >= 1".into(),
        ));
    }
    let (lo, hi) = rho_range;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi && lo > -1.0) {
        return Err(TtError::InvalidConfig(format!(
            "parameter range must be finite, ordered and keep the coefficient positive, got [{lo}, {hi}]"
        )));
    }
    let discs = disc_layout(d_params - 1);
    let samples = linspace(lo, hi, n_samples);
    let spatial = grid * grid;
    let param_modes = d_params.max(2) - 1;
    let param_size = if d_params == 1 { 1 } else { n_samples };
    let mode_size = |k: usize| if k == 0 { spatial } else { param_size };

    let identity_term = |k: usize| ModeFactor::Identity(mode_size(k));
    let mut terms = Vec::with_capacity(d_params);
    let mut base = vec![ModeFactor::Dense(diffusion_matrix(grid, |_, _| 1.0))];
    base.extend((1..=param_modes).map(identity_term));
    terms.push(base);
    for (i, disc) in discs.iter().enumerate() {
        let mut term = vec![ModeFactor::Dense(diffusion_matrix(grid, |x, y| {
            if disc.contains(x, y) {
                1.0
            } else {
                0.0
            }
        }))];
        for k in 1..=param_modes {
            term.push(if k == i + 1 {
                ModeFactor::Diagonal(samples.clone())
            } else {
                identity_term(k)
            });
        }
        terms.push(term);
    }
    let operator = KroneckerSumOperator::new(terms)?;
    let vectors: Vec<Vec<f64>> = (0..=param_modes).map(|k| vec![1.0; mode_size(k)]).collect();
    let rhs = TTTensor::rank_one(&vectors)?;
    Ok(CookieProblem {
        operator,
        rhs,
        discs,
        samples,
        grid,
    })
}

impl CookieProblem {
    /// Spatial operator with every coefficient at the mean parameter value.
    pub fn mean_spatial_operator(&self) -> Mat {
        let mean = self.samples.iter().sum::<f64>() / self.samples.len() as f64;
        let mut a = Mat::zeros(self.grid * self.grid, self.grid * self.grid);
        for (i, term) in self.operator.terms().iter().enumerate() {
            let weight = if i == 0 { 1.0 } else { mean };
            a += term[0].to_dense() * weight;
        }
        a
    }

    /// `P^{-1}` for the mean-parameter preconditioner `P = A(mean rho) ⊗ I ⊗ ... ⊗ I`,
    /// as a single-term operator (rank preserving).
    pub fn mean_preconditioner(&self) -> TtResult<KroneckerSumOperator> {
        let a = self.mean_spatial_operator();
        let size = a.nrows();
        let chol = a.cholesky().ok_or_else(|| {
            TtError::InvalidConfig("mean operator is not positive definite".into())
        })?;
        let inv = chol.solve(&Mat::identity(size, size));
        let mut term = vec![ModeFactor::Dense(inv)];
        term.extend(
            self.rhs.mode_sizes()[1..]
                .iter()
                .map(|&n| ModeFactor::Identity(n)),
        );
        KroneckerSumOperator::new(vec![term])
    }

    /// Spatial operator `K_0 + sum_i rho_i K_{D_i}` for one value per parameter.
    pub fn spatial_operator(&self, rho: &[f64]) -> Mat {
        let mut a = self.operator.terms()[0][0].to_dense();
        for (term, r) in self.operator.terms()[1..].iter().zip(rho) {
            a += term[0].to_dense() * *r;
        }
        a
    }
}

/// Solution of the single-parameter-sample system, used as a dense oracle.
pub fn solve_sample(problem: &CookieProblem, rho: &[f64]) -> Option<DVector<f64>> {
    let a = problem.spatial_operator(rho);
    let n = a.nrows();
    a.cholesky()
        .map(|c| c.solve(&DVector::from_element(n, 1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_grid() {
        assert!(matches!(
            build_cookie_problem(3, 7, 4, (1.0, 10.0)),
            Err(TtError::InvalidGrid(_))
        ));
    }

    #[test]
    fn laplacian_rows() {
        let k = diffusion_matrix(8, |_, _| 1.0);
        let h2 = (1.0f64 / 9.0).powi(2);
        // interior node: 4 on the diagonal, -1 to each neighbour (times 1/h^2)
        let p = 3 + 8 * 3;
        assert!((k[(p, p)] * h2 - 4.0).abs() < 1e-12);
        assert!((k[(p, p + 1)] * h2 + 1.0).abs() < 1e-12);
        assert!((k.row(p).sum()).abs() < 1e-9);
        assert!((&k - k.transpose()).norm() == 0.0);
    }

    #[test]
    fn degenerate_problem_is_poisson() {
        let p = build_cookie_problem(1, 8, 5, (1.0, 10.0)).unwrap();
        assert_eq!(p.operator.num_terms(), 1);
        assert_eq!(p.rhs.mode_sizes(), vec![64, 1]);
    }

    #[test]
    fn structure_of_parametric_problem() {
        let p = build_cookie_problem(4, 8, 3, (1.0, 10.0)).unwrap();
        assert_eq!(p.operator.num_terms(), 4);
        assert_eq!(p.operator.mode_sizes(), vec![64, 3, 3, 3]);
        assert_eq!(p.samples, vec![1.0, 5.5, 10.0]);
        assert!(matches!(p.operator.terms()[2][2], ModeFactor::Diagonal(_)));
        assert!(matches!(p.operator.terms()[2][1], ModeFactor::Identity(3)));
        // discs are disjoint and inside the square
        for (i, a) in p.discs.iter().enumerate() {
            for b in &p.discs[i + 1..] {
                let dist =
                    ((a.center.0 - b.center.0).powi(2) + (a.center.1 - b.center.1).powi(2)).sqrt();
                assert!(dist > a.radius + b.radius);
            }
        }
        let zero = TTTensor::zeros(&[64, 3, 3, 3]).unwrap();
        let az = p.operator.apply(&zero).unwrap().formal_sum();
        assert_eq!(az.to_dense().unwrap().norm(), 0.0);
    }
}
