//! Solver for the sphere-precoding cone program
//!
//! ```text
//! minimize    ‖P f − C·1‖₂
//! subject to  ‖B_l f‖₂ ≤ ε_l   for every interference block l
//!             ‖f‖₂ ≤ p
//! ```
//!
//! with complex `f ∈ ℂᴺ`. Only the span of the rows of `P` and of every `B_l`
//! affects the objective and the interference constraints, so the solver
//! restricts `f` to that subspace (any orthogonal component only spends
//! power). Blocks with a zero cap become linear equality constraints and are
//! eliminated by a null-space parametrization. The remaining problem is lifted
//! to real coordinates (`z ↦ [Re z; Im z]`, `M ↦ [[Re M, −Im M], [Im M, Re M]]`)
//! and solved with a log-barrier interior-point method on the squared
//! objective, which has the same minimizer.

use nalgebra::{Cholesky, DMatrix, DVector};
use num_complex::Complex64;

use super::{check_finite, orthonormal_basis, CMatrix, CVector};
use crate::{Error, Result};

type RMatrix = DMatrix<f64>;
type RVector = DVector<f64>;

/// Interference constraint `‖rows · f‖₂ ≤ cap`.
#[derive(Clone, Debug)]
pub struct InterferenceBlock {
    pub rows: CMatrix,
    pub cap: f64,
}

#[derive(Clone, Debug)]
pub struct ConeProblem {
    /// `r × N`, typically `Uᴴ` of the target user's basis.
    pub objective_basis: CMatrix,
    /// Normalization constant C.
    pub target_level: f64,
    pub interference_blocks: Vec<InterferenceBlock>,
    pub power_cap: f64,
}

impl ConeProblem {
    pub fn dimension(&self) -> usize {
        self.objective_basis.ncols()
    }

    /// Objective value `‖P f − C·1‖₂` at an arbitrary point.
    pub fn objective(&self, f: &CVector) -> f64 {
        let proj = &self.objective_basis * f;
        proj.iter()
            .map(|z| (z - self.target_level).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Largest violation over all constraints (≤ 0 when feasible).
    pub fn max_violation(&self, f: &CVector) -> f64 {
        let mut worst = f.norm() - self.power_cap;
        for block in &self.interference_blocks {
            worst = worst.max((&block.rows * f).norm() - block.cap);
        }
        worst
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConeStatus {
    Optimal,
    MaxIterations,
    Infeasible,
}

impl std::fmt::Display for ConeStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ConeStatus::Optimal => "optimal",
            ConeStatus::MaxIterations => "max-iterations",
            ConeStatus::Infeasible => "infeasible",
        })
    }
}

#[derive(Clone, Debug)]
pub struct ConeSolution {
    pub vector: CVector,
    pub objective_value: f64,
    pub status: ConeStatus,
    /// Newton steps taken.
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct SolverTolerances {
    /// Barrier gap target on the squared objective, relative to
    /// `max(1, C²·r)`.
    pub gap: f64,
    /// Newton decrement (λ²/2) at which a centering step is accepted.
    pub newton: f64,
    /// Cap on total Newton steps.
    pub max_iterations: usize,
    /// Barrier parameter growth per outer iteration.
    pub barrier_growth: f64,
}

impl Default for SolverTolerances {
    fn default() -> Self {
        Self {
            gap: 1e-12,
            newton: 1e-12,
            max_iterations: 50_000,
            barrier_growth: 10.0,
        }
    }
}

/// Rank threshold for the subspace reductions.
const RANK_TOL: f64 = 1e-12;

pub fn cone_solve(problem: &ConeProblem, tol: &SolverTolerances) -> Result<ConeSolution> {
    let n = problem.dimension();
    validate(problem)?;

    let zero = || ConeSolution {
        vector: CVector::zeros(n),
        objective_value: problem.objective(&CVector::zeros(n)),
        status: ConeStatus::Optimal,
        iterations: 0,
    };

    let malformed = !(problem.power_cap > 0.0)
        || !(problem.target_level >= 0.0)
        || problem.interference_blocks.iter().any(|b| !(b.cap >= 0.0));
    if malformed {
        return Ok(ConeSolution {
            status: ConeStatus::Infeasible,
            ..zero()
        });
    }
    if problem.target_level == 0.0 || problem.objective_basis.nrows() == 0 {
        return Ok(zero());
    }

    // Subspace spanned by everything the constraints and objective can see.
    let mut generators = vec![problem.objective_basis.adjoint()];
    generators.extend(problem.interference_blocks.iter().map(|b| b.rows.adjoint()));
    let span = orthonormal_basis(&hcat(&generators, n), RANK_TOL);

    // Eliminate equality (zero-cap) blocks inside that subspace.
    let equality: Vec<CMatrix> = problem
        .interference_blocks
        .iter()
        .filter(|b| b.cap == 0.0)
        .map(|b| (&b.rows * &span).adjoint())
        .collect();
    let span = if equality.is_empty() {
        span
    } else {
        let m = span.ncols();
        let fixed = orthonormal_basis(&hcat(&equality, m), RANK_TOL);
        let projector = CMatrix::identity(m, m) - &fixed * fixed.adjoint();
        let free = orthonormal_basis(&projector, 1e-9);
        &span * free
    };
    if span.ncols() == 0 {
        return Ok(zero());
    }

    let a = &problem.objective_basis * &span;
    let target = CVector::from_element(a.nrows(), Complex64::new(problem.target_level, 0.0));
    let blocks: Vec<(RMatrix, f64)> = problem
        .interference_blocks
        .iter()
        .filter(|b| b.cap > 0.0)
        .map(|b| {
            let lifted = lift_matrix(&(&b.rows * &span));
            (lifted.transpose() * lifted, b.cap * b.cap)
        })
        .collect();

    let lifted_a = lift_matrix(&a);
    let lifted_c = lift_vector(&target);
    let barrier = Barrier {
        quad: lifted_a.transpose() * &lifted_a,
        lin: lifted_a.transpose() * &lifted_c,
        constant: lifted_c.norm_squared(),
        blocks,
        power: problem.power_cap * problem.power_cap,
    };

    let (x, iterations, converged) = barrier.solve(tol);
    let mut vector = &span * unlift_vector(&x);
    let norm = vector.norm();
    if norm > problem.power_cap {
        vector.scale_mut(problem.power_cap / norm);
    }
    Ok(ConeSolution {
        objective_value: problem.objective(&vector),
        vector,
        status: if converged {
            ConeStatus::Optimal
        } else {
            ConeStatus::MaxIterations
        },
        iterations,
    })
}

fn validate(problem: &ConeProblem) -> Result<()> {
    let n = problem.dimension();
    if problem.objective_basis.nrows() > n {
        return Err(Error::DimensionMismatch {
            context: "cone objective basis rows (must not exceed N)",
            expected: n,
            found: problem.objective_basis.nrows(),
        });
    }
    check_finite(&problem.objective_basis, "cone objective basis")?;
    for block in &problem.interference_blocks {
        if block.rows.ncols() != n {
            return Err(Error::DimensionMismatch {
                context: "cone interference block columns",
                expected: n,
                found: block.rows.ncols(),
            });
        }
        if block.rows.nrows() > n {
            return Err(Error::DimensionMismatch {
                context: "cone interference block rows (must not exceed N)",
                expected: n,
                found: block.rows.nrows(),
            });
        }
        check_finite(&block.rows, "cone interference block")?;
        if block.cap.is_nan() || block.cap.is_infinite() {
            return Err(Error::NonFinite("cone interference cap"));
        }
    }
    if !problem.target_level.is_finite() {
        return Err(Error::NonFinite("cone target level"));
    }
    if !problem.power_cap.is_finite() {
        return Err(Error::NonFinite("cone power cap"));
    }
    Ok(())
}

fn hcat(parts: &[CMatrix], rows: usize) -> CMatrix {
    let cols: usize = parts.iter().map(|p| p.ncols()).sum();
    let mut out = CMatrix::zeros(rows, cols);
    let mut at = 0;
    for p in parts {
        out.view_mut((0, at), (rows, p.ncols())).copy_from(p);
        at += p.ncols();
    }
    out
}

fn lift_matrix(m: &CMatrix) -> RMatrix {
    let (r, c) = m.shape();
    RMatrix::from_fn(2 * r, 2 * c, |i, j| {
        let z = m[(i % r, j % c)];
        match (i < r, j < c) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

fn lift_vector(v: &CVector) -> RVector {
    let n = v.len();
    RVector::from_fn(2 * n, |i, _| if i < n { v[i].re } else { v[i - n].im })
}

fn unlift_vector(x: &RVector) -> CVector {
    let n = x.len() / 2;
    CVector::from_fn(n, |i, _| Complex64::new(x[i], x[i + n]))
}

/// Real-lifted problem: minimize `xᵀQx − 2bᵀx + c` subject to
/// `xᵀG_l x ≤ e_l` and `xᵀx ≤ p`.
struct Barrier {
    quad: RMatrix,
    lin: RVector,
    constant: f64,
    blocks: Vec<(RMatrix, f64)>,
    power: f64,
}

impl Barrier {
    fn constraint_count(&self) -> f64 {
        (self.blocks.len() + 1) as f64
    }

    fn objective(&self, x: &RVector) -> f64 {
        (x.dot(&(&self.quad * x)) - 2.0 * self.lin.dot(x) + self.constant).max(0.0)
    }

    /// Constraint slacks, or `None` outside the strict interior.
    fn slacks(&self, x: &RVector) -> Option<Vec<f64>> {
        let mut out = Vec::with_capacity(self.blocks.len() + 1);
        for (g, cap) in &self.blocks {
            let s = cap - x.dot(&(g * x));
            if !(s > 0.0) {
                return None;
            }
            out.push(s);
        }
        let s = self.power - x.norm_squared();
        if !(s > 0.0) {
            return None;
        }
        out.push(s);
        Some(out)
    }

    fn value(&self, t: f64, x: &RVector) -> Option<f64> {
        let slacks = self.slacks(x)?;
        Some(t * self.objective(x) - slacks.iter().map(|s| s.ln()).sum::<f64>())
    }

    /// Returns the final iterate, the Newton step count and whether the
    /// barrier gap target was reached.
    fn solve(&self, tol: &SolverTolerances) -> (RVector, usize, bool) {
        let dim = self.lin.len();
        let mut x = RVector::zeros(dim);
        let scale = self.constant.max(1.0);
        let gap_target = tol.gap * scale;
        let mut t = self.constraint_count() / scale;
        let mut steps = 0usize;

        loop {
            loop {
                if steps >= tol.max_iterations {
                    return (x, steps, false);
                }
                let slacks = self.slacks(&x).expect("iterate stays strictly feasible");
                let (grad, hess) = self.derivatives(t, &x, &slacks);
                let step = match Cholesky::new(hess.clone()) {
                    Some(ch) => ch.solve(&(-&grad)),
                    None => {
                        // Regularize a numerically indefinite Hessian.
                        let shift = 1e-12 * hess.diagonal().amax().max(1.0);
                        let shifted = hess + RMatrix::identity(dim, dim) * shift;
                        match Cholesky::new(shifted) {
                            Some(ch) => ch.solve(&(-&grad)),
                            None => return (x, steps, false),
                        }
                    }
                };
                steps += 1;
                let decrement = -grad.dot(&step);
                if !(decrement / 2.0 > tol.newton) {
                    break;
                }

                let current = self.value(t, &x).expect("feasible");
                // Steps below this length no longer change the iterate in
                // floating point; centering has hit its precision floor.
                let floor = 1e-15 * x.norm().max(1.0) / step.norm().max(f64::MIN_POSITIVE);
                let mut alpha = 1.0;
                let mut moved = false;
                while alpha > floor {
                    let candidate = &x + &step * alpha;
                    if let Some(v) = self.value(t, &candidate) {
                        if v <= current - 0.01 * alpha * decrement {
                            x = candidate;
                            moved = true;
                            break;
                        }
                    }
                    alpha *= 0.5;
                }
                if !moved {
                    break;
                }
            }
            if self.constraint_count() / t <= gap_target {
                return (x, steps, true);
            }
            t *= tol.barrier_growth;
        }
    }

    fn derivatives(&self, t: f64, x: &RVector, slacks: &[f64]) -> (RVector, RMatrix) {
        let qx = &self.quad * x;
        let mut grad = (&qx - &self.lin) * (2.0 * t);
        let mut hess = &self.quad * (2.0 * t);
        for ((g, _), &s) in self.blocks.iter().zip(slacks) {
            let gx = g * x;
            grad.axpy(2.0 / s, &gx, 1.0);
            hess += g * (2.0 / s);
            hess.ger(4.0 / (s * s), &gx, &gx, 1.0);
        }
        let s = slacks[slacks.len() - 1];
        grad.axpy(2.0 / s, x, 1.0);
        for i in 0..x.len() {
            hess[(i, i)] += 2.0 / s;
        }
        hess.ger(4.0 / (s * s), x, x, 1.0);
        (grad, hess)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::testutil::*;

    fn orthonormal_rows(seed: u64, r: usize, n: usize) -> CMatrix {
        let mut g = rng(seed);
        orthonormal_basis(&random_matrix(&mut g, n, r), 1e-12).adjoint()
    }

    fn problem(p: CMatrix, blocks: Vec<(CMatrix, f64)>) -> ConeProblem {
        ConeProblem {
            objective_basis: p,
            target_level: 1.0,
            interference_blocks: blocks
                .into_iter()
                .map(|(rows, cap)| InterferenceBlock { rows, cap })
                .collect(),
            power_cap: 1.0,
        }
    }

    #[test]
    fn rank_one_without_interference_hits_target() {
        let p = orthonormal_rows(1, 1, 6);
        let sol = cone_solve(&problem(p.clone(), vec![]), &Default::default()).unwrap();
        assert_eq!(sol.status, ConeStatus::Optimal);
        assert!(sol.objective_value < 1e-5);
        let u1 = p.adjoint().column(0).into_owned();
        assert!((&sol.vector - u1).norm() < 1e-5);
    }

    #[test]
    fn rank_four_rescales_onto_ball() {
        let p = orthonormal_rows(2, 4, 10);
        let sol = cone_solve(&problem(p.clone(), vec![]), &Default::default()).unwrap();
        assert!((sol.objective_value - 1.0).abs() < 1e-5);
        let coeffs = &p * &sol.vector;
        for c in coeffs.iter() {
            assert!((c - Complex64::new(0.5, 0.0)).norm() < 1e-5);
        }
    }

    #[test]
    fn identical_interference_block_caps_coefficient() {
        let p = orthonormal_rows(3, 1, 5);
        let sol = cone_solve(&problem(p.clone(), vec![(p, 1e-3)]), &Default::default()).unwrap();
        assert!((sol.objective_value - 0.999).abs() < 1e-5, "{}", sol.objective_value);
        // Dense grid over the real scalar coefficient a ∈ [0, ε]: |a − 1| is
        // minimized at a = ε.
        let grid_best = (0..=1000)
            .map(|i| (1.0 - 1e-3 * i as f64 / 1000.0).abs())
            .fold(f64::INFINITY, f64::min);
        assert!((sol.objective_value - grid_best).abs() < 1e-5);
    }

    #[test]
    fn zero_cap_block_is_an_equality() {
        let p = orthonormal_rows(4, 2, 6);
        let b = orthonormal_rows(5, 1, 6);
        let sol = cone_solve(&problem(p, vec![(b.clone(), 0.0)]), &Default::default()).unwrap();
        assert_eq!(sol.status, ConeStatus::Optimal);
        assert!((&b * &sol.vector).norm() < 1e-12);
    }

    #[test]
    fn malformed_inputs() {
        let p = orthonormal_rows(6, 2, 4);
        let mut pr = problem(p.clone(), vec![(orthonormal_rows(7, 1, 5), 1e-3)]);
        assert!(matches!(
            cone_solve(&pr, &Default::default()),
            Err(Error::DimensionMismatch { .. })
        ));
        pr.interference_blocks.clear();
        pr.objective_basis[(0, 0)] = Complex64::new(f64::NAN, 0.0);
        assert!(matches!(cone_solve(&pr, &Default::default()), Err(Error::NonFinite(_))));
        let mut pr = problem(p, vec![]);
        pr.power_cap = 0.0;
        assert_eq!(
            cone_solve(&pr, &Default::default()).unwrap().status,
            ConeStatus::Infeasible
        );
    }

    #[test]
    fn zero_target_gives_zero_vector() {
        let mut pr = problem(orthonormal_rows(8, 2, 4), vec![]);
        pr.target_level = 0.0;
        let sol = cone_solve(&pr, &Default::default()).unwrap();
        assert_eq!(sol.vector.norm(), 0.0);
        assert_eq!(sol.objective_value, 0.0);
    }

    #[test]
    fn deterministic() {
        let p = orthonormal_rows(9, 3, 12);
        let blocks = vec![(orthonormal_rows(10, 2, 12), 1e-3), (orthonormal_rows(11, 4, 12), 1e-2)];
        let pr = problem(p, blocks);
        let a = cone_solve(&pr, &Default::default()).unwrap();
        let b = cone_solve(&pr, &Default::default()).unwrap();
        assert_eq!(a.vector, b.vector);
        assert_eq!(a.objective_value.to_bits(), b.objective_value.to_bits());
    }

    #[test]
    fn no_feasible_perturbation_improves() {
        let mut g = rng(12);
        for case in 0..10u64 {
            let n = 8;
            let p = orthonormal_rows(100 + case, 2, n);
            let blocks = vec![
                (orthonormal_rows(200 + case, 2, n), 1e-3),
                (orthonormal_rows(300 + case, 1, n), 1e-2),
            ];
            let pr = problem(p, blocks);
            let sol = cone_solve(&pr, &Default::default()).unwrap();
            assert!(pr.max_violation(&sol.vector) <= 1e-9);
            let tol_gap = 1e-4 * (2f64).sqrt().max(1.0);
            for _ in 0..200 {
                let d = random_matrix(&mut g, n, 1).column(0).into_owned();
                let cand = &sol.vector + d.unscale(d.norm()) * Complex64::new(1e-3, 0.0);
                if pr.max_violation(&cand) <= 0.0 {
                    assert!(pr.objective(&cand) >= sol.objective_value - tol_gap);
                }
            }
        }
    }

    #[test]
    fn larger_cap_never_hurts() {
        for case in 0..15u64 {
            let n = 10;
            let p = orthonormal_rows(400 + case, 3, n);
            let b1 = orthonormal_rows(500 + case, 3, n);
            let b2 = orthonormal_rows(600 + case, 2, n);
            let mut last = f64::INFINITY;
            for eps in [1e-4, 1e-3, 1e-2] {
                let pr = problem(p.clone(), vec![(b1.clone(), eps), (b2.clone(), eps)]);
                let sol = cone_solve(&pr, &Default::default()).unwrap();
                assert!(sol.objective_value <= last + 1e-7);
                last = sol.objective_value;
            }
        }
    }
}
