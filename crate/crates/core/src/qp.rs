//! Dense strictly convex box-constrained quadratic programming.
//!
//! Minimizes `2 c^T x + x^T H x` subject to `lb <= x <= ub` with a primal
//! active-set method. The problem is diagonally equilibrated internally so
//! the reported KKT residuals are meaningful for badly scaled instances;
//! pivoting is by lowest index, making the solver fully deterministic.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct QpProblem {
    /// Symmetric positive definite Hessian (of the form `x^T H x`).
    pub h: DMatrix<f64>,
    /// Linear term (of the form `2 c^T x`).
    pub c: DVector<f64>,
    pub lb: DVector<f64>,
    pub ub: DVector<f64>,
}

impl QpProblem {
    pub fn validate(&self) -> Result<()> {
        let n = self.c.len();
        if self.h.nrows() != n || self.h.ncols() != n || self.lb.len() != n || self.ub.len() != n {
            return Err(Error::invalid("QpProblem: dimension mismatch"));
        }
        if (&self.h - self.h.transpose()).amax() > 1e-9 * self.h.amax().max(1.0) {
            return Err(Error::invalid("QpProblem: H must be symmetric"));
        }
        for i in 0..n {
            if self.lb[i] > self.ub[i] {
                return Err(Error::invalid(format!(
                    "QpProblem: lb[{i}] > ub[{i}]"
                )));
            }
        }
        Ok(())
    }

    /// Objective `2 c^T x + x^T H x`.
    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        2.0 * self.c.dot(x) + (x.transpose() * &self.h * x)[(0, 0)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BoundState {
    Free,
    Lower,
    Upper,
    Fixed,
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub x: DVector<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub active_lower: Vec<usize>,
    pub active_upper: Vec<usize>,
    /// Largest stationarity/dual-feasibility violation of the equilibrated
    /// problem.
    pub stationarity: f64,
    /// Largest bound violation (equilibrated units); zero by construction.
    pub primal_infeasibility: f64,
    /// Largest `|multiplier * slack|` over the active set; zero by
    /// construction since active variables sit exactly on their bounds.
    pub complementarity: f64,
}

/// Solve the box QP. `warm_start` seeds the initial point (clamped into the
/// box); pass `None` to start from the clamped origin.
pub fn solve_box_qp(
    prob: &QpProblem,
    warm_start: Option<&DVector<f64>>,
    tol: f64,
    max_iter: usize,
) -> Result<QpSolution> {
    prob.validate()?;
    let n = prob.c.len();
    if n == 0 {
        return Ok(QpSolution {
            x: DVector::zeros(0),
            objective: 0.0,
            iterations: 0,
            active_lower: vec![],
            active_upper: vec![],
            stationarity: 0.0,
            primal_infeasibility: 0.0,
            complementarity: 0.0,
        });
    }

    // Symmetric diagonal (Jacobi) equilibration: x = D xs with
    // D = diag(1/sqrt(H_ii)).
    let mut d = DVector::zeros(n);
    for i in 0..n {
        let hii = prob.h[(i, i)];
        if !(hii > 0.0) {
            return Err(Error::invalid("solve_box_qp: H diagonal must be positive"));
        }
        d[i] = 1.0 / hii.sqrt();
    }
    let hs = DMatrix::from_fn(n, n, |i, j| prob.h[(i, j)] * d[i] * d[j]);
    let cs = DVector::from_fn(n, |i, _| prob.c[i] * d[i]);
    let lbs = DVector::from_fn(n, |i, _| prob.lb[i] / d[i]);
    let ubs = DVector::from_fn(n, |i, _| prob.ub[i] / d[i]);

    let mut x = DVector::zeros(n);
    if let Some(w) = warm_start {
        if w.len() != n {
            return Err(Error::invalid("solve_box_qp: warm start dimension mismatch"));
        }
        for i in 0..n {
            x[i] = w[i] / d[i];
        }
    }
    let mut state = vec![BoundState::Free; n];
    for i in 0..n {
        if ubs[i] - lbs[i] <= 0.0 {
            state[i] = BoundState::Fixed;
            x[i] = lbs[i];
        } else if x[i] <= lbs[i] {
            state[i] = BoundState::Lower;
            x[i] = lbs[i];
        } else if x[i] >= ubs[i] {
            state[i] = BoundState::Upper;
            x[i] = ubs[i];
        }
    }

    let mut iterations = 0usize;
    loop {
        iterations += 1;
        if iterations > max_iter {
            return Err(Error::QpMaxIter(max_iter));
        }

        let free: Vec<usize> = (0..n).filter(|&i| state[i] == BoundState::Free).collect();

        // Equality-constrained candidate on the free set.
        let mut candidate = x.clone();
        if !free.is_empty() {
            let nf = free.len();
            let hff = DMatrix::from_fn(nf, nf, |a, b| hs[(free[a], free[b])]);
            let mut rhs = DVector::from_fn(nf, |a, _| -cs[free[a]]);
            for a in 0..nf {
                for j in 0..n {
                    if state[j] != BoundState::Free {
                        rhs[a] -= hs[(free[a], j)] * x[j];
                    }
                }
            }
            let chol = hff
                .clone()
                .cholesky()
                .ok_or(Error::Linalg("solve_box_qp: free-set Hessian not positive definite"))?;
            let mut xf = chol.solve(&rhs);
            // One iterative refinement pass keeps the stationarity residual
            // near machine level on ill-conditioned MPC instances.
            let resid = &rhs - &hff * &xf;
            xf += chol.solve(&resid);
            for (a, &i) in free.iter().enumerate() {
                candidate[i] = xf[a];
            }
        }

        // Feasibility of the candidate along the move direction.
        let mut alpha = 1.0_f64;
        let mut blocker: Option<(usize, BoundState)> = None;
        for &i in &free {
            let step = candidate[i] - x[i];
            if step > 0.0 && candidate[i] > ubs[i] {
                let a = (ubs[i] - x[i]) / step;
                if a < alpha - 1e-15 {
                    alpha = a.max(0.0);
                    blocker = Some((i, BoundState::Upper));
                }
            } else if step < 0.0 && candidate[i] < lbs[i] {
                let a = (lbs[i] - x[i]) / step;
                if a < alpha - 1e-15 {
                    alpha = a.max(0.0);
                    blocker = Some((i, BoundState::Lower));
                }
            }
        }

        match blocker {
            Some((ib, side)) => {
                for &i in &free {
                    x[i] += alpha * (candidate[i] - x[i]);
                }
                x[ib] = if side == BoundState::Upper { ubs[ib] } else { lbs[ib] };
                state[ib] = side;
            }
            None => {
                x = candidate;
                // Multiplier check: gradient of the equilibrated objective.
                let grad = 2.0 * (&hs * &x + &cs);
                let mut release: Option<usize> = None;
                for i in 0..n {
                    let viol = match state[i] {
                        BoundState::Lower => -grad[i],
                        BoundState::Upper => grad[i],
                        _ => 0.0,
                    };
                    if viol > tol {
                        release = Some(i);
                        break; // lowest index
                    }
                }
                match release {
                    Some(i) => state[i] = BoundState::Free,
                    None => {
                        let mut stationarity = 0.0_f64;
                        for i in 0..n {
                            let v = match state[i] {
                                BoundState::Free => grad[i].abs(),
                                BoundState::Lower => (-grad[i]).max(0.0),
                                BoundState::Upper => grad[i].max(0.0),
                                BoundState::Fixed => 0.0,
                            };
                            stationarity = stationarity.max(v);
                        }
                        let mut primal = 0.0_f64;
                        let mut comp = 0.0_f64;
                        let mut active_lower = Vec::new();
                        let mut active_upper = Vec::new();
                        for i in 0..n {
                            primal = primal.max(lbs[i] - x[i]).max(x[i] - ubs[i]);
                            match state[i] {
                                BoundState::Lower | BoundState::Fixed => {
                                    active_lower.push(i);
                                    comp = comp.max((grad[i] * (x[i] - lbs[i])).abs());
                                }
                                BoundState::Upper => {
                                    active_upper.push(i);
                                    comp = comp.max((grad[i] * (ubs[i] - x[i])).abs());
                                }
                                BoundState::Free => {}
                            }
                        }
                        let x_out = DVector::from_fn(n, |i, _| x[i] * d[i]);
                        let objective = prob.objective(&x_out);
                        return Ok(QpSolution {
                            x: x_out,
                            objective,
                            iterations,
                            active_lower,
                            active_upper,
                            stationarity,
                            primal_infeasibility: primal.max(0.0),
                            complementarity: comp,
                        });
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn simple_problem() -> QpProblem {
        QpProblem {
            h: DMatrix::identity(2, 2) * 2.0,
            c: DVector::from_vec(vec![-1.0, -1.0]),
            lb: DVector::from_element(2, -10.0),
            ub: DVector::from_element(2, 10.0),
        }
    }

    #[test]
    fn unconstrained_interior_solution() {
        let p = simple_problem();
        let sol = solve_box_qp(&p, None, 1e-10, 100).unwrap();
        assert_abs_diff_eq!(sol.x[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.x[1], 0.5, epsilon = 1e-12);
        assert!(sol.stationarity < 1e-10);
        assert_eq!(sol.active_lower.len() + sol.active_upper.len(), 0);
    }

    #[test]
    fn clamped_against_upper_bound() {
        let mut p = simple_problem();
        p.ub[0] = 0.2;
        let sol = solve_box_qp(&p, None, 1e-10, 100).unwrap();
        // H is diagonal, so the clamped separable solution is exact.
        assert_abs_diff_eq!(sol.x[0], 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.x[1], 0.5, epsilon = 1e-12);
        assert_eq!(sol.active_upper, vec![0]);
    }

    fn splitmix(state: &mut u64) -> f64 {
        *state = state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = *state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        ((z ^ (z >> 31)) >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn random_spd(n: usize, state: &mut u64) -> DMatrix<f64> {
        let a = DMatrix::from_fn(n, n, |_, _| splitmix(state) * 2.0 - 1.0);
        &a * a.transpose() + DMatrix::identity(n, n) * (0.3 + splitmix(state))
    }

    /// Exhaustive oracle: enumerate every lower/free/upper assignment,
    /// solve the free block, keep the best feasible candidate.
    fn enumerate_oracle(p: &QpProblem) -> (DVector<f64>, f64) {
        let n = p.c.len();
        let mut best: Option<(DVector<f64>, f64)> = None;
        let total = 3usize.pow(n as u32);
        for code in 0..total {
            let mut c = code;
            let mut assign = vec![0u8; n];
            for a in assign.iter_mut() {
                *a = (c % 3) as u8;
                c /= 3;
            }
            let free: Vec<usize> = (0..n).filter(|&i| assign[i] == 0).collect();
            let mut x = DVector::zeros(n);
            for i in 0..n {
                x[i] = match assign[i] {
                    1 => p.lb[i],
                    2 => p.ub[i],
                    _ => 0.0,
                };
            }
            if !free.is_empty() {
                let nf = free.len();
                let hff = DMatrix::from_fn(nf, nf, |a, b| p.h[(free[a], free[b])]);
                let mut rhs = DVector::from_fn(nf, |a, _| -p.c[free[a]]);
                for a in 0..nf {
                    for j in 0..n {
                        if assign[j] != 0 {
                            rhs[a] -= p.h[(free[a], j)] * x[j];
                        }
                    }
                }
                match hff.lu().solve(&rhs) {
                    Some(xf) => {
                        for (a, &i) in free.iter().enumerate() {
                            x[i] = xf[a];
                        }
                    }
                    None => continue,
                }
            }
            let feasible = (0..n).all(|i| x[i] >= p.lb[i] - 1e-9 && x[i] <= p.ub[i] + 1e-9);
            if !feasible {
                continue;
            }
            let obj = p.objective(&x);
            if best.as_ref().map_or(true, |(_, b)| obj < *b) {
                best = Some((x, obj));
            }
        }
        best.expect("at least the all-bounds candidates are feasible")
    }

    #[test]
    fn matches_enumeration_oracle_on_random_instances() {
        let mut state = 7u64;
        for trial in 0..40 {
            let n = 2 + (trial % 5);
            let h = random_spd(n, &mut state);
            let c = DVector::from_fn(n, |_, _| splitmix(&mut state) * 2.0 - 1.0);
            let lb = DVector::from_fn(n, |_, _| -0.2 - splitmix(&mut state));
            let ub = DVector::from_fn(n, |_, _| 0.2 + splitmix(&mut state));
            let p = QpProblem { h, c, lb, ub };
            let sol = solve_box_qp(&p, None, 1e-10, 500).unwrap();
            let (_, obj_oracle) = enumerate_oracle(&p);
            assert_abs_diff_eq!(sol.objective, obj_oracle, epsilon = 1e-8);
            assert!(sol.stationarity < 1e-8, "stationarity {}", sol.stationarity);
            assert!(sol.complementarity < 1e-10);
            // Probabilistic optimality: random feasible points never beat it.
            for _ in 0..50 {
                let xr = DVector::from_fn(n, |i, _| {
                    p.lb[i] + (p.ub[i] - p.lb[i]) * splitmix(&mut state)
                });
                assert!(p.objective(&xr) >= sol.objective - 1e-9);
            }
        }
    }

    #[test]
    fn infinite_bounds_supported() {
        let mut state = 3u64;
        let h = random_spd(4, &mut state);
        let c = DVector::from_fn(4, |_, _| splitmix(&mut state) - 0.5);
        let p = QpProblem {
            h: h.clone(),
            c: c.clone(),
            lb: DVector::from_element(4, f64::NEG_INFINITY),
            ub: DVector::from_element(4, f64::INFINITY),
        };
        let sol = solve_box_qp(&p, None, 1e-10, 100).unwrap();
        let newton = h.lu().solve(&(-&c)).unwrap();
        assert_relative_eq!((sol.x - newton).norm(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn warm_start_is_no_worse_and_deterministic() {
        let mut state = 19u64;
        let h = random_spd(6, &mut state);
        let c = DVector::from_fn(6, |_, _| splitmix(&mut state) - 0.5);
        let lb = DVector::from_element(6, -0.4);
        let ub = DVector::from_element(6, 0.4);
        let p = QpProblem { h, c, lb, ub };
        let cold = solve_box_qp(&p, None, 1e-10, 500).unwrap();
        let warm = solve_box_qp(&p, Some(&cold.x), 1e-10, 500).unwrap();
        assert!(warm.objective <= cold.objective + 1e-10);
        let again = solve_box_qp(&p, Some(&cold.x), 1e-10, 500).unwrap();
        assert_eq!(warm.x.as_slice(), again.x.as_slice());
        assert!(warm.iterations <= cold.iterations);
    }

    #[test]
    fn fixed_variables_respected() {
        let mut p = simple_problem();
        p.lb[1] = 0.1;
        p.ub[1] = 0.1;
        let sol = solve_box_qp(&p, None, 1e-10, 100).unwrap();
        assert_abs_diff_eq!(sol.x[1], 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(sol.x[0], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn badly_scaled_instance_certifies() {
        // Hessian spanning 12 orders of magnitude: the equilibrated
        // residuals must still certify.
        let h = DMatrix::from_row_slice(
            3,
            3,
            &[4.0e12, 1.0e6, 0.0, 1.0e6, 2.0, 0.1, 0.0, 0.1, 1.0],
        );
        let c = DVector::from_vec(vec![-3.0e10, 0.5, -0.2]);
        let p = QpProblem {
            h,
            c,
            lb: DVector::from_element(3, -1.0),
            ub: DVector::from_element(3, 1.0),
        };
        let sol = solve_box_qp(&p, None, 1e-10, 200).unwrap();
        assert!(sol.stationarity < 1e-8, "stationarity {}", sol.stationarity);
        assert!(sol.primal_infeasibility == 0.0);
    }
}
