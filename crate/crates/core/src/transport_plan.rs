//! Transportation LP `min Σ λ_ij C_ij` over couplings of two weight vectors.
//!
//! Solved by the transportation simplex: northwest-corner start, MODI
//! potentials for pricing, first improving cell in row-major order entering,
//! Bland's rule (lowest row-major index) for the leaving cell. Degenerate
//! bases keep their zero-valued basic cells, so every basis is a spanning
//! tree of `N₁ + N₂ − 1` cells.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::check_simplex;
use crate::matrix_kit::Matrix;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Scalar + Serialize",
    deserialize = "T: Scalar + Deserialize<'de>"
))]
pub struct TransportPlan<T: Scalar> {
    pub lambda: Matrix<T>,
    pub objective: T,
    /// Dual potentials `u_i` (rows) and `w_j` (columns) certifying optimality.
    pub row_potentials: Vec<T>,
    pub col_potentials: Vec<T>,
}

impl<T: Scalar> TransportPlan<T> {
    pub fn rows(&self) -> usize {
        self.lambda.rows()
    }

    pub fn cols(&self) -> usize {
        self.lambda.cols()
    }

    /// `Σ α_i u_i + Σ β_j w_j`.
    pub fn dual_objective(&self, alpha: &[T], beta: &[T]) -> T {
        let a: T = alpha.iter().zip(&self.row_potentials).map(|(&x, &u)| x * u).sum();
        let b: T = beta.iter().zip(&self.col_potentials).map(|(&x, &w)| x * w).sum();
        a + b
    }

    pub fn support_size(&self) -> usize {
        self.lambda.as_slice().iter().filter(|&&v| v > T::zero()).count()
    }
}

/// Linear objective `Σ λ_ij C_ij` of any plan.
pub fn plan_objective<T: Scalar>(lambda: &Matrix<T>, cost: &Matrix<T>) -> T {
    lambda
        .as_slice()
        .iter()
        .zip(cost.as_slice())
        .map(|(&l, &c)| l * c)
        .sum()
}

/// True iff `plan` is nonnegative with row sums `alpha` and column sums
/// `beta` within `1e-10`.
pub fn verify_plan<T: Scalar>(plan: &TransportPlan<T>, alpha: &[T], beta: &[T]) -> bool {
    verify_coupling(&plan.lambda, alpha, beta)
}

pub fn verify_coupling<T: Scalar>(lambda: &Matrix<T>, alpha: &[T], beta: &[T]) -> bool {
    let (m, n) = (lambda.rows(), lambda.cols());
    if alpha.len() != m || beta.len() != n {
        return false;
    }
    let tol = T::lit(1e-10).max(T::epsilon() * T::lit(16.0));
    if lambda.as_slice().iter().any(|&v| !(v >= T::zero())) {
        return false;
    }
    let rows_ok = (0..m).all(|i| ((0..n).map(|j| lambda[(i, j)]).sum::<T>() - alpha[i]).abs() <= tol);
    let cols_ok = (0..n).all(|j| ((0..m).map(|i| lambda[(i, j)]).sum::<T>() - beta[j]).abs() <= tol);
    rows_ok && cols_ok
}

/// Solves the transportation LP with row sums `alpha` and column sums `beta`.
pub fn solve_transport<T: Scalar>(cost: &Matrix<T>, alpha: &[T], beta: &[T]) -> Result<TransportPlan<T>> {
    let (m, n) = (alpha.len(), beta.len());
    if cost.rows() != m || cost.cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "cost is {}x{}, marginals have lengths {m} and {n}",
            cost.rows(),
            cost.cols()
        )));
    }
    check_simplex(alpha, "row marginal")?;
    check_simplex(beta, "column marginal")?;
    if cost.as_slice().iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidArgument("transport cost must be finite".into()));
    }

    let mut x = Matrix::zeros(m, n);
    let mut basic = vec![false; m * n];
    northwest_corner(alpha, beta, &mut x, &mut basic);

    let scale = cost.max_abs().max(T::one());
    let tol = T::epsilon() * T::lit(1e3) * scale;
    let max_pivots = 50 * (m + n) * (m + n) + 100;
    let mut pivots = 0;
    loop {
        let (u, w) = potentials(cost, &basic, m, n);
        let entering = (0..m * n).find(|&idx| {
            let (i, j) = (idx / n, idx % n);
            !basic[idx] && cost[(i, j)] - u[i] - w[j] < -tol
        });
        let Some(enter) = entering else {
            let objective = plan_objective(&x, cost);
            return Ok(TransportPlan {
                lambda: x,
                objective,
                row_potentials: u,
                col_potentials: w,
            });
        };
        pivots += 1;
        if pivots > max_pivots {
            return Err(Error::InvalidArgument(
                "transportation simplex exceeded its pivot budget".into(),
            ));
        }
        pivot(&mut x, &mut basic, m, n, enter);
    }
}

fn northwest_corner<T: Scalar>(alpha: &[T], beta: &[T], x: &mut Matrix<T>, basic: &mut [bool]) {
    let (m, n) = (alpha.len(), beta.len());
    let mut supply = alpha.to_vec();
    let mut demand = beta.to_vec();
    let (mut i, mut j) = (0, 0);
    loop {
        let q = supply[i].min(demand[j]).max(T::zero());
        x[(i, j)] = q;
        basic[i * n + j] = true;
        supply[i] -= q;
        demand[j] -= q;
        if i == m - 1 && j == n - 1 {
            break;
        }
        let row_done = supply[i] <= demand[j];
        if j == n - 1 || (row_done && i < m - 1) {
            // Whatever rounding left in the row moves down with the column.
            i += 1;
        } else {
            j += 1;
        }
    }
}

/// MODI potentials with `u_0 = 0`, solving `u_i + w_j = C_ij` on the basis tree.
fn potentials<T: Scalar>(cost: &Matrix<T>, basic: &[bool], m: usize, n: usize) -> (Vec<T>, Vec<T>) {
    let mut u = vec![None; m];
    let mut w = vec![None; n];
    u[0] = Some(T::zero());
    let mut queue = VecDeque::from([(true, 0usize)]);
    while let Some((is_row, idx)) = queue.pop_front() {
        if is_row {
            let ui = u[idx].expect("visited row has a potential");
            for j in 0..n {
                if basic[idx * n + j] && w[j].is_none() {
                    w[j] = Some(cost[(idx, j)] - ui);
                    queue.push_back((false, j));
                }
            }
        } else {
            let wj = w[idx].expect("visited column has a potential");
            for i in 0..m {
                if basic[i * n + idx] && u[i].is_none() {
                    u[i] = Some(cost[(i, idx)] - wj);
                    queue.push_back((true, i));
                }
            }
        }
    }
    (
        u.into_iter().map(|v| v.expect("basis spans all rows")).collect(),
        w.into_iter().map(|v| v.expect("basis spans all columns")).collect(),
    )
}

/// Brings cell `enter` into the basis along its unique cycle.
fn pivot<T: Scalar>(x: &mut Matrix<T>, basic: &mut [bool], m: usize, n: usize, enter: usize) {
    let (ei, ej) = (enter / n, enter % n);
    // Tree nodes: rows 0..m, columns m..m+n. Path from row ei to column ej.
    let total = m + n;
    let mut parent = vec![usize::MAX; total];
    let mut seen = vec![false; total];
    seen[ei] = true;
    let mut queue = VecDeque::from([ei]);
    while let Some(node) = queue.pop_front() {
        if node == m + ej {
            break;
        }
        if node < m {
            for j in 0..n {
                if basic[node * n + j] && !seen[m + j] {
                    seen[m + j] = true;
                    parent[m + j] = node;
                    queue.push_back(m + j);
                }
            }
        } else {
            let j = node - m;
            for i in 0..m {
                if basic[i * n + j] && !seen[i] {
                    seen[i] = true;
                    parent[i] = node;
                    queue.push_back(i);
                }
            }
        }
    }
    let mut cells = Vec::new();
    let mut node = m + ej;
    while node != ei {
        let prev = parent[node];
        let cell = if node < m {
            node * n + (prev - m)
        } else {
            prev * n + (node - m)
        };
        cells.push(cell);
        node = prev;
    }
    // Walking back from column ej, the first edge touches column ej and is a
    // donor; signs alternate from there.
    let donors: Vec<usize> = cells.iter().copied().step_by(2).collect();
    let receivers: Vec<usize> = cells.iter().copied().skip(1).step_by(2).collect();
    let theta = donors
        .iter()
        .map(|&c| x[(c / n, c % n)])
        .fold(T::infinity(), T::min);
    let leaving = donors
        .iter()
        .copied()
        .filter(|&c| x[(c / n, c % n)] == theta)
        .min()
        .expect("cycle has a donor cell");
    for &c in &donors {
        let v = x[(c / n, c % n)] - theta;
        x[(c / n, c % n)] = v.max(T::zero());
    }
    for &c in &receivers {
        x[(c / n, c % n)] += theta;
    }
    x[(ei, ej)] = theta;
    basic[enter] = true;
    basic[leaving] = false;
    x[(leaving / n, leaving % n)] = T::zero();
}
