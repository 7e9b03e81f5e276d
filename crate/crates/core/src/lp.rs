//! Dense two-phase primal simplex and the static benchmark programs built on it.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_len, CbwkError, Result};

const PIVOT_TOL: f64 = 1e-9;
const FEASIBILITY_TOL: f64 = 1e-7;
const ITERATION_LIMIT: usize = 1_000_000;

/// `maximize c^T x` subject to `A x <= b`, `E x = f`, `x >= 0`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub ineq: Vec<Vec<f64>>,
    pub ineq_rhs: Vec<f64>,
    pub eq: Vec<Vec<f64>>,
    pub eq_rhs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// The pivot safeguard tripped before optimality was proven.
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub value: f64,
    pub point: Vec<f64>,
    /// Multipliers for the inequality rows followed by the equality rows.
    pub duals: Vec<f64>,
    pub iterations: usize,
}

impl LpProblem {
    pub fn new(objective: Vec<f64>) -> Self {
        Self {
            objective,
            ..Self::default()
        }
    }

    pub fn variables(&self) -> usize {
        self.objective.len()
    }

    pub fn less_eq(mut self, row: Vec<f64>, rhs: f64) -> Self {
        self.ineq.push(row);
        self.ineq_rhs.push(rhs);
        self
    }

    pub fn equal(mut self, row: Vec<f64>, rhs: f64) -> Self {
        self.eq.push(row);
        self.eq_rhs.push(rhs);
        self
    }

    fn validate(&self) -> Result<()> {
        let n = self.variables();
        check_len("inequality right-hand side", self.ineq.len(), self.ineq_rhs.len())?;
        check_len("equality right-hand side", self.eq.len(), self.eq_rhs.len())?;
        for row in self.ineq.iter().chain(&self.eq) {
            check_len("constraint row", n, row.len())?;
        }
        let finite = self
            .objective
            .iter()
            .chain(self.ineq.iter().flatten())
            .chain(self.eq.iter().flatten())
            .chain(&self.ineq_rhs)
            .chain(&self.eq_rhs)
            .all(|v| v.is_finite());
        if !finite {
            return Err(CbwkError::config("linear program has non-finite entries"));
        }
        Ok(())
    }
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    width: usize,
    iterations: usize,
}

enum Outcome {
    Optimal,
    Unbounded,
    Limit,
}

impl Tableau {
    fn pivot(&mut self, obj: &mut [f64], r: usize, j: usize) {
        let p = self.rows[r][j];
        self.rows[r].iter_mut().for_each(|v| *v /= p);
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r {
                let f = row[j];
                if f != 0.0 {
                    row.iter_mut().zip(&pivot_row).for_each(|(v, pv)| *v -= f * pv);
                }
            }
        }
        let f = obj[j];
        if f != 0.0 {
            obj.iter_mut().zip(&pivot_row).for_each(|(v, pv)| *v -= f * pv);
        }
        self.basis[r] = j;
        self.iterations += 1;
    }

    /// Reduced-cost row for `cost` under the current basis; the last entry
    /// holds minus the objective value.
    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut obj: Vec<f64> = cost.to_vec();
        obj.push(0.0);
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            let cb = cost[b];
            if cb != 0.0 {
                obj.iter_mut().zip(row).for_each(|(o, v)| *o -= cb * v);
            }
        }
        obj
    }

    /// Bland's rule: lowest-index improving column, ties in the ratio test
    /// go to the lowest-index basic variable.
    fn run(&mut self, obj: &mut [f64], allowed: usize) -> Outcome {
        let rhs = self.width;
        loop {
            if self.iterations >= ITERATION_LIMIT {
                return Outcome::Limit;
            }
            let Some(j) = (0..allowed).find(|&j| obj[j] > PIVOT_TOL) else {
                return Outcome::Optimal;
            };
            let mut leave: Option<(usize, f64)> = None;
            for (r, row) in self.rows.iter().enumerate() {
                if row[j] > PIVOT_TOL {
                    let ratio = row[rhs] / row[j];
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < lratio - 1e-12
                                || (ratio <= lratio + 1e-12 && self.basis[r] < self.basis[lr])
                            {
                                Some((r, ratio))
                            } else {
                                Some((lr, lratio))
                            }
                        }
                    };
                }
            }
            match leave {
                Some((r, _)) => self.pivot(obj, r, j),
                None => return Outcome::Unbounded,
            }
        }
    }
}

/// Solves `problem` by the two-phase primal simplex method with Bland's rule.
pub fn solve_lp(problem: &LpProblem) -> Result<LpSolution> {
    problem.validate()?;
    let n = problem.variables();
    let mi = problem.ineq.len();
    let m = mi + problem.eq.len();

    // Row signs make every right-hand side nonnegative.
    let mut signs = Vec::with_capacity(m);
    let mut needs_artificial = Vec::with_capacity(m);
    for &b in &problem.ineq_rhs {
        signs.push(if b < 0.0 { -1.0 } else { 1.0 });
        needs_artificial.push(b < 0.0);
    }
    for &f in &problem.eq_rhs {
        signs.push(if f < 0.0 { -1.0 } else { 1.0 });
        needs_artificial.push(true);
    }
    let n_art = needs_artificial.iter().filter(|&&a| a).count();
    let width = n + mi + n_art;

    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut art_col = n + mi;
    for i in 0..m {
        let mut row = vec![0.0; width + 1];
        let (coeffs, rhs) = if i < mi {
            (&problem.ineq[i], problem.ineq_rhs[i])
        } else {
            (&problem.eq[i - mi], problem.eq_rhs[i - mi])
        };
        let s = signs[i];
        row[..n].iter_mut().zip(coeffs).for_each(|(r, c)| *r = s * c);
        if i < mi {
            row[n + i] = s;
        }
        row[width] = s * rhs;
        if needs_artificial[i] {
            row[art_col] = 1.0;
            basis.push(art_col);
            art_col += 1;
        } else {
            basis.push(n + i);
        }
        rows.push(row);
    }
    let original = rows.clone();
    let mut tab = Tableau {
        rows,
        basis,
        width,
        iterations: 0,
    };

    let limit_hit = |tab: &Tableau| LpSolution {
        status: LpStatus::IterationLimit,
        value: f64::NAN,
        point: vec![],
        duals: vec![],
        iterations: tab.iterations,
    };

    if n_art > 0 {
        let mut phase1_cost = vec![0.0; width];
        phase1_cost[n + mi..].iter_mut().for_each(|c| *c = -1.0);
        let mut obj = tab.reduced_costs(&phase1_cost);
        match tab.run(&mut obj, width) {
            Outcome::Optimal => {}
            Outcome::Limit => return Ok(limit_hit(&tab)),
            Outcome::Unbounded => unreachable!("phase one is bounded below by zero"),
        }
        let infeasibility = obj[width];
        let scale = 1.0 + tab.rows.iter().map(|r| r[width].abs()).fold(0.0, f64::max);
        if infeasibility > FEASIBILITY_TOL * scale {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                value: f64::NAN,
                point: vec![],
                duals: vec![],
                iterations: tab.iterations,
            });
        }
        // Drive zero-level artificials out of the basis where possible.
        for r in 0..m {
            if tab.basis[r] >= n + mi {
                if let Some(j) = (0..n + mi).find(|&j| tab.rows[r][j].abs() > PIVOT_TOL) {
                    let mut dummy = vec![0.0; width + 1];
                    tab.pivot(&mut dummy, r, j);
                }
            }
        }
    }

    let mut cost = vec![0.0; width];
    cost[..n].copy_from_slice(&problem.objective);
    let mut obj = tab.reduced_costs(&cost);
    match tab.run(&mut obj, n + mi) {
        Outcome::Optimal => {}
        Outcome::Limit => return Ok(limit_hit(&tab)),
        Outcome::Unbounded => {
            return Ok(LpSolution {
                status: LpStatus::Unbounded,
                value: f64::INFINITY,
                point: vec![],
                duals: vec![],
                iterations: tab.iterations,
            })
        }
    }

    let mut point = vec![0.0; n];
    for (row, &b) in tab.rows.iter().zip(&tab.basis) {
        if b < n {
            point[b] = row[width].max(0.0);
        }
    }
    let value = problem
        .objective
        .iter()
        .zip(&point)
        .map(|(c, x)| c * x)
        .sum();

    // Duals from B^T y = c_B on the sign-normalized rows.
    let bmat = DMatrix::from_fn(m, m, |i, k| original[i][tab.basis[k]]);
    let cb = DVector::from_iterator(m, tab.basis.iter().map(|&b| cost[b]));
    let duals = match bmat.transpose().lu().solve(&cb) {
        Some(y) => y.iter().zip(&signs).map(|(y, s)| y * s).collect(),
        None => vec![f64::NAN; m],
    };

    Ok(LpSolution {
        status: LpStatus::Optimal,
        value,
        point,
        duals,
        iterations: tab.iterations,
    })
}

/// Static program over a discrete context distribution:
/// `max sum_x w_x sum_a p_{x,a} f(x,a)` subject to
/// `sum_x w_x sum_a p_{x,a} g(x,a) <= rhs` and `p_x` in the simplex.
///
/// `rewards[x][a]` and `costs[x][a][j]`; variables are laid out context-major.
pub fn context_lp(
    weights: &[f64],
    rewards: &[Vec<f64>],
    costs: &[Vec<Vec<f64>>],
    rhs: &[f64],
) -> Result<LpSolution> {
    let contexts = weights.len();
    check_len("context rewards", contexts, rewards.len())?;
    check_len("context costs", contexts, costs.len())?;
    let arms = rewards.first().map_or(0, Vec::len);
    let n = contexts * arms;
    let d = rhs.len();

    let mut objective = Vec::with_capacity(n);
    for (w, r) in weights.iter().zip(rewards) {
        check_len("arm rewards", arms, r.len())?;
        objective.extend(r.iter().map(|v| w * v));
    }
    let mut lp = LpProblem::new(objective);
    for (j, &b) in rhs.iter().enumerate() {
        let mut row = Vec::with_capacity(n);
        for (w, c) in weights.iter().zip(costs) {
            check_len("arm costs", arms, c.len())?;
            for ca in c {
                check_len("cost vector", d, ca.len())?;
                row.push(w * ca[j]);
            }
        }
        lp = lp.less_eq(row, b);
    }
    for x in 0..contexts {
        let mut row = vec![0.0; n];
        row[x * arms..(x + 1) * arms].iter_mut().for_each(|v| *v = 1.0);
        lp = lp.equal(row, 1.0);
    }
    solve_lp(&lp)
}

/// Per-round value of the best static randomized policy when the context
/// never changes: an LP over the arm simplex.
pub fn exact_opt_fixed_context(
    rewards: &[f64],
    costs: &[Vec<f64>],
    budget_rate: f64,
) -> Result<f64> {
    let d = costs.first().map_or(0, Vec::len);
    let sol = context_lp(
        &[1.0],
        &[rewards.to_vec()],
        &[costs.to_vec()],
        &vec![budget_rate; d],
    )?;
    match sol.status {
        LpStatus::Optimal => Ok(sol.value),
        LpStatus::Infeasible => Err(CbwkError::Infeasible(format!(
            "no mixture of arms keeps expected consumption within {budget_rate} per round"
        ))),
        other => Err(CbwkError::Numerical(format!("static program ended with {other:?}"))),
    }
}

/// Independent reference for tiny instances (`K <= 3`, `d <= 2`): evaluates
/// a simplex grid plus every vertex cut out by the constraints.
///
/// Returns `Ok(None)` when no feasible point exists.
pub fn brute_force_opt(
    rewards: &[f64],
    costs: &[Vec<f64>],
    budget_rate: f64,
    resolution: usize,
) -> Result<Option<f64>> {
    let k = rewards.len();
    let d = costs.first().map_or(0, Vec::len);
    if !(1..=3).contains(&k) || d > 2 || costs.len() != k || resolution == 0 {
        return Err(CbwkError::config(format!(
            "brute force supports 1 <= K <= 3 and d <= 2 (K = {k}, d = {d})"
        )));
    }
    let feasible = |p: &[f64]| {
        p.iter().all(|&x| x >= -1e-12)
            && (0..d).all(|j| {
                p.iter().zip(costs).map(|(pa, c)| pa * c[j]).sum::<f64>() <= budget_rate + 1e-12
            })
    };
    let value = |p: &[f64]| p.iter().zip(rewards).map(|(a, b)| a * b).sum::<f64>();
    let mut best: Option<f64> = None;
    let mut consider = |p: &[f64]| {
        if feasible(p) {
            let v = value(p);
            best = Some(best.map_or(v, |b: f64| b.max(v)));
        }
    };

    // Grid over the simplex.
    let step = 1.0 / resolution as f64;
    match k {
        1 => consider(&[1.0]),
        2 => (0..=resolution).for_each(|i| consider(&[i as f64 * step, 1.0 - i as f64 * step])),
        _ => {
            for i in 0..=resolution {
                for j in 0..=resolution - i {
                    let (a, b) = (i as f64 * step, j as f64 * step);
                    consider(&[a, b, (1.0 - a - b).max(0.0)]);
                }
            }
        }
    }

    // Vertices: choose K-1 active constraints among p_a = 0 and g_j . p = rate.
    let mut rows: Vec<(Vec<f64>, f64)> = (0..k)
        .map(|a| {
            let mut r = vec![0.0; k];
            r[a] = 1.0;
            (r, 0.0)
        })
        .collect();
    for j in 0..d {
        rows.push((costs.iter().map(|c| c[j]).collect(), budget_rate));
    }
    let mut choose = vec![];
    subsets(rows.len(), k - 1, 0, &mut choose, &mut |subset| {
        let mut a = DMatrix::zeros(k, k);
        let mut b = DVector::zeros(k);
        a.row_mut(0).fill(1.0);
        b[0] = 1.0;
        for (i, &s) in subset.iter().enumerate() {
            for c in 0..k {
                a[(i + 1, c)] = rows[s].0[c];
            }
            b[i + 1] = rows[s].1;
        }
        if a.determinant().abs() > 1e-12 {
            if let Some(p) = a.lu().solve(&b) {
                consider(p.as_slice());
            }
        }
    });
    Ok(best)
}

fn subsets(n: usize, size: usize, start: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
    if cur.len() == size {
        f(cur);
        return;
    }
    for i in start..n {
        cur.push(i);
        subsets(n, size, i + 1, cur, f);
        cur.pop();
    }
}
