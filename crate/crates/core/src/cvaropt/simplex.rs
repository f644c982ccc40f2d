//! Dense bounded-variable two-phase simplex.
//!
//! Every column lives in `[0, ub]` after shifting finite lower bounds,
//! reflecting upper-bounded-only variables and splitting free ones.
//! Nonbasic columns sit at either bound; basic values are tracked
//! explicitly. Pricing is Dantzig's rule, switching to Bland's rule after
//! a run of degenerate steps and back once the objective moves.

use nalgebra::{DMatrix, DVector};

use super::{LpProblem, OptError, Sense};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// One multiplier per row, `y = c_B B^-1` in the original row
    /// orientation: `c - A'y` is the reduced-cost vector.
    pub duals: Vec<f64>,
    pub status: LpStatus,
    pub iterations: usize,
}

/// Contract shared by the bundled solver and any external replacement.
pub trait LpSolver {
    fn solve(&self, problem: &LpProblem) -> Result<LpSolution, OptError>;
}

#[derive(Debug, Clone, Copy)]
pub struct DenseSimplex {
    /// Optimality and feasibility tolerance.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for DenseSimplex {
    fn default() -> Self {
        Self { tol: 1e-9, max_iter: 200_000 }
    }
}

const PIVOT_TOL: f64 = 1e-11;
const DEGENERATE_RUN: usize = 30;

/// `x_orig = offset + sum coef * column`.
#[derive(Debug, Clone)]
struct VarMap {
    offset: f64,
    terms: Vec<(usize, f64)>,
}

struct Tableau {
    m: usize,
    n: usize,
    t: Vec<f64>,
    beta: Vec<f64>,
    basis: Vec<usize>,
    at_upper: Vec<bool>,
    ub: Vec<f64>,
    d: Vec<f64>,
    barred: Vec<bool>,
    is_basic: Vec<bool>,
}

enum Outcome {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.n + j]
    }

    fn value(&self, j: usize) -> f64 {
        if self.at_upper[j] {
            self.ub[j]
        } else {
            0.0
        }
    }

    fn reset_costs(&mut self, c: &[f64]) {
        self.d.copy_from_slice(c);
        for i in 0..self.m {
            let cb = c[self.basis[i]];
            if cb != 0.0 {
                let row = &self.t[i * self.n..(i + 1) * self.n];
                for (dj, a) in self.d.iter_mut().zip(row) {
                    *dj -= cb * a;
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let n = self.n;
        let p = self.t[r * n + j];
        for v in &mut self.t[r * n..(r + 1) * n] {
            *v /= p;
        }
        let pivot_row: Vec<f64> = self.t[r * n..(r + 1) * n].to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * n + j];
            if f != 0.0 {
                for (v, pr) in self.t[i * n..(i + 1) * n].iter_mut().zip(&pivot_row) {
                    *v -= f * pr;
                }
                self.t[i * n + j] = 0.0;
            }
        }
        let dj = self.d[j];
        if dj != 0.0 {
            for (v, pr) in self.d.iter_mut().zip(&pivot_row) {
                *v -= dj * pr;
            }
            self.d[j] = 0.0;
        }
        let old = self.basis[r];
        self.is_basic[old] = false;
        self.is_basic[j] = true;
        self.basis[r] = j;
    }

    fn run(&mut self, tol: f64, max_iter: usize, iterations: &mut usize) -> Result<Outcome, OptError> {
        let mut bland = false;
        let mut degenerate = 0usize;
        loop {
            if *iterations >= max_iter {
                return Err(OptError::NumericalFailure(format!("iteration limit {max_iter} reached")));
            }
            // pricing
            let mut enter: Option<(usize, f64)> = None;
            for j in 0..self.n {
                if self.is_basic[j] || self.barred[j] {
                    continue;
                }
                let dj = self.d[j];
                let improving = if self.at_upper[j] { dj > tol } else { dj < -tol };
                if !improving {
                    continue;
                }
                if bland {
                    enter = Some((j, dj));
                    break;
                }
                if enter.is_none_or(|(_, best)| dj.abs() > best.abs()) {
                    enter = Some((j, dj));
                }
            }
            let Some((j, _)) = enter else { return Ok(Outcome::Optimal) };
            *iterations += 1;
            let dir = if self.at_upper[j] { -1.0 } else { 1.0 };

            // ratio test
            let mut step = self.ub[j];
            let mut leave: Option<(usize, bool)> = None;
            let mut leave_mag = 0.0;
            for i in 0..self.m {
                let rate = -dir * self.at(i, j);
                let (limit, to_upper) = if rate < -PIVOT_TOL {
                    (self.beta[i].max(0.0) / -rate, false)
                } else if rate > PIVOT_TOL && self.ub[self.basis[i]].is_finite() {
                    ((self.ub[self.basis[i]] - self.beta[i]).max(0.0) / rate, true)
                } else {
                    continue;
                };
                let better = match leave {
                    None => limit < step || (limit == step && step.is_finite()),
                    Some((r, _)) => {
                        let tie = (limit - step).abs() <= 1e-12 * (1.0 + step.abs());
                        if tie {
                            if bland {
                                self.basis[i] < self.basis[r]
                            } else {
                                rate.abs() > leave_mag
                            }
                        } else {
                            limit < step
                        }
                    }
                };
                if better {
                    step = limit;
                    leave = Some((i, to_upper));
                    leave_mag = rate.abs();
                }
            }
            if !step.is_finite() {
                return Ok(Outcome::Unbounded);
            }

            for i in 0..self.m {
                let rate = -dir * self.at(i, j);
                self.beta[i] += step * rate;
            }
            match leave {
                None => {
                    self.at_upper[j] = !self.at_upper[j];
                }
                Some((r, to_upper)) => {
                    let entering_value = self.value(j) + dir * step;
                    let l = self.basis[r];
                    self.at_upper[l] = to_upper;
                    self.at_upper[j] = false;
                    self.pivot(r, j);
                    self.beta[r] = entering_value;
                }
            }
            if step <= 1e-12 {
                degenerate += 1;
                if degenerate > DEGENERATE_RUN {
                    bland = true;
                }
            } else {
                degenerate = 0;
                bland = false;
            }
        }
    }
}

impl LpSolver for DenseSimplex {
    fn solve(&self, p: &LpProblem) -> Result<LpSolution, OptError> {
        p.validate()?;
        let nv = p.n_vars();
        let m = p.n_rows();

        // structural columns
        let mut maps = Vec::with_capacity(nv);
        let mut col_ub = Vec::new();
        let mut col_cost = Vec::new();
        for j in 0..nv {
            let (l, u, c) = (p.lower[j], p.upper[j], p.objective[j]);
            let k = col_ub.len();
            if l.is_finite() {
                maps.push(VarMap { offset: l, terms: vec![(k, 1.0)] });
                col_ub.push(u - l);
                col_cost.push(c);
            } else if u.is_finite() {
                maps.push(VarMap { offset: u, terms: vec![(k, -1.0)] });
                col_ub.push(f64::INFINITY);
                col_cost.push(-c);
            } else {
                maps.push(VarMap { offset: 0.0, terms: vec![(k, 1.0), (k + 1, -1.0)] });
                col_ub.extend([f64::INFINITY, f64::INFINITY]);
                col_cost.extend([c, -c]);
            }
        }
        let ns = col_ub.len();

        // rows in column space, rhs made non-negative
        let mut a = vec![vec![0.0; ns]; m];
        let mut rhs = vec![0.0; m];
        let mut senses = vec![Sense::Eq; m];
        let mut row_sign = vec![1.0; m];
        for (i, row) in p.rows.iter().enumerate() {
            let mut b = row.rhs;
            for (j, &coef) in row.coefs.iter().enumerate() {
                if coef == 0.0 {
                    continue;
                }
                b -= coef * maps[j].offset;
                for &(k, s) in &maps[j].terms {
                    a[i][k] += coef * s;
                }
            }
            let mut sense = row.sense;
            if b < 0.0 {
                b = -b;
                a[i].iter_mut().for_each(|v| *v = -*v);
                row_sign[i] = -1.0;
                sense = match sense {
                    Sense::Le => Sense::Ge,
                    Sense::Ge => Sense::Le,
                    Sense::Eq => Sense::Eq,
                };
            }
            rhs[i] = b;
            senses[i] = sense;
        }

        // slack / surplus / artificial columns; `ident[i]` is the unit column of row i
        let n_extra: usize = senses.iter().map(|s| if *s == Sense::Ge { 2 } else { 1 }).sum();
        let n = ns + n_extra;
        let mut t = vec![0.0; m * n];
        let mut ub = col_ub.clone();
        ub.resize(n, f64::INFINITY);
        let mut is_art = vec![false; n];
        let mut ident = vec![0; m];
        let mut next = ns;
        for i in 0..m {
            t[i * n..i * n + ns].copy_from_slice(&a[i]);
            if senses[i] == Sense::Ge {
                t[i * n + next] = -1.0;
                next += 1;
            }
            t[i * n + next] = 1.0;
            ident[i] = next;
            is_art[next] = senses[i] != Sense::Le;
            next += 1;
        }
        let original = t.clone();
        let mut tab = Tableau {
            m,
            n,
            t,
            beta: rhs.clone(),
            basis: ident.clone(),
            at_upper: vec![false; n],
            ub,
            d: vec![0.0; n],
            barred: vec![false; n],
            is_basic: (0..n).map(|j| ident.contains(&j)).collect(),
        };
        let mut iterations = 0;
        let scale = 1.0 + rhs.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));

        // phase 1
        if is_art.iter().any(|&x| x) {
            let c1: Vec<f64> = is_art.iter().map(|&x| if x { 1.0 } else { 0.0 }).collect();
            tab.reset_costs(&c1);
            if let Outcome::Unbounded = tab.run(self.tol, self.max_iter, &mut iterations)? {
                return Err(OptError::NumericalFailure("phase one reported unbounded".into()));
            }
            let infeas: f64 = (0..m).filter(|&i| is_art[tab.basis[i]]).map(|i| tab.beta[i]).sum();
            if infeas > self.tol.max(1e-9) * scale {
                return Err(OptError::Infeasible);
            }
            for r in 0..m {
                if !is_art[tab.basis[r]] {
                    continue;
                }
                let mut best: Option<(usize, f64)> = None;
                for j in 0..n {
                    if tab.is_basic[j] || is_art[j] {
                        continue;
                    }
                    let v = tab.at(r, j).abs();
                    if v > 1e-9 && best.is_none_or(|(_, b)| v > b) {
                        best = Some((j, v));
                    }
                }
                if let Some((j, _)) = best {
                    let value = tab.value(j);
                    tab.at_upper[j] = false;
                    tab.pivot(r, j);
                    tab.beta[r] = value;
                }
            }
            for j in 0..n {
                if is_art[j] {
                    tab.barred[j] = true;
                    tab.ub[j] = 0.0;
                    tab.at_upper[j] = false;
                }
            }
        }

        // phase 2
        let mut c2 = col_cost.clone();
        c2.resize(n, 0.0);
        tab.reset_costs(&c2);
        if let Outcome::Unbounded = tab.run(self.tol, self.max_iter, &mut iterations)? {
            return Err(OptError::Unbounded);
        }

        let mut col_val: Vec<f64> = (0..n).map(|j| tab.value(j)).collect();
        let basic = refactorized_basic_values(&original, &rhs, &tab).unwrap_or_else(|| {
            let mut b: Vec<(usize, f64)> = (0..m).map(|i| (tab.basis[i], tab.beta[i])).collect();
            b.sort_by_key(|(j, _)| *j);
            b
        });
        for (j, v) in basic {
            col_val[j] = v;
        }
        let x: Vec<f64> = maps
            .iter()
            .map(|mp| mp.offset + mp.terms.iter().map(|&(k, s)| s * col_val[k]).sum::<f64>())
            .collect();
        let duals: Vec<f64> = (0..m).map(|i| -row_sign[i] * tab.d[ident[i]]).collect();

        // reject solutions that drifted out of the feasible set
        let feas_tol = 1e-7 * scale;
        for (i, row) in p.rows.iter().enumerate() {
            let lhs: f64 = row.coefs.iter().zip(&x).map(|(c, v)| c * v).sum();
            let viol = match row.sense {
                Sense::Le => lhs - row.rhs,
                Sense::Ge => row.rhs - lhs,
                Sense::Eq => (lhs - row.rhs).abs(),
            };
            if viol > feas_tol {
                return Err(OptError::NumericalFailure(format!("row {i} violated by {viol:e}")));
            }
        }
        let objective = p.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        Ok(LpSolution { x, objective, duals, status: LpStatus::Optimal, iterations })
    }
}

/// Solves with the bundled [`DenseSimplex`] at default settings.
/// Basic variable values recomputed from the original columns of the final
/// basis, sorted by column index. The tableau values carry rounding that
/// depends on the pivot path; a fresh solve makes the returned vertex a
/// function of the basis alone. `None` when the basis matrix is singular or
/// the recomputed values disagree with the tableau beyond rounding.
fn refactorized_basic_values(original: &[f64], rhs: &[f64], tab: &Tableau) -> Option<Vec<(usize, f64)>> {
    let (m, n) = (tab.m, tab.n);
    let mut cols: Vec<usize> = tab.basis.clone();
    cols.sort_unstable();
    let mut b = DMatrix::zeros(m, m);
    for (k, &j) in cols.iter().enumerate() {
        for i in 0..m {
            b[(i, k)] = original[i * n + j];
        }
    }
    let mut r = DVector::from_column_slice(rhs);
    for j in (0..n).filter(|&j| !tab.is_basic[j] && tab.at_upper[j]) {
        for i in 0..m {
            r[i] -= original[i * n + j] * tab.ub[j];
        }
    }
    let x = b.lu().solve(&r)?;
    let scale = 1.0 + rhs.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let mut out = Vec::with_capacity(m);
    for (k, &j) in cols.iter().enumerate() {
        let row = tab.basis.iter().position(|&bj| bj == j).expect("basic column");
        let v = x[k];
        if !v.is_finite() || (v - tab.beta[row]).abs() > 1e-8 * scale {
            return None;
        }
        // values within rounding of a bound sit on it
        let v = if v.abs() <= 1e-12 * scale { 0.0 } else if (v - tab.ub[j]).abs() <= 1e-12 * scale { tab.ub[j] } else { v };
        out.push((j, v));
    }
    Some(out)
}

pub fn solve_lp(problem: &LpProblem) -> Result<LpSolution, OptError> {
    DenseSimplex::default().solve(problem)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(n: usize, c: &[f64]) -> LpProblem {
        let mut p = LpProblem::new(n);
        p.objective = c.to_vec();
        p
    }

    #[test]
    fn one_dimensional() {
        let mut p = lp(1, &[-1.0]);
        p.add_row(vec![1.0], Sense::Le, 1.0);
        let s = solve_lp(&p).unwrap();
        assert!((s.x[0] - 1.0).abs() < 1e-12);
        assert!((s.duals[0] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_budget() {
        let mut p = lp(5, &[0.0; 5]);
        p.upper = vec![0.1; 5];
        p.add_row(vec![1.0; 5], Sense::Eq, 1.0);
        assert!(matches!(solve_lp(&p), Err(OptError::Infeasible)));
    }

    #[test]
    fn unbounded_detected() {
        let mut p = lp(2, &[-1.0, 0.0]);
        p.add_row(vec![1.0, -1.0], Sense::Le, 1.0);
        assert!(matches!(solve_lp(&p), Err(OptError::Unbounded)));
    }

    #[test]
    fn textbook_with_free_and_bounded_variables() {
        // max 3x + 2y  s.t. x + y <= 4, x + 3y <= 7, x <= 3, y free but y >= -1 via row
        let mut p = lp(2, &[-3.0, -2.0]);
        p.upper[0] = 3.0;
        p.lower[1] = f64::NEG_INFINITY;
        p.add_row(vec![1.0, 1.0], Sense::Le, 4.0);
        p.add_row(vec![1.0, 3.0], Sense::Le, 7.0);
        p.add_row(vec![0.0, 1.0], Sense::Ge, -1.0);
        let s = solve_lp(&p).unwrap();
        assert!((s.x[0] - 3.0).abs() < 1e-12 && (s.x[1] - 1.0).abs() < 1e-12);
        assert!((s.objective + 11.0).abs() < 1e-12);
        // dual feasibility / complementary slackness
        assert!((s.duals[0] + 2.0).abs() < 1e-12);
        assert!(s.duals[1].abs() < 1e-12 && s.duals[2].abs() < 1e-12);
    }

    /// Brute-force vertex enumeration over 2-D problems `A x <= b, x >= 0`.
    fn vertex_min(c: &[f64; 2], rows: &[([f64; 2], f64)]) -> f64 {
        let mut lines: Vec<([f64; 2], f64)> = rows.to_vec();
        lines.push(([1.0, 0.0], 0.0));
        lines.push(([0.0, 1.0], 0.0));
        let mut best = f64::INFINITY;
        for i in 0..lines.len() {
            for k in i + 1..lines.len() {
                let (a, b) = (lines[i], lines[k]);
                let det = a.0[0] * b.0[1] - a.0[1] * b.0[0];
                if det.abs() < 1e-12 {
                    continue;
                }
                let x = [(a.1 * b.0[1] - a.0[1] * b.1) / det, (a.0[0] * b.1 - a.1 * b.0[0]) / det];
                let feasible = x[0] >= -1e-9 && x[1] >= -1e-9 && rows.iter().all(|(r, rhs)| r[0] * x[0] + r[1] * x[1] <= rhs + 1e-9);
                if feasible {
                    best = best.min(c[0] * x[0] + c[1] * x[1]);
                }
            }
        }
        best
    }

    #[test]
    fn degenerate_redundant_equalities_terminate() {
        // Several constraints through the optimal vertex plus a duplicated equality.
        let rows = [([1.0, 1.0], 2.0), ([2.0, 2.0], 4.0), ([1.0, 0.0], 1.0), ([0.0, 1.0], 1.0), ([1.0, 2.0], 3.0)];
        let c = [-1.0, -1.0];
        let mut p = lp(2, &c);
        for (r, b) in rows {
            p.add_row(r.to_vec(), Sense::Le, b);
        }
        p.add_row(vec![1.0, -1.0], Sense::Eq, 0.0);
        p.add_row(vec![2.0, -2.0], Sense::Eq, 0.0);
        let s = solve_lp(&p).unwrap();
        let oracle = vertex_min(&c, &[rows[0], rows[1], rows[2], rows[3], rows[4], ([1.0, -1.0], 0.0), ([-1.0, 1.0], 0.0)]);
        assert!((s.objective - oracle).abs() < 1e-12);
        assert_eq!(s.status, LpStatus::Optimal);
    }

    #[test]
    fn beale_cycling_example() {
        // Beale's example cycles under textbook Dantzig pricing without anti-cycling.
        let mut p = lp(4, &[-0.75, 150.0, -0.02, 6.0]);
        p.add_row(vec![0.25, -60.0, -0.04, 9.0], Sense::Le, 0.0);
        p.add_row(vec![0.5, -90.0, -0.02, 3.0], Sense::Le, 0.0);
        p.add_row(vec![0.0, 0.0, 1.0, 0.0], Sense::Le, 1.0);
        let s = solve_lp(&p).unwrap();
        assert!((s.objective + 0.05).abs() < 1e-12);
    }

    #[test]
    fn random_lps_satisfy_strong_duality() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..40 {
            let (n, m) = (rng.random_range(2..6), rng.random_range(1..6));
            let mut p = lp(n, &(0..n).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<_>>());
            p.upper = (0..n).map(|_| rng.random_range(0.5..3.0)).collect();
            for _ in 0..m {
                let coefs = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                let sense = [Sense::Le, Sense::Ge, Sense::Eq][rng.random_range(0..3)];
                p.add_row(coefs, sense, rng.random_range(-0.5..0.5));
            }
            let Ok(s) = solve_lp(&p) else { continue };
            // dual objective: b'y + sum over columns of the bound term
            let mut dual = p.rows.iter().zip(&s.duals).map(|(r, y)| r.rhs * y).sum::<f64>();
            for j in 0..n {
                let red = p.objective[j] - p.rows.iter().zip(&s.duals).map(|(r, y)| r.coefs[j] * y).sum::<f64>();
                dual += if red < 0.0 { red * p.upper[j] } else { red * p.lower[j] };
            }
            assert!((dual - s.objective).abs() < 1e-9, "{dual} vs {}", s.objective);
        }
    }
}
