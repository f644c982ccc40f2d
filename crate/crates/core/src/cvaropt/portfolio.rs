//! Scenario matrices, the mean-CVaR program and its solution.
//!
//! The program over weights `theta`, threshold `nu` and shortfalls `u` is
//!
//! ```text
//! min  -alpha mu'theta + (1 - alpha) (nu + sum_s u_s / (S (1 - beta)))
//! s.t. sum theta = 1,  theta >= 0,  u_s >= -r_s'theta - nu,  u_s >= 0
//! ```
//!
//! plus `|theta_i - prev_i| <= d_i`, `sum d <= cap` when rebalancing from a
//! previous portfolio. With many scenarios the LP dual is solved instead:
//! it has one bounded column per scenario and only `O(I)` rows, and the
//! primal `theta` and `nu` are read off its row multipliers.

use std::path::Path;

use nalgebra::DMatrix;

use super::{DenseSimplex, LpProblem, LpSolver, LpStatus, OptError, Sense};

/// Above this many scenarios [`Route::Auto`] solves the dual program.
pub const PRIMAL_ROUTE_MAX_SCENARIOS: usize = 256;

/// S x I simple one-period returns; column order is the asset order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioMatrix {
    returns: DMatrix<f64>,
    assets: Vec<String>,
}

impl ScenarioMatrix {
    pub fn new(returns: DMatrix<f64>) -> Result<Self, OptError> {
        let assets = (0..returns.ncols()).map(|i| format!("asset{i}")).collect();
        Self::with_assets(returns, assets)
    }

    pub fn with_assets(returns: DMatrix<f64>, assets: Vec<String>) -> Result<Self, OptError> {
        if returns.nrows() == 0 || returns.ncols() == 0 {
            return Err(OptError::InvalidConfig("scenario matrix needs at least one row and one column".into()));
        }
        if assets.len() != returns.ncols() {
            return Err(OptError::InvalidConfig(format!("{} asset names for {} columns", assets.len(), returns.ncols())));
        }
        if let Some(k) = returns.iter().position(|v| !v.is_finite()) {
            let (s, i) = (k % returns.nrows(), k / returns.nrows());
            return Err(OptError::InvalidConfig(format!("non-finite scenario return at row {s}, column {i}")));
        }
        Ok(Self { returns, assets })
    }

    pub fn n_scenarios(&self) -> usize {
        self.returns.nrows()
    }

    pub fn n_assets(&self) -> usize {
        self.returns.ncols()
    }

    pub fn returns(&self) -> &DMatrix<f64> {
        &self.returns
    }

    pub fn assets(&self) -> &[String] {
        &self.assets
    }

    /// Per-asset scenario mean.
    pub fn means(&self) -> Vec<f64> {
        (0..self.n_assets()).map(|i| crate::numeric::stats::mean(self.returns.column(i).as_slice())).collect()
    }

    /// Portfolio return `r_s'theta` in every scenario.
    pub fn portfolio_returns(&self, weights: &[f64]) -> Vec<f64> {
        (0..self.n_scenarios()).map(|s| self.returns.row(s).iter().zip(weights).map(|(r, w)| r * w).sum()).collect()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { returns: &self.returns * c, assets: self.assets.clone() }
    }

    /// CSV with an asset-name header and one scenario per row.
    pub fn to_csv_string(&self) -> String {
        let mut out = self.assets.join(",");
        out.push('\n');
        for row in self.returns.row_iter() {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv_str(text: &str) -> Result<Self, OptError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(text.as_bytes());
        let parse_err = |e: csv::Error| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            OptError::Parse { line, msg: e.to_string() }
        };
        let assets: Vec<String> = rdr.headers().map_err(parse_err)?.iter().map(str::to_string).collect();
        let mut values = Vec::new();
        let mut rows = 0;
        for rec in rdr.records() {
            let rec = rec.map_err(parse_err)?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            for cell in rec.iter() {
                let v: f64 = cell.parse().map_err(|_| OptError::Parse { line, msg: format!("bad number {cell:?}") })?;
                if !v.is_finite() {
                    return Err(OptError::Parse { line, msg: format!("non-finite value {cell:?}") });
                }
                values.push(v);
            }
            rows += 1;
        }
        if rows == 0 {
            return Err(OptError::Parse { line: 1, msg: "no scenario rows".into() });
        }
        Self::with_assets(DMatrix::from_row_slice(rows, assets.len(), &values), assets)
    }

    pub fn read_csv(path: &Path) -> Result<Self, OptError> {
        Self::from_csv_str(&std::fs::read_to_string(path)?)
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), OptError> {
        Ok(crate::data::io::write_atomic(path, self.to_csv_string().as_bytes())?)
    }
}

/// Which formulation the optimizer hands to the LP solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Route {
    /// Primal up to [`PRIMAL_ROUTE_MAX_SCENARIOS`] scenarios, dual beyond.
    #[default]
    Auto,
    Primal,
    Dual,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptConfig {
    /// Weight on expected return; `1 - alpha` goes to CVaR.
    pub alpha: f64,
    pub beta: f64,
    pub prev_weights: Option<Vec<f64>>,
    /// Bound on `sum |theta - prev|`; only used together with `prev_weights`.
    pub turnover_cap: Option<f64>,
    pub lp_tol: f64,
    pub route: Route,
}

impl Default for OptConfig {
    fn default() -> Self {
        Self { alpha: 0.5, beta: 0.99, prev_weights: None, turnover_cap: Some(0.05), lp_tol: 1e-9, route: Route::Auto }
    }
}

impl OptConfig {
    pub fn with_alpha(alpha: f64) -> Self {
        Self { alpha, ..Self::default() }
    }

    pub fn validate(&self, n_assets: usize) -> Result<(), OptError> {
        let bad = |m: String| Err(OptError::InvalidConfig(m));
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad(format!("alpha {} outside [0, 1]", self.alpha));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return bad(format!("beta {} outside (0, 1)", self.beta));
        }
        if !(self.lp_tol > 0.0 && self.lp_tol < 1e-3) {
            return bad(format!("lp_tol {} outside (0, 1e-3)", self.lp_tol));
        }
        if let Some(cap) = self.turnover_cap {
            if !(cap >= 0.0 && cap.is_finite()) {
                return bad(format!("turnover cap {cap} must be finite and non-negative"));
            }
        }
        if let Some(prev) = &self.prev_weights {
            if prev.len() != n_assets {
                return bad(format!("{} previous weights for {n_assets} assets", prev.len()));
            }
            if prev.iter().any(|w| !w.is_finite() || *w < -1e-12) {
                return bad("previous weights must be finite and non-negative".into());
            }
            let sum: f64 = prev.iter().sum();
            if (sum - 1.0).abs() > 1e-6 {
                return bad(format!("previous weights sum to {sum}, not 1"));
            }
        }
        Ok(())
    }

    fn turnover(&self) -> Option<(&[f64], f64)> {
        match (&self.prev_weights, self.turnover_cap) {
            (Some(p), Some(cap)) => Some((p.as_slice(), cap)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptResult {
    pub weights: Vec<f64>,
    /// Loss threshold at the optimum, i.e. the portfolio VaR.
    pub nu: f64,
    pub objective: f64,
    pub expected_return: f64,
    pub cvar: f64,
    pub status: LpStatus,
    pub iterations: usize,
}

fn tail_scale(s: usize, beta: f64) -> f64 {
    1.0 / (s as f64 * (1.0 - beta))
}

/// Primal program; variables in order `theta (I), nu, u (S), d (I)`.
pub fn build_lp(scen: &ScenarioMatrix, cfg: &OptConfig) -> Result<LpProblem, OptError> {
    let (s_n, i_n) = (scen.n_scenarios(), scen.n_assets());
    cfg.validate(i_n)?;
    let turnover = cfg.turnover();
    let n = i_n + 1 + s_n + if turnover.is_some() { i_n } else { 0 };
    let (nu, u0, d0) = (i_n, i_n + 1, i_n + 1 + s_n);
    let mut p = LpProblem::new(n);
    let mu = scen.means();
    let k = tail_scale(s_n, cfg.beta);
    for i in 0..i_n {
        p.objective[i] = -cfg.alpha * mu[i];
        p.names[i] = format!("theta_{i}");
    }
    p.objective[nu] = 1.0 - cfg.alpha;
    p.lower[nu] = f64::NEG_INFINITY;
    p.names[nu] = "nu".into();
    for s in 0..s_n {
        p.objective[u0 + s] = (1.0 - cfg.alpha) * k;
        p.names[u0 + s] = format!("u_{s}");
    }

    let mut budget = vec![0.0; n];
    budget[..i_n].fill(1.0);
    p.add_row(budget, Sense::Eq, 1.0);
    for s in 0..s_n {
        let mut row = vec![0.0; n];
        for i in 0..i_n {
            row[i] = scen.returns[(s, i)];
        }
        row[nu] = 1.0;
        row[u0 + s] = 1.0;
        p.add_row(row, Sense::Ge, 0.0);
    }
    if let Some((prev, cap)) = turnover {
        for i in 0..i_n {
            p.names[d0 + i] = format!("d_{i}");
            let mut up = vec![0.0; n];
            up[d0 + i] = 1.0;
            up[i] = -1.0;
            p.add_row(up, Sense::Ge, -prev[i]);
            let mut down = vec![0.0; n];
            down[d0 + i] = 1.0;
            down[i] = 1.0;
            p.add_row(down, Sense::Ge, prev[i]);
        }
        let mut total = vec![0.0; n];
        total[d0..].fill(1.0);
        p.add_row(total, Sense::Le, cap);
    }
    Ok(p)
}

/// Dual program; variables `y (S), w, a (I), b (I), g` and rows: the
/// equality `sum y = 1 - alpha`, one row per asset (whose multiplier is
/// `-theta_i`) and, with turnover, one row per `d_i`.
pub fn build_dual_lp(scen: &ScenarioMatrix, cfg: &OptConfig) -> Result<LpProblem, OptError> {
    let (s_n, i_n) = (scen.n_scenarios(), scen.n_assets());
    cfg.validate(i_n)?;
    let turnover = cfg.turnover();
    let n = s_n + 1 + if turnover.is_some() { 2 * i_n + 1 } else { 0 };
    let (w, a0, b0, g) = (s_n, s_n + 1, s_n + 1 + i_n, s_n + 1 + 2 * i_n);
    let mut p = LpProblem::new(n);
    let mu = scen.means();
    let cap_y = (1.0 - cfg.alpha) * tail_scale(s_n, cfg.beta);
    for s in 0..s_n {
        p.upper[s] = cap_y;
        p.names[s] = format!("y_{s}");
    }
    p.objective[w] = -1.0;
    p.lower[w] = f64::NEG_INFINITY;
    p.names[w] = "w".into();

    let mut mass = vec![0.0; n];
    mass[..s_n].fill(1.0);
    p.add_row(mass, Sense::Eq, 1.0 - cfg.alpha);
    for i in 0..i_n {
        let mut row = vec![0.0; n];
        for s in 0..s_n {
            row[s] = scen.returns[(s, i)];
        }
        row[w] = 1.0;
        if turnover.is_some() {
            row[a0 + i] = -1.0;
            row[b0 + i] = 1.0;
        }
        p.add_row(row, Sense::Le, -cfg.alpha * mu[i]);
    }
    if let Some((prev, cap)) = turnover {
        for i in 0..i_n {
            p.objective[a0 + i] = prev[i];
            p.objective[b0 + i] = -prev[i];
            p.names[a0 + i] = format!("a_{i}");
            p.names[b0 + i] = format!("b_{i}");
            let mut row = vec![0.0; n];
            row[a0 + i] = 1.0;
            row[b0 + i] = 1.0;
            row[g] = -1.0;
            p.add_row(row, Sense::Le, 0.0);
        }
        p.objective[g] = cap;
        p.names[g] = "g".into();
    }
    Ok(p)
}

/// Smallest value of `nu + sum_s (-x_s - nu)^+ / (S (1 - beta))` and its
/// minimizer, from the losses sorted in descending order.
fn cvar_and_var(portfolio: &[f64], beta: f64) -> (f64, f64) {
    let mut losses: Vec<f64> = portfolio.iter().map(|x| -x).collect();
    losses.sort_by(|a, b| b.total_cmp(a));
    let mass = losses.len() as f64 * (1.0 - beta);
    let whole = (mass.floor() as usize).min(losses.len());
    let frac = mass - whole as f64;
    let mut sum: f64 = losses[..whole].iter().sum();
    let var = if whole < losses.len() { losses[whole] } else { losses[losses.len() - 1] };
    if frac > 0.0 && whole < losses.len() {
        sum += frac * losses[whole];
    }
    (sum / mass, var)
}

/// Scenario CVaR of the portfolio losses at level `beta`, computed exactly
/// by sorting (the Rockafellar-Uryasev minimizer is an order statistic).
pub fn cvar_of_weights(scen: &ScenarioMatrix, weights: &[f64], beta: f64) -> f64 {
    cvar_and_var(&scen.portfolio_returns(weights), beta).0
}

pub fn optimize_portfolio(scen: &ScenarioMatrix, cfg: &OptConfig) -> Result<OptResult, OptError> {
    optimize_with(&DenseSimplex { tol: cfg.lp_tol, ..DenseSimplex::default() }, scen, cfg)
}

/// [`optimize_portfolio`] with a caller-supplied solver.
pub fn optimize_with(solver: &dyn LpSolver, scen: &ScenarioMatrix, cfg: &OptConfig) -> Result<OptResult, OptError> {
    let (s_n, i_n) = (scen.n_scenarios(), scen.n_assets());
    let dual = match cfg.route {
        Route::Auto => s_n > PRIMAL_ROUTE_MAX_SCENARIOS,
        Route::Primal => false,
        Route::Dual => true,
    };
    let (mut weights, lp_nu, status, iterations) = if dual {
        let sol = solver.solve(&build_dual_lp(scen, cfg)?)?;
        let theta: Vec<f64> = sol.duals[1..=i_n].iter().map(|y| -y).collect();
        (theta, -sol.duals[0], sol.status, sol.iterations)
    } else {
        let sol = solver.solve(&build_lp(scen, cfg)?)?;
        (sol.x[..i_n].to_vec(), sol.x[i_n], sol.status, sol.iterations)
    };
    // round-off only; the solver has already certified feasibility
    weights.iter_mut().for_each(|w| *w = w.max(0.0));

    let mu = scen.means();
    let expected_return: f64 = mu.iter().zip(&weights).map(|(m, w)| m * w).sum();
    let port = scen.portfolio_returns(&weights);
    // With alpha = 1 the threshold carries no cost and the LP leaves it
    // arbitrary, so it is replaced by the exact minimizer.
    let (cvar, nu) = if cfg.alpha < 1.0 {
        let k = tail_scale(s_n, cfg.beta);
        (lp_nu + k * port.iter().map(|x| (-x - lp_nu).max(0.0)).sum::<f64>(), lp_nu)
    } else {
        cvar_and_var(&port, cfg.beta)
    };
    let objective = -cfg.alpha * expected_return + (1.0 - cfg.alpha) * cvar;
    Ok(OptResult { weights, nu, objective, expected_return, cvar, status, iterations })
}
