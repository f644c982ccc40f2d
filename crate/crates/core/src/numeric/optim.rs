/// Options for [`nelder_mead`].
#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    /// Absolute objective tolerance. The search stops once the best value
    /// improved by less than this over a full cycle of `n + 1` iterations
    /// and the simplex values span less than it.
    pub ftol: f64,
    pub max_evals: usize,
    /// Initial simplex edge length along each coordinate.
    pub initial_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            ftol: 1e-8,
            max_evals: 20_000,
            initial_step: 0.25,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Minimizes `f` with the Nelder-Mead simplex method.
///
/// Non-finite objective values are treated as `+inf`, so infeasible regions
/// simply repel the simplex.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], opts: &NelderMeadOptions) -> NelderMeadResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut eval = |x: &[f64], count: &mut usize| {
        *count += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    let mut evals = 0usize;
    if n == 0 {
        let fx = eval(x0, &mut evals);
        return NelderMeadResult { x: vec![], fx, evals, converged: true };
    }

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += opts.initial_step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v, &mut evals)).collect();

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut order: Vec<usize> = (0..=n).collect();
    let mut iter = 0usize;
    let mut cycle_best = f64::INFINITY;
    let mut converged = false;
    let mut centroid = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut trial2 = vec![0.0; n];

    while evals < opts.max_evals {
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let best = order[0];
        let worst = order[n];
        let second = order[n - 1];

        if iter % (n + 1) == 0 {
            let spread = values[worst] - values[best];
            if cycle_best.is_finite()
                && cycle_best - values[best] < opts.ftol
                && spread.is_finite()
                && spread < opts.ftol
            {
                converged = true;
                break;
            }
            cycle_best = values[best];
        }
        iter += 1;

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for &idx in order.iter().take(n) {
            for (c, v) in centroid.iter_mut().zip(&simplex[idx]) {
                *c += v / n as f64;
            }
        }

        for j in 0..n {
            trial[j] = centroid[j] + alpha * (centroid[j] - simplex[worst][j]);
        }
        let fr = eval(&trial, &mut evals);

        if fr < values[best] {
            for j in 0..n {
                trial2[j] = centroid[j] + gamma * (trial[j] - centroid[j]);
            }
            let fe = eval(&trial2, &mut evals);
            if fe < fr {
                simplex[worst].copy_from_slice(&trial2);
                values[worst] = fe;
            } else {
                simplex[worst].copy_from_slice(&trial);
                values[worst] = fr;
            }
            continue;
        }
        if fr < values[second] {
            simplex[worst].copy_from_slice(&trial);
            values[worst] = fr;
            continue;
        }

        // contraction, outside or inside
        let outside = fr < values[worst];
        for j in 0..n {
            trial2[j] = if outside {
                centroid[j] + rho * (trial[j] - centroid[j])
            } else {
                centroid[j] + rho * (simplex[worst][j] - centroid[j])
            };
        }
        let fc = eval(&trial2, &mut evals);
        if (outside && fc <= fr) || (!outside && fc < values[worst]) {
            simplex[worst].copy_from_slice(&trial2);
            values[worst] = fc;
            continue;
        }

        let anchor = simplex[best].clone();
        for &idx in order.iter().skip(1) {
            for j in 0..n {
                simplex[idx][j] = anchor[j] + sigma * (simplex[idx][j] - anchor[j]);
            }
            values[idx] = eval(&simplex[idx], &mut evals);
        }
    }

    let best = (0..=n)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap_or(0);
    NelderMeadResult {
        x: simplex[best].clone(),
        fx: values[best],
        evals,
        converged,
    }
}

/// Golden-section search for the minimum of a unimodal function on `[a, b]`.
/// Returns `(argmin, min)`.
pub fn golden_section_min<F>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    // the bracket endpoints are candidates too; keep whichever is lowest
    let mut best = if fc < fd { (c, fc) } else { (d, fd) };
    for x in [a, b] {
        let fx = f(x);
        if fx < best.1 {
            best = (x, fx);
        }
    }
    best
}
