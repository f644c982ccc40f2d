use std::cmp::Ordering;

use rayon::prelude::*;

use super::{fit_arma_garch, ArmaGarchFit, ArmaGarchSpec, FitOptions, TimeseriesError};

/// Persistence above which a selected model is replaced by the next best.
pub const PERSISTENCE_LIMIT: f64 = 0.999;

#[derive(Debug, Clone, Copy)]
pub struct SelectionOptions {
    /// Largest order tried for each of p, q, P, Q (at most two; two gives
    /// the full 81-spec grid).
    pub max_order: usize,
    pub fit: FitOptions,
    /// Fit candidate specs on the rayon pool.
    pub parallel: bool,
}

impl Default for SelectionOptions {
    fn default() -> Self {
        Self { max_order: 2, fit: FitOptions::default(), parallel: true }
    }
}

/// Ranking: lower BIC, then fewer parameters, then lexicographic orders.
pub(crate) fn rank(a: &ArmaGarchFit, b: &ArmaGarchFit) -> Ordering {
    a.bic
        .total_cmp(&b.bic)
        .then(a.spec.n_params().cmp(&b.spec.n_params()))
        .then(a.spec.cmp(&b.spec))
}

/// Picks the best-ranked fit whose persistence does not exceed the limit,
/// or the best-ranked fit overall if none qualifies.
pub(crate) fn choose(mut fits: Vec<ArmaGarchFit>) -> Result<ArmaGarchFit, TimeseriesError> {
    fits.sort_by(rank);
    match fits.iter().position(|f| f.params.persistence() <= PERSISTENCE_LIMIT) {
        Some(i) => Ok(fits.swap_remove(i)),
        None => fits.into_iter().next().ok_or(TimeseriesError::AllFitsFailed),
    }
}

/// Fits every spec with orders up to `max_order` and returns the BIC-best.
/// Failed fits are skipped.
pub fn select_model_bic(returns: &[f64], opts: &SelectionOptions) -> Result<ArmaGarchFit, TimeseriesError> {
    let specs = ArmaGarchSpec::enumerate(opts.max_order.min(super::spec::MAX_ORDER));
    let fit_one = |s: &ArmaGarchSpec| match fit_arma_garch(returns, *s, &opts.fit) {
        Ok(f) => Some(f),
        Err(e) => {
            log::debug!("skipping {s}: {e}");
            None
        }
    };
    // Precondition failures are shared by every spec; surface them directly.
    if let Err(e @ (TimeseriesError::ConstantSeries | TimeseriesError::InsufficientData { .. })) =
        fit_arma_garch(returns, specs[0], &FitOptions { restarts: 1, ..opts.fit })
    {
        return Err(e);
    }
    let fits: Vec<ArmaGarchFit> = if opts.parallel {
        specs.par_iter().filter_map(fit_one).collect()
    } else {
        specs.iter().filter_map(fit_one).collect()
    };
    choose(fits)
}
