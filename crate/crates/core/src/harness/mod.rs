//! Monte Carlo ensembles, verdict checks, preset scenarios and the exact
//! enumeration oracle.

pub mod check;
pub mod ensemble;
pub mod figures;
pub mod oracle;
pub mod scenario;

pub use check::{check_verdict, CheckReport, CheckResult, Outcome};
pub use ensemble::{
    run_ensemble, ConfigFile, EnsembleConfig, EnsembleStats, InitialState, MatrixSource, Metric,
    Thresholds,
};
pub use oracle::{brute_force_law, ExactLaw};
pub use scenario::{figure_scenario, Preset};

/// Quantile with linear interpolation between order statistics. `sorted`
/// must be non-empty and ascending.
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Median of the finite values produced by `values`, if any.
pub(crate) fn median(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let mut v: Vec<f64> = values.into_iter().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    Some(quantile_sorted(&v, 0.5))
}
