//! Cohesion scoring, septile-stratified offline simulation and reports.

mod cohesion;
mod report;
mod simulation;

pub use cohesion::{
    cohesion, cohesion_scores, cohesion_summary, mean_cohesion, CohesionReport, BOOTSTRAP_RESAMPLES,
};
pub use report::{cohesion_tsv, recall_tsv, text_summary, write_reports, CohesionRow};
pub use simulation::{
    compute_septiles, holdout_users, precision_at_k, recall_at_k, response_dots, run_offline_eval,
    simulate_responses, summarize, EvalConfig, EvalMethod, HoldoutSet, HoldoutUser, RecallSummary,
    SeptileMode, SeptileTable, Septiles, SimulationResult, DEFAULT_EVAL_K, DEFAULT_HOLDOUT,
    PERCENTILE_LEVELS,
};

/// Linear-interpolation quantile of ascending `sorted` at level `p ∈ [0, 1]`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty slice");
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[cfg(test)]
mod tests {
    use super::quantile_sorted;

    #[test]
    fn quantile_interpolates() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile_sorted(&v, 0.0), 1.0);
        assert_eq!(quantile_sorted(&v, 0.5), 3.0);
        assert_eq!(quantile_sorted(&v, 0.625), 3.5);
        assert_eq!(quantile_sorted(&v, 1.0), 5.0);
        assert_eq!(quantile_sorted(&[7.0], 0.3), 7.0);
    }
}
