//! Exact binomial hypothesis testing: converts an n_runs x n_predictions
//! correctness matrix into the set of predictions solved significantly more
//! often than Bernoulli(1/c) chance.
//!
//! The test is one-sided (upper tail): only excess correctness counts. No
//! multiple-testing correction is applied across predictions; a flat alpha
//! is used per prediction and exposed as a parameter.

use crate::training::RunMatrix;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("k = {k} outside [0, n = {n}]")]
    KOutOfRange { n: usize, k: usize },
    #[error("success probability {0} outside (0,1)")]
    BadProbability(f64),
    #[error("alpha {0} outside (0,1)")]
    BadAlpha(f64),
    #[error("num_classes must be >= 2, got {0}")]
    TooFewClasses(usize),
}

/// Predictions passing the binomial test for one (model, dataset) pair,
/// with the test metadata needed to reproduce membership.
#[derive(Debug, Clone, PartialEq)]
pub struct SolvableSet {
    pub dataset_name: String,
    pub model_name: String,
    /// Member prediction ids, sorted ascending; a subset of the universe.
    pub prediction_ids: Vec<usize>,
    pub universe_size: usize,
    pub alpha: f64,
    pub n_runs: usize,
    pub num_classes: usize,
}

impl SolvableSet {
    pub fn len(&self) -> usize {
        self.prediction_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prediction_ids.is_empty()
    }

    /// |S| / |P|.
    pub fn ratio(&self) -> f64 {
        self.prediction_ids.len() as f64 / self.universe_size as f64
    }
}

/// Exact P(X >= k) for X ~ Binomial(n, p), evaluated in log space with
/// max-shifted compensated summation.
pub fn binom_upper_tail(n: usize, k: usize, p: f64) -> Result<f64, StatsError> {
    if k > n {
        return Err(StatsError::KOutOfRange { n, k });
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(StatsError::BadProbability(p));
    }
    if k == 0 {
        return Ok(1.0);
    }
    let ln_fact = ln_factorials(n);
    let ln_p = p.ln();
    let ln_q = (-p).ln_1p();
    let mut log_terms = Vec::with_capacity(n - k + 1);
    let mut max_log = f64::NEG_INFINITY;
    for i in k..=n {
        let lt = ln_fact[n] - ln_fact[i] - ln_fact[n - i] + i as f64 * ln_p + (n - i) as f64 * ln_q;
        if lt > max_log {
            max_log = lt;
        }
        log_terms.push(lt);
    }
    // Kahan-compensated sum of the rescaled terms.
    let mut sum = 0.0;
    let mut comp = 0.0;
    for lt in log_terms {
        let term = (lt - max_log).exp();
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    Ok((max_log.exp() * sum).min(1.0))
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(0.0);
    let mut acc = 0.0;
    let mut comp = 0.0;
    for i in 1..=n {
        let y = (i as f64).ln() - comp;
        let t = acc + y;
        comp = (t - acc) - y;
        acc = t;
        out.push(acc);
    }
    out
}

/// Smallest k with P(X >= k) <= alpha; returns n+1 when even k = n fails,
/// i.e. the prediction can never be declared solved at this n and alpha.
pub fn critical_count(n: usize, p: f64, alpha: f64) -> Result<usize, StatsError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(StatsError::BadAlpha(alpha));
    }
    if binom_upper_tail(n, n, p)? > alpha {
        return Ok(n + 1);
    }
    // binary search over the nonincreasing tail
    let mut lo = 0;
    let mut hi = n;
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if binom_upper_tail(n, mid, p)? <= alpha {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(lo)
}

/// Membership test over the whole run matrix: prediction i is solvable iff
/// its correct-run count reaches critical_count(n_runs, 1/c, alpha).
/// Aborted runs were recorded as all-incorrect, keeping n fixed.
pub fn solvable_set(runs: &RunMatrix, alpha: f64) -> Result<SolvableSet, StatsError> {
    if runs.num_classes < 2 {
        return Err(StatsError::TooFewClasses(runs.num_classes));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(StatsError::BadAlpha(alpha));
    }
    let p = 1.0 / runs.num_classes as f64;
    let threshold = critical_count(runs.n_runs, p, alpha)?;
    let counts = runs.column_correct_counts();
    let prediction_ids = runs
        .prediction_ids
        .iter()
        .zip(&counts)
        .filter(|&(_, &k)| k >= threshold)
        .map(|(&id, _)| id)
        .collect();
    Ok(SolvableSet {
        dataset_name: runs.dataset_name.clone(),
        model_name: runs.model_name.clone(),
        prediction_ids,
        universe_size: runs.n_predictions,
        alpha,
        n_runs: runs.n_runs,
        num_classes: runs.num_classes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::training::RunMatrix;

    #[test]
    fn tail_at_zero_is_one() {
        assert_eq!(binom_upper_tail(10, 0, 0.5).unwrap(), 1.0);
    }

    #[test]
    fn tail_at_n_is_p_to_the_n() {
        let t = binom_upper_tail(10, 10, 0.5).unwrap();
        assert!((t - 0.0009765625).abs() < 1e-15);
    }

    #[test]
    fn tail_midpoint_matches_hand_summation() {
        // sum of C(10,i)/2^10 for i = 5..10 is 638/1024
        let t = binom_upper_tail(10, 5, 0.5).unwrap();
        assert!((t - 0.623046875).abs() < 1e-13);
    }

    #[test]
    fn tail_is_nonincreasing_in_k() {
        for p in [0.5, 1.0 / 3.0, 1.0 / 7.0] {
            let mut prev = f64::INFINITY;
            for k in 0..=50 {
                let t = binom_upper_tail(50, k, p).unwrap();
                assert!(t <= prev + 1e-15);
                prev = t;
            }
        }
    }

    #[test]
    fn tail_domain_errors() {
        assert!(binom_upper_tail(5, 6, 0.5).is_err());
        assert!(binom_upper_tail(5, 2, 0.0).is_err());
        assert!(binom_upper_tail(5, 2, 1.0).is_err());
    }

    #[test]
    fn critical_count_known_values() {
        // exact-rational summation gives 66 for n=100, p=1/2, alpha=0.001
        assert_eq!(critical_count(100, 0.5, 0.001).unwrap(), 66);
        // and 27 for p = 1/7 (normal approx: mean 14.29, sigma 3.50)
        assert_eq!(critical_count(100, 1.0 / 7.0, 0.001).unwrap(), 27);
        let k = critical_count(100, 0.5, 0.001).unwrap();
        assert!((60..=70).contains(&k));
        let k7 = critical_count(100, 1.0 / 7.0, 0.001).unwrap();
        assert!((25..=30).contains(&k7));
    }

    #[test]
    fn critical_count_boundary_consistency() {
        for (n, p) in [(100usize, 0.5), (37, 0.25), (200, 0.1)] {
            let k = critical_count(n, p, 0.001).unwrap();
            assert!(binom_upper_tail(n, k, p).unwrap() <= 0.001);
            if k > 0 {
                assert!(binom_upper_tail(n, k - 1, p).unwrap() > 0.001);
            }
        }
    }

    #[test]
    fn critical_count_unattainable_returns_n_plus_one() {
        // tail(3,3,1/2) = 1/8 > 0.001: even all-correct is not significant
        assert_eq!(critical_count(3, 0.5, 0.001).unwrap(), 4);
    }

    #[test]
    fn critical_count_alpha_near_one() {
        // tail(0) = 1 > alpha always, so k* >= 1; tail(1) = 1 - (1-p)^n decides:
        // n = 9: tail(1) = 1 - 1/512 <= 0.999, n = 10: tail(1) = 1 - 1/1024 > 0.999
        assert_eq!(critical_count(9, 0.5, 0.999).unwrap(), 1);
        assert_eq!(critical_count(10, 0.5, 0.999).unwrap(), 2);
    }

    #[test]
    fn critical_count_monotone_in_alpha() {
        let mut prev = usize::MAX;
        for alpha in [0.0001, 0.001, 0.01, 0.1, 0.5] {
            let k = critical_count(80, 0.3, alpha).unwrap();
            assert!(k <= prev);
            prev = k;
        }
    }

    fn runs_with_counts(counts: &[usize], n_runs: usize, c: usize) -> RunMatrix {
        let correct = (0..n_runs)
            .map(|r| counts.iter().map(|&k| r < k).collect())
            .collect();
        RunMatrix {
            model_name: "features".into(),
            dataset_name: "toy".into(),
            num_classes: c,
            n_runs,
            n_predictions: counts.len(),
            prediction_ids: (0..counts.len()).collect(),
            correct,
            per_run_val_accuracy: vec![1.0; n_runs],
            aborted_runs: vec![],
        }
    }

    #[test]
    fn solvable_membership_at_the_boundary() {
        // n = 100, c = 2: threshold is 66
        let k_star = critical_count(100, 0.5, 0.001).unwrap();
        let rm = runs_with_counts(&[100, 0, k_star - 1, k_star], 100, 2);
        let s = solvable_set(&rm, 0.001).unwrap();
        assert_eq!(s.prediction_ids, vec![0, 3]);
        assert_eq!(s.universe_size, 4);
    }

    #[test]
    fn solvable_set_monotone_in_alpha() {
        let rm = runs_with_counts(&[100, 80, 66, 60, 40, 0], 100, 2);
        let tight = solvable_set(&rm, 0.0001).unwrap();
        let loose = solvable_set(&rm, 0.01).unwrap();
        for id in &tight.prediction_ids {
            assert!(loose.prediction_ids.contains(id));
        }
    }

    #[test]
    fn solvable_set_rejects_degenerate_classes() {
        let rm = runs_with_counts(&[1], 2, 1);
        assert!(matches!(
            solvable_set(&rm, 0.001),
            Err(StatsError::TooFewClasses(1))
        ));
    }
}
