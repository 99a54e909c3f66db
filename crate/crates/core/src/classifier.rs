//! Bayesian classification of ratio-pattern trial outcomes.
//!
//! Let `p` be the unknown per-trial probability of failing to find a ratio
//! pattern, with a uniform prior. After the first failure on trial `N` the
//! posterior mass of `p <= p1` is `1 - (N p1 + 1)(1 - p1)^N`; after `N`
//! consecutive successes it is `1 - (1 - p1)^{N+1}`. Both are evaluated
//! through `log1p`/`expm1` so that cutoffs as small as `2^-50` survive in
//! double precision.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sequencer::{Procedure1Outcome, Procedure1Report};

/// Optional polynomial gate budget `c * n^k`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PolyBound {
    pub c: f64,
    pub k_exp: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub n: usize,
    /// Variant-count cutoff defining "polynomial" (`K1`).
    pub variant_cutoff: u128,
    /// Planned trial budget (`N0`); defaults to the sequencing trial bound.
    pub trial_budget: u64,
    /// Minimum success count below which no confidence is reported.
    pub min_evidence: u64,
    pub poly_bound: Option<PolyBound>,
}

impl ClassifierConfig {
    pub fn new(n: usize, variant_cutoff: u128) -> Self {
        Self {
            n,
            variant_cutoff,
            trial_budget: crate::sequencer::sequencing_trial_bound(n),
            min_evidence: 10,
            poly_bound: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let limit = (self.n as f64).exp2();
        if self.variant_cutoff == 0 || (self.variant_cutoff as f64) >= limit {
            return Err(Error::CutoffOutOfRange {
                k1: self.variant_cutoff,
            });
        }
        Ok(())
    }

    /// `p1 = K1 / 2^n`.
    pub fn p_small(&self) -> f64 {
        self.variant_cutoff as f64 * (-(self.n as f64)).exp2()
    }
}

/// Posterior `P(p <= p1 | first failure on trial N)`.
pub fn posterior_after_failure(first_failure_trial: u64, p1: f64) -> f64 {
    let n = first_failure_trial as f64;
    if p1 >= 1.0 {
        return 1.0;
    }
    if p1 <= 0.0 {
        return 0.0;
    }
    // 1 - (N p1 + 1)(1 - p1)^N, rearranged into one expm1 so the result keeps
    // relative precision when it is tiny.
    -((n * p1).ln_1p() + n * (-p1).ln_1p()).exp_m1()
}

/// Posterior `P(p <= p1 | N consecutive pattern-consistent trials)`.
pub fn posterior_after_success(successes: u64, p1: f64) -> f64 {
    if p1 >= 1.0 {
        return 1.0;
    }
    if p1 <= 0.0 {
        return 0.0;
    }
    let n = successes as f64;
    -((n + 1.0) * (-p1).ln_1p()).exp_m1()
}

/// The a-priori chance `(1 - c n^k / 2^n)^{N0}` that a state within the
/// polynomial budget sails through the whole trial plan.
pub fn min_success_probability(config: &ClassifierConfig) -> Result<f64> {
    let bound = match config.poly_bound {
        Some(PolyBound { c, k_exp }) => c * (config.n as f64).powf(k_exp),
        None => config.variant_cutoff as f64,
    };
    let limit = (config.n as f64).exp2();
    if bound >= limit {
        return Err(Error::PolyBoundTooLarge {
            value: bound,
            limit,
        });
    }
    let q = bound / limit;
    Ok((config.trial_budget as f64 * (-q).ln_1p()).exp())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Verdict {
    LikelyPolynomial { confidence: f64 },
    UnlikelyPolynomial { posterior_p_small: f64 },
    Undecided,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PosteriorReport {
    pub verdict: Verdict,
    /// Pattern-consistent trials on success, or the index of the first
    /// failure.
    pub trials: u64,
    pub p1: f64,
    /// `K1 / 2^n`, reported as a rough closeness label only.
    pub closeness_heuristic: f64,
}

/// Turns a sequencing report into a posterior verdict.
pub fn classify(report: &Procedure1Report, config: &ClassifierConfig) -> Result<PosteriorReport> {
    config.validate()?;
    let p1 = config.p_small();
    let (verdict, trials) = match &report.outcome {
        Procedure1Outcome::FailureAtTrial { trial } => (
            Verdict::UnlikelyPolynomial {
                posterior_p_small: posterior_after_failure(*trial, p1),
            },
            *trial,
        ),
        Procedure1Outcome::Success { .. } => {
            let n = report.pattern_consistent_trials;
            if n < config.min_evidence {
                (Verdict::Undecided, n)
            } else {
                (
                    Verdict::LikelyPolynomial {
                        confidence: posterior_after_success(n, p1),
                    },
                    n,
                )
            }
        }
    };
    Ok(PosteriorReport {
        verdict,
        trials,
        p1,
        closeness_heuristic: p1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    // Adaptive Simpson quadrature, the independent check for the closed forms.
    fn simpson<F: Fn(f64) -> f64 + Copy>(f: F, a: f64, b: f64) -> f64 {
        fn recurse<F: Fn(f64) -> f64 + Copy>(
            f: F,
            a: f64,
            fa: f64,
            b: f64,
            fb: f64,
            m: f64,
            fm: f64,
            whole: f64,
            eps: f64,
            depth: u32,
        ) -> f64 {
            let lm = 0.5 * (a + m);
            let rm = 0.5 * (m + b);
            let flm = f(lm);
            let frm = f(rm);
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            let delta = left + right - whole;
            if depth == 0 || delta.abs() <= 15.0 * eps {
                left + right + delta / 15.0
            } else {
                recurse(f, a, fa, m, fm, lm, flm, left, eps * 0.5, depth - 1)
                    + recurse(f, m, fm, b, fb, rm, frm, right, eps * 0.5, depth - 1)
            }
        }
        if a == b {
            return 0.0;
        }
        let m = 0.5 * (a + b);
        let (fa, fb, fm) = (f(a), f(b), f(m));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        recurse(f, a, fa, b, fb, m, fm, whole, 1e-15, 48)
    }

    fn failure_posterior_quadrature(n: u64, p1: f64) -> f64 {
        let nf = n as f64;
        let f = move |p: f64| p * (1.0 - p).powf(nf - 1.0);
        simpson(f, 0.0, p1) / simpson(f, 0.0, 1.0)
    }

    fn success_posterior_quadrature(n: u64, p1: f64) -> f64 {
        let nf = n as f64;
        let f = move |p: f64| (1.0 - p).powf(nf);
        simpson(f, 0.0, p1) / simpson(f, 0.0, 1.0)
    }

    #[test]
    fn failure_posterior_identities() {
        // Certain cutoff, and the single-trial algebraic identity p1^2.
        assert_eq!(posterior_after_failure(7, 1.0), 1.0);
        for p1 in [1e-6, 1e-3, 0.25, 0.9] {
            let got = posterior_after_failure(1, p1);
            assert!((got - p1 * p1).abs() < 1e-15 * p1.max(1e-3));
        }
    }

    #[test]
    fn success_posterior_identities() {
        // Zero evidence leaves the uniform prior mass p1.
        for p1 in [1e-9, 0.1, 0.5] {
            assert!((posterior_after_success(0, p1) - p1).abs() < 1e-15);
        }
    }

    #[test]
    fn worked_confidence_example() {
        let got = posterior_after_success(10_000_000, (-20.0f64).exp2());
        assert!(got > 0.99990 && got < 0.99995, "got {got}");
    }

    #[test]
    fn failure_posterior_matches_quadrature() {
        for &n in &[1u64, 2, 5, 10, 50, 200, 1000] {
            for &p1 in &[1e-6, 1e-4, 1e-2, 0.1, 0.5] {
                let closed = posterior_after_failure(n, p1);
                let quad = failure_posterior_quadrature(n, p1);
                assert!(
                    (closed - quad).abs() < 1e-10,
                    "N={n} p1={p1}: {closed} vs {quad}"
                );
            }
        }
    }

    #[test]
    fn success_posterior_matches_quadrature() {
        for &n in &[0u64, 1, 10, 100, 1000] {
            for &p1 in &[1e-6, 1e-4, 1e-2, 0.05, 0.5] {
                let closed = posterior_after_success(n, p1);
                let quad = success_posterior_quadrature(n, p1);
                assert!(
                    (closed - quad).abs() < 1e-10,
                    "N={n} p1={p1}: {closed} vs {quad}"
                );
            }
        }
    }

    #[test]
    fn posteriors_are_monotone() {
        let grid = [1e-8, 1e-6, 1e-4, 1e-2, 0.1, 0.3, 0.7, 0.99];
        for n in [1u64, 3, 17, 400] {
            let mut prev_f = 0.0;
            let mut prev_s = 0.0;
            for &p1 in &grid {
                let f = posterior_after_failure(n, p1);
                let s = posterior_after_success(n, p1);
                assert!(f >= prev_f && s >= prev_s);
                prev_f = f;
                prev_s = s;
            }
        }
        for &p1 in &[1e-6, 1e-2, 0.3] {
            let mut prev = 0.0;
            for n in [0u64, 1, 2, 5, 20, 100, 10_000] {
                let s = posterior_after_success(n, p1);
                assert!(s >= prev);
                prev = s;
            }
        }
    }

    #[test]
    fn tiny_cutoffs_survive_log_space() {
        let p1 = (-50.0f64).exp2();
        let got = posterior_after_success(10_000_000, p1);
        // Roughly (N+1) * p1; naive powering would round this to zero.
        assert!(got > 8.0e-9 && got < 1.0e-8, "got {got}");
        let fail = posterior_after_failure(1, (-20.0f64).exp2());
        assert!(fail > 8.0e-13 && fail < 1.0e-12, "got {fail}");
    }

    #[test]
    fn min_success_probability_cases() {
        let mut cfg = ClassifierConfig::new(50, 1 << 30);
        cfg.trial_budget = 10_000;
        cfg.poly_bound = Some(PolyBound { c: 0.0, k_exp: 2.0 });
        assert_eq!(min_success_probability(&cfg).unwrap(), 1.0);

        // 2^30 out of 2^50 with a 10^4-trial plan stays near 1.
        cfg.poly_bound = None;
        let p0 = min_success_probability(&cfg).unwrap();
        assert!((p0 - 0.990506).abs() < 1e-4, "got {p0}");

        let mut half = ClassifierConfig::new(1, 1);
        half.trial_budget = 1;
        let p0 = min_success_probability(&half).unwrap();
        assert!((p0 - 0.5).abs() < 1e-12);

        let mut bad = ClassifierConfig::new(4, 3);
        bad.poly_bound = Some(PolyBound { c: 100.0, k_exp: 3.0 });
        assert!(matches!(
            min_success_probability(&bad),
            Err(Error::PolyBoundTooLarge { .. })
        ));
    }

    #[test]
    fn classify_maps_outcomes_to_verdicts() {
        let cfg = ClassifierConfig::new(20, 1);
        let failure = Procedure1Report::failure_for_tests(1);
        let got = classify(&failure, &cfg).unwrap();
        match got.verdict {
            Verdict::UnlikelyPolynomial { posterior_p_small } => {
                assert!(posterior_p_small < 1e-10);
            }
            other => panic!("unexpected verdict {other:?}"),
        }

        let success = Procedure1Report::success_for_tests(10_000_000);
        let mut cfg50 = ClassifierConfig::new(50, 1 << 30);
        cfg50.trial_budget = 10_000_000;
        let got = classify(&success, &cfg50).unwrap();
        match got.verdict {
            Verdict::LikelyPolynomial { confidence } => {
                assert!(confidence > 0.9999 && confidence < 0.99995);
            }
            other => panic!("unexpected verdict {other:?}"),
        }

        let thin = Procedure1Report::success_for_tests(0);
        let got = classify(&thin, &cfg50).unwrap();
        assert_eq!(got.verdict, Verdict::Undecided);
    }
}
