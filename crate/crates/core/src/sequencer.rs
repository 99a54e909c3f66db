//! Recovery of the hidden qubit sequence of a minimal standard state from
//! coefficient ratio tests.
//!
//! A trial retrieves four coefficients for a trio of qubits `(a, b, c)` plus
//! a fixed filler assignment on the remaining qubits, then checks which of
//! three cross-multiplied ratio patterns holds. The satisfied pattern names
//! the trio's middle qubit; repeating over trios orders all qubits up to one
//! global reversal, after which each level's coefficient pair follows from a
//! single amplitude ratio.
//!
//! Fillers are drawn uniformly from the even-parity basis states of the
//! remaining `n-3` qubits (`2^{n-4}` choices): a standard-form state carries
//! amplitude only on even-parity basis states, so odd fillers would retrieve
//! four structural zeros and reveal nothing.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::standard::LevelPair;
use crate::state::StateVector;

/// Absolute floor inside the relative ratio-pattern comparison.
pub const PRODUCT_FLOOR: f64 = 1e-24;

/// Default relative tolerance for ratio-pattern equality.
pub const DEFAULT_RATIO_TOL: f64 = 1e-9;

/// Fillers retried per trio before an ambiguity or degeneracy is reported.
pub const FILLER_RETRIES: usize = 8;

/// Read access to the coefficients of a candidate state. Every retrieval
/// increments the counter exactly once.
pub trait CoefficientOracle {
    fn num_qubits(&self) -> usize;
    /// Coefficient of the basis state `bits` (`bits[j]` = value of `q_{j+1}`).
    fn retrieve(&mut self, bits: &[bool]) -> Complex64;
    fn retrievals(&self) -> u64;
}

/// Oracle backed by a simulated state vector.
pub struct StateOracle<'a> {
    state: &'a StateVector,
    count: u64,
}

impl<'a> StateOracle<'a> {
    pub fn new(state: &'a StateVector) -> Self {
        Self { state, count: 0 }
    }
}

impl CoefficientOracle for StateOracle<'_> {
    fn num_qubits(&self) -> usize {
        self.state.num_qubits()
    }

    fn retrieve(&mut self, bits: &[bool]) -> Complex64 {
        self.count += 1;
        self.state.get_amplitude(bits)
    }

    fn retrievals(&self) -> u64 {
        self.count
    }
}

/// Outcome of one ratio-pattern check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrioOutcome {
    /// Exactly one pattern held; the named qubit sits between the other two.
    Middle(usize),
    /// No pattern held within tolerance.
    NoPattern,
    /// Two or more patterns held; consistent with a minimal standard state
    /// whose pairs make the patterns coincide.
    Ambiguous,
}

/// Result of one trio retrieval: the verdict plus the four coefficients
/// `(C00, C11, C01, C10)`.
#[derive(Clone, Debug)]
pub struct TrioVerdict {
    pub middle: TrioOutcome,
    pub coefficients: [Complex64; 4],
}

fn products_equal(lhs: Complex64, rhs: Complex64, tol: f64) -> bool {
    (lhs - rhs).norm() <= tol * lhs.norm().max(rhs.norm()).max(PRODUCT_FLOOR)
}

/// Decides the middle qubit of `(a, b, c)` from the four retrieved
/// coefficients. Equality is tested in cross-multiplied form, which is
/// invariant under a common rescaling of all four coefficients.
pub fn classify_patterns(
    coefficients: &[Complex64; 4],
    a: usize,
    b: usize,
    c: usize,
    tol: f64,
) -> Result<TrioOutcome> {
    let [c00, c11, c01, c10] = *coefficients;
    let candidates = [
        (b, c00 * c10, c01 * c11),
        (c, c00 * c11, c01 * c10),
        (a, c00 * c01, c10 * c11),
    ];
    let all_trivial = candidates
        .iter()
        .all(|(_, l, r)| l.norm() < PRODUCT_FLOOR && r.norm() < PRODUCT_FLOOR);
    if all_trivial {
        return Err(Error::DegenerateTrio);
    }
    let holding: Vec<usize> = candidates
        .iter()
        .filter(|(_, l, r)| products_equal(*l, *r, tol))
        .map(|(q, _, _)| *q)
        .collect();
    Ok(match holding.len() {
        0 => TrioOutcome::NoPattern,
        1 => TrioOutcome::Middle(holding[0]),
        _ => TrioOutcome::Ambiguous,
    })
}

/// Retrieves the four coefficients of trio `(a, b, c)` over `filler` and
/// checks the three ratio patterns. The filler must assign exactly the
/// `n - 3` qubits outside the trio.
pub fn trio_test<O: CoefficientOracle + ?Sized>(
    oracle: &mut O,
    a: usize,
    b: usize,
    c: usize,
    filler: &[(usize, bool)],
    tol: f64,
) -> Result<TrioVerdict> {
    let n = oracle.num_qubits();
    let mut covered = vec![false; n + 1];
    for q in [a, b, c] {
        if q == 0 || q > n {
            return Err(Error::QubitOutOfRange { qubit: q, n });
        }
        if covered[q] {
            return Err(Error::DuplicateQubit { qubit: q });
        }
        covered[q] = true;
    }
    for (q, _) in filler {
        if *q == 0 || *q > n {
            return Err(Error::QubitOutOfRange { qubit: *q, n });
        }
        if covered[*q] {
            return Err(Error::DuplicateAssignment { qubit: *q });
        }
        covered[*q] = true;
    }
    if covered[1..].iter().any(|&seen| !seen) {
        return Err(Error::BadFiller { expected: n - 3 });
    }

    let mut base = vec![false; n];
    for (q, bit) in filler {
        base[q - 1] = *bit;
    }
    let mut fetch = |a_bit: bool, b_bit: bool, c_bit: bool| {
        let mut bits = base.clone();
        bits[a - 1] = a_bit;
        bits[b - 1] = b_bit;
        bits[c - 1] = c_bit;
        oracle.retrieve(&bits)
    };
    let coefficients = [
        fetch(false, false, false), // C00
        fetch(true, true, false),   // C11
        fetch(false, true, true),   // C01
        fetch(true, false, true),   // C10
    ];
    let middle = classify_patterns(&coefficients, a, b, c, tol)?;
    Ok(TrioVerdict {
        middle,
        coefficients,
    })
}

/// Uniform draw from the even-parity basis states of the qubits outside
/// `exclude`.
pub fn random_even_filler<R: Rng>(n: usize, exclude: &[usize], rng: &mut R) -> Vec<(usize, bool)> {
    let rest: Vec<usize> = (1..=n).filter(|q| !exclude.contains(q)).collect();
    let mut filler: Vec<(usize, bool)> = Vec::with_capacity(rest.len());
    let mut parity = false;
    for (i, q) in rest.iter().enumerate() {
        let bit = if i + 1 == rest.len() {
            parity
        } else {
            rng.random::<bool>()
        };
        parity ^= bit;
        filler.push((*q, bit));
    }
    filler
}

/// Recovered qubit sequence; only determined up to a full reversal.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QubitOrder {
    pub sequence: Vec<usize>,
}

impl QubitOrder {
    pub fn reversed(&self) -> QubitOrder {
        let mut sequence = self.sequence.clone();
        sequence.reverse();
        QubitOrder { sequence }
    }

    pub fn matches_up_to_reversal(&self, other: &[usize]) -> bool {
        self.sequence == other || self.reversed().sequence == other
    }
}

/// One logged trial.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trio: [usize; 3],
    pub filler: Vec<(usize, u8)>,
    pub verdict: TrioOutcome,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Procedure1Outcome {
    Success {
        order: QubitOrder,
        pairs: Vec<LevelPair>,
    },
    FailureAtTrial {
        trial: u64,
    },
}

/// Full record of one sequencing run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Procedure1Report {
    pub outcome: Procedure1Outcome,
    pub trials_used: u64,
    pub sequencing_trials: u64,
    pub confirm_trials: u64,
    /// Trials whose retrievals were consistent with a ratio pattern; the
    /// evidence count fed into the Bayesian classifier.
    pub pattern_consistent_trials: u64,
    pub retrievals_used: u64,
    pub trial_log: Vec<TrialRecord>,
}

#[cfg(test)]
impl Procedure1Report {
    pub(crate) fn failure_for_tests(trial: u64) -> Self {
        Self {
            outcome: Procedure1Outcome::FailureAtTrial { trial },
            trials_used: trial,
            sequencing_trials: trial,
            confirm_trials: 0,
            pattern_consistent_trials: trial.saturating_sub(1),
            retrievals_used: 4 * trial,
            trial_log: Vec::new(),
        }
    }

    pub(crate) fn success_for_tests(consistent: u64) -> Self {
        Self {
            outcome: Procedure1Outcome::Success {
                order: QubitOrder {
                    sequence: vec![1, 2, 3],
                },
                pairs: Vec::new(),
            },
            trials_used: consistent,
            sequencing_trials: 1,
            confirm_trials: consistent.saturating_sub(1),
            pattern_consistent_trials: consistent,
            retrievals_used: 4 * consistent,
            trial_log: Vec::new(),
        }
    }
}

/// Worst-case trial count for sequencing `n` qubits: inserting into a known
/// sequence of `h` costs at most `floor((h+1)/2)` trials.
pub fn sequencing_trial_bound(n: usize) -> u64 {
    (3..=n).map(|h| ((h + 1) / 2) as u64).sum()
}

enum SeqFail {
    NoPattern { trial: u64 },
    Fatal(Error),
}

struct TrialContext<'a, O: CoefficientOracle + ?Sized> {
    oracle: &'a mut O,
    n: usize,
    tol: f64,
    rng: ChaCha8Rng,
    trials: u64,
    consistent: u64,
    log: Vec<TrialRecord>,
}

impl<'a, O: CoefficientOracle + ?Sized> TrialContext<'a, O> {
    fn new(oracle: &'a mut O, tol: f64, seed: u64) -> Self {
        let n = oracle.num_qubits();
        Self {
            oracle,
            n,
            tol,
            rng: ChaCha8Rng::seed_from_u64(seed),
            trials: 0,
            consistent: 0,
            log: Vec::new(),
        }
    }

    /// One trial: a fresh random even filler for the trio, then the pattern
    /// check. Ambiguous and degenerate retrievals are retried with new
    /// fillers; they are consistent with a minimal standard state and never
    /// count as pattern failures.
    fn decide(&mut self, a: usize, b: usize, c: usize) -> std::result::Result<usize, SeqFail> {
        for _ in 0..FILLER_RETRIES {
            let filler = random_even_filler(self.n, &[a, b, c], &mut self.rng);
            self.trials += 1;
            let verdict = match trio_test(self.oracle, a, b, c, &filler, self.tol) {
                Ok(v) => v.middle,
                Err(Error::DegenerateTrio) => {
                    self.consistent += 1;
                    self.log.push(TrialRecord {
                        trio: [a, b, c],
                        filler: filler.iter().map(|(q, v)| (*q, u8::from(*v))).collect(),
                        verdict: TrioOutcome::Ambiguous,
                    });
                    continue;
                }
                Err(e) => return Err(SeqFail::Fatal(e)),
            };
            self.log.push(TrialRecord {
                trio: [a, b, c],
                filler: filler.iter().map(|(q, v)| (*q, u8::from(*v))).collect(),
                verdict,
            });
            match verdict {
                TrioOutcome::Middle(q) => {
                    self.consistent += 1;
                    return Ok(q);
                }
                TrioOutcome::Ambiguous => {
                    self.consistent += 1;
                }
                TrioOutcome::NoPattern => {
                    return Err(SeqFail::NoPattern { trial: self.trials })
                }
            }
        }
        Err(SeqFail::Fatal(Error::AmbiguousTrio {
            a,
            b,
            c,
            retries: FILLER_RETRIES,
        }))
    }

    /// Window search inserting `new_qubit` into `known`; returns the 0-based
    /// insertion position.
    fn insert_position(
        &mut self,
        known: &[usize],
        new_qubit: usize,
    ) -> std::result::Result<usize, SeqFail> {
        let mut lo = 0usize;
        let mut hi = known.len() - 1;
        loop {
            if lo > hi {
                return Ok(lo);
            }
            if lo == hi {
                let left = known[lo - 1];
                let here = known[lo];
                let middle = self.decide(left, here, new_qubit)?;
                return if middle == new_qubit {
                    Ok(lo)
                } else if middle == here {
                    Ok(lo + 1)
                } else {
                    Err(SeqFail::Fatal(Error::InconsistentTrio {
                        a: left,
                        b: here,
                        c: new_qubit,
                    }))
                };
            }
            let first = known[lo];
            let last = known[hi];
            let middle = self.decide(first, last, new_qubit)?;
            if middle == new_qubit {
                lo += 1;
                hi -= 1;
            } else if middle == first {
                return Ok(lo);
            } else {
                return Ok(hi + 1);
            }
        }
    }

    fn sequence(&mut self) -> std::result::Result<QubitOrder, SeqFail> {
        let middle = self.decide(1, 2, 3)?;
        if ![1, 2, 3].contains(&middle) {
            return Err(SeqFail::Fatal(Error::InconsistentTrio { a: 1, b: 2, c: 3 }));
        }
        let outer: Vec<usize> = [1, 2, 3].into_iter().filter(|&q| q != middle).collect();
        let mut sequence = vec![outer[0], middle, outer[1]];
        for q in 4..=self.n {
            let pos = self.insert_position(&sequence, q)?;
            sequence.insert(pos, q);
        }
        Ok(QubitOrder { sequence })
    }
}

/// Recovers the full qubit order of a minimal standard state.
///
/// Fails with [`Error::NoRatioPattern`] when a trial finds none of the three
/// patterns, which for generic states rules out minimal standard form.
pub fn sequence_all<O: CoefficientOracle + ?Sized>(
    oracle: &mut O,
    tol: f64,
    seed: u64,
) -> Result<(QubitOrder, u64)> {
    let n = oracle.num_qubits();
    if n < 3 {
        return Err(Error::TooFewQubits { n });
    }
    let mut ctx = TrialContext::new(oracle, tol, seed);
    match ctx.sequence() {
        Ok(order) => Ok((order, ctx.trials)),
        Err(SeqFail::NoPattern { trial }) => Err(Error::NoRatioPattern { trial }),
        Err(SeqFail::Fatal(e)) => Err(e),
    }
}

/// Inserts one qubit into a known partial sequence, returning the 0-based
/// insertion position and the number of trials used (at most
/// `floor((len+1)/2)`).
pub fn insert_qubit<O: CoefficientOracle + ?Sized>(
    oracle: &mut O,
    known: &[usize],
    new_qubit: usize,
    tol: f64,
    seed: u64,
) -> Result<(usize, u64)> {
    if known.len() < 3 {
        return Err(Error::TooFewQubits { n: known.len() });
    }
    let mut ctx = TrialContext::new(oracle, tol, seed);
    match ctx.insert_position(known, new_qubit) {
        Ok(pos) => Ok((pos, ctx.trials)),
        Err(SeqFail::NoPattern { trial }) => Err(Error::NoRatioPattern { trial }),
        Err(SeqFail::Fatal(e)) => Err(e),
    }
}

/// Reads each level's coefficient pair off two retrievals and one division:
/// the all-zero basis state against the basis state with ones at the level's
/// two sequence positions. The recovered pair is normalized with its second
/// component real non-negative (the pair-global phase is a convention).
pub fn extract_pairs<O: CoefficientOracle + ?Sized>(
    oracle: &mut O,
    order: &QubitOrder,
) -> Result<Vec<LevelPair>> {
    let n = oracle.num_qubits();
    if order.sequence.len() != n {
        return Err(Error::InvalidInput(format!(
            "sequence covers {} qubits, state has {n}",
            order.sequence.len()
        )));
    }
    let mut pairs = Vec::with_capacity(n - 1);
    for level in 1..=n - 1 {
        let zeros = vec![false; n];
        let numerator = oracle.retrieve(&zeros);
        let mut ones = vec![false; n];
        ones[order.sequence[level - 1] - 1] = true;
        ones[order.sequence[level] - 1] = true;
        let denominator = oracle.retrieve(&ones);
        if denominator.norm() == 0.0 {
            return Err(Error::DegeneratePair { level });
        }
        let ratio = numerator / denominator;
        if !ratio.re.is_finite() || !ratio.im.is_finite() {
            return Err(Error::DegeneratePair { level });
        }
        let beta = 1.0 / (1.0 + ratio.norm_sqr()).sqrt();
        let alpha = ratio * beta;
        pairs.push(LevelPair::new(alpha, Complex64::new(beta, 0.0))?);
    }
    Ok(pairs)
}

/// Configuration for a full sequencing run.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Procedure1Config {
    pub tol: f64,
    /// Additional random trios run after sequencing to grow the Bayesian
    /// evidence count.
    pub extra_confirm_trials: u64,
    pub seed: u64,
}

impl Default for Procedure1Config {
    fn default() -> Self {
        Self {
            tol: DEFAULT_RATIO_TOL,
            extra_confirm_trials: 0,
            seed: 0,
        }
    }
}

/// Runs sequencing, pair extraction, and optional confirmation trials.
///
/// A trial that finds no ratio pattern ends the run with
/// [`Procedure1Outcome::FailureAtTrial`]; unresolvable ambiguity or
/// degeneracy surfaces as a hard error instead, since those retrievals do not
/// contradict minimal standard form.
pub fn run_procedure1<O: CoefficientOracle + ?Sized>(
    oracle: &mut O,
    config: &Procedure1Config,
) -> Result<Procedure1Report> {
    let n = oracle.num_qubits();
    if n < 3 {
        return Err(Error::TooFewQubits { n });
    }
    let mut ctx = TrialContext::new(oracle, config.tol, config.seed);
    let order = match ctx.sequence() {
        Ok(order) => order,
        Err(SeqFail::NoPattern { trial }) => {
            let (trials, consistent, log) = (ctx.trials, ctx.consistent, std::mem::take(&mut ctx.log));
            return Ok(Procedure1Report {
                outcome: Procedure1Outcome::FailureAtTrial { trial },
                trials_used: trials,
                sequencing_trials: trials,
                confirm_trials: 0,
                pattern_consistent_trials: consistent,
                retrievals_used: oracle.retrievals(),
                trial_log: log,
            });
        }
        Err(SeqFail::Fatal(e)) => return Err(e),
    };
    let sequencing_trials = ctx.trials;

    let mut confirm_failure: Option<u64> = None;
    for _ in 0..config.extra_confirm_trials {
        let mut picks = [0usize; 3];
        let mut chosen = Vec::with_capacity(3);
        while chosen.len() < 3 {
            let q = ctx.rng.random_range(1..=n);
            if !chosen.contains(&q) {
                chosen.push(q);
            }
        }
        picks.copy_from_slice(&chosen);
        match ctx.decide(picks[0], picks[1], picks[2]) {
            Ok(_) => {}
            Err(SeqFail::NoPattern { trial }) => {
                confirm_failure = Some(trial);
                break;
            }
            Err(SeqFail::Fatal(e)) => return Err(e),
        }
    }

    let trials = ctx.trials;
    let consistent = ctx.consistent;
    let log = std::mem::take(&mut ctx.log);

    if let Some(trial) = confirm_failure {
        return Ok(Procedure1Report {
            outcome: Procedure1Outcome::FailureAtTrial { trial },
            trials_used: trials,
            sequencing_trials,
            confirm_trials: trials - sequencing_trials,
            pattern_consistent_trials: consistent,
            retrievals_used: oracle.retrievals(),
            trial_log: log,
        });
    }

    let pairs = extract_pairs(oracle, &order)?;
    Ok(Procedure1Report {
        outcome: Procedure1Outcome::Success { order, pairs },
        trials_used: trials,
        sequencing_trials,
        confirm_trials: trials - sequencing_trials,
        pattern_consistent_trials: consistent,
        retrievals_used: oracle.retrievals(),
        trial_log: log,
    })
}
