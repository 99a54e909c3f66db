//! Dense state-vector simulation with exact gate application, amplitude
//! retrieval, and exact or shot-sampled projection probabilities.
//!
//! # Index convention
//!
//! Bit `j` (0-based, least significant) of an amplitude index equals the value
//! of qubit `q_{j+1}`. So for a 3-qubit state, index `0b011` is the basis
//! state with `q1 = 1`, `q2 = 1`, `q3 = 0`.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::gate::{Gate, GateScript};

/// Largest supported qubit count (`2^30` amplitudes).
pub const MAX_QUBITS: usize = 30;

/// A normalized pure state on `n` qubits stored as `2^n` complex amplitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

/// Outcome of a shot-sampled projection measurement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampledProbability {
    pub estimate: f64,
    /// Standard error of the mean, `sqrt(p_hat (1 - p_hat) / shots)`.
    pub sem: f64,
    pub shots: u64,
}

impl StateVector {
    /// The all-zero product state.
    pub fn new_zero(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::QubitCountOutOfRange { n, max: MAX_QUBITS });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1usize << n];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Self { n, amps })
    }

    /// Wraps raw amplitudes; checks length and finiteness but not the norm, so
    /// that unnormalized test fixtures can be loaded. Use [`Self::norm_sqr`]
    /// to inspect the norm.
    pub fn from_amplitudes(n: usize, amps: Vec<Complex64>) -> Result<Self> {
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::QubitCountOutOfRange { n, max: MAX_QUBITS });
        }
        let expected = 1usize << n;
        if amps.len() != expected {
            return Err(Error::AmplitudeCountMismatch {
                got: amps.len(),
                expected,
            });
        }
        for (index, a) in amps.iter().enumerate() {
            if !a.re.is_finite() || !a.im.is_finite() {
                return Err(Error::NonFiniteAmplitude { index });
            }
        }
        Ok(Self { n, amps })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitude_at(&self, index: usize) -> Complex64 {
        self.amps[index]
    }

    /// Amplitude index of a full basis assignment (`bits[j]` = value of `q_{j+1}`).
    pub fn basis_index(bits: &[bool]) -> usize {
        bits.iter()
            .enumerate()
            .fold(0usize, |acc, (j, &b)| acc | (usize::from(b) << j))
    }

    /// Amplitude of the basis state given by a full assignment.
    ///
    /// Panics if the assignment does not cover exactly `n` qubits; this is a
    /// caller contract, not a recoverable condition.
    pub fn get_amplitude(&self, bits: &[bool]) -> Complex64 {
        assert_eq!(
            bits.len(),
            self.n,
            "basis assignment must cover all {} qubits",
            self.n
        );
        self.amps[Self::basis_index(bits)]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Applies one gate in place.
    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.n)?;
        match gate {
            Gate::SingleQubit { target, matrix } => {
                self.apply_single(*target, matrix.entries());
            }
            Gate::Cnot { control, target } => {
                let cmask = 1usize << (control - 1);
                let tmask = 1usize << (target - 1);
                for i in 0..self.amps.len() {
                    if i & cmask != 0 && i & tmask == 0 {
                        self.amps.swap(i, i | tmask);
                    }
                }
            }
            Gate::ControlledU {
                controls,
                target,
                matrix,
            } => {
                let mut cmask = 0usize;
                let mut cval = 0usize;
                for (q, bit) in controls {
                    let m = 1usize << (q - 1);
                    cmask |= m;
                    if *bit {
                        cval |= m;
                    }
                }
                let tmask = 1usize << (target - 1);
                let m = matrix.entries();
                for i in 0..self.amps.len() {
                    if i & tmask == 0 && i & cmask == cval {
                        let j = i | tmask;
                        let a = self.amps[i];
                        let b = self.amps[j];
                        self.amps[i] = m[0][0] * a + m[0][1] * b;
                        self.amps[j] = m[1][0] * a + m[1][1] * b;
                    }
                }
            }
            Gate::TwoLevel {
                index_i,
                index_j,
                matrix,
            } => {
                let m = matrix.entries();
                let a = self.amps[*index_i];
                let b = self.amps[*index_j];
                self.amps[*index_i] = m[0][0] * a + m[0][1] * b;
                self.amps[*index_j] = m[1][0] * a + m[1][1] * b;
            }
        }
        Ok(())
    }

    fn apply_single(&mut self, target: usize, m: &[[Complex64; 2]; 2]) {
        let tmask = 1usize << (target - 1);
        for i in 0..self.amps.len() {
            if i & tmask == 0 {
                let j = i | tmask;
                let a = self.amps[i];
                let b = self.amps[j];
                self.amps[i] = m[0][0] * a + m[0][1] * b;
                self.amps[j] = m[1][0] * a + m[1][1] * b;
            }
        }
    }

    pub fn apply_script(&mut self, script: &GateScript) -> Result<()> {
        for gate in script {
            self.apply_gate(gate)?;
        }
        Ok(())
    }

    /// Exact marginal probability that each assigned qubit measures to the
    /// given bit: the sum of `|amp|^2` over all consistent basis states.
    pub fn prefix_probability(&self, assign: &[(usize, bool)]) -> Result<f64> {
        let (mask, value) = self.assignment_mask(assign)?;
        let mut p = 0.0;
        for (i, a) in self.amps.iter().enumerate() {
            if i & mask == value {
                p += a.norm_sqr();
            }
        }
        Ok(p.min(1.0))
    }

    /// Estimates [`Self::prefix_probability`] from `shots` Bernoulli draws,
    /// counted through a binomial sampler. Deterministic for a fixed seed.
    pub fn sample_prefix_probability(
        &self,
        assign: &[(usize, bool)],
        shots: u64,
        seed: u64,
    ) -> Result<SampledProbability> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_prefix_probability_with(assign, shots, &mut rng)
    }

    /// Shot sampling with a caller-managed generator, used to derive
    /// independent per-batch streams.
    pub fn sample_prefix_probability_with(
        &self,
        assign: &[(usize, bool)],
        shots: u64,
        rng: &mut ChaCha8Rng,
    ) -> Result<SampledProbability> {
        if shots == 0 {
            return Err(Error::ZeroShots);
        }
        let p = self.prefix_probability(assign)?.clamp(0.0, 1.0);
        let hits = Binomial::new(shots, p)
            .expect("probability clamped to [0, 1]")
            .sample(rng);
        let estimate = hits as f64 / shots as f64;
        let sem = (estimate * (1.0 - estimate) / shots as f64).sqrt();
        Ok(SampledProbability {
            estimate,
            sem,
            shots,
        })
    }

    fn assignment_mask(&self, assign: &[(usize, bool)]) -> Result<(usize, usize)> {
        let mut mask = 0usize;
        let mut value = 0usize;
        for (q, bit) in assign {
            if *q == 0 || *q > self.n {
                return Err(Error::QubitOutOfRange {
                    qubit: *q,
                    n: self.n,
                });
            }
            let m = 1usize << (q - 1);
            if mask & m != 0 {
                return Err(Error::DuplicateAssignment { qubit: *q });
            }
            mask |= m;
            if *bit {
                value |= m;
            }
        }
        Ok((mask, value))
    }

    /// `|<self|other>|`, the fidelity between two pure states.
    pub fn overlap(&self, other: &StateVector) -> Result<f64> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                left: self.n,
                right: other.n,
            });
        }
        let inner: Complex64 = self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(inner.norm())
    }

    /// True iff `|<self|other>| >= 1 - tol`.
    pub fn equal_up_to_global_phase(&self, other: &StateVector, tol: f64) -> Result<bool> {
        Ok(self.overlap(other)? >= 1.0 - tol)
    }

    /// Relabels qubits: `perm[j]` is the new label of qubit `q_{j+1}`.
    /// `perm` must be a permutation of `1..=n`.
    pub fn permute_qubits(&self, perm: &[usize]) -> Result<StateVector> {
        if perm.len() != self.n {
            return Err(Error::InvalidInput(format!(
                "permutation covers {} qubits, state has {}",
                perm.len(),
                self.n
            )));
        }
        let mut seen = vec![false; self.n + 1];
        for &p in perm {
            if p == 0 || p > self.n || seen[p] {
                return Err(Error::InvalidInput(format!(
                    "{perm:?} is not a permutation of 1..={}",
                    self.n
                )));
            }
            seen[p] = true;
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for (i, a) in self.amps.iter().enumerate() {
            let mut j = 0usize;
            for (src, &dst) in perm.iter().enumerate() {
                if i & (1 << src) != 0 {
                    j |= 1 << (dst - 1);
                }
            }
            amps[j] = *a;
        }
        Ok(StateVector { n: self.n, amps })
    }
}
