//! Location of variant coefficient pairs by an adaptively expanded tree of
//! prefix projection measurements.
//!
//! After sequencing, the state is read in structure order: position `i` of a
//! prefix refers to the i-th qubit of the recovered sequence. Measuring the
//! first `d` positions against the product expectation of the recovered base
//! pairs flags groups that contain variants. Only flagged groups are
//! expanded; when an entire depth shows no deviation, one representative
//! branch continues so that deviations appearing first at deeper levels are
//! still reached. Exploration stops at depth `n-1`: on the even-parity
//! support the last position is fixed by the preceding ones.
//!
//! Each expansion samples one fresh measurement (the 0-extension child); the
//! sibling's statistics derive from the parent. When a parent shows no
//! deviation but both children deviate by equal and opposite amounts, the two
//! children describe the same fresh variant through complementary
//! components, so only the 0-side expands. This keeps the sampled node count
//! within `K (2n - 3)` for `K` variants.
//!
//! Variant magnitudes come from full-basis probe measurements taken deepest
//! level first, each divided by the product of the other levels' known
//! components; an iterative sweep against the rebuilt hypothesis state then
//! uncovers variants nested behind shallower ones on the same branch.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::standard::{build_standard, LevelPair, StandardStateSpec, VariantSpec};
use crate::state::StateVector;

/// Default deviation threshold in units of the standard error.
pub const DEFAULT_FLAG_THRESHOLD: f64 = 5.0;

/// Absolute deviation threshold in exact mode.
pub const EXACT_FLAG_TOL: f64 = 1e-12;

/// Hypothesis states are only rebuilt for the nested-variant sweep up to this
/// size.
pub const MAX_MODEL_QUBITS: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SamplingMode {
    /// Probabilities evaluated exactly from the state vector.
    Exact,
    /// Independently seeded batches of this many Bernoulli draws per node.
    Shots(u64),
}

#[derive(Clone, Copy, Debug)]
pub struct LocatorConfig {
    pub mode: SamplingMode,
    /// Flag when `|measured - expected| > flag_threshold * sem` (shot mode).
    pub flag_threshold: f64,
    pub seed: u64,
    /// Stop sampling once this many shots have been spent; the tree is then
    /// returned truncated.
    pub shot_budget: Option<u64>,
}

impl Default for LocatorConfig {
    fn default() -> Self {
        Self {
            mode: SamplingMode::Exact,
            flag_threshold: DEFAULT_FLAG_THRESHOLD,
            seed: 0,
            shot_budget: None,
        }
    }
}

/// One measurement result.
#[derive(Clone, Copy, Debug)]
pub struct Measurement {
    pub estimate: f64,
    pub sem: f64,
    pub shots: u64,
}

/// A source of prefix projection probabilities in structure coordinates.
///
/// `measure` receives the prefix bits for positions `1..=prefix.len()` and a
/// stream id; shot-based sources must derive the batch from the stream id so
/// results do not depend on traversal order.
pub trait PrefixSampler {
    fn num_qubits(&self) -> usize;
    fn measure(&mut self, prefix: &[bool], stream: u64) -> Result<Measurement>;
    fn shots_used(&self) -> u64;
}

fn position_assignment(order: &[usize], prefix: &[bool]) -> Vec<(usize, bool)> {
    prefix
        .iter()
        .enumerate()
        .map(|(i, &bit)| (order[i], bit))
        .collect()
}

/// Exact probabilities; `order[i]` is the physical qubit at structure
/// position `i + 1`.
pub struct ExactSampler<'a> {
    state: &'a StateVector,
    order: Vec<usize>,
}

impl<'a> ExactSampler<'a> {
    pub fn new(state: &'a StateVector, order: Vec<usize>) -> Result<Self> {
        if order.len() != state.num_qubits() {
            return Err(Error::InvalidInput(format!(
                "sequence covers {} qubits, state has {}",
                order.len(),
                state.num_qubits()
            )));
        }
        Ok(Self { state, order })
    }

    /// Identity structure order.
    pub fn canonical(state: &'a StateVector) -> Self {
        Self {
            order: (1..=state.num_qubits()).collect(),
            state,
        }
    }
}

impl PrefixSampler for ExactSampler<'_> {
    fn num_qubits(&self) -> usize {
        self.state.num_qubits()
    }

    fn measure(&mut self, prefix: &[bool], _stream: u64) -> Result<Measurement> {
        let assign = position_assignment(&self.order, prefix);
        Ok(Measurement {
            estimate: self.state.prefix_probability(&assign)?,
            sem: 0.0,
            shots: 0,
        })
    }

    fn shots_used(&self) -> u64 {
        0
    }
}

/// Shot-sampled probabilities. Each measurement consumes a fresh batch whose
/// generator is seeded with the root seed and the stream id
/// (`ChaCha8` stream = id), so batches are independent and reproducible.
pub struct ShotSampler<'a> {
    state: &'a StateVector,
    order: Vec<usize>,
    shots: u64,
    root_seed: u64,
    used: u64,
}

impl<'a> ShotSampler<'a> {
    pub fn new(state: &'a StateVector, order: Vec<usize>, shots: u64, root_seed: u64) -> Result<Self> {
        if shots == 0 {
            return Err(Error::ZeroShots);
        }
        if order.len() != state.num_qubits() {
            return Err(Error::InvalidInput(format!(
                "sequence covers {} qubits, state has {}",
                order.len(),
                state.num_qubits()
            )));
        }
        Ok(Self {
            state,
            order,
            shots,
            root_seed,
            used: 0,
        })
    }
}

impl PrefixSampler for ShotSampler<'_> {
    fn num_qubits(&self) -> usize {
        self.state.num_qubits()
    }

    fn measure(&mut self, prefix: &[bool], stream: u64) -> Result<Measurement> {
        let assign = position_assignment(&self.order, prefix);
        let mut rng = ChaCha8Rng::seed_from_u64(self.root_seed);
        rng.set_stream(stream);
        let sampled = self
            .state
            .sample_prefix_probability_with(&assign, self.shots, &mut rng)?;
        self.used += self.shots;
        Ok(Measurement {
            estimate: sampled.estimate,
            sem: sampled.sem,
            shots: sampled.shots,
        })
    }

    fn shots_used(&self) -> u64 {
        self.used
    }
}

/// One prefix group: its expectation under the recovered base pairs and the
/// measured statistics. Sampled nodes consumed a measurement batch; derived
/// nodes take parent minus sibling.
#[derive(Clone, Debug)]
pub struct MeasurementNode {
    pub prefix: Vec<bool>,
    pub depth: usize,
    pub expected: f64,
    pub measured: f64,
    pub sem: f64,
    pub flagged: bool,
    pub sampled: bool,
    pub parent: Option<usize>,
}

/// A full-basis probe used to isolate one variant's magnitudes.
#[derive(Clone, Debug)]
pub struct ProbeRecord {
    pub basis: Vec<bool>,
    pub measured: f64,
    pub sem: f64,
}

#[derive(Clone, Debug)]
pub struct MeasurementTree {
    pub n: usize,
    pub nodes: Vec<MeasurementNode>,
    pub probes: Vec<ProbeRecord>,
    /// Nodes that consumed a measurement batch.
    pub sampled_nodes: u64,
    pub shots_used: u64,
    pub truncated: bool,
}

impl MeasurementTree {
    pub fn flagged_leaves(&self) -> impl Iterator<Item = usize> + '_ {
        let leaf_depth = self.n - 1;
        self.nodes
            .iter()
            .enumerate()
            .filter(move |(_, node)| node.depth == leaf_depth && node.flagged)
            .map(|(i, _)| i)
    }
}

/// A located variant: the level, the control pattern over `q_{level+2}..q_n`
/// (structure order), and the pair magnitudes when a probe could isolate
/// them.
#[derive(Clone, Debug)]
pub struct VariantFinding {
    pub level: usize,
    pub pattern: Vec<bool>,
    /// `(|alpha|, |beta|)`, normalized; `None` when the location could not be
    /// resolved (vanishing base product or inconsistent probe).
    pub magnitudes: Option<(f64, f64)>,
    /// Rough standard error on the recovered `|alpha|^2`.
    pub magnitude_sem: f64,
}

/// Upper bound on tree nodes for `K` variants on `n` qubits.
pub fn node_count_bound(variants: u64, n: u64) -> u64 {
    variants * (2 * n - 3)
}

/// Product expectation for a prefix under the recovered base pairs: one
/// squared pair component per level, selected by the running prefix XOR.
pub fn expected_prefix_prob(base_pairs: &[LevelPair], prefix: &[bool]) -> f64 {
    let mut t = false;
    let mut p = 1.0;
    for (level, &bit) in prefix.iter().enumerate() {
        t ^= bit;
        let (a, b) = base_pairs[level].magnitudes();
        let comp = if t { b } else { a };
        p *= comp * comp;
    }
    p
}

fn prefix_value(prefix: &[bool]) -> u64 {
    prefix
        .iter()
        .enumerate()
        .fold(0u64, |acc, (i, &b)| acc | (u64::from(b) << i))
}

fn parity(bits: &[bool]) -> bool {
    bits.iter().fold(false, |acc, &b| acc ^ b)
}

struct Explorer<'a, S: PrefixSampler + ?Sized> {
    sampler: &'a mut S,
    base_pairs: &'a [LevelPair],
    config: LocatorConfig,
    n: usize,
    nodes: Vec<MeasurementNode>,
    probes: Vec<ProbeRecord>,
    probe_cache: HashMap<Vec<bool>, Measurement>,
    sampled_nodes: u64,
    truncated: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct FindingKey {
    level: usize,
    pattern: Vec<bool>,
}

#[derive(Clone, Debug)]
struct FindingDraft {
    key: FindingKey,
    /// Pair magnitudes squared `(|alpha|^2, |beta|^2)` once resolved.
    components_sq: Option<(f64, f64)>,
    sem: f64,
}

impl<'a, S: PrefixSampler + ?Sized> Explorer<'a, S> {
    fn new(sampler: &'a mut S, base_pairs: &'a [LevelPair], config: LocatorConfig) -> Self {
        let n = sampler.num_qubits();
        Self {
            sampler,
            base_pairs,
            config,
            n,
            nodes: Vec::new(),
            probes: Vec::new(),
            probe_cache: HashMap::new(),
            sampled_nodes: 0,
            truncated: false,
        }
    }

    fn budget_allows(&self) -> bool {
        match (self.config.shot_budget, self.config.mode) {
            (Some(budget), SamplingMode::Shots(per_node)) => {
                self.sampler.shots_used() + per_node <= budget
            }
            _ => true,
        }
    }

    fn sem_floor(&self) -> f64 {
        match self.config.mode {
            SamplingMode::Exact => 0.0,
            SamplingMode::Shots(shots) => 1.0 / shots as f64,
        }
    }

    fn is_flagged(&self, measured: f64, expected: f64, sem: f64) -> bool {
        match self.config.mode {
            SamplingMode::Exact => (measured - expected).abs() > EXACT_FLAG_TOL,
            SamplingMode::Shots(_) => {
                (measured - expected).abs()
                    > self.config.flag_threshold * sem.max(self.sem_floor())
            }
        }
    }

    fn explore(&mut self) -> Result<()> {
        // Expansion set: parent node indices; None marks the virtual root.
        let mut expansion: Vec<Option<usize>> = vec![None];
        for depth in 1..=self.n - 1 {
            let mut created: Vec<(Option<usize>, usize, usize)> = Vec::new();
            for parent in expansion.iter().copied() {
                if !self.budget_allows() {
                    self.truncated = true;
                    break;
                }
                let (parent_prefix, parent_measured, parent_sem): (Vec<bool>, f64, f64) =
                    match parent {
                        Some(i) => {
                            let p = &self.nodes[i];
                            (p.prefix.clone(), p.measured, p.sem)
                        }
                        None => (Vec::new(), 1.0, 0.0),
                    };
                let mut prefix0 = parent_prefix.clone();
                prefix0.push(false);
                let mut prefix1 = parent_prefix;
                prefix1.push(true);
                let stream = ((depth as u64) << 32) | prefix_value(&prefix0);
                let m0 = self.sampler.measure(&prefix0, stream)?;
                self.sampled_nodes += 1;
                let expected0 = expected_prefix_prob(self.base_pairs, &prefix0);
                let expected1 = expected_prefix_prob(self.base_pairs, &prefix1);
                let measured1 = parent_measured - m0.estimate;
                let sem1 = (parent_sem * parent_sem + m0.sem * m0.sem).sqrt();
                let flagged0 = self.is_flagged(m0.estimate, expected0, m0.sem);
                let flagged1 = self.is_flagged(measured1, expected1, sem1);
                let idx0 = self.nodes.len();
                self.nodes.push(MeasurementNode {
                    prefix: prefix0,
                    depth,
                    expected: expected0,
                    measured: m0.estimate,
                    sem: m0.sem,
                    flagged: flagged0,
                    sampled: true,
                    parent,
                });
                let idx1 = self.nodes.len();
                self.nodes.push(MeasurementNode {
                    prefix: prefix1,
                    depth,
                    expected: expected1,
                    measured: measured1,
                    sem: sem1,
                    flagged: flagged1,
                    sampled: false,
                    parent,
                });
                created.push((parent, idx0, idx1));
            }
            if self.truncated {
                break;
            }
            let mut next: Vec<Option<usize>> = Vec::new();
            for (parent, idx0, idx1) in created {
                let parent_flagged = parent.map(|i| self.nodes[i].flagged).unwrap_or(false);
                let f0 = self.nodes[idx0].flagged;
                let f1 = self.nodes[idx1].flagged;
                if f0 && f1 && !parent_flagged {
                    // A fresh equal-and-opposite pair is one variant seen
                    // through both components; one side suffices.
                    next.push(Some(idx0));
                } else {
                    if f0 {
                        next.push(Some(idx0));
                    }
                    if f1 {
                        next.push(Some(idx1));
                    }
                }
            }
            if next.is_empty() && depth < self.n - 1 {
                // Nothing deviates at this depth: continue one representative
                // branch so deeper levels still get measured.
                let representative = self
                    .nodes
                    .iter()
                    .enumerate()
                    .filter(|(_, node)| node.depth == depth)
                    .min_by_key(|(_, node)| prefix_value(&node.prefix))
                    .map(|(i, _)| i);
                if let Some(i) = representative {
                    next.push(Some(i));
                }
            }
            if next.is_empty() {
                break;
            }
            expansion = next;
        }
        Ok(())
    }

    fn probe(&mut self, basis: &[bool]) -> Result<Option<Measurement>> {
        if let Some(m) = self.probe_cache.get(basis) {
            return Ok(Some(*m));
        }
        if !self.budget_allows() {
            self.truncated = true;
            return Ok(None);
        }
        let stream = ((self.n as u64 + 1) << 32) | prefix_value(basis);
        let m = self.sampler.measure(basis, stream)?;
        self.probe_cache.insert(basis.to_vec(), m);
        self.probes.push(ProbeRecord {
            basis: basis.to_vec(),
            measured: m.estimate,
            sem: m.sem,
        });
        Ok(Some(m))
    }
}

/// Shared finding pipeline: works off a completed tree plus either a live
/// sampler (during exploration) or the recorded probes only.
struct Deriver<'a> {
    n: usize,
    base_pairs: &'a [LevelPair],
    mode_exact: bool,
    flag_threshold: f64,
    sem_floor: f64,
}

impl<'a> Deriver<'a> {
    fn residual_flagged(&self, measured: f64, model: f64, sem: f64) -> bool {
        if self.mode_exact {
            (measured - model).abs() > EXACT_FLAG_TOL
        } else {
            (measured - model).abs() > self.flag_threshold * sem.max(self.sem_floor)
        }
    }

    /// Squared component product of the hypothesis state for a full basis
    /// assignment, skipping `exclude_level` (0 = keep all levels).
    fn model_component_product(
        &self,
        findings: &HashMap<FindingKey, FindingDraft>,
        basis: &[bool],
        exclude_level: usize,
    ) -> f64 {
        let mut t = false;
        let mut product = 1.0;
        for level in 1..=self.n - 1 {
            t ^= basis[level - 1];
            if level == exclude_level {
                continue;
            }
            let key = FindingKey {
                level,
                pattern: basis[level + 1..].to_vec(),
            };
            let comp_sq = match findings.get(&key).and_then(|f| f.components_sq) {
                Some((a_sq, b_sq)) => {
                    if t {
                        b_sq
                    } else {
                        a_sq
                    }
                }
                None => {
                    let (a, b) = self.base_pairs[level - 1].magnitudes();
                    let c = if t { b } else { a };
                    c * c
                }
            };
            product *= comp_sq;
        }
        product
    }

    /// Chooses a probe basis for one finding: the location fixes positions
    /// `level+2..n`; the free positions are picked with even total parity
    /// and off the location of every shallower finding.
    fn probe_basis(
        &self,
        key: &FindingKey,
        findings: &HashMap<FindingKey, FindingDraft>,
    ) -> Option<Vec<bool>> {
        let level = key.level;
        let free_len = level + 1;
        let shallower: Vec<&FindingKey> = findings
            .keys()
            .filter(|k| k.level < level)
            .collect();
        let tries = 1usize << free_len.min(16);
        for mask in 0..tries {
            let mut basis = vec![false; self.n];
            for i in 0..free_len {
                basis[i] = mask & (1 << i) != 0;
            }
            basis[level + 1..].copy_from_slice(&key.pattern);
            if parity(&basis) {
                continue;
            }
            let clashes = shallower
                .iter()
                .any(|k| basis[k.level + 1..] == k.pattern[..]);
            if !clashes {
                return Some(basis);
            }
        }
        None
    }

    /// Resolves magnitudes deepest level first, dividing each probe by the
    /// other levels' known components.
    fn resolve_magnitudes<F: FnMut(&[bool]) -> Result<Option<Measurement>>>(
        &self,
        findings: &mut HashMap<FindingKey, FindingDraft>,
        mut probe: F,
    ) -> Result<()> {
        let mut keys: Vec<FindingKey> = findings.keys().cloned().collect();
        keys.sort_by(|a, b| {
            b.level
                .cmp(&a.level)
                .then_with(|| a.pattern.cmp(&b.pattern))
        });
        for key in keys {
            let Some(basis) = self.probe_basis(&key, findings) else {
                continue;
            };
            let Some(measurement) = probe(&basis)? else {
                continue;
            };
            let divisor = self.model_component_product(findings, &basis, key.level);
            let draft = findings.get_mut(&key).expect("key from map");
            if divisor < 1e-12 {
                draft.components_sq = None;
                continue;
            }
            let m = measurement.estimate / divisor;
            let sem = measurement.sem / divisor;
            let slack = if self.mode_exact { 1e-9 } else { 3.0 * sem + 1e-9 };
            if !(-slack..=1.0 + slack).contains(&m) {
                draft.components_sq = None;
                continue;
            }
            let m = m.clamp(0.0, 1.0);
            let mut t = false;
            for bit in basis.iter().take(key.level) {
                t ^= bit;
            }
            draft.components_sq = Some(if t { (1.0 - m, m) } else { (m, 1.0 - m) });
            draft.sem = sem;
        }
        Ok(())
    }

    /// Builds the hypothesis state for the currently resolved findings.
    fn model_state(
        &self,
        findings: &HashMap<FindingKey, FindingDraft>,
    ) -> Result<Option<StateVector>> {
        if self.n > MAX_MODEL_QUBITS {
            return Ok(None);
        }
        let mut variants = Vec::new();
        for (key, draft) in findings {
            let Some((a_sq, b_sq)) = draft.components_sq else {
                continue;
            };
            let pair = LevelPair::new(
                num_complex::Complex64::new(a_sq.sqrt(), 0.0),
                num_complex::Complex64::new(b_sq.sqrt(), 0.0),
            )?;
            variants.push(VariantSpec {
                level_k: key.level + 1,
                pattern: key.pattern.clone(),
                pair,
            });
        }
        // The hypothesis carries magnitude information only; phases of the
        // base pairs do not move prefix probabilities.
        let base: Result<Vec<LevelPair>> = self
            .base_pairs
            .iter()
            .map(|p| {
                let (a, b) = p.magnitudes();
                LevelPair::new(
                    num_complex::Complex64::new(a, 0.0),
                    num_complex::Complex64::new(b, 0.0),
                )
            })
            .collect();
        let spec = StandardStateSpec {
            n: self.n,
            base_pairs: base?,
            variants,
        };
        let (state, _) = build_standard(&spec)?;
        Ok(Some(state))
    }

    /// One sweep over the flagged leaves: compares each branch against the
    /// hypothesis state and registers a finding at every fresh onset depth.
    /// Returns the number of new findings.
    fn register_onsets(
        &self,
        tree_nodes: &[MeasurementNode],
        leaves: &[usize],
        model: Option<&StateVector>,
        findings: &mut HashMap<FindingKey, FindingDraft>,
    ) -> Result<usize> {
        let mut added = 0;
        for &leaf in leaves {
            // Walk the ancestor chain (leaf first, then up).
            let mut chain = Vec::with_capacity(self.n - 1);
            let mut cursor = Some(leaf);
            while let Some(i) = cursor {
                chain.push(i);
                cursor = tree_nodes[i].parent;
            }
            chain.reverse();
            let leaf_prefix = &tree_nodes[leaf].prefix;
            let leaf_parity = parity(leaf_prefix);
            let mut parent_deviates = false;
            for &i in &chain {
                let node = &tree_nodes[i];
                let model_p = match model {
                    Some(state) => {
                        let assign: Vec<(usize, bool)> = node
                            .prefix
                            .iter()
                            .enumerate()
                            .map(|(pos, &bit)| (pos + 1, bit))
                            .collect();
                        state.prefix_probability(&assign)?
                    }
                    None => node.expected,
                };
                let deviates = self.residual_flagged(node.measured, model_p, node.sem);
                if deviates && !parent_deviates {
                    let level = node.depth;
                    let mut pattern: Vec<bool> = leaf_prefix[level + 1..].to_vec();
                    pattern.push(leaf_parity);
                    let key = FindingKey { level, pattern };
                    if !findings.contains_key(&key) {
                        findings.insert(
                            key.clone(),
                            FindingDraft {
                                key,
                                components_sq: None,
                                sem: 0.0,
                            },
                        );
                        added += 1;
                    }
                }
                parent_deviates = deviates;
            }
        }
        Ok(added)
    }
}

fn finalize(findings: HashMap<FindingKey, FindingDraft>) -> Vec<VariantFinding> {
    let mut list: Vec<VariantFinding> = findings
        .into_values()
        .map(|draft| VariantFinding {
            level: draft.key.level,
            pattern: draft.key.pattern,
            magnitudes: draft
                .components_sq
                .map(|(a_sq, b_sq)| (a_sq.sqrt(), b_sq.sqrt())),
            magnitude_sem: draft.sem,
        })
        .collect();
    list.sort_by(|a, b| a.level.cmp(&b.level).then_with(|| a.pattern.cmp(&b.pattern)));
    list
}

fn run_finding_pipeline<F: FnMut(&[bool]) -> Result<Option<Measurement>>>(
    deriver: &Deriver<'_>,
    nodes: &[MeasurementNode],
    leaves: &[usize],
    mut probe: F,
) -> Result<HashMap<FindingKey, FindingDraft>> {
    let mut findings: HashMap<FindingKey, FindingDraft> = HashMap::new();
    // First pass against the base expectation, then against progressively
    // richer hypothesis states until no branch shows an unexplained onset.
    let added = deriver.register_onsets(nodes, leaves, None, &mut findings)?;
    if added == 0 {
        return Ok(findings);
    }
    let max_sweeps = 4 * deriver.n + 16;
    for _ in 0..max_sweeps {
        deriver.resolve_magnitudes(&mut findings, &mut probe)?;
        let Some(model) = deriver.model_state(&findings)? else {
            break;
        };
        let added = deriver.register_onsets(nodes, leaves, Some(&model), &mut findings)?;
        if added == 0 {
            break;
        }
    }
    Ok(findings)
}

/// Explores the measurement tree and derives all variant findings.
pub fn explore_tree<S: PrefixSampler + ?Sized>(
    sampler: &mut S,
    base_pairs: &[LevelPair],
    config: &LocatorConfig,
) -> Result<(MeasurementTree, Vec<VariantFinding>)> {
    let n = sampler.num_qubits();
    if n < 2 {
        return Err(Error::InvalidInput(
            "variant location needs at least 2 qubits".into(),
        ));
    }
    if base_pairs.len() != n - 1 {
        return Err(Error::BasePairCountMismatch {
            got: base_pairs.len(),
            expected: n - 1,
        });
    }
    let mut explorer = Explorer::new(sampler, base_pairs, *config);
    explorer.explore()?;

    let leaves: Vec<usize> = {
        let leaf_depth = n - 1;
        explorer
            .nodes
            .iter()
            .enumerate()
            .filter(|(_, node)| node.depth == leaf_depth && node.flagged)
            .map(|(i, _)| i)
            .collect()
    };
    let deriver = Deriver {
        n,
        base_pairs,
        mode_exact: matches!(config.mode, SamplingMode::Exact),
        flag_threshold: config.flag_threshold,
        sem_floor: match config.mode {
            SamplingMode::Exact => 0.0,
            SamplingMode::Shots(shots) => 1.0 / shots as f64,
        },
    };
    let nodes_snapshot = std::mem::take(&mut explorer.nodes);
    let findings = run_finding_pipeline(&deriver, &nodes_snapshot, &leaves, |basis| {
        explorer.probe(basis)
    })?;

    let tree = MeasurementTree {
        n,
        nodes: nodes_snapshot,
        probes: explorer.probes,
        sampled_nodes: explorer.sampled_nodes,
        shots_used: explorer.sampler.shots_used(),
        truncated: explorer.truncated,
    };
    Ok((tree, finalize(findings)))
}

/// Re-derives the findings of a completed tree from its recorded probes.
/// Pure function of the tree contents; reaches the same fixpoint as
/// [`explore_tree`] did.
pub fn derive_variant_magnitudes(
    tree: &MeasurementTree,
    base_pairs: &[LevelPair],
    config: &LocatorConfig,
) -> Result<Vec<VariantFinding>> {
    let cache: HashMap<Vec<bool>, Measurement> = tree
        .probes
        .iter()
        .map(|p| {
            (
                p.basis.clone(),
                Measurement {
                    estimate: p.measured,
                    sem: p.sem,
                    shots: 0,
                },
            )
        })
        .collect();
    let deriver = Deriver {
        n: tree.n,
        base_pairs,
        mode_exact: matches!(config.mode, SamplingMode::Exact),
        flag_threshold: config.flag_threshold,
        sem_floor: match config.mode {
            SamplingMode::Exact => 0.0,
            SamplingMode::Shots(shots) => 1.0 / shots as f64,
        },
    };
    let leaves: Vec<usize> = tree.flagged_leaves().collect();
    let findings = run_finding_pipeline(&deriver, &tree.nodes, &leaves, |basis| {
        Ok(cache.get(basis).copied())
    })?;
    Ok(finalize(findings))
}
