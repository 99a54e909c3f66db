//! JSON analysis reports emitted by the command-line interface.
//!
//! Field order is fixed by the struct definitions and seeds default to 0, so
//! repeated runs over the same inputs produce byte-identical files.

use serde::{Deserialize, Serialize};

use crate::classifier::PosteriorReport;
use crate::locator::{MeasurementTree, VariantFinding};
use crate::sequencer::Procedure1Report;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

fn bits_to_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InputDescriptor {
    pub path: String,
    pub n: usize,
}

/// Context line: free real parameters of an n-qubit state versus the
/// dimension of a polynomial gate budget, when one was configured.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ParameterNote {
    /// `2^{n+1} - 2`.
    pub free_real_parameters: u64,
    /// `4 c n^k` when a polynomial bound was supplied.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub poly_budget_dimension: Option<f64>,
}

impl ParameterNote {
    pub fn for_state(n: usize, poly: Option<(f64, f64)>) -> Self {
        Self {
            free_real_parameters: (1u64 << (n + 1)) - 2,
            poly_budget_dimension: poly.map(|(c, k)| 4.0 * c * (n as f64).powf(k)),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NodeReport {
    pub prefix: String,
    pub depth: usize,
    pub expected: f64,
    pub measured: f64,
    pub sem: f64,
    pub flagged: bool,
    pub sampled: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProbeReport {
    pub basis: String,
    pub measured: f64,
    pub sem: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FindingReport {
    pub level: usize,
    pub pattern: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_mag: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_mag: Option<f64>,
    pub resolved: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TreeReport {
    pub n: usize,
    pub sampled_nodes: u64,
    pub total_nodes: usize,
    pub shots_used: u64,
    pub truncated: bool,
    pub nodes: Vec<NodeReport>,
    pub probes: Vec<ProbeReport>,
    pub findings: Vec<FindingReport>,
}

impl TreeReport {
    pub fn new(tree: &MeasurementTree, findings: &[VariantFinding]) -> Self {
        Self {
            n: tree.n,
            sampled_nodes: tree.sampled_nodes,
            total_nodes: tree.nodes.len(),
            shots_used: tree.shots_used,
            truncated: tree.truncated,
            nodes: tree
                .nodes
                .iter()
                .map(|node| NodeReport {
                    prefix: bits_to_string(&node.prefix),
                    depth: node.depth,
                    expected: node.expected,
                    measured: node.measured,
                    sem: node.sem,
                    flagged: node.flagged,
                    sampled: node.sampled,
                })
                .collect(),
            probes: tree
                .probes
                .iter()
                .map(|p| ProbeReport {
                    basis: bits_to_string(&p.basis),
                    measured: p.measured,
                    sem: p.sem,
                })
                .collect(),
            findings: findings
                .iter()
                .map(|f| FindingReport {
                    level: f.level,
                    pattern: bits_to_string(&f.pattern),
                    alpha_mag: f.magnitudes.map(|(a, _)| a),
                    beta_mag: f.magnitudes.map(|(_, b)| b),
                    resolved: f.magnitudes.is_some(),
                })
                .collect(),
        }
    }
}

/// Top-level report of `stdstate analyze`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub schema_version: u32,
    pub input: InputDescriptor,
    pub parameter_note: ParameterNote,
    pub procedure1: Procedure1Report,
    pub posterior: PosteriorReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tree: Option<TreeReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub script_path: Option<String>,
}

impl AnalysisReport {
    pub fn to_pretty_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}
