//! Shared domain types and the serialization contract for experiment records.
//!
//! Records are stored one-per-line as self-describing JSON documents with a
//! mandatory `schema_version` field. Floating-point metrics round-trip
//! bit-exactly through the shortest-decimal encoding used by the JSON writer.

mod store;

pub use store::{CellKey, RecordStore};

use crate::error::{Error, Result};
use ndarray::Array3;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Version stamped into every serialized record.
pub const SCHEMA_VERSION: u32 = 1;

// ---------------------------------------------------------------------------
// Trigger specification
// ---------------------------------------------------------------------------

/// Patch trigger: a binary mask selecting pixels and the pattern painted
/// where the mask is set. Both tensors share the input shape `[C, H, W]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TriggerSpec {
    /// Binary mask with values exactly 0.0 or 1.0.
    pub mask: Array3<f32>,
    /// Replacement pixels in the raw `[0, 1]` range.
    pub pattern: Array3<f32>,
    /// Class that triggered inputs are driven to.
    pub target_class: usize,
}

impl TriggerSpec {
    pub fn new(mask: Array3<f32>, pattern: Array3<f32>, target_class: usize) -> Result<Self> {
        let spec = TriggerSpec {
            mask,
            pattern,
            target_class,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Square patch of max-intensity (white) pixels flush against the
    /// bottom-right image border.
    pub fn badnet_patch(
        channels: usize,
        height: usize,
        width: usize,
        patch: usize,
        target_class: usize,
    ) -> Result<Self> {
        if patch == 0 || patch > height || patch > width {
            return Err(Error::Config(format!(
                "patch size {patch} does not fit a {height}x{width} image"
            )));
        }
        let mut mask = Array3::<f32>::zeros((channels, height, width));
        let mut pattern = Array3::<f32>::zeros((channels, height, width));
        for c in 0..channels {
            for r in (height - patch)..height {
                for col in (width - patch)..width {
                    mask[[c, r, col]] = 1.0;
                    pattern[[c, r, col]] = 1.0;
                }
            }
        }
        TriggerSpec::new(mask, pattern, target_class)
    }

    pub fn validate(&self) -> Result<()> {
        if self.mask.dim() != self.pattern.dim() {
            return Err(Error::ShapeMismatch(format!(
                "mask {:?} vs pattern {:?}",
                self.mask.dim(),
                self.pattern.dim()
            )));
        }
        if self.mask.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::invariant("mask", "values must be exactly 0 or 1"));
        }
        Ok(())
    }

    /// Checks the target class against a concrete class count.
    pub fn validate_for(&self, num_classes: usize) -> Result<()> {
        self.validate()?;
        if self.target_class >= num_classes {
            return Err(Error::invariant(
                "target_class",
                format!("{} not below {}", self.target_class, num_classes),
            ));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Quantization scheme
// ---------------------------------------------------------------------------

/// Named precision settings used in the evaluation sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SchemeName {
    #[serde(rename = "FP32")]
    Fp32,
    #[serde(rename = "INT8_DYNAMIC")]
    Int8Dynamic,
    #[serde(rename = "INT4_SIM")]
    Int4Sim,
}

impl SchemeName {
    pub fn as_str(&self) -> &'static str {
        match self {
            SchemeName::Fp32 => "FP32",
            SchemeName::Int8Dynamic => "INT8_DYNAMIC",
            SchemeName::Int4Sim => "INT4_SIM",
        }
    }

    /// Short form used on the command line and in file names.
    pub fn short(&self) -> &'static str {
        match self {
            SchemeName::Fp32 => "fp32",
            SchemeName::Int8Dynamic => "int8",
            SchemeName::Int4Sim => "int4",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fp32" => Ok(SchemeName::Fp32),
            "int8" | "int8_dynamic" => Ok(SchemeName::Int8Dynamic),
            "int4" | "int4_sim" => Ok(SchemeName::Int4Sim),
            other => Err(Error::Config(format!(
                "unknown scheme `{other}` (expected fp32, int8, int4)"
            ))),
        }
    }
}

/// Scale granularity for the uniform symmetric quantizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    PerTensor,
    PerChannel,
}

/// A model-level quantization scheme: bit width, scale granularity, and
/// whether linear-layer inputs are fake-quantized per batch at run time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QuantScheme {
    pub name: SchemeName,
    pub bits: u8,
    pub granularity: Granularity,
    pub emulate_dynamic_activations: bool,
    /// Restrict weight quantization to linear layers, mirroring backends
    /// that leave convolutions untouched in dynamic mode.
    #[serde(default)]
    pub linear_only: bool,
}

impl QuantScheme {
    pub fn fp32() -> Self {
        QuantScheme {
            name: SchemeName::Fp32,
            bits: 32,
            granularity: Granularity::PerTensor,
            emulate_dynamic_activations: false,
            linear_only: false,
        }
    }

    pub fn int8_dynamic() -> Self {
        QuantScheme {
            name: SchemeName::Int8Dynamic,
            bits: 8,
            granularity: Granularity::PerTensor,
            emulate_dynamic_activations: false,
            linear_only: false,
        }
    }

    pub fn int4_sim() -> Self {
        QuantScheme {
            name: SchemeName::Int4Sim,
            bits: 4,
            granularity: Granularity::PerChannel,
            emulate_dynamic_activations: false,
            linear_only: false,
        }
    }

    pub fn from_name(name: SchemeName) -> Self {
        match name {
            SchemeName::Fp32 => Self::fp32(),
            SchemeName::Int8Dynamic => Self::int8_dynamic(),
            SchemeName::Int4Sim => Self::int4_sim(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.name {
            SchemeName::Fp32 => Ok(()),
            SchemeName::Int8Dynamic => {
                if self.bits != 8 || self.granularity != Granularity::PerTensor {
                    Err(Error::invariant(
                        "scheme",
                        "INT8_DYNAMIC requires b=8 per_tensor",
                    ))
                } else {
                    Ok(())
                }
            }
            SchemeName::Int4Sim => {
                if self.bits != 4 || self.granularity != Granularity::PerChannel {
                    Err(Error::invariant(
                        "scheme",
                        "INT4_SIM requires b=4 per_channel",
                    ))
                } else {
                    Ok(())
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Model artifact
// ---------------------------------------------------------------------------

/// A named parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub values: ndarray::ArrayD<f32>,
}

/// Provenance recorded next to trained parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub dataset_id: String,
    pub epochs: usize,
    pub seed: u64,
    pub poisoned: bool,
}

/// Classifier parameters plus provenance. Immutable after construction;
/// the content hash covers the serialized parameter bytes only.
#[derive(Debug, Clone)]
pub struct ModelArtifact {
    pub architecture_id: String,
    pub parameters: Vec<NamedTensor>,
    pub num_classes: usize,
    pub training_meta: TrainingMeta,
    /// Scheme applied by the quantizer, if any. `None` means the artifact
    /// holds the parameters exactly as trained.
    pub quant_scheme: Option<QuantScheme>,
    pub content_hash: String,
}

impl ModelArtifact {
    pub fn new(
        architecture_id: impl Into<String>,
        parameters: Vec<NamedTensor>,
        num_classes: usize,
        training_meta: TrainingMeta,
        quant_scheme: Option<QuantScheme>,
    ) -> Result<Self> {
        let content_hash = hash_parameters(&parameters);
        let artifact = ModelArtifact {
            architecture_id: architecture_id.into(),
            parameters,
            num_classes,
            training_meta,
            quant_scheme,
            content_hash,
        };
        artifact.validate()?;
        Ok(artifact)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 2 {
            return Err(Error::invariant("num_classes", "must be at least 2"));
        }
        if self.content_hash != hash_parameters(&self.parameters) {
            return Err(Error::invariant(
                "content_hash",
                "does not match parameters",
            ));
        }
        // Classifier head width must agree with the declared class count.
        if let Some(fc) = self.parameters.iter().find(|t| t.name == "fc.weight") {
            if fc.values.shape()[0] != self.num_classes {
                return Err(Error::invariant(
                    "num_classes",
                    format!(
                        "output layer width {} != num_classes {}",
                        fc.values.shape()[0],
                        self.num_classes
                    ),
                ));
            }
        }
        Ok(())
    }

    pub fn tensor(&self, name: &str) -> Option<&NamedTensor> {
        self.parameters.iter().find(|t| t.name == name)
    }
}

/// SHA-256 over a canonical byte encoding of the parameter list.
pub fn hash_parameters(parameters: &[NamedTensor]) -> String {
    let mut hasher = Sha256::new();
    for t in parameters {
        hasher.update(t.name.as_bytes());
        hasher.update([0u8]);
        hasher.update((t.values.ndim() as u32).to_le_bytes());
        for &d in t.values.shape() {
            hasher.update((d as u64).to_le_bytes());
        }
        for &v in t.values.iter() {
            hasher.update(v.to_le_bytes());
        }
    }
    hex::encode(hasher.finalize())
}

// ---------------------------------------------------------------------------
// Metrics and verdicts
// ---------------------------------------------------------------------------

/// Clean accuracy and attack success rate of one model variant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricPair {
    pub clean_accuracy: f64,
    pub attack_success_rate: f64,
}

impl MetricPair {
    pub fn new(clean_accuracy: f64, attack_success_rate: f64) -> Result<Self> {
        let m = MetricPair {
            clean_accuracy,
            attack_success_rate,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.clean_accuracy) || !self.clean_accuracy.is_finite() {
            return Err(Error::invariant(
                "clean_accuracy",
                format!("{} not in [0, 1]", self.clean_accuracy),
            ));
        }
        if !(0.0..=1.0).contains(&self.attack_success_rate) || !self.attack_success_rate.is_finite()
        {
            return Err(Error::invariant(
                "attack_success_rate",
                format!("{} not in [0, 1]", self.attack_success_rate),
            ));
        }
        Ok(())
    }
}

/// The five detectors exercised by the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DefenseId {
    #[serde(rename = "NC")]
    Nc,
    #[serde(rename = "AC")]
    Ac,
    #[serde(rename = "STRIP")]
    Strip,
    #[serde(rename = "SS")]
    Ss,
    #[serde(rename = "FP")]
    Fp,
}

impl DefenseId {
    pub const ALL: [DefenseId; 5] = [
        DefenseId::Nc,
        DefenseId::Ac,
        DefenseId::Strip,
        DefenseId::Ss,
        DefenseId::Fp,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            DefenseId::Nc => "NC",
            DefenseId::Ac => "AC",
            DefenseId::Strip => "STRIP",
            DefenseId::Ss => "SS",
            DefenseId::Fp => "FP",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "NC" => Ok(DefenseId::Nc),
            "AC" => Ok(DefenseId::Ac),
            "STRIP" => Ok(DefenseId::Strip),
            "SS" => Ok(DefenseId::Ss),
            "FP" => Ok(DefenseId::Fp),
            other => Err(Error::Config(format!(
                "unknown defense `{other}` (expected nc, ac, strip, ss, fp)"
            ))),
        }
    }
}

/// Defense-specific evidence. Every variant embeds the thresholds it was
/// judged against so that `detected` can be recomputed from the record alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DefenseDiagnostics {
    NeuralCleanse {
        /// Reverse-engineered mask l1 norm per class.
        norms: Vec<f64>,
        /// One-sided MAD anomaly index per class.
        anomaly_indices: Vec<f64>,
        median: f64,
        mad: f64,
        mad_threshold: f64,
        flagged_classes: Vec<usize>,
    },
    ActivationClustering {
        /// Mean silhouette per class; `None` when the class was skipped.
        silhouettes: Vec<Option<f64>>,
        /// Smaller-cluster fraction per class.
        minority_fractions: Vec<Option<f64>>,
        silhouette_threshold: f64,
        minority_low: f64,
        minority_high: f64,
        flagged_classes: Vec<usize>,
        skipped_classes: Vec<usize>,
    },
    Strip {
        calibration_entropy_mean: f64,
        calibration_entropy_min: f64,
        calibration_entropy_max: f64,
        percentile: f64,
        percentile_threshold: f64,
        flagged_fraction: f64,
        flag_fraction: f64,
        n_eval_probes: usize,
        degenerate: bool,
    },
    SpectralSignatures {
        /// Top-eigenvalue ratio per class; `None` when the class was skipped.
        eigen_ratios: Vec<Option<f64>>,
        max_ratio: f64,
        threshold: f64,
        skipped_classes: Vec<usize>,
    },
    FinePruning {
        dormant_fraction: f64,
        dormant_neurons: usize,
        total_neurons: usize,
        activation_cutoff: f64,
        flag_neuron_fraction: f64,
    },
}

impl DefenseDiagnostics {
    /// Re-derives the binary decision from the stored evidence.
    pub fn recompute_detected(&self) -> bool {
        match self {
            DefenseDiagnostics::NeuralCleanse {
                anomaly_indices,
                mad,
                mad_threshold,
                ..
            } => *mad > 0.0 && anomaly_indices.iter().any(|&i| i > *mad_threshold),
            DefenseDiagnostics::ActivationClustering {
                silhouettes,
                minority_fractions,
                silhouette_threshold,
                minority_low,
                minority_high,
                ..
            } => silhouettes
                .iter()
                .zip(minority_fractions)
                .any(|(s, f)| match (s, f) {
                    (Some(s), Some(f)) => {
                        *s > *silhouette_threshold && *f > *minority_low && *f < *minority_high
                    }
                    _ => false,
                }),
            DefenseDiagnostics::Strip {
                flagged_fraction,
                flag_fraction,
                degenerate,
                ..
            } => !degenerate && flagged_fraction > flag_fraction,
            DefenseDiagnostics::SpectralSignatures {
                max_ratio,
                threshold,
                ..
            } => max_ratio > threshold,
            DefenseDiagnostics::FinePruning {
                dormant_fraction,
                flag_neuron_fraction,
                ..
            } => dormant_fraction > flag_neuron_fraction,
        }
    }

    pub fn defense_id(&self) -> DefenseId {
        match self {
            DefenseDiagnostics::NeuralCleanse { .. } => DefenseId::Nc,
            DefenseDiagnostics::ActivationClustering { .. } => DefenseId::Ac,
            DefenseDiagnostics::Strip { .. } => DefenseId::Strip,
            DefenseDiagnostics::SpectralSignatures { .. } => DefenseId::Ss,
            DefenseDiagnostics::FinePruning { .. } => DefenseId::Fp,
        }
    }
}

/// Binary detection outcome plus the evidence it was derived from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefenseVerdict {
    pub defense_id: DefenseId,
    pub detected: bool,
    pub diagnostics: DefenseDiagnostics,
}

impl DefenseVerdict {
    /// Builds a verdict whose `detected` flag is derived from the
    /// diagnostics, keeping the two consistent by construction.
    pub fn from_diagnostics(diagnostics: DefenseDiagnostics) -> Self {
        DefenseVerdict {
            defense_id: diagnostics.defense_id(),
            detected: diagnostics.recompute_detected(),
            diagnostics,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.diagnostics.defense_id() != self.defense_id {
            return Err(Error::invariant(
                "diagnostics",
                "diagnostics kind does not match defense_id",
            ));
        }
        if self.diagnostics.recompute_detected() != self.detected {
            return Err(Error::invariant(
                "detected",
                "not reproducible from diagnostics and thresholds",
            ));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Experiment record
// ---------------------------------------------------------------------------

/// Result slot of one experiment cell: either a verdict or the error that
/// prevented the defense from completing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CellOutcome {
    Ok {
        #[serde(flatten)]
        verdict: DefenseVerdict,
    },
    Error {
        message: String,
    },
}

impl CellOutcome {
    pub fn verdict(&self) -> Option<&DefenseVerdict> {
        match self {
            CellOutcome::Ok { verdict } => Some(verdict),
            CellOutcome::Error { .. } => None,
        }
    }

    pub fn detected(&self) -> Option<bool> {
        self.verdict().map(|v| v.detected)
    }
}

/// One (dataset, scheme, defense) cell of a protocol run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub schema_version: u32,
    pub dataset_id: String,
    pub scheme: SchemeName,
    pub defense_id: DefenseId,
    pub verdict: CellOutcome,
    /// Metrics of the quantized model the defense inspected.
    pub metrics: MetricPair,
    pub wall_time_seconds: f64,
    pub seed: u64,
    #[serde(default)]
    pub repeat: u32,
}

impl ExperimentRecord {
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::SchemaVersion {
                expected: SCHEMA_VERSION,
                found: self.schema_version,
            });
        }
        if self.dataset_id.is_empty() {
            return Err(Error::invariant("dataset_id", "must be non-empty"));
        }
        self.metrics.validate()?;
        if !self.wall_time_seconds.is_finite() || self.wall_time_seconds < 0.0 {
            return Err(Error::invariant(
                "wall_time_seconds",
                "must be finite and non-negative",
            ));
        }
        if let CellOutcome::Ok { verdict } = &self.verdict {
            verdict.validate()?;
            if verdict.defense_id != self.defense_id {
                return Err(Error::invariant(
                    "defense_id",
                    "record and verdict disagree",
                ));
            }
        }
        Ok(())
    }

    pub fn cell_key(&self) -> CellKey {
        CellKey {
            dataset_id: self.dataset_id.clone(),
            scheme: self.scheme,
            defense_id: self.defense_id,
            repeat: self.repeat,
        }
    }
}

/// Encodes a record as a single self-describing JSON line (no trailing
/// newline). Floats use shortest round-trip decimal form.
pub fn serialize_record(record: &ExperimentRecord) -> Result<Vec<u8>> {
    record.validate()?;
    Ok(serde_json::to_vec(record)?)
}

/// Parses and validates one serialized record.
pub fn deserialize_record(bytes: &[u8]) -> Result<ExperimentRecord> {
    let record: ExperimentRecord = serde_json::from_slice(bytes)
        .map_err(|e| Error::Deserialize(e.to_string()))?;
    record.validate()?;
    Ok(record)
}

/// Cross-record invariant: every record sharing (dataset, scheme, repeat)
/// must carry identical metrics, and no cell may appear twice.
pub fn validate_run(records: &[ExperimentRecord]) -> Result<()> {
    use std::collections::HashMap;
    let mut metrics: HashMap<(String, SchemeName, u32), MetricPair> = HashMap::new();
    let mut seen: std::collections::HashSet<CellKey> = std::collections::HashSet::new();
    for r in records {
        r.validate()?;
        if !seen.insert(r.cell_key()) {
            return Err(Error::invariant(
                "records",
                format!(
                    "duplicate cell ({}, {}, {})",
                    r.dataset_id,
                    r.scheme.as_str(),
                    r.defense_id.as_str()
                ),
            ));
        }
        let key = (r.dataset_id.clone(), r.scheme, r.repeat);
        match metrics.get(&key) {
            None => {
                metrics.insert(key, r.metrics);
            }
            Some(m) => {
                if m != &r.metrics {
                    return Err(Error::invariant(
                        "metrics",
                        format!(
                            "records for ({}, {}) carry different metrics",
                            r.dataset_id,
                            r.scheme.as_str()
                        ),
                    ));
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_record() -> ExperimentRecord {
        ExperimentRecord {
            schema_version: SCHEMA_VERSION,
            dataset_id: "toy".to_string(),
            scheme: SchemeName::Fp32,
            defense_id: DefenseId::Nc,
            verdict: CellOutcome::Ok {
                verdict: DefenseVerdict::from_diagnostics(DefenseDiagnostics::NeuralCleanse {
                    norms: vec![10.0, 280.5, 300.25],
                    anomaly_indices: vec![3.2, 0.1, -0.4],
                    median: 280.5,
                    mad: 19.75,
                    mad_threshold: 2.0,
                    flagged_classes: vec![0],
                }),
            },
            metrics: MetricPair::new(0.97, 0.99).unwrap(),
            wall_time_seconds: 1.25,
            seed: 7,
            repeat: 0,
        }
    }

    #[test]
    fn round_trip_identity() {
        let record = sample_record();
        let bytes = serialize_record(&record).unwrap();
        let back = deserialize_record(&bytes).unwrap();
        assert_eq!(record, back);
    }

    #[test]
    fn norms_survive_bit_exact() {
        let mut record = sample_record();
        // Awkward decimals that only survive exact round-trip encoding.
        let norms: Vec<f64> = (0..10).map(|i| 215.6 + (i as f64) * 0.1000001).collect();
        if let CellOutcome::Ok { verdict } = &mut record.verdict {
            if let DefenseDiagnostics::NeuralCleanse {
                norms: n,
                anomaly_indices,
                ..
            } = &mut verdict.diagnostics
            {
                *n = norms.clone();
                *anomaly_indices = vec![0.0; 10];
            }
            verdict.detected = verdict.diagnostics.recompute_detected();
        }
        let bytes = serialize_record(&record).unwrap();
        let back = deserialize_record(&bytes).unwrap();
        if let CellOutcome::Ok { verdict } = &back.verdict {
            if let DefenseDiagnostics::NeuralCleanse { norms: n, .. } = &verdict.diagnostics {
                for (a, b) in norms.iter().zip(n.iter()) {
                    assert_eq!(a.to_bits(), b.to_bits());
                }
                return;
            }
        }
        panic!("diagnostics lost in round trip");
    }

    #[test]
    fn out_of_range_accuracy_rejected() {
        let bytes = serialize_record(&sample_record()).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        let bad = text.replace("\"clean_accuracy\":0.97", "\"clean_accuracy\":1.5");
        let err = deserialize_record(bad.as_bytes()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("clean_accuracy"), "unexpected error: {msg}");
    }

    #[test]
    fn unknown_defense_id_lists_valid_ids() {
        let bytes = serialize_record(&sample_record()).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        let bad = text.replace("\"defense_id\":\"NC\"", "\"defense_id\":\"XX\"");
        let err = deserialize_record(bad.as_bytes()).unwrap_err();
        let msg = err.to_string();
        for id in ["NC", "AC", "STRIP", "SS", "FP"] {
            assert!(msg.contains(id), "error does not list `{id}`: {msg}");
        }
    }

    #[test]
    fn schema_version_mismatch_rejected() {
        let bytes = serialize_record(&sample_record()).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        let bad = text.replace("\"schema_version\":1", "\"schema_version\":2");
        match deserialize_record(bad.as_bytes()) {
            Err(Error::SchemaVersion { expected, found }) => {
                assert_eq!(expected, 1);
                assert_eq!(found, 2);
            }
            other => panic!("expected schema version error, got {other:?}"),
        }
    }

    #[test]
    fn inconsistent_detected_flag_rejected() {
        let bytes = serialize_record(&sample_record()).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        let bad = text.replace("\"detected\":true", "\"detected\":false");
        assert!(deserialize_record(bad.as_bytes()).is_err());
    }

    #[test]
    fn truncated_document_errors() {
        let bytes = serialize_record(&sample_record()).unwrap();
        for cut in [1, bytes.len() / 3, bytes.len() - 2] {
            let err = deserialize_record(&bytes[..cut]).unwrap_err();
            assert!(!err.to_string().is_empty());
        }
    }

    #[test]
    fn badnet_patch_geometry() {
        let spec = TriggerSpec::badnet_patch(3, 32, 32, 3, 0).unwrap();
        let set: f32 = spec.mask.sum();
        assert_eq!(set, 27.0); // 3 channels x 3x3 pixels
        assert_eq!(spec.mask[[0, 29, 29]], 1.0);
        assert_eq!(spec.mask[[2, 31, 31]], 1.0);
        assert_eq!(spec.mask[[0, 28, 29]], 0.0);
        assert_eq!(spec.pattern[[1, 30, 30]], 1.0);
    }

    #[test]
    fn metrics_consistency_checked_across_defenses() {
        let a = sample_record();
        let mut b = sample_record();
        b.defense_id = DefenseId::Fp;
        b.verdict = CellOutcome::Error {
            message: "boom".to_string(),
        };
        assert!(validate_run(&[a.clone(), b.clone()]).is_ok());
        b.metrics = MetricPair::new(0.5, 0.5).unwrap();
        assert!(validate_run(&[a, b]).is_err());
    }
}
