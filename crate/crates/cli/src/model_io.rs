//! Versioned JSON model files. Trees are stored as nested nodes,
//! `{"feature", "threshold", "missing_direction", "left", "right"}` for splits
//! and `{"mu"}` for leaves; the time axis is written as `"feature": "time"`.
//! Floats are written in shortest round-trip form and parsed exactly, so a
//! loaded model predicts bit-identically to the one that was saved.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use treesurv_core::forest::{Axis, Ensemble, MissingDirection, Node, NodeKind, SplitRule, Tree};
use treesurv_core::mcmc::{FitConfig, FitDiagnostics, PosteriorDraws};
use treesurv_core::records::TimeGrid;

use crate::error::{CliError, Result};

pub const FORMAT: &str = "treesurv-model";
pub const FORMAT_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// First 16 hex digits of the SHA-256 of the value's compact JSON.
pub fn config_hash<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("config serializes");
    Sha256::digest(&bytes)[..8].iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    format_version: u32,
    tool_version: String,
    config_hash: String,
    seed: u64,
    config: FitConfig,
    grid: Vec<f64>,
    feature_names: Vec<String>,
    diagnostics: FitDiagnostics,
    draws: Vec<Vec<TreeRepr>>,
}

#[derive(Serialize, Deserialize, Clone, Copy, PartialEq)]
#[serde(rename_all = "lowercase")]
enum TimeTag {
    Time,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum AxisRepr {
    Feature(usize),
    Time(TimeTag),
}

#[derive(Serialize, Deserialize, Clone, Copy)]
#[serde(rename_all = "kebab-case")]
enum DirectionRepr {
    MissingLeft,
    MissingRight,
    MissingOnly,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum TreeRepr {
    Split {
        feature: AxisRepr,
        threshold: f64,
        missing_direction: DirectionRepr,
        left: Box<TreeRepr>,
        right: Box<TreeRepr>,
    },
    Leaf {
        mu: f64,
    },
}

fn to_repr(tree: &Tree, id: usize) -> TreeRepr {
    match &tree.node(id).kind {
        NodeKind::Leaf { mu } => TreeRepr::Leaf { mu: *mu },
        NodeKind::Split { rule, right } => TreeRepr::Split {
            feature: match rule.axis {
                Axis::Feature(j) => AxisRepr::Feature(j),
                Axis::Time => AxisRepr::Time(TimeTag::Time),
            },
            threshold: rule.threshold,
            missing_direction: match rule.missing {
                MissingDirection::MissingLeft => DirectionRepr::MissingLeft,
                MissingDirection::MissingRight => DirectionRepr::MissingRight,
                MissingDirection::MissingOnly => DirectionRepr::MissingOnly,
            },
            left: Box::new(to_repr(tree, id + 1)),
            right: Box::new(to_repr(tree, *right)),
        },
    }
}

fn push_nodes(repr: &TreeRepr, depth: usize, out: &mut Vec<Node>) {
    match repr {
        TreeRepr::Leaf { mu } => out.push(Node {
            depth,
            kind: NodeKind::Leaf { mu: *mu },
        }),
        TreeRepr::Split {
            feature,
            threshold,
            missing_direction,
            left,
            right,
        } => {
            let rule = SplitRule {
                axis: match feature {
                    AxisRepr::Feature(j) => Axis::Feature(*j),
                    AxisRepr::Time(_) => Axis::Time,
                },
                threshold: *threshold,
                missing: match missing_direction {
                    DirectionRepr::MissingLeft => MissingDirection::MissingLeft,
                    DirectionRepr::MissingRight => MissingDirection::MissingRight,
                    DirectionRepr::MissingOnly => MissingDirection::MissingOnly,
                },
            };
            let at = out.len();
            out.push(Node {
                depth,
                kind: NodeKind::Split { rule, right: 0 },
            });
            push_nodes(left, depth + 1, out);
            let right_id = out.len();
            if let NodeKind::Split { right, .. } = &mut out[at].kind {
                *right = right_id;
            }
            push_nodes(right, depth + 1, out);
        }
    }
}

fn from_repr(repr: &TreeRepr) -> Option<Tree> {
    let mut nodes = Vec::new();
    push_nodes(repr, 0, &mut nodes);
    Tree::from_nodes(nodes)
}

pub fn write_model<W: Write>(out: W, draws: &PosteriorDraws) -> serde_json::Result<()> {
    let file = ModelFile {
        format: FORMAT.into(),
        format_version: FORMAT_VERSION,
        tool_version: TOOL_VERSION.into(),
        config_hash: config_hash(&draws.config),
        seed: draws.config.seed,
        config: draws.config.clone(),
        grid: draws.grid.boundaries().to_vec(),
        feature_names: draws.feature_names.clone(),
        diagnostics: draws.diagnostics.clone(),
        draws: draws
            .draws
            .iter()
            .map(|e| e.trees.iter().map(|t| to_repr(t, 0)).collect())
            .collect(),
    };
    serde_json::to_writer(out, &file)
}

/// Parse a model file; `source` names the input in error messages.
pub fn read_model<R: Read>(input: R, source: &str) -> Result<PosteriorDraws> {
    let bad = |message: String| CliError::Format {
        path: source.to_string(),
        message,
    };
    let file: ModelFile = serde_json::from_reader(input).map_err(|e| bad(e.to_string()))?;
    if file.format != FORMAT {
        return Err(bad(format!("not a {FORMAT} file (format '{}')", file.format)));
    }
    if file.format_version != FORMAT_VERSION {
        return Err(bad(format!(
            "unsupported format version {} (expected {FORMAT_VERSION})",
            file.format_version
        )));
    }
    if file.config_hash != config_hash(&file.config) {
        return Err(bad("config hash does not match the stored config".into()));
    }
    if file.seed != file.config.seed {
        return Err(bad("seed does not match the stored config".into()));
    }
    file.config.validate()?;
    let grid = TimeGrid::new(file.grid)?;
    let d = file.feature_names.len();
    let mut draws = Vec::with_capacity(file.draws.len());
    for (s, trees) in file.draws.iter().enumerate() {
        if trees.len() != file.config.n_trees {
            return Err(bad(format!("draw {s} has {} trees, expected {}", trees.len(), file.config.n_trees)));
        }
        let trees = trees
            .iter()
            .map(|t| {
                from_repr(t)
                    .filter(|tree| tree.max_feature().is_none_or(|j| j < d))
                    .ok_or_else(|| bad(format!("draw {s} holds a malformed tree")))
            })
            .collect::<Result<Vec<_>>>()?;
        draws.push(Ensemble { trees, n_features: d });
    }
    if draws.is_empty() {
        return Err(bad("model holds no posterior draws".into()));
    }
    Ok(PosteriorDraws {
        draws,
        config: file.config,
        grid,
        feature_names: file.feature_names,
        diagnostics: file.diagnostics,
    })
}
