//! Report structures shared by the text and JSON renderers. The JSON shape
//! is the schema; the text renderer prints the same numbers at 12
//! significant digits.

use serde::Serialize;

use qsplit_core::decomp::{
    DecompositionResult, PartExtent, RestrictionBlock, SlotExtent, SlotRestriction,
};
use qsplit_core::opmodel::{Classification, ShiftKind};

use crate::format::{matrix_to_data, MatrixData};

fn fmt(x: f64) -> String {
    format!("{x:.12e}")
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassificationReport {
    pub unitary: bool,
    pub cnu: bool,
    pub isometry: bool,
    pub pure_isometry: bool,
    pub cni: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub atom_a: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub atom_b: Option<String>,
}

impl ClassificationReport {
    pub fn from_core(c: &Classification) -> Self {
        ClassificationReport {
            unitary: c.unitary,
            cnu: c.cnu,
            isometry: c.isometry,
            pure_isometry: c.pure_isometry,
            cni: c.cni,
            atom_a: c.atom_a.map(|a| a.to_string()),
            atom_b: c.atom_b.map(|a| a.to_string()),
        }
    }

    fn summary(&self) -> String {
        let mut flags = Vec::new();
        if self.unitary {
            flags.push("unitary");
        }
        if self.isometry && !self.unitary {
            flags.push("isometry");
        }
        if self.pure_isometry {
            flags.push("pure-isometry");
        }
        if self.cnu {
            flags.push("cnu");
        }
        if self.cni {
            flags.push("cni");
        }
        let mut out = if flags.is_empty() {
            "non-atom".to_string()
        } else {
            flags.join(", ")
        };
        match (&self.atom_a, &self.atom_b) {
            (Some(a), Some(b)) => out.push_str(&format!(" [{a}, {b}]")),
            (Some(a), None) => out.push_str(&format!(" [{a}]")),
            (None, Some(b)) => out.push_str(&format!(" [{b}]")),
            (None, None) => out.push_str(" [non-atom]"),
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OperatorReport {
    pub name: String,
    pub norm: f64,
    pub contraction_ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classification: Option<ClassificationReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub mode: String,
    pub ok: bool,
    pub threshold: f64,
    pub max_residual: f64,
    pub plain_residuals: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub doubly_residuals: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_commutation_residuals: Option<Vec<Vec<f64>>>,
    pub q_inferred: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inferred_q: Option<MatrixData>,
    pub offending_pairs: Vec<[usize; 2]>,
    pub operators: Vec<OperatorReport>,
    pub exit_code: i32,
}

fn render_matrix(out: &mut String, rows: &[Vec<f64>], indent: &str) {
    for row in rows {
        out.push_str(indent);
        let cells: Vec<String> = row.iter().map(|v| fmt(*v)).collect();
        out.push_str(&cells.join("  "));
        out.push('\n');
    }
}

impl VerifyReport {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("verify (mode: {})\n", self.mode));
        out.push_str("plain residual matrix:\n");
        render_matrix(&mut out, &self.plain_residuals, "  ");
        if let Some(doubly) = &self.doubly_residuals {
            out.push_str("doubly residual matrix:\n");
            render_matrix(&mut out, doubly, "  ");
        }
        if let Some(qc) = &self.q_commutation_residuals {
            out.push_str("Q-commutation residual matrix:\n");
            render_matrix(&mut out, qc, "  ");
        }
        out.push_str(&format!(
            "threshold: {}, max residual: {}\n",
            fmt(self.threshold),
            fmt(self.max_residual)
        ));
        if self.q_inferred {
            out.push_str("q: inferred by least squares (re-verified above)\n");
        }
        for (i, op) in self.operators.iter().enumerate() {
            let class = op
                .classification
                .as_ref()
                .map(|c| c.summary())
                .unwrap_or_else(|| "not a contraction".to_string());
            out.push_str(&format!(
                "operator {i} {:?}: norm {} — {}\n",
                op.name,
                fmt(op.norm),
                class
            ));
        }
        if !self.offending_pairs.is_empty() {
            let pairs: Vec<String> = self
                .offending_pairs
                .iter()
                .map(|p| format!("({},{})", p[0], p[1]))
                .collect();
            out.push_str(&format!("offending pairs: {}\n", pairs.join(" ")));
        }
        out.push_str(if self.ok { "result: PASS\n" } else { "result: FAIL\n" });
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassifyReport {
    pub operators: Vec<OperatorReport>,
    pub exit_code: i32,
}

impl ClassifyReport {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str("classify\n");
        for (i, op) in self.operators.iter().enumerate() {
            let class = op
                .classification
                .as_ref()
                .map(|c| c.summary())
                .unwrap_or_else(|| "not a contraction".to_string());
            out.push_str(&format!(
                "operator {i} {:?}: norm {} — {}\n",
                op.name,
                fmt(op.norm),
                class
            ));
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SlotBasisReport {
    Empty,
    Whole,
    Frame(MatrixData),
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisReport {
    Dense(MatrixData),
    Slots(Vec<SlotBasisReport>),
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SlotRestrictionReport {
    Empty,
    ShiftBlock {
        kind: String,
        value: [f64; 2],
        multiplicity: usize,
    },
    Matrix(MatrixData),
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RestrictionReport {
    Matrix(MatrixData),
    Slots(Vec<SlotRestrictionReport>),
}

#[derive(Debug, Clone, Serialize)]
pub struct PartReport {
    pub signature: String,
    pub dim: usize,
    pub infinite: bool,
    pub labels: Vec<String>,
    pub reduction_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub basis: Option<BasisReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub restrictions: Option<Vec<RestrictionReport>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_blocks: Option<Vec<MatrixData>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticsReport {
    pub max_reduction_residual: f64,
    pub completeness_residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecomposeReport {
    pub mode: String,
    pub parts: Vec<PartReport>,
    pub diagnostics: DiagnosticsReport,
    pub q_inferred: bool,
    pub warnings: Vec<String>,
    pub exit_code: i32,
}

fn shift_kind_report(kind: &ShiftKind) -> (String, [f64; 2]) {
    match kind {
        ShiftKind::Shift(c) => ("shift".into(), [c.re, c.im]),
        ShiftKind::PhaseDiag(p) => ("phase_diag".into(), [p.re, p.im]),
        ShiftKind::Scalar(c) => ("scalar".into(), [c.re, c.im]),
    }
}

pub fn part_reports(
    result: &DecompositionResult,
    emit_bases: bool,
) -> Vec<PartReport> {
    result
        .parts
        .iter()
        .map(|(sig, part)| {
            let basis = emit_bases.then(|| match &part.extent {
                PartExtent::Dense(s) => BasisReport::Dense(matrix_to_data(s.frame())),
                PartExtent::Structured(slots) => BasisReport::Slots(
                    slots
                        .iter()
                        .map(|e| match e {
                            SlotExtent::Empty => SlotBasisReport::Empty,
                            SlotExtent::Whole => SlotBasisReport::Whole,
                            SlotExtent::Sub(s) => SlotBasisReport::Frame(matrix_to_data(s.frame())),
                        })
                        .collect(),
                ),
            });
            let restrictions = emit_bases.then(|| {
                part.restrictions
                    .iter()
                    .map(|r| match r {
                        RestrictionBlock::Dense(m) => RestrictionReport::Matrix(matrix_to_data(m)),
                        RestrictionBlock::Slots(slots) => RestrictionReport::Slots(
                            slots
                                .iter()
                                .map(|s| match s {
                                    SlotRestriction::Empty => SlotRestrictionReport::Empty,
                                    SlotRestriction::Shift(b) => {
                                        let (kind, value) = shift_kind_report(&b.kind);
                                        SlotRestrictionReport::ShiftBlock {
                                            kind,
                                            value,
                                            multiplicity: b.multiplicity,
                                        }
                                    }
                                    SlotRestriction::Dense(m) => {
                                        SlotRestrictionReport::Matrix(matrix_to_data(m))
                                    }
                                })
                                .collect(),
                        ),
                    })
                    .collect()
            });
            let q_blocks = (emit_bases && !part.q_blocks.is_empty())
                .then(|| part.q_blocks.iter().map(matrix_to_data).collect());
            PartReport {
                signature: sig.clone(),
                dim: part.extent.finite_dim(),
                infinite: part.extent.has_infinite(),
                labels: part.labels.iter().map(|l| l.to_string()).collect(),
                reduction_residual: part.reduction_residual,
                basis,
                restrictions,
                q_blocks,
            }
        })
        .collect()
}

fn render_frame(out: &mut String, rows: &MatrixData, indent: &str) {
    for row in rows {
        out.push_str(indent);
        let cells: Vec<String> = row
            .iter()
            .map(|[re, im]| format!("{re:+.15e}{im:+.15e}i"))
            .collect();
        out.push_str(&cells.join("  "));
        out.push('\n');
    }
}

impl DecomposeReport {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("decompose (mode: {})\n", self.mode));
        for part in &self.parts {
            let dim = if part.infinite {
                format!("{}+inf", part.dim)
            } else {
                part.dim.to_string()
            };
            let labels = if part.labels.is_empty() {
                "-".to_string()
            } else {
                part.labels.join(",")
            };
            out.push_str(&format!(
                "part {:>8}: dim {:>6}  labels [{}]  reduction residual {}\n",
                part.signature,
                dim,
                labels,
                fmt(part.reduction_residual)
            ));
            match &part.basis {
                Some(BasisReport::Dense(rows)) if !rows.is_empty() => {
                    out.push_str("  basis (columns = frame vectors):\n");
                    render_frame(&mut out, rows, "    ");
                }
                Some(BasisReport::Slots(slots)) => {
                    for (i, slot) in slots.iter().enumerate() {
                        match slot {
                            SlotBasisReport::Empty => {}
                            SlotBasisReport::Whole => {
                                out.push_str(&format!("  slot {i}: whole slot\n"));
                            }
                            SlotBasisReport::Frame(rows) if !rows.is_empty() => {
                                out.push_str(&format!("  slot {i} basis:\n"));
                                render_frame(&mut out, rows, "    ");
                            }
                            SlotBasisReport::Frame(_) => {}
                        }
                    }
                }
                _ => {}
            }
        }
        out.push_str(&format!(
            "diagnostics: max reduction residual {}, completeness {}, iterations {}\n",
            fmt(self.diagnostics.max_reduction_residual),
            fmt(self.diagnostics.completeness_residual),
            self.diagnostics.iterations
        ));
        if self.q_inferred {
            out.push_str("q: inferred by least squares\n");
        }
        for w in &self.warnings {
            out.push_str(&format!("warning: {w}\n"));
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GroundTruthEntry {
    pub signature: String,
    pub dim: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct GenerateReport {
    pub family: String,
    pub path: String,
    pub seed: u64,
    pub operators: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub ground_truth: Vec<GroundTruthEntry>,
    pub exit_code: i32,
}

impl GenerateReport {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "generate {} (seed {}) -> {}\n",
            self.family, self.seed, self.path
        ));
        if !self.ground_truth.is_empty() {
            out.push_str("planted ground truth:\n");
            for entry in &self.ground_truth {
                out.push_str(&format!("  {}: dim {}\n", entry.signature, entry.dim));
            }
        }
        out
    }
}
