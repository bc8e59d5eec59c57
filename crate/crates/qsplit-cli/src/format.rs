//! Operator file format: UTF-8 JSON with complex numbers as [re, im] pairs
//! and matrices as row-major arrays of rows.
//!
//! Top level: `dim` (dense tuple) or `slots` (structured tuple), an
//! `operators` array, optional scalar phases `q` (n x n), optional unitary
//! family `Q` (n x n array of matrices) and optional `meta`.

use serde::{Deserialize, Serialize};

use qsplit_core::error::{Error, Result};
use qsplit_core::opmodel::{
    CommutationData, Operator, OperatorTuple, ShiftBlock, ShiftKind, SlotOperator,
    StructuredOperator,
};
use qsplit_core::{CMatrix, Complex64};

/// Row-major matrix of [re, im] entries.
pub type MatrixData = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OperatorFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slots: Option<Vec<SlotLayoutDesc>>,
    pub operators: Vec<OperatorDesc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<MatrixData>,
    #[serde(rename = "Q", default, skip_serializing_if = "Option::is_none")]
    pub q_family: Option<Vec<Vec<MatrixData>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<Meta>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SlotLayoutDesc {
    Dense { dim: usize },
    Shift { multiplicity: usize },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OperatorDesc {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<MatrixData>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<Vec<BlockDesc>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockDesc {
    Matrix(MatrixData),
    Shift { c: [f64; 2] },
    PhaseDiag { p: [f64; 2] },
    Scalar { c: [f64; 2] },
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Meta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

pub fn matrix_to_data(m: &CMatrix) -> MatrixData {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn matrix_from_data(rows: &MatrixData) -> Result<CMatrix> {
    let nrows = rows.len();
    let ncols = rows.first().map(|r| r.len()).unwrap_or(0);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != ncols {
            return Err(Error::InvalidMatrix(format!(
                "row {i} has {} entries, expected {ncols}",
                row.len()
            )));
        }
    }
    Ok(CMatrix::from_fn(nrows, ncols, |i, j| {
        Complex64::new(rows[i][j][0], rows[i][j][1])
    }))
}

fn complex_of(pair: [f64; 2]) -> Complex64 {
    Complex64::new(pair[0], pair[1])
}

impl OperatorFile {
    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("operator files serialize infallibly")
    }

    /// Builds the validated tuple. `q` missing with n >= 2 yields trivial
    /// phases unless `infer` supplies fitted ones.
    pub fn to_tuple(&self) -> Result<OperatorTuple> {
        let n = self.operators.len();
        if n == 0 {
            return Err(Error::InvalidArg("file contains no operators".into()));
        }
        let operators: Vec<Operator> = match (&self.dim, &self.slots) {
            (Some(_), Some(_)) => {
                return Err(Error::InvalidArg(
                    "file declares both `dim` and `slots`; pick one".into(),
                ))
            }
            (Some(dim), None) => {
                let mut ops = Vec::with_capacity(n);
                for desc in &self.operators {
                    let data = desc.matrix.as_ref().ok_or_else(|| {
                        Error::InvalidArg(format!(
                            "operator {:?} needs a `matrix` in a dense file",
                            desc.name
                        ))
                    })?;
                    let m = matrix_from_data(data)?;
                    if m.nrows() != *dim || m.ncols() != *dim {
                        return Err(Error::DimMismatch(format!(
                            "operator {:?} is {}x{}, file declares dim {}",
                            desc.name,
                            m.nrows(),
                            m.ncols(),
                            dim
                        )));
                    }
                    ops.push(Operator::Dense(m));
                }
                ops
            }
            (None, Some(slots)) => {
                let mut ops = Vec::with_capacity(n);
                for desc in &self.operators {
                    let blocks = desc.blocks.as_ref().ok_or_else(|| {
                        Error::InvalidArg(format!(
                            "operator {:?} needs `blocks` in a structured file",
                            desc.name
                        ))
                    })?;
                    if blocks.len() != slots.len() {
                        return Err(Error::DimMismatch(format!(
                            "operator {:?} has {} blocks, layout has {} slots",
                            desc.name,
                            blocks.len(),
                            slots.len()
                        )));
                    }
                    let mut slot_ops = Vec::with_capacity(blocks.len());
                    for (layout, block) in slots.iter().zip(blocks) {
                        slot_ops.push(slot_operator(layout, block, &desc.name)?);
                    }
                    ops.push(Operator::Structured(StructuredOperator { slots: slot_ops }));
                }
                ops
            }
            (None, None) => {
                return Err(Error::InvalidArg(
                    "file must declare either `dim` or `slots`".into(),
                ))
            }
        };

        let commutation = match (&self.q, &self.q_family) {
            (Some(_), Some(_)) => {
                return Err(Error::InvalidArg(
                    "file declares both `q` and `Q`; pick one".into(),
                ))
            }
            (Some(q), None) => CommutationData::ScalarPhases(matrix_from_data(q)?),
            (None, Some(family)) => {
                let mut rows = Vec::with_capacity(family.len());
                for row in family {
                    let mut out = Vec::with_capacity(row.len());
                    for m in row {
                        out.push(matrix_from_data(m)?);
                    }
                    rows.push(out);
                }
                CommutationData::UnitaryFamily(rows)
            }
            (None, None) => CommutationData::trivial(n),
        };
        OperatorTuple::new(operators, commutation)
    }

    /// File body for a dense tuple.
    pub fn from_dense_tuple(tuple: &OperatorTuple, names: &[String], meta: Option<Meta>) -> Self {
        let dim = tuple.operators[0]
            .as_dense()
            .map(|m| m.nrows())
            .expect("dense tuple");
        let operators = tuple
            .operators
            .iter()
            .zip(names)
            .map(|(op, name)| OperatorDesc {
                name: name.clone(),
                matrix: Some(matrix_to_data(op.as_dense().expect("dense tuple"))),
                blocks: None,
            })
            .collect();
        let (q, q_family) = match &tuple.commutation {
            CommutationData::ScalarPhases(qm) => (Some(matrix_to_data(qm)), None),
            CommutationData::UnitaryFamily(fam) => (
                None,
                Some(
                    fam.iter()
                        .map(|row| row.iter().map(matrix_to_data).collect())
                        .collect(),
                ),
            ),
        };
        OperatorFile {
            dim: Some(dim),
            slots: None,
            operators,
            q,
            q_family,
            meta,
        }
    }
}

fn slot_operator(layout: &SlotLayoutDesc, block: &BlockDesc, name: &str) -> Result<SlotOperator> {
    match (layout, block) {
        (SlotLayoutDesc::Dense { dim }, BlockDesc::Matrix(data)) => {
            let m = matrix_from_data(data)?;
            if m.nrows() != *dim || m.ncols() != *dim {
                return Err(Error::DimMismatch(format!(
                    "operator {name:?}: dense block is {}x{}, slot declares dim {}",
                    m.nrows(),
                    m.ncols(),
                    dim
                )));
            }
            Ok(SlotOperator::Dense(m))
        }
        (SlotLayoutDesc::Shift { multiplicity }, block) => {
            let kind = match block {
                BlockDesc::Shift { c } => ShiftKind::Shift(complex_of(*c)),
                BlockDesc::PhaseDiag { p } => ShiftKind::PhaseDiag(complex_of(*p)),
                BlockDesc::Scalar { c } => ShiftKind::Scalar(complex_of(*c)),
                BlockDesc::Matrix(_) => {
                    return Err(Error::InvalidArg(format!(
                        "operator {name:?}: a shift slot takes shift/phase_diag/scalar blocks, not a matrix"
                    )))
                }
            };
            Ok(SlotOperator::Shift(ShiftBlock {
                kind,
                multiplicity: *multiplicity,
            }))
        }
        (SlotLayoutDesc::Dense { .. }, _) => Err(Error::InvalidArg(format!(
            "operator {name:?}: a dense slot takes a matrix block"
        ))),
    }
}
