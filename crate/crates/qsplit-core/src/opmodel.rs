//! Operator and tuple data model: dense contractions, structured shift-slot
//! operators, commutation data (scalar phases q or unitary families Q),
//! relation verification, defect operators and atom classification.
//!
//! Relation convention, fixed once and used everywhere:
//!
//! ```text
//!   plain:   T_i T_j  = q_ij T_j T_i          T_i T_j  = Q(j,i)  T_j T_i
//!   doubly:  T_i T_j* = conj(q_ij) T_j* T_i   T_i T_j* = Q(j,i)* T_j* T_i
//! ```
//!
//! with q_ii = 1 and q_ji = q_ij^{-1}. The doubly relation is a pairwise
//! condition on distinct indices; the diagonal is excluded (requiring it
//! would force every member to be normal).

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numkit::{self, CMatrix, Tolerance};

/// Modulus slack accepted on |p| = 1 and |c| <= 1 slot constraints.
const SLOT_EPS: f64 = 1e-12;
/// Slack accepted on the scalar-phase invariants q_ii = 1, q_ji = 1/q_ij.
const PHASE_EPS: f64 = 1e-12;
/// Slack accepted on the unitary-family invariants Q(i,i) = I, Q unitary.
const Q_EPS: f64 = 1e-10;
/// |q| = 1 gate for doubly-mode verification.
const UNIMODULAR_EPS: f64 = 1e-8;

/// Block acting on a shift slot l2 ⊗ C^m: a scaled unilateral shift, a
/// phase diagonal diag(p^0, p^1, ...) or a scalar multiple of the identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShiftKind {
    Shift(Complex64),
    PhaseDiag(Complex64),
    Scalar(Complex64),
}

impl ShiftKind {
    /// Operator norm of the block.
    pub fn norm(&self) -> f64 {
        match self {
            ShiftKind::Shift(c) | ShiftKind::Scalar(c) => c.norm(),
            ShiftKind::PhaseDiag(_) => 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ShiftKind::Shift(c) | ShiftKind::Scalar(c) => {
                if !c.re.is_finite() || !c.im.is_finite() {
                    return Err(Error::InvalidArg("non-finite slot coefficient".into()));
                }
                if c.norm() > 1.0 + SLOT_EPS {
                    return Err(Error::NotAContraction { norm: c.norm() });
                }
            }
            ShiftKind::PhaseDiag(p) => {
                if !p.re.is_finite() || !p.im.is_finite() {
                    return Err(Error::InvalidArg("non-finite slot phase".into()));
                }
                if (p.norm() - 1.0).abs() > SLOT_EPS {
                    return Err(Error::InvalidArg(format!(
                        "phase-diagonal parameter must be unimodular, |p| = {}",
                        p.norm()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn is_unitary(&self) -> bool {
        match self {
            ShiftKind::Shift(_) => false,
            ShiftKind::PhaseDiag(_) => true,
            ShiftKind::Scalar(c) => (c.norm() - 1.0).abs() <= SLOT_EPS,
        }
    }

    pub fn is_isometry(&self) -> bool {
        match self {
            ShiftKind::Shift(c) => (c.norm() - 1.0).abs() <= SLOT_EPS,
            _ => self.is_unitary(),
        }
    }
}

/// Shift-slot block with multiplicity: the only place infinite dimension appears.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftBlock {
    pub kind: ShiftKind,
    pub multiplicity: usize,
}

impl ShiftBlock {
    pub fn validate(&self) -> Result<()> {
        if self.multiplicity == 0 {
            return Err(Error::InvalidArg("slot multiplicity must be positive".into()));
        }
        self.kind.validate()
    }
}

/// One slot of a structured operator.
#[derive(Debug, Clone)]
pub enum SlotOperator {
    Dense(CMatrix),
    Shift(ShiftBlock),
}

/// Shared slot layout of a structured tuple.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotLayout {
    /// Dense block of the given side.
    Dense(usize),
    /// Shift slot of the given multiplicity.
    Shift(usize),
}

/// Finite aligned direct sum of dense blocks and symbolic shift-slot blocks.
#[derive(Debug, Clone)]
pub struct StructuredOperator {
    pub slots: Vec<SlotOperator>,
}

impl StructuredOperator {
    pub fn layout(&self) -> Vec<SlotLayout> {
        self.slots
            .iter()
            .map(|s| match s {
                SlotOperator::Dense(m) => SlotLayout::Dense(m.nrows()),
                SlotOperator::Shift(b) => SlotLayout::Shift(b.multiplicity),
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.slots.is_empty() {
            return Err(Error::InvalidArg("structured operator needs at least one slot".into()));
        }
        for slot in &self.slots {
            match slot {
                SlotOperator::Dense(m) => {
                    numkit::ensure_finite(m)?;
                    if m.nrows() != m.ncols() {
                        return Err(Error::DimMismatch(format!(
                            "dense slot must be square, got {}x{}",
                            m.nrows(),
                            m.ncols()
                        )));
                    }
                    if m.nrows() == 0 {
                        return Err(Error::InvalidArg("dense slot must be nonempty".into()));
                    }
                }
                SlotOperator::Shift(b) => b.validate()?,
            }
        }
        Ok(())
    }

    pub fn operator_norm(&self) -> f64 {
        self.slots
            .iter()
            .map(|s| match s {
                SlotOperator::Dense(m) => numkit::spectral_norm(m),
                SlotOperator::Shift(b) => b.kind.norm(),
            })
            .fold(0.0, f64::max)
    }
}

/// A dense square matrix or a structured direct sum.
#[derive(Debug, Clone)]
pub enum Operator {
    Dense(CMatrix),
    Structured(StructuredOperator),
}

impl Operator {
    pub fn validate(&self) -> Result<()> {
        match self {
            Operator::Dense(m) => {
                numkit::ensure_finite(m)?;
                if m.nrows() != m.ncols() {
                    return Err(Error::DimMismatch(format!(
                        "operator must be square, got {}x{}",
                        m.nrows(),
                        m.ncols()
                    )));
                }
                Ok(())
            }
            Operator::Structured(s) => s.validate(),
        }
    }

    pub fn operator_norm(&self) -> f64 {
        match self {
            Operator::Dense(m) => numkit::spectral_norm(m),
            Operator::Structured(s) => s.operator_norm(),
        }
    }

    pub fn as_dense(&self) -> Option<&CMatrix> {
        match self {
            Operator::Dense(m) => Some(m),
            Operator::Structured(_) => None,
        }
    }
}

/// Commutation data for an n-tuple: scalar phases or a family of unitaries.
#[derive(Debug, Clone)]
pub enum CommutationData {
    /// n x n matrix of scalars q_ij with q_ii = 1 and q_ji = q_ij^{-1}.
    ScalarPhases(CMatrix),
    /// n x n family of unitaries with Q(i,i) = I and Q(i,j) = Q(j,i)*.
    UnitaryFamily(Vec<Vec<CMatrix>>),
}

impl CommutationData {
    /// Commuting scalar data (q_ij = 1) for an n-tuple.
    pub fn trivial(n: usize) -> Self {
        CommutationData::ScalarPhases(CMatrix::from_element(n, n, Complex64::new(1.0, 0.0)))
    }

    /// Scalar data for a pair with the stored phase q_12 = q.
    pub fn pair(q: Complex64) -> Self {
        let one = Complex64::new(1.0, 0.0);
        CommutationData::ScalarPhases(CMatrix::from_row_slice(2, 2, &[one, q, one / q, one]))
    }

    pub fn len(&self) -> usize {
        match self {
            CommutationData::ScalarPhases(q) => q.nrows(),
            CommutationData::UnitaryFamily(q) => q.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            CommutationData::ScalarPhases(q) => {
                numkit::ensure_finite(q)?;
                let n = q.nrows();
                if q.ncols() != n {
                    return Err(Error::DimMismatch("scalar phase matrix must be square".into()));
                }
                for i in 0..n {
                    if (q[(i, i)] - Complex64::new(1.0, 0.0)).norm() > PHASE_EPS {
                        return Err(Error::InvalidArg(format!(
                            "q({i},{i}) must be 1, got {}",
                            q[(i, i)]
                        )));
                    }
                    for j in 0..n {
                        if q[(i, j)].norm() == 0.0 {
                            return Err(Error::InvalidArg(format!("q({i},{j}) must be nonzero")));
                        }
                        if (q[(j, i)] - 1.0 / q[(i, j)]).norm() > PHASE_EPS {
                            return Err(Error::InvalidArg(format!(
                                "q({j},{i}) must be the inverse of q({i},{j})"
                            )));
                        }
                    }
                }
                Ok(())
            }
            CommutationData::UnitaryFamily(q) => {
                let n = q.len();
                let mut side = None;
                for (i, row) in q.iter().enumerate() {
                    if row.len() != n {
                        return Err(Error::DimMismatch("Q family must be n x n".into()));
                    }
                    for (j, m) in row.iter().enumerate() {
                        numkit::ensure_finite(m)?;
                        if m.nrows() != m.ncols() {
                            return Err(Error::DimMismatch(format!("Q({i},{j}) must be square")));
                        }
                        match side {
                            None => side = Some(m.nrows()),
                            Some(d) if d != m.nrows() => {
                                return Err(Error::DimMismatch(
                                    "all Q(i,j) must share one ambient dimension".into(),
                                ))
                            }
                            _ => {}
                        }
                        let d = m.nrows();
                        let dev = numkit::spectral_norm(&(m.adjoint() * m - numkit::identity(d)));
                        if dev > Q_EPS {
                            return Err(Error::InvalidArg(format!(
                                "Q({i},{j}) is not unitary: deviation {dev:.3e}"
                            )));
                        }
                        if i == j {
                            let dev = numkit::spectral_norm(&(m - numkit::identity(d)));
                            if dev > Q_EPS {
                                return Err(Error::InvalidArg(format!(
                                    "Q({i},{i}) must be the identity: deviation {dev:.3e}"
                                )));
                            }
                        }
                        let sym = numkit::spectral_norm(&(&q[j][i] - m.adjoint()));
                        if sym > Q_EPS {
                            return Err(Error::InvalidArg(format!(
                                "Q({j},{i}) must equal Q({i},{j})*: deviation {sym:.3e}"
                            )));
                        }
                    }
                }
                Ok(())
            }
        }
    }
}

/// n operators on a shared space plus their commutation data.
#[derive(Debug, Clone)]
pub struct OperatorTuple {
    pub operators: Vec<Operator>,
    pub commutation: CommutationData,
}

impl OperatorTuple {
    pub fn new(operators: Vec<Operator>, commutation: CommutationData) -> Result<Self> {
        let tuple = OperatorTuple { operators, commutation };
        tuple.validate()?;
        Ok(tuple)
    }

    /// Dense tuple with trivial (commuting) phases.
    pub fn dense(operators: Vec<CMatrix>, commutation: CommutationData) -> Result<Self> {
        Self::new(operators.into_iter().map(Operator::Dense).collect(), commutation)
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.operators.is_empty() {
            return Err(Error::InvalidArg("tuple needs at least one operator".into()));
        }
        if self.commutation.len() != self.operators.len() {
            return Err(Error::DimMismatch(format!(
                "commutation data is {}x{} but the tuple has {} operators",
                self.commutation.len(),
                self.commutation.len(),
                self.operators.len()
            )));
        }
        self.commutation.validate()?;
        for op in &self.operators {
            op.validate()?;
        }
        match &self.operators[0] {
            Operator::Dense(first) => {
                let d = first.nrows();
                for op in &self.operators {
                    match op {
                        Operator::Dense(m) if m.nrows() == d => {}
                        Operator::Dense(m) => {
                            return Err(Error::DimMismatch(format!(
                                "operators act on different spaces: {} vs {}",
                                d,
                                m.nrows()
                            )))
                        }
                        Operator::Structured(_) => {
                            return Err(Error::DimMismatch(
                                "tuple mixes dense and structured operators".into(),
                            ))
                        }
                    }
                }
                if let CommutationData::UnitaryFamily(q) = &self.commutation {
                    if let Some(row) = q.first() {
                        if let Some(m) = row.first() {
                            if m.nrows() != d {
                                return Err(Error::DimMismatch(format!(
                                    "Q(i,j) side {} does not match operator side {}",
                                    m.nrows(),
                                    d
                                )));
                            }
                        }
                    }
                }
            }
            Operator::Structured(first) => {
                if matches!(self.commutation, CommutationData::UnitaryFamily(_)) {
                    return Err(Error::StructuredUnsupported(
                        "unitary-family commutation data requires dense operators".into(),
                    ));
                }
                let layout = first.layout();
                for op in &self.operators {
                    match op {
                        Operator::Structured(s) if s.layout() == layout => {}
                        Operator::Structured(_) => {
                            return Err(Error::DimMismatch(
                                "structured operators have mismatched slot layouts".into(),
                            ))
                        }
                        Operator::Dense(_) => {
                            return Err(Error::DimMismatch(
                                "tuple mixes dense and structured operators".into(),
                            ))
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Largest operator norm in the tuple.
    pub fn max_norm(&self) -> f64 {
        self.operators.iter().map(Operator::operator_norm).fold(0.0, f64::max)
    }

    /// All operators as dense matrices, or None when structured.
    pub fn dense_operators(&self) -> Option<Vec<&CMatrix>> {
        self.operators.iter().map(Operator::as_dense).collect()
    }

    /// Stored phase for the ordered pair (i, j) in scalar mode.
    pub fn scalar_phase(&self, i: usize, j: usize) -> Option<Complex64> {
        match &self.commutation {
            CommutationData::ScalarPhases(q) => Some(q[(i, j)]),
            CommutationData::UnitaryFamily(_) => None,
        }
    }
}

/// Result of a contraction check.
#[derive(Debug, Clone, Copy)]
pub struct ContractionReport {
    pub norm: f64,
    pub ok: bool,
}

/// Checks the operator norm against 1 (slack 10 * tol.rel).
pub fn verify_contraction(op: &Operator, tol: Tolerance) -> Result<ContractionReport> {
    op.validate()?;
    let norm = op.operator_norm();
    Ok(ContractionReport {
        norm,
        ok: norm <= 1.0 + 10.0 * tol.rel,
    })
}

/// Which commutation relation to verify.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelationMode {
    Plain,
    Doubly,
}

/// Residual matrices of a relation check.
#[derive(Debug, Clone)]
pub struct RelationResiduals {
    /// Entry (i,j): ‖T_i T_j − q_ij T_j T_i‖ (plain) or
    /// ‖T_i T_j* − conj(q_ij) T_j* T_i‖ (doubly, i ≠ j; diagonal 0).
    pub pairwise: DMatrix<f64>,
    /// Unitary-family mode only. Entry (i,j): ‖Q(i,j) T_i − T_i Q(i,j)‖;
    /// together with entry (j,i) this covers the hypothesis that Q(i,j)
    /// commutes with both T_i and T_j.
    pub q_commutation: Option<DMatrix<f64>>,
}

impl RelationResiduals {
    pub fn max_pairwise(&self) -> f64 {
        self.pairwise.iter().cloned().fold(0.0, f64::max)
    }

    pub fn max_q_commutation(&self) -> f64 {
        self.q_commutation
            .as_ref()
            .map(|m| m.iter().cloned().fold(0.0, f64::max))
            .unwrap_or(0.0)
    }
}

fn dense_pair_residual(
    ti: &CMatrix,
    tj: &CMatrix,
    phase: &PairPhase,
    mode: RelationMode,
) -> f64 {
    match mode {
        RelationMode::Plain => {
            let lhs = ti * tj;
            let rhs = tj * ti;
            let dev = match phase {
                PairPhase::Scalar(q) => lhs - rhs.scale_complex(*q),
                PairPhase::Unitary(qji) => lhs - *qji * rhs,
            };
            numkit::spectral_norm(&dev)
        }
        RelationMode::Doubly => {
            let lhs = ti * tj.adjoint();
            let rhs = tj.adjoint() * ti;
            let dev = match phase {
                PairPhase::Scalar(q) => lhs - rhs.scale_complex(q.conj()),
                PairPhase::Unitary(qji) => lhs - qji.adjoint() * rhs,
            };
            numkit::spectral_norm(&dev)
        }
    }
}

enum PairPhase<'a> {
    Scalar(Complex64),
    /// Q(j,i) for the ordered pair (i, j).
    Unitary(&'a CMatrix),
}

trait ScaleComplex {
    fn scale_complex(&self, s: Complex64) -> CMatrix;
}

impl ScaleComplex for CMatrix {
    fn scale_complex(&self, s: Complex64) -> CMatrix {
        self.map(|v| v * s)
    }
}

/// Exact symbolic residual for a pair of shift-slot blocks on one slot.
///
/// All the identities involved are index computations on the unilateral
/// shift and phase diagonals, so these residuals are exact scalars:
/// floating-point evaluation would only add noise.
fn slot_pair_residual(b1: ShiftKind, b2: ShiftKind, q: Complex64, mode: RelationMode) -> f64 {
    use ShiftKind::*;
    let one = Complex64::new(1.0, 0.0);
    let scale = b1.norm() * b2.norm();
    // Phase q_true with T1 T2 = q_true T2 T1 (exact in every case).
    let q_true = match (b1, b2) {
        (PhaseDiag(p), Shift(_)) => p,
        (Shift(_), PhaseDiag(p)) => p.conj(),
        _ => one,
    };
    match mode {
        RelationMode::Plain => (q_true - q).norm() * scale,
        RelationMode::Doubly => match (b1, b2) {
            // Two shifts on one slot never doubly commute: S S* misses the
            // bottom basis vector, leaving the exact residual below.
            (Shift(_), Shift(_)) => scale * q.norm().max((one - q).norm()),
            // Every other combination satisfies the doubly relation exactly
            // with the same q_true as the plain relation.
            _ => (q_true - q).norm() * scale,
        },
    }
}

/// Pairwise relation residuals of a tuple under the stored convention.
pub fn relation_residual(tuple: &OperatorTuple, mode: RelationMode) -> Result<RelationResiduals> {
    tuple.validate()?;
    let n = tuple.len();
    let mut pairwise = DMatrix::<f64>::zeros(n, n);
    let mut q_comm: Option<DMatrix<f64>> = None;

    match (&tuple.operators[0], &tuple.commutation) {
        (Operator::Dense(_), commutation) => {
            let ops: Vec<&CMatrix> = tuple
                .operators
                .iter()
                .map(|o| o.as_dense().expect("validated dense tuple"))
                .collect();
            for i in 0..n {
                for j in 0..n {
                    if i == j && mode == RelationMode::Doubly {
                        continue;
                    }
                    let phase = match commutation {
                        CommutationData::ScalarPhases(q) => PairPhase::Scalar(q[(i, j)]),
                        CommutationData::UnitaryFamily(q) => PairPhase::Unitary(&q[j][i]),
                    };
                    pairwise[(i, j)] = dense_pair_residual(ops[i], ops[j], &phase, mode);
                }
            }
            if let CommutationData::UnitaryFamily(q) = commutation {
                let mut qc = DMatrix::<f64>::zeros(n, n);
                for i in 0..n {
                    for j in 0..n {
                        let dev = &q[i][j] * ops[i] - ops[i] * &q[i][j];
                        qc[(i, j)] = numkit::spectral_norm(&dev);
                    }
                }
                q_comm = Some(qc);
            }
        }
        (Operator::Structured(_), CommutationData::ScalarPhases(qm)) => {
            for i in 0..n {
                for j in 0..n {
                    if i == j && mode == RelationMode::Doubly {
                        continue;
                    }
                    let (si, sj) = match (&tuple.operators[i], &tuple.operators[j]) {
                        (Operator::Structured(a), Operator::Structured(b)) => (a, b),
                        _ => unreachable!("validated structured tuple"),
                    };
                    let q = qm[(i, j)];
                    let mut worst = 0.0f64;
                    for (slot_i, slot_j) in si.slots.iter().zip(&sj.slots) {
                        let r = match (slot_i, slot_j) {
                            (SlotOperator::Dense(a), SlotOperator::Dense(b)) => {
                                dense_pair_residual(a, b, &PairPhase::Scalar(q), mode)
                            }
                            (SlotOperator::Shift(a), SlotOperator::Shift(b)) => {
                                slot_pair_residual(a.kind, b.kind, q, mode)
                            }
                            _ => unreachable!("validated slot layout"),
                        };
                        worst = worst.max(r);
                    }
                    pairwise[(i, j)] = worst;
                }
            }
        }
        (Operator::Structured(_), CommutationData::UnitaryFamily(_)) => {
            return Err(Error::StructuredUnsupported(
                "unitary-family commutation data requires dense operators".into(),
            ));
        }
    }

    Ok(RelationResiduals {
        pairwise,
        q_commutation: q_comm,
    })
}

fn relation_threshold(tuple: &OperatorTuple, tol: Tolerance) -> f64 {
    tol.rel * (1.0 + tuple.max_norm())
}

/// True iff all plain residuals pass at tol.rel * (1 + max operator norm).
pub fn verify_q_commuting(tuple: &OperatorTuple, tol: Tolerance) -> Result<bool> {
    let residuals = relation_residual(tuple, RelationMode::Plain)?;
    check_q_hypothesis(tuple, &residuals, tol)?;
    Ok(residuals.max_pairwise() <= relation_threshold(tuple, tol))
}

/// True iff the tuple passes both the plain and the adjoint relation.
///
/// Scalar phases must be unimodular here; the gate is an error, not a
/// `false`, so callers can distinguish bad data from a failed relation.
pub fn verify_doubly(tuple: &OperatorTuple, tol: Tolerance) -> Result<bool> {
    tuple.validate()?;
    if let CommutationData::ScalarPhases(q) = &tuple.commutation {
        for i in 0..q.nrows() {
            for j in 0..q.ncols() {
                if i != j && (q[(i, j)].norm() - 1.0).abs() > UNIMODULAR_EPS {
                    return Err(Error::NonUnimodularQ {
                        i,
                        j,
                        modulus: q[(i, j)].norm(),
                    });
                }
            }
        }
    }
    let plain = relation_residual(tuple, RelationMode::Plain)?;
    check_q_hypothesis(tuple, &plain, tol)?;
    let doubly = relation_residual(tuple, RelationMode::Doubly)?;
    let thr = relation_threshold(tuple, tol);
    Ok(plain.max_pairwise() <= thr && doubly.max_pairwise() <= thr)
}

fn check_q_hypothesis(
    tuple: &OperatorTuple,
    residuals: &RelationResiduals,
    tol: Tolerance,
) -> Result<()> {
    if let Some(qc) = &residuals.q_commutation {
        let thr = relation_threshold(tuple, tol);
        for i in 0..qc.nrows() {
            for j in 0..qc.ncols() {
                if qc[(i, j)] > thr {
                    return Err(Error::QNotCommutingWithOperators {
                        i,
                        j,
                        residual: qc[(i, j)],
                    });
                }
            }
        }
    }
    Ok(())
}

/// Matrix power by repeated squaring.
pub fn matrix_power(m: &CMatrix, n: u64) -> CMatrix {
    let d = m.nrows();
    let mut result = numkit::identity(d);
    let mut base = m.clone();
    let mut e = n;
    while e > 0 {
        if e & 1 == 1 {
            result = &result * &base;
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    result
}

/// Defect operator: (I − T*ⁿTⁿ)^(1/2) for n ≥ 0, (I − T^|n| T*^|n|)^(1/2)
/// for n < 0. defect(T, 0) is the zero matrix.
pub fn defect(t: &CMatrix, n: i64, tol: Tolerance) -> Result<CMatrix> {
    numkit::ensure_finite(t)?;
    if t.nrows() != t.ncols() {
        return Err(Error::DimMismatch(format!(
            "defect needs a square matrix, got {}x{}",
            t.nrows(),
            t.ncols()
        )));
    }
    let d = t.nrows();
    if n == 0 {
        return Ok(CMatrix::zeros(d, d));
    }
    let p = matrix_power(t, n.unsigned_abs());
    let gram = if n > 0 {
        p.adjoint() * &p
    } else {
        &p * p.adjoint()
    };
    numkit::psd_sqrt(&(numkit::identity(d) - gram), tol)
}

/// Atom labels: A1/A2 for the unitary/c.n.u. split, B1/B2 for the
/// pure-isometry/c.n.i. split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtomType {
    A1,
    A2,
    B1,
    B2,
}

impl std::fmt::Display for AtomType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AtomType::A1 => write!(f, "A1"),
            AtomType::A2 => write!(f, "A2"),
            AtomType::B1 => write!(f, "B1"),
            AtomType::B2 => write!(f, "B2"),
        }
    }
}

/// Structural flags of a contraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Classification {
    pub unitary: bool,
    pub cnu: bool,
    pub isometry: bool,
    pub pure_isometry: bool,
    pub cni: bool,
    /// A1 when unitary, A2 when c.n.u., None for non-atoms.
    pub atom_a: Option<AtomType>,
    /// B1 when pure isometry, B2 when c.n.i., None otherwise.
    pub atom_b: Option<AtomType>,
}

impl Classification {
    fn from_flags(unitary: bool, cnu: bool, isometry: bool, pure_isometry: bool, cni: bool) -> Self {
        let atom_a = if unitary {
            Some(AtomType::A1)
        } else if cnu {
            Some(AtomType::A2)
        } else {
            None
        };
        let atom_b = if pure_isometry {
            Some(AtomType::B1)
        } else if cni {
            Some(AtomType::B2)
        } else {
            None
        };
        Classification {
            unitary,
            cnu,
            isometry,
            pure_isometry,
            cni,
            atom_a,
            atom_b,
        }
    }

    pub fn is_atom(&self) -> bool {
        self.atom_a.is_some()
    }
}

fn classify_shift_kind(kind: ShiftKind) -> Classification {
    match kind {
        ShiftKind::Shift(c) => {
            if (c.norm() - 1.0).abs() <= SLOT_EPS {
                // the unilateral shift: the model pure isometry
                Classification::from_flags(false, true, true, true, false)
            } else {
                Classification::from_flags(false, true, false, false, true)
            }
        }
        ShiftKind::PhaseDiag(_) => Classification::from_flags(true, false, true, false, false),
        ShiftKind::Scalar(c) => {
            if (c.norm() - 1.0).abs() <= SLOT_EPS {
                Classification::from_flags(true, false, true, false, false)
            } else {
                Classification::from_flags(false, true, false, false, true)
            }
        }
    }
}

fn classify_dense(m: &CMatrix, tol: Tolerance) -> Result<Classification> {
    let d = m.nrows();
    if d == 0 {
        return Err(Error::InvalidArg("cannot classify an operator on a 0-dimensional space".into()));
    }
    let norm = numkit::spectral_norm(m);
    if norm > 1.0 + 10.0 * tol.rel {
        return Err(Error::NotAContraction { norm });
    }
    let eye = numkit::identity(d);
    let thr = tol.threshold(1.0 + norm);
    let iso_dev = numkit::spectral_norm(&(m.adjoint() * m - &eye));
    let coiso_dev = numkit::spectral_norm(&(m * m.adjoint() - &eye));
    let isometry = iso_dev <= thr;
    let unitary = isometry && coiso_dev <= thr;
    let (cnu, cni) = if unitary {
        (false, false)
    } else if norm <= 1.0 - tol.rel {
        // strict contraction: no vector norm survives a single application
        (true, true)
    } else {
        let u_dim = crate::decomp::unitary_part(m, tol)?.dim();
        let i_dim = crate::decomp::isometric_part_dense(m, tol)?.dim();
        (u_dim == 0, i_dim == 0)
    };
    // finite-dimensional isometries are unitary; no dense pure isometries
    Ok(Classification::from_flags(unitary, cnu, isometry, false, cni))
}

/// Classifies an operator into the atom taxonomy.
pub fn classify(op: &Operator, tol: Tolerance) -> Result<Classification> {
    op.validate()?;
    match op {
        Operator::Dense(m) => classify_dense(m, tol),
        Operator::Structured(s) => {
            let mut parts = Vec::with_capacity(s.slots.len());
            for slot in &s.slots {
                parts.push(match slot {
                    SlotOperator::Dense(m) => classify_dense(m, tol)?,
                    SlotOperator::Shift(b) => classify_shift_kind(b.kind),
                });
            }
            let unitary = parts.iter().all(|c| c.unitary);
            let isometry = parts.iter().all(|c| c.isometry);
            let cnu = parts.iter().all(|c| c.cnu);
            let cni = parts.iter().all(|c| c.cni);
            let pure_isometry = isometry && cnu;
            Ok(Classification::from_flags(unitary, cnu, isometry, pure_isometry, cni))
        }
    }
}

/// Least-squares phase fit: the q minimizing ‖T1 T2 − q T2 T1‖_F, i.e.
/// q = ⟨T2 T1, T1 T2⟩_F / ‖T2 T1‖_F². None when T2 T1 vanishes. The caller
/// must re-verify with `relation_residual`; the fit alone does not certify
/// a q-commuting pair.
pub fn infer_phase(t1: &CMatrix, t2: &CMatrix, tol: Tolerance) -> Result<Option<Complex64>> {
    numkit::ensure_finite(t1)?;
    numkit::ensure_finite(t2)?;
    if t1.nrows() != t1.ncols() || t2.nrows() != t2.ncols() || t1.nrows() != t2.nrows() {
        return Err(Error::DimMismatch(format!(
            "infer_phase needs equal square operators, got {}x{} and {}x{}",
            t1.nrows(),
            t1.ncols(),
            t2.nrows(),
            t2.ncols()
        )));
    }
    let forward = t1 * t2;
    let reversed = t2 * t1;
    let mut inner = Complex64::new(0.0, 0.0);
    let mut denom = 0.0f64;
    for (a, b) in reversed.iter().zip(forward.iter()) {
        inner += a.conj() * b;
        denom += a.norm_sqr();
    }
    if denom.sqrt() <= tol.abs_floor {
        return Ok(None);
    }
    Ok(Some(inner / denom))
}
