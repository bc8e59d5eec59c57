//! Decomposition algorithms: canonical (unitary ⊕ c.n.u.), Levan
//! (pure isometry ⊕ c.n.i.), the 2^n tuple decomposition for doubly
//! q-commuting families, and the unitary/c.n.u. split of merely q-commuting
//! tuples through the maximal doubly-commuting subspace.
//!
//! Everything is built around one fixed-point kernel, `max_reducing_in`:
//! the largest joint reducing subspace contained in a given subspace. The
//! unitary part, the isometric part and the doubly-commuting part are all
//! instances with different seed subspaces.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::numkit::{self, CMatrix, Subspace, Tolerance};
use crate::opmodel::{
    self, classify, relation_residual, verify_doubly, verify_q_commuting, AtomType,
    CommutationData, Operator, OperatorTuple, RelationMode, ShiftBlock, SlotOperator,
};

/// Membership of one slot of a structured ambient space in a part.
#[derive(Debug, Clone)]
pub enum SlotExtent {
    /// Shift slot not contained in this part.
    Empty,
    /// Entire (infinite-dimensional) shift slot.
    Whole,
    /// Subframe of a dense slot; may have dimension zero.
    Sub(Subspace),
}

/// Where a part lives: a dense subspace, or per-slot extents of a
/// structured space.
#[derive(Debug, Clone)]
pub enum PartExtent {
    Dense(Subspace),
    Structured(Vec<SlotExtent>),
}

impl PartExtent {
    /// Finite dimension of the part (dense content only).
    pub fn finite_dim(&self) -> usize {
        match self {
            PartExtent::Dense(s) => s.dim(),
            PartExtent::Structured(slots) => slots
                .iter()
                .map(|e| match e {
                    SlotExtent::Sub(s) => s.dim(),
                    _ => 0,
                })
                .sum(),
        }
    }

    /// True when the part contains a whole shift slot.
    pub fn has_infinite(&self) -> bool {
        match self {
            PartExtent::Dense(_) => false,
            PartExtent::Structured(slots) => slots.iter().any(|e| matches!(e, SlotExtent::Whole)),
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.finite_dim() == 0 && !self.has_infinite()
    }

    pub fn as_dense(&self) -> Option<&Subspace> {
        match self {
            PartExtent::Dense(s) => Some(s),
            PartExtent::Structured(_) => None,
        }
    }
}

/// Restriction of one operator to one part.
#[derive(Debug, Clone)]
pub enum RestrictionBlock {
    /// Matrix of the restriction in the part frame's basis.
    Dense(CMatrix),
    /// Slot-wise restrictions on a structured space.
    Slots(Vec<SlotRestriction>),
}

/// Restriction of one operator to one slot of a structured part.
#[derive(Debug, Clone)]
pub enum SlotRestriction {
    Empty,
    /// Symbolic block tag: the whole shift-slot block passes through.
    Shift(ShiftBlock),
    Dense(CMatrix),
}

/// One subspace of a decomposition together with the restricted operators.
#[derive(Debug, Clone)]
pub struct DecompositionPart {
    pub extent: PartExtent,
    /// One restriction per tuple operator.
    pub restrictions: Vec<RestrictionBlock>,
    /// One atom label per tuple operator; empty for parts that are not
    /// atom-wise (the complement of a unitary/c.n.u. split).
    pub labels: Vec<AtomType>,
    /// Restrictions Q(i,j)|part in row-major (i,j) order, unitary-family
    /// tuples only.
    pub q_blocks: Vec<CMatrix>,
    /// Worst reduction residual of this part against the tuple operators
    /// (and Q(i,j) where applicable); shift slots contribute exactly 0.
    pub reduction_residual: f64,
}

/// Residual bookkeeping for a whole decomposition.
#[derive(Debug, Clone, Copy, Default)]
pub struct Diagnostics {
    /// Worst reduction residual of any emitted part against any operator
    /// (and any Q(i,j) in unitary-family mode).
    pub max_reduction_residual: f64,
    /// ‖Σ_g P_g − I‖ over the dense content.
    pub completeness_residual: f64,
    /// Total fixed-point iterations spent.
    pub iterations: usize,
}

/// Map from signature strings to parts, plus diagnostics.
#[derive(Debug, Clone)]
pub struct DecompositionResult {
    pub parts: BTreeMap<String, DecompositionPart>,
    pub diagnostics: Diagnostics,
}

impl DecompositionResult {
    pub fn part(&self, signature: &str) -> Option<&DecompositionPart> {
        self.parts.get(signature)
    }

    /// Finite dimension of the part with the given signature (0 if absent).
    pub fn dim(&self, signature: &str) -> usize {
        self.part(signature).map(|p| p.extent.finite_dim()).unwrap_or(0)
    }
}

fn ensure_contraction(m: &CMatrix, tol: Tolerance) -> Result<f64> {
    let norm = numkit::spectral_norm(m);
    if norm > 1.0 + 10.0 * tol.rel {
        return Err(Error::NotAContraction { norm });
    }
    Ok(norm)
}

/// Largest subspace K ⊆ W with T K ⊆ K and T* K ⊆ K for every listed
/// operator, computed as a greatest fixed point: starting from W, vectors
/// whose image escapes the current candidate are cut until the dimension
/// stabilizes. The dimension chain is strictly decreasing, so at most
/// ambient_dim + 1 rounds are possible.
pub fn max_reducing_in(ops: &[&CMatrix], w: &Subspace, tol: Tolerance) -> Result<Subspace> {
    max_reducing_in_counted(ops, w, tol).map(|(s, _)| s)
}

fn max_reducing_in_counted(
    ops: &[&CMatrix],
    w: &Subspace,
    tol: Tolerance,
) -> Result<(Subspace, usize)> {
    let d = w.ambient_dim();
    for t in ops {
        if t.nrows() != t.ncols() || t.nrows() != d {
            return Err(Error::DimMismatch(format!(
                "max_reducing_in: operator {}x{} on ambient {}",
                t.nrows(),
                t.ncols(),
                d
            )));
        }
    }
    let mut current = w.clone();
    let mut iterations = 0usize;
    for _ in 0..=d {
        iterations += 1;
        let k = current.dim();
        if k == 0 {
            break;
        }
        let b = current.frame();
        // Escape map: coordinates x survive iff (I-P) T_i B x = 0 and
        // (I-P) T_i* B x = 0 for every operator.
        let mut escape = CMatrix::zeros(2 * ops.len() * d, k);
        for (idx, t) in ops.iter().enumerate() {
            let tb = *t * b;
            let tb = &tb - b * (b.adjoint() * &tb);
            let sb = t.adjoint() * b;
            let sb = &sb - b * (b.adjoint() * &sb);
            escape.view_mut((2 * idx * d, 0), (d, k)).copy_from(&tb);
            escape.view_mut(((2 * idx + 1) * d, 0), (d, k)).copy_from(&sb);
        }
        let kernel = numkit::null_space(&escape, tol)?;
        if kernel.dim() == k {
            break;
        }
        let next_frame = b * kernel.frame();
        current = Subspace::from_frame_canonical(next_frame)?;
    }

    // Tripwires: these hold at any fixed point; a violation means the rank
    // decisions disagreed with themselves across iterations.
    let max_norm = ops.iter().map(|t| numkit::spectral_norm(t)).fold(0.0, f64::max);
    let check = 10.0 * tol.threshold(1.0 + max_norm);
    let containment = numkit::containment_residual(&current, w)?;
    if containment > check {
        return Err(Error::Internal(format!(
            "fixed point escaped its seed subspace: containment residual {containment:.3e}"
        )));
    }
    for t in ops {
        let r = numkit::reduction_residual(t, &current)?;
        if r > check {
            return Err(Error::Internal(format!(
                "fixed point is not reducing: residual {r:.3e}"
            )));
        }
    }
    Ok((current, iterations))
}

/// Maximal subspace reducing T on which T is unitary.
pub fn unitary_part(t: &CMatrix, tol: Tolerance) -> Result<Subspace> {
    unitary_part_counted(t, tol).map(|(s, _)| s)
}

fn unitary_part_counted(t: &CMatrix, tol: Tolerance) -> Result<(Subspace, usize)> {
    numkit::ensure_finite(t)?;
    ensure_contraction(t, tol)?;
    let d = t.nrows();
    let eye = numkit::identity(d);
    let iso = numkit::null_space(&(&eye - t.adjoint() * t), tol)?;
    let coiso = numkit::null_space(&(&eye - t * t.adjoint()), tol)?;
    let seed = numkit::intersect(&iso, &coiso, tol)?;
    max_reducing_in_counted(&[t], &seed, tol)
}

/// Maximal subspace reducing T on which T acts isometrically. On a
/// finite-dimensional space this coincides with the unitary part; the
/// distinction only matters for structured operators.
pub fn isometric_part_dense(t: &CMatrix, tol: Tolerance) -> Result<Subspace> {
    isometric_part_dense_counted(t, tol).map(|(s, _)| s)
}

fn isometric_part_dense_counted(t: &CMatrix, tol: Tolerance) -> Result<(Subspace, usize)> {
    numkit::ensure_finite(t)?;
    ensure_contraction(t, tol)?;
    let d = t.nrows();
    let seed = numkit::null_space(&(numkit::identity(d) - t.adjoint() * t), tol)?;
    max_reducing_in_counted(&[t], &seed, tol)
}

/// Isometric part of a dense or structured operator.
pub fn isometric_part(op: &Operator, tol: Tolerance) -> Result<PartExtent> {
    op.validate()?;
    match op {
        Operator::Dense(m) => Ok(PartExtent::Dense(isometric_part_dense(m, tol)?)),
        Operator::Structured(s) => {
            let mut extents = Vec::with_capacity(s.slots.len());
            for slot in &s.slots {
                extents.push(match slot {
                    SlotOperator::Dense(m) => SlotExtent::Sub(isometric_part_dense(m, tol)?),
                    SlotOperator::Shift(b) => {
                        if b.kind.is_isometry() {
                            SlotExtent::Whole
                        } else {
                            SlotExtent::Empty
                        }
                    }
                });
            }
            Ok(PartExtent::Structured(extents))
        }
    }
}

/// Unitary part computed from the defect-operator kernels
/// ⋂_n Ker(I − T*ⁿTⁿ)^(1/2) ∩ Ker(I − TⁿT*ⁿ)^(1/2), stopping as soon as two
/// consecutive intersections agree. Kernel decisions on the square roots use
/// square-root-scaled tolerances: noise eps under the root becomes √eps.
///
/// Kept deliberately distinct from `unitary_part` (power kernels here,
/// a reducing-subspace fixed point there) so the two can cross-check.
pub fn defect_kernel_unitary_part(
    t: &CMatrix,
    max_n: Option<usize>,
    tol: Tolerance,
) -> Result<Subspace> {
    numkit::ensure_finite(t)?;
    ensure_contraction(t, tol)?;
    let d = t.nrows();
    if max_n == Some(0) {
        return Err(Error::InvalidArg("max_n must be at least 1".into()));
    }
    let max_n = max_n.unwrap_or(d.max(1));
    let kernel_tol = tol.sqrt_scale();
    let mut current = Subspace::full(d);
    for n in 1..=max_n as i64 {
        let fwd = opmodel::defect(t, n, tol)?;
        let bwd = opmodel::defect(t, -n, tol)?;
        let mut next = numkit::intersect(&current, &numkit::null_space(&fwd, kernel_tol)?, tol)?;
        next = numkit::intersect(&next, &numkit::null_space(&bwd, kernel_tol)?, tol)?;
        let stable = next.dim() == current.dim();
        current = next;
        if stable || current.dim() == 0 {
            break;
        }
    }
    Ok(current)
}

fn dense_part(
    ops: &[&CMatrix],
    q_family: Option<&Vec<Vec<CMatrix>>>,
    subspace: Subspace,
    labels: Vec<AtomType>,
) -> Result<(DecompositionPart, f64)> {
    let mut restrictions = Vec::with_capacity(ops.len());
    let mut worst = 0.0f64;
    for t in ops {
        worst = worst.max(numkit::reduction_residual(t, &subspace)?);
        restrictions.push(RestrictionBlock::Dense(numkit::compress(t, &subspace)?));
    }
    let mut q_blocks = Vec::new();
    if let Some(family) = q_family {
        for row in family {
            for q in row {
                worst = worst.max(numkit::reduction_residual(q, &subspace)?);
                q_blocks.push(numkit::compress(q, &subspace)?);
            }
        }
    }
    Ok((
        DecompositionPart {
            extent: PartExtent::Dense(subspace),
            restrictions,
            labels,
            q_blocks,
            reduction_residual: worst,
        },
        worst,
    ))
}

fn dense_completeness(parts: &BTreeMap<String, DecompositionPart>, d: usize) -> f64 {
    let mut sum = CMatrix::zeros(d, d);
    for p in parts.values() {
        if let PartExtent::Dense(s) = &p.extent {
            sum += s.projector();
        }
    }
    numkit::spectral_norm(&(sum - numkit::identity(d)))
}

/// Canonical decomposition of a single contraction: signature "u" carries
/// the maximal unitary part, "c" its complement, on which the restriction is
/// completely non-unitary. Either part may be 0-dimensional.
pub fn canonical_decomposition(t: &CMatrix, tol: Tolerance) -> Result<DecompositionResult> {
    let (u, iterations) = unitary_part_counted(t, tol)?;
    let c = numkit::complement(&u);
    let mut parts = BTreeMap::new();
    let mut worst = 0.0f64;
    let (pu, ru) = dense_part(&[t], None, u, vec![AtomType::A1])?;
    let (pc, rc) = dense_part(&[t], None, c, vec![AtomType::A2])?;
    worst = worst.max(ru).max(rc);
    parts.insert("u".to_string(), pu);
    parts.insert("c".to_string(), pc);
    let completeness = dense_completeness(&parts, t.nrows());
    Ok(DecompositionResult {
        parts,
        diagnostics: Diagnostics {
            max_reduction_residual: worst,
            completeness_residual: completeness,
            iterations,
        },
    })
}

/// Levan decomposition of a c.n.u. contraction: "p" is the maximal reducing
/// subspace on which the operator is a pure isometry, "n" the complement on
/// which it is completely non-isometric. For dense inputs "p" is always
/// trivial: a finite-dimensional isometric part would be unitary, which the
/// c.n.u. precondition rules out.
pub fn levan_decomposition(op: &Operator, tol: Tolerance) -> Result<DecompositionResult> {
    let class = classify(op, tol)?;
    if !class.cnu {
        return Err(Error::NotCNU(match op {
            Operator::Dense(m) => format!(
                "unitary part has dimension {}",
                unitary_part(m, tol)?.dim()
            ),
            Operator::Structured(_) => "a slot carries unitary content".into(),
        }));
    }
    match op {
        Operator::Dense(m) => {
            let (p, iterations) = isometric_part_dense_counted(m, tol)?;
            let n = numkit::complement(&p);
            let mut parts = BTreeMap::new();
            let (pp, rp) = dense_part(&[m], None, p, vec![AtomType::B1])?;
            let (pn, rn) = dense_part(&[m], None, n, vec![AtomType::B2])?;
            parts.insert("p".to_string(), pp);
            parts.insert("n".to_string(), pn);
            let completeness = dense_completeness(&parts, m.nrows());
            Ok(DecompositionResult {
                parts,
                diagnostics: Diagnostics {
                    max_reduction_residual: rp.max(rn),
                    completeness_residual: completeness,
                    iterations,
                },
            })
        }
        Operator::Structured(s) => {
            let mut p_slots = Vec::new();
            let mut n_slots = Vec::new();
            let mut p_restr = Vec::new();
            let mut n_restr = Vec::new();
            let mut worst_p = 0.0f64;
            let mut worst_n = 0.0f64;
            let mut completeness = 0.0f64;
            let mut iterations = 0usize;
            for slot in &s.slots {
                match slot {
                    SlotOperator::Shift(b) => {
                        if b.kind.is_isometry() {
                            p_slots.push(SlotExtent::Whole);
                            n_slots.push(SlotExtent::Empty);
                            p_restr.push(SlotRestriction::Shift(*b));
                            n_restr.push(SlotRestriction::Empty);
                        } else {
                            p_slots.push(SlotExtent::Empty);
                            n_slots.push(SlotExtent::Whole);
                            p_restr.push(SlotRestriction::Empty);
                            n_restr.push(SlotRestriction::Shift(*b));
                        }
                    }
                    SlotOperator::Dense(m) => {
                        let (iso, iters) = isometric_part_dense_counted(m, tol)?;
                        iterations += iters;
                        let comp = numkit::complement(&iso);
                        worst_p = worst_p.max(numkit::reduction_residual(m, &iso)?);
                        worst_n = worst_n.max(numkit::reduction_residual(m, &comp)?);
                        let both = iso.projector() + comp.projector();
                        completeness = completeness.max(numkit::spectral_norm(
                            &(both - numkit::identity(m.nrows())),
                        ));
                        p_restr.push(SlotRestriction::Dense(numkit::compress(m, &iso)?));
                        n_restr.push(SlotRestriction::Dense(numkit::compress(m, &comp)?));
                        p_slots.push(SlotExtent::Sub(iso));
                        n_slots.push(SlotExtent::Sub(comp));
                    }
                }
            }
            let mut parts = BTreeMap::new();
            parts.insert(
                "p".to_string(),
                DecompositionPart {
                    extent: PartExtent::Structured(p_slots),
                    restrictions: vec![RestrictionBlock::Slots(p_restr)],
                    labels: vec![AtomType::B1],
                    q_blocks: Vec::new(),
                    reduction_residual: worst_p,
                },
            );
            parts.insert(
                "n".to_string(),
                DecompositionPart {
                    extent: PartExtent::Structured(n_slots),
                    restrictions: vec![RestrictionBlock::Slots(n_restr)],
                    labels: vec![AtomType::B2],
                    q_blocks: Vec::new(),
                    reduction_residual: worst_n,
                },
            );
            Ok(DecompositionResult {
                parts,
                diagnostics: Diagnostics {
                    max_reduction_residual: worst_p.max(worst_n),
                    completeness_residual: completeness,
                    iterations,
                },
            })
        }
    }
}

/// Which splitter drives the 2^n recursion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Splitter {
    /// unitary / c.n.u. letters (u, c) with labels A1/A2
    Canonical,
    /// pure-isometry / c.n.i. letters (p, n) with labels B1/B2
    Isometric,
}

impl Splitter {
    fn letters(self) -> (char, char) {
        match self {
            Splitter::Canonical => ('u', 'c'),
            Splitter::Isometric => ('p', 'n'),
        }
    }

    fn labels(self) -> (AtomType, AtomType) {
        match self {
            Splitter::Canonical => (AtomType::A1, AtomType::A2),
            Splitter::Isometric => (AtomType::B1, AtomType::B2),
        }
    }

    fn split(self, t: &CMatrix, tol: Tolerance) -> Result<(Subspace, usize)> {
        match self {
            Splitter::Canonical => unitary_part_counted(t, tol),
            Splitter::Isometric => isometric_part_dense_counted(t, tol),
        }
    }
}

/// Dense inputs beyond this tuple length accumulate more than 10^8 x tol of
/// splitting slack, so they are rejected up front.
const MAX_DENSE_TUPLE: usize = 8;

struct DenseRecursion {
    leaves: Vec<(String, Subspace)>,
    iterations: usize,
}

/// Recursive leaf splitting: for each operator in index order, every current
/// leaf is split by the canonical (or Levan) decomposition of the compressed
/// operator, and both halves are checked to reduce every tuple operator and
/// every Q(i,j). The acceptance threshold grows by a factor of 10 per level
/// to absorb compounded error.
fn dense_tuple_recursion(
    ops: &[&CMatrix],
    q_family: Option<&Vec<Vec<CMatrix>>>,
    splitter: Splitter,
    tol: Tolerance,
) -> Result<DenseRecursion> {
    let n = ops.len();
    if n > MAX_DENSE_TUPLE {
        return Err(Error::InvalidArg(format!(
            "dense tuples are limited to {MAX_DENSE_TUPLE} operators, got {n}"
        )));
    }
    let d = ops[0].nrows();
    let max_norm = ops.iter().map(|t| numkit::spectral_norm(t)).fold(0.0, f64::max);
    let (hi, lo) = splitter.letters();
    let mut leaves: Vec<(String, Subspace)> = vec![(String::new(), Subspace::full(d))];
    let mut iterations = 0usize;
    for (level, t) in ops.iter().enumerate() {
        let threshold = tol.rel * (1.0 + max_norm) * 10f64.powi(level as i32 + 1);
        let mut next = Vec::with_capacity(leaves.len() * 2);
        for (sig, leaf) in &leaves {
            if leaf.dim() == 0 {
                next.push((format!("{sig}{hi}"), Subspace::zero(d)));
                next.push((format!("{sig}{lo}"), Subspace::zero(d)));
                continue;
            }
            let compressed = numkit::compress(t, leaf)?;
            let (local_hi, iters) = splitter.split(&compressed, tol)?;
            iterations += iters;
            let local_lo = numkit::complement(&local_hi);
            let embed = |local: &Subspace| -> Result<Subspace> {
                Subspace::from_frame_canonical(leaf.frame() * local.frame())
            };
            let half_hi = embed(&local_hi)?;
            let half_lo = embed(&local_lo)?;
            for half in [&half_hi, &half_lo] {
                if half.dim() == 0 {
                    continue;
                }
                for (j, other) in ops.iter().enumerate() {
                    let r = numkit::reduction_residual(other, half)?;
                    if r > threshold {
                        return Err(Error::NotDoublyCommuting(format!(
                            "splitting by operator {} produced a subspace that operator {j} \
                             does not reduce (residual {r:.3e} > {threshold:.3e})",
                            level
                        )));
                    }
                }
                if let Some(family) = q_family {
                    for (i, row) in family.iter().enumerate() {
                        for (j, q) in row.iter().enumerate() {
                            let r = numkit::reduction_residual(q, half)?;
                            if r > threshold {
                                return Err(Error::NotDoublyCommuting(format!(
                                    "Q({i},{j}) does not reduce a split subspace \
                                     (residual {r:.3e} > {threshold:.3e})"
                                )));
                            }
                        }
                    }
                }
            }
            next.push((format!("{sig}{hi}"), half_hi));
            next.push((format!("{sig}{lo}"), half_lo));
        }
        leaves = next;
    }
    Ok(DenseRecursion { leaves, iterations })
}

fn assemble_dense_result(
    ops: &[&CMatrix],
    q_family: Option<&Vec<Vec<CMatrix>>>,
    splitter: Splitter,
    recursion: DenseRecursion,
) -> Result<DecompositionResult> {
    let (hi, _) = splitter.letters();
    let (label_hi, label_lo) = splitter.labels();
    let mut parts = BTreeMap::new();
    let mut worst = 0.0f64;
    for (sig, subspace) in recursion.leaves {
        let labels = sig
            .chars()
            .map(|ch| if ch == hi { label_hi } else { label_lo })
            .collect();
        let (part, residual) = dense_part(ops, q_family, subspace, labels)?;
        worst = worst.max(residual);
        parts.insert(sig, part);
    }
    let completeness = dense_completeness(&parts, ops[0].nrows());
    Ok(DecompositionResult {
        parts,
        diagnostics: Diagnostics {
            max_reduction_residual: worst,
            completeness_residual: completeness,
            iterations: recursion.iterations,
        },
    })
}

fn q_family_of(tuple: &OperatorTuple) -> Option<&Vec<Vec<CMatrix>>> {
    match &tuple.commutation {
        CommutationData::UnitaryFamily(q) => Some(q),
        CommutationData::ScalarPhases(_) => None,
    }
}

fn ensure_tuple_contractions(tuple: &OperatorTuple, tol: Tolerance) -> Result<()> {
    for op in &tuple.operators {
        let report = opmodel::verify_contraction(op, tol)?;
        if !report.ok {
            return Err(Error::NotAContraction { norm: report.norm });
        }
    }
    Ok(())
}

/// The 2^n decomposition of a doubly q-commuting tuple: every signature over
/// {u, c} names the part on which the i-th operator restricts to a unitary
/// (u) or a c.n.u. contraction (c). The all-u part is the maximal joint
/// unitary subspace, the all-c part the maximal joint c.n.u. subspace.
/// Signatures with dimension zero are kept in the result.
pub fn tuple_decomposition(tuple: &OperatorTuple, tol: Tolerance) -> Result<DecompositionResult> {
    decompose_tuple(tuple, Splitter::Canonical, tol)
}

/// The Levan analogue for tuples of c.n.u. contractions: signatures over
/// {p, n} with the isometric part as the splitter; the all-p part is the
/// maximal joint pure-isometry subspace, the all-n part the maximal joint
/// c.n.i. subspace.
pub fn cnu_tuple_decomposition(
    tuple: &OperatorTuple,
    tol: Tolerance,
) -> Result<DecompositionResult> {
    for (i, op) in tuple.operators.iter().enumerate() {
        let class = classify(op, tol)?;
        if !class.cnu {
            return Err(Error::NotCNU(format!("operator {i} is not c.n.u.")));
        }
    }
    decompose_tuple(tuple, Splitter::Isometric, tol)
}

fn decompose_tuple(
    tuple: &OperatorTuple,
    splitter: Splitter,
    tol: Tolerance,
) -> Result<DecompositionResult> {
    tuple.validate()?;
    ensure_tuple_contractions(tuple, tol)?;
    if !verify_doubly(tuple, tol)? {
        let res = relation_residual(tuple, RelationMode::Doubly)?;
        return Err(Error::NotDoublyCommuting(format!(
            "doubly relation residual {:.3e} exceeds tolerance",
            res.max_pairwise()
        )));
    }
    match &tuple.operators[0] {
        Operator::Dense(_) => {
            let ops: Vec<&CMatrix> = tuple
                .operators
                .iter()
                .map(|o| o.as_dense().expect("validated dense tuple"))
                .collect();
            let q_family = q_family_of(tuple);
            let recursion = dense_tuple_recursion(&ops, q_family, splitter, tol)?;
            assemble_dense_result(&ops, q_family, splitter, recursion)
        }
        Operator::Structured(_) => structured_tuple_decomposition(tuple, splitter, tol),
    }
}

fn structured_tuple_decomposition(
    tuple: &OperatorTuple,
    splitter: Splitter,
    tol: Tolerance,
) -> Result<DecompositionResult> {
    let n = tuple.len();
    let ops: Vec<&crate::opmodel::StructuredOperator> = tuple
        .operators
        .iter()
        .map(|o| match o {
            Operator::Structured(s) => s,
            Operator::Dense(_) => unreachable!("validated structured tuple"),
        })
        .collect();
    let slot_count = ops[0].slots.len();
    let (hi, lo) = splitter.letters();
    let (label_hi, label_lo) = splitter.labels();

    // Per slot: either a fixed signature (shift slot made of atoms) or the
    // dense recursion's leaves within that slot.
    enum SlotSplit {
        Atoms(String, Vec<ShiftBlock>),
        Dense(Vec<(String, Subspace)>, Vec<CMatrix>),
    }

    let mut splits = Vec::with_capacity(slot_count);
    let mut iterations = 0usize;
    for slot_idx in 0..slot_count {
        let first = &ops[0].slots[slot_idx];
        match first {
            SlotOperator::Shift(_) => {
                let mut sig = String::with_capacity(n);
                let mut blocks = Vec::with_capacity(n);
                for op in &ops {
                    let block = match &op.slots[slot_idx] {
                        SlotOperator::Shift(b) => *b,
                        SlotOperator::Dense(_) => unreachable!("validated slot layout"),
                    };
                    let letter = match splitter {
                        Splitter::Canonical => {
                            if block.kind.is_unitary() {
                                hi
                            } else {
                                lo
                            }
                        }
                        Splitter::Isometric => {
                            if block.kind.is_isometry() {
                                hi
                            } else {
                                lo
                            }
                        }
                    };
                    sig.push(letter);
                    blocks.push(block);
                }
                splits.push(SlotSplit::Atoms(sig, blocks));
            }
            SlotOperator::Dense(_) => {
                let slot_ops: Vec<CMatrix> = ops
                    .iter()
                    .map(|op| match &op.slots[slot_idx] {
                        SlotOperator::Dense(m) => m.clone(),
                        SlotOperator::Shift(_) => unreachable!("validated slot layout"),
                    })
                    .collect();
                let refs: Vec<&CMatrix> = slot_ops.iter().collect();
                let recursion = dense_tuple_recursion(&refs, None, splitter, tol)?;
                iterations += recursion.iterations;
                splits.push(SlotSplit::Dense(recursion.leaves, slot_ops));
            }
        }
    }

    // Assemble every signature in {hi, lo}^n.
    let mut parts = BTreeMap::new();
    let mut worst = 0.0f64;
    let mut completeness = 0.0f64;
    if let Some(SlotSplit::Dense(leaves, slot_ops)) = splits
        .iter()
        .find(|s| matches!(s, SlotSplit::Dense(_, _)))
    {
        let d = slot_ops[0].nrows();
        let mut sum = CMatrix::zeros(d, d);
        for (_, s) in leaves {
            sum += s.projector();
        }
        completeness = completeness.max(numkit::spectral_norm(&(sum - numkit::identity(d))));
    }
    for mask in 0..(1usize << n) {
        let sig: String = (0..n)
            .map(|i| if mask & (1 << i) == 0 { hi } else { lo })
            .collect();
        let mut extents = Vec::with_capacity(slot_count);
        let mut restrictions: Vec<Vec<SlotRestriction>> = vec![Vec::new(); n];
        let mut part_worst = 0.0f64;
        for split in &splits {
            match split {
                SlotSplit::Atoms(slot_sig, blocks) => {
                    if *slot_sig == sig {
                        extents.push(SlotExtent::Whole);
                        for (op_idx, block) in blocks.iter().enumerate() {
                            restrictions[op_idx].push(SlotRestriction::Shift(*block));
                        }
                    } else {
                        extents.push(SlotExtent::Empty);
                        for restr in restrictions.iter_mut() {
                            restr.push(SlotRestriction::Empty);
                        }
                    }
                }
                SlotSplit::Dense(leaves, slot_ops) => {
                    let sub = leaves
                        .iter()
                        .find(|(s, _)| *s == sig)
                        .map(|(_, s)| s.clone())
                        .unwrap_or_else(|| Subspace::zero(slot_ops[0].nrows()));
                    for (op_idx, m) in slot_ops.iter().enumerate() {
                        part_worst = part_worst.max(numkit::reduction_residual(m, &sub)?);
                        restrictions[op_idx].push(SlotRestriction::Dense(numkit::compress(m, &sub)?));
                    }
                    extents.push(SlotExtent::Sub(sub));
                }
            }
        }
        worst = worst.max(part_worst);
        let labels = sig
            .chars()
            .map(|ch| if ch == hi { label_hi } else { label_lo })
            .collect();
        parts.insert(
            sig,
            DecompositionPart {
                extent: PartExtent::Structured(extents),
                restrictions: restrictions.into_iter().map(RestrictionBlock::Slots).collect(),
                labels,
                q_blocks: Vec::new(),
                reduction_residual: part_worst,
            },
        );
    }
    Ok(DecompositionResult {
        parts,
        diagnostics: Diagnostics {
            max_reduction_residual: worst,
            completeness_residual: completeness,
            iterations,
        },
    })
}

/// Wold decomposition: the 2^n tuple decomposition restricted to isometry
/// tuples. Dense isometries are unitary, so dense inputs land entirely in
/// the all-u part; genuine shift content enters through structured inputs.
pub fn wold_decomposition(tuple: &OperatorTuple, tol: Tolerance) -> Result<DecompositionResult> {
    for (i, op) in tuple.operators.iter().enumerate() {
        let class = classify(op, tol)?;
        if !class.isometry {
            return Err(Error::NotIsometric(format!("operator {i} is not an isometry")));
        }
    }
    tuple_decomposition(tuple, tol)
}

/// Maximal joint reducing subspace on which the tuple becomes doubly
/// q-commuting: the fixed point seeded with ⋂_{i<j} Ker(T_i T_j* − q̄_ij T_j* T_i).
pub fn dc_part(tuple: &OperatorTuple, tol: Tolerance) -> Result<Subspace> {
    dc_part_counted(tuple, tol).map(|(s, _)| s)
}

fn dc_part_counted(tuple: &OperatorTuple, tol: Tolerance) -> Result<(Subspace, usize)> {
    tuple.validate()?;
    ensure_tuple_contractions(tuple, tol)?;
    let ops = tuple.dense_operators().ok_or_else(|| {
        Error::StructuredUnsupported("dc_part expects a dense tuple".into())
    })?;
    if let CommutationData::ScalarPhases(q) = &tuple.commutation {
        for i in 0..q.nrows() {
            for j in 0..q.ncols() {
                if i != j && (q[(i, j)].norm() - 1.0).abs() > 1e-8 {
                    return Err(Error::NonUnimodularQ {
                        i,
                        j,
                        modulus: q[(i, j)].norm(),
                    });
                }
            }
        }
    }
    if !verify_q_commuting(tuple, tol)? {
        let res = relation_residual(tuple, RelationMode::Plain)?;
        return Err(Error::NotQCommuting(format!(
            "plain relation residual {:.3e} exceeds tolerance",
            res.max_pairwise()
        )));
    }
    let n = ops.len();
    let d = ops[0].nrows();
    let mut seed = Subspace::full(d);
    for i in 0..n {
        for j in (i + 1)..n {
            let doubly_defect = match &tuple.commutation {
                CommutationData::ScalarPhases(q) => {
                    let qc = q[(i, j)].conj();
                    ops[i] * ops[j].adjoint() - (ops[j].adjoint() * ops[i]).map(|v| v * qc)
                }
                CommutationData::UnitaryFamily(q) => {
                    ops[i] * ops[j].adjoint() - q[j][i].adjoint() * (ops[j].adjoint() * ops[i])
                }
            };
            seed = numkit::intersect(&seed, &numkit::null_space(&doubly_defect, tol)?, tol)?;
        }
    }
    max_reducing_in_counted(&ops, &seed, tol)
}

/// Canonical split of a merely q-commuting tuple: "u^n" is the maximal joint
/// reducing subspace on which every operator is unitary (located inside the
/// doubly-commuting part), "cnu-tuple" its complement, carrying a c.n.u.
/// q-commuting tuple. In unitary-family mode the Q(i,j) restrictions to both
/// halves are reported and checked to be unitary.
pub fn unitary_cnu_split(tuple: &OperatorTuple, tol: Tolerance) -> Result<DecompositionResult> {
    let (dc, mut iterations) = dc_part_counted(tuple, tol)?;
    let ops = tuple.dense_operators().expect("dc_part enforces dense");
    let d = ops[0].nrows();
    let eye = numkit::identity(d);
    let mut seed = dc;
    for t in &ops {
        let iso = numkit::null_space(&(&eye - t.adjoint() * *t), tol)?;
        let coiso = numkit::null_space(&(&eye - *t * t.adjoint()), tol)?;
        seed = numkit::intersect(&seed, &iso, tol)?;
        seed = numkit::intersect(&seed, &coiso, tol)?;
    }
    let (h1, iters) = max_reducing_in_counted(&ops, &seed, tol)?;
    iterations += iters;
    let h2 = numkit::complement(&h1);

    let q_family = q_family_of(tuple);
    let check = 10.0 * tol.threshold(1.0 + tuple.max_norm());
    if let Some(family) = q_family {
        for (i, row) in family.iter().enumerate() {
            for (j, q) in row.iter().enumerate() {
                let r = numkit::reduction_residual(q, &h1)?;
                if r > check {
                    return Err(Error::QNotCommutingWithOperators { i, j, residual: r });
                }
            }
        }
    }

    let n = ops.len();
    let mut parts = BTreeMap::new();
    let (unitary_half, ru) =
        dense_part(&ops, q_family, h1, vec![AtomType::A1; n])?;
    // The restrictions to the unitary half must come out unitary; anything
    // else means the fixed point and the kernels disagreed.
    for restriction in &unitary_half.restrictions {
        if let RestrictionBlock::Dense(r) = restriction {
            let k = r.nrows();
            let dev = numkit::spectral_norm(&(r.adjoint() * r - numkit::identity(k)));
            if dev > check {
                return Err(Error::Internal(format!(
                    "restriction to the unitary half deviates from unitarity by {dev:.3e}"
                )));
            }
        }
    }
    for q in &unitary_half.q_blocks {
        let k = q.nrows();
        let dev = numkit::spectral_norm(&(q.adjoint() * q - numkit::identity(k)));
        if dev > check {
            return Err(Error::Internal(format!(
                "Q restriction to the unitary half deviates from unitarity by {dev:.3e}"
            )));
        }
    }
    let (cnu_half, rc) = dense_part(&ops, q_family, h2, Vec::new())?;
    parts.insert("u^n".to_string(), unitary_half);
    parts.insert("cnu-tuple".to_string(), cnu_half);
    let completeness = dense_completeness(&parts, d);
    Ok(DecompositionResult {
        parts,
        diagnostics: Diagnostics {
            max_reduction_residual: ru.max(rc),
            completeness_residual: completeness,
            iterations,
        },
    })
}
