//! Deterministic generators for test families with known ground truth:
//! clock/shift unitary pairs, truncated-shift/phase-diagonal pairs, planted
//! block direct sums under a random unitary conjugation, and seeded random
//! contractions and unitaries.
//!
//! Randomness is pinned to ChaCha8 with Gaussian variates from the ziggurat
//! sampler, so a given seed reproduces the same operators bit-for-bit on any
//! platform within one build. Every generator re-verifies its own relation
//! residuals (≤ 1e-12) before returning; a failure there is a bug, not an
//! input problem.

use std::collections::BTreeMap;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::numkit::{self, CMatrix, Subspace};
use crate::opmodel::{
    relation_residual, CommutationData, Operator, OperatorTuple, RelationMode,
};

const BUILD_CHECK: f64 = 1e-12;

/// Tuple with planted block structure: the operators equal
/// W (⊕ blocks) W* for the recorded unitary conjugator W, and the ground
/// truth maps signatures to the W-images of the coordinate blocks.
#[derive(Debug, Clone)]
pub struct PlantedTuple {
    pub tuple: OperatorTuple,
    pub ground_truth: BTreeMap<String, Subspace>,
    pub conjugator: CMatrix,
    pub seed: u64,
}

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

fn root_of_unity(d: usize) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / d as f64)
}

/// Clock matrix diag(ω^0, ..., ω^{d-1}).
fn clock_matrix(d: usize) -> CMatrix {
    let step = 2.0 * std::f64::consts::PI / d as f64;
    CMatrix::from_diagonal(&DVector::from_iterator(
        d,
        (0..d).map(|k| Complex64::from_polar(1.0, step * k as f64)),
    ))
}

/// Cyclic shift e_k -> e_{k+1 mod d}.
fn cyclic_shift_matrix(d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |i, j| if i == (j + 1) % d { one() } else { Complex64::new(0.0, 0.0) })
}

/// Truncated forward shift e_k -> e_{k+1} (nilpotent Jordan block).
fn jordan_forward(d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |i, j| if i == j + 1 { one() } else { Complex64::new(0.0, 0.0) })
}

/// diag(1, q, ..., q^{d-1}).
fn phase_diag_matrix(d: usize, q: Complex64) -> CMatrix {
    let mut current = one();
    CMatrix::from_diagonal(&DVector::from_iterator(
        d,
        (0..d).map(|_| {
            let v = current;
            current *= q;
            v
        }),
    ))
}

fn gaussian_matrix(d: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    CMatrix::from_fn(d, d, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im)
    })
}

fn check_residuals(tuple: &OperatorTuple, doubly: bool, what: &str) -> Result<()> {
    let plain = relation_residual(tuple, RelationMode::Plain)?.max_pairwise();
    if plain > BUILD_CHECK {
        return Err(Error::Internal(format!(
            "{what}: generated tuple has plain residual {plain:.3e}"
        )));
    }
    if doubly {
        let d = relation_residual(tuple, RelationMode::Doubly)?.max_pairwise();
        if d > BUILD_CHECK {
            return Err(Error::Internal(format!(
                "{what}: generated tuple has doubly residual {d:.3e}"
            )));
        }
    }
    Ok(())
}

/// The clock-and-shift pair (Z, X) on C^d: Z = diag(ω^k), X the cyclic
/// shift, ω = e^{2πi/d}. Both are unitary and Z X = ω X Z, so the stored
/// phase is q_12 = ω and the pair is doubly q-commuting.
pub fn clock_shift(d: usize) -> Result<OperatorTuple> {
    if d < 2 {
        return Err(Error::InvalidArg(format!("clock_shift needs d >= 2, got {d}")));
    }
    let omega = root_of_unity(d);
    let tuple = OperatorTuple::dense(
        vec![clock_matrix(d), cyclic_shift_matrix(d)],
        CommutationData::pair(omega),
    )?;
    check_residuals(&tuple, true, "clock_shift")?;
    Ok(tuple)
}

/// The pair (scale · J_d, D_q) with J_d the truncated forward shift and
/// D_q = diag(1, q, ..., q^{d-1}); doubly q-commuting with the stored phase
/// q_12 = conj(q). The first operator is c.n.u. (strictly so for scale < 1),
/// the second unitary.
pub fn shift_phase_pair(d: usize, q: Complex64, scale: f64) -> Result<OperatorTuple> {
    if d < 2 {
        return Err(Error::InvalidArg(format!("shift_phase_pair needs d >= 2, got {d}")));
    }
    if (q.norm() - 1.0).abs() > 1e-8 {
        return Err(Error::NonUnimodularQ {
            i: 0,
            j: 1,
            modulus: q.norm(),
        });
    }
    if !(scale > 0.0 && scale <= 1.0) {
        return Err(Error::InvalidArg(format!("scale must lie in (0, 1], got {scale}")));
    }
    let j = jordan_forward(d).map(|v| v * scale);
    let dq = phase_diag_matrix(d, q);
    let tuple = OperatorTuple::dense(vec![j, dq], CommutationData::pair(q.conj()))?;
    check_residuals(&tuple, true, "shift_phase_pair")?;
    Ok(tuple)
}

/// Seeded Haar-style random unitary: QR of a complex Gaussian sample with
/// the R-diagonal phases absorbed into the columns.
pub fn random_unitary(d: usize, seed: u64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_unitary_with(d, &mut rng)
}

fn random_unitary_with(d: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    if d == 0 {
        return CMatrix::zeros(0, 0);
    }
    let g = gaussian_matrix(d, rng);
    let qr = g.qr();
    let q = qr.q();
    let r = qr.r();
    let phases = DVector::from_iterator(
        d,
        (0..d).map(|i| {
            let v = r[(i, i)];
            if v.norm() > 0.0 {
                v / v.norm()
            } else {
                one()
            }
        }),
    );
    &q * CMatrix::from_diagonal(&phases)
}

/// Seeded random contraction: a complex Gaussian sample divided by its
/// largest singular value times (1 + u), u uniform in [0, 1). Some draws
/// are strict contractions, some have norm arbitrarily close to 1.
pub fn random_contraction(d: usize, seed: u64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if d == 0 {
        return CMatrix::zeros(0, 0);
    }
    let g = gaussian_matrix(d, &mut rng);
    let u: f64 = rng.random();
    let sigma = numkit::spectral_norm(&g);
    if sigma == 0.0 {
        return g;
    }
    g.map(|v| v / (sigma * (1.0 + u)))
}

fn conjugate(w: &CMatrix, m: &CMatrix) -> CMatrix {
    w * m * w.adjoint()
}

fn block_direct_sum(blocks: &[CMatrix]) -> CMatrix {
    let total: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = CMatrix::zeros(total, total);
    let mut offset = 0;
    for b in blocks {
        out.view_mut((offset, offset), (b.nrows(), b.nrows())).copy_from(b);
        offset += b.nrows();
    }
    out
}

fn block_frames(w: &CMatrix, dims: &[usize]) -> Vec<Subspace> {
    let mut frames = Vec::with_capacity(dims.len());
    let mut offset = 0;
    for &d in dims {
        let frame = CMatrix::from(w.columns(offset, d));
        frames.push(Subspace::from_frame(frame).expect("unitary columns are orthonormal"));
        offset += d;
    }
    frames
}

fn validate_signatures(n: usize, signatures: &[&str]) -> Result<()> {
    if !(1..=3).contains(&n) {
        return Err(Error::InvalidArg(format!("planted tuples support n in 1..=3, got {n}")));
    }
    if signatures.is_empty() {
        return Err(Error::UnsupportedSignature("no signatures requested".into()));
    }
    let mut seen = std::collections::BTreeSet::new();
    for sig in signatures {
        if sig.len() != n || !sig.chars().all(|c| c == 'u' || c == 'c') {
            return Err(Error::UnsupportedSignature(format!(
                "signature {sig:?} is not a word of length {n} over {{u, c}}"
            )));
        }
        if !seen.insert(*sig) {
            return Err(Error::UnsupportedSignature(format!("duplicate signature {sig:?}")));
        }
    }
    Ok(())
}

/// Block recipe realizing one {u,c}^2 signature with the shared phase
/// q_12 = ω = e^{2πi/d}: clock/shift for "uu", phase-diagonal against the
/// truncated shift for the mixed signatures, and a damped phase diagonal
/// for "cc". Every recipe is doubly q-commuting with the same stored phase,
/// which is what makes the direct sum well-formed.
fn pair_recipe(sig: &str, d: usize) -> (CMatrix, CMatrix) {
    let omega = root_of_unity(d);
    match sig {
        "uu" => (clock_matrix(d), cyclic_shift_matrix(d)),
        "uc" => (phase_diag_matrix(d, omega), jordan_forward(d)),
        "cu" => (jordan_forward(d), phase_diag_matrix(d, omega.conj())),
        "cc" => (
            jordan_forward(d),
            phase_diag_matrix(d, omega.conj()).map(|v| v * 0.5),
        ),
        _ => unreachable!("validated signature"),
    }
}

/// Planted block tuple: one d_block-dimensional block per requested
/// signature, all sharing consistent stored phases, conjugated by a seeded
/// random unitary. The ground truth maps each signature to the W-image of
/// its coordinate block; the construction is the oracle for the maximality
/// claims of the tuple decomposition.
pub fn planted_tuple(
    n: usize,
    d_block: usize,
    signatures: &[&str],
    seed: u64,
) -> Result<PlantedTuple> {
    validate_signatures(n, signatures)?;
    if d_block < 2 {
        return Err(Error::InvalidArg(format!("d_block must be >= 2, got {d_block}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega = root_of_unity(d_block);
    let mut blocks: Vec<Vec<CMatrix>> = vec![Vec::new(); n];
    for sig in signatures {
        match n {
            1 => {
                let block = match &sig[0..1] {
                    "u" => random_diag_unitary(d_block, &mut rng),
                    _ => random_contraction_with(d_block, &mut rng).map(|v| v * 0.5),
                };
                blocks[0].push(block);
            }
            2 | 3 => {
                let (b1, b2) = pair_recipe(&sig[0..2], d_block);
                blocks[0].push(b1);
                blocks[1].push(b2);
                if n == 3 {
                    // scaled identities commute exactly with everything, so
                    // the third stored phase is 1 in every slot
                    let c3 = match &sig[2..3] {
                        "u" => omega,
                        _ => Complex64::new(0.5, 0.0),
                    };
                    blocks[2].push(numkit::identity(d_block).map(|v| v * c3));
                }
            }
            _ => unreachable!("validated n"),
        }
    }

    let total = d_block * signatures.len();
    let w = random_unitary_with(total, &mut rng);
    let operators: Vec<Operator> = blocks
        .iter()
        .map(|per_op| Operator::Dense(conjugate(&w, &block_direct_sum(per_op))))
        .collect();

    let commutation = match n {
        1 => CommutationData::trivial(1),
        2 => CommutationData::pair(omega),
        3 => {
            let mut q = CMatrix::from_element(3, 3, one());
            q[(0, 1)] = omega;
            q[(1, 0)] = one() / omega;
            CommutationData::ScalarPhases(q)
        }
        _ => unreachable!(),
    };
    let tuple = OperatorTuple::new(operators, commutation)?;
    check_residuals(&tuple, true, "planted_tuple")?;

    let dims = vec![d_block; signatures.len()];
    let frames = block_frames(&w, &dims);
    let ground_truth = signatures
        .iter()
        .map(|s| s.to_string())
        .zip(frames)
        .collect();
    Ok(PlantedTuple {
        tuple,
        ground_truth,
        conjugator: w,
        seed,
    })
}

fn random_diag_unitary(d: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    CMatrix::from_diagonal(&DVector::from_iterator(
        d,
        (0..d).map(|_| {
            let angle: f64 = rng.random::<f64>() * 2.0 * std::f64::consts::PI;
            Complex64::from_polar(1.0, angle)
        }),
    ))
}

fn random_contraction_with(d: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let g = gaussian_matrix(d, rng);
    let sigma = numkit::spectral_norm(&g);
    if sigma == 0.0 {
        return g;
    }
    g.map(|v| v / sigma)
}

/// Planted commuting pair mixing a doubly-commuting part with a block that
/// merely commutes: (diagonal unitaries) ⊕ (damped diagonals) ⊕ (J_2, J_2),
/// conjugated by a seeded random unitary. Ground truth keys:
/// "unitary" (the jointly unitary block), "dc" (the doubly-commuting
/// content, i.e. everything except the Jordan pair).
pub fn planted_mixed_commuting(d_block: usize, seed: u64) -> Result<PlantedTuple> {
    if d_block < 1 {
        return Err(Error::InvalidArg("d_block must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u1 = random_diag_unitary(d_block, &mut rng);
    let u2 = random_diag_unitary(d_block, &mut rng);
    let s1 = random_diag_unitary(d_block, &mut rng).map(|v| v * 0.5);
    let s2 = random_diag_unitary(d_block, &mut rng).map(|v| v * 0.6);
    let j = jordan_forward(2);
    let total = 2 * d_block + 2;
    let w = random_unitary_with(total, &mut rng);
    let t1 = conjugate(&w, &block_direct_sum(&[u1, s1, j.clone()]));
    let t2 = conjugate(&w, &block_direct_sum(&[u2, s2, j]));
    let tuple = OperatorTuple::dense(vec![t1, t2], CommutationData::trivial(2))?;
    check_residuals(&tuple, false, "planted_mixed_commuting")?;

    let frames = block_frames(&w, &[d_block, d_block, 2]);
    let mut ground_truth = BTreeMap::new();
    ground_truth.insert("unitary".to_string(), frames[0].clone());
    let dc_frame = CMatrix::from(w.columns(0, 2 * d_block));
    ground_truth.insert("dc".to_string(), Subspace::from_frame(dc_frame)?);
    Ok(PlantedTuple {
        tuple,
        ground_truth,
        conjugator: w,
        seed,
    })
}

/// Planted doubly Q-commuting pair with a genuinely non-scalar unitary
/// family: a clock/shift block of size d_u (phase ω_{d_u}) next to a
/// truncated-shift block of size d_c (phase ω_{d_c}), so Q(j,i) is the
/// block-diagonal of the two slot phases. Ground truth keys: "uu" (the
/// jointly unitary block) and "cu" (the c.n.u. x unitary block).
pub fn planted_q_tuple(d_u: usize, d_c: usize, seed: u64) -> Result<PlantedTuple> {
    if d_u < 2 || d_c < 2 {
        return Err(Error::InvalidArg("planted_q_tuple needs block dims >= 2".into()));
    }
    if d_u == d_c {
        return Err(Error::InvalidArg(
            "equal block dims give a scalar Q; pick d_u != d_c".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega_u = root_of_unity(d_u);
    let omega_c = root_of_unity(d_c);
    let (a1, a2) = pair_recipe("uu", d_u);
    let (b1, b2) = pair_recipe("cu", d_c);
    let total = d_u + d_c;
    let w = random_unitary_with(total, &mut rng);
    let t1 = conjugate(&w, &block_direct_sum(&[a1, b1]));
    let t2 = conjugate(&w, &block_direct_sum(&[a2, b2]));
    // T_1 T_2 = Q(2,1) T_2 T_1 slot-wise, with the slot phases on the diagonal.
    let q21_plain = block_direct_sum(&[
        numkit::identity(d_u).map(|v| v * omega_u),
        numkit::identity(d_c).map(|v| v * omega_c),
    ]);
    let q21 = conjugate(&w, &q21_plain);
    let eye = numkit::identity(total);
    let family = vec![vec![eye.clone(), q21.adjoint()], vec![q21, eye]];
    let tuple = OperatorTuple::new(
        vec![Operator::Dense(t1), Operator::Dense(t2)],
        CommutationData::UnitaryFamily(family),
    )?;
    check_residuals(&tuple, true, "planted_q_tuple")?;
    let q_res = relation_residual(&tuple, RelationMode::Plain)?;
    if q_res.max_q_commutation() > BUILD_CHECK {
        return Err(Error::Internal(format!(
            "planted_q_tuple: Q fails to commute with the operators ({:.3e})",
            q_res.max_q_commutation()
        )));
    }

    let frames = block_frames(&w, &[d_u, d_c]);
    let mut ground_truth = BTreeMap::new();
    ground_truth.insert("uu".to_string(), frames[0].clone());
    ground_truth.insert("cu".to_string(), frames[1].clone());
    Ok(PlantedTuple {
        tuple,
        ground_truth,
        conjugator: w,
        seed,
    })
}
