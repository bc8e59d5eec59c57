//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured worst-case numbers. Run with
//! `cargo test -p qsplit-core --test acceptance -- --nocapture` to see them.

use qsplit_core::decomp::{
    canonical_decomposition, cnu_tuple_decomposition, dc_part, defect_kernel_unitary_part,
    isometric_part_dense, levan_decomposition, tuple_decomposition, unitary_cnu_split,
    unitary_part, PartExtent, SlotExtent,
};
use qsplit_core::error::Error;
use qsplit_core::genlab::{
    clock_shift, planted_mixed_commuting, planted_q_tuple, planted_tuple, random_contraction,
    random_unitary,
};
use qsplit_core::numkit::{
    self, c, principal_angle_distance, reduction_residual, spectral_norm, Subspace,
};
use qsplit_core::opmodel::{
    classify, relation_residual, verify_doubly, CommutationData, Operator, OperatorTuple,
    RelationMode, ShiftBlock, ShiftKind, SlotOperator, StructuredOperator,
};
use qsplit_core::{CMatrix, Complex64, Tolerance};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn tol() -> Tolerance {
    Tolerance::default()
}

fn conjugate(w: &CMatrix, m: &CMatrix) -> CMatrix {
    w * m * w.adjoint()
}

fn direct_sum(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (da, db) = (a.nrows(), b.nrows());
    let mut out = CMatrix::zeros(da + db, da + db);
    out.view_mut((0, 0), (da, da)).copy_from(a);
    out.view_mut((da, da), (db, db)).copy_from(b);
    out
}

fn jordan(d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |i, j| if i + 1 == j { c(1.0, 0.0) } else { c(0.0, 0.0) })
}

/// Criterion 1: over 200 planted single contractions (unitary dim a ⊕
/// strict contraction dim b, random unitary conjugation, a + b <= 16) the
/// unitary part recovers the dimension exactly and the subspace within 1e-8.
#[test]
fn criterion_01_canonical_decomposition_oracle() {
    let mut worst = 0.0f64;
    for trial in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0xC1 + trial);
        let a = 1 + (rng.random::<u64>() % 8) as usize;
        let b = 1 + (rng.random::<u64>() % 8) as usize;
        let u = random_unitary(a, 3 * trial + 1);
        let strict = random_contraction(b, 3 * trial + 2).map(|v| v * 0.9);
        let w = random_unitary(a + b, 3 * trial + 3);
        let t = conjugate(&w, &direct_sum(&u, &strict));

        let got = unitary_part(&t, tol()).unwrap();
        assert_eq!(got.dim(), a, "trial {trial}: dim {} != {a}", got.dim());
        let truth = Subspace::from_frame(CMatrix::from(w.columns(0, a))).unwrap();
        let dist = principal_angle_distance(&got, &truth).unwrap();
        assert!(dist <= 1e-8, "trial {trial}: distance {dist:.3e}");
        worst = worst.max(dist);
    }
    println!("ACCEPTANCE 1 PASS: canonical-decomposition oracle, 200 planted contractions, worst distance {worst:.3e}");
}

/// Criterion 2: the defect-kernel formula and the fixed-point algorithm
/// agree within 1e-8 on 100 random contractions (d <= 12), plus planted
/// contractions with nontrivial unitary parts.
#[test]
fn criterion_02_paper_formula_equivalence() {
    let mut worst = 0.0f64;
    for seed in 0..100u64 {
        let d = 2 + (seed as usize % 11);
        let t = random_contraction(d, 0xD0 + seed);
        let a = defect_kernel_unitary_part(&t, None, tol()).unwrap();
        let b = unitary_part(&t, tol()).unwrap();
        assert_eq!(a.dim(), b.dim(), "seed {seed}");
        let dist = principal_angle_distance(&a, &b).unwrap();
        assert!(dist <= 1e-8, "seed {seed}: {dist:.3e}");
        worst = worst.max(dist);
    }
    // nontrivial kernels: planted unitary ⊕ strict blocks
    for seed in 0..30u64 {
        let u = random_unitary(3, 7 * seed + 1);
        let strict = random_contraction(4, 7 * seed + 2).map(|v| v * 0.8);
        let w = random_unitary(7, 7 * seed + 3);
        let t = conjugate(&w, &direct_sum(&u, &strict));
        let a = defect_kernel_unitary_part(&t, None, tol()).unwrap();
        let b = unitary_part(&t, tol()).unwrap();
        assert_eq!(a.dim(), 3, "seed {seed}");
        assert_eq!(b.dim(), 3, "seed {seed}");
        let dist = principal_angle_distance(&a, &b).unwrap();
        assert!(dist <= 1e-8, "seed {seed}: {dist:.3e}");
        worst = worst.max(dist);
    }
    println!("ACCEPTANCE 2 PASS: defect-kernel formula ≡ fixed point, 130 contractions, worst distance {worst:.3e}");
}

/// Criterion 3: planted n=2 tuples with all four signatures (block dim 3)
/// give exactly four nonzero parts of dim 3, pairwise orthogonal within
/// 1e-10, reducing both operators within 1e-9, matching ground truth within
/// 1e-8; permuting the operator order permutes the signatures within 1e-8.
#[test]
fn criterion_03_two_power_n_decomposition() {
    let sigs = ["uu", "uc", "cu", "cc"];
    let mut worst_truth = 0.0f64;
    let mut worst_orth = 0.0f64;
    for seed in 0..25u64 {
        let planted = planted_tuple(2, 3, &sigs, 0x3A + seed).unwrap();
        let res = tuple_decomposition(&planted.tuple, tol()).unwrap();

        let mut nonzero = 0;
        for sig in sigs {
            let part = res.part(sig).unwrap();
            let sub = part.extent.as_dense().unwrap();
            if sub.dim() > 0 {
                nonzero += 1;
            }
            assert_eq!(sub.dim(), 3, "seed {seed} sig {sig}");
            assert!(part.reduction_residual <= 1e-9, "seed {seed} sig {sig}");
            let truth = &planted.ground_truth[sig];
            let dist = principal_angle_distance(sub, truth).unwrap();
            assert!(dist <= 1e-8, "seed {seed} sig {sig}: {dist:.3e}");
            worst_truth = worst_truth.max(dist);
        }
        assert_eq!(nonzero, 4);
        for i in 0..sigs.len() {
            for j in (i + 1)..sigs.len() {
                let a = res.part(sigs[i]).unwrap().extent.as_dense().unwrap();
                let b = res.part(sigs[j]).unwrap().extent.as_dense().unwrap();
                let cross = spectral_norm(&(a.frame().adjoint() * b.frame()));
                assert!(cross <= 1e-10, "seed {seed}: {} vs {}", sigs[i], sigs[j]);
                worst_orth = worst_orth.max(cross);
            }
        }

        // order invariance
        let swapped = OperatorTuple::new(
            vec![
                planted.tuple.operators[1].clone(),
                planted.tuple.operators[0].clone(),
            ],
            CommutationData::pair(planted.tuple.scalar_phase(1, 0).unwrap()),
        )
        .unwrap();
        let res_swapped = tuple_decomposition(&swapped, tol()).unwrap();
        for sig in sigs {
            let permuted: String = sig.chars().rev().collect();
            let a = res.part(sig).unwrap().extent.as_dense().unwrap();
            let b = res_swapped.part(&permuted).unwrap().extent.as_dense().unwrap();
            let dist = principal_angle_distance(a, b).unwrap();
            assert!(dist <= 1e-8, "seed {seed} sig {sig}: {dist:.3e}");
        }
    }
    println!("ACCEPTANCE 3 PASS: 2^n decomposition over 25 planted pairs, worst truth distance {worst_truth:.3e}, worst cross product {worst_orth:.3e}");
}

/// Criterion 4: every part emitted by any suite reduces every tuple
/// operator and every Q(i,j) within 1e-9.
#[test]
fn criterion_04_reduction_theorem() {
    let mut worst = 0.0f64;
    for seed in 0..15u64 {
        let planted = planted_tuple(2, 3, &["uu", "uc", "cu", "cc"], 0x4A + seed).unwrap();
        let res = tuple_decomposition(&planted.tuple, tol()).unwrap();
        let ops = planted.tuple.dense_operators().unwrap();
        for part in res.parts.values() {
            let sub = part.extent.as_dense().unwrap();
            for t in &ops {
                worst = worst.max(reduction_residual(t, sub).unwrap());
            }
        }

        let q = planted_q_tuple(3, 4, 0x4B + seed).unwrap();
        let res = tuple_decomposition(&q.tuple, tol()).unwrap();
        let ops = q.tuple.dense_operators().unwrap();
        let family = match &q.tuple.commutation {
            CommutationData::UnitaryFamily(f) => f,
            _ => unreachable!(),
        };
        for part in res.parts.values() {
            let sub = part.extent.as_dense().unwrap();
            for t in &ops {
                worst = worst.max(reduction_residual(t, sub).unwrap());
            }
            for row in family {
                for qm in row {
                    worst = worst.max(reduction_residual(qm, sub).unwrap());
                }
            }
        }

        let mixed = planted_mixed_commuting(3, 0x4C + seed).unwrap();
        let res = unitary_cnu_split(&mixed.tuple, tol()).unwrap();
        let ops = mixed.tuple.dense_operators().unwrap();
        for part in res.parts.values() {
            let sub = part.extent.as_dense().unwrap();
            for t in &ops {
                worst = worst.max(reduction_residual(t, sub).unwrap());
            }
        }
    }
    assert!(worst <= 1e-9, "worst reduction residual {worst:.3e}");
    println!("ACCEPTANCE 4 PASS: joint reduction of every emitted part, worst residual {worst:.3e}");
}

/// Criterion 5: q-commuting normal pairs derived from clock/shift pairs
/// pass doubly verification with residual <= 1e-10 across d in 2..=8.
#[test]
fn criterion_05_fuglede_putnam_property() {
    let mut worst = 0.0f64;
    for d in 2..=8usize {
        let pair = clock_shift(d).unwrap();
        let z = pair.operators[0].as_dense().unwrap().clone();
        let x = pair.operators[1].as_dense().unwrap().clone();
        let q12 = pair.scalar_phase(0, 1).unwrap();
        for (s1, s2) in [(1.0, 1.0), (0.8, 1.0), (1.0, 0.6), (0.5, 0.9)] {
            let tuple = OperatorTuple::dense(
                vec![z.map(|v| v * s1), x.map(|v| v * s2)],
                CommutationData::pair(q12),
            )
            .unwrap();
            assert!(verify_doubly(&tuple, tol()).unwrap(), "d {d} scales {s1},{s2}");
            let res = relation_residual(&tuple, RelationMode::Doubly).unwrap();
            assert!(res.max_pairwise() <= 1e-10, "d {d}: {}", res.max_pairwise());
            worst = worst.max(res.max_pairwise());
        }
    }
    println!("ACCEPTANCE 5 PASS: Fuglede-Putnam doubly residuals for scaled clock/shift normals, worst {worst:.3e}");
}

/// Criterion 6: doubly-mode verification rejects every non-unimodular q
/// with the dedicated error.
#[test]
fn criterion_06_unimodular_gate() {
    let mut rejected = 0usize;
    let mut total = 0usize;
    let mut rng = ChaCha8Rng::seed_from_u64(0x6A);
    let eye = numkit::identity(3);
    let moduli = [
        0.01, 0.5, 0.9, 0.99, 0.9999, 1.0001, 1.01, 1.5, 2.0, 10.0,
    ];
    for &m in &moduli {
        for _ in 0..10 {
            total += 1;
            let angle: f64 = rng.random::<f64>() * std::f64::consts::TAU;
            let q = Complex64::from_polar(m, angle);
            let tuple =
                OperatorTuple::dense(vec![eye.clone(), eye.clone()], CommutationData::pair(q))
                    .unwrap();
            match verify_doubly(&tuple, tol()) {
                Err(Error::NonUnimodularQ { .. }) => rejected += 1,
                other => panic!("|q| = {m}: expected NonUnimodularQ, got {other:?}"),
            }
        }
    }
    assert_eq!(rejected, total);
    println!("ACCEPTANCE 6 PASS: |q| = 1 gate rejected {rejected}/{total} adversarial moduli");
}

/// Criterion 7: dc_part recovers the planted doubly-commuting block within
/// 1e-8, the split's unitary half equals the planted unitary sub-block, and
/// the (J_2, J_2) pair has dc_part = {0} exactly.
#[test]
fn criterion_07_dc_part_and_split() {
    let mut worst = 0.0f64;
    for seed in 0..20u64 {
        let planted = planted_mixed_commuting(3, 0x7A + seed).unwrap();
        let dc = dc_part(&planted.tuple, tol()).unwrap();
        let truth_dc = &planted.ground_truth["dc"];
        assert_eq!(dc.dim(), truth_dc.dim(), "seed {seed}");
        let dist = principal_angle_distance(&dc, truth_dc).unwrap();
        assert!(dist <= 1e-8, "seed {seed}: dc {dist:.3e}");
        worst = worst.max(dist);

        let res = unitary_cnu_split(&planted.tuple, tol()).unwrap();
        let h1 = res.part("u^n").unwrap().extent.as_dense().unwrap();
        let truth_u = &planted.ground_truth["unitary"];
        assert_eq!(h1.dim(), truth_u.dim(), "seed {seed}");
        let dist = principal_angle_distance(h1, truth_u).unwrap();
        assert!(dist <= 1e-8, "seed {seed}: split {dist:.3e}");
        worst = worst.max(dist);
    }

    let j = jordan(2);
    let pair = OperatorTuple::dense(vec![j.clone(), j], CommutationData::trivial(2)).unwrap();
    assert_eq!(dc_part(&pair, tol()).unwrap().dim(), 0);
    println!("ACCEPTANCE 7 PASS: dc-part and unitary split over 20 planted mixed tuples, worst distance {worst:.3e}; (J2,J2) gives dc = {{0}}");
}

/// Criterion 8: Levan on dense c.n.u. inputs always yields a trivial p-part;
/// structured shift/scalar suites group slots exactly into B1/B2; the
/// isometric and unitary parts agree within 1e-9 on random contractions.
#[test]
fn criterion_08_levan() {
    // dense c.n.u. inputs: strict contractions and nilpotent Jordan sums
    for seed in 0..40u64 {
        let d = 2 + (seed as usize % 7);
        let t = random_contraction(d, 0x8A + seed).map(|v| v * 0.95);
        let res = levan_decomposition(&Operator::Dense(t), tol()).unwrap();
        assert_eq!(res.dim("p"), 0, "seed {seed}");
        assert_eq!(res.dim("n"), d, "seed {seed}");
    }
    let res = levan_decomposition(&Operator::Dense(jordan(4)), tol()).unwrap();
    assert_eq!(res.dim("p"), 0);
    assert_eq!(res.dim("n"), 4);

    // structured: slot-exact B1/B2 grouping
    let shift = |cv: Complex64, m: usize| {
        SlotOperator::Shift(ShiftBlock {
            kind: ShiftKind::Shift(cv),
            multiplicity: m,
        })
    };
    let scalar = |cv: Complex64, m: usize| {
        SlotOperator::Shift(ShiftBlock {
            kind: ShiftKind::Scalar(cv),
            multiplicity: m,
        })
    };
    let t1 = Operator::Structured(StructuredOperator {
        slots: vec![shift(c(1.0, 0.0), 1), scalar(c(0.5, 0.0), 2), scalar(c(0.4, 0.0), 1)],
    });
    let t2 = Operator::Structured(StructuredOperator {
        slots: vec![scalar(c(0.3, 0.0), 1), shift(c(0.0, 1.0), 2), scalar(c(0.2, 0.0), 1)],
    });
    let tuple = OperatorTuple::new(vec![t1, t2], CommutationData::trivial(2)).unwrap();
    let res = cnu_tuple_decomposition(&tuple, tol()).unwrap();
    let expect = [("pn", 0usize), ("np", 1), ("nn", 2)];
    for (sig, slot_idx) in expect {
        let part = res.part(sig).unwrap();
        if let PartExtent::Structured(slots) = &part.extent {
            for (i, e) in slots.iter().enumerate() {
                if i == slot_idx {
                    assert!(matches!(e, SlotExtent::Whole), "{sig} slot {i}");
                } else {
                    assert!(
                        !matches!(e, SlotExtent::Whole),
                        "{sig} slot {i} must not be whole"
                    );
                }
            }
        } else {
            panic!("structured extent expected");
        }
        let b1 = part.labels.iter().filter(|l| l.to_string() == "B1").count();
        let expected_b1 = sig.chars().filter(|&ch| ch == 'p').count();
        assert_eq!(b1, expected_b1, "{sig}");
    }
    assert!(res.part("pp").unwrap().extent.is_trivial());

    // finite-dimensional collapse on 100 random contractions
    let mut worst = 0.0f64;
    for seed in 0..100u64 {
        let d = 2 + (seed as usize % 9);
        let t = random_contraction(d, 0x8B + seed);
        let iso = isometric_part_dense(&t, tol()).unwrap();
        let uni = unitary_part(&t, tol()).unwrap();
        assert_eq!(iso.dim(), uni.dim(), "seed {seed}");
        let dist = principal_angle_distance(&iso, &uni).unwrap();
        assert!(dist <= 1e-9, "seed {seed}: {dist:.3e}");
        worst = worst.max(dist);
    }
    println!("ACCEPTANCE 8 PASS: Levan degeneracy on dense c.n.u. input, slot-exact structured grouping, isometric ≡ unitary collapse (worst {worst:.3e})");
}

/// Criterion 9: unitary-family data with Q = q·I reproduces the scalar path
/// within 1e-9; planted non-scalar block-diagonal Q families have every
/// part reducing every Q(i,j) within 1e-9 and unitary Q restrictions.
#[test]
fn criterion_09_q_generalization() {
    let mut worst_match = 0.0f64;
    for seed in 0..10u64 {
        let planted = planted_tuple(2, 3, &["uu", "uc", "cu", "cc"], 0x9A + seed).unwrap();
        let res_scalar = tuple_decomposition(&planted.tuple, tol()).unwrap();
        let q12 = planted.tuple.scalar_phase(0, 1).unwrap();
        let d = 12;
        let eye = numkit::identity(d);
        let family = vec![
            vec![eye.clone(), eye.map(|v| v * (1.0 / q12))],
            vec![eye.map(|v| v * q12), eye.clone()],
        ];
        let as_q = OperatorTuple::new(
            planted.tuple.operators.clone(),
            CommutationData::UnitaryFamily(family),
        )
        .unwrap();
        let res_q = tuple_decomposition(&as_q, tol()).unwrap();
        for sig in ["uu", "uc", "cu", "cc"] {
            let a = res_scalar.part(sig).unwrap().extent.as_dense().unwrap();
            let b = res_q.part(sig).unwrap().extent.as_dense().unwrap();
            assert_eq!(a.dim(), b.dim(), "seed {seed} {sig}");
            let dist = principal_angle_distance(a, b).unwrap();
            assert!(dist <= 1e-9, "seed {seed} {sig}: {dist:.3e}");
            worst_match = worst_match.max(dist);
        }
    }

    let mut worst_q = 0.0f64;
    for seed in 0..10u64 {
        let planted = planted_q_tuple(3, 4, 0x9B + seed).unwrap();
        let family = match &planted.tuple.commutation {
            CommutationData::UnitaryFamily(f) => f.clone(),
            _ => unreachable!(),
        };
        let res = tuple_decomposition(&planted.tuple, tol()).unwrap();
        for part in res.parts.values() {
            let sub = part.extent.as_dense().unwrap();
            for row in &family {
                for qm in row {
                    let r = reduction_residual(qm, sub).unwrap();
                    assert!(r <= 1e-9, "seed {seed}: Q residual {r:.3e}");
                    worst_q = worst_q.max(r);
                }
            }
        }
        for (sig, truth) in &planted.ground_truth {
            let got = res.part(sig).unwrap().extent.as_dense().unwrap();
            assert_eq!(got.dim(), truth.dim(), "seed {seed} {sig}");
            assert!(principal_angle_distance(got, truth).unwrap() <= 1e-8);
        }

        // Q_1/Q_2 blocks from the split are unitary
        let split = unitary_cnu_split(&planted.tuple, tol()).unwrap();
        for part in split.parts.values() {
            let k = part.extent.finite_dim();
            assert_eq!(part.q_blocks.len(), 4, "seed {seed}");
            for q in &part.q_blocks {
                let dev = spectral_norm(&(q.adjoint() * q - numkit::identity(k)));
                assert!(dev <= 1e-9, "seed {seed}: Q block deviation {dev:.3e}");
                worst_q = worst_q.max(dev);
            }
        }
    }
    println!("ACCEPTANCE 9 PASS: scalar ≡ Q = q·I paths (worst {worst_match:.3e}); non-scalar planted Q reduced and unitary on both halves (worst {worst_q:.3e})");
}

/// Cross-cutting check used by several criteria: classification flags of a
/// planted non-atom direct sum.
#[test]
fn criterion_support_non_atom_classification() {
    for seed in 0..10u64 {
        let u = random_unitary(2, 0xAA + seed);
        let strict = random_contraction(3, 0xAB + seed).map(|v| v * 0.7);
        let w = random_unitary(5, 0xAC + seed);
        let t = conjugate(&w, &direct_sum(&u, &strict));
        let class = classify(&Operator::Dense(t), tol()).unwrap();
        assert!(!class.unitary && !class.cnu && !class.is_atom(), "seed {seed}");
    }
    println!("ACCEPTANCE support PASS: planted unitary ⊕ strict sums classify as non-atoms");
}

/// Cross-cutting: ground truth of planted pairs is recovered across a
/// 100-seed sweep (block dim 2, ambient C^8).
#[test]
fn criterion_support_planted_recovery_sweep() {
    let sigs = ["uu", "uc", "cu", "cc"];
    let mut worst = 0.0f64;
    for seed in 0..100u64 {
        let planted = planted_tuple(2, 2, &sigs, 0xAE00 + seed).unwrap();
        let res = tuple_decomposition(&planted.tuple, tol()).unwrap();
        for (sig, truth) in &planted.ground_truth {
            let got = res.part(sig).unwrap().extent.as_dense().unwrap();
            assert_eq!(got.dim(), truth.dim(), "seed {seed} {sig}");
            let dist = principal_angle_distance(got, truth).unwrap();
            assert!(dist <= 1e-8, "seed {seed} {sig}: {dist:.3e}");
            worst = worst.max(dist);
        }
    }
    println!("ACCEPTANCE support PASS: planted ground truth recovered across 100 seeds, worst distance {worst:.3e}");
}

/// Cross-cutting: the full desk-scale envelope (ambient dim 24, n = 3)
/// stays within the stated residuals.
#[test]
fn criterion_support_desk_scale_envelope() {
    let sigs = ["uuu", "ucu", "cuc", "ccc"];
    for seed in 0..3u64 {
        let planted = planted_tuple(3, 6, &sigs, 0xDE5C + seed).unwrap();
        let ops = planted.tuple.dense_operators().unwrap();
        assert_eq!(ops[0].nrows(), 24);
        let res = tuple_decomposition(&planted.tuple, tol()).unwrap();
        assert!(res.diagnostics.max_reduction_residual <= 1e-9);
        assert!(res.diagnostics.completeness_residual <= 1e-9);
        for (sig, truth) in &planted.ground_truth {
            let got = res.part(sig).unwrap().extent.as_dense().unwrap();
            assert_eq!(got.dim(), 6, "seed {seed} {sig}");
            assert!(principal_angle_distance(got, truth).unwrap() <= 1e-8);
        }
        let nonzero: usize = res
            .parts
            .values()
            .filter(|p| p.extent.finite_dim() > 0)
            .count();
        assert_eq!(nonzero, 4, "only the planted signatures are populated");
    }
    println!("ACCEPTANCE support PASS: n = 3 tuples on C^24 recover planted blocks within tolerance");
}

/// Cross-cutting: Wold specialization on dense isometry tuples (all-u part
/// is everything) and canonical decomposition sanity on those inputs.
#[test]
fn criterion_support_wold_specialization() {
    for d in 2..=5usize {
        let pair = clock_shift(d).unwrap();
        let res = qsplit_core::decomp::wold_decomposition(&pair, tol()).unwrap();
        assert_eq!(res.dim(&"u".repeat(2)), d);
        let u = pair.operators[0].as_dense().unwrap();
        let single = canonical_decomposition(u, tol()).unwrap();
        assert_eq!(single.dim("u"), d);
    }
    println!("ACCEPTANCE support PASS: dense isometry tuples are entirely unitary (Wold specialization)");
}
