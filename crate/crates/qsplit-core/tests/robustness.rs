//! Wide randomized sweeps beyond the acceptance suite: varied block
//! dimensions, near-boundary norms, and structured tuples that mix genuine
//! numerical splits with symbolic shift slots.

use qsplit_core::decomp::{
    canonical_decomposition, dc_part, defect_kernel_unitary_part, tuple_decomposition,
    unitary_cnu_split, unitary_part,
};
use qsplit_core::genlab::{
    planted_mixed_commuting, planted_q_tuple, planted_tuple, random_contraction, random_unitary,
};
use qsplit_core::numkit::principal_angle_distance;
use qsplit_core::opmodel::{
    verify_doubly, CommutationData, Operator, OperatorTuple, ShiftBlock, ShiftKind, SlotOperator,
    StructuredOperator,
};
use qsplit_core::{Complex64, Error, Tolerance};

fn tol() -> Tolerance {
    Tolerance::default()
}

#[test]
fn planted_pairs_across_block_dims() {
    let mut worst = 0.0f64;
    for d_block in 2..=5usize {
        for seed in 0..40u64 {
            let p = planted_tuple(
                2,
                d_block,
                &["uu", "uc", "cu", "cc"],
                900_000 + seed * 7 + d_block as u64,
            )
            .unwrap();
            let res = tuple_decomposition(&p.tuple, tol()).unwrap();
            for (sig, truth) in &p.ground_truth {
                let got = res.part(sig).unwrap().extent.as_dense().unwrap();
                assert_eq!(got.dim(), truth.dim(), "d_block {d_block} seed {seed} {sig}");
                let dist = principal_angle_distance(got, truth).unwrap();
                assert!(dist <= 1e-8, "d_block {d_block} seed {seed} {sig}: {dist:.3e}");
                worst = worst.max(dist);
            }
            assert!(res.diagnostics.max_reduction_residual <= 1e-9);
            assert!(res.diagnostics.completeness_residual <= 1e-9);
        }
    }
    println!("planted sweep worst distance: {worst:.3e}");
}

#[test]
fn mixed_commuting_and_q_families_across_dims() {
    for seed in 0..60u64 {
        let p = planted_mixed_commuting(2 + (seed as usize % 4), 800_000 + seed).unwrap();
        let dc = dc_part(&p.tuple, tol()).unwrap();
        assert_eq!(dc.dim(), p.ground_truth["dc"].dim(), "seed {seed}");
        let res = unitary_cnu_split(&p.tuple, tol()).unwrap();
        assert_eq!(
            res.part("u^n").unwrap().extent.finite_dim(),
            p.ground_truth["unitary"].dim(),
            "seed {seed}"
        );
    }
    for seed in 0..40u64 {
        let du = 2 + (seed as usize % 3);
        let dc_dim = 3 + (seed as usize % 4);
        if du == dc_dim {
            continue;
        }
        let p = planted_q_tuple(du, dc_dim, 700_000 + seed).unwrap();
        let res = tuple_decomposition(&p.tuple, tol()).unwrap();
        for (sig, truth) in &p.ground_truth {
            let got = res.part(sig).unwrap().extent.as_dense().unwrap();
            assert_eq!(got.dim(), truth.dim(), "seed {seed} {sig}");
            assert!(principal_angle_distance(got, truth).unwrap() <= 1e-8);
        }
    }
}

#[test]
fn random_contraction_decompositions_stay_within_residuals() {
    for seed in 0..150u64 {
        let d = 2 + (seed as usize % 15);
        let t = random_contraction(d, 600_000 + seed);
        let res = canonical_decomposition(&t, tol()).unwrap();
        assert!(res.diagnostics.completeness_residual <= 1e-9, "seed {seed}");
        assert!(res.diagnostics.max_reduction_residual <= 1e-9, "seed {seed}");
        let a = defect_kernel_unitary_part(&t, None, tol()).unwrap();
        let b = unitary_part(&t, tol()).unwrap();
        assert_eq!(a.dim(), b.dim(), "seed {seed} d {d}");
    }
}

#[test]
fn near_boundary_norms_behave() {
    for seed in 0..30u64 {
        let d = 3 + (seed as usize % 5);
        let u = random_unitary(d, 500_000 + seed);
        assert_eq!(unitary_part(&u, tol()).unwrap().dim(), d);
        // barely expansive: rejected by the contraction gate
        let bad = u.map(|v| v * (1.0 + 1e-6));
        assert!(matches!(
            unitary_part(&bad, tol()),
            Err(Error::NotAContraction { .. })
        ));
        // uniformly shy of unitary: the defect matrix is ~2e-12 I, whose own
        // sigma_max sets the relative threshold, so no kernel direction
        // survives; both kernel-based routes agree on {0}
        let shy = u.map(|v| v * (1.0 - 1e-12));
        assert_eq!(unitary_part(&shy, tol()).unwrap().dim(), 0, "seed {seed}");
        assert_eq!(
            defect_kernel_unitary_part(&shy, None, tol()).unwrap().dim(),
            0,
            "seed {seed}"
        );
        // clearly inside: empty unitary part
        let strict = u.map(|v| v * 0.999);
        assert_eq!(unitary_part(&strict, tol()).unwrap().dim(), 0, "seed {seed}");
    }
}

#[test]
fn structured_tuple_mixing_dense_split_and_shift_slots() {
    // A dense slot that genuinely splits (planted uu ⊕ cc with phase -1)
    // next to a (phase-diagonal, shift) slot carrying the same phase.
    let omega = Complex64::from_polar(1.0, std::f64::consts::PI);
    let p = planted_tuple(2, 2, &["uu", "cc"], 123).unwrap();
    let d1 = p.tuple.operators[0].as_dense().unwrap().clone();
    let d2 = p.tuple.operators[1].as_dense().unwrap().clone();
    assert!((p.tuple.scalar_phase(0, 1).unwrap() - omega).norm() < 1e-12);
    let t1 = Operator::Structured(StructuredOperator {
        slots: vec![
            SlotOperator::Dense(d1),
            SlotOperator::Shift(ShiftBlock {
                kind: ShiftKind::PhaseDiag(omega),
                multiplicity: 1,
            }),
        ],
    });
    let t2 = Operator::Structured(StructuredOperator {
        slots: vec![
            SlotOperator::Dense(d2),
            SlotOperator::Shift(ShiftBlock {
                kind: ShiftKind::Shift(Complex64::new(1.0, 0.0)),
                multiplicity: 1,
            }),
        ],
    });
    let tuple = OperatorTuple::new(vec![t1, t2], CommutationData::pair(omega)).unwrap();
    assert!(verify_doubly(&tuple, tol()).unwrap());
    let res = tuple_decomposition(&tuple, tol()).unwrap();
    assert_eq!(res.dim("uu"), 2);
    assert_eq!(res.dim("cc"), 2);
    let uc = res.part("uc").unwrap();
    assert!(uc.extent.has_infinite(), "the (phase, shift) slot lands in uc");
    for part in res.parts.values() {
        assert!(part.reduction_residual <= 1e-9);
    }
}
