//! Dense complex linear-algebra kernels with explicit tolerance semantics.
//!
//! Everything downstream (relation verification, reducing-subspace fixed
//! points, the decomposition recursions) is built from the handful of
//! primitives in this module: rank-revealing null spaces, PSD square roots,
//! orthonormal frames, subspace intersection/complement, compressions and
//! reduction residuals. All norms are spectral (largest singular value)
//! unless noted; Frobenius appears only as a cheap internal upper bound.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex matrix, the concrete form of every dense operator.
pub type CMatrix = DMatrix<Complex64>;

/// Dense real matrix (residual tables and the like).
pub type RMatrix = DMatrix<f64>;

/// Shorthand for complex scalars.
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Rank / kernel decision thresholds.
///
/// A singular value sigma counts as zero iff
/// `sigma <= max(rel * sigma_max, abs_floor)`. The relative part makes the
/// decision scale-invariant; the absolute floor keeps the zero matrix sane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rel: f64,
    pub abs_floor: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            rel: 1e-10,
            abs_floor: 1e-13,
        }
    }
}

impl Tolerance {
    pub fn new(rel: f64, abs_floor: f64) -> Result<Self> {
        if rel <= 0.0 || !rel.is_finite() {
            return Err(Error::InvalidArg(format!("tolerance rel must be > 0, got {rel}")));
        }
        if abs_floor <= 0.0 || !abs_floor.is_finite() {
            return Err(Error::InvalidArg(format!(
                "tolerance abs_floor must be > 0, got {abs_floor}"
            )));
        }
        Ok(Tolerance { rel, abs_floor })
    }

    /// Threshold below which a magnitude at the given scale counts as zero.
    pub fn threshold(&self, scale: f64) -> f64 {
        (self.rel * scale).max(self.abs_floor)
    }

    /// Square-root-scaled tolerance: noise of size eps in a PSD matrix H
    /// shows up as sqrt(eps) in the singular values of sqrt(H), so kernel
    /// decisions on square roots must be taken at the square-rooted scale.
    pub fn sqrt_scale(&self) -> Tolerance {
        Tolerance {
            rel: self.rel.sqrt(),
            abs_floor: self.abs_floor.sqrt(),
        }
    }
}

/// Closed subspace of C^d, stored as a d x k matrix with orthonormal columns.
#[derive(Debug, Clone)]
pub struct Subspace {
    frame: CMatrix,
}

impl Subspace {
    /// Wraps a frame after checking column orthonormality to 1e-12.
    pub fn from_frame(frame: CMatrix) -> Result<Self> {
        ensure_finite(&frame)?;
        if frame.ncols() > frame.nrows() {
            return Err(Error::DimMismatch(format!(
                "frame has {} columns in ambient dimension {}",
                frame.ncols(),
                frame.nrows()
            )));
        }
        let k = frame.ncols();
        if k > 0 {
            let gram = frame.adjoint() * &frame;
            let dev = &gram - CMatrix::identity(k, k);
            if spectral_norm(&dev) > 1e-12 {
                return Err(Error::InvalidMatrix(format!(
                    "frame columns are not orthonormal: deviation {:.3e}",
                    spectral_norm(&dev)
                )));
            }
        }
        Ok(Subspace { frame })
    }

    /// Frame wrap plus deterministic column phases (largest-magnitude entry
    /// of each column made real positive).
    pub fn from_frame_canonical(mut frame: CMatrix) -> Result<Self> {
        fix_column_phases(&mut frame);
        Self::from_frame(frame)
    }

    pub fn full(dim: usize) -> Self {
        Subspace {
            frame: CMatrix::identity(dim, dim),
        }
    }

    pub fn zero(dim: usize) -> Self {
        Subspace {
            frame: CMatrix::zeros(dim, 0),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.frame.nrows()
    }

    pub fn dim(&self) -> usize {
        self.frame.ncols()
    }

    pub fn is_zero(&self) -> bool {
        self.dim() == 0
    }

    pub fn is_full(&self) -> bool {
        self.dim() == self.ambient_dim()
    }

    pub fn frame(&self) -> &CMatrix {
        &self.frame
    }

    /// Orthogonal projector onto the subspace (d x d).
    pub fn projector(&self) -> CMatrix {
        if self.dim() == 0 {
            return CMatrix::zeros(self.ambient_dim(), self.ambient_dim());
        }
        &self.frame * self.frame.adjoint()
    }
}

/// Rejects NaN/Inf entries.
pub fn ensure_finite(m: &CMatrix) -> Result<()> {
    for (idx, v) in m.iter().enumerate() {
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::InvalidMatrix(format!(
                "non-finite entry {v} at flat index {idx}"
            )));
        }
    }
    Ok(())
}

const SVD_EPS: f64 = 1e-15;
const SVD_MAX_ITER: usize = 100_000;

fn singular_values(m: &CMatrix) -> Result<Vec<f64>> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(Vec::new());
    }
    let svd = m
        .clone()
        .try_svd(false, false, SVD_EPS, SVD_MAX_ITER)
        .ok_or_else(|| Error::Internal("SVD did not converge".into()))?;
    Ok(svd.singular_values.as_slice().to_vec())
}

/// Largest singular value; 0 for empty shapes.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    match singular_values(m) {
        Ok(sv) => sv.into_iter().fold(0.0, f64::max),
        // Non-convergence is pathological at desk scale; fall back to the
        // Frobenius upper bound rather than panic inside a norm.
        Err(_) => m.norm(),
    }
}

/// Orthonormal basis of {x : Mx = 0}, rank decided on singular values.
///
/// The matrix is padded with zero rows up to square when it is wide, so the
/// SVD carries a complete set of right singular vectors.
pub fn null_space(m: &CMatrix, tol: Tolerance) -> Result<Subspace> {
    ensure_finite(m)?;
    let (rows, cols) = m.shape();
    if cols == 0 {
        return Ok(Subspace::zero(0));
    }
    if rows == 0 {
        return Ok(Subspace::full(cols));
    }
    let work = if rows >= cols {
        m.clone()
    } else {
        let mut padded = CMatrix::zeros(cols, cols);
        padded.view_mut((0, 0), (rows, cols)).copy_from(m);
        padded
    };
    let svd = work
        .try_svd(false, true, SVD_EPS, SVD_MAX_ITER)
        .ok_or_else(|| Error::Internal("SVD did not converge in null_space".into()))?;
    let sv = svd.singular_values;
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Internal("SVD missing right singular vectors".into()))?;
    let sigma_max = sv.iter().cloned().fold(0.0, f64::max);
    let thr = tol.threshold(sigma_max);
    // Rows of v_t are the adjoints of the right singular vectors.
    let kernel_cols: Vec<usize> = (0..sv.len()).filter(|&i| sv[i] <= thr).collect();
    let mut frame = CMatrix::zeros(cols, kernel_cols.len());
    for (out, &i) in kernel_cols.iter().enumerate() {
        for r in 0..cols {
            frame[(r, out)] = v_t[(i, r)].conj();
        }
    }
    Subspace::from_frame_canonical(frame)
}

/// Orthonormal basis of the column space, rank decided on singular values.
pub fn column_space(m: &CMatrix, tol: Tolerance) -> Result<Subspace> {
    ensure_finite(m)?;
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Ok(Subspace::zero(rows));
    }
    let svd = m
        .clone()
        .try_svd(true, false, SVD_EPS, SVD_MAX_ITER)
        .ok_or_else(|| Error::Internal("SVD did not converge in column_space".into()))?;
    let sv = svd.singular_values;
    let u = svd
        .u
        .ok_or_else(|| Error::Internal("SVD missing left singular vectors".into()))?;
    let sigma_max = sv.iter().cloned().fold(0.0, f64::max);
    let thr = tol.threshold(sigma_max);
    let keep: Vec<usize> = (0..sv.len()).filter(|&i| sv[i] > thr).collect();
    let mut frame = CMatrix::zeros(rows, keep.len());
    for (out, &i) in keep.iter().enumerate() {
        frame.set_column(out, &u.column(i));
    }
    Subspace::from_frame_canonical(frame)
}

/// Eigendecomposition of a Hermitian matrix: (ascending eigenvalues, unitary V).
pub fn hermitian_eigen(h: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    if h.nrows() != h.ncols() {
        return Err(Error::DimMismatch(format!(
            "hermitian_eigen needs a square matrix, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    if h.nrows() == 0 {
        return Ok((Vec::new(), CMatrix::zeros(0, 0)));
    }
    let se = h.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..se.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let vals: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vecs = CMatrix::zeros(h.nrows(), h.ncols());
    for (out, &i) in order.iter().enumerate() {
        vecs.set_column(out, &se.eigenvectors.column(i));
    }
    Ok((vals, vecs))
}

/// Unique PSD square root of a Hermitian PSD matrix, via eigendecomposition.
///
/// Eigenvalues below `-rel * |H|` are an error; eigenvalues in
/// `[-rel * |H|, 0)` are clamped to zero.
pub fn psd_sqrt(h: &CMatrix, tol: Tolerance) -> Result<CMatrix> {
    ensure_finite(h)?;
    if h.nrows() != h.ncols() {
        return Err(Error::DimMismatch(format!(
            "psd_sqrt needs a square matrix, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    if h.nrows() == 0 {
        return Ok(CMatrix::zeros(0, 0));
    }
    let scale = spectral_norm(h);
    let herm_dev = spectral_norm(&(h - h.adjoint()));
    let herm_thr = tol.threshold(scale);
    if herm_dev > herm_thr {
        return Err(Error::NotHermitian {
            residual: herm_dev,
            threshold: herm_thr,
        });
    }
    let herm = (h + h.adjoint()).scale(0.5);
    let (vals, vecs) = hermitian_eigen(&herm)?;
    let neg_thr = tol.rel * scale;
    let mut roots = Vec::with_capacity(vals.len());
    for &lambda in &vals {
        if lambda < -neg_thr {
            return Err(Error::NotPSD {
                eigenvalue: lambda,
                threshold: neg_thr,
            });
        }
        roots.push(Complex64::new(lambda.max(0.0).sqrt(), 0.0));
    }
    let d = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(roots));
    let r = &vecs * d * vecs.adjoint();
    // Hermitize: the product drifts off Hermitian at machine precision.
    Ok((&r + r.adjoint()).scale(0.5))
}

/// Orthonormal basis of S1 ∩ S2, computed as the null space of the stacked
/// projector complements [(I - P1); (I - P2)].
pub fn intersect(s1: &Subspace, s2: &Subspace, tol: Tolerance) -> Result<Subspace> {
    let d = s1.ambient_dim();
    if s2.ambient_dim() != d {
        return Err(Error::DimMismatch(format!(
            "intersect: ambient dims {} vs {}",
            d,
            s2.ambient_dim()
        )));
    }
    let eye = CMatrix::identity(d, d);
    let top = &eye - s1.projector();
    let bottom = &eye - s2.projector();
    let mut stacked = CMatrix::zeros(2 * d, d);
    stacked.view_mut((0, 0), (d, d)).copy_from(&top);
    stacked.view_mut((d, 0), (d, d)).copy_from(&bottom);
    null_space(&stacked, tol)
}

/// Orthogonal complement; dim(S) + dim(result) = ambient_dim exactly.
pub fn complement(s: &Subspace) -> Subspace {
    let d = s.ambient_dim();
    if s.dim() == 0 {
        return Subspace::full(d);
    }
    // The adjoint frame has singular values exactly {1,...,1,0,...,0}; the
    // default tolerance separates them cleanly.
    null_space(&s.frame().adjoint(), Tolerance::default())
        .expect("complement of a valid frame cannot fail")
}

/// Operator-norm distance between the orthogonal projectors of two subspaces.
///
/// 0 iff the subspaces are equal; 1 when dimensions differ or some direction
/// of one is orthogonal to the whole of the other.
pub fn principal_angle_distance(s1: &Subspace, s2: &Subspace) -> Result<f64> {
    if s1.ambient_dim() != s2.ambient_dim() {
        return Err(Error::DimMismatch(format!(
            "principal_angle_distance: ambient dims {} vs {}",
            s1.ambient_dim(),
            s2.ambient_dim()
        )));
    }
    let diff = s1.projector() - s2.projector();
    Ok(spectral_norm(&diff))
}

/// Residual of the containment inner ⊆ outer: ‖(I - P_outer) B_inner‖.
pub fn containment_residual(inner: &Subspace, outer: &Subspace) -> Result<f64> {
    if inner.ambient_dim() != outer.ambient_dim() {
        return Err(Error::DimMismatch(format!(
            "containment_residual: ambient dims {} vs {}",
            inner.ambient_dim(),
            outer.ambient_dim()
        )));
    }
    if inner.dim() == 0 {
        return Ok(0.0);
    }
    let b = inner.frame();
    let proj = outer.frame() * (outer.frame().adjoint() * b);
    Ok(spectral_norm(&(b - proj)))
}

/// Compression B* T B of T to the subspace, in the frame's basis (k x k).
/// When S reduces T this is the matrix of the restriction.
pub fn compress(t: &CMatrix, s: &Subspace) -> Result<CMatrix> {
    if t.nrows() != t.ncols() || t.nrows() != s.ambient_dim() {
        return Err(Error::DimMismatch(format!(
            "compress: operator {}x{} vs ambient {}",
            t.nrows(),
            t.ncols(),
            s.ambient_dim()
        )));
    }
    let b = s.frame();
    Ok(b.adjoint() * (t * b))
}

/// max(‖(I-P) T P‖, ‖(I-P) T* P‖): zero iff S reduces T exactly.
pub fn reduction_residual(t: &CMatrix, s: &Subspace) -> Result<f64> {
    if t.nrows() != t.ncols() || t.nrows() != s.ambient_dim() {
        return Err(Error::DimMismatch(format!(
            "reduction_residual: operator {}x{} vs ambient {}",
            t.nrows(),
            t.ncols(),
            s.ambient_dim()
        )));
    }
    if s.dim() == 0 {
        return Ok(0.0);
    }
    let b = s.frame();
    let escape = |m: CMatrix| -> f64 {
        let proj = b * (b.adjoint() * &m);
        spectral_norm(&(m - proj))
    };
    let fwd = escape(t * b);
    let adj = escape(t.adjoint() * b);
    Ok(fwd.max(adj))
}

/// Makes the phase of each column's largest-magnitude entry real positive.
/// Emitted frames become deterministic up to entry ordering of ties.
pub fn fix_column_phases(frame: &mut CMatrix) {
    for j in 0..frame.ncols() {
        let mut best = 0usize;
        let mut best_mag = 0.0f64;
        for i in 0..frame.nrows() {
            let mag = frame[(i, j)].norm();
            if mag > best_mag {
                best_mag = mag;
                best = i;
            }
        }
        if best_mag > 0.0 {
            let phase = frame[(best, j)] / best_mag;
            let fix = phase.conj();
            for i in 0..frame.nrows() {
                frame[(i, j)] *= fix;
            }
        }
    }
}

/// d x d identity.
pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}
