//! Dense complex linear algebra and power allocation.
//!
//! Matrices are `nalgebra` dense matrices over `Complex64`. The SVD itself
//! is delegated to `faer`; this module adds the
//! contracts the simulator relies on (finite input, descending order,
//! relative-threshold rank, full null-space bases) and an exact
//! water-filling solver.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

/// Relative rank threshold used throughout the crate.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Thin singular value decomposition `A = U diag(S) V^H`.
#[derive(Debug, Clone)]
pub struct SvdResult {
    /// `rows × min(rows, cols)`, orthonormal columns.
    pub left_vectors: ComplexMatrix,
    /// Non-negative, sorted in descending order.
    pub singular_values: Vec<f64>,
    /// `cols × min(rows, cols)`, orthonormal columns.
    pub right_vectors: ComplexMatrix,
}

impl SvdResult {
    pub fn largest(&self) -> f64 {
        self.singular_values.first().copied().unwrap_or(0.0)
    }

    /// Left and right singular vectors of the largest singular value.
    pub fn top_pair(&self) -> (ComplexVector, f64, ComplexVector) {
        (self.left_vectors.column(0).into_owned(), self.largest(), self.right_vectors.column(0).into_owned())
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        let k = self.singular_values.len();
        let mut scaled = self.left_vectors.clone();
        for j in 0..k {
            let s = self.singular_values[j];
            scaled.column_mut(j).iter_mut().for_each(|z| *z *= s);
        }
        scaled * self.right_vectors.adjoint()
    }
}

fn check_finite(a: &ComplexMatrix) -> Result<()> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(Error::InvalidInput("empty matrix".into()));
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    Ok(())
}

pub fn svd(a: &ComplexMatrix) -> Result<SvdResult> {
    check_finite(a)?;
    let (rows, cols) = a.shape();
    let m = faer::Mat::<faer::c64>::from_fn(rows, cols, |i, j| {
        let z = a[(i, j)];
        faer::c64::new(z.re, z.im)
    });
    let d = m.thin_svd().map_err(|e| Error::Internal(format!("SVD failed to converge: {e:?}")))?;
    let convert = |f: faer::MatRef<'_, faer::c64>| {
        ComplexMatrix::from_fn(f.nrows(), f.ncols(), |i, j| {
            let z = f[(i, j)];
            Complex64::new(z.re, z.im)
        })
    };
    let s = d.S().column_vector();
    Ok(SvdResult {
        left_vectors: convert(d.U()),
        singular_values: (0..s.nrows()).map(|i| s[i].re).collect(),
        right_vectors: convert(d.V()),
    })
}

/// Number of singular values above `tol` times the largest one.
pub fn rank(a: &ComplexMatrix, tol: f64) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    match svd(a) {
        Ok(d) => rank_of(&d.singular_values, tol),
        Err(_) => 0,
    }
}

pub(crate) fn rank_of(values: &[f64], tol: f64) -> usize {
    let top = values.first().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return 0;
    }
    values.iter().filter(|&&s| s > tol * top).count()
}

/// Orthonormal basis (`cols × (cols − rank)`) of the kernel of `a`.
///
/// The row space is taken from the thin SVD; its orthogonal complement is
/// completed with a Householder QR of `[V_r | I]`, whose trailing columns are
/// exactly orthogonal to the leading `rank` ones.
pub fn null_space_basis(a: &ComplexMatrix, tol: f64) -> Result<ComplexMatrix> {
    check_finite(a)?;
    let n = a.ncols();
    let d = svd(a)?;
    let r = rank_of(&d.singular_values, tol);
    if r == 0 {
        return Ok(ComplexMatrix::identity(n, n));
    }
    if r == n {
        return Ok(ComplexMatrix::zeros(n, 0));
    }
    let mut aug = ComplexMatrix::zeros(n, r + n);
    aug.view_mut((0, 0), (n, r)).copy_from(&d.right_vectors.columns(0, r));
    aug.view_mut((0, r), (n, n)).copy_from(&ComplexMatrix::identity(n, n));
    let q = aug.qr().q();
    Ok(q.columns(r, n - r).into_owned())
}

/// Orthogonal projector onto the complement of the row space of `a`,
/// applied from the right: returns `m · (I − V_r V_r^H)`.
pub fn project_out_row_space(m: &ComplexMatrix, a: &ComplexMatrix, tol: f64) -> Result<ComplexMatrix> {
    let d = svd(a)?;
    let r = rank_of(&d.singular_values, tol);
    if r == 0 {
        return Ok(m.clone());
    }
    let vr = d.right_vectors.columns(0, r);
    Ok(m - (m * vr) * vr.adjoint())
}

/// Solves `a x = b` for Hermitian positive definite `a`.
pub fn solve_hpd(a: &ComplexMatrix, b: &ComplexVector) -> Result<ComplexVector> {
    if let Some(ch) = a.clone().cholesky() {
        return Ok(ch.solve(b));
    }
    a.clone().lu().solve(b).ok_or_else(|| Error::Degenerate("singular system matrix".into()))
}

/// `x^H y`.
pub fn inner(x: &ComplexVector, y: &ComplexVector) -> Complex64 {
    x.dotc(y)
}

/// Unit-norm copy of `v`; a zero vector is returned unchanged.
pub fn normalized(v: &ComplexVector) -> ComplexVector {
    let n = v.norm();
    if n > 0.0 {
        v / Complex64::new(n, 0.0)
    } else {
        v.clone()
    }
}

/// Capacity-maximising power allocation over parallel channels with
/// gain-to-noise ratios `gains` and a total budget.
///
/// Inverse gains are sorted and the active set grown until the common water
/// level no longer exceeds the next inverse gain.
pub fn water_fill(gains: &[f64], total_power: f64) -> Result<Vec<f64>> {
    if !(total_power > 0.0) || !total_power.is_finite() {
        return Err(Error::InvalidInput(format!("total power must be positive, got {total_power}")));
    }
    if gains.iter().any(|g| !g.is_finite() || *g < 0.0) {
        return Err(Error::InvalidInput("gains must be finite and non-negative".into()));
    }
    let mut order: Vec<usize> = (0..gains.len()).filter(|&i| gains[i] > 0.0).collect();
    if order.is_empty() {
        return Err(Error::Degenerate("all channel gains are zero".into()));
    }
    order.sort_by(|&a, &b| gains[b].total_cmp(&gains[a]));
    let inv: Vec<f64> = order.iter().map(|&i| 1.0 / gains[i]).collect();

    let mut level = 0.0;
    let mut sum_inv = 0.0;
    let mut active = 0;
    for (j, &x) in inv.iter().enumerate() {
        let candidate = (total_power + sum_inv + x) / (j + 1) as f64;
        if candidate <= x {
            break;
        }
        sum_inv += x;
        active = j + 1;
        level = candidate;
    }

    let mut powers = vec![0.0; gains.len()];
    for &i in order.iter().take(active) {
        powers[i] = (level - 1.0 / gains[i]).max(0.0);
    }
    Ok(powers)
}

/// Builds a matrix from row-major `(re, im)` pairs.
pub fn from_rows(rows: usize, cols: usize, entries: &[(f64, f64)]) -> ComplexMatrix {
    assert_eq!(entries.len(), rows * cols);
    ComplexMatrix::from_fn(rows, cols, |i, j| {
        let (re, im) = entries[i * cols + j];
        Complex64::new(re, im)
    })
}
