//! Small dense helpers for Hermitian matrices over `f64` or `C64`.

use nalgebra::{ComplexField, DMatrix, DVector};

/// Scalar field used by the solver: real or complex double precision.
pub trait Field: ComplexField<RealField = f64> + Copy {}
impl<T: ComplexField<RealField = f64> + Copy> Field for T {}

pub fn hermitize<T: Field>(m: &DMatrix<T>) -> DMatrix<T> {
    (m + m.adjoint()).scale(0.5)
}

/// `Re Tr(A B)`.
pub fn trace_re<T: Field>(a: &DMatrix<T>, b: &DMatrix<T>) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for k in 0..n {
            s += (a[(i, k)] * b[(k, i)]).real();
        }
    }
    s
}

pub fn frob<T: Field>(m: &DMatrix<T>) -> f64 {
    m.iter().map(|z| z.modulus_squared()).sum::<f64>().sqrt()
}

/// Eigenvalues (ascending) and matching eigenvectors of a Hermitian matrix.
pub fn eigh<T: Field>(m: &DMatrix<T>) -> (Vec<f64>, DMatrix<T>) {
    let e = hermitize(m).symmetric_eigen();
    let mut idx: Vec<usize> = (0..e.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| e.eigenvalues[a].total_cmp(&e.eigenvalues[b]).then(a.cmp(&b)));
    let vals = idx.iter().map(|&i| e.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(m.nrows(), idx.len(), |r, c| e.eigenvectors[(r, idx[c])]);
    (vals, vecs)
}

/// Leading eigenpair. Ties within a relative `1e-10` go to the
/// eigenvector the solver reports first; the flag reports that a tie
/// occurred.
#[derive(Debug, Clone)]
pub struct Leading<T: Field> {
    pub value: f64,
    pub vector: DVector<T>,
    pub tie: bool,
}

pub fn leading_eig<T: Field>(m: &DMatrix<T>) -> Leading<T> {
    let e = hermitize(m).symmetric_eigen();
    let vals = &e.eigenvalues;
    let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-10 * max.abs().max(1e-300);
    let mut pick = None;
    let mut count = 0;
    for (i, &v) in vals.iter().enumerate() {
        if (max - v).abs() <= tol {
            count += 1;
            if pick.is_none() {
                pick = Some(i);
            }
        }
    }
    let i = pick.unwrap_or(0);
    Leading {
        value: vals[i],
        vector: e.eigenvectors.column(i).into_owned(),
        tie: count > 1,
    }
}

/// Nuclear minus spectral norm of a Hermitian PSD matrix, i.e. the sum
/// of all but the largest eigenvalue.
pub fn rank_gap<T: Field>(m: &DMatrix<T>) -> f64 {
    let (vals, _) = eigh(m);
    let nuc: f64 = vals.iter().map(|v| v.abs()).sum();
    let spec = vals.iter().map(|v| v.abs()).fold(0.0, f64::max);
    nuc - spec
}

pub fn min_eig<T: Field>(m: &DMatrix<T>) -> f64 {
    hermitize(m).symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Projection onto the PSD cone in the Frobenius norm.
pub fn psd_part<T: Field>(m: &DMatrix<T>) -> DMatrix<T> {
    let (vals, vecs) = eigh(m);
    let n = m.nrows();
    let mut out = DMatrix::<T>::zeros(n, n);
    for (k, &l) in vals.iter().enumerate() {
        if l > 0.0 {
            let v = vecs.column(k);
            out += (v * v.adjoint()).scale(l);
        }
    }
    out
}
