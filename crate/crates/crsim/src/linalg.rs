//! Small dense linear-algebra helpers shared across modules.

use nalgebra::{Complex, DMatrix, DVector};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type RMatrix = DMatrix<f64>;

pub const C_ZERO: C64 = Complex::new(0.0, 0.0);
pub const C_ONE: C64 = Complex::new(1.0, 0.0);
pub const C_I: C64 = Complex::new(0.0, 1.0);

/// Max absolute value over all entries.
pub fn max_abs_c(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_r(m: &RMatrix) -> f64 {
    m.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

/// Max-norm of `m^H m - I`.
pub fn unitarity_defect(m: &CMatrix) -> f64 {
    let n = m.ncols();
    let mut g = m.adjoint() * m;
    for i in 0..n {
        g[(i, i)] -= C_ONE;
    }
    max_abs_c(&g)
}

/// Max-norm of `m - m^H`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    max_abs_c(&(m - m.adjoint()))
}

/// Promote a real matrix to complex.
pub fn to_complex(m: &RMatrix) -> CMatrix {
    CMatrix::from_iterator(m.nrows(), m.ncols(), m.iter().map(|&x| C64::new(x, 0.0)))
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

/// Eigendecomposition of a complex Hermitian matrix; eigenvalues ascending.
pub fn eigh_c(m: &CMatrix) -> (DVector<f64>, CMatrix) {
    let se = m.clone().symmetric_eigen();
    sort_eigen_c(se.eigenvalues, se.eigenvectors)
}

fn sort_eigen_c(vals: DVector<f64>, vecs: CMatrix) -> (DVector<f64>, CMatrix) {
    let n = vals.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap());
    let sorted_vals = DVector::from_iterator(n, idx.iter().map(|&i| vals[i]));
    let mut sorted_vecs = CMatrix::zeros(n, n);
    for (jn, &jo) in idx.iter().enumerate() {
        sorted_vecs.set_column(jn, &vecs.column(jo));
    }
    (sorted_vals, sorted_vecs)
}

/// Eigendecomposition of a real symmetric matrix; eigenvalues ascending.
pub fn eigh_r(m: &RMatrix) -> (DVector<f64>, RMatrix) {
    let se = m.clone().symmetric_eigen();
    let (vals, vecs) = (se.eigenvalues, se.eigenvectors);
    let n = vals.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap());
    let sorted_vals = DVector::from_iterator(n, idx.iter().map(|&i| vals[i]));
    let mut sorted_vecs = RMatrix::zeros(n, n);
    for (jn, &jo) in idx.iter().enumerate() {
        sorted_vecs.set_column(jn, &vecs.column(jo));
    }
    (sorted_vals, sorted_vecs)
}

/// Unitary polar factor of a square complex matrix, with its singular values.
///
/// Returns `(u v^H, sigma)` from the SVD `m = u diag(sigma) v^H`; the polar
/// factor is the unitary closest to `m` in Frobenius (and trace-overlap)
/// sense.
pub fn polar_unitary(m: &CMatrix) -> (CMatrix, DVector<f64>) {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("svd requested u");
    let vt = svd.v_t.expect("svd requested v_t");
    (u * vt, svd.singular_values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigh_c_reconstructs() {
        let n = 8;
        let mut a = CMatrix::zeros(n, n);
        let mut s = 11u64;
        let mut rng = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 33) as f64 / (1u64 << 31) as f64 - 1.0
        };
        for i in 0..n {
            for j in 0..=i {
                let v = if i == j {
                    C64::new(rng(), 0.0)
                } else {
                    C64::new(rng(), rng())
                };
                a[(i, j)] = v;
                a[(j, i)] = v.conj();
            }
        }
        let (vals, vecs) = eigh_c(&a);
        let d = CMatrix::from_diagonal(&vals.map(|x| C64::new(x, 0.0)));
        let recon = &vecs * d * vecs.adjoint();
        assert!(max_abs_c(&(&a - recon)) < 1e-12);
        assert!(unitarity_defect(&vecs) < 1e-12);
        for k in 1..n {
            assert!(vals[k] >= vals[k - 1]);
        }
    }

    #[test]
    fn polar_of_unitary_is_identity_map() {
        let th = 0.7f64;
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(th.cos(), 0.0),
                C64::new(0.0, -th.sin()),
                C64::new(0.0, -th.sin()),
                C64::new(th.cos(), 0.0),
            ],
        );
        let (u, s) = polar_unitary(&m);
        assert!(max_abs_c(&(&u - &m)) < 1e-14);
        assert!((s[0] - 1.0).abs() < 1e-14 && (s[1] - 1.0).abs() < 1e-14);
    }
}
