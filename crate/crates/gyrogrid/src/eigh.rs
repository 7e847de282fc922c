//! Dense Hermitian eigensolver backed by LAPACK's divide-and-conquer
//! routine `zheevd` from the system OpenBLAS.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::C64;

extern "C" {
    fn zheevd_(
        jobz: *const u8,
        uplo: *const u8,
        n: *const i32,
        a: *mut C64,
        lda: *const i32,
        w: *mut f64,
        work: *mut C64,
        lwork: *const i32,
        rwork: *mut f64,
        lrwork: *const i32,
        iwork: *mut i32,
        liwork: *const i32,
        info: *mut i32,
    );
}

/// Eigenvalues (ascending) and eigenvectors (columns of the returned matrix)
/// of a Hermitian matrix. Only the lower triangle of `h` is referenced.
pub fn eigh(h: &Array2<C64>) -> Result<(Vec<f64>, Array2<C64>)> {
    let n = h.nrows();
    if h.ncols() != n {
        return Err(Error::InvalidParameter(format!(
            "eigh needs a square matrix, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    if n == 0 {
        return Ok((Vec::new(), Array2::zeros((0, 0))));
    }

    // LAPACK is column-major; feeding the row-major buffer hands it H^T = H*,
    // whose eigenvectors are the conjugates of those of H.
    let mut a: Vec<C64> = Vec::with_capacity(n * n);
    for col in 0..n {
        for row in 0..n {
            a.push(h[[row, col]].conj());
        }
    }

    let nn = n as i32;
    let mut w = vec![0.0f64; n];
    let mut info: i32 = 0;

    // Workspace query.
    let mut work_query = [C64::new(0.0, 0.0)];
    let mut rwork_query = [0.0f64];
    let mut iwork_query = [0i32];
    let minus_one: i32 = -1;
    unsafe {
        zheevd_(
            b"V".as_ptr(),
            b"L".as_ptr(),
            &nn,
            a.as_mut_ptr(),
            &nn,
            w.as_mut_ptr(),
            work_query.as_mut_ptr(),
            &minus_one,
            rwork_query.as_mut_ptr(),
            &minus_one,
            iwork_query.as_mut_ptr(),
            &minus_one,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Eigensolver(format!("zheevd workspace query failed (info = {info})")));
    }

    let lwork = work_query[0].re as i32;
    let lrwork = rwork_query[0] as i32;
    let liwork = iwork_query[0];
    let mut work = vec![C64::new(0.0, 0.0); lwork.max(1) as usize];
    let mut rwork = vec![0.0f64; lrwork.max(1) as usize];
    let mut iwork = vec![0i32; liwork.max(1) as usize];

    unsafe {
        zheevd_(
            b"V".as_ptr(),
            b"L".as_ptr(),
            &nn,
            a.as_mut_ptr(),
            &nn,
            w.as_mut_ptr(),
            work.as_mut_ptr(),
            &lwork,
            rwork.as_mut_ptr(),
            &lrwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Eigensolver(format!("zheevd failed to converge (info = {info})")));
    }

    // Undo the implicit conjugation; `a` holds eigenvectors column-major.
    let mut vectors = Array2::zeros((n, n));
    for col in 0..n {
        for row in 0..n {
            vectors[[row, col]] = a[col * n + row].conj();
        }
    }
    Ok((w, vectors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn diagonal_matrix_sorted() {
        let h = array![
            [C64::new(3.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)],
            [C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
            [C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(2.0, 0.0)],
        ];
        let (w, _) = eigh(&h).unwrap();
        assert!((w[0] - 1.0).abs() < 1e-14);
        assert!((w[1] - 2.0).abs() < 1e-14);
        assert!((w[2] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn complex_pauli_y_eigensystem() {
        let h = array![
            [C64::new(0.0, 0.0), C64::new(0.0, -1.0)],
            [C64::new(0.0, 1.0), C64::new(0.0, 0.0)],
        ];
        let (w, v) = eigh(&h).unwrap();
        assert!((w[0] + 1.0).abs() < 1e-14);
        assert!((w[1] - 1.0).abs() < 1e-14);
        // Residual check H v = λ v.
        for (k, &lam) in w.iter().enumerate() {
            let col = v.column(k);
            let hv = h.dot(&col);
            let defect: f64 = hv
                .iter()
                .zip(col.iter())
                .map(|(a, b)| (a - b * lam).norm())
                .fold(0.0, f64::max);
            assert!(defect < 1e-14, "residual {defect}");
        }
    }
}
