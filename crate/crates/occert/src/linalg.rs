//! Dense helpers: orthonormal nullspaces, an elimination rank oracle, and the
//! symmetric-pencil eigensolve used by the cone tests.

use nalgebra::{DMatrix, DVector};

/// Orthonormal basis of the nullspace of `k` (rows = constraints).
///
/// Rows are orthonormalized by modified Gram–Schmidt with one
/// re-orthogonalization pass; the nullspace basis is read off the spectral
/// decomposition of the complementary projector, which is well conditioned
/// for any constraint rank.
pub fn orthonormal_nullspace(k: &DMatrix<f64>) -> DMatrix<f64> {
    let m = k.ncols();
    let u = orthonormal_rows(k);
    let mut proj = DMatrix::identity(m, m);
    for row in u.row_iter() {
        let rt = row.transpose();
        proj -= &rt * row;
    }
    proj = (&proj + proj.transpose()) * 0.5;
    let eig = proj.symmetric_eigen();
    let mut cols: Vec<(f64, DVector<f64>)> = Vec::new();
    for (i, &val) in eig.eigenvalues.iter().enumerate() {
        if val > 0.5 {
            cols.push((val, eig.eigenvectors.column(i).into_owned()));
        }
    }
    let mut basis = DMatrix::zeros(m, cols.len());
    for (j, (_, c)) in cols.iter().enumerate() {
        basis.set_column(j, c);
    }
    basis
}

/// Orthonormalized independent rows of `k` (numerical rank = row count).
pub fn orthonormal_rows(k: &DMatrix<f64>) -> DMatrix<f64> {
    let mut rows: Vec<DVector<f64>> = Vec::new();
    for r in k.row_iter() {
        let mut v = r.transpose();
        let orig = v.norm();
        if orig <= 1e-300 {
            continue;
        }
        for _ in 0..2 {
            for u in &rows {
                let c = u.dot(&v);
                v -= u * c;
            }
        }
        if v.norm() > 1e-10 * orig.max(1.0) {
            let n = v.norm();
            rows.push(v / n);
        }
    }
    let mut out = DMatrix::zeros(rows.len(), k.ncols());
    for (i, r) in rows.iter().enumerate() {
        out.set_row(i, &r.transpose());
    }
    out
}

/// Independent rank computation by Gaussian elimination with partial
/// pivoting (the cross-check oracle for the cone dimension).
pub fn rank_by_elimination(k: &DMatrix<f64>) -> usize {
    let mut a = k.clone();
    let (rows, cols) = a.shape();
    let scale = a.amax().max(1e-300);
    let tol = 1e-10 * scale;
    let mut rank = 0;
    let mut col = 0;
    while rank < rows && col < cols {
        let mut pivot = rank;
        for r in rank..rows {
            if a[(r, col)].abs() > a[(pivot, col)].abs() {
                pivot = r;
            }
        }
        if a[(pivot, col)].abs() <= tol {
            col += 1;
            continue;
        }
        a.swap_rows(rank, pivot);
        for r in (rank + 1)..rows {
            let f = a[(r, col)] / a[(rank, col)];
            for c in col..cols {
                a[(r, c)] -= f * a[(rank, c)];
            }
        }
        rank += 1;
        col += 1;
    }
    rank
}

/// Eigenvalues (ascending) and eigenvectors of the symmetric pencil
/// `Ω v = λ G v` with `G` positive definite, solved by Cholesky reduction.
pub fn generalized_symmetric_eigen(omega: &DMatrix<f64>, gram: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let dim = omega.nrows();
    assert_eq!(omega.shape(), gram.shape());
    if dim == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let chol = gram
        .clone()
        .cholesky()
        .expect("gram matrix must be positive definite on the cone basis");
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .expect("triangular factor invertible");
    let reduced = &linv * omega * linv.transpose();
    let sym = (&reduced + reduced.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let mut vals = Vec::with_capacity(dim);
    let linv_t = linv.transpose();
    let mut vecs = DMatrix::zeros(dim, dim);
    for (j, &idx) in order.iter().enumerate() {
        vals.push(eig.eigenvalues[idx]);
        let v = &linv_t * eig.eigenvectors.column(idx);
        vecs.set_column(j, &v);
    }
    (vals, vecs)
}
