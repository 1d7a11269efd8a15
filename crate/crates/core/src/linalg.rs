//! Small dense helpers: symmetric eigenvalues by cyclic Jacobi, singular
//! values through the Gram matrix, determinants by cofactor expansion.
//!
//! Everything here targets the desk-scale matrices of this toolkit
//! (n <= 6); clarity over asymptotics.

use nalgebra::DMatrix;

/// Eigenvalues of a symmetric matrix, ascending. 2x2 is closed-form; larger
/// sizes run cyclic Jacobi sweeps until the off-diagonal norm drops below
/// 1e-12 * scale.
pub fn symmetric_eigenvalues(s: &DMatrix<f64>) -> Vec<f64> {
    let n = s.nrows();
    assert_eq!(n, s.ncols());
    if n == 0 {
        return vec![];
    }
    if n == 1 {
        return vec![s[(0, 0)]];
    }
    if n == 2 {
        let (a, b, c) = (s[(0, 0)], s[(0, 1)], s[(1, 1)]);
        let tr = a + c;
        let det = a * c - b * b;
        let disc = ((a - c) * (a - c) + 4.0 * b * b).sqrt();
        // take the larger-magnitude root from the quadratic formula and
        // recover the other from the product, avoiding the cancellation
        // that wrecks the small eigenvalue of ill-conditioned Gram matrices
        let big = if tr >= 0.0 { (tr + disc) / 2.0 } else { (tr - disc) / 2.0 };
        let small = if big != 0.0 { det / big } else { 0.0 };
        let mut l = [small, big];
        if l[0] > l[1] {
            l.swap(0, 1);
        }
        return l.to_vec();
    }
    let mut a = s.clone();
    let scale = a.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1e-300);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        if off.sqrt() <= 1e-12 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let cos = 1.0 / (t * t + 1.0).sqrt();
                let sin = t * cos;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = cos * akp - sin * akq;
                    a[(k, q)] = sin * akp + cos * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = cos * apk - sin * aqk;
                    a[(q, k)] = sin * apk + cos * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    eig.sort_by(|x, y| x.partial_cmp(y).unwrap());
    eig
}

/// Smallest singular value: sqrt of the least eigenvalue of A^T A.
/// This is the quantity written `[A]` in the global-inversion literature,
/// inf over unit vectors of ||A u||.
pub fn sigma_min(a: &DMatrix<f64>) -> f64 {
    let gram = a.transpose() * a;
    let l1 = symmetric_eigenvalues(&gram)[0];
    l1.max(0.0).sqrt()
}

/// Largest singular value (spectral norm).
pub fn sigma_max(a: &DMatrix<f64>) -> f64 {
    let gram = a.transpose() * a;
    let eig = symmetric_eigenvalues(&gram);
    eig[eig.len() - 1].max(0.0).sqrt()
}

/// Determinant by cofactor expansion along the first row.
pub fn determinant(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    match n {
        0 => 1.0,
        1 => a[(0, 0)],
        2 => a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)],
        _ => {
            let mut det = 0.0;
            for col in 0..n {
                let minor = minor_matrix(a, 0, col);
                let sign = if col % 2 == 0 { 1.0 } else { -1.0 };
                det += sign * a[(0, col)] * determinant(&minor);
            }
            det
        }
    }
}

fn minor_matrix(a: &DMatrix<f64>, row: usize, col: usize) -> DMatrix<f64> {
    let n = a.nrows();
    DMatrix::from_fn(n - 1, n - 1, |r, c| {
        let rr = if r < row { r } else { r + 1 };
        let cc = if c < col { c } else { c + 1 };
        a[(rr, cc)]
    })
}
