//! Small dense linear-algebra helpers shared across modules: matrix
//! exponential, Gauss-Hermite quadrature rules, and eigenvalue-multiset
//! comparison for pole-placement verification.

use nalgebra::{Complex, DMatrix, DVector};

/// Matrix exponential by scaling-and-squaring with a Taylor core.
///
/// The scaling step brings the norm below 0.5, where an 18-term Taylor series
/// reaches f64 roundoff. Intended for the small (3x3..5x5) matrices used in
/// observer discretization; callers should balance badly scaled inputs first.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(a.nrows(), a.ncols(), "expm requires a square matrix");
    let n = a.nrows();
    let norm = a.iter().map(|v| v.abs()).fold(0.0_f64, f64::max) * n as f64;
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a / 2f64.powi(squarings as i32);

    let mut result = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for k in 1..=18 {
        term = (&term * &scaled) / k as f64;
        result += &term;
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Nodes and weights of the n-point Gauss-Hermite rule (weight e^{-t^2}),
/// computed via the Golub-Welsch eigenvalue method.
///
/// For X ~ N(mu, sigma^2): E[f(X)] = (1/sqrt(pi)) * sum_k w_k f(mu + sqrt(2) sigma t_k).
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut jacobi = DMatrix::zeros(n, n);
    for k in 1..n {
        let b = (k as f64 / 2.0).sqrt();
        jacobi[(k - 1, k)] = b;
        jacobi[(k, k - 1)] = b;
    }
    let eig = nalgebra::SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let node = eig.eigenvalues[i];
            let v0 = eig.eigenvectors[(0, i)];
            (node, std::f64::consts::PI.sqrt() * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Maximum mismatch between two eigenvalue multisets, measured through their
/// elementary symmetric polynomials.
///
/// Repeated (defective) eigenvalues split by O(eps^(1/m)) under any numeric
/// eigensolver, so comparing roots directly cannot reach tight tolerances.
/// The symmetric polynomials recombine the splitting and are well conditioned;
/// they agree iff the multisets agree. Returns max_k |e_k(a) - e_k(b)| /
/// max(1, |e_k(b)|).
pub fn eigen_multiset_mismatch(actual: &[Complex<f64>], target: &[Complex<f64>]) -> f64 {
    assert_eq!(actual.len(), target.len());
    let ea = elementary_symmetric(actual);
    let eb = elementary_symmetric(target);
    ea.iter()
        .zip(&eb)
        .map(|(a, b)| (a - b).norm() / b.norm().max(1.0))
        .fold(0.0, f64::max)
}

fn elementary_symmetric(roots: &[Complex<f64>]) -> Vec<Complex<f64>> {
    // Coefficients of prod (x - r_i), discarding the leading 1.
    let mut coeffs = vec![Complex::new(1.0, 0.0)];
    for &r in roots {
        let mut next = vec![Complex::new(0.0, 0.0); coeffs.len() + 1];
        for (i, &c) in coeffs.iter().enumerate() {
            next[i] += c;
            next[i + 1] -= c * r;
        }
        coeffs = next;
    }
    coeffs.remove(0);
    coeffs
}

/// Solve a dense linear system by LU with partial pivoting. Used by test
/// oracles and the DC-gain check; not a performance path.
pub fn solve_dense(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    a.clone().lu().solve(b)
}
