//! Small dense linear-algebra helpers shared by the dynamics modules.

use nalgebra::{Complex, DMatrix, DVector, SMatrix, SVector};

pub type C64 = Complex<f64>;

#[inline]
pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Induced 1-norm (maximum absolute column sum).
pub fn norm1<const N: usize>(a: &SMatrix<C64, N, N>) -> f64 {
    (0..N)
        .map(|j| (0..N).map(|i| a[(i, j)].norm_sqr().sqrt()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Dense product of small fixed-size complex matrices. Written out on
/// plain arrays because the generic product is several times slower at
/// these sizes.
#[inline]
pub fn matmul<const N: usize>(a: &SMatrix<C64, N, N>, b: &SMatrix<C64, N, N>) -> SMatrix<C64, N, N> {
    let (a, b) = (a.as_slice(), b.as_slice());
    let mut r = SMatrix::<C64, N, N>::zeros();
    let rs = r.as_mut_slice();
    // Column-major: element (i, j) lives at j * N + i.
    for j in 0..N {
        for k in 0..N {
            let bkj = b[j * N + k];
            for i in 0..N {
                let aik = a[k * N + i];
                let o = &mut rs[j * N + i];
                o.re += aik.re * bkj.re - aik.im * bkj.im;
                o.im += aik.re * bkj.im + aik.im * bkj.re;
            }
        }
    }
    r
}

/// Matrix-vector product counterpart of [`matmul`].
#[inline]
pub fn matvec<const N: usize>(a: &SMatrix<C64, N, N>, x: &SVector<C64, N>) -> SVector<C64, N> {
    let a = a.as_slice();
    let mut r = SVector::<C64, N>::zeros();
    for k in 0..N {
        let xk = x[k];
        for i in 0..N {
            let aik = a[k * N + i];
            r[i].re += aik.re * xk.re - aik.im * xk.im;
            r[i].im += aik.re * xk.im + aik.im * xk.re;
        }
    }
    r
}

/// exp(A) for a small fixed-size complex matrix by scaling and squaring
/// with a degree-12 Taylor polynomial (truncation below 1e-17 at ‖A/2ˢ‖₁ ≤ 1/4).
pub fn expm_small<const N: usize>(a: &SMatrix<C64, N, N>) -> SMatrix<C64, N, N> {
    let norm = norm1(a);
    let s = if norm > 0.25 { (norm / 0.25).log2().ceil() as i32 } else { 0 };
    let b = a.scale(0.5f64.powi(s));
    // Degree-12 Taylor polynomial by Paterson-Stockmeyer in blocks of A⁴.
    let eye = SMatrix::<C64, N, N>::identity();
    let b2 = matmul(&b, &b);
    let b3 = matmul(&b2, &b);
    let b4 = matmul(&b2, &b2);
    let mut inv_fact = [1.0f64; 13];
    for k in 1..13 {
        inv_fact[k] = inv_fact[k - 1] / k as f64;
    }
    let block = |j: usize| eye.scale(inv_fact[4 * j]) + b.scale(inv_fact[4 * j + 1]) + b2.scale(inv_fact[4 * j + 2]) + b3.scale(inv_fact[4 * j + 3]);
    let top = block(2) + b4.scale(inv_fact[12]);
    let mut r = block(0) + matmul(&b4, &(block(1) + matmul(&b4, &top)));
    for _ in 0..s {
        r = matmul(&r, &r);
    }
    r
}

/// Unitary propagator exp(−i H dt/ħ) for a small Hermitian H (energies in
/// μeV, dt in ns).
pub fn propagator<const N: usize>(h: &SMatrix<C64, N, N>, dt: f64) -> SMatrix<C64, N, N> {
    let a = h.map(|z| z * c(0.0, -dt / crate::units::HBAR));
    expm_small(&a)
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted
/// ascending and a deterministic phase on every eigenvector: the first
/// component whose modulus exceeds 1e-8 of the column's largest is made
/// real and positive.
pub fn hermitian_eigh(h: &DMatrix<C64>) -> (DVector<f64>, DMatrix<C64>) {
    let n = h.nrows();
    let eig = nalgebra::SymmetricEigen::new(h.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut vectors = DMatrix::<C64>::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(k);
        let vmax = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let pivot = v.iter().find(|z| z.norm() > 1e-8 * vmax).copied().unwrap_or(c(1.0, 0.0));
        let phase = pivot.conj() / pivot.norm();
        for i in 0..n {
            vectors[(i, col)] = v[i] * phase;
        }
    }
    (values, vectors)
}

/// Largest absolute entry.
pub fn max_abs(a: &DMatrix<C64>) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// ‖A − A†‖_∞ (entrywise).
pub fn hermiticity_defect(a: &DMatrix<C64>) -> f64 {
    max_abs(&(a - a.adjoint()))
}
