//! Small dense complex linear-algebra helpers shared by every module.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Largest entry magnitude.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// `max |U†U - I|`.
pub fn unitarity_residual(u: &CMatrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    let n = u.nrows();
    max_abs(&(u.adjoint() * u - identity(n)))
}

/// `max |H - H†|`.
pub fn hermiticity_residual(h: &CMatrix) -> f64 {
    max_abs(&(h - h.adjoint()))
}

pub fn hermitian_part(h: &CMatrix) -> CMatrix {
    (h + h.adjoint()).scale(0.5)
}

/// Eigenvalues (ascending) of the Hermitian part of `h`.
pub fn hermitian_eigenvalues(h: &CMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = hermitian_part(h).symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Eigen-decomposition of the Hermitian part of `h`, eigenvalues ascending with
/// matching eigenvector columns.
pub fn hermitian_eigh(h: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = hermitian_part(h).symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

/// `exp(i H)` for Hermitian `H` through its eigen-decomposition.
pub fn expm_i_hermitian(h: &CMatrix) -> CMatrix {
    let (values, vectors) = hermitian_eigh(h);
    let phases = CVector::from_iterator(values.len(), values.iter().map(|&l| C64::from_polar(1.0, l)));
    &vectors * CMatrix::from_diagonal(&phases) * vectors.adjoint()
}

/// Shannon entropy in bits, ignoring weights below `cutoff`.
pub fn shannon_bits(weights: impl IntoIterator<Item = f64>, cutoff: f64) -> f64 {
    weights.into_iter().filter(|&p| p >= cutoff).map(|p| -p * p.log2()).sum::<f64>().max(0.0)
}

pub fn gaussian_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CVector {
    CVector::from_fn(n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im)
    })
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im)
    })
}

/// Haar-distributed unitary: QR of a complex Gaussian matrix with the phases of
/// `diag(R)` moved into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let qr = gaussian_matrix(n, n, rng).qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Random density matrix `G G† / Tr(G G†)` with `G` complex Gaussian.
pub fn random_density_matrix<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let g = gaussian_matrix(n, n, rng);
    let rho = &g * g.adjoint();
    let tr = rho.trace();
    rho / tr
}

/// The 2×2 Pauli matrices `[I, X, Y, Z]`.
pub fn paulis() -> [CMatrix; 4] {
    [
        CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ONE]),
        CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
        CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
    ]
}
