//! Two-qubit canonical decomposition through the magic basis.
//!
//! Every two-qubit unitary is written as
//! `g · (A₁ ⊗ B₁) · exp(−i Σ_j α_j σ_j⊗σ_j) · (A₀ ⊗ B₀)` with the angles folded
//! into the Weyl chamber `π/4 ≥ α₁ ≥ α₂ ≥ |α₃|`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_6};

use nalgebra::DMatrix;

use super::BipartiteGate;
use crate::error::{Error, Result};
use crate::linalg::{self, c, kron, max_abs, paulis, CMatrix, CVector, C64};

/// Canonical form of a two-qubit gate.
#[derive(Clone, Debug)]
pub struct CanonicalForm {
    /// Interaction angles in the `exp(−i Σ α σ⊗σ)` convention.
    pub alphas: [f64; 3],
    /// Locals applied before the interaction, `(A_U, B_U)`.
    pub local_before: (CMatrix, CMatrix),
    /// Locals applied after the interaction, `(A_U, B_U)`.
    pub local_after: (CMatrix, CMatrix),
    pub global_phase: C64,
}

impl CanonicalForm {
    pub fn reconstruct(&self) -> CMatrix {
        let before = kron(&self.local_before.0, &self.local_before.1);
        let after = kron(&self.local_after.0, &self.local_after.1);
        (after * canonical_unitary(self.alphas) * before) * self.global_phase
    }

    pub fn reconstruction_error(&self, gate: &BipartiteGate) -> f64 {
        max_abs(&(self.reconstruct() - gate.matrix()))
    }

    /// The same angles in the `exp(+i Σ α σ⊗σ)` convention used by
    /// [`super::gate_zz`].
    pub fn plus_convention_alphas(&self) -> [f64; 3] {
        self.alphas.map(|a| -a)
    }

    pub fn in_weyl_chamber(&self, tol: f64) -> bool {
        let [a1, a2, a3] = self.alphas;
        FRAC_PI_4 + tol >= a1 && a1 + tol >= a2 && a2 + tol >= a3.abs()
    }
}

/// `exp(−i Σ_j α_j σ_j ⊗ σ_j)`.
pub fn canonical_unitary(alphas: [f64; 3]) -> CMatrix {
    let [_, x, y, z] = paulis();
    let h = kron(&x, &x).scale(-alphas[0]) + kron(&y, &y).scale(-alphas[1]) + kron(&z, &z).scale(-alphas[2]);
    linalg::expm_i_hermitian(&h)
}

/// Columns are the magic (phased Bell) basis, in which local gates become
/// real orthogonal matrices and every `σ_j⊗σ_j` is diagonal.
fn magic_basis() -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let (o, z, i) = (c(s, 0.0), c(0.0, 0.0), c(0.0, s));
    CMatrix::from_row_slice(4, 4, &[o, i, z, z, z, z, i, o, z, z, i, -o, o, -i, z, z])
}

/// `signs[j][k]`: eigenvalue of `σ_j⊗σ_j` on the k-th magic basis vector.
fn magic_signs(magic: &CMatrix) -> [[f64; 4]; 3] {
    let [_, x, y, z] = paulis();
    let mut out = [[0.0; 4]; 3];
    for (j, p) in [x, y, z].iter().enumerate() {
        let d = magic.adjoint() * kron(p, p) * magic;
        for k in 0..4 {
            out[j][k] = d[(k, k)].re.signum();
        }
    }
    out
}

/// Real orthogonal `P` with `Pᵀ m P` diagonal, for a complex symmetric
/// unitary `m`. Real and imaginary parts commute, so a generic real
/// combination of them shares their eigenvectors.
fn diagonalize_symmetric_unitary(m: &CMatrix) -> Result<(DMatrix<f64>, Vec<C64>)> {
    let re = m.map(|z| z.re);
    let im = m.map(|z| z.im);
    let mut best: Option<(f64, DMatrix<f64>)> = None;
    for attempt in 0..64 {
        let theta = FRAC_PI_6 + FRAC_PI_4 * attempt as f64 + 0.0173 * (attempt * attempt) as f64;
        let mix = &re * theta.cos() + &im * theta.sin();
        let eig = nalgebra::SymmetricEigen::new(mix);
        let p = eig.eigenvectors;
        let pc = p.map(|v| c(v, 0.0));
        let d = pc.transpose() * m * &pc;
        let off = (0..4)
            .flat_map(|i| (0..4).filter(move |&j| j != i).map(move |j| (i, j)))
            .fold(0.0f64, |acc, (i, j)| acc.max(d[(i, j)].norm()));
        if best.as_ref().is_none_or(|(b, _)| off < *b) {
            best = Some((off, p));
        }
        if off < 1e-13 {
            break;
        }
    }
    let (off, mut p) = best.expect("at least one attempt");
    if off > 1e-9 {
        return Err(Error::Validity(format!("failed to diagonalize UᵀU in the magic basis (residual {off:e})")));
    }
    if p.determinant() < 0.0 {
        p.column_mut(3).neg_mut();
    }
    let pc = p.map(|v| c(v, 0.0));
    let d = pc.transpose() * m * &pc;
    Ok((p, (0..4).map(|k| d[(k, k)]).collect()))
}

/// Splits `m ≈ a ⊗ b` with `b` unitary; `a` absorbs the scalar.
fn factor_product(m: &CMatrix, da: usize, db: usize) -> (CMatrix, CMatrix) {
    let block = |i: usize, j: usize| CMatrix::from_fn(db, db, |k, l| m[(i * db + k, j * db + l)]);
    let (mut bi, mut bj, mut best) = (0, 0, -1.0);
    for i in 0..da {
        for j in 0..da {
            let n = block(i, j).norm();
            if n > best {
                (bi, bj, best) = (i, j, n);
            }
        }
    }
    let b = block(bi, bj) * c((db as f64).sqrt() / best, 0.0);
    let b_dag = b.adjoint();
    let a = CMatrix::from_fn(da, da, |i, j| (&b_dag * block(i, j)).trace() / c(db as f64, 0.0));
    (a, b)
}

struct Folding {
    alphas: [f64; 3],
    after: CMatrix,
    before: CMatrix,
    phase: C64,
    pauli: [CMatrix; 3],
}

impl Folding {
    fn pp(&self, j: usize) -> CMatrix {
        kron(&self.pauli[j], &self.pauli[j])
    }

    /// `α_j → α_j − π/2·sign`, using `exp(∓iπ/2 σσ) = ∓i σσ`.
    fn shift(&mut self, j: usize, down: bool) {
        let pp = self.pp(j);
        self.before = pp * &self.before;
        if down {
            self.alphas[j] -= FRAC_PI_2;
            self.phase *= c(0.0, -1.0);
        } else {
            self.alphas[j] += FRAC_PI_2;
            self.phase *= c(0.0, 1.0);
        }
    }

    /// Negates the two angles other than `k` by conjugating with `σ_k ⊗ I`.
    fn flip_around(&mut self, k: usize) {
        let s = kron(&self.pauli[k], &linalg::identity(2));
        self.after = &self.after * &s;
        self.before = s * &self.before;
        for j in 0..3 {
            if j != k {
                self.alphas[j] = -self.alphas[j];
            }
        }
    }

    /// Exchanges angles `i` and `j` by conjugating with `Q⊗Q`, `Q = (σ_i+σ_j)/√2`.
    fn exchange(&mut self, i: usize, j: usize) {
        let q = (&self.pauli[i] + &self.pauli[j]).scale(std::f64::consts::FRAC_1_SQRT_2);
        let w = kron(&q, &q);
        self.after = &self.after * w.adjoint();
        self.before = w * &self.before;
        self.alphas.swap(i, j);
    }

    fn fold(&mut self) {
        for j in 0..3 {
            while self.alphas[j] > FRAC_PI_4 {
                self.shift(j, true);
            }
            while self.alphas[j] <= -FRAC_PI_4 {
                self.shift(j, false);
            }
        }
        for _ in 0..3 {
            for j in 0..2 {
                if self.alphas[j].abs() < self.alphas[j + 1].abs() {
                    self.exchange(j, j + 1);
                }
            }
        }
        if self.alphas[0] < 0.0 {
            self.flip_around(1);
        }
        if self.alphas[1] < 0.0 {
            self.flip_around(0);
        }
        // On the α₁ = π/4 face the sign of α₃ is a gauge choice; prefer α₃ ≥ 0.
        if self.alphas[2] < 0.0 && (self.alphas[0] - FRAC_PI_4).abs() < 1e-12 {
            self.shift(0, true);
            self.flip_around(1);
        }
    }
}

/// Canonical decomposition of a two-qubit gate.
pub fn kak_decompose(gate: &BipartiteGate) -> Result<CanonicalForm> {
    if gate.d_a() != 2 || gate.d_b() != 2 {
        return Err(Error::UnsupportedDimension(format!(
            "canonical decomposition needs 2x2 subsystems, got {}x{}",
            gate.d_a(),
            gate.d_b()
        )));
    }
    let magic = magic_basis();
    let signs = magic_signs(&magic);
    let ub = magic.adjoint() * gate.matrix() * &magic;
    let m2 = ub.transpose() * &ub;
    let (p, d) = diagonalize_symmetric_unitary(&m2)?;
    let pc = p.map(|v| c(v, 0.0));

    let mut theta: Vec<f64> = d.iter().map(|z| z.arg() / 2.0).collect();
    let inv_phases = |theta: &[f64]| {
        CMatrix::from_diagonal(&CVector::from_iterator(4, theta.iter().map(|&t| C64::from_polar(1.0, -t))))
    };
    let mut o1 = (&ub * &pc * inv_phases(&theta)).map(|z| z.re);
    if o1.determinant() < 0.0 {
        theta[0] += std::f64::consts::PI;
        o1.column_mut(0).neg_mut();
    }
    let o1c = o1.map(|v| c(v, 0.0));
    let o2c = pc.transpose();

    let mut alphas = [0.0; 3];
    for (j, row) in signs.iter().enumerate() {
        alphas[j] = -0.25 * row.iter().zip(&theta).map(|(s, t)| s * t).sum::<f64>();
    }
    let phase = C64::from_polar(1.0, theta.iter().sum::<f64>() / 4.0);

    let [_, x, y, z] = paulis();
    let mut fold = Folding {
        alphas,
        after: &magic * o1c * magic.adjoint(),
        before: &magic * o2c * magic.adjoint(),
        phase,
        pauli: [x, y, z],
    };
    fold.fold();

    let local_after = factor_product(&fold.after, 2, 2);
    let local_before = factor_product(&fold.before, 2, 2);
    Ok(CanonicalForm { alphas: fold.alphas, local_before, local_after, global_phase: fold.phase })
}
