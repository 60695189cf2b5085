//! Bipartite unitaries: named gates, embedding into larger layouts, generalized
//! Pauli (Weyl) operators, operator-Schmidt coefficients and the gate file
//! format.

mod kak;

use std::f64::consts::PI;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector, C64};
use crate::qstate::{self, SubsystemLayout, EIGEN_CUTOFF};

pub use kak::{canonical_unitary, kak_decompose, CanonicalForm};

/// Unitarity tolerance for gates built in-process.
pub const UNITARY_TOL: f64 = 1e-10;
/// Unitarity tolerance for gates read from a gate file.
pub const FILE_UNITARY_TOL: f64 = 1e-8;

/// Layout label of Alice's gate factor.
pub const A_U: &str = "A_U";
/// Layout label of Bob's gate factor.
pub const B_U: &str = "B_U";

/// A unitary on `A_U ⊗ B_U`, row-major with `A_U` most significant.
#[derive(Clone, Debug)]
pub struct BipartiteGate {
    d_a: usize,
    d_b: usize,
    matrix: CMatrix,
}

impl BipartiteGate {
    pub fn new(d_a: usize, d_b: usize, matrix: CMatrix) -> Result<Self> {
        Self::with_tolerance(d_a, d_b, matrix, UNITARY_TOL)
    }

    pub fn with_tolerance(d_a: usize, d_b: usize, matrix: CMatrix, tol: f64) -> Result<Self> {
        if d_a == 0 || d_b == 0 {
            return Err(Error::InvalidDimension("gate factors must have dimension >= 1".into()));
        }
        let n = d_a * d_b;
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::Layout(format!("matrix is {}x{} but d_a*d_b = {n}", matrix.nrows(), matrix.ncols())));
        }
        let residual = linalg::unitarity_residual(&matrix);
        if residual.is_nan() || residual > tol {
            return Err(Error::Validity(format!("matrix is not unitary (residual {residual:e})")));
        }
        Ok(Self { d_a, d_b, matrix })
    }

    pub(crate) fn from_parts(d_a: usize, d_b: usize, matrix: CMatrix) -> Self {
        Self { d_a, d_b, matrix }
    }

    pub fn d_a(&self) -> usize {
        self.d_a
    }

    pub fn d_b(&self) -> usize {
        self.d_b
    }

    pub fn dim(&self) -> usize {
        self.d_a * self.d_b
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn identity(d_a: usize, d_b: usize) -> Self {
        Self::from_parts(d_a, d_b, linalg::identity(d_a * d_b))
    }

    /// Exchange of two `d`-level systems.
    pub fn swap(d: usize) -> Self {
        let mut m = CMatrix::zeros(d * d, d * d);
        for i in 0..d {
            for j in 0..d {
                m[(j * d + i, i * d + j)] = linalg::ONE;
            }
        }
        Self::from_parts(d, d, m)
    }

    /// Controlled-NOT with control on `A_U`.
    pub fn cnot() -> Self {
        let mut m = CMatrix::zeros(4, 4);
        m[(0, 0)] = linalg::ONE;
        m[(1, 1)] = linalg::ONE;
        m[(2, 3)] = linalg::ONE;
        m[(3, 2)] = linalg::ONE;
        Self::from_parts(2, 2, m)
    }

    pub fn cz() -> Self {
        let d = CVector::from_vec(vec![linalg::ONE, linalg::ONE, linalg::ONE, -linalg::ONE]);
        Self::from_parts(2, 2, CMatrix::from_diagonal(&d))
    }

    /// Haar-random gate.
    pub fn random<R: Rng + ?Sized>(d_a: usize, d_b: usize, rng: &mut R) -> Self {
        Self::from_parts(d_a, d_b, linalg::haar_unitary(d_a * d_b, rng))
    }

    /// `a ⊗ b` for local unitaries.
    pub fn local(a: &CMatrix, b: &CMatrix) -> Result<Self> {
        Self::new(a.nrows(), b.nrows(), linalg::kron(a, b))
    }

    pub fn dagger(&self) -> Self {
        Self::from_parts(self.d_a, self.d_b, self.matrix.adjoint())
    }

    /// `self · other` (apply `other` first).
    pub fn compose(&self, other: &BipartiteGate) -> Result<Self> {
        if self.d_a != other.d_a || self.d_b != other.d_b {
            return Err(Error::Layout("cannot compose gates on different dimensions".into()));
        }
        Ok(Self::from_parts(self.d_a, self.d_b, &self.matrix * &other.matrix))
    }

    /// The same interaction with the roles of Alice and Bob exchanged.
    pub fn swapped(&self) -> Self {
        let (da, db) = (self.d_a, self.d_b);
        let m = CMatrix::from_fn(da * db, da * db, |r, s| {
            let (rb, ra) = (r / da, r % da);
            let (sb, sa) = (s / da, s % da);
            self.matrix[(ra * db + rb, sa * db + sb)]
        });
        Self::from_parts(db, da, m)
    }
}

/// `exp(i α σ_z ⊗ σ_z)`.
pub fn gate_zz(alpha: f64) -> BipartiteGate {
    let p = C64::from_polar(1.0, alpha);
    let m = C64::from_polar(1.0, -alpha);
    BipartiteGate::from_parts(2, 2, CMatrix::from_diagonal(&CVector::from_vec(vec![p, m, m, p])))
}

/// The `d²` Weyl operators `X^a Z^b`, ordered with `a` major.
#[derive(Clone, Debug)]
pub struct WeylSet {
    d: usize,
    operators: Vec<CMatrix>,
}

impl WeylSet {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn operators(&self) -> &[CMatrix] {
        &self.operators
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }
}

/// Shift `X|j⟩ = |j+1 mod d⟩` and clock `Z|j⟩ = ω^j|j⟩` products.
pub fn weyl_set(d: usize) -> Result<WeylSet> {
    if d == 0 {
        return Err(Error::InvalidDimension("Weyl operators need d >= 1".into()));
    }
    let mut shift = CMatrix::zeros(d, d);
    for j in 0..d {
        shift[((j + 1) % d, j)] = linalg::ONE;
    }
    let clock =
        CMatrix::from_diagonal(&CVector::from_fn(d, |j, _| C64::from_polar(1.0, 2.0 * PI * j as f64 / d as f64)));
    let mut operators = Vec::with_capacity(d * d);
    let mut xa = linalg::identity(d);
    for _ in 0..d {
        let mut zb = linalg::identity(d);
        for _ in 0..d {
            operators.push(&xa * &zb);
            zb = &zb * &clock;
        }
        xa = &xa * &shift;
    }
    Ok(WeylSet { d, operators })
}

/// The gate as a matrix on the whole of `layout`, acting on the factors
/// labelled `A_U` and `B_U` and as the identity elsewhere.
pub fn embed(gate: &BipartiteGate, layout: &SubsystemLayout) -> Result<CMatrix> {
    if layout.dim_of(A_U)? != gate.d_a || layout.dim_of(B_U)? != gate.d_b {
        return Err(Error::Layout(format!("layout {layout} does not carry A_U:{} and B_U:{}", gate.d_a, gate.d_b)));
    }
    embed_on(&gate.matrix, layout, &[A_U, B_U])
}

/// Embeds `op` (row-major over `targets`) into `layout`.
pub fn embed_on<S: AsRef<str>>(op: &CMatrix, layout: &SubsystemLayout, targets: &[S]) -> Result<CMatrix> {
    let n = layout.total_dim();
    let mut out = CMatrix::zeros(n, n);
    for k in 0..n {
        let mut e = CVector::zeros(n);
        e[k] = linalg::ONE;
        let col = qstate::apply_on_factors(layout, &e, op, targets)?;
        out.set_column(k, &col);
    }
    Ok(out)
}

/// Realigned matrix `R[(i,j),(k,l)] = U[(i,k),(j,l)]` of shape `d_a² × d_b²`.
pub fn realign(gate: &BipartiteGate) -> CMatrix {
    let (da, db) = (gate.d_a, gate.d_b);
    let u = &gate.matrix;
    CMatrix::from_fn(da * da, db * db, |r, s| {
        let (i, j) = (r / da, r % da);
        let (k, l) = (s / db, s % db);
        u[(i * db + k, j * db + l)]
    })
}

/// Operator-Schmidt coefficients, descending; their squares sum to `d_a·d_b`.
pub fn operator_schmidt(gate: &BipartiteGate) -> Vec<f64> {
    let mut s: Vec<f64> = realign(gate).singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Entropy (bits) of the normalized squared operator-Schmidt coefficients.
pub fn operator_schmidt_entropy(gate: &BipartiteGate) -> f64 {
    let norm = gate.dim() as f64;
    linalg::shannon_bits(operator_schmidt(gate).into_iter().map(|s| s * s / norm), EIGEN_CUTOFF)
}

/// `exp(iH)` for a Hermitian generator.
pub fn unitary_from_generator(h: &CMatrix) -> Result<CMatrix> {
    if !h.is_square() {
        return Err(Error::Validity("generator must be square".into()));
    }
    let residual = linalg::hermiticity_residual(h);
    if residual > qstate::HERMITIAN_TOL {
        return Err(Error::Validity(format!("generator is not Hermitian (residual {residual:e})")));
    }
    Ok(linalg::expm_i_hermitian(h))
}

/// Hermitian matrix from `n²` real coordinates: the diagonal first, then the
/// real and imaginary parts of each upper-triangular entry.
pub fn hermitian_from_coords(n: usize, coords: &[f64]) -> CMatrix {
    debug_assert_eq!(coords.len(), n * n);
    let mut h = CMatrix::zeros(n, n);
    for i in 0..n {
        h[(i, i)] = c(coords[i], 0.0);
    }
    let mut k = n;
    for i in 0..n {
        for j in i + 1..n {
            let z = c(coords[k], coords[k + 1]);
            h[(i, j)] = z;
            h[(j, i)] = z.conj();
            k += 2;
        }
    }
    h
}

/// On-disk gate description.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GateFile {
    pub d_a: usize,
    pub d_b: usize,
    /// Row-major rows of `[re, im]` pairs.
    pub matrix: Vec<Vec<[f64; 2]>>,
}

impl GateFile {
    pub fn from_gate(gate: &BipartiteGate) -> Self {
        let n = gate.dim();
        let matrix =
            (0..n).map(|i| (0..n).map(|j| [gate.matrix[(i, j)].re, gate.matrix[(i, j)].im]).collect()).collect();
        Self { d_a: gate.d_a, d_b: gate.d_b, matrix }
    }

    pub fn into_gate(self) -> Result<BipartiteGate> {
        let n = self.d_a * self.d_b;
        if self.matrix.len() != n || self.matrix.iter().any(|row| row.len() != n) {
            return Err(Error::Parse(format!("matrix must be {n}x{n} for d_a={} d_b={}", self.d_a, self.d_b)));
        }
        let m = CMatrix::from_fn(n, n, |i, j| {
            let [re, im] = self.matrix[i][j];
            c(re, im)
        });
        BipartiteGate::with_tolerance(self.d_a, self.d_b, m, FILE_UNITARY_TOL)
    }
}

pub fn parse_gate_json(text: &str) -> Result<BipartiteGate> {
    let file: GateFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    file.into_gate()
}

pub fn gate_to_json(gate: &BipartiteGate) -> String {
    serde_json::to_string_pretty(&GateFile::from_gate(gate)).expect("gate file serializes")
}

pub fn load_gate_file(path: impl AsRef<Path>) -> Result<BipartiteGate> {
    parse_gate_json(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{kron, max_abs, paulis};
    use crate::qstate::{entanglement_entropy, max_entangled_on, random_state};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_4;

    fn h2(p: f64) -> f64 {
        if p <= 0.0 || p >= 1.0 {
            return 0.0;
        }
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }

    #[test]
    fn named_gates_are_unitary() {
        for g in [BipartiteGate::cnot(), BipartiteGate::cz(), BipartiteGate::swap(3), gate_zz(0.3)] {
            assert!(linalg::unitarity_residual(g.matrix()) < 1e-14);
        }
        assert!(BipartiteGate::new(2, 2, CMatrix::zeros(4, 4)).is_err());
        assert!(matches!(BipartiteGate::new(2, 3, linalg::identity(4)), Err(Error::Layout(_))));
    }

    #[test]
    fn zz_gate_matrix() {
        assert!(max_abs(&(gate_zz(0.0).matrix() - linalg::identity(4))) < 1e-15);
        let a: f64 = 0.37;
        let [id, _, _, z] = paulis();
        let expected = kron(&id, &id).scale(a.cos()) + kron(&z, &z) * c(0.0, a.sin());
        assert!(max_abs(&(gate_zz(a).matrix() - expected)) < 1e-15);
    }

    #[test]
    fn weyl_set_qubit_is_pauli_group() {
        let w = weyl_set(2).unwrap();
        assert_eq!(w.len(), 4);
        let [id, x, y, z] = paulis();
        let expected = [id.clone(), z.clone(), x.clone(), &x * &z];
        for (op, e) in w.operators().iter().zip(expected.iter()) {
            assert!(max_abs(&(op - e)) < 1e-15);
        }
        // X Z = -i Y
        assert!(max_abs(&(&w.operators()[3] - y * c(0.0, -1.0))) < 1e-15);
    }

    #[test]
    fn weyl_orthogonality_and_twirl() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for d in 1..=4 {
            let w = weyl_set(d).unwrap();
            for (i, a) in w.operators().iter().enumerate() {
                for (j, b) in w.operators().iter().enumerate() {
                    let hs = (a.adjoint() * b).trace();
                    let expected = if i == j { d as f64 } else { 0.0 };
                    assert!((hs - c(expected, 0.0)).norm() < 1e-12, "d={d} i={i} j={j}");
                }
            }
            let rho = linalg::random_density_matrix(d, &mut rng);
            let twirl = w.operators().iter().fold(CMatrix::zeros(d, d), |acc, v| acc + v * &rho * v.adjoint());
            assert!(max_abs(&(twirl - linalg::identity(d).scale(d as f64))) < 1e-12);
        }
    }

    #[test]
    fn weyl_bell_states_orthonormal_d3() {
        let w = weyl_set(3).unwrap();
        let psi = max_entangled_on("X", "Y", 3).unwrap();
        let states: Vec<_> = w.operators().iter().map(|v| psi.apply(v, &["X"]).unwrap()).collect();
        for (i, a) in states.iter().enumerate() {
            for (j, b) in states.iter().enumerate() {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((a.inner(b) - c(expected, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn transpose_trick() {
        // (V ⊗ I)|Ψ⟩ = (I ⊗ Vᵀ)|Ψ⟩
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let v = linalg::haar_unitary(3, &mut rng);
        let psi = max_entangled_on("X", "Y", 3).unwrap();
        let left = psi.apply(&v, &["X"]).unwrap();
        let right = psi.apply(&v.transpose(), &["Y"]).unwrap();
        assert!((left.amplitudes() - right.amplitudes()).norm() < 1e-13);
    }

    #[test]
    fn embed_identity_and_swap() {
        let layout = SubsystemLayout::new(&[("A_anc", 2), (A_U, 2), (B_U, 2), ("B_anc", 2)]).unwrap();
        let id = embed(&BipartiteGate::identity(2, 2), &layout).unwrap();
        assert!(max_abs(&(id - linalg::identity(16))) < 1e-15);

        let swap = embed(&BipartiteGate::swap(2), &layout).unwrap();
        assert!(linalg::unitarity_residual(&swap) < 1e-14);
        let start =
            max_entangled_on("A_anc", A_U, 2).unwrap().tensor(&max_entangled_on(B_U, "B_anc", 2).unwrap()).unwrap();
        let out = crate::qstate::StateVector::new(layout.clone(), &swap * start.amplitudes()).unwrap();
        let e = entanglement_entropy(&out, &["A_anc", A_U]).unwrap();
        assert!((e - 2.0).abs() < 1e-12);

        let bad = SubsystemLayout::new(&[(A_U, 3), (B_U, 2)]).unwrap();
        assert!(matches!(embed(&BipartiteGate::swap(2), &bad), Err(Error::Layout(_))));
        let missing = SubsystemLayout::new(&[(A_U, 2)]).unwrap();
        assert!(embed(&BipartiteGate::swap(2), &missing).is_err());
    }

    #[test]
    fn embed_matches_state_application() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let gate = BipartiteGate::random(2, 3, &mut rng);
        let layout = SubsystemLayout::new(&[("A_anc", 2), (A_U, 2), (B_U, 3), ("B_anc", 1)]).unwrap();
        let psi = random_state(&layout, 1);
        let full = embed(&gate, &layout).unwrap() * psi.amplitudes();
        let staged = psi.apply(gate.matrix(), &[A_U, B_U]).unwrap();
        assert!((staged.amplitudes() - full).norm() < 1e-13);
    }

    #[test]
    fn operator_schmidt_examples() {
        let swap = operator_schmidt(&BipartiteGate::swap(2));
        for s in &swap {
            assert!((s - 1.0).abs() < 1e-12);
        }
        let cnot = operator_schmidt(&BipartiteGate::cnot());
        let r2 = 2f64.sqrt();
        let expected = [r2, r2, 0.0, 0.0];
        for (s, e) in cnot.iter().zip(expected) {
            assert!((s - e).abs() < 1e-12);
        }
        for k in 0..=10 {
            let a = FRAC_PI_4 * k as f64 / 10.0;
            let s = operator_schmidt(&gate_zz(a));
            assert!((s[0] - 2.0 * a.cos()).abs() < 1e-12);
            assert!((s[1] - 2.0 * a.sin()).abs() < 1e-12);
            assert!(s[2].abs() < 1e-12 && s[3].abs() < 1e-12);
            assert!((operator_schmidt_entropy(&gate_zz(a)) - h2(a.cos().powi(2))).abs() < 1e-9);
        }
        assert!((operator_schmidt_entropy(&gate_zz(FRAC_PI_4)) - 1.0).abs() < 1e-12);
        assert!((operator_schmidt_entropy(&gate_zz(PI / 8.0)) - 0.600876).abs() < 1e-6);
    }

    #[test]
    fn operator_schmidt_norm_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (da, db) in [(2, 2), (2, 3), (3, 3), (4, 2)] {
            let g = BipartiteGate::random(da, db, &mut rng);
            let total: f64 = operator_schmidt(&g).iter().map(|s| s * s).sum();
            assert!((total - (da * db) as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn generator_examples() {
        assert!(max_abs(&(unitary_from_generator(&CMatrix::zeros(2, 2)).unwrap() - linalg::identity(2))) < 1e-15);
        let [_, x, _, _] = paulis();
        let u = unitary_from_generator(&x.scale(PI / 2.0)).unwrap();
        // exp(iπσx/2) = cos(π/2) I + i sin(π/2) σx
        assert!(max_abs(&(u - &x * c(0.0, 1.0))) < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let g = linalg::gaussian_matrix(4, 4, &mut rng);
        let h = linalg::hermitian_part(&g);
        let prod = unitary_from_generator(&h).unwrap() * unitary_from_generator(&(-&h)).unwrap();
        assert!(max_abs(&(prod - linalg::identity(4))) < 1e-12);

        assert!(matches!(unitary_from_generator(&g), Err(Error::Validity(_))));
    }

    #[test]
    fn hermitian_coords_cover_all_entries() {
        let coords: Vec<f64> = (0..9).map(|k| k as f64 + 1.0).collect();
        let h = hermitian_from_coords(3, &coords);
        assert!(linalg::hermiticity_residual(&h) == 0.0);
        assert_eq!(h[(0, 1)], c(4.0, 5.0));
        assert_eq!(h[(1, 2)], c(8.0, 9.0));
    }

    #[test]
    fn swapped_gate_exchanges_roles() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let a = linalg::haar_unitary(2, &mut rng);
        let b = linalg::haar_unitary(3, &mut rng);
        let g = BipartiteGate::local(&a, &b).unwrap();
        let s = g.swapped();
        assert_eq!((s.d_a(), s.d_b()), (3, 2));
        assert!(max_abs(&(s.matrix() - kron(&b, &a))) < 1e-14);
        let back = s.swapped();
        assert!(max_abs(&(back.matrix() - g.matrix())) < 1e-15);
    }

    #[test]
    fn gate_file_round_trip_and_validation() {
        let text = gate_to_json(&BipartiteGate::cnot());
        let g = parse_gate_json(&text).unwrap();
        assert!(max_abs(&(g.matrix() - BipartiteGate::cnot().matrix())) < 1e-15);

        assert!(matches!(parse_gate_json("{\"d_a\": 2"), Err(Error::Parse(_))));
        let wrong_shape = r#"{"d_a": 2, "d_b": 2, "matrix": [[[1,0]]]}"#;
        assert!(matches!(parse_gate_json(wrong_shape), Err(Error::Parse(_))));
        let non_unitary = r#"{"d_a": 1, "d_b": 2, "matrix": [[[1,0],[1,0]],[[0,0],[1,0]]]}"#;
        assert!(matches!(parse_gate_json(non_unitary), Err(Error::Validity(_))));
        // Rounded entries pass at the looser file tolerance.
        let h = (0.5f64.sqrt() * 1e8).round() / 1e8;
        let rounded = format!(r#"{{"d_a": 1, "d_b": 2, "matrix": [[[{h},0],[{h},0]],[[{h},0],[-{h},0]]]}}"#);
        assert!(parse_gate_json(&rounded).is_ok());
    }
}
