//! States, density operators, partial traces and entropies over a labelled
//! tensor factorization.
//!
//! Composite indices are row-major over the factor order of the layout: the
//! leftmost factor is the most significant digit. Every other module relies on
//! this convention.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector, C64};

/// Eigenvalues below this contribute nothing to an entropy.
pub const EIGEN_CUTOFF: f64 = 1e-12;
/// Anti-Hermitian residual above which an operator is rejected.
pub const HERMITIAN_TOL: f64 = 1e-9;

const NORM_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const POSITIVITY_TOL: f64 = 1e-10;

/// Ordered list of named tensor factors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubsystemLayout {
    factors: Vec<(String, usize)>,
}

impl SubsystemLayout {
    pub fn new<S: AsRef<str>>(factors: &[(S, usize)]) -> Result<Self> {
        let mut out: Vec<(String, usize)> = Vec::with_capacity(factors.len());
        for (label, dim) in factors {
            let label = label.as_ref();
            if *dim == 0 {
                return Err(Error::InvalidDimension(format!("factor {label} has dimension 0")));
            }
            if out.iter().any(|(l, _)| l == label) {
                return Err(Error::Layout(format!("duplicate factor label {label}")));
            }
            out.push((label.to_string(), *dim));
        }
        Ok(Self { factors: out })
    }

    pub fn factors(&self) -> &[(String, usize)] {
        &self.factors
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(|(_, d)| *d).collect()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.factors.iter().map(|(l, _)| l.as_str()).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.factors.iter().map(|(_, d)| *d).product()
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        self.factors
            .iter()
            .position(|(l, _)| l == label)
            .ok_or_else(|| Error::Layout(format!("unknown factor label {label}")))
    }

    pub fn dim_of(&self, label: &str) -> Result<usize> {
        Ok(self.factors[self.position(label)?].1)
    }

    pub fn contains(&self, label: &str) -> bool {
        self.factors.iter().any(|(l, _)| l == label)
    }

    /// Layout positions of `labels`, sorted into layout order.
    fn sorted_positions<S: AsRef<str>>(&self, labels: &[S]) -> Result<Vec<usize>> {
        let mut pos = Vec::with_capacity(labels.len());
        for l in labels {
            let p = self.position(l.as_ref())?;
            if pos.contains(&p) {
                return Err(Error::Layout(format!("label {} listed twice", l.as_ref())));
            }
            pos.push(p);
        }
        pos.sort_unstable();
        Ok(pos)
    }

    /// Sub-layout on `labels`, keeping the original factor order.
    pub fn restrict<S: AsRef<str>>(&self, labels: &[S]) -> Result<Self> {
        let pos = self.sorted_positions(labels)?;
        Ok(Self { factors: pos.into_iter().map(|p| self.factors[p].clone()).collect() })
    }

    pub fn complement<S: AsRef<str>>(&self, labels: &[S]) -> Result<Vec<String>> {
        let pos = self.sorted_positions(labels)?;
        Ok((0..self.len()).filter(|p| !pos.contains(p)).map(|p| self.factors[p].0.clone()).collect())
    }

    /// Concatenation `self ⊗ other`.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        let all: Vec<(String, usize)> = self.factors.iter().chain(other.factors.iter()).cloned().collect();
        Self::new(&all)
    }

    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.len()];
        for k in (0..self.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.factors[k + 1].1;
        }
        strides
    }

    /// Flat offsets contributed by every joint value of the factors at
    /// `positions`, enumerated row-major in the order `positions` is given.
    pub(crate) fn offsets(&self, positions: &[usize]) -> Vec<usize> {
        let strides = self.strides();
        let mut out = vec![0usize];
        for &p in positions {
            let d = self.factors[p].1;
            let mut next = Vec::with_capacity(out.len() * d);
            for &base in &out {
                for v in 0..d {
                    next.push(base + v * strides[p]);
                }
            }
            out = next;
        }
        out
    }

    /// Offsets of the kept factors and of the remaining factors.
    pub(crate) fn split_offsets<S: AsRef<str>>(&self, keep: &[S]) -> Result<(Vec<usize>, Vec<usize>)> {
        let kept = self.sorted_positions(keep)?;
        let rest: Vec<usize> = (0..self.len()).filter(|p| !kept.contains(p)).collect();
        Ok((self.offsets(&kept), self.offsets(&rest)))
    }
}

impl fmt::Display for SubsystemLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.factors.iter().map(|(l, d)| format!("{l}:{d}")).collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

/// Normalized pure state over a layout.
#[derive(Clone, Debug)]
pub struct StateVector {
    layout: SubsystemLayout,
    amplitudes: CVector,
}

impl StateVector {
    /// Wraps `amplitudes`, which must already have unit norm.
    pub fn new(layout: SubsystemLayout, amplitudes: CVector) -> Result<Self> {
        check_length(&layout, amplitudes.len())?;
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::Validity(format!("state norm {norm} is not 1")));
        }
        Ok(Self { layout, amplitudes })
    }

    /// Wraps `amplitudes` after dividing by their norm.
    pub fn normalized(layout: SubsystemLayout, amplitudes: CVector) -> Result<Self> {
        check_length(&layout, amplitudes.len())?;
        let norm = amplitudes.norm();
        if !norm.is_finite() || norm <= 0.0 {
            return Err(Error::Validity("cannot normalize a zero or non-finite vector".into()));
        }
        Ok(Self { layout, amplitudes: amplitudes / c(norm, 0.0) })
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(layout: SubsystemLayout, index: usize) -> Result<Self> {
        let n = layout.total_dim();
        if index >= n {
            return Err(Error::Layout(format!("basis index {index} out of range {n}")));
        }
        let mut amps = CVector::zeros(n);
        amps[index] = linalg::ONE;
        Ok(Self { layout, amplitudes: amps })
    }

    pub fn layout(&self) -> &SubsystemLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> CVector {
        self.amplitudes
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    pub fn tensor(&self, other: &StateVector) -> Result<StateVector> {
        Ok(StateVector {
            layout: self.layout.concat(&other.layout)?,
            amplitudes: self.amplitudes.kronecker(&other.amplitudes),
        })
    }

    pub fn density(&self) -> DensityOperator {
        DensityOperator { layout: self.layout.clone(), matrix: &self.amplitudes * self.amplitudes.adjoint() }
    }

    /// Applies `op` to the factors `targets`; `op` is indexed row-major over
    /// `targets` in the order given. Norm is preserved only for unitary `op`.
    pub fn apply<S: AsRef<str>>(&self, op: &CMatrix, targets: &[S]) -> Result<StateVector> {
        let amplitudes = apply_on_factors(&self.layout, &self.amplitudes, op, targets)?;
        Ok(StateVector { layout: self.layout.clone(), amplitudes })
    }

    /// Reduced density matrix on `keep` (factor order preserved).
    pub fn reduced(&self, keep: &[impl AsRef<str>]) -> Result<DensityOperator> {
        let layout = self.layout.restrict(keep)?;
        let matrix = reduced_matrix(&self.layout, &self.amplitudes, keep)?;
        Ok(DensityOperator { layout, matrix })
    }

    /// Reorders factors so they appear in the order `labels`.
    pub fn permuted<S: AsRef<str>>(&self, labels: &[S]) -> Result<StateVector> {
        if labels.len() != self.layout.len() {
            return Err(Error::Layout("permutation must list every factor".into()));
        }
        let mut positions = Vec::with_capacity(labels.len());
        let mut new_factors = Vec::with_capacity(labels.len());
        for l in labels {
            let p = self.layout.position(l.as_ref())?;
            positions.push(p);
            new_factors.push(self.layout.factors[p].clone());
        }
        let new_layout = SubsystemLayout::new(&new_factors)?;
        let src = self.layout.offsets(&positions);
        let amps = CVector::from_iterator(src.len(), src.iter().map(|&o| self.amplitudes[o]));
        Ok(StateVector { layout: new_layout, amplitudes: amps })
    }
}

fn check_length(layout: &SubsystemLayout, len: usize) -> Result<()> {
    if layout.total_dim() != len {
        return Err(Error::Layout(format!(
            "amplitude length {len} does not match layout {layout} of dimension {}",
            layout.total_dim()
        )));
    }
    Ok(())
}

/// An operator bound to a set of factors of a fixed layout, with the index
/// bookkeeping done once.
#[derive(Clone, Debug)]
pub(crate) struct FactorOp {
    local: Vec<usize>,
    rest: Vec<usize>,
    op: CMatrix,
}

impl FactorOp {
    pub(crate) fn new<S: AsRef<str>>(layout: &SubsystemLayout, op: CMatrix, targets: &[S]) -> Result<Self> {
        let mut positions = Vec::with_capacity(targets.len());
        for t in targets {
            let p = layout.position(t.as_ref())?;
            if positions.contains(&p) {
                return Err(Error::Layout(format!("target {} listed twice", t.as_ref())));
            }
            positions.push(p);
        }
        let local = layout.offsets(&positions);
        if op.nrows() != local.len() || op.ncols() != local.len() {
            return Err(Error::Layout(format!(
                "operator of shape {}x{} does not match target dimension {}",
                op.nrows(),
                op.ncols(),
                local.len()
            )));
        }
        let rest_pos: Vec<usize> = (0..layout.len()).filter(|p| !positions.contains(p)).collect();
        Ok(Self { local, rest: layout.offsets(&rest_pos), op })
    }

    /// Same factors, different operator.
    pub(crate) fn with_op(&self, op: CMatrix) -> Self {
        debug_assert_eq!(op.nrows(), self.local.len());
        Self { local: self.local.clone(), rest: self.rest.clone(), op }
    }

    pub(crate) fn apply(&self, amps: &CVector) -> CVector {
        let m = self.local.len();
        let mut out = CVector::zeros(amps.len());
        let mut buf = vec![linalg::ZERO; m];
        for &r in &self.rest {
            for (k, &o) in self.local.iter().enumerate() {
                buf[k] = amps[r + o];
            }
            for (i, &oi) in self.local.iter().enumerate() {
                let mut acc = linalg::ZERO;
                for (j, b) in buf.iter().enumerate() {
                    acc += self.op[(i, j)] * b;
                }
                out[r + oi] = acc;
            }
        }
        out
    }
}

/// Applies `op` to the listed factors of the flat vector `amps`.
pub(crate) fn apply_on_factors<S: AsRef<str>>(
    layout: &SubsystemLayout,
    amps: &CVector,
    op: &CMatrix,
    targets: &[S],
) -> Result<CVector> {
    Ok(FactorOp::new(layout, op.clone(), targets)?.apply(amps))
}

/// A cut of a fixed layout into two groups of factors, for repeated pure-state
/// entropy evaluations.
#[derive(Clone, Debug)]
pub(crate) struct Cut {
    small: Vec<usize>,
    large: Vec<usize>,
}

impl Cut {
    pub(crate) fn new<S: AsRef<str>>(layout: &SubsystemLayout, side: &[S]) -> Result<Self> {
        let (kept, rest) = layout.split_offsets(side)?;
        Ok(if kept.len() <= rest.len() { Self { small: kept, large: rest } } else { Self { small: rest, large: kept } })
    }

    /// Entanglement entropy (bits) of the pure state `amps` across the cut.
    pub(crate) fn entropy(&self, amps: &CVector) -> f64 {
        let m = CMatrix::from_fn(self.small.len(), self.large.len(), |k, t| amps[self.small[k] + self.large[t]]);
        let rho = &m * m.adjoint();
        entropy_of_spectrum(&linalg::hermitian_eigenvalues(&rho))
    }
}

/// `Tr_rest |ψ⟩⟨ψ|` as a matrix on `keep`.
pub(crate) fn reduced_matrix<S: AsRef<str>>(layout: &SubsystemLayout, amps: &CVector, keep: &[S]) -> Result<CMatrix> {
    let (kept, rest) = layout.split_offsets(keep)?;
    let m = CMatrix::from_fn(kept.len(), rest.len(), |k, t| amps[kept[k] + rest[t]]);
    Ok(&m * m.adjoint())
}

/// Entropy (bits) across the cut `side | rest` of the pure state `amps`.
pub(crate) fn pure_cut_entropy<S: AsRef<str>>(layout: &SubsystemLayout, amps: &CVector, side: &[S]) -> Result<f64> {
    Ok(Cut::new(layout, side)?.entropy(amps))
}

/// `−Σ λ log₂ λ` over eigenvalues above [`EIGEN_CUTOFF`].
pub fn entropy_of_spectrum(eigenvalues: &[f64]) -> f64 {
    linalg::shannon_bits(eigenvalues.iter().copied(), EIGEN_CUTOFF)
}

/// Positive semidefinite unit-trace operator over a layout.
#[derive(Clone, Debug)]
pub struct DensityOperator {
    layout: SubsystemLayout,
    matrix: CMatrix,
}

impl DensityOperator {
    pub fn new(layout: SubsystemLayout, matrix: CMatrix) -> Result<Self> {
        let n = layout.total_dim();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::Layout(format!(
                "matrix of shape {}x{} does not match layout {layout}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let herm = linalg::hermiticity_residual(&matrix);
        if herm > NORM_TOL {
            return Err(Error::Validity(format!("operator is not Hermitian (residual {herm:e})")));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::Validity(format!("trace {tr} is not 1")));
        }
        let min_eig = linalg::hermitian_eigenvalues(&matrix).first().copied().unwrap_or(0.0);
        if min_eig < -POSITIVITY_TOL {
            return Err(Error::Validity(format!("negative eigenvalue {min_eig:e}")));
        }
        Ok(Self { layout, matrix })
    }

    /// `I / d` on `layout`.
    pub fn maximally_mixed(layout: SubsystemLayout) -> Self {
        let n = layout.total_dim();
        Self { layout, matrix: linalg::identity(n).scale(1.0 / n as f64) }
    }

    pub fn layout(&self) -> &SubsystemLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn tensor(&self, other: &DensityOperator) -> Result<DensityOperator> {
        Ok(DensityOperator {
            layout: self.layout.concat(&other.layout)?,
            matrix: linalg::kron(&self.matrix, &other.matrix),
        })
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::hermitian_eigenvalues(&self.matrix)
    }
}

/// `|Ψ⟩ = Σ_j |jj⟩ / √d` on a two-factor layout `(A, B)`.
pub fn max_entangled(d: usize) -> Result<StateVector> {
    max_entangled_on("A", "B", d)
}

/// [`max_entangled`] with caller-chosen factor labels.
pub fn max_entangled_on(first: &str, second: &str, d: usize) -> Result<StateVector> {
    if d == 0 {
        return Err(Error::InvalidDimension("maximally entangled state needs d >= 1".into()));
    }
    let layout = SubsystemLayout::new(&[(first, d), (second, d)])?;
    let mut amps = CVector::zeros(d * d);
    let w = 1.0 / (d as f64).sqrt();
    for j in 0..d {
        amps[j * d + j] = c(w, 0.0);
    }
    Ok(StateVector { layout, amplitudes: amps })
}

/// Reduced operator on `keep`, factor order preserved.
pub fn partial_trace<S: AsRef<str>>(rho: &DensityOperator, keep: &[S]) -> Result<DensityOperator> {
    let layout = rho.layout.restrict(keep)?;
    let (kept, rest) = rho.layout.split_offsets(keep)?;
    let n = kept.len();
    let mut out = CMatrix::zeros(n, n);
    for &t in &rest {
        for (i, &ki) in kept.iter().enumerate() {
            for (j, &kj) in kept.iter().enumerate() {
                out[(i, j)] += rho.matrix[(ki + t, kj + t)];
            }
        }
    }
    Ok(DensityOperator { layout, matrix: out })
}

/// Von Neumann entropy in bits.
pub fn von_neumann_entropy(rho: &DensityOperator) -> Result<f64> {
    let anti = linalg::hermiticity_residual(&rho.matrix) * 0.5;
    if anti > HERMITIAN_TOL {
        return Err(Error::Validity(format!("anti-Hermitian part {anti:e} exceeds tolerance")));
    }
    Ok(entropy_of_spectrum(&rho.eigenvalues()))
}

/// Entropy of entanglement of `psi` across `cut | complement`.
pub fn entanglement_entropy<S: AsRef<str>>(psi: &StateVector, cut: &[S]) -> Result<f64> {
    let rest = psi.layout.complement(cut)?;
    if cut.is_empty() || rest.is_empty() {
        return Err(Error::InvalidCut("cut must be a nonempty proper subset of the factors".into()));
    }
    pure_cut_entropy(&psi.layout, &psi.amplitudes, cut)
}

/// Haar-random pure state, deterministic in `seed`.
pub fn random_state(layout: &SubsystemLayout, seed: u64) -> StateVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = linalg::gaussian_vector(layout.total_dim(), &mut rng);
    let norm = v.norm();
    StateVector { layout: layout.clone(), amplitudes: v / c(norm, 0.0) }
}
