//! The channel `Φ_χ(ρ) = Tr_{A_U}[U(ρ ⊗ |χ⟩⟨χ|)U†]` a gate induces from
//! Alice's `A_U` to Bob's `B_U ⊗ B_anc`, and its entanglement-assisted
//! capacity `max_ρ S(ρ) + S(Φ(ρ)) − S((Φ⊗I)|ψ⟩⟨ψ|)`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::capacities::{self, CapacityReport, Direction, B_ANC};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector};
use crate::optimize::{self, OptimizerConfig};
use crate::qstate::{self, entropy_of_spectrum, DensityOperator, FactorOp, StateVector, SubsystemLayout};
use crate::unitary::{BipartiteGate, A_U, B_U};

/// Label of the purifying reference system.
pub const REFERENCE: &str = "R";
/// Tolerance on `Σ K†K = I`.
pub const COMPLETENESS_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct InducedChannel {
    gate: BipartiteGate,
    chi: StateVector,
    kraus: Vec<CMatrix>,
}

/// `K_i = (⟨i|_{A_U} ⊗ I) U (I ⊗ |χ⟩)`, one per basis state of `A_U`.
fn kraus_operators(gate: &BipartiteGate, chi: &CVector, b_anc: usize) -> Result<Vec<CMatrix>> {
    let (d_a, d_b) = (gate.d_a(), gate.d_b());
    let out = d_b * b_anc;
    let layout = SubsystemLayout::new(&[(A_U, d_a), (B_U, d_b), (B_ANC, b_anc)])?;
    let op = FactorOp::new(&layout, gate.matrix().clone(), &[A_U, B_U])?;
    let mut kraus = vec![CMatrix::zeros(out, d_a); d_a];
    for a in 0..d_a {
        let mut input = CVector::zeros(d_a * out);
        input.rows_mut(a * out, out).copy_from(chi);
        let image = op.apply(&input);
        for (i, k) in kraus.iter_mut().enumerate() {
            k.set_column(a, &image.rows(i * out, out));
        }
    }
    Ok(kraus)
}

pub fn induce_channel(gate: &BipartiteGate, chi: &StateVector) -> Result<InducedChannel> {
    let layout = chi.layout();
    if layout.labels() != [B_U, B_ANC] || layout.dims()[0] != gate.d_b() {
        return Err(Error::Layout(format!("expected chi on (B_U:{}, B_anc), got {layout}", gate.d_b())));
    }
    let kraus = kraus_operators(gate, chi.amplitudes(), layout.dims()[1])?;
    Ok(InducedChannel { gate: gate.clone(), chi: chi.clone(), kraus })
}

impl InducedChannel {
    pub fn gate(&self) -> &BipartiteGate {
        &self.gate
    }

    pub fn chi(&self) -> &StateVector {
        &self.chi
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn input_dim(&self) -> usize {
        self.gate.d_a()
    }

    pub fn output_layout(&self) -> &SubsystemLayout {
        self.chi.layout()
    }

    /// `max ‖Σ K†K − I‖`.
    pub fn completeness_residual(&self) -> f64 {
        let d = self.input_dim();
        let sum = self.kraus.iter().fold(CMatrix::zeros(d, d), |acc, k| acc + k.adjoint() * k);
        linalg::max_abs(&(sum - linalg::identity(d)))
    }
}

fn check_input(ch: &InducedChannel, rho: &DensityOperator) -> Result<()> {
    let n = rho.layout().total_dim();
    if n != ch.input_dim() {
        return Err(Error::Layout(format!("channel input has dimension {}, rho has {n}", ch.input_dim())));
    }
    Ok(())
}

fn apply_kraus(kraus: &[CMatrix], rho: &CMatrix) -> CMatrix {
    let n = kraus[0].nrows();
    kraus.iter().fold(CMatrix::zeros(n, n), |acc, k| acc + k * rho * k.adjoint())
}

/// `Σ K ρ K†` on `(B_U, B_anc)`.
pub fn apply_channel(ch: &InducedChannel, rho: &DensityOperator) -> Result<DensityOperator> {
    check_input(ch, rho)?;
    let out = apply_kraus(&ch.kraus, rho.matrix());
    DensityOperator::new(ch.output_layout().clone(), linalg::hermitian_part(&out))
}

/// `Tr_{A_U}[U(ρ ⊗ |χ⟩⟨χ|)U†]` evaluated on the full space.
pub fn apply_channel_direct(ch: &InducedChannel, rho: &DensityOperator) -> Result<DensityOperator> {
    check_input(ch, rho)?;
    let input = DensityOperator::new(SubsystemLayout::new(&[(A_U, ch.input_dim())])?, rho.matrix().clone())?;
    let joint = input.tensor(&ch.chi.density())?;
    let u = crate::unitary::embed(&ch.gate, joint.layout())?;
    let evolved = &u * joint.matrix() * u.adjoint();
    let out = DensityOperator::new(joint.layout().clone(), linalg::hermitian_part(&evolved))?;
    qstate::partial_trace(&out, &[B_U, B_ANC])
}

fn entropy(m: &CMatrix) -> f64 {
    entropy_of_spectrum(&linalg::hermitian_eigenvalues(m))
}

/// `Σ_i √λ_i |e_i⟩|i⟩` on `(A_U, R)`, with each eigenvector's largest
/// component made real and positive.
pub fn purification(rho: &DensityOperator) -> Result<StateVector> {
    let d = rho.layout().total_dim();
    let (values, vectors) = linalg::hermitian_eigh(rho.matrix());
    let mut amps = CVector::zeros(d * d);
    for (i, lambda) in values.iter().enumerate() {
        let mut e = vectors.column(i).into_owned();
        let mut top = 0;
        for k in 1..d {
            if e[k].norm() > e[top].norm() {
                top = k;
            }
        }
        let phase = e[top] / c(e[top].norm(), 0.0);
        e /= phase;
        let w = lambda.max(0.0).sqrt();
        for a in 0..d {
            amps[a * d + i] = e[a] * w;
        }
    }
    StateVector::normalized(SubsystemLayout::new(&[(A_U, d), (REFERENCE, d)])?, amps)
}

/// `S(ρ) + S(Φ(ρ)) − S((Φ⊗I)|ψ⟩⟨ψ|)` with `|ψ⟩` the purification of `ρ`.
pub fn ce_objective(ch: &InducedChannel, rho: &DensityOperator) -> Result<f64> {
    check_input(ch, rho)?;
    let psi = purification(rho)?;
    let d = ch.input_dim();
    let out = ch.kraus[0].nrows();
    // (K ⊗ I)|ψ⟩ reshaped is K·M with M the d×d amplitude matrix of ψ.
    let m = CMatrix::from_row_slice(d, d, psi.amplitudes().as_slice());
    let mut joint = CMatrix::zeros(out * d, out * d);
    for k in &ch.kraus {
        let img = k * &m;
        let v = CVector::from_row_slice(img.transpose().as_slice());
        joint += &v * v.adjoint();
    }
    let s_out = entropy(&apply_kraus(&ch.kraus, rho.matrix()));
    Ok(entropy(rho.matrix()) + s_out - entropy(&joint))
}

/// `Φ^c(ρ)_{ij} = Tr(K_i ρ K_j†)`, the state of the discarded `A_U`.
fn complementary(kraus: &[CMatrix], rho: &CMatrix) -> CMatrix {
    let n = kraus.len();
    let images: Vec<CMatrix> = kraus.iter().map(|k| k * rho).collect();
    CMatrix::from_fn(n, n, |i, j| (&images[i] * kraus[j].adjoint()).trace())
}

fn objective_stinespring(kraus: &[CMatrix], rho: &CMatrix) -> f64 {
    entropy(rho) + entropy(&apply_kraus(kraus, rho)) - entropy(&complementary(kraus, rho))
}

/// [`ce_objective`] through a Stinespring dilation: the joint output entropy
/// equals the entropy of the environment.
pub fn ce_objective_stinespring(ch: &InducedChannel, rho: &DensityOperator) -> Result<f64> {
    check_input(ch, rho)?;
    Ok(objective_stinespring(&ch.kraus, rho.matrix()))
}

/// `ρ = L L† / Tr(L L†)` with `L` lower triangular: the diagonal from the first
/// `d` coordinates, then real and imaginary parts below the diagonal.
fn density_from_coords(d: usize, x: &[f64]) -> CMatrix {
    let mut l = CMatrix::zeros(d, d);
    for i in 0..d {
        l[(i, i)] = c(x[i], 0.0);
    }
    let mut k = d;
    for i in 0..d {
        for j in 0..i {
            l[(i, j)] = c(x[k], x[k + 1]);
            k += 2;
        }
    }
    let rho = &l * l.adjoint();
    let tr = rho.trace().re;
    if tr > 0.0 {
        rho / c(tr, 0.0)
    } else {
        linalg::identity(d) / c(d as f64, 0.0)
    }
}

fn identity_coords(d: usize) -> Vec<f64> {
    let mut x = vec![0.0; d * d];
    x[..d].fill(1.0);
    x
}

fn rescale_diagonal(x: &mut [f64], d: usize) -> bool {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 && !(0.5..=2.0 * (d as f64).sqrt()).contains(&norm) {
        x.iter_mut().for_each(|v| *v /= norm);
        return true;
    }
    false
}

/// Maximizes [`ce_objective`] over input states, ascending from `I/d`.
pub fn ce_capacity(ch: &InducedChannel, config: &OptimizerConfig) -> Result<CapacityReport> {
    config.validate()?;
    let d = ch.input_dim();
    let f = |x: &[f64]| objective_stinespring(&ch.kraus, &density_from_coords(d, x));
    let single = OptimizerConfig { restarts: 1, ..config.clone() };
    let out =
        optimize::multistart(&single, &[identity_coords(d)], |_| identity_coords(d), f, |x| rescale_diagonal(x, d));
    let rho = DensityOperator::new(
        SubsystemLayout::new(&[(A_U, d)])?,
        linalg::hermitian_part(&density_from_coords(d, &out.best.x)),
    )?;
    Ok(CapacityReport {
        value: out.best.value.max(0.0),
        argmax_state: purification(&rho)?,
        argmax_local: Some(ch.chi.clone()),
        argmax_unitary: None,
        argmax_density: Some(rho),
        converged: out.converged,
        restarts_used: out.values.len(),
        ancilla_dims: (d, ch.output_layout().dims()[1]),
    })
}

/// Lower bound on `sup_χ C_E(Φ_χ)`: joint ascent over `(χ, ρ)`, warm-started at
/// the `E_U^{Ψ,→}` optimum, then a final [`ce_capacity`] on the best channel.
pub fn chi_c_lower_bound(gate: &BipartiteGate, config: &OptimizerConfig) -> Result<CapacityReport> {
    config.validate()?;
    let (d_a, d_b) = (gate.d_a(), gate.d_b());
    let b_anc = config.b_anc(d_b);
    let m = d_b * b_anc;
    let split = 2 * m;
    let total = split + d_a * d_a;
    let chi_layout = SubsystemLayout::new(&[(B_U, d_b), (B_ANC, b_anc)])?;

    let forward = capacities::e_u_psi_onesided(gate, Direction::Forward, config)?;
    let chi0 = forward.argmax_local.expect("one-sided report carries the free input");
    let mut warm = vec![[optimize::coords_from_state(chi0.amplitudes()), identity_coords(d_a)].concat()];
    if b_anc == d_b {
        let psi = qstate::max_entangled(d_b)?.into_amplitudes();
        warm.push([optimize::coords_from_state(&psi), identity_coords(d_a)].concat());
    }

    let f = |x: &[f64]| {
        let chi = optimize::state_from_coords(&x[..split]);
        let kraus = kraus_operators(gate, &chi, b_anc).expect("layout fixed above");
        objective_stinespring(&kraus, &density_from_coords(d_a, &x[split..]))
    };
    let init = |r: &mut ChaCha8Rng| {
        let mut x = optimize::random_coords(r, m);
        x.extend((0..d_a * d_a).map(|_| r.sample::<f64, _>(StandardNormal)));
        x
    };
    let out = optimize::multistart(config, &warm, init, f, |x| {
        let mut changed = optimize::renormalize_blocks(x, &[0..split]);
        changed |= rescale_diagonal(&mut x[split..total], d_a);
        changed
    });

    let chi = StateVector::normalized(chi_layout, optimize::state_from_coords(&out.best.x[..split]))?;
    let ch = induce_channel(gate, &chi)?;
    let mut polished = ce_capacity(&ch, config)?;
    if polished.value < out.best.value {
        let rho = DensityOperator::new(
            SubsystemLayout::new(&[(A_U, d_a)])?,
            linalg::hermitian_part(&density_from_coords(d_a, &out.best.x[split..])),
        )?;
        polished.value = out.best.value;
        polished.argmax_state = purification(&rho)?;
        polished.argmax_density = Some(rho);
    }
    polished.converged = out.converged;
    polished.restarts_used = out.values.len();
    Ok(polished)
}
