//! Holevo information and the explicit signalling ensembles built from a gate.
//!
//! Ensembles hold pure members on one shared layout. Gates are only ever
//! embedded on `A_U ⊗ B_U`, so operations on the extra register `B_2` commute
//! with them by construction.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacities::{A_ANC, B_ANC};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector};
use crate::qstate::{self, entropy_of_spectrum, DensityOperator, FactorOp, StateVector, SubsystemLayout};
use crate::unitary::{self, weyl_set, BipartiteGate, A_U, B_U};

/// Bob's extra register.
pub const B_2: &str = "B_2";
/// Residual below which a condition counts as satisfied.
pub const CONDITION_TOL: f64 = 1e-9;
/// Bob's factors in the dense and phased ensembles.
pub const BOB_WITH_B2: [&str; 3] = [B_U, B_ANC, B_2];

const PROBABILITY_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct Ensemble {
    layout: SubsystemLayout,
    members: Vec<(f64, StateVector)>,
}

/// One ensemble member in the JSON dump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemberRecord {
    pub probability: f64,
    pub amplitudes: Vec<[f64; 2]>,
}

impl Ensemble {
    pub fn new(members: Vec<(f64, StateVector)>) -> Result<Self> {
        let Some((_, first)) = members.first() else {
            return Err(Error::InvalidEnsemble("ensemble has no members".into()));
        };
        let layout = first.layout().clone();
        let mut total = 0.0;
        for (p, s) in &members {
            if !p.is_finite() || *p < 0.0 {
                return Err(Error::InvalidEnsemble(format!("probability {p} is not a valid weight")));
            }
            if s.layout() != &layout {
                return Err(Error::InvalidEnsemble(format!("member on {} but ensemble on {layout}", s.layout())));
            }
            total += p;
        }
        if (total - 1.0).abs() > PROBABILITY_TOL {
            return Err(Error::InvalidEnsemble(format!("probabilities sum to {total}")));
        }
        Ok(Self { layout, members })
    }

    /// Equiprobable ensemble of `states`.
    pub fn uniform(states: Vec<StateVector>) -> Result<Self> {
        let p = 1.0 / states.len().max(1) as f64;
        Self::new(states.into_iter().map(|s| (p, s)).collect())
    }

    pub fn layout(&self) -> &SubsystemLayout {
        &self.layout
    }

    pub fn members(&self) -> &[(f64, StateVector)] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Applies `op` on `targets` to every member.
    pub fn apply<S: AsRef<str>>(&self, op: &CMatrix, targets: &[S]) -> Result<Self> {
        let bound = FactorOp::new(&self.layout, op.clone(), targets)?;
        self.map(|amps| bound.apply(amps))
    }

    /// Applies the gate on `A_U ⊗ B_U` to every member.
    pub fn apply_gate(&self, gate: &BipartiteGate) -> Result<Self> {
        self.apply(gate.matrix(), &[A_U, B_U])
    }

    fn map(&self, f: impl Fn(&CVector) -> CVector + Sync) -> Result<Self> {
        let members = self
            .members
            .par_iter()
            .map(|(p, s)| Ok((*p, StateVector::normalized(self.layout.clone(), f(s.amplitudes()))?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { layout: self.layout.clone(), members })
    }

    /// Average state reduced to `keep`.
    pub fn average<S: AsRef<str> + Sync>(&self, keep: &[S]) -> Result<DensityOperator> {
        let sub = self.layout.restrict(keep)?;
        let parts = self.reduced_members(keep)?;
        let n = sub.total_dim();
        let avg = parts.iter().fold(CMatrix::zeros(n, n), |acc, (p, m)| acc + m * c(*p, 0.0));
        DensityOperator::new(sub, linalg::hermitian_part(&avg))
    }

    fn reduced_members<S: AsRef<str> + Sync>(&self, keep: &[S]) -> Result<Vec<(f64, CMatrix)>> {
        self.members
            .par_iter()
            .map(|(p, s)| Ok((*p, qstate::reduced_matrix(&self.layout, s.amplitudes(), keep)?)))
            .collect()
    }

    /// Matrix of inner products `⟨m_i|m_j⟩`.
    pub fn gram(&self) -> CMatrix {
        let n = self.members.len();
        CMatrix::from_fn(n, n, |i, j| self.members[i].1.inner(&self.members[j].1))
    }

    pub fn dump(&self) -> Vec<MemberRecord> {
        self.members
            .iter()
            .map(|(p, s)| MemberRecord {
                probability: *p,
                amplitudes: s.amplitudes().iter().map(|z| [z.re, z.im]).collect(),
            })
            .collect()
    }
}

fn matrix_entropy(m: &CMatrix) -> f64 {
    entropy_of_spectrum(&linalg::hermitian_eigenvalues(m))
}

/// `χ = S(ρ̄) − Σ p_j S(ρ_j)` for the members reduced to `keep`, in bits.
pub fn holevo<S: AsRef<str> + Sync>(ens: &Ensemble, keep: &[S]) -> Result<f64> {
    let parts = ens.reduced_members(keep)?;
    let n = parts[0].1.nrows();
    let avg = parts.iter().fold(CMatrix::zeros(n, n), |acc, (p, m)| acc + m * c(*p, 0.0));
    let member_entropies: Vec<f64> = parts.par_iter().map(|(_, m)| matrix_entropy(m)).collect();
    let mean: f64 = parts.iter().zip(&member_entropies).map(|((p, _), s)| p * s).sum();
    Ok((matrix_entropy(&avg) - mean).max(0.0))
}

fn psi_amps(d: usize) -> CVector {
    qstate::max_entangled(d).expect("d >= 1").into_amplitudes()
}

fn check_chi(gate: &BipartiteGate, chi: &StateVector) -> Result<usize> {
    let layout = chi.layout();
    if layout.labels() != [B_U, B_ANC] || layout.dims()[0] != gate.d_b() {
        return Err(Error::Layout(format!("expected chi on (B_U:{}, B_anc), got {layout}", gate.d_b())));
    }
    Ok(layout.dims()[1])
}

/// Members `V_j^{A_U} |Ψ⟩_{A_U B_2} |bob⟩` on `(A_U, B_U, B_anc, B_2)`, one per
/// Weyl operator, each first acted on by `prep` (on `A_U ⊗ B_U`) if given.
fn weyl_members(d_a: usize, bob: &StateVector, prep: Option<&CMatrix>) -> Result<Ensemble> {
    let pair = StateVector::new(SubsystemLayout::new(&[(A_U, d_a), (B_2, d_a)])?, psi_amps(d_a))?;
    let base = pair.tensor(bob)?.permuted(&[A_U, B_U, B_ANC, B_2])?;
    let layout = base.layout().clone();
    let prep = prep.map(|u| FactorOp::new(&layout, u.clone(), &[A_U, B_U])).transpose()?;
    let states = weyl_set(d_a)?
        .operators()
        .iter()
        .map(|v| {
            let mut amps = qstate::apply_on_factors(&layout, base.amplitudes(), v, &[A_U])?;
            if let Some(p) = &prep {
                amps = p.apply(&amps);
            }
            StateVector::normalized(layout.clone(), amps)
        })
        .collect::<Result<Vec<_>>>()?;
    Ensemble::uniform(states)
}

/// Dense-coding ensemble `{1/d_a², V_j^{A_U}|Ψ⟩_{A_U B_2}|χ⟩_B}` on
/// `(A_U, B_U, B_anc, B_2)`, before the gate is applied.
pub fn ensemble_dense(gate: &BipartiteGate, chi: &StateVector) -> Result<Ensemble> {
    check_chi(gate, chi)?;
    weyl_members(gate.d_a(), chi, None)
}

/// Ensemble `{1/d_a², U_0 V_j^{A_U}|Ψ⟩_{A_U B_2}|Ψ⟩_B}` and the change in
/// Bob's Holevo information when the gate is applied to it.
pub fn ensemble_dense_delta(gate: &BipartiteGate, u0: &CMatrix) -> Result<(Ensemble, f64)> {
    let n = gate.dim();
    if u0.nrows() != n || u0.ncols() != n {
        return Err(Error::InvalidDimension(format!("U_0 must be {n}x{n}")));
    }
    let residual = linalg::unitarity_residual(u0);
    if residual > unitary::UNITARY_TOL {
        return Err(Error::Validity(format!("U_0 is not unitary (residual {residual:e})")));
    }
    let bob = StateVector::new(SubsystemLayout::new(&[(B_U, gate.d_b()), (B_ANC, gate.d_b())])?, psi_amps(gate.d_b()))?;
    let initial = weyl_members(gate.d_a(), &bob, Some(u0))?;
    let before = holevo(&initial, &BOB_WITH_B2)?;
    let after = holevo(&initial.apply_gate(gate)?, &BOB_WITH_B2)?;
    Ok((initial, after - before))
}

/// Phased ensemble
/// `{1/d², (1/d) Σ_j e^{2πi kj/d²} V_j^A|φ⟩_A V_j^B|χ⟩_B |j⟩_{B_2}}`, `k = 0…d²−1`,
/// on `(A_anc, A_U, B_U, B_anc, B_2)`.
///
/// `va` act on `A_anc ⊗ A_U` and `vb` on `B_U` (or `B_U ⊗ B_anc` when their
/// dimension says so).
pub fn ensemble_phased_with(phi: &StateVector, chi: &StateVector, va: &[CMatrix], vb: &[CMatrix]) -> Result<Ensemble> {
    if phi.layout().labels() != [A_ANC, A_U] {
        return Err(Error::Layout(format!("expected phi on (A_anc, A_U), got {}", phi.layout())));
    }
    if chi.layout().labels() != [B_U, B_ANC] {
        return Err(Error::Layout(format!("expected chi on (B_U, B_anc), got {}", chi.layout())));
    }
    let d_a = phi.layout().dims()[1];
    let m = d_a * d_a;
    if va.len() != m || vb.len() != m {
        return Err(Error::Layout(format!("need {m} operators per side, got {} and {}", va.len(), vb.len())));
    }
    let b_targets: &[&str] = if vb[0].nrows() == chi.layout().dims()[0] { &[B_U] } else { &[B_U, B_ANC] };
    let register = SubsystemLayout::new(&[(B_2, m)])?;
    let layout = phi.layout().concat(chi.layout())?.concat(&register)?;
    let branches = va
        .iter()
        .zip(vb)
        .map(|(a, b)| Ok(phi.apply(a, &[A_ANC, A_U])?.tensor(&chi.apply(b, b_targets)?)?.into_amplitudes()))
        .collect::<Result<Vec<CVector>>>()?;
    let scale = 1.0 / d_a as f64;
    let states = (0..m)
        .map(|k| {
            let mut amps = CVector::zeros(layout.total_dim());
            for (j, branch) in branches.iter().enumerate() {
                let phase = 2.0 * PI * (k * j) as f64 / m as f64;
                let w = c(phase.cos(), phase.sin()) * scale;
                for (idx, z) in branch.iter().enumerate() {
                    amps[idx * m + j] += w * z;
                }
            }
            StateVector::normalized(layout.clone(), amps)
        })
        .collect::<Result<Vec<_>>>()?;
    Ensemble::uniform(states)
}

/// [`ensemble_phased_with`] for `|φ⟩ = |Ψ⟩_A`, Weyl operators on `A_anc` and
/// nothing on Bob's side.
pub fn ensemble_phased(gate: &BipartiteGate, chi: &StateVector) -> Result<Ensemble> {
    check_chi(gate, chi)?;
    let d_a = gate.d_a();
    let phi = StateVector::new(SubsystemLayout::new(&[(A_ANC, d_a), (A_U, d_a)])?, psi_amps(d_a))?;
    let id = linalg::identity(d_a);
    let va: Vec<CMatrix> = weyl_set(d_a)?.operators().iter().map(|v| linalg::kron(v, &id)).collect();
    let vb = vec![linalg::identity(gate.d_b()); va.len()];
    ensemble_phased_with(&phi, chi, &va, &vb)
}

/// Residuals of the conditions a construction relies on.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub gram_residual: f64,
    pub intertwine_residual: f64,
    pub satisfied: bool,
}

impl ConditionReport {
    pub fn new(gram_residual: f64, intertwine_residual: f64) -> Self {
        let satisfied = gram_residual < CONDITION_TOL && intertwine_residual < CONDITION_TOL;
        Self { gram_residual, intertwine_residual, satisfied }
    }
}

/// Orthonormality of `V_j|φ⟩`: the larger of the Gram and completeness
/// residuals.
pub fn check_con1(v_list: &[CMatrix], phi: &StateVector) -> Result<f64> {
    let n = phi.layout().total_dim();
    if v_list.len() != n {
        return Err(Error::Layout(format!("need {n} operators for a state of dimension {n}, got {}", v_list.len())));
    }
    let mut images = CMatrix::zeros(n, n);
    for (j, v) in v_list.iter().enumerate() {
        if v.nrows() != n || v.ncols() != n {
            return Err(Error::Layout(format!("operator {j} is not {n}x{n}")));
        }
        images.set_column(j, &(v * phi.amplitudes()));
    }
    let gram = images.adjoint() * &images;
    let completeness = &images * images.adjoint();
    let id = linalg::identity(n);
    Ok(linalg::max_abs(&(gram - &id)).max(linalg::max_abs(&(completeness - id))))
}

/// `max_j ‖U(V_j^A⊗V_j^B) − (U_j^A⊗U_j^B)U‖_max`. Alice's operators act on
/// `A_U` or `A_anc ⊗ A_U`, Bob's on `B_U` or `B_U ⊗ B_anc`, as their
/// dimensions indicate.
pub fn check_con2(gate: &BipartiteGate, va: &[CMatrix], vb: &[CMatrix], ua: &[CMatrix], ub: &[CMatrix]) -> Result<f64> {
    let len = va.len();
    if vb.len() != len || ua.len() != len || ub.len() != len || len == 0 {
        return Err(Error::Layout("operator lists must be nonempty and of equal length".into()));
    }
    let side = |ops: &[CMatrix], d: usize, name: &str| -> Result<usize> {
        let dim = ops[0].nrows();
        if dim == 0 || !dim.is_multiple_of(d) || ops.iter().any(|o| o.nrows() != dim || o.ncols() != dim) {
            return Err(Error::Layout(format!(
                "{name} operators must be square of a common dimension divisible by {d}"
            )));
        }
        Ok(dim / d)
    };
    let a_anc = side(va, gate.d_a(), "Alice")?;
    let b_anc = side(vb, gate.d_b(), "Bob")?;
    if side(ua, gate.d_a(), "Alice")? != a_anc || side(ub, gate.d_b(), "Bob")? != b_anc {
        return Err(Error::Layout("V and U lists act on different factors".into()));
    }
    let layout = SubsystemLayout::new(&[(A_ANC, a_anc), (A_U, gate.d_a()), (B_U, gate.d_b()), (B_ANC, b_anc)])?;
    let u = unitary::embed(gate, &layout)?;
    let mut worst: f64 = 0.0;
    for j in 0..len {
        let v = linalg::kron(&va[j], &vb[j]);
        let w = linalg::kron(&ua[j], &ub[j]);
        worst = worst.max(linalg::max_abs(&(&u * v - w * &u)));
    }
    Ok(worst)
}

/// Twirl residual `max_{a,b} ‖Σ_j V_j† E_ab V_j − δ_ab (n/d) I‖_max` over the
/// matrix units `E_ab`; zero iff `Σ_j V_j† ρ V_j ∝ I` for every `ρ`.
pub fn check_con3(v_list: &[CMatrix]) -> Result<f64> {
    let Some(first) = v_list.first() else {
        return Err(Error::Layout("empty operator list".into()));
    };
    let d = first.nrows();
    if v_list.iter().any(|v| v.nrows() != d || v.ncols() != d) {
        return Err(Error::Layout("operators must share one square shape".into()));
    }
    let scale = v_list.len() as f64 / d as f64;
    let mut worst: f64 = 0.0;
    for a in 0..d {
        for b in 0..d {
            let mut sum = CMatrix::zeros(d, d);
            for v in v_list {
                // V† E_ab V = (row a of V)† ⊗ (row b of V).
                let ra = v.row(a);
                let rb = v.row(b);
                sum += ra.adjoint() * rb;
            }
            if a == b {
                for k in 0..d {
                    sum[(k, k)] -= c(scale, 0.0);
                }
            }
            worst = worst.max(linalg::max_abs(&sum));
        }
    }
    Ok(worst)
}

/// Operator lists from the two-qubit construction.
#[derive(Clone, Debug)]
pub struct VjkSets {
    /// `V_{jk}^A = V_b^k V_a^j ⊗ σ_y^j` on `A_anc ⊗ A_U`, index `2j + k`.
    pub va: Vec<CMatrix>,
    /// `V_{jk}^B = σ_y^j` on `B_U`.
    pub vb: Vec<CMatrix>,
}

/// Outcome of [`two_qubit_vjk`].
#[derive(Clone, Debug)]
pub enum VjkOutcome {
    Built(VjkSets),
    /// `⟨ψ_0|ψ_1⟩` has an imaginary part, so `V_a` would not be unitary.
    NotRepresentable {
        imaginary_part: f64,
    },
}

fn bloch(v: &CVector) -> [f64; 3] {
    let x = v[0].conj() * v[1];
    [2.0 * x.re, 2.0 * x.im, v[0].norm_sqr() - v[1].norm_sqr()]
}

fn pauli_dot(n: [f64; 3]) -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(n[2], 0.0), c(n[0], -n[1]), c(n[0], n[1]), c(-n[2], 0.0)])
}

fn perp(v: &CVector) -> CVector {
    CVector::from_vec(vec![-v[1].conj(), v[0].conj()])
}

/// Splits `φ = λ_0|ψ_0⟩|0⟩ + λ_1|ψ_1⟩|1⟩` (computational basis on `A_U`) and
/// builds the `V_{jk}` sets when `⟨ψ_0|ψ_1⟩` is real.
pub fn two_qubit_vjk(phi: &StateVector) -> Result<VjkOutcome> {
    let layout = phi.layout();
    if layout.labels() != [A_ANC, A_U] || layout.dims() != [2, 2] {
        return Err(Error::Layout(format!("expected phi on (A_anc:2, A_U:2), got {layout}")));
    }
    let amps = phi.amplitudes();
    let branch = |u: usize| CVector::from_vec(vec![amps[u], amps[2 + u]]);
    let (a0, a1) = (branch(0), branch(1));
    let (l0, l1) = (a0.norm(), a1.norm());
    const NEGLIGIBLE: f64 = 1e-9;
    let (psi0, psi1) = if l0 < NEGLIGIBLE {
        let p1 = &a1 / c(l1, 0.0);
        (perp(&p1), p1)
    } else if l1 < NEGLIGIBLE {
        let p0 = &a0 / c(l0, 0.0);
        let p1 = perp(&p0);
        (p0, p1)
    } else {
        (&a0 / c(l0, 0.0), &a1 / c(l1, 0.0))
    };
    let overlap = psi0.dotc(&psi1);
    if overlap.im.abs() > NEGLIGIBLE {
        return Ok(VjkOutcome::NotRepresentable { imaginary_part: overlap.im });
    }

    let id = linalg::identity(2);
    let diff = &psi0 - &psi1;
    let va_anc = if diff.norm() < NEGLIGIBLE {
        id.clone()
    } else {
        let t = &diff / c(diff.norm(), 0.0);
        &id - (&t * t.adjoint()) * c(2.0, 0.0)
    };

    let (r0, r1) = (bloch(&psi0), bloch(&psi1));
    let cross = [r0[1] * r1[2] - r0[2] * r1[1], r0[2] * r1[0] - r0[0] * r1[2], r0[0] * r1[1] - r0[1] * r1[0]];
    let cross_norm = cross.iter().map(|x| x * x).sum::<f64>().sqrt();
    let n = if cross_norm > NEGLIGIBLE {
        cross.map(|x| x / cross_norm)
    } else {
        let mut axis = 0;
        for k in 1..3 {
            if r0[k].abs() < r0[axis].abs() {
                axis = k;
            }
        }
        let mut e = [0.0; 3];
        e[axis] = 1.0;
        let proj = r0[axis];
        let v = [e[0] - proj * r0[0], e[1] - proj * r0[1], e[2] - proj * r0[2]];
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.map(|x| x / norm)
    };
    let vb_anc = pauli_dot(n);

    let sy = linalg::paulis()[2].clone();
    let mut va = Vec::with_capacity(4);
    let mut vb = Vec::with_capacity(4);
    for j in 0..2 {
        for k in 0..2 {
            let mut anc = id.clone();
            if j == 1 {
                anc = &va_anc * anc;
            }
            if k == 1 {
                anc = &vb_anc * anc;
            }
            let y = if j == 1 { sy.clone() } else { id.clone() };
            va.push(linalg::kron(&anc, &y));
            vb.push(y);
        }
    }
    Ok(VjkOutcome::Built(VjkSets { va, vb }))
}

/// Holevo increase on Alice's side `(A_anc, A_U)` when `U†` acts on the
/// ensemble `{1/d_a², (U_j^A ⊗ U_j^B)† |ψ⟩}`.
///
/// `va` (on `A_U`) must twirl to a multiple of the identity and the lists
/// must intertwine with the gate; otherwise a precondition error carries the
/// offending residual.
pub fn delta_ensemble_con34(
    gate: &BipartiteGate,
    psi: &StateVector,
    va: &[CMatrix],
    vb: &[CMatrix],
    ua: &[CMatrix],
    ub: &[CMatrix],
) -> Result<f64> {
    let layout = psi.layout();
    if layout.labels() != [A_ANC, A_U, B_U, B_ANC] {
        return Err(Error::Layout(format!("expected psi on (A_anc, A_U, B_U, B_anc), got {layout}")));
    }
    let m = gate.d_a() * gate.d_a();
    if va.len() != m {
        return Err(Error::Layout(format!("need {m} operators, got {}", va.len())));
    }
    if va[0].nrows() != gate.d_a() || vb[0].nrows() != gate.d_b() {
        return Err(Error::Layout("operators must act on A_U and B_U".into()));
    }
    let con3 = check_con3(va)?;
    if con3 >= CONDITION_TOL {
        return Err(Error::Precondition { what: "twirl condition on V^A".into(), residual: con3 });
    }
    let con4 = check_con2(gate, va, vb, ua, ub)?;
    if con4 >= CONDITION_TOL {
        return Err(Error::Precondition { what: "intertwining condition".into(), residual: con4 });
    }
    let states = ua
        .iter()
        .zip(ub)
        .map(|(a, b)| psi.apply(&linalg::kron(a, b).adjoint(), &[A_U, B_U]))
        .collect::<Result<Vec<_>>>()?;
    let ens = Ensemble::uniform(states)?;
    let alice = [A_ANC, A_U];
    let before = holevo(&ens, &alice)?;
    let after = holevo(&ens.apply(&gate.matrix().adjoint(), &[A_U, B_U])?, &alice)?;
    Ok(after - before)
}
