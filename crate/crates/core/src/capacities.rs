//! Entangling capacities of a bipartite gate.
//!
//! Inputs live on the four-factor layout `(A_anc, A_U, B_U, B_anc)`; Alice
//! holds `A_anc ⊗ A_U`. `E_U^Ψ` is computed exactly, everything else is a
//! multi-start maximization whose reported value is a lower bound on the
//! supremum.

use std::f64::consts::FRAC_PI_4;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, CVector};
use crate::optimize::{self, OptimizerConfig};
use crate::qstate::{Cut, DensityOperator, FactorOp, StateVector, SubsystemLayout};
use crate::unitary::{self, gate_zz, BipartiteGate, A_U, B_U};

pub const A_ANC: &str = "A_anc";
pub const B_ANC: &str = "B_anc";
/// Alice's factors in the standard layout.
pub const ALICE: [&str; 2] = [A_ANC, A_U];
/// Largest allowed disagreement between the two `E_U^Ψ` routes.
pub const ROUTE_AGREEMENT: f64 = 1e-9;

/// Which party is frozen at `|Ψ⟩` in the one-sided capacities.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// `→`: Alice holds `|Ψ⟩`, Bob's input is optimized.
    Forward,
    /// `←`: Bob holds `|Ψ⟩`, Alice's input is optimized.
    Backward,
}

/// `(A_anc, A_U, B_U, B_anc)` with the given dimensions.
pub fn standard_layout(a_anc: usize, d_a: usize, d_b: usize, b_anc: usize) -> Result<SubsystemLayout> {
    SubsystemLayout::new(&[(A_ANC, a_anc), (A_U, d_a), (B_U, d_b), (B_ANC, b_anc)])
}

fn psi_amps(d: usize) -> CVector {
    let mut v = CVector::zeros(d * d);
    let w = 1.0 / (d as f64).sqrt();
    for j in 0..d {
        v[j * d + j] = c(w, 0.0);
    }
    v
}

#[derive(Clone, Debug)]
pub struct CapacityReport {
    pub value: f64,
    /// The state the gate acts on at the optimum (for `E_U`, the product input).
    pub argmax_state: StateVector,
    /// The optimized one-party input, where there is one.
    pub argmax_local: Option<StateVector>,
    /// The optimal `U_0`, for the `Δ…^Ψ` capacities.
    pub argmax_unitary: Option<CMatrix>,
    /// The optimal input density operator, for channel capacities.
    pub argmax_density: Option<DensityOperator>,
    pub converged: bool,
    pub restarts_used: usize,
    /// `(d_{A_anc}, d_{B_anc})` used by the optimization.
    pub ancilla_dims: (usize, usize),
}

/// Gate bound to the standard layout, with the A:B cut.
struct Setup {
    layout: SubsystemLayout,
    gate_op: FactorOp,
    cut: Cut,
}

impl Setup {
    fn new(gate: &BipartiteGate, a_anc: usize, b_anc: usize) -> Result<Self> {
        let layout = standard_layout(a_anc, gate.d_a(), gate.d_b(), b_anc)?;
        let gate_op = FactorOp::new(&layout, gate.matrix().clone(), &[A_U, B_U])?;
        let cut = Cut::new(&layout, &ALICE)?;
        Ok(Self { layout, gate_op, cut })
    }

    fn entropy(&self, amps: &CVector) -> f64 {
        self.cut.entropy(amps)
    }

    fn entropy_after(&self, amps: &CVector) -> f64 {
        self.cut.entropy(&self.gate_op.apply(amps))
    }

    fn state(&self, amps: CVector) -> Result<StateVector> {
        StateVector::normalized(self.layout.clone(), amps)
    }
}

fn gaussian_reals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn schmidt_entropy_of(d_a: usize, d_b: usize, m: CMatrix) -> f64 {
    unitary::operator_schmidt_entropy(&BipartiteGate::from_parts(d_a, d_b, m))
}

/// `U|Ψ⟩_A|Ψ⟩_B` on `(A_anc d_a, A_U d_a, B_U d_b, B_anc d_b)`.
pub fn jamiolkowski_state(gate: &BipartiteGate) -> Result<StateVector> {
    let s = Setup::new(gate, gate.d_a(), gate.d_b())?;
    let input = psi_amps(gate.d_a()).kronecker(&psi_amps(gate.d_b()));
    s.state(s.gate_op.apply(&input))
}

/// Entropy across A:B of the Jamiołkowski state.
pub fn jamiolkowski_entropy(gate: &BipartiteGate) -> Result<f64> {
    let s = Setup::new(gate, gate.d_a(), gate.d_b())?;
    let input = psi_amps(gate.d_a()).kronecker(&psi_amps(gate.d_b()));
    Ok(s.entropy_after(&input))
}

/// `E_U^Ψ`, evaluated through the Jamiołkowski state and through the
/// operator-Schmidt spectrum. The routes must agree to [`ROUTE_AGREEMENT`].
pub fn e_u_psi(gate: &BipartiteGate) -> Result<f64> {
    let direct = jamiolkowski_entropy(gate)?;
    let schmidt = unitary::operator_schmidt_entropy(gate);
    if (direct - schmidt).abs() > ROUTE_AGREEMENT {
        return Err(Error::Validity(format!(
            "E_U^Psi routes disagree: Jamiolkowski {direct} vs operator-Schmidt {schmidt}"
        )));
    }
    Ok(schmidt)
}

fn report(
    value: f64,
    argmax_state: StateVector,
    out: &optimize::MultiStart,
    ancilla_dims: (usize, usize),
) -> CapacityReport {
    CapacityReport {
        value: value.max(0.0),
        argmax_state,
        argmax_local: None,
        argmax_unitary: None,
        argmax_density: None,
        converged: out.converged,
        restarts_used: out.values.len(),
        ancilla_dims,
    }
}

/// `E_U`: maximum of `E(U|φ⟩_A|χ⟩_B)` over product inputs.
pub fn e_u(gate: &BipartiteGate, config: &OptimizerConfig) -> Result<CapacityReport> {
    e_u_seeded(gate, config, &[])
}

/// [`e_u`] with extra product starting points `(φ on (A_anc, A_U), χ on (B_U, B_anc))`.
pub fn e_u_seeded(
    gate: &BipartiteGate,
    config: &OptimizerConfig,
    warm: &[(StateVector, StateVector)],
) -> Result<CapacityReport> {
    config.validate()?;
    let (d_a, d_b) = (gate.d_a(), gate.d_b());
    let (a_anc, b_anc) = (config.a_anc(d_a), config.b_anc(d_b));
    let s = Setup::new(gate, a_anc, b_anc)?;
    let (na, nb) = (a_anc * d_a, d_b * b_anc);
    let split = 2 * na;
    let input =
        |x: &[f64]| optimize::state_from_coords(&x[..split]).kronecker(&optimize::state_from_coords(&x[split..]));
    let f = |x: &[f64]| s.entropy_after(&input(x));
    let mut starts = Vec::new();
    if a_anc == d_a && b_anc == d_b {
        starts
            .push([optimize::coords_from_state(&psi_amps(d_a)), optimize::coords_from_state(&psi_amps(d_b))].concat());
    }
    let alice = SubsystemLayout::new(&[(A_ANC, a_anc), (A_U, d_a)])?;
    let bob = SubsystemLayout::new(&[(B_U, d_b), (B_ANC, b_anc)])?;
    for (phi, chi) in warm {
        if phi.layout() != &alice || chi.layout() != &bob {
            return Err(Error::Layout(format!(
                "warm start on {} and {} but optimizing on {alice} and {bob}",
                phi.layout(),
                chi.layout()
            )));
        }
        starts.push(
            [optimize::coords_from_state(phi.amplitudes()), optimize::coords_from_state(chi.amplitudes())].concat(),
        );
    }
    let total = 2 * (na + nb);
    let out = optimize::multistart(
        config,
        &starts,
        |r| [optimize::random_coords(r, na), optimize::random_coords(r, nb)].concat(),
        f,
        |x| optimize::renormalize_blocks(x, &[0..split, split..total]),
    );
    let x = &out.best.x;
    Ok(report(out.best.value, s.state(input(x))?, &out, (a_anc, b_anc)))
}

/// `ΔE_U`: maximum of `E(U|ψ⟩) − E(|ψ⟩)` over all inputs.
pub fn delta_e_u(gate: &BipartiteGate, config: &OptimizerConfig) -> Result<CapacityReport> {
    delta_e_u_seeded(gate, config, &[])
}

/// [`delta_e_u`] with extra starting points, which must live on the layout
/// the optimization uses.
pub fn delta_e_u_seeded(
    gate: &BipartiteGate,
    config: &OptimizerConfig,
    warm: &[StateVector],
) -> Result<CapacityReport> {
    config.validate()?;
    let (d_a, d_b) = (gate.d_a(), gate.d_b());
    let (a_anc, b_anc) = (config.a_anc(d_a), config.b_anc(d_b));
    let s = Setup::new(gate, a_anc, b_anc)?;
    let n = s.layout.total_dim();
    let mut starts = Vec::new();
    if a_anc == d_a && b_anc == d_b {
        starts.push(optimize::coords_from_state(&psi_amps(d_a).kronecker(&psi_amps(d_b))));
    }
    for w in warm {
        if w.layout() != &s.layout {
            return Err(Error::Layout(format!("warm start on {} but optimizing on {}", w.layout(), s.layout)));
        }
        starts.push(optimize::coords_from_state(w.amplitudes()));
    }
    let f = |x: &[f64]| {
        let psi = optimize::state_from_coords(x);
        s.entropy_after(&psi) - s.entropy(&psi)
    };
    let out = optimize::multistart(
        config,
        &starts,
        |r| optimize::random_coords(r, n),
        f,
        |x| optimize::renormalize_blocks(x, &[0..2 * n]),
    );
    let psi = optimize::state_from_coords(&out.best.x);
    Ok(report(out.best.value, s.state(psi)?, &out, (a_anc, b_anc)))
}

/// `ΔE_U^Ψ`: maximum of `E^Ψ_{UU_0} − E^Ψ_{U_0}` over unitaries `U_0` on
/// `A_U ⊗ B_U`, parameterized as `exp(iH)`.
pub fn delta_e_u_psi(gate: &BipartiteGate, config: &OptimizerConfig) -> Result<CapacityReport> {
    config.validate()?;
    let (d_a, d_b) = (gate.d_a(), gate.d_b());
    let n = gate.dim();
    let f = |x: &[f64]| {
        let u0 = optimize::unitary_from_coords(n, x);
        schmidt_entropy_of(d_a, d_b, gate.matrix() * &u0) - schmidt_entropy_of(d_a, d_b, u0)
    };
    let out = optimize::multistart(config, &[vec![0.0; n * n]], |r| gaussian_reals(r, n * n), f, |_| false);
    let u0 = optimize::unitary_from_coords(n, &out.best.x);
    let s = Setup::new(gate, d_a, d_b)?;
    let input = s.gate_op.with_op(u0.clone()).apply(&psi_amps(d_a).kronecker(&psi_amps(d_b)));
    let mut r = report(out.best.value, s.state(input)?, &out, (d_a, d_b));
    r.argmax_unitary = Some(u0);
    Ok(r)
}

/// Layout, fixed `|Ψ⟩` and free-input size for a one-sided problem.
struct OneSided {
    setup: Setup,
    direction: Direction,
    /// Amplitudes of the frozen `|Ψ⟩`.
    fixed: CVector,
    /// Dimension of the optimized party's input.
    free_dim: usize,
    /// Whether `|Ψ⟩` is admissible for the optimized party.
    psi_admissible: bool,
    free_layout: SubsystemLayout,
}

impl OneSided {
    fn new(gate: &BipartiteGate, direction: Direction, config: &OptimizerConfig) -> Result<Self> {
        let (d_a, d_b) = (gate.d_a(), gate.d_b());
        let (a_anc, b_anc, fixed, free_layout) = match direction {
            Direction::Forward => {
                let b_anc = config.b_anc(d_b);
                (d_a, b_anc, psi_amps(d_a), SubsystemLayout::new(&[(B_U, d_b), (B_ANC, b_anc)])?)
            }
            Direction::Backward => {
                let a_anc = config.a_anc(d_a);
                (a_anc, d_b, psi_amps(d_b), SubsystemLayout::new(&[(A_ANC, a_anc), (A_U, d_a)])?)
            }
        };
        let psi_admissible = a_anc == d_a && b_anc == d_b;
        let setup = Setup::new(gate, a_anc, b_anc)?;
        let free_dim = free_layout.total_dim();
        Ok(Self { setup, direction, fixed, free_dim, psi_admissible, free_layout })
    }

    fn input(&self, local: &CVector) -> CVector {
        match self.direction {
            Direction::Forward => self.fixed.kronecker(local),
            Direction::Backward => local.kronecker(&self.fixed),
        }
    }

    /// `|Ψ⟩` for the optimized party, as optimizer coordinates.
    fn psi_coords(&self) -> Vec<f64> {
        let d = self.free_layout.dims()[1];
        optimize::coords_from_state(&psi_amps(d))
    }

    fn ancilla_dims(&self) -> (usize, usize) {
        let dims = self.setup.layout.dims();
        (dims[0], dims[3])
    }
}

/// `E_U^{Ψ,→}` or `E_U^{Ψ,←}`.
pub fn e_u_psi_onesided(
    gate: &BipartiteGate,
    direction: Direction,
    config: &OptimizerConfig,
) -> Result<CapacityReport> {
    config.validate()?;
    let p = OneSided::new(gate, direction, config)?;
    let m = p.free_dim;
    let f = |x: &[f64]| p.setup.entropy_after(&p.input(&optimize::state_from_coords(x)));
    let warm = if p.psi_admissible { vec![p.psi_coords()] } else { Vec::new() };
    let out = optimize::multistart(
        config,
        &warm,
        |r| optimize::random_coords(r, m),
        f,
        |x| optimize::renormalize_blocks(x, &[0..2 * m]),
    );
    let local = optimize::state_from_coords(&out.best.x);
    let mut r = report(out.best.value, p.setup.state(p.input(&local))?, &out, p.ancilla_dims());
    r.argmax_local = Some(StateVector::normalized(p.free_layout.clone(), local)?);
    Ok(r)
}

/// `ΔE_U^{Ψ,→}` or `ΔE_U^{Ψ,←}`: joint maximization over the free input and
/// `U_0`.
pub fn delta_e_u_psi_onesided(
    gate: &BipartiteGate,
    direction: Direction,
    config: &OptimizerConfig,
) -> Result<CapacityReport> {
    config.validate()?;
    let p = OneSided::new(gate, direction, config)?;
    let m = p.free_dim;
    let n = gate.dim();
    let split = 2 * m;
    let prepared = |x: &[f64]| {
        let u0 = optimize::unitary_from_coords(n, &x[split..]);
        let local = optimize::state_from_coords(&x[..split]);
        p.setup.gate_op.with_op(u0).apply(&p.input(&local))
    };
    let f = |x: &[f64]| {
        let psi = prepared(x);
        p.setup.entropy_after(&psi) - p.setup.entropy(&psi)
    };
    let warm = if p.psi_admissible { vec![[p.psi_coords(), vec![0.0; n * n]].concat()] } else { Vec::new() };
    let out = optimize::multistart(
        config,
        &warm,
        |r| [optimize::random_coords(r, m), gaussian_reals(r, n * n)].concat(),
        f,
        |x| optimize::renormalize_blocks(x, &[0..split]),
    );
    let x = &out.best.x;
    let mut r = report(out.best.value, p.setup.state(prepared(x))?, &out, p.ancilla_dims());
    r.argmax_local = Some(StateVector::normalized(p.free_layout.clone(), optimize::state_from_coords(&x[..split]))?);
    r.argmax_unitary = Some(optimize::unitary_from_coords(n, &x[split..]));
    Ok(r)
}

/// Realizes the dimension-expansion argument: `|ψ⟩` is parked on Bob's side
/// next to `|Ψ⟩_A`, a swap `U_0` moves Alice's share of `|ψ⟩` into an enlarged
/// `A_U`, and the gate then acts on the original factors only.
///
/// Returns the A:B entanglement before and after the gate. Their difference
/// is checked against `E(U|ψ⟩) − E(|ψ⟩)` computed on `psi`'s own layout.
pub fn expanded_delta_demo(gate: &BipartiteGate, psi: &StateVector) -> Result<(f64, f64)> {
    let layout = psi.layout();
    let labels = layout.labels();
    if labels != [A_ANC, A_U, B_U, B_ANC] {
        return Err(Error::Layout(format!("expected a state on (A_anc, A_U, B_U, B_anc), got {layout}")));
    }
    let dims = layout.dims();
    if dims[1] != gate.d_a() || dims[2] != gate.d_b() {
        return Err(Error::Layout(format!(
            "state carries A_U:{} B_U:{} but the gate is {}x{}",
            dims[1],
            dims[2],
            gate.d_a(),
            gate.d_b()
        )));
    }
    let (a_anc, d_a, d_b, b_anc) = (dims[0], dims[1], dims[2], dims[3]);
    let big_d = a_anc * d_a;

    let direct = {
        let s = Setup::new(gate, a_anc, b_anc)?;
        s.entropy_after(psi.amplitudes()) - s.entropy(psi.amplitudes())
    };

    // Alice: A_anc ⊗ (A_U2 ⊗ A_U1). Bob: B_U1 ⊗ B_U2 ⊗ B_U3, with B_U3 split to
    // mirror the shape of Alice's share of ψ.
    let alice = SubsystemLayout::new(&[(A_ANC, big_d), ("A_U2", a_anc), ("A_U1", d_a)])?;
    let psi_alice = StateVector::new(alice, psi_amps(big_d))?;
    let parked = StateVector::new(
        SubsystemLayout::new(&[("B_U3_anc", a_anc), ("B_U3_U", d_a), ("B_U1", d_b), ("B_U2", b_anc)])?,
        psi.amplitudes().clone(),
    )?;
    let order = [A_ANC, "A_U2", "A_U1", "B_U1", "B_U2", "B_U3_anc", "B_U3_U"];
    let initial = psi_alice.tensor(&parked)?.permuted(&order)?;
    let big = initial.layout().clone();

    let swap = BipartiteGate::swap(big_d);
    let u0 = FactorOp::new(&big, swap.matrix().clone(), &["A_U2", "A_U1", "B_U3_anc", "B_U3_U"])?;
    let moved = u0.apply(initial.amplitudes());
    let gate_op = FactorOp::new(&big, gate.matrix().clone(), &["A_U1", "B_U1"])?;
    let cut = Cut::new(&big, &[A_ANC, "A_U2", "A_U1"])?;
    let before = cut.entropy(&moved);
    let after = cut.entropy(&gate_op.apply(&moved));
    let change = after - before;
    if (change - direct).abs() > 1e-9 {
        return Err(Error::Validity(format!(
            "expanded construction changes entanglement by {change}, direct computation gives {direct}"
        )));
    }
    Ok((before, after))
}

/// `E_U^Ψ·(d_a d_b)² ≥ E_U − tol`.
pub fn postselection_bound_holds(e_u_psi: f64, e_u: f64, d_a: usize, d_b: usize, tol: f64) -> bool {
    let factor = ((d_a * d_b) * (d_a * d_b)) as f64;
    e_u_psi * factor >= e_u - tol
}

/// Evaluates both sides of the post-selection bound for `gate`.
pub fn postselection_bound_check(gate: &BipartiteGate, config: &OptimizerConfig) -> Result<bool> {
    let lhs = e_u_psi(gate)?;
    let rhs = e_u(gate, config)?.value;
    Ok(postselection_bound_holds(lhs, rhs, gate.d_a(), gate.d_b(), config.tolerance))
}

/// One row of the `ΔE_U / E_U^Ψ` sweep over `gate_zz(α)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub e_u_psi: f64,
    pub delta_e_u: f64,
    pub ratio: f64,
}

/// `steps` equally spaced angles from `alpha_min` to `alpha_max`.
pub fn sweep_grid(alpha_min: f64, alpha_max: f64, steps: usize) -> Result<Vec<f64>> {
    let range_ok = alpha_min > 0.0 && alpha_min < alpha_max && alpha_max <= FRAC_PI_4 + 1e-12;
    if !range_ok || !alpha_min.is_finite() || !alpha_max.is_finite() {
        return Err(Error::Validity(format!(
            "sweep range must satisfy 0 < alpha_min < alpha_max <= pi/4, got [{alpha_min}, {alpha_max}]"
        )));
    }
    if steps == 0 {
        return Err(Error::Validity("sweep needs at least one step".into()));
    }
    if steps == 1 {
        return Ok(vec![alpha_min]);
    }
    let h = (alpha_max - alpha_min) / (steps - 1) as f64;
    Ok((0..steps).map(|k| if k + 1 == steps { alpha_max } else { alpha_min + h * k as f64 }).collect())
}

/// `ΔE_U` and `E_U^Ψ` for `gate_zz(α)` on each angle. Angles are processed from
/// largest to smallest, each optimization warm-started at the previous optimum.
pub fn ratio_sweep(alphas: &[f64], config: &OptimizerConfig) -> Result<Vec<SweepRow>> {
    let mut order: Vec<usize> = (0..alphas.len()).collect();
    order.sort_by(|&i, &j| alphas[j].total_cmp(&alphas[i]));
    let mut rows: Vec<Option<SweepRow>> = vec![None; alphas.len()];
    let mut previous: Option<StateVector> = None;
    for i in order {
        let alpha = alphas[i];
        let gate = gate_zz(alpha);
        let exact = e_u_psi(&gate)?;
        let warm: Vec<StateVector> = previous.iter().cloned().collect();
        let rep = delta_e_u_seeded(&gate, config, &warm)?;
        let ratio = if exact > 0.0 { rep.value / exact } else { f64::NAN };
        rows[i] = Some(SweepRow { alpha, e_u_psi: exact, delta_e_u: rep.value, ratio });
        previous = Some(rep.argmax_state);
    }
    Ok(rows.into_iter().map(|r| r.expect("every angle visited")).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;
    use crate::qstate::{entanglement_entropy, random_state};
    use rand::SeedableRng;

    fn h2(p: f64) -> f64 {
        if p <= 0.0 || p >= 1.0 {
            return 0.0;
        }
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }

    fn quick() -> OptimizerConfig {
        OptimizerConfig { restarts: 6, ..Default::default() }
    }

    #[test]
    fn e_u_psi_examples() {
        assert!(e_u_psi(&BipartiteGate::identity(2, 3)).unwrap().abs() < 1e-12);
        assert!((e_u_psi(&BipartiteGate::swap(2)).unwrap() - 2.0).abs() < 1e-9);
        assert!((e_u_psi(&BipartiteGate::swap(3)).unwrap() - 2.0 * 3f64.log2()).abs() < 1e-9);
        assert!((e_u_psi(&BipartiteGate::cnot()).unwrap() - 1.0).abs() < 1e-9);
        for alpha in [0.05, 0.3, 0.7, FRAC_PI_4] {
            let v = e_u_psi(&gate_zz(alpha)).unwrap();
            assert!((v - h2(alpha.cos().powi(2))).abs() < 1e-9, "alpha {alpha}: {v}");
        }
    }

    #[test]
    fn jamiolkowski_state_is_swap_of_pairs_for_swap() {
        let j = jamiolkowski_state(&BipartiteGate::swap(2)).unwrap();
        // SWAP sends each half of |Ψ⟩_A to Bob: A_anc pairs with B_U.
        let pair = j.reduced(&[A_ANC, B_U]).unwrap();
        let e = crate::qstate::von_neumann_entropy(&pair).unwrap();
        assert!(e.abs() < 1e-10);
    }

    #[test]
    fn e_u_identity_is_zero() {
        let r = e_u(&BipartiteGate::identity(2, 2), &quick()).unwrap();
        assert!(r.value.abs() < 1e-9);
    }

    #[test]
    fn e_u_cnot_matches_grid_search() {
        // Product qubit inputs without ancillas, on a Bloch-sphere grid.
        let cnot = BipartiteGate::cnot();
        let layout = SubsystemLayout::new(&[(A_U, 2), (B_U, 2)]).unwrap();
        let qubit =
            |t: f64, p: f64| CVector::from_vec(vec![c((t / 2.0).cos(), 0.0), c(p.cos(), p.sin()) * (t / 2.0).sin()]);
        let steps = 9;
        let angle = |k: usize, max: f64| max * k as f64 / (steps - 1) as f64;
        let mut best: f64 = 0.0;
        for i in 0..steps {
            for j in 0..steps {
                for k in 0..steps {
                    for l in 0..steps {
                        let a = qubit(angle(i, std::f64::consts::PI), angle(j, 2.0 * std::f64::consts::PI));
                        let b = qubit(angle(k, std::f64::consts::PI), angle(l, 2.0 * std::f64::consts::PI));
                        let out = cnot.matrix() * a.kronecker(&b);
                        let st = StateVector::normalized(layout.clone(), out).unwrap();
                        best = best.max(entanglement_entropy(&st, &[A_U]).unwrap());
                    }
                }
            }
        }
        assert!((best - 1.0).abs() < 1e-9, "grid max {best}");
        let r = e_u(&cnot, &quick()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-6, "optimizer {}", r.value);
    }

    #[test]
    fn e_u_swap_reaches_two() {
        let r = e_u(&BipartiteGate::swap(2), &quick()).unwrap();
        assert!((r.value - 2.0).abs() < 1e-6, "{}", r.value);
        assert_eq!(r.ancilla_dims, (2, 2));
    }

    #[test]
    fn e_u_value_is_objective_at_argmax() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = BipartiteGate::random(2, 2, &mut rng);
        let r = e_u(&g, &quick()).unwrap();
        let out = r.argmax_state.apply(g.matrix(), &[A_U, B_U]).unwrap();
        let e = entanglement_entropy(&out, &ALICE).unwrap();
        assert!((e - r.value).abs() < 1e-12);
        assert!(entanglement_entropy(&r.argmax_state, &ALICE).unwrap() < 1e-9);
    }

    #[test]
    fn e_u_seeded_dominates_its_seeds() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let g = BipartiteGate::random(2, 3, &mut rng);
        let cfg = OptimizerConfig { restarts: 1, ..quick() };
        let fwd = e_u_psi_onesided(&g, Direction::Forward, &cfg).unwrap();
        let phi = StateVector::new(SubsystemLayout::new(&[(A_ANC, 2), (A_U, 2)]).unwrap(), psi_amps(2)).unwrap();
        let r = e_u_seeded(&g, &cfg, &[(phi.clone(), fwd.argmax_local.unwrap())]).unwrap();
        assert!(r.value >= fwd.value - 1e-12);
        assert!(matches!(e_u_seeded(&g, &cfg, &[(phi.clone(), phi)]), Err(Error::Layout(_))));
    }

    #[test]
    fn delta_e_u_examples() {
        let r = delta_e_u(&BipartiteGate::identity(2, 2), &quick()).unwrap();
        assert!(r.value.abs() < 1e-9);
        let r = delta_e_u(&gate_zz(FRAC_PI_4), &quick()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-4, "{}", r.value);
    }

    #[test]
    fn delta_e_u_psi_examples() {
        let r = delta_e_u_psi(&BipartiteGate::identity(2, 2), &quick()).unwrap();
        assert!(r.value.abs() < 1e-9);
        let r = delta_e_u_psi(&BipartiteGate::swap(2), &quick()).unwrap();
        assert!((r.value - 2.0).abs() < 1e-4, "{}", r.value);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let g = BipartiteGate::random(2, 2, &mut rng);
        let r = delta_e_u_psi(&g, &quick()).unwrap();
        assert!(r.value >= e_u_psi(&g).unwrap() - 1e-6);
        let u0 = r.argmax_unitary.unwrap();
        assert!(linalg::unitarity_residual(&u0) < 1e-10);
    }

    #[test]
    fn onesided_examples() {
        for dir in [Direction::Forward, Direction::Backward] {
            let r = e_u_psi_onesided(&BipartiteGate::identity(2, 2), dir, &quick()).unwrap();
            assert!(r.value.abs() < 1e-9);
            let r = e_u_psi_onesided(&BipartiteGate::swap(2), dir, &quick()).unwrap();
            assert!((r.value - 2.0).abs() < 1e-6);
            let r = delta_e_u_psi_onesided(&BipartiteGate::swap(2), dir, &quick()).unwrap();
            assert!((r.value - 2.0).abs() < 1e-4);
        }
        let r = delta_e_u_psi_onesided(&BipartiteGate::identity(2, 2), Direction::Forward, &quick()).unwrap();
        assert!(r.value.abs() < 1e-9);
    }

    #[test]
    fn onesided_respects_ancilla_override() {
        let cfg = OptimizerConfig { ancilla_dims: optimize::AncillaDims { a_anc: None, b_anc: Some(1) }, ..quick() };
        let r = e_u_psi_onesided(&BipartiteGate::swap(2), Direction::Forward, &cfg).unwrap();
        assert_eq!(r.ancilla_dims, (2, 1));
        // Without an ancilla Bob can only contribute one qubit's worth.
        assert!((r.value - 1.0).abs() < 1e-6, "{}", r.value);
    }

    #[test]
    fn onesided_handles_unequal_dimensions() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let g = BipartiteGate::random(2, 3, &mut rng);
        let exact = e_u_psi(&g).unwrap();
        for dir in [Direction::Forward, Direction::Backward] {
            let r = e_u_psi_onesided(&g, dir, &quick()).unwrap();
            assert!(r.value >= exact - 1e-9);
            let r = delta_e_u_psi_onesided(&g, dir, &quick()).unwrap();
            assert!(r.value <= 2.0 + 1e-9);
        }
    }

    #[test]
    fn onesided_directions_swap_under_role_exchange() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let g = BipartiteGate::random(2, 2, &mut rng);
        let fwd = e_u_psi_onesided(&g, Direction::Forward, &quick()).unwrap();
        let bwd = e_u_psi_onesided(&g.swapped(), Direction::Backward, &quick()).unwrap();
        assert!((fwd.value - bwd.value).abs() < 1e-6, "{} vs {}", fwd.value, bwd.value);
    }

    #[test]
    fn expanded_demo_matches_direct_change() {
        let layout = standard_layout(2, 2, 2, 2).unwrap();
        let psi = random_state(&layout, 3);
        let g = gate_zz(0.4);
        let (before, after) = expanded_delta_demo(&g, &psi).unwrap();
        let direct = entanglement_entropy(&psi.apply(g.matrix(), &[A_U, B_U]).unwrap(), &ALICE).unwrap()
            - entanglement_entropy(&psi, &ALICE).unwrap();
        assert!((after - before - direct).abs() < 1e-9);

        let (b, a) = expanded_delta_demo(&BipartiteGate::identity(2, 2), &psi).unwrap();
        assert!((a - b).abs() < 1e-12);

        let rect = random_state(&standard_layout(1, 2, 2, 3).unwrap(), 4);
        let (b, a) = expanded_delta_demo(&g, &rect).unwrap();
        assert!((a - b).is_finite());

        let wrong = random_state(&SubsystemLayout::new(&[(A_U, 2), (B_U, 2)]).unwrap(), 1);
        assert!(matches!(expanded_delta_demo(&g, &wrong), Err(Error::Layout(_))));
        assert!(matches!(expanded_delta_demo(&BipartiteGate::identity(3, 2), &psi), Err(Error::Layout(_))));
    }

    #[test]
    fn postselection_examples() {
        assert!(postselection_bound_holds(1.0, 1.0, 2, 2, 1e-6));
        assert!(postselection_bound_holds(0.0, 0.0, 2, 2, 1e-6));
        assert!(!postselection_bound_holds(0.01, 1.0, 2, 2, 1e-6));
        assert!(postselection_bound_check(&BipartiteGate::cnot(), &quick()).unwrap());
        assert!(postselection_bound_check(&BipartiteGate::swap(2), &quick()).unwrap());
    }

    #[test]
    fn sweep_grid_validation() {
        assert_eq!(sweep_grid(0.1, 0.5, 1).unwrap(), vec![0.1]);
        let g = sweep_grid(0.05, FRAC_PI_4, 4).unwrap();
        assert_eq!(g.len(), 4);
        assert_eq!(g[3], FRAC_PI_4);
        assert!(sweep_grid(0.0, 0.5, 3).is_err());
        assert!(sweep_grid(0.5, 0.1, 3).is_err());
        assert!(sweep_grid(0.1, 1.0, 3).is_err());
        assert!(sweep_grid(0.1, 0.5, 0).is_err());
    }
}
