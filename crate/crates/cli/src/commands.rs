use std::collections::BTreeMap;
use std::fmt::Write as _;

use caplab::capacities::{self, standard_layout, CapacityReport, Direction, SweepRow, A_ANC};
use caplab::channels::chi_c_lower_bound;
use caplab::ensembles::{ensemble_dense, ensemble_dense_delta, holevo, BOB_WITH_B2};
use caplab::linalg::{CMatrix, C64};
use caplab::optimize::OptimizerConfig;
use caplab::qstate::max_entangled_on;
use caplab::unitary::{kak_decompose, BipartiteGate, CanonicalForm, A_U};
use clap::ValueEnum;
use serde::Serialize;

use crate::report::{Inequality, RunReport};
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum Capacity {
    #[value(name = "e_u_psi")]
    EUPsi,
    #[value(name = "e_u")]
    EU,
    #[value(name = "delta_e_u")]
    DeltaEU,
    #[value(name = "delta_e_u_psi")]
    DeltaEUPsi,
    #[value(name = "e_u_psi_forward")]
    EUPsiForward,
    #[value(name = "e_u_psi_backward")]
    EUPsiBackward,
    #[value(name = "delta_e_u_psi_forward")]
    DeltaEUPsiForward,
    #[value(name = "delta_e_u_psi_backward")]
    DeltaEUPsiBackward,
    /// Lower bound on the entanglement-assisted capacity of the induced channel.
    #[value(name = "chi_c")]
    ChiC,
    #[value(name = "all")]
    All,
}

impl Capacity {
    const EVERY: [Capacity; 9] = [
        Capacity::EUPsi,
        Capacity::EU,
        Capacity::DeltaEU,
        Capacity::DeltaEUPsi,
        Capacity::EUPsiForward,
        Capacity::EUPsiBackward,
        Capacity::DeltaEUPsiForward,
        Capacity::DeltaEUPsiBackward,
        Capacity::ChiC,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Capacity::EUPsi => "e_u_psi",
            Capacity::EU => "e_u",
            Capacity::DeltaEU => "delta_e_u",
            Capacity::DeltaEUPsi => "delta_e_u_psi",
            Capacity::EUPsiForward => "e_u_psi_forward",
            Capacity::EUPsiBackward => "e_u_psi_backward",
            Capacity::DeltaEUPsiForward => "delta_e_u_psi_forward",
            Capacity::DeltaEUPsiBackward => "delta_e_u_psi_backward",
            Capacity::ChiC => "chi_c",
            Capacity::All => "all",
        }
    }

    fn evaluate(self, gate: &BipartiteGate, cfg: &OptimizerConfig) -> caplab::Result<f64> {
        let value = |r: caplab::Result<CapacityReport>| r.map(|r| r.value);
        match self {
            Capacity::EUPsi => capacities::e_u_psi(gate),
            Capacity::EU => value(capacities::e_u(gate, cfg)),
            Capacity::DeltaEU => value(capacities::delta_e_u(gate, cfg)),
            Capacity::DeltaEUPsi => value(capacities::delta_e_u_psi(gate, cfg)),
            Capacity::EUPsiForward => value(capacities::e_u_psi_onesided(gate, Direction::Forward, cfg)),
            Capacity::EUPsiBackward => value(capacities::e_u_psi_onesided(gate, Direction::Backward, cfg)),
            Capacity::DeltaEUPsiForward => value(capacities::delta_e_u_psi_onesided(gate, Direction::Forward, cfg)),
            Capacity::DeltaEUPsiBackward => value(capacities::delta_e_u_psi_onesided(gate, Direction::Backward, cfg)),
            Capacity::ChiC => value(chi_c_lower_bound(gate, cfg)),
            Capacity::All => unreachable!("expanded before evaluation"),
        }
    }
}

fn expand(which: &[Capacity]) -> Vec<Capacity> {
    let mut out: Vec<Capacity> = if which.contains(&Capacity::All) { Capacity::EVERY.to_vec() } else { which.to_vec() };
    out.sort();
    out.dedup();
    out
}

pub fn capacity(
    descriptor: &str,
    gate: &BipartiteGate,
    which: &[Capacity],
    cfg: &OptimizerConfig,
) -> Result<RunReport, CliError> {
    let mut values = BTreeMap::new();
    for c in expand(which) {
        values.insert(c.name().to_string(), c.evaluate(gate, cfg)?);
    }
    Ok(RunReport {
        gate_descriptor: descriptor.to_string(),
        capacities: values,
        inequalities: Vec::new(),
        config_echo: cfg.clone(),
        wall_time_ms: 0,
    })
}

/// Evaluates the proven relations between the capacities of `gate`.
pub fn verify(descriptor: &str, gate: &BipartiteGate, cfg: &OptimizerConfig) -> Result<RunReport, CliError> {
    let (d_a, d_b) = (gate.d_a(), gate.d_b());
    let tol = cfg.tolerance;

    let exact = capacities::e_u_psi(gate)?;
    let exact_dagger = capacities::e_u_psi(&gate.dagger())?;
    let forward = capacities::e_u_psi_onesided(gate, Direction::Forward, cfg)?;
    let chi = forward.argmax_local.clone().expect("one-sided capacities report their input");

    // The one-sided optimum is a product input, so it seeds the E_U search.
    let mut seeds = Vec::new();
    if cfg.a_anc(d_a) == d_a {
        seeds.push((max_entangled_on(A_ANC, A_U, d_a)?, chi.clone()));
    }
    let e_u = capacities::e_u_seeded(gate, cfg, &seeds)?;

    let delta_psi = capacities::delta_e_u_psi(gate, cfg)?;
    let layout = standard_layout(cfg.a_anc(d_a), d_a, d_b, cfg.b_anc(d_b))?;
    let warm: Vec<_> = Some(delta_psi.argmax_state.clone()).into_iter().filter(|s| s.layout() == &layout).collect();
    let delta = capacities::delta_e_u_seeded(gate, cfg, &warm)?;

    let dense = holevo(&ensemble_dense(gate, &chi)?.apply_gate(gate)?, &BOB_WITH_B2)?;
    let u0 = delta_psi.argmax_unitary.clone().expect("delta_e_u_psi reports its U_0");
    let (_, delta_chi) = ensemble_dense_delta(gate, &u0)?;
    let chi_c = chi_c_lower_bound(gate, cfg)?;

    let factor = ((d_a * d_b) * (d_a * d_b)) as f64;
    let capacities = BTreeMap::from(
        [
            ("e_u_psi", exact),
            ("e_u_psi_dagger", exact_dagger),
            ("e_u_psi_forward", forward.value),
            ("e_u", e_u.value),
            ("delta_e_u_psi", delta_psi.value),
            ("delta_e_u", delta.value),
            ("chi_dense", dense),
            ("delta_chi_dense", delta_chi),
            ("chi_c", chi_c.value),
        ]
        .map(|(k, v)| (k.to_string(), v)),
    );
    let inequalities = vec![
        Inequality::equal("E_U^Psi(U) = E_U^Psi(U^dag)", exact, exact_dagger, capacities::ROUTE_AGREEMENT),
        Inequality::new("E_U^Psi <= E_U^{Psi,->}", exact, forward.value, tol),
        Inequality::new("E_U^{Psi,->} <= E_U", forward.value, e_u.value, tol),
        Inequality::new("Delta E_U^Psi <= Delta E_U", delta_psi.value, delta.value, tol),
        Inequality::new("E_U <= E_U^Psi (d_a d_b)^2", e_u.value, exact * factor, tol),
        Inequality::new("E_U^{Psi,->} <= chi(dense ensemble)", forward.value, dense, tol),
        Inequality::equal("Delta chi(dense-delta ensemble) = Delta E_U^Psi", delta_chi, delta_psi.value, tol),
        Inequality::new("E_U^{Psi,->} <= C_E lower bound", forward.value, chi_c.value, tol),
    ];
    Ok(RunReport {
        gate_descriptor: descriptor.to_string(),
        capacities,
        inequalities,
        config_echo: cfg.clone(),
        wall_time_ms: 0,
    })
}

pub fn capacity_csv(report: &RunReport) -> String {
    let mut out = String::from("name,value\n");
    for (name, value) in &report.capacities {
        let _ = writeln!(out, "{name},{value}");
    }
    out
}

pub fn inequality_csv(report: &RunReport) -> String {
    let mut out = String::from("name,lhs,rhs,holds,tolerance\n");
    for i in &report.inequalities {
        let _ = writeln!(out, "\"{}\",{},{},{},{}", i.name, i.lhs, i.rhs, i.holds, i.tolerance);
    }
    out
}

pub fn sweep(alpha_min: f64, alpha_max: f64, steps: usize, cfg: &OptimizerConfig) -> Result<Vec<SweepRow>, CliError> {
    let grid = capacities::sweep_grid(alpha_min, alpha_max, steps).map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(capacities::ratio_sweep(&grid, cfg)?)
}

pub const SWEEP_HEADER: &str = "alpha,e_u_psi,delta_e_u,ratio";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = format!("{SWEEP_HEADER}\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{}", r.alpha, r.e_u_psi, r.delta_e_u, r.ratio);
    }
    out
}

pub fn sweep_table(rows: &[SweepRow]) -> String {
    let mut out = format!("{:>12}  {:>12}  {:>12}  {:>12}\n", "alpha", "e_u_psi", "delta_e_u", "ratio");
    for r in rows {
        let _ = writeln!(out, "{:>12.9}  {:>12.9}  {:>12.9}  {:>12.9}", r.alpha, r.e_u_psi, r.delta_e_u, r.ratio);
    }
    out
}

type MatrixRows = Vec<Vec<[f64; 2]>>;

fn rows_of(m: &CMatrix) -> MatrixRows {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct DecomposeReport {
    pub gate_descriptor: String,
    /// Angles in the `exp(−i Σ α σ⊗σ)` convention.
    pub alphas: [f64; 3],
    pub local_before: [MatrixRows; 2],
    pub local_after: [MatrixRows; 2],
    pub global_phase: [f64; 2],
    pub reconstruction_residual: f64,
}

pub fn decompose(descriptor: &str, gate: &BipartiteGate) -> Result<DecomposeReport, CliError> {
    let form: CanonicalForm = kak_decompose(gate)?;
    let phase: C64 = form.global_phase;
    Ok(DecomposeReport {
        gate_descriptor: descriptor.to_string(),
        alphas: form.alphas,
        local_before: [rows_of(&form.local_before.0), rows_of(&form.local_before.1)],
        local_after: [rows_of(&form.local_after.0), rows_of(&form.local_after.1)],
        global_phase: [phase.re, phase.im],
        reconstruction_residual: form.reconstruction_error(gate),
    })
}

fn matrix_text(out: &mut String, label: &str, rows: &MatrixRows) {
    let _ = writeln!(out, "  {label}");
    for row in rows {
        let cells: Vec<String> = row.iter().map(|[re, im]| format!("{re:+.9}{im:+.9}i")).collect();
        let _ = writeln!(out, "    [{}]", cells.join(", "));
    }
}

pub fn decompose_table(r: &DecomposeReport) -> String {
    let [a1, a2, a3] = r.alphas;
    let mut out = format!("gate: {}\n", r.gate_descriptor);
    let _ = writeln!(out, "alphas (exp(-i sum a_j s_j s_j)): ({a1:.12}, {a2:.12}, {a3:.12})");
    let _ = writeln!(out, "global phase: {:+.12}{:+.12}i", r.global_phase[0], r.global_phase[1]);
    out.push_str("locals before the interaction\n");
    matrix_text(&mut out, "A_U", &r.local_before[0]);
    matrix_text(&mut out, "B_U", &r.local_before[1]);
    out.push_str("locals after the interaction\n");
    matrix_text(&mut out, "A_U", &r.local_after[0]);
    matrix_text(&mut out, "B_U", &r.local_after[1]);
    let _ = writeln!(out, "reconstruction residual: {:.3e}", r.reconstruction_residual);
    out
}
