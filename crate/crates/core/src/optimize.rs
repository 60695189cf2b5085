//! Multi-start quasi-Newton maximization over smooth real parameterizations.
//!
//! Gradients come from central finite differences. Restarts are independent
//! and run on the rayon pool; the best-of merge depends only on the restart
//! index, so results do not depend on the number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector};
use crate::unitary::unitary_from_generator;

/// Central-difference step for numerical gradients.
pub const FD_STEP: f64 = 1e-5;

/// Ancilla dimensions used by the optimizers when they differ from the gate's
/// own dimensions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AncillaDims {
    pub a_anc: Option<usize>,
    pub b_anc: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub seed: u64,
    #[serde(default)]
    pub ancilla_dims: AncillaDims,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { restarts: 20, max_iterations: 400, tolerance: 1e-6, seed: 42, ancilla_dims: AncillaDims::default() }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::Validity("restarts must be at least 1".into()));
        }
        if !self.tolerance.is_finite() || self.tolerance <= 0.0 {
            return Err(Error::Validity(format!("tolerance {} must be positive", self.tolerance)));
        }
        if self.max_iterations == 0 {
            return Err(Error::Validity("max_iterations must be at least 1".into()));
        }
        if self.ancilla_dims.a_anc == Some(0) || self.ancilla_dims.b_anc == Some(0) {
            return Err(Error::InvalidDimension("ancilla dimension 0".into()));
        }
        Ok(())
    }

    /// Alice's ancilla dimension, defaulting to `d_u`.
    pub fn a_anc(&self, d_u: usize) -> usize {
        self.ancilla_dims.a_anc.unwrap_or(d_u)
    }

    /// Bob's ancilla dimension, defaulting to `d_u`.
    pub fn b_anc(&self, d_u: usize) -> usize {
        self.ancilla_dims.b_anc.unwrap_or(d_u)
    }
}

#[derive(Clone, Debug)]
pub(crate) struct LocalResult {
    pub x: Vec<f64>,
    pub value: f64,
}

fn gradient<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64]) -> Vec<f64> {
    let mut xp = x.to_vec();
    let mut g = vec![0.0; x.len()];
    for k in 0..x.len() {
        let x0 = xp[k];
        xp[k] = x0 + FD_STEP;
        let fp = f(&xp);
        xp[k] = x0 - FD_STEP;
        let fm = f(&xp);
        xp[k] = x0;
        g[k] = (fp - fm) / (2.0 * FD_STEP);
    }
    g
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// BFGS ascent from `x0`.
///
/// `renormalize` may rescale the iterate between steps (projective
/// coordinates); when it changes the point the curvature estimate is reset.
pub(crate) fn maximize<F, N>(f: &F, x0: Vec<f64>, max_iterations: usize, tolerance: f64, renormalize: N) -> LocalResult
where
    F: Fn(&[f64]) -> f64,
    N: Fn(&mut [f64]) -> bool,
{
    const MAX_STEP: f64 = 0.5;
    const ARMIJO: f64 = 1e-4;
    let n = x0.len();
    let mut x = x0;
    let mut fx = f(&x);
    if n == 0 {
        return LocalResult { x, value: fx };
    }
    let stall_tol = tolerance * 1e-4;
    let identity = || {
        let mut h = vec![0.0; n * n];
        for k in 0..n {
            h[k * n + k] = 1.0;
        }
        h
    };
    let mut h = identity();
    let mut g = gradient(f, &x);
    let mut stalls = 0;

    for _ in 0..max_iterations {
        let mut p: Vec<f64> = (0..n).map(|i| dot(&h[i * n..(i + 1) * n], &g)).collect();
        let mut slope = dot(&p, &g);
        if slope.is_nan() || slope <= 0.0 {
            h = identity();
            p = g.clone();
            slope = dot(&p, &g);
        }
        if slope.is_nan() || slope <= 1e-30 {
            break;
        }
        let pnorm = dot(&p, &p).sqrt();
        let mut t = if pnorm > MAX_STEP { MAX_STEP / pnorm } else { 1.0 };
        let mut accepted = None;
        for _ in 0..40 {
            let xn: Vec<f64> = x.iter().zip(&p).map(|(a, b)| a + t * b).collect();
            let fxn = f(&xn);
            if fxn >= fx + ARMIJO * t * slope {
                accepted = Some((xn, fxn));
                break;
            }
            t *= 0.5;
        }
        let Some((mut xn, fxn)) = accepted else {
            if h == identity() {
                break;
            }
            h = identity();
            continue;
        };
        let improvement = fxn - fx;
        let reset = renormalize(&mut xn);
        let gn = gradient(f, &xn);
        if reset {
            h = identity();
        } else {
            // Quasi-Newton update for the ascent of f, i.e. descent of -f.
            let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = g.iter().zip(&gn).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &y);
            if sy > 1e-14 {
                let hy: Vec<f64> = (0..n).map(|i| dot(&h[i * n..(i + 1) * n], &y)).collect();
                let yhy = dot(&y, &hy);
                let rho = 1.0 / sy;
                let scale = (1.0 + yhy * rho) * rho;
                for i in 0..n {
                    for j in 0..n {
                        h[i * n + j] += scale * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
                    }
                }
            }
        }
        x = xn;
        fx = f(&x);
        g = gn;
        if improvement < stall_tol {
            stalls += 1;
            if stalls >= 3 {
                break;
            }
        } else {
            stalls = 0;
        }
    }
    LocalResult { x, value: fx }
}

/// Outcome of a multi-start run.
#[derive(Clone, Debug)]
pub(crate) struct MultiStart {
    pub best: LocalResult,
    pub values: Vec<f64>,
    pub converged: bool,
}

/// Runs `config.restarts` ascents. The first starts are taken from `warm`,
/// the remaining ones from `init` seeded with `seed + index`.
pub(crate) fn multistart<F, I, N>(
    config: &OptimizerConfig,
    warm: &[Vec<f64>],
    init: I,
    f: F,
    renormalize: N,
) -> MultiStart
where
    F: Fn(&[f64]) -> f64 + Sync,
    I: Fn(&mut ChaCha8Rng) -> Vec<f64> + Sync,
    N: Fn(&mut [f64]) -> bool + Sync,
{
    let runs = config.restarts.max(warm.len()).max(1);
    let results: Vec<LocalResult> = (0..runs)
        .into_par_iter()
        .map(|r| {
            let x0 = match warm.get(r) {
                Some(w) => w.clone(),
                None => init(&mut ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(r as u64))),
            };
            maximize(&f, x0, config.max_iterations, config.tolerance, &renormalize)
        })
        .collect();
    let values: Vec<f64> = results.iter().map(|r| r.value).collect();
    let mut best = 0;
    for (k, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = k;
        }
    }
    let top = values[best];
    let agreeing = values.iter().filter(|v| top - **v <= config.tolerance).count();
    let converged = agreeing >= 2 || runs == 1;
    MultiStart { best: results[best].clone(), values, converged }
}

/// Complex vector with `coords[2k] + i·coords[2k+1]` as its k-th entry, normalized.
pub(crate) fn state_from_coords(coords: &[f64]) -> CVector {
    let v = CVector::from_iterator(coords.len() / 2, coords.chunks_exact(2).map(|p| c(p[0], p[1])));
    let norm = v.norm();
    if norm > 0.0 {
        v / c(norm, 0.0)
    } else {
        let mut e = CVector::zeros(v.len());
        e[0] = linalg::ONE;
        e
    }
}

pub(crate) fn coords_from_state(v: &CVector) -> Vec<f64> {
    v.iter().flat_map(|z| [z.re, z.im]).collect()
}

/// Pulls projective coordinates back to the unit sphere when their norm has
/// drifted far from 1.
pub(crate) fn renormalize_blocks(x: &mut [f64], blocks: &[std::ops::Range<usize>]) -> bool {
    let mut changed = false;
    for b in blocks {
        let norm = x[b.clone()].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 && !(0.5..=2.0).contains(&norm) {
            for v in &mut x[b.clone()] {
                *v /= norm;
            }
            changed = true;
        }
    }
    changed
}

pub(crate) fn random_coords(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let v = linalg::gaussian_vector(n, rng);
    let norm = v.norm();
    coords_from_state(&(v / c(norm, 0.0)))
}

/// `exp(i H)` for the Hermitian `H` with independent real coordinates `coords`.
pub(crate) fn unitary_from_coords(n: usize, coords: &[f64]) -> CMatrix {
    let h = crate::unitary::hermitian_from_coords(n, coords);
    unitary_from_generator(&h).expect("generator built Hermitian")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bfgs_finds_quadratic_maximum() {
        let f = |x: &[f64]| -(x[0] - 1.0).powi(2) - 3.0 * (x[1] + 2.0).powi(2) - ((x[0] - 1.0) * (x[1] + 2.0)).powi(2);
        let r = maximize(&f, vec![0.0, 0.0], 500, 1e-10, |_| false);
        assert!((r.x[0] - 1.0).abs() < 1e-5, "{:?}", r.x);
        assert!((r.x[1] + 2.0).abs() < 1e-5, "{:?}", r.x);
        assert!(r.value.abs() < 1e-9);
    }

    #[test]
    fn bfgs_maximizes_rosenbrock() {
        let f = |x: &[f64]| -((1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2));
        let r = maximize(&f, vec![-1.2, 1.0], 5000, 1e-12, |_| false);
        assert!((r.x[0] - 1.0).abs() < 1e-3 && (r.x[1] - 1.0).abs() < 1e-3, "{:?}", r.x);
    }

    #[test]
    fn rayleigh_quotient_on_projective_coords() {
        // max ⟨v|A|v⟩ over unit v is the top eigenvalue of A.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = linalg::gaussian_matrix(4, 4, &mut rng);
        let a = linalg::hermitian_part(&g);
        let top = *linalg::hermitian_eigenvalues(&a).last().unwrap();
        let f = |x: &[f64]| {
            let v = state_from_coords(x);
            (v.adjoint() * &a * &v)[(0, 0)].re
        };
        let cfg = OptimizerConfig { restarts: 4, ..Default::default() };
        let out = multistart(&cfg, &[], |r| random_coords(r, 4), f, |x| renormalize_blocks(x, &[0..8]));
        assert!((out.best.value - top).abs() < 1e-8, "{} vs {top}", out.best.value);
        assert!(out.converged);
    }

    #[test]
    fn multistart_is_deterministic_and_thread_independent() {
        let f = |x: &[f64]| (3.0 * x[0]).sin() * (2.0 * x[1]).cos() - 0.1 * (x[0] * x[0] + x[1] * x[1]);
        let cfg = OptimizerConfig { restarts: 6, seed: 7, ..Default::default() };
        let init =
            |r: &mut ChaCha8Rng| linalg::gaussian_vector(1, r).iter().flat_map(|z| [z.re * 3.0, z.im * 3.0]).collect();
        let a = multistart(&cfg, &[], init, f, |_| false);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| multistart(&cfg, &[], init, f, |_| false));
        assert_eq!(a.values, b.values);
        assert_eq!(a.best.x, b.best.x);
    }

    #[test]
    fn warm_start_is_used_first() {
        let f = |x: &[f64]| -(x[0] - 5.0).powi(2);
        let cfg = OptimizerConfig { restarts: 1, ..Default::default() };
        let out = multistart(&cfg, &[vec![5.0]], |_| vec![-100.0], f, |_| false);
        assert!(out.best.value > -1e-12);
    }

    #[test]
    fn config_validation() {
        assert!(OptimizerConfig::default().validate().is_ok());
        assert!(OptimizerConfig { restarts: 0, ..Default::default() }.validate().is_err());
        assert!(OptimizerConfig { tolerance: 0.0, ..Default::default() }.validate().is_err());
        assert!(OptimizerConfig { tolerance: f64::NAN, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn generator_coords_give_unitaries() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let coords: Vec<f64> = linalg::gaussian_vector(8, &mut rng).iter().flat_map(|z| [z.re, z.im]).collect();
        let u = unitary_from_coords(4, &coords);
        assert!(linalg::unitarity_residual(&u) < 1e-12);
        assert!(linalg::max_abs(&(unitary_from_coords(4, &[0.0; 16]) - linalg::identity(4))) < 1e-14);
    }
}
