//! Retraction of arbitrary positive weights onto the admissible set.
//!
//! Non-admissible weights are moved along the velocity field
//!
//! ```text
//! dw_ij/dt = w_ij * g((w_ij + w_ji) u_ij / alpha) * h(w_ij - w_ji)
//! ```
//!
//! where `u_ij` is the projection of the lifted edge vector onto the residual
//! direction of the least-squares balance solve. Along the flow the energy
//! decays at least like `-C sqrt(E)`, the smallest weight never decreases
//! and the largest asymmetry never increases, so the flow reaches the
//! admissible set in finite time.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mesh::TorusTriangulation;
use crate::solver::{residual_structure, ResidualReport, WeightAssignment, DEFAULT_ADMISSIBLE_TOL};

/// `1 / (sqrt(2) * max(k, k'))` with `k, k'` the shortest generator loop
/// lengths. For non-admissible weights some `u_ij <= -beta`.
pub fn compute_beta(mesh: &TorusTriangulation) -> Result<f64> {
    let loops = mesh.generator_loops()?;
    let k = loops.k().max(loops.k_prime()) as f64;
    Ok(1.0 / (std::f64::consts::SQRT_2 * k))
}

/// Smallest directed weight `L(w)`.
pub fn min_weight(w: &WeightAssignment) -> f64 {
    w.min()
}

/// `M(w) = max(2, max |w_ij - w_ji|)`.
pub fn max_asymmetry_bound(mesh: &TorusTriangulation, w: &WeightAssignment) -> f64 {
    w.max_asymmetry(mesh).max(2.0)
}

/// `alpha(w) = beta / (2|E| + sum 1/w_ij)`.
pub fn alpha(mesh: &TorusTriangulation, w: &WeightAssignment, beta: f64) -> f64 {
    let inv_sum: f64 = w.values().iter().map(|v| 1.0 / v).sum();
    beta / (2.0 * mesh.edge_count() as f64 + inv_sum)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FlowConstants {
    pub beta: f64,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "M")]
    pub m: f64,
    pub alpha: f64,
    #[serde(rename = "C")]
    pub c: f64,
    /// `2 sqrt(E) / C`, an upper bound on the flow's existence time.
    pub t_bound: f64,
}

impl FlowConstants {
    pub fn new(mesh: &TorusTriangulation, w: &WeightAssignment, beta: f64, energy: f64) -> Self {
        let l = min_weight(w);
        let m = max_asymmetry_bound(mesh, w);
        let n = mesh.vertex_count() as f64;
        let c = (beta * l / m) / (2.0 * n.sqrt() * (1.0 + m / l).powf(n - 1.0));
        Self { beta, l, m, alpha: alpha(mesh, w, beta), c, t_bound: 2.0 * energy.sqrt() / c }
    }
}

pub fn flow_constants(mesh: &TorusTriangulation, w: &WeightAssignment, energy: f64) -> Result<FlowConstants> {
    Ok(FlowConstants::new(mesh, w, compute_beta(mesh)?, energy))
}

/// `exp(-1/t)` for `t > 0`, zero otherwise.
fn bump(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// Smooth step from 0 at `t <= 0` to 1 at `t >= 1`.
fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = bump(t);
        a / (a + bump(1.0 - t))
    }
}

/// Smooth and non-increasing; 1 on `(-inf, -1]`, 0 on `[0, inf)`.
pub fn smooth_g(s: f64) -> f64 {
    1.0 - smooth_step(s + 1.0)
}

/// Smooth and non-increasing; 1 on `(-inf, 1]`, 0 on `[2, inf)`.
pub fn smooth_h(s: f64) -> f64 {
    1.0 - smooth_step(s - 1.0)
}

/// Velocity for given `u` and `alpha`.
pub fn velocity(mesh: &TorusTriangulation, w: &WeightAssignment, u: &[f64], alpha: f64) -> Vec<f64> {
    (0..mesh.directed_edge_count())
        .map(|e| {
            let wij = w.get(e);
            let wji = w.get(mesh.reverse(e));
            wij * smooth_g((wij + wji) * u[e] / alpha) * smooth_h(wij - wji)
        })
        .collect()
}

/// The flow field at `w`; undefined (an error) on admissible weights.
pub fn theta(mesh: &TorusTriangulation, w: &WeightAssignment, tol: f64) -> Result<Vec<f64>> {
    let report = residual_structure(mesh, w, tol)?;
    let u = report.u.as_ref().ok_or(Error::AdmissibleInput)?;
    let beta = compute_beta(mesh)?;
    Ok(velocity(mesh, w, u, alpha(mesh, w, beta)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FlowStatus {
    Converged,
    BudgetExceeded,
    AlreadyAdmissible,
}

#[derive(Clone, Debug, Serialize)]
pub struct FlowSample {
    pub t: f64,
    /// Step size that produced this sample (zero for the initial state).
    pub dt: f64,
    pub weights: Vec<f64>,
    pub energy: f64,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "C")]
    pub c: f64,
    /// `sum u_ij theta_ij` at this state; absent once admissible.
    pub dissipation: Option<f64>,
    /// Smallest `u_ij` at this state; absent once admissible.
    pub min_u: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FlowTrace {
    pub samples: Vec<FlowSample>,
    pub status: FlowStatus,
    pub final_weights: Vec<f64>,
    /// Accepted steps.
    pub steps: usize,
    pub rejected: usize,
    pub beta: f64,
    /// Constants at the starting weights.
    pub initial: FlowConstants,
}

impl FlowTrace {
    pub fn final_energy(&self) -> f64 {
        self.samples.last().map_or(f64::NAN, |s| s.energy)
    }

    pub fn final_assignment(&self) -> WeightAssignment {
        WeightAssignment::from_values_unchecked(self.final_weights.clone())
    }

    pub fn end_time(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.t)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RetractOptions {
    pub tol: f64,
    /// Budget on step attempts, accepted or rejected.
    pub max_steps: usize,
    pub dt_init: f64,
    pub dt_min: f64,
    pub dt_max: f64,
}

impl Default for RetractOptions {
    fn default() -> Self {
        Self { tol: DEFAULT_ADMISSIBLE_TOL, max_steps: 200_000, dt_init: 0.01, dt_min: 1e-8, dt_max: 0.25 }
    }
}

struct State {
    w: WeightAssignment,
    report: ResidualReport,
    l: f64,
    m: f64,
}

impl State {
    fn new(mesh: &TorusTriangulation, w: WeightAssignment, tol: f64) -> Result<Self> {
        let report = residual_structure(mesh, &w, tol)?;
        let l = min_weight(&w);
        let m = max_asymmetry_bound(mesh, &w);
        Ok(Self { w, report, l, m })
    }

    fn sample(&self, mesh: &TorusTriangulation, t: f64, dt: f64, beta: f64) -> FlowSample {
        let consts = FlowConstants::new(mesh, &self.w, beta, self.report.energy);
        FlowSample {
            t,
            dt,
            weights: self.w.values().to_vec(),
            energy: self.report.energy,
            l: self.l,
            m: self.m,
            c: consts.c,
            dissipation: None,
            min_u: self.report.min_u(),
        }
    }
}

/// Integrates the flow from `w0` with explicit Euler steps until the energy
/// drops to `opts.tol`.
///
/// A step is accepted only if the energy strictly decreases, all weights
/// stay positive and finite, and `M` does not grow; otherwise the step size
/// is halved. Accepted steps double the step size up to `opts.dt_max`. The
/// weights are re-solved after every accepted step.
pub fn retract(mesh: &TorusTriangulation, w0: &WeightAssignment, opts: &RetractOptions) -> Result<FlowTrace> {
    let beta = compute_beta(mesh)?;
    let mut state = State::new(mesh, w0.clone(), opts.tol)?;
    let initial = FlowConstants::new(mesh, w0, beta, state.report.energy);
    let mut samples = vec![state.sample(mesh, 0.0, 0.0, beta)];

    if state.report.energy <= opts.tol {
        return Ok(FlowTrace {
            samples,
            status: FlowStatus::AlreadyAdmissible,
            final_weights: w0.values().to_vec(),
            steps: 0,
            rejected: 0,
            beta,
            initial,
        });
    }

    let mut t = 0.0;
    let mut dt = opts.dt_init.clamp(opts.dt_min, opts.dt_max);
    let mut steps = 0;
    let mut rejected = 0;
    let mut attempts = 0;
    let mut status = FlowStatus::BudgetExceeded;

    // velocity at the current state, recomputed after each acceptance
    let mut vel = {
        let u = state.report.u.as_ref().ok_or(Error::AdmissibleInput)?;
        velocity(mesh, &state.w, u, alpha(mesh, &state.w, beta))
    };
    samples[0].dissipation = Some(dissipation(state.report.u.as_deref().unwrap(), &vel));

    while attempts < opts.max_steps {
        attempts += 1;
        let next: Vec<f64> = state.w.values().iter().zip(&vel).map(|(w, v)| w + dt * v).collect();
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState(attempts));
        }
        let positive = next.iter().all(|&v| v > 0.0);
        let candidate = if positive {
            let cand = State::new(mesh, WeightAssignment::from_values_unchecked(next), opts.tol)?;
            if !cand.report.energy.is_finite() {
                return Err(Error::NonFiniteState(attempts));
            }
            let ok = cand.report.energy < state.report.energy && cand.m <= state.m && cand.l >= state.l;
            ok.then_some(cand)
        } else {
            None
        };

        let Some(cand) = candidate else {
            rejected += 1;
            dt *= 0.5;
            if dt < opts.dt_min {
                break;
            }
            continue;
        };

        t += dt;
        steps += 1;
        state = cand;
        let mut sample = state.sample(mesh, t, dt, beta);
        if state.report.energy <= opts.tol {
            samples.push(sample);
            status = FlowStatus::Converged;
            break;
        }
        let u = state.report.u.as_ref().ok_or(Error::AdmissibleInput)?;
        vel = velocity(mesh, &state.w, u, alpha(mesh, &state.w, beta));
        sample.dissipation = Some(dissipation(u, &vel));
        samples.push(sample);
        dt = (dt * 2.0).min(opts.dt_max);
    }

    Ok(FlowTrace { samples, status, final_weights: state.w.values().to_vec(), steps, rejected, beta, initial })
}

fn dissipation(u: &[f64], vel: &[f64]) -> f64 {
    u.iter().zip(vel).map(|(a, b)| a * b).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::gen_grid;
    use crate::solver::{is_admissible, solve_balance};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn beta_from_loops() {
        let (mesh, _) = gen_grid(3).unwrap();
        assert_abs_diff_eq!(compute_beta(&mesh).unwrap(), 1.0 / (3.0 * 2f64.sqrt()), epsilon = 1e-15);
        assert_abs_diff_eq!(compute_beta(&mesh).unwrap(), 0.23570226, epsilon = 1e-8);
        let (mesh, _) = gen_grid(4).unwrap();
        assert_abs_diff_eq!(compute_beta(&mesh).unwrap(), 1.0 / (4.0 * 2f64.sqrt()), epsilon = 1e-15);
    }

    #[test]
    fn constants_for_uniform_grid() {
        let (mesh, _) = gen_grid(3).unwrap();
        let w = WeightAssignment::uniform(&mesh, 1.0).unwrap();
        let c = flow_constants(&mesh, &w, 0.0).unwrap();
        let beta = 1.0 / (3.0 * 2f64.sqrt());
        assert_eq!(c.l, 1.0);
        assert_eq!(c.m, 2.0);
        assert_abs_diff_eq!(c.alpha, beta / 108.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c.alpha, 2.1824e-3, epsilon = 1e-7);
        assert_abs_diff_eq!(c.c, beta / (12.0 * 6561.0), epsilon = 1e-18);
        assert_abs_diff_eq!(c.c, 2.994e-6, epsilon = 1e-9);
    }

    #[test]
    fn alpha_bounds_random() {
        let (mesh, _) = gen_grid(3).unwrap();
        let beta = compute_beta(&mesh).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let w = WeightAssignment::from_fn(&mesh, |_, _| rng.random_range(0.01..20.0)).unwrap();
            let c = FlowConstants::new(&mesh, &w, beta, 1.0);
            assert!(c.alpha <= beta / (2.0 * 27.0));
            assert!(c.alpha <= beta * c.l);
            assert!(c.l > 0.0 && c.m >= 2.0 && c.c > 0.0);
        }
    }

    #[test]
    fn smooth_plateaus_and_monotonicity() {
        assert_eq!(smooth_g(-2.0), 1.0);
        assert_eq!(smooth_g(-1.0), 1.0);
        assert_eq!(smooth_g(0.5), 0.0);
        assert_eq!(smooth_g(0.0), 0.0);
        assert_eq!(smooth_h(0.0), 1.0);
        assert_eq!(smooth_h(1.0), 1.0);
        assert_eq!(smooth_h(3.0), 0.0);
        assert_eq!(smooth_h(2.0), 0.0);
        let grid: Vec<f64> = (0..10_000).map(|k| -3.0 + 6.0 * k as f64 / 9_999.0).collect();
        for pair in grid.windows(2) {
            assert!(smooth_g(pair[0]) >= smooth_g(pair[1]));
            assert!(smooth_h(pair[0]) >= smooth_h(pair[1]));
        }
        assert_abs_diff_eq!(smooth_g(-0.5), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(smooth_h(1.5), 0.5, epsilon = 1e-15);
    }

    fn single_asymmetry(mesh: &TorusTriangulation) -> WeightAssignment {
        WeightAssignment::from_fn(mesh, |i, j| if (i, j) == (0, 1) { 5.0 } else { 1.0 }).unwrap()
    }

    #[test]
    fn theta_properties() {
        let (mesh, _) = gen_grid(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let beta = compute_beta(&mesh).unwrap();
        for _ in 0..30 {
            let mut w = WeightAssignment::from_fn(&mesh, |_, _| rng.random_range(0.5..2.0)).unwrap();
            if rng.random_bool(0.5) {
                // push one edge to asymmetry 3
                let mut v = w.values().to_vec();
                let rev = mesh.reverse(4);
                v[4] = v[rev] + 3.0;
                w = WeightAssignment::new(&mesh, v).unwrap();
            }
            let report = residual_structure(&mesh, &w, DEFAULT_ADMISSIBLE_TOL).unwrap();
            let u = report.u.clone().unwrap();
            let a = alpha(&mesh, &w, beta);
            let vel = theta(&mesh, &w, DEFAULT_ADMISSIBLE_TOL).unwrap();
            for e in 0..mesh.directed_edge_count() {
                let (wij, wji) = (w.get(e), w.get(mesh.reverse(e)));
                assert!(vel[e] >= 0.0 && vel[e] <= wij);
                if u[e] >= 0.0 || wij - wji >= 2.0 {
                    assert_eq!(vel[e], 0.0);
                }
                if wij == wji && (wij + wji) * u[e] <= -a {
                    assert_eq!(vel[e], wij);
                }
            }
            assert!(dissipation(&u, &vel) <= -beta * min_weight(&w) / (2.0 * max_asymmetry_bound(&mesh, &w)) + 1e-12);
        }
    }

    #[test]
    fn theta_undefined_on_admissible() {
        let (mesh, _) = gen_grid(3).unwrap();
        let w = WeightAssignment::uniform(&mesh, 1.0).unwrap();
        assert!(matches!(theta(&mesh, &w, DEFAULT_ADMISSIBLE_TOL), Err(Error::AdmissibleInput)));
    }

    #[test]
    fn loop_bound_on_random_weights() {
        let (mesh, _) = gen_grid(3).unwrap();
        let beta = compute_beta(&mesh).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..100 {
            let w = WeightAssignment::from_fn(&mesh, |_, _| rng.random_range(0.5..2.0)).unwrap();
            let report = residual_structure(&mesh, &w, DEFAULT_ADMISSIBLE_TOL).unwrap();
            assert!(report.min_u().unwrap() <= -beta);
        }
    }

    #[test]
    fn already_admissible_is_identity() {
        let (mesh, _) = gen_grid(3).unwrap();
        let w = WeightAssignment::uniform(&mesh, 1.3).unwrap();
        let trace = retract(&mesh, &w, &RetractOptions::default()).unwrap();
        assert_eq!(trace.status, FlowStatus::AlreadyAdmissible);
        assert_eq!(trace.steps, 0);
        assert_eq!(trace.final_weights, w.values());
    }

    #[test]
    fn single_asymmetry_converges() {
        let (mesh, _) = gen_grid(3).unwrap();
        let w0 = single_asymmetry(&mesh);
        let trace = retract(&mesh, &w0, &RetractOptions::default()).unwrap();
        assert_eq!(trace.status, FlowStatus::Converged);
        assert!(trace.final_energy() <= 1e-10);
        for pair in trace.samples.windows(2) {
            assert!(pair[1].energy < pair[0].energy);
            assert!(pair[1].t > pair[0].t);
        }
        // cross-check sampled energies with a fresh solve
        for s in trace.samples.iter().step_by(7) {
            let w = WeightAssignment::new(&mesh, s.weights.clone()).unwrap();
            let (_, report) = solve_balance(&mesh, &w).unwrap();
            assert_abs_diff_eq!(report.energy, s.energy, epsilon = 1e-14);
        }
        let fin = trace.final_assignment();
        assert!(is_admissible(&mesh, &fin, 1e-10).unwrap());

        // idempotent on the result
        let again = retract(&mesh, &fin, &RetractOptions::default()).unwrap();
        assert_eq!(again.status, FlowStatus::AlreadyAdmissible);
    }

    #[test]
    fn tiny_budget_reports_exceeded() {
        let (mesh, _) = gen_grid(3).unwrap();
        let w0 = single_asymmetry(&mesh);
        let opts = RetractOptions { max_steps: 2, ..Default::default() };
        let trace = retract(&mesh, &w0, &opts).unwrap();
        assert_eq!(trace.status, FlowStatus::BudgetExceeded);
        assert!(trace.final_energy() <= trace.samples[0].energy);
    }
}
