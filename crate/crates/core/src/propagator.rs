//! Hamiltonian ray transport: trajectories of ẋ = h_p, ṗ = −h_x for a branch
//! Hamiltonian, the phase accumulated along them, the leading-order amplitude
//! of the propagator's oscillatory integrals, the time-zero subprincipal
//! trace, and the constant-coefficient eigenvalue-expansion validation of the
//! phase.
//!
//! Only the invariantly defined leading data is constructed: the principal
//! amplitude v(t)v(0)†e^{−i∫f} and the time-zero curvature trace. Lower-order
//! symbol transport is deliberately out of scope.

use crate::error::{Error, Result};
use crate::linalg::{jacobi_hermitian, CMatrix};
use crate::operator::{unit_sphere_grid, OperatorData};
use crate::scalar::{cr, C, Real};
use crate::symbol::{inner, phase_f, curvature_trace, EigenBranch, SymbolTable};

/// Flow integration controls: Runge–Kutta–Fehlberg 4(5) with combined
/// absolute/relative local error control, Hamiltonian-drift rejection and an
/// eigenvector-overlap step cap.
#[derive(Clone, Debug)]
pub struct FlowOptions<R: Real> {
    pub abs_tol: R,
    pub rel_tol: R,
    pub initial_step: R,
    pub max_step: R,
    /// per-step Hamiltonian drift budget, relative to |h|
    pub drift_tol: R,
    /// minimum |⟨v_prev, v_new⟩| per accepted step
    pub min_overlap: R,
    pub max_steps: usize,
}

impl<R: Real> Default for FlowOptions<R> {
    fn default() -> Self {
        Self {
            abs_tol: R::of(1e-10),
            rel_tol: R::of(1e-10),
            initial_step: R::of(1e-2),
            max_step: R::of(0.2),
            drift_tol: R::of(1e-9),
            min_overlap: R::of(0.99),
            max_steps: 1_000_000,
        }
    }
}

/// State sample along a Hamiltonian trajectory.
#[derive(Clone, Debug)]
pub struct TrajectoryState<R: Real> {
    pub t: R,
    /// position wrapped to [0, 2π)^n
    pub x: Vec<R>,
    pub p: Vec<R>,
    /// ∫₀ᵗ f dτ along the trajectory
    pub accumulated_phase: R,
    /// continuity-transported unit eigenvector
    pub v: Vec<C<R>>,
    pub h: R,
}

/// Full trajectory with conserved-quantity diagnostics.
#[derive(Clone, Debug)]
pub struct Trajectory<R: Real> {
    pub states: Vec<TrajectoryState<R>>,
    pub max_h_drift: R,
    pub branch: i32,
}

impl<R: Real> Trajectory<R> {
    pub fn final_state(&self) -> &TrajectoryState<R> {
        self.states.last().expect("trajectory has initial state")
    }
}

/// Integrate the Hamiltonian flow of branch `j` from (y, q) to `t_final`
/// (may be negative). Step acceptance requires both the RKF45 local error
/// estimate and the per-step drift of h to stay within tolerance, and the
/// transported eigenvector to keep overlap above `min_overlap`.
pub fn hamiltonian_flow<R: Real>(
    op: &OperatorData<R>,
    j: i32,
    y: &[R],
    q: &[R],
    t_final: R,
    opts: &FlowOptions<R>,
) -> Result<Trajectory<R>> {
    let n = op.dim();
    if q.iter().all(|v| v.is_zero()) {
        return Err(Error::Precondition("flow needs nonzero momentum".into()));
    }
    let table = SymbolTable::new(op)?;
    // state vector: [x (n), p (n), phase (1)]
    let mut state: Vec<R> = y.iter().chain(q.iter()).copied().collect();
    state.push(R::zero());

    let eval_branch = |s: &[R]| -> Result<(EigenBranch<R>, R)> {
        let point = table.at(&s[..n])?;
        let branch = point.branch(j, &s[n..2 * n], None)?;
        let f = phase_f(&point, &s[n..2 * n], &branch)?;
        Ok((branch, f))
    };

    let derivative = |s: &[R]| -> Result<Vec<R>> {
        let (branch, f) = eval_branch(s)?;
        let mut d = Vec::with_capacity(2 * n + 1);
        d.extend_from_slice(&branch.dh_p);
        for alpha in 0..n {
            d.push(-branch.dh_x[alpha]);
        }
        d.push(f);
        Ok(d)
    };

    let (b0, _) = eval_branch(&state)?;
    let h0 = b0.h;
    let mut v_current = b0.v.clone();
    let mut states = vec![TrajectoryState {
        t: R::zero(),
        x: wrap(&state[..n]),
        p: state[n..2 * n].to_vec(),
        accumulated_phase: R::zero(),
        v: v_current.clone(),
        h: h0,
    }];

    let sign = if t_final >= R::zero() { R::one() } else { -R::one() };
    let t_total = t_final.abs();
    let mut t = R::zero();
    let mut h_step = opts.initial_step.min(opts.max_step).min(t_total.max(R::of(1e-6)));
    let mut max_drift = R::zero();
    let mut h_prev = h0;
    let mut steps = 0usize;

    while t < t_total {
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::FlowFailure("step budget exceeded".into()));
        }
        let dt = h_step.min(t_total - t);
        if dt < R::of(1e-14) {
            return Err(Error::FlowFailure("step underflow".into()));
        }
        let (next, err) = rkf45_step(&state, dt * sign, &derivative)?;
        // error control
        let scale = opts.abs_tol
            + opts.rel_tol
                * state
                    .iter()
                    .map(|v| v.abs())
                    .fold(R::zero(), |a, b| a.max(b));
        if err > scale {
            h_step = dt * R::of(0.5);
            continue;
        }
        // Hamiltonian drift and eigenvector overlap checks
        let (branch_next, _) = eval_branch(&next)?;
        let drift = (branch_next.h - h_prev).abs();
        let drift_budget = opts.drift_tol * (R::one() + h0.abs()) + err * R::of(100.0);
        if drift > drift_budget {
            h_step = dt * R::of(0.5);
            continue;
        }
        let overlap = inner(&v_current, &branch_next.v);
        if overlap.norm() < opts.min_overlap {
            h_step = dt * R::of(0.5);
            continue;
        }
        // accept: continuity-align the eigenvector phase
        let phase = overlap.conj() / cr(overlap.norm());
        v_current = branch_next.v.iter().map(|z| phase * *z).collect();
        state = next;
        t = t + dt;
        max_drift = max_drift.max((branch_next.h - h0).abs());
        h_prev = branch_next.h;
        states.push(TrajectoryState {
            t: t * sign,
            x: wrap(&state[..n]),
            p: state[n..2 * n].to_vec(),
            accumulated_phase: state[2 * n],
            v: v_current.clone(),
            h: branch_next.h,
        });
        // step growth
        let grow = if err > R::zero() {
            (scale / err).powf(R::of(0.2)).min(R::of(2.0))
        } else {
            R::of(2.0)
        };
        h_step = (dt * grow * R::of(0.9)).min(opts.max_step);
    }
    Ok(Trajectory {
        states,
        max_h_drift: max_drift,
        branch: j,
    })
}

fn wrap<R: Real>(x: &[R]) -> Vec<R> {
    let tau = R::two_pi();
    x.iter()
        .map(|&v| {
            let w = v - (v / tau).floor() * tau;
            if w < R::zero() {
                w + tau
            } else {
                w
            }
        })
        .collect()
}

/// One Runge–Kutta–Fehlberg 4(5) step; returns (5th-order state, error
/// estimate).
fn rkf45_step<R: Real>(
    state: &[R],
    dt: R,
    derivative: &impl Fn(&[R]) -> Result<Vec<R>>,
) -> Result<(Vec<R>, R)> {
    let a2 = [R::of(0.25)];
    let a3 = [R::of(3.0 / 32.0), R::of(9.0 / 32.0)];
    let a4 = [
        R::of(1932.0 / 2197.0),
        R::of(-7200.0 / 2197.0),
        R::of(7296.0 / 2197.0),
    ];
    let a5 = [
        R::of(439.0 / 216.0),
        R::of(-8.0),
        R::of(3680.0 / 513.0),
        R::of(-845.0 / 4104.0),
    ];
    let a6 = [
        R::of(-8.0 / 27.0),
        R::of(2.0),
        R::of(-3544.0 / 2565.0),
        R::of(1859.0 / 4104.0),
        R::of(-11.0 / 40.0),
    ];
    let b5 = [
        R::of(16.0 / 135.0),
        R::zero(),
        R::of(6656.0 / 12825.0),
        R::of(28561.0 / 56430.0),
        R::of(-9.0 / 50.0),
        R::of(2.0 / 55.0),
    ];
    let b4 = [
        R::of(25.0 / 216.0),
        R::zero(),
        R::of(1408.0 / 2565.0),
        R::of(2197.0 / 4104.0),
        R::of(-0.2),
        R::zero(),
    ];
    let dim = state.len();
    let advance = |coefs: &[R], ks: &[Vec<R>]| -> Vec<R> {
        let mut s = state.to_vec();
        for (c, k) in coefs.iter().zip(ks.iter()) {
            for i in 0..dim {
                s[i] = s[i] + *c * k[i] * dt;
            }
        }
        s
    };
    let k1 = derivative(state)?;
    let k2 = derivative(&advance(&a2, &[k1.clone()]))?;
    let k3 = derivative(&advance(&a3, &[k1.clone(), k2.clone()]))?;
    let k4 = derivative(&advance(&a4, &[k1.clone(), k2.clone(), k3.clone()]))?;
    let k5 = derivative(&advance(&a5, &[k1.clone(), k2.clone(), k3.clone(), k4.clone()]))?;
    let k6 = derivative(&advance(
        &a6,
        &[k1.clone(), k2.clone(), k3.clone(), k4.clone(), k5.clone()],
    ))?;
    let ks = [k1, k2, k3, k4, k5, k6];
    let mut out5 = state.to_vec();
    let mut out4 = state.to_vec();
    for i in 0..dim {
        let mut acc5 = R::zero();
        let mut acc4 = R::zero();
        for (s, k) in ks.iter().enumerate() {
            acc5 = acc5 + b5[s] * k[i];
            acc4 = acc4 + b4[s] * k[i];
        }
        out5[i] = out5[i] + acc5 * dt;
        out4[i] = out4[i] + acc4 * dt;
    }
    let mut err = R::zero();
    for i in 0..dim {
        err = err.max((out5[i] - out4[i]).abs());
    }
    Ok((out5, err))
}

/// Leading-order amplitude of the propagator's oscillatory integral:
/// v(x(t),p(t)) [v(y,q)]† exp(−i ∫₀ᵗ f dτ), with the endpoint phase fixed by
/// continuity transport. Positively homogeneous of degree 0 in q; at t = 0 it
/// is the rank-one branch projection.
pub fn transport_amplitude<R: Real>(
    op: &OperatorData<R>,
    j: i32,
    y: &[R],
    q: &[R],
    t: R,
    opts: &FlowOptions<R>,
) -> Result<CMatrix<R>> {
    let traj = hamiltonian_flow(op, j, y, q, t, opts)?;
    let first = &traj.states[0];
    let last = traj.final_state();
    let phase = last.accumulated_phase;
    let rot = C::new(phase.cos(), -phase.sin()); // e^{−i φ}
    Ok(CMatrix::outer(&last.v, &first.v).scale(rot))
}

/// Time-zero subprincipal trace of the propagator family: delegates to the
/// curvature trace −i{v†, v}.
pub fn u0_subprincipal_trace<R: Real>(op: &OperatorData<R>, j: i32, x: &[R], p: &[R]) -> Result<R> {
    let table = SymbolTable::new(op)?;
    let point = table.at(x)?;
    let branch = point.branch(j, p, None)?;
    curvature_trace(&branch)
}

/// Residual table of the constant-coefficient phase validation: at radius R
/// and sphere direction ω, the exact eigenvalue of the full symbol
/// S^α(Rω)_α + Q must match h^{(j)}(Rω) + f^{(j)}(ω) up to O(1/R).
#[derive(Clone, Debug)]
pub struct PhaseValidation<R: Real> {
    /// (radius, max |eig − h − f| over the sphere sample)
    pub rows: Vec<(R, R)>,
    /// fitted log-log decay exponent (None when residuals are at rounding
    /// level, i.e. the expansion is exact)
    pub exponent: Option<R>,
    pub exact: bool,
}

pub fn validate_f_constant_coeff<R: Real>(
    op: &OperatorData<R>,
    j: i32,
    radii: &[R],
) -> Result<PhaseValidation<R>> {
    if !op.is_constant_coefficient() {
        return Err(Error::Precondition(
            "phase validation needs constant coefficients".into(),
        ));
    }
    let n = op.dim();
    let m = op.size();
    let table = SymbolTable::new(op)?;
    let origin = vec![R::zero(); n];
    let point = table.at(&origin)?;
    let q0 = op.q_coefficient()?.coefficient(&vec![0; n]);
    let sphere = unit_sphere_grid::<R>(n, 12);

    let mut rows = Vec::with_capacity(radii.len());
    for &radius in radii {
        let mut max_res = R::zero();
        for omega in &sphere {
            let branch = point.branch(j, omega, None)?;
            let f = phase_f(&point, omega, &branch)?;
            // exact eigenvalues of the full symbol at R·ω
            let p_scaled: Vec<R> = omega.iter().map(|&w| w * radius).collect();
            let full = point.principal(&p_scaled).add(&q0);
            let (evals, _) = jacobi_hermitian(&full)?;
            // the branch's eigenvalue sits at the same ordered position for
            // large radii: locate by proximity to R·h + f
            let predicted = radius * branch.h + f;
            let nearest = evals
                .iter()
                .map(|&e| (e - predicted).abs())
                .fold(R::infinity(), |a, b| a.min(b));
            max_res = max_res.max(nearest);
            let _ = m;
        }
        rows.push((radius, max_res));
    }
    // fit ln(res) = c + e·ln(R); treat sub-1e-13 residuals as exactly zero
    let filtered: Vec<(R, R)> = rows
        .iter()
        .copied()
        .filter(|(_, r)| *r > R::of(1e-13))
        .collect();
    let exact = filtered.is_empty();
    let exponent = if filtered.len() >= 2 {
        let k = R::of(filtered.len() as f64);
        let mut sx = R::zero();
        let mut sy = R::zero();
        let mut sxx = R::zero();
        let mut sxy = R::zero();
        for (r, res) in &filtered {
            let lx = r.ln();
            let ly = res.ln();
            sx = sx + lx;
            sy = sy + ly;
            sxx = sxx + lx * lx;
            sxy = sxy + lx * ly;
        }
        Some((k * sxy - sx * sy) / (k * sxx - sx * sx))
    } else {
        None
    };
    Ok(PhaseValidation {
        rows,
        exponent,
        exact,
    })
}
