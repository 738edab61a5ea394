//! Two-term Weyl coefficients: the general quadrature route (phase-space
//! volume and branch integrand over the sphere bundle), the closed 3D
//! geometric route, and empirical extraction from computed spectra.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{covariant_subprincipal, dirac_action_correction, extract_metric};
use crate::operator::{x_grid_points, OperatorData};
use crate::quad::{sphere_rule, SphereNode};
use crate::scalar::Real;
use crate::spectra::SpectrumResult;
use crate::symbol::{b_integrand, SymbolTable};

/// Quadrature configuration for the general route. The x-integral uses the
/// torus trapezoid rule (spectrally exact for trigonometric polynomials);
/// the momentum integral collapses to the unit sphere by homogeneity.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// x-grid points per axis
    pub x_per_axis: usize,
    /// circle nodes (n = 2)
    pub circle_nodes: usize,
    /// Gauss–Legendre polar nodes (n = 3)
    pub polar_nodes: usize,
    /// trapezoid azimuth nodes (n = 3)
    pub azimuth_nodes: usize,
    /// fixed-order sequential reduction (bit reproducibility)
    pub sequential: bool,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            x_per_axis: 16,
            circle_nodes: 256,
            polar_nodes: 64,
            azimuth_nodes: 128,
            sequential: false,
        }
    }
}

impl QuadratureSpec {
    fn halved(&self) -> Self {
        Self {
            x_per_axis: (self.x_per_axis / 2).max(4),
            circle_nodes: (self.circle_nodes / 2).max(16),
            polar_nodes: (self.polar_nodes / 2).max(8),
            azimuth_nodes: (self.azimuth_nodes / 2).max(16),
            sequential: self.sequential,
        }
    }

    fn sphere<R: Real>(&self, n: usize) -> Vec<SphereNode<R>> {
        sphere_rule(n, self.circle_nodes, self.polar_nodes, self.azimuth_nodes)
    }
}

/// Which route produced a pair of Weyl coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoefficientRoute {
    GeneralMicrolocal,
    ThreedimGeometric,
    EmpiricalFit,
}

/// First and second Weyl coefficients with an error estimate from node
/// halving.
#[derive(Clone, Debug)]
pub struct AsymptoticCoefficients<R: Real> {
    pub a: R,
    pub b: R,
    pub quad_error_a: R,
    pub quad_error_b: R,
    pub route: CoefficientRoute,
}

/// First Weyl coefficient
/// a = (2π)^{−n} Σ_{j>0} ∫ vol{p : h^{(j)}(x,p) < 1} dx, with the volume
/// reduced by homogeneity to (1/n)∫_{S^{n−1}} h^{−n} dω.
pub fn coeff_a<R: Real>(op: &OperatorData<R>, quad: &QuadratureSpec) -> Result<(R, R)> {
    let (full, halved) = sphere_sums(op, quad, false)?;
    Ok((full.0, (full.0 - halved.0).abs()))
}

/// Second Weyl coefficient
/// b = −(2π)^{−n} Σ_{j>0} ∫∫ F_j(x,ω) h^{(j)}(x,ω)^{−n} dω dx with F_j the
/// branch integrand (the −n and the radial 1/n cancel).
pub fn coeff_b<R: Real>(op: &OperatorData<R>, quad: &QuadratureSpec) -> Result<(R, R)> {
    let (full, halved) = sphere_sums(op, quad, true)?;
    Ok((full.1, (full.1 - halved.1).abs()))
}

/// Both coefficients in one sweep (shared branch evaluations).
pub fn coeff_ab<R: Real>(
    op: &OperatorData<R>,
    quad: &QuadratureSpec,
) -> Result<AsymptoticCoefficients<R>> {
    let (full, halved) = sphere_sums(op, quad, true)?;
    Ok(AsymptoticCoefficients {
        a: full.0,
        b: full.1,
        quad_error_a: (full.0 - halved.0).abs(),
        quad_error_b: (full.1 - halved.1).abs(),
        route: CoefficientRoute::GeneralMicrolocal,
    })
}

/// Evaluate (a, b) at the given quadrature and at halved node counts for the
/// error estimate. Weighted operators are conjugated first.
fn sphere_sums<R: Real>(
    op: &OperatorData<R>,
    quad: &QuadratureSpec,
    with_b: bool,
) -> Result<((R, R), (R, R))> {
    let work = match op.weight_series() {
        Some(_) => op.conjugate_weight()?.0,
        None => op.clone(),
    };
    let full = sphere_sum_once(&work, quad, with_b)?;
    let halved = sphere_sum_once(&work, &quad.halved(), with_b)?;
    Ok((full, halved))
}

fn sphere_sum_once<R: Real>(
    op: &OperatorData<R>,
    quad: &QuadratureSpec,
    with_b: bool,
) -> Result<(R, R)> {
    let n = op.dim();
    if !(n == 2 || n == 3) {
        return Err(Error::Precondition(
            "Weyl quadrature supports n = 2 and n = 3".into(),
        ));
    }
    let table = SymbolTable::new(op)?;
    let sphere = quad.sphere::<R>(n);
    let x_points = x_grid_points::<R>(n, quad.x_per_axis, op.max_cutoff());
    let x_weight = R::two_pi().powi(n as i32) / R::of(x_points.len() as f64);
    let nf = R::of(n as f64);

    let per_point = |x: &Vec<R>| -> Result<(R, R)> {
        let point = table.at(x)?;
        let mut acc_a = R::zero();
        let mut acc_b = R::zero();
        for node in &sphere {
            let branches = point.branches(&node.omega, None)?;
            for branch in branches.iter().filter(|b| b.j > 0) {
                if branch.h <= R::zero() {
                    return Err(Error::Precondition(
                        "positive branch with non-positive eigenvalue: operator not elliptic"
                            .into(),
                    ));
                }
                let hn = branch.h.powi(n as i32);
                acc_a = acc_a + node.weight / (nf * hn);
                if with_b {
                    let f = b_integrand(&point, &node.omega, branch)?;
                    acc_b = acc_b + node.weight * f / hn;
                }
            }
        }
        Ok((acc_a, acc_b))
    };

    let sums: Result<Vec<(R, R)>> = if quad.sequential {
        x_points.iter().map(per_point).collect()
    } else {
        x_points.par_iter().map(per_point).collect()
    };
    let sums = sums?;
    let mut total_a = R::zero();
    let mut total_b = R::zero();
    for (a, b) in sums {
        total_a = total_a + a;
        total_b = total_b + b;
    }
    let norm = R::two_pi().powi(-(n as i32)) * x_weight;
    Ok((total_a * norm, -total_b * norm))
}

/// Closed 3D route for trace-free elliptic 2×2 operators with weight s
/// (defaulting to s ≡ 1):
/// a = (1/6π²) ∫ s³ √(det g_{αβ}) dx,
/// b = −(1/4π²) ∫ s² tr(L_csub) √(det g_{αβ}) dx,
/// plus the decomposition b = S(ξ)/2π² − (1/4π²)∫ s² tr(L_sub) √g dx through
/// the action functional; the two must agree to 1e−10.
#[derive(Clone, Debug)]
pub struct ThreeDimCoefficients<R: Real> {
    pub a: R,
    pub b: R,
    /// b recomputed through the action decomposition
    pub b_via_action: R,
    /// massless Dirac action S(ξ) (spectral-identity route)
    pub action: R,
}

pub fn coeff_ab_3d<R: Real>(op: &OperatorData<R>) -> Result<ThreeDimCoefficients<R>> {
    if op.dim() != 3 || op.size() != 2 {
        return Err(Error::Precondition("3D route needs n = 3, m = 2".into()));
    }
    for s in op.principal_coefficients() {
        if s.trace_series().max_coefficient_norm() > R::of(1e-10) {
            return Err(Error::Precondition(
                "3D route needs a trace-free principal symbol".into(),
            ));
        }
    }
    let csub = covariant_subprincipal(op)?;
    let metric = extract_metric(op)?;
    let weight = op.weight_series().cloned().unwrap_or_else(|| {
        crate::series::FourierMatrixSeries::scalar_constant(3, R::one())
            .claim_hermitian()
            .expect("constant one")
    });
    let pi = R::pi();

    let (int_a, int_b, int_lsub) = if let Some(g) = metric.constant_value() {
        // exact series route
        let sqrt_det = (R::one() / g.det().re).sqrt();
        let s2 = weight.multiply(&weight)?;
        let s3 = s2.multiply(&weight)?;
        let ia = s3.integrate_torus()[(0, 0)].re * sqrt_det;
        let corr = csub.correction_series()?;
        let tr_csub = op
            .lsub_series()
            .trace_series()
            .add_series(&corr.trace_series())?;
        let ib = s2.multiply(&tr_csub)?.integrate_torus()[(0, 0)].re * sqrt_det;
        let il = s2.multiply(&op.lsub_series().trace_series())?.integrate_torus()[(0, 0)].re
            * sqrt_det;
        (ia, ib, il)
    } else {
        // dense-grid route (spectrally accurate for smooth fields)
        let per_axis = (4 * op.max_cutoff() + 8).clamp(16, 48);
        let total = per_axis.pow(3);
        let mut ia = R::zero();
        let mut ib = R::zero();
        let mut il = R::zero();
        for flat in 0..total {
            let x = grid_point3::<R>(flat, per_axis);
            let s = weight.eval(&x)?[(0, 0)].re;
            let sqrt_det = metric.det_glower(&x)?.sqrt();
            let tr_csub = csub.eval(&x)?.trace().re;
            let tr_lsub = op.subprincipal_symbol(&x)?.trace().re;
            ia = ia + s * s * s * sqrt_det;
            ib = ib + s * s * tr_csub * sqrt_det;
            il = il + s * s * tr_lsub * sqrt_det;
        }
        let cell = R::two_pi().powi(3) / R::of(total as f64);
        (ia * cell, ib * cell, il * cell)
    };

    let a = int_a / (R::of(6.0) * pi * pi);
    let b = -int_b / (R::of(4.0) * pi * pi);
    let action = dirac_action_correction(op)?;
    let b_via_action = action / (R::of(2.0) * pi * pi) - int_lsub / (R::of(4.0) * pi * pi);
    let scale = b.abs().max(R::one());
    if (b - b_via_action).abs() > R::of(1e-10) * scale {
        return Err(Error::RouteMismatch(format!(
            "3D decompositions disagree: b = {:e} vs b via action = {:e}",
            b.as_f64(),
            b_via_action.as_f64()
        )));
    }
    Ok(ThreeDimCoefficients {
        a,
        b,
        b_via_action,
        action,
    })
}

fn grid_point3<R: Real>(flat: usize, grid_n: usize) -> Vec<R> {
    let mut coords = vec![R::zero(); 3];
    let mut rem = flat;
    for a in (0..3).rev() {
        coords[a] = R::two_pi() * R::of((rem % grid_n) as f64) / R::of(grid_n as f64);
        rem /= grid_n;
    }
    coords
}

/// Empirical fit of N(λ) ≈ aλ^n + bλ^{n−1} from a computed spectrum on a
/// λ-window, after Gaussian mollification.
#[derive(Clone, Debug)]
pub struct EmpiricalFit<R: Real> {
    pub a: R,
    pub b: R,
    /// root-mean-square residual of the fitted model over the window
    pub residual: R,
    pub samples: usize,
    pub window: (R, R),
    pub mollifier_width: R,
    pub a_known: bool,
}

/// Fit (a, b). With `a_known` the better-conditioned route
/// b = mean((N_moll(λ) − aλ^n)/λ^{n−1}) is used; otherwise a joint least
/// squares on the two-term model.
pub fn fit_empirical<R: Real>(
    spec: &SpectrumResult<R>,
    a_known: Option<R>,
    window: (R, R),
    mollifier_width: R,
    samples: usize,
) -> Result<EmpiricalFit<R>> {
    let (lo, hi) = window;
    if !(lo > R::zero() && hi > lo) {
        return Err(Error::Precondition("empty fit window".into()));
    }
    if hi + R::of(5.0) * mollifier_width > spec.trust_radius {
        return Err(Error::Precondition(format!(
            "window end {} + 5w exceeds trust radius {}",
            hi.as_f64(),
            spec.trust_radius.as_f64()
        )));
    }
    if samples < 20 {
        return Err(Error::Precondition(
            "fit window too narrow: need at least 20 sample points".into(),
        ));
    }
    let n = spec.n as i32;
    let lambdas: Vec<R> = (0..samples)
        .map(|i| lo + (hi - lo) * R::of(i as f64) / R::of((samples - 1) as f64))
        .collect();
    let values: Vec<R> = lambdas
        .iter()
        .map(|&l| spec.mollified_counting(l, mollifier_width))
        .collect::<Result<_>>()?;

    let (a, b) = match a_known {
        Some(a) => {
            let mut acc = R::zero();
            for (&l, &v) in lambdas.iter().zip(values.iter()) {
                acc = acc + (v - a * l.powi(n)) / l.powi(n - 1);
            }
            (a, acc / R::of(samples as f64))
        }
        None => {
            // 2×2 normal equations on the basis (λ^n, λ^{n−1})
            let mut s11 = R::zero();
            let mut s12 = R::zero();
            let mut s22 = R::zero();
            let mut r1 = R::zero();
            let mut r2 = R::zero();
            for (&l, &v) in lambdas.iter().zip(values.iter()) {
                let f1 = l.powi(n);
                let f2 = l.powi(n - 1);
                s11 = s11 + f1 * f1;
                s12 = s12 + f1 * f2;
                s22 = s22 + f2 * f2;
                r1 = r1 + f1 * v;
                r2 = r2 + f2 * v;
            }
            let det = s11 * s22 - s12 * s12;
            if det.abs() <= R::epsilon() * s11 * s22 {
                return Err(Error::Precondition(
                    "joint fit ill-conditioned on this window".into(),
                ));
            }
            ((s22 * r1 - s12 * r2) / det, (s11 * r2 - s12 * r1) / det)
        }
    };
    let mut res2 = R::zero();
    for (&l, &v) in lambdas.iter().zip(values.iter()) {
        let model = a * l.powi(n) + b * l.powi(n - 1);
        res2 = res2 + (v - model) * (v - model);
    }
    Ok(EmpiricalFit {
        a,
        b,
        residual: (res2 / R::of(samples as f64)).sqrt(),
        samples,
        window,
        mollifier_width,
        a_known: a_known.is_some(),
    })
}
