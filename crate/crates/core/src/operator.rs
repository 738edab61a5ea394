//! First-order operators on T^n given by invariant data.
//!
//! An operator L = P^α(x)∂_α + Q(x) is stored as the pair (S^α, L_sub) with
//! S^α = iP^α the Hermitian momentum coefficients of the principal symbol
//! L_prin(x,p) = S^α(x) p_α and L_sub the (Hermitian) subprincipal symbol.
//! Specifying (S, L_sub) instead of (P, Q) makes formal self-adjointness a
//! constructor invariant: the local zero-order coefficient is recovered as
//! Q = L_sub − (i/2)∂_α S^α.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::scalar::{cr, im, C, Real};
use crate::series::{FourierMatrixSeries, SeriesJson};

/// Relative tolerance for gauge-field pointwise constraints.
pub const GAUGE_TOL: f64 = 1e-10;

/// Formally self-adjoint first-order operator on T^n, plus an optional
/// positive scalar weight for the eigenvalue problem L v = λ s v.
#[derive(Clone, Debug)]
pub struct OperatorData<R: Real> {
    n: usize,
    m: usize,
    s: Vec<FourierMatrixSeries<R>>,
    lsub: FourierMatrixSeries<R>,
    weight: Option<FourierMatrixSeries<R>>,
}

impl<R: Real> OperatorData<R> {
    /// Build the operator from its invariant data. All series must carry the
    /// hermitian-valued flag; the weight (if any) must be a strictly positive
    /// scalar on a dense sampling grid.
    pub fn build(
        s: Vec<FourierMatrixSeries<R>>,
        lsub: FourierMatrixSeries<R>,
        weight: Option<FourierMatrixSeries<R>>,
    ) -> Result<Self> {
        let n = s.len();
        if n < 2 {
            return Err(Error::Precondition("need dimension n >= 2".into()));
        }
        let m = lsub.rows();
        if m < 2 {
            return Err(Error::Precondition("need system size m >= 2".into()));
        }
        for (alpha, sa) in s.iter().enumerate() {
            if sa.dim() != n || sa.rows() != m || sa.cols() != m {
                return Err(Error::DimensionMismatch(format!(
                    "S^{} has shape {}x{} on T^{}, expected {m}x{m} on T^{n}",
                    alpha + 1,
                    sa.rows(),
                    sa.cols(),
                    sa.dim()
                )));
            }
            if !sa.is_hermitian_valued() {
                return Err(Error::HermitianFlagMissing(format!("S^{}", alpha + 1)));
            }
        }
        if lsub.dim() != n || lsub.cols() != m {
            return Err(Error::DimensionMismatch("L_sub shape".into()));
        }
        if !lsub.is_hermitian_valued() {
            return Err(Error::HermitianFlagMissing("L_sub".into()));
        }
        if let Some(w) = &weight {
            if w.rows() != 1 || w.cols() != 1 || w.dim() != n {
                return Err(Error::DimensionMismatch("weight must be scalar".into()));
            }
            if !w.is_hermitian_valued() {
                return Err(Error::HermitianFlagMissing("weight".into()));
            }
            let min = min_real_on_grid(w, weight_grid(w))?;
            if min <= R::zero() {
                return Err(Error::NonPositiveWeight { min: min.as_f64() });
            }
        }
        Ok(Self {
            n,
            m,
            s,
            lsub,
            weight,
        })
    }

    /// Bypass all validation. Exists for negative-control experiments
    /// (deliberately corrupted operators); everything downstream assumes the
    /// invariants hold.
    pub fn build_unchecked(
        s: Vec<FourierMatrixSeries<R>>,
        lsub: FourierMatrixSeries<R>,
        weight: Option<FourierMatrixSeries<R>>,
    ) -> Self {
        let n = s.len();
        let m = lsub.rows();
        Self {
            n,
            m,
            s,
            lsub,
            weight,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn size(&self) -> usize {
        self.m
    }

    pub fn principal_coefficients(&self) -> &[FourierMatrixSeries<R>] {
        &self.s
    }

    pub fn lsub_series(&self) -> &FourierMatrixSeries<R> {
        &self.lsub
    }

    pub fn weight_series(&self) -> Option<&FourierMatrixSeries<R>> {
        self.weight.as_ref()
    }

    pub fn with_weight(mut self, weight: Option<FourierMatrixSeries<R>>) -> Result<Self> {
        if let Some(w) = &weight {
            let min = min_real_on_grid(w, weight_grid(w))?;
            if min <= R::zero() {
                return Err(Error::NonPositiveWeight { min: min.as_f64() });
            }
        }
        self.weight = weight;
        Ok(self)
    }

    /// Replace the subprincipal symbol, keeping principal data and weight.
    pub fn with_lsub(&self, lsub: FourierMatrixSeries<R>) -> Result<Self> {
        Self::build(self.s.clone(), lsub, self.weight.clone())
    }

    /// Largest ‖k‖_∞ over all stored series (including the weight).
    pub fn max_cutoff(&self) -> usize {
        let mut k = self.lsub.max_freq();
        for sa in &self.s {
            k = k.max(sa.max_freq());
        }
        if let Some(w) = &self.weight {
            k = k.max(w.max_freq());
        }
        k as usize
    }

    /// True if every coefficient series (and the weight) is constant.
    pub fn is_constant_coefficient(&self) -> bool {
        self.s.iter().all(|s| s.is_constant())
            && self.lsub.is_constant()
            && self.weight.as_ref().map_or(true, |w| w.is_constant())
    }

    /// Local coordinate data (P^α, Q) with P^α = −i S^α and
    /// Q = L_sub − (i/2) ∂_α S^α.
    pub fn local_coefficients(
        &self,
    ) -> Result<(Vec<FourierMatrixSeries<R>>, FourierMatrixSeries<R>)> {
        let p: Vec<_> = self
            .s
            .iter()
            .map(|sa| sa.scale_complex(-im::<R>()))
            .collect();
        Ok((p, self.q_coefficient()?))
    }

    /// Zero-order local coefficient Q = L_sub − (i/2) ∂_α S^α.
    pub fn q_coefficient(&self) -> Result<FourierMatrixSeries<R>> {
        let mut div = FourierMatrixSeries::zero(self.n, self.m, self.m);
        for (alpha, sa) in self.s.iter().enumerate() {
            div = div.add_series(&sa.derive_x(alpha)?)?;
        }
        self.lsub
            .sub_series(&div.scale_complex(C::new(R::zero(), R::of(0.5))))
    }

    /// Rebuild invariant data from local coordinate data (P^α, Q):
    /// S^α = iP^α, L_sub = Q + (i/2)∂_α S^α. Inverse of
    /// [`Self::local_coefficients`].
    pub fn from_local(
        p: Vec<FourierMatrixSeries<R>>,
        q: FourierMatrixSeries<R>,
        weight: Option<FourierMatrixSeries<R>>,
    ) -> Result<Self> {
        let n = p.len();
        let s: Vec<FourierMatrixSeries<R>> = p
            .iter()
            .map(|pa| pa.scale_complex(im::<R>()).claim_hermitian())
            .collect::<Result<_>>()?;
        let mut div = FourierMatrixSeries::zero(n, q.rows(), q.cols());
        for (alpha, sa) in s.iter().enumerate() {
            div = div.add_series(&sa.derive_x(alpha)?)?;
        }
        let lsub = q
            .add_series(&div.scale_complex(C::new(R::zero(), R::of(0.5))))?
            .claim_hermitian()?;
        Self::build(s, lsub, weight)
    }

    /// Principal symbol L_prin(x,p) = S^α(x) p_α.
    pub fn principal_symbol(&self, x: &[R], p: &[R]) -> Result<CMatrix<R>> {
        if p.len() != self.n {
            return Err(Error::DimensionMismatch("momentum dimension".into()));
        }
        let mut out = CMatrix::zeros(self.m, self.m);
        for (sa, pa) in self.s.iter().zip(p.iter()) {
            out = out.add(&sa.eval(x)?.scale(cr(*pa)));
        }
        Ok(out)
    }

    /// Subprincipal symbol L_sub(x).
    pub fn subprincipal_symbol(&self, x: &[R]) -> Result<CMatrix<R>> {
        self.lsub.eval(x)
    }

    /// Full symbol L(x,p) = S^α(x)p_α + Q(x).
    pub fn full_symbol(&self, x: &[R], p: &[R]) -> Result<CMatrix<R>> {
        Ok(self
            .principal_symbol(x, p)?
            .add(&self.q_coefficient()?.eval(x)?))
    }

    /// Sample |det L_prin| and ‖L_prin‖ over an x-grid × unit-momentum-sphere
    /// grid and certify ellipticity / non-degeneracy. For odd m and n ≥ 2
    /// ellipticity fails identically (det changes sign between p and −p), so
    /// the certificate short-circuits.
    pub fn check_ellipticity(&self, grid_resolution: usize) -> Result<EllipticityCertificate<R>> {
        if grid_resolution < 8 {
            return Err(Error::Precondition(
                "ellipticity grid resolution must be at least 8 per axis".into(),
            ));
        }
        let sphere = unit_sphere_grid::<R>(self.n, grid_resolution);
        let x_grid = x_grid_points::<R>(self.n, grid_resolution.min(12), self.max_cutoff());
        let odd_shortcircuit = self.m % 2 == 1;

        let mut min_det = R::infinity();
        let mut max_det = R::zero();
        let mut min_norm = R::infinity();
        let mut max_norm = R::zero();
        let mut det_witness = (vec![R::zero(); self.n], vec![R::zero(); self.n]);
        let mut norm_witness = det_witness.clone();
        for x in &x_grid {
            for w in &sphere {
                let lp = self.principal_symbol(x, w)?;
                let d = lp.det().norm();
                let nn = lp.frobenius_norm();
                if d < min_det {
                    min_det = d;
                    det_witness = (x.clone(), w.clone());
                }
                max_det = max_det.max(d);
                if nn < min_norm {
                    min_norm = nn;
                    norm_witness = (x.clone(), w.clone());
                }
                max_norm = max_norm.max(nn);
            }
        }
        let det_tol = R::of(1e-8) * max_det.max(R::epsilon());
        let norm_tol = R::of(1e-8) * max_norm.max(R::epsilon());
        Ok(EllipticityCertificate {
            elliptic: !odd_shortcircuit && min_det > det_tol,
            nondegenerate: min_norm > norm_tol,
            odd_m_shortcircuit: odd_shortcircuit,
            min_abs_det: min_det,
            max_abs_det: max_det,
            min_norm,
            max_norm,
            det_witness,
            norm_witness,
            grid_resolution,
        })
    }

    /// Gauge transformation L ↦ Q*LQ, computed exactly on coefficients:
    /// S'^α = Q†S^αQ and new zero-order coefficient
    /// Q₀' = −i Q†S^α(∂_αQ) + Q†Q₀Q, repackaged as (S', L_sub').
    /// The weight is carried through unchanged.
    pub fn apply_gauge(&self, gauge: &GaugeField<R>) -> Result<Self> {
        let q = gauge.series();
        if q.rows() != self.m || q.dim() != self.n {
            return Err(Error::DimensionMismatch("gauge field shape".into()));
        }
        let q_adj = q.adjoint_values();
        let mut s_new = Vec::with_capacity(self.n);
        for sa in &self.s {
            let sandwiched = q_adj.multiply(sa)?.multiply(q)?;
            s_new.push(sandwiched.claim_hermitian()?);
        }
        let q0 = self.q_coefficient()?;
        let mut q0_new = q_adj.multiply(&q0)?.multiply(q)?;
        for (alpha, sa) in self.s.iter().enumerate() {
            let dq = q.derive_x(alpha)?;
            let term = q_adj
                .multiply(sa)?
                .multiply(&dq)?
                .scale_complex(-im::<R>());
            q0_new = q0_new.add_series(&term)?;
        }
        let mut div = FourierMatrixSeries::zero(self.n, self.m, self.m);
        for (alpha, sa) in s_new.iter().enumerate() {
            div = div.add_series(&sa.derive_x(alpha)?)?;
        }
        let lsub_new = q0_new
            .add_series(&div.scale_complex(C::new(R::zero(), R::of(0.5))))?
            .claim_hermitian()?;
        Self::build(s_new, lsub_new, self.weight.clone())
    }

    /// Conjugate the weight away: s^{−1/2} L s^{−1/2} with s^{±1/2} obtained
    /// by grid sampling and refitting at cutoff 2·K_op. The returned metadata
    /// records the quarantined truncation parameters.
    pub fn conjugate_weight(&self) -> Result<(Self, WeightConjugation)> {
        let w = self.weight.as_ref().ok_or(Error::WeightAbsent)?;
        let cutoff = 2 * self.max_cutoff().max(1);
        let grid_n = (2 * cutoff + 2).max(8);
        let samples = w.sample_grid(grid_n)?;
        let mut min_w = R::infinity();
        for v in &samples.values {
            min_w = min_w.min(v[(0, 0)].re);
        }
        if min_w <= R::zero() {
            return Err(Error::NonPositiveWeight { min: min_w.as_f64() });
        }
        let inv_sqrt = samples.map(|v| {
            let mut out = CMatrix::zeros(1, 1);
            out[(0, 0)] = cr(R::one() / v[(0, 0)].re.sqrt());
            out
        });
        let scalar = FourierMatrixSeries::fit_from_grid(&inv_sqrt, cutoff)?.claim_hermitian()?;
        let q = scalar.scalar_times_identity(self.m)?;
        let gauge = GaugeField::new(q, GaugeKind::PositiveScalar, grid_n)?;
        let mut conj = self.apply_gauge(&gauge)?;
        conj.weight = None;
        Ok((
            conj,
            WeightConjugation {
                cutoff,
                grid_n,
                min_weight: min_w.as_f64(),
            },
        ))
    }

    pub fn to_json(&self) -> OperatorJson {
        OperatorJson {
            n: self.n,
            m: self.m,
            s: self.s.iter().map(|s| s.to_json()).collect(),
            lsub: self.lsub.to_json(),
            weight: self.weight.as_ref().map(|w| w.to_json()),
        }
    }

    /// Parse from the JSON schema, validating the constructor invariants.
    /// With `allow_unchecked` the hermitian validation is skipped (negative
    /// controls only).
    pub fn from_json(json: &OperatorJson, allow_unchecked: bool) -> Result<Self> {
        let mut s = Vec::with_capacity(json.s.len());
        for sj in &json.s {
            let series = FourierMatrixSeries::from_json(sj)?;
            s.push(if allow_unchecked {
                series.claim_hermitian_unchecked()
            } else {
                series.claim_hermitian()?
            });
        }
        let lsub = FourierMatrixSeries::from_json(&json.lsub)?;
        let lsub = if allow_unchecked {
            lsub.claim_hermitian_unchecked()
        } else {
            lsub.claim_hermitian()?
        };
        let weight = match &json.weight {
            Some(wj) => Some(FourierMatrixSeries::from_json(wj)?.claim_hermitian()?),
            None => None,
        };
        if allow_unchecked {
            Ok(Self::build_unchecked(s, lsub, weight))
        } else {
            Self::build(s, lsub, weight)
        }
    }
}

/// Sampling-based ellipticity certificate. A certificate, not a proof: the
/// minima are over the recorded grid.
#[derive(Clone, Debug)]
pub struct EllipticityCertificate<R: Real> {
    pub elliptic: bool,
    pub nondegenerate: bool,
    pub odd_m_shortcircuit: bool,
    pub min_abs_det: R,
    pub max_abs_det: R,
    pub min_norm: R,
    pub max_norm: R,
    pub det_witness: (Vec<R>, Vec<R>),
    pub norm_witness: (Vec<R>, Vec<R>),
    pub grid_resolution: usize,
}

/// Metadata of a weight conjugation (the quarantined band-limit truncation).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeightConjugation {
    pub cutoff: usize,
    pub grid_n: usize,
    pub min_weight: f64,
}

/// Pointwise structure a gauge field claims to have.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GaugeKind {
    GeneralLinear,
    SpecialLinear,
    Unitary,
    SpecialUnitary,
    /// Q = e^ψ I with real ψ.
    PositiveScalar,
    /// Q = e^{iφ} I with real φ.
    PhaseScalar,
}

impl GaugeKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            GaugeKind::GeneralLinear => "general-linear",
            GaugeKind::SpecialLinear => "special-linear",
            GaugeKind::Unitary => "unitary",
            GaugeKind::SpecialUnitary => "special-unitary",
            GaugeKind::PositiveScalar => "positive-scalar",
            GaugeKind::PhaseScalar => "phase-scalar",
        }
    }
}

/// Pointwise-invertible matrix field used as a gauge transformation,
/// validated against its claimed kind on a uniform grid.
#[derive(Clone, Debug)]
pub struct GaugeField<R: Real> {
    q: FourierMatrixSeries<R>,
    kind: GaugeKind,
}

impl<R: Real> GaugeField<R> {
    pub fn new(q: FourierMatrixSeries<R>, kind: GaugeKind, validation_grid: usize) -> Result<Self> {
        if q.rows() != q.cols() {
            return Err(Error::DimensionMismatch(
                "gauge field must be square".into(),
            ));
        }
        let grid = validation_grid.max(2 * q.max_freq() as usize + 2).max(8);
        let samples = q.sample_grid(grid)?;
        let tol = R::of(GAUGE_TOL);
        let mut min_det = R::infinity();
        for v in &samples.values {
            let det = v.det();
            min_det = min_det.min(det.norm());
            let residual = match kind {
                GaugeKind::GeneralLinear => R::zero(),
                GaugeKind::SpecialLinear => (det - cr(R::one())).norm(),
                GaugeKind::Unitary => v
                    .adjoint()
                    .matmul(v)
                    .max_abs_diff(&CMatrix::identity(v.rows())),
                GaugeKind::SpecialUnitary => {
                    let u = v
                        .adjoint()
                        .matmul(v)
                        .max_abs_diff(&CMatrix::identity(v.rows()));
                    u.max((det - cr(R::one())).norm())
                }
                GaugeKind::PositiveScalar => scalar_residual(v, |z| {
                    let positivity = if z.re > R::zero() { R::zero() } else { R::one() };
                    z.im.abs().max(positivity)
                }),
                GaugeKind::PhaseScalar => scalar_residual(v, |z| (z.norm() - R::one()).abs()),
            };
            if residual > tol {
                return Err(Error::GaugeKindViolation {
                    kind: kind.as_str().into(),
                    residual: residual.as_f64(),
                });
            }
        }
        if min_det <= tol {
            return Err(Error::SingularGauge {
                min_det: min_det.as_f64(),
            });
        }
        Ok(Self { q, kind })
    }

    pub fn series(&self) -> &FourierMatrixSeries<R> {
        &self.q
    }

    pub fn kind(&self) -> GaugeKind {
        self.kind
    }

    /// Pointwise product field x ↦ Q₁(x)Q₂(x); composing gauge actions,
    /// apply_gauge(apply_gauge(op, g1), g2) = apply_gauge(op, g1·g2).
    pub fn compose(&self, other: &Self) -> Result<Self> {
        let q = self.q.multiply(&other.q)?;
        let kind = if self.kind == other.kind {
            self.kind
        } else {
            GaugeKind::GeneralLinear
        };
        GaugeField::new(q, kind, 8)
    }
}

/// Max deviation of a matrix from z·I where z = first diagonal entry, plus a
/// kind-specific scalar residual.
fn scalar_residual<R: Real>(v: &CMatrix<R>, scalar_check: impl Fn(C<R>) -> R) -> R {
    let z = v[(0, 0)];
    let mut res = scalar_check(z);
    let m = v.rows();
    for i in 0..m {
        for j in 0..m {
            let expect = if i == j {
                z
            } else {
                C::new(R::zero(), R::zero())
            };
            res = res.max((v[(i, j)] - expect).norm());
        }
    }
    res
}

/// JSON schema for an operator:
/// `{"n":3,"m":2,"S":[series,...],"Lsub":series,"weight":series?}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OperatorJson {
    pub n: usize,
    pub m: usize,
    #[serde(rename = "S")]
    pub s: Vec<SeriesJson>,
    #[serde(rename = "Lsub")]
    pub lsub: SeriesJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<SeriesJson>,
}

/// Minimum of the (real) values of a scalar series over a uniform grid.
fn min_real_on_grid<R: Real>(w: &FourierMatrixSeries<R>, grid_n: usize) -> Result<R> {
    let samples = w.sample_grid(grid_n)?;
    let mut min = R::infinity();
    for v in &samples.values {
        min = min.min(v[(0, 0)].re);
    }
    Ok(min)
}

fn weight_grid<R: Real>(w: &FourierMatrixSeries<R>) -> usize {
    (4 * w.max_freq() as usize + 4).max(8)
}

/// Uniform grid on the unit momentum sphere S^{n-1} (resolution points per
/// angle axis).
pub fn unit_sphere_grid<R: Real>(n: usize, resolution: usize) -> Vec<Vec<R>> {
    let mut out = Vec::new();
    match n {
        2 => {
            for i in 0..resolution {
                let t = R::two_pi() * R::of(i as f64) / R::of(resolution as f64);
                out.push(vec![t.cos(), t.sin()]);
            }
        }
        3 => {
            for i in 0..resolution {
                // offset keeps the azimuth nondegenerate at the poles
                let theta = R::pi() * (R::of(i as f64) + R::of(0.5)) / R::of(resolution as f64);
                for j in 0..resolution {
                    let phi = R::two_pi() * R::of(j as f64) / R::of(resolution as f64);
                    out.push(vec![
                        theta.sin() * phi.cos(),
                        theta.sin() * phi.sin(),
                        theta.cos(),
                    ]);
                }
            }
        }
        _ => {
            // deterministic pseudo-random directions for n >= 4
            let total = resolution * resolution;
            let mut state = 0x9e3779b97f4a7c15u64;
            for _ in 0..total {
                let mut v = Vec::with_capacity(n);
                let mut norm2 = R::zero();
                for _ in 0..n {
                    state = state
                        .wrapping_mul(6364136223846793005)
                        .wrapping_add(1442695040888963407);
                    let u = R::of(((state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5);
                    v.push(u);
                    norm2 = norm2 + u * u;
                }
                let norm = norm2.sqrt();
                if norm > R::of(1e-6) {
                    out.push(v.into_iter().map(|c| c / norm).collect());
                }
            }
        }
    }
    out
}

/// Uniform x-grid on T^n with `per_axis` points per axis (at least enough to
/// resolve the stated cutoff).
pub fn x_grid_points<R: Real>(n: usize, per_axis: usize, cutoff: usize) -> Vec<Vec<R>> {
    let per_axis = per_axis.max(cutoff + 1).max(4);
    let total = per_axis.pow(n as u32);
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; n];
    for _ in 0..total {
        out.push(
            idx.iter()
                .map(|&i| R::two_pi() * R::of(i as f64) / R::of(per_axis as f64))
                .collect(),
        );
        for a in (0..n).rev() {
            idx[a] += 1;
            if idx[a] < per_axis {
                break;
            }
            idx[a] = 0;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins;
    use crate::linalg::jacobi_hermitian;

    type S = FourierMatrixSeries<f64>;
    type M = CMatrix<f64>;

    #[test]
    fn flat_dirac_has_zero_local_q() {
        let op = builtins::flat_dirac_3d(0.0f64);
        let q = op.q_coefficient().unwrap();
        assert_eq!(q.num_terms(), 0);
        let (p, _) = op.local_coefficients().unwrap();
        // P^alpha = −i sigma^alpha
        let sigma = builtins::pauli::<f64>();
        for (alpha, pa) in p.iter().enumerate() {
            let expected = sigma[alpha].scale(C::new(0.0, -1.0));
            assert!(pa.coefficient(&[0, 0, 0]).max_abs_diff(&expected) < 1e-15);
        }
    }

    #[test]
    fn constant_lsub_gives_q_equal_lsub() {
        let op = builtins::flat_dirac_3d(0.7f64);
        let q = op.q_coefficient().unwrap();
        let expected = M::identity(2).scale(cr(0.7));
        assert!(q.coefficient(&[0, 0, 0]).max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn x_dependent_s_produces_divergence_q() {
        // S^1 = sigma^1 + eps cos(x^1) sigma^3, others constant, Lsub = 0
        let eps = 0.4;
        let sigma = builtins::pauli::<f64>();
        let mut s1 = S::constant(3, sigma[0].clone());
        s1.add_term(&[1, 0, 0], sigma[2].scale(cr(eps / 2.0)));
        s1.add_term(&[-1, 0, 0], sigma[2].scale(cr(eps / 2.0)));
        let s1 = s1.claim_hermitian().unwrap();
        let s2 = S::constant(3, sigma[1].clone()).claim_hermitian().unwrap();
        let s3 = S::constant(3, sigma[2].clone()).claim_hermitian().unwrap();
        let lsub = S::zero(3, 2, 2).claim_hermitian().unwrap();
        let op = OperatorData::build(vec![s1.clone(), s2, s3], lsub, None).unwrap();

        // Q = −(i/2) ∂_1 S^1 by hand: coefficient at k=(±1,0,0) is
        // −(i/2)(±i) eps/2 sigma^3 = ± eps/4 sigma^3
        let q = op.q_coefficient().unwrap();
        let expected_plus = sigma[2].scale(cr(eps / 4.0));
        assert!(q.coefficient(&[1, 0, 0]).max_abs_diff(&expected_plus) < 1e-15);
        let expected_minus = sigma[2].scale(cr(-eps / 4.0));
        assert!(q.coefficient(&[-1, 0, 0]).max_abs_diff(&expected_minus) < 1e-15);
        assert!(q.num_terms() == 2);

        // subprincipal symbol stays 0 although Q != 0
        let at = [0.3, 1.0, 2.0];
        assert!(op.subprincipal_symbol(&at).unwrap().max_abs() < 1e-15);

        // round trip through local coefficients
        let (p, qq) = op.local_coefficients().unwrap();
        let rebuilt = OperatorData::from_local(p, qq, None).unwrap();
        for alpha in 0..3 {
            for (k, c) in op.principal_coefficients()[alpha].terms() {
                assert!(
                    rebuilt.principal_coefficients()[alpha]
                        .coefficient(k)
                        .max_abs_diff(c)
                        < 1e-13
                );
            }
        }
        assert!(rebuilt.lsub_series().num_terms() == 0);
    }

    #[test]
    fn subprincipal_recomputed_from_local_matches() {
        let op = builtins::su2_conjugated_3d(0.2f64);
        let (p, q) = op.local_coefficients().unwrap();
        // L_sub = Q + (i/2) ∂_α(iP^α)
        let mut div = S::zero(3, 2, 2);
        for (alpha, pa) in p.iter().enumerate() {
            div = div
                .add_series(&pa.scale_complex(im::<f64>()).derive_x(alpha).unwrap())
                .unwrap();
        }
        let lsub2 = q
            .add_series(&div.scale_complex(C::new(0.0, 0.5)))
            .unwrap();
        for t in 0..20 {
            let x = [0.31 * t as f64, 0.17 * t as f64, 0.23 * t as f64];
            let a = op.subprincipal_symbol(&x).unwrap();
            let b = lsub2.eval(&x).unwrap();
            assert!(a.max_abs_diff(&b) < 1e-12);
        }
    }

    #[test]
    fn principal_symbol_homogeneous() {
        let op = builtins::flat_dirac_3d(0.0f64);
        let x = [0.1, 0.2, 0.3];
        let p = [0.4, -1.0, 2.2];
        let p2: Vec<f64> = p.iter().map(|v| 2.0 * v).collect();
        let a = op.principal_symbol(&x, &p).unwrap();
        let b = op.principal_symbol(&x, &p2).unwrap();
        assert!(b.max_abs_diff(&a.scale(cr(2.0))) < 1e-14);
        let zero = op.principal_symbol(&x, &[0.0, 0.0, 0.0]).unwrap();
        assert!(zero.max_abs() < 1e-15);
        // Dirac at p = e3 is sigma^3
        let s3 = op.principal_symbol(&x, &[0.0, 0.0, 1.0]).unwrap();
        assert!(s3.max_abs_diff(&builtins::pauli::<f64>()[2]) < 1e-15);
    }

    #[test]
    fn ellipticity_certificates() {
        let dirac = builtins::flat_dirac_3d(0.0f64);
        let cert = dirac.check_ellipticity(8).unwrap();
        assert!(cert.elliptic);
        assert!(cert.nondegenerate);
        assert!(
            (cert.min_abs_det - 1.0).abs() < 1e-10,
            "det(sigma·w) = -1 on the sphere"
        );

        let mink = builtins::minkowski_4d::<f64>();
        let cert4 = mink.check_ellipticity(8).unwrap();
        assert!(!cert4.elliptic, "light cone zeros");
        assert!(cert4.nondegenerate);
    }

    #[test]
    fn odd_m_short_circuit() {
        // any m=3 operator in n=2 is non-elliptic by parity of det
        let mut a = M::zeros(3, 3);
        a[(0, 1)] = cr(1.0);
        a[(1, 0)] = cr(1.0);
        a[(2, 2)] = cr(1.0);
        let s1 = S::constant(2, a).claim_hermitian().unwrap();
        let mut b = M::zeros(3, 3);
        b[(0, 0)] = cr(1.0);
        b[(1, 2)] = C::new(0.0, -1.0);
        b[(2, 1)] = C::new(0.0, 1.0);
        let s2 = S::constant(2, b).claim_hermitian().unwrap();
        let lsub = S::zero(2, 3, 3).claim_hermitian().unwrap();
        let op = OperatorData::build(vec![s1, s2], lsub, None).unwrap();
        let cert = op.check_ellipticity(8).unwrap();
        assert!(cert.odd_m_shortcircuit);
        assert!(!cert.elliptic);

        // det(x,-p) = -det(x,p) for odd m
        let x = [0.0, 0.0];
        let p = [0.7, -0.4];
        let pm: Vec<f64> = p.iter().map(|v| -v).collect();
        let d1 = op.principal_symbol(&x, &p).unwrap().det();
        let d2 = op.principal_symbol(&x, &pm).unwrap().det();
        assert!((d1 + d2).norm() < 1e-14);
    }

    #[test]
    fn identity_gauge_is_noop() {
        let op = builtins::flat_dirac_3d(0.3f64);
        let ident = S::constant(3, M::identity(2));
        let g = GaugeField::new(ident, GaugeKind::SpecialUnitary, 8).unwrap();
        let op2 = op.apply_gauge(&g).unwrap();
        for alpha in 0..3 {
            for (k, c) in op.principal_coefficients()[alpha].terms() {
                assert!(
                    op2.principal_coefficients()[alpha]
                        .coefficient(k)
                        .max_abs_diff(c)
                        < 1e-15
                );
            }
        }
        for (k, c) in op.lsub_series().terms() {
            assert!(op2.lsub_series().coefficient(k).max_abs_diff(c) < 1e-15);
        }
    }

    #[test]
    fn constant_positive_scalar_gauge_scales_lsub() {
        let op = builtins::flat_dirac_3d(0.5f64);
        let psi: f64 = 0.3;
        let q = S::constant(3, M::identity(2).scale(cr(psi.exp())));
        let g = GaugeField::new(q, GaugeKind::PositiveScalar, 8).unwrap();
        let op2 = op.apply_gauge(&g).unwrap();
        let expected = M::identity(2).scale(cr(0.5 * (2.0 * psi).exp()));
        assert!(
            op2.subprincipal_symbol(&[0.0, 0.0, 0.0])
                .unwrap()
                .max_abs_diff(&expected)
                < 1e-13
        );
    }

    #[test]
    fn phase_gauge_shifts_lsub_by_principal_at_grad_phi() {
        // phi = cos x^1: exact trig polynomial, e^{i phi} fitted from grid
        let op = builtins::flat_dirac_3d(0.2f64);
        let phi = S::scalar_cosine(3, 0, 1.0);
        let g = builtins::phase_scalar_gauge(&phi, 2, 16).unwrap();
        let op2 = op.apply_gauge(&g).unwrap();
        // law: Lsub'(x) = Lsub(x) + L_prin(x, grad phi(x))
        let dphi: Vec<S> = (0..3).map(|a| phi.derive_x(a).unwrap()).collect();
        for t in 0..50 {
            let x = [0.13 * t as f64, 0.29 * t as f64, 0.57 * t as f64];
            let grad: Vec<f64> = dphi
                .iter()
                .map(|d| d.eval(&x).unwrap()[(0, 0)].re)
                .collect();
            let expected = op
                .subprincipal_symbol(&x)
                .unwrap()
                .add(&op.principal_symbol(&x, &grad).unwrap());
            let got = op2.subprincipal_symbol(&x).unwrap();
            assert!(
                got.max_abs_diff(&expected) < 1e-8,
                "phase law residual {:e} at sample {t}",
                got.max_abs_diff(&expected)
            );
        }
    }

    #[test]
    fn gauge_composition_matches_product() {
        let op = builtins::su2_conjugated_3d(0.2f64);
        let g1 = builtins::su2_gauge_field(0.15, [1, 0, 0]).unwrap();
        let g2 = builtins::su2_gauge_field(0.1, [0, 1, 0]).unwrap();
        let seq = op.apply_gauge(&g1).unwrap().apply_gauge(&g2).unwrap();
        let combined = op.apply_gauge(&g1.compose(&g2).unwrap()).unwrap();
        let x = [0.4, 1.1, 2.7];
        for alpha in 0..3 {
            let a = seq.principal_coefficients()[alpha].eval(&x).unwrap();
            let b = combined.principal_coefficients()[alpha].eval(&x).unwrap();
            assert!(a.max_abs_diff(&b) < 1e-10);
        }
        let a = seq.subprincipal_symbol(&x).unwrap();
        let b = combined.subprincipal_symbol(&x).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-10);
    }

    #[test]
    fn weight_conjugation_scalar_cases() {
        // s ≡ 1: unchanged
        let op = builtins::flat_dirac_3d(0.4f64)
            .with_weight(Some(S::scalar_constant(3, 1.0).claim_hermitian().unwrap()))
            .unwrap();
        let (conj, _) = op.conjugate_weight().unwrap();
        assert!(
            conj.subprincipal_symbol(&[0.0, 0.0, 0.0])
                .unwrap()
                .max_abs_diff(&M::identity(2).scale(cr(0.4)))
                < 1e-12
        );

        // s ≡ 4, Lsub = cI: Lsub' = c/4 I
        let op = builtins::flat_dirac_3d(0.4f64)
            .with_weight(Some(S::scalar_constant(3, 4.0).claim_hermitian().unwrap()))
            .unwrap();
        let (conj, _) = op.conjugate_weight().unwrap();
        assert!(
            conj.subprincipal_symbol(&[0.0, 0.0, 0.0])
                .unwrap()
                .max_abs_diff(&M::identity(2).scale(cr(0.1)))
                < 1e-12
        );
    }

    #[test]
    fn weight_conjugation_exp_cos() {
        // subprincipal of s^{-1/2} L s^{-1/2} approximates s^{-1} Lsub
        let s = builtins::exp_cos_weight(3, 0, 0.3, 10).unwrap();
        let op = builtins::flat_dirac_3d(0.8f64)
            .with_weight(Some(s.clone()))
            .unwrap();
        let (conj, meta) = op.conjugate_weight().unwrap();
        assert_eq!(meta.cutoff, 20);
        for t in 0..40 {
            let x = [0.17 * t as f64, 0.0, 0.0];
            let sval = s.eval(&x).unwrap()[(0, 0)].re;
            let expected = M::identity(2).scale(cr(0.8 / sval));
            let got = conj.subprincipal_symbol(&x).unwrap();
            assert!(
                got.max_abs_diff(&expected) < 1e-8,
                "residual {:e}",
                got.max_abs_diff(&expected)
            );
        }
    }

    #[test]
    fn self_adjointness_through_galerkin() {
        let op = builtins::su2_conjugated_3d(0.25f64);
        let g = crate::spectra::galerkin_matrix(&op, 1).unwrap();
        assert!(g.hermitian_residual() < 1e-12);
        let (evals, _) = jacobi_hermitian(&g).unwrap();
        assert!(evals.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn rejects_unflagged_input() {
        let sigma = builtins::pauli::<f64>();
        let s1 = S::constant(2, sigma[0].clone()); // no hermitian claim
        let s2 = S::constant(2, sigma[1].clone()).claim_hermitian().unwrap();
        let lsub = S::zero(2, 2, 2).claim_hermitian().unwrap();
        assert!(matches!(
            OperatorData::build(vec![s1, s2], lsub, None),
            Err(Error::HermitianFlagMissing(_))
        ));
    }

    #[test]
    fn rejects_nonpositive_weight() {
        let w = S::scalar_constant(3, 1.0)
            .add_series(&S::scalar_cosine(3, 0, 2.0))
            .unwrap()
            .claim_hermitian()
            .unwrap(); // 1 + 2cos dips negative
        assert!(matches!(
            builtins::flat_dirac_3d(0.0f64).with_weight(Some(w)),
            Err(Error::NonPositiveWeight { .. })
        ));
    }

    #[test]
    fn operator_json_round_trip() {
        let op = builtins::su2_conjugated_3d(0.2f64);
        let json = op.to_json();
        let text = serde_json::to_string(&json).unwrap();
        let parsed: OperatorJson = serde_json::from_str(&text).unwrap();
        let back = OperatorData::from_json(&parsed, false).unwrap();
        let x = [1.0, 2.0, 3.0];
        let p = [0.3, -0.7, 0.1];
        assert!(
            back.principal_symbol(&x, &p)
                .unwrap()
                .max_abs_diff(&op.principal_symbol(&x, &p).unwrap())
                < 1e-12
        );
    }
}
