//! Geometric content of 2×2 principal symbols: the metric encoded by
//! det L_prin, its signature, Pauli frames and their defining relation,
//! matrix adjugation, the covariant subprincipal symbol, the electromagnetic
//! covector potential, the SU(2)/spinor correspondence with gauge recovery,
//! massless-Dirac detection and the action functional obtained from the
//! spectral identity.

use crate::error::{Error, Result};
use crate::linalg::{jacobi_hermitian, CMatrix};
use crate::operator::{x_grid_points, OperatorData};
use crate::scalar::{cr, im, C, Real};
use crate::series::FourierMatrixSeries;

/// Tolerance for zero metric eigenvalues in signature counts.
pub const SIGNATURE_TOL: f64 = 1e-10;

/// 2×2 adjugation: [[a,b],[c,d]] ↦ [[d,−b],[−c,a]]; P·adj P = det(P)·I.
pub fn adjugate_matrix<R: Real>(p: &CMatrix<R>) -> CMatrix<R> {
    assert!(
        p.rows() == 2 && p.cols() == 2,
        "adjugation is a 2x2 operation"
    );
    let mut out = CMatrix::zeros(2, 2);
    out[(0, 0)] = p[(1, 1)];
    out[(0, 1)] = -p[(0, 1)];
    out[(1, 0)] = -p[(1, 0)];
    out[(1, 1)] = p[(0, 0)];
    out
}

/// Entrywise adjugation of a 2×2 series; exact (adjugation is linear on 2×2
/// matrices) and hermitian-valuedness is preserved.
pub fn adjugate_series<R: Real>(s: &FourierMatrixSeries<R>) -> FourierMatrixSeries<R> {
    let mut out = FourierMatrixSeries::zero(s.dim(), 2, 2);
    for (k, c) in s.terms() {
        out.add_term(k, adjugate_matrix(c));
    }
    if s.is_hermitian_valued() {
        out.claim_hermitian()
            .expect("adj preserves hermitian-valuedness")
    } else {
        out
    }
}

/// Contravariant metric field g^{αβ}(x) extracted from det L_prin of a 2×2
/// operator, with per-point inverse/determinant/signature.
#[derive(Clone, Debug)]
pub struct MetricField<R: Real> {
    n: usize,
    /// row-major n×n matrix of scalar series, symmetric at coefficient level
    ginv: Vec<FourierMatrixSeries<R>>,
}

impl<R: Real> MetricField<R> {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Scalar series of g^{αβ}.
    pub fn ginv_series(&self, alpha: usize, beta: usize) -> &FourierMatrixSeries<R> {
        &self.ginv[alpha * self.n + beta]
    }

    /// g^{αβ}(x) as a real symmetric matrix (returned in complex storage).
    pub fn eval_ginv(&self, x: &[R]) -> Result<CMatrix<R>> {
        let mut out = CMatrix::zeros(self.n, self.n);
        for a in 0..self.n {
            for b in 0..self.n {
                let v = self.ginv[a * self.n + b].eval(x)?;
                out[(a, b)] = cr(v[(0, 0)].re);
            }
        }
        Ok(out)
    }

    /// Covariant metric g_{αβ}(x) = (g^{αβ}(x))⁻¹.
    pub fn eval_glower(&self, x: &[R]) -> Result<CMatrix<R>> {
        let g = self.eval_ginv(x)?;
        g.inverse().map_err(|_| Error::DegenerateMetric { eig: 0.0 })
    }

    /// det g_{αβ}(x) = 1/det g^{αβ}(x).
    pub fn det_glower(&self, x: &[R]) -> Result<R> {
        let d = self.eval_ginv(x)?.det().re;
        if d.abs() <= R::of(SIGNATURE_TOL) {
            return Err(Error::DegenerateMetric { eig: d.as_f64() });
        }
        Ok(R::one() / d)
    }

    /// Eigenvalue sign counts (positive, negative) of g^{αβ}(x).
    pub fn signature(&self, x: &[R]) -> Result<(usize, usize)> {
        let g = self.eval_ginv(x)?;
        let (evals, _) = jacobi_hermitian(&g)?;
        let scale = evals
            .iter()
            .map(|e| e.abs())
            .fold(R::one(), |a, b| a.max(b));
        let tol = R::of(SIGNATURE_TOL) * scale;
        let mut pos = 0;
        let mut neg = 0;
        for e in evals {
            if e.abs() < tol {
                return Err(Error::DegenerateMetric { eig: e.as_f64() });
            }
            if e > R::zero() {
                pos += 1;
            } else {
                neg += 1;
            }
        }
        Ok((pos, neg))
    }

    /// Signature verified constant over a sampled grid.
    pub fn signature_on_grid(&self, per_axis: usize) -> Result<(usize, usize)> {
        let pts = x_grid_points::<R>(self.n, per_axis, self.max_freq());
        let mut sig: Option<(usize, usize)> = None;
        for x in &pts {
            let s = self.signature(x)?;
            match sig {
                None => sig = Some(s),
                Some(prev) if prev != s => {
                    return Err(Error::SignatureJump(format!("{prev:?} vs {s:?}")));
                }
                _ => {}
            }
        }
        Ok(sig.expect("grid is nonempty"))
    }

    /// The constant matrix g^{αβ} when every entry series is constant.
    pub fn constant_value(&self) -> Option<CMatrix<R>> {
        if self.ginv.iter().all(|s| s.is_constant()) {
            let mut out = CMatrix::zeros(self.n, self.n);
            let zero_key = vec![0i32; self.n];
            for a in 0..self.n {
                for b in 0..self.n {
                    out[(a, b)] =
                        cr(self.ginv[a * self.n + b].coefficient(&zero_key)[(0, 0)].re);
                }
            }
            Some(out)
        } else {
            None
        }
    }

    pub fn max_freq(&self) -> usize {
        self.ginv
            .iter()
            .map(|s| s.max_freq() as usize)
            .max()
            .unwrap_or(0)
    }
}

/// Extract g^{αβ}(x) from det L_prin(x,p) = −g^{αβ}(x)p_αp_β using the exact
/// 2×2 identity det(A+B) − det A − det B = tr(A)tr(B) − tr(AB):
/// g^{αβ} = ½(tr(S^αS^β) − tr S^α tr S^β), exact at coefficient level.
pub fn extract_metric<R: Real>(op: &OperatorData<R>) -> Result<MetricField<R>> {
    if op.size() != 2 {
        return Err(Error::Precondition("metric extraction needs m = 2".into()));
    }
    let n = op.dim();
    let s = op.principal_coefficients();
    let mut ginv = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            let prod_trace = s[a].multiply(&s[b])?.trace_series();
            let trace_prod = s[a].trace_series().multiply(&s[b].trace_series())?;
            let g = prod_trace.sub_series(&trace_prod)?.scale_real(R::of(0.5));
            ginv.push(g.claim_hermitian()?);
        }
    }
    Ok(MetricField { n, ginv })
}

/// Pauli frame σ^α(x) = (L_prin)_{p_α}(x) = S^α(x), verified against the
/// defining relation σ^α(adj σ^β) + σ^β(adj σ^α) = −2I g^{αβ}(x).
pub fn pauli_frame<R: Real>(op: &OperatorData<R>, x: &[R]) -> Result<Vec<CMatrix<R>>> {
    if op.size() != 2 {
        return Err(Error::Precondition("Pauli frame needs m = 2".into()));
    }
    let metric = extract_metric(op)?;
    let g = metric.eval_ginv(x)?;
    let frame: Vec<CMatrix<R>> = op
        .principal_coefficients()
        .iter()
        .map(|s| s.eval(x))
        .collect::<Result<_>>()?;
    let scale = frame
        .iter()
        .map(|m| m.max_abs())
        .fold(R::one(), |a, b| a.max(b));
    let tol = R::of(1e-12) * scale * scale;
    for a in 0..op.dim() {
        for b in 0..op.dim() {
            let lhs = frame[a]
                .matmul(&adjugate_matrix(&frame[b]))
                .add(&frame[b].matmul(&adjugate_matrix(&frame[a])));
            let rhs = CMatrix::identity(2).scale(cr(-R::of(2.0) * g[(a, b)].re));
            let res = lhs.max_abs_diff(&rhs);
            if res > tol {
                return Err(Error::RouteMismatch(format!(
                    "Pauli defining relation residual {:e} at ({a},{b})",
                    res.as_f64()
                )));
            }
        }
    }
    Ok(frame)
}

/// Covariant subprincipal symbol as an exactly evaluable field:
/// L_csub(x) = L_sub(x) + (i/16) g_{αβ}(x) B^{αβ}(x), where
/// B^{αβ} = {L_prin, adj L_prin, L_prin}_{p_αp_β} is assembled exactly as a
/// series (each bracket factor is linear in p, so the second p-derivatives
/// are p-independent). In 3D the trace-free identity adj P = −P gives the
/// specialised form; both routes are kept for cross-checks.
#[derive(Clone, Debug)]
pub struct CovariantSubprincipal<R: Real> {
    n: usize,
    lsub: FourierMatrixSeries<R>,
    /// B^{αβ} packed row-major (n×n), built with adj L_prin
    bracket_adj: Vec<FourierMatrixSeries<R>>,
    /// B^{αβ} built with −L_prin in the middle slot (3D trace-free form)
    bracket_neg: Option<Vec<FourierMatrixSeries<R>>>,
    metric: MetricField<R>,
}

impl<R: Real> CovariantSubprincipal<R> {
    pub fn metric(&self) -> &MetricField<R> {
        &self.metric
    }

    /// Bracket series B^{αβ} (adjugate form).
    pub fn bracket_series(&self, alpha: usize, beta: usize) -> &FourierMatrixSeries<R> {
        &self.bracket_adj[alpha * self.n + beta]
    }

    /// L_csub(x), exact pointwise (the metric inverse is computed at x).
    /// Uses the adjugate form, which is the general definition; on 3D
    /// trace-free symbols it coincides with the −L_prin specialization
    /// available through [`Self::eval_3d_form`].
    pub fn eval(&self, x: &[R]) -> Result<CMatrix<R>> {
        self.eval_with(x, &self.bracket_adj)
    }

    /// Adjugate-form evaluation (the 4D definition, valid in any dimension).
    pub fn eval_4d_form(&self, x: &[R]) -> Result<CMatrix<R>> {
        self.eval_with(x, &self.bracket_adj)
    }

    /// 3D trace-free form (middle factor −L_prin); only present when n = 3.
    pub fn eval_3d_form(&self, x: &[R]) -> Result<CMatrix<R>> {
        let b = self
            .bracket_neg
            .as_ref()
            .ok_or_else(|| Error::Precondition("3D form needs n = 3".into()))?;
        self.eval_with(x, b)
    }

    fn eval_with(&self, x: &[R], bracket: &[FourierMatrixSeries<R>]) -> Result<CMatrix<R>> {
        let glow = self.metric.eval_glower(x)?;
        let mut corr = CMatrix::zeros(2, 2);
        for a in 0..self.n {
            for b in 0..self.n {
                let bab = bracket[a * self.n + b].eval(x)?;
                corr = corr.add(&bab.scale(glow[(a, b)]));
            }
        }
        let val = self
            .lsub
            .eval(x)?
            .add(&corr.scale(im::<R>().scale(R::of(1.0 / 16.0))));
        let res = val.hermitian_residual();
        let scale = val.max_abs().max(R::one());
        if res > R::of(1e-12) * scale {
            return Err(Error::NotHermitian {
                context: "covariant subprincipal".into(),
                residual: res.as_f64(),
            });
        }
        Ok(val.hermitize())
    }

    /// Correction term L_csub − L_sub as an exact series; requires a constant
    /// metric (otherwise the field is not a trigonometric polynomial; use
    /// [`Self::correction_fitted`]).
    pub fn correction_series(&self) -> Result<FourierMatrixSeries<R>> {
        let g = self.metric.constant_value().ok_or_else(|| {
            Error::Precondition("exact correction series needs a constant metric".into())
        })?;
        let glow = g
            .inverse()
            .map_err(|_| Error::DegenerateMetric { eig: 0.0 })?;
        let mut corr = FourierMatrixSeries::zero(self.n, 2, 2);
        for a in 0..self.n {
            for b in 0..self.n {
                let term = self.bracket_adj[a * self.n + b].scale_complex(glow[(a, b)]);
                corr = corr.add_series(&term)?;
            }
        }
        Ok(corr.scale_complex(im::<R>().scale(R::of(1.0 / 16.0))))
    }

    /// Correction term fitted from a dense grid at the given cutoff
    /// (quarantined truncation for non-constant metrics).
    pub fn correction_fitted(&self, cutoff: usize) -> Result<FourierMatrixSeries<R>> {
        if self.metric.constant_value().is_some() {
            return self.correction_series();
        }
        let grid_n = (2 * cutoff + 2).max(8);
        let lsub_samples = self.lsub.sample_grid(grid_n)?;
        let mut values = Vec::with_capacity(lsub_samples.values.len());
        for (flat, lv) in lsub_samples.values.iter().enumerate() {
            let x = lsub_samples.point(flat);
            let full = self.eval(&x)?;
            values.push(full.sub(lv));
        }
        let samples = crate::series::GridSamples {
            n: self.n,
            rows: 2,
            cols: 2,
            n_per_axis: grid_n,
            values,
        };
        FourierMatrixSeries::fit_from_grid(&samples, cutoff)
    }

    /// Max ‖L_csub(x)‖ over a sampled grid.
    pub fn max_norm_on_grid(&self, per_axis: usize) -> Result<R> {
        let freq = self.lsub.max_freq() as usize + 2 * self.bracket_max_freq() + 1;
        let pts = x_grid_points::<R>(self.n, per_axis, freq.min(24));
        let mut norm = R::zero();
        for x in &pts {
            norm = norm.max(self.eval(x)?.frobenius_norm());
        }
        Ok(norm)
    }

    fn bracket_max_freq(&self) -> usize {
        self.bracket_adj
            .iter()
            .map(|s| s.max_freq() as usize)
            .max()
            .unwrap_or(0)
    }
}

/// Build the covariant subprincipal field of a 2×2 operator in n ∈ {3,4}.
pub fn covariant_subprincipal<R: Real>(op: &OperatorData<R>) -> Result<CovariantSubprincipal<R>> {
    let n = op.dim();
    if op.size() != 2 || !(n == 3 || n == 4) {
        return Err(Error::Precondition(
            "covariant subprincipal symbol needs m = 2 and n ∈ {3, 4}".into(),
        ));
    }
    let metric = extract_metric(op)?;
    let s = op.principal_coefficients();
    let adj_s: Vec<FourierMatrixSeries<R>> = s.iter().map(adjugate_series).collect();
    let bracket_adj = assemble_bracket(op, &adj_s)?;
    let bracket_neg = if n == 3 {
        let neg_s: Vec<FourierMatrixSeries<R>> =
            s.iter().map(|sa| sa.scale_real(-R::one())).collect();
        Some(assemble_bracket(op, &neg_s)?)
    } else {
        None
    };
    Ok(CovariantSubprincipal {
        n,
        lsub: op.lsub_series().clone(),
        bracket_adj,
        bracket_neg,
        metric,
    })
}

/// B^{αβ} = {L_prin, M, L_prin}_{p_αp_β} with M(x,p) = M^ν(x) p_ν linear in
/// p. Expanding the generalized bracket (all three factors linear in p) and
/// taking the two p-derivatives:
/// B^{αβ} = Σ_γ [∂_γS^α·M^β·S^γ + ∂_γS^β·M^α·S^γ − S^γ·M^β·∂_γS^α −
/// S^γ·M^α·∂_γS^β].
fn assemble_bracket<R: Real>(
    op: &OperatorData<R>,
    middle: &[FourierMatrixSeries<R>],
) -> Result<Vec<FourierMatrixSeries<R>>> {
    let n = op.dim();
    let s = op.principal_coefficients();
    let mut ds = Vec::with_capacity(n);
    for gamma in 0..n {
        let mut row = Vec::with_capacity(n);
        for sa in s {
            row.push(sa.derive_x(gamma)?);
        }
        ds.push(row);
    }
    let mut out = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            let mut acc = FourierMatrixSeries::zero(n, 2, 2);
            for gamma in 0..n {
                let t1 = ds[gamma][a].multiply(&middle[b])?.multiply(&s[gamma])?;
                let t2 = ds[gamma][b].multiply(&middle[a])?.multiply(&s[gamma])?;
                let t3 = s[gamma].multiply(&middle[b])?.multiply(&ds[gamma][a])?;
                let t4 = s[gamma].multiply(&middle[a])?.multiply(&ds[gamma][b])?;
                acc = acc
                    .add_series(&t1)?
                    .add_series(&t2)?
                    .sub_series(&t3)?
                    .sub_series(&t4)?;
            }
            out.push(acc);
        }
    }
    Ok(out)
}

/// Electromagnetic covector potential: the unique real A(x) with
/// L_csub(x) = σ^α(x) A_α(x); the σ^α form a basis of Hermitian 2×2 matrices
/// under non-degeneracy.
#[derive(Clone, Debug)]
pub struct EmPotential<R: Real> {
    csub: CovariantSubprincipal<R>,
    frames: Vec<FourierMatrixSeries<R>>,
}

impl<R: Real> EmPotential<R> {
    /// A(x), with a reconstruction-residual check (≤ 1e−10 relative).
    pub fn eval(&self, x: &[R]) -> Result<Vec<R>> {
        let target = self.csub.eval(x)?;
        let frames: Vec<CMatrix<R>> = self
            .frames
            .iter()
            .map(|s| s.eval(x))
            .collect::<Result<_>>()?;
        // coordinates in the real 4-space of Hermitian 2×2 matrices:
        // (H00, H11, Re H01, Im H01)
        let vec_of =
            |h: &CMatrix<R>| -> [R; 4] { [h[(0, 0)].re, h[(1, 1)].re, h[(0, 1)].re, h[(0, 1)].im] };
        let mut mat = CMatrix::zeros(4, 4);
        for (col, f) in frames.iter().enumerate() {
            let v = vec_of(f);
            for row in 0..4 {
                mat[(row, col)] = cr(v[row]);
            }
        }
        let rhs = vec_of(&target);
        let minv = mat.inverse().map_err(|_| {
            Error::Precondition("Pauli frame not a basis (non-degeneracy violated)".into())
        })?;
        let mut a = vec![R::zero(); 4];
        for row in 0..4 {
            let mut acc = R::zero();
            for col in 0..4 {
                acc = acc + minv[(row, col)].re * rhs[col];
            }
            a[row] = acc;
        }
        let mut recon = CMatrix::zeros(2, 2);
        for (f, &coef) in frames.iter().zip(a.iter()) {
            recon = recon.add(&f.scale(cr(coef)));
        }
        let res = recon.max_abs_diff(&target);
        let scale = target.max_abs().max(R::one());
        if res > R::of(1e-10) * scale {
            return Err(Error::RouteMismatch(format!(
                "EM reconstruction residual {:e}",
                res.as_f64()
            )));
        }
        Ok(a)
    }
}

/// Build the EM potential of a non-degenerate 4D 2×2 operator.
pub fn em_potential<R: Real>(op: &OperatorData<R>) -> Result<EmPotential<R>> {
    if op.dim() != 4 || op.size() != 2 {
        return Err(Error::Precondition("EM potential needs n = 4, m = 2".into()));
    }
    Ok(EmPotential {
        csub: covariant_subprincipal(op)?,
        frames: op.principal_coefficients().to_vec(),
    })
}

/// SU(2) matrix from a nonzero spinor:
/// R = (1/‖ξ‖)[[ξ¹, −conj ξ²],[ξ², conj ξ¹]].
pub fn su2_from_spinor<R: Real>(xi: &[C<R>; 2]) -> Result<CMatrix<R>> {
    let norm = (xi[0].norm_sqr() + xi[1].norm_sqr()).sqrt();
    if norm <= R::of(1e-14) {
        return Err(Error::Precondition("spinor must be nonzero".into()));
    }
    let inv = cr(R::one() / norm);
    let mut r = CMatrix::zeros(2, 2);
    r[(0, 0)] = xi[0] * inv;
    r[(0, 1)] = -xi[1].conj() * inv;
    r[(1, 0)] = xi[1] * inv;
    r[(1, 1)] = xi[0].conj() * inv;
    Ok(r)
}

/// Spinor from a special-unitary matrix, scaled to ‖ξ‖ = s (the spinor is
/// defined modulo a positive rescaling).
pub fn spinor_from_su2<R: Real>(r: &CMatrix<R>, scale: R) -> Result<[C<R>; 2]> {
    let uni = r.adjoint().matmul(r).max_abs_diff(&CMatrix::identity(2));
    let det = (r.det() - cr(R::one())).norm();
    if uni > R::of(1e-10) || det > R::of(1e-10) {
        return Err(Error::GaugeKindViolation {
            kind: "special-unitary".into(),
            residual: uni.max(det).as_f64(),
        });
    }
    if scale <= R::zero() {
        return Err(Error::Precondition("spinor scale must be positive".into()));
    }
    Ok([r[(0, 0)].scale(scale), r[(1, 0)].scale(scale)])
}

/// Result of a pointwise gauge recovery on a grid (raster order, axis 0
/// slowest).
#[derive(Clone, Debug)]
pub struct GaugeRecovery<R: Real> {
    pub grid_n: usize,
    pub matrices: Vec<CMatrix<R>>,
    pub max_residual: R,
    /// The SU(2) lift is defined up to a global sign; the continuity pass
    /// seeds at the identity-closest lift of the first grid point.
    pub seeded_near_identity: bool,
}

/// Recover the special-unitary field R(x) with
/// L_prin(x,p) = R*(x) L̊_prin(x,p) R(x): solve the induced SO(3) rotation on
/// the trace-free Hermitian 3-space by polar decomposition (orthogonal
/// Procrustes), lift through the quaternion double cover and fix signs by
/// raster-order continuity. The continuity pass is sequential by design.
pub fn recover_gauge<R: Real>(
    op: &OperatorData<R>,
    ref_op: &OperatorData<R>,
    grid_n: usize,
) -> Result<GaugeRecovery<R>> {
    if op.dim() != 3 || op.size() != 2 || ref_op.dim() != 3 || ref_op.size() != 2 {
        return Err(Error::Precondition(
            "gauge recovery needs 3D 2×2 operators".into(),
        ));
    }
    for (name, o) in [("operator", op), ("reference", ref_op)] {
        for s in o.principal_coefficients() {
            if s.trace_series().max_coefficient_norm() > R::of(1e-10) {
                return Err(Error::Precondition(format!(
                    "{name} principal symbol is not trace-free"
                )));
            }
        }
    }
    // metrics must agree
    let ga = extract_metric(op)?;
    let gb = extract_metric(ref_op)?;
    let probe = x_grid_points::<R>(3, 6, ga.max_freq().max(gb.max_freq()));
    for x in &probe {
        let da = ga.eval_ginv(x)?;
        let db = gb.eval_ginv(x)?;
        if da.max_abs_diff(&db) > R::of(1e-10) {
            return Err(Error::GaugeRecovery(format!(
                "metrics differ by {:e} at a probe point",
                da.max_abs_diff(&db).as_f64()
            )));
        }
    }

    let sigma = crate::builtins::pauli::<R>();
    let coords = |frame: &[CMatrix<R>]| -> CMatrix<R> {
        // C_{j,alpha} = ½ tr(σ^j S^α), real for trace-free Hermitian S
        CMatrix::from_fn(3, 3, |j, alpha| {
            cr(sigma[j].matmul(&frame[alpha]).trace().re * R::of(0.5))
        })
    };

    let total = grid_n.pow(3);
    let mut matrices = Vec::with_capacity(total);
    let mut max_residual = R::zero();
    let mut prev: Option<CMatrix<R>> = None;
    for flat in 0..total {
        let x = grid_point::<R>(flat, grid_n);
        let frame_a: Vec<CMatrix<R>> = op
            .principal_coefficients()
            .iter()
            .map(|s| s.eval(&x))
            .collect::<Result<_>>()?;
        let frame_b: Vec<CMatrix<R>> = ref_op
            .principal_coefficients()
            .iter()
            .map(|s| s.eval(&x))
            .collect::<Result<_>>()?;
        let c_a = coords(&frame_a);
        let c_b = coords(&frame_b);
        // want C_a = T·C_b with T orthogonal: T = polar(M), M = C_a·C_bᵀ
        let m = c_a.matmul(&c_b.transpose());
        let t = polar_orthogonal(&m)?;
        let det_t = t.det().re;
        if det_t < R::zero() {
            return Err(Error::GaugeRecovery(
                "induced rotation has negative determinant (frames incompatible)".into(),
            ));
        }
        // O with R†σ^jR = Σ O_{jl}σ^l satisfies c^α = Oᵀc̊^α, so O = Tᵀ
        let o = t.transpose();
        let mut r = su2_from_rotation(&o)?;
        let pick_closer = |r: CMatrix<R>, target: &CMatrix<R>| -> CMatrix<R> {
            let d_plus = r.max_abs_diff(target);
            let d_minus = r.scale(cr(-R::one())).max_abs_diff(target);
            if d_minus < d_plus {
                r.scale(cr(-R::one()))
            } else {
                r
            }
        };
        r = match &prev {
            None => pick_closer(r, &CMatrix::identity(2)),
            Some(p) => {
                let candidate = pick_closer(r.clone(), p);
                // a genuinely discontinuous lift signals that the closeness
                // hypothesis fails
                if candidate.max_abs_diff(p) > R::of(1.2) {
                    return Err(Error::GaugeRecovery(
                        "lift discontinuity between neighbouring grid points".into(),
                    ));
                }
                candidate
            }
        };
        for (sa, sb) in frame_a.iter().zip(frame_b.iter()) {
            let recon = r.adjoint().matmul(sb).matmul(&r);
            max_residual = max_residual.max(recon.max_abs_diff(sa));
        }
        prev = Some(r.clone());
        matrices.push(r);
    }
    Ok(GaugeRecovery {
        grid_n,
        matrices,
        max_residual,
        seeded_near_identity: true,
    })
}

pub(crate) fn grid_point<R: Real>(flat: usize, grid_n: usize) -> Vec<R> {
    let mut coords = vec![R::zero(); 3];
    let mut rem = flat;
    for a in (0..3).rev() {
        coords[a] = R::two_pi() * R::of((rem % grid_n) as f64) / R::of(grid_n as f64);
        rem /= grid_n;
    }
    coords
}

/// Orthogonal polar factor T = M(MᵀM)^{−1/2} of a real 3×3 matrix.
fn polar_orthogonal<R: Real>(m: &CMatrix<R>) -> Result<CMatrix<R>> {
    let mtm = m.transpose().matmul(m);
    let (evals, evecs) = jacobi_hermitian(&mtm)?;
    if evals.iter().any(|&e| e <= R::of(1e-20)) {
        return Err(Error::GaugeRecovery("frame Gram matrix singular".into()));
    }
    let mut inv_sqrt = CMatrix::zeros(3, 3);
    for i in 0..3 {
        for j in 0..3 {
            let mut acc = C::new(R::zero(), R::zero());
            for k in 0..3 {
                acc = acc + evecs[(i, k)] * evecs[(j, k)].conj().scale(R::one() / evals[k].sqrt());
            }
            inv_sqrt[(i, j)] = acc;
        }
    }
    Ok(m.matmul(&inv_sqrt))
}

/// SU(2) lift of a rotation matrix for the adjoint convention
/// R†σ^jR = Σ_l O_{jl}σ^l, i.e. R = wI − i(a·σ) with q = (w, a) the
/// quaternion of O (Shepperd extraction). Defined up to global sign.
fn su2_from_rotation<R: Real>(o: &CMatrix<R>) -> Result<CMatrix<R>> {
    let get = |i: usize, j: usize| o[(i, j)].re;
    let tr = get(0, 0) + get(1, 1) + get(2, 2);
    let (w, x, y, z);
    if tr > R::zero() {
        let s = (tr + R::one()).sqrt() * R::of(2.0);
        w = R::of(0.25) * s;
        x = (get(2, 1) - get(1, 2)) / s;
        y = (get(0, 2) - get(2, 0)) / s;
        z = (get(1, 0) - get(0, 1)) / s;
    } else if get(0, 0) > get(1, 1) && get(0, 0) > get(2, 2) {
        let s = (R::one() + get(0, 0) - get(1, 1) - get(2, 2)).sqrt() * R::of(2.0);
        w = (get(2, 1) - get(1, 2)) / s;
        x = R::of(0.25) * s;
        y = (get(0, 1) + get(1, 0)) / s;
        z = (get(0, 2) + get(2, 0)) / s;
    } else if get(1, 1) > get(2, 2) {
        let s = (R::one() + get(1, 1) - get(0, 0) - get(2, 2)).sqrt() * R::of(2.0);
        w = (get(0, 2) - get(2, 0)) / s;
        x = (get(0, 1) + get(1, 0)) / s;
        y = R::of(0.25) * s;
        z = (get(1, 2) + get(2, 1)) / s;
    } else {
        let s = (R::one() + get(2, 2) - get(0, 0) - get(1, 1)).sqrt() * R::of(2.0);
        w = (get(1, 0) - get(0, 1)) / s;
        x = (get(0, 2) + get(2, 0)) / s;
        y = (get(1, 2) + get(2, 1)) / s;
        z = R::of(0.25) * s;
    }
    let sigma = crate::builtins::pauli::<R>();
    let mut r = CMatrix::identity(2).scale(cr(w));
    let a = [x, y, z];
    for (s, &coef) in sigma.iter().zip(a.iter()) {
        r = r.add(&s.scale(C::new(R::zero(), -coef)));
    }
    let norm = (w * w + x * x + y * y + z * z).sqrt();
    Ok(r.scale(cr(R::one() / norm)))
}

/// True iff the covariant subprincipal symbol vanishes on a dense grid
/// (≤ 1e−10): the operator is a massless Dirac operator on half-densities.
pub fn is_massless_dirac<R: Real>(op: &OperatorData<R>, per_axis: usize) -> Result<bool> {
    if op.dim() != 3 || op.size() != 2 {
        return Err(Error::Precondition(
            "massless Dirac detection needs n = 3, m = 2".into(),
        ));
    }
    let csub = covariant_subprincipal(op)?;
    Ok(csub.max_norm_on_grid(per_axis)? <= R::of(1e-10))
}

/// Massless Dirac action through the spectral identity ("action via spectral
/// identity"): S(ξ) = ½ ∫ s² tr(L_sub − L_csub) √(det g_{αβ}) dx. For a
/// constant metric the integrand is an exact series; otherwise it is
/// integrated on a dense grid (spectrally accurate for smooth fields).
pub fn dirac_action_correction<R: Real>(op: &OperatorData<R>) -> Result<R> {
    if op.dim() != 3 || op.size() != 2 {
        return Err(Error::Precondition("Dirac action needs n = 3, m = 2".into()));
    }
    let csub = covariant_subprincipal(op)?;
    let weight = op.weight_series().cloned().unwrap_or_else(|| {
        FourierMatrixSeries::scalar_constant(3, R::one())
            .claim_hermitian()
            .expect("constant one")
    });
    if let Some(g) = csub.metric.constant_value() {
        // exact series route: tr(Lsub − Lcsub) = −tr(correction)
        let corr = csub.correction_series()?;
        let tr_diff = corr.trace_series().scale_real(-R::one());
        let s2 = weight.multiply(&weight)?;
        let integrand = s2.multiply(&tr_diff)?;
        let sqrt_det_glower = (R::one() / g.det().re).sqrt();
        let val = integrand.integrate_torus()[(0, 0)];
        return Ok(R::of(0.5) * val.re * sqrt_det_glower);
    }
    // dense-grid route
    let per_axis = (4 * op.max_cutoff() + 8).clamp(16, 48);
    let total = per_axis.pow(3);
    let mut acc = R::zero();
    for flat in 0..total {
        let x = grid_point::<R>(flat, per_axis);
        let lsub = op.subprincipal_symbol(&x)?;
        let lcsub = csub.eval(&x)?;
        let tr_diff = lsub.sub(&lcsub).trace().re;
        let s = weight.eval(&x)?[(0, 0)].re;
        let sqrt_det = csub.metric.det_glower(&x)?.sqrt();
        acc = acc + s * s * tr_diff * sqrt_det;
    }
    let cell = R::two_pi().powi(3) / R::of(total as f64);
    Ok(R::of(0.5) * acc * cell)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins;
    use crate::operator::GaugeKind;

    #[test]
    fn adjugate_basics() {
        let mut p = CMatrix::<f64>::zeros(2, 2);
        p[(0, 0)] = cr(1.0);
        p[(0, 1)] = cr(2.0);
        p[(1, 0)] = cr(3.0);
        p[(1, 1)] = cr(4.0);
        let adj = adjugate_matrix(&p);
        assert!((adj[(0, 0)] - cr(4.0)).norm() < 1e-15);
        assert!((adj[(0, 1)] + cr(2.0)).norm() < 1e-15);
        assert!((adj[(1, 0)] + cr(3.0)).norm() < 1e-15);
        assert!((adj[(1, 1)] - cr(1.0)).norm() < 1e-15);
        // P adj P = det P · I
        let prod = p.matmul(&adj);
        assert!(prod.max_abs_diff(&CMatrix::identity(2).scale(p.det())) < 1e-14);
        // adj I = I
        let ident = CMatrix::<f64>::identity(2);
        assert!(adjugate_matrix(&ident).max_abs_diff(&ident) < 1e-15);
        // trace-free: adj P = −P
        let s = builtins::pauli::<f64>();
        for m in &s {
            assert!(adjugate_matrix(m).max_abs_diff(&m.scale(cr(-1.0))) < 1e-15);
        }
    }

    #[test]
    fn euclidean_metric_from_flat_dirac() {
        let op = builtins::flat_dirac_3d(0.0f64);
        let metric = extract_metric(&op).unwrap();
        let g = metric.eval_ginv(&[0.3, 0.7, 0.1]).unwrap();
        assert!(g.max_abs_diff(&CMatrix::identity(3)) < 1e-14);
        assert_eq!(metric.signature_on_grid(6).unwrap(), (3, 0));
        for p in [[0.3, -0.2, 0.9], [1.0, 0.0, 0.0], [0.5, 0.5, 0.5]] {
            let lp = op.principal_symbol(&[0.0; 3], &p).unwrap();
            let quad: f64 = p.iter().map(|v| v * v).sum();
            assert!((lp.det().re + quad).abs() < 1e-13);
            assert!(lp.det().im.abs() < 1e-13);
        }
    }

    #[test]
    fn minkowski_metric_and_signature() {
        let op = builtins::minkowski_4d::<f64>();
        let metric = extract_metric(&op).unwrap();
        let g = metric.eval_ginv(&[0.0; 4]).unwrap();
        let mut expected = CMatrix::identity(4);
        expected[(3, 3)] = cr(-1.0);
        assert!(g.max_abs_diff(&expected) < 1e-14);
        assert_eq!(metric.signature_on_grid(5).unwrap(), (3, 1));
    }

    #[test]
    fn metric_invariant_under_unitary_conjugation() {
        let flat = builtins::flat_dirac_3d(0.0f64);
        let conj = builtins::su2_conjugated_3d(0.3f64);
        let m1 = extract_metric(&flat).unwrap();
        let m2 = extract_metric(&conj).unwrap();
        for x in [[0.1, 0.4, 2.2], [3.0, 1.0, 5.5]] {
            let g1 = m1.eval_ginv(&x).unwrap();
            let g2 = m2.eval_ginv(&x).unwrap();
            assert!(g1.max_abs_diff(&g2) < 1e-10);
        }
    }

    #[test]
    fn coefficient_level_det_identity() {
        let op = builtins::su2_conjugated_3d(0.35f64);
        let metric = extract_metric(&op).unwrap();
        for t in 0..30 {
            let x = [0.37 * t as f64, 0.21 * t as f64, 0.11 * t as f64];
            let p = [
                (t as f64 * 0.7).sin() + 1.2,
                (t as f64 * 0.3).cos(),
                0.4 - 0.05 * t as f64,
            ];
            let lp = op.principal_symbol(&x, &p).unwrap();
            let g = metric.eval_ginv(&x).unwrap();
            let mut quad = 0.0;
            for a in 0..3 {
                for b in 0..3 {
                    quad += g[(a, b)].re * p[a] * p[b];
                }
            }
            assert!((lp.det().re + quad).abs() < 1e-11);
        }
    }

    #[test]
    fn lorentzian_signature_for_random_nondegenerate_4d() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..200 {
            let op = builtins::random_nondegenerate_4d::<f64>(&mut rng);
            let metric = extract_metric(&op).unwrap();
            let sig = metric.signature(&[0.0; 4]).unwrap();
            assert_eq!(sig, (3, 1), "every non-degenerate draw is Lorentzian");
        }
    }

    #[test]
    fn pauli_frame_defining_relation() {
        let op = builtins::su2_conjugated_3d(0.3f64);
        // verified internally by pauli_frame
        let frame = pauli_frame(&op, &[0.4, 1.2, 2.0]).unwrap();
        assert_eq!(frame.len(), 3);
        let flat4 = builtins::minkowski_4d::<f64>();
        let frame4 = pauli_frame(&flat4, &[0.0; 4]).unwrap();
        // at α=β=4: 2 σ⁴ adj σ⁴ = 2I = −2I g^{44} ⇒ g^{44} = −1
        let rel = frame4[3]
            .matmul(&adjugate_matrix(&frame4[3]))
            .scale(cr(2.0));
        assert!(rel.max_abs_diff(&CMatrix::identity(2).scale(cr(2.0))) < 1e-14);
    }

    #[test]
    fn csub_constant_and_flat_cases() {
        // constant coefficients: L_csub = L_sub
        let op = builtins::flat_dirac_3d(0.8f64);
        let csub = covariant_subprincipal(&op).unwrap();
        let v = csub.eval(&[0.3, 0.4, 0.5]).unwrap();
        assert!(v.max_abs_diff(&CMatrix::identity(2).scale(cr(0.8))) < 1e-13);

        // flat massless Dirac: L_csub = 0 (massless Dirac instance)
        let flat = builtins::flat_dirac_3d(0.0f64);
        assert!(is_massless_dirac(&flat, 6).unwrap());
        let with_shift = builtins::flat_dirac_3d(0.4f64);
        assert!(!is_massless_dirac(&with_shift, 6).unwrap());
    }

    #[test]
    fn csub_three_d_and_four_d_forms_agree_on_trace_free() {
        let op = builtins::su2_conjugated_3d(0.3f64);
        let csub = covariant_subprincipal(&op).unwrap();
        for t in 0..15 {
            let x = [0.41 * t as f64, 0.29 * t as f64, 0.17 * t as f64];
            let a = csub.eval_3d_form(&x).unwrap();
            let b = csub.eval_4d_form(&x).unwrap();
            assert!(a.max_abs_diff(&b) < 1e-12);
        }
    }

    #[test]
    fn csub_of_su2_conjugated_flat_dirac_vanishes() {
        // SU(2) ⊂ SL(2,C): covariance ⇒ L_csub(R†LR) = R†·0·R = 0
        let op = builtins::su2_conjugated_3d(0.3f64);
        assert!(is_massless_dirac(&op, 8).unwrap());
    }

    #[test]
    fn massless_with_engineered_lsub() {
        // choose Lsub to cancel the bracket correction: L_csub = 0 although
        // Lsub ≠ 0
        let op = builtins::su2_conjugated_3d(0.3f64);
        let csub = covariant_subprincipal(&op).unwrap();
        let corr = csub.correction_series().unwrap();
        let minus_corr = corr.scale_real(-1.0).claim_hermitian().unwrap();
        let op2 = op.with_lsub(minus_corr).unwrap();
        assert!(is_massless_dirac(&op2, 6).unwrap());
        assert!(op2.lsub_series().num_terms() > 0);
    }

    #[test]
    fn lemma_5_1_covariance_under_special_unitary_fields() {
        let op = builtins::su2_conjugated_3d(0.2f64)
            .with_lsub(builtins::flat_dirac_3d(0.3f64).lsub_series().clone())
            .unwrap();
        let g = builtins::su2_gauge_field(0.25f64, [0, 1, 1]).unwrap();
        let conj = op.apply_gauge(&g).unwrap();
        let c1 = covariant_subprincipal(&op).unwrap();
        let c2 = covariant_subprincipal(&conj).unwrap();
        for t in 0..10 {
            let x = [0.61 * t as f64, 0.43 * t as f64, 0.11 * t as f64];
            let r = g.series().eval(&x).unwrap();
            let expected = r.adjoint().matmul(&c1.eval(&x).unwrap()).matmul(&r);
            let got = c2.eval(&x).unwrap();
            assert!(
                got.max_abs_diff(&expected) < 1e-8,
                "covariance residual {:e}",
                got.max_abs_diff(&expected)
            );
        }
    }

    #[test]
    fn csub_scaling_laws() {
        let op = builtins::su2_conjugated_3d(0.2f64)
            .with_lsub(builtins::flat_dirac_3d(0.5f64).lsub_series().clone())
            .unwrap();
        let c0 = covariant_subprincipal(&op).unwrap();

        // e^ψ law: L_csub ↦ e^{2ψ} L_csub
        let psi = FourierMatrixSeries::scalar_cosine(3, 0, 0.3);
        let pg = builtins::positive_scalar_gauge(&psi, 2, 12).unwrap();
        let scaled = op.apply_gauge(&pg).unwrap();
        let c1 = covariant_subprincipal(&scaled).unwrap();
        for t in 0..10 {
            let x = [0.5 * t as f64, 0.21 * t as f64, 1.3];
            let psi_val = psi.eval(&x).unwrap()[(0, 0)].re;
            let expected = c0.eval(&x).unwrap().scale(cr((2.0 * psi_val).exp()));
            let got = c1.eval(&x).unwrap();
            assert!(
                got.max_abs_diff(&expected) < 1e-8,
                "psi law residual {:e}",
                got.max_abs_diff(&expected)
            );
        }

        // e^{iφ} law: L_csub ↦ L_csub + L_prin(x, grad φ)
        let phi = FourierMatrixSeries::scalar_sine(3, 1, 0.4);
        let fg = builtins::phase_scalar_gauge(&phi, 2, 12).unwrap();
        let phased = op.apply_gauge(&fg).unwrap();
        let c2 = covariant_subprincipal(&phased).unwrap();
        let dphi: Vec<FourierMatrixSeries<f64>> =
            (0..3).map(|a| phi.derive_x(a).unwrap()).collect();
        for t in 0..10 {
            let x = [0.17 * t as f64, 0.39 * t as f64, 2.1];
            let grad: Vec<f64> = dphi
                .iter()
                .map(|d| d.eval(&x).unwrap()[(0, 0)].re)
                .collect();
            let expected = c0
                .eval(&x)
                .unwrap()
                .add(&op.principal_symbol(&x, &grad).unwrap());
            let got = c2.eval(&x).unwrap();
            assert!(
                got.max_abs_diff(&expected) < 1e-8,
                "phi law residual {:e}",
                got.max_abs_diff(&expected)
            );
        }
    }

    #[test]
    fn em_potential_cases() {
        // L_csub = 0 → A = 0
        let op = builtins::minkowski_4d::<f64>();
        let em = em_potential(&op).unwrap();
        let a = em.eval(&[0.3, 0.4, 0.5, 0.6]).unwrap();
        assert!(a.iter().all(|v| v.abs() < 1e-13));

        // L_csub = σ¹ → A = (1,0,0,0)
        let sigma = builtins::pauli::<f64>();
        let lsub = FourierMatrixSeries::constant(4, sigma[0].clone())
            .claim_hermitian()
            .unwrap();
        let op1 = op.with_lsub(lsub).unwrap();
        let em1 = em_potential(&op1).unwrap();
        let a1 = em1.eval(&[0.0; 4]).unwrap();
        assert!((a1[0] - 1.0).abs() < 1e-12);
        assert!(a1[1].abs() < 1e-12 && a1[2].abs() < 1e-12 && a1[3].abs() < 1e-12);
    }

    #[test]
    fn em_potential_gauge_laws() {
        let sigma = builtins::pauli::<f64>();
        let lsub = FourierMatrixSeries::constant(4, sigma[2].scale(cr(0.7)))
            .claim_hermitian()
            .unwrap();
        let op = builtins::minkowski_4d::<f64>().with_lsub(lsub).unwrap();
        let em0 = em_potential(&op).unwrap();

        // constant special-linear (non-unitary, det 1) leaves A unchanged
        let mut sl = CMatrix::<f64>::identity(2);
        sl[(0, 1)] = C::new(0.3, 0.2);
        let q = FourierMatrixSeries::constant(4, sl);
        let g = crate::operator::GaugeField::new(q, GaugeKind::SpecialLinear, 8).unwrap();
        let conj = op.apply_gauge(&g).unwrap();
        let em1 = em_potential(&conj).unwrap();
        for x in [[0.0; 4], [1.0, 2.0, 3.0, 0.5]] {
            let a0 = em0.eval(&x).unwrap();
            let a1 = em1.eval(&x).unwrap();
            for (u, v) in a0.iter().zip(a1.iter()) {
                assert!((u - v).abs() < 1e-10, "A must be SL(2,C)-invariant");
            }
        }

        // phase gauge e^{iφ}: A ↦ A + grad φ
        let phi = FourierMatrixSeries::scalar_cosine(4, 2, 0.35);
        let fg = builtins::phase_scalar_gauge(&phi, 2, 10).unwrap();
        let phased = op.apply_gauge(&fg).unwrap();
        let em2 = em_potential(&phased).unwrap();
        let dphi: Vec<FourierMatrixSeries<f64>> =
            (0..4).map(|a| phi.derive_x(a).unwrap()).collect();
        for x in [[0.2, 0.4, 0.6, 0.8], [2.0, 1.0, 0.0, 3.0]] {
            let a0 = em0.eval(&x).unwrap();
            let a2 = em2.eval(&x).unwrap();
            for alpha in 0..4 {
                let grad = dphi[alpha].eval(&x).unwrap()[(0, 0)].re;
                assert!(
                    (a0[alpha] + grad - a2[alpha]).abs() < 1e-8,
                    "A gauge law residual at axis {alpha}"
                );
            }
        }
    }

    #[test]
    fn spinor_su2_round_trip() {
        // ξ = (1,0) → R = I
        let r = su2_from_spinor(&[cr(1.0f64), cr(0.0)]).unwrap();
        assert!(r.max_abs_diff(&CMatrix::identity(2)) < 1e-15);
        // ξ = (0,1) → [[0,−1],[1,0]]
        let r = su2_from_spinor(&[cr(0.0f64), cr(1.0)]).unwrap();
        let mut expected = CMatrix::zeros(2, 2);
        expected[(0, 1)] = cr(-1.0);
        expected[(1, 0)] = cr(1.0);
        assert!(r.max_abs_diff(&expected) < 1e-15);
        // random: R special-unitary, round trip up to positive scale
        let xi = [C::new(0.4f64, -0.3), C::new(-0.7, 0.2)];
        let r = su2_from_spinor(&xi).unwrap();
        assert!((r.det() - cr(1.0)).norm() < 1e-12);
        assert!(
            r.adjoint().matmul(&r).max_abs_diff(&CMatrix::identity(2)) < 1e-12
        );
        let norm = (xi[0].norm_sqr() + xi[1].norm_sqr()).sqrt();
        let back = spinor_from_su2(&r, norm).unwrap();
        assert!((back[0] - xi[0]).norm() < 1e-12);
        assert!((back[1] - xi[1]).norm() < 1e-12);
        // normalization control
        let scaled = spinor_from_su2(&r, 2.5).unwrap();
        let s_norm = (scaled[0].norm_sqr() + scaled[1].norm_sqr()).sqrt();
        assert!((s_norm - 2.5).abs() < 1e-12);
        // zero spinor rejected
        assert!(su2_from_spinor(&[cr(0.0f64), cr(0.0)]).is_err());
    }

    #[test]
    fn recover_gauge_identity_and_round_trip() {
        let ref_op = builtins::flat_dirac_3d(0.0f64);
        // op = ref → R ≡ I
        let rec = recover_gauge(&ref_op, &ref_op, 4).unwrap();
        for r in &rec.matrices {
            assert!(r.max_abs_diff(&CMatrix::identity(2)) < 1e-12);
        }

        // plant a small special-unitary field and recover it
        let g = builtins::su2_gauge_field(0.2f64, [1, 1, 0]).unwrap();
        let op = ref_op.apply_gauge(&g).unwrap();
        let rec = recover_gauge(&op, &ref_op, 8).unwrap();
        assert!(rec.max_residual < 1e-9);
        for (flat, r) in rec.matrices.iter().enumerate() {
            let x = super::grid_point::<f64>(flat, 8);
            let expected = g.series().eval(&x).unwrap();
            assert!(
                r.max_abs_diff(&expected) < 1e-8,
                "recovered field mismatch {:e} at {x:?}",
                r.max_abs_diff(&expected)
            );
        }
    }

    #[test]
    fn recover_gauge_equivariance_under_constant_conjugation() {
        // conjugating both operators by the same constant special-unitary
        // matrix C maps the recovered field R ↦ C†RC
        let ref_op = builtins::flat_dirac_3d(0.0f64);
        let g = builtins::su2_gauge_field(0.18f64, [1, 0, 1]).unwrap();
        let op = ref_op.apply_gauge(&g).unwrap();
        let c_mat = builtins::exp_i_traceless_2x2(&builtins::pauli::<f64>()[0].scale(cr(0.4)));
        let cq = FourierMatrixSeries::constant(3, c_mat.clone());
        let cg = crate::operator::GaugeField::new(cq, GaugeKind::SpecialUnitary, 8).unwrap();
        let op_c = op.apply_gauge(&cg).unwrap();
        let ref_c = ref_op.apply_gauge(&cg).unwrap();
        let rec = recover_gauge(&op, &ref_op, 4).unwrap();
        let rec_c = recover_gauge(&op_c, &ref_c, 4).unwrap();
        for (r, rc) in rec.matrices.iter().zip(rec_c.matrices.iter()) {
            let expected = c_mat.adjoint().matmul(r).matmul(&c_mat);
            let diff = rc.max_abs_diff(&expected);
            let diff_neg = rc.scale(cr(-1.0)).max_abs_diff(&expected);
            assert!(
                diff.min(diff_neg) < 1e-8,
                "equivariance up to global sign, residual {:e}",
                diff.min(diff_neg)
            );
        }
    }

    #[test]
    fn recover_gauge_rejects_metric_mismatch() {
        let ref_op = builtins::flat_dirac_3d(0.0f64);
        let psi = FourierMatrixSeries::scalar_cosine(3, 0, 0.2);
        let pg = builtins::positive_scalar_gauge(&psi, 2, 10).unwrap();
        let scaled = ref_op.apply_gauge(&pg).unwrap();
        assert!(matches!(
            recover_gauge(&scaled, &ref_op, 4),
            Err(Error::GaugeRecovery(_))
        ));
    }

    #[test]
    fn dirac_action_vanishes_for_flat_and_constant_ops() {
        let flat = builtins::flat_dirac_3d(0.0f64);
        let s = dirac_action_correction(&flat).unwrap();
        assert!(s.abs() < 1e-13);
        // any constant-coefficient operator: tr(Lsub − Lcsub) = 0
        let shifted = builtins::flat_dirac_3d_sigma_shift([0.3f64, -0.2, 0.5]);
        let s = dirac_action_correction(&shifted).unwrap();
        assert!(s.abs() < 1e-13);
    }
}
