//! Eigenvalue/eigenvector branches of the principal symbol with controlled
//! gauge, exact first derivatives via perturbation theory, Poisson brackets,
//! the transported phase, the second-Weyl-coefficient integrand and the
//! curvature trace.
//!
//! Derivative convention: eigenvector derivatives are produced in the
//! Berry-parallel gauge v†dv = 0 — the gauge perturbation theory naturally
//! yields — which kills the connection term −i v†{v,h} and makes every
//! downstream quantity deterministic. [`regauge_branch`] produces the same
//! branch in a different gauge for consistency oracles.

use crate::error::{Error, Result};
use crate::linalg::{jacobi_hermitian, CMatrix};
use crate::operator::OperatorData;
use crate::scalar::{cr, im, C, Real};
use crate::series::FourierMatrixSeries;

/// Tolerance on the imaginary part of quantities that must be real.
pub const REALITY_TOL: f64 = 1e-10;

/// Default relative degeneracy tolerance (× ‖L_prin‖).
pub const GAP_TOL_REL: f64 = 1e-8;

/// Series views of the symbol data needed at evaluation points: S^α, the
/// partials ∂_α S^β and L_sub. Built once per operator, evaluated many times.
#[derive(Clone, Debug)]
pub struct SymbolTable<R: Real> {
    n: usize,
    m: usize,
    s: Vec<FourierMatrixSeries<R>>,
    ds: Vec<Vec<FourierMatrixSeries<R>>>,
    lsub: FourierMatrixSeries<R>,
}

impl<R: Real> SymbolTable<R> {
    pub fn new(op: &OperatorData<R>) -> Result<Self> {
        let n = op.dim();
        let s: Vec<_> = op.principal_coefficients().to_vec();
        let mut ds = Vec::with_capacity(n);
        for alpha in 0..n {
            let mut row = Vec::with_capacity(n);
            for sb in &s {
                row.push(sb.derive_x(alpha)?);
            }
            ds.push(row);
        }
        Ok(Self {
            n,
            m: op.size(),
            s,
            ds,
            lsub: op.lsub_series().clone(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn size(&self) -> usize {
        self.m
    }

    /// Evaluate all coefficient data at a base point x.
    pub fn at(&self, x: &[R]) -> Result<SymbolPoint<R>> {
        let s_val: Vec<CMatrix<R>> = self.s.iter().map(|s| s.eval(x)).collect::<Result<_>>()?;
        let mut ds_val = Vec::with_capacity(self.n);
        for row in &self.ds {
            ds_val.push(row.iter().map(|d| d.eval(x)).collect::<Result<Vec<_>>>()?);
        }
        Ok(SymbolPoint {
            n: self.n,
            m: self.m,
            s: s_val,
            ds: ds_val,
            lsub: self.lsub.eval(x)?,
        })
    }
}

/// Pointwise symbol data at a fixed x: S^α(x), ∂_α S^β(x), L_sub(x).
#[derive(Clone, Debug)]
pub struct SymbolPoint<R: Real> {
    n: usize,
    m: usize,
    /// S^α(x) = (L_prin)_{p_α}
    s: Vec<CMatrix<R>>,
    /// ds[α][β] = ∂_{x^α} S^β(x)
    ds: Vec<Vec<CMatrix<R>>>,
    lsub: CMatrix<R>,
}

impl<R: Real> SymbolPoint<R> {
    pub fn new(op: &OperatorData<R>, x: &[R]) -> Result<Self> {
        SymbolTable::new(op)?.at(x)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn size(&self) -> usize {
        self.m
    }

    pub fn lsub(&self) -> &CMatrix<R> {
        &self.lsub
    }

    /// L_prin(x,p) = S^α(x) p_α
    pub fn principal(&self, p: &[R]) -> CMatrix<R> {
        let mut out = CMatrix::zeros(self.m, self.m);
        for (sa, pa) in self.s.iter().zip(p.iter()) {
            out = out.add(&sa.scale(cr(*pa)));
        }
        out
    }

    /// (L_prin)_{p_α}(x) = S^α(x)
    pub fn principal_dp(&self, alpha: usize) -> &CMatrix<R> {
        &self.s[alpha]
    }

    /// (L_prin)_{x^α}(x,p) = ∂_α S^β(x) p_β
    pub fn principal_dx(&self, alpha: usize, p: &[R]) -> CMatrix<R> {
        let mut out = CMatrix::zeros(self.m, self.m);
        for (sb, pb) in self.ds[alpha].iter().zip(p.iter()) {
            out = out.add(&sb.scale(cr(*pb)));
        }
        out
    }

    /// All eigenvalue branches at momentum p with Berry-gauge first
    /// derivatives. Branch indices are negative for negative eigenvalues and
    /// positive for positive ones, ascending; a zero eigenvalue (within the
    /// gap tolerance) or a gap collapse is an error.
    pub fn branches(&self, p: &[R], gap_tol: Option<R>) -> Result<Vec<EigenBranch<R>>> {
        let lp = self.principal(p);
        let (evals, evecs) = jacobi_hermitian(&lp)?;
        let m = self.m;
        let scale = evals
            .iter()
            .map(|h| h.abs())
            .fold(R::zero(), |a, b| a.max(b))
            .max(R::epsilon());
        let tol = gap_tol.unwrap_or_else(|| R::of(GAP_TOL_REL) * scale);
        for w in evals.windows(2) {
            let gap = w[1] - w[0];
            if gap < tol {
                return Err(Error::DegenerateBranch {
                    gap: gap.as_f64(),
                    tol: tol.as_f64(),
                });
            }
        }
        if evals.iter().any(|h| h.abs() < tol) {
            let min = evals
                .iter()
                .map(|h| h.abs())
                .fold(R::infinity(), |a, b| a.min(b));
            return Err(Error::DegenerateBranch {
                gap: min.as_f64(),
                tol: tol.as_f64(),
            });
        }
        let negatives = evals.iter().filter(|h| **h < R::zero()).count();

        let dx_mats: Vec<CMatrix<R>> = (0..self.n).map(|a| self.principal_dx(a, p)).collect();

        let mut out = Vec::with_capacity(m);
        for j_pos in 0..m {
            let v: Vec<C<R>> = evecs.column(j_pos);
            let h = evals[j_pos];
            let mut dh_x = vec![R::zero(); self.n];
            let mut dh_p = vec![R::zero(); self.n];
            let mut dv_x = vec![vec![C::new(R::zero(), R::zero()); m]; self.n];
            let mut dv_p = vec![vec![C::new(R::zero(), R::zero()); m]; self.n];
            for alpha in 0..self.n {
                // Hellmann–Feynman
                dh_x[alpha] = quadratic_form(&dx_mats[alpha], &v).re;
                dh_p[alpha] = quadratic_form(&self.s[alpha], &v).re;
                // first-order eigenvector perturbation, Berry gauge
                for l in 0..m {
                    if l == j_pos {
                        continue;
                    }
                    let vl: Vec<C<R>> = evecs.column(l);
                    let denom = cr(h - evals[l]);
                    let cx = mixed_form(&dx_mats[alpha], &vl, &v) / denom;
                    let cp = mixed_form(&self.s[alpha], &vl, &v) / denom;
                    for t in 0..m {
                        dv_x[alpha][t] = dv_x[alpha][t] + vl[t] * cx;
                        dv_p[alpha][t] = dv_p[alpha][t] + vl[t] * cp;
                    }
                }
            }
            let index = if j_pos < negatives {
                j_pos as i32 - negatives as i32
            } else {
                (j_pos - negatives) as i32 + 1
            };
            out.push(EigenBranch {
                j: index,
                h,
                v,
                dh_x,
                dh_p,
                dv_x,
                dv_p,
            });
        }
        Ok(out)
    }

    /// Single branch by signed index.
    pub fn branch(&self, j: i32, p: &[R], gap_tol: Option<R>) -> Result<EigenBranch<R>> {
        let branches = self.branches(p, gap_tol)?;
        branches
            .into_iter()
            .find(|b| b.j == j)
            .ok_or_else(|| Error::Precondition(format!("no branch with index {j}")))
    }
}

/// Eigenvalue branch of the principal symbol at a phase-space point, with
/// Berry-gauge first derivatives. Residual checks: ‖v‖ = 1 and
/// L_prin v = h v hold to 1e−10 by construction of the Jacobi eigensolver.
#[derive(Clone, Debug)]
pub struct EigenBranch<R: Real> {
    /// Signed branch index: negative eigenvalues get −#neg..−1, positive get
    /// 1..#pos, ascending.
    pub j: i32,
    pub h: R,
    pub v: Vec<C<R>>,
    pub dh_x: Vec<R>,
    pub dh_p: Vec<R>,
    /// dv_x[α] = ∂v/∂x^α (Berry gauge: v†·dv_x = 0)
    pub dv_x: Vec<Vec<C<R>>>,
    /// dv_p[α] = ∂v/∂p_α (Berry gauge)
    pub dv_p: Vec<Vec<C<R>>>,
}

impl<R: Real> EigenBranch<R> {
    /// {v†, v} = Σ_α (v_{x^α})†v_{p_α} − (v_{p_α})†v_{x^α}; purely imaginary.
    pub fn vv_bracket(&self) -> C<R> {
        let mut acc = C::new(R::zero(), R::zero());
        for alpha in 0..self.dv_x.len() {
            acc = acc + inner(&self.dv_x[alpha], &self.dv_p[alpha])
                - inner(&self.dv_p[alpha], &self.dv_x[alpha]);
        }
        acc
    }

    /// v†{v, h} = Σ_α v†v_{x^α} h_{p_α} − v†v_{p_α} h_{x^α}; zero in the
    /// Berry gauge, nonzero after regauging.
    pub fn connection(&self) -> C<R> {
        let mut acc = C::new(R::zero(), R::zero());
        for alpha in 0..self.dv_x.len() {
            acc = acc + inner(&self.v, &self.dv_x[alpha]).scale(self.dh_p[alpha])
                - inner(&self.v, &self.dv_p[alpha]).scale(self.dh_x[alpha]);
        }
        acc
    }
}

/// Transported phase
/// f = v†L_sub v − (i/2){v†, L_prin−h, v} − i v†{v,h}, with the generalized
/// bracket evaluated through the branch derivative data. Valid in any
/// eigenvector gauge; in the Berry gauge the connection term vanishes.
/// The returned value is the real part; an imaginary residue above
/// [`REALITY_TOL`] (relative) is an error.
pub fn phase_f<R: Real>(point: &SymbolPoint<R>, p: &[R], branch: &EigenBranch<R>) -> Result<R> {
    let sub_term = quadratic_form(&point.lsub, &branch.v);
    let bracket = sandwich_bracket(point, p, branch);
    let conn = branch.connection();
    let val = sub_term - im::<R>().scale(R::of(0.5)) * bracket - im::<R>() * conn;
    ensure_real(val, branch.h.abs() + point.lsub.max_abs())
}

/// Integrand of the second Weyl coefficient:
/// v†L_sub v − (i/2){v†, L_prin−h, v} + (i/(n−1)) h {v†, v}.
/// Positively homogeneous of degree 0 in p and invariant under re-phasing of
/// the eigenvector.
pub fn b_integrand<R: Real>(point: &SymbolPoint<R>, p: &[R], branch: &EigenBranch<R>) -> Result<R> {
    let n = point.dim();
    if n < 2 {
        return Err(Error::Precondition("b integrand needs n >= 2".into()));
    }
    let sub_term = quadratic_form(&point.lsub, &branch.v);
    let bracket = sandwich_bracket(point, p, branch);
    let curv = branch.vv_bracket();
    let val = sub_term - im::<R>().scale(R::of(0.5)) * bracket
        + im::<R>().scale(branch.h / R::of((n - 1) as f64)) * curv;
    ensure_real(val, branch.h.abs() + point.lsub.max_abs())
}

/// Curvature trace −i{v†, v}: the time-zero subprincipal trace of the
/// propagator's oscillatory integral; real and invariant under re-phasing.
pub fn curvature_trace<R: Real>(branch: &EigenBranch<R>) -> Result<R> {
    let val = -im::<R>() * branch.vv_bracket();
    ensure_real(val, R::one())
}

/// {v†, L_prin − h, v} with the branch's derivative vectors:
/// Σ_α (v_{x^α})†(L−h)v_{p_α} − (v_{p_α})†(L−h)v_{x^α}.
fn sandwich_bracket<R: Real>(point: &SymbolPoint<R>, p: &[R], branch: &EigenBranch<R>) -> C<R> {
    let m = point.size();
    let a = point
        .principal(p)
        .sub(&CMatrix::identity(m).scale(cr(branch.h)));
    let mut acc = C::new(R::zero(), R::zero());
    for alpha in 0..point.dim() {
        let a_dvp = a.matvec(&branch.dv_p[alpha]);
        let a_dvx = a.matvec(&branch.dv_x[alpha]);
        acc = acc + inner_slices(&branch.dv_x[alpha], &a_dvp)
            - inner_slices(&branch.dv_p[alpha], &a_dvx);
    }
    acc
}

/// Re-phase a branch: v ↦ e^{iφ}v with given φ and gradients (φ_x, φ_p);
/// derivatives transform as dv ↦ e^{iφ}(dv + iφ_• v). Models an arbitrary
/// eigenvector gauge for invariance oracles.
pub fn regauge_branch<R: Real>(
    branch: &EigenBranch<R>,
    phi: R,
    dphi_x: &[R],
    dphi_p: &[R],
) -> EigenBranch<R> {
    let phase = C::new(phi.cos(), phi.sin());
    let n = branch.dv_x.len();
    let rot = |vs: &Vec<C<R>>, dphi: R| -> Vec<C<R>> {
        vs.iter()
            .zip(branch.v.iter())
            .map(|(dv, v)| phase * (*dv + im::<R>().scale(dphi) * *v))
            .collect()
    };
    EigenBranch {
        j: branch.j,
        h: branch.h,
        v: branch.v.iter().map(|z| phase * *z).collect(),
        dh_x: branch.dh_x.clone(),
        dh_p: branch.dh_p.clone(),
        dv_x: (0..n).map(|a| rot(&branch.dv_x[a], dphi_x[a])).collect(),
        dv_p: (0..n).map(|a| rot(&branch.dv_p[a], dphi_p[a])).collect(),
    }
}

/// Re-gauge to the "largest component real positive" convention.
pub fn largest_component_real_gauge<R: Real>(branch: &EigenBranch<R>) -> EigenBranch<R> {
    let mut k = 0;
    let mut best = R::zero();
    for (i, z) in branch.v.iter().enumerate() {
        if z.norm() > best {
            best = z.norm();
            k = i;
        }
    }
    let vk = branch.v[k];
    let phi = -vk.im.atan2(vk.re);
    let n = branch.dv_x.len();
    // gauge condition Im((e^{iφ}v)_k) = 0 along derivatives:
    // φ_• = −Im(conj(v_k)(dv_•)_k)/|v_k|²
    let norm2 = vk.norm_sqr();
    let dphi = |dv: &Vec<C<R>>| -> R { -(vk.conj() * dv[k]).im / norm2 };
    let dphi_x: Vec<R> = (0..n).map(|a| dphi(&branch.dv_x[a])).collect();
    let dphi_p: Vec<R> = (0..n).map(|a| dphi(&branch.dv_p[a])).collect();
    regauge_branch(branch, phi, &dphi_x, &dphi_p)
}

/// Matrix-valued symbol with point derivatives, the interface of the generic
/// Poisson brackets.
pub trait MatrixSymbol<R: Real> {
    fn shape(&self) -> (usize, usize);
    fn value(&self, x: &[R], p: &[R]) -> CMatrix<R>;
    fn dx(&self, alpha: usize, x: &[R], p: &[R]) -> CMatrix<R>;
    fn dp(&self, alpha: usize, x: &[R], p: &[R]) -> CMatrix<R>;
}

/// Closure-backed symbol: value plus exact derivative callbacks.
pub struct FnSymbol<R: Real, V, DX, DP>
where
    V: Fn(&[R], &[R]) -> CMatrix<R>,
    DX: Fn(usize, &[R], &[R]) -> CMatrix<R>,
    DP: Fn(usize, &[R], &[R]) -> CMatrix<R>,
{
    pub shape: (usize, usize),
    pub value: V,
    pub dx: DX,
    pub dp: DP,
    pub _marker: std::marker::PhantomData<R>,
}

impl<R: Real, V, DX, DP> MatrixSymbol<R> for FnSymbol<R, V, DX, DP>
where
    V: Fn(&[R], &[R]) -> CMatrix<R>,
    DX: Fn(usize, &[R], &[R]) -> CMatrix<R>,
    DP: Fn(usize, &[R], &[R]) -> CMatrix<R>,
{
    fn shape(&self) -> (usize, usize) {
        self.shape
    }
    fn value(&self, x: &[R], p: &[R]) -> CMatrix<R> {
        (self.value)(x, p)
    }
    fn dx(&self, alpha: usize, x: &[R], p: &[R]) -> CMatrix<R> {
        (self.dx)(alpha, x, p)
    }
    fn dp(&self, alpha: usize, x: &[R], p: &[R]) -> CMatrix<R> {
        (self.dp)(alpha, x, p)
    }
}

/// Poisson bracket {F,G} = Σ_α F_{x^α}G_{p_α} − F_{p_α}G_{x^α}.
pub fn poisson_bracket<R: Real>(
    f: &dyn MatrixSymbol<R>,
    g: &dyn MatrixSymbol<R>,
    x: &[R],
    p: &[R],
) -> CMatrix<R> {
    let (rows, _) = f.shape();
    let (_, cols) = g.shape();
    let mut acc = CMatrix::zeros(rows, cols);
    for alpha in 0..x.len() {
        acc = acc.add(&f.dx(alpha, x, p).matmul(&g.dp(alpha, x, p)));
        acc = acc.sub(&f.dp(alpha, x, p).matmul(&g.dx(alpha, x, p)));
    }
    acc
}

/// Generalized bracket {F,G,H} = Σ_α F_{x^α}·G·H_{p_α} − F_{p_α}·G·H_{x^α};
/// {F,I,H} reduces to the Poisson bracket.
pub fn generalized_bracket<R: Real>(
    f: &dyn MatrixSymbol<R>,
    g: &dyn MatrixSymbol<R>,
    h: &dyn MatrixSymbol<R>,
    x: &[R],
    p: &[R],
) -> CMatrix<R> {
    let (rows, _) = f.shape();
    let (_, cols) = h.shape();
    let gval = g.value(x, p);
    let mut acc = CMatrix::zeros(rows, cols);
    for alpha in 0..x.len() {
        acc = acc.add(
            &f.dx(alpha, x, p)
                .matmul(&gval)
                .matmul(&h.dp(alpha, x, p)),
        );
        acc = acc.sub(
            &f.dp(alpha, x, p)
                .matmul(&gval)
                .matmul(&h.dx(alpha, x, p)),
        );
    }
    acc
}

/// v† A v
pub fn quadratic_form<R: Real>(a: &CMatrix<R>, v: &[C<R>]) -> C<R> {
    let av = a.matvec(v);
    inner_slices(v, &av)
}

/// u† A v
pub fn mixed_form<R: Real>(a: &CMatrix<R>, u: &[C<R>], v: &[C<R>]) -> C<R> {
    let av = a.matvec(v);
    inner_slices(u, &av)
}

/// ⟨u, v⟩ = u†v
pub fn inner<R: Real>(u: &[C<R>], v: &[C<R>]) -> C<R> {
    inner_slices(u, v)
}

fn inner_slices<R: Real>(u: &[C<R>], v: &[C<R>]) -> C<R> {
    u.iter()
        .zip(v.iter())
        .fold(C::new(R::zero(), R::zero()), |acc, (a, b)| {
            acc + a.conj() * *b
        })
}

fn ensure_real<R: Real>(z: C<R>, scale: R) -> Result<R> {
    let tol = R::of(REALITY_TOL) * scale.max(R::one());
    if z.im.abs() > tol {
        return Err(Error::NotReal {
            imag: z.im.abs().as_f64(),
            tol: tol.as_f64(),
        });
    }
    Ok(z.re)
}
