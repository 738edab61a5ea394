//! The 4D constructions: covariant representation Op(L_prin, L_csub), the
//! adjugate of an operator, assembly of the 4×4 Dirac operator with mass, and
//! its dispersion-relation validation.
//!
//! The hyperbolic 4×4 operator is validated symbol-side only (it is not
//! elliptic, so its spectral theory sits outside the Galerkin machinery);
//! assembly sanity is checked through Hermiticity of its Galerkin matrix.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{adjugate_matrix, adjugate_series, covariant_subprincipal, extract_metric};
use crate::linalg::CMatrix;
use crate::operator::OperatorData;
use crate::scalar::{cr, C, Real};
use crate::series::FourierMatrixSeries;

/// Covariant data (L_prin, L_csub) of a non-degenerate 4D 2×2 operator:
/// Hermitian momentum coefficients S^α plus a Hermitian covariant
/// subprincipal field, both as exact series.
#[derive(Clone, Debug)]
pub struct CovariantOperatorSpec<R: Real> {
    s: Vec<FourierMatrixSeries<R>>,
    lcsub: FourierMatrixSeries<R>,
}

impl<R: Real> CovariantOperatorSpec<R> {
    /// Validates shape, hermitian flags, non-degeneracy and the Lorentzian
    /// signature of the induced metric.
    pub fn new(s: Vec<FourierMatrixSeries<R>>, lcsub: FourierMatrixSeries<R>) -> Result<Self> {
        if s.len() != 4 {
            return Err(Error::Precondition("covariant spec needs n = 4".into()));
        }
        for sa in &s {
            if sa.rows() != 2 || !sa.is_hermitian_valued() {
                return Err(Error::HermitianFlagMissing("covariant spec S".into()));
            }
        }
        if lcsub.rows() != 2 || !lcsub.is_hermitian_valued() {
            return Err(Error::HermitianFlagMissing("covariant spec L_csub".into()));
        }
        // probe non-degeneracy and signature through a scratch operator
        let scratch = OperatorData::build(
            s.clone(),
            FourierMatrixSeries::zero(4, 2, 2).claim_hermitian()?,
            None,
        )?;
        let cert = scratch.check_ellipticity(8)?;
        if !cert.nondegenerate {
            return Err(Error::Precondition(
                "covariant spec principal symbol is degenerate".into(),
            ));
        }
        let metric = extract_metric(&scratch)?;
        let sig = metric.signature_on_grid(5)?;
        if sig != (3, 1) {
            return Err(Error::SignatureJump(format!(
                "expected Lorentzian (3,1), found {sig:?}"
            )));
        }
        Ok(Self { s, lcsub })
    }

    pub fn principal(&self) -> &[FourierMatrixSeries<R>] {
        &self.s
    }

    pub fn lcsub(&self) -> &FourierMatrixSeries<R> {
        &self.lcsub
    }

    /// Apply 2×2 adjugation to both data fields.
    pub fn adjugated(&self) -> Result<Self> {
        Self::new(
            self.s.iter().map(adjugate_series).collect(),
            adjugate_series(&self.lcsub),
        )
    }
}

/// Fit cutoff for the subprincipal correction when the metric varies.
fn correction_cutoff<R: Real>(s: &[FourierMatrixSeries<R>]) -> usize {
    let k = s.iter().map(|sa| sa.max_freq() as usize).max().unwrap_or(0);
    (3 * k + 4).clamp(8, 40)
}

/// Build L = Op(L_prin, L_csub): the operator with the given principal symbol
/// whose covariant subprincipal symbol is L_csub, i.e.
/// L_sub = L_csub − (i/16) g_{αβ}{L_prin, adj L_prin, L_prin}_{p_αp_β}.
pub fn op_from_covariant<R: Real>(spec: &CovariantOperatorSpec<R>) -> Result<OperatorData<R>> {
    let scratch = OperatorData::build(
        spec.s.clone(),
        FourierMatrixSeries::zero(4, 2, 2).claim_hermitian()?,
        None,
    )?;
    let csub_of_zero = covariant_subprincipal(&scratch)?;
    // covariant_subprincipal(scratch) has L_sub = 0, so its value IS the
    // correction term; subtract it from the requested L_csub
    let corr = csub_of_zero.correction_fitted(correction_cutoff(&spec.s))?;
    let lsub = spec.lcsub.sub_series(&corr)?.claim_hermitian()?;
    OperatorData::build(spec.s.clone(), lsub, None)
}

/// Covariant data of an existing operator, re-fitted as series.
pub fn covariant_spec_of<R: Real>(op: &OperatorData<R>) -> Result<CovariantOperatorSpec<R>> {
    let csub = covariant_subprincipal(op)?;
    let corr = csub.correction_fitted(correction_cutoff(op.principal_coefficients()))?;
    let lcsub = op
        .lsub_series()
        .add_series(&corr)?
        .claim_hermitian()?;
    CovariantOperatorSpec::new(op.principal_coefficients().to_vec(), lcsub)
}

/// Adj L = Op(adj L_prin, adj L_csub).
pub fn adjugate_operator<R: Real>(op: &OperatorData<R>) -> Result<OperatorData<R>> {
    if op.dim() != 4 || op.size() != 2 {
        return Err(Error::Precondition(
            "operator adjugation needs n = 4, m = 2".into(),
        ));
    }
    op_from_covariant(&covariant_spec_of(op)?.adjugated()?)
}

/// Block 4×4 first-order operator [[L, mI],[mI, Adj L]] over T⁴.
#[derive(Clone, Debug)]
pub struct DiracOperator4<R: Real> {
    pub l: OperatorData<R>,
    pub adj_l: OperatorData<R>,
    pub mass: R,
}

/// Assemble the Dirac operator from covariant data and a mass m ≥ 0.
pub fn assemble_dirac<R: Real>(spec: &CovariantOperatorSpec<R>, mass: R) -> Result<DiracOperator4<R>> {
    if mass < R::zero() {
        return Err(Error::Precondition("mass must be nonnegative".into()));
    }
    let l = op_from_covariant(spec)?;
    let adj_l = op_from_covariant(&spec.adjugated()?)?;
    Ok(DiracOperator4 { l, adj_l, mass })
}

impl<R: Real> DiracOperator4<R> {
    /// Full 4×4 symbol [[L(x,p), mI],[mI, (Adj L)(x,p)]].
    pub fn full_symbol(&self, x: &[R], p: &[R]) -> Result<CMatrix<R>> {
        let a = self.l.full_symbol(x, p)?;
        let d = self.adj_l.full_symbol(x, p)?;
        Ok(block2(&a, &d, self.mass))
    }

    /// Principal 4×4 symbol (mass is order zero and drops out).
    pub fn principal_symbol(&self, x: &[R], p: &[R]) -> Result<CMatrix<R>> {
        let a = self.l.principal_symbol(x, p)?;
        let d = self.adj_l.principal_symbol(x, p)?;
        Ok(block2(&a, &d, R::zero()))
    }

    /// Galerkin matrix of the block operator: [[G_L, mI],[mI, G_AdjL]] in the
    /// plane-wave basis; Hermitian by construction.
    pub fn galerkin_matrix(&self, k_cutoff: usize) -> Result<CMatrix<R>> {
        let ga = crate::spectra::galerkin_matrix(&self.l, k_cutoff)?;
        let gd = crate::spectra::galerkin_matrix(&self.adj_l, k_cutoff)?;
        let half = ga.rows();
        let mut out = CMatrix::zeros(2 * half, 2 * half);
        for i in 0..half {
            for j in 0..half {
                out[(i, j)] = ga[(i, j)];
                out[(half + i, half + j)] = gd[(i, j)];
            }
            out[(i, half + i)] = cr(self.mass);
            out[(half + i, i)] = cr(self.mass);
        }
        Ok(out)
    }

    pub fn to_json(&self) -> DiracJson {
        DiracJson {
            l: self.l.to_json(),
            adj_l: self.adj_l.to_json(),
            mass: self.mass.as_f64(),
        }
    }
}

/// Block-operator JSON schema: two operator payloads plus the mass.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct DiracJson {
    #[serde(rename = "L")]
    pub l: crate::operator::OperatorJson,
    #[serde(rename = "AdjL")]
    pub adj_l: crate::operator::OperatorJson,
    pub mass: f64,
}

fn block2<R: Real>(a: &CMatrix<R>, d: &CMatrix<R>, mass: R) -> CMatrix<R> {
    let mut out = CMatrix::zeros(4, 4);
    for i in 0..2 {
        for j in 0..2 {
            out[(i, j)] = a[(i, j)];
            out[(2 + i, 2 + j)] = d[(i, j)];
        }
        out[(i, 2 + i)] = cr(mass);
        out[(2 + i, i)] = cr(mass);
    }
    out
}

/// Residuals of the dispersion identities at sampled (x, p):
///
/// * principal: det(principal 4×4) − (g^{αβ}p_αp_β)², exact always;
/// * block: det(full 4×4) − (det A − m²)² with A the full top-left block,
///   the block-determinant identity det[[A,mI],[mI,D]] = det(AD − m²I)
///   combined with D = adj A at principal-plus-covariant order;
/// * Klein–Gordon (constant specs): det(full 4×4) − (g(p+A)(p+A) + m²)² with
///   A the electromagnetic potential, reducing to (gpp + m²)² when
///   L_csub = 0.
#[derive(Clone, Debug)]
pub struct DispersionReport<R: Real> {
    pub max_principal_residual: R,
    pub max_block_residual: R,
    pub max_kg_residual: Option<R>,
    pub samples: usize,
}

pub fn dispersion_check<R: Real>(
    dirac: &DiracOperator4<R>,
    samples: &[(Vec<R>, Vec<R>)],
) -> Result<DispersionReport<R>> {
    let metric = extract_metric(&dirac.l)?;
    let m2 = dirac.mass * dirac.mass;
    let constant = dirac.l.is_constant_coefficient();
    let em = if constant {
        Some(crate::geometry::em_potential(&dirac.l)?)
    } else {
        None
    };
    let mut max_prin = R::zero();
    let mut max_block = R::zero();
    let mut max_kg: Option<R> = if constant { Some(R::zero()) } else { None };
    for (x, p) in samples {
        let g = metric.eval_ginv(x)?;
        let gpp = {
            let mut acc = R::zero();
            for a in 0..4 {
                for b in 0..4 {
                    acc = acc + g[(a, b)].re * p[a] * p[b];
                }
            }
            acc
        };
        let prin = dirac.principal_symbol(x, p)?;
        let res_p = (prin.det() - cr(gpp * gpp)).norm();
        max_prin = max_prin.max(res_p);

        let full = dirac.full_symbol(x, p)?;
        let a_block = dirac.l.full_symbol(x, p)?;
        let det_a = a_block.det();
        let predicted = (det_a - cr(m2)) * (det_a - cr(m2));
        let res_b = (full.det() - predicted).norm();
        max_block = max_block.max(res_b);

        if let (Some(em), Some(kg)) = (&em, max_kg.as_mut()) {
            let a_pot = em.eval(x)?;
            let shifted: Vec<R> = p.iter().zip(a_pot.iter()).map(|(&pi, &ai)| pi + ai).collect();
            let mut gpapa = R::zero();
            for a in 0..4 {
                for b in 0..4 {
                    gpapa = gpapa + g[(a, b)].re * shifted[a] * shifted[b];
                }
            }
            let klein = (gpapa + m2) * (gpapa + m2);
            let res_k = (full.det() - cr(klein)).norm();
            *kg = kg.max(res_k);
        }
    }
    Ok(DispersionReport {
        max_principal_residual: max_prin,
        max_block_residual: max_block,
        max_kg_residual: max_kg,
        samples: samples.len(),
    })
}

/// Deterministic random (x, p) samples for dispersion checks.
pub fn random_phase_samples<R: Real>(seed: u64, count: usize) -> Vec<(Vec<R>, Vec<R>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let x: Vec<R> = (0..4)
                .map(|_| R::of(rng.gen_range(0.0..std::f64::consts::TAU)))
                .collect();
            let p: Vec<R> = (0..4).map(|_| R::of(rng.gen_range(-2.0..2.0))).collect();
            (x, p)
        })
        .collect()
}
