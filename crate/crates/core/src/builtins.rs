//! Named scenario operators and field generators used by the CLI builtins,
//! the verification suites and the tests.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::linalg::CMatrix;
use crate::operator::{GaugeField, GaugeKind, OperatorData};
use crate::scalar::{cr, C, Real};
use crate::series::{FourierMatrixSeries, GridSamples};

/// Standard Pauli matrices (σ¹, σ², σ³).
pub fn pauli<R: Real>() -> [CMatrix<R>; 3] {
    let one = cr(R::one());
    let i = C::new(R::zero(), R::one());
    let mut s1 = CMatrix::zeros(2, 2);
    s1[(0, 1)] = one;
    s1[(1, 0)] = one;
    let mut s2 = CMatrix::zeros(2, 2);
    s2[(0, 1)] = -i;
    s2[(1, 0)] = i;
    let mut s3 = CMatrix::zeros(2, 2);
    s3[(0, 0)] = one;
    s3[(1, 1)] = -one;
    [s1, s2, s3]
}

fn constant_hermitian<R: Real>(n: usize, m: CMatrix<R>) -> FourierMatrixSeries<R> {
    FourierMatrixSeries::constant(n, m)
        .claim_hermitian()
        .expect("constant Hermitian matrix")
}

/// Flat 2D Dirac-type operator (σ¹, σ²) with L_sub = c·I.
pub fn flat_dirac_2d<R: Real>(shift: R) -> OperatorData<R> {
    let sigma = pauli::<R>();
    let s1 = constant_hermitian(2, sigma[0].clone());
    let s2 = constant_hermitian(2, sigma[1].clone());
    let lsub = constant_hermitian(2, CMatrix::identity(2).scale(cr(shift)));
    OperatorData::build(vec![s1, s2], lsub, None).expect("flat 2D Dirac-type operator")
}

/// Flat massless (or cI-shifted) Dirac operator on T³.
pub fn flat_dirac_3d<R: Real>(shift: R) -> OperatorData<R> {
    let sigma = pauli::<R>();
    let s: Vec<_> = sigma
        .iter()
        .map(|m| constant_hermitian(3, m.clone()))
        .collect();
    let lsub = constant_hermitian(3, CMatrix::identity(2).scale(cr(shift)));
    OperatorData::build(s, lsub, None).expect("flat 3D Dirac operator")
}

/// Flat 3D Dirac with L_sub = σ·A for a constant real covector A.
pub fn flat_dirac_3d_sigma_shift<R: Real>(a: [R; 3]) -> OperatorData<R> {
    let sigma = pauli::<R>();
    let s: Vec<_> = sigma
        .iter()
        .map(|m| constant_hermitian(3, m.clone()))
        .collect();
    let mut lsub_m = CMatrix::zeros(2, 2);
    for (m, coef) in sigma.iter().zip(a.iter()) {
        lsub_m = lsub_m.add(&m.scale(cr(*coef)));
    }
    let lsub = constant_hermitian(3, lsub_m);
    OperatorData::build(s, lsub, None).expect("flat 3D Dirac with sigma shift")
}

/// 4D operator with S¹..S³ = σ, S⁴ = I: non-degenerate, hyperbolic, metric
/// diag(1,1,1,−1).
pub fn minkowski_4d<R: Real>() -> OperatorData<R> {
    let sigma = pauli::<R>();
    let mut s: Vec<_> = sigma
        .iter()
        .map(|m| constant_hermitian(4, m.clone()))
        .collect();
    s.push(constant_hermitian(4, CMatrix::identity(2)));
    let lsub = constant_hermitian(4, CMatrix::zeros(2, 2));
    OperatorData::build(s, lsub, None).expect("Minkowski 4D operator")
}

/// exp(amp·cos(x^axis)) fitted at the given cutoff; strictly positive scalar.
pub fn exp_cos_weight<R: Real>(
    n: usize,
    axis: usize,
    amp: R,
    cutoff: usize,
) -> Result<FourierMatrixSeries<R>> {
    let psi = FourierMatrixSeries::scalar_cosine(n, axis, amp);
    exp_of_scalar(&psi, cutoff)
}

/// Pointwise exponential of a real scalar series, fitted at `cutoff`.
pub fn exp_of_scalar<R: Real>(
    psi: &FourierMatrixSeries<R>,
    cutoff: usize,
) -> Result<FourierMatrixSeries<R>> {
    let grid = (2 * cutoff + 2).max(8);
    let samples = psi.sample_grid(grid)?;
    let exp = samples.map(|v| {
        let mut out = CMatrix::zeros(1, 1);
        out[(0, 0)] = cr(v[(0, 0)].re.exp());
        out
    });
    FourierMatrixSeries::fit_from_grid(&exp, cutoff)?.claim_hermitian()
}

/// Positive-scalar gauge field e^{ψ(x)}·I_m from a real scalar series ψ.
pub fn positive_scalar_gauge<R: Real>(
    psi: &FourierMatrixSeries<R>,
    m: usize,
    cutoff: usize,
) -> Result<GaugeField<R>> {
    let scalar = exp_of_scalar(psi, cutoff)?;
    GaugeField::new(
        scalar.scalar_times_identity(m)?,
        GaugeKind::PositiveScalar,
        2 * cutoff + 2,
    )
}

/// Phase gauge field e^{iφ(x)}·I_m from a real scalar series φ.
pub fn phase_scalar_gauge<R: Real>(
    phi: &FourierMatrixSeries<R>,
    m: usize,
    cutoff: usize,
) -> Result<GaugeField<R>> {
    let grid = (2 * cutoff + 2).max(8);
    let samples = phi.sample_grid(grid)?;
    let vals = samples.map(|v| {
        let mut out = CMatrix::zeros(1, 1);
        let angle = v[(0, 0)].re;
        out[(0, 0)] = C::new(angle.cos(), angle.sin());
        out
    });
    let scalar = FourierMatrixSeries::fit_from_grid(&vals, cutoff)?;
    GaugeField::new(
        scalar.scalar_times_identity(m)?,
        GaugeKind::PhaseScalar,
        grid,
    )
}

/// Pointwise exp(iH(x)) of a traceless Hermitian 2×2 series H, fitted at
/// `cutoff`; special-unitary by construction.
pub fn su2_exp_gauge<R: Real>(
    h_field: &FourierMatrixSeries<R>,
    cutoff: usize,
) -> Result<GaugeField<R>> {
    let grid = (2 * cutoff + 2).max(8);
    let samples = h_field.sample_grid(grid)?;
    let exp = GridSamples {
        n: samples.n,
        rows: 2,
        cols: 2,
        n_per_axis: samples.n_per_axis,
        values: samples.values.iter().map(exp_i_traceless_2x2).collect(),
    };
    let q = FourierMatrixSeries::fit_from_grid(&exp, cutoff)?;
    GaugeField::new(q, GaugeKind::SpecialUnitary, grid)
}

/// exp(iH) for a traceless Hermitian 2×2 matrix H = h⃗·σ:
/// cos|h|·I + i sin|h|·ĥ·σ.
pub fn exp_i_traceless_2x2<R: Real>(h: &CMatrix<R>) -> CMatrix<R> {
    let sigma = pauli::<R>();
    let coef: Vec<C<R>> = sigma
        .iter()
        .map(|s| s.matmul(h).trace().scale(R::of(0.5)))
        .collect();
    let norm2 = coef
        .iter()
        .fold(R::zero(), |acc, z| acc + z.re * z.re + z.im * z.im);
    let norm = norm2.sqrt();
    if norm <= R::epsilon() {
        return CMatrix::identity(2);
    }
    let mut out = CMatrix::identity(2).scale(cr(norm.cos()));
    let sin_over = norm.sin() / norm;
    for (s, c) in sigma.iter().zip(coef.iter()) {
        out = out.add(&s.scale(*c * C::new(R::zero(), sin_over)));
    }
    out
}

/// Deterministic small SU(2)-valued field exp(iθ(a₁cos x¹·σ³ + a₂sin x²·σ¹ +
/// a₃cos x³·σ²)) on T³; `axes` weights the three generators.
pub fn su2_gauge_field<R: Real>(theta: R, axes: [i32; 3]) -> Result<GaugeField<R>> {
    let sigma = pauli::<R>();
    let mut h = FourierMatrixSeries::zero(3, 2, 2);
    if axes[0] != 0 {
        let c = FourierMatrixSeries::scalar_cosine(3, 0, theta * R::of(axes[0] as f64));
        h = h.add_series(&scalar_times_matrix(&c, &sigma[2]))?;
    }
    if axes[1] != 0 {
        let s = FourierMatrixSeries::scalar_sine(3, 1, theta * R::of(axes[1] as f64));
        h = h.add_series(&scalar_times_matrix(&s, &sigma[0]))?;
    }
    if axes[2] != 0 {
        let c = FourierMatrixSeries::scalar_cosine(3, 2, theta * R::of(axes[2] as f64));
        h = h.add_series(&scalar_times_matrix(&c, &sigma[1]))?;
    }
    su2_exp_gauge(&h, su2_fit_cutoff(theta))
}

/// Cutoff giving a sub-1e-13 Fourier tail for exp of a field with amplitude
/// θ ≤ 0.5 (Bessel-type coefficient decay (θ/2)^k / k!).
fn su2_fit_cutoff<R: Real>(theta: R) -> usize {
    let t = theta.abs().as_f64().max(0.05);
    let mut k = 6usize;
    while k < 24 {
        let mut term = 1.0f64;
        for j in 1..=k {
            term *= (t / 2.0) / j as f64;
        }
        if term < 1e-13 {
            break;
        }
        k += 2;
    }
    k
}

/// Flat 3D Dirac conjugated by a deterministic small special-unitary field;
/// trace-free, elliptic, Euclidean metric.
pub fn su2_conjugated_3d<R: Real>(theta: R) -> OperatorData<R> {
    let g = su2_gauge_field(theta, [1, 1, 1]).expect("builtin SU(2) field");
    flat_dirac_3d(R::zero())
        .apply_gauge(&g)
        .expect("conjugated operator")
}

/// Scalar series times a constant matrix.
pub fn scalar_times_matrix<R: Real>(
    scalar: &FourierMatrixSeries<R>,
    m: &CMatrix<R>,
) -> FourierMatrixSeries<R> {
    let mut out = FourierMatrixSeries::zero(scalar.dim(), m.rows(), m.cols());
    for (k, c) in scalar.terms() {
        out.add_term(k, m.scale(c[(0, 0)]));
    }
    out
}

/// Random hermitian-valued series with ‖k‖_∞ ≤ max_freq.
pub fn random_hermitian_series<R: Real>(
    rng: &mut ChaCha8Rng,
    n: usize,
    m: usize,
    max_freq: i32,
    amplitude: R,
) -> FourierMatrixSeries<R> {
    let mut s = FourierMatrixSeries::zero(n, m, m);
    let mut h0 = CMatrix::zeros(m, m);
    for i in 0..m {
        h0[(i, i)] = cr(R::of(rng.gen_range(-1.0..1.0)));
        for j in i + 1..m {
            let z = C::new(
                R::of(rng.gen_range(-1.0..1.0)),
                R::of(rng.gen_range(-1.0..1.0)),
            );
            h0[(i, j)] = z;
            h0[(j, i)] = z.conj();
        }
    }
    s.add_term(&vec![0; n], h0.scale(cr(amplitude)));
    for _ in 0..3 {
        let mut k: Vec<i32> = (0..n)
            .map(|_| rng.gen_range(-max_freq..=max_freq))
            .collect();
        if k.iter().all(|&v| v == 0) {
            k[0] = 1;
        }
        let c = CMatrix::from_fn(m, m, |_, _| {
            C::new(
                R::of(rng.gen_range(-0.5..0.5)),
                R::of(rng.gen_range(-0.5..0.5)),
            )
        })
        .scale(cr(amplitude));
        let negk: Vec<i32> = k.iter().map(|v| -v).collect();
        s.add_term(&k, c.clone());
        s.add_term(&negk, c.adjoint());
    }
    s.claim_hermitian()
        .expect("paired construction is hermitian-valued")
}

/// Random traceless Hermitian 2×2 series on T³ (SU(2) exponent field).
pub fn random_traceless_field<R: Real>(rng: &mut ChaCha8Rng, scale: R) -> FourierMatrixSeries<R> {
    let sigma = pauli::<R>();
    let mut h = FourierMatrixSeries::zero(3, 2, 2);
    for s in sigma.iter() {
        let axis = rng.gen_range(0..3);
        let amp = R::of(rng.gen_range(-1.0..1.0)) * scale;
        let part = if rng.gen_bool(0.5) {
            FourierMatrixSeries::scalar_cosine(3, axis, amp)
        } else {
            FourierMatrixSeries::scalar_sine(3, axis, amp)
        };
        h = h.add_series(&scalar_times_matrix(&part, s)).unwrap();
    }
    h
}

/// Random 3D trace-free elliptic operator: special-unitary conjugation of the
/// flat Dirac operator plus a random Hermitian subprincipal symbol.
pub fn random_trace_free_elliptic_3d<R: Real>(
    seed: u64,
    theta: R,
    lsub_scale: R,
) -> Result<OperatorData<R>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = random_traceless_field(&mut rng, theta);
    let gauge = su2_exp_gauge(&h, su2_fit_cutoff(theta))?;
    let conj = flat_dirac_3d(R::zero()).apply_gauge(&gauge)?;
    let lsub = random_hermitian_series(&mut rng, 3, 2, 1, lsub_scale);
    conj.with_lsub(lsub)
}

/// Random constant Hermitian quadruple (S¹..S⁴) for 4D experiments; rejects
/// nearly-degenerate draws (the 4×4 matrix of coordinates in the Hermitian
/// basis must be comfortably invertible).
pub fn random_nondegenerate_4d<R: Real>(rng: &mut ChaCha8Rng) -> OperatorData<R> {
    loop {
        let mut quad = Vec::with_capacity(4);
        for _ in 0..4 {
            let mut h = CMatrix::zeros(2, 2);
            h[(0, 0)] = cr(R::of(rng.gen_range(-1.0..1.0)));
            h[(1, 1)] = cr(R::of(rng.gen_range(-1.0..1.0)));
            let z = C::new(
                R::of(rng.gen_range(-1.0..1.0)),
                R::of(rng.gen_range(-1.0..1.0)),
            );
            h[(0, 1)] = z;
            h[(1, 0)] = z.conj();
            quad.push(h);
        }
        let mut coords = CMatrix::<R>::zeros(4, 4);
        for (a, h) in quad.iter().enumerate() {
            coords[(0, a)] = cr(h[(0, 0)].re);
            coords[(1, a)] = cr(h[(1, 1)].re);
            coords[(2, a)] = cr(h[(0, 1)].re);
            coords[(3, a)] = cr(h[(0, 1)].im);
        }
        if coords.det().norm() < R::of(0.05) {
            continue;
        }
        let s: Vec<_> = quad.into_iter().map(|h| constant_hermitian(4, h)).collect();
        let lsub = constant_hermitian(4, CMatrix::zeros(2, 2));
        return OperatorData::build(s, lsub, None).expect("constant data");
    }
}

/// Conformally flat 3D operator e^ψ L_flat e^ψ; x-dependent Hamiltonian
/// h = e^{2ψ}|p| gives genuinely curved rays.
pub fn conformal_dirac_3d<R: Real>(amp: R) -> OperatorData<R> {
    let psi = FourierMatrixSeries::scalar_cosine(3, 0, amp)
        .add_series(&FourierMatrixSeries::scalar_sine(3, 1, amp))
        .unwrap();
    let g = positive_scalar_gauge(&psi, 2, 12).expect("conformal gauge");
    flat_dirac_3d(R::zero())
        .apply_gauge(&g)
        .expect("conformal operator")
}

/// Conformally flat 2D operator for planar ray experiments.
pub fn conformal_dirac_2d<R: Real>(amp: R) -> OperatorData<R> {
    let sigma = pauli::<R>();
    let s1 = constant_hermitian(2, sigma[0].clone());
    let s2 = constant_hermitian(2, sigma[1].clone());
    let lsub = constant_hermitian(2, CMatrix::zeros(2, 2));
    let flat = OperatorData::build(vec![s1, s2], lsub, None).unwrap();
    let psi = FourierMatrixSeries::scalar_cosine(2, 0, amp)
        .add_series(&FourierMatrixSeries::scalar_sine(2, 1, amp))
        .unwrap();
    let g = positive_scalar_gauge(&psi, 2, 12).expect("conformal gauge");
    flat.apply_gauge(&g).expect("conformal operator")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pauli_algebra() {
        let s = pauli::<f64>();
        for j in 0..3 {
            for k in 0..3 {
                let anti = s[j].matmul(&s[k]).add(&s[k].matmul(&s[j]));
                let expected = if j == k {
                    CMatrix::identity(2).scale(cr(2.0))
                } else {
                    CMatrix::zeros(2, 2)
                };
                assert!(anti.max_abs_diff(&expected) < 1e-15);
            }
        }
    }

    #[test]
    fn su2_exp_is_special_unitary_pointwise() {
        let g = su2_gauge_field(0.3f64, [1, 1, 1]).unwrap();
        let samples = g.series().sample_grid(9).unwrap();
        for v in &samples.values {
            let uni = v.adjoint().matmul(v);
            assert!(uni.max_abs_diff(&CMatrix::identity(2)) < 1e-11);
            assert!((v.det() - cr(1.0)).norm() < 1e-11);
        }
    }

    #[test]
    fn conjugated_dirac_is_trace_free_and_elliptic() {
        let op = su2_conjugated_3d(0.25f64);
        for s in op.principal_coefficients() {
            assert!(s.trace_series().max_coefficient_norm() < 1e-11);
        }
        let cert = op.check_ellipticity(8).unwrap();
        assert!(cert.elliptic);
    }

    #[test]
    fn exp_cos_weight_positive_and_accurate() {
        let w = exp_cos_weight::<f64>(3, 0, 0.3, 10).unwrap();
        for t in 0..50 {
            let x = [0.13 * t as f64, 0.0, 0.0];
            let v = w.eval(&x).unwrap()[(0, 0)].re;
            let expect = (0.3 * x[0].cos()).exp();
            assert!((v - expect).abs() < 1e-12);
        }
    }
}
