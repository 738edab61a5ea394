//! Exact calculus for matrix-valued trigonometric polynomials on the torus
//! T^n = [0,2π)^n.
//!
//! A series is a finite map k ↦ c_k from integer frequency vectors to complex
//! matrices, with value Σ_k c_k e^{i k·x}. Products, x-derivatives and torus
//! integration are exact in the coefficients; the single source of truncation
//! error in the crate is [`FourierMatrixSeries::fit_from_grid`].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::scalar::{cr, C, Real};

/// Validation tolerance for the hermitian-valued flag, relative to the
/// largest coefficient magnitude.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Matrix-valued trigonometric polynomial on T^n.
#[derive(Clone, Debug)]
pub struct FourierMatrixSeries<R: Real> {
    n: usize,
    rows: usize,
    cols: usize,
    terms: BTreeMap<Vec<i32>, CMatrix<R>>,
    hermitian: bool,
}

impl<R: Real> FourierMatrixSeries<R> {
    pub fn zero(n: usize, rows: usize, cols: usize) -> Self {
        Self {
            n,
            rows,
            cols,
            terms: BTreeMap::new(),
            hermitian: rows == cols,
        }
    }

    /// Constant series {0 ↦ value}.
    pub fn constant(n: usize, value: CMatrix<R>) -> Self {
        let mut s = Self::zero(n, value.rows(), value.cols());
        s.hermitian = false;
        s.add_term(&vec![0; n], value);
        s
    }

    /// Constant scalar (1×1) series.
    pub fn scalar_constant(n: usize, value: R) -> Self {
        let mut m = CMatrix::zeros(1, 1);
        m[(0, 0)] = cr(value);
        Self::constant(n, m)
    }

    /// Scalar series amp·cos(x^axis) (axis is 0-based).
    pub fn scalar_cosine(n: usize, axis: usize, amp: R) -> Self {
        let mut s = Self::zero(n, 1, 1);
        let mut k = vec![0i32; n];
        k[axis] = 1;
        let mut half = CMatrix::zeros(1, 1);
        half[(0, 0)] = cr(amp / R::of(2.0));
        s.add_term(&k, half.clone());
        k[axis] = -1;
        s.add_term(&k, half);
        s
    }

    /// Scalar series amp·sin(x^axis).
    pub fn scalar_sine(n: usize, axis: usize, amp: R) -> Self {
        let mut s = Self::zero(n, 1, 1);
        let mut k = vec![0i32; n];
        k[axis] = 1;
        let mut c = CMatrix::zeros(1, 1);
        c[(0, 0)] = C::new(R::zero(), -amp / R::of(2.0));
        s.add_term(&k, c);
        k[axis] = -1;
        let mut c = CMatrix::zeros(1, 1);
        c[(0, 0)] = C::new(R::zero(), amp / R::of(2.0));
        s.add_term(&k, c);
        s
    }

    pub fn from_terms(
        n: usize,
        rows: usize,
        cols: usize,
        terms: impl IntoIterator<Item = (Vec<i32>, CMatrix<R>)>,
    ) -> Result<Self> {
        let mut s = Self::zero(n, rows, cols);
        s.hermitian = false;
        for (k, c) in terms {
            if k.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "frequency vector has {} entries, series dimension is {n}",
                    k.len()
                )));
            }
            if c.rows() != rows || c.cols() != cols {
                return Err(Error::DimensionMismatch(format!(
                    "coefficient is {}x{}, series shape is {rows}x{cols}",
                    c.rows(),
                    c.cols()
                )));
            }
            s.add_term(&k, c);
        }
        Ok(s)
    }

    /// Add `c` into the coefficient at frequency `k`, pruning exact zeros.
    pub fn add_term(&mut self, k: &[i32], c: CMatrix<R>) {
        assert_eq!(k.len(), self.n);
        assert_eq!((c.rows(), c.cols()), (self.rows, self.cols));
        self.hermitian = false;
        let entry = self
            .terms
            .entry(k.to_vec())
            .or_insert_with(|| CMatrix::zeros(self.rows, self.cols));
        *entry = entry.add(&c);
        if entry.max_abs().is_zero() {
            self.terms.remove(k);
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_hermitian_valued(&self) -> bool {
        self.hermitian
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<i32>, &CMatrix<R>)> {
        self.terms.iter()
    }

    /// Coefficient at frequency k (zero matrix if absent).
    pub fn coefficient(&self, k: &[i32]) -> CMatrix<R> {
        self.terms
            .get(k)
            .cloned()
            .unwrap_or_else(|| CMatrix::zeros(self.rows, self.cols))
    }

    /// Largest |k_α| over the support.
    pub fn max_freq(&self) -> i32 {
        self.terms
            .keys()
            .flat_map(|k| k.iter().map(|v| v.abs()))
            .max()
            .unwrap_or(0)
    }

    pub fn max_coefficient_norm(&self) -> R {
        self.terms
            .values()
            .map(|c| c.max_abs())
            .fold(R::zero(), |a, b| a.max(b))
    }

    /// True when the support is {0} or empty.
    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|k| k.iter().all(|&v| v == 0))
    }

    /// Residual of the hermitian-valuedness condition c_{-k} = c_k†.
    pub fn hermitian_value_residual(&self) -> R {
        if self.rows != self.cols {
            return R::infinity();
        }
        let mut res = R::zero();
        for (k, c) in &self.terms {
            let neg: Vec<i32> = k.iter().map(|v| -v).collect();
            let other = self.coefficient(&neg);
            res = res.max(other.max_abs_diff(&c.adjoint()));
        }
        res
    }

    /// Validate c_{-k} = c_k† to [`HERMITIAN_TOL`] (relative) and set the flag.
    pub fn claim_hermitian(mut self) -> Result<Self> {
        let scale = self.max_coefficient_norm().max(R::one());
        let res = self.hermitian_value_residual();
        if res > R::of(HERMITIAN_TOL) * scale {
            return Err(Error::NotHermitian {
                context: "claim_hermitian".into(),
                residual: res.as_f64(),
            });
        }
        self.hermitian = true;
        Ok(self)
    }

    /// Set the hermitian flag without validation. For negative-control paths
    /// only; the checked constructor is [`Self::claim_hermitian`].
    pub fn claim_hermitian_unchecked(mut self) -> Self {
        self.hermitian = true;
        self
    }

    /// Σ_k c_k e^{i k·x}
    pub fn eval(&self, x: &[R]) -> Result<CMatrix<R>> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "point has {} coordinates, series dimension is {}",
                x.len(),
                self.n
            )));
        }
        let mut out = CMatrix::zeros(self.rows, self.cols);
        for (k, c) in &self.terms {
            let mut phase = R::zero();
            for (ki, xi) in k.iter().zip(x.iter()) {
                phase = phase + R::of(*ki as f64) * *xi;
            }
            let e = C::new(phase.cos(), phase.sin());
            out = out.add(&c.scale(e));
        }
        Ok(out)
    }

    /// Exact partial derivative ∂/∂x^axis (axis 0-based): k ↦ (i k_axis) c_k.
    pub fn derive_x(&self, axis: usize) -> Result<Self> {
        if axis >= self.n {
            return Err(Error::AxisOutOfRange { axis, n: self.n });
        }
        let mut out = Self::zero(self.n, self.rows, self.cols);
        for (k, c) in &self.terms {
            let f = k[axis];
            if f == 0 {
                continue;
            }
            out.terms
                .insert(k.clone(), c.scale(C::new(R::zero(), R::of(f as f64))));
        }
        // d/dx of a pointwise-Hermitian function is pointwise Hermitian
        out.hermitian = self.hermitian;
        Ok(out)
    }

    /// Exact product: coefficient convolution over frequencies.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows || self.n != other.n {
            return Err(Error::DimensionMismatch(format!(
                "product of {}x{} (n={}) with {}x{} (n={})",
                self.rows, self.cols, self.n, other.rows, other.cols, other.n
            )));
        }
        let mut out = Self::zero(self.n, self.rows, other.cols);
        out.hermitian = false;
        for (ka, ca) in &self.terms {
            for (kb, cb) in &other.terms {
                let k: Vec<i32> = ka.iter().zip(kb.iter()).map(|(a, b)| a + b).collect();
                let prod = ca.matmul(cb);
                let entry = out
                    .terms
                    .entry(k)
                    .or_insert_with(|| CMatrix::zeros(self.rows, other.cols));
                *entry = entry.add(&prod);
            }
        }
        out.prune_zero();
        Ok(out)
    }

    /// ∫_{T^n} series dx = (2π)^n c_0.
    pub fn integrate_torus(&self) -> CMatrix<R> {
        let vol = R::two_pi().powi(self.n as i32);
        self.coefficient(&vec![0; self.n]).scale(cr(vol))
    }

    /// Series of x ↦ value(x)†: coefficients k ↦ (c_{-k})†.
    pub fn adjoint_values(&self) -> Self {
        let mut out = Self::zero(self.n, self.cols, self.rows);
        for (k, c) in &self.terms {
            let neg: Vec<i32> = k.iter().map(|v| -v).collect();
            out.terms.insert(neg, c.adjoint());
        }
        out.hermitian = self.hermitian;
        out
    }

    pub fn add_series(&self, other: &Self) -> Result<Self> {
        if (self.n, self.rows, self.cols) != (other.n, other.rows, other.cols) {
            return Err(Error::DimensionMismatch("series addition".into()));
        }
        let mut out = self.clone();
        out.hermitian = self.hermitian && other.hermitian;
        for (k, c) in &other.terms {
            let entry = out
                .terms
                .entry(k.clone())
                .or_insert_with(|| CMatrix::zeros(self.rows, self.cols));
            *entry = entry.add(c);
        }
        out.prune_zero();
        out.hermitian = self.hermitian && other.hermitian;
        Ok(out)
    }

    pub fn sub_series(&self, other: &Self) -> Result<Self> {
        self.add_series(&other.scale_complex(cr(-R::one())))
    }

    pub fn scale_complex(&self, z: C<R>) -> Self {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c = c.scale(z);
        }
        // only real scaling preserves pointwise hermiticity
        out.hermitian = self.hermitian && z.im.is_zero();
        out
    }

    pub fn scale_real(&self, r: R) -> Self {
        self.scale_complex(cr(r))
    }

    /// Trace as a scalar (1×1) series.
    pub fn trace_series(&self) -> Self {
        let mut out = Self::zero(self.n, 1, 1);
        for (k, c) in &self.terms {
            let mut t = CMatrix::zeros(1, 1);
            t[(0, 0)] = c.trace();
            if !t.max_abs().is_zero() {
                out.terms.insert(k.clone(), t);
            }
        }
        out.hermitian = self.hermitian;
        out
    }

    /// Kronecker promotion of a scalar series to s(x)·I_m.
    pub fn scalar_times_identity(&self, m: usize) -> Result<Self> {
        if self.rows != 1 || self.cols != 1 {
            return Err(Error::DimensionMismatch(
                "scalar_times_identity needs a 1x1 series".into(),
            ));
        }
        let mut out = Self::zero(self.n, m, m);
        for (k, c) in &self.terms {
            out.terms.insert(k.clone(), CMatrix::identity(m).scale(c[(0, 0)]));
        }
        out.hermitian = self.hermitian;
        Ok(out)
    }

    /// Drop terms with max-norm at or below `tol`.
    pub fn prune(&mut self, tol: R) {
        self.terms.retain(|_, c| c.max_abs() > tol);
    }

    fn prune_zero(&mut self) {
        self.prune(R::zero());
    }

    /// Pointwise samples on the uniform N^n grid x_i = 2π i/N, raster order
    /// with axis 0 slowest.
    pub fn sample_grid(&self, n_per_axis: usize) -> Result<GridSamples<R>> {
        let total = n_per_axis.pow(self.n as u32);
        let mut values = Vec::with_capacity(total);
        let mut idx = vec![0usize; self.n];
        let step = R::two_pi() / R::of(n_per_axis as f64);
        for _ in 0..total {
            let x: Vec<R> = idx.iter().map(|&i| R::of(i as f64) * step).collect();
            values.push(self.eval(&x)?);
            // increment raster index, last axis fastest
            for a in (0..self.n).rev() {
                idx[a] += 1;
                if idx[a] < n_per_axis {
                    break;
                }
                idx[a] = 0;
            }
        }
        Ok(GridSamples {
            n: self.n,
            rows: self.rows,
            cols: self.cols,
            n_per_axis,
            values,
        })
    }

    /// Truncated discrete Fourier transform of uniform grid samples:
    /// coefficients for ‖k‖_∞ ≤ cutoff. Exact round trip for series already
    /// band-limited to the cutoff; otherwise this is the one quarantined
    /// source of truncation error in the crate.
    pub fn fit_from_grid(samples: &GridSamples<R>, cutoff: usize) -> Result<Self> {
        let n = samples.n;
        let n_grid = samples.n_per_axis;
        let required = 2 * cutoff + 2;
        if n_grid < required {
            return Err(Error::GridTooCoarse {
                n_grid,
                cutoff,
                required,
            });
        }
        for v in &samples.values {
            if !v.data().iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::Precondition("grid samples must be finite".into()));
            }
        }
        let width = 2 * cutoff + 1;
        // separable partial DFT, one axis at a time (axis 0 slowest in raster
        // order, so transform from the last axis backwards keeps indexing easy)
        let mut dims = vec![n_grid; n];
        let mut cur = samples.values.clone();
        let inv_n = R::one() / R::of(n_grid as f64);
        for axis in (0..n).rev() {
            let mut new_dims = dims.clone();
            new_dims[axis] = width;
            let out_total: usize = new_dims.iter().product();
            let stride: usize = dims[axis + 1..].iter().product();
            let block = stride * dims[axis];
            let mut out = vec![CMatrix::zeros(samples.rows, samples.cols); out_total];
            let out_block = stride * width;
            for o in 0..out_total {
                let outer = o / out_block;
                let rem = o % out_block;
                let fi = rem / stride;
                let inner = rem % stride;
                let k = fi as i32 - cutoff as i32;
                let mut acc = CMatrix::zeros(samples.rows, samples.cols);
                for t in 0..dims[axis] {
                    let src = outer * block + t * stride + inner;
                    let angle = -R::two_pi() * R::of(k as f64) * R::of(t as f64)
                        / R::of(n_grid as f64);
                    let e = C::new(angle.cos(), angle.sin());
                    acc = acc.add(&cur[src].scale(e));
                }
                out[o] = acc.scale(cr(inv_n));
            }
            cur = out;
            dims = new_dims;
        }
        // collect terms
        let mut series = Self::zero(n, samples.rows, samples.cols);
        let scale = cur
            .iter()
            .map(|c| c.max_abs())
            .fold(R::zero(), |a, b| a.max(b));
        let drop_tol = R::of(1e-15) * scale;
        let mut idx = vec![0usize; n];
        for c in cur.into_iter() {
            let k: Vec<i32> = idx.iter().map(|&i| i as i32 - cutoff as i32).collect();
            if c.max_abs() > drop_tol {
                series.terms.insert(k, c);
            }
            for a in (0..n).rev() {
                idx[a] += 1;
                if idx[a] < width {
                    break;
                }
                idx[a] = 0;
            }
        }
        Ok(series)
    }

    pub fn to_json(&self) -> SeriesJson {
        SeriesJson {
            n: self.n,
            rows: self.rows,
            cols: self.cols,
            terms: self
                .terms
                .iter()
                .map(|(k, c)| TermJson {
                    k: k.clone(),
                    re: (0..self.rows)
                        .map(|i| (0..self.cols).map(|j| c[(i, j)].re.as_f64()).collect())
                        .collect(),
                    im: (0..self.rows)
                        .map(|i| (0..self.cols).map(|j| c[(i, j)].im.as_f64()).collect())
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn from_json(json: &SeriesJson) -> Result<Self> {
        let mut terms = Vec::new();
        for t in &json.terms {
            if t.re.len() != json.rows || t.im.len() != json.rows {
                return Err(Error::Serialization("term row count mismatch".into()));
            }
            let mut c = CMatrix::zeros(json.rows, json.cols);
            for i in 0..json.rows {
                if t.re[i].len() != json.cols || t.im[i].len() != json.cols {
                    return Err(Error::Serialization("term column count mismatch".into()));
                }
                for j in 0..json.cols {
                    c[(i, j)] = C::new(R::of(t.re[i][j]), R::of(t.im[i][j]));
                }
            }
            terms.push((t.k.clone(), c));
        }
        Self::from_terms(json.n, json.rows, json.cols, terms)
    }
}

/// Pointwise values on a uniform tensor grid, raster order, axis 0 slowest.
#[derive(Clone, Debug)]
pub struct GridSamples<R: Real> {
    pub n: usize,
    pub rows: usize,
    pub cols: usize,
    pub n_per_axis: usize,
    pub values: Vec<CMatrix<R>>,
}

impl<R: Real> GridSamples<R> {
    /// Apply a pointwise map to every sample.
    pub fn map(&self, f: impl Fn(&CMatrix<R>) -> CMatrix<R>) -> Self {
        Self {
            n: self.n,
            rows: self.rows,
            cols: self.cols,
            n_per_axis: self.n_per_axis,
            values: self.values.iter().map(f).collect(),
        }
    }

    /// Grid point for a flat raster index.
    pub fn point(&self, flat: usize) -> Vec<R> {
        let mut coords = vec![R::zero(); self.n];
        let mut rem = flat;
        for a in (0..self.n).rev() {
            coords[a] = R::two_pi() * R::of((rem % self.n_per_axis) as f64)
                / R::of(self.n_per_axis as f64);
            rem /= self.n_per_axis;
        }
        coords
    }
}

/// JSON form of a series:
/// `{"n":2,"rows":2,"cols":2,"terms":[{"k":[1,0],"re":[[..]],"im":[[..]]}]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeriesJson {
    pub n: usize,
    pub rows: usize,
    pub cols: usize,
    pub terms: Vec<TermJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TermJson {
    pub k: Vec<i32>,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}
