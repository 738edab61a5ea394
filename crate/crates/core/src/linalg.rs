//! Dense complex linear algebra sized for this crate: small Hermitian
//! eigenproblems for symbol matrices (m ≤ 8) and eigenvalue-only solves for
//! Galerkin matrices with a few thousand rows.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::{cr, C, Real};

/// Dense row-major complex matrix.
#[derive(Clone, PartialEq)]
pub struct CMatrix<R: Real> {
    rows: usize,
    cols: usize,
    data: Vec<C<R>>,
}

impl<R: Real> std::fmt::Debug for CMatrix<R> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.4e}{:+.4e}i  ", z.re.as_f64(), z.im.as_f64())?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl<R: Real> CMatrix<R> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C::new(R::zero(), R::zero()); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = cr(R::one());
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C<R>) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Build from nested rows of (re, im) pairs; handy in tests.
    pub fn from_rows(rows: &[Vec<C<R>>]) -> Self {
        let r = rows.len();
        let c = if r > 0 { rows[0].len() } else { 0 };
        Self::from_fn(r, c, |i, j| rows[i][j])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C<R>] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C<R>] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[C<R>] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<C<R>> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn conj(&self) -> Self {
        let mut m = self.clone();
        for z in m.data.iter_mut() {
            *z = z.conj();
        }
        m
    }

    pub fn trace(&self) -> C<R> {
        (0..self.rows.min(self.cols)).fold(C::new(R::zero(), R::zero()), |acc, i| {
            acc + self[(i, i)]
        })
    }

    pub fn scale(&self, z: C<R>) -> Self {
        let mut m = self.clone();
        for w in m.data.iter_mut() {
            *w = *w * z;
        }
        m
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut m = self.clone();
        for (w, v) in m.data.iter_mut().zip(other.data.iter()) {
            *w = *w + *v;
        }
        m
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut m = self.clone();
        for (w, v) in m.data.iter_mut().zip(other.data.iter()) {
            *w = *w - *v;
        }
        m
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.re.is_zero() && a.im.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] = out[(i, j)] + a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[C<R>]) -> Vec<C<R>> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let mut acc = C::new(R::zero(), R::zero());
                for j in 0..self.cols {
                    acc = acc + self[(i, j)] * v[j];
                }
                acc
            })
            .collect()
    }

    pub fn frobenius_norm(&self) -> R {
        self.data
            .iter()
            .map(|z| z.norm_sqr())
            .fold(R::zero(), |a, b| a + b)
            .sqrt()
    }

    pub fn max_abs(&self) -> R {
        self.data
            .iter()
            .map(|z| z.norm())
            .fold(R::zero(), |a, b| a.max(b))
    }

    /// max_ij |self_ij - other_ij|
    pub fn max_abs_diff(&self, other: &Self) -> R {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (*a - *b).norm())
            .fold(R::zero(), |a, b| a.max(b))
    }

    /// max_ij |self_ij - (self^†)_ij|
    pub fn hermitian_residual(&self) -> R {
        assert!(self.is_square());
        let mut res = R::zero();
        for i in 0..self.rows {
            for j in i..self.cols {
                let d = (self[(i, j)] - self[(j, i)].conj()).norm();
                res = res.max(d);
            }
        }
        res
    }

    pub fn is_hermitian_within(&self, tol: R) -> bool {
        self.is_square() && self.hermitian_residual() <= tol
    }

    /// Force exact Hermitian symmetry by averaging with the adjoint.
    pub fn hermitize(&self) -> Self {
        let half = cr(R::of(0.5));
        self.add(&self.adjoint()).scale(half)
    }

    /// Spectral norm of a Hermitian matrix (largest |eigenvalue|).
    pub fn hermitian_operator_norm(&self) -> Result<R> {
        let (evals, _) = jacobi_hermitian(self)?;
        Ok(evals
            .iter()
            .map(|h| h.abs())
            .fold(R::zero(), |a, b| a.max(b)))
    }

    /// Outer product v w†.
    pub fn outer(v: &[C<R>], w: &[C<R>]) -> Self {
        Self::from_fn(v.len(), w.len(), |i, j| v[i] * w[j].conj())
    }

    /// Determinant via LU with partial pivoting (small matrices).
    pub fn det(&self) -> C<R> {
        assert!(self.is_square());
        let n = self.rows;
        let mut a = self.clone();
        let mut det = cr(R::one());
        for k in 0..n {
            let mut piv = k;
            let mut best = a[(k, k)].norm();
            for i in k + 1..n {
                let v = a[(i, k)].norm();
                if v > best {
                    best = v;
                    piv = i;
                }
            }
            if best.is_zero() {
                return C::new(R::zero(), R::zero());
            }
            if piv != k {
                for j in 0..n {
                    let t = a[(k, j)];
                    a[(k, j)] = a[(piv, j)];
                    a[(piv, j)] = t;
                }
                det = -det;
            }
            let akk = a[(k, k)];
            det = det * akk;
            for i in k + 1..n {
                let f = a[(i, k)] / akk;
                for j in k + 1..n {
                    let v = a[(k, j)];
                    a[(i, j)] = a[(i, j)] - f * v;
                }
            }
        }
        det
    }

    /// Inverse via Gauss-Jordan with partial pivoting (small matrices).
    pub fn inverse(&self) -> Result<Self> {
        assert!(self.is_square());
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for k in 0..n {
            let mut piv = k;
            let mut best = a[(k, k)].norm();
            for i in k + 1..n {
                let v = a[(i, k)].norm();
                if v > best {
                    best = v;
                    piv = i;
                }
            }
            if best.is_zero() {
                return Err(Error::SingularMatrix { pivot: 0.0 });
            }
            if piv != k {
                for j in 0..n {
                    a.data.swap(k * n + j, piv * n + j);
                    inv.data.swap(k * n + j, piv * n + j);
                }
            }
            let d = a[(k, k)];
            if d.norm().is_zero() {
                return Err(Error::SingularMatrix { pivot: 0.0 });
            }
            for j in 0..n {
                a[(k, j)] = a[(k, j)] / d;
                inv[(k, j)] = inv[(k, j)] / d;
            }
            for i in 0..n {
                if i == k {
                    continue;
                }
                let f = a[(i, k)];
                if f.norm().is_zero() {
                    continue;
                }
                for j in 0..n {
                    let u = a[(k, j)];
                    let w = inv[(k, j)];
                    a[(i, j)] = a[(i, j)] - f * u;
                    inv[(i, j)] = inv[(i, j)] - f * w;
                }
            }
        }
        Ok(inv)
    }
}

impl<R: Real> std::ops::Index<(usize, usize)> for CMatrix<R> {
    type Output = C<R>;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C<R> {
        &self.data[i * self.cols + j]
    }
}

impl<R: Real> std::ops::IndexMut<(usize, usize)> for CMatrix<R> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C<R> {
        &mut self.data[i * self.cols + j]
    }
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations. Returns eigenvalues in ascending order and the matching
/// eigenvectors as columns. Intended for small matrices (symbol side,
/// m ≤ 8); cost grows cubically with dimension per sweep.
pub fn jacobi_hermitian<R: Real>(a: &CMatrix<R>) -> Result<(Vec<R>, CMatrix<R>)> {
    assert!(a.is_square(), "jacobi_hermitian requires a square matrix");
    let n = a.rows();
    let scale = a.max_abs();
    if n == 0 {
        return Ok((Vec::new(), CMatrix::zeros(0, 0)));
    }
    let mut m = a.clone();
    let mut v = CMatrix::identity(n);
    let tol = R::epsilon() * scale.max(R::one());
    let max_sweeps = 60;
    for _sweep in 0..max_sweeps {
        let mut off = R::zero();
        for i in 0..n {
            for j in i + 1..n {
                off = off.max(m[(i, j)].norm());
            }
        }
        if off <= tol {
            let mut evals: Vec<R> = (0..n).map(|i| m[(i, i)].re).collect();
            // sort ascending, permuting eigenvector columns along
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&x, &y| evals[x].partial_cmp(&evals[y]).unwrap());
            evals.sort_by(|x, y| x.partial_cmp(y).unwrap());
            let vs = CMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
            return Ok((evals, vs));
        }
        for p in 0..n {
            for q in p + 1..n {
                let g = m[(p, q)];
                let r = g.norm();
                if r <= tol * R::of(1e-3) {
                    continue;
                }
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let phase = g / cr(r);
                let zeta = (aqq - app) / (R::of(2.0) * r);
                let t = {
                    let s = if zeta >= R::zero() { R::one() } else { -R::one() };
                    s / (zeta.abs() + (R::one() + zeta * zeta).sqrt())
                };
                let c = R::one() / (R::one() + t * t).sqrt();
                let s = c * t;
                // unitary J: J_pp = c, J_pq = s*phase, J_qp = -s*conj(phase), J_qq = c
                let jpq = phase.scale(s);
                let jqp = -phase.conj().scale(s);
                // columns: B = M J
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = mkp.scale(c) + mkq * jqp;
                    m[(k, q)] = mkp * jpq + mkq.scale(c);
                }
                // rows: M' = J† B
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = mpk.scale(c) + mqk * jqp.conj();
                    m[(q, k)] = mpk * jpq.conj() + mqk.scale(c);
                }
                // clean the rotated pair; diagonals of a Hermitian matrix stay real
                m[(p, q)] = C::new(R::zero(), R::zero());
                m[(q, p)] = C::new(R::zero(), R::zero());
                m[(p, p)] = C::new(m[(p, p)].re, R::zero());
                m[(q, q)] = C::new(m[(q, q)].re, R::zero());
                // accumulate eigenvectors
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp.scale(c) + vkq * jqp;
                    v[(k, q)] = vkp * jpq + vkq.scale(c);
                }
            }
        }
    }
    Err(Error::EigenFailure)
}

/// Eigenvalues (ascending) of a Hermitian matrix without eigenvectors.
///
/// Householder tridiagonalization followed by an implicit-shift QL sweep on
/// the real symmetric tridiagonal form. Suited to Galerkin matrices up to a
/// few thousand rows; the reduction is parallelised over rows.
pub fn hermitian_eigenvalues<R: Real>(a: &CMatrix<R>) -> Result<Vec<R>> {
    assert!(a.is_square());
    let n = a.rows();
    if n == 0 {
        return Ok(Vec::new());
    }
    if n <= 12 {
        return jacobi_hermitian(a).map(|(e, _)| e);
    }
    let (d, e) = tridiagonalize(a);
    tql_eigenvalues(d, e)
}

/// Householder reduction of a Hermitian matrix to real symmetric tridiagonal
/// form; returns (diagonal, subdiagonal magnitudes).
fn tridiagonalize<R: Real>(a: &CMatrix<R>) -> (Vec<R>, Vec<R>) {
    let n = a.rows();
    let mut m = a.clone();
    let mut sub = vec![R::zero(); n.saturating_sub(1)];
    let par_threshold = 128;
    for k in 0..n.saturating_sub(2) {
        // column below the diagonal
        let len = n - k - 1;
        let mut x = vec![C::new(R::zero(), R::zero()); len];
        for (t, i) in (k + 1..n).enumerate() {
            x[t] = m[(i, k)];
        }
        let xnorm = x
            .iter()
            .map(|z| z.norm_sqr())
            .fold(R::zero(), |s, v| s + v)
            .sqrt();
        if xnorm <= R::epsilon() * m.max_abs().max(R::one()) * R::of(1e-2) {
            sub[k] = x[0].norm();
            continue;
        }
        // alpha = -phase(x0) * |x|
        let phase = if x[0].norm() > R::zero() {
            x[0] / cr(x[0].norm())
        } else {
            cr(R::one())
        };
        let alpha = -phase.scale(xnorm);
        let mut v = x.clone();
        v[0] = v[0] - alpha;
        let vnorm2 = v
            .iter()
            .map(|z| z.norm_sqr())
            .fold(R::zero(), |s, u| s + u);
        if vnorm2 <= R::zero() {
            sub[k] = xnorm;
            continue;
        }
        let tau = R::of(2.0) / vnorm2;

        // w = tau * A22 * v over the trailing block [k+1.., k+1..]
        let base = k + 1;
        let mut w: Vec<C<R>> = if len >= par_threshold {
            (0..len)
                .into_par_iter()
                .map(|r| {
                    let row = &m.data[(base + r) * n + base..(base + r) * n + n];
                    let mut acc = C::new(R::zero(), R::zero());
                    for (c, vc) in v.iter().enumerate() {
                        acc = acc + row[c] * *vc;
                    }
                    acc.scale(tau)
                })
                .collect()
        } else {
            (0..len)
                .map(|r| {
                    let row = &m.data[(base + r) * n + base..(base + r) * n + n];
                    let mut acc = C::new(R::zero(), R::zero());
                    for (c, vc) in v.iter().enumerate() {
                        acc = acc + row[c] * *vc;
                    }
                    acc.scale(tau)
                })
                .collect()
        };
        // w <- w - (tau/2) (v†w) v
        let vw = v
            .iter()
            .zip(w.iter())
            .fold(C::new(R::zero(), R::zero()), |s, (vi, wi)| {
                s + vi.conj() * *wi
            });
        let corr = vw.scale(tau / R::of(2.0));
        for (wi, vi) in w.iter_mut().zip(v.iter()) {
            *wi = *wi - corr * *vi;
        }
        // rank-2 update: A22 <- A22 - v w† - w v†
        let update_row = |r: usize, row: &mut [C<R>]| {
            let vr = v[r];
            let wr = w[r];
            for c in 0..len {
                row[c] = row[c] - vr * w[c].conj() - wr * v[c].conj();
            }
        };
        if len >= par_threshold {
            m.data[base * n..]
                .par_chunks_mut(n)
                .take(len)
                .enumerate()
                .for_each(|(r, chunk)| update_row(r, &mut chunk[base..]));
        } else {
            for r in 0..len {
                let row = &mut m.data[(base + r) * n + base..(base + r) * n + n];
                update_row(r, row);
            }
        }
        // record the produced subdiagonal entry and zero the column
        sub[k] = alpha.norm();
        m[(k + 1, k)] = alpha;
        for i in k + 2..n {
            m[(i, k)] = C::new(R::zero(), R::zero());
        }
    }
    if n >= 2 {
        sub[n - 2] = m[(n - 1, n - 2)].norm();
    }
    let d: Vec<R> = (0..n).map(|i| m[(i, i)].re).collect();
    (d, sub)
}

/// Implicit-shift QL for a real symmetric tridiagonal matrix, eigenvalues
/// only.
fn tql_eigenvalues<R: Real>(mut d: Vec<R>, mut e_in: Vec<R>) -> Result<Vec<R>> {
    let n = d.len();
    let mut e = vec![R::zero(); n];
    e[..n - 1].copy_from_slice(&e_in[..n - 1]);
    e_in.clear();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= R::epsilon() * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 64 {
                return Err(Error::EigenFailure);
            }
            let mut g = (d[l + 1] - d[l]) / (R::of(2.0) * e[l]);
            let mut r = hypot(g, R::one());
            let sign_r = if g >= R::zero() { r } else { -r };
            g = d[m] - d[l] + e[l] / (g + sign_r);
            let mut s = R::one();
            let mut c = R::one();
            let mut p = R::zero();
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = hypot(f, g);
                e[i + 1] = r;
                if r.is_zero() {
                    d[i + 1] = d[i + 1] - p;
                    e[m] = R::zero();
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + R::of(2.0) * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if i == l {
                    d[l] = d[l] - p;
                    e[l] = g;
                    e[m] = R::zero();
                }
            }
        }
    }
    d.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(d)
}

fn hypot<R: Real>(a: R, b: R) -> R {
    let (a, b) = (a.abs(), b.abs());
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi.is_zero() {
        return R::zero();
    }
    let q = lo / hi;
    hi * (R::one() + q * q).sqrt()
}

/// Cholesky factor L (lower triangular) of a Hermitian positive definite
/// matrix, A = L L†.
pub fn cholesky_lower<R: Real>(a: &CMatrix<R>) -> Result<CMatrix<R>> {
    assert!(a.is_square());
    let n = a.rows();
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut diag = a[(j, j)].re;
        for k in 0..j {
            diag = diag - l[(j, k)].norm_sqr();
        }
        if diag <= R::zero() {
            return Err(Error::NotPositiveDefinite {
                pivot: diag.as_f64(),
                index: j,
            });
        }
        let dsqrt = diag.sqrt();
        l[(j, j)] = cr(dsqrt);
        for i in j + 1..n {
            let mut acc = a[(i, j)];
            for k in 0..j {
                acc = acc - l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = acc / cr(dsqrt);
        }
    }
    Ok(l)
}

/// Solve L X = B for lower-triangular L.
pub fn solve_lower<R: Real>(l: &CMatrix<R>, b: &CMatrix<R>) -> CMatrix<R> {
    let n = l.rows();
    let m = b.cols();
    let mut x = b.clone();
    for col in 0..m {
        for i in 0..n {
            let mut acc = x[(i, col)];
            for k in 0..i {
                acc = acc - l[(i, k)] * x[(k, col)];
            }
            x[(i, col)] = acc / l[(i, i)];
        }
    }
    x
}

/// Reduce the Hermitian-definite pencil (A, B) to standard form
/// C = L⁻¹ A L⁻† with B = L L†; C has the pencil's eigenvalues.
pub fn reduce_generalized<R: Real>(a: &CMatrix<R>, b: &CMatrix<R>) -> Result<CMatrix<R>> {
    let l = cholesky_lower(b)?;
    let y = solve_lower(&l, a);
    // C = Y L^{-†}  <=>  C L† = Y  <=>  L C† = Y†
    let c_adj = solve_lower(&l, &y.adjoint());
    Ok(c_adj.adjoint())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(n: usize, rng: &mut impl Rng) -> CMatrix<f64> {
        let mut a = CMatrix::zeros(n, n);
        for i in 0..n {
            a[(i, i)] = cr(rng.gen_range(-1.0..1.0));
            for j in i + 1..n {
                let z = C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                a[(i, j)] = z;
                a[(j, i)] = z.conj();
            }
        }
        a
    }

    #[test]
    fn jacobi_diagonalizes_random_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [2usize, 3, 5, 8] {
            let a = random_hermitian(n, &mut rng);
            let (evals, v) = jacobi_hermitian(&a).unwrap();
            // A V = V diag(evals)
            let av = a.matmul(&v);
            let vd = CMatrix::from_fn(n, n, |i, j| v[(i, j)].scale(evals[j]));
            assert!(av.max_abs_diff(&vd) < 1e-12, "residual too large for n={n}");
            // V unitary
            let vv = v.adjoint().matmul(&v);
            assert!(vv.max_abs_diff(&CMatrix::identity(n)) < 1e-12);
            // ascending
            for w in evals.windows(2) {
                assert!(w[0] <= w[1]);
            }
        }
    }

    #[test]
    fn tridiagonal_path_matches_jacobi() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [13usize, 24, 40] {
            let a = random_hermitian(n, &mut rng);
            let ev_fast = hermitian_eigenvalues(&a).unwrap();
            let (ev_ref, _) = jacobi_hermitian(&a).unwrap();
            for (x, y) in ev_fast.iter().zip(ev_ref.iter()) {
                assert!((x - y).abs() < 1e-11, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn eigenvalues_of_known_matrix() {
        // sigma_x has eigenvalues ±1
        let mut a = CMatrix::<f64>::zeros(2, 2);
        a[(0, 1)] = cr(1.0);
        a[(1, 0)] = cr(1.0);
        let (evals, _) = jacobi_hermitian(&a).unwrap();
        assert!((evals[0] + 1.0).abs() < 1e-14);
        assert!((evals[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn determinant_and_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_hermitian(4, &mut rng).add(&CMatrix::identity(4).scale(cr(3.0)));
        let inv = a.inverse().unwrap();
        let prod = a.matmul(&inv);
        assert!(prod.max_abs_diff(&CMatrix::identity(4)) < 1e-12);
        // det of Hermitian equals product of eigenvalues
        let (evals, _) = jacobi_hermitian(&a).unwrap();
        let det = a.det();
        let prod_ev: f64 = evals.iter().product();
        assert!((det.re - prod_ev).abs() < 1e-10 * prod_ev.abs().max(1.0));
        assert!(det.im.abs() < 1e-10);
    }

    #[test]
    fn generalized_reduction_recovers_pencil_eigenvalues() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 16;
        let a = random_hermitian(n, &mut rng);
        // B = I + 0.3 * H with H small Hermitian, positive definite
        let h = random_hermitian(n, &mut rng);
        let b = CMatrix::identity(n).add(&h.scale(cr(0.05)));
        let c = reduce_generalized(&a, &b).unwrap();
        let ev = hermitian_eigenvalues(&c).unwrap();
        // oracle: eigenvalues of B^-1 A coincide with pencil eigenvalues
        let binv = b.inverse().unwrap();
        let ba = binv.matmul(&a);
        // B^-1 A is not Hermitian, but is similar to C; compare traces of powers
        let t1 = ba.trace();
        let s1: f64 = ev.iter().sum();
        assert!((t1.re - s1).abs() < 1e-9);
        assert!(t1.im.abs() < 1e-9);
        let t2 = ba.matmul(&ba).trace();
        let s2: f64 = ev.iter().map(|x| x * x).sum();
        assert!((t2.re - s2).abs() < 1e-9);
    }
}
