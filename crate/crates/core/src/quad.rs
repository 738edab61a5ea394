//! Quadrature rules: Gauss–Legendre nodes, sphere product rules and the
//! Gaussian mollifier kernel.

use crate::scalar::Real;

/// Gauss–Legendre nodes and weights on [−1, 1], by Newton iteration on the
/// Legendre recurrence.
pub fn gauss_legendre<R: Real>(n: usize) -> Vec<(R, R)> {
    assert!(n >= 1);
    let mut out = Vec::with_capacity(n);
    let nf = R::of(n as f64);
    for i in 0..n {
        // Chebyshev-like initial guess
        let mut x = (R::pi() * (R::of(i as f64) + R::of(0.75)) / (nf + R::of(0.5))).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_and_derivative(n, x);
            let dx = p / dp;
            x = x - dx;
            if dx.abs() < R::epsilon() * R::of(4.0) {
                break;
            }
        }
        let (_, dp) = legendre_and_derivative(n, x);
        let w = R::of(2.0) / ((R::one() - x * x) * dp * dp);
        out.push((x, w));
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    out
}

fn legendre_and_derivative<R: Real>(n: usize, x: R) -> (R, R) {
    let mut p0 = R::one();
    let mut p1 = x;
    if n == 0 {
        return (p0, R::zero());
    }
    for k in 2..=n {
        let kf = R::of(k as f64);
        let p2 = ((R::of(2.0) * kf - R::one()) * x * p1 - (kf - R::one()) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = R::of(n as f64) * (x * p1 - p0) / (x * x - R::one());
    (p1, dp)
}

/// Node on the unit sphere with its surface-measure weight.
#[derive(Clone, Debug)]
pub struct SphereNode<R: Real> {
    pub omega: Vec<R>,
    pub weight: R,
}

/// Quadrature on S^{n−1}: trapezoid on the circle (n = 2, spectrally exact
/// for smooth integrands), Gauss–Legendre in cos θ × trapezoid in azimuth
/// (n = 3). Weights sum to the sphere area.
pub fn sphere_rule<R: Real>(n: usize, circle_nodes: usize, polar: usize, azimuth: usize) -> Vec<SphereNode<R>> {
    match n {
        2 => {
            let w = R::two_pi() / R::of(circle_nodes as f64);
            (0..circle_nodes)
                .map(|i| {
                    let t = R::two_pi() * R::of(i as f64) / R::of(circle_nodes as f64);
                    SphereNode {
                        omega: vec![t.cos(), t.sin()],
                        weight: w,
                    }
                })
                .collect()
        }
        3 => {
            let gl = gauss_legendre::<R>(polar);
            let wphi = R::two_pi() / R::of(azimuth as f64);
            let mut out = Vec::with_capacity(polar * azimuth);
            for (u, wu) in gl {
                let sin_theta = (R::one() - u * u).sqrt();
                for j in 0..azimuth {
                    let phi = R::two_pi() * R::of(j as f64) / R::of(azimuth as f64);
                    out.push(SphereNode {
                        omega: vec![sin_theta * phi.cos(), sin_theta * phi.sin(), u],
                        weight: wu * wphi,
                    });
                }
            }
            out
        }
        _ => panic!("sphere_rule supports n = 2 and n = 3"),
    }
}

/// Standard normal cumulative distribution Φ(z), accurate to ~1e−15.
pub fn normal_cdf<R: Real>(z: R) -> R {
    let half = R::of(0.5);
    half * erfc(-z / R::of(std::f64::consts::SQRT_2))
}

/// Complementary error function via series (small x) and Lentz continued
/// fraction (large x).
pub fn erfc<R: Real>(x: R) -> R {
    if x < R::zero() {
        return R::of(2.0) - erfc(-x);
    }
    if x < R::of(2.0) {
        R::one() - erf_series(x)
    } else if x > R::of(27.0) {
        R::zero()
    } else {
        // erfc(x) = exp(-x²)/(x√π) · 1/(1 + 1/(2x²)/(1 + 2/(2x²)/(1 + ...)))
        erfc_continued_fraction(x)
    }
}

fn erf_series<R: Real>(x: R) -> R {
    // erf(x) = (2/√π) Σ (−1)^k x^{2k+1} / (k!(2k+1))
    let two_over_sqrt_pi = R::of(std::f64::consts::FRAC_2_SQRT_PI);
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut k = 1;
    loop {
        let kf = R::of(k as f64);
        term = term * (-x2) / kf;
        let contrib = term / (R::of(2.0) * kf + R::one());
        sum = sum + contrib;
        if contrib.abs() < R::epsilon() * sum.abs().max(R::one()) || k > 200 {
            break;
        }
        k += 1;
    }
    two_over_sqrt_pi * sum
}

fn erfc_continued_fraction<R: Real>(x: R) -> R {
    // erfc(x) = exp(−x²)/√π · 1/K with the continued fraction
    // K = x + (1/2)/(x + 1/(x + (3/2)/(x + 2/(x + ...)))), evaluated by
    // modified Lentz iteration.
    let tiny = R::of(1e-300);
    let mut f = x.max(tiny);
    let mut c = f;
    let mut d = R::zero();
    for k in 1..300 {
        let a = R::of(k as f64) * R::of(0.5);
        d = x + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = x + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = R::one() / d;
        let delta = c * d;
        f = f * delta;
        if (delta - R::one()).abs() < R::epsilon() * R::of(4.0) {
            break;
        }
    }
    let sqrt_pi = R::of(std::f64::consts::PI).sqrt();
    (-x * x).exp() / (sqrt_pi * f)
}
