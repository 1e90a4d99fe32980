//! Slow, independent reference computations used to cross-check the fast
//! closed forms elsewhere in the crate.
//!
//! Nothing in here is called from a production path. Each routine follows the
//! most literal definition available (positive-term series, direct numerical
//! convolution) precisely so that it shares no code, and therefore no bugs,
//! with the implementation it validates.

/// Regularized lower incomplete gamma by the plain ascending series
/// `P(a, x) = x^a e^-x / Gamma(a) * sum_n x^n / ((a)(a+1)...(a+n))`,
/// summed until the term drops below `tol` relative to the sum.
///
/// Every term is positive, so the summation is numerically benign for any
/// `x` that does not overflow `e^x`; it is merely slow for large `x`.
pub fn reg_lower_gamma_series(a: f64, x: f64, tol: f64, max_terms: u32) -> f64 {
    assert!(a > 0.0 && x >= 0.0);
    if x == 0.0 {
        return 0.0;
    }
    let mut term = 1.0 / a;
    let mut sum = term;
    for n in 1..=max_terms {
        term *= x / (a + n as f64);
        sum += term;
        if term < sum * tol {
            break;
        }
    }
    sum * (a * x.ln() - x - crate::specfun::ln_gamma(a)).exp()
}

/// Gamma density with shape `m` and rate `r`.
pub fn gamma_density(m: f64, r: f64, z: f64) -> f64 {
    if z < 0.0 {
        return 0.0;
    }
    if z == 0.0 {
        // finite only for m = 1 (value r); the integrators never sample z = 0
        // with weight when m > 1
        return if m == 1.0 { r } else { 0.0 };
    }
    ((m - 1.0) * z.ln() + m * r.ln() - r * z - crate::specfun::ln_gamma(m)).exp()
}

/// Adaptive Simpson quadrature on `[a, b]` with absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(a, b, fa, fm, fb);
    adapt(f, a, b, fa, fm, fb, whole, tol, 50)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adapt<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        adapt(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + adapt(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// CDF of `X1 + X2` for independent gammas `X_i ~ (shape m_i, rate r_i)`,
/// by direct numerical convolution `F(u) = int_0^u f_1(z) F_2(u - z) dz`.
pub fn gamma_sum_cdf_quadrature(m1: f64, r1: f64, m2: f64, r2: f64, u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    let integrand =
        |z: f64| gamma_density(m1, r1, z) * reg_lower_gamma_series(m2, r2 * (u - z), 1e-15, 200_000);
    adaptive_simpson(&integrand, 0.0, u, 1e-11)
}

/// CDF of `X6 + min(X4, X5)` for independent gammas, by numerical
/// convolution of the direct-link density with the min distribution:
/// `F(x) = int_0^x f_6(u) [1 - Q_4(x-u) Q_5(x-u)] du`.
pub fn combined_sinr_cdf_quadrature(
    m4: f64,
    b4: f64,
    m5: f64,
    b5: f64,
    m6: f64,
    b6: f64,
    x: f64,
) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let survival_min = |z: f64| {
        let q4 = 1.0 - reg_lower_gamma_series(m4, b4 * z, 1e-15, 200_000);
        let q5 = 1.0 - reg_lower_gamma_series(m5, b5 * z, 1e-15, 200_000);
        q4 * q5
    };
    let integrand = |u: f64| gamma_density(m6, b6, u) * (1.0 - survival_min(x - u));
    adaptive_simpson(&integrand, 0.0, x, 1e-11)
}
