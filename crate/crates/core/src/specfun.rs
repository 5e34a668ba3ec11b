//! Special functions and spectral data.
//!
//! * The modified Bessel function `K(x) = ∫₀^∞ e^{−x cosh θ} cosh θ dθ` and its
//!   derivatives, evaluated directly from that integral.
//! * `J₁` and its positive zeros, which characterize the radial Dirichlet
//!   eigenpairs of `−(∂_r² + (3/r)∂_r)` on the unit ball of ℝ⁴.
//! * An independent Rayleigh–Ritz eigensolver for the same problem.
//! * Membership tests for the admissible Robin coefficient sets.
//!
//! # Quadrature for `K`
//!
//! With `t = cosh θ = 1 + w²` and `w = y/√x`,
//!
//! ```text
//! ∫₀^∞ e^{−x cosh θ} coshᵐθ dθ = 2 e^{−x} x^{−1/2} ∫₀^∞ e^{−y²} (1 + y²/x)ᵐ (2 + y²/x)^{−1/2} dy.
//! ```
//!
//! The square-root singularity at `t = 1` is gone and the integrand is an
//! even, analytic Gaussian-weighted function of `y`, so the trapezoidal rule
//! converges geometrically; the step is halved until two successive sums
//! agree to a few ulps. The `e^{−x}` factor is kept outside so ratios stay
//! finite for large arguments.

use crate::error::{Error, Result};
use crate::grid::simpson_weights;
use crate::linalg::{
    backward_substitute_transposed, cholesky, forward_substitute, symmetric_eigen, symmetric_tridiagonal_eigen,
};
use crate::scalar::Scalar;

/// Default absolute distance from a resonance for set membership.
pub const TOL_SPEC: f64 = 1e-6;
/// Default number of modes scanned by the membership tests.
pub const K_MAX: usize = 64;

/// `e^{x} ∫₀^∞ e^{−x cosh θ} coshᵐθ dθ` for `x > 0`.
pub fn bessel_moment_scaled<T: Scalar>(x: T, m: i32) -> Result<T> {
    if !(x > T::zero()) || !x.is_finite() {
        return Err(Error::Domain(format!(
            "Bessel argument must be positive and finite, got {x}"
        )));
    }
    let two = T::lit(2.0);
    let inv_x = T::one() / x;
    let f = |y: T| {
        let q = y * y * inv_x;
        (-y * y).exp() * (T::one() + q).powi(m) / (two + q).sqrt()
    };
    // tail cutoff: the Gaussian dominates once y² exceeds −ln(eps) plus the
    // polynomial growth of (1 + y²/x)^m
    let tiny = T::epsilon() * T::lit(1e-3);
    let tail_sum = |h: T, start: usize, stride: usize| {
        let mut s = T::zero();
        let mut k = start;
        loop {
            let y = h * T::from_usize_lossy(k);
            let v = f(y);
            s += v;
            if y > T::lit(2.0) && v < tiny * f(T::zero()) {
                break;
            }
            k += stride;
            if k > 1_000_000 {
                break;
            }
        }
        s
    };
    let mut h = T::lit(0.5) * x.sqrt().min(T::one());
    let mut sum = f(T::zero()) * T::lit(0.5) + tail_sum(h, 1, 1);
    let mut estimate = sum * h;
    for _ in 0..30 {
        let half = h * T::lit(0.5);
        // odd multiples of the new half step
        let odd = tail_sum(half, 1, 2);
        sum += odd;
        let refined = sum * half;
        let converged = (refined - estimate).abs() <= T::lit(8.0) * T::epsilon() * refined.abs();
        estimate = refined;
        h = half;
        if converged {
            break;
        }
    }
    Ok(two / x.sqrt() * estimate)
}

/// `K(x) = ∫₀^∞ e^{−x cosh θ} cosh θ dθ` (the modified Bessel function of
/// order one).
pub fn bessel_k1<T: Scalar>(x: T) -> Result<T> {
    Ok((-x).exp() * bessel_moment_scaled(x, 1)?)
}

/// `K′(x) = −∫₀^∞ e^{−x cosh θ} cosh²θ dθ`.
pub fn bessel_k1_prime<T: Scalar>(x: T) -> Result<T> {
    Ok(-(-x).exp() * bessel_moment_scaled(x, 2)?)
}

/// `K″(x) = ∫₀^∞ e^{−x cosh θ} cosh³θ dθ`.
pub fn bessel_k1_second<T: Scalar>(x: T) -> Result<T> {
    Ok((-x).exp() * bessel_moment_scaled(x, 3)?)
}

/// `K₀(x) = ∫₀^∞ e^{−x cosh θ} dθ`.
pub fn bessel_k0<T: Scalar>(x: T) -> Result<T> {
    Ok((-x).exp() * bessel_moment_scaled(x, 0)?)
}

/// Relative residual of `x²K″ + xK′ − (1 + x²)K = 0`.
pub fn bessel_ode_residual<T: Scalar>(x: T) -> Result<T> {
    let k = bessel_moment_scaled(x, 1)?;
    let kp = -bessel_moment_scaled(x, 2)?;
    let kpp = bessel_moment_scaled(x, 3)?;
    let a = x * x * kpp;
    let b = x * kp;
    let c = (T::one() + x * x) * k;
    Ok((a + b - c).abs() / a.abs().max(b.abs()).max(c.abs()))
}

/// `−x K′(x) / K(x)`, the quotient excluded from the exterior Robin set.
pub fn robin_ratio<T: Scalar>(x: T) -> Result<T> {
    Ok(x * bessel_moment_scaled(x, 2)? / bessel_moment_scaled(x, 1)?)
}

/// `J₁(x) = (1/π) ∫₀^π cos(θ − x sin θ) dθ`, by the trapezoidal rule on the
/// periodic integrand (exact up to aliasing terms of order `J_N(x)`).
pub fn bessel_j1<T: Scalar>(x: T) -> T {
    let n = 2 * x.abs().to_usize().unwrap_or(0) + 48;
    let pi = T::PI();
    let h = pi / T::from_usize_lossy(n);
    let g = |theta: T| (theta - x * theta.sin()).cos();
    let mut s = T::lit(0.5) * (g(T::zero()) + g(pi));
    for k in 1..n {
        s += g(h * T::from_usize_lossy(k));
    }
    s / T::from_usize_lossy(n)
}

/// The `k`-th positive zero of `J₁` (`k ≥ 1`), by bisection on
/// `[kπ, (k + ½)π]`, which brackets exactly one zero.
pub fn bessel_j1_zero<T: Scalar>(k: usize) -> Result<T> {
    if k == 0 {
        return Err(Error::Domain("zero index starts at 1".into()));
    }
    let pi = T::PI();
    let mut lo = pi * T::from_usize_lossy(k);
    let mut hi = pi * (T::from_usize_lossy(k) + T::lit(0.5));
    let mut flo = bessel_j1(lo);
    let fhi = bessel_j1(hi);
    if flo * fhi > T::zero() {
        return Err(Error::EigensolverInconsistency(format!(
            "no sign change bracketing j₁,{k}"
        )));
    }
    for _ in 0..200 {
        let mid = T::lit(0.5) * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = bessel_j1(mid);
        if fm == T::zero() {
            return Ok(mid);
        }
        if (fm > T::zero()) == (flo > T::zero()) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(T::lit(0.5) * (lo + hi))
}

/// `λ_k = j₁,ₖ²`.
pub fn radial_eigenvalue<T: Scalar>(k: usize) -> Result<T> {
    let j = bessel_j1_zero::<T>(k)?;
    Ok(j * j)
}

/// One radial Dirichlet eigenpair sampled on `r_i = i/(Nr − 1)`.
#[derive(Debug, Clone)]
pub struct RadialEigenpair<T> {
    pub k: usize,
    pub lambda: T,
    /// Eigenvalue from the Rayleigh–Ritz route.
    pub lambda_ritz: T,
    pub r_nodes: Vec<T>,
    /// Normalized so that `θ(0) = max θ = 1`.
    pub theta: Vec<T>,
    /// Max-norm residual of the finite-difference operator at the nodes.
    pub residual: T,
    /// Residual bound declared for this grid.
    pub tolerance: T,
}

impl<T: Scalar> RadialEigenpair<T> {
    /// `θ_k(r) = 2 J₁(√λ r) / (√λ r)`.
    pub fn eval(&self, r: T) -> T {
        theta_bessel(self.lambda.sqrt(), r)
    }
}

fn theta_bessel<T: Scalar>(j: T, r: T) -> T {
    let x = j * r;
    if x.abs() < T::lit(1e-6) {
        T::one() - x * x / T::lit(8.0)
    } else {
        T::lit(2.0) * bessel_j1(x) / x
    }
}

/// Gauss–Legendre nodes and weights on `[0, 1]` (Golub–Welsch).
pub fn gauss_legendre_unit<T: Scalar>(n: usize) -> Result<(Vec<T>, Vec<T>)> {
    let off: Vec<T> = (1..n)
        .map(|k| {
            let k = T::from_usize_lossy(k);
            k / (T::lit(4.0) * k * k - T::one()).sqrt()
        })
        .collect();
    let (x, v) = symmetric_tridiagonal_eigen(&vec![T::zero(); n], &off)?;
    let half = T::lit(0.5);
    let nodes = x.iter().map(|&xi| half * (xi + T::one())).collect();
    let weights = (0..n).map(|i| v[0][i] * v[0][i]).collect();
    Ok((nodes, weights))
}

/// Shifted Legendre values `P_n(2s−1)` and derivatives `d/ds`, `n < count`.
fn legendre_shifted<T: Scalar>(s: T, count: usize) -> (Vec<T>, Vec<T>) {
    let x = T::lit(2.0) * s - T::one();
    let mut p = vec![T::zero(); count];
    let mut dp = vec![T::zero(); count];
    p[0] = T::one();
    if count > 1 {
        p[1] = x;
        dp[1] = T::one();
    }
    for n in 1..count.saturating_sub(1) {
        let nn = T::from_usize_lossy(n);
        p[n + 1] = ((T::lit(2.0) * nn + T::one()) * x * p[n] - nn * p[n - 1]) / (nn + T::one());
        // P'_{n+1} = P'_{n-1} + (2n+1) P_n
        dp[n + 1] = dp[n - 1] + (T::lit(2.0) * nn + T::one()) * p[n];
    }
    // chain rule for x = 2s − 1
    for d in dp.iter_mut() {
        *d *= T::lit(2.0);
    }
    (p, dp)
}

/// Rayleigh–Ritz eigenvalues and coefficient vectors for
/// `−(θ'' + 3θ'/r) = λθ`, `θ(1) = 0`, in the variable `s = r²`, where the
/// operator is `−(4/s)(s²θ_s)_s` with weight `s ds`. Basis functions are
/// `(1 − s) P_n(2s − 1)`.
fn ritz_eigen<T: Scalar>(basis: usize) -> Result<(Vec<T>, Vec<Vec<T>>)> {
    let (nodes, weights) = gauss_legendre_unit::<T>(basis + 4)?;
    let mut mass = vec![vec![T::zero(); basis]; basis];
    let mut stiff = vec![vec![T::zero(); basis]; basis];
    for (&s, &w) in nodes.iter().zip(&weights) {
        let (p, dp) = legendre_shifted(s, basis);
        let phi: Vec<T> = p.iter().map(|&pn| (T::one() - s) * pn).collect();
        let dphi: Vec<T> = (0..basis).map(|n| (T::one() - s) * dp[n] - p[n]).collect();
        for m in 0..basis {
            for n in 0..=m {
                let mv = w * s * phi[m] * phi[n];
                let sv = w * T::lit(4.0) * s * s * dphi[m] * dphi[n];
                mass[m][n] += mv;
                stiff[m][n] += sv;
            }
        }
    }
    for m in 0..basis {
        for n in 0..m {
            mass[n][m] = mass[m][n];
            stiff[n][m] = stiff[m][n];
        }
    }
    let l = cholesky(&mass)?;
    // C = L⁻¹ A L⁻ᵀ
    let mut tmp = vec![vec![T::zero(); basis]; basis];
    for j in 0..basis {
        let col: Vec<T> = (0..basis).map(|i| stiff[i][j]).collect();
        let y = forward_substitute(&l, &col);
        for i in 0..basis {
            tmp[i][j] = y[i];
        }
    }
    let mut c = vec![vec![T::zero(); basis]; basis];
    for i in 0..basis {
        let row = tmp[i].clone();
        let y = forward_substitute(&l, &row);
        c[i][..basis].copy_from_slice(&y[..basis]);
    }
    for i in 0..basis {
        for j in 0..i {
            let avg = T::lit(0.5) * (c[i][j] + c[j][i]);
            c[i][j] = avg;
            c[j][i] = avg;
        }
    }
    let (vals, vecs) = symmetric_eigen(&c)?;
    let coeffs = (0..basis)
        .map(|k| {
            let y: Vec<T> = (0..basis).map(|i| vecs[i][k]).collect();
            backward_substitute_transposed(&l, &y)
        })
        .collect();
    Ok((vals, coeffs))
}

fn ritz_eval<T: Scalar>(coeffs: &[T], r: T) -> T {
    let s = r * r;
    let (p, _) = legendre_shifted(s, coeffs.len());
    (T::one() - s) * coeffs.iter().zip(&p).map(|(&c, &pn)| c * pn).sum::<T>()
}

/// Discrete residual `max |(D_rr + (3/r)D_r)θ + λθ|` over the non-boundary
/// nodes, with the axis treated by even reflection.
fn radial_fd_residual<T: Scalar>(theta: &[T], r: &[T], lambda: T) -> T {
    let n = theta.len();
    let h = r[1] - r[0];
    let h2 = h * h;
    let two = T::lit(2.0);
    let mut worst = T::zero();
    for i in 0..n - 1 {
        let op = if i == 0 {
            T::lit(4.0) * two * (theta[1] - theta[0]) / h2
        } else {
            (theta[i + 1] - two * theta[i] + theta[i - 1]) / h2
                + T::lit(3.0) / r[i] * (theta[i + 1] - theta[i - 1]) / (two * h)
        };
        worst = worst.max((op + lambda * theta[i]).abs());
    }
    worst
}

/// First `count` radial Dirichlet eigenpairs on a uniform grid of `nr`
/// nodes over `[0, 1]`, computed by Rayleigh–Ritz and by the zeros of `J₁`.
/// The two routes must agree on every eigenvalue and eigenfunction.
pub fn radial_eigenpairs<T: Scalar>(count: usize, nr: usize) -> Result<Vec<RadialEigenpair<T>>> {
    if count == 0 {
        return Err(Error::InvalidArgument("need at least one eigenpair".into()));
    }
    if nr < 64 {
        return Err(Error::GridTooCoarse(format!(
            "radial eigenpairs need Nr ≥ 64, got {nr}"
        )));
    }
    let basis = 24 + 6 * count;
    let (ritz_vals, ritz_vecs) = ritz_eigen::<T>(basis)?;
    let lambda_tol = T::lit(1e-8).max(T::epsilon() * T::lit(1e3));
    let shape_tol = T::lit(1e-6).max(T::epsilon().sqrt() * T::lit(10.0));

    let h = T::one() / T::from_usize_lossy(nr - 1);
    let r_nodes: Vec<T> = (0..nr).map(|i| T::from_usize_lossy(i) * h).collect();

    let mut pairs = Vec::with_capacity(count);
    for k in 1..=count {
        let lambda = radial_eigenvalue::<T>(k)?;
        let lambda_ritz = ritz_vals[k - 1];
        if (lambda - lambda_ritz).abs() > lambda_tol * lambda {
            return Err(Error::EigensolverInconsistency(format!(
                "λ_{k}: Bessel {lambda} vs Ritz {lambda_ritz}"
            )));
        }
        let j = lambda.sqrt();
        let mut theta: Vec<T> = r_nodes.iter().map(|&r| theta_bessel(j, r)).collect();
        theta[nr - 1] = T::zero();

        let coeffs = &ritz_vecs[k - 1];
        let at_axis = ritz_eval(coeffs, T::zero());
        let shape_err = r_nodes
            .iter()
            .zip(&theta)
            .map(|(&r, &t)| (ritz_eval(coeffs, r) / at_axis - t).abs())
            .fold(T::zero(), T::max);
        if shape_err > shape_tol {
            return Err(Error::EigensolverInconsistency(format!(
                "θ_{k}: eigenfunction mismatch {shape_err}"
            )));
        }

        let residual = radial_fd_residual(&theta, &r_nodes, lambda);
        // second-order truncation: |θ''''|, |θ'''/r| scale like λ²
        let tolerance = lambda * lambda * h * h + T::lit(1e3) * T::epsilon() * lambda;
        pairs.push(RadialEigenpair {
            k,
            lambda,
            lambda_ritz,
            r_nodes: r_nodes.clone(),
            theta,
            residual,
            tolerance,
        });
    }
    Ok(pairs)
}

/// `∫₀¹ θ_a θ_b r³ dr` by composite Simpson on the pairs' common grid.
pub fn radial_inner<T: Scalar>(a: &RadialEigenpair<T>, b: &RadialEigenpair<T>) -> T {
    let n = a.r_nodes.len();
    let h = a.r_nodes[1] - a.r_nodes[0];
    let w = simpson_weights(n, h);
    (0..n)
        .map(|i| w[i] * a.r_nodes[i].powi(3) * a.theta[i] * b.theta[i])
        .sum()
}

/// Robin coefficient and test-function exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobinSpectrumParams<T> {
    pub beta: T,
    pub alpha: T,
}

/// `2 + 2√(1 + π²/4)`: smallest Robin coefficient for exterior blow-up.
pub fn exterior_beta_threshold<T: Scalar>() -> T {
    let pi = T::PI();
    T::lit(2.0) + T::lit(2.0) * (T::one() + pi * pi / T::lit(4.0)).sqrt()
}

/// `1 + √(1 + π²/4)`: smallest exponent with `Φ ≥ 0` on `r ≥ 1`.
pub fn exterior_alpha_threshold<T: Scalar>() -> T {
    exterior_beta_threshold::<T>() / T::lit(2.0)
}

impl<T: Scalar> RobinSpectrumParams<T> {
    /// Exterior blow-up parameters: `α = β/2` with `β` above the threshold.
    pub fn exterior(beta: T) -> Result<Self> {
        let thr = exterior_beta_threshold::<T>();
        if !(beta >= thr) {
            return Err(Error::ParameterRelationViolated(format!(
                "beta {beta} below the exterior threshold {thr}"
            )));
        }
        Ok(Self {
            beta,
            alpha: beta / T::lit(2.0),
        })
    }
}

/// `√λ coth √λ`.
pub fn interior_second_family<T: Scalar>(lambda: T) -> T {
    let s = lambda.sqrt();
    s / s.tanh()
}

/// `β = (λ₁/α) tanh α` for `0 < α < √λ₁`, required to exceed `√λ₁ coth √λ₁`.
pub fn interior_params<T: Scalar>(alpha: T) -> Result<RobinSpectrumParams<T>> {
    let lambda1 = radial_eigenvalue::<T>(1)?;
    let root = lambda1.sqrt();
    if !(alpha > T::zero() && alpha < root) {
        return Err(Error::Domain(format!(
            "alpha must lie in (0, √λ₁) = (0, {root}), got {alpha}"
        )));
    }
    let beta = lambda1 / alpha * alpha.tanh();
    let bound = interior_second_family(lambda1);
    if !(beta > bound) {
        return Err(Error::ParameterRelationViolated(format!(
            "beta = {beta} does not exceed √λ₁ coth √λ₁ = {bound}"
        )));
    }
    Ok(RobinSpectrumParams { beta, alpha })
}

/// Coefficient of the `z = 0` boundary term left over when the interior
/// test function `cosh(α(z−1)) θ₁(r)` is integrated against the Robin
/// problem: `α β tanh α − λ₁`, scaled by `λ₁`. It vanishes only when
/// `β = (λ₁/α) coth α`.
pub fn interior_boundary_defect<T: Scalar>(alpha: T, beta: T) -> Result<T> {
    let lambda1 = radial_eigenvalue::<T>(1)?;
    Ok((alpha * beta * alpha.tanh() - lambda1) / lambda1)
}

/// Outcome of the exterior Robin-set test.
#[derive(Debug, Clone, PartialEq)]
pub struct ExteriorMembership<T> {
    pub member: bool,
    /// Mode whose quotient `−kK′(k)/K(k)` is closest to `β`.
    pub nearest_k: usize,
    pub nearest_ratio: T,
    /// `min_k |β − ratio(k)|` over integer wavenumbers.
    pub margin: T,
    /// Same with wavenumbers `kπ`, the natural ones on `z ∈ [0, 1]`.
    pub margin_kpi: T,
    /// `min_k |β − 1 − ratio(kπ)|`: the solvability denominator
    /// `(β−1)K(kπ) + kπK′(kπ)` divided by `K(kπ)`.
    pub denominator_margin: T,
    pub denominator_k: usize,
    /// Same denominator with integer wavenumbers.
    pub denominator_margin_integer: T,
    pub denominator_ok: bool,
}

pub fn in_s_exterior<T: Scalar>(beta: T, k_max: usize, tol: T) -> Result<ExteriorMembership<T>> {
    if !(beta > T::zero()) || k_max == 0 {
        return Err(Error::InvalidArgument("need beta > 0 and k_max ≥ 1".into()));
    }
    let pi = T::PI();
    let mut out = ExteriorMembership {
        member: true,
        nearest_k: 1,
        nearest_ratio: T::zero(),
        margin: T::infinity(),
        margin_kpi: T::infinity(),
        denominator_margin: T::infinity(),
        denominator_k: 1,
        denominator_margin_integer: T::infinity(),
        denominator_ok: true,
    };
    for k in 1..=k_max {
        let kk = T::from_usize_lossy(k);
        let ratio = robin_ratio(kk)?;
        let gap = (beta - ratio).abs();
        if gap < out.margin {
            out.margin = gap;
            out.nearest_k = k;
            out.nearest_ratio = ratio;
        }
        out.denominator_margin_integer = out.denominator_margin_integer.min((beta - T::one() - ratio).abs());
        let ratio_pi = robin_ratio(kk * pi)?;
        out.margin_kpi = out.margin_kpi.min((beta - ratio_pi).abs());
        let den = (beta - T::one() - ratio_pi).abs();
        if den < out.denominator_margin {
            out.denominator_margin = den;
            out.denominator_k = k;
        }
    }
    out.member = out.margin > tol;
    out.denominator_ok = out.denominator_margin > tol;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InteriorFamily {
    /// `β = λ_k`.
    Eigenvalue,
    /// `β = √λ_k coth √λ_k`.
    CothBranch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InteriorMembership<T> {
    pub member: bool,
    pub nearest_family: InteriorFamily,
    pub nearest_k: usize,
    pub nearest_value: T,
    pub margin: T,
}

pub fn in_s_interior<T: Scalar>(beta: T, k_max: usize, tol: T) -> Result<InteriorMembership<T>> {
    if !(beta > T::zero()) || k_max == 0 {
        return Err(Error::InvalidArgument("need beta > 0 and k_max ≥ 1".into()));
    }
    let mut out = InteriorMembership {
        member: true,
        nearest_family: InteriorFamily::Eigenvalue,
        nearest_k: 1,
        nearest_value: T::zero(),
        margin: T::infinity(),
    };
    for k in 1..=k_max {
        let lambda = radial_eigenvalue::<T>(k)?;
        for (family, value) in [
            (InteriorFamily::Eigenvalue, lambda),
            (InteriorFamily::CothBranch, interior_second_family(lambda)),
        ] {
            let gap = (beta - value).abs();
            if gap < out.margin {
                out.margin = gap;
                out.nearest_family = family;
                out.nearest_k = k;
                out.nearest_value = value;
            }
        }
    }
    out.member = out.margin > tol;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Ascending series for K₁ (independent of the integral route):
    /// K₁(x) = 1/x + ln(x/2) I₁(x) − (x/4) Σ [ψ(k+1) + ψ(k+2)] (x²/4)^k / (k!(k+1)!)
    fn k1_series(x: f64) -> f64 {
        let euler = 0.577_215_664_901_532_9;
        let q = x * x / 4.0;
        let mut i1 = 0.0;
        let mut tail = 0.0;
        let mut term = 1.0; // (x²/4)^k / (k!(k+1)!)
        let mut psi1 = -euler; // ψ(k+1)
        let mut psi2 = 1.0 - euler; // ψ(k+2)
        for k in 0..60 {
            i1 += term;
            tail += (psi1 + psi2) * term;
            let kf = k as f64;
            psi1 += 1.0 / (kf + 1.0);
            psi2 += 1.0 / (kf + 2.0);
            term *= q / ((kf + 1.0) * (kf + 2.0));
        }
        i1 *= x / 2.0;
        1.0 / x + (x / 2.0).ln() * i1 - x / 4.0 * tail
    }

    /// Large-argument expansion √(π/2x) e^{−x} Σ a_k(1)/x^k.
    fn k1_asymptotic(x: f64) -> f64 {
        let mu = 4.0;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..30 {
            let kf = k as f64;
            let next = term * (mu - (2.0 * kf - 1.0).powi(2)) / (kf * 8.0 * x);
            if next.abs() > term.abs() {
                break;
            }
            term = next;
            sum += term;
        }
        (std::f64::consts::PI / (2.0 * x)).sqrt() * (-x).exp() * sum
    }

    #[test]
    fn k1_matches_series_and_asymptotics() {
        let k = bessel_k1(1.0).unwrap();
        assert_relative_eq!(k, k1_series(1.0), max_relative = 1e-12);
        assert_relative_eq!(k, 0.601_907_230_197_234_6, max_relative = 1e-12);
        let k10 = bessel_k1(10.0).unwrap();
        assert_relative_eq!(k10, k1_asymptotic(10.0), max_relative = 1e-8);
        assert_relative_eq!(k10, 1.864_877_345_382_558_5e-5, max_relative = 1e-10);
        assert!(k10 <= 1.5 * 10f64.powf(-0.5) * (-10.0f64).exp());
    }

    #[test]
    fn k1_derivative_identities() {
        let kp = bessel_k1_prime(1.0).unwrap();
        assert_relative_eq!(kp, -1.022_931_668_437_942_8, max_relative = 1e-10);
        // K₁′ = −K₀ − K₁/x
        let k0 = bessel_k0(1.0).unwrap();
        assert_relative_eq!(kp, -k0 - bessel_k1(1.0).unwrap(), max_relative = 1e-12);
        for x in [0.3f64, 1.0, 4.0] {
            let h = 1e-4;
            let fd = (bessel_k1(x + h).unwrap() - bessel_k1(x - h).unwrap()) / (2.0 * h);
            let d = bessel_k1_prime(x).unwrap();
            assert!(d < 0.0);
            assert!((fd - d).abs() < 1e-6 * d.abs(), "x = {x}");
        }
    }

    #[test]
    fn k1_monotone_decay() {
        let mut prev = bessel_k1(0.5).unwrap();
        for i in 1..30 {
            let k = bessel_k1(0.5 + i as f64).unwrap();
            assert!(k < prev && k > 0.0);
            prev = k;
        }
    }

    #[test]
    fn k1_domain_error() {
        assert!(matches!(bessel_k1(0.0), Err(Error::Domain(_))));
        assert!(bessel_k1(-1.0).is_err());
    }

    #[test]
    fn bessel_ode_holds() {
        for x in [0.5, 1.0, 2.0, 5.0, 10.0] {
            assert!(bessel_ode_residual(x).unwrap() < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn j1_zeros() {
        assert_relative_eq!(
            bessel_j1_zero::<f64>(1).unwrap(),
            3.831_705_970_207_512,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            radial_eigenvalue::<f64>(2).unwrap(),
            49.218_456_321_694_6,
            max_relative = 1e-11
        );
        // J₁ at a non-zero point against its power series
        let x: f64 = 2.0;
        let series: f64 = (0..30)
            .map(|k| {
                let kf = k as f64;
                let fact = |n: f64| (1..=n as u64).map(|v| v as f64).product::<f64>();
                (-1.0f64).powi(k) * (x / 2.0).powf(2.0 * kf + 1.0) / (fact(kf) * fact(kf + 1.0))
            })
            .sum();
        assert_relative_eq!(bessel_j1(x), series, max_relative = 1e-13);
    }

    #[test]
    fn eigenpairs_two_routes() {
        let pairs = radial_eigenpairs::<f64>(3, 129).unwrap();
        assert!((pairs[0].lambda - 14.681_970_642_123_89).abs() < 1e-8);
        assert!((pairs[0].lambda - pairs[0].lambda_ritz).abs() < 1e-8);
        assert_relative_eq!(pairs[1].lambda, 49.218_456_32, max_relative = 1e-9);
        for p in &pairs {
            assert_eq!(p.theta[p.theta.len() - 1], 0.0);
            assert_eq!(p.theta[0], 1.0);
            assert!(
                p.residual <= p.tolerance,
                "k = {}: {} > {}",
                p.k,
                p.residual,
                p.tolerance
            );
        }
        assert!(pairs.windows(2).all(|w| w[0].lambda < w[1].lambda));
        assert!(pairs[0].theta[..128].iter().all(|&t| t > 0.0));
        for a in 0..3 {
            for b in 0..3 {
                if a != b {
                    let ip = radial_inner(&pairs[a], &pairs[b]);
                    let na = radial_inner(&pairs[a], &pairs[a]);
                    assert!(ip.abs() < 1e-6 * na.max(1e-3), "({a},{b}): {ip}");
                }
            }
        }
    }

    #[test]
    fn eigenpairs_reject_coarse_grid() {
        assert!(radial_eigenpairs::<f64>(1, 32).is_err());
    }

    #[test]
    fn exterior_set() {
        assert_relative_eq!(robin_ratio(1.0).unwrap(), 1.699_483_935_593_772, max_relative = 1e-11);
        let mut prev = 0.0;
        for k in 1..=64 {
            let r = robin_ratio(k as f64).unwrap();
            assert!(r > prev);
            prev = r;
        }
        let rep = in_s_exterior(6.0, 20, TOL_SPEC).unwrap();
        assert!(rep.member);
        assert!(rep.margin > 0.4);
        let on = robin_ratio(3.0).unwrap();
        assert!(!in_s_exterior(on, 20, TOL_SPEC).unwrap().member);
    }

    #[test]
    fn interior_set_and_params() {
        let l1 = radial_eigenvalue::<f64>(1).unwrap();
        let excluded = interior_second_family(l1);
        assert_relative_eq!(excluded, 3.835_307_182_218_793, max_relative = 1e-10);
        assert!(!in_s_interior(l1, 20, TOL_SPEC).unwrap().member);
        assert!(!in_s_interior(excluded, 20, TOL_SPEC).unwrap().member);
        assert!(in_s_interior(11.18, 20, TOL_SPEC).unwrap().member);

        let p = interior_params(1.0).unwrap();
        assert_relative_eq!(p.beta, 11.181_703_038_955_666, max_relative = 1e-10);
        assert!(p.beta > excluded);
        let small = interior_params(1e-6).unwrap();
        assert_relative_eq!(small.beta, l1, max_relative = 1e-9);
        assert!(matches!(interior_params(4.0), Err(Error::Domain(_))));
        assert!(matches!(
            interior_params(3.83),
            Err(Error::ParameterRelationViolated(_))
        ));

        let mut prev = f64::INFINITY;
        for i in 1..38 {
            let b = interior_params(0.1 * i as f64).unwrap().beta;
            assert!(b < prev);
            prev = b;
        }
    }

    #[test]
    fn interior_boundary_defect_vanishes_only_for_coth_relation() {
        let l1 = radial_eigenvalue::<f64>(1).unwrap();
        let alpha: f64 = 1.0;
        let printed = interior_params(alpha).unwrap().beta;
        assert!(interior_boundary_defect(alpha, printed).unwrap().abs() > 0.1);
        let coth = l1 / alpha / alpha.tanh();
        assert!(interior_boundary_defect(alpha, coth).unwrap().abs() < 1e-14);
    }

    #[test]
    fn f32_k1() {
        let k = bessel_k1(1.0f32).unwrap();
        assert!((k - 0.601_907_2).abs() < 1e-5);
    }
}
