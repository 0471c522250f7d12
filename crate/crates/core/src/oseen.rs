//! The normalized Lamb-Oseen vortex and the quantities derived from it.
//!
//! With `s = 1 + t` the vortex is `Θ(t,x) = g(t,|x|²) x^⊥` where
//! `g(t,r) = (1 − e^{−r/4s})/(2πr)`. The profile argument is the *squared*
//! radius, so on the unit circle `Θ = g(t,1) x^⊥` is a rigid rotation.
//!
//! Residual torque. For an azimuthal field `u = f(r) e_θ` the shear traction on
//! `r = 1` is `σ_rθ = f'(1) − f(1)`; the pressure acts along the normal and
//! contributes no torque. With the normal pointing into the disk,
//! `∮ x^⊥·Σ(Θ,Π) n = −2π (f'(1) − f(1))` where `f(r) = r g(t,r²)`, which gives
//! `2π(f'(1) − f(1)) = 2[u e^{−u} + expm1(−u)]`, `u = 1/(4s)`. The time
//! derivative of the rotation rate is `∂_t g(t,1) = −e^{−u}/(8π s²)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fsop::RigidBodyParams;
use crate::quad;

/// `x^⊥ = (−x₂, x₁)`.
#[inline]
pub fn perp(x: [f64; 2]) -> [f64; 2] {
    [-x[1], x[0]]
}

/// `g(t, r)` with the limit `1/(8π(1+t))` at `r = 0`.
pub fn g_profile(t: f64, r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::Domain(format!("g_profile needs r >= 0, got {r}")));
    }
    Ok(g_raw(t, r))
}

#[inline]
fn g_raw(t: f64, r: f64) -> f64 {
    let s = 1.0 + t;
    let z = r / (4.0 * s);
    if z < 1e-8 {
        (1.0 - 0.5 * z) / (8.0 * PI * s)
    } else {
        -(-z).exp_m1() / (2.0 * PI * r)
    }
}

/// `dg/dr (t, r)`.
#[inline]
fn g_prime(t: f64, r: f64) -> f64 {
    let s = 1.0 + t;
    let z = r / (4.0 * s);
    if z < 1e-4 {
        // series of (z e^{-z} + e^{-z} - 1)/(2π r²) in z, times 1/(4s)^2 ... collected
        let c = -0.5 + z / 3.0 - z * z / 8.0 + z * z * z / 30.0;
        c / (2.0 * PI * 16.0 * s * s)
    } else {
        (z * (-z).exp() + (-z).exp_m1()) / (2.0 * PI * r * r)
    }
}

/// `α Θ(t, x)`; returns `(0, 0)` at the origin.
pub fn theta(t: f64, x: [f64; 2], alpha: f64) -> [f64; 2] {
    let r2 = x[0] * x[0] + x[1] * x[1];
    let g = alpha * g_raw(t, r2);
    let p = perp(x);
    [g * p[0], g * p[1]]
}

/// Jacobian `∂_j (αΘ)_i` as `[[∂₁Θ₁, ∂₂Θ₁], [∂₁Θ₂, ∂₂Θ₂]]`.
pub fn theta_gradient(t: f64, x: [f64; 2], alpha: f64) -> [[f64; 2]; 2] {
    let r2 = x[0] * x[0] + x[1] * x[1];
    let g = g_raw(t, r2);
    let gp = g_prime(t, r2);
    let p = perp(x);
    let mut j = [[0.0; 2]; 2];
    for i in 0..2 {
        for k in 0..2 {
            j[i][k] = 2.0 * x[k] * gp * p[i];
        }
    }
    j[0][1] -= g;
    j[1][0] += g;
    for row in j.iter_mut() {
        for v in row.iter_mut() {
            *v *= alpha;
        }
    }
    j
}

/// `∇Π = α² (x/|x|²) |Θ|²` with the normalized vortex.
pub fn pressure_gradient(t: f64, x: [f64; 2], alpha: f64) -> Result<[f64; 2]> {
    let r2 = x[0] * x[0] + x[1] * x[1];
    if r2 == 0.0 {
        return Err(Error::Domain("pressure gradient is singular at the origin".into()));
    }
    let th = theta(t, x, 1.0);
    let m = alpha * alpha * (th[0] * th[0] + th[1] * th[1]) / r2;
    Ok([m * x[0], m * x[1]])
}

/// A vortex of strength `alpha` frozen at time `time`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OseenField {
    pub alpha: f64,
    pub time: f64,
}

impl OseenField {
    pub fn new(alpha: f64, time: f64) -> Self {
        Self { alpha, time }
    }
    pub fn velocity(&self, x: [f64; 2]) -> [f64; 2] {
        theta(self.time, x, self.alpha)
    }
    pub fn gradient(&self, x: [f64; 2]) -> [[f64; 2]; 2] {
        theta_gradient(self.time, x, self.alpha)
    }
    pub fn pressure_gradient(&self, x: [f64; 2]) -> Result<[f64; 2]> {
        pressure_gradient(self.time, x, self.alpha)
    }
    /// Rotation rate of the vortex on the unit circle.
    pub fn boundary_rotation(&self) -> f64 {
        self.alpha * g_raw(self.time, 1.0)
    }
}

/// Decomposition of the residual torque.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZetaEval {
    pub time: f64,
    pub torque_residual: f64,
    /// `∮ x^⊥·Σ(Θ,Π) n dσ`
    pub stress_part: f64,
    /// `𝓙 ∂_t g(t,1)`
    pub inertia_part: f64,
}

/// `u e^{−u} + expm1(−u)`, accurate for small `u`.
fn shear_kernel(u: f64) -> f64 {
    if u < 0.05 {
        // Σ_{n≥2} (−1)^{n−1} (n−1) uⁿ / n!
        let mut sum = 0.0;
        let mut pow_fact = u; // uⁿ/n! built incrementally
        for n in 2..20 {
            pow_fact *= u / n as f64;
            let sign = if n % 2 == 0 { -1.0 } else { 1.0 };
            sum += sign * (n as f64 - 1.0) * pow_fact;
        }
        sum
    } else {
        u * (-u).exp() + (-u).exp_m1()
    }
}

/// `∂_t g(t, 1)` by exact differentiation.
pub fn dg_dt_at_one(t: f64) -> f64 {
    let s = 1.0 + t;
    -(-0.25 / s).exp() / (8.0 * PI * s * s)
}

/// Residual torque of the normalized vortex in the angular momentum law.
pub fn zeta(t: f64, body: &RigidBodyParams) -> ZetaEval {
    let s = 1.0 + t;
    let stress_part = -2.0 * shear_kernel(0.25 / s);
    let inertia_part = body.inertia * dg_dt_at_one(t);
    ZetaEval { time: t, torque_residual: -stress_part - inertia_part, stress_part, inertia_part }
}

/// Force and torque of `Σ(Θ,Π)n` on the unit circle by the `n`-point
/// trapezoidal rule, traction built from the analytic Jacobian of Θ.
/// Returns `([F_x, F_y], torque)`, both integrated with the inward normal.
pub fn boundary_stress_quadrature(t: f64, n: usize) -> ([f64; 2], f64) {
    // Π is radial, so it is constant on the circle; its value drops out of
    // the force integral and is set to zero here.
    let mut f = [0.0; 2];
    let mut tq = 0.0;
    let h = 2.0 * PI / n as f64;
    for j in 0..n {
        let th = j as f64 * h;
        let x = [th.cos(), th.sin()];
        let jac = theta_gradient(t, x, 1.0);
        let nrm = [-x[0], -x[1]];
        let mut tr = [0.0; 2];
        for i in 0..2 {
            for k in 0..2 {
                tr[i] += (jac[i][k] + jac[k][i]) * nrm[k];
            }
        }
        f[0] += h * tr[0];
        f[1] += h * tr[1];
        let xp = perp(x);
        tq += h * (xp[0] * tr[0] + xp[1] * tr[1]);
    }
    (f, tq)
}

/// `ζ(t)` with the stress integral evaluated by `n`-point quadrature.
pub fn zeta_quadrature(t: f64, body: &RigidBodyParams, n: usize) -> ZetaEval {
    let (_, tq) = boundary_stress_quadrature(t, n);
    let inertia_part = body.inertia * dg_dt_at_one(t);
    ZetaEval { time: t, torque_residual: -tq - inertia_part, stress_part: tq, inertia_part }
}

/// `sup |ζ(t)|(1+t)²` over a sample of times, with the stress integral
/// evaluated by `n`-point quadrature, and the largest net Θ-force seen.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ZetaDecayReport {
    pub quadrature_points: usize,
    pub constant: f64,
    /// Time at which the supremum is attained.
    pub argmax: f64,
    pub max_net_force: f64,
}

/// Scans `samples` log-spaced times in `[0, t_max]` (plus `t = 0`).
pub fn zeta_decay_constant(body: &RigidBodyParams, t_max: f64, samples: usize, n: usize) -> Result<ZetaDecayReport> {
    if !(t_max > 0.0) || samples < 2 || n < 4 {
        return Err(Error::Precondition("zeta scan needs t_max > 0, at least 2 samples and 4 quadrature points".into()));
    }
    let top = (1.0 + t_max).ln();
    let mut rep = ZetaDecayReport { quadrature_points: n, constant: 0.0, argmax: 0.0, max_net_force: 0.0 };
    for k in 0..samples {
        let t = (top * k as f64 / (samples - 1) as f64).exp() - 1.0;
        let z = zeta_quadrature(t, body, n);
        let c = z.torque_residual.abs() * (1.0 + t).powi(2);
        if c > rep.constant {
            rep.constant = c;
            rep.argmax = t;
        }
        let (f, _) = boundary_stress_quadrature(t, n);
        rep.max_net_force = rep.max_net_force.max(f[0].hypot(f[1]));
    }
    Ok(rep)
}

/// Norms of Θ and of time differences, with the corresponding bound shapes.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ThetaNormReport {
    pub t: f64,
    pub s: f64,
    pub p: f64,
    /// `‖Θ(t)‖_{L^p}` (only for `p > 2`).
    pub lp: Option<f64>,
    /// `‖Θ(t)‖_{L^p} (1+t)^{1/2−1/p}`: the smallest admissible `a_p` at this `t`.
    pub lp_constant: Option<f64>,
    pub grad_lp: f64,
    /// `‖∇Θ(t)‖_{L^p} (1+t)^{1−1/p}`.
    pub grad_lp_constant: f64,
    pub diff_l2_sq: f64,
    /// `(1/4π)|log((1+t)/(1+s))|`
    pub diff_l2_bound: f64,
    pub diff_grad_l2_sq: f64,
    /// `‖∇Θ(t)−∇Θ(s)‖² / |1/(1+t) − 1/(1+s)|`, i.e. the smallest admissible κ₁.
    pub kappa1: Option<f64>,
}

/// Radial profile `f(r) = |Θ|` and `f'(r)` for the normalized vortex.
fn f_and_fp(t: f64, r: f64) -> (f64, f64) {
    let f = r * g_raw(t, r * r);
    let fp = g_raw(t, r * r) + 2.0 * r * r * g_prime(t, r * r);
    (f, fp)
}

/// `∫₀^∞ h(r) 2πr dr` with a closed-form tail `c r^{−k}` beyond the cut.
fn radial_integral<F: Fn(f64) -> f64>(h: F, scale: f64, tail: Option<(f64, f64)>, rtol: f64) -> Result<f64> {
    let cut = (4.0 * scale * 45.0).sqrt();
    let pts = [0.0, 0.25 * scale.sqrt(), scale.sqrt(), 3.0 * scale.sqrt(), cut];
    let mut total = 0.0;
    for w in pts.windows(2) {
        total += quad::integrate(|r| h(r) * 2.0 * PI * r, w[0], w[1], rtol, 0.0)?;
    }
    if let Some((c, k)) = tail {
        // ∫_cut^∞ c r^{−k} 2πr dr
        total += 2.0 * PI * c * cut.powf(2.0 - k) / (k - 2.0);
    }
    Ok(total)
}

fn sup_on_rays<F: Fn(f64) -> f64>(h: F, scale: f64) -> f64 {
    let rmax = 20.0 * scale.sqrt();
    let n = 4000;
    let mut best = (0.0f64, 0.0);
    for i in 1..=n {
        let r = rmax * i as f64 / n as f64;
        let v = h(r);
        if v > best.0 {
            best = (v, r);
        }
    }
    // golden-section polish
    let (mut a, mut b) = ((best.1 - rmax / n as f64).max(1e-12), best.1 + rmax / n as f64);
    let gr = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let c = b - gr * (b - a);
        let d = a + gr * (b - a);
        if h(c) > h(d) {
            b = d;
        } else {
            a = c;
        }
    }
    best.0.max(h(0.5 * (a + b)))
}

/// `‖Θ(t)‖_{L^p(ℝ²)}` for `p ∈ (2, ∞]`.
pub fn theta_lp(t: f64, p: f64, rtol: f64) -> Result<f64> {
    if !(p > 2.0) {
        return Err(Error::Precondition(format!("‖Θ‖_Lp needs p > 2, got {p}")));
    }
    let s = 1.0 + t;
    if p.is_infinite() {
        return Ok(sup_on_rays(|r| f_and_fp(t, r).0, s));
    }
    let c = (2.0 * PI).powf(-p);
    let v = radial_integral(|r| f_and_fp(t, r).0.powf(p), s, Some((c, p)), rtol)?;
    Ok(v.powf(1.0 / p))
}

/// `‖∇Θ(t)‖_{L^p(ℝ²)}` (Frobenius) for `p ∈ (1, ∞]`.
pub fn theta_grad_lp(t: f64, p: f64, rtol: f64) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::Precondition(format!("‖∇Θ‖_Lp needs p > 1, got {p}")));
    }
    let s = 1.0 + t;
    let dens = move |r: f64| {
        let (f, fp) = f_and_fp(t, r);
        let q = if r > 0.0 { f / r } else { fp };
        (fp * fp + q * q).sqrt()
    };
    if p.is_infinite() {
        return Ok(sup_on_rays(dens, s));
    }
    let c = (2f64.sqrt() / (2.0 * PI)).powf(p);
    let v = radial_integral(|r| dens(r).powf(p), s, Some((c, 2.0 * p)), rtol)?;
    Ok(v.powf(1.0 / p))
}

/// `‖Θ(t) − Θ(s)‖²_{L²}` by quadrature.
pub fn theta_diff_l2_sq(t: f64, s: f64, rtol: f64) -> Result<f64> {
    if t == s {
        return Ok(0.0);
    }
    let sc = 1.0 + t.max(s);
    radial_integral(
        |r| {
            let d = f_and_fp(t, r).0 - f_and_fp(s, r).0;
            d * d
        },
        sc,
        None,
        rtol,
    )
}

/// `‖∇Θ(t) − ∇Θ(s)‖²_{L²}` by quadrature.
pub fn theta_grad_diff_l2_sq(t: f64, s: f64, rtol: f64) -> Result<f64> {
    if t == s {
        return Ok(0.0);
    }
    let sc = 1.0 + t.max(s);
    radial_integral(
        |r| {
            let (f1, g1) = f_and_fp(t, r);
            let (f2, g2) = f_and_fp(s, r);
            let q = if r > 0.0 { (f1 - f2) / r } else { g1 - g2 };
            (g1 - g2).powi(2) + q * q
        },
        sc,
        None,
        rtol,
    )
}

/// All four norm estimates at `(t, s, p)`.
pub fn theta_norm_bounds(t: f64, s: f64, p: f64) -> Result<ThetaNormReport> {
    if !(t >= 0.0 && s >= 0.0) {
        return Err(Error::Precondition("times must be nonnegative".into()));
    }
    if !(p > 1.0) {
        return Err(Error::Precondition(format!("p must exceed 1, got {p}")));
    }
    let rtol = 1e-10;
    let lp = if p > 2.0 { Some(theta_lp(t, p, rtol)?) } else { None };
    let ip = if p.is_infinite() { 0.0 } else { 1.0 / p };
    let grad_lp = theta_grad_lp(t, p, rtol)?;
    let diff = theta_diff_l2_sq(t, s, rtol)?;
    let dgrad = theta_grad_diff_l2_sq(t, s, rtol)?;
    let dinv = (1.0 / (1.0 + t) - 1.0 / (1.0 + s)).abs();
    Ok(ThetaNormReport {
        t,
        s,
        p,
        lp,
        lp_constant: lp.map(|v| v * (1.0 + t).powf(0.5 - ip)),
        grad_lp,
        grad_lp_constant: grad_lp * (1.0 + t).powf(1.0 - ip),
        diff_l2_sq: diff,
        diff_l2_bound: ((1.0 + t) / (1.0 + s)).ln().abs() / (4.0 * PI),
        diff_grad_l2_sq: dgrad,
        kappa1: if dinv > 0.0 { Some(dgrad / dinv) } else { None },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pinned_values() {
        let th = theta(0.0, [2.0, 0.0], 1.0);
        let want = (1.0 - (-1.0f64).exp()) / (4.0 * PI);
        assert!((th[1] - want).abs() < 1e-15 && th[0] == 0.0);
        assert!((g_profile(0.0, 1.0).unwrap() - (1.0 - (-0.25f64).exp()) / (2.0 * PI)).abs() < 1e-16);
        assert!((g_profile(3.0, 0.0).unwrap() - 1.0 / (32.0 * PI)).abs() < 1e-16);
        assert!(g_profile(0.0, -1.0).is_err());
    }

    #[test]
    fn g_prime_matches_difference_quotient() {
        for &(t, r) in &[(0.0f64, 1.0f64), (5.0, 0.3), (100.0, 0.001), (0.0, 30.0)] {
            let h = 1e-4 * r.max(1.0);
            let fd = (g_raw(t, r + h) - g_raw(t, r - h)) / (2.0 * h);
            assert!((g_prime(t, r) - fd).abs() < 1e-7 * fd.abs().max(1e-12), "t={t} r={r}");
        }
    }

    #[test]
    fn shear_kernel_branches_agree() {
        let a = shear_kernel(0.0499999);
        let b = 0.0499999 * (-0.0499999f64).exp() + (-0.0499999f64).exp_m1();
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn zeta_matches_quadrature_and_net_force_vanishes() {
        let body = RigidBodyParams::disk(1.0);
        for &t in &[0.0, 1.0, 10.0, 500.0] {
            let a = zeta(t, &body);
            let b = zeta_quadrature(t, &body, 64);
            assert!((a.torque_residual - b.torque_residual).abs() < 1e-12 * (1.0 + t).powi(-2));
            let (f, _) = boundary_stress_quadrature(t, 64);
            assert!(f[0].abs() < 1e-12 && f[1].abs() < 1e-12);
        }
    }

    #[test]
    fn zeta_constant_is_stable_under_refinement() {
        let body = RigidBodyParams::disk(1.0);
        let a = zeta_decay_constant(&body, 1e3, 400, 16).unwrap();
        let b = zeta_decay_constant(&body, 1e3, 400, 64).unwrap();
        assert!(a.constant > 0.0 && a.constant.is_finite());
        assert!((a.constant / b.constant - 1.0).abs() < 0.1);
        assert!(b.max_net_force < 1e-10);
        // the sup is attained well inside the window
        assert!(b.argmax < 1e3);
    }

    #[test]
    fn l2_difference_closed_form() {
        for &(t, s) in &[(0.0f64, 1.0f64), (3.0, 50.0), (10.0, 0.5)] {
            let (a, b) = (1.0 + t, 1.0 + s);
            let exact = ((a + b) * (a + b) / (4.0 * a * b)).ln() / (4.0 * PI);
            let q = theta_diff_l2_sq(t, s, 1e-12).unwrap();
            assert!((q - exact).abs() < 1e-10 * exact, "{q} {exact}");
        }
    }
}
