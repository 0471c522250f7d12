//! Oracles shared by the integration tests, written independently of the
//! library implementations.
#![allow(dead_code)]

use std::f64::consts::PI;

// K_ν(x) = ∫₀^∞ e^{−x cosh t} cosh(νt) dt by composite 10-point Gauss-Legendre
// on panels of width 0.25, scaled by e^x.
fn gl10() -> ([f64; 10], [f64; 10]) {
    let n = 10;
    let mut x = [0.0; 10];
    let mut w = [0.0; 10];
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                let dp = {
                    let (mut p0, mut p1) = (1.0, z);
                    for k in 2..=n {
                        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                        p0 = p1;
                        p1 = p2;
                    }
                    n as f64 * (z * p1 - p0) / (z * z - 1.0)
                };
                x[i] = z;
                w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
                break;
            }
        }
    }
    (x, w)
}

pub fn k_oracle(nu: f64, x: f64, deriv: bool) -> f64 {
    let (gx, gw) = gl10();
    let width = 0.25;
    let mut total = 0.0;
    let mut a = 0.0;
    loop {
        let mut panel = 0.0;
        for (z, w) in gx.iter().zip(&gw) {
            let t = a + 0.5 * width * (z + 1.0);
            let f = (-x * (t.cosh() - 1.0)).exp() * (nu * t).cosh();
            panel += 0.5 * width * w * if deriv { -t.cosh() * f } else { f };
        }
        total += panel;
        a += width;
        if x * (a.cosh() - 1.0) > 740.0 {
            break;
        }
    }
    total * (-x).exp()
}

// ln Γ by upward shift to x ≥ 40 and a seven-term Stirling series.
pub fn ln_gamma_oracle(x: f64) -> f64 {
    let mut shift = 0.0;
    let mut z = x;
    while z < 40.0 {
        shift += z.ln();
        z += 1.0;
    }
    let b = [1.0 / 12.0, -1.0 / 360.0, 1.0 / 1260.0, -1.0 / 1680.0, 1.0 / 1188.0, -691.0 / 360360.0, 1.0 / 156.0];
    let mut s = 0.0;
    let mut p = z;
    for c in b {
        s += c / p;
        p *= z * z;
    }
    (z - 0.5) * z.ln() - z + 0.5 * (2.0 * PI).ln() + s - shift
}

pub fn a_oracle(q: f64) -> f64 {
    let theta = (q - 1.0) / (2.0 * q);
    let y = (q + 1.0) / (q - 1.0);
    (0.5 * theta * ((q + 1.0) * (q - 1.0) / (4.0 * PI)).ln() + ((y - 1.0) / y).ln() / (2.0 * q)
        + 0.5 * theta * (ln_gamma_oracle(y) - ln_gamma_oracle(y - 1.0)))
    .exp()
}

// ‖Θ(t) − Θ(s)‖² = (1/4π) log((a+b)²/(4ab)), a = 1+t, b = 1+s
pub fn theta_diff_exact(t: f64, s: f64) -> f64 {
    let (a, b) = (1.0 + t, 1.0 + s);
    ((a + b) * (a + b) / (4.0 * a * b)).ln() / (4.0 * PI)
}
