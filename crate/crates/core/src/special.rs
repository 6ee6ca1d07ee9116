//! Orthogonal-polynomial helpers: Laguerre polynomials, Hermite functions and
//! Fock-basis Wigner kernels. Quadrature convention is ħ = 1.

use std::f64::consts::PI;

/// `L_n^{(α)}(x)` for `n = 0..=nmax` by the three-term recurrence.
pub fn laguerre_all(nmax: usize, alpha: f64, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(nmax + 1);
    out.push(1.0);
    if nmax == 0 {
        return out;
    }
    out.push(1.0 + alpha - x);
    for k in 1..nmax {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + alpha - x) * out[k] - (kf + alpha) * out[k - 1]) / (kf + 1.0);
        out.push(next);
    }
    out
}

/// Ordinary Laguerre polynomial `L_n(x)`.
pub fn laguerre(n: usize, x: f64) -> f64 {
    laguerre_all(n, 0.0, x)[n]
}

/// Harmonic-oscillator eigenfunctions `ψ_n(x)` for `n = 0..=nmax`, normalized
/// so that `|ψ_0|²` has variance 1/2.
pub fn hermite_functions(nmax: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(nmax + 1);
    out.push(PI.powf(-0.25) * (-0.5 * x * x).exp());
    if nmax == 0 {
        return out;
    }
    out.push(std::f64::consts::SQRT_2 * x * out[0]);
    for n in 1..nmax {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * x * out[n] - (nf / (nf + 1.0)).sqrt() * out[n - 1];
        out.push(next);
    }
    out
}

/// Wigner function of the number state `|n⟩`:
/// `(−1)^n/π · e^{−x²−p²} · L_n(2(x²+p²))`.
pub fn fock_wigner(n: usize, x: f64, p: f64) -> f64 {
    let q = x * x + p * p;
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    sign / PI * (-q).exp() * laguerre(n, 2.0 * q)
}

/// Table of `ln n!` for `n = 0..=nmax`.
pub fn ln_factorials(nmax: usize) -> Vec<f64> {
    let mut out = vec![0.0; nmax + 1];
    for n in 1..=nmax {
        out[n] = out[n - 1] + (n as f64).ln();
    }
    out
}

/// Evaluates `W(x, p) = Σ ρ_mn W_{|m⟩⟨n|}(x, p)` for a Hermitian `dim × dim`
/// matrix given as row-major `(re, im)` accessors.
///
/// For `m = n + k ≥ n` the kernel is
/// `(−1)^n/π · √(n!/m!) · (√2 (x − ip))^k · e^{−x²−p²} · L_n^{(k)}(2(x²+p²))`.
pub fn wigner_from_elements<F>(dim: usize, elem: F, lnfact: &[f64], x: f64, p: f64) -> f64
where
    F: Fn(usize, usize) -> (f64, f64),
{
    let q = x * x + p * p;
    let rho = q.sqrt();
    let phi = p.atan2(x);
    let gauss = -q;
    let ln_r = if rho > 0.0 {
        (std::f64::consts::SQRT_2 * rho).ln()
    } else {
        f64::NEG_INFINITY
    };
    let mut total = 0.0;
    for k in 0..dim {
        if k > 0 && rho == 0.0 {
            break;
        }
        let lag = laguerre_all(dim - 1 - k, k as f64, 2.0 * q);
        // (x − ip)^k = ρ^k e^{−ikφ}
        let (s, c) = (-(k as f64) * phi).sin_cos();
        let mut acc = 0.0;
        for (n, l) in lag.iter().enumerate() {
            let m = n + k;
            let log_mag = if k == 0 {
                gauss
            } else {
                0.5 * (lnfact[n] - lnfact[m]) + k as f64 * ln_r + gauss
            };
            let kernel = log_mag.exp() * l * if n % 2 == 0 { 1.0 } else { -1.0 };
            let (re, im) = elem(m, n);
            // Re(ρ_mn · e^{−ikφ})
            acc += kernel * (re * c - im * s);
        }
        total += if k == 0 { acc } else { 2.0 * acc };
    }
    total / PI
}
