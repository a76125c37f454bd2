//! Linear dispersion analysis: the two branches `lambda_mu^{+-}(omega)`, the
//! critical frequency `omega_mu` of the periodic tail, the kernel amplitude
//! `upsilon_mu` and the detuning constant `tau_mu`.

use serde::Serialize;

use crate::lattice::l_symbol;
use crate::{Error, ModelParams, Result};

/// Everything the periodic/Jost machinery needs to know about the linear
/// problem at one `(mu, c)` pair.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DispersionData {
    pub mu: f64,
    pub c: f64,
    /// Unique nonnegative root of `c^2 mu w^2 = lambda^+_mu(w)`.
    pub omega_mu: f64,
    /// First-component amplitude of the kernel eigenvector.
    pub upsilon_mu: f64,
    /// Detuning constant `(c^2 mu w^2 - 2 - 2 mu cos^2 w) / (2 mu^2)`.
    pub tau_mu: f64,
    pub lambda_plus_at_omega: f64,
    /// First-component amplitude of the adjoint kernel eigenvector.
    pub z_mu: f64,
}

/// `lambda_mu^{+-}(w) = 1 + mu +- sqrt((1+mu)^2 - 4 mu sin^2 w)`.
pub fn lambda_pm(mu: f64, omega: f64, plus: bool) -> f64 {
    let s = omega.sin();
    let disc = (1.0 + mu) * (1.0 + mu) - 4.0 * mu * s * s;
    let root = disc.max(0.0).sqrt();
    if plus {
        1.0 + mu + root
    } else {
        1.0 + mu - root
    }
}

/// Bracket `[sqrt(2/(c^2 mu)), sqrt((2+2mu)/(c^2 mu))]` that isolates the root.
pub fn omega_bracket(mu: f64, c: f64) -> (f64, f64) {
    let c2mu = c * c * mu;
    ((2.0 / c2mu).sqrt(), ((2.0 + 2.0 * mu) / c2mu).sqrt())
}

fn crit_freq_gap(mu: f64, c: f64, omega: f64) -> f64 {
    c * c * mu * omega * omega - lambda_pm(mu, omega, true)
}

fn brent(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> Result<f64> {
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa * fb > 0.0 {
        return Err(Error::Domain("bracket does not straddle a root".into()));
    }
    if fa.abs() < fb.abs() {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut mflag = true;
    for _ in 0..200 {
        if fb == 0.0 || (b - a).abs() < tol * b.abs().max(1.0) {
            return Ok(b);
        }
        let mut s = if fa != fc && fb != fc {
            a * fb * fc / ((fa - fb) * (fa - fc))
                + b * fa * fc / ((fb - fa) * (fb - fc))
                + c * fa * fb / ((fc - fa) * (fc - fb))
        } else {
            b - fb * (b - a) / (fb - fa)
        };
        let lo = (3.0 * a + b) / 4.0;
        let cond = !((lo.min(b) < s && s < lo.max(b))
            && !(mflag && (s - b).abs() >= (b - c).abs() / 2.0)
            && !(!mflag && (s - b).abs() >= (c - d).abs() / 2.0));
        if cond {
            s = 0.5 * (a + b);
            mflag = true;
        } else {
            mflag = false;
        }
        let fs = f(s);
        d = c;
        c = b;
        fc = fb;
        if fa * fs < 0.0 {
            b = s;
            fb = fs;
        } else {
            a = s;
            fa = fs;
        }
        if fa.abs() < fb.abs() {
            std::mem::swap(&mut a, &mut b);
            std::mem::swap(&mut fa, &mut fb);
        }
    }
    Ok(b)
}

/// Solve the critical-frequency equation by Brent's method on the guaranteed
/// bracket, then polish with Newton to machine precision.
pub fn solve_omega(mu: f64, c: f64) -> Result<DispersionData> {
    let params = ModelParams::new(c, mu)?;
    let (lo, hi) = omega_bracket(mu, c);
    let f = |w: f64| crit_freq_gap(mu, c, w);
    let (flo, fhi) = (f(lo), f(hi));
    if flo > 1e-14 || fhi < -1e-14 {
        return Err(Error::Domain(format!(
            "no sign change on the dispersion bracket at mu = {mu}: f({lo}) = {flo}, f({hi}) = {fhi}"
        )));
    }
    let mut omega = brent(f, lo, hi, 1e-13)?;
    // Newton polish; the derivative is bounded away from zero on the bracket.
    for _ in 0..4 {
        let g = f(omega);
        let h = 1e-7 * omega;
        let dg = (f(omega + h) - f(omega - h)) / (2.0 * h);
        if dg.abs() > 0.0 {
            let step = g / dg;
            omega -= step;
            if step.abs() < 1e-15 * omega {
                break;
            }
        }
    }
    let lambda = lambda_pm(mu, omega, true);
    Ok(DispersionData {
        mu,
        c,
        omega_mu: omega,
        upsilon_mu: upsilon(mu, c, omega),
        tau_mu: tau(mu, omega),
        lambda_plus_at_omega: lambda,
        z_mu: z_amplitude(&params, omega),
    })
}

/// Kernel eigenvector amplitude
/// `upsilon = -2 mu cos w sin w (1 - 2cos^2 w - mu cos^2 w sin^2 w)
///            / (lambda^+ - 2 mu sin^2 w (1 - mu cos^2 w))`.
pub fn upsilon(mu: f64, _c: f64, omega_mu: f64) -> f64 {
    let (s, co) = omega_mu.sin_cos();
    let lambda = lambda_pm(mu, omega_mu, true);
    let numer = -2.0 * mu * co * s * (1.0 - 2.0 * co * co - mu * co * co * s * s);
    let denom = lambda - 2.0 * mu * s * s * (1.0 - mu * co * co);
    numer / denom
}

/// Detuning constant, evaluated in the cancellation-free closed form
/// `tau = sin^2(2w) / (2 [sqrt(1 + 2 mu cos 2w + mu^2) + 1 + mu cos 2w])`,
/// algebraically identical to `(c^2 mu w^2 - 2 - 2 mu cos^2 w)/(2 mu^2)`
/// when `w` solves the critical-frequency equation.
pub fn tau(mu: f64, omega_mu: f64) -> f64 {
    let c2w = (2.0 * omega_mu).cos();
    let s2w = (2.0 * omega_mu).sin();
    let root = (1.0 + 2.0 * mu * c2w + mu * mu).sqrt();
    s2w * s2w / (2.0 * (root + 1.0 + mu * c2w))
}

/// Adjoint-kernel first-component amplitude, from the transpose block at the
/// fundamental mode, normalized so the second component is one.
pub fn z_amplitude(params: &ModelParams, omega_mu: f64) -> f64 {
    let mu = params.mu;
    let lambda = lambda_pm(mu, omega_mu, true);
    let m = l_symbol(mu, omega_mu);
    // real-coordinates block: B11 = -lambda + mu m11, B21 = -mu * m21
    let b11 = mu * m[0].re - lambda;
    let b21 = -mu * m[2].im; // m21 = i mu sin 2w; the cos->sin action flips sign
    -b21 / b11
}

/// Determinant of `-c^2 w^2 I_mu + L~_mu(w)` (real by the skew structure).
pub fn symbol_determinant(params: &ModelParams, omega: f64) -> f64 {
    let m = l_symbol(params.mu, omega);
    let c2w2 = params.c_squared() * omega * omega;
    let a = m[0].re - c2w2;
    let d = m[3].re - c2w2 * params.mu;
    let bc = (m[1] * m[2]).re;
    a * d - bc
}
