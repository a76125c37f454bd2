//! Advance-delay operators of the dimer lattice and the traveling-wave
//! residual map.
//!
//! Everything here is built from the unit shifts `S^{±1}` through the averaged
//! and differenced operators `A = (S + S^{-1})/2`, `delta = (S - S^{-1})/2`.
//! Operators are represented as finite shift polynomials; on shift-exact grids
//! their application is exact index arithmetic, and their Fourier symbols are
//! evaluated from the same coefficients, so the space side and frequency side
//! cannot drift apart.

use rustfft::num_complex::Complex64;

use crate::spectral::{fft_forward, fft_inverse_real, GridFunction, Parity, TwoField};
use crate::{Error, ModelParams, Result};

/// Finite Laurent polynomial in the unit shift `S`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftPoly {
    min_shift: isize,
    coeffs: Vec<f64>,
}

impl ShiftPoly {
    pub fn zero() -> Self {
        Self { min_shift: 0, coeffs: vec![0.0] }
    }

    pub fn constant(c: f64) -> Self {
        Self { min_shift: 0, coeffs: vec![c] }
    }

    pub fn shift(d: isize) -> Self {
        Self { min_shift: d, coeffs: vec![1.0] }
    }

    /// `A = (S + S^{-1})/2`
    pub fn avg() -> Self {
        Self { min_shift: -1, coeffs: vec![0.5, 0.0, 0.5] }
    }

    /// `delta = (S - S^{-1})/2`
    pub fn diff() -> Self {
        Self { min_shift: -1, coeffs: vec![-0.5, 0.0, 0.5] }
    }

    pub fn add(&self, other: &Self) -> Self {
        let lo = self.min_shift.min(other.min_shift);
        let hi = (self.min_shift + self.coeffs.len() as isize)
            .max(other.min_shift + other.coeffs.len() as isize);
        let mut coeffs = vec![0.0; (hi - lo) as usize];
        for (i, c) in self.coeffs.iter().enumerate() {
            coeffs[(self.min_shift - lo) as usize + i] += c;
        }
        for (i, c) in other.coeffs.iter().enumerate() {
            coeffs[(other.min_shift - lo) as usize + i] += c;
        }
        Self { min_shift: lo, coeffs }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, a: f64) -> Self {
        Self { min_shift: self.min_shift, coeffs: self.coeffs.iter().map(|c| a * c).collect() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut coeffs = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Self { min_shift: self.min_shift + other.min_shift, coeffs }
    }

    /// `L^2` adjoint: `(S^d)^* = S^{-d}`, coefficients reversed.
    pub fn adjoint(&self) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.reverse();
        Self {
            min_shift: -(self.min_shift + self.coeffs.len() as isize - 1),
            coeffs,
        }
    }

    /// Fourier symbol `sum_d c_d e^{ikd}`.
    pub fn symbol(&self, k: f64) -> Complex64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| c * Complex64::from_polar(1.0, k * (self.min_shift + i as isize) as f64))
            .sum()
    }

    /// Apply with exact periodic index shifts; requires a shift-exact grid.
    pub fn apply(&self, f: &GridFunction) -> GridFunction {
        let steps_per_unit = match f.grid.index_shift(1.0) {
            Some(s) => s,
            None => {
                // fall back to transform phases on non-shift-exact grids
                let mut out = GridFunction::zeros(f.grid, Parity::None);
                for (i, &c) in self.coeffs.iter().enumerate() {
                    if c != 0.0 {
                        let d = (self.min_shift + i as isize) as f64;
                        out = out.add(&f.shift_unchecked(d).scale(c));
                    }
                }
                return out;
            }
        };
        let n = f.grid.len() as isize;
        let mut values = vec![0.0; f.grid.len()];
        for (i, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let d = (self.min_shift + i as isize) * steps_per_unit;
            for j in 0..n {
                let src = ((j + d) % n + n) % n;
                values[j as usize] += c * f.values[src as usize];
            }
        }
        let parity = self.output_parity(f.parity);
        GridFunction { grid: f.grid, values, parity, decay_rate: f.decay_rate }
    }

    /// Pointwise application given an evaluator for the operand.
    pub fn apply_at(&self, x: f64, eval: &dyn Fn(f64) -> f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0.0)
            .map(|(i, &c)| c * eval(x + (self.min_shift + i as isize) as f64))
            .sum()
    }

    /// Parity of the output given the operand parity (symmetric coefficient
    /// patterns preserve parity, antisymmetric flip it, otherwise unknown).
    fn output_parity(&self, input: Parity) -> Parity {
        if input == Parity::None {
            return Parity::None;
        }
        let sym = self.is_symmetric();
        let anti = self.is_antisymmetric();
        match (sym, anti, input) {
            (true, _, p) => p,
            (_, true, Parity::Even) => Parity::Odd,
            (_, true, Parity::Odd) => Parity::Even,
            _ => Parity::None,
        }
    }

    fn is_symmetric(&self) -> bool {
        self.matches_reverse(1.0)
    }

    fn is_antisymmetric(&self) -> bool {
        self.matches_reverse(-1.0)
    }

    fn matches_reverse(&self, sign: f64) -> bool {
        let adj = self.adjoint();
        let diff = self.sub(&adj.scale(sign));
        diff.coeffs.iter().all(|c| c.abs() < 1e-15)
    }

    /// Largest shift reach `max |d|` with nonzero coefficient.
    pub fn reach(&self) -> isize {
        let mut r = 0;
        for (i, &c) in self.coeffs.iter().enumerate() {
            if c != 0.0 {
                r = r.max((self.min_shift + i as isize).abs());
            }
        }
        r
    }
}

/// `A f = (f(.+1) + f(.-1))/2`
pub fn apply_a(f: &GridFunction) -> GridFunction {
    ShiftPoly::avg().apply(f)
}

/// `delta f = (f(.+1) - f(.-1))/2`
pub fn apply_delta(f: &GridFunction) -> GridFunction {
    ShiftPoly::diff().apply(f)
}

/// Band-limited shift `f(. + d)`; re-export of the spectral implementation.
pub fn shift(f: &GridFunction, d: f64) -> Result<GridFunction> {
    f.shift(d)
}

/// 2x2 matrix of shift polynomials acting on (even, odd) pairs.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub e11: ShiftPoly,
    pub e12: ShiftPoly,
    pub e21: ShiftPoly,
    pub e22: ShiftPoly,
}

impl OperatorMatrix {
    pub fn apply(&self, h: &TwoField) -> TwoField {
        let mut f1 = self.e11.apply(&h.f1).add(&self.e12.apply(&h.f2));
        let mut f2 = self.e21.apply(&h.f1).add(&self.e22.apply(&h.f2));
        f1.parity = Parity::Even;
        f2.parity = Parity::Odd;
        f1.symmetrize();
        f2.symmetrize();
        TwoField { f1, f2 }
    }

    pub fn adjoint(&self) -> OperatorMatrix {
        OperatorMatrix {
            e11: self.e11.adjoint(),
            e12: self.e21.adjoint(),
            e21: self.e12.adjoint(),
            e22: self.e22.adjoint(),
        }
    }

    /// Complex symbol matrix at wavenumber `k`, row-major.
    pub fn symbol(&self, k: f64) -> [Complex64; 4] {
        [self.e11.symbol(k), self.e12.symbol(k), self.e21.symbol(k), self.e22.symbol(k)]
    }
}

/// `T_mu = [[1, -mu A delta], [0, 1]]`, the near-identity change of variables.
pub fn t_matrix(mu: f64) -> OperatorMatrix {
    let a_delta = ShiftPoly::avg().mul(&ShiftPoly::diff());
    OperatorMatrix {
        e11: ShiftPoly::constant(1.0),
        e12: a_delta.scale(-mu),
        e21: ShiftPoly::zero(),
        e22: ShiftPoly::constant(1.0),
    }
}

/// `T_mu^{-1} = [[1, +mu A delta], [0, 1]]`.
pub fn t_matrix_inv(mu: f64) -> OperatorMatrix {
    let a_delta = ShiftPoly::avg().mul(&ShiftPoly::diff());
    OperatorMatrix {
        e11: ShiftPoly::constant(1.0),
        e12: a_delta.scale(mu),
        e21: ShiftPoly::zero(),
        e22: ShiftPoly::constant(1.0),
    }
}

/// The almost-diagonal linear operator
/// `L_mu = [[-2 d^2 (1 - mu A^2), -2 mu A d (1 - 2A^2 + mu A^2 d^2)],
///          [ 2 mu A d,            2 (1 + mu A^2 - mu^2 A^2 d^2)]]`.
pub fn l_matrix(mu: f64) -> OperatorMatrix {
    let a = ShiftPoly::avg();
    let d = ShiftPoly::diff();
    let a2 = a.mul(&a);
    let d2 = d.mul(&d);
    let ad = a.mul(&d);
    let a2d2 = a2.mul(&d2);
    let one = ShiftPoly::constant(1.0);

    let e11 = d2.mul(&one.sub(&a2.scale(mu))).scale(-2.0);
    let e12 = ad
        .mul(&one.sub(&a2.scale(2.0)).add(&a2d2.scale(mu)))
        .scale(-2.0 * mu);
    let e21 = ad.scale(2.0 * mu);
    let e22 = one.add(&a2.scale(mu)).sub(&a2d2.scale(mu * mu)).scale(2.0);
    OperatorMatrix { e11, e12, e21, e22 }
}

/// The symbol matrix of `L_mu` at frequency `w` (row-major, complex).
pub fn l_symbol(mu: f64, w: f64) -> [Complex64; 4] {
    let (s, c) = w.sin_cos();
    let s2 = (2.0 * w).sin();
    let m11 = 2.0 * s * s * (1.0 - mu * c * c);
    let m12 = -mu * s2 * (1.0 - 2.0 * c * c - 0.25 * mu * s2 * s2);
    let m21 = mu * s2;
    let m22 = 2.0 * (1.0 + mu * c * c + 0.25 * mu * mu * s2 * s2);
    [
        Complex64::new(m11, 0.0),
        Complex64::new(0.0, m12),
        Complex64::new(0.0, m21),
        Complex64::new(m22, 0.0),
    ]
}

/// Apply `L_mu` by transform multiplication with its symbol (the default,
/// spectrally exact route; [`l_matrix`] is the space-side cross-check).
pub fn apply_l(params: &ModelParams, h: &TwoField) -> TwoField {
    let grid = h.grid();
    let mut s1 = fft_forward(&h.f1.values);
    let mut s2 = fft_forward(&h.f2.values);
    for j in 0..grid.len() {
        let k = grid.wavenumber(j);
        let m = l_symbol(params.mu, k);
        let a = s1[j];
        let b = s2[j];
        s1[j] = m[0] * a + m[1] * b;
        s2[j] = m[2] * a + m[3] * b;
    }
    let mut f1 = GridFunction {
        grid,
        values: fft_inverse_real(s1),
        parity: Parity::Even,
        decay_rate: h.f1.decay_rate,
    };
    let mut f2 = GridFunction {
        grid,
        values: fft_inverse_real(s2),
        parity: Parity::Odd,
        decay_rate: h.f2.decay_rate,
    };
    f1.symmetrize();
    f2.symmetrize();
    TwoField { f1, f2 }
}

/// `T_mu theta` (or its inverse when `inverse` is set).
pub fn apply_t(params: &ModelParams, theta: &TwoField, inverse: bool) -> TwoField {
    let m = if inverse { t_matrix_inv(params.mu) } else { t_matrix(params.mu) };
    m.apply(theta)
}

/// `Q_0(g, g') = (g1 g1' + g2 g2', g1 g2' + g2 g1')`.
pub fn q0(g: &TwoField, gp: &TwoField) -> TwoField {
    let mut f1 = g.f1.mul(&gp.f1).add(&g.f2.mul(&gp.f2));
    let mut f2 = g.f1.mul(&gp.f2).add(&g.f2.mul(&gp.f1));
    f1.parity = Parity::Even;
    f2.parity = Parity::Odd;
    f1.symmetrize();
    f2.symmetrize();
    TwoField { f1, f2 }
}

/// `Q_mu(g, g') = T_mu^{-1} Q_0(T_mu g, T_mu g')`; bilinear and symmetric.
pub fn quadratic_q(params: &ModelParams, g: &TwoField, gp: &TwoField) -> TwoField {
    let t = t_matrix(params.mu);
    let tinv = t_matrix_inv(params.mu);
    tinv.apply(&q0(&t.apply(g), &t.apply(gp)))
}

/// The traveling-wave residual `G(h, mu) = c^2 I_mu h'' + L_mu h + L_mu Q_mu(h, h)`.
///
/// Maps (even, odd) pairs to (mean-zero even, odd) pairs.
pub fn residual_g(params: &ModelParams, h: &TwoField) -> TwoField {
    let q = quadratic_q(params, h, h);
    let lin_plus_quad = apply_l(params, &h.add(&q));
    let c2 = params.c_squared();
    let d1 = h.f1.derivative(2).scale(c2);
    let d2 = h.f2.derivative(2).scale(c2 * params.mu);
    let mut f1 = d1.add(&lin_plus_quad.f1);
    let mut f2 = d2.add(&lin_plus_quad.f2);
    f1.parity = Parity::Even;
    f2.parity = Parity::Odd;
    f1.symmetrize();
    f2.symmetrize();
    TwoField { f1, f2 }
}

/// Off-diagonal part of `L_mu` applied to a field: `mu Theta_mu eta`.
pub fn off_diagonal_theta(params: &ModelParams, eta: &TwoField) -> TwoField {
    let l = l_matrix(params.mu);
    let mut f1 = l.e12.apply(&eta.f2);
    let mut f2 = l.e21.apply(&eta.f1);
    f1.parity = Parity::Even;
    f2.parity = Parity::Odd;
    f1.symmetrize();
    f2.symmetrize();
    TwoField { f1, f2 }
}

/// Coefficient operators of the linearization around a localized core.
///
/// `Sigma_mu f` is the diagonal part of `2 L_mu Q_mu(sigma, f)` and
/// `mu Omega_mu f` the off-diagonal remainder; they inherit the core's
/// localization and therefore decay faster than `f` does.
pub struct CoefficientOps {
    pub params: ModelParams,
    pub sigma: TwoField,
}

impl CoefficientOps {
    pub fn new(params: ModelParams, sigma: TwoField) -> Result<Self> {
        if sigma.f1.parity != Parity::Even || sigma.f2.parity != Parity::Odd {
            return Err(Error::InvalidInput("core must be an (even, odd) pair".into()));
        }
        Ok(Self { params, sigma })
    }

    fn paired(&self, f: &GridFunction, component: usize) -> TwoField {
        let grid = f.grid;
        let zero_e = GridFunction::zeros(grid, Parity::Even);
        let zero_o = GridFunction::zeros(grid, Parity::Odd);
        if component == 1 {
            TwoField { f1: f.clone(), f2: zero_o }
        } else {
            TwoField { f1: zero_e, f2: f.clone() }
        }
    }

    fn two_l_q(&self, f: &TwoField) -> TwoField {
        apply_l(&self.params, &quadratic_q(&self.params, &self.sigma, f)).scale(2.0)
    }

    /// `Sigma_{mu,1} f = 2 L Q(sigma, f e1) . e1` (even -> even).
    pub fn sigma1(&self, f: &GridFunction) -> GridFunction {
        self.two_l_q(&self.paired(f, 1)).f1
    }

    /// `Sigma_{mu,2} f = 2 L Q(sigma, f e2) . e2` (odd -> odd).
    pub fn sigma2(&self, f: &GridFunction) -> GridFunction {
        self.two_l_q(&self.paired(f, 2)).f2
    }

    /// `mu Omega_{mu,1} f = 2 L Q(sigma, f e2) . e1` (odd -> even).
    pub fn omega1_scaled(&self, f: &GridFunction) -> GridFunction {
        self.two_l_q(&self.paired(f, 2)).f1
    }

    /// `mu Omega_{mu,2} f = 2 L Q(sigma, f e1) . e2` (even -> odd).
    pub fn omega2_scaled(&self, f: &GridFunction) -> GridFunction {
        self.two_l_q(&self.paired(f, 1)).f2
    }

    /// Diagonal/off-diagonal split of `2 L_mu Q_mu(sigma, f)`; the pieces sum
    /// back to the whole by bilinearity.
    pub fn sigma_omega(&self, f: &TwoField) -> (TwoField, TwoField) {
        let b1 = self.two_l_q(&self.paired(&f.f1, 1));
        let b2 = self.two_l_q(&self.paired(&f.f2, 2));
        let sigma = TwoField { f1: b1.f1.clone(), f2: b2.f2.clone() };
        let omega_scaled = TwoField { f1: b2.f1, f2: b1.f2 };
        (sigma, omega_scaled)
    }

    /// `L^2` adjoint of `Sigma_{mu,2}`:
    /// `Sigma*_{mu,2} u = 2 [T* Q_0(T sigma, (T*)^{-1} L* (u e2))] . e2`.
    pub fn sigma2_star(&self, u: &GridFunction) -> GridFunction {
        let mu = self.params.mu;
        let t = t_matrix(mu);
        let l_adj = l_matrix(mu).adjoint();
        let t_adj = t_matrix(mu).adjoint();
        let t_adj_inv = t_matrix_inv(mu).adjoint();

        let u_pair = self.paired(u, 2);
        let w = t_adj_inv.apply(&l_adj.apply(&u_pair));
        let v = t.apply(&self.sigma);
        let q = q0(&v, &w);
        let mut out = t_adj.apply(&q).f2.scale(2.0);
        out.parity = Parity::Odd;
        out.symmetrize();
        out
    }
}

/// Accelerations of the heavy/light stretch variables per the even-lattice
/// system; shifts act on even sites so `S` here moves two lattice units.
///
/// Returns `(rho1_dd, rho2_dd)` on the interior (boundary entries are filled
/// with zero-padded shifts and should be ignored by callers).
pub fn rho_form_accelerations(mu: f64, rho1: &[f64], rho2: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = rho1.len();
    let get = |v: &[f64], i: isize| -> f64 {
        if i < 0 || i >= n as isize {
            0.0
        } else {
            v[i as usize]
        }
    };
    let mut out1 = vec![0.0; n];
    let mut out2 = vec![0.0; n];
    for i in 0..n as isize {
        // operators on the even lattice: S f(j) = f(j+2) is index i+1
        let d2 = |v: &[f64]| (get(v, i + 1) - 2.0 * get(v, i) + get(v, i - 1)) / 4.0;
        let ad = |v: &[f64]| (get(v, i + 1) - get(v, i - 1)) / 4.0;
        let a2 = |v: &[f64]| (get(v, i + 1) + 2.0 * get(v, i) + get(v, i - 1)) / 4.0;

        let sq1: Vec<f64> = rho1.iter().zip(rho2).map(|(a, b)| a * a + b * b).collect();
        let cross: Vec<f64> = rho1.iter().zip(rho2).map(|(a, b)| a * b).collect();

        out1[i as usize] =
            2.0 * d2(rho1) + 2.0 * ad(rho2) + 2.0 * d2(&sq1) + 4.0 * ad(&cross);
        let light = -2.0 * mu * ad(rho1)
            - 2.0 * (get(rho2, i) + mu * a2(rho2))
            - 2.0 * mu * ad(&sq1)
            - 4.0 * (get(&cross, i) + mu * a2(&cross));
        out2[i as usize] = light / mu;
    }
    (out1, out2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn grid() -> Grid {
        Grid::new(32.0, 512).unwrap()
    }

    fn random_band_limited(grid: Grid, parity: Parity, rng: &mut StdRng) -> GridFunction {
        let modes = 12;
        let l = grid.half_length();
        let coeffs: Vec<(f64, f64)> =
            (1..=modes).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let mut f = GridFunction::from_fn(grid, parity, |x| {
            let mut acc = 0.0;
            for (m, (a, b)) in coeffs.iter().enumerate() {
                let k = (m + 1) as f64 * std::f64::consts::PI / l;
                acc += match parity {
                    Parity::Even => a * (k * x).cos(),
                    Parity::Odd => a * (k * x).sin(),
                    Parity::None => a * (k * x).cos() + b * (k * x).sin(),
                };
            }
            acc
        });
        f.symmetrize();
        f
    }

    #[test]
    fn avg_on_pure_cosine_mode() {
        let g = grid();
        let k = 6.0 * std::f64::consts::PI / g.half_length();
        let f = GridFunction::from_fn(g, Parity::Even, |x| (k * x).cos());
        let af = apply_a(&f);
        let expect = f.scale(k.cos());
        assert!(af.sub(&expect).sup_norm() < 1e-12);
    }

    #[test]
    fn diff_annihilates_constants_and_is_mean_zero() {
        let g = grid();
        let c = GridFunction::from_fn(g, Parity::Even, |_| 2.5);
        assert!(apply_delta(&c).sup_norm() < 1e-14);

        let f = GridFunction::from_fn(g, Parity::None, |x| (-0.3 * x * x).exp() * (x + 0.2));
        let df = apply_delta(&f);
        assert!(df.integral().abs() < 1e-12);
    }

    #[test]
    fn one_plus_delta_squared_equals_a_squared() {
        let mut rng = StdRng::seed_from_u64(7);
        let g = grid();
        for _ in 0..8 {
            let f = random_band_limited(g, Parity::None, &mut rng);
            let d = ShiftPoly::diff();
            let a = ShiftPoly::avg();
            let lhs = f.add(&d.mul(&d).apply(&f));
            let rhs = a.mul(&a).apply(&f);
            assert!(lhs.sub(&rhs).sup_norm() < 1e-12 * f.sup_norm().max(1.0));
        }
    }

    #[test]
    fn l_at_mu_zero_is_diagonal() {
        let g = grid();
        let mut rng = StdRng::seed_from_u64(11);
        let h = TwoField::new(
            random_band_limited(g, Parity::Even, &mut rng),
            random_band_limited(g, Parity::Odd, &mut rng),
        )
        .unwrap();
        let params = ModelParams::massless(1.45).unwrap();
        let out = apply_l(&params, &h);
        let d = ShiftPoly::diff();
        let expect1 = d.mul(&d).apply(&h.f1).scale(-2.0);
        let expect2 = h.f2.scale(2.0);
        assert!(out.f1.sub(&expect1).sup_norm() < 1e-12);
        assert!(out.f2.sub(&expect2).sup_norm() < 1e-12);
    }

    #[test]
    fn l_minus_l0_is_order_mu() {
        let g = grid();
        let mut rng = StdRng::seed_from_u64(13);
        let h = TwoField::new(
            random_band_limited(g, Parity::Even, &mut rng),
            random_band_limited(g, Parity::Odd, &mut rng),
        )
        .unwrap();
        let p0 = ModelParams::massless(1.45).unwrap();
        let l0h = apply_l(&p0, &h);
        let scale = h.sup_norm();
        let mut ratios = Vec::new();
        for &mu in &[1e-3, 1e-2, 1e-1] {
            let p = ModelParams::new(1.45, mu).unwrap();
            let diff = apply_l(&p, &h).sub(&l0h);
            ratios.push(diff.sup_norm() / (mu * scale));
        }
        let k = ratios.iter().fold(0.0f64, |m, r| m.max(*r));
        assert!(k.is_finite() && k > 0.0);
        for r in &ratios {
            assert!(*r <= 1.5 * k && *r >= k / 1.5, "ratios not O(mu)-flat: {ratios:?}");
        }
    }

    #[test]
    fn l_space_side_matches_symbol_side() {
        let g = grid();
        let mut rng = StdRng::seed_from_u64(17);
        let h = TwoField::new(
            random_band_limited(g, Parity::Even, &mut rng),
            random_band_limited(g, Parity::Odd, &mut rng),
        )
        .unwrap();
        let params = ModelParams::new(1.45, 0.07).unwrap();
        let sym = apply_l(&params, &h);
        let space = l_matrix(params.mu).apply(&h);
        assert!(sym.f1.sub(&space.f1).sup_norm() < 1e-11);
        assert!(sym.f2.sub(&space.f2).sup_norm() < 1e-11);
    }

    #[test]
    fn l_on_pure_mode_matches_hand_symbol() {
        // the symbol evaluated from shift polynomials must agree with the
        // closed-form matrix, entry by entry, over a frequency sweep
        let mu = 0.035;
        let l = l_matrix(mu);
        for i in 0..40 {
            let w = 0.1 + 0.35 * i as f64;
            let from_poly = l.symbol(w);
            let closed = l_symbol(mu, w);
            for (a, b) in from_poly.iter().zip(closed.iter()) {
                assert!((a - b).norm() < 1e-12, "symbol mismatch at w = {w}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn t_round_trip_and_near_identity() {
        let g = grid();
        let mut rng = StdRng::seed_from_u64(19);
        let h = TwoField::new(
            random_band_limited(g, Parity::Even, &mut rng),
            random_band_limited(g, Parity::Odd, &mut rng),
        )
        .unwrap();
        let params = ModelParams::new(1.45, 0.05).unwrap();
        let round = apply_t(&params, &apply_t(&params, &h, false), true);
        assert!(round.f1.sub(&h.f1).sup_norm() < 1e-12);
        assert!(round.f2.sub(&h.f2).sup_norm() < 1e-12);

        let p0 = ModelParams::massless(1.45).unwrap();
        let id = apply_t(&p0, &h, false);
        assert!(id.f1.sub(&h.f1).sup_norm() < 1e-14);

        for &mu in &[1e-3, 1e-2, 1e-1] {
            let p = ModelParams::new(1.45, mu).unwrap();
            let d = apply_t(&p, &h, false).sub(&h);
            assert!(d.sup_norm() < 2.0 * mu * h.sup_norm());
        }
    }

    #[test]
    fn q_bilinear_symmetric() {
        let g = grid();
        let mut rng = StdRng::seed_from_u64(23);
        let params = ModelParams::new(1.45, 0.04).unwrap();
        let a = TwoField::new(
            random_band_limited(g, Parity::Even, &mut rng),
            random_band_limited(g, Parity::Odd, &mut rng),
        )
        .unwrap();
        let b = TwoField::new(
            random_band_limited(g, Parity::Even, &mut rng),
            random_band_limited(g, Parity::Odd, &mut rng),
        )
        .unwrap();
        let zero = TwoField::zeros(g);
        assert!(quadratic_q(&params, &a, &zero).sup_norm() < 1e-14);
        let qab = quadratic_q(&params, &a, &b);
        let qba = quadratic_q(&params, &b, &a);
        assert!(qab.sub(&qba).sup_norm() < 1e-13 * (1.0 + a.sup_norm() * b.sup_norm()));

        // mu = 0 with g = (f, 0): Q_0 = (f^2, 0)
        let p0 = ModelParams::massless(1.45).unwrap();
        let f = random_band_limited(g, Parity::Even, &mut rng);
        let pair = TwoField { f1: f.clone(), f2: GridFunction::zeros(g, Parity::Odd) };
        let q = quadratic_q(&p0, &pair, &pair);
        assert!(q.f1.sub(&f.mul(&f)).sup_norm() < 1e-12);
        assert!(q.f2.sup_norm() < 1e-13);
    }

    #[test]
    fn residual_of_zero_is_zero() {
        let g = grid();
        let params = ModelParams::new(1.45, 0.02).unwrap();
        let zero = TwoField::zeros(g);
        assert_eq!(residual_g(&params, &zero).sup_norm(), 0.0);
    }

    #[test]
    fn residual_parity_and_mean_zero_contract() {
        let g = grid();
        let mut rng = StdRng::seed_from_u64(29);
        let params = ModelParams::new(1.45, 0.03).unwrap();
        for _ in 0..25 {
            let h = TwoField::new(
                random_band_limited(g, Parity::Even, &mut rng).scale(0.1),
                random_band_limited(g, Parity::Odd, &mut rng).scale(0.1),
            )
            .unwrap();
            let r = residual_g(&params, &h);
            let scale = h.sup_norm().max(1e-12);
            assert!(r.f1.parity_defect() < 1e-11);
            assert!(r.f2.parity_defect() < 1e-11);
            assert!(r.f1.integral().abs() / (2.0 * g.half_length()) < 1e-11 * scale);
        }
    }

    #[test]
    fn sigma_omega_decomposition_sums_back() {
        let g = grid();
        let mut rng = StdRng::seed_from_u64(31);
        let params = ModelParams::new(1.45, 0.04).unwrap();
        let sigma = TwoField::new(
            GridFunction::from_fn(g, Parity::Even, |x| 0.1 / (0.4 * x).cosh().powi(2)),
            GridFunction::from_fn(g, Parity::Odd, |x| 0.02 * x / (0.4 * x).cosh().powi(2)),
        )
        .unwrap();
        let ops = CoefficientOps::new(params, sigma.clone()).unwrap();

        let zero = TwoField::zeros(g);
        let (sz, oz) = ops.sigma_omega(&zero);
        assert_eq!(sz.sup_norm(), 0.0);
        assert_eq!(oz.sup_norm(), 0.0);

        let f = TwoField::new(
            random_band_limited(g, Parity::Even, &mut rng),
            random_band_limited(g, Parity::Odd, &mut rng),
        )
        .unwrap();
        let (s, o) = ops.sigma_omega(&f);
        let whole = apply_l(&params, &quadratic_q(&params, &sigma, &f)).scale(2.0);
        let recomposed = s.add(&o);
        assert!(recomposed.f1.sub(&whole.f1).sup_norm() < 1e-12);
        assert!(recomposed.f2.sub(&whole.f2).sup_norm() < 1e-12);
    }

    #[test]
    fn sigma2_at_mu_zero_is_multiplication_by_4_sigma() {
        let g = grid();
        let mut rng = StdRng::seed_from_u64(37);
        let sigma_c = GridFunction::from_fn(g, Parity::Even, |x| 0.08 / (0.2 * x).cosh().powi(2));
        let sigma = TwoField::new(sigma_c.clone(), GridFunction::zeros(g, Parity::Odd)).unwrap();
        let params = ModelParams::massless(1.45).unwrap();
        let ops = CoefficientOps::new(params, sigma).unwrap();
        let f = random_band_limited(g, Parity::Odd, &mut rng);
        let out = ops.sigma2(&f);
        let expect = sigma_c.mul(&f).scale(4.0);
        assert!(out.sub(&expect).sup_norm() < 1e-12);
        // the adjoint coincides for a multiplication operator
        let star = ops.sigma2_star(&f);
        assert!(star.sub(&expect).sup_norm() < 1e-12);
    }

    #[test]
    fn sigma2_adjoint_identity_on_random_pairs() {
        let g = grid();
        let mut rng = StdRng::seed_from_u64(41);
        let params = ModelParams::new(1.45, 0.06).unwrap();
        let sigma = TwoField::new(
            GridFunction::from_fn(g, Parity::Even, |x| 0.1 / (0.3 * x).cosh().powi(2)),
            GridFunction::from_fn(g, Parity::Odd, |x| 0.01 * x / (0.3 * x).cosh().powi(2)),
        )
        .unwrap();
        let ops = CoefficientOps::new(params, sigma).unwrap();
        for _ in 0..5 {
            let f = random_band_limited(g, Parity::Odd, &mut rng);
            let u = random_band_limited(g, Parity::Odd, &mut rng);
            let lhs = ops.sigma2(&f).mul(&u).integral();
            let rhs = f.mul(&ops.sigma2_star(&u)).integral();
            assert!(
                (lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0),
                "adjoint defect: {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn sigma_localizes_nondecaying_input() {
        let g = grid();
        let params = ModelParams::new(1.45, 0.02).unwrap();
        let sigma = TwoField::new(
            GridFunction::from_fn(g, Parity::Even, |x| 0.08 / (0.2 * x).cosh().powi(2)),
            GridFunction::zeros(g, Parity::Odd),
        )
        .unwrap();
        let ops = CoefficientOps::new(params, sigma).unwrap();
        let w = 4.0 * std::f64::consts::PI / g.half_length() * 8.0;
        let f = GridFunction::from_fn(g, Parity::Even, |x| (w * x).sin() * x.signum().min(1.0));
        // input does not decay; output must, at ten stations toward the edge
        let out = ops.sigma1(&f);
        let dx = g.dx();
        for i in 1..=10 {
            let x = 0.55 * g.half_length() + i as f64;
            let j = ((x + g.half_length()) / dx).round() as usize;
            let tail = out.values[j].abs();
            assert!(
                tail < 1e-3 * out.sup_norm(),
                "coefficient operator failed to localize at x = {x}: {tail}"
            );
        }
    }

    #[test]
    fn shift_poly_adjoint_and_reach() {
        let p = ShiftPoly::avg().mul(&ShiftPoly::diff()); // A delta, antisymmetric
        assert!(p.is_antisymmetric());
        assert_eq!(p.reach(), 2);
        let l = l_matrix(0.3);
        assert_eq!(l.e12.reach(), 6);
        // adjoint of adjoint is identity
        let q = l.e12.adjoint().adjoint();
        assert_eq!(q, l.e12);
    }
}
