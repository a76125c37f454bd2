//! Uniform symmetric grids, transform-based calculus, parity handling and the
//! weighted-norm diagnostics every solver consumes.
//!
//! Profiles live on `[-L, L)` with `N` points and are treated as `2L`-periodic
//! for transform purposes; localized profiles are resolved by choosing `L` large
//! enough that boundary values sit at roundoff. Grids are constructed so that
//! `1/dx` is an integer, which makes all unit lattice shifts exact index moves.

use once_cell::sync::Lazy;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::{Error, Result};

static FFT_PLANS: Lazy<Mutex<HashMap<(usize, bool), Arc<dyn Fft<f64>>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut plans = FFT_PLANS.lock().unwrap();
    plans
        .entry((n, inverse))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if inverse {
                planner.plan_fft_inverse(n)
            } else {
                planner.plan_fft_forward(n)
            }
        })
        .clone()
}

/// Forward transform of real samples; caller owns normalization.
pub(crate) fn fft_forward(values: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    plan(values.len(), false).process(&mut buf);
    buf
}

/// Inverse transform, returning the real part scaled by `1/N`.
pub(crate) fn fft_inverse_real(mut buf: Vec<Complex64>) -> Vec<f64> {
    let n = buf.len();
    plan(n, true).process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.into_iter().map(|z| z.re * scale).collect()
}

/// Parity class of a profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Parity {
    Even,
    Odd,
    None,
}

/// Uniformly sampled symmetric domain `[-L, L)`.
///
/// Invariants: `N >= 4` even, `dx = 2L/N`, samples at `x_j = -L + j dx`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    half_length: f64,
    n: usize,
}

impl Grid {
    pub fn new(half_length: f64, n_points: usize) -> Result<Self> {
        if !(half_length.is_finite() && half_length > 0.0) {
            return Err(Error::InvalidInput(format!("half length {half_length} must be positive")));
        }
        if n_points < 4 || n_points % 2 != 0 {
            return Err(Error::InvalidInput(format!(
                "n_points = {n_points} must be an even integer >= 4"
            )));
        }
        Ok(Self { half_length, n: n_points })
    }

    /// Grid resolving oscillations up to `omega_max` (`dx <= pi/(8 omega)`),
    /// with `1/dx` an integer so unit shifts are exact index moves.
    pub fn for_frequency(half_length: f64, omega_max: f64) -> Result<Self> {
        if half_length.round() != half_length {
            return Err(Error::InvalidInput(
                "half length must be an integer for shift-exact grids".into(),
            ));
        }
        let per_unit = (8.0 * omega_max / std::f64::consts::PI).ceil().max(8.0) as usize;
        let n = 2 * half_length as usize * per_unit;
        Self::new(half_length, n)
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_length / self.n as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        -self.half_length + j as f64 * self.dx()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x(j)).collect()
    }

    /// Wavenumber of FFT bin `j` for the `2L`-periodic extension.
    pub fn wavenumber(&self, j: usize) -> f64 {
        let m = if j <= self.n / 2 { j as isize } else { j as isize - self.n as isize };
        std::f64::consts::PI / self.half_length * m as f64
    }

    /// Largest resolved wavenumber (Nyquist).
    pub fn k_max(&self) -> f64 {
        std::f64::consts::PI / self.dx()
    }

    /// Index offset of an exact grid shift, if `d` is a multiple of `dx`.
    pub fn index_shift(&self, d: f64) -> Option<isize> {
        let steps = d / self.dx();
        let rounded = steps.round();
        if (steps - rounded).abs() < 1e-9 {
            Some(rounded as isize)
        } else {
            None
        }
    }

    /// Index of the reflection `x -> -x` (the `j = 0` endpoint maps to itself).
    pub fn reflect(&self, j: usize) -> usize {
        (self.n - j) % self.n
    }
}

/// Real profile on a [`Grid`] with parity and decay metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub parity: Parity,
    /// Default weight exponent for norm diagnostics.
    pub decay_rate: f64,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>, parity: Parity) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "value count {} does not match grid size {}",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite sample".into()));
        }
        Ok(Self { grid, values, parity, decay_rate: 0.0 })
    }

    pub fn zeros(grid: Grid, parity: Parity) -> Self {
        Self { grid, values: vec![0.0; grid.len()], parity, decay_rate: 0.0 }
    }

    pub fn from_fn(grid: Grid, parity: Parity, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..grid.len()).map(|j| f(grid.x(j))).collect();
        Self { grid, values, parity, decay_rate: 0.0 }
    }

    pub fn with_decay(mut self, b: f64) -> Self {
        self.decay_rate = b;
        self
    }

    /// Symmetrize values onto the declared parity class; cost `O(N)`.
    pub fn symmetrize(&mut self) {
        let n = self.grid.len();
        match self.parity {
            Parity::Even => {
                for j in 1..=(n / 2) {
                    let r = self.grid.reflect(j);
                    let avg = 0.5 * (self.values[j] + self.values[r]);
                    self.values[j] = avg;
                    self.values[r] = avg;
                }
            }
            Parity::Odd => {
                self.values[0] = 0.0;
                // The Nyquist sample x = 0 pairs with itself under reflection
                // only at j = 0; j = N/2 maps to itself as well.
                for j in 1..(n / 2) {
                    let r = self.grid.reflect(j);
                    let anti = 0.5 * (self.values[j] - self.values[r]);
                    self.values[j] = anti;
                    self.values[r] = -anti;
                }
                self.values[n / 2] = 0.0;
            }
            Parity::None => {}
        }
    }

    /// Relative parity defect against the declared class.
    pub fn parity_defect(&self) -> f64 {
        let scale = self.sup_norm().max(1e-300);
        let n = self.grid.len();
        let mut worst: f64 = 0.0;
        match self.parity {
            Parity::Even => {
                for j in 0..n {
                    let r = self.grid.reflect(j);
                    worst = worst.max((self.values[j] - self.values[r]).abs());
                }
            }
            Parity::Odd => {
                for j in 0..n {
                    let r = self.grid.reflect(j);
                    worst = worst.max((self.values[j] + self.values[r]).abs());
                }
            }
            Parity::None => return 0.0,
        }
        worst / scale
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Periodic-trapezoid quadrature `dx * sum` (spectrally accurate for
    /// smooth decaying integrands).
    pub fn integral(&self) -> f64 {
        self.grid.dx() * self.values.iter().sum::<f64>()
    }

    pub fn l2_norm(&self) -> f64 {
        (self.grid.dx() * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    /// Spectral derivative of the given order.
    pub fn derivative(&self, order: u32) -> GridFunction {
        let n = self.grid.len();
        let mut spec = fft_forward(&self.values);
        for (j, z) in spec.iter_mut().enumerate() {
            let k = self.grid.wavenumber(j);
            let factor = Complex64::new(0.0, k).powu(order);
            *z *= factor;
        }
        // An odd-order derivative of the Nyquist mode is not representable.
        if order % 2 == 1 {
            spec[n / 2] = Complex64::new(0.0, 0.0);
        }
        let parity = match (self.parity, order % 2) {
            (Parity::Even, 1) => Parity::Odd,
            (Parity::Odd, 1) => Parity::Even,
            (p, _) => p,
        };
        let mut out = GridFunction {
            grid: self.grid,
            values: fft_inverse_real(spec),
            parity,
            decay_rate: self.decay_rate,
        };
        out.symmetrize();
        out
    }

    /// Samples of `f(x + d)` via transform phases, exact on resolved modes.
    /// Integer multiples of `dx` reduce to exact index moves.
    pub fn shift(&self, d: f64) -> Result<GridFunction> {
        if d.abs() > self.grid.half_length() / 2.0 {
            return Err(Error::Domain(format!(
                "shift {} exceeds the domain guard L/2 = {}",
                d,
                self.grid.half_length() / 2.0
            )));
        }
        Ok(self.shift_unchecked(d))
    }

    pub(crate) fn shift_unchecked(&self, d: f64) -> GridFunction {
        if let Some(steps) = self.grid.index_shift(d) {
            return self.shift_indices(steps);
        }
        let n = self.grid.len();
        let mut spec = fft_forward(&self.values);
        for (j, z) in spec.iter_mut().enumerate() {
            let k = self.grid.wavenumber(j);
            *z *= Complex64::from_polar(1.0, k * d);
        }
        spec[n / 2] = Complex64::new(spec[n / 2].re, 0.0);
        GridFunction {
            grid: self.grid,
            values: fft_inverse_real(spec),
            parity: Parity::None,
            decay_rate: self.decay_rate,
        }
    }

    /// Exact periodic index shift: output sample `j` is `f(x_j + steps*dx)`.
    pub(crate) fn shift_indices(&self, steps: isize) -> GridFunction {
        let n = self.grid.len() as isize;
        let values = (0..n)
            .map(|j| self.values[(((j + steps) % n + n) % n) as usize])
            .collect();
        GridFunction { grid: self.grid, values, parity: Parity::None, decay_rate: self.decay_rate }
    }

    /// Apply a real Fourier multiplier `m(k)`.
    pub fn apply_symbol(&self, m: impl Fn(f64) -> f64) -> GridFunction {
        let mut spec = fft_forward(&self.values);
        for (j, z) in spec.iter_mut().enumerate() {
            *z *= m(self.grid.wavenumber(j));
        }
        GridFunction {
            grid: self.grid,
            values: fft_inverse_real(spec),
            parity: self.parity,
            decay_rate: self.decay_rate,
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
            parity: self.parity,
            decay_rate: self.decay_rate,
        }
    }

    pub fn scale(&self, a: f64) -> GridFunction {
        self.map(|v| a * v)
    }

    pub fn add(&self, other: &GridFunction) -> GridFunction {
        let parity = if self.parity == other.parity { self.parity } else { Parity::None };
        GridFunction {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
            parity,
            decay_rate: self.decay_rate.min(other.decay_rate),
        }
    }

    pub fn sub(&self, other: &GridFunction) -> GridFunction {
        self.add(&other.scale(-1.0))
    }

    pub fn mul(&self, other: &GridFunction) -> GridFunction {
        let parity = match (self.parity, other.parity) {
            (Parity::Even, Parity::Even) | (Parity::Odd, Parity::Odd) => Parity::Even,
            (Parity::Even, Parity::Odd) | (Parity::Odd, Parity::Even) => Parity::Odd,
            _ => Parity::None,
        };
        GridFunction {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect(),
            parity,
            decay_rate: self.decay_rate.max(other.decay_rate),
        }
    }

    /// Band-limited evaluation at an arbitrary point (direct Fourier sum).
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.grid.len();
        let spec = fft_forward(&self.values);
        let mut acc = spec[0].re;
        for j in 1..n / 2 {
            let k = self.grid.wavenumber(j);
            let z = spec[j] * Complex64::from_polar(1.0, k * (x + self.grid.half_length()));
            acc += 2.0 * z.re;
        }
        acc += (spec[n / 2] * Complex64::from_polar(1.0, self.grid.wavenumber(n / 2) * (x + self.grid.half_length()))).re;
        acc / n as f64
    }
}

/// Trapezoid approximation of the weighted Sobolev norm
/// `|| cosh^b(.) f ||_{H^s}` with spectral derivatives.
///
/// The product rule is applied analytically so the transform only ever sees
/// the decaying profile: with `g_0 = f`, `g_{j+1} = g_j' + b tanh(x) g_j` one
/// has `d^j/dx^j (cosh^b f) = cosh^b g_j`.
pub fn weighted_norm(f: &GridFunction, s: u32, b: f64) -> Result<f64> {
    if f.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite samples in weighted_norm".into()));
    }
    if b < 0.0 {
        return Err(Error::InvalidInput("weight exponent b must be nonnegative".into()));
    }
    let dx = f.grid.dx();
    let mut g = f.clone();
    let mut total = 0.0;
    for j in 0..=s {
        let mut piece = 0.0;
        for (i, v) in g.values.iter().enumerate() {
            let x = f.grid.x(i);
            let w = x.cosh().powf(2.0 * b);
            piece += w * v * v;
        }
        total += dx * piece;
        if j < s {
            let deriv = g.derivative(1);
            let damped: Vec<f64> = g
                .values
                .iter()
                .enumerate()
                .map(|(i, v)| deriv.values[i] + b * f.grid.x(i).tanh() * v)
                .collect();
            g = GridFunction { grid: f.grid, values: damped, parity: Parity::None, decay_rate: 0.0 };
        }
    }
    Ok(total.sqrt())
}

/// Remove the quadrature mean; idempotent, constants map to zero.
pub fn mean_zero_project(f: &GridFunction) -> GridFunction {
    let mean = f.integral() / (2.0 * f.grid.half_length());
    f.map(|v| v - mean)
}

/// Pair `(even, odd)` of profiles on a shared grid; the symmetry class of the
/// heavy/light traveling-wave variables.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoField {
    pub f1: GridFunction,
    pub f2: GridFunction,
}

impl TwoField {
    pub fn new(f1: GridFunction, f2: GridFunction) -> Result<Self> {
        if f1.grid != f2.grid {
            return Err(Error::InvalidInput("components live on different grids".into()));
        }
        Ok(Self { f1, f2 })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            f1: GridFunction::zeros(grid, Parity::Even),
            f2: GridFunction::zeros(grid, Parity::Odd),
        }
    }

    pub fn grid(&self) -> Grid {
        self.f1.grid
    }

    pub fn add(&self, other: &TwoField) -> TwoField {
        TwoField { f1: self.f1.add(&other.f1), f2: self.f2.add(&other.f2) }
    }

    pub fn sub(&self, other: &TwoField) -> TwoField {
        TwoField { f1: self.f1.sub(&other.f1), f2: self.f2.sub(&other.f2) }
    }

    pub fn scale(&self, a: f64) -> TwoField {
        TwoField { f1: self.f1.scale(a), f2: self.f2.scale(a) }
    }

    pub fn sup_norm(&self) -> f64 {
        self.f1.sup_norm().max(self.f2.sup_norm())
    }

    pub fn symmetrize(&mut self) {
        self.f1.parity = Parity::Even;
        self.f2.parity = Parity::Odd;
        self.f1.symmetrize();
        self.f2.symmetrize();
    }
}
