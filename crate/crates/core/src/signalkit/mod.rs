//! Sampled signals on [0,1]: the two test-signal families, cumulative
//! quadrature and moment integrals, forward ODE solves, and noise injection.

pub mod csv;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::polyalg::{Polynomial, Scalar};

/// Maximum sample magnitude tolerated by the forward ODE solver before the
/// run is declared hopeless.
pub const RK4_OVERFLOW_BOUND: f64 = 1e12;

/// Uniform grid on [0,1] with both endpoints included: t_m = m/(n-1).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    n: usize,
}

impl Grid {
    pub const MIN_NODES: usize = 16;

    pub fn new(n: usize) -> Result<Self> {
        if n < Self::MIN_NODES {
            return Err(Error::InvalidSpec(format!(
                "grid needs at least {} nodes, got {n}",
                Self::MIN_NODES
            )));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Node spacing h = 1/(n-1).
    pub fn h(&self) -> f64 {
        1.0 / (self.n - 1) as f64
    }

    pub fn node(&self, m: usize) -> f64 {
        m as f64 / (self.n - 1) as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |m| self.node(m))
    }
}

/// Uniformly sampled field-valued function on [0,1].
#[derive(Debug, Clone, PartialEq)]
pub struct Signal<T: Scalar> {
    grid: Grid,
    samples: Vec<T>,
}

impl<T: Scalar> Signal<T> {
    pub fn new(grid: Grid, samples: Vec<T>) -> Self {
        assert_eq!(samples.len(), grid.n(), "sample count must match the grid");
        Self { grid, samples }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> T) -> Self {
        let samples = grid.nodes().map(f).collect();
        Self { grid, samples }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().map(|s| s.abs()).fold(0.0, f64::max)
    }

    /// Plain discrete l2 norm of the sample vector.
    pub fn norm(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.abs().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|s| s.is_finite())
    }

    /// self + other * factor, on a shared grid.
    pub fn axpy(&self, factor: T, other: &Signal<T>) -> Signal<T> {
        assert_eq!(self.grid, other.grid);
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(&a, &b)| a + b * factor)
            .collect();
        Signal::new(self.grid, samples)
    }

    pub fn scale(&self, factor: T) -> Signal<T> {
        Signal::new(
            self.grid,
            self.samples.iter().map(|&s| s * factor).collect(),
        )
    }
}

/// Test-signal family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// f_i(t) = exp(-(alpha t^2 + beta t)), generator P_i(t) = 2 alpha t + beta.
    Gaussian,
    /// f_i(t) = exp(-i (alpha t + beta t^2)), generator P_i(t) = i (alpha + 2 beta t).
    LfmChirp,
    /// Generator coefficients given directly; f_i solved numerically.
    Custom,
}

impl Family {
    /// The known generator scale mu_i: 1 for scalar families, i for the chirp.
    pub fn mu<T: Scalar>(&self) -> T {
        match self {
            Family::LfmChirp => T::from_re_im(0.0, 1.0),
            _ => T::one(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::Gaussian => "gaussian",
            Family::LfmChirp => "lfm_chirp",
            Family::Custom => "custom",
        }
    }
}

/// A two-component plant: generator coefficient lists (scale-free, real) plus
/// nonzero mixing amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub family: Family,
    /// Coefficients of P_1 / mu_1, low degree first.
    pub p1: Vec<f64>,
    /// Coefficients of P_2 / mu_2, low degree first.
    pub p2: Vec<f64>,
    pub a1: f64,
    pub a2: f64,
}

impl GeneratorSpec {
    pub fn new(family: Family, p1: Vec<f64>, p2: Vec<f64>, a1: f64, a2: f64) -> Result<Self> {
        if a1 == 0.0 || a2 == 0.0 {
            return Err(Error::InvalidSpec("amplitudes must be nonzero".into()));
        }
        let pad = p1.len().max(p2.len());
        let same = (0..pad)
            .all(|j| p1.get(j).copied().unwrap_or(0.0) == p2.get(j).copied().unwrap_or(0.0));
        if same {
            return Err(Error::InvalidSpec(
                "generator coefficient lists must differ".into(),
            ));
        }
        if !p1.iter().chain(&p2).all(|c| c.is_finite()) {
            return Err(Error::InvalidSpec(
                "generator coefficients must be finite".into(),
            ));
        }
        Ok(Self {
            family,
            p1,
            p2,
            a1,
            a2,
        })
    }

    /// Gaussian pair from (alpha_i, beta_i): P_i = [beta_i, 2 alpha_i].
    pub fn gaussian(alpha: (f64, f64), beta: (f64, f64), amps: (f64, f64)) -> Result<Self> {
        Self::new(
            Family::Gaussian,
            vec![beta.0, 2.0 * alpha.0],
            vec![beta.1, 2.0 * alpha.1],
            amps.0,
            amps.1,
        )
    }

    /// Chirp pair from (alpha_i, beta_i): P_i = i [alpha_i, 2 beta_i].
    pub fn lfm(alpha: (f64, f64), beta: (f64, f64), amps: (f64, f64)) -> Result<Self> {
        Self::new(
            Family::LfmChirp,
            vec![alpha.0, 2.0 * beta.0],
            vec![alpha.1, 2.0 * beta.1],
            amps.0,
            amps.1,
        )
    }

    pub fn custom(p1: Vec<f64>, p2: Vec<f64>, amps: (f64, f64)) -> Result<Self> {
        Self::new(Family::Custom, p1, p2, amps.0, amps.1)
    }

    /// Degree plan (N1, N2) implied by the coefficient lists, highest first.
    pub fn degrees(&self) -> (usize, usize) {
        let d1 = Polynomial::<f64>::from_real_slice(&self.p1)
            .degree()
            .unwrap_or(0);
        let d2 = Polynomial::<f64>::from_real_slice(&self.p2)
            .degree()
            .unwrap_or(0);
        (d1.max(d2), d1.min(d2))
    }
}

/// Generate the mixture F = a1 f1 + a2 f2 and its components on `grid`.
///
/// Gaussian components are evaluated in closed form as exp(-Q_i) with Q_i the
/// antiderivative of P_i; chirps as exp(-i Q_i) (complex field only); custom
/// generators are integrated forward by [`rk4_solve`] from f_i(0) = 1.
pub fn generate<T: Scalar>(
    spec: &GeneratorSpec,
    grid: Grid,
) -> Result<(Signal<T>, Signal<T>, Signal<T>)> {
    let component = |p: &[f64]| -> Result<Signal<T>> {
        let poly = Polynomial::<f64>::from_real_slice(p);
        let q = poly.antiderivative();
        match spec.family {
            Family::Gaussian => Ok(Signal::from_fn(grid, |t| T::from_real((-q.eval(t)).exp()))),
            Family::LfmChirp => {
                if T::COMPONENTS != 2 {
                    return Err(Error::InvalidSpec(
                        "lfm_chirp requires the complex field".into(),
                    ));
                }
                Ok(Signal::from_fn(grid, |t| {
                    let phase = -q.eval(t);
                    T::from_re_im(phase.cos(), phase.sin())
                }))
            }
            Family::Custom => rk4_solve(&Polynomial::<T>::from_real_slice(p), grid),
        }
    };
    let f1 = component(&spec.p1)?;
    let f2 = component(&spec.p2)?;
    let f = f1
        .scale(T::from_real(spec.a1))
        .axpy(T::from_real(spec.a2), &f2);
    Ok((f, f1, f2))
}

/// Add i.i.d. zero-mean normal noise with standard deviation
/// `sigma_rel * max_t |F(t)|` to every real component of every sample.
/// Deterministic for a fixed seed; `sigma_rel = 0` returns the input as is.
pub fn add_noise<T: Scalar>(f: &Signal<T>, sigma_rel: f64, seed: u64) -> Signal<T> {
    assert!(sigma_rel >= 0.0, "noise level must be nonnegative");
    if sigma_rel == 0.0 {
        return f.clone();
    }
    let sd = sigma_rel * f.max_abs();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || sd * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng);
    let samples = f
        .samples()
        .iter()
        .map(|&s| {
            let dre = draw();
            let dim = if T::COMPONENTS == 2 { draw() } else { 0.0 };
            s + T::from_re_im(dre, dim)
        })
        .collect();
    Signal::new(f.grid(), samples)
}

/// Cumulative composite-trapezoid integral: G(t_m) = int_0^{t_m} F, G(0) = 0.
pub fn cumulative_integral<T: Scalar>(f: &Signal<T>) -> Signal<T> {
    let h = f.grid().h();
    let mut acc = T::zero();
    let mut out = Vec::with_capacity(f.grid().n());
    out.push(acc);
    for w in f.samples().windows(2) {
        acc += (w[0] + w[1]).mul_real(0.5 * h);
        out.push(acc);
    }
    Signal::new(f.grid(), out)
}

/// Single and double cumulative moment integrals of F:
/// I1_k(t) = int_0^t x^k F(x) dx for k = 0..=kmax1, and
/// I2_k = cumulative integral of I1_k for k = 0..=kmax2.
pub fn moment_integrals<T: Scalar>(
    f: &Signal<T>,
    kmax1: usize,
    kmax2: usize,
) -> (Vec<Signal<T>>, Vec<Signal<T>>) {
    let grid = f.grid();
    let kboth = kmax1.max(kmax2);
    let mut i1 = Vec::with_capacity(kboth + 1);
    for k in 0..=kboth {
        let weighted = Signal::new(
            grid,
            grid.nodes()
                .zip(f.samples())
                .map(|(t, &s)| s.mul_real(t.powi(k as i32)))
                .collect(),
        );
        i1.push(cumulative_integral(&weighted));
    }
    let i2 = i1[..=kmax2].iter().map(cumulative_integral).collect();
    i1.truncate(kmax1 + 1);
    (i1, i2)
}

/// Classic fourth-order Runge-Kutta forward solve of f' = -P(t) f, f(0) = 1.
pub fn rk4_solve<T: Scalar>(p: &Polynomial<T>, grid: Grid) -> Result<Signal<T>> {
    rk4_solve_fn(|t| p.eval(t), grid)
}

/// RK4 forward solve of f' = -p(t) f with an arbitrary coefficient function.
pub fn rk4_solve_fn<T: Scalar>(p: impl Fn(f64) -> T, grid: Grid) -> Result<Signal<T>> {
    let h = grid.h();
    let mut y = T::one();
    let mut out = Vec::with_capacity(grid.n());
    out.push(y);
    for m in 0..grid.n() - 1 {
        let t = grid.node(m);
        let f = |t: f64, y: T| -(p(t) * y);
        let k1 = f(t, y);
        let k2 = f(t + 0.5 * h, y + k1.mul_real(0.5 * h));
        let k3 = f(t + 0.5 * h, y + k2.mul_real(0.5 * h));
        let k4 = f(t + h, y + k3.mul_real(h));
        y += (k1 + k2.mul_real(2.0) + k3.mul_real(2.0) + k4).mul_real(h / 6.0);
        if !y.is_finite() || y.abs() > RK4_OVERFLOW_BOUND {
            return Err(Error::Overflow {
                bound: RK4_OVERFLOW_BOUND,
            });
        }
        out.push(y);
    }
    Ok(Signal::new(grid, out))
}
