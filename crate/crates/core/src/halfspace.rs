//! Constant-coefficient problem on the half space `{z ≥ 0}` after a
//! tangential Fourier transform. For each tangential frequency `ζ`
//!
//! ```text
//! û'' - (|ζ|² + λ) û = f̂                       z > 0
//! -b û'(0) + (c + λ + q b |ζ|²) û(0) = ĝ
//! ```
//!
//! where `-∂_z` is the outward normal derivative. The decaying solution is
//! the Green-kernel particular solution plus `C e^{-kz}`, `k = √(|ζ|²+λ)`,
//! with `C` fixed by the boundary symbol
//! `p(ζ) = c + λ + q b |ζ|² + b k`.

use serde::Serialize;

use crate::{Error, Result};

pub const DEFAULT_POINTS: usize = 2000;

#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyProblem {
    pub zeta: f64,
    pub lambda: f64,
    pub b: f64,
    pub c: f64,
    pub q: f64,
    /// `f̂` sampled on [`FrequencyProblem::grid`].
    pub f_hat: Vec<f64>,
    pub g_hat: f64,
    pub z_max: f64,
}

impl FrequencyProblem {
    /// Problem with zero data on `[0, 10/√λ]` sampled at
    /// [`DEFAULT_POINTS`] points.
    pub fn new(zeta: f64, lambda: f64, b: f64, c: f64, q: f64) -> Result<Self> {
        let check = |ok: bool, what: &str, v: f64| {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{what} out of range: {v}")))
            }
        };
        check(zeta >= 0.0 && zeta.is_finite(), "|ζ|", zeta)?;
        check(lambda > 0.0 && lambda.is_finite(), "λ", lambda)?;
        check(b > 0.0 && b.is_finite(), "b", b)?;
        check(c >= 0.0 && c.is_finite(), "c", c)?;
        check(q >= 0.0 && q.is_finite(), "q", q)?;
        Ok(Self {
            zeta,
            lambda,
            b,
            c,
            q,
            f_hat: vec![0.0; DEFAULT_POINTS],
            g_hat: 0.0,
            z_max: 10.0 / lambda.sqrt(),
        })
    }

    pub fn with_boundary_data(mut self, g_hat: f64) -> Self {
        self.g_hat = g_hat;
        self
    }

    pub fn with_interior_data(mut self, f: impl Fn(f64) -> f64) -> Self {
        let grid = self.grid();
        self.f_hat = grid.iter().map(|&z| f(z)).collect();
        self
    }

    /// Uniform grid on `[0, z_max]`.
    pub fn grid(&self) -> Vec<f64> {
        let n = self.f_hat.len();
        (0..n).map(|i| self.z_max * i as f64 / (n - 1) as f64).collect()
    }

    /// `k = √(|ζ|² + λ)`, the decay rate of the admissible mode.
    pub fn decay_rate(&self) -> f64 {
        (self.zeta * self.zeta + self.lambda).sqrt()
    }

    /// Zeroth-order boundary coefficient `c + λ + q b |ζ|²`.
    fn boundary_coefficient(&self) -> f64 {
        self.c + self.lambda + self.q * self.b * self.zeta * self.zeta
    }
}

/// `p(ζ) = c + λ + q b |ζ|² + b √(|ζ|² + λ)`.
pub fn boundary_symbol(fp: &FrequencyProblem) -> f64 {
    fp.boundary_coefficient() + fp.b * fp.decay_rate()
}

#[derive(Clone, Debug, Serialize)]
pub struct FrequencySolution {
    pub z: Vec<f64>,
    pub u: Vec<f64>,
    /// `û'' = k² û + f̂` on the grid.
    pub u_second: Vec<f64>,
    pub u_prime_at_zero: f64,
    pub symbol: f64,
    /// `-b û'(0) + (c + λ + q b|ζ|²) û(0) - ĝ`.
    pub boundary_residual: f64,
    /// Max second-difference residual of the ODE at interior grid points.
    pub collocation_residual: f64,
    /// Estimated coefficient of `e^{kz}` from the last grid points.
    pub growing_coefficient: f64,
}

/// `(1 - e^{-x}, (1 - e^{-x}(1 + x)))` without cancellation for small `x`.
fn exp_moments(x: f64) -> (f64, f64) {
    let m0 = -(-x).exp_m1();
    let m1 = if x < 1e-3 {
        x * x * (0.5 - x / 3.0 + x * x / 8.0)
    } else {
        1.0 - (-x).exp() * (1.0 + x)
    };
    (m0, m1)
}

/// Decaying solution by variation of constants. The kernel integrals are
/// accumulated recursively with exact exponential weights against a
/// piecewise-linear `f̂`, so no exponential is ever evaluated at a positive
/// argument.
pub fn solve_frequency(fp: &FrequencyProblem) -> Result<FrequencySolution> {
    let n = fp.f_hat.len();
    if n < 3 {
        return Err(Error::InvalidArgument("half-space grid needs at least 3 points".into()));
    }
    let p = boundary_symbol(fp);
    if !(p > 0.0) {
        return Err(Error::InvalidArgument(format!("boundary symbol is not positive: {p}")));
    }
    let k = fp.decay_rate();
    let z = fp.grid();
    let h = fp.z_max / (n - 1) as f64;
    let f = &fp.f_hat;
    let decay = (-k * h).exp();
    let (m0, m1) = exp_moments(k * h);
    let e0 = m0 / k;
    let e1 = m1 / (k * k);

    // a[i] = ∫₀^{z_i} e^{-k(z_i - s)} f(s) ds, b[i] = ∫_{z_i}^{Z} e^{-k(s - z_i)} f(s) ds
    let mut a = vec![0.0; n];
    for i in 0..n - 1 {
        a[i + 1] = decay * a[i] + f[i + 1] * e0 - (f[i + 1] - f[i]) * e1 / h;
    }
    let mut bsum = vec![0.0; n];
    for i in (0..n - 1).rev() {
        bsum[i] = decay * bsum[i + 1] + f[i] * e0 + (f[i + 1] - f[i]) * e1 / h;
    }
    let up: Vec<f64> = a.iter().zip(&bsum).map(|(a, b)| -(a + b) / (2.0 * k)).collect();
    let up_prime0 = (a[0] - bsum[0]) / 2.0;

    let coef = fp.boundary_coefficient();
    let cst = (fp.g_hat + fp.b * up_prime0 - coef * up[0]) / p;
    let u: Vec<f64> = z.iter().zip(&up).map(|(z, up)| up + cst * (-k * z).exp()).collect();
    let u_prime0 = up_prime0 - k * cst;
    let boundary_residual = -fp.b * u_prime0 + coef * u[0] - fp.g_hat;
    let u_second: Vec<f64> = u.iter().zip(f).map(|(u, f)| k * k * u + f).collect();

    let collocation_residual = (1..n - 1)
        .map(|i| ((u[i + 1] - 2.0 * u[i] + u[i - 1]) / (h * h) - k * k * u[i] - f[i]).abs())
        .fold(0.0, f64::max);
    let du_end = (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) / (2.0 * h);
    let growing_coefficient = ((du_end + k * u[n - 1]) / (2.0 * k) * (-k * fp.z_max).exp()).abs();

    Ok(FrequencySolution {
        z,
        u,
        u_second,
        u_prime_at_zero: u_prime0,
        symbol: p,
        boundary_residual,
        collocation_residual,
        growing_coefficient,
    })
}

fn l2_norm(h: f64, v: &[f64]) -> f64 {
    let n = v.len();
    let inner: f64 = v[1..n - 1].iter().map(|x| x * x).sum();
    (h * (inner + 0.5 * (v[0] * v[0] + v[n - 1] * v[n - 1]))).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FrequencyRatio {
    pub zeta: f64,
    /// `‖(f̂, ĝ)‖` with the boundary weighted by `1/b`.
    pub data_norm: f64,
    /// `‖û‖ + |ζ|²‖û‖ + ‖û''‖`.
    pub solution_norm: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EstimateConstants {
    pub c_low: f64,
    pub c_high: f64,
    pub ratios: Vec<FrequencyRatio>,
}

impl EstimateConstants {
    pub fn spread(&self) -> f64 {
        self.c_high / self.c_low
    }
}

pub fn frequency_ratio(fp: &FrequencyProblem) -> Result<FrequencyRatio> {
    let sol = solve_frequency(fp)?;
    let h = fp.z_max / (fp.f_hat.len() - 1) as f64;
    let nu = l2_norm(h, &sol.u);
    let solution_norm = nu + fp.zeta * fp.zeta * nu + l2_norm(h, &sol.u_second);
    let nf = l2_norm(h, &fp.f_hat);
    let data_norm = (nf * nf + fp.g_hat * fp.g_hat / fp.b).sqrt();
    Ok(FrequencyRatio {
        zeta: fp.zeta,
        data_norm,
        solution_norm,
        ratio: data_norm / solution_norm,
    })
}

/// Empirical two-sided constants: the extreme ratios of data norm to
/// solution norm over a sweep with fixed `λ`.
pub fn estimate_constants(sweep: &[FrequencyProblem]) -> Result<EstimateConstants> {
    let Some(first) = sweep.first() else {
        return Err(Error::InvalidArgument("empty frequency sweep".into()));
    };
    if sweep.iter().any(|fp| fp.lambda != first.lambda) {
        return Err(Error::InvalidArgument("frequency sweep must use a single λ".into()));
    }
    let ratios = sweep.iter().map(frequency_ratio).collect::<Result<Vec<_>>>()?;
    if ratios.iter().any(|r| !(r.ratio.is_finite() && r.ratio > 0.0)) {
        return Err(Error::InvalidArgument(
            "sweep contains a frequency with zero data".into(),
        ));
    }
    let c_low = ratios.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    let c_high = ratios.iter().map(|r| r.ratio).fold(0.0, f64::max);
    Ok(EstimateConstants { c_low, c_high, ratios })
}

/// `count` equally spaced frequencies from `start` to `end` inclusive.
pub fn zeta_range(start: f64, end: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..count)
            .map(|i| start + (end - start) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}
