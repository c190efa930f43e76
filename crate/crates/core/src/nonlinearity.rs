//! Continuous nondecreasing nonlinearities with `α(0) = 0`, their
//! primitives `L(t) = ∫₀ᵗ α`, Young functions `Λ(t) = max{L(t), L(-t)}`,
//! complementary functions `Λ̃` (by a numerical Legendre transform), ranges
//! as extended-real intervals, and the Δ₂ / growth checks.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::sync::Arc;

use crate::{Error, Result};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    Zero,
    /// `α(s) = r |s|^{p-1} s`.
    Power {
        r: f64,
        p: f64,
    },
    Arctan,
    /// Piecewise-linear through the points, constant beyond the first and
    /// last abscissa.
    Table {
        points: Vec<(f64, f64)>,
    },
    /// Arbitrary monotone function; the primitive is integrated numerically
    /// unless supplied.
    Custom {
        name: String,
    },
}

#[derive(Clone)]
pub struct Nonlinearity {
    family: Family,
    custom: Option<ScalarFn>,
    custom_primitive: Option<ScalarFn>,
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Nonlinearity").field("family", &self.family).finish()
    }
}

/// Audit grid for monotonicity: dense near the origin, geometric outwards.
fn audit_grid() -> Vec<f64> {
    let mut pos: Vec<f64> = (1..=200).map(|k| k as f64 * 0.05).collect();
    let mut t = 10.0;
    while t <= 1e3 {
        pos.push(t);
        t *= 1.25;
    }
    let mut grid: Vec<f64> = pos.iter().rev().map(|t| -t).collect();
    grid.push(0.0);
    grid.extend(pos);
    grid
}

impl Nonlinearity {
    pub fn zero() -> Self {
        Self::from_family(Family::Zero)
    }

    pub fn arctan() -> Self {
        Self::from_family(Family::Arctan)
    }

    pub fn power(r: f64, p: f64) -> Result<Self> {
        if !(r > 0.0 && p > 0.0) || !r.is_finite() || !p.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "power family needs r > 0 and p > 0, got r = {r}, p = {p}"
            )));
        }
        Ok(Self::from_family(Family::Power { r, p }))
    }

    pub fn table(mut points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidArgument("table needs at least two points".into()));
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in points.windows(2) {
            if w[1].0 == w[0].0 {
                return Err(Error::InvalidArgument(format!("duplicate table abscissa {}", w[0].0)));
            }
            if w[1].1 < w[0].1 {
                return Err(Error::NotMonotone {
                    s0: w[0].0,
                    a0: w[0].1,
                    s1: w[1].0,
                    a1: w[1].1,
                });
            }
        }
        if points.iter().any(|(s, a)| !s.is_finite() || !a.is_finite()) {
            return Err(Error::InvalidArgument("table entries must be finite".into()));
        }
        let alpha = Self::from_family(Family::Table { points });
        let a0 = alpha.eval(0.0);
        if a0.abs() > 1e-12 {
            return Err(Error::NonzeroAtOrigin(a0));
        }
        Ok(alpha)
    }

    /// Wraps a user function. It is audited for `α(0) = 0` and monotonicity
    /// on a sample grid.
    pub fn custom(name: impl Into<String>, alpha: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        let nl = Self {
            family: Family::Custom { name: name.into() },
            custom: Some(Arc::new(alpha)),
            custom_primitive: None,
        };
        nl.audit()?;
        Ok(nl)
    }

    /// As [`Nonlinearity::custom`] with a closed-form primitive.
    pub fn custom_with_primitive(
        name: impl Into<String>,
        alpha: impl Fn(f64) -> f64 + Send + Sync + 'static,
        primitive: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let nl = Self {
            family: Family::Custom { name: name.into() },
            custom: Some(Arc::new(alpha)),
            custom_primitive: Some(Arc::new(primitive)),
        };
        nl.audit()?;
        Ok(nl)
    }

    fn from_family(family: Family) -> Self {
        Self {
            family,
            custom: None,
            custom_primitive: None,
        }
    }

    fn audit(&self) -> Result<()> {
        let a0 = self.eval(0.0);
        if a0 != 0.0 {
            return Err(Error::NonzeroAtOrigin(a0));
        }
        let grid = audit_grid();
        let mut prev: Option<(f64, f64)> = None;
        for &s in &grid {
            let a = self.eval(s);
            if a.is_nan() {
                return Err(Error::InvalidArgument(format!("α({s}) is NaN")));
            }
            if let Some((s0, a0)) = prev {
                if a < a0 {
                    return Err(Error::NotMonotone { s0, a0, s1: s, a1: a });
                }
            }
            prev = Some((s, a));
        }
        Ok(())
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn name(&self) -> String {
        match &self.family {
            Family::Zero => "zero".into(),
            Family::Power { r, p } => format!("power(r={r}, p={p})"),
            Family::Arctan => "arctan".into(),
            Family::Table { points } => format!("table({} points)", points.len()),
            Family::Custom { name } => format!("custom({name})"),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.family, Family::Zero)
    }

    /// Whether Newton's method may use [`Nonlinearity::derivative`].
    pub fn is_smooth(&self) -> bool {
        match self.family {
            Family::Zero | Family::Arctan => true,
            Family::Power { p, .. } => p >= 1.0,
            Family::Table { .. } | Family::Custom { .. } => false,
        }
    }

    pub fn eval(&self, s: f64) -> f64 {
        match &self.family {
            Family::Zero => 0.0,
            Family::Power { r, p } => r * s.abs().powf(p - 1.0) * s,
            Family::Arctan => s.atan(),
            Family::Table { points } => table_eval(points, s),
            Family::Custom { .. } => (self.custom.as_ref().unwrap())(s),
        }
    }

    /// `α'(s)` for the smooth families; `None` otherwise.
    pub fn derivative(&self, s: f64) -> Option<f64> {
        match self.family {
            Family::Zero => Some(0.0),
            Family::Arctan => Some(1.0 / (1.0 + s * s)),
            Family::Power { r, p } if p >= 1.0 => Some(if p == 1.0 { r } else { r * p * s.abs().powf(p - 1.0) }),
            _ => None,
        }
    }

    /// `L(t) = ∫₀ᵗ α(s) ds`.
    pub fn primitive(&self, t: f64) -> f64 {
        match &self.family {
            Family::Zero => 0.0,
            Family::Power { r, p } => r / (p + 1.0) * t.abs().powf(p + 1.0),
            Family::Arctan => t * t.atan() - t.hypot(1.0).ln(),
            Family::Table { points } => table_primitive(points, t),
            Family::Custom { .. } => match &self.custom_primitive {
                Some(l) => l(t),
                None => {
                    let f = self.custom.as_ref().unwrap();
                    integrate(&|s| f(s), 0.0, t)
                }
            },
        }
    }

    /// `Λ(t) = max{L(t), L(-t)}`.
    pub fn young(&self, t: f64) -> f64 {
        self.primitive(t).max(self.primitive(-t))
    }

    /// Complementary Young function `Λ̃(s) = sup_τ (|s| τ - Λ(τ))`, computed
    /// by a grid scan followed by golden-section refinement of the concave
    /// objective. Returns `+∞` when the supremum is unbounded.
    pub fn conjugate_young(&self, s: f64) -> f64 {
        legendre(|tau| self.young(tau), s.abs())
    }

    pub fn range(&self) -> RangeInterval {
        range_of(self)
    }
}

fn table_eval(points: &[(f64, f64)], s: f64) -> f64 {
    let first = points[0];
    let last = points[points.len() - 1];
    if s <= first.0 {
        return first.1;
    }
    if s >= last.0 {
        return last.1;
    }
    let k = points.partition_point(|p| p.0 <= s) - 1;
    let (s0, a0) = points[k];
    let (s1, a1) = points[k + 1];
    a0 + (a1 - a0) * (s - s0) / (s1 - s0)
}

/// Exact integral of the piecewise-linear table from 0 to `t`.
fn table_primitive(points: &[(f64, f64)], t: f64) -> f64 {
    let (lo, hi, sign) = if t >= 0.0 { (0.0, t, 1.0) } else { (t, 0.0, -1.0) };
    let mut knots = vec![lo];
    knots.extend(points.iter().map(|p| p.0).filter(|&s| s > lo && s < hi));
    knots.push(hi);
    let total: f64 = knots
        .windows(2)
        .map(|w| 0.5 * (w[1] - w[0]) * (table_eval(points, w[0]) + table_eval(points, w[1])))
        .sum();
    sign * total
}

/// Adaptive Simpson quadrature on `[a, b]`.
fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol || !delta.is_finite() {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
            + recurse(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    let tol = 1e-13 * (1.0 + whole.abs());
    recurse(f, a, fa, b, fb, m, fm, whole, tol, 40)
}

/// `sup_{τ ≥ 0} (s τ - Λ(τ))` for `s ≥ 0` and convex even `Λ` with `Λ(0) = 0`.
fn legendre(young: impl Fn(f64) -> f64, s: f64) -> f64 {
    if s == 0.0 {
        return 0.0;
    }
    let g = |tau: f64| s * tau - young(tau);
    // bracket the maximizer: grow until the objective turns down
    let mut hi = 1.0;
    loop {
        if !(g(2.0 * hi) > g(hi)) {
            break;
        }
        hi *= 2.0;
        if hi > 1e15 {
            return f64::INFINITY;
        }
    }
    let hi = 2.0 * hi;
    // coarse grid scan
    let n = 64;
    let (mut best_k, mut best) = (0usize, g(0.0));
    for k in 1..=n {
        let v = g(hi * k as f64 / n as f64);
        if v > best {
            best = v;
            best_k = k;
        }
    }
    let mut a = hi * (best_k.saturating_sub(1)) as f64 / n as f64;
    let mut b = hi * ((best_k + 1).min(n)) as f64 / n as f64;
    // golden-section refinement
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let (mut f1, mut f2) = (g(x1), g(x2));
    for _ in 0..200 {
        if (b - a) <= 1e-15 * (1.0 + b.abs()) {
            break;
        }
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = g(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = g(x1);
        }
    }
    best.max(f1).max(f2).max(g(0.5 * (a + b)))
}

/// Interval `[lower, upper]` of extended reals with per-endpoint attainment.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct RangeInterval {
    pub lower: f64,
    pub upper: f64,
    pub lower_attained: bool,
    pub upper_attained: bool,
}

impl RangeInterval {
    pub fn new(lower: f64, upper: f64, lower_attained: bool, upper_attained: bool) -> Self {
        Self {
            lower,
            upper,
            lower_attained: lower_attained && lower.is_finite(),
            upper_attained: upper_attained && upper.is_finite(),
        }
    }

    pub fn real_line() -> Self {
        Self::new(f64::NEG_INFINITY, f64::INFINITY, false, false)
    }

    pub fn point(v: f64) -> Self {
        Self::new(v, v, true, true)
    }

    pub fn is_open(&self) -> bool {
        !self.lower_attained && !self.upper_attained
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    /// `x ∈ int(I)` with a relative safety margin `eps_rel` scaled by the
    /// interval's magnitude.
    pub fn contains_interior(&self, x: f64, eps_rel: f64) -> bool {
        let scale = [self.lower, self.upper, x]
            .iter()
            .filter(|v| v.is_finite())
            .fold(1.0f64, |m, v| m.max(v.abs()));
        let margin = eps_rel * scale;
        x > self.lower + margin && x < self.upper - margin
    }

    /// `x ∈ I`, honouring the attainment flags.
    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lower_attained {
            x >= self.lower
        } else {
            x > self.lower
        };
        let below = if self.upper_attained {
            x <= self.upper
        } else {
            x < self.upper
        };
        above && below
    }

    /// `x ∈ closure(I)`, with absolute slack `tol`.
    pub fn contains_closure(&self, x: f64, tol: f64) -> bool {
        x >= self.lower - tol && x <= self.upper + tol
    }

    /// `l · I` for `l ≥ 0`; `0 · I = {0}`.
    pub fn scale(&self, l: f64) -> Result<Self> {
        if !(l >= 0.0) {
            return Err(Error::InvalidArgument(format!("interval scale must be >= 0, got {l}")));
        }
        if l == 0.0 {
            return Ok(Self::point(0.0));
        }
        Ok(Self::new(
            l * self.lower,
            l * self.upper,
            self.lower_attained,
            self.upper_attained,
        ))
    }
}

impl fmt::Display for RangeInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let open = if self.lower_attained { '[' } else { '(' };
        let close = if self.upper_attained { ']' } else { ')' };
        write!(f, "{open}{}, {}{close}", self.lower, self.upper)
    }
}

/// Range of `α`: closed form for the built-in families, limits at `±∞`
/// estimated by evaluation at growing arguments otherwise.
pub fn range_of(alpha: &Nonlinearity) -> RangeInterval {
    match &alpha.family {
        Family::Zero => RangeInterval::point(0.0),
        Family::Power { .. } => RangeInterval::real_line(),
        Family::Arctan => RangeInterval::new(-FRAC_PI_2, FRAC_PI_2, false, false),
        Family::Table { points } => {
            let n = points.len();
            let flat_low = points[0].1 == points[1].1;
            let flat_high = points[n - 1].1 == points[n - 2].1;
            RangeInterval::new(points[0].1, points[n - 1].1, flat_low, flat_high)
        }
        Family::Custom { .. } => {
            let limit = |sign: f64| {
                let mut t = 10.0;
                let mut prev = alpha.eval(sign * t);
                while t < 1e12 {
                    t *= 10.0;
                    let v = alpha.eval(sign * t);
                    if !v.is_finite() {
                        return sign * f64::INFINITY;
                    }
                    if (v - prev).abs() <= 1e-9 * v.abs().max(1e-300) {
                        return v;
                    }
                    prev = v;
                }
                sign * f64::INFINITY
            };
            RangeInterval::new(limit(-1.0), limit(1.0), false, false)
        }
    }
}

/// `l₁ I₁ + l₂ I₂` with extended-real endpoint arithmetic. An endpoint of the
/// sum is attained iff both contributing endpoints are.
pub fn minkowski_combine(i1: &RangeInterval, l1: f64, i2: &RangeInterval, l2: f64) -> Result<RangeInterval> {
    let a = i1.scale(l1)?;
    let b = i2.scale(l2)?;
    let lower = a.lower + b.lower;
    let upper = a.upper + b.upper;
    if lower.is_nan() || upper.is_nan() {
        return Err(Error::Indeterminate(format!("{a} + {b}")));
    }
    Ok(RangeInterval::new(
        lower,
        upper,
        a.lower_attained && b.lower_attained,
        a.upper_attained && b.upper_attained,
    ))
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct Delta2Report {
    pub passes: bool,
    /// Largest sampled `Λ(2t)/Λ(t)`.
    pub empirical_c: f64,
    /// Smallest sampled `t` (the `t_i` of the Δ₂ condition).
    pub t_start: f64,
    /// First sampled `t` where the ratio blows up, when failing.
    pub witness: Option<f64>,
    /// `true` when the verdict came from the family's closed form.
    pub analytic: bool,
}

/// Sampled Δ₂ test: `Λ(2t) ≤ C Λ(t)` on a geometric grid over `[1, t_max]`.
///
/// This is a heuristic, since the condition is asymptotic. The sampled ratio
/// fails when it is non-finite, or when it increases monotonically across the
/// top decade of the grid by more than 10%. Zero, power and arctan families
/// are classified from their closed forms, but the sampled ratio is still
/// reported as `empirical_c`.
pub fn delta2_check(alpha: &Nonlinearity, t_max: f64, samples: usize) -> Result<Delta2Report> {
    if !(t_max > 1.0) {
        return Err(Error::InvalidArgument(format!(
            "delta2 check needs t_max > 1, got {t_max}"
        )));
    }
    if samples < 16 {
        return Err(Error::InvalidArgument(format!(
            "delta2 check needs >= 16 samples, got {samples}"
        )));
    }
    let ts: Vec<f64> = (0..samples)
        .map(|k| t_max.powf(k as f64 / (samples - 1) as f64))
        .collect();
    let mut ratios = Vec::with_capacity(samples);
    for &t in &ts {
        let (lt, l2t) = (alpha.young(t), alpha.young(2.0 * t));
        let r = if lt > 0.0 {
            l2t / lt
        } else if l2t == 0.0 {
            1.0
        } else {
            return Err(Error::DivisionGuard(t));
        };
        ratios.push(r);
    }
    let empirical_c = ratios.iter().cloned().fold(0.0, f64::max);

    let analytic = matches!(alpha.family, Family::Zero | Family::Power { .. } | Family::Arctan);
    if analytic {
        return Ok(Delta2Report {
            passes: true,
            empirical_c,
            t_start: 1.0,
            witness: None,
            analytic,
        });
    }

    if let Some(k) = ratios.iter().position(|r| !r.is_finite()) {
        return Ok(Delta2Report {
            passes: false,
            empirical_c: f64::INFINITY,
            t_start: 1.0,
            witness: Some(ts[k]),
            analytic,
        });
    }
    let top_start = ts.iter().position(|&t| t >= t_max / 10.0).unwrap_or(0);
    let top = &ratios[top_start..];
    let monotone = top.windows(2).all(|w| w[1] >= w[0]);
    let grows = top.len() >= 2 && top[top.len() - 1] > 1.1 * top[0];
    if monotone && grows {
        let threshold = 1.1 * top[0];
        let witness = ts[top_start..]
            .iter()
            .zip(top)
            .find(|(_, &r)| r > threshold)
            .map(|(&t, _)| t);
        return Ok(Delta2Report {
            passes: false,
            empirical_c,
            t_start: 1.0,
            witness,
            analytic,
        });
    }
    Ok(Delta2Report {
        passes: true,
        empirical_c,
        t_start: 1.0,
        witness: None,
        analytic,
    })
}

/// Young gap `Λ(t) + Λ̃(s) - |s t| ≥ 0`, zero when `s = α(t)`.
pub fn young_gap(alpha: &Nonlinearity, s: f64, t: f64) -> f64 {
    let conj = alpha.conjugate_young(s);
    if conj.is_infinite() {
        return f64::INFINITY;
    }
    alpha.young(t) + conj - (s * t).abs()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum GrowthClass {
    Gc1,
    Gc2,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct GrowthReport {
    pub class: GrowthClass,
    /// Least-squares slope of `log|α(s)|` against `log|s|` on `[10, 10⁴]`.
    pub fitted_r: f64,
    /// Largest admissible power, `None` when any power is allowed.
    pub admissible_r: Option<f64>,
}

/// Polynomial growth classification of `α` in dimension `n_dim`.
///
/// `N = 1` imposes nothing; `N = 2` needs some power bound; for `N ≥ 3` the
/// exponent must not exceed `N/(N-2)` when `q = 0` (GC1), or `(N-1)/(N-2)`
/// when `q > 0` (GC2).
pub fn growth_check(alpha: &Nonlinearity, n_dim: usize, q: f64) -> Result<GrowthReport> {
    if n_dim == 0 {
        return Err(Error::InvalidArgument("dimension must be >= 1".into()));
    }
    let fitted_r = fit_growth_exponent(alpha);
    let class_if_ok = if q > 0.0 && n_dim >= 3 {
        GrowthClass::Gc2
    } else {
        GrowthClass::Gc1
    };
    let (ok, admissible_r) = match n_dim {
        1 => (true, None),
        2 => (fitted_r.is_finite(), None),
        n => {
            let n = n as f64;
            let r = if q > 0.0 { (n - 1.0) / (n - 2.0) } else { n / (n - 2.0) };
            (fitted_r <= r + 1e-6, Some(r))
        }
    };
    Ok(GrowthReport {
        class: if ok { class_if_ok } else { GrowthClass::None },
        fitted_r,
        admissible_r,
    })
}

fn fit_growth_exponent(alpha: &Nonlinearity) -> f64 {
    let samples = 32;
    let mut worst: f64 = 0.0;
    for sign in [1.0, -1.0] {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for k in 0..samples {
            let s = 10f64.powf(1.0 + 3.0 * k as f64 / (samples - 1) as f64);
            let a = alpha.eval(sign * s).abs();
            if !a.is_finite() {
                return f64::INFINITY;
            }
            if a > 0.0 {
                xs.push(s.ln());
                ys.push(a.ln());
            }
        }
        if xs.len() < 2 {
            continue;
        }
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        worst = worst.max(sxy / sxx);
    }
    worst.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn power_primitive_and_young() {
        let a = Nonlinearity::power(1.0, 2.0).unwrap();
        for t in [-2.0, -0.5, 0.0, 0.7, 3.0] {
            let expected = f64::abs(t).powi(3) / 3.0;
            assert_relative_eq!(a.primitive(t), expected, epsilon = 1e-14);
            assert_relative_eq!(a.young(t), expected, epsilon = 1e-14);
        }
    }

    #[test]
    fn arctan_young_closed_form() {
        let a = Nonlinearity::arctan();
        for t in [-3.0f64, -1.0, 0.0, 0.5, 2.0, 10.0] {
            let expected = t * t.atan() - (1.0 + t * t).sqrt().ln();
            assert_relative_eq!(a.young(t), expected, epsilon = 1e-13);
        }
    }

    #[test]
    fn zero_family() {
        let z = Nonlinearity::zero();
        assert_eq!(z.primitive(5.0), 0.0);
        assert_eq!(z.young(-5.0), 0.0);
        assert_eq!(z.range(), RangeInterval::point(0.0));
    }

    #[test]
    fn closed_form_primitives_match_quadrature() {
        for a in [Nonlinearity::power(2.0, 1.5).unwrap(), Nonlinearity::arctan()] {
            for t in [-2.5, 0.3, 4.0] {
                let numeric = integrate(&|s| a.eval(s), 0.0, t);
                assert_relative_eq!(a.primitive(t), numeric, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn construction_errors() {
        assert!(Nonlinearity::power(0.0, 2.0).is_err());
        assert!(Nonlinearity::power(1.0, -1.0).is_err());
        assert!(matches!(
            Nonlinearity::table(vec![(-1.0, 1.0), (0.0, 0.0), (1.0, 1.0)]),
            Err(Error::NotMonotone { .. })
        ));
        assert!(matches!(
            Nonlinearity::table(vec![(-1.0, 0.5), (1.0, 1.5)]),
            Err(Error::NonzeroAtOrigin(_))
        ));
        assert!(matches!(
            Nonlinearity::custom("shifted", |s| s + 1.0),
            Err(Error::NonzeroAtOrigin(_))
        ));
        assert!(matches!(
            Nonlinearity::custom("decreasing", |s: f64| -s),
            Err(Error::NotMonotone { .. })
        ));
    }

    #[test]
    fn table_eval_and_primitive() {
        let a = Nonlinearity::table(vec![(-1.0, -2.0), (0.0, 0.0), (2.0, 1.0)]).unwrap();
        assert_relative_eq!(a.eval(1.0), 0.5);
        assert_relative_eq!(a.eval(5.0), 1.0);
        assert_relative_eq!(a.eval(-0.5), -1.0);
        // ∫₀³ = ∫₀² s/2 + ∫₂³ 1 = 1 + 1
        assert_relative_eq!(a.primitive(3.0), 2.0, epsilon = 1e-14);
        // ∫₀^{-2} 2s ds on [-1,0] then -2 on [-2,-1]: = 1 + 2
        assert_relative_eq!(a.primitive(-2.0), 3.0, epsilon = 1e-14);
        let r = a.range();
        assert_eq!((r.lower, r.upper), (-2.0, 1.0));
        assert!(!r.lower_attained && !r.upper_attained);

        let flat = Nonlinearity::table(vec![(-2.0, -1.0), (-1.0, -1.0), (0.0, 0.0), (1.0, 1.0), (2.0, 1.0)]).unwrap();
        assert!(flat.range().lower_attained && flat.range().upper_attained);
    }

    #[test]
    fn ranges() {
        let r = range_of(&Nonlinearity::arctan());
        assert_relative_eq!(r.lower, -PI / 2.0);
        assert_relative_eq!(r.upper, PI / 2.0);
        assert!(r.is_open());
        assert_eq!(
            range_of(&Nonlinearity::power(1.0, 2.0).unwrap()),
            RangeInterval::real_line()
        );
        let tanh = Nonlinearity::custom("tanh", f64::tanh).unwrap();
        let r = range_of(&tanh);
        assert_relative_eq!(r.upper, 1.0, epsilon = 1e-9);
        assert_relative_eq!(r.lower, -1.0, epsilon = 1e-9);
        let cubic = Nonlinearity::custom("cubic", |s: f64| s * s * s).unwrap();
        assert_eq!(range_of(&cubic).upper, f64::INFINITY);
    }

    #[test]
    fn minkowski_examples() {
        let at = range_of(&Nonlinearity::arctan());
        let zero = RangeInterval::point(0.0);
        let r = minkowski_combine(&at, 1.0, &zero, 2.0).unwrap();
        assert_relative_eq!(r.lower, -PI / 2.0);
        assert_relative_eq!(r.upper, PI / 2.0);
        assert!(r.is_open());

        let r = minkowski_combine(&RangeInterval::real_line(), 1.0, &at, 2.0).unwrap();
        assert_eq!(r, RangeInterval::real_line());

        let r = minkowski_combine(&at, 1.0, &at, 2.0).unwrap();
        assert_relative_eq!(r.upper, 1.5 * PI);
        assert_relative_eq!(r.lower, -1.5 * PI);

        // scaling by zero gives {0}
        let r = minkowski_combine(&RangeInterval::real_line(), 0.0, &zero, 1.0).unwrap();
        assert_eq!(r, RangeInterval::point(0.0));
        assert!(minkowski_combine(&at, -1.0, &zero, 1.0).is_err());
    }

    #[test]
    fn minkowski_matches_dense_sampling() {
        // oracle: extreme values of l1 α(s) + l2 α(t) over a dense sample
        let a = Nonlinearity::arctan();
        let samples: Vec<f64> = (-2000..=2000).map(|k| a.eval(k as f64 * 0.5)).collect();
        let lo = samples.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let oracle = (1.0 * lo + 2.0 * lo, 1.0 * hi + 2.0 * hi);
        let r = minkowski_combine(&a.range(), 1.0, &a.range(), 2.0).unwrap();
        assert!((r.lower - oracle.0).abs() < 1e-2 && r.lower < oracle.0);
        assert!((r.upper - oracle.1).abs() < 1e-2 && r.upper > oracle.1);
    }

    #[test]
    fn delta2_examples() {
        let rep = delta2_check(&Nonlinearity::power(1.0, 2.0).unwrap(), 100.0, 32).unwrap();
        assert!(rep.passes);
        assert_relative_eq!(rep.empirical_c, 8.0, epsilon = 1e-10);
        assert!(delta2_check(&Nonlinearity::arctan(), 100.0, 32).unwrap().passes);

        let expo = Nonlinearity::custom("2s exp(s^2)", |s: f64| 2.0 * s * (s * s).exp()).unwrap();
        // Λ(t) = e^{t²} - 1: the ratio at t = 1, 2, 4 grows like e^{3t²}
        for t in [1.0f64, 2.0] {
            let oracle = ((4.0 * t * t).exp() - 1.0) / ((t * t).exp() - 1.0);
            assert_relative_eq!(expo.young(2.0 * t) / expo.young(t), oracle, max_relative = 1e-8);
        }
        let rep = delta2_check(&expo, 10.0, 32).unwrap();
        assert!(!rep.passes);
        assert!(rep.witness.is_some());

        assert!(delta2_check(&Nonlinearity::arctan(), 1.0, 32).is_err());
        assert!(delta2_check(&Nonlinearity::arctan(), 10.0, 8).is_err());
    }

    #[test]
    fn delta2_division_guard() {
        // α vanishes on [0, 2] and then rises: Λ(1) = 0 but Λ(2·1.5) > 0
        let a = Nonlinearity::table(vec![(-1.0, 0.0), (2.0, 0.0), (3.0, 1.0)]).unwrap();
        assert!(matches!(delta2_check(&a, 10.0, 16), Err(Error::DivisionGuard(_))));
    }

    #[test]
    fn young_gap_examples() {
        let at = Nonlinearity::arctan();
        assert!(young_gap(&at, 1f64.atan(), 1.0).abs() < 1e-9);
        assert_eq!(young_gap(&at, 0.0, 0.0), 0.0);
        let lin = Nonlinearity::power(1.0, 1.0).unwrap();
        assert_relative_eq!(young_gap(&lin, 1.0, 2.0), 0.5, epsilon = 1e-9);
        // beyond the range of arctan the conjugate is infinite
        assert_eq!(at.conjugate_young(2.0), f64::INFINITY);
    }

    #[test]
    fn growth_examples() {
        let p2 = Nonlinearity::power(1.0, 2.0).unwrap();
        let rep = growth_check(&p2, 3, 0.0).unwrap();
        assert_eq!(rep.class, GrowthClass::Gc1);
        assert_relative_eq!(rep.admissible_r.unwrap(), 3.0);
        assert_relative_eq!(rep.fitted_r, 2.0, epsilon = 1e-9);

        for n in 1..=5 {
            assert_ne!(
                growth_check(&Nonlinearity::arctan(), n, 0.0).unwrap().class,
                GrowthClass::None
            );
            assert_ne!(
                growth_check(&Nonlinearity::arctan(), n, 1.0).unwrap().class,
                GrowthClass::None
            );
        }

        let p5 = Nonlinearity::power(1.0, 5.0).unwrap();
        let rep = growth_check(&p5, 3, 0.0).unwrap();
        assert_eq!(rep.class, GrowthClass::None);
        assert_relative_eq!(rep.fitted_r, 5.0, epsilon = 1e-9);
        assert_eq!(growth_check(&p5, 1, 0.0).unwrap().class, GrowthClass::Gc1);

        // q > 0 tightens the N = 3 exponent to 2
        assert_eq!(growth_check(&p2, 3, 0.5).unwrap().class, GrowthClass::Gc2);
        let p25 = Nonlinearity::power(1.0, 2.5).unwrap();
        assert_eq!(growth_check(&p25, 3, 0.5).unwrap().class, GrowthClass::None);
    }
}
