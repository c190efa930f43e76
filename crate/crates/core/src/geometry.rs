//! Structured meshes for intervals and rectangles, product-space vectors
//! `U = (u_Ω, u_Γ)` and the weighted inner product
//! `⟨U, V⟩ = ∫_Ω u v dx + ∫_Γ u v dS/b`.
//!
//! The interior component carries one value per grid node, boundary nodes
//! included, so the trace of `u_Ω` is a restriction. The boundary component
//! is stored separately and need not agree with that trace.

use crate::sparse::wdot;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Dimension {
    One,
    Two,
}

impl Dimension {
    pub fn as_usize(self) -> usize {
        match self {
            Dimension::One => 1,
            Dimension::Two => 2,
        }
    }
}

/// Location handed to coefficient functions: Cartesian coordinates plus the
/// arc-length position along the boundary chain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryPoint {
    pub x: f64,
    pub y: f64,
    pub s: f64,
}

/// One segment of the closed boundary chain (rectangles only), given as
/// positions in the boundary ordering.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChainSegment {
    pub from: usize,
    pub to: usize,
    pub length: f64,
}

#[derive(Clone, Debug)]
pub struct Mesh {
    dimension: Dimension,
    origin: [f64; 2],
    extents: [f64; 2],
    cells: [usize; 2],
    coords: Vec<[f64; 2]>,
    weights: Vec<f64>,
    boundary_nodes: Vec<usize>,
    arc: Vec<f64>,
    boundary_weights: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    chain: Vec<ChainSegment>,
}

fn sample_coefficients(
    points: &[BoundaryPoint],
    b_coeff: &dyn Fn(BoundaryPoint) -> f64,
    c_coeff: &dyn Fn(BoundaryPoint) -> f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut b = Vec::with_capacity(points.len());
    let mut c = Vec::with_capacity(points.len());
    for p in points {
        let (bv, cv) = (b_coeff(*p), c_coeff(*p));
        let location = || format!("({}, {})", p.x, p.y);
        if !(bv > 0.0) || !bv.is_finite() {
            return Err(Error::CoefficientDomain {
                name: "b",
                value: bv,
                location: location(),
                requirement: "b > 0",
            });
        }
        if !(cv >= 0.0) || !cv.is_finite() {
            return Err(Error::CoefficientDomain {
                name: "c",
                value: cv,
                location: location(),
                requirement: "c >= 0",
            });
        }
        b.push(bv);
        c.push(cv);
    }
    Ok((b, c))
}

/// Uniform grid on `[a, b_end]` with `n` cells. The boundary consists of the
/// two endpoints, each with unit `dS` weight.
pub fn build_interval_mesh(
    a: f64,
    b_end: f64,
    n: usize,
    b_coeff: &dyn Fn(BoundaryPoint) -> f64,
    c_coeff: &dyn Fn(BoundaryPoint) -> f64,
) -> Result<Mesh> {
    if !(a < b_end) || !a.is_finite() || !b_end.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "interval needs a < b, got [{a}, {b_end}]"
        )));
    }
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "interval mesh needs n >= 2 cells, got {n}"
        )));
    }
    let h = (b_end - a) / n as f64;
    let coords: Vec<[f64; 2]> = (0..=n)
        .map(|i| {
            // pin the right end exactly
            let x = if i == n { b_end } else { a + i as f64 * h };
            [x, 0.0]
        })
        .collect();
    let mut weights = vec![h; n + 1];
    weights[0] = h / 2.0;
    weights[n] = h / 2.0;

    let points = [
        BoundaryPoint { x: a, y: 0.0, s: 0.0 },
        BoundaryPoint {
            x: b_end,
            y: 0.0,
            s: 1.0,
        },
    ];
    let (b, c) = sample_coefficients(&points, b_coeff, c_coeff)?;
    Ok(Mesh {
        dimension: Dimension::One,
        origin: [a, 0.0],
        extents: [b_end - a, 0.0],
        cells: [n, 0],
        coords,
        weights,
        boundary_nodes: vec![0, n],
        arc: vec![0.0, 1.0],
        boundary_weights: vec![1.0, 1.0],
        b,
        c,
        chain: Vec::new(),
    })
}

/// Tensor grid on `[0, lx] × [0, ly]` with `nx × ny` cells. Node `(i, j)` has
/// index `j (nx + 1) + i`. Boundary nodes form one counter-clockwise closed
/// chain starting at the origin: bottom, right, top, left, corners shared.
pub fn build_rectangle_mesh(
    lx: f64,
    ly: f64,
    nx: usize,
    ny: usize,
    b_coeff: &dyn Fn(BoundaryPoint) -> f64,
    c_coeff: &dyn Fn(BoundaryPoint) -> f64,
) -> Result<Mesh> {
    if !(lx > 0.0 && ly > 0.0) || !lx.is_finite() || !ly.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "rectangle extents must be positive, got {lx} × {ly}"
        )));
    }
    if nx < 2 || ny < 2 {
        return Err(Error::InvalidArgument(format!(
            "rectangle mesh needs nx, ny >= 2, got {nx} × {ny}"
        )));
    }
    let (hx, hy) = (lx / nx as f64, ly / ny as f64);
    let idx = |i: usize, j: usize| j * (nx + 1) + i;
    let xs = |i: usize| if i == nx { lx } else { i as f64 * hx };
    let ys = |j: usize| if j == ny { ly } else { j as f64 * hy };

    let mut coords = Vec::with_capacity((nx + 1) * (ny + 1));
    let mut weights = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            coords.push([xs(i), ys(j)]);
            let wx = if i == 0 || i == nx { 0.5 } else { 1.0 };
            let wy = if j == 0 || j == ny { 0.5 } else { 1.0 };
            weights.push(wx * wy * hx * hy);
        }
    }

    // chain: (node, length of the segment leaving it)
    let mut ring: Vec<(usize, f64)> = Vec::with_capacity(2 * (nx + ny));
    ring.extend((0..nx).map(|i| (idx(i, 0), hx)));
    ring.extend((0..ny).map(|j| (idx(nx, j), hy)));
    ring.extend((1..=nx).rev().map(|i| (idx(i, ny), hx)));
    ring.extend((1..=ny).rev().map(|j| (idx(0, j), hy)));

    let m = ring.len();
    let mut chain = Vec::with_capacity(m);
    let mut arc = Vec::with_capacity(m);
    let mut s = 0.0;
    for (k, &(_, len)) in ring.iter().enumerate() {
        arc.push(s);
        s += len;
        chain.push(ChainSegment {
            from: k,
            to: (k + 1) % m,
            length: len,
        });
    }
    let boundary_weights: Vec<f64> = (0..m).map(|k| 0.5 * (ring[k].1 + ring[(k + m - 1) % m].1)).collect();
    let boundary_nodes: Vec<usize> = ring.iter().map(|&(n, _)| n).collect();
    let points: Vec<BoundaryPoint> = boundary_nodes
        .iter()
        .zip(&arc)
        .map(|(&n, &s)| BoundaryPoint {
            x: coords[n][0],
            y: coords[n][1],
            s,
        })
        .collect();
    let (b, c) = sample_coefficients(&points, b_coeff, c_coeff)?;

    Ok(Mesh {
        dimension: Dimension::Two,
        origin: [0.0, 0.0],
        extents: [lx, ly],
        cells: [nx, ny],
        coords,
        weights,
        boundary_nodes,
        arc,
        boundary_weights,
        b,
        c,
        chain,
    })
}

impl Mesh {
    pub fn dimension(&self) -> Dimension {
        self.dimension
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    pub fn extents(&self) -> [f64; 2] {
        self.extents
    }

    /// Cell counts `[nx, ny]` (`ny = 0` in 1D).
    pub fn cells(&self) -> [usize; 2] {
        self.cells
    }

    pub fn num_nodes(&self) -> usize {
        self.coords.len()
    }

    pub fn num_boundary(&self) -> usize {
        self.boundary_nodes.len()
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    /// Trapezoidal `dx` weights, one per grid node.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Grid index of each boundary node, in chain order.
    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }

    pub fn arc_length(&self) -> &[f64] {
        &self.arc
    }

    /// `dS` weights, one per boundary node.
    pub fn boundary_weights(&self) -> &[f64] {
        &self.boundary_weights
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn chain(&self) -> &[ChainSegment] {
        &self.chain
    }

    /// Boundary quadrature weights of the product space, `dS / b`.
    pub fn boundary_measure_weights(&self) -> Vec<f64> {
        self.boundary_weights.iter().zip(&self.b).map(|(w, b)| w / b).collect()
    }

    pub fn is_boundary_node(&self) -> Vec<bool> {
        let mut flag = vec![false; self.num_nodes()];
        for &n in &self.boundary_nodes {
            flag[n] = true;
        }
        flag
    }

    pub fn boundary_points(&self) -> Vec<BoundaryPoint> {
        self.boundary_nodes
            .iter()
            .zip(&self.arc)
            .map(|(&n, &s)| BoundaryPoint {
                x: self.coords[n][0],
                y: self.coords[n][1],
                s,
            })
            .collect()
    }

    /// `true` when `c` vanishes at every boundary node.
    pub fn c_vanishes(&self) -> bool {
        self.c.iter().all(|&c| c == 0.0)
    }

    /// Smallest cell size.
    pub fn h(&self) -> f64 {
        match self.dimension {
            Dimension::One => self.extents[0] / self.cells[0] as f64,
            Dimension::Two => (self.extents[0] / self.cells[0] as f64).min(self.extents[1] / self.cells[1] as f64),
        }
    }

    pub fn measure(&self) -> Measure {
        let interior = self.weights.iter().sum();
        let boundary = self.boundary_measure_weights().iter().sum();
        Measure { interior, boundary }
    }

    /// Same grid with `b` and `c` replaced.
    pub fn with_coefficients(
        &self,
        b_coeff: &dyn Fn(BoundaryPoint) -> f64,
        c_coeff: &dyn Fn(BoundaryPoint) -> f64,
    ) -> Result<Mesh> {
        let (b, c) = sample_coefficients(&self.boundary_points(), b_coeff, c_coeff)?;
        Ok(Mesh { b, c, ..self.clone() })
    }
}

/// `λ₁ = ∫_Ω dx`, `λ₂ = ∫_Γ dS/b`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct Measure {
    pub interior: f64,
    pub boundary: f64,
}

impl Measure {
    pub fn total(&self) -> f64 {
        self.interior + self.boundary
    }
}

/// An element `(u_Ω, u_Γ)` of the discrete product space.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductVector {
    interior: Vec<f64>,
    boundary: Vec<f64>,
    coupled: bool,
}

/// Relative tolerance for the numerical trace check.
const TRACE_TOL: f64 = 1e-12;

impl ProductVector {
    /// Independent interior and boundary components.
    pub fn new(interior: Vec<f64>, boundary: Vec<f64>) -> Self {
        Self {
            interior,
            boundary,
            coupled: false,
        }
    }

    pub(crate) fn coupled_unchecked(interior: Vec<f64>, boundary: Vec<f64>) -> Self {
        Self {
            interior,
            boundary,
            coupled: true,
        }
    }

    pub fn zeros(mesh: &Mesh) -> Self {
        Self::constant(mesh, 0.0)
    }

    pub fn constant(mesh: &Mesh, value: f64) -> Self {
        Self {
            interior: vec![value; mesh.num_nodes()],
            boundary: vec![value; mesh.num_boundary()],
            coupled: true,
        }
    }

    /// Coupled vector from nodal values: `u_Γ` is the trace of `u_Ω`.
    pub fn from_nodal(mesh: &Mesh, nodal: Vec<f64>) -> Result<Self> {
        if nodal.len() != mesh.num_nodes() {
            return Err(Error::shape(mesh.num_nodes(), nodal.len()));
        }
        let boundary = mesh.boundary_nodes().iter().map(|&n| nodal[n]).collect();
        Ok(Self {
            interior: nodal,
            boundary,
            coupled: true,
        })
    }

    /// Coupled vector sampling `f(x, y)` at every node.
    pub fn from_fn(mesh: &Mesh, f: impl Fn(f64, f64) -> f64) -> Self {
        let nodal = mesh.coords().iter().map(|p| f(p[0], p[1])).collect();
        Self::from_nodal(mesh, nodal).expect("length matches by construction")
    }

    pub fn interior(&self) -> &[f64] {
        &self.interior
    }

    pub fn boundary(&self) -> &[f64] {
        &self.boundary
    }

    /// Mutable interior values. Clears the coupled flag.
    pub fn interior_mut(&mut self) -> &mut [f64] {
        self.coupled = false;
        &mut self.interior
    }

    /// Mutable boundary values. Clears the coupled flag.
    pub fn boundary_mut(&mut self) -> &mut [f64] {
        self.coupled = false;
        &mut self.boundary
    }

    /// Whether the vector was built or verified as a trace-coupled pair.
    pub fn coupled_flag(&self) -> bool {
        self.coupled
    }

    pub fn check_shape(&self, mesh: &Mesh) -> Result<()> {
        if self.interior.len() != mesh.num_nodes() || self.boundary.len() != mesh.num_boundary() {
            return Err(Error::shape(
                format!("({}, {})", mesh.num_nodes(), mesh.num_boundary()),
                format!("({}, {})", self.interior.len(), self.boundary.len()),
            ));
        }
        Ok(())
    }

    /// `max |u_Γ - tr u_Ω|`.
    pub fn trace_gap(&self, mesh: &Mesh) -> f64 {
        mesh.boundary_nodes()
            .iter()
            .zip(&self.boundary)
            .map(|(&n, g)| (self.interior[n] - g).abs())
            .fold(0.0, f64::max)
    }

    /// Verifies the trace relation numerically and sets the coupled flag.
    pub fn mark_coupled(&mut self, mesh: &Mesh) -> Result<()> {
        self.require_coupled(mesh)?;
        self.coupled = true;
        Ok(())
    }

    pub(crate) fn require_coupled(&self, mesh: &Mesh) -> Result<()> {
        self.check_shape(mesh)?;
        if self.coupled {
            return Ok(());
        }
        let scale = self.interior.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let gap = self.trace_gap(mesh);
        if gap <= TRACE_TOL * scale {
            Ok(())
        } else {
            Err(Error::Uncoupled(gap))
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            interior: self.interior.iter().map(|v| v * s).collect(),
            boundary: self.boundary.iter().map(|v| v * s).collect(),
            coupled: self.coupled,
        }
    }

    /// `self + s · other`.
    pub fn axpy(&self, s: f64, other: &Self) -> Self {
        Self {
            interior: self
                .interior
                .iter()
                .zip(&other.interior)
                .map(|(a, b)| a + s * b)
                .collect(),
            boundary: self
                .boundary
                .iter()
                .zip(&other.boundary)
                .map(|(a, b)| a + s * b)
                .collect(),
            coupled: self.coupled && other.coupled,
        }
    }

    /// Applies `f` componentwise.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            interior: self.interior.iter().map(|&v| f(v)).collect(),
            boundary: self.boundary.iter().map(|&v| f(v)).collect(),
            coupled: self.coupled,
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.interior
            .iter()
            .zip(&other.interior)
            .chain(self.boundary.iter().zip(&other.boundary))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// `∫_Ω u v dx + ∫_Γ u v dS/b`, by trapezoidal quadrature.
pub fn x2_inner_product(u: &ProductVector, v: &ProductVector, mesh: &Mesh) -> Result<f64> {
    u.check_shape(mesh)?;
    v.check_shape(mesh)?;
    Ok(wdot(mesh.weights(), u.interior(), v.interior())
        + wdot(&mesh.boundary_measure_weights(), u.boundary(), v.boundary()))
}

pub fn x2_norm(u: &ProductVector, mesh: &Mesh) -> Result<f64> {
    Ok(x2_inner_product(u, u, mesh)?.sqrt())
}

/// `∫ F dμ`: the aggregate load `∫_Ω f dx + ∫_Γ g dS/b`.
pub fn integral_mu(f: &ProductVector, mesh: &Mesh) -> Result<f64> {
    f.check_shape(mesh)?;
    Ok(mesh.weights().iter().zip(f.interior()).map(|(w, v)| w * v).sum::<f64>()
        + mesh
            .boundary_measure_weights()
            .iter()
            .zip(f.boundary())
            .map(|(w, v)| w * v)
            .sum::<f64>())
}

/// `ave_μ(F) = ∫ F dμ / μ(Ω̄)`.
pub fn average_mu(f: &ProductVector, mesh: &Mesh) -> Result<f64> {
    Ok(integral_mu(f, mesh)? / mesh.measure().total())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn one(_: BoundaryPoint) -> f64 {
        1.0
    }
    fn zero(_: BoundaryPoint) -> f64 {
        0.0
    }

    #[test]
    fn unit_interval_example() {
        let mesh = build_interval_mesh(0.0, 1.0, 10, &one, &one).unwrap();
        assert_relative_eq!(mesh.h(), 0.1);
        assert_eq!(mesh.num_nodes(), 11);
        let xs: Vec<f64> = mesh.boundary_nodes().iter().map(|&n| mesh.coords()[n][0]).collect();
        assert_eq!(xs, vec![0.0, 1.0]);
        assert_eq!(mesh.c(), &[1.0, 1.0]);
    }

    #[test]
    fn interval_measures() {
        let mesh = build_interval_mesh(0.0, 1.0, 2, &one, &zero).unwrap();
        assert_eq!(mesh.num_nodes(), 3);
        let m = mesh.measure();
        assert_relative_eq!(m.interior, 1.0);
        assert_relative_eq!(m.boundary, 2.0);

        let mesh = build_interval_mesh(0.0, 2.0, 4, &|_| 2.0, &zero).unwrap();
        assert_relative_eq!(mesh.measure().boundary, 1.0);
        assert_relative_eq!(mesh.measure().interior, 2.0);
    }

    #[test]
    fn interval_preconditions() {
        assert!(matches!(
            build_interval_mesh(1.0, 0.0, 4, &one, &zero),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            build_interval_mesh(0.0, 1.0, 1, &one, &zero),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            build_interval_mesh(0.0, 1.0, 4, &|p| if p.x > 0.5 { 0.0 } else { 1.0 }, &zero),
            Err(Error::CoefficientDomain { name: "b", .. })
        ));
        assert!(matches!(
            build_interval_mesh(0.0, 1.0, 4, &one, &|_| -1.0),
            Err(Error::CoefficientDomain { name: "c", .. })
        ));
    }

    #[test]
    fn square_measures_and_chain() {
        let mesh = build_rectangle_mesh(1.0, 1.0, 4, 4, &one, &zero).unwrap();
        let m = mesh.measure();
        assert_relative_eq!(m.interior, 1.0, epsilon = 1e-14);
        assert_relative_eq!(m.boundary, 4.0, epsilon = 1e-14);
        assert_eq!(mesh.num_boundary(), 16);

        // closed cycle visiting every boundary node once
        let chain = mesh.chain();
        assert_eq!(chain.len(), mesh.num_boundary());
        let mut seen = vec![false; chain.len()];
        let mut k = 0;
        for _ in 0..chain.len() {
            assert!(!seen[k]);
            seen[k] = true;
            assert_eq!(chain[k].from, k);
            k = chain[k].to;
        }
        assert_eq!(k, 0);
        assert!(seen.iter().all(|&s| s));

        // consecutive chain nodes are grid neighbours
        for seg in chain {
            let a = mesh.coords()[mesh.boundary_nodes()[seg.from]];
            let b = mesh.coords()[mesh.boundary_nodes()[seg.to]];
            let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
            assert_relative_eq!(d, seg.length, epsilon = 1e-14);
        }
    }

    #[test]
    fn rectangle_perimeter() {
        let mesh = build_rectangle_mesh(2.0, 1.0, 4, 2, &one, &zero).unwrap();
        assert_relative_eq!(mesh.measure().boundary, 6.0, epsilon = 1e-14);
        assert_relative_eq!(mesh.measure().interior, 2.0, epsilon = 1e-14);
    }

    #[test]
    fn measures_are_grid_independent() {
        for n in [4usize, 8, 16, 32] {
            let mesh = build_rectangle_mesh(1.5, 0.5, n, 2 * n, &|p| 1.0 + p.x, &zero).unwrap();
            let fine = build_rectangle_mesh(1.5, 0.5, 2 * n, 4 * n, &|p| 1.0 + p.x, &zero).unwrap();
            assert_relative_eq!(mesh.measure().interior, fine.measure().interior, epsilon = 1e-13);
            // trapezoid of 1/(1+x) is not exact, so only the unit-b case is grid independent
            let mesh = build_rectangle_mesh(1.5, 0.5, n, 2 * n, &one, &zero).unwrap();
            let fine = build_rectangle_mesh(1.5, 0.5, 2 * n, 4 * n, &one, &zero).unwrap();
            assert_relative_eq!(mesh.measure().boundary, fine.measure().boundary, epsilon = 1e-13);
        }
    }

    #[test]
    fn cccc_coefficients_are_positive_on_every_edge() {
        let q_minus = 2.0 * 0.5f64.cos() - 0.5f64.tan();
        let q = 0.5 * q_minus;
        let mesh = build_rectangle_mesh(1.0, 1.0, 8, 8, &one, &|_| q_minus - q).unwrap();
        assert!(mesh.c().iter().all(|&c| c > 0.0));
    }

    #[test]
    fn inner_product_examples() {
        let mesh = build_interval_mesh(0.0, 1.0, 8, &one, &one).unwrap();
        let ones = ProductVector::constant(&mesh, 1.0);
        assert_relative_eq!(x2_inner_product(&ones, &ones, &mesh).unwrap(), 3.0, epsilon = 1e-14);
        let zeros = ProductVector::zeros(&mesh);
        assert_eq!(x2_inner_product(&ones, &zeros, &mesh).unwrap(), 0.0);

        let n = mesh.num_nodes();
        let u = ProductVector::new(vec![0.0; n], vec![1.0, 1.0]);
        let v = ProductVector::new(vec![0.0; n], vec![1.0, -1.0]);
        assert_eq!(x2_inner_product(&u, &v, &mesh).unwrap(), 0.0);

        let bad = ProductVector::new(vec![0.0; n + 1], vec![0.0; 2]);
        assert!(matches!(
            x2_inner_product(&bad, &u, &mesh),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn average_examples() {
        let mesh = build_interval_mesh(0.0, 1.0, 10, &one, &one).unwrap();
        assert_relative_eq!(average_mu(&ProductVector::constant(&mesh, 1.0), &mesh).unwrap(), 1.0);
        let n = mesh.num_nodes();
        let f = ProductVector::new(vec![0.0; n], vec![1.0, 2.0]);
        assert_relative_eq!(average_mu(&f, &mesh).unwrap(), 1.0);
        let mut odd = ProductVector::from_fn(&mesh, |x, _| x - 0.5);
        odd.boundary_mut().iter_mut().for_each(|v| *v = 0.0);
        assert!(average_mu(&odd, &mesh).unwrap().abs() < 1e-15);
    }

    #[test]
    fn coupling_checks() {
        let mesh = build_interval_mesh(0.0, 1.0, 4, &one, &one).unwrap();
        let mut u = ProductVector::from_fn(&mesh, |x, _| x * x);
        assert!(u.coupled_flag());
        u.boundary_mut()[1] = 7.0;
        assert!(!u.coupled_flag());
        assert!(matches!(u.mark_coupled(&mesh), Err(Error::Uncoupled(_))));
        u.boundary_mut()[1] = 1.0;
        u.mark_coupled(&mesh).unwrap();
        assert!(u.coupled_flag());
    }
}
