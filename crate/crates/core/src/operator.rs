//! Discrete Wentzell Laplacian.
//!
//! The bilinear form
//!
//! ```text
//! ϱ(U, V) = ∫_Ω ∇u·∇v dx + ∫_Γ c u v dS/b + q ∫_Γ ∇_Γu·∇_Γv dS
//! ```
//!
//! is assembled with lumped P1 elements on the structured grid (the 5-point
//! stencil in 2D) and P1 elements along the boundary chain. The normal
//! derivative never appears: it is absorbed by the weak form, so the
//! stiffness is symmetric and annihilates constants whenever `c ≡ 0`.
//!
//! Two representations are kept. The product-space blocks act on
//! `(u_Ω, u_Γ)` independently; the coupled matrices act on nodal vectors
//! whose boundary values are the trace, i.e. `Pᵀ K P` and `Pᵀ M P` with `P`
//! the trace-duplication map.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use crate::geometry::{Dimension, Mesh, ProductVector};
use crate::nonlinearity::Nonlinearity;
use crate::sparse::{wdot, CsrMatrix};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct OperatorMatrices {
    q: f64,
    bulk: CsrMatrix,
    surface: CsrMatrix,
    bulk_mass: Vec<f64>,
    surface_mass: Vec<f64>,
    boundary_nodes: Vec<usize>,
    coupled_stiffness: CsrMatrix,
    coupled_mass: Vec<f64>,
    c_vanishes: bool,
    coefficient_hash: u64,
}

/// Assembles stiffness and mass for `mesh` with Laplace–Beltrami weight `q`.
pub fn assemble(mesh: &Mesh, q: f64) -> Result<OperatorMatrices> {
    if !(q >= 0.0) || !q.is_finite() {
        return Err(Error::InvalidArgument(format!("q must be >= 0, got {q}")));
    }
    let n = mesh.num_nodes();
    let mut bulk = Vec::new();
    let mut edge = |a: usize, b: usize, w: f64| bulk.push((a, b, w));
    match mesh.dimension() {
        Dimension::One => {
            let cells = mesh.cells()[0];
            let h = mesh.extents()[0] / cells as f64;
            for i in 0..cells {
                edge(i, i + 1, 1.0 / h);
            }
        }
        Dimension::Two => {
            let [nx, ny] = mesh.cells();
            let hx = mesh.extents()[0] / nx as f64;
            let hy = mesh.extents()[1] / ny as f64;
            let idx = |i: usize, j: usize| j * (nx + 1) + i;
            for j in 0..=ny {
                let half = if j == 0 || j == ny { 0.5 } else { 1.0 };
                for i in 0..nx {
                    edge(idx(i, j), idx(i + 1, j), half * hy / hx);
                }
            }
            for i in 0..=nx {
                let half = if i == 0 || i == nx { 0.5 } else { 1.0 };
                for j in 0..ny {
                    edge(idx(i, j), idx(i, j + 1), half * hx / hy);
                }
            }
        }
    }

    let m = mesh.num_boundary();
    let surface_mass = mesh.boundary_measure_weights();
    let robin: Vec<f64> = (0..m).map(|k| mesh.c()[k] * surface_mass[k]).collect();
    let chain: Vec<(usize, usize, f64)> = if q > 0.0 {
        mesh.chain()
            .iter()
            .map(|seg| (seg.from, seg.to, q / seg.length))
            .collect()
    } else {
        Vec::new()
    };
    let surface = CsrMatrix::from_laplacian(m, &chain, &robin);

    let boundary_nodes = mesh.boundary_nodes().to_vec();
    let mut reaction = vec![0.0; n];
    for (k, &node) in boundary_nodes.iter().enumerate() {
        reaction[node] += robin[k];
    }
    let mut coupled = bulk.clone();
    coupled.extend(chain.iter().map(|&(a, b, w)| (boundary_nodes[a], boundary_nodes[b], w)));
    let coupled_stiffness = CsrMatrix::from_laplacian(n, &coupled, &reaction);
    let bulk = CsrMatrix::from_laplacian(n, &bulk, &vec![0.0; n]);

    let bulk_mass = mesh.weights().to_vec();
    let mut coupled_mass = bulk_mass.clone();
    for (k, &node) in boundary_nodes.iter().enumerate() {
        coupled_mass[node] += surface_mass[k];
    }

    let mut hasher = DefaultHasher::new();
    for v in mesh.b().iter().chain(mesh.c()) {
        v.to_bits().hash(&mut hasher);
    }

    Ok(OperatorMatrices {
        q,
        bulk,
        surface,
        bulk_mass,
        surface_mass,
        boundary_nodes,
        coupled_stiffness,
        coupled_mass,
        c_vanishes: mesh.c_vanishes(),
        coefficient_hash: hasher.finish(),
    })
}

impl OperatorMatrices {
    pub fn q(&self) -> f64 {
        self.q
    }

    /// Hash of the `b` and `c` samples the matrices were built from.
    pub fn coefficient_hash(&self) -> u64 {
        self.coefficient_hash
    }

    pub fn c_vanishes(&self) -> bool {
        self.c_vanishes
    }

    pub fn num_nodes(&self) -> usize {
        self.bulk_mass.len()
    }

    pub fn num_boundary(&self) -> usize {
        self.surface_mass.len()
    }

    /// `∫_Ω ∇u·∇v dx` on nodal values.
    pub fn bulk_stiffness(&self) -> &CsrMatrix {
        &self.bulk
    }

    /// `∫_Γ c u v dS/b + q ∫_Γ ∇_Γu·∇_Γv dS` on boundary values.
    pub fn surface_stiffness(&self) -> &CsrMatrix {
        &self.surface
    }

    pub fn bulk_mass(&self) -> &[f64] {
        &self.bulk_mass
    }

    pub fn surface_mass(&self) -> &[f64] {
        &self.surface_mass
    }

    /// Stiffness on trace-coupled nodal vectors.
    pub fn coupled_stiffness(&self) -> &CsrMatrix {
        &self.coupled_stiffness
    }

    /// Diagonal mass on trace-coupled nodal vectors.
    pub fn coupled_mass(&self) -> &[f64] {
        &self.coupled_mass
    }

    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }

    fn check(&self, u: &ProductVector) -> Result<()> {
        if u.interior().len() != self.num_nodes() || u.boundary().len() != self.num_boundary() {
            return Err(Error::shape(
                format!("({}, {})", self.num_nodes(), self.num_boundary()),
                format!("({}, {})", u.interior().len(), u.boundary().len()),
            ));
        }
        Ok(())
    }

    /// Product-space stiffness applied blockwise: `(K_Ω u_Ω, K_Γ u_Γ)`.
    pub fn apply_stiffness(&self, u: &ProductVector) -> Result<ProductVector> {
        self.check(u)?;
        Ok(ProductVector::new(
            self.bulk.matvec(u.interior()),
            self.surface.matvec(u.boundary()),
        ))
    }

    pub fn apply_mass(&self, u: &ProductVector) -> Result<ProductVector> {
        self.check(u)?;
        Ok(ProductVector::new(
            u.interior().iter().zip(&self.bulk_mass).map(|(a, w)| a * w).collect(),
            u.boundary()
                .iter()
                .zip(&self.surface_mass)
                .map(|(a, w)| a * w)
                .collect(),
        ))
    }

    /// `Pᵀ r`: folds a product-space dual vector onto the nodes.
    pub fn restrict(&self, r: &ProductVector) -> Vec<f64> {
        let mut out = r.interior().to_vec();
        for (k, &node) in self.boundary_nodes.iter().enumerate() {
            out[node] += r.boundary()[k];
        }
        out
    }

    /// `P u`: duplicates nodal values onto the boundary.
    pub fn prolong(&self, nodal: &[f64]) -> ProductVector {
        let boundary = self.boundary_nodes.iter().map(|&n| nodal[n]).collect();
        ProductVector::coupled_unchecked(nodal.to_vec(), boundary)
    }

    /// Coupled-space `M`-inner product.
    pub fn mass_dot(&self, a: &[f64], b: &[f64]) -> f64 {
        wdot(&self.coupled_mass, a, b)
    }

    /// Coordinate-format text of the coupled stiffness followed by the
    /// coupled (diagonal) mass.
    pub fn to_coo_text(&self) -> (String, String) {
        let n = self.num_nodes();
        let mass = CsrMatrix::from_triplets(n, &(0..n).map(|i| (i, i, self.coupled_mass[i])).collect::<Vec<_>>());
        (self.coupled_stiffness.to_coo_text(), mass.to_coo_text())
    }
}

/// `ϱ(U, V) = Uᵀ K V` in the product space.
pub fn bilinear_rho(ops: &OperatorMatrices, u: &ProductVector, v: &ProductVector) -> Result<f64> {
    ops.check(u)?;
    ops.check(v)?;
    Ok(ops.bulk.bilinear(u.interior(), v.interior()) + ops.surface.bilinear(u.boundary(), v.boundary()))
}

/// A semilinear Wentzell problem
///
/// ```text
/// -Δu - σu + α₁(u) = f                          in Ω
/// b ∂u/∂n + c u - q b Δ_Γ u - σu + α₂(u) = g    on Γ
/// ```
///
/// where the spectral shift `σ` is zero except for resonance problems posed
/// at the ground-state eigenvalue.
#[derive(Clone, Debug)]
pub struct WentzellProblem {
    pub mesh: Mesh,
    pub q: f64,
    pub alpha1: Nonlinearity,
    pub alpha2: Nonlinearity,
    pub load: ProductVector,
    pub shift: f64,
}

impl WentzellProblem {
    pub fn new(mesh: Mesh, q: f64, alpha1: Nonlinearity, alpha2: Nonlinearity, load: ProductVector) -> Result<Self> {
        if !(q >= 0.0) || !q.is_finite() {
            return Err(Error::InvalidArgument(format!("q must be >= 0, got {q}")));
        }
        load.check_shape(&mesh)?;
        if load.interior().iter().chain(load.boundary()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("load must be finite".into()));
        }
        Ok(Self {
            mesh,
            q,
            alpha1,
            alpha2,
            load,
            shift: 0.0,
        })
    }

    /// Subtracts `σ` times the identity from the linear operator.
    pub fn with_shift(mut self, shift: f64) -> Self {
        self.shift = shift;
        self
    }

    pub fn assemble(&self) -> Result<OperatorMatrices> {
        assemble(&self.mesh, self.q)
    }

    pub fn is_linear(&self) -> bool {
        self.alpha1.is_zero() && self.alpha2.is_zero()
    }

    /// Aggregate load `∫_Ω f dx + ∫_Γ g dS/b`.
    pub fn total_load(&self) -> f64 {
        crate::geometry::integral_mu(&self.load, &self.mesh).expect("shape checked at construction")
    }
}

/// Nodal residual `Pᵀ[(K - σM) U + M α(U) - M F]` for a coupled nodal `u`.
pub(crate) fn residual_nodal(problem: &WentzellProblem, ops: &OperatorMatrices, u: &[f64]) -> Vec<f64> {
    let mut r = ops.coupled_stiffness.matvec(u);
    let f = &problem.load;
    for i in 0..u.len() {
        let w = ops.bulk_mass[i];
        r[i] += w * (problem.alpha1.eval(u[i]) - f.interior()[i]) - problem.shift * ops.coupled_mass[i] * u[i];
    }
    for (k, &node) in ops.boundary_nodes.iter().enumerate() {
        r[node] += ops.surface_mass[k] * (problem.alpha2.eval(u[node]) - f.boundary()[k]);
    }
    r
}

/// `sqrt(rᵀ M⁻¹ r)` on the coupled space.
pub(crate) fn dual_norm(ops: &OperatorMatrices, r: &[f64]) -> f64 {
    r.iter()
        .zip(&ops.coupled_mass)
        .map(|(r, m)| r * r / m)
        .sum::<f64>()
        .sqrt()
}

/// `M`-dual norm of the weak-form residual at a trace-coupled `U`; zero
/// exactly at discrete weak solutions.
pub fn weak_residual(problem: &WentzellProblem, ops: &OperatorMatrices, u: &ProductVector) -> Result<f64> {
    u.require_coupled(&problem.mesh)?;
    if ops.num_nodes() != problem.mesh.num_nodes() {
        return Err(Error::shape(problem.mesh.num_nodes(), ops.num_nodes()));
    }
    Ok(dual_norm(ops, &residual_nodal(problem, ops, u.interior())))
}
