//! Smallest eigenpairs of the generalized problem `K z = λ M z` on
//! trace-coupled vectors, null-space counting and the linear Fredholm
//! projector `F ↦ F - ⟨F, Z⟩ Z`.
//!
//! Small problems are solved densely (the mass is diagonal, so the pencil
//! reduces to a symmetric standard problem). Larger ones use block inverse
//! iteration with a fixed negative shift, banded Cholesky solves and
//! Rayleigh–Ritz on the block.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::geometry::ProductVector;
use crate::operator::{dual_norm, OperatorMatrices};
use crate::sparse::{dot, BandedCholesky};
use crate::{Error, Result};

/// Eigenvalue and eigenvector pairs, ascending.
type Pairs = Vec<(f64, Vec<f64>)>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum EigenMethod {
    Dense,
    ShiftInvert,
}

#[derive(Clone, Copy, Debug)]
pub struct EigenOptions {
    /// Problems with fewer unknowns are solved densely.
    pub dense_threshold: usize,
    pub block_size: usize,
    pub max_iter: usize,
    /// Relative residual tolerance, scaled by `max_i K_ii / M_ii`.
    pub rel_tol: f64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            dense_threshold: 2000,
            block_size: 6,
            max_iter: 500,
            rel_tol: 1e-11,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EigenResult {
    pub eigenvalue: f64,
    /// `M`-normalized, oriented so that `⟨Z, 1⟩ > 0`.
    pub vector: ProductVector,
    /// Second smallest eigenvalue, when available.
    pub next_eigenvalue: Option<f64>,
    pub iterations: usize,
    /// `‖K Z - λ M Z‖` in the `M⁻¹` norm.
    pub residual: f64,
    pub method: EigenMethod,
}

impl EigenResult {
    pub fn gap(&self) -> Option<f64> {
        self.next_eigenvalue.map(|n| n - self.eigenvalue)
    }

    pub fn min_value(&self) -> f64 {
        self.vector.interior().iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.vector.interior().iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `max_i K_ii / M_ii`, an upper estimate of the spectral radius scale.
pub fn operator_scale(ops: &OperatorMatrices) -> f64 {
    ops.coupled_stiffness()
        .diagonal()
        .iter()
        .zip(ops.coupled_mass())
        .map(|(k, m)| k / m)
        .fold(1e-300, f64::max)
}

fn residual(ops: &OperatorMatrices, lambda: f64, z: &[f64]) -> f64 {
    let mut r = ops.coupled_stiffness().matvec(z);
    for ((ri, m), zi) in r.iter_mut().zip(ops.coupled_mass()).zip(z) {
        *ri -= lambda * m * zi;
    }
    dual_norm(ops, &r)
}

/// The `count` smallest eigenpairs (ascending), with `M`-orthonormal
/// eigenvectors on the coupled node space, plus the iteration count.
pub fn smallest_eigenpairs(
    ops: &OperatorMatrices,
    count: usize,
    opts: &EigenOptions,
) -> Result<(Pairs, usize, EigenMethod)> {
    let n = ops.num_nodes();
    let count = count.min(n).max(1);
    if n < opts.dense_threshold {
        Ok((dense_pairs(ops, count), 1, EigenMethod::Dense))
    } else {
        let (pairs, it) = shift_invert_pairs(ops, count, opts)?;
        Ok((pairs, it, EigenMethod::ShiftInvert))
    }
}

fn dense_pairs(ops: &OperatorMatrices, count: usize) -> Vec<(f64, Vec<f64>)> {
    let n = ops.num_nodes();
    let inv_sqrt: Vec<f64> = ops.coupled_mass().iter().map(|m| 1.0 / m.sqrt()).collect();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for (i, j, v) in ops.coupled_stiffness().iter() {
        a[(i, j)] += v * inv_sqrt[i] * inv_sqrt[j];
    }
    let eig = SymmetricEigen::new(a);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    order
        .into_iter()
        .take(count)
        .map(|k| {
            let z = (0..n).map(|i| eig.eigenvectors[(i, k)] * inv_sqrt[i]).collect();
            (eig.eigenvalues[k], z)
        })
        .collect()
}

/// Deterministic start vectors: the constant plus a few low-frequency
/// perturbations seeded by a fixed linear congruential sequence.
fn start_block(n: usize, p: usize) -> Vec<Vec<f64>> {
    let mut state: u64 = 0x2545_F491_4F6C_DD1D;
    let mut next = move || {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
    };
    (0..p)
        .map(|k| {
            if k == 0 {
                vec![1.0; n]
            } else {
                (0..n).map(|_| next()).collect()
            }
        })
        .collect()
}

/// `M`-orthonormalizes the block in place (modified Gram–Schmidt, twice);
/// drops numerically dependent columns.
fn m_orthonormalize(block: &mut Vec<Vec<f64>>, mass: &[f64]) {
    let mdot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).zip(mass).map(|((x, y), m)| x * y * m).sum() };
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(block.len());
    for mut v in block.drain(..) {
        let norm0 = mdot(&v, &v).sqrt();
        for _ in 0..2 {
            for q in &out {
                let c = mdot(q, &v);
                v.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
        }
        let norm = mdot(&v, &v).sqrt();
        if norm > 1e-10 * norm0 && norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
            out.push(v);
        }
    }
    *block = out;
}

fn shift_invert_pairs(ops: &OperatorMatrices, count: usize, opts: &EigenOptions) -> Result<(Pairs, usize)> {
    let n = ops.num_nodes();
    let mass = ops.coupled_mass();
    let scale = operator_scale(ops);
    let sigma = -1e-6 * scale;
    let shift: Vec<f64> = mass.iter().map(|m| -sigma * m).collect();
    let chol = BandedCholesky::factor(ops.coupled_stiffness().to_banded(Some(&shift)))?;
    let p = opts.block_size.max(count + 2).min(n);

    let mut x = start_block(n, p);
    m_orthonormalize(&mut x, mass);
    let mut last_res = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let mut y: Vec<Vec<f64>> = x
            .iter()
            .map(|v| {
                let rhs: Vec<f64> = v.iter().zip(mass).map(|(a, m)| a * m).collect();
                chol.solve(&rhs)
            })
            .collect();
        m_orthonormalize(&mut y, mass);
        let q = y.len();
        let ky: Vec<Vec<f64>> = y.iter().map(|v| ops.coupled_stiffness().matvec(v)).collect();
        let mut g = DMatrix::<f64>::zeros(q, q);
        for i in 0..q {
            for j in 0..q {
                g[(i, j)] = 0.5 * (dot(&y[i], &ky[j]) + dot(&y[j], &ky[i]));
            }
        }
        let eig = SymmetricEigen::new(g);
        let mut order: Vec<usize> = (0..q).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        x = order
            .iter()
            .map(|&k| {
                let mut v = vec![0.0; n];
                for (j, yj) in y.iter().enumerate() {
                    let c = eig.eigenvectors[(j, k)];
                    v.iter_mut().zip(yj).for_each(|(a, b)| *a += c * b);
                }
                v
            })
            .collect();
        let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let res = (0..count.min(x.len()))
            .map(|k| residual(ops, values[k], &x[k]))
            .fold(0.0, f64::max);
        last_res = res;
        if res <= opts.rel_tol * scale {
            let pairs = values.into_iter().zip(x).take(count).collect();
            return Ok((pairs, it));
        }
    }
    Err(Error::EigenNonConvergence {
        iterations: opts.max_iter,
        residual: last_res,
    })
}

/// Minimal generalized eigenvalue with its positively oriented,
/// `M`-normalized eigenvector.
pub fn smallest_eigenpair(ops: &OperatorMatrices) -> Result<EigenResult> {
    smallest_eigenpair_with(ops, &EigenOptions::default())
}

pub fn smallest_eigenpair_with(ops: &OperatorMatrices, opts: &EigenOptions) -> Result<EigenResult> {
    let (pairs, iterations, method) = smallest_eigenpairs(ops, 2, opts)?;
    let (lambda, mut z) = pairs[0].clone();
    if ops.mass_dot(&z, &vec![1.0; z.len()]) < 0.0 {
        z.iter_mut().for_each(|v| *v = -*v);
    }
    let norm = ops.mass_dot(&z, &z).sqrt();
    z.iter_mut().for_each(|v| *v /= norm);
    let res = residual(ops, lambda, &z);
    Ok(EigenResult {
        eigenvalue: lambda,
        vector: ops.prolong(&z),
        next_eigenvalue: pairs.get(1).map(|p| p.0),
        iterations,
        residual: res,
        method,
    })
}

/// Number of generalized eigenvalues below `tol`. With the iterative solver
/// at most the block size can be reported.
pub fn null_space_dim(ops: &OperatorMatrices, tol: f64) -> Result<usize> {
    let opts = EigenOptions::default();
    let (pairs, _, _) = smallest_eigenpairs(ops, opts.block_size - 2, &opts)?;
    Ok(pairs.iter().filter(|(l, _)| *l < tol).count())
}

#[derive(Clone, Debug)]
pub struct Projection {
    /// `F - ⟨F, Z⟩ Z`, orthogonal to `Z`.
    pub range_part: ProductVector,
    /// `⟨F, Z⟩` in the product space.
    pub defect: f64,
}

fn product_dot(ops: &OperatorMatrices, a: &ProductVector, b: &ProductVector) -> f64 {
    dot(
        &a.interior()
            .iter()
            .zip(ops.bulk_mass())
            .map(|(x, w)| x * w)
            .collect::<Vec<_>>(),
        b.interior(),
    ) + dot(
        &a.boundary()
            .iter()
            .zip(ops.surface_mass())
            .map(|(x, w)| x * w)
            .collect::<Vec<_>>(),
        b.boundary(),
    )
}

/// Splits `F` into its component along the kernel direction `Z` and the
/// remainder, which lies in the range of the shifted operator.
pub fn fredholm_project(ops: &OperatorMatrices, z: &EigenResult, f: &ProductVector) -> Result<Projection> {
    let zv = &z.vector;
    if f.interior().len() != ops.num_nodes() || f.boundary().len() != ops.num_boundary() {
        return Err(Error::shape(ops.num_nodes(), f.interior().len()));
    }
    let norm = product_dot(ops, zv, zv).sqrt();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized(norm));
    }
    let defect = product_dot(ops, f, zv);
    let mut range_part = f.axpy(-defect, zv);
    // one refinement sweep against rounding
    let again = product_dot(ops, &range_part, zv);
    range_part = range_part.axpy(-again, zv);
    Ok(Projection { range_part, defect })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_interval_mesh, build_rectangle_mesh, BoundaryPoint, Mesh};
    use crate::operator::assemble;
    use approx::assert_relative_eq;

    fn one(_: BoundaryPoint) -> f64 {
        1.0
    }
    fn zero(_: BoundaryPoint) -> f64 {
        0.0
    }

    fn robin_mesh(n: usize) -> Mesh {
        let c = 1.0 + 0.5f64.tan();
        build_interval_mesh(0.0, 1.0, n, &one, &move |_| c).unwrap()
    }

    #[test]
    fn ground_state_1d_is_cosine() {
        let mesh = robin_mesh(100);
        let ops = assemble(&mesh, 0.0).unwrap();
        let eig = smallest_eigenpair(&ops).unwrap();
        assert!((eig.eigenvalue - 1.0).abs() < 1e-3);
        let scale = eig.vector.interior()[50];
        for (p, z) in mesh.coords().iter().zip(eig.vector.interior()) {
            assert!((z / scale - (p[0] - 0.5).cos()).abs() < 1e-3);
        }
        assert!(eig.min_value() > 0.0);
        assert!(eig.gap().unwrap() > 1.0);
    }

    #[test]
    fn constant_kernel_when_c_vanishes() {
        let mesh = build_interval_mesh(0.0, 1.0, 20, &one, &zero).unwrap();
        let ops = assemble(&mesh, 0.0).unwrap();
        let eig = smallest_eigenpair(&ops).unwrap();
        assert!(eig.eigenvalue.abs() < 1e-10);
        let expected = 1.0 / 3f64.sqrt();
        for z in eig.vector.interior() {
            assert_relative_eq!(*z, expected, epsilon = 1e-8);
        }
        assert_eq!(null_space_dim(&ops, 1e-8).unwrap(), 1);
    }

    #[test]
    fn null_space_with_positive_c() {
        let ops = assemble(&robin_mesh(20), 0.0).unwrap();
        assert_eq!(null_space_dim(&ops, 1e-8).unwrap(), 0);
        let one_sided = build_interval_mesh(0.0, 1.0, 20, &one, &|p| if p.x > 0.5 { 1.0 } else { 0.0 }).unwrap();
        let ops = assemble(&one_sided, 0.0).unwrap();
        assert_eq!(null_space_dim(&ops, 1e-8).unwrap(), 0);
    }

    #[test]
    fn shift_invert_agrees_with_dense() {
        let mesh = build_rectangle_mesh(1.0, 1.0, 12, 10, &|p| 1.0 + 0.5 * p.x, &|p| p.y).unwrap();
        let ops = assemble(&mesh, 0.3).unwrap();
        let dense = smallest_eigenpair(&ops).unwrap();
        let opts = EigenOptions {
            dense_threshold: 0,
            ..EigenOptions::default()
        };
        let iterative = smallest_eigenpair_with(&ops, &opts).unwrap();
        assert_eq!(dense.method, EigenMethod::Dense);
        assert_eq!(iterative.method, EigenMethod::ShiftInvert);
        assert_relative_eq!(dense.eigenvalue, iterative.eigenvalue, epsilon = 1e-9);
        assert_relative_eq!(
            dense.next_eigenvalue.unwrap(),
            iterative.next_eigenvalue.unwrap(),
            epsilon = 1e-8
        );
        assert!(dense.vector.max_abs_diff(&iterative.vector) < 1e-6);
    }

    #[test]
    fn projection_examples() {
        let mesh = build_interval_mesh(0.0, 1.0, 16, &one, &zero).unwrap();
        let ops = assemble(&mesh, 0.0).unwrap();
        let eig = smallest_eigenpair(&ops).unwrap();
        let ones = ProductVector::constant(&mesh, 1.0);
        let proj = fredholm_project(&ops, &eig, &ones).unwrap();
        assert_relative_eq!(proj.defect, 3f64.sqrt(), epsilon = 1e-10);

        let n = mesh.num_nodes();
        let f = ProductVector::new(vec![0.0; n], vec![1.0, -1.0]);
        let proj = fredholm_project(&ops, &eig, &f).unwrap();
        assert!(proj.defect.abs() < 1e-12);
        assert!(proj.range_part.max_abs_diff(&f) < 1e-12);
    }

    #[test]
    fn unnormalized_eigenvector_rejected() {
        let mesh = build_interval_mesh(0.0, 1.0, 8, &one, &zero).unwrap();
        let ops = assemble(&mesh, 0.0).unwrap();
        let mut eig = smallest_eigenpair(&ops).unwrap();
        eig.vector = eig.vector.scaled(2.0);
        assert!(matches!(
            fredholm_project(&ops, &eig, &ProductVector::zeros(&mesh)),
            Err(Error::NotNormalized(_))
        ));
    }
}
