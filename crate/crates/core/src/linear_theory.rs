//! Maximal kernels of function families, their closure operators,
//! idempotency and von Neumann regularity of max-plus matrices.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::ext::{ExtReal, GridFunction, PointSet};
use crate::matrix::Matrix;

/// A finite family of proper functions on a common point set, each with
/// values in `(-inf, +inf]` and finite somewhere.
#[derive(Clone, Debug)]
pub struct FunctionFamily {
    domain: Arc<PointSet>,
    members: Vec<GridFunction>,
}

impl FunctionFamily {
    pub fn new(domain: Arc<PointSet>, members: Vec<GridFunction>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Precondition("function family is empty".into()));
        }
        for (k, g) in members.iter().enumerate() {
            g.check_domain(&domain)?;
            if g.values().iter().any(|v| v.is_neg_inf()) {
                return Err(Error::Invalid(format!("member {k} takes the value -inf")));
            }
            if g.values().iter().all(|v| v.is_pos_inf()) {
                return Err(Error::Invalid(format!("member {k} is identically +inf")));
            }
        }
        Ok(FunctionFamily { domain, members })
    }

    pub fn domain(&self) -> &Arc<PointSet> {
        &self.domain
    }

    pub fn members(&self) -> &[GridFunction] {
        &self.members
    }
}

/// `c_G(x,y) = min_g g(x) ∸ g(y)`.
pub fn max_kernel_cg(family: &FunctionFamily) -> Matrix {
    let n = family.domain.len();
    Matrix::from_fn(n, n, |x, y| {
        family
            .members
            .iter()
            .fold(ExtReal::INF, |acc, g| acc.min(g.get(x).upper_sub(g.get(y))))
    })
}

fn require_square_on(c: &Matrix, f: &GridFunction) -> Result<()> {
    if !c.is_square() || c.rows() != f.len() {
        return Err(Error::Domain(format!(
            "kernel of shape {}x{} for a function on {} points",
            c.rows(),
            c.cols(),
            f.len()
        )));
    }
    Ok(())
}

/// `C_G f(x) = max_y c_G(x,y) ∔̣ f(y)`.
pub fn closure_cg(cg: &Matrix, f: &GridFunction) -> Result<GridFunction> {
    require_square_on(cg, f)?;
    GridFunction::new(f.domain().clone(), cg.maxplus_apply(f.values())?)
}

/// `f(x) ≤ f(y) ∸ c_G(y,x)` for all `x, y`.
pub fn is_lipschitz_member(cg: &Matrix, f: &GridFunction) -> Result<bool> {
    require_square_on(cg, f)?;
    let n = f.len();
    for x in 0..n {
        for y in 0..n {
            if f.get(x) > f.get(y).upper_sub(cg.get(y, x)) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Whether the max-plus square of `m` equals `m`, up to `tol` on finite entries.
pub fn is_idempotent(m: &Matrix, tol: f64) -> Result<bool> {
    if !m.is_square() {
        return Err(Error::Invalid("idempotency needs a square matrix".into()));
    }
    Ok(m.maxplus_mul(m)?.approx_eq(m, tol))
}

/// Outcome of [`von_neumann_regular`].
#[derive(Clone, Debug, PartialEq)]
pub struct Regularity {
    pub regular: bool,
    /// The greatest `A` with `B ⊗ A ⊗ B ≤ B`.
    pub witness: Matrix,
    /// `B ⊗ A* ⊗ B`.
    pub product: Matrix,
}

/// The residuated candidate `A* = (B \ B) / B`.
pub fn residuated_candidate(b: &Matrix) -> Result<Matrix> {
    Matrix::right_residual(&Matrix::left_residual(b, b)?, b)
}

/// Decides whether `B = B ⊗ A ⊗ B` has a solution. The product is monotone
/// in `A`, so it has one iff the greatest sub-solution `A*` is a solution.
pub fn von_neumann_regular(b: &Matrix, tol: f64) -> Result<Regularity> {
    if !b.is_square() {
        return Err(Error::Invalid("regularity needs a square matrix".into()));
    }
    let witness = residuated_candidate(b)?;
    let product = b.maxplus_mul(&witness)?.maxplus_mul(b)?;
    Ok(Regularity { regular: product.approx_eq(b, tol), witness, product })
}
