//! The sesquilinear operator `B̄f(x) = max_y b(x,y) ∸̣ f(y)`, the linear
//! operator `Bf(x) = max_y b(x,y) ∔̣ f(y)`, the duality product and the
//! checks built on them.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ext::{dirac_at, DiracKind, ExtReal, GridFunction, PointSet, DEFAULT_TOL};
use crate::kernels::KernelRep;
use crate::matrix::Matrix;

/// A kernel `b : X′ × X` tabulated as a matrix with rows indexed by the
/// codomain `X′` and columns by the domain `X`.
#[derive(Clone, Debug)]
pub struct ConjugationOp {
    matrix: Matrix,
    domain: Arc<PointSet>,
    codomain: Arc<PointSet>,
}

impl ConjugationOp {
    pub fn new(kernel: &KernelRep, domain: Arc<PointSet>, codomain: Arc<PointSet>) -> Result<Self> {
        let matrix = kernel.gram(&codomain, &domain)?;
        Ok(ConjugationOp { matrix, domain, codomain })
    }

    /// Square operator with `X′ = X`.
    pub fn square(kernel: &KernelRep, points: Arc<PointSet>) -> Result<Self> {
        Self::new(kernel, points.clone(), points)
    }

    pub fn from_matrix(matrix: Matrix, domain: Arc<PointSet>, codomain: Arc<PointSet>) -> Result<Self> {
        if matrix.rows() != codomain.len() || matrix.cols() != domain.len() {
            return Err(Error::Domain(format!(
                "matrix {}x{} for codomain of {} and domain of {} points",
                matrix.rows(),
                matrix.cols(),
                codomain.len(),
                domain.len()
            )));
        }
        crate::kernels::check_below_pos_inf(&matrix)?;
        Ok(ConjugationOp { matrix, domain, codomain })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn domain(&self) -> &Arc<PointSet> {
        &self.domain
    }

    pub fn codomain(&self) -> &Arc<PointSet> {
        &self.codomain
    }

    /// The adjoint operator, with the kernel transposed.
    pub fn transpose(&self) -> ConjugationOp {
        ConjugationOp {
            matrix: self.matrix.transpose(),
            domain: self.codomain.clone(),
            codomain: self.domain.clone(),
        }
    }

    pub fn is_square(&self) -> bool {
        Arc::ptr_eq(&self.domain, &self.codomain) || *self.domain == *self.codomain
    }

    /// Square with a symmetric kernel.
    pub fn is_symmetric(&self) -> bool {
        self.is_square() && self.matrix.is_symmetric(DEFAULT_TOL)
    }

    fn require_symmetric(&self) -> Result<()> {
        if !self.is_square() {
            return Err(Error::Precondition("operator is not square (X != X′)".into()));
        }
        if let Some((i, j)) = self.matrix.asymmetry(DEFAULT_TOL) {
            return Err(Error::Precondition(format!("kernel is not symmetric at ({i}, {j})")));
        }
        Ok(())
    }

    /// `B̄f(x) = max_y b(x,y) ∸̣ f(y)`.
    pub fn conj_sesqui(&self, f: &GridFunction) -> Result<GridFunction> {
        f.check_domain(&self.domain)?;
        let neg: Vec<ExtReal> = f.values().iter().map(|&v| -v).collect();
        GridFunction::new(self.codomain.clone(), self.matrix.maxplus_apply(&neg)?)
    }

    /// `Bf(x) = max_y b(x,y) ∔̣ f(y)`.
    pub fn apply_linear(&self, f: &GridFunction) -> Result<GridFunction> {
        f.check_domain(&self.domain)?;
        GridFunction::new(self.codomain.clone(), self.matrix.maxplus_apply(f.values())?)
    }

    /// Lowest-index maximizer of `y ↦ b(x,y) ∸̣ f(y)` for each `x`; `None`
    /// when every term is `-inf`.
    pub fn conj_argmax(&self, f: &GridFunction) -> Result<Vec<Option<usize>>> {
        f.check_domain(&self.domain)?;
        Ok((0..self.matrix.rows())
            .map(|x| {
                let mut best: Option<(usize, ExtReal)> = None;
                for (y, &b) in self.matrix.row(x).iter().enumerate() {
                    let v = b.lower_sub(f.get(y));
                    if v.is_neg_inf() {
                        continue;
                    }
                    if best.is_none_or(|(_, bv)| v > bv) {
                        best = Some((y, v));
                    }
                }
                best.map(|(y, _)| y)
            })
            .collect())
    }

    /// `B̄′B̄g`: the double conjugate through the adjoint. For a symmetric
    /// square operator this is `B̄B̄g`.
    pub fn biconjugate(&self, g: &GridFunction) -> Result<GridFunction> {
        self.transpose().conj_sesqui(&self.conj_sesqui(g)?)
    }

    /// Range membership: `g ∈ Rg(B)` iff `B̄′B̄g = g`.
    ///
    /// Square operators must be symmetric. Rectangular operators `X′ ≠ X`
    /// are tested through the adjoint, which describes the range of the
    /// sections `b(p, ·)` for `p ∈ X′`.
    pub fn is_in_range(&self, g: &GridFunction, tol: f64) -> Result<RangeCheck> {
        if self.is_square() {
            self.require_symmetric()?;
        }
        let biconjugate = self.biconjugate(g)?;
        let gap: Vec<ExtReal> = g
            .values()
            .iter()
            .zip(biconjugate.values())
            .map(|(&a, &b)| if a.approx_eq(b, tol) { ExtReal::ZERO } else { a.upper_sub(b) })
            .collect();
        let in_range = gap.iter().all(|v| *v == ExtReal::ZERO);
        Ok(RangeCheck { in_range, biconjugate, gap })
    }

    /// Membership in the range of the linear operator, `g = max_y b(·,y) ∔̣ a(y)`
    /// for some `a`, decided by `g = B̄B̄′g`. No symmetry is required.
    pub fn is_in_linear_range(&self, g: &GridFunction, tol: f64) -> Result<RangeCheck> {
        let adj = self.transpose();
        let biconjugate = self.conj_sesqui(&adj.conj_sesqui(g)?)?;
        g.check_domain(&self.codomain)?;
        let gap: Vec<ExtReal> = g
            .values()
            .iter()
            .zip(biconjugate.values())
            .map(|(&a, &b)| if a.approx_eq(b, tol) { ExtReal::ZERO } else { a.upper_sub(b) })
            .collect();
        let in_range = gap.iter().all(|v| *v == ExtReal::ZERO);
        Ok(RangeCheck { in_range, biconjugate, gap })
    }

    /// `d_B(f̂, ĝ) =½[⟨f̂,B̄f̂⟩ ∔ ⟨ĝ,B̄ĝ⟩ ∸ ⟨f̂,B̄ĝ⟩ ∸ ⟨ĝ,B̄f̂⟩]`.
    pub fn discrepancy(&self, f_hat: &GridFunction, g_hat: &GridFunction) -> Result<ExtReal> {
        self.require_symmetric()?;
        let [ff, gg, fg, gf] = self.pairings(f_hat, g_hat)?;
        Ok(ff.upper_add(gg).upper_sub(fg).upper_sub(gf).half())
    }

    /// `[⟨f̂,B̄f̂⟩, ⟨ĝ,B̄ĝ⟩, ⟨f̂,B̄ĝ⟩, ⟨ĝ,B̄f̂⟩]`.
    fn pairings(&self, f_hat: &GridFunction, g_hat: &GridFunction) -> Result<[ExtReal; 4]> {
        let bf = self.conj_sesqui(f_hat)?;
        let bg = self.conj_sesqui(g_hat)?;
        Ok([
            duality_product(f_hat, &bf)?,
            duality_product(g_hat, &bg)?,
            duality_product(f_hat, &bg)?,
            duality_product(g_hat, &bf)?,
        ])
    }

    /// Monotonicity `⟨f̂,B̄f̂⟩ ∔ ⟨ĝ,B̄ĝ⟩ ≥ ⟨f̂,B̄ĝ⟩ ∔̣ ⟨ĝ,B̄f̂⟩` and the
    /// Cauchy–Schwarz form `max(⟨f̂,B̄f̂⟩, ⟨ĝ,B̄ĝ⟩) ≥ ⟨f̂,B̄ĝ⟩`.
    pub fn check_monotone(&self, f_hat: &GridFunction, g_hat: &GridFunction) -> Result<MonotoneCheck> {
        self.require_symmetric()?;
        let [ff, gg, fg, gf] = self.pairings(f_hat, g_hat)?;
        Ok(MonotoneCheck {
            holds_pair: fg.lower_add(gf).approx_le(ff.upper_add(gg), DEFAULT_TOL),
            holds_max: fg.approx_le(ff.max(gg), DEFAULT_TOL),
        })
    }

    /// Cyclic forms over `f̂_1..f̂_M` with `f̂_{M+1} = f̂_1`: the sum form
    /// (upper sums on the left, lower sums on the right) and the max form.
    pub fn check_cyclic_monotone(&self, fs: &[GridFunction]) -> Result<MonotoneCheck> {
        self.require_symmetric()?;
        if fs.is_empty() {
            return Ok(MonotoneCheck { holds_pair: true, holds_max: true });
        }
        let conj = fs.iter().map(|f| self.conj_sesqui(f)).collect::<Result<Vec<_>>>()?;
        let m = fs.len();
        let mut diag_sum = ExtReal::ZERO;
        let mut diag_max = ExtReal::NEG_INF;
        let mut off_sum = ExtReal::ZERO;
        let mut off_max = ExtReal::NEG_INF;
        for k in 0..m {
            let d = duality_product(&fs[k], &conj[k])?;
            let o = duality_product(&fs[k], &conj[(k + 1) % m])?;
            diag_sum = diag_sum.upper_add(d);
            diag_max = diag_max.max(d);
            off_sum = off_sum.lower_add(o);
            off_max = off_max.max(o);
        }
        Ok(MonotoneCheck {
            holds_pair: off_sum.approx_le(diag_sum, DEFAULT_TOL),
            holds_max: off_max.approx_le(diag_max, DEFAULT_TOL),
        })
    }

    /// Funk kernel `c(x,y) = max_z b(z,x) ∸̣ b(z,y)` over the domain, with
    /// `z` ranging over the codomain.
    pub fn funk_kernel(&self) -> Matrix {
        let n = self.domain.len();
        Matrix::from_fn(n, n, |x, y| {
            (0..self.matrix.rows()).fold(ExtReal::NEG_INF, |acc, z| {
                acc.max(self.matrix.get(z, x).lower_sub(self.matrix.get(z, y)))
            })
        })
    }

    /// `⟨B̄g, B̄δ⊤_x⟩` for every domain point `x`; equals `g` on `Rg(B)`.
    pub fn reproduce(&self, g: &GridFunction) -> Result<GridFunction> {
        let bg = self.conj_sesqui(g)?;
        let values = (0..self.domain.len())
            .map(|x| {
                let bd = self.conj_sesqui(&dirac_at(&self.domain, x, DiracKind::Top))?;
                duality_product(&bg, &bd)
            })
            .collect::<Result<Vec<_>>>()?;
        GridFunction::new(self.domain.clone(), values)
    }
}

/// Outcome of [`ConjugationOp::is_in_range`].
#[derive(Clone, Debug, PartialEq)]
pub struct RangeCheck {
    pub in_range: bool,
    pub biconjugate: GridFunction,
    /// `g ∸ B̄B̄g`, zero where the two agree.
    pub gap: Vec<ExtReal>,
}

/// Outcome of the monotonicity checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct MonotoneCheck {
    pub holds_pair: bool,
    pub holds_max: bool,
}

/// `⟨ĝ, f⟩ = max_x f(x) ∸̣ ĝ(x)`.
pub fn duality_product(g_hat: &GridFunction, f: &GridFunction) -> Result<ExtReal> {
    if !g_hat.same_domain(f) {
        return Err(Error::Domain("duality product of functions on different point sets".into()));
    }
    Ok(g_hat
        .values()
        .iter()
        .zip(f.values())
        .fold(ExtReal::NEG_INF, |acc, (&g, &v)| acc.max(v.lower_sub(g))))
}
