//! Kernel representations, tropical positive-semidefiniteness tests,
//! the `φ + b₀ + φ` decomposition and feature-map factorizations.

use std::sync::Arc;

use serde::Serialize;

use crate::control::{lax_hopf, Lagrangian};
use crate::error::{Error, Result};
use crate::ext::{ExtReal, PointSet, DEFAULT_TOL};
use crate::matrix::Matrix;

/// A kernel tabulated on a finite point set.
#[derive(Clone, Debug, PartialEq)]
pub struct GramKernel {
    points: Arc<PointSet>,
    matrix: Matrix,
}

impl GramKernel {
    /// Every entry must be `< +inf`.
    pub fn new(points: Arc<PointSet>, matrix: Matrix) -> Result<Self> {
        if !matrix.is_square() || matrix.rows() != points.len() {
            return Err(Error::Invalid(format!(
                "gram of shape {}x{} on {} points",
                matrix.rows(),
                matrix.cols(),
                points.len()
            )));
        }
        check_below_pos_inf(&matrix)?;
        Ok(GramKernel { points, matrix })
    }

    pub fn points(&self) -> &Arc<PointSet> {
        &self.points
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }
}

pub(crate) fn check_below_pos_inf(matrix: &Matrix) -> Result<()> {
    for i in 0..matrix.rows() {
        for j in 0..matrix.cols() {
            if matrix.get(i, j).is_pos_inf() {
                return Err(Error::Invalid(format!("kernel entry ({i},{j}) is +inf")));
            }
        }
    }
    Ok(())
}

/// Named kernel families evaluated on demand.
#[derive(Clone, Debug)]
pub enum ClosedForm {
    /// `<x, y>`
    Conv,
    /// `-scale * |x - y|²`
    Sconv { scale: f64 },
    /// `-scale * |x - y|`
    Lip { scale: f64 },
    /// `0` on the diagonal, `-inf` elsewhere.
    Dirac,
    /// `-scale * |x - y|^p`
    PowerDistance { p: f64, scale: f64 },
    /// `-|t1 - t0| L((r1 - r0) / (t1 - t0))` on spacetime points.
    LaxHopf(Lagrangian),
}

impl ClosedForm {
    pub fn name(&self) -> &'static str {
        match self {
            ClosedForm::Conv => "conv",
            ClosedForm::Sconv { .. } => "sconv",
            ClosedForm::Lip { .. } => "lip",
            ClosedForm::Dirac => "dirac",
            ClosedForm::PowerDistance { .. } => "power_distance",
            ClosedForm::LaxHopf(_) => "lax_hopf",
        }
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<ExtReal> {
        if x.len() != y.len() {
            return Err(Error::Domain(format!(
                "points of dimension {} and {}",
                x.len(),
                y.len()
            )));
        }
        let dist = || x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let v = match self {
            ClosedForm::Conv => x.iter().zip(y).map(|(a, b)| a * b).sum(),
            ClosedForm::Sconv { scale } => {
                -scale * x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
            }
            ClosedForm::Lip { scale } => -scale * dist(),
            ClosedForm::Dirac => {
                return Ok(if x == y { ExtReal::ZERO } else { ExtReal::NEG_INF });
            }
            ClosedForm::PowerDistance { p, scale } => -scale * dist().powf(*p),
            ClosedForm::LaxHopf(l) => return lax_hopf(l, x, y),
        };
        ExtReal::new(v)
    }
}

/// A kernel either tabulated or given in closed form.
#[derive(Clone, Debug)]
pub enum KernelRep {
    Gram(GramKernel),
    ClosedForm(ClosedForm),
}

impl From<GramKernel> for KernelRep {
    fn from(g: GramKernel) -> Self {
        KernelRep::Gram(g)
    }
}

impl From<ClosedForm> for KernelRep {
    fn from(c: ClosedForm) -> Self {
        KernelRep::ClosedForm(c)
    }
}

impl KernelRep {
    /// `b(x, y)`.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<ExtReal> {
        match self {
            KernelRep::Gram(g) => {
                let i = g.points.require(x)?;
                let j = g.points.require(y)?;
                Ok(g.matrix.get(i, j))
            }
            KernelRep::ClosedForm(c) => c.eval(x, y),
        }
    }

    /// The matrix `b(x_i, y_j)` for `x_i` in `rows` and `y_j` in `cols`.
    pub fn gram(&self, rows: &PointSet, cols: &PointSet) -> Result<Matrix> {
        match self {
            KernelRep::Gram(g) => {
                let ri = rows.iter().map(|p| g.points.require(p)).collect::<Result<Vec<_>>>()?;
                let ci = cols.iter().map(|p| g.points.require(p)).collect::<Result<Vec<_>>>()?;
                Ok(g.matrix.select(&ri, &ci))
            }
            KernelRep::ClosedForm(c) => {
                let mut data = Vec::with_capacity(rows.len() * cols.len());
                for x in rows.iter() {
                    for y in cols.iter() {
                        let v = c.eval(x, y)?;
                        if v.is_pos_inf() {
                            return Err(Error::Invalid(format!("kernel is +inf at {x:?}, {y:?}")));
                        }
                        data.push(v);
                    }
                }
                Matrix::new(rows.len(), cols.len(), data)
            }
        }
    }

    /// Square gram on one point set.
    pub fn gram_on(&self, points: &PointSet) -> Result<Matrix> {
        self.gram(points, points)
    }
}

/// Which half of the tpsd definition failed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TpsdFailure {
    Symmetry,
    Positivity,
}

/// A pair of point indices violating the tpsd definition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TpsdWitness {
    pub i: usize,
    pub j: usize,
    pub failure: TpsdFailure,
}

fn require_gram_shape(gram: &Matrix) -> Result<()> {
    if !gram.is_square() {
        return Err(Error::Invalid(format!("gram must be square, got {}x{}", gram.rows(), gram.cols())));
    }
    check_below_pos_inf(gram)
}

/// `a >= b - tol` with exact comparison when either side is infinite.
fn ge_tol(a: ExtReal, b: ExtReal, tol: f64) -> bool {
    b.approx_le(a, tol)
}

/// Pairwise test: symmetry and `b(x,x) + b(y,y) >= b(x,y) + b(y,x)`.
///
/// Returns `Ok(None)` for a tpsd gram and the first violating pair otherwise.
pub fn is_tpsd_pairwise(gram: &Matrix, tol: f64) -> Result<Option<TpsdWitness>> {
    require_gram_shape(gram)?;
    let n = gram.rows();
    for i in 0..n {
        for j in i + 1..n {
            let (bij, bji) = (gram.get(i, j), gram.get(j, i));
            if !bij.approx_eq(bji, tol) {
                return Ok(Some(TpsdWitness { i, j, failure: TpsdFailure::Symmetry }));
            }
            let lhs = gram.get(i, i).lower_add(gram.get(j, j));
            let rhs = bij.lower_add(bji);
            if !ge_tol(lhs, rhs, tol) {
                return Ok(Some(TpsdWitness { i, j, failure: TpsdFailure::Positivity }));
            }
        }
    }
    Ok(None)
}

/// Evaluates `kernel` on `points` and runs [`is_tpsd_pairwise`].
pub fn is_tpsd_on(kernel: &KernelRep, points: &PointSet, tol: f64) -> Result<Option<TpsdWitness>> {
    is_tpsd_pairwise(&kernel.gram_on(points)?, tol)
}

/// A permutation `σ` of a subset violating `Σ b(x,x) >= Σ b(x, σ(x))`:
/// `σ(subset[k]) = image[k]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PermutationWitness {
    pub subset: Vec<usize>,
    pub image: Vec<usize>,
}

/// Largest subset size accepted by the permutation checks.
pub const MAX_PERMUTATION_SUBSET: usize = 8;

fn cycle_holds(gram: &Matrix, cycle: &[usize], tol: f64) -> bool {
    let k = cycle.len();
    let mut lhs = ExtReal::ZERO;
    let mut rhs = ExtReal::ZERO;
    for m in 0..k {
        lhs = lhs.lower_add(gram.get(cycle[m], cycle[m]));
        rhs = rhs.lower_add(gram.get(cycle[m], cycle[(m + 1) % k]));
    }
    ge_tol(lhs, rhs, tol)
}

/// Checks the permutation inequality over every subset of size at most
/// `m_max`. Each permutation splits into cycles, so only cycles whose
/// smallest index comes first are enumerated.
pub fn check_permutation_positivity(
    gram: &Matrix,
    m_max: usize,
    tol: f64,
) -> Result<Option<PermutationWitness>> {
    require_gram_shape(gram)?;
    if m_max > MAX_PERMUTATION_SUBSET {
        return Err(Error::Size(format!(
            "M_max = {m_max} exceeds the brute-force bound {MAX_PERMUTATION_SUBSET}"
        )));
    }
    let n = gram.rows();
    let mut cycle = Vec::with_capacity(m_max);
    let mut used = vec![false; n];
    for start in 0..n {
        cycle.clear();
        cycle.push(start);
        used[start] = true;
        let found = extend_cycles(gram, m_max, tol, &mut cycle, &mut used);
        used[start] = false;
        if found {
            let image = (0..cycle.len()).map(|m| cycle[(m + 1) % cycle.len()]).collect();
            return Ok(Some(PermutationWitness { subset: cycle, image }));
        }
    }
    Ok(None)
}

/// Depth-first extension of `cycle`; returns `true` with `cycle` holding
/// a violating cycle.
fn extend_cycles(
    gram: &Matrix,
    m_max: usize,
    tol: f64,
    cycle: &mut Vec<usize>,
    used: &mut [bool],
) -> bool {
    if cycle.len() >= 2 && !cycle_holds(gram, cycle, tol) {
        return true;
    }
    if cycle.len() == m_max {
        return false;
    }
    let start = cycle[0];
    for next in start + 1..gram.rows() {
        if used[next] {
            continue;
        }
        used[next] = true;
        cycle.push(next);
        if extend_cycles(gram, m_max, tol, cycle, used) {
            used[next] = false;
            return true;
        }
        cycle.pop();
        used[next] = false;
    }
    false
}

/// Exhaustive variant of [`check_permutation_positivity`]: all subsets and
/// all of their permutations. Kept as a debugging oracle.
pub fn check_permutation_positivity_exhaustive(
    gram: &Matrix,
    m_max: usize,
    tol: f64,
) -> Result<Option<PermutationWitness>> {
    require_gram_shape(gram)?;
    if m_max > MAX_PERMUTATION_SUBSET {
        return Err(Error::Size(format!(
            "M_max = {m_max} exceeds the brute-force bound {MAX_PERMUTATION_SUBSET}"
        )));
    }
    let n = gram.rows();
    for mask in 1u32..(1u32 << n) {
        let subset: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        if subset.len() > m_max {
            continue;
        }
        let mut perm = subset.clone();
        loop {
            let mut lhs = ExtReal::ZERO;
            let mut rhs = ExtReal::ZERO;
            for (&x, &y) in subset.iter().zip(&perm) {
                lhs = lhs.lower_add(gram.get(x, x));
                rhs = rhs.lower_add(gram.get(x, y));
            }
            if !ge_tol(lhs, rhs, tol) {
                return Ok(Some(PermutationWitness { subset, image: perm }));
            }
            if !next_permutation(&mut perm) {
                break;
            }
        }
    }
    Ok(None)
}

fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// `b(x,y) = φ(x) + b₀(x,y) + φ(y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition {
    pub phi: Vec<ExtReal>,
    pub b0: Matrix,
}

impl Decomposition {
    /// `φ(x) ∔̣ b₀(x,y) ∔̣ φ(y)`.
    pub fn reassemble(&self) -> Matrix {
        let n = self.phi.len();
        Matrix::from_fn(n, n, |i, j| self.phi[i].lower_add(self.b0.get(i, j)).lower_add(self.phi[j]))
    }
}

fn require_tpsd(gram: &Matrix) -> Result<()> {
    if let Some(w) = is_tpsd_pairwise(gram, DEFAULT_TOL)? {
        return Err(Error::Precondition(format!(
            "gram is not tpsd: {:?} fails at ({}, {})",
            w.failure, w.i, w.j
        )));
    }
    Ok(())
}

/// Splits a tpsd gram into `φ(x) = b(x,x)/2` and a symmetric,
/// diagonal-vanishing, nonpositive `b₀`. Entries of `b₀` touching a point
/// with infinite `φ` are set to `0`.
pub fn decompose_phi_b0(gram: &Matrix) -> Result<Decomposition> {
    require_tpsd(gram)?;
    let n = gram.rows();
    let phi: Vec<ExtReal> = (0..n).map(|i| gram.get(i, i).half()).collect();
    let b0 = Matrix::from_fn(n, n, |i, j| {
        if phi[i].is_finite() && phi[j].is_finite() {
            gram.get(i, j).lower_sub(phi[i]).lower_sub(phi[j])
        } else {
            ExtReal::ZERO
        }
    });
    Ok(Decomposition { phi, b0 })
}

/// Feature map `ψ : X × Z → R ∪ {-inf}` with `b(x,y) = max_z ψ(x,z) ∔̣ ψ(y,z)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMap {
    /// Labels of `Z`; for [`factorize`] the pair `(a, b)` of point indices.
    pub z_labels: Vec<(usize, usize)>,
    /// `psi.get(x, z)`.
    pub psi: Matrix,
}

impl FeatureMap {
    pub fn recompose(&self) -> Matrix {
        let n = self.psi.rows();
        Matrix::from_fn(n, n, |x, y| {
            self.psi
                .row(x)
                .iter()
                .zip(self.psi.row(y))
                .fold(ExtReal::NEG_INF, |acc, (&a, &b)| acc.max(a.lower_add(b)))
        })
    }

    /// `ψ = b` with `Z = X`. Valid whenever `b` is symmetric and idempotent,
    /// for instance the Lipschitz kernel.
    pub fn identity_factorization(gram: &Matrix) -> Result<FeatureMap> {
        require_gram_shape(gram)?;
        Ok(FeatureMap {
            z_labels: (0..gram.rows()).map(|i| (i, i)).collect(),
            psi: gram.clone(),
        })
    }
}

/// Constructive factorization with `Z = X × X`:
/// `ψ(x,(x,y)) = b(x,x)/2`, `ψ(x,(y,x)) = b(x,y) ∸̣ b(y,y)/2`, `-inf` elsewhere.
pub fn factorize(gram: &Matrix) -> Result<FeatureMap> {
    require_tpsd(gram)?;
    let n = gram.rows();
    let z_labels: Vec<(usize, usize)> = (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).collect();
    let mut psi = Matrix::filled(n, n * n, ExtReal::NEG_INF);
    for x in 0..n {
        for y in 0..n {
            psi.set(x, x * n + y, gram.get(x, x).half());
            if y != x {
                psi.set(x, y * n + x, gram.get(x, y).lower_sub(gram.get(y, y).half()));
            }
        }
    }
    Ok(FeatureMap { z_labels, psi })
}

/// Full Monge diagnostic for points in their given order: reports the first
/// `(i, j, m, n)` with `i < m`, `j < n` and `b(i,j) + b(m,n) < b(i,n) + b(m,j)`.
///
/// This supermodular orientation is the one whose principal minors give the
/// tpsd inequality.
pub fn monge_violation(gram: &Matrix, tol: f64) -> Option<(usize, usize, usize, usize)> {
    let (r, c) = (gram.rows(), gram.cols());
    for i in 0..r {
        for m in i + 1..r {
            for j in 0..c {
                for n in j + 1..c {
                    let lhs = gram.get(i, j).lower_add(gram.get(m, n));
                    let rhs = gram.get(i, n).lower_add(gram.get(m, j));
                    if !ge_tol(lhs, rhs, tol) {
                        return Some((i, j, m, n));
                    }
                }
            }
        }
    }
    None
}
