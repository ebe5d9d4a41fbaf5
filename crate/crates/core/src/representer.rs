//! Tropical interpolation and regression: feasibility witnesses, the
//! minimal interpolant `f⁰`, difference-constraint systems and loss
//! minimization over them.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ext::{ExtReal, GridFunction, PointSet, DEFAULT_TOL};
use crate::kernels::KernelRep;
use crate::linear_theory::is_idempotent;
use crate::matrix::Matrix;

/// Measurements `(x_m, ȳ_m)` and a finite set `X′` of candidate dual points.
#[derive(Clone, Debug)]
pub struct SampleSet {
    xs: Arc<PointSet>,
    ys: Vec<f64>,
    dual_candidates: Arc<PointSet>,
}

impl SampleSet {
    pub fn new(xs: Arc<PointSet>, ys: Vec<f64>, dual_candidates: Arc<PointSet>) -> Result<Self> {
        if xs.is_empty() {
            return Err(Error::Invalid("at least one sample is required".into()));
        }
        if xs.len() != ys.len() {
            return Err(Error::Invalid(format!("{} points but {} targets", xs.len(), ys.len())));
        }
        if let Some(m) = ys.iter().position(|y| !y.is_finite()) {
            return Err(Error::Invalid(format!("target {m} is not finite")));
        }
        if dual_candidates.is_empty() {
            return Err(Error::Invalid("the dual candidate set is empty".into()));
        }
        Ok(SampleSet { xs, ys, dual_candidates })
    }

    pub fn xs(&self) -> &Arc<PointSet> {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn dual_candidates(&self) -> &Arc<PointSet> {
        &self.dual_candidates
    }

    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }

    /// Same points and candidates with new targets.
    pub fn with_targets(&self, ys: Vec<f64>) -> Result<Self> {
        SampleSet::new(self.xs.clone(), ys, self.dual_candidates.clone())
    }

    /// `b(x_n, p)` with rows indexed by samples and columns by `X′`.
    fn gram(&self, kernel: &KernelRep) -> Result<Matrix> {
        kernel.gram(&self.xs, &self.dual_candidates)
    }
}

/// Bound `b(x_n,p) ∸̣ b(x_m,p)` on `y_n - y_m` when `p` is the dual point of `m`.
fn pair_bound(k: &Matrix, n: usize, m: usize, p: usize) -> ExtReal {
    k.get(n, p).lower_sub(k.get(m, p))
}

/// Largest violation `max_n bound(n,m,p) - (y_n - y_m)` of the constraints
/// in column `m`, or `+inf` when `b(x_m, p)` is not finite.
fn column_violation(k: &Matrix, ys: &[f64], m: usize, p: usize) -> f64 {
    if !k.get(m, p).is_finite() {
        return f64::INFINITY;
    }
    (0..ys.len())
        .map(|n| match pair_bound(k, n, m, p).finite() {
            Some(c) => c - (ys[n] - ys[m]),
            None => f64::NEG_INFINITY,
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Outcome of [`feasible_witnesses`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum WitnessOutcome {
    /// `witnesses[m]` indexes `X′`.
    Feasible { witnesses: Vec<usize> },
    /// No candidate works for sample `blocking_index` (0-based).
    Infeasible { blocking_index: usize },
}

/// For each sample `m`, the lowest-index `p ∈ X′` with `b(x_m,p)` finite
/// and `y_n - y_m ≥ b(x_n,p) ∸̣ b(x_m,p)` for all `n`, up to `1e-9`.
pub fn feasible_witnesses(samples: &SampleSet, kernel: &KernelRep) -> Result<WitnessOutcome> {
    let k = samples.gram(kernel)?;
    let mut witnesses = Vec::with_capacity(samples.len());
    for m in 0..samples.len() {
        match (0..k.cols()).find(|&p| column_violation(&k, &samples.ys, m, p) <= DEFAULT_TOL) {
            Some(p) => witnesses.push(p),
            None => return Ok(WitnessOutcome::Infeasible { blocking_index: m }),
        }
    }
    Ok(WitnessOutcome::Feasible { witnesses })
}

/// One term `b(·, p) ∸̣ b_xp + y` of `f⁰`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct F0Term {
    pub p: Vec<f64>,
    /// `b(x_m, p_m)`, finite.
    pub b_xp: f64,
    pub y: f64,
}

impl F0Term {
    /// The constant `y_m - b(x_m, p_m)` added to the section `b(·, p_m)`.
    pub fn offset(&self) -> f64 {
        self.y - self.b_xp
    }
}

/// `f⁰(x) = max_m b(x,p_m) ∸̣ b(x_m,p_m) + y_m`.
#[derive(Clone, Debug)]
pub struct F0 {
    kernel: KernelRep,
    terms: Vec<F0Term>,
}

impl F0 {
    /// Builds `f⁰` from arbitrary terms without checking interpolation.
    pub fn from_terms_unchecked(kernel: KernelRep, terms: Vec<F0Term>) -> Self {
        F0 { kernel, terms }
    }

    pub fn terms(&self) -> &[F0Term] {
        &self.terms
    }

    pub fn kernel(&self) -> &KernelRep {
        &self.kernel
    }

    pub fn eval(&self, x: &[f64]) -> Result<ExtReal> {
        let mut best = ExtReal::NEG_INF;
        for t in &self.terms {
            let v = self.kernel.eval(x, &t.p)?.lower_add(ExtReal::from_f64(t.offset()));
            best = best.max(v);
        }
        Ok(best)
    }

    pub fn eval_on(&self, points: &Arc<PointSet>) -> Result<GridFunction> {
        let values = points.iter().map(|x| self.eval(x)).collect::<Result<Vec<_>>>()?;
        GridFunction::new(points.clone(), values)
    }
}

/// Builds `f⁰` from witnesses given as indices into `X′`, checking that
/// they satisfy the interpolation constraints.
pub fn build_f0(samples: &SampleSet, witnesses: &[usize], kernel: &KernelRep) -> Result<F0> {
    if witnesses.len() != samples.len() {
        return Err(Error::Precondition(format!(
            "{} witnesses for {} samples",
            witnesses.len(),
            samples.len()
        )));
    }
    let k = samples.gram(kernel)?;
    let mut terms = Vec::with_capacity(samples.len());
    for (m, &p) in witnesses.iter().enumerate() {
        if p >= k.cols() {
            return Err(Error::Precondition(format!("witness {p} is not a candidate index")));
        }
        if column_violation(&k, &samples.ys, m, p) > DEFAULT_TOL {
            return Err(Error::Precondition(format!("candidate {p} is not a witness for sample {m}")));
        }
        terms.push(F0Term {
            p: samples.dual_candidates.point(p).to_vec(),
            b_xp: k.get(m, p).value(),
            y: samples.ys[m],
        });
    }
    Ok(F0 { kernel: kernel.clone(), terms })
}

/// Inequalities `y_n - y_m ≥ c` with optional boxes `lo ≤ y_i ≤ hi`.
#[derive(Clone, Debug, Default)]
pub struct DifferenceConstraintSystem {
    n_vars: usize,
    constraints: Vec<(usize, usize, f64)>,
    lower: Vec<Option<f64>>,
    upper: Vec<Option<f64>>,
}

/// Outcome of [`solve_difference_constraints`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum DcsOutcome {
    /// `maximal` is set when every variable is bounded above through the
    /// constraints; the assignment is then the componentwise maximum.
    Feasible { values: Vec<f64>, maximal: bool },
    /// A negative cycle of the constraint graph. Index `n_vars` stands for
    /// the box source `y = 0`.
    Infeasible { cycle: Vec<usize> },
}

impl DifferenceConstraintSystem {
    pub fn new(n_vars: usize) -> Self {
        DifferenceConstraintSystem {
            n_vars,
            constraints: Vec::new(),
            lower: vec![None; n_vars],
            upper: vec![None; n_vars],
        }
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    /// Adds `y_n - y_m ≥ c`. A `-inf` bound is vacuous and dropped; a `+inf`
    /// bound can never hold and is rejected.
    pub fn add(&mut self, n: usize, m: usize, c: ExtReal) -> Result<()> {
        if n >= self.n_vars || m >= self.n_vars {
            return Err(Error::Invalid(format!("constraint ({n}, {m}) out of range")));
        }
        if c.is_pos_inf() {
            return Err(Error::Invalid(format!("constraint y_{n} - y_{m} >= +inf")));
        }
        if let Some(c) = c.finite() {
            self.constraints.push((n, m, c));
        }
        Ok(())
    }

    /// Sets `lo ≤ y_i ≤ hi`; `None` leaves a side open.
    pub fn set_box(&mut self, i: usize, lo: Option<f64>, hi: Option<f64>) -> Result<()> {
        if i >= self.n_vars {
            return Err(Error::Invalid(format!("box on variable {i} out of range")));
        }
        if lo.is_some_and(|v| !v.is_finite()) || hi.is_some_and(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!("box on variable {i} must be finite")));
        }
        self.lower[i] = lo;
        self.upper[i] = hi;
        Ok(())
    }

    pub fn constraints(&self) -> &[(usize, usize, f64)] {
        &self.constraints
    }

    /// Edges `u → v` with weight `w` encoding `y_v ≤ y_u + w`; node
    /// `n_vars` is the box source.
    fn edges(&self) -> Vec<(usize, usize, f64)> {
        let s = self.n_vars;
        let mut edges: Vec<(usize, usize, f64)> =
            self.constraints.iter().map(|&(n, m, c)| (n, m, -c)).collect();
        for i in 0..self.n_vars {
            if let Some(hi) = self.upper[i] {
                edges.push((s, i, hi));
            }
            if let Some(lo) = self.lower[i] {
                edges.push((i, s, -lo));
            }
        }
        edges
    }

    /// Whether `values` satisfies every constraint and box up to `tol`.
    pub fn is_satisfied(&self, values: &[f64], tol: f64) -> bool {
        values.len() == self.n_vars
            && self.constraints.iter().all(|&(n, m, c)| values[n] - values[m] >= c - tol)
            && (0..self.n_vars).all(|i| {
                self.lower[i].is_none_or(|lo| values[i] >= lo - tol)
                    && self.upper[i].is_none_or(|hi| values[i] <= hi + tol)
            })
    }
}

/// Bellman–Ford relaxation from `sources`; returns distances or a
/// negative cycle.
fn bellman_ford(
    n_nodes: usize,
    edges: &[(usize, usize, f64)],
    sources: &[usize],
    slack: f64,
) -> std::result::Result<Vec<f64>, Vec<usize>> {
    let mut dist = vec![f64::INFINITY; n_nodes];
    let mut pred = vec![usize::MAX; n_nodes];
    for &s in sources {
        dist[s] = 0.0;
    }
    let mut last = None;
    for _ in 0..n_nodes {
        last = None;
        for &(u, v, w) in edges {
            if dist[u].is_finite() && dist[u] + w < dist[v] - slack {
                dist[v] = dist[u] + w;
                pred[v] = u;
                last = Some(v);
            }
        }
        if last.is_none() {
            return Ok(dist);
        }
    }
    let mut v = last.expect("relaxation happened in the last round");
    for _ in 0..n_nodes {
        v = pred[v];
    }
    let mut cycle = vec![v];
    let mut u = pred[v];
    while u != v {
        cycle.push(u);
        u = pred[u];
    }
    // pred walks edges backwards
    cycle.reverse();
    let start = (0..cycle.len()).min_by_key(|&i| cycle[i]).unwrap_or(0);
    cycle.rotate_left(start);
    Err(cycle)
}

/// Solves a difference-constraint system by shortest paths.
pub fn solve_difference_constraints(sys: &DifferenceConstraintSystem) -> DcsOutcome {
    let n = sys.n_vars + 1;
    let s = sys.n_vars;
    let edges = sys.edges();
    let slack = DEFAULT_TOL / n as f64;
    let all: Vec<usize> = (0..n).collect();
    let potentials = match bellman_ford(n, &edges, &all, slack) {
        Ok(d) => d,
        Err(cycle) => return DcsOutcome::Infeasible { cycle },
    };
    // near-zero cycles can slip under the slack in one pass but not the other
    let from_source = match bellman_ford(n, &edges, &[s], slack) {
        Ok(d) => d,
        Err(cycle) => return DcsOutcome::Infeasible { cycle },
    };
    if from_source[..sys.n_vars].iter().all(|d| d.is_finite()) {
        DcsOutcome::Feasible { values: from_source[..sys.n_vars].to_vec(), maximal: true }
    } else {
        let shift = potentials[s];
        let values = potentials[..sys.n_vars].iter().map(|p| p - shift).collect();
        DcsOutcome::Feasible { values, maximal: false }
    }
}

/// Regression loss.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    SupNorm,
    L1,
}

impl Loss {
    pub fn eval(self, y: &[f64], target: &[f64]) -> f64 {
        let d = y.iter().zip(target).map(|(a, b)| (a - b).abs());
        match self {
            Loss::SupNorm => d.fold(0.0, f64::max),
            Loss::L1 => d.sum(),
        }
    }
}

/// How dual points are chosen.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Mode {
    /// `p_m` given as indices into `X′`.
    FixedP(Vec<usize>),
    /// Optimize over `X′` as well.
    Search,
}

/// Result of [`regress`].
#[derive(Clone, Debug)]
pub struct Regression {
    pub y_star: Vec<f64>,
    /// Indices into `X′`.
    pub p_star: Vec<usize>,
    pub loss_value: f64,
    /// Set when the dual points came from a local search.
    pub heuristic: bool,
    pub f0: F0,
}

/// Joint searches over `X′^M` up to this many assignments are exhaustive.
pub const EXHAUSTIVE_SEARCH_LIMIT: usize = 200_000;

const SEARCH_ROUNDS: usize = 50;

fn fixed_p_system(k: &Matrix, p: &[usize]) -> Result<DifferenceConstraintSystem> {
    let n_samples = k.rows();
    let mut sys = DifferenceConstraintSystem::new(n_samples);
    for (m, &pm) in p.iter().enumerate() {
        if pm >= k.cols() {
            return Err(Error::Precondition(format!("dual point {pm} is not a candidate index")));
        }
        if !k.get(m, pm).is_finite() {
            return Err(Error::Precondition(format!(
                "b(x_{m}, p_{m}) is not finite for candidate {pm}"
            )));
        }
        for n in 0..n_samples {
            if n != m {
                sys.add(n, m, pair_bound(k, n, m, pm))?;
            }
        }
    }
    Ok(sys)
}

fn box_feasible(sys: &DifferenceConstraintSystem, target: &[f64], eps: f64) -> Option<Vec<f64>> {
    let mut sys = sys.clone();
    for (i, &t) in target.iter().enumerate() {
        sys.set_box(i, Some(t - eps), Some(t + eps)).ok()?;
    }
    match solve_difference_constraints(&sys) {
        DcsOutcome::Feasible { values, .. } => Some(values),
        DcsOutcome::Infeasible { .. } => None,
    }
}

/// Sup-norm fit for fixed constraints, by bisection on the box half-width.
fn fit_sup_norm(sys: &DifferenceConstraintSystem, target: &[f64]) -> Result<Vec<f64>> {
    if let DcsOutcome::Infeasible { cycle } = solve_difference_constraints(sys) {
        return Err(Error::Precondition(format!(
            "the dual points admit no values at all (positive cycle {cycle:?})"
        )));
    }
    if let Some(v) = box_feasible(sys, target, 0.0) {
        return Ok(v);
    }
    let spread = target.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - target.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut hi = spread.max(1.0);
    let mut best = None;
    for _ in 0..64 {
        if let Some(v) = box_feasible(sys, target, hi) {
            best = Some(v);
            break;
        }
        hi *= 2.0;
    }
    let mut best = best.ok_or_else(|| Error::Precondition("no box width is feasible".into()))?;
    let mut lo = 0.0;
    while hi - lo > DEFAULT_TOL {
        let mid = 0.5 * (lo + hi);
        match box_feasible(sys, target, mid) {
            Some(v) => {
                hi = mid;
                best = v;
            }
            None => lo = mid,
        }
    }
    Ok(best)
}

/// L1 fit for fixed constraints, solved exactly as a linear program.
fn fit_l1(sys: &DifferenceConstraintSystem, target: &[f64]) -> Result<Vec<f64>> {
    use minilp::{ComparisonOp, OptimizationDirection, Problem};

    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let ys: Vec<_> = target
        .iter()
        .map(|_| lp.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY)))
        .collect();
    for (i, &t) in target.iter().enumerate() {
        let dev = lp.add_var(1.0, (0.0, f64::INFINITY));
        lp.add_constraint([(dev, 1.0), (ys[i], -1.0)], ComparisonOp::Ge, -t);
        lp.add_constraint([(dev, 1.0), (ys[i], 1.0)], ComparisonOp::Ge, t);
    }
    for &(n, m, c) in sys.constraints() {
        lp.add_constraint([(ys[n], 1.0), (ys[m], -1.0)], ComparisonOp::Ge, c);
    }
    match lp.solve() {
        Ok(sol) => Ok(ys.iter().map(|&v| sol[v]).collect()),
        Err(minilp::Error::Infeasible) => Err(Error::Precondition(
            "the dual points admit no values at all".into(),
        )),
        Err(e) => Err(Error::Precondition(format!("linear program failed: {e}"))),
    }
}

fn fit_fixed(k: &Matrix, p: &[usize], target: &[f64], loss: Loss) -> Result<Vec<f64>> {
    let sys = fixed_p_system(k, p)?;
    match loss {
        Loss::SupNorm => fit_sup_norm(&sys, target),
        Loss::L1 => fit_l1(&sys, target),
    }
}

/// Lowest-index candidate minimizing the column violation at `y`.
fn best_column(k: &Matrix, y: &[f64], m: usize) -> usize {
    let mut best = (0, f64::INFINITY);
    for p in 0..k.cols() {
        let v = column_violation(k, y, m, p);
        if v < best.1 {
            best = (p, v);
        }
    }
    best.0
}

/// Minimizes the loss over `Rg(B)` interpolants of the form `f⁰`.
///
/// Sup-norm fits bisect the box half-width down to `1e-9`; L1 fits solve
/// the linear program exactly. In search mode the dual points are
/// enumerated when `|X′|^M ≤ EXHAUSTIVE_SEARCH_LIMIT` and otherwise found by
/// alternating witness scans with fixed-point solves, in which case the
/// result is flagged heuristic.
pub fn regress(samples: &SampleSet, kernel: &KernelRep, loss: Loss, mode: &Mode) -> Result<Regression> {
    let k = samples.gram(kernel)?;
    let target = &samples.ys;
    let (p_star, y_star, heuristic) = match mode {
        Mode::FixedP(p) => {
            if p.len() != samples.len() {
                return Err(Error::Precondition(format!(
                    "{} dual points for {} samples",
                    p.len(),
                    samples.len()
                )));
            }
            let y = fit_fixed(&k, p, target, loss)?;
            (p.clone(), y, false)
        }
        Mode::Search => {
            if let WitnessOutcome::Feasible { witnesses } = feasible_witnesses(samples, kernel)? {
                (witnesses, target.clone(), false)
            } else if let Some(total) = exhaustive_size(k.cols(), samples.len()) {
                let (p, y) = exhaustive_search(&k, target, loss, total)?;
                (p, y, false)
            } else {
                let (p, y) = alternating_search(&k, target, loss)?;
                (p, y, true)
            }
        }
    };
    let loss_value = loss.eval(&y_star, target);
    let fitted = samples.with_targets(y_star.clone())?;
    let f0 = f0_unchecked(&fitted, &k, &p_star, kernel);
    Ok(Regression { y_star, p_star, loss_value, heuristic, f0 })
}

fn f0_unchecked(samples: &SampleSet, k: &Matrix, p: &[usize], kernel: &KernelRep) -> F0 {
    let terms = p
        .iter()
        .enumerate()
        .map(|(m, &pm)| F0Term {
            p: samples.dual_candidates.point(pm).to_vec(),
            b_xp: k.get(m, pm).value(),
            y: samples.ys[m],
        })
        .collect();
    F0 { kernel: kernel.clone(), terms }
}

fn exhaustive_size(n_candidates: usize, n_samples: usize) -> Option<usize> {
    let mut total: usize = 1;
    for _ in 0..n_samples {
        total = total.checked_mul(n_candidates)?;
        if total > EXHAUSTIVE_SEARCH_LIMIT {
            return None;
        }
    }
    Some(total)
}

fn exhaustive_search(k: &Matrix, target: &[f64], loss: Loss, total: usize) -> Result<(Vec<usize>, Vec<f64>)> {
    let n_cand = k.cols();
    let mut best: Option<(f64, Vec<usize>, Vec<f64>)> = None;
    let mut p = vec![0usize; target.len()];
    for code in 0..total {
        let mut c = code;
        for slot in p.iter_mut() {
            *slot = c % n_cand;
            c /= n_cand;
        }
        let Ok(y) = fit_fixed(k, &p, target, loss) else { continue };
        let value = loss.eval(&y, target);
        if best.as_ref().is_none_or(|(b, _, _)| value < *b - DEFAULT_TOL) {
            best = Some((value, p.clone(), y));
        }
    }
    best.map(|(_, p, y)| (p, y))
        .ok_or_else(|| Error::Precondition("no assignment of dual points is feasible".into()))
}

fn alternating_search(k: &Matrix, target: &[f64], loss: Loss) -> Result<(Vec<usize>, Vec<f64>)> {
    let mut y = target.to_vec();
    let mut best: Option<(f64, Vec<usize>, Vec<f64>)> = None;
    let mut previous: Option<Vec<usize>> = None;
    for _ in 0..SEARCH_ROUNDS {
        let p: Vec<usize> = (0..target.len()).map(|m| best_column(k, &y, m)).collect();
        if previous.as_ref() == Some(&p) {
            break;
        }
        match fit_fixed(k, &p, target, loss) {
            Ok(fit) => {
                let value = loss.eval(&fit, target);
                if best.as_ref().is_none_or(|(b, _, _)| value < *b - DEFAULT_TOL) {
                    best = Some((value, p.clone(), fit.clone()));
                }
                y = fit;
            }
            Err(_) => break,
        }
        previous = Some(p);
    }
    best.map(|(_, p, y)| (p, y))
        .ok_or_else(|| Error::Precondition("local search found no feasible dual points".into()))
}

/// Runs [`regress`] for each `(α, kernel)` and keeps the smallest loss
/// (first on ties).
pub fn regress_kernel_family(
    samples: &SampleSet,
    family: &[(f64, KernelRep)],
    loss: Loss,
    mode: &Mode,
) -> Result<(f64, Regression)> {
    let mut best: Option<(f64, Regression)> = None;
    for (alpha, kernel) in family {
        let Ok(r) = regress(samples, kernel, loss, mode) else { continue };
        if best.as_ref().is_none_or(|(_, b)| r.loss_value < b.loss_value - DEFAULT_TOL) {
            best = Some((*alpha, r));
        }
    }
    best.ok_or_else(|| Error::Precondition("no kernel of the family admits a fit".into()))
}

/// A stopping cost `w` with `w(x_m) = -y*_m` and `+inf` elsewhere, with
/// the value-function generator `f⁰(x) = max_m b(x,x_m) + y*_m`.
#[derive(Clone, Debug)]
pub struct StoppingCost {
    pub w: GridFunction,
    pub f0: F0,
    pub regression: Regression,
}

/// Fits `y*` with `p_m = x_m` on an idempotent kernel and returns the
/// admissible stopping cost `w = min_m δ⊤_{x_m} - y*_m`.
pub fn reconstruct_stopping_cost(
    xs: Arc<PointSet>,
    ys: Vec<f64>,
    kernel: &KernelRep,
    grid: &Arc<PointSet>,
    loss: Loss,
) -> Result<StoppingCost> {
    let g = kernel.gram_on(grid)?;
    if !is_idempotent(&g, DEFAULT_TOL)? {
        return Err(Error::Precondition("kernel is not idempotent on the grid".into()));
    }
    let sample_idx = xs.iter().map(|x| grid.require(x)).collect::<Result<Vec<_>>>()?;
    let samples = SampleSet::new(xs.clone(), ys, xs.clone())?;
    let p: Vec<usize> = (0..samples.len()).collect();
    let regression = regress(&samples, kernel, loss, &Mode::FixedP(p))?;
    let mut w = vec![ExtReal::INF; grid.len()];
    for (m, &i) in sample_idx.iter().enumerate() {
        w[i] = ExtReal::from_f64(-regression.y_star[m]);
    }
    let w = GridFunction::new(grid.clone(), w)?;
    Ok(StoppingCost { w, f0: regression.f0.clone(), regression })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::ClosedForm;

    fn pts(v: &[f64]) -> Arc<PointSet> {
        Arc::new(PointSet::from_scalars(v).unwrap())
    }

    fn conv() -> KernelRep {
        ClosedForm::Conv.into()
    }

    fn samples(ys: &[f64]) -> SampleSet {
        SampleSet::new(pts(&[0.0, 1.0, 2.0]), ys.to_vec(), pts(&[-1.0, 0.0, 1.0])).unwrap()
    }

    #[test]
    fn convex_data_is_interpolated() {
        let s = samples(&[0.0, 0.0, 1.0]);
        let WitnessOutcome::Feasible { witnesses } = feasible_witnesses(&s, &conv()).unwrap() else {
            panic!("convex data must be feasible")
        };
        // lowest-index rule picks slope -1 for the first sample
        assert_eq!(witnesses, vec![0, 1, 2]);
        let f0 = build_f0(&s, &witnesses, &conv()).unwrap();
        for (x, y) in [(0.0, 0.0), (1.0, 0.0), (2.0, 1.0), (0.5, 0.0), (1.5, 0.5)] {
            assert_eq!(f0.eval(&[x]).unwrap(), ExtReal::from_f64(y));
        }
        assert!(build_f0(&s, &[2, 1, 2], &conv()).is_err());
    }

    #[test]
    fn concave_data_blocks_at_the_middle() {
        let s = samples(&[0.0, 1.0, 0.0]);
        assert_eq!(
            feasible_witnesses(&s, &conv()).unwrap(),
            WitnessOutcome::Infeasible { blocking_index: 1 }
        );
    }

    #[test]
    fn single_sample() {
        let s = SampleSet::new(pts(&[0.7]), vec![2.0], pts(&[-1.0, 3.0])).unwrap();
        assert_eq!(
            feasible_witnesses(&s, &conv()).unwrap(),
            WitnessOutcome::Feasible { witnesses: vec![0] }
        );
        let f0 = build_f0(&s, &[1], &conv()).unwrap();
        assert!(f0.eval(&[1.0]).unwrap().approx_eq(ExtReal::from_f64(3.0 - 2.1 + 2.0), 1e-12));
        for loss in [Loss::SupNorm, Loss::L1] {
            assert_eq!(regress(&s, &conv(), loss, &Mode::Search).unwrap().loss_value, 0.0);
        }
    }

    #[test]
    fn difference_constraints_examples() {
        let mut sys = DifferenceConstraintSystem::new(2);
        sys.add(1, 0, ExtReal::from(1)).unwrap();
        sys.add(0, 1, ExtReal::from(0)).unwrap();
        assert_eq!(solve_difference_constraints(&sys), DcsOutcome::Infeasible { cycle: vec![0, 1] });

        let mut sys = DifferenceConstraintSystem::new(2);
        sys.add(1, 0, ExtReal::from(-1)).unwrap();
        sys.set_box(0, Some(0.0), Some(0.0)).unwrap();
        sys.set_box(1, Some(0.0), Some(0.0)).unwrap();
        assert_eq!(
            solve_difference_constraints(&sys),
            DcsOutcome::Feasible { values: vec![0.0, 0.0], maximal: true }
        );

        assert!(sys.add(0, 1, ExtReal::INF).is_err());
        sys.add(0, 1, ExtReal::NEG_INF).unwrap();
        assert_eq!(sys.constraints().len(), 1);
    }

    #[test]
    fn box_conflict_cycle_goes_through_the_source() {
        let mut sys = DifferenceConstraintSystem::new(1);
        sys.set_box(0, Some(1.0), Some(0.0)).unwrap();
        assert_eq!(solve_difference_constraints(&sys), DcsOutcome::Infeasible { cycle: vec![0, 1] });
    }

    #[test]
    fn unbounded_variables_get_a_feasible_assignment() {
        let mut sys = DifferenceConstraintSystem::new(2);
        sys.add(1, 0, ExtReal::from(2)).unwrap();
        sys.set_box(0, Some(5.0), None).unwrap();
        let DcsOutcome::Feasible { values, maximal } = solve_difference_constraints(&sys) else {
            panic!("feasible system")
        };
        assert!(!maximal);
        assert!(sys.is_satisfied(&values, 1e-9));
    }

    #[test]
    fn exact_data_regresses_to_itself() {
        let s = samples(&[0.0, 0.0, 1.0]);
        for loss in [Loss::SupNorm, Loss::L1] {
            let r = regress(&s, &conv(), loss, &Mode::FixedP(vec![1, 1, 2])).unwrap();
            assert!(r.loss_value < 1e-9, "{loss:?}: {}", r.loss_value);
        }
    }

    #[test]
    fn concave_data_sup_norm_fit() {
        let s = samples(&[0.0, 1.0, 0.0]);
        let r = regress(&s, &conv(), Loss::SupNorm, &Mode::Search).unwrap();
        assert!(!r.heuristic);
        assert!((r.loss_value - 0.5).abs() < 1e-8, "{}", r.loss_value);
        let l1 = regress(&s, &conv(), Loss::L1, &Mode::Search).unwrap();
        assert!((l1.loss_value - 1.0).abs() < 1e-8, "{}", l1.loss_value);
    }

    #[test]
    fn incompatible_fixed_points_are_reported() {
        // slopes decreasing along increasing x leave no values at all
        let s = samples(&[0.0, 0.0, 0.0]);
        assert!(regress(&s, &conv(), Loss::SupNorm, &Mode::FixedP(vec![2, 1, 0])).is_err());
    }

    #[test]
    fn stopping_cost_singleton() {
        let grid = pts(&[0.0, 1.0, 2.0]);
        let lip: KernelRep = ClosedForm::Lip { scale: 1.0 }.into();
        let sc = reconstruct_stopping_cost(pts(&[1.0]), vec![4.0], &lip, &grid, Loss::SupNorm).unwrap();
        assert_eq!(sc.w.values(), &[ExtReal::INF, ExtReal::from(-4), ExtReal::INF]);
        assert!(reconstruct_stopping_cost(pts(&[1.0]), vec![4.0], &conv(), &grid, Loss::SupNorm).is_err());
    }
}
