//! Maupertuis kernels on spacetime lattices, value functions and
//! inverse optimal control.
//!
//! Spacetime points are `(t, r_1, .., r_d)` and are indexed time-major:
//! point `layer * n_space + s` sits at time `t_layer` and space node `s`.
//! Trajectories are stencil paths: a step `(k, j)` advances `k` time layers
//! and `j` lattice cells, at cost `kΔt · L(t, r, jΔr / (kΔt))` evaluated at
//! the start of the step.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::conjugation::ConjugationOp;
use crate::error::{Error, Result};
use crate::ext::{ExtReal, GridFunction, PointSet, DEFAULT_TOL};
use crate::kernels::{GramKernel, KernelRep};
use crate::matrix::Matrix;
use crate::representer::{feasible_witnesses, SampleSet, WitnessOutcome};

/// Largest number of gram entries `N²` the DP will allocate.
pub const MAX_GRAM_ENTRIES: usize = 1_000_000;

type LagrangianFn = dyn Fn(f64, &[f64], &[f64]) -> f64 + Send + Sync;

/// A user-supplied `L(s, r, v)` with declared properties.
#[derive(Clone)]
pub struct CustomLagrangian {
    pub f: Arc<LagrangianFn>,
    pub convex: bool,
    pub state_independent: bool,
}

impl fmt::Debug for CustomLagrangian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomLagrangian")
            .field("convex", &self.convex)
            .field("state_independent", &self.state_independent)
            .finish_non_exhaustive()
    }
}

/// Running cost `L(s, r, v)`.
#[derive(Clone, Debug)]
pub enum Lagrangian {
    /// `scale · |v|²`
    Quadratic { scale: f64 },
    /// `scale · |v|₁`
    Absolute { scale: f64 },
    /// One-dimensional piecewise-linear interpolation of `(velocity, value)`
    /// knots, `+inf` outside the knot range.
    Table { velocities: Vec<f64>, values: Vec<f64> },
    Custom(CustomLagrangian),
}

impl Lagrangian {
    pub fn table(velocities: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if velocities.is_empty() || velocities.len() != values.len() {
            return Err(Error::Invalid("table needs matching, nonempty knot lists".into()));
        }
        if velocities.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invalid("table velocities must increase strictly".into()));
        }
        if values.iter().chain(&velocities).any(|v| !v.is_finite()) {
            return Err(Error::Invalid("table entries must be finite".into()));
        }
        Ok(Lagrangian::Table { velocities, values })
    }

    pub fn eval(&self, s: f64, r: &[f64], v: &[f64]) -> f64 {
        match self {
            Lagrangian::Quadratic { scale } => scale * v.iter().map(|x| x * x).sum::<f64>(),
            Lagrangian::Absolute { scale } => scale * v.iter().map(|x| x.abs()).sum::<f64>(),
            Lagrangian::Table { velocities, values } => {
                let &[x] = v else { return f64::INFINITY };
                let i = velocities.partition_point(|&k| k < x);
                if i < velocities.len() && velocities[i] == x {
                    values[i]
                } else if i == 0 || i == velocities.len() {
                    f64::INFINITY
                } else {
                    let (x0, x1) = (velocities[i - 1], velocities[i]);
                    let w = (x - x0) / (x1 - x0);
                    values[i - 1] * (1.0 - w) + values[i] * w
                }
            }
            Lagrangian::Custom(c) => (c.f)(s, r, v),
        }
    }

    pub fn is_convex(&self) -> bool {
        match self {
            Lagrangian::Quadratic { scale } | Lagrangian::Absolute { scale } => *scale >= 0.0,
            Lagrangian::Table { velocities, values } => {
                let slopes: Vec<f64> = velocities
                    .windows(2)
                    .zip(values.windows(2))
                    .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
                    .collect();
                slopes.windows(2).all(|s| s[0] <= s[1] + DEFAULT_TOL)
            }
            Lagrangian::Custom(c) => c.convex,
        }
    }

    pub fn is_state_independent(&self) -> bool {
        match self {
            Lagrangian::Custom(c) => c.state_independent,
            _ => true,
        }
    }
}

/// The Lax–Hopf kernel `-|t1 - t0| L((r1 - r0) / (t1 - t0))` for a convex,
/// state-independent `L`; `0` at `x0 = x1` and `-inf` for distinct points
/// at equal times.
pub fn lax_hopf(l: &Lagrangian, x0: &[f64], x1: &[f64]) -> Result<ExtReal> {
    if !l.is_convex() || !l.is_state_independent() {
        return Err(Error::Precondition(
            "the Lax–Hopf formula needs a convex, state-independent Lagrangian".into(),
        ));
    }
    if x0.len() != x1.len() || x0.len() < 2 {
        return Err(Error::Domain("Lax–Hopf needs two spacetime points (t, r..)".into()));
    }
    let dt = x1[0] - x0[0];
    if dt == 0.0 {
        return Ok(if x0[1..] == x1[1..] { ExtReal::ZERO } else { ExtReal::NEG_INF });
    }
    let v: Vec<f64> = x0[1..].iter().zip(&x1[1..]).map(|(a, b)| (b - a) / dt).collect();
    let cost = l.eval(x0[0], &x0[1..], &v);
    if cost.is_nan() {
        return Err(Error::NaN);
    }
    Ok(-ExtReal::from_f64(dt.abs() * cost))
}

/// A uniform lattice `lower + i·step` with `counts[d]` nodes per axis.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpaceGrid {
    pub lower: Vec<f64>,
    pub step: f64,
    pub counts: Vec<usize>,
}

impl SpaceGrid {
    pub fn new(lower: Vec<f64>, step: f64, counts: Vec<usize>) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::Invalid("space step must be positive".into()));
        }
        if lower.is_empty() || lower.len() != counts.len() || counts.contains(&0) {
            return Err(Error::Invalid("space grid needs a positive count per axis".into()));
        }
        Ok(SpaceGrid { lower, step, counts })
    }

    /// Lattice covering `[lower, upper]` per axis.
    pub fn uniform(lower: Vec<f64>, upper: Vec<f64>, step: f64) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::Invalid("bounds of different dimensions".into()));
        }
        let counts = lower
            .iter()
            .zip(&upper)
            .map(|(a, b)| ((b - a) / step).round() as usize + 1)
            .collect();
        Self::new(lower, step, counts)
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Lattice coordinates of node `s`, last axis fastest.
    pub fn cell(&self, mut s: usize) -> Vec<i64> {
        let mut cell = vec![0; self.dim()];
        for d in (0..self.dim()).rev() {
            cell[d] = (s % self.counts[d]) as i64;
            s /= self.counts[d];
        }
        cell
    }

    pub fn index(&self, cell: &[i64]) -> Option<usize> {
        let mut s = 0usize;
        for (d, &c) in cell.iter().enumerate() {
            if c < 0 || c as usize >= self.counts[d] {
                return None;
            }
            s = s * self.counts[d] + c as usize;
        }
        Some(s)
    }

    pub fn coords(&self, s: usize) -> Vec<f64> {
        self.cell(s)
            .iter()
            .zip(&self.lower)
            .map(|(&c, &l)| l + c as f64 * self.step)
            .collect()
    }
}

/// Uniform time grid `t0 + k·dt`, `k = 0..n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimeGrid {
    pub t0: f64,
    pub dt: f64,
    pub n: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, dt: f64, n: usize) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() || !t0.is_finite() || n == 0 {
            return Err(Error::Invalid("time grid needs dt > 0 and at least one time".into()));
        }
        Ok(TimeGrid { t0, dt, n })
    }

    /// Grid from `t0` to `t_final` with step `dt`.
    pub fn span(t0: f64, t_final: f64, dt: f64) -> Result<Self> {
        Self::new(t0, dt, ((t_final - t0) / dt).round() as usize + 1)
    }

    /// Accepts an explicit list and checks that it is uniformly increasing.
    pub fn from_times(times: &[f64]) -> Result<Self> {
        match times {
            [] => Err(Error::Invalid("empty time grid".into())),
            [t] => Self::new(*t, 1.0, 1),
            [t0, t1, ..] => {
                let dt = t1 - t0;
                let uniform = times
                    .iter()
                    .enumerate()
                    .all(|(k, t)| (t - (t0 + k as f64 * dt)).abs() <= 1e-9 * (1.0 + t.abs()));
                if !uniform {
                    return Err(Error::Invalid("time grid must be uniformly spaced".into()));
                }
                Self::new(*t0, dt, times.len())
            }
        }
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn final_time(&self) -> f64 {
        self.time(self.n - 1)
    }
}

/// One stencil move: `layers ≥ 1` time layers and an integer cell offset.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, serde::Deserialize)]
pub struct StencilStep {
    pub layers: usize,
    pub offset: Vec<i64>,
}

/// Single-layer moves with every offset component in `[-max_cells, max_cells]`.
pub fn single_layer_stencil(dim: usize, max_cells: i64) -> Vec<StencilStep> {
    multi_layer_stencil(dim, 1, max_cells)
}

/// Moves over `1..=max_layers` layers with offset components bounded by
/// `cells_per_layer · layers`, so the speed bound is the same for every step.
pub fn multi_layer_stencil(dim: usize, max_layers: usize, cells_per_layer: i64) -> Vec<StencilStep> {
    let mut out = Vec::new();
    for k in 1..=max_layers {
        let reach = cells_per_layer * k as i64;
        let width = (2 * reach + 1) as usize;
        for code in 0..width.pow(dim as u32) {
            let mut c = code;
            let offset = (0..dim)
                .map(|_| {
                    let v = (c % width) as i64 - reach;
                    c /= width;
                    v
                })
                .collect();
            out.push(StencilStep { layers: k, offset });
        }
    }
    out
}

/// Spacetime lattice, Lagrangian and stencil.
#[derive(Clone, Debug)]
pub struct MaupertuisProblem {
    time: TimeGrid,
    space: SpaceGrid,
    lagrangian: Lagrangian,
    stencil: Vec<StencilStep>,
    points: Arc<PointSet>,
    space_points: Arc<PointSet>,
}

impl MaupertuisProblem {
    pub fn new(time: TimeGrid, space: SpaceGrid, lagrangian: Lagrangian, stencil: Vec<StencilStep>) -> Result<Self> {
        if stencil.is_empty() {
            return Err(Error::Invalid("stencil is empty".into()));
        }
        for st in &stencil {
            if st.layers == 0 || st.offset.len() != space.dim() {
                return Err(Error::Invalid(format!("invalid stencil step {st:?}")));
            }
        }
        let n = time.n.checked_mul(space.len()).ok_or_else(|| Error::Size("grid too large".into()))?;
        if n.checked_mul(n).is_none_or(|e| e > MAX_GRAM_ENTRIES) {
            return Err(Error::Size(format!(
                "{n} spacetime points exceed the {MAX_GRAM_ENTRIES}-entry gram guard"
            )));
        }
        let space_points = Arc::new(PointSet::new((0..space.len()).map(|s| space.coords(s)).collect())?);
        let mut pts = Vec::with_capacity(n);
        for k in 0..time.n {
            for s in 0..space.len() {
                let mut p = vec![time.time(k)];
                p.extend(space.coords(s));
                pts.push(p);
            }
        }
        let points = Arc::new(PointSet::spacetime(pts)?);
        Ok(MaupertuisProblem { time, space, lagrangian, stencil, points, space_points })
    }

    pub fn time(&self) -> &TimeGrid {
        &self.time
    }

    pub fn space(&self) -> &SpaceGrid {
        &self.space
    }

    pub fn lagrangian(&self) -> &Lagrangian {
        &self.lagrangian
    }

    pub fn stencil(&self) -> &[StencilStep] {
        &self.stencil
    }

    /// All spacetime points, time-major.
    pub fn points(&self) -> &Arc<PointSet> {
        &self.points
    }

    /// The space lattice as a point set.
    pub fn space_points(&self) -> &Arc<PointSet> {
        &self.space_points
    }

    pub fn n_space(&self) -> usize {
        self.space.len()
    }

    pub fn index(&self, layer: usize, s: usize) -> usize {
        layer * self.n_space() + s
    }

    pub fn layer_of(&self, i: usize) -> usize {
        i / self.n_space()
    }

    /// Every step `(k, v)` has a mirror `(k, -v)`.
    pub fn is_reversible(&self) -> bool {
        self.stencil.iter().all(|st| {
            let mirror: Vec<i64> = st.offset.iter().map(|c| -c).collect();
            self.stencil.iter().any(|o| o.layers == st.layers && o.offset == mirror)
        })
    }

    pub fn require_reversible(&self) -> Result<()> {
        if self.is_reversible() {
            Ok(())
        } else {
            Err(Error::Precondition("stencil is not symmetric".into()))
        }
    }

    /// Checks `L ≥ 0` on every step the DP can take.
    pub fn require_nonnegative(&self) -> Result<()> {
        let costs = self.step_costs();
        if let Some(pos) = costs.iter().position(|c| c.is_nan() || *c < 0.0) {
            let q = pos % self.stencil.len();
            return Err(Error::Precondition(format!(
                "Lagrangian is negative on stencil step {:?}",
                self.stencil[q]
            )));
        }
        Ok(())
    }

    fn step_cost(&self, layer: usize, s: usize, st: &StencilStep) -> f64 {
        let span = st.layers as f64 * self.time.dt;
        let v: Vec<f64> = st.offset.iter().map(|&c| c as f64 * self.space.step / span).collect();
        span * self.lagrangian.eval(self.time.time(layer), &self.space.coords(s), &v)
    }

    /// `costs[(layer * n_space + s) * |stencil| + q]`.
    fn step_costs(&self) -> Vec<f64> {
        let ns = self.n_space();
        let nq = self.stencil.len();
        let mut out = Vec::with_capacity(self.time.n * ns * nq);
        if self.lagrangian.is_state_independent() {
            let row: Vec<f64> = self.stencil.iter().map(|st| self.step_cost(0, 0, st)).collect();
            for _ in 0..self.time.n * ns {
                out.extend_from_slice(&row);
            }
        } else {
            for layer in 0..self.time.n {
                for s in 0..ns {
                    for st in &self.stencil {
                        out.push(self.step_cost(layer, s, st));
                    }
                }
            }
        }
        out
    }

    fn targets(&self) -> Vec<Option<usize>> {
        let ns = self.n_space();
        let mut out = Vec::with_capacity(ns * self.stencil.len());
        for s in 0..ns {
            for st in &self.stencil {
                let cell: Vec<i64> = self.space.cell(s).iter().zip(&st.offset).map(|(a, b)| a + b).collect();
                out.push(self.space.index(&cell));
            }
        }
        out
    }

    /// Minimal forward actions `A(x0 → x1)` for `t1 ≥ t0`; `+inf` when
    /// unreachable or backwards in time.
    fn forward_actions(&self) -> Vec<f64> {
        let n = self.points.len();
        let ns = self.n_space();
        let nq = self.stencil.len();
        let costs = self.step_costs();
        let targets = self.targets();
        let mut out = vec![f64::INFINITY; n * n];
        let mut dist = vec![f64::INFINITY; n];
        for src in 0..n {
            let l0 = self.layer_of(src);
            dist[l0 * ns..].fill(f64::INFINITY);
            dist[src] = 0.0;
            for layer in l0..self.time.n {
                for s in 0..ns {
                    let here = layer * ns + s;
                    let d = dist[here];
                    if !d.is_finite() {
                        continue;
                    }
                    for (q, st) in self.stencil.iter().enumerate() {
                        let to_layer = layer + st.layers;
                        if to_layer >= self.time.n {
                            continue;
                        }
                        let Some(t) = targets[s * nq + q] else { continue };
                        let c = d + costs[here * nq + q];
                        let to = to_layer * ns + t;
                        if c < dist[to] {
                            dist[to] = c;
                        }
                    }
                }
            }
            out[src * n + l0 * ns..src * n + n].copy_from_slice(&dist[l0 * ns..]);
        }
        out
    }
}

/// Symmetric Maupertuis gram: `-A` between the earlier and the later
/// point, `0` on the diagonal, `-inf` for unreachable pairs and for
/// distinct points at equal times.
pub fn maupertuis_dp(problem: &MaupertuisProblem) -> Result<Matrix> {
    let n = problem.points.len();
    let fwd = problem.forward_actions();
    let t = |i: usize| problem.layer_of(i);
    Ok(Matrix::from_fn(n, n, |i, j| {
        let a = if t(j) >= t(i) { fwd[i * n + j] } else { fwd[j * n + i] };
        -ExtReal::from_f64(a)
    }))
}

/// Causal gram `b^asym`: `-A(x0 → x1)` for `t1 ≥ t0` and `-inf` otherwise.
pub fn maupertuis_dp_asym(problem: &MaupertuisProblem) -> Result<Matrix> {
    asymmetrize(&maupertuis_dp(problem)?, problem.points())
}

/// `(1 + δ⊤_{t1 ≥ t0}) b`: entries with `t1 < t0` become `-inf`.
pub fn asymmetrize(gram: &Matrix, points: &PointSet) -> Result<Matrix> {
    if !points.is_spacetime() || gram.rows() != points.len() || !gram.is_square() {
        return Err(Error::Domain("asymmetrize needs a gram on spacetime points".into()));
    }
    let n = points.len();
    let mut out = gram.clone();
    for i in 0..n {
        for j in 0..n {
            let v = gram.get(i, j);
            if v > ExtReal::ZERO {
                return Err(Error::Precondition(format!("positive entry {v} at ({i}, {j})")));
            }
            if points.time(j) < points.time(i) {
                out.set(i, j, ExtReal::NEG_INF);
            }
        }
    }
    Ok(out)
}

/// `b^{[t0,t1]}(r0, r1) = b((t0, r0), (t1, r1))` on the space lattice.
pub fn space_restricted(problem: &MaupertuisProblem, gram: &Matrix, layer0: usize, layer1: usize) -> Result<Matrix> {
    if layer0 >= problem.time.n || layer1 >= problem.time.n {
        return Err(Error::Domain("layer out of range".into()));
    }
    let ns = problem.n_space();
    Ok(Matrix::from_fn(ns, ns, |a, b| gram.get(problem.index(layer0, a), problem.index(layer1, b))))
}

/// Largest `|DP - Lax–Hopf|` over pairs where the DP entry is finite, with
/// the number of such pairs.
pub fn lax_hopf_gap(problem: &MaupertuisProblem, gram: &Matrix) -> Result<(f64, usize)> {
    let pts = problem.points();
    let mut worst = 0.0f64;
    let mut count = 0;
    for i in 0..pts.len() {
        for j in 0..pts.len() {
            let Some(dp) = gram.get(i, j).finite() else { continue };
            let hopf = lax_hopf(problem.lagrangian(), pts.point(i), pts.point(j))?;
            let Some(h) = hopf.finite() else {
                return Ok((f64::INFINITY, count));
            };
            worst = worst.max((dp - h).abs());
            count += 1;
        }
    }
    Ok((worst, count))
}

/// Backward DP `V(T,·) = ψ_T`, `V(x) = min_steps cost ∔ V(next)`.
pub fn value_function(problem: &MaupertuisProblem, psi: &GridFunction) -> Result<GridFunction> {
    psi.check_domain(problem.space_points())?;
    let ns = problem.n_space();
    let nt = problem.time.n;
    let nq = problem.stencil.len();
    let costs = problem.step_costs();
    let targets = problem.targets();
    let mut v = vec![ExtReal::INF; nt * ns];
    v[(nt - 1) * ns..].copy_from_slice(psi.values());
    for layer in (0..nt - 1).rev() {
        for s in 0..ns {
            let here = layer * ns + s;
            let mut best = ExtReal::INF;
            for (q, st) in problem.stencil.iter().enumerate() {
                let to_layer = layer + st.layers;
                if to_layer >= nt {
                    continue;
                }
                let Some(t) = targets[s * nq + q] else { continue };
                let c = ExtReal::from_f64(costs[here * nq + q]).upper_add(v[to_layer * ns + t]);
                best = best.min(c);
            }
            v[here] = best;
        }
    }
    GridFunction::new(problem.points().clone(), v)
}

/// Outcome of [`largest_subsolution_check`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubsolutionReport {
    /// `-V ∈ Rg(B_Maup)` for the symmetric kernel.
    pub neg_value_in_range: bool,
    /// `-V ∈ Rg(B^asym_Maup)`.
    pub neg_value_in_causal_range: bool,
    /// Random `V̂ ∈ Rg(B^asym_Maup)` with `V̂(T,·) = -ψ_T` that were tested.
    pub samples: usize,
    /// How many of them failed `V̂ ≥ -V`.
    pub violations: usize,
    /// How many random `V̂` with `V̂(T,·) = +ψ_T` failed `V̂ ≥ -V`.
    pub literal_sign_violations: usize,
}

impl SubsolutionReport {
    pub fn holds(&self) -> bool {
        self.neg_value_in_range && self.neg_value_in_causal_range && self.violations == 0
    }
}

/// Checks that `-V` lies in the range of the Maupertuis kernels and is
/// the smallest range element with terminal values `-ψ_T`, on `samples`
/// seeded random range elements.
pub fn largest_subsolution_check(
    problem: &MaupertuisProblem,
    psi: &GridFunction,
    samples: usize,
    seed: u64,
) -> Result<SubsolutionReport> {
    let v = value_function(problem, psi)?;
    let neg_v = v.map(|x| -x);
    let pts = problem.points().clone();
    let sym = maupertuis_dp(problem)?;
    let asym = asymmetrize(&sym, &pts)?;
    let sym_op = ConjugationOp::from_matrix(sym, pts.clone(), pts.clone())?;
    let asym_op = ConjugationOp::from_matrix(asym, pts.clone(), pts.clone())?;
    let neg_value_in_range = sym_op.is_in_range(&neg_v, DEFAULT_TOL)?.in_range;
    let neg_value_in_causal_range = asym_op.is_in_linear_range(&neg_v, DEFAULT_TOL)?.in_range;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ns = problem.n_space();
    let last = problem.time.n - 1;
    let mut violations = 0;
    let mut literal_sign_violations = 0;
    for _ in 0..samples {
        let mut coeffs: Vec<ExtReal> = (0..pts.len())
            .map(|_| {
                if rng.gen_bool(0.5) {
                    ExtReal::NEG_INF
                } else {
                    ExtReal::from_f64(rng.gen_range(-5.0..5.0))
                }
            })
            .collect();
        let mut literal = coeffs.clone();
        for s in 0..ns {
            coeffs[problem.index(last, s)] = -psi.get(s);
            literal[problem.index(last, s)] = psi.get(s);
        }
        let v_hat = asym_op.apply_linear(&GridFunction::new(pts.clone(), coeffs)?)?;
        if !neg_v.approx_le(&v_hat, DEFAULT_TOL) {
            violations += 1;
        }
        let v_lit = asym_op.apply_linear(&GridFunction::new(pts.clone(), literal)?)?;
        if !neg_v.approx_le(&v_lit, DEFAULT_TOL) {
            literal_sign_violations += 1;
        }
    }
    Ok(SubsolutionReport {
        neg_value_in_range,
        neg_value_in_causal_range,
        samples,
        violations,
        literal_sign_violations,
    })
}

/// Outcome of [`invert_terminal_cost`].
#[derive(Clone, Debug)]
pub enum TerminalCostInversion {
    Feasible {
        /// Witness space nodes `p_m`.
        witnesses: Vec<usize>,
        /// Reconstructed terminal cost on the space lattice.
        psi: GridFunction,
        /// Value function regenerated from `psi`.
        value: GridFunction,
    },
    Infeasible { blocking_index: usize },
}

/// Reconstructs an admissible terminal cost from samples
/// `ȳ_m = -V(t_{layer0}, r_m)`:
/// `ψ_T(r) = min_m δ⊤_{p_m}(r) ∔ b^{[t0,T]}(r_m, p_m) - ȳ_m`.
pub fn invert_terminal_cost(
    problem: &MaupertuisProblem,
    gram: &Matrix,
    layer0: usize,
    sample_nodes: &[usize],
    ys: &[f64],
) -> Result<TerminalCostInversion> {
    let last = problem.time.n - 1;
    let space_kernel = space_restricted(problem, gram, layer0, last)?;
    let space = problem.space_points().clone();
    let kernel = KernelRep::Gram(GramKernel::new(space.clone(), space_kernel.clone())?);
    if let Some(&bad) = sample_nodes.iter().find(|&&s| s >= space.len()) {
        return Err(Error::Domain(format!("sample node {bad} is not on the space lattice")));
    }
    let xs = Arc::new(PointSet::new(sample_nodes.iter().map(|&s| space.point(s).to_vec()).collect())?);
    let samples = SampleSet::new(xs, ys.to_vec(), space.clone())?;
    let witnesses = match feasible_witnesses(&samples, &kernel)? {
        WitnessOutcome::Feasible { witnesses } => witnesses,
        WitnessOutcome::Infeasible { blocking_index } => {
            return Ok(TerminalCostInversion::Infeasible { blocking_index })
        }
    };
    let mut psi = vec![ExtReal::INF; space.len()];
    for (m, &p) in witnesses.iter().enumerate() {
        let v = space_kernel.get(sample_nodes[m], p).lower_sub(ExtReal::from_f64(ys[m]));
        psi[p] = psi[p].min(v);
    }
    let psi = GridFunction::new(space, psi)?;
    let value = value_function(problem, &psi)?;
    Ok(TerminalCostInversion::Feasible { witnesses, psi, value })
}
