use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::json;

use tropkern::control::{
    invert_terminal_cost as invert_terminal, largest_subsolution_check, lax_hopf_gap, maupertuis_dp, maupertuis_dp_asym,
    value_function as backward_value, TerminalCostInversion,
};
use tropkern::io::{KernelSpec, PointsSpec, ProblemSpec};
use tropkern::kernels::{check_permutation_positivity, decompose_phi_b0, factorize as factor, is_tpsd_pairwise, MAX_PERMUTATION_SUBSET};
use tropkern::linear_theory::{closure_cg, is_idempotent, is_lipschitz_member, max_kernel_cg, von_neumann_regular, FunctionFamily};
use tropkern::representer::{
    build_f0, feasible_witnesses, reconstruct_stopping_cost, regress as fit, Loss, Mode, SampleSet, WitnessOutcome, F0,
};
use tropkern::{ConjugationOp, Error, ExtReal, GramKernel, GridFunction, KernelRep, Matrix, PointSet};

use crate::output::{function_table, pair_table, Artifacts};
use crate::{parse, CliError, CliResult, Ctx};

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Lib(Error::Invalid(msg.into()))
}

/// The kernel and the points it is evaluated on: explicit `points`, or
/// the gram's own points.
fn kernel_on(kernel: &KernelSpec, points: &Option<PointsSpec>) -> CliResult<(KernelRep, Arc<PointSet>)> {
    let k = kernel.build()?;
    let pts = match (points, &k) {
        (Some(p), _) => p.build()?,
        (None, KernelRep::Gram(g)) => g.points().clone(),
        (None, KernelRep::ClosedForm(_)) => return Err(invalid("closed-form kernels need \"points\"")),
    };
    Ok((k, pts))
}

fn function_on(points: &Arc<PointSet>, values: Vec<ExtReal>, field: &str) -> CliResult<GridFunction> {
    if values.len() != points.len() {
        return Err(invalid(format!("{field} has {} values for {} points", values.len(), points.len())));
    }
    Ok(GridFunction::new(points.clone(), values)?)
}

fn random_function(rng: &mut ChaCha8Rng, points: &Arc<PointSet>) -> GridFunction {
    let v = (0..points.len())
        .map(|_| match rng.gen_range(0..10) {
            0 => ExtReal::INF,
            1 => ExtReal::NEG_INF,
            _ => ExtReal::from_f64(rng.gen_range(-5.0..5.0)),
        })
        .collect();
    GridFunction::new(points.clone(), v).expect("sized to the points")
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckTpsdInput {
    kernel: KernelSpec,
    #[serde(default)]
    points: Option<PointsSpec>,
    #[serde(default)]
    m_max: Option<usize>,
    /// Random function pairs for the monotonicity checks.
    #[serde(default)]
    monotone_samples: usize,
}

pub fn check_tpsd(text: &str, ctx: &Ctx) -> CliResult<Artifacts> {
    let input: CheckTpsdInput = parse(text)?;
    let (k, pts) = kernel_on(&input.kernel, &input.points)?;
    let gram = k.gram_on(&pts)?;
    let witness = is_tpsd_pairwise(&gram, ctx.tol)?;
    let m_max = input.m_max.unwrap_or(pts.len().min(MAX_PERMUTATION_SUBSET));
    let perm = check_permutation_positivity(&gram, m_max, ctx.tol)?;
    let mut out = json!({
        "tpsd": witness.is_none(),
        "witness": witness,
        "permutation": {"m_max": m_max, "holds": perm.is_none(), "witness": perm},
    });
    if input.monotone_samples > 0 && gram.is_symmetric(ctx.tol) {
        let op = ConjugationOp::from_matrix(gram, pts.clone(), pts.clone())?;
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
        let mut violations = 0;
        for _ in 0..input.monotone_samples {
            let f = random_function(&mut rng, &pts);
            let g = random_function(&mut rng, &pts);
            let m = op.check_monotone(&f, &g)?;
            violations += (!m.holds_pair || !m.holds_max) as usize;
        }
        out["monotone"] = json!({"samples": input.monotone_samples, "violations": violations, "seed": ctx.seed});
    }
    Ok(Artifacts::ok(out))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct KernelInput {
    kernel: KernelSpec,
    #[serde(default)]
    points: Option<PointsSpec>,
}

pub fn factorize(text: &str, _ctx: &Ctx) -> CliResult<Artifacts> {
    let input: KernelInput = parse(text)?;
    let (k, pts) = kernel_on(&input.kernel, &input.points)?;
    let gram = k.gram_on(&pts)?;
    let d = decompose_phi_b0(&gram)?;
    let fm = factor(&gram)?;
    Ok(Artifacts::ok(json!({
        "phi": d.phi,
        "b0": d.b0,
        "z_labels": fm.z_labels,
        "psi": fm.psi,
        "recomposes": fm.recompose() == gram,
    })))
}

#[derive(Deserialize, Default, Clone, Copy)]
#[serde(rename_all = "snake_case")]
enum Operator {
    #[default]
    Sesqui,
    Linear,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConjugateInput {
    kernel: KernelSpec,
    #[serde(default)]
    points: Option<PointsSpec>,
    /// Output points; defaults to `points`.
    #[serde(default)]
    codomain: Option<PointsSpec>,
    f: Vec<ExtReal>,
    #[serde(default)]
    operator: Operator,
}

pub fn conjugate(text: &str, _ctx: &Ctx) -> CliResult<Artifacts> {
    let input: ConjugateInput = parse(text)?;
    let (k, dom) = kernel_on(&input.kernel, &input.points)?;
    let cod = match &input.codomain {
        Some(c) => c.build()?,
        None => dom.clone(),
    };
    let op = ConjugationOp::new(&k, dom.clone(), cod)?;
    let f = function_on(&dom, input.f, "f")?;
    let (result, argmax) = match input.operator {
        Operator::Sesqui => (op.conj_sesqui(&f)?, Some(op.conj_argmax(&f)?)),
        Operator::Linear => (op.apply_linear(&f)?, None),
    };
    let mut out = json!({"values": result.values()});
    if let Some(a) = argmax {
        out["argmax"] = json!(a);
    }
    Ok(Artifacts::with_csv(out, function_table(&result)))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MembershipInput {
    kernel: KernelSpec,
    #[serde(default)]
    points: Option<PointsSpec>,
    /// Section points `X′` when different from `points`.
    #[serde(default)]
    dual_candidates: Option<PointsSpec>,
    g: Vec<ExtReal>,
}

fn operator_with_dual(k: &KernelRep, pts: &Arc<PointSet>, dual: &Option<PointsSpec>) -> CliResult<ConjugationOp> {
    Ok(match dual {
        Some(d) => ConjugationOp::new(k, d.build()?, pts.clone())?.transpose(),
        None => ConjugationOp::square(k, pts.clone())?,
    })
}

pub fn membership(text: &str, ctx: &Ctx) -> CliResult<Artifacts> {
    let input: MembershipInput = parse(text)?;
    let (k, pts) = kernel_on(&input.kernel, &input.points)?;
    let op = operator_with_dual(&k, &pts, &input.dual_candidates)?;
    let g = function_on(&pts, input.g, "g")?;
    let r = op.is_in_range(&g, ctx.tol)?;
    let out = json!({"in_range": r.in_range, "biconjugate": r.biconjugate.values(), "gap": r.gap});
    Ok(Artifacts::with_csv(out, function_table(&r.biconjugate)))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FunkInput {
    kernel: KernelSpec,
    #[serde(default)]
    points: Option<PointsSpec>,
    #[serde(default)]
    dual_candidates: Option<PointsSpec>,
}

pub fn funk(text: &str, _ctx: &Ctx) -> CliResult<Artifacts> {
    let input: FunkInput = parse(text)?;
    let (k, pts) = kernel_on(&input.kernel, &input.points)?;
    let z = match &input.dual_candidates {
        Some(d) => d.build()?,
        None => pts.clone(),
    };
    // rows of the operator range over z, columns over the points
    let op = ConjugationOp::new(&k, pts.clone(), z)?;
    Ok(Artifacts::ok(json!({"matrix": op.funk_kernel()})))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CgInput {
    points: PointsSpec,
    family: Vec<Vec<ExtReal>>,
    #[serde(default)]
    f: Option<Vec<ExtReal>>,
}

pub fn cg_kernel(text: &str, ctx: &Ctx) -> CliResult<Artifacts> {
    let input: CgInput = parse(text)?;
    let pts = input.points.build()?;
    let members = input
        .family
        .into_iter()
        .enumerate()
        .map(|(i, v)| function_on(&pts, v, &format!("family[{i}]")))
        .collect::<CliResult<Vec<_>>>()?;
    let cg = max_kernel_cg(&FunctionFamily::new(pts.clone(), members)?);
    let mut out = json!({"matrix": cg, "idempotent": is_idempotent(&cg, ctx.tol)?});
    if let Some(f) = input.f {
        let f = function_on(&pts, f, "f")?;
        let closure = closure_cg(&cg, &f)?;
        out["closure"] = json!(closure.values());
        out["lipschitz"] = json!(is_lipschitz_member(&cg, &f)?);
        return Ok(Artifacts::with_csv(out, function_table(&closure)));
    }
    Ok(Artifacts::ok(out))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RegularityInput {
    #[serde(default)]
    matrix: Option<Matrix>,
    #[serde(default)]
    kernel: Option<KernelSpec>,
    #[serde(default)]
    points: Option<PointsSpec>,
}

pub fn regularity(text: &str, ctx: &Ctx) -> CliResult<Artifacts> {
    let input: RegularityInput = parse(text)?;
    let m = match (input.matrix, &input.kernel) {
        (Some(m), None) => m,
        (None, Some(k)) => {
            let (k, pts) = kernel_on(k, &input.points)?;
            k.gram_on(&pts)?
        }
        _ => return Err(invalid("give exactly one of \"matrix\" and \"kernel\"")),
    };
    let reg = von_neumann_regular(&m, ctx.tol)?;
    Ok(Artifacts::ok(json!({
        "idempotent": is_idempotent(&m, ctx.tol)?,
        "von_neumann_regular": reg.regular,
        "witness": reg.witness,
        "product": reg.product,
    })))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Samples {
    xs: PointsSpec,
    ys: Vec<f64>,
}

#[derive(Deserialize, Default)]
#[serde(rename_all = "snake_case")]
enum ModeSpec {
    #[default]
    Search,
    FixedP(PointsSpec),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RepresenterInput {
    kernel: KernelSpec,
    samples: Samples,
    dual_candidates: PointsSpec,
    #[serde(default = "default_loss")]
    loss: Loss,
    #[serde(default)]
    mode: ModeSpec,
}

fn default_loss() -> Loss {
    Loss::SupNorm
}

fn f0_json(f0: &F0) -> serde_json::Value {
    let terms: Vec<_> = f0.terms().iter().map(|t| json!([t.p, t.offset()])).collect();
    json!({"terms": terms})
}

fn sample_set(input: &RepresenterInput) -> CliResult<(KernelRep, SampleSet)> {
    let k = input.kernel.build()?;
    let xs = input.samples.xs.build()?;
    let s = SampleSet::new(xs, input.samples.ys.clone(), input.dual_candidates.build()?)?;
    Ok((k, s))
}

fn dual_points(s: &SampleSet, idx: &[usize]) -> Vec<Vec<f64>> {
    idx.iter().map(|&p| s.dual_candidates().point(p).to_vec()).collect()
}

pub fn interpolate(text: &str, _ctx: &Ctx) -> CliResult<Artifacts> {
    let input: RepresenterInput = parse(text)?;
    let (k, s) = sample_set(&input)?;
    match feasible_witnesses(&s, &k)? {
        WitnessOutcome::Feasible { witnesses } => {
            let f0 = build_f0(&s, &witnesses, &k)?;
            Ok(Artifacts::ok(json!({
                "feasible": true,
                "witnesses": dual_points(&s, &witnesses),
                "f0": f0_json(&f0),
            })))
        }
        WitnessOutcome::Infeasible { blocking_index } => {
            Ok(Artifacts::diagnosis(json!({"feasible": false, "blocking_index": blocking_index + 1})))
        }
    }
}

pub fn regress(text: &str, _ctx: &Ctx) -> CliResult<Artifacts> {
    let input: RepresenterInput = parse(text)?;
    let (k, s) = sample_set(&input)?;
    let mode = match &input.mode {
        ModeSpec::Search => Mode::Search,
        ModeSpec::FixedP(ps) => {
            let ps = ps.build()?;
            let idx = ps.iter().map(|p| s.dual_candidates().require(p)).collect::<tropkern::Result<Vec<_>>>()?;
            Mode::FixedP(idx)
        }
    };
    let r = fit(&s, &k, input.loss, &mode)?;
    Ok(Artifacts::ok(json!({
        "feasible": true,
        "witnesses": dual_points(&s, &r.p_star),
        "y_star": r.y_star,
        "loss_value": r.loss_value,
        "heuristic": r.heuristic,
        "f0": f0_json(&r.f0),
    })))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MaupertuisInput {
    problem: ProblemSpec,
    /// Use the causal kernel, `-inf` backwards in time.
    #[serde(default)]
    causal: bool,
    #[serde(default)]
    include_matrix: bool,
}

pub fn maupertuis(text: &str, ctx: &Ctx) -> CliResult<Artifacts> {
    let input: MaupertuisInput = parse(text)?;
    let p = input.problem.build()?;
    let gram = if input.causal { maupertuis_dp_asym(&p)? } else { maupertuis_dp(&p)? };
    let (gap, pairs) = lax_hopf_gap(&p, &gram)?;
    let mut out = json!({
        "n_points": p.points().len(),
        "causal": input.causal,
        "tpsd": is_tpsd_pairwise(&gram, ctx.tol)?.is_none(),
        "idempotent": is_idempotent(&gram, ctx.tol)?,
        "lax_hopf_gap": gap,
        "finite_pairs": pairs,
    });
    if input.include_matrix {
        out["points"] = json!(p.points().to_vecs());
        out["matrix"] = json!(gram);
    }
    Ok(Artifacts::with_csv(out, pair_table(p.points(), &gram)))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ValueInput {
    problem: ProblemSpec,
    /// Terminal cost on the space lattice, last axis fastest.
    psi: Vec<ExtReal>,
    /// Random range elements for the largest-subsolution check.
    #[serde(default)]
    subsolution_samples: usize,
}

pub fn value_function(text: &str, ctx: &Ctx) -> CliResult<Artifacts> {
    let input: ValueInput = parse(text)?;
    let p = input.problem.build()?;
    let psi = function_on(p.space_points(), input.psi, "psi")?;
    let v = backward_value(&p, &psi)?;
    let mut out = json!({"values": v.values()});
    if input.subsolution_samples > 0 {
        let r = largest_subsolution_check(&p, &psi, input.subsolution_samples, ctx.seed)?;
        out["subsolution"] = json!(r);
        out["subsolution"]["seed"] = json!(ctx.seed);
    }
    Ok(Artifacts::with_csv(out, function_table(&v)))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StoppingInput {
    problem: ProblemSpec,
    /// Spacetime points `[t, r...]` with samples `ys = -V`.
    samples: Samples,
    #[serde(default = "default_loss")]
    loss: Loss,
}

pub fn invert_stopping_cost(text: &str, _ctx: &Ctx) -> CliResult<Artifacts> {
    let input: StoppingInput = parse(text)?;
    let p = input.problem.build()?;
    let pts = p.points().clone();
    let kernel = KernelRep::Gram(GramKernel::new(pts.clone(), maupertuis_dp_asym(&p)?)?);
    let xs = match input.samples.xs.build()? {
        x if x.dim() == pts.dim() => Arc::new(PointSet::spacetime(x.to_vecs())?),
        _ => return Err(invalid("samples.xs must be spacetime points [t, r...]")),
    };
    let sc = reconstruct_stopping_cost(xs, input.samples.ys, &kernel, &pts, input.loss)?;
    let value = sc.f0.eval_on(&pts)?.map(|v| -v);
    let out = json!({
        "y_star": sc.regression.y_star,
        "loss_value": sc.regression.loss_value,
        "stopping_cost": sc.w.values(),
        "value": value.values(),
    });
    Ok(Artifacts::with_csv(out, function_table(&value)))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TerminalInput {
    problem: ProblemSpec,
    /// Sampling time, a node of the time grid.
    t0: f64,
    /// Space points `r` with samples `ys = -V(t0, r)`.
    samples: Samples,
}

pub fn invert_terminal_cost(text: &str, _ctx: &Ctx) -> CliResult<Artifacts> {
    let input: TerminalInput = parse(text)?;
    let p = input.problem.build()?;
    let layer = (0..p.time().n)
        .find(|&k| (p.time().time(k) - input.t0).abs() <= 1e-9)
        .ok_or_else(|| invalid(format!("t0 = {} is not on the time grid", input.t0)))?;
    let rs = input.samples.xs.build()?;
    let nodes = rs.iter().map(|r| p.space_points().require(r)).collect::<tropkern::Result<Vec<_>>>()?;
    let gram = maupertuis_dp_asym(&p)?;
    match invert_terminal(&p, &gram, layer, &nodes, &input.samples.ys)? {
        TerminalCostInversion::Feasible { witnesses, psi, value } => {
            let wpts: Vec<Vec<f64>> = witnesses.iter().map(|&w| p.space_points().point(w).to_vec()).collect();
            let out = json!({
                "feasible": true,
                "witnesses": wpts,
                "psi": psi.values(),
                "value": value.values(),
            });
            Ok(Artifacts::with_csv(out, function_table(&value)))
        }
        TerminalCostInversion::Infeasible { blocking_index } => {
            Ok(Artifacts::diagnosis(json!({"feasible": false, "blocking_index": blocking_index + 1})))
        }
    }
}
