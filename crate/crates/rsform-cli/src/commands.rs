//! Subcommands and the report envelope.

use std::f64::consts::PI;

use rsform::curves::{invariance_h, invariance_map, Invariance};
use rsform::error::{Error, ErrorClass};
use rsform::parabolic::{
    apply_t, construct, grid_for, invariance_residual, lipschitz_factor, normalize_rs, normalize_rs_at_least,
    verify_asymptotic, verify_stability, ConstructOptions, NormalizedRs, ParabolicCurveNumeric,
};
use rsform::reduction::{diffeo_form, reduce_diffeo, DiffeoReduction, RsDiffeoData};
use rsform::sector::{dim2_classify, well_placed, Chosen, Membership, WellPlacedReport};
use rsform::transforms::{blowup_steps, is_permissible, pushforward_holds, transform_curve, transform_field, transform_map};
use rsform::transforms::{Center, TransformSequence, TransformStep};
use rsform::turrittin::{replay, turrittin_reduce, LinearSystem};
use rsform::{exp_field, inverse_map, log_map, Coeff, CurveParam, Float64, FormalField, FormalMap, GaussRat, Jet, MatSeries, Order};
use serde_json::{json, Value};

use crate::doc::{Backend, InputDocument, Object};
use crate::expr::ParseError;
use crate::report::{
    c64, comps_json, comps_of, curve_json, curve_of, mat_json, mat_series_json, mat_series_of, num, num_of, object,
    sequence_json, sequence_of, series_json, ttransform_json, ttransform_of, JsonCoeff,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Log,
    Exp,
    Invert,
    Invariance,
    Blowup,
    Ramify,
    Turrittin,
    Reduce,
    Analyze,
    Construct,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Log => "log",
            Command::Exp => "exp",
            Command::Invert => "invert",
            Command::Invariance => "invariance",
            Command::Blowup => "blowup",
            Command::Ramify => "ramify",
            Command::Turrittin => "turrittin",
            Command::Reduce => "reduce",
            Command::Analyze => "analyze",
            Command::Construct => "construct",
            Command::Verify => "verify",
        }
    }
}

/// Flags shared by the subcommands; `None` means the documented default.
#[derive(Clone, Debug, Default)]
pub struct Options {
    pub tol: Option<f64>,
    pub m: Option<u32>,
    pub eta: Option<f64>,
    pub delta: Option<f64>,
    pub tau: Option<f64>,
    pub seed: Option<u64>,
    /// Center variables for `blowup`.
    pub center: Option<Vec<usize>>,
    /// Ramification index and variable for `ramify`.
    pub q: Option<u32>,
    pub var: Option<usize>,
    /// Name of the map, field or system to use.
    pub object: Option<String>,
    /// Name of the curve to use.
    pub curve: Option<String>,
    /// Highest order checked by the asymptotic test.
    pub orders: Option<u32>,
    /// Saved report for `verify`.
    pub saved: Option<Value>,
}

pub const DEFAULT_DELTA: f64 = 0.05;
pub const DEFAULT_M: u32 = 6;
pub const DEFAULT_ORDERS: u32 = 6;
pub const RESIDUAL_TARGET: f64 = 1e-8;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Run(#[from] Error),
    #[error("verification failed: {0}")]
    Verify(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Input(_) => 2,
            CliError::Run(e) => match e.class() {
                ErrorClass::Precondition => 3,
                ErrorClass::Budget => 4,
                ErrorClass::Construction => 5,
            },
            CliError::Verify(_) => 5,
        }
    }

    pub fn code(&self) -> String {
        match self {
            CliError::Parse(_) => "cli.parse".into(),
            CliError::Input(_) => "cli.input".into(),
            CliError::Run(e) => e.code().into(),
            CliError::Verify(_) => "cli.verify".into(),
        }
    }
}

type Res<T> = std::result::Result<T, CliError>;

fn conv<C: Coeff>(c: &GaussRat) -> C {
    C::from_rational(&c.re, &c.im)
}

fn order_json(o: Order) -> Value {
    match o {
        Order::Finite(k) => json!(k),
        Order::Infinite => json!("infinite"),
    }
}

fn angle(x: f64) -> Value {
    num(x)
}

struct Ctx<'a> {
    doc: &'a InputDocument,
    opts: &'a Options,
}

impl Ctx<'_> {
    fn jets<C: Coeff>(&self, kind: &str) -> Res<Option<Vec<Jet<C>>>> {
        let name = self.opts.object.as_deref();
        let found = match name {
            Some(n) => match self.doc.get(n) {
                Some(o) if o.body.kind() == kind => Some(o),
                Some(_) => None,
                None => return Err(CliError::Input(format!("no object named '{n}'"))),
            },
            None => self.doc.find(kind, None),
        };
        Ok(found.map(|o| match &o.body {
            Object::Diffeo(v) | Object::Field(v) => v.iter().map(|j| j.map_coeffs(conv)).collect(),
            _ => unreachable!("kind checked"),
        }))
    }

    /// The `diffeo` object, or `Exp` of the `field` object.
    fn map<C: Coeff>(&self) -> Res<FormalMap<C>> {
        if let Some(v) = self.jets("diffeo")? {
            return Ok(FormalMap::new(v)?);
        }
        if let Some(v) = self.jets("field")? {
            return Ok(exp_field(&FormalField::new(v)?)?);
        }
        Err(CliError::Input("the document has no diffeo or field block".into()))
    }

    /// The `field` object, or `log` of the `diffeo` object.
    fn field<C: Coeff>(&self) -> Res<FormalField<C>> {
        if let Some(v) = self.jets("field")? {
            return Ok(FormalField::new(v)?);
        }
        if let Some(v) = self.jets("diffeo")? {
            return Ok(log_map(&FormalMap::new(v)?)?);
        }
        Err(CliError::Input("the document has no field or diffeo block".into()))
    }

    fn curve<C: Coeff>(&self) -> Res<CurveParam<C>> {
        let o = self
            .doc
            .find("curve", self.opts.curve.as_deref())
            .ok_or_else(|| CliError::Input("the document has no curve block".into()))?;
        let Object::Curve(c) = &o.body else { unreachable!("kind checked") };
        Ok(CurveParam::new(c.iter().map(|s| s.map(conv)).collect())?)
    }

    fn system<C: Coeff>(&self) -> Res<LinearSystem<C>> {
        let o = self
            .doc
            .find("system", self.opts.object.as_deref())
            .ok_or_else(|| CliError::Input("the document has no system block".into()))?;
        let Object::System { rank, rows } = &o.body else { unreachable!("kind checked") };
        let entries = rows.iter().flatten().map(|s| s.map(conv)).collect();
        Ok(LinearSystem::new(*rank, MatSeries::from_entries(rows.len(), entries)))
    }

    fn vars(&self) -> &[String] {
        &self.doc.vars
    }
}

/// Runs `cmd` and returns the structured result.
pub fn run_command(cmd: Command, doc: &InputDocument, opts: &Options) -> Res<Value> {
    let ctx = Ctx { doc, opts };
    match doc.backend {
        Backend::Exact => run_typed::<GaussRat>(cmd, &ctx),
        Backend::Float => run_typed::<Float64>(cmd, &ctx),
    }
}

fn run_typed<C: JsonCoeff>(cmd: Command, ctx: &Ctx) -> Res<Value> {
    match cmd {
        Command::Log => {
            let f = ctx.map::<C>()?;
            let x = log_map(&f)?;
            Ok(json!({"field": comps_json(x.components(), ctx.vars()), "multiplicity": order_json(x.multiplicity())}))
        }
        Command::Exp => {
            let x = ctx.field::<C>()?;
            let f = exp_field(&x)?;
            Ok(json!({"map": comps_json(f.components(), ctx.vars()), "order": order_json(f.order())}))
        }
        Command::Invert => {
            let f = ctx.map::<C>()?;
            let g = inverse_map(&f)?;
            let id = f.compose(&g)? == FormalMap::identity(f.nvars(), f.trunc());
            Ok(json!({"inverse": comps_json(g.components(), ctx.vars()), "composition_is_identity": id}))
        }
        Command::Invariance => invariance_cmd::<C>(ctx),
        Command::Blowup => {
            let center = match &ctx.opts.center {
                Some(v) => Center::new(v.clone())?,
                None => Center::point(ctx.doc.dim),
            };
            let x = ctx.field::<C>()?;
            let curve = ctx.curve::<C>()?;
            is_permissible(&x, &curve, &center)
                .map_err(|e| Error::Precondition(format!("center {:?} is not permissible: {e:?}", center.vars)))?;
            let steps = blowup_steps(&curve, &center, None)?;
            transform_cmd(ctx, x, curve, steps, json!({"center": center.vars}))
        }
        Command::Ramify => {
            let q = ctx.opts.q.unwrap_or(2);
            let var = ctx.opts.var.unwrap_or(0);
            if q < 2 || var >= ctx.doc.dim {
                return Err(CliError::Input("ramify needs q ≥ 2 and a valid variable index".into()));
            }
            let x = ctx.field::<C>()?;
            let curve = ctx.curve::<C>()?;
            transform_cmd(ctx, x, curve, vec![TransformStep::ramification(q, var)], json!({"q": q, "var": var}))
        }
        Command::Turrittin => turrittin_cmd::<C>(ctx),
        Command::Reduce => {
            let red = reduce::<C>(ctx)?;
            Ok(reduction_json(ctx, &red))
        }
        Command::Analyze => {
            let red = reduce::<C>(ctx)?;
            let a = analyze(&red)?;
            Ok(a.json())
        }
        Command::Construct => construct_cmd::<C>(ctx),
        Command::Verify => verify_cmd::<C>(ctx),
    }
}

fn invariance_cmd<C: JsonCoeff>(ctx: &Ctx) -> Res<Value> {
    let curve = ctx.curve::<C>()?;
    let has_field = ctx.jets::<C>("field")?.is_some() && ctx.jets::<C>("diffeo")?.is_none();
    let outcome = if has_field {
        match invariance_h(&ctx.field::<C>()?, &curve) {
            Ok(h) => Invariance::Holds(h),
            Err(Error::NotInvariant { order, component }) => Invariance::Fails { order, component },
            Err(e) => return Err(e.into()),
        }
    } else {
        invariance_map(&ctx.map::<C>()?, &curve)?
    };
    Ok(match outcome {
        Invariance::Holds(h) => json!({
            "invariant": true,
            "checked_through_order": h.budget,
            "h": series_json(&h.h),
        }),
        Invariance::Fails { order, component } => json!({
            "invariant": false,
            "first_failure": {"order": order, "component": component},
        }),
    })
}

fn transform_cmd<C: JsonCoeff>(
    ctx: &Ctx,
    x: FormalField<C>,
    curve: CurveParam<C>,
    steps: Vec<TransformStep<C>>,
    params: Value,
) -> Res<Value> {
    let nu_before = x.multiplicity();
    let mut f = exp_field(&x)?;
    let (mut x, mut curve) = (x, curve);
    let mut seq = TransformSequence::new();
    let mut replay_ok = true;
    for step in steps {
        let xt = transform_field(&x, &step)?;
        replay_ok &= pushforward_holds(&x, &xt, &step)?;
        f = transform_map(&f, &step)?;
        curve = transform_curve(&curve, &step)?;
        x = xt;
        seq.push(step);
    }
    let t = x.trunc().min(f.trunc());
    let commutes = exp_field(&x.truncate(t))? == f.truncate(t);
    Ok(json!({
        "parameters": params,
        "certificate": sequence_json(&seq),
        "field": comps_json(x.components(), ctx.vars()),
        "map": comps_json(f.components(), ctx.vars()),
        "curve": curve_json(curve.components()),
        "multiplicity_before": order_json(nu_before),
        "multiplicity_after": order_json(x.multiplicity()),
        "pushforward_replay": replay_ok,
        "exp_commutes": commutes,
    }))
}

fn turrittin_cmd<C: JsonCoeff>(ctx: &Ctx) -> Res<Value> {
    let sys = ctx.system::<C>()?;
    let out = turrittin_reduce(&sys)?;
    let replayed = replay(&sys, &out.transforms)? == out.system;
    let shifts: Vec<Value> = out
        .shifts
        .iter()
        .map(|s| json!({"start": s.start, "size": s.size, "poly": s.poly.iter().map(|c| c.to_json()).collect::<Vec<_>>()}))
        .collect();
    Ok(json!({
        "input": {"rank": sys.rank, "matrix": mat_series_json(&sys.matrix)},
        "certificate": out.transforms.iter().map(ttransform_json).collect::<Vec<_>>(),
        "system": {"rank": out.system.rank, "matrix": mat_series_json(&out.system.matrix)},
        "form": {
            "p": out.form.p,
            "d": out.form.d.iter().map(series_json).collect::<Vec<_>>(),
            "c": mat_json(&out.form.c),
        },
        "shifts": shifts,
        "replay_exact": replayed,
    }))
}

fn reduce<C: Coeff>(ctx: &Ctx) -> Res<DiffeoReduction<C>> {
    let f = ctx.map::<C>()?;
    let curve = ctx.curve::<C>()?;
    Ok(reduce_diffeo(&f, &curve)?)
}

fn rs_json<C: JsonCoeff>(d: &RsDiffeoData<C>) -> Value {
    json!({
        "k": d.k,
        "p": d.p,
        "lambda": d.lambda.to_json(),
        "d": d.d.iter().map(series_json).collect::<Vec<_>>(),
        "c": mat_json(&d.cc),
    })
}

fn reduction_json<C: JsonCoeff>(ctx: &Ctx, red: &DiffeoReduction<C>) -> Value {
    json!({
        "k": red.data.k,
        "p": red.data.p,
        "rs_data": rs_json(&red.data),
        "ramification": red.field.ramification,
        "certificate": sequence_json(&red.field.seq),
        "reduced_map": comps_json(red.map.components(), ctx.vars()),
        "reduced_curve": curve_json(red.field.curve.components()),
        "order_budget": red.map.trunc(),
    })
}

fn membership(m: Membership) -> &'static str {
    match m {
        Membership::Inside => "inside",
        Membership::Outside => "outside",
        Membership::OnBoundary => "boundary",
        Membership::Indeterminate => "indeterminate",
    }
}

fn well_placed_json(w: &WellPlacedReport) -> Value {
    json!({
        "well_placed": w.overall,
        "lambda": c64(w.lambda),
        "saddle_domain": {
            "full": w.saddle.full,
            "arcs": w.saddle.arcs.iter().map(|a| json!([angle(a.start), angle(a.start + a.len)])).collect::<Vec<_>>(),
        },
        "directions": w.verdicts.iter().map(|v| json!({
            "angle": angle(v.direction.angle),
            "membership": membership(v.membership),
            "opening": v.opening.map(num),
        })).collect::<Vec<_>>(),
    })
}

struct Analysis<C: Coeff> {
    red: DiffeoReduction<C>,
    inverse: FormalMap<C>,
    forward: WellPlacedReport,
    backward: WellPlacedReport,
    dim2: Option<rsform::sector::Dim2Report>,
}

fn analyze<C: Coeff>(red: &DiffeoReduction<C>) -> Res<Analysis<C>> {
    let inverse = inverse_map(&red.map)?;
    let dinv = diffeo_form(&inverse)?;
    let forward = well_placed(&red.data)?;
    let backward = well_placed(&dinv)?;
    let dim2 = if red.map.nvars() == 2 { Some(dim2_classify(&red.data, &dinv)?) } else { None };
    Ok(Analysis { red: red.clone(), inverse, forward, backward, dim2 })
}

impl<C: Coeff> Analysis<C> {
    fn verdict(&self) -> &'static str {
        if self.forward.overall {
            "well-placed"
        } else if self.backward.overall {
            "well-placed-for-inverse"
        } else {
            "not-well-placed"
        }
    }

    fn json(&self) -> Value {
        let dim2 = self.dim2.as_ref().map(|d| {
            json!({
                "case": d.case.tag(),
                "attracting": d.attracting.iter().map(|a| angle(a.angle)).collect::<Vec<_>>(),
                "repelling": d.repelling.iter().map(|a| angle(a.angle)).collect::<Vec<_>>(),
                "guaranteed": [d.guaranteed.0, d.guaranteed.1],
                "guarantee_met": d.guarantee_met,
                "chosen": d.chosen.map(|c| if c == Chosen::Map { "map" } else { "inverse" }),
            })
        });
        json!({
            "k": self.red.data.k,
            "p": self.red.data.p,
            "verdict": self.verdict(),
            "map": well_placed_json(&self.forward),
            "inverse": well_placed_json(&self.backward),
            "dim2": dim2,
        })
    }
}

/// Which map carries the curve, the direction in reduced coordinates and
/// the available opening.
struct Target {
    inverse: bool,
    theta: f64,
    opening: Option<f64>,
}

fn choose_target<C: Coeff>(a: &Analysis<C>, tau: Option<f64>) -> Res<Target> {
    if let Some(t) = tau {
        let t = rsform::sector::canonical(t);
        for (inverse, w) in [(false, &a.forward), (true, &a.backward)] {
            if let Some(v) = w.verdicts.iter().find(|v| (v.direction.angle - t).abs() < 1e-9) {
                if !v.membership.contained() {
                    return Err(Error::Precondition(format!("direction {t} is not inside the saddle domain")).into());
                }
                return Ok(Target { inverse, theta: t, opening: v.opening });
            }
        }
        return Err(Error::Precondition(format!("{t} is not an attracting direction of the map or its inverse")).into());
    }
    for (inverse, w) in [(false, &a.forward), (true, &a.backward)] {
        if let Some(v) = w.best() {
            return Ok(Target { inverse, theta: v.direction.angle, opening: v.opening });
        }
    }
    Err(Error::Precondition("neither the map nor its inverse is well placed".into()).into())
}

fn construct_options(opts: &Options) -> ConstructOptions {
    let mut c = ConstructOptions::default();
    if let Some(t) = opts.tol {
        c.tol = t;
    }
    c
}

struct Built<C: Coeff> {
    analysis: Analysis<C>,
    target: Target,
    nr: NormalizedRs,
    eta: f64,
    tau: f64,
}

fn build<C: Coeff>(ctx: &Ctx, target_override: Option<(bool, f64)>) -> Res<Built<C>> {
    let red = reduce::<C>(ctx)?;
    let analysis = analyze(&red)?;
    let target = match target_override {
        Some((inverse, theta)) => {
            let w = if inverse { &analysis.backward } else { &analysis.forward };
            let opening = w.verdicts.iter().find(|v| (v.direction.angle - theta).abs() < 1e-9).and_then(|v| v.opening);
            Target { inverse, theta, opening }
        }
        None => choose_target(&analysis, ctx.opts.tau)?,
    };
    let map = if target.inverse { &analysis.inverse } else { &analysis.red.map };
    let curve = &analysis.red.field.curve;
    let nr = match ctx.opts.m {
        Some(m) => normalize_rs(map, curve, m)?,
        None => normalize_rs_at_least(map, curve, DEFAULT_M)?,
    };
    let kp = nr.order() as f64;
    let eta = match ctx.opts.eta {
        Some(e) => e,
        None => (PI / kp).min(0.9 * target.opening.unwrap_or(PI / kp)),
    };
    let tau = nr.direction_from_input(target.theta).angle;
    Ok(Built { analysis, target, nr, eta, tau })
}

fn asym_orders(ctx: &Ctx) -> u32 {
    ctx.opts.orders.unwrap_or(DEFAULT_ORDERS.min(ctx.doc.order / 2))
}

fn curve_report<C: Coeff>(b: &Built<C>, pc: &ParabolicCurveNumeric, orders: u32) -> Value {
    let nr = &b.nr;
    let seq = &b.analysis.red.field.seq;
    let grid = &pc.grid;
    let nodes: Vec<Value> = grid.nodes().into_iter().map(c64).collect();
    let values: Vec<Value> = grid.values.iter().map(|v| Value::Array(v.iter().map(|z| c64(*z)).collect())).collect();
    let points: Vec<Value> = (0..grid.len())
        .map(|i| {
            let p = seq.eval_forward(&nr.to_input(grid.node(i), &grid.values[i]));
            Value::Array(p.into_iter().map(c64).collect())
        })
        .collect();
    let asym = verify_asymptotic(pc, nr, &nr.curve, orders);
    let stab = verify_stability(pc, nr, 3);
    json!({
        "map": if b.target.inverse { "inverse" } else { "map" },
        "k": nr.k,
        "p": nr.p,
        "m": nr.m,
        "m0": nr.m0,
        "direction": angle(b.target.theta),
        "tau": angle(pc.tau),
        "eta": num(pc.eta),
        "delta": num(pc.delta),
        "alpha": c64(nr.alpha),
        "trust_radius": num(nr.trust),
        "iterations": pc.iterations,
        "contraction": pc.contraction.iter().map(|r| num(*r)).collect::<Vec<_>>(),
        "attempts": pc.attempts.iter().map(|a| json!({"delta": num(a.delta), "outcome": a.outcome})).collect::<Vec<_>>(),
        "residual_sup": num(pc.residual_sup),
        "scaled_residual_sup": num(pc.scaled_residual_sup),
        "residual_target": num(RESIDUAL_TARGET),
        "converged": pc.residual_sup <= RESIDUAL_TARGET,
        "observed_constants": {
            "ball_ratio": num(pc.ball_ratio),
            "derivative_ratio": num(pc.derivative_ratio),
            "orbit_steps": pc.stats.max_steps,
            "tail_bound": num(pc.stats.tail_bound),
        },
        "asymptotic": {
            "passed": asym.passed,
            "entries": asym.entries.iter().map(|e| json!({
                "order": e.order, "slope": num(e.slope), "constant": num(e.constant), "passed": e.passed,
            })).collect::<Vec<_>>(),
        },
        "stability": {
            "passed": stab.passed,
            "seeds": stab.seeds,
            "max_deviation": num(stab.max_deviation),
            "threshold": num(stab.threshold),
            "worst_orbit_law": num(stab.worst_law),
            "exits": stab.exits,
        },
        "grid": {
            "radial_nodes": grid.radii.len(),
            "angular_nodes": grid.angles.len(),
            "weight": grid.weight,
            "radii": grid.radii.iter().map(|r| num(*r)).collect::<Vec<_>>(),
            "angles": grid.angles.iter().map(|a| num(*a)).collect::<Vec<_>>(),
            "nodes": nodes,
            "values": values,
        },
        "curve_points": points,
    })
}

fn construct_cmd<C: JsonCoeff>(ctx: &Ctx) -> Res<Value> {
    let b = build::<C>(ctx, None)?;
    let delta = ctx.opts.delta.unwrap_or(DEFAULT_DELTA);
    let pc = construct(&b.nr, b.tau, b.eta, delta, &construct_options(ctx.opts))?;
    let mut out = curve_report(&b, &pc, asym_orders(ctx));
    out["analysis"] = b.analysis.json();
    Ok(out)
}

fn saved_result<'a>(ctx: &Ctx<'a>) -> Res<(&'a str, &'a Value)> {
    let saved = ctx.opts.saved.as_ref().ok_or_else(|| CliError::Input("verify needs a saved report (--cert)".into()))?;
    let cmd = saved["command"].as_str().ok_or_else(|| CliError::Input("saved report has no command".into()))?;
    let result = saved.get("result").ok_or_else(|| CliError::Input("saved report has no result".into()))?;
    Ok((cmd, result))
}

fn verify_cmd<C: JsonCoeff>(ctx: &Ctx) -> Res<Value> {
    let (cmd, result) = saved_result(ctx)?;
    let bad = |e: Error| CliError::Input(e.to_string());
    let report = match cmd {
        "reduce" => {
            let f = ctx.map::<C>()?;
            let curve = ctx.curve::<C>()?;
            let seq: TransformSequence<C> = sequence_of(&result["certificate"]).map_err(bad)?;
            let saved_map = comps_of::<C>(&result["reduced_map"], ctx.vars()).map_err(bad)?;
            let saved_curve = curve_of::<C>(&result["reduced_curve"]).map_err(bad)?;
            let map = seq.apply_map(&f)?;
            let c = seq.apply_curve(&curve)?;
            let map_ok = map.components() == saved_map.as_slice();
            let curve_ok = c.components() == saved_curve.as_slice();
            let data = diffeo_form(&map)?;
            let shape_ok = json!(data.k) == result["k"] && json!(data.p) == result["p"];
            object(vec![
                ("replayed", json!("reduce")),
                ("steps", json!(seq.len())),
                ("map_matches", json!(map_ok)),
                ("curve_matches", json!(curve_ok)),
                ("shape_matches", json!(shape_ok)),
                ("passed", json!(map_ok && curve_ok && shape_ok)),
            ])
        }
        "turrittin" => {
            let rank = result["input"]["rank"].as_u64().ok_or_else(|| CliError::Input("bad saved rank".into()))?;
            let sys = LinearSystem::new(rank as u32, mat_series_of::<C>(&result["input"]["matrix"]).map_err(bad)?);
            let doc_sys = ctx.system::<C>()?;
            let ts = result["certificate"]
                .as_array()
                .ok_or_else(|| CliError::Input("bad saved certificate".into()))?
                .iter()
                .map(ttransform_of::<C>)
                .collect::<Result<Vec<_>, _>>()
                .map_err(bad)?;
            let out = replay(&sys, &ts)?;
            let target = LinearSystem::new(
                result["system"]["rank"].as_u64().unwrap_or(u64::MAX) as u32,
                mat_series_of::<C>(&result["system"]["matrix"]).map_err(bad)?,
            );
            let input_ok = doc_sys == sys;
            let ok = out == target;
            object(vec![
                ("replayed", json!("turrittin")),
                ("steps", json!(ts.len())),
                ("input_matches", json!(input_ok)),
                ("system_matches", json!(ok)),
                ("passed", json!(ok && input_ok)),
            ])
        }
        "construct" => verify_construct::<C>(ctx, result)?,
        other => return Err(CliError::Input(format!("cannot verify a '{other}' report"))),
    };
    if report["passed"] != json!(true) {
        return Err(CliError::Verify(report.to_string()));
    }
    Ok(report)
}

fn verify_construct<C: JsonCoeff>(ctx: &Ctx, result: &Value) -> Res<Value> {
    let bad = |what: &str| CliError::Input(format!("saved construct report: bad '{what}'"));
    let inverse = result["map"].as_str() == Some("inverse");
    let theta = num_of(&result["direction"]).ok_or_else(|| bad("direction"))?;
    let mut opts = ctx.opts.clone();
    opts.m = Some(result["m"].as_u64().ok_or_else(|| bad("m"))? as u32);
    opts.eta = Some(num_of(&result["eta"]).ok_or_else(|| bad("eta"))?);
    let sub = Ctx { doc: ctx.doc, opts: &opts };
    let b = build::<C>(&sub, Some((inverse, theta)))?;
    let delta = num_of(&result["delta"]).ok_or_else(|| bad("delta"))?;
    let copts = construct_options(ctx.opts);
    let g = &result["grid"];
    let mut copts_grid = copts;
    copts_grid.radial_nodes = g["radial_nodes"].as_u64().ok_or_else(|| bad("radial_nodes"))? as usize;
    copts_grid.angular_nodes = g["angular_nodes"].as_u64().ok_or_else(|| bad("angular_nodes"))? as usize;
    let empty = grid_for(&b.nr, b.tau, b.eta, delta, &copts_grid)?;
    let same_f = |a: &[f64], key: &str| -> bool {
        g[key].as_array().is_some_and(|v| v.len() == a.len() && v.iter().zip(a).all(|(s, x)| num_of(s) == Some(*x)))
    };
    let layout_ok = same_f(&empty.radii, "radii") && same_f(&empty.angles, "angles");
    let values = g["values"]
        .as_array()
        .ok_or_else(|| bad("values"))?
        .iter()
        .map(|row| row.as_array().ok_or_else(|| bad("values")).and_then(|r| r.iter().map(|z| crate::report::c64_of(z).ok_or_else(|| bad("values"))).collect()))
        .collect::<Res<Vec<Vec<Float64>>>>()?;
    if values.len() != empty.len() {
        return Err(bad("values"));
    }
    let u = empty.with_values(values);
    let (residual, scaled) = invariance_residual(&b.nr, &u);
    let (tu, _) = apply_t(&b.nr, &u, copts.sum_options())?;
    let fixed_defect = tu.distance(&u);
    let saved_residual = num_of(&result["residual_sup"]).ok_or_else(|| bad("residual_sup"))?;
    let mut rng = rsform::corpus::rng(ctx.opts.seed.unwrap_or(0));
    let mut lipschitz = 0f64;
    for _ in 0..2 {
        let a = rsform::corpus::random_ball_grid(&u, b.nr.m as i32 - 1, 1.0, &mut rng);
        let c = rsform::corpus::random_ball_grid(&u, b.nr.m as i32 - 1, 1.0, &mut rng);
        lipschitz = lipschitz.max(lipschitz_factor(&b.nr, &a, &c, copts.sum_options())?);
    }
    let passed = layout_ok && residual <= RESIDUAL_TARGET && fixed_defect <= 10.0 * copts.tol.max(1e-12);
    Ok(object(vec![
        ("replayed", json!("construct")),
        ("layout_matches", json!(layout_ok)),
        ("residual_sup", num(residual)),
        ("scaled_residual_sup", num(scaled)),
        ("residual_matches_saved", json!(residual == saved_residual)),
        ("fixed_point_defect", num(fixed_defect)),
        ("lipschitz_sample", num(lipschitz)),
        ("passed", json!(passed)),
    ]))
}

/// Settings echoed in every report.
fn settings(cmd: Command, doc: &InputDocument, opts: &Options) -> Value {
    let tol = opts.tol.unwrap_or(ConstructOptions::default().tol);
    let mut s = object(vec![("order", json!(doc.order)), ("backend", json!(doc.backend.tag()))]);
    if matches!(cmd, Command::Construct | Command::Verify) {
        s["tol"] = num(tol);
        s["m"] = opts.m.map_or(json!(format!("max({DEFAULT_M}, m0)")), |m| json!(m));
        s["delta"] = num(opts.delta.unwrap_or(DEFAULT_DELTA));
        s["eta"] = opts.eta.map_or(json!("auto"), num);
        s["tau"] = opts.tau.map_or(json!("auto"), num);
        s["residual_target"] = num(RESIDUAL_TARGET);
        s["seed"] = json!(opts.seed.unwrap_or(0));
    }
    if let Some(c) = &opts.center {
        s["center"] = json!(c);
    }
    if let Some(q) = opts.q {
        s["q"] = json!(q);
    }
    if let Some(v) = opts.var {
        s["var"] = json!(v);
    }
    s
}

/// The full report for one run, success or failure.
pub fn report(cmd: Command, doc_label: &str, doc: &InputDocument, opts: &Options, result: &Res<Value>) -> Value {
    let mut r = object(vec![
        ("command", json!(cmd.name())),
        ("document", json!(doc_label)),
        ("settings", settings(cmd, doc, opts)),
    ]);
    match result {
        Ok(v) => r["result"] = v.clone(),
        Err(e) => {
            r["error"] = json!({"code": e.code(), "exit_code": e.exit_code(), "message": e.to_string()});
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::doc::parse_document;

    fn run(text: &str, cmd: Command) -> Res<Value> {
        let doc = parse_document(text, None).unwrap();
        run_command(cmd, &doc, &Options::default())
    }

    #[test]
    fn log_of_identity_is_zero() {
        let v = run("dim 2\norder 5\ndiffeo F:\n  x\n  y\n", Command::Log).unwrap();
        assert_eq!(v["field"]["components"], json!(["0", "0"]));
        assert_eq!(v["multiplicity"], json!("infinite"));
    }

    #[test]
    fn exp_then_log() {
        let v = run("dim 2\norder 6\nfield X:\n  x^2\n  x*y\n", Command::Exp).unwrap();
        let comps: Vec<String> = v["map"]["components"].as_array().unwrap().iter().map(|c| c.as_str().unwrap().to_string()).collect();
        let text = format!("dim 2\norder 6\ndiffeo F:\n  {}\n  {}\n", comps[0], comps[1]);
        let w = run(&text, Command::Log).unwrap();
        assert_eq!(w["field"]["components"], json!(["x^2", "x*y"]));
    }

    #[test]
    fn fixed_curve_is_a_precondition_error() {
        let e = run("dim 2\norder 10\nfield X:\n  x*y\n  y^2\ncurve G:\n  s\n  0\n", Command::Reduce).unwrap_err();
        assert_eq!(e.exit_code(), 3);
        assert!(e.to_string().contains("fixed-point set"), "{e}");
    }

    #[test]
    fn missing_blocks_are_input_errors() {
        let e = run("dim 2\norder 4\nfield X:\n  x^2\n  y^2\n", Command::Reduce).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn float_backend_runs() {
        let v = run("dim 2\norder 6\nbackend float\nfield X:\n  x^2\n  x*y\n", Command::Exp).unwrap();
        assert!(v["map"]["components"][0]["terms"].is_array());
    }
}
