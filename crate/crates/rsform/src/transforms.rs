//! Permissible transformations: coordinate changes, blow-ups along
//! coordinate centers, and ramifications, acting on fields, maps and curves.
//!
//! Every step is a map `φ` from new coordinates to old ones. Fields are
//! pulled back (`φ_* X̃ = X`) and maps are conjugated (`φ ∘ F̃ = F ∘ φ`).

use crate::coeff::Coeff;
use crate::curves::{tangent_line, CurveParam};
use crate::error::{Error, Result};
use crate::exp_log::{FormalField, FormalMap};
use crate::jet::{Composer, Jet, JetTuple, Order};
use crate::linalg::Mat;
use crate::mono::{Mono, MAX_DEGREE};
use crate::series::{MatSeries, Series};
use num_complex::Complex64;

/// Coordinate subspace `{z_i = 0 : i ∈ vars}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Center {
    pub vars: Vec<usize>,
}

impl Center {
    pub fn new(vars: Vec<usize>) -> Result<Self> {
        let mut s = vars.clone();
        s.sort_unstable();
        s.dedup();
        if s.len() != vars.len() || vars.is_empty() {
            return Err(Error::Structural("center variables must be distinct and nonempty".into()));
        }
        Ok(Center { vars })
    }

    /// The origin of `C^n`.
    pub fn point(n: usize) -> Self {
        Center { vars: (0..n).collect() }
    }

    pub fn codim(&self) -> usize {
        self.vars.len()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.vars.contains(&i)
    }
}

/// Invertible polynomial change of coordinates, written as old coordinates
/// in terms of new ones. The first variable plays the role of `x` and the
/// remaining ones of `y` (or `w`).
#[derive(Clone, Debug, PartialEq)]
pub enum CoordChange<C: Coeff> {
    /// `z = M z̃`.
    Linear(Mat<C>),
    /// `y = ỹ + Q(x)` with `Q(0) = 0`, one series per `y` component.
    Translate(Vec<Series<C>>),
    /// `w = P(x) w̃` with `P(0)` invertible.
    PolyLinear(MatSeries<C>),
    /// `z_i = z̃_{perm[i]}`.
    Permute(Vec<usize>),
}

/// One kind of permissible transformation.
#[derive(Clone, Debug, PartialEq)]
pub enum StepKind<C: Coeff> {
    Coord(CoordChange<C>),
    /// Blow-up of `center` in the chart where `center.vars[0]` is the
    /// dominant variable: `z_j = z̃_d z̃_j` for the other center variables.
    BlowUp { center: Center },
    /// `z_var = z̃_var^q`.
    Ramification { q: u32, var: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransformStep<C: Coeff> {
    pub kind: StepKind<C>,
    /// Variable whose zero set is the exceptional divisor created by this step.
    pub exceptional_divisor: Option<usize>,
}

impl<C: Coeff> TransformStep<C> {
    pub fn coord(c: CoordChange<C>) -> Self {
        TransformStep { kind: StepKind::Coord(c), exceptional_divisor: None }
    }

    pub fn blow_up(center: Center) -> Self {
        let d = center.vars[0];
        TransformStep { kind: StepKind::BlowUp { center }, exceptional_divisor: Some(d) }
    }

    pub fn ramification(q: u32, var: usize) -> Self {
        TransformStep { kind: StepKind::Ramification { q, var }, exceptional_divisor: Some(var) }
    }
}

/// Replayable list of steps.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct TransformSequence<C: Coeff> {
    pub steps: Vec<TransformStep<C>>,
    /// Variable whose zero set carries the total exceptional divisor.
    pub total_divisor: Option<usize>,
}

impl<C: Coeff> TransformSequence<C> {
    pub fn new() -> Self {
        TransformSequence { steps: Vec::new(), total_divisor: None }
    }

    pub fn push(&mut self, step: TransformStep<C>) {
        if let Some(d) = step.exceptional_divisor {
            self.total_divisor = Some(d);
        } else if let (Some(d), StepKind::Coord(CoordChange::Permute(p))) = (self.total_divisor, &step.kind) {
            self.total_divisor = p.iter().position(|&src| src == d);
        }
        self.steps.push(step);
    }

    pub fn extend(&mut self, other: TransformSequence<C>) {
        for s in other.steps {
            self.push(s);
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn count_blowups(&self) -> usize {
        self.steps.iter().filter(|s| matches!(s.kind, StepKind::BlowUp { .. })).count()
    }

    pub fn apply_field(&self, x: &FormalField<C>) -> Result<FormalField<C>> {
        self.steps.iter().try_fold(x.clone(), |acc, s| transform_field(&acc, s))
    }

    pub fn apply_map(&self, f: &FormalMap<C>) -> Result<FormalMap<C>> {
        self.steps.iter().try_fold(f.clone(), |acc, s| transform_map(&acc, s))
    }

    pub fn apply_curve(&self, c: &CurveParam<C>) -> Result<CurveParam<C>> {
        self.steps.iter().try_fold(c.clone(), |acc, s| transform_curve(&acc, s))
    }
    /// Maps a point in the final coordinates to the original ones.
    pub fn eval_forward(&self, z: &[Complex64]) -> Vec<Complex64> {
        self.steps.iter().rev().fold(z.to_vec(), |acc, s| s.eval_forward(&acc))
    }
}

impl<C: Coeff> TransformStep<C> {
    /// Old coordinates of a point given in the new ones.
    pub fn eval_forward(&self, z: &[Complex64]) -> Vec<Complex64> {
        let mut out = z.to_vec();
        match &self.kind {
            StepKind::Coord(CoordChange::Linear(m)) => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = (0..z.len()).map(|j| m.get(i, j).to_c64() * z[j]).sum();
                }
            }
            StepKind::Coord(CoordChange::Translate(q)) => {
                for (k, s) in q.iter().enumerate() {
                    out[k + 1] = z[k + 1] + s.eval_c64(z[0]);
                }
            }
            StepKind::Coord(CoordChange::PolyLinear(p)) => {
                let pm = p.eval_c64(z[0]);
                for (i, row) in pm.iter().enumerate() {
                    out[i + 1] = row.iter().zip(&z[1..]).map(|(a, b)| a * b).sum();
                }
            }
            StepKind::Coord(CoordChange::Permute(p)) => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = z[p[i]];
                }
            }
            StepKind::BlowUp { center } => {
                let d = center.vars[0];
                for &j in &center.vars[1..] {
                    out[j] = z[d] * z[j];
                }
            }
            StepKind::Ramification { q, var } => out[*var] = z[*var].powu(*q),
        }
        out
    }
}

impl<C: Coeff> CoordChange<C> {
    /// Old coordinates as jets in the new ones.
    pub fn forward(&self, n: usize, t: u32) -> Result<Vec<Jet<C>>> {
        match self {
            CoordChange::Linear(m) => Ok(linear_jets(m, n, t)),
            CoordChange::Translate(q) => Ok(translate_jets(q, n, t, false)),
            CoordChange::PolyLinear(p) => Ok(polylinear_jets(p, n, t)),
            CoordChange::Permute(p) => Ok((0..n).map(|i| Jet::var(n, t, p[i])).collect()),
        }
    }

    /// New coordinates as jets in the old ones.
    pub fn inverse(&self, n: usize, t: u32) -> Result<Vec<Jet<C>>> {
        match self {
            CoordChange::Linear(m) => {
                let inv = m.inverse().ok_or_else(|| Error::Precondition("singular linear change".into()))?;
                Ok(linear_jets(&inv, n, t))
            }
            CoordChange::Translate(q) => Ok(translate_jets(q, n, t, true)),
            CoordChange::PolyLinear(p) => {
                let p = p.as_polynomial_at(t);
                Ok(polylinear_jets(&p.inverse()?, n, t))
            }
            CoordChange::Permute(p) => {
                let mut out = vec![Jet::zero(n, t); n];
                for (i, &src) in p.iter().enumerate() {
                    out[src] = Jet::var(n, t, i);
                }
                Ok(out)
            }
        }
    }
}

fn linear_jets<C: Coeff>(m: &Mat<C>, n: usize, t: u32) -> Vec<Jet<C>> {
    (0..n).map(|i| Jet::from_terms(n, t, (0..n).map(|j| (Mono::var(j), m.get(i, j).clone())))).collect()
}

fn translate_jets<C: Coeff>(q: &[Series<C>], n: usize, t: u32, inverse: bool) -> Vec<Jet<C>> {
    let mut out = vec![Jet::var(n, t, 0)];
    for (k, s) in q.iter().enumerate() {
        let sh = s.as_polynomial_at(t).to_jet_in(n, 0, t);
        let y = Jet::var(n, t, k + 1);
        out.push(if inverse { y.try_sub(&sh).expect("shape") } else { y.try_add(&sh).expect("shape") });
    }
    out
}

fn polylinear_jets<C: Coeff>(p: &MatSeries<C>, n: usize, t: u32) -> Vec<Jet<C>> {
    let m = p.dim();
    let mut out = vec![Jet::var(n, t, 0)];
    for i in 0..m {
        let mut acc = Jet::zero(n, t);
        for j in 0..m {
            let e = p.entry(i, j).as_polynomial_at(t.saturating_sub(1));
            let ej = e.to_jet_in(n, 0, t).mul_term(Mono::var(j + 1), &C::one());
            acc = acc.try_add(&ej).expect("shape");
        }
        out.push(acc);
    }
    out
}

fn blowup_monomial(center: &Center) -> impl Fn(Mono) -> Mono + '_ {
    move |m: Mono| {
        let d = center.vars[0];
        let extra: u32 = center.vars[1..].iter().map(|&j| m.exp(j)).sum();
        m.with_exp(d, m.exp(d) + extra)
    }
}

fn ramify_monomial(q: u32, var: usize) -> impl Fn(Mono) -> Mono {
    move |m: Mono| m.with_exp(var, m.exp(var) * q)
}

/// `g ∘ φ` for a blow-up; known to the same order as `g`.
pub fn blowup_pullback<C: Coeff>(g: &Jet<C>, center: &Center) -> Jet<C> {
    g.map_monomials(g.nvars(), g.trunc(), blowup_monomial(center))
}

/// `g ∘ φ` for a ramification; known to the same order as `g`.
pub fn ramify_pullback<C: Coeff>(g: &Jet<C>, q: u32, var: usize) -> Jet<C> {
    g.map_monomials(g.nvars(), g.trunc(), ramify_monomial(q, var))
}

/// Pulls a field back through a coordinate change: `X̃_i = X(φ⁻¹_i) ∘ φ`.
fn coord_field<C: Coeff>(x: &FormalField<C>, c: &CoordChange<C>) -> Result<FormalField<C>> {
    let (n, t) = (x.nvars(), x.trunc());
    if let CoordChange::Permute(p) = c {
        let fw: Vec<Jet<C>> = (0..n).map(|i| Jet::var(n, t, p[i])).collect();
        let mut comps = vec![Jet::zero(n, t); n];
        let mut comp = Composer::new(&fw)?;
        for (i, &src) in p.iter().enumerate() {
            comps[src] = comp.apply(x.component(i))?;
        }
        return FormalField::new(comps);
    }
    let fw = c.forward(n, t)?;
    let inv = c.inverse(n, t)?;
    let mut comp = Composer::new(&fw)?;
    let comps = inv.iter().map(|g| comp.apply(&x.apply(g)?)).collect::<Result<Vec<_>>>()?;
    FormalField::new(comps)
}

/// Conjugates a map by a coordinate change: `F̃ = φ⁻¹ ∘ F ∘ φ`.
fn coord_map<C: Coeff>(f: &FormalMap<C>, c: &CoordChange<C>) -> Result<FormalMap<C>> {
    let (n, t) = (f.nvars(), f.trunc());
    let fw = c.forward(n, t)?;
    let inv = c.inverse(n, t)?;
    let f_phi = f.tuple().compose(&fw)?;
    let out = JetTuple::new(inv)?.compose(f_phi.jets())?;
    FormalMap::new(out.into_jets())
}

/// Strict transform of a field by a blow-up.
///
/// Output order is `N − 1` because of the division by `z̃_d`.
pub fn blowup_field<C: Coeff>(x: &FormalField<C>, center: &Center) -> Result<FormalField<C>> {
    let n = x.nvars();
    let d = center.vars[0];
    let pulled: Vec<Jet<C>> = x.components().iter().map(|a| blowup_pullback(a, center)).collect();
    let t = x.trunc();
    let mut comps = Vec::with_capacity(n);
    for i in 0..n {
        if i == d {
            comps.push(pulled[d].truncate(t.saturating_sub(1)));
        } else if center.contains(i) {
            let num = pulled[i].try_sub(&pulled[d].mul_term(Mono::var(i), &C::one()))?;
            comps.push(num.divide_by_var(d, 1)?);
        } else {
            comps.push(pulled[i].truncate(t.saturating_sub(1)));
        }
    }
    FormalField::new(comps)
}

/// Transform of a field by `z_var = z̃_var^q`; requires `{z_var = 0}` invariant.
pub fn ramify_field<C: Coeff>(x: &FormalField<C>, q: u32, var: usize) -> Result<FormalField<C>> {
    if q == 0 {
        return Err(Error::Precondition("ramification index must be positive".into()));
    }
    let n = x.nvars();
    let t = x.trunc();
    let abar = x.component(var).divide_by_var(var, 1)?;
    let comps = (0..n)
        .map(|i| {
            if i == var {
                let a = ramify_pullback(&abar, q, var).as_polynomial_at(t.saturating_sub(1));
                Ok(a.mul_var_pow(var, 1).scale(&C::from_ratio(1, q as i64)).truncate(t))
            } else {
                Ok(ramify_pullback(x.component(i), q, var))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    FormalField::new(comps)
}

/// Transform of a map by a blow-up; output order `N − 1`.
pub fn blowup_map<C: Coeff>(f: &FormalMap<C>, center: &Center) -> Result<FormalMap<C>> {
    let n = f.nvars();
    let d = center.vars[0];
    let t = f.trunc().saturating_sub(1);
    let pulled: Vec<Jet<C>> = f.components().iter().map(|g| blowup_pullback(g, center)).collect();
    let xd = pulled[d].divide_by_var(d, 1)?;
    let xd_inv = xd.unit_inverse()?;
    let comps = (0..n)
        .map(|i| {
            if center.contains(i) && i != d {
                pulled[i].divide_by_var(d, 1)?.try_mul(&xd_inv)
            } else {
                Ok(pulled[i].truncate(t))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    FormalMap::new(comps)
}

/// Transform of a map by `z_var = z̃_var^q`, taking the principal branch of
/// the `q`-th root; keeps order `N`.
pub fn ramify_map<C: Coeff>(f: &FormalMap<C>, q: u32, var: usize) -> Result<FormalMap<C>> {
    let n = f.nvars();
    let t = f.trunc();
    let ratio = f.component(var).divide_by_var(var, 1)?;
    let a = ratio.try_sub(&Jet::one(n, ratio.trunc()))?;
    let a = ramify_pullback(&a, q, var);
    let root = a.one_plus_pow(1, q as i64)?.as_polynomial_at(t.saturating_sub(1));
    let comps = (0..n)
        .map(|i| {
            if i == var {
                Ok(root.mul_var_pow(var, 1).truncate(t))
            } else {
                Ok(ramify_pullback(f.component(i), q, var))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    FormalMap::new(comps)
}

pub fn transform_field<C: Coeff>(x: &FormalField<C>, step: &TransformStep<C>) -> Result<FormalField<C>> {
    match &step.kind {
        StepKind::Coord(c) => coord_field(x, c),
        StepKind::BlowUp { center } => blowup_field(x, center),
        StepKind::Ramification { q, var } => ramify_field(x, *q, *var),
    }
}

pub fn transform_map<C: Coeff>(f: &FormalMap<C>, step: &TransformStep<C>) -> Result<FormalMap<C>> {
    match &step.kind {
        StepKind::Coord(c) => coord_map(f, c),
        StepKind::BlowUp { center } => blowup_map(f, center),
        StepKind::Ramification { q, var } => ramify_map(f, *q, *var),
    }
}

/// Strict transform `(γ_1, …) ↦ (γ_d, γ_j/γ_d, …)`; known to `N − ord γ_d`.
pub fn blowup_curve<C: Coeff>(c: &CurveParam<C>, center: &Center) -> Result<CurveParam<C>> {
    let d = center.vars[0];
    let gd = c.component(d);
    let od = gd.order().ok_or_else(|| Error::Precondition("dominant curve component vanishes".into()))?;
    for &j in &center.vars[1..] {
        if let Some(oj) = c.component(j).order() {
            if oj <= od {
                return Err(Error::Precondition(format!(
                    "curve not aligned with the chart: order of component {j} is {oj}, dominant order is {od}"
                )));
            }
        }
    }
    let nt = c.trunc() - od;
    let unit_inv = gd.shift_down(od)?.inverse()?;
    let comps = (0..c.dim())
        .map(|i| {
            if center.contains(i) && i != d {
                Ok(c.component(i).shift_down(od)?.mul(&unit_inv))
            } else {
                Ok(c.component(i).truncate(nt))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    CurveParam::new(comps)
}

/// `(s, γ_2(s^q), …)`; needs the ramified component to be exactly `s`.
pub fn ramify_curve<C: Coeff>(c: &CurveParam<C>, q: u32, var: usize) -> Result<CurveParam<C>> {
    let n = c.trunc();
    if c.component(var) != &Series::monomial(n, 1, C::one()) {
        return Err(Error::Precondition("ramification needs a curve of the form (s, γ_2(s), …)".into()));
    }
    let nt = (q * (n + 1) - 1).min(MAX_DEGREE);
    let comps = (0..c.dim())
        .map(|i| {
            if i == var {
                Series::monomial(nt, 1, C::one())
            } else {
                c.component(i).ramify(q).truncate(nt)
            }
        })
        .collect();
    CurveParam::new(comps)
}

/// `γ̃ = φ⁻¹ ∘ γ` for a coordinate change.
fn coord_curve<C: Coeff>(c: &CurveParam<C>, ch: &CoordChange<C>) -> Result<CurveParam<C>> {
    let n = c.dim();
    let inv = ch.inverse(n, c.trunc())?;
    CurveParam::new(inv.iter().map(|g| c.pull(g)).collect::<Result<Vec<_>>>()?)
}

pub fn transform_curve<C: Coeff>(c: &CurveParam<C>, step: &TransformStep<C>) -> Result<CurveParam<C>> {
    match &step.kind {
        StepKind::Coord(ch) => coord_curve(c, ch),
        StepKind::BlowUp { center } => blowup_curve(c, center),
        StepKind::Ramification { q, var } => ramify_curve(c, *q, *var),
    }
}

/// Whether `X(z_i)` lies in the ideal of the center for each defining variable.
pub fn is_invariant_center<C: Coeff>(x: &FormalField<C>, z: &Center) -> bool {
    z.vars.iter().all(|&i| x.component(i).terms().all(|(m, _)| m.degree_in(&z.vars) >= 1))
}

/// Multiplicity of `X` along the center: the largest `l` with
/// `X(z_i) ∈ I(Z)^l` for every defining variable.
pub fn nu_along<C: Coeff>(x: &FormalField<C>, z: &Center) -> Result<Order> {
    if !is_invariant_center(x, z) {
        return Err(Error::Precondition("center is not invariant for the field".into()));
    }
    Ok(z.vars
        .iter()
        .flat_map(|&i| x.component(i).terms().map(|(m, _)| m.degree_in(&z.vars)).collect::<Vec<_>>())
        .min()
        .map(Order::Finite)
        .unwrap_or(Order::Infinite))
}

/// The clause of permissibility that failed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PermissibilityFailure {
    Transversality,
    Invariance,
    Multiplicity,
}

/// Checks transversality to the curve, invariance, and `ν_Z(X) ≥ ν₀(X)`.
pub fn is_permissible<C: Coeff>(
    x: &FormalField<C>,
    c: &CurveParam<C>,
    z: &Center,
) -> std::result::Result<(), PermissibilityFailure> {
    if z.codim() == x.nvars() {
        let singular = x.components().iter().all(|a| a.constant_term().is_zero());
        return if singular { Ok(()) } else { Err(PermissibilityFailure::Invariance) };
    }
    let t = tangent_line(c);
    if z.vars.iter().all(|&i| t.coords[i].is_zero()) {
        return Err(PermissibilityFailure::Transversality);
    }
    if !is_invariant_center(x, z) {
        return Err(PermissibilityFailure::Invariance);
    }
    let nu = nu_along(x, z).map_err(|_| PermissibilityFailure::Invariance)?;
    if nu < x.multiplicity() {
        return Err(PermissibilityFailure::Multiplicity);
    }
    Ok(())
}

/// Chart data for blowing up `z` along the curve: the dominant variable
/// (smallest order among the center components, ties broken by `prefer`)
/// and the shift `ξ_j = (γ_j/γ_d)(0)`.
pub fn chart_for<C: Coeff>(c: &CurveParam<C>, z: &Center, prefer: Option<usize>) -> Result<(usize, Vec<(usize, C)>)> {
    let ord = |i: usize| c.component(i).order().unwrap_or(u32::MAX);
    let best = z.vars.iter().map(|&i| ord(i)).min().unwrap_or(u32::MAX);
    if best == u32::MAX {
        return Err(Error::Precondition("curve is contained in the center".into()));
    }
    let d = match prefer {
        Some(p) if z.contains(p) && ord(p) == best => p,
        _ => *z.vars.iter().find(|&&i| ord(i) == best).expect("minimum exists"),
    };
    let lead = c.component(d).coeff(best);
    let xi = z
        .vars
        .iter()
        .filter(|&&j| j != d)
        .filter_map(|&j| {
            let v = c.component(j).coeff(best);
            (!v.is_zero()).then(|| (j, v.div_ref(&lead)))
        })
        .collect();
    Ok((d, xi))
}

/// The steps realizing a blow-up of `z` that follows the curve: an optional
/// shift `z_j = z̃_j + ξ_j z̃_d`, then the blow-up with `d` dominant.
pub fn blowup_steps<C: Coeff>(c: &CurveParam<C>, z: &Center, prefer: Option<usize>) -> Result<Vec<TransformStep<C>>> {
    let n = c.dim();
    let (d, xi) = chart_for(c, z, prefer)?;
    let mut steps = Vec::new();
    if !xi.is_empty() {
        let mut m = Mat::identity(n);
        for (j, v) in &xi {
            m.set(*j, d, v.clone());
        }
        steps.push(TransformStep::coord(CoordChange::Linear(m)));
    }
    let mut vars = vec![d];
    vars.extend(z.vars.iter().copied().filter(|&j| j != d));
    steps.push(TransformStep::blow_up(Center { vars }));
    Ok(steps)
}

/// Checks `φ_* X̃ = X`: `X̃(φ_i) = a_i ∘ φ` for every coordinate, to the
/// common order.
pub fn pushforward_holds<C: Coeff>(x: &FormalField<C>, xt: &FormalField<C>, step: &TransformStep<C>) -> Result<bool> {
    let n = x.nvars();
    let t = xt.trunc();
    let (phi, pulled): (Vec<Jet<C>>, Vec<Jet<C>>) = match &step.kind {
        StepKind::Coord(c) => {
            let fw = c.forward(n, x.trunc())?;
            let mut comp = Composer::new(&fw)?;
            let pulled = x.components().iter().map(|a| comp.apply(a)).collect::<Result<Vec<_>>>()?;
            (fw, pulled)
        }
        StepKind::BlowUp { center } => {
            let fw = (0..n).map(|i| blowup_pullback(&Jet::var(n, x.trunc(), i), center)).collect();
            (fw, x.components().iter().map(|a| blowup_pullback(a, center)).collect())
        }
        StepKind::Ramification { q, var } => {
            let fw = (0..n).map(|i| ramify_pullback(&Jet::var(n, x.trunc(), i), *q, *var)).collect();
            (fw, x.components().iter().map(|a| ramify_pullback(a, *q, *var)).collect())
        }
    };
    for i in 0..n {
        let lhs = xt.apply(&phi[i].as_polynomial_at(t))?;
        let k = lhs.trunc().min(pulled[i].trunc());
        if lhs.truncate(k) != pulled[i].truncate(k) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::GaussRat;
    use crate::exp_log::{exp_field, log_map};

    type G = GaussRat;

    fn field(n: usize, t: u32, comps: &[&[(&[u32], i64)]]) -> FormalField<G> {
        FormalField::new(
            comps
                .iter()
                .map(|c| Jet::from_exps(n, t, c.iter().map(|(e, v)| (e.to_vec(), G::from_i64(*v))).collect()))
                .collect(),
        )
        .unwrap()
    }

    fn s(c: &[i64], n: u32) -> Series<G> {
        Series::from_coeffs(n, c.iter().map(|&v| G::from_i64(v)).collect())
    }

    fn curve(cs: &[&[i64]], n: u32) -> CurveParam<G> {
        CurveParam::new(cs.iter().map(|c| s(c, n)).collect()).unwrap()
    }

    #[test]
    fn invariant_centers_and_multiplicity() {
        let radial = field(2, 5, &[&[(&[1, 0], 1)], &[(&[0, 1], 1)]]);
        assert!(is_invariant_center(&radial, &Center::point(2)));
        let dx = field(1, 3, &[&[(&[0], 1)]]);
        assert!(!is_invariant_center(&dx, &Center::new(vec![0]).unwrap()));
        let e = field(2, 6, &[&[(&[3, 0], 1)], &[(&[1, 1], 1), (&[2, 0], -1)]]);
        assert!(is_invariant_center(&e, &Center::new(vec![0]).unwrap()));
        assert!(!is_invariant_center(&e, &Center::new(vec![1]).unwrap()));
        let q = field(2, 5, &[&[(&[2, 0], 1)], &[(&[0, 2], 1)]]);
        assert_eq!(nu_along(&q, &Center::point(2)).unwrap(), Order::Finite(2));
        let r = field(2, 5, &[&[(&[2, 0], 1)], &[(&[1, 1], 1)]]);
        assert_eq!(nu_along(&r, &Center::new(vec![0]).unwrap()).unwrap(), Order::Finite(2));
        let lin = field(1, 5, &[&[(&[1], 1)]]);
        assert_eq!(nu_along(&lin, &Center::new(vec![0]).unwrap()).unwrap(), Order::Finite(1));
    }

    #[test]
    fn permissibility_clauses() {
        let e = field(2, 6, &[&[(&[3, 0], 1)], &[(&[1, 1], 1), (&[2, 0], -1)]]);
        let g = curve(&[&[0, 1], &[0, 1, 1, 2]], 6);
        assert_eq!(is_permissible(&e, &g, &Center::point(2)), Ok(()));
        let axis = curve(&[&[0, 1], &[0]], 6);
        assert_eq!(is_permissible(&e, &axis, &Center::new(vec![1]).unwrap()), Err(PermissibilityFailure::Transversality));
    }

    #[test]
    fn blowup_field_examples() {
        let x = field(2, 5, &[&[(&[1, 0], 1)], &[(&[0, 1], 2)]]);
        let xt = blowup_field(&x, &Center::point(2)).unwrap();
        assert_eq!(xt, field(2, 4, &[&[(&[1, 0], 1)], &[(&[0, 1], 1)]]));
        let x = field(2, 5, &[&[(&[2, 0], 1)], &[(&[1, 1], 1)]]);
        assert_eq!(blowup_field(&x, &Center::point(2)).unwrap(), field(2, 4, &[&[(&[2, 0], 1)], &[]]));
        let radial = field(3, 4, &[&[(&[1, 0, 0], 1)], &[(&[0, 1, 0], 1)], &[(&[0, 0, 1], 1)]]);
        assert_eq!(blowup_field(&radial, &Center::point(3)).unwrap(), field(3, 3, &[&[(&[1, 0, 0], 1)], &[], &[]]));
    }

    #[test]
    fn blowup_curve_examples() {
        let z = Center::point(2);
        assert_eq!(blowup_curve(&curve(&[&[0, 1], &[0, 0, 1]], 6), &z).unwrap(), curve(&[&[0, 1], &[0, 1]], 5));
        assert_eq!(blowup_curve(&curve(&[&[0, 0, 1], &[0, 0, 0, 1]], 6), &z).unwrap(), curve(&[&[0, 0, 1], &[0, 1]], 4));
        let c = blowup_curve(&curve(&[&[0, 0, 1], &[0, 0, 0, 0, 0, 1]], 9), &z).unwrap();
        assert_eq!(c, curve(&[&[0, 0, 1], &[0, 0, 0, 1]], 7));
        assert_eq!(blowup_curve(&c, &z).unwrap(), curve(&[&[0, 0, 1], &[0, 1]], 5));
    }

    #[test]
    fn ramify_examples() {
        let x = field(1, 6, &[&[(&[2], 1)]]);
        let xt = ramify_field(&x, 2, 0).unwrap();
        assert_eq!(xt.component(0), &Jet::from_exps(1, 6, vec![(vec![3], G::from_ratio(1, 2))]));
        assert_eq!(ramify_field(&x, 1, 0).unwrap(), x);
        let r = field(2, 5, &[&[(&[1, 0], 1)], &[(&[0, 1], 1)]]);
        let rt = ramify_field(&r, 3, 0).unwrap();
        assert_eq!(rt.component(0), &Jet::from_exps(2, 5, vec![(vec![1, 0], G::from_ratio(1, 3))]));
        assert_eq!(rt.component(1), r.component(1));
        assert_eq!(ramify_curve(&curve(&[&[0, 1], &[0, 0, 1]], 4), 2, 0).unwrap(), curve(&[&[0, 1], &[0, 0, 0, 0, 1]], 9));
        let c = curve(&[&[0, 1], &[0, 1, 1, 2]], 3);
        assert_eq!(ramify_curve(&c, 1, 0).unwrap(), c);
    }

    #[test]
    fn commutation_with_exp() {
        let x = field(2, 8, &[&[(&[3, 0], 1)], &[(&[1, 1], 1), (&[2, 0], -1)]]);
        let f = exp_field(&x).unwrap();
        let ft = ramify_map(&f, 2, 0).unwrap();
        assert_eq!(log_map(&ft).unwrap(), ramify_field(&x, 2, 0).unwrap());
        let radial = field(2, 7, &[&[(&[2, 0], 1)], &[(&[1, 1], 1)]]);
        let f = exp_field(&radial).unwrap();
        let ft = blowup_map(&f, &Center::point(2)).unwrap();
        assert_eq!(log_map(&ft).unwrap(), blowup_field(&radial, &Center::point(2)).unwrap());
        let id = FormalMap::<G>::identity(2, 6);
        assert_eq!(blowup_map(&id, &Center::point(2)).unwrap(), FormalMap::identity(2, 5));
    }

    #[test]
    fn coordinate_changes_roundtrip() {
        let x = field(2, 6, &[&[(&[3, 0], 1)], &[(&[1, 1], 1), (&[2, 0], -1)]]);
        let f = exp_field(&x).unwrap();
        let tr = TransformStep::coord(CoordChange::Translate(vec![s(&[0, -1, 2], 6)]));
        let xt = transform_field(&x, &tr).unwrap();
        assert!(pushforward_holds(&x, &xt, &tr).unwrap());
        assert_eq!(log_map(&transform_map(&f, &tr).unwrap()).unwrap(), xt);
        let p = MatSeries::from_entries(1, vec![s(&[2, 1], 6)]);
        let pl = TransformStep::coord(CoordChange::PolyLinear(p));
        let xp = transform_field(&x, &pl).unwrap();
        assert!(pushforward_holds(&x, &xp, &pl).unwrap());
        assert_eq!(log_map(&transform_map(&f, &pl).unwrap()).unwrap(), xp);
        let lin = TransformStep::coord(CoordChange::Linear(Mat::from_i64_rows(&[&[1, 0], &[3, 1]])));
        let xl = transform_field(&x, &lin).unwrap();
        assert!(pushforward_holds(&x, &xl, &lin).unwrap());
    }

    #[test]
    fn chart_shift_follows_tangent() {
        let c = curve(&[&[0, 1], &[0, 2, 1]], 6);
        let steps = blowup_steps(&c, &Center::point(2), None).unwrap();
        assert_eq!(steps.len(), 2);
        let mut seq = TransformSequence::new();
        for st in steps {
            seq.push(st);
        }
        let ct = seq.apply_curve(&c).unwrap();
        assert_eq!(ct, curve(&[&[0, 1], &[0, 1]], 5));
        assert_eq!(seq.total_divisor, Some(0));
    }
}
