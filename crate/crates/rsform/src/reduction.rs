//! Reduction of a field or diffeomorphism along an invariant formal curve to
//! Ramis-Sibuya form.
//!
//! The pipeline blows up points along the curve until the curve is smooth
//! and transversal to the divisor `{x = 0}` and the field has the pre-normal
//! shape `x^l [x^{q+1} u ∂x + (c + A y + Θ) ∂y]`. When `q ≥ 1` the linear
//! system along the curve is reduced by [`turrittin_reduce`], and every
//! linear step is realized by a permissible transformation of the field.

use crate::coeff::Coeff;
use crate::curves::{invariance_h, normalize_irreducible, CurveParam};
use crate::error::{Error, Result};
use crate::exp_log::{log_map, FormalField, FormalMap};
use crate::jet::{Jet, Order};
use crate::linalg::Mat;
use crate::mono::Mono;
use crate::series::{MatSeries, Series};
use crate::transforms::{
    blowup_steps, chart_for, is_permissible, Center, CoordChange, StepKind, TransformSequence, TransformStep,
};
use crate::turrittin::{rs_form, turrittin_reduce, LinearSystem, TTransform};

/// Largest number of point blow-ups spent on resolving the curve.
const MAX_CURVE_BLOWUPS: usize = 32;

/// Values of the shifting parameter tried by [`reduce_field`].
const SHIFT_LADDER: [u32; 6] = [0, 1, 2, 4, 8, 16];

fn tol<C: Coeff>() -> f64 {
    1e3 * C::default_eps().max(f64::EPSILON)
}

fn is_zero_at<C: Coeff>(v: &C, scale: f64) -> bool {
    v.is_zero() || (!C::EXACT && v.is_negligible(scale, tol::<C>()))
}

fn clean<C: Coeff>(j: &Jet<C>) -> Jet<C> {
    if C::EXACT {
        j.clone()
    } else {
        j.clone().normalized_with(tol::<C>())
    }
}

fn clean_field<C: Coeff>(x: &FormalField<C>) -> FormalField<C> {
    FormalField::new(x.components().iter().map(clean).collect()).expect("same shape")
}

/// Largest power of `x = z_0` dividing every component.
fn x_power<C: Coeff>(comps: &[Jet<C>]) -> Result<u32> {
    let t = comps.first().map(|j| j.trunc()).unwrap_or(0);
    let e = comps.iter().filter_map(|j| clean(j).min_exp(0)).min();
    match e {
        Some(e) => Ok(e.min(t)),
        None => Err(Error::Degenerate("all components vanish to the truncation order".into())),
    }
}

fn divide_all<C: Coeff>(comps: &[Jet<C>], k: u32) -> Result<Vec<Jet<C>>> {
    comps.iter().map(|j| clean(j).divide_by_var(0, k)).collect()
}

/// Splits `g(x, y)` into its part free of `y`, the coefficients of `y_j`
/// as series in `x`, and the part of `y`-degree at least two.
fn split_in_y<C: Coeff>(g: &Jet<C>) -> (Series<C>, Vec<Series<C>>, Jet<C>) {
    let n = g.nvars();
    let t = g.trunc();
    let ys: Vec<usize> = (1..n).collect();
    let mut c = Series::zero(t);
    let mut lin = vec![Series::zero(t.saturating_sub(1)); n - 1];
    let mut rest = Vec::new();
    for (m, v) in g.terms() {
        match m.degree_in(&ys) {
            0 => c.set(m.exp(0), v.clone()),
            1 => {
                let j = (1..n).find(|&j| m.exp(j) == 1).expect("one y variable");
                lin[j - 1].set(m.exp(0), v.clone());
            }
            _ => rest.push((m, v.clone())),
        }
    }
    (c, lin, Jet::from_terms(n, t, rest))
}

fn matrix_from_rows<C: Coeff>(rows: Vec<Vec<Series<C>>>) -> MatSeries<C> {
    let m = rows.len();
    MatSeries::from_entries(m, rows.into_iter().flatten().collect())
}

/// `x^l [x^{q+1} u ∂x + (c + A y + Θ) ∂y]` with `A(0) ≠ 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct PreNormalField<C: Coeff> {
    pub l: u32,
    pub q: u32,
    pub u: Jet<C>,
    pub c: Vec<Series<C>>,
    pub a: MatSeries<C>,
    pub theta: Vec<Jet<C>>,
}

impl<C: Coeff> PreNormalField<C> {
    /// The field rebuilt from its parts, known to order `trunc`.
    pub fn assemble(&self, trunc: u32) -> Result<FormalField<C>> {
        let n = self.u.nvars();
        let inner = trunc.checked_sub(self.l).ok_or_else(|| Error::Budget {
            context: "pre-normal reassembly".into(),
            have: trunc,
            needed: self.l,
        })?;
        let mut comps = vec![self.u.truncate(inner).mul_var_pow(0, self.q + 1).truncate(inner)];
        for i in 0..n - 1 {
            let mut g = self.c[i].to_jet_in(n, 0, inner).try_add(&self.theta[i].truncate(inner).as_polynomial_at(inner))?;
            for j in 0..n - 1 {
                let e = self.a.entry(i, j).to_jet_in(n, 0, inner).mul_term(Mono::var(j + 1), &C::one());
                g = g.try_add(&e)?;
            }
            comps.push(g);
        }
        let comps = comps.into_iter().map(|g| g.mul_var_pow(0, self.l).as_polynomial_at(trunc)).collect();
        FormalField::new(comps)
    }
}

/// `x^k [x^{p+1} u ∂x + (c + (D + x^p C + x^{p+1}(…)) y + Θ) ∂y]` with either
/// `p = 0` and `C ≠ 0`, or `p ≥ 1`, `D` diagonal of degree below `p`,
/// `D(0) ≠ 0` and `D` commuting with `C`.
#[derive(Clone, Debug, PartialEq)]
pub struct RsFieldData<C: Coeff> {
    pub k: u32,
    pub p: u32,
    pub u: Jet<C>,
    pub c: Vec<Series<C>>,
    pub d: Vec<Series<C>>,
    pub cc: Mat<C>,
    /// Full coefficient of `y` in the bracket.
    pub linear: MatSeries<C>,
    pub theta: Vec<Jet<C>>,
}

impl<C: Coeff> RsFieldData<C> {
    pub fn d_matrix(&self) -> MatSeries<C> {
        diag_matrix(&self.d, self.p)
    }
}

/// `F = (x + λ x^{k+p+1}(1 + ψ), y + x^k [b + (D + x^p C + x^{p+1} A) y + O(y²)])`.
#[derive(Clone, Debug, PartialEq)]
pub struct RsDiffeoData<C: Coeff> {
    pub k: u32,
    pub p: u32,
    pub lambda: C,
    pub psi: Jet<C>,
    pub b: Vec<Series<C>>,
    pub d: Vec<Series<C>>,
    pub cc: Mat<C>,
    pub a: MatSeries<C>,
    pub linear: MatSeries<C>,
}

impl<C: Coeff> RsDiffeoData<C> {
    pub fn d_matrix(&self) -> MatSeries<C> {
        diag_matrix(&self.d, self.p)
    }
}

fn diag_matrix<C: Coeff>(d: &[Series<C>], p: u32) -> MatSeries<C> {
    let mut out = MatSeries::zero(d.len(), p.saturating_sub(1));
    for (i, s) in d.iter().enumerate() {
        out.set_entry(i, i, s.truncate(p.saturating_sub(1)));
    }
    out
}

/// Splits `x^p`-graded linear data into `(D, C)` after checking the shape.
fn principal_part<C: Coeff>(lin: &MatSeries<C>, p: u32) -> Result<(Vec<Series<C>>, Mat<C>)> {
    if lin.trunc() < p {
        return Err(Error::Budget { context: "linear part".into(), have: lin.trunc(), needed: p });
    }
    let l0 = lin.coeff(0).pruned(tol::<C>());
    if l0.is_zero() {
        return Err(Error::NotInForm(if p == 0 {
            "p = 0 and C = 0".into()
        } else {
            "D(0) = 0".into()
        }));
    }
    let f = rs_form(&LinearSystem::new(p, lin.truncate(p)))?;
    Ok((f.d, f.c))
}

/// Reads the Ramis-Sibuya shape off a field in adapted coordinates.
pub fn field_form<C: Coeff>(x: &FormalField<C>) -> Result<RsFieldData<C>> {
    let n = x.nvars();
    if n < 2 {
        return Err(Error::Structural("need at least two variables".into()));
    }
    let k = x_power(x.components())?;
    let xb = divide_all(x.components(), k)?;
    let a = &xb[0];
    let p1 = a.min_exp(0).ok_or_else(|| Error::NotInForm("x-component vanishes".into()))?;
    if p1 == 0 {
        return Err(Error::NotInForm("x-component is not divisible by x after removing x^k".into()));
    }
    let scale = a.max_magnitude();
    if is_zero_at(&a.coeff(Mono::var_pow(0, p1)), scale) {
        return Err(Error::NotInForm("x-component is not x^(p+1) times a unit".into()));
    }
    let p = p1 - 1;
    let u = a.divide_by_var(0, p1)?;
    let mut c = Vec::new();
    let mut rows = Vec::new();
    let mut theta = Vec::new();
    for g in &xb[1..] {
        let (ci, li, ti) = split_in_y(g);
        if !is_zero_at(&ci.coeff(0), 1.0) {
            return Err(Error::NotInForm("constant term of the y-components is nonzero".into()));
        }
        c.push(ci);
        rows.push(li);
        theta.push(ti);
    }
    let linear = matrix_from_rows(rows);
    let (d, cc) = principal_part(&linear, p)?;
    Ok(RsFieldData { k, p, u, c, d, cc, linear, theta })
}

/// Reads the Ramis-Sibuya shape off a diffeomorphism in adapted coordinates.
pub fn diffeo_form<C: Coeff>(f: &FormalMap<C>) -> Result<RsDiffeoData<C>> {
    let n = f.nvars();
    if n < 2 {
        return Err(Error::Structural("need at least two variables".into()));
    }
    let disp = f.displacement();
    let k = x_power(&disp)?;
    if k == 0 {
        return Err(Error::NotInForm("F − id is not divisible by x".into()));
    }
    let g = divide_all(&disp, k)?;
    let p1 = g[0].min_exp(0).ok_or_else(|| Error::NotInForm("x∘F = x".into()))?;
    if p1 == 0 {
        return Err(Error::NotInForm("x∘F − x is not divisible by x^(k+1)".into()));
    }
    let lambda = g[0].coeff(Mono::var_pow(0, p1));
    if is_zero_at(&lambda, g[0].max_magnitude()) {
        return Err(Error::NotInForm("x∘F − x is not λ x^(k+p+1) times a unit".into()));
    }
    let p = p1 - 1;
    let unit = g[0].divide_by_var(0, p1)?.scale(&C::one().div_ref(&lambda));
    let psi = unit.try_sub(&Jet::one(n, unit.trunc()))?;
    let mut b = Vec::new();
    let mut rows = Vec::new();
    for gi in &g[1..] {
        let (bi, li, _) = split_in_y(gi);
        if !is_zero_at(&bi.coeff(0), 1.0) {
            return Err(Error::NotInForm("b(0) ≠ 0".into()));
        }
        b.push(bi);
        rows.push(li);
    }
    let linear = matrix_from_rows(rows);
    let (d, cc) = principal_part(&linear, p)?;
    let a = if linear.trunc() > p {
        let mut rest = linear.clone();
        for e in 0..=p {
            rest.set_coeff(e, &Mat::zeros(n - 1, n - 1));
        }
        rest.shift_down(p + 1)?
    } else {
        MatSeries::zero(n - 1, 0)
    };
    Ok(RsDiffeoData { k, p, lambda, psi, b, d, cc, a, linear })
}

/// Checks `I + x^k(D + x^p C) = J_{k+p} exp(x^k(𝒟 + x^p 𝒞))`.
pub fn generator_relation_holds<C: Coeff>(f: &RsDiffeoData<C>, x: &RsFieldData<C>) -> bool {
    if f.k != x.k || f.p != x.p || f.k == 0 {
        return false;
    }
    let (k, p) = (f.k, f.p);
    let t = k + p;
    let m = f.d.len();
    let principal = |d: &[Series<C>], c: &Mat<C>| {
        let mut s = MatSeries::zero(m, t);
        for (i, di) in d.iter().enumerate() {
            for j in 0..p {
                s.set_entry(i, i, {
                    let mut e = s.entry(i, i).clone();
                    e.set(k + j, di.coeff(j));
                    e
                });
            }
        }
        let mut top = s.coeff(t);
        top = top.add(c);
        s.set_coeff(t, &top);
        s
    };
    let gen = principal(&x.d, &x.cc);
    let mut exp = MatSeries::identity(m, t);
    let mut term = MatSeries::identity(m, t);
    let mut j = 1i64;
    while (j as u32) * k <= t {
        term = term.mul(&gen).scale(&C::from_ratio(1, j));
        exp = exp.add(&term);
        j += 1;
    }
    let lhs = MatSeries::identity(m, t).add(&principal(&f.d, &f.cc));
    let scale = exp.scale_mag().max(1.0);
    (0..=t).all(|e| {
        let diff = lhs.coeff(e).sub(&exp.coeff(e));
        (0..m).all(|a| (0..m).all(|b| is_zero_at(diff.get(a, b), scale)))
    })
}

/// Outcome of [`prenormalize`].
#[derive(Clone, Debug, PartialEq)]
pub enum PreNormal<C: Coeff> {
    Form(PreNormalField<C>),
    /// The field divided by its power of `x` was non-singular; one more
    /// blow-up gave the Ramis-Sibuya form with `p = 0` directly.
    Exit(RsFieldData<C>),
}

#[derive(Clone, Debug)]
pub struct Prenormalization<C: Coeff> {
    pub seq: TransformSequence<C>,
    pub result: PreNormal<C>,
    pub field: FormalField<C>,
    pub curve: CurveParam<C>,
}

/// Working state: the sequence so far and the transformed field and curve.
struct State<C: Coeff> {
    seq: TransformSequence<C>,
    field: FormalField<C>,
    curve: CurveParam<C>,
}

impl<C: Coeff> State<C> {
    fn push(&mut self, step: TransformStep<C>) -> Result<()> {
        if let StepKind::BlowUp { center } = &step.kind {
            if let Err(why) = is_permissible(&self.field, &self.curve, center) {
                return Err(Error::Precondition(format!("blow-up of {:?} is not permissible: {why:?}", center.vars)));
            }
        }
        self.field = clean_field(&crate::transforms::transform_field(&self.field, &step)?);
        self.curve = crate::transforms::transform_curve(&self.curve, &step)?;
        self.seq.push(step);
        Ok(())
    }

    fn blow_up_point(&mut self, prefer: Option<usize>) -> Result<()> {
        let n = self.field.nvars();
        for s in blowup_steps(&self.curve, &Center::point(n), prefer)? {
            self.push(s)?;
        }
        Ok(())
    }

    /// Reparametrizes the curve as a graph over the first axis.
    fn to_graph(&mut self) -> Result<()> {
        let sigma = self.curve.component(0).compositional_inverse()?;
        let c = self.curve.reparametrize(&sigma)?;
        self.curve = CurveParam::graph(c.graph_part())?;
        Ok(())
    }
}

fn check_start<C: Coeff>(x: &FormalField<C>, c: &CurveParam<C>) -> Result<()> {
    if x.nvars() != c.dim() || x.nvars() < 2 {
        return Err(Error::Structural("field and curve must live in the same space of dimension at least 2".into()));
    }
    if x.components().iter().any(|a| !is_zero_at(&a.constant_term(), 1.0)) {
        return Err(Error::Precondition("the field must vanish at the origin".into()));
    }
    let nu = match x.multiplicity() {
        Order::Finite(v) => v,
        Order::Infinite => return Err(Error::Degenerate("the field vanishes to the truncation order".into())),
    };
    let needed = 4 * (nu + c.multiplicity());
    if x.trunc() < needed {
        return Err(Error::Budget { context: "reduction input".into(), have: x.trunc(), needed });
    }
    let h = invariance_h(x, c)?;
    if h.h.truncate(h.budget).order().is_none() {
        return Err(Error::Precondition("the curve lies in the singular locus of the field".into()));
    }
    Ok(())
}

/// Blows up points along the curve until it is smooth, transversal to the
/// only divisor component through the current point, and that component is
/// `{z_0 = 0}`.
fn resolve_curve<C: Coeff>(st: &mut State<C>) -> Result<()> {
    let n = st.field.nvars();
    st.curve = normalize_irreducible(&st.curve);
    let mut divisors: Vec<usize> = Vec::new();
    let mut x_var = None;
    for _ in 0..=MAX_CURVE_BLOWUPS {
        let ord = |i: usize| st.curve.component(i).order();
        if st.curve.multiplicity() == 1 {
            match divisors.as_slice() {
                [] => x_var = (0..n).find(|&i| ord(i) == Some(1)),
                [d] if ord(*d) == Some(1) => x_var = Some(*d),
                _ => {}
            }
            if x_var.is_some() {
                break;
            }
        }
        let prefer = divisors.last().copied();
        let (d, xi) = chart_for(&st.curve, &Center::point(n), prefer)?;
        st.blow_up_point(prefer)?;
        let shifted: Vec<usize> = xi.iter().map(|(j, _)| *j).collect();
        let mut next = vec![d];
        next.extend(divisors.iter().copied().filter(|&i| i != d && !shifted.contains(&i)));
        next.sort_unstable();
        next.dedup();
        divisors = next;
        st.curve = normalize_irreducible(&st.curve);
    }
    let x = x_var.ok_or_else(|| Error::Unsupported("curve resolution did not terminate".into()))?;
    if x != 0 {
        let perm: Vec<usize> = (0..n).map(|i| if i == x { 0 } else if i < x { i + 1 } else { i }).collect();
        st.push(TransformStep::coord(CoordChange::Permute(perm)))?;
    }
    st.to_graph()
}

/// The divided field `X/x^e` at the current point.
fn divided<C: Coeff>(x: &FormalField<C>) -> Result<(u32, Vec<Jet<C>>)> {
    let e = x_power(x.components())?;
    Ok((e, divide_all(x.components(), e)?))
}

fn is_nonsingular<C: Coeff>(comps: &[Jet<C>]) -> bool {
    let scale = comps.iter().map(|j| j.max_magnitude()).fold(0.0, f64::max);
    comps.iter().any(|j| !is_zero_at(&j.constant_term(), scale))
}

/// One more blow-up for a field that is `x^e` times a non-singular field.
fn nonsingular_exit<C: Coeff>(st: &mut State<C>) -> Result<RsFieldData<C>> {
    st.blow_up_point(Some(0))?;
    st.to_graph()?;
    field_form(&st.field)
}

/// Blow-ups along the curve and the pre-normal data of the result.
pub fn prenormalize<C: Coeff>(x: &FormalField<C>, c: &CurveParam<C>) -> Result<Prenormalization<C>> {
    check_start(x, c)?;
    let mut st = State { seq: TransformSequence::new(), field: clean_field(x), curve: c.clone() };
    resolve_curve(&mut st)?;
    let start_trunc = st.field.trunc();
    loop {
        let (e, xb) = divided(&st.field)?;
        if is_nonsingular(&xb) {
            let data = nonsingular_exit(&mut st)?;
            return Ok(Prenormalization { seq: st.seq, result: PreNormal::Exit(data), field: st.field, curve: st.curve });
        }
        let a = &xb[0];
        let r = st
            .curve
            .pull(a)?
            .order()
            .ok_or_else(|| Error::Precondition("the curve lies in the singular locus of the divided field".into()))?;
        let a_ok = a.min_exp(0).map_or(false, |m| m >= r);
        let lin0 = Mat::from_fn(xb.len() - 1, xb.len() - 1, |i, j| xb[i + 1].coeff(Mono::var(j + 1)));
        if a_ok && !lin0.pruned(tol::<C>()).is_zero() {
            let (cs, rows, theta): (Vec<_>, Vec<_>, Vec<_>) = {
                let mut cs = Vec::new();
                let mut rows = Vec::new();
                let mut th = Vec::new();
                for g in &xb[1..] {
                    let (ci, li, ti) = split_in_y(g);
                    cs.push(ci);
                    rows.push(li);
                    th.push(ti);
                }
                (cs, rows, th)
            };
            let pn = PreNormalField { l: e, q: r - 1, u: a.divide_by_var(0, r)?, c: cs, a: matrix_from_rows(rows), theta };
            return Ok(Prenormalization { seq: st.seq, result: PreNormal::Form(pn), field: st.field, curve: st.curve });
        }
        if st.field.trunc() + 4 < start_trunc / 2 + r {
            return Err(Error::Budget {
                context: "pre-normal blow-ups".into(),
                have: x.trunc(),
                needed: x.trunc() + start_trunc,
            });
        }
        st.blow_up_point(Some(0))?;
        st.to_graph()?;
    }
}

/// `x^{q+1} w' = u(x, γ̄(x))⁻¹ Â(x) w`, where `Â` is the linear part of the
/// field written in `ŷ = y − γ̄(x)`.
pub fn associated_system<C: Coeff>(pn: &PreNormalField<C>, c: &CurveParam<C>) -> Result<LinearSystem<C>> {
    let t = c.trunc().min(pn.u.trunc() + pn.l + pn.q + 1).min(pn.a.trunc() + pn.l + 1);
    let field = pn.assemble(t)?;
    let shift = TransformStep::coord(CoordChange::Translate(c.graph_part()));
    let moved = crate::transforms::transform_field(&field, &shift)?;
    let xb = divide_all(moved.components(), pn.l)?;
    let rows: Vec<Vec<Series<C>>> = xb[1..].iter().map(|g| split_in_y(g).1).collect();
    let a_hat = matrix_from_rows(rows);
    let ug = c.pull(&pn.u)?;
    let tt = a_hat.trunc().min(ug.trunc());
    let uinv = ug.truncate(tt).inverse()?;
    let b = a_hat.truncate(tt).map_entries(|s| s.mul(&uinv));
    Ok(LinearSystem::new(pn.q, b))
}

/// Result of [`reduce_field`].
#[derive(Clone, Debug)]
pub struct FieldReduction<C: Coeff> {
    pub seq: TransformSequence<C>,
    pub data: RsFieldData<C>,
    pub field: FormalField<C>,
    pub curve: CurveParam<C>,
    /// Linear transformations found for the associated system.
    pub linear_steps: Vec<TTransform<C>>,
    /// Pre-normal exponents `(l, q)`; `None` after the non-singular exit.
    pub prenormal: Option<(u32, u32)>,
    /// Product of the ramification indices.
    pub ramification: u32,
    /// Translation order and number of shifting blow-ups.
    pub shift: (u32, u32),
}

fn finish<C: Coeff>(st: &mut State<C>) -> Result<RsFieldData<C>> {
    let (_, xb) = divided(&st.field)?;
    if is_nonsingular(&xb) {
        return nonsingular_exit(st);
    }
    field_form(&st.field)
}

/// Realizes the linear steps on the field, preceded by the translation
/// `y = ỹ + J_m γ̄` and `mm` blow-ups of the origin.
fn realize<C: Coeff>(
    base: &State<C>,
    steps: &[TTransform<C>],
    m: u32,
    mm: u32,
) -> Result<State<C>> {
    let n = base.field.nvars();
    let mut st = State { seq: TransformSequence::new(), field: base.field.clone(), curve: base.curve.clone() };
    let jets: Vec<Series<C>> = st.curve.graph_part().iter().map(|s| s.truncate(m)).collect();
    st.push(TransformStep::coord(CoordChange::Translate(jets)))?;
    st.to_graph()?;
    for _ in 0..mm {
        st.push(TransformStep::blow_up(Center::point(n)))?;
    }
    for t in steps {
        match t {
            TTransform::PolyLinear(p) => st.push(TransformStep::coord(CoordChange::PolyLinear(p.clone())))?,
            TTransform::Shearing(k) => {
                for (j, &kj) in k.iter().enumerate() {
                    for _ in 0..kj {
                        st.push(TransformStep::blow_up(Center::new(vec![0, j + 1])?))?;
                    }
                }
            }
            TTransform::Ramify(a) => st.push(TransformStep::ramification(*a, 0))?,
        }
        st.to_graph()?;
    }
    Ok(st)
}

/// Transformations bringing a field to Ramis-Sibuya form along the curve.
pub fn reduce_field<C: Coeff>(x: &FormalField<C>, c: &CurveParam<C>) -> Result<FieldReduction<C>> {
    let pre = prenormalize(x, c)?;
    let pn = match pre.result {
        PreNormal::Exit(data) => {
            return Ok(FieldReduction {
                seq: pre.seq,
                data,
                field: pre.field,
                curve: pre.curve,
                linear_steps: Vec::new(),
                prenormal: None,
                ramification: 1,
                shift: (0, 0),
            })
        }
        PreNormal::Form(pn) => pn,
    };
    let base = State { seq: pre.seq.clone(), field: pre.field.clone(), curve: pre.curve.clone() };
    let done = |mut st: State<C>, data, steps: Vec<TTransform<C>>, shift| {
        let ramification = steps.iter().map(|t| if let TTransform::Ramify(a) = t { *a } else { 1 }).product();
        let mut seq = pre.seq.clone();
        seq.extend(std::mem::replace(&mut st.seq, TransformSequence::new()));
        FieldReduction {
            seq,
            data,
            field: st.field,
            curve: st.curve,
            linear_steps: steps,
            prenormal: Some((pn.l, pn.q)),
            ramification,
            shift,
        }
    };
    if pn.q == 0 {
        let mut st = State { seq: TransformSequence::new(), field: base.field.clone(), curve: base.curve.clone() };
        let data = finish(&mut st)?;
        return Ok(done(st, data, Vec::new(), (0, 0)));
    }
    let sys = associated_system(&pn, &pre.curve)?;
    let out = turrittin_reduce(&sys)?;
    if out.transforms.is_empty() {
        let mut st = State { seq: TransformSequence::new(), field: base.field.clone(), curve: base.curve.clone() };
        if let Ok(data) = finish(&mut st) {
            return Ok(done(st, data, Vec::new(), (0, 0)));
        }
    }
    let mut last = None;
    for &mm in &SHIFT_LADDER {
        let m = mm + 2;
        if m + mm + 2 > base.field.trunc() {
            break;
        }
        let attempt = realize(&base, &out.transforms, m, mm).and_then(|mut st| {
            let data = finish(&mut st)?;
            Ok((st, data))
        });
        match attempt {
            Ok((st, data)) => return Ok(done(st, data, out.transforms.clone(), (m, mm))),
            Err(e @ Error::Budget { .. }) => {
                last = Some(e);
                break;
            }
            Err(e) => last = Some(e),
        }
    }
    Err(match last {
        Some(Error::Budget { context, have, needed }) => Error::Budget { context, have: x.trunc(), needed: x.trunc() + needed - have.min(needed) + 1 },
        Some(e @ Error::NotInForm(_)) | Some(e @ Error::Precondition(_)) | Some(e @ Error::Divisibility { .. }) => Error::Budget {
            context: format!("shifting ladder exhausted ({e})"),
            have: x.trunc(),
            needed: 2 * x.trunc(),
        },
        Some(e) => e,
        None => Error::Budget { context: "shifting ladder".into(), have: x.trunc(), needed: 2 * x.trunc() },
    })
}

/// Result of [`reduce_diffeo`].
#[derive(Clone, Debug)]
pub struct DiffeoReduction<C: Coeff> {
    pub field: FieldReduction<C>,
    pub map: FormalMap<C>,
    pub data: RsDiffeoData<C>,
}

/// Reduces `F` by reducing `log F` and conjugating `F` by the same steps.
pub fn reduce_diffeo<C: Coeff>(f: &FormalMap<C>, c: &CurveParam<C>) -> Result<DiffeoReduction<C>> {
    let x = log_map(f)?;
    if !matches!(x.multiplicity(), Order::Finite(v) if v >= 2) {
        return Err(Error::Precondition("F must be tangent to the identity and not the identity".into()));
    }
    if c.dim() == f.nvars() && curve_is_fixed(f, c)? {
        return Err(Error::Precondition("the curve lies in the fixed-point set of F up to the truncation order".into()));
    }
    let red = reduce_field(&x, c)?;
    let map = red.seq.apply_map(f)?;
    let data = diffeo_form(&map)?;
    if data.k != red.data.k || data.p != red.data.p {
        return Err(Error::NotInForm(format!(
            "map exponents (k, p) = ({}, {}) disagree with the generator's ({}, {})",
            data.k, data.p, red.data.k, red.data.p
        )));
    }
    if !generator_relation_holds(&data, &red.data) {
        return Err(Error::NotInForm("linear part of the map is not the exponential of the generator's".into()));
    }
    Ok(DiffeoReduction { field: red, map, data })
}

fn curve_is_fixed<C: Coeff>(f: &FormalMap<C>, c: &CurveParam<C>) -> Result<bool> {
    for (j, fj) in f.components().iter().enumerate() {
        let g = fj.try_sub(&Jet::var(f.nvars(), f.trunc(), j))?;
        if !c.pull(&g)?.is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Shape test for a diffeomorphism in coordinates adapted to the curve.
pub fn detect_rs<C: Coeff>(f: &FormalMap<C>, c: &CurveParam<C>) -> Result<RsDiffeoData<C>> {
    if f.nvars() != c.dim() {
        return Err(Error::Structural("map and curve dimensions differ".into()));
    }
    if normalize_irreducible(c).component(0).order() != Some(1) {
        return Err(Error::Precondition("the curve is not transversal to {x = 0}".into()));
    }
    diffeo_form(f)
}

/// Order of `x∘F − x` along the curve.
pub fn restricted_order<C: Coeff>(f: &FormalMap<C>, c: &CurveParam<C>) -> Result<Option<u32>> {
    let g = f.component(0).try_sub(&Jet::var(f.nvars(), f.trunc(), 0))?;
    Ok(c.pull(&g)?.order())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::GaussRat;
    use crate::exp_log::exp_field;
    use num_traits::Zero;

    fn g(n: i64) -> GaussRat {
        GaussRat::from_i64(n)
    }

    fn field2(t: u32, a: &[(u32, u32, i64)], b: &[(u32, u32, i64)]) -> FormalField<GaussRat> {
        let mk = |v: &[(u32, u32, i64)]| Jet::from_exps(2, t, v.iter().map(|&(i, j, c)| (vec![i, j], g(c))).collect());
        FormalField::new(vec![mk(a), mk(b)]).unwrap()
    }

    /// Graph of the invariant curve of `x² y' = y − x`.
    fn euler_curve(t: u32) -> CurveParam<GaussRat> {
        let mut s = Series::zero(t);
        let mut f = 1i64;
        for k in 1..=t {
            s.set(k, g(f));
            f *= k as i64;
        }
        CurveParam::graph(vec![s]).unwrap()
    }

    fn euler(t: u32) -> FormalField<GaussRat> {
        field2(t, &[(3, 0, 1)], &[(1, 1, 1), (2, 0, -1)])
    }

    #[test]
    fn euler_prenormal_data() {
        let pre = prenormalize(&euler(12), &euler_curve(12)).unwrap();
        assert!(pre.seq.is_empty());
        let PreNormal::Form(pn) = pre.result else { panic!("expected pre-normal form") };
        assert_eq!((pn.l, pn.q), (1, 1));
        assert_eq!(pn.u, Jet::one(2, pn.u.trunc()));
        assert_eq!(pn.c[0].coeff(1), g(-1));
        assert!(pn.c[0].coeffs().iter().skip(2).all(|v| v.is_zero()));
        assert_eq!(pn.a.coeff(0), Mat::identity(1));
        assert!(pn.theta[0].is_zero());
        assert_eq!(pn.assemble(12).unwrap(), euler(12));
        let sys = associated_system(&pn, &pre.curve).unwrap();
        assert_eq!(sys.rank, 1);
        assert_eq!(sys.matrix.coeff(0), Mat::identity(1));
        assert!((1..=sys.trunc()).all(|k| sys.matrix.coeff(k).is_zero()));
    }

    #[test]
    fn associated_system_inverts_u() {
        let t = 10;
        let n = 3;
        let u = Jet::from_exps(n, t, vec![(vec![0, 0, 0], g(1)), (vec![1, 0, 0], g(1))]);
        let pn = PreNormalField {
            l: 1,
            q: 1,
            u,
            c: vec![Series::zero(t), Series::zero(t)],
            a: MatSeries::from_coeff_mats(t - 1, &[Mat::diagonal(&[g(1), g(2)])]),
            theta: vec![Jet::zero(n, t), Jet::zero(n, t)],
        };
        let curve = CurveParam::graph(vec![Series::zero(t), Series::zero(t)]).unwrap();
        let sys = associated_system(&pn, &curve).unwrap();
        for k in 0..sys.trunc() {
            let s = GaussRat::from_i64(if k % 2 == 0 { 1 } else { -1 });
            assert_eq!(sys.matrix.coeff(k), Mat::diagonal(&[s.clone(), s.scale_i64(2)]));
        }
    }

    #[test]
    fn euler_field_reduction() {
        let red = reduce_field(&euler(12), &euler_curve(12)).unwrap();
        assert!(red.linear_steps.is_empty());
        assert_eq!((red.data.k, red.data.p), (1, 1));
        assert_eq!(red.data.d[0].coeff(0), g(1));
        assert_eq!(red.data.cc, Mat::zeros(1, 1));
    }

    #[test]
    fn euler_diffeo_and_inverse() {
        let x = euler(12);
        let f = exp_field(&x).unwrap();
        let red = reduce_diffeo(&f, &euler_curve(12)).unwrap();
        assert_eq!((red.data.k, red.data.p), (1, 1));
        assert_eq!(red.data.lambda, g(1));
        assert_eq!(red.data.d[0].coeff(0), g(1));
        assert_eq!(red.data.cc.get(0, 0), &GaussRat::from_ratio(1, 2));
        assert_eq!(restricted_order(&red.map, &red.field.curve).unwrap(), Some(3));

        let finv = exp_field(&x.neg()).unwrap();
        let red = reduce_diffeo(&finv, &euler_curve(12)).unwrap();
        assert_eq!(red.data.lambda, g(-1));
        assert_eq!(red.data.d[0].coeff(0), g(-1));
        assert_eq!(red.data.cc.get(0, 0), &GaussRat::from_ratio(1, 2));
    }

    #[test]
    fn briot_bouquet_has_p_zero() {
        let x = field2(12, &[(2, 0, 1)], &[(1, 1, 2), (2, 0, 1)]);
        let curve = CurveParam::graph(vec![Series::monomial(12, 1, g(-1))]).unwrap();
        let red = reduce_field(&x, &curve).unwrap();
        assert_eq!((red.data.k, red.data.p), (1, 0));
        assert_eq!(red.data.cc, Mat::from_i64_rows(&[&[2]]));
        let f = exp_field(&x).unwrap();
        let red = reduce_diffeo(&f, &curve).unwrap();
        assert_eq!(red.data.p, 0);
        assert_eq!(red.data.cc, Mat::from_i64_rows(&[&[2]]));
    }

    #[test]
    fn nonsingular_after_division_exits_early() {
        let x = field2(12, &[(2, 0, 1)], &[(2, 2, 1)]);
        let curve = CurveParam::graph(vec![Series::zero(12)]).unwrap();
        let pre = prenormalize(&x, &curve).unwrap();
        let PreNormal::Exit(data) = pre.result else { panic!("expected the early exit") };
        assert_eq!((data.k, data.p), (1, 0));
        assert_eq!(data.cc, Mat::from_i64_rows(&[&[-1]]));
        assert_eq!(pre.seq.count_blowups(), 1);
    }

    #[test]
    fn radial_times_x_has_rank_zero() {
        let x = field2(12, &[(2, 0, 1)], &[(1, 1, 1)]);
        let curve = CurveParam::graph(vec![Series::zero(12)]).unwrap();
        let red = reduce_field(&x, &curve).unwrap();
        assert_eq!(red.prenormal, Some((1, 0)));
        assert_eq!((red.data.k, red.data.p), (1, 0));
        assert_eq!(red.data.cc, Mat::identity(1));
    }

    #[test]
    fn cusp_is_resolved_first() {
        let x = field2(12, &[(1, 0, 2)], &[(0, 1, 3)]);
        let t = 12;
        let curve = CurveParam::new(vec![Series::monomial(t, 2, g(1)), Series::monomial(t, 3, g(1))]).unwrap();
        let pre = prenormalize(&x, &curve).unwrap();
        assert!(pre.seq.count_blowups() >= 1);
        assert!(pre.curve.is_graph());
        assert_eq!(pre.seq.apply_field(&x).unwrap(), pre.field);
    }

    fn nilpotent3(t: u32) -> FormalField<GaussRat> {
        let mk = |v: &[(Vec<u32>, i64)]| Jet::from_exps(3, t, v.iter().map(|(e, c)| (e.clone(), g(*c))).collect());
        FormalField::new(vec![
            mk(&[(vec![3, 0, 0], 1)]),
            mk(&[(vec![1, 0, 1], 1)]),
            mk(&[(vec![2, 1, 0], 1), (vec![1, 2, 0], 1)]),
        ])
        .unwrap()
    }

    #[test]
    fn nilpotent_system_in_three_variables() {
        let x = nilpotent3(12);
        let curve = CurveParam::graph(vec![Series::zero(12), Series::zero(12)]).unwrap();
        let red = reduce_field(&x, &curve).unwrap();
        assert!(!red.linear_steps.is_empty());
        assert_eq!(red.ramification, 2);
        assert_eq!(red.data.k + red.data.p, 2 * (1 + 1));
        assert_eq!(red.seq.apply_field(&x).unwrap(), red.field);
        assert_eq!(field_form(&red.field).unwrap(), red.data);
    }

    #[test]
    fn nilpotent_diffeo_matches_its_generator() {
        let x = nilpotent3(12);
        let curve = CurveParam::graph(vec![Series::zero(12), Series::zero(12)]).unwrap();
        let f = exp_field(&x).unwrap();
        let red = reduce_diffeo(&f, &curve).unwrap();
        assert!(red.data.k >= 1);
        assert_eq!(detect_rs(&red.map, &red.field.curve).unwrap(), red.data);
        let order = restricted_order(&red.map, &red.field.curve).unwrap();
        assert_eq!(order, Some(red.data.k + red.data.p + 1));
    }

    #[test]
    fn float_backend_agrees_on_euler() {
        let x = euler(12).to_float();
        let c = euler_curve(12).to_float();
        let red = reduce_diffeo(&exp_field(&x).unwrap(), &c).unwrap();
        assert_eq!((red.data.k, red.data.p), (1, 1));
        assert!((red.data.lambda.re - 1.0).abs() < 1e-12);
        assert!((red.data.cc.get(0, 0).re - 0.5).abs() < 1e-12);
    }

    #[test]
    fn detect_rejects_bad_shapes() {
        let x = field2(10, &[(2, 0, 1)], &[]);
        let f = exp_field(&x).unwrap();
        let c = CurveParam::graph(vec![Series::zero(10)]).unwrap();
        assert!(matches!(detect_rs(&f, &c), Err(Error::NotInForm(_))));

        let t = 8;
        let mk = |v: &[(Vec<u32>, i64)]| Jet::from_exps(3, t, v.iter().map(|(e, c)| (e.clone(), g(*c))).collect());
        let f = FormalMap::new(vec![
            mk(&[(vec![1, 0, 0], 1), (vec![3, 0, 0], 1)]),
            mk(&[(vec![0, 1, 0], 1), (vec![1, 1, 0], 1), (vec![2, 0, 1], 1)]),
            mk(&[(vec![0, 0, 1], 1), (vec![1, 0, 1], 2), (vec![2, 1, 0], 1)]),
        ])
        .unwrap();
        let c = CurveParam::graph(vec![Series::zero(t), Series::zero(t)]).unwrap();
        let err = detect_rs(&f, &c).unwrap_err();
        assert!(matches!(err, Error::NotInForm(ref s) if s.contains("commute")), "{err}");
    }

    #[test]
    fn fixed_curve_is_refused() {
        let x = field2(10, &[(1, 1, 1)], &[(0, 2, 1)]);
        let f = exp_field(&x).unwrap();
        let c = CurveParam::graph(vec![Series::zero(10)]).unwrap();
        let err = reduce_diffeo(&f, &c).unwrap_err();
        assert!(matches!(err, Error::Precondition(ref s) if s.contains("fixed-point set")), "{err}");
    }
}
