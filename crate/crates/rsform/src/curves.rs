//! Formal curves given by parametrizations `s ↦ γ(s)`.
//!
//! Every yes/no answer about a curve holds up to an explicit order budget in
//! the parameter `s`; nothing is claimed beyond the available truncations.

use num_integer::Integer;

use crate::coeff::Coeff;
use crate::error::{Error, Result};
use crate::exp_log::{log_map, FormalField, FormalMap};
use crate::jet::{Jet, JetTuple};
use crate::linalg::Mat;
use crate::mono::Mono;
use crate::series::Series;

/// Parametrization `γ(s) = (γ_1(s), …, γ_n(s))` with `γ(0) = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveParam<C: Coeff> {
    comps: Vec<Series<C>>,
    irreducible: bool,
    multiplicity: u32,
}

/// Point of projective space, scaled so the first nonzero coordinate is 1.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentLine<C: Coeff> {
    pub coords: Vec<C>,
}

fn gcd_of_support<C: Coeff>(comps: &[Series<C>]) -> u32 {
    let mut g = 0u32;
    for c in comps {
        for (k, v) in c.coeffs().iter().enumerate() {
            if !v.is_zero() {
                g = g.gcd(&(k as u32));
            }
        }
    }
    g
}

impl<C: Coeff> CurveParam<C> {
    /// Builds a curve from component series sharing one truncation order.
    /// The irreducibility flag is computed from the support.
    pub fn new(comps: Vec<Series<C>>) -> Result<Self> {
        let n = comps.first().ok_or_else(|| Error::Structural("curve without components".into()))?.trunc();
        if comps.iter().any(|c| c.trunc() != n) {
            return Err(Error::Structural("curve components disagree on trunc_order".into()));
        }
        if comps.iter().any(|c| !c.coeff(0).is_zero()) {
            return Err(Error::Precondition("curve components must vanish at s = 0".into()));
        }
        let multiplicity = comps
            .iter()
            .filter_map(|c| c.order())
            .min()
            .ok_or_else(|| Error::Structural("all curve components vanish to the truncation order".into()))?;
        let irreducible = gcd_of_support(&comps) == 1;
        Ok(CurveParam { comps, irreducible, multiplicity })
    }

    pub fn from_jets(jets: &[Jet<C>]) -> Result<Self> {
        Self::new(jets.iter().map(Series::from_jet).collect())
    }

    /// Curve with first component `s` and the others given as series in `s`.
    pub fn graph(rest: Vec<Series<C>>) -> Result<Self> {
        let n = rest.iter().map(|r| r.trunc()).min().unwrap_or(1);
        let mut comps = vec![Series::monomial(n, 1, C::one())];
        comps.extend(rest.into_iter().map(|r| r.truncate(n)));
        Self::new(comps)
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn trunc(&self) -> u32 {
        self.comps[0].trunc()
    }

    pub fn components(&self) -> &[Series<C>] {
        &self.comps
    }

    pub fn component(&self, j: usize) -> &Series<C> {
        &self.comps[j]
    }

    pub fn is_irreducible(&self) -> bool {
        self.irreducible
    }

    pub fn truncate(&self, n: u32) -> Self {
        Self::new(self.comps.iter().map(|c| c.truncate(n)).collect()).expect("truncation keeps a valid curve")
    }

    /// Multiplicity: smallest order of a component of the irreducible
    /// parametrization.
    pub fn multiplicity(&self) -> u32 {
        if self.irreducible {
            self.multiplicity
        } else {
            normalize_irreducible(self).multiplicity
        }
    }

    /// Whether the curve is the graph `s ↦ (s, γ̄(s))` over the first axis.
    pub fn is_graph(&self) -> bool {
        let n = self.trunc();
        self.comps[0] == Series::monomial(n, 1, C::one())
    }

    /// Components `2..n` of a graph.
    pub fn graph_part(&self) -> Vec<Series<C>> {
        self.comps[1..].to_vec()
    }

    /// Contact order with the first axis: the smallest order among the
    /// other components (`None` when they all vanish).
    pub fn contact_with_axis(&self) -> Option<u32> {
        self.comps[1..].iter().filter_map(|c| c.order()).min()
    }

    pub fn to_float(&self) -> CurveParam<num_complex::Complex64> {
        CurveParam {
            comps: self.comps.iter().map(|c| c.map(|v| v.to_c64())).collect(),
            irreducible: self.irreducible,
            multiplicity: self.multiplicity,
        }
    }

    /// Reparametrization `γ ∘ σ` with `σ(0) = 0`.
    pub fn reparametrize(&self, sigma: &Series<C>) -> Result<Self> {
        Self::new(self.comps.iter().map(|c| c.compose(sigma)).collect::<Result<Vec<_>>>()?)
    }

    /// `g ∘ γ` as a univariate series, known to `min(N_s, N·m)` where `N`
    /// is the order of `g` and `m` the curve multiplicity.
    pub fn pull(&self, g: &Jet<C>) -> Result<Series<C>> {
        if g.nvars() != self.dim() {
            return Err(Error::Structural(format!("jet in {} variables on a curve in {}", g.nvars(), self.dim())));
        }
        let budget = self.trunc().min(g.trunc().saturating_mul(self.multiplicity.max(1)));
        let args: Vec<Jet<C>> = self.comps.iter().map(|c| c.as_polynomial_at(budget).to_jet()).collect();
        let gp = g.as_polynomial_at(budget.min(crate::mono::MAX_DEGREE));
        Ok(Series::from_jet(&gp.compose(&args)?))
    }
}

/// Divides every exponent by the gcd `l` of the support (`s^l ↦ s`).
pub fn normalize_irreducible<C: Coeff>(c: &CurveParam<C>) -> CurveParam<C> {
    let l = gcd_of_support(&c.comps).max(1);
    if l == 1 {
        let mut r = c.clone();
        r.irreducible = true;
        return r;
    }
    let n = c.trunc() / l;
    let comps: Vec<Series<C>> = c
        .comps
        .iter()
        .map(|s| Series::from_coeffs(n, (0..=n).map(|k| s.coeff(k * l)).collect()))
        .collect();
    let mut r = CurveParam::new(comps).expect("exponent division keeps a valid curve");
    r.irreducible = true;
    r
}

pub fn multiplicity<C: Coeff>(c: &CurveParam<C>) -> u32 {
    c.multiplicity()
}

/// Tangent line `[γ_1/s^m : … : γ_n/s^m]` at `s = 0`.
pub fn tangent_line<C: Coeff>(c: &CurveParam<C>) -> TangentLine<C> {
    let c = normalize_irreducible(c);
    let m = c.multiplicity;
    let v: Vec<C> = c.comps.iter().map(|s| s.coeff(m)).collect();
    let lead = v.iter().find(|x| !x.is_zero()).cloned().expect("multiplicity coefficient is nonzero");
    TangentLine { coords: v.iter().map(|x| x.div_ref(&lead)).collect() }
}

/// Linear change of ambient coordinates `z' = M z`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearChange<C: Coeff> {
    pub matrix: Mat<C>,
}

impl<C: Coeff> LinearChange<C> {
    pub fn identity(n: usize) -> Self {
        LinearChange { matrix: Mat::identity(n) }
    }

    pub fn is_identity(&self) -> bool {
        self.matrix == Mat::identity(self.matrix.rows())
    }
}

/// Puiseux form `(s^m, γ_2, …, γ_n)` with every other order at least `m`.
///
/// First swaps coordinates so the tangent is transversal to `{z_1 = 0}`.
/// When the leading coefficient `a` of `z_1` has no `m`-th root in the
/// backend, `z_1` is rescaled by `1/a` and the scaling is recorded in the
/// returned change.
pub fn to_puiseux<C: Coeff>(c: &CurveParam<C>) -> Result<(LinearChange<C>, CurveParam<C>)> {
    let c = normalize_irreducible(c);
    let n = c.dim();
    let m = c.multiplicity;
    let t = tangent_line(&c);
    let lead_idx = t.coords.iter().position(|x| !x.is_zero()).expect("nonzero tangent");
    let mut perm = Mat::<C>::identity(n);
    let mut comps = c.comps.clone();
    if lead_idx != 0 {
        comps.swap(0, lead_idx);
        perm = Mat::from_fn(n, n, |i, j| {
            let src = if i == 0 {
                lead_idx
            } else if i == lead_idx {
                0
            } else {
                i
            };
            if j == src {
                C::one()
            } else {
                C::zero()
            }
        });
    }
    let a = comps[0].coeff(m);
    let mut change = perm;
    let root = match a.nth_root(m) {
        Some(r) if !C::EXACT || r.powi(m) == a => r,
        _ => {
            let inv = C::one().div_ref(&a);
            comps[0] = comps[0].scale(&inv);
            let mut scale = Mat::identity(n);
            scale.set(0, 0, inv);
            change = scale.mul(&change);
            C::one()
        }
    };
    let lead = comps[0].coeff(m);
    let unit = comps[0].shift_down(m)?.scale(&C::one().div_ref(&lead));
    let psi = unit.pow_ratio(1, m as i64)?.shift_up(1).truncate(comps[0].trunc()).scale(&root);
    let sigma = psi.compositional_inverse()?.as_polynomial_at(c.trunc());
    let out = CurveParam::new(comps)?.reparametrize(&sigma)?;
    let mut out = out;
    let nt = out.trunc();
    out.comps[0] = Series::monomial(nt, m, C::one());
    out.irreducible = true;
    Ok((LinearChange { matrix: change }, out))
}

/// Solution `h` of `X(γ(s)) = h(s)·γ'(s)` with its order budget.
#[derive(Clone, Debug, PartialEq)]
pub struct InvarianceH<C: Coeff> {
    pub h: Series<C>,
    /// The identity holds for all coefficients of `s^k` with `k ≤ budget`.
    pub budget: u32,
}

/// Solves `X∘γ = h·γ'` for a univariate `h`.
pub fn invariance_h<C: Coeff>(x: &FormalField<C>, c: &CurveParam<C>) -> Result<InvarianceH<C>> {
    if x.nvars() != c.dim() {
        return Err(Error::Structural(format!("field in {} variables, curve in {}", x.nvars(), c.dim())));
    }
    let xg: Vec<Series<C>> = x.components().iter().map(|a| c.pull(a)).collect::<Result<_>>()?;
    let budget = xg.iter().map(|s| s.trunc()).min().unwrap_or(0);
    let dg: Vec<Series<C>> = c.comps.iter().map(|s| s.derivative()).collect();
    let (i0, e) = dg
        .iter()
        .enumerate()
        .filter_map(|(i, d)| d.order().map(|o| (i, o)))
        .min_by_key(|&(_, o)| o)
        .ok_or_else(|| Error::Structural("curve derivative vanishes".into()))?;
    let n_s = c.trunc();
    let single = |s: &Series<C>| s.coeffs().iter().filter(|v| !v.is_zero()).count() <= 1;
    let known_deriv = |j: usize| if single(&c.comps[j]) { u32::MAX } else { n_s - 1 };
    let num = xg[i0].truncate(budget);
    for k in 0..e.min(budget + 1) {
        if !num.coeff(k).is_zero() && !num.coeff(k).is_negligible(1.0, C::default_eps()) {
            return Err(Error::NotInvariant { order: k, component: i0 });
        }
    }
    let top = budget.min(known_deriv(i0));
    if top < e {
        return Err(Error::Budget { context: "invariance_h".into(), have: top, needed: e });
    }
    let hb = top - e;
    let den = dg[i0].as_polynomial_at(top).shift_down(e)?;
    let h = num.truncate(top).shift_down(e)?.mul(&den.inverse()?);
    let ord_h = h.order().unwrap_or(hb + 1);
    let mut checked = budget;
    for (j, (a, d)) in xg.iter().zip(&dg).enumerate() {
        let ord_d = d.order().unwrap_or(u32::MAX / 4);
        let rb = budget.min(hb.saturating_add(ord_d)).min(ord_h.saturating_add(known_deriv(j)));
        checked = checked.min(rb);
        let lhs = a.truncate(rb);
        let rhs = h.as_polynomial_at(rb).mul(&d.as_polynomial_at(rb));
        let diff = lhs.sub(&rhs);
        let scale = lhs.coeffs().iter().chain(rhs.coeffs()).map(|v| v.magnitude()).fold(1.0, f64::max);
        for k in 0..=rb {
            let v = diff.coeff(k);
            if !v.is_zero() && !v.is_negligible(scale, C::default_eps().max(1e-9)) {
                return Err(Error::NotInvariant { order: k, component: j });
            }
        }
    }
    Ok(InvarianceH { h, budget: checked })
}

/// Outcome of an invariance test against a map.
#[derive(Clone, Debug, PartialEq)]
pub enum Invariance<C: Coeff> {
    /// Invariant up to the budget, with the generator's `h`.
    Holds(InvarianceH<C>),
    /// First failure found: order in `s` and component index.
    Fails { order: u32, component: usize },
}

impl<C: Coeff> Invariance<C> {
    pub fn holds(&self) -> bool {
        matches!(self, Invariance::Holds(_))
    }
}

/// Invariance under `F`, tested through `log F`.
pub fn invariance_map<C: Coeff>(f: &FormalMap<C>, c: &CurveParam<C>) -> Result<Invariance<C>> {
    let x = log_map(f)?;
    match invariance_h(&x, c) {
        Ok(h) => Ok(Invariance::Holds(h)),
        Err(Error::NotInvariant { order, component }) => Ok(Invariance::Fails { order, component }),
        Err(e) => Err(e),
    }
}

/// Applies a linear change `z' = M z` to a field: `X' = M·X(M⁻¹ z')`.
pub fn linear_change_field<C: Coeff>(x: &FormalField<C>, l: &LinearChange<C>) -> Result<FormalField<C>> {
    let n = x.nvars();
    let t = x.trunc();
    let inv = l.matrix.inverse().ok_or_else(|| Error::Precondition("singular linear change".into()))?;
    let args = linear_images(&inv, n, t);
    let pulled = JetTuple::new(x.components().to_vec())?.compose(&args)?;
    let comps = (0..n)
        .map(|i| {
            let mut acc = Jet::zero(n, t);
            for j in 0..n {
                let c = l.matrix.get(i, j);
                if !c.is_zero() {
                    acc = acc.try_add(&pulled[j].scale(c))?;
                }
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    FormalField::new(comps)
}

/// Applies `z' = M z` to a map: `F' = M∘F∘M⁻¹`.
pub fn linear_change_map<C: Coeff>(f: &FormalMap<C>, l: &LinearChange<C>) -> Result<FormalMap<C>> {
    let n = f.nvars();
    let t = f.trunc();
    let inv = l.matrix.inverse().ok_or_else(|| Error::Precondition("singular linear change".into()))?;
    let args = linear_images(&inv, n, t);
    let pulled = f.tuple().compose(&args)?;
    let comps = (0..n)
        .map(|i| {
            let mut acc = Jet::zero(n, t);
            for j in 0..n {
                let c = l.matrix.get(i, j);
                if !c.is_zero() {
                    acc = acc.try_add(&pulled[j].scale(c))?;
                }
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    FormalMap::new(comps)
}

/// The jets `z ↦ (M z)_i`.
pub fn linear_images<C: Coeff>(m: &Mat<C>, n: usize, t: u32) -> Vec<Jet<C>> {
    (0..m.rows())
        .map(|i| Jet::from_terms(n, t, (0..n).map(|j| (Mono::var(j), m.get(i, j).clone()))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::GaussRat;
    use crate::exp_log::exp_field;

    fn s(c: &[i64], n: u32) -> Series<GaussRat> {
        Series::from_coeffs(n, c.iter().map(|&v| GaussRat::from_i64(v)).collect())
    }

    fn curve(cs: &[&[i64]], n: u32) -> CurveParam<GaussRat> {
        CurveParam::new(cs.iter().map(|c| s(c, n)).collect()).unwrap()
    }

    #[test]
    fn multiplicities() {
        assert_eq!(curve(&[&[0, 1], &[0, 0, 1]], 6).multiplicity(), 1);
        assert_eq!(curve(&[&[0, 0, 1], &[0, 0, 0, 1]], 6).multiplicity(), 2);
        let c = curve(&[&[0, 0, 1], &[0, 0, 0, 0, 1, 1]], 6);
        assert!(c.is_irreducible());
        assert_eq!(c.multiplicity(), 2);
    }

    #[test]
    fn irreducible_normalization() {
        let c = normalize_irreducible(&curve(&[&[0, 0, 1], &[0, 0, 0, 0, 1]], 8));
        assert_eq!(c, curve(&[&[0, 1], &[0, 0, 1]], 4));
        let d = curve(&[&[0, 1], &[0, 0, 0, 1]], 8);
        assert_eq!(normalize_irreducible(&d).components(), d.components());
        let mut six = vec![0i64; 16];
        six[6] = 1;
        let mut nine = vec![0i64; 16];
        nine[9] = 1;
        nine[15] = 1;
        let e = normalize_irreducible(&curve(&[&six, &nine], 15));
        assert_eq!(e, curve(&[&[0, 0, 1], &[0, 0, 0, 1, 0, 1]], 5));
    }

    #[test]
    fn tangent_lines() {
        let one = GaussRat::from_i64(1);
        let zero = GaussRat::from_i64(0);
        assert_eq!(tangent_line(&curve(&[&[0, 1], &[0, 0, 1]], 4)).coords, vec![one.clone(), zero.clone()]);
        assert_eq!(tangent_line(&curve(&[&[0, 0, 1], &[0, 0, 0, 1]], 4)).coords, vec![one.clone(), zero]);
        assert_eq!(tangent_line(&curve(&[&[0, 0, 1, 1], &[0, 0, 2]], 4)).coords, vec![one, GaussRat::from_i64(2)]);
    }

    #[test]
    fn puiseux_forms() {
        let (l, c) = to_puiseux(&curve(&[&[0, 1], &[0, 0, 1]], 5)).unwrap();
        assert!(l.is_identity());
        assert_eq!(c, curve(&[&[0, 1], &[0, 0, 1]], 5));
        let (_, c) = to_puiseux(&curve(&[&[0, 1, 1], &[0, 0, 0, 1]], 4)).unwrap();
        assert_eq!(c.component(0), &s(&[0, 1], 4));
        assert_eq!(c.component(1), &s(&[0, 0, 0, 1, -3], 4));
        let (l, c) = to_puiseux(&curve(&[&[0, 0, 0, 1], &[0, 0, 1], &[0]], 6)).unwrap();
        assert_eq!(l.matrix.get(0, 1), &GaussRat::from_i64(1));
        assert_eq!(c.component(0), &s(&[0, 0, 1], 6));
    }

    #[test]
    fn puiseux_rescales_when_no_root_exists() {
        let (l, c) = to_puiseux(&curve(&[&[0, 0, 2], &[0, 0, 0, 1]], 6)).unwrap();
        assert_eq!(l.matrix.get(0, 0), &GaussRat::from_ratio(1, 2));
        assert_eq!(c.component(0), &s(&[0, 0, 1], 6));
    }

    fn field(n: usize, t: u32, comps: &[&[(&[u32], i64)]]) -> FormalField<GaussRat> {
        FormalField::new(
            comps
                .iter()
                .map(|c| Jet::from_exps(n, t, c.iter().map(|(e, v)| (e.to_vec(), GaussRat::from_i64(*v))).collect()))
                .collect(),
        )
        .unwrap()
    }

    fn euler_curve(n: u32) -> CurveParam<GaussRat> {
        let mut coeffs = vec![0i64];
        let mut f = 1i64;
        for k in 1..=n as i64 {
            if k > 1 {
                f *= k - 1;
            }
            coeffs.push(f);
        }
        curve(&[&[0, 1], &coeffs], n)
    }

    #[test]
    fn euler_curve_invariance() {
        let x = field(2, 8, &[&[(&[2, 0], 1)], &[(&[0, 1], 1), (&[1, 0], -1)]]);
        let r = invariance_h(&x, &euler_curve(8)).unwrap();
        assert_eq!(r.h, s(&[0, 0, 1], 8));
        assert_eq!(r.budget, 8);
    }

    #[test]
    fn radial_field_and_parabola() {
        let x = field(2, 6, &[&[(&[1, 0], 1)], &[(&[0, 1], 1)]]);
        let r = invariance_h(&x, &curve(&[&[0, 1], &[0, 0, 1]], 6));
        assert_eq!(r, Err(Error::NotInvariant { order: 2, component: 1 }));
    }

    #[test]
    fn axis_case() {
        let x = field(2, 6, &[&[(&[2, 0], 3), (&[1, 1], 1)], &[(&[1, 1], 2)]]);
        let r = invariance_h(&x, &curve(&[&[0, 1], &[0]], 6)).unwrap();
        assert_eq!(r.h, s(&[0, 0, 3], 6));
    }

    #[test]
    fn map_invariance() {
        let x = field(2, 8, &[&[(&[3, 0], 1)], &[(&[1, 1], 1), (&[2, 0], -1)]]);
        let f = exp_field(&x).unwrap();
        assert!(invariance_map(&f, &euler_curve(8)).unwrap().holds());
        let g = exp_field(&field(2, 6, &[&[(&[2, 0], 1)], &[]])).unwrap();
        assert!(!invariance_map(&g, &curve(&[&[0, 1], &[0, 1]], 6)).unwrap().holds());
        let fixed = exp_field(&field(2, 6, &[&[(&[1, 1], 1)], &[(&[0, 2], 1)]])).unwrap();
        let r = invariance_map(&fixed, &curve(&[&[0, 1], &[0]], 6)).unwrap();
        match r {
            Invariance::Holds(h) => assert!(h.h.is_zero()),
            other => panic!("{other:?}"),
        }
    }
}
