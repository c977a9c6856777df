//! Diffeomorphisms tangent to the identity and their infinitesimal generators.
//!
//! `exp_field` sums the Lie series `Σ X^j(g)/j!` and `log_map` sums
//! `Σ (−1)^{j+1}/j · (𝓕 − id)^j(g)` with `𝓕(g) = g∘F`. On jets both sums
//! terminate because each application raises the order by at least one.


use crate::coeff::Coeff;
use crate::error::{Error, Result};
use crate::jet::{Composer, Jet, JetTuple, Order};
use crate::linalg::Mat;
use crate::mono::{monomials_of_degree, Mono};

/// Germ `z ↦ F(z)` tangent to the identity; component `j` is `z_j ∘ F`.
#[derive(Clone, Debug, PartialEq)]
pub struct FormalMap<C: Coeff> {
    comps: JetTuple<C>,
}

/// Vector field `Σ a_j ∂/∂z_j`; component `j` is `a_j = X(z_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FormalField<C: Coeff> {
    comps: JetTuple<C>,
}

fn linear_part_is_identity<C: Coeff>(comps: &JetTuple<C>) -> Option<String> {
    let n = comps.len();
    for (j, f) in comps.iter().enumerate() {
        if !f.constant_term().is_zero() {
            return Some(format!("component {j} has a nonzero constant term"));
        }
        for i in 0..n {
            let want = if i == j { C::one() } else { C::zero() };
            let have = f.coeff(Mono::var(i));
            if have.sub_ref(&want).magnitude() > if C::EXACT { 0.0 } else { 1e-12 } {
                return Some(format!("linear part differs from the identity at entry ({j}, {i})"));
            }
        }
    }
    None
}

impl<C: Coeff> FormalMap<C> {
    /// Validates tangency to the identity.
    pub fn new(jets: Vec<Jet<C>>) -> Result<Self> {
        let comps = JetTuple::new(jets)?;
        if comps.len() != comps.nvars() {
            return Err(Error::Structural(format!("{} components for {} variables", comps.len(), comps.nvars())));
        }
        if let Some(msg) = linear_part_is_identity(&comps) {
            return Err(Error::Precondition(format!("map is not tangent to the identity: {msg}")));
        }
        Ok(FormalMap { comps })
    }

    pub fn identity(n: usize, trunc: u32) -> Self {
        FormalMap { comps: JetTuple::identity(n, trunc) }
    }

    pub fn nvars(&self) -> usize {
        self.comps.nvars()
    }

    pub fn trunc(&self) -> u32 {
        self.comps.trunc()
    }

    pub fn components(&self) -> &[Jet<C>] {
        self.comps.jets()
    }

    pub fn component(&self, j: usize) -> &Jet<C> {
        &self.comps[j]
    }

    pub fn tuple(&self) -> &JetTuple<C> {
        &self.comps
    }

    /// `F − id` componentwise.
    pub fn displacement(&self) -> Vec<Jet<C>> {
        let (n, t) = (self.nvars(), self.trunc());
        self.comps.iter().enumerate().map(|(j, f)| f.try_sub(&Jet::var(n, t, j)).expect("shared shape")).collect()
    }

    /// Lowest degree at which `F` differs from the identity.
    pub fn order(&self) -> Order {
        self.displacement().iter().map(|d| d.order()).min().unwrap_or(Order::Infinite)
    }

    pub fn truncate(&self, n: u32) -> Self {
        FormalMap { comps: self.comps.truncate(n) }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        Ok(FormalMap { comps: self.comps.compose(other.components())? })
    }

    /// Pullback `g ↦ g ∘ F`.
    pub fn pullback(&self, g: &Jet<C>) -> Result<Jet<C>> {
        g.compose(self.components())
    }

    pub fn to_float(&self) -> FormalMap<num_complex::Complex64> {
        FormalMap { comps: JetTuple::new(self.comps.iter().map(|j| j.to_float()).collect()).expect("same shape") }
    }

    /// Wraps components without the tangency check (used for transformed
    /// maps whose tangency is asserted separately).
    pub fn from_tuple_unchecked(comps: JetTuple<C>) -> Self {
        FormalMap { comps }
    }
}

impl<C: Coeff> FormalField<C> {
    pub fn new(jets: Vec<Jet<C>>) -> Result<Self> {
        let comps = JetTuple::new(jets)?;
        if comps.len() != comps.nvars() {
            return Err(Error::Structural(format!("{} components for {} variables", comps.len(), comps.nvars())));
        }
        Ok(FormalField { comps })
    }

    pub fn zero(n: usize, trunc: u32) -> Self {
        FormalField { comps: JetTuple::new((0..n).map(|_| Jet::zero(n, trunc)).collect()).expect("shape") }
    }

    pub fn nvars(&self) -> usize {
        self.comps.nvars()
    }

    pub fn trunc(&self) -> u32 {
        self.comps.trunc()
    }

    pub fn components(&self) -> &[Jet<C>] {
        self.comps.jets()
    }

    pub fn component(&self, j: usize) -> &Jet<C> {
        &self.comps[j]
    }

    /// Multiplicity `ν₀`: the smallest order of a component.
    pub fn multiplicity(&self) -> Order {
        self.comps.order()
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(|j| j.is_zero())
    }

    pub fn truncate(&self, n: u32) -> Self {
        FormalField { comps: self.comps.truncate(n) }
    }

    pub fn scale(&self, c: &C) -> Self {
        FormalField { comps: JetTuple::new(self.comps.iter().map(|j| j.scale(c)).collect()).expect("shape") }
    }

    pub fn neg(&self) -> Self {
        FormalField { comps: JetTuple::new(self.comps.iter().map(|j| j.neg()).collect()).expect("shape") }
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        let jets = self.comps.iter().zip(o.comps.iter()).map(|(a, b)| a.try_add(b)).collect::<Result<Vec<_>>>()?;
        Self::new(jets)
    }

    /// Derivation action `X(g) = Σ a_j ∂g/∂z_j`.
    ///
    /// When `X(0) = 0` the unknown part of `∂g` (degree ≥ N) only meets
    /// terms of positive degree, so the result keeps order `N`; otherwise
    /// it is known to `N − 1`.
    pub fn apply(&self, g: &Jet<C>) -> Result<Jet<C>> {
        if g.nvars() != self.nvars() {
            return Err(Error::Structural(format!("field in {} variables applied to jet in {}", self.nvars(), g.nvars())));
        }
        let n = self.trunc().min(g.trunc());
        let singular = self.comps.iter().all(|a| a.constant_term().is_zero());
        let out_trunc = if singular { n } else { n.saturating_sub(1) };
        let mut acc = Jet::zero(g.nvars(), out_trunc);
        for (j, a) in self.comps.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            let d = g.partial_derivative(j)?.as_polynomial_at(out_trunc);
            acc = acc.try_add(&a.truncate(out_trunc).try_mul(&d)?)?;
        }
        Ok(acc)
    }

    pub fn to_float(&self) -> FormalField<num_complex::Complex64> {
        FormalField { comps: JetTuple::new(self.comps.iter().map(|j| j.to_float()).collect()).expect("same shape") }
    }
}

/// Derivation action of `X` on `g`; see [`FormalField::apply`].
pub fn apply_field<C: Coeff>(x: &FormalField<C>, g: &Jet<C>) -> Result<Jet<C>> {
    x.apply(g)
}

/// `Exp X`: the time-one flow as a formal map.
pub fn exp_field<C: Coeff>(x: &FormalField<C>) -> Result<FormalMap<C>> {
    let (n, t) = (x.nvars(), x.trunc());
    match x.multiplicity() {
        Order::Finite(k) if k < 2 => {
            return Err(Error::Precondition(format!("exp needs multiplicity at least 2, got {k}")));
        }
        Order::Infinite => return Ok(FormalMap::identity(n, t)),
        _ => {}
    }
    let mut comps = Vec::with_capacity(n);
    for j in 0..n {
        let mut term = Jet::var(n, t, j);
        let mut acc = term.clone();
        let mut i = 1i64;
        loop {
            term = x.apply(&term)?.scale(&C::from_ratio(1, i));
            if term.is_zero() {
                break;
            }
            acc = acc.try_add(&term)?;
            i += 1;
        }
        comps.push(acc);
    }
    FormalMap::new(comps)
}

/// Infinitesimal generator `log F`.
pub fn log_map<C: Coeff>(f: &FormalMap<C>) -> Result<FormalField<C>> {
    let (n, t) = (f.nvars(), f.trunc());
    if f.order().is_infinite() {
        return Ok(FormalField::zero(n, t));
    }
    let mut composer = Composer::new(f.components())?;
    let mut comps = Vec::with_capacity(n);
    for j in 0..n {
        let mut term = Jet::var(n, t, j);
        let mut acc = Jet::zero(n, t);
        let mut i = 1i64;
        loop {
            term = composer.apply(&term)?.try_sub(&term)?;
            if term.is_zero() {
                break;
            }
            let sign = if i % 2 == 1 { 1 } else { -1 };
            acc = acc.try_add(&term.scale(&C::from_ratio(sign, i)))?;
            i += 1;
        }
        comps.push(acc);
    }
    FormalField::new(comps)
}

/// `F⁻¹ = Exp(−log F)`.
pub fn inverse_map<C: Coeff>(f: &FormalMap<C>) -> Result<FormalMap<C>> {
    exp_field(&log_map(f)?.neg())
}

/// Order of `F` and multiplicity of `X = log F`, checked to agree along
/// with their lowest homogeneous parts.
pub fn orders<C: Coeff>(f: &FormalMap<C>, x: &FormalField<C>) -> Result<(Order, Order)> {
    let of = f.order();
    let mx = x.multiplicity();
    if of != mx {
        return Err(Error::Structural(format!("order of F is {of} but multiplicity of log F is {mx}")));
    }
    if let Order::Finite(k) = of {
        for (j, d) in f.displacement().iter().enumerate() {
            if d.homogeneous_part(k) != x.component(j).homogeneous_part(k) {
                return Err(Error::Structural(format!("degree-{k} parts of F − id and log F differ in component {j}")));
            }
        }
    }
    Ok((of, mx))
}

/// Failure witness for [`fixed_ideal_equal`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdealWitness {
    /// True when a component of `F − id` is outside the ideal of `log F`,
    /// false for the converse direction.
    pub map_generator: bool,
    pub component: usize,
    /// Smallest truncation degree at which membership fails.
    pub degree: u32,
}

/// Checks to the truncation order that `(f_1, ..., f_n)` and
/// `(a_1, ..., a_n)` generate the same ideal, where `f = F − id` and
/// `a = log F`.
pub fn fixed_ideal_equal<C: Coeff>(f: &FormalMap<C>) -> Result<std::result::Result<(), IdealWitness>> {
    let x = log_map(f)?;
    let fs = f.displacement();
    let a: Vec<Jet<C>> = x.components().to_vec();
    for (i, fi) in fs.iter().enumerate() {
        if let Some(d) = first_non_member(fi, &a) {
            return Ok(Err(IdealWitness { map_generator: true, component: i, degree: d }));
        }
    }
    for (i, ai) in a.iter().enumerate() {
        if let Some(d) = first_non_member(ai, &fs) {
            return Ok(Err(IdealWitness { map_generator: false, component: i, degree: d }));
        }
    }
    Ok(Ok(()))
}

/// Smallest degree `d` such that `target` is not in `(gens)` modulo terms of
/// degree above `d`, or `None` if it is a member to the full truncation.
fn first_non_member<C: Coeff>(target: &Jet<C>, gens: &[Jet<C>]) -> Option<u32> {
    let top = target.trunc();
    if member_mod(target, gens, top) {
        return None;
    }
    (1..=top).find(|&d| !member_mod(target, gens, d))
}

fn member_mod<C: Coeff>(target: &Jet<C>, gens: &[Jet<C>], deg: u32) -> bool {
    let n = target.nvars();
    let rows: Vec<Mono> = (0..=deg).flat_map(|d| monomials_of_degree(n, d)).collect();
    let row_of = |m: Mono| rows.iter().position(|r| *r == m);
    let mut cols: Vec<Vec<C>> = Vec::new();
    for g in gens {
        let g = g.truncate(deg);
        let low = match g.order() {
            Order::Finite(k) => k,
            Order::Infinite => continue,
        };
        for d in 0..=deg.saturating_sub(low) {
            for m in monomials_of_degree(n, d) {
                let mut col = vec![C::zero(); rows.len()];
                for (gm, c) in g.terms() {
                    if gm.degree() + d <= deg {
                        if let Some(r) = row_of(gm.mul(m)) {
                            col[r] = c.clone();
                        }
                    }
                }
                cols.push(col);
            }
        }
    }
    let rhs: Vec<C> = rows.iter().map(|m| target.coeff(*m)).collect();
    if rhs.iter().all(|c| c.is_zero()) {
        return true;
    }
    if cols.is_empty() {
        return false;
    }
    Mat::from_columns(&cols).solve(&rhs).is_some()
}
