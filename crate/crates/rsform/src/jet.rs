//! Truncated multivariate power series.
//!
//! A [`Jet`] is a sparse map from exponent vectors to nonzero coefficients
//! together with a truncation order `N`: every term of total degree above
//! `N` is unknown and discarded. Operations that lose precision (derivatives,
//! divisions) lower the recorded order of their output instead of padding.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_complex::Complex64;

use crate::coeff::Coeff;
use crate::error::{Error, Result};
use crate::mono::{Mono, MAX_DEGREE, MAX_VARS};

/// Order of a jet: the lowest total degree of a stored term.
///
/// `Infinite` only means "no term up to the truncation order".
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Order {
    Finite(u32),
    Infinite,
}

impl Order {
    pub fn finite(self) -> Option<u32> {
        match self {
            Order::Finite(k) => Some(k),
            Order::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Order::Infinite)
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Order::Finite(k) => write!(f, "{k}"),
            Order::Infinite => write!(f, "inf"),
        }
    }
}

#[derive(Clone, PartialEq)]
pub struct Jet<C> {
    nvars: usize,
    trunc: u32,
    terms: BTreeMap<Mono, C>,
}

impl<C: Coeff> fmt::Debug for Jet<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Jet[n={}, N={}](", self.nvars, self.trunc)?;
        for (i, (m, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({c:?}){:?}", m.exps(self.nvars))?;
        }
        write!(f, ")")
    }
}

impl<C: Coeff> Jet<C> {
    pub fn zero(nvars: usize, trunc: u32) -> Self {
        assert!(nvars >= 1 && nvars <= MAX_VARS, "nvars must lie in 1..={MAX_VARS}");
        assert!(trunc <= MAX_DEGREE, "truncation order above {MAX_DEGREE}");
        Jet { nvars, trunc, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, trunc: u32, c: C) -> Self {
        let mut j = Self::zero(nvars, trunc);
        if !c.is_zero() {
            j.terms.insert(Mono::one(), c);
        }
        j
    }

    pub fn one(nvars: usize, trunc: u32) -> Self {
        Self::constant(nvars, trunc, C::one())
    }

    /// The coordinate function `z_i` (0-based index).
    pub fn var(nvars: usize, trunc: u32, i: usize) -> Self {
        assert!(i < nvars);
        Self::monomial(nvars, trunc, Mono::var(i), C::one())
    }

    pub fn monomial(nvars: usize, trunc: u32, m: Mono, c: C) -> Self {
        let mut j = Self::zero(nvars, trunc);
        if m.degree() <= trunc && !c.is_zero() {
            j.terms.insert(m, c);
        }
        j
    }

    pub fn from_exps(nvars: usize, trunc: u32, terms: Vec<(Vec<u32>, C)>) -> Self {
        Self::from_terms(nvars, trunc, terms.into_iter().map(|(e, c)| {
            assert_eq!(e.len(), nvars, "exponent vector length");
            (Mono::from_exps(&e), c)
        }))
    }

    /// Sums duplicate monomials and drops terms above `trunc`.
    pub fn from_terms<I: IntoIterator<Item = (Mono, C)>>(nvars: usize, trunc: u32, it: I) -> Self {
        let mut j = Self::zero(nvars, trunc);
        for (m, c) in it {
            if m.degree() <= trunc {
                j.add_term(m, &c);
            }
        }
        j.normalize();
        j
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn trunc(&self) -> u32 {
        self.trunc
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (Mono, &C)> + '_ {
        self.terms.iter().map(|(m, c)| (*m, c))
    }

    pub fn coeff(&self, m: Mono) -> C {
        self.terms.get(&m).cloned().unwrap_or_else(C::zero)
    }

    pub fn coeff_of(&self, exps: &[u32]) -> C {
        self.coeff(Mono::from_exps(exps))
    }

    pub fn constant_term(&self) -> C {
        self.coeff(Mono::one())
    }

    /// Coefficient of `t^k` of a univariate jet.
    pub fn coeff_at(&self, k: u32) -> C {
        debug_assert_eq!(self.nvars, 1);
        self.coeff(Mono::var_pow(0, k))
    }

    pub fn max_magnitude(&self) -> f64 {
        self.terms.values().map(|c| c.magnitude()).fold(0.0, f64::max)
    }

    fn add_term(&mut self, m: Mono, c: &C) {
        match self.terms.get_mut(&m) {
            Some(v) => *v = v.add_ref(c),
            None => {
                self.terms.insert(m, c.clone());
            }
        }
    }

    fn normalize(&mut self) {
        self.normalize_with(C::default_eps());
    }

    /// Removes zero coefficients; float backends also drop coefficients
    /// below `eps` times the largest magnitude.
    pub fn normalize_with(&mut self, eps: f64) {
        if C::EXACT {
            self.terms.retain(|_, c| !c.is_zero());
        } else {
            let scale = self.max_magnitude();
            self.terms.retain(|_, c| !c.is_negligible(scale, eps) && !c.is_zero());
        }
    }

    pub fn normalized_with(mut self, eps: f64) -> Self {
        self.normalize_with(eps);
        self
    }

    /// Lowers the truncation order to `n` (no-op when `n >= trunc`).
    pub fn truncate(&self, n: u32) -> Self {
        if n >= self.trunc {
            return self.clone();
        }
        let terms = self.terms.iter().filter(|(m, _)| m.degree() <= n).map(|(m, c)| (*m, c.clone())).collect();
        Jet { nvars: self.nvars, trunc: n, terms }
    }

    /// Reinterprets the stored terms as an exact polynomial known to order `n`.
    /// Raising the order is only sound when the jet is a polynomial.
    pub fn as_polynomial_at(&self, n: u32) -> Self {
        assert!(n <= MAX_DEGREE);
        let terms = self.terms.iter().filter(|(m, _)| m.degree() <= n).map(|(m, c)| (*m, c.clone())).collect();
        Jet { nvars: self.nvars, trunc: n, terms }
    }

    fn check_compatible(&self, o: &Self) -> Result<()> {
        if self.nvars != o.nvars {
            return Err(Error::Structural(format!("nvars {} vs {}", self.nvars, o.nvars)));
        }
        if self.trunc != o.trunc {
            return Err(Error::Structural(format!("trunc_order {} vs {}", self.trunc, o.trunc)));
        }
        Ok(())
    }

    pub fn try_add(&self, o: &Self) -> Result<Self> {
        self.check_compatible(o)?;
        let mut r = self.clone();
        for (m, c) in &o.terms {
            r.add_term(*m, c);
        }
        r.normalize();
        Ok(r)
    }

    pub fn try_sub(&self, o: &Self) -> Result<Self> {
        self.check_compatible(o)?;
        let mut r = self.clone();
        for (m, c) in &o.terms {
            let n = -c.clone();
            r.add_term(*m, &n);
        }
        r.normalize();
        Ok(r)
    }

    pub fn try_mul(&self, o: &Self) -> Result<Self> {
        self.check_compatible(o)?;
        Ok(self.mul_unchecked(o, self.trunc))
    }

    fn mul_unchecked(&self, o: &Self, trunc: u32) -> Self {
        let mut acc: BTreeMap<Mono, C> = BTreeMap::new();
        for (ma, ca) in &self.terms {
            let da = ma.degree();
            if da > trunc {
                break;
            }
            for (mb, cb) in &o.terms {
                if da + mb.degree() > trunc {
                    break;
                }
                let m = ma.mul(*mb);
                match acc.get_mut(&m) {
                    Some(v) => v.add_prod(ca, cb),
                    None => {
                        acc.insert(m, ca.mul_ref(cb));
                    }
                }
            }
        }
        let mut r = Jet { nvars: self.nvars, trunc, terms: acc };
        r.normalize();
        r
    }

    /// Product truncated at the smaller of the two orders.
    pub fn mul_aligned(&self, o: &Self) -> Self {
        assert_eq!(self.nvars, o.nvars);
        self.mul_unchecked(o, self.trunc.min(o.trunc))
    }

    /// Sum truncated at the smaller of the two orders.
    pub fn add_aligned(&self, o: &Self) -> Self {
        let n = self.trunc.min(o.trunc);
        self.truncate(n).try_add(&o.truncate(n)).expect("aligned")
    }

    pub fn sub_aligned(&self, o: &Self) -> Self {
        let n = self.trunc.min(o.trunc);
        self.truncate(n).try_sub(&o.truncate(n)).expect("aligned")
    }

    pub fn scale(&self, c: &C) -> Self {
        if c.is_zero() {
            return Self::zero(self.nvars, self.trunc);
        }
        let terms = self.terms.iter().map(|(m, v)| (*m, v.mul_ref(c))).collect();
        let mut r = Jet { nvars: self.nvars, trunc: self.trunc, terms };
        r.normalize();
        r
    }

    pub fn neg(&self) -> Self {
        let terms = self.terms.iter().map(|(m, v)| (*m, -v.clone())).collect();
        Jet { nvars: self.nvars, trunc: self.trunc, terms }
    }

    /// Multiplies by `c · m`, keeping the truncation order.
    pub fn mul_term(&self, m: Mono, c: &C) -> Self {
        let terms = self
            .terms
            .iter()
            .filter(|(a, _)| a.degree() + m.degree() <= self.trunc)
            .map(|(a, v)| (a.mul(m), v.mul_ref(c)))
            .collect();
        let mut r = Jet { nvars: self.nvars, trunc: self.trunc, terms };
        r.normalize();
        r
    }

    /// Multiplies by `z_i^k`; the result is known to order `trunc + k`.
    pub fn mul_var_pow(&self, i: usize, k: u32) -> Self {
        let trunc = (self.trunc + k).min(MAX_DEGREE);
        let m = Mono::var_pow(i, k);
        let terms = self.terms.iter().filter(|(a, _)| a.degree() + k <= trunc).map(|(a, v)| (a.mul(m), v.clone())).collect();
        Jet { nvars: self.nvars, trunc, terms }
    }

    pub fn order(&self) -> Order {
        match self.terms.keys().next() {
            Some(m) => Order::Finite(m.degree()),
            None => Order::Infinite,
        }
    }

    /// Smallest exponent of variable `i` over stored terms.
    pub fn min_exp(&self, i: usize) -> Option<u32> {
        self.terms.keys().map(|m| m.exp(i)).min()
    }

    /// Formal partial derivative in `z_i`; the output order is `trunc - 1`.
    pub fn partial_derivative(&self, i: usize) -> Result<Self> {
        if i >= self.nvars {
            return Err(Error::Structural(format!("variable index {i} out of range")));
        }
        let trunc = self.trunc.saturating_sub(1);
        let mut r = Self::zero(self.nvars, trunc);
        for (m, c) in &self.terms {
            let e = m.exp(i);
            if e == 0 {
                continue;
            }
            let nm = m.with_exp(i, e - 1);
            if nm.degree() <= trunc {
                r.terms.insert(nm, c.scale_i64(e as i64));
            }
        }
        r.normalize();
        Ok(r)
    }

    /// Exact division by `z_i^k`; the output order is `trunc - k`.
    pub fn divide_by_var(&self, i: usize, k: u32) -> Result<Self> {
        if i >= self.nvars {
            return Err(Error::Structural(format!("variable index {i} out of range")));
        }
        if k > self.trunc {
            return Err(Error::Budget { context: "divide_by_var".into(), have: self.trunc, needed: k });
        }
        let trunc = self.trunc - k;
        let scale = self.max_magnitude();
        let eps = C::default_eps();
        let mut r = Self::zero(self.nvars, trunc);
        for (m, c) in &self.terms {
            let e = m.exp(i);
            if e < k {
                if C::EXACT || !c.is_negligible(scale, eps) {
                    return Err(Error::Divisibility { var: i, power: k, monomial: m.exps(self.nvars) });
                }
                continue;
            }
            let nm = m.with_exp(i, e - k);
            if nm.degree() <= trunc {
                r.terms.insert(nm, c.clone());
            }
        }
        Ok(r)
    }

    /// Terms of total degree exactly `d`.
    pub fn homogeneous_part(&self, d: u32) -> Self {
        let terms = self.terms.iter().filter(|(m, _)| m.degree() == d).map(|(m, c)| (*m, c.clone())).collect();
        Jet { nvars: self.nvars, trunc: self.trunc, terms }
    }

    /// Maps every exponent vector through `f` into a jet with `nvars` variables
    /// and order `trunc`; images of degree above `trunc` are dropped.
    pub fn map_monomials<F: Fn(Mono) -> Mono>(&self, nvars: usize, trunc: u32, f: F) -> Self {
        let mut r = Self::zero(nvars, trunc);
        for (m, c) in &self.terms {
            let nm = f(*m);
            if nm.degree() <= trunc {
                r.add_term(nm, c);
            }
        }
        r.normalize();
        r
    }

    /// Converts coefficients to another backend.
    pub fn map_coeffs<D: Coeff, F: Fn(&C) -> D>(&self, f: F) -> Jet<D> {
        let mut r = Jet::<D>::zero(self.nvars, self.trunc);
        for (m, c) in &self.terms {
            let v = f(c);
            if !v.is_zero() {
                r.terms.insert(*m, v);
            }
        }
        r
    }

    pub fn to_float(&self) -> Jet<Complex64> {
        self.map_coeffs(|c| c.to_c64())
    }

    /// Evaluates in the coefficient field.
    pub fn eval(&self, point: &[C]) -> C {
        assert_eq!(point.len(), self.nvars);
        if self.nvars == 1 {
            return self.horner(&point[0]);
        }
        let pows = power_table(point, self.trunc);
        let mut acc = C::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (i, p) in pows.iter().enumerate() {
                let e = m.exp(i) as usize;
                if e > 0 {
                    t = t.mul_ref(&p[e]);
                }
            }
            acc = acc.add_ref(&t);
        }
        acc
    }

    fn horner(&self, x: &C) -> C {
        let mut acc = C::zero();
        let top = self.terms.keys().next_back().map(|m| m.degree()).unwrap_or(0);
        for k in (0..=top).rev() {
            acc = acc.mul_ref(x).add_ref(&self.coeff(Mono::var_pow(0, k)));
        }
        acc
    }

    /// Evaluates the truncated polynomial at a complex point.
    pub fn eval_complex(&self, point: &[Complex64]) -> Complex64 {
        self.to_float().eval(point)
    }

    /// Composition `f(args)`; every argument must vanish at the origin.
    pub fn compose(&self, args: &[Jet<C>]) -> Result<Self> {
        let mut c = Composer::new(args)?;
        if args.len() != self.nvars {
            return Err(Error::Structural(format!("compose: {} arguments for {} variables", args.len(), self.nvars)));
        }
        c.apply(self)
    }

    /// `(1 + self)^(p/q)` by the binomial series; `self` must vanish at 0.
    pub fn one_plus_pow(&self, p: i64, q: i64) -> Result<Self> {
        if !self.constant_term().is_zero() {
            return Err(Error::Precondition("binomial power needs a jet vanishing at 0".into()));
        }
        let alpha = C::from_ratio(p, q);
        let mut acc = Self::one(self.nvars, self.trunc);
        let mut term = Self::one(self.nvars, self.trunc);
        let mut binom = C::one();
        let mut k = 1i64;
        loop {
            term = term.try_mul(self)?;
            if term.is_zero() {
                break;
            }
            binom = binom.mul_ref(&alpha.sub_ref(&C::from_i64(k - 1))).div_ref(&C::from_i64(k));
            acc = acc.try_add(&term.scale(&binom))?;
            k += 1;
        }
        Ok(acc)
    }

    /// Multiplicative inverse of a jet with nonzero constant term.
    pub fn unit_inverse(&self) -> Result<Self> {
        let c0 = self.constant_term();
        if c0.is_zero() {
            return Err(Error::Precondition("inverse needs a nonzero constant term".into()));
        }
        let inv0 = C::one().div_ref(&c0);
        let rest = self.scale(&inv0).try_sub(&Self::one(self.nvars, self.trunc))?;
        Ok(rest.one_plus_pow(-1, 1)?.scale(&inv0))
    }

    pub fn approx_eq(&self, o: &Self, tol: f64) -> bool {
        if self.nvars != o.nvars {
            return false;
        }
        let n = self.trunc.min(o.trunc);
        let a = self.truncate(n);
        let b = o.truncate(n);
        let mut keys: Vec<Mono> = a.terms.keys().chain(b.terms.keys()).copied().collect();
        keys.sort();
        keys.dedup();
        keys.iter().all(|m| a.coeff(*m).sub_ref(&b.coeff(*m)).magnitude() <= tol)
    }
}

fn power_table<C: Coeff>(point: &[C], n: u32) -> Vec<Vec<C>> {
    point
        .iter()
        .map(|p| {
            let mut v = Vec::with_capacity(n as usize + 1);
            v.push(C::one());
            for k in 1..=n as usize {
                let nx = v[k - 1].mul_ref(p);
                v.push(nx);
            }
            v
        })
        .collect()
}

/// Repeated composition with fixed arguments.
///
/// Images of monomials are memoized, so composing many series with the same
/// arguments costs one coefficient pass per series after warm-up.
pub struct Composer<C: Coeff> {
    args: Vec<Jet<C>>,
    nvars: usize,
    trunc: u32,
    cache: HashMap<Mono, Jet<C>>,
}

impl<C: Coeff> Composer<C> {
    pub fn new(args: &[Jet<C>]) -> Result<Self> {
        let first = args.first().ok_or_else(|| Error::Structural("compose: empty argument list".into()))?;
        let nvars = first.nvars;
        let mut trunc = first.trunc;
        for (i, a) in args.iter().enumerate() {
            if a.nvars != nvars {
                return Err(Error::Structural("compose: arguments disagree on nvars".into()));
            }
            if !a.constant_term().is_zero() {
                return Err(Error::Precondition(format!("compose: argument {i} has a nonzero constant term")));
            }
            trunc = trunc.min(a.trunc);
        }
        Ok(Composer { args: args.to_vec(), nvars, trunc, cache: HashMap::new() })
    }

    pub fn trunc(&self) -> u32 {
        self.trunc
    }

    fn image(&mut self, m: Mono) -> Jet<C> {
        if let Some(j) = self.cache.get(&m) {
            return j.clone();
        }
        if m.degree() == 0 {
            return Jet::one(self.nvars, self.trunc);
        }
        let i = (0..self.args.len()).find(|&i| m.exp(i) > 0).expect("nonconstant monomial");
        let prev = m.with_exp(i, m.exp(i) - 1);
        let base = self.image(prev);
        let img = base.mul_unchecked(&self.args[i], self.trunc);
        self.cache.insert(m, img.clone());
        img
    }

    pub fn apply(&mut self, f: &Jet<C>) -> Result<Jet<C>> {
        if f.nvars != self.args.len() {
            return Err(Error::Structural(format!("compose: {} arguments for {} variables", self.args.len(), f.nvars)));
        }
        let trunc = self.trunc.min(f.trunc);
        let mut acc: BTreeMap<Mono, C> = BTreeMap::new();
        for (m, c) in &f.terms {
            if m.degree() > trunc {
                break;
            }
            let img = self.image(*m);
            for (mm, v) in &img.terms {
                if mm.degree() > trunc {
                    break;
                }
                match acc.get_mut(mm) {
                    Some(a) => a.add_prod(c, v),
                    None => {
                        acc.insert(*mm, c.mul_ref(v));
                    }
                }
            }
        }
        let mut r = Jet { nvars: self.nvars, trunc, terms: acc };
        r.normalize();
        Ok(r)
    }
}

/// An ordered list of jets sharing `nvars` and truncation order.
#[derive(Clone, PartialEq)]
pub struct JetTuple<C> {
    jets: Vec<Jet<C>>,
}

impl<C: Coeff> fmt::Debug for JetTuple<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.jets.iter()).finish()
    }
}

impl<C: Coeff> JetTuple<C> {
    pub fn new(jets: Vec<Jet<C>>) -> Result<Self> {
        if let Some(f) = jets.first() {
            for j in &jets {
                if j.nvars != f.nvars || j.trunc != f.trunc {
                    return Err(Error::Structural("tuple components disagree on nvars or trunc_order".into()));
                }
            }
        }
        Ok(JetTuple { jets })
    }

    /// Builds a tuple, lowering every component to the smallest order.
    pub fn aligned(jets: Vec<Jet<C>>) -> Self {
        let n = jets.iter().map(|j| j.trunc).min().unwrap_or(0);
        JetTuple { jets: jets.into_iter().map(|j| j.truncate(n)).collect() }
    }

    pub fn identity(nvars: usize, trunc: u32) -> Self {
        JetTuple { jets: (0..nvars).map(|i| Jet::var(nvars, trunc, i)).collect() }
    }

    pub fn len(&self) -> usize {
        self.jets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jets.is_empty()
    }

    pub fn nvars(&self) -> usize {
        self.jets.first().map(|j| j.nvars).unwrap_or(0)
    }

    pub fn trunc(&self) -> u32 {
        self.jets.first().map(|j| j.trunc).unwrap_or(0)
    }

    pub fn jets(&self) -> &[Jet<C>] {
        &self.jets
    }

    pub fn into_jets(self) -> Vec<Jet<C>> {
        self.jets
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Jet<C>> {
        self.jets.iter()
    }

    pub fn truncate(&self, n: u32) -> Self {
        JetTuple { jets: self.jets.iter().map(|j| j.truncate(n)).collect() }
    }

    /// Componentwise composition with a shared [`Composer`].
    pub fn compose(&self, args: &[Jet<C>]) -> Result<Self> {
        let mut c = Composer::new(args)?;
        let jets = self.jets.iter().map(|j| c.apply(j)).collect::<Result<Vec<_>>>()?;
        Ok(JetTuple { jets })
    }

    /// Smallest order over components.
    pub fn order(&self) -> Order {
        self.jets.iter().map(|j| j.order()).min().unwrap_or(Order::Infinite)
    }
}

impl<C> std::ops::Index<usize> for JetTuple<C> {
    type Output = Jet<C>;
    fn index(&self, i: usize) -> &Jet<C> {
        &self.jets[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::GaussRat;

    type J = Jet<GaussRat>;

    fn q(n: i64) -> GaussRat {
        GaussRat::from_i64(n)
    }

    fn x(n: usize, t: u32) -> J {
        J::var(n, t, 0)
    }

    fn y(n: usize, t: u32) -> J {
        J::var(n, t, 1)
    }

    #[test]
    fn difference_of_squares() {
        let (a, b) = (x(2, 4), y(2, 4));
        let p = a.try_add(&b).unwrap().try_mul(&a.try_sub(&b).unwrap()).unwrap();
        let expect = a.try_mul(&a).unwrap().try_sub(&b.try_mul(&b).unwrap()).unwrap();
        assert_eq!(p, expect);
    }

    #[test]
    fn truncation_boundary_kills_product() {
        let n = 5;
        let xn = J::monomial(1, n, Mono::var_pow(0, n), q(1));
        assert!(xn.try_mul(&x(1, n)).unwrap().is_zero());
    }

    #[test]
    fn geometric_series_times_one_plus_x() {
        let one = J::one(1, 3);
        let a = one.try_add(&x(1, 3)).unwrap();
        let b = J::from_exps(1, 3, vec![(vec![0], q(1)), (vec![1], q(-1)), (vec![2], q(1)), (vec![3], q(-1))]);
        assert_eq!(a.try_mul(&b).unwrap(), one);
    }

    #[test]
    fn mismatched_truncation_is_structural_error() {
        assert!(matches!(x(1, 3).try_add(&x(1, 4)), Err(Error::Structural(_))));
        assert!(matches!(x(1, 3).try_mul(&x(2, 3)), Err(Error::Structural(_))));
    }

    #[test]
    fn compose_binomial() {
        let f = J::monomial(1, 4, Mono::var_pow(0, 2), q(1));
        let arg = J::from_exps(1, 4, vec![(vec![1], q(1)), (vec![2], q(1))]);
        let r = f.compose(&[arg]).unwrap();
        let expect = J::from_exps(1, 4, vec![(vec![2], q(1)), (vec![3], q(2)), (vec![4], q(1))]);
        assert_eq!(r, expect);
    }

    #[test]
    fn compose_rejects_constant_terms() {
        let f = x(1, 3);
        let arg = J::one(1, 3);
        assert!(matches!(f.compose(&[arg]), Err(Error::Precondition(_))));
    }

    #[test]
    fn derivative_examples() {
        let f = J::from_exps(2, 5, vec![(vec![2, 1], q(1))]);
        let d = f.partial_derivative(0).unwrap();
        assert_eq!(d, J::from_exps(2, 4, vec![(vec![1, 1], q(2))]));
        let g = J::from_exps(2, 5, vec![(vec![2, 0], q(1))]);
        assert!(g.partial_derivative(1).unwrap().is_zero());
        assert_eq!(g.partial_derivative(1).unwrap().trunc(), 4);
    }

    #[test]
    fn order_examples() {
        let f = J::from_exps(2, 6, vec![(vec![2, 1], q(1)), (vec![5, 0], q(1))]);
        assert_eq!(f.order(), Order::Finite(3));
        assert_eq!(J::zero(2, 6).order(), Order::Infinite);
        let yy = y(2, 6).try_mul(&y(2, 6)).unwrap();
        let c = x(2, 6).try_mul(&yy.try_sub(&yy).unwrap()).unwrap();
        assert_eq!(c.order(), Order::Infinite);
    }

    #[test]
    fn divide_by_var_examples() {
        let f = J::from_exps(2, 5, vec![(vec![2, 1], q(1)), (vec![3, 0], q(1))]);
        let d = f.divide_by_var(0, 2).unwrap();
        assert_eq!(d, J::from_exps(2, 3, vec![(vec![0, 1], q(1)), (vec![1, 0], q(1))]));
        let g = x(2, 3).try_add(&y(2, 3)).unwrap();
        match g.divide_by_var(0, 1) {
            Err(Error::Divisibility { monomial, .. }) => assert_eq!(monomial, vec![0, 1]),
            other => panic!("expected divisibility error, got {other:?}"),
        }
    }

    #[test]
    fn evaluation_examples() {
        let f = J::one(1, 3).try_add(&x(1, 3)).unwrap();
        assert!((f.eval_complex(&[Complex64::new(0.5, 0.0)]) - Complex64::new(1.5, 0.0)).norm() < 1e-15);
        let g = x(2, 3).try_mul(&x(2, 3)).unwrap().try_sub(&y(2, 3).try_mul(&y(2, 3)).unwrap()).unwrap();
        let a = Complex64::new(0.3, -0.7);
        assert!(g.eval_complex(&[a, a]).norm() < 1e-15);
    }
}
