//! Dense univariate truncated series and matrices of them.

use num_complex::Complex64;

use crate::coeff::Coeff;
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::linalg::Mat;
use crate::mono::Mono;

/// `Σ_{k ≤ trunc} c_k x^k` stored densely.
#[derive(Clone, PartialEq)]
pub struct Series<C> {
    coeffs: Vec<C>,
}

impl<C: Coeff> std::fmt::Debug for Series<C> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Series[N={}]{:?}", self.trunc(), self.coeffs)
    }
}

impl<C: Coeff> Series<C> {
    pub fn zero(trunc: u32) -> Self {
        Series { coeffs: vec![C::zero(); trunc as usize + 1] }
    }

    pub fn constant(trunc: u32, c: C) -> Self {
        let mut s = Self::zero(trunc);
        s.coeffs[0] = c;
        s
    }

    pub fn monomial(trunc: u32, k: u32, c: C) -> Self {
        let mut s = Self::zero(trunc);
        if k <= trunc {
            s.coeffs[k as usize] = c;
        }
        s
    }

    /// Coefficients `c_0, c_1, ...`; missing ones up to `trunc` are zero.
    pub fn from_coeffs(trunc: u32, coeffs: Vec<C>) -> Self {
        let mut s = Self::zero(trunc);
        for (k, c) in coeffs.into_iter().enumerate().take(trunc as usize + 1) {
            s.coeffs[k] = c;
        }
        s
    }

    pub fn trunc(&self) -> u32 {
        self.coeffs.len() as u32 - 1
    }

    pub fn coeff(&self, k: u32) -> C {
        self.coeffs.get(k as usize).cloned().unwrap_or_else(C::zero)
    }

    pub fn coeffs(&self) -> &[C] {
        &self.coeffs
    }

    pub fn set(&mut self, k: u32, c: C) {
        if (k as usize) < self.coeffs.len() {
            self.coeffs[k as usize] = c;
        }
    }

    fn is_small(c: &C, scale: f64) -> bool {
        c.is_zero() || c.is_negligible(scale, C::default_eps())
    }

    fn scale_mag(&self) -> f64 {
        self.coeffs.iter().map(|c| c.magnitude()).fold(0.0, f64::max)
    }

    /// Lowest index with a nonzero coefficient.
    pub fn order(&self) -> Option<u32> {
        let s = self.scale_mag();
        self.coeffs.iter().position(|c| !Self::is_small(c, s)).map(|k| k as u32)
    }

    pub fn is_zero(&self) -> bool {
        self.order().is_none()
    }

    pub fn truncate(&self, n: u32) -> Self {
        let n = n.min(self.trunc());
        Series { coeffs: self.coeffs[..=n as usize].to_vec() }
    }

    /// Same coefficients, read as a polynomial known to order `n`.
    pub fn as_polynomial_at(&self, n: u32) -> Self {
        Self::from_coeffs(n, self.coeffs.clone())
    }

    pub fn add(&self, o: &Self) -> Self {
        let n = self.trunc().min(o.trunc()) as usize;
        Series { coeffs: (0..=n).map(|k| self.coeffs[k].add_ref(&o.coeffs[k])).collect() }
    }

    pub fn sub(&self, o: &Self) -> Self {
        let n = self.trunc().min(o.trunc()) as usize;
        Series { coeffs: (0..=n).map(|k| self.coeffs[k].sub_ref(&o.coeffs[k])).collect() }
    }

    pub fn neg(&self) -> Self {
        Series { coeffs: self.coeffs.iter().map(|c| -c.clone()).collect() }
    }

    pub fn scale(&self, c: &C) -> Self {
        Series { coeffs: self.coeffs.iter().map(|v| v.mul_ref(c)).collect() }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let n = self.trunc().min(o.trunc()) as usize;
        let mut out = vec![C::zero(); n + 1];
        for (i, a) in self.coeffs.iter().enumerate().take(n + 1) {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate().take(n + 1 - i) {
                if !b.is_zero() {
                    out[i + j].add_prod(a, b);
                }
            }
        }
        Series { coeffs: out }
    }

    /// Multiplicative inverse; needs a nonzero constant term.
    pub fn inverse(&self) -> Result<Self> {
        let c0 = &self.coeffs[0];
        if Self::is_small(c0, self.scale_mag()) {
            return Err(Error::Precondition("series inverse needs a nonzero constant term".into()));
        }
        let inv0 = C::one().div_ref(c0);
        let n = self.coeffs.len();
        let mut out: Vec<C> = Vec::with_capacity(n);
        out.push(inv0.clone());
        for k in 1..n {
            let mut acc = C::zero();
            for j in 1..=k {
                acc.add_prod(&self.coeffs[j], &out[k - j]);
            }
            out.push(-(acc.mul_ref(&inv0)));
        }
        Ok(Series { coeffs: out })
    }

    /// Multiplication by `x^k`; the result is known to order `trunc + k`.
    pub fn shift_up(&self, k: u32) -> Self {
        let mut coeffs = vec![C::zero(); k as usize];
        coeffs.extend(self.coeffs.iter().cloned());
        Series { coeffs }
    }

    /// Exact division by `x^k`; the result is known to order `trunc - k`.
    pub fn shift_down(&self, k: u32) -> Result<Self> {
        if k > self.trunc() {
            return Err(Error::Budget { context: "series division".into(), have: self.trunc(), needed: k });
        }
        let s = self.scale_mag();
        if let Some(bad) = self.coeffs[..k as usize].iter().position(|c| !Self::is_small(c, s)) {
            return Err(Error::Divisibility { var: 0, power: k, monomial: vec![bad as u32] });
        }
        Ok(Series { coeffs: self.coeffs[k as usize..].to_vec() })
    }

    pub fn derivative(&self) -> Self {
        let n = self.coeffs.len();
        if n == 1 {
            return Series::zero(0);
        }
        Series { coeffs: (1..n).map(|k| self.coeffs[k].scale_i64(k as i64)).collect() }
    }

    /// Substitution `x ↦ x^a`; known to order `a·(trunc+1) − 1`.
    pub fn ramify(&self, a: u32) -> Self {
        let n = a as usize * self.coeffs.len();
        let mut coeffs = vec![C::zero(); n];
        for (k, c) in self.coeffs.iter().enumerate() {
            coeffs[k * a as usize] = c.clone();
        }
        Series { coeffs }
    }

    /// `self(inner(x))`; `inner` must vanish at 0. Horner scheme truncated
    /// at the smaller order.
    pub fn compose(&self, inner: &Self) -> Result<Self> {
        if !inner.coeffs[0].is_zero() {
            return Err(Error::Precondition("inner series must vanish at 0".into()));
        }
        let n = self.trunc().min(inner.trunc());
        let inner = inner.truncate(n);
        let mut acc = Series::zero(n);
        for c in self.coeffs.iter().take(n as usize + 1).rev() {
            acc = acc.mul(&inner);
            acc.coeffs[0] = acc.coeffs[0].add_ref(c);
        }
        Ok(acc)
    }

    /// Compositional inverse of a series `a₁x + …` with `a₁ ≠ 0`.
    pub fn compositional_inverse(&self) -> Result<Self> {
        if !self.coeffs[0].is_zero() || self.trunc() == 0 || Self::is_small(&self.coeffs[1], self.scale_mag()) {
            return Err(Error::Precondition("compositional inverse needs order exactly 1".into()));
        }
        let n = self.trunc();
        let a1 = self.coeffs[1].clone();
        let mut sigma = Series::monomial(n, 1, C::one().div_ref(&a1));
        for k in 2..=n {
            let e = self.compose(&sigma)?.coeff(k);
            if !e.is_zero() {
                let v = sigma.coeffs[k as usize].sub_ref(&e.div_ref(&a1));
                sigma.coeffs[k as usize] = v;
            }
        }
        Ok(sigma)
    }

    /// `self^(p/q)` for a series with constant term 1 (binomial series).
    pub fn pow_ratio(&self, p: i64, q: i64) -> Result<Self> {
        if self.coeffs[0] != C::one() {
            return Err(Error::Precondition("binomial power needs constant term 1".into()));
        }
        let n = self.trunc();
        let mut h = self.clone();
        h.coeffs[0] = C::zero();
        let alpha = C::from_ratio(p, q);
        let mut acc = Series::constant(n, C::one());
        let mut term = Series::constant(n, C::one());
        let mut binom = C::one();
        for k in 1..=n as i64 {
            term = term.mul(&h);
            if term.is_zero() {
                break;
            }
            binom = binom.mul_ref(&alpha.sub_ref(&C::from_i64(k - 1))).div_ref(&C::from_i64(k));
            acc = acc.add(&term.scale(&binom));
        }
        Ok(acc)
    }

    pub fn eval(&self, x: &C) -> C {
        let mut acc = C::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc.mul_ref(x).add_ref(c);
        }
        acc
    }

    pub fn eval_c64(&self, x: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c.to_c64();
        }
        acc
    }

    pub fn from_jet(j: &Jet<C>) -> Self {
        assert_eq!(j.nvars(), 1, "univariate jet expected");
        let mut s = Self::zero(j.trunc());
        for (m, c) in j.terms() {
            s.coeffs[m.degree() as usize] = c.clone();
        }
        s
    }

    /// As a jet in `nvars` variables depending only on variable `var`.
    pub fn to_jet_in(&self, nvars: usize, var: usize, trunc: u32) -> Jet<C> {
        Jet::from_terms(
            nvars,
            trunc,
            self.coeffs.iter().enumerate().filter(|(_, c)| !c.is_zero()).map(|(k, c)| (Mono::var_pow(var, k as u32), c.clone())),
        )
    }

    pub fn to_jet(&self) -> Jet<C> {
        self.to_jet_in(1, 0, self.trunc())
    }

    pub fn map<D: Coeff, F: Fn(&C) -> D>(&self, f: F) -> Series<D> {
        Series { coeffs: self.coeffs.iter().map(f).collect() }
    }
}

/// Square matrix whose entries are series sharing one truncation order.
#[derive(Clone, PartialEq)]
pub struct MatSeries<C> {
    dim: usize,
    entries: Vec<Series<C>>,
}

impl<C: Coeff> std::fmt::Debug for MatSeries<C> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "MatSeries[{}x{}, N={}]", self.dim, self.dim, self.trunc())?;
        for k in 0..=self.trunc().min(4) {
            writeln!(f, "  x^{k}: {:?}", self.coeff(k))?;
        }
        Ok(())
    }
}

impl<C: Coeff> MatSeries<C> {
    pub fn zero(dim: usize, trunc: u32) -> Self {
        MatSeries { dim, entries: vec![Series::zero(trunc); dim * dim] }
    }

    pub fn identity(dim: usize, trunc: u32) -> Self {
        let mut m = Self::zero(dim, trunc);
        for i in 0..dim {
            m.entries[i * dim + i] = Series::constant(trunc, C::one());
        }
        m
    }

    /// Builds `Σ_k M_k x^k` from constant matrices.
    pub fn from_coeff_mats(trunc: u32, mats: &[Mat<C>]) -> Self {
        let dim = mats.first().map(|m| m.rows()).unwrap_or(0);
        let mut r = Self::zero(dim, trunc);
        for (k, m) in mats.iter().enumerate().take(trunc as usize + 1) {
            r.set_coeff(k as u32, m);
        }
        r
    }

    pub fn from_entries(dim: usize, entries: Vec<Series<C>>) -> Self {
        assert_eq!(entries.len(), dim * dim);
        let n = entries.iter().map(|e| e.trunc()).min().unwrap_or(0);
        MatSeries { dim, entries: entries.into_iter().map(|e| e.truncate(n)).collect() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn trunc(&self) -> u32 {
        self.entries.first().map(|e| e.trunc()).unwrap_or(0)
    }

    pub fn entry(&self, i: usize, j: usize) -> &Series<C> {
        &self.entries[i * self.dim + j]
    }

    pub fn set_entry(&mut self, i: usize, j: usize, s: Series<C>) {
        let n = self.trunc();
        self.entries[i * self.dim + j] = s.truncate(n);
        if s.trunc() < n {
            for e in &mut self.entries {
                *e = e.truncate(s.trunc());
            }
        }
    }

    /// Constant matrix of `x^k` coefficients.
    pub fn coeff(&self, k: u32) -> Mat<C> {
        Mat::from_fn(self.dim, self.dim, |i, j| self.entry(i, j).coeff(k))
    }

    pub fn set_coeff(&mut self, k: u32, m: &Mat<C>) {
        for i in 0..self.dim {
            for j in 0..self.dim {
                self.entries[i * self.dim + j].set(k, m.get(i, j).clone());
            }
        }
    }

    pub fn order(&self) -> Option<u32> {
        self.entries.iter().filter_map(|e| e.order()).min()
    }

    pub fn truncate(&self, n: u32) -> Self {
        MatSeries { dim: self.dim, entries: self.entries.iter().map(|e| e.truncate(n)).collect() }
    }

    pub fn map_entries<F: Fn(&Series<C>) -> Series<C>>(&self, f: F) -> Self {
        Self::from_entries(self.dim, self.entries.iter().map(f).collect())
    }

    pub fn add(&self, o: &Self) -> Self {
        Self::from_entries(self.dim, self.entries.iter().zip(&o.entries).map(|(a, b)| a.add(b)).collect())
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self::from_entries(self.dim, self.entries.iter().zip(&o.entries).map(|(a, b)| a.sub(b)).collect())
    }

    pub fn scale(&self, c: &C) -> Self {
        self.map_entries(|e| e.scale(c))
    }

    pub fn mul(&self, o: &Self) -> Self {
        let d = self.dim;
        let n = self.trunc().min(o.trunc());
        let mut out = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                let mut acc = Series::zero(n);
                for l in 0..d {
                    let a = self.entry(i, l);
                    let b = o.entry(l, j);
                    if a.is_zero() || b.is_zero() {
                        continue;
                    }
                    acc = acc.add(&a.mul(b));
                }
                out.push(acc);
            }
        }
        MatSeries { dim: d, entries: out }
    }

    /// Inverse as a series; needs an invertible constant term.
    pub fn inverse(&self) -> Result<Self> {
        let n = self.trunc();
        let a0inv = self
            .coeff(0)
            .inverse()
            .ok_or_else(|| Error::Precondition("matrix series inverse needs an invertible constant term".into()))?;
        let mut out: Vec<Mat<C>> = vec![a0inv.clone()];
        for k in 1..=n {
            let mut acc = Mat::zeros(self.dim, self.dim);
            for j in 1..=k {
                acc = acc.add(&self.coeff(j).mul(&out[(k - j) as usize]));
            }
            out.push(a0inv.mul(&acc).neg());
        }
        Ok(Self::from_coeff_mats(n, &out))
    }

    pub fn derivative(&self) -> Self {
        self.map_entries(|e| e.derivative())
    }

    pub fn shift_up(&self, k: u32) -> Self {
        self.map_entries(|e| e.shift_up(k))
    }

    pub fn shift_down(&self, k: u32) -> Result<Self> {
        let e = self.entries.iter().map(|e| e.shift_down(k)).collect::<Result<Vec<_>>>()?;
        Ok(Self::from_entries(self.dim, e))
    }

    pub fn ramify(&self, a: u32) -> Self {
        self.map_entries(|e| e.ramify(a))
    }

    /// Same entries read as polynomials known to order `n`.
    pub fn as_polynomial_at(&self, n: u32) -> Self {
        let d = self.dim();
        MatSeries::from_entries(d, (0..d * d).map(|k| self.entry(k / d, k % d).as_polynomial_at(n)).collect())
    }

    pub fn scale_mag(&self) -> f64 {
        self.entries.iter().flat_map(|e| e.coeffs.iter()).map(|c| c.magnitude()).fold(0.0, f64::max)
    }

    /// Zeroes float coefficients below `rel` times the largest magnitude in
    /// the whole matrix; exact backends are unchanged.
    pub fn pruned(&self, rel: f64) -> Self {
        if C::EXACT {
            return self.clone();
        }
        let tol = rel * self.scale_mag();
        let mut out = self.clone();
        for e in &mut out.entries {
            for c in &mut e.coeffs {
                if c.magnitude() <= tol {
                    *c = C::zero();
                }
            }
        }
        out
    }

    /// Square sub-block starting at `(start, start)`.
    pub fn block(&self, start: usize, size: usize) -> Self {
        let mut e = Vec::with_capacity(size * size);
        for i in 0..size {
            for j in 0..size {
                e.push(self.entry(start + i, start + j).clone());
            }
        }
        MatSeries { dim: size, entries: e }
    }

    pub fn eval_c64(&self, x: Complex64) -> Vec<Vec<Complex64>> {
        (0..self.dim).map(|i| (0..self.dim).map(|j| self.entry(i, j).eval_c64(x)).collect()).collect()
    }

    pub fn map<D: Coeff, F: Fn(&C) -> D + Copy>(&self, f: F) -> MatSeries<D> {
        MatSeries { dim: self.dim, entries: self.entries.iter().map(|e| e.map(f)).collect() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::GaussRat;

    fn s(c: &[i64], n: u32) -> Series<GaussRat> {
        Series::from_coeffs(n, c.iter().map(|&v| GaussRat::from_i64(v)).collect())
    }

    #[test]
    fn inverse_of_one_plus_x() {
        let inv = s(&[1, 1], 5).inverse().unwrap();
        assert_eq!(inv, s(&[1, -1, 1, -1, 1, -1], 5));
    }

    #[test]
    fn shifts_and_ramification() {
        let a = s(&[0, 0, 3, 1], 4);
        assert_eq!(a.shift_down(2).unwrap(), s(&[3, 1], 2));
        assert!(a.shift_down(3).is_err());
        assert_eq!(s(&[1, 2], 2).ramify(2), s(&[1, 0, 2, 0, 0, 0], 5));
    }

    #[test]
    fn composition_inverse_and_roots() {
        let f = s(&[0, 1, 1], 6);
        let g = f.compositional_inverse().unwrap();
        assert_eq!(f.compose(&g).unwrap(), Series::monomial(6, 1, GaussRat::from_i64(1)));
        assert_eq!(g, s(&[0, 1, -1, 2, -5, 14, -42], 6));
        let sq = s(&[1, 1], 6).pow_ratio(1, 2).unwrap();
        assert_eq!(sq.mul(&sq), s(&[1, 1], 6));
    }

    #[test]
    fn matrix_series_inverse_roundtrip() {
        let m = MatSeries::from_entries(2, vec![s(&[1, 1], 4), s(&[0, 2], 4), s(&[0, 0, 1], 4), s(&[2], 4)]);
        let p = m.mul(&m.inverse().unwrap());
        assert_eq!(p, MatSeries::identity(2, 4));
    }
}
