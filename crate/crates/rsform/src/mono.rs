//! Packed exponent vectors.
//!
//! A [`Mono`] stores up to [`MAX_VARS`] exponents in one `u64`: the total
//! degree in the top byte and one byte per variable below it. Ordering is
//! graded lexicographic: lower total degree first, then larger exponent of
//! the first variable first (`x² < xy < y²`).

use std::cmp::Ordering;
use std::fmt;

pub const MAX_VARS: usize = 7;
pub const MAX_DEGREE: u32 = 255;

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Mono(u64);

impl Mono {
    #[inline]
    fn shift(i: usize) -> u32 {
        8 * (6 - i as u32)
    }

    pub fn one() -> Self {
        Mono(0)
    }

    /// Builds a monomial from explicit exponents.
    ///
    /// Panics when there are more than [`MAX_VARS`] variables or the total
    /// degree exceeds [`MAX_DEGREE`].
    pub fn from_exps(exps: &[u32]) -> Self {
        assert!(exps.len() <= MAX_VARS, "at most {MAX_VARS} variables are supported");
        let deg: u32 = exps.iter().sum();
        assert!(deg <= MAX_DEGREE, "total degree {deg} exceeds {MAX_DEGREE}");
        let mut bits = (deg as u64) << 56;
        for (i, &e) in exps.iter().enumerate() {
            bits |= (e as u64) << Self::shift(i);
        }
        Mono(bits)
    }

    pub fn var(i: usize) -> Self {
        Self::var_pow(i, 1)
    }

    pub fn var_pow(i: usize, k: u32) -> Self {
        assert!(i < MAX_VARS && k <= MAX_DEGREE);
        Mono(((k as u64) << 56) | ((k as u64) << Self::shift(i)))
    }

    #[inline]
    pub fn degree(self) -> u32 {
        (self.0 >> 56) as u32
    }

    #[inline]
    pub fn exp(self, i: usize) -> u32 {
        ((self.0 >> Self::shift(i)) & 0xff) as u32
    }

    pub fn exps(self, nvars: usize) -> Vec<u32> {
        (0..nvars).map(|i| self.exp(i)).collect()
    }

    /// Product of monomials; caller guarantees the degree bound.
    #[inline]
    pub fn mul(self, o: Mono) -> Mono {
        debug_assert!(self.degree() + o.degree() <= MAX_DEGREE);
        Mono(self.0 + o.0)
    }

    /// Quotient by `o`, or `None` if `o` does not divide `self`.
    pub fn div(self, o: Mono, nvars: usize) -> Option<Mono> {
        for i in 0..nvars {
            if self.exp(i) < o.exp(i) {
                return None;
            }
        }
        Some(Mono(self.0 - o.0))
    }

    /// Exponent of variable `i` replaced by `e`.
    pub fn with_exp(self, i: usize, e: u32) -> Mono {
        let old = self.exp(i);
        let deg = self.degree() - old + e;
        assert!(deg <= MAX_DEGREE && e <= 0xff);
        let mask = !(0xffu64 << Self::shift(i)) & !(0xffu64 << 56);
        Mono((self.0 & mask) | ((e as u64) << Self::shift(i)) | ((deg as u64) << 56))
    }

    /// Sum of exponents over the listed variables.
    pub fn degree_in(self, vars: &[usize]) -> u32 {
        vars.iter().map(|&i| self.exp(i)).sum()
    }
}

impl Ord for Mono {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.degree().cmp(&other.degree()) {
            Ordering::Equal => other.0.cmp(&self.0),
            o => o,
        }
    }
}

impl PartialOrd for Mono {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Mono {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.exps(MAX_VARS))
    }
}

/// All exponent vectors in `nvars` variables of total degree exactly `d`,
/// in graded lexicographic order.
pub fn monomials_of_degree(nvars: usize, d: u32) -> Vec<Mono> {
    fn rec(nvars: usize, i: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Mono>) {
        if i + 1 == nvars {
            cur.push(left);
            out.push(Mono::from_exps(cur));
            cur.pop();
            return;
        }
        for e in (0..=left).rev() {
            cur.push(e);
            rec(nvars, i + 1, left - e, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if nvars == 0 {
        if d == 0 {
            out.push(Mono::one());
        }
        return out;
    }
    rec(nvars, 0, d, &mut Vec::new(), &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_lex_order() {
        let x2 = Mono::from_exps(&[2, 0]);
        let xy = Mono::from_exps(&[1, 1]);
        let y2 = Mono::from_exps(&[0, 2]);
        let x = Mono::from_exps(&[1, 0]);
        let mut v = vec![y2, x, xy, x2];
        v.sort();
        assert_eq!(v, vec![x, x2, xy, y2]);
    }

    #[test]
    fn multiply_divide_and_edit() {
        let a = Mono::from_exps(&[1, 2, 0]);
        let b = Mono::from_exps(&[0, 1, 3]);
        let p = a.mul(b);
        assert_eq!(p.exps(3), vec![1, 3, 3]);
        assert_eq!(p.degree(), 7);
        assert_eq!(p.div(b, 3), Some(a));
        assert_eq!(a.div(b, 3), None);
        assert_eq!(a.with_exp(2, 4).exps(3), vec![1, 2, 4]);
        assert_eq!(a.with_exp(2, 4).degree(), 7);
    }

    #[test]
    fn enumerates_monomials() {
        assert_eq!(monomials_of_degree(3, 2).len(), 6);
        assert_eq!(monomials_of_degree(2, 3)[0].exps(2), vec![3, 0]);
    }
}
