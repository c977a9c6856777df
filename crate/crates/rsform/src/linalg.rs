//! Small dense matrices over a coefficient backend.
//!
//! Sizes here are tiny (the transverse dimension), so everything is plain
//! Gaussian elimination. Exact backends pivot on the first nonzero entry;
//! float backends pivot on the largest magnitude and treat entries below
//! the backend epsilon (relative to the matrix scale) as zero.

use num_complex::Complex64;

use crate::coeff::Coeff;
use crate::error::{Error, Result};

#[derive(Clone, PartialEq)]
pub struct Mat<C> {
    rows: usize,
    cols: usize,
    data: Vec<C>,
}

impl<C: Coeff> std::fmt::Debug for Mat<C> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{:?}", self.get(i, j))?;
            }
        }
        write!(f, "]")
    }
}

impl<C: Coeff> Mat<C> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![C::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { C::one() } else { C::zero() })
    }

    pub fn scalar(n: usize, c: C) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { c.clone() } else { C::zero() })
    }

    pub fn diagonal(d: &[C]) -> Self {
        Self::from_fn(d.len(), d.len(), |i, j| if i == j { d[i].clone() } else { C::zero() })
    }

    pub fn from_fn<F: FnMut(usize, usize) -> C>(rows: usize, cols: usize, mut f: F) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<C>>) -> Self {
        let r = rows.len();
        let c = rows.first().map(|x| x.len()).unwrap_or(0);
        assert!(rows.iter().all(|x| x.len() == c), "ragged matrix");
        Mat { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn from_i64_rows(rows: &[&[i64]]) -> Self {
        Self::from_rows(rows.iter().map(|r| r.iter().map(|&v| C::from_i64(v)).collect()).collect())
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<C>]) -> Self {
        let n = cols.first().map(|c| c.len()).unwrap_or(0);
        Self::from_fn(n, cols.len(), |i, j| cols[j][i].clone())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &C {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: C) {
        self.data[i * self.cols + j] = v;
    }

    pub fn column(&self, j: usize) -> Vec<C> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn scale_mag(&self) -> f64 {
        self.data.iter().map(|c| c.magnitude()).fold(0.0, f64::max)
    }

    fn small(&self, c: &C, scale: f64) -> bool {
        c.is_zero() || c.is_negligible(scale, C::default_eps())
    }

    pub fn is_zero(&self) -> bool {
        let s = self.scale_mag();
        if C::EXACT {
            return self.data.iter().all(|c| c.is_zero());
        }
        s == 0.0 || self.data.iter().all(|c| c.magnitude() <= 1e-300) || s < 1e-300
    }

    /// Zeroes float entries below `rel` times the largest magnitude.
    pub fn pruned(&self, rel: f64) -> Self {
        if C::EXACT {
            return self.clone();
        }
        let tol = rel * self.scale_mag();
        self.map(|c| if c.magnitude() <= tol { C::zero() } else { c.clone() })
    }

    pub fn is_diagonal(&self) -> bool {
        let s = self.scale_mag();
        (0..self.rows).all(|i| (0..self.cols).all(|j| i == j || self.small(self.get(i, j), s)))
    }

    /// The scalar `c` when the matrix equals `c·I`.
    pub fn as_scalar(&self) -> Option<C> {
        if self.rows != self.cols || !self.is_diagonal() {
            return None;
        }
        let c = self.get(0, 0).clone();
        let s = self.scale_mag();
        (1..self.rows).all(|i| self.small(&self.get(i, i).sub_ref(&c), s)).then_some(c)
    }

    pub fn add(&self, o: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&o.data).map(|(a, b)| a.add_ref(b)).collect() }
    }

    pub fn sub(&self, o: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&o.data).map(|(a, b)| a.sub_ref(b)).collect() }
    }

    pub fn neg(&self) -> Self {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| -a.clone()).collect() }
    }

    pub fn scale(&self, c: &C) -> Self {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| a.mul_ref(c)).collect() }
    }

    pub fn mul(&self, o: &Self) -> Self {
        assert_eq!(self.cols, o.rows);
        let mut r = Self::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self.get(i, l);
                if a.is_zero() {
                    continue;
                }
                for j in 0..o.cols {
                    let b = o.get(l, j);
                    if !b.is_zero() {
                        r.data[i * o.cols + j].add_prod(a, b);
                    }
                }
            }
        }
        r
    }

    pub fn mul_vec(&self, v: &[C]) -> Vec<C> {
        (0..self.rows)
            .map(|i| {
                let mut acc = C::zero();
                for (j, x) in v.iter().enumerate() {
                    acc.add_prod(self.get(i, j), x);
                }
                acc
            })
            .collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::identity(self.rows);
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn trace(&self) -> C {
        let mut t = C::zero();
        for i in 0..self.rows.min(self.cols) {
            t = t.add_ref(self.get(i, i));
        }
        t
    }

    pub fn commutator(&self, o: &Self) -> Self {
        self.mul(o).sub(&o.mul(self))
    }

    /// Square sub-block starting at `(start, start)`.
    pub fn block(&self, start: usize, size: usize) -> Self {
        Self::from_fn(size, size, |i, j| self.get(start + i, start + j).clone())
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &Self) {
        for i in 0..b.rows {
            for j in 0..b.cols {
                self.set(r0 + i, c0 + j, b.get(i, j).clone());
            }
        }
    }

    pub fn sub_matrix(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |i, j| self.get(r0 + i, c0 + j).clone())
    }

    /// Reduced row echelon form and pivot columns.
    pub fn rref(&self) -> (Self, Vec<usize>) {
        let mut m = self.clone();
        let scale = self.scale_mag();
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..m.cols {
            if row == m.rows {
                break;
            }
            let piv = if C::EXACT {
                (row..m.rows).find(|&r| !m.get(r, col).is_zero())
            } else {
                (row..m.rows)
                    .filter(|&r| !m.small(m.get(r, col), scale))
                    .max_by(|&a, &b| m.get(a, col).magnitude().total_cmp(&m.get(b, col).magnitude()))
            };
            let Some(p) = piv else { continue };
            for j in 0..m.cols {
                m.data.swap(p * m.cols + j, row * m.cols + j);
            }
            let inv = C::one().div_ref(m.get(row, col));
            for j in 0..m.cols {
                let v = m.get(row, j).mul_ref(&inv);
                m.set(row, j, v);
            }
            for r in 0..m.rows {
                if r == row {
                    continue;
                }
                let f = m.get(r, col).clone();
                if f.is_zero() {
                    continue;
                }
                for j in 0..m.cols {
                    let v = m.get(r, j).sub_ref(&f.mul_ref(m.get(row, j)));
                    m.set(r, j, v);
                }
            }
            pivots.push(col);
            row += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Basis of the right null space.
    pub fn kernel(&self) -> Vec<Vec<C>> {
        let (r, piv) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !piv.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![C::zero(); self.cols];
                v[f] = C::one();
                for (row, &pc) in piv.iter().enumerate() {
                    v[pc] = -r.get(row, f).clone();
                }
                v
            })
            .collect()
    }

    pub fn inverse(&self) -> Option<Self> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut aug = Self::zeros(n, 2 * n);
        aug.set_block(0, 0, self);
        aug.set_block(0, n, &Self::identity(n));
        let (r, piv) = aug.rref();
        if piv.len() < n || piv[n - 1] >= n {
            return None;
        }
        Some(r.sub_matrix(0, n, n, n))
    }

    /// Solves `self · x = b`.
    pub fn solve(&self, b: &[C]) -> Option<Vec<C>> {
        let n = self.cols;
        let mut aug = Self::zeros(self.rows, n + 1);
        aug.set_block(0, 0, self);
        for (i, v) in b.iter().enumerate() {
            aug.set(i, n, v.clone());
        }
        let (r, piv) = aug.rref();
        if piv.last() == Some(&n) {
            return None;
        }
        let mut x = vec![C::zero(); n];
        for (row, &pc) in piv.iter().enumerate() {
            x[pc] = r.get(row, n).clone();
        }
        Some(x)
    }

    pub fn determinant(&self) -> C {
        let n = self.rows;
        let mut m = self.clone();
        let mut det = C::one();
        for col in 0..n {
            let Some(p) = (col..n).max_by(|&a, &b| m.get(a, col).magnitude().total_cmp(&m.get(b, col).magnitude())) else {
                return C::zero();
            };
            if m.get(p, col).is_zero() {
                return C::zero();
            }
            if p != col {
                for j in 0..n {
                    m.data.swap(p * n + j, col * n + j);
                }
                det = -det;
            }
            let d = m.get(col, col).clone();
            det = det.mul_ref(&d);
            for r in col + 1..n {
                let f = m.get(r, col).div_ref(&d);
                for j in col..n {
                    let v = m.get(r, j).sub_ref(&f.mul_ref(m.get(col, j)));
                    m.set(r, j, v);
                }
            }
        }
        det
    }

    /// Characteristic polynomial `det(tI − A)`, coefficients lowest first
    /// (Faddeev–LeVerrier).
    pub fn charpoly(&self) -> Vec<C> {
        let n = self.rows;
        let mut c = vec![C::zero(); n + 1];
        c[n] = C::one();
        let mut m = Self::zeros(n, n);
        for k in 1..=n {
            m = self.mul(&m).add(&Self::scalar(n, c[n - k + 1].clone()));
            let t = self.mul(&m).trace();
            c[n - k] = -(t.div_ref(&C::from_i64(k as i64)));
        }
        c
    }

    pub fn is_nilpotent(&self) -> bool {
        self.pow(self.rows as u32).is_zero_rel(self.scale_mag().max(1.0))
    }

    fn is_zero_rel(&self, scale: f64) -> bool {
        if C::EXACT {
            self.data.iter().all(|c| c.is_zero())
        } else {
            self.data.iter().all(|c| c.magnitude() <= 1e3 * C::default_eps() * scale.powi(self.rows as i32))
        }
    }

    pub fn to_c64(&self) -> Mat<Complex64> {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|c| c.to_c64()).collect() }
    }

    pub fn map<D: Coeff, F: Fn(&C) -> D>(&self, f: F) -> Mat<D> {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }
}

/// Polynomial helpers on coefficient vectors (lowest degree first).
pub mod poly {
    use super::*;

    pub fn trim<C: Coeff>(mut p: Vec<C>) -> Vec<C> {
        while p.len() > 1 && p.last().map(|c| c.is_zero()).unwrap_or(false) {
            p.pop();
        }
        p
    }

    pub fn degree<C: Coeff>(p: &[C]) -> usize {
        p.iter().rposition(|c| !c.is_zero()).unwrap_or(0)
    }

    pub fn eval<C: Coeff>(p: &[C], x: &C) -> C {
        let mut acc = C::zero();
        for c in p.iter().rev() {
            acc = acc.mul_ref(x).add_ref(c);
        }
        acc
    }

    pub fn derivative<C: Coeff>(p: &[C]) -> Vec<C> {
        if p.len() <= 1 {
            return vec![C::zero()];
        }
        (1..p.len()).map(|k| p[k].scale_i64(k as i64)).collect()
    }

    /// Quotient and remainder of `a` by a nonzero `b`.
    pub fn divrem<C: Coeff>(a: &[C], b: &[C]) -> (Vec<C>, Vec<C>) {
        let b = trim(b.to_vec());
        let db = degree(&b);
        let lead = b[db].clone();
        let mut r = trim(a.to_vec());
        if degree(&r) < db || (r.len() == 1 && r[0].is_zero()) {
            return (vec![C::zero()], r);
        }
        let mut q = vec![C::zero(); degree(&r) - db + 1];
        while !(r.len() == 1 && r[0].is_zero()) && degree(&r) >= db {
            let dr = degree(&r);
            let f = r[dr].div_ref(&lead);
            q[dr - db] = f.clone();
            for (i, bc) in b.iter().enumerate().take(db + 1) {
                r[dr - db + i] = r[dr - db + i].sub_ref(&f.mul_ref(bc));
            }
            r[dr] = C::zero();
            r = trim(r);
        }
        (trim(q), r)
    }

    pub fn is_zero<C: Coeff>(p: &[C]) -> bool {
        p.iter().all(|c| c.is_zero())
    }

    /// Monic greatest common divisor (exact backends).
    pub fn gcd<C: Coeff>(a: &[C], b: &[C]) -> Vec<C> {
        let mut x = trim(a.to_vec());
        let mut y = trim(b.to_vec());
        while !is_zero(&y) {
            let (_, r) = divrem(&x, &y);
            x = y;
            y = r;
        }
        let l = x[degree(&x)].clone();
        x.iter().map(|c| c.div_ref(&l)).collect()
    }

    /// All complex roots of a polynomial (Aberth–Ehrlich iteration).
    pub fn roots_c64(p: &[Complex64]) -> Vec<Complex64> {
        let mut p: Vec<Complex64> = p.to_vec();
        while p.len() > 1 && p.last().unwrap().norm() == 0.0 {
            p.pop();
        }
        let n = p.len() - 1;
        if n == 0 {
            return vec![];
        }
        let lead = p[n];
        let p: Vec<Complex64> = p.iter().map(|c| c / lead).collect();
        let dp: Vec<Complex64> = (1..=n).map(|k| p[k] * k as f64).collect();
        let ev = |q: &[Complex64], x: Complex64| q.iter().rev().fold(Complex64::new(0.0, 0.0), |a, c| a * x + c);
        let radius = 1.0 + p[..n].iter().map(|c| c.norm()).fold(0.0, f64::max);
        let mut z: Vec<Complex64> = (0..n)
            .map(|k| Complex64::from_polar(0.5 * radius, 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / n as f64))
            .collect();
        for _ in 0..500 {
            let mut moved = 0.0f64;
            for i in 0..n {
                let pv = ev(&p, z[i]);
                let dv = ev(&dp, z[i]);
                if pv.norm() == 0.0 {
                    continue;
                }
                let ratio = pv / dv;
                let s: Complex64 = (0..n).filter(|&j| j != i).map(|j| Complex64::new(1.0, 0.0) / (z[i] - z[j])).sum();
                let w = ratio / (Complex64::new(1.0, 0.0) - ratio * s);
                if w.is_finite() {
                    z[i] -= w;
                    moved = moved.max(w.norm());
                }
            }
            if moved < 1e-15 * radius {
                break;
            }
        }
        z
    }
}

/// Distinct eigenvalues with algebraic multiplicities.
///
/// Exact backends recover each root in the Gaussian rationals and verify it
/// exactly; a root outside that field is a [`Error::Precision`]. Float
/// backends accept numeric roots whose pairwise gaps exceed `1e6·eps`.
pub fn eigenvalues<C: Coeff>(a: &Mat<C>) -> Result<Vec<(C, usize)>> {
    let cp = a.charpoly();
    if C::EXACT {
        let d = poly::derivative(&cp);
        let g = poly::gcd(&cp, &d);
        let (sf, _) = poly::divrem(&cp, &g);
        let sf = poly::trim(sf);
        let approx = poly::roots_c64(&sf.iter().map(|c| c.to_c64()).collect::<Vec<_>>());
        let mut out = Vec::new();
        for z in approx {
            let lam = C::from_c64(z)
                .filter(|l| poly::eval(&sf, l).is_zero())
                .ok_or_else(|| Error::Precision(format!("eigenvalue near {z} is not a Gaussian rational")))?;
            let mut mult = 0;
            let mut rest = cp.clone();
            let lin = vec![-lam.clone(), C::one()];
            loop {
                let (q, r) = poly::divrem(&rest, &lin);
                if !poly::is_zero(&r) {
                    break;
                }
                mult += 1;
                rest = q;
            }
            out.push((lam, mult));
        }
        Ok(out)
    } else {
        let roots = poly::roots_c64(&cp.iter().map(|c| c.to_c64()).collect::<Vec<_>>());
        let scale = a.scale_mag().max(1.0);
        let gap = 1e6 * f64::EPSILON * scale;
        for i in 0..roots.len() {
            for j in i + 1..roots.len() {
                if (roots[i] - roots[j]).norm() <= gap {
                    return Err(Error::Precision(format!(
                        "eigenvalues {} and {} are not separated at working precision",
                        roots[i], roots[j]
                    )));
                }
            }
        }
        Ok(roots.into_iter().map(|z| (C::from_c64(z).expect("float backend"), 1)).collect())
    }
}

/// Basis of the generalized eigenspace `ker (A − λ)^mult`.
pub fn generalized_eigenspace<C: Coeff>(a: &Mat<C>, lam: &C, mult: usize) -> Vec<Vec<C>> {
    let n = a.rows();
    let shifted = a.sub(&Mat::scalar(n, lam.clone()));
    shifted.pow(mult as u32).kernel()
}

/// Columns of `P` with `P⁻¹ N P` in upper Jordan form, plus the block sizes.
pub fn nilpotent_jordan_basis<C: Coeff>(n: &Mat<C>) -> (Mat<C>, Vec<usize>) {
    let dim = n.rows();
    let mut index = 1;
    while index < dim && !n.pow(index as u32).is_zero() {
        index += 1;
    }
    let kernels: Vec<Vec<Vec<C>>> = (0..=index).map(|j| n.pow(j as u32).kernel()).collect();
    let mut chains: Vec<Vec<Vec<C>>> = Vec::new();
    for level in (1..=index).rev() {
        for cand in &kernels[level] {
            let mut span: Vec<Vec<C>> = kernels[level - 1].clone();
            for ch in &chains {
                let len = ch.len();
                for (t, v) in ch.iter().enumerate() {
                    if len - t <= level {
                        span.push(v.clone());
                    }
                }
            }
            let before = if span.is_empty() { 0 } else { Mat::from_columns(&span).rank() };
            span.push(cand.clone());
            if Mat::from_columns(&span).rank() > before {
                let mut ch = vec![cand.clone()];
                for _ in 1..level {
                    let next = n.mul_vec(ch.last().unwrap());
                    ch.push(next);
                }
                chains.push(ch);
            }
        }
    }
    let mut cols = Vec::new();
    let mut sizes = Vec::new();
    for ch in &chains {
        sizes.push(ch.len());
        for v in ch.iter().rev() {
            cols.push(v.clone());
        }
    }
    (Mat::from_columns(&cols), sizes)
}

/// Solves `A X − X B = R` (unique when the spectra of `A` and `B` are disjoint).
pub fn sylvester<C: Coeff>(a: &Mat<C>, b: &Mat<C>, r: &Mat<C>) -> Result<Mat<C>> {
    let (p, q) = (a.rows(), b.rows());
    let n = p * q;
    let mut k: Mat<C> = Mat::zeros(n, n);
    for i in 0..p {
        for j in 0..q {
            let row = i * q + j;
            for l in 0..p {
                let v = k.get(row, l * q + j).add_ref(a.get(i, l));
                k.set(row, l * q + j, v);
            }
            for l in 0..q {
                let v = k.get(row, i * q + l).sub_ref(b.get(l, j));
                k.set(row, i * q + l, v);
            }
        }
    }
    let rhs: Vec<C> = (0..p).flat_map(|i| (0..q).map(move |j| (i, j))).map(|(i, j)| r.get(i, j).clone()).collect();
    let x = k.solve(&rhs).ok_or_else(|| Error::Precision("Sylvester equation is singular".into()))?;
    Ok(Mat::from_fn(p, q, |i, j| x[i * q + j].clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::GaussRat;
    use num_traits::Zero;

    type M = Mat<GaussRat>;

    fn g(n: i64) -> GaussRat {
        GaussRat::from_i64(n)
    }

    #[test]
    fn inverse_and_kernel() {
        let a = M::from_i64_rows(&[&[2, 1], &[1, 1]]);
        assert_eq!(a.mul(&a.inverse().unwrap()), M::identity(2));
        let s = M::from_i64_rows(&[&[1, 2], &[2, 4]]);
        assert!(s.inverse().is_none());
        let k = s.kernel();
        assert_eq!(k.len(), 1);
        assert!(s.mul_vec(&k[0]).iter().all(|c| c.is_zero()));
    }

    #[test]
    fn charpoly_and_eigenvalues() {
        let a = M::from_i64_rows(&[&[1, 1], &[0, 2]]);
        assert_eq!(a.charpoly(), vec![g(2), g(-3), g(1)]);
        let ev = eigenvalues(&a).unwrap();
        assert_eq!(ev.len(), 2);
        let j = M::from_i64_rows(&[&[3, 1, 0], &[0, 3, 0], &[0, 0, -1]]);
        let mut ev = eigenvalues(&j).unwrap();
        ev.sort_by(|a, b| a.1.cmp(&b.1));
        assert_eq!(ev, vec![(g(-1), 1), (g(3), 2)]);
        let rot = M::from_i64_rows(&[&[0, -1], &[1, 0]]);
        let ev = eigenvalues(&rot).unwrap();
        assert!(ev.iter().any(|(l, _)| *l == GaussRat::imag_unit()));
        let irr = M::from_i64_rows(&[&[0, 2], &[1, 0]]);
        assert!(matches!(eigenvalues(&irr), Err(Error::Precision(_))));
    }

    #[test]
    fn jordan_basis_of_nilpotent() {
        let n = M::from_i64_rows(&[&[0, 0, 0], &[1, 0, 0], &[1, 1, 0]]);
        let (p, sizes) = nilpotent_jordan_basis(&n);
        assert_eq!(sizes, vec![3]);
        let j = p.inverse().unwrap().mul(&n).mul(&p);
        assert_eq!(j, M::from_i64_rows(&[&[0, 1, 0], &[0, 0, 1], &[0, 0, 0]]));
        let n2 = M::from_i64_rows(&[&[0, 1, 1], &[0, 0, 0], &[0, 0, 0]]);
        let (p2, sizes2) = nilpotent_jordan_basis(&n2);
        assert_eq!(sizes2, vec![2, 1]);
        let j2 = p2.inverse().unwrap().mul(&n2).mul(&p2);
        assert_eq!(j2, M::from_i64_rows(&[&[0, 1, 0], &[0, 0, 0], &[0, 0, 0]]));
    }

    #[test]
    fn sylvester_solution() {
        let a = M::from_i64_rows(&[&[1]]);
        let b = M::from_i64_rows(&[&[2, 1], &[0, 3]]);
        let r = M::from_i64_rows(&[&[1, 4]]);
        let x = sylvester(&a, &b, &r).unwrap();
        assert_eq!(a.mul(&x).sub(&x.mul(&b)), r);
    }

    #[test]
    fn determinant_matches_charpoly() {
        let a = M::from_i64_rows(&[&[1, 2, 0], &[3, -1, 4], &[0, 5, 2]]);
        let cp = a.charpoly();
        assert_eq!(a.determinant(), -cp[0].clone());
    }
}
