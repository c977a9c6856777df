//! Reduction of meromorphic linear systems `x^{q+1} y' = B(x) y` to the
//! principal form `x^{p+1} y' = (D(x) + x^p C + O(x^{p+1})) y`.

use crate::coeff::Coeff;
use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, generalized_eigenspace, nilpotent_jordan_basis, poly, sylvester, Mat};
use crate::series::{MatSeries, Series};

const MAX_STEPS: usize = 256;

/// `x^{rank+1} y' = matrix · y`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearSystem<C: Coeff> {
    pub rank: u32,
    pub matrix: MatSeries<C>,
}

impl<C: Coeff> LinearSystem<C> {
    pub fn new(rank: u32, matrix: MatSeries<C>) -> Self {
        LinearSystem { rank, matrix }
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn trunc(&self) -> u32 {
        self.matrix.trunc()
    }

    pub fn truncate(&self, n: u32) -> Self {
        LinearSystem { rank: self.rank, matrix: self.matrix.truncate(n) }
    }
}

/// Changes of variables allowed in the reduction.
#[derive(Clone, Debug, PartialEq)]
pub enum TTransform<C: Coeff> {
    /// `y = P(x) ỹ` with `P` polynomial and `P(0)` invertible.
    PolyLinear(MatSeries<C>),
    /// `y = diag(x^{k_1}, …, x^{k_m}) ỹ`.
    Shearing(Vec<u32>),
    /// `x = x̃^α`.
    Ramify(u32),
}

/// Principal form data: `D` diagonal with polynomial entries of degree
/// below `p`, `C` constant, and the rest of the matrix of order `> p`.
#[derive(Clone, Debug, PartialEq)]
pub struct RsLinearForm<C: Coeff> {
    pub p: u32,
    pub d: Vec<Series<C>>,
    pub c: Mat<C>,
    pub remainder: MatSeries<C>,
}

impl<C: Coeff> RsLinearForm<C> {
    /// `D` as a matrix polynomial of truncation `p - 1` (zero when `p = 0`).
    pub fn d_matrix(&self) -> MatSeries<C> {
        let m = self.d.len();
        let mut out = MatSeries::zero(m, self.p.saturating_sub(1));
        for (i, s) in self.d.iter().enumerate() {
            out.set_entry(i, i, s.clone());
        }
        out
    }
}

/// Scalar polynomial split off a diagonal block during the reduction. It is
/// bookkeeping only: the recorded transforms never use it.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarShift<C: Coeff> {
    pub start: usize,
    pub size: usize,
    pub poly: Vec<C>,
}

#[derive(Clone, Debug)]
pub struct TurrittinOutcome<C: Coeff> {
    pub transforms: Vec<TTransform<C>>,
    pub system: LinearSystem<C>,
    pub form: RsLinearForm<C>,
    pub shifts: Vec<ScalarShift<C>>,
}

/// Relative threshold for dropping float round-off in system matrices.
fn float_tol<C: Coeff>() -> f64 {
    1e3 * C::default_eps().max(f64::EPSILON)
}

fn normalize<C: Coeff>(rank: u32, b: MatSeries<C>) -> Result<(LinearSystem<C>, u32)> {
    let b = b.pruned(float_tol::<C>());
    let s = b.order().ok_or_else(|| Error::Degenerate("system matrix vanishes to the truncation order".into()))?;
    if s > rank {
        return Err(Error::Degenerate("system is holomorphic at the origin".into()));
    }
    Ok((LinearSystem { rank: rank - s, matrix: b.shift_down(s)? }, s))
}

/// Strips common powers of `x` from the matrix into the rank so that
/// `B(0) ≠ 0`.
pub fn poincare_rank<C: Coeff>(sys: &LinearSystem<C>) -> Result<LinearSystem<C>> {
    normalize(sys.rank, sys.matrix.clone()).map(|r| r.0)
}

/// Applies a transform and renormalizes; also returns how many powers of `x`
/// were stripped relative to the unnormalized transformed matrix.
fn apply_raw<C: Coeff>(sys: &LinearSystem<C>, t: &TTransform<C>) -> Result<(LinearSystem<C>, i64)> {
    let m = sys.dim();
    let (q, n) = (sys.rank, sys.trunc());
    match t {
        TTransform::PolyLinear(p) => {
            if p.dim() != m {
                return Err(Error::Structural("transform dimension differs from the system".into()));
            }
            if p.coeff(0).inverse().is_none() {
                return Err(Error::Precondition("polynomial transform needs P(0) invertible".into()));
            }
            let pp = p.as_polynomial_at(n + 1);
            let pn = pp.truncate(n);
            let pinv = pn.inverse()?;
            let conj = pinv.mul(&sys.matrix).mul(&pn);
            let drift = pinv.mul(&pp.derivative()).shift_up(q + 1).truncate(n);
            let (s, e) = normalize(q, conj.sub(&drift))?;
            Ok((s, e as i64))
        }
        TTransform::Shearing(k) => {
            if k.len() != m {
                return Err(Error::Structural("shearing length differs from the system".into()));
            }
            let kmax = *k.iter().max().unwrap_or(&0);
            let mut entries = Vec::with_capacity(m * m);
            for i in 0..m {
                for j in 0..m {
                    let mut e = sys.matrix.entry(i, j).shift_up(kmax + k[j] - k[i]);
                    if i == j && k[i] > 0 {
                        e = e.sub(&Series::monomial(e.trunc(), q + kmax, C::from_i64(k[i] as i64)));
                    }
                    entries.push(e);
                }
            }
            let (s, e) = normalize(q + kmax, MatSeries::from_entries(m, entries))?;
            Ok((s, e as i64 - kmax as i64))
        }
        TTransform::Ramify(a) => {
            if *a == 0 {
                return Err(Error::Precondition("ramification index must be positive".into()));
            }
            let b = sys.matrix.ramify(*a).scale(&C::from_i64(*a as i64));
            let (s, e) = normalize(q * a, b)?;
            Ok((s, e as i64))
        }
    }
}

/// `y = T ỹ` gives `T⁻¹BT − x^{q+1}T⁻¹T'`; `x = x̃^α` gives `α B(x̃^α)` with
/// rank `αq`. The result is renormalized.
pub fn apply_t<C: Coeff>(sys: &LinearSystem<C>, t: &TTransform<C>) -> Result<LinearSystem<C>> {
    apply_raw(sys, t).map(|r| r.0)
}

pub fn replay<C: Coeff>(sys: &LinearSystem<C>, ts: &[TTransform<C>]) -> Result<LinearSystem<C>> {
    ts.iter().try_fold(poincare_rank(sys)?, |acc, t| apply_t(&acc, t))
}

fn sorted_eigenvalues<C: Coeff>(a: &Mat<C>) -> Result<Vec<(C, usize)>> {
    let mut ev = eigenvalues(a)?;
    ev.sort_by(|x, y| {
        let (a, b) = (x.0.to_c64(), y.0.to_c64());
        a.re.partial_cmp(&b.re).unwrap_or(std::cmp::Ordering::Equal).then(a.im.partial_cmp(&b.im).unwrap_or(std::cmp::Ordering::Equal))
    });
    Ok(ev)
}

/// Similarity `P` whose columns span the generalized eigenspaces of `b0`,
/// grouped by eigenvalue, and the resulting block sizes.
pub fn leading_split<C: Coeff>(b0: &Mat<C>) -> Result<(Mat<C>, Vec<usize>)> {
    let ev = sorted_eigenvalues(b0)?;
    let mut cols = Vec::new();
    let mut sizes = Vec::new();
    for (lam, mult) in &ev {
        let basis = generalized_eigenspace(b0, lam, *mult);
        if basis.len() != *mult {
            return Err(Error::Precision("generalized eigenspace has the wrong dimension".into()));
        }
        sizes.push(basis.len());
        cols.extend(basis);
    }
    let p = Mat::from_columns(&cols);
    if p.inverse().is_none() {
        return Err(Error::Precision("eigenvector basis is singular".into()));
    }
    Ok((p, sizes))
}

/// Reads the principal form off a system, or names the violated clause.
pub fn rs_form<C: Coeff>(sys: &LinearSystem<C>) -> Result<RsLinearForm<C>> {
    let sys = poincare_rank(sys)?;
    let p = sys.rank;
    let m = sys.dim();
    if sys.trunc() < p {
        return Err(Error::Budget { context: "principal form".into(), have: sys.trunc(), needed: p });
    }
    for k in 0..p {
        if !sys.matrix.coeff(k).is_diagonal() {
            return Err(Error::NotInForm(format!("coefficient of x^{k} is not diagonal")));
        }
    }
    let c = sys.matrix.coeff(p);
    let d: Vec<Series<C>> = (0..m)
        .map(|i| Series::from_coeffs(p.saturating_sub(1), (0..p).map(|k| sys.matrix.entry(i, i).coeff(k)).collect()))
        .collect();
    for k in 0..p {
        let comm = sys.matrix.coeff(k).commutator(&c);
        let tol = float_tol::<C>() * sys.matrix.scale_mag().powi(2);
        if (0..m).any(|i| (0..m).any(|j| comm.get(i, j).magnitude() > tol)) {
            return Err(Error::NotInForm(format!("coefficient of x^{k} does not commute with C")));
        }
    }
    let mut remainder = sys.matrix.clone();
    for k in 0..=p {
        remainder.set_coeff(k, &Mat::zeros(m, m));
    }
    Ok(RsLinearForm { p, d, c, remainder })
}

#[derive(Clone, Debug)]
struct Block<C> {
    start: usize,
    size: usize,
    level: u32,
    lead: Vec<C>,
}

struct Reducer<C: Coeff> {
    sys: LinearSystem<C>,
    blocks: Vec<Block<C>>,
    transforms: Vec<TTransform<C>>,
    n_in: u32,
    ramification: u32,
}

impl<C: Coeff> Reducer<C> {
    fn push(&mut self, t: TTransform<C>) -> Result<()> {
        let (sys, shift) = apply_raw(&self.sys, &t)?;
        if let TTransform::Ramify(a) = t {
            self.ramification *= a;
            for b in &mut self.blocks {
                let mut lead = vec![C::zero(); b.lead.len().saturating_sub(1) * a as usize + 1];
                for (i, c) in b.lead.iter().enumerate() {
                    lead[i * a as usize] = c.scale_i64(a as i64);
                }
                if b.lead.is_empty() {
                    lead.clear();
                }
                b.lead = lead;
                b.level *= a;
            }
        }
        if shift < 0 {
            return Err(Error::Structural("reduction step raised the Poincaré rank".into()));
        }
        let e = shift as u32;
        for b in &mut self.blocks {
            b.level = b.level.max(e) - e;
            b.lead = b.lead[(e as usize).min(b.lead.len())..].to_vec();
        }
        self.sys = sys;
        self.transforms.push(t);
        Ok(())
    }

    fn embed(&self, b: &Block<C>, p: &MatSeries<C>) -> MatSeries<C> {
        let m = self.sys.dim();
        let mut out = MatSeries::identity(m, p.trunc());
        for i in 0..b.size {
            for j in 0..b.size {
                out.set_entry(b.start + i, b.start + j, p.entry(i, j).clone());
            }
        }
        out
    }

    fn budget_error(&self, needed_here: u32) -> Error {
        let deficit = needed_here.saturating_sub(self.sys.trunc());
        Error::Budget {
            context: "linear system reduction".into(),
            have: self.n_in,
            needed: self.n_in + deficit.div_ceil(self.ramification.max(1)) + 1,
        }
    }

    /// `(B_bb − L(x) I) / x^level` for block `b`.
    fn residual(&self, b: &Block<C>) -> Result<MatSeries<C>> {
        if self.sys.trunc() < b.level {
            return Err(self.budget_error(self.sys.rank));
        }
        let mut blk = self.sys.matrix.block(b.start, b.size);
        let n = blk.trunc();
        let l = Series::from_coeffs(n, b.lead.clone());
        for i in 0..b.size {
            let e = blk.entry(i, i).sub(&l);
            blk.set_entry(i, i, e);
        }
        blk.shift_down(b.level).map_err(|e| match e {
            Error::Divisibility { .. } => Error::Structural("block residual lost divisibility".into()),
            other => other,
        })
    }

    fn run(&mut self) -> Result<()> {
        for _ in 0..MAX_STEPS {
            let q = self.sys.rank;
            let Some(bi) = self.blocks.iter().position(|b| b.level < q) else {
                return Ok(());
            };
            if self.sys.trunc() < q {
                return Err(self.budget_error(q));
            }
            let b = self.blocks[bi].clone();
            let res = self.residual(&b)?;
            let lead = res.coeff(0);
            if let Some(lam) = lead.as_scalar() {
                let blk = &mut self.blocks[bi];
                blk.lead.resize(blk.level as usize + 1, C::zero());
                blk.lead[blk.level as usize] = blk.lead[blk.level as usize].add_ref(&lam);
                blk.level += 1;
                continue;
            }
            if distinct_eigenvalue_count(&lead) >= 2 {
                self.split(bi, &res)?;
                continue;
            }
            let lam = lead.trace().div_ref(&C::from_i64(b.size as i64));
            let blk = &mut self.blocks[bi];
            blk.lead.resize(blk.level as usize + 1, C::zero());
            blk.lead[blk.level as usize] = blk.lead[blk.level as usize].add_ref(&lam);
            self.reduce_nilpotent(bi)?;
        }
        Err(Error::Unsupported(format!("reduction did not terminate within {MAX_STEPS} steps")))
    }

    fn split(&mut self, bi: usize, res: &MatSeries<C>) -> Result<()> {
        let b = self.blocks[bi].clone();
        let r = self.sys.rank - b.level;
        let (p0, sizes) = leading_split(&res.coeff(0))?;
        let p0inv = p0.inverse().expect("checked in leading_split");
        let kmax = res.trunc();
        let rhat: Vec<Mat<C>> = (0..=kmax).map(|k| p0inv.mul(&res.coeff(k)).mul(&p0)).collect();
        let mut starts = vec![0];
        for s in &sizes {
            starts.push(starts.last().unwrap() + s);
        }
        let sub = |m: &Mat<C>, a: usize, c: usize| m.sub_matrix(starts[a], starts[c], sizes[a], sizes[c]);
        let lead_blocks: Vec<Mat<C>> = (0..sizes.len()).map(|a| sub(&rhat[0], a, a)).collect();
        let mut tk: Vec<Mat<C>> = vec![Mat::identity(b.size)];
        let mut rt: Vec<Mat<C>> = vec![rhat[0].clone()];
        for k in 1..=kmax {
            let mut w = rhat[k as usize].clone();
            for i in 1..k {
                let ti = &tk[(k - i) as usize];
                w = w.add(&rhat[i as usize].mul(ti)).sub(&ti.mul(&rt[i as usize]));
            }
            if k > r {
                w = w.sub(&tk[(k - r) as usize].scale(&C::from_i64((k - r) as i64)));
            }
            let mut diag = Mat::zeros(b.size, b.size);
            let mut t = Mat::zeros(b.size, b.size);
            for a in 0..sizes.len() {
                for c in 0..sizes.len() {
                    let wac = sub(&w, a, c);
                    if a == c {
                        diag.set_block(starts[a], starts[a], &wac);
                    } else {
                        let x = sylvester(&lead_blocks[a], &lead_blocks[c], &wac.neg())?;
                        t.set_block(starts[a], starts[c], &x);
                    }
                }
            }
            tk.push(t);
            rt.push(diag);
        }
        let mats: Vec<Mat<C>> = tk.iter().map(|t| p0.mul(t)).collect();
        let p = MatSeries::from_coeff_mats(kmax, &mats);
        if p != MatSeries::identity(b.size, kmax) {
            let full = self.embed(&b, &p);
            self.push(TTransform::PolyLinear(full))?;
        }
        let level = self.blocks[bi].level;
        let lead = self.blocks[bi].lead.clone();
        let new: Vec<Block<C>> = sizes
            .iter()
            .zip(&starts)
            .map(|(&size, &st)| Block { start: b.start + st, size, level, lead: lead.clone() })
            .collect();
        self.blocks.splice(bi..=bi, new);
        Ok(())
    }

    fn reduce_nilpotent(&mut self, bi: usize) -> Result<()> {
        let b = self.blocks[bi].clone();
        let res = self.residual(&b)?;
        let n0 = res.coeff(0);
        let (pj, _) = nilpotent_jordan_basis(&n0);
        let pinv = pj.inverse().ok_or_else(|| Error::Precision("Jordan basis is singular".into()))?;
        if pinv.mul(&n0).mul(&pj) != n0 {
            let full = self.embed(&b, &MatSeries::from_coeff_mats(0, &[pj]));
            self.push(TTransform::PolyLinear(full))?;
        }
        let b = self.blocks[bi].clone();
        let res = self.residual(&b)?;
        let r = self.sys.rank - b.level;
        let best = search_shearing(&res, r)?;
        let Some(Candidate { alpha, k, gain, .. }) = best else {
            return Err(Error::Unsupported(format!(
                "no ramified shearing lowers the nilpotent leading term of a {}x{} block",
                b.size, b.size
            )));
        };
        if alpha > 1 {
            self.push(TTransform::Ramify(alpha))?;
        }
        let mut full = vec![0; self.sys.dim()];
        for (i, ki) in k.iter().enumerate() {
            full[b.start + i] = *ki;
        }
        self.blocks[bi].level += gain;
        self.push(TTransform::Shearing(full))?;
        Ok(())
    }
}

struct Candidate {
    alpha: u32,
    k: Vec<u32>,
    gain: u32,
    split: bool,
}

fn distinct_eigenvalue_count<C: Coeff>(m: &Mat<C>) -> usize {
    let cp = m.charpoly();
    if !C::EXACT {
        let roots = poly::roots_c64(&cp.iter().map(|c| c.to_c64()).collect::<Vec<_>>());
        let gap = 1e6 * f64::EPSILON * m.scale_mag().max(1.0);
        let mut reps: Vec<num_complex::Complex64> = Vec::new();
        for z in roots {
            if reps.iter().all(|r| (r - z).norm() > gap) {
                reps.push(z);
            }
        }
        return reps.len();
    }
    let g = poly::gcd(&cp, &poly::derivative(&cp));
    let (sf, _) = poly::divrem(&cp, &g);
    poly::degree(&poly::trim(sf))
}

/// Searches ramification indices `α ≤ b!` and shearings `k` (with
/// `min k = 0`) for a transform of the block residual `R` (relative rank `r`)
/// that either lowers the normalized rank or makes the leading term split.
fn search_shearing<C: Coeff>(res: &MatSeries<C>, r: u32) -> Result<Option<Candidate>> {
    let b = res.dim();
    let fact: u32 = (1..=b as u32).product();
    let ords: Vec<Option<u32>> = (0..b * b).map(|e| res.entry(e / b, e % b).order()).collect();
    for alpha in 1..=fact {
        let rr = alpha * r;
        let kmax = b as u32 * (rr + 1);
        let mut best: Option<Candidate> = None;
        let mut k = vec![0u32; b];
        loop {
            if k.iter().any(|&v| v == 0) && k.iter().any(|&v| v > 0) {
                if let Some(gain) = shear_gain(&ords, &k, alpha, rr, b) {
                    let better = |c: &Candidate| gain > c.gain;
                    if gain >= 1 && best.as_ref().map_or(true, better) {
                        best = Some(Candidate { alpha, k: k.clone(), gain, split: false });
                    } else if gain == 0 && best.is_none() {
                        let lead = sheared_leading(res, &k, alpha, rr);
                        if distinct_eigenvalue_count(&lead) >= 2 {
                            best = Some(Candidate { alpha, k: k.clone(), gain, split: true });
                        }
                    }
                }
            }
            let mut i = 0;
            while i < b {
                if k[i] < kmax {
                    k[i] += 1;
                    break;
                }
                k[i] = 0;
                i += 1;
            }
            if i == b {
                break;
            }
        }
        if let Some(c) = best {
            debug_assert!(c.gain >= 1 || c.split);
            return Ok(Some(c));
        }
    }
    Ok(None)
}

/// Order of the sheared, ramified residual, or `None` when it has a pole.
fn shear_gain(ords: &[Option<u32>], k: &[u32], alpha: u32, rr: u32, b: usize) -> Option<u32> {
    let mut best = i64::MAX;
    for i in 0..b {
        for j in 0..b {
            let mut o = ords[i * b + j].map_or(i64::MAX, |o| (alpha * o) as i64 + k[j] as i64 - k[i] as i64);
            if i == j && k[i] > 0 {
                o = o.min(rr as i64);
            }
            best = best.min(o);
        }
    }
    (best >= 0 && best != i64::MAX).then_some(best as u32)
}

fn sheared_leading<C: Coeff>(res: &MatSeries<C>, k: &[u32], alpha: u32, rr: u32) -> Mat<C> {
    let b = res.dim();
    Mat::from_fn(b, b, |i, j| {
        let target = k[i] as i64 - k[j] as i64;
        let mut v = C::zero();
        if target >= 0 && target % alpha as i64 == 0 {
            v = res.entry(i, j).coeff((target / alpha as i64) as u32).scale_i64(alpha as i64);
        }
        if i == j && k[i] > 0 && rr == 0 {
            v = v.sub_ref(&C::from_i64(k[i] as i64));
        }
        v
    })
}

/// Reduces a system to principal form, returning the transforms whose replay
/// through [`apply_t`] gives the final system.
pub fn turrittin_reduce<C: Coeff>(sys: &LinearSystem<C>) -> Result<TurrittinOutcome<C>> {
    let start = poincare_rank(sys)?;
    let m = start.dim();
    let mut red = Reducer {
        n_in: sys.trunc(),
        sys: start,
        blocks: vec![Block { start: 0, size: m, level: 0, lead: Vec::new() }],
        transforms: Vec::new(),
        ramification: 1,
    };
    red.run()?;
    let form = rs_form(&red.sys)?;
    let shifts = red
        .blocks
        .iter()
        .map(|b| ScalarShift { start: b.start, size: b.size, poly: b.lead.clone() })
        .collect();
    Ok(TurrittinOutcome { transforms: red.transforms, system: red.sys, form, shifts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::GaussRat;

    type G = GaussRat;

    fn sys(rank: u32, n: u32, mats: &[&[&[i64]]]) -> LinearSystem<G> {
        let mats: Vec<Mat<G>> = mats.iter().map(|m| Mat::from_i64_rows(m)).collect();
        LinearSystem::new(rank, MatSeries::from_coeff_mats(n, &mats))
    }

    #[test]
    fn rank_normalization() {
        let s = poincare_rank(&sys(1, 4, &[&[&[0, 0], &[0, 0]], &[&[1, 0], &[0, 1]]])).unwrap();
        assert_eq!(s.rank, 0);
        assert_eq!(s.matrix.coeff(0), Mat::identity(2));
        let s = poincare_rank(&sys(1, 4, &[&[&[1, 0], &[0, 2]]])).unwrap();
        assert_eq!(s.rank, 1);
        let s = poincare_rank(&sys(2, 4, &[&[&[0, 0], &[0, 0]], &[&[0, 1], &[0, 0]], &[&[1, 2], &[3, 4]]])).unwrap();
        assert_eq!(s.rank, 1);
        assert_eq!(s.matrix.coeff(1), Mat::from_i64_rows(&[&[1, 2], &[3, 4]]));
        assert!(matches!(poincare_rank(&sys(1, 3, &[&[&[0]]])), Err(Error::Degenerate(_))));
    }

    #[test]
    fn transform_examples() {
        let d = sys(1, 4, &[&[&[1, 0], &[0, 2]]]);
        assert_eq!(apply_t(&d, &TTransform::Shearing(vec![0, 0])).unwrap(), d);
        let r = apply_t(&d, &TTransform::Ramify(2)).unwrap();
        assert_eq!(r.rank, 2);
        assert_eq!(r.matrix.coeff(0), Mat::from_i64_rows(&[&[2, 0], &[0, 4]]));
        let p = Mat::from_i64_rows(&[&[1, 1], &[0, 1]]);
        let c = apply_t(&d, &TTransform::PolyLinear(MatSeries::from_coeff_mats(0, &[p.clone()]))).unwrap();
        assert_eq!(c.matrix.coeff(0), p.inverse().unwrap().mul(&d.matrix.coeff(0)).mul(&p));
        assert!(matches!(
            apply_t(&d, &TTransform::PolyLinear(MatSeries::zero(2, 0))),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn split_examples() {
        let (_, sizes) = leading_split(&Mat::<G>::from_i64_rows(&[&[1, 0], &[0, 2]])).unwrap();
        assert_eq!(sizes, vec![1, 1]);
        let (_, sizes) = leading_split(&Mat::<G>::from_i64_rows(&[&[0, 1], &[0, 0]])).unwrap();
        assert_eq!(sizes, vec![2]);
        let a = Mat::<G>::from_i64_rows(&[&[1, 1], &[0, 2]]);
        let (p, _) = leading_split(&a).unwrap();
        assert_eq!(p.inverse().unwrap().mul(&a).mul(&p), Mat::from_i64_rows(&[&[1, 0], &[0, 2]]));
    }

    #[test]
    fn already_final_is_untouched() {
        let out = turrittin_reduce(&sys(1, 5, &[&[&[1, 0], &[0, 2]]])).unwrap();
        assert!(out.transforms.is_empty());
        assert_eq!(out.form.p, 1);
        assert_eq!(out.form.d[0].coeff(0), G::from_i64(1));
        assert_eq!(out.form.d[1].coeff(0), G::from_i64(2));
        assert!(out.form.c.is_zero());
    }

    #[test]
    fn upper_triangular_needs_one_conjugation() {
        let input = sys(1, 5, &[&[&[1, 1], &[0, 2]]]);
        let out = turrittin_reduce(&input).unwrap();
        assert_eq!(out.transforms.len(), 1);
        assert!(matches!(out.transforms[0], TTransform::PolyLinear(_)));
        assert_eq!(out.form.p, 1);
        assert_eq!(out.form.d_matrix().coeff(0), Mat::from_i64_rows(&[&[1, 0], &[0, 2]]));
        assert!(out.form.c.is_zero());
        assert_eq!(replay(&input, &out.transforms).unwrap(), out.system);
    }

    #[test]
    fn nilpotent_leading_term() {
        let input = sys(1, 8, &[&[&[0, 1], &[0, 0]], &[&[0, 0], &[1, 0]]]);
        let out = turrittin_reduce(&input).unwrap();
        assert!(out.transforms.iter().any(|t| matches!(t, TTransform::Ramify(2))));
        assert!(out.transforms.iter().any(|t| matches!(t, TTransform::Shearing(_))));
        let replayed = replay(&input, &out.transforms).unwrap();
        assert_eq!(replayed, out.system);
        rs_form(&replayed).unwrap();
    }

    #[test]
    fn regular_singular_input_is_final() {
        let out = turrittin_reduce(&sys(0, 3, &[&[&[0, 1], &[0, 0]]])).unwrap();
        assert!(out.transforms.is_empty());
        assert_eq!(out.form.p, 0);
        assert!(!out.form.c.is_zero());
    }
}
