//! Numerical construction of attracting parabolic curves for maps in
//! Ramis-Sibuya form.
//!
//! The map is brought to `x ∘ F = x − x^{k+p+1} + …`, the formal curve is
//! subtracted up to order `m + p − 1`, and the graph `y = u(x)` of the curve
//! is found on a sector as the fixed point of the orbit-sum operator
//! `Tu(x₀) = Σ_j E(x₀)E(x_j)⁻¹ H(x_j, u(x_j))`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::coeff::Coeff;
use crate::curves::CurveParam;
use crate::error::{Error, Result};
use crate::exp_log::{log_map, FormalMap};
use crate::jet::Jet;
use crate::linalg::Mat;
use crate::reduction::{diffeo_form, field_form, RsDiffeoData};
use crate::sector::{Direction, SectorSpec};
use crate::series::Series;
use crate::transforms::{transform_map, CoordChange, TransformStep};

type C64 = Complex64;
type CMat = DMatrix<C64>;

const OVERFLOW_GUARD: f64 = 50.0;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Offset of `arg x` from `tau`, in `(−π, π]`.
fn angle_offset(x: C64, tau: f64) -> f64 {
    let d = (x.arg() - tau).rem_euclid(2.0 * PI);
    if d > PI {
        d - 2.0 * PI
    } else {
        d
    }
}

/// One polynomial grouped by its monomial in `y`, Horner in `x`.
#[derive(Clone, Debug)]
struct PolyEval {
    groups: Vec<(Vec<u32>, Vec<C64>)>,
}

impl PolyEval {
    fn new(j: &Jet<C64>) -> Self {
        let n = j.nvars();
        let mut groups: Vec<(Vec<u32>, Vec<C64>)> = Vec::new();
        for (m, cf) in j.terms() {
            let e = m.exps(n);
            let ye = e[1..].to_vec();
            let xe = e[0] as usize;
            let slot = match groups.iter().position(|(g, _)| *g == ye) {
                Some(i) => i,
                None => {
                    groups.push((ye, Vec::new()));
                    groups.len() - 1
                }
            };
            let coeffs = &mut groups[slot].1;
            if coeffs.len() <= xe {
                coeffs.resize(xe + 1, C64::new(0.0, 0.0));
            }
            coeffs[xe] += *cf;
        }
        PolyEval { groups }
    }

    fn eval(&self, x: C64, ypows: &[Vec<C64>]) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (ye, xs) in &self.groups {
            let mut h = C64::new(0.0, 0.0);
            for cf in xs.iter().rev() {
                h = h * x + cf;
            }
            for (i, &e) in ye.iter().enumerate() {
                if e > 0 {
                    h *= ypows[i][e as usize];
                }
            }
            acc += h;
        }
        acc
    }
}

#[derive(Clone, Debug)]
struct MapEval {
    comps: Vec<PolyEval>,
    top: usize,
}

impl MapEval {
    fn new(f: &FormalMap<C64>) -> Self {
        MapEval { comps: f.components().iter().map(PolyEval::new).collect(), top: f.trunc() as usize }
    }

    fn apply(&self, x: C64, y: &[C64]) -> (C64, Vec<C64>) {
        let ypows: Vec<Vec<C64>> = y
            .iter()
            .map(|&v| {
                let mut p = Vec::with_capacity(self.top + 1);
                let mut acc = c(1.0);
                for _ in 0..=self.top {
                    p.push(acc);
                    acc *= v;
                }
                p
            })
            .collect();
        let x1 = self.comps[0].eval(x, &ypows);
        let rest = self.comps[1..].iter().map(|p| p.eval(x, &ypows)).collect();
        (x1, rest)
    }
}

/// Map and curve data in coordinates where `λ = −1`, the pure-`x` terms of
/// `x ∘ F` of degrees `k+p+2 ..= k+2p+1` vanish, and `y_m = y − J_{m+p−1}γ̄`.
#[derive(Clone, Debug)]
pub struct NormalizedRs {
    pub k: u32,
    pub p: u32,
    pub m: u32,
    pub m0: u32,
    /// `x_rs = α x`.
    pub alpha: C64,
    /// Conjugations `x = x̃ + c x̃^{j+1}` as `(j, c)`, in the order applied.
    pub x_changes: Vec<(u32, C64)>,
    /// `J_{m+p−1}γ̄`, subtracted from `y`.
    pub recenter: Vec<Series<C64>>,
    /// The map in `(x, y_m)`.
    pub map: FormalMap<C64>,
    /// `γ̄` after the `x`-normalizations, before recentering.
    pub curve: Vec<Series<C64>>,
    /// Shape data of the `x`-normalized map.
    pub data: RsDiffeoData<C64>,
    /// Diagonal of the generator's `𝒟`.
    pub dcal: Vec<Series<C64>>,
    /// The generator's `𝒞`.
    pub ccal: Mat<C64>,
    /// Smallest real part in the spectrum of `𝒞`.
    pub sigma: f64,
    /// Radius within which the jets are evaluated.
    pub trust: f64,
    eval: MapEval,
    r_coeffs: Vec<Vec<(i32, C64)>>,
    c_mat: CMat,
    c_diag: Option<Vec<C64>>,
}

fn scale_x_map(f: &FormalMap<C64>, alpha: C64) -> Result<FormalMap<C64>> {
    let n = f.nvars();
    let t = f.trunc();
    let mut args: Vec<Jet<C64>> = (0..n).map(|i| Jet::var(n, t, i)).collect();
    args[0] = args[0].scale(&alpha);
    let mut comps = Vec::with_capacity(n);
    for (i, g) in f.components().iter().enumerate() {
        let h = g.compose(&args)?;
        comps.push(if i == 0 { h.scale(&(c(1.0) / alpha)) } else { h });
    }
    FormalMap::new(comps)
}

/// `h⁻¹ ∘ F ∘ h` for `h(x, y) = (x + c x^{j+1}, y)`.
fn conjugate_x(f: &FormalMap<C64>, j: u32, cf: C64) -> Result<FormalMap<C64>> {
    let n = f.nvars();
    let t = f.trunc();
    let mut hs = Series::monomial(t, 1, c(1.0));
    hs.set(j + 1, cf);
    let hinv = hs.compositional_inverse()?;
    let mut args: Vec<Jet<C64>> = (0..n).map(|i| Jet::var(n, t, i)).collect();
    args[0] = hs.to_jet_in(n, 0, t);
    let g: Vec<Jet<C64>> = f.components().iter().map(|g| g.compose(&args)).collect::<Result<_>>()?;
    let mut comps = g.clone();
    comps[0] = hinv.to_jet_in(n, 0, t).compose(&g)?;
    FormalMap::new(comps)
}

fn min_real_eigen(cc: &Mat<C64>) -> f64 {
    let n = cc.rows();
    if n == 0 {
        return 0.0;
    }
    let m = CMat::from_fn(n, n, |i, j| *cc.get(i, j));
    m.schur().eigenvalues().map(|v| v.iter().map(|z| z.re).fold(f64::INFINITY, f64::min)).unwrap_or(0.0)
}

fn trust_radius(f: &FormalMap<C64>) -> f64 {
    let mut r = 1.0f64;
    for g in f.components() {
        for (m, cf) in g.terms() {
            let d = m.degree();
            if d >= 2 && cf.norm() > 1.0 {
                r = r.min(cf.norm().powf(-1.0 / d as f64));
            }
        }
    }
    0.5 * r
}

/// Normalizes a map in Ramis-Sibuya form along the graph of `curve`.
pub fn normalize_rs<C: Coeff>(f: &FormalMap<C>, curve: &CurveParam<C>, m: u32) -> Result<NormalizedRs> {
    normalize_with(f, curve, &|m0| {
        if m < m0 {
            Err(Error::Precondition(format!("contact parameter m = {m} is below m₀ = {m0}")))
        } else {
            Ok(m)
        }
    })
}

/// As [`normalize_rs`] with `m = max(preferred, m₀)`.
pub fn normalize_rs_at_least<C: Coeff>(f: &FormalMap<C>, curve: &CurveParam<C>, preferred: u32) -> Result<NormalizedRs> {
    normalize_with(f, curve, &|m0| Ok(preferred.max(m0)))
}

fn normalize_with<C: Coeff>(f: &FormalMap<C>, curve: &CurveParam<C>, choose: &dyn Fn(u32) -> Result<u32>) -> Result<NormalizedRs> {
    if !curve.is_graph() {
        return Err(Error::Precondition("the curve must be a graph over x".into()));
    }
    let ff = f.to_float();
    let mut g: Vec<Series<C64>> = curve.to_float().graph_part();
    let d0 = diffeo_form(&ff)?;
    let (k, p) = (d0.k, d0.p);
    let kp = (k + p) as f64;
    let alpha = (c(-1.0) / d0.lambda).powf(1.0 / kp);
    let mut map = scale_x_map(&ff, alpha)?;
    for s in g.iter_mut() {
        let coeffs: Vec<C64> = s.coeffs().iter().enumerate().map(|(i, v)| v * alpha.powu(i as u32)).collect();
        *s = Series::from_coeffs(s.trunc(), coeffs);
    }
    let mut x_changes = Vec::new();
    let n = map.nvars();
    for j in 1..=p {
        let deg = k + p + 1 + j;
        if deg > map.trunc() {
            break;
        }
        let mut e = vec![0u32; n];
        e[0] = deg;
        let a = map.component(0).coeff_of(&e);
        if a.norm() <= 1e-14 {
            continue;
        }
        let cf = a / c((k + p - j) as f64);
        map = conjugate_x(&map, j, cf)?;
        let mut hs = Series::monomial(g.first().map(|s| s.trunc()).unwrap_or(map.trunc()), 1, c(1.0));
        hs.set(j + 1, cf);
        g = g.iter().map(|s| s.compose(&hs)).collect::<Result<_>>()?;
        x_changes.push((j, cf));
    }
    let data = diffeo_form(&map)?;
    if (data.k, data.p) != (k, p) || (data.lambda + c(1.0)).norm() > 1e-9 {
        return Err(Error::Degenerate("x-normalization changed the principal shape".into()));
    }
    let gen = field_form(&log_map(&map)?)?;
    if (gen.k, gen.p) != (k, p) {
        return Err(Error::Degenerate("generator shape differs from the map shape".into()));
    }
    let sigma = min_real_eigen(&gen.cc);
    let m0 = (p + 2).max((p as f64 + 2.0 - sigma).ceil().max(0.0) as u32);
    let m = choose(m0)?;
    let cut = m + p - 1;
    if g.iter().any(|s| s.trunc() < cut + 1) {
        return Err(Error::Budget { context: "curve for recentering".into(), have: g[0].trunc(), needed: cut + 1 });
    }
    let recenter: Vec<Series<C64>> = g.iter().map(|s| s.truncate(cut)).collect();
    let centered = transform_map(&map, &TransformStep::coord(CoordChange::Translate(recenter.clone())))?;
    let r_coeffs = gen
        .d
        .iter()
        .map(|s| (0..p).map(|i| (-((p - i) as i32), s.coeff(i) / c((p - i) as f64))).collect())
        .collect();
    let dim = n - 1;
    let c_mat = CMat::from_fn(dim, dim, |i, j| *gen.cc.get(i, j));
    let c_diag = gen.cc.is_diagonal().then(|| (0..dim).map(|i| *gen.cc.get(i, i)).collect());
    Ok(NormalizedRs {
        k,
        p,
        m,
        m0,
        alpha,
        x_changes,
        recenter,
        trust: trust_radius(&centered),
        eval: MapEval::new(&centered),
        map: centered,
        curve: g,
        data,
        dcal: gen.d,
        ccal: gen.cc,
        sigma,
        r_coeffs,
        c_mat,
        c_diag,
    })
}

impl NormalizedRs {
    pub fn dim(&self) -> usize {
        self.map.nvars() - 1
    }

    /// `k + p`.
    pub fn order(&self) -> u32 {
        self.k + self.p
    }

    /// Direction in normalized coordinates for a direction in the input ones.
    pub fn direction_from_input(&self, theta: f64) -> Direction {
        Direction::new(theta - self.alpha.arg())
    }

    /// `(x ∘ F, ȳ ∘ F)` evaluated on the truncated jets.
    pub fn apply(&self, x: C64, y: &[C64]) -> (C64, Vec<C64>) {
        self.eval.apply(x, y)
    }

    /// Point in the input coordinates of [`normalize_rs`].
    pub fn to_input(&self, x: C64, y: &[C64]) -> Vec<C64> {
        let mut out = Vec::with_capacity(y.len() + 1);
        let mut xs = x;
        for (j, cf) in self.x_changes.iter().rev() {
            xs += cf * xs.powu(j + 1);
        }
        out.push(self.alpha * xs);
        for (yi, q) in y.iter().zip(&self.recenter) {
            out.push(yi + q.eval_c64(x));
        }
        out
    }

    fn r_diff(&self, x_from: C64, x_to: C64) -> Vec<C64> {
        self.r_coeffs
            .iter()
            .map(|terms| terms.iter().map(|&(e, cf)| cf * (x_from.powi(e) - x_to.powi(e))).sum())
            .collect()
    }

    /// `E(x_from) E(x_to)⁻¹ = exp(R(x_from) − R(x_to)) (x_to/x_from)^𝒞`.
    pub fn e_ratio(&self, x_from: C64, x_to: C64) -> Result<CMat> {
        let dim = self.dim();
        let ex = self.r_diff(x_from, x_to);
        let mut worst = f64::NEG_INFINITY;
        for z in ex.iter() {
            worst = worst.max(z.re);
        }
        if worst > OVERFLOW_GUARD {
            return Err(Error::OrbitOrdering(worst));
        }
        let l = (x_to / x_from).ln();
        let mut out = match &self.c_diag {
            Some(d) => CMat::from_diagonal(&nalgebra::DVector::from_iterator(dim, d.iter().map(|v| (v * l).exp()))),
            None => (&self.c_mat * l).exp(),
        };
        for (i, z) in ex.iter().enumerate() {
            let s = z.exp();
            for j in 0..dim {
                out[(i, j)] *= s;
            }
        }
        Ok(out)
    }

    /// One step: `(f(x, y), F̄(x, y), E(x)E(f)⁻¹, H(x, y))`.
    fn step(&self, x: C64, y: &[C64]) -> Result<(C64, Vec<C64>, CMat, Vec<C64>)> {
        let (x1, fbar) = self.apply(x, y);
        let q = self.e_ratio(x, x1)?;
        let qf = &q * nalgebra::DVector::from_column_slice(&fbar);
        let h = y.iter().zip(qf.iter()).map(|(a, b)| a - b).collect();
        Ok((x1, fbar, q, h))
    }

    /// `H(x, y) = y − E(x)E(f(x, y))⁻¹ F̄(x, y)`.
    pub fn h_eval(&self, x: C64, y: &[C64]) -> Result<Vec<C64>> {
        let r = x.norm();
        if r == 0.0 || r > self.trust {
            return Err(Error::Precondition(format!("|x| = {r:.3e} is outside the trusted radius {:.3e}", self.trust)));
        }
        if norm(y) > 2.0 * r.powi(self.m as i32 - 1) {
            return Err(Error::Precondition("‖y‖ exceeds 2|x|^(m−1)".into()));
        }
        Ok(self.step(x, y)?.3)
    }

    /// `(k+p)·j·x_j^{k+p}`, which tends to 1 along orbits.
    pub fn orbit_law(&self, x_j: C64, j: usize) -> C64 {
        x_j.powu(self.order()) * (self.order() as f64 * j as f64)
    }
}

/// Values of `u` on a polar grid inside a sector, interpolated bilinearly
/// in `(log r, θ)` after division by `x^weight`.
#[derive(Clone, Debug)]
pub struct SectorGrid {
    pub sector: SectorSpec,
    /// Decreasing geometric ladder.
    pub radii: Vec<f64>,
    /// Increasing uniform fan.
    pub angles: Vec<f64>,
    pub weight: u32,
    /// Node `(i, j)` is stored at `i * angles.len() + j`.
    pub values: Vec<Vec<C64>>,
    scaled: Vec<Vec<C64>>,
}

impl SectorGrid {
    pub fn new(sector: SectorSpec, nr: usize, na: usize, ratio: f64, weight: u32, dim: usize) -> Result<Self> {
        if nr < 2 || na < 2 || !(0.0 < ratio && ratio < 1.0) {
            return Err(Error::Precondition("grid needs two radii, two angles and a ratio in (0, 1)".into()));
        }
        let r0 = sector.radius * 0.999;
        let radii = (0..nr).map(|i| r0 * ratio.powi(i as i32)).collect();
        let half = 0.45 * sector.opening;
        let angles = (0..na).map(|j| sector.tau.angle - half + 2.0 * half * j as f64 / (na - 1) as f64).collect();
        let zero = vec![vec![C64::new(0.0, 0.0); dim]; nr * na];
        Ok(SectorGrid { sector, radii, angles, weight, values: zero.clone(), scaled: zero })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn node(&self, idx: usize) -> C64 {
        let na = self.angles.len();
        C64::from_polar(self.radii[idx / na], self.angles[idx % na])
    }

    pub fn nodes(&self) -> Vec<C64> {
        (0..self.len()).map(|i| self.node(i)).collect()
    }

    pub fn with_values(&self, values: Vec<Vec<C64>>) -> Self {
        let scaled = values.iter().enumerate().map(|(i, v)| self.scale_at(i, v)).collect();
        SectorGrid { values, scaled, ..self.clone() }
    }

    fn scale_at(&self, idx: usize, v: &[C64]) -> Vec<C64> {
        let s = self.node(idx).powu(self.weight);
        v.iter().map(|z| z / s).collect()
    }

    /// `u(x)`; outside the node range the scaled values are held constant.
    pub fn interpolate(&self, x: C64) -> Vec<C64> {
        let nr = self.radii.len();
        let na = self.angles.len();
        let lr = (self.radii[0] / x.norm()).ln() / (self.radii[0] / self.radii[1]).ln();
        let t = lr.clamp(0.0, (nr - 1) as f64);
        let i0 = (t.floor() as usize).min(nr - 2);
        let ft = t - i0 as f64;
        let th = self.sector.tau.angle + angle_offset(x, self.sector.tau.angle);
        let dth = self.angles[1] - self.angles[0];
        let s = ((th - self.angles[0]) / dth).clamp(0.0, (na - 1) as f64);
        let j0 = (s.floor() as usize).min(na - 2);
        let fs = s - j0 as f64;
        let w = [
            ((1.0 - ft) * (1.0 - fs), i0 * na + j0),
            ((1.0 - ft) * fs, i0 * na + j0 + 1),
            (ft * (1.0 - fs), (i0 + 1) * na + j0),
            (ft * fs, (i0 + 1) * na + j0 + 1),
        ];
        let dim = self.scaled[0].len();
        let xs = x.powu(self.weight);
        (0..dim).map(|d| w.iter().map(|&(a, idx)| self.scaled[idx][d] * a).sum::<C64>() * xs).collect()
    }

    /// `sup ‖u(x)‖ / |x|^e` over the nodes.
    pub fn weighted_norm(&self, e: i32) -> f64 {
        (0..self.len()).map(|i| norm(&self.values[i]) / self.node(i).norm().powi(e)).fold(0.0, f64::max)
    }

    /// Largest ratio `‖u′‖ / |x|^e` over radial finite differences.
    pub fn derivative_ratio(&self, e: i32) -> f64 {
        let na = self.angles.len();
        let mut worst = 0.0f64;
        for i in 0..self.radii.len() - 1 {
            for j in 0..na {
                let (a, b) = (i * na + j, (i + 1) * na + j);
                let dx = (self.node(a) - self.node(b)).norm();
                let du: Vec<C64> = self.values[a].iter().zip(&self.values[b]).map(|(p, q)| p - q).collect();
                worst = worst.max(norm(&du) / dx / self.node(a).norm().powi(e));
            }
        }
        worst
    }

    pub fn distance(&self, o: &SectorGrid) -> f64 {
        self.values
            .iter()
            .zip(&o.values)
            .map(|(a, b)| norm(&a.iter().zip(b).map(|(p, q)| p - q).collect::<Vec<_>>()))
            .fold(0.0, f64::max)
    }

    /// `sup ‖u − v‖ / |x|^e`.
    pub fn weighted_distance(&self, o: &SectorGrid, e: i32) -> f64 {
        (0..self.len())
            .map(|i| {
                let d: Vec<C64> = self.values[i].iter().zip(&o.values[i]).map(|(p, q)| p - q).collect();
                norm(&d) / self.node(i).norm().powi(e)
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OrbitStop {
    RadiusFloor,
    IterationCap,
}

#[derive(Clone, Copy, Debug)]
pub struct OrbitCaps {
    pub max_steps: usize,
    pub floor: f64,
}

#[derive(Clone, Debug)]
pub struct OrbitTrace {
    pub x0: C64,
    /// `x_0, x_1, …` with `x_{j+1} = f(x_j, u(x_j))`.
    pub points: Vec<C64>,
    pub stop: OrbitStop,
}

/// Iterates `f_u(x) = f(x, u(x))`, checking that the orbit stays in the sector.
pub fn orbit(nr: &NormalizedRs, u: &SectorGrid, x0: C64, caps: OrbitCaps) -> Result<OrbitTrace> {
    if !u.sector.contains(x0) {
        return Err(Error::Precondition("orbit seed is outside the sector".into()));
    }
    let mut points = vec![x0];
    let mut x = x0;
    for step in 1..=caps.max_steps {
        let y = u.interpolate(x);
        let (x1, _) = nr.apply(x, &y);
        if !u.sector.contains(x1) {
            return Err(Error::SectorExit { step, radius: x1.norm() });
        }
        points.push(x1);
        x = x1;
        if x.norm() < caps.floor {
            return Ok(OrbitTrace { x0, points, stop: OrbitStop::RadiusFloor });
        }
    }
    Ok(OrbitTrace { x0, points, stop: OrbitStop::IterationCap })
}

#[derive(Clone, Copy, Debug)]
pub struct SumOptions {
    /// Relative size below which ten consecutive summands end the sum.
    pub tail_tol: f64,
    pub max_steps: usize,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SumStats {
    pub max_steps: usize,
    /// Largest estimated remainder of a truncated sum.
    pub tail_bound: f64,
}

fn t_at(nr: &NormalizedRs, u: &SectorGrid, x0: C64, opts: SumOptions) -> Result<(Vec<C64>, usize, f64)> {
    let dim = nr.dim();
    let mut g = CMat::identity(dim, dim);
    let mut sum = vec![C64::new(0.0, 0.0); dim];
    let mut x = x0;
    let mut quiet = 0;
    let mut prev = f64::INFINITY;
    for j in 0..opts.max_steps {
        let y = u.interpolate(x);
        let (x1, _, q, h) = nr.step(x, &y)?;
        if !u.sector.contains(x1) {
            return Err(Error::SectorExit { step: j + 1, radius: x1.norm() });
        }
        let term = &g * nalgebra::DVector::from_column_slice(&h);
        for (s, t) in sum.iter_mut().zip(term.iter()) {
            *s += t;
        }
        let tn = term.norm();
        let sn = norm(&sum);
        if tn <= opts.tail_tol * sn || tn == 0.0 {
            quiet += 1;
        } else {
            quiet = 0;
        }
        if quiet >= 10 {
            let ratio = if prev > 0.0 && tn < prev { tn / prev } else { 1.0 };
            let tail = if ratio < 1.0 { tn * ratio / (1.0 - ratio) } else { tn * (j + 1) as f64 };
            return Ok((sum, j + 1, tail));
        }
        prev = tn;
        g = &g * &q;
        x = x1;
    }
    Err(Error::Tail { steps: opts.max_steps })
}

/// One application of the orbit-sum operator at every node.
pub fn apply_t(nr: &NormalizedRs, u: &SectorGrid, opts: SumOptions) -> Result<(SectorGrid, SumStats)> {
    let res: Vec<Result<(Vec<C64>, usize, f64)>> = (0..u.len()).into_par_iter().map(|i| t_at(nr, u, u.node(i), opts)).collect();
    let mut values = Vec::with_capacity(u.len());
    let mut stats = SumStats::default();
    for r in res {
        let (v, steps, tail) = r?;
        stats.max_steps = stats.max_steps.max(steps);
        stats.tail_bound = stats.tail_bound.max(tail);
        values.push(v);
    }
    Ok((u.with_values(values), stats))
}

/// `sup ‖u(f(x, u(x))) − F̄(x, u(x))‖` over the nodes, and the same defect
/// divided by `|x|^k`.
pub fn invariance_residual(nr: &NormalizedRs, u: &SectorGrid) -> (f64, f64) {
    let mut raw = 0.0f64;
    let mut scaled = 0.0f64;
    for i in 0..u.len() {
        let x = u.node(i);
        let (x1, fbar) = nr.apply(x, &u.values[i]);
        let d: Vec<C64> = u.interpolate(x1).iter().zip(&fbar).map(|(a, b)| a - b).collect();
        let e = norm(&d);
        raw = raw.max(e);
        scaled = scaled.max(e / x.norm().powi(nr.k as i32));
    }
    (raw, scaled)
}

#[derive(Clone, Copy, Debug)]
pub struct ConstructOptions {
    /// Picard stopping threshold on the sup-norm change.
    pub tol: f64,
    pub radial_nodes: usize,
    pub angular_nodes: usize,
    pub ratio: f64,
    pub max_iter: usize,
    pub max_halvings: u32,
    pub max_steps: usize,
}

impl Default for ConstructOptions {
    fn default() -> Self {
        ConstructOptions {
            tol: 1e-12,
            radial_nodes: 16,
            angular_nodes: 7,
            ratio: 0.85,
            max_iter: 40,
            max_halvings: 8,
            max_steps: 200_000,
        }
    }
}

impl ConstructOptions {
    pub fn sum_options(&self) -> SumOptions {
        SumOptions { tail_tol: self.tol / 100.0, max_steps: self.max_steps }
    }
}

/// One rung of the radius ladder.
#[derive(Clone, Debug)]
pub struct Attempt {
    pub delta: f64,
    pub outcome: String,
}

#[derive(Clone, Debug)]
pub struct ParabolicCurveNumeric {
    pub grid: SectorGrid,
    pub residual_sup: f64,
    /// Invariance defect divided by `|x|^k`.
    pub scaled_residual_sup: f64,
    pub m: u32,
    pub delta: f64,
    pub eta: f64,
    pub tau: f64,
    pub iterations: usize,
    /// Successive Picard change ratios.
    pub contraction: Vec<f64>,
    /// `sup ‖u‖/|x|^{m−1}`.
    pub ball_ratio: f64,
    /// `sup ‖u′‖/|x|^{m−p−2}` from finite differences.
    pub derivative_ratio: f64,
    pub stats: SumStats,
    pub attempts: Vec<Attempt>,
}

/// Empty grid on `S(τ, η, δ)` with the node layout of `opts`.
pub fn grid_for(nr: &NormalizedRs, tau: f64, eta: f64, delta: f64, opts: &ConstructOptions) -> Result<SectorGrid> {
    let sector = SectorSpec::new(Direction::new(tau), eta, delta)?;
    SectorGrid::new(sector, opts.radial_nodes, opts.angular_nodes, opts.ratio, nr.m + nr.p, nr.dim())
}

/// Picard iteration of [`apply_t`] from a given grid, without radius changes.
pub fn iterate_from(nr: &NormalizedRs, seed: SectorGrid, opts: &ConstructOptions) -> Result<ParabolicCurveNumeric> {
    let (tau, eta, delta) = (seed.sector.tau.angle, seed.sector.opening, seed.sector.radius);
    let mut u = seed;
    let mut ratios = Vec::new();
    let mut last = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let (next, st) = apply_t(nr, &u, opts.sum_options())?;
        let d = next.distance(&u);
        u = next;
        if last.is_finite() && last > 0.0 {
            ratios.push(d / last);
        }
        if d < opts.tol {
            let (residual_sup, scaled_residual_sup) = invariance_residual(nr, &u);
            return Ok(ParabolicCurveNumeric {
                ball_ratio: u.weighted_norm(nr.m as i32 - 1),
                derivative_ratio: u.derivative_ratio(nr.m as i32 - nr.p as i32 - 2),
                grid: u,
                residual_sup,
                scaled_residual_sup,
                m: nr.m,
                delta,
                eta,
                tau,
                iterations: it,
                contraction: ratios,
                stats: st,
                attempts: Vec::new(),
            });
        }
        if it >= 3 && d >= last {
            return Err(Error::ConstructionFailed(format!("Picard change {d:.3e} did not contract")));
        }
        last = d;
    }
    Err(Error::ConstructionFailed(format!("no convergence in {} iterations", opts.max_iter)))
}

/// Picard iteration of [`apply_t`] from `u = 0`, halving the radius on
/// numerical failure.
pub fn construct(nr: &NormalizedRs, tau: f64, eta: f64, delta: f64, opts: &ConstructOptions) -> Result<ParabolicCurveNumeric> {
    let kp = nr.order() as f64;
    if !(eta > 0.0 && eta < 2.0 * PI / kp) {
        return Err(Error::Precondition(format!("opening {eta} must lie in (0, 2π/(k+p))")));
    }
    let mut d = delta.min(nr.trust);
    let mut attempts = Vec::new();
    for _ in 0..=opts.max_halvings {
        match grid_for(nr, tau, eta, d, opts).and_then(|g| iterate_from(nr, g, opts)) {
            Ok(mut pc) => {
                attempts.push(Attempt { delta: d, outcome: "converged".into() });
                pc.attempts = attempts;
                return Ok(pc);
            }
            Err(e) if e.class() == crate::error::ErrorClass::Construction => {
                attempts.push(Attempt { delta: d, outcome: e.to_string() });
                d /= 2.0;
            }
            Err(e) => return Err(e),
        }
    }
    let log: Vec<String> = attempts.iter().map(|a| format!("δ = {:.3e}: {}", a.delta, a.outcome)).collect();
    Err(Error::ConstructionFailed(log.join("; ")))
}

/// Measured Lipschitz factor `n(Tu − Tv) / n(u − v)` in the weighted norm.
pub fn lipschitz_factor(nr: &NormalizedRs, u: &SectorGrid, v: &SectorGrid, opts: SumOptions) -> Result<f64> {
    let e = nr.m as i32 - 1;
    let (tu, _) = apply_t(nr, u, opts)?;
    let (tv, _) = apply_t(nr, v, opts)?;
    Ok(tu.weighted_distance(&tv, e) / u.weighted_distance(v, e))
}

#[derive(Clone, Debug)]
pub struct SlopeEntry {
    pub order: u32,
    /// Smallest fitted slope over the rays of the fan.
    pub slope: f64,
    /// Largest observed `‖error‖ / |x|^{order+1}`.
    pub constant: f64,
    pub passed: bool,
}

#[derive(Clone, Debug)]
pub struct AsymptoticReport {
    pub entries: Vec<SlopeEntry>,
    pub passed: bool,
}

fn fit_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Compares `u + J_{m+p−1}γ̄` with `J_{N′}` of `gammabar` for `N′ ≤ n` on the
/// inner half of the radial ladder.
pub fn verify_asymptotic(pc: &ParabolicCurveNumeric, nr: &NormalizedRs, gammabar: &[Series<C64>], n: u32) -> AsymptoticReport {
    let grid = &pc.grid;
    let nrad = grid.radii.len();
    let na = grid.angles.len();
    let mut entries = Vec::new();
    for order in 0..=n {
        let jets: Vec<Series<C64>> = gammabar.iter().map(|s| s.truncate(order.min(s.trunc()))).collect();
        let mut slope = f64::INFINITY;
        let mut constant = 0.0f64;
        for j in 0..na {
            let mut pts = Vec::new();
            for i in nrad / 2..nrad {
                let idx = i * na + j;
                let x = grid.node(idx);
                let e: Vec<C64> = (0..jets.len())
                    .map(|d| grid.values[idx][d] + nr.recenter[d].eval_c64(x) - jets[d].eval_c64(x))
                    .collect();
                let en = norm(&e);
                constant = constant.max(en / x.norm().powi(order as i32 + 1));
                if en > 0.0 {
                    pts.push((x.norm().ln(), en.ln()));
                }
            }
            if pts.len() >= 2 {
                slope = slope.min(fit_slope(&pts));
            }
        }
        let passed = slope >= order as f64 + 0.5;
        entries.push(SlopeEntry { order, slope, constant, passed });
    }
    let passed = entries.iter().all(|e| e.passed);
    AsymptoticReport { entries, passed }
}

#[derive(Clone, Debug)]
pub struct StabilityReport {
    pub seeds: usize,
    /// Largest `‖ȳ∘F(x, u(x)) − u(f(x, u(x)))‖` seen along the orbits.
    pub max_deviation: f64,
    pub threshold: f64,
    /// Largest `|(k+p)·J·x_J^{k+p} − 1|` at the final step.
    pub worst_law: f64,
    /// Seeds whose orbit left the sector.
    pub exits: Vec<usize>,
    pub passed: bool,
}

/// Iterates the full map through the graph from seeds spread over the sector.
pub fn verify_stability(pc: &ParabolicCurveNumeric, nr: &NormalizedRs, per_side: usize) -> StabilityReport {
    let grid = &pc.grid;
    let kp = nr.order();
    let mut seeds = Vec::new();
    for a in 0..per_side {
        for b in 0..per_side {
            let fr = if per_side > 1 { a as f64 / (per_side - 1) as f64 } else { 0.5 };
            let fa = if per_side > 1 { b as f64 / (per_side - 1) as f64 } else { 0.5 };
            let r = pc.delta * (0.5 + 0.4 * fr);
            let th = pc.tau + pc.eta * 0.35 * (2.0 * fa - 1.0);
            seeds.push(C64::from_polar(r, th));
        }
    }
    let results: Vec<(f64, f64, bool)> = seeds
        .par_iter()
        .map(|&x0| {
            let steps = 1000usize.max((25.0 / (kp as f64 * x0.norm().powi(kp as i32))).ceil() as usize);
            let mut x = x0;
            let mut dev = 0.0f64;
            for _ in 0..steps {
                let y = grid.interpolate(x);
                let (x1, y1) = nr.apply(x, &y);
                if !grid.sector.contains(x1) {
                    return (dev, f64::INFINITY, false);
                }
                let d: Vec<C64> = y1.iter().zip(grid.interpolate(x1)).map(|(a, b)| a - b).collect();
                dev = dev.max(norm(&d));
                x = x1;
            }
            (dev, (nr.orbit_law(x, steps) - c(1.0)).norm(), true)
        })
        .collect();
    let threshold = 10.0 * pc.residual_sup;
    let max_deviation = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let worst_law = results.iter().filter(|r| r.2).map(|r| r.1).fold(0.0, f64::max);
    let exits: Vec<usize> = results.iter().enumerate().filter(|(_, r)| !r.2).map(|(i, _)| i).collect();
    let passed = exits.is_empty() && max_deviation <= threshold && worst_law <= 0.05;
    StabilityReport { seeds: seeds.len(), max_deviation, threshold, worst_law, exits, passed }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::GaussRat;
    use crate::exp_log::{exp_field, inverse_map, FormalField};
    use crate::reduction::reduce_diffeo;

    fn g(n: i64) -> GaussRat {
        GaussRat::from_i64(n)
    }

    fn field2(t: u32, a: &[(u32, u32, i64)], b: &[(u32, u32, i64)]) -> FormalField<GaussRat> {
        let mk = |ts: &[(u32, u32, i64)]| Jet::from_exps(2, t, ts.iter().map(|&(i, j, v)| (vec![i, j], g(v))).collect());
        FormalField::new(vec![mk(a), mk(b)]).unwrap()
    }

    fn euler_curve(t: u32) -> CurveParam<GaussRat> {
        let mut s = Series::zero(t);
        let mut f = 1i64;
        for k in 1..=t {
            s.set(k, g(f));
            f *= k as i64;
        }
        CurveParam::graph(vec![s]).unwrap()
    }

    fn euler_inverse(t: u32) -> NormalizedRs {
        let x = field2(t, &[(3, 0, 1)], &[(1, 1, 1), (2, 0, -1)]);
        let f = inverse_map(&exp_field(&x).unwrap()).unwrap();
        let red = reduce_diffeo(&f, &euler_curve(t)).unwrap();
        normalize_rs(&red.map, &red.field.curve, 6).unwrap()
    }

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn euler_inverse_normalization() {
        let nr = euler_inverse(12);
        assert_eq!((nr.k, nr.p, nr.m0), (1, 1, 3));
        assert!(close(nr.alpha, c(1.0), 1e-14));
        assert!(close(nr.dcal[0].coeff(0), c(-1.0), 1e-12));
        assert!(nr.ccal.get(0, 0).norm() < 1e-12);
        assert!(close(nr.recenter[0].coeff(5), c(24.0), 1e-9));
        assert_eq!(nr.recenter[0].trunc(), 6);
        assert!(close(nr.map.component(0).coeff_of(&[3, 0]), c(-1.0), 1e-12));
        assert!(nr.map.component(0).coeff_of(&[4, 0]).norm() < 1e-12);
    }

    #[test]
    fn low_contact_is_refused() {
        let x = field2(12, &[(3, 0, 1)], &[(1, 1, 1), (2, 0, -1)]);
        let f = inverse_map(&exp_field(&x).unwrap()).unwrap();
        let red = reduce_diffeo(&f, &euler_curve(12)).unwrap();
        assert!(matches!(normalize_rs(&red.map, &red.field.curve, 2), Err(Error::Precondition(_))));
    }

    #[test]
    fn scaling_makes_lambda_minus_one() {
        // x∘F = x + 2x³, y∘F = y + x y: λ = 2, k = p = 1.
        let t = 10;
        let f = FormalMap::new(vec![
            Jet::from_exps(2, t, vec![(vec![1, 0], g(1)), (vec![3, 0], g(2))]),
            Jet::from_exps(2, t, vec![(vec![0, 1], g(1)), (vec![1, 1], g(1))]),
        ])
        .unwrap();
        let curve = CurveParam::graph(vec![Series::zero(t)]).unwrap();
        let nr = normalize_rs(&f, &curve, 4).unwrap();
        assert!(close(nr.alpha.powu(2) * c(2.0), c(-1.0), 1e-14));
        assert!(close(nr.data.lambda, c(-1.0), 1e-12));
    }

    #[test]
    fn x_terms_in_the_killable_range_vanish() {
        // λ = −1, k = 1, p = 2: degrees 5 and 6 of x∘F are removed.
        let t = 12;
        let f = FormalMap::new(vec![
            Jet::from_exps(2, t, vec![(vec![1, 0], g(1)), (vec![4, 0], g(-1)), (vec![5, 0], g(3)), (vec![6, 0], g(-2))]),
            Jet::from_exps(2, t, vec![(vec![0, 1], g(1)), (vec![1, 1], g(1))]),
        ])
        .unwrap();
        let curve = CurveParam::graph(vec![Series::zero(t)]).unwrap();
        let nr = normalize_rs(&f, &curve, 6).unwrap();
        assert_eq!(nr.x_changes.len(), 2);
        for d in 5..=6 {
            assert!(nr.map.component(0).coeff_of(&[d, 0]).norm() < 1e-12, "degree {d}");
        }
        assert!(close(nr.map.component(0).coeff_of(&[4, 0]), c(-1.0), 1e-12));
    }

    #[test]
    fn e_ratio_examples() {
        let nr = euler_inverse(12);
        let x = C64::from_polar(0.03, 3.0);
        assert!((nr.e_ratio(x, x).unwrap() - CMat::identity(1, 1)).norm() < 1e-15);
        let (a, b) = (c(-0.04), c(-0.03));
        let r = nr.e_ratio(a, b).unwrap()[(0, 0)];
        assert!(close(r, (c(-1.0) / a + c(1.0) / b).exp(), 1e-15));
        assert!(r.norm() <= 1.0);
        // Quadrature of −𝒟/x² along the segment.
        let steps = 2000;
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..steps {
            let s = (i as f64 + 0.5) / steps as f64;
            let z = a + (b - a) * s;
            acc += c(1.0) / (z * z) * (b - a) / steps as f64;
        }
        assert!(close(r, (-acc).exp(), 1e-10));
        assert!(matches!(nr.e_ratio(c(-0.01), c(-0.05)), Err(Error::OrbitOrdering(_))));
    }

    #[test]
    fn scalar_c_power_matches_quadrature() {
        // Briot-Bouquet: 𝒞 = −2 after x ↦ −x.
        let t = 12;
        let x = field2(t, &[(2, 0, 1)], &[(1, 1, 2), (2, 0, 1)]);
        let f = exp_field(&x).unwrap();
        let curve = CurveParam::graph(vec![Series::from_coeffs(t, vec![g(0), g(-1)])]).unwrap();
        let red = reduce_diffeo(&f, &curve).unwrap();
        let nr = normalize_rs(&red.map, &red.field.curve, 6).unwrap();
        assert!(close(*nr.ccal.get(0, 0), c(-2.0), 1e-12));
        let (a, b) = (C64::from_polar(0.05, 0.2), C64::from_polar(0.02, 0.1));
        let r = nr.e_ratio(a, b).unwrap()[(0, 0)];
        let steps = 40_000;
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..steps {
            let s = (i as f64 + 0.5) / steps as f64;
            let z = a + (b - a) * s;
            acc += c(-2.0) / z * (b - a) / steps as f64;
        }
        assert!(close(r, acc.exp(), 1e-9 * r.norm()), "{r} vs {}", acc.exp());
    }

    #[test]
    fn h_is_small_and_trust_is_checked() {
        let nr = euler_inverse(12);
        let x = c(-0.05);
        let h = nr.h_eval(x, &[c(0.0)]).unwrap();
        assert!(norm(&h) < 10.0 * 0.05f64.powi(8) * 720.0);
        assert!(nr.h_eval(c(-0.9), &[c(0.0)]).is_err());
        assert!(nr.h_eval(x, &[c(1.0)]).is_err());
    }

    fn parabola() -> NormalizedRs {
        // x∘F = x − x², y∘F = y − x y.
        let t = 8;
        let f = FormalMap::new(vec![
            Jet::from_exps(2, t, vec![(vec![1, 0], g(1)), (vec![2, 0], g(-1))]),
            Jet::from_exps(2, t, vec![(vec![0, 1], g(1)), (vec![1, 1], g(-1))]),
        ])
        .unwrap();
        let curve = CurveParam::graph(vec![Series::zero(t)]).unwrap();
        normalize_rs(&f, &curve, 4).unwrap()
    }

    #[test]
    fn orbit_law_for_the_basic_parabola() {
        let nr = parabola();
        let sector = SectorSpec::new(Direction::new(0.0), 1.0, 0.2).unwrap();
        let u = SectorGrid::new(sector, 4, 3, 0.5, 4, 1).unwrap();
        let tr = orbit(&nr, &u, c(0.1), OrbitCaps { max_steps: 10_000, floor: 0.0 }).unwrap();
        assert_eq!(tr.stop, OrbitStop::IterationCap);
        let xj = tr.points[10_000];
        assert!((nr.orbit_law(xj, 10_000) - c(1.0)).norm() < 0.05);
    }

    #[test]
    fn zero_operator_gives_zero() {
        // F = (x − x², y − x y) leaves y = 0 invariant and H(x, 0) = 0.
        let nr = parabola();
        let sector = SectorSpec::new(Direction::new(0.0), 1.0, 0.1).unwrap();
        let u = SectorGrid::new(sector, 6, 3, 0.8, 4, 1).unwrap();
        let (tu, _) = apply_t(&nr, &u, SumOptions { tail_tol: 1e-14, max_steps: 100_000 }).unwrap();
        assert_eq!(tu.weighted_norm(0), 0.0);
    }

    #[test]
    fn euler_inverse_construction() {
        let nr = euler_inverse(12);
        let pc = construct(&nr, PI, PI / 2.0, 0.05, &ConstructOptions::default()).unwrap();
        assert!(pc.residual_sup <= 1e-8, "residual {}", pc.residual_sup);
        let rep = verify_asymptotic(&pc, &nr, &nr.curve, 6);
        assert!(rep.passed, "{:?}", rep.entries);
        let mut wrong = nr.curve.clone();
        let v = wrong[0].coeff(3);
        wrong[0].set(3, v + c(1.0));
        let bad = verify_asymptotic(&pc, &nr, &wrong, 3);
        assert!(!bad.entries[3].passed);
        let st = verify_stability(&pc, &nr, 3);
        assert!(st.passed, "{st:?}");
    }

    #[test]
    fn seeds_and_contact_parameters_agree() {
        let nr6 = euler_inverse(14);
        let opts = ConstructOptions::default();
        let pc = construct(&nr6, PI, PI / 2.0, 0.04, &opts).unwrap();
        let mut rng = crate::corpus::rng(3);
        let far = crate::corpus::random_ball_grid(&pc.grid, nr6.m as i32 - 1, 1.0, &mut rng);
        let other = iterate_from(&nr6, far, &opts).unwrap();
        assert!(other.grid.distance(&pc.grid) <= 10.0 * opts.tol);
        let x = field2(14, &[(3, 0, 1)], &[(1, 1, 1), (2, 0, -1)]);
        let f = inverse_map(&exp_field(&x).unwrap()).unwrap();
        let red = reduce_diffeo(&f, &euler_curve(14)).unwrap();
        let nr8 = normalize_rs(&red.map, &red.field.curve, 8).unwrap();
        let pc8 = construct(&nr8, PI, PI / 2.0, 0.04, &opts).unwrap();
        for i in 0..pc.grid.len() {
            let x = pc.grid.node(i);
            let a = pc.grid.values[i][0] + nr6.recenter[0].eval_c64(x);
            let b = pc8.grid.values[i][0] + nr8.recenter[0].eval_c64(x);
            assert!((a - b).norm() <= 1e-10 * a.norm().max(1e-300), "node {i}: {a} vs {b}");
        }
    }

    #[test]
    fn fixed_point_and_invariance_fail_together() {
        let nr = euler_inverse(12);
        let opts = ConstructOptions::default();
        let pc = construct(&nr, PI, PI / 2.0, 0.05, &opts).unwrap();
        let tol = 1e-8;
        let fixed_defect = |u: &SectorGrid| apply_t(&nr, u, opts.sum_options()).unwrap().0.distance(u);
        assert!(fixed_defect(&pc.grid) <= tol);
        assert!(invariance_residual(&nr, &pc.grid).1 <= tol);
        let shifted = pc.grid.values.iter().map(|v| v.iter().map(|z| z + c(10.0 * tol)).collect()).collect();
        let bad = pc.grid.with_values(shifted);
        assert!(fixed_defect(&bad) > tol);
        assert!(invariance_residual(&nr, &bad).1 > tol);
    }
}
