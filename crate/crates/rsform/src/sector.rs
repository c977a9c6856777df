//! Attracting directions, saddle domains and well-placedness.
//!
//! Angles are radians in `[0, 2π)`. Domains are open, so a direction on the
//! boundary is not contained. Boundary hits are decided with a guard band:
//! exact inputs treat a hit inside the band as lying on the boundary, float
//! inputs report it as indeterminate.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::coeff::Coeff;
use crate::error::{Error, Result};
use crate::reduction::RsDiffeoData;

/// Width of the band around domain boundaries.
pub const GUARD: f64 = 1e-12;

pub fn canonical(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// A half-line `ℝ₊ e^{iθ}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Direction {
    pub angle: f64,
}

impl Direction {
    pub fn new(angle: f64) -> Self {
        Direction { angle: canonical(angle) }
    }

    pub fn unit(&self) -> Complex64 {
        Complex64::from_polar(1.0, self.angle)
    }
}

/// Open arc `(start, start + len)` on the circle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Arc {
    pub start: f64,
    pub len: f64,
}

impl Arc {
    /// Signed offset of `theta` from the start, in `[0, 2π)`.
    fn offset(&self, theta: f64) -> f64 {
        (theta - self.start).rem_euclid(TAU)
    }
}

/// Finite union of disjoint open arcs, or the full circle.
#[derive(Clone, Debug, PartialEq)]
pub struct AngularDomain {
    pub full: bool,
    pub arcs: Vec<Arc>,
}

/// Position of a direction relative to an open domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Membership {
    Inside,
    Outside,
    OnBoundary,
    Indeterminate,
}

impl Membership {
    pub fn contained(self) -> bool {
        self == Membership::Inside
    }
}

impl AngularDomain {
    pub fn full() -> Self {
        AngularDomain { full: true, arcs: Vec::new() }
    }

    pub fn empty() -> Self {
        AngularDomain { full: false, arcs: Vec::new() }
    }

    fn from_arcs(mut arcs: Vec<Arc>) -> Self {
        arcs.retain(|a| a.len > GUARD);
        for a in &mut arcs {
            a.start = canonical(a.start);
            a.len = a.len.min(TAU);
        }
        arcs.sort_by(|a, b| a.start.total_cmp(&b.start));
        AngularDomain { full: false, arcs }
    }

    pub fn is_empty(&self) -> bool {
        !self.full && self.arcs.is_empty()
    }

    /// `{θ : cos(φ − mθ) > 0}`: `m` arcs of length `π/m`.
    pub fn half_plane_preimage(phi: f64, m: u32) -> Self {
        if m == 0 {
            return if phi.cos() > 0.0 { Self::full() } else { Self::empty() };
        }
        let mf = m as f64;
        Self::from_arcs((0..m).map(|i| Arc { start: (phi - PI / 2.0 + TAU * i as f64) / mf, len: PI / mf }).collect())
    }

    pub fn intersect(&self, o: &Self) -> Self {
        if self.full {
            return o.clone();
        }
        if o.full {
            return self.clone();
        }
        let mut out = Vec::new();
        for a in &self.arcs {
            for b in &o.arcs {
                for shift in [-TAU, 0.0, TAU] {
                    let bs = b.start + shift;
                    let lo = a.start.max(bs);
                    let hi = (a.start + a.len).min(bs + b.len);
                    if hi - lo > GUARD {
                        out.push(Arc { start: lo, len: hi - lo });
                    }
                }
            }
        }
        let mut d = Self::from_arcs(out);
        d.arcs.dedup_by(|x, y| (x.start - y.start).abs() < GUARD && (x.len - y.len).abs() < GUARD);
        d
    }

    /// Distance from `theta` to the boundary when inside, with the membership.
    fn locate(&self, theta: f64) -> (Membership, f64) {
        if self.full {
            return (Membership::Inside, f64::INFINITY);
        }
        let mut best = (Membership::Outside, 0.0);
        for a in &self.arcs {
            let off = a.offset(theta);
            let to_start = off.min(TAU - off);
            let to_end = (off - a.len).abs().min(TAU - (off - a.len).abs());
            if to_start <= GUARD || to_end <= GUARD {
                best = (Membership::OnBoundary, 0.0);
            } else if off < a.len {
                return (Membership::Inside, off.min(a.len - off));
            }
        }
        best
    }

    /// Membership of a direction; `exact` selects the boundary policy.
    pub fn membership(&self, theta: f64, exact: bool) -> Membership {
        match self.locate(canonical(theta)).0 {
            Membership::OnBoundary if !exact => Membership::Indeterminate,
            m => m,
        }
    }

    pub fn contains(&self, theta: f64, exact: bool) -> bool {
        self.membership(theta, exact).contained()
    }

    /// Half the largest opening of a sector bisected by `theta` inside the
    /// domain; zero when `theta` is not inside.
    pub fn half_width_at(&self, theta: f64) -> f64 {
        match self.locate(canonical(theta)) {
            (Membership::Inside, d) => d,
            _ => 0.0,
        }
    }
}

/// Open sector of opening `opening` and radius `radius` bisected by `tau`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SectorSpec {
    pub tau: Direction,
    pub opening: f64,
    pub radius: f64,
}

impl SectorSpec {
    pub fn new(tau: Direction, opening: f64, radius: f64) -> Result<Self> {
        if !(opening > 0.0 && opening < TAU && radius > 0.0) {
            return Err(Error::Precondition("sector needs 0 < opening < 2π and a positive radius".into()));
        }
        Ok(SectorSpec { tau, opening, radius })
    }

    pub fn contains(&self, x: Complex64) -> bool {
        let r = x.norm();
        if r == 0.0 || r >= self.radius {
            return false;
        }
        let off = (x.arg() - self.tau.angle + PI).rem_euclid(TAU) - PI;
        off.abs() < self.opening / 2.0
    }
}

/// The `k + p` directions along which `x ↦ x + λx^{k+p+1}` contracts:
/// `λ ξ^{k+p}` is a negative real number.
pub fn attracting_directions(k: u32, p: u32, lambda: Complex64) -> Result<Vec<Direction>> {
    let m = k + p;
    if m == 0 || lambda.norm() == 0.0 {
        return Err(Error::Precondition("need k + p ≥ 1 and λ ≠ 0".into()));
    }
    let base = (PI - lambda.arg()) / m as f64;
    let mut v: Vec<Direction> = (0..m).map(|i| Direction::new(base + TAU * i as f64 / m as f64)).collect();
    v.sort_by(|a, b| a.angle.total_cmp(&b.angle));
    Ok(v)
}

/// Leading coefficient `d_{j0}` and order `ν_j` of a nonzero diagonal entry.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagEntry {
    pub lead: Complex64,
    pub order: u32,
}

/// `⋂_j {x : Re(−d_{j0} / (λ x^{p−ν_j})) > 0}`; the full circle when `p = 0`.
pub fn saddle_domain(lambda: Complex64, entries: &[DiagEntry], p: u32) -> AngularDomain {
    if p == 0 {
        return AngularDomain::full();
    }
    entries.iter().fold(AngularDomain::full(), |acc, e| {
        let phi = (-e.lead / lambda).arg();
        acc.intersect(&AngularDomain::half_plane_preimage(phi, p - e.order))
    })
}

/// `⋂_j {x : Re(d_{j0} x^{k+ν_j}) > 0}`.
pub fn growth_domain(k: u32, entries: &[DiagEntry]) -> AngularDomain {
    entries.iter().fold(AngularDomain::full(), |acc, e| {
        let m = k + e.order;
        // Re(d e^{imθ}) > 0 ⇔ cos(arg d + mθ) > 0 ⇔ cos(−arg d − mθ) > 0.
        let phi = -e.lead.arg();
        acc.intersect(&AngularDomain::half_plane_preimage(phi, m))
    })
}

/// Supremum of the openings `η < 2π/(k+p)` with the sector bisected by `tau`
/// inside the saddle and growth domains; `None` when no opening works.
pub fn interval_i(k: u32, p: u32, lambda: Complex64, entries: &[DiagEntry], tau: Direction) -> Option<f64> {
    let dom = saddle_domain(lambda, entries, p).intersect(&growth_domain(k, entries));
    let cap = TAU / (k + p) as f64;
    let half = dom.half_width_at(tau.angle);
    if half <= 0.0 {
        return None;
    }
    Some(cap.min(2.0 * half))
}

/// Nonzero diagonal entries of the principal linear part.
pub fn diag_entries<C: Coeff>(rs: &RsDiffeoData<C>) -> Vec<DiagEntry> {
    rs.d
        .iter()
        .filter_map(|s| {
            let scale = s.coeffs().iter().map(|c| c.magnitude()).fold(0.0, f64::max);
            (0..rs.p)
                .find(|&j| !s.coeff(j).is_zero() && !s.coeff(j).is_negligible(scale, 1e3 * C::default_eps()))
                .map(|j| DiagEntry { lead: s.coeff(j).to_c64(), order: j })
        })
        .collect()
}

/// The two-variable cases, by comparing `p` with `k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dim2Case {
    /// `p = 0`: `k` attracting and `k` repelling curves.
    A,
    /// `1 ≤ p < k`: `p` attracting and `p` repelling.
    B,
    /// `k < p`: at least one of each.
    C,
    /// `1 ≤ p = k`: `p` attracting or `p` repelling.
    D,
}

impl Dim2Case {
    pub fn tag(self) -> &'static str {
        match self {
            Dim2Case::A => "a",
            Dim2Case::B => "b",
            Dim2Case::C => "c",
            Dim2Case::D => "d",
        }
    }
}

/// Which map carries the attracting curve used downstream.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Chosen {
    Map,
    Inverse,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dim2Report {
    pub case: Dim2Case,
    /// Attracting directions of `F` inside the saddle domain.
    pub attracting: Vec<Direction>,
    /// Attracting directions of `F⁻¹` inside the saddle domain.
    pub repelling: Vec<Direction>,
    /// Guaranteed numbers of attracting and repelling curves.
    pub guaranteed: (u32, u32),
    /// Whether the guarantee is met by the directions found.
    pub guarantee_met: bool,
    pub chosen: Option<Chosen>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DirectionVerdict {
    pub direction: Direction,
    pub membership: Membership,
    /// Supremum of admissible sector openings, when inside.
    pub opening: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WellPlacedReport {
    pub k: u32,
    pub p: u32,
    pub lambda: Complex64,
    pub entries: Vec<DiagEntry>,
    pub saddle: AngularDomain,
    pub verdicts: Vec<DirectionVerdict>,
    pub overall: bool,
    pub dim2: Option<Dim2Report>,
}

impl WellPlacedReport {
    /// The contained direction with the widest admissible opening.
    pub fn best(&self) -> Option<&DirectionVerdict> {
        self.verdicts
            .iter()
            .filter(|v| v.membership.contained() && v.opening.is_some())
            .max_by(|a, b| a.opening.unwrap_or(0.0).total_cmp(&b.opening.unwrap_or(0.0)))
    }
}

pub fn well_placed<C: Coeff>(rs: &RsDiffeoData<C>) -> Result<WellPlacedReport> {
    let lambda = rs.lambda.to_c64();
    let entries = diag_entries(rs);
    if rs.p >= 1 && !entries.iter().any(|e| e.order == 0) {
        return Err(Error::Precondition("D(0) = 0 with p ≥ 1".into()));
    }
    let saddle = saddle_domain(lambda, &entries, rs.p);
    let verdicts: Vec<DirectionVerdict> = attracting_directions(rs.k, rs.p, lambda)?
        .into_iter()
        .map(|d| {
            let membership = saddle.membership(d.angle, C::EXACT);
            let opening = if membership.contained() { interval_i(rs.k, rs.p, lambda, &entries, d) } else { None };
            DirectionVerdict { direction: d, membership, opening }
        })
        .collect();
    let overall = verdicts.iter().any(|v| v.membership.contained());
    Ok(WellPlacedReport { k: rs.k, p: rs.p, lambda, entries, saddle, verdicts, overall, dim2: None })
}

pub fn dim2_case(k: u32, p: u32) -> Dim2Case {
    if p == 0 {
        Dim2Case::A
    } else if p < k {
        Dim2Case::B
    } else if k < p {
        Dim2Case::C
    } else {
        Dim2Case::D
    }
}

/// Counts curves for a map of two variables and its inverse, which share
/// coordinates and hence the saddle domain.
pub fn dim2_classify<C: Coeff>(f: &RsDiffeoData<C>, finv: &RsDiffeoData<C>) -> Result<Dim2Report> {
    if f.d.len() != 1 || finv.d.len() != 1 {
        return Err(Error::Precondition("the classification is for maps of two variables".into()));
    }
    if (f.k, f.p) != (finv.k, finv.p) {
        return Err(Error::Precondition("the map and its inverse must share (k, p)".into()));
    }
    let (k, p) = (f.k, f.p);
    let wf = well_placed(f)?;
    let wi = well_placed(finv)?;
    let inside = |w: &WellPlacedReport| -> Vec<Direction> {
        w.verdicts.iter().filter(|v| v.membership.contained()).map(|v| v.direction).collect()
    };
    let attracting = inside(&wf);
    let repelling = inside(&wi);
    let case = dim2_case(k, p);
    let (na, nr) = (attracting.len() as u32, repelling.len() as u32);
    let (guaranteed, guarantee_met) = match case {
        Dim2Case::A => ((k, k), na >= k && nr >= k),
        Dim2Case::B => ((p, p), na >= p && nr >= p),
        Dim2Case::C => ((1, 1), na >= 1 && nr >= 1),
        Dim2Case::D => ((p, p), na >= p || nr >= p),
    };
    let chosen = if na > 0 {
        Some(Chosen::Map)
    } else if nr > 0 {
        Some(Chosen::Inverse)
    } else {
        None
    };
    Ok(Dim2Report { case, attracting, repelling, guaranteed, guarantee_met, chosen })
}
