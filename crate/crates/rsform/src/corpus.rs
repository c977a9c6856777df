//! Deterministic instances used by the test suites and the command line.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::coeff::{Coeff, GaussRat};
use crate::curves::CurveParam;
use crate::error::Result;
use crate::exp_log::{FormalField, FormalMap};
use crate::jet::Jet;
use crate::linalg::Mat;
use crate::mono::monomials_of_degree;
use crate::rational::Rational;
use crate::series::{MatSeries, Series};
use crate::transforms::{blowup_steps, is_permissible, Center, TransformStep};
use crate::turrittin::LinearSystem;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn g(n: i64) -> GaussRat {
    GaussRat::from_i64(n)
}

/// Integer matrix with determinant 1.
pub fn unimodular(m: usize, rng: &mut ChaCha8Rng) -> Mat<GaussRat> {
    let upper = Mat::from_fn(m, m, |i, j| if i == j { g(1) } else if j > i { g(rng.gen_range(-2..=2)) } else { g(0) });
    let lower = Mat::from_fn(m, m, |i, j| if i == j { g(1) } else if j < i { g(rng.gen_range(-1..=1)) } else { g(0) });
    upper.mul(&lower)
}

fn system(rank: u32, trunc: u32, mats: &[&[&[i64]]]) -> LinearSystem<GaussRat> {
    let mats: Vec<Mat<GaussRat>> = mats.iter().map(|m| Mat::from_i64_rows(m)).collect();
    LinearSystem::new(rank, MatSeries::from_coeff_mats(trunc, &mats))
}

/// Systems with nilpotent leading term whose reductions stay over the
/// Gaussian rationals.
pub fn nilpotent_systems(trunc: u32) -> Vec<(String, LinearSystem<GaussRat>)> {
    let list: Vec<(&str, u32, Vec<&[&[i64]]>)> = vec![
        ("nil-2x2-rank1", 1, vec![&[&[0, 1], &[0, 0]], &[&[0, 0], &[1, 0]]]),
        ("nil-2x2-rank2", 2, vec![&[&[0, 1], &[0, 0]], &[&[0, 0], &[4, 0]], &[&[1, 2], &[3, 1]]]),
        ("nil-2x2-rank3", 3, vec![&[&[0, 1], &[0, 0]], &[&[1, 0], &[0, 1]], &[&[0, 0], &[9, 0]], &[&[0, 1], &[1, 0]]]),
        ("nil-3x3-rank1", 1, vec![&[&[0, 1, 0], &[0, 0, 0], &[0, 0, 0]], &[&[0, 0, 1], &[1, 0, 0], &[0, 0, 2]]]),
        (
            "nil-3x3-rank2",
            2,
            vec![&[&[0, 1, 0], &[0, 0, 1], &[0, 0, 0]], &[&[0, 0, 0], &[0, 0, 0], &[0, 4, 0]], &[&[1, 1, 0], &[0, 1, 0], &[2, 0, 1]]],
        ),
        (
            "nil-3x3-rank3",
            3,
            vec![&[&[0, 1, 0], &[0, 0, 0], &[0, 0, 0]], &[&[0, 0, 0], &[1, 0, 0], &[0, 0, 1]], &[&[1, 0, 0], &[0, 0, 1], &[1, 1, 0]]],
        ),
        ("nil-shifted-2x2", 3, vec![&[&[2, 1], &[0, 2]], &[&[0, 0], &[0, 0]], &[&[0, 0], &[1, 0]]]),
        ("nil-rank1-regular", 1, vec![&[&[1, 1], &[-1, -1]], &[&[0, 1], &[1, 0]]]),
    ];
    list.into_iter().map(|(name, q, mats)| (name.to_string(), system(q, trunc, &mats))).collect()
}

/// Random systems whose leading term has distinct integer eigenvalues, hidden
/// by a unimodular conjugation.
pub fn split_systems(count: usize, trunc: u32, seed: u64) -> Vec<(String, LinearSystem<GaussRat>)> {
    let mut r = rng(seed);
    (0..count)
        .map(|i| {
            let m = 1 + i % 3;
            let q = 1 + (i / 3) as u32 % 3;
            let mut eig: Vec<i64> = Vec::new();
            while eig.len() < m {
                let v = r.gen_range(-3..=3);
                if v != 0 && !eig.contains(&v) {
                    eig.push(v);
                }
            }
            let s = unimodular(m, &mut r);
            let b0 = s.mul(&Mat::diagonal(&eig.iter().map(|&v| g(v)).collect::<Vec<_>>())).mul(&s.inverse().expect("unimodular"));
            let mut mats = vec![b0];
            for _ in 0..q + 2 {
                mats.push(Mat::from_fn(m, m, |_, _| g(r.gen_range(-2..=2))));
            }
            (format!("split-{m}x{m}-rank{q}-{i}"), LinearSystem::new(q, MatSeries::from_coeff_mats(trunc, &mats)))
        })
        .collect()
}

/// The linear-system suite: random split systems followed by the nilpotent ones.
pub fn turrittin_suite(trunc: u32, seed: u64) -> Vec<(String, LinearSystem<GaussRat>)> {
    let mut v = split_systems(14, trunc, seed);
    v.extend(nilpotent_systems(trunc));
    v
}

/// Grid with random values of norm at most `scale·|x|^e` at each node.
pub fn random_ball_grid(template: &crate::parabolic::SectorGrid, e: i32, scale: f64, rng: &mut ChaCha8Rng) -> crate::parabolic::SectorGrid {
    let dim = template.values.first().map(|v| v.len()).unwrap_or(0);
    let values = (0..template.len())
        .map(|i| {
            let bound = scale * template.node(i).norm().powi(e) / (dim.max(1) as f64).sqrt();
            (0..dim)
                .map(|_| num_complex::Complex64::from_polar(bound * rng.gen_range(0.0..1.0), rng.gen_range(0.0..std::f64::consts::TAU)))
                .collect()
        })
        .collect();
    template.with_values(values)
}

fn gauss(re: i64, im: i64) -> GaussRat {
    GaussRat::from_rational(&Rational::from_integer(re), &Rational::from_integer(im))
}

fn small_coeff(rng: &mut ChaCha8Rng) -> GaussRat {
    let re = rng.gen_range(-3..=3);
    let im = if rng.gen_bool(0.25) { rng.gen_range(-2..=2) } else { 0 };
    if re == 0 && im == 0 {
        g(1)
    } else {
        gauss(re, im)
    }
}

/// Random polynomial in `n` variables with terms of degrees `lo..=hi`.
fn random_poly(n: usize, trunc: u32, lo: u32, hi: u32, density: f64, rng: &mut ChaCha8Rng) -> Jet<GaussRat> {
    let mut terms = Vec::new();
    for d in lo..=hi.min(trunc) {
        for m in monomials_of_degree(n, d) {
            if rng.gen_bool(density) {
                terms.push((m, small_coeff(rng)));
            }
        }
    }
    Jet::from_terms(n, trunc, terms)
}

/// Random polynomial field in `n` variables of multiplicity exactly `nu0`.
pub fn random_generator(n: usize, nu0: u32, trunc: u32, rng: &mut ChaCha8Rng) -> FormalField<GaussRat> {
    let density = match n {
        1 => 0.7,
        2 => 0.35,
        _ => 0.15,
    };
    let mut comps: Vec<Jet<GaussRat>> = (0..n).map(|_| random_poly(n, trunc, nu0, nu0 + 2, density, rng)).collect();
    let i = rng.gen_range(0..n);
    let lead = monomials_of_degree(n, nu0);
    let m = lead[rng.gen_range(0..lead.len())];
    comps[i] = comps[i].try_add(&Jet::monomial(n, trunc, m, small_coeff(rng))).expect("same shape");
    if comps[i].homogeneous_part(nu0).is_zero() {
        comps[i] = comps[i].try_add(&Jet::monomial(n, trunc, m, g(1))).expect("same shape");
    }
    FormalField::new(comps).expect("same shape")
}

/// A field, a curve it leaves invariant, and a permissible step sequence.
#[derive(Clone, Debug)]
pub struct PermissibleInstance {
    pub field: FormalField<GaussRat>,
    pub curve: CurveParam<GaussRat>,
    pub steps: Vec<TransformStep<GaussRat>>,
    pub label: String,
}

/// Random instance with the `x`-axis invariant: a point blow-up, a
/// codimension-two blow-up of `{x = y₁ = 0}` (three variables), or a
/// ramification of `x`.
pub fn random_permissible(trunc: u32, rng: &mut ChaCha8Rng) -> PermissibleInstance {
    loop {
        let n = rng.gen_range(2..=3usize);
        let kind = rng.gen_range(0..3u32);
        if kind == 1 && n == 2 {
            continue;
        }
        let nu = rng.gen_range(2..=3u32);
        let mut comps = Vec::with_capacity(n);
        let x0 = random_poly(n, trunc, nu, nu + 1, 0.4, rng);
        comps.push(if kind == 2 { x0.mul_var_pow(0, 1).truncate(trunc) } else { x0 });
        for j in 1..n {
            let tail = random_poly(n, trunc, nu.saturating_sub(1).max(if kind == 1 { 1 } else { 0 }), nu, 0.4, rng);
            comps.push(tail.mul_var_pow(j, 1).truncate(trunc));
        }
        let field = FormalField::new(comps).expect("same shape");
        if field.is_zero() {
            continue;
        }
        let mut axis = vec![Series::monomial(trunc, 1, g(1))];
        axis.extend((1..n).map(|_| Series::zero(trunc)));
        let curve = CurveParam::new(axis).expect("smooth curve");
        let (steps, label) = match kind {
            0 => {
                let z = Center::point(n);
                if is_permissible(&field, &curve, &z).is_err() {
                    continue;
                }
                (blowup_steps(&curve, &z, None).expect("transversal"), format!("point blow-up, n = {n}"))
            }
            1 => {
                let z = Center::new(vec![0, 1]).expect("valid center");
                if is_permissible(&field, &curve, &z).is_err() {
                    continue;
                }
                (blowup_steps(&curve, &z, None).expect("transversal"), "blow-up of {x = y1 = 0}, n = 3".to_string())
            }
            _ => {
                let q = rng.gen_range(2..=3);
                (vec![TransformStep::ramification(q, 0)], format!("ramification q = {q}, n = {n}"))
            }
        };
        return PermissibleInstance { field, curve, steps, label };
    }
}

/// `Exp` of `x^k(−x^{p+1}∂x + (d + x^p c) y ∂y + x^{p+1} y² ∂y)` in two
/// variables, leaving the `x`-axis invariant.
pub fn rs_plane_generator(k: u32, p: u32, d: GaussRat, c: GaussRat, trunc: u32) -> FormalField<GaussRat> {
    let xk = |e: u32| e + k;
    let a = Jet::from_exps(2, trunc, vec![(vec![xk(p + 1), 0], g(-1))]);
    let mut b = vec![(vec![xk(p), 1], c), (vec![xk(p + 1), 2], g(1))];
    if p > 0 {
        b.push((vec![xk(0), 1], d));
    }
    FormalField::new(vec![a, Jet::from_exps(2, trunc, b)]).expect("same shape")
}

/// The plane families used for the two-variable classification.
pub fn plane_families(trunc: u32) -> Vec<(String, u32, u32, FormalField<GaussRat>)> {
    let shapes: [(u32, u32); 8] = [(1, 0), (2, 0), (3, 0), (2, 1), (3, 1), (3, 2), (1, 1), (2, 2)];
    let leads = [gauss(1, 0), gauss(-1, 0), gauss(0, 1), gauss(2, -1)];
    let mut out = Vec::new();
    for (k, p) in shapes {
        for (i, d) in leads.iter().enumerate() {
            let c = if p == 0 { leads[(i + 1) % leads.len()].clone() } else { GaussRat::from_ratio(1, 2) };
            let label = format!("k={k} p={p} d={d:?}");
            out.push((label, k, p, rs_plane_generator(k, p, d.clone(), c, trunc)));
        }
    }
    out
}

/// The `x`-axis as a curve in `n` variables.
pub fn x_axis(n: usize, trunc: u32) -> CurveParam<GaussRat> {
    let mut comps = vec![Series::monomial(trunc, 1, g(1))];
    comps.extend((1..n).map(|_| Series::zero(trunc)));
    CurveParam::new(comps).expect("smooth curve")
}

/// `F = Exp(x³∂x + x(y − x)∂y)` and the graph of `Σ_{n≥1} (n−1)! xⁿ`.
pub fn euler_pair(trunc: u32) -> Result<(FormalMap<GaussRat>, CurveParam<GaussRat>)> {
    let x = FormalField::new(vec![
        Jet::from_exps(2, trunc, vec![(vec![3, 0], g(1))]),
        Jet::from_exps(2, trunc, vec![(vec![1, 1], g(1)), (vec![2, 0], g(-1))]),
    ])?;
    let mut s = Series::zero(trunc);
    let mut f = 1i64;
    for k in 1..=trunc {
        s.set(k, g(f));
        f = f.saturating_mul(k as i64);
    }
    Ok((crate::exp_log::exp_field(&x)?, CurveParam::graph(vec![s])?))
}

/// `F = Exp(x²∂x + x(2y + x)∂y)` and the invariant line `y = −x`.
pub fn briot_bouquet_pair(trunc: u32) -> Result<(FormalMap<GaussRat>, CurveParam<GaussRat>)> {
    let x = FormalField::new(vec![
        Jet::from_exps(2, trunc, vec![(vec![2, 0], g(1))]),
        Jet::from_exps(2, trunc, vec![(vec![1, 1], g(2)), (vec![2, 0], g(1))]),
    ])?;
    Ok((crate::exp_log::exp_field(&x)?, CurveParam::graph(vec![Series::from_coeffs(trunc, vec![g(0), g(-1)])])?))
}
