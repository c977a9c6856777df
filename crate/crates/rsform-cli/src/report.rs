//! JSON encoding of coefficients, jets, matrices and certificates.
//!
//! Exact coefficients are strings such as `"-3/4+1/2*i"`. Float
//! coefficients are `[re, im]` pairs and every float is written with 17
//! significant digits, so decoding recovers the same bits.

use rsform::error::Error;
use rsform::transforms::{Center, CoordChange, StepKind, TransformSequence, TransformStep};
use rsform::turrittin::TTransform;
use rsform::{Coeff, Float64, GaussRat, Jet, Mat, MatSeries, Mono, Series};
use serde_json::{json, Map, Number, Value};

use crate::expr::{parse_coeff, parse_expression, print_jet};

/// A float as a JSON number with 17 significant digits; non-finite values
/// become strings.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        let s = format!("{x:.16e}");
        Value::Number(s.parse::<Number>().expect("formatted float is valid JSON"))
    } else {
        Value::String(format!("{x}"))
    }
}

pub fn num_of(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.to_string().parse().ok(),
        Value::String(s) => s.parse().ok(),
        _ => None,
    }
}

pub fn c64(z: Float64) -> Value {
    json!([num(z.re), num(z.im)])
}

pub fn c64_of(v: &Value) -> Option<Float64> {
    let a = v.as_array()?;
    Some(Float64::new(num_of(a.first()?)?, num_of(a.get(1)?)?))
}

pub trait JsonCoeff: Coeff {
    fn to_json(&self) -> Value;
    fn from_json(v: &Value) -> Option<Self>;
    /// A jet as an expression string (exact) or a term list (float).
    fn jet_out(j: &Jet<Self>, vars: &[String]) -> Value;
    fn jet_in(v: &Value, vars: &[String], trunc: u32) -> Result<Jet<Self>, Error>;
}

impl JsonCoeff for GaussRat {
    fn to_json(&self) -> Value {
        Value::String(self.to_string())
    }
    fn from_json(v: &Value) -> Option<Self> {
        parse_coeff(v.as_str()?).ok()
    }
    fn jet_out(j: &Jet<Self>, vars: &[String]) -> Value {
        Value::String(print_jet(j, vars))
    }
    fn jet_in(v: &Value, vars: &[String], trunc: u32) -> Result<Jet<Self>, Error> {
        let s = v.as_str().ok_or_else(|| bad("expected an expression"))?;
        parse_expression(s, vars, trunc).map_err(|e| bad(&e.to_string()))
    }
}

impl JsonCoeff for Float64 {
    fn to_json(&self) -> Value {
        c64(*self)
    }
    fn from_json(v: &Value) -> Option<Self> {
        c64_of(v)
    }
    fn jet_out(j: &Jet<Self>, _vars: &[String]) -> Value {
        jet_json(j)
    }
    fn jet_in(v: &Value, vars: &[String], trunc: u32) -> Result<Jet<Self>, Error> {
        let j: Jet<Self> = jet_of(v)?;
        if j.nvars() != vars.len() || j.trunc() != trunc {
            return Err(bad("jet shape"));
        }
        Ok(j)
    }
}

/// Components of a map or field with their common truncation order.
pub fn comps_json<C: JsonCoeff>(jets: &[Jet<C>], vars: &[String]) -> Value {
    json!({
        "trunc": jets.first().map(|j| j.trunc()).unwrap_or(0),
        "components": jets.iter().map(|j| C::jet_out(j, vars)).collect::<Vec<_>>(),
    })
}

pub fn comps_of<C: JsonCoeff>(v: &Value, vars: &[String]) -> Result<Vec<Jet<C>>, Error> {
    let t = uint(v, "trunc")? as u32;
    array(v, "components")?.iter().map(|c| C::jet_in(c, vars, t)).collect()
}

/// Curve components as jets in `s`.
pub fn curve_json<C: JsonCoeff>(comps: &[Series<C>]) -> Value {
    let jets: Vec<Jet<C>> = comps.iter().map(|s| s.to_jet()).collect();
    comps_json(&jets, &[String::from("s")])
}

pub fn curve_of<C: JsonCoeff>(v: &Value) -> Result<Vec<Series<C>>, Error> {
    Ok(comps_of::<C>(v, &[String::from("s")])?.iter().map(Series::from_jet).collect())
}

fn bad(what: &str) -> Error {
    Error::Structural(format!("malformed certificate: {what}"))
}

fn field<'a>(v: &'a Value, key: &str) -> Result<&'a Value, Error> {
    v.get(key).ok_or_else(|| bad(&format!("missing '{key}'")))
}

fn uint(v: &Value, key: &str) -> Result<u64, Error> {
    field(v, key)?.as_u64().ok_or_else(|| bad(&format!("'{key}' is not an integer")))
}

fn array<'a>(v: &'a Value, key: &str) -> Result<&'a Vec<Value>, Error> {
    field(v, key)?.as_array().ok_or_else(|| bad(&format!("'{key}' is not an array")))
}

fn coeff<C: JsonCoeff>(v: &Value) -> Result<C, Error> {
    C::from_json(v).ok_or_else(|| bad(&format!("bad coefficient {v}")))
}

fn usizes(v: &Value) -> Result<Vec<usize>, Error> {
    v.as_array()
        .ok_or_else(|| bad("expected an index list"))?
        .iter()
        .map(|x| x.as_u64().map(|u| u as usize).ok_or_else(|| bad("expected an index")))
        .collect()
}

pub fn jet_json<C: JsonCoeff>(j: &Jet<C>) -> Value {
    let terms: Vec<Value> = j.terms().map(|(m, c)| json!([m.exps(j.nvars()), c.to_json()])).collect();
    json!({"nvars": j.nvars(), "trunc": j.trunc(), "terms": terms})
}

pub fn jet_of<C: JsonCoeff>(v: &Value) -> Result<Jet<C>, Error> {
    let n = uint(v, "nvars")? as usize;
    let t = uint(v, "trunc")? as u32;
    let mut terms = Vec::new();
    for term in array(v, "terms")? {
        let exps: Vec<u32> = usizes(&term[0])?.into_iter().map(|e| e as u32).collect();
        if exps.len() != n {
            return Err(bad("exponent vector length"));
        }
        terms.push((Mono::from_exps(&exps), coeff(&term[1])?));
    }
    Ok(Jet::from_terms(n, t, terms))
}

pub fn series_json<C: JsonCoeff>(s: &Series<C>) -> Value {
    json!({"trunc": s.trunc(), "coeffs": s.coeffs().iter().map(|c| c.to_json()).collect::<Vec<_>>()})
}

pub fn series_of<C: JsonCoeff>(v: &Value) -> Result<Series<C>, Error> {
    let t = uint(v, "trunc")? as u32;
    let cs = array(v, "coeffs")?.iter().map(coeff).collect::<Result<Vec<C>, _>>()?;
    Ok(Series::from_coeffs(t, cs))
}

pub fn mat_json<C: JsonCoeff>(m: &Mat<C>) -> Value {
    Value::Array(
        (0..m.rows()).map(|i| Value::Array((0..m.cols()).map(|j| m.get(i, j).to_json()).collect())).collect(),
    )
}

pub fn mat_of<C: JsonCoeff>(v: &Value) -> Result<Mat<C>, Error> {
    let rows = v.as_array().ok_or_else(|| bad("matrix is not an array"))?;
    let rows = rows
        .iter()
        .map(|r| r.as_array().ok_or_else(|| bad("matrix row")).and_then(|r| r.iter().map(coeff).collect()))
        .collect::<Result<Vec<Vec<C>>, _>>()?;
    if rows.is_empty() || rows.iter().any(|r| r.len() != rows[0].len()) {
        return Err(bad("ragged matrix"));
    }
    Ok(Mat::from_rows(rows))
}

pub fn mat_series_json<C: JsonCoeff>(m: &MatSeries<C>) -> Value {
    json!({"trunc": m.trunc(), "coeffs": (0..=m.trunc()).map(|k| mat_json(&m.coeff(k))).collect::<Vec<_>>()})
}

pub fn mat_series_of<C: JsonCoeff>(v: &Value) -> Result<MatSeries<C>, Error> {
    let t = uint(v, "trunc")? as u32;
    let mats = array(v, "coeffs")?.iter().map(mat_of).collect::<Result<Vec<Mat<C>>, _>>()?;
    if mats.len() != t as usize + 1 {
        return Err(bad("matrix series length"));
    }
    Ok(MatSeries::from_coeff_mats(t, &mats))
}

pub fn step_json<C: JsonCoeff>(s: &TransformStep<C>) -> Value {
    let mut o = match &s.kind {
        StepKind::Coord(CoordChange::Linear(m)) => json!({"step": "linear", "matrix": mat_json(m)}),
        StepKind::Coord(CoordChange::Translate(q)) => {
            json!({"step": "translate", "series": q.iter().map(series_json).collect::<Vec<_>>()})
        }
        StepKind::Coord(CoordChange::PolyLinear(p)) => json!({"step": "poly_linear", "matrix": mat_series_json(p)}),
        StepKind::Coord(CoordChange::Permute(p)) => json!({"step": "permute", "perm": p}),
        StepKind::BlowUp { center } => json!({"step": "blowup", "center": center.vars}),
        StepKind::Ramification { q, var } => json!({"step": "ramify", "q": q, "var": var}),
    };
    o["divisor"] = json!(s.exceptional_divisor);
    o
}

pub fn step_of<C: JsonCoeff>(v: &Value) -> Result<TransformStep<C>, Error> {
    let tag = field(v, "step")?.as_str().ok_or_else(|| bad("step tag"))?;
    let kind = match tag {
        "linear" => StepKind::Coord(CoordChange::Linear(mat_of(field(v, "matrix")?)?)),
        "translate" => StepKind::Coord(CoordChange::Translate(
            array(v, "series")?.iter().map(series_of).collect::<Result<Vec<_>, _>>()?,
        )),
        "poly_linear" => StepKind::Coord(CoordChange::PolyLinear(mat_series_of(field(v, "matrix")?)?)),
        "permute" => StepKind::Coord(CoordChange::Permute(usizes(field(v, "perm")?)?)),
        "blowup" => StepKind::BlowUp { center: Center::new(usizes(field(v, "center")?)?)? },
        "ramify" => StepKind::Ramification { q: uint(v, "q")? as u32, var: uint(v, "var")? as usize },
        other => return Err(bad(&format!("unknown step '{other}'"))),
    };
    let exceptional_divisor = match field(v, "divisor")? {
        Value::Null => None,
        d => Some(d.as_u64().ok_or_else(|| bad("divisor"))? as usize),
    };
    Ok(TransformStep { kind, exceptional_divisor })
}

pub fn sequence_json<C: JsonCoeff>(s: &TransformSequence<C>) -> Value {
    json!({"steps": s.steps.iter().map(step_json).collect::<Vec<_>>(), "total_divisor": s.total_divisor})
}

pub fn sequence_of<C: JsonCoeff>(v: &Value) -> Result<TransformSequence<C>, Error> {
    let mut seq = TransformSequence::new();
    for s in array(v, "steps")? {
        seq.push(step_of(s)?);
    }
    let saved = match field(v, "total_divisor")? {
        Value::Null => None,
        d => d.as_u64().map(|u| u as usize),
    };
    if saved != seq.total_divisor {
        return Err(bad("total divisor disagrees with the steps"));
    }
    Ok(seq)
}

pub fn ttransform_json<C: JsonCoeff>(t: &TTransform<C>) -> Value {
    match t {
        TTransform::PolyLinear(p) => json!({"transform": "poly_linear", "matrix": mat_series_json(p)}),
        TTransform::Shearing(k) => json!({"transform": "shearing", "exponents": k}),
        TTransform::Ramify(a) => json!({"transform": "ramify", "alpha": a}),
    }
}

pub fn ttransform_of<C: JsonCoeff>(v: &Value) -> Result<TTransform<C>, Error> {
    match field(v, "transform")?.as_str() {
        Some("poly_linear") => Ok(TTransform::PolyLinear(mat_series_of(field(v, "matrix")?)?)),
        Some("shearing") => Ok(TTransform::Shearing(usizes(field(v, "exponents")?)?.into_iter().map(|k| k as u32).collect())),
        Some("ramify") => Ok(TTransform::Ramify(uint(v, "alpha")? as u32)),
        _ => Err(bad("unknown linear transform")),
    }
}

/// Builds an object from key/value pairs in the given order.
pub fn object(pairs: Vec<(&str, Value)>) -> Value {
    let mut m = Map::new();
    for (k, v) in pairs {
        m.insert(k.to_string(), v);
    }
    Value::Object(m)
}
