//! Input documents.
//!
//! ```text
//! # comment
//! dim 2
//! vars x y
//! order 12
//! backend exact
//!
//! field X:
//!   x^3
//!   x*(y - x)
//!
//! curve G:
//!   s
//!   s^2 + s^3
//!
//! system B:
//!   rank 1
//!   0, 1
//!   x, 0
//! ```
//!
//! Headers come before the first block. A `diffeo` or `field` block has one
//! component per line in the document variables, a `curve` block has one
//! component per line in `s`, and a `system` block describes
//! `x^{q+1} y' = B(x) y` by a `rank q` line followed by the rows of `B`
//! with comma-separated entries in `x`.

use std::collections::HashSet;

use rsform::{GaussRat, Jet, Series};

use crate::expr::{parse_at, print_jet, ParseError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    Exact,
    Float,
}

impl Backend {
    pub fn tag(self) -> &'static str {
        match self {
            Backend::Exact => "exact",
            Backend::Float => "float",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Object {
    Diffeo(Vec<Jet<GaussRat>>),
    Field(Vec<Jet<GaussRat>>),
    Curve(Vec<Series<GaussRat>>),
    System { rank: u32, rows: Vec<Vec<Series<GaussRat>>> },
}

impl Object {
    pub fn kind(&self) -> &'static str {
        match self {
            Object::Diffeo(_) => "diffeo",
            Object::Field(_) => "field",
            Object::Curve(_) => "curve",
            Object::System { .. } => "system",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NamedObject {
    pub name: String,
    pub line: usize,
    pub body: Object,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InputDocument {
    pub dim: usize,
    pub vars: Vec<String>,
    pub order: u32,
    pub backend: Backend,
    pub objects: Vec<NamedObject>,
}

pub const CURVE_VAR: &str = "s";
pub const SYSTEM_VAR: &str = "x";

fn default_vars(dim: usize) -> Vec<String> {
    match dim {
        1 => vec!["x".into()],
        2 => vec!["x".into(), "y".into()],
        _ => std::iter::once("x".to_string()).chain((1..dim).map(|j| format!("y{j}"))).collect(),
    }
}

fn perr<T>(line: usize, col: usize, msg: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError { line, col, msg: msg.into() })
}

struct Block {
    kind: String,
    name: String,
    line: usize,
    body: Vec<(usize, usize, String)>,
}

fn block_header(t: &str) -> Option<(String, String)> {
    let t = t.strip_suffix(':')?;
    let mut it = t.split_whitespace();
    let kind = it.next()?;
    let name = it.next()?;
    if it.next().is_some() || !matches!(kind, "diffeo" | "field" | "curve" | "system") {
        return None;
    }
    Some((kind.to_string(), name.to_string()))
}

/// Parses a document; `order` overrides the `order` header when given.
pub fn parse_document(text: &str, order: Option<u32>) -> Result<InputDocument, ParseError> {
    let mut dim = None;
    let mut vars: Option<Vec<String>> = None;
    let mut header_order = None;
    let mut backend = Backend::Exact;
    let mut blocks: Vec<Block> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        let t = content.trim();
        if t.is_empty() {
            continue;
        }
        let col = content.len() - content.trim_start().len() + 1;
        if let Some((kind, name)) = block_header(t) {
            blocks.push(Block { kind, name, line, body: Vec::new() });
            continue;
        }
        if let Some(b) = blocks.last_mut() {
            b.body.push((line, col, t.to_string()));
            continue;
        }
        let mut words = t.split_whitespace();
        let key = words.next().unwrap_or("");
        let rest: Vec<&str> = words.collect();
        let one = |what: &str| -> Result<&str, ParseError> {
            match rest.as_slice() {
                [v] => Ok(*v),
                _ => perr(line, col, format!("'{what}' takes exactly one value")),
            }
        };
        match key {
            "dim" => {
                let v: usize = one("dim")?.parse().or_else(|_| perr(line, col, "dim must be a positive integer"))?;
                if !(1..=7).contains(&v) {
                    return perr(line, col, "dim must lie in 1..=7");
                }
                dim = Some(v);
            }
            "vars" => vars = Some(rest.iter().map(|s| s.to_string()).collect()),
            "order" => {
                header_order = Some(one("order")?.parse().or_else(|_| perr(line, col, "order must be a nonnegative integer"))?)
            }
            "backend" => {
                backend = match one("backend")? {
                    "exact" => Backend::Exact,
                    "float" => Backend::Float,
                    other => return perr(line, col, format!("unknown backend '{other}'")),
                }
            }
            _ => return perr(line, col, format!("unknown header '{key}'")),
        }
    }
    let order = match order.or(header_order) {
        Some(o) if o <= 60 => o,
        Some(_) => return perr(1, 1, "order must be at most 60"),
        None => return perr(1, 1, "missing 'order' header"),
    };
    let vars = match (vars, dim) {
        (Some(v), Some(d)) if v.len() != d => return perr(1, 1, format!("'vars' lists {} names for dim {d}", v.len())),
        (Some(v), _) => v,
        (None, Some(d)) => default_vars(d),
        (None, None) => return perr(1, 1, "missing 'dim' header"),
    };
    let dim = vars.len();
    let mut seen = HashSet::new();
    for v in &vars {
        let ok = v.chars().next().is_some_and(|c| c.is_alphabetic() || c == '_')
            && v.chars().all(|c| c.is_alphanumeric() || c == '_');
        if !ok || v == "i" || !seen.insert(v.clone()) {
            return perr(1, 1, format!("invalid or repeated variable name '{v}'"));
        }
    }
    let mut names = HashSet::new();
    let mut objects = Vec::new();
    for b in blocks {
        if !names.insert(b.name.clone()) {
            return perr(b.line, 1, format!("object name '{}' is used twice", b.name));
        }
        let body = match b.kind.as_str() {
            "diffeo" | "field" => {
                if b.body.len() != dim {
                    return perr(b.line, 1, format!("'{}' needs {dim} components, found {}", b.name, b.body.len()));
                }
                let comps = b
                    .body
                    .iter()
                    .map(|(l, c, t)| parse_at(t, &vars, order, *l, *c))
                    .collect::<Result<Vec<_>, _>>()?;
                if b.kind == "diffeo" {
                    Object::Diffeo(comps)
                } else {
                    Object::Field(comps)
                }
            }
            "curve" => {
                if b.body.len() != dim {
                    return perr(b.line, 1, format!("'{}' needs {dim} components, found {}", b.name, b.body.len()));
                }
                let sv = [CURVE_VAR.to_string()];
                let comps = b
                    .body
                    .iter()
                    .map(|(l, c, t)| parse_at(t, &sv, order, *l, *c).map(|j| Series::from_jet(&j)))
                    .collect::<Result<Vec<_>, _>>()?;
                Object::Curve(comps)
            }
            _ => parse_system(&b, order)?,
        };
        objects.push(NamedObject { name: b.name, line: b.line, body });
    }
    Ok(InputDocument { dim, vars, order, backend, objects })
}

fn parse_system(b: &Block, order: u32) -> Result<Object, ParseError> {
    let Some(((l0, c0, first), rows)) = b.body.split_first() else {
        return perr(b.line, 1, "a system block starts with 'rank q'");
    };
    let rank = match first.split_whitespace().collect::<Vec<_>>().as_slice() {
        ["rank", q] => q.parse().or_else(|_| perr(*l0, *c0, "rank must be a nonnegative integer"))?,
        _ => return perr(*l0, *c0, "a system block starts with 'rank q'"),
    };
    let sv = [SYSTEM_VAR.to_string()];
    let mut out = Vec::new();
    for (l, c, t) in rows {
        let mut row = Vec::new();
        let mut offset = 0;
        for piece in t.split(',') {
            row.push(Series::from_jet(&parse_at(piece, &sv, order, *l, c + offset)?));
            offset += piece.chars().count() + 1;
        }
        out.push(row);
    }
    let m = out.len();
    if m == 0 || out.iter().any(|r| r.len() != m) {
        return perr(b.line, 1, format!("system '{}' must have a square matrix", b.name));
    }
    Ok(Object::System { rank, rows: out })
}

impl InputDocument {
    pub fn get(&self, name: &str) -> Option<&NamedObject> {
        self.objects.iter().find(|o| o.name == name)
    }

    /// The named object, or the first one of `kind`.
    pub fn find(&self, kind: &str, name: Option<&str>) -> Option<&NamedObject> {
        match name {
            Some(n) => self.get(n).filter(|o| o.body.kind() == kind),
            None => self.objects.iter().find(|o| o.body.kind() == kind),
        }
    }

    /// Canonical text of the document.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "dim {}\nvars {}\norder {}\nbackend {}\n",
            self.dim,
            self.vars.join(" "),
            self.order,
            self.backend.tag()
        );
        let sv = [CURVE_VAR.to_string()];
        let xv = [SYSTEM_VAR.to_string()];
        for o in &self.objects {
            out.push_str(&format!("\n{} {}:\n", o.body.kind(), o.name));
            match &o.body {
                Object::Diffeo(c) | Object::Field(c) => {
                    for j in c {
                        out.push_str(&format!("  {}\n", print_jet(j, &self.vars)));
                    }
                }
                Object::Curve(c) => {
                    for s in c {
                        out.push_str(&format!("  {}\n", print_jet(&s.to_jet(), &sv)));
                    }
                }
                Object::System { rank, rows } => {
                    out.push_str(&format!("  rank {rank}\n"));
                    for r in rows {
                        let cells: Vec<String> = r.iter().map(|s| print_jet(&s.to_jet(), &xv)).collect();
                        out.push_str(&format!("  {}\n", cells.join(", ")));
                    }
                }
            }
        }
        out
    }
}
