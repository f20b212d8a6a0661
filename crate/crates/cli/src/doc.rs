//! JSON expression documents.
//!
//! ```json
//! {"kind":"gexpr","terms":[{"c":"1","k":0,"a":"1/2"}]}
//! {"kind":"sexpr","terms":[{"c":"1/2","a":"0","m":1}]}
//! {"kind":"lpoly","terms":[{"degree":1,"c":"2"}]}
//! ```
//!
//! Rationals are strings `"p"` or `"p/q"`, so no value passes through a float.

use std::fmt;
use std::str::FromStr;

use l2transform::expr::GTerm;
use l2transform::transform::STerm;
use l2transform::{GExpr, LPoly, Rational, SExpr};
use num::{BigInt, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Gexpr,
    Sexpr,
    Lpoly,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Gexpr => "gexpr",
            Kind::Sexpr => "sexpr",
            Kind::Lpoly => "lpoly",
        })
    }
}

/// A rational carried as a JSON string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatStr(pub Rational);

impl Serialize for RatStr {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(&self.0))
    }
}

impl<'de> Deserialize<'de> for RatStr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = RatStr;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a rational string such as \"3\" or \"-1/2\"")
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<RatStr, E> {
                parse_rational(v).map(RatStr).map_err(E::custom)
            }
        }
        d.deserialize_str(V)
    }
}

pub fn format_rational(q: &Rational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Parses `"p"` or `"p/q"` with an optional leading minus. The result is reduced.
pub fn parse_rational(s: &str) -> Result<Rational, String> {
    let digits = |t: &str| !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit());
    let (body, negative) = match s.strip_prefix('-') {
        Some(rest) => (rest, true),
        None => (s, false),
    };
    let (p, q) = match body.split_once('/') {
        Some((p, q)) => (p, q),
        None => (body, "1"),
    };
    if !digits(p) || !digits(q) {
        return Err(format!("invalid rational {s:?}"));
    }
    let p = BigInt::from_str(p).expect("digits");
    let q = BigInt::from_str(q).expect("digits");
    if q.is_zero() {
        return Err(format!("invalid rational {s:?}: zero denominator"));
    }
    let r = Rational::new(p, q);
    Ok(if negative { -r } else { r })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree: Option<u32>,
    pub c: RatStr,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<RatStr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExprDocument {
    pub kind: Kind,
    pub terms: Vec<TermRecord>,
}

/// A validated document.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    G(GExpr),
    S(SExpr),
    L(LPoly),
}

impl Expr {
    pub fn kind(&self) -> Kind {
        match self {
            Expr::G(_) => Kind::Gexpr,
            Expr::S(_) => Kind::Sexpr,
            Expr::L(_) => Kind::Lpoly,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{message}{}", location(*.line, *.column, .field))]
pub struct SchemaError {
    pub line: Option<usize>,
    pub column: Option<usize>,
    /// Path to the offending field, e.g. `terms[0].c`.
    pub field: Option<String>,
    pub message: String,
}

fn location(line: Option<usize>, column: Option<usize>, field: &Option<String>) -> String {
    let mut s = String::new();
    if let Some(f) = field {
        s += &format!(" at field {f}");
    }
    if let (Some(l), Some(c)) = (line, column) {
        s += &format!(" (line {l}, column {c})");
    }
    s
}

impl SchemaError {
    fn field(field: String, message: String) -> Self {
        SchemaError { line: None, column: None, field: Some(field), message }
    }
}

/// Parses and validates a document.
pub fn parse(text: &str) -> Result<ExprDocument, SchemaError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let doc: ExprDocument = match serde_path_to_error::deserialize(&mut de) {
        Ok(d) => d,
        Err(e) => {
            let path = e.path().to_string();
            let inner = e.into_inner();
            let (line, column) = (inner.line(), inner.column());
            return Err(SchemaError {
                line: (line > 0).then_some(line),
                column: (line > 0).then_some(column),
                field: (path != ".").then_some(path),
                message: strip_position(&inner.to_string()),
            });
        }
    };
    de.end().map_err(|e| SchemaError {
        line: Some(e.line()),
        column: Some(e.column()),
        field: None,
        message: strip_position(&e.to_string()),
    })?;
    doc.validate()?;
    Ok(doc)
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

/// Compact single-line JSON.
pub fn serialize(doc: &ExprDocument) -> String {
    serde_json::to_string(doc).expect("documents always serialize")
}

pub fn parse_expr(text: &str) -> Result<Expr, SchemaError> {
    parse(text)?.to_expr()
}

impl ExprDocument {
    fn validate(&self) -> Result<(), SchemaError> {
        let (need, forbid): (&[&str], &[&str]) = match self.kind {
            Kind::Gexpr => (&["k", "a"], &["m", "degree"]),
            Kind::Sexpr => (&["a", "m"], &["k", "degree"]),
            Kind::Lpoly => (&["degree"], &["k", "a", "m"]),
        };
        for (i, t) in self.terms.iter().enumerate() {
            let present = |f: &str| match f {
                "k" => t.k.is_some(),
                "a" => t.a.is_some(),
                "m" => t.m.is_some(),
                _ => t.degree.is_some(),
            };
            for f in need {
                if !present(f) {
                    return Err(SchemaError::field(
                        format!("terms[{i}].{f}"),
                        format!("missing field `{f}` in a {} term", self.kind),
                    ));
                }
            }
            for f in forbid {
                if present(f) {
                    return Err(SchemaError::field(
                        format!("terms[{i}].{f}"),
                        format!("field `{f}` does not belong in a {} term", self.kind),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn to_expr(&self) -> Result<Expr, SchemaError> {
        self.validate()?;
        let terms = &self.terms;
        Ok(match self.kind {
            Kind::Gexpr => Expr::G(l2transform::expr::canonicalize(
                terms
                    .iter()
                    .map(|t| GTerm::new(t.c.0.clone(), t.k.unwrap(), t.a.clone().unwrap().0))
                    .collect(),
            )),
            Kind::Sexpr => Expr::S(SExpr::from_terms(
                terms
                    .iter()
                    .map(|t| STerm::new(t.c.0.clone(), t.a.clone().unwrap().0, t.m.unwrap()))
                    .collect(),
            )),
            Kind::Lpoly => {
                Expr::L(LPoly::from_terms(terms.iter().map(|t| (t.degree.unwrap(), t.c.0.clone()))))
            }
        })
    }

    pub fn from_expr(e: &Expr) -> Self {
        match e {
            Expr::G(g) => Self::from_gexpr(g),
            Expr::S(s) => Self::from_sexpr(s),
            Expr::L(p) => Self::from_lpoly(p),
        }
    }

    pub fn from_gexpr(g: &GExpr) -> Self {
        let terms = g
            .terms()
            .iter()
            .map(|t| TermRecord {
                degree: None,
                c: RatStr(t.c.clone()),
                k: Some(t.k),
                a: Some(RatStr(t.a.clone())),
                m: None,
            })
            .collect();
        ExprDocument { kind: Kind::Gexpr, terms }
    }

    pub fn from_sexpr(s: &SExpr) -> Self {
        let terms = s
            .terms()
            .iter()
            .map(|t| TermRecord {
                degree: None,
                c: RatStr(t.c.clone()),
                k: None,
                a: Some(RatStr(t.a.clone())),
                m: Some(t.m),
            })
            .collect();
        ExprDocument { kind: Kind::Sexpr, terms }
    }

    pub fn from_lpoly(p: &LPoly) -> Self {
        let terms = p
            .terms()
            .map(|(d, c)| TermRecord { degree: Some(d), c: RatStr(c.clone()), k: None, a: None, m: None })
            .collect();
        ExprDocument { kind: Kind::Lpoly, terms }
    }
}
