//! Plain-text obstacle and phase descriptions.
//!
//! One `key = value` pair per line, `#` starts a comment. `dim` is the ambient dimension `n`,
//! so polynomial terms carry `n - 1` exponents:
//!
//! ```text
//! dim = 3
//! kind = polynomial
//! radius = 1
//! term = 1 0 0
//! term = -1 4 0
//! term = -1 0 2
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use glancing::diffgeo::HProfile;
use glancing::phases::IncomingPhase;
use glancing::Obstacle;
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq)]
pub struct SpecError {
    pub file: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for SpecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "{}:{}: {}", self.file, l, self.message),
            None => write!(f, "{}: {}", self.file, self.message),
        }
    }
}

impl std::error::Error for SpecError {}

struct Entry {
    line: usize,
    value: String,
}

struct Parsed {
    file: String,
    single: BTreeMap<String, Entry>,
    terms: Vec<Entry>,
}

impl Parsed {
    fn err(&self, line: Option<usize>, message: impl Into<String>) -> SpecError {
        SpecError { file: self.file.clone(), line, message: message.into() }
    }

    fn get(&self, key: &str) -> Option<&Entry> {
        self.single.get(key)
    }

    fn require(&self, key: &str) -> Result<&Entry, SpecError> {
        self.get(key).ok_or_else(|| self.err(None, format!("missing key `{key}`")))
    }

    fn numbers(&self, e: &Entry) -> Result<Vec<f64>, SpecError> {
        e.value
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| self.err(Some(e.line), format!("not a number: `{t}`"))))
            .collect()
    }

    fn number(&self, e: &Entry) -> Result<f64, SpecError> {
        match self.numbers(e)?.as_slice() {
            [x] => Ok(*x),
            v => Err(self.err(Some(e.line), format!("expected one number, found {}", v.len()))),
        }
    }

    fn vector(&self, e: &Entry, len: usize) -> Result<DVector<f64>, SpecError> {
        let v = self.numbers(e)?;
        if v.len() != len {
            return Err(self.err(Some(e.line), format!("expected {len} numbers, found {}", v.len())));
        }
        Ok(DVector::from_vec(v))
    }
}

fn tokenize(file: &str, text: &str, allowed: &[&str]) -> Result<Parsed, SpecError> {
    let mut p = Parsed { file: file.to_string(), single: BTreeMap::new(), terms: Vec::new() };
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((k, v)) = content.split_once('=') else {
            return Err(p.err(Some(line), format!("expected `key = value`, found `{content}`")));
        };
        let key = k.trim().to_string();
        let value = v.trim().to_string();
        if !allowed.contains(&key.as_str()) {
            return Err(p.err(Some(line), format!("unknown key `{key}`")));
        }
        if value.is_empty() {
            return Err(p.err(Some(line), format!("empty value for `{key}`")));
        }
        if key == "term" {
            p.terms.push(Entry { line, value });
        } else if let Some(prev) = p.single.get(&key) {
            return Err(p.err(Some(line), format!("duplicate key `{key}` (first on line {})", prev.line)));
        } else {
            p.single.insert(key, Entry { line, value });
        }
    }
    Ok(p)
}

const OBSTACLE_KEYS: &[&str] = &["dim", "kind", "radius", "term", "hcoeffs", "h", "lambda", "name"];
const PHASE_KEYS: &[&str] = &["kind", "theta", "b", "center", "radius"];

fn dimension(p: &Parsed) -> Result<usize, SpecError> {
    let e = p.require("dim")?;
    match e.value.parse::<usize>() {
        Ok(n) if n >= 2 => Ok(n),
        _ => Err(p.err(Some(e.line), format!("`dim` must be an integer at least 2, found `{}`", e.value))),
    }
}

/// Parses an obstacle description; `file` only labels diagnostics.
pub fn parse_obstacle(file: &str, text: &str) -> Result<Obstacle, SpecError> {
    let p = tokenize(file, text, OBSTACLE_KEYS)?;
    let n = dimension(&p)?;
    let m = n - 1;
    // Patch radius; the unit sphere needs a patch strictly inside its rim.
    let radius_given = match p.get("radius") {
        Some(e) => {
            let r = p.number(e)?;
            if !(r > 0.0 && r.is_finite()) {
                return Err(p.err(Some(e.line), "`radius` must be positive"));
            }
            Some(r)
        }
        None => None,
    };
    let kind = p.require("kind")?;
    let radius = radius_given.unwrap_or(1.0);
    let forbid = |keys: &[&str]| -> Result<(), SpecError> {
        for k in keys {
            if let Some(e) = p.get(k) {
                return Err(p.err(Some(e.line), format!("`{k}` does not apply to kind `{}`", kind.value)));
            }
        }
        if !keys.contains(&"term") {
            return Ok(());
        }
        match p.terms.first() {
            Some(e) => Err(p.err(Some(e.line), format!("`term` does not apply to kind `{}`", kind.value))),
            None => Ok(()),
        }
    };
    let anchor = |e: &Entry, err: glancing::Error| p.err(Some(e.line), err.to_string());
    match kind.value.as_str() {
        "polynomial" => {
            forbid(&["hcoeffs", "h", "lambda", "name"])?;
            if p.terms.is_empty() {
                return Err(p.err(Some(kind.line), "polynomial obstacle without `term` lines"));
            }
            let mut terms = Vec::with_capacity(p.terms.len());
            for e in &p.terms {
                let v = p.numbers(e)?;
                if v.len() != m + 1 {
                    return Err(p.err(
                        Some(e.line),
                        format!("a term needs a coefficient and {m} exponents, found {} numbers", v.len()),
                    ));
                }
                let mut exps = Vec::with_capacity(m);
                for x in &v[1..] {
                    if *x < 0.0 || x.fract() != 0.0 || *x > u32::MAX as f64 {
                        return Err(p.err(Some(e.line), format!("exponent must be a nonnegative integer, found {x}")));
                    }
                    exps.push(*x as u32);
                }
                terms.push((exps, v[0]));
            }
            // Normalization problems are reported on the offending term.
            let mut constant = None;
            for (i, (e, c)) in terms.iter().enumerate() {
                let line = Some(p.terms[i].line);
                if let Some(j) = terms[..i].iter().position(|(f, _)| f == e) {
                    return Err(p.err(line, format!("repeated exponents (also on line {})", p.terms[j].line)));
                }
                match e.iter().sum::<u32>() {
                    0 => constant = Some((i, *c)),
                    1 if *c != 0.0 => return Err(p.err(line, "linear terms are not allowed: the apex must be a maximum")),
                    _ => {}
                }
            }
            match constant {
                Some((_, c)) if c == 1.0 => {}
                Some((i, c)) => return Err(p.err(Some(p.terms[i].line), format!("constant term must be 1, found {c}"))),
                None => return Err(p.err(Some(kind.line), "constant term must be 1, found none")),
            }
            Obstacle::polynomial(m, terms, radius).map_err(|err| anchor(&p.terms[0], err))
        }
        "symmetric-h" => {
            forbid(&["term", "name"])?;
            let profile = match (p.get("hcoeffs"), p.get("h")) {
                (Some(e), None) => HProfile::Taylor(p.numbers(e)?),
                (None, Some(e)) => {
                    let parts: Vec<&str> = e.value.split_whitespace().collect();
                    match parts.as_slice() {
                        ["exp-flat"] => HProfile::ExpFlat,
                        ["sphere", r] => HProfile::Sphere {
                            radius: r.parse().map_err(|_| p.err(Some(e.line), format!("not a number: `{r}`")))?,
                        },
                        _ => {
                            return Err(p.err(
                                Some(e.line),
                                format!("unknown profile `{}` (expected `exp-flat` or `sphere <radius>`)", e.value),
                            ))
                        }
                    }
                }
                (Some(_), Some(e)) => return Err(p.err(Some(e.line), "give either `hcoeffs` or `h`, not both")),
                (None, None) => return Err(p.err(Some(kind.line), "symmetric-h obstacle needs `hcoeffs` or `h`")),
            };
            let lambda = match p.get("lambda") {
                Some(e) => {
                    let v = p.numbers(e)?;
                    if v.len() != m * m {
                        return Err(p.err(Some(e.line), format!("`lambda` needs {} entries, found {}", m * m, v.len())));
                    }
                    DMatrix::from_row_slice(m, m, &v)
                }
                None => DMatrix::identity(m, m),
            };
            let line = p.get("hcoeffs").or(p.get("h")).map(|e| e.line);
            Obstacle::symmetric(profile, lambda, radius).map_err(|err| p.err(line, err.to_string()))
        }
        "builtin" => {
            forbid(&["term", "hcoeffs", "h", "lambda"])?;
            let e = p.require("name")?;
            match e.value.as_str() {
                "exp-flat" => Obstacle::symmetric(HProfile::ExpFlat, DMatrix::identity(m, m), radius),
                "sphere" => Obstacle::symmetric(
                    HProfile::Sphere { radius: 1.0 },
                    DMatrix::identity(m, m),
                    radius_given.unwrap_or(0.9),
                ),
                other => {
                    return Err(p.err(Some(e.line), format!("unknown builtin `{other}` (expected `exp-flat` or `sphere`)")))
                }
            }
            .map_err(|err| anchor(e, err))
        }
        other => Err(p.err(
            Some(kind.line),
            format!("unknown kind `{other}` (expected polynomial, symmetric-h or builtin)"),
        )),
    }
}

/// Parses a phase description for an ambient dimension `n`.
pub fn parse_phase(file: &str, text: &str, n: usize) -> Result<IncomingPhase, SpecError> {
    let p = tokenize(file, text, PHASE_KEYS)?;
    let kind = p.require("kind")?;
    let only = |keys: &[&str]| -> Result<(), SpecError> {
        for (k, e) in &p.single {
            if k != "kind" && !keys.contains(&k.as_str()) {
                return Err(p.err(Some(e.line), format!("`{k}` does not apply to kind `{}`", kind.value)));
            }
        }
        Ok(())
    };
    match kind.value.as_str() {
        "plane" => {
            only(&["theta"])?;
            let e = p.require("theta")?;
            IncomingPhase::plane(p.vector(e, n)?).map_err(|err| p.err(Some(e.line), err.to_string()))
        }
        "spherical" => {
            only(&["b"])?;
            let e = p.require("b")?;
            Ok(IncomingPhase::spherical(p.vector(e, n)?))
        }
        "convex-distance" => {
            only(&["center", "radius"])?;
            let c = p.require("center")?;
            let r = p.require("radius")?;
            let radius = p.number(r)?;
            if !(radius > 0.0) {
                return Err(p.err(Some(r.line), "`radius` must be positive"));
            }
            Ok(IncomingPhase::convex_distance(p.vector(c, n)?, radius))
        }
        other => Err(p.err(
            Some(kind.line),
            format!("unknown kind `{other}` (expected plane, spherical or convex-distance)"),
        )),
    }
}

fn read(path: &Path) -> Result<String, SpecError> {
    std::fs::read_to_string(path).map_err(|e| SpecError {
        file: path.display().to_string(),
        line: None,
        message: format!("cannot read: {e}"),
    })
}

pub fn load_obstacle(path: &Path) -> Result<Obstacle, SpecError> {
    parse_obstacle(&path.display().to_string(), &read(path)?)
}

pub fn load_phase(path: &Path, n: usize) -> Result<IncomingPhase, SpecError> {
    parse_phase(&path.display().to_string(), &read(path)?, n)
}
