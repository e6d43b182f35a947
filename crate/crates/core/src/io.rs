//! JSON file formats for instances, matchings, exact-cover instances,
//! covers, layouts and reduction certificates.
//!
//! Writers emit object keys in sorted order and floats with 17 significant
//! digits, so output is byte-stable and reparses bit-exactly.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::layout::{GridPoint, OrthogonalLayout, Route, Vertex};
use crate::model::{Agent, Instance, Matching, ModelError, Point};
use crate::reduction::ReductionCertificate;
use crate::x3c::{validate_x3c, Cover, X3CInstance};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File { path: String, source: std::io::Error },
    #[error("{origin}:{line}:{column}: at `{field}`: {msg}")]
    Parse { origin: String, line: usize, column: usize, field: String, msg: String },
    #[error("{origin}: at `{field}`: invariant `{invariant}` violated: {detail}")]
    Invariant { origin: String, field: String, invariant: String, detail: String },
}

impl IoError {
    fn invariant(origin: &str, field: impl Into<String>, invariant: &str, detail: impl Into<String>) -> Self {
        IoError::Invariant {
            origin: origin.to_string(),
            field: field.into(),
            invariant: invariant.to_string(),
            detail: detail.into(),
        }
    }
}

// ---------------------------------------------------------------------------
// Canonical JSON text

/// Formats a finite float with 17 significant digits, trailing zeros
/// trimmed.
pub fn format_f64(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0.0".into() } else { "0.0".into() };
    }
    let sci = format!("{x:.16e}");
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    let (sign, mant) = mant.strip_prefix('-').map_or(("", mant), |m| ("-", m));
    let digits: String = mant.chars().filter(|c| *c != '.').collect();
    if !(-7..21).contains(&exp) {
        let frac = digits[1..].trim_end_matches('0');
        let frac = if frac.is_empty() { "0" } else { frac };
        return format!("{sign}{}.{frac}e{exp}", &digits[..1]);
    }
    let (int, frac) = if exp >= 0 {
        let e = exp as usize + 1;
        let padded = format!("{digits:0<width$}", width = e.max(digits.len()));
        (padded[..e].to_string(), padded[e..].to_string())
    } else {
        ("0".to_string(), format!("{}{digits}", "0".repeat((-exp - 1) as usize)))
    };
    let frac = frac.trim_end_matches('0');
    let frac = if frac.is_empty() { "0" } else { frac };
    format!("{sign}{int}.{frac}")
}

fn is_scalar(v: &Value) -> bool {
    !matches!(v, Value::Array(_) | Value::Object(_))
}

fn write_value(v: &Value, indent: usize, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => match (n.as_u64(), n.as_i64(), n.as_f64()) {
            (Some(u), _, _) if !n.is_f64() => out.push_str(&u.to_string()),
            (_, Some(i), _) if !n.is_f64() => out.push_str(&i.to_string()),
            (_, _, Some(f)) => out.push_str(&format_f64(f)),
            _ => out.push_str(&n.to_string()),
        },
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string")),
        Value::Array(items) => {
            if items.iter().all(is_scalar) {
                out.push('[');
                for (k, x) in items.iter().enumerate() {
                    if k > 0 {
                        out.push_str(", ");
                    }
                    write_value(x, indent, out);
                }
                out.push(']');
                return;
            }
            out.push_str("[\n");
            for (k, x) in items.iter().enumerate() {
                out.push_str(&"  ".repeat(indent + 1));
                write_value(x, indent + 1, out);
                out.push_str(if k + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&"  ".repeat(indent));
            out.push(']');
        }
        Value::Object(map) => {
            // serde_json's map keeps keys sorted.
            if map.values().all(is_scalar) {
                out.push('{');
                for (k, (key, x)) in map.iter().enumerate() {
                    if k > 0 {
                        out.push_str(", ");
                    }
                    out.push_str(&serde_json::to_string(key).expect("key"));
                    out.push_str(": ");
                    write_value(x, indent, out);
                }
                out.push('}');
                return;
            }
            out.push_str("{\n");
            for (k, (key, x)) in map.iter().enumerate() {
                out.push_str(&"  ".repeat(indent + 1));
                out.push_str(&serde_json::to_string(key).expect("key"));
                out.push_str(": ");
                write_value(x, indent + 1, out);
                out.push_str(if k + 1 < map.len() { ",\n" } else { "\n" });
            }
            out.push_str(&"  ".repeat(indent));
            out.push('}');
        }
    }
}

/// Canonical text of any serializable value: sorted keys, two-space
/// indentation, scalar-only containers on one line, trailing newline.
pub fn to_canonical_json<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("serializable value");
    let mut out = String::new();
    write_value(&v, 0, &mut out);
    out.push('\n');
    out
}

/// Parses `text`, reporting the line, column and field path on failure.
pub fn parse_json<T: DeserializeOwned>(text: &str, origin: &str) -> Result<T, IoError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let value: T = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        IoError::Parse {
            origin: origin.to_string(),
            line: inner.line(),
            column: inner.column(),
            field,
            msg: inner.to_string(),
        }
    })?;
    de.end().map_err(|e| IoError::Parse {
        origin: origin.to_string(),
        line: e.line(),
        column: e.column(),
        field: ".".into(),
        msg: e.to_string(),
    })?;
    Ok(value)
}

pub fn read_text(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::File { path: path.display().to_string(), source })
}

pub fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    fs::write(path, text).map_err(|source| IoError::File { path: path.display().to_string(), source })
}

fn origin(path: &Path) -> String {
    path.display().to_string()
}

// ---------------------------------------------------------------------------
// Instances

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AgentDoc {
    id: String,
    x: f64,
    y: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tag: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    d: usize,
    tolerance: f64,
    agents: Vec<AgentDoc>,
}

/// Short name of the instance or matching invariant behind `e`.
pub fn invariant_name(e: &ModelError) -> &'static str {
    match e {
        ModelError::UnknownId(_) => "known agent ids",
        ModelError::EmptyId(_) => "non-empty ids",
        ModelError::DuplicateId(_) => "unique ids",
        ModelError::NonFinite(_) => "finite coordinates",
        ModelError::BadD(_) => "d >= 2",
        ModelError::NotDivisible { .. } => "d divides agent count",
        ModelError::BadTolerance(_) => "finite non-negative tolerance",
        ModelError::WrongSize { .. } => "coalition size d",
        ModelError::Overlap(_) => "disjoint coalitions",
        ModelError::Missing(_) => "every agent matched",
        ModelError::NotMember { .. } => "membership",
    }
}

pub fn instance_to_string(inst: &Instance) -> String {
    let doc = InstanceDoc {
        d: inst.d(),
        tolerance: inst.tolerance(),
        agents: inst
            .agents()
            .iter()
            .map(|a| AgentDoc { id: a.id.clone(), x: a.pos.x, y: a.pos.y, tag: a.tag.clone() })
            .collect(),
    };
    to_canonical_json(&doc)
}

pub fn instance_from_str(text: &str, origin: &str) -> Result<Instance, IoError> {
    let doc: InstanceDoc = parse_json(text, origin)?;
    let mut seen = HashMap::new();
    for (k, a) in doc.agents.iter().enumerate() {
        if let Some(prev) = seen.insert(a.id.as_str(), k) {
            return Err(IoError::invariant(
                origin,
                format!("agents[{k}].id"),
                "unique ids",
                format!("`{}` already used by agents[{prev}]", a.id),
            ));
        }
    }
    let agents = doc
        .agents
        .into_iter()
        .map(|a| Agent { id: a.id, pos: Point::new(a.x, a.y), tag: a.tag })
        .collect();
    Instance::new(doc.d, agents, Some(doc.tolerance)).map_err(|e| {
        let field = match &e {
            ModelError::BadD(_) | ModelError::NotDivisible { .. } => "d",
            ModelError::BadTolerance(_) => "tolerance",
            _ => "agents",
        };
        IoError::invariant(origin, field, invariant_name(&e), e.to_string())
    })
}

pub fn read_instance(path: &Path) -> Result<Instance, IoError> {
    instance_from_str(&read_text(path)?, &origin(path))
}

pub fn write_instance(path: &Path, inst: &Instance) -> Result<(), IoError> {
    write_text(path, &instance_to_string(inst))
}

// ---------------------------------------------------------------------------
// Matchings

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatchingDoc {
    coalitions: Vec<Vec<String>>,
}

pub fn matching_to_string(m: &Matching, inst: &Instance) -> String {
    to_canonical_json(&MatchingDoc { coalitions: m.to_ids(inst) })
}

/// Resolves a matching against `inst`; every failure names the offending
/// coalition or member.
pub fn matching_from_str(text: &str, origin: &str, inst: &Instance) -> Result<Matching, IoError> {
    let doc: MatchingDoc = parse_json(text, origin)?;
    let mut owner: HashMap<usize, usize> = HashMap::new();
    for (j, c) in doc.coalitions.iter().enumerate() {
        if c.len() != inst.d() {
            return Err(IoError::invariant(
                origin,
                format!("coalitions[{j}]"),
                "coalition size d",
                format!("{} members, expected {}", c.len(), inst.d()),
            ));
        }
        for (k, id) in c.iter().enumerate() {
            let field = format!("coalitions[{j}][{k}]");
            let a = inst
                .lookup(id)
                .map_err(|e| IoError::invariant(origin, field.clone(), invariant_name(&e), e.to_string()))?;
            if let Some(prev) = owner.insert(a, j) {
                return Err(IoError::invariant(
                    origin,
                    field,
                    "disjoint coalitions",
                    format!("`{id}` already in coalitions[{prev}]"),
                ));
            }
        }
    }
    Matching::from_ids(inst, &doc.coalitions)
        .map_err(|e| IoError::invariant(origin, "coalitions", invariant_name(&e), e.to_string()))
}

pub fn read_matching(path: &Path, inst: &Instance) -> Result<Matching, IoError> {
    matching_from_str(&read_text(path)?, &origin(path), inst)
}

pub fn write_matching(path: &Path, m: &Matching, inst: &Instance) -> Result<(), IoError> {
    write_text(path, &matching_to_string(m, inst))
}

// ---------------------------------------------------------------------------
// Exact-cover instances and covers

pub fn x3c_to_string(x: &X3CInstance) -> String {
    to_canonical_json(x)
}

/// Parses without structural validation.
pub fn x3c_from_str_unchecked(text: &str, origin: &str) -> Result<X3CInstance, IoError> {
    parse_json(text, origin)
}

/// Parses and rejects instances failing `validate_x3c`.
pub fn x3c_from_str(text: &str, origin: &str) -> Result<X3CInstance, IoError> {
    let x = x3c_from_str_unchecked(text, origin)?;
    let rep = validate_x3c(&x);
    if let Some(c) = rep.failures().first() {
        return Err(IoError::invariant(origin, "sets", &c.name, c.detail.clone()));
    }
    Ok(x)
}

pub fn read_x3c(path: &Path) -> Result<X3CInstance, IoError> {
    x3c_from_str(&read_text(path)?, &origin(path))
}

pub fn read_x3c_unchecked(path: &Path) -> Result<X3CInstance, IoError> {
    x3c_from_str_unchecked(&read_text(path)?, &origin(path))
}

pub fn write_x3c(path: &Path, x: &X3CInstance) -> Result<(), IoError> {
    write_text(path, &x3c_to_string(x))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoverDoc {
    /// One-based set indices.
    sets: Vec<usize>,
}

pub fn cover_to_string(c: &Cover) -> String {
    let mut sets: Vec<usize> = c.0.iter().map(|j| j + 1).collect();
    sets.sort_unstable();
    to_canonical_json(&CoverDoc { sets })
}

pub fn cover_from_str(text: &str, origin: &str) -> Result<Cover, IoError> {
    let doc: CoverDoc = parse_json(text, origin)?;
    if let Some(k) = doc.sets.iter().position(|&j| j == 0) {
        return Err(IoError::invariant(origin, format!("sets[{k}]"), "one-based set indices", "got 0"));
    }
    let mut v: Vec<usize> = doc.sets.iter().map(|j| j - 1).collect();
    v.sort_unstable();
    Ok(Cover(v))
}

pub fn read_cover(path: &Path) -> Result<Cover, IoError> {
    cover_from_str(&read_text(path)?, &origin(path))
}

pub fn write_cover(path: &Path, c: &Cover) -> Result<(), IoError> {
    write_text(path, &cover_to_string(c))
}

// ---------------------------------------------------------------------------
// Layouts

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeDoc {
    u: String,
    v: String,
    bend: Option<[i64; 2]>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayoutDoc {
    vertices: BTreeMap<String, [i64; 2]>,
    edges: Vec<EdgeDoc>,
}

pub fn layout_to_string(layout: &OrthogonalLayout) -> Result<String, IoError> {
    let vertices = layout.positions.iter().map(|(v, p)| (v.to_string(), [p.0, p.1])).collect();
    let mut edges = Vec::with_capacity(layout.routes.len());
    for (k, r) in layout.routes.iter().enumerate() {
        if r.bends.len() > 1 {
            return Err(IoError::invariant(
                "<layout>",
                format!("edges[{k}]"),
                "at most one bend",
                format!("u{}-w{} has {} bends", r.element, r.set, r.bends.len()),
            ));
        }
        edges.push(EdgeDoc {
            u: Vertex::U(r.element).to_string(),
            v: Vertex::W(r.set).to_string(),
            bend: r.bends.first().map(|b| [b.0, b.1]),
        });
    }
    Ok(to_canonical_json(&LayoutDoc { vertices, edges }))
}

/// Parses a layout; edge endpoints may be given in either order.
pub fn layout_from_str(text: &str, origin: &str) -> Result<OrthogonalLayout, IoError> {
    let doc: LayoutDoc = parse_json(text, origin)?;
    let mut positions = BTreeMap::new();
    for (name, p) in &doc.vertices {
        let v: Vertex = name
            .parse()
            .map_err(|e: String| IoError::invariant(origin, format!("vertices.{name}"), "vertex names", e))?;
        positions.insert(v, (p[0], p[1]));
    }
    let mut routes = Vec::with_capacity(doc.edges.len());
    for (k, e) in doc.edges.iter().enumerate() {
        let parse = |s: &str, f: &str| {
            s.parse::<Vertex>()
                .map_err(|m| IoError::invariant(origin, format!("edges[{k}].{f}"), "vertex names", m))
        };
        let (element, set) = match (parse(&e.u, "u")?, parse(&e.v, "v")?) {
            (Vertex::U(i), Vertex::W(j)) | (Vertex::W(j), Vertex::U(i)) => (i, j),
            _ => {
                return Err(IoError::invariant(
                    origin,
                    format!("edges[{k}]"),
                    "bipartite edges",
                    format!("{} - {} joins two vertices of one side", e.u, e.v),
                ))
            }
        };
        let bends: Vec<GridPoint> = e.bend.iter().map(|b| (b[0], b[1])).collect();
        routes.push(Route { element, set, bends });
    }
    Ok(OrthogonalLayout { positions, routes })
}

pub fn read_layout(path: &Path) -> Result<OrthogonalLayout, IoError> {
    layout_from_str(&read_text(path)?, &origin(path))
}

pub fn write_layout(path: &Path, layout: &OrthogonalLayout) -> Result<(), IoError> {
    write_text(path, &layout_to_string(layout)?)
}

// ---------------------------------------------------------------------------
// Certificates

pub fn certificate_to_string(cert: &ReductionCertificate) -> String {
    to_canonical_json(cert)
}

pub fn certificate_from_str(text: &str, origin: &str) -> Result<ReductionCertificate, IoError> {
    let cert: ReductionCertificate = parse_json(text, origin)?;
    if cert.params.d < 3 {
        return Err(IoError::invariant(origin, "params.d", "d >= 3", format!("got {}", cert.params.d)));
    }
    let incidences = 3 * cert.x3c.sets.len();
    if cert.edges.len() != incidences {
        return Err(IoError::invariant(
            origin,
            "edges",
            "one chain per incidence",
            format!("{} edges, expected {incidences}", cert.edges.len()),
        ));
    }
    Ok(cert)
}

pub fn read_certificate(path: &Path) -> Result<ReductionCertificate, IoError> {
    certificate_from_str(&read_text(path)?, &origin(path))
}

pub fn write_certificate(path: &Path, cert: &ReductionCertificate) -> Result<(), IoError> {
    write_text(path, &certificate_to_string(cert))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gadgets::{build_star3, Pose, Star3Params};
    use crate::layout::{validate_layout, OrthogonalLayout};
    use crate::x3c::associated_graph;
    use proptest::prelude::*;

    fn star3() -> Instance {
        let s = build_star3(Pose::default(), Star3Params::default(), true).unwrap();
        Instance::new(3, s.agents, None).unwrap()
    }

    #[test]
    fn float_format_examples() {
        assert_eq!(format_f64(8.0), "8.0");
        assert_eq!(format_f64(-0.0), "-0.0");
        assert_eq!(format_f64(0.1), "0.10000000000000001");
        assert_eq!(format_f64(1e-9), "1.0000000000000001e-9");
        assert_eq!(format_f64(123456.5), "123456.5");
        assert_eq!(format_f64(1e21), "1.0e21");
        assert_eq!(format_f64(5e-324), "4.9406564584124654e-324");
    }

    proptest! {
        #[test]
        fn float_format_reparses_bit_exact(bits in any::<u64>()) {
            let x = f64::from_bits(bits);
            prop_assume!(x.is_finite());
            let s = format_f64(x);
            let back: f64 = serde_json::from_str(&s).unwrap();
            prop_assert_eq!(back.to_bits(), x.to_bits(), "{}", s);
            let sig = s.trim_start_matches('-').split('e').next().unwrap().chars().filter(|c| c.is_ascii_digit()).collect::<String>();
            prop_assert!(sig.trim_start_matches('0').trim_end_matches('0').len() <= 17, "{}", s);
        }
    }

    #[test]
    fn star3_roundtrip_is_bit_identical() {
        let inst = star3();
        let text = instance_to_string(&inst);
        let back = instance_from_str(&text, "star3").unwrap();
        assert_eq!(back, inst);
        for (a, b) in inst.agents().iter().zip(back.agents()) {
            assert_eq!(a.pos.x.to_bits(), b.pos.x.to_bits());
            assert_eq!(a.pos.y.to_bits(), b.pos.y.to_bits());
        }
        assert_eq!(instance_to_string(&back), text);
    }

    #[test]
    fn keys_are_sorted() {
        let text = instance_to_string(&star3());
        let first = text.lines().nth(3).unwrap();
        let i = first.find("\"id\"").unwrap();
        let t = first.find("\"tag\"").unwrap();
        let x = first.find("\"x\"").unwrap();
        assert!(i < t && t < x, "{first}");
        let top: Vec<&str> = text.lines().filter(|l| l.starts_with("  \"")).collect();
        assert!(top[0].contains("agents") && top[1].contains("\"d\"") && top[2].contains("tolerance"));
    }

    #[test]
    fn matching_roundtrip_and_unknown_id() {
        let inst = star3();
        let groups = vec![
            vec!["5", "10", "11"],
            vec!["1", "6", "8"],
            vec!["2", "3", "7"],
            vec!["0", "4", "9"],
        ];
        let m = Matching::from_ids(&inst, &groups).unwrap();
        let text = matching_to_string(&m, &inst);
        assert_eq!(matching_from_str(&text, "m", &inst).unwrap(), m);

        let bad = text.replace("\"9\"", "\"nine\"");
        let err = matching_from_str(&bad, "m.json", &inst).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("m.json") && msg.contains("coalitions[") && msg.contains("nine"), "{msg}");
    }

    #[test]
    fn parse_errors_are_located() {
        let err = instance_from_str("{\n  \"d\": 3,\n  \"tolerance\": \"x\",\n  \"agents\": []\n}", "i.json").unwrap_err();
        match err {
            IoError::Parse { line, field, .. } => {
                assert_eq!(line, 3);
                assert_eq!(field, "tolerance");
            }
            other => panic!("{other}"),
        }
        let text = "{\"d\": 3, \"tolerance\": 0.0, \"agents\": [{\"id\": \"a\", \"x\": 0, \"y\": 0}, {\"id\": \"a\", \"x\": 1, \"y\": 0}, {\"id\": \"b\", \"x\": 2, \"y\": 0}]}";
        let err = instance_from_str(text, "i.json").unwrap_err().to_string();
        assert!(err.contains("agents[1].id") && err.contains("unique ids"), "{err}");
        let text = "{\"d\": 2, \"tolerance\": 0.0, \"agents\": [{\"id\": \"a\", \"x\": 0, \"y\": 0}]}";
        let err = instance_from_str(text, "i.json").unwrap_err().to_string();
        assert!(err.contains("d divides agent count"), "{err}");
    }

    #[test]
    fn x3c_fixture_file_validates() {
        let text = x3c_to_string(&X3CInstance::prism());
        let x = x3c_from_str(&text, "x3c").unwrap();
        assert!(validate_x3c(&x).passed());
        assert_eq!(x, X3CInstance::prism());
        let mut bad = X3CInstance::prism();
        bad.sets[0] = [1, 2, 3];
        let err = x3c_from_str(&x3c_to_string(&bad), "x3c").unwrap_err();
        assert!(matches!(err, IoError::Invariant { .. }));
    }

    #[test]
    fn layout_roundtrip() {
        let lay = OrthogonalLayout::prism_fixture();
        let text = layout_to_string(&lay).unwrap();
        let back = layout_from_str(&text, "layout").unwrap();
        assert_eq!(back, lay);
        assert!(validate_layout(&associated_graph(&X3CInstance::prism()), &back).passed());
        assert!(text.contains("\"bend\": null") && text.contains("\"bend\": [8, 0]"));
    }

    #[test]
    fn cover_roundtrip_is_one_based() {
        let c = Cover(vec![0, 4]);
        let text = cover_to_string(&c);
        assert_eq!(text, "{\n  \"sets\": [1, 5]\n}\n");
        assert_eq!(cover_from_str(&text, "c").unwrap(), c);
        assert!(cover_from_str("{\"sets\": [0]}", "c").is_err());
    }

    #[test]
    fn certificate_and_reduced_instance_roundtrip() {
        use crate::reduction::{reduce, ReductionParams};
        let red = reduce(&X3CInstance::prism(), &OrthogonalLayout::prism_fixture(), ReductionParams::new(4)).unwrap();
        let text = certificate_to_string(&red.certificate);
        assert_eq!(certificate_to_string(&red.certificate), text);
        let back = certificate_from_str(&text, "cert").unwrap();
        assert_eq!(back, red.certificate);
        let inst_text = instance_to_string(&red.instance);
        assert_eq!(instance_from_str(&inst_text, "inst").unwrap(), red.instance);
    }
}
