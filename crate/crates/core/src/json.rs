//! JSON schemas for spaces, module specs, L0 values, and elements, plus
//! deterministic writers (sorted by atom order, 17 significant digits).

use serde::Deserialize;

use crate::dual::RandomFunctional;
use crate::error::{Error, Result};
use crate::measure::{FiniteProbSpace, L0Real};
use crate::module::{FiberNorm, ModuleElement, RnModuleSpec};

const LOAD_WEIGHT_TOL: f64 = 1e-9;

#[derive(Deserialize)]
struct SpaceFile {
    atoms: Vec<AtomEntry>,
}

#[derive(Deserialize)]
struct AtomEntry {
    id: String,
    weight: f64,
    #[serde(default)]
    dim: Option<usize>,
    #[serde(default)]
    norm: Option<NormEntry>,
}

#[derive(Deserialize)]
#[serde(tag = "kind")]
enum NormEntry {
    #[serde(rename = "euclid")]
    Euclid,
    #[serde(rename = "pnorm")]
    Pnorm { p: f64 },
}

fn parse_space_file(text: &str) -> Result<SpaceFile> {
    let file: SpaceFile =
        serde_json::from_str(text).map_err(|e| Error::schema(format!("invalid JSON: {e}")))?;
    if file.atoms.is_empty() {
        return Err(Error::schema("space must have at least one atom"));
    }
    let sum: f64 = file.atoms.iter().map(|a| a.weight).sum();
    if (sum - 1.0).abs() > LOAD_WEIGHT_TOL {
        return Err(Error::schema(format!(
            "atom weights sum to {sum}, expected 1 within {LOAD_WEIGHT_TOL:e}"
        )));
    }
    Ok(file)
}

/// Loads a bare probability space. Weights are validated to sum to 1 within 1e-9
/// and then normalized exactly.
pub fn space_from_json(text: &str) -> Result<FiniteProbSpace> {
    let file = parse_space_file(text)?;
    let sum: f64 = file.atoms.iter().map(|a| a.weight).sum();
    FiniteProbSpace::new(
        file.atoms
            .into_iter()
            .map(|a| (a.id, a.weight / sum))
            .collect(),
    )
}

/// Loads a module spec: atoms with `dim` and an optional `norm` (Euclidean when
/// omitted).
pub fn spec_from_json(text: &str) -> Result<RnModuleSpec> {
    let file = parse_space_file(text)?;
    let sum: f64 = file.atoms.iter().map(|a| a.weight).sum();
    let mut atoms = Vec::with_capacity(file.atoms.len());
    let mut fibers = Vec::with_capacity(file.atoms.len());
    for a in file.atoms {
        let dim = a.dim.ok_or_else(|| {
            Error::schema(format!("atom '{}' is missing the fiber dimension", a.id))
        })?;
        let norm = match a.norm {
            None | Some(NormEntry::Euclid) => FiberNorm::Euclidean,
            Some(NormEntry::Pnorm { p }) => FiberNorm::PNorm(p),
        };
        atoms.push((a.id, a.weight / sum));
        fibers.push((dim, norm));
    }
    RnModuleSpec::new(FiniteProbSpace::new(atoms)?, fibers)
}

/// Whether the file carries fiber dimensions (i.e. is a module spec).
pub fn json_has_dims(text: &str) -> Result<bool> {
    let file = parse_space_file(text)?;
    Ok(file.atoms.iter().any(|a| a.dim.is_some()))
}

#[derive(Deserialize)]
struct L0File {
    values: serde_json::Map<String, serde_json::Value>,
}

/// Loads an L0 value table; every atom of the space must appear exactly once.
pub fn l0_from_json(text: &str, space: &FiniteProbSpace) -> Result<L0Real> {
    let file: L0File =
        serde_json::from_str(text).map_err(|e| Error::schema(format!("invalid JSON: {e}")))?;
    let mut values = vec![f64::NAN; space.len()];
    let mut seen = vec![false; space.len()];
    for (id, value) in &file.values {
        let idx = space
            .index_of(id)
            .ok_or_else(|| Error::schema(format!("atom id '{id}' not in space")))?;
        let v = value
            .as_f64()
            .ok_or_else(|| Error::schema(format!("value at atom '{id}' is not a number")))?;
        values[idx] = v;
        seen[idx] = true;
    }
    for (i, &s) in seen.iter().enumerate() {
        if !s {
            return Err(Error::schema(format!(
                "missing value for atom '{}'",
                space.id(i)
            )));
        }
    }
    space.l0(values)
}

#[derive(Deserialize)]
struct VectorFile {
    values: serde_json::Map<String, serde_json::Value>,
}

fn fibers_from_json(text: &str, spec: &RnModuleSpec) -> Result<Vec<Vec<f64>>> {
    let file: VectorFile =
        serde_json::from_str(text).map_err(|e| Error::schema(format!("invalid JSON: {e}")))?;
    let space = spec.space();
    let mut fibers: Vec<Option<Vec<f64>>> = vec![None; space.len()];
    for (id, value) in &file.values {
        let idx = space
            .index_of(id)
            .ok_or_else(|| Error::schema(format!("atom id '{id}' not in space")))?;
        let arr = value
            .as_array()
            .ok_or_else(|| Error::schema(format!("value at atom '{id}' is not an array")))?;
        let mut v = Vec::with_capacity(arr.len());
        for entry in arr {
            v.push(
                entry
                    .as_f64()
                    .ok_or_else(|| Error::schema(format!("non-numeric entry at atom '{id}'")))?,
            );
        }
        fibers[idx] = Some(v);
    }
    let mut out = Vec::with_capacity(space.len());
    for (i, f) in fibers.into_iter().enumerate() {
        match f {
            Some(v) => out.push(v),
            // Zero-dimensional fibers may be omitted.
            None if spec.dim(i) == 0 => out.push(Vec::new()),
            None => {
                return Err(Error::schema(format!(
                    "missing fiber for atom '{}'",
                    space.id(i)
                )))
            }
        }
    }
    Ok(out)
}

pub fn element_from_json(text: &str, spec: &RnModuleSpec) -> Result<ModuleElement> {
    spec.element(fibers_from_json(text, spec)?)
}

pub fn functional_from_json(text: &str, spec: &RnModuleSpec) -> Result<RandomFunctional> {
    RandomFunctional::new(spec.clone(), fibers_from_json(text, spec)?)
}

/// 17-significant-digit rendering used for every numeric output.
pub fn fmt_f64(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v }; // normalize -0.0
    format!("{v:.16e}")
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out
}

/// L0 value table in space order.
pub fn l0_to_json(v: &L0Real) -> String {
    let space = v.space();
    let body: Vec<String> = (0..space.len())
        .map(|i| format!("\"{}\": {}", escape(space.id(i)), fmt_f64(v.get(i))))
        .collect();
    format!("{{\"values\": {{{}}}}}", body.join(", "))
}

/// Element (or functional) fiber table in space order.
pub fn element_to_json(x: &ModuleElement) -> String {
    let space = x.spec().space();
    let body: Vec<String> = (0..space.len())
        .map(|i| {
            let entries: Vec<String> = x.fiber(i).iter().map(|&v| fmt_f64(v)).collect();
            format!("\"{}\": [{}]", escape(space.id(i)), entries.join(", "))
        })
        .collect();
    format!("{{\"values\": {{{}}}}}", body.join(", "))
}

/// Minimal deterministic JSON builder for report payloads.
pub enum JsonValue {
    Num(f64),
    Int(i64),
    Bool(bool),
    Str(String),
    Arr(Vec<JsonValue>),
    Obj(Vec<(String, JsonValue)>),
    /// A fragment that is already valid JSON.
    Raw(String),
}

impl JsonValue {
    pub fn render(&self) -> String {
        match self {
            JsonValue::Num(v) => fmt_f64(*v),
            JsonValue::Int(v) => v.to_string(),
            JsonValue::Bool(b) => b.to_string(),
            JsonValue::Str(s) => format!("\"{}\"", escape(s)),
            JsonValue::Arr(items) => {
                let body: Vec<String> = items.iter().map(|i| i.render()).collect();
                format!("[{}]", body.join(", "))
            }
            JsonValue::Obj(fields) => {
                let body: Vec<String> = fields
                    .iter()
                    .map(|(k, v)| format!("\"{}\": {}", escape(k), v.render()))
                    .collect();
                format!("{{{}}}", body.join(", "))
            }
            JsonValue::Raw(s) => s.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SPACE: &str = r#"{"atoms":[{"id":"a","weight":0.5},{"id":"b","weight":0.5}]}"#;
    const SPEC: &str = r#"{"atoms":[
        {"id":"a","weight":0.5,"dim":2,"norm":{"kind":"euclid"}},
        {"id":"b","weight":0.5,"dim":1,"norm":{"kind":"pnorm","p":3.0}}
    ]}"#;

    #[test]
    fn space_roundtrip() {
        let sp = space_from_json(SPACE).unwrap();
        assert_eq!(sp.atom_ids(), &["a".to_string(), "b".to_string()]);
        assert_eq!(sp.weights(), &[0.5, 0.5]);
        assert!(!json_has_dims(SPACE).unwrap());
        assert!(json_has_dims(SPEC).unwrap());
    }

    #[test]
    fn bad_weight_sum_is_schema_error() {
        let bad = r#"{"atoms":[{"id":"a","weight":0.5},{"id":"b","weight":0.4}]}"#;
        assert!(matches!(space_from_json(bad), Err(Error::Schema(_))));
    }

    #[test]
    fn near_one_weights_are_normalized() {
        let close = r#"{"atoms":[{"id":"a","weight":0.5000000001},{"id":"b","weight":0.5}]}"#;
        let sp = space_from_json(close).unwrap();
        let sum: f64 = sp.weights().iter().sum();
        assert!((sum - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn spec_and_element_loading() {
        let spec = spec_from_json(SPEC).unwrap();
        assert_eq!(spec.dim(0), 2);
        assert_eq!(spec.norm(1), FiberNorm::PNorm(3.0));
        let x = element_from_json(r#"{"values":{"a":[3.0,4.0],"b":[-2.0]}}"#, &spec).unwrap();
        assert_eq!(x.random_norm().values(), &[5.0, 2.0]);
        assert!(element_from_json(r#"{"values":{"a":[3.0,4.0]}}"#, &spec).is_err());
        assert!(element_from_json(r#"{"values":{"a":[3.0],"b":[1.0]}}"#, &spec).is_err());
        assert!(element_from_json(r#"{"values":{"a":[3.0,4.0],"zz":[1.0]}}"#, &spec).is_err());
    }

    #[test]
    fn l0_loading_and_writing() {
        let sp = space_from_json(SPACE).unwrap();
        let v = l0_from_json(r#"{"values":{"a":1.0,"b":-2.5}}"#, &sp).unwrap();
        assert_eq!(v.values(), &[1.0, -2.5]);
        assert!(l0_from_json(r#"{"values":{"a":1.0}}"#, &sp).is_err());
        let text = l0_to_json(&v);
        let back = l0_from_json(&text, &sp).unwrap();
        assert_eq!(back.values(), v.values());
        assert!(text.contains("1.0000000000000000e0"));
    }

    #[test]
    fn fmt_has_17_significant_digits() {
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
        assert_eq!(fmt_f64(-0.0), "0.0000000000000000e0");
        assert_eq!(fmt_f64(0.1339745962155614), "1.3397459621556140e-1");
    }
}
