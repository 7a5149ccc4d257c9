//! Instance and category files (JSON).
//!
//! Instance:
//! ```json
//! { "elements": ["e", "a"], "neutral": "e", "join": [["e", "a"], ["a", "a"]],
//!   "length": { "e": "0", "a": "3/2" }, "mode": "monotone" }
//! ```
//! Instead of `elements`/`neutral`/`join` a file may give
//! `"powerset": ["1", "2"]` or
//! `"sets": { "sets": [["1"], ["2", "3"]], "weights": { "1": "2" } }`.
//! Without `length`, a powerset gets the counting measure and a set family
//! its weights.
//!
//! Category:
//! ```json
//! { "objects": [ { "name": "p", "instance": "fix_p2", "distance": "d" } ],
//!   "morphisms": "enumerate",
//!   "lengths": [ ["0", "1", ...] ] }
//! ```
//! `instance` is a built-in name, a path, or an inline instance object.
//! `morphisms` is `"enumerate"` or a list of
//! `{ "source": 0, "target": 0, "maps": [["{}", "{1}", ...]] }`.
//! `lengths`, if present, gives one value list per hom-set in row-major
//! (source, target) order and replaces the lengths derived from the object
//! distances.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use joinmetric::hom::{validate_hom_labels, Category, HomLengths, Object, ENUMERATION_LIMIT};
use joinmetric::length::{validate_length, LengthFn, Mode};
use joinmetric::monoid::{powerset, validate_monoid, Monoid, RawMonoid};
use joinmetric::num::{int, parse_rational, Rational};
use joinmetric::set_model::{build_set_instance, SetModel};
use joinmetric::{fixtures, DistanceKind, DistanceTable};
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Problems with a file that exists and parses as JSON but describes an
/// invalid instance. Reported with exit code 1.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct Invalid(pub String);

fn invalid(e: impl std::fmt::Display) -> anyhow::Error {
    Invalid(e.to_string()).into()
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SetsBlock {
    pub sets: Vec<Vec<String>>,
    #[serde(default)]
    pub weights: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
pub struct InstanceFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elements: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neutral: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub join: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub powerset: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sets: Option<SetsBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<BTreeMap<String, Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
}

/// A loaded instance: the monoid, its length if one is given or implied,
/// and the set model when built from a set family.
#[derive(Debug, Clone)]
pub struct Instance {
    pub monoid: Arc<Monoid>,
    pub length: Option<LengthFn>,
    pub set_model: Option<SetModel>,
}

impl Instance {
    pub fn length(&self) -> Result<&LengthFn> {
        self.length.as_ref().ok_or_else(|| invalid("instance has no length function"))
    }
}

pub fn rational(v: &Value) -> Result<Rational> {
    let text = match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        other => return Err(invalid(format!("expected a number, got {other}"))),
    };
    parse_rational(&text).map_err(invalid)
}

fn parse_mode(mode: Option<&str>) -> Result<Mode> {
    match mode.unwrap_or("monotone") {
        "monotone" => Ok(Mode::Monotone),
        "nonmonotone" => Ok(Mode::Nonmonotone),
        other => Err(invalid(format!("unknown mode {other:?} (expected monotone or nonmonotone)"))),
    }
}

/// Resolves a built-in name, else reads the file.
pub fn load_instance(name: &str) -> Result<Instance> {
    if let Some(l) = fixtures::builtin(name) {
        return Ok(Instance { monoid: Arc::clone(l.monoid()), length: Some(l), set_model: None });
    }
    let text = std::fs::read_to_string(name).with_context(|| format!("cannot read instance {name:?}"))?;
    let file: InstanceFile = serde_json::from_str(&text).map_err(|e| invalid(format!("{name}: {e}")))?;
    instance_from_file(&file)
}

pub fn instance_from_file(file: &InstanceFile) -> Result<Instance> {
    let mode = parse_mode(file.mode.as_deref())?;
    let blocks = [file.elements.is_some(), file.powerset.is_some(), file.sets.is_some()];
    if blocks.iter().filter(|&&b| b).count() != 1 {
        return Err(invalid("give exactly one of elements/neutral/join, powerset or sets"));
    }
    let (monoid, default_length, set_model) = if let Some(names) = &file.powerset {
        let m = Arc::new(powerset(names).map_err(invalid)?);
        let counting = m.elements().map(|x| int(i64::from(x.count_ones()))).collect();
        (m, Some(counting), None)
    } else if let Some(block) = &file.sets {
        let weights = block
            .weights
            .iter()
            .map(|(k, v)| Ok((k.clone(), rational(v)?)))
            .collect::<Result<Vec<_>>>()?;
        let sm = build_set_instance(&block.sets, &weights).map_err(invalid)?;
        (Arc::clone(&sm.monoid), Some(sm.length.values().to_vec()), Some(sm))
    } else {
        let raw = RawMonoid {
            elements: file.elements.clone().unwrap_or_default(),
            neutral: file.neutral.clone().ok_or_else(|| invalid("missing neutral"))?,
            join: file.join.clone().ok_or_else(|| invalid("missing join"))?,
        };
        (Arc::new(validate_monoid(&raw).map_err(invalid)?), None, None)
    };
    let values = match &file.length {
        Some(map) => {
            let mut values = vec![None; monoid.len()];
            for (label, v) in map {
                let x = monoid.index_of(label).map_err(invalid)?;
                values[x] = Some(rational(v)?);
            }
            let missing: Vec<&str> =
                monoid.elements().filter(|&x| values[x].is_none()).map(|x| monoid.label(x)).collect();
            if !missing.is_empty() {
                return Err(invalid(format!("length missing for {missing:?}")));
            }
            Some(values.into_iter().map(Option::unwrap).collect())
        }
        None => default_length,
    };
    let length = values.map(|v| validate_length(&monoid, v, mode).map_err(invalid)).transpose()?;
    Ok(Instance { monoid, length, set_model })
}

/// Explicit `elements`/`neutral`/`join`/`length` form.
pub fn instance_to_file(m: &Monoid, length: Option<&LengthFn>) -> InstanceFile {
    let raw = m.to_raw();
    InstanceFile {
        elements: Some(raw.elements),
        neutral: Some(raw.neutral),
        join: Some(raw.join),
        length: length.map(|l| {
            m.elements().map(|x| (m.label(x).to_string(), Value::String(l.value(x).to_string()))).collect()
        }),
        mode: length.map(|l| l.mode().to_string()),
        ..Default::default()
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct ObjectSpec {
    #[serde(default)]
    pub name: Option<String>,
    pub instance: Value,
    #[serde(default)]
    pub distance: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct MorphismSpec {
    pub source: usize,
    pub target: usize,
    pub maps: Vec<Vec<String>>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct CategoryFile {
    pub objects: Vec<ObjectSpec>,
    #[serde(default)]
    pub morphisms: Option<Value>,
    #[serde(default)]
    pub lengths: Option<Vec<Vec<Value>>>,
}

pub struct LoadedCategory {
    pub category: Category,
    pub lengths: HomLengths,
}

pub fn load_category(path: &str) -> Result<LoadedCategory> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read category {path:?}"))?;
    let file: CategoryFile = serde_json::from_str(&text).map_err(|e| invalid(format!("{path}: {e}")))?;
    let base = Path::new(path).parent().map(Path::to_path_buf).unwrap_or_default();
    category_from_file(&file, &base)
}

pub fn category_from_file(file: &CategoryFile, base: &Path) -> Result<LoadedCategory> {
    let mut objects = Vec::new();
    for (i, spec) in file.objects.iter().enumerate() {
        let inst = match &spec.instance {
            Value::String(s) if fixtures::builtin(s).is_some() => load_instance(s)?,
            Value::String(s) => {
                let p: PathBuf = if Path::new(s).is_absolute() { s.into() } else { base.join(s) };
                load_instance(p.to_str().ok_or_else(|| anyhow!("non-UTF-8 path"))?)?
            }
            inline => instance_from_file(&serde_json::from_value(inline.clone()).map_err(invalid)?)?,
        };
        let distance = match spec.distance.as_deref().unwrap_or("d") {
            "d" => inst.length()?.table(DistanceKind::D),
            "sigma" => inst.length()?.table(DistanceKind::Sigma),
            "zero" => DistanceTable::zero(Arc::clone(&inst.monoid)),
            other => return Err(invalid(format!("unknown object distance {other:?} (expected d, sigma or zero)"))),
        };
        objects.push(Object {
            name: spec.name.clone().unwrap_or_else(|| format!("o{i}")),
            monoid: inst.monoid,
            distance,
        });
    }
    let category = match &file.morphisms {
        None => Category::enumerate(objects, ENUMERATION_LIMIT).map_err(invalid)?,
        Some(Value::String(s)) if s == "enumerate" => Category::enumerate(objects, ENUMERATION_LIMIT).map_err(invalid)?,
        Some(v) => {
            let specs: Vec<MorphismSpec> = serde_json::from_value(v.clone()).map_err(invalid)?;
            let mut parts = Vec::new();
            for s in specs {
                let (src, tgt) = (
                    objects.get(s.source).ok_or_else(|| invalid(format!("no object {}", s.source)))?,
                    objects.get(s.target).ok_or_else(|| invalid(format!("no object {}", s.target)))?,
                );
                let homs = s
                    .maps
                    .iter()
                    .map(|m| validate_hom_labels(&src.monoid, &tgt.monoid, m).map_err(invalid))
                    .collect::<Result<Vec<_>>>()?;
                parts.push(((s.source, s.target), homs));
            }
            Category::from_parts(objects, parts).map_err(invalid)?
        }
    };
    let lengths = match &file.lengths {
        Some(lists) => {
            let values = lists
                .iter()
                .map(|l| l.iter().map(rational).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()?;
            HomLengths::from_values(&category, values).map_err(invalid)?
        }
        None => joinmetric::hom::derived_lengths(&category),
    };
    Ok(LoadedCategory { category, lengths })
}

pub fn is_invalid(e: &anyhow::Error) -> bool {
    e.downcast_ref::<Invalid>().is_some()
}

pub fn bail_invalid<T>(msg: impl std::fmt::Display) -> Result<T> {
    bail!(Invalid(msg.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_and_round_trip() {
        let inst = load_instance("fix_bad").unwrap();
        let l = inst.length().unwrap();
        let file = instance_to_file(&inst.monoid, Some(l));
        let back = instance_from_file(&serde_json::from_str(&serde_json::to_string(&file).unwrap()).unwrap()).unwrap();
        assert_eq!(*back.monoid, *inst.monoid);
        assert_eq!(back.length.as_ref().unwrap().values(), l.values());
    }

    #[test]
    fn constructors() {
        let f: InstanceFile = serde_json::from_str(r#"{"powerset": ["1","2"]}"#).unwrap();
        let inst = instance_from_file(&f).unwrap();
        assert_eq!(inst.length.unwrap().values(), fixtures::fix_p2().values());
        let f: InstanceFile =
            serde_json::from_str(r#"{"sets": {"sets": [["1"],["2"]], "weights": {"1": 3, "2": "5"}}}"#).unwrap();
        let inst = instance_from_file(&f).unwrap();
        assert_eq!(inst.length.unwrap().value(3), &int(8));
        let f: InstanceFile = serde_json::from_str(r#"{"powerset": ["1"], "length": {"{}": 1, "{1}": 1}}"#).unwrap();
        assert!(is_invalid(&instance_from_file(&f).unwrap_err()));
    }
}
