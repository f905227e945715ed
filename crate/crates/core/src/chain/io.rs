//! JSON files for labelled chains and partial colorings.

use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::amenable::PartialColoring;
use super::group::{Elem, Group};
use super::simplex::{LabeledChain, LabeledSimplex};
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct ChainFile {
    group: Group,
    simplices: Vec<SimplexEntry>,
}

/// `labels` lists `g_ab` for `a < b` in the order `(0,1), (0,2), …, (1,2), …`.
#[derive(Debug, Serialize, Deserialize)]
struct SimplexEntry {
    vertices: Vec<u32>,
    labels: Vec<Elem>,
    coeff: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    shape: Option<String>,
}

/// Parses `"p/q"`, `"p"` or a JSON integer.
pub fn parse_coefficient(v: &Value) -> Result<BigRational> {
    match v {
        Value::Number(n) => n
            .as_i64()
            .map(|i| BigRational::from_integer(i.into()))
            .ok_or_else(|| Error::MalformedSimplex(format!("coefficient {n} is not an integer; use a \"p/q\" string"))),
        Value::String(s) => {
            let s = s.trim();
            let bad = || Error::MalformedSimplex(format!("bad coefficient {s:?}"));
            match s.split_once('/') {
                Some((p, q)) => {
                    let p = BigInt::from_str(p.trim()).map_err(|_| bad())?;
                    let q = BigInt::from_str(q.trim()).map_err(|_| bad())?;
                    if q == BigInt::from(0) {
                        return Err(bad());
                    }
                    Ok(BigRational::new(p, q))
                }
                None => Ok(BigRational::from_integer(BigInt::from_str(s).map_err(|_| bad())?)),
            }
        }
        other => Err(Error::MalformedSimplex(format!("bad coefficient {other}"))),
    }
}

pub fn parse_chain(text: &str) -> Result<LabeledChain> {
    let file: ChainFile = serde_json::from_str(text)?;
    let group = match file.group {
        Group::Finite { table } => Group::finite(table)?,
        g => g,
    };
    let mut chain = LabeledChain::new(group.clone());
    for entry in file.simplices {
        let r = parse_coefficient(&entry.coeff)?;
        let s = LabeledSimplex::from_labels(&group, entry.vertices, &entry.labels, entry.shape)?;
        chain.add(s, r);
    }
    Ok(chain)
}

pub fn chain_to_json(c: &LabeledChain) -> String {
    let file = ChainFile {
        group: c.group.clone(),
        simplices: c
            .terms
            .iter()
            .map(|(s, r)| SimplexEntry {
                vertices: s.vertices.clone(),
                labels: s.labels(&c.group),
                coeff: Value::String(r.to_string()),
                shape: s.shape.as_ref().map(ToString::to_string),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("chain serializes")
}

pub fn parse_coloring(text: &str) -> Result<PartialColoring> {
    let raw: PartialColoring = serde_json::from_str(text)?;
    if raw.classes.iter().any(Vec::is_empty) {
        return Err(Error::InvalidInput("empty color class".into()));
    }
    PartialColoring::new(raw.classes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_edge_cycle() {
        let text = r#"{"group": {"kind": "free", "rank": 1},
            "simplices": [
              {"vertices": [0, 1], "labels": [[1]], "coeff": 1},
              {"vertices": [1, 0], "labels": [[0]], "coeff": "1/1"}]}"#;
        let c = parse_chain(text).unwrap();
        assert_eq!(c.len(), 2);
        assert!(c.is_cycle());
        let again = parse_chain(&chain_to_json(&c)).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn rejects_broken_input() {
        let bad_cocycle = r#"{"group": {"kind": "free", "rank": 1},
            "simplices": [{"vertices": [0, 1, 2], "labels": [[1], [1], [1]], "coeff": 1}]}"#;
        assert!(matches!(parse_chain(bad_cocycle), Err(Error::MalformedSimplex(_))));
        assert!(parse_coefficient(&Value::String("1/0".into())).is_err());
        assert!(parse_coefficient(&serde_json::json!(0.5)).is_err());
        assert!(parse_chain("{").is_err());
        assert!(parse_coloring(r#"{"classes": [[0, 1], [1]]}"#).is_err());
        assert_eq!(parse_coefficient(&Value::String("-3/6".into())).unwrap(), BigRational::new((-1).into(), 2.into()));
    }
}
