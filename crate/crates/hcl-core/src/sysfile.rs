//! System-definition files: a small line-oriented `key = value` format
//! describing the shift, the cocycle generators, and optional Markov and
//! roof data.
//!
//! ```text
//! alphabet_size = 2
//! adjacency = 1 1 1 0            # row-major 0/1
//! split = 1,2                    # stable dim, unstable dim
//! generator.0 = 0.5 0 0  0 2 0  0 0 8
//! generator.1 = 0.25 0 0  0 3 0  0 0 10
//! markov_transition = 0.5 0.5 1 0   # optional, row-major
//! roof.0 = 1.0                   # optional, all symbols or none
//! roof.1 = 2.0
//! ```

use crate::cocycle::{CocycleError, LinearCocycle};
use crate::linalg::SmallMat;
use crate::sft::{MarkovMeasure, SftError, SftSystem};
use crate::suspension::{RoofFunction, SuspensionError};
use std::collections::HashMap;
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum SysFileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected 'key = value'")]
    BadLine { line: usize },
    #[error("line {line}: duplicate key '{key}'")]
    DuplicateKey { line: usize, key: String },
    #[error("missing key '{key}'")]
    MissingKey { key: String },
    #[error("line {line}: key '{key}': {detail}")]
    BadValue {
        line: usize,
        key: String,
        detail: String,
    },
    #[error("key '{key}': {source}")]
    Sft {
        key: String,
        #[source]
        source: SftError,
    },
    #[error("key '{key}': {source}")]
    Cocycle {
        key: String,
        #[source]
        source: CocycleError,
    },
    #[error("key '{key}': {source}")]
    Roof {
        key: String,
        #[source]
        source: SuspensionError,
    },
}

/// Parsed system definition: the shift, its cocycle, and optional measure
/// and roof data.
#[derive(Debug, Clone)]
pub struct SystemDefinition {
    pub sft: SftSystem,
    pub cocycle: LinearCocycle,
    pub markov: Option<MarkovMeasure>,
    pub roof: Option<RoofFunction>,
}

pub fn load_system(path: &Path) -> Result<SystemDefinition, SysFileError> {
    let text = std::fs::read_to_string(path).map_err(|source| SysFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_system(&text)
}

pub fn parse_system(text: &str) -> Result<SystemDefinition, SysFileError> {
    let mut entries: HashMap<String, (usize, String)> = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(SysFileError::BadLine { line: line_no });
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if entries.insert(key.clone(), (line_no, value)).is_some() {
            return Err(SysFileError::DuplicateKey { line: line_no, key });
        }
    }

    let get = |key: &str| -> Result<(usize, &str), SysFileError> {
        entries
            .get(key)
            .map(|(l, v)| (*l, v.as_str()))
            .ok_or_else(|| SysFileError::MissingKey {
                key: key.to_string(),
            })
    };

    let (line, raw_k) = get("alphabet_size")?;
    let k: usize = raw_k.parse().map_err(|_| SysFileError::BadValue {
        line,
        key: "alphabet_size".into(),
        detail: format!("'{raw_k}' is not a positive integer"),
    })?;

    let (line, raw_adj) = get("adjacency")?;
    let adj = parse_numbers(raw_adj, line, "adjacency")?;
    if adj.len() != k * k {
        return Err(SysFileError::BadValue {
            line,
            key: "adjacency".into(),
            detail: format!("expected {} entries, got {}", k * k, adj.len()),
        });
    }
    let adj_bits: Vec<u8> = adj
        .iter()
        .map(|&x| {
            if x == 0.0 {
                Ok(0u8)
            } else if x == 1.0 {
                Ok(1u8)
            } else {
                Err(SysFileError::BadValue {
                    line,
                    key: "adjacency".into(),
                    detail: format!("entry {x} is not 0 or 1"),
                })
            }
        })
        .collect::<Result<_, _>>()?;
    let sft = SftSystem::new(k, &adj_bits).map_err(|source| SysFileError::Sft {
        key: "adjacency".into(),
        source,
    })?;

    let (line, raw_split) = get("split")?;
    let parts: Vec<&str> = raw_split.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(SysFileError::BadValue {
            line,
            key: "split".into(),
            detail: "expected 's_dim,u_dim'".into(),
        });
    }
    let s_dim: usize = parts[0].parse().map_err(|_| SysFileError::BadValue {
        line,
        key: "split".into(),
        detail: format!("'{}' is not an integer", parts[0]),
    })?;
    let u_dim: usize = parts[1].parse().map_err(|_| SysFileError::BadValue {
        line,
        key: "split".into(),
        detail: format!("'{}' is not an integer", parts[1]),
    })?;
    let dim = s_dim + u_dim;

    let mut generators = Vec::with_capacity(k);
    for sym in 0..k {
        let key = format!("generator.{sym}");
        let (line, raw) = get(&key)?;
        let vals = parse_numbers(raw, line, &key)?;
        if vals.len() != dim * dim {
            return Err(SysFileError::BadValue {
                line,
                key,
                detail: format!("expected {} entries, got {}", dim * dim, vals.len()),
            });
        }
        generators.push(SmallMat::from_rows(dim, &vals));
    }
    let cocycle = LinearCocycle::new(dim, (s_dim, u_dim), generators).map_err(|source| {
        SysFileError::Cocycle {
            key: "generator".into(),
            source,
        }
    })?;

    let markov = if let Ok((line, raw)) = get("markov_transition") {
        let vals = parse_numbers(raw, line, "markov_transition")?;
        if vals.len() != k * k {
            return Err(SysFileError::BadValue {
                line,
                key: "markov_transition".into(),
                detail: format!("expected {} entries, got {}", k * k, vals.len()),
            });
        }
        Some(
            MarkovMeasure::new(&sft, &vals).map_err(|source| SysFileError::Sft {
                key: "markov_transition".into(),
                source,
            })?,
        )
    } else {
        None
    };

    let roof_keys: Vec<usize> = (0..k)
        .filter(|sym| entries.contains_key(&format!("roof.{sym}")))
        .collect();
    let roof = if roof_keys.is_empty() {
        None
    } else {
        let mut values = Vec::with_capacity(k);
        for sym in 0..k {
            let key = format!("roof.{sym}");
            let (line, raw) = get(&key)?;
            let vals = parse_numbers(raw, line, &key)?;
            if vals.len() != 1 {
                return Err(SysFileError::BadValue {
                    line,
                    key,
                    detail: "expected one value".into(),
                });
            }
            values.push(vals[0]);
        }
        Some(RoofFunction::new(values).map_err(|source| SysFileError::Roof {
            key: "roof".into(),
            source,
        })?)
    };

    Ok(SystemDefinition {
        sft,
        cocycle,
        markov,
        roof,
    })
}

fn parse_numbers(raw: &str, line: usize, key: &str) -> Result<Vec<f64>, SysFileError> {
    raw.split_whitespace()
        .map(|tok| {
            tok.parse::<f64>().map_err(|_| SysFileError::BadValue {
                line,
                key: key.to_string(),
                detail: format!("'{tok}' is not a number"),
            })
        })
        .collect()
}
