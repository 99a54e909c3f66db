//! Line-oriented text format for gate scripts.
//!
//! One gate per line, `#` starts a comment:
//!
//! ```text
//! U t=<q> m=<re,im;re,im;re,im;re,im>
//! CNOT c=<q> t=<q>
//! CU ctrl=<q>:<bit>,... t=<q> m=<...>
//! TL i=<index> j=<index> m=<...>
//! ```
//!
//! The four matrix entries are row-major (`u00;u01;u10;u11`). Floats are
//! printed in shortest round-trip form, so format/parse is bit-exact.

use num_complex::Complex64;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::gate::{Gate, GateScript, Unitary2};

pub fn format_script(script: &GateScript) -> String {
    let mut out = String::new();
    for gate in script {
        match gate {
            Gate::SingleQubit { target, matrix } => {
                let _ = writeln!(out, "U t={} m={}", target, format_matrix(matrix));
            }
            Gate::Cnot { control, target } => {
                let _ = writeln!(out, "CNOT c={control} t={target}");
            }
            Gate::ControlledU {
                controls,
                target,
                matrix,
            } => {
                if controls.is_empty() {
                    let _ = writeln!(out, "CU t={} m={}", target, format_matrix(matrix));
                } else {
                    let ctrl = controls
                        .iter()
                        .map(|(q, b)| format!("{}:{}", q, u8::from(*b)))
                        .collect::<Vec<_>>()
                        .join(",");
                    let _ = writeln!(out, "CU ctrl={ctrl} t={} m={}", target, format_matrix(matrix));
                }
            }
            Gate::TwoLevel {
                index_i,
                index_j,
                matrix,
            } => {
                let _ = writeln!(out, "TL i={index_i} j={index_j} m={}", format_matrix(matrix));
            }
        }
    }
    out
}

fn format_matrix(m: &Unitary2) -> String {
    let e = m.entries();
    [e[0][0], e[0][1], e[1][0], e[1][1]]
        .iter()
        .map(|c| format!("{},{}", c.re, c.im))
        .collect::<Vec<_>>()
        .join(";")
}

pub fn parse_script(text: &str) -> Result<GateScript> {
    let mut script = GateScript::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let op = tokens.next().expect("non-empty line has a token");
        let fields = parse_fields(tokens, line_no)?;
        let gate = match op {
            "U" => Gate::SingleQubit {
                target: field_usize(&fields, "t", line_no)?,
                matrix: field_matrix(&fields, line_no)?,
            },
            "CNOT" => Gate::Cnot {
                control: field_usize(&fields, "c", line_no)?,
                target: field_usize(&fields, "t", line_no)?,
            },
            "CU" => {
                let controls = match lookup(&fields, "ctrl") {
                    Some(spec) if !spec.is_empty() => parse_controls(spec, line_no)?,
                    _ => Vec::new(),
                };
                Gate::ControlledU {
                    controls,
                    target: field_usize(&fields, "t", line_no)?,
                    matrix: field_matrix(&fields, line_no)?,
                }
            }
            "TL" => Gate::TwoLevel {
                index_i: field_usize(&fields, "i", line_no)?,
                index_j: field_usize(&fields, "j", line_no)?,
                matrix: field_matrix(&fields, line_no)?,
            },
            other => {
                return Err(Error::ScriptParse {
                    line: line_no,
                    message: format!("unknown gate `{other}`"),
                })
            }
        };
        script.push(gate);
    }
    Ok(script)
}

fn parse_fields<'a>(
    tokens: impl Iterator<Item = &'a str>,
    line: usize,
) -> Result<Vec<(&'a str, &'a str)>> {
    tokens
        .map(|tok| {
            tok.split_once('=').ok_or_else(|| Error::ScriptParse {
                line,
                message: format!("expected key=value, found `{tok}`"),
            })
        })
        .collect()
}

fn lookup<'a>(fields: &[(&'a str, &'a str)], key: &str) -> Option<&'a str> {
    fields.iter().find(|(k, _)| *k == key).map(|(_, v)| *v)
}

fn field_usize(fields: &[(&str, &str)], key: &str, line: usize) -> Result<usize> {
    let raw = lookup(fields, key).ok_or_else(|| Error::ScriptParse {
        line,
        message: format!("missing field `{key}`"),
    })?;
    raw.parse().map_err(|_| Error::ScriptParse {
        line,
        message: format!("`{key}={raw}` is not an integer"),
    })
}

fn field_matrix(fields: &[(&str, &str)], line: usize) -> Result<Unitary2> {
    let raw = lookup(fields, "m").ok_or_else(|| Error::ScriptParse {
        line,
        message: "missing field `m`".into(),
    })?;
    let entries: Vec<&str> = raw.split(';').collect();
    if entries.len() != 4 {
        return Err(Error::ScriptParse {
            line,
            message: format!("matrix needs 4 entries, found {}", entries.len()),
        });
    }
    let mut parsed = [Complex64::new(0.0, 0.0); 4];
    for (slot, entry) in parsed.iter_mut().zip(&entries) {
        let (re, im) = entry.split_once(',').ok_or_else(|| Error::ScriptParse {
            line,
            message: format!("matrix entry `{entry}` needs re,im"),
        })?;
        let re: f64 = re.parse().map_err(|_| Error::ScriptParse {
            line,
            message: format!("bad float `{re}`"),
        })?;
        let im: f64 = im.parse().map_err(|_| Error::ScriptParse {
            line,
            message: format!("bad float `{im}`"),
        })?;
        *slot = Complex64::new(re, im);
    }
    Unitary2::new([[parsed[0], parsed[1]], [parsed[2], parsed[3]]]).map_err(|e| {
        Error::ScriptParse {
            line,
            message: e.to_string(),
        }
    })
}

fn parse_controls(spec: &str, line: usize) -> Result<Vec<(usize, bool)>> {
    spec.split(',')
        .map(|part| {
            let (q, b) = part.split_once(':').ok_or_else(|| Error::ScriptParse {
                line,
                message: format!("control `{part}` needs qubit:bit"),
            })?;
            let q: usize = q.parse().map_err(|_| Error::ScriptParse {
                line,
                message: format!("bad control qubit `{q}`"),
            })?;
            let b = match b {
                "0" => false,
                "1" => true,
                other => {
                    return Err(Error::ScriptParse {
                        line,
                        message: format!("control bit must be 0 or 1, found `{other}`"),
                    })
                }
            };
            Ok((q, b))
        })
        .collect()
}
