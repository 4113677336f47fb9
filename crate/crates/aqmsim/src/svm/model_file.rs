//! Line-oriented text format for trained models: human-inspectable,
//! diff-able, and bit-exact (floats use the shortest round-trip decimal
//! form).
//!
//! ```text
//! svm-rbf v1
//! gamma <g>
//! bias <b>
//! nsv <n>
//! <coeff> <f1> <f2> <f3> <f4> <f5>      one line per support vector
//! ```

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use crate::fsutil::write_atomic;

use super::{Features, KernelKind, SvmModel, FEATURE_DIM};

const MAGIC: &str = "svm-rbf v1";

#[derive(Debug, thiserror::Error)]
pub enum ModelFileError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {what}")]
    Syntax { line: usize, what: String },
    #[error("line {line}: support vector has {got} features, expected {want}")]
    Dimension {
        line: usize,
        got: usize,
        want: usize,
    },
    #[error("line {line}: model declares no support vectors")]
    Empty { line: usize },
    #[error("line {line}: unexpected trailing content")]
    Trailing { line: usize },
}

pub fn write_model(model: &SvmModel) -> String {
    let mut out = String::new();
    writeln!(out, "{MAGIC}").unwrap();
    writeln!(out, "gamma {}", model.gamma).unwrap();
    writeln!(out, "bias {}", model.bias).unwrap();
    writeln!(out, "nsv {}", model.support_vectors.len()).unwrap();
    for (sv, c) in model.support_vectors.iter().zip(&model.coeffs) {
        write!(out, "{c}").unwrap();
        for v in sv {
            write!(out, " {v}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn save_model(model: &SvmModel, path: &Path) -> Result<(), ModelFileError> {
    assert_eq!(model.support_vectors.len(), model.coeffs.len());
    assert!(
        !model.support_vectors.is_empty(),
        "refusing to save an empty model"
    );
    write_atomic(path, &write_model(model))?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<SvmModel, ModelFileError> {
    let text = std::fs::read_to_string(path)?;
    parse_model(&text)
}

pub fn parse_model(text: &str) -> Result<SvmModel, ModelFileError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));

    let (line, magic) = next_line(&mut lines, "file header")?;
    if magic.trim() != MAGIC {
        return Err(ModelFileError::Syntax {
            line,
            what: format!("expected header `{MAGIC}`"),
        });
    }

    let gamma = parse_field(&mut lines, "gamma")?;
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(ModelFileError::Syntax {
            line: 2,
            what: format!("gamma must be a positive number, got {gamma}"),
        });
    }
    let bias = parse_field(&mut lines, "bias")?;
    if !bias.is_finite() {
        return Err(ModelFileError::Syntax {
            line: 3,
            what: "bias must be finite".to_string(),
        });
    }

    let (nsv_line, raw) = next_line(&mut lines, "nsv")?;
    let nsv: usize = match raw.split_whitespace().collect::<Vec<_>>().as_slice() {
        ["nsv", v] => v.parse().map_err(|_| ModelFileError::Syntax {
            line: nsv_line,
            what: format!("bad support-vector count `{v}`"),
        })?,
        _ => {
            return Err(ModelFileError::Syntax {
                line: nsv_line,
                what: "expected `nsv <count>`".to_string(),
            })
        }
    };
    if nsv == 0 {
        return Err(ModelFileError::Empty { line: nsv_line });
    }

    let mut support_vectors = Vec::with_capacity(nsv);
    let mut coeffs = Vec::with_capacity(nsv);
    for _ in 0..nsv {
        let (line, raw) = next_line(&mut lines, "support vector")?;
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if fields.len() != FEATURE_DIM + 1 {
            return Err(ModelFileError::Dimension {
                line,
                got: fields.len().saturating_sub(1),
                want: FEATURE_DIM,
            });
        }
        let mut nums = [0.0f64; FEATURE_DIM + 1];
        for (k, f) in fields.iter().enumerate() {
            nums[k] = f.parse().map_err(|_| ModelFileError::Syntax {
                line,
                what: format!("bad number `{f}`"),
            })?;
            if !nums[k].is_finite() {
                return Err(ModelFileError::Syntax {
                    line,
                    what: format!("non-finite number `{f}`"),
                });
            }
        }
        coeffs.push(nums[0]);
        let mut sv: Features = [0.0; FEATURE_DIM];
        sv.copy_from_slice(&nums[1..]);
        support_vectors.push(sv);
    }

    for (line, raw) in lines {
        if !raw.trim().is_empty() {
            return Err(ModelFileError::Trailing { line });
        }
    }

    Ok(SvmModel {
        kernel: KernelKind::Rbf,
        gamma,
        bias,
        support_vectors,
        coeffs,
    })
}

fn next_line<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    what: &str,
) -> Result<(usize, &'a str), ModelFileError> {
    lines.next().ok_or_else(|| ModelFileError::Syntax {
        line: 0,
        what: format!("unexpected end of file, missing {what}"),
    })
}

fn parse_field<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    name: &str,
) -> Result<f64, ModelFileError> {
    let (line, raw) = next_line(lines, name)?;
    match raw.split_whitespace().collect::<Vec<_>>().as_slice() {
        [key, v] if *key == name => v.parse().map_err(|_| ModelFileError::Syntax {
            line,
            what: format!("bad number `{v}` for {name}"),
        }),
        _ => Err(ModelFileError::Syntax {
            line,
            what: format!("expected `{name} <value>`"),
        }),
    }
}
