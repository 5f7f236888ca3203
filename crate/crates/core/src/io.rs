//! Design CSV files.
//!
//! ```text
//! # sfd-design n=4 d=2
//! x1,x2
//! 6.2500000000000000e-1,3.7500000000000000e-1
//! ...
//! ```
//!
//! Values are written with 17 significant digits so a file round-trips to
//! the exact same bits. The reader accepts files without the comment line
//! and without the header.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::design::DesignMatrix;
use crate::error::{Error, Result};

pub const DESIGN_MAGIC: &str = "# sfd-design";

/// Formats a float with 17 significant digits.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_design<W: Write>(mut w: W, design: &DesignMatrix) -> Result<()> {
    let d = design.n_dims();
    writeln!(w, "{DESIGN_MAGIC} n={} d={d}", design.n_points())?;
    let header: Vec<String> = (1..=d).map(|j| format!("x{j}")).collect();
    writeln!(w, "{}", header.join(","))?;
    let mut line = String::new();
    for row in design.rows() {
        line.clear();
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&format_f64(*v));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn design_to_string(design: &DesignMatrix) -> String {
    let mut buf = Vec::new();
    write_design(&mut buf, design).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("design CSV is ASCII")
}

fn parse_magic(line: &str, line_no: usize) -> Result<(Option<usize>, Option<usize>)> {
    let mut n = None;
    let mut d = None;
    for token in line[DESIGN_MAGIC.len()..].split_whitespace() {
        let parse = |v: &str| {
            v.parse::<usize>().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("bad size field `{token}`"),
            })
        };
        if let Some(v) = token.strip_prefix("n=") {
            n = Some(parse(v)?);
        } else if let Some(v) = token.strip_prefix("d=") {
            d = Some(parse(v)?);
        }
    }
    Ok((n, d))
}

pub fn read_design<R: BufRead>(reader: R) -> Result<DesignMatrix> {
    let mut declared = (None, None);
    let mut values = Vec::new();
    let mut n_dims: Option<usize> = None;
    let mut n_rows = 0usize;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with(DESIGN_MAGIC) {
            declared = parse_magic(line, line_no)?;
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if n_rows == 0 && n_dims.is_none() && fields.iter().all(|f| f.parse::<f64>().is_err()) {
            // header
            n_dims = Some(fields.len());
            continue;
        }
        match n_dims {
            Some(d) if d != fields.len() => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected {d} fields, found {}", fields.len()),
                })
            }
            None => n_dims = Some(fields.len()),
            _ => {}
        }
        for f in fields {
            let v: f64 = f.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("not a number: `{f}`"),
            })?;
            values.push(v);
        }
        n_rows += 1;
    }
    let Some(d) = n_dims.filter(|_| n_rows > 0) else {
        return Err(Error::Parse {
            line: 0,
            message: "no design rows found".into(),
        });
    };
    if let Some(n) = declared.0 {
        if n != n_rows {
            return Err(Error::Parse {
                line: 1,
                message: format!("header declares n={n} but {n_rows} rows were read"),
            });
        }
    }
    if let Some(dd) = declared.1 {
        if dd != d {
            return Err(Error::Parse {
                line: 1,
                message: format!("header declares d={dd} but rows have {d} columns"),
            });
        }
    }
    DesignMatrix::new(n_rows, d, values).map_err(|e| Error::Parse {
        line: 0,
        message: e.to_string(),
    })
}

pub fn parse_design(text: &str) -> Result<DesignMatrix> {
    read_design(text.as_bytes())
}

pub fn read_design_file(path: impl AsRef<Path>) -> Result<DesignMatrix> {
    let file = fs::File::open(path)?;
    read_design(BufReader::new(file))
}

pub fn write_design_file(path: impl AsRef<Path>, design: &DesignMatrix) -> Result<()> {
    fs::write(path, design_to_string(design))?;
    Ok(())
}
