//! Plain-text file formats.
//!
//! * samples: one number per line; blank lines and lines starting with `#`
//!   are skipped. With a column selector the lines are comma-separated and an
//!   optional header row names the columns.
//! * weights: `index,value` per line, 1-based indices in order.
//! * trace: CSV with header `k,f,L,fw_gap,subiters,step`.
//! * density: CSV with header `x,density`.
//!
//! Numbers are written in Rust's shortest round-trip form.

use std::fs;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::Path;

use shapemix_core::cubic_newton::SolveTrace;
use shapemix_core::kw::KwCertificate;
use shapemix_core::SimplexWeights;

use crate::error::CliError;

/// Selects one field of comma-separated input, by 0-based index or header name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Column {
    Index(usize),
    Name(String),
}

impl Column {
    pub fn parse(s: &str) -> Self {
        match s.parse::<usize>() {
            Ok(i) => Column::Index(i),
            Err(_) => Column::Name(s.to_string()),
        }
    }
}

fn open(path: &Path) -> Result<Box<dyn Read>, CliError> {
    if path.as_os_str() == "-" {
        return Ok(Box::new(io::stdin()));
    }
    let f = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(Box::new(f))
}

/// Content lines with their 1-based line numbers.
fn content_lines(path: &Path) -> Result<Vec<(usize, String)>, CliError> {
    let reader = BufReader::new(open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| CliError::io(path, e))?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        out.push((i + 1, t.to_string()));
    }
    Ok(out)
}

fn parse_f64(path: &Path, line: usize, s: &str) -> Result<f64, CliError> {
    let v: f64 = s.trim().parse().map_err(|_| CliError::parse(path, line, format!("not a number: {s:?}")))?;
    if !v.is_finite() {
        return Err(CliError::parse(path, line, format!("not a finite number: {s:?}")));
    }
    Ok(v)
}

/// Reads samples, optionally from one CSV column and min-max normalized to `[0, 1]`.
pub fn read_samples(path: &Path, column: Option<&Column>, normalize: bool) -> Result<Vec<f64>, CliError> {
    let lines = content_lines(path)?;
    let mut out = Vec::with_capacity(lines.len());
    match column {
        None => {
            for (no, line) in &lines {
                out.push(parse_f64(path, *no, line)?);
            }
        }
        Some(col) => {
            let mut rows = lines.iter();
            let idx = match col {
                Column::Index(i) => *i,
                Column::Name(name) => {
                    let (no, header) = rows.next().ok_or_else(|| CliError::parse(path, 1, "missing header row"))?;
                    header
                        .split(',')
                        .position(|h| h.trim().trim_matches('"') == name)
                        .ok_or_else(|| CliError::parse(path, *no, format!("no column named {name:?}")))?
                }
            };
            for (no, line) in rows {
                let field = line
                    .split(',')
                    .nth(idx)
                    .ok_or_else(|| CliError::parse(path, *no, format!("row has no column {idx}")))?;
                let field = field.trim().trim_matches('"');
                match parse_f64(path, *no, field) {
                    Ok(v) => out.push(v),
                    // a header row is allowed before the first value
                    Err(_) if out.is_empty() && matches!(col, Column::Index(_)) && *no == lines[0].0 => {}
                    Err(e) => return Err(e),
                }
            }
        }
    }
    if out.is_empty() {
        return Err(CliError::parse(path, 0, "no samples found"));
    }
    if normalize {
        let lo = out.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi <= lo {
            return Err(shapemix_core::Error::DegenerateRange.into());
        }
        for x in &mut out {
            *x = ((*x - lo) / (hi - lo)).clamp(0.0, 1.0);
        }
    }
    Ok(out)
}

/// Reads one number per line (atom grids, reference objective values).
pub fn read_numbers(path: &Path) -> Result<Vec<f64>, CliError> {
    content_lines(path)?.iter().map(|(no, l)| parse_f64(path, *no, l)).collect()
}

pub fn write_numbers<W: Write>(mut out: W, xs: &[f64]) -> io::Result<()> {
    for x in xs {
        writeln!(out, "{x:?}")?;
    }
    Ok(())
}

pub fn write_weights<W: Write>(mut out: W, w: &[f64]) -> io::Result<()> {
    for (i, x) in w.iter().enumerate() {
        writeln!(out, "{},{:?}", i + 1, x)?;
    }
    Ok(())
}

/// Reads a weights file; the values must sum to one within `1e-6`.
pub fn read_weights(path: &Path) -> Result<SimplexWeights, CliError> {
    let lines = content_lines(path)?;
    let mut w = Vec::with_capacity(lines.len());
    for (no, line) in &lines {
        let (idx, val) = line.split_once(',').ok_or_else(|| CliError::parse(path, *no, "expected \"index,value\""))?;
        let idx: usize = idx.trim().parse().map_err(|_| CliError::parse(path, *no, format!("bad index {idx:?}")))?;
        if idx != w.len() + 1 {
            return Err(CliError::parse(path, *no, format!("expected index {}, found {idx}", w.len() + 1)));
        }
        let v = parse_f64(path, *no, val)?;
        if v < -1e-12 {
            return Err(CliError::parse(path, *no, format!("negative weight {v:?}")));
        }
        w.push(v);
    }
    if w.is_empty() {
        return Err(CliError::parse(path, 0, "no weights found"));
    }
    let s: f64 = w.iter().sum();
    if (s - 1.0).abs() > 1e-6 {
        return Err(CliError::parse(path, lines.last().map_or(0, |l| l.0), format!("weights sum to {s:?}, not 1")));
    }
    Ok(SimplexWeights::normalized(w)?)
}

pub fn write_trace<W: Write>(mut out: W, trace: &SolveTrace) -> io::Result<()> {
    writeln!(out, "k,f,L,fw_gap,subiters,step")?;
    for r in &trace.records {
        writeln!(out, "{},{:?},{:?},{:?},{},{}", r.k, r.f, r.l, r.fw_gap, r.subiters, r.step.as_str())?;
    }
    Ok(())
}

pub fn write_density<W: Write>(mut out: W, grid: &[f64], density: &[f64]) -> io::Result<()> {
    writeln!(out, "x,density")?;
    for (x, d) in grid.iter().zip(density) {
        writeln!(out, "{x:?},{d:?}")?;
    }
    Ok(())
}

/// Summary header, one value row, then `nu` and one dual variable per line.
pub fn write_certificate<W: Write>(mut out: W, c: &KwCertificate) -> io::Result<()> {
    writeln!(out, "nu_min nu_max feasibility_margin gamma bound17 bound18 dual_distance_bound")?;
    writeln!(
        out,
        "{:?} {:?} {:?} {:?} {:?} {:?} {:?}",
        c.nu_min, c.nu_max, c.feasibility_margin, c.gamma, c.gap_bound_17, c.gap_bound_18, c.dual_distance_bound
    )?;
    writeln!(out, "nu")?;
    write_numbers(&mut out, &c.nu)
}

/// Opens `path` for writing, or stdout when absent or `-`.
pub fn create(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    match path {
        Some(p) if p.as_os_str() != "-" => {
            let f = fs::File::create(p).map_err(|e| CliError::io(p, e))?;
            Ok(Box::new(io::BufWriter::new(f)))
        }
        _ => Ok(Box::new(io::BufWriter::new(io::stdout()))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn temp_file(name: &str, contents: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join(format!("shapemix-io-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let p = dir.join(name);
        fs::write(&p, contents).unwrap();
        p
    }

    #[test]
    fn samples_skip_comments_and_blank_lines() {
        let p = temp_file("s.txt", "# header\n0.5\n\n1e-3\n -2 \n");
        assert_eq!(read_samples(&p, None, false).unwrap(), vec![0.5, 1e-3, -2.0]);
        let p = temp_file("bad.txt", "1\nfoo\n");
        let err = read_samples(&p, None, false).unwrap_err().to_string();
        assert!(err.contains(":2:"), "{err}");
    }

    #[test]
    fn csv_columns_by_name_and_index() {
        let p = temp_file("c.csv", "age,income\n30,10\n50,30\n40,20\n");
        assert_eq!(read_samples(&p, Some(&Column::parse("income")), false).unwrap(), vec![10.0, 30.0, 20.0]);
        assert_eq!(read_samples(&p, Some(&Column::parse("0")), true).unwrap(), vec![0.0, 1.0, 0.5]);
        assert!(read_samples(&p, Some(&Column::parse("height")), false).is_err());
    }

    #[test]
    fn weights_round_trip() {
        let mut buf = Vec::new();
        write_weights(&mut buf, &[0.25, 0.75]).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "1,0.25\n2,0.75\n");
        let p = temp_file("w.csv", std::str::from_utf8(&buf).unwrap());
        assert_eq!(read_weights(&p).unwrap().as_slice(), &[0.25, 0.75]);
        let mut one = Vec::new();
        write_weights(&mut one, &[1.0]).unwrap();
        assert_eq!(one, b"1,1.0\n");
    }

    #[test]
    fn malformed_weights_report_line_numbers() {
        let p = temp_file("w1.csv", "1,0.5\n2;0.5\n");
        assert!(read_weights(&p).unwrap_err().to_string().contains(":2:"));
        let p = temp_file("w2.csv", "1,0.5\n3,0.5\n");
        assert!(read_weights(&p).unwrap_err().to_string().contains(":2:"));
        let p = temp_file("w3.csv", "1,0.5\n2,0.6\n");
        assert!(read_weights(&p).is_err());
    }
}
