//! Readers for externally computed classifier outputs and the CTA writer.
//!
//! Counts files are CSV with header `input_id,label,c_0,...,c_{m-1}`.
//! Probability files are JSON lines `{"input_id":…,"label":…,"rows":[[…]…]}`.

use std::io::{BufRead, Read, Write};

use serde::Deserialize;

use crate::error::{CertError, Result};
use crate::radius::CTACurve;
use crate::smoothing::{CountsVector, ProbabilityMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct CountsRecord {
    pub input_id: u64,
    pub label: usize,
    pub counts: CountsVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixRecord {
    pub input_id: u64,
    pub label: usize,
    pub matrix: ProbabilityMatrix,
}

fn parse_err(line: usize, message: impl Into<String>) -> CertError {
    CertError::Parse {
        line,
        message: message.into(),
    }
}

pub fn read_counts<R: Read>(reader: R) -> Result<Vec<CountsRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(CertError::EmptyInput);
    }
    let classes = header.len().saturating_sub(2);
    let expected = (0..classes).map(|k| format!("c_{k}"));
    let ok = header.len() >= 3
        && &header[0] == "input_id"
        && &header[1] == "label"
        && header.iter().skip(2).zip(expected).all(|(h, e)| h == e);
    if !ok {
        return Err(parse_err(
            1,
            "header must be input_id,label,c_0,...,c_{m-1} with m >= 1",
        ));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let field = |i: usize| rec.get(i).unwrap_or("");
        let input_id = field(0)
            .parse()
            .map_err(|_| parse_err(line, format!("bad input_id `{}`", field(0))))?;
        let label: usize = field(1)
            .parse()
            .map_err(|_| parse_err(line, format!("bad label `{}`", field(1))))?;
        if label >= classes {
            return Err(parse_err(line, format!("label {label} out of range")));
        }
        let counts = (2..rec.len())
            .map(|i| {
                field(i)
                    .parse::<u64>()
                    .map_err(|_| parse_err(line, format!("bad count `{}`", field(i))))
            })
            .collect::<Result<Vec<_>>>()?;
        let counts = CountsVector::new(counts).map_err(|e| parse_err(line, e.to_string()))?;
        out.push(CountsRecord {
            input_id,
            label,
            counts,
        });
    }
    if out.is_empty() {
        return Err(CertError::EmptyInput);
    }
    Ok(out)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMatrix {
    input_id: u64,
    label: usize,
    rows: Vec<Vec<f64>>,
}

pub fn read_prob_matrices<R: BufRead>(reader: R) -> Result<Vec<MatrixRecord>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawMatrix =
            serde_json::from_str(&line).map_err(|e| parse_err(line_no, e.to_string()))?;
        let matrix =
            ProbabilityMatrix::from_rows(raw.rows).map_err(|e| parse_err(line_no, e.to_string()))?;
        if raw.label >= matrix.num_classes() {
            return Err(parse_err(line_no, format!("label {} out of range", raw.label)));
        }
        out.push(MatrixRecord {
            input_id: raw.input_id,
            label: raw.label,
            matrix,
        });
    }
    if out.is_empty() {
        return Err(CertError::EmptyInput);
    }
    Ok(out)
}

/// Writes `r,approx_acc,lcb_acc` rows.
pub fn write_cta_csv<W: Write>(writer: W, curve: &CTACurve) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| CertError::Io(e.to_string());
    w.write_record(["r", "approx_acc", "lcb_acc"]).map_err(io)?;
    for ((r, a), l) in curve.radii.iter().zip(&curve.approx_acc).zip(&curve.lcb_acc) {
        w.write_record([r.to_string(), a.to_string(), l.to_string()])
            .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_round_trip_and_errors() {
        let text = "input_id,label,c_0,c_1,c_2\n0,0,100,0,0\n1,2,10,20,70\n";
        let recs = read_counts(text.as_bytes()).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[1].counts.counts(), &[10, 20, 70]);
        assert_eq!(read_counts("".as_bytes()), Err(CertError::EmptyInput));
        assert_eq!(
            read_counts("input_id,label,c_0,c_1\n".as_bytes()),
            Err(CertError::EmptyInput)
        );
        let bad = "input_id,label,c_0,c_1\n0,0,5,5\n1,0,x,5\n";
        assert!(matches!(read_counts(bad.as_bytes()), Err(CertError::Parse { line: 3, .. })));
        let bad_header = "id,label,c_0\n0,0,5\n";
        assert!(matches!(read_counts(bad_header.as_bytes()), Err(CertError::Parse { line: 1, .. })));
    }

    #[test]
    fn matrices_parse_and_report_lines() {
        let text = "{\"input_id\":3,\"label\":1,\"rows\":[[0.2,0.8],[0.5,0.5]]}\n\n";
        let recs = read_prob_matrices(text.as_bytes()).unwrap();
        assert_eq!(recs[0].input_id, 3);
        assert_eq!(recs[0].matrix.num_rows(), 2);
        let bad = "{\"input_id\":3,\"label\":1,\"rows\":[[0.2,0.8]]}\n{\"input_id\":4,\"label\":0,\"rows\":[[0.9,0.9]]}\n";
        assert!(matches!(read_prob_matrices(bad.as_bytes()), Err(CertError::Parse { line: 2, .. })));
        assert_eq!(read_prob_matrices("".as_bytes()), Err(CertError::EmptyInput));
    }

    #[test]
    fn cta_writer_header() {
        let curve = CTACurve {
            radii: vec![0.0, 0.5],
            approx_acc: vec![1.0, 0.5],
            lcb_acc: vec![0.9, 0.4],
            n: 2,
        };
        let mut buf = Vec::new();
        write_cta_csv(&mut buf, &curve).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s, "r,approx_acc,lcb_acc\n0,1,0.9\n0.5,0.5,0.4\n");
    }
}
