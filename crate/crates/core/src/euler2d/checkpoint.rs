//! Plain-text checkpoints of the transported vorticity.
//!
//! Layout: the first line is a JSON object with the keys `n_rho`, `n_phi`,
//! `theta1`, `theta2`, `omega`, `t` and `lambda_circ`. Each following line
//! holds one radial row of `zeta` (`n_phi` values separated by single spaces),
//! rows ordered from the inner to the outer circle. Values are written in the
//! shortest form that parses back to the identical `f64`.

use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ScalarField;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointHeader {
    pub n_rho: usize,
    pub n_phi: usize,
    pub theta1: f64,
    pub theta2: f64,
    pub omega: f64,
    pub t: f64,
    pub lambda_circ: f64,
}

pub fn write_checkpoint<W: Write>(header: &CheckpointHeader, zeta: &ScalarField, mut out: W) -> Result<()> {
    if zeta.shape() != (header.n_rho, header.n_phi) {
        return Err(Error::GridMismatch {
            expected: (header.n_rho, header.n_phi),
            got: zeta.shape(),
        });
    }
    serde_json::to_writer(&mut out, header)?;
    out.write_all(b"\n")?;
    let mut line = String::new();
    for i in 0..header.n_rho {
        line.clear();
        for (j, v) in zeta.row(i).iter().enumerate() {
            if j > 0 {
                line.push(' ');
            }
            line.push_str(&v.to_string());
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_checkpoint<R: Read>(input: R) -> Result<(CheckpointHeader, ScalarField)> {
    let mut lines = BufReader::new(input).lines();
    let first = lines.next().ok_or_else(|| Error::Format("empty checkpoint".into()))??;
    let header: CheckpointHeader = serde_json::from_str(&first)?;
    let mut data = Vec::with_capacity(header.n_rho * header.n_phi);
    for i in 0..header.n_rho {
        let line = lines
            .next()
            .ok_or_else(|| Error::Format(format!("missing row {i}")))??;
        let before = data.len();
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| Error::Format(format!("bad value {tok:?} in row {i}")))?;
            data.push(v);
        }
        if data.len() - before != header.n_phi {
            return Err(Error::Format(format!(
                "row {i} has {} values, expected {}",
                data.len() - before,
                header.n_phi
            )));
        }
    }
    if let Some(extra) = lines.next() {
        if !extra?.trim().is_empty() {
            return Err(Error::Format("trailing data after last row".into()));
        }
    }
    let zeta = ScalarField::from_vec(header.n_rho, header.n_phi, data)?;
    Ok((header, zeta))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header() -> CheckpointHeader {
        CheckpointHeader {
            n_rho: 3,
            n_phi: 4,
            theta1: -1.0,
            theta2: -0.8,
            omega: 10.0,
            t: 0.125,
            lambda_circ: -1.0 / 3.0,
        }
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        let data: Vec<f64> = (0..12)
            .map(|k| (k as f64 * 0.7).sin() / 3.0 + 1e-300 * k as f64)
            .collect();
        let zeta = ScalarField::from_vec(3, 4, data).unwrap();
        let mut buf = Vec::new();
        write_checkpoint(&header(), &zeta, &mut buf).unwrap();
        let (h, z) = read_checkpoint(buf.as_slice()).unwrap();
        assert_eq!(h, header());
        assert_eq!(z, zeta);
    }

    #[test]
    fn rejects_short_rows_and_bad_headers() {
        let text =
            "{\"n_rho\":2,\"n_phi\":2,\"theta1\":-1,\"theta2\":-0.8,\"omega\":1,\"t\":0,\"lambda_circ\":0}\n1 2\n3\n";
        assert!(matches!(read_checkpoint(text.as_bytes()), Err(Error::Format(_))));
        assert!(read_checkpoint("{\"n_rho\":2}\n".as_bytes()).is_err());
        assert!(read_checkpoint("".as_bytes()).is_err());
    }

    #[test]
    fn shape_checked_on_write() {
        let zeta = ScalarField::from_vec(2, 2, vec![0.0; 4]).unwrap();
        assert!(write_checkpoint(&header(), &zeta, Vec::new()).is_err());
    }
}
