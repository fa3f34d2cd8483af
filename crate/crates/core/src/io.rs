//! Plain-text matrix and edge-list files.
//!
//! Matrix format: first line `n`, then `n` rows of `n` whitespace-separated
//! reals, row `j` holding `adj[j][·]` (the weights of edges entering `j`).
//!
//! Edge-list format: header `n=<count>`, then one `i j w` line per edge
//! `v_i -> v_j` with one-based ids, i.e. `adj[j][i] = w`.
//!
//! Blank lines and lines starting with `#` are ignored in both formats.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::netgraph::Network;

/// Shortest round-trip-safe layout with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn read_network(path: impl AsRef<Path>) -> Result<Network> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_network(&text).map_err(|e| match e {
        Error::Validation(message) => Error::Parse {
            path: path.to_path_buf(),
            message,
        },
        other => other,
    })
}

pub fn parse_network(text: &str) -> Result<Network> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(no, l)| (no + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (no, header) = lines.next().ok_or_else(|| Error::invalid("empty network file"))?;
    if let Some(count) = header.strip_prefix("n=") {
        let n = parse_count(count.trim(), no)?;
        let mut adj = DMatrix::zeros(n, n);
        for (no, line) in lines {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(Error::invalid(format!("line {no}: expected `i j w`, got `{line}`")));
            }
            let from = parse_node(fields[0], n, no)?;
            let to = parse_node(fields[1], n, no)?;
            adj[(to, from)] = parse_real(fields[2], no)?;
        }
        return Network::from_matrix(adj);
    }
    let n = parse_count(header, no)?;
    let mut rows = Vec::with_capacity(n);
    for (no, line) in lines {
        let row = line
            .split_whitespace()
            .map(|f| parse_real(f, no))
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != n {
            return Err(Error::invalid(format!("line {no}: expected {n} entries, got {}", row.len())));
        }
        rows.push(row);
    }
    if rows.len() != n {
        return Err(Error::invalid(format!("expected {n} rows, got {}", rows.len())));
    }
    Network::from_rows(&rows)
}

fn parse_count(s: &str, no: usize) -> Result<usize> {
    match s.parse::<usize>() {
        Ok(n) if n >= 1 => Ok(n),
        _ => Err(Error::invalid(format!("line {no}: expected a positive node count, got `{s}`"))),
    }
}

fn parse_node(s: &str, n: usize, no: usize) -> Result<usize> {
    match s.parse::<usize>() {
        Ok(i) if (1..=n).contains(&i) => Ok(i - 1),
        _ => Err(Error::invalid(format!("line {no}: node `{s}` not in 1..={n}"))),
    }
}

fn parse_real(s: &str, no: usize) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| Error::invalid(format!("line {no}: `{s}` is not a number")))
}

/// Matrix in the plain-text matrix format.
pub fn format_matrix(mat: &DMatrix<f64>) -> String {
    let mut out = format!("{}\n", mat.nrows());
    for j in 0..mat.nrows() {
        let row: Vec<String> = (0..mat.ncols()).map(|i| fmt_f64(mat[(j, i)])).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn write_matrix(path: impl AsRef<Path>, mat: &DMatrix<f64>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_matrix(mat)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_format() {
        let net = parse_network("2\n0 0\n0.5 0\n").unwrap();
        assert_eq!(net.weight(0, 1), 0.5);
        let again = parse_network(&format_matrix(net.adj())).unwrap();
        assert_eq!(again, net);
    }

    #[test]
    fn edge_list_format() {
        let net = parse_network("# chain\nn=3\n1 2 0.5\n2 3 -1.25\n\n3 3 0.1\n").unwrap();
        assert_eq!(net.n(), 3);
        assert_eq!(net.weight(0, 1), 0.5);
        assert_eq!(net.weight(1, 2), -1.25);
        assert_eq!(net.weight(2, 2), 0.1);
        assert_eq!(net.weight(1, 0), 0.0);
    }

    #[test]
    fn malformed_inputs() {
        assert!(parse_network("").is_err());
        assert!(parse_network("2\n0 0\n").is_err());
        assert!(parse_network("2\n0 0\n0 x\n").is_err());
        assert!(parse_network("2\n0 0 0\n0 0\n").is_err());
        assert!(parse_network("2\n0 NaN\n0 0\n").is_err());
        assert!(parse_network("n=2\n1 3 0.5\n").is_err());
        assert!(parse_network("n=2\n1 2\n").is_err());
    }

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(-0.25), "-2.5000000000000000e-1");
        assert_eq!(fmt_f64(0.1).parse::<f64>().unwrap(), 0.1);
    }
}
