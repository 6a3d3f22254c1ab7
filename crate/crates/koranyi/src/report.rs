//! CSV formatting and reproducibility metadata shared by the experiments.

use sha2::{Digest, Sha256};

/// Formats a float for CSV: plain decimal, exponent notation for
/// `0 < |v| < 1e−4`.
pub fn fmt_f64(v: f64) -> String {
    if v != 0.0 && v.abs() < 1e-4 {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

/// SHA-256 of a serialized configuration, hex encoded.
pub fn config_hash(config_json: &str) -> String {
    hex::encode(Sha256::digest(config_json.as_bytes()))
}

/// Trailing metadata block for every CSV.
pub fn csv_trailer(config_json: &str) -> String {
    format!("#config-hash,{}\n#version,{}\n", config_hash(config_json), env!("CARGO_PKG_VERSION"))
}

/// Long-format table written as CSV with the metadata trailer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    /// Appends a row. Panics if its width differs from the header's.
    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width must match the header");
        self.rows.push(row);
    }

    /// CSV text followed by [`csv_trailer`].
    pub fn to_csv(&self, config_json: &str) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        let bytes = w.into_inner().expect("in-memory write");
        let mut out = String::from_utf8(bytes).expect("fields are UTF-8");
        out.push_str(&csv_trailer(config_json));
        out
    }
}

/// Formats a float cell.
pub fn cell(v: f64) -> String {
    fmt_f64(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_values_use_exponent_notation() {
        assert_eq!(fmt_f64(0.5), "0.5");
        assert_eq!(fmt_f64(0.0), "0");
        assert_eq!(fmt_f64(2.5e-7), "2.5e-7");
        assert_eq!(fmt_f64(-3e-5), "-3e-5");
    }

    #[test]
    fn table_round_trip() {
        let mut t = Table::new(["a", "b"]);
        t.push(vec![cell(1.5), "x,y".into()]);
        let csv = t.to_csv("{}");
        assert!(csv.starts_with("a,b\n1.5,\"x,y\"\n#config-hash,"));
        assert!(csv.ends_with(&format!("#version,{}\n", env!("CARGO_PKG_VERSION"))));
    }

    #[test]
    fn hash_is_stable() {
        assert_eq!(config_hash(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }
}
