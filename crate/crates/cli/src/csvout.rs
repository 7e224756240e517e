//! CSV emission. Schema: header row `estimator,params_hash,value,se,n`,
//! UTF-8, `\n` line endings, floats in decimal scientific notation with
//! 17 significant digits. Every emitted row carries (value, se, n); no bare
//! numbers leave the harness.

use std::fmt::Write as _;

/// 17 significant digits, locale-free.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// FNV-1a 64-bit hash, used to fingerprint configs in CSV rows.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

#[derive(Clone, Debug, Default)]
pub struct CsvTable {
    rows: Vec<(String, u64, f64, f64, usize)>,
}

impl CsvTable {
    pub fn new() -> Self {
        CsvTable { rows: Vec::new() }
    }

    pub fn push(&mut self, estimator: impl Into<String>, params_hash: u64, value: f64, se: f64, n: usize) {
        self.rows.push((estimator.into(), params_hash, value, se, n));
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self) -> String {
        let mut out = String::from("estimator,params_hash,value,se,n\n");
        for (name, hash, value, se, n) in &self.rows {
            let _ = writeln!(
                out,
                "{name},{hash:016x},{},{},{n}",
                format_float(*value),
                format_float(*se)
            );
        }
        out
    }
}
