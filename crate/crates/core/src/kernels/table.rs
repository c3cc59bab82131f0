use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelRow {
    pub x: String,
    pub y_or_prefix: String,
    /// Prefix depth for boundary readings; empty for finite `y`.
    pub depth: Option<usize>,
    pub value: f64,
    pub error: f64,
    pub stabilized: bool,
}

/// Kernel values on a finite grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KernelTable {
    pub schema: u32,
    /// `K(.,.|t)`, `H` or `Phi-ratio`.
    pub kernel: String,
    pub rows: Vec<KernelRow>,
}

impl KernelTable {
    pub fn new(kernel: impl Into<String>) -> Self {
        KernelTable { schema: 1, kernel: kernel.into(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: KernelRow) {
        self.rows.push(row);
    }

    /// Normalization `value(e, ·) = 1` and positivity.
    pub fn is_consistent(&self, tol: f64) -> bool {
        self.rows.iter().all(|r| r.value > 0.0) && self.rows.iter().filter(|r| r.x == "e").all(|r| (r.value - 1.0).abs() <= tol)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for r in &self.rows {
            out.serialize(r)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
