use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Per-generation summary; costs are minimized (SNES reports negated fitness).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: u64,
    pub best_cost: f64,
    pub mean_cost: f64,
}

/// Writes `generation,best_cost,mean_cost` rows.
pub fn write_progress_csv<W: Write>(out: W, history: &[GenerationStats]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["generation", "best_cost", "mean_cost"])?;
    for g in history {
        w.write_record([
            g.generation.to_string(),
            g.best_cost.to_string(),
            g.mean_cost.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<progress>", e))?;
    Ok(())
}
