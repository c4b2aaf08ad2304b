//! Cartesian-product sweeps of the bound evaluation.

use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::{usage, CliResult};
use crate::eval::{self, Row};
use crate::table::Table;

pub const MAX_CELLS: u128 = 10_000_000;

/// Evaluates every cell; rows come back in cell order whatever the
/// scheduling.
pub fn run(cfg: &RunConfig) -> CliResult<Vec<Row>> {
    let cells = cfg.cell_count();
    if cells > MAX_CELLS {
        return Err(usage(format!("sweep of {cells} cells exceeds the limit of {MAX_CELLS}")));
    }
    let k = cfg.settings.constants()?;
    (0..cells as usize)
        .into_par_iter()
        .map(|i| eval::evaluate(&cfg.settings, &cfg.cell(i), &k))
        .collect()
}

pub fn to_table(rows: &[Row]) -> Table {
    let mut t = Table::new(Row::COLUMNS);
    for r in rows {
        t.push(r.values());
    }
    t
}
