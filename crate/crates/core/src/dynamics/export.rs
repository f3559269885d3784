use std::fs;
use std::path::Path;

use super::{EvolutionTrace, Snapshot};
use crate::error::Result;
use crate::output::write_csv;

/// One row per stored step: `t,norm,energy,dX,deltaX,dP_nc,product`.
pub fn write_trace_csv(trace: &EvolutionTrace, path: &Path) -> Result<()> {
    let rows = trace
        .diagnostics
        .iter()
        .map(|d| vec![d.t, d.norm, d.energy, d.dx, d.delta_x, d.dp_nc, d.product]);
    write_csv(
        path,
        &["t", "norm", "energy", "dX", "deltaX", "dP_nc", "product"],
        rows,
    )
}

/// `step_<k>.csv` per stored snapshot, columns `x,re,im` or `x,p,s`.
pub fn write_field_dumps(trace: &EvolutionTrace, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let xs = trace.grid.points();
    for (snap, diag) in trace.snapshots.iter().zip(&trace.diagnostics) {
        let path = dir.join(format!("step_{:08}.csv", diag.step));
        match snap {
            Snapshot::Wave { psi, .. } => {
                let rows = xs
                    .iter()
                    .zip(psi.values())
                    .map(|(x, z)| vec![*x, z.re, z.im]);
                write_csv(&path, &["x", "re", "im"], rows)?;
            }
            Snapshot::Fields(m) => {
                let rows = xs
                    .iter()
                    .zip(m.p.values().iter().zip(m.s.values()))
                    .map(|(x, (p, s))| vec![*x, *p, *s]);
                write_csv(&path, &["x", "p", "s"], rows)?;
            }
        }
    }
    Ok(())
}
