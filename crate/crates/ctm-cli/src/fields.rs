use std::path::Path;

use ctm_core::{Field, Grid, C64};

use crate::Failure;

/// Reads a field CSV (x, re_psi1, im_psi1[, re_psi2, im_psi2]) sampled on `grid`.
pub fn read_field(path: &Path, grid: &Grid, components: usize) -> Result<Vec<Field>, Failure> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
    let header = reader.headers().map_err(|e| Failure::config(format!("{}: {e}", path.display())))?.clone();
    let column = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Failure::config(format!("{}: missing column '{name}'", path.display())))
    };
    let mut cols = Vec::new();
    for c in 1..=components {
        cols.push((column(&format!("re_psi{c}"))?, column(&format!("im_psi{c}"))?));
    }
    let mut out = vec![Vec::with_capacity(grid.n); components];
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
        for (c, &(re, im)) in cols.iter().enumerate() {
            let parse = |i: usize| -> Result<f64, Failure> {
                record
                    .get(i)
                    .and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| Failure::config(format!("{}: line {}: bad number in column {}", path.display(), line + 2, i + 1)))
            };
            out[c].push(C64::new(parse(re)?, parse(im)?));
        }
    }
    if out[0].len() != grid.n {
        return Err(Failure::config(format!(
            "{}: {} samples, the configuration grid has {}",
            path.display(),
            out[0].len(),
            grid.n
        )));
    }
    Ok(out)
}

/// Parses `gaussian:X0,K0,WIDTH` into its three numbers.
pub fn parse_gaussian(spec: &str) -> Result<(f64, f64, f64), Failure> {
    let bad = || Failure::config(format!("--psi0 '{spec}': expected gaussian:X0,K0,WIDTH"));
    let body = spec.strip_prefix("gaussian:").ok_or_else(bad)?;
    let v: Vec<f64> = body.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect::<Result<_, _>>()?;
    match v[..] {
        [x0, k0, w] if w > 0.0 => Ok((x0, k0, w)),
        _ => Err(bad()),
    }
}
