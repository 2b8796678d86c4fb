use super::{RawTable, Table};
use crate::error::{Error, Result};

/// Fill missing cells with the mean of the `k` nearest complete rows.
///
/// Distances use only the features observed in the incomplete row and are
/// rescaled by `d / observed` so rows with fewer observations stay comparable.
pub fn knn_impute(raw: &RawTable, k: usize) -> Result<Table> {
    if k == 0 {
        return Err(Error::Imputation("k must be at least 1".into()));
    }
    let d = raw.names.len();
    let donors: Vec<Vec<f64>> = raw
        .rows
        .iter()
        .filter(|r| r.iter().all(Option::is_some))
        .map(|r| r.iter().map(|v| v.expect("complete row")).collect())
        .collect();
    let needs_imputation = raw.rows.iter().any(|r| r.iter().any(Option::is_none));
    if needs_imputation && k >= donors.len() {
        return Err(Error::Imputation(format!(
            "k = {k} needs more than k complete rows, found {}",
            donors.len()
        )));
    }
    let rows = raw
        .rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let observed: Vec<usize> = (0..d).filter(|&j| row[j].is_some()).collect();
            if observed.len() == d {
                return Ok(row.iter().map(|v| v.expect("observed")).collect());
            }
            if observed.is_empty() {
                return Err(Error::Imputation(format!(
                    "row {i} has no observed features"
                )));
            }
            let scale = d as f64 / observed.len() as f64;
            let mut dist: Vec<(f64, usize)> = donors
                .iter()
                .enumerate()
                .map(|(n, donor)| {
                    let sq: f64 = observed
                        .iter()
                        .map(|&j| (row[j].expect("observed") - donor[j]).powi(2))
                        .sum();
                    ((scale * sq).sqrt(), n)
                })
                .collect();
            dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let nearest = &dist[..k];
            Ok((0..d)
                .map(|j| {
                    row[j].unwrap_or_else(|| {
                        nearest.iter().map(|&(_, n)| donors[n][j]).sum::<f64>() / k as f64
                    })
                })
                .collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok(Table {
        names: raw.names.clone(),
        rows,
        targets: raw.targets.clone(),
    })
}
