use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{explain, Method, MethodParams};
use crate::error::{Error, Result};
use crate::math::{cosine_distance, l1_distance, RandomStream};
use crate::models::PredictiveModel;
use crate::reference::{run_reference, ReferenceConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EquivalenceConfig {
    pub methods: Vec<Method>,
    pub params: MethodParams,
    pub reference: ReferenceConfig,
}

impl Default for EquivalenceConfig {
    fn default() -> Self {
        EquivalenceConfig {
            methods: Method::ALL.to_vec(),
            params: MethodParams::default(),
            reference: ReferenceConfig::default(),
        }
    }
}

/// Mean distances between reference outputs (rows) and engine outputs (columns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceMatrix {
    pub methods: Vec<Method>,
    pub n_points: usize,
    pub l1: Vec<Vec<f64>>,
    pub cosine: Vec<Vec<f64>>,
}

impl EquivalenceMatrix {
    /// Column index of the smallest L1 entry in each row (lowest index on ties).
    pub fn row_argmin(&self) -> Vec<usize> {
        self.l1
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .fold(
                        (0, f64::INFINITY),
                        |best, (j, v)| if *v < best.1 { (j, *v) } else { best },
                    )
                    .0
            })
            .collect()
    }

    /// Every diagonal entry is no larger than the rest of its row.
    pub fn diagonal_dominant(&self) -> bool {
        self.l1
            .iter()
            .enumerate()
            .all(|(i, row)| row.iter().all(|v| row[i] <= *v))
    }

    /// Mean off-diagonal L1 within `cluster` and between `cluster` and the other methods.
    pub fn cluster_means(&self, cluster: &[Method]) -> (f64, f64) {
        let inside = |m: &Method| cluster.contains(m);
        let (mut within, mut nw, mut cross, mut nc) = (0.0, 0, 0.0, 0);
        for (i, a) in self.methods.iter().enumerate() {
            for (j, b) in self.methods.iter().enumerate() {
                if i == j {
                    continue;
                }
                if inside(a) == inside(b) {
                    within += self.l1[i][j];
                    nw += 1;
                } else {
                    cross += self.l1[i][j];
                    nc += 1;
                }
            }
        }
        (within / nw.max(1) as f64, cross / nc.max(1) as f64)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("reference,engine,l1,cosine\n");
        for (i, a) in self.methods.iter().enumerate() {
            for (j, b) in self.methods.iter().enumerate() {
                out.push_str(&format!(
                    "{a},{b},{:?},{:?}\n",
                    self.l1[i][j], self.cosine[i][j]
                ));
            }
        }
        out
    }
}

/// Compare every reference method with every engine instance at each point.
///
/// Reference and engine runs of the same method draw from the same seed.
pub fn equivalence_matrix<M: PredictiveModel + ?Sized>(
    f: &M,
    points: &[Vec<f64>],
    cfg: &EquivalenceConfig,
    rng: &RandomStream,
) -> Result<EquivalenceMatrix> {
    if points.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let k = cfg.methods.len();
    type PointRows = (Vec<Vec<f64>>, Vec<Vec<f64>>);
    let per_point: Vec<PointRows> = points
        .par_iter()
        .enumerate()
        .map(|(p, x0)| {
            let stream = rng.fork_indexed("point", p as u64);
            let mut refs = Vec::with_capacity(k);
            let mut lfa = Vec::with_capacity(k);
            for m in &cfg.methods {
                let method_stream = stream.fork(m.id());
                let mut shared = method_stream.fork("perturbations");
                refs.push(run_reference(*m, &cfg.reference, f, x0, &mut shared)?);
                lfa.push(explain(*m, &cfg.params, f, x0, &mut method_stream.clone())?.weights);
            }
            Ok((refs, lfa))
        })
        .collect::<Result<_>>()?;
    let mut l1 = vec![vec![0.0; k]; k];
    let mut cosine = vec![vec![0.0; k]; k];
    for (refs, lfa) in &per_point {
        for i in 0..k {
            for j in 0..k {
                l1[i][j] += l1_distance(&refs[i], &lfa[j])?;
                cosine[i][j] += cosine_distance(&refs[i], &lfa[j]).unwrap_or(1.0);
            }
        }
    }
    let n = points.len() as f64;
    for row in l1.iter_mut().chain(cosine.iter_mut()) {
        row.iter_mut().for_each(|v| *v /= n);
    }
    Ok(EquivalenceMatrix {
        methods: cfg.methods.clone(),
        n_points: points.len(),
        l1,
        cosine,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::LinearModel;

    #[test]
    fn gradient_pair_on_linear() {
        let f = LinearModel::new(vec![2.0, -1.0], 0.0);
        let cfg = EquivalenceConfig {
            methods: vec![Method::VanillaGradients, Method::GradXInput],
            ..Default::default()
        };
        let m = equivalence_matrix(&f, &[vec![3.0, 2.0]], &cfg, &RandomStream::new(0)).unwrap();
        assert_eq!(m.l1[0][0], 0.0);
        assert_eq!(m.l1[1][1], 0.0);
        assert_eq!(m.l1[0][1], 5.0);
        assert_eq!(m.l1[1][0], 5.0);
        assert!(m.diagonal_dominant());
        assert_eq!(m.row_argmin(), vec![0, 1]);
        assert!(m
            .to_csv()
            .starts_with("reference,engine,l1,cosine\nvanilla_gradients,vanilla_gradients,0.0"));
    }
}
