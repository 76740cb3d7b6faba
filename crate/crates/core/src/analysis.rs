//! Per-domain AUC tables and principal component scores of AUC vectors.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use thiserror::Error;

use crate::evalpipe::AucRecord;
use crate::linalg::{jacobi_eigen, LinalgError};
use crate::missingness::SamplerKind;
use crate::predictors::PredictorKind;

pub const PCA_COLUMNS: [&str; 6] = [
    "entity",
    "domain_or_predictor",
    "pc1",
    "pc2",
    "explained_variance_1",
    "explained_variance_2",
];

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("no records for domain {0:?}")]
    EmptyDomain(String),
    #[error("unknown sampler {0:?} in results")]
    UnknownSampler(String),
    #[error("unknown predictor {0:?} in results")]
    UnknownPredictor(String),
    #[error("need at least 3 complete networks for PCA, have {complete} ({excluded} excluded)")]
    TooFewNetworks { complete: usize, excluded: usize },
    #[error("incomplete sampler coverage: {}", .0.join(", "))]
    MissingCoverage(Vec<String>),
    #[error("feature matrix has no columns")]
    NoFeatures,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Mean of `values`, summed in sorted order so the result does not depend on
/// the order the values arrived in.
pub fn stable_mean(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    Some(values.iter().sum::<f64>() / values.len() as f64)
}

fn sampler_of(r: &AucRecord) -> Result<SamplerKind, AnalysisError> {
    r.sampler.parse().map_err(|_| AnalysisError::UnknownSampler(r.sampler.clone()))
}

fn predictor_of(r: &AucRecord) -> Result<PredictorKind, AnalysisError> {
    r.predictor.parse().map_err(|_| AnalysisError::UnknownPredictor(r.predictor.clone()))
}

/// Distinct domains in sorted order.
pub fn domains(records: &[AucRecord]) -> Vec<String> {
    records.iter().map(|r| r.domain.clone()).collect::<BTreeSet<_>>().into_iter().collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct AggregateRow {
    pub category: &'static str,
    pub sampler: SamplerKind,
    /// Mean AUC per predictor column; `None` when no record succeeded.
    pub means: Vec<Option<f64>>,
    /// Successful records behind each mean.
    pub support: Vec<usize>,
    /// Indices of the columns holding the row maximum.
    pub best: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AggregateTable {
    pub domain: String,
    pub predictors: Vec<PredictorKind>,
    pub rows: Vec<AggregateRow>,
}

/// Mean AUC of every (sampler, predictor) cell of one domain, over the
/// successful records of all its networks, repeats and folds. Rows and
/// columns follow the canonical sampler and predictor order and cover
/// every sampler and predictor seen in the domain.
pub fn aggregate(records: &[AucRecord], domain: &str) -> Result<AggregateTable, AnalysisError> {
    let mut cells: BTreeMap<(SamplerKind, PredictorKind), Vec<f64>> = BTreeMap::new();
    let mut samplers = BTreeSet::new();
    let mut predictors = BTreeSet::new();
    for r in records.iter().filter(|r| r.domain == domain) {
        let s = sampler_of(r)?;
        let p = predictor_of(r)?;
        samplers.insert(s);
        predictors.insert(p);
        let cell = cells.entry((s, p)).or_default();
        if let (true, Some(a)) = (r.is_ok(), r.auc) {
            cell.push(a);
        }
    }
    if samplers.is_empty() {
        return Err(AnalysisError::EmptyDomain(domain.to_string()));
    }
    let predictors: Vec<PredictorKind> = PredictorKind::ALL.into_iter().filter(|p| predictors.contains(p)).collect();
    let rows = SamplerKind::ALL
        .into_iter()
        .filter(|s| samplers.contains(s))
        .map(|s| {
            let mut means = Vec::with_capacity(predictors.len());
            let mut support = Vec::with_capacity(predictors.len());
            for &p in &predictors {
                let mut v = cells.get(&(s, p)).cloned().unwrap_or_default();
                support.push(v.len());
                means.push(stable_mean(&mut v));
            }
            let top = means.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
            let best = (0..means.len()).filter(|&i| means[i] == Some(top)).collect();
            AggregateRow {
                category: s.category().name(),
                sampler: s,
                means,
                support,
                best,
            }
        })
        .collect();
    Ok(AggregateTable {
        domain: domain.to_string(),
        predictors,
        rows,
    })
}

impl AggregateTable {
    fn header(&self) -> Vec<String> {
        let mut h = vec!["category".to_string(), "sampler".to_string()];
        h.extend(self.predictors.iter().map(|p| p.name().to_string()));
        h.push("best".to_string());
        h
    }

    /// `category,sampler,<predictors>,best`; `best` joins the winning
    /// predictor names with `;`. Means are written at full precision.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), AnalysisError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.header())?;
        for row in &self.rows {
            let mut rec = vec![row.category.to_string(), row.sampler.name().to_string()];
            rec.extend(row.means.iter().map(|m| m.map(|x| x.to_string()).unwrap_or_default()));
            let best: Vec<&str> = row.best.iter().map(|&i| self.predictors[i].name()).collect();
            rec.push(best.join(";"));
            w.write_record(rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Same layout as [`write_csv`](Self::write_csv) with support counts in
    /// the cells.
    pub fn write_support_csv<W: Write>(&self, out: W) -> Result<(), AnalysisError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.header())?;
        for row in &self.rows {
            let mut rec = vec![row.category.to_string(), row.sampler.name().to_string()];
            rec.extend(row.support.iter().map(usize::to_string));
            let best: Vec<&str> = row.best.iter().map(|&i| self.predictors[i].name()).collect();
            rec.push(best.join(";"));
            w.write_record(rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Rows are entities, columns are AUC features.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    pub entities: Vec<String>,
    /// Domain (network mode) or predictor (sampler mode) of each entity.
    pub labels: Vec<String>,
    pub columns: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Exclusion {
    pub entity: String,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Pca {
    pub entities: Vec<String>,
    pub labels: Vec<String>,
    /// (PC1, PC2) score per entity.
    pub scores: Vec<[f64; 2]>,
    /// Variance along each of the two components.
    pub explained_variance: [f64; 2],
    /// Unit loadings of the two components over the feature columns.
    pub components: [Vec<f64>; 2],
    pub excluded: Vec<Exclusion>,
}

/// Top two principal components of the column-centered matrix, from the
/// eigendecomposition of its sample covariance. Each component is signed so
/// its largest-magnitude loading is positive.
pub fn pca(matrix: &FeatureMatrix) -> Result<Pca, AnalysisError> {
    let rows = matrix.values.len();
    let d = matrix.columns.len();
    if d == 0 {
        return Err(AnalysisError::NoFeatures);
    }
    assert!(matrix.values.iter().all(|r| r.len() == d), "ragged feature matrix");
    let mut mean = vec![0.0; d];
    for j in 0..d {
        let mut col: Vec<f64> = matrix.values.iter().map(|r| r[j]).collect();
        mean[j] = stable_mean(&mut col).unwrap_or(0.0);
    }
    let centered: Vec<Vec<f64>> = matrix
        .values
        .iter()
        .map(|r| r.iter().zip(&mean).map(|(x, m)| x - m).collect())
        .collect();
    let denom = rows.saturating_sub(1).max(1) as f64;
    let mut cov = vec![vec![0.0; d]; d];
    for a in 0..d {
        for b in a..d {
            let s: f64 = centered.iter().map(|r| r[a] * r[b]).sum::<f64>() / denom;
            cov[a][b] = s;
            cov[b][a] = s;
        }
    }
    let eig = jacobi_eigen(&cov)?;
    let mut components = [vec![0.0; d], vec![0.0; d]];
    let mut explained = [0.0; 2];
    for k in 0..2.min(d) {
        let mut v = eig.vectors[k].clone();
        let lead = (0..d).fold(0, |best, i| if v[i].abs() > v[best].abs() { i } else { best });
        if v[lead] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        components[k] = v;
        explained[k] = eig.values[k].max(0.0);
    }
    let scores = centered
        .iter()
        .map(|r| {
            let mut s = [0.0; 2];
            for k in 0..2 {
                s[k] = r.iter().zip(&components[k]).map(|(x, c)| x * c).sum();
            }
            s
        })
        .collect();
    Ok(Pca {
        entities: matrix.entities.clone(),
        labels: matrix.labels.clone(),
        scores,
        explained_variance: explained,
        components,
        excluded: Vec::new(),
    })
}

type CellKey = (SamplerKind, PredictorKind);

struct CellStats {
    values: Vec<f64>,
    failed: usize,
}

fn cell_means<'a>(
    records: impl Iterator<Item = &'a AucRecord>,
) -> Result<BTreeMap<(String, CellKey), CellStats>, AnalysisError> {
    let mut cells: BTreeMap<(String, CellKey), CellStats> = BTreeMap::new();
    for r in records {
        let key = (r.network.clone(), (sampler_of(r)?, predictor_of(r)?));
        let cell = cells.entry(key).or_insert(CellStats {
            values: Vec::new(),
            failed: 0,
        });
        match (r.is_ok(), r.auc) {
            (true, Some(a)) => cell.values.push(a),
            _ => cell.failed += 1,
        }
    }
    Ok(cells)
}

/// One row per network holding the mean AUC of every (sampler, predictor)
/// cell present in the results. Networks with a failed or missing cell are
/// excluded and reported.
pub fn network_features(records: &[AucRecord]) -> Result<(FeatureMatrix, Vec<Exclusion>), AnalysisError> {
    let cells = cell_means(records.iter())?;
    let keys: BTreeSet<CellKey> = cells.keys().map(|k| k.1).collect();
    let mut domain_of: BTreeMap<&str, &str> = BTreeMap::new();
    for r in records {
        domain_of.entry(&r.network).or_insert(&r.domain);
    }
    let columns: Vec<String> = keys.iter().map(|(s, p)| format!("{}/{}", s.name(), p.name())).collect();
    let mut matrix = FeatureMatrix {
        entities: Vec::new(),
        labels: Vec::new(),
        columns,
        values: Vec::new(),
    };
    let mut excluded = Vec::new();
    for (&net, &domain) in &domain_of {
        let mut row = Vec::with_capacity(keys.len());
        let mut gaps = Vec::new();
        for &key in &keys {
            match cells.get(&(net.to_string(), key)) {
                Some(c) if c.failed == 0 && !c.values.is_empty() => {
                    row.push(stable_mean(&mut c.values.clone()).expect("nonempty"))
                }
                Some(_) => gaps.push(format!("{}/{} failed", key.0.name(), key.1.name())),
                None => gaps.push(format!("{}/{} missing", key.0.name(), key.1.name())),
            }
        }
        if gaps.is_empty() {
            matrix.entities.push(net.to_string());
            matrix.labels.push(domain.to_string());
            matrix.values.push(row);
        } else {
            excluded.push(Exclusion {
                entity: net.to_string(),
                reason: gaps.join("; "),
            });
        }
    }
    Ok((matrix, excluded))
}

/// PCA over networks, each described by its full sampler x predictor AUC
/// vector.
pub fn pca_networks(records: &[AucRecord]) -> Result<Pca, AnalysisError> {
    let (matrix, excluded) = network_features(records)?;
    if matrix.entities.len() < 3 {
        return Err(AnalysisError::TooFewNetworks {
            complete: matrix.entities.len(),
            excluded: excluded.len(),
        });
    }
    let mut out = pca(&matrix)?;
    out.excluded = excluded;
    Ok(out)
}

/// One row per sampler holding the mean AUC of `predictor` on every network
/// of `domain`. All samplers must be covered.
pub fn sampler_features(
    records: &[AucRecord],
    domain: &str,
    predictor: PredictorKind,
) -> Result<FeatureMatrix, AnalysisError> {
    let selected = records
        .iter()
        .filter(|r| r.domain == domain && r.predictor == predictor.name());
    let cells = cell_means(selected)?;
    let networks: BTreeSet<&str> = cells.keys().map(|k| k.0.as_str()).collect();
    if networks.is_empty() {
        return Err(AnalysisError::EmptyDomain(domain.to_string()));
    }
    let mut gaps = Vec::new();
    let mut values = Vec::with_capacity(SamplerKind::ALL.len());
    for s in SamplerKind::ALL {
        let mut row = Vec::with_capacity(networks.len());
        for &net in &networks {
            match cells.get(&(net.to_string(), (s, predictor))) {
                Some(c) if c.failed == 0 && !c.values.is_empty() => {
                    row.push(stable_mean(&mut c.values.clone()).expect("nonempty"))
                }
                Some(_) => gaps.push(format!("{}@{net} failed", s.name())),
                None => gaps.push(format!("{}@{net} missing", s.name())),
            }
        }
        values.push(row);
    }
    if !gaps.is_empty() {
        return Err(AnalysisError::MissingCoverage(gaps));
    }
    Ok(FeatureMatrix {
        entities: SamplerKind::ALL.iter().map(|s| s.name().to_string()).collect(),
        labels: vec![predictor.name().to_string(); SamplerKind::ALL.len()],
        columns: networks.iter().map(|n| n.to_string()).collect(),
        values,
    })
}

/// PCA over samplers for one (domain, predictor) panel.
pub fn pca_samplers(records: &[AucRecord], domain: &str, predictor: PredictorKind) -> Result<Pca, AnalysisError> {
    pca(&sampler_features(records, domain, predictor)?)
}

impl Pca {
    pub fn write_csv<W: Write>(&self, w: &mut csv::Writer<W>) -> Result<(), AnalysisError> {
        for (i, s) in self.scores.iter().enumerate() {
            w.write_record([
                self.entities[i].clone(),
                self.labels[i].clone(),
                s[0].to_string(),
                s[1].to_string(),
                self.explained_variance[0].to_string(),
                self.explained_variance[1].to_string(),
            ])?;
        }
        Ok(())
    }

    /// Entity whose score lies farthest from the score centroid.
    pub fn farthest_from_centroid(&self) -> Option<&str> {
        let n = self.scores.len() as f64;
        let c = [0, 1].map(|k| self.scores.iter().map(|s| s[k]).sum::<f64>() / n);
        self.scores
            .iter()
            .enumerate()
            .map(|(i, s)| (i, (s[0] - c[0]).powi(2) + (s[1] - c[1]).powi(2)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, _)| self.entities[i].as_str())
    }
}

/// Writes the PCA header followed by every panel in order.
pub fn write_pca_csv<W: Write>(out: W, panels: &[Pca]) -> Result<(), AnalysisError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PCA_COLUMNS)?;
    for p in panels {
        p.write_csv(&mut w)?;
    }
    w.flush()?;
    Ok(())
}
