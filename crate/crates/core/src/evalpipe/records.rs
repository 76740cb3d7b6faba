//! Result rows and their CSV form.

use std::cmp::Ordering;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const RESULT_COLUMNS: [&str; 11] = [
    "network", "domain", "sampler", "predictor", "repeat", "fold", "auc", "n", "m", "seed", "status",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Failed,
}

/// One evaluated fold of one (network, sampler, predictor) cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AucRecord {
    pub network: String,
    pub domain: String,
    pub sampler: String,
    pub predictor: String,
    pub repeat: usize,
    pub fold: usize,
    /// Empty for failed rows.
    pub auc: Option<f64>,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub status: Status,
}

impl AucRecord {
    pub fn is_ok(&self) -> bool {
        self.status == Status::Ok
    }

    /// Order by network, domain, sampler, predictor, repeat, fold.
    pub fn sort_key_cmp(&self, other: &Self) -> Ordering {
        (&self.network, &self.domain, &self.sampler, &self.predictor, self.repeat, self.fold).cmp(&(
            &other.network,
            &other.domain,
            &other.sampler,
            &other.predictor,
            other.repeat,
            other.fold,
        ))
    }
}

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("results header mismatch: expected column {expected:?} at position {position}, found {found:?}")]
    Header {
        position: usize,
        expected: &'static str,
        found: String,
    },
    #[error("results header is missing column {0:?}")]
    MissingColumn(&'static str),
    #[error("results row {row}: {message}")]
    Row { row: usize, message: String },
    #[error("results file holds no rows")]
    Empty,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub fn sort_records(records: &mut [AucRecord]) {
    records.sort_by(AucRecord::sort_key_cmp);
}

/// Writes the header and all rows in the given order.
pub fn write_records<W: Write>(out: W, records: &[AucRecord]) -> Result<(), RecordError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(RESULT_COLUMNS)?;
    for r in records {
        write_row(&mut w, r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_row<W: Write>(w: &mut csv::Writer<W>, r: &AucRecord) -> Result<(), RecordError> {
    let auc = r.auc.map(|a| a.to_string()).unwrap_or_default();
    let status = match r.status {
        Status::Ok => "ok",
        Status::Failed => "failed",
    };
    w.write_record([
        r.network.as_str(),
        r.domain.as_str(),
        r.sampler.as_str(),
        r.predictor.as_str(),
        &r.repeat.to_string(),
        &r.fold.to_string(),
        &auc,
        &r.n.to_string(),
        &r.m.to_string(),
        &r.seed.to_string(),
        status,
    ])?;
    Ok(())
}

/// Reads a results CSV, checking the header column by column. With
/// `allow_empty` a header-only file yields no rows instead of an error.
pub fn read_records<R: Read>(input: R, allow_empty: bool) -> Result<Vec<AucRecord>, RecordError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(input);
    let header = rdr.headers()?.clone();
    for (position, expected) in RESULT_COLUMNS.iter().enumerate() {
        match header.get(position) {
            Some(found) if found == *expected => {}
            Some(found) => {
                return Err(RecordError::Header {
                    position,
                    expected,
                    found: found.to_string(),
                })
            }
            None => return Err(RecordError::MissingColumn(expected)),
        }
    }
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let line = i + 2;
        let bad = |message: String| RecordError::Row { row: line, message };
        if row.len() != RESULT_COLUMNS.len() {
            return Err(bad(format!("expected {} fields, found {}", RESULT_COLUMNS.len(), row.len())));
        }
        let int = |idx: usize| -> Result<u64, RecordError> {
            row[idx]
                .parse::<u64>()
                .map_err(|_| bad(format!("column {} is not an integer: {:?}", RESULT_COLUMNS[idx], &row[idx])))
        };
        let status = match &row[10] {
            "ok" => Status::Ok,
            "failed" => Status::Failed,
            other => return Err(bad(format!("column status has unknown value {other:?}"))),
        };
        let auc = if row[6].is_empty() {
            None
        } else {
            let a: f64 = row[6].parse().map_err(|_| bad(format!("column auc is not a number: {:?}", &row[6])))?;
            if !(0.0..=1.0).contains(&a) {
                return Err(bad(format!("column auc out of [0, 1]: {a}")));
            }
            Some(a)
        };
        if status == Status::Ok && auc.is_none() {
            return Err(bad("column auc is empty on an ok row".into()));
        }
        out.push(AucRecord {
            network: row[0].to_string(),
            domain: row[1].to_string(),
            sampler: row[2].to_string(),
            predictor: row[3].to_string(),
            repeat: int(4)? as usize,
            fold: int(5)? as usize,
            auc,
            n: int(7)? as usize,
            m: int(8)? as usize,
            seed: int(9)?,
            status,
        });
    }
    if out.is_empty() && !allow_empty {
        return Err(RecordError::Empty);
    }
    Ok(out)
}
