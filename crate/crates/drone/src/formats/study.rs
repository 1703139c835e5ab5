//! Density-study tables.
//!
//! Records: `factor,method,rep,rmse_t1,rmse_t2`.
//! Summary: `factor,method,mean_rmse_t1,std_rmse_t1,mean_rmse_t2,std_rmse_t2`.
//! Fit: `param,slope,intercept,r2` for the network's mean RMSE vs factor.

use std::path::Path;

use drone_core::study::{Method, StudyRecord, StudySummary};

use super::{read_bytes, write_bytes};
use crate::error::{Error, Result};

fn finish(w: csv::Writer<Vec<u8>>) -> Vec<u8> {
    w.into_inner().expect("in-memory CSV writer cannot fail")
}

pub fn records_to_bytes(records: &[StudyRecord]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["factor", "method", "rep", "rmse_t1", "rmse_t2"]).unwrap();
    for r in records {
        w.write_record([
            r.factor.to_string(),
            r.method.name().into(),
            r.rep.to_string(),
            r.rmse_t1.to_string(),
            r.rmse_t2.to_string(),
        ])
        .unwrap();
    }
    finish(w)
}

pub fn parse_records(buf: &[u8]) -> Result<Vec<StudyRecord>, String> {
    let mut r = csv::Reader::from_reader(buf);
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        let at = |m: &str| format!("row {}: {m}", i + 1);
        if rec.len() != 5 {
            return Err(at("expected 5 columns"));
        }
        let method = match &rec[1] {
            "nn" => Method::Nn,
            "match" => Method::Match,
            m => return Err(at(&format!("unknown method {m:?}"))),
        };
        out.push(StudyRecord {
            factor: rec[0].parse().map_err(|_| at("bad factor"))?,
            method,
            rep: rec[2].parse().map_err(|_| at("bad rep"))?,
            rmse_t1: rec[3].parse().map_err(|_| at("bad rmse_t1"))?,
            rmse_t2: rec[4].parse().map_err(|_| at("bad rmse_t2"))?,
        });
    }
    Ok(out)
}

pub fn summary_to_bytes(s: &StudySummary) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["factor", "method", "mean_rmse_t1", "std_rmse_t1", "mean_rmse_t2", "std_rmse_t2"]).unwrap();
    for r in &s.rows {
        w.write_record([
            r.factor.to_string(),
            r.method.name().into(),
            r.mean_t1.to_string(),
            r.std_t1.to_string(),
            r.mean_t2.to_string(),
            r.std_t2.to_string(),
        ])
        .unwrap();
    }
    finish(w)
}

pub fn fit_to_bytes(s: &StudySummary) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["param", "slope", "intercept", "r2"]).unwrap();
    for (name, fit) in [("t1", s.nn_fit_t1), ("t2", s.nn_fit_t2)] {
        if let Some(f) = fit {
            w.write_record([name.to_string(), f.slope.to_string(), f.intercept.to_string(), f.r2.to_string()]).unwrap();
        }
    }
    finish(w)
}

pub fn read_records(path: &Path) -> Result<Vec<StudyRecord>> {
    parse_records(&read_bytes(path)?).map_err(|m| Error::format(path, m))
}

pub fn write_records(path: &Path, records: &[StudyRecord]) -> Result<()> {
    write_bytes(path, &records_to_bytes(records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use drone_core::study::summarize;

    #[test]
    fn records_round_trip_and_summary_layout() {
        let recs = vec![
            StudyRecord { factor: 2, method: Method::Nn, rep: 0, rmse_t1: 12.5, rmse_t2: 3.25 },
            StudyRecord { factor: 2, method: Method::Match, rep: 0, rmse_t1: 40.0, rmse_t2: 9.0 },
            StudyRecord { factor: 5, method: Method::Nn, rep: 0, rmse_t1: 20.0, rmse_t2: 5.0 },
            StudyRecord { factor: 5, method: Method::Match, rep: 0, rmse_t1: 80.0, rmse_t2: 19.0 },
        ];
        let b = records_to_bytes(&recs);
        assert!(b.starts_with(b"factor,method,rep,rmse_t1,rmse_t2\n2,nn,0,12.5,3.25\n"));
        assert_eq!(parse_records(&b).unwrap(), recs);

        let s = summarize(&[2, 5], &recs).unwrap();
        let text = String::from_utf8(summary_to_bytes(&s)).unwrap();
        assert_eq!(text.lines().count(), 5);
        let fit = String::from_utf8(fit_to_bytes(&s)).unwrap();
        assert!(fit.starts_with("param,slope,intercept,r2\nt1,2.5,7.5,1\n"), "{fit}");
    }
}
