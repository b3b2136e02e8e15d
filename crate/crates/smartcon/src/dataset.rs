//! Line-record dataset format.
//!
//! One CSV-ish record per scheduling decision (or sampled idle subframe),
//! fixed header, comma-separated, floats printed with six decimals. The
//! reader rejects records that violate the event invariant (alpha = 0 with
//! nonzero gamma/delta) and any out-of-range field.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::gan::EventRecord;
use crate::link::Direction;

pub const DATASET_HEADER: &str = "t_ms,dir,alpha,prb_norm,mcs_norm,rep_norm,sinr_db,plr";

/// Wire form of one event record plus its context.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRecord {
    pub t_ms: u64,
    pub direction: Direction,
    pub alpha: u8,
    pub prb_norm: f64,
    pub mcs_norm: f64,
    pub rep_norm: f64,
    pub sinr_db: f64,
    pub plr: f64,
}

impl DatasetRecord {
    pub fn event(&self) -> EventRecord {
        EventRecord {
            t_ms: self.t_ms,
            alpha: self.alpha,
            gamma: self.prb_norm,
            delta: (self.mcs_norm, self.rep_norm),
        }
    }

    fn validate(&self) -> Result<()> {
        self.event().validate()?;
        if !(0.0..=1.0).contains(&self.plr) {
            return Err(Error::Config {
                key: "plr".into(),
                reason: format!("must lie in [0, 1], got {}", self.plr),
            });
        }
        if !self.sinr_db.is_finite() {
            return Err(Error::NonFinite("sinr_db"));
        }
        Ok(())
    }

    fn to_line(&self) -> String {
        format!(
            "{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6}",
            self.t_ms,
            self.direction.letter(),
            self.alpha,
            self.prb_norm,
            self.mcs_norm,
            self.rep_norm,
            self.sinr_db,
            self.plr
        )
    }
}

pub fn format_dataset(records: &[DatasetRecord]) -> String {
    let mut out = String::with_capacity(records.len() * 64 + DATASET_HEADER.len() + 1);
    out.push_str(DATASET_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.to_line());
        out.push('\n');
    }
    out
}

/// Write the dataset atomically (temp file + rename).
pub fn write_dataset(path: &Path, records: &[DatasetRecord]) -> Result<()> {
    crate::persist::write_atomic(path, format_dataset(records).as_bytes())
}

fn parse_line(path: &Path, lineno: usize, line: &str) -> Result<DatasetRecord> {
    let err = |reason: String| Error::Parse {
        path: path.display().to_string(),
        line: lineno,
        reason,
    };
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != 8 {
        return Err(err(format!("expected 8 fields, found {}", fields.len())));
    }
    let t_ms: u64 = fields[0]
        .parse()
        .map_err(|_| err(format!("bad t_ms `{}`", fields[0])))?;
    let mut chars = fields[1].chars();
    let direction = match (chars.next(), chars.next()) {
        (Some(c), None) => Direction::from_letter(c)
            .ok_or_else(|| err(format!("bad direction `{}`", fields[1])))?,
        _ => return Err(err(format!("bad direction `{}`", fields[1]))),
    };
    let alpha: u8 = fields[2]
        .parse()
        .map_err(|_| err(format!("bad alpha `{}`", fields[2])))?;
    let mut floats = [0.0f64; 5];
    for (slot, raw) in floats.iter_mut().zip(&fields[3..8]) {
        *slot = raw.parse().map_err(|_| err(format!("bad float `{raw}`")))?;
    }
    let record = DatasetRecord {
        t_ms,
        direction,
        alpha,
        prb_norm: floats[0],
        mcs_norm: floats[1],
        rep_norm: floats[2],
        sinr_db: floats[3],
        plr: floats[4],
    };
    record.validate().map_err(|e| err(e.to_string()))?;
    Ok(record)
}

pub fn parse_dataset(path: &Path, text: &str) -> Result<Vec<DatasetRecord>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == DATASET_HEADER => {}
        other => {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line: 1,
                reason: format!(
                    "bad header `{}` (expected `{DATASET_HEADER}`)",
                    other.unwrap_or("")
                ),
            })
        }
    }
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        records.push(parse_line(path, i + 2, line)?);
    }
    Ok(records)
}

pub fn read_dataset(path: &Path) -> Result<Vec<DatasetRecord>> {
    let text = fs::read_to_string(path)?;
    parse_dataset(path, &text)
}

/// Split a record stream into episodes wherever time fails to increase
/// (each episode restarts its clock).
pub fn split_episodes(records: &[DatasetRecord]) -> Vec<&[DatasetRecord]> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..records.len() {
        if records[i].t_ms <= records[i - 1].t_ms {
            out.push(&records[start..i]);
            start = i;
        }
    }
    if start < records.len() {
        out.push(&records[start..]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(t_ms: u64, alpha: u8, prb: f64) -> DatasetRecord {
        DatasetRecord {
            t_ms,
            direction: Direction::Uplink,
            alpha,
            prb_norm: prb,
            mcs_norm: if alpha == 1 { 0.5 } else { 0.0 },
            rep_norm: if alpha == 1 { 0.42857142857142855 } else { 0.0 },
            sinr_db: 11.25,
            plr: 0.125,
        }
    }

    #[test]
    fn round_trip_preserves_records() {
        let records = vec![rec(7, 1, 0.4), rec(20, 0, 0.0), rec(31, 1, 1.0)];
        let text = format_dataset(&records);
        assert!(text.starts_with(DATASET_HEADER));
        let parsed = parse_dataset(Path::new("mem"), &text).unwrap();
        assert_eq!(parsed.len(), 3);
        assert_eq!(parsed[0].t_ms, 7);
        assert!((parsed[0].prb_norm - 0.4).abs() < 1e-9);
        assert_eq!(parsed[1].alpha, 0);
    }

    #[test]
    fn reader_rejects_invariant_violations() {
        let mut bad = rec(7, 0, 0.0);
        bad.mcs_norm = 0.5; // idle record with nonzero delta
        let text = format_dataset(&[bad]);
        assert!(parse_dataset(Path::new("mem"), &text).is_err());

        let text = format!("{DATASET_HEADER}\n7,U,2,0.0,0.0,0.0,10.0,0.0\n");
        assert!(parse_dataset(Path::new("mem"), &text).is_err());

        let text = format!("{DATASET_HEADER}\n7,X,1,0.0,0.0,0.0,10.0,0.0\n");
        assert!(parse_dataset(Path::new("mem"), &text).is_err());

        assert!(parse_dataset(Path::new("mem"), "wrong,header\n").is_err());
    }

    #[test]
    fn episode_split_on_clock_reset() {
        let records = vec![
            rec(5, 1, 0.2),
            rec(9, 1, 0.2),
            rec(0, 1, 0.2),
            rec(4, 1, 0.2),
        ];
        let episodes = split_episodes(&records);
        assert_eq!(episodes.len(), 2);
        assert_eq!(episodes[0].len(), 2);
        assert_eq!(episodes[1].len(), 2);
        assert!(split_episodes(&[]).is_empty());
    }
}
