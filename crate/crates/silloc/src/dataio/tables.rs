//! CSV tables: pose manifests, localization records and refinement traces.

use std::collections::HashSet;
use std::path::Path;

use silloc_core::refine::TraceRow;
use silloc_core::Pose;

use super::{read_file, write_file, DataError, Result};

const POSE_HEADER: [&str; 7] = ["id", "x", "y", "z", "yaw", "pitch", "roll"];

pub const RECORD_HEADER: [&str; 23] = [
    "id", "prior_x", "prior_y", "prior_z", "prior_yaw", "prior_pitch", "prior_roll", "coarse_x", "coarse_y",
    "coarse_z", "coarse_yaw", "coarse_pitch", "coarse_roll", "coarse_iou", "final_x", "final_y", "final_z",
    "final_yaw", "final_pitch", "final_roll", "final_iou", "ms_coarse", "ms_refine",
];

#[derive(Debug, Clone, PartialEq)]
pub struct PoseRow {
    pub id: String,
    pub pose: Pose,
}

/// One query's outcome. `result` is `None` when the pipeline failed.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub id: String,
    pub prior: Pose,
    pub result: Option<Outcome>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub coarse: Pose,
    /// Coarse pose scored at the refinement resolution.
    pub coarse_iou: f64,
    pub final_pose: Pose,
    pub final_iou: f64,
    pub ms_coarse: f64,
    pub ms_refine: f64,
}

fn pose_fields(p: &Pose) -> [String; 6] {
    [p.x, p.y, p.z, p.yaw, p.pitch, p.roll].map(|v| format!("{v:.6}"))
}

fn csv_error(e: csv::Error) -> DataError {
    let line = e.position().map_or(0, |p| p.line());
    DataError::Csv {
        line,
        msg: e.to_string(),
    }
}

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Vec<u8> {
    w.into_inner().expect("in-memory writer")
}

fn reader(bytes: &[u8]) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes)
}

fn check_header(r: &mut csv::Reader<&[u8]>, want: &[&str]) -> Result<()> {
    let got = r.headers().map_err(csv_error)?;
    if got.iter().ne(want.iter().copied()) {
        return Err(DataError::Csv {
            line: 1,
            msg: format!("header must be `{}`", want.join(",")),
        });
    }
    Ok(())
}

fn parse_f64(rec: &csv::StringRecord, col: usize, name: &str) -> Result<f64> {
    let line = rec.position().map_or(0, |p| p.line());
    rec[col].parse::<f64>().map_err(|_| DataError::Csv {
        line,
        msg: format!("{name}: `{}` is not a number", &rec[col]),
    })
}

fn parse_pose(rec: &csv::StringRecord, start: usize, names: &[&str]) -> Result<Pose> {
    let mut v = [0.0; 6];
    for (i, slot) in v.iter_mut().enumerate() {
        *slot = parse_f64(rec, start + i, names[start + i])?;
    }
    Pose::new(v[0], v[1], v[2], v[3], v[4], v[5]).map_err(|e| DataError::Csv {
        line: rec.position().map_or(0, |p| p.line()),
        msg: e.to_string(),
    })
}

fn unique_id(seen: &mut HashSet<String>, rec: &csv::StringRecord) -> Result<String> {
    let id = rec[0].to_string();
    if id.is_empty() || !seen.insert(id.clone()) {
        return Err(DataError::Csv {
            line: rec.position().map_or(0, |p| p.line()),
            msg: format!("empty or duplicate id `{id}`"),
        });
    }
    Ok(id)
}

/// `id,x,y,z,yaw,pitch,roll` with six decimals.
pub fn write_poses(path: &Path, rows: &[PoseRow]) -> Result<()> {
    let mut w = writer();
    w.write_record(POSE_HEADER).map_err(csv_error)?;
    for r in rows {
        let f = pose_fields(&r.pose);
        w.write_record(std::iter::once(r.id.as_str()).chain(f.iter().map(String::as_str)))
            .map_err(csv_error)?;
    }
    write_file(path, &finish(w))
}

pub fn read_poses(path: &Path) -> Result<Vec<PoseRow>> {
    let bytes = read_file(path)?;
    let mut r = reader(&bytes);
    check_header(&mut r, &POSE_HEADER)?;
    let mut seen = HashSet::new();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_error)?;
        rows.push(PoseRow {
            id: unique_id(&mut seen, &rec)?,
            pose: parse_pose(&rec, 1, &POSE_HEADER)?,
        });
    }
    Ok(rows)
}

pub fn write_records(path: &Path, records: &[Record]) -> Result<()> {
    let mut w = writer();
    w.write_record(&RECORD_HEADER[..]).map_err(csv_error)?;
    for r in records {
        let mut row: Vec<String> = Vec::with_capacity(RECORD_HEADER.len());
        row.push(r.id.clone());
        row.extend(pose_fields(&r.prior));
        match &r.result {
            Some(o) => {
                row.extend(pose_fields(&o.coarse));
                row.push(format!("{:.6}", o.coarse_iou));
                row.extend(pose_fields(&o.final_pose));
                row.push(format!("{:.6}", o.final_iou));
                row.push(format!("{:.3}", o.ms_coarse));
                row.push(format!("{:.3}", o.ms_refine));
            }
            None => row.resize(RECORD_HEADER.len(), String::new()),
        }
        w.write_record(&row).map_err(csv_error)?;
    }
    write_file(path, &finish(w))
}

pub fn read_records(path: &Path) -> Result<Vec<Record>> {
    let bytes = read_file(path)?;
    let mut r = reader(&bytes);
    let names = &RECORD_HEADER[..];
    check_header(&mut r, names)?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_error)?;
        let id = unique_id(&mut seen, &rec)?;
        let prior = parse_pose(&rec, 1, names)?;
        let result = if rec.iter().skip(7).all(str::is_empty) {
            None
        } else {
            Some(Outcome {
                coarse: parse_pose(&rec, 7, names)?,
                coarse_iou: parse_f64(&rec, 13, names[13])?,
                final_pose: parse_pose(&rec, 14, names)?,
                final_iou: parse_f64(&rec, 20, names[20])?,
                ms_coarse: parse_f64(&rec, 21, names[21])?,
                ms_refine: parse_f64(&rec, 22, names[22])?,
            })
        };
        out.push(Record { id, prior, result });
    }
    Ok(out)
}

/// `iteration,beam,best_iou`.
pub fn write_trace(path: &Path, trace: &[TraceRow]) -> Result<()> {
    let mut w = writer();
    w.write_record(["iteration", "beam", "best_iou"]).map_err(csv_error)?;
    for t in trace {
        w.write_record([t.iteration.to_string(), t.beam.to_string(), format!("{:.6}", t.best_iou)])
            .map_err(csv_error)?;
    }
    write_file(path, &finish(w))
}
