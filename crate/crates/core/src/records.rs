//! CSV files exchanged between commands: ground truth, camera shifts and
//! detections.

use std::collections::BTreeMap;
use std::path::Path;

use crate::detect::Detection;
use crate::error::{Error, Result};
use crate::imaging::BoundingBox;
use crate::io::write_atomic;

pub const TRUTH_HEADER: [&str; 5] = ["frame_id", "x", "y", "w", "h"];
pub const SHIFTS_HEADER: [&str; 3] = ["frame_id", "dx", "dy"];
pub const DETECTIONS_HEADER: [&str; 6] = ["frame_id", "x", "y", "w", "h", "score"];

fn finish(path: &Path, w: csv::Writer<Vec<u8>>) -> Result<()> {
    let bytes = w.into_inner().map_err(|e| Error::InvalidParameter(e.to_string()))?;
    write_atomic(path, &bytes)
}

fn box_fields(b: &BoundingBox) -> [String; 4] {
    [b.x.to_string(), b.y.to_string(), b.w.to_string(), b.h.to_string()]
}

/// One row per box; frames without boxes contribute no rows.
pub fn write_truth(path: impl AsRef<Path>, ids: &[String], boxes: &[Vec<BoundingBox>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TRUTH_HEADER)?;
    for (id, frame) in ids.iter().zip(boxes) {
        for b in frame {
            let [x, y, bw, bh] = box_fields(b);
            w.write_record([id.as_str(), &x, &y, &bw, &bh])?;
        }
    }
    finish(path.as_ref(), w)
}

fn read_rows(path: &Path, header: &[&str]) -> Result<Vec<(usize, csv::StringRecord)>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::from(e).in_file(path))?;
    let got = rdr.headers().map_err(|e| Error::from(e).in_file(path))?.clone();
    if got.iter().map(str::trim).ne(header.iter().copied()) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            msg: format!("expected header {}", header.join(",")),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::from(e).in_file(path))?;
        rows.push((i + 2, rec));
    }
    Ok(rows)
}

fn field<T: std::str::FromStr>(path: &Path, line: usize, rec: &csv::StringRecord, i: usize, name: &str) -> Result<T> {
    rec.get(i)
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg: format!("bad {name}"),
        })
}

/// Truth boxes keyed by frame id.
pub fn read_truth(path: impl AsRef<Path>) -> Result<BTreeMap<String, Vec<BoundingBox>>> {
    let path = path.as_ref();
    let mut out: BTreeMap<String, Vec<BoundingBox>> = BTreeMap::new();
    for (line, rec) in read_rows(path, &TRUTH_HEADER)? {
        let id: String = field(path, line, &rec, 0, "frame_id")?;
        let b = BoundingBox::try_new(
            field(path, line, &rec, 1, "x")?,
            field(path, line, &rec, 2, "y")?,
            field(path, line, &rec, 3, "w")?,
            field(path, line, &rec, 4, "h")?,
        )
        .map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg: e.to_string(),
        })?;
        out.entry(id).or_default().push(b);
    }
    Ok(out)
}

/// Align truth rows with a sequence's frame ids. Ids absent from the file
/// have no boxes; ids in the file but not in the sequence are an error.
pub fn truth_for(path: impl AsRef<Path>, ids: &[String]) -> Result<Vec<Vec<BoundingBox>>> {
    let path = path.as_ref();
    let mut map = read_truth(path)?;
    let out = ids.iter().map(|id| map.remove(id).unwrap_or_default()).collect();
    if let Some(extra) = map.keys().next() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            msg: format!("truth for frame {extra} which is not in the sequence"),
        });
    }
    Ok(out)
}

pub fn write_shifts(path: impl AsRef<Path>, ids: &[String], shifts: &[(i32, i32)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SHIFTS_HEADER)?;
    for (id, (dx, dy)) in ids.iter().zip(shifts) {
        w.write_record([id.as_str(), &dx.to_string(), &dy.to_string()])?;
    }
    finish(path.as_ref(), w)
}

pub fn read_shifts(path: impl AsRef<Path>) -> Result<Vec<(String, i32, i32)>> {
    let path = path.as_ref();
    read_rows(path, &SHIFTS_HEADER)?
        .into_iter()
        .map(|(line, rec)| {
            Ok((
                field(path, line, &rec, 0, "frame_id")?,
                field(path, line, &rec, 1, "dx")?,
                field(path, line, &rec, 2, "dy")?,
            ))
        })
        .collect()
}

/// Detections with scores at six decimals.
pub fn write_detections<'a>(
    path: impl AsRef<Path>,
    rows: impl IntoIterator<Item = (&'a str, &'a [Detection])>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(DETECTIONS_HEADER)?;
    for (id, dets) in rows {
        for d in dets {
            let [x, y, bw, bh] = box_fields(&d.bbox);
            w.write_record([id, &x, &y, &bw, &bh, &format!("{:.6}", d.score)])?;
        }
    }
    finish(path.as_ref(), w)
}

pub fn read_detections(path: impl AsRef<Path>) -> Result<Vec<(String, Detection)>> {
    let path = path.as_ref();
    read_rows(path, &DETECTIONS_HEADER)?
        .into_iter()
        .map(|(line, rec)| {
            let bbox = BoundingBox::try_new(
                field(path, line, &rec, 1, "x")?,
                field(path, line, &rec, 2, "y")?,
                field(path, line, &rec, 3, "w")?,
                field(path, line, &rec, 4, "h")?,
            )?;
            Ok((
                field(path, line, &rec, 0, "frame_id")?,
                Detection {
                    bbox,
                    score: field(path, line, &rec, 5, "score")?,
                },
            ))
        })
        .collect()
}
