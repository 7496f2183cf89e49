//! Waveform and event-set CSV files.
//!
//! A waveform file has the header `n,value` and one row per sample, with
//! `n` counting up from zero. An event set is either a directory holding
//! one waveform file per event (read in file-name order) or a single file
//! with an extra `event_id` column.
//!
//! The files carry no sample period; loaded waveforms use
//! [`DEFAULT_SAMPLE_PERIOD`].

use std::fmt::Display;
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::waveform::{RealWaveform, Waveform, DEFAULT_SAMPLE_PERIOD};

fn parse_err(path: &Path, line: u64, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

struct Columns {
    event_id: Option<usize>,
    n: usize,
    value: usize,
}

fn columns(headers: &csv::StringRecord, path: &Path) -> Result<Columns> {
    let find = |name: &str| headers.iter().position(|h| h.trim() == name);
    let (Some(n), Some(value)) = (find("n"), find("value")) else {
        return Err(parse_err(path, 1, "expected header with columns n,value"));
    };
    Ok(Columns {
        event_id: find("event_id"),
        n,
        value,
    })
}

fn field<'a>(record: &'a csv::StringRecord, idx: usize, path: &Path, line: u64) -> Result<&'a str> {
    record
        .get(idx)
        .map(str::trim)
        .ok_or_else(|| parse_err(path, line, "missing column"))
}

/// Parses rows into `(event_id, samples)` groups in order of appearance.
fn read_groups<T: FromStr, R: Read>(
    reader: R,
    path: &Path,
    require_event_id: bool,
) -> Result<Vec<(String, Vec<T>)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let headers = match rdr.headers() {
        Ok(h) if !h.is_empty() && !(h.len() == 1 && h[0].is_empty()) => h.clone(),
        Ok(_) => return Err(Error::NoSamples),
        Err(e) => return Err(parse_err(path, 1, e.to_string())),
    };
    let cols = columns(&headers, path)?;
    if require_event_id && cols.event_id.is_none() {
        return Err(parse_err(path, 1, "expected an event_id column"));
    }

    let mut groups: Vec<(String, Vec<T>)> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let id = match cols.event_id {
            Some(idx) => field(&record, idx, path, line)?.to_string(),
            None => String::new(),
        };
        let n: usize = field(&record, cols.n, path, line)?
            .parse()
            .map_err(|_| parse_err(path, line, "sample index is not a non-negative integer"))?;
        let raw = field(&record, cols.value, path, line)?;
        let value: T = raw
            .parse()
            .map_err(|_| parse_err(path, line, format!("cannot parse value {raw:?}")))?;

        let group = match groups.last_mut() {
            Some(g) if g.0 == id => g,
            _ => {
                if groups.iter().any(|g| g.0 == id) {
                    return Err(parse_err(
                        path,
                        line,
                        format!("event {id:?} is not contiguous"),
                    ));
                }
                groups.push((id, Vec::new()));
                groups.last_mut().unwrap()
            }
        };
        if n != group.1.len() {
            return Err(parse_err(
                path,
                line,
                format!("expected sample index {}, found {n}", group.1.len()),
            ));
        }
        group.1.push(value);
    }
    if groups.is_empty() {
        return Err(Error::NoSamples);
    }
    Ok(groups)
}

/// Reads a single waveform from any reader; `path` is only used in errors.
pub fn read_waveform<T: FromStr, R: Read>(reader: R, path: &Path) -> Result<Waveform<T>> {
    let mut groups = read_groups::<T, R>(reader, path, false)?;
    if groups.len() > 1 {
        return Err(parse_err(path, 1, "file holds more than one event"));
    }
    let (_, samples) = groups.pop().ok_or(Error::NoSamples)?;
    Ok(Waveform::new(samples, DEFAULT_SAMPLE_PERIOD))
}

pub fn load_waveform<T: FromStr>(path: impl AsRef<Path>) -> Result<Waveform<T>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_waveform(file, path)
}

pub fn write_waveform<T: Display, W: Write>(w: &Waveform<T>, mut out: W) -> std::io::Result<()> {
    writeln!(out, "n,value")?;
    for (n, v) in w.samples.iter().enumerate() {
        writeln!(out, "{n},{v}")?;
    }
    out.flush()
}

pub fn save_waveform<T: Display>(w: &Waveform<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_waveform(w, std::io::BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

/// Loads an event set from a directory of waveform files or from one file
/// with an `event_id` column.
pub fn load_events(path: impl AsRef<Path>) -> Result<Vec<RealWaveform>> {
    let path = path.as_ref();
    if path.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(path)
            .map_err(|e| Error::io(path, e))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|ext| ext == "csv"))
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(Error::NoSamples);
        }
        files.iter().map(load_waveform::<f64>).collect()
    } else {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let groups = read_groups::<f64, _>(file, path, true)?;
        Ok(groups
            .into_iter()
            .map(|(_, s)| Waveform::new(s, DEFAULT_SAMPLE_PERIOD))
            .collect())
    }
}

/// Writes an event set as a single file with an `event_id` column.
pub fn save_events<T: Display>(events: &[Waveform<T>], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    let write = |out: &mut std::io::BufWriter<File>| -> std::io::Result<()> {
        writeln!(out, "event_id,n,value")?;
        for (id, event) in events.iter().enumerate() {
            for (n, v) in event.samples.iter().enumerate() {
                writeln!(out, "{id},{n},{v}")?;
            }
        }
        out.flush()
    };
    write(&mut out).map_err(|e| Error::io(path, e))
}
