//! Versioned JSON-Lines files: the first line is a header object with
//! `format` and `version` keys, every following line is one record.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{Error, Result};

pub(crate) struct JsonlWriter {
    out: BufWriter<File>,
}

impl JsonlWriter {
    pub fn create(path: &Path, format: &str, version: u32, mut extra: Map<String, Value>) -> Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        let mut header = Map::new();
        header.insert("format".into(), format.into());
        header.insert("version".into(), version.into());
        header.append(&mut extra);
        serde_json::to_writer(&mut out, &header)?;
        out.write_all(b"\n")?;
        Ok(Self { out })
    }

    pub fn record<T: Serialize>(&mut self, record: &T) -> Result<()> {
        serde_json::to_writer(&mut self.out, record)?;
        self.out.write_all(b"\n")?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

pub(crate) struct JsonlReader {
    lines: std::io::Lines<BufReader<File>>,
    pub header: Map<String, Value>,
}

impl JsonlReader {
    pub fn open(path: &Path, format: &str, version: u32) -> Result<Self> {
        let mut lines = BufReader::new(File::open(path)?).lines();
        let first = lines.next().transpose()?.unwrap_or_default();
        let header: Map<String, Value> = serde_json::from_str(&first).map_err(|_| Error::FormatVersionMismatch {
            expected: format!("{format} v{version}"),
            found: "no header".into(),
        })?;
        check_header(&header, format, version)?;
        Ok(Self { lines, header })
    }

    pub fn records<T: DeserializeOwned>(self) -> Result<Vec<T>> {
        let mut out = Vec::new();
        for line in self.lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            out.push(serde_json::from_str(&line)?);
        }
        Ok(out)
    }
}

pub(crate) fn check_header(header: &Map<String, Value>, format: &str, version: u32) -> Result<()> {
    let found_format = header.get("format").and_then(Value::as_str).unwrap_or("");
    let found_version = header.get("version").and_then(Value::as_u64);
    if found_format != format || found_version != Some(u64::from(version)) {
        return Err(Error::FormatVersionMismatch {
            expected: format!("{format} v{version}"),
            found: format!(
                "{} v{}",
                if found_format.is_empty() { "?" } else { found_format },
                found_version.map_or("?".to_string(), |v| v.to_string())
            ),
        });
    }
    Ok(())
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}
