//! Dataset and trace file formats.
//!
//! Binary datasets: `b"CSCD"`, `u32` version (1), `u64` m, `u64` N, then
//! `m·N` row-major `f64` features and `m` `i8` labels, all little-endian.
//! CSV datasets carry a header `y,w1,…,wN`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::problems::Dataset;
use crate::solver::IterationRecord;

pub const MAGIC: &[u8; 4] = b"CSCD";
pub const VERSION: u32 = 1;

pub fn write_binary<W: Write>(data: &Dataset, mut out: W) -> Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(data.samples() as u64).to_le_bytes())?;
    out.write_all(&(data.features_dim() as u64).to_le_bytes())?;
    for row in data.features().rows() {
        for v in row {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    for &y in data.labels() {
        out.write_all(&[(y as i8) as u8])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_binary<R: Read>(mut input: R) -> Result<Dataset> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::InvalidDataset("bad magic bytes".into()));
    }
    let mut word = [0u8; 4];
    input.read_exact(&mut word)?;
    let version = u32::from_le_bytes(word);
    if version != VERSION {
        return Err(Error::InvalidDataset(format!(
            "unsupported version {version}"
        )));
    }
    let mut long = [0u8; 8];
    input.read_exact(&mut long)?;
    let m = u64::from_le_bytes(long) as usize;
    input.read_exact(&mut long)?;
    let n = u64::from_le_bytes(long) as usize;
    let count = m
        .checked_mul(n)
        .ok_or_else(|| Error::InvalidDataset("dimensions overflow".into()))?;
    let mut features = Vec::with_capacity(count);
    for _ in 0..count {
        input.read_exact(&mut long)?;
        features.push(f64::from_le_bytes(long));
    }
    let mut labels = vec![0u8; m];
    input.read_exact(&mut labels)?;
    let features = Array2::from_shape_vec((m, n), features)
        .map_err(|e| Error::InvalidDataset(e.to_string()))?;
    let labels = labels
        .into_iter()
        .map(|b| b as i8 as f64)
        .collect::<Array1<_>>();
    Dataset::new(features, labels)
}

pub fn save_binary(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    write_binary(data, BufWriter::new(File::create(path)?))
}

pub fn load_binary(path: impl AsRef<Path>) -> Result<Dataset> {
    read_binary(BufReader::new(File::open(path)?))
}

pub fn write_csv<W: Write>(data: &Dataset, out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    let mut header = vec!["y".to_string()];
    header.extend((1..=data.features_dim()).map(|j| format!("w{j}")));
    writer.write_record(&header)?;
    for (row, y) in data.features().rows().into_iter().zip(data.labels()) {
        let mut record = vec![format!("{}", *y as i8)];
        record.extend(row.iter().map(|v| format!("{v:?}")));
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Dataset> {
    let mut reader = csv::Reader::from_reader(input);
    let header = reader.headers()?.clone();
    if header.get(0) != Some("y") {
        return Err(Error::InvalidDataset("first CSV column must be `y`".into()));
    }
    let n = header.len() - 1;
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record?;
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::InvalidDataset(format!("{s:?}: {e}")))
        };
        labels.push(parse(&record[0])?);
        for field in record.iter().skip(1) {
            features.push(parse(field)?);
        }
    }
    let m = labels.len();
    let features = Array2::from_shape_vec((m, n), features)
        .map_err(|e| Error::InvalidDataset(e.to_string()))?;
    Dataset::new(features, Array1::from(labels))
}

pub fn save_csv(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    write_csv(data, BufWriter::new(File::create(path)?))
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    read_csv(BufReader::new(File::open(path)?))
}

/// Loads a dataset, choosing the format from the extension (`.csv` or binary).
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
    {
        load_csv(path)
    } else {
        load_binary(path)
    }
}

/// Trace CSV with columns `iter,block,lambda,F,gap,elapsed_seconds`; `gap` is
/// empty except on check iterations.
pub fn write_trace<W: Write>(trace: &[IterationRecord], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["iter", "block", "lambda", "F", "gap", "elapsed_seconds"])?;
    for rec in trace {
        writer.write_record([
            rec.k.to_string(),
            rec.block.to_string(),
            format!("{:e}", rec.lambda),
            format!("{:.12e}", rec.objective),
            rec.gap.map(|g| format!("{g:e}")).unwrap_or_default(),
            format!("{:.6}", rec.elapsed_seconds),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::generate_dataset;

    #[test]
    fn binary_layout() {
        let data = generate_dataset(3, 2, 4).unwrap();
        let mut bytes = Vec::new();
        write_binary(&data, &mut bytes).unwrap();
        assert_eq!(bytes.len(), 4 + 4 + 8 + 8 + 3 * 2 * 8 + 3);
        assert_eq!(&bytes[..4], b"CSCD");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u64::from_le_bytes(bytes[8..16].try_into().unwrap()), 3);
        assert_eq!(u64::from_le_bytes(bytes[16..24].try_into().unwrap()), 2);
        let first = f64::from_le_bytes(bytes[24..32].try_into().unwrap());
        assert_eq!(first, data.features()[[0, 0]]);
        let label = bytes[24 + 48] as i8;
        assert_eq!(label as f64, data.labels()[0]);
        assert_eq!(read_binary(bytes.as_slice()).unwrap(), data);
    }

    #[test]
    fn binary_rejects_garbage() {
        assert!(read_binary(&b"NOPE\x01\0\0\0"[..]).is_err());
        let mut bytes = Vec::new();
        write_binary(&generate_dataset(2, 2, 0).unwrap(), &mut bytes).unwrap();
        bytes.truncate(bytes.len() - 1);
        assert!(read_binary(bytes.as_slice()).is_err());
    }

    #[test]
    fn csv_header_and_values() {
        let data = generate_dataset(4, 3, 1).unwrap();
        let mut text = Vec::new();
        write_csv(&data, &mut text).unwrap();
        let text = String::from_utf8(text).unwrap();
        assert!(text.starts_with("y,w1,w2,w3\n"));
        assert_eq!(read_csv(text.as_bytes()).unwrap(), data);
    }

    #[test]
    fn trace_gap_column_blank_off_checks() {
        let trace = vec![
            IterationRecord {
                k: 1,
                block: 0,
                lambda: 0.5,
                residual_norm: 0.0,
                objective: 0.6,
                gap: None,
                elapsed_seconds: 0.0,
            },
            IterationRecord {
                k: 2,
                block: 1,
                lambda: 0.25,
                residual_norm: 0.0,
                objective: 0.5,
                gap: Some(1e-4),
                elapsed_seconds: 0.0,
            },
        ];
        let mut out = Vec::new();
        write_trace(&trace, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "iter,block,lambda,F,gap,elapsed_seconds");
        assert_eq!(lines[1].split(',').nth(4), Some(""));
        assert_eq!(lines[2].split(',').nth(4), Some("1e-4"));
    }
}
