//! Loading and saving representations: NPY (v1.0/v2.0, little-endian float32/64,
//! 2-D only) and plain CSV with an optional header line.

use crate::repr::{DataError, Representation};
use byteorder::{ByteOrder, LittleEndian};
use nalgebra::DMatrix;
use std::fs;
use std::io::Write;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not an NPY file (bad magic)")]
    BadMagic,
    #[error("unsupported NPY version {0}.{1}")]
    UnsupportedVersion(u8, u8),
    #[error("malformed NPY header: {0}")]
    Header(String),
    #[error("unsupported dtype {0:?}; expected '<f4' or '<f8'")]
    UnsupportedDescr(String),
    #[error("expected a 2-D array, got shape {0:?}")]
    NotTwoDimensional(Vec<usize>),
    #[error("payload holds {got} bytes, shape requires {want}")]
    SizeMismatch { got: usize, want: usize },
    #[error("csv line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error("unrecognized extension for {0}; expected .npy or .csv")]
    UnknownFormat(String),
    #[error(transparent)]
    Data(#[from] DataError),
}

const NPY_MAGIC: &[u8; 6] = b"\x93NUMPY";

/// Parse an NPY byte buffer into a row-major matrix.
/// Fortran-ordered payloads are transposed on load.
pub fn parse_npy(bytes: &[u8]) -> Result<DMatrix<f64>, LoadError> {
    if bytes.len() < 10 || &bytes[..6] != NPY_MAGIC {
        return Err(LoadError::BadMagic);
    }
    let (major, minor) = (bytes[6], bytes[7]);
    let (header_len, data_start) = match (major, minor) {
        (1, 0) => (LittleEndian::read_u16(&bytes[8..10]) as usize, 10),
        (2, 0) => {
            if bytes.len() < 12 {
                return Err(LoadError::Header("truncated v2 header length".into()));
            }
            (LittleEndian::read_u32(&bytes[8..12]) as usize, 12)
        }
        _ => return Err(LoadError::UnsupportedVersion(major, minor)),
    };
    let header_end = data_start + header_len;
    if bytes.len() < header_end {
        return Err(LoadError::Header("truncated header".into()));
    }
    let header = std::str::from_utf8(&bytes[data_start..header_end])
        .map_err(|_| LoadError::Header("header is not utf-8".into()))?;

    let descr = dict_str(header, "descr")?;
    let item_size = match descr.as_str() {
        "<f8" => 8,
        "<f4" => 4,
        _ => return Err(LoadError::UnsupportedDescr(descr)),
    };
    let fortran = dict_bool(header, "fortran_order")?;
    let shape = dict_shape(header)?;
    if shape.len() != 2 {
        return Err(LoadError::NotTwoDimensional(shape));
    }
    let (rows, cols) = (shape[0], shape[1]);

    let payload = &bytes[header_end..];
    let want = rows * cols * item_size;
    if payload.len() != want {
        return Err(LoadError::SizeMismatch { got: payload.len(), want });
    }
    let flat: Vec<f64> = match item_size {
        8 => payload.chunks_exact(8).map(LittleEndian::read_f64).collect(),
        _ => payload.chunks_exact(4).map(|c| LittleEndian::read_f32(c) as f64).collect(),
    };
    let get = |i: usize, j: usize| if fortran { flat[j * rows + i] } else { flat[i * cols + j] };
    Ok(DMatrix::from_fn(rows, cols, get))
}

fn dict_str(header: &str, key: &str) -> Result<String, LoadError> {
    let value = dict_value(header, key)?;
    let value = value.trim();
    let inner = value
        .strip_prefix('\'')
        .and_then(|v| v.split('\'').next())
        .or_else(|| value.strip_prefix('"').and_then(|v| v.split('"').next()))
        .ok_or_else(|| LoadError::Header(format!("{key} is not a string")))?;
    Ok(inner.to_string())
}

fn dict_bool(header: &str, key: &str) -> Result<bool, LoadError> {
    let value = dict_value(header, key)?;
    match value.trim_start() {
        v if v.starts_with("True") => Ok(true),
        v if v.starts_with("False") => Ok(false),
        _ => Err(LoadError::Header(format!("{key} is not a boolean"))),
    }
}

fn dict_shape(header: &str) -> Result<Vec<usize>, LoadError> {
    let value = dict_value(header, "shape")?;
    let open = value.find('(').ok_or_else(|| LoadError::Header("shape tuple missing".into()))?;
    let close =
        value[open..].find(')').ok_or_else(|| LoadError::Header("unclosed shape tuple".into()))?;
    let inner = &value[open + 1..open + close];
    inner
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<usize>().map_err(|_| LoadError::Header(format!("bad dim {s:?}"))))
        .collect()
}

/// Slice of the header starting right after `'key':`.
fn dict_value<'a>(header: &'a str, key: &str) -> Result<&'a str, LoadError> {
    for quote in ['\'', '"'] {
        let pattern = format!("{quote}{key}{quote}");
        if let Some(pos) = header.find(&pattern) {
            let rest = &header[pos + pattern.len()..];
            let colon =
                rest.find(':').ok_or_else(|| LoadError::Header(format!("{key} has no value")))?;
            return Ok(&rest[colon + 1..]);
        }
    }
    Err(LoadError::Header(format!("key {key:?} missing")))
}

/// Serialize a matrix as NPY v1.0, '<f8', C order.
pub fn npy_bytes(m: &DMatrix<f64>) -> Vec<u8> {
    let dict = format!(
        "{{'descr': '<f8', 'fortran_order': False, 'shape': ({}, {}), }}",
        m.nrows(),
        m.ncols()
    );
    // Pad the header with spaces so the payload starts on a 64-byte boundary.
    let unpadded = 10 + dict.len() + 1;
    let padding = (64 - unpadded % 64) % 64;
    let header_len = dict.len() + padding + 1;

    let mut out = Vec::with_capacity(10 + header_len + m.len() * 8);
    out.extend_from_slice(NPY_MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&(header_len as u16).to_le_bytes());
    out.extend_from_slice(dict.as_bytes());
    out.extend(std::iter::repeat(b' ').take(padding));
    out.push(b'\n');
    let mut buf = [0u8; 8];
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            LittleEndian::write_f64(&mut buf, m[(i, j)]);
            out.extend_from_slice(&buf);
        }
    }
    out
}

pub fn write_npy(path: &Path, m: &DMatrix<f64>) -> Result<(), LoadError> {
    let mut file = fs::File::create(path)?;
    file.write_all(&npy_bytes(m))?;
    Ok(())
}

/// Parse CSV text: comma-separated numeric rows, optional header line
/// (detected by any field that does not parse as a number).
pub fn parse_csv(text: &str) -> Result<DMatrix<f64>, LoadError> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
        let values = match parsed {
            Ok(v) => v,
            Err(_) if rows.is_empty() && idx == 0 => continue, // header line
            Err(_) => {
                return Err(LoadError::Csv {
                    line: idx + 1,
                    message: "field is not a number".into(),
                })
            }
        };
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(LoadError::Csv { line: idx + 1, message: format!("non-finite value {v}") });
        }
        match width {
            None => width = Some(values.len()),
            Some(w) if w != values.len() => {
                return Err(LoadError::Csv {
                    line: idx + 1,
                    message: format!("expected {w} fields, got {}", values.len()),
                })
            }
            _ => {}
        }
        rows.push(values);
    }
    let cols = width.ok_or(LoadError::Csv { line: 0, message: "no data rows".into() })?;
    let data: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(DMatrix::from_row_slice(rows.len(), cols, &data))
}

/// Read a matrix, choosing the parser from the file extension.
pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>, LoadError> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("npy") => parse_npy(&fs::read(path)?),
        Some("csv") => parse_csv(&fs::read_to_string(path)?),
        _ => Err(LoadError::UnknownFormat(path.display().to_string())),
    }
}

/// Read and validate a representation, attaching metadata supplied by the caller.
pub fn load_representation(
    path: &Path,
    model_id: impl Into<String>,
    layer: usize,
    group: Option<String>,
) -> Result<Representation, LoadError> {
    let data = read_matrix(path)?;
    Ok(Representation::new(data, model_id, layer, group)?)
}

/// Class labels: single-column CSV of integers, or a single-column NPY.
pub fn read_labels(path: &Path) -> Result<Vec<usize>, LoadError> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("npy") => {
            let m = parse_npy(&fs::read(path)?)?;
            if m.ncols() != 1 {
                return Err(LoadError::NotTwoDimensional(vec![m.nrows(), m.ncols()]));
            }
            m.iter()
                .enumerate()
                .map(|(i, &v)| {
                    if v >= 0.0 && v.fract() == 0.0 {
                        Ok(v as usize)
                    } else {
                        Err(LoadError::Csv { line: i + 1, message: format!("bad label {v}") })
                    }
                })
                .collect()
        }
        _ => {
            let text = fs::read_to_string(path)?;
            text.lines()
                .enumerate()
                .filter(|(_, l)| !l.trim().is_empty())
                .map(|(i, l)| {
                    l.trim().parse::<usize>().map_err(|_| LoadError::Csv {
                        line: i + 1,
                        message: format!("bad label {l:?}"),
                    })
                })
                .collect()
        }
    }
}

pub fn write_labels_csv(path: &Path, labels: &[usize]) -> Result<(), LoadError> {
    let mut text = String::new();
    for l in labels {
        text.push_str(&l.to_string());
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}
