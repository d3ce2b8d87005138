//! Reading CSV and XLSX workbooks into a [`CellGrid`].

mod csv;
mod format;
mod xlsx;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{CellGrid, GridError};

pub use self::csv::read_csv;
pub use self::format::{builtin_number_format, infer_format_category};
pub use self::xlsx::{read_xlsx, read_xlsx_with_warnings};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("input is not valid UTF-8 (first bad byte at offset {offset})")]
    Encoding { offset: usize },
    #[error("input contains no records")]
    EmptyInput,
    #[error("CSV error at record {record}: {detail}")]
    Csv { record: u64, detail: String },
    #[error("not a ZIP container: {0}")]
    NotAZip(String),
    #[error("worksheet '{0}' not found")]
    MissingSheet(String),
    #[error("malformed part '{part}': {detail}")]
    MalformedPart { part: String, detail: String },
    #[error("invalid ingest options: {0}")]
    BadOptions(String),
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestOptions {
    /// Worksheet to read from an XLSX workbook; the first sheet when unset.
    pub sheet_name: Option<String>,
    pub csv_delimiter: char,
    /// Informational only; ingest never strips header rows.
    pub header_rows_hint: Option<usize>,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            sheet_name: None,
            csv_delimiter: ',',
            header_rows_hint: None,
        }
    }
}

impl IngestOptions {
    pub(crate) fn delimiter_byte(&self) -> Result<u8, IngestError> {
        let c = self.csv_delimiter;
        if c.is_ascii() && (c.is_ascii_graphic() || c == '\t' || c == ' ') && c != '"' {
            Ok(c as u8)
        } else {
            Err(IngestError::BadOptions(format!(
                "delimiter {c:?} must be a single printable ASCII character other than '\"'"
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorkbookFormat {
    Csv,
    Xlsx,
}

impl WorkbookFormat {
    /// ZIP local-file magic means XLSX; anything else is treated as CSV.
    pub fn sniff(bytes: &[u8]) -> Self {
        if bytes.starts_with(b"PK\x03\x04") {
            WorkbookFormat::Xlsx
        } else {
            WorkbookFormat::Csv
        }
    }

    pub fn from_path(path: &std::path::Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "csv" | "txt" | "tsv" => Some(WorkbookFormat::Csv),
            "xlsx" | "xlsm" => Some(WorkbookFormat::Xlsx),
            _ => None,
        }
    }
}

/// A grid plus any non-fatal issues found while reading it.
#[derive(Debug, Clone)]
pub struct Ingested {
    pub grid: CellGrid,
    pub warnings: Vec<String>,
}

pub fn ingest(bytes: &[u8], format: WorkbookFormat, opts: &IngestOptions) -> Result<Ingested, IngestError> {
    match format {
        WorkbookFormat::Csv => Ok(Ingested {
            grid: read_csv(bytes, opts)?,
            warnings: Vec::new(),
        }),
        WorkbookFormat::Xlsx => read_xlsx_with_warnings(bytes, opts),
    }
}
