use serde::{Deserialize, Serialize};

use crate::anomaly::{AnomalyFlag, AnomalyReport, DetectorKind, DetectorParams};
use crate::grid::CellAddress;

use super::ExportError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    /// `row,col,detector,score,context`, scores to 6 significant digits.
    CsvTable,
    /// JSON with full-precision scores.
    Document,
}

#[derive(Serialize, Deserialize)]
struct ReportDocument {
    version: String,
    params: DetectorParams,
    cells_scanned: usize,
    flags: Vec<FlagRecord>,
}

#[derive(Serialize, Deserialize)]
struct FlagRecord {
    row: usize,
    col: usize,
    detector: DetectorKind,
    score: f64,
    context: String,
}

pub fn write_report(report: &AnomalyReport, format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::CsvTable => {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(Vec::new());
            w.write_record(["row", "col", "detector", "score", "context"])
                .expect("in-memory write");
            for f in &report.flags {
                w.write_record([
                    f.addr.row.to_string(),
                    f.addr.col.to_string(),
                    f.detector.to_string(),
                    format_sig6(f.score),
                    f.context.clone(),
                ])
                .expect("in-memory write");
            }
            w.into_inner().expect("in-memory flush")
        }
        ReportFormat::Document => {
            let doc = ReportDocument {
                version: "1".into(),
                params: report.params_echo,
                cells_scanned: report.cells_scanned,
                flags: report
                    .flags
                    .iter()
                    .map(|f| FlagRecord {
                        row: f.addr.row,
                        col: f.addr.col,
                        detector: f.detector,
                        score: f.score,
                        context: f.context.clone(),
                    })
                    .collect(),
            };
            serde_json::to_vec(&doc).expect("report documents always serialize")
        }
    }
}

pub fn read_report_document(bytes: &[u8]) -> Result<AnomalyReport, ExportError> {
    let doc: ReportDocument = serde_json::from_slice(bytes)?;
    if doc.version != "1" {
        return Err(ExportError::UnsupportedVersion(doc.version));
    }
    Ok(AnomalyReport {
        flags: doc
            .flags
            .into_iter()
            .map(|f| AnomalyFlag {
                addr: CellAddress::new(f.row, f.col),
                detector: f.detector,
                score: f.score,
                context: f.context,
            })
            .collect(),
        params_echo: doc.params,
        cells_scanned: doc.cells_scanned,
    })
}

/// `%g`-style rendering with 6 significant digits.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        return format!("{}e{exp}", trim_zeros(mantissa));
    }
    trim_zeros(&format!("{x:.*}", (5 - exp) as usize)).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig6() {
        assert_eq!(format_sig6(4.2), "4.2");
        assert_eq!(format_sig6(1.23456789), "1.23457");
        assert_eq!(format_sig6(123456.7), "123457");
        assert_eq!(format_sig6(1234567.0), "1.23457e6");
        assert_eq!(format_sig6(0.000012345678), "1.23457e-5");
        assert_eq!(format_sig6(0.0001), "0.0001");
        assert_eq!(format_sig6(999999.7), "1e6");
        assert_eq!(format_sig6(6.0), "6");
        assert_eq!(format_sig6(0.0), "0");
    }
}
