//! Spreadsheet-to-scene engine: ingest workbooks, map cells to 3D glyphs that
//! keep the sheet's row/column structure and formatting, detect anomalies in
//! numeric series, and export scenes and reports.

pub mod anomaly;
pub mod export;
pub mod grid;
pub mod ingest;
pub mod scene;

pub use grid::{
    apply_edit, classify_value, format_value, select_range, Axis, Borders, Cell, CellAddress, CellFormat, CellGrid,
    CellRange, CellValue, FormatCategory, GridError, GridView, Rgb,
};
