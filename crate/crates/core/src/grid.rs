//! Typed spreadsheet content: cells, formats, addresses and rectangular views.

use std::fmt;
use std::str::FromStr;

use chrono::{Duration, NaiveDate, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GridError {
    #[error("range {range} is out of bounds for a {n_rows}x{n_cols} grid")]
    RangeOutOfBounds {
        range: CellRange,
        n_rows: usize,
        n_cols: usize,
    },
    #[error("grid dimensions must be positive, got {0}x{1}")]
    EmptyGrid(usize, usize),
    #[error("invalid range '{0}': expected 'r,c:r,c' with top <= bottom and left <= right")]
    BadRange(String),
}

/// Zero-based row/column position of a cell. Orders row-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellAddress {
    pub row: usize,
    pub col: usize,
}

impl CellAddress {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }
}

impl fmt::Display for CellAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.row, self.col)
    }
}

/// Inclusive rectangle of cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CellRange {
    pub top: usize,
    pub left: usize,
    pub bottom: usize,
    pub right: usize,
}

impl CellRange {
    pub const fn new(top: usize, left: usize, bottom: usize, right: usize) -> Self {
        Self {
            top,
            left,
            bottom,
            right,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.bottom + 1 - self.top
    }

    pub fn n_cols(&self) -> usize {
        self.right + 1 - self.left
    }

    pub fn len(&self) -> usize {
        self.n_rows() * self.n_cols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, addr: CellAddress) -> bool {
        (self.top..=self.bottom).contains(&addr.row) && (self.left..=self.right).contains(&addr.col)
    }

    /// Addresses in row-major order.
    pub fn addresses(&self) -> impl Iterator<Item = CellAddress> + '_ {
        (self.top..=self.bottom).flat_map(move |row| (self.left..=self.right).map(move |col| CellAddress { row, col }))
    }
}

impl fmt::Display for CellRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}:{},{}", self.top, self.left, self.bottom, self.right)
    }
}

impl FromStr for CellRange {
    type Err = GridError;

    /// Parses the 0-based `r,c:r,c` form used on the command line.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || GridError::BadRange(s.to_string());
        let (a, b) = s.split_once(':').ok_or_else(bad)?;
        let corner = |part: &str| -> Result<(usize, usize), GridError> {
            let (r, c) = part.split_once(',').ok_or_else(bad)?;
            let r = r.trim().parse().map_err(|_| bad())?;
            let c = c.trim().parse().map_err(|_| bad())?;
            Ok((r, c))
        };
        let (top, left) = corner(a)?;
        let (bottom, right) = corner(b)?;
        if top > bottom || left > right {
            return Err(bad());
        }
        Ok(CellRange::new(top, left, bottom, right))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Rgb {
    pub r: u8,
    pub g: u8,
    pub b: u8,
}

impl Rgb {
    pub const fn new(r: u8, g: u8, b: u8) -> Self {
        Self { r, g, b }
    }

    /// Parses `RRGGBB` or `AARRGGBB` hex (alpha is discarded).
    pub fn from_hex(hex: &str) -> Option<Self> {
        let hex = hex.trim_start_matches('#');
        let hex = match hex.len() {
            8 => &hex[2..],
            6 => hex,
            _ => return None,
        };
        let v = u32::from_str_radix(hex, 16).ok()?;
        Some(Rgb::new((v >> 16) as u8, (v >> 8) as u8, v as u8))
    }

    pub fn to_hex(self) -> String {
        format!("{:02X}{:02X}{:02X}", self.r, self.g, self.b)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Borders {
    pub top: bool,
    pub bottom: bool,
    pub left: bool,
    pub right: bool,
}

impl Borders {
    pub fn any(&self) -> bool {
        self.top || self.bottom || self.left || self.right
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormatCategory {
    #[default]
    General,
    Number,
    Currency,
    Percent,
    Date,
    Time,
    #[serde(rename = "text")]
    TextFmt,
}

impl FormatCategory {
    pub const ALL: [FormatCategory; 7] = [
        FormatCategory::General,
        FormatCategory::Number,
        FormatCategory::Currency,
        FormatCategory::Percent,
        FormatCategory::Date,
        FormatCategory::Time,
        FormatCategory::TextFmt,
    ];

    pub fn ordinal(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FormatCategory::General => "general",
            FormatCategory::Number => "number",
            FormatCategory::Currency => "currency",
            FormatCategory::Percent => "percent",
            FormatCategory::Date => "date",
            FormatCategory::Time => "time",
            FormatCategory::TextFmt => "text",
        }
    }
}

impl fmt::Display for FormatCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CellFormat {
    pub fill_color: Option<Rgb>,
    pub border: Borders,
    pub font_bold: bool,
    pub category: FormatCategory,
    pub number_format: Option<String>,
}

impl CellFormat {
    pub fn is_default(&self) -> bool {
        *self == CellFormat::default()
    }

    pub fn with_category(category: FormatCategory) -> Self {
        CellFormat {
            category,
            ..CellFormat::default()
        }
    }
}

/// A cell value. Numbers are always finite and text is never empty; use
/// [`CellValue::number`] and [`CellValue::text`] to uphold that.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum CellValue {
    Number(f64),
    Text(String),
    #[default]
    Empty,
}

impl CellValue {
    /// `None` for NaN or infinite input.
    pub fn number(v: f64) -> Option<Self> {
        v.is_finite().then_some(CellValue::Number(v))
    }

    pub fn text(s: impl Into<String>) -> Self {
        let s = s.into();
        if s.is_empty() {
            CellValue::Empty
        } else {
            CellValue::Text(s)
        }
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            CellValue::Number(v) => Some(*v),
            _ => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, CellValue::Empty)
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            CellValue::Number(_) => "number",
            CellValue::Text(_) => "text",
            CellValue::Empty => "empty",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub value: CellValue,
    pub format: CellFormat,
}

impl Cell {
    pub fn new(value: CellValue, format: CellFormat) -> Self {
        Self { value, format }
    }

    pub fn number(v: f64) -> Self {
        Cell {
            value: CellValue::Number(v),
            format: CellFormat::default(),
        }
    }

    pub fn text(s: &str) -> Self {
        Cell {
            value: CellValue::text(s),
            format: CellFormat::default(),
        }
    }

    /// Holds a value or non-default formatting.
    pub fn is_bearing(&self) -> bool {
        !self.value.is_empty() || !self.format.is_default()
    }
}

/// Dense row-major grid of cells.
#[derive(Debug, Clone, PartialEq)]
pub struct CellGrid {
    n_rows: usize,
    n_cols: usize,
    cells: Vec<Cell>,
}

impl CellGrid {
    pub fn new(n_rows: usize, n_cols: usize) -> Result<Self, GridError> {
        if n_rows == 0 || n_cols == 0 {
            return Err(GridError::EmptyGrid(n_rows, n_cols));
        }
        Ok(CellGrid {
            n_rows,
            n_cols,
            cells: vec![Cell::default(); n_rows * n_cols],
        })
    }

    /// Builds a grid from ragged rows, padding short rows with empty cells.
    pub fn from_rows(rows: Vec<Vec<Cell>>) -> Result<Self, GridError> {
        let n_rows = rows.len();
        let n_cols = rows.iter().map(Vec::len).max().unwrap_or(0);
        let mut grid = CellGrid::new(n_rows, n_cols)?;
        for (r, row) in rows.into_iter().enumerate() {
            for (c, cell) in row.into_iter().enumerate() {
                grid.cells[r * n_cols + c] = cell;
            }
        }
        Ok(grid)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn full_range(&self) -> CellRange {
        CellRange::new(0, 0, self.n_rows - 1, self.n_cols - 1)
    }

    pub fn contains(&self, addr: CellAddress) -> bool {
        addr.row < self.n_rows && addr.col < self.n_cols
    }

    pub fn get(&self, addr: CellAddress) -> Option<&Cell> {
        self.contains(addr)
            .then(|| &self.cells[addr.row * self.n_cols + addr.col])
    }

    pub fn get_mut(&mut self, addr: CellAddress) -> Option<&mut Cell> {
        if self.contains(addr) {
            Some(&mut self.cells[addr.row * self.n_cols + addr.col])
        } else {
            None
        }
    }

    pub fn set(&mut self, addr: CellAddress, cell: Cell) -> Result<(), GridError> {
        let out_of_bounds = self.out_of_bounds(CellRange::new(addr.row, addr.col, addr.row, addr.col));
        let slot = self.get_mut(addr).ok_or(out_of_bounds)?;
        *slot = cell;
        Ok(())
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Cell]> {
        self.cells.chunks(self.n_cols)
    }

    pub fn cells(&self) -> impl Iterator<Item = (CellAddress, &Cell)> {
        let n_cols = self.n_cols;
        self.cells
            .iter()
            .enumerate()
            .map(move |(i, c)| (CellAddress::new(i / n_cols, i % n_cols), c))
    }

    fn out_of_bounds(&self, range: CellRange) -> GridError {
        GridError::RangeOutOfBounds {
            range,
            n_rows: self.n_rows,
            n_cols: self.n_cols,
        }
    }
}

/// A rectangular window onto a grid. Never exposes cells outside `range`.
#[derive(Debug, Clone, Copy)]
pub struct GridView<'a> {
    grid: &'a CellGrid,
    range: CellRange,
}

impl<'a> GridView<'a> {
    pub fn full(grid: &'a CellGrid) -> Self {
        GridView {
            grid,
            range: grid.full_range(),
        }
    }

    pub fn range(&self) -> CellRange {
        self.range
    }

    pub fn n_rows(&self) -> usize {
        self.range.n_rows()
    }

    pub fn n_cols(&self) -> usize {
        self.range.n_cols()
    }

    pub fn len(&self) -> usize {
        self.range.len()
    }

    pub fn is_empty(&self) -> bool {
        self.range.is_empty()
    }

    /// Cell at an absolute grid address, if it lies inside the view.
    pub fn get(&self, addr: CellAddress) -> Option<&'a Cell> {
        if self.range.contains(addr) {
            self.grid.get(addr)
        } else {
            None
        }
    }

    /// Cells in row-major order with their absolute addresses.
    pub fn cells(&self) -> impl Iterator<Item = (CellAddress, &'a Cell)> + '_ {
        let grid = self.grid;
        self.range
            .addresses()
            .map(move |a| (a, grid.get(a).expect("view range lies within grid")))
    }

    /// One line of cells along the given axis, `index` counted from the view's edge.
    pub fn line(&self, axis: Axis, index: usize) -> Vec<(CellAddress, &'a Cell)> {
        let grid = self.grid;
        let r = self.range;
        let addrs: Vec<CellAddress> = match axis {
            Axis::Rows => (r.left..=r.right)
                .map(|col| CellAddress::new(r.top + index, col))
                .collect(),
            Axis::Columns => (r.top..=r.bottom)
                .map(|row| CellAddress::new(row, r.left + index))
                .collect(),
        };
        addrs
            .into_iter()
            .map(|a| (a, grid.get(a).expect("view range lies within grid")))
            .collect()
    }

    /// Number of lines along the axis.
    pub fn line_count(&self, axis: Axis) -> usize {
        match axis {
            Axis::Rows => self.n_rows(),
            Axis::Columns => self.n_cols(),
        }
    }
}

/// Orientation of a series: `Rows` means each row is one series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Rows,
    Columns,
}

impl Axis {
    /// Time usually runs along the long axis.
    pub fn default_for(n_rows: usize, n_cols: usize) -> Self {
        if n_rows > n_cols {
            Axis::Columns
        } else {
            Axis::Rows
        }
    }
}

impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rows" => Ok(Axis::Rows),
            "cols" | "columns" => Ok(Axis::Columns),
            _ => Err(format!("unknown axis '{s}' (expected rows or cols)")),
        }
    }
}

pub fn select_range(grid: &CellGrid, range: CellRange) -> Result<GridView<'_>, GridError> {
    if range.top > range.bottom || range.left > range.right || range.bottom >= grid.n_rows || range.right >= grid.n_cols
    {
        return Err(grid.out_of_bounds(range));
    }
    Ok(GridView { grid, range })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edit {
    pub addr: CellAddress,
    pub old: Cell,
    pub new: Cell,
}

/// Replaces one cell's value with `classify_value(new_raw, <existing category>)`.
/// Formatting is kept as-is.
pub fn apply_edit(grid: &mut CellGrid, addr: CellAddress, new_raw: &str) -> Result<Edit, GridError> {
    let err = grid.out_of_bounds(CellRange::new(addr.row, addr.col, addr.row, addr.col));
    let cell = grid.get_mut(addr).ok_or(err)?;
    let old = cell.clone();
    cell.value = classify_value(new_raw, cell.format.category);
    Ok(Edit {
        addr,
        old,
        new: cell.clone(),
    })
}

const CURRENCY_SYMBOLS: [char; 4] = ['$', '€', '£', '¥'];

/// Classifies raw cell text. Total: whitespace-only input is `Empty`, anything
/// that parses as a number under the category's conventions is `Number`, the
/// rest is `Text(raw)`.
pub fn classify_value(raw: &str, category: FormatCategory) -> CellValue {
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return CellValue::Empty;
    }
    match parse_number(trimmed, category) {
        Some(v) => CellValue::Number(v),
        None => CellValue::Text(raw.to_string()),
    }
}

/// Parses numeric cell text. Accepts a leading sign, one currency symbol, valid
/// thousands grouping, exponents and a `%` suffix (which divides by 100 exactly
/// by shifting the decimal exponent). Date and time categories also accept ISO
/// dates and `hh:mm[:ss]` clock times, returned as serial days.
pub fn parse_number(s: &str, category: FormatCategory) -> Option<f64> {
    match category {
        FormatCategory::Date | FormatCategory::Time => {
            if let Some(v) = parse_datetime_serial(s) {
                return Some(v);
            }
        }
        _ => {}
    }

    let mut rest = s;
    let mut negative = false;
    let mut strip_sign = |rest: &mut &str| {
        if let Some(r) = rest.strip_prefix('-') {
            negative = !negative;
            *rest = r;
            true
        } else if let Some(r) = rest.strip_prefix('+') {
            *rest = r;
            true
        } else {
            false
        }
    };
    let had_sign = strip_sign(&mut rest);
    let mut currency = false;
    if let Some(r) = rest.strip_prefix(CURRENCY_SYMBOLS) {
        rest = r.trim_start();
        currency = true;
        if !had_sign {
            strip_sign(&mut rest);
        }
    }
    let percent = match rest.strip_suffix('%') {
        Some(r) => {
            rest = r.trim_end();
            true
        }
        None => false,
    };
    if !currency && !percent {
        if let Some(r) = rest.strip_suffix(CURRENCY_SYMBOLS) {
            rest = r.trim_end();
        }
    }
    if rest.is_empty() {
        return None;
    }

    let (mantissa, exponent) = split_exponent(rest)?;
    let mantissa = strip_grouping(mantissa)?;
    let exponent = if percent { exponent - 2 } else { exponent };
    let literal = format!("{}{}e{}", if negative { "-" } else { "" }, mantissa, exponent);
    let v: f64 = literal.parse().ok()?;
    v.is_finite().then_some(v)
}

fn split_exponent(s: &str) -> Option<(&str, i64)> {
    match s.find(['e', 'E']) {
        Some(i) => {
            let exp = &s[i + 1..];
            let digits = exp.strip_prefix(['+', '-']).unwrap_or(exp);
            if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
            Some((&s[..i], exp.parse().ok()?))
        }
        None => Some((s, 0)),
    }
}

/// Validates `d{1,3}(,ddd)*[.d*]` or plain `d*[.d*]` and returns the digits
/// without separators.
fn strip_grouping(s: &str) -> Option<String> {
    let (int, frac) = match s.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (s, None),
    };
    if let Some(f) = frac {
        if !f.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
    }
    if int.is_empty() && frac.is_none_or(str::is_empty) {
        return None;
    }
    let int_digits = if int.contains(',') {
        let mut groups = int.split(',');
        let head = groups.next()?;
        if head.is_empty() || head.len() > 3 || !head.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let mut out = head.to_string();
        for g in groups {
            if g.len() != 3 || !g.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
            out.push_str(g);
        }
        out
    } else {
        if !int.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        int.to_string()
    };
    let int_digits = if int_digits.is_empty() {
        "0".to_string()
    } else {
        int_digits
    };
    Some(match frac {
        Some(f) if !f.is_empty() => format!("{int_digits}.{f}"),
        _ => int_digits,
    })
}

fn serial_epoch() -> NaiveDateTime {
    NaiveDate::from_ymd_opt(1899, 12, 30)
        .expect("valid epoch")
        .and_hms_opt(0, 0, 0)
        .expect("valid epoch")
}

/// Accepts `YYYY-MM-DD`, `YYYY-MM-DD hh:mm[:ss]` and `hh:mm[:ss]`.
fn parse_datetime_serial(s: &str) -> Option<f64> {
    if let Some(t) = parse_clock(s) {
        return Some(t);
    }
    let (date_part, time_part) = match s.split_once([' ', 'T']) {
        Some((d, t)) => (d, Some(t)),
        None => (s, None),
    };
    let date = NaiveDate::parse_from_str(date_part, "%Y-%m-%d").ok()?;
    let days = (date - serial_epoch().date()).num_days() as f64;
    match time_part {
        Some(t) => Some(days + parse_clock(t.trim())?),
        None => Some(days),
    }
}

fn parse_clock(s: &str) -> Option<f64> {
    let parts: Vec<&str> = s.split(':').collect();
    if !(2..=3).contains(&parts.len()) || parts.iter().any(|p| p.is_empty() || p.len() > 2) {
        return None;
    }
    let mut nums = [0u32; 3];
    for (slot, p) in nums.iter_mut().zip(&parts) {
        if !p.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        *slot = p.parse().ok()?;
    }
    let [h, m, sec] = nums;
    if h > 23 || m > 59 || sec > 59 {
        return None;
    }
    Some(f64::from(h * 3600 + m * 60 + sec) / 86_400.0)
}

/// Renders a value the way the engine displays it for a category. Text produced
/// here parses back through [`classify_value`] under the same category.
pub fn format_value(value: &CellValue, category: FormatCategory) -> String {
    match value {
        CellValue::Empty => String::new(),
        CellValue::Text(s) => s.clone(),
        CellValue::Number(v) => format_number(*v, category),
    }
}

pub fn format_number(v: f64, category: FormatCategory) -> String {
    match category {
        FormatCategory::Currency => {
            let sign = if v < 0.0 { "-" } else { "" };
            format!("{sign}${}", group_thousands(&format!("{}", v.abs())))
        }
        FormatCategory::Percent => format!("{}%", shift_decimal(v, 2)),
        FormatCategory::Date => format_date(v).unwrap_or_else(|| format!("{v}")),
        FormatCategory::Time => format_time(v).unwrap_or_else(|| format!("{v}")),
        _ => format!("{v}"),
    }
}

fn group_thousands(plain: &str) -> String {
    let (int, frac) = match plain.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (plain, None),
    };
    let mut out = String::with_capacity(plain.len() + int.len() / 3);
    for (i, ch) in int.chars().enumerate() {
        if i > 0 && (int.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(ch);
    }
    if let Some(f) = frac {
        out.push('.');
        out.push_str(f);
    }
    out
}

/// Multiplies by 10^shift on the shortest decimal representation, so no binary
/// rounding is introduced.
fn shift_decimal(v: f64, shift: i64) -> String {
    let sci = format!("{v:e}");
    let (mantissa, exp) = sci.split_once('e').expect("`{:e}` always has an exponent");
    let exp = exp.parse::<i64>().expect("integer exponent") + shift;
    let (negative, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    // value = 0.d1d2d3... x 10^(exp + 1)
    let point = exp + 1;
    let mut out = String::new();
    if negative {
        out.push('-');
    }
    if point <= 0 {
        out.push_str("0.");
        out.extend(std::iter::repeat_n('0', (-point) as usize));
        out.push_str(&digits);
    } else if point as usize >= digits.len() {
        out.push_str(&digits);
        out.extend(std::iter::repeat_n('0', point as usize - digits.len()));
    } else {
        out.push_str(&digits[..point as usize]);
        out.push('.');
        out.push_str(&digits[point as usize..]);
    }
    if digits == "0" {
        return "0".to_string();
    }
    out
}

fn format_date(v: f64) -> Option<String> {
    if !(1.0..3_000_000.0).contains(&v) {
        return None;
    }
    let days = v.floor();
    let secs = ((v - days) * 86_400.0).round();
    let dt = serial_epoch() + Duration::days(days as i64) + Duration::seconds(secs as i64);
    let text = if secs == 0.0 {
        dt.format("%Y-%m-%d").to_string()
    } else {
        dt.format("%Y-%m-%d %H:%M:%S").to_string()
    };
    round_trips(&text, v, FormatCategory::Date).then_some(text)
}

fn format_time(v: f64) -> Option<String> {
    if !(0.0..1.0).contains(&v) {
        return None;
    }
    let secs = (v * 86_400.0).round() as i64;
    let t = serial_epoch() + Duration::seconds(secs);
    let text = format!("{:02}:{:02}:{:02}", t.hour(), t.minute(), t.second());
    round_trips(&text, v, FormatCategory::Time).then_some(text)
}

fn round_trips(text: &str, v: f64, category: FormatCategory) -> bool {
    parse_number(text, category).is_some_and(|p| (p - v).abs() <= 1e-12 * v.abs().max(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn classify_examples() {
        assert_eq!(classify_value("3.25", FormatCategory::General), CellValue::Number(3.25));
        assert_eq!(classify_value("", FormatCategory::General), CellValue::Empty);
        assert_eq!(classify_value("  \t", FormatCategory::Number), CellValue::Empty);
        assert_eq!(classify_value("10%", FormatCategory::Percent), CellValue::Number(0.10));
        assert_eq!(
            classify_value("N/A", FormatCategory::Currency),
            CellValue::Text("N/A".into())
        );
    }

    #[test]
    fn classify_currency_and_grouping() {
        let c = FormatCategory::Currency;
        assert_eq!(classify_value("$1,234.50", c), CellValue::Number(1234.5));
        assert_eq!(classify_value("-$1,234", c), CellValue::Number(-1234.0));
        assert_eq!(classify_value("$-7", c), CellValue::Number(-7.0));
        assert_eq!(classify_value("€ 12", c), CellValue::Number(12.0));
        assert_eq!(classify_value("12 £", c), CellValue::Number(12.0));
        // malformed grouping stays text
        assert_eq!(classify_value("1,2,3", c), CellValue::Text("1,2,3".into()));
        assert_eq!(classify_value("12,34", c), CellValue::Text("12,34".into()));
    }

    #[test]
    fn rejects_non_finite_words() {
        for raw in ["inf", "NaN", "infinity", "-inf", "1e999", "e5", ".", "+", "$"] {
            assert!(
                !matches!(classify_value(raw, FormatCategory::General), CellValue::Number(_)),
                "{raw} should not be numeric"
            );
        }
    }

    #[test]
    fn booleans_are_text() {
        assert_eq!(
            classify_value("TRUE", FormatCategory::General),
            CellValue::Text("TRUE".into())
        );
    }

    #[test]
    fn dates_and_times_become_serials() {
        assert_eq!(
            classify_value("2024-01-05", FormatCategory::Date),
            CellValue::Number(45296.0)
        );
        assert_eq!(classify_value("12:00", FormatCategory::Time), CellValue::Number(0.5));
        // outside date categories an ISO date is text
        assert!(matches!(
            classify_value("2024-01-05", FormatCategory::General),
            CellValue::Text(_)
        ));
        assert_eq!(format_number(45296.0, FormatCategory::Date), "2024-01-05");
        assert_eq!(format_number(0.75, FormatCategory::Time), "18:00:00");
    }

    #[test]
    fn percent_shift_is_exact() {
        assert_eq!(format_number(0.1, FormatCategory::Percent), "10%");
        assert_eq!(format_number(0.125, FormatCategory::Percent), "12.5%");
        assert_eq!(format_number(-0.0001, FormatCategory::Percent), "-0.01%");
        assert_eq!(format_number(12.0, FormatCategory::Percent), "1200%");
        assert_eq!(format_number(0.0, FormatCategory::Percent), "0%");
        assert_eq!(format_number(1234567.5, FormatCategory::Currency), "$1,234,567.5");
    }

    #[test]
    fn select_range_bounds() {
        let g = CellGrid::new(10, 10).unwrap();
        assert_eq!(select_range(&g, CellRange::new(0, 0, 9, 9)).unwrap().len(), 100);
        assert_eq!(select_range(&g, CellRange::new(2, 3, 2, 3)).unwrap().len(), 1);
        assert!(matches!(
            select_range(&g, CellRange::new(0, 0, 10, 0)),
            Err(GridError::RangeOutOfBounds { .. })
        ));
    }

    #[test]
    fn edit_keeps_format() {
        let mut g = CellGrid::new(10, 10).unwrap();
        let fmt = CellFormat {
            fill_color: Some(Rgb::new(1, 2, 3)),
            ..CellFormat::default()
        };
        g.set(CellAddress::new(1, 1), Cell::new(CellValue::text("x"), fmt.clone()))
            .unwrap();
        let e = apply_edit(&mut g, CellAddress::new(1, 1), "42").unwrap();
        assert_eq!(e.new.value, CellValue::Number(42.0));
        assert_eq!(e.new.format, fmt);
        assert_eq!(e.old.value, CellValue::Text("x".into()));

        g.set(CellAddress::new(0, 0), Cell::number(5.0)).unwrap();
        let e = apply_edit(&mut g, CellAddress::new(0, 0), "").unwrap();
        assert_eq!(e.new.value, CellValue::Empty);

        assert!(matches!(
            apply_edit(&mut g, CellAddress::new(99, 0), "1"),
            Err(GridError::RangeOutOfBounds { .. })
        ));
    }

    #[test]
    fn range_parsing() {
        assert_eq!("0,0:4,4".parse::<CellRange>().unwrap(), CellRange::new(0, 0, 4, 4));
        assert!("4,4:0,0".parse::<CellRange>().is_err());
        assert!("a,b:c,d".parse::<CellRange>().is_err());
    }

    fn any_category() -> impl Strategy<Value = FormatCategory> {
        prop::sample::select(FormatCategory::ALL.to_vec())
    }

    proptest! {
        #[test]
        fn classify_is_total(raw in ".{0,24}", cat in any_category()) {
            match classify_value(&raw, cat) {
                CellValue::Number(v) => prop_assert!(v.is_finite()),
                CellValue::Text(t) => prop_assert!(!t.is_empty()),
                CellValue::Empty => prop_assert!(raw.trim().is_empty()),
            }
        }

        #[test]
        fn formatted_numbers_round_trip(
            v in prop_oneof![-1e12f64..1e12, -1.0f64..1.0, 0.0f64..100_000.0],
            cat in any_category(),
        ) {
            let text = format_number(v, cat);
            let back = classify_value(&text, cat).as_number();
            prop_assert!(back.is_some(), "{text} did not parse");
            let back = back.unwrap();
            prop_assert!((back - v).abs() <= 1e-9 * v.abs().max(1.0), "{v} -> {text} -> {back}");
        }

        #[test]
        fn view_stays_in_range(
            rows in 1usize..12, cols in 1usize..12,
            a in 0usize..12, b in 0usize..12, c in 0usize..12, d in 0usize..12,
        ) {
            let g = CellGrid::new(rows, cols).unwrap();
            let range = CellRange::new(a.min(b), c.min(d), a.max(b), c.max(d));
            match select_range(&g, range) {
                Ok(view) => {
                    let seen: Vec<_> = view.cells().map(|(addr, _)| addr).collect();
                    prop_assert_eq!(seen.len(), range.len());
                    prop_assert!(seen.iter().all(|a| range.contains(*a)));
                    prop_assert!(view.get(CellAddress::new(range.bottom + 1, range.left)).is_none());
                }
                Err(_) => prop_assert!(range.bottom >= rows || range.right >= cols),
            }
        }

        #[test]
        fn edit_touches_one_cell(r in 0usize..6, c in 0usize..6, raw in "[0-9a-z%$.,]{0,6}") {
            let mut g = CellGrid::new(6, 6).unwrap();
            for (i, (addr, _)) in g.clone().cells().enumerate() {
                g.set(addr, Cell::number(i as f64)).unwrap();
            }
            let before = g.clone();
            let addr = CellAddress::new(r, c);
            apply_edit(&mut g, addr, &raw).unwrap();
            for (a, cell) in before.cells() {
                if a != addr {
                    prop_assert_eq!(g.get(a).unwrap(), cell);
                }
            }
        }
    }
}
