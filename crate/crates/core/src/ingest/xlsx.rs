//! Minimal Office Open XML spreadsheet reader: values, shared strings, solid
//! fills, border presence, bold and number formats.

use std::collections::{BTreeSet, HashMap};
use std::io::{Cursor, Read};

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use zip::ZipArchive;

use crate::grid::{Borders, Cell, CellFormat, CellGrid, CellValue, FormatCategory, Rgb};

use super::format::{apply_tint, builtin_number_format, indexed_color, infer_format_category, theme_color};
use super::{IngestError, IngestOptions, Ingested};

const REL_OFFICE_DOCUMENT: &str = "/officeDocument";
const REL_SHARED_STRINGS: &str = "/sharedStrings";
const REL_STYLES: &str = "/styles";

/// Reads one worksheet into a grid anchored at A1 and extending to the
/// bottom-right corner of the used range.
pub fn read_xlsx(bytes: &[u8], opts: &IngestOptions) -> Result<CellGrid, IngestError> {
    read_xlsx_with_warnings(bytes, opts).map(|i| i.grid)
}

pub fn read_xlsx_with_warnings(bytes: &[u8], opts: &IngestOptions) -> Result<Ingested, IngestError> {
    let mut pkg = Package::open(bytes)?;

    let root_rels = pkg.relationships("_rels/.rels", "")?;
    let workbook_path = root_rels
        .iter()
        .find(|r| r.rel_type.ends_with(REL_OFFICE_DOCUMENT))
        .map(|r| r.target.clone())
        .unwrap_or_else(|| "xl/workbook.xml".to_string());

    let sheets = parse_workbook(&workbook_path, &pkg.read_part(&workbook_path)?)?;
    let sheet = match &opts.sheet_name {
        Some(name) => sheets
            .iter()
            .find(|s| &s.name == name)
            .ok_or_else(|| IngestError::MissingSheet(name.clone()))?,
        None => sheets
            .first()
            .ok_or_else(|| malformed(&workbook_path, "workbook lists no sheets"))?,
    };

    let wb_dir = parent_dir(&workbook_path);
    let wb_rels = pkg.relationships(&rels_path_for(&workbook_path), wb_dir)?;
    let sheet_path = wb_rels
        .iter()
        .find(|r| r.id == sheet.rel_id)
        .map(|r| r.target.clone())
        .ok_or_else(|| malformed(&workbook_path, &format!("no relationship for sheet '{}'", sheet.name)))?;

    let shared_strings = match wb_rels.iter().find(|r| r.rel_type.ends_with(REL_SHARED_STRINGS)) {
        Some(rel) => parse_shared_strings(&rel.target, &pkg.read_part(&rel.target)?)?,
        None => Vec::new(),
    };
    let styles = match wb_rels.iter().find(|r| r.rel_type.ends_with(REL_STYLES)) {
        Some(rel) => parse_styles(&rel.target, &pkg.read_part(&rel.target)?)?,
        None => Styles::default(),
    };

    let sheet_xml = pkg.read_part(&sheet_path)?;
    parse_sheet(&sheet_path, &sheet_xml, &shared_strings, &styles)
}

fn malformed(part: &str, detail: &str) -> IngestError {
    IngestError::MalformedPart {
        part: part.to_string(),
        detail: detail.to_string(),
    }
}

struct Package {
    archive: ZipArchive<Cursor<Vec<u8>>>,
}

impl Package {
    fn open(bytes: &[u8]) -> Result<Self, IngestError> {
        let archive = ZipArchive::new(Cursor::new(bytes.to_vec())).map_err(|e| IngestError::NotAZip(e.to_string()))?;
        Ok(Package { archive })
    }

    fn read_part(&mut self, path: &str) -> Result<String, IngestError> {
        let mut file = self
            .archive
            .by_name(path)
            .map_err(|e| malformed(path, &format!("cannot open part: {e}")))?;
        let mut out = String::new();
        file.read_to_string(&mut out)
            .map_err(|e| malformed(path, &format!("cannot read part: {e}")))?;
        Ok(out)
    }

    fn try_read_part(&mut self, path: &str) -> Result<Option<String>, IngestError> {
        if self.archive.index_for_name(path).is_none() {
            return Ok(None);
        }
        self.read_part(path).map(Some)
    }

    /// Relationships of a part, with targets resolved to package paths.
    fn relationships(&mut self, rels_path: &str, base_dir: &str) -> Result<Vec<Relationship>, IngestError> {
        let Some(xml) = self.try_read_part(rels_path)? else {
            return Ok(Vec::new());
        };
        let mut out = Vec::new();
        for_each_start(rels_path, &xml, |_, e| {
            if e.local_name().as_ref() == b"Relationship" {
                let id = attr(rels_path, e, b"Id")?.unwrap_or_default();
                let rel_type = attr(rels_path, e, b"Type")?.unwrap_or_default();
                let target = attr(rels_path, e, b"Target")?.unwrap_or_default();
                out.push(Relationship {
                    id,
                    rel_type,
                    target: resolve_target(base_dir, &target),
                });
            }
            Ok(())
        })?;
        Ok(out)
    }
}

struct Relationship {
    id: String,
    rel_type: String,
    target: String,
}

struct SheetEntry {
    name: String,
    rel_id: String,
}

fn parent_dir(path: &str) -> &str {
    path.rfind('/').map_or("", |i| &path[..i])
}

fn rels_path_for(part: &str) -> String {
    let dir = parent_dir(part);
    let file = &part[dir.len()..].trim_start_matches('/');
    if dir.is_empty() {
        format!("_rels/{file}.rels")
    } else {
        format!("{dir}/_rels/{file}.rels")
    }
}

fn resolve_target(base_dir: &str, target: &str) -> String {
    let joined = match target.strip_prefix('/') {
        Some(abs) => abs.to_string(),
        None if base_dir.is_empty() => target.to_string(),
        None => format!("{base_dir}/{target}"),
    };
    let mut parts: Vec<&str> = Vec::new();
    for seg in joined.split('/') {
        match seg {
            "" | "." => {}
            ".." => {
                parts.pop();
            }
            s => parts.push(s),
        }
    }
    parts.join("/")
}

fn attr(part: &str, e: &BytesStart<'_>, name: &[u8]) -> Result<Option<String>, IngestError> {
    for a in e.attributes() {
        let a = a.map_err(|err| malformed(part, &err.to_string()))?;
        if a.key.as_ref() == name || a.key.local_name().as_ref() == name {
            let v = a.unescape_value().map_err(|err| malformed(part, &err.to_string()))?;
            return Ok(Some(v.into_owned()));
        }
    }
    Ok(None)
}

/// Visits every start/empty element with the stack of enclosing local names.
fn for_each_start<F>(part: &str, xml: &str, mut f: F) -> Result<(), IngestError>
where
    F: FnMut(&[Vec<u8>], &BytesStart<'_>) -> Result<(), IngestError>,
{
    let mut reader = Reader::from_str(xml);
    let mut stack: Vec<Vec<u8>> = Vec::new();
    loop {
        match reader.read_event() {
            Ok(Event::Start(e)) => {
                f(&stack, &e)?;
                stack.push(e.local_name().as_ref().to_vec());
            }
            Ok(Event::Empty(e)) => f(&stack, &e)?,
            Ok(Event::End(_)) => {
                stack.pop();
            }
            Ok(Event::Eof) => return Ok(()),
            Ok(_) => {}
            Err(e) => return Err(malformed(part, &e.to_string())),
        }
    }
}

fn parse_workbook(part: &str, xml: &str) -> Result<Vec<SheetEntry>, IngestError> {
    let mut sheets = Vec::new();
    for_each_start(part, xml, |_, e| {
        if e.local_name().as_ref() == b"sheet" {
            let name = attr(part, e, b"name")?.ok_or_else(|| malformed(part, "sheet without name"))?;
            let rel_id = attr(part, e, b"r:id")?.ok_or_else(|| malformed(part, "sheet without r:id"))?;
            sheets.push(SheetEntry { name, rel_id });
        }
        Ok(())
    })?;
    Ok(sheets)
}

fn parse_shared_strings(part: &str, xml: &str) -> Result<Vec<String>, IngestError> {
    let mut reader = Reader::from_str(xml);
    let mut strings = Vec::new();
    let mut current: Option<String> = None;
    let mut in_text = false;
    // phonetic runs (<rPh>) are not part of the displayed value
    let mut in_phonetic = false;
    loop {
        match reader.read_event() {
            Ok(Event::Start(e)) => match e.local_name().as_ref() {
                b"si" => current = Some(String::new()),
                b"t" => in_text = true,
                b"rPh" => in_phonetic = true,
                _ => {}
            },
            Ok(Event::Empty(e)) if e.local_name().as_ref() == b"si" => strings.push(String::new()),
            Ok(Event::End(e)) => match e.local_name().as_ref() {
                b"si" => strings.push(current.take().unwrap_or_default()),
                b"t" => in_text = false,
                b"rPh" => in_phonetic = false,
                _ => {}
            },
            Ok(Event::Text(t)) if in_text && !in_phonetic => {
                let s = t.unescape().map_err(|e| malformed(part, &e.to_string()))?;
                if let Some(cur) = current.as_mut() {
                    cur.push_str(&s);
                }
            }
            Ok(Event::CData(t)) if in_text && !in_phonetic => {
                if let Some(cur) = current.as_mut() {
                    cur.push_str(&String::from_utf8_lossy(&t));
                }
            }
            Ok(Event::Eof) => return Ok(strings),
            Ok(_) => {}
            Err(e) => return Err(malformed(part, &e.to_string())),
        }
    }
}

#[derive(Debug, Default, Clone)]
struct Styles {
    num_fmts: HashMap<u32, String>,
    fonts_bold: Vec<bool>,
    fills: Vec<Option<Rgb>>,
    borders: Vec<Borders>,
    xfs: Vec<Xf>,
}

#[derive(Debug, Default, Clone, Copy)]
struct Xf {
    num_fmt_id: u32,
    font_id: usize,
    fill_id: usize,
    border_id: usize,
}

impl Styles {
    fn cell_format(&self, style_index: usize) -> CellFormat {
        let Some(xf) = self.xfs.get(style_index) else {
            return CellFormat::default();
        };
        let code = self
            .num_fmts
            .get(&xf.num_fmt_id)
            .map(String::as_str)
            .or_else(|| builtin_number_format(xf.num_fmt_id));
        let (category, number_format) = match code {
            Some(c) if !c.eq_ignore_ascii_case("general") => (infer_format_category(c), Some(c.to_string())),
            _ => (FormatCategory::General, None),
        };
        CellFormat {
            fill_color: self.fills.get(xf.fill_id).copied().flatten(),
            border: self.borders.get(xf.border_id).copied().unwrap_or_default(),
            font_bold: self.fonts_bold.get(xf.font_id).copied().unwrap_or(false),
            category,
            number_format,
        }
    }
}

fn parse_color(part: &str, e: &BytesStart<'_>) -> Result<Option<Rgb>, IngestError> {
    let base = if let Some(rgb) = attr(part, e, b"rgb")? {
        Rgb::from_hex(&rgb)
    } else if let Some(theme) = attr(part, e, b"theme")? {
        theme.parse().ok().and_then(theme_color)
    } else if let Some(idx) = attr(part, e, b"indexed")? {
        idx.parse().ok().and_then(indexed_color)
    } else {
        None
    };
    let tint: f64 = attr(part, e, b"tint")?.and_then(|t| t.parse().ok()).unwrap_or(0.0);
    Ok(base.map(|c| apply_tint(c, tint)))
}

fn flag(v: Option<String>) -> bool {
    v.is_none_or(|v| v != "0" && v != "false")
}

fn parse_styles(part: &str, xml: &str) -> Result<Styles, IngestError> {
    let mut styles = Styles::default();
    let mut fill_is_solid = false;
    for_each_start(part, xml, |stack, e| {
        let parent = stack.last().map(Vec::as_slice);
        let in_section = |name: &[u8]| stack.iter().any(|s| s.as_slice() == name);
        match e.local_name().as_ref() {
            b"numFmt" => {
                let id = attr(part, e, b"numFmtId")?.and_then(|v| v.parse().ok());
                let code = attr(part, e, b"formatCode")?;
                if let (Some(id), Some(code)) = (id, code) {
                    styles.num_fmts.insert(id, code);
                }
            }
            b"font" if parent == Some(b"fonts") => styles.fonts_bold.push(false),
            b"b" if parent == Some(b"font") && in_section(b"fonts") => {
                if let Some(last) = styles.fonts_bold.last_mut() {
                    *last = flag(attr(part, e, b"val")?);
                }
            }
            b"fill" if parent == Some(b"fills") => styles.fills.push(None),
            b"patternFill" if in_section(b"fills") => {
                fill_is_solid = attr(part, e, b"patternType")?.as_deref() == Some("solid");
            }
            b"fgColor" if parent == Some(b"patternFill") && in_section(b"fills") => {
                if fill_is_solid {
                    let color = parse_color(part, e)?;
                    if let Some(last) = styles.fills.last_mut() {
                        *last = color;
                    }
                }
            }
            b"border" if parent == Some(b"borders") => styles.borders.push(Borders::default()),
            edge @ (b"left" | b"right" | b"top" | b"bottom" | b"start" | b"end")
                if parent == Some(b"border") && in_section(b"borders") =>
            {
                let on = attr(part, e, b"style")?.is_some_and(|s| s != "none");
                if let Some(b) = styles.borders.last_mut() {
                    match edge {
                        b"left" | b"start" => b.left |= on,
                        b"right" | b"end" => b.right |= on,
                        b"top" => b.top |= on,
                        _ => b.bottom |= on,
                    }
                }
            }
            b"xf" if parent == Some(b"cellXfs") => {
                let num = |v: Option<String>| v.and_then(|s| s.parse::<usize>().ok()).unwrap_or(0);
                styles.xfs.push(Xf {
                    num_fmt_id: num(attr(part, e, b"numFmtId")?) as u32,
                    font_id: num(attr(part, e, b"fontId")?),
                    fill_id: num(attr(part, e, b"fillId")?),
                    border_id: num(attr(part, e, b"borderId")?),
                });
            }
            _ => {}
        }
        Ok(())
    })?;
    Ok(styles)
}

/// Parses an A1-style reference into zero-based (row, col).
pub(crate) fn parse_a1(reference: &str) -> Option<(usize, usize)> {
    let split = reference.find(|c: char| c.is_ascii_digit())?;
    let (letters, digits) = reference.split_at(split);
    if letters.is_empty() || letters.len() > 3 {
        return None;
    }
    let mut col = 0usize;
    for b in letters.bytes() {
        if !b.is_ascii_alphabetic() {
            return None;
        }
        col = col * 26 + usize::from(b.to_ascii_uppercase() - b'A' + 1);
    }
    let row: usize = digits.parse().ok()?;
    (row >= 1).then(|| (row - 1, col - 1))
}

#[derive(Default)]
struct RawCell {
    row: usize,
    col: usize,
    style: usize,
    cell_type: String,
    value: Option<String>,
    inline: Option<String>,
}

fn parse_sheet(part: &str, xml: &str, shared_strings: &[String], styles: &Styles) -> Result<Ingested, IngestError> {
    let mut reader = Reader::from_str(xml);
    let mut hidden_rows: BTreeSet<usize> = BTreeSet::new();
    let mut hidden_cols: BTreeSet<usize> = BTreeSet::new();
    let mut raw_cells: Vec<RawCell> = Vec::new();
    let mut warnings = Vec::new();

    let mut current_row = 0usize;
    let mut next_row = 0usize;
    let mut next_col = 0usize;
    let mut cell: Option<RawCell> = None;
    let mut text_target: Option<&'static str> = None;

    let begin_cell = |e: &BytesStart<'_>, current_row: usize, next_col: &mut usize| -> Result<RawCell, IngestError> {
        let (row, col) = match attr(part, e, b"r")? {
            Some(r) => parse_a1(&r).ok_or_else(|| malformed(part, &format!("bad cell reference '{r}'")))?,
            None => (current_row, *next_col),
        };
        *next_col = col + 1;
        Ok(RawCell {
            row,
            col,
            style: attr(part, e, b"s")?.and_then(|s| s.parse().ok()).unwrap_or(0),
            cell_type: attr(part, e, b"t")?.unwrap_or_else(|| "n".to_string()),
            ..RawCell::default()
        })
    };
    let begin_row = |e: &BytesStart<'_>, next_row: usize| -> Result<(usize, bool), IngestError> {
        let row = match attr(part, e, b"r")? {
            Some(r) => {
                r.parse::<usize>()
                    .ok()
                    .filter(|&r| r >= 1)
                    .ok_or_else(|| malformed(part, &format!("bad row number '{r}'")))?
                    - 1
            }
            None => next_row,
        };
        let zero_height = attr(part, e, b"ht")?.and_then(|h| h.parse::<f64>().ok()) == Some(0.0);
        let hidden = attr(part, e, b"hidden")?.is_some_and(|h| h == "1" || h == "true");
        Ok((row, hidden || zero_height))
    };

    loop {
        let event = reader.read_event().map_err(|e| malformed(part, &e.to_string()))?;
        match event {
            Event::Start(e) => match e.local_name().as_ref() {
                b"row" => {
                    let (row, hidden) = begin_row(&e, next_row)?;
                    if hidden {
                        hidden_rows.insert(row);
                    }
                    current_row = row;
                    next_row = row + 1;
                    next_col = 0;
                }
                b"c" => cell = Some(begin_cell(&e, current_row, &mut next_col)?),
                b"v" if cell.is_some() => text_target = Some("v"),
                b"t" if cell.is_some() => text_target = Some("is"),
                _ => {}
            },
            Event::Empty(e) => match e.local_name().as_ref() {
                b"row" => {
                    let (row, hidden) = begin_row(&e, next_row)?;
                    if hidden {
                        hidden_rows.insert(row);
                    }
                    next_row = row + 1;
                }
                b"c" => raw_cells.push(begin_cell(&e, current_row, &mut next_col)?),
                b"col" => {
                    let min: usize = attr(part, &e, b"min")?.and_then(|v| v.parse().ok()).unwrap_or(0);
                    let max: usize = attr(part, &e, b"max")?.and_then(|v| v.parse().ok()).unwrap_or(min);
                    let hidden = attr(part, &e, b"hidden")?.is_some_and(|h| h == "1" || h == "true");
                    let zero_width = attr(part, &e, b"width")?.and_then(|w| w.parse::<f64>().ok()) == Some(0.0);
                    if (hidden || zero_width) && min >= 1 {
                        hidden_cols.extend(min - 1..max.min(min + 16_384));
                    }
                }
                _ => {}
            },
            Event::Text(t) => {
                if let (Some(target), Some(c)) = (text_target, cell.as_mut()) {
                    let s = t.unescape().map_err(|e| malformed(part, &e.to_string()))?;
                    let slot = if target == "v" { &mut c.value } else { &mut c.inline };
                    slot.get_or_insert_with(String::new).push_str(&s);
                }
            }
            Event::End(e) => match e.local_name().as_ref() {
                b"c" => {
                    if let Some(c) = cell.take() {
                        raw_cells.push(c);
                    }
                }
                b"v" | b"t" => text_target = None,
                _ => {}
            },
            Event::Eof => break,
            _ => {}
        }
    }

    let mut resolved: Vec<(usize, usize, Cell)> = Vec::with_capacity(raw_cells.len());
    for raw in raw_cells {
        let format = styles.cell_format(raw.style);
        let value = resolve_value(part, &raw, shared_strings, &mut warnings)?;
        let cell = Cell::new(value, format);
        if cell.is_bearing() {
            resolved.push((raw.row, raw.col, cell));
        }
    }

    // hidden cells still count toward the used range, so they stay in place as Empty
    let n_rows = resolved
        .iter()
        .map(|(r, _, _)| r + 1)
        .max()
        .ok_or(IngestError::EmptyInput)?;
    let n_cols = resolved.iter().map(|(_, c, _)| c + 1).max().unwrap_or(1);
    let mut grid = CellGrid::new(n_rows, n_cols)?;
    for (row, col, cell) in resolved {
        if !hidden_rows.contains(&row) && !hidden_cols.contains(&col) {
            grid.set(crate::grid::CellAddress::new(row, col), cell)?;
        }
    }
    Ok(Ingested { grid, warnings })
}

fn resolve_value(
    part: &str,
    raw: &RawCell,
    shared_strings: &[String],
    warnings: &mut Vec<String>,
) -> Result<CellValue, IngestError> {
    let v = raw.value.as_deref();
    Ok(match raw.cell_type.as_str() {
        "s" => {
            let Some(v) = v else { return Ok(CellValue::Empty) };
            let idx: usize = v
                .trim()
                .parse()
                .map_err(|_| malformed(part, &format!("bad shared string index '{v}'")))?;
            let s = shared_strings
                .get(idx)
                .ok_or_else(|| malformed(part, &format!("shared string index {idx} out of range")))?;
            CellValue::text(s.as_str())
        }
        "inlineStr" => CellValue::text(raw.inline.clone().unwrap_or_default()),
        "str" | "e" => CellValue::text(v.unwrap_or_default()),
        "b" => match v.map(str::trim) {
            Some("1") => CellValue::Text("TRUE".into()),
            Some("0") => CellValue::Text("FALSE".into()),
            Some(other) => CellValue::text(other),
            None => CellValue::Empty,
        },
        "d" => match v {
            Some(s) => match crate::grid::parse_number(s.trim(), FormatCategory::Date) {
                Some(serial) => CellValue::Number(serial),
                None => {
                    warnings.push(format!("{}: unparseable date '{s}' kept as text", a1(raw)));
                    CellValue::text(s)
                }
            },
            None => CellValue::Empty,
        },
        _ => match v {
            None => CellValue::Empty,
            Some(s) if s.trim().is_empty() => CellValue::Empty,
            Some(s) => match s.trim().parse::<f64>() {
                Ok(n) if n.is_finite() => CellValue::Number(n),
                _ => {
                    warnings.push(format!("{}: non-finite or invalid number '{s}' kept as text", a1(raw)));
                    CellValue::text(s)
                }
            },
        },
    })
}

fn a1(raw: &RawCell) -> String {
    let mut col = raw.col + 1;
    let mut letters = Vec::new();
    while col > 0 {
        let rem = (col - 1) % 26;
        letters.push(b'A' + rem as u8);
        col = (col - 1) / 26;
    }
    letters.reverse();
    format!("{}{}", String::from_utf8(letters).expect("ascii"), raw.row + 1)
}
