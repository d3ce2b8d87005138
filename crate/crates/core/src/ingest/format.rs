use crate::grid::{FormatCategory, Rgb};

const CURRENCY: [char; 4] = ['$', '€', '£', '¥'];

/// Classifies a number-format code by token scan. Priority, first match wins:
/// percent, currency, date, time, text, number, general.
///
/// Quoted literals, `\`-escapes and `_`/`*` padding characters are skipped for
/// every token except currency symbols, which count even when quoted
/// (`"$"#,##0`). A `[$...]` locale block counts as currency only when it
/// carries a symbol; `[$-409]` is a bare locale tag. `@` only counts in the
/// first section.
pub fn infer_format_category(number_format: &str) -> FormatCategory {
    let code = number_format.trim();
    if code.is_empty() || code.eq_ignore_ascii_case("general") {
        return FormatCategory::General;
    }

    let mut percent = false;
    let mut currency = false;
    let (mut date, mut time, mut text, mut number) = (false, false, false, false);

    let chars: Vec<char> = code.chars().collect();
    let mut section = 0;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            '"' => {
                i += 1;
                while i < chars.len() && chars[i] != '"' {
                    currency |= CURRENCY.contains(&chars[i]);
                    i += 1;
                }
            }
            '\\' => {
                i += 1;
                currency |= chars.get(i).is_some_and(|c| CURRENCY.contains(c));
            }
            '_' | '*' => i += 1,
            c if CURRENCY.contains(&c) => currency = true,
            '[' => {
                let end = chars[i..].iter().position(|&c| c == ']').map_or(chars.len(), |p| i + p);
                let inner: String = chars[i + 1..end].iter().collect();
                if let Some(locale) = inner.strip_prefix('$') {
                    if !locale.is_empty() && !locale.starts_with('-') {
                        currency = true;
                    }
                } else {
                    // elapsed-time blocks: [h], [mm], [ss]
                    let lower = inner.to_ascii_lowercase();
                    if !lower.is_empty() && lower.chars().all(|c| matches!(c, 'h' | 'm' | 's')) {
                        time = true;
                    }
                }
                i = end;
            }
            '%' => percent = true,
            ';' => section += 1,
            // `@` in a trailing text section does not make a numeric format textual
            '@' if section == 0 => text = true,
            '0' | '#' => number = true,
            _ => match c.to_ascii_lowercase() {
                'y' | 'd' => date = true,
                'h' | 's' => time = true,
                'a' if is_am_pm(&chars[i..]) => time = true,
                _ => {}
            },
        }
        i += 1;
    }

    if percent {
        FormatCategory::Percent
    } else if currency {
        FormatCategory::Currency
    } else if date {
        FormatCategory::Date
    } else if time {
        FormatCategory::Time
    } else if text {
        FormatCategory::TextFmt
    } else if number {
        FormatCategory::Number
    } else {
        FormatCategory::General
    }
}

fn is_am_pm(rest: &[char]) -> bool {
    let s: String = rest.iter().take(5).collect::<String>().to_ascii_uppercase();
    s.starts_with("AM/PM") || s.starts_with("A/P")
}

/// Format codes for the built-in `numFmtId`s (en-US).
pub fn builtin_number_format(id: u32) -> Option<&'static str> {
    Some(match id {
        0 => "General",
        1 => "0",
        2 => "0.00",
        3 => "#,##0",
        4 => "#,##0.00",
        5 => "$#,##0_);($#,##0)",
        6 => "$#,##0_);[Red]($#,##0)",
        7 => "$#,##0.00_);($#,##0.00)",
        8 => "$#,##0.00_);[Red]($#,##0.00)",
        9 => "0%",
        10 => "0.00%",
        11 => "0.00E+00",
        12 => "# ?/?",
        13 => "# ??/??",
        14 => "mm-dd-yy",
        15 => "d-mmm-yy",
        16 => "d-mmm",
        17 => "mmm-yy",
        18 => "h:mm AM/PM",
        19 => "h:mm:ss AM/PM",
        20 => "h:mm",
        21 => "h:mm:ss",
        22 => "m/d/yy h:mm",
        37 => "#,##0 ;(#,##0)",
        38 => "#,##0 ;[Red](#,##0)",
        39 => "#,##0.00;(#,##0.00)",
        40 => "#,##0.00;[Red](#,##0.00)",
        41 => r#"_(* #,##0_);_(* \(#,##0\);_(* "-"_);_(@_)"#,
        42 => r#"_($* #,##0_);_($* \(#,##0\);_($* "-"_);_(@_)"#,
        43 => r#"_(* #,##0.00_);_(* \(#,##0.00\);_(* "-"??_);_(@_)"#,
        44 => r#"_($* #,##0.00_);_($* \(#,##0.00\);_($* "-"??_);_(@_)"#,
        45 => "mm:ss",
        46 => "[h]:mm:ss",
        47 => "mmss.0",
        48 => "##0.0E+0",
        49 => "@",
        _ => return None,
    })
}

/// Default Office theme palette in `theme="n"` index order.
const THEME_COLORS: [u32; 12] = [
    0xFFFFFF, 0x000000, 0xE7E6E6, 0x44546A, 0x4472C4, 0xED7D31, 0xA5A5A5, 0xFFC000, 0x5B9BD5, 0x70AD47, 0x0563C1,
    0x954F72,
];

/// Legacy indexed palette.
const INDEXED_COLORS: [u32; 64] = [
    0x000000, 0xFFFFFF, 0xFF0000, 0x00FF00, 0x0000FF, 0xFFFF00, 0xFF00FF, 0x00FFFF, //
    0x000000, 0xFFFFFF, 0xFF0000, 0x00FF00, 0x0000FF, 0xFFFF00, 0xFF00FF, 0x00FFFF, //
    0x800000, 0x008000, 0x000080, 0x808000, 0x800080, 0x008080, 0xC0C0C0, 0x808080, //
    0x9999FF, 0x993366, 0xFFFFCC, 0xCCFFFF, 0x660066, 0xFF8080, 0x0066CC, 0xCCCCFF, //
    0x000080, 0xFF00FF, 0xFFFF00, 0x00FFFF, 0x800080, 0x800000, 0x008080, 0x0000FF, //
    0x00CCFF, 0xCCFFFF, 0xCCFFCC, 0xFFFF99, 0x99CCFF, 0xFF99CC, 0xCC99FF, 0xFFCC99, //
    0x3366FF, 0x33CCCC, 0x99CC00, 0xFFCC00, 0xFF9900, 0xFF6600, 0x666699, 0x969696, //
    0x003366, 0x339966, 0x003300, 0x333300, 0x993300, 0x993366, 0x333399, 0x333333,
];

fn rgb_of(v: u32) -> Rgb {
    Rgb::new((v >> 16) as u8, (v >> 8) as u8, v as u8)
}

pub(crate) fn theme_color(index: usize) -> Option<Rgb> {
    THEME_COLORS.get(index).copied().map(rgb_of)
}

pub(crate) fn indexed_color(index: usize) -> Option<Rgb> {
    match index {
        64 => Some(Rgb::new(0, 0, 0)),
        65 => Some(Rgb::new(255, 255, 255)),
        _ => INDEXED_COLORS.get(index).copied().map(rgb_of),
    }
}

/// Applies an OOXML tint (-1..1) by scaling HSL luminance.
pub(crate) fn apply_tint(color: Rgb, tint: f64) -> Rgb {
    if tint == 0.0 {
        return color;
    }
    let (h, s, l) = rgb_to_hsl(color);
    let l = if tint < 0.0 {
        l * (1.0 + tint)
    } else {
        l * (1.0 - tint) + tint
    };
    hsl_to_rgb(h, s, l.clamp(0.0, 1.0))
}

fn rgb_to_hsl(c: Rgb) -> (f64, f64, f64) {
    let r = f64::from(c.r) / 255.0;
    let g = f64::from(c.g) / 255.0;
    let b = f64::from(c.b) / 255.0;
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let l = (max + min) / 2.0;
    if max == min {
        return (0.0, 0.0, l);
    }
    let d = max - min;
    let s = if l > 0.5 {
        d / (2.0 - max - min)
    } else {
        d / (max + min)
    };
    let h = if max == r {
        ((g - b) / d).rem_euclid(6.0)
    } else if max == g {
        (b - r) / d + 2.0
    } else {
        (r - g) / d + 4.0
    };
    (h / 6.0, s, l)
}

fn hsl_to_rgb(h: f64, s: f64, l: f64) -> Rgb {
    if s == 0.0 {
        let v = (l * 255.0).round() as u8;
        return Rgb::new(v, v, v);
    }
    let q = if l < 0.5 { l * (1.0 + s) } else { l + s - l * s };
    let p = 2.0 * l - q;
    let channel = |t: f64| {
        let t = t.rem_euclid(1.0);
        let v = if t < 1.0 / 6.0 {
            p + (q - p) * 6.0 * t
        } else if t < 0.5 {
            q
        } else if t < 2.0 / 3.0 {
            p + (q - p) * (2.0 / 3.0 - t) * 6.0
        } else {
            p
        };
        (v * 255.0).round().clamp(0.0, 255.0) as u8
    };
    Rgb::new(channel(h + 1.0 / 3.0), channel(h), channel(h - 1.0 / 3.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use FormatCategory::*;

    #[test]
    fn category_examples() {
        assert_eq!(infer_format_category("0.00%"), Percent);
        assert_eq!(infer_format_category("$#,##0.00"), Currency);
        assert_eq!(infer_format_category("yyyy-mm-dd"), Date);
        assert_eq!(infer_format_category("General"), General);
    }

    #[test]
    fn category_edge_cases() {
        assert_eq!(infer_format_category("h:mm AM/PM"), Time);
        assert_eq!(infer_format_category("mm:ss"), Time);
        assert_eq!(infer_format_category("[h]:mm:ss"), Time);
        assert_eq!(infer_format_category("@"), TextFmt);
        assert_eq!(infer_format_category("#,##0.00"), Number);
        assert_eq!(infer_format_category("0.00E+00"), Number);
        assert_eq!(infer_format_category("[$€-407]#,##0.00"), Currency);
        assert_eq!(infer_format_category("[$-409]mmmm d, yyyy"), Date);
        assert_eq!(infer_format_category("\"$\"#,##0"), Currency);
        assert_eq!(infer_format_category("#,##0;[Red]-#,##0"), Number);
        assert_eq!(infer_format_category("0\" days\""), Number);
        assert_eq!(infer_format_category(""), General);
        for id in 0..50 {
            if let Some(code) = builtin_number_format(id) {
                let expect = match id {
                    0 => General,
                    1..=4 | 11..=13 | 37..=40 | 48 => Number,
                    41 | 43 => Number,
                    5..=8 | 42 | 44 => Currency,
                    9 | 10 => Percent,
                    14..=17 | 22 => Date,
                    18..=21 | 45..=47 => Time,
                    49 => TextFmt,
                    _ => unreachable!(),
                };
                assert_eq!(infer_format_category(code), expect, "numFmtId {id}: {code}");
            }
        }
    }

    #[test]
    fn tint_and_palettes() {
        assert_eq!(theme_color(4), Some(Rgb::new(0x44, 0x72, 0xC4)));
        assert_eq!(indexed_color(5), Some(Rgb::new(255, 255, 0)));
        assert_eq!(apply_tint(Rgb::new(0, 0, 0), 0.5), Rgb::new(128, 128, 128));
        assert_eq!(apply_tint(Rgb::new(255, 255, 255), -0.5), Rgb::new(128, 128, 128));
        assert_eq!(apply_tint(Rgb::new(0x44, 0x72, 0xC4), 0.0), Rgb::new(0x44, 0x72, 0xC4));
    }
}
