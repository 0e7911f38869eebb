//! Uncontracted 6-dot Braille translation and paging.
//!
//! The mapping lives in `data/braille.tsv`. Text is lowercased (no capital
//! indicators); a digit run is prefixed by the number sign and may contain
//! `.` or `,` between digits; a letter a-j directly after a number gets the
//! grade 1 indicator so it is not read as a digit.

use std::collections::HashMap;
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

/// Cells per line on the device's Braille display.
pub const LINE_CELLS: usize = 20;

/// One 6-dot cell. Bit `i` is dot `i + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BrailleCell(pub u8);

impl BrailleCell {
    pub const BLANK: BrailleCell = BrailleCell(0);

    /// Build from dot numbers, e.g. "1245". "0" is the blank cell.
    pub fn from_dots(dots: &str) -> Option<Self> {
        let mut mask = 0u8;
        for c in dots.chars() {
            match c.to_digit(10)? {
                0 => {}
                d @ 1..=6 => mask |= 1 << (d - 1),
                _ => return None,
            }
        }
        Some(Self(mask))
    }

    pub fn dots(self) -> Vec<u8> {
        (1..=6).filter(|d| self.0 & (1 << (d - 1)) != 0).collect()
    }

    pub fn to_char(self) -> char {
        char::from_u32(0x2800 + self.0 as u32).unwrap_or('\u{2800}')
    }
}

/// A line of at most [`LINE_CELLS`] cells plus the text it came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BrailleLine {
    pub cells: Vec<BrailleCell>,
    pub text: String,
}

impl BrailleLine {
    pub fn unicode(&self) -> String {
        self.cells.iter().map(|c| c.to_char()).collect()
    }

    /// Device payload: exactly [`LINE_CELLS`] bytes, blank padded.
    pub fn to_bytes(&self) -> [u8; LINE_CELLS] {
        let mut out = [0u8; LINE_CELLS];
        for (o, c) in out.iter_mut().zip(&self.cells) {
            *o = c.0;
        }
        out
    }
}

impl fmt::Display for BrailleLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.unicode())
    }
}

struct Table {
    chars: HashMap<char, Vec<BrailleCell>>,
    number: BrailleCell,
    grade1: BrailleCell,
    unknown: BrailleCell,
}

fn table() -> &'static Table {
    static TABLE: OnceLock<Table> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut chars = HashMap::new();
        let mut indicators = HashMap::new();
        for line in include_str!("../../data/braille.tsv").lines() {
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let (key, dots) = line.split_once('\t').expect("braille table: key<TAB>dots");
            let cells: Vec<BrailleCell> = dots
                .split_whitespace()
                .map(|d| BrailleCell::from_dots(d).expect("braille table: bad dot list"))
                .collect();
            if key.starts_with('<') {
                indicators.insert(key.to_string(), cells[0]);
            } else {
                let mut k = key.chars();
                chars.insert(k.next().expect("braille table: empty key"), cells);
            }
        }
        chars.insert(' ', vec![indicators["<space>"]]);
        Table {
            chars,
            number: indicators["<number>"],
            grade1: indicators["<grade1>"],
            unknown: indicators["<unknown>"],
        }
    })
}

/// Translate text to cells.
pub fn translate(text: &str) -> Vec<BrailleCell> {
    let t = table();
    let chars: Vec<char> = text.to_lowercase().chars().collect();
    let mut out = Vec::new();
    let mut numeric = false;
    for (i, &c) in chars.iter().enumerate() {
        if c.is_ascii_digit() {
            if !numeric {
                out.push(t.number);
                numeric = true;
            }
        } else if numeric && (c == '.' || c == ',') && chars.get(i + 1).is_some_and(|n| n.is_ascii_digit()) {
            // decimal point or thousands separator stays in numeric mode
        } else if numeric && ('a'..='j').contains(&c) {
            out.push(t.grade1);
            numeric = false;
        } else {
            numeric = false;
        }
        match t.chars.get(&c) {
            Some(cells) => out.extend_from_slice(cells),
            None => out.push(t.unknown),
        }
    }
    out
}

pub fn to_unicode(text: &str) -> String {
    translate(text).into_iter().map(BrailleCell::to_char).collect()
}

/// Wrap text into lines of at most [`LINE_CELLS`] cells, breaking at spaces
/// where possible and splitting words that do not fit on a line of their own.
pub fn paginate(text: &str) -> Vec<BrailleLine> {
    let mut lines: Vec<BrailleLine> = Vec::new();
    let mut cur = BrailleLine {
        cells: Vec::new(),
        text: String::new(),
    };
    let flush = |cur: &mut BrailleLine, lines: &mut Vec<BrailleLine>| {
        if !cur.cells.is_empty() {
            lines.push(std::mem::replace(
                cur,
                BrailleLine {
                    cells: Vec::new(),
                    text: String::new(),
                },
            ));
        }
    };
    for word in text.split_whitespace() {
        let cells = translate(word);
        let needed = cells.len() + usize::from(!cur.cells.is_empty());
        if cur.cells.len() + needed <= LINE_CELLS {
            if !cur.cells.is_empty() {
                cur.cells.push(BrailleCell::BLANK);
                cur.text.push(' ');
            }
            cur.cells.extend(cells);
            cur.text.push_str(word);
            continue;
        }
        flush(&mut cur, &mut lines);
        if cells.len() <= LINE_CELLS {
            cur.cells = cells;
            cur.text = word.to_string();
            continue;
        }
        // Hard split. The source text is attributed to the first piece.
        let mut pieces = cells.chunks(LINE_CELLS).peekable();
        let mut first = true;
        while let Some(piece) = pieces.next() {
            let line = BrailleLine {
                cells: piece.to_vec(),
                text: if first { word.to_string() } else { String::new() },
            };
            first = false;
            if pieces.peek().is_some() {
                lines.push(line);
            } else {
                cur = line;
            }
        }
    }
    flush(&mut cur, &mut lines);
    lines
}
