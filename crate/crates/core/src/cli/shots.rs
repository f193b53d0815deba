//! Shot files.
//!
//! Two formats, atom 0 first in every bitstring:
//! - `lines`: one bitstring per line.
//! - `counts`: `bitstring,count` per line, with an optional header.
//!
//! Blank lines and lines starting with `#` are ignored in both.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::distribution::{format_bitstring, parse_bitstring, ShotCounts};
use crate::error::{Error, Result};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShotFormat {
    Auto,
    Lines,
    Counts,
}

impl FromStr for ShotFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Self::Auto),
            "lines" => Ok(Self::Lines),
            "counts" => Ok(Self::Counts),
            _ => Err(Error::Config(format!("unknown shot format '{s}' (auto, lines, counts)"))),
        }
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn bitstring_at(line: usize, s: &str, n_atoms: usize) -> Result<u64> {
    let (bits, len) = parse_bitstring(s).ok_or_else(|| Error::Parse {
        line,
        msg: format!("'{s}' is not a bitstring of 0 and 1"),
    })?;
    if len != n_atoms {
        return Err(Error::Parse {
            line,
            msg: format!("bitstring has {len} atoms, expected {n_atoms}"),
        });
    }
    Ok(bits)
}

pub fn parse_shots(text: &str, format: ShotFormat, n_atoms: usize) -> Result<ShotCounts> {
    let format = match format {
        ShotFormat::Auto => match content_lines(text).next() {
            Some((_, l)) if l.contains(',') => ShotFormat::Counts,
            _ => ShotFormat::Lines,
        },
        f => f,
    };
    let mut counts = ShotCounts::new(n_atoms);
    for (idx, (line, l)) in content_lines(text).enumerate() {
        match format {
            ShotFormat::Counts => {
                let (bs, c) = l.split_once(',').ok_or_else(|| Error::Parse {
                    line,
                    msg: "expected 'bitstring,count'".into(),
                })?;
                let (bs, c) = (bs.trim(), c.trim());
                if idx == 0 && parse_bitstring(bs).is_none() && c.parse::<u64>().is_err() {
                    continue; // header
                }
                let bits = bitstring_at(line, bs, n_atoms)?;
                let c: u64 = c.parse().map_err(|_| Error::Parse {
                    line,
                    msg: format!("'{c}' is not a nonnegative integer count"),
                })?;
                counts.add(bits, c)?;
            }
            _ => counts.add(bitstring_at(line, l, n_atoms)?, 1)?,
        }
    }
    if counts.total() == 0 {
        return Err(Error::Parse { line: 0, msg: "shot file contains no shots".into() });
    }
    Ok(counts)
}

pub fn read_shots(path: &Path, format: ShotFormat, n_atoms: usize) -> Result<ShotCounts> {
    parse_shots(&std::fs::read_to_string(path)?, format, n_atoms)
}

/// Renders counts in the `counts` format with a header.
pub fn format_counts(counts: &ShotCounts) -> String {
    let mut out = String::from("bitstring,count\n");
    for (bits, c) in counts.iter() {
        let _ = writeln!(out, "{},{c}", format_bitstring(bits, counts.n_atoms()));
    }
    out
}
