//! Plain-text level schemes.
//!
//! ```text
//! # comment
//! gamma = 4.575        # natural linewidth, MHz
//! doppler = 222.3      # Doppler width, MHz
//! level 0       0.125   F'=4
//! level 1167.68 -0.2917 F'=3
//! ```
//!
//! `level <offset MHz> <signed coupling> [label]`; one line per level.

use super::raman::{RamanLevel, RamanLevelScheme};
use super::AtomicError;

pub fn parse_scheme(text: &str) -> Result<RamanLevelScheme, AtomicError> {
    let mut gamma = None;
    let mut doppler = None;
    let mut levels = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let err = |message: String| AtomicError::SchemeParse {
            line: line_no,
            message,
        };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let number = |s: &str| -> Result<f64, AtomicError> {
            s.trim()
                .parse::<f64>()
                .map_err(|_| err(format!("expected a number, found {s:?}")))
        };
        let mut fields = line.split_whitespace();
        let directive = fields.next();
        if directive != Some("level") {
            if let Some((key, value)) = line.split_once('=') {
                match key.trim() {
                    "gamma" => gamma = Some(number(value)?),
                    "doppler" => doppler = Some(number(value)?),
                    other => return Err(err(format!("unknown key {other:?}"))),
                }
                continue;
            }
        }
        match directive {
            Some("level") => {
                let offset = number(fields.next().ok_or_else(|| err("missing offset".into()))?)?;
                let coupling = number(fields.next().ok_or_else(|| err("missing coupling".into()))?)?;
                let label: Vec<&str> = fields.collect();
                levels.push(RamanLevel {
                    offset_mhz: offset,
                    coupling,
                    label: (!label.is_empty()).then(|| label.join(" ")),
                });
            }
            Some(other) => return Err(err(format!("unknown directive {other:?}"))),
            None => {}
        }
    }
    let missing = |what: &str| AtomicError::SchemeParse {
        line: 0,
        message: format!("missing {what}"),
    };
    let scheme = RamanLevelScheme {
        levels,
        gamma: gamma.ok_or_else(|| missing("gamma"))?,
        gamma_doppler: doppler.ok_or_else(|| missing("doppler"))?,
    };
    scheme.validate()?;
    Ok(scheme)
}

pub fn format_scheme(scheme: &RamanLevelScheme) -> String {
    let mut out = format!("gamma = {}\ndoppler = {}\n", scheme.gamma, scheme.gamma_doppler);
    for l in &scheme.levels {
        out.push_str(&format!("level {} {}", l.offset_mhz, l.coupling));
        if let Some(label) = &l.label {
            out.push(' ');
            out.push_str(label);
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let text = "# toy\ngamma = 0.5\ndoppler = 2\nlevel 0 1 first\nlevel 1 -2\n";
        let s = parse_scheme(text).unwrap();
        assert_eq!(s.levels.len(), 2);
        assert_eq!(s.levels[0].label.as_deref(), Some("first"));
        assert_eq!(parse_scheme(&format_scheme(&s)).unwrap(), s);
    }

    #[test]
    fn labels_may_contain_equals_signs() {
        let s = parse_scheme("gamma = 1\ndoppler = 2\nlevel 0 1 F'=4\nlevel 5 -1 F'=3 # upper\n").unwrap();
        assert_eq!(s.levels[0].label.as_deref(), Some("F'=4"));
        assert_eq!(s.levels[1].label.as_deref(), Some("F'=3"));
    }

    #[test]
    fn errors_carry_line_numbers() {
        match parse_scheme("gamma = 1\ndoppler = x\n") {
            Err(AtomicError::SchemeParse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(parse_scheme("gamma = 1\nlevel 0 1\n").is_err());
        assert!(parse_scheme("gamma = 1\ndoppler = 1\n").is_err());
    }
}
