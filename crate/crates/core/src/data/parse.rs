use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;

use super::{DataError, RawAnnotation};

fn integral(token: &str) -> Option<f64> {
    let v: f64 = token.parse().ok()?;
    (v.is_finite() && libm::trunc(v) == v).then_some(v)
}

/// Parses whitespace-separated `frame_id ped_id x y` lines. Blank lines and
/// lines starting with `#` are skipped. Ids may be written as integral
/// floats (`780.0`), as some public exports do.
pub fn parse_annotations(text: &str) -> Result<Vec<RawAnnotation>, DataError> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fail = |message| DataError::Parse { line, message };
        let tokens: Vec<&str> = trimmed.split_whitespace().collect();
        if tokens.len() != 4 {
            return Err(fail(format!("expected 4 fields, found {}", tokens.len())));
        }
        let frame =
            integral(tokens[0]).ok_or_else(|| fail(format!("bad frame id `{}`", tokens[0])))?;
        let ped = integral(tokens[1])
            .filter(|v| *v >= 0.0)
            .ok_or_else(|| fail(format!("bad pedestrian id `{}`", tokens[1])))?;
        let coord = |t: &str| {
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| fail(format!("bad coordinate `{t}`")))
        };
        let x = coord(tokens[2])?;
        let y = coord(tokens[3])?;
        let rec = RawAnnotation {
            frame_id: frame as i64,
            ped_id: ped as u64,
            x,
            y,
        };
        if !seen.insert((rec.frame_id, rec.ped_id)) {
            return Err(DataError::Duplicate {
                line,
                frame_id: rec.frame_id,
                ped_id: rec.ped_id,
            });
        }
        out.push(rec);
    }
    Ok(out)
}
