//! MSQ text format:
//!
//! ```text
//! MSQ 1
//! <T> <J> <fps>
//! x0 y0 z0 x1 y1 z1 ...     (T lines, 3·J values each)
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::MotionSequence;
use crate::diffcore::Tensor;
use crate::error::{Error, Result};

const MAGIC: &str = "MSQ";
const VERSION: &str = "1";

/// Formats `v` with 9 significant digits, printing exact integers without
/// a fractional part.
pub(crate) fn format_sig9(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if v.fract() == 0.0 && v.abs() < 1e15 {
        return format!("{}", v as i64);
    }
    let exp = v.abs().log10().floor() as i32;
    if (-5..15).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        let s = format!("{:.*}", decimals, v);
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{:.8e}", v)
    }
}

fn format_fps(fps: f64) -> String {
    if fps.fract() == 0.0 {
        format!("{:.1}", fps)
    } else {
        format!("{}", fps)
    }
}

pub fn write_msq(seq: &MotionSequence) -> String {
    let (t, j) = (seq.num_frames(), seq.num_joints());
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC} {VERSION}");
    let _ = writeln!(out, "{} {} {}", t, j, format_fps(seq.fps()));
    for frame in seq.frames().data().chunks(3 * j) {
        let line: Vec<String> = frame.iter().map(|&v| format_sig9(v)).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn save_msq(seq: &MotionSequence, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, write_msq(seq)).map_err(|e| Error::io(path, e))
}

pub fn load_msq(path: impl AsRef<Path>) -> Result<MotionSequence> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_msq(&text, path)
}

/// Parses MSQ text; `origin` is only used in error messages.
pub fn parse_msq(text: &str, origin: impl AsRef<Path>) -> Result<MotionSequence> {
    let origin = origin.as_ref();
    let mut lines: Vec<&str> = text
        .split('\n')
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .collect();
    while lines.last().is_some_and(|l| l.trim().is_empty()) {
        lines.pop();
    }
    let err = |line: usize, msg: String| Error::parse(origin, line, msg);

    let magic: Vec<&str> = lines.first().map(|l| l.split_whitespace().collect()).unwrap_or_default();
    if magic != [MAGIC, VERSION] {
        return Err(err(1, format!("expected \"{MAGIC} {VERSION}\" header")));
    }
    let header: Vec<&str> = lines
        .get(1)
        .ok_or_else(|| err(1, "missing dimension line".into()))?
        .split_whitespace()
        .collect();
    if header.len() != 3 {
        return Err(err(2, format!("expected \"<T> <J> <fps>\", found {} fields", header.len())));
    }
    let t: usize = header[0]
        .parse()
        .map_err(|_| err(2, format!("frame count {:?} is not an integer", header[0])))?;
    let j: usize = header[1]
        .parse()
        .map_err(|_| err(2, format!("joint count {:?} is not an integer", header[1])))?;
    let fps: f64 = header[2]
        .parse()
        .map_err(|_| err(2, format!("fps {:?} is not a number", header[2])))?;
    if t == 0 || j == 0 {
        return Err(err(2, "T and J must be at least 1".into()));
    }
    if !(fps > 0.0 && fps.is_finite()) {
        return Err(err(2, format!("fps must be positive, got {fps}")));
    }

    let body = &lines[2..];
    if body.len() < t {
        return Err(err(
            lines.len(),
            format!("header declares {t} frames but only {} follow", body.len()),
        ));
    }
    if body.len() > t {
        return Err(err(
            t + 3,
            format!("header declares {t} frames but {} follow", body.len()),
        ));
    }

    let mut data = Vec::with_capacity(t * j * 3);
    for (k, line) in body.iter().enumerate() {
        let lineno = k + 3;
        let before = data.len();
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| err(lineno, format!("{tok:?} is not a number")))?;
            if !v.is_finite() {
                return Err(err(lineno, format!("{tok:?} is not finite")));
            }
            data.push(v);
        }
        let n = data.len() - before;
        if n != 3 * j {
            return Err(err(lineno, format!("expected {} values, found {n}", 3 * j)));
        }
    }
    MotionSequence::new(Tensor::new([t, j, 3], data)?, fps)
}
