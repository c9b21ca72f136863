//! TDW text container for named arrays:
//!
//! ```text
//! TDW 1
//! <name> <rank> <extent>...
//! <values>
//! ...
//! ```

use std::fs;
use std::path::Path;

use crate::data::format_sig9;
use crate::diffcore::Tensor;
use crate::error::{Error, Result};

pub fn write_tdw<'a>(arrays: impl IntoIterator<Item = (&'a str, &'a Tensor)>) -> String {
    let mut out = String::from("TDW 1\n");
    for (name, t) in arrays {
        out.push_str(name);
        out.push(' ');
        out.push_str(&t.rank().to_string());
        for e in t.shape() {
            out.push(' ');
            out.push_str(&e.to_string());
        }
        out.push('\n');
        let values: Vec<String> = t.data().iter().map(|&v| format_sig9(v)).collect();
        out.push_str(&values.join(" "));
        out.push('\n');
    }
    out
}

pub fn save_tdw<'a>(
    path: impl AsRef<Path>,
    arrays: impl IntoIterator<Item = (&'a str, &'a Tensor)>,
) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, write_tdw(arrays)).map_err(|e| Error::io(path, e))
}

pub fn load_tdw(path: impl AsRef<Path>) -> Result<Vec<(String, Tensor)>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_tdw(&text, path)
}

pub fn parse_tdw(text: &str, origin: impl AsRef<Path>) -> Result<Vec<(String, Tensor)>> {
    let origin = origin.as_ref();
    let err = |line: usize, msg: String| Error::parse(origin, line, msg);
    let lines: Vec<&str> = text
        .split('\n')
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .collect();
    if lines.first().map(|l| l.split_whitespace().collect::<Vec<_>>()) != Some(vec!["TDW", "1"]) {
        return Err(err(1, "expected \"TDW 1\" header".into()));
    }

    let mut arrays = Vec::new();
    let mut i = 1;
    while i < lines.len() {
        if lines[i].trim().is_empty() {
            i += 1;
            continue;
        }
        let head_no = i + 1;
        let head: Vec<&str> = lines[i].split_whitespace().collect();
        if head.len() < 2 {
            return Err(err(head_no, "expected \"<name> <rank> <extents...>\"".into()));
        }
        let rank: usize = head[1]
            .parse()
            .map_err(|_| err(head_no, format!("rank {:?} is not an integer", head[1])))?;
        if head.len() != 2 + rank {
            return Err(err(head_no, format!("rank {rank} needs {rank} extents, found {}", head.len() - 2)));
        }
        let shape = head[2..]
            .iter()
            .map(|e| e.parse::<usize>().map_err(|_| err(head_no, format!("extent {e:?} is not an integer"))))
            .collect::<Result<Vec<_>>>()?;
        let values_no = i + 2;
        let values = lines
            .get(i + 1)
            .ok_or_else(|| err(head_no, format!("array {:?} has no value line", head[0])))?
            .split_whitespace()
            .map(|tok| tok.parse::<f64>().map_err(|_| err(values_no, format!("{tok:?} is not a number"))))
            .collect::<Result<Vec<_>>>()?;
        let expected: usize = shape.iter().product();
        if values.len() != expected {
            return Err(err(values_no, format!("expected {expected} values, found {}", values.len())));
        }
        arrays.push((head[0].to_string(), Tensor::new(shape, values)?));
        i += 2;
    }
    Ok(arrays)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_what_it_writes() {
        let a = Tensor::new([2, 2], vec![0.1, -2.5, 3.0, 1e-7]).unwrap();
        let s = Tensor::scalar(4.25);
        let text = write_tdw([("a", &a), ("s", &s)]);
        assert!(text.starts_with("TDW 1\na 2 2 2\n"));
        let back = parse_tdw(&text, "mem").unwrap();
        assert_eq!(back[0].0, "a");
        assert!(back[0].1.max_abs_diff(&a) < 1e-12);
        assert_eq!(back[1].1.shape(), &[] as &[usize]);
    }

    #[test]
    fn reports_count_mismatch_line() {
        let e = parse_tdw("TDW 1\nw 1 3\n1 2\n", "mem").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e}");
        let e = parse_tdw("TDW 2\n", "mem").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }));
    }
}
