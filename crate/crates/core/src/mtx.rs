//! Matrix Market reading (coordinate and array, real/integer/pattern, any
//! symmetry) and writing (dense array, column-major).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use faer::Mat;

use crate::error::{MorError, Result};
use crate::linalg::RMat;

#[derive(Clone, Copy, PartialEq)]
enum Symmetry {
    General,
    Symmetric,
    Skew,
}

fn parse_err(file: &Path, line: usize, reason: impl Into<String>) -> MorError {
    MorError::ParseError {
        file: file.display().to_string(),
        line,
        reason: reason.into(),
    }
}

pub fn read_mtx(path: &Path) -> Result<RMat> {
    let text = fs::read_to_string(path)?;
    parse_mtx(&text, path)
}

/// Parses Matrix Market text; `origin` is used only in error messages.
pub fn parse_mtx(text: &str, origin: &Path) -> Result<RMat> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| parse_err(origin, 1, "empty file"))?;
    let h: Vec<String> = header.split_whitespace().map(|s| s.to_ascii_lowercase()).collect();
    if h.len() < 5 || h[0] != "%%matrixmarket" || h[1] != "matrix" {
        return Err(parse_err(origin, 1, "missing %%MatrixMarket matrix header"));
    }
    let coordinate = match h[2].as_str() {
        "coordinate" => true,
        "array" => false,
        f => return Err(parse_err(origin, 1, format!("unsupported format '{f}'"))),
    };
    let pattern = match h[3].as_str() {
        "real" | "double" | "integer" => false,
        "pattern" if coordinate => true,
        f => return Err(parse_err(origin, 1, format!("unsupported field '{f}'"))),
    };
    let sym = match h[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::Skew,
        s => return Err(parse_err(origin, 1, format!("unsupported symmetry '{s}'"))),
    };
    let mut body = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (sl, size) = body.next().ok_or_else(|| parse_err(origin, 1, "missing size line"))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| parse_err(origin, sl, format!("bad size line: {e}")))?;
    let (nr, nc) = match (coordinate, dims.as_slice()) {
        (true, [r, c, _]) | (false, [r, c]) => (*r, *c),
        _ => return Err(parse_err(origin, sl, "wrong number of size fields")),
    };
    if sym != Symmetry::General && nr != nc {
        return Err(parse_err(origin, sl, "symmetric storage requires a square matrix"));
    }
    let mut m = Mat::<f64>::zeros(nr, nc);
    let num = |tok: Option<&str>, ln: usize| -> Result<f64> {
        let t = tok.ok_or_else(|| parse_err(origin, ln, "missing value"))?;
        let v: f64 = t.parse().map_err(|_| parse_err(origin, ln, format!("bad number '{t}'")))?;
        if !v.is_finite() {
            return Err(parse_err(origin, ln, "non-finite value"));
        }
        Ok(v)
    };
    if coordinate {
        let nnz = dims[2];
        let mut seen = 0;
        for (ln, l) in body {
            let mut it = l.split_whitespace();
            let idx = |t: Option<&str>, lim: usize| -> Result<usize> {
                let t = t.ok_or_else(|| parse_err(origin, ln, "missing index"))?;
                let i: usize = t.parse().map_err(|_| parse_err(origin, ln, format!("bad index '{t}'")))?;
                if i == 0 || i > lim {
                    return Err(parse_err(origin, ln, format!("index {i} out of range 1..={lim}")));
                }
                Ok(i - 1)
            };
            let i = idx(it.next(), nr)?;
            let j = idx(it.next(), nc)?;
            let v = if pattern { 1.0 } else { num(it.next(), ln)? };
            m[(i, j)] += v;
            if i != j {
                match sym {
                    Symmetry::General => {}
                    Symmetry::Symmetric => m[(j, i)] += v,
                    Symmetry::Skew => m[(j, i)] -= v,
                }
            }
            seen += 1;
        }
        if seen != nnz {
            return Err(parse_err(origin, sl, format!("expected {nnz} entries, found {seen}")));
        }
    } else {
        // Column-major; symmetric variants store the lower triangle only.
        let mut pos = Vec::new();
        for j in 0..nc {
            let start = match sym {
                Symmetry::General => 0,
                Symmetry::Symmetric => j,
                Symmetry::Skew => j + 1,
            };
            for i in start..nr {
                pos.push((i, j));
            }
        }
        let mut k = 0;
        for (ln, l) in body {
            for tok in l.split_whitespace() {
                if k >= pos.len() {
                    return Err(parse_err(origin, ln, "too many values"));
                }
                let v = num(Some(tok), ln)?;
                let (i, j) = pos[k];
                m[(i, j)] = v;
                match sym {
                    Symmetry::General => {}
                    Symmetry::Symmetric => m[(j, i)] = v,
                    Symmetry::Skew => m[(j, i)] = -v,
                }
                k += 1;
            }
        }
        if k != pos.len() {
            return Err(parse_err(origin, sl, format!("expected {} values, found {k}", pos.len())));
        }
    }
    Ok(m)
}

pub fn format_mtx(m: &RMat) -> String {
    let mut s = String::from("%%MatrixMarket matrix array real general\n");
    let _ = writeln!(s, "{} {}", m.nrows(), m.ncols());
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let _ = writeln!(s, "{:e}", m[(i, j)]);
        }
    }
    s
}

pub fn write_mtx(path: &Path, m: &RMat) -> Result<()> {
    fs::write(path, format_mtx(m))?;
    Ok(())
}
