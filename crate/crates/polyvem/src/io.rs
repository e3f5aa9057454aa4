//! Plain-text mesh, DoF and matrix files.
//!
//! Mesh files start with the header `polyvem-mesh 1`, followed by `vertex x y`
//! lines and then `cell i0 i1 ...` lines (counter-clockwise, zero-based).
//! `#` starts a comment. Coordinates are written with 17 significant digits
//! so that a write/read cycle is the identity.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use polyvem_core::sparse::CsrMatrix;
use polyvem_core::{Mesh, MeshError, Point};
use thiserror::Error;

pub const MESH_HEADER: &str = "polyvem-mesh 1";
pub const DOF_HEADER: &str = "polyvem-dofs 1";

#[derive(Debug, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    /// One-based line number.
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum FileError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("invalid mesh: {0}")]
    Mesh(#[from] MeshError),
}

fn parse_error(line: usize, message: impl Into<String>) -> FileError {
    ParseError { line, message: message.into() }.into()
}

/// Content lines with their one-based numbers; comments and blanks dropped.
fn content_lines(reader: impl BufRead) -> impl Iterator<Item = Result<(usize, String), FileError>> {
    reader.lines().enumerate().filter_map(|(i, line)| match line {
        Err(e) => Some(Err(e.into())),
        Ok(text) => {
            let body = text.split('#').next().unwrap_or("").trim().to_string();
            (!body.is_empty()).then_some(Ok((i + 1, body)))
        }
    })
}

fn expect_header(
    lines: &mut impl Iterator<Item = Result<(usize, String), FileError>>,
    header: &str,
) -> Result<(), FileError> {
    match lines.next().transpose()? {
        Some((_, text)) if text.split_whitespace().eq(header.split_whitespace()) => Ok(()),
        Some((line, text)) => Err(parse_error(line, format!("expected header `{header}`, found `{text}`"))),
        None => Err(parse_error(1, format!("empty file, expected header `{header}`"))),
    }
}

fn number<T: std::str::FromStr>(line: usize, token: Option<&str>, what: &str) -> Result<T, FileError> {
    let token = token.ok_or_else(|| parse_error(line, format!("missing {what}")))?;
    token.parse().map_err(|_| parse_error(line, format!("invalid {what} `{token}`")))
}

pub fn write_mesh(mesh: &Mesh, mut w: impl Write) -> io::Result<()> {
    writeln!(w, "{MESH_HEADER}")?;
    writeln!(w, "# {} vertices, {} cells", mesh.vertices().len(), mesh.num_cells())?;
    for v in mesh.vertices() {
        writeln!(w, "vertex {:.16e} {:.16e}", v.x, v.y)?;
    }
    for cell in mesh.cells() {
        let ids: Vec<String> = cell.iter().map(usize::to_string).collect();
        writeln!(w, "cell {}", ids.join(" "))?;
    }
    Ok(())
}

pub fn read_mesh(reader: impl BufRead) -> Result<Mesh, FileError> {
    let mut lines = content_lines(reader);
    expect_header(&mut lines, MESH_HEADER)?;
    let mut vertices = Vec::new();
    let mut cells = Vec::new();
    let mut last_line = 1;
    for item in lines {
        let (line, text) = item?;
        last_line = line;
        let mut tokens = text.split_whitespace();
        match tokens.next() {
            Some("vertex") => {
                if !cells.is_empty() {
                    return Err(parse_error(line, "vertex after the cell section"));
                }
                let x = number(line, tokens.next(), "x coordinate")?;
                let y = number(line, tokens.next(), "y coordinate")?;
                if let Some(extra) = tokens.next() {
                    return Err(parse_error(line, format!("unexpected token `{extra}`")));
                }
                vertices.push(Point::new(x, y));
            }
            Some("cell") => {
                let ids = tokens.map(|t| number(line, Some(t), "vertex index")).collect::<Result<Vec<usize>, _>>()?;
                if ids.len() < 3 {
                    return Err(parse_error(line, "a cell needs at least three vertices"));
                }
                if let Some(&bad) = ids.iter().find(|&&i| i >= vertices.len()) {
                    return Err(parse_error(line, format!("vertex index {bad} out of range")));
                }
                cells.push(ids);
            }
            Some(other) => return Err(parse_error(line, format!("unknown record `{other}`"))),
            None => unreachable!("content lines are non-empty"),
        }
    }
    if cells.is_empty() {
        return Err(parse_error(last_line, "no cells"));
    }
    Ok(Mesh::new(vertices, cells)?)
}

pub fn save_mesh(mesh: &Mesh, path: &Path) -> Result<(), FileError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_mesh(mesh, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_mesh(path: &Path) -> Result<Mesh, FileError> {
    read_mesh(BufReader::new(File::open(path)?))
}

/// One `face value` line per DoF.
pub fn write_dofs(dofs: &[f64], mut w: impl Write) -> io::Result<()> {
    writeln!(w, "{DOF_HEADER}")?;
    for (f, v) in dofs.iter().enumerate() {
        writeln!(w, "{f} {v:.16e}")?;
    }
    Ok(())
}

/// Reads a DoF file; faces must appear in order `0, 1, ...`.
pub fn read_dofs(reader: impl BufRead) -> Result<Vec<f64>, FileError> {
    let mut lines = content_lines(reader);
    expect_header(&mut lines, DOF_HEADER)?;
    let mut dofs = Vec::new();
    for item in lines {
        let (line, text) = item?;
        let mut tokens = text.split_whitespace();
        let face: usize = number(line, tokens.next(), "face index")?;
        if face != dofs.len() {
            return Err(parse_error(line, format!("expected face {}, found {face}", dofs.len())));
        }
        dofs.push(number(line, tokens.next(), "value")?);
    }
    Ok(dofs)
}

/// Coordinate format: `row col value`, zero-based, after a size comment.
pub fn write_matrix(a: &CsrMatrix, mut w: impl Write) -> io::Result<()> {
    writeln!(w, "# {} {} {}", a.nrows(), a.ncols(), a.nnz())?;
    for (r, c, v) in a.triplets() {
        writeln!(w, "{r} {c} {v:.16e}")?;
    }
    Ok(())
}

pub fn read_matrix(reader: impl BufRead) -> Result<CsrMatrix, FileError> {
    let mut size = None;
    let mut triplets = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let (line, text) = (i + 1, line?);
        let text = text.trim();
        if let Some(rest) = text.strip_prefix('#') {
            if size.is_none() {
                let mut t = rest.split_whitespace();
                let rows: usize = number(line, t.next(), "row count")?;
                let cols: usize = number(line, t.next(), "column count")?;
                size = Some((rows, cols));
            }
            continue;
        }
        if text.is_empty() {
            continue;
        }
        let (rows, cols) = size.ok_or_else(|| parse_error(line, "missing size comment"))?;
        let mut t = text.split_whitespace();
        let r: usize = number(line, t.next(), "row")?;
        let c: usize = number(line, t.next(), "column")?;
        let v: f64 = number(line, t.next(), "value")?;
        if r >= rows || c >= cols {
            return Err(parse_error(line, format!("entry ({r}, {c}) outside {rows} x {cols}")));
        }
        triplets.push((r, c, v));
    }
    let (rows, cols) = size.ok_or_else(|| parse_error(1, "missing size comment"))?;
    Ok(CsrMatrix::from_triplets(rows, cols, triplets))
}
