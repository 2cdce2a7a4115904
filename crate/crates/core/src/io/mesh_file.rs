//! ASCII mesh format.
//!
//! ```text
//! porofem-mesh v1 <dim>
//! <nv>
//! x y [z]                      (nv lines)
//! <nc>
//! i j k [l]                    (nc lines, zero-based)
//! <nb>                         (optional)
//! <facet vertex indices> tag   (nb lines)
//! ```
//!
//! Blank lines and lines starting with `#` are ignored.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mesh::Mesh;

const MAGIC: &str = "porofem-mesh";

pub fn write_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, mesh_to_string(mesh)).map_err(|e| Error::io(path, e))
}

pub fn read_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_mesh(&text)
}

pub fn mesh_to_string(mesh: &Mesh) -> String {
    let d = mesh.dim();
    let mut s = String::new();
    let _ = writeln!(s, "{MAGIC} v1 {d}");
    let _ = writeln!(s, "{}", mesh.num_vertices());
    for v in 0..mesh.num_vertices() {
        let line: Vec<String> = mesh.vertex(v).iter().map(|x| format!("{x:.16e}")).collect();
        let _ = writeln!(s, "{}", line.join(" "));
    }
    let _ = writeln!(s, "{}", mesh.num_cells());
    for cell in mesh.cells() {
        let line: Vec<String> = cell.iter().map(|i| i.to_string()).collect();
        let _ = writeln!(s, "{}", line.join(" "));
    }
    let markers = mesh.boundary_markers();
    if !markers.is_empty() {
        let _ = writeln!(s, "{}", markers.len());
        for (&f, &tag) in markers {
            let verts: Vec<String> = mesh
                .facet(f)
                .vertices
                .iter()
                .map(|i| i.to_string())
                .collect();
            let _ = writeln!(s, "{} {tag}", verts.join(" "));
        }
    }
    s
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next_tokens(&mut self) -> Option<(usize, Vec<&'a str>)> {
        for (i, line) in self.inner.by_ref() {
            self.last = i + 1;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            return Some((i + 1, t.split_whitespace().collect()));
        }
        None
    }

    fn expect(&mut self, what: &str) -> Result<(usize, Vec<&'a str>)> {
        self.next_tokens().ok_or_else(|| Error::Parse {
            line: self.last + 1,
            msg: format!("unexpected end of file, expected {what}"),
        })
    }

    fn count(&mut self, what: &str) -> Result<usize> {
        let (line, toks) = self.expect(what)?;
        if toks.len() != 1 {
            return Err(Error::Parse {
                line,
                msg: format!("expected a single {what}"),
            });
        }
        parse_tok(toks[0], line)
    }
}

fn parse_tok<T: std::str::FromStr>(tok: &str, line: usize) -> Result<T> {
    tok.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("cannot parse `{tok}`"),
    })
}

pub fn parse_mesh(text: &str) -> Result<Mesh> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        last: 0,
    };
    let (line, header) = lines.expect("header")?;
    if header.len() != 3 || header[0] != MAGIC || header[1] != "v1" {
        return Err(Error::Parse {
            line,
            msg: format!("expected `{MAGIC} v1 <dim>`"),
        });
    }
    let dim: usize = parse_tok(header[2], line)?;
    if dim != 2 && dim != 3 {
        return Err(Error::Parse {
            line,
            msg: format!("unsupported dimension {dim}"),
        });
    }

    let nv = lines.count("vertex count")?;
    let mut coords = Vec::with_capacity(nv * dim);
    for _ in 0..nv {
        let (line, toks) = lines.expect("vertex line")?;
        if toks.len() != dim {
            return Err(Error::Parse {
                line,
                msg: format!("expected {dim} coordinates, found {}", toks.len()),
            });
        }
        for t in toks {
            coords.push(parse_tok::<f64>(t, line)?);
        }
    }

    let nc = lines.count("cell count")?;
    let mut cells = Vec::with_capacity(nc * (dim + 1));
    for _ in 0..nc {
        let (line, toks) = lines.expect("cell line")?;
        if toks.len() != dim + 1 {
            return Err(Error::Parse {
                line,
                msg: format!("expected {} vertex indices, found {}", dim + 1, toks.len()),
            });
        }
        for t in toks {
            let v: usize = parse_tok(t, line)?;
            if v >= nv {
                return Err(Error::Parse {
                    line,
                    msg: format!("vertex index {v} out of range ({nv} vertices)"),
                });
            }
            cells.push(v);
        }
    }

    let mut mesh = Mesh::new(dim, coords, cells).map_err(|e| Error::Parse {
        line: lines.last,
        msg: e.to_string(),
    })?;

    let Some((line, toks)) = lines.next_tokens() else {
        return Ok(mesh);
    };
    if toks.len() != 1 {
        return Err(Error::Parse {
            line,
            msg: "expected boundary marker count".into(),
        });
    }
    let nb: usize = parse_tok(toks[0], line)?;
    let index: HashMap<Vec<usize>, usize> = mesh
        .facets()
        .iter()
        .enumerate()
        .map(|(i, f)| (f.vertices.clone(), i))
        .collect();
    for _ in 0..nb {
        let (line, toks) = lines.expect("boundary marker line")?;
        if toks.len() != dim + 1 {
            return Err(Error::Parse {
                line,
                msg: format!("expected {dim} facet vertices and a tag"),
            });
        }
        let mut verts = Vec::with_capacity(dim);
        for t in &toks[..dim] {
            verts.push(parse_tok::<usize>(t, line)?);
        }
        verts.sort_unstable();
        let tag: u32 = parse_tok(toks[dim], line)?;
        let f = *index.get(&verts).ok_or_else(|| Error::Parse {
            line,
            msg: format!("no facet with vertices {verts:?}"),
        })?;
        mesh.set_marker(f, tag).map_err(|e| Error::Parse {
            line,
            msg: e.to_string(),
        })?;
    }
    if let Some((line, _)) = lines.next_tokens() {
        return Err(Error::Parse {
            line,
            msg: "trailing content after boundary markers".into(),
        });
    }
    Ok(mesh)
}
