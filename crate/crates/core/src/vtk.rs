//! Legacy ASCII VTK snapshots on structured points.
//!
//! Layout: nodal velocity as `POINT_DATA` vectors `v`, cell fields `h`, `A`
//! and `A_speed` (A·|v̄|) as `CELL_DATA` scalars. Floats are written with the
//! shortest representation that parses back to the same value.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::diagnostics::scaled_speed;
use crate::error::{Error, Result};
use crate::grid::{Mesh, ScalarField, State, VectorField};

/// Contents of a snapshot file.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub mesh: Mesh,
    pub v: VectorField,
    pub h: ScalarField,
    pub a: ScalarField,
    pub scaled_speed: ScalarField,
}

fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn snapshot_text(state: &State, mesh: &Mesh) -> Result<String> {
    state.check(mesh)?;
    let scaled = scaled_speed(state, mesh)?;
    let mut s = String::new();
    let w = &mut s;
    // writing into a String cannot fail
    let _ = writeln!(w, "# vtk DataFile Version 3.0");
    let _ = writeln!(w, "landfast snapshot t={}", fmt_f64(state.t));
    let _ = writeln!(w, "ASCII");
    let _ = writeln!(w, "DATASET STRUCTURED_POINTS");
    let _ = writeln!(w, "DIMENSIONS {} {} 1", mesh.nx + 1, mesh.ny + 1);
    let _ = writeln!(
        w,
        "ORIGIN {} {} 0",
        fmt_f64(mesh.origin[0]),
        fmt_f64(mesh.origin[1])
    );
    let _ = writeln!(w, "SPACING {} {} 1", fmt_f64(mesh.dx), fmt_f64(mesh.dy));
    let _ = writeln!(w, "POINT_DATA {}", mesh.node_count());
    let _ = writeln!(w, "VECTORS v double");
    for [u, v] in &state.v.data {
        let _ = writeln!(w, "{} {} 0", fmt_f64(*u), fmt_f64(*v));
    }
    let _ = writeln!(w, "CELL_DATA {}", mesh.cell_count());
    for (name, field) in [("h", &state.h), ("A", &state.a), ("A_speed", &scaled)] {
        let _ = writeln!(w, "SCALARS {name} double 1");
        let _ = writeln!(w, "LOOKUP_TABLE default");
        for x in &field.data {
            let _ = writeln!(w, "{}", fmt_f64(*x));
        }
    }
    Ok(s)
}

pub fn write_snapshot(state: &State, mesh: &Mesh, path: &Path) -> Result<()> {
    fs::write(path, snapshot_text(state, mesh)?)?;
    Ok(())
}

struct Cursor<'a> {
    lines: std::iter::Peekable<std::str::Lines<'a>>,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn fail<T>(&self, reason: impl Into<String>) -> Result<T> {
        Err(Error::Format {
            path: self.path.to_owned(),
            reason: reason.into(),
        })
    }

    fn line(&mut self) -> Result<&'a str> {
        match self.lines.next() {
            Some(l) => Ok(l.trim()),
            None => self.fail("unexpected end of file"),
        }
    }

    /// Next line, which must start with `keyword`; returns the remaining words.
    fn keyword(&mut self, keyword: &str) -> Result<Vec<&'a str>> {
        let line = self.line()?;
        let mut words = line.split_whitespace();
        if words.next() != Some(keyword) {
            return self.fail(format!("expected `{keyword}`, found `{line}`"));
        }
        Ok(words.collect())
    }

    fn numbers<T: std::str::FromStr>(&self, words: &[&str]) -> Result<Vec<T>> {
        words
            .iter()
            .map(|w| {
                w.parse::<T>()
                    .or_else(|_| self.fail(format!("bad number `{w}`")))
            })
            .collect()
    }

    fn scalars(&mut self, name: &str, count: usize) -> Result<Vec<f64>> {
        let head = self.keyword("SCALARS")?;
        if head.first() != Some(&name) {
            return self.fail(format!("expected scalars `{name}`"));
        }
        self.keyword("LOOKUP_TABLE")?;
        (0..count)
            .map(|_| {
                let l = self.line()?;
                Ok(self.numbers::<f64>(&[l])?[0])
            })
            .collect()
    }
}

pub fn parse_snapshot(text: &str, path: &Path) -> Result<Snapshot> {
    let mut c = Cursor {
        lines: text.lines().peekable(),
        path,
    };
    if !c.line()?.starts_with("# vtk DataFile") {
        return c.fail("missing VTK header");
    }
    let title = c.line()?;
    let t = match title.rsplit_once("t=") {
        Some((_, t)) => c.numbers::<f64>(&[t])?[0],
        None => return c.fail("title does not carry the time"),
    };
    if c.line()? != "ASCII" {
        return c.fail("only ASCII files are supported");
    }
    if c.keyword("DATASET")? != ["STRUCTURED_POINTS"] {
        return c.fail("expected STRUCTURED_POINTS");
    }
    let dims = c.keyword("DIMENSIONS")?;
    let dims: Vec<usize> = c.numbers(&dims)?;
    let origin = c.keyword("ORIGIN")?;
    let origin: Vec<f64> = c.numbers(&origin)?;
    let spacing = c.keyword("SPACING")?;
    let spacing: Vec<f64> = c.numbers(&spacing)?;
    if dims.len() != 3 || origin.len() != 3 || spacing.len() != 3 || dims[0] < 3 || dims[1] < 3 {
        return c.fail("malformed geometry");
    }
    let (nx, ny) = (dims[0] - 1, dims[1] - 1);
    let mut mesh = Mesh::new(nx, ny, [nx as f64 * spacing[0], ny as f64 * spacing[1]])?;
    mesh.dx = spacing[0];
    mesh.dy = spacing[1];
    mesh.origin = [origin[0], origin[1]];

    let points = c.keyword("POINT_DATA")?;
    if c.numbers::<usize>(&points)? != [mesh.node_count()] {
        return c.fail("POINT_DATA count does not match DIMENSIONS");
    }
    c.keyword("VECTORS")?;
    let mut v = VectorField::zeros(&mesh);
    for n in 0..mesh.node_count() {
        let l = c.line()?;
        let words: Vec<&str> = l.split_whitespace().collect();
        let xs: Vec<f64> = c.numbers(&words)?;
        if xs.len() != 3 {
            return c.fail(format!("bad vector line `{l}`"));
        }
        v.data[n] = [xs[0], xs[1]];
    }
    let cells = c.keyword("CELL_DATA")?;
    if c.numbers::<usize>(&cells)? != [mesh.cell_count()] {
        return c.fail("CELL_DATA count does not match DIMENSIONS");
    }
    let mut field = |name: &str| -> Result<ScalarField> {
        Ok(ScalarField {
            nx,
            ny,
            data: c.scalars(name, mesh.cell_count())?,
        })
    };
    let h = field("h")?;
    let a = field("A")?;
    let scaled_speed = field("A_speed")?;
    Ok(Snapshot {
        t,
        mesh,
        v,
        h,
        a,
        scaled_speed,
    })
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    parse_snapshot(&fs::read_to_string(path)?, path)
}
