//! Plain-text readers and writers.
//!
//! * edge list: header `# nodes=N`, then `u<TAB>v<TAB>weight` (0-based)
//! * partition: one label per line
//! * tree: `child<TAB>parent<TAB>weight`
//! * embedding: `id<TAB>x1<TAB>…<TAB>xd`
//! * spectrum: `λ<TAB>φ(0)<TAB>…<TAB>φ(n−1)`, one mode per line
//!
//! Blank lines and lines starting with `#` are skipped (apart from the
//! node-count header).

use std::io::{BufRead, Write};
use std::str::FromStr;

use super::{Partition, SparseGraph, Tree};
use crate::error::{Error, Result};
use crate::geometry::PoincarePoint;
use crate::scalar::Scalar;

fn parse<V: FromStr>(field: &str, line: usize, what: &str) -> Result<V> {
    field.trim().parse().map_err(|_| Error::Parse {
        line,
        msg: format!("invalid {what}: {field:?}"),
    })
}

fn parse_scalar<T: Scalar>(field: &str, line: usize) -> Result<T> {
    let v: f64 = parse(field, line, "number")?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            msg: format!("non-finite value {field:?}"),
        });
    }
    Ok(T::lit(v))
}

/// Non-comment lines as `(line number, fields)`.
fn records<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, String)>> {
    reader
        .lines()
        .enumerate()
        .filter_map(|(i, line)| match line {
            Err(e) => Some(Err(e.into())),
            Ok(l) => {
                let t = l.trim();
                (!t.is_empty() && !t.starts_with('#')).then(|| Ok((i + 1, t.to_string())))
            }
        })
}

fn fields(line: &str) -> Vec<&str> {
    line.split(['\t', ' ', ','].as_ref())
        .filter(|s| !s.is_empty())
        .collect()
}

/// Reads an edge list. Without a `# nodes=N` header the node count is one
/// more than the largest id. A missing weight column means weight 1.
pub fn read_edge_list<T: Scalar, R: BufRead>(reader: R) -> Result<SparseGraph<T>> {
    let mut declared = None;
    let mut edges = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if let Some(rest) = t.strip_prefix('#') {
            if let Some(v) = rest.trim().strip_prefix("nodes=") {
                declared = Some(parse::<usize>(v, i + 1, "node count")?);
            }
            continue;
        }
        if t.is_empty() {
            continue;
        }
        let f = fields(t);
        if f.len() < 2 || f.len() > 3 {
            return Err(Error::Parse {
                line: i + 1,
                msg: format!("expected `u v [weight]`, got {t:?}"),
            });
        }
        let u: usize = parse(f[0], i + 1, "node id")?;
        let v: usize = parse(f[1], i + 1, "node id")?;
        let w = match f.get(2) {
            Some(s) => parse_scalar(s, i + 1)?,
            None => T::one(),
        };
        edges.push((u, v, w));
    }
    let n = declared.unwrap_or_else(|| edges.iter().map(|e| e.0.max(e.1) + 1).max().unwrap_or(0));
    SparseGraph::new(n, edges)
}

pub fn write_edge_list<T: Scalar, W: Write>(g: &SparseGraph<T>, mut out: W) -> Result<()> {
    writeln!(out, "# nodes={}", g.n())?;
    for &(u, v, w) in g.edges() {
        writeln!(out, "{u}\t{v}\t{w}")?;
    }
    Ok(())
}

/// Reads labels; arbitrary integer labels are renumbered by first appearance.
pub fn read_partition<R: BufRead>(reader: R) -> Result<Partition> {
    let mut raw = Vec::new();
    for rec in records(reader) {
        let (line, text) = rec?;
        raw.push(parse::<i64>(&text, line, "label")?);
    }
    Ok(Partition::from_raw(&raw))
}

pub fn write_partition<W: Write>(p: &Partition, mut out: W) -> Result<()> {
    for l in p.labels() {
        writeln!(out, "{l}")?;
    }
    Ok(())
}

/// Reads `child parent weight` links; the node count is one more than the
/// largest id.
pub fn read_tree<T: Scalar, R: BufRead>(reader: R) -> Result<Tree<T>> {
    let mut links = Vec::new();
    for rec in records(reader) {
        let (line, text) = rec?;
        let f = fields(&text);
        if f.len() < 2 || f.len() > 3 {
            return Err(Error::Parse {
                line,
                msg: format!("expected `child parent [weight]`, got {text:?}"),
            });
        }
        let c: usize = parse(f[0], line, "node id")?;
        let p: usize = parse(f[1], line, "node id")?;
        let w = match f.get(2) {
            Some(s) => parse_scalar(s, line)?,
            None => T::one(),
        };
        links.push((c, p, w));
    }
    let n = links.iter().map(|l| l.0.max(l.1) + 1).max().unwrap_or(1);
    Tree::from_links(n, &links)
}

pub fn write_tree<T: Scalar, W: Write>(t: &Tree<T>, mut out: W) -> Result<()> {
    for &v in &t.bfs_order()[1..] {
        writeln!(out, "{v}\t{}\t{}", t.parent(v).unwrap(), t.parent_weight(v))?;
    }
    Ok(())
}

/// Reads points keyed by id; ids must cover `0..n` exactly once. Points
/// outside the open unit ball are reported together by id.
pub fn read_embedding<T: Scalar, R: BufRead>(reader: R) -> Result<Vec<PoincarePoint<T>>> {
    let mut rows: Vec<(usize, usize, Vec<T>)> = Vec::new();
    for rec in records(reader) {
        let (line, text) = rec?;
        let f = fields(&text);
        if f.len() < 3 {
            return Err(Error::Parse {
                line,
                msg: "expected `id x1 x2 …` with at least two coordinates".into(),
            });
        }
        let id: usize = parse(f[0], line, "node id")?;
        let coords = f[1..]
            .iter()
            .map(|s| parse_scalar(s, line))
            .collect::<Result<Vec<T>>>()?;
        rows.push((id, line, coords));
    }
    let n = rows.len();
    let mut slots: Vec<Option<PoincarePoint<T>>> = vec![None; n];
    let mut outside = Vec::new();
    for (id, line, coords) in rows {
        if id >= n {
            return Err(Error::Parse {
                line,
                msg: format!("id {id} out of range for {n} points"),
            });
        }
        if slots[id].is_some() {
            return Err(Error::Parse {
                line,
                msg: format!("duplicate id {id}"),
            });
        }
        match PoincarePoint::new(coords) {
            Ok(p) => slots[id] = Some(p),
            Err(Error::OutsideBall { .. }) => outside.push(id),
            Err(e) => {
                return Err(Error::Parse {
                    line,
                    msg: e.to_string(),
                })
            }
        }
    }
    if !outside.is_empty() {
        outside.sort_unstable();
        return Err(Error::InvalidParameter(format!(
            "points on or outside the unit ball: ids {outside:?}"
        )));
    }
    Ok(slots.into_iter().map(|p| p.unwrap()).collect())
}

pub fn write_embedding<T: Scalar, W: Write>(points: &[PoincarePoint<T>], mut out: W) -> Result<()> {
    for (i, p) in points.iter().enumerate() {
        write!(out, "{i}")?;
        for c in p.coords() {
            write!(out, "\t{c}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Writes eigenpairs; `vectors[k]` is the eigenvector of `values[k]`.
pub fn write_spectrum<T: Scalar, W: Write>(
    values: &[T],
    vectors: &[Vec<T>],
    mut out: W,
) -> Result<()> {
    for (lambda, phi) in values.iter().zip(vectors) {
        write!(out, "{lambda}")?;
        for c in phi {
            write!(out, "\t{c}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Reads eigenpairs written by [`write_spectrum`].
pub fn read_spectrum<T: Scalar, R: BufRead>(reader: R) -> Result<(Vec<T>, Vec<Vec<T>>)> {
    let mut values = Vec::new();
    let mut vectors = Vec::new();
    for rec in records(reader) {
        let (line, text) = rec?;
        let nums = fields(&text)
            .iter()
            .map(|s| parse_scalar(s, line))
            .collect::<Result<Vec<T>>>()?;
        values.push(nums[0]);
        vectors.push(nums[1..].to_vec());
    }
    Ok((values, vectors))
}
