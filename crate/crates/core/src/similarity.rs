//! Perceptual differences between fuzzy colors and between descriptors.
//!
//! Each fuzzy color is represented by its membership centroid embedded in
//! the HSI cylinder as `(s·cos h, s·sin h, i)`. Color distance is the
//! Euclidean distance there divided by the cylinder diameter `√5`.

use std::fmt::Write as _;

use crate::color_space::{ColorId, FuzzyColor, HsiPixel, Partition};
use crate::descriptor::ColorDescriptor;
use crate::error::{Error, Result};

fn embed(p: HsiPixel) -> [f64; 3] {
    let h = p.h.to_radians();
    [p.s * h.cos(), p.s * h.sin(), p.i]
}

/// Distance in `[0, 1]` between two fuzzy colors.
pub fn color_distance(a: &FuzzyColor, b: &FuzzyColor) -> f64 {
    let (x, y) = (embed(a.centroid()), embed(b.centroid()));
    let sq: f64 = x.iter().zip(&y).map(|(p, q)| (p - q) * (p - q)).sum();
    (sq.sqrt() / 5f64.sqrt()).clamp(0.0, 1.0)
}

/// Precomputed pairwise [`color_distance`] for a partition.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorDistanceTable {
    n: usize,
    d: Vec<f64>,
}

impl ColorDistanceTable {
    pub fn new(partition: &Partition) -> Self {
        let colors = partition.colors();
        let n = colors.len();
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v = color_distance(&colors[i], &colors[j]);
                d[i * n + j] = v;
                d[j * n + i] = v;
            }
        }
        Self { n, d }
    }

    /// Table from an explicit row-major matrix; must be symmetric with a
    /// zero diagonal and entries in `[0, 1]`.
    pub fn from_matrix(n: usize, d: Vec<f64>) -> Result<Self> {
        if d.len() != n * n {
            return Err(Error::invalid("distance table", format!("expected {} entries, got {}", n * n, d.len())));
        }
        for i in 0..n {
            if d[i * n + i] != 0.0 {
                return Err(Error::invalid("distance table", format!("d({i},{i}) is not zero")));
            }
            for j in 0..n {
                let v = d[i * n + j];
                if !(0.0..=1.0).contains(&v) || v != d[j * n + i] {
                    return Err(Error::invalid("distance table", format!("bad entry d({i},{j}) = {v}")));
                }
            }
        }
        Ok(Self { n, d })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Panics if either id is outside the table.
    pub fn get(&self, a: ColorId, b: ColorId) -> f64 {
        let (a, b) = (a as usize, b as usize);
        assert!(a < self.n && b < self.n, "color id outside distance table");
        self.d[a * self.n + b]
    }

    /// Check that a descriptor only uses ids this table knows.
    pub fn check(&self, desc: &ColorDescriptor) -> Result<()> {
        match desc.ids().find(|&id| id as usize >= self.n) {
            Some(id) => Err(Error::UnknownColor(id)),
            None => Ok(()),
        }
    }

    /// Comma-separated dump with a header row of ids.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("id");
        for j in 0..self.n {
            let _ = write!(out, ",{j}");
        }
        out.push('\n');
        for i in 0..self.n {
            let _ = write!(out, "{i}");
            for j in 0..self.n {
                let _ = write!(out, ",{:.6}", self.d[i * self.n + j]);
            }
            out.push('\n');
        }
        out
    }
}

/// Weighted nearest-neighbor distance from each entry of `from` to `to`.
fn directed(from: &ColorDescriptor, to: &ColorDescriptor, table: &ColorDistanceTable) -> f64 {
    from.entries()
        .iter()
        .map(|a| {
            let nearest = to
                .ids()
                .map(|b| table.get(a.id, b))
                .fold(f64::INFINITY, f64::min);
            a.w * nearest
        })
        .sum()
}

/// Symmetric difference `Dp` between two descriptors, in `[0, 1]`:
/// the mean of both directed weighted nearest-neighbor distances.
pub fn descriptor_difference(p: &ColorDescriptor, q: &ColorDescriptor, table: &ColorDistanceTable) -> f64 {
    (0.5 * directed(p, q, table) + 0.5 * directed(q, p, table)).clamp(0.0, 1.0)
}

pub fn palette_similarity(p: &ColorDescriptor, q: &ColorDescriptor, table: &ColorDistanceTable) -> f64 {
    1.0 - descriptor_difference(p, q, table)
}

/// Mean `Dp` between `ch` and every member of a group (`Dp_avg`).
pub fn group_mean_difference<'a>(
    ch: &ColorDescriptor,
    members: impl IntoIterator<Item = &'a ColorDescriptor>,
    table: &ColorDistanceTable,
) -> Result<f64> {
    let (sum, count) = members
        .into_iter()
        .fold((0.0, 0usize), |(s, n), m| (s + descriptor_difference(ch, m, table), n + 1));
    if count == 0 {
        return Err(Error::Empty("group members"));
    }
    Ok(sum / count as f64)
}
