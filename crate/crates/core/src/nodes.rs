//! Collocation node sets: Chebyshev-Lobatto points on an interval and
//! Halton interior points with a Cartesian perimeter on the unit square.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::{self, Write};
use thiserror::Error;

/// Interior nodes closer than this to the origin are rejected; the ray through
/// them is undefined.
pub const ORIGIN_EXCLUSION: f64 = 1e-8;

/// Minimum pairwise node distance; closer nodes make the collocation matrix singular.
pub const MIN_SEPARATION: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NodeError {
    #[error("at least 2 Chebyshev nodes are required, got {0}")]
    TooFewChebyshev(usize),
    #[error("interval [{0}, {1}] is empty or not finite")]
    Interval(f64, f64),
    #[error("{total} nodes cannot hold a perimeter of {boundary} plus one interior node")]
    TooFewSquare { total: usize, boundary: usize },
    #[error("dimension must be 1 or 2, got {0}")]
    Dimension(usize),
    #[error("coordinate buffer of length {len} does not match dimension {dim}")]
    Coordinates { len: usize, dim: usize },
    #[error("node {index} is not finite")]
    NonFinite { index: usize },
    #[error("nodes {i} and {j} are closer than {MIN_SEPARATION:e}")]
    Separation { i: usize, j: usize },
    #[error("interior node {0} lies within {ORIGIN_EXCLUSION:e} of the origin")]
    Origin(usize),
    #[error("node {index} is classified {kind} but the domain box says otherwise")]
    Classification { index: usize, kind: NodeKind },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Interior,
    Boundary,
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Interior => "interior",
            Self::Boundary => "boundary",
        })
    }
}

/// How a node set was generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeLayout {
    ChebyshevLobatto,
    HaltonCartesian,
    Custom,
}

/// Axis-aligned box `[lo_0, hi_0] × ... `.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl DomainBox {
    pub fn unit(dim: usize) -> Self {
        Self {
            lower: vec![0.0; dim],
            upper: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn on_boundary(&self, x: &[f64]) -> bool {
        self.contains(x)
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .any(|(v, (lo, hi))| v == lo || v == hi)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (lo, hi))| lo <= v && v <= hi)
    }

    pub fn strictly_inside(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (lo, hi))| lo < v && v < hi)
    }
}

/// Validated collocation nodes, stored as a flat row-major coordinate buffer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSet {
    dim: usize,
    coords: Vec<f64>,
    kinds: Vec<NodeKind>,
    domain: DomainBox,
    layout: NodeLayout,
    min_separation: f64,
}

impl NodeSet {
    /// Checks every invariant and records the minimum pairwise separation.
    pub fn new(
        dim: usize,
        coords: Vec<f64>,
        kinds: Vec<NodeKind>,
        domain: DomainBox,
        layout: NodeLayout,
    ) -> Result<Self, NodeError> {
        if !(1..=2).contains(&dim) || domain.dim() != dim {
            return Err(NodeError::Dimension(dim));
        }
        if coords.len() != dim * kinds.len() {
            return Err(NodeError::Coordinates {
                len: coords.len(),
                dim,
            });
        }
        let point = |i: usize| &coords[i * dim..(i + 1) * dim];
        for (i, &kind) in kinds.iter().enumerate() {
            let x = point(i);
            if x.iter().any(|v| !v.is_finite()) {
                return Err(NodeError::NonFinite { index: i });
            }
            let ok = match kind {
                NodeKind::Interior => domain.strictly_inside(x),
                NodeKind::Boundary => domain.on_boundary(x),
            };
            if !ok {
                return Err(NodeError::Classification { index: i, kind });
            }
            if kind == NodeKind::Interior && norm(x) < ORIGIN_EXCLUSION {
                return Err(NodeError::Origin(i));
            }
        }
        let mut min_separation = f64::INFINITY;
        for i in 0..kinds.len() {
            for j in 0..i {
                let d = dist(point(i), point(j));
                if d < MIN_SEPARATION {
                    return Err(NodeError::Separation { i: j, j: i });
                }
                min_separation = min_separation.min(d);
            }
        }
        Ok(Self {
            dim,
            coords,
            kinds,
            domain,
            layout,
            min_separation,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn kind(&self, i: usize) -> NodeKind {
        self.kinds[i]
    }

    pub fn kinds(&self) -> &[NodeKind] {
        &self.kinds
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        self.kinds[i] == NodeKind::Boundary
    }

    pub fn interior_count(&self) -> usize {
        self.kinds
            .iter()
            .filter(|&&k| k == NodeKind::Interior)
            .count()
    }

    pub fn boundary_count(&self) -> usize {
        self.len() - self.interior_count()
    }

    pub fn domain(&self) -> &DomainBox {
        &self.domain
    }

    pub fn layout(&self) -> NodeLayout {
        self.layout
    }

    /// Smallest pairwise distance, `inf` for fewer than two nodes.
    pub fn min_separation(&self) -> f64 {
        self.min_separation
    }

    /// CSV with header `index,x,y,kind`; `y` is empty in 1D.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "index,x,y,kind")?;
        for (i, p) in self.points().enumerate() {
            let y = p.get(1).map(|v| format!("{v:.16e}")).unwrap_or_default();
            writeln!(out, "{i},{:.16e},{y},{}", p[0], self.kinds[i])?;
        }
        Ok(())
    }
}

/// Chebyshev-Lobatto points `a + (b-a)(1 - cos(πj/(N-1)))/2`; the endpoints are boundary nodes.
pub fn chebyshev_nodes(n: usize, a: f64, b: f64) -> Result<NodeSet, NodeError> {
    if n < 2 {
        return Err(NodeError::TooFewChebyshev(n));
    }
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(NodeError::Interval(a, b));
    }
    let last = (n - 1) as f64;
    let coords: Vec<f64> = (0..n)
        .map(|j| match j {
            0 => a,
            _ if j == n - 1 => b,
            _ => a + (b - a) * (1.0 - (std::f64::consts::PI * j as f64 / last).cos()) / 2.0,
        })
        .collect();
    let kinds = (0..n)
        .map(|j| {
            if j == 0 || j == n - 1 {
                NodeKind::Boundary
            } else {
                NodeKind::Interior
            }
        })
        .collect();
    let domain = DomainBox {
        lower: vec![a],
        upper: vec![b],
    };
    NodeSet::new(1, coords, kinds, domain, NodeLayout::ChebyshevLobatto)
}

/// Van der Corput radical inverse of `index` in `base`.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut scale = inv;
    let mut value = 0.0;
    while index > 0 {
        value += (index % base) as f64 * scale;
        index /= base;
        scale *= inv;
    }
    value
}

/// First `count` points of the Halton sequence with bases (2, 3), starting at index 1.
pub fn halton_sequence(count: usize) -> Vec<[f64; 2]> {
    (1..=count as u64)
        .map(|i| [radical_inverse(i, 2), radical_inverse(i, 3)])
        .collect()
}

/// Perimeter size `4(s-1)` with `s = round(√N_p)`.
pub fn square_boundary_count(total: usize) -> usize {
    let s = (total as f64).sqrt().round() as usize;
    4 * s.saturating_sub(1)
}

/// Whether [`unit_square_nodes`] accepts `total`, without building anything.
pub fn check_square_count(total: usize) -> Result<(), NodeError> {
    let s = (total as f64).sqrt().round() as usize;
    let boundary = square_boundary_count(total);
    if s < 2 || total < boundary + 1 {
        return Err(NodeError::TooFewSquare { total, boundary });
    }
    Ok(())
}

/// `N_p` nodes on `[0,1]²`: an `s × s` Cartesian perimeter, `s = round(√N_p)`, listed
/// counter-clockwise from the origin, followed by Halton interior points.
pub fn unit_square_nodes(total: usize) -> Result<NodeSet, NodeError> {
    check_square_count(total)?;
    let s = (total as f64).sqrt().round() as usize;
    let boundary = square_boundary_count(total);
    let h = 1.0 / (s - 1) as f64;
    let tick = |k: usize| if k == s - 1 { 1.0 } else { k as f64 * h };
    let mut points: Vec<[f64; 2]> = Vec::with_capacity(total);
    for k in 0..s - 1 {
        points.push([tick(k), 0.0]);
    }
    for k in 0..s - 1 {
        points.push([1.0, tick(k)]);
    }
    for k in 0..s - 1 {
        points.push([1.0 - tick(k), 1.0]);
    }
    for k in 0..s - 1 {
        points.push([0.0, 1.0 - tick(k)]);
    }
    let mut kinds = vec![NodeKind::Boundary; boundary];

    let mut index = 1u64;
    while points.len() < total {
        let p = [radical_inverse(index, 2), radical_inverse(index, 3)];
        index += 1;
        let crowded =
            norm(&p) < ORIGIN_EXCLUSION || points.iter().any(|q| dist(&p, q) < MIN_SEPARATION);
        if !crowded {
            points.push(p);
            kinds.push(NodeKind::Interior);
        }
    }
    let coords = points.into_iter().flatten().collect();
    NodeSet::new(
        2,
        coords,
        kinds,
        DomainBox::unit(2),
        NodeLayout::HaltonCartesian,
    )
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}
