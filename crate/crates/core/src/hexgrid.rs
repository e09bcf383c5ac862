//! Hexagonal neuron lattice.
//!
//! Nodes are stored row-major (`index = row * width + col`) in the "odd-r"
//! offset layout with pointy-top hexagons: every odd row is shifted half a
//! cell to the right. Distances go through axial/cube coordinates, so they
//! are closed-form and O(1).

use crate::error::{Error, Result};

/// Axial coordinates `(q, r)`; the implied cube coordinate is `s = -q - r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Axial {
    pub q: i64,
    pub r: i64,
}

impl Axial {
    pub fn distance(self, other: Axial) -> u32 {
        let dq = self.q - other.q;
        let dr = self.r - other.r;
        let ds = -dq - dr;
        ((dq.abs() + dr.abs() + ds.abs()) / 2) as u32
    }
}

// (dcol, drow) neighbor offsets for even and odd rows in odd-r layout.
const EVEN_ROW: [(i64, i64); 6] = [(1, 0), (-1, 0), (-1, -1), (0, -1), (-1, 1), (0, 1)];
const ODD_ROW: [(i64, i64); 6] = [(1, 0), (-1, 0), (0, -1), (1, -1), (0, 1), (1, 1)];

/// Rectangular patch of a hexagonal lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HexGrid {
    width: usize,
    height: usize,
}

impl HexGrid {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::out_of_range(
                "grid size",
                format!("{width}x{height}"),
                "width >= 1 and height >= 1",
            ));
        }
        Ok(HexGrid { width, height })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Largest possible grid distance between two nodes of this grid.
    pub fn diameter(&self) -> u32 {
        (self.width + self.height) as u32
    }

    fn check(&self, idx: usize) -> Result<()> {
        if idx < self.len() {
            Ok(())
        } else {
            Err(Error::out_of_range(
                "neuron index",
                idx,
                format!("< {}", self.len()),
            ))
        }
    }

    /// `(row, col)` of a linear index.
    pub fn position(&self, idx: usize) -> Result<(usize, usize)> {
        self.check(idx)?;
        Ok((idx / self.width, idx % self.width))
    }

    pub fn index(&self, row: usize, col: usize) -> Result<usize> {
        if row >= self.height || col >= self.width {
            return Err(Error::out_of_range(
                "grid position",
                format!("({row}, {col})"),
                format!("row < {}, col < {}", self.height, self.width),
            ));
        }
        Ok(row * self.width + col)
    }

    pub fn axial(&self, idx: usize) -> Result<Axial> {
        let (row, col) = self.position(idx)?;
        Ok(offset_to_axial(row, col))
    }

    /// In-bounds neighbors of `idx`, ascending by linear index.
    pub fn neighbors(&self, idx: usize) -> Result<Vec<usize>> {
        let (row, col) = self.position(idx)?;
        let deltas = if row % 2 == 0 { &EVEN_ROW } else { &ODD_ROW };
        let mut out: Vec<usize> = deltas
            .iter()
            .filter_map(|&(dc, dr)| {
                let c = col as i64 + dc;
                let r = row as i64 + dr;
                (c >= 0 && r >= 0 && (c as usize) < self.width && (r as usize) < self.height)
                    .then(|| r as usize * self.width + c as usize)
            })
            .collect();
        out.sort_unstable();
        Ok(out)
    }

    /// Minimum number of neighbor hops between `a` and `b`.
    pub fn distance(&self, a: usize, b: usize) -> Result<u32> {
        Ok(self.axial(a)?.distance(self.axial(b)?))
    }

    /// Distances from `from` to every node, in linear-index order.
    pub fn distances_from(&self, from: usize) -> Result<Vec<u32>> {
        let origin = self.axial(from)?;
        Ok((0..self.len())
            .map(|i| origin.distance(offset_to_axial(i / self.width, i % self.width)))
            .collect())
    }
}

fn offset_to_axial(row: usize, col: usize) -> Axial {
    let (row, col) = (row as i64, col as i64);
    Axial {
        q: col - (row - (row & 1)) / 2,
        r: row,
    }
}
