//! Non-informative waypoint generators used as comparison strategies:
//! boustrophedon lawnmower sweeps and Monte-Carlo random batches.

use rand::{Rng, RngExt};
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::field::{Cell, GridField};

/// A rectangle in cell coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellRect {
    pub x0: usize,
    pub y0: usize,
    pub width: usize,
    pub height: usize,
}

impl CellRect {
    pub fn full(field: &GridField) -> Self {
        CellRect {
            x0: 0,
            y0: 0,
            width: field.width(),
            height: field.height(),
        }
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.x >= self.x0
            && cell.x < self.x0 + self.width
            && cell.y >= self.y0
            && cell.y < self.y0 + self.height
    }
}

/// Direction the sweep legs run along.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Legs run along y, spaced across the region width.
    Vertical,
    /// Legs run along x, spaced across the region height.
    Horizontal,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LawnmowerSpec {
    pub region: CellRect,
    /// Cells between adjacent sweep legs.
    pub spacing: usize,
    pub axis: SweepAxis,
}

/// Serpentine full-coverage sweep: `ceil(extent / spacing)` alternating
/// legs, centered so every region cell lies within `spacing / 2` of a leg;
/// only sampleable cells are emitted.
pub fn lawnmower_path(spec: &LawnmowerSpec, field: &GridField) -> Result<Vec<Cell>> {
    let r = &spec.region;
    if spec.spacing == 0 {
        return Err(CoreError::InvalidInput("lawnmower spacing must be >= 1".into()));
    }
    if r.width == 0 || r.height == 0 {
        return Err(CoreError::InvalidInput("lawnmower region is empty".into()));
    }
    if r.x0 + r.width > field.width() || r.y0 + r.height > field.height() {
        return Err(CoreError::InvalidInput(format!(
            "lawnmower region exceeds the {}x{} grid",
            field.width(),
            field.height()
        )));
    }

    let (across_extent, along_extent) = match spec.axis {
        SweepAxis::Vertical => (r.width, r.height),
        SweepAxis::Horizontal => (r.height, r.width),
    };
    let legs = across_extent.div_ceil(spec.spacing);
    // Center the leg comb: worst-case distance to a leg stays <= spacing/2.
    let residual = (across_extent - 1) - (legs - 1) * spec.spacing;
    let offset = residual / 2;

    let mut path = Vec::new();
    for leg in 0..legs {
        let across = offset + leg * spec.spacing;
        let along_iter: Box<dyn Iterator<Item = usize>> = if leg % 2 == 0 {
            Box::new(0..along_extent)
        } else {
            Box::new((0..along_extent).rev())
        };
        for along in along_iter {
            let cell = match spec.axis {
                SweepAxis::Vertical => Cell::new(r.x0 + across, r.y0 + along),
                SweepAxis::Horizontal => Cell::new(r.x0 + along, r.y0 + across),
            };
            if field.is_sampleable(cell) {
                path.push(cell);
            }
        }
    }
    if path.is_empty() {
        return Err(CoreError::InvalidInput("lawnmower region is fully masked".into()));
    }
    Ok(path)
}

/// `count` distinct sampleable cells drawn uniformly from the region
/// (whole grid when `None`); deterministic for a given RNG state.
pub fn random_waypoints(
    field: &GridField,
    region: Option<&CellRect>,
    count: usize,
    rng: &mut impl Rng,
) -> Result<Vec<Cell>> {
    if count == 0 {
        return Err(CoreError::InvalidInput("need count >= 1 random waypoints".into()));
    }
    let mut cells: Vec<Cell> = field
        .sampleable_cells()
        .into_iter()
        .filter(|c| region.is_none_or(|r| r.contains(*c)))
        .collect();
    if count > cells.len() {
        return Err(CoreError::InvalidInput(format!(
            "requested {count} waypoints but only {} sampleable cells",
            cells.len()
        )));
    }
    // Partial Fisher-Yates: the first `count` entries are a uniform draw
    // without replacement.
    for i in 0..count {
        let j = rng.random_range(i..cells.len());
        cells.swap(i, j);
    }
    cells.truncate(count);
    Ok(cells)
}
