//! Gridded scalar fields: raster ingestion, synthetic generation, masking,
//! frame sequences for piecewise-static dynamics, and noisy point sampling.
//!
//! The raster exchange format is a plain-text rectangular grid, one row per
//! line, comma- or whitespace-separated, with `nan` as the no-data sentinel.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// A grid cell address; `x` is the column, `y` the row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub x: usize,
    pub y: usize,
}

impl Cell {
    pub fn new(x: usize, y: usize) -> Self {
        Cell { x, y }
    }

    /// The cell as a kernel input, in cell units.
    pub fn point(&self) -> Vec<f64> {
        vec![self.x as f64, self.y as f64]
    }

    pub fn distance(&self, other: Cell) -> f64 {
        let dx = self.x as f64 - other.x as f64;
        let dy = self.y as f64 - other.y as f64;
        (dx * dx + dy * dy).sqrt()
    }
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// A discretized scalar field with a sampleable/excluded mask.
///
/// Immutable after construction; `values` and `mask` are row-major with
/// index `y * width + x`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    width: usize,
    height: usize,
    cell_size: f64,
    values: Vec<f64>,
    mask: Vec<bool>,
}

impl GridField {
    pub fn new(
        width: usize,
        height: usize,
        cell_size: f64,
        values: Vec<f64>,
        mask: Vec<bool>,
    ) -> Result<Self> {
        let n = width * height;
        if values.len() != n || mask.len() != n {
            return Err(CoreError::DimensionMismatch(format!(
                "grid {width}x{height} needs {n} values and mask entries, got {} and {}",
                values.len(),
                mask.len()
            )));
        }
        if !mask.iter().any(|m| *m) {
            return Err(CoreError::Raster("zero sampleable cells".into()));
        }
        for (i, (v, m)) in values.iter().zip(&mask).enumerate() {
            if *m && !v.is_finite() {
                return Err(CoreError::Raster(format!(
                    "sampleable cell ({}, {}) has non-finite value {v}",
                    i % width,
                    i / width
                )));
            }
        }
        Ok(GridField {
            width,
            height,
            cell_size,
            values,
            mask,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.x < self.width && cell.y < self.height
    }

    fn idx(&self, cell: Cell) -> usize {
        cell.y * self.width + cell.x
    }

    pub fn is_sampleable(&self, cell: Cell) -> bool {
        self.contains(cell) && self.mask[self.idx(cell)]
    }

    /// Value at a cell; masked or out-of-bounds cells are an error.
    pub fn value(&self, cell: Cell) -> Result<f64> {
        if !self.contains(cell) {
            return Err(CoreError::InvalidInput(format!(
                "cell {cell} outside {}x{} grid",
                self.width, self.height
            )));
        }
        if !self.mask[self.idx(cell)] {
            return Err(CoreError::InvalidInput(format!("cell {cell} is masked")));
        }
        Ok(self.values[self.idx(cell)])
    }

    /// Snap a continuous position (cell units) to its containing cell.
    pub fn snap(&self, x: f64, y: f64) -> Result<Cell> {
        if !(x.is_finite() && y.is_finite()) || x < -0.5 || y < -0.5 {
            return Err(CoreError::InvalidInput(format!("position ({x}, {y}) outside grid")));
        }
        let cell = Cell::new((x + 0.5).floor() as usize, (y + 0.5).floor() as usize);
        if !self.contains(cell) {
            return Err(CoreError::InvalidInput(format!("position ({x}, {y}) outside grid")));
        }
        Ok(cell)
    }

    pub fn sampleable_cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for y in 0..self.height {
            for x in 0..self.width {
                let cell = Cell::new(x, y);
                if self.mask[self.idx(cell)] {
                    cells.push(cell);
                }
            }
        }
        cells
    }

    pub fn sampleable_count(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }

    /// Min and max over sampleable cells.
    pub fn value_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (v, m) in self.values.iter().zip(&self.mask) {
            if *m {
                lo = lo.min(*v);
                hi = hi.max(*v);
            }
        }
        (lo, hi)
    }

    /// Mean over sampleable cells.
    pub fn mean(&self) -> f64 {
        let mut sum = 0.0;
        let mut n = 0usize;
        for (v, m) in self.values.iter().zip(&self.mask) {
            if *m {
                sum += v;
                n += 1;
            }
        }
        sum / n as f64
    }

    /// Population variance over sampleable cells.
    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        let mut sum = 0.0;
        let mut n = 0usize;
        for (v, m) in self.values.iter().zip(&self.mask) {
            if *m {
                sum += (v - mean) * (v - mean);
                n += 1;
            }
        }
        sum / n as f64
    }

    /// Parse the plain-text raster format; `nan` tokens become masked cells.
    pub fn from_raster_str(text: &str, cell_size: f64) -> Result<Self> {
        let mut values = Vec::new();
        let mut mask = Vec::new();
        let mut width: Option<usize> = None;
        let mut height = 0usize;
        for (row, line) in text.lines().enumerate() {
            let normalized = line.replace(',', " ");
            let tokens: Vec<&str> = normalized.split_whitespace().collect();
            if tokens.is_empty() {
                continue; // blank lines are tolerated
            }
            match width {
                None => width = Some(tokens.len()),
                Some(w) if w != tokens.len() => {
                    return Err(CoreError::Raster(format!(
                        "ragged row {row}: expected {w} entries, got {}",
                        tokens.len()
                    )));
                }
                _ => {}
            }
            for (col, tok) in tokens.iter().enumerate() {
                if tok.eq_ignore_ascii_case("nan") || tok.eq_ignore_ascii_case("na") {
                    values.push(f64::NAN);
                    mask.push(false);
                } else {
                    let v: f64 = tok.parse().map_err(|_| {
                        CoreError::Raster(format!("non-numeric entry `{tok}` at row {row}, col {col}"))
                    })?;
                    if !v.is_finite() {
                        return Err(CoreError::Raster(format!(
                            "non-finite entry `{tok}` at row {row}, col {col}"
                        )));
                    }
                    values.push(v);
                    mask.push(true);
                }
            }
            height += 1;
        }
        let width = width.ok_or_else(|| CoreError::Raster("empty raster".into()))?;
        GridField::new(width, height, cell_size, values, mask)
    }

    /// Render in the same format `from_raster_str` reads; values round-trip
    /// bit-exactly through the shortest `f64` representation.
    pub fn to_raster_string(&self) -> String {
        let mut out = String::new();
        for y in 0..self.height {
            for x in 0..self.width {
                if x > 0 {
                    out.push(' ');
                }
                let i = y * self.width + x;
                if self.mask[i] {
                    out.push_str(&format!("{}", self.values[i]));
                } else {
                    out.push_str("nan");
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn load_raster(path: &std::path::Path, cell_size: f64) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CoreError::io(path.display().to_string(), e))?;
        Self::from_raster_str(&text, cell_size)
    }

    pub fn write_raster(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_raster_string())
            .map_err(|e| CoreError::io(path.display().to_string(), e))
    }
}

/// An ordered sequence of frames with shared geometry; the active frame
/// advances every `frame_length` sampling operations and clamps at the last.
#[derive(Debug, Clone)]
pub struct DynamicField {
    frames: Vec<GridField>,
    frame_length: usize,
}

impl DynamicField {
    pub fn new(frames: Vec<GridField>, frame_length: usize) -> Result<Self> {
        if frames.is_empty() {
            return Err(CoreError::InvalidInput("DynamicField needs at least one frame".into()));
        }
        if frame_length == 0 {
            return Err(CoreError::InvalidInput("frame_length must be >= 1".into()));
        }
        let first = &frames[0];
        for (i, f) in frames.iter().enumerate().skip(1) {
            if f.width != first.width || f.height != first.height {
                return Err(CoreError::DimensionMismatch(format!(
                    "frame {i} is {}x{}, frame 0 is {}x{}",
                    f.width, f.height, first.width, first.height
                )));
            }
            if f.mask != first.mask {
                return Err(CoreError::InvalidInput(format!("frame {i} mask differs from frame 0")));
            }
            if f.cell_size != first.cell_size {
                return Err(CoreError::InvalidInput(format!("frame {i} cell_size differs from frame 0")));
            }
        }
        Ok(DynamicField { frames, frame_length })
    }

    /// Wrap a single frame as a static environment.
    pub fn static_field(field: GridField) -> Self {
        DynamicField {
            frames: vec![field],
            frame_length: 1,
        }
    }

    pub fn frames(&self) -> &[GridField] {
        &self.frames
    }

    pub fn frame_length(&self) -> usize {
        self.frame_length
    }

    /// Frame index active at a sampling step; piecewise constant,
    /// non-decreasing, clamped to the last frame.
    pub fn frame_index(&self, step: usize) -> usize {
        (step / self.frame_length).min(self.frames.len() - 1)
    }

    pub fn frame(&self, step: usize) -> &GridField {
        &self.frames[self.frame_index(step)]
    }

    pub fn geometry(&self) -> &GridField {
        &self.frames[0]
    }
}

/// One measurement: where, what, and at which sampling operation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplePoint {
    pub cell: Cell,
    pub value: f64,
    pub step: usize,
}

/// Draw a noisy measurement from the frame active at `step`.
pub fn sample(
    env: &DynamicField,
    cell: Cell,
    step: usize,
    noise_sd: f64,
    rng: &mut impl Rng,
) -> Result<SamplePoint> {
    let truth = env.frame(step).value(cell)?;
    let value = if noise_sd > 0.0 {
        let noise = Normal::new(0.0, noise_sd)
            .map_err(|e| CoreError::InvalidInput(format!("bad noise_sd {noise_sd}: {e}")))?;
        truth + noise.sample(rng)
    } else {
        truth
    };
    Ok(SamplePoint { cell, value, step })
}

/// Parameters for the deterministic sum-of-Gaussian-bumps generator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthFieldParams {
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    pub bump_count: usize,
    /// Inclusive amplitude range for each bump.
    pub amplitude_range: (f64, f64),
    /// Inclusive length-scale range (cells) for each bump.
    pub length_scale_range: (f64, f64),
}

/// A fully-sampleable field equal to a sum of Gaussian bumps with
/// integer-cell centers; bitwise identical for identical parameters.
pub fn synth_field(params: &SynthFieldParams) -> Result<GridField> {
    use rand::{RngExt, SeedableRng};

    if params.width < 2 || params.height < 2 {
        return Err(CoreError::InvalidInput(format!(
            "synthetic field needs width, height >= 2, got {}x{}",
            params.width, params.height
        )));
    }
    if params.bump_count == 0 {
        return Err(CoreError::InvalidInput("bump_count must be >= 1".into()));
    }
    for (name, (lo, hi)) in [
        ("amplitude_range", params.amplitude_range),
        ("length_scale_range", params.length_scale_range),
    ] {
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(CoreError::InvalidInput(format!("empty parameter range {name}: ({lo}, {hi})")));
        }
    }
    if params.length_scale_range.0 <= 0.0 {
        return Err(CoreError::InvalidInput("length scales must be > 0".into()));
    }

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(params.seed);
    let mut bumps = Vec::with_capacity(params.bump_count);
    for _ in 0..params.bump_count {
        let cx = rng.random_range(0..params.width) as f64;
        let cy = rng.random_range(0..params.height) as f64;
        let amp = rng.random_range(params.amplitude_range.0..=params.amplitude_range.1);
        let ls = rng.random_range(params.length_scale_range.0..=params.length_scale_range.1);
        bumps.push((cx, cy, amp, ls));
    }

    let mut values = vec![0.0; params.width * params.height];
    for y in 0..params.height {
        for x in 0..params.width {
            let mut v = 0.0;
            for &(cx, cy, amp, ls) in &bumps {
                let dx = x as f64 - cx;
                let dy = y as f64 - cy;
                v += amp * (-(dx * dx + dy * dy) / (2.0 * ls * ls)).exp();
            }
            values[y * params.width + x] = v;
        }
    }
    GridField::new(
        params.width,
        params.height,
        1.0,
        values,
        vec![true; params.width * params.height],
    )
}
