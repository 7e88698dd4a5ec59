use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::features::FeatureGrid;
use crate::gbdt::TrainingSet;
use crate::sardata::HeightRaster;

/// Axis-aligned rectangle of pixels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Patch {
    pub row0: usize,
    pub col0: usize,
    pub rows: usize,
    pub cols: usize,
}

impl Patch {
    pub fn new(row0: usize, col0: usize, rows: usize, cols: usize) -> Self {
        Patch { row0, col0, rows, cols }
    }

    /// `size x size` patch centered in a `rows x cols` raster, shrunk to fit.
    pub fn centered(rows: usize, cols: usize, size: usize) -> Self {
        let (pr, pc) = (size.min(rows), size.min(cols));
        Patch::new((rows - pr) / 2, (cols - pc) / 2, pr, pc)
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        (self.row0..self.row0 + self.rows).contains(&row) && (self.col0..self.col0 + self.cols).contains(&col)
    }

    pub fn fits(&self, rows: usize, cols: usize) -> bool {
        !self.is_empty() && self.row0 + self.rows <= rows && self.col0 + self.cols <= cols
    }

    /// The same scene area in the coordinates of a grid whose pixel `(0, 0)`
    /// sits at scene pixel `(offset, offset)`.
    pub fn scene_to_grid(&self, offset: usize) -> Result<Self> {
        if self.row0 < offset || self.col0 < offset {
            return Err(Error::OutOfBounds(format!(
                "patch at ({}, {}) starts before grid offset {offset}",
                self.row0, self.col0
            )));
        }
        Ok(Patch::new(self.row0 - offset, self.col0 - offset, self.rows, self.cols))
    }

    /// Row-major pixel indices of the patch in a raster `cols` wide.
    pub fn indices(&self, cols: usize) -> Vec<usize> {
        (self.row0..self.row0 + self.rows)
            .flat_map(|r| (self.col0..self.col0 + self.cols).map(move |c| r * cols + c))
            .collect()
    }

    /// Values of a raster inside the patch, row-major.
    pub fn crop(&self, raster: &HeightRaster) -> Result<Vec<f64>> {
        if !self.fits(raster.rows(), raster.cols()) {
            return Err(Error::OutOfBounds(format!(
                "patch {self:?} outside {}x{} raster",
                raster.rows(),
                raster.cols()
            )));
        }
        Ok(self.indices(raster.cols()).into_iter().map(|i| raster.values()[i]).collect())
    }
}

/// How non-test pixels are divided between training and validation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplitMode {
    /// Independent pixels.
    Random,
    /// Whole `block x block` tiles, reducing leakage between neighbors.
    Blocked { block: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitSpec {
    /// In grid coordinates.
    pub test_patch: Patch,
    pub validation_fraction: f64,
    pub seed: u64,
    pub mode: SplitMode,
}

/// Side of the default square test patch, in pixels.
pub const DEFAULT_TEST_PATCH: usize = 140;

impl SplitSpec {
    /// Centered default patch, 20 % validation, pixelwise split.
    pub fn centered(grid_rows: usize, grid_cols: usize, seed: u64) -> Self {
        SplitSpec {
            test_patch: Patch::centered(grid_rows, grid_cols, DEFAULT_TEST_PATCH),
            validation_fraction: 0.2,
            seed,
            mode: SplitMode::Random,
        }
    }

    pub fn validate(&self, grid_rows: usize, grid_cols: usize) -> Result<()> {
        if !self.test_patch.fits(grid_rows, grid_cols) {
            return Err(Error::OutOfBounds(format!(
                "test patch {:?} outside {grid_rows}x{grid_cols} grid",
                self.test_patch
            )));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::Config(format!(
                "validation fraction must be in (0, 1), got {}",
                self.validation_fraction
            )));
        }
        if self.mode == (SplitMode::Blocked { block: 0 }) {
            return Err(Error::Config("block size must be >= 1".into()));
        }
        Ok(())
    }
}

/// Grid pixel indices of each part, each in ascending order.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

/// Number of validation pixels out of `n` remaining.
pub fn validation_count(n: usize, fraction: f64) -> usize {
    ((fraction * n as f64 - 1e-9).ceil().max(0.0) as usize).min(n)
}

/// Partition the pixels of a `rows x cols` grid.
pub fn split_indices(rows: usize, cols: usize, spec: &SplitSpec) -> Result<SplitIndices> {
    spec.validate(rows, cols)?;
    let patch = spec.test_patch;
    let test = patch.indices(cols);
    let remaining: Vec<usize> = (0..rows * cols)
        .filter(|&i| !patch.contains(i / cols, i % cols))
        .collect();
    let n_val = validation_count(remaining.len(), spec.validation_fraction);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut validation = match spec.mode {
        SplitMode::Random => {
            let mut shuffled = remaining.clone();
            shuffled.shuffle(&mut rng);
            shuffled.truncate(n_val);
            shuffled
        }
        SplitMode::Blocked { block } => {
            let (br, bc) = (rows.div_ceil(block), cols.div_ceil(block));
            let mut tiles: Vec<Vec<usize>> = vec![Vec::new(); br * bc];
            for &i in &remaining {
                tiles[(i / cols / block) * bc + (i % cols) / block].push(i);
            }
            tiles.retain(|t| !t.is_empty());
            tiles.shuffle(&mut rng);
            let mut chosen = Vec::with_capacity(n_val);
            for t in tiles {
                if chosen.len() >= n_val {
                    break;
                }
                chosen.extend(t);
            }
            chosen
        }
    };
    validation.sort_unstable();
    let mut is_val = vec![false; rows * cols];
    for &i in &validation {
        is_val[i] = true;
    }
    let train = remaining.into_iter().filter(|&i| !is_val[i]).collect();
    Ok(SplitIndices {
        train,
        validation,
        test,
    })
}

/// Regression sets for one split.
#[derive(Clone, Debug)]
pub struct DatasetSplit {
    pub train: TrainingSet,
    pub validation: TrainingSet,
    pub test: TrainingSet,
    pub indices: SplitIndices,
}

fn gather(grid: &FeatureGrid, targets: &HeightRaster, idx: &[usize]) -> Result<TrainingSet> {
    let mut x = Vec::with_capacity(idx.len() * grid.dim());
    for &i in idx {
        x.extend_from_slice(grid.sample(i));
    }
    let y = idx.iter().map(|&i| targets.values()[i]).collect();
    TrainingSet::regression(x, grid.dim(), y)
}

pub fn check_alignment(grid: &FeatureGrid, targets: &HeightRaster) -> Result<()> {
    if grid.rows() != targets.rows() || grid.cols() != targets.cols() || grid.valid_offset() != targets.valid_offset() {
        return Err(Error::Misaligned(format!(
            "feature grid {}x{} at offset {} vs {} raster {}x{} at offset {}",
            grid.rows(),
            grid.cols(),
            grid.valid_offset(),
            targets.kind().name(),
            targets.rows(),
            targets.cols(),
            targets.valid_offset()
        )));
    }
    Ok(())
}

/// Test patch, then a seeded train/validation division of the rest.
pub fn split_dataset(grid: &FeatureGrid, targets: &HeightRaster, spec: &SplitSpec) -> Result<DatasetSplit> {
    check_alignment(grid, targets)?;
    let indices = split_indices(grid.rows(), grid.cols(), spec)?;
    Ok(DatasetSplit {
        train: gather(grid, targets, &indices.train)?,
        validation: gather(grid, targets, &indices.validation)?,
        test: gather(grid, targets, &indices.test)?,
        indices,
    })
}
