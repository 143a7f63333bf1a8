//! Axis-parallel random partitions of the unit cube.
//!
//! A partition is grown one split at a time. Each split picks a leaf, a
//! dimension and a proportional factor; the leaf is cut so that its first
//! child keeps `fraction` of the parent's extent on that dimension. The
//! ordered list of splits is the whole state: replaying it from the unit
//! cube reproduces every cell bit for bit.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::{index_below, stream_rng, StreamRng};
use crate::scalar::Scalar;

/// How the leaf to split is chosen at each step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Uniformly among the current leaves.
    Pure,
    /// The leaf containing a uniformly drawn training point.
    Adaptive,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Pure => "pure",
            Mode::Adaptive => "adaptive",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pure" => Ok(Mode::Pure),
            "adaptive" => Ok(Mode::Adaptive),
            other => Err(Error::param("mode", format!("unknown mode '{other}'"))),
        }
    }
}

/// Axis-aligned box `[lower_0, upper_0] x ... x [lower_{d-1}, upper_{d-1}]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Cell<T> {
    lower: Vec<T>,
    upper: Vec<T>,
}

impl<T: Scalar> Cell<T> {
    pub fn unit(dim: usize) -> Self {
        Cell {
            lower: vec![T::zero(); dim],
            upper: vec![T::one(); dim],
        }
    }

    pub fn new(lower: Vec<T>, upper: Vec<T>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                found: upper.len(),
            });
        }
        let valid = lower
            .iter()
            .zip(&upper)
            .all(|(&lo, &hi)| lo >= T::zero() && hi <= T::one() && lo < hi);
        if !valid {
            return Err(Error::param(
                "cell",
                "bounds must satisfy 0 <= lower < upper <= 1",
            ));
        }
        Ok(Cell { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[T] {
        &self.lower
    }

    pub fn upper(&self) -> &[T] {
        &self.upper
    }

    pub fn side(&self, dimension: usize) -> T {
        self.upper[dimension] - self.lower[dimension]
    }

    pub fn volume(&self) -> T {
        (0..self.dim())
            .map(|j| self.side(j))
            .fold(T::one(), |a, b| a * b)
    }

    /// L1 diameter: the sum of side lengths.
    pub fn diameter(&self) -> T {
        (0..self.dim()).map(|j| self.side(j)).sum()
    }

    /// Half-open membership: lower bounds inclusive, upper bounds exclusive,
    /// except on the upper face of the unit cube, which is inclusive.
    pub fn contains(&self, x: &[T]) -> bool {
        x.len() == self.dim()
            && x.iter().enumerate().all(|(j, &v)| {
                v >= self.lower[j]
                    && (v < self.upper[j] || (self.upper[j] == T::one() && v == T::one()))
            })
    }

    /// Cuts at `lower + fraction * side` along `dimension`. The first child
    /// lies below the cut.
    pub fn split(&self, dimension: usize, fraction: T) -> Result<(Cell<T>, Cell<T>)> {
        let cut = self.cut_point(dimension, fraction)?;
        let mut left = self.clone();
        let mut right = self.clone();
        left.upper[dimension] = cut;
        right.lower[dimension] = cut;
        Ok((left, right))
    }

    fn cut_point(&self, dimension: usize, fraction: T) -> Result<T> {
        if dimension >= self.dim() {
            return Err(Error::param(
                "dimension",
                format!("{dimension} is out of range for d = {}", self.dim()),
            ));
        }
        if !(fraction > T::zero() && fraction < T::one()) {
            return Err(Error::param(
                "fraction",
                format!("{fraction} is not in (0, 1)"),
            ));
        }
        let lo = self.lower[dimension];
        let hi = self.upper[dimension];
        let cut = lo + fraction * (hi - lo);
        if cut > lo && cut < hi {
            Ok(cut)
        } else {
            Err(Error::DegenerateCell { dimension })
        }
    }
}

/// Splits `cell` along `dimension` at proportional position `fraction`.
pub fn split_cell<T: Scalar>(
    cell: &Cell<T>,
    dimension: usize,
    fraction: T,
) -> Result<(Cell<T>, Cell<T>)> {
    cell.split(dimension, fraction)
}

/// One realized split: which leaf, which dimension, which factor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitRecord<T> {
    pub leaf: usize,
    pub dimension: usize,
    pub fraction: T,
    /// Coordinate of the cut, derived from the other three fields.
    pub cut: T,
}

#[derive(Clone, Debug, PartialEq)]
enum Node<T> {
    Leaf(usize),
    Split {
        dimension: usize,
        cut: T,
        left: usize,
        right: usize,
    },
}

/// Cells produced by a sequence of splits, together with that sequence.
///
/// Splitting leaf `i` keeps the lower child at index `i` and appends the
/// upper child, so after `p` splits there are `p + 1` leaves.
#[derive(Clone, Debug, PartialEq)]
pub struct Partition<T> {
    dim: usize,
    mode: Mode,
    seed: u64,
    cut_width: f64,
    cells: Vec<Cell<T>>,
    history: Vec<SplitRecord<T>>,
    nodes: Vec<Node<T>>,
    leaf_nodes: Vec<usize>,
}

impl<T: Scalar> Partition<T> {
    /// The trivial partition `{[0, 1]^d}`.
    pub fn unit(dim: usize, mode: Mode, seed: u64, cut_width: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("d", "dimension must be at least 1"));
        }
        check_cut_width(cut_width)?;
        Ok(Partition {
            dim,
            mode,
            seed,
            cut_width,
            cells: vec![Cell::unit(dim)],
            history: Vec::new(),
            nodes: vec![Node::Leaf(0)],
            leaf_nodes: vec![0],
        })
    }

    /// Rebuilds a partition from its `(leaf, dimension, fraction)` steps.
    pub fn replay<I>(dim: usize, mode: Mode, seed: u64, cut_width: f64, steps: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, T)>,
    {
        let mut partition = Partition::unit(dim, mode, seed, cut_width)?;
        for (leaf, dimension, fraction) in steps {
            partition.split(leaf, dimension, fraction)?;
        }
        Ok(partition)
    }

    /// The partition after the first `p` splits of this one.
    pub fn prefix(&self, p: usize) -> Self {
        Partition::replay(
            self.dim,
            self.mode,
            self.seed,
            self.cut_width,
            self.history[..p.min(self.history.len())]
                .iter()
                .map(|r| (r.leaf, r.dimension, r.fraction)),
        )
        .expect("prefix of a valid history replays")
    }

    /// Splits leaf `leaf`; the upper child becomes leaf `leaf_count()`.
    pub fn split(&mut self, leaf: usize, dimension: usize, fraction: T) -> Result<&SplitRecord<T>> {
        if leaf >= self.cells.len() {
            return Err(Error::param(
                "leaf",
                format!("{leaf} is out of range for {} leaves", self.cells.len()),
            ));
        }
        let cut = self.cells[leaf].cut_point(dimension, fraction)?;
        let (left, right) = self.cells[leaf].split(dimension, fraction)?;
        let new_leaf = self.cells.len();
        self.cells[leaf] = left;
        self.cells.push(right);

        let node = self.leaf_nodes[leaf];
        let left_node = self.nodes.len();
        let right_node = left_node + 1;
        self.nodes.push(Node::Leaf(leaf));
        self.nodes.push(Node::Leaf(new_leaf));
        self.nodes[node] = Node::Split {
            dimension,
            cut,
            left: left_node,
            right: right_node,
        };
        self.leaf_nodes[leaf] = left_node;
        self.leaf_nodes.push(right_node);

        self.history.push(SplitRecord {
            leaf,
            dimension,
            fraction,
            cut,
        });
        Ok(self.history.last().expect("just pushed"))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn cut_width(&self) -> f64 {
        self.cut_width
    }

    pub fn cells(&self) -> &[Cell<T>] {
        &self.cells
    }

    pub fn history(&self) -> &[SplitRecord<T>] {
        &self.history
    }

    pub fn split_count(&self) -> usize {
        self.history.len()
    }

    pub fn leaf_count(&self) -> usize {
        self.cells.len()
    }

    /// Index of the leaf containing `x`.
    pub fn locate(&self, x: &[T]) -> Result<usize> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        if !x.iter().all(|&v| v >= T::zero() && v <= T::one()) {
            return Err(Error::OutsideUnitCube);
        }
        Ok(self.leaf_of(x))
    }

    /// `locate` without validation; `x` must be a point of the cube.
    pub(crate) fn leaf_of(&self, x: &[T]) -> usize {
        let mut node = 0;
        loop {
            match self.nodes[node] {
                Node::Leaf(leaf) => return leaf,
                Node::Split {
                    dimension,
                    cut,
                    left,
                    right,
                } => node = if x[dimension] < cut { left } else { right },
            }
        }
    }

    pub fn total_volume(&self) -> T {
        self.cells.iter().map(Cell::volume).sum()
    }

    /// Largest L1 diameter over all cells.
    pub fn max_diameter(&self) -> T {
        self.cells
            .iter()
            .map(Cell::diameter)
            .fold(T::zero(), T::max)
    }

    /// Longest side on `dimension` over all cells.
    pub fn max_side(&self, dimension: usize) -> T {
        self.cells
            .iter()
            .map(|c| c.side(dimension))
            .fold(T::zero(), T::max)
    }
}

fn check_cut_width(cut_width: f64) -> Result<()> {
    if (0.0..=0.5).contains(&cut_width) {
        Ok(())
    } else {
        Err(Error::param(
            "cut_width",
            format!("{cut_width} is not in [0, 0.5]"),
        ))
    }
}

/// Which leaf each training row currently falls in.
#[derive(Clone, Debug)]
pub struct Occupancy {
    leaf_of: Vec<usize>,
    members: Vec<Vec<usize>>,
}

impl Occupancy {
    /// All `n` rows in the single root leaf.
    pub fn new(n: usize) -> Self {
        Occupancy {
            leaf_of: vec![0; n],
            members: vec![(0..n).collect()],
        }
    }

    pub fn members(&self, leaf: usize) -> &[usize] {
        &self.members[leaf]
    }

    pub fn leaf_of(&self, row: usize) -> usize {
        self.leaf_of[row]
    }

    /// Moves rows of `record.leaf` at or above the cut into `new_leaf`.
    pub fn apply_split<T: Scalar>(
        &mut self,
        record: &SplitRecord<T>,
        new_leaf: usize,
        data: &Dataset<T>,
    ) {
        debug_assert_eq!(new_leaf, self.members.len());
        let rows = std::mem::take(&mut self.members[record.leaf]);
        let (low, high): (Vec<usize>, Vec<usize>) = rows
            .into_iter()
            .partition(|&i| data.row(i)[record.dimension] < record.cut);
        for &i in &high {
            self.leaf_of[i] = new_leaf;
        }
        self.members[record.leaf] = low;
        self.members.push(high);
    }
}

const MAX_REDRAWS: usize = 1000;

/// Grows a partition split by split from a seeded random stream.
///
/// Each step draws the leaf, then the dimension (uniform over `0..d`), then
/// the factor from `Unif[0.5 - a, 0.5 + a]`. Factors that are exactly 0 or
/// 1, or that would produce a zero-width child, are redrawn.
pub struct Grower<'a, T> {
    partition: Partition<T>,
    data: Option<&'a Dataset<T>>,
    occupancy: Option<Occupancy>,
    rng: StreamRng,
}

impl<'a, T: Scalar> Grower<'a, T> {
    /// `data` is required in adaptive mode. When present in pure mode it is
    /// only tracked (for callers reading the occupancy) and never influences
    /// the draws.
    pub fn new(
        dim: usize,
        mode: Mode,
        cut_width: f64,
        seed: u64,
        data: Option<&'a Dataset<T>>,
    ) -> Result<Self> {
        let partition = Partition::unit(dim, mode, seed, cut_width)?;
        if let Some(ds) = data {
            if ds.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: ds.dim(),
                });
            }
        }
        if mode == Mode::Adaptive && data.is_none_or(Dataset::is_empty) {
            return Err(Error::param(
                "mode",
                "adaptive partitions need a nonempty training set",
            ));
        }
        Ok(Grower {
            partition,
            occupancy: data.map(|ds| Occupancy::new(ds.len())),
            data,
            rng: stream_rng(seed),
        })
    }

    /// Performs one split and returns the index of the leaf that was split.
    pub fn step(&mut self) -> Result<usize> {
        let leaf = match self.partition.mode {
            Mode::Pure => index_below(&mut self.rng, self.partition.leaf_count()),
            Mode::Adaptive => {
                let occupancy = self.occupancy.as_ref().expect("adaptive has data");
                let row = index_below(&mut self.rng, occupancy.leaf_of.len());
                occupancy.leaf_of(row)
            }
        };
        let dimension = index_below(&mut self.rng, self.partition.dim);
        let a = self.partition.cut_width;
        for _ in 0..MAX_REDRAWS {
            let u: f64 = self.rng.gen();
            let fraction = T::from_f64_lossy(0.5 - a + 2.0 * a * u);
            if !(fraction > T::zero() && fraction < T::one()) {
                continue;
            }
            match self.partition.split(leaf, dimension, fraction) {
                Ok(record) => {
                    let record = *record;
                    if let (Some(occ), Some(ds)) = (self.occupancy.as_mut(), self.data) {
                        occ.apply_split(&record, self.partition.leaf_count() - 1, ds);
                    }
                    return Ok(leaf);
                }
                Err(Error::DegenerateCell { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
        Err(Error::DegenerateCell { dimension })
    }

    pub fn partition(&self) -> &Partition<T> {
        &self.partition
    }

    pub fn occupancy(&self) -> Option<&Occupancy> {
        self.occupancy.as_ref()
    }

    pub fn into_partition(self) -> Partition<T> {
        self.partition
    }
}

/// Grows a `p`-split partition of `[0, 1]^dim`.
pub fn grow_partition<T: Scalar>(
    dim: usize,
    p: usize,
    mode: Mode,
    cut_width: f64,
    seed: u64,
    train: Option<&Dataset<T>>,
) -> Result<Partition<T>> {
    let mut grower = Grower::new(dim, mode, cut_width, seed, train)?;
    for _ in 0..p {
        grower.step()?;
    }
    Ok(grower.into_partition())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Label;

    fn cell(lo: &[f64], hi: &[f64]) -> Cell<f64> {
        Cell::new(lo.to_vec(), hi.to_vec()).unwrap()
    }

    #[test]
    fn split_unit_square_in_half() {
        let (l, r) = split_cell(&Cell::<f64>::unit(2), 0, 0.5).unwrap();
        assert_eq!(l, cell(&[0.0, 0.0], &[0.5, 1.0]));
        assert_eq!(r, cell(&[0.5, 0.0], &[1.0, 1.0]));
    }

    #[test]
    fn split_quarter_on_second_axis() {
        let (l, r) = split_cell(&Cell::<f64>::unit(2), 1, 0.25).unwrap();
        assert_eq!(l, cell(&[0.0, 0.0], &[1.0, 0.25]));
        assert_eq!(r, cell(&[0.0, 0.25], &[1.0, 1.0]));
    }

    #[test]
    fn split_offset_cell_at_midpoint() {
        let (l, r) = split_cell(&cell(&[0.2, 0.0], &[0.6, 1.0]), 0, 0.5).unwrap();
        assert!((l.upper()[0] - 0.4).abs() < 1e-15);
        assert_eq!(l.upper()[0], r.lower()[0]);
    }

    #[test]
    fn split_rejects_bad_arguments() {
        let c = Cell::<f64>::unit(2);
        assert!(split_cell(&c, 0, 0.0).is_err());
        assert!(split_cell(&c, 0, 1.0).is_err());
        assert!(split_cell(&c, 0, f64::NAN).is_err());
        assert!(split_cell(&c, 2, 0.5).is_err());
    }

    #[test]
    fn zero_splits_is_the_cube() {
        let p = grow_partition::<f64>(3, 0, Mode::Pure, 0.5, 1, None).unwrap();
        assert_eq!(p.cells(), &[Cell::unit(3)]);
        assert_eq!(p.locate(&[0.3, 1.0, 0.0]).unwrap(), 0);
    }

    #[test]
    fn three_splits_tile_the_square() {
        let p = grow_partition::<f64>(2, 3, Mode::Pure, 0.5, 42, None).unwrap();
        assert_eq!(p.leaf_count(), 4);
        assert!((p.total_volume() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lower_inclusive_boundary() {
        let p = Partition::<f64>::replay(2, Mode::Pure, 0, 0.5, [(0, 0, 0.5)]).unwrap();
        assert_eq!(p.locate(&[0.5, 0.3]).unwrap(), 1);
        assert_eq!(p.locate(&[0.4999, 0.3]).unwrap(), 0);
        assert_eq!(p.locate(&[1.0, 1.0]).unwrap(), 1);
        assert!(matches!(
            p.locate(&[1.01, 0.2]),
            Err(Error::OutsideUnitCube)
        ));
        assert!(matches!(
            p.locate(&[0.2]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn adaptive_requires_matching_data() {
        assert!(grow_partition::<f64>(2, 3, Mode::Adaptive, 0.5, 0, None).is_err());
        let ds = Dataset::<f64>::from_rows(vec![vec![0.1]], vec![Label::Positive]).unwrap();
        assert!(matches!(
            grow_partition(2, 3, Mode::Pure, 0.5, 0, Some(&ds)),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(grow_partition::<f64>(2, 1, Mode::Pure, 0.6, 0, None).is_err());
    }

    #[test]
    fn zero_cut_width_always_halves() {
        let p = grow_partition::<f64>(1, 1, Mode::Pure, 0.0, 9, None).unwrap();
        assert_eq!(p.history()[0].fraction, 0.5);
        assert_eq!(p.max_diameter(), 0.5);
    }

    #[test]
    fn pure_mode_ignores_data() {
        let ds = Dataset::<f64>::from_rows(
            vec![vec![0.1, 0.2], vec![0.9, 0.4]],
            vec![Label::Positive, Label::Negative],
        )
        .unwrap();
        let with = grow_partition(2, 25, Mode::Pure, 0.4, 77, Some(&ds)).unwrap();
        let without = grow_partition::<f64>(2, 25, Mode::Pure, 0.4, 77, None).unwrap();
        assert_eq!(with, without);
    }

    #[test]
    fn works_in_single_precision() {
        let p = grow_partition::<f32>(3, 200, Mode::Pure, 0.5, 5, None).unwrap();
        assert_eq!(p.leaf_count(), 201);
        assert!((p.total_volume() - 1.0).abs() < 1e-4);
    }
}
