//! Discrete probability tables and plug-in information measures.
//!
//! Every quantity is a maximum-likelihood (plug-in) estimate computed from the
//! masses stored in a [`JointTable`], expressed in bits. No bias correction is
//! applied, so the usual algebraic identities (chain rule, symmetry of mutual
//! information) hold up to floating-point rounding.
//!
//! Real-valued data enters through a [`Discretizer`], which bins each
//! dimension independently and dictionary-encodes the resulting tuple of bin
//! indices into a single [`Symbol`].

use std::collections::hash_map::Entry;
use std::collections::{BTreeMap, HashMap};
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Negative plug-in values down to this magnitude are rounding noise and are
/// clamped to zero. Anything more negative is reported as an error.
pub const CLAMP_TOLERANCE: f64 = 1e-9;

pub const DEFAULT_BINS: usize = 16;

/// A dictionary-encoded discrete outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Symbol(pub u32);

impl Symbol {
    pub fn id(self) -> u32 {
        self.0
    }
}

/// Role of a column in a joint table: source, transformation output, target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Axis {
    X,
    T,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinStrategy {
    Uniform,
    Quantile,
}

/// Per-dimension binning followed by exact tuple encoding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discretizer {
    strategy: BinStrategy,
    bins: usize,
    ranges: Option<Vec<(f64, f64)>>,
}

impl Default for Discretizer {
    fn default() -> Self {
        Discretizer {
            strategy: BinStrategy::Uniform,
            bins: DEFAULT_BINS,
            ranges: None,
        }
    }
}

impl Discretizer {
    pub fn new(strategy: BinStrategy, bins: usize) -> Result<Self> {
        if bins < 2 {
            return Err(Error::InvalidDiscretizer(format!(
                "at least 2 bins per dimension required, got {bins}"
            )));
        }
        Ok(Discretizer {
            strategy,
            bins,
            ranges: None,
        })
    }

    pub fn uniform(bins: usize) -> Result<Self> {
        Self::new(BinStrategy::Uniform, bins)
    }

    /// Fixes the binning range of every dimension. Values outside a range are
    /// thresholded into the first or last bin; a range with `lower == upper`
    /// collapses its dimension to one bin.
    pub fn with_ranges(mut self, ranges: Vec<(f64, f64)>) -> Result<Self> {
        for (dim, &(lo, hi)) in ranges.iter().enumerate() {
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return Err(Error::InvalidDiscretizer(format!(
                    "dimension {dim} has invalid range [{lo}, {hi}]"
                )));
            }
        }
        self.ranges = Some(ranges);
        Ok(self)
    }

    pub fn strategy(&self) -> BinStrategy {
        self.strategy
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn ranges(&self) -> Option<&[(f64, f64)]> {
        self.ranges.as_deref()
    }

    /// Maps every row to a symbol. Identical rows, and more generally rows
    /// whose per-dimension bin indices agree, share a symbol. Symbols are
    /// numbered in order of first appearance.
    pub fn discretize(&self, data: &Matrix) -> Result<Vec<Symbol>> {
        let dims = data.cols();
        if let Some(ranges) = &self.ranges {
            if ranges.len() != dims {
                return Err(Error::InvalidDiscretizer(format!(
                    "{} ranges given for {} dimensions",
                    ranges.len(),
                    dims
                )));
            }
        }
        for (row, values) in data.iter_rows().enumerate() {
            if let Some(dim) = values.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    row,
                    dim,
                    value: values[dim],
                });
            }
        }

        let binners: Vec<DimBinner> = (0..dims).map(|d| self.binner(data, d)).collect();
        let mut codes = Vec::with_capacity(data.rows());
        let mut dictionary: HashMap<Vec<u32>, u32> = HashMap::new();
        let mut key = Vec::with_capacity(dims);
        for values in data.iter_rows() {
            key.clear();
            key.extend(values.iter().zip(&binners).map(|(&v, b)| b.bin(v)));
            let next = dictionary.len() as u32;
            let id = match dictionary.entry(key.clone()) {
                Entry::Occupied(e) => *e.get(),
                Entry::Vacant(e) => *e.insert(next),
            };
            codes.push(Symbol(id));
        }
        Ok(codes)
    }

    pub fn discretize_rows<R: AsRef<[f64]>>(&self, rows: &[R]) -> Result<Vec<Symbol>> {
        self.discretize(&Matrix::from_rows(rows)?)
    }

    fn binner(&self, data: &Matrix, dim: usize) -> DimBinner {
        let column = (0..data.rows()).map(|i| data.get(i, dim));
        let (lo, hi) = match &self.ranges {
            Some(r) => r[dim],
            None => column
                .clone()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v))),
        };
        if hi.is_nan() || lo.is_nan() || hi <= lo {
            return DimBinner::Constant;
        }
        match self.strategy {
            BinStrategy::Uniform => DimBinner::Uniform {
                lo,
                width: hi - lo,
                bins: self.bins,
            },
            BinStrategy::Quantile => {
                let mut sorted: Vec<f64> = column.map(|v| v.clamp(lo, hi)).collect();
                sorted.sort_by(f64::total_cmp);
                let n = sorted.len();
                let edges = (1..self.bins).map(|j| sorted[j * n / self.bins]).collect();
                DimBinner::Quantile { lo, hi, edges }
            }
        }
    }
}

enum DimBinner {
    Constant,
    Uniform { lo: f64, width: f64, bins: usize },
    Quantile { lo: f64, hi: f64, edges: Vec<f64> },
}

impl DimBinner {
    fn bin(&self, v: f64) -> u32 {
        match *self {
            DimBinner::Constant => 0,
            DimBinner::Uniform { lo, width, bins } => {
                let scaled = ((v - lo) / width * bins as f64).floor();
                scaled.clamp(0.0, (bins - 1) as f64) as u32
            }
            DimBinner::Quantile { lo, hi, ref edges } => {
                let v = v.clamp(lo, hi);
                edges.partition_point(|&e| e <= v) as u32
            }
        }
    }
}

/// Dictionary-encodes categorical values in order of first appearance.
pub fn encode_categorical<T: Hash + Eq + Clone>(values: &[T]) -> Vec<Symbol> {
    let mut dictionary: HashMap<T, u32> = HashMap::new();
    values
        .iter()
        .map(|v| {
            let next = dictionary.len() as u32;
            Symbol(*dictionary.entry(v.clone()).or_insert(next))
        })
        .collect()
}

/// Joint mass over one to three discrete axes.
///
/// Cells are kept in lexicographic order of their symbol tuples so every
/// summation runs in the same order on every run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointTable {
    axes: Vec<Axis>,
    cells: BTreeMap<Vec<u32>, f64>,
    total_mass: f64,
}

impl JointTable {
    /// Builds a table from explicit masses. Repeated cells accumulate and
    /// zero-mass cells are dropped.
    pub fn from_masses<I>(axes: Vec<Axis>, cells: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, f64)>,
    {
        check_axes(&axes)?;
        let mut table = BTreeMap::new();
        for (cell, mass) in cells {
            if cell.len() != axes.len() {
                return Err(Error::LengthMismatch(vec![axes.len(), cell.len()]));
            }
            if !mass.is_finite() || mass < 0.0 {
                return Err(Error::InvalidMass { cell, mass });
            }
            if mass > 0.0 {
                *table.entry(cell).or_insert(0.0) += mass;
            }
        }
        let total_mass: f64 = table.values().sum();
        if table.is_empty() || total_mass.is_nan() || total_mass <= 0.0 {
            return Err(Error::EmptyTable);
        }
        Ok(JointTable {
            axes,
            cells: table,
            total_mass,
        })
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// Number of cells with positive mass.
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> impl Iterator<Item = (&[u32], f64)> + '_ {
        self.cells.iter().map(|(k, &m)| (k.as_slice(), m))
    }

    pub fn mass(&self, cell: &[u32]) -> f64 {
        self.cells.get(cell).copied().unwrap_or(0.0)
    }

    pub fn probability(&self, cell: &[u32]) -> f64 {
        self.mass(cell) / self.total_mass
    }

    pub fn has_axis(&self, axis: Axis) -> bool {
        self.axes.contains(&axis)
    }

    /// Number of distinct symbols with positive mass on `axis`.
    pub fn alphabet_size(&self, axis: Axis) -> Result<usize> {
        Ok(self.marginal_masses(&[axis])?.len())
    }

    /// Marginal table over `axes`, keeping this table's axis order.
    pub fn marginal(&self, axes: &[Axis]) -> Result<JointTable> {
        let positions = self.positions(axes)?;
        let kept = positions.iter().map(|&p| self.axes[p]).collect();
        let masses = self.marginal_at(&positions);
        JointTable::from_masses(kept, masses)
    }

    /// A copy with every mass divided by the total.
    pub fn normalized(&self) -> JointTable {
        JointTable {
            axes: self.axes.clone(),
            cells: self
                .cells
                .iter()
                .map(|(k, &m)| (k.clone(), m / self.total_mass))
                .collect(),
            total_mass: 1.0,
        }
    }

    fn positions(&self, axes: &[Axis]) -> Result<Vec<usize>> {
        if axes.is_empty() {
            return Err(Error::EmptyAxes);
        }
        check_axes(axes)?;
        let mut positions = Vec::with_capacity(axes.len());
        for &axis in axes {
            let p = self
                .axes
                .iter()
                .position(|&a| a == axis)
                .ok_or(Error::MissingAxis(axis))?;
            positions.push(p);
        }
        // Canonical order: the same axis set always sums in the same order.
        positions.sort_unstable();
        Ok(positions)
    }

    fn marginal_at(&self, positions: &[usize]) -> BTreeMap<Vec<u32>, f64> {
        let mut out: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for (cell, &mass) in &self.cells {
            let key: Vec<u32> = positions.iter().map(|&p| cell[p]).collect();
            *out.entry(key).or_insert(0.0) += mass;
        }
        out
    }

    fn marginal_masses(&self, axes: &[Axis]) -> Result<BTreeMap<Vec<u32>, f64>> {
        let positions = self.positions(axes)?;
        Ok(self.marginal_at(&positions))
    }
}

fn check_axes(axes: &[Axis]) -> Result<()> {
    for (i, a) in axes.iter().enumerate() {
        if axes[..i].contains(a) {
            return Err(Error::DuplicateAxis(*a));
        }
    }
    Ok(())
}

/// Counts co-occurrences of the given symbol columns.
pub fn joint_from_samples(columns: &[(Axis, &[Symbol])]) -> Result<JointTable> {
    if columns.is_empty() {
        return Err(Error::EmptyAxes);
    }
    let lengths: Vec<usize> = columns.iter().map(|(_, c)| c.len()).collect();
    if lengths.iter().any(|&l| l != lengths[0]) {
        return Err(Error::LengthMismatch(lengths));
    }
    if lengths[0] == 0 {
        return Err(Error::EmptyTable);
    }
    let axes: Vec<Axis> = columns.iter().map(|(a, _)| *a).collect();
    let mut counts: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
    for i in 0..lengths[0] {
        let key = columns.iter().map(|(_, c)| c[i].0).collect();
        *counts.entry(key).or_insert(0.0) += 1.0;
    }
    JointTable::from_masses(axes, counts)
}

/// Plug-in Shannon entropy, in bits, of the marginal over `axes`.
pub fn entropy(t: &JointTable, axes: &[Axis]) -> Result<f64> {
    if t.is_empty() {
        return Err(Error::EmptyTable);
    }
    let masses = t.marginal_masses(axes)?;
    let total = t.total_mass;
    let h: f64 = masses
        .values()
        .map(|&m| {
            let p = m / total;
            p * p.recip().log2()
        })
        .sum();
    clamp("entropy", h)
}

/// H(target | given) = H(target, given) - H(given), in bits.
pub fn conditional_entropy(t: &JointTable, target: &[Axis], given: &[Axis]) -> Result<f64> {
    let union = disjoint_union(target, given)?;
    let h_union = entropy(t, &union)?;
    let h_given = entropy(t, given)?;
    clamp("conditional entropy", h_union - h_given)
}

/// I(a; b) = H(a) - H(a | b), in bits.
pub fn mutual_information(t: &JointTable, a: &[Axis], b: &[Axis]) -> Result<f64> {
    let h_a = entropy(t, a)?;
    let h_a_given_b = conditional_entropy(t, a, b)?;
    clamp("mutual information", h_a - h_a_given_b)
}

fn disjoint_union(a: &[Axis], b: &[Axis]) -> Result<Vec<Axis>> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyAxes);
    }
    if let Some(shared) = a.iter().find(|x| b.contains(x)) {
        return Err(Error::OverlappingAxes(*shared));
    }
    Ok(a.iter().chain(b).copied().collect())
}

fn clamp(quantity: &'static str, value: f64) -> Result<f64> {
    if value >= 0.0 {
        Ok(value)
    } else if value >= -CLAMP_TOLERANCE {
        Ok(0.0)
    } else {
        Err(Error::NegativeInformation { quantity, value })
    }
}
