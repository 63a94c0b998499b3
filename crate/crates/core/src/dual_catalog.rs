//! Truncated unitary duals of SU(2), tori and their finite products.
//!
//! SU(2) irreps are indexed by `k = 2l`, tori by their character `n ∈ ℤ^d`, and a
//! product by the concatenation of its factors' indices. A [`DualCatalog`] lists
//! every irrep with Casimir eigenvalue at most the cutoff and lays the
//! representation spaces out contiguously in a dense coordinate range.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::Range;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper bound on the dense dimension `Σ d_π` of a catalog.
pub const MAX_DENSE_DIM: usize = 1_000_000;

const MAX_PRODUCT_DEPTH: usize = 2;

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GroupKind {
    Su2 {
        #[serde(default = "default_true")]
        half_integers: bool,
    },
    Torus {
        d: usize,
    },
    Product {
        factors: Vec<GroupKind>,
    },
}

impl GroupKind {
    pub fn su2() -> Self {
        GroupKind::Su2 { half_integers: true }
    }

    pub fn su2_integer() -> Self {
        GroupKind::Su2 {
            half_integers: false,
        }
    }

    pub fn torus(d: usize) -> Self {
        GroupKind::Torus { d }
    }

    pub fn product(factors: Vec<GroupKind>) -> Self {
        GroupKind::Product { factors }
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth() > MAX_PRODUCT_DEPTH {
            return Err(Error::InvalidGroup(format!(
                "product nesting depth {} exceeds {MAX_PRODUCT_DEPTH}",
                self.depth()
            )));
        }
        self.validate_shape()
    }

    fn validate_shape(&self) -> Result<()> {
        match self {
            GroupKind::Su2 { .. } => Ok(()),
            GroupKind::Torus { d } if *d == 0 => {
                Err(Error::InvalidGroup("torus dimension must be at least 1".into()))
            }
            GroupKind::Torus { .. } => Ok(()),
            GroupKind::Product { factors } => {
                if factors.len() < 2 {
                    return Err(Error::InvalidGroup(
                        "a product needs at least two factors".into(),
                    ));
                }
                factors.iter().try_for_each(GroupKind::validate_shape)
            }
        }
    }

    fn depth(&self) -> usize {
        match self {
            GroupKind::Product { factors } => {
                1 + factors.iter().map(GroupKind::depth).max().unwrap_or(0)
            }
            _ => 0,
        }
    }

    /// Number of integers in an irrep index of this group.
    pub fn index_len(&self) -> usize {
        match self {
            GroupKind::Su2 { .. } => 1,
            GroupKind::Torus { d } => *d,
            GroupKind::Product { factors } => factors.iter().map(GroupKind::index_len).sum(),
        }
    }

    pub fn is_torus(&self, dim: usize) -> bool {
        matches!(self, GroupKind::Torus { d } if *d == dim)
    }

    fn check_index(&self, index: &[i64]) -> Result<()> {
        let invalid = |reason: &str| Error::InvalidLabel {
            index: index.to_vec(),
            reason: reason.to_string(),
        };
        if index.len() != self.index_len() {
            return Err(invalid("wrong index length for group"));
        }
        match self {
            GroupKind::Su2 { half_integers } => {
                let k = index[0];
                if k < 0 {
                    return Err(invalid("SU(2) index k = 2l must be nonnegative"));
                }
                if !half_integers && k % 2 != 0 {
                    return Err(invalid("half-integer spin excluded from this catalog"));
                }
                Ok(())
            }
            GroupKind::Torus { .. } => Ok(()),
            GroupKind::Product { factors } => {
                let mut rest = index;
                for f in factors {
                    let (head, tail) = rest.split_at(f.index_len());
                    f.check_index(head)?;
                    rest = tail;
                }
                Ok(())
            }
        }
    }

    fn dim_of(&self, index: &[i64]) -> usize {
        match self {
            GroupKind::Su2 { .. } => index[0] as usize + 1,
            GroupKind::Torus { .. } => 1,
            GroupKind::Product { factors } => self
                .split(index, factors)
                .map(|(f, idx)| f.dim_of(idx))
                .product(),
        }
    }

    fn casimir_of(&self, index: &[i64]) -> f64 {
        match self {
            GroupKind::Su2 { .. } => {
                let k = index[0] as f64;
                k * (k + 2.0) / 4.0
            }
            GroupKind::Torus { .. } => index.iter().map(|&n| (n * n) as f64).sum(),
            GroupKind::Product { factors } => self
                .split(index, factors)
                .map(|(f, idx)| f.casimir_of(idx))
                .sum(),
        }
    }

    /// Power-law weight `(1+l)^s` on SU(2), `(1+|n|)^s` on tori, and the product
    /// of factor values on products.
    fn power_law_of(&self, index: &[i64], exponent: f64) -> f64 {
        match self {
            GroupKind::Su2 { .. } => (1.0 + index[0] as f64 / 2.0).powf(exponent),
            GroupKind::Torus { .. } => {
                let norm = index.iter().map(|&n| (n * n) as f64).sum::<f64>().sqrt();
                (1.0 + norm).powf(exponent)
            }
            GroupKind::Product { factors } => self
                .split(index, factors)
                .map(|(f, idx)| f.power_law_of(idx, exponent))
                .product(),
        }
    }

    fn split<'a>(
        &self,
        index: &'a [i64],
        factors: &'a [GroupKind],
    ) -> impl Iterator<Item = (&'a GroupKind, &'a [i64])> {
        let mut start = 0;
        factors.iter().map(move |f| {
            let len = f.index_len();
            let part = &index[start..start + len];
            start += len;
            (f, part)
        })
    }

    fn is_nonnegative(&self, index: &[i64]) -> bool {
        match self {
            GroupKind::Su2 { .. } => true,
            GroupKind::Torus { .. } => index.iter().all(|&n| n >= 0),
            GroupKind::Product { factors } => self
                .split(index, factors)
                .all(|(f, idx)| f.is_nonnegative(idx)),
        }
    }

    /// All indices with Casimir eigenvalue `<= cutoff`, unordered.
    fn indices_within(&self, cutoff: f64, subset: LabelSubset) -> Result<Vec<Vec<i64>>> {
        let mut out = Vec::new();
        match self {
            GroupKind::Su2 { half_integers } => {
                let step = if *half_integers { 1 } else { 2 };
                let mut k: i64 = 0;
                while self.casimir_of(&[k]) <= cutoff {
                    out.push(vec![k]);
                    guard(out.len())?;
                    k += step;
                }
            }
            GroupKind::Torus { d } => {
                let radius = cutoff.sqrt().floor() as i64;
                let lo = match subset {
                    LabelSubset::All => -radius,
                    LabelSubset::NonNegative => 0,
                };
                let mut current = Vec::with_capacity(*d);
                torus_points(*d, lo, radius, cutoff, 0, &mut current, &mut out)?;
            }
            GroupKind::Product { factors } => {
                let parts = factors
                    .iter()
                    .map(|f| {
                        let idx = f.indices_within(cutoff, subset)?;
                        Ok(idx
                            .into_iter()
                            .map(|i| {
                                let lam = f.casimir_of(&i);
                                let dim = f.dim_of(&i);
                                (i, lam, dim)
                            })
                            .collect::<Vec<_>>())
                    })
                    .collect::<Result<Vec<_>>>()?;
                let mut current = Vec::new();
                let mut dims = 0usize;
                product_points(&parts, cutoff, 0.0, 1, &mut current, &mut out, &mut dims)?;
            }
        }
        Ok(out)
    }
}

fn guard(size: usize) -> Result<()> {
    if size > MAX_DENSE_DIM {
        Err(Error::ResourceGuard {
            size,
            limit: MAX_DENSE_DIM,
        })
    } else {
        Ok(())
    }
}

fn torus_points(
    d: usize,
    lo: i64,
    hi: i64,
    budget: f64,
    used: i64,
    current: &mut Vec<i64>,
    out: &mut Vec<Vec<i64>>,
) -> Result<()> {
    if current.len() == d {
        out.push(current.clone());
        return guard(out.len());
    }
    for n in lo..=hi {
        let sq = used + n * n;
        if sq as f64 > budget {
            continue;
        }
        current.push(n);
        torus_points(d, lo, hi, budget, sq, current, out)?;
        current.pop();
    }
    Ok(())
}

type FactorPoints = Vec<(Vec<i64>, f64, usize)>;

fn product_points(
    parts: &[FactorPoints],
    budget: f64,
    used: f64,
    dim: usize,
    current: &mut Vec<i64>,
    out: &mut Vec<Vec<i64>>,
    total_dim: &mut usize,
) -> Result<()> {
    let Some((head, tail)) = parts.split_first() else {
        out.push(current.clone());
        *total_dim += dim;
        return guard(*total_dim);
    };
    for (idx, lam, d) in head {
        if used + lam > budget {
            continue;
        }
        let len = current.len();
        current.extend_from_slice(idx);
        product_points(tail, budget, used + lam, dim * d, current, out, total_dim)?;
        current.truncate(len);
    }
    Ok(())
}

/// Which irreps of the group a catalog admits before the Casimir cutoff is applied.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelSubset {
    #[default]
    All,
    /// Torus characters with every coordinate `>= 0`; all SU(2) labels.
    NonNegative,
}

impl LabelSubset {
    fn is_all(&self) -> bool {
        matches!(self, LabelSubset::All)
    }
}

/// One irreducible representation of a supported group.
#[derive(Clone)]
pub struct IrrepLabel {
    group: Arc<GroupKind>,
    index: Vec<i64>,
}

impl IrrepLabel {
    pub fn new(group: Arc<GroupKind>, index: Vec<i64>) -> Result<Self> {
        group.validate()?;
        group.check_index(&index)?;
        Ok(Self { group, index })
    }

    /// SU(2) irrep of spin `l = k / 2`.
    pub fn su2(k: i64) -> Result<Self> {
        Self::new(Arc::new(GroupKind::su2()), vec![k])
    }

    pub fn torus(n: Vec<i64>) -> Result<Self> {
        let d = n.len();
        Self::new(Arc::new(GroupKind::torus(d)), n)
    }

    pub fn group(&self) -> &GroupKind {
        &self.group
    }

    pub fn index(&self) -> &[i64] {
        &self.index
    }

    pub fn dim(&self) -> usize {
        self.group.dim_of(&self.index)
    }

    pub fn casimir(&self) -> f64 {
        self.group.casimir_of(&self.index)
    }

    /// Spin `l` for SU(2) labels.
    pub fn spin(&self) -> Option<f64> {
        match *self.group {
            GroupKind::Su2 { .. } => Some(self.index[0] as f64 / 2.0),
            _ => None,
        }
    }
}

impl PartialEq for IrrepLabel {
    fn eq(&self, other: &Self) -> bool {
        self.index == other.index && self.group == other.group
    }
}

impl Eq for IrrepLabel {}

impl Hash for IrrepLabel {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.index.hash(state);
    }
}

impl fmt::Debug for IrrepLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.spin() {
            Some(l) => write!(f, "l={l}"),
            None => write!(f, "{:?}", self.index),
        }
    }
}

/// Positive function on the dual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WeightRepr", into = "WeightRepr")]
pub enum Weight {
    PowerLaw { exponent: f64 },
    Table(HashMap<Vec<i64>, f64>),
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum WeightRepr {
    PowerLaw { exponent: f64 },
    Table { entries: Vec<WeightEntry> },
}

#[derive(Serialize, Deserialize)]
struct WeightEntry {
    index: Vec<i64>,
    value: f64,
}

impl TryFrom<WeightRepr> for Weight {
    type Error = Error;

    fn try_from(repr: WeightRepr) -> Result<Self> {
        match repr {
            WeightRepr::PowerLaw { exponent } => Weight::power_law(exponent),
            WeightRepr::Table { entries } => {
                Weight::table(entries.into_iter().map(|e| (e.index, e.value)))
            }
        }
    }
}

impl From<Weight> for WeightRepr {
    fn from(w: Weight) -> Self {
        match w {
            Weight::PowerLaw { exponent } => WeightRepr::PowerLaw { exponent },
            Weight::Table(map) => {
                let mut entries: Vec<_> = map
                    .into_iter()
                    .map(|(index, value)| WeightEntry { index, value })
                    .collect();
                entries.sort_by(|a, b| a.index.cmp(&b.index));
                WeightRepr::Table { entries }
            }
        }
    }
}

impl Weight {
    pub fn power_law(exponent: f64) -> Result<Self> {
        if !exponent.is_finite() {
            return Err(Error::InvalidWeight(format!(
                "power-law exponent must be finite, got {exponent}"
            )));
        }
        Ok(Weight::PowerLaw { exponent })
    }

    pub fn unit() -> Self {
        Weight::PowerLaw { exponent: 0.0 }
    }

    pub fn table(entries: impl IntoIterator<Item = (Vec<i64>, f64)>) -> Result<Self> {
        let mut map = HashMap::new();
        for (index, value) in entries {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidWeight(format!(
                    "table value {value} at {index:?} is not a positive finite number"
                )));
            }
            map.insert(index, value);
        }
        Ok(Weight::Table(map))
    }

    /// Tabulates `factor * self` over every label of `catalog`.
    pub fn tabulate(&self, catalog: &DualCatalog, factor: f64) -> Result<Self> {
        let entries = catalog
            .labels()
            .iter()
            .map(|l| Ok((l.index().to_vec(), factor * self.eval(l)?)))
            .collect::<Result<Vec<_>>>()?;
        Weight::table(entries)
    }

    pub fn eval(&self, label: &IrrepLabel) -> Result<f64> {
        let value = match self {
            Weight::PowerLaw { exponent } => label.group.power_law_of(&label.index, *exponent),
            Weight::Table(map) => *map
                .get(&label.index)
                .ok_or_else(|| Error::MissingWeight(label.index.clone()))?,
        };
        if value.is_finite() && value > 0.0 {
            Ok(value)
        } else {
            Err(Error::InvalidWeight(format!(
                "weight evaluates to {value} at {:?}",
                label.index
            )))
        }
    }
}

/// Free-function form of [`Weight::eval`].
pub fn weight_eval(w: &Weight, label: &IrrepLabel) -> Result<f64> {
    w.eval(label)
}

/// Enough to rebuild a catalog deterministically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogRef {
    pub group: GroupKind,
    pub cutoff: f64,
    #[serde(default, skip_serializing_if = "LabelSubset::is_all")]
    pub subset: LabelSubset,
}

impl CatalogRef {
    pub fn build(&self) -> Result<DualCatalog> {
        DualCatalog::enumerate_subset(self.group.clone(), self.cutoff, self.subset)
    }
}

/// Finite truncation `{π : λ_π <= Λ}` with a dense layout.
#[derive(Clone)]
pub struct DualCatalog {
    group: Arc<GroupKind>,
    cutoff: f64,
    subset: LabelSubset,
    labels: Vec<IrrepLabel>,
    offsets: Vec<usize>,
    positions: HashMap<Vec<i64>, usize>,
}

impl fmt::Debug for DualCatalog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DualCatalog")
            .field("group", &self.group)
            .field("cutoff", &self.cutoff)
            .field("subset", &self.subset)
            .field("labels", &self.labels)
            .finish()
    }
}

impl PartialEq for DualCatalog {
    fn eq(&self, other: &Self) -> bool {
        self.group == other.group && self.labels == other.labels
    }
}

impl DualCatalog {
    pub fn enumerate(group: GroupKind, cutoff: f64) -> Result<Self> {
        Self::enumerate_subset(group, cutoff, LabelSubset::All)
    }

    pub fn enumerate_subset(group: GroupKind, cutoff: f64, subset: LabelSubset) -> Result<Self> {
        if !(cutoff.is_finite() && cutoff >= 0.0) {
            return Err(Error::InvalidCutoff(cutoff));
        }
        group.validate()?;
        let group = Arc::new(group);
        let mut labels: Vec<IrrepLabel> = group
            .indices_within(cutoff, subset)?
            .into_iter()
            .filter(|idx| subset.is_all() || group.is_nonnegative(idx))
            .map(|index| IrrepLabel {
                group: Arc::clone(&group),
                index,
            })
            .collect();
        labels.sort_by(|a, b| {
            a.casimir()
                .partial_cmp(&b.casimir())
                .unwrap_or(Ordering::Equal)
                .then_with(|| a.index.cmp(&b.index))
        });

        let mut offsets = Vec::with_capacity(labels.len() + 1);
        let mut total = 0usize;
        offsets.push(0);
        for l in &labels {
            total += l.dim();
            guard(total)?;
            offsets.push(total);
        }
        let positions = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.index.clone(), i))
            .collect();
        Ok(Self {
            group,
            cutoff,
            subset,
            labels,
            offsets,
            positions,
        })
    }

    pub fn group(&self) -> &GroupKind {
        &self.group
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn subset(&self) -> LabelSubset {
        self.subset
    }

    pub fn labels(&self) -> &[IrrepLabel] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, pos: usize) -> &IrrepLabel {
        &self.labels[pos]
    }

    /// `N = Σ d_π`.
    pub fn dense_dim(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    pub fn position(&self, index: &[i64]) -> Option<usize> {
        self.positions.get(index).copied()
    }

    pub fn require_position(&self, index: &[i64]) -> Result<usize> {
        self.position(index)
            .ok_or_else(|| Error::LabelNotInCatalog(index.to_vec()))
    }

    /// `(start, length)` of the label at `pos` in the dense layout.
    pub fn offset(&self, pos: usize) -> (usize, usize) {
        (self.offsets[pos], self.offsets[pos + 1] - self.offsets[pos])
    }

    pub fn range(&self, pos: usize) -> Range<usize> {
        self.offsets[pos]..self.offsets[pos + 1]
    }

    /// Catalog position owning dense coordinate `i`.
    pub fn owner_of(&self, i: usize) -> Option<usize> {
        if i >= self.dense_dim() {
            return None;
        }
        Some(self.offsets.partition_point(|&o| o <= i) - 1)
    }

    pub fn catalog_ref(&self) -> CatalogRef {
        CatalogRef {
            group: (*self.group).clone(),
            cutoff: self.cutoff,
            subset: self.subset,
        }
    }

    /// Same group and subset, smaller cutoff.
    pub fn truncate(&self, cutoff: f64) -> Result<Self> {
        Self::enumerate_subset((*self.group).clone(), cutoff.min(self.cutoff), self.subset)
    }

    pub fn to_file(&self) -> CatalogFile {
        CatalogFile {
            group: (*self.group).clone(),
            cutoff: self.cutoff,
            subset: self.subset,
            labels: self
                .labels
                .iter()
                .map(|l| LabelRecord {
                    index: l.index.clone(),
                    dim: l.dim(),
                    casimir: l.casimir(),
                })
                .collect(),
        }
    }
}

/// Free-function form of [`DualCatalog::enumerate`].
pub fn enumerate(group: GroupKind, cutoff: f64) -> Result<DualCatalog> {
    DualCatalog::enumerate(group, cutoff)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub index: Vec<i64>,
    pub dim: usize,
    pub casimir: f64,
}

/// JSON form of a catalog: `{ group, cutoff, labels: [{index, dim, casimir}] }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogFile {
    pub group: GroupKind,
    pub cutoff: f64,
    #[serde(default, skip_serializing_if = "LabelSubset::is_all")]
    pub subset: LabelSubset,
    pub labels: Vec<LabelRecord>,
}

impl CatalogFile {
    /// Rebuilds the catalog and checks the stored labels agree with it.
    pub fn into_catalog(self) -> Result<DualCatalog> {
        let catalog = DualCatalog::enumerate_subset(self.group.clone(), self.cutoff, self.subset)?;
        if catalog.to_file() != self {
            return Err(Error::InvalidGroup(
                "catalog file labels do not match the enumeration of its group and cutoff".into(),
            ));
        }
        Ok(catalog)
    }
}
