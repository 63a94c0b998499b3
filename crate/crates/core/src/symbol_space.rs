//! Matrix-valued symbols `a(π, ρ)` and the norms used on them.
//!
//! Blocks are keyed by catalog position `(π, ρ)`: `π` indexes the codomain
//! catalog and `ρ` the domain catalog. Absent blocks are zero.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dual_catalog::{CatalogRef, DualCatalog, IrrepLabel, Weight};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};

/// `(π position in codomain, ρ position in domain)`.
pub type BlockKey = (usize, usize);

#[derive(Debug, Clone)]
pub struct Symbol {
    domain: Arc<DualCatalog>,
    codomain: Arc<DualCatalog>,
    blocks: BTreeMap<BlockKey, CMatrix>,
}

impl Symbol {
    pub fn empty(domain: Arc<DualCatalog>, codomain: Arc<DualCatalog>) -> Self {
        Self {
            domain,
            codomain,
            blocks: BTreeMap::new(),
        }
    }

    pub fn domain(&self) -> &Arc<DualCatalog> {
        &self.domain
    }

    pub fn codomain(&self) -> &Arc<DualCatalog> {
        &self.codomain
    }

    pub fn blocks(&self) -> &BTreeMap<BlockKey, CMatrix> {
        &self.blocks
    }

    pub fn block(&self, key: BlockKey) -> Option<&CMatrix> {
        self.blocks.get(&key)
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    /// Expected `d_π x d_ρ` shape of block `(π, ρ)`.
    pub fn block_shape(&self, (pi, rho): BlockKey) -> (usize, usize) {
        (self.codomain.label(pi).dim(), self.domain.label(rho).dim())
    }

    pub fn insert(&mut self, key: BlockKey, block: CMatrix) -> Result<()> {
        let (pi, rho) = key;
        if pi >= self.codomain.len() || rho >= self.domain.len() {
            return Err(Error::InvalidParameter(format!(
                "block key ({pi}, {rho}) outside catalogs of sizes ({}, {})",
                self.codomain.len(),
                self.domain.len()
            )));
        }
        self.check_shape(key, &block)?;
        self.blocks.insert(key, block);
        Ok(())
    }

    pub fn insert_by_index(&mut self, pi: &[i64], rho: &[i64], block: CMatrix) -> Result<()> {
        let key = (
            self.codomain.require_position(pi)?,
            self.domain.require_position(rho)?,
        );
        self.insert(key, block)
    }

    fn check_shape(&self, key: BlockKey, block: &CMatrix) -> Result<()> {
        let expected = self.block_shape(key);
        if block.shape() != expected {
            return Err(Error::ShapeMismatch {
                pi: self.codomain.label(key.0).index().to_vec(),
                rho: self.domain.label(key.1).index().to_vec(),
                expected,
                found: block.shape(),
            });
        }
        Ok(())
    }

    /// `c · a`.
    pub fn scaled(&self, c: Complex64) -> Symbol {
        Symbol {
            domain: Arc::clone(&self.domain),
            codomain: Arc::clone(&self.codomain),
            blocks: self.blocks.iter().map(|(k, b)| (*k, b * c)).collect(),
        }
    }

    /// `ã(ρ, π) = a(π, ρ)^*` with the catalogs swapped.
    pub fn adjoint(&self) -> Symbol {
        Symbol {
            domain: Arc::clone(&self.codomain),
            codomain: Arc::clone(&self.domain),
            blocks: self
                .blocks
                .iter()
                .map(|(&(pi, rho), b)| ((rho, pi), b.adjoint()))
                .collect(),
        }
    }

    /// Blocks whose labels survive in the smaller catalogs.
    pub fn restrict(&self, domain: Arc<DualCatalog>, codomain: Arc<DualCatalog>) -> Symbol {
        let blocks = self
            .blocks
            .iter()
            .filter_map(|(&(pi, rho), b)| {
                let p = codomain.position(self.codomain.label(pi).index())?;
                let r = domain.position(self.domain.label(rho).index())?;
                Some(((p, r), b.clone()))
            })
            .collect();
        Symbol {
            domain,
            codomain,
            blocks,
        }
    }

    /// True when every `π` and every `ρ` occurs in at most one stored block.
    pub fn is_partial_matching(&self) -> bool {
        let mut rows = std::collections::HashSet::new();
        let mut cols = std::collections::HashSet::new();
        self.blocks
            .keys()
            .all(|&(pi, rho)| rows.insert(pi) && cols.insert(rho))
    }

    pub fn to_file(&self) -> SymbolFile {
        SymbolFile {
            domain: self.domain.catalog_ref(),
            codomain: self.codomain.catalog_ref(),
            blocks: self
                .blocks
                .iter()
                .map(|(&(pi, rho), b)| BlockRecord {
                    pi_index: self.codomain.label(pi).index().to_vec(),
                    rho_index: self.domain.label(rho).index().to_vec(),
                    re: rows_of(b, |z| z.re),
                    im: rows_of(b, |z| z.im),
                })
                .collect(),
        }
    }
}

fn rows_of(m: &CMatrix, part: impl Fn(&Complex64) -> f64) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| part(&m[(i, j)])).collect())
        .collect()
}

/// Symbol JSON: row-major real and imaginary parts per block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolFile {
    pub domain: CatalogRef,
    pub codomain: CatalogRef,
    pub blocks: Vec<BlockRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockRecord {
    pub pi_index: Vec<i64>,
    pub rho_index: Vec<i64>,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl SymbolFile {
    pub fn into_symbol(self) -> Result<Symbol> {
        let domain = Arc::new(self.domain.build()?);
        let codomain = if self.codomain == self.domain {
            Arc::clone(&domain)
        } else {
            Arc::new(self.codomain.build()?)
        };
        let mut sym = Symbol::empty(domain, codomain);
        for rec in self.blocks {
            let rows = rec.re.len();
            let cols = rec.re.first().map_or(0, Vec::len);
            let ragged = rec.im.len() != rows
                || rec.re.iter().chain(rec.im.iter()).any(|r| r.len() != cols);
            if ragged {
                return Err(Error::InvalidParameter(format!(
                    "block ({:?}, {:?}) has ragged or mismatched re/im rows",
                    rec.pi_index, rec.rho_index
                )));
            }
            let block = CMatrix::from_fn(rows, cols, |i, j| {
                Complex64::new(rec.re[i][j], rec.im[i][j])
            });
            sym.insert_by_index(&rec.pi_index, &rec.rho_index, block)?;
        }
        Ok(sym)
    }
}

/// Symbol-class parameters: decay exponents `m, n` and weights `μ, ν`.
#[derive(Debug, Clone)]
pub struct SymbolClassParams {
    pub m: f64,
    pub n: f64,
    pub mu: Weight,
    pub nu: Weight,
}

impl SymbolClassParams {
    pub fn new(m: f64, n: f64, mu: Weight, nu: Weight) -> Result<Self> {
        for (name, v) in [("m", m), ("n", n)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "decay exponent {name} must be finite and >= 0, got {v}"
                )));
            }
        }
        Ok(Self { m, n, mu, nu })
    }

    pub fn unweighted(m: f64, n: f64) -> Result<Self> {
        Self::new(m, n, Weight::unit(), Weight::unit())
    }
}

/// `μ(π)·ν(ρ)` for the block at `key`.
pub(crate) fn block_scale(sym: &Symbol, mu: &Weight, nu: &Weight, key: BlockKey) -> Result<f64> {
    let m = mu.eval(sym.codomain.label(key.0))?;
    let n = nu.eval(sym.domain.label(key.1))?;
    Ok(m * n)
}

pub(crate) fn weighted_block_at(
    sym: &Symbol,
    mu: &Weight,
    nu: &Weight,
    key: BlockKey,
) -> Result<CMatrix> {
    let (rows, cols) = sym.block_shape(key);
    match sym.blocks.get(&key) {
        None => Ok(CMatrix::zeros(rows, cols)),
        Some(block) => {
            sym.check_shape(key, block)?;
            let scale = block_scale(sym, mu, nu, key)?;
            Ok(block.map(|z| z * scale))
        }
    }
}

/// `μ(π) a(π, ρ) ν(ρ)`, zero when the block is absent.
pub fn weighted_block(
    sym: &Symbol,
    mu: &Weight,
    nu: &Weight,
    pi: &IrrepLabel,
    rho: &IrrepLabel,
) -> Result<CMatrix> {
    let key = (
        sym.codomain.require_position(pi.index())?,
        sym.domain.require_position(rho.index())?,
    );
    weighted_block_at(sym, mu, nu, key)
}

/// `sup (1+λ_π)^{m/2} (1+λ_ρ)^{n/2} ‖μ(π) a(π,ρ) ν(ρ)‖_op` over the stored blocks.
pub fn class_norm(sym: &Symbol, params: &SymbolClassParams) -> Result<f64> {
    let mut best = 0.0f64;
    for &key in sym.blocks.keys() {
        let block = weighted_block_at(sym, &params.mu, &params.nu, key)?;
        let lam_pi = sym.codomain.label(key.0).casimir();
        let lam_rho = sym.domain.label(key.1).casimir();
        let decay = (1.0 + lam_pi).powf(params.m / 2.0) * (1.0 + lam_rho).powf(params.n / 2.0);
        best = best.max(decay * linalg::operator_norm(&block)?);
    }
    Ok(best)
}

/// `(Σ ‖μ(π) a(π,ρ) ν(ρ)‖_HS²)^{1/2}`, the Hilbert-space symbol norm used as a
/// Tikhonov penalty and as the recovery error metric.
pub fn hs_sum_norm(sym: &Symbol, mu: &Weight, nu: &Weight) -> Result<f64> {
    let mut total = 0.0;
    for &key in sym.blocks.keys() {
        total += linalg::hs_norm_sq(&weighted_block_at(sym, mu, nu, key)?);
    }
    Ok(total.sqrt())
}

/// `a - b` over the union of both supports. Both symbols must share catalogs.
pub fn difference(a: &Symbol, b: &Symbol) -> Result<Symbol> {
    if a.domain != b.domain || a.codomain != b.codomain {
        return Err(Error::InvalidParameter(
            "symbols live on different catalogs".into(),
        ));
    }
    let mut out = a.clone();
    for (&key, block) in &b.blocks {
        let entry = out
            .blocks
            .entry(key)
            .or_insert_with(|| CMatrix::zeros(block.nrows(), block.ncols()));
        *entry -= block;
    }
    Ok(out)
}

/// Largest entrywise modulus of `a - b`.
pub fn max_entry_error(a: &Symbol, b: &Symbol) -> Result<f64> {
    Ok(difference(a, b)?
        .blocks
        .values()
        .flat_map(|m| m.iter())
        .map(|z| z.norm())
        .fold(0.0, f64::max))
}

/// Classical Hankel pattern `a(n, m) = φ̂(n + m)` over circle catalogs.
pub fn hankel_symbol_from_fourier(
    coeffs: &BTreeMap<i64, Complex64>,
    domain: Arc<DualCatalog>,
    codomain: Arc<DualCatalog>,
) -> Result<Symbol> {
    for cat in [&domain, &codomain] {
        if !cat.group().is_torus(1) {
            return Err(Error::InvalidGroup(format!(
                "Fourier-coefficient symbols need circle catalogs, got {:?}",
                cat.group()
            )));
        }
    }
    let mut sym = Symbol::empty(domain, codomain);
    for pi in 0..sym.codomain.len() {
        for rho in 0..sym.domain.len() {
            let n = sym.codomain.label(pi).index()[0];
            let m = sym.domain.label(rho).index()[0];
            if let Some(&c) = coeffs.get(&(n + m)) {
                sym.blocks.insert((pi, rho), CMatrix::from_element(1, 1, c));
            }
        }
    }
    Ok(sym)
}

/// Recovers `φ̂` from a circle symbol of the form `a(n, m) = φ̂(n + m)`.
/// `None` unless both catalogs are circle catalogs and every pair `(n, m)`
/// agrees with a single coefficient per anti-diagonal (absent blocks count as 0).
pub fn hankel_coefficients(sym: &Symbol) -> Option<BTreeMap<i64, Complex64>> {
    if !(sym.domain.group().is_torus(1) && sym.codomain.group().is_torus(1)) {
        return None;
    }
    let entry = |pi: usize, rho: usize| {
        sym.blocks
            .get(&(pi, rho))
            .map_or(Complex64::new(0.0, 0.0), |b| b[(0, 0)])
    };
    let mut coeffs: BTreeMap<i64, Complex64> = BTreeMap::new();
    for pi in 0..sym.codomain.len() {
        for rho in 0..sym.domain.len() {
            let k = sym.codomain.label(pi).index()[0] + sym.domain.label(rho).index()[0];
            let z = entry(pi, rho);
            if *coeffs.entry(k).or_insert(z) != z {
                return None;
            }
        }
    }
    coeffs.retain(|_, z| *z != Complex64::new(0.0, 0.0));
    Some(coeffs)
}

/// `a(π, π) = f(π) I` on a shared catalog.
pub fn diagonal_symbol(
    catalog: Arc<DualCatalog>,
    mut f: impl FnMut(&IrrepLabel) -> Complex64,
) -> Symbol {
    let mut sym = Symbol::empty(Arc::clone(&catalog), Arc::clone(&catalog));
    for (pos, label) in catalog.labels().iter().enumerate() {
        let d = label.dim();
        sym.blocks
            .insert((pos, pos), CMatrix::identity(d, d) * f(label));
    }
    sym
}

fn check_density(density: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&density) {
        return Err(Error::InvalidParameter(format!(
            "density must lie in [0, 1], got {density}"
        )));
    }
    Ok(())
}

fn complex_normal_block(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMatrix {
    let normal = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).expect("valid sigma");
    CMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(normal.sample(rng), normal.sample(rng))
    })
}

/// Each block present independently with probability `density`; entries are
/// standard complex normal (`E|z|² = 1`).
pub fn random_symbol(
    domain: Arc<DualCatalog>,
    codomain: Arc<DualCatalog>,
    density: f64,
    seed: u64,
) -> Result<Symbol> {
    check_density(density)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sym = Symbol::empty(domain, codomain);
    for pi in 0..sym.codomain.len() {
        for rho in 0..sym.domain.len() {
            if rng.random::<f64>() < density {
                let (r, c) = sym.block_shape((pi, rho));
                let block = complex_normal_block(&mut rng, r, c);
                sym.blocks.insert((pi, rho), block);
            }
        }
    }
    Ok(sym)
}

/// Random symbol whose support is a partial matching: codomain position `i` is
/// paired with a shuffled domain position and kept with probability `density`.
pub fn random_partial_matching(
    domain: Arc<DualCatalog>,
    codomain: Arc<DualCatalog>,
    density: f64,
    seed: u64,
) -> Result<Symbol> {
    check_density(density)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cols: Vec<usize> = (0..domain.len()).collect();
    cols.shuffle(&mut rng);
    let mut sym = Symbol::empty(domain, codomain);
    let pairs = sym.codomain.len().min(cols.len());
    for (pi, &rho) in cols.iter().enumerate().take(pairs) {
        if rng.random::<f64>() < density {
            let (r, c) = sym.block_shape((pi, rho));
            let block = complex_normal_block(&mut rng, r, c);
            sym.blocks.insert((pi, rho), block);
        }
    }
    Ok(sym)
}
