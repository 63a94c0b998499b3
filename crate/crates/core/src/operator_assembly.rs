//! The weighted block operator `T(π, ρ) = μ(π) a(π, ρ) ν(ρ)`.
//!
//! Domain coordinates are laid out by the domain catalog (one copy of `V_ρ`
//! per `ρ`), codomain coordinates by the codomain catalog. The dense matrix is
//! `N_out x N_in` with every stored block placed at its catalog offsets.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dual_catalog::{CatalogRef, DualCatalog, Weight};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};
use crate::symbol_space::{BlockKey, Symbol};

/// Upper bound on `N_out * N_in` for dense materialization.
pub const MAX_DENSE_ENTRIES: usize = 16_000_000;

#[derive(Debug, Clone)]
pub struct BlockOperator {
    symbol: Symbol,
    mu: Weight,
    nu: Weight,
    mu_values: Vec<f64>,
    nu_values: Vec<f64>,
    blocks: BTreeMap<BlockKey, CMatrix>,
}

impl BlockOperator {
    pub fn symbol(&self) -> &Symbol {
        &self.symbol
    }

    pub fn mu(&self) -> &Weight {
        &self.mu
    }

    pub fn nu(&self) -> &Weight {
        &self.nu
    }

    pub fn domain(&self) -> &Arc<DualCatalog> {
        self.symbol.domain()
    }

    pub fn codomain(&self) -> &Arc<DualCatalog> {
        self.symbol.codomain()
    }

    /// Stored weighted blocks.
    pub fn blocks(&self) -> &BTreeMap<BlockKey, CMatrix> {
        &self.blocks
    }

    /// `μ(π)` for codomain position `pi`.
    pub fn mu_at(&self, pi: usize) -> f64 {
        self.mu_values[pi]
    }

    /// `ν(ρ)` for domain position `rho`.
    pub fn nu_at(&self, rho: usize) -> f64 {
        self.nu_values[rho]
    }

    /// `(N_out, N_in)`.
    pub fn shape(&self) -> (usize, usize) {
        (self.codomain().dense_dim(), self.domain().dense_dim())
    }

    pub fn is_zero(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Operator on smaller catalogs of the same groups, keeping the surviving blocks.
    pub fn truncate(&self, domain_cutoff: f64, codomain_cutoff: f64) -> Result<BlockOperator> {
        let domain = Arc::new(self.domain().truncate(domain_cutoff)?);
        let codomain = if Arc::ptr_eq(self.domain(), self.codomain())
            && domain_cutoff == codomain_cutoff
        {
            Arc::clone(&domain)
        } else {
            Arc::new(self.codomain().truncate(codomain_cutoff)?)
        };
        let symbol = self.symbol.restrict(domain, codomain);
        assemble(symbol, self.mu.clone(), self.nu.clone())
    }
}

/// Evaluates the weights on both catalogs and scales every stored block.
pub fn assemble(symbol: Symbol, mu: Weight, nu: Weight) -> Result<BlockOperator> {
    let mu_values = symbol
        .codomain()
        .labels()
        .iter()
        .map(|l| mu.eval(l))
        .collect::<Result<Vec<_>>>()?;
    let nu_values = symbol
        .domain()
        .labels()
        .iter()
        .map(|l| nu.eval(l))
        .collect::<Result<Vec<_>>>()?;
    let blocks = symbol
        .blocks()
        .iter()
        .map(|(&(pi, rho), a)| {
            let scale = mu_values[pi] * nu_values[rho];
            ((pi, rho), a.map(|z| z * scale))
        })
        .collect();
    Ok(BlockOperator {
        symbol,
        mu,
        nu,
        mu_values,
        nu_values,
        blocks,
    })
}

/// Blockwise matrix-vector product.
pub fn apply(op: &BlockOperator, fhat: &CVector) -> Result<CVector> {
    let (n_out, n_in) = op.shape();
    if fhat.len() != n_in {
        return Err(Error::DimensionMismatch {
            expected: n_in,
            found: fhat.len(),
        });
    }
    let mut out = CVector::zeros(n_out);
    for (&(pi, rho), block) in &op.blocks {
        let cols = op.domain().range(rho);
        let rows = op.codomain().range(pi);
        let x = fhat.rows(cols.start, cols.len());
        let mut y = out.rows_mut(rows.start, rows.len());
        y.gemv(Complex64::new(1.0, 0.0), block, &x, Complex64::new(1.0, 0.0));
    }
    Ok(out)
}

/// `A^*`: symbol `ã(ρ, π) = a(π, ρ)^*` with weights `(ν, μ)`.
pub fn adjoint(op: &BlockOperator) -> BlockOperator {
    BlockOperator {
        symbol: op.symbol.adjoint(),
        mu: op.nu.clone(),
        nu: op.mu.clone(),
        mu_values: op.nu_values.clone(),
        nu_values: op.mu_values.clone(),
        blocks: op
            .blocks
            .iter()
            .map(|(&(pi, rho), b)| ((rho, pi), b.adjoint()))
            .collect(),
    }
}

pub fn to_dense(op: &BlockOperator) -> Result<CMatrix> {
    let (rows, cols) = op.shape();
    let size = rows.saturating_mul(cols);
    if size > MAX_DENSE_ENTRIES {
        return Err(Error::ResourceGuard {
            size,
            limit: MAX_DENSE_ENTRIES,
        });
    }
    let mut dense = CMatrix::zeros(rows, cols);
    for (&(pi, rho), block) in &op.blocks {
        let r = op.codomain().range(pi);
        let c = op.domain().range(rho);
        dense
            .view_mut((r.start, c.start), (r.len(), c.len()))
            .copy_from(block);
    }
    Ok(dense)
}

/// JSON header accompanying a dense CSV export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseHeader {
    pub rows: usize,
    pub cols: usize,
    pub domain: CatalogRef,
    pub codomain: CatalogRef,
}

impl DenseHeader {
    pub fn for_operator(op: &BlockOperator) -> Self {
        let (rows, cols) = op.shape();
        Self {
            rows,
            cols,
            domain: op.domain().catalog_ref(),
            codomain: op.codomain().catalog_ref(),
        }
    }
}

/// One CSV line per matrix row: `re,im,re,im,...`.
pub fn write_dense_csv<W: Write>(m: &CMatrix, mut out: W) -> Result<()> {
    for i in 0..m.nrows() {
        let line = (0..m.ncols())
            .map(|j| format!("{:?},{:?}", m[(i, j)].re, m[(i, j)].im))
            .collect::<Vec<_>>()
            .join(",");
        writeln!(out, "{line}")?;
    }
    Ok(())
}
