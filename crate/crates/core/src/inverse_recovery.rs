//! Forward map to singular triples, exact recovery of band-limited symbols,
//! Tikhonov-regularized recovery from noisy triples, and the δ-stability scan.
//!
//! Recovery is two-step: every triple is attributed to the block `(π, ρ)` that
//! carries at least [`ATTRIBUTION_MASS`] of both its vectors' squared mass, the
//! weighted blocks are reassembled from the attributed triples, and each block
//! is then solved in closed form.

use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dual_catalog::{CatalogRef, DualCatalog, Weight};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector};
use crate::operator_assembly::{assemble, to_dense, BlockOperator};
use crate::registry::{Named, Registry};
use crate::symbol_space::{difference, hs_sum_norm, BlockKey, Symbol};

/// Share of a vector's squared mass that must sit in one block's index range.
pub const ATTRIBUTION_MASS: f64 = 0.99;

/// Triples with `s <= DROP_RATIO * σ_max` carry no recoverable information and
/// are left out of the forward map.
pub const DROP_RATIO: f64 = 1e-12;

const UNIT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SingularTriple {
    pub s: f64,
    pub u: CVector,
    pub v: CVector,
}

/// Singular triples of an operator between two catalogs, descending in `s`,
/// with the block each triple is attributed to (if any).
#[derive(Debug, Clone)]
pub struct SpectralData {
    domain: Arc<DualCatalog>,
    codomain: Arc<DualCatalog>,
    triples: Vec<SingularTriple>,
    attribution: Vec<Option<BlockKey>>,
}

fn block_mass_owner(cat: &DualCatalog, x: &CVector) -> Option<usize> {
    let mut mass = vec![0.0; cat.len()];
    for (i, z) in x.iter().enumerate() {
        mass[cat.owner_of(i)?] += z.norm_sqr();
    }
    let total: f64 = mass.iter().sum();
    mass.iter().position(|&m| m >= ATTRIBUTION_MASS * total)
}

impl SpectralData {
    /// Validates shapes, ordering and unit norms, then attributes every triple.
    pub fn new(
        domain: Arc<DualCatalog>,
        codomain: Arc<DualCatalog>,
        triples: Vec<SingularTriple>,
    ) -> Result<Self> {
        let (n_out, n_in) = (codomain.dense_dim(), domain.dense_dim());
        for (k, t) in triples.iter().enumerate() {
            if t.u.len() != n_out {
                return Err(Error::DimensionMismatch {
                    expected: n_out,
                    found: t.u.len(),
                });
            }
            if t.v.len() != n_in {
                return Err(Error::DimensionMismatch {
                    expected: n_in,
                    found: t.v.len(),
                });
            }
            if !(t.s.is_finite() && t.s >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "triple {k} has singular value {}",
                    t.s
                )));
            }
            for (name, x) in [("u", &t.u), ("v", &t.v)] {
                if (x.norm() - 1.0).abs() > UNIT_TOLERANCE {
                    return Err(Error::InvalidParameter(format!(
                        "triple {k}: {name} has norm {}, expected 1",
                        x.norm()
                    )));
                }
            }
        }
        if triples.windows(2).any(|w| w[1].s > w[0].s) {
            return Err(Error::InvalidParameter(
                "singular values must be sorted in descending order".into(),
            ));
        }
        let attribution = triples
            .iter()
            .map(|t| {
                Some((
                    block_mass_owner(&codomain, &t.u)?,
                    block_mass_owner(&domain, &t.v)?,
                ))
            })
            .collect();
        Ok(Self {
            domain,
            codomain,
            triples,
            attribution,
        })
    }

    pub fn domain(&self) -> &Arc<DualCatalog> {
        &self.domain
    }

    pub fn codomain(&self) -> &Arc<DualCatalog> {
        &self.codomain
    }

    pub fn triples(&self) -> &[SingularTriple] {
        &self.triples
    }

    pub fn attribution(&self) -> &[Option<BlockKey>] {
        &self.attribution
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn singular_values(&self) -> Vec<f64> {
        self.triples.iter().map(|t| t.s).collect()
    }

    /// First triple without a block, as the error recovery reports.
    pub fn check_attributed(&self) -> Result<()> {
        match self.attribution.iter().position(Option::is_none) {
            None => Ok(()),
            Some(triple) => Err(Error::Unattributed {
                triple,
                value: self.triples[triple].s,
            }),
        }
    }

    /// `T(π, ρ) = Σ s · u|_π · v|_ρ^H` over the triples attributed to each block.
    pub fn reassemble_blocks(&self) -> Result<Vec<(BlockKey, CMatrix)>> {
        self.check_attributed()?;
        let mut blocks: std::collections::BTreeMap<BlockKey, CMatrix> = Default::default();
        for (t, key) in self.triples.iter().zip(&self.attribution) {
            let (pi, rho) = key.expect("checked above");
            let rows = self.codomain.range(pi);
            let cols = self.domain.range(rho);
            let u = t.u.rows(rows.start, rows.len());
            let v = t.v.rows(cols.start, cols.len());
            let term = (u * v.adjoint()).map(|z| z * t.s);
            blocks
                .entry((pi, rho))
                .and_modify(|b| *b += &term)
                .or_insert(term);
        }
        Ok(blocks.into_iter().collect())
    }

    pub fn to_file(&self) -> SpectralDataFile {
        let split = |x: &CVector| -> (Vec<f64>, Vec<f64>) {
            (x.iter().map(|z| z.re).collect(), x.iter().map(|z| z.im).collect())
        };
        SpectralDataFile {
            domain: self.domain.catalog_ref(),
            codomain: self.codomain.catalog_ref(),
            triples: self
                .triples
                .iter()
                .map(|t| {
                    let (u_re, u_im) = split(&t.u);
                    let (v_re, v_im) = split(&t.v);
                    TripleRecord {
                        s: t.s,
                        u_re,
                        u_im,
                        v_re,
                        v_im,
                    }
                })
                .collect(),
            attribution: Some(
                self.attribution
                    .iter()
                    .map(|a| {
                        a.map(|(pi, rho)| BlockRef {
                            pi: self.codomain.label(pi).index().to_vec(),
                            rho: self.domain.label(rho).index().to_vec(),
                        })
                    })
                    .collect(),
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripleRecord {
    pub s: f64,
    pub u_re: Vec<f64>,
    pub u_im: Vec<f64>,
    pub v_re: Vec<f64>,
    pub v_im: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockRef {
    pub pi: Vec<i64>,
    pub rho: Vec<i64>,
}

/// Spectral data JSON. The attribution is recomputed on load; when present in
/// the file it must agree with the recomputed one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralDataFile {
    pub domain: CatalogRef,
    pub codomain: CatalogRef,
    pub triples: Vec<TripleRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attribution: Option<Vec<Option<BlockRef>>>,
}

impl SpectralDataFile {
    pub fn into_data(self) -> Result<SpectralData> {
        let domain = Arc::new(self.domain.build()?);
        let codomain = if self.codomain == self.domain {
            Arc::clone(&domain)
        } else {
            Arc::new(self.codomain.build()?)
        };
        let join = |re: &[f64], im: &[f64]| -> Result<CVector> {
            if re.len() != im.len() {
                return Err(Error::DimensionMismatch {
                    expected: re.len(),
                    found: im.len(),
                });
            }
            Ok(CVector::from_iterator(
                re.len(),
                re.iter().zip(im).map(|(&a, &b)| Complex64::new(a, b)),
            ))
        };
        let triples = self
            .triples
            .iter()
            .map(|t| {
                Ok(SingularTriple {
                    s: t.s,
                    u: join(&t.u_re, &t.u_im)?,
                    v: join(&t.v_re, &t.v_im)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let data = SpectralData::new(domain, codomain, triples)?;
        if let Some(claimed) = self.attribution {
            let recomputed = data.to_file().attribution.unwrap_or_default();
            if claimed != recomputed {
                return Err(Error::InvalidParameter(
                    "stored attribution disagrees with the block-mass rule".into(),
                ));
            }
        }
        Ok(data)
    }
}

/// Full SVD of the dense operator, dropping numerically zero triples.
pub fn forward(op: &BlockOperator) -> Result<SpectralData> {
    let dec = linalg::svd(&to_dense(op)?)?;
    let top = dec.values.first().copied().unwrap_or(0.0);
    let triples = dec
        .values
        .iter()
        .enumerate()
        .take_while(|&(_, &s)| top > 0.0 && s > DROP_RATIO * top)
        .map(|(k, &s)| SingularTriple {
            s,
            u: dec.u.column(k).into_owned(),
            v: dec.v.column(k).into_owned(),
        })
        .collect();
    SpectralData::new(Arc::clone(op.domain()), Arc::clone(op.codomain()), triples)
}

fn weight_scale(data: &SpectralData, mu: &Weight, nu: &Weight, (pi, rho): BlockKey) -> Result<f64> {
    Ok(mu.eval(data.codomain.label(pi))? * nu.eval(data.domain.label(rho))?)
}

/// Exact inverse: reassembled blocks divided by `μ(π) ν(ρ)`.
pub fn recover_bandlimited(data: &SpectralData, mu: &Weight, nu: &Weight) -> Result<Symbol> {
    let mut sym = Symbol::empty(Arc::clone(&data.domain), Arc::clone(&data.codomain));
    for (key, t) in data.reassemble_blocks()? {
        let scale = weight_scale(data, mu, nu, key)?;
        sym.insert(key, t.map(|z| z / scale))?;
    }
    Ok(sym)
}

/// Blockwise closed-form minimizer of `‖c·a − T‖²_HS + α·penalty(a)` where `c = μ(π)ν(ρ)`.
pub trait Penalty: Named + Send + Sync {
    fn solve(&self, t: &CMatrix, scale: f64, alpha: f64) -> CMatrix;
}

/// Penalty `α‖a‖²_HS`: `a = c·T / (c² + α)`.
pub struct Unweighted;

/// Penalty `α‖c·a‖²_HS`: `a = T / (c (1 + α))`.
pub struct Weighted;

impl Named for Unweighted {
    fn name(&self) -> &'static str {
        "unweighted"
    }
}

impl Penalty for Unweighted {
    fn solve(&self, t: &CMatrix, scale: f64, alpha: f64) -> CMatrix {
        let f = scale / (scale * scale + alpha);
        t.map(|z| z * f)
    }
}

impl Named for Weighted {
    fn name(&self) -> &'static str {
        "weighted"
    }
}

impl Penalty for Weighted {
    fn solve(&self, t: &CMatrix, scale: f64, alpha: f64) -> CMatrix {
        let f = 1.0 / (scale * (1.0 + alpha));
        t.map(|z| z * f)
    }
}

pub const DEFAULT_PENALTY: &str = "unweighted";

pub fn penalty_registry() -> Registry<dyn Penalty> {
    let mut reg: Registry<dyn Penalty> = Registry::new("penalty");
    reg.register(Box::new(Unweighted)).register(Box::new(Weighted));
    reg
}

fn check_nonnegative(name: &str, x: f64) -> Result<()> {
    if !(x.is_finite() && x >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "{name} must be finite and >= 0, got {x}"
        )));
    }
    Ok(())
}

pub fn tikhonov_recover(
    data: &SpectralData,
    mu: &Weight,
    nu: &Weight,
    alpha: f64,
    penalty: &dyn Penalty,
) -> Result<Symbol> {
    check_nonnegative("alpha", alpha)?;
    let mut sym = Symbol::empty(Arc::clone(&data.domain), Arc::clone(&data.codomain));
    for (key, t) in data.reassemble_blocks()? {
        let scale = weight_scale(data, mu, nu, key)?;
        sym.insert(key, penalty.solve(&t, scale, alpha))?;
    }
    Ok(sym)
}

fn complex_gaussian(rng: &mut ChaCha8Rng, n: usize) -> CVector {
    CVector::from_fn(n, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im)
    })
}

/// Modified Gram-Schmidt in place, in column order.
fn orthonormalize(vectors: &mut [CVector]) -> Result<()> {
    for k in 0..vectors.len() {
        let (done, rest) = vectors.split_at_mut(k);
        let x = &mut rest[0];
        for q in done.iter() {
            let proj = q.dotc(x);
            *x -= q * proj;
        }
        let norm = x.norm();
        if norm <= 1e-14 || norm.is_nan() {
            return Err(Error::InvalidParameter(
                "perturbed vectors became linearly dependent".into(),
            ));
        }
        *x /= Complex64::new(norm, 0.0);
    }
    Ok(())
}

/// Noisy copy: `s += δ·N(0,1)` (clamped at 0, re-sorted), each vector moved by
/// a Gaussian direction of length `δ`, then both families re-orthonormalized
/// and the triples re-attributed.
pub fn perturb(data: &SpectralData, delta: f64, rng: &mut ChaCha8Rng) -> Result<SpectralData> {
    check_nonnegative("delta", delta)?;
    if delta == 0.0 {
        return Ok(data.clone());
    }
    let mut triples: Vec<SingularTriple> = data
        .triples
        .iter()
        .map(|t| {
            let ds: f64 = StandardNormal.sample(rng);
            let mut moved = |x: &CVector| {
                let g = complex_gaussian(rng, x.len());
                let n = g.norm();
                if n > 0.0 {
                    x + g * Complex64::new(delta / n, 0.0)
                } else {
                    x.clone()
                }
            };
            let u = moved(&t.u);
            let v = moved(&t.v);
            SingularTriple {
                s: (t.s + delta * ds).max(0.0),
                u,
                v,
            }
        })
        .collect();
    let mut us: Vec<CVector> = triples.iter().map(|t| t.u.clone()).collect();
    let mut vs: Vec<CVector> = triples.iter().map(|t| t.v.clone()).collect();
    orthonormalize(&mut us)?;
    orthonormalize(&mut vs)?;
    for ((t, u), v) in triples.iter_mut().zip(us).zip(vs) {
        t.u = u;
        t.v = v;
    }
    triples.sort_by(|a, b| b.s.total_cmp(&a.s));
    SpectralData::new(Arc::clone(&data.domain), Arc::clone(&data.codomain), triples)
}

/// Settings shared by recovery experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryConfig {
    pub cutoff: f64,
    pub alpha: f64,
    pub noise_delta: f64,
    pub seed: u64,
    #[serde(default = "default_penalty")]
    pub penalty: String,
}

fn default_penalty() -> String {
    DEFAULT_PENALTY.to_string()
}

impl RecoveryConfig {
    pub fn validate(&self) -> Result<()> {
        check_nonnegative("cutoff", self.cutoff)?;
        check_nonnegative("alpha", self.alpha)?;
        check_nonnegative("noise_delta", self.noise_delta)?;
        penalty_registry().get(&self.penalty).map(|_| ())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityRow {
    pub delta: f64,
    pub alpha: f64,
    pub mean_error: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityScan {
    pub penalty: String,
    pub trials: usize,
    pub seed: u64,
    pub rows: Vec<StabilityRow>,
    /// Least-squares slope of `log mean_error` against `log δ` over rows with
    /// `δ > 0`; `None` with fewer than two such rows.
    pub slope: Option<f64>,
}

/// Least-squares slope of `y` on `x`.
pub fn fit_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Recovery error `‖a^α − a‖` (unweighted HS-sum norm) under noise of size δ
/// with `α = δ²`, averaged over `trials` seeded perturbations per δ.
pub fn stability_scan(
    truth: &Symbol,
    mu: &Weight,
    nu: &Weight,
    deltas: &[f64],
    trials: usize,
    seed: u64,
    penalty: &dyn Penalty,
) -> Result<StabilityScan> {
    if trials == 0 {
        return Err(Error::InvalidParameter("need at least one trial per delta".into()));
    }
    for &d in deltas {
        check_nonnegative("delta", d)?;
    }
    let op = assemble(truth.clone(), mu.clone(), nu.clone())?;
    let clean = forward(&op)?;
    clean.check_attributed()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let alpha = delta * delta;
        let errors = (0..trials)
            .map(|_| {
                let noisy = perturb(&clean, delta, &mut rng)?;
                let rec = tikhonov_recover(&noisy, mu, nu, alpha, penalty)?;
                hs_sum_norm(&difference(&rec, truth)?, &Weight::unit(), &Weight::unit())
            })
            .collect::<Result<Vec<f64>>>()?;
        let n = errors.len() as f64;
        let mean_error = errors.iter().sum::<f64>() / n;
        let std_error = if errors.len() > 1 {
            (errors.iter().map(|e| (e - mean_error).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        rows.push(StabilityRow {
            delta,
            alpha,
            mean_error,
            std_error,
        });
    }
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.delta > 0.0 && r.mean_error > 0.0)
        .map(|r| (r.delta.ln(), r.mean_error.ln()))
        .collect();
    Ok(StabilityScan {
        penalty: penalty.name().to_string(),
        trials,
        seed,
        rows,
        slope: fit_slope(&points),
    })
}
