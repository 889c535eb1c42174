//! Linear cocycles over a subshift: one invertible block-diagonal matrix per
//! symbol, matrix products along periodic words, eigen-data with repeated-
//! eigenvalue bookkeeping, periodic Lyapunov exponents, and hyperbolicity
//! certificates.

use crate::linalg::{ScaledMat, SmallMat, EIGEN_EQ_REL_TOL};
use crate::sft::{PeriodicWord, SftSystem};
use num_complex::Complex64;
use serde::Serialize;

/// Generators with |det| below this are rejected as non-invertible.
pub const MIN_ABS_DET: f64 = 1e-12;

#[derive(Debug, thiserror::Error)]
pub enum CocycleError {
    #[error("dimension {0} not supported; use 2 or 3")]
    BadDimension(usize),
    #[error("split ({0},{1}) does not sum to the cocycle dimension")]
    BadSplit(usize, usize),
    #[error("expected {expected} generators, got {got}")]
    GeneratorCount { expected: usize, got: usize },
    #[error("generator {symbol} is numerically singular (|det| = {det:.3e})")]
    SingularGenerator { symbol: u8, det: f64 },
    #[error("generator {symbol} is not block-diagonal for split ({s},{u}): entry ({r},{c}) = {v}")]
    NotBlockDiagonal {
        symbol: u8,
        s: usize,
        u: usize,
        r: usize,
        c: usize,
        v: f64,
    },
    #[error("matrix is numerically singular (|det| = {0:.3e})")]
    NearSingular(f64),
    #[error("operation requires a 2-dimensional unstable block, split is ({0},{1})")]
    UnstableDimNot2(usize, usize),
    #[error("perturbation factor at site {site} has norm {norm:.6} exceeding budget {budget}")]
    BudgetExceeded { site: usize, norm: f64, budget: f64 },
    #[error("word length mismatch: cocycle over {expected} symbols, word uses symbol {symbol}")]
    SymbolOutOfRange { expected: usize, symbol: u8 },
}

/// Which block of the fiber an operation runs on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bundle {
    /// Whole fiber.
    Full,
    /// Stable block (first `s` coordinates).
    Stable,
    /// Unstable block (last `u` coordinates).
    Unstable,
}

/// A locally constant linear cocycle: one invertible matrix per symbol,
/// block-diagonal with respect to the designated stable/unstable split
/// (stable block first).
#[derive(Debug, Clone)]
pub struct LinearCocycle {
    dim: usize,
    split: (usize, usize),
    generators: Vec<SmallMat>,
}

impl LinearCocycle {
    pub fn new(
        dim: usize,
        split: (usize, usize),
        generators: Vec<SmallMat>,
    ) -> Result<Self, CocycleError> {
        if !(2..=3).contains(&dim) {
            return Err(CocycleError::BadDimension(dim));
        }
        let (s, u) = split;
        if s + u != dim {
            return Err(CocycleError::BadSplit(s, u));
        }
        if generators.is_empty() {
            return Err(CocycleError::GeneratorCount {
                expected: 1,
                got: 0,
            });
        }
        for (sym, g) in generators.iter().enumerate() {
            if g.dim() != dim {
                return Err(CocycleError::BadDimension(g.dim()));
            }
            let det = g.det();
            if det.abs() < MIN_ABS_DET {
                return Err(CocycleError::SingularGenerator {
                    symbol: sym as u8,
                    det,
                });
            }
            for r in 0..dim {
                for c in 0..dim {
                    let off_block = (r < s) != (c < s);
                    if off_block && g.get(r, c) != 0.0 {
                        return Err(CocycleError::NotBlockDiagonal {
                            symbol: sym as u8,
                            s,
                            u,
                            r,
                            c,
                            v: g.get(r, c),
                        });
                    }
                }
            }
        }
        Ok(LinearCocycle {
            dim,
            split,
            generators,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn split(&self) -> (usize, usize) {
        self.split
    }

    pub fn alphabet_size(&self) -> usize {
        self.generators.len()
    }

    pub fn generator(&self, symbol: u8) -> &SmallMat {
        &self.generators[symbol as usize]
    }

    /// Global perturbation mode: replace the generator of `symbol` with
    /// `factor * generator`, affecting every orbit through that symbol.
    /// `factor` must be block-diagonal and within `budget` of the identity
    /// in operator norm.
    pub fn with_perturbed_generator(
        &self,
        symbol: u8,
        factor: &SmallMat,
        budget: f64,
    ) -> Result<Self, CocycleError> {
        let dist = factor.sub(&SmallMat::identity(self.dim)).op_norm();
        if dist > budget {
            return Err(CocycleError::BudgetExceeded {
                site: symbol as usize,
                norm: dist,
                budget,
            });
        }
        let mut generators = self.generators.clone();
        generators[symbol as usize] = factor.mul(&generators[symbol as usize]);
        Self::new(self.dim, self.split, generators)
    }

    /// Extract the requested block of a matrix shaped like this cocycle's
    /// generators.
    pub fn block_of(&self, m: &SmallMat, bundle: Bundle) -> SmallMat {
        extract_block(m, self.split, bundle)
    }

    /// Scan all admissible words of length 1..=horizon and fit the least
    /// contraction rate: returns `(C, lambda)` with `C = 1` and `lambda` the
    /// sup over scanned words of the per-step geometric mean of stable norms
    /// and inverse unstable norms. Fails with a witness word when the sup
    /// reaches 1 (some scanned product does not contract).
    pub fn hyperbolicity_certificate(
        &self,
        sft: &SftSystem,
        horizon: usize,
        word_cap: u64,
    ) -> Result<HyperbolicityCertificate, HyperbolicityFailure> {
        assert!(horizon >= 1);
        let (s, u) = self.split;
        let mut lambda: f64 = 0.0;
        let mut witness: Option<(Vec<u8>, f64)> = None;
        let mut scanned: u64 = 0;
        for n in 1..=horizon {
            let words = sft
                .admissible_words(n)
                .map_err(|_| HyperbolicityFailure::ResourceCap(word_cap))?;
            for w in words {
                scanned += 1;
                if scanned > word_cap {
                    return Err(HyperbolicityFailure::ResourceCap(word_cap));
                }
                let mut rate: f64 = f64::NEG_INFINITY;
                if s > 0 {
                    let mut p = ScaledMat::identity(s);
                    for &sym in &w {
                        p.apply(&extract_block(
                            &self.generators[sym as usize],
                            self.split,
                            Bundle::Stable,
                        ));
                    }
                    rate = rate.max(p.m.op_norm().ln() + p.log_scale);
                }
                if u > 0 {
                    let mut p = ScaledMat::identity(u);
                    for &sym in &w {
                        p.apply(&extract_block(
                            &self.generators[sym as usize],
                            self.split,
                            Bundle::Unstable,
                        ));
                    }
                    // norm of the inverse of the unstable product
                    rate = rate.max(-(p.m.min_singular_value().ln() + p.log_scale));
                }
                let per_step = (rate / n as f64).exp();
                if per_step > lambda {
                    lambda = per_step;
                    if per_step >= 1.0 {
                        witness = Some((w.clone(), per_step));
                    }
                }
            }
        }
        if lambda < 1.0 {
            Ok(HyperbolicityCertificate {
                c: 1.0,
                lambda,
                horizon,
            })
        } else {
            let (word, rate) = witness.expect("lambda >= 1 implies a witness");
            Err(HyperbolicityFailure::NotContracting { word, rate })
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HyperbolicityCertificate {
    pub c: f64,
    pub lambda: f64,
    pub horizon: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum HyperbolicityFailure {
    #[error("no contraction at word {word:?}: per-step rate {rate}")]
    NotContracting { word: Vec<u8>, rate: f64 },
    #[error("scan exceeded the word cap of {0}")]
    ResourceCap(u64),
}

pub(crate) fn extract_block(m: &SmallMat, split: (usize, usize), bundle: Bundle) -> SmallMat {
    let (s, _u) = split;
    match bundle {
        Bundle::Full => *m,
        Bundle::Stable => {
            assert!(s >= 1, "no stable block");
            let mut b = SmallMat::zeros(s);
            for r in 0..s {
                for c in 0..s {
                    b.set(r, c, m.get(r, c));
                }
            }
            b
        }
        Bundle::Unstable => {
            let u = m.dim() - s;
            assert!(u >= 1, "no unstable block");
            let mut b = SmallMat::zeros(u);
            for r in 0..u {
                for c in 0..u {
                    b.set(r, c, m.get(s + r, s + c));
                }
            }
            b
        }
    }
}

/// Embed a block back into the ambient dimension as a block-diagonal matrix
/// acting as the identity on the complementary block.
pub fn embed_block(block: &SmallMat, dim: usize, split: (usize, usize), bundle: Bundle) -> SmallMat {
    let (s, _) = split;
    let mut m = SmallMat::identity(dim);
    match bundle {
        Bundle::Full => *block,
        Bundle::Stable => {
            for r in 0..block.dim() {
                for c in 0..block.dim() {
                    m.set(r, c, block.get(r, c));
                }
            }
            m
        }
        Bundle::Unstable => {
            for r in 0..block.dim() {
                for c in 0..block.dim() {
                    m.set(s + r, s + c, block.get(r, c));
                }
            }
            m
        }
    }
}

/// A periodic orbit together with the matrix factors the cocycle attaches to
/// its sites. Perturbations produce new factor lists; generators are never
/// mutated. `laps` tracks repeated traversals of the underlying primitive
/// orbit.
#[derive(Debug, Clone)]
pub struct OrbitCocycle {
    word: PeriodicWord,
    laps: usize,
    dim: usize,
    split: (usize, usize),
    factors: Vec<SmallMat>,
}

impl OrbitCocycle {
    pub fn new(cocycle: &LinearCocycle, word: &PeriodicWord) -> Result<Self, CocycleError> {
        for &s in word.symbols() {
            if s as usize >= cocycle.alphabet_size() {
                return Err(CocycleError::SymbolOutOfRange {
                    expected: cocycle.alphabet_size(),
                    symbol: s,
                });
            }
        }
        let factors = word
            .symbols()
            .iter()
            .map(|&s| *cocycle.generator(s))
            .collect();
        Ok(OrbitCocycle {
            word: word.clone(),
            laps: 1,
            dim: cocycle.dim(),
            split: cocycle.split(),
            factors,
        })
    }

    /// Replace the factor list wholesale (retains word/split metadata).
    /// Factors must remain invertible and block-diagonal.
    pub fn with_factors(&self, factors: Vec<SmallMat>) -> Result<Self, CocycleError> {
        assert_eq!(factors.len(), self.factors.len());
        let (s, _u) = self.split;
        for (i, f) in factors.iter().enumerate() {
            let det = f.det();
            if det.abs() < MIN_ABS_DET {
                return Err(CocycleError::SingularGenerator {
                    symbol: i as u8,
                    det,
                });
            }
            for r in 0..self.dim {
                for c in 0..self.dim {
                    if (r < s) != (c < s) && f.get(r, c) != 0.0 {
                        return Err(CocycleError::NotBlockDiagonal {
                            symbol: i as u8,
                            s,
                            u: self.dim - s,
                            r,
                            c,
                            v: f.get(r, c),
                        });
                    }
                }
            }
        }
        Ok(OrbitCocycle {
            factors,
            ..self.clone()
        })
    }

    pub fn word(&self) -> &PeriodicWord {
        &self.word
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn split(&self) -> (usize, usize) {
        self.split
    }

    /// Number of sites traversed (period times laps).
    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn factors(&self) -> &[SmallMat] {
        &self.factors
    }

    pub fn factor(&self, site: usize) -> &SmallMat {
        &self.factors[site]
    }

    /// Same orbit traversed twice: factor list duplicated.
    pub fn doubled(&self) -> Self {
        let mut factors = self.factors.clone();
        factors.extend_from_slice(&self.factors);
        OrbitCocycle {
            laps: self.laps * 2,
            factors,
            ..self.clone()
        }
    }

    /// Plain product `factors[n-1] * ... * factors[0]`. Overflows for very
    /// long expanding orbits; spectral paths use the scaled variants.
    pub fn product_along_word(&self) -> SmallMat {
        let mut p = SmallMat::identity(self.dim);
        for f in &self.factors {
            p = f.mul(&p);
        }
        p
    }

    /// Scaled product over the requested bundle, starting at `site` and
    /// wrapping cyclically over `steps` factors.
    pub fn scaled_product_from(&self, bundle: Bundle, site: usize, steps: usize) -> ScaledMat {
        let block_dim = match bundle {
            Bundle::Full => self.dim,
            Bundle::Stable => self.split.0,
            Bundle::Unstable => self.split.1,
        };
        let mut p = ScaledMat::identity(block_dim);
        let n = self.factors.len();
        for j in 0..steps {
            let f = &self.factors[(site + j) % n];
            p.apply(&extract_block(f, self.split, bundle));
        }
        p
    }

    /// Scaled period product over a bundle, based at site 0.
    pub fn scaled_product(&self, bundle: Bundle) -> ScaledMat {
        self.scaled_product_from(bundle, 0, self.factors.len())
    }

    /// Eigen-data of the full period product, merged across the two blocks
    /// so very long orbits with a wide spectral spread stay representable.
    pub fn product_eigen_data(&self) -> Result<EigenData, CocycleError> {
        let (s, u) = self.split;
        let mut entries: Vec<ScaledEigen> = vec![];
        let mut defects = vec![];
        if s > 0 {
            let p = self.scaled_product(Bundle::Stable);
            entries.extend(scaled_eigen(&p));
            defects.extend(block_defects(&p));
        }
        if u > 0 {
            let p = self.scaled_product(Bundle::Unstable);
            entries.extend(scaled_eigen(&p));
            defects.extend(block_defects(&p));
        }
        EigenData::from_scaled(entries, defects)
    }

    /// Sorted periodic Lyapunov exponents: log-moduli of the period-product
    /// eigenvalues divided by the number of sites traversed.
    pub fn lyapunov_exponents(&self) -> Result<Vec<f64>, CocycleError> {
        let n = self.factors.len() as f64;
        let eig = self.product_eigen_data()?;
        let mut exps: Vec<f64> = eig.log_moduli().iter().map(|l| l / n).collect();
        exps.sort_by(f64::total_cmp);
        Ok(exps)
    }

    /// Simple spectrum: all eigenvalues of the period product real with
    /// pairwise distinct values.
    pub fn has_simple_spectrum(&self) -> bool {
        match self.product_eigen_data() {
            Ok(e) => e.real_and_distinct,
            Err(_) => false,
        }
    }
}

struct ScaledEigen {
    value: Complex64,
    log_offset: f64,
}

fn scaled_eigen(p: &ScaledMat) -> Vec<ScaledEigen> {
    p.m.eigenvalues()
        .into_iter()
        .map(|value| ScaledEigen {
            value,
            log_offset: p.log_scale,
        })
        .collect()
}

fn block_defects(p: &ScaledMat) -> Vec<NilpotentDefect> {
    let eig = p.m.eigenvalues();
    let dim = p.dim();
    if dim < 2 {
        return vec![];
    }
    let mut out = vec![];
    let mut seen: Vec<f64> = vec![];
    for z in &eig {
        if z.im != 0.0 {
            continue;
        }
        let l = z.re;
        let tol = EIGEN_EQ_REL_TOL * l.abs().max(1e-300);
        if seen.iter().any(|&s| (s - l).abs() <= tol) {
            continue;
        }
        let alg = eig
            .iter()
            .filter(|w| w.im == 0.0 && (w.re - l).abs() <= tol)
            .count();
        if alg >= 2 {
            seen.push(l);
            let shifted = p.m.sub(&SmallMat::identity(dim).scale(l));
            let geo = dim - shifted.rank_with_scale(p.m.op_norm());
            if alg > geo {
                out.push(NilpotentDefect {
                    eigenvalue_log_modulus: l.abs().ln() + p.log_scale,
                    eigenvalue_sign: l.signum(),
                    defect: alg - geo,
                });
            }
        }
    }
    out
}

/// Algebraic-minus-geometric multiplicity of a repeated real eigenvalue,
/// reported on a log scale so huge products stay representable.
#[derive(Debug, Clone, Serialize)]
pub struct NilpotentDefect {
    pub eigenvalue_log_modulus: f64,
    pub eigenvalue_sign: f64,
    pub defect: usize,
}

/// Classified spectrum of a period product. Eigenvalues are stored as
/// `value * exp(log_offset)` pairs so orbit products of any length fit.
#[derive(Debug, Clone, Serialize)]
pub struct EigenData {
    pub eigenvalues: Vec<crate::linalg::ComplexEntry>,
    pub log_offsets: Vec<f64>,
    /// Ascending log-moduli of the true eigenvalues.
    pub log_moduli_sorted: Vec<f64>,
    pub real_and_distinct: bool,
    pub has_complex_pair: bool,
    pub nilpotent_defects: Vec<NilpotentDefect>,
}

impl EigenData {
    fn from_scaled(
        mut entries: Vec<ScaledEigen>,
        defects: Vec<NilpotentDefect>,
    ) -> Result<Self, CocycleError> {
        entries.sort_by(|a, b| {
            let la = a.value.norm().ln() + a.log_offset;
            let lb = b.value.norm().ln() + b.log_offset;
            la.total_cmp(&lb)
                .then(a.value.re.total_cmp(&b.value.re))
                .then(a.value.im.total_cmp(&b.value.im))
        });
        let log_moduli: Vec<f64> = entries
            .iter()
            .map(|e| e.value.norm().ln() + e.log_offset)
            .collect();
        if log_moduli.iter().any(|l| !l.is_finite()) {
            return Err(CocycleError::NearSingular(0.0));
        }
        let has_complex_pair = entries.iter().any(|e| e.value.im != 0.0);
        let all_real = !has_complex_pair;
        // Two real eigenvalues are equal when they share a sign and their
        // log-moduli agree within the relative tolerance.
        let mut distinct = true;
        'outer: for i in 0..entries.len() {
            for j in (i + 1)..entries.len() {
                let (a, b) = (&entries[i], &entries[j]);
                if a.value.im != 0.0 || b.value.im != 0.0 {
                    continue;
                }
                let same_sign = a.value.re.signum() == b.value.re.signum();
                let close = (log_moduli[i] - log_moduli[j]).abs() <= EIGEN_EQ_REL_TOL;
                if same_sign && close {
                    distinct = false;
                    break 'outer;
                }
            }
        }
        Ok(EigenData {
            eigenvalues: entries.iter().map(|e| e.value.into()).collect(),
            log_offsets: entries.iter().map(|e| e.log_offset).collect(),
            log_moduli_sorted: log_moduli,
            real_and_distinct: all_real && distinct,
            has_complex_pair,
            nilpotent_defects: defects,
        })
    }

    pub fn log_moduli(&self) -> &[f64] {
        &self.log_moduli_sorted
    }

    /// Moduli of the eigenvalues, ascending. Overflows for extreme products;
    /// prefer [`EigenData::log_moduli`] in scans.
    pub fn moduli(&self) -> Vec<f64> {
        self.log_moduli_sorted.iter().map(|l| l.exp()).collect()
    }
}

/// Eigen-data of a plain matrix: classification flags plus nilpotent
/// defects of repeated real eigenvalues. Errors on numerically singular
/// input.
pub fn eigen_data(m: &SmallMat) -> Result<EigenData, CocycleError> {
    let det = m.det();
    if det.abs() < MIN_ABS_DET {
        return Err(CocycleError::NearSingular(det));
    }
    let p = ScaledMat::from_mat(*m);
    let entries = scaled_eigen(&p);
    let defects = block_defects(&p);
    EigenData::from_scaled(entries, defects)
}
