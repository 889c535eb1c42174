//! Domination tests over periodic orbit sets: the m-step 1/2-contraction
//! criterion, recursive refinement into the finest dominated splitting,
//! unstable signatures, sampled robustness margins, equidimensional-cycle
//! detection, uniform spectral gaps, and the simple-star probe.

use crate::cocycle::{Bundle, CocycleError, LinearCocycle, OrbitCocycle};
use crate::linalg::{dot, kernel_basis, normalize, sym_eigenvalues, ScaledMat, SmallMat, EIGEN_EQ_REL_TOL};
use crate::sft::PeriodicWord;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::fmt;

/// Largest perturbation size probed by the robustness-margin bisection.
pub const MARGIN_DELTA_MAX: f64 = 0.5;

/// Perturbations at this floor size that already flip a signature make the
/// margin exactly zero. Sits above the discriminant-collapse resolution of
/// the closed-form 2x2 solver (relative gaps below ~1e-6 classify as equal),
/// so margins below this floor are indistinguishable from zero.
pub const MARGIN_DELTA_FLOOR: f64 = 1e-4;

#[derive(Debug, thiserror::Error)]
pub enum DominationError {
    #[error("orbit {orbit} has no simple spectrum")]
    NotSimple { orbit: PeriodicWord },
    #[error("empty orbit set")]
    NoOrbits,
    #[error(transparent)]
    Cocycle(#[from] CocycleError),
}

/// Why an m-domination test did not produce a certificate.
#[derive(Debug, thiserror::Error)]
pub enum DominationFailure {
    #[error("no invariant splitting at index {index} along orbit {orbit}")]
    NoSplitting { orbit: PeriodicWord, index: usize },
    #[error("ratio {ratio:.6} above 1/2 at site {site} of orbit {orbit}")]
    RatioExceeded {
        orbit: PeriodicWord,
        site: usize,
        ratio: f64,
    },
    #[error(transparent)]
    Cocycle(#[from] CocycleError),
    #[error("empty orbit set")]
    NoOrbits,
}

/// Certificate that every m-step product contracts the weak/strong norm
/// ratio to at most 1/2 at every site of every checked orbit. `margin` is
/// the worst `-log(ratio)` over all sites (>= log 2 when valid).
#[derive(Debug, Clone, Serialize)]
pub struct DominationCertificate {
    pub index: usize,
    pub m: usize,
    pub margin: f64,
    pub witness_orbits: Vec<PeriodicWord>,
}

/// Block dimensions of the finest dominated splitting found, weakest block
/// first, together with the discovered cuts.
#[derive(Debug, Clone, Serialize)]
pub struct FinestSplitting {
    pub dims: Vec<usize>,
    pub cuts: Vec<SplittingCut>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SplittingCut {
    pub index: usize,
    pub m: usize,
    pub margin: f64,
}

/// Ordered block dimensions (weakest to strongest) of the finest dominated
/// splitting of a designated bundle at one periodic orbit.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Signature(pub Vec<usize>);

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|d| d.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Two periodic orbits with different signatures; `robustness_margin > 0`
/// certifies that sampled factor perturbations up to that operator norm
/// preserve both signatures.
#[derive(Debug, Clone, Serialize)]
pub struct CycleWitness {
    pub orbit_p: PeriodicWord,
    pub orbit_q: PeriodicWord,
    pub sig_p: Signature,
    pub sig_q: Signature,
    pub robustness_margin: f64,
}

enum SplitObstruction {
    ComplexStraddle,
    JordanStraddle,
}

struct EigenCluster {
    size: usize,
    /// log-modulus of the cluster's eigenvalues (true scale).
    log_modulus: f64,
    /// Orthonormal basis of the cluster's generalized eigenspace, in the
    /// coordinates of the requested bundle.
    basis: Vec<Vec<f64>>,
    complex: bool,
    jordan: bool,
}

/// Invariant clusters of a (normalized) block product: single real
/// eigenvalues, repeated real eigenvalues, conjugate pairs. Basis vectors
/// come out in block coordinates.
fn cluster_block(p: &ScaledMat) -> Vec<EigenCluster> {
    let m = &p.m;
    let dim = m.dim();
    let eig = m.eigenvalues(); // sorted by (modulus, re, im)
    let mut groups: Vec<Vec<Complex64>> = vec![];
    for z in eig {
        let joined = groups.last().map_or(false, |g| {
            let w = g[0];
            let scale = z.norm().max(w.norm()).max(1e-300);
            if z.im != 0.0 || w.im != 0.0 {
                z.im != 0.0
                    && w.im != 0.0
                    && (z.re - w.re).abs() <= EIGEN_EQ_REL_TOL * scale
                    && (z.im + w.im).abs() <= EIGEN_EQ_REL_TOL * scale
            } else {
                (z.re - w.re).abs() <= EIGEN_EQ_REL_TOL * scale
            }
        });
        if joined {
            groups.last_mut().unwrap().push(z);
        } else {
            groups.push(vec![z]);
        }
    }
    groups
        .into_iter()
        .map(|values| {
            let size = values.len();
            let complex = values.iter().any(|z| z.im != 0.0);
            let poly = if complex {
                let mu = values[0];
                let msq = m.mul(m);
                msq.sub(&m.scale(2.0 * mu.re))
                    .add(&SmallMat::identity(dim).scale(mu.norm_sqr()))
            } else {
                let l = values[0].re;
                let shifted = m.sub(&SmallMat::identity(dim).scale(l));
                let mut acc = shifted;
                for _ in 1..size {
                    acc = acc.mul(&shifted);
                }
                acc
            };
            let jordan = if !complex && size >= 2 {
                let shifted = m.sub(&SmallMat::identity(dim).scale(values[0].re));
                dim - shifted.rank_with_scale(m.op_norm()) < size
            } else {
                false
            };
            let basis = if size == dim {
                // whole block: identity basis, no kernel computation needed
                (0..dim)
                    .map(|i| {
                        let mut v = vec![0.0; dim];
                        v[i] = 1.0;
                        v
                    })
                    .collect()
            } else {
                kernel_basis(&poly, size)
            };
            EigenCluster {
                size,
                log_modulus: values[0].norm().ln() + p.log_scale,
                basis,
                complex,
                jordan,
            }
        })
        .collect()
}

/// Clusters of the period product over `bundle`, sorted by log-modulus.
/// Full-bundle clusters are assembled per block (factors are always
/// block-diagonal, so invariant subspaces live inside the blocks and each
/// block's spectrum stays within f64 range under its own log scale) and
/// basis vectors are embedded into ambient coordinates.
fn cluster_orbit(oc: &OrbitCocycle, bundle: Bundle, site: usize) -> Vec<EigenCluster> {
    let (s, u) = oc.split();
    let mut clusters = match bundle {
        Bundle::Stable | Bundle::Unstable => {
            cluster_block(&oc.scaled_product_from(bundle, site, oc.len()))
        }
        Bundle::Full => {
            let dim = oc.dim();
            let mut all = vec![];
            if s > 0 {
                let p = oc.scaled_product_from(Bundle::Stable, site, oc.len());
                for mut cl in cluster_block(&p) {
                    cl.basis = cl
                        .basis
                        .iter()
                        .map(|v| {
                            let mut w = vec![0.0; dim];
                            w[..s].copy_from_slice(v);
                            w
                        })
                        .collect();
                    all.push(cl);
                }
            }
            if u > 0 {
                let p = oc.scaled_product_from(Bundle::Unstable, site, oc.len());
                for mut cl in cluster_block(&p) {
                    cl.basis = cl
                        .basis
                        .iter()
                        .map(|v| {
                            let mut w = vec![0.0; dim];
                            w[s..].copy_from_slice(v);
                            w
                        })
                        .collect();
                    all.push(cl);
                }
            }
            all
        }
    };
    clusters.sort_by(|a, b| a.log_modulus.total_cmp(&b.log_modulus));
    clusters
}

/// Orthonormal bases of the two sides of the invariant splitting of the
/// periodic product at `site`: weakest `k` directions versus the rest.
fn splitting_bases(
    oc: &OrbitCocycle,
    bundle: Bundle,
    site: usize,
    k: usize,
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>), SplitObstruction> {
    let clusters = cluster_orbit(oc, bundle, site);
    let mut weak: Vec<Vec<f64>> = vec![];
    let mut strong: Vec<Vec<f64>> = vec![];
    let mut count = 0usize;
    for cl in clusters {
        let size = cl.size;
        if count >= k {
            strong.extend(cl.basis);
        } else if count + size <= k {
            weak.extend(cl.basis);
        } else {
            // cluster straddles the cut
            if cl.complex {
                return Err(SplitObstruction::ComplexStraddle);
            }
            if cl.jordan {
                return Err(SplitObstruction::JordanStraddle);
            }
            // semisimple repeated eigenvalue: any sub-eigenspace is
            // invariant; split the orthonormal cluster basis deterministically
            let take = k - count;
            weak.extend(cl.basis[..take].iter().cloned());
            strong.extend(cl.basis[take..].iter().cloned());
        }
        count += size;
    }
    Ok((gram_schmidt(weak), gram_schmidt(strong)))
}

fn gram_schmidt(mut vs: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = vec![];
    for v in vs.iter_mut() {
        for b in &out {
            let d = dot(v, b);
            for (x, y) in v.iter_mut().zip(b.iter()) {
                *x -= d * y;
            }
        }
        normalize(v);
        out.push(v.clone());
    }
    out
}

/// (log sigma_max, log sigma_min) of the restriction of `p` to the span of
/// an orthonormal basis. The log scale rides along, so huge products are
/// fine.
fn restriction_singular_logs(p: &ScaledMat, basis: &[Vec<f64>]) -> (f64, f64) {
    let j = basis.len();
    let cols: Vec<Vec<f64>> = basis.iter().map(|b| p.m.mul_vec(b)).collect();
    let mut gram = SmallMat::zeros(j);
    for a in 0..j {
        for b in 0..j {
            gram.set(a, b, dot(&cols[a], &cols[b]));
        }
    }
    let eig = sym_eigenvalues(&gram);
    let max = eig.iter().fold(f64::MIN, |a, &x| a.max(x)).max(0.0);
    let min = eig.iter().fold(f64::MAX, |a, &x| a.min(x)).max(0.0);
    (0.5 * max.ln() + p.log_scale, 0.5 * min.ln() + p.log_scale)
}

/// m-step domination test at split index `k` of `bundle`: at every site of
/// every orbit the m-step product must satisfy
/// `|A^m on weak side| * |(A^m on strong side)^-1| <= 1/2`,
/// where the weak side is spanned by the `k` weakest directions of the
/// periodic product based at that site.
pub fn m_domination_test(
    cocycle: &LinearCocycle,
    orbits: &[PeriodicWord],
    bundle: Bundle,
    k: usize,
    m: usize,
) -> Result<DominationCertificate, DominationFailure> {
    if orbits.is_empty() {
        return Err(DominationFailure::NoOrbits);
    }
    let block_dim = match bundle {
        Bundle::Full => cocycle.dim(),
        Bundle::Stable => cocycle.split().0,
        Bundle::Unstable => cocycle.split().1,
    };
    assert!(k >= 1 && k < block_dim, "index must satisfy 1 <= k < dim");
    assert!(m >= 1);
    let mut worst_log_ratio = f64::MIN;
    let mut worst: Option<(PeriodicWord, usize)> = None;
    for word in orbits {
        let oc = OrbitCocycle::new(cocycle, word)?;
        for site in 0..oc.len() {
            let (b1, b2) = match splitting_bases(&oc, bundle, site, k) {
                Ok(b) => b,
                Err(_) => {
                    return Err(DominationFailure::NoSplitting {
                        orbit: word.clone(),
                        index: k,
                    })
                }
            };
            let step = oc.scaled_product_from(bundle, site, m);
            let log_ratio =
                restriction_singular_logs(&step, &b1).0 - restriction_singular_logs(&step, &b2).1;
            if log_ratio > worst_log_ratio {
                worst_log_ratio = log_ratio;
                worst = Some((word.clone(), site));
            }
        }
    }
    let (orbit, site) = worst.expect("nonempty orbit set");
    if worst_log_ratio <= -(2.0f64.ln()) + 1e-12 {
        Ok(DominationCertificate {
            index: k,
            m,
            margin: -worst_log_ratio,
            witness_orbits: orbits.to_vec(),
        })
    } else {
        Err(DominationFailure::RatioExceeded {
            orbit,
            site,
            ratio: worst_log_ratio.exp(),
        })
    }
}

/// Refine `bundle` into dominated blocks. A dominated cut inside a dominated
/// block extends to a cut of the whole bundle, so probing every split index
/// with m = 1..=m_max realizes the recursive refinement. Single block when
/// no domination exists anywhere.
pub fn finest_dominated_splitting(
    cocycle: &LinearCocycle,
    orbits: &[PeriodicWord],
    bundle: Bundle,
    m_max: usize,
) -> Result<FinestSplitting, DominationError> {
    if orbits.is_empty() {
        return Err(DominationError::NoOrbits);
    }
    let block_dim = match bundle {
        Bundle::Full => cocycle.dim(),
        Bundle::Stable => cocycle.split().0,
        Bundle::Unstable => cocycle.split().1,
    };
    let mut cuts = vec![];
    for k in 1..block_dim {
        for m in 1..=m_max {
            if let Ok(cert) = m_domination_test(cocycle, orbits, bundle, k, m) {
                cuts.push(SplittingCut {
                    index: k,
                    m,
                    margin: cert.margin,
                });
                break;
            }
        }
    }
    let mut dims = vec![];
    let mut prev = 0;
    for cut in &cuts {
        dims.push(cut.index - prev);
        prev = cut.index;
    }
    dims.push(block_dim - prev);
    Ok(FinestSplitting { dims, cuts })
}

/// Signature of an invertible 2x2 block: `(1,1)` iff two real eigenvalues of
/// distinct moduli; `(2)` for a complex pair, equal moduli, or a repeated
/// eigenvalue with or without nilpotent part.
pub fn signature_of_block(block: &ScaledMat) -> Signature {
    assert_eq!(block.dim(), 2, "signatures are defined on 2x2 blocks");
    let eig = block.m.eigenvalues();
    if eig.iter().any(|z| z.im != 0.0) {
        return Signature(vec![2]);
    }
    let l0 = eig[0].re.abs().ln();
    let l1 = eig[1].re.abs().ln();
    if (l0 - l1).abs() <= EIGEN_EQ_REL_TOL {
        Signature(vec![2])
    } else {
        Signature(vec![1, 1])
    }
}

/// Unstable signature of a periodic orbit, read off the period product of
/// the unstable block. Requires a 2-dimensional unstable bundle.
pub fn unstable_signature(oc: &OrbitCocycle) -> Result<Signature, CocycleError> {
    let (s, u) = oc.split();
    if u != 2 {
        return Err(CocycleError::UnstableDimNot2(s, u));
    }
    Ok(signature_of_block(&oc.scaled_product(Bundle::Unstable)))
}

/// One deterministic draw of the sampled perturbation family: a site, a
/// block-diagonal direction of unit operator norm, and a radius fraction in
/// [0, 1). The probed perturbation at size delta is `I + radius*delta*direction`.
struct PerturbationDraw {
    site: usize,
    direction: SmallMat,
    radius: f64,
}

fn draw_family(
    oc: &OrbitCocycle,
    samples: usize,
    seed: u64,
    unstable_only: bool,
) -> Vec<PerturbationDraw> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (s, u) = oc.split();
    let dim = oc.dim();
    (0..samples)
        .map(|_| {
            let site = rng.gen_range(0..oc.len());
            let mut direction = SmallMat::zeros(dim);
            if u > 0 {
                for r in 0..u {
                    for c in 0..u {
                        direction.set(s + r, s + c, rng.gen_range(-1.0..1.0));
                    }
                }
            }
            if s > 0 && !unstable_only {
                for r in 0..s {
                    for c in 0..s {
                        direction.set(r, c, rng.gen_range(-1.0..1.0));
                    }
                }
            }
            let norm = direction.op_norm().max(1e-300);
            PerturbationDraw {
                site,
                direction: direction.scale(1.0 / norm),
                radius: rng.gen_range(0.0..1.0f64),
            }
        })
        .collect()
}

fn perturbed_orbit(oc: &OrbitCocycle, draw: &PerturbationDraw, delta: f64) -> OrbitCocycle {
    let p = SmallMat::identity(oc.dim()).add(&draw.direction.scale(draw.radius * delta));
    let mut factors = oc.factors().to_vec();
    factors[draw.site] = p.mul(&factors[draw.site]);
    oc.with_factors(factors)
        .expect("perturbations below delta_max stay invertible and block-diagonal")
}

/// True iff all sampled single-site unstable-block perturbations of operator
/// norm <= delta preserve the orbit's unstable signature.
pub fn signature_preserved_at(
    oc: &OrbitCocycle,
    delta: f64,
    samples: usize,
    seed: u64,
) -> Result<bool, CocycleError> {
    let base = unstable_signature(oc)?;
    let draws = draw_family(oc, samples, seed, true);
    Ok(draws.iter().all(|d| {
        let p = perturbed_orbit(oc, d, delta);
        signature_of_block(&p.scaled_product(Bundle::Unstable)) == base
    }))
}

/// Largest perturbation size (bisection, capped at [`MARGIN_DELTA_MAX`])
/// under which all sampled single-site unstable-block perturbations of
/// operator norm <= delta preserve the orbit's unstable signature. Exactly 0
/// when the floor size already flips it.
pub fn signature_robustness_margin(
    oc: &OrbitCocycle,
    samples: usize,
    seed: u64,
) -> Result<f64, CocycleError> {
    assert!(samples >= 1);
    let base = unstable_signature(oc)?;
    let draws = draw_family(oc, samples, seed, true);
    let preserved = |delta: f64| -> bool {
        draws.iter().all(|d| {
            let p = perturbed_orbit(oc, d, delta);
            signature_of_block(&p.scaled_product(Bundle::Unstable)) == base
        })
    };
    if !preserved(MARGIN_DELTA_FLOOR) {
        return Ok(0.0);
    }
    if preserved(MARGIN_DELTA_MAX) {
        return Ok(MARGIN_DELTA_MAX);
    }
    let (mut lo, mut hi) = (MARGIN_DELTA_FLOOR, MARGIN_DELTA_MAX);
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if preserved(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Scan orbit pairs for different unstable signatures; among such pairs
/// return the one maximizing the smaller robustness margin. Margins use
/// per-orbit seeds derived from `seed`, so results do not depend on
/// scheduling.
pub fn detect_equidimensional_cycle(
    cocycle: &LinearCocycle,
    orbits: &[PeriodicWord],
    samples: usize,
    seed: u64,
) -> Result<Option<CycleWitness>, DominationError> {
    if orbits.is_empty() {
        return Err(DominationError::NoOrbits);
    }
    let tagged: Vec<(PeriodicWord, Signature)> = orbits
        .iter()
        .map(|w| {
            let oc = OrbitCocycle::new(cocycle, w)?;
            Ok((w.clone(), unstable_signature(&oc)?))
        })
        .collect::<Result<_, CocycleError>>()?;
    let distinct: std::collections::HashSet<&Signature> =
        tagged.iter().map(|(_, s)| s).collect();
    if distinct.len() < 2 {
        return Ok(None);
    }
    let margins: Vec<f64> = tagged
        .par_iter()
        .enumerate()
        .map(|(i, (w, _))| {
            let oc = OrbitCocycle::new(cocycle, w).expect("validated above");
            signature_robustness_margin(&oc, samples, derive_seed(seed, i as u64))
                .expect("signature computed above")
        })
        .collect();
    let mut best: Option<CycleWitness> = None;
    for a in 0..tagged.len() {
        for b in (a + 1)..tagged.len() {
            if tagged[a].1 == tagged[b].1 {
                continue;
            }
            let margin = margins[a].min(margins[b]);
            if best.as_ref().map_or(true, |w| margin > w.robustness_margin) {
                best = Some(CycleWitness {
                    orbit_p: tagged[a].0.clone(),
                    orbit_q: tagged[b].0.clone(),
                    sig_p: tagged[a].1.clone(),
                    sig_q: tagged[b].1.clone(),
                    robustness_margin: margin,
                });
            }
        }
    }
    Ok(best)
}

/// Deterministic per-task seed derivation (splitmix64 step).
pub fn derive_seed(master: u64, task: u64) -> u64 {
    let mut z = master
        .wrapping_add(0x9e3779b97f4a7c15)
        .wrapping_add(task.wrapping_mul(0xbf58476d1ce4e5b9));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Minimum over orbits and adjacent indices of the periodic-exponent gaps.
/// Every orbit product must have simple spectrum.
pub fn uniform_spectral_gap(
    cocycle: &LinearCocycle,
    orbits: &[PeriodicWord],
) -> Result<f64, DominationError> {
    if orbits.is_empty() {
        return Err(DominationError::NoOrbits);
    }
    let mut min_gap = f64::MAX;
    for word in orbits {
        let oc = OrbitCocycle::new(cocycle, word)?;
        if !oc.has_simple_spectrum() {
            return Err(DominationError::NotSimple {
                orbit: word.clone(),
            });
        }
        let exps = oc.lyapunov_exponents()?;
        for pair in exps.windows(2) {
            min_gap = min_gap.min(pair[1] - pair[0]);
        }
    }
    Ok(min_gap)
}

/// Finite-sample stand-in for the simple-star property: true iff every orbit
/// has simple spectrum and keeps it under all sampled block-diagonal factor
/// perturbations of operator norm <= delta.
pub fn simple_star_probe(
    cocycle: &LinearCocycle,
    orbits: &[PeriodicWord],
    delta: f64,
    samples: usize,
    seed: u64,
) -> Result<bool, DominationError> {
    assert!(delta > 0.0);
    if orbits.is_empty() {
        return Err(DominationError::NoOrbits);
    }
    let flags: Vec<bool> = orbits
        .par_iter()
        .enumerate()
        .map(|(i, word)| {
            let oc = match OrbitCocycle::new(cocycle, word) {
                Ok(oc) => oc,
                Err(_) => return false,
            };
            if !oc.has_simple_spectrum() {
                return false;
            }
            let draws = draw_family(&oc, samples, derive_seed(seed, i as u64), false);
            draws
                .iter()
                .all(|d| perturbed_orbit(&oc, d, delta).has_simple_spectrum())
        })
        .collect();
    Ok(flags.into_iter().all(|b| b))
}
