//! Orbit-level perturbation mechanisms: budgeted factor replacement plans,
//! rotation numbers and rotation arcs, schedules that normalize an unstable
//! product to a scalar (shears and stretches in transported frames),
//! eigenvalue splitting, the dense-orbit simple-spectrum pipeline, signature
//! explosion, and the domination-versus-cycle dichotomy pipeline.

use crate::cocycle::{embed_block, Bundle, CocycleError, LinearCocycle, OrbitCocycle};
use crate::domination::{
    derive_seed, finest_dominated_splitting, signature_robustness_margin, unstable_signature,
    DominationError, FinestSplitting, Signature,
};
use crate::linalg::SmallMat;
use crate::sft::{SftError, SftSystem};
use crate::sft::PeriodicWord;
use serde::Serialize;
use std::collections::BTreeMap;
use std::f64::consts::PI;

#[derive(Debug, thiserror::Error)]
pub enum PerturbError {
    #[error("factor at site {site} has norm {norm:.6}, budget is {budget}")]
    BudgetExceeded { site: usize, norm: f64, budget: f64 },
    #[error("plan is for orbit {plan_orbit} with {plan_sites} sites, got orbit {orbit} with {sites}")]
    PlanMismatch {
        plan_orbit: PeriodicWord,
        plan_sites: usize,
        orbit: PeriodicWord,
        sites: usize,
    },
    #[error("operation requires a 2-dimensional unstable block")]
    UnstableDimNot2,
    #[error("unstable factor at site {0} is orientation-reversing; rotation tracking undefined")]
    NonOrientable(usize),
    #[error("arc is constant: marked rotation angle and arc increment are both zero")]
    ArcConstant,
    #[error("marked symbol {0} is not a fixed point (no self-transition)")]
    MarkedNotFixed(u8),
    #[error("marked symbol {0} has no scaled-rotation unstable block")]
    MarkedNotRotation(u8),
    #[error("oscillation never exceeded 1 for m up to {0}")]
    NoOscillationGrowth(usize),
    #[error("no equal-modulus real crossing found along the arc")]
    NoRealCrossing,
    #[error("unstable product has a complex pair; bring it to real eigenvalues first")]
    ComplexPair,
    #[error("unstable product carries a nilpotent part; kill nilpotent first")]
    NilpotentPresent,
    #[error("unstable product is not of the expected form: {0}")]
    WrongForm(String),
    #[error("schedule needs at least {required} sites, orbit has {available}")]
    PeriodTooShort { required: usize, available: usize },
    #[error("stage {stage} exhausted its budget: {detail}")]
    StageBudget { stage: &'static str, detail: String },
    #[error("orbit supply below the requested count at period cap {cap}")]
    InsufficientOrbitSupply { cap: usize },
    #[error("the two seed orbits must have different unstable signatures with positive margins")]
    SeedSignatures,
    #[error(transparent)]
    Cocycle(#[from] CocycleError),
    #[error(transparent)]
    Sft(#[from] SftError),
    #[error(transparent)]
    Domination(#[from] DominationError),
}

/// Budgeted factor replacement along one orbit: factor i becomes
/// `P_i * factor_i` at the listed sites, identity elsewhere. Every `P` must
/// be block-diagonal and within `budget` of the identity in operator norm.
#[derive(Debug, Clone)]
pub struct PerturbationPlan {
    orbit: PeriodicWord,
    sites: usize,
    site_factors: BTreeMap<usize, SmallMat>,
    budget: f64,
}

impl PerturbationPlan {
    pub fn empty(oc: &OrbitCocycle, budget: f64) -> Self {
        assert!(budget > 0.0);
        PerturbationPlan {
            orbit: oc.word().clone(),
            sites: oc.len(),
            site_factors: BTreeMap::new(),
            budget,
        }
    }

    /// Add (compose onto) the factor at `site`. Errors when the composed
    /// factor leaves the budget ball.
    pub fn compose_at(&mut self, site: usize, factor: &SmallMat) -> Result<(), PerturbError> {
        assert!(site < self.sites);
        let dim = factor.dim();
        let current = self
            .site_factors
            .get(&site)
            .copied()
            .unwrap_or_else(|| SmallMat::identity(dim));
        let combined = factor.mul(&current);
        let norm = combined.sub(&SmallMat::identity(dim)).op_norm();
        // rounding slack: schedules may fill the budget exactly
        if norm > self.budget * (1.0 + 1e-9) + 1e-15 {
            return Err(PerturbError::BudgetExceeded {
                site,
                norm,
                budget: self.budget,
            });
        }
        self.site_factors.insert(site, combined);
        Ok(())
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn orbit(&self) -> &PeriodicWord {
        &self.orbit
    }

    pub fn site_factors(&self) -> &BTreeMap<usize, SmallMat> {
        &self.site_factors
    }

    pub fn is_empty(&self) -> bool {
        self.site_factors.is_empty()
    }

    /// Worst distance from the identity over all factors.
    pub fn max_norm(&self) -> f64 {
        self.site_factors
            .values()
            .map(|p| p.sub(&SmallMat::identity(p.dim())).op_norm())
            .fold(0.0, f64::max)
    }

    /// Plan with inverted factors; applying it after the original restores
    /// the factor list exactly.
    pub fn inverse(&self) -> PerturbationPlan {
        let mut inv = PerturbationPlan {
            orbit: self.orbit.clone(),
            sites: self.sites,
            site_factors: BTreeMap::new(),
            budget: f64::MAX,
        };
        for (&site, p) in &self.site_factors {
            let q = p.inverse().expect("plan factors are invertible");
            inv.site_factors.insert(site, q);
        }
        inv.budget = inv.max_norm().max(1e-12);
        inv
    }

    /// Sequential composition: `self` first, then `later`.
    pub fn then(&self, later: &PerturbationPlan) -> PerturbationPlan {
        let mut out = self.clone();
        out.budget = f64::MAX;
        for (&site, p) in &later.site_factors {
            let dim = p.dim();
            let current = out
                .site_factors
                .get(&site)
                .copied()
                .unwrap_or_else(|| SmallMat::identity(dim));
            out.site_factors.insert(site, p.mul(&current));
        }
        out.budget = out.max_norm().max(self.budget.max(later.budget));
        out
    }
}

/// Apply a plan to an orbit cocycle, revalidating the budget and the orbit
/// identity. Unlisted sites are untouched.
pub fn apply_plan(oc: &OrbitCocycle, plan: &PerturbationPlan) -> Result<OrbitCocycle, PerturbError> {
    if plan.orbit != *oc.word() || plan.sites != oc.len() {
        return Err(PerturbError::PlanMismatch {
            plan_orbit: plan.orbit.clone(),
            plan_sites: plan.sites,
            orbit: oc.word().clone(),
            sites: oc.len(),
        });
    }
    let dim = oc.dim();
    let mut factors = oc.factors().to_vec();
    for (&site, p) in &plan.site_factors {
        let norm = p.sub(&SmallMat::identity(dim)).op_norm();
        if norm > plan.budget * (1.0 + 1e-9) + 1e-15 {
            return Err(PerturbError::BudgetExceeded {
                site,
                norm,
                budget: plan.budget,
            });
        }
        factors[site] = p.mul(&factors[site]);
    }
    Ok(oc.with_factors(factors)?)
}

/// Rotation arc at one site: the composing factor at parameter `t` is the
/// rotation by `t * xi` on the unstable plane, identity on the stable line.
#[derive(Debug, Clone, Serialize)]
pub struct RotationArc {
    pub site: usize,
    pub xi: f64,
    pub t_range: (f64, f64),
}

impl RotationArc {
    pub fn factor(&self, t: f64, dim: usize, split: (usize, usize)) -> SmallMat {
        let t = t.clamp(self.t_range.0, self.t_range.1);
        embed_block(&SmallMat::rotation2(t * self.xi), dim, split, Bundle::Unstable)
    }
}

fn unstable_block_of(oc: &OrbitCocycle, site: usize) -> SmallMat {
    let (s, _) = oc.split();
    let f = oc.factor(site);
    let mut b = SmallMat::zeros(2);
    for r in 0..2 {
        for c in 0..2 {
            b.set(r, c, f.get(s + r, s + c));
        }
    }
    b
}

/// Scaled-rotation detection: `B = g R_phi` exactly (within 1e-12 relative).
fn rotation_like(b: &SmallMat) -> Option<f64> {
    let scale = b.max_abs().max(1e-300);
    let tol = 1e-12 * scale;
    if (b.get(0, 0) - b.get(1, 1)).abs() <= tol && (b.get(0, 1) + b.get(1, 0)).abs() <= tol {
        Some(f64::atan2(b.get(1, 0), b.get(0, 0)))
    } else {
        None
    }
}

/// Marked-direction winding (in turns): lifted per-factor angular
/// increments of the image of e1. Scaled rotations contribute their angle
/// exactly (resolved by subdividing into 8 sub-rotations, which fixes the
/// half-turn ambiguity); generic factors contribute the principal-value
/// displacement of the tracked direction.
fn marked_winding(oc: &OrbitCocycle) -> Result<f64, PerturbError> {
    let mut v = [1.0f64, 0.0f64];
    let mut total = 0.0f64;
    for site in 0..oc.len() {
        let b = unstable_block_of(oc, site);
        if b.det() <= 0.0 {
            return Err(PerturbError::NonOrientable(site));
        }
        if let Some(phi) = rotation_like(&b) {
            // exact: 8 sub-rotations of phi/8 each
            total += 8.0 * (phi / 8.0);
            let (s, c) = phi.sin_cos();
            v = [c * v[0] - s * v[1], s * v[0] + c * v[1]];
        } else {
            let w = [
                b.get(0, 0) * v[0] + b.get(0, 1) * v[1],
                b.get(1, 0) * v[0] + b.get(1, 1) * v[1],
            ];
            let cross = v[0] * w[1] - v[1] * w[0];
            let dotp = v[0] * w[0] + v[1] * w[1];
            total += f64::atan2(cross, dotp);
            let n = (w[0] * w[0] + w[1] * w[1]).sqrt();
            v = [w[0] / n, w[1] / n];
        }
    }
    Ok(total / (2.0 * PI))
}

/// Rotation number of the unstable-block product acting on the circle of
/// directions: the translation number of the product (fractional part read
/// off the spectrum: the eigenvalue argument for complex pairs, 0 for
/// positive real eigenvalues, 1/2 for negative ones) with the integer lift
/// resolved by the marked-direction winding through the factors.
pub fn rotation_number(oc: &OrbitCocycle) -> Result<f64, PerturbError> {
    let (_, u) = oc.split();
    if u != 2 {
        return Err(PerturbError::UnstableDimNot2);
    }
    let w = marked_winding(oc)?;
    let p = oc.scaled_product(Bundle::Unstable);
    let eig = p.m.eigenvalues();
    let frac = if eig[0].im != 0.0 {
        eig[1].im.abs().atan2(eig[1].re) / (2.0 * PI)
    } else if eig[0].re >= 0.0 {
        0.0
    } else {
        0.5
    };
    // nearest lift of +-frac to the winding
    let mut best = f64::MAX;
    let mut rho = w;
    for sign in [1.0f64, -1.0] {
        let c = sign * frac;
        let k = (w - c).round();
        let cand = c + k;
        let d = (cand - w).abs();
        if d < best - 1e-15 || (d < best + 1e-15 && cand < rho) {
            best = d;
            rho = cand;
        }
    }
    Ok(rho)
}

// ---------------------------------------------------------------------------
// Transported schedules
// ---------------------------------------------------------------------------

/// Normalized unstable partial products `B_{j+1} = A_j ... A_0 V` (each step
/// renormalized by its largest entry; conjugation cancels the scale).
fn transported_bases(oc: &OrbitCocycle, v: &SmallMat) -> Vec<SmallMat> {
    let n = oc.len();
    let mut bases = Vec::with_capacity(n + 1);
    let mut b = *v;
    bases.push(b);
    for site in 0..n {
        b = unstable_block_of(oc, site).mul(&b);
        let f = b.max_abs();
        if f > 0.0 {
            b = b.scale(1.0 / f);
        }
        bases.push(b);
    }
    bases
}

/// Insert 2x2 schedule factors `S_j` on the unstable block via basis
/// transport: the factor at site j becomes `B_{j+1} S_j B_{j+1}^{-1}` (on
/// the unstable block), so the perturbed unstable period product is exactly
/// `V T (S_last ... S_first) V^{-1}` with `T = V^{-1} M V`.
fn transported_plan(
    oc: &OrbitCocycle,
    v: &SmallMat,
    schedule: &[(usize, SmallMat)],
    budget: f64,
) -> Result<PerturbationPlan, PerturbError> {
    let bases = transported_bases(oc, v);
    let mut plan = PerturbationPlan::empty(oc, budget);
    let dim = oc.dim();
    let split = oc.split();
    for &(site, s) in schedule {
        let b = &bases[site + 1];
        let b_inv = b.inverse().map_err(|_| PerturbError::WrongForm(
            "transport basis became singular".into(),
        ))?;
        let p2 = b.mul(&s).mul(&b_inv);
        let p = embed_block(&p2, dim, split, Bundle::Unstable);
        plan.compose_at(site, &p)?;
    }
    Ok(plan)
}

/// Real 2x2 basis in which a matrix with a complex pair becomes an exact
/// scaled rotation (real Jordan form), column-normalized.
fn conformal_basis(m: &SmallMat) -> Result<SmallMat, PerturbError> {
    let eig = m.eigenvalues();
    let mu = eig
        .iter()
        .find(|z| z.im > 0.0)
        .ok_or(PerturbError::WrongForm("no complex pair".into()))?;
    // complex eigenvector from the larger row of (m - mu I)
    let rows = [
        (m.get(0, 0) - mu.re, m.get(0, 1), -mu.im),
        (m.get(1, 0), m.get(1, 1) - mu.re, -mu.im),
    ];
    // row = (a + i alpha_mask, b): v = (b, -(a + i alpha)) picks the kernel;
    // just branch on which row has more mass
    let r0_mass = rows[0].0.abs() + rows[0].1.abs();
    let r1_mass = rows[1].0.abs() + rows[1].1.abs();
    // kernel vector of [a - mu, b; c, d - mu]: for row (p, q) with complex p,
    // v = (q, -(p)) where the imaginary part sits in p.
    let (re_x, im_x, re_y, im_y) = if r0_mass >= r1_mass {
        // row 0: (m00 - mu, m01) -> v = (m01, -(m00 - mu))
        (m.get(0, 1), 0.0, -(m.get(0, 0) - mu.re), mu.im)
    } else {
        // row 1: (m10, m11 - mu) -> v = (m11 - mu, -m10)
        (m.get(1, 1) - mu.re, -mu.im, -m.get(1, 0), 0.0)
    };
    // real basis [Re v, -Im v]: M Re = a Re + b(-Im) ... gives rotation block
    let mut v = SmallMat::from_rows(2, &[re_x, -im_x, re_y, -im_y]);
    // normalize columns
    for c in 0..2 {
        let n = (v.get(0, c).powi(2) + v.get(1, c).powi(2)).sqrt();
        if n > 0.0 {
            v.set(0, c, v.get(0, c) / n);
            v.set(1, c, v.get(1, c) / n);
        }
    }
    if v.det().abs() < 1e-12 {
        return Err(PerturbError::WrongForm(
            "conformal basis degenerate".into(),
        ));
    }
    Ok(v)
}

/// Distribute a total unstable-plane rotation `total_angle` over orbit sites
/// in the transported basis `v`, respecting the per-site budget. The angle
/// allocation uses measured per-site norm inflation.
fn rotation_schedule(
    oc: &OrbitCocycle,
    v: &SmallMat,
    total_angle: f64,
    budget: f64,
    stage: &'static str,
) -> Result<PerturbationPlan, PerturbError> {
    if total_angle == 0.0 {
        return Ok(PerturbationPlan::empty(oc, budget));
    }
    let bases = transported_bases(oc, v);
    let n = oc.len();
    // measured inflation per site: |B R_eps B^-1 - I| / eps
    let probe = 1e-4;
    let mut inflation = Vec::with_capacity(n);
    for site in 0..n {
        let b = &bases[site + 1];
        let b_inv = b
            .inverse()
            .map_err(|_| PerturbError::WrongForm("transport basis became singular".into()))?;
        let p = b.mul(&SmallMat::rotation2(probe)).mul(&b_inv);
        let k = p.sub(&SmallMat::identity(2)).op_norm() / probe;
        inflation.push(k.max(1e-9));
    }
    // greedy: each site takes as much angle as its budget allows
    let sign = total_angle.signum();
    let mut remaining = total_angle.abs();
    let mut schedule = vec![];
    for site in 0..n {
        if remaining <= 0.0 {
            break;
        }
        let cap = 0.9 * budget / inflation[site];
        let phi = remaining.min(cap);
        if phi > 0.0 {
            schedule.push((site, SmallMat::rotation2(sign * phi)));
            remaining -= phi;
        }
    }
    if remaining > 1e-12 {
        return Err(PerturbError::StageBudget {
            stage,
            detail: format!(
                "rotation capacity exhausted: {remaining:.4} rad undistributed over {n} sites"
            ),
        });
    }
    transported_plan(oc, v, &schedule, budget)
}

/// Bring a complex-pair unstable product to equal real eigenvalues by
/// rotating against its conformal angle: the perturbed product becomes an
/// exact scalar.
pub fn rotate_to_real(
    oc: &OrbitCocycle,
    budget: f64,
) -> Result<(OrbitCocycle, PerturbationPlan), PerturbError> {
    require_unstable2(oc)?;
    let m = oc.scaled_product(Bundle::Unstable);
    let eig = m.m.eigenvalues();
    if eig.iter().all(|z| z.im == 0.0) {
        return Ok((oc.clone(), PerturbationPlan::empty(oc, budget)));
    }
    let v = conformal_basis(&m.m)?;
    let t = v
        .inverse()
        .map_err(|_| PerturbError::WrongForm("conformal basis singular".into()))?
        .mul(&m.m)
        .mul(&v);
    let theta = f64::atan2(t.get(1, 0), t.get(0, 0));
    // rotate to the nearest real locus: angle 0 (positive scalar) or +-pi
    // (negative scalar)
    let target = [0.0, PI, -PI]
        .into_iter()
        .min_by(|a, b| (a - theta).abs().total_cmp(&(b - theta).abs()))
        .unwrap();
    let plan = rotation_schedule(oc, &v, target - theta, budget, "rotate_to_real")?;
    let out = apply_plan(oc, &plan)?;
    Ok((out, plan))
}

/// From a (near-)scalar unstable product, rotate by `angle` to create a
/// complex pair of the corresponding argument.
pub fn rotate_to_complex(
    oc: &OrbitCocycle,
    angle: f64,
    budget: f64,
) -> Result<(OrbitCocycle, PerturbationPlan), PerturbError> {
    require_unstable2(oc)?;
    let plan = rotation_schedule(oc, &SmallMat::identity(2), angle, budget, "rotate_to_complex")?;
    let out = apply_plan(oc, &plan)?;
    Ok((out, plan))
}

fn require_unstable2(oc: &OrbitCocycle) -> Result<(), PerturbError> {
    if oc.split().1 != 2 {
        return Err(PerturbError::UnstableDimNot2);
    }
    Ok(())
}

/// Orbit-adapted orthonormal frames along the invariant line of the weakest
/// real eigendirection: `F_j = [f_j, rot90(f_j)]`, `f_{j+1} ∝ A_j f_j`.
/// In these frames every unstable factor is upper triangular.
struct TriangularFrames {
    frames: Vec<SmallMat>,
    /// per-site upper-triangular entries (a_j, b_j, d_j)
    tri: Vec<(f64, f64, f64)>,
}

fn triangular_frames(oc: &OrbitCocycle, eigdir: [f64; 2]) -> TriangularFrames {
    let n = oc.len();
    let mut f = eigdir;
    let norm = (f[0] * f[0] + f[1] * f[1]).sqrt();
    f = [f[0] / norm, f[1] / norm];
    let mut frames = Vec::with_capacity(n + 1);
    let frame_of = |f: [f64; 2]| SmallMat::from_rows(2, &[f[0], -f[1], f[1], f[0]]);
    frames.push(frame_of(f));
    let mut tri = Vec::with_capacity(n);
    for site in 0..n {
        let b = unstable_block_of(oc, site);
        let w = [
            b.get(0, 0) * f[0] + b.get(0, 1) * f[1],
            b.get(1, 0) * f[0] + b.get(1, 1) * f[1],
        ];
        let wn = (w[0] * w[0] + w[1] * w[1]).sqrt();
        let fnew = [w[0] / wn, w[1] / wn];
        let t = frame_of(fnew).transpose().mul(&b).mul(&frame_of(f));
        tri.push((t.get(0, 0), t.get(0, 1), t.get(1, 1)));
        f = fnew;
        frames.push(frame_of(f));
    }
    TriangularFrames { frames, tri }
}

/// Weakest real eigendirection of a 2x2 (the eigendirection when the
/// eigenvalue is defective).
fn weak_eigendirection(m: &SmallMat) -> Result<[f64; 2], PerturbError> {
    let eig = m.eigenvalues();
    if eig.iter().any(|z| z.im != 0.0) {
        return Err(PerturbError::ComplexPair);
    }
    let l = eig[0].re; // smallest modulus first
    let shifted = m.sub(&SmallMat::identity(2).scale(l));
    let scale = m.op_norm();
    // larger row gives the kernel direction
    let r0 = shifted.get(0, 0).abs() + shifted.get(0, 1).abs();
    let r1 = shifted.get(1, 0).abs() + shifted.get(1, 1).abs();
    let (a, b) = if r0 >= r1 {
        (shifted.get(0, 0), shifted.get(0, 1))
    } else {
        (shifted.get(1, 0), shifted.get(1, 1))
    };
    if a.abs().max(b.abs()) <= 1e-13 * scale.max(1.0) {
        // scalar matrix: any direction
        return Ok([1.0, 0.0]);
    }
    Ok([-b, a])
}

/// Report of a scalar-normalization schedule.
#[derive(Debug, Clone, Serialize)]
pub struct NormalizeReport {
    pub stretch_sites: usize,
    pub shear_sites: usize,
    pub residual_off_diagonal: f64,
}

/// Normalize the unstable period product to an exact scalar: stretches
/// `diag(1+delta, 1)` equalize the triangular diagonal, shears
/// `[[1, s],[0,1]]` cancel the off-diagonal, all in orbit-adapted
/// orthonormal frames so factor norms are exact. Handles both a defective
/// (Jordan) product and a diagonalizable one with a modulus gap; errors on
/// complex pairs and when the orbit is too short for the budget.
pub fn normalize_to_scalar(
    oc: &OrbitCocycle,
    budget: f64,
) -> Result<(OrbitCocycle, PerturbationPlan, NormalizeReport), PerturbError> {
    require_unstable2(oc)?;
    let m = oc.scaled_product(Bundle::Unstable);
    let eigdir = weak_eigendirection(&m.m)?;
    let tf = triangular_frames(oc, eigdir);
    let n = oc.len();

    // diagonal equalization: product over (1+delta_j) a_j must equal
    // product over d_j; work with logs and signs
    let log_gap: f64 = tf
        .tri
        .iter()
        .map(|&(a, _, d)| d.abs().ln() - a.abs().ln())
        .sum();
    let sign_gap: f64 = tf.tri.iter().map(|&(a, _, d)| (d * a).signum()).product();
    if sign_gap < 0.0 {
        return Err(PerturbError::WrongForm(
            "diagonal signs differ; eigenvalues have opposite signs".into(),
        ));
    }
    // stretches take at most 70% of the per-site budget, leaving shear room
    let per_site_cap = (1.0 + 0.7 * budget).ln();
    let needed = if log_gap == 0.0 {
        0
    } else {
        (log_gap.abs() / per_site_cap).ceil() as usize
    };
    if needed > n {
        return Err(PerturbError::PeriodTooShort {
            required: needed,
            available: n,
        });
    }
    let stretch_sites = needed;
    let delta = if stretch_sites == 0 {
        0.0
    } else {
        (log_gap / stretch_sites as f64).exp() - 1.0
    };

    // effective triangular entries after stretching the first
    // `stretch_sites` sites
    let eff: Vec<(f64, f64, f64)> = tf
        .tri
        .iter()
        .enumerate()
        .map(|(j, &(a, b, d))| {
            if j < stretch_sites {
                ((1.0 + delta) * a, (1.0 + delta) * b, d)
            } else {
                (a, b, d)
            }
        })
        .collect();

    // off-diagonal of the product of upper triangulars, and the shear
    // coefficients, in log-sign space. prefix_d[j] = prod_{i<j} d_i,
    // suffix_a[j] = prod_{i>j} a_i.
    let mut log_prefix_d = vec![0.0f64; n + 1];
    let mut sign_prefix_d = vec![1.0f64; n + 1];
    for j in 0..n {
        log_prefix_d[j + 1] = log_prefix_d[j] + eff[j].2.abs().ln();
        sign_prefix_d[j + 1] = sign_prefix_d[j] * eff[j].2.signum();
    }
    let mut log_suffix_a = vec![0.0f64; n + 1];
    let mut sign_suffix_a = vec![1.0f64; n + 1];
    for j in (0..n).rev() {
        log_suffix_a[j] = log_suffix_a[j + 1] + eff[j].0.abs().ln();
        sign_suffix_a[j] = sign_suffix_a[j + 1] * eff[j].0.signum();
    }
    // contribution of beta_j: suffix_a[j+1] * beta_j * prefix_d[j];
    // shear coefficient c_j = suffix_a[j+1] * d_j * prefix_d[j]
    let log_c: Vec<f64> = (0..n)
        .map(|j| log_suffix_a[j + 1] + eff[j].2.abs().ln() + log_prefix_d[j])
        .collect();
    let sign_c: Vec<f64> = (0..n)
        .map(|j| sign_suffix_a[j + 1] * eff[j].2.signum() * sign_prefix_d[j])
        .collect();
    let log_c_max = log_c.iter().cloned().fold(f64::MIN, f64::max);
    // current off-diagonal total (relative units: everything divided by
    // exp(log_c_max), the largest shear coefficient)
    let mut off_rel = 0.0f64;
    for j in 0..n {
        let log_term = log_suffix_a[j + 1] + log_prefix_d[j];
        let sign_term = sign_suffix_a[j + 1] * sign_prefix_d[j];
        off_rel += sign_term * eff[j].1 * (log_term - log_c_max).exp();
    }
    // shear room per site after the stretch (exact: the composed factor
    // [[1+delta, s],[0,1]] - I has operator norm sqrt(delta^2 + s^2))
    let room: Vec<f64> = (0..n)
        .map(|j| {
            let d = if j < stretch_sites { delta.abs() } else { 0.0 };
            (budget * budget - d * d).max(0.0).sqrt()
        })
        .collect();
    // fill shears greedily by capacity |c_j| * room_j until the off-diagonal
    // is cancelled: minimal number of sites at full room, one partial site
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let ca = (log_c[a] - log_c_max).exp() * room[a];
        let cb = (log_c[b] - log_c_max).exp() * room[b];
        cb.total_cmp(&ca).then(a.cmp(&b))
    });
    let mut target = off_rel.abs();
    let mut shears = vec![0.0f64; n];
    let mut shear_sites = 0usize;
    for &j in &order {
        if target <= 0.0 {
            break;
        }
        let chat = (log_c[j] - log_c_max).exp();
        if chat * room[j] <= 0.0 {
            continue;
        }
        let take = (target / chat).min(room[j]);
        if take > 0.0 {
            shears[j] = -off_rel.signum() * sign_c[j] * take;
            target -= chat * take;
            shear_sites += 1;
        }
    }
    if target > 1e-12 * off_rel.abs().max(1.0) {
        let chat_max = 1.0f64;
        let required = (off_rel.abs() / (chat_max * budget)).ceil() as usize;
        return Err(PerturbError::PeriodTooShort {
            required: required.max(n + 1),
            available: n,
        });
    }
    let mut schedule = vec![];
    for j in 0..n {
        let stretch = if j < stretch_sites { delta } else { 0.0 };
        if stretch != 0.0 || shears[j] != 0.0 {
            let s = SmallMat::from_rows(2, &[1.0 + stretch, shears[j], 0.0, 1.0]);
            schedule.push((j, s));
        }
    }
    // frame-conjugated factors have the same norm as S (frames orthonormal)
    let mut plan = PerturbationPlan::empty(oc, budget);
    let dim = oc.dim();
    let split = oc.split();
    for &(site, s) in &schedule {
        let fr = &tf.frames[site + 1];
        let p2 = fr.mul(&s).mul(&fr.transpose());
        plan.compose_at(site, &embed_block(&p2, dim, split, Bundle::Unstable))?;
    }
    let out = apply_plan(oc, &plan)?;
    let check = out.scaled_product(Bundle::Unstable);
    let fr0 = &tf.frames[0];
    let tri_total = fr0.transpose().mul(&check.m).mul(fr0);
    let residual = tri_total.get(0, 1).abs() / check.m.op_norm();
    Ok((
        out,
        plan,
        NormalizeReport {
            stretch_sites,
            shear_sites,
            residual_off_diagonal: residual,
        },
    ))
}

/// Split equal real unstable eigenvalues with a one-site diagonal factor
/// `diag(1+eta1, 1+eta2)` in the (transported) eigenbasis of the product.
/// The stable line is untouched. Requires equal-modulus real eigenvalues
/// with no nilpotent part.
pub fn split_equal_eigenvalues(
    oc: &OrbitCocycle,
    eta1: f64,
    eta2: f64,
    budget: f64,
) -> Result<(OrbitCocycle, PerturbationPlan), PerturbError> {
    require_unstable2(oc)?;
    assert!(eta1 != eta2, "splitting requires eta1 != eta2");
    let m = oc.scaled_product(Bundle::Unstable);
    let eig = m.m.eigenvalues();
    if eig.iter().any(|z| z.im != 0.0) {
        return Err(PerturbError::ComplexPair);
    }
    let scale = eig[1].re.abs().max(1e-300);
    if (eig[0].re - eig[1].re).abs() > 1e-9 * scale {
        return Err(PerturbError::WrongForm(
            "eigenvalues are not equal; nothing to split".into(),
        ));
    }
    let shifted = m.m.sub(&SmallMat::identity(2).scale(eig[0].re));
    let geo = 2 - shifted.rank_with_scale(m.m.op_norm());
    if geo < 2 {
        return Err(PerturbError::NilpotentPresent);
    }
    let s = SmallMat::diag(&[1.0 + eta1, 1.0 + eta2]);
    let plan = transported_plan(oc, &SmallMat::identity(2), &[(0, s)], budget)?;
    let out = apply_plan(oc, &plan)?;
    Ok((out, plan))
}

// ---------------------------------------------------------------------------
// Rotation-arc experiment
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct RotationArcConfig {
    pub marked_symbol: u8,
    /// Cylinder depth of the dense excursion.
    pub depth: usize,
    /// Arc angle increment at t = 1.
    pub xi: f64,
    /// Per-site factor budget; the arc factor norm is 2 sin(xi/2).
    pub budget: f64,
    /// Scan limit for the least m with oscillation > 1.
    pub m_cap: usize,
    /// Oscillation table extends to this multiple of m_t.
    pub table_factor: usize,
    /// Grid resolution in t for oscillation and crossing scans.
    pub t_grid: usize,
}

impl Default for RotationArcConfig {
    fn default() -> Self {
        RotationArcConfig {
            marked_symbol: 0,
            depth: 1,
            xi: 0.05,
            budget: 0.1,
            m_cap: 20_000,
            table_factor: 10,
            t_grid: 8,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RotationArcReport {
    pub m_t: usize,
    pub t_star: f64,
    pub rho_at_t_star: f64,
    pub rho_is_integer: bool,
    /// Relative gap |l1 - l2| / max(|l1|,|l2|) of the unstable eigenvalues
    /// at t_star.
    pub eigen_rel_gap_at_t_star: f64,
    pub oscillation: Vec<(usize, f64)>,
    pub growth_slope: f64,
    pub growth_r_squared: f64,
    pub base_word_len: usize,
}

/// The orbit family: `m` extra copies of the marked symbol inserted at its
/// first occurrence in the depth-`k` dense word.
fn arc_family_word(
    sft: &SftSystem,
    marked: u8,
    depth: usize,
    m: usize,
) -> Result<(PeriodicWord, Vec<usize>), PerturbError> {
    let dense = sft.build_dense_periodic_word(depth)?;
    let pos = dense
        .symbols()
        .iter()
        .position(|&s| s == marked)
        .ok_or(PerturbError::MarkedNotFixed(marked))?;
    let mut symbols = dense.symbols()[..=pos].to_vec();
    let run_start = symbols.len();
    symbols.extend(std::iter::repeat(marked).take(m));
    symbols.extend_from_slice(&dense.symbols()[pos + 1..]);
    let word = PeriodicWord::new(sft, &symbols)?;
    // the canonical rotation may move the run; recover inserted site indices
    // by locating the rotation offset
    let n = symbols.len();
    let canon = word.symbols();
    let mut offset = 0;
    'outer: for r in 0..n {
        for i in 0..n {
            if symbols[(r + i) % n] != canon[i] {
                continue 'outer;
            }
        }
        offset = r;
        break;
    }
    let sites: Vec<usize> = (0..m).map(|j| (run_start + j + n - offset) % n).collect();
    Ok((word, sites))
}

fn arc_perturbed(
    cocycle: &LinearCocycle,
    word: &PeriodicWord,
    arcs: &[RotationArc],
    t: f64,
) -> Result<OrbitCocycle, PerturbError> {
    let oc = OrbitCocycle::new(cocycle, word)?;
    let mut factors = oc.factors().to_vec();
    for arc in arcs {
        let rot = arc.factor(t, cocycle.dim(), cocycle.split());
        factors[arc.site] = rot.mul(&factors[arc.site]);
    }
    Ok(oc.with_factors(factors)?)
}

/// Relative eigenvalue gap of the unstable product: complex pairs measure
/// `2|Im| / |lambda|`, real pairs `|l1 - l2| / max`.
fn unstable_rel_gap(oc: &OrbitCocycle) -> f64 {
    let p = oc.scaled_product(Bundle::Unstable);
    let eig = p.m.eigenvalues();
    let scale = eig[0].norm().max(eig[1].norm()).max(1e-300);
    if eig[0].im != 0.0 {
        2.0 * eig[0].im.abs() / scale
    } else {
        (eig[0].re - eig[1].re).abs() / scale
    }
}

/// Run the arc experiment: insert `m` marked sites, compose their factors
/// with `R_{t xi}`, measure the oscillation of the rotation number over
/// t in [0,1] as m grows, find the least m with oscillation > 1, then a
/// parameter `t_star` where the unstable product has equal-modulus real
/// eigenvalues at an integer rotation number.
pub fn rotation_arc_experiment(
    cocycle: &LinearCocycle,
    sft: &SftSystem,
    cfg: &RotationArcConfig,
) -> Result<RotationArcReport, PerturbError> {
    require_unstable2_cocycle(cocycle)?;
    let marked = cfg.marked_symbol;
    if marked as usize >= sft.alphabet_size() || !sft.is_adjacent(marked, marked) {
        return Err(PerturbError::MarkedNotFixed(marked));
    }
    let (s, _) = cocycle.split();
    let gen_u = {
        let g = cocycle.generator(marked);
        let mut b = SmallMat::zeros(2);
        for r in 0..2 {
            for c in 0..2 {
                b.set(r, c, g.get(s + r, s + c));
            }
        }
        b
    };
    let theta = rotation_like(&gen_u).ok_or(PerturbError::MarkedNotRotation(marked))?;
    if theta == 0.0 && cfg.xi == 0.0 {
        return Err(PerturbError::ArcConstant);
    }
    let arc_norm = 2.0 * (cfg.xi.abs() / 2.0).sin();
    if arc_norm > cfg.budget {
        return Err(PerturbError::BudgetExceeded {
            site: 0,
            norm: arc_norm,
            budget: cfg.budget,
        });
    }

    let arcs_for = |sites: &[usize]| -> Vec<RotationArc> {
        sites
            .iter()
            .map(|&site| RotationArc {
                site,
                xi: cfg.xi,
                t_range: (0.0, 1.0),
            })
            .collect()
    };
    let oscillation_at = |m: usize| -> Result<f64, PerturbError> {
        let (word, sites) = arc_family_word(sft, marked, cfg.depth, m)?;
        let arcs = arcs_for(&sites);
        let mut lo = f64::MAX;
        let mut hi = f64::MIN;
        for g in 0..=cfg.t_grid {
            let t = g as f64 / cfg.t_grid as f64;
            let oc = arc_perturbed(cocycle, &word, &arcs, t)?;
            let rho = rotation_number(&oc)?;
            lo = lo.min(rho);
            hi = hi.max(rho);
        }
        Ok(hi - lo)
    };

    // least m with oscillation > 1
    let mut m_t = None;
    for m in 1..=cfg.m_cap {
        if oscillation_at(m)? > 1.0 {
            m_t = Some(m);
            break;
        }
    }
    let m_t = m_t.ok_or(PerturbError::NoOscillationGrowth(cfg.m_cap))?;

    // oscillation table for the growth fit
    let table_cap = (cfg.table_factor.max(1)) * m_t;
    let mut oscillation = Vec::with_capacity(table_cap);
    for m in 1..=table_cap {
        oscillation.push((m, oscillation_at(m)?));
    }
    let (slope, r2) = linear_fit(&oscillation);

    // crossing scan at m = m_t: locate minima of the relative eigen gap
    let (word, sites) = arc_family_word(sft, marked, cfg.depth, m_t)?;
    let arcs = arcs_for(&sites);
    let gap_at = |t: f64| -> Result<f64, PerturbError> {
        Ok(unstable_rel_gap(&arc_perturbed(cocycle, &word, &arcs, t)?))
    };
    let fine = 512usize;
    let mut candidates: Vec<(f64, f64, f64)> = vec![]; // (t, gap, rho)
    let mut prev = gap_at(0.0)?;
    let mut prev_prev = f64::MAX;
    for g in 1..=fine {
        let t = g as f64 / fine as f64;
        let cur = gap_at(t)?;
        if prev <= prev_prev && prev <= cur {
            // local minimum near t_prev: ternary refine
            let lo = (g as f64 - 2.0) / fine as f64;
            let hi = t;
            let t_min = ternary_min(&gap_at, lo.max(0.0), hi)?;
            let gap = gap_at(t_min)?;
            if gap <= 1e-6 {
                let oc = arc_perturbed(cocycle, &word, &arcs, t_min)?;
                let rho = rotation_number(&oc)?;
                candidates.push((t_min, gap, rho));
            }
        }
        prev_prev = prev;
        prev = cur;
    }
    if candidates.is_empty() {
        return Err(PerturbError::NoRealCrossing);
    }
    let integerish = candidates
        .iter()
        .find(|(_, _, rho)| (rho - rho.round()).abs() <= 1e-3);
    let &(t_star, gap, rho) = integerish.unwrap_or(&candidates[0]);
    Ok(RotationArcReport {
        m_t,
        t_star,
        rho_at_t_star: rho,
        rho_is_integer: (rho - rho.round()).abs() <= 1e-3,
        eigen_rel_gap_at_t_star: gap,
        oscillation,
        growth_slope: slope,
        growth_r_squared: r2,
        base_word_len: word.period() - m_t,
    })
}

fn require_unstable2_cocycle(c: &LinearCocycle) -> Result<(), PerturbError> {
    if c.split().1 != 2 {
        return Err(PerturbError::UnstableDimNot2);
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Dense-orbit simple-spectrum pipeline
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct StageLog {
    pub stage: &'static str,
    pub budget_used: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct MakeDenseSimpleReport {
    pub word: PeriodicWord,
    pub stages: Vec<StageLog>,
    /// Worst composed per-site factor norm across all stages.
    pub budget_used: f64,
    pub final_signature: Signature,
}

/// Lengthen a word while preserving its cyclic factor set: insert `extra`
/// copies of a self-adjacent symbol at one of its occurrences, and append a
/// whole second copy of the original cycle so every original cyclic factor
/// survives inside the unbroken copy. Returns the canonical word together
/// with the site indices of the inserted run.
fn lengthened_dense_word(
    sft: &SftSystem,
    base: &PeriodicWord,
    extra: usize,
) -> Result<(PeriodicWord, Vec<usize>), PerturbError> {
    let symbols = base.symbols();
    let marked = symbols
        .iter()
        .copied()
        .find(|&s| sft.is_adjacent(s, s))
        .ok_or_else(|| PerturbError::WrongForm("no self-adjacent symbol to lengthen with".into()))?;
    let pos = symbols.iter().position(|&s| s == marked).unwrap();
    let mut out = symbols[..=pos].to_vec();
    let run_start = out.len();
    out.extend(std::iter::repeat(marked).take(extra));
    out.extend_from_slice(&symbols[pos + 1..]);
    out.extend_from_slice(symbols);
    let word = PeriodicWord::new(sft, &out)?;
    // recover the canonicalization rotation to map run indices
    let n = out.len();
    let canon = word.symbols();
    let mut offset = 0;
    'outer: for r in 0..n {
        for i in 0..n {
            if out[(r + i) % n] != canon[i] {
                continue 'outer;
            }
        }
        offset = r;
        break;
    }
    let sites = (0..extra)
        .map(|j| (run_start + j + n - offset) % n)
        .collect();
    Ok((word, sites))
}

/// Sweep rotations `R_{t phi_max}` at the given sites over t in [0,1] and
/// land on a parameter where the unstable product has equal-modulus real
/// eigenvalues (a tangency of the complex/real boundary).
fn arc_to_tangency(
    oc: &OrbitCocycle,
    sites: &[usize],
    phi_max: f64,
) -> Result<Option<(f64, PerturbationPlan)>, PerturbError> {
    if sites.is_empty() || phi_max <= 0.0 {
        return Ok(None);
    }
    let dim = oc.dim();
    let split = oc.split();
    let perturbed = |t: f64| -> OrbitCocycle {
        let rot = embed_block(&SmallMat::rotation2(t * phi_max), dim, split, Bundle::Unstable);
        let mut factors = oc.factors().to_vec();
        for &s in sites {
            factors[s] = rot.mul(&factors[s]);
        }
        oc.with_factors(factors).expect("rotations stay invertible")
    };
    let gap_at = |t: f64| -> Result<f64, PerturbError> { Ok(unstable_rel_gap(&perturbed(t))) };
    let fine = 512usize;
    let mut best: Option<(f64, f64)> = None;
    let mut prev = gap_at(0.0)?;
    let mut prev_prev = f64::MAX;
    for g in 1..=fine {
        let t = g as f64 / fine as f64;
        let cur = gap_at(t)?;
        if prev <= prev_prev && prev <= cur {
            let lo = ((g as f64 - 2.0) / fine as f64).max(0.0);
            let t_min = ternary_min(&gap_at, lo, t)?;
            let gap = gap_at(t_min)?;
            if gap <= 1e-6 && best.as_ref().map_or(true, |&(_, bg)| gap < bg) {
                best = Some((t_min, gap));
            }
        }
        prev_prev = prev;
        prev = cur;
    }
    match best {
        None => Ok(None),
        Some((t_star, _)) => {
            let mut plan = PerturbationPlan::empty(oc, 2.0 * (phi_max / 2.0).sin() + 1e-15);
            let rot = embed_block(
                &SmallMat::rotation2(t_star * phi_max),
                dim,
                split,
                Bundle::Unstable,
            );
            for &s in sites {
                plan.compose_at(s, &rot)?;
            }
            Ok(Some((t_star, plan)))
        }
    }
}

/// Build a cylinder-covering periodic word and perturb its factors, within
/// a per-site budget of `epsilon`, until the period product has simple
/// spectrum. When the covering word itself lacks simple spectrum, the
/// pipeline inserts a run of marked-symbol sites (preserving the factor
/// set), sweeps a rotation arc on the run to reach equal-modulus real
/// eigenvalues, removes any nilpotent part, and splits the eigenvalues.
pub fn make_dense_simple(
    cocycle: &LinearCocycle,
    sft: &SftSystem,
    depth: usize,
    epsilon: f64,
    seed: u64,
) -> Result<(OrbitCocycle, MakeDenseSimpleReport), PerturbError> {
    require_unstable2_cocycle(cocycle)?;
    let _ = seed; // the pipeline is deterministic; kept for interface parity
    let base = sft.build_dense_periodic_word(depth)?;
    let budget_rot = 0.5 * epsilon;
    let budget_norm = 0.2 * epsilon;
    let budget_split = 0.1 * epsilon;
    let phi_max = budget_rot.min(1.0);

    // zero-perturbation path: the covering word already has simple spectrum
    let base_oc = OrbitCocycle::new(cocycle, &base)?;
    if base_oc.has_simple_spectrum() {
        let report = MakeDenseSimpleReport {
            word: base.clone(),
            stages: vec![],
            budget_used: 0.0,
            final_signature: unstable_signature(&base_oc)?,
        };
        return Ok((base_oc, report));
    }

    let word_limit = 1 << 14;
    let mut extra = 8usize;
    loop {
        if base.period() + extra > word_limit {
            return Err(PerturbError::StageBudget {
                stage: "rotation_arc",
                detail: format!(
                    "no equal-modulus real crossing reachable within {} sites at per-site budget {}",
                    word_limit, budget_rot
                ),
            });
        }
        let (word, run_sites) = lengthened_dense_word(sft, &base, extra)?;
        let oc0 = OrbitCocycle::new(cocycle, &word)?;
        // only attempt the sweep once the run can plausibly reach a tangency
        let capacity = run_sites.len() as f64 * phi_max;
        if capacity < 0.3 {
            extra *= 2;
            continue;
        }
        let Some((t_star, arc_plan)) = arc_to_tangency(&oc0, &run_sites, phi_max)? else {
            extra *= 2;
            continue;
        };
        let mut stages = vec![StageLog {
            stage: "rotation_arc",
            budget_used: arc_plan.max_norm(),
            detail: format!("{} run sites, t_star = {t_star:.6}", run_sites.len()),
        }];
        let mut plans = vec![arc_plan.clone()];
        let mut oc = apply_plan(&oc0, &arc_plan)?;

        // equal-modulus real eigenvalues now; remove nilpotent part and any
        // residual modulus gap
        match normalize_to_scalar(&oc, budget_norm) {
            Ok((next, plan, rep)) => {
                if !plan.is_empty() {
                    stages.push(StageLog {
                        stage: "kill_nilpotent",
                        budget_used: plan.max_norm(),
                        detail: format!(
                            "{} stretch sites, {} shear sites",
                            rep.stretch_sites, rep.shear_sites
                        ),
                    });
                    plans.push(plan);
                }
                oc = next;
            }
            Err(PerturbError::PeriodTooShort { .. }) => {
                extra *= 2;
                continue;
            }
            Err(e) => return Err(e),
        }
        let (next, plan) =
            split_equal_eigenvalues(&oc, 0.25 * budget_split, 0.5 * budget_split, budget_split)?;
        stages.push(StageLog {
            stage: "split_equal_eigenvalues",
            budget_used: plan.max_norm(),
            detail: "one site".into(),
        });
        plans.push(plan);
        oc = next;

        if !oc.has_simple_spectrum() {
            return Err(PerturbError::StageBudget {
                stage: "split_equal_eigenvalues",
                detail: "spectrum still not simple after the split".into(),
            });
        }
        // composed per-site budget audit
        let mut composed = plans[0].clone();
        for p in &plans[1..] {
            composed = composed.then(p);
        }
        let budget_used = composed.max_norm();
        if budget_used > epsilon {
            return Err(PerturbError::BudgetExceeded {
                site: 0,
                norm: budget_used,
                budget: epsilon,
            });
        }
        let report = MakeDenseSimpleReport {
            word: word.clone(),
            stages,
            budget_used,
            final_signature: unstable_signature(&oc)?,
        };
        return Ok((oc, report));
    }
}

// ---------------------------------------------------------------------------
// Signature explosion
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct MarkedOrbit {
    pub word: PeriodicWord,
    pub signature: Signature,
    pub margin: f64,
    pub perturbed: bool,
    pub budget_used: f64,
    /// The marked orbit's factor list (perturbed when `perturbed` is set);
    /// margins are measured on these factors.
    pub orbit_cocycle: OrbitCocycle,
}

#[derive(Debug, Clone)]
pub struct ExplosionReport {
    /// Orbits carrying the signature of the first seed orbit.
    pub set_p: Vec<MarkedOrbit>,
    /// Orbits carrying the signature of the second seed orbit.
    pub set_q: Vec<MarkedOrbit>,
    pub period_cap: usize,
}

/// Number of leading repetitions of `pattern` in the best rotation of
/// `word` (shadowing score).
fn shadowing_score(word: &PeriodicWord, pattern: &PeriodicWord) -> usize {
    let w = word.symbols();
    let p = pattern.symbols();
    let n = w.len();
    let mut best = 0usize;
    for start in 0..n {
        let mut reps = 0;
        'reps: loop {
            for (i, &ps) in p.iter().enumerate() {
                if w[(start + reps * p.len() + i) % n] != ps {
                    break 'reps;
                }
            }
            reps += 1;
            if reps * p.len() >= n {
                break;
            }
        }
        best = best.max(reps);
    }
    best
}

/// Force the unstable signature of one orbit to `(2)` (robust complex pair)
/// within budget: real products are first normalized to a scalar, then
/// rotated by as much of a quarter turn as the budget allows.
fn force_signature_2(
    oc: &OrbitCocycle,
    epsilon: f64,
) -> Result<(OrbitCocycle, f64), PerturbError> {
    let eig = oc.product_eigen_data()?;
    let mut cur = oc.clone();
    let mut plans: Vec<PerturbationPlan> = vec![];
    if !eig.has_complex_pair {
        let (next, plan, _) = normalize_to_scalar(&cur, 0.5 * epsilon)?;
        plans.push(plan);
        cur = next;
        // capacity-limited push toward a quarter turn
        let angle_target = PI / 2.0;
        let mut angle = angle_target;
        let (next, plan) = loop {
            match rotate_to_complex(&cur, angle, 0.45 * epsilon) {
                Ok(ok) => break ok,
                Err(PerturbError::StageBudget { .. }) if angle > 1e-3 => {
                    angle *= 0.5;
                }
                Err(e) => return Err(e),
            }
        };
        plans.push(plan);
        cur = next;
    }
    let used = if plans.is_empty() {
        0.0
    } else {
        let mut composed = plans[0].clone();
        for p in &plans[1..] {
            composed = composed.then(p);
        }
        composed.max_norm()
    };
    Ok((cur, used))
}

/// Force the unstable signature of one orbit to `(1,1)` within budget:
/// complex pairs are rotated to real, degenerate real products normalized
/// to a scalar, and the eigenvalues split.
fn force_signature_11(
    oc: &OrbitCocycle,
    epsilon: f64,
) -> Result<(OrbitCocycle, f64), PerturbError> {
    let mut cur = oc.clone();
    let mut plans: Vec<PerturbationPlan> = vec![];
    let eig = cur.product_eigen_data()?;
    if eig.has_complex_pair {
        let (next, plan) = rotate_to_real(&cur, 0.5 * epsilon)?;
        plans.push(plan);
        cur = next;
    }
    if unstable_signature(&cur)? != Signature(vec![1, 1]) {
        let (next, plan, _) = normalize_to_scalar(&cur, 0.25 * epsilon)?;
        if !plan.is_empty() {
            plans.push(plan);
        }
        cur = next;
        let b = 0.2 * epsilon;
        let (next, plan) = split_equal_eigenvalues(&cur, 0.25 * b, 0.5 * b, b)?;
        plans.push(plan);
        cur = next;
    }
    let used = if plans.is_empty() {
        0.0
    } else {
        let mut composed = plans[0].clone();
        for p in &plans[1..] {
            composed = composed.then(p);
        }
        composed.max_norm()
    };
    Ok((cur, used))
}

/// Following the finite-n induction: starting from two orbits with robust
/// different unstable signatures, mark at least `n` orbits of each
/// signature, selecting fresh orbits that shadow the corresponding seed
/// (longest leading repetitions first) and perturbing within `epsilon` per
/// orbit where the signature does not already hold robustly.
pub fn signature_explosion(
    cocycle: &LinearCocycle,
    sft: &SftSystem,
    orbit_p: &PeriodicWord,
    orbit_q: &PeriodicWord,
    n: usize,
    epsilon: f64,
    seed: u64,
    period_cap: usize,
    margin_samples: usize,
) -> Result<ExplosionReport, PerturbError> {
    require_unstable2_cocycle(cocycle)?;
    assert!(n >= 1);
    let oc_p = OrbitCocycle::new(cocycle, orbit_p)?;
    let oc_q = OrbitCocycle::new(cocycle, orbit_q)?;
    let sig_p = unstable_signature(&oc_p)?;
    let sig_q = unstable_signature(&oc_q)?;
    let margin_p = signature_robustness_margin(&oc_p, margin_samples, derive_seed(seed, 0))?;
    let margin_q = signature_robustness_margin(&oc_q, margin_samples, derive_seed(seed, 1))?;
    if sig_p == sig_q || margin_p <= 0.0 || margin_q <= 0.0 {
        return Err(PerturbError::SeedSignatures);
    }
    let mut set_p = vec![MarkedOrbit {
        word: orbit_p.clone(),
        signature: sig_p.clone(),
        margin: margin_p,
        perturbed: false,
        budget_used: 0.0,
        orbit_cocycle: oc_p.clone(),
    }];
    let mut set_q = vec![MarkedOrbit {
        word: orbit_q.clone(),
        signature: sig_q.clone(),
        margin: margin_q,
        perturbed: false,
        budget_used: 0.0,
        orbit_cocycle: oc_q.clone(),
    }];
    if n == 1 {
        return Ok(ExplosionReport {
            set_p,
            set_q,
            period_cap,
        });
    }

    let all = sft.orbits_up_to(period_cap)?;
    let mark_side = |target_sig: &Signature,
                         shadow: &PeriodicWord,
                         out: &mut Vec<MarkedOrbit>,
                         taken: &mut std::collections::HashSet<PeriodicWord>,
                         salt: u64|
     -> Result<(), PerturbError> {
        let mut candidates: Vec<&PeriodicWord> = all
            .iter()
            .filter(|w| *w != orbit_p && *w != orbit_q && !taken.contains(*w))
            .collect();
        candidates.sort_by_key(|w| {
            (
                std::cmp::Reverse(shadowing_score(w, shadow)),
                std::cmp::Reverse(w.period()),
                (*w).clone(),
            )
        });
        for (i, w) in candidates.into_iter().enumerate() {
            if out.len() >= n {
                break;
            }
            let oc = OrbitCocycle::new(cocycle, w)?;
            let task_seed = derive_seed(seed, salt.wrapping_add(i as u64 + 2));
            let base_sig = unstable_signature(&oc)?;
            if base_sig == *target_sig {
                let margin = signature_robustness_margin(&oc, margin_samples, task_seed)?;
                if margin > 0.0 {
                    taken.insert(w.clone());
                    out.push(MarkedOrbit {
                        word: w.clone(),
                        signature: base_sig,
                        margin,
                        perturbed: false,
                        budget_used: 0.0,
                        orbit_cocycle: oc,
                    });
                    continue;
                }
            }
            // perturb toward the target signature
            let forced = if *target_sig == Signature(vec![2]) {
                force_signature_2(&oc, epsilon)
            } else {
                force_signature_11(&oc, epsilon)
            };
            let (perturbed, used) = match forced {
                Ok(x) => x,
                Err(_) => continue,
            };
            if unstable_signature(&perturbed)? != *target_sig {
                continue;
            }
            let margin = signature_robustness_margin(&perturbed, margin_samples, task_seed)?;
            if margin > 0.0 {
                taken.insert(w.clone());
                out.push(MarkedOrbit {
                    word: w.clone(),
                    signature: target_sig.clone(),
                    margin,
                    perturbed: true,
                    budget_used: used,
                    orbit_cocycle: perturbed,
                });
            }
        }
        if out.len() < n {
            return Err(PerturbError::InsufficientOrbitSupply { cap: period_cap });
        }
        Ok(())
    };
    let mut taken = std::collections::HashSet::new();
    mark_side(&sig_p, orbit_p, &mut set_p, &mut taken, 1_000)?;
    mark_side(&sig_q, orbit_q, &mut set_q, &mut taken, 2_000_000)?;
    Ok(ExplosionReport {
        set_p,
        set_q,
        period_cap,
    })
}

// ---------------------------------------------------------------------------
// Dichotomy pipeline
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct DichotomyConfig {
    pub orbit_cap: usize,
    pub m_max: usize,
    pub budget: f64,
    pub margin_samples: usize,
    pub seed: u64,
    /// Lengths of constructed long orbits used when a perturbation needs
    /// more sites than the enumerated orbits provide.
    pub long_lengths: Vec<usize>,
}

impl Default for DichotomyConfig {
    fn default() -> Self {
        DichotomyConfig {
            orbit_cap: 7,
            m_max: 12,
            budget: 0.1,
            margin_samples: 60,
            seed: 0,
            long_lengths: vec![24, 48, 96, 192],
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub enum DichotomyOutcome {
    /// One-dimensional finest dominated splitting with a positive margin.
    Dominated {
        splitting: FinestSplitting,
        min_margin: f64,
    },
    /// A perturbation within budget produced two orbits with robust
    /// different unstable signatures.
    Cycle {
        orbit_a: PeriodicWord,
        sig_a: Signature,
        margin_a: f64,
        perturbed_a: bool,
        orbit_b: PeriodicWord,
        sig_b: Signature,
        margin_b: f64,
        perturbed_b: bool,
        budget_used: f64,
    },
}

/// Candidate long orbits: m copies of a self-adjacent symbol glued to the
/// depth-1 covering word.
fn long_orbit_candidates(
    sft: &SftSystem,
    lengths: &[usize],
) -> Result<Vec<PeriodicWord>, PerturbError> {
    let base = sft.build_dense_periodic_word(1)?;
    let mut out = vec![];
    for &len in lengths {
        if len <= base.period() {
            continue;
        }
        if let Ok((w, _)) = lengthened_dense_word(sft, &base, len - base.period()) {
            out.push(w);
        }
    }
    Ok(out)
}

/// Classify one system: either certify a fully one-dimensional finest
/// dominated splitting over the scanned orbits, or construct (perturbing
/// within budget where needed) a pair of orbits with robust different
/// unstable signatures.
pub fn dichotomy_pipeline(
    cocycle: &LinearCocycle,
    sft: &SftSystem,
    cfg: &DichotomyConfig,
) -> Result<DichotomyOutcome, PerturbError> {
    require_unstable2_cocycle(cocycle)?;
    let orbits = sft.orbits_up_to(cfg.orbit_cap)?;
    let splitting = finest_dominated_splitting(cocycle, &orbits, Bundle::Full, cfg.m_max)?;
    if splitting.dims.iter().all(|&d| d == 1) {
        let min_margin = splitting
            .cuts
            .iter()
            .map(|c| c.margin)
            .fold(f64::MAX, f64::min);
        return Ok(DichotomyOutcome::Dominated {
            splitting,
            min_margin,
        });
    }

    // signature census over the enumerated orbits
    let mut robust_2: Option<(PeriodicWord, f64)> = None;
    let mut robust_11: Option<(PeriodicWord, f64)> = None;
    for (i, w) in orbits.iter().enumerate() {
        let oc = OrbitCocycle::new(cocycle, w)?;
        let sig = unstable_signature(&oc)?;
        let margin =
            signature_robustness_margin(&oc, cfg.margin_samples, derive_seed(cfg.seed, i as u64))?;
        if margin <= 0.0 {
            continue;
        }
        if sig == Signature(vec![2]) {
            if robust_2.as_ref().map_or(true, |(_, m)| margin > *m) {
                robust_2 = Some((w.clone(), margin));
            }
        } else if robust_11.as_ref().map_or(true, |(_, m)| margin > *m) {
            robust_11 = Some((w.clone(), margin));
        }
    }
    if let (Some((wa, ma)), Some((wb, mb))) = (&robust_2, &robust_11) {
        return Ok(DichotomyOutcome::Cycle {
            orbit_a: wa.clone(),
            sig_a: Signature(vec![2]),
            margin_a: *ma,
            perturbed_a: false,
            orbit_b: wb.clone(),
            sig_b: Signature(vec![1, 1]),
            margin_b: *mb,
            perturbed_b: false,
            budget_used: 0.0,
        });
    }

    // construct the missing side on a long orbit
    let mut candidates = long_orbit_candidates(sft, &cfg.long_lengths)?;
    // also retry the longest enumerated orbits
    let mut longest: Vec<PeriodicWord> = orbits.clone();
    longest.sort_by_key(|w| std::cmp::Reverse(w.period()));
    candidates.extend(longest.into_iter().take(8));

    let need_11 = robust_11.is_none();
    let mut constructed: Option<(PeriodicWord, Signature, f64, f64)> = None;
    for (i, w) in candidates.iter().enumerate() {
        let oc = OrbitCocycle::new(cocycle, w)?;
        let forced = if need_11 {
            force_signature_11(&oc, cfg.budget)
        } else {
            force_signature_2(&oc, cfg.budget)
        };
        let (perturbed, used) = match forced {
            Ok(x) => x,
            Err(_) => continue,
        };
        let target = if need_11 {
            Signature(vec![1, 1])
        } else {
            Signature(vec![2])
        };
        if unstable_signature(&perturbed)? != target {
            continue;
        }
        let margin = signature_robustness_margin(
            &perturbed,
            cfg.margin_samples,
            derive_seed(cfg.seed, 10_000 + i as u64),
        )?;
        if margin > 0.0 {
            constructed = Some((w.clone(), target, margin, used));
            break;
        }
    }
    let (cw, csig, cmargin, cused) =
        constructed.ok_or(PerturbError::InsufficientOrbitSupply { cap: cfg.orbit_cap })?;

    // the other side: prefer an existing robust orbit; otherwise construct
    // it too on a different long orbit
    let other = if need_11 { robust_2.clone() } else { robust_11.clone() };
    let (ow, osig, omargin, operturbed, oused) = if let Some((w, m)) = other {
        let sig = if need_11 {
            Signature(vec![2])
        } else {
            Signature(vec![1, 1])
        };
        (w, sig, m, false, 0.0)
    } else {
        // construct the opposite signature on another candidate
        let mut found = None;
        for (i, w) in candidates.iter().enumerate() {
            if *w == cw {
                continue;
            }
            let oc = OrbitCocycle::new(cocycle, w)?;
            let forced = if need_11 {
                force_signature_2(&oc, cfg.budget)
            } else {
                force_signature_11(&oc, cfg.budget)
            };
            let (perturbed, used) = match forced {
                Ok(x) => x,
                Err(_) => continue,
            };
            let target = if need_11 {
                Signature(vec![2])
            } else {
                Signature(vec![1, 1])
            };
            if unstable_signature(&perturbed)? != target {
                continue;
            }
            let margin = signature_robustness_margin(
                &perturbed,
                cfg.margin_samples,
                derive_seed(cfg.seed, 20_000 + i as u64),
            )?;
            if margin > 0.0 {
                found = Some((w.clone(), target, margin, true, used));
                break;
            }
        }
        found.ok_or(PerturbError::InsufficientOrbitSupply { cap: cfg.orbit_cap })?
    };
    Ok(DichotomyOutcome::Cycle {
        orbit_a: cw,
        sig_a: csig,
        margin_a: cmargin,
        perturbed_a: true,
        orbit_b: ow,
        sig_b: osig,
        margin_b: omargin,
        perturbed_b: operturbed,
        budget_used: cused.max(oused),
    })
}

fn ternary_min(
    f: &dyn Fn(f64) -> Result<f64, PerturbError>,
    mut lo: f64,
    mut hi: f64,
) -> Result<f64, PerturbError> {
    // track the best probe: the objective may have a flat floor, and the
    // shrinking interval can stall on its edge
    let mut best = (lo, f(lo)?);
    let hi_val = f(hi)?;
    if hi_val < best.1 {
        best = (hi, hi_val);
    }
    for _ in 0..200 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        let (f1, f2) = (f(m1)?, f(m2)?);
        if f1 < best.1 {
            best = (m1, f1);
        }
        if f2 < best.1 {
            best = (m2, f2);
        }
        if f1 <= f2 {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    Ok(best.0)
}

fn linear_fit(points: &[(usize, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|(m, _)| *m as f64).sum();
    let sy: f64 = points.iter().map(|(_, d)| d).sum();
    let sxx: f64 = points.iter().map(|(m, _)| (*m as f64).powi(2)).sum();
    let sxy: f64 = points.iter().map(|(m, d)| *m as f64 * d).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    let mean = sy / n;
    let ss_tot: f64 = points.iter().map(|(_, d)| (d - mean).powi(2)).sum();
    let ss_res: f64 = points
        .iter()
        .map(|(m, d)| (d - (slope * *m as f64 + intercept)).powi(2))
        .sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    (slope, r2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    fn block3(stable: f64, unstable: SmallMat) -> SmallMat {
        let mut m = SmallMat::zeros(3);
        m.set(0, 0, stable);
        for r in 0..2 {
            for c in 0..2 {
                m.set(1 + r, 1 + c, unstable.get(r, c));
            }
        }
        m
    }

    fn fixed_orbit(c: &LinearCocycle) -> OrbitCocycle {
        let sft = SftSystem::full_shift(1);
        let w = PeriodicWord::new(&sft, &[0]).unwrap();
        OrbitCocycle::new(c, &w).unwrap()
    }

    #[test]
    fn empty_plan_is_identity() {
        let c = LinearCocycle::new(3, (1, 2), vec![SmallMat::diag(&[0.5, 2.0, 3.0])]).unwrap();
        let oc = fixed_orbit(&c);
        let plan = PerturbationPlan::empty(&oc, 0.1);
        let out = apply_plan(&oc, &plan).unwrap();
        assert_eq!(out.factors(), oc.factors());
    }

    #[test]
    fn plan_budget_enforced() {
        let c = LinearCocycle::new(3, (1, 2), vec![SmallMat::diag(&[0.5, 2.0, 3.0])]).unwrap();
        let oc = fixed_orbit(&c);
        let mut plan = PerturbationPlan::empty(&oc, 0.1);
        // norm 0.15 = 1.5x budget
        let p = embed_block(&SmallMat::diag(&[1.15, 1.0]), 3, (1, 2), Bundle::Unstable);
        let err = plan.compose_at(0, &p).unwrap_err();
        assert!(matches!(err, PerturbError::BudgetExceeded { site: 0, .. }));
    }

    #[test]
    fn one_site_rotation_changes_product_eigenvalues() {
        let c = LinearCocycle::new(3, (1, 2), vec![block3(0.5, SmallMat::diag(&[2.0, 3.0]))]).unwrap();
        let oc = fixed_orbit(&c);
        let mut plan = PerturbationPlan::empty(&oc, 0.5);
        let rot = embed_block(&SmallMat::rotation2(0.2), 3, (1, 2), Bundle::Unstable);
        plan.compose_at(0, &rot).unwrap();
        let out = apply_plan(&oc, &plan).unwrap();
        // product = R_0.2 * diag(2,3) on the unstable block
        let expect = SmallMat::rotation2(0.2).mul(&SmallMat::diag(&[2.0, 3.0]));
        let got = out.scaled_product(Bundle::Unstable);
        let e1 = expect.eigenvalues();
        let e2 = got.m.eigenvalues();
        for (a, b) in e1.iter().zip(e2.iter()) {
            assert_close(a.norm(), b.norm() * got.log_scale.exp(), 1e-9);
        }
    }

    #[test]
    fn inverse_plan_restores_product() {
        let c = LinearCocycle::new(3, (1, 2), vec![block3(0.5, SmallMat::diag(&[2.0, 3.0]))]).unwrap();
        let oc = fixed_orbit(&c);
        let mut plan = PerturbationPlan::empty(&oc, 0.5);
        let rot = embed_block(&SmallMat::rotation2(0.2), 3, (1, 2), Bundle::Unstable);
        plan.compose_at(0, &rot).unwrap();
        let there = apply_plan(&oc, &plan).unwrap();
        let back = apply_plan(&there, &plan.inverse()).unwrap();
        let orig = oc.product_along_word();
        let restored = back.product_along_word();
        for r in 0..3 {
            for cidx in 0..3 {
                assert_close(orig.get(r, cidx), restored.get(r, cidx), 1e-12);
            }
        }
    }

    #[test]
    fn rotation_number_scaled_rotation() {
        let c = LinearCocycle::new(
            3,
            (1, 2),
            vec![block3(0.5, SmallMat::rotation2(PI / 3.0).scale(2.0))],
        )
        .unwrap();
        let oc = fixed_orbit(&c);
        assert_close(rotation_number(&oc).unwrap(), 1.0 / 6.0, 1e-12);
    }

    #[test]
    fn rotation_number_diagonal_is_zero() {
        let c = LinearCocycle::new(3, (1, 2), vec![block3(0.5, SmallMat::diag(&[2.0, 3.0]))]).unwrap();
        let oc = fixed_orbit(&c);
        assert_close(rotation_number(&oc).unwrap(), 0.0, 1e-12);
    }

    #[test]
    fn rotation_number_additive_under_doubling() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        let sft = SftSystem::full_shift(2);
        for _ in 0..20 {
            let mut gens = vec![];
            for _ in 0..2 {
                let g = if rng.gen_bool(0.5) {
                    SmallMat::rotation2(rng.gen_range(-1.5..1.5))
                        .scale(rng.gen_range(1.2..3.0))
                } else {
                    SmallMat::diag(&[rng.gen_range(1.2..3.0), rng.gen_range(1.2..3.0)])
                };
                gens.push(block3(0.5, g));
            }
            let c = LinearCocycle::new(3, (1, 2), gens).unwrap();
            let w = PeriodicWord::new(&sft, &[0, 1]).unwrap();
            let oc = OrbitCocycle::new(&c, &w).unwrap();
            let single = rotation_number(&oc).unwrap();
            let double = rotation_number(&oc.doubled()).unwrap();
            assert_close(double, 2.0 * single, 1e-10);
        }
    }

    #[test]
    fn rotate_to_real_gives_scalar() {
        // period-8 orbit of rotations: bring the product to equal real
        // eigenvalues within budget
        let c = LinearCocycle::new(
            3,
            (1, 2),
            vec![
                block3(0.5, SmallMat::rotation2(0.11).scale(2.0)),
                block3(0.5, SmallMat::rotation2(0.31).scale(1.5)),
            ],
        )
        .unwrap();
        let sft = SftSystem::full_shift(2);
        let w = PeriodicWord::new(&sft, &[0, 0, 0, 1, 0, 0, 1, 1, 0, 1, 0, 0]).unwrap();
        let oc = OrbitCocycle::new(&c, &w).unwrap();
        assert!(oc.product_eigen_data().unwrap().has_complex_pair);
        let (out, plan) = rotate_to_real(&oc, 0.2).unwrap();
        assert!(plan.max_norm() <= 0.2 + 1e-12);
        let gap = unstable_rel_gap(&out);
        assert!(gap <= 1e-9, "gap {gap}");
        let eig = out.scaled_product(Bundle::Unstable).m.eigenvalues();
        assert!(eig.iter().all(|z| z.im == 0.0));
    }

    #[test]
    fn normalize_jordan_fixed_point_single_shear() {
        // product [[2,1],[0,2]] with generous budget: one shear site with
        // s = -1/2 in product coordinates, factor norm <= 0.5
        let c = LinearCocycle::new(
            3,
            (1, 2),
            vec![block3(0.5, SmallMat::from_rows(2, &[2.0, 1.0, 0.0, 2.0]))],
        )
        .unwrap();
        let oc = fixed_orbit(&c);
        let (out, plan, report) = normalize_to_scalar(&oc, 0.5).unwrap();
        assert!(plan.max_norm() <= 0.5 + 1e-12);
        assert_eq!(report.shear_sites, 1);
        assert!(report.residual_off_diagonal < 1e-12);
        let p = out.scaled_product(Bundle::Unstable);
        let m = p.m.scale(p.log_scale.exp());
        assert_close(m.get(0, 0), 2.0, 1e-10);
        assert_close(m.get(1, 1), 2.0, 1e-10);
        assert_close(m.get(0, 1), 0.0, 1e-10);
        assert_close(m.get(1, 0), 0.0, 1e-10);
    }

    #[test]
    fn normalize_period_100_shear_schedule() {
        // A_2-form product with off-diagonal ratio 3 at eps = 0.05 requires
        // 60 shear sites
        let lam = 1.02f64;
        let n = 100usize;
        // per-site triangular factor [[lam, c],[0, lam]] with total
        // b/a = n c lam^{n-1} / lam^n = n c / lam = 3  =>  c = 3 lam / n
        let cshear = 3.0 * lam / n as f64;
        let g = block3(0.5, SmallMat::from_rows(2, &[lam, cshear, 0.0, lam]));
        let c = LinearCocycle::new(3, (1, 2), vec![g, block3(0.5, SmallMat::diag(&[lam, lam]))])
            .unwrap();
        let sft = SftSystem::full_shift(2);
        let mut symbols = vec![0u8; n - 1];
        symbols.push(1);
        let w = PeriodicWord::new(&sft, &symbols).unwrap();
        let oc = OrbitCocycle::new(&c, &w).unwrap();
        let (out, plan, report) = normalize_to_scalar(&oc, 0.05).unwrap();
        assert!(plan.max_norm() <= 0.05 + 1e-12);
        assert!(report.residual_off_diagonal < 1e-9);
        let eig = out.scaled_product(Bundle::Unstable).m.eigenvalues();
        assert!(eig.iter().all(|z| z.im == 0.0));
        assert_close(eig[0].re, eig[1].re, 1e-9 * eig[1].re.abs());
    }

    #[test]
    fn normalize_budget_too_small_reports_period() {
        let c = LinearCocycle::new(
            3,
            (1, 2),
            vec![block3(0.5, SmallMat::from_rows(2, &[2.0, 1.0, 0.0, 2.0]))],
        )
        .unwrap();
        let oc = fixed_orbit(&c);
        match normalize_to_scalar(&oc, 0.01) {
            Err(PerturbError::PeriodTooShort { required, available }) => {
                assert!(required > available);
            }
            other => panic!("expected PeriodTooShort, got {other:?}"),
        }
    }

    #[test]
    fn normalize_equalizes_diagonal_gap() {
        // diagonalizable with modulus gap: stretches close the gap
        let c = LinearCocycle::new(
            3,
            (1, 2),
            vec![block3(0.5, SmallMat::diag(&[2.0, 2.2]))],
        )
        .unwrap();
        let sft = SftSystem::full_shift(1);
        let mut symbols = vec![0u8];
        // period 8 via an 8-fold word is impossible on one symbol; use
        // alphabet 2 with identical generators
        let c2 = LinearCocycle::new(
            3,
            (1, 2),
            vec![
                block3(0.5, SmallMat::diag(&[2.0, 2.2])),
                block3(0.5, SmallMat::diag(&[2.0, 2.2])),
            ],
        )
        .unwrap();
        let sft2 = SftSystem::full_shift(2);
        symbols = vec![0, 0, 0, 1, 0, 1, 1, 1];
        let w = PeriodicWord::new(&sft2, &symbols).unwrap();
        let oc = OrbitCocycle::new(&c2, &w).unwrap();
        let (out, _, _) = normalize_to_scalar(&oc, 0.2).unwrap();
        let eig = out.scaled_product(Bundle::Unstable).m.eigenvalues();
        assert!(eig.iter().all(|z| z.im == 0.0));
        assert_close(eig[0].re, eig[1].re, 1e-9 * eig[1].re.abs());
        let _ = (c, sft);
    }

    #[test]
    fn split_examples() {
        // diag(2,2) with eta = (0.01, 0.02) -> diag(2.02, 2.04)
        let c = LinearCocycle::new(3, (1, 2), vec![block3(0.5, SmallMat::diag(&[2.0, 2.0]))]).unwrap();
        let oc = fixed_orbit(&c);
        let (out, _) = split_equal_eigenvalues(&oc, 0.01, 0.02, 0.1).unwrap();
        let p = out.scaled_product(Bundle::Unstable);
        let eig = p.m.eigenvalues();
        let vals: Vec<f64> = eig.iter().map(|z| z.re * p.log_scale.exp()).collect();
        assert_close(vals[0], 2.02, 1e-9);
        assert_close(vals[1], 2.04, 1e-9);
        assert_eq!(
            unstable_signature(&out).unwrap(),
            Signature(vec![1, 1])
        );

        // complex pair -> error
        let cr = LinearCocycle::new(
            3,
            (1, 2),
            vec![block3(0.5, SmallMat::rotation2(0.3).scale(2.0))],
        )
        .unwrap();
        let ocr = fixed_orbit(&cr);
        assert!(matches!(
            split_equal_eigenvalues(&ocr, 0.01, 0.02, 0.1).unwrap_err(),
            PerturbError::ComplexPair
        ));

        // Jordan block -> kill nilpotent first
        let cj = LinearCocycle::new(
            3,
            (1, 2),
            vec![block3(0.5, SmallMat::from_rows(2, &[2.0, 1.0, 0.0, 2.0]))],
        )
        .unwrap();
        let ocj = fixed_orbit(&cj);
        assert!(matches!(
            split_equal_eigenvalues(&ocj, 0.01, 0.02, 0.1).unwrap_err(),
            PerturbError::NilpotentPresent
        ));
    }

    #[test]
    fn arc_oscillation_growth_matches_linear_rate() {
        // all-rotation model: delta(m) = m xi / 2 pi exactly
        let c = LinearCocycle::new(
            3,
            (1, 2),
            vec![
                block3(0.5, SmallMat::rotation2(0.3).scale(2.0)),
                block3(0.5, SmallMat::rotation2(0.7).scale(3.0)),
            ],
        )
        .unwrap();
        let sft = SftSystem::full_shift(2);
        let cfg = RotationArcConfig {
            marked_symbol: 0,
            depth: 1,
            xi: 0.5, // fast test: m_t around 13
            budget: 0.6,
            table_factor: 4,
            ..Default::default()
        };
        let report = rotation_arc_experiment(&c, &sft, &cfg).unwrap();
        let expect_mt = (2.0 * PI / 0.5).floor() as usize + 1;
        assert_eq!(report.m_t, expect_mt);
        for &(m, d) in &report.oscillation {
            assert_close(d, m as f64 * 0.5 / (2.0 * PI), 1e-9);
        }
        assert!(report.growth_r_squared > 0.999);
        assert!(report.rho_is_integer);
        assert!(report.eigen_rel_gap_at_t_star <= 1e-6);
        // self-consistency: equal-modulus real eigenvalues at t_star
        let (word, sites) = arc_family_word(&sft, 0, 1, report.m_t).unwrap();
        let arcs: Vec<RotationArc> = sites
            .iter()
            .map(|&site| RotationArc { site, xi: cfg.xi, t_range: (0.0, 1.0) })
            .collect();
        let oc = arc_perturbed(&c, &word, &arcs, report.t_star).unwrap();
        let eig = oc.scaled_product(Bundle::Unstable).m.eigenvalues();
        assert!(eig.iter().all(|z| z.im == 0.0));
    }

    #[test]
    fn arc_constant_is_error() {
        let c = LinearCocycle::new(
            3,
            (1, 2),
            vec![
                block3(0.5, SmallMat::identity(2).scale(2.0)),
                block3(0.5, SmallMat::diag(&[2.0, 3.0])),
            ],
        )
        .unwrap();
        let sft = SftSystem::full_shift(2);
        let cfg = RotationArcConfig {
            marked_symbol: 0,
            xi: 0.0,
            ..Default::default()
        };
        assert!(matches!(
            rotation_arc_experiment(&c, &sft, &cfg).unwrap_err(),
            PerturbError::ArcConstant
        ));
    }

    fn figure_pair_cocycle() -> LinearCocycle {
        LinearCocycle::new(
            3,
            (1, 2),
            vec![
                block3(0.5, SmallMat::rotation2(0.3).scale(2.0)),
                block3(1.0 / 3.0, SmallMat::diag(&[2.0, 3.0])),
            ],
        )
        .unwrap()
    }

    #[test]
    fn make_dense_simple_already_simple_is_untouched() {
        let c = LinearCocycle::new(
            3,
            (1, 2),
            vec![
                block3(0.5, SmallMat::diag(&[2.0, 8.0])),
                block3(0.25, SmallMat::diag(&[3.0, 10.0])),
            ],
        )
        .unwrap();
        let sft = SftSystem::full_shift(2);
        let (oc, report) = make_dense_simple(&c, &sft, 2, 0.2, 0).unwrap();
        assert!(report.stages.is_empty());
        assert_eq!(report.budget_used, 0.0);
        assert!(oc.has_simple_spectrum());
    }

    #[test]
    fn make_dense_simple_rotation_system_full_pipeline() {
        let c = figure_pair_cocycle();
        let sft = SftSystem::full_shift(2);
        let (oc, report) = make_dense_simple(&c, &sft, 2, 0.2, 0).unwrap();
        assert!(oc.has_simple_spectrum());
        assert_eq!(report.final_signature, Signature(vec![1, 1]));
        assert!(report.budget_used <= 0.2);
        // density preserved through lengthening
        let adm: std::collections::BTreeSet<Vec<u8>> =
            sft.admissible_words(2).unwrap().into_iter().collect();
        assert!(report.word.cyclic_factors(2).is_superset(&adm));
        assert!(!report.stages.is_empty());
    }

    #[test]
    fn make_dense_simple_budget_too_small() {
        let c = figure_pair_cocycle();
        let sft = SftSystem::full_shift(2);
        // far-from-real rotation with a hopeless budget
        let err = make_dense_simple(&c, &sft, 2, 1e-9, 0).unwrap_err();
        assert!(matches!(
            err,
            PerturbError::StageBudget { .. } | PerturbError::BudgetExceeded { .. }
        ));
    }

    #[test]
    fn explosion_n1_returns_seeds() {
        let c = figure_pair_cocycle();
        let sft = SftSystem::full_shift(2);
        let p = PeriodicWord::new(&sft, &[1]).unwrap();
        let q = PeriodicWord::new(&sft, &[0]).unwrap();
        let report = signature_explosion(&c, &sft, &p, &q, 1, 0.1, 7, 8, 60).unwrap();
        assert_eq!(report.set_p.len(), 1);
        assert_eq!(report.set_q.len(), 1);
        assert_eq!(report.set_p[0].word, p);
        assert_eq!(report.set_q[0].word, q);
    }

    #[test]
    fn explosion_equal_signatures_is_error() {
        let c = figure_pair_cocycle();
        let sft = SftSystem::full_shift(2);
        let p = PeriodicWord::new(&sft, &[1]).unwrap();
        assert!(matches!(
            signature_explosion(&c, &sft, &p, &p, 2, 0.1, 7, 8, 60).unwrap_err(),
            PerturbError::SeedSignatures
        ));
    }

    #[test]
    fn explosion_three_of_each() {
        let c = figure_pair_cocycle();
        let sft = SftSystem::full_shift(2);
        let p = PeriodicWord::new(&sft, &[1]).unwrap(); // (1,1)
        let q = PeriodicWord::new(&sft, &[0]).unwrap(); // (2)
        let report = signature_explosion(&c, &sft, &p, &q, 3, 0.1, 7, 12, 60).unwrap();
        assert!(report.set_p.len() >= 3);
        assert!(report.set_q.len() >= 3);
        for m in report.set_p.iter().chain(report.set_q.iter()) {
            assert!(m.margin > 0.0, "margin of {} is zero", m.word);
            assert!(m.budget_used <= 0.1 + 1e-12);
        }
        let words: std::collections::HashSet<_> = report
            .set_p
            .iter()
            .chain(report.set_q.iter())
            .map(|m| m.word.clone())
            .collect();
        assert_eq!(words.len(), report.set_p.len() + report.set_q.len());
    }

    #[test]
    fn dichotomy_dominated_case() {
        let c = LinearCocycle::new(
            3,
            (1, 2),
            vec![
                block3(0.5, SmallMat::diag(&[2.0, 8.0])),
                block3(0.25, SmallMat::diag(&[3.0, 10.0])),
            ],
        )
        .unwrap();
        let sft = SftSystem::golden_mean();
        let out = dichotomy_pipeline(&c, &sft, &DichotomyConfig::default()).unwrap();
        match out {
            DichotomyOutcome::Dominated { min_margin, .. } => assert!(min_margin > 0.0),
            other => panic!("expected dominated, got {other:?}"),
        }
    }

    #[test]
    fn dichotomy_mixed_case_finds_existing_cycle() {
        let c = figure_pair_cocycle();
        let sft = SftSystem::full_shift(2);
        let out = dichotomy_pipeline(&c, &sft, &DichotomyConfig::default()).unwrap();
        match out {
            DichotomyOutcome::Cycle {
                sig_a,
                sig_b,
                margin_a,
                margin_b,
                ..
            } => {
                assert_ne!(sig_a, sig_b);
                assert!(margin_a > 0.0 && margin_b > 0.0);
            }
            other => panic!("expected cycle, got {other:?}"),
        }
    }

    #[test]
    fn dichotomy_all_rotations_constructs_cycle() {
        // all signatures (2): pipeline must construct the (1,1) side
        let c = LinearCocycle::new(
            3,
            (1, 2),
            vec![
                block3(0.5, SmallMat::rotation2(0.3).scale(2.0)),
                block3(0.5, SmallMat::rotation2(0.7).scale(3.0)),
            ],
        )
        .unwrap();
        let sft = SftSystem::full_shift(2);
        let out = dichotomy_pipeline(&c, &sft, &DichotomyConfig::default()).unwrap();
        match out {
            DichotomyOutcome::Cycle {
                sig_a,
                sig_b,
                margin_a,
                margin_b,
                perturbed_a,
                budget_used,
                ..
            } => {
                assert_ne!(sig_a, sig_b);
                assert!(margin_a > 0.0 && margin_b > 0.0);
                assert!(perturbed_a);
                assert!(budget_used <= 0.1 + 1e-12);
            }
            other => panic!("expected cycle, got {other:?}"),
        }
    }
}
