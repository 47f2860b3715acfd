//! The Hausdorff-type density of Φ at a diagonal point: the infimum over
//! invertible linear maps of the maximal order-q directional derivative,
//! normalized by the determinant, together with the Newton-polytope
//! positivity criterion and the restricted multisystem variant.
//!
//! The infimum over GL(n) is parametrized as `T = O·exp(S(θ))·diag(e^u)` with
//! `Σu_i = 0`: scale invariance of the order-q expression reduces the search
//! to SL(n), and the polar factorization absorbs the remaining orthogonal
//! factor up to a bounded constant.

use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagonal::{alpha_tuples, multiindex_factorial, order_of_vanishing};
use crate::error::{Error, Result};
use crate::fmat::{skew_from_params, FMat};
use crate::fpoly::FPoly;
use crate::geometry::PhiSpec;
use crate::lp;
use crate::optim::NelderMead;
use crate::poly::{Polynomial, Rat};
use crate::rng;

/// Relative tolerance below which a floating derivative coefficient counts
/// as zero when building exponent clouds at sampled frames.
pub const COEFF_ZERO_REL_TOL: f64 = 1e-10;

/// Minimal relative-interior margin required of every sampled frame before
/// the positivity verdict may be `positive`.
pub const POSITIVITY_MARGIN: f64 = 1e-6;

/// Norm used on ℝ^m when Φ is vector-valued.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum VectorNorm {
    #[default]
    Max,
    Euclidean,
}

impl VectorNorm {
    pub fn apply(&self, v: &[f64]) -> f64 {
        match self {
            VectorNorm::Max => v.iter().map(|x| x.abs()).fold(0.0, f64::max),
            VectorNorm::Euclidean => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
        }
    }
}

/// Options for the density optimization.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DensityOpts {
    pub seed: u64,
    /// Number of optimizer restarts.
    pub starts: usize,
    /// Nelder-Mead iterations per restart.
    pub iterations: usize,
    /// Orthogonal frames sampled by the positivity criterion.
    pub o_samples: usize,
    pub norm: VectorNorm,
}

impl Default for DensityOpts {
    fn default() -> Self {
        DensityOpts {
            seed: 0,
            starts: 64,
            iterations: 500,
            o_samples: 200,
            norm: VectorNorm::Max,
        }
    }
}

/// Positivity verdict for the density at a point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Positivity {
    Positive,
    Zero,
    Unknown,
}

/// Certificate attached to a positivity verdict.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum HullWitness {
    /// Convex weights realizing `(q/n)·1` inside the identity-frame cloud.
    Weights {
        cloud: Vec<Vec<u32>>,
        weights: Vec<f64>,
        margin: f64,
    },
    /// Separating vector: `ell · Σa > (q/n)·(ell · 1)` for every cloud point.
    Separator {
        frame: Vec<Vec<f64>>,
        cloud: Vec<Vec<u32>>,
        ell: Vec<f64>,
    },
}

/// Result of a density evaluation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DensityReport {
    pub schema_version: String,
    pub seed: u64,
    pub point: Vec<f64>,
    pub q: u32,
    /// Best value found; an upper bound on the true infimum.
    pub upper: f64,
    pub certificate_t: Vec<Vec<f64>>,
    pub positivity: Positivity,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hull_witness: Option<HullWitness>,
    pub starts: usize,
    pub iterations_per_start: usize,
    pub o_samples: usize,
}

/// The exact order-q Taylor form of Φ at the diagonal point `x`:
/// the homogeneous degree-q part of `v ↦ Φ(x+v_1, .., x+v_k)`, one
/// polynomial in the k·n displacement variables per component.
pub struct LeadingForm {
    pub n: usize,
    pub k: usize,
    pub q: u32,
    pub components: Vec<Polynomial>,
}

impl LeadingForm {
    /// Builds the form, verifying exactly that every lower-order part
    /// vanishes; the density formula is valid only at exact order q.
    pub fn at_point(phi: &PhiSpec, q: u32, x: &[Rat], params: &[Rat]) -> Result<LeadingForm> {
        phi.validate()?;
        if x.len() != phi.n {
            return Err(Error::PointLengthMismatch {
                expected: phi.n,
                got: x.len(),
            });
        }
        let frozen = if phi.params > 0 {
            phi.freeze_params(params)?
        } else {
            phi.clone()
        };
        let n = frozen.n;
        let k = frozen.k;
        let nv = k * n;
        let subs: Vec<Polynomial> = (0..nv)
            .map(|v| {
                let coord = v % n;
                let c = Polynomial::constant(nv, x[coord].clone());
                c.checked_add(&Polynomial::var(nv, v))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut components = Vec::with_capacity(frozen.m);
        for comp in frozen.body.components() {
            let shifted = comp.substitute(&subs)?;
            for (m, c) in shifted.terms() {
                if m.total_degree() < q && !c.is_zero() {
                    return Err(Error::OrderMismatch(format!(
                        "derivative of order {} does not vanish at the point; \
                         expected exact order {}",
                        m.total_degree(),
                        q
                    )));
                }
            }
            components.push(shifted.homogeneous_part(q));
        }
        Ok(LeadingForm {
            n,
            k,
            q,
            components,
        })
    }

    /// Floating copy of the form for the optimizer.
    pub fn to_f64(&self) -> Vec<FPoly> {
        self.components.iter().map(FPoly::from_exact).collect()
    }

    /// Exact directional derivatives at the identity frame:
    /// `∂^{α_1}_1 ⋯ ∂^{α_k}_k Φ(x,..,x) = α! · [v^α] L`.
    pub fn identity_derivative(&self, alphas: &[Vec<u32>]) -> Vec<Rat> {
        let mut exps = Vec::with_capacity(self.n * self.k);
        for a in alphas {
            exps.extend_from_slice(a);
        }
        let mono = crate::poly::Monomial(exps);
        let fact: Rat = alphas.iter().map(|a| multiindex_factorial(a)).product();
        self.components
            .iter()
            .map(|c| c.coeff(&mono) * &fact)
            .collect()
    }
}

/// All order-q directional derivatives under a frame `T`, computed by
/// expanding `L(T u)` and scaling coefficients by the multiindex factorials.
pub struct DirectionalDerivatives {
    n: usize,
    k: usize,
    q: u32,
    forms: Vec<FPoly>,
    tuples: Vec<Vec<Vec<u32>>>,
    factorials: Vec<f64>,
}

impl DirectionalDerivatives {
    pub fn new(form: &LeadingForm) -> Self {
        let tuples = alpha_tuples(form.n, form.k, form.q);
        let factorials = tuples
            .iter()
            .map(|t| {
                t.iter()
                    .map(|a| multiindex_factorial(a))
                    .product::<Rat>()
                    .to_f64()
                    .unwrap()
            })
            .collect();
        DirectionalDerivatives {
            n: form.n,
            k: form.k,
            q: form.q,
            forms: form.to_f64(),
            tuples,
            factorials,
        }
    }

    pub fn tuples(&self) -> &[Vec<Vec<u32>>] {
        &self.tuples
    }

    /// Expand `L(Tu)` for one component.
    fn expand(&self, form: &FPoly, t: &FMat) -> FPoly {
        let nv = self.n * self.k;
        let mut out = FPoly::zero(nv);
        for (mono, coeff) in &form.terms {
            let mut term = FPoly::constant(nv, *coeff);
            for (var, &e) in mono.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let block = var / self.n;
                let coord = var % self.n;
                // v_{block,coord} = Σ_m T[coord][m] u_{block,m}
                let mut linear = FPoly::zero(nv);
                for m in 0..self.n {
                    let w = t.get(coord, m);
                    if w != 0.0 {
                        let mut exps = vec![0u32; nv];
                        exps[block * self.n + m] = 1;
                        linear.add_term(exps, w);
                    }
                }
                for _ in 0..e {
                    term = term.mul(&linear);
                }
            }
            out = out.add(&term);
        }
        out
    }

    /// Per-tuple derivative vectors (length m) under frame `T`.
    pub fn values(&self, t: &FMat) -> Vec<Vec<f64>> {
        let expanded: Vec<FPoly> = self.forms.iter().map(|f| self.expand(f, t)).collect();
        self.tuples
            .iter()
            .enumerate()
            .map(|(idx, tuple)| {
                let mut exps = Vec::with_capacity(self.n * self.k);
                for a in tuple {
                    exps.extend_from_slice(a);
                }
                expanded
                    .iter()
                    .map(|f| f.terms.get(&exps).copied().unwrap_or(0.0) * self.factorials[idx])
                    .collect()
            })
            .collect()
    }

    /// The density objective `F(T) = max_α |D_α(T)|^{n/q} / |det T|`.
    pub fn objective(&self, t: &FMat, norm: VectorNorm) -> f64 {
        let vals = self.values(t);
        let max = vals.iter().map(|v| norm.apply(v)).fold(0.0f64, f64::max);
        let det = t.det().abs();
        if det == 0.0 {
            return f64::INFINITY;
        }
        max.powf(self.n as f64 / self.q as f64) / det
    }
}

/// Builds `T = O0 · exp(S(θ)) · diag(e^{u_1}, .., e^{u_{n-1}}, e^{-Σu})`.
fn frame_from_params(n: usize, o0: &FMat, params: &[f64]) -> FMat {
    let skew_dim = n * (n - 1) / 2;
    let (theta, u) = params.split_at(skew_dim);
    let rot = if skew_dim > 0 {
        o0.matmul(&skew_from_params(n, theta).expm())
    } else {
        o0.clone()
    };
    let mut diag = Vec::with_capacity(n);
    let mut sum = 0.0;
    for &ui in u {
        diag.push(ui.exp());
        sum += ui;
    }
    diag.push((-sum).exp());
    rot.matmul(&FMat::diag(&diag))
}

fn param_dim(n: usize) -> usize {
    n * (n - 1) / 2 + (n - 1)
}

/// Resolve the order of vanishing of Φ, preferring a supplied value.
fn resolve_q(phi: &PhiSpec, q: Option<u32>) -> Result<u32> {
    match q {
        Some(v) => Ok(v),
        None => {
            let e = order_of_vanishing(phi)?;
            if e.identically_zero {
                return Err(Error::OrderMismatch("Φ is identically zero".into()));
            }
            Ok(e.q)
        }
    }
}

/// Exact identity-frame exponent cloud: the sums `Σ_j α_j` over tuples whose
/// diagonal derivative is exactly nonzero.
pub fn identity_exponent_cloud(form: &LeadingForm) -> Vec<Vec<u32>> {
    let mut cloud: Vec<Vec<u32>> = Vec::new();
    for tuple in alpha_tuples(form.n, form.k, form.q) {
        let vals = form.identity_derivative(&tuple);
        if vals.iter().any(|v| !v.is_zero()) {
            let mut sum = vec![0u32; form.n];
            for a in &tuple {
                for (i, &e) in a.iter().enumerate() {
                    sum[i] += e;
                }
            }
            if !cloud.contains(&sum) {
                cloud.push(sum);
            }
        }
    }
    cloud.sort();
    cloud
}

/// Exponent cloud at a floating orthogonal frame; nonzero-ness decided by
/// [`COEFF_ZERO_REL_TOL`] relative to the largest derivative.
pub fn sampled_exponent_cloud(
    derivs: &DirectionalDerivatives,
    o: &FMat,
    norm: VectorNorm,
) -> Vec<Vec<u32>> {
    let vals = derivs.values(o);
    let magnitudes: Vec<f64> = vals.iter().map(|v| norm.apply(v)).collect();
    let max = magnitudes.iter().cloned().fold(0.0f64, f64::max);
    let cutoff = max * COEFF_ZERO_REL_TOL;
    let mut cloud: Vec<Vec<u32>> = Vec::new();
    for (tuple, &mag) in derivs.tuples().iter().zip(&magnitudes) {
        if mag > cutoff && mag > 0.0 {
            let mut sum = vec![0u32; derivs.n];
            for a in tuple {
                for (i, &e) in a.iter().enumerate() {
                    sum[i] += e;
                }
            }
            if !cloud.contains(&sum) {
                cloud.push(sum);
            }
        }
    }
    cloud.sort();
    cloud
}

fn cloud_to_rat(cloud: &[Vec<u32>]) -> Vec<Vec<Rat>> {
    cloud
        .iter()
        .map(|p| p.iter().map(|&e| crate::poly::rat_int(e as i64)).collect())
        .collect()
}

fn target_point(n: usize, q: u32) -> Vec<Rat> {
    vec![crate::poly::rat(q as i64, n as i64); n]
}

struct FrameCheck {
    member: bool,
    margin: f64,
}

fn check_frame(cloud: &[Vec<u32>], n: usize, q: u32) -> FrameCheck {
    let pts = cloud_to_rat(cloud);
    let target = target_point(n, q);
    match lp::hull_membership_margin(&pts, &target) {
        Some(margin) => FrameCheck {
            member: true,
            margin: margin.to_f64().unwrap_or(0.0),
        },
        None => FrameCheck {
            member: false,
            margin: 0.0,
        },
    }
}

/// The Newton-polytope positivity criterion: the density is positive iff
/// `(q/n)·1` lies in the convex hull of the exponent cloud for every
/// orthogonal frame. Sampling can certify only `zero` (with an exact
/// separating vector); `positive` records sampled evidence with margins.
pub fn positivity_criterion(
    phi: &PhiSpec,
    q: Option<u32>,
    x: &[f64],
    params: &[f64],
    opts: &DensityOpts,
) -> Result<(Positivity, Option<HullWitness>)> {
    let q = resolve_q(phi, q)?;
    let x_rat: Vec<Rat> = x
        .iter()
        .map(|&v| Rat::from_float(v).ok_or_else(|| Error::Validation("non-finite point".into())))
        .collect::<Result<Vec<_>>>()?;
    let p_rat: Vec<Rat> = params
        .iter()
        .map(|&v| Rat::from_float(v).ok_or_else(|| Error::Validation("non-finite point".into())))
        .collect::<Result<Vec<_>>>()?;
    let form = LeadingForm::at_point(phi, q, &x_rat, &p_rat)?;
    let n = form.n;

    // exact check at the identity frame
    let id_cloud = identity_exponent_cloud(&form);
    let target = target_point(n, q);
    let id_pts = cloud_to_rat(&id_cloud);
    if !lp::in_convex_hull(&id_pts, &target) {
        let ell = lp::separating_vector(&id_pts, &target)
            .map(|v| v.iter().map(|r| r.to_f64().unwrap_or(f64::NAN)).collect())
            .unwrap_or_default();
        return Ok((
            Positivity::Zero,
            Some(HullWitness::Separator {
                frame: FMat::identity(n).rows(),
                cloud: id_cloud,
                ell,
            }),
        ));
    }
    let id_margin = lp::hull_membership_margin(&id_pts, &target)
        .map(|m| m.to_f64().unwrap_or(0.0))
        .unwrap_or(0.0);

    // sampled frames
    let derivs = DirectionalDerivatives::new(&form);
    let norm = opts.norm;
    let results: Vec<(usize, Vec<Vec<u32>>, FrameCheck)> = (0..opts.o_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::shard(opts.seed, 0x505 + i as u64);
            let o = rng::random_orthogonal(&mut rng, n);
            let cloud = sampled_exponent_cloud(&derivs, &o, norm);
            let check = check_frame(&cloud, n, q);
            (i, cloud, check)
        })
        .collect();
    for (i, cloud, check) in &results {
        if !check.member {
            let mut rng = rng::shard(opts.seed, 0x505 + *i as u64);
            let o = rng::random_orthogonal(&mut rng, n);
            let pts = cloud_to_rat(cloud);
            let ell = lp::separating_vector(&pts, &target)
                .map(|v| v.iter().map(|r| r.to_f64().unwrap_or(f64::NAN)).collect())
                .unwrap_or_default();
            return Ok((
                Positivity::Zero,
                Some(HullWitness::Separator {
                    frame: o.rows(),
                    cloud: cloud.clone(),
                    ell,
                }),
            ));
        }
    }
    let min_margin = results
        .iter()
        .map(|(_, _, c)| c.margin)
        .fold(f64::INFINITY, f64::min)
        .min(id_margin);
    if min_margin >= POSITIVITY_MARGIN {
        let weights = convex_weights(&id_pts, &target);
        Ok((
            Positivity::Positive,
            Some(HullWitness::Weights {
                cloud: id_cloud,
                weights,
                margin: min_margin,
            }),
        ))
    } else {
        Ok((Positivity::Unknown, None))
    }
}

/// Convex-combination weights hitting the target, by a feasibility solve.
fn convex_weights(points: &[Vec<Rat>], target: &[Rat]) -> Vec<f64> {
    let npts = points.len();
    let dim = target.len();
    let mut a = Vec::with_capacity(dim + 1);
    for d in 0..dim {
        a.push(points.iter().map(|p| p[d].clone()).collect::<Vec<_>>());
    }
    a.push(vec![Rat::from_integer(1.into()); npts]);
    let mut b: Vec<Rat> = target.to_vec();
    b.push(Rat::from_integer(1.into()));
    let lp = lp::StandardLp {
        a,
        b,
        c: vec![Rat::zero(); npts],
    };
    match lp.solve() {
        lp::LpOutcome::Optimal { x, .. } => x.iter().map(|v| v.to_f64().unwrap_or(0.0)).collect(),
        _ => vec![],
    }
}

/// Evaluates the density by multi-start Nelder-Mead over `(O, u)` and runs
/// the positivity criterion. Deterministic under a fixed seed.
pub fn density_infimum(
    phi: &PhiSpec,
    q: Option<u32>,
    x: &[f64],
    params: &[f64],
    opts: &DensityOpts,
) -> Result<DensityReport> {
    let q = resolve_q(phi, q)?;
    if q == 0 {
        return Err(Error::OrderMismatch(
            "Φ does not vanish on the diagonal; the density formula needs q >= 1".into(),
        ));
    }
    let x_rat: Vec<Rat> = x
        .iter()
        .map(|&v| Rat::from_float(v).ok_or_else(|| Error::Validation("non-finite point".into())))
        .collect::<Result<Vec<_>>>()?;
    let p_rat: Vec<Rat> = params
        .iter()
        .map(|&v| Rat::from_float(v).ok_or_else(|| Error::Validation("non-finite point".into())))
        .collect::<Result<Vec<_>>>()?;
    let form = LeadingForm::at_point(phi, q, &x_rat, &p_rat)?;
    let n = form.n;
    let derivs = DirectionalDerivatives::new(&form);
    let norm = opts.norm;

    let dim = param_dim(n);
    let results: Vec<(f64, FMat)> = (0..opts.starts)
        .into_par_iter()
        .map(|start| {
            let mut rng = rng::shard(opts.seed, start as u64);
            let o0 = if start == 0 {
                FMat::identity(n)
            } else {
                rng::random_orthogonal(&mut rng, n)
            };
            let objective = |p: &[f64]| derivs.objective(&frame_from_params(n, &o0, p), norm);
            let mut x0 = vec![0.0; dim];
            if start != 0 {
                for v in x0.iter_mut() {
                    *v = 0.5 * rng::gaussian(&mut rng);
                }
            }
            let nm = NelderMead {
                max_iterations: opts.iterations,
                ftol: 1e-10,
                initial_step: 0.5,
            };
            let res = nm.minimize(objective, &x0);
            let t = frame_from_params(n, &o0, &res.x);
            (res.value, t)
        })
        .collect();

    let best = results
        .iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| {
            a.0.partial_cmp(&b.0)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(ia.cmp(ib))
        })
        .map(|(_, r)| r)
        .expect("at least one start");

    let (positivity, witness) = positivity_criterion(phi, Some(q), x, params, opts)?;

    Ok(DensityReport {
        schema_version: crate::SCHEMA_VERSION.to_string(),
        seed: opts.seed,
        point: x.to_vec(),
        q,
        upper: best.0,
        certificate_t: best.1.rows(),
        positivity,
        hull_witness: witness,
        starts: opts.starts,
        iterations_per_start: opts.iterations,
        o_samples: opts.o_samples,
    })
}

/// Lower-triangular determinantal bound: for `Φ = det(A_1 - A_2)` on
/// n'×n' matrices and lower-triangular `T` acting on the entries,
/// `max_{|α|=n'} |(T*∂)^α_1 Φ(A,A)|` dominates `|det T|^{1/n'}`. Returns the
/// pair `(max_derivative, |det T|^{1/n'})`.
pub fn triangular_determinantal_bound(nprime: usize, t: &FMat) -> Result<(f64, f64)> {
    if nprime > 3 {
        return Err(Error::Validation("symbolic cost caps nprime at 3".into()));
    }
    let n = nprime * nprime;
    if t.n != n || t.m != n {
        return Err(Error::DimensionMismatch(format!("T must be {n}x{n}")));
    }
    for i in 0..n {
        for j in i + 1..n {
            if t.get(i, j) != 0.0 {
                return Err(Error::Validation("T must be lower triangular".into()));
            }
        }
    }
    let det = t.det().abs();
    if det == 0.0 {
        return Err(Error::SingularMatrix);
    }
    let phi = crate::gallery::phi_determinantal(nprime)?;
    let x = vec![Rat::zero(); n];
    let form = LeadingForm::at_point(&phi, nprime as u32, &x, &[])?;
    let derivs = DirectionalDerivatives::new(&form);
    // derivatives on the first argument only: tuples with α_2 = 0
    let vals = derivs.values(t);
    let mut max = 0.0f64;
    for (tuple, v) in derivs.tuples().iter().zip(&vals) {
        if tuple[1].iter().any(|&e| e > 0) {
            continue;
        }
        max = max.max(v[0].abs());
    }
    Ok((max, det.powf(1.0 / nprime as f64)))
}

/// One coordinate frame for the multisystem variant: vector fields
/// `Y_j = Σ_l W[l][j](x) ∂_l` with polynomial coefficients. The fields must
/// commute and be independent near the evaluation point, as the frames of a
/// polynomial coordinate change with polynomial inverse Jacobian are.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoordFrame {
    pub name: String,
    /// `coeffs[l][j]` is the coefficient of `∂_l` in `Y_j`, over n variables.
    pub coeffs: Vec<Vec<Polynomial>>,
}

impl CoordFrame {
    /// The standard coordinate frame on ℝⁿ.
    pub fn standard(n: usize) -> CoordFrame {
        let coeffs = (0..n)
            .map(|l| {
                (0..n)
                    .map(|j| {
                        if l == j {
                            Polynomial::one(n)
                        } else {
                            Polynomial::zero(n)
                        }
                    })
                    .collect()
            })
            .collect();
        CoordFrame {
            name: "standard".into(),
            coeffs,
        }
    }

    /// Frame matrix evaluated at a point.
    fn at(&self, x: &[f64]) -> Result<FMat> {
        let n = self.coeffs.len();
        let mut m = FMat::zeros(n, n);
        for l in 0..n {
            for j in 0..n {
                m.set(l, j, self.coeffs[l][j].eval_f64(x)?);
            }
        }
        Ok(m)
    }
}

/// Restricted multisystem density: maximum over ordered multiindex tuples of
/// length at most `cap_n` per argument, with derivatives taken in frames
/// drawn from the supplied finite family (the standard frame is always
/// included), minimized over the SL parametrization of `T` and over all
/// `cap_n`-tuples of family frames. An upper bound for the unrestricted
/// infimum over all multisystems.
pub fn multisystem_density(
    phi: &PhiSpec,
    s: f64,
    cap_n: usize,
    coord_family: &[CoordFrame],
    x: &[f64],
    opts: &DensityOpts,
) -> Result<f64> {
    phi.validate()?;
    if phi.params != 0 {
        return Err(Error::Validation(
            "freeze parameters before evaluating the multisystem density".into(),
        ));
    }
    if s <= 0.0 {
        return Err(Error::Validation("s must be positive".into()));
    }
    let n = phi.n;
    let k = phi.k;
    let mut family: Vec<CoordFrame> = vec![CoordFrame::standard(n)];
    family.extend(coord_family.iter().cloned());
    for frame in &family {
        let m = frame.at(x)?;
        if m.inverse().is_none() {
            return Err(Error::SingularMatrix);
        }
    }

    // all cap_n-tuples (with repetition) of family indices
    let mut frame_tuples: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..cap_n {
        let mut next = Vec::new();
        for t in &frame_tuples {
            for i in 0..family.len() {
                let mut nt = t.clone();
                nt.push(i);
                next.push(nt);
            }
        }
        frame_tuples = next;
    }

    let body: Vec<FPoly> = phi
        .body
        .components()
        .iter()
        .map(FPoly::from_exact)
        .collect();
    let full_point: Vec<f64> = (0..k).flat_map(|_| x.iter().copied()).collect();
    let dim = param_dim(n);

    let mut best = f64::INFINITY;
    for frame_tuple in &frame_tuples {
        let frames: Vec<&CoordFrame> = frame_tuple.iter().map(|&i| &family[i]).collect();
        let frame_mats_inv: Vec<FMat> = frames
            .iter()
            .map(|f| f.at(x).unwrap().inverse().expect("checked invertible"))
            .collect();

        let results: Vec<f64> = (0..opts.starts.max(1))
            .into_par_iter()
            .map(|start| {
                let mut rng = rng::shard(opts.seed, 0x9000 + start as u64);
                let o0 = if start == 0 {
                    FMat::identity(n)
                } else {
                    rng::random_orthogonal(&mut rng, n)
                };
                let mut x0 = vec![0.0; dim];
                if start != 0 {
                    for v in x0.iter_mut() {
                        *v = 0.5 * rng::gaussian(&mut rng);
                    }
                }
                let nm = NelderMead {
                    max_iterations: opts.iterations,
                    ftol: 1e-10,
                    initial_step: 0.5,
                };
                nm.minimize(
                    |p| {
                        multisystem_objective(
                            &body,
                            &frames,
                            &frame_mats_inv,
                            &frame_from_params(n, &o0, p),
                            n,
                            k,
                            cap_n,
                            &full_point,
                            s,
                        )
                    },
                    &x0,
                )
                .value
            })
            .collect();
        let tuple_best = results.iter().cloned().fold(f64::INFINITY, f64::min);
        best = best.min(tuple_best);
    }
    Ok(best)
}

/// The restricted multisystem objective at one explicit frame `T`, for a
/// fixed tuple of family frames (one per derivative step). Exposed for
/// diagnostics and cross-checks against the order-q density objective.
pub fn multisystem_objective_at(
    phi: &PhiSpec,
    s: f64,
    cap_n: usize,
    frames: &[&CoordFrame],
    x: &[f64],
    t: &FMat,
) -> Result<f64> {
    if frames.len() != cap_n {
        return Err(Error::DimensionMismatch(format!(
            "need one frame per derivative step: {} frames for cap {}",
            frames.len(),
            cap_n
        )));
    }
    let n = phi.n;
    let k = phi.k;
    let frame_mats_inv: Vec<FMat> = frames
        .iter()
        .map(|f| f.at(x)?.inverse().ok_or(Error::SingularMatrix))
        .collect::<Result<Vec<_>>>()?;
    let body: Vec<FPoly> = phi
        .body
        .components()
        .iter()
        .map(FPoly::from_exact)
        .collect();
    let full_point: Vec<f64> = (0..k).flat_map(|_| x.iter().copied()).collect();
    Ok(multisystem_objective(
        &body,
        frames,
        &frame_mats_inv,
        t,
        n,
        k,
        cap_n,
        &full_point,
        s,
    ))
}

/// Ordered multiindices (sequences over `{0..n-1}`) of length at most `cap`
/// as a prefix tree: entry `(parent_index, step, direction)`, with the empty
/// sequence at index 0.
fn ordered_multiindex_tree(n: usize, cap: usize) -> Vec<Option<(usize, usize, usize)>> {
    let mut tree: Vec<Option<(usize, usize, usize)>> = vec![None];
    let mut frontier = vec![0usize];
    for step in 0..cap {
        let mut next = Vec::new();
        for &parent in &frontier {
            for dir in 0..n {
                tree.push(Some((parent, step, dir)));
                next.push(tree.len() - 1);
            }
        }
        frontier = next;
    }
    tree
}

#[allow(clippy::too_many_arguments)]
fn multisystem_objective(
    body: &[FPoly],
    frames: &[&CoordFrame],
    frame_mats_inv: &[FMat],
    t: &FMat,
    n: usize,
    k: usize,
    cap_n: usize,
    full_point: &[f64],
    s: f64,
) -> f64 {
    let det = t.det().abs();
    if det == 0.0 {
        return f64::INFINITY;
    }
    let nv = n * k;
    // Z^{(i)}_l: the frame-i field combination matching direction (T e_l) at
    // the base point; constant combination weights, variable coefficients.
    let mut step_fields: Vec<Vec<Vec<FPoly>>> = Vec::with_capacity(frames.len());
    for (i, frame) in frames.iter().enumerate() {
        let mut per_dir = Vec::with_capacity(n);
        for l in 0..n {
            let d_l: Vec<f64> = (0..n).map(|row| t.get(row, l)).collect();
            let c = frame_mats_inv[i].matvec(&d_l);
            let coeffs: Vec<FPoly> = (0..n)
                .map(|m| {
                    let mut acc = FPoly::zero(n);
                    for (j, cj) in c.iter().enumerate() {
                        if *cj != 0.0 {
                            acc = acc.add(&FPoly::from_exact(&frame.coeffs[m][j]).scale(*cj));
                        }
                    }
                    acc
                })
                .collect();
            per_dir.push(coeffs);
        }
        step_fields.push(per_dir);
    }

    // lift a block-level coefficient polynomial into the full variable set
    let lift = |p: &FPoly, block: usize| -> FPoly {
        let mut out = FPoly::zero(nv);
        for (mono, c) in &p.terms {
            let mut exps = vec![0u32; nv];
            exps[block * n..block * n + n].copy_from_slice(mono);
            out.add_term(exps, *c);
        }
        out
    };

    // apply the step-indexed field Z^{(step)}_dir within one block
    let apply = |poly: &FPoly, step: usize, dir: usize, block: usize| -> FPoly {
        let mut out = FPoly::zero(nv);
        for m in 0..n {
            let coeff = &step_fields[step][dir][m];
            if coeff.is_zero() {
                continue;
            }
            let d = poly.partial(block * n + m);
            if d.is_zero() {
                continue;
            }
            out = out.add(&lift(coeff, block).mul(&d));
        }
        out
    };

    let tree = ordered_multiindex_tree(n, cap_n);
    let mut max_val = 0.0f64;
    for comp in body {
        // operators on distinct blocks commute, so nest block applications;
        // prefix sharing over the sequence tree, and each block's variables
        // are fixed at the base point as soon as its derivatives are done
        let mut current: Vec<FPoly> = vec![comp.clone()];
        for block in 0..k {
            let mut next = Vec::with_capacity(current.len() * tree.len());
            for poly in &current {
                let mut results: Vec<FPoly> = Vec::with_capacity(tree.len());
                results.push(poly.clone());
                for node in tree.iter().skip(1) {
                    let (parent, step, dir) = node.expect("non-root node");
                    results.push(apply(&results[parent], step, dir, block));
                }
                let vals = &full_point[block * n..block * n + n];
                for r in results {
                    next.push(r.eval_vars(block * n..block * n + n, vals));
                }
            }
            current = next;
        }
        for g in &current {
            let v = g.eval(full_point).abs();
            if v > 0.0 {
                max_val = max_val.max(v.powf(1.0 / s));
            }
        }
    }
    max_val / det
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery;
    use crate::poly::{rat_int, PolyVector};

    fn phi_diff_1d() -> PhiSpec {
        let body = PolyVector::new(vec![&Polynomial::var(2, 0) - &Polynomial::var(2, 1)]).unwrap();
        PhiSpec::new(1, 2, 1, 0, body).unwrap()
    }

    fn quick_opts(seed: u64) -> DensityOpts {
        DensityOpts {
            seed,
            starts: 8,
            iterations: 200,
            o_samples: 40,
            ..Default::default()
        }
    }

    #[test]
    fn difference_map_density_is_one() {
        // F(T) = |T|/|T| = 1 for every T
        let phi = phi_diff_1d();
        let report = density_infimum(&phi, Some(1), &[0.0], &[], &quick_opts(5)).unwrap();
        assert!(
            (report.upper - 1.0).abs() < 1e-9,
            "upper = {}",
            report.upper
        );
        assert_eq!(report.positivity, Positivity::Positive);
    }

    #[test]
    fn determinantal_density_bounded_below() {
        let phi = gallery::phi_determinantal(2).unwrap();
        let mut rng = crate::poly::testutil::rng(3);
        for trial in 0..2 {
            let x: Vec<f64> = (0..4)
                .map(|_| rand::Rng::gen_range(&mut rng, -1.0..1.0))
                .collect();
            let report = density_infimum(&phi, Some(2), &x, &[], &quick_opts(trial)).unwrap();
            assert!(
                report.upper >= 0.01,
                "determinantal upper sank to {}",
                report.upper
            );
            assert_eq!(report.positivity, Positivity::Positive);
        }
    }

    #[test]
    fn square_difference_density_degenerates() {
        let phi = gallery::phi_square_difference().unwrap();
        let opts = DensityOpts {
            seed: 7,
            starts: 16,
            iterations: 400,
            o_samples: 40,
            ..Default::default()
        };
        let report = density_infimum(&phi, Some(2), &[0.0, 0.0], &[], &opts).unwrap();
        assert!(
            report.upper < 1e-3,
            "optimizer failed to drive F below 1e-3: {}",
            report.upper
        );
        assert_eq!(report.positivity, Positivity::Zero);
        match report.hull_witness {
            Some(HullWitness::Separator {
                ref cloud, ref ell, ..
            }) => {
                // checkable certificate: ell · a > (q/n)·(ell · 1) for all a
                assert!(!cloud.is_empty());
                let qn = 2.0 / 2.0;
                let ell_dot_one: f64 = ell.iter().sum();
                for a in cloud {
                    let dot: f64 = ell.iter().zip(a).map(|(l, &e)| l * e as f64).sum();
                    assert!(dot > qn * ell_dot_one - 1e-12);
                }
            }
            ref w => panic!("expected separator witness, got {w:?}"),
        }
    }

    #[test]
    fn q_mismatch_is_a_hard_error() {
        let phi = gallery::phi_determinantal(2).unwrap();
        // claiming q = 3 when the true order is 2 must fail
        let err = density_infimum(&phi, Some(3), &[0.0; 4], &[], &quick_opts(1));
        assert!(matches!(err, Err(Error::OrderMismatch(_))));
    }

    #[test]
    fn scale_invariance_of_objective() {
        let phi = gallery::phi_determinantal(2).unwrap();
        let x: Vec<Rat> = (0..4).map(|_| Rat::zero()).collect();
        let form = LeadingForm::at_point(&phi, 2, &x, &[]).unwrap();
        let derivs = DirectionalDerivatives::new(&form);
        let mut rng = crate::poly::testutil::rng(13);
        for _ in 0..10 {
            let rows: Vec<Vec<f64>> = (0..4)
                .map(|_| {
                    (0..4)
                        .map(|_| rand::Rng::gen_range(&mut rng, -2.0..2.0))
                        .collect()
                })
                .collect();
            let t = FMat::from_rows(&rows);
            if t.det().abs() < 1e-3 {
                continue;
            }
            let lambda: f64 = rand::Rng::gen_range(&mut rng, 0.2..3.0);
            let f1 = derivs.objective(&t, VectorNorm::Max);
            let f2 = derivs.objective(&t.scale(lambda), VectorNorm::Max);
            assert!(
                (f1 - f2).abs() <= 1e-9 * f1.max(1.0),
                "scale invariance violated: {f1} vs {f2}"
            );
        }
    }

    #[test]
    fn right_orthogonal_factor_quasi_invariance() {
        // F(T·O2) <= n^{qk}·F(T)
        let phi = gallery::phi_determinantal(2).unwrap();
        let x: Vec<Rat> = (0..4).map(|_| Rat::zero()).collect();
        let form = LeadingForm::at_point(&phi, 2, &x, &[]).unwrap();
        let derivs = DirectionalDerivatives::new(&form);
        let mut rng = crate::poly::testutil::rng(17);
        let bound = 4.0f64.powi(2 * 2); // n^{qk}
        for _ in 0..10 {
            let rows: Vec<Vec<f64>> = (0..4)
                .map(|_| {
                    (0..4)
                        .map(|_| rand::Rng::gen_range(&mut rng, -2.0..2.0))
                        .collect()
                })
                .collect();
            let t = FMat::from_rows(&rows);
            if t.det().abs() < 1e-3 {
                continue;
            }
            let o2 = rng::random_orthogonal(&mut rng, 4);
            let f1 = derivs.objective(&t, VectorNorm::Max);
            let f2 = derivs.objective(&t.matmul(&o2), VectorNorm::Max);
            assert!(
                f2 <= bound * f1 * (1.0 + 1e-9),
                "f2 = {f2}, bound = {}",
                bound * f1
            );
        }
    }

    #[test]
    fn report_is_deterministic_under_seed() {
        let phi = gallery::phi_square_difference().unwrap();
        let opts = quick_opts(99);
        let a = density_infimum(&phi, Some(2), &[0.1, -0.2], &[], &opts).unwrap();
        let b = density_infimum(&phi, Some(2), &[0.1, -0.2], &[], &opts).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn positivity_identity_frame_catches_axis_cloud() {
        let phi = gallery::phi_square_difference().unwrap();
        let (verdict, witness) =
            positivity_criterion(&phi, Some(2), &[0.0, 0.0], &[], &quick_opts(2)).unwrap();
        assert_eq!(verdict, Positivity::Zero);
        match witness {
            Some(HullWitness::Separator { cloud, .. }) => {
                assert_eq!(cloud, vec![vec![2, 0]]);
            }
            w => panic!("expected separator, got {w:?}"),
        }
    }

    #[test]
    fn positivity_difference_map() {
        let phi = phi_diff_1d();
        let (verdict, _) =
            positivity_criterion(&phi, Some(1), &[0.0], &[], &quick_opts(3)).unwrap();
        assert_eq!(verdict, Positivity::Positive);
    }

    #[test]
    fn triangular_bound_identity() {
        let t = FMat::identity(4);
        let (max, rhs) = triangular_determinantal_bound(2, &t).unwrap();
        assert!(max >= 1.0 - 1e-12);
        assert!((rhs - 1.0).abs() < 1e-12);
    }

    #[test]
    fn triangular_bound_randomized() {
        let mut rng = crate::poly::testutil::rng(23);
        for _ in 0..50 {
            let mut t = FMat::zeros(4, 4);
            for i in 0..4 {
                for j in 0..=i {
                    let v = if i == j {
                        let raw: f64 = rand::Rng::gen_range(&mut rng, 0.2..2.0);
                        if rand::Rng::gen_bool(&mut rng, 0.5) {
                            raw
                        } else {
                            -raw
                        }
                    } else {
                        rand::Rng::gen_range(&mut rng, -2.0..2.0)
                    };
                    t.set(i, j, v);
                }
            }
            let (max, rhs) = triangular_determinantal_bound(2, &t).unwrap();
            assert!(
                max >= rhs - 1e-9,
                "triangular bound violated: max {max} < rhs {rhs}"
            );
        }
    }

    #[test]
    fn c_product_formula_for_diagonal_t() {
        let entries = [4.0, 0.5, 0.5, 0.25f64];
        let t = FMat::diag(&entries);
        let (max, rhs) = triangular_determinantal_bound(2, &t).unwrap();
        // |det| = 4·0.5·0.5·0.25 = 0.25, rhs = 0.25^{1/2} = 0.5
        assert!((rhs - 0.5).abs() < 1e-12);
        // derivative for the identity permutation: c_11·c_22 = 4·0.25 = 1;
        // for the swap: c_12·c_21 = 0.25; max = 1 dominates the geometric
        // mean Π|c_ij|^{1/2} = (0.25)^{1/2}
        assert!((max - 1.0).abs() < 1e-9);
        let geo: f64 = entries.iter().map(|v| v.abs()).product::<f64>();
        assert!(max >= geo.powf(0.5) - 1e-12);
    }

    #[test]
    fn multisystem_reduces_to_density_for_standard_frame() {
        // with the standard frame, cap N = q, and s = q/n, the multisystem
        // objective agrees pointwise with the order-q density objective:
        // derivatives of total order < q vanish on Δ and deg Φ = q kills the
        // higher ones
        let phi = gallery::phi_determinantal(2).unwrap();
        let x = [0.0; 4];
        let x_rat: Vec<Rat> = (0..4).map(|_| Rat::zero()).collect();
        let form = LeadingForm::at_point(&phi, 2, &x_rat, &[]).unwrap();
        let derivs = DirectionalDerivatives::new(&form);
        let std_frame = CoordFrame::standard(4);
        let frames = vec![&std_frame, &std_frame];
        let mut rng = crate::poly::testutil::rng(31);
        for _ in 0..10 {
            let o = rng::random_orthogonal(&mut rng, 4);
            let u: Vec<f64> = (0..3)
                .map(|_| rand::Rng::gen_range(&mut rng, -0.8..0.8))
                .collect();
            let mut diag: Vec<f64> = u.iter().map(|v| v.exp()).collect();
            diag.push((-u.iter().sum::<f64>()).exp());
            let t = o.matmul(&FMat::diag(&diag));
            let a = derivs.objective(&t, VectorNorm::Max);
            let b = multisystem_objective_at(&phi, 0.5, 2, &frames, &x, &t).unwrap();
            assert!(
                (a - b).abs() <= 1e-9 * a.max(1.0),
                "objectives differ at a frame: density {a} vs multisystem {b}"
            );
        }
        // and the optimized values agree up to search noise
        let opts = DensityOpts {
            seed: 31,
            starts: 8,
            iterations: 250,
            o_samples: 10,
            ..Default::default()
        };
        let report = density_infimum(&phi, Some(2), &x, &[], &opts).unwrap();
        let ms = multisystem_density(&phi, 2.0 / 4.0, 2, &[], &x, &opts).unwrap();
        let rel = (report.upper - ms).abs() / report.upper.max(1e-12);
        assert!(
            rel < 0.2,
            "multisystem {} vs density {} (rel {rel})",
            ms,
            report.upper
        );
    }

    #[test]
    fn multisystem_below_q_vanishes() {
        // per-argument caps N with k·N < q: every reachable derivative has
        // total order below the order of vanishing, so the maximum is zero.
        // Φ = det(A1−A2) on 3x3 matrices has q = 3 and k·N = 2 for N = 1.
        let phi = gallery::phi_determinantal(3).unwrap();
        let x = [0.0; 9];
        let std_frame = CoordFrame::standard(9);
        let t = FMat::identity(9);
        let v = multisystem_objective_at(&phi, 0.5, 1, &[&std_frame], &x, &t).unwrap();
        assert_eq!(v, 0.0, "all derivatives of order <= k·N < q vanish on Δ");
        // cap 0 leaves only the empty derivative, i.e. Φ on the diagonal
        let phi2 = gallery::phi_mixed_degenerate().unwrap();
        let opts = DensityOpts {
            seed: 37,
            starts: 2,
            iterations: 40,
            o_samples: 4,
            ..Default::default()
        };
        let v2 = multisystem_density(&phi2, 1.0, 0, &[], &[0.3, -0.1], &opts).unwrap();
        assert_eq!(v2, 0.0);
    }

    #[test]
    fn mixed_degenerate_multisystem_stays_positive() {
        // Φ = (x1−x2)² + (y1−y2)³ with s = 6/5 and a shear frame aligned
        // with the y-axis: the restricted value stays away from zero
        let phi = gallery::phi_mixed_degenerate().unwrap();
        let shear = {
            // coordinates (x, y + x²): fields ∂_x − 2x·∂_y and ∂_y
            let x = Polynomial::var(2, 0);
            let coeffs = vec![
                vec![Polynomial::one(2), Polynomial::zero(2)],
                vec![x.scale(&rat_int(-2)), Polynomial::one(2)],
            ];
            CoordFrame {
                name: "shear-y".into(),
                coeffs,
            }
        };
        let opts = DensityOpts {
            seed: 41,
            starts: 6,
            iterations: 200,
            o_samples: 4,
            ..Default::default()
        };
        let v = multisystem_density(&phi, 6.0 / 5.0, 3, &[shear], &[0.0, 0.0], &opts).unwrap();
        assert!(v > 0.05, "restricted multisystem density collapsed: {v}");
    }
}
