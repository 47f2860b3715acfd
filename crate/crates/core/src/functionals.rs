//! The nonconcentration functionals: the supremum functional over product
//! sets (reported as a certified lower bound), the integral functional with
//! Monte Carlo error bars, constant sweeps over set families, and the
//! constructive Chebyshev set for finite-dimensional function spaces on
//! discrete measures.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::VectorNorm;
use crate::diagonal::multiindices;
use crate::error::{Error, Result};
use crate::geometry::PhiSpec;
use crate::optim::NelderMead;
use crate::poly::{Polynomial, Rat};
use crate::rng;
use crate::sets::{MeasureSpec, SetSpec};

/// Options shared by the estimators.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FunctionalOpts {
    pub seed: u64,
    /// Sampled k-tuples for the supremum estimate.
    pub sup_budget: usize,
    /// Sampled k-tuples for the integral estimate.
    pub int_budget: usize,
    pub norm: VectorNorm,
    /// Monte Carlo shards run in parallel; results reduce deterministically.
    pub shards: usize,
    /// Stratify the first coordinate of integral estimates over a dyadic
    /// grid when the set is a box.
    pub stratified: bool,
}

impl Default for FunctionalOpts {
    fn default() -> Self {
        FunctionalOpts {
            seed: 0,
            sup_budget: 200_000,
            int_budget: 1_000_000,
            norm: VectorNorm::Max,
            shards: 16,
            stratified: false,
        }
    }
}

/// Per-set functional estimates and implied nonconcentration constants.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FunctionalReport {
    pub schema_version: String,
    pub seed: u64,
    /// Certified lower bound on S(E) (max over evaluated tuples, polished).
    pub s_estimate: f64,
    pub a_estimate: f64,
    pub a_stderr: f64,
    pub mu_e: f64,
    /// `c' = S / mu(E)^s`.
    pub c_prime: f64,
    /// `c = A / mu(E)^{k+s}`.
    pub c: f64,
    pub sup_samples: usize,
    pub int_samples: usize,
}

/// `|Φ|` at a flattened k-tuple.
fn phi_abs(phi: &PhiSpec, tuple: &[f64], norm: VectorNorm) -> f64 {
    match phi.eval_f64(tuple) {
        Ok(v) => norm.apply(&v),
        Err(_) => f64::NEG_INFINITY,
    }
}

/// Lower bound for `sup_{E^k} |Φ|`: Monte Carlo over sampled k-tuples,
/// corner tuples for box-like sets, then Nelder-Mead polish projected into
/// the set. Never exceeds the true supremum.
pub fn sup_functional(phi: &PhiSpec, e: &SetSpec, opts: &FunctionalOpts) -> Result<f64> {
    phi.validate()?;
    e.validate()?;
    if phi.params != 0 {
        return Err(Error::Validation("freeze Φ parameters first".into()));
    }
    if e.dim() != phi.n {
        return Err(Error::DimensionMismatch(format!(
            "set dimension {} vs point dimension {}",
            e.dim(),
            phi.n
        )));
    }
    let k = phi.k;
    let n = phi.n;
    let norm = opts.norm;

    // degenerate sets still admit sampling when they carry a point mass
    let mut probe_rng = rng::shard(opts.seed, 0xFACE);
    e.sample(&mut probe_rng)?;

    let shard_budget = opts.sup_budget.div_ceil(opts.shards.max(1));
    let shard_results: Vec<(f64, Vec<f64>)> = (0..opts.shards.max(1))
        .into_par_iter()
        .map(|shard_idx| {
            let mut rng = rng::shard(opts.seed, 0x100 + shard_idx as u64);
            let mut best = f64::NEG_INFINITY;
            let mut best_tuple = vec![0.0; n * k];
            for _ in 0..shard_budget {
                let mut tuple = Vec::with_capacity(n * k);
                let mut ok = true;
                for _ in 0..k {
                    match e.sample(&mut rng) {
                        Ok(x) => tuple.extend(x),
                        Err(_) => {
                            ok = false;
                            break;
                        }
                    }
                }
                if !ok {
                    continue;
                }
                let v = phi_abs(phi, &tuple, norm);
                if v > best {
                    best = v;
                    best_tuple = tuple;
                }
            }
            (best, best_tuple)
        })
        .collect();
    let (mut best, mut best_tuple) = shard_results
        .into_iter()
        .max_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
        .unwrap();

    // corner enumeration: for boxes the sup of a polynomial is often attained
    // at corner tuples, which makes diameter-type suprema exact
    if let SetSpec::Box { lo, hi } = e {
        let bx = crate::sets::Box {
            lo: lo.clone(),
            hi: hi.clone(),
        };
        let corners = bx.corners();
        if corners.len().pow(k as u32) <= 4096 {
            let mut idx = vec![0usize; k];
            loop {
                let mut tuple = Vec::with_capacity(n * k);
                for &i in &idx {
                    tuple.extend(corners[i].iter().copied());
                }
                let v = phi_abs(phi, &tuple, norm);
                if v > best {
                    best = v;
                    best_tuple = tuple;
                }
                // odometer
                let mut pos = 0;
                loop {
                    if pos == k {
                        break;
                    }
                    idx[pos] += 1;
                    if idx[pos] < corners.len() {
                        break;
                    }
                    idx[pos] = 0;
                    pos += 1;
                }
                if pos == k {
                    break;
                }
            }
        }
    }

    // polish, projecting each block back into the set
    let objective = |x: &[f64]| -> f64 {
        let mut tuple = Vec::with_capacity(n * k);
        for j in 0..k {
            match e.project(&x[j * n..(j + 1) * n]) {
                Some(p) => tuple.extend(p),
                None => return f64::INFINITY,
            }
        }
        -phi_abs(phi, &tuple, norm)
    };
    let nm = NelderMead {
        max_iterations: 400,
        ftol: 1e-12,
        initial_step: 0.1 * (1.0 + best_tuple.iter().map(|v| v.abs()).fold(0.0, f64::max)),
    };
    let res = nm.minimize(objective, &best_tuple);
    let polished: Vec<f64> = (0..k)
        .flat_map(|j| {
            e.project(&res.x[j * n..(j + 1) * n])
                .unwrap_or_else(|| res.x[j * n..(j + 1) * n].to_vec())
        })
        .collect();
    let polished_val = phi_abs(phi, &polished, norm);
    Ok(best.max(polished_val))
}

/// Monte Carlo estimate of `∫_{E^k} |Φ| dμ^k` with its standard error.
/// With `stratified` set and a Lebesgue measure on a box, the first point
/// coordinate runs over a dyadic cell grid with equal allocation.
pub fn int_functional(
    phi: &PhiSpec,
    mu: &MeasureSpec,
    e: &SetSpec,
    opts: &FunctionalOpts,
) -> Result<(f64, f64)> {
    phi.validate()?;
    e.validate()?;
    mu.validate()?;
    if phi.params != 0 {
        return Err(Error::Validation("freeze Φ parameters first".into()));
    }
    if opts.stratified {
        if let (MeasureSpec::Lebesgue { .. }, SetSpec::Box { lo, hi }) = (mu, e) {
            return int_functional_stratified(phi, mu, lo, hi, opts);
        }
    }
    let k = phi.k;
    let norm = opts.norm;
    let mu_e = mu.measure(e, opts.seed);
    if mu_e <= 0.0 {
        return Ok((0.0, 0.0));
    }

    let shards = opts.shards.max(1);
    let shard_budget = opts.int_budget.div_ceil(shards);
    // E[|Φ| Πw] under the normalized uniform/atomic proposal, times mu(E)^k
    // after weight normalization
    let shard_stats: Vec<(f64, f64, usize, f64)> = (0..shards)
        .into_par_iter()
        .map(|shard_idx| {
            let mut rng = rng::shard(opts.seed, 0x200 + shard_idx as u64);
            let mut sum = 0.0;
            let mut sumsq = 0.0;
            let mut count = 0usize;
            let mut weight_sum = 0.0;
            for _ in 0..shard_budget {
                let mut tuple = Vec::with_capacity(phi.n * k);
                let mut weight = 1.0;
                let mut ok = true;
                for _ in 0..k {
                    match mu.sample_in(e, &mut rng) {
                        Ok((x, w)) => {
                            tuple.extend(x);
                            weight *= w;
                        }
                        Err(_) => {
                            ok = false;
                            break;
                        }
                    }
                }
                if !ok {
                    continue;
                }
                let v = phi_abs(phi, &tuple, norm).max(0.0) * weight;
                sum += v;
                sumsq += v * v;
                count += 1;
                weight_sum += weight;
            }
            (sum, sumsq, count, weight_sum)
        })
        .collect();
    let total: usize = shard_stats.iter().map(|s| s.2).sum();
    if total == 0 {
        return Err(Error::EmptySet);
    }
    let sum: f64 = shard_stats.iter().map(|s| s.0).sum();
    let sumsq: f64 = shard_stats.iter().map(|s| s.1).sum();
    let weight_sum: f64 = shard_stats.iter().map(|s| s.3).sum();

    // normalization per measure variant
    let scale = match mu {
        MeasureSpec::Lebesgue { .. } => {
            // uniform proposal on E: mean(|Φ|)·mu(E)^k
            mu_e.powi(k as i32) / total as f64
        }
        MeasureSpec::Weighted { .. } => {
            // self-normalized importance estimate: Σ v / Σ w · mu(E)^k needs
            // care for k-fold products; use mean weight normalization
            let mean_w = weight_sum / total as f64;
            if mean_w <= 0.0 {
                return Ok((0.0, 0.0));
            }
            mu_e.powi(k as i32) / (total as f64 * mean_w)
        }
        MeasureSpec::Discrete { .. } => {
            // atoms drawn proportionally to weight: mean(|Φ|)·mu(E)^k
            mu_e.powi(k as i32) / total as f64
        }
    };
    let estimate = sum * scale;
    let mean = sum / total as f64;
    let var = (sumsq / total as f64 - mean * mean).max(0.0);
    let stderr = (var / total as f64).sqrt() * scale * total as f64;
    Ok((estimate, stderr))
}

/// Stratified variant: the first point's box is split into dyadic cells with
/// equal sample allocation; the remaining k−1 points stay uniform on E.
/// Unbiased because the integral decomposes over the first coordinate.
fn int_functional_stratified(
    phi: &PhiSpec,
    mu: &MeasureSpec,
    lo: &[f64],
    hi: &[f64],
    opts: &FunctionalOpts,
) -> Result<(f64, f64)> {
    let e = SetSpec::Box {
        lo: lo.to_vec(),
        hi: hi.to_vec(),
    };
    let d = lo.len();
    let k = phi.k;
    let norm = opts.norm;
    let mu_e = mu.measure(&e, opts.seed);
    if mu_e <= 0.0 {
        return Ok((0.0, 0.0));
    }
    // per-axis splits chosen so the cell count stays near the shard count
    let per_axis = (2usize).max((opts.shards as f64).powf(1.0 / d as f64).round() as usize);
    let cells: usize = per_axis.pow(d as u32);
    let per_cell = (opts.int_budget / cells).max(16);
    let widths: Vec<f64> = lo
        .iter()
        .zip(hi)
        .map(|(a, b)| (b - a) / per_axis as f64)
        .collect();

    let stats: Vec<(f64, f64, usize)> = (0..cells)
        .into_par_iter()
        .map(|cell| {
            let mut rng = rng::shard(opts.seed, 0x250 + cell as u64);
            let mut idx = cell;
            let mut cell_lo = Vec::with_capacity(d);
            let mut cell_hi = Vec::with_capacity(d);
            for i in 0..d {
                let c = idx % per_axis;
                idx /= per_axis;
                cell_lo.push(lo[i] + widths[i] * c as f64);
                cell_hi.push(lo[i] + widths[i] * (c + 1) as f64);
            }
            let cell_box = crate::sets::Box {
                lo: cell_lo,
                hi: cell_hi,
            };
            let mut sum = 0.0;
            let mut sumsq = 0.0;
            let mut count = 0usize;
            for _ in 0..per_cell {
                let mut tuple = cell_box.sample(&mut rng);
                let mut ok = true;
                for _ in 1..k {
                    match e.sample(&mut rng) {
                        Ok(x) => tuple.extend(x),
                        Err(_) => {
                            ok = false;
                            break;
                        }
                    }
                }
                if !ok {
                    continue;
                }
                let v = phi_abs(phi, &tuple, norm).max(0.0);
                sum += v;
                sumsq += v * v;
                count += 1;
            }
            (sum, sumsq, count)
        })
        .collect();
    // Σ_cells vol(cell)·vol(E)^{k−1}·mean_cell, with equal cell volumes
    let cell_scale = mu_e.powi(k as i32) / cells as f64;
    let mut estimate = 0.0;
    let mut variance = 0.0;
    for (sum, sumsq, count) in &stats {
        if *count == 0 {
            continue;
        }
        let mean = sum / *count as f64;
        estimate += cell_scale * mean;
        let var = (sumsq / *count as f64 - mean * mean).max(0.0);
        variance += cell_scale * cell_scale * var / *count as f64;
    }
    Ok((estimate, variance.sqrt()))
}

/// One row of a constant sweep.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepRow {
    pub label: String,
    pub report: FunctionalReport,
}

/// Sweep summary: per-set constants and family minima.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepTable {
    pub schema_version: String,
    pub seed: u64,
    pub s: f64,
    pub k: usize,
    pub rows: Vec<SweepRow>,
    /// Family-restricted empirical `‖S‖` candidate: min of c' over rows.
    pub min_c_prime: f64,
    /// Family-restricted empirical `‖A‖` candidate: min of c over rows.
    pub min_c: f64,
    /// `A(E) <= S(E)·μ(E)^k` within Monte Carlo error, checked rowwise.
    pub chain_holds: bool,
    /// Provenance of the chain comparison (pointwise domination).
    pub chain_provenance: crate::Provenance,
}

/// Per-set constants `c' = S/μ(E)^s` and `c = A/μ(E)^{k+s}` over a family,
/// with the family-restricted empirical norms. Zero-measure members are
/// skipped with a warning row.
pub fn constant_sweep(
    phi: &PhiSpec,
    mu: &MeasureSpec,
    family: &[(String, SetSpec)],
    s: f64,
    opts: &FunctionalOpts,
) -> Result<SweepTable> {
    let k = phi.k;
    let mut rows = Vec::new();
    let mut min_c_prime = f64::INFINITY;
    let mut min_c = f64::INFINITY;
    let mut chain_holds = true;
    for (label, e) in family {
        let mu_e = mu.measure(e, opts.seed);
        if mu_e <= 0.0 {
            eprintln!("warning: skipping zero-measure family member {label}");
            continue;
        }
        let s_est = sup_functional(phi, e, opts)?;
        let (a_est, a_err) = int_functional(phi, mu, e, opts)?;
        let c_prime = s_est / mu_e.powf(s);
        let c = a_est / mu_e.powf(k as f64 + s);
        min_c_prime = min_c_prime.min(c_prime);
        min_c = min_c.min(c);
        // A(E) <= S(E)·mu(E)^k pointwise domination, within MC error
        if a_est > s_est * mu_e.powi(k as i32) + 3.0 * a_err {
            chain_holds = false;
        }
        rows.push(SweepRow {
            label: label.clone(),
            report: FunctionalReport {
                schema_version: crate::SCHEMA_VERSION.to_string(),
                seed: opts.seed,
                s_estimate: s_est,
                a_estimate: a_est,
                a_stderr: a_err,
                mu_e,
                c_prime,
                c,
                sup_samples: opts.sup_budget,
                int_samples: opts.int_budget,
            },
        });
    }
    Ok(SweepTable {
        schema_version: crate::SCHEMA_VERSION.to_string(),
        seed: opts.seed,
        s,
        k,
        rows,
        min_c_prime,
        min_c,
        chain_holds,
        chain_provenance: crate::Provenance::Trivial,
    })
}

/// The extremal basis and thresholded set of the constructive Chebyshev
/// inequality on a discrete measure.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChebyshevSet {
    pub schema_version: String,
    pub seed: u64,
    /// Dimension of the full polynomial space (the `d` of the bound `τ·d`).
    pub space_dim: usize,
    /// Extremal basis functions, each with unit `∫|f|dμ`.
    pub basis: Vec<Polynomial>,
    /// Atom mask: `true` when the atom belongs to `E_τ`.
    pub mask: Vec<bool>,
    pub tau: f64,
    /// μ(X∖E_τ), strictly below 1/τ.
    pub complement_mass: f64,
    /// Verification summary on random test polynomials.
    pub verified: bool,
    pub tested_functions: usize,
}

/// Monomial basis of polynomials of degree <= d over `dim` variables.
pub fn monomial_basis(dim: usize, degree: u32) -> Vec<Polynomial> {
    let mut out = Vec::new();
    for d in 0..=degree {
        for alpha in multiindices(dim, d) {
            out.push(
                Polynomial::from_terms(dim, vec![(alpha, Rat::from_integer(1.into()))]).unwrap(),
            );
        }
    }
    out
}

/// `∫ |f| dμ` for a discrete measure, from basis values on the atoms.
fn l1_norm(weights: &[f64], coeffs: &[f64], basis_vals: &[Vec<f64>]) -> f64 {
    weights
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let v: f64 = coeffs
                .iter()
                .zip(basis_vals)
                .map(|(c, col)| c * col[i])
                .sum();
            w * v.abs()
        })
        .sum()
}

/// Determinant of the coefficient matrix of candidate functions.
fn coeff_det(funcs: &[Vec<f64>]) -> f64 {
    let d = funcs.len();
    let m =
        crate::fmat::FMat::from_rows(&funcs.iter().map(|f| f[..d].to_vec()).collect::<Vec<_>>());
    m.det()
}

/// Constructive Chebyshev set: finds a near-extremal basis `f_1..f_{d1}` of
/// the function space modulo its μ-null subspace by maximizing `|det|` over
/// the unit `∫|f|dμ` ball (multistart + coordinate exchange + polish), forms
/// `E_τ = {x : Σ|f_j(x)| <= τ·d}`, and verifies both the measure bound and
/// the sup bound on random test polynomials. All integrals are finite sums
/// over the atoms.
pub fn chebyshev_set(
    points: &[Vec<f64>],
    weights: &[f64],
    degree: u32,
    tau: f64,
    seed: u64,
) -> Result<ChebyshevSet> {
    if points.is_empty() || points.len() != weights.len() {
        return Err(Error::Validation("bad discrete measure".into()));
    }
    if tau <= 0.0 {
        return Err(Error::Validation("tau must be positive".into()));
    }
    let dim = points[0].len();
    let basis = monomial_basis(dim, degree);
    let space_dim = basis.len();

    // basis values on atoms
    let basis_vals: Vec<Vec<f64>> = basis
        .iter()
        .map(|b| {
            points
                .iter()
                .map(|p| b.eval_f64(p).unwrap_or(f64::NAN))
                .collect()
        })
        .collect();

    // F0 detection: basis combinations vanishing on every positive-weight
    // atom. Work in the quotient by selecting a maximal independent set of
    // atom-evaluation rows via column pivoting on the transposed Vandermonde.
    let support: Vec<usize> = weights
        .iter()
        .enumerate()
        .filter(|(_, w)| **w > 0.0)
        .map(|(i, _)| i)
        .collect();
    if support.is_empty() {
        return Err(Error::Validation("measure has no mass".into()));
    }

    // effective dimension d1 = rank of the evaluation map on the support
    let rank = {
        let mut rows: Vec<Vec<f64>> = basis_vals
            .iter()
            .map(|col| support.iter().map(|&i| col[i]).collect())
            .collect();
        let mut rank = 0usize;
        let ncols = rows[0].len();
        let mut col = 0usize;
        while rank < rows.len() && col < ncols {
            // find pivot row
            let pivot = (rank..rows.len())
                .max_by(|&a, &b| rows[a][col].abs().partial_cmp(&rows[b][col].abs()).unwrap());
            match pivot {
                Some(p) if rows[p][col].abs() > 1e-9 => {
                    rows.swap(rank, p);
                    let pv = rows[rank][col];
                    for r in 0..rows.len() {
                        if r != rank {
                            let f = rows[r][col] / pv;
                            if f != 0.0 {
                                for c in col..ncols {
                                    rows[r][c] -= f * rows[rank][c];
                                }
                            }
                        }
                    }
                    rank += 1;
                    col += 1;
                }
                _ => col += 1,
            }
        }
        rank
    };
    let d1 = rank;
    if d1 == 0 {
        return Err(Error::Validation(
            "every function vanishes on the support".into(),
        ));
    }

    // search for the extremal basis: coefficient vectors in the full space,
    // normalized to unit discrete L1 norm
    let normalize = |c: &[f64]| -> Option<Vec<f64>> {
        let norm = l1_norm(weights, c, &basis_vals);
        if norm <= 1e-300 {
            return None;
        }
        Some(c.iter().map(|v| v / norm).collect())
    };

    let restarts = 200;
    let candidates: Vec<Vec<Vec<f64>>> = (0..restarts)
        .into_par_iter()
        .filter_map(|r| {
            let mut rng = rng::shard(seed, 0x300 + r as u64);
            let mut funcs: Vec<Vec<f64>> = Vec::with_capacity(d1);
            for _ in 0..d1 {
                let raw: Vec<f64> = (0..space_dim).map(|_| rng::gaussian(&mut rng)).collect();
                funcs.push(normalize(&raw)?);
            }
            // coordinate exchange: several passes of single-function
            // resampling, keeping improvements
            let mut best_det = coeff_det(&funcs).abs();
            for _ in 0..40 {
                let j = rng.gen_range(0..d1);
                let raw: Vec<f64> = (0..space_dim).map(|_| rng::gaussian(&mut rng)).collect();
                if let Some(candidate) = normalize(&raw) {
                    let old = std::mem::replace(&mut funcs[j], candidate);
                    let det = coeff_det(&funcs).abs();
                    if det > best_det {
                        best_det = det;
                    } else {
                        funcs[j] = old;
                    }
                }
            }
            Some(funcs)
        })
        .collect();
    let mut best_funcs = candidates
        .into_iter()
        .max_by(|a, b| coeff_det(a).abs().partial_cmp(&coeff_det(b).abs()).unwrap())
        .ok_or_else(|| Error::Validation("basis search failed".into()))?;

    // joint Nelder-Mead polish over all coefficients
    let flat: Vec<f64> = best_funcs.iter().flatten().copied().collect();
    let objective = |x: &[f64]| -> f64 {
        let mut funcs = Vec::with_capacity(d1);
        for j in 0..d1 {
            match normalize(&x[j * space_dim..(j + 1) * space_dim]) {
                Some(f) => funcs.push(f),
                None => return f64::INFINITY,
            }
        }
        -coeff_det(&funcs).abs()
    };
    let nm = NelderMead {
        max_iterations: 800,
        ftol: 1e-12,
        initial_step: 0.2,
    };
    let res = nm.minimize(objective, &flat);
    if -res.value > coeff_det(&best_funcs).abs() {
        let mut polished = Vec::with_capacity(d1);
        let mut ok = true;
        for j in 0..d1 {
            match normalize(&res.x[j * space_dim..(j + 1) * space_dim]) {
                Some(f) => polished.push(f),
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            best_funcs = polished;
        }
    }

    // E_tau over atoms; the threshold uses the FULL space dimension
    let threshold = tau * space_dim as f64;
    let sum_abs: Vec<f64> = (0..points.len())
        .map(|i| {
            best_funcs
                .iter()
                .map(|c| {
                    let v: f64 = c.iter().zip(&basis_vals).map(|(cj, col)| cj * col[i]).sum();
                    v.abs()
                })
                .sum()
        })
        .collect();
    let mask: Vec<bool> = sum_abs.iter().map(|&v| v <= threshold).collect();
    let complement_mass: f64 = weights
        .iter()
        .zip(&mask)
        .filter(|(_, inside)| !**inside)
        .map(|(w, _)| *w)
        .sum();

    // verification on random test polynomials
    let mut verify_rng = rng::shard(seed, 0x400);
    let tested = 100;
    let mut verified = complement_mass < 1.0 / tau;
    for _ in 0..tested {
        let raw: Vec<f64> = (0..space_dim)
            .map(|_| rng::gaussian(&mut verify_rng))
            .collect();
        let integral = l1_norm(weights, &raw, &basis_vals);
        let sup_on_e: f64 = (0..points.len())
            .filter(|&i| mask[i])
            .map(|i| {
                raw.iter()
                    .zip(&basis_vals)
                    .map(|(c, col)| c * col[i])
                    .sum::<f64>()
                    .abs()
            })
            .fold(0.0, f64::max);
        if sup_on_e > threshold * integral * (1.0 + 1e-9) {
            verified = false;
        }
    }

    // exact-rational basis polynomials from the float coefficients
    let basis_polys: Vec<Polynomial> = best_funcs
        .iter()
        .map(|coeffs| {
            let mut acc = Polynomial::zero(dim);
            for (c, b) in coeffs.iter().zip(&basis) {
                if let Some(r) = Rat::from_float(*c) {
                    acc = acc.checked_add(&b.scale(&r)).unwrap();
                }
            }
            acc
        })
        .collect();

    Ok(ChebyshevSet {
        schema_version: crate::SCHEMA_VERSION.to_string(),
        seed,
        space_dim,
        basis: basis_polys,
        mask,
        tau,
        complement_mass,
        verified,
        tested_functions: tested,
    })
}
