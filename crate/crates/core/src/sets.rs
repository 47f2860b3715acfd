//! Finitely described Borel sets and measures: boxes, affine images, finite
//! unions, polynomial-sublevel predicates; Lebesgue, density-weighted, and
//! discrete measures. Every set variant supplies a volume routine (exact
//! where possible, Monte Carlo otherwise), a membership test, and a uniform
//! sampler.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmat::FMat;
use crate::poly::Polynomial;

/// Axis-parallel box `[lo_1, hi_1] × .. × [lo_d, hi_d]`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Box {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Box {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Box> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch(format!(
                "box corners of lengths {} and {}",
                lo.len(),
                hi.len()
            )));
        }
        if lo.iter().zip(&hi).any(|(a, b)| a > b) {
            return Err(Error::Validation("box needs lo <= hi".into()));
        }
        Ok(Box { lo, hi })
    }

    pub fn unit(dim: usize) -> Box {
        Box {
            lo: vec![0.0; dim],
            hi: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(v, (a, b))| *v >= *a && *v <= *b)
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| if a == b { *a } else { rng.gen_range(*a..*b) })
            .collect()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| 0.5 * (a + b))
            .collect()
    }

    pub fn corners(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        (0..1usize << d)
            .map(|mask| {
                (0..d)
                    .map(|i| {
                        if mask >> i & 1 == 1 {
                            self.hi[i]
                        } else {
                            self.lo[i]
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// Clamp a point into the box coordinatewise.
    pub fn clamp(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(v, (a, b))| v.max(*a).min(*b))
            .collect()
    }
}

/// Finitely described Borel set.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SetSpec {
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    /// Image of `base` under `x ↦ matrix·x + offset`; matrix nonsingular.
    Affine {
        matrix: Vec<Vec<f64>>,
        offset: Vec<f64>,
        base: std::boxed::Box<SetSpec>,
    },
    Union {
        parts: Vec<SetSpec>,
    },
    /// `{x in bounding box : p(x) <= 0 for every constraint p}`.
    Predicate {
        constraints: Vec<Polynomial>,
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
}

/// Volume estimate with its provenance.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Volume {
    pub value: f64,
    pub exact: bool,
}

const MC_VOLUME_SAMPLES: usize = 200_000;

impl SetSpec {
    pub fn from_box(b: &Box) -> SetSpec {
        SetSpec::Box {
            lo: b.lo.clone(),
            hi: b.hi.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            SetSpec::Box { lo, .. } => lo.len(),
            SetSpec::Affine { offset, .. } => offset.len(),
            SetSpec::Union { parts } => parts.first().map(|p| p.dim()).unwrap_or(0),
            SetSpec::Predicate { lo, .. } => lo.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SetSpec::Box { lo, hi } => {
                Box::new(lo.clone(), hi.clone())?;
            }
            SetSpec::Affine {
                matrix,
                offset,
                base,
            } => {
                base.validate()?;
                let d = offset.len();
                if matrix.len() != d || matrix.iter().any(|r| r.len() != d) {
                    return Err(Error::DimensionMismatch("affine matrix shape".into()));
                }
                if base.dim() != d {
                    return Err(Error::DimensionMismatch(
                        "affine base dimension mismatch".into(),
                    ));
                }
                if FMat::from_rows(matrix).inverse().is_none() {
                    return Err(Error::SingularMatrix);
                }
            }
            SetSpec::Union { parts } => {
                if parts.is_empty() {
                    return Err(Error::Validation("union of nothing".into()));
                }
                let d = parts[0].dim();
                for p in parts {
                    p.validate()?;
                    if p.dim() != d {
                        return Err(Error::DimensionMismatch(
                            "union members of mixed dimension".into(),
                        ));
                    }
                }
            }
            SetSpec::Predicate {
                constraints,
                lo,
                hi,
            } => {
                Box::new(lo.clone(), hi.clone())?;
                for c in constraints {
                    if c.nvars() != lo.len() {
                        return Err(Error::VarCountMismatch {
                            left: c.nvars(),
                            right: lo.len(),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn bounding_box(&self) -> Box {
        match self {
            SetSpec::Box { lo, hi } => Box {
                lo: lo.clone(),
                hi: hi.clone(),
            },
            SetSpec::Affine {
                matrix,
                offset,
                base,
            } => {
                let inner = base.bounding_box();
                let m = FMat::from_rows(matrix);
                let mut lo = vec![f64::INFINITY; offset.len()];
                let mut hi = vec![f64::NEG_INFINITY; offset.len()];
                for corner in inner.corners() {
                    let img = m.matvec(&corner);
                    for i in 0..offset.len() {
                        let v = img[i] + offset[i];
                        lo[i] = lo[i].min(v);
                        hi[i] = hi[i].max(v);
                    }
                }
                Box { lo, hi }
            }
            SetSpec::Union { parts } => {
                let mut boxes = parts.iter().map(|p| p.bounding_box());
                let first = boxes.next().unwrap();
                boxes.fold(first, |mut acc, b| {
                    for i in 0..acc.lo.len() {
                        acc.lo[i] = acc.lo[i].min(b.lo[i]);
                        acc.hi[i] = acc.hi[i].max(b.hi[i]);
                    }
                    acc
                })
            }
            SetSpec::Predicate { lo, hi, .. } => Box {
                lo: lo.clone(),
                hi: hi.clone(),
            },
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            SetSpec::Box { lo, hi } => {
                x.len() == lo.len()
                    && x.iter()
                        .zip(lo.iter().zip(hi))
                        .all(|(v, (a, b))| *v >= *a && *v <= *b)
            }
            SetSpec::Affine {
                matrix,
                offset,
                base,
            } => {
                let m = FMat::from_rows(matrix);
                match m.inverse() {
                    Some(inv) => {
                        let shifted: Vec<f64> = x.iter().zip(offset).map(|(v, o)| v - o).collect();
                        base.contains(&inv.matvec(&shifted))
                    }
                    None => false,
                }
            }
            SetSpec::Union { parts } => parts.iter().any(|p| p.contains(x)),
            SetSpec::Predicate {
                constraints,
                lo,
                hi,
            } => {
                let in_box = x.len() == lo.len()
                    && x.iter()
                        .zip(lo.iter().zip(hi))
                        .all(|(v, (a, b))| *v >= *a && *v <= *b);
                in_box
                    && constraints
                        .iter()
                        .all(|c| c.eval_f64(x).map(|v| v <= 0.0).unwrap_or(false))
            }
        }
    }

    /// Volume: exact for boxes, affine images of exact sets, and disjoint
    /// unions of boxes; Monte Carlo otherwise (fixed internal budget, seeded).
    pub fn volume(&self, seed: u64) -> Volume {
        match self {
            SetSpec::Box { lo, hi } => Volume {
                value: lo.iter().zip(hi).map(|(a, b)| b - a).product(),
                exact: true,
            },
            SetSpec::Affine { matrix, base, .. } => {
                let inner = base.volume(seed);
                let det = FMat::from_rows(matrix).det().abs();
                Volume {
                    value: det * inner.value,
                    exact: inner.exact,
                }
            }
            SetSpec::Union { .. } => {
                if let Some(v) = self.disjoint_union_volume(seed) {
                    return v;
                }
                self.mc_volume(seed)
            }
            SetSpec::Predicate { .. } => self.mc_volume(seed),
        }
    }

    /// Exact volume for unions whose members are pairwise disjoint boxes.
    fn disjoint_union_volume(&self, seed: u64) -> Option<Volume> {
        let SetSpec::Union { parts } = self else {
            return None;
        };
        let mut boxes = Vec::new();
        for p in parts {
            match p {
                SetSpec::Box { lo, hi } => boxes.push((lo.clone(), hi.clone())),
                _ => return None,
            }
        }
        for i in 0..boxes.len() {
            for j in i + 1..boxes.len() {
                let overlap = boxes[i]
                    .0
                    .iter()
                    .zip(&boxes[i].1)
                    .zip(boxes[j].0.iter().zip(&boxes[j].1))
                    .all(|((alo, ahi), (blo, bhi))| alo < bhi && blo < ahi);
                if overlap {
                    return None;
                }
            }
        }
        let total = parts.iter().map(|p| p.volume(seed).value).sum();
        Some(Volume {
            value: total,
            exact: true,
        })
    }

    fn mc_volume(&self, seed: u64) -> Volume {
        let bb = self.bounding_box();
        let bb_vol = bb.volume();
        if bb_vol == 0.0 {
            return Volume {
                value: 0.0,
                exact: true,
            };
        }
        let mut rng = crate::rng::shard(seed, 0xB0);
        let mut hits = 0usize;
        for _ in 0..MC_VOLUME_SAMPLES {
            if self.contains(&bb.sample(&mut rng)) {
                hits += 1;
            }
        }
        Volume {
            value: bb_vol * hits as f64 / MC_VOLUME_SAMPLES as f64,
            exact: false,
        }
    }

    /// Uniform sample from the set. Boxes sample directly; affine images map
    /// base samples; unions pick a member by volume and correct overlap bias
    /// by multiplicity rejection; predicates use rejection from the box.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        match self {
            SetSpec::Box { lo, hi } => Ok(lo
                .iter()
                .zip(hi)
                .map(|(a, b)| if a == b { *a } else { rng.gen_range(*a..*b) })
                .collect()),
            SetSpec::Affine {
                matrix,
                offset,
                base,
            } => {
                let x = base.sample(rng)?;
                let m = FMat::from_rows(matrix);
                Ok(m.matvec(&x)
                    .iter()
                    .zip(offset)
                    .map(|(v, o)| v + o)
                    .collect())
            }
            SetSpec::Union { parts } => {
                let vols: Vec<f64> = parts.iter().map(|p| p.volume(17).value).collect();
                let total: f64 = vols.iter().sum();
                if total <= 0.0 {
                    return Err(Error::EmptySet);
                }
                for _ in 0..10_000 {
                    let mut pick = rng.gen_range(0.0..total);
                    let mut idx = 0;
                    for (i, v) in vols.iter().enumerate() {
                        idx = i;
                        if pick < *v {
                            break;
                        }
                        pick -= v;
                    }
                    let x = parts[idx].sample(rng)?;
                    let multiplicity = parts.iter().filter(|p| p.contains(&x)).count();
                    if multiplicity <= 1 || rng.gen_range(0.0..1.0) < 1.0 / multiplicity as f64 {
                        return Ok(x);
                    }
                }
                Err(Error::EmptySet)
            }
            SetSpec::Predicate { .. } => {
                let bb = self.bounding_box();
                if bb.volume() == 0.0 {
                    return Err(Error::EmptySet);
                }
                for _ in 0..100_000 {
                    let x = bb.sample(rng);
                    if self.contains(&x) {
                        return Ok(x);
                    }
                }
                Err(Error::EmptySet)
            }
        }
    }

    /// Project a point into the set when possible (used by sup polishing).
    /// Boxes clamp; affine images clamp in base coordinates; other variants
    /// return the point unchanged when inside, `None` otherwise.
    pub fn project(&self, x: &[f64]) -> Option<Vec<f64>> {
        match self {
            SetSpec::Box { lo, hi } => Some(
                x.iter()
                    .zip(lo.iter().zip(hi))
                    .map(|(v, (a, b))| v.max(*a).min(*b))
                    .collect(),
            ),
            SetSpec::Affine {
                matrix,
                offset,
                base,
            } => {
                let m = FMat::from_rows(matrix);
                let inv = m.inverse()?;
                let shifted: Vec<f64> = x.iter().zip(offset).map(|(v, o)| v - o).collect();
                let pulled = base.project(&inv.matvec(&shifted))?;
                Some(
                    m.matvec(&pulled)
                        .iter()
                        .zip(offset)
                        .map(|(v, o)| v + o)
                        .collect(),
                )
            }
            _ => {
                if self.contains(x) {
                    Some(x.to_vec())
                } else {
                    None
                }
            }
        }
    }
}

/// Finitely described nonnegative measure.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MeasureSpec {
    /// Lebesgue measure restricted to a support set.
    Lebesgue { support: SetSpec },
    /// `w(x)·dx` on a support set, with a nonnegative polynomial weight.
    Weighted {
        support: SetSpec,
        density: Polynomial,
    },
    /// Finitely many weighted atoms.
    Discrete {
        points: Vec<Vec<f64>>,
        weights: Vec<f64>,
    },
}

impl MeasureSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            MeasureSpec::Lebesgue { support } => support.validate(),
            MeasureSpec::Weighted { support, density } => {
                support.validate()?;
                if density.nvars() != support.dim() {
                    return Err(Error::VarCountMismatch {
                        left: density.nvars(),
                        right: support.dim(),
                    });
                }
                Ok(())
            }
            MeasureSpec::Discrete { points, weights } => {
                if points.len() != weights.len() {
                    return Err(Error::DimensionMismatch(
                        "discrete measure points/weights".into(),
                    ));
                }
                if weights.iter().any(|w| *w < 0.0) {
                    return Err(Error::Validation("negative weight".into()));
                }
                Ok(())
            }
        }
    }

    /// Measure of `E` (intersected with the support). Exact for discrete
    /// measures and for Lebesgue on sets inside a box support.
    pub fn measure(&self, e: &SetSpec, seed: u64) -> f64 {
        match self {
            MeasureSpec::Lebesgue { support } => {
                if support_contains(support, e) {
                    e.volume(seed).value
                } else {
                    intersection_mc(support, e, seed)
                }
            }
            MeasureSpec::Weighted { support, density } => {
                let bb = e.bounding_box();
                if bb.volume() == 0.0 {
                    return 0.0;
                }
                let mut rng = crate::rng::shard(seed, 0xB2);
                let mut acc = 0.0;
                for _ in 0..MC_VOLUME_SAMPLES {
                    let x = bb.sample(&mut rng);
                    if e.contains(&x) && support.contains(&x) {
                        acc += density.eval_f64(&x).unwrap_or(0.0).max(0.0);
                    }
                }
                bb.volume() * acc / MC_VOLUME_SAMPLES as f64
            }
            MeasureSpec::Discrete { points, weights } => points
                .iter()
                .zip(weights)
                .filter(|(p, _)| e.contains(p))
                .map(|(_, w)| *w)
                .sum(),
        }
    }

    /// Sample a point of `E` from the normalized restriction, returning the
    /// point and its density weight relative to the uniform proposal (1 for
    /// unweighted measures; atoms are drawn by weight directly).
    pub fn sample_in(&self, e: &SetSpec, rng: &mut ChaCha8Rng) -> Result<(Vec<f64>, f64)> {
        match self {
            MeasureSpec::Lebesgue { support } => {
                for _ in 0..10_000 {
                    let x = e.sample(rng)?;
                    if support.contains(&x) {
                        return Ok((x, 1.0));
                    }
                }
                Err(Error::EmptySet)
            }
            MeasureSpec::Weighted { support, density } => {
                for _ in 0..10_000 {
                    let x = e.sample(rng)?;
                    if support.contains(&x) {
                        let w = density.eval_f64(&x).unwrap_or(0.0).max(0.0);
                        return Ok((x, w));
                    }
                }
                Err(Error::EmptySet)
            }
            MeasureSpec::Discrete { points, weights } => {
                let eligible: Vec<usize> = points
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| e.contains(p))
                    .map(|(i, _)| i)
                    .collect();
                if eligible.is_empty() {
                    return Err(Error::EmptySet);
                }
                let total: f64 = eligible.iter().map(|&i| weights[i]).sum();
                if total <= 0.0 {
                    return Err(Error::EmptySet);
                }
                let mut pick = rng.gen_range(0.0..total);
                for &i in &eligible {
                    if pick < weights[i] {
                        return Ok((points[i].clone(), 1.0));
                    }
                    pick -= weights[i];
                }
                Ok((points[*eligible.last().unwrap()].clone(), 1.0))
            }
        }
    }
}

/// Conservative syntactic check that `e`'s bounding box sits inside a box
/// support.
fn support_contains(support: &SetSpec, e: &SetSpec) -> bool {
    match support {
        SetSpec::Box { lo, hi } => {
            let bb = e.bounding_box();
            bb.lo.iter().zip(lo).all(|(a, b)| a >= b) && bb.hi.iter().zip(hi).all(|(a, b)| a <= b)
        }
        _ => false,
    }
}

fn intersection_mc(support: &SetSpec, e: &SetSpec, seed: u64) -> f64 {
    let bb = e.bounding_box();
    if bb.volume() == 0.0 {
        return 0.0;
    }
    let mut rng = crate::rng::shard(seed, 0xB1);
    let mut hits = 0usize;
    for _ in 0..MC_VOLUME_SAMPLES {
        let x = bb.sample(&mut rng);
        if e.contains(&x) && support.contains(&x) {
            hits += 1;
        }
    }
    bb.volume() * hits as f64 / MC_VOLUME_SAMPLES as f64
}
