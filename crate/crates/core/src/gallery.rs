//! Built-in constructors for the worked examples: Clifford matrix families,
//! the determinantal functional, affine and graph forms, and the degenerate
//! mixed-power example. Each registry entry records its expected facts with
//! provenance.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PhiSpec;
use crate::matrix::RatMat;
use crate::poly::{parse_expression, rat_int, PolyVector, Polynomial, Rat};
use crate::Provenance;

/// Left-multiplication matrices of the generators `e_1..e_l` of the real
/// algebra with relations `e_i e_j = -e_j e_i` (i ≠ j) and `e_i² = 1`, in the
/// basis of blades ordered lexicographically by subset bitmask.
pub fn clifford_matrices(l: usize) -> Result<Vec<RatMat>> {
    if l == 0 {
        return Err(Error::Validation("need at least one generator".into()));
    }
    if l > 4 {
        return Err(Error::Validation(
            "generator count capped at 4 (matrix size 2^l)".into(),
        ));
    }
    let dim = 1usize << l;
    let mut out = Vec::with_capacity(l);
    for gen in 1..=l {
        let bit = 1usize << (gen - 1);
        let mut m = RatMat::zero(dim, dim);
        for (col, blade) in (0..dim).enumerate() {
            // e_gen · e_S: move e_gen past the generators of S smaller than
            // gen, each crossing contributing a sign flip; e_gen² = 1 absorbs
            // a duplicate
            let crossings = (blade & (bit - 1)).count_ones();
            let sign = if crossings % 2 == 0 { 1 } else { -1 };
            let target = blade ^ bit;
            m.set(target, col, rat_int(sign));
        }
        out.push(m);
    }
    Ok(out)
}

/// `Φ(A_1, A_2) = det(A_1 - A_2)` on pairs of `nprime x nprime` matrices,
/// entries ordered row-major. Point dimension is `nprime²`, arity 2.
pub fn phi_determinantal(nprime: usize) -> Result<PhiSpec> {
    if nprime == 0 {
        return Err(Error::Validation(
            "matrix dimension must be positive".into(),
        ));
    }
    let n = nprime * nprime;
    let nvars = 2 * n;
    let entries: Vec<Vec<Polynomial>> = (0..nprime)
        .map(|i| {
            (0..nprime)
                .map(|j| {
                    let idx = i * nprime + j;
                    &Polynomial::var(nvars, idx) - &Polynomial::var(nvars, n + idx)
                })
                .collect()
        })
        .collect();
    let det = crate::matrix::det_poly_matrix(&entries)?;
    PhiSpec::new(n, 2, 1, 0, PolyVector::new(vec![det])?)
}

/// `Φ(x_1,..,x_{n'+1}) = det(γ(x_1)-γ(x_{k}), .., γ(x_{n'})-γ(x_{k}))` for a
/// polynomial curve `γ : ℝ^p → ℝ^{n'}`, with `k = n'+1` arguments. The j-th
/// column of the determinant holds the coordinates of `γ(x_j)-γ(x_k)`.
pub fn phi_affine(gamma: &PolyVector, k: usize) -> Result<PhiSpec> {
    let nprime = gamma.len();
    if k != nprime + 1 {
        return Err(Error::Validation(format!(
            "affine form needs k = {} arguments for a {}-component curve",
            nprime + 1,
            nprime
        )));
    }
    let p = gamma.nvars();
    let nvars = k * p;
    let lift = |component: &Polynomial, block: usize| -> Result<Polynomial> {
        let map: Vec<usize> = (0..p).map(|i| block * p + i).collect();
        component.remap(nvars, &map)
    };
    let entries: Vec<Vec<Polynomial>> = (0..nprime)
        .map(|row| {
            (0..nprime)
                .map(|col| {
                    let a = lift(gamma.component(row), col)?;
                    let b = lift(gamma.component(row), nprime)?;
                    Ok(&a - &b)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let det = crate::matrix::det_poly_matrix(&entries)?;
    PhiSpec::new(p, k, 1, 0, PolyVector::new(vec![det])?)
}

/// `Φ(t_1,t_2) = det(Q(·, t_2 - t_1))` for a coefficient tensor `q[u][i][j]`
/// (upper index first, symmetric in the lower pair `(i,j)`); `Q(·,a)` is the
/// matrix whose `(i,j)` entry is `Σ_m q[i][j][m]·a_m`.
pub fn phi_quadratic(q: &[Vec<Vec<Rat>>]) -> Result<PhiSpec> {
    let n = q.len();
    for layer in q {
        if layer.len() != n || layer.iter().any(|row| row.len() != n) {
            return Err(Error::Validation("Q must be n x n x n".into()));
        }
    }
    for l in 0..n {
        for i in 0..n {
            for j in 0..n {
                if q[l][i][j] != q[l][j][i] {
                    return Err(Error::Validation(
                        "Q must be symmetric in its lower indices".into(),
                    ));
                }
            }
        }
    }
    let nvars = 2 * n;
    // a = t2 - t1 per coordinate
    let a: Vec<Polynomial> = (0..n)
        .map(|l| &Polynomial::var(nvars, n + l) - &Polynomial::var(nvars, l))
        .collect();
    let entries: Vec<Vec<Polynomial>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let mut acc = Polynomial::zero(nvars);
                    for (l, al) in a.iter().enumerate() {
                        let c = &q[i][j][l];
                        if !c.is_zero() {
                            acc = acc.checked_add(&al.scale(c))?;
                        }
                    }
                    Ok(acc)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let det = crate::matrix::det_poly_matrix(&entries)?;
    PhiSpec::new(n, 2, 1, 0, PolyVector::new(vec![det])?)
}

/// `Φ(x, y) = γ(x) - γ(y)` for a polynomial map `γ : ℝ^p → ℝ^m`.
pub fn phi_hausdorff(gamma: &PolyVector) -> Result<PhiSpec> {
    let p = gamma.nvars();
    let m = gamma.len();
    let nvars = 2 * p;
    let comps: Vec<Polynomial> = gamma
        .components()
        .iter()
        .map(|c| {
            let first = c.remap(nvars, &(0..p).collect::<Vec<_>>())?;
            let second = c.remap(nvars, &(p..2 * p).collect::<Vec<_>>())?;
            Ok(&first - &second)
        })
        .collect::<Result<Vec<_>>>()?;
    PhiSpec::new(p, 2, m, 0, PolyVector::new(comps)?)
}

/// The identity curve on ℝⁿ, giving `Φ(x,y) = x - y`.
pub fn identity_curve(n: usize) -> PolyVector {
    PolyVector::new((0..n).map(|i| Polynomial::var(n, i)).collect()).unwrap()
}

/// The degenerate example `Φ((x1,y1),(x2,y2)) = (x1-x2)² + (y1-y2)³`.
pub fn phi_mixed_degenerate() -> Result<PhiSpec> {
    let vars = ["x1", "y1", "x2", "y2"];
    let body = parse_expression("(x1 - x2)^2 + (y1 - y2)^3", &vars)?;
    PhiSpec::new(2, 2, 1, 0, PolyVector::new(vec![body])?)
}

/// `Φ((x1,y1),(x2,y2)) = (x1-x2)²`: the standard positivity-zero example.
pub fn phi_square_difference() -> Result<PhiSpec> {
    let vars = ["x1", "y1", "x2", "y2"];
    let body = parse_expression("(x1 - x2)^2", &vars)?;
    PhiSpec::new(2, 2, 1, 0, PolyVector::new(vec![body])?)
}

/// The line family `γ(t,(x1,x2)) = (t, x1 + t·x2)` underlying the desk-scale
/// Radon verification.
pub fn line_family() -> crate::geometry::GammaSpec {
    let vars = ["t", "x1", "x2"];
    let c0 = parse_expression("t", &vars).unwrap();
    let c1 = parse_expression("x1 + t*x2", &vars).unwrap();
    crate::geometry::GammaSpec::new(1, 2, 2, PolyVector::new(vec![c0, c1]).unwrap()).unwrap()
}

/// One expected fact about a gallery entry.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExpectedFact {
    pub name: String,
    pub value: String,
    pub provenance: Provenance,
}

/// A registry entry: a named constructor plus its documented expectations.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GalleryEntry {
    pub name: String,
    pub description: String,
    pub parameters: Vec<String>,
    pub facts: Vec<ExpectedFact>,
}

fn fact(name: &str, value: impl ToString, provenance: Provenance) -> ExpectedFact {
    ExpectedFact {
        name: name.into(),
        value: value.to_string(),
        provenance,
    }
}

/// The registered gallery.
pub fn registry() -> Vec<GalleryEntry> {
    vec![
        GalleryEntry {
            name: "hausdorff-identity".into(),
            description: "Φ(x,y) = x − y on ℝⁿ; S(E) is the diameter of E".into(),
            parameters: vec!["n (default 1)".into()],
            facts: vec![
                fact("q", 1, Provenance::Paper),
                fact("positivity", "positive", Provenance::Trivial),
                fact("density", 1.0, Provenance::Trivial),
            ],
        },
        GalleryEntry {
            name: "determinantal".into(),
            description: "Φ(A1,A2) = det(A1 − A2) on n'×n' matrices".into(),
            parameters: vec!["nprime (default 2)".into()],
            facts: vec![
                fact("q", "nprime", Provenance::Paper),
                fact("positivity", "positive", Provenance::Paper),
            ],
        },
        GalleryEntry {
            name: "square-difference".into(),
            description: "Φ = (x1−x2)² on ℝ²; degenerate at σ = n/q".into(),
            parameters: vec![],
            facts: vec![
                fact("q", 2, Provenance::Derived),
                fact("positivity", "zero", Provenance::Derived),
            ],
        },
        GalleryEntry {
            name: "mixed-degenerate".into(),
            description: "Φ = (x1−x2)² + (y1−y2)³; nonconcentration exponent 6/5".into(),
            parameters: vec![],
            facts: vec![
                fact("q", 2, Provenance::Derived),
                fact("snorm_exponent", "6/5", Provenance::Paper),
            ],
        },
        GalleryEntry {
            name: "affine-parabola".into(),
            description: "affine form for the monomial curve (t, t²), k = 3".into(),
            parameters: vec![],
            facts: vec![fact("q_at_least", 3, Provenance::Derived)],
        },
        GalleryEntry {
            name: "clifford".into(),
            description: "left-multiplication matrices of e_1..e_l; det identity".into(),
            parameters: vec!["l (default 2, max 4)".into()],
            facts: vec![fact(
                "det_identity",
                "det(Σ a_j M_j)² = (Σ a_j²)^{2^l}",
                Provenance::Paper,
            )],
        },
        GalleryEntry {
            name: "quadratic-identity".into(),
            description: "Φ(t1,t2) = det Q(·, t2−t1) with Q the identity form".into(),
            parameters: vec!["n (default 2)".into()],
            facts: vec![
                fact("q", "n", Provenance::Derived),
                fact("translation_invariant", true, Provenance::Derived),
            ],
        },
        GalleryEntry {
            name: "line-family".into(),
            description: "γ(t,x) = (t, x1 + t·x2); Φ_x(t1,t2) = ±(t2 − t1)".into(),
            parameters: vec![],
            facts: vec![
                fact("q", 1, Provenance::Derived),
                fact("density", 1.0, Provenance::Derived),
            ],
        },
    ]
}

/// Identity quadratic form `Q[l][i][j] = [i == j == l]`.
pub fn identity_q(n: usize) -> Vec<Vec<Vec<Rat>>> {
    (0..n)
        .map(|l| {
            (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            if i == j && j == l {
                                Rat::one()
                            } else {
                                Rat::zero()
                            }
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// The monomial curve `(t, t²)` as a PolyVector over one variable.
pub fn parabola_curve() -> PolyVector {
    let t = Polynomial::var(1, 0);
    PolyVector::new(vec![t.clone(), t.pow(2)]).unwrap()
}
