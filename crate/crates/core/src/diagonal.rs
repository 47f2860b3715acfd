//! Order of vanishing of Φ on the diagonal and the diagonal Taylor data
//! feeding the density formulas.
//!
//! The order is computed by the substitution `x_j = x + h·u_j` with fresh
//! variables `(x, u, h)`: the lowest power of `h` carrying a nonzero
//! coefficient is exactly the smallest total order of a diagonal partial
//! derivative that does not vanish identically on the diagonal, and the
//! coefficient of `h^q u^α` is the Taylor-normalized diagonal partial
//! `∂^α Φ(x,..,x) / (α_1! ⋯ α_k!)`.

use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PhiSpec;
use crate::matrix::RatMat;
use crate::poly::{Polynomial, Rat};

/// One leading term of the diagonal expansion: a k-tuple of multiindices with
/// total order q, and the Taylor coefficient polynomial of each Φ component
/// in the diagonal variable (and parameters).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LeadingTerm {
    pub alphas: Vec<Vec<u32>>,
    pub coefficients: Vec<Polynomial>,
}

/// Diagonal expansion of Φ: the order of vanishing and the exact leading
/// Taylor coefficients.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiagonalExpansion {
    /// Order of vanishing on the diagonal; 0 when Φ does not vanish there.
    pub q: u32,
    /// True when Φ is the zero map, in which case no finite order exists and
    /// `q` is meaningless.
    pub identically_zero: bool,
    /// Taylor coefficients at total order `q`, keyed by multiindex tuples in
    /// deterministic order. Coefficient polynomials live in the variables
    /// `(x_1..x_n, params)`.
    pub leading: Vec<LeadingTerm>,
}

/// All multiindices over `n` variables of total degree exactly `d`.
pub fn multiindices(n: usize, d: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut current = vec![0u32; n];
    fn rec(pos: usize, remaining: u32, n: usize, current: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if pos == n - 1 {
            current[pos] = remaining;
            out.push(current.clone());
            return;
        }
        for v in (0..=remaining).rev() {
            current[pos] = v;
            rec(pos + 1, remaining - v, n, current, out);
        }
    }
    if n == 0 {
        if d == 0 {
            out.push(vec![]);
        }
        return out;
    }
    rec(0, d, n, &mut current, &mut out);
    out
}

/// All k-tuples of multiindices over `n` variables with total order exactly
/// `q`, in deterministic order.
pub fn alpha_tuples(n: usize, k: usize, q: u32) -> Vec<Vec<Vec<u32>>> {
    fn rec(
        block: usize,
        k: usize,
        n: usize,
        remaining: u32,
        current: &mut Vec<Vec<u32>>,
        out: &mut Vec<Vec<Vec<u32>>>,
    ) {
        if block == k {
            if remaining == 0 {
                out.push(current.clone());
            }
            return;
        }
        for d in (0..=remaining).rev() {
            for alpha in multiindices(n, d) {
                current.push(alpha);
                rec(block + 1, k, n, remaining - d, current, out);
                current.pop();
            }
        }
    }
    let mut out = Vec::new();
    let mut current = Vec::new();
    rec(0, k, n, q, &mut current, &mut out);
    out
}

/// `α! = α_1! ⋯ α_n!` as an exact rational.
pub fn multiindex_factorial(alpha: &[u32]) -> Rat {
    let mut acc = Rat::one();
    for &e in alpha {
        for v in 2..=e as i64 {
            acc *= crate::poly::rat_int(v);
        }
    }
    acc
}

/// Factorial product over a tuple of multiindices.
pub fn tuple_factorial(alphas: &[Vec<u32>]) -> Rat {
    alphas.iter().map(|a| multiindex_factorial(a)).product()
}

/// Substitute `x_j = x + h·u_j` into every component of Φ. Result variables
/// are ordered `(x_1..x_n, u_11..u_kn, h, params)`.
fn diagonal_substitution(phi: &PhiSpec) -> Result<Vec<Polynomial>> {
    let n = phi.n;
    let k = phi.k;
    let p = phi.params;
    let new_nvars = n + k * n + 1 + p;
    let h_index = n + k * n;
    let subs: Vec<Polynomial> = (0..phi.nvars())
        .map(|v| {
            if v < k * n {
                let block = v / n;
                let coord = v % n;
                let x = Polynomial::var(new_nvars, coord);
                let h = Polynomial::var(new_nvars, h_index);
                let u = Polynomial::var(new_nvars, n + block * n + coord);
                x.checked_add(&h.checked_mul(&u)?)
            } else {
                Ok(Polynomial::var(new_nvars, n + k * n + 1 + (v - k * n)))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    phi.body
        .components()
        .iter()
        .map(|c| c.substitute(&subs))
        .collect()
}

/// Order of vanishing of Φ on the diagonal, with exact leading Taylor
/// coefficients. `q = 0` (with empty leading data) signals that Φ does not
/// vanish identically on the diagonal.
pub fn order_of_vanishing(phi: &PhiSpec) -> Result<DiagonalExpansion> {
    phi.validate()?;
    let n = phi.n;
    let k = phi.k;
    let p = phi.params;
    let h_index = n + k * n;
    let substituted = diagonal_substitution(phi)?;

    if substituted.iter().all(|c| c.is_zero()) {
        return Ok(DiagonalExpansion {
            q: 0,
            identically_zero: true,
            leading: Vec::new(),
        });
    }

    let q = substituted
        .iter()
        .flat_map(|c| c.terms().map(|(m, _)| m.0[h_index]))
        .min()
        .expect("nonzero polynomial has terms");

    if q == 0 {
        // Φ does not vanish on the diagonal
        return Ok(DiagonalExpansion {
            q: 0,
            identically_zero: false,
            leading: Vec::new(),
        });
    }

    // collect coefficient polynomials of h^q u^alpha per component
    let coeff_nvars = n + p;
    let mut leading_map: std::collections::BTreeMap<Vec<Vec<u32>>, Vec<Polynomial>> =
        std::collections::BTreeMap::new();
    for (comp_idx, comp) in substituted.iter().enumerate() {
        for (m, c) in comp.terms() {
            if m.0[h_index] != q {
                continue;
            }
            let alphas: Vec<Vec<u32>> = (0..k)
                .map(|j| m.0[n + j * n..n + (j + 1) * n].to_vec())
                .collect();
            // residual exponents over (x, params)
            let mut exps = vec![0u32; coeff_nvars];
            exps[..n].copy_from_slice(&m.0[..n]);
            exps[n..].copy_from_slice(&m.0[h_index + 1..]);
            let entry = leading_map
                .entry(alphas)
                .or_insert_with(|| vec![Polynomial::zero(coeff_nvars); phi.m]);
            entry[comp_idx] = entry[comp_idx].checked_add(&Polynomial::from_terms(
                coeff_nvars,
                vec![(exps, c.clone())],
            )?)?;
        }
    }
    let leading: Vec<LeadingTerm> = leading_map
        .into_iter()
        .filter(|(_, coeffs)| coeffs.iter().any(|c| !c.is_zero()))
        .map(|(alphas, coefficients)| LeadingTerm {
            alphas,
            coefficients,
        })
        .collect();

    Ok(DiagonalExpansion {
        q,
        identically_zero: false,
        leading,
    })
}

/// Order of vanishing with the parameter block frozen at a rational point.
pub fn order_of_vanishing_at(phi: &PhiSpec, params: &[Rat]) -> Result<DiagonalExpansion> {
    order_of_vanishing(&phi.freeze_params(params)?)
}

/// Exact iterated directional derivative
/// `(T*∂)^{α_1}_1 ⋯ (T*∂)^{α_k}_k Φ` at the diagonal point `x` (with frozen
/// parameter values appended when Φ carries parameters).
///
/// Realized by composing each point block with `T` and taking ordinary
/// partials: `∂^α (Φ∘T)(y) = [(T*∂)^α Φ](T y)`, so the result is evaluated
/// at `y = T^{-1} x` to land on the requested diagonal point.
pub fn diagonal_derivative_exact(
    phi: &PhiSpec,
    t: &RatMat,
    alphas: &[Vec<u32>],
    x: &[Rat],
    params: &[Rat],
) -> Result<Vec<Rat>> {
    phi.validate()?;
    if alphas.len() != phi.k {
        return Err(Error::DimensionMismatch(format!(
            "need {} multiindices, got {}",
            phi.k,
            alphas.len()
        )));
    }
    if t.nrows() != phi.n || t.ncols() != phi.n {
        return Err(Error::DimensionMismatch(format!(
            "T must be {0}x{0}",
            phi.n
        )));
    }
    if x.len() != phi.n {
        return Err(Error::PointLengthMismatch {
            expected: phi.n,
            got: x.len(),
        });
    }
    if params.len() != phi.params {
        return Err(Error::PointLengthMismatch {
            expected: phi.params,
            got: params.len(),
        });
    }
    for a in alphas {
        if a.len() != phi.n {
            return Err(Error::DimensionMismatch(format!(
                "multiindex length {} != n = {}",
                a.len(),
                phi.n
            )));
        }
    }
    let t_inv = t.inverse()?;
    let y = t_inv.mul_vec(x)?;
    let mut point: Vec<Rat> = Vec::with_capacity(phi.nvars());
    for _ in 0..phi.k {
        point.extend(y.iter().cloned());
    }
    point.extend(params.iter().cloned());

    let mut out = Vec::with_capacity(phi.m);
    for comp in phi.body.components() {
        let mut g = comp.clone();
        for j in 0..phi.k {
            g = g.compose_linear(t, phi.block_start(j))?;
        }
        for (j, alpha) in alphas.iter().enumerate() {
            g = g.partial_multi(phi.block_start(j), alpha)?;
        }
        out.push(g.eval(&point)?);
    }
    Ok(out)
}

/// Floating wrapper over [`diagonal_derivative_exact`].
pub fn diagonal_derivative(
    phi: &PhiSpec,
    t: &RatMat,
    alphas: &[Vec<u32>],
    x: &[Rat],
    params: &[Rat],
) -> Result<Vec<f64>> {
    Ok(diagonal_derivative_exact(phi, t, alphas, x, params)?
        .iter()
        .map(|v| v.to_f64().unwrap_or(f64::NAN))
        .collect())
}

/// JSON report for the CLI: order plus the leading terms.
#[derive(Serialize, Deserialize)]
pub struct DiagonalReport {
    pub schema_version: String,
    pub q: u32,
    pub identically_zero: bool,
    pub leading_terms: Vec<LeadingTerm>,
}

impl DiagonalReport {
    pub fn from_expansion(e: &DiagonalExpansion) -> Self {
        DiagonalReport {
            schema_version: crate::SCHEMA_VERSION.to_string(),
            q: e.q,
            identically_zero: e.identically_zero,
            leading_terms: e.leading.clone(),
        }
    }
}

/// Restrict a Φ body polynomial to the diagonal: substitute `x_j := x` for
/// every block, producing a polynomial in `(x, params)`.
pub fn restrict_to_diagonal(phi: &PhiSpec, poly: &Polynomial) -> Result<Polynomial> {
    let n = phi.n;
    let k = phi.k;
    let new_nvars = n + phi.params;
    let mut map = Vec::with_capacity(phi.nvars());
    for _ in 0..k {
        for i in 0..n {
            map.push(i);
        }
    }
    for i in 0..phi.params {
        map.push(n + i);
    }
    poly.remap(new_nvars, &map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery;
    use crate::geometry;
    use crate::poly::{rat, rat_int, PolyVector};
    use num_traits::Zero;

    fn phi_x_minus_y(n: usize) -> PhiSpec {
        // Φ(x, y) = x − y componentwise on ℝⁿ
        let nvars = 2 * n;
        let comps: Vec<Polynomial> = (0..n)
            .map(|i| &Polynomial::var(nvars, i) - &Polynomial::var(nvars, n + i))
            .collect();
        PhiSpec::new(n, 2, n, 0, PolyVector::new(comps).unwrap()).unwrap()
    }

    #[test]
    fn order_one_for_difference_map() {
        for n in 1..=3 {
            let e = order_of_vanishing(&phi_x_minus_y(n)).unwrap();
            assert_eq!(e.q, 1);
            assert!(!e.identically_zero);
        }
    }

    #[test]
    fn order_n_for_determinantal() {
        let phi = gallery::phi_determinantal(2).unwrap();
        let e = order_of_vanishing(&phi).unwrap();
        assert_eq!(e.q, 2);
    }

    #[test]
    fn order_two_for_mixed_degenerate() {
        // Φ = (x1−x2)² + (y1−y2)³ on ℝ²: brute-force symbolic partials of
        // order < 2 all vanish on the diagonal and some order-2 one does not
        let phi = gallery::phi_mixed_degenerate().unwrap();
        let e = order_of_vanishing(&phi).unwrap();
        assert_eq!(e.q, 2);

        // independent oracle: direct symbolic differentiation
        let body = phi.body.component(0);
        for tuple in alpha_tuples(2, 2, 1) {
            let mut g = body.clone();
            for (j, alpha) in tuple.iter().enumerate() {
                g = g.partial_multi(phi.block_start(j), alpha).unwrap();
            }
            let restricted = restrict_to_diagonal(&phi, &g).unwrap();
            assert!(restricted.is_zero(), "order-1 partial must vanish on Δ");
        }
        let nonzero_order2 = alpha_tuples(2, 2, 2).into_iter().any(|tuple| {
            let mut g = body.clone();
            for (j, alpha) in tuple.iter().enumerate() {
                g = g.partial_multi(phi.block_start(j), alpha).unwrap();
            }
            !restrict_to_diagonal(&phi, &g).unwrap().is_zero()
        });
        assert!(nonzero_order2);
    }

    #[test]
    fn zero_map_is_flagged() {
        let body = PolyVector::new(vec![Polynomial::zero(2)]).unwrap();
        let phi = PhiSpec::new(1, 2, 1, 0, body).unwrap();
        let e = order_of_vanishing(&phi).unwrap();
        assert!(e.identically_zero);
    }

    #[test]
    fn q_zero_when_phi_does_not_vanish() {
        let body = PolyVector::new(vec![Polynomial::one(2)]).unwrap();
        let phi = PhiSpec::new(1, 2, 1, 0, body).unwrap();
        let e = order_of_vanishing(&phi).unwrap();
        assert_eq!(e.q, 0);
        assert!(!e.identically_zero);
    }

    #[test]
    fn leading_matches_direct_differentiation() {
        // h-substitution route vs direct symbolic partials, exact
        let phi = gallery::phi_determinantal(2).unwrap();
        let e = order_of_vanishing(&phi).unwrap();
        assert!(!e.leading.is_empty());
        for term in &e.leading {
            let mut g = phi.body.component(0).clone();
            for (j, alpha) in term.alphas.iter().enumerate() {
                g = g.partial_multi(phi.block_start(j), alpha).unwrap();
            }
            let restricted = restrict_to_diagonal(&phi, &g).unwrap();
            let fact = tuple_factorial(&term.alphas);
            let taylor = restricted.scale(&(Rat::one() / fact));
            assert_eq!(taylor, term.coefficients[0]);
        }
        // and every lower-order partial vanishes identically on Δ
        for order in 0..e.q {
            for tuple in alpha_tuples(phi.n, phi.k, order) {
                let mut g = phi.body.component(0).clone();
                for (j, alpha) in tuple.iter().enumerate() {
                    g = g.partial_multi(phi.block_start(j), alpha).unwrap();
                }
                assert!(restrict_to_diagonal(&phi, &g).unwrap().is_zero());
            }
        }
    }

    #[test]
    fn first_directional_derivative_of_difference() {
        // Φ = x − y on ℝ¹, T = [1], α = ((1),(0)) → 1
        let phi = phi_x_minus_y(1);
        let t = RatMat::identity(1);
        let v =
            diagonal_derivative_exact(&phi, &t, &[vec![1], vec![0]], &[rat_int(0)], &[]).unwrap();
        assert_eq!(v, vec![rat_int(1)]);
    }

    #[test]
    fn determinantal_mixed_second_partial() {
        // Φ = det(A1−A2) for 2x2 blocks; mixed partial in entries (1,1) and
        // (2,2) of the first argument is ±1 (symbolic determinant oracle)
        let phi = gallery::phi_determinantal(2).unwrap();
        let t = RatMat::identity(4);
        // entries ordered (1,1),(1,2),(2,1),(2,2): α₁ = e_(1,1) + e_(2,2)
        let v = diagonal_derivative_exact(
            &phi,
            &t,
            &[vec![1, 0, 0, 1], vec![0, 0, 0, 0]],
            &[rat_int(0), rat_int(0), rat_int(0), rat_int(0)],
            &[],
        )
        .unwrap();
        assert!(v == vec![rat_int(1)] || v == vec![rat_int(-1)]);
    }

    /// Chain-rule oracle: expand (T*∂)^α as an explicit linear combination of
    /// plain partials with products of T entries as weights.
    fn directional_derivative_oracle(
        phi: &PhiSpec,
        t: &RatMat,
        alphas: &[Vec<u32>],
        x: &[Rat],
        params: &[Rat],
    ) -> Vec<Rat> {
        let n = phi.n;
        let mut point: Vec<Rat> = Vec::new();
        for _ in 0..phi.k {
            point.extend(x.iter().cloned());
        }
        point.extend(params.iter().cloned());
        phi.body
            .components()
            .iter()
            .map(|comp| {
                // expansion: map from per-block beta tuples to weight
                let mut expansion: std::collections::BTreeMap<Vec<Vec<u32>>, Rat> =
                    std::collections::BTreeMap::new();
                expansion.insert(vec![vec![0; n]; phi.k], Rat::one());
                for (j, alpha) in alphas.iter().enumerate() {
                    for (i, &mult) in alpha.iter().enumerate() {
                        for _ in 0..mult {
                            // apply (T*∂)_i = Σ_ℓ T_{ℓ i} ∂_ℓ on block j
                            let mut next: std::collections::BTreeMap<Vec<Vec<u32>>, Rat> =
                                std::collections::BTreeMap::new();
                            for (betas, w) in &expansion {
                                for ell in 0..n {
                                    let c = t.get(ell, i);
                                    if c.is_zero() {
                                        continue;
                                    }
                                    let mut nb = betas.clone();
                                    nb[j][ell] += 1;
                                    let entry = next.entry(nb).or_insert_with(Rat::zero);
                                    *entry += w * c;
                                }
                            }
                            expansion = next;
                        }
                    }
                }
                let mut acc = Rat::zero();
                for (betas, w) in &expansion {
                    let mut g = comp.clone();
                    for (j, beta) in betas.iter().enumerate() {
                        g = g.partial_multi(phi.block_start(j), beta).unwrap();
                    }
                    acc += w * g.eval(&point).unwrap();
                }
                acc
            })
            .collect()
    }

    #[test]
    fn compose_route_matches_chain_rule_oracle() {
        let mut rng = crate::poly::testutil::rng(59);
        let phi = gallery::phi_mixed_degenerate().unwrap();
        for _ in 0..20 {
            // random invertible 2x2 rational T
            let t = loop {
                let cand = RatMat::new(vec![
                    vec![
                        rat(rand::Rng::gen_range(&mut rng, -3i64..=3), 1),
                        rat(rand::Rng::gen_range(&mut rng, -3i64..=3), 1),
                    ],
                    vec![
                        rat(rand::Rng::gen_range(&mut rng, -3i64..=3), 1),
                        rat(rand::Rng::gen_range(&mut rng, -3i64..=3), 1),
                    ],
                ])
                .unwrap();
                if !cand.det().unwrap().is_zero() {
                    break cand;
                }
            };
            let tuples = alpha_tuples(2, 2, rand::Rng::gen_range(&mut rng, 1u32..=3));
            let tuple = &tuples[rand::Rng::gen_range(&mut rng, 0..tuples.len())];
            let x = vec![
                rat(rand::Rng::gen_range(&mut rng, -4i64..=4), 2),
                rat(rand::Rng::gen_range(&mut rng, -4i64..=4), 2),
            ];
            let direct = diagonal_derivative_exact(&phi, &t, tuple, &x, &[]).unwrap();
            let oracle = directional_derivative_oracle(&phi, &t, tuple, &x, &[]);
            assert_eq!(direct, oracle);
        }
    }

    /// Derivative of Φ in a curved frame whose linear part at `x0` is T:
    /// each block is composed with `ψ(y) = x0 + T(y−x0) + C[(y−x0),(y−x0)]`
    /// before taking ordinary partials at `y = x0`.
    fn curved_frame_derivative(
        phi: &PhiSpec,
        t: &RatMat,
        quad: &[Vec<Vec<Rat>>],
        alphas: &[Vec<u32>],
        x: &[Rat],
    ) -> Vec<Rat> {
        let n = phi.n;
        let nv = phi.nvars();
        let subs: Vec<Polynomial> = (0..nv)
            .map(|v| {
                let block = v / n;
                let coord = v % n;
                let mut p = Polynomial::constant(nv, x[coord].clone());
                let shifted: Vec<Polynomial> = (0..n)
                    .map(|m| {
                        &Polynomial::var(nv, block * n + m)
                            - &Polynomial::constant(nv, x[m].clone())
                    })
                    .collect();
                for m in 0..n {
                    p = p.checked_add(&shifted[m].scale(t.get(coord, m))).unwrap();
                }
                for m in 0..n {
                    for mp in 0..n {
                        let c = &quad[coord][m][mp];
                        if !c.is_zero() {
                            let prod = shifted[m].checked_mul(&shifted[mp]).unwrap();
                            p = p.checked_add(&prod.scale(c)).unwrap();
                        }
                    }
                }
                p
            })
            .collect();
        let mut point: Vec<Rat> = Vec::new();
        for _ in 0..phi.k {
            point.extend(x.iter().cloned());
        }
        phi.body
            .components()
            .iter()
            .map(|comp| {
                let mut g = comp.substitute(&subs).unwrap();
                for (j, alpha) in alphas.iter().enumerate() {
                    g = g.partial_multi(phi.block_start(j), alpha).unwrap();
                }
                g.eval(&point).unwrap()
            })
            .collect()
    }

    #[test]
    fn order_q_values_ignore_lower_order_frame_shifts() {
        // at total order exactly q, adding quadratic corrections to the
        // change of variables leaves the diagonal derivative unchanged: the
        // correction terms multiply lower-order diagonal derivatives, which
        // all vanish
        let mut rng = crate::poly::testutil::rng(83);
        let cases = [
            gallery::phi_determinantal(2).unwrap(),
            gallery::phi_mixed_degenerate().unwrap(),
        ];
        let mut checked = 0;
        for phi in &cases {
            let e = order_of_vanishing(phi).unwrap();
            let n = phi.n;
            let x: Vec<Rat> = (0..n)
                .map(|_| rat(rand::Rng::gen_range(&mut rng, -4i64..=4), 3))
                .collect();
            let tuples = alpha_tuples(n, phi.k, e.q);
            for _ in 0..5 {
                let t = loop {
                    let rows: Vec<Vec<Rat>> = (0..n)
                        .map(|_| {
                            (0..n)
                                .map(|_| rat(rand::Rng::gen_range(&mut rng, -3i64..=3), 1))
                                .collect()
                        })
                        .collect();
                    let cand = RatMat::new(rows).unwrap();
                    if !cand.det().unwrap().is_zero() {
                        break cand;
                    }
                };
                let quad: Vec<Vec<Vec<Rat>>> = (0..n)
                    .map(|_| {
                        (0..n)
                            .map(|_| {
                                (0..n)
                                    .map(|_| rat(rand::Rng::gen_range(&mut rng, -2i64..=2), 1))
                                    .collect()
                            })
                            .collect()
                    })
                    .collect();
                let tuple = &tuples[rand::Rng::gen_range(&mut rng, 0..tuples.len())];
                let straight = diagonal_derivative_exact(phi, &t, tuple, &x, &[]).unwrap();
                let curved = curved_frame_derivative(phi, &t, &quad, tuple, &x);
                assert_eq!(straight, curved);
                checked += 1;
            }
        }
        assert!(checked >= 10);
    }

    #[test]
    fn gamma_bound_respected() {
        // Φ built from a GammaSpec with ω ≠ 0 vanishes to order ≥ r(k−1)
        let mut rng = crate::poly::testutil::rng(61);
        let mut done = 0;
        while done < 10 {
            let g = geometry::random_gamma(&mut rng, 1, 1, 2, 2);
            let x0: Vec<Rat> = (0..g.n2).map(|_| rat_int(0)).collect();
            match geometry::vanishing_order_bound_check(&g, &x0) {
                Ok(holds) => {
                    assert!(holds);
                    done += 1;
                }
                Err(Error::Inconclusive(_)) => continue,
                Err(e) => panic!("{e}"),
            }
        }
    }

    #[test]
    fn multiindex_enumeration() {
        assert_eq!(multiindices(2, 2), vec![vec![2, 0], vec![1, 1], vec![0, 2]]);
        assert_eq!(alpha_tuples(1, 2, 1).len(), 2);
        assert_eq!(multiindex_factorial(&[3, 2]), rat_int(12));
    }
}
