//! Construction of the form ω(t,x) and the functional Φ_x from a polynomial
//! family γ, by two independent routes: the signed wedge-product expansion
//! and the block Jacobian determinant. Their exact symbolic equality is the
//! module's central invariant.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::det_poly_matrix;
use crate::poly::{PolyVector, Polynomial, Rat};

/// Polynomial family `γ : ℝⁿ × ℝ^{N₂} → ℝ^{N₁}` with variables ordered
/// `(t_1..t_n, x_1..x_{N2})`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GammaSpec {
    pub n: usize,
    #[serde(rename = "N1")]
    pub n1: usize,
    #[serde(rename = "N2")]
    pub n2: usize,
    pub components: PolyVector,
}

impl GammaSpec {
    pub fn new(n: usize, n1: usize, n2: usize, components: PolyVector) -> Result<Self> {
        let spec = GammaSpec {
            n,
            n1,
            n2,
            components,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let r = self.r();
        if self.n1 <= self.n {
            return Err(Error::Validation(format!(
                "need N1 > n, got N1 = {}, n = {}",
                self.n1, self.n
            )));
        }
        if self.n2 == 0 || self.n2 % r != 0 {
            return Err(Error::Validation(format!(
                "N2 = {} must be a positive multiple of r = {}",
                self.n2, r
            )));
        }
        if self.components.len() != self.n1 {
            return Err(Error::Validation(format!(
                "expected {} components, got {}",
                self.n1,
                self.components.len()
            )));
        }
        if self.components.nvars() != self.n + self.n2 {
            return Err(Error::VarCountMismatch {
                left: self.components.nvars(),
                right: self.n + self.n2,
            });
        }
        Ok(())
    }

    /// Codimension `r = N1 - n`.
    pub fn r(&self) -> usize {
        self.n1 - self.n
    }

    /// Arity `k = N2 / r`.
    pub fn k(&self) -> usize {
        self.n2 / self.r()
    }

    /// Bezout-type bound on the number of isolated solutions of
    /// `(γ(t_1,x),..,γ(t_k,x)) = (u_1,..,u_k)`: the product of the degrees of
    /// all k·N1 component equations. Documented constant only, never computed
    /// by elimination.
    pub fn bezout_bound(&self) -> num_bigint::BigInt {
        let mut bound = num_bigint::BigInt::from(1);
        for _ in 0..self.k() {
            for comp in self.components.components() {
                let d = comp.degree().unwrap_or(0).max(1);
                bound *= num_bigint::BigInt::from(d);
            }
        }
        bound
    }
}

/// An r-form on ℝ^{N₂} with polynomial coefficients in `(t, x)`, stored per
/// strictly increasing index tuple.
#[derive(Clone, Debug)]
pub struct RForm {
    pub r: usize,
    pub n2: usize,
    /// Map from increasing r-subsets of {0..N2-1} to their coefficient.
    pub coefficients: BTreeMap<Vec<usize>, Polynomial>,
}

impl RForm {
    pub fn is_zero(&self) -> bool {
        self.coefficients.values().all(|p| p.is_zero())
    }

    /// Coefficient for an increasing index tuple, zero when absent.
    pub fn coeff(&self, idx: &[usize], nvars: usize) -> Polynomial {
        self.coefficients
            .get(idx)
            .cloned()
            .unwrap_or_else(|| Polynomial::zero(nvars))
    }
}

/// A polynomial map `Φ : (ℝⁿ)^k → ℝ^m`, possibly carrying frozen parameter
/// variables (the `x` of `Φ_x`). Body variables are ordered as the k point
/// blocks of size n followed by the parameter block.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PhiSpec {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub params: usize,
    pub body: PolyVector,
}

impl PhiSpec {
    pub fn new(n: usize, k: usize, m: usize, params: usize, body: PolyVector) -> Result<Self> {
        let spec = PhiSpec {
            n,
            k,
            m,
            params,
            body,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.body.len() != self.m {
            return Err(Error::Validation(format!(
                "expected {} components, got {}",
                self.m,
                self.body.len()
            )));
        }
        if self.body.nvars() != self.k * self.n + self.params {
            return Err(Error::VarCountMismatch {
                left: self.body.nvars(),
                right: self.k * self.n + self.params,
            });
        }
        Ok(())
    }

    pub fn nvars(&self) -> usize {
        self.k * self.n + self.params
    }

    /// First variable index of point block `j`.
    pub fn block_start(&self, j: usize) -> usize {
        j * self.n
    }

    /// Substitute rational values for the parameter block, producing a
    /// parameter-free spec.
    pub fn freeze_params(&self, values: &[Rat]) -> Result<PhiSpec> {
        if values.len() != self.params {
            return Err(Error::PointLengthMismatch {
                expected: self.params,
                got: values.len(),
            });
        }
        let base = self.k * self.n;
        let assigns: Vec<(usize, Rat)> = values
            .iter()
            .enumerate()
            .map(|(i, v)| (base + i, v.clone()))
            .collect();
        let body = self.body.map(|p| {
            p.substitute_values(&assigns)
                .and_then(|q| q.truncate_vars(base))
        })?;
        PhiSpec::new(self.n, self.k, self.m, 0, body)
    }

    /// Evaluate `|Φ|` has no meaning here; this returns the raw component
    /// values at a concatenated point (k blocks then parameters).
    pub fn eval_f64(&self, point: &[f64]) -> Result<Vec<f64>> {
        self.body.eval_f64(point)
    }

    pub fn degree(&self) -> Option<u32> {
        self.body.max_degree()
    }
}

/// Builds the r-form of the family: for each increasing r-tuple
/// `i_1 < .. < i_r`, the coefficient is the exact determinant of the
/// `N1 x N1` matrix `[∂γ/∂x_{i_1} .. ∂γ/∂x_{i_r}  ∂γ/∂t]`.
pub fn build_omega(gamma: &GammaSpec) -> Result<RForm> {
    gamma.validate()?;
    let n = gamma.n;
    let n1 = gamma.n1;
    let n2 = gamma.n2;
    let r = gamma.r();

    // precompute all partials: x-columns and t-columns
    let dx: Vec<Vec<Polynomial>> = (0..n2)
        .map(|i| {
            gamma
                .components
                .components()
                .iter()
                .map(|g| g.partial(n + i))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let dt: Vec<Vec<Polynomial>> = (0..n)
        .map(|j| {
            gamma
                .components
                .components()
                .iter()
                .map(|g| g.partial(j))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut coefficients = BTreeMap::new();
    for idx in increasing_tuples(n2, r) {
        // rows are γ components, columns are the selected x-partials then the
        // t-Jacobian
        let entries: Vec<Vec<Polynomial>> = (0..n1)
            .map(|row| {
                let mut cols = Vec::with_capacity(n1);
                for &i in &idx {
                    cols.push(dx[i][row].clone());
                }
                for j in 0..n {
                    cols.push(dt[j][row].clone());
                }
                cols
            })
            .collect();
        let det = det_poly_matrix(&entries)?;
        if !det.is_zero() {
            coefficients.insert(idx, det);
        }
    }
    Ok(RForm {
        r,
        n2,
        coefficients,
    })
}

/// All strictly increasing `r`-tuples from `{0..n2-1}`.
pub fn increasing_tuples(n2: usize, r: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(r);
    fn rec(start: usize, n2: usize, r: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == r {
            out.push(current.clone());
            return;
        }
        for i in start..n2 {
            current.push(i);
            rec(i + 1, n2, r, current, out);
            current.pop();
        }
    }
    rec(0, n2, r, &mut current, &mut out);
    out
}

/// Sign of the permutation sending `(0,1,..,len-1)` to the concatenated
/// sequence, computed by inversion counting. The sequence must be a
/// permutation of `0..len`.
fn permutation_sign(seq: &[usize]) -> i64 {
    let mut inversions = 0usize;
    for i in 0..seq.len() {
        for j in i + 1..seq.len() {
            if seq[i] > seq[j] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Variable layout of a Φ body built from a GammaSpec: k blocks of t
/// variables (size n each) followed by the N2 parameter variables.
fn gamma_var_map(gamma: &GammaSpec, block: usize) -> Vec<usize> {
    let n = gamma.n;
    let k = gamma.k();
    let mut map = Vec::with_capacity(n + gamma.n2);
    for i in 0..n {
        map.push(block * n + i);
    }
    for i in 0..gamma.n2 {
        map.push(k * n + i);
    }
    map
}

/// Φ via the wedge formula: the k-fold wedge `ω(t_1,x) ∧ .. ∧ ω(t_k,x)`
/// divided by `dx_1 ∧ .. ∧ dx_{N2}`, expanded as a signed sum over ordered
/// partitions of `{1..N2}` into increasing r-tuples. The global factor
/// `(-1)^{n r k(k-1)/2}` aligns the result with the Jacobian-determinant
/// sign convention of [`build_phi_jacobian`].
pub fn build_phi_wedge(gamma: &GammaSpec) -> Result<PhiSpec> {
    let omega = build_omega(gamma)?;
    let n = gamma.n;
    let r = gamma.r();
    let k = gamma.k();
    let n2 = gamma.n2;
    let out_nvars = k * n + n2;

    // remap each ω coefficient into every t-block
    let mut per_block: Vec<BTreeMap<Vec<usize>, Polynomial>> = Vec::with_capacity(k);
    for j in 0..k {
        let map = gamma_var_map(gamma, j);
        let mut coeffs = BTreeMap::new();
        for (idx, c) in &omega.coefficients {
            coeffs.insert(idx.clone(), c.remap(out_nvars, &map)?);
        }
        per_block.push(coeffs);
    }

    let mut acc = Polynomial::zero(out_nvars);
    let tuples: Vec<Vec<usize>> = per_block[0].keys().cloned().collect();
    // choose one increasing tuple per block, pairwise disjoint and covering
    let mut chosen: Vec<&Vec<usize>> = Vec::with_capacity(k);
    fn assemble<'a>(
        block: usize,
        k: usize,
        n2: usize,
        tuples: &'a [Vec<usize>],
        per_block: &[BTreeMap<Vec<usize>, Polynomial>],
        chosen: &mut Vec<&'a Vec<usize>>,
        used: &mut Vec<bool>,
        acc: &mut Polynomial,
        out_nvars: usize,
    ) {
        if block == k {
            let concat: Vec<usize> = chosen.iter().flat_map(|t| t.iter().copied()).collect();
            let sign = permutation_sign(&concat);
            let mut term = Polynomial::constant(out_nvars, crate::poly::rat_int(sign));
            for (j, idx) in chosen.iter().enumerate() {
                term = term
                    .checked_mul(per_block[j].get(*idx).expect("tuple present"))
                    .unwrap();
            }
            *acc = acc.checked_add(&term).unwrap();
            return;
        }
        for t in tuples {
            if t.iter().any(|&i| used[i]) {
                continue;
            }
            if per_block[block].get(t).map(|p| p.is_zero()).unwrap_or(true) {
                continue;
            }
            for &i in t {
                used[i] = true;
            }
            chosen.push(t);
            assemble(
                block + 1,
                k,
                n2,
                tuples,
                per_block,
                chosen,
                used,
                acc,
                out_nvars,
            );
            chosen.pop();
            for &i in t {
                used[i] = false;
            }
        }
    }
    let mut used = vec![false; n2];
    if !tuples.is_empty() {
        assemble(
            0,
            k,
            n2,
            &tuples,
            &per_block,
            &mut chosen,
            &mut used,
            &mut acc,
            out_nvars,
        );
    }

    // sign normalization to the Jacobian route: interleaving the k blocks of
    // t-differentials past the x-differentials contributes
    // (-1)^{n r k(k-1)/2}
    if (n * r * (k * (k - 1) / 2)) % 2 == 1 {
        acc = acc.neg();
    }

    PhiSpec::new(n, k, 1, n2, PolyVector::new(vec![acc])?)
}

/// Φ as the exact determinant of the `(N2+nk) x (N2+nk)` Jacobian of the map
/// `(x, t_1,..,t_k) ↦ (γ(t_1,x),..,γ(t_k,x))`, rows ordered by block then
/// component, columns ordered `x` first and then the k t-blocks.
pub fn build_phi_jacobian(gamma: &GammaSpec) -> Result<PhiSpec> {
    gamma.validate()?;
    let n = gamma.n;
    let n1 = gamma.n1;
    let n2 = gamma.n2;
    let k = gamma.k();
    let size = n2 + n * k;
    let out_nvars = k * n + n2;

    let mut entries = vec![vec![Polynomial::zero(out_nvars); size]; size];
    for j in 0..k {
        let map = gamma_var_map(gamma, j);
        for (comp_idx, comp) in gamma.components.components().iter().enumerate() {
            let row = j * n1 + comp_idx;
            // x-columns
            for i in 0..n2 {
                let d = comp.partial(n + i)?;
                if !d.is_zero() {
                    entries[row][i] = d.remap(out_nvars, &map)?;
                }
            }
            // t-columns of block j
            for i in 0..n {
                let d = comp.partial(i)?;
                if !d.is_zero() {
                    entries[row][n2 + j * n + i] = d.remap(out_nvars, &map)?;
                }
            }
        }
    }
    let det = det_poly_matrix(&entries)?;
    PhiSpec::new(n, k, 1, n2, PolyVector::new(vec![det])?)
}

/// Φ for a graph family `γ(t,x) = (t, γ₀(t,x))`, via the `rk x rk`
/// determinant of the horizontally stacked transposed x-Jacobians of γ₀.
/// The sign `(-1)^{n r k(k+1)/2}` matches the Jacobian convention on the
/// lifted family.
pub fn build_phi_graph(gamma0: &PolyVector, n: usize, r: usize, k: usize) -> Result<PhiSpec> {
    let n2 = r * k;
    if gamma0.len() != r {
        return Err(Error::DimensionMismatch(format!(
            "gamma0 must have r = {} components, got {}",
            r,
            gamma0.len()
        )));
    }
    if gamma0.nvars() != n + n2 {
        return Err(Error::VarCountMismatch {
            left: gamma0.nvars(),
            right: n + n2,
        });
    }
    let out_nvars = k * n + n2;
    // entries[row][col]: row in 0..rk indexes the x-variable, col block j of
    // width r holds [∂γ₀/∂x(t_j, x)]ᵀ
    let mut entries = vec![vec![Polynomial::zero(out_nvars); n2]; n2];
    for j in 0..k {
        let mut map = Vec::with_capacity(n + n2);
        for i in 0..n {
            map.push(j * n + i);
        }
        for i in 0..n2 {
            map.push(k * n + i);
        }
        for comp_idx in 0..r {
            for xvar in 0..n2 {
                let d = gamma0.component(comp_idx).partial(n + xvar)?;
                if !d.is_zero() {
                    entries[xvar][j * r + comp_idx] = d.remap(out_nvars, &map)?;
                }
            }
        }
    }
    let mut det = det_poly_matrix(&entries)?;
    if (n * r * (k * (k + 1) / 2)) % 2 == 1 {
        det = det.neg();
    }
    PhiSpec::new(n, k, 1, n2, PolyVector::new(vec![det])?)
}

/// Lift `γ₀` to the full family `γ(t,x) = (t, γ₀(t,x))`.
pub fn lift_graph(gamma0: &PolyVector, n: usize, r: usize, k: usize) -> Result<GammaSpec> {
    let n2 = r * k;
    let nvars = n + n2;
    let mut comps: Vec<Polynomial> = (0..n).map(|i| Polynomial::var(nvars, i)).collect();
    comps.extend(gamma0.components().iter().cloned());
    GammaSpec::new(n, n + r, n2, PolyVector::new(comps)?)
}

/// Checks the order-of-vanishing lower bound `q >= r(k-1)` for `Φ_x` at a
/// frozen parameter point. Errors with [`Error::Inconclusive`] when ω is
/// identically zero at that point, since the bound's hypothesis fails there.
pub fn vanishing_order_bound_check(gamma: &GammaSpec, sample_x: &[Rat]) -> Result<bool> {
    let omega = build_omega(gamma)?;
    let n = gamma.n;
    let assigns: Vec<(usize, Rat)> = sample_x
        .iter()
        .enumerate()
        .map(|(i, v)| (n + i, v.clone()))
        .collect();
    let mut all_zero = true;
    for c in omega.coefficients.values() {
        if !c.substitute_values(&assigns)?.is_zero() {
            all_zero = false;
            break;
        }
    }
    if all_zero {
        return Err(Error::Inconclusive(
            "omega vanishes identically at the sample point".into(),
        ));
    }
    let phi = build_phi_jacobian(gamma)?;
    let frozen = phi.freeze_params(sample_x)?;
    let expansion = crate::diagonal::order_of_vanishing(&frozen)?;
    if expansion.identically_zero {
        // infinite order of vanishing; the bound holds vacuously
        return Ok(true);
    }
    let bound = gamma.r() * (gamma.k() - 1);
    Ok(expansion.q as usize >= bound)
}

/// Random GammaSpec with the given shape parameters; test support.
#[cfg(test)]
pub(crate) fn random_gamma(
    rng: &mut rand_chacha::ChaCha8Rng,
    n: usize,
    r: usize,
    k: usize,
    max_deg: u32,
) -> GammaSpec {
    let n1 = n + r;
    let n2 = r * k;
    let nvars = n + n2;
    let comps: Vec<Polynomial> = (0..n1)
        .map(|_| crate::poly::testutil::random_poly(rng, nvars, max_deg, 4))
        .collect();
    GammaSpec::new(n, n1, n2, PolyVector::new(comps).unwrap()).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::testutil;
    use crate::poly::{parse_expression, rat_int};

    /// γ(t,(x1,x2)) = (t, x1 + t·x2): n = 1, N1 = 2, N2 = 2 (r = 1, k = 2).
    pub(crate) fn line_family() -> GammaSpec {
        let vars = ["t", "x1", "x2"];
        let c0 = parse_expression("t", &vars).unwrap();
        let c1 = parse_expression("x1 + t*x2", &vars).unwrap();
        GammaSpec::new(1, 2, 2, PolyVector::new(vec![c0, c1]).unwrap()).unwrap()
    }

    #[test]
    fn omega_of_line_family() {
        // hand determinants: det[[0,1],[1,x2]] = -1, det[[0,1],[t,x2]] = -t
        let omega = build_omega(&line_family()).unwrap();
        let vars = ["t", "x1", "x2"];
        assert_eq!(
            omega.coefficients.get(&vec![0usize]).unwrap(),
            &parse_expression("-1", &vars).unwrap()
        );
        assert_eq!(
            omega.coefficients.get(&vec![1usize]).unwrap(),
            &parse_expression("-t", &vars).unwrap()
        );
    }

    #[test]
    fn omega_zero_when_gamma_ignores_x() {
        let vars = ["t", "x1", "x2"];
        let c0 = parse_expression("t", &vars).unwrap();
        let c1 = parse_expression("t^2", &vars).unwrap();
        let g = GammaSpec::new(1, 2, 2, PolyVector::new(vec![c0, c1]).unwrap()).unwrap();
        assert!(build_omega(&g).unwrap().is_zero());
        let phi = build_phi_wedge(&g).unwrap();
        assert!(phi.body.component(0).is_zero());
    }

    #[test]
    fn wedge_phi_of_line_family() {
        // Φ_x(t1,t2) = ±(t2 − t1); the Jacobian convention fixes t1 − t2
        let phi = build_phi_wedge(&line_family()).unwrap();
        let body_vars = ["t1", "t2", "x1", "x2"];
        let expect = parse_expression("t1 - t2", &body_vars).unwrap();
        assert_eq!(phi.body.component(0), &expect);
    }

    #[test]
    fn jacobian_phi_matches_wedge_on_line_family() {
        let by_wedge = build_phi_wedge(&line_family()).unwrap();
        let by_jacobian = build_phi_jacobian(&line_family()).unwrap();
        assert_eq!(by_wedge.body, by_jacobian.body);
    }

    #[test]
    fn unit_jacobian_k1() {
        // γ(t,x) = (t, x1), n = 1, r = 1, k = 1: Φ is a constant ±1
        let vars = ["t", "x1"];
        let c0 = parse_expression("t", &vars).unwrap();
        let c1 = parse_expression("x1", &vars).unwrap();
        let g = GammaSpec::new(1, 2, 1, PolyVector::new(vec![c0, c1]).unwrap()).unwrap();
        let phi = build_phi_wedge(&g).unwrap();
        let body = phi.body.component(0);
        assert_eq!(body.degree(), Some(0));
        let value = body.coeff(&crate::poly::Monomial::constant(body.nvars()));
        assert!(value == rat_int(1) || value == rat_int(-1));
        assert_eq!(build_phi_jacobian(&g).unwrap().body, phi.body);
    }

    #[test]
    fn jacob_identity_randomized() {
        // Eq-level identity between the two routes, exact as polynomials
        let mut rng = testutil::rng(101);
        let shapes = [(1, 1, 2), (1, 1, 3), (2, 1, 2), (1, 2, 2), (2, 2, 2)];
        for &(n, r, k) in &shapes {
            for _ in 0..3 {
                let g = random_gamma(&mut rng, n, r, k, 2);
                let w = build_phi_wedge(&g).unwrap();
                let j = build_phi_jacobian(&g).unwrap();
                assert_eq!(
                    w.body, j.body,
                    "wedge/jacobian mismatch for shape (n,r,k)=({n},{r},{k})"
                );
            }
        }
    }

    #[test]
    fn graph_route_matches_lifted_family() {
        // γ₀(t,(x1,x2)) = x1 + t x2 lifts to the line family
        let vars = ["t", "x1", "x2"];
        let gamma0 = PolyVector::new(vec![parse_expression("x1 + t*x2", &vars).unwrap()]).unwrap();
        let by_graph = build_phi_graph(&gamma0, 1, 1, 2).unwrap();
        let by_wedge = build_phi_wedge(&line_family()).unwrap();
        assert_eq!(by_graph.body, by_wedge.body);

        // randomized: graph route equals wedge route on the lifted family
        let mut rng = testutil::rng(137);
        for _ in 0..10 {
            let (n, r, k) = (1, 1, 2);
            let nvars = n + r * k;
            let comps: Vec<Polynomial> = (0..r)
                .map(|_| testutil::random_poly(&mut rng, nvars, 2, 4))
                .collect();
            let gamma0 = PolyVector::new(comps).unwrap();
            let lifted = lift_graph(&gamma0, n, r, k).unwrap();
            let a = build_phi_graph(&gamma0, n, r, k).unwrap();
            let b = build_phi_wedge(&lifted).unwrap();
            assert_eq!(a.body, b.body);
        }
    }

    #[test]
    fn graph_route_zero_when_x_absent() {
        let vars = ["t", "x1", "x2"];
        let gamma0 = PolyVector::new(vec![parse_expression("t^3", &vars).unwrap()]).unwrap();
        let phi = build_phi_graph(&gamma0, 1, 1, 2).unwrap();
        assert!(phi.body.component(0).is_zero());
    }

    #[test]
    fn rank_deficient_family_gives_zero_phi() {
        // two identical x-columns force every omega determinant to vanish
        let vars = ["t", "x1", "x2", "x3", "x4"];
        let c0 = parse_expression("t", &vars).unwrap();
        let c1 = parse_expression("x1 + x2 + t*(x3 + x4)", &vars).unwrap();
        let c2 = parse_expression("x1 + x2 + t*(x3 + x4)", &vars).unwrap();
        // n=1, N1=3, r=2, N2=4, k=2; ∂γ/∂x has rank 1 < r everywhere
        let g = GammaSpec::new(1, 3, 4, PolyVector::new(vec![c0, c1, c2]).unwrap()).unwrap();
        let w = build_phi_wedge(&g).unwrap();
        let j = build_phi_jacobian(&g).unwrap();
        assert!(w.body.component(0).is_zero());
        assert!(j.body.component(0).is_zero());
    }

    #[test]
    fn abs_phi_invariant_under_block_exchange() {
        let mut rng = testutil::rng(211);
        for _ in 0..5 {
            let g = random_gamma(&mut rng, 1, 1, 3, 2);
            let phi = build_phi_jacobian(&g).unwrap();
            let body = phi.body.component(0);
            // evaluate at a random point and at the same point with two
            // t-blocks swapped
            let mut point: Vec<f64> = (0..body.nvars())
                .map(|_| rand::Rng::gen_range(&mut rng, -1.0..1.0))
                .collect();
            let v1 = body.eval_f64(&point).unwrap();
            point.swap(0, 1); // swap t-block 0 and t-block 1 (n = 1)
            let v2 = body.eval_f64(&point).unwrap();
            assert!(
                (v1.abs() - v2.abs()).abs() <= 1e-9 * (1.0 + v1.abs()),
                "|Φ| changed under block exchange: {v1} vs {v2}"
            );
        }
    }

    #[test]
    fn order_bound_check_on_line_family() {
        let ok = vanishing_order_bound_check(&line_family(), &[rat_int(0), rat_int(1)]).unwrap();
        assert!(ok, "q = 1 >= r(k-1) = 1 for the line family");
    }

    #[test]
    fn order_bound_inconclusive_when_omega_vanishes() {
        let vars = ["t", "x1", "x2"];
        let c0 = parse_expression("t", &vars).unwrap();
        let c1 = parse_expression("t^2", &vars).unwrap();
        let g = GammaSpec::new(1, 2, 2, PolyVector::new(vec![c0, c1]).unwrap()).unwrap();
        let err = vanishing_order_bound_check(&g, &[rat_int(0), rat_int(0)]);
        assert!(matches!(err, Err(Error::Inconclusive(_))));
    }

    #[test]
    fn order_bound_randomized() {
        let mut rng = testutil::rng(307);
        let mut done = 0;
        while done < 10 {
            let n = 1 + (done % 2);
            let r = 1 + (done / 5);
            let g = random_gamma(&mut rng, n, r, 2, 2);
            let x0: Vec<Rat> = (0..g.n2).map(|_| rat_int(0)).collect();
            match vanishing_order_bound_check(&g, &x0) {
                Ok(holds) => {
                    assert!(holds, "order bound q >= r(k-1) must hold");
                    done += 1;
                }
                Err(Error::Inconclusive(_)) => continue,
                Err(e) => panic!("unexpected error {e}"),
            }
        }
    }

    #[test]
    fn bezout_bound_is_degree_product() {
        let g = line_family();
        // degrees (1, 2), k = 2: bound = (1·2)^2 = 4
        assert_eq!(g.bezout_bound(), num_bigint::BigInt::from(4));
    }

    #[test]
    fn gamma_validation() {
        let vars = ["t", "x1", "x2"];
        let c0 = parse_expression("t", &vars).unwrap();
        let pv = PolyVector::new(vec![c0]).unwrap();
        assert!(GammaSpec::new(1, 2, 2, pv).is_err()); // wrong component count
    }
}
