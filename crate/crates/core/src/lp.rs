//! Exact linear programming over the rationals.
//!
//! A small dense two-phase simplex with Bland's rule, used for convex-hull
//! membership of integer exponent clouds and for separating-vector
//! certificates. Problem sizes here are tiny (tens of variables), so
//! exactness matters far more than speed.

use num_traits::{One, Signed, Zero};

use crate::poly::Rat;

/// Outcome of solving `maximize c·x subject to A x = b, x >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    /// Optimal solution and its objective value.
    Optimal {
        x: Vec<Rat>,
        objective: Rat,
    },
    Infeasible,
    Unbounded,
}

/// Standard-form LP: `maximize c·x  s.t.  A x = b, x >= 0`.
pub struct StandardLp {
    pub a: Vec<Vec<Rat>>,
    pub b: Vec<Rat>,
    pub c: Vec<Rat>,
}

impl StandardLp {
    pub fn solve(&self) -> LpOutcome {
        let m = self.a.len();
        let n = self.c.len();
        for row in &self.a {
            assert_eq!(row.len(), n, "ragged constraint matrix");
        }
        assert_eq!(self.b.len(), m);

        // normalize to b >= 0
        let mut a = self.a.clone();
        let mut b = self.b.clone();
        for i in 0..m {
            if b[i].is_negative() {
                b[i] = -b[i].clone();
                for j in 0..n {
                    a[i][j] = -a[i][j].clone();
                }
            }
        }

        // phase 1: artificial basis
        let total = n + m;
        let mut tableau: Vec<Vec<Rat>> = (0..m)
            .map(|i| {
                let mut row = Vec::with_capacity(total + 1);
                row.extend(a[i].iter().cloned());
                for k in 0..m {
                    row.push(if k == i { Rat::one() } else { Rat::zero() });
                }
                row.push(b[i].clone());
                row
            })
            .collect();
        let mut basis: Vec<usize> = (n..total).collect();

        // phase-1 objective: minimize sum of artificials = maximize -sum
        let mut phase1_cost: Vec<Rat> = vec![Rat::zero(); total];
        for item in phase1_cost.iter_mut().take(total).skip(n) {
            *item = -Rat::one();
        }
        if !simplex_iterate(&mut tableau, &mut basis, &phase1_cost) {
            // phase 1 of a feasibility problem is always bounded
            unreachable!("phase-1 simplex cannot be unbounded");
        }
        let phase1_value: Rat = basis
            .iter()
            .enumerate()
            .filter(|(_, &col)| col >= n)
            .map(|(row, _)| tableau[row][total].clone())
            .sum();
        if !phase1_value.is_zero() {
            return LpOutcome::Infeasible;
        }
        // drive remaining artificials out of the basis when possible
        for row in 0..m {
            if basis[row] >= n {
                if let Some(col) = (0..n).find(|&j| !tableau[row][j].is_zero()) {
                    pivot(&mut tableau, &mut basis, row, col);
                }
                // otherwise the row is all zeros over the original variables
                // and is redundant; the artificial stays basic at level zero
            }
        }

        // phase 2 over the original columns
        let mut cost: Vec<Rat> = self.c.clone();
        cost.extend(std::iter::repeat(Rat::zero()).take(m));
        // forbid re-entry of artificial columns by making them unattractive:
        // they are skipped inside simplex_iterate via the `limit` argument
        if !simplex_iterate_limited(&mut tableau, &mut basis, &cost, n) {
            return LpOutcome::Unbounded;
        }

        let mut x = vec![Rat::zero(); n];
        for (row, &col) in basis.iter().enumerate() {
            if col < n {
                x[col] = tableau[row][total].clone();
            }
        }
        let objective = self.c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
        LpOutcome::Optimal { x, objective }
    }
}

fn simplex_iterate(tableau: &mut Vec<Vec<Rat>>, basis: &mut [usize], cost: &[Rat]) -> bool {
    let ncols = cost.len();
    simplex_iterate_limited(tableau, basis, cost, ncols)
}

/// Simplex iterations restricted to entering columns `< limit`; returns
/// `false` when unbounded. Bland's rule guarantees termination.
fn simplex_iterate_limited(
    tableau: &mut [Vec<Rat>],
    basis: &mut [usize],
    cost: &[Rat],
    limit: usize,
) -> bool {
    let m = tableau.len();
    let total = cost.len();
    loop {
        // reduced costs: c_j - c_B . B^{-1} A_j
        let mut entering = None;
        for j in 0..limit {
            if basis.contains(&j) {
                continue;
            }
            let mut reduced = cost[j].clone();
            for (row, &bcol) in basis.iter().enumerate() {
                if !cost[bcol].is_zero() && !tableau[row][j].is_zero() {
                    reduced -= &cost[bcol] * &tableau[row][j];
                }
            }
            if reduced.is_positive() {
                entering = Some(j);
                break; // Bland: smallest index
            }
        }
        let entering = match entering {
            Some(j) => j,
            None => return true, // optimal
        };
        // ratio test with Bland's tie-break on basis index
        let mut leaving: Option<(usize, Rat)> = None;
        for row in 0..m {
            let coef = &tableau[row][entering];
            if coef.is_positive() {
                let ratio = &tableau[row][total] / coef;
                match &leaving {
                    None => leaving = Some((row, ratio)),
                    Some((lrow, lratio)) => {
                        if ratio < *lratio || (ratio == *lratio && basis[row] < basis[*lrow]) {
                            leaving = Some((row, ratio));
                        }
                    }
                }
            }
        }
        let (leave_row, _) = match leaving {
            Some(l) => l,
            None => return false, // unbounded
        };
        pivot(tableau, basis, leave_row, entering);
    }
}

fn pivot(tableau: &mut [Vec<Rat>], basis: &mut [usize], row: usize, col: usize) {
    let width = tableau[row].len();
    let pv = tableau[row][col].clone();
    for j in 0..width {
        tableau[row][j] = &tableau[row][j] / &pv;
    }
    for r in 0..tableau.len() {
        if r == row || tableau[r][col].is_zero() {
            continue;
        }
        let factor = tableau[r][col].clone();
        for j in 0..width {
            let delta = &factor * &tableau[row][j];
            tableau[r][j] = &tableau[r][j] - &delta;
        }
    }
    basis[row] = col;
}

/// Is `point` in the convex hull of `points`? Exact.
pub fn in_convex_hull(points: &[Vec<Rat>], point: &[Rat]) -> bool {
    if points.is_empty() {
        return false;
    }
    let dim = point.len();
    let npts = points.len();
    // sum_a theta_a * a = p, sum theta = 1, theta >= 0
    let mut a = Vec::with_capacity(dim + 1);
    for d in 0..dim {
        a.push(points.iter().map(|p| p[d].clone()).collect::<Vec<_>>());
    }
    a.push(vec![Rat::one(); npts]);
    let mut b: Vec<Rat> = point.to_vec();
    b.push(Rat::one());
    let lp = StandardLp {
        a,
        b,
        c: vec![Rat::zero(); npts],
    };
    matches!(lp.solve(), LpOutcome::Optimal { .. })
}

/// Largest `s` such that `point` can be written as a convex combination of
/// `points` with every weight at least `s`. Positive exactly when `point`
/// lies in the relative interior of the hull; `None` when not in the hull at
/// all. This is the robustness margin reported by the positivity criterion.
pub fn hull_membership_margin(points: &[Vec<Rat>], point: &[Rat]) -> Option<Rat> {
    if points.is_empty() {
        return None;
    }
    let dim = point.len();
    let npts = points.len();
    // theta_a = s + y_a with y >= 0, s >= 0:
    //   sum_a (s + y_a) a = p  ->  s * (sum_a a) + sum_a y_a a = p
    //   sum_a (s + y_a) = 1    ->  npts * s + sum y = 1
    // variables: y_1..y_npts, s; maximize s
    let nvar = npts + 1;
    let mut a = Vec::with_capacity(dim + 1);
    for d in 0..dim {
        let mut row: Vec<Rat> = points.iter().map(|p| p[d].clone()).collect();
        row.push(points.iter().map(|p| p[d].clone()).sum());
        a.push(row);
    }
    let mut last = vec![Rat::one(); npts];
    last.push(Rat::from_integer(num_bigint::BigInt::from(npts as i64)));
    a.push(last);
    let mut b: Vec<Rat> = point.to_vec();
    b.push(Rat::one());
    let mut c = vec![Rat::zero(); nvar];
    c[npts] = Rat::one();
    let lp = StandardLp { a, b, c };
    match lp.solve() {
        LpOutcome::Optimal { objective, .. } => Some(objective),
        LpOutcome::Infeasible => None,
        LpOutcome::Unbounded => unreachable!("margin LP is bounded by 1/npts"),
    }
}

/// Separating vector for a point outside the hull: `ell` with
/// `ell · (a - point) >= 1` for every listed `a`. `None` when the point is
/// inside (no separator exists).
pub fn separating_vector(points: &[Vec<Rat>], point: &[Rat]) -> Option<Vec<Rat>> {
    if points.is_empty() {
        return None;
    }
    let dim = point.len();
    let npts = points.len();
    // variables: ell = u - v (u, v >= 0), slacks s_a >= 0
    // constraints: (a - p) . (u - v) - s_a = 1
    let nvar = 2 * dim + npts;
    let mut a = Vec::with_capacity(npts);
    for (idx, p) in points.iter().enumerate() {
        let mut row = Vec::with_capacity(nvar);
        for d in 0..dim {
            row.push(&p[d] - &point[d]);
        }
        for d in 0..dim {
            row.push(-(&p[d] - &point[d]));
        }
        for k in 0..npts {
            row.push(if k == idx { -Rat::one() } else { Rat::zero() });
        }
        a.push(row);
    }
    let b = vec![Rat::one(); npts];
    let c = vec![Rat::zero(); nvar];
    let lp = StandardLp { a, b, c };
    match lp.solve() {
        LpOutcome::Optimal { x, .. } => {
            let ell: Vec<Rat> = (0..dim).map(|d| &x[d] - &x[dim + d]).collect();
            Some(ell)
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{rat, rat_int};

    fn pts(raw: &[&[i64]]) -> Vec<Vec<Rat>> {
        raw.iter()
            .map(|r| r.iter().map(|&v| rat_int(v)).collect())
            .collect()
    }

    #[test]
    fn membership_square() {
        let square = pts(&[&[0, 0], &[1, 0], &[0, 1], &[1, 1]]);
        assert!(in_convex_hull(&square, &[rat(1, 2), rat(1, 2)]));
        assert!(in_convex_hull(&square, &[rat_int(1), rat_int(1)]));
        assert!(!in_convex_hull(&square, &[rat_int(2), rat(1, 2)]));
    }

    #[test]
    fn margin_values() {
        let square = pts(&[&[0, 0], &[1, 0], &[0, 1], &[1, 1]]);
        let center = hull_membership_margin(&square, &[rat(1, 2), rat(1, 2)]).unwrap();
        assert_eq!(center, rat(1, 4));
        // a vertex is in the hull but not the relative interior
        let vertex = hull_membership_margin(&square, &[rat_int(0), rat_int(0)]).unwrap();
        assert_eq!(vertex, rat_int(0));
        assert!(hull_membership_margin(&square, &[rat_int(3), rat_int(0)]).is_none());
        // single point cloud containing the target
        let single = pts(&[&[2]]);
        let m = hull_membership_margin(&single, &[rat_int(2)]).unwrap();
        assert_eq!(m, rat_int(1));
    }

    #[test]
    fn segment_midpoint_margin() {
        let seg = pts(&[&[1, 0, 0, 1], &[0, 1, 1, 0]]);
        let mid = vec![rat(1, 2), rat(1, 2), rat(1, 2), rat(1, 2)];
        assert!(in_convex_hull(&seg, &mid));
        assert_eq!(hull_membership_margin(&seg, &mid).unwrap(), rat(1, 2));
    }

    #[test]
    fn separator_certificate() {
        let cloud = pts(&[&[2, 0]]);
        let target = vec![rat_int(1), rat_int(1)];
        assert!(!in_convex_hull(&cloud, &target));
        let ell = separating_vector(&cloud, &target).unwrap();
        // verify: ell . (a - p) >= 1
        for a in &cloud {
            let dot: Rat = ell
                .iter()
                .zip(a.iter().zip(&target))
                .map(|(l, (ai, pi))| l * &(ai - pi))
                .sum();
            assert!(dot >= rat_int(1));
        }
        // inside point has no separator
        assert!(separating_vector(&pts(&[&[0], &[2]]), &[rat_int(1)]).is_none());
    }
}
