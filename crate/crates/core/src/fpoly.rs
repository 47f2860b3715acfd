//! Sparse multivariate polynomials with f64 coefficients.
//!
//! The optimization layer needs polynomials whose coefficients mix exact data
//! with floating matrix entries (directional-derivative expansions, vector
//! fields combined with float weights). This is a deliberately small engine;
//! the exact ring lives in [`crate::poly`].

use std::collections::BTreeMap;

use num_traits::ToPrimitive;

use crate::poly::Polynomial;

/// Sparse f64 polynomial keyed by exponent vectors.
#[derive(Clone, Debug)]
pub struct FPoly {
    pub nvars: usize,
    pub terms: BTreeMap<Vec<u32>, f64>,
}

impl FPoly {
    pub fn zero(nvars: usize) -> Self {
        FPoly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, v: f64) -> Self {
        let mut p = FPoly::zero(nvars);
        if v != 0.0 {
            p.terms.insert(vec![0; nvars], v);
        }
        p
    }

    pub fn var(nvars: usize, index: usize) -> Self {
        let mut exps = vec![0; nvars];
        exps[index] = 1;
        let mut p = FPoly::zero(nvars);
        p.terms.insert(exps, 1.0);
        p
    }

    pub fn from_exact(p: &Polynomial) -> Self {
        let mut out = FPoly::zero(p.nvars());
        for (m, c) in p.terms() {
            out.terms
                .insert(m.0.clone(), c.to_f64().unwrap_or(f64::NAN));
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, exps: Vec<u32>, c: f64) {
        if c == 0.0 {
            return;
        }
        match self.terms.entry(exps) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if *e.get() == 0.0 {
                    e.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &FPoly) -> FPoly {
        assert_eq!(self.nvars, other.nvars);
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), *c);
        }
        out
    }

    pub fn scale(&self, s: f64) -> FPoly {
        if s == 0.0 {
            return FPoly::zero(self.nvars);
        }
        FPoly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * s)).collect(),
        }
    }

    pub fn mul(&self, other: &FPoly) -> FPoly {
        assert_eq!(self.nvars, other.nvars);
        let mut out = FPoly::zero(self.nvars);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let exps: Vec<u32> = ma.iter().zip(mb).map(|(a, b)| a + b).collect();
                out.add_term(exps, ca * cb);
            }
        }
        out
    }

    pub fn partial(&self, var: usize) -> FPoly {
        let mut out = FPoly::zero(self.nvars);
        for (m, c) in &self.terms {
            let e = m[var];
            if e == 0 {
                continue;
            }
            let mut exps = m.clone();
            exps[var] = e - 1;
            out.add_term(exps, c * e as f64);
        }
        out
    }

    pub fn eval(&self, point: &[f64]) -> f64 {
        assert_eq!(point.len(), self.nvars);
        let mut acc = 0.0;
        for (m, c) in &self.terms {
            let mut term = *c;
            for (i, &e) in m.iter().enumerate() {
                if e > 0 {
                    term *= point[i].powi(e as i32);
                }
            }
            acc += term;
        }
        acc
    }

    /// Partially evaluate: substitute `values[i]` for variable `vars.start+i`
    /// over a contiguous range, keeping the ambient variable count.
    pub fn eval_vars(&self, vars: std::ops::Range<usize>, values: &[f64]) -> FPoly {
        assert_eq!(vars.len(), values.len());
        let mut out = FPoly::zero(self.nvars);
        for (m, c) in &self.terms {
            let mut coeff = *c;
            let mut exps = m.clone();
            for (offset, &v) in values.iter().enumerate() {
                let var = vars.start + offset;
                let e = exps[var];
                if e > 0 {
                    coeff *= v.powi(e as i32);
                    exps[var] = 0;
                }
            }
            out.add_term(exps, coeff);
        }
        out
    }

    /// Largest absolute coefficient.
    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().map(|c| c.abs()).fold(0.0, f64::max)
    }

    /// Drop terms whose coefficient is below `rel_tol` times the largest one.
    pub fn prune(&self, rel_tol: f64) -> FPoly {
        let cutoff = self.max_abs_coeff() * rel_tol;
        FPoly {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .filter(|(_, c)| c.abs() > cutoff)
                .map(|(m, c)| (m.clone(), *c))
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic() {
        let x = FPoly::var(2, 0);
        let y = FPoly::var(2, 1);
        let p = x.add(&y.scale(-1.0)); // x - y
        let sq = p.mul(&p);
        assert_eq!(sq.eval(&[3.0, 1.0]), 4.0);
        let dx = sq.partial(0);
        assert_eq!(dx.eval(&[3.0, 1.0]), 4.0);
        let dxy = dx.partial(1);
        assert_eq!(dxy.eval(&[0.0, 0.0]), -2.0);
    }

    #[test]
    fn from_exact_roundtrip() {
        let p = crate::poly::parse_expression("x^2 - 1/2 y", &["x", "y"]).unwrap();
        let f = FPoly::from_exact(&p);
        assert!((f.eval(&[2.0, 2.0]) - 3.0).abs() < 1e-15);
    }
}
