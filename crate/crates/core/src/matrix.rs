//! Exact rational matrices and determinants of polynomial matrices.

use num_traits::{One, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::poly::{parse_rational, rat_int, Polynomial, Rat};

/// Dense matrix with exact rational entries. Serializes as rows of
/// `"num/den"` strings.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RatMat {
    rows: Vec<Vec<Rat>>,
}

impl Serialize for RatMat {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let repr: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(|v| v.to_string()).collect())
            .collect();
        repr.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for RatMat {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = Vec::<Vec<String>>::deserialize(deserializer)?;
        let rows: std::result::Result<Vec<Vec<Rat>>, _> = repr
            .iter()
            .map(|r| r.iter().map(|s| parse_rational(s)).collect())
            .collect();
        RatMat::new(rows.map_err(D::Error::custom)?).map_err(D::Error::custom)
    }
}

impl RatMat {
    pub fn new(rows: Vec<Vec<Rat>>) -> Result<Self> {
        let ncols = rows.first().map(|r| r.len()).unwrap_or(0);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::Validation("ragged matrix".into()));
        }
        Ok(RatMat { rows })
    }

    pub fn identity(n: usize) -> Self {
        let rows = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { Rat::one() } else { Rat::zero() })
                    .collect()
            })
            .collect();
        RatMat { rows }
    }

    pub fn from_i64(entries: &[&[i64]]) -> Self {
        RatMat {
            rows: entries
                .iter()
                .map(|r| r.iter().map(|&v| rat_int(v)).collect())
                .collect(),
        }
    }

    pub fn zero(nrows: usize, ncols: usize) -> Self {
        RatMat {
            rows: vec![vec![Rat::zero(); ncols]; nrows],
        }
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.rows.first().map(|r| r.len()).unwrap_or(0)
    }

    pub fn get(&self, i: usize, j: usize) -> &Rat {
        &self.rows[i][j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: Rat) {
        self.rows[i][j] = value;
    }

    pub fn mul(&self, other: &RatMat) -> Result<RatMat> {
        if self.ncols() != other.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} * {}x{}",
                self.nrows(),
                self.ncols(),
                other.nrows(),
                other.ncols()
            )));
        }
        let mut out = RatMat::zero(self.nrows(), other.ncols());
        for i in 0..self.nrows() {
            for j in 0..other.ncols() {
                let mut acc = Rat::zero();
                for k in 0..self.ncols() {
                    acc += &self.rows[i][k] * &other.rows[k][j];
                }
                out.rows[i][j] = acc;
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[Rat]) -> Result<Vec<Rat>> {
        if v.len() != self.ncols() {
            return Err(Error::PointLengthMismatch {
                expected: self.ncols(),
                got: v.len(),
            });
        }
        Ok(self
            .rows
            .iter()
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// Determinant by exact Gaussian elimination.
    pub fn det(&self) -> Result<Rat> {
        let n = self.nrows();
        if self.ncols() != n {
            return Err(Error::NonSquareMatrix {
                rows: self.nrows(),
                cols: self.ncols(),
            });
        }
        let mut m = self.rows.clone();
        let mut det = Rat::one();
        for col in 0..n {
            let pivot = (col..n).find(|&r| !m[r][col].is_zero());
            let pivot = match pivot {
                Some(p) => p,
                None => return Ok(Rat::zero()),
            };
            if pivot != col {
                m.swap(pivot, col);
                det = -det;
            }
            let pv = m[col][col].clone();
            det *= &pv;
            for r in col + 1..n {
                if m[r][col].is_zero() {
                    continue;
                }
                let factor = &m[r][col] / &pv;
                for c in col..n {
                    let delta = &factor * &m[col][c];
                    m[r][c] = &m[r][c] - &delta;
                }
            }
        }
        Ok(det)
    }

    /// Exact inverse by Gauss-Jordan elimination.
    pub fn inverse(&self) -> Result<RatMat> {
        let n = self.nrows();
        if self.ncols() != n {
            return Err(Error::NonSquareMatrix {
                rows: self.nrows(),
                cols: self.ncols(),
            });
        }
        let mut m = self.rows.clone();
        let mut inv = RatMat::identity(n).rows;
        for col in 0..n {
            let pivot = (col..n)
                .find(|&r| !m[r][col].is_zero())
                .ok_or(Error::SingularMatrix)?;
            m.swap(pivot, col);
            inv.swap(pivot, col);
            let pv = m[col][col].clone();
            for c in 0..n {
                m[col][c] = &m[col][c] / &pv;
                inv[col][c] = &inv[col][c] / &pv;
            }
            for r in 0..n {
                if r == col || m[r][col].is_zero() {
                    continue;
                }
                let factor = m[r][col].clone();
                for c in 0..n {
                    let dm = &factor * &m[col][c];
                    m[r][c] = &m[r][c] - &dm;
                    let di = &factor * &inv[col][c];
                    inv[r][c] = &inv[r][c] - &di;
                }
            }
        }
        Ok(RatMat { rows: inv })
    }

    pub fn to_f64(&self) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect())
            .collect()
    }

    /// Exact conversion from floats (each finite f64 is a rational).
    pub fn from_f64(entries: &[Vec<f64>]) -> Result<RatMat> {
        let rows: Option<Vec<Vec<Rat>>> = entries
            .iter()
            .map(|r| r.iter().map(|&v| Rat::from_float(v)).collect())
            .collect();
        match rows {
            Some(rows) => RatMat::new(rows),
            None => Err(Error::Validation("non-finite matrix entry".into())),
        }
    }
}

/// Square matrix of polynomials sharing one variable count.
pub struct PolyMat {
    entries: Vec<Vec<Polynomial>>,
    nvars: usize,
}

impl PolyMat {
    pub fn new(entries: Vec<Vec<Polynomial>>) -> Result<Self> {
        let n = entries.len();
        if entries.iter().any(|r| r.len() != n) {
            return Err(Error::NonSquareMatrix {
                rows: n,
                cols: entries.iter().map(|r| r.len()).max().unwrap_or(0),
            });
        }
        let nvars = entries
            .first()
            .and_then(|r| r.first())
            .map(|p| p.nvars())
            .unwrap_or(0);
        for row in &entries {
            for p in row {
                if p.nvars() != nvars {
                    return Err(Error::VarCountMismatch {
                        left: p.nvars(),
                        right: nvars,
                    });
                }
            }
        }
        Ok(PolyMat { entries, nvars })
    }

    pub fn size(&self) -> usize {
        self.entries.len()
    }
}

/// Exact determinant of a square polynomial matrix: cofactor expansion for
/// size at most 6, fraction-free Bareiss elimination above that.
pub fn det_poly_matrix(entries: &[Vec<Polynomial>]) -> Result<Polynomial> {
    let m = PolyMat::new(entries.to_vec())?;
    if m.size() == 0 {
        return Ok(Polynomial::one(m.nvars));
    }
    if m.size() <= 6 {
        Ok(det_cofactor(&m.entries))
    } else {
        det_bareiss(&m.entries, m.nvars)
    }
}

/// Cofactor expansion along the first row, skipping zero entries.
pub fn det_cofactor(entries: &[Vec<Polynomial>]) -> Polynomial {
    let n = entries.len();
    let nvars = entries[0][0].nvars();
    if n == 1 {
        return entries[0][0].clone();
    }
    let mut acc = Polynomial::zero(nvars);
    for (j, pivot) in entries[0].iter().enumerate() {
        if pivot.is_zero() {
            continue;
        }
        let minor: Vec<Vec<Polynomial>> = entries[1..]
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(c, _)| *c != j)
                    .map(|(_, p)| p.clone())
                    .collect()
            })
            .collect();
        let sub = det_cofactor(&minor);
        let term = pivot.checked_mul(&sub).unwrap();
        if j % 2 == 0 {
            acc = acc.checked_add(&term).unwrap();
        } else {
            acc = acc.checked_sub(&term).unwrap();
        }
    }
    acc
}

/// One-step fraction-free Bareiss elimination over the polynomial ring. All
/// divisions are exact; intermediate entries are minors of the input matrix.
/// Full pivoting on the sparsest nonzero entry keeps the minors small for
/// the block-structured matrices this crate produces.
pub fn det_bareiss(entries: &[Vec<Polynomial>], nvars: usize) -> Result<Polynomial> {
    let n = entries.len();
    let mut m: Vec<Vec<Polynomial>> = entries.to_vec();
    let mut sign_flip = false;
    let mut prev_pivot = Polynomial::one(nvars);
    for k in 0..n {
        // full pivot search: sparsest nonzero entry of the trailing block
        let mut pivot: Option<(usize, usize, usize)> = None;
        for r in k..n {
            for c in k..n {
                if m[r][c].is_zero() {
                    continue;
                }
                let weight = m[r][c].num_terms();
                match pivot {
                    None => pivot = Some((weight, r, c)),
                    Some((w, _, _)) if weight < w => pivot = Some((weight, r, c)),
                    _ => {}
                }
            }
        }
        let (_, pr, pc) = match pivot {
            Some(p) => p,
            None => return Ok(Polynomial::zero(nvars)),
        };
        if pr != k {
            m.swap(pr, k);
            sign_flip = !sign_flip;
        }
        if pc != k {
            for row in m.iter_mut() {
                row.swap(pc, k);
            }
            sign_flip = !sign_flip;
        }
        if k == n - 1 {
            break;
        }
        let pivot = m[k][k].clone();
        for r in k + 1..n {
            for c in k + 1..n {
                let num = &(&m[r][c] * &pivot) - &(&m[r][k] * &m[k][c]);
                m[r][c] = match num.exact_div(&prev_pivot) {
                    Some(q) => q,
                    None => {
                        return Err(Error::Validation(
                            "Bareiss division failed; ring arithmetic bug".into(),
                        ))
                    }
                };
            }
            m[r][k] = Polynomial::zero(nvars);
        }
        prev_pivot = pivot;
    }
    let mut det = m[n - 1][n - 1].clone();
    if sign_flip {
        det = det.neg();
    }
    Ok(det)
}
