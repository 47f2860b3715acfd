//! Small dense f64 matrix helpers for the optimization layer.

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct FMat {
    pub n: usize,
    pub m: usize,
    data: Vec<f64>,
}

impl FMat {
    pub fn zeros(n: usize, m: usize) -> Self {
        FMat {
            n,
            m,
            data: vec![0.0; n * m],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut out = FMat::zeros(n, n);
        for i in 0..n {
            out.set(i, i, 1.0);
        }
        out
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let m = rows.first().map(|r| r.len()).unwrap_or(0);
        let mut out = FMat::zeros(n, m);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), m, "ragged matrix");
            for (j, &v) in row.iter().enumerate() {
                out.set(i, j, v);
            }
        }
        out
    }

    pub fn diag(entries: &[f64]) -> Self {
        let n = entries.len();
        let mut out = FMat::zeros(n, n);
        for (i, &v) in entries.iter().enumerate() {
            out.set(i, i, v);
        }
        out
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.m + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.m + j] = v;
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.m).map(|j| self.get(i, j)).collect())
            .collect()
    }

    pub fn matmul(&self, other: &FMat) -> FMat {
        assert_eq!(self.m, other.n, "inner dimension mismatch");
        let mut out = FMat::zeros(self.n, other.m);
        for i in 0..self.n {
            for k in 0..self.m {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.m {
                    out.set(i, j, out.get(i, j) + a * other.get(k, j));
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.m, v.len());
        (0..self.n)
            .map(|i| (0..self.m).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    pub fn transpose(&self) -> FMat {
        let mut out = FMat::zeros(self.m, self.n);
        for i in 0..self.n {
            for j in 0..self.m {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> FMat {
        FMat {
            n: self.n,
            m: self.m,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &FMat) -> FMat {
        assert_eq!((self.n, self.m), (other.n, other.m));
        FMat {
            n: self.n,
            m: self.m,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    /// Determinant via LU with partial pivoting.
    pub fn det(&self) -> f64 {
        assert_eq!(self.n, self.m, "determinant needs a square matrix");
        let n = self.n;
        let mut a = self.clone();
        let mut det = 1.0;
        for col in 0..n {
            let mut pivot = col;
            let mut best = a.get(col, col).abs();
            for r in col + 1..n {
                let v = a.get(r, col).abs();
                if v > best {
                    best = v;
                    pivot = r;
                }
            }
            if best == 0.0 {
                return 0.0;
            }
            if pivot != col {
                for j in 0..n {
                    let tmp = a.get(col, j);
                    a.set(col, j, a.get(pivot, j));
                    a.set(pivot, j, tmp);
                }
                det = -det;
            }
            let pv = a.get(col, col);
            det *= pv;
            for r in col + 1..n {
                let f = a.get(r, col) / pv;
                if f == 0.0 {
                    continue;
                }
                for j in col..n {
                    a.set(r, j, a.get(r, j) - f * a.get(col, j));
                }
            }
        }
        det
    }

    /// Inverse via Gauss-Jordan with partial pivoting.
    pub fn inverse(&self) -> Option<FMat> {
        assert_eq!(self.n, self.m);
        let n = self.n;
        let mut a = self.clone();
        let mut inv = FMat::identity(n);
        for col in 0..n {
            let mut pivot = col;
            let mut best = a.get(col, col).abs();
            for r in col + 1..n {
                let v = a.get(r, col).abs();
                if v > best {
                    best = v;
                    pivot = r;
                }
            }
            if best < 1e-14 {
                return None;
            }
            for j in 0..n {
                let tmp = a.get(col, j);
                a.set(col, j, a.get(pivot, j));
                a.set(pivot, j, tmp);
                let tmp = inv.get(col, j);
                inv.set(col, j, inv.get(pivot, j));
                inv.set(pivot, j, tmp);
            }
            let pv = a.get(col, col);
            for j in 0..n {
                a.set(col, j, a.get(col, j) / pv);
                inv.set(col, j, inv.get(col, j) / pv);
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a.get(r, col);
                if f == 0.0 {
                    continue;
                }
                for j in 0..n {
                    a.set(r, j, a.get(r, j) - f * a.get(col, j));
                    inv.set(r, j, inv.get(r, j) - f * inv.get(col, j));
                }
            }
        }
        Some(inv)
    }

    /// Orthogonal factor of the QR decomposition by modified Gram-Schmidt,
    /// with column signs fixed so the map Gaussian -> Q samples the Haar
    /// measure on O(n).
    pub fn qr_orthogonal(&self) -> FMat {
        assert_eq!(self.n, self.m);
        let n = self.n;
        let mut cols: Vec<Vec<f64>> = (0..n)
            .map(|j| (0..n).map(|i| self.get(i, j)).collect())
            .collect();
        for j in 0..n {
            for k in 0..j {
                let dot: f64 = (0..n).map(|i| cols[j][i] * cols[k][i]).sum();
                for i in 0..n {
                    cols[j][i] -= dot * cols[k][i];
                }
            }
            let norm: f64 = (0..n).map(|i| cols[j][i] * cols[j][i]).sum::<f64>().sqrt();
            if norm < 1e-300 {
                // degenerate draw: replace with a unit vector and restart the
                // orthogonalization of this column
                cols[j] = (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect();
                for k in 0..j {
                    let dot: f64 = (0..n).map(|i| cols[j][i] * cols[k][i]).sum();
                    for i in 0..n {
                        cols[j][i] -= dot * cols[k][i];
                    }
                }
                let nn: f64 = (0..n).map(|i| cols[j][i] * cols[j][i]).sum::<f64>().sqrt();
                for i in 0..n {
                    cols[j][i] /= nn;
                }
                continue;
            }
            // Gram-Schmidt normalization leaves R with positive diagonal,
            // which is the convention making Q Haar-distributed
            for i in 0..n {
                cols[j][i] /= norm;
            }
        }
        let mut q = FMat::zeros(n, n);
        for j in 0..n {
            for i in 0..n {
                q.set(i, j, cols[j][i]);
            }
        }
        q
    }

    /// Matrix exponential by scaling and squaring with a truncated series.
    /// Intended for skew-symmetric inputs, where the result is orthogonal.
    pub fn expm(&self) -> FMat {
        assert_eq!(self.n, self.m);
        let n = self.n;
        let norm: f64 = self.data.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let mut squarings = 0u32;
        let mut scaled = self.clone();
        if norm > 0.5 {
            squarings = (norm / 0.5).log2().ceil() as u32;
            scaled = self.scale(1.0 / 2f64.powi(squarings as i32));
        }
        let mut result = FMat::identity(n);
        let mut term = FMat::identity(n);
        for k in 1..=16 {
            term = term.matmul(&scaled).scale(1.0 / k as f64);
            result = result.add(&term);
        }
        for _ in 0..squarings {
            result = result.matmul(&result);
        }
        result
    }
}

/// Skew-symmetric matrix from its strictly-upper-triangle parameters, read
/// row by row.
pub fn skew_from_params(n: usize, params: &[f64]) -> FMat {
    assert_eq!(params.len(), n * (n - 1) / 2);
    let mut s = FMat::zeros(n, n);
    let mut idx = 0;
    for i in 0..n {
        for j in i + 1..n {
            s.set(i, j, params[idx]);
            s.set(j, i, -params[idx]);
            idx += 1;
        }
    }
    s
}
