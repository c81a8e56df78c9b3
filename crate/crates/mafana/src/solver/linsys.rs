//! Small solvers for the stepper: a factor-once tridiagonal (Thomas)
//! solver for wall chains and a dense LU with partial pivoting for the
//! reduced zone system and the airflow Newton updates.

/// Factorized tridiagonal system. The wall matrices are (weakly)
/// diagonally dominant, so no pivoting is needed.
pub struct Tridiag {
    /// Modified superdiagonal from the forward sweep.
    sup: Vec<f64>,
    /// Pivots `diag_i - sub_i * sup'_{i-1}`.
    denom: Vec<f64>,
    sub: Vec<f64>,
}

impl Tridiag {
    /// Factorizes the system given by `sub` (len n-1), `diag` (len n) and
    /// `sup` (len n-1).
    pub fn factor(sub: &[f64], diag: &[f64], sup: &[f64]) -> Result<Self, String> {
        let n = diag.len();
        assert!(n >= 1 && sub.len() == n - 1 && sup.len() == n - 1);
        let mut mod_sup = vec![0.0; n.saturating_sub(1)];
        let mut denom = vec![0.0; n];
        denom[0] = diag[0];
        if denom[0].abs() < 1e-300 {
            return Err("singular tridiagonal system at row 0".into());
        }
        if n > 1 {
            mod_sup[0] = sup[0] / denom[0];
        }
        for i in 1..n {
            denom[i] = diag[i] - sub[i - 1] * mod_sup[i - 1];
            if denom[i].abs() < 1e-300 {
                return Err(format!("singular tridiagonal system at row {i}"));
            }
            if i < n - 1 {
                mod_sup[i] = sup[i] / denom[i];
            }
        }
        Ok(Tridiag {
            sup: mod_sup,
            denom,
            sub: sub.to_vec(),
        })
    }

    /// Solves for one right-hand side.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.denom.len();
        let mut x = vec![0.0; n];
        x[0] = rhs[0] / self.denom[0];
        for i in 1..n {
            x[i] = (rhs[i] - self.sub[i - 1] * x[i - 1]) / self.denom[i];
        }
        for i in (0..n - 1).rev() {
            x[i] -= self.sup[i] * x[i + 1];
        }
        x
    }
}

/// Dense LU factorization with partial pivoting for small systems.
pub struct DenseLu {
    n: usize,
    lu: Vec<f64>,
    piv: Vec<usize>,
}

impl DenseLu {
    /// Factorizes a row-major `n x n` matrix.
    pub fn factor(mut a: Vec<f64>, n: usize) -> Result<Self, String> {
        assert_eq!(a.len(), n * n);
        let mut piv = vec![0usize; n];
        for k in 0..n {
            let mut p = k;
            let mut max = a[k * n + k].abs();
            for i in (k + 1)..n {
                let v = a[i * n + k].abs();
                if v > max {
                    max = v;
                    p = i;
                }
            }
            if max < 1e-300 {
                return Err(format!("singular dense system at column {k}"));
            }
            piv[k] = p;
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
            }
            let pivot = a[k * n + k];
            for i in (k + 1)..n {
                let m = a[i * n + k] / pivot;
                a[i * n + k] = m;
                for j in (k + 1)..n {
                    a[i * n + j] -= m * a[k * n + j];
                }
            }
        }
        Ok(DenseLu { n, lu: a, piv })
    }

    /// Solves in place.
    pub fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        for k in 0..n {
            b.swap(k, self.piv[k]);
            for i in (k + 1)..n {
                b[i] -= self.lu[i * n + k] * b[k];
            }
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in (i + 1)..n {
                s -= self.lu[i * n + j] * b[j];
            }
            b[i] = s / self.lu[i * n + i];
        }
    }
}
