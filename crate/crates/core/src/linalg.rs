//! Hermitian factor-and-solve with operation counting.
//!
//! Small dense `LDL^H` without pivoting. The counters record complex
//! multiplications and real divisions so that solver cost can be compared
//! against the analytic complexity model.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest diagonal-pivot ratio accepted before regularizing.
pub const CONDITION_LIMIT: f64 = 1e14;
/// Diagonal loading, relative to `trace / M`, applied on regularization.
pub const REGULARIZATION: f64 = 1e-12;

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct OpCount {
    pub multiplications: u64,
    pub divisions: u64,
}

impl std::ops::Add for OpCount {
    type Output = OpCount;
    fn add(self, rhs: Self) -> Self {
        OpCount {
            multiplications: self.multiplications + rhs.multiplications,
            divisions: self.divisions + rhs.divisions,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Ldl {
    l: DMatrix<Complex64>,
    d: Vec<f64>,
    inv_d: Vec<f64>,
    regularized: bool,
}

impl Ldl {
    /// Factor a Hermitian matrix (only the lower triangle is read).
    pub fn factor(a: &DMatrix<Complex64>, ops: &mut OpCount) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Dimension(format!(
                "LDL of a {}x{} matrix",
                n,
                a.ncols()
            )));
        }
        let mut l = DMatrix::<Complex64>::identity(n, n);
        let mut d = vec![0.0; n];
        let mut inv_d = vec![0.0; n];
        // w[k] = conj(L[j,k]) * D[k] for the current column j
        let mut w = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            let mut djj = a[(j, j)].re;
            for k in 0..j {
                w[k] = l[(j, k)].conj() * d[k];
                djj -= (l[(j, k)] * w[k]).re;
            }
            ops.multiplications += 2 * j as u64;
            if !(djj > 0.0) || !djj.is_finite() {
                return Err(Error::Singular {
                    op: "ldl",
                    detail: format!("pivot {j} is {djj:e}"),
                });
            }
            d[j] = djj;
            inv_d[j] = 1.0 / djj;
            ops.divisions += 1;
            for i in j + 1..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * w[k];
                }
                l[(i, j)] = s * inv_d[j];
                ops.multiplications += j as u64 + 1;
            }
        }
        Ok(Self {
            l,
            d,
            inv_d,
            regularized: false,
        })
    }

    /// Factor, loading the diagonal once if the matrix is indefinite or
    /// its pivot ratio exceeds [`CONDITION_LIMIT`].
    pub fn factor_regularized(a: &DMatrix<Complex64>, ops: &mut OpCount) -> Result<Self> {
        match Self::factor(a, ops) {
            Ok(f) if f.pivot_ratio() <= CONDITION_LIMIT => Ok(f),
            _ => {
                let n = a.nrows();
                let trace: f64 = (0..n).map(|i| a[(i, i)].re).sum();
                let load = REGULARIZATION * trace / n as f64;
                if !(load > 0.0) {
                    return Err(Error::Singular {
                        op: "ldl",
                        detail: format!("nonpositive trace {trace:e}"),
                    });
                }
                let mut b = a.clone();
                for i in 0..n {
                    b[(i, i)] += load;
                }
                let mut f = Self::factor(&b, ops)?;
                f.regularized = true;
                Ok(f)
            }
        }
    }

    pub fn solve(&self, b: &DVector<Complex64>, ops: &mut OpCount) -> DVector<Complex64> {
        let n = self.d.len();
        let mut y = b.clone();
        for i in 0..n {
            for k in 0..i {
                let t = self.l[(i, k)] * y[k];
                y[i] -= t;
            }
        }
        for i in 0..n {
            y[i] *= self.inv_d[i];
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let t = self.l[(k, i)].conj() * y[k];
                y[i] -= t;
            }
        }
        ops.multiplications += (n * (n - 1)) as u64 + n as u64;
        y
    }

    /// Ratio of largest to smallest pivot, a cheap condition proxy.
    pub fn pivot_ratio(&self) -> f64 {
        let max = self.d.iter().copied().fold(0.0, f64::max);
        let min = self.d.iter().copied().fold(f64::INFINITY, f64::min);
        max / min
    }

    pub fn regularized(&self) -> bool {
        self.regularized
    }

    pub fn pivots(&self) -> &[f64] {
        &self.d
    }

    pub fn lower(&self) -> &DMatrix<Complex64> {
        &self.l
    }
}

/// Solve `A x = b` for Hermitian positive-definite `A`.
/// Returns the solution and whether diagonal loading was needed.
pub fn hermitian_solve(
    a: &DMatrix<Complex64>,
    b: &DVector<Complex64>,
) -> Result<(DVector<Complex64>, bool)> {
    let mut ops = OpCount::default();
    let f = Ldl::factor_regularized(a, &mut ops)?;
    Ok((f.solve(b, &mut ops), f.regularized()))
}

/// Add `h h^H` to the lower triangle of `a`, counting `M(M+1)/2` products.
pub fn add_outer_lower(a: &mut DMatrix<Complex64>, h: &DVector<Complex64>, ops: &mut OpCount) {
    let n = h.len();
    for j in 0..n {
        let c = h[j].conj();
        for i in j..n {
            a[(i, j)] += h[i] * c;
        }
    }
    for j in 0..n {
        for i in j + 1..n {
            a[(j, i)] = a[(i, j)].conj();
        }
    }
    ops.multiplications += (n * (n + 1) / 2) as u64;
}

/// Minimum eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(a: &DMatrix<Complex64>) -> f64 {
    a.clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Largest entrywise deviation from Hermitian symmetry.
pub fn hermitian_defect(a: &DMatrix<Complex64>) -> f64 {
    (a - a.adjoint())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}
