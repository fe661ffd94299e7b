//! Dense complex Hermitian eigensolver (cyclic Jacobi).

use crate::complex::Complex;
use crate::error::{Error, Result};

/// Off-diagonal Frobenius mass, relative to the total, at which sweeps stop.
const OFF_DIAGONAL_TARGET: f64 = 1e-11;

#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix {
    n: usize,
    data: Vec<Complex>,
}

/// Eigenvalues in ascending order; `vectors[k]` belongs to `values[k]`.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<Complex>>,
}

impl HermitianMatrix {
    pub fn zeros(n: usize) -> Self {
        HermitianMatrix {
            n,
            data: vec![Complex::ZERO; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = Complex::ONE;
        }
        m
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.data[i * diag.len() + i] = Complex::from_real(v);
        }
        m
    }

    /// Row-major entries. Fails if the matrix is not Hermitian within `tol`.
    pub fn from_rows(n: usize, data: Vec<Complex>, tol: f64) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {n}x{n} matrix",
                data.len()
            )));
        }
        let m = HermitianMatrix { n, data };
        let dev = m.hermiticity_residual();
        if dev > tol {
            return Err(Error::DimensionMismatch(format!(
                "matrix is not Hermitian (deviation {dev:.3e})"
            )));
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Complex {
        self.data[i * self.n + j]
    }

    pub(crate) fn add_outer(&mut self, coeff: f64, u: &[Complex]) {
        let n = self.n;
        for i in 0..n {
            let ui = u[i] * coeff;
            if ui == Complex::ZERO {
                continue;
            }
            for (dst, uj) in self.data[i * n..(i + 1) * n].iter_mut().zip(u) {
                *dst += ui * uj.conj();
            }
        }
    }

    pub fn hermiticity_residual(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).abs());
            }
        }
        worst
    }

    pub fn mul_vec(&self, v: &[Complex]) -> Vec<Complex> {
        let n = self.n;
        (0..n)
            .map(|i| {
                self.data[i * n..(i + 1) * n]
                    .iter()
                    .zip(v)
                    .fold(Complex::ZERO, |acc, (a, b)| acc + *a * *b)
            })
            .collect()
    }

    /// `v† M v` for a unit vector `v`.
    pub fn expectation(&self, v: &[Complex]) -> f64 {
        crate::complex::inner(v, &self.mul_vec(v)).re
    }

    /// `‖M v − λ v‖₂`
    pub fn residual(&self, lambda: f64, v: &[Complex]) -> f64 {
        self.mul_vec(v)
            .iter()
            .zip(v)
            .map(|(mv, vi)| (*mv - *vi * lambda).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Full eigendecomposition by cyclic complex Jacobi rotations. The
    /// total rotation count is capped at `10 n²`.
    pub fn eigen(&self) -> Result<Eigen> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut v = vec![Complex::ZERO; n * n];
        for i in 0..n {
            v[i * n + i] = Complex::ONE;
        }
        let total: f64 = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let cap = 10 * n * n;
        let mut rotations = 0usize;

        let off = |a: &[Complex]| -> f64 {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        s += a[i * n + j].norm_sqr();
                    }
                }
            }
            s.sqrt()
        };

        while total > 0.0 && off(&a) > OFF_DIAGONAL_TARGET * total {
            if rotations >= cap {
                return Err(Error::NonConvergence {
                    rotations,
                    residual: off(&a),
                });
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[p * n + q];
                    let r = apq.abs();
                    if r <= f64::EPSILON * 1e-3 * total {
                        continue;
                    }
                    rotations += 1;
                    let app = a[p * n + p].re;
                    let aqq = a[q * n + q].re;
                    // Phase e^{-iφ} on column q makes the pivot real, then a
                    // real rotation annihilates it.
                    let phase = Complex::cis(-apq.arg());
                    let theta = (aqq - app) / (2.0 * r);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    // G restricted to (p, q): [[c, s], [-s e^{-iφ}, c e^{-iφ}]]
                    let g_pp = Complex::from_real(c);
                    let g_pq = Complex::from_real(s);
                    let g_qp = phase * (-s);
                    let g_qq = phase * c;

                    for k in 0..n {
                        let akp = a[k * n + p];
                        let akq = a[k * n + q];
                        a[k * n + p] = akp * g_pp + akq * g_qp;
                        a[k * n + q] = akp * g_pq + akq * g_qq;
                    }
                    for k in 0..n {
                        let apk = a[p * n + k];
                        let aqk = a[q * n + k];
                        a[p * n + k] = g_pp.conj() * apk + g_qp.conj() * aqk;
                        a[q * n + k] = g_pq.conj() * apk + g_qq.conj() * aqk;
                    }
                    a[p * n + q] = Complex::ZERO;
                    a[q * n + p] = Complex::ZERO;
                    a[p * n + p].im = 0.0;
                    a[q * n + q].im = 0.0;
                    for k in 0..n {
                        let vkp = v[k * n + p];
                        let vkq = v[k * n + q];
                        v[k * n + p] = vkp * g_pp + vkq * g_qp;
                        v[k * n + q] = vkp * g_pq + vkq * g_qq;
                    }
                }
            }
        }

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| a[i * n + i].re.total_cmp(&a[j * n + j].re));
        Ok(Eigen {
            values: order.iter().map(|&i| a[i * n + i].re).collect(),
            vectors: order.iter().map(|&i| (0..n).map(|k| v[k * n + i]).collect()).collect(),
        })
    }
}
