//! Dense numerical kernels: vector helpers, compensated summation,
//! Cholesky factorization, a cyclic Jacobi eigensolver for symmetric
//! matrices, and adaptive Gauss-Kronrod quadrature.
//!
//! Everything here operates on flat `&[f64]` storage. Matrices are
//! row-major unless a function says otherwise; eigenvector output is
//! column-major so a single eigenvector is a contiguous slice.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn norm_complex(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// y += alpha * x
pub(crate) fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    debug_assert_eq!(y.len(), x.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Kahan compensated summation.
pub(crate) fn kahan_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for x in values {
        let y = x - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Compensated sum taken in descending-magnitude order. Used for spectral
/// sums where small filter tails must not be swallowed by large heads.
pub(crate) fn spectral_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(|a, b| b.abs().total_cmp(&a.abs()));
    kahan_sum(terms)
}

/// Cholesky factorization of a symmetric positive-definite matrix.
/// Stores the lower factor in full row-major storage.
pub(crate) struct Cholesky {
    n: usize,
    lower: Vec<f64>,
}

impl Cholesky {
    pub fn factor(matrix: &[f64], n: usize) -> Result<Self> {
        debug_assert_eq!(matrix.len(), n * n);
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = matrix[j * n + j];
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > 0.0) {
                return Err(Error::FactorizationFailure { pivot: j, value: d });
            }
            let djj = d.sqrt();
            l[j * n + j] = djj;
            for i in (j + 1)..n {
                let mut s = matrix[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / djj;
            }
        }
        Ok(Self { n, lower: l })
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.n;
        debug_assert_eq!(rhs.len(), n);
        let l = &self.lower;
        let mut x = rhs.to_vec();
        // forward: L y = rhs
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= l[i * n + k] * x[k];
            }
            x[i] = s / l[i * n + i];
        }
        // backward: L^T x = y
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n {
                s -= l[k * n + i] * x[k];
            }
            x[i] = s / l[i * n + i];
        }
        x
    }
}

const JACOBI_MAX_SWEEPS: usize = 64;

/// Cyclic Jacobi eigensolver for a symmetric matrix (row-major, full
/// storage). Returns unsorted eigenvalues and the accumulated rotations
/// as column-major eigenvectors (column k pairs with value k).
///
/// Rotations are applied until the off-diagonal Frobenius norm falls
/// below machine-level relative to the matrix norm; failure to get
/// there within the sweep cap is reported, never ignored.
pub(crate) fn jacobi_eigen(matrix: &[f64], n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    debug_assert_eq!(matrix.len(), n * n);
    let mut a = matrix.to_vec();
    let mut v = vec![0.0; n * n];
    for k in 0..n {
        v[k * n + k] = 1.0; // column-major identity
    }
    if n == 1 {
        return Ok((vec![a[0]], v));
    }
    let fro = norm(&a);
    if fro == 0.0 {
        return Ok((vec![0.0; n], v));
    }
    let tol = 1e-15 * fro;
    let mut off = off_diagonal_norm(&a, n);
    for _sweep in 0..JACOBI_MAX_SWEEPS {
        if off <= tol {
            let values = (0..n).map(|i| a[i * n + i]).collect();
            return Ok((values, v));
        }
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                    sign / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);

                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for i in 0..n {
                    if i == p || i == q {
                        continue;
                    }
                    let aip = a[i * n + p];
                    let aiq = a[i * n + q];
                    let new_ip = aip - s * (aiq + tau * aip);
                    let new_iq = aiq + s * (aip - tau * aiq);
                    a[i * n + p] = new_ip;
                    a[p * n + i] = new_ip;
                    a[i * n + q] = new_iq;
                    a[q * n + i] = new_iq;
                }
                // accumulate rotations on the (contiguous) columns p, q
                let (head, tail) = v.split_at_mut(q * n);
                let col_p = &mut head[p * n..p * n + n];
                let col_q = &mut tail[..n];
                for i in 0..n {
                    let vip = col_p[i];
                    let viq = col_q[i];
                    col_p[i] = vip - s * (viq + tau * vip);
                    col_q[i] = viq + s * (vip - tau * viq);
                }
            }
        }
        off = off_diagonal_norm(&a, n);
    }
    Err(Error::EigenNoConvergence {
        sweeps: JACOBI_MAX_SWEEPS,
        off,
    })
}

fn off_diagonal_norm(a: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[i * n + j] * a[i * n + j];
            }
        }
    }
    s.sqrt()
}

/// Values that adaptive quadrature can integrate.
pub(crate) trait QuadValue: Copy {
    fn zero() -> Self;
    fn add(self, other: Self) -> Self;
    fn sub(self, other: Self) -> Self;
    fn scale(self, k: f64) -> Self;
    fn magnitude(self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn sub(self, other: Self) -> Self {
        self - other
    }
    fn scale(self, k: f64) -> Self {
        self * k
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn sub(self, other: Self) -> Self {
        self - other
    }
    fn scale(self, k: f64) -> Self {
        self * k
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

// 15-point Kronrod extension of the 7-point Gauss rule on [-1, 1],
// with the standard published digits.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One Gauss-Kronrod 7-15 panel. Returns the K15 estimate and the
/// |K15 - G7| error indicator.
fn gauss_kronrod<V: QuadValue>(f: &impl Fn(f64) -> V, lo: f64, hi: f64) -> (V, f64) {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let f_center = f(center);
    let mut kronrod = f_center.scale(WGK[7]);
    let mut gauss = f_center.scale(WG[3]);
    for j in 0..7 {
        let x = half * XGK[j];
        let pair = f(center - x).add(f(center + x));
        kronrod = kronrod.add(pair.scale(WGK[j]));
        if j % 2 == 1 {
            gauss = gauss.add(pair.scale(WG[j / 2]));
        }
    }
    let estimate = kronrod.scale(half);
    let err = kronrod.sub(gauss).scale(half).magnitude();
    (estimate, err)
}

const MAX_PANELS: usize = 20_000;

struct Panel<V> {
    err: f64,
    lo: f64,
    hi: f64,
    estimate: V,
}

impl<V> PartialEq for Panel<V> {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl<V> Eq for Panel<V> {}
impl<V> PartialOrd for Panel<V> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl<V> Ord for Panel<V> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Globally adaptive Gauss-Kronrod integration to an absolute tolerance.
/// The worst panel (by error indicator) is split until the summed
/// indicator is below `abs_tol`; exceeding the panel budget is an error.
pub(crate) fn integrate_adaptive<V: QuadValue>(
    f: &impl Fn(f64) -> V,
    lo: f64,
    hi: f64,
    abs_tol: f64,
) -> Result<V> {
    if lo == hi {
        return Ok(V::zero());
    }
    let (estimate, err) = gauss_kronrod(f, lo, hi);
    let mut heap = std::collections::BinaryHeap::new();
    let mut total_err = err;
    heap.push(Panel {
        err,
        lo,
        hi,
        estimate,
    });
    while total_err > abs_tol {
        if heap.len() >= MAX_PANELS {
            return Err(Error::Quadrature {
                requested: abs_tol,
                achieved: total_err,
            });
        }
        let worst = heap.pop().expect("heap cannot be empty");
        if worst.err == 0.0 {
            heap.push(worst);
            break;
        }
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            // interval at floating-point resolution; stop refining it
            total_err -= worst.err;
            heap.push(Panel { err: 0.0, ..worst });
            continue;
        }
        total_err -= worst.err;
        let (el, errl) = gauss_kronrod(f, worst.lo, mid);
        let (er, errr) = gauss_kronrod(f, mid, worst.hi);
        total_err += errl + errr;
        heap.push(Panel {
            err: errl,
            lo: worst.lo,
            hi: mid,
            estimate: el,
        });
        heap.push(Panel {
            err: errr,
            lo: mid,
            hi: worst.hi,
            estimate: er,
        });
    }
    let mut sum = V::zero();
    for p in heap.into_iter() {
        sum = sum.add(p.estimate);
    }
    Ok(sum)
}
