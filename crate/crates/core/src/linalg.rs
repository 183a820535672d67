//! Dense symmetric linear algebra for sensing.
//!
//! Sensing vectors are stored row-major (one length-N vector per row). Covariances are
//! small (N is typically 32), so everything here is plain `Vec<f64>` with explicit
//! indexing rather than a matrix crate.
//!
//! Eigenvectors are sign-normalized so that their largest-magnitude component is
//! nonnegative, with the lowest index winning ties. All downstream statistics are
//! invariant to the sign of a vector; fixing it only makes outputs reproducible.

use crate::error::{Error, Result};

/// Sweep cap for the cyclic Jacobi solver.
pub const JACOBI_MAX_SWEEPS: usize = 100;
/// Off-diagonal Frobenius norm, relative to the trace, at which Jacobi stops.
pub const JACOBI_TOLERANCE: f64 = 1e-12;
/// Negative eigenvalues no smaller than `-PSD_TOLERANCE * trace` are clipped to zero.
pub const PSD_TOLERANCE: f64 = 1e-9;

/// `Ns` sensing vectors of length `N`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingSegment {
    order_n: usize,
    count_ns: usize,
    data: Vec<f64>,
}

impl SensingSegment {
    /// Wraps a row-major `Ns x N` buffer. `data.len()` must be a nonzero multiple of `order_n`.
    pub fn from_rows(order_n: usize, data: Vec<f64>) -> Result<Self> {
        if order_n < 2 {
            return Err(Error::InvalidArgument(format!(
                "vector length must be at least 2, got {order_n}"
            )));
        }
        if data.is_empty() || data.len() % order_n != 0 {
            return Err(Error::InvalidArgument(format!(
                "{} samples do not form whole vectors of length {order_n}",
                data.len()
            )));
        }
        check_finite(&data)?;
        Ok(Self::from_rows_unchecked(order_n, data))
    }

    pub(crate) fn from_rows_unchecked(order_n: usize, data: Vec<f64>) -> Self {
        debug_assert!(order_n >= 2 && !data.is_empty() && data.len() % order_n == 0);
        let count_ns = data.len() / order_n;
        Self {
            order_n,
            count_ns,
            data,
        }
    }

    pub fn order_n(&self) -> usize {
        self.order_n
    }

    pub fn count_ns(&self) -> usize {
        self.count_ns
    }

    /// The `j`-th sensing vector (0-indexed).
    pub fn vector(&self, j: usize) -> &[f64] {
        &self.data[j * self.order_n..(j + 1) * self.order_n]
    }

    pub fn vectors(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.order_n)
    }

    /// Row-major sample buffer.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Every sample multiplied by `a`.
    pub fn scaled(&self, a: f64) -> Self {
        Self::from_rows_unchecked(self.order_n, self.data.iter().map(|x| a * x).collect())
    }
}

/// Symmetric `N x N` sample covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceEstimate {
    order_n: usize,
    entries: Vec<f64>,
}

impl CovarianceEstimate {
    /// Builds a covariance from row-major entries.
    ///
    /// The input must be finite and symmetric to within `1e-12 * max(1, |a_ij|)`; the
    /// stored matrix is mirrored from the upper triangle so it is exactly symmetric.
    /// Positive semidefiniteness is checked when the matrix is decomposed.
    pub fn new(order_n: usize, entries: Vec<f64>) -> Result<Self> {
        if order_n == 0 {
            return Err(Error::InvalidArgument("empty covariance".into()));
        }
        if entries.len() != order_n * order_n {
            return Err(Error::DimensionMismatch {
                expected: order_n * order_n,
                actual: entries.len(),
            });
        }
        check_finite(&entries)?;
        let mut entries = entries;
        for i in 0..order_n {
            for j in i + 1..order_n {
                let upper = entries[i * order_n + j];
                let lower = entries[j * order_n + i];
                if (upper - lower).abs() > 1e-12 * upper.abs().max(1.0) {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
                entries[j * order_n + i] = upper;
            }
        }
        Ok(Self { order_n, entries })
    }

    pub fn identity(order_n: usize) -> Self {
        Self::diagonal(&vec![1.0; order_n])
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        let mut entries = vec![0.0; n * n];
        for (i, &v) in values.iter().enumerate() {
            entries[i * n + i] = v;
        }
        Self {
            order_n: n,
            entries,
        }
    }

    /// `scale * v v^T`.
    pub fn rank_one(scale: f64, v: &[f64]) -> Self {
        let n = v.len();
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let x = scale * v[i] * v[j];
                entries[i * n + j] = x;
                entries[j * n + i] = x;
            }
        }
        Self {
            order_n: n,
            entries,
        }
    }

    pub fn order_n(&self) -> usize {
        self.order_n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.order_n + j]
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        (0..self.order_n).map(|i| self.get(i, i)).sum()
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            order_n: self.order_n,
            entries: self.entries.iter().map(|x| a * x).collect(),
        }
    }

    /// Entry-wise sum, e.g. signal covariance plus `sigma2 * I`.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if other.order_n != self.order_n {
            return Err(Error::DimensionMismatch {
                expected: self.order_n,
                actual: other.order_n,
            });
        }
        Ok(Self {
            order_n: self.order_n,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn mat_vec(&self, v: &[f64]) -> Vec<f64> {
        self.entries
            .chunks_exact(self.order_n)
            .map(|row| dot(row, v))
            .collect()
    }

    /// `v^T R v`.
    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        dot(&self.mat_vec(v), v)
    }

    /// `Q R Q^T` for a row-major `N x N` matrix `q`.
    pub fn congruence(&self, q: &[f64]) -> Result<Self> {
        let n = self.order_n;
        if q.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                actual: q.len(),
            });
        }
        let mut qr = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let qik = q[i * n + k];
                for j in 0..n {
                    qr[i * n + j] += qik * self.entries[k * n + j];
                }
            }
        }
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = dot(&qr[i * n..(i + 1) * n], &q[j * n..(j + 1) * n]);
            }
        }
        Self::new(n, out)
    }
}

/// Unit-norm, sign-normalized vector, typically a leading eigenvector.
#[derive(Debug, Clone, PartialEq)]
pub struct Feature {
    values: Vec<f64>,
}

impl Feature {
    /// Validates a unit-norm vector (to within `1e-9`) and applies the sign convention.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("empty feature".into()));
        }
        check_finite(&values)?;
        let norm = dot(&values, &values).sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "feature must have unit norm, got {norm}"
            )));
        }
        let mut values = values;
        sign_normalize(&mut values);
        Ok(Self { values })
    }

    /// Normalizes an arbitrary nonzero vector.
    pub fn from_direction(values: &[f64]) -> Result<Self> {
        check_finite(values)?;
        let norm = dot(values, values).sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidArgument("cannot normalize a zero vector".into()));
        }
        let mut values: Vec<f64> = values.iter().map(|x| x / norm).collect();
        sign_normalize(&mut values);
        Ok(Self { values })
    }

    /// Standard basis vector `e_index` in dimension `order_n`.
    pub fn basis(order_n: usize, index: usize) -> Self {
        let mut values = vec![0.0; order_n];
        values[index] = 1.0;
        Self { values }
    }

    pub fn order_n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Eigenvalues in descending order with matching unit eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    // Column-major: eigenvector k occupies vectors[k*n..(k+1)*n].
    vectors: Vec<f64>,
}

impl SpectralDecomposition {
    pub fn order_n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvector(&self, k: usize) -> &[f64] {
        let n = self.order_n();
        &self.vectors[k * n..(k + 1) * n]
    }

    pub fn leading_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn leading_feature(&self) -> Feature {
        Feature {
            values: self.eigenvector(0).to_vec(),
        }
    }

    /// `V diag(lambda) V^T`, row-major.
    pub fn reconstruct(&self) -> Vec<f64> {
        let n = self.order_n();
        let mut out = vec![0.0; n * n];
        for (k, &lambda) in self.eigenvalues.iter().enumerate() {
            let v = self.eigenvector(k);
            for i in 0..n {
                for j in 0..n {
                    out[i * n + j] += lambda * v[i] * v[j];
                }
            }
        }
        out
    }
}

/// Slides a stride-1 window of length `order_n` over `stream`, producing `count_ns`
/// overlapping vectors. Consumes `count_ns + order_n - 1` samples.
pub fn build_sensing_vectors(
    stream: &[f64],
    order_n: usize,
    count_ns: usize,
) -> Result<SensingSegment> {
    if order_n < 2 || count_ns == 0 {
        return Err(Error::InvalidArgument(format!(
            "need N >= 2 and Ns >= 1, got N={order_n}, Ns={count_ns}"
        )));
    }
    let required = count_ns + order_n - 1;
    if stream.len() < required {
        return Err(Error::StreamTooShort {
            required,
            actual: stream.len(),
        });
    }
    check_finite(&stream[..required])?;
    let mut data = Vec::with_capacity(count_ns * order_n);
    for window in stream[..required].windows(order_n) {
        data.extend_from_slice(window);
    }
    Ok(SensingSegment::from_rows_unchecked(order_n, data))
}

/// `(1/Ns) * sum_j r_j r_j^T`, accumulated on the upper triangle and mirrored.
pub fn sample_covariance(segment: &SensingSegment) -> CovarianceEstimate {
    let n = segment.order_n();
    let mut acc = vec![0.0; n * n];
    for row in segment.vectors() {
        for (i, &ri) in row.iter().enumerate() {
            let upper = &mut acc[i * n + i..(i + 1) * n];
            for (a, &rj) in upper.iter_mut().zip(&row[i..]) {
                *a += ri * rj;
            }
        }
    }
    let inv = 1.0 / segment.count_ns() as f64;
    for i in 0..n {
        for j in i..n {
            let v = acc[i * n + j] * inv;
            acc[i * n + j] = v;
            acc[j * n + i] = v;
        }
    }
    CovarianceEstimate {
        order_n: n,
        entries: acc,
    }
}

/// Full eigendecomposition by cyclic Jacobi rotations.
///
/// Stops once the off-diagonal Frobenius norm falls to `1e-12 * trace`. Eigenvalues in
/// `[-1e-9 * trace, 0)` are clipped to zero; anything more negative is rejected.
pub fn eigendecompose(cov: &CovarianceEstimate) -> Result<SpectralDecomposition> {
    let n = cov.order_n();
    let mut a = cov.entries().to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    let trace = cov.trace();
    let frobenius = dot(&a, &a).sqrt();
    let tol = JACOBI_TOLERANCE * trace.abs().max(frobenius);

    let mut converged = false;
    let mut off = off_diagonal_norm(&a, n);
    for _ in 0..JACOBI_MAX_SWEEPS {
        if off <= tol {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, &mut v, n, p, q);
            }
        }
        off = off_diagonal_norm(&a, n);
    }
    if !converged && off > tol {
        return Err(Error::NoConvergence {
            iterations: JACOBI_MAX_SWEEPS,
            residual: off,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]));

    let floor = -PSD_TOLERANCE * trace.abs();
    let mut eigenvalues = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n * n);
    for &k in &order {
        let mut lambda = a[k * n + k];
        if lambda < 0.0 {
            if lambda < floor {
                return Err(Error::NotPositiveSemidefinite { eigenvalue: lambda });
            }
            lambda = 0.0;
        }
        eigenvalues.push(lambda);
        let start = vectors.len();
        vectors.extend((0..n).map(|i| v[i * n + k]));
        sign_normalize(&mut vectors[start..]);
    }
    Ok(SpectralDecomposition {
        eigenvalues,
        vectors,
    })
}

/// One Jacobi rotation annihilating `a[p][q]`; accumulates the rotation into `v`.
fn rotate(a: &mut [f64], v: &mut [f64], n: usize, p: usize, q: usize) {
    let apq = a[p * n + q];
    if apq == 0.0 {
        return;
    }
    let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    for k in 0..n {
        let akp = a[k * n + p];
        let akq = a[k * n + q];
        a[k * n + p] = c * akp - s * akq;
        a[k * n + q] = s * akp + c * akq;
    }
    for k in 0..n {
        let apk = a[p * n + k];
        let aqk = a[q * n + k];
        a[p * n + k] = c * apk - s * aqk;
        a[q * n + k] = s * apk + c * aqk;
    }
    a[p * n + q] = 0.0;
    a[q * n + p] = 0.0;

    for k in 0..n {
        let vkp = v[k * n + p];
        let vkq = v[k * n + q];
        v[k * n + p] = c * vkp - s * vkq;
        v[k * n + q] = s * vkp + c * vkq;
    }
}

fn off_diagonal_norm(a: &[f64], n: usize) -> f64 {
    let mut sum = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            sum += 2.0 * a[i * n + j] * a[i * n + j];
        }
    }
    sum.sqrt()
}

/// Leading eigenpair by power iteration, `O(N^2)` per step.
///
/// Starts from the normalized all-ones vector. If that run has not converged after
/// `max_iters / 2` steps (or the start lies in the null space), it restarts from `e_1`
/// with the remaining budget. Iteration stops when successive iterates differ by less
/// than `tol` in max-norm. The eigenvalue is the Rayleigh quotient of the final vector.
///
/// When the two largest eigenvalues coincide the returned vector is some unit vector in
/// the dominant eigenspace (for the identity, the start vector itself).
pub fn leading_eigenpair(
    cov: &CovarianceEstimate,
    tol: f64,
    max_iters: usize,
) -> Result<(f64, Feature)> {
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    if max_iters == 0 {
        return Err(Error::InvalidArgument("max_iters must be positive".into()));
    }
    let n = cov.order_n();
    let first_budget = (max_iters / 2).max(1);
    let ones = vec![1.0 / (n as f64).sqrt(); n];

    let first = power_iterate(cov, ones, tol, first_budget);
    let last_residual = match first {
        PowerOutcome::Converged(v) => return Ok(finish(cov, v)),
        PowerOutcome::ZeroMatrix(v) => return Ok((0.0, Feature::from_direction(&v)?)),
        PowerOutcome::Stalled(r) => r,
    };

    let second_budget = max_iters.saturating_sub(first_budget);
    if second_budget > 0 {
        match power_iterate(cov, Feature::basis(n, 0).values, tol, second_budget) {
            PowerOutcome::Converged(v) => return Ok(finish(cov, v)),
            PowerOutcome::ZeroMatrix(v) => return Ok((0.0, Feature::from_direction(&v)?)),
            PowerOutcome::Stalled(r) => {
                return Err(Error::NoConvergence {
                    iterations: max_iters,
                    residual: r,
                })
            }
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iters,
        residual: last_residual,
    })
}

enum PowerOutcome {
    Converged(Vec<f64>),
    /// `R v = 0` for the start vector and `R` itself is zero.
    ZeroMatrix(Vec<f64>),
    Stalled(f64),
}

fn power_iterate(cov: &CovarianceEstimate, start: Vec<f64>, tol: f64, budget: usize) -> PowerOutcome {
    let mut v = start;
    let mut residual = f64::INFINITY;
    for _ in 0..budget {
        let w = cov.mat_vec(&v);
        let norm = dot(&w, &w).sqrt();
        if norm == 0.0 {
            if cov.entries().iter().all(|&x| x == 0.0) {
                return PowerOutcome::ZeroMatrix(v);
            }
            return PowerOutcome::Stalled(residual);
        }
        let next: Vec<f64> = w.iter().map(|x| x / norm).collect();
        residual = next
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        v = next;
        if residual < tol {
            return PowerOutcome::Converged(v);
        }
    }
    PowerOutcome::Stalled(residual)
}

fn finish(cov: &CovarianceEstimate, mut v: Vec<f64>) -> (f64, Feature) {
    let lambda = cov.quadratic_form(&v);
    sign_normalize(&mut v);
    (lambda, Feature { values: v })
}

/// Flips `v` so its largest-magnitude component (lowest index on ties) is nonnegative.
pub fn sign_normalize(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|x| !x.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}
