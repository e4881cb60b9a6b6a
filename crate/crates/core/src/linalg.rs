//! Small dense real matrix kernels.
//!
//! Matrices here are tiny (d rarely exceeds 4), so everything is stored as a
//! flat row-major `Vec<f64>` and computed directly. Singular values come from
//! one-sided Jacobi rotations (an implicit eigen-decomposition of `AᵀA`, with a
//! closed form for 2×2); eigenvalues use characteristic-polynomial roots for
//! d ≤ 3 and a Schur decomposition beyond that.

use std::fmt;

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symbolic::Word;

/// Default absolute tolerance for comparisons.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Default threshold on the smallest singular value below which a generator is singular.
pub const DEFAULT_NONSINGULARITY_TOL: f64 = 1e-10;

const JACOBI_MAX_SWEEPS: usize = 80;
const SCHUR_MAX_ITER: usize = 10_000;

/// A square real matrix, row-major. Entries are always finite.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Mat {
    dim: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rows()).finish()
    }
}

impl Mat {
    pub fn from_row_major(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Input("matrix dimension must be at least 1".into()));
        }
        if data.len() != dim * dim {
            return Err(Error::Input(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::Input(format!(
                "non-finite entry at row {}, column {}",
                pos / dim + 1,
                pos % dim + 1
            )));
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if let Some(bad) = rows.iter().position(|r| r.len() != dim) {
            return Err(Error::Input(format!(
                "matrix is not square: row {} has {} entries, expected {dim}",
                bad + 1,
                rows[bad].len()
            )));
        }
        Self::from_row_major(dim, rows.concat())
    }

    pub fn identity(dim: usize) -> Self {
        Self::diag(&vec![1.0; dim])
    }

    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![0.0; dim * dim] }
    }

    pub fn diag(entries: &[f64]) -> Self {
        let dim = entries.len();
        let mut m = Self::zeros(dim);
        for (i, &v) in entries.iter().enumerate() {
            m.data[i * dim + i] = v;
        }
        m
    }

    pub fn scalar(value: f64) -> Self {
        Self { dim: 1, data: vec![value] }
    }

    /// Counter-clockwise rotation of the plane by `theta` radians.
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self { dim: 2, data: vec![c, -s, s, c] }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.dim + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.dim + col] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dim).map(|r| r.to_vec()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn is_nonnegative(&self) -> bool {
        self.data.iter().all(|&x| x >= 0.0)
    }

    /// `self · rhs`.
    pub fn mul(&self, rhs: &Mat) -> Mat {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in matrix product");
        let d = self.dim;
        let mut out = vec![0.0; d * d];
        for i in 0..d {
            for k in 0..d {
                let a = self.data[i * d + k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..d {
                    out[i * d + j] += a * rhs.data[k * d + j];
                }
            }
        }
        Mat { dim: d, data: out }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.dim, x.len(), "dimension mismatch in matrix-vector product");
        self.data
            .chunks(self.dim)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn scale(&self, c: f64) -> Mat {
        Mat { dim: self.dim, data: self.data.iter().map(|x| x * c).collect() }
    }

    pub fn transpose(&self) -> Mat {
        let d = self.dim;
        let mut out = Mat::zeros(d);
        for i in 0..d {
            for j in 0..d {
                out.data[j * d + i] = self.data[i * d + j];
            }
        }
        out
    }

    pub fn sub(&self, rhs: &Mat) -> Mat {
        assert_eq!(self.dim, rhs.dim);
        Mat {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    /// Square sub-block starting at (`start`, `start`) of size `size`.
    pub fn diagonal_block(&self, start: usize, size: usize) -> Mat {
        let mut out = Mat::zeros(size);
        for i in 0..size {
            for j in 0..size {
                out.data[i * size + j] = self.get(start + i, start + j);
            }
        }
        out
    }

    pub fn inverse(&self) -> Result<Mat> {
        let m = self.to_nalgebra();
        let inv = m
            .try_inverse()
            .ok_or_else(|| Error::Domain("matrix is not invertible".into()))?;
        let out = Self::from_nalgebra(&inv);
        if !out.is_finite() {
            return Err(Error::Numeric("inverse has non-finite entries".into()));
        }
        Ok(out)
    }

    pub fn determinant(&self) -> f64 {
        let g = |i, j| self.get(i, j);
        match self.dim {
            1 => g(0, 0),
            2 => g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0),
            _ => self.to_nalgebra().determinant(),
        }
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.data)
    }

    pub(crate) fn from_nalgebra(m: &DMatrix<f64>) -> Mat {
        let d = m.nrows();
        let mut data = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                data.push(m[(i, j)]);
            }
        }
        Mat { dim: d, data }
    }
}

impl TryFrom<Vec<Vec<f64>>> for Mat {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Mat::from_rows(&rows)
    }
}

impl From<Mat> for Vec<Vec<f64>> {
    fn from(m: Mat) -> Self {
        m.rows()
    }
}

/// Singular values in descending order.
pub fn singular_values(a: &Mat) -> Vec<f64> {
    match a.dim {
        1 => vec![a.data[0].abs()],
        2 => {
            let (p, q, r, s) = (a.data[0], a.data[1], a.data[2], a.data[3]);
            let h1 = (p + s).hypot(r - q);
            let h2 = (p - s).hypot(q + r);
            let smax = 0.5 * (h1 + h2);
            let smin = if smax > 0.0 { (p * s - q * r).abs() / smax } else { 0.0 };
            vec![smax, smin]
        }
        _ => jacobi_svd(a, false).0,
    }
}

/// One-sided Jacobi SVD. Returns singular values (descending) and, when
/// requested, the matching right singular vectors.
pub(crate) fn jacobi_svd(a: &Mat, want_vectors: bool) -> (Vec<f64>, Vec<Vec<f64>>) {
    let d = a.dim;
    // columns of U, stored column-major for cache-friendly rotations
    let mut u: Vec<Vec<f64>> = (0..d).map(|j| (0..d).map(|i| a.get(i, j)).collect()).collect();
    let mut v: Vec<Vec<f64>> = if want_vectors {
        (0..d).map(|j| (0..d).map(|i| if i == j { 1.0 } else { 0.0 }).collect()).collect()
    } else {
        Vec::new()
    };
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..d {
            for q in (p + 1)..d {
                let alpha: f64 = u[p].iter().map(|x| x * x).sum();
                let beta: f64 = u[q].iter().map(|x| x * x).sum();
                let gamma: f64 = u[p].iter().zip(&u[q]).map(|(x, y)| x * y).sum();
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..d {
                    let (up, uq) = (u[p][i], u[q][i]);
                    u[p][i] = c * up - s * uq;
                    u[q][i] = s * up + c * uq;
                }
                if want_vectors {
                    for i in 0..d {
                        let (vp, vq) = (v[p][i], v[q][i]);
                        v[p][i] = c * vp - s * vq;
                        v[q][i] = s * vp + c * vq;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = u.iter().map(|col| col.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let sigma = order.iter().map(|&i| norms[i]).collect();
    let vecs = if want_vectors { order.iter().map(|&i| v[i].clone()).collect() } else { Vec::new() };
    (sigma, vecs)
}

/// Euclidean operator norm: the largest singular value.
pub fn operator_norm(a: &Mat) -> f64 {
    singular_values(a)[0]
}

/// Co-norm `min_{|x|=1} |Ax|`: the smallest singular value.
pub fn co_norm(a: &Mat) -> f64 {
    *singular_values(a).last().expect("dim >= 1")
}

/// All eigenvalues, complex ones included.
pub fn eigenvalues(a: &Mat) -> Result<Vec<Complex<f64>>> {
    let d = a.dim;
    let g = |i, j| a.get(i, j);
    match d {
        1 => Ok(vec![Complex::new(g(0, 0), 0.0)]),
        2 => {
            let half_tr = 0.5 * (g(0, 0) + g(1, 1));
            let half_diff = 0.5 * (g(0, 0) - g(1, 1));
            let disc = half_diff * half_diff + g(0, 1) * g(1, 0);
            Ok(quadratic_from_center(half_tr, disc))
        }
        3 => {
            let c2 = g(0, 0) + g(1, 1) + g(2, 2);
            let c1 = g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0) + g(0, 0) * g(2, 2) - g(0, 2) * g(2, 0)
                + g(1, 1) * g(2, 2)
                - g(1, 2) * g(2, 1);
            let c0 = g(0, 0) * (g(1, 1) * g(2, 2) - g(1, 2) * g(2, 1))
                - g(0, 1) * (g(1, 0) * g(2, 2) - g(1, 2) * g(2, 0))
                + g(0, 2) * (g(1, 0) * g(2, 1) - g(1, 1) * g(2, 0));
            Ok(cubic_roots(-c2, c1, -c0))
        }
        _ => {
            let schur = nalgebra::linalg::Schur::try_new(a.to_nalgebra(), f64::EPSILON, SCHUR_MAX_ITER)
                .ok_or_else(|| {
                    Error::Numeric(format!(
                        "Schur iteration did not converge within {SCHUR_MAX_ITER} sweeps (dim {d}, max |entry| {:e})",
                        a.max_abs()
                    ))
                })?;
            Ok(schur.complex_eigenvalues().iter().copied().collect())
        }
    }
}

/// Roots of `λ² - 2cλ + (c² - disc)`, i.e. `c ± sqrt(disc)`.
fn quadratic_from_center(center: f64, disc: f64) -> Vec<Complex<f64>> {
    if disc >= 0.0 {
        let r = disc.sqrt();
        // avoid cancellation in the smaller-magnitude root
        let big = if center >= 0.0 { center + r } else { center - r };
        let prod = center * center - disc;
        let small = if big != 0.0 { prod / big } else { center - r };
        vec![Complex::new(big, 0.0), Complex::new(small, 0.0)]
    } else {
        let im = (-disc).sqrt();
        vec![Complex::new(center, im), Complex::new(center, -im)]
    }
}

/// Roots of the monic cubic `λ³ + aλ² + bλ + c`.
fn cubic_roots(a: f64, b: f64, c: f64) -> Vec<Complex<f64>> {
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    let t = if p == 0.0 {
        (-q).cbrt()
    } else if disc > 0.0 {
        let sd = disc.sqrt();
        (-q / 2.0 + sd).cbrt() + (-q / 2.0 - sd).cbrt()
    } else {
        let arg = ((3.0 * q) / (2.0 * p) * (-3.0 / p).sqrt()).clamp(-1.0, 1.0);
        2.0 * (-p / 3.0).sqrt() * (arg.acos() / 3.0).cos()
    };
    let mut r = t - a / 3.0;
    for _ in 0..3 {
        let f = ((r + a) * r + b) * r + c;
        let df = (3.0 * r + 2.0 * a) * r + b;
        if df == 0.0 {
            break;
        }
        let step = f / df;
        if !step.is_finite() {
            break;
        }
        r -= step;
    }
    // deflate: λ³ + aλ² + bλ + c = (λ - r)(λ² + Bλ + C)
    let big_b = a + r;
    let big_c = b + r * big_b;
    let center = -0.5 * big_b;
    let disc2 = center * center - big_c;
    let mut roots = vec![Complex::new(r, 0.0)];
    roots.extend(quadratic_from_center(center, disc2));
    roots
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(a: &Mat) -> Result<f64> {
    Ok(eigenvalues(a)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// `1/ρ(A⁻¹)`, the smallest eigenvalue modulus. Fails for matrices whose
/// smallest singular value is at or below `nonsingularity_tol`.
pub fn co_spectral_radius(a: &Mat, nonsingularity_tol: f64) -> Result<f64> {
    let smin = co_norm(a);
    if smin <= nonsingularity_tol {
        return Err(Error::Domain(format!(
            "co-spectral radius needs a nonsingular matrix; smallest singular value is {smin:e}"
        )));
    }
    Ok(eigenvalues(a)?.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min))
}

/// The K generators of a linear inclusion system plus the tolerances used to analyse it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    matrices: Vec<Mat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
    nonsingularity_tol: f64,
    tol: f64,
}

impl SystemSpec {
    /// Validates shape agreement and nonsingularity with default tolerances.
    pub fn new(matrices: Vec<Mat>) -> Result<Self> {
        Self::with_tolerances(matrices, DEFAULT_NONSINGULARITY_TOL, DEFAULT_TOL)
    }

    pub fn with_tolerances(matrices: Vec<Mat>, nonsingularity_tol: f64, tol: f64) -> Result<Self> {
        let sys = Self::unchecked(matrices, nonsingularity_tol, tol)?;
        for (i, m) in sys.matrices.iter().enumerate() {
            let smin = co_norm(m);
            if smin <= nonsingularity_tol {
                return Err(Error::Singular { index: i + 1, min_singular_value: smin, tol: nonsingularity_tol });
            }
        }
        Ok(sys)
    }

    /// Shape checks only; generators may be singular. Used for the analysis of
    /// systems that intentionally violate the nonsingularity hypothesis.
    pub fn unchecked(matrices: Vec<Mat>, nonsingularity_tol: f64, tol: f64) -> Result<Self> {
        if matrices.is_empty() {
            return Err(Error::Input("a system needs at least one matrix".into()));
        }
        if !(nonsingularity_tol > 0.0 && tol > 0.0) {
            return Err(Error::Input("tolerances must be positive".into()));
        }
        let dim = matrices[0].dim();
        if let Some(bad) = matrices.iter().position(|m| m.dim() != dim) {
            return Err(Error::Input(format!(
                "matrix {} has dimension {}, expected {dim}",
                bad + 1,
                matrices[bad].dim()
            )));
        }
        Ok(Self { matrices, labels: None, nonsingularity_tol, tol })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.matrices.len() {
            return Err(Error::Input(format!(
                "{} labels given for {} matrices",
                labels.len(),
                self.matrices.len()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.matrices[0].dim()
    }

    /// Alphabet size K.
    pub fn k(&self) -> usize {
        self.matrices.len()
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn nonsingularity_tol(&self) -> f64 {
        self.nonsingularity_tol
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn matrices(&self) -> &[Mat] {
        &self.matrices
    }

    /// Generator for a 1-based symbol.
    pub fn matrix(&self, symbol: u32) -> Result<&Mat> {
        self.check_symbol(symbol)?;
        Ok(&self.matrices[symbol as usize - 1])
    }

    #[inline]
    pub(crate) fn mat(&self, symbol: u32) -> &Mat {
        &self.matrices[symbol as usize - 1]
    }

    pub fn check_symbol(&self, symbol: u32) -> Result<()> {
        if symbol == 0 || symbol as usize > self.k() {
            return Err(Error::Domain(format!("symbol {symbol} outside alphabet 1..={}", self.k())));
        }
        Ok(())
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        let mats = self.matrices.iter().map(|m| m.scale(c)).collect();
        let mut out = Self::with_tolerances(mats, self.nonsingularity_tol, self.tol)?;
        out.labels = self.labels.clone();
        Ok(out)
    }

    /// The system of inverses `{S_k⁻¹}`.
    pub fn inverse_system(&self) -> Result<Self> {
        let mut inv = Vec::with_capacity(self.k());
        for (i, m) in self.matrices.iter().enumerate() {
            let smin = co_norm(m);
            if smin <= self.nonsingularity_tol {
                return Err(Error::Singular { index: i + 1, min_singular_value: smin, tol: self.nonsingularity_tol });
            }
            inv.push(m.inverse().map_err(|e| Error::Numeric(format!("inverting matrix {}: {e}", i + 1)))?);
        }
        Self::unchecked(inv, self.nonsingularity_tol, self.tol)
    }

    /// Ordered product `S_{w_m}⋯S_{w_1}` of a raw symbol slice, folded from `w_1`.
    pub fn product(&self, symbols: &[u32]) -> Result<Mat> {
        let (&first, rest) = symbols
            .split_first()
            .ok_or_else(|| Error::Domain("product of an empty word".into()))?;
        let mut acc = self.matrix(first)?.clone();
        for &s in rest {
            acc = self.matrix(s)?.mul(&acc);
        }
        Ok(acc)
    }
}

/// `S_{w_m}⋯S_{w_1}`: the first symbol acts first.
pub fn word_product(sys: &SystemSpec, w: &Word) -> Result<Mat> {
    sys.product(w.symbols())
}

/// A matrix stored as `exp(log_scale) · unit` with `unit` of unit Frobenius
/// norm, so long products neither overflow nor underflow. `log_abs_det` is
/// accumulated factor by factor; it recovers the co-norm once the smallest
/// singular value of `unit` has dropped below rounding level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaledMat {
    unit: Mat,
    log_scale: f64,
    log_abs_det: f64,
}

/// Below this ratio to `σ_max` a computed singular value of `unit` is noise.
const RELIABLE_SV_RATIO: f64 = 1e-6;

impl ScaledMat {
    pub fn identity(dim: usize) -> Self {
        Self::from_mat(&Mat::identity(dim))
    }

    pub fn from_mat(m: &Mat) -> Self {
        let mut out = Self { unit: m.clone(), log_scale: 0.0, log_abs_det: m.determinant().abs().ln() };
        out.renormalize();
        out
    }

    fn renormalize(&mut self) {
        let f = self.unit.frobenius_norm();
        if f > 0.0 && f.is_finite() {
            self.unit = self.unit.scale(1.0 / f);
            self.log_scale += f.ln();
        }
    }

    /// Replace `self` by `m · self`.
    pub fn left_mul(&mut self, m: &Mat) {
        self.unit = m.mul(&self.unit);
        self.log_abs_det += m.determinant().abs().ln();
        self.renormalize();
    }

    /// Natural log of the operator norm.
    pub fn log_norm(&self) -> f64 {
        self.log_scale + operator_norm(&self.unit).ln()
    }

    /// Natural log of the co-norm.
    pub fn log_co_norm(&self) -> f64 {
        let d = self.unit.dim();
        if d == 1 {
            return self.log_scale + self.unit.get(0, 0).abs().ln();
        }
        let sv = singular_values(&self.unit);
        let direct = self.log_scale + sv[d - 1].ln();
        if sv[d - 1] >= RELIABLE_SV_RATIO * sv[0]
            || sv[d - 2] < RELIABLE_SV_RATIO * sv[0]
            || !self.log_abs_det.is_finite()
        {
            return direct;
        }
        // |det| = ∏σ_i, so σ_min = |det| / ∏_{i<d} σ_i when the larger ones are accurate
        self.log_abs_det - sv[..d - 1].iter().map(|s| self.log_scale + s.ln()).sum::<f64>()
    }

    /// Natural log of `|det|`.
    pub fn log_abs_det(&self) -> f64 {
        self.log_abs_det
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    pub fn unit(&self) -> &Mat {
        &self.unit
    }

    /// Dense value; may overflow for long products.
    pub fn to_mat(&self) -> Mat {
        self.unit.scale(self.log_scale.exp())
    }
}

pub(crate) fn vec_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}
