//! Structured matrices built from a linear process: the segmented data
//! matrix, its truncation, the innovation matrix, circulant and Toeplitz
//! companions, and the normalized Gram matrix.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::process::{self, autocovariance, Innovations, ProcessSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixShape {
    pub p: usize,
    pub n: usize,
}

impl MatrixShape {
    pub fn new(p: usize, n: usize) -> Result<Self> {
        if p == 0 || n == 0 {
            return Err(Error::InvalidParameter(format!(
                "matrix dimensions must be positive (p = {p}, n = {n})"
            )));
        }
        let shape = MatrixShape { p, n };
        shape.entries()?;
        Ok(shape)
    }

    /// `p / n`.
    pub fn ratio(&self) -> f64 {
        self.p as f64 / self.n as f64
    }

    pub fn entries(&self) -> Result<usize> {
        self.p
            .checked_mul(self.n)
            .filter(|&e| i64::try_from(e).is_ok())
            .ok_or_else(|| Error::IndexOverflow(format!("{} x {} entries", self.p, self.n)))
    }
}

/// Row-major dense real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::LengthMismatch {
                    expected: cols,
                    actual: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(DenseMatrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::LengthMismatch {
                expected: self.cols,
                actual: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |M_ij - M_ji| / max |M_ij|` (0 for the zero matrix).
    pub fn asymmetry(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in i + 1..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst / scale
    }

    /// One row per line, preceded by a `c1,...,cN` header.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header: Vec<String> = (1..=self.cols).map(|j| format!("c{j}")).collect();
        writeln!(w, "{}", header.join(","))?;
        for i in 0..self.rows {
            let line: Vec<String> = self.row(i).iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Row `i` of the result holds `record[(i-1)n .. in]`.
pub fn build_x(record: &[f64], shape: MatrixShape) -> Result<DenseMatrix> {
    DenseMatrix::from_vec(shape.p, shape.n, record.to_vec()).map_err(|_| Error::LengthMismatch {
        expected: shape.p * shape.n,
        actual: record.len(),
    })
}

/// Simulates `X_1 .. X_{pn}` with horizon `max(n, J_tail)` and reshapes.
pub fn simulate_x(spec: &ProcessSpec, shape: MatrixShape) -> Result<DenseMatrix> {
    let horizon = spec.horizon_for(shape.n)?;
    let record = process::simulate_record_with_horizon(spec, shape.entries()?, horizon)?;
    build_x(&record, shape)
}

/// Same innovations as [`simulate_x`], coefficients truncated after `c_n`.
pub fn build_truncated_x(spec: &ProcessSpec, shape: MatrixShape) -> Result<DenseMatrix> {
    let coeffs = spec.model.coefficients(shape.n + 1)?;
    let last = shape.entries()? as i64;
    let innovations = spec.innovations.draw(1 - shape.n as i64, last)?;
    let record = process::filter(&innovations, &coeffs, 1, shape.entries()?)?;
    build_x(&record, shape)
}

/// The `(p+1) x n` matrix `(Z_{(i-2)n+t})`, first row holding `Z_{1-n} .. Z_0`.
pub fn build_z(innovations: &Innovations, shape: MatrixShape) -> Result<DenseMatrix> {
    let last = shape.entries()? as i64;
    let block = innovations.range(1 - shape.n as i64, last)?;
    DenseMatrix::from_vec(shape.p + 1, shape.n, block.to_vec())
}

fn padded(coeffs: &[f64], len: usize) -> Vec<f64> {
    let mut c: Vec<f64> = coeffs.iter().take(len).copied().collect();
    c.resize(len, 0.0);
    c
}

/// `n x (n+1)` matrix with `Omega_ij = c_{(n+j-i) mod (n+1)}` (1-based).
///
/// Equals [`build_circulant`] of size `n+1` with its last row,
/// `(c_0, ..., c_n)`, removed.
pub fn build_omega(coeffs: &[f64], n: usize) -> DenseMatrix {
    let c = padded(coeffs, n + 1);
    let mut omega = DenseMatrix::zeros(n, n + 1);
    for i in 1..=n {
        for j in 1..=n + 1 {
            omega[(i - 1, j - 1)] = c[(n + j - i) % (n + 1)];
        }
    }
    omega
}

/// `m x m` circulant with `C_ij = c_{(m-1+j-i) mod m}` (1-based).
pub fn build_circulant(coeffs: &[f64], m: usize) -> DenseMatrix {
    let c = padded(coeffs, m);
    let mut out = DenseMatrix::zeros(m, m);
    for i in 1..=m {
        for j in 1..=m {
            out[(i - 1, j - 1)] = c[(m - 1 + j - i) % m];
        }
    }
    out
}

/// `Gamma_ij = gamma(|i-j|)`.
pub fn build_toeplitz_gamma(coeffs: &[f64], m: usize) -> DenseMatrix {
    let gammas: Vec<f64> = (0..m).map(|h| autocovariance(coeffs, h)).collect();
    let mut out = DenseMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            out[(i, j)] = gammas[i.abs_diff(j)];
        }
    }
    out
}

/// `p^{-1} M M^T` where `p` is the row count of `M`. Exactly symmetric.
pub fn gram(m: &DenseMatrix) -> DenseMatrix {
    let p = m.rows();
    let scale = 1.0 / p as f64;
    let mut out = DenseMatrix::zeros(p, p);
    for i in 0..p {
        let ri = m.row(i);
        for k in i..p {
            let v = ri.iter().zip(m.row(k)).map(|(a, b)| a * b).sum::<f64>() * scale;
            out[(i, k)] = v;
            out[(k, i)] = v;
        }
    }
    out
}

/// The `m x m` down-shift `K_m` with the polynomials
/// `chi(z) = c_0 + ... + c_m z^m` and `chi_bar(z) = c_m + ... + c_0 z^m`.
#[derive(Debug, Clone)]
pub struct ShiftPolynomialPair {
    pub shift: DenseMatrix,
    pub chi: Vec<f64>,
    pub chi_bar: Vec<f64>,
}

impl ShiftPolynomialPair {
    pub fn new(coeffs: &[f64], m: usize) -> Self {
        let mut shift = DenseMatrix::zeros(m, m);
        for i in 1..m {
            shift[(i, i - 1)] = 1.0;
        }
        let chi = padded(coeffs, m + 1);
        let chi_bar = chi.iter().rev().copied().collect();
        ShiftPolynomialPair {
            shift,
            chi,
            chi_bar,
        }
    }

    fn horner(poly: &[f64], a: &DenseMatrix) -> DenseMatrix {
        let m = a.rows();
        let mut acc = DenseMatrix::zeros(m, m);
        for &c in poly.iter().rev() {
            acc = acc.matmul(a).expect("square");
            for i in 0..m {
                acc[(i, i)] += c;
            }
        }
        acc
    }

    /// `chi(K^T)`.
    pub fn chi_of_shift_transpose(&self) -> DenseMatrix {
        Self::horner(&self.chi, &self.shift.transpose())
    }

    /// `chi_bar(K)`.
    pub fn chi_bar_of_shift(&self) -> DenseMatrix {
        Self::horner(&self.chi_bar, &self.shift)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftCheck {
    pub equal: bool,
    pub max_deviation: f64,
}

/// Largest `p * n` accepted by [`shift_representation_check`].
pub const SHIFT_CHECK_MAX_ENTRIES: usize = 10_000;

/// Builds `[0 1_p 1_p 0] diag(Z, Z) [chi(K^T); chi_bar(K)]` with dense
/// products and compares it to the truncated matrix obtained by filtering.
pub fn shift_representation_check(spec: &ProcessSpec, shape: MatrixShape) -> Result<ShiftCheck> {
    let (p, n) = (shape.p, shape.n);
    if shape.entries()? > SHIFT_CHECK_MAX_ENTRIES {
        return Err(Error::InvalidParameter(format!(
            "shift representation check is limited to p*n <= {SHIFT_CHECK_MAX_ENTRIES}"
        )));
    }
    let coeffs = spec.model.coefficients(n + 1)?;
    let innovations = spec.innovations.draw(1 - n as i64, (p * n) as i64)?;
    let z = build_z(&innovations, shape)?;

    let mut selector = DenseMatrix::zeros(p, 2 * (p + 1));
    for i in 0..p {
        selector[(i, 1 + i)] = 1.0;
        selector[(i, p + 1 + i)] = 1.0;
    }
    let mut block = DenseMatrix::zeros(2 * (p + 1), 2 * n);
    for i in 0..=p {
        for t in 0..n {
            block[(i, t)] = z[(i, t)];
            block[(p + 1 + i, n + t)] = z[(i, t)];
        }
    }
    let pair = ShiftPolynomialPair::new(&coeffs, n);
    let upper = pair.chi_of_shift_transpose();
    let lower = pair.chi_bar_of_shift();
    let mut stacked = DenseMatrix::zeros(2 * n, n);
    for i in 0..n {
        for j in 0..n {
            stacked[(i, j)] = upper[(i, j)];
            stacked[(n + i, j)] = lower[(i, j)];
        }
    }
    let represented = selector.matmul(&block)?.matmul(&stacked)?;

    let filtered = build_truncated_x(spec, shape)?;
    let max_deviation = filtered.max_abs_diff(&represented);
    Ok(ShiftCheck {
        equal: max_deviation <= 1e-12,
        max_deviation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::{CoefficientModel, InnovationDistribution, InnovationSpec};
    use approx::assert_abs_diff_eq;

    fn shape(p: usize, n: usize) -> MatrixShape {
        MatrixShape::new(p, n).unwrap()
    }

    #[test]
    fn build_x_reshapes() {
        let x = build_x(&[1.0, 2.0, 3.0, 4.0], shape(2, 2)).unwrap();
        assert_eq!(x.row(0), &[1.0, 2.0]);
        assert_eq!(x.row(1), &[3.0, 4.0]);
        assert!(matches!(
            build_x(&[1.0, 2.0, 3.0], shape(2, 2)),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn white_noise_x_is_innovations() {
        let spec = ProcessSpec::white_noise(4);
        let x = simulate_x(&spec, shape(3, 5)).unwrap();
        let z = spec.innovations.draw(1, 15).unwrap();
        assert_eq!(x.as_slice(), z.values());
    }

    #[test]
    fn truncation_is_exact_for_finite_order() {
        let spec = ProcessSpec::new(
            CoefficientModel::Ma { theta: vec![0.5] },
            InnovationSpec::new(InnovationDistribution::Gaussian, 2),
        );
        let s = shape(4, 6);
        assert_eq!(simulate_x(&spec, s).unwrap(), build_truncated_x(&spec, s).unwrap());
        let wn = ProcessSpec::new(
            CoefficientModel::Explicit {
                coefficients: vec![1.0],
            },
            InnovationSpec::default(),
        );
        assert_eq!(simulate_x(&wn, s).unwrap(), build_truncated_x(&wn, s).unwrap());
    }

    #[test]
    fn truncation_error_bounded_by_tail() {
        let mut spec = ProcessSpec::new(
            CoefficientModel::Ar1 { phi: 0.5 },
            InnovationSpec::new(InnovationDistribution::Gaussian, 8),
        );
        // retain far more coefficients than the truncated matrix does
        spec.horizon = Some(200);
        let s = shape(64, 64);
        let x = simulate_x(&spec, s).unwrap();
        let xt = build_truncated_x(&spec, s).unwrap();
        let z = spec.innovations.draw(-199, 64 * 64).unwrap();
        let max_z = z.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tail: f64 = spec.model.stream().skip(65).take(200).map(f64::abs).sum();
        let dev = x.max_abs_diff(&xt);
        assert!(dev <= tail * max_z + 1e-15, "{dev} > {}", tail * max_z);
    }

    #[test]
    fn z_matrix_layout() {
        let spec = ProcessSpec::white_noise(1);
        let z = spec.innovations.draw(-1, 2).unwrap();
        let m = build_z(&z, shape(1, 2)).unwrap();
        assert_eq!(m.row(0), &[z.get(-1).unwrap(), z.get(0).unwrap()]);
        assert_eq!(m.row(1), &[z.get(1).unwrap(), z.get(2).unwrap()]);

        let s = shape(3, 4);
        let block = spec.innovations.draw(-3, 12).unwrap();
        let zm = build_z(&block, s).unwrap();
        let x = simulate_x(&spec, s).unwrap();
        for i in 0..3 {
            assert_eq!(zm.row(i + 1), x.row(i));
        }
        let short = spec.innovations.draw(0, 12).unwrap();
        assert!(matches!(build_z(&short, s), Err(Error::StreamMisaligned { .. })));

        let rad = InnovationSpec::new(InnovationDistribution::Rademacher, 3)
            .draw(-3, 12)
            .unwrap();
        assert!(build_z(&rad, s).unwrap().as_slice().iter().all(|v| v.abs() == 1.0));
    }

    #[test]
    fn omega_small_case() {
        let o = build_omega(&[10.0, 11.0, 12.0], 2);
        assert_eq!(o.row(0), &[12.0, 10.0, 11.0]);
        assert_eq!(o.row(1), &[11.0, 12.0, 10.0]);
        let o = build_omega(&[1.0, 0.5, 0.0], 2);
        let oo = o.matmul(&o.transpose()).unwrap();
        assert_eq!(oo[(0, 0)], 1.25);
        assert_eq!(oo[(1, 1)], 1.25);
        assert_eq!(oo[(0, 1)], 0.5);
        let o = build_omega(&[1.0], 5);
        assert_eq!(o.matmul(&o.transpose()).unwrap(), DenseMatrix::identity(5));
    }

    #[test]
    fn circulant_small_case() {
        let c = build_circulant(&[1.0, 2.0], 2);
        assert_eq!(c.row(0), &[2.0, 1.0]);
        assert_eq!(c.row(1), &[1.0, 2.0]);
        let c = build_circulant(&[1.0], 4);
        assert_eq!(c.matmul(&c.transpose()).unwrap(), DenseMatrix::identity(4));
    }

    #[test]
    fn omega_is_circulant_without_last_row() {
        let coeffs = [0.7, -0.2, 0.4, 0.1];
        for n in [1, 2, 3, 5, 8] {
            let o = build_omega(&coeffs, n);
            let c = build_circulant(&coeffs, n + 1);
            for i in 0..n {
                assert_eq!(o.row(i), c.row(i));
            }
            let natural = padded(&coeffs, n + 1);
            assert_eq!(c.row(n), natural.as_slice());
        }
    }

    #[test]
    fn toeplitz_examples() {
        assert_eq!(build_toeplitz_gamma(&[1.0], 3), DenseMatrix::identity(3));
        let g = build_toeplitz_gamma(&[1.0, 0.5], 2);
        assert_eq!(g.row(0), &[1.25, 0.5]);
        assert_eq!(g.row(1), &[0.5, 1.25]);
    }

    #[test]
    fn gram_examples() {
        let g = gram(&DenseMatrix::identity(2));
        assert_eq!(g.as_slice(), &[0.5, 0.0, 0.0, 0.5]);
        let ones = DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(gram(&ones).as_slice(), &[1.0, 1.0, 1.0, 1.0]);
        let x = simulate_x(&ProcessSpec::white_noise(3), shape(7, 11)).unwrap();
        let g = gram(&x);
        let direct: f64 = x.as_slice().iter().map(|v| v * v).sum::<f64>() / 7.0;
        assert_abs_diff_eq!(g.trace(), direct, epsilon = 1e-12);
        assert_eq!(g.asymmetry(), 0.0);
        // divides by the row count
        let wide = DenseMatrix::from_rows(&[vec![1.0, 1.0, 1.0]]).unwrap();
        assert_eq!(gram(&wide).as_slice(), &[3.0]);
    }

    #[test]
    fn shift_pair_invariants() {
        let pair = ShiftPolynomialPair::new(&[1.0, 2.0, 3.0], 3);
        let k = &pair.shift;
        let k3 = k.matmul(k).unwrap().matmul(k).unwrap();
        assert_eq!(k3, DenseMatrix::zeros(3, 3));
        assert_eq!(pair.chi, vec![1.0, 2.0, 3.0, 0.0]);
        assert_eq!(pair.chi_bar, vec![0.0, 3.0, 2.0, 1.0]);
    }

    #[test]
    fn shift_representation_small() {
        let spec = ProcessSpec::new(
            CoefficientModel::Explicit {
                coefficients: vec![1.0, 0.5, 0.25],
            },
            InnovationSpec::new(InnovationDistribution::Gaussian, 12),
        );
        let check = shift_representation_check(&spec, shape(1, 2)).unwrap();
        assert!(check.equal, "{check:?}");
        let ma2 = ProcessSpec::new(
            CoefficientModel::Ma {
                theta: vec![0.37, -0.81],
            },
            InnovationSpec::new(InnovationDistribution::Uniform, 4),
        );
        assert!(shift_representation_check(&ma2, shape(3, 4)).unwrap().equal);
        assert!(shift_representation_check(&ProcessSpec::white_noise(1), shape(5, 3))
            .unwrap()
            .equal);
        assert!(shift_representation_check(&ma2, shape(200, 200)).is_err());
    }

    #[test]
    fn csv_export() {
        let m = DenseMatrix::from_rows(&[vec![1.0, 2.5], vec![-3.0, 4.0]]).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "c1,c2\n1,2.5\n-3,4\n");
    }
}
