//! Empirical spectral distributions and distances between distributions.

mod eigen;

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

pub use eigen::{symmetric_eigenvalues, SWEEPS_PER_ROW, SYMMETRY_TOL};

/// Uniform evaluation points added over the support hull when a
/// continuous distribution takes part in a KS comparison.
pub const KS_GRID_POINTS: usize = 4096;

/// A cumulative distribution function on the real line.
pub trait Cdf {
    /// Right-continuous `F(x)`.
    fn cdf(&self, x: f64) -> f64;

    /// `F(x-)`.
    fn cdf_left(&self, x: f64) -> f64 {
        self.cdf(x.next_down())
    }

    /// Jump locations; empty for continuous laws.
    fn jump_points(&self) -> Vec<f64> {
        Vec::new()
    }

    /// An interval `[a, b]` outside of which `F` is constant.
    fn support_hull(&self) -> (f64, f64);
}

impl<T: Cdf + ?Sized> Cdf for &T {
    fn cdf(&self, x: f64) -> f64 {
        (**self).cdf(x)
    }
    fn cdf_left(&self, x: f64) -> f64 {
        (**self).cdf_left(x)
    }
    fn jump_points(&self) -> Vec<f64> {
        (**self).jump_points()
    }
    fn support_hull(&self) -> (f64, f64) {
        (**self).support_hull()
    }
}

/// Sorted eigenvalues with distribution views.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalSpectrum {
    eigenvalues: Vec<f64>,
}

impl EmpiricalSpectrum {
    pub fn from_values(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("spectrum needs at least one value".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite eigenvalue".into()));
        }
        values.sort_by(f64::total_cmp);
        Ok(EmpiricalSpectrum { eigenvalues: values })
    }

    /// Eigenvalues of a symmetric matrix.
    pub fn from_symmetric(m: &DenseMatrix) -> Result<Self> {
        Self::from_values(symmetric_eigenvalues(m)?)
    }

    /// Eigenvalues of a positive semidefinite matrix. Values within
    /// `64 m eps max|lambda|` of zero are set to exactly zero, so that a
    /// rank-deficient Gram matrix has its null space at the origin rather
    /// than scattered on both sides of it by rounding.
    pub fn from_psd(m: &DenseMatrix) -> Result<Self> {
        let mut values = symmetric_eigenvalues(m)?;
        let top = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let tol = 64.0 * m.rows() as f64 * f64::EPSILON * top;
        for v in &mut values {
            if v.abs() <= tol {
                *v = 0.0;
            }
        }
        Self::from_values(values)
    }

    /// Union of several spectra, each eigenvalue weighted equally.
    pub fn pooled<'a, I: IntoIterator<Item = &'a EmpiricalSpectrum>>(spectra: I) -> Result<Self> {
        Self::from_values(
            spectra
                .into_iter()
                .flat_map(|s| s.eigenvalues.iter().copied())
                .collect(),
        )
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues[self.eigenvalues.len() - 1]
    }

    pub fn sum(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    /// `p^{-1} sum_i (lambda_i - z)^{-1}` for `Im z > 0`.
    pub fn stieltjes(&self, z: Complex64) -> Result<Complex64> {
        if !(z.im > 0.0) {
            return Err(Error::NotUpperHalfPlane { z });
        }
        let total: Complex64 = self
            .eigenvalues
            .iter()
            .map(|&l| (Complex64::new(l, 0.0) - z).inv())
            .sum();
        Ok(total / self.len() as f64)
    }

    /// `(bin_left, bin_right, mass)` over `bins` equal bins spanning `[lo, hi]`;
    /// values on the right edge fall in the last bin.
    pub fn histogram(&self, bins: usize, lo: f64, hi: f64) -> Vec<(f64, f64, f64)> {
        let width = (hi - lo) / bins as f64;
        let mut counts = vec![0usize; bins];
        for &v in &self.eigenvalues {
            if v < lo || v > hi {
                continue;
            }
            let k = (((v - lo) / width) as usize).min(bins - 1);
            counts[k] += 1;
        }
        let p = self.len() as f64;
        counts
            .into_iter()
            .enumerate()
            .map(|(k, c)| (lo + k as f64 * width, lo + (k + 1) as f64 * width, c as f64 / p))
            .collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "lambda")?;
        for v in &self.eigenvalues {
            writeln!(w, "{v}")?;
        }
        Ok(())
    }

    pub fn write_histogram_csv<W: Write>(&self, mut w: W, bins: usize) -> Result<()> {
        writeln!(w, "bin_left,bin_right,mass")?;
        for (a, b, m) in self.histogram(bins, self.min(), self.max()) {
            writeln!(w, "{a},{b},{m}")?;
        }
        Ok(())
    }
}

impl Cdf for EmpiricalSpectrum {
    fn cdf(&self, x: f64) -> f64 {
        self.eigenvalues.partition_point(|&l| l <= x) as f64 / self.len() as f64
    }

    fn cdf_left(&self, x: f64) -> f64 {
        self.eigenvalues.partition_point(|&l| l < x) as f64 / self.len() as f64
    }

    fn jump_points(&self) -> Vec<f64> {
        let mut pts = self.eigenvalues.clone();
        pts.dedup();
        pts
    }

    fn support_hull(&self) -> (f64, f64) {
        (self.min(), self.max())
    }
}

fn joint_hull<F: Cdf, G: Cdf>(f: &F, g: &G) -> (f64, f64) {
    let (a1, b1) = f.support_hull();
    let (a2, b2) = g.support_hull();
    (a1.min(a2), b1.max(b2))
}

/// `sup_x |F(x) - G(x)|`, evaluated on both sides of every jump of either
/// distribution plus `grid_points` uniform points over the joint hull.
pub fn ks_distance<F: Cdf, G: Cdf>(f: &F, g: &G, grid_points: usize) -> f64 {
    let mut points = f.jump_points();
    points.extend(g.jump_points());
    let (lo, hi) = joint_hull(f, g);
    if grid_points > 1 && hi > lo {
        let step = (hi - lo) / (grid_points - 1) as f64;
        points.extend((0..grid_points).map(|k| lo + k as f64 * step));
    }
    points
        .into_iter()
        .map(|x| {
            let right = (f.cdf(x) - g.cdf(x)).abs();
            let left = (f.cdf_left(x) - g.cdf_left(x)).abs();
            right.max(left)
        })
        .fold(0.0, f64::max)
        .min(1.0)
}

/// `int |F(x) - G(x)| dx` by adaptive trapezoid between consecutive jumps.
pub fn wasserstein1<F: Cdf, G: Cdf>(f: &F, g: &G) -> f64 {
    let (lo, hi) = joint_hull(f, g);
    if !(hi > lo) {
        return 0.0;
    }
    let mut breaks = f.jump_points();
    breaks.extend(g.jump_points());
    const BASE_PANELS: usize = 64;
    breaks.extend((0..=BASE_PANELS).map(|k| lo + (hi - lo) * k as f64 / BASE_PANELS as f64));
    breaks.retain(|x| *x >= lo && *x <= hi);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let diff = |x: f64| (f.cdf(x) - g.cdf(x)).abs();
    let tol = 1e-10 * (hi - lo);
    breaks
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let fa = diff(a);
            let fb = (f.cdf_left(b) - g.cdf_left(b)).abs();
            adaptive_trapezoid(&diff, a, b, fa, fb, tol * (b - a) / (hi - lo), 40)
        })
        .sum()
}

fn adaptive_trapezoid<H: Fn(f64) -> f64>(
    h: &H,
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let fm = h(m);
    let coarse = 0.5 * (b - a) * (fa + fb);
    let fine = 0.25 * (b - a) * (fa + 2.0 * fm + fb);
    if depth == 0 || (fine - coarse).abs() <= tol || m <= a || m >= b {
        fine
    } else {
        adaptive_trapezoid(h, a, m, fa, fm, 0.5 * tol, depth - 1)
            + adaptive_trapezoid(h, m, b, fm, fb, 0.5 * tol, depth - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(v: &[f64]) -> EmpiricalSpectrum {
        EmpiricalSpectrum::from_values(v.to_vec()).unwrap()
    }

    #[test]
    fn cdf_examples() {
        let s = spec(&[3.0, 1.0]);
        assert_eq!(s.cdf(2.0), 0.5);
        assert_eq!(s.cdf(0.0), 0.0);
        assert_eq!(s.cdf(5.0), 1.0);
        assert_eq!(s.cdf(1.0), 0.5);
        assert_eq!(s.cdf_left(1.0), 0.0);
        assert_eq!(spec(&[1.0, 1.0, 1.0]).cdf(1.0), 1.0);
    }

    #[test]
    fn stieltjes_examples() {
        let i = Complex64::new(0.0, 1.0);
        let s = spec(&[1.0]).stieltjes(i).unwrap();
        assert!((s - Complex64::new(0.5, 0.5)).norm() < 1e-15);
        let s = spec(&[0.0]).stieltjes(i).unwrap();
        assert!((s - i).norm() < 1e-15);
        let big = Complex64::new(0.0, 1e6);
        let sp = spec(&[0.3, 2.0, 5.0]);
        let s = sp.stieltjes(big).unwrap();
        let asym = -big.inv();
        assert!((s - asym).norm() / asym.norm() <= 1e-4 * sp.max());
        assert!(matches!(
            sp.stieltjes(Complex64::new(1.0, 0.0)),
            Err(Error::NotUpperHalfPlane { .. })
        ));
    }

    #[test]
    fn ks_examples() {
        let a = spec(&[0.0, 1.0, 4.0]);
        assert_eq!(ks_distance(&a, &a, KS_GRID_POINTS), 0.0);
        assert_eq!(ks_distance(&spec(&[0.0]), &spec(&[1.0]), 0), 1.0);
        assert_eq!(ks_distance(&spec(&[0.0, 1.0]), &spec(&[0.0, 2.0]), 0), 0.5);
    }

    /// Brute force: scan a fine grid plus every jump from both sides.
    fn ks_brute(f: &EmpiricalSpectrum, g: &EmpiricalSpectrum) -> f64 {
        let mut best = 0.0f64;
        let lo = f.min().min(g.min()) - 1.0;
        let hi = f.max().max(g.max()) + 1.0;
        for k in 0..=20_000 {
            let x = lo + (hi - lo) * k as f64 / 20_000.0;
            best = best.max((f.cdf(x) - g.cdf(x)).abs());
        }
        for &x in f.eigenvalues().iter().chain(g.eigenvalues()) {
            for y in [x - 1e-9, x, x + 1e-9] {
                best = best.max((f.cdf(y) - g.cdf(y)).abs());
            }
        }
        best
    }

    #[test]
    fn ks_matches_brute_force() {
        let f = spec(&[0.1, 0.5, 0.5, 0.9, 1.7]);
        let g = spec(&[0.2, 0.4, 1.1]);
        assert!((ks_distance(&f, &g, 0) - ks_brute(&f, &g)).abs() < 1e-12);
    }

    #[test]
    fn wasserstein_examples() {
        let a = spec(&[0.0, 1.0, 4.0]);
        assert!(wasserstein1(&a, &a).abs() < 1e-12);
        assert!((wasserstein1(&spec(&[0.0]), &spec(&[1.0])) - 1.0).abs() < 1e-12);
        assert!((wasserstein1(&spec(&[0.0, 2.0]), &spec(&[1.0, 1.0])) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn wasserstein_equals_sorted_difference() {
        // for equal-size empirical laws W1 is the mean absolute difference of order statistics
        let f = spec(&[0.3, 1.2, 2.2, 5.0]);
        let g = spec(&[0.0, 1.0, 3.0, 3.5]);
        let expected = f
            .eigenvalues()
            .iter()
            .zip(g.eigenvalues())
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            / 4.0;
        assert!((wasserstein1(&f, &g) - expected).abs() < 1e-10);
    }

    #[test]
    fn histogram_masses() {
        let s = spec(&[0.0, 0.1, 0.5, 1.0]);
        let h = s.histogram(2, 0.0, 1.0);
        assert_eq!(h, vec![(0.0, 0.5, 0.5), (0.5, 1.0, 0.5)]);
        let mut buf = Vec::new();
        s.write_histogram_csv(&mut buf, 2).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("bin_left,bin_right,mass\n"));
    }
}
