use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectra::Cdf;

/// Marchenko–Pastur law with ratio `y` and entry variance `sigma2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarchenkoPastur {
    ratio: f64,
    variance: f64,
}

/// Simpson panels for the CDF integral in the angular variable.
const CDF_PANELS: usize = 256;

impl MarchenkoPastur {
    pub fn new(ratio: f64, variance: f64) -> Result<Self> {
        if !(ratio > 0.0 && ratio.is_finite()) {
            return Err(Error::InvalidParameter(format!("MP ratio must be positive, got {ratio}")));
        }
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "MP variance must be positive, got {variance}"
            )));
        }
        Ok(MarchenkoPastur { ratio, variance })
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn lower_edge(&self) -> f64 {
        self.variance * (1.0 - self.ratio.sqrt()).powi(2)
    }

    pub fn upper_edge(&self) -> f64 {
        self.variance * (1.0 + self.ratio.sqrt()).powi(2)
    }

    /// Mass at zero, `max(0, 1 - 1/y)`.
    pub fn atom(&self) -> f64 {
        (1.0 - 1.0 / self.ratio).max(0.0)
    }

    /// Density of the absolutely continuous part.
    pub fn density(&self, x: f64) -> f64 {
        let (a, b) = (self.lower_edge(), self.upper_edge());
        if x <= a || x >= b || x <= 0.0 {
            return 0.0;
        }
        ((b - x) * (x - a)).sqrt() / (2.0 * PI * self.variance * self.ratio * x)
    }

    /// Continuous mass on `[a, x]` via `x = a + (b - a)(1 - cos t)/2`, which
    /// turns the square-root edges into a smooth integrand.
    fn continuous_mass(&self, x: f64) -> f64 {
        let (a, b) = (self.lower_edge(), self.upper_edge());
        if x <= a {
            return 0.0;
        }
        let half = 0.5 * (b - a);
        let theta_max = if x >= b {
            PI
        } else {
            (1.0 - (x - a) / half).clamp(-1.0, 1.0).acos()
        };
        let norm = 2.0 * PI * self.variance * self.ratio;
        let g = |t: f64| {
            let (s, c) = t.sin_cos();
            let xt = a + half * (1.0 - c);
            if xt <= 0.0 {
                // a = 0 and t = 0: limit of sin^2 t / (1 - cos t) is 2
                return half * 2.0 / norm;
            }
            half * half * s * s / (norm * xt)
        };
        let n = CDF_PANELS;
        let h = theta_max / n as f64;
        let mut acc = g(0.0) + g(theta_max);
        for k in 1..n {
            acc += if k % 2 == 1 { 4.0 } else { 2.0 } * g(k as f64 * h);
        }
        acc * h / 3.0
    }

    /// Stieltjes transform: root of `y s2 z s^2 + (z - s2 (1 - y)) s + 1 = 0`
    /// in the upper half plane.
    pub fn stieltjes(&self, z: Complex64) -> Result<Complex64> {
        if !(z.im > 0.0) {
            return Err(Error::NotUpperHalfPlane { z });
        }
        let a = self.ratio * self.variance * z;
        let b = z - self.variance * (1.0 - self.ratio);
        let disc = (b * b - 4.0 * a).sqrt();
        let r1 = (-b + disc) / (2.0 * a);
        let r2 = (-b - disc) / (2.0 * a);
        Ok(if r1.im >= r2.im { r1 } else { r2 })
    }
}

impl Cdf for MarchenkoPastur {
    fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        if x >= self.upper_edge() {
            return 1.0;
        }
        (self.atom() + self.continuous_mass(x)).min(1.0)
    }

    fn cdf_left(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        self.cdf(x)
    }

    fn jump_points(&self) -> Vec<f64> {
        if self.atom() > 0.0 {
            vec![0.0]
        } else {
            Vec::new()
        }
    }

    fn support_hull(&self) -> (f64, f64) {
        let lo = if self.atom() > 0.0 { 0.0 } else { self.lower_edge() };
        (lo, self.upper_edge())
    }
}

/// Closed-form Marchenko–Pastur law.
pub fn mp_oracle(ratio: f64, variance: f64) -> Result<MarchenkoPastur> {
    MarchenkoPastur::new(ratio, variance)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_ratio_values() {
        let mp = mp_oracle(1.0, 1.0).unwrap();
        assert!((mp.density(2.0) - 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert_eq!((mp.lower_edge(), mp.upper_edge()), (0.0, 4.0));
        assert_eq!(mp.atom(), 0.0);
        assert!((mp.cdf(4.0) - 1.0).abs() < 1e-12);
        assert_eq!(mp.cdf(-1e-9), 0.0);
        // F(2) = 1/2 + 1/pi for the quarter-circle-like MP_1 law
        assert!((mp.cdf(2.0) - (0.5 + 1.0 / PI)).abs() < 1e-9, "{}", mp.cdf(2.0));
    }

    #[test]
    fn rank_deficient_atom() {
        let mp = mp_oracle(4.0, 1.0).unwrap();
        assert!((mp.atom() - 0.75).abs() < 1e-15);
        assert!((mp.cdf(mp.upper_edge() - 1e-12) - 1.0).abs() < 1e-8);
        assert_eq!(mp.cdf_left(0.0), 0.0);
        assert!((mp.cdf(0.0) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn cdf_matches_brute_force_integral() {
        for &(y, s2) in &[(0.25, 1.0), (0.5, 2.0), (2.0, 0.5), (1.0, 1.3)] {
            let mp = mp_oracle(y, s2).unwrap();
            let (a, b) = (mp.lower_edge(), mp.upper_edge());
            let x = a + 0.37 * (b - a);
            // midpoint rule in u = sqrt(x - a), which absorbs the edge singularity
            let m = 400_000;
            let h = (x - a).sqrt() / m as f64;
            let brute: f64 = (0..m)
                .map(|k| {
                    let u = (k as f64 + 0.5) * h;
                    2.0 * u * mp.density(a + u * u) * h
                })
                .sum();
            assert!((mp.cdf(x) - mp.atom() - brute).abs() < 2e-5, "y={y}");
            assert!((mp.continuous_mass(b) - (1.0 - mp.atom())).abs() < 1e-10, "y={y}");
        }
    }

    #[test]
    fn stieltjes_matches_density_inversion() {
        let mp = mp_oracle(0.5, 1.0).unwrap();
        let s = mp.stieltjes(Complex64::new(1.2, 1e-9)).unwrap();
        assert!((s.im / PI - mp.density(1.2)).abs() < 1e-7);
        let z = Complex64::new(0.3, 2.0);
        let s = mp.stieltjes(z).unwrap();
        let resid = 0.5 * z * s * s + (z - 0.5) * s + 1.0;
        assert!(resid.norm() < 1e-13 && s.im > 0.0);
    }
}
