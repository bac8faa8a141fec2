use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::variant::EquationVariant;
use crate::error::{Error, Result};
use crate::process::SpectralDensity;

/// Numerical settings for the fixed-point solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub quadrature_points: usize,
    pub max_iterations: usize,
    pub damping: f64,
    pub residual_tol: f64,
    /// Smallest `Im z` used when inverting towards the real axis.
    pub epsilon_floor: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            quadrature_points: 2048,
            max_iterations: 500,
            damping: 0.5,
            residual_tol: 1e-10,
            epsilon_floor: 1e-6,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        if self.quadrature_points < 2 {
            return bad("quadrature_points must be >= 2");
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be >= 1");
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return bad("damping must lie in (0, 1]");
        }
        if !(self.residual_tol > 0.0 && self.residual_tol.is_finite()) {
            return bad("residual_tol must be positive");
        }
        if !(self.epsilon_floor > 0.0 && self.epsilon_floor.is_finite()) {
            return bad("epsilon_floor must be positive");
        }
        Ok(())
    }
}

/// Trapezoid nodes for `[0, 2 pi)`, folded using `f(w) = f(2 pi - w)`.
#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    omega: Vec<f64>,
    values: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureGrid {
    pub fn new(f: &SpectralDensity, points: usize) -> Result<Self> {
        if points < 2 {
            return Err(Error::InvalidParameter("quadrature_points must be >= 2".into()));
        }
        let h = 1.0 / points as f64;
        let mut omega = Vec::with_capacity(points / 2 + 1);
        let mut values = Vec::with_capacity(points / 2 + 1);
        let mut weights = Vec::with_capacity(points / 2 + 1);
        for k in 0..=points / 2 {
            let w = 2.0 * PI * k as f64 * h;
            let v = f.eval(w);
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "spectral density is {v} at omega = {w}"
                )));
            }
            let mirrored = k != 0 && 2 * k != points;
            omega.push(w);
            values.push(v);
            weights.push(if mirrored { 2.0 * h } else { h });
        }
        // A flat density needs only one node.
        if values.iter().all(|&v| v == values[0]) {
            return Ok(QuadratureGrid {
                omega: vec![0.0],
                values: vec![values[0]],
                weights: vec![1.0],
            });
        }
        Ok(QuadratureGrid {
            omega,
            values,
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// `(1/2 pi) int f/(1 + f s)` and `(1/2 pi) int f^2/(1 + f s)^2`.
    fn moments(&self, s: Complex64) -> Result<(Complex64, Complex64)> {
        let mut i1 = Complex64::new(0.0, 0.0);
        let mut i2 = Complex64::new(0.0, 0.0);
        for ((&f, &w), &om) in self.values.iter().zip(&self.weights).zip(&self.omega) {
            let d = 1.0 + f * s;
            if d.norm() < 1e-12 {
                return Err(Error::SingularIntegrand { omega: om });
            }
            let q = f / d;
            i1 += w * q;
            i2 += w * q * q;
        }
        Ok((i1, i2))
    }

    /// Variant-normalized `int f/(1 + f s) dw`.
    pub fn integral(&self, s: Complex64, variant: EquationVariant) -> Result<Complex64> {
        Ok(self.moments(s)?.0 * variant.integral_factor())
    }
}

/// Variant-normalized `int_0^{2pi} f/(1 + f s) dw` on a fresh trapezoid grid.
pub fn quadrature_integral(
    f: &SpectralDensity,
    s: Complex64,
    variant: EquationVariant,
    config: &SolverConfig,
) -> Result<Complex64> {
    QuadratureGrid::new(f, config.quadrature_points)?.integral(s, variant)
}

/// Fixed-point solution in the equation's own coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoint {
    pub w: Complex64,
    pub residual: f64,
    pub iterations: usize,
}

const MAX_RESTARTS: usize = 30;
const NEWTON_STEPS: usize = 100;
const POLISH_STEPS: usize = 2;

/// Solver for `1/w = -z + r I(w)` with the spectral density sampled once.
#[derive(Debug, Clone)]
pub struct StieltjesSolver {
    grid: QuadratureGrid,
    y: f64,
    variant: EquationVariant,
    config: SolverConfig,
    ratio: f64,
    scale: f64,
}

impl StieltjesSolver {
    pub fn new(f: &SpectralDensity, y: f64, variant: EquationVariant, config: SolverConfig) -> Result<Self> {
        if !(y > 0.0 && y.is_finite()) {
            return Err(Error::InvalidParameter(format!("aspect ratio must be positive, got {y}")));
        }
        config.validate()?;
        let grid = QuadratureGrid::new(f, config.quadrature_points)?;
        Ok(StieltjesSolver {
            grid,
            y,
            variant,
            config,
            ratio: variant.ratio_factor(y),
            scale: variant.integral_factor(),
        })
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn variant(&self) -> EquationVariant {
        self.variant
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn grid(&self) -> &QuadratureGrid {
        &self.grid
    }

    /// `r * c`: the effective weight of the frequency mean.
    pub fn effective_ratio(&self) -> f64 {
        self.ratio * self.scale
    }

    /// `|1/w + z - r I(w)| / max(1, |z|)`.
    pub fn residual(&self, z: Complex64, w: Complex64) -> Result<f64> {
        let (i1, _) = self.grid.moments(w)?;
        Ok(self.scaled(z, w.inv() + z - self.effective_ratio() * i1))
    }

    fn scaled(&self, z: Complex64, f: Complex64) -> f64 {
        f.norm() / z.norm().max(1.0)
    }

    fn check_z(z: Complex64) -> Result<()> {
        if z.im > 0.0 && z.re.is_finite() && z.im.is_finite() {
            Ok(())
        } else {
            Err(Error::NotUpperHalfPlane { z })
        }
    }

    /// Stieltjes transform of the `p x p` limit at `z`, cold start `-1/z`.
    pub fn solve(&self, z: Complex64) -> Result<Complex64> {
        Self::check_z(z)?;
        self.solve_from(z, -z.inv())
    }

    /// As [`solve`](Self::solve) from a caller-supplied start in the upper half plane.
    pub fn solve_from(&self, z: Complex64, init: Complex64) -> Result<Complex64> {
        let fp = self.fixed_point(z, init)?;
        Ok(self.variant.to_direct(fp.w, z, self.y))
    }

    /// Damped iteration `w <- (1 - a) w + a / (-z + r I(w))`. The damping is
    /// halved and the iteration restarted whenever an iterate leaves the upper
    /// half plane. The result, or the last iterate after `max_iterations`,
    /// is refined by [`newton`](Self::newton).
    pub fn fixed_point(&self, z: Complex64, init: Complex64) -> Result<FixedPoint> {
        Self::check_z(z)?;
        if !(init.im > 0.0) {
            return Err(Error::NotUpperHalfPlane { z: init });
        }
        let r = self.effective_ratio();
        let tol = self.config.residual_tol;
        let mut alpha = self.config.damping;
        let mut spent = 0;
        let mut last = init;
        'restart: for _ in 0..=MAX_RESTARTS {
            let mut w = init;
            for _ in 0..self.config.max_iterations {
                spent += 1;
                let (i1, _) = self.grid.moments(w)?;
                let rhs = -z + r * i1;
                let residual = self.scaled(z, w.inv() - rhs);
                if residual <= tol {
                    return self.newton(z, w, spent);
                }
                let next = (1.0 - alpha) * w + alpha * rhs.inv();
                if !(next.im > 0.0 && next.re.is_finite() && next.im.is_finite()) {
                    alpha *= 0.5;
                    continue 'restart;
                }
                w = next;
            }
            last = w;
            break;
        }
        self.newton(z, last, spent)
    }

    /// Newton on `F(w) = 1/w + z - r I(w)` with backtracking that keeps
    /// `Im w > 0` and decreases `|F|`. Stops after a few extra steps past
    /// `residual_tol`, or as soon as a step no longer lowers the residual.
    pub fn newton(&self, z: Complex64, init: Complex64, spent: usize) -> Result<FixedPoint> {
        let r = self.effective_ratio();
        let tol = self.config.residual_tol;
        let eval = |w: Complex64| -> Result<(Complex64, Complex64)> {
            let (i1, i2) = self.grid.moments(w)?;
            let winv = w.inv();
            Ok((winv + z - r * i1, -winv * winv + r * i2))
        };
        let mut w = init;
        let (mut f, mut df) = eval(w)?;
        let mut residual = self.scaled(z, f);
        let mut polish = 0;
        for step in 0..NEWTON_STEPS {
            // once within tolerance, keep stepping while the residual still
            // drops: the solution error is residual / |F'|, large near edges
            if residual <= tol {
                polish += 1;
                if polish > POLISH_STEPS || residual == 0.0 {
                    return Ok(FixedPoint {
                        w,
                        residual,
                        iterations: spent + step,
                    });
                }
            }
            if df.norm() == 0.0 || !df.re.is_finite() || !df.im.is_finite() {
                break;
            }
            let delta = -f / df;
            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let cand = w + lambda * delta;
                if cand.im > 0.0 {
                    if let Ok((fc, dfc)) = eval(cand) {
                        let rc = self.scaled(z, fc);
                        if rc < residual {
                            w = cand;
                            f = fc;
                            df = dfc;
                            residual = rc;
                            accepted = true;
                            break;
                        }
                    }
                }
                lambda *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        if residual <= tol {
            return Ok(FixedPoint {
                w,
                residual,
                iterations: spent + NEWTON_STEPS,
            });
        }
        Err(Error::SolverNoConvergence {
            z,
            residual,
            iterations: spent + NEWTON_STEPS,
        })
    }

    /// Warm-started solve used along grids: Newton from `init`, falling back
    /// to continuation from `Im z = 1` down to `Im z`.
    pub fn fixed_point_near(&self, z: Complex64, init: Option<Complex64>) -> Result<FixedPoint> {
        Self::check_z(z)?;
        if let Some(w0) = init.filter(|w| w.im > 0.0) {
            if let Ok(fp) = self.newton(z, w0, 0) {
                return Ok(fp);
            }
        }
        self.continuation(z)
    }

    fn continuation(&self, z: Complex64) -> Result<FixedPoint> {
        let mut eta = z.im.max(1.0);
        let start = Complex64::new(z.re, eta);
        let mut fp = self.fixed_point(start, -start.inv())?;
        let mut spent = fp.iterations;
        while eta > z.im {
            eta = (eta * 0.1).max(z.im);
            let zz = Complex64::new(z.re, eta);
            fp = match self.newton(zz, fp.w, spent) {
                Ok(ok) => ok,
                Err(_) => self.fixed_point(zz, fp.w)?,
            };
            spent = fp.iterations;
        }
        Ok(fp)
    }

    /// `rho(x) = (2 Im s(x + i e) - Im s(x + 2 i e)) / pi`, with the transform at
    /// `x + i e` and the solutions in equation coordinates for warm starts.
    pub fn density_point(
        &self,
        x: f64,
        warm: Option<(Complex64, Complex64)>,
    ) -> Result<DensityPoint> {
        let eps = self.config.epsilon_floor;
        let z1 = Complex64::new(x, eps);
        let z2 = Complex64::new(x, 2.0 * eps);
        let w2 = self.fixed_point_near(z2, warm.map(|w| w.1))?.w;
        let w1 = self.fixed_point_near(z1, Some(warm.map_or(w2, |w| w.0)))?.w;
        let s1 = self.variant.to_direct(w1, z1, self.y);
        let s2 = self.variant.to_direct(w2, z2, self.y);
        Ok(DensityPoint {
            s: s1,
            rho: (2.0 * s1.im - s2.im) / PI,
            warm: (w1, w2),
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DensityPoint {
    pub s: Complex64,
    /// Extrapolated density, not yet clipped.
    pub rho: f64,
    pub warm: (Complex64, Complex64),
}

/// Stieltjes transform of the limiting law at one `z`.
pub fn solve_stieltjes(
    f: &SpectralDensity,
    y: f64,
    z: Complex64,
    variant: EquationVariant,
    config: &SolverConfig,
) -> Result<Complex64> {
    StieltjesSolver::new(f, y, variant, *config)?.solve(z)
}
