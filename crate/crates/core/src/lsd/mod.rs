//! Limiting spectral distribution: the Stieltjes fixed-point equation, its
//! inversion to a density and CDF, and the Marchenko–Pastur reference law.

mod mp;
mod solver;
mod variant;

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::process::SpectralDensity;
use crate::spectra::Cdf;

pub use mp::{mp_oracle, MarchenkoPastur};
pub use solver::{
    quadrature_integral, solve_stieltjes, DensityPoint, FixedPoint, QuadratureGrid, SolverConfig,
    StieltjesSolver,
};
pub use variant::{EquationVariant, Normalization, RatioReading, TransformRole};

/// Grid points are treated as inside the support above this density.
pub const DENSITY_FLOOR: f64 = 1e-6;

/// First grid point of an [`LsdSolution`] in units of `epsilon_floor`.
const HEAD_EPSILONS: f64 = 3000.0;

/// Consecutive grid points sharing a warm-started solver chain.
const CHUNK: usize = 64;

/// Evaluation grid for [`LsdSolution::compute`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LsdGrid {
    /// Number of positive grid points.
    pub points: usize,
    /// Right end of the grid; estimated from the density's maximum if unset.
    pub x_max: Option<f64>,
}

impl Default for LsdGrid {
    fn default() -> Self {
        LsdGrid {
            points: 1200,
            x_max: None,
        }
    }
}

/// Density samples `rho(x)` on an increasing positive grid (unclipped).
pub fn lsd_density(
    f: &SpectralDensity,
    y: f64,
    x_grid: &[f64],
    variant: EquationVariant,
    config: &SolverConfig,
) -> Result<Vec<f64>> {
    let solver = StieltjesSolver::new(f, y, variant, *config)?;
    Ok(density_samples(&solver, x_grid)?
        .into_iter()
        .map(|p| p.rho)
        .collect())
}

fn check_grid(x_grid: &[f64]) -> Result<()> {
    if x_grid.is_empty() {
        return Err(Error::InvalidParameter("empty x grid".into()));
    }
    if !(x_grid[0] > 0.0) || x_grid.windows(2).any(|w| !(w[1] > w[0])) || !x_grid.iter().all(|x| x.is_finite()) {
        return Err(Error::InvalidParameter(
            "x grid must be positive, finite and strictly increasing".into(),
        ));
    }
    Ok(())
}

fn density_samples(solver: &StieltjesSolver, x_grid: &[f64]) -> Result<Vec<DensityPoint>> {
    check_grid(x_grid)?;
    let chunks: Vec<Vec<DensityPoint>> = x_grid
        .par_chunks(CHUNK)
        .map(|xs| {
            let mut warm = None;
            let mut out = Vec::with_capacity(xs.len());
            for &x in xs {
                let p = solver.density_point(x, warm)?;
                warm = Some(p.warm);
                out.push(p);
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(chunks.into_iter().flatten().collect())
}

/// Limiting law on a grid uniform in `sqrt(x)`, so that hard edges at zero
/// are resolved.
#[derive(Debug, Clone, Serialize)]
pub struct LsdSolution {
    pub y: f64,
    pub variant: EquationVariant,
    pub grid: Vec<f64>,
    pub s_re: Vec<f64>,
    pub s_im: Vec<f64>,
    /// Clipped at zero.
    pub density: Vec<f64>,
    pub cdf: Vec<f64>,
    pub atom: f64,
    pub support: (f64, f64),
    /// Integrated continuous mass.
    pub mass: f64,
    /// Smallest density sample before clipping.
    pub min_raw_density: f64,
    /// `sqrt` of the first grid point.
    #[serde(skip)]
    u0: f64,
    /// Spacing of the grid in `sqrt(x)`.
    #[serde(skip)]
    du: f64,
    /// Cumulative continuous mass at each grid point.
    #[serde(skip)]
    cumulative: Vec<f64>,
}

impl LsdSolution {
    pub fn compute(
        f: &SpectralDensity,
        y: f64,
        variant: EquationVariant,
        config: &SolverConfig,
        grid: &LsdGrid,
    ) -> Result<Self> {
        let solver = StieltjesSolver::new(f, y, variant, *config)?;
        Self::from_solver(&solver, grid)
    }

    pub fn from_solver(solver: &StieltjesSolver, grid: &LsdGrid) -> Result<Self> {
        if grid.points < 2 {
            return Err(Error::InvalidParameter("LSD grid needs >= 2 points".into()));
        }
        let x_max = match grid.x_max {
            Some(v) if v > 0.0 && v.is_finite() => v,
            Some(v) => return Err(Error::InvalidParameter(format!("x_max must be positive, got {v}"))),
            None => default_x_max(solver),
        };
        let n = grid.points;
        // Below a few thousand epsilon the regularized inversion still sees
        // the Lorentzian tail of any atom at zero; the head panel [0, u0]
        // is extrapolated instead.
        let x0 = (HEAD_EPSILONS * solver.config().epsilon_floor).min(1e-3 * x_max);
        let u0 = x0.sqrt();
        let du = (x_max.sqrt() - u0) / (n - 1) as f64;
        let xs: Vec<f64> = (0..n).map(|k| (u0 + k as f64 * du).powi(2)).collect();
        let samples = density_samples(solver, &xs)?;

        let min_raw_density = samples.iter().map(|p| p.rho).fold(f64::INFINITY, f64::min);
        let density: Vec<f64> = samples.iter().map(|p| p.rho.max(0.0)).collect();
        // F(x) - atom = int_0^{sqrt x} 2u rho(u^2) du
        let g: Vec<f64> = density
            .iter()
            .enumerate()
            .map(|(k, r)| 2.0 * (u0 + k as f64 * du) * r)
            .collect();
        let mut cumulative = Vec::with_capacity(n);
        let mut acc = g[0] * u0;
        cumulative.push(acc);
        for k in 1..n {
            acc += 0.5 * du * (g[k - 1] + g[k]);
            cumulative.push(acc);
        }
        let mass = acc;
        let base = 1.0 - mass;
        let cdf = cumulative.iter().map(|c| (base + c).clamp(0.0, 1.0)).collect();
        let mut sol = LsdSolution {
            y: solver.y(),
            variant: solver.variant(),
            s_re: samples.iter().map(|p| p.s.re).collect(),
            s_im: samples.iter().map(|p| p.s.im).collect(),
            grid: xs,
            density,
            cdf,
            atom: base.clamp(0.0, 1.0),
            support: (0.0, 0.0),
            mass,
            min_raw_density,
            u0,
            du,
            cumulative,
        };
        sol.support = support_estimate(&sol, DENSITY_FLOOR);
        Ok(sol)
    }

    fn base(&self) -> f64 {
        1.0 - self.mass
    }

    fn g(&self, k: usize) -> f64 {
        2.0 * (self.u0 + k as f64 * self.du) * self.density[k]
    }

    /// CDF at `x`; exact for the piecewise-linear integrand in `sqrt(x)`.
    pub fn cdf_at(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        let u = x.sqrt();
        let n = self.grid.len();
        let v = if u < self.u0 {
            self.g(0) * u
        } else {
            let pos = (u - self.u0) / self.du;
            if pos >= (n - 1) as f64 {
                self.mass
            } else {
                let k = pos.floor() as usize;
                let t = u - (self.u0 + k as f64 * self.du);
                let (g0, g1) = (self.g(k), self.g(k + 1));
                self.cumulative[k] + g0 * t + (g1 - g0) * t * t / (2.0 * self.du)
            }
        };
        (self.base() + v).clamp(0.0, 1.0)
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }

    /// `x,rho` rows.
    pub fn write_density_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,rho")?;
        for (x, r) in self.grid.iter().zip(&self.density) {
            writeln!(w, "{x},{r}")?;
        }
        Ok(())
    }

    /// `x,F` rows.
    pub fn write_cdf_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,F")?;
        for (x, c) in self.grid.iter().zip(&self.cdf) {
            writeln!(w, "{x},{c}")?;
        }
        Ok(())
    }
}

/// Upper grid end: MP-type edge bound `max f (1 + sqrt(r c))^2` with room to spare.
fn default_x_max(solver: &StieltjesSolver) -> f64 {
    let r = solver.effective_ratio();
    let fmax = solver.grid().max_value().max(f64::MIN_POSITIVE);
    // the companion conversion leaves the nonzero support unchanged
    1.15 * fmax * (1.0 + r.sqrt()).powi(2)
}

impl Cdf for LsdSolution {
    fn cdf(&self, x: f64) -> f64 {
        self.cdf_at(x)
    }

    fn cdf_left(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            self.cdf_at(x)
        }
    }

    fn jump_points(&self) -> Vec<f64> {
        if self.atom > 0.0 {
            vec![0.0]
        } else {
            Vec::new()
        }
    }

    fn support_hull(&self) -> (f64, f64) {
        (0.0, *self.grid.last().unwrap_or(&0.0))
    }
}

/// CDF view of a solution.
pub fn lsd_cdf(solution: &LsdSolution) -> &impl Cdf {
    solution
}

/// Smallest interval holding every grid point with density above `floor`.
pub fn support_estimate(solution: &LsdSolution, floor: f64) -> (f64, f64) {
    let mut inside = solution
        .grid
        .iter()
        .zip(&solution.density)
        .filter(|(_, r)| **r > floor)
        .map(|(x, _)| *x);
    match inside.next() {
        None => (0.0, 0.0),
        Some(first) => {
            let last = inside.next_back().unwrap_or(first);
            (first, last)
        }
    }
}

/// Stieltjes transform of `solution`'s law at `z` by direct re-solve.
pub fn stieltjes_at(
    f: &SpectralDensity,
    solution: &LsdSolution,
    z: Complex64,
    config: &SolverConfig,
) -> Result<Complex64> {
    solve_stieltjes(f, solution.y, z, solution.variant, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn mp1() -> LsdSolution {
        LsdSolution::compute(
            &SpectralDensity::constant(1.0),
            1.0,
            EquationVariant::default(),
            &SolverConfig::default(),
            &LsdGrid::default(),
        )
        .unwrap()
    }

    #[test]
    fn white_noise_density_points() {
        let f = SpectralDensity::constant(1.0);
        let cfg = SolverConfig::default();
        let rho = lsd_density(&f, 1.0, &[2.0, 4.5, 100.0], EquationVariant::default(), &cfg).unwrap();
        assert!((rho[0] - 1.0 / (2.0 * PI)).abs() < 1e-6, "{}", rho[0]);
        assert!(rho[1].abs() < 1e-4);
        assert!(rho[2].abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_grid() {
        let f = SpectralDensity::constant(1.0);
        let cfg = SolverConfig::default();
        assert!(lsd_density(&f, 1.0, &[1.0, 1.0], EquationVariant::default(), &cfg).is_err());
        assert!(lsd_density(&f, 1.0, &[0.0, 1.0], EquationVariant::default(), &cfg).is_err());
    }

    #[test]
    fn unit_ratio_solution_matches_oracle() {
        let sol = mp1();
        let mp = mp_oracle(1.0, 1.0).unwrap();
        assert!((sol.mass + sol.atom - 1.0).abs() < 1e-3);
        assert!(sol.min_raw_density >= -1e-8);
        assert!((sol.cdf_at(4.0) - 1.0).abs() < 1e-3);
        assert_eq!(sol.cdf_at(-1e-12), 0.0);
        let sup = (0..=2000)
            .map(|k| k as f64 * 5.0 / 2000.0)
            .map(|x| (sol.cdf_at(x) - mp.cdf(x)).abs())
            .fold(0.0, f64::max);
        assert!(sup < 1e-3, "{sup}");
        let (lo, hi) = sol.support;
        assert!(lo < 0.01 && (hi - 4.0).abs() < 0.02, "{lo} {hi}");
        assert!(sol.cdf.windows(2).all(|w| w[1] >= w[0]));
        for (x, c) in sol.grid.iter().zip(&sol.cdf) {
            assert!((sol.cdf_at(*x) - c).abs() < 1e-12);
        }
    }

    #[test]
    fn scaled_flat_density_widens_support() {
        let cfg = SolverConfig::default();
        let sol = LsdSolution::compute(
            &SpectralDensity::constant(2.5),
            0.25,
            EquationVariant::default(),
            &cfg,
            &LsdGrid::default(),
        )
        .unwrap();
        // p^{-1} X X^T with n = 4p: MP(y, 2.5/y)
        let mp = mp_oracle(0.25, 2.5 / 0.25).unwrap();
        let (lo, hi) = sol.support;
        let width = mp.upper_edge() - mp.lower_edge();
        assert!((lo - mp.lower_edge()).abs() < 0.01 * width, "{lo}");
        assert!((hi - mp.upper_edge()).abs() < 0.01 * width, "{hi}");
    }

    #[test]
    fn json_shape() {
        let sol = mp1();
        let v: serde_json::Value = serde_json::to_value(&sol).unwrap();
        for key in ["y", "variant", "grid", "s_re", "s_im", "density", "cdf", "atom", "support"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["variant"], "normalized-yinv-direct");
    }
}
