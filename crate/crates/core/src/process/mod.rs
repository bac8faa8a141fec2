//! Linear processes `X_t = sum_{j>=0} c_j Z_{t-j}`: coefficient models,
//! innovations, second-order quantities and finite-horizon simulation.

mod innovations;
mod model;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use innovations::{InnovationDistribution, InnovationSpec, Innovations};
pub use model::{CoefficientModel, CoefficientStream, CAUSALITY_TOL};

pub const DEFAULT_TAIL_TOL: f64 = 1e-12;

/// Upper limit for automatically chosen truncation horizons.
pub const MAX_HORIZON: usize = 1 << 22;

fn default_tail_tol() -> f64 {
    DEFAULT_TAIL_TOL
}

/// Coefficient model, innovation law and truncation horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessSpec {
    pub model: CoefficientModel,
    #[serde(default)]
    pub innovations: InnovationSpec,
    /// Index of the last retained coefficient; chosen automatically if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default = "default_tail_tol")]
    pub tail_tol: f64,
}

impl ProcessSpec {
    pub fn new(model: CoefficientModel, innovations: InnovationSpec) -> Self {
        ProcessSpec {
            model,
            innovations,
            horizon: None,
            tail_tol: DEFAULT_TAIL_TOL,
        }
    }

    pub fn white_noise(seed: u64) -> Self {
        Self::new(
            CoefficientModel::WhiteNoise,
            InnovationSpec::new(InnovationDistribution::Gaussian, seed),
        )
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        let mut spec = self.clone();
        spec.innovations.seed = seed;
        spec
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if !(self.tail_tol > 0.0 && self.tail_tol < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "tail_tol = {} must lie in (0, 1)",
                self.tail_tol
            )));
        }
        if let Some(j) = self.horizon {
            let ratio = self.model.tail_ratio(j)?;
            if ratio > self.tail_tol {
                return Err(Error::HorizonTooShort {
                    horizon: j,
                    ratio,
                    tail_tol: self.tail_tol,
                });
            }
        }
        Ok(())
    }

    /// The explicit horizon, or the smallest one meeting `tail_tol`.
    pub fn resolved_horizon(&self) -> Result<usize> {
        self.validate()?;
        match self.horizon {
            Some(j) => Ok(j),
            None => self.model.minimal_horizon(self.tail_tol, MAX_HORIZON),
        }
    }

    /// Horizon used when simulating matrices with `n` columns:
    /// `max(n, smallest J meeting tail_tol)` unless fixed explicitly.
    pub fn horizon_for(&self, n: usize) -> Result<usize> {
        let j = self.resolved_horizon()?;
        Ok(match self.horizon {
            Some(_) => j,
            None => j.max(n),
        })
    }

    /// `c_0 ..= c_J` for the resolved horizon.
    pub fn truncated_coefficients(&self) -> Result<Vec<f64>> {
        let j = self.resolved_horizon()?;
        self.model.coefficients(j + 1)
    }

    /// Smallest `C` with `|c_j| <= C (j+1)^{-1-delta}` over the first `count`
    /// coefficients. Logs a warning when no finite `C` exists for the full
    /// sequence.
    pub fn decay_report(&self, count: usize, delta: f64) -> Result<DecayReport> {
        let coeffs = self.model.coefficients(count)?;
        let (argmax, constant) = coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| (j, c.abs() * ((j + 1) as f64).powf(1.0 + delta)))
            .fold((0, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        let bound_holds = self.model.satisfies_decay(delta);
        if !bound_holds {
            log::warn!(
                "coefficients of {:?} are not bounded by C(j+1)^(-1-{delta}); the limit law is not covered by the decay assumption",
                self.model
            );
        }
        Ok(DecayReport {
            delta,
            constant,
            argmax,
            bound_holds,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub delta: f64,
    pub constant: f64,
    pub argmax: usize,
    /// False when the constant grows without bound as more terms are taken.
    pub bound_holds: bool,
}

/// `gamma(h) = sum_j c_j c_{j+h}`; `h` is taken in absolute value.
pub fn autocovariance(coeffs: &[f64], h: usize) -> f64 {
    if h >= coeffs.len() {
        return 0.0;
    }
    coeffs.iter().zip(&coeffs[h..]).map(|(a, b)| a * b).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// `|theta(e^{-iw})|^2 / |phi(e^{-iw})|^2`.
    ClosedForm,
    /// `|sum_j c_j e^{-ijw}|^2` over a truncated coefficient list.
    TruncatedSum,
}

/// Evaluable spectral density `f` on `[0, 2 pi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDensity {
    coefficients: Vec<f64>,
    rational: Option<(Vec<f64>, Vec<f64>)>,
}

impl SpectralDensity {
    pub fn from_coefficients(coefficients: Vec<f64>) -> Self {
        SpectralDensity {
            coefficients,
            rational: None,
        }
    }

    /// `f == level`.
    pub fn constant(level: f64) -> Self {
        assert!(level > 0.0, "spectral level must be positive");
        Self::from_coefficients(vec![level.sqrt()])
    }

    pub fn provenance(&self) -> Provenance {
        match self.rational {
            Some(_) => Provenance::ClosedForm,
            None => Provenance::TruncatedSum,
        }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// `sum_j c_j e^{-ijw}`.
    pub fn transfer(&self, omega: f64) -> Complex64 {
        let e = Complex64::from_polar(1.0, -omega);
        self.coefficients
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * e + c)
    }

    pub fn eval(&self, omega: f64) -> f64 {
        match &self.rational {
            Some((ar, ma)) => model::rational_density(ar, ma, omega),
            None => self.transfer(omega).norm_sqr(),
        }
    }

    /// `sum_h gamma(h) e^{-ihw}` from the stored coefficients.
    pub fn eval_via_autocovariance(&self, omega: f64) -> f64 {
        let c = &self.coefficients;
        let mut f = autocovariance(c, 0);
        for h in 1..c.len() {
            f += 2.0 * autocovariance(c, h) * (h as f64 * omega).cos();
        }
        f
    }

    /// `(1/2 pi) int f` over the trapezoid nodes, i.e. `gamma(0)`.
    pub fn mean(&self, nodes: usize) -> f64 {
        (0..nodes)
            .map(|k| self.eval(2.0 * PI * k as f64 / nodes as f64))
            .sum::<f64>()
            / nodes as f64
    }

    /// Largest value over a uniform grid of `nodes` points.
    pub fn sampled_max(&self, nodes: usize) -> f64 {
        (0..=nodes / 2)
            .map(|k| self.eval(2.0 * PI * k as f64 / nodes as f64))
            .fold(0.0, f64::max)
    }
}

/// Spectral density of the process; closed form for ARMA-type models.
pub fn spectral_density(spec: &ProcessSpec) -> Result<SpectralDensity> {
    let coefficients = spec.truncated_coefficients()?;
    Ok(SpectralDensity {
        coefficients,
        rational: spec.model.rational_form(),
    })
}

/// `X_1, ..., X_length` using the process's resolved horizon.
pub fn simulate_record(spec: &ProcessSpec, length: usize) -> Result<Vec<f64>> {
    let horizon = spec.resolved_horizon()?;
    simulate_record_with_horizon(spec, length, horizon)
}

/// `X_t = sum_{j=0}^{J} c_j Z_{t-j}` for `t = 1..=length`, drawing
/// `Z_{1-J} ..= Z_length`.
pub fn simulate_record_with_horizon(
    spec: &ProcessSpec,
    length: usize,
    horizon: usize,
) -> Result<Vec<f64>> {
    if length == 0 {
        return Err(Error::InvalidParameter("record length must be >= 1".into()));
    }
    let coeffs = spec.model.coefficients(
        horizon
            .checked_add(1)
            .ok_or_else(|| Error::IndexOverflow("horizon".into()))?,
    )?;
    let last = i64::try_from(length).map_err(|_| Error::IndexOverflow(format!("length {length}")))?;
    let first = 1 - i64::try_from(horizon).map_err(|_| Error::IndexOverflow("horizon".into()))?;
    length
        .checked_add(horizon)
        .ok_or_else(|| Error::IndexOverflow("length + horizon".into()))?;
    let innovations = spec.innovations.draw(first, last)?;
    filter(&innovations, &coeffs, 1, length)
}

/// `sum_j c_j Z_{t-j}` for `t = first_t .. first_t + len`. Trailing zero
/// coefficients are ignored; the innovations must cover every index used.
pub fn filter(innovations: &Innovations, coeffs: &[f64], first_t: i64, len: usize) -> Result<Vec<f64>> {
    if coeffs.is_empty() {
        return Err(Error::InvalidParameter("empty coefficient list".into()));
    }
    let order = coeffs.iter().rposition(|&c| c != 0.0).unwrap_or(0);
    let kept: Vec<f64> = coeffs[..=order].iter().rev().copied().collect();
    let last_t = first_t + len as i64 - 1;
    let z = innovations.range(first_t - order as i64, last_t)?;
    let m = kept.len();
    Ok((0..len)
        .map(|t| {
            z[t..t + m]
                .iter()
                .zip(&kept)
                .map(|(zv, c)| zv * c)
                .sum()
        })
        .collect())
}
