use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A root of the autoregressive polynomial must lie strictly outside
/// `1 + CAUSALITY_TOL` for the model to be accepted.
pub const CAUSALITY_TOL: f64 = 1e-10;

/// Coefficients `c_j` of a causal moving-average representation
/// `X_t = sum_j c_j Z_{t-j}`.
///
/// Polynomial conventions: `phi(z) = 1 - phi_1 z - ... - phi_p z^p` and
/// `theta(z) = 1 + theta_1 z + ... + theta_q z^q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoefficientModel {
    /// `c = [1]`.
    WhiteNoise,
    /// Explicit finite list, zero padded.
    Explicit { coefficients: Vec<f64> },
    /// MA(q): `c = [1, theta_1, ..., theta_q]`.
    Ma { theta: Vec<f64> },
    /// AR(1): `c_j = phi^j`.
    Ar1 { phi: f64 },
    Arma { phi: Vec<f64>, theta: Vec<f64> },
    /// Fractional differencing `(1 - B)^{-d}`.
    Farima { d: f64 },
}

impl CoefficientModel {
    pub fn validate(&self) -> Result<()> {
        let finite = |name: &str, xs: &[f64]| -> Result<()> {
            if xs.iter().all(|x| x.is_finite()) {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be finite")))
            }
        };
        match self {
            CoefficientModel::WhiteNoise => Ok(()),
            CoefficientModel::Explicit { coefficients } => {
                finite("coefficients", coefficients)?;
                match coefficients.first() {
                    None => Err(Error::InvalidParameter(
                        "explicit coefficient list is empty".into(),
                    )),
                    Some(&0.0) => Err(Error::InvalidParameter(
                        "explicit coefficient list must have c_0 != 0".into(),
                    )),
                    Some(_) => Ok(()),
                }
            }
            CoefficientModel::Ma { theta } => finite("theta", theta),
            CoefficientModel::Ar1 { phi } => {
                finite("phi", &[*phi])?;
                check_causal(&[*phi])
            }
            CoefficientModel::Arma { phi, theta } => {
                finite("phi", phi)?;
                finite("theta", theta)?;
                check_causal(phi)
            }
            CoefficientModel::Farima { d } => {
                if d.is_finite() && *d > -0.5 && *d < 0.5 {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!(
                        "FARIMA parameter d = {d} must lie in (-0.5, 0.5)"
                    )))
                }
            }
        }
    }

    /// Index of the last non-zero coefficient for finite-order models.
    pub fn finite_order(&self) -> Option<usize> {
        let last_nonzero = |c: &[f64]| c.iter().rposition(|&x| x != 0.0).unwrap_or(0);
        match self {
            CoefficientModel::WhiteNoise => Some(0),
            CoefficientModel::Explicit { coefficients } => Some(last_nonzero(coefficients)),
            CoefficientModel::Ma { theta } => Some(
                theta
                    .iter()
                    .rposition(|&x| x != 0.0)
                    .map_or(0, |i| i + 1),
            ),
            CoefficientModel::Ar1 { phi } if *phi == 0.0 => Some(0),
            CoefficientModel::Arma { phi, theta } if phi.iter().all(|&x| x == 0.0) => Some(
                theta
                    .iter()
                    .rposition(|&x| x != 0.0)
                    .map_or(0, |i| i + 1),
            ),
            CoefficientModel::Farima { d } if *d == 0.0 => Some(0),
            _ => None,
        }
    }

    /// Streaming generator of `c_0, c_1, ...` (infinite; finite models pad with zeros).
    pub fn stream(&self) -> CoefficientStream {
        let state = match self {
            CoefficientModel::WhiteNoise => StreamState::Finite(vec![1.0]),
            CoefficientModel::Explicit { coefficients } => {
                StreamState::Finite(coefficients.clone())
            }
            CoefficientModel::Ma { theta } => {
                let mut c = Vec::with_capacity(theta.len() + 1);
                c.push(1.0);
                c.extend_from_slice(theta);
                StreamState::Finite(c)
            }
            CoefficientModel::Ar1 { phi } => StreamState::Arma {
                phi: vec![*phi],
                theta: vec![],
                history: Vec::new(),
            },
            CoefficientModel::Arma { phi, theta } => StreamState::Arma {
                phi: phi.clone(),
                theta: theta.clone(),
                history: Vec::new(),
            },
            CoefficientModel::Farima { d } => StreamState::Farima { d: *d, last: 1.0 },
        };
        CoefficientStream { state, index: 0 }
    }

    /// The first `count` coefficients `c_0 .. c_{count-1}`.
    pub fn coefficients(&self, count: usize) -> Result<Vec<f64>> {
        if count == 0 {
            return Err(Error::InvalidParameter("coefficient count must be >= 1".into()));
        }
        self.validate()?;
        Ok(self.stream().take(count).collect())
    }

    /// Autoregressive and moving-average polynomials `(phi, theta)` in
    /// ascending powers, for models that have a rational transfer function.
    pub fn rational_form(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let poly = |lead: f64, rest: &[f64], sign: f64| {
            let mut v = Vec::with_capacity(rest.len() + 1);
            v.push(lead);
            v.extend(rest.iter().map(|x| sign * x));
            v
        };
        match self {
            CoefficientModel::WhiteNoise => Some((vec![1.0], vec![1.0])),
            CoefficientModel::Ma { theta } => Some((vec![1.0], poly(1.0, theta, 1.0))),
            CoefficientModel::Ar1 { phi } => Some((vec![1.0, -phi], vec![1.0])),
            CoefficientModel::Arma { phi, theta } => {
                Some((poly(1.0, phi, -1.0), poly(1.0, theta, 1.0)))
            }
            CoefficientModel::Explicit { .. } | CoefficientModel::Farima { .. } => None,
        }
    }

    /// `sum_j c_j^2` over the full (possibly infinite) sequence.
    pub fn total_power(&self) -> Result<f64> {
        self.validate()?;
        Ok(match self {
            CoefficientModel::Ar1 { phi } => 1.0 / (1.0 - phi * phi),
            CoefficientModel::Farima { d } => {
                use statrs::function::gamma::gamma;
                gamma(1.0 - 2.0 * d) / gamma(1.0 - d).powi(2)
            }
            CoefficientModel::Arma { .. } if self.finite_order().is_none() => {
                // Mean of the rational spectral density; the trapezoid rule
                // converges geometrically for analytic periodic integrands.
                let (ar, ma) = self.rational_form().expect("arma is rational");
                let m = 1 << 16;
                (0..m)
                    .map(|k| {
                        let w = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
                        rational_density(&ar, &ma, w)
                    })
                    .sum::<f64>()
                    / m as f64
            }
            _ => {
                let q = self.finite_order().expect("finite model");
                self.stream().take(q + 1).map(|c| c * c).sum()
            }
        })
    }

    /// Smallest `J` such that `sum_{j>J} c_j^2 <= tail_tol * sum_j c_j^2`,
    /// searched up to `max_horizon`.
    pub fn minimal_horizon(&self, tail_tol: f64, max_horizon: usize) -> Result<usize> {
        if let Some(q) = self.finite_order() {
            return Ok(q);
        }
        let total = self.total_power()?;
        let mut partial = 0.0;
        for (j, c) in self.stream().take(max_horizon + 1).enumerate() {
            partial += c * c;
            if total - partial <= tail_tol * total {
                return Ok(j);
            }
        }
        Err(Error::TruncationUnattainable {
            tail_tol,
            max_horizon,
        })
    }

    /// `sum_{j>J} c_j^2 / sum_j c_j^2`.
    pub fn tail_ratio(&self, horizon: usize) -> Result<f64> {
        if let Some(q) = self.finite_order() {
            if horizon >= q {
                return Ok(0.0);
            }
        }
        let total = self.total_power()?;
        let partial: f64 = self.stream().take(horizon + 1).map(|c| c * c).sum();
        Ok(((total - partial) / total).max(0.0))
    }

    /// Whether `|c_j| <= C (j+1)^{-1-delta}` can hold for some finite `C`.
    pub fn satisfies_decay(&self, delta: f64) -> bool {
        match self {
            CoefficientModel::Farima { d } if *d != 0.0 => *d < 0.0 && delta <= -d,
            _ => true,
        }
    }
}

/// Iterator over the coefficients of a [`CoefficientModel`].
#[derive(Debug, Clone)]
pub struct CoefficientStream {
    state: StreamState,
    index: usize,
}

#[derive(Debug, Clone)]
enum StreamState {
    Finite(Vec<f64>),
    Arma {
        phi: Vec<f64>,
        theta: Vec<f64>,
        history: Vec<f64>,
    },
    Farima {
        d: f64,
        last: f64,
    },
}

impl Iterator for CoefficientStream {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let j = self.index;
        self.index += 1;
        let c = match &mut self.state {
            StreamState::Finite(c) => c.get(j).copied().unwrap_or(0.0),
            StreamState::Arma {
                phi,
                theta,
                history,
            } => {
                // c_j = theta_j + sum_{k=1}^{min(j,p)} phi_k c_{j-k}
                let mut c = match j {
                    0 => 1.0,
                    _ => theta.get(j - 1).copied().unwrap_or(0.0),
                };
                for (k, phi_k) in phi.iter().enumerate().take(j) {
                    c += phi_k * history[j - 1 - k];
                }
                history.push(c);
                c
            }
            StreamState::Farima { d, last } => {
                if j > 0 {
                    *last *= (j as f64 - 1.0 + *d) / j as f64;
                }
                *last
            }
        };
        Some(c)
    }
}

/// `|theta(e^{-iw})|^2 / |phi(e^{-iw})|^2`.
pub(crate) fn rational_density(ar: &[f64], ma: &[f64], w: f64) -> f64 {
    let e = Complex64::from_polar(1.0, -w);
    let eval = |p: &[f64]| p.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &a| acc * e + a);
    eval(ma).norm_sqr() / eval(ar).norm_sqr()
}

fn check_causal(phi: &[f64]) -> Result<()> {
    let degree = match phi.iter().rposition(|&x| x != 0.0) {
        Some(i) => i + 1,
        None => return Ok(()),
    };
    let mut poly = Vec::with_capacity(degree + 1);
    poly.push(1.0);
    poly.extend(phi[..degree].iter().map(|x| -x));
    let offending: Vec<Complex64> = polynomial_roots(&poly)
        .into_iter()
        .filter(|r| r.norm() <= 1.0 + CAUSALITY_TOL)
        .collect();
    if offending.is_empty() {
        Ok(())
    } else {
        Err(Error::NonCausal { roots: offending })
    }
}

/// Roots of `sum_k a_k z^k` (ascending coefficients, non-zero leading term)
/// by Durand-Kerner iteration.
pub(crate) fn polynomial_roots(ascending: &[f64]) -> Vec<Complex64> {
    let degree = ascending.len() - 1;
    let lead = ascending[degree];
    let monic: Vec<f64> = ascending.iter().map(|a| a / lead).collect();
    if degree == 1 {
        return vec![Complex64::new(-monic[0], 0.0)];
    }
    let eval = |z: Complex64| monic.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &a| acc * z + a);
    // Cauchy bound on root magnitudes
    let radius = 1.0 + monic[..degree].iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..degree)
        .map(|k| seed.powu(k as u32) * radius.clamp(0.5, 2.0))
        .collect();
    for _ in 0..1000 {
        let mut delta = 0.0f64;
        for i in 0..degree {
            let zi = roots[i];
            let denom = roots
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .fold(Complex64::new(1.0, 0.0), |acc, (_, &zj)| acc * (zi - zj));
            let step = eval(zi) / denom;
            roots[i] = zi - step;
            delta = delta.max(step.norm() / zi.norm().max(1.0));
        }
        if delta < 1e-15 {
            break;
        }
    }
    roots
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ma1_coefficients() {
        let m = CoefficientModel::Ma { theta: vec![0.5] };
        assert_eq!(m.coefficients(3).unwrap(), vec![1.0, 0.5, 0.0]);
    }

    #[test]
    fn ar1_matches_long_division() {
        // 1 / (1 - 0.5 z) by long division
        let mut rem = [1.0, 0.0, 0.0, 0.0];
        let mut quotient = vec![];
        for k in 0..4 {
            let q = rem[k];
            quotient.push(q);
            if k + 1 < 4 {
                rem[k + 1] += 0.5 * q;
            }
        }
        let m = CoefficientModel::Ar1 { phi: 0.5 };
        assert_eq!(m.coefficients(4).unwrap(), quotient);
        assert_eq!(quotient, vec![1.0, 0.5, 0.25, 0.125]);
    }

    #[test]
    fn farima_recurrence() {
        let c = CoefficientModel::Farima { d: 0.1 }.coefficients(3).unwrap();
        assert_abs_diff_eq!(c[0], 1.0);
        assert_abs_diff_eq!(c[1], 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(c[2], 0.055, epsilon = 1e-15);
    }

    #[test]
    fn arma_equals_ar1_when_single_lag() {
        let a = CoefficientModel::Arma {
            phi: vec![0.7],
            theta: vec![],
        };
        let b = CoefficientModel::Ar1 { phi: 0.7 };
        assert_eq!(a.coefficients(20).unwrap(), b.coefficients(20).unwrap());
    }

    #[test]
    fn arma11_coefficients() {
        // (1 + 0.4z)/(1 - 0.5z): c_0 = 1, c_j = (0.5 + 0.4) 0.5^{j-1}
        let m = CoefficientModel::Arma {
            phi: vec![0.5],
            theta: vec![0.4],
        };
        let c = m.coefficients(6).unwrap();
        assert_eq!(c[0], 1.0);
        for (j, cj) in c.iter().enumerate().skip(1) {
            assert_abs_diff_eq!(*cj, 0.9 * 0.5f64.powi(j as i32 - 1), epsilon = 1e-15);
        }
    }

    #[test]
    fn non_causal_rejected_with_roots() {
        let err = CoefficientModel::Ar1 { phi: 1.25 }.validate().unwrap_err();
        match err {
            Error::NonCausal { roots } => {
                assert_eq!(roots.len(), 1);
                assert_abs_diff_eq!(roots[0].re, 0.8, epsilon = 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
        // unit root
        assert!(CoefficientModel::Ar1 { phi: 1.0 }.validate().is_err());
        // (1 - 0.5z)(1 - 2z) = 1 - 2.5z + z^2 has a root at 0.5
        let m = CoefficientModel::Arma {
            phi: vec![2.5, -1.0],
            theta: vec![],
        };
        assert!(matches!(m.validate(), Err(Error::NonCausal { .. })));
        // (1 - 0.5z)(1 + 0.25z) = 1 - 0.25z - 0.125z^2, roots 2 and -4
        let m = CoefficientModel::Arma {
            phi: vec![0.25, 0.125],
            theta: vec![],
        };
        m.validate().unwrap();
    }

    #[test]
    fn complex_roots_found() {
        // z^2 + 1
        let mut r = polynomial_roots(&[1.0, 0.0, 1.0]);
        r.sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap());
        assert_abs_diff_eq!(r[0].im, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r[1].im, 1.0, epsilon = 1e-12);
        // (z-2)(z-3)(z+5) = z^3 - 19z + 30
        let mut r = polynomial_roots(&[30.0, -19.0, 0.0, 1.0]);
        r.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        assert_abs_diff_eq!(r[0].re, -5.0, epsilon = 1e-10);
        assert_abs_diff_eq!(r[1].re, 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(r[2].re, 3.0, epsilon = 1e-10);
    }

    #[test]
    fn explicit_requires_nonzero_lead() {
        assert!(CoefficientModel::Explicit {
            coefficients: vec![0.0, 1.0]
        }
        .validate()
        .is_err());
        assert!(CoefficientModel::Explicit {
            coefficients: vec![]
        }
        .validate()
        .is_err());
        assert!(CoefficientModel::Farima { d: 0.5 }.validate().is_err());
        assert!(CoefficientModel::Ma { theta: vec![f64::NAN] }.validate().is_err());
    }

    #[test]
    fn total_power_closed_forms() {
        assert_abs_diff_eq!(
            CoefficientModel::Ar1 { phi: 0.5 }.total_power().unwrap(),
            4.0 / 3.0,
            epsilon = 1e-15
        );
        let arma = CoefficientModel::Arma {
            phi: vec![0.5],
            theta: vec![0.4],
        };
        let brute: f64 = arma.stream().take(200).map(|c| c * c).sum();
        assert_abs_diff_eq!(arma.total_power().unwrap(), brute, epsilon = 1e-12);
        let farima = CoefficientModel::Farima { d: -0.3 };
        // slow j^{-2.6} tail: compare against partial sum plus integral tail
        let n = 200_000;
        let partial: f64 = farima.stream().take(n).map(|c| c * c).sum();
        assert!(farima.total_power().unwrap() > partial);
        assert!(farima.total_power().unwrap() - partial < 1e-6);
    }

    #[test]
    fn minimal_horizon_ar1() {
        let m = CoefficientModel::Ar1 { phi: 0.5 };
        let j = m.minimal_horizon(1e-12, 1 << 20).unwrap();
        // tail after J is 4^{-(J+1)}: smallest J with 4^{-(J+1)} <= 1e-12 is 19
        assert_eq!(j, 19);
        assert!(m.tail_ratio(j).unwrap() <= 1e-12);
        assert!(m.tail_ratio(j - 1).unwrap() > 1e-12);
        assert_eq!(
            CoefficientModel::Ma { theta: vec![0.5, 0.0] }
                .minimal_horizon(1e-12, 10)
                .unwrap(),
            1
        );
        assert!(matches!(
            CoefficientModel::Farima { d: 0.2 }.minimal_horizon(1e-12, 1000),
            Err(Error::TruncationUnattainable { .. })
        ));
    }

    #[test]
    fn decay_bound_flags_long_memory() {
        assert!(!CoefficientModel::Farima { d: 0.2 }.satisfies_decay(0.01));
        assert!(CoefficientModel::Farima { d: -0.2 }.satisfies_decay(0.1));
        assert!(!CoefficientModel::Farima { d: -0.2 }.satisfies_decay(0.3));
        assert!(CoefficientModel::Ar1 { phi: 0.9 }.satisfies_decay(5.0));
    }

    #[test]
    fn serde_shape() {
        let m: CoefficientModel =
            serde_json::from_str(r#"{"kind":"arma","phi":[0.5],"theta":[0.1]}"#).unwrap();
        assert_eq!(
            m,
            CoefficientModel::Arma {
                phi: vec![0.5],
                theta: vec![0.1]
            }
        );
        let m: CoefficientModel = serde_json::from_str(r#"{"kind":"white_noise"}"#).unwrap();
        assert_eq!(m, CoefficientModel::WhiteNoise);
        assert!(serde_json::from_str::<CoefficientModel>(r#"{"kind":"ar1","phi":0.5,"psi":1}"#).is_err());
    }
}
