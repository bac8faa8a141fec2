use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Unit-variance, zero-mean innovation laws.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnovationDistribution {
    #[default]
    Gaussian,
    Rademacher,
    /// Uniform on `[-sqrt(3), sqrt(3)]`.
    Uniform,
}

impl InnovationDistribution {
    /// `E Z^4`.
    pub fn fourth_moment(self) -> f64 {
        match self {
            InnovationDistribution::Gaussian => 3.0,
            InnovationDistribution::Rademacher => 1.0,
            InnovationDistribution::Uniform => 9.0 / 5.0,
        }
    }

    fn sample<R: Rng>(self, rng: &mut R) -> f64 {
        match self {
            InnovationDistribution::Gaussian => rng.sample(StandardNormal),
            InnovationDistribution::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            InnovationDistribution::Uniform => {
                let u: f64 = rng.random();
                (2.0 * u - 1.0) * 3.0f64.sqrt()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InnovationSpec {
    #[serde(default)]
    pub dist: InnovationDistribution,
    #[serde(default)]
    pub seed: u64,
}

/// ChaCha stream carrying `Z_1, Z_2, ...` in increasing order.
const FORWARD_STREAM: u64 = 0;
/// ChaCha stream carrying `Z_0, Z_{-1}, ...` in decreasing order.
const BACKWARD_STREAM: u64 = 1;

impl InnovationSpec {
    pub fn new(dist: InnovationDistribution, seed: u64) -> Self {
        InnovationSpec { dist, seed }
    }

    pub fn fourth_moment(&self) -> f64 {
        self.dist.fourth_moment()
    }

    /// Draws `Z_first ..= Z_last`.
    ///
    /// Positive and non-positive indices come from two fixed streams of the
    /// same seed, so `Z_t` does not depend on the requested range.
    pub fn draw(&self, first: i64, last: i64) -> Result<Innovations> {
        if last < first {
            return Err(Error::InvalidParameter(format!(
                "empty innovation range {first}..={last}"
            )));
        }
        let len = usize::try_from(last - first + 1)
            .map_err(|_| Error::IndexOverflow(format!("innovation range {first}..={last}")))?;
        let mut values = vec![0.0; len];

        if last >= 1 {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            rng.set_stream(FORWARD_STREAM);
            for t in 1..=last {
                let z = self.dist.sample(&mut rng);
                if t >= first {
                    values[(t - first) as usize] = z;
                }
            }
        }
        if first <= 0 {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            rng.set_stream(BACKWARD_STREAM);
            let mut t = 0;
            while t >= first {
                let z = self.dist.sample(&mut rng);
                if t <= last {
                    values[(t - first) as usize] = z;
                }
                t -= 1;
            }
        }
        Ok(Innovations { first, values })
    }
}

/// A contiguous block `Z_first, ..., Z_{first+len-1}` of innovations.
#[derive(Debug, Clone, PartialEq)]
pub struct Innovations {
    first: i64,
    values: Vec<f64>,
}

impl Innovations {
    pub fn from_values(first: i64, values: Vec<f64>) -> Self {
        Innovations { first, values }
    }

    pub fn first_index(&self) -> i64 {
        self.first
    }

    pub fn last_index(&self) -> i64 {
        self.first + self.values.len() as i64 - 1
    }

    pub fn get(&self, t: i64) -> Option<f64> {
        let k = t.checked_sub(self.first)?;
        usize::try_from(k).ok().and_then(|k| self.values.get(k).copied())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Slice `Z_from ..= Z_to`, or an alignment error.
    pub fn range(&self, from: i64, to: i64) -> Result<&[f64]> {
        if from < self.first || to > self.last_index() || to < from {
            return Err(Error::StreamMisaligned {
                need_first: from,
                need_last: to,
                have_first: self.first,
                have_last: self.last_index(),
            });
        }
        let a = (from - self.first) as usize;
        let b = (to - self.first) as usize;
        Ok(&self.values[a..=b])
    }
}
