use crate::error::{Error, Result};

/// Strictly increasing, finite, non-negative spike times in seconds.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpikeTrain {
    times: Vec<f64>,
}

impl SpikeTrain {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        for (i, &t) in times.iter().enumerate() {
            if !t.is_finite() {
                return Err(Error::InvalidTrain(format!("spike {i} is not finite ({t})")));
            }
            if t < 0.0 {
                return Err(Error::InvalidTrain(format!("spike {i} is negative ({t})")));
            }
            if i > 0 && t <= times[i - 1] {
                return Err(Error::InvalidTrain(format!(
                    "spike {i} at {t} does not follow {}",
                    times[i - 1]
                )));
            }
        }
        Ok(Self { times })
    }

    /// Sorts and deduplicates-checks an unordered list of times.
    pub fn from_unsorted(mut times: Vec<f64>) -> Result<Self> {
        times.sort_by(f64::total_cmp);
        Self::new(times)
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Every spike moved by `offset`; fails if a spike would become negative.
    pub fn shifted(&self, offset: f64) -> Result<Self> {
        Self::new(self.times.iter().map(|t| t + offset).collect())
    }
}

impl TryFrom<Vec<f64>> for SpikeTrain {
    type Error = Error;

    fn try_from(times: Vec<f64>) -> Result<Self> {
        Self::new(times)
    }
}
