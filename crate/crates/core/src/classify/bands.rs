use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::MarkClass;

/// Lower bounds of each degree band above Fail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegreeBands {
    pub pass: f64,
    pub third: f64,
    pub lower_second: f64,
    pub upper_second: f64,
    pub first: f64,
}

impl DegreeBands {
    pub const UK: DegreeBands = DegreeBands { pass: 40.0, third: 45.0, lower_second: 50.0, upper_second: 60.0, first: 70.0 };

    pub fn classify(&self, average_mark: f64) -> Result<MarkClass> {
        if !(0.0..=100.0).contains(&average_mark) {
            return Err(Error::MarkOutOfRange(average_mark));
        }
        Ok(if average_mark >= self.first {
            MarkClass::First
        } else if average_mark >= self.upper_second {
            MarkClass::UpperSecond
        } else if average_mark >= self.lower_second {
            MarkClass::LowerSecond
        } else if average_mark >= self.third {
            MarkClass::Third
        } else if average_mark >= self.pass {
            MarkClass::Pass
        } else {
            MarkClass::Fail
        })
    }
}

impl Default for DegreeBands {
    fn default() -> Self {
        Self::UK
    }
}

/// Degree class of a yearly average under the UK bands.
pub fn bin_degree_class(average_mark: f64) -> Result<MarkClass> {
    DegreeBands::UK.classify(average_mark)
}
