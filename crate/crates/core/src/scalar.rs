//! Numeric type used for transition probabilities.
//!
//! Bigram counts are integers; probabilities derived from them can be read
//! out as floats or as exact rationals. Everything probabilistic in the
//! crate is generic over [`Probability`].

use std::fmt::Debug;

use num_rational::Ratio;
use num_traits::Num;

pub trait Probability: Num + Clone + PartialOrd + Debug {
    /// `numerator / denominator`; `denominator` is never zero.
    fn from_ratio(numerator: u64, denominator: u64) -> Self;

    fn to_f64(&self) -> f64;
}

impl Probability for f64 {
    fn from_ratio(numerator: u64, denominator: u64) -> Self {
        numerator as f64 / denominator as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Probability for f32 {
    fn from_ratio(numerator: u64, denominator: u64) -> Self {
        (numerator as f64 / denominator as f64) as f32
    }

    fn to_f64(&self) -> f64 {
        f64::from(*self)
    }
}

impl Probability for Ratio<u64> {
    fn from_ratio(numerator: u64, denominator: u64) -> Self {
        Ratio::new(numerator, denominator)
    }

    fn to_f64(&self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }
}
