use rand::Rng;

use crate::error::{config, Result};
use crate::scenario::ArrivalLaw;

/// Renewal arrival epochs: the i-th arrival is at `sum_{j<=i} U_j / lambda_n`.
#[derive(Debug)]
pub struct RenewalStream<'r, R: ?Sized> {
    law: ArrivalLaw,
    lambda_n: f64,
    clock: f64,
    rng: &'r mut R,
}

impl<'r, R: Rng + ?Sized> RenewalStream<'r, R> {
    pub fn new(law: ArrivalLaw, lambda_n: f64, rng: &'r mut R) -> Result<Self> {
        law.validate()?;
        if !(lambda_n > 0.0 && lambda_n.is_finite()) {
            return config(format!("arrival rate must be positive, got {lambda_n}"));
        }
        Ok(Self {
            law,
            lambda_n,
            clock: 0.0,
            rng,
        })
    }
}

impl<R: Rng + ?Sized> Iterator for RenewalStream<'_, R> {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        self.clock += self.law.sample(self.rng) / self.lambda_n;
        Some(self.clock)
    }
}
