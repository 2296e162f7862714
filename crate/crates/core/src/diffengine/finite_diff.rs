use super::{Objective, Shifts};
use crate::error::{Error, Result};
use crate::symexpr::Values;

/// Default central-difference step.
pub const DEFAULT_STEP: f64 = 1e-4;

impl Objective {
    /// `(f(p + h) - f(p - h)) / 2h` for each `p` in `wrt`, perturbing the
    /// parameter value itself.
    pub fn finite_diff(&self, values: &Values, shifts: &Shifts, wrt: &[String], h: f64) -> Result<Vec<f64>> {
        wrt.iter()
            .map(|p| {
                let Some(&v0) = values.get(p) else {
                    return if self.args.iter().any(|a| a.depends_on(p)) {
                        Err(Error::MissingParameter(p.clone()))
                    } else {
                        Ok(0.0)
                    };
                };
                let mut moved = values.clone();
                moved.insert(p.clone(), v0 + h);
                let up = self.value(&moved, shifts)?;
                moved.insert(p.clone(), v0 - h);
                let down = self.value(&moved, shifts)?;
                Ok((up - down) / (2.0 * h))
            })
            .collect()
    }
}
