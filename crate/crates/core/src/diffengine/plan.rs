//! Derivatives with respect to input features as linear combinations of
//! shifted circuit evaluations.
//!
//! Each feature occurrence `a_o(x)` contributes through its own shift rule,
//! so `df/dx = Σ_o a_o'(x) Σ_m w_m f[o: +δ_m]` (signed terms). The second
//! derivative adds `a_o''` terms and applies two rules in sequence. Because
//! every term is an ordinary expectation, its gradient with respect to the
//! trainable parameters comes from any [`DiffMode`].

use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{DiffMode, Objective};
use crate::error::{Error, Result};
use crate::symexpr::Values;

type Key = Vec<(usize, u64)>;

/// `Σ_k c_k f[shifts_k]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ShiftPlan {
    terms: BTreeMap<Key, f64>,
}

fn key(entries: &[(usize, f64)]) -> Key {
    let mut merged: BTreeMap<usize, f64> = BTreeMap::new();
    for &(o, d) in entries {
        *merged.entry(o).or_insert(0.0) += d;
    }
    merged.into_iter().filter(|(_, d)| *d != 0.0).map(|(o, d)| (o, d.to_bits())).collect()
}

impl ShiftPlan {
    fn add(&mut self, coeff: f64, entries: &[(usize, f64)]) {
        *self.terms.entry(key(entries)).or_insert(0.0) += coeff;
    }

    /// Plain evaluation `f` with unit weight.
    pub fn identity() -> Self {
        let mut p = Self::default();
        p.add(1.0, &[]);
        p
    }

    pub fn plus(&self, other: &ShiftPlan) -> Self {
        let mut out = self.clone();
        for (k, c) in &other.terms {
            *out.terms.entry(k.clone()).or_insert(0.0) += c;
        }
        out
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// `(coefficient, shifts)` pairs.
    pub fn terms(&self) -> Vec<(f64, Vec<(usize, f64)>)> {
        self.terms
            .iter()
            .map(|(k, c)| (*c, k.iter().map(|&(o, b)| (o, f64::from_bits(b))).collect()))
            .collect()
    }
}

impl Objective {
    fn feature_occurrences(&self, feature: &str) -> Result<Vec<usize>> {
        let mut out = Vec::new();
        for (o, a) in self.args.iter().enumerate() {
            if !a.depends_on(feature) {
                continue;
            }
            if let Some(other) = a.free_parameter_names().into_iter().find(|n| n != feature) {
                return Err(Error::ShiftRuleUnsupported(format!(
                    "gate argument mixes feature `{feature}` with `{other}`"
                )));
            }
            out.push(o);
        }
        Ok(out)
    }

    /// Plan for `df/dx`, `x` a feature.
    pub fn derivative_plan(&self, values: &Values, feature: &str) -> Result<ShiftPlan> {
        let mut plan = ShiftPlan::default();
        for o in self.feature_occurrences(feature)? {
            let c = self.args[o].differentiate(feature).evaluate(values)?;
            for (d, w) in self.occurrence_rule(o, values)?.terms() {
                plan.add(c * w, &[(o, d)]);
            }
        }
        Ok(plan)
    }

    /// Plan for `d²f/dx²`, `x` a feature.
    pub fn second_derivative_plan(&self, values: &Values, feature: &str) -> Result<ShiftPlan> {
        let occ = self.feature_occurrences(feature)?;
        let mut first = Vec::with_capacity(occ.len());
        for &o in &occ {
            let d1 = self.args[o].differentiate(feature);
            let c1 = d1.evaluate(values)?;
            let c2 = d1.differentiate(feature).evaluate(values)?;
            first.push((o, c1, c2, self.occurrence_rule(o, values)?.terms()));
        }
        let mut plan = ShiftPlan::default();
        for (o, _, c2, rule) in &first {
            if *c2 != 0.0 {
                for (d, w) in rule {
                    plan.add(c2 * w, &[(*o, *d)]);
                }
            }
        }
        for (o, c, _, rule) in &first {
            for (o2, c2, _, rule2) in &first {
                for (d, w) in rule {
                    for (d2, w2) in rule2 {
                        plan.add(c * c2 * w * w2, &[(*o, *d), (*o2, *d2)]);
                    }
                }
            }
        }
        Ok(plan)
    }

    /// Value of the plan and its gradient with respect to `wrt`.
    pub fn evaluate_plan(
        &self,
        plan: &ShiftPlan,
        values: &Values,
        wrt: &[String],
        mode: DiffMode,
    ) -> Result<(f64, Vec<f64>)> {
        let parts: Vec<(f64, Vec<f64>)> = plan
            .terms()
            .par_iter()
            .map(|(c, shifts)| {
                let (f, g) = self.value_and_gradient(values, shifts, wrt, mode)?;
                Ok((c * f, g.into_iter().map(|x| c * x).collect()))
            })
            .collect::<Result<_>>()?;
        let mut value = 0.0;
        let mut grad = vec![0.0; wrt.len()];
        for (f, g) in parts {
            value += f;
            grad.iter_mut().zip(g).for_each(|(a, b)| *a += b);
        }
        Ok((value, grad))
    }
}
