//! Finite hypothesis classes `C = {c: X → A}` over a synthetic domain.

use omnistat_core::stats::ActionSpace;

use crate::{Error, Result};

/// Hypotheses as an action index per domain point.
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisClass {
    pub names: Vec<String>,
    pub rules: Vec<Vec<usize>>,
}

impl HypothesisClass {
    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }
}

/// Constant, feature-threshold and linear-score rules on 2-d features with
/// scalar actions; every output is snapped to the nearest action.
///
/// `size` picks the first `size` rules of the fixed list of 16: four
/// constants, six thresholds, six linear scores.
pub fn standard_class(features: &[[f64; 2]], actions: &ActionSpace, size: usize) -> Result<HypothesisClass> {
    if actions.dim() != 1 {
        return Err(Error::Config(format!("hypotheses need scalar actions, got dimension {}", actions.dim())));
    }
    let (lo, hi) = actions.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), t| (lo.min(t[0]), hi.max(t[0])));
    let at = |u: f64| lo + u * (hi - lo);
    let mut rules: Vec<(String, Box<dyn Fn(&[f64; 2]) -> f64>)> = Vec::new();
    for u in [0.2, 0.4, 0.6, 0.8] {
        rules.push((format!("const({u})"), Box::new(move |_| u)));
    }
    for k in 0..2 {
        for theta in [0.25, 0.5, 0.75] {
            rules.push((format!("thr(f{k}>{theta})"), Box::new(move |f| if f[k] > theta { 0.8 } else { 0.2 })));
        }
    }
    for (a, b, c) in [(0.1, 0.8, 0.0), (0.1, 0.0, 0.8), (0.1, 0.4, 0.4), (0.9, -0.8, 0.0), (0.5, 0.3, -0.3), (0.2, 0.5, 0.3)] {
        rules.push((format!("lin({a}+{b}f0+{c}f1)"), Box::new(move |f| a + b * f[0] + c * f[1])));
    }
    if size == 0 || size > rules.len() {
        return Err(Error::Config(format!("hypothesis class size {size} outside 1..={}", rules.len())));
    }
    let mut names = Vec::with_capacity(size);
    let mut out = Vec::with_capacity(size);
    for (name, rule) in rules.into_iter().take(size) {
        names.push(name);
        out.push(features.iter().map(|f| actions.nearest(&[at(rule(f).clamp(0.0, 1.0))])).collect());
    }
    Ok(HypothesisClass { names, rules: out })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sixteen_rules_with_valid_actions() {
        let features: Vec<[f64; 2]> = (0..64).map(|i| [(i / 8) as f64 / 7.0, (i % 8) as f64 / 7.0]).collect();
        let actions = ActionSpace::scalar_grid(0.0, 1.0, 11).unwrap();
        let class = standard_class(&features, &actions, 16).unwrap();
        assert_eq!(class.len(), 16);
        assert!(class.rules.iter().flatten().all(|&a| a < 11));
        assert_eq!(class.rules[0], vec![2; 64]);
        assert!(standard_class(&features, &actions, 17).is_err());
    }
}
