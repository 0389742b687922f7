//! Composite Gauss–Legendre rules.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

/// Nodes and weights of a composite rule on [a, b].
#[derive(Clone, Debug)]
pub struct Composite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Composite {
    pub fn new(a: f64, b: f64, panels: usize, order: usize) -> Self {
        let rule = GaussLegendre::new(NonZeroUsize::new(order.max(1)).expect("nonzero"));
        let pairs = rule.as_node_weight_pairs();
        let panels = panels.max(1);
        let w = (b - a) / panels as f64;
        let mut nodes = Vec::with_capacity(panels * pairs.len());
        let mut weights = Vec::with_capacity(panels * pairs.len());
        for p in 0..panels {
            let lo = a + w * p as f64;
            for &(x, wt) in pairs {
                nodes.push(lo + 0.5 * w * (x + 1.0));
                weights.push(0.5 * w * wt);
            }
        }
        Composite { nodes, weights }
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_smooth_functions() {
        let q = Composite::new(0.0, 3.0, 4, 8);
        assert!((q.integrate(f64::exp) - (3f64.exp() - 1.0)).abs() < 1e-13);
        assert_eq!(q.len(), 32);
    }
}
