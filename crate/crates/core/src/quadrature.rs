use std::f64::consts::PI;

/// Gauss-Hermite rule for integrals of the form `∫ exp(−x²) f(x) dx`.
///
/// Nodes come from Newton iteration on the orthonormal Hermite recurrence,
/// which keeps the tiny tail weights accurate at high orders.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "quadrature order must be positive");
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let pim4 = PI.powf(-0.25);
        let half = n.div_ceil(2);
        let mut z = 0.0f64;
        for i in 0..half {
            // initial guesses for the largest roots, then continue from the previous root
            z = match i {
                0 => (2.0 * n as f64 + 1.0).sqrt() - 1.85575 * (2.0 * n as f64 + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * (n as f64).powf(0.426) / z,
                2 => 1.86 * z - 0.86 * nodes[0],
                3 => 1.91 * z - 0.91 * nodes[1],
                _ => 2.0 * z - nodes[i - 2],
            };
            let mut pp = 0.0;
            for _ in 0..100 {
                let mut p1 = pim4;
                let mut p2 = 0.0;
                for j in 1..=n {
                    let p3 = p2;
                    p2 = p1;
                    p1 = z * (2.0 / j as f64).sqrt() * p2 - ((j as f64 - 1.0) / j as f64).sqrt() * p3;
                }
                pp = (2.0 * n as f64).sqrt() * p2;
                let step = p1 / pp;
                z -= step;
                if step.abs() <= 1e-15 * z.abs().max(1.0) {
                    break;
                }
            }
            nodes[i] = z;
            nodes[n - 1 - i] = -z;
            weights[i] = 2.0 / (pp * pp);
            weights[n - 1 - i] = weights[i];
        }
        GaussHermite { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `∫ exp(−x²) f(x) dx`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// `E[f(Z)]` for `Z ~ N(0, 1)`.
    pub fn expect_standard_normal<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        let s = std::f64::consts::SQRT_2;
        self.integrate(|x| f(s * x)) / PI.sqrt()
    }

    /// Node/weight pairs `(z_i, w_i)` with `E[f(Z)] ≈ Σ w_i f(z_i)` for standard normal `Z`.
    pub fn standard_normal_rule(&self) -> Vec<(f64, f64)> {
        let s = std::f64::consts::SQRT_2;
        let norm = PI.sqrt();
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| (s * x, w / norm))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials() {
        for order in [1, 2, 5, 20, 128] {
            let q = GaussHermite::new(order);
            assert!((q.integrate(|_| 1.0) - PI.sqrt()).abs() < 1e-12, "order {order}");
            if order >= 2 {
                assert!((q.integrate(|x| x * x) - PI.sqrt() / 2.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gaussian_moments() {
        let q = GaussHermite::new(128);
        assert!((q.expect_standard_normal(|z| z * z) - 1.0).abs() < 1e-12);
        assert!((q.expect_standard_normal(|z| z.powi(4)) - 3.0).abs() < 1e-11);
        assert!((q.expect_standard_normal(|z| z.cos()) - (-0.5f64).exp()).abs() < 1e-13);
    }

    #[test]
    fn nodes_sorted_symmetric() {
        let q = GaussHermite::new(128);
        assert!(q.nodes().windows(2).all(|w| w[0] > w[1]));
        for (a, b) in q.nodes().iter().zip(q.nodes().iter().rev()) {
            assert!((a + b).abs() < 1e-12);
        }
        assert!(q.weights().iter().all(|&w| w > 0.0));
    }
}
