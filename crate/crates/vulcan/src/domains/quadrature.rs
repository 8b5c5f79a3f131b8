//! Gauss–Hermite discretization of Gaussian measurement outcomes.

use nalgebra::DMatrix;

/// Discretizes N(mean, variance) into `degree` weighted points by
/// Gauss–Hermite quadrature: values μ + √(2·variance)·tᵢ with probabilities
/// wᵢ/√π, where (tᵢ, wᵢ) are the Hermite nodes and weights. The rule
/// integrates polynomials up to degree 2·degree − 1 exactly against the
/// Gaussian. Zero variance collapses to a single point mass.
pub fn gauss_hermite_outcomes(mean: f64, variance: f64, degree: usize) -> Vec<(f64, f64)> {
    assert!(degree >= 1);
    assert!(
        variance >= -1e-12,
        "negative variance {variance} passed to quadrature"
    );
    let variance = variance.max(0.0);
    if variance == 0.0 {
        return vec![(mean, 1.0)];
    }
    let scale = (2.0 * variance).sqrt();
    hermite_rule(degree)
        .into_iter()
        .map(|(node, probability)| (mean + scale * node, probability))
        .collect()
}

/// Hermite nodes with probability weights wᵢ/√π, ascending by node, via the
/// Golub–Welsch eigendecomposition of the Jacobi matrix (zero diagonal,
/// √(i/2) off-diagonal). The squared first eigenvector components are the
/// probability weights directly.
fn hermite_rule(degree: usize) -> Vec<(f64, f64)> {
    if degree == 1 {
        return vec![(0.0, 1.0)];
    }
    let mut jacobi = DMatrix::zeros(degree, degree);
    for i in 1..degree {
        let offdiag = (i as f64 / 2.0).sqrt();
        jacobi[(i - 1, i)] = offdiag;
        jacobi[(i, i - 1)] = offdiag;
    }
    let eigen = jacobi
        .symmetric_eigen();
    let mut rule: Vec<(f64, f64)> = (0..degree)
        .map(|k| {
            let node = eigen.eigenvalues[k];
            let first = eigen.eigenvectors[(0, k)];
            (node, first * first)
        })
        .collect();
    rule.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    // Eigenvector first components are normalized already; rescale so the
    // probabilities sum to exactly one.
    let total: f64 = rule.iter().map(|(_, w)| w).sum();
    for entry in &mut rule {
        entry.1 /= total;
    }
    rule
}
