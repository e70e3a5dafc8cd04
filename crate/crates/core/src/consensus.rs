//! Perron-type update matrices and consensus iteration.
//!
//! Two update rules share one matrix type:
//!
//! * conventional: `x_i ← x_i + (ε / w_i) Σ_{j∈N_i} (x_j − x_i)`, where each
//!   node applies its own weight, giving `W = I − ε diag(1/w) L`;
//! * robust: `x_i ← x_i + ε Σ_{j∈N_i} w_j (x_j − x_i)`, where a node's weight is
//!   applied by its neighbors. The matrix has `1` as right and `w` as left
//!   eigenvector at eigenvalue 1, so the fixed point is `Σ w_i x_i(0) / Σ w_i`.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

/// Eigenvalues whose modulus is within this distance of 1 count as unit-modulus.
pub const UNIT_MODULUS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    Conventional,
    Robust,
}

/// Whether [`robust_perron`] enforces the step-size bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EpsilonPolicy {
    #[default]
    Strict,
    /// Accept any ε, e.g. to demonstrate divergence.
    AllowOutOfBounds,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusMatrix {
    pub matrix: DMatrix<f64>,
    pub epsilon: f64,
    pub weights: Vec<f64>,
    pub kind: MatrixKind,
}

impl ConsensusMatrix {
    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn step(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.matrix * x
    }

    pub fn power(&self, t: u32) -> DMatrix<f64> {
        matrix_power(&self.matrix, t)
    }

    /// Largest deviation of a row sum from 1.
    pub fn row_sum_error(&self) -> f64 {
        (0..self.size())
            .map(|i| (self.matrix.row(i).sum() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Largest entry of `|wᵀM − wᵀ|`.
    pub fn left_eigen_error(&self) -> f64 {
        let w = DVector::from_column_slice(&self.weights);
        let lhs = w.transpose() * &self.matrix;
        lhs.iter().zip(w.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.matrix.iter().all(|&x| x >= 0.0)
    }
}

fn check_weights(w: &[f64], n: usize) -> Result<()> {
    if w.len() != n {
        return Err(Error::InvalidParameter(format!(
            "expected {n} weights, got {}",
            w.len()
        )));
    }
    if let Some((i, x)) = w.iter().enumerate().find(|(_, &x)| !(x > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "weight of node {} must be positive, got {x}",
            i + 1
        )));
    }
    Ok(())
}

/// `W = I − ε diag(1/w) L`.
pub fn conventional_perron(laplacian: &DMatrix<f64>, epsilon: f64, weights: &[f64]) -> Result<ConsensusMatrix> {
    let n = laplacian.nrows();
    check_weights(weights, n)?;
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon must be nonnegative, got {epsilon}")));
    }
    let mut m = DMatrix::identity(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] -= epsilon * laplacian[(i, j)] / weights[i];
        }
    }
    Ok(ConsensusMatrix {
        matrix: m,
        epsilon,
        weights: weights.to_vec(),
        kind: MatrixKind::Conventional,
    })
}

/// Upper end of the open interval `(0, 1 / max_i Σ_{j∈N_i} w_j)`.
pub fn robust_epsilon_bound(laplacian: &DMatrix<f64>, weights: &[f64]) -> f64 {
    let n = laplacian.nrows();
    let max_load = (0..n)
        .map(|i| neighbor_weight_sum(laplacian, weights, i))
        .fold(0.0, f64::max);
    1.0 / max_load
}

fn neighbor_weight_sum(laplacian: &DMatrix<f64>, weights: &[f64], i: usize) -> f64 {
    (0..laplacian.ncols())
        .filter(|&j| j != i && laplacian[(i, j)] != 0.0)
        .map(|j| weights[j])
        .sum()
}

/// `Ŵ = I − ε (T ∘ L)` with `T_ij = w_j` off the diagonal and
/// `T_ii = Σ_{j∈N_i} w_j / l_ii`.
pub fn robust_perron(
    laplacian: &DMatrix<f64>,
    epsilon: f64,
    weights: &[f64],
    policy: EpsilonPolicy,
) -> Result<ConsensusMatrix> {
    let n = laplacian.nrows();
    check_weights(weights, n)?;
    let upper = robust_epsilon_bound(laplacian, weights);
    if policy == EpsilonPolicy::Strict && !(epsilon > 0.0 && epsilon < upper) {
        return Err(Error::EpsilonOutOfBounds { epsilon, upper });
    }
    let mut m = DMatrix::identity(n, n);
    for i in 0..n {
        let mut load = 0.0;
        for j in 0..n {
            if j != i && laplacian[(i, j)] != 0.0 {
                // off-diagonal of T ∘ L is −w_j
                m[(i, j)] = epsilon * weights[j];
                load += weights[j];
            }
        }
        m[(i, i)] = 1.0 - epsilon * load;
    }
    Ok(ConsensusMatrix {
        matrix: m,
        epsilon,
        weights: weights.to_vec(),
        kind: MatrixKind::Robust,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralReport {
    pub eigenvalues: Vec<Complex<f64>>,
    pub spectral_radius: f64,
    /// Eigenvalues with `||λ| − 1| ≤ UNIT_MODULUS_TOL`, counted with multiplicity.
    pub unit_modulus_count: usize,
    pub nonnegative: bool,
    /// Exactly one unit-modulus eigenvalue. For the nonnegative irreducible
    /// matrices built on connected graphs this is equivalent to primitivity.
    pub primitive: bool,
}

pub fn spectral_check(m: &ConsensusMatrix) -> SpectralReport {
    let eigenvalues: Vec<Complex<f64>> = m.matrix.clone().complex_eigenvalues().iter().copied().collect();
    let spectral_radius = eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let unit_modulus_count = eigenvalues
        .iter()
        .filter(|z| (z.norm() - 1.0).abs() <= UNIT_MODULUS_TOL)
        .count();
    SpectralReport {
        eigenvalues,
        spectral_radius,
        unit_modulus_count,
        nonnegative: m.is_nonnegative(),
        primitive: unit_modulus_count == 1,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusRun {
    /// `x(0), x(1), …` up to the last computed iterate.
    pub trajectory: Vec<DVector<f64>>,
    pub converged_at: Option<usize>,
    /// Mean of the final state; the consensus value once converged.
    pub fixed_point: f64,
}

impl ConsensusRun {
    pub fn converged(&self) -> bool {
        self.converged_at.is_some()
    }

    pub fn final_state(&self) -> &DVector<f64> {
        self.trajectory.last().expect("trajectory holds x(0)")
    }
}

/// `max_i x_i − min_i x_i`, the largest pairwise disagreement.
pub fn spread(x: &DVector<f64>) -> f64 {
    x.max() - x.min()
}

/// Iterates `x(k+1) = M x(k)` until the spread drops to `tol` or `max_iter`
/// steps have been taken. Running out of iterations is reported through
/// `converged_at == None`, not as an error.
pub fn run_consensus(m: &ConsensusMatrix, x0: &[f64], tol: f64, max_iter: usize) -> Result<ConsensusRun> {
    if x0.len() != m.size() {
        return Err(Error::InvalidParameter(format!(
            "initial state has {} entries, matrix is {}x{}",
            x0.len(),
            m.size(),
            m.size()
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let mut x = DVector::from_column_slice(x0);
    let mut trajectory = vec![x.clone()];
    let mut converged_at = (spread(&x) <= tol).then_some(0);
    let mut k = 0;
    while converged_at.is_none() && k < max_iter {
        x = m.step(&x);
        k += 1;
        trajectory.push(x.clone());
        if spread(&x) <= tol {
            converged_at = Some(k);
        }
    }
    let fixed_point = x.mean();
    Ok(ConsensusRun {
        trajectory,
        converged_at,
        fixed_point,
    })
}

/// `M^t` by repeated squaring.
pub fn matrix_power(m: &DMatrix<f64>, t: u32) -> DMatrix<f64> {
    let n = m.nrows();
    let mut result = DMatrix::identity(n, n);
    let mut base = m.clone();
    let mut e = t;
    while e > 0 {
        if e & 1 == 1 {
            result = &result * &base;
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    result
}

/// `Σ w_i x_i / Σ w_i`.
pub fn weighted_average(weights: &[f64], x: &[f64]) -> f64 {
    let num: f64 = weights.iter().zip(x).map(|(w, x)| w * x).sum();
    num / weights.iter().sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{build_graph, NetworkGraph};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const FIG5_W: [f64; 6] = [0.65, 0.55, 0.48, 0.95, 0.93, 0.90];
    const FIG5_X0: [f64; 6] = [5.0, 2.0, 7.0, 9.0, 8.0, 1.0];

    fn six_node_laplacian() -> DMatrix<f64> {
        build_graph(6, &[(1, 2), (2, 3), (2, 4), (3, 4), (4, 5), (4, 6)]).unwrap().laplacian()
    }

    #[test]
    fn conventional_basics() {
        let l = six_node_laplacian();
        let id = conventional_perron(&l, 0.0, &[1.0; 6]).unwrap();
        assert_eq!(id.matrix, DMatrix::identity(6, 6));

        let pair = build_graph(2, &[(1, 2)]).unwrap().laplacian();
        let m = conventional_perron(&pair, 0.5, &[1.0, 1.0]).unwrap();
        assert_eq!(m.matrix, DMatrix::from_element(2, 2, 0.5));

        let m = conventional_perron(&l, 0.6897, &[1.0; 6]).unwrap();
        assert!(m.row_sum_error() < 1e-12);
        assert!(conventional_perron(&l, 0.1, &[1.0, 0.0, 1.0, 1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn tampered_conventional_stays_row_stochastic() {
        let l = six_node_laplacian();
        let m = conventional_perron(&l, 0.3, &[1.1, 1.1, 1.0, 1.0, 1.0, 1.0]).unwrap();
        assert!(m.row_sum_error() < 1e-12);
        // the fixed point moves to the tampered weighted average
        let run = run_consensus(&m, &FIG5_X0, 1e-10, 10_000).unwrap();
        assert!(run.converged());
        let oracle = weighted_average(&[1.1, 1.1, 1.0, 1.0, 1.0, 1.0], &FIG5_X0);
        assert!((run.fixed_point - oracle).abs() < 1e-9);
    }

    #[test]
    fn robust_entries_match_construction() {
        let l = six_node_laplacian();
        let m = robust_perron(&l, 0.3, &FIG5_W, EpsilonPolicy::Strict).unwrap();
        assert!((m.matrix[(0, 1)] - 0.165).abs() < 1e-15);
        assert_eq!(m.matrix[(0, 2)], 0.0);
        assert!((m.matrix[(0, 0)] - (1.0 - 0.3 * 0.55)).abs() < 1e-15);
        assert!(m.row_sum_error() < 1e-12);
        assert!(m.left_eigen_error() < 1e-12);
        assert!(m.is_nonnegative());
    }

    #[test]
    fn robust_bound_enforced() {
        let l = six_node_laplacian();
        let upper = robust_epsilon_bound(&l, &FIG5_W);
        // node 4 carries the largest neighbor load: 0.55 + 0.48 + 0.93 + 0.90
        assert!((upper - 1.0 / 2.86).abs() < 1e-12);
        match robust_perron(&l, 0.4, &FIG5_W, EpsilonPolicy::Strict) {
            Err(Error::EpsilonOutOfBounds { epsilon, upper: u }) => {
                assert_eq!(epsilon, 0.4);
                assert!((u - upper).abs() < 1e-15);
            }
            other => panic!("expected bound violation, got {other:?}"),
        }
        assert!(robust_perron(&l, 0.0, &FIG5_W, EpsilonPolicy::Strict).is_err());
        assert!(robust_perron(&l, upper, &FIG5_W, EpsilonPolicy::Strict).is_err());
        let loose = robust_perron(&l, 0.4, &FIG5_W, EpsilonPolicy::AllowOutOfBounds).unwrap();
        assert!(!loose.is_nonnegative());
        let zero = robust_perron(&l, 0.0, &FIG5_W, EpsilonPolicy::AllowOutOfBounds).unwrap();
        assert_eq!(zero.matrix, DMatrix::identity(6, 6));
        let tiny = robust_perron(&l, 1e-12, &FIG5_W, EpsilonPolicy::Strict).unwrap();
        assert!((tiny.matrix - DMatrix::<f64>::identity(6, 6)).abs().max() < 1e-11);
    }

    #[test]
    fn spectral_reports() {
        let l = six_node_laplacian();
        let m = robust_perron(&l, 0.3, &FIG5_W, EpsilonPolicy::Strict).unwrap();
        let r = spectral_check(&m);
        assert!((r.spectral_radius - 1.0).abs() < 1e-12);
        assert_eq!(r.unit_modulus_count, 1);
        assert!(r.primitive && r.nonnegative);

        let id = conventional_perron(&l, 0.0, &[1.0; 6]).unwrap();
        let r = spectral_check(&id);
        assert_eq!(r.unit_modulus_count, 6);
        assert!(!r.primitive);
    }

    #[test]
    fn spectral_check_against_symmetrized_oracle() {
        // D_w^{1/2} L̂ D_w^{-1/2} is symmetric, so the robust spectrum is real
        // and can be cross-checked with a symmetric eigensolver.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = NetworkGraph::random_connected(10, 0.2, &mut rng).unwrap();
        let l = g.laplacian();
        let w: Vec<f64> = (0..10).map(|_| rng.random_range(0.1..2.0)).collect();
        let eps = 0.99 * robust_epsilon_bound(&l, &w);
        let m = robust_perron(&l, eps, &w, EpsilonPolicy::Strict).unwrap();
        let report = spectral_check(&m);
        let mut sym = m.matrix.clone();
        for i in 0..10 {
            for j in 0..10 {
                sym[(i, j)] *= w[i].sqrt() / w[j].sqrt();
            }
        }
        let sym = (&sym + sym.transpose()) * 0.5;
        let mut oracle: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
        oracle.sort_by(f64::total_cmp);
        let mut got: Vec<f64> = report.eigenvalues.iter().map(|z| z.re).collect();
        got.sort_by(f64::total_cmp);
        for (a, b) in got.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
        assert!(report.eigenvalues.iter().all(|z| z.im.abs() < 1e-9));
        assert_eq!(report.unit_modulus_count, 1);
    }

    #[test]
    fn six_node_weighted_consensus() {
        let l = six_node_laplacian();
        let m = robust_perron(&l, 0.3, &FIG5_W, EpsilonPolicy::Strict).unwrap();
        let oracle = weighted_average(&FIG5_W, &FIG5_X0);
        assert!((oracle - 24.60 / 4.46).abs() < 1e-12);
        let run = run_consensus(&m, &FIG5_X0, 1e-3, 1000).unwrap();
        let k = run.converged_at.expect("converges");
        assert!((run.fixed_point - oracle).abs() < 1e-3);
        // second-largest eigenvalue modulus ≈ 0.88 on this graph, so the
        // 1e-3 spread needs several dozen iterations
        assert!(k > 20 && k < 100, "converged at {k}");
    }

    #[test]
    fn constant_state_is_fixed() {
        let l = six_node_laplacian();
        let m = robust_perron(&l, 0.3, &FIG5_W, EpsilonPolicy::Strict).unwrap();
        let run = run_consensus(&m, &[2.5; 6], 1e-12, 10).unwrap();
        assert_eq!(run.converged_at, Some(0));
        assert_eq!(run.fixed_point, 2.5);
    }

    #[test]
    fn non_convergence_is_reported() {
        let l = six_node_laplacian();
        let m = conventional_perron(&l, 0.6897, &[1.0; 6]).unwrap();
        let run = run_consensus(&m, &FIG5_X0, 1e-6, 50).unwrap();
        assert!(run.converged_at.is_none());
        assert_eq!(run.trajectory.len(), 51);
        assert!(run_consensus(&m, &[1.0; 3], 1e-6, 5).is_err());
    }

    #[test]
    fn powers() {
        let l = six_node_laplacian();
        let m = conventional_perron(&l, 0.2, &[1.0, 2.0, 1.5, 1.0, 0.7, 1.2]).unwrap();
        assert_eq!(m.power(0), DMatrix::identity(6, 6));
        assert_eq!(m.power(1), m.matrix);
        let p = m.power(37);
        for i in 0..6 {
            assert!((p.row(i).sum() - 1.0).abs() < 1e-10);
        }
        // Perron–Frobenius limit v uᵀ / (vᵀ u) with v = 1 and u the left
        // eigenvector, found by eigensolve of Mᵀ
        let eig = m.matrix.transpose().complex_eigenvalues();
        let idx = (0..6).min_by(|&a, &b| (eig[a] - 1.0).norm().total_cmp(&(eig[b] - 1.0).norm())).unwrap();
        assert!((eig[idx].re - 1.0).abs() < 1e-10);
        let shifted = m.matrix.transpose() - DMatrix::identity(6, 6);
        let svd = shifted.svd(true, true);
        let v_t = svd.v_t.unwrap();
        let smallest = (0..6).min_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b])).unwrap();
        let u: Vec<f64> = v_t.row(smallest).iter().copied().collect();
        let total: f64 = u.iter().sum();
        let stationary: Vec<f64> = u.iter().map(|x| x / total).collect();
        let big = m.power(2000);
        for i in 0..6 {
            for j in 0..6 {
                assert!((big[(i, j)] - stationary[j]).abs() < 1e-9);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn robust_identities_and_fixed_point(seed in any::<u64>(), n in 2usize..25, frac in 0.05f64..0.99) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = NetworkGraph::random_connected(n, 0.15, &mut rng).unwrap();
            let l = g.laplacian();
            let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..3.0)).collect();
            let eps = frac * robust_epsilon_bound(&l, &w);
            let m = robust_perron(&l, eps, &w, EpsilonPolicy::Strict).unwrap();
            prop_assert!(m.row_sum_error() < 1e-12);
            prop_assert!(m.left_eigen_error() < 1e-12);
            prop_assert!(m.is_nonnegative());
            let x0: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
            let run = run_consensus(&m, &x0, 1e-11, 2_000_000).unwrap();
            prop_assert!(run.converged());
            prop_assert!((run.fixed_point - weighted_average(&w, &x0)).abs() <= 1e-9);
        }

        #[test]
        fn power_matches_repeated_steps(seed in any::<u64>(), t in 0u32..40) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = NetworkGraph::random_connected(8, 0.3, &mut rng).unwrap();
            let l = g.laplacian();
            let w: Vec<f64> = (0..8).map(|_| rng.random_range(0.2..2.0)).collect();
            let m = robust_perron(&l, 0.5 * robust_epsilon_bound(&l, &w), &w, EpsilonPolicy::Strict).unwrap();
            let x0 = DVector::from_fn(8, |_, _| rng.random_range(-5.0..5.0));
            let mut x = x0.clone();
            for _ in 0..t {
                x = m.step(&x);
            }
            let direct = m.power(t) * x0;
            prop_assert!((direct - x).abs().max() < 1e-10);
        }
    }
}
