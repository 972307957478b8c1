//! Contraction certificate for the nested solver: assembles the
//! nonnegative gain matrix coupling the per-signal update norms, computes
//! its spectral radius, and sweeps step sizes.

use nalgebra::DMatrix;

use crate::elements::MonotonicityDescriptor;
use crate::error::{Error, Result};
use crate::signal::DenseLinearMap;

/// Per-position gain data for a ladder iteration: `beta1` bounds the
/// forward step `I - alpha_1 E_0`, `gammas[j]` the Lipschitz constant of
/// the j-th resolvent step, `alphas[j]` its step size.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderDescriptors {
    pub beta1: f64,
    pub gammas: Vec<f64>,
    pub alphas: Vec<f64>,
}

impl LadderDescriptors {
    pub fn new(beta1: f64, gammas: Vec<f64>, alphas: Vec<f64>) -> Result<Self> {
        if gammas.is_empty() {
            return Err(Error::Empty("ladder descriptor gains".to_string()));
        }
        if gammas.len() != alphas.len() {
            return Err(Error::InvalidSignal(format!(
                "{} resolvent gains vs {} step sizes",
                gammas.len(),
                alphas.len()
            )));
        }
        Ok(Self {
            beta1,
            gammas,
            alphas,
        })
    }

    pub fn len(&self) -> usize {
        self.gammas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gammas.is_empty()
    }
}

/// Which bound to use for the forward-step gain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ForwardStepBound {
    /// `1 - 2 mu alpha + lambda^2 alpha^2`: the squared-norm ratio, used
    /// verbatim as the certificate gain (the conventional choice for this
    /// certificate; see [`forward_step_factor`]).
    #[default]
    Stated,
    /// Square root of the stated factor: the actual Lipschitz constant of
    /// `I - alpha E_0`, a strictly tighter certificate.
    SquareRoot,
}

/// Gain of the forward step `I - alpha E_0` for a mu-coercive,
/// lambda-Lipschitz `E_0`: `1 - 2 mu alpha + lambda^2 alpha^2`.
///
/// Strictly speaking this expression bounds the *squared* norm ratio, so
/// its square root is the true Lipschitz constant; the unrooted form is
/// what the certificate below conventionally uses, and
/// [`ForwardStepBound::SquareRoot`] selects the tighter variant.
pub fn forward_step_factor(mu: f64, lambda: f64, alpha: f64) -> f64 {
    1.0 - 2.0 * mu * alpha + lambda * lambda * alpha * alpha
}

/// Lipschitz constant `1/(1 + alpha mu)` of the resolvent of a mu-coercive
/// monotone operator (`1` when mu = 0).
pub fn resolvent_factor(mu: f64, alpha: f64) -> f64 {
    1.0 / (1.0 + alpha * mu)
}

/// Assembles the update-coupling matrix row-recursively:
///
/// - row 1 = `gamma_1 beta_1 e_1 + gamma_1 alpha_1 e_2`
/// - row j = `gamma_j e_j + gamma_j alpha_j (row j-1) + gamma_j alpha_j e_{j+1}`
///
/// with the out-of-range trailing term dropped on the last row. Row j
/// inherits row j-1 because each sweep consumes the *updated* previous
/// signal. The matrix is elementwise nonnegative for nonnegative inputs.
pub fn build_contraction_matrix(d: &LadderDescriptors) -> DenseLinearMap {
    let m = d.len();
    let mut a = DMatrix::zeros(m, m);
    for j in 0..m {
        let g = d.gammas[j];
        let al = d.alphas[j];
        if j == 0 {
            a[(0, 0)] = g * d.beta1;
        } else {
            a[(j, j)] = g;
            let coupling = g * al;
            for c in 0..m {
                a[(j, c)] += coupling * a[(j - 1, c)];
            }
        }
        if j + 1 < m {
            let coupling = if j == 0 { g * d.alphas[0] } else { g * al };
            a[(j, j + 1)] += coupling;
        }
    }
    DenseLinearMap::new(a).expect("square by construction")
}

/// Largest eigenvalue magnitude, from a dense eigensolve.
pub fn spectral_radius(a: &DenseLinearMap) -> Result<f64> {
    if a.dim() == 0 {
        return Err(Error::Empty("spectral radius of empty matrix".to_string()));
    }
    let eigs = a.entries().clone().complex_eigenvalues();
    Ok(eigs.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// One point of a step-size sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub alpha: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub best_alpha: f64,
    pub best_rho: f64,
    pub curve: Vec<SweepPoint>,
}

/// Evaluates the certificate's spectral radius over a grid of common step
/// sizes (one alpha broadcast across every position) and reports the
/// minimizer and the full curve.
///
/// `forward` describes the forward-step element; `resolvent_mus` the
/// coercivity moduli of the resolvent-side elements, in sweep order.
pub fn tune_step_size(
    forward: &MonotonicityDescriptor,
    resolvent_mus: &[f64],
    grid: &[f64],
    bound: ForwardStepBound,
) -> Result<TuneResult> {
    if grid.is_empty() {
        return Err(Error::Empty("step-size grid".to_string()));
    }
    if resolvent_mus.is_empty() {
        return Err(Error::Empty("resolvent coercivity moduli".to_string()));
    }
    let mut curve = Vec::with_capacity(grid.len());
    for &alpha in grid {
        let rho = if alpha == 0.0 {
            1.0 // the coupling matrix degenerates to the identity
        } else {
            let d = descriptors_for_alpha(forward, resolvent_mus, alpha, bound)?;
            spectral_radius(&build_contraction_matrix(&d))?
        };
        curve.push(SweepPoint { alpha, rho });
    }
    let best = curve
        .iter()
        .cloned()
        .min_by(|a, b| a.rho.total_cmp(&b.rho))
        .expect("nonempty grid");
    Ok(TuneResult {
        best_alpha: best.alpha,
        best_rho: best.rho,
        curve,
    })
}

/// Builds ladder descriptors for a common broadcast step size.
pub fn descriptors_for_alpha(
    forward: &MonotonicityDescriptor,
    resolvent_mus: &[f64],
    alpha: f64,
    bound: ForwardStepBound,
) -> Result<LadderDescriptors> {
    let stated = forward_step_factor(forward.mu, forward.lambda, alpha);
    let beta1 = match bound {
        ForwardStepBound::Stated => stated,
        ForwardStepBound::SquareRoot => stated.max(0.0).sqrt(),
    };
    let gammas = resolvent_mus
        .iter()
        .map(|&mu| resolvent_factor(mu.max(0.0), alpha))
        .collect();
    LadderDescriptors::new(beta1, gammas, vec![alpha; resolvent_mus.len()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn forward_factor_values() {
        assert_relative_eq!(forward_step_factor(1.0, 1.0, 1.0), 0.0);
        assert_relative_eq!(forward_step_factor(1.0, 2.0, 0.25), 0.75);
        assert_relative_eq!(forward_step_factor(1.0, 2.0, 0.5), 1.0);
    }

    #[test]
    fn resolvent_factor_values() {
        assert_relative_eq!(resolvent_factor(0.0, 0.7), 1.0);
        assert_relative_eq!(resolvent_factor(1.0, 1.0), 0.5);
        assert_relative_eq!(resolvent_factor(1.0, 0.25), 0.8);
    }

    #[test]
    fn single_pair_matrix() {
        let d = LadderDescriptors::new(0.4, vec![0.9], vec![0.3]).unwrap();
        let a = build_contraction_matrix(&d);
        assert_eq!(a.dim(), 1);
        assert_relative_eq!(a.entries()[(0, 0)], 0.9 * 0.4);
    }

    #[test]
    fn two_step_matrix_matches_closed_form() {
        let (b1, g1, g2, a1, a2) = (0.75, 0.8, 0.8, 0.25, 0.25);
        let d = LadderDescriptors::new(b1, vec![g1, g2], vec![a1, a2]).unwrap();
        let a = build_contraction_matrix(&d);
        assert_relative_eq!(a.entries()[(0, 0)], g1 * b1);
        assert_relative_eq!(a.entries()[(0, 1)], g1 * a1);
        assert_relative_eq!(a.entries()[(1, 0)], a2 * b1 * g1 * g2);
        assert_relative_eq!(a.entries()[(1, 1)], g2 * (1.0 + g1 * a1 * a2));
    }

    /// Closed-form columns of the coupling matrix, written out directly
    /// from the per-row inequalities; independent of the recursive builder.
    fn explicit_matrix(d: &LadderDescriptors) -> DMatrix<f64> {
        let m = d.len();
        let g = &d.gammas;
        let al = &d.alphas;
        let mut a = DMatrix::zeros(m, m);
        // column 0: beta1 prefix products
        for j in 0..m {
            let mut v = d.beta1;
            for k in 0..=j {
                v *= g[k];
            }
            for k in 1..=j {
                v *= al[k];
            }
            a[(j, 0)] = v;
        }
        // column c >= 1: zero above row c-1, corner gamma_{c-1} alpha_{c-1},
        // then (1 + gamma_{c-1} alpha_{c-1} alpha_c) prefix products
        for c in 1..m {
            a[(c - 1, c)] = g[c - 1] * al[c - 1];
            for j in c..m {
                let mut v = 1.0 + g[c - 1] * al[c - 1] * al[c];
                for k in c..=j {
                    v *= g[k];
                }
                for k in (c + 1)..=j {
                    v *= al[k];
                }
                a[(j, c)] = v;
            }
        }
        a
    }

    #[test]
    fn recursive_builder_equals_explicit_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for m in 1..=6 {
            for _ in 0..20 {
                let beta1 = rng.gen_range(0.1..1.5);
                let gammas: Vec<f64> = (0..m).map(|_| rng.gen_range(0.1..1.0)).collect();
                let alphas: Vec<f64> = (0..m).map(|_| rng.gen_range(0.05..2.0)).collect();
                let d = LadderDescriptors::new(beta1, gammas, alphas).unwrap();
                let recursive = build_contraction_matrix(&d);
                let explicit = explicit_matrix(&d);
                let diff = (recursive.entries() - &explicit).amax();
                assert!(diff < 1e-13, "m={m}: max diff {diff}");
            }
        }
    }

    #[test]
    fn matrix_is_nonnegative() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..50 {
            let m = rng.gen_range(1..=7);
            let d = LadderDescriptors::new(
                rng.gen_range(0.0..2.0),
                (0..m).map(|_| rng.gen_range(0.0..1.0)).collect(),
                (0..m).map(|_| rng.gen_range(0.0..3.0)).collect(),
            )
            .unwrap();
            let a = build_contraction_matrix(&d);
            assert!(a.entries().iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn spectral_radius_examples() {
        let id = DenseLinearMap::identity(4);
        assert_relative_eq!(spectral_radius(&id).unwrap(), 1.0, epsilon = 1e-12);

        let m = DenseLinearMap::new(DMatrix::from_row_slice(2, 2, &[0.6, 0.2, 0.12, 0.84]))
            .unwrap();
        // trace/determinant closed form: (tr + sqrt(tr^2 - 4 det)) / 2
        let tr = 1.44;
        let det: f64 = 0.6 * 0.84 - 0.2 * 0.12;
        let oracle = (tr + (tr * tr - 4.0 * det).sqrt()) / 2.0;
        assert_relative_eq!(spectral_radius(&m).unwrap(), oracle, epsilon = 1e-12);
        assert_relative_eq!(spectral_radius(&m).unwrap(), 0.916, epsilon = 2e-3);

        let diag =
            DenseLinearMap::new(DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.3])).unwrap();
        assert_relative_eq!(spectral_radius(&diag).unwrap(), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn spectral_radius_monotone_in_gammas() {
        // nonnegative matrices: raising any gamma cannot shrink the radius
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..30 {
            let m = rng.gen_range(2..=5);
            let gammas: Vec<f64> = (0..m).map(|_| rng.gen_range(0.2..0.9)).collect();
            let alphas: Vec<f64> = (0..m).map(|_| rng.gen_range(0.1..1.0)).collect();
            let beta1 = rng.gen_range(0.2..1.2);
            let base = spectral_radius(&build_contraction_matrix(
                &LadderDescriptors::new(beta1, gammas.clone(), alphas.clone()).unwrap(),
            ))
            .unwrap();
            let bump = rng.gen_range(0..m);
            let mut raised = gammas.clone();
            raised[bump] = (raised[bump] + 0.05).min(1.0);
            let after = spectral_radius(&build_contraction_matrix(
                &LadderDescriptors::new(beta1, raised, alphas).unwrap(),
            ))
            .unwrap();
            assert!(after >= base - 1e-12, "{after} < {base}");
        }
    }

    #[test]
    fn three_element_sweep_reproduces_known_curve() {
        // mu_1 = mu_2 = mu_3 = 1, lambda_1 = 2: radius below 1 exactly on
        // (0, 0.5), best step near 0.27, rho(0.25) ~ 0.916.
        let forward = MonotonicityDescriptor::new(1.0, 2.0);
        let mus = [1.0, 1.0];
        let grid: Vec<f64> = (1..120).map(|k| k as f64 * 0.005).collect();
        let result = tune_step_size(&forward, &mus, &grid, ForwardStepBound::Stated).unwrap();
        assert!(result.best_alpha > 0.22 && result.best_alpha < 0.32, "{}", result.best_alpha);
        for p in &result.curve {
            if p.alpha >= 0.05 && p.alpha <= 0.45 {
                assert!(p.rho < 1.0, "rho({}) = {}", p.alpha, p.rho);
            }
            if p.alpha >= 0.55 {
                assert!(p.rho >= 1.0 - 1e-9, "rho({}) = {}", p.alpha, p.rho);
            }
        }
        let at_025 = result
            .curve
            .iter()
            .find(|p| (p.alpha - 0.25).abs() < 1e-12)
            .unwrap();
        assert_relative_eq!(at_025.rho, 0.916, epsilon = 2e-3);
    }

    #[test]
    fn zero_alpha_grid_point_gives_identity_radius() {
        let forward = MonotonicityDescriptor::new(1.0, 2.0);
        let result =
            tune_step_size(&forward, &[1.0], &[0.0], ForwardStepBound::Stated).unwrap();
        assert_relative_eq!(result.curve[0].rho, 1.0);
    }

    #[test]
    fn empty_grid_rejected() {
        let forward = MonotonicityDescriptor::new(1.0, 2.0);
        assert!(tune_step_size(&forward, &[1.0], &[], ForwardStepBound::Stated).is_err());
    }

    #[test]
    fn sqrt_bound_is_tighter() {
        let forward = MonotonicityDescriptor::new(1.0, 2.0);
        let grid = [0.25];
        let stated = tune_step_size(&forward, &[1.0, 1.0], &grid, ForwardStepBound::Stated)
            .unwrap()
            .best_rho;
        let rooted = tune_step_size(&forward, &[1.0, 1.0], &grid, ForwardStepBound::SquareRoot)
            .unwrap()
            .best_rho;
        assert!(rooted <= stated);
    }
}
