//! Resolvents `(I + alpha S)^{-1}` of one-port elements: factorized dense
//! solves for linear operators (with a factorization cache keyed by element
//! identity), the inverse-operator identity for relations used backwards,
//! and guarded Newton for scalar static laws.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use nalgebra::{DMatrix, DVector, Dyn, LU};

use crate::elements::{lu_rcond, ElementSpec, ScalarLaw};
use crate::error::{Error, Result};
use crate::signal::{DenseLinearMap, PeriodicSignal};

/// Factorizations with reciprocal condition estimates below this are
/// rejected as singular.
const RCOND_FLOOR: f64 = 1e-14;

/// A reusable solver for `x = (I + alpha A)^{-1} z`, or for the inverse
/// relation `x = (I + alpha A^{-1})^{-1} z = A (A + alpha I)^{-1} z`.
#[derive(Debug)]
pub struct FactorizedResolvent {
    lu: LU<f64, Dyn, Dyn>,
    /// Applied after the triangular solve; present for inverse-relation
    /// resolvents (the factored matrix commutes with it, so the order is
    /// immaterial).
    post_multiply: Option<DMatrix<f64>>,
    dim: usize,
    rcond: f64,
}

impl FactorizedResolvent {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Reciprocal condition estimate of the factored matrix (ratio of
    /// extreme pivot magnitudes).
    pub fn rcond(&self) -> f64 {
        self.rcond
    }

    pub fn apply_vector(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        if z.len() != self.dim {
            return Err(Error::ShapeMismatch {
                expected_len: self.dim,
                expected_period: f64::NAN,
                actual_len: z.len(),
                actual_period: f64::NAN,
            });
        }
        let solved = self.lu.solve(z).ok_or(Error::Singular {
            rcond: self.rcond,
            context: "resolvent triangular solve".to_string(),
        })?;
        Ok(match &self.post_multiply {
            Some(m) => m * solved,
            None => solved,
        })
    }

    pub fn apply(&self, z: &PeriodicSignal) -> Result<PeriodicSignal> {
        PeriodicSignal::from_vector(self.apply_vector(z.values())?, z.period())
    }
}

fn factor(matrix: DMatrix<f64>, post_multiply: Option<DMatrix<f64>>) -> Result<FactorizedResolvent> {
    let dim = matrix.nrows();
    let lu = matrix.lu();
    let rcond = lu_rcond(&lu);
    if rcond < RCOND_FLOOR {
        return Err(Error::Singular {
            rcond,
            context: "resolvent factorization".to_string(),
        });
    }
    Ok(FactorizedResolvent {
        lu,
        post_multiply,
        dim,
        rcond,
    })
}

/// Factorizes `I + alpha A`.
pub fn linear_resolvent(a: &DenseLinearMap, alpha: f64) -> Result<FactorizedResolvent> {
    require_positive_step(alpha)?;
    let mut m = a.entries() * alpha;
    for k in 0..a.dim() {
        m[(k, k)] += 1.0;
    }
    factor(m, None)
}

/// Resolvent of the inverse relation: computes
/// `(I + alpha A^{-1})^{-1} z = A (A + alpha I)^{-1} z`
/// from a single factorization of `A + alpha I`; `A^{-1}` is never formed.
pub fn inverse_linear_resolvent(a: &DenseLinearMap, alpha: f64) -> Result<FactorizedResolvent> {
    require_positive_step(alpha)?;
    let mut m = a.entries().clone();
    for k in 0..a.dim() {
        m[(k, k)] += alpha;
    }
    factor(m, Some(a.entries().clone()))
}

fn require_positive_step(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidSignal(format!(
            "resolvent step must be positive, got {alpha}"
        )))
    }
}

/// Default tolerance for scalar resolvent solves: two orders below the
/// outer fixed-point tolerances in typical use.
pub fn default_scalar_tol(z: f64) -> f64 {
    1e-12 * z.abs().max(1.0)
}

const MAX_BRACKET_EXPANSIONS: u32 = 64;

/// Solves `x + alpha f(x) = z` for a nondecreasing scalar law `f` by Newton
/// steps guarded by a sign-change bracket; steps leaving the bracket fall
/// back to bisection. Never evaluates `f` outside its open domain.
///
/// When the exact root lies closer to an open domain boundary than the
/// nearest representable number (a diode pinned deep in reverse blocking),
/// the boundary-adjacent representable point is returned.
pub fn guarded_newton_resolvent(law: &ScalarLaw, alpha: f64, z: f64, tol: f64) -> Result<f64> {
    require_positive_step(alpha)?;
    let g = |x: f64| x + alpha * law.eval(x) - z;
    let dg = |x: f64| 1.0 + alpha * law.derivative(x);

    let mut lo = z.min(0.0) - 1.0;
    let mut hi = z.max(0.0) + 1.0;
    let boundary = law.lower_bound();
    if let Some(b) = boundary {
        let first_inside = next_up(b);
        if lo <= b {
            lo = first_inside.max(b + (hi - b) * 1e-6).min(hi);
        }
    }

    // Expand downward until g(lo) <= 0. With a finite open boundary the
    // expansion halves the gap to it instead of stepping past it.
    let mut expansions = 0;
    let mut width = hi - lo;
    while g(lo) > 0.0 {
        expansions += 1;
        let next = match boundary {
            Some(b) => b + (lo - b) / 2.0,
            None => lo - width,
        };
        if expansions > MAX_BRACKET_EXPANSIONS || next >= lo {
            return match boundary {
                // root squeezed between the boundary and the first
                // representable point inside the domain
                Some(_) => Ok(lo),
                None => Err(Error::BracketingFailure {
                    expansions,
                    residual: g(lo),
                }),
            };
        }
        lo = next;
        width *= 2.0;
    }

    expansions = 0;
    width = (hi - lo).max(1.0);
    while g(hi) < 0.0 {
        expansions += 1;
        if expansions > MAX_BRACKET_EXPANSIONS {
            return Err(Error::BracketingFailure {
                expansions,
                residual: g(hi),
            });
        }
        hi += width;
        width *= 2.0;
    }

    let mut x = z.clamp(lo, hi);
    for _ in 0..200 {
        let gx = g(x);
        if gx.abs() <= tol {
            return Ok(x);
        }
        if gx > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        if hi <= next_up(lo) {
            // bracket exhausted at machine resolution
            return Ok(if g(lo).abs() <= g(hi).abs() { lo } else { hi });
        }
        let newton = x - gx / dg(x);
        x = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    Ok(x)
}

fn next_up(x: f64) -> f64 {
    // f64::next_up, kept local to avoid the MSRV question
    if x.is_nan() || x == f64::INFINITY {
        return x;
    }
    if x == 0.0 {
        return f64::from_bits(1);
    }
    let bits = x.to_bits();
    f64::from_bits(if x > 0.0 { bits + 1 } else { bits - 1 })
}

type CacheKey = (u64, u64, u64, u64);

/// Shared store of linear resolvent factorizations keyed by
/// (element fingerprint, step size, grid). Ladder solves with many
/// identical units hit the same entry.
#[derive(Debug, Default)]
pub struct ResolventCache {
    entries: Mutex<HashMap<CacheKey, Arc<FactorizedResolvent>>>,
}

impl ResolventCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get_or_build<F>(&self, key: CacheKey, build: F) -> Result<Arc<FactorizedResolvent>>
    where
        F: FnOnce() -> Result<FactorizedResolvent>,
    {
        if let Some(hit) = self.entries.lock().unwrap().get(&key) {
            return Ok(Arc::clone(hit));
        }
        // built outside the lock: factorization is the expensive part
        let fresh = Arc::new(build()?);
        let mut map = self.entries.lock().unwrap();
        Ok(Arc::clone(map.entry(key).or_insert(fresh)))
    }
}

/// Builds (or fetches) the factorized resolvent of a linear element on the
/// given grid, honoring the element's used direction.
pub fn cached_linear_resolvent(
    e: &ElementSpec,
    alpha: f64,
    tau: usize,
    period: f64,
    cache: &ResolventCache,
) -> Result<Arc<FactorizedResolvent>> {
    let key = (e.fingerprint(), alpha.to_bits(), tau as u64, period.to_bits());
    cache.get_or_build(key, || {
        let native = crate::elements::element_matrix(e, tau, period)?;
        if e.is_inverted() {
            inverse_linear_resolvent(&native, alpha)
        } else {
            linear_resolvent(&native, alpha)
        }
    })
}

/// Resolvent `Res_{alpha E}` of an element, dispatching on its law:
/// factorized solves for linear elements, samplewise guarded Newton for
/// static nonlinear laws. `invert` requests the resolvent of the reversed
/// relation instead. Memristive resolvents are not provided.
pub fn element_resolvent(
    e: &ElementSpec,
    alpha: f64,
    z: &PeriodicSignal,
    invert: bool,
    cache: &ResolventCache,
) -> Result<PeriodicSignal> {
    let used = if invert {
        e.clone().inverted()
    } else {
        e.clone()
    };
    if let Some(law) = used.scalar_law() {
        let mut out = z.values().clone();
        for (k, zk) in z.values().iter().enumerate() {
            out[k] = guarded_newton_resolvent(&law, alpha, *zk, default_scalar_tol(*zk))?;
        }
        return z.with_values(out);
    }
    if matches!(used.kind, crate::elements::ElementKind::Memristive { .. }) {
        return Err(Error::Unsupported {
            element: used.display_name(),
            operation: "resolvent (memristive elements are forward-only)".to_string(),
        });
    }
    cached_linear_resolvent(&used, alpha, z.len(), z.period(), cache)?.apply(z)
}
