//! One-port element library: device laws, their evaluation on periodic
//! signals, and declared monotonicity data.

use std::hash::{Hash, Hasher};
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::memristive::{self, MemristiveSystem};
use crate::signal::{diff_operator, DenseLinearMap, PeriodicSignal};

/// Direction of a one-port relation: current controlled (`i -> v`) or
/// voltage controlled (`v -> i`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    ItoV,
    VtoI,
}

impl Direction {
    pub fn flipped(self) -> Self {
        match self {
            Direction::ItoV => Direction::VtoI,
            Direction::VtoI => Direction::ItoV,
        }
    }
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Direction::ItoV => write!(f, "i->v"),
            Direction::VtoI => write!(f, "v->i"),
        }
    }
}

/// Periodic modulation profile for time-varying reactances.
///
/// Netlists describe the profile parametrically; library callers may pass
/// pre-sampled values directly.
#[derive(Debug, Clone, PartialEq)]
pub enum Modulation {
    Samples(PeriodicSignal),
    Sine {
        base: f64,
        amplitude: f64,
        cycles: f64,
        phase: f64,
    },
}

impl Modulation {
    pub fn constant(value: f64) -> Self {
        Modulation::Sine {
            base: value,
            amplitude: 0.0,
            cycles: 0.0,
            phase: 0.0,
        }
    }

    /// Samples the profile on the given grid.
    pub fn sample(&self, tau: usize, period: f64) -> Result<Vec<f64>> {
        match self {
            Modulation::Samples(sig) => {
                if sig.len() != tau || sig.period() != period {
                    return Err(Error::ShapeMismatch {
                        expected_len: tau,
                        expected_period: period,
                        actual_len: sig.len(),
                        actual_period: sig.period(),
                    });
                }
                Ok(sig.values().iter().cloned().collect())
            }
            Modulation::Sine {
                base,
                amplitude,
                cycles,
                phase,
            } => Ok((0..tau)
                .map(|k| {
                    let t = k as f64 * period / tau as f64;
                    base + amplitude
                        * (2.0 * std::f64::consts::PI * cycles * t / period + phase).sin()
                })
                .collect()),
        }
    }

    fn hash_into<H: Hasher>(&self, state: &mut H) {
        match self {
            Modulation::Samples(sig) => {
                sig.period().to_bits().hash(state);
                for v in sig.values().iter() {
                    v.to_bits().hash(state);
                }
            }
            Modulation::Sine {
                base,
                amplitude,
                cycles,
                phase,
            } => {
                for v in [base, amplitude, cycles, phase] {
                    v.to_bits().hash(state);
                }
            }
        }
    }
}

/// Device-law variants of the element library.
#[derive(Debug, Clone)]
pub enum ElementKind {
    LinearResistor {
        resistance: f64,
    },
    ShockleyDiode {
        saturation_current: f64,
        ideality: f64,
        thermal_voltage: f64,
    },
    Capacitor {
        capacitance: f64,
    },
    Inductor {
        inductance: f64,
    },
    VarCapacitor {
        modulation: Modulation,
    },
    VarInductor {
        modulation: Modulation,
    },
    /// Parallel resistor/capacitor block: `i = C dv/dt + v/R`.
    RcAdmittance {
        resistance: f64,
        capacitance: f64,
    },
    Memristive {
        system: Arc<dyn MemristiveSystem>,
    },
}

impl PartialEq for ElementKind {
    fn eq(&self, other: &Self) -> bool {
        use ElementKind::*;
        match (self, other) {
            (LinearResistor { resistance: a }, LinearResistor { resistance: b }) => a == b,
            (
                ShockleyDiode {
                    saturation_current: a,
                    ideality: na,
                    thermal_voltage: va,
                },
                ShockleyDiode {
                    saturation_current: b,
                    ideality: nb,
                    thermal_voltage: vb,
                },
            ) => a == b && na == nb && va == vb,
            (Capacitor { capacitance: a }, Capacitor { capacitance: b }) => a == b,
            (Inductor { inductance: a }, Inductor { inductance: b }) => a == b,
            (VarCapacitor { modulation: a }, VarCapacitor { modulation: b }) => a == b,
            (VarInductor { modulation: a }, VarInductor { modulation: b }) => a == b,
            (
                RcAdmittance {
                    resistance: ra,
                    capacitance: ca,
                },
                RcAdmittance {
                    resistance: rb,
                    capacitance: cb,
                },
            ) => ra == rb && ca == cb,
            (Memristive { system: a }, Memristive { system: b }) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

/// A one-port element: a device law plus the direction in which the
/// relation is used. When `direction` differs from the law's native
/// direction, the element stands for the inverse relation.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementSpec {
    pub kind: ElementKind,
    pub direction: Direction,
}

fn require_positive(name: &str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::InvalidSignal(format!(
            "{name} must be strictly positive, got {value}"
        )))
    }
}

impl ElementSpec {
    pub fn resistor(resistance: f64) -> Result<Self> {
        Ok(Self::with_default_direction(ElementKind::LinearResistor {
            resistance: require_positive("R", resistance)?,
        }))
    }

    pub fn diode(saturation_current: f64, ideality: f64, thermal_voltage: f64) -> Result<Self> {
        Ok(Self::with_default_direction(ElementKind::ShockleyDiode {
            saturation_current: require_positive("Is", saturation_current)?,
            ideality: require_positive("n", ideality)?,
            thermal_voltage: require_positive("VT", thermal_voltage)?,
        }))
    }

    pub fn capacitor(capacitance: f64) -> Result<Self> {
        Ok(Self::with_default_direction(ElementKind::Capacitor {
            capacitance: require_positive("C", capacitance)?,
        }))
    }

    pub fn inductor(inductance: f64) -> Result<Self> {
        Ok(Self::with_default_direction(ElementKind::Inductor {
            inductance: require_positive("L", inductance)?,
        }))
    }

    pub fn var_capacitor(modulation: Modulation) -> Result<Self> {
        Ok(Self::with_default_direction(ElementKind::VarCapacitor {
            modulation,
        }))
    }

    pub fn var_inductor(modulation: Modulation) -> Result<Self> {
        Ok(Self::with_default_direction(ElementKind::VarInductor {
            modulation,
        }))
    }

    pub fn rc_admittance(resistance: f64, capacitance: f64) -> Result<Self> {
        Ok(Self::with_default_direction(ElementKind::RcAdmittance {
            resistance: require_positive("R", resistance)?,
            capacitance: require_positive("C", capacitance)?,
        }))
    }

    pub fn memristive(system: Arc<dyn MemristiveSystem>) -> Self {
        Self::with_default_direction(ElementKind::Memristive { system })
    }

    fn with_default_direction(kind: ElementKind) -> Self {
        let direction = native_direction(&kind);
        Self { kind, direction }
    }

    pub fn with_direction(mut self, direction: Direction) -> Self {
        self.direction = direction;
        self
    }

    /// Flips the direction in which the relation is used.
    pub fn inverted(self) -> Self {
        let d = self.direction.flipped();
        self.with_direction(d)
    }

    pub fn native_direction(&self) -> Direction {
        native_direction(&self.kind)
    }

    /// True when the element is used against its law's native direction.
    pub fn is_inverted(&self) -> bool {
        self.direction != self.native_direction()
    }

    /// True for elements whose relation is a dense linear map on signals.
    pub fn is_linear(&self) -> bool {
        !matches!(
            self.kind,
            ElementKind::ShockleyDiode { .. } | ElementKind::Memristive { .. }
        )
    }

    pub fn display_name(&self) -> String {
        let base = match &self.kind {
            ElementKind::LinearResistor { resistance } => format!("resistor(R={resistance})"),
            ElementKind::ShockleyDiode { .. } => "diode".to_string(),
            ElementKind::Capacitor { capacitance } => format!("capacitor(C={capacitance})"),
            ElementKind::Inductor { inductance } => format!("inductor(L={inductance})"),
            ElementKind::VarCapacitor { .. } => "varcap".to_string(),
            ElementKind::VarInductor { .. } => "varind".to_string(),
            ElementKind::RcAdmittance {
                resistance,
                capacitance,
            } => format!("rc(R={resistance},C={capacitance})"),
            ElementKind::Memristive { .. } => "memristor".to_string(),
        };
        if self.is_inverted() {
            format!("{base}^-1")
        } else {
            base
        }
    }

    /// The samplewise law applied in the element's used direction, when the
    /// element is static.
    pub fn scalar_law(&self) -> Option<ScalarLaw> {
        match &self.kind {
            ElementKind::LinearResistor { resistance } => Some(match self.direction {
                Direction::ItoV => ScalarLaw::Linear { slope: *resistance },
                Direction::VtoI => ScalarLaw::Linear {
                    slope: 1.0 / resistance,
                },
            }),
            ElementKind::ShockleyDiode {
                saturation_current,
                ideality,
                thermal_voltage,
            } => {
                let params = (*saturation_current, *ideality, *thermal_voltage);
                Some(match self.direction {
                    Direction::ItoV => ScalarLaw::Shockley {
                        saturation_current: params.0,
                        ideality: params.1,
                        thermal_voltage: params.2,
                    },
                    Direction::VtoI => ScalarLaw::ShockleyInverse {
                        saturation_current: params.0,
                        ideality: params.1,
                        thermal_voltage: params.2,
                    },
                })
            }
            _ => None,
        }
    }

    /// Structural identity used as a factorization cache key. Two specs with
    /// identical laws, parameters and direction share a fingerprint.
    pub fn fingerprint(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        std::mem::discriminant(&self.kind).hash(&mut h);
        self.direction.hash(&mut h);
        match &self.kind {
            ElementKind::LinearResistor { resistance } => resistance.to_bits().hash(&mut h),
            ElementKind::ShockleyDiode {
                saturation_current,
                ideality,
                thermal_voltage,
            } => {
                saturation_current.to_bits().hash(&mut h);
                ideality.to_bits().hash(&mut h);
                thermal_voltage.to_bits().hash(&mut h);
            }
            ElementKind::Capacitor { capacitance } => capacitance.to_bits().hash(&mut h),
            ElementKind::Inductor { inductance } => inductance.to_bits().hash(&mut h),
            ElementKind::VarCapacitor { modulation } => modulation.hash_into(&mut h),
            ElementKind::VarInductor { modulation } => modulation.hash_into(&mut h),
            ElementKind::RcAdmittance {
                resistance,
                capacitance,
            } => {
                resistance.to_bits().hash(&mut h);
                capacitance.to_bits().hash(&mut h);
            }
            ElementKind::Memristive { system } => {
                (Arc::as_ptr(system) as *const () as usize).hash(&mut h)
            }
        }
        h.finish()
    }
}

fn native_direction(kind: &ElementKind) -> Direction {
    match kind {
        ElementKind::LinearResistor { .. }
        | ElementKind::ShockleyDiode { .. }
        | ElementKind::Inductor { .. }
        | ElementKind::VarInductor { .. } => Direction::ItoV,
        ElementKind::Capacitor { .. }
        | ElementKind::VarCapacitor { .. }
        | ElementKind::RcAdmittance { .. } => Direction::VtoI,
        ElementKind::Memristive { system } => system.direction(),
    }
}

/// Scalar monotone device laws, evaluated samplewise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalarLaw {
    Linear {
        slope: f64,
    },
    /// `v = n VT ln(i/Is + 1)` on the open domain `i > -Is`.
    Shockley {
        saturation_current: f64,
        ideality: f64,
        thermal_voltage: f64,
    },
    /// `i = Is (exp(v/(n VT)) - 1)`, full domain.
    ShockleyInverse {
        saturation_current: f64,
        ideality: f64,
        thermal_voltage: f64,
    },
}

impl ScalarLaw {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            ScalarLaw::Linear { slope } => slope * x,
            ScalarLaw::Shockley {
                saturation_current,
                ideality,
                thermal_voltage,
            } => ideality * thermal_voltage * (x / saturation_current + 1.0).ln(),
            ScalarLaw::ShockleyInverse {
                saturation_current,
                ideality,
                thermal_voltage,
            } => saturation_current * ((x / (ideality * thermal_voltage)).exp() - 1.0),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match *self {
            ScalarLaw::Linear { slope } => slope,
            ScalarLaw::Shockley {
                saturation_current,
                ideality,
                thermal_voltage,
            } => ideality * thermal_voltage / (x + saturation_current),
            ScalarLaw::ShockleyInverse {
                saturation_current,
                ideality,
                thermal_voltage,
            } => {
                let scale = ideality * thermal_voltage;
                saturation_current / scale * (x / scale).exp()
            }
        }
    }

    /// Open lower bound of the law's domain, if restricted.
    pub fn lower_bound(&self) -> Option<f64> {
        match *self {
            ScalarLaw::Shockley {
                saturation_current, ..
            } => Some(-saturation_current),
            _ => None,
        }
    }

    pub fn inverse(&self) -> ScalarLaw {
        match *self {
            ScalarLaw::Linear { slope } => ScalarLaw::Linear { slope: 1.0 / slope },
            ScalarLaw::Shockley {
                saturation_current,
                ideality,
                thermal_voltage,
            } => ScalarLaw::ShockleyInverse {
                saturation_current,
                ideality,
                thermal_voltage,
            },
            ScalarLaw::ShockleyInverse {
                saturation_current,
                ideality,
                thermal_voltage,
            } => ScalarLaw::Shockley {
                saturation_current,
                ideality,
                thermal_voltage,
            },
        }
    }

    fn domain_error(&self, sample: usize, value: f64, element: &str) -> Error {
        let domain = match self.lower_bound() {
            Some(lo) => format!("({lo:e}, inf)"),
            None => "(-inf, inf)".to_string(),
        };
        Error::DomainViolation {
            element: element.to_string(),
            sample,
            value,
            domain,
        }
    }
}

/// Coercivity/Lipschitz data `(mu, lambda)` for an operator.
///
/// `mu` is the monotonicity modulus (negative for hypomonotone operators);
/// `lambda` the Lipschitz constant (`+inf` when unbounded). `empirical`
/// marks sample-based estimates that certify nothing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotonicityDescriptor {
    pub mu: f64,
    pub lambda: f64,
    pub empirical: bool,
}

impl MonotonicityDescriptor {
    pub fn new(mu: f64, lambda: f64) -> Self {
        // Cauchy-Schwarz: 0 < mu forces mu <= lambda. Rounding in the
        // numerical eigenvalue/singular-value route can violate this by
        // machine noise; clamp.
        let mu = if mu > 0.0 { mu.min(lambda) } else { mu };
        Self {
            mu,
            lambda,
            empirical: false,
        }
    }

    pub fn empirical(mu: f64, lambda: f64) -> Self {
        Self {
            empirical: true,
            ..Self::new(mu, lambda)
        }
    }

    pub fn unknown() -> Self {
        Self {
            mu: f64::NEG_INFINITY,
            lambda: f64::INFINITY,
            empirical: false,
        }
    }
}

/// Evaluates the element's relation in its used direction.
pub fn element_forward(e: &ElementSpec, u: &PeriodicSignal) -> Result<PeriodicSignal> {
    if let Some(law) = e.scalar_law() {
        return apply_scalar_law(&law, u, &e.display_name());
    }
    match &e.kind {
        ElementKind::Memristive { system } => {
            memristive::periodic_steady_state(
                system.as_ref(),
                u,
                memristive::DEFAULT_STEADY_STATE_TOL,
                memristive::DEFAULT_MAX_PERIODS,
            )
        }
        _ => {
            let matrix = element_matrix(e, u.len(), u.period())?;
            if e.is_inverted() {
                solve_dense(matrix.entries(), u, &e.display_name())
            } else {
                matrix.apply(u)
            }
        }
    }
}

pub(crate) fn apply_scalar_law(
    law: &ScalarLaw,
    u: &PeriodicSignal,
    element: &str,
) -> Result<PeriodicSignal> {
    let mut out = u.values().clone();
    for (k, x) in u.values().iter().enumerate() {
        if let Some(lo) = law.lower_bound() {
            if *x <= lo {
                return Err(law.domain_error(k, *x, element));
            }
        }
        let y = law.eval(*x);
        if !y.is_finite() {
            return Err(law.domain_error(k, *x, element));
        }
        out[k] = y;
    }
    u.with_values(out)
}

pub(crate) fn solve_dense(
    matrix: &DMatrix<f64>,
    rhs: &PeriodicSignal,
    context: &str,
) -> Result<PeriodicSignal> {
    let lu = matrix.clone().lu();
    let rcond = lu_rcond(&lu);
    match lu.solve(rhs.values()) {
        Some(x) if x.iter().all(|v| v.is_finite()) => rhs.with_values(x),
        _ => Err(Error::Singular {
            rcond,
            context: context.to_string(),
        }),
    }
}

pub(crate) fn lu_rcond(lu: &nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>) -> f64 {
    let u = lu.u();
    let mut min = f64::INFINITY;
    let mut max: f64 = 0.0;
    for k in 0..u.nrows().min(u.ncols()) {
        let d = u[(k, k)].abs();
        min = min.min(d);
        max = max.max(d);
    }
    if max == 0.0 {
        0.0
    } else {
        min / max
    }
}

/// Assembles the dense matrix of a linear element's native-direction map.
pub fn element_matrix(e: &ElementSpec, tau: usize, period: f64) -> Result<DenseLinearMap> {
    let d = || diff_operator(tau, period);
    match &e.kind {
        ElementKind::LinearResistor { resistance } => {
            Ok(DenseLinearMap::new(DMatrix::identity(tau, tau) * *resistance)?)
        }
        ElementKind::Capacitor { capacitance } => {
            DenseLinearMap::new(d()?.into_entries() * *capacitance)
        }
        ElementKind::Inductor { inductance } => {
            DenseLinearMap::new(d()?.into_entries() * *inductance)
        }
        ElementKind::VarCapacitor { modulation } => {
            modulated_difference(&modulation.sample(tau, period)?, tau, period)
        }
        ElementKind::VarInductor { modulation } => {
            modulated_difference(&modulation.sample(tau, period)?, tau, period)
        }
        ElementKind::RcAdmittance {
            resistance,
            capacitance,
        } => {
            let mut m = d()?.into_entries() * *capacitance;
            for k in 0..tau {
                m[(k, k)] += 1.0 / resistance;
            }
            DenseLinearMap::new(m)
        }
        ElementKind::ShockleyDiode { .. } | ElementKind::Memristive { .. } => {
            Err(Error::Unsupported {
                element: e.display_name(),
                operation: "dense matrix assembly (element is not linear)".to_string(),
            })
        }
    }
}

/// `diag(m) * D * diag(m)` for the time-varying reactances.
fn modulated_difference(profile: &[f64], tau: usize, period: f64) -> Result<DenseLinearMap> {
    let mut m = diff_operator(tau, period)?.into_entries();
    for i in 0..tau {
        for j in 0..tau {
            m[(i, j)] *= profile[i] * profile[j];
        }
    }
    DenseLinearMap::new(m)
}

/// Coercivity and Lipschitz data for the element as used (its declared
/// direction). Linear elements are measured numerically from the assembled
/// matrix; the diode is monotone with no global constants; memristive
/// elements report whatever descriptor their system carries.
pub fn monotonicity_of(e: &ElementSpec, tau: usize, period: f64) -> MonotonicityDescriptor {
    match &e.kind {
        ElementKind::LinearResistor { resistance } => {
            let slope = match e.direction {
                Direction::ItoV => *resistance,
                Direction::VtoI => 1.0 / resistance,
            };
            MonotonicityDescriptor::new(slope, slope)
        }
        ElementKind::ShockleyDiode { .. } => MonotonicityDescriptor::new(0.0, f64::INFINITY),
        ElementKind::Memristive { system } => {
            system.descriptor().unwrap_or_else(MonotonicityDescriptor::unknown)
        }
        _ => {
            let native = match element_matrix(e, tau, period) {
                Ok(m) => m,
                Err(_) => return MonotonicityDescriptor::unknown(),
            };
            let effective = if e.is_inverted() {
                match native.entries().clone().try_inverse() {
                    Some(inv) => match DenseLinearMap::new(inv) {
                        Ok(m) => m,
                        Err(_) => return MonotonicityDescriptor::new(0.0, f64::INFINITY),
                    },
                    // singular native map: the inverse relation is still
                    // monotone but has unbounded gain
                    None => return MonotonicityDescriptor::new(0.0, f64::INFINITY),
                }
            } else {
                native
            };
            MonotonicityDescriptor::new(
                effective.symmetric_part_min_eigenvalue(),
                effective.max_singular_value(),
            )
        }
    }
}
