//! Memristive one-ports: state-space conductances realized as operators on
//! the periodic signal space by integrating their (contractive) internal
//! dynamics to the unique periodic orbit.

use crate::elements::{Direction, MonotonicityDescriptor};
use crate::error::{Error, Result};
use crate::signal::PeriodicSignal;

pub const DEFAULT_STEADY_STATE_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_PERIODS: usize = 5000;

/// State-space one-port with resistive output: `dx/dt = f(x, u, t)`,
/// `y = g(x, u, t)`. The state dynamics must be contractive for the
/// periodic steady state to be well defined; that is the caller's
/// responsibility.
pub trait MemristiveSystem: std::fmt::Debug + Send + Sync {
    fn state_dim(&self) -> usize;

    /// Starting state for the period-map iteration.
    fn initial_state(&self) -> Vec<f64>;

    /// Writes `f(x, u, t)` into `out`.
    fn state_derivative(&self, state: &[f64], input: f64, time: f64, out: &mut [f64]);

    /// Port output `y = g(x, u, t)`.
    fn output(&self, state: &[f64], input: f64, time: f64) -> f64;

    fn direction(&self) -> Direction;

    /// Declared or empirically estimated monotonicity data, if any.
    fn descriptor(&self) -> Option<MonotonicityDescriptor> {
        None
    }

    /// Box domain the state must stay inside, e.g. a gating variable in
    /// [0, 1]. `None` leaves the state unconstrained.
    fn state_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        None
    }
}

/// Allowed overshoot before an excursion outside the state box is treated
/// as a modeling bug rather than integration noise.
const BOX_SLACK: f64 = 1e-6;

/// Classical fixed-step RK4 over one period, with the input interpolated
/// linearly between grid samples. Returns the sampled output trajectory and
/// the end state.
pub fn integrate_period(
    sys: &dyn MemristiveSystem,
    input: &PeriodicSignal,
    x0: &[f64],
) -> Result<(PeriodicSignal, Vec<f64>)> {
    let tau = input.len();
    let h = input.period() / tau as f64;
    let dim = sys.state_dim();
    assert_eq!(x0.len(), dim, "state dimension mismatch");

    let u_at = |k: usize, frac: f64| -> f64 {
        let a = input.values()[k % tau];
        let b = input.values()[(k + 1) % tau];
        a + (b - a) * frac
    };

    let mut x = x0.to_vec();
    let mut out = Vec::with_capacity(tau);
    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut stage = vec![0.0; dim];

    for k in 0..tau {
        let t = k as f64 * h;
        out.push(sys.output(&x, input.values()[k], t));

        let u0 = u_at(k, 0.0);
        let uh = u_at(k, 0.5);
        let u1 = u_at(k, 1.0);

        sys.state_derivative(&x, u0, t, &mut k1);
        for i in 0..dim {
            stage[i] = x[i] + 0.5 * h * k1[i];
        }
        sys.state_derivative(&stage, uh, t + 0.5 * h, &mut k2);
        for i in 0..dim {
            stage[i] = x[i] + 0.5 * h * k2[i];
        }
        sys.state_derivative(&stage, uh, t + 0.5 * h, &mut k3);
        for i in 0..dim {
            stage[i] = x[i] + h * k3[i];
        }
        sys.state_derivative(&stage, u1, t + h, &mut k4);
        for i in 0..dim {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }

        if let Some((lo, hi)) = sys.state_box() {
            for i in 0..dim {
                let excess = (lo[i] - x[i]).max(x[i] - hi[i]);
                if excess > BOX_SLACK {
                    return Err(Error::StateDomain {
                        component: i,
                        excess,
                        time: t + h,
                    });
                }
                x[i] = x[i].clamp(lo[i], hi[i]);
            }
        }
    }

    Ok((PeriodicSignal::new(out, input.period())?, x))
}

/// Iterates the period map `x0 -> xT` to its fixed point and returns the
/// output trajectory over the final period. This realizes the memristive
/// system as an operator on the periodic signal space.
pub fn periodic_steady_state(
    sys: &dyn MemristiveSystem,
    input: &PeriodicSignal,
    tol: f64,
    max_periods: usize,
) -> Result<PeriodicSignal> {
    let mut x = sys.initial_state();
    for _ in 0..max_periods {
        let (output, x_end) = integrate_period(sys, input, &x)?;
        let gap = x
            .iter()
            .zip(&x_end)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        x = x_end;
        if gap <= tol {
            return Ok(output);
        }
    }
    Err(Error::Structure(format!(
        "period map did not settle within {max_periods} periods (non-contractive dynamics?)"
    )))
}

/// Hodgkin-Huxley potassium channel conductance:
/// `i = g_bar n^4 (v - v_k)` with first-order gate kinetics
/// `dn/dt = alpha_n(v) (1 - n) - beta_n(v) n`.
///
/// Computed in the classic mixed units (rate constants per ms, v in mV,
/// g_bar in m.mho/cm^2), numbers taken verbatim.
#[derive(Debug, Clone)]
pub struct PotassiumConductance {
    pub g_bar: f64,
    pub v_k: f64,
}

impl Default for PotassiumConductance {
    fn default() -> Self {
        Self {
            g_bar: 19.0,
            v_k: 12.0,
        }
    }
}

/// Gate opening rate. The expression `0.01 (10 + v) / (exp(1 + v/10) - 1)`
/// has a removable singularity at v = -10, evaluated by a 3-term expansion
/// of x/(e^x - 1) near x = 0.
pub fn alpha_n(v: f64) -> f64 {
    let x = 1.0 + v / 10.0;
    if x.abs() < 1e-4 {
        0.1 * (1.0 - x / 2.0 + x * x / 12.0)
    } else {
        0.1 * x / (x.exp() - 1.0)
    }
}

/// Gate closing rate `0.125 exp(v/80)`.
pub fn beta_n(v: f64) -> f64 {
    0.125 * (v / 80.0).exp()
}

impl MemristiveSystem for PotassiumConductance {
    fn state_dim(&self) -> usize {
        1
    }

    fn initial_state(&self) -> Vec<f64> {
        // gate equilibrium at v = 0
        let (a, b) = (alpha_n(0.0), beta_n(0.0));
        vec![a / (a + b)]
    }

    fn state_derivative(&self, state: &[f64], input: f64, _time: f64, out: &mut [f64]) {
        let n = state[0];
        out[0] = alpha_n(input) * (1.0 - n) - beta_n(input) * n;
    }

    fn output(&self, state: &[f64], input: f64, _time: f64) -> f64 {
        let n = state[0];
        self.g_bar * n.powi(4) * (input - self.v_k)
    }

    fn direction(&self) -> Direction {
        Direction::VtoI
    }

    fn state_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        Some((vec![0.0], vec![1.0]))
    }
}

/// Steady-state potassium current for a periodic voltage input.
pub fn potassium_forward(v: &PeriodicSignal) -> Result<PeriodicSignal> {
    let sys = PotassiumConductance::default();
    periodic_steady_state(&sys, v, DEFAULT_STEADY_STATE_TOL, DEFAULT_MAX_PERIODS)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{sample_waveform, WaveformSpec};
    use approx::assert_relative_eq;

    /// `dx/dt = -x + u`, output x: closed-form oracle for the integrator.
    #[derive(Debug)]
    struct LinearRelax;

    impl MemristiveSystem for LinearRelax {
        fn state_dim(&self) -> usize {
            1
        }
        fn initial_state(&self) -> Vec<f64> {
            vec![0.0]
        }
        fn state_derivative(&self, state: &[f64], input: f64, _t: f64, out: &mut [f64]) {
            out[0] = -state[0] + input;
        }
        fn output(&self, state: &[f64], _input: f64, _t: f64) -> f64 {
            state[0]
        }
        fn direction(&self) -> Direction {
            Direction::ItoV
        }
    }

    /// Static unity gain: f = 0, g = input.
    #[derive(Debug)]
    struct Unity;

    impl MemristiveSystem for Unity {
        fn state_dim(&self) -> usize {
            1
        }
        fn initial_state(&self) -> Vec<f64> {
            vec![0.25]
        }
        fn state_derivative(&self, _state: &[f64], _input: f64, _t: f64, out: &mut [f64]) {
            out[0] = 0.0;
        }
        fn output(&self, _state: &[f64], input: f64, _t: f64) -> f64 {
            input
        }
        fn direction(&self) -> Direction {
            Direction::ItoV
        }
    }

    fn constant(c: f64, tau: usize, period: f64) -> PeriodicSignal {
        sample_waveform(&WaveformSpec::Constant(c), tau, period).unwrap()
    }

    #[test]
    fn static_system_passes_input_through() {
        let u = constant(3.5, 16, 1.0);
        let (y, x_end) = integrate_period(&Unity, &u, &[0.25]).unwrap();
        assert_eq!(y.values().as_slice(), u.values().as_slice());
        assert_eq!(x_end, vec![0.25]);

        let ss = periodic_steady_state(&Unity, &u, 1e-12, 3).unwrap();
        assert_eq!(ss, u);
    }

    #[test]
    fn linear_relaxation_matches_closed_form() {
        // x' = -x + 1, x(0) = 0 over one period T: xT = 1 - e^{-T}.
        let period = 1.0;
        let tau = 128;
        let u = constant(1.0, tau, period);
        let (_, x_end) = integrate_period(&LinearRelax, &u, &[0.0]).unwrap();
        let h: f64 = period / tau as f64;
        let rk4_err = h.powi(4);
        assert_relative_eq!(x_end[0], 1.0 - (-period).exp(), epsilon = 10.0 * rk4_err);
    }

    #[test]
    fn linear_relaxation_periodic_orbit() {
        // x' = -x + sin(w t): periodic solution (sin(wt) - w cos(wt))/(1+w^2).
        let tau = 512;
        let u = sample_waveform(
            &WaveformSpec::Sine {
                amplitude: 1.0,
                cycles: 1.0,
                phase: 0.0,
                offset: 0.0,
            },
            tau,
            1.0,
        )
        .unwrap();
        let y = periodic_steady_state(&LinearRelax, &u, 1e-12, 200).unwrap();
        let w = 2.0 * std::f64::consts::PI;
        let mut max_err: f64 = 0.0;
        for k in 0..tau {
            let t = k as f64 / tau as f64;
            let exact = ((w * t).sin() - w * (w * t).cos()) / (1.0 + w * w);
            max_err = max_err.max((y.values()[k] - exact).abs());
        }
        // dominated by the linear input interpolation, O(h^2)
        assert!(max_err < 1e-4, "{max_err}");
    }

    #[test]
    fn alpha_n_removable_singularity() {
        assert_relative_eq!(alpha_n(-10.0), 0.1, epsilon = 1e-12);
        assert!((alpha_n(-10.0 + 1e-8) - 0.1).abs() < 1e-6);
        assert!((alpha_n(-10.0 - 1e-8) - 0.1).abs() < 1e-6);
    }

    #[test]
    fn potassium_gate_reaches_equilibrium_for_constant_drive() {
        let v = 3.0;
        let u = constant(v, 64, 1.0);
        let sys = PotassiumConductance::default();
        let mut x = vec![0.9];
        for _ in 0..400 {
            let (_, xe) = integrate_period(&sys, &u, &x).unwrap();
            x = xe;
        }
        let n_star = alpha_n(v) / (alpha_n(v) + beta_n(v));
        assert_relative_eq!(x[0], n_star, epsilon = 1e-9);
    }

    #[test]
    fn potassium_forward_equilibrium_current() {
        let u = constant(0.0, 64, 1.0);
        let i = potassium_forward(&u).unwrap();
        let a = alpha_n(0.0);
        let n_star = a / (a + 0.125);
        assert_relative_eq!(n_star, 0.3177, max_relative = 1e-3);
        let expected = 19.0 * n_star.powi(4) * (0.0 - 12.0);
        for v in i.values().iter() {
            assert_relative_eq!(*v, expected, max_relative = 1e-6);
        }
    }

    #[test]
    fn potassium_current_vanishes_at_reversal() {
        let u = constant(12.0, 32, 1.0);
        let i = potassium_forward(&u).unwrap();
        assert!(i.norm_inf() < 1e-12);
    }

    #[test]
    fn gate_stays_in_unit_interval() {
        let u = sample_waveform(
            &WaveformSpec::Sine {
                amplitude: 80.0,
                cycles: 1.0,
                phase: 0.0,
                offset: 0.0,
            },
            256,
            10.0,
        )
        .unwrap();
        let sys = PotassiumConductance::default();
        let mut x = vec![0.5];
        for _ in 0..20 {
            let (_, xe) = integrate_period(&sys, &u, &x).unwrap();
            assert!(xe[0] >= 0.0 && xe[0] <= 1.0);
            x = xe;
        }
    }

    #[test]
    fn period_map_gaps_shrink_monotonically() {
        let u = sample_waveform(
            &WaveformSpec::Sine {
                amplitude: 10.0,
                cycles: 1.0,
                phase: 0.0,
                offset: -2.0,
            },
            128,
            10.0,
        )
        .unwrap();
        let sys = PotassiumConductance::default();
        let mut x = vec![0.01];
        let mut gaps = Vec::new();
        for _ in 0..12 {
            let (_, xe) = integrate_period(&sys, &u, &x).unwrap();
            gaps.push((xe[0] - x[0]).abs());
            x = xe;
        }
        for w in gaps.windows(2) {
            if w[0] > 1e-13 {
                assert!(w[1] <= w[0], "gaps not contracting: {gaps:?}");
            }
        }
    }

    #[test]
    fn steady_state_output_wraps_consistently() {
        let u = sample_waveform(
            &WaveformSpec::Sine {
                amplitude: 15.0,
                cycles: 1.0,
                phase: 0.0,
                offset: 0.0,
            },
            256,
            10.0,
        )
        .unwrap();
        let y = potassium_forward(&u).unwrap();
        // first/last sample wraparound consistent with the grid spacing
        let jump = (y.values()[0] - y.values()[255]).abs();
        let typical: f64 = (0..255)
            .map(|k| (y.values()[k + 1] - y.values()[k]).abs())
            .fold(0.0, f64::max);
        assert!(jump <= 3.0 * typical + 1e-9, "jump {jump}, typical {typical}");
    }
}
