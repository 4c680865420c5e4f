//! Short-term depression of the coupling.
//!
//! Three flavours of the same resource equation share [`SynapseParams`]:
//! the classical spike-driven map (kept as a validation oracle), the
//! mean-field drive by a qubit population, and the binary drive by the last
//! measurement outcome.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SynapseParams {
    /// Release probability `U ∈ (0, 1]`.
    pub release: f64,
    /// Recovery time `τ > 0`.
    pub tau: f64,
}

impl SynapseParams {
    pub fn new(release: f64, tau: f64) -> Result<Self> {
        let p = Self { release, tau };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.release > 0.0 && self.release <= 1.0) {
            return Err(Error::InvalidParameter(format!("release probability U = {} not in (0, 1]", self.release)));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidParameter(format!("recovery time tau = {} must be > 0", self.tau)));
        }
        Ok(())
    }
}

/// `dr/dt = (1 - r)/τ - U·r·pop`.
#[inline]
pub fn r_rhs_meanfield(r: f64, pop: f64, p: &SynapseParams) -> f64 {
    (1.0 - r) / p.tau - p.release * r * pop
}

/// Same law with the population replaced by the binary outcome `s_c`.
#[inline]
pub fn r_rhs_binary(r: f64, s_c: u8, p: &SynapseParams) -> f64 {
    r_rhs_meanfield(r, f64::from(s_c), p)
}

/// Fixed point `1 / (1 + τ·U·f)` of the drive at constant rate `f`.
pub fn r_stationary(p: &SynapseParams, f: f64) -> f64 {
    1.0 / (1.0 + p.tau * p.release * f)
}

/// Value of a freely recovering synapse after `dt`.
#[inline]
fn recover(r: f64, dt: f64, tau: f64) -> f64 {
    1.0 - (1.0 - r) * (-dt / tau).exp()
}

/// Spike-driven synapse sampled at `t = k·dt`, `k = 0..=round(t_end/dt)`.
///
/// Recovery between spikes is integrated in closed form and each spike
/// multiplies the left limit by `1 - U`. Samples are right-continuous: a
/// spike landing exactly on a grid time is already applied in that sample.
pub fn simulate_classical_spikes(
    p: &SynapseParams,
    spike_times: &[f64],
    r0: f64,
    t_end: f64,
    dt: f64,
) -> Result<Vec<(f64, f64)>> {
    p.validate()?;
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt = {dt} must be > 0")));
    }
    if !(r0 > 0.0 && r0 <= 1.0) {
        return Err(Error::InvalidParameter(format!("r0 = {r0} not in (0, 1]")));
    }
    if spike_times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("spike times must be ascending".into()));
    }

    let n = (t_end / dt).round() as u64;
    let mut out = Vec::with_capacity(n as usize + 1);
    let mut spikes = spike_times.iter().copied().skip_while(|&t| t < 0.0).peekable();
    let (mut t, mut r) = (0.0, r0);
    for k in 0..=n {
        let target = k as f64 * dt;
        while let Some(&ts) = spikes.peek() {
            if ts > target {
                break;
            }
            r = recover(r, ts - t, p.tau) * (1.0 - p.release);
            t = ts;
            spikes.next();
        }
        r = recover(r, target - t, p.tau);
        t = target;
        out.push((t, r));
    }
    Ok(out)
}

/// Exact time average of the spike-driven `r` over `[t0, t1]`, starting from
/// `r0` at `t = 0`.
pub fn classical_time_average(p: &SynapseParams, spike_times: &[f64], r0: f64, t0: f64, t1: f64) -> f64 {
    // ∫ 1 - (1-r)e^{-s/τ} ds over [0, Δ] = Δ - (1-r)·τ·(1 - e^{-Δ/τ})
    let segment = |r: f64, a: f64, b: f64| {
        let d = b - a;
        d - (1.0 - r) * p.tau * (1.0 - (-d / p.tau).exp())
    };
    let (mut t, mut r, mut area) = (0.0, r0, 0.0);
    let advance = |to: f64, t: &mut f64, r: &mut f64, area: &mut f64| {
        if to > *t {
            let lo = t0.max(*t);
            let hi = t1.min(to);
            if hi > lo {
                let r_lo = recover(*r, lo - *t, p.tau);
                *area += segment(r_lo, lo, hi);
            }
            *r = recover(*r, to - *t, p.tau);
            *t = to;
        }
    };
    for &ts in spike_times.iter().filter(|&&ts| ts >= 0.0 && ts <= t1) {
        advance(ts, &mut t, &mut r, &mut area);
        r *= 1.0 - p.release;
    }
    advance(t1, &mut t, &mut r, &mut area);
    area / (t1 - t0)
}

/// Spikes at `1/f, 2/f, …` up to `t_end`.
pub fn periodic_spike_train(f: f64, t_end: f64) -> Vec<f64> {
    if f <= 0.0 {
        return Vec::new();
    }
    let period = f.recip();
    (1..).map(|k| k as f64 * period).take_while(|&t| t <= t_end).collect()
}

/// Homogeneous Poisson spike train of rate `f` on `(0, t_end]`.
pub fn poisson_spike_train(f: f64, t_end: f64, seed: u64) -> Vec<f64> {
    if f <= 0.0 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gap = Exp::new(f).expect("positive rate");
    let mut t = 0.0;
    let mut out = Vec::new();
    loop {
        t += gap.sample(&mut rng);
        if t > t_end {
            return out;
        }
        out.push(t);
    }
}
