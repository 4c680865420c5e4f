//! Measurement-driven protocol: unitary windows of length `t_m` with the
//! binary drive `s_c`, each closed by a projective measurement of qubit 1.
//!
//! A trajectory is a pure function of its inputs and seed. Windows are
//! memoized on the exact bit pattern of their starting point, which makes
//! long ensembles cheap whenever trajectories keep revisiting the same
//! post-measurement states (the usual case once `r` has settled).

use std::sync::{Arc, RwLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::evolution::{check_step, rk4_raw, CoupledState, Drive, ModelParams};
use crate::smallmat::ComplexMat4;
use crate::state::{DensityMatrix, Outcome, Qubit};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryConfig {
    /// Time between measurements.
    pub t_m: f64,
    pub n_traj: usize,
    pub master_seed: u64,
    pub dt: f64,
    pub t_end: f64,
    /// Integrator steps between stored records.
    pub sample_every: u64,
}

impl TrajectoryConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt = {} must be > 0", self.dt)));
        }
        if !(self.t_m >= self.dt) {
            return Err(Error::InvalidParameter(format!("t_m = {} must be >= dt", self.t_m)));
        }
        if !(self.t_end >= self.dt) {
            return Err(Error::InvalidParameter(format!("t_end = {} must be >= dt", self.t_end)));
        }
        if self.n_traj == 0 {
            return Err(Error::InvalidParameter("n_traj must be >= 1".into()));
        }
        if self.sample_every == 0 {
            return Err(Error::InvalidParameter("sample_every must be >= 1".into()));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> u64 {
        (self.t_end / self.dt).round() as u64
    }

    pub fn steps_per_window(&self) -> u64 {
        ((self.t_m / self.dt).round() as u64).max(1)
    }

    /// Step indices shared by every trajectory: multiples of `sample_every`
    /// and the final step.
    pub fn grid_steps(&self) -> Vec<u64> {
        let n = self.n_steps();
        let mut g: Vec<u64> = (0..=n).step_by(self.sample_every as usize).collect();
        if *g.last().expect("step 0") != n {
            g.push(n);
        }
        g
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub t: f64,
    pub p1: f64,
    pub p2: f64,
    pub r: f64,
    pub negativity: f64,
    pub s_c: u8,
    /// A collapse happened at this instant; the record shows the post-state.
    pub measured: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnsemblePoint {
    pub t: f64,
    pub mean_p1: f64,
    pub mean_p2: f64,
    pub mean_r: f64,
    pub stderr_p1: f64,
}

/// Outcome 1 iff `u < p₁`; the tie `u == p₁` goes to 0.
pub fn sample_outcome(p1: f64, u: f64) -> Outcome {
    if u < p1 {
        Outcome::Excited
    } else {
        Outcome::Ground
    }
}

/// Per-trajectory seed derived from the master seed and trajectory index.
pub fn trajectory_seed(master_seed: u64, index: u64) -> u64 {
    splitmix64(master_seed ^ splitmix64(index.wrapping_add(0x9E37_79B9_7F4A_7C15)))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct WindowKey {
    rho: [u64; 32],
    r: u64,
    s_c: u8,
    len: u64,
    phase: u64,
}

impl WindowKey {
    fn new(m: &ComplexMat4, r: f64, s_c: u8, len: u64, phase: u64) -> Self {
        let mut rho = [0u64; 32];
        for (k, z) in m.0.iter().flatten().enumerate() {
            rho[2 * k] = z.re.to_bits();
            rho[2 * k + 1] = z.im.to_bits();
        }
        Self { rho, r: r.to_bits(), s_c, len, phase }
    }
}

#[derive(Clone, Copy, Debug)]
struct Sample {
    offset: u64,
    p1: f64,
    p2: f64,
    r: f64,
    negativity: f64,
}

struct WindowResult {
    /// Interior grid samples (the closing step is reported by the caller).
    samples: Vec<Sample>,
    end: ComplexMat4,
    end_r: f64,
}

/// Memo of integrated windows keyed on their exact starting point.
pub struct WindowCache {
    map: RwLock<FxHashMap<WindowKey, Arc<WindowResult>>>,
    capacity: usize,
}

impl Default for WindowCache {
    fn default() -> Self {
        Self::with_capacity(1 << 16)
    }
}

impl WindowCache {
    /// `capacity` bounds the number of stored windows; 0 disables caching.
    pub fn with_capacity(capacity: usize) -> Self {
        Self { map: RwLock::new(FxHashMap::default()), capacity }
    }

    pub fn len(&self) -> usize {
        self.map.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn get(&self, key: &WindowKey) -> Option<Arc<WindowResult>> {
        if self.capacity == 0 {
            return None;
        }
        self.map.read().expect("cache lock").get(key).cloned()
    }

    fn insert(&self, key: WindowKey, value: Arc<WindowResult>) {
        let mut map = self.map.write().expect("cache lock");
        if map.len() < self.capacity {
            map.entry(key).or_insert(value);
        }
    }
}

struct Window<'a> {
    p: &'a ModelParams,
    dt: f64,
    sample_every: u64,
}

impl Window<'_> {
    fn integrate(&self, start_step: u64, m0: &ComplexMat4, r0: f64, s_c: u8, len: u64) -> Result<WindowResult> {
        let mut m = *m0;
        let mut r = r0;
        let mut samples = Vec::new();
        for k in 1..=len {
            (m, r) = rk4_raw(&m, r, self.p, self.dt, Drive::Binary(s_c));
            check_step(&m, r, (start_step + k) as f64 * self.dt)?;
            if k < len && (start_step + k).is_multiple_of(self.sample_every) {
                let rho = DensityMatrix::new_unchecked(m);
                samples.push(Sample {
                    offset: k,
                    p1: rho.population(Qubit::One),
                    p2: rho.population(Qubit::Two),
                    r,
                    negativity: rho.negativity(),
                });
            }
        }
        Ok(WindowResult { samples, end: m, end_r: r })
    }
}

/// Small per-trajectory front for the shared cache.
struct LocalMemo {
    slots: Vec<(WindowKey, Arc<WindowResult>)>,
    next: usize,
}

impl LocalMemo {
    const SLOTS: usize = 4;

    fn new() -> Self {
        Self { slots: Vec::with_capacity(Self::SLOTS), next: 0 }
    }

    fn get(&self, key: &WindowKey) -> Option<Arc<WindowResult>> {
        self.slots.iter().find(|(k, _)| k == key).map(|(_, v)| v.clone())
    }

    fn put(&mut self, key: WindowKey, value: Arc<WindowResult>) {
        if self.slots.len() < Self::SLOTS {
            self.slots.push((key, value));
        } else {
            self.slots[self.next] = (key, value);
            self.next = (self.next + 1) % Self::SLOTS;
        }
    }
}

/// Drives one trajectory, reporting every record together with its step
/// index. Exactly one record is produced per visited step.
fn simulate<F>(
    initial: &CoupledState,
    p: &ModelParams,
    cfg: &TrajectoryConfig,
    seed: u64,
    cache: &WindowCache,
    mut visit: F,
) -> Result<()>
where
    F: FnMut(u64, &TrajectoryRecord),
{
    let dt = cfg.dt;
    let n_total = cfg.n_steps();
    let window_steps = cfg.steps_per_window();
    let runner = Window { p, dt, sample_every: cfg.sample_every };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut memo = LocalMemo::new();

    let record = |t: f64, rho: &DensityMatrix, r: f64, s_c: u8, measured: bool| TrajectoryRecord {
        t,
        p1: rho.population(Qubit::One),
        p2: rho.population(Qubit::Two),
        r,
        negativity: rho.negativity(),
        s_c,
        measured,
    };

    let mut s_c = 1u8;
    let mut m = *initial.rho.matrix();
    let mut r = initial.r;
    let mut step = 0u64;
    visit(0, &record(0.0, &initial.rho, r, s_c, false));

    while step < n_total {
        let len = window_steps.min(n_total - step);
        let key = WindowKey::new(&m, r, s_c, len, step % cfg.sample_every);
        let result = match memo.get(&key) {
            Some(hit) => hit,
            None => {
                let shared = match cache.get(&key) {
                    Some(hit) => hit,
                    None => {
                        let fresh = Arc::new(runner.integrate(step, &m, r, s_c, len)?);
                        cache.insert(key.clone(), fresh.clone());
                        fresh
                    }
                };
                memo.put(key, shared.clone());
                shared
            }
        };

        for smp in &result.samples {
            let k = step + smp.offset;
            visit(
                k,
                &TrajectoryRecord {
                    t: k as f64 * dt,
                    p1: smp.p1,
                    p2: smp.p2,
                    r: smp.r,
                    negativity: smp.negativity,
                    s_c,
                    measured: false,
                },
            );
        }

        step += len;
        m = result.end;
        r = result.end_r;
        let t = step as f64 * dt;
        let rho = DensityMatrix::new_unchecked(m);
        if len == window_steps {
            let p1 = rho.population(Qubit::One);
            let outcome = sample_outcome(p1, rng.random::<f64>());
            let (post, _) = rho.collapse_q1(outcome)?;
            m = *post.matrix();
            s_c = outcome.as_u8();
            visit(step, &record(t, &post, r, s_c, true));
        } else {
            visit(step, &record(t, &rho, r, s_c, false));
        }
    }
    Ok(())
}

fn validate_inputs(initial: &CoupledState, p: &ModelParams, cfg: &TrajectoryConfig) -> Result<()> {
    p.validate()?;
    cfg.validate()?;
    initial.validate()
}

/// One measurement trajectory: the decimated grid plus a flagged record at
/// every measurement instant. Bit-for-bit reproducible from `seed`.
pub fn run_trajectory(
    initial: &CoupledState,
    p: &ModelParams,
    cfg: &TrajectoryConfig,
    seed: u64,
) -> Result<Vec<TrajectoryRecord>> {
    validate_inputs(initial, p, cfg)?;
    let mut out = Vec::new();
    simulate(initial, p, cfg, seed, &WindowCache::default(), |_, rec| out.push(*rec))?;
    Ok(out)
}

/// Trajectories processed per parallel batch before their grid values are
/// folded, in index order, into the running moments.
const BATCH: usize = 64;

/// Pointwise ensemble mean over `cfg.n_traj` trajectories with seeds
/// [`trajectory_seed`]`(master_seed, i)`.
///
/// Trajectories run in parallel in fixed-size batches; the reduction is a
/// sequential Welford update in trajectory-index order, so the output does
/// not depend on the number of threads.
pub fn ensemble_average(initial: &CoupledState, p: &ModelParams, cfg: &TrajectoryConfig) -> Result<Vec<EnsemblePoint>> {
    ensemble_average_with(initial, p, cfg, &WindowCache::default())
}

pub fn ensemble_average_with(
    initial: &CoupledState,
    p: &ModelParams,
    cfg: &TrajectoryConfig,
    cache: &WindowCache,
) -> Result<Vec<EnsemblePoint>> {
    validate_inputs(initial, p, cfg)?;
    let grid = cfg.grid_steps();
    let n_grid = grid.len();

    // Welford moments per grid point: mean p1, M2 p1, mean p2, mean r.
    let mut mean_p1 = vec![0.0; n_grid];
    let mut m2_p1 = vec![0.0; n_grid];
    let mut mean_p2 = vec![0.0; n_grid];
    let mut mean_r = vec![0.0; n_grid];
    let mut count = 0usize;

    let indices: Vec<usize> = (0..cfg.n_traj).collect();
    for batch in indices.chunks(BATCH) {
        let values: Vec<Result<Vec<[f64; 3]>>> = batch
            .par_iter()
            .map(|&i| {
                let mut vals = Vec::with_capacity(n_grid);
                let mut g = 0usize;
                simulate(initial, p, cfg, trajectory_seed(cfg.master_seed, i as u64), cache, |step, rec| {
                    if g < n_grid && grid[g] == step {
                        vals.push([rec.p1, rec.p2, rec.r]);
                        g += 1;
                    }
                })?;
                debug_assert_eq!(vals.len(), n_grid);
                Ok(vals)
            })
            .collect();
        for vals in values {
            let vals = vals?;
            count += 1;
            let n = count as f64;
            for (k, v) in vals.iter().enumerate() {
                let d = v[0] - mean_p1[k];
                mean_p1[k] += d / n;
                m2_p1[k] += d * (v[0] - mean_p1[k]);
                mean_p2[k] += (v[1] - mean_p2[k]) / n;
                mean_r[k] += (v[2] - mean_r[k]) / n;
            }
        }
    }

    let n = count as f64;
    Ok(grid
        .iter()
        .enumerate()
        .map(|(k, &step)| EnsemblePoint {
            t: step as f64 * cfg.dt,
            mean_p1: mean_p1[k],
            mean_p2: mean_p2[k],
            mean_r: mean_r[k],
            stderr_p1: if count > 1 { (m2_p1[k] / (n - 1.0)).sqrt() / n.sqrt() } else { 0.0 },
        })
        .collect())
}

/// Fraction of trajectories whose first measurement gives 1, paired with the
/// Born probability `p₁(t_m⁻)` it should approach.
pub fn first_outcome_frequency(initial: &CoupledState, p: &ModelParams, cfg: &TrajectoryConfig) -> Result<(f64, f64)> {
    validate_inputs(initial, p, cfg)?;
    let one_window = TrajectoryConfig { t_end: cfg.steps_per_window() as f64 * cfg.dt, ..*cfg };
    let cache = WindowCache::default();
    let runner = Window { p, dt: cfg.dt, sample_every: u64::MAX };
    let end = runner.integrate(0, initial.rho.matrix(), initial.r, 1, one_window.steps_per_window())?;
    let born = DensityMatrix::new_unchecked(end.end).population(Qubit::One);

    let ones: usize = (0..cfg.n_traj)
        .into_par_iter()
        .map(|i| -> Result<usize> {
            let mut hit = 0;
            simulate(initial, p, &one_window, trajectory_seed(cfg.master_seed, i as u64), &cache, |_, rec| {
                if rec.measured && rec.s_c == 1 {
                    hit = 1;
                }
            })?;
            Ok(hit)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum();
    Ok((ones as f64 / cfg.n_traj as f64, born))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::BasisLabel;
    use crate::synapse::SynapseParams;

    fn params(eps2: f64, omega: f64, tau: f64) -> ModelParams {
        ModelParams { eps1: 0.0, eps2, omega, synapse: SynapseParams::new(0.5, tau).unwrap() }
    }

    fn cfg(t_m: f64, t_end: f64, dt: f64, sample_every: u64) -> TrajectoryConfig {
        TrajectoryConfig { t_m, n_traj: 1, master_seed: 7, dt, t_end, sample_every }
    }

    #[test]
    fn sampler_examples() {
        assert_eq!(sample_outcome(1.0, 0.999), Outcome::Excited);
        assert_eq!(sample_outcome(0.0, 0.001), Outcome::Ground);
        assert_eq!(sample_outcome(0.7, 0.3), Outcome::Excited);
        assert_eq!(sample_outcome(0.7, 0.9), Outcome::Ground);
        assert_eq!(sample_outcome(0.7, 0.7), Outcome::Ground);
    }

    #[test]
    fn decoupled_excited_qubit_keeps_depressing() {
        let p = params(0.0, 0.0, 10.0);
        let c = cfg(30.0, 300.0, 0.01, 100);
        let recs = run_trajectory(&CoupledState::basis(BasisLabel::EG, 1.0), &p, &c, 1).unwrap();
        assert!(recs.iter().all(|r| r.s_c == 1 && r.p1 == 1.0));
        assert_eq!(recs.iter().filter(|r| r.measured).count(), 10);
        assert!((recs.last().unwrap().r - 1.0 / 6.0).abs() < 1e-6);
    }

    #[test]
    fn decoupled_ground_qubit_recovers() {
        let p = params(0.0, 0.0, 10.0);
        let c = cfg(30.0, 600.0, 0.01, 100);
        let recs = run_trajectory(&CoupledState::basis(BasisLabel::GE, 1.0), &p, &c, 1).unwrap();
        let first_meas = recs.iter().position(|r| r.measured).unwrap();
        assert!(recs[..first_meas].iter().all(|r| r.s_c == 1));
        assert!(recs[first_meas..].iter().all(|r| r.s_c == 0 && r.p1 == 0.0));
        assert!((recs.last().unwrap().r - 1.0).abs() < 1e-9);
    }

    #[test]
    fn records_cover_grid_and_measurements() {
        let p = params(0.1, 0.05, 1.0);
        // t_m = 0.25 is off the 0.1 grid; t_end is not a multiple of t_m.
        let c = cfg(0.25, 1.05, 0.01, 10);
        let recs = run_trajectory(&CoupledState::basis(BasisLabel::GE, 1.0), &p, &c, 3).unwrap();
        let times: Vec<f64> = recs.iter().map(|r| (r.t * 100.0).round() / 100.0).collect();
        assert_eq!(times, vec![0.0, 0.1, 0.2, 0.25, 0.3, 0.4, 0.5, 0.6, 0.7, 0.75, 0.8, 0.9, 1.0, 1.05]);
        let flagged: Vec<f64> = recs.iter().filter(|r| r.measured).map(|r| (r.t * 100.0).round() / 100.0).collect();
        assert_eq!(flagged, vec![0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn same_seed_same_trajectory_and_cache_is_transparent() {
        let p = params(0.1, 0.05, 10.0);
        let c = cfg(3.0, 60.0, 0.01, 50);
        let init = CoupledState::basis(BasisLabel::GE, 1.0);
        let a = run_trajectory(&init, &p, &c, 99).unwrap();
        let b = run_trajectory(&init, &p, &c, 99).unwrap();
        assert_eq!(a, b);

        let mut uncached = Vec::new();
        simulate(&init, &p, &c, 99, &WindowCache::with_capacity(0), |_, r| uncached.push(*r)).unwrap();
        assert_eq!(a, uncached);
    }

    #[test]
    fn single_member_ensemble_equals_trajectory() {
        let p = params(0.1, 0.05, 10.0);
        let c = cfg(3.0, 60.0, 0.01, 100);
        let init = CoupledState::basis(BasisLabel::GE, 1.0);
        let ens = ensemble_average(&init, &p, &c).unwrap();
        let traj = run_trajectory(&init, &p, &c, trajectory_seed(c.master_seed, 0)).unwrap();
        assert_eq!(ens.len(), traj.len());
        for (e, t) in ens.iter().zip(&traj) {
            assert_eq!((e.t, e.mean_p1, e.mean_p2, e.mean_r, e.stderr_p1), (t.t, t.p1, t.p2, t.r, 0.0));
        }
    }

    #[test]
    fn rejects_bad_config() {
        let p = params(0.1, 0.05, 10.0);
        let init = CoupledState::basis(BasisLabel::GE, 1.0);
        assert!(run_trajectory(&init, &p, &cfg(0.001, 1.0, 0.01, 1), 0).is_err());
        let mut c = cfg(1.0, 2.0, 0.01, 1);
        c.n_traj = 0;
        assert!(ensemble_average(&init, &p, &c).is_err());
    }

    #[test]
    fn seeds_differ_per_index() {
        let s: Vec<u64> = (0..1000).map(|i| trajectory_seed(42, i)).collect();
        let mut d = s.clone();
        d.sort_unstable();
        d.dedup();
        assert_eq!(d.len(), s.len());
        assert_ne!(trajectory_seed(1, 0), trajectory_seed(2, 0));
    }
}
