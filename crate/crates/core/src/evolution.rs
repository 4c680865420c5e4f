//! Deterministic dynamics: the XY Hamiltonian with a depressing coupling,
//! integrated jointly with the mean-field resource variable by classical RK4.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::smallmat::ComplexMat4;
use crate::state::{population_raw, BasisLabel, DensityMatrix, Qubit};
use crate::synapse::{r_rhs_binary, r_rhs_meanfield, SynapseParams};

/// Trace drift beyond which an integration is aborted.
pub const TRACE_DRIFT_LIMIT: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    pub eps1: f64,
    pub eps2: f64,
    /// Interaction strength `Ω ≥ 0`.
    pub omega: f64,
    pub synapse: SynapseParams,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps1.is_finite() && self.eps2.is_finite()) {
            return Err(Error::InvalidParameter("on-site energies must be finite".into()));
        }
        if !(self.omega >= 0.0 && self.omega.is_finite()) {
            return Err(Error::InvalidParameter(format!("omega = {} must be >= 0", self.omega)));
        }
        self.synapse.validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Integrator steps between stored records.
    pub sample_every: u64,
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt = {} must be > 0", self.dt)));
        }
        if !(self.t_end >= self.dt) {
            return Err(Error::InvalidParameter(format!("t_end = {} must be >= dt", self.t_end)));
        }
        if self.sample_every == 0 {
            return Err(Error::InvalidParameter("sample_every must be >= 1".into()));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> u64 {
        (self.t_end / self.dt).round() as u64
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoupledState {
    pub rho: DensityMatrix,
    pub r: f64,
    pub t: f64,
}

impl CoupledState {
    pub fn new(rho: DensityMatrix, r: f64) -> Self {
        Self { rho, r, t: 0.0 }
    }

    pub fn basis(label: BasisLabel, r: f64) -> Self {
        Self::new(DensityMatrix::basis_state(label), r)
    }

    pub fn validate(&self) -> Result<()> {
        self.rho.check()?;
        if !(self.r > 0.0 && self.r <= 1.0) {
            return Err(Error::InvalidParameter(format!("r = {} not in (0, 1]", self.r)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeSeriesRecord {
    pub t: f64,
    pub p1: f64,
    pub p2: f64,
    pub r: f64,
    pub negativity: f64,
}

impl TimeSeriesRecord {
    pub fn of(state: &CoupledState) -> Self {
        Self {
            t: state.t,
            p1: state.rho.population(Qubit::One),
            p2: state.rho.population(Qubit::Two),
            r: state.r,
            negativity: state.rho.negativity(),
        }
    }
}

/// `ε₁σ₁ᶻ + ε₂σ₂ᶻ + (Ω/2)·r·(σ₁⁺σ₂⁻ + σ₁⁻σ₂⁺)`, stored as its diagonal and
/// the single hopping amplitude between `|01⟩` and `|10⟩`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hamiltonian {
    pub diag: [f64; 4],
    pub hopping: f64,
}

impl Hamiltonian {
    pub fn new(p: &ModelParams, r: f64) -> Self {
        let (e1, e2) = (p.eps1, p.eps2);
        Self { diag: [-e1 - e2, -e1 + e2, e1 - e2, e1 + e2], hopping: 0.5 * p.omega * r }
    }

    pub fn to_matrix(&self) -> ComplexMat4 {
        let mut h = ComplexMat4::from_diag_real(self.diag);
        h[(1, 2)] = C64::new(self.hopping, 0.0);
        h[(2, 1)] = C64::new(self.hopping, 0.0);
        h
    }

    /// `-i[H, ρ]` using the sparsity of `H`.
    #[inline]
    pub fn von_neumann(&self, rho: &ComplexMat4) -> ComplexMat4 {
        let (d, g) = (&self.diag, self.hopping);
        let m = &rho.0;
        let mut out = ComplexMat4::zeros();
        for i in 0..4 {
            for j in 0..4 {
                let mut c = m[i][j] * (d[i] - d[j]);
                match i {
                    1 => c += m[2][j] * g,
                    2 => c += m[1][j] * g,
                    _ => {}
                }
                match j {
                    1 => c -= m[i][2] * g,
                    2 => c -= m[i][1] * g,
                    _ => {}
                }
                // -i·c
                out.0[i][j] = C64::new(c.im, -c.re);
            }
        }
        out
    }
}

pub fn build_hamiltonian(p: &ModelParams, r: f64) -> ComplexMat4 {
    Hamiltonian::new(p, r).to_matrix()
}

/// What drives the resource variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Drive {
    /// Population of qubit 1 read from the current stage state.
    MeanField,
    /// Last measurement outcome of qubit 1.
    Binary(u8),
}

#[inline]
fn joint_rhs(m: &ComplexMat4, r: f64, p: &ModelParams, drive: Drive) -> (ComplexMat4, f64) {
    let drho = Hamiltonian::new(p, r).von_neumann(m);
    let dr = match drive {
        Drive::MeanField => r_rhs_meanfield(r, population_raw(m, Qubit::One), &p.synapse),
        Drive::Binary(s_c) => r_rhs_binary(r, s_c, &p.synapse),
    };
    (drho, dr)
}

/// Time derivative of the coupled system under the mean-field drive.
pub fn rhs_coupled(s: &CoupledState, p: &ModelParams) -> (ComplexMat4, f64) {
    joint_rhs(s.rho.matrix(), s.r, p, Drive::MeanField)
}

/// One classical RK4 step on the joint vector `(ρ, r)`, followed by
/// re-Hermitization. The trace is monitored, never renormalized.
pub fn rk4_step(s: &CoupledState, p: &ModelParams, dt: f64) -> Result<CoupledState> {
    rk4_step_with(s, p, dt, Drive::MeanField)
}

pub fn rk4_step_with(s: &CoupledState, p: &ModelParams, dt: f64, drive: Drive) -> Result<CoupledState> {
    let (m, r) = rk4_raw(s.rho.matrix(), s.r, p, dt, drive);
    let t = s.t + dt;
    check_step(&m, r, t)?;
    Ok(CoupledState { rho: DensityMatrix::new_unchecked(m), r, t })
}

#[inline]
pub(crate) fn rk4_raw(m0: &ComplexMat4, r0: f64, p: &ModelParams, dt: f64, drive: Drive) -> (ComplexMat4, f64) {
    let h = 0.5 * dt;
    let (k1, l1) = joint_rhs(m0, r0, p, drive);
    let (k2, l2) = joint_rhs(&axpy(m0, h, &k1), r0 + h * l1, p, drive);
    let (k3, l3) = joint_rhs(&axpy(m0, h, &k2), r0 + h * l2, p, drive);
    let (k4, l4) = joint_rhs(&axpy(m0, dt, &k3), r0 + dt * l3, p, drive);

    let w = dt / 6.0;
    let mut m = *m0;
    for i in 0..4 {
        for j in 0..4 {
            m.0[i][j] += (k1.0[i][j] + (k2.0[i][j] + k3.0[i][j]) * 2.0 + k4.0[i][j]) * w;
        }
    }
    let r = r0 + w * (l1 + 2.0 * (l2 + l3) + l4);
    (m.hermitian_part(), r)
}

#[inline]
fn axpy(y: &ComplexMat4, a: f64, x: &ComplexMat4) -> ComplexMat4 {
    let mut out = *y;
    for (o, xv) in out.0.iter_mut().flatten().zip(x.0.iter().flatten()) {
        *o += xv * a;
    }
    out
}

#[inline]
pub(crate) fn check_step(m: &ComplexMat4, r: f64, t: f64) -> Result<()> {
    let tr = m.trace().re;
    if !((tr - 1.0).abs() <= TRACE_DRIFT_LIMIT) {
        return Err(Error::InvariantViolation { t, what: format!("trace drifted to {tr}") });
    }
    if !r.is_finite() {
        return Err(Error::InvariantViolation { t, what: format!("r = {r}") });
    }
    Ok(())
}

/// Runs `n_steps` RK4 steps from `initial`, calling `visit(step, state)` for
/// the initial state (step 0) and after every step. Time is `t₀ + k·dt`.
pub fn integrate<F>(
    initial: &CoupledState,
    p: &ModelParams,
    dt: f64,
    n_steps: u64,
    drive: Drive,
    mut visit: F,
) -> Result<CoupledState>
where
    F: FnMut(u64, &CoupledState),
{
    let t0 = initial.t;
    let mut m = *initial.rho.matrix();
    let mut r = initial.r;
    visit(0, initial);
    let mut state = *initial;
    for k in 1..=n_steps {
        (m, r) = rk4_raw(&m, r, p, dt, drive);
        let t = t0 + k as f64 * dt;
        check_step(&m, r, t)?;
        state = CoupledState { rho: DensityMatrix::new_unchecked(m), r, t };
        visit(k, &state);
    }
    Ok(state)
}

/// Deterministic run, sampled every `cfg.sample_every` steps plus the final
/// step.
pub fn evolve(initial: &CoupledState, p: &ModelParams, cfg: &IntegratorConfig) -> Result<Vec<TimeSeriesRecord>> {
    p.validate()?;
    cfg.validate()?;
    initial.validate()?;
    let n = cfg.n_steps();
    let mut records = Vec::with_capacity((n / cfg.sample_every) as usize + 2);
    integrate(initial, p, cfg.dt, n, Drive::MeanField, |k, s| {
        if k % cfg.sample_every == 0 || k == n {
            records.push(TimeSeriesRecord::of(s));
        }
    })?;
    Ok(records)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub tau: f64,
    pub omega: f64,
    pub r_min: f64,
    /// `r_min / r_min(Ω = 0)` at the same τ.
    pub ratio: f64,
}

/// Default transient discarded before taking `r_min`: `5τ` plus one Rabi
/// period `2π/Ω` when `Ω > 0`.
pub fn default_transient(tau: f64, omega: f64) -> f64 {
    if omega > 0.0 {
        5.0 * tau + 2.0 * PI / omega
    } else {
        5.0 * tau
    }
}

/// Minimum of `r(t)` after a transient, from `|10⟩` with `r(0) = 1`,
/// normalized per τ by the `Ω = 0` value.
///
/// Each cell integrates over `transient + cfg.t_end`, where `transient` is
/// the override if given and [`default_transient`] otherwise. Cells run in
/// parallel; rows come back sorted by `(τ, Ω)`.
pub fn r_min_sweep(
    omegas: &[f64],
    taus: &[f64],
    base: &ModelParams,
    cfg: &IntegratorConfig,
    transient: Option<f64>,
) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    if !omegas.contains(&0.0) {
        return Err(Error::InvalidParameter("omega values must include 0 for the normalization".into()));
    }
    let cells: Vec<(f64, f64)> = taus.iter().flat_map(|&tau| omegas.iter().map(move |&om| (tau, om))).collect();

    let mins: Vec<Result<(f64, f64, f64)>> = cells
        .par_iter()
        .map(|&(tau, omega)| {
            let p = ModelParams { omega, synapse: SynapseParams { tau, ..base.synapse }, ..*base };
            p.validate()?;
            let skip = transient.unwrap_or_else(|| default_transient(tau, omega));
            let n = ((skip + cfg.t_end) / cfg.dt).round() as u64;
            let first_kept = (skip / cfg.dt).round() as u64;
            let mut r_min = f64::INFINITY;
            integrate(&CoupledState::basis(BasisLabel::EG, 1.0), &p, cfg.dt, n, Drive::MeanField, |k, s| {
                if k >= first_kept {
                    r_min = r_min.min(s.r);
                }
            })?;
            Ok((tau, omega, r_min))
        })
        .collect();

    let mut rows = Vec::with_capacity(cells.len());
    for m in mins {
        let (tau, omega, r_min) = m?;
        rows.push(SweepRow { tau, omega, r_min, ratio: f64::NAN });
    }
    rows.sort_by(|a, b| a.tau.total_cmp(&b.tau).then(a.omega.total_cmp(&b.omega)));
    let reference: Vec<(f64, f64)> = rows.iter().filter(|r| r.omega == 0.0).map(|r| (r.tau, r.r_min)).collect();
    for row in &mut rows {
        let r0 = reference.iter().find(|(t, _)| *t == row.tau).map(|x| x.1).expect("Ω = 0 cell present");
        row.ratio = row.r_min / r0;
    }
    Ok(rows)
}
