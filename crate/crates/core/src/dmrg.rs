//! Two-site variational ground-state search on the Hermitian target.
//!
//! The solver starts from the maximally mixed vector, runs a warm-up phase
//! of cheap sweeps at the smallest bond dimension, then keeps sweeping while
//! slowly raising the bond-dimension cap: whenever the energy change over
//! one sweep falls within the ramp threshold, the cap grows by a small fixed
//! increment. Since the target is positive semidefinite with ground energy
//! exactly zero, the energy itself doubles as the convergence meter.

use std::time::Instant;

use ndarray::Array2;
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::labels;
use crate::liouvillian::{ModelError, ModelParams, SuperOperatorSet};
use crate::mpo::{overlap3, MatrixProductOperator, MpoError};
use crate::mps::{inner, MatrixProductState, MpsError};
use crate::superspace::{make_ivec, OrderingScheme, SuperspaceError};
use crate::tensor::{contract, svd_truncate, LabeledTensor, TensorError};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("local eigensolver received a zero guess")]
    ZeroGuess,

    #[error("non-finite value encountered during optimization")]
    NonFinite,

    #[error("state and operator have incompatible shapes ({0})")]
    ShapeMismatch(String),

    #[error("invalid schedule: {0}")]
    BadSchedule(String),

    #[error(transparent)]
    Tensor(#[from] TensorError),

    #[error(transparent)]
    Mps(#[from] MpsError),

    #[error(transparent)]
    Mpo(#[from] MpoError),

    #[error(transparent)]
    Model(#[from] ModelError),

    #[error(transparent)]
    Superspace(#[from] SuperspaceError),

    #[error(transparent)]
    Linalg(#[from] ndarray_linalg::error::LinalgError),
}

/// Knobs of the warm-up phase and the bond-dimension ramp.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSchedule {
    /// Fixed bond dimension during warm-up.
    pub warmup_bond: usize,
    pub warmup_max_sweeps: usize,
    /// Relative energy change below which warm-up stops.
    pub warmup_threshold: f64,
    /// Bond-dimension step of the ramp.
    pub bond_increment: usize,
    /// Relative energy change below which the cap is raised.
    pub ramp_threshold: f64,
    pub max_bond: usize,
    /// Cap on main-phase sweeps.
    pub max_sweeps: usize,
    pub svd_cutoff: f64,
    /// Krylov dimension of each local solve.
    pub local_solver_iters: usize,
    /// Absolute energy at which the run counts as converged.
    pub energy_floor: f64,
    /// Consecutive stable sweeps at the bond cap before giving up.
    pub stall_sweeps: usize,
    /// Relative energy change below which a sweep at the bond cap counts as
    /// stalled. Much tighter than `ramp_threshold`: the ramp reacts to slow
    /// progress, the stall only to no progress.
    pub stall_threshold: f64,
    /// Evaluate observables after every sweep instead of only at the end.
    pub measure_every_sweep: bool,
}

impl Default for SweepSchedule {
    fn default() -> Self {
        Self {
            warmup_bond: 2,
            warmup_max_sweeps: 50,
            warmup_threshold: 1e-3,
            bond_increment: 2,
            ramp_threshold: 0.10,
            max_bond: 40,
            max_sweeps: 500,
            svd_cutoff: 1e-12,
            local_solver_iters: 6,
            energy_floor: 1e-10,
            stall_sweeps: 10,
            stall_threshold: 1e-4,
            measure_every_sweep: true,
        }
    }
}

impl SweepSchedule {
    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |msg: &str| Err(SolverError::BadSchedule(msg.to_owned()));
        if self.warmup_bond == 0 {
            return bad("warmup_bond must be at least 1");
        }
        if self.bond_increment == 0 {
            return bad("bond_increment must be at least 1");
        }
        if !(self.ramp_threshold > 0.0 && self.ramp_threshold < 1.0) {
            return bad("ramp_threshold must lie strictly between 0 and 1");
        }
        if self.max_bond < self.warmup_bond {
            return bad("max_bond must be at least warmup_bond");
        }
        if self.max_sweeps == 0 || self.warmup_max_sweeps == 0 {
            return bad("sweep caps must be positive");
        }
        if !(self.warmup_threshold > 0.0) {
            return bad("warmup_threshold must be positive");
        }
        if !(self.energy_floor > 0.0) {
            return bad("energy_floor must be positive");
        }
        if self.local_solver_iters == 0 {
            return bad("local_solver_iters must be at least 1");
        }
        if self.stall_sweeps == 0 {
            return bad("stall_sweeps must be at least 1");
        }
        if self.svd_cutoff < 0.0 {
            return bad("svd_cutoff must be non-negative");
        }
        if !(self.stall_threshold > 0.0) {
            return bad("stall_threshold must be positive");
        }
        Ok(())
    }
}

/// Why a run stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Energy reached the configured floor.
    EnergyFloor,
    /// The main-phase sweep budget ran out.
    MaxSweeps,
    /// Energy stalled at the bond cap.
    BondCapStable,
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            StopReason::EnergyFloor => "energy_floor",
            StopReason::MaxSweeps => "max_sweeps",
            StopReason::BondCapStable => "bond_cap_stable",
        };
        f.write_str(s)
    }
}

/// Per-sweep history and final steady-state profiles of one run.
#[derive(Clone, Debug)]
pub struct RunResult {
    pub energy_history: Vec<f64>,
    pub bond_history: Vec<usize>,
    pub walltime_history: Vec<f64>,
    /// Per-sweep current profiles, empty unless measured every sweep.
    pub current_history: Vec<Vec<f64>>,
    pub magnetization_history: Vec<Vec<f64>>,
    /// Per-sweep largest imaginary part, empty unless measured every sweep.
    pub imag_history: Vec<f64>,
    pub warmup_sweeps: usize,
    pub final_state: MatrixProductState,
    pub current_profile: Vec<f64>,
    pub magnetization_profile: Vec<f64>,
    /// Largest imaginary part seen across all evaluated observables.
    pub max_imag: f64,
    pub converged: bool,
    pub stop_reason: StopReason,
}

impl RunResult {
    pub fn final_energy(&self) -> f64 {
        self.energy_history.last().copied().unwrap_or(f64::NAN)
    }

    pub fn sweeps(&self) -> usize {
        self.energy_history.len()
    }

    pub fn mean_current(&self) -> f64 {
        if self.current_profile.is_empty() {
            return 0.0;
        }
        self.current_profile.iter().sum::<f64>() / self.current_profile.len() as f64
    }
}

/// Smallest eigenpair of a Hermitian map restricted to the Krylov space of
/// `guess`, built with at most `iters` basis vectors (Lanczos with full
/// reorthogonalization).
///
/// The returned value is the Rayleigh quotient of the returned, normalized
/// vector and never exceeds the quotient of the guess.
pub fn local_eigensolve<F>(
    apply: F,
    guess: &LabeledTensor,
    iters: usize,
) -> Result<(f64, LabeledTensor), SolverError>
where
    F: Fn(&LabeledTensor) -> Result<LabeledTensor, TensorError>,
{
    let scale = guess.norm();
    if !scale.is_finite() {
        return Err(SolverError::NonFinite);
    }
    if scale == 0.0 {
        return Err(SolverError::ZeroGuess);
    }
    let iters = iters.max(1);

    let mut basis: Vec<LabeledTensor> = vec![guess.scaled(C64::new(1.0 / scale, 0.0))];
    let mut alphas: Vec<f64> = Vec::with_capacity(iters);
    let mut betas: Vec<f64> = Vec::with_capacity(iters);

    for k in 0..iters {
        let mut w = apply(&basis[k])?.permuted(basis[0].labels())?;
        let alpha = basis[k].vdot(&w)?.re;
        if !alpha.is_finite() {
            return Err(SolverError::NonFinite);
        }
        alphas.push(alpha);
        if k + 1 == iters {
            break;
        }
        w.axpy(C64::new(-alpha, 0.0), &basis[k]);
        if k > 0 {
            w.axpy(C64::new(-betas[k - 1], 0.0), &basis[k - 1]);
        }
        for v in &basis {
            let overlap = v.vdot(&w)?;
            if overlap.norm() > 0.0 {
                w.axpy(-overlap, v);
            }
        }
        let beta = w.norm();
        if !beta.is_finite() {
            return Err(SolverError::NonFinite);
        }
        let magnitude = alphas.iter().fold(0.0f64, |m, a| m.max(a.abs()))
            + betas.iter().fold(0.0f64, |m, b| m.max(*b));
        if beta <= magnitude * 1e-14 || beta < 1e-300 {
            break;
        }
        w.scale_assign(C64::new(1.0 / beta, 0.0));
        betas.push(beta);
        basis.push(w);
    }

    let k = basis.len();
    let mut tri = Array2::<f64>::zeros((k, k));
    for (i, &a) in alphas.iter().take(k).enumerate() {
        tri[(i, i)] = a;
    }
    for (i, &b) in betas.iter().take(k.saturating_sub(1)).enumerate() {
        tri[(i, i + 1)] = b;
        tri[(i + 1, i)] = b;
    }
    let (values, vectors) = tri.eigh(UPLO::Lower)?;

    let mut out = basis[0].scaled(C64::new(vectors[(0, 0)], 0.0));
    for (i, v) in basis.iter().enumerate().skip(1) {
        out.axpy(C64::new(vectors[(i, 0)], 0.0), v);
    }
    let norm = out.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(SolverError::NonFinite);
    }
    out.scale_assign(C64::new(1.0 / norm, 0.0));
    Ok((values[0], out))
}

/// Persistent sweep state: site tensors in mixed-canonical form plus cached
/// left/right environments of the target.
struct SweepEngine<'a> {
    mpo: &'a MatrixProductOperator,
    sites: Vec<LabeledTensor>,
    left: Vec<Option<LabeledTensor>>,
    right: Vec<Option<LabeledTensor>>,
    iters: usize,
    cutoff: f64,
}

enum Move {
    Right,
    Left,
}

impl<'a> SweepEngine<'a> {
    fn new(
        state: &MatrixProductState,
        mpo: &'a MatrixProductOperator,
        iters: usize,
        cutoff: f64,
    ) -> Result<Self, SolverError> {
        if state.len() != mpo.len() || state.phys_dims() != mpo.phys_dims() {
            return Err(SolverError::ShapeMismatch(format!(
                "state {:?} vs operator {:?}",
                state.phys_dims(),
                mpo.phys_dims()
            )));
        }
        if state.len() < 2 {
            return Err(SolverError::ShapeMismatch(
                "two-site sweeps need at least two sites".into(),
            ));
        }
        let canonical = state.canonicalize(0)?;
        let n = canonical.len();
        let mut engine = Self {
            mpo,
            sites: canonical.tensors().to_vec(),
            left: vec![None; n + 1],
            right: vec![None; n + 1],
            iters,
            cutoff,
        };
        engine.left[0] = Some(boundary_env(0)?);
        engine.right[n] = Some(boundary_env(n)?);
        for i in (1..n).rev() {
            engine.right[i] = Some(engine.retreat(i)?);
        }
        Ok(engine)
    }

    fn len(&self) -> usize {
        self.sites.len()
    }

    /// Left environment across cut `i + 1` from the one across cut `i`.
    fn advance(&self, i: usize) -> Result<LabeledTensor, SolverError> {
        let env = self.left[i].as_ref().expect("left environment present");
        let site = &self.sites[i];
        let bond = labels::bond(i);
        let phys = labels::phys(i);
        let t = contract(env, site, &[(bond.as_str(), bond.as_str())])?;
        let t = contract(
            &t,
            self.mpo.tensor(i),
            &[
                (labels::mpo_bond(i).as_str(), labels::mpo_bond(i).as_str()),
                (phys.as_str(), labels::mpo_in(i).as_str()),
            ],
        )?;
        let bra = bra_site(site, i)?;
        let t = contract(
            &t,
            &bra,
            &[
                (labels::bra_bond(i).as_str(), labels::bra_bond(i).as_str()),
                (labels::mpo_out(i).as_str(), labels::mpo_out(i).as_str()),
            ],
        )?;
        Ok(t.permuted(&[
            labels::bra_bond(i + 1),
            labels::mpo_bond(i + 1),
            labels::bond(i + 1),
        ])?)
    }

    /// Right environment across cut `i` from the one across cut `i + 1`.
    fn retreat(&self, i: usize) -> Result<LabeledTensor, SolverError> {
        let env = self.right[i + 1].as_ref().expect("right environment present");
        let site = &self.sites[i];
        let next_bond = labels::bond(i + 1);
        let t = contract(site, env, &[(next_bond.as_str(), next_bond.as_str())])?;
        let t = contract(
            &t,
            self.mpo.tensor(i),
            &[
                (
                    labels::mpo_bond(i + 1).as_str(),
                    labels::mpo_bond(i + 1).as_str(),
                ),
                (labels::phys(i).as_str(), labels::mpo_in(i).as_str()),
            ],
        )?;
        let bra = bra_site(site, i)?;
        let t = contract(
            &t,
            &bra,
            &[
                (
                    labels::bra_bond(i + 1).as_str(),
                    labels::bra_bond(i + 1).as_str(),
                ),
                (labels::mpo_out(i).as_str(), labels::mpo_out(i).as_str()),
            ],
        )?;
        Ok(t.permuted(&[labels::bra_bond(i), labels::mpo_bond(i), labels::bond(i)])?)
    }

    /// Optimize the pair `(i, i+1)` and move the center in the given
    /// direction. Returns the local energy.
    fn optimize_pair(&mut self, i: usize, bond_cap: usize, dir: Move) -> Result<f64, SolverError> {
        let bond = labels::bond(i + 1);
        let theta = contract(
            &self.sites[i],
            &self.sites[i + 1],
            &[(bond.as_str(), bond.as_str())],
        )?;
        let theta_labels: Vec<String> = theta.labels().to_vec();

        // Half-contracted environments shared by every Krylov iteration.
        let lw = contract(
            self.left[i].as_ref().expect("left environment present"),
            self.mpo.tensor(i),
            &[(labels::mpo_bond(i).as_str(), labels::mpo_bond(i).as_str())],
        )?;
        let rw = contract(
            self.right[i + 2].as_ref().expect("right environment present"),
            self.mpo.tensor(i + 1),
            &[(
                labels::mpo_bond(i + 2).as_str(),
                labels::mpo_bond(i + 2).as_str(),
            )],
        )?;

        let apply = |x: &LabeledTensor| -> Result<LabeledTensor, TensorError> {
            // x: (b{i}, p{i}, p{i+1}, b{i+2})
            let t = contract(
                x,
                &lw,
                &[
                    (labels::bond(i).as_str(), labels::bond(i).as_str()),
                    (labels::phys(i).as_str(), labels::mpo_in(i).as_str()),
                ],
            )?;
            let t = contract(
                &t,
                &rw,
                &[
                    (labels::bond(i + 2).as_str(), labels::bond(i + 2).as_str()),
                    (
                        labels::phys(i + 1).as_str(),
                        labels::mpo_in(i + 1).as_str(),
                    ),
                    (
                        labels::mpo_bond(i + 1).as_str(),
                        labels::mpo_bond(i + 1).as_str(),
                    ),
                ],
            )?;
            // t: (cb{i}, po{i}, cb{i+2}, po{i+1}) -> theta's label space
            let t = t.permuted(&[
                labels::bra_bond(i),
                labels::mpo_out(i),
                labels::mpo_out(i + 1),
                labels::bra_bond(i + 2),
            ])?;
            t.with_labels(&theta_labels)
        };

        let (energy, optimized) = local_eigensolve(apply, &theta, self.iters)?;

        let rows = [labels::bond(i), labels::phys(i)];
        let svd = svd_truncate(&optimized, &rows, bond_cap, self.cutoff)?;
        let mut s = svd.s.clone();
        let s_norm = s.iter().map(|x| x * x).sum::<f64>().sqrt();
        if s_norm > 0.0 {
            for x in &mut s {
                *x /= s_norm;
            }
        }
        match dir {
            Move::Right => {
                self.sites[i] = svd.u.relabeled(svd.bond_label(), &bond)?;
                self.sites[i + 1] = svd
                    .v
                    .scaled_along(svd.bond_label(), &s)?
                    .relabeled(svd.bond_label(), &bond)?
                    .permuted(&[bond.clone(), labels::phys(i + 1), labels::bond(i + 2)])?;
                self.left[i + 1] = Some(self.advance(i)?);
            }
            Move::Left => {
                self.sites[i] = svd
                    .u
                    .scaled_along(svd.bond_label(), &s)?
                    .relabeled(svd.bond_label(), &bond)?;
                self.sites[i + 1] = svd.v.relabeled(svd.bond_label(), &bond)?.permuted(&[
                    bond.clone(),
                    labels::phys(i + 1),
                    labels::bond(i + 2),
                ])?;
                self.right[i + 1] = Some(self.retreat(i + 1)?);
            }
        }
        Ok(energy)
    }

    /// One left-to-right plus right-to-left pass. Returns the last local
    /// energy.
    fn sweep(&mut self, bond_cap: usize) -> Result<f64, SolverError> {
        let n = self.len();
        let mut energy = f64::NAN;
        for i in 0..n - 1 {
            energy = self.optimize_pair(i, bond_cap, Move::Right)?;
        }
        for i in (0..n - 1).rev() {
            energy = self.optimize_pair(i, bond_cap, Move::Left)?;
        }
        if !energy.is_finite() {
            return Err(SolverError::NonFinite);
        }
        Ok(energy)
    }

    fn max_bond(&self) -> usize {
        self.sites[..self.len() - 1]
            .iter()
            .map(|t| t.dims()[2])
            .max()
            .unwrap_or(1)
    }

    /// Snapshot of the current state (center at site 0 after a full sweep).
    fn state(&self) -> MatrixProductState {
        let mut state = MatrixProductState::from_tensors(self.sites.clone())
            .expect("engine tensors form a valid chain");
        state.set_ortho_center(Some(0));
        state
    }
}

fn boundary_env(i: usize) -> Result<LabeledTensor, TensorError> {
    LabeledTensor::from_vec(
        &[labels::bra_bond(i), labels::mpo_bond(i), labels::bond(i)],
        &[1, 1, 1],
        vec![C64::new(1.0, 0.0)],
    )
}

fn bra_site(site: &LabeledTensor, i: usize) -> Result<LabeledTensor, TensorError> {
    site.conj()
        .relabeled(&labels::bond(i), &labels::bra_bond(i))?
        .relabeled(&labels::bond(i + 1), &labels::bra_bond(i + 1))?
        .relabeled(&labels::phys(i), &labels::mpo_out(i))
}

fn rel_change(prev: f64, cur: f64, floor: f64) -> f64 {
    (prev - cur).abs() / prev.abs().max(floor)
}

/// One full sweep at the given bond cap, building environments from
/// scratch. Returns the last local energy and the swept state.
pub fn dmrg_sweep(
    state: &MatrixProductState,
    target: &MatrixProductOperator,
    schedule: &SweepSchedule,
    bond_cap: usize,
) -> Result<(f64, MatrixProductState), SolverError> {
    let mut engine = SweepEngine::new(
        state,
        target,
        schedule.local_solver_iters,
        schedule.svd_cutoff,
    )?;
    let energy = engine.sweep(bond_cap)?;
    Ok((energy, engine.state()))
}

/// Rayleigh quotient of a state under a Hermitian operator.
pub fn rayleigh_quotient(
    state: &MatrixProductState,
    op: &MatrixProductOperator,
) -> Result<f64, SolverError> {
    let num = overlap3(state, op, state)?;
    let den = inner(state, state)?;
    Ok(num.re / den.re)
}

/// Repeated sweeps at the warm-up bond dimension until the relative energy
/// change drops below the warm-up threshold. Returns the state and the
/// number of sweeps used.
pub fn warm_up(
    state: &MatrixProductState,
    target: &MatrixProductOperator,
    schedule: &SweepSchedule,
) -> Result<(MatrixProductState, usize), SolverError> {
    schedule.validate()?;
    let (truncated, _) = state.truncated(schedule.warmup_bond, schedule.svd_cutoff)?;
    let mut engine = SweepEngine::new(
        &truncated,
        target,
        schedule.local_solver_iters,
        schedule.svd_cutoff,
    )?;
    let mut prev = rayleigh_quotient(&truncated, target)?;
    let mut sweeps = 0;
    for _ in 0..schedule.warmup_max_sweeps {
        let energy = engine.sweep(schedule.warmup_bond)?;
        sweeps += 1;
        let rel = rel_change(prev, energy, schedule.energy_floor);
        prev = energy;
        if energy <= schedule.energy_floor || rel < schedule.warmup_threshold {
            break;
        }
    }
    Ok((engine.state(), sweeps))
}

/// Evaluate left-multiplication observables on a state via the trace ratio.
/// Returns the real parts and the largest imaginary part encountered.
fn measure(
    ivec: &MatrixProductState,
    ops: &[MatrixProductOperator],
    state: &MatrixProductState,
) -> Result<(Vec<f64>, f64), SolverError> {
    let denom = inner(ivec, state)?;
    if denom.norm() == 0.0 || !denom.norm().is_finite() {
        return Err(SolverError::NonFinite);
    }
    let mut values = Vec::with_capacity(ops.len());
    let mut max_imag = 0.0f64;
    for op in ops {
        let val = overlap3(ivec, op, state)? / denom;
        if !val.re.is_finite() || !val.im.is_finite() {
            return Err(SolverError::NonFinite);
        }
        max_imag = max_imag.max(val.im.abs());
        values.push(val.re);
    }
    Ok((values, max_imag))
}

/// Full steady-state solve: build the superoperators, warm up from the
/// maximally mixed vector, then sweep with the bond-dimension ramp until the
/// energy floor, the sweep budget, or a stall at the bond cap.
pub fn solve_ness(
    params: &ModelParams,
    scheme: &OrderingScheme,
    schedule: &SweepSchedule,
) -> Result<RunResult, SolverError> {
    params.validate()?;
    schedule.validate()?;
    let ops = SuperOperatorSet::build(params, scheme)?;
    let ivec = make_ivec(scheme)?;
    let (start, _) = ivec.truncated(schedule.warmup_bond, schedule.svd_cutoff)?;

    let mut engine = SweepEngine::new(
        &start,
        &ops.target,
        schedule.local_solver_iters,
        schedule.svd_cutoff,
    )?;

    let mut history = History::default();

    // Warm-up phase.
    let mut prev = rayleigh_quotient(&start, &ops.target)?;
    let mut warmup_sweeps = 0;
    let mut reached_floor = false;
    for _ in 0..schedule.warmup_max_sweeps {
        let t0 = Instant::now();
        let energy = engine.sweep(schedule.warmup_bond)?;
        warmup_sweeps += 1;
        history.record(&engine, &ivec, &ops, schedule, energy, t0)?;
        let rel = rel_change(prev, energy, schedule.energy_floor);
        prev = energy;
        if energy <= schedule.energy_floor {
            reached_floor = true;
            break;
        }
        if rel < schedule.warmup_threshold {
            break;
        }
    }

    // Main phase: sweep and ramp the bond cap.
    let mut bond = schedule.warmup_bond;
    let mut stall = 0usize;
    let mut main_sweeps = 0usize;
    let (converged, stop_reason) = loop {
        if reached_floor {
            break (true, StopReason::EnergyFloor);
        }
        if main_sweeps >= schedule.max_sweeps {
            break (false, StopReason::MaxSweeps);
        }
        let t0 = Instant::now();
        let energy = engine.sweep(bond)?;
        main_sweeps += 1;
        history.record(&engine, &ivec, &ops, schedule, energy, t0)?;
        if energy <= schedule.energy_floor {
            break (true, StopReason::EnergyFloor);
        }
        let rel = rel_change(prev, energy, schedule.energy_floor);
        prev = energy;
        if rel < schedule.ramp_threshold && bond < schedule.max_bond {
            bond = (bond + schedule.bond_increment).min(schedule.max_bond);
        }
        if bond == schedule.max_bond && rel < schedule.stall_threshold {
            stall += 1;
            if stall >= schedule.stall_sweeps {
                break (false, StopReason::BondCapStable);
            }
        } else {
            stall = 0;
        }
    };

    let final_state = engine.state();
    let (current_profile, im_c) = measure(&ivec, &ops.current_ops, &final_state)?;
    let (magnetization_profile, im_m) = measure(&ivec, &ops.magnetization_ops, &final_state)?;
    let max_imag = history.max_imag.max(im_c).max(im_m);

    Ok(RunResult {
        energy_history: history.energy,
        bond_history: history.bond,
        walltime_history: history.walltime,
        current_history: history.current,
        magnetization_history: history.magnetization,
        imag_history: history.imag,
        warmup_sweeps,
        final_state,
        current_profile,
        magnetization_profile,
        max_imag,
        converged,
        stop_reason,
    })
}

#[derive(Default)]
struct History {
    energy: Vec<f64>,
    bond: Vec<usize>,
    walltime: Vec<f64>,
    current: Vec<Vec<f64>>,
    magnetization: Vec<Vec<f64>>,
    imag: Vec<f64>,
    max_imag: f64,
}

impl History {
    fn record(
        &mut self,
        engine: &SweepEngine,
        ivec: &MatrixProductState,
        ops: &SuperOperatorSet,
        schedule: &SweepSchedule,
        energy: f64,
        started: Instant,
    ) -> Result<(), SolverError> {
        self.energy.push(energy);
        self.bond.push(engine.max_bond());
        self.walltime.push(started.elapsed().as_secs_f64());
        if schedule.measure_every_sweep {
            let snapshot = engine.state();
            let (currents, im_c) = measure(ivec, &ops.current_ops, &snapshot)?;
            let (mags, im_m) = measure(ivec, &ops.magnetization_ops, &snapshot)?;
            self.max_imag = self.max_imag.max(im_c).max(im_m);
            self.imag.push(im_c.max(im_m));
            self.current.push(currents);
            self.magnetization.push(mags);
        }
        Ok(())
    }
}
