//! First-order primal-dual iteration with residual-balancing step sizes.
//!
//! One step, for steps `τ`, `σ` and relaxation `θ`:
//!
//! ```text
//! x⁺ = prox_τG(x − τ K*y)
//! x̄  = x⁺ + θ(x⁺ − x)
//! y⁺ = proj(y + σ K x̄)
//! ```
//!
//! followed by the primal and dual residuals
//!
//! ```text
//! p = (x − x⁺)/τ − K*(y − y⁺)
//! d = (y − y⁺)/σ − θ K(x − x⁺)
//! ```
//!
//! measured in ℓ1 per pixel. The steps are rebalanced whenever one residual
//! dominates the other; the product `τσ` never changes, so the initial bound
//! `τσ‖K‖² ≤ 1` is kept throughout.
//!
//! [`run`] drives any [`SaddleProblem`]; [`solve`] is the entry point for the
//! joint regulariser.

use std::io::Write;

use thiserror::Error;

use crate::field::{project_l2_ball_in_place, FieldError, QuadField, ScalarField, Space, VectorField};
use crate::regularizer::{op_energy, BetaVector, Dual, Energy, ModelOperator, Primal, RegularizerError};
use crate::diffops::{self, LinearMap};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("iteration {iteration}: non-finite values encountered")]
    Diverged { iteration: usize },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Regularizer(#[from] RegularizerError),
}

/// Residual-balancing constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptConfig {
    /// Imbalance ratio that triggers a step update.
    pub delta: f64,
    /// Initial multiplier `η < 1`.
    pub eta: f64,
    /// Each triggered update moves `η` toward 1: `1 − η ← damping·(1 − η)`.
    pub damping: f64,
}

impl Default for AdaptConfig {
    fn default() -> Self {
        Self {
            delta: 5.0,
            eta: 0.95,
            damping: 0.95,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Bound on `max(primal, dual)` residual for convergence.
    pub tolerance: f64,
    pub theta: f64,
    pub adapt: bool,
    pub adaptation: AdaptConfig,
    /// Initial steps; `None` means `1/‖K‖`.
    pub tau0: Option<f64>,
    pub sigma0: Option<f64>,
    pub norm_power_iters: usize,
    pub norm_seed: u64,
    /// Log energies every this many iterations (0 disables the periodic log;
    /// the first and the final iterate are always logged).
    pub log_every: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 5000,
            tolerance: 1e-5,
            theta: 1.0,
            adapt: true,
            adaptation: AdaptConfig::default(),
            tau0: None,
            sigma0: None,
            norm_power_iters: 200,
            norm_seed: 0x5eed,
            log_every: 50,
        }
    }
}

impl SolverConfig {
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: &str| Err(SolverError::InvalidConfig(m.to_owned()));
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1");
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return bad("tolerance must be positive");
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return bad("theta must lie in [0, 1]");
        }
        if self.norm_power_iters == 0 {
            return bad("norm_power_iters must be at least 1");
        }
        let a = &self.adaptation;
        if !(a.delta >= 1.0 && a.eta > 0.0 && a.eta < 1.0 && a.damping > 0.0 && a.damping <= 1.0) {
            return bad("adaptation needs delta >= 1, 0 < eta < 1, 0 < damping <= 1");
        }
        for s in [self.tau0, self.sigma0].into_iter().flatten() {
            if !(s.is_finite() && s > 0.0) {
                return bad("initial step sizes must be positive");
            }
        }
        Ok(())
    }
}

/// Residual balancing of the two step sizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepAdapter {
    pub enabled: bool,
    pub delta: f64,
    /// Current multiplier.
    pub eta: f64,
    pub damping: f64,
}

impl StepAdapter {
    pub fn new(enabled: bool, config: AdaptConfig) -> Self {
        Self {
            enabled,
            delta: config.delta,
            eta: config.eta,
            damping: config.damping,
        }
    }

    /// Large primal residual grows `τ`, large dual residual grows `σ`.
    pub fn adapt_steps(&mut self, primal: f64, dual: f64, tau: f64, sigma: f64) -> (f64, f64) {
        if !self.enabled {
            return (tau, sigma);
        }
        let out = if primal > self.delta * dual {
            (tau / self.eta, sigma * self.eta)
        } else if dual > self.delta * primal {
            (tau * self.eta, sigma / self.eta)
        } else {
            return (tau, sigma);
        };
        self.eta = 1.0 - self.damping * (1.0 - self.eta);
        out
    }
}

/// Primal and dual residuals of one iteration, in ℓ1 per pixel.
///
/// `kx_prev`/`kx` are `K x_prev`/`K x`, `kty_prev`/`kty` are `K* y_prev`/`K* y`.
#[allow(clippy::too_many_arguments)]
pub fn residuals<X: Space, Y: Space>(
    x_prev: &X,
    x: &X,
    y_prev: &Y,
    y: &Y,
    kx_prev: &Y,
    kx: &Y,
    kty_prev: &X,
    kty: &X,
    tau: f64,
    sigma: f64,
    theta: f64,
) -> (f64, f64) {
    let mut p = x_prev.minus(x);
    p.scale(1.0 / tau);
    p.axpy(-1.0, kty_prev);
    p.axpy(1.0, kty);

    let mut d = y_prev.minus(y);
    d.scale(1.0 / sigma);
    d.axpy(-theta, kx_prev);
    d.axpy(theta, kx);

    let n = x.pixel_count() as f64;
    (p.l1_norm() / n, d.l1_norm() / n)
}

/// A saddle-point problem `min_x max_y ⟨Kx, y⟩ + G(x) − F*(y)` with `F*` the
/// indicator of a product of Euclidean balls.
pub trait SaddleProblem {
    type Primal: Space;
    type Dual: Space;

    fn apply(&self, x: &Self::Primal) -> Self::Dual;
    fn apply_adjoint(&self, y: &Self::Dual) -> Self::Primal;
    /// Resolvent of `τ∂G`, in place.
    fn prox_primal(&self, x: &mut Self::Primal, tau: f64);
    /// Resolvent of `σ∂F*`, in place. Independent of `σ` for ball indicators.
    fn project_dual(&self, y: &mut Self::Dual);
    fn energy(&self, x: &Self::Primal) -> Energy;
    fn initial_primal(&self) -> Self::Primal;
    fn initial_dual(&self) -> Self::Dual;
    fn operator_norm(&self, iterations: usize, seed: u64) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationLog {
    pub iteration: usize,
    pub energy: Energy,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub tau: f64,
    pub sigma: f64,
}

impl IterationLog {
    pub const CSV_HEADER: &'static str = "iter,total,fidelity,coupling,operator,primal_res,dual_res,tau,sigma";

    pub fn csv_row(&self) -> String {
        let e = &self.energy;
        format!(
            "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            self.iteration,
            e.total,
            e.fidelity,
            e.coupling,
            e.operator,
            self.primal_residual,
            self.dual_residual,
            self.tau,
            self.sigma
        )
    }
}

/// Writes a log as CSV with [`IterationLog::CSV_HEADER`].
pub fn write_log_csv(log: &[IterationLog], mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "{}", IterationLog::CSV_HEADER)?;
    for row in log {
        writeln!(out, "{}", row.csv_row())?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct PrimalDualReport<X, Y> {
    pub primal: X,
    pub dual: Y,
    pub iterations: usize,
    pub converged: bool,
    /// `max(primal, dual)` residual of the last iteration.
    pub final_residual: f64,
    pub operator_norm: f64,
    pub log: Vec<IterationLog>,
    pub tolerance: f64,
}

impl<X, Y> PrimalDualReport<X, Y> {
    pub fn initial_energy(&self) -> f64 {
        self.log.first().map_or(0.0, |l| l.energy.total)
    }

    pub fn final_energy(&self) -> Energy {
        self.log.last().map(|l| l.energy).unwrap_or_default()
    }

    /// Largest increase between consecutive logged energies.
    pub fn max_energy_increase(&self) -> f64 {
        self.log
            .windows(2)
            .map(|w| w[1].energy.total - w[0].energy.total)
            .fold(0.0, f64::max)
    }

    /// Logged energies never rise by more than `slack · initial energy`.
    pub fn energy_nonincreasing(&self, slack: f64) -> bool {
        self.max_energy_increase() <= slack * self.initial_energy().abs()
    }

    /// The converged flag is only set with the residual within tolerance.
    pub fn residual_bound_holds(&self) -> bool {
        !self.converged || self.final_residual <= self.tolerance
    }
}

/// Runs the primal-dual iteration on `problem`.
pub fn run<P: SaddleProblem>(problem: &P, config: &SolverConfig) -> Result<PrimalDualReport<P::Primal, P::Dual>, SolverError> {
    config.validate()?;
    let norm = problem.operator_norm(config.norm_power_iters, config.norm_seed);
    let (mut tau, mut sigma) = match (config.tau0, config.sigma0) {
        _ if norm == 0.0 => (config.tau0.unwrap_or(1.0), config.sigma0.unwrap_or(1.0)),
        (Some(t), Some(s)) => (t, s),
        (Some(t), None) => (t, 1.0 / (t * norm * norm)),
        (None, Some(s)) => (1.0 / (s * norm * norm), s),
        (None, None) => (1.0 / norm, 1.0 / norm),
    };
    if tau * sigma * norm * norm > 1.0 + 1e-12 {
        return Err(SolverError::InvalidConfig(format!(
            "tau0*sigma0*|K|^2 = {} exceeds 1",
            tau * sigma * norm * norm
        )));
    }
    let theta = config.theta;
    let mut adapter = StepAdapter::new(config.adapt, config.adaptation);

    let mut x = problem.initial_primal();
    let mut y = problem.initial_dual();
    let mut kx = problem.apply(&x);
    let mut kty = problem.apply_adjoint(&y);

    let mut log = vec![IterationLog {
        iteration: 0,
        energy: problem.energy(&x),
        primal_residual: f64::NAN,
        dual_residual: f64::NAN,
        tau,
        sigma,
    }];
    let mut converged = false;
    let mut residual = f64::INFINITY;
    let mut last = (f64::NAN, f64::NAN);
    let mut iterations = 0;

    for k in 1..=config.max_iters {
        iterations = k;
        let x_prev = x.clone();
        let y_prev = y.clone();
        let kx_prev = kx;
        let kty_prev = kty;

        x.axpy(-tau, &kty_prev);
        problem.prox_primal(&mut x, tau);
        kx = problem.apply(&x);

        // y + σK(x + θ(x − x_prev)) = y + σ((1 + θ)Kx − θKx_prev)
        y.axpy(sigma * (1.0 + theta), &kx);
        y.axpy(-sigma * theta, &kx_prev);
        problem.project_dual(&mut y);
        kty = problem.apply_adjoint(&y);

        let (p, d) = residuals(&x_prev, &x, &y_prev, &y, &kx_prev, &kx, &kty_prev, &kty, tau, sigma, theta);
        if !(p.is_finite() && d.is_finite()) {
            return Err(SolverError::Diverged { iteration: k });
        }
        last = (p, d);
        residual = p.max(d);
        let step = (tau, sigma);
        if residual <= config.tolerance {
            converged = true;
        } else {
            (tau, sigma) = adapter.adapt_steps(p, d, tau, sigma);
        }
        if converged || (config.log_every > 0 && k % config.log_every == 0) || k == config.max_iters {
            log.push(IterationLog {
                iteration: k,
                energy: problem.energy(&x),
                primal_residual: p,
                dual_residual: d,
                tau: step.0,
                sigma: step.1,
            });
        }
        if converged {
            break;
        }
    }
    log::debug!(
        "primal-dual: {iterations} iterations, converged = {converged}, residuals = {:.3e}/{:.3e}",
        last.0,
        last.1
    );

    Ok(PrimalDualReport {
        primal: x,
        dual: y,
        iterations,
        converged,
        final_residual: residual,
        operator_norm: norm,
        log,
        tolerance: config.tolerance,
    })
}

/// Resolvent of `½‖· − f‖²`: `(u + τf)/(1 + τ)`.
pub fn prox_data(u: &ScalarField, f: &ScalarField, tau: f64) -> ScalarField {
    let mut out = u.clone();
    prox_data_in_place(&mut out, f, tau);
    out
}

pub(crate) fn prox_data_in_place(u: &mut ScalarField, f: &ScalarField, tau: f64) {
    // u + τ(f − u)/(1 + τ) leaves u = f untouched bit for bit
    let s = tau / (1.0 + tau);
    for (p, q) in u.pixels_mut().iter_mut().zip(f.pixels()) {
        p[0] += s * (q[0] - p[0]);
    }
}

/// `y ← proj_α(y + σ K x̄)` blockwise.
pub fn dual_step(y1: &VectorField, y2: &QuadField, kx_bar: &Dual, sigma: f64, alpha: f64) -> (VectorField, QuadField) {
    let mut a = y1.clone();
    a.axpy(sigma, &kx_bar.0);
    project_l2_ball_in_place(&mut a, alpha);
    let mut b = y2.clone();
    b.axpy(sigma, &kx_bar.1);
    project_l2_ball_in_place(&mut b, alpha);
    (a, b)
}

/// The denoising model with the joint regulariser.
#[derive(Debug, Clone)]
pub struct VosProblem<'a> {
    f: &'a ScalarField,
    op: ModelOperator,
    alpha: f64,
}

impl<'a> VosProblem<'a> {
    pub fn new(f: &'a ScalarField, beta: &BetaVector) -> Self {
        Self {
            f,
            op: ModelOperator::new(f.shape(), beta),
            alpha: beta.alpha(),
        }
    }

    pub fn operator(&self) -> &ModelOperator {
        &self.op
    }
}

impl SaddleProblem for VosProblem<'_> {
    type Primal = Primal;
    type Dual = Dual;

    fn apply(&self, x: &Primal) -> Dual {
        self.op.apply(x)
    }

    fn apply_adjoint(&self, y: &Dual) -> Primal {
        self.op.apply_adjoint(y)
    }

    fn prox_primal(&self, x: &mut Primal, tau: f64) {
        prox_data_in_place(&mut x.0, self.f, tau);
    }

    fn project_dual(&self, y: &mut Dual) {
        project_l2_ball_in_place(&mut y.0, self.alpha);
        project_l2_ball_in_place(&mut y.1, self.alpha);
    }

    fn energy(&self, x: &Primal) -> Energy {
        op_energy(&self.op, &x.0, &x.1, self.f, self.alpha)
    }

    /// `u = f`, `w = ∇f`.
    fn initial_primal(&self) -> Primal {
        (self.f.clone(), diffops::grad(self.f))
    }

    fn initial_dual(&self) -> Dual {
        (VectorField::zeros(self.f.shape()), QuadField::zeros(self.f.shape()))
    }

    fn operator_norm(&self, iterations: usize, seed: u64) -> f64 {
        self.op.estimate_norm(iterations, seed)
    }
}

/// Result of [`solve`].
#[derive(Debug, Clone)]
pub struct SolverReport {
    pub u: ScalarField,
    pub w: VectorField,
    pub y1: VectorField,
    pub y2: QuadField,
    pub beta: BetaVector,
    pub iterations: usize,
    pub converged: bool,
    pub final_residual: f64,
    pub operator_norm: f64,
    pub log: Vec<IterationLog>,
    pub tolerance: f64,
}

impl SolverReport {
    fn from_report(r: PrimalDualReport<Primal, Dual>, beta: BetaVector) -> Self {
        let ((u, w), (y1, y2)) = (r.primal, r.dual);
        Self {
            u,
            w,
            y1,
            y2,
            beta,
            iterations: r.iterations,
            converged: r.converged,
            final_residual: r.final_residual,
            operator_norm: r.operator_norm,
            log: r.log,
            tolerance: r.tolerance,
        }
    }

    pub fn initial_energy(&self) -> f64 {
        self.log.first().map_or(0.0, |l| l.energy.total)
    }

    pub fn final_energy(&self) -> Energy {
        self.log.last().map(|l| l.energy).unwrap_or_default()
    }

    pub fn max_energy_increase(&self) -> f64 {
        self.log
            .windows(2)
            .map(|w| w[1].energy.total - w[0].energy.total)
            .fold(0.0, f64::max)
    }

    pub fn energy_nonincreasing(&self, slack: f64) -> bool {
        self.max_energy_increase() <= slack * self.initial_energy().abs()
    }

    pub fn residual_bound_holds(&self) -> bool {
        !self.converged || self.final_residual <= self.tolerance
    }
}

/// Minimises `½‖u − f‖² + α R_β(u)` jointly over `(u, w)`.
pub fn solve(f: &ScalarField, beta: &BetaVector, config: &SolverConfig) -> Result<SolverReport, SolverError> {
    let problem = VosProblem::new(f, beta);
    let report = run(&problem, config)?;
    Ok(SolverReport::from_report(report, *beta))
}
