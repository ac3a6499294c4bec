//! Literature models as weight presets, plus two directly implemented
//! reference solvers (ROF/TV and TGV²) used as oracles.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::diffops::{self, frobenius_inner, frobenius_magnitude, DiscretizationVariant, LinearMap};
use crate::field::{dot, mixed_norm_21, project_l2_ball_in_place, ScalarField, SymField, VectorField};
use crate::regularizer::{fidelity, BetaVector, Energy, RegularizerError, NORM_SAFETY};
use crate::solver::{self, prox_data_in_place, PrimalDualReport, SaddleProblem, SolverConfig, SolverError, SolverReport};

/// Stand-in for an infinite `β1`.
pub const LARGE_BETA: f64 = 1e10;
/// Uniform scaling `t` of the TV limit preset.
pub const TV_LIMIT_SCALE: f64 = 1e4;
/// Regularisation strength used when no override is given.
pub const DEFAULT_ALPHA: f64 = 0.25;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("unknown model '{0}' (expected one of tv, svf, cep, tgv, tgv-full, ictv, vos)")]
    UnknownModel(String),
    #[error("beta1 values must be nonempty and nondecreasing")]
    InvalidSweep,
    #[error(transparent)]
    Regularizer(#[from] RegularizerError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelName {
    TvLimit,
    Svf,
    CepApprox,
    TgvSym,
    TgvFull,
    IctvApprox,
    VosCustom,
}

impl ModelName {
    pub const ALL: [ModelName; 7] = [
        Self::TvLimit,
        Self::Svf,
        Self::CepApprox,
        Self::TgvSym,
        Self::TgvFull,
        Self::IctvApprox,
        Self::VosCustom,
    ];

    pub fn cli_name(self) -> &'static str {
        match self {
            Self::TvLimit => "tv",
            Self::Svf => "svf",
            Self::CepApprox => "cep",
            Self::TgvSym => "tgv",
            Self::TgvFull => "tgv-full",
            Self::IctvApprox => "ictv",
            Self::VosCustom => "vos",
        }
    }
}

impl fmt::Display for ModelName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.cli_name())
    }
}

impl FromStr for ModelName {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, ModelError> {
        Self::ALL
            .into_iter()
            .find(|m| m.cli_name().eq_ignore_ascii_case(s))
            .ok_or_else(|| ModelError::UnknownModel(s.to_owned()))
    }
}

/// Optional replacements for preset values.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PresetOverrides {
    pub alpha: Option<f64>,
    /// Replaces the whole weight vector.
    pub betas: Option<[f64; 4]>,
    /// The single weight of `svf` (its `β2`); ignored by other presets.
    pub svf_beta: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelPreset {
    pub name: ModelName,
    pub beta: BetaVector,
    pub notes: &'static str,
}

impl ModelPreset {
    pub fn table(name: ModelName) -> Self {
        let (betas, notes) = match name {
            ModelName::TvLimit => (
                [TV_LIMIT_SCALE; 4],
                "uniform scaling t = 1e4 of (1, 1, 1, 1); approaches TV as t grows",
            ),
            ModelName::Svf => ([0.0, 1.0, 0.0, 0.0], "divergence penalty only; (0, b, 0, 0)"),
            ModelName::CepApprox => (
                [LARGE_BETA, 1.0, 0.0, 0.0],
                "curl-free, divergence penalised; tends to produce point artefacts",
            ),
            ModelName::TgvSym => ([0.0, 0.5, 0.5, 0.5], "equals second-order TGV with the symmetrised gradient"),
            ModelName::TgvFull => ([0.5; 4], "TGV with the full gradient matrix"),
            ModelName::IctvApprox => ([LARGE_BETA, 0.5, 0.5, 0.5], "TGV with beta1 = 1e10; approximates ICTV"),
            ModelName::VosCustom => ([0.0, 0.5, 0.5, 0.5], "user-supplied weights, TGV by default"),
        };
        let beta = BetaVector::new(betas, DEFAULT_ALPHA).expect("preset table is valid");
        Self { name, beta, notes }
    }
}

/// Weights of a named model with optional overrides.
pub fn preset(name: ModelName, overrides: &PresetOverrides) -> Result<BetaVector, ModelError> {
    let mut betas = ModelPreset::table(name).beta.betas();
    if let (ModelName::Svf, Some(b)) = (name, overrides.svf_beta) {
        betas[1] = b;
    }
    if let Some(b) = overrides.betas {
        betas = b;
    }
    Ok(BetaVector::new(betas, overrides.alpha.unwrap_or(DEFAULT_ALPHA))?)
}

/// Parses a CLI model name and looks it up.
pub fn preset_by_name(name: &str, overrides: &PresetOverrides) -> Result<BetaVector, ModelError> {
    preset(name.parse()?, overrides)
}

/// Weights reproducing `TGV²` with separate weights: `α1` on `‖∇u − w‖` and
/// `α0` on `‖E w‖_F`. Since `|(div, sh1, sh2)|² = 2|E w|_F²`, this is
/// `α = α1` with `β = (0, b, b, b)`, `b = (α0/α1)²/2`.
pub fn tgv_weights(alpha1: f64, alpha0: f64) -> Result<BetaVector, ModelError> {
    if let Some(&bad) = [alpha1, alpha0].iter().find(|a| !(a.is_finite() && **a > 0.0)) {
        return Err(RegularizerError::NonPositiveAlpha(bad).into());
    }
    let b = 0.5 * (alpha0 / alpha1).powi(2);
    Ok(BetaVector::new([0.0, b, b, b], alpha1)?)
}

/// ROF: `½‖u − f‖² + α‖∇u‖₂,₁`.
#[derive(Debug, Clone)]
pub struct TvProblem<'a> {
    f: &'a ScalarField,
    alpha: f64,
}

impl<'a> TvProblem<'a> {
    pub fn new(f: &'a ScalarField, alpha: f64) -> Self {
        Self { f, alpha }
    }
}

impl SaddleProblem for TvProblem<'_> {
    type Primal = ScalarField;
    type Dual = VectorField;

    fn apply(&self, u: &ScalarField) -> VectorField {
        diffops::grad(u)
    }

    fn apply_adjoint(&self, y: &VectorField) -> ScalarField {
        diffops::grad_adjoint(y)
    }

    fn prox_primal(&self, u: &mut ScalarField, tau: f64) {
        prox_data_in_place(u, self.f, tau);
    }

    fn project_dual(&self, y: &mut VectorField) {
        project_l2_ball_in_place(y, self.alpha);
    }

    fn energy(&self, u: &ScalarField) -> Energy {
        Energy::new(fidelity(u, self.f), self.alpha * mixed_norm_21(&diffops::grad(u)), 0.0)
    }

    fn initial_primal(&self) -> ScalarField {
        self.f.clone()
    }

    fn initial_dual(&self) -> VectorField {
        VectorField::zeros(self.f.shape())
    }

    fn operator_norm(&self, iterations: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x0 = ScalarField::random_uniform(self.f.shape(), -1.0, 1.0, &mut rng);
        NORM_SAFETY * diffops::power_iteration(&diffops::GRAD, &x0, iterations)
    }
}

pub type TvReport = PrimalDualReport<ScalarField, VectorField>;

/// ROF minimiser by the same primal-dual iteration with `K = ∇`.
pub fn solve_tv_reference(f: &ScalarField, alpha: f64, config: &SolverConfig) -> Result<TvReport, ModelError> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(RegularizerError::NonPositiveAlpha(alpha).into());
    }
    Ok(solver::run(&TvProblem::new(f, alpha), config)?)
}

/// `(u, w) ↦ (∇u − w, E w)` with the Frobenius pairing on the second block.
#[derive(Debug, Clone, Copy)]
pub struct TgvOperator {
    pub variant: DiscretizationVariant,
}

impl LinearMap for TgvOperator {
    type Domain = (ScalarField, VectorField);
    type Codomain = (VectorField, SymField);

    fn apply(&self, x: &Self::Domain) -> Self::Codomain {
        let mut c = diffops::grad(&x.0);
        c.axpy(-1.0, &x.1);
        (c, diffops::sym_grad(&x.1, self.variant))
    }

    fn apply_adjoint(&self, y: &Self::Codomain) -> Self::Domain {
        let mut w = diffops::sym_grad_adjoint(&y.1, self.variant);
        w.axpy(-1.0, &y.0);
        (diffops::grad_adjoint(&y.0), w)
    }

    fn codomain_dot(&self, a: &Self::Codomain, b: &Self::Codomain) -> f64 {
        dot(&a.0, &b.0) + frobenius_inner(&a.1, &b.1)
    }
}

/// Second-order TGV: `½‖u − f‖² + α‖∇u − w‖₂,₁ + α Σ|E w|_F`.
#[derive(Debug, Clone)]
pub struct TgvProblem<'a> {
    f: &'a ScalarField,
    alpha: f64,
    op: TgvOperator,
}

impl<'a> TgvProblem<'a> {
    pub fn new(f: &'a ScalarField, alpha: f64, variant: DiscretizationVariant) -> Self {
        Self {
            f,
            alpha,
            op: TgvOperator { variant },
        }
    }
}

/// Radial projection onto the Frobenius ball of radius `r`.
fn project_frobenius_ball(g: &mut SymField, r: f64) {
    for p in g.pixels_mut() {
        let n = (p[0] * p[0] + 2.0 * p[1] * p[1] + p[2] * p[2]).sqrt();
        if n > r {
            let s = r / n;
            p.iter_mut().for_each(|c| *c *= s);
        }
    }
}

impl SaddleProblem for TgvProblem<'_> {
    type Primal = (ScalarField, VectorField);
    type Dual = (VectorField, SymField);

    fn apply(&self, x: &Self::Primal) -> Self::Dual {
        self.op.apply(x)
    }

    fn apply_adjoint(&self, y: &Self::Dual) -> Self::Primal {
        self.op.apply_adjoint(y)
    }

    fn prox_primal(&self, x: &mut Self::Primal, tau: f64) {
        prox_data_in_place(&mut x.0, self.f, tau);
    }

    fn project_dual(&self, y: &mut Self::Dual) {
        project_l2_ball_in_place(&mut y.0, self.alpha);
        project_frobenius_ball(&mut y.1, self.alpha);
    }

    fn energy(&self, x: &Self::Primal) -> Energy {
        let (c, e) = self.op.apply(x);
        Energy::new(
            fidelity(&x.0, self.f),
            self.alpha * mixed_norm_21(&c),
            self.alpha * frobenius_magnitude(&e).sum(),
        )
    }

    fn initial_primal(&self) -> Self::Primal {
        (self.f.clone(), diffops::grad(self.f))
    }

    fn initial_dual(&self) -> Self::Dual {
        (VectorField::zeros(self.f.shape()), SymField::zeros(self.f.shape()))
    }

    fn operator_norm(&self, iterations: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = self.f.shape();
        let x0 = (
            ScalarField::random_uniform(s, -1.0, 1.0, &mut rng),
            VectorField::random_uniform(s, -1.0, 1.0, &mut rng),
        );
        NORM_SAFETY * diffops::power_iteration(&self.op, &x0, iterations)
    }
}

pub type TgvReport = PrimalDualReport<(ScalarField, VectorField), (VectorField, SymField)>;

/// Direct TGV² solve with both weights equal to `alpha`.
pub fn solve_tgv(
    f: &ScalarField,
    alpha: f64,
    variant: DiscretizationVariant,
    config: &SolverConfig,
) -> Result<TgvReport, ModelError> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(RegularizerError::NonPositiveAlpha(alpha).into());
    }
    Ok(solver::run(&TgvProblem::new(f, alpha, variant), config)?)
}

/// `Σ |curl w|`, the total curl of a vector field.
pub fn curl_mass(w: &VectorField) -> f64 {
    mixed_norm_21(&diffops::curl(w))
}

#[derive(Debug, Clone)]
pub struct InterpolationRecord {
    pub beta1: f64,
    pub curl_mass: f64,
    pub report: SolverReport,
}

/// Solves with `β = (β1, base2, base3, base4)` for each `β1`, recording the
/// curl mass of the returned `w`.
#[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN values must fail too
pub fn interpolation_sweep(
    f: &ScalarField,
    beta1_values: &[f64],
    base: &BetaVector,
    config: &SolverConfig,
) -> Result<Vec<InterpolationRecord>, ModelError> {
    if beta1_values.is_empty() || beta1_values.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(ModelError::InvalidSweep);
    }
    beta1_values
        .iter()
        .map(|&b1| {
            let mut betas = base.betas();
            betas[0] = b1;
            let beta = base.with_betas(betas)?;
            let report = solver::solve(f, &beta, config)?;
            Ok(InterpolationRecord {
                beta1: b1,
                curl_mass: curl_mass(&report.w),
                report,
            })
        })
        .collect()
}

/// Curl masses are nonincreasing up to a relative `slack`.
pub fn curl_trend_holds(records: &[InterpolationRecord], slack: f64) -> bool {
    records
        .windows(2)
        .all(|w| w[1].curl_mass <= w[0].curl_mass * (1.0 + slack))
}
