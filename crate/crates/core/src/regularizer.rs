//! The joint regulariser and the model operator used by the solver.
//!
//! For `u` and an auxiliary field `w` the model energy is
//!
//! ```text
//! ½‖u − f‖² + α‖∇u − w‖₂,₁ + α‖(√β1 curl w, √β2 div w, √β3 sh1 w, √β4 sh2 w)‖₂,₁
//! ```
//!
//! The square roots of the weights are folded into the rows of the operator
//! so the dual update is a plain Euclidean-ball projection.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::diffops::{self, LinearMap, Stencil};
use crate::field::{dot, mixed_norm_21, FieldError, QuadField, ScalarField, Shape, VectorField};

/// Operators of the natural stack, in channel order.
pub const NATURAL_OPERATORS: [&Stencil<2, 1>; 4] = [&diffops::CURL, &diffops::DIV, &diffops::SHEAR1, &diffops::SHEAR2];

pub const OPERATOR_NAMES: [&str; 4] = ["curl", "div", "sh1", "sh2"];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegularizerError {
    #[error("weight beta{index} = {value} must be a finite nonnegative number")]
    NegativeBeta { index: usize, value: f64 },
    #[error("alpha = {0} must be a finite positive number")]
    NonPositiveAlpha(f64),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Squared weights `β1..β4` on (curl, div, sh1, sh2) and the overall weight `α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaVector {
    betas: [f64; 4],
    alpha: f64,
}

impl BetaVector {
    pub fn new(betas: [f64; 4], alpha: f64) -> Result<Self, RegularizerError> {
        for (k, &b) in betas.iter().enumerate() {
            if !(b.is_finite() && b >= 0.0) {
                return Err(RegularizerError::NegativeBeta { index: k + 1, value: b });
            }
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(RegularizerError::NonPositiveAlpha(alpha));
        }
        Ok(Self { betas, alpha })
    }

    pub fn betas(&self) -> [f64; 4] {
        self.betas
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn with_alpha(self, alpha: f64) -> Result<Self, RegularizerError> {
        Self::new(self.betas, alpha)
    }

    pub fn with_betas(self, betas: [f64; 4]) -> Result<Self, RegularizerError> {
        Self::new(betas, self.alpha)
    }

    /// Row weights `√βi` applied to the natural operators.
    pub fn sqrt_weights(&self) -> [f64; 4] {
        self.betas.map(f64::sqrt)
    }

    /// Invariance of the continuous regulariser under arbitrary rotations.
    pub fn is_rotation_invariant(&self) -> bool {
        self.betas[2] == self.betas[3]
    }

    pub fn zero_count(&self) -> usize {
        self.betas.iter().filter(|&&b| b == 0.0).count()
    }
}

/// Primal variable `(u, w)` and dual variable `(y1, y2)` of the saddle-point form.
pub type Primal = (ScalarField, VectorField);
pub type Dual = (VectorField, QuadField);

/// `K(u, w) = (∇u − w, √β1 curl w, √β2 div w, √β3 sh1 w, √β4 sh2 w)`.
///
/// Rows with `βi = 0` are skipped; their output channel stays identically
/// zero.
#[derive(Debug, Clone)]
pub struct ModelOperator {
    shape: Shape,
    weights: [f64; 4],
    active: Vec<usize>,
}

impl ModelOperator {
    pub fn new(shape: Shape, beta: &BetaVector) -> Self {
        let weights = beta.sqrt_weights();
        let active = (0..4).filter(|&k| weights[k] > 0.0).collect();
        Self { shape, weights, active }
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn active_rows(&self) -> &[usize] {
        &self.active
    }

    /// The weighted natural-operator stack `diag(√β)·∇_N w`.
    pub fn natural_stack(&self, w: &VectorField) -> QuadField {
        let mut out = QuadField::zeros(w.shape());
        for &k in &self.active {
            NATURAL_OPERATORS[k].apply_into_channels(w, self.weights[k], &mut out, k);
        }
        out
    }

    pub fn natural_stack_adjoint(&self, y2: &QuadField, out: &mut VectorField) {
        for &k in &self.active {
            NATURAL_OPERATORS[k].apply_adjoint_from_channels(y2, k, self.weights[k], out);
        }
    }

    pub fn apply_parts(&self, u: &ScalarField, w: &VectorField) -> Dual {
        let mut coupling = diffops::GRAD.apply(u);
        coupling.axpy(-1.0, w);
        (coupling, self.natural_stack(w))
    }

    pub fn apply_adjoint_parts(&self, y1: &VectorField, y2: &QuadField) -> Primal {
        let u = diffops::GRAD.apply_adjoint(y1);
        let mut w = y1.scaled(-1.0);
        self.natural_stack_adjoint(y2, &mut w);
        (u, w)
    }

    fn check(&self, shape: Shape) -> Result<(), FieldError> {
        if shape != self.shape {
            return Err(FieldError::ShapeMismatch {
                left: self.shape,
                right: shape,
            });
        }
        Ok(())
    }
}

impl LinearMap for ModelOperator {
    type Domain = Primal;
    type Codomain = Dual;

    fn apply(&self, x: &Primal) -> Dual {
        self.apply_parts(&x.0, &x.1)
    }

    fn apply_adjoint(&self, y: &Dual) -> Primal {
        self.apply_adjoint_parts(&y.0, &y.1)
    }
}

pub fn apply_k(u: &ScalarField, w: &VectorField, beta: &BetaVector) -> Result<Dual, RegularizerError> {
    u.check_same_shape(w)?;
    Ok(ModelOperator::new(u.shape(), beta).apply_parts(u, w))
}

/// `K*(y1, y2) = (−div y1, −y1 + Σ √βi op_i*(y2_i))`.
pub fn apply_k_adjoint(y1: &VectorField, y2: &QuadField, beta: &BetaVector) -> Result<Primal, RegularizerError> {
    y1.check_same_shape(y2)?;
    Ok(ModelOperator::new(y1.shape(), beta).apply_adjoint_parts(y1, y2))
}

/// Terms of the objective; `total` is their sum.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Energy {
    pub total: f64,
    pub fidelity: f64,
    pub coupling: f64,
    pub operator: f64,
}

impl Energy {
    pub fn new(fidelity: f64, coupling: f64, operator: f64) -> Self {
        Self {
            total: fidelity + coupling + operator,
            fidelity,
            coupling,
            operator,
        }
    }
}

pub fn fidelity(u: &ScalarField, f: &ScalarField) -> f64 {
    let d = u - f;
    0.5 * dot(&d, &d)
}

pub fn energy(u: &ScalarField, w: &VectorField, f: &ScalarField, beta: &BetaVector) -> Result<Energy, RegularizerError> {
    u.check_same_shape(w)?;
    u.check_same_shape(f)?;
    let op = ModelOperator::new(u.shape(), beta);
    Ok(op_energy(&op, u, w, f, beta.alpha()))
}

pub(crate) fn op_energy(op: &ModelOperator, u: &ScalarField, w: &VectorField, f: &ScalarField, alpha: f64) -> Energy {
    let (coupling, stack) = op.apply_parts(u, w);
    Energy::new(fidelity(u, f), alpha * mixed_norm_21(&coupling), alpha * mixed_norm_21(&stack))
}

/// Safety factor applied to power-iteration norm estimates.
pub const NORM_SAFETY: f64 = 1.01;

/// Power-iteration estimate of `‖K‖` on a grid of `shape`, times [`NORM_SAFETY`].
pub fn estimate_operator_norm(beta: &BetaVector, shape: Shape, iterations: usize, seed: u64) -> f64 {
    let op = ModelOperator::new(shape, beta);
    op.estimate_norm(iterations, seed)
}

impl ModelOperator {
    pub fn estimate_norm(&self, iterations: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x0 = (
            ScalarField::random_uniform(self.shape, -1.0, 1.0, &mut rng),
            VectorField::random_uniform(self.shape, -1.0, 1.0, &mut rng),
        );
        NORM_SAFETY * diffops::power_iteration(self, &x0, iterations)
    }

    /// Checks `(u, w)` against the operator's grid.
    pub fn check_primal(&self, x: &Primal) -> Result<(), FieldError> {
        self.check(x.0.shape())?;
        self.check(x.1.shape())
    }
}
