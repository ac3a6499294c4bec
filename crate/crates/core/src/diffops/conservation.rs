use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::field::{FieldError, ScalarField, Shape};

use super::{DiscretizationVariant, Stencil, BACKWARD_CURL, BACKWARD_SHEAR2, CURL, DIV, GRAD, SHEAR1, SHEAR2};

/// Largest pointwise residuals of the four discrete conservation laws over
/// a batch of random inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConservationReport {
    pub variant: DiscretizationVariant,
    pub curl_grad: f64,
    pub div_curl_adjoint: f64,
    pub shear1_shear2_adjoint: f64,
    pub shear2_shear1_adjoint: f64,
    /// Largest `|u|` over all trials.
    pub input_max: f64,
}

impl ConservationReport {
    pub fn max_residual(&self) -> f64 {
        self.curl_grad
            .max(self.div_curl_adjoint)
            .max(self.shear1_shear2_adjoint)
            .max(self.shear2_shear1_adjoint)
    }

    /// All four residuals within `tol · max|u|`.
    pub fn holds(&self, tol: f64) -> bool {
        self.max_residual() <= tol * self.input_max
    }
}

/// Evaluates `curl∘grad`, `div∘curl*`, `sh1∘sh2*` and `sh2∘sh1*` on `trials`
/// random `size × size` fields drawn uniformly from `[0, 1)`.
///
/// `BrediesReference` swaps in the all-backward curl and shear2 stencils,
/// for which the laws generically fail.
pub fn check_conservation(
    size: usize,
    trials: usize,
    seed: u64,
    variant: DiscretizationVariant,
) -> Result<ConservationReport, FieldError> {
    let shape = Shape::square(size)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = ConservationReport {
        variant,
        curl_grad: 0.0,
        div_curl_adjoint: 0.0,
        shear1_shear2_adjoint: 0.0,
        shear2_shear1_adjoint: 0.0,
        input_max: 0.0,
    };
    for _ in 0..trials.max(1) {
        let u = ScalarField::random_uniform(shape, 0.0, 1.0, &mut rng);
        accumulate_report(&mut report, &u, variant);
    }
    Ok(report)
}

pub(crate) fn accumulate_report(report: &mut ConservationReport, u: &ScalarField, variant: DiscretizationVariant) {
    let (curl, shear2): (&Stencil<2, 1>, &Stencil<2, 1>) = match variant {
        DiscretizationVariant::ConservationPreserving => (&CURL, &SHEAR2),
        DiscretizationVariant::BrediesReference => (&BACKWARD_CURL, &BACKWARD_SHEAR2),
    };
    report.curl_grad = report.curl_grad.max(curl.apply(&GRAD.apply(u)).max_abs());
    report.div_curl_adjoint = report.div_curl_adjoint.max(DIV.apply(&curl.apply_adjoint(u)).max_abs());
    report.shear1_shear2_adjoint = report
        .shear1_shear2_adjoint
        .max(SHEAR1.apply(&shear2.apply_adjoint(u)).max_abs());
    report.shear2_shear1_adjoint = report
        .shear2_shear1_adjoint
        .max(shear2.apply(&SHEAR1.apply_adjoint(u)).max_abs());
    report.input_max = report.input_max.max(u.max_abs());
}
