use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vos_core::diffops::{self, adjointness_gap, check_conservation, LinearMap};
use vos_core::regularizer::ModelOperator;
use vos_core::{BetaVector, DiscretizationVariant, Field, Shape};

use crate::args::{CheckOpsArgs, Variant};
use crate::error::CliError;

pub const ADJOINT_TOL: f64 = 1e-10;
pub const CONSERVATION_TOL: f64 = 1e-12;

/// Random probe vectors in `[-1, 1]`.
trait Probe: Sized {
    fn random(shape: Shape, rng: &mut ChaCha8Rng) -> Self;
}

impl<const C: usize> Probe for Field<C> {
    fn random(shape: Shape, rng: &mut ChaCha8Rng) -> Self {
        Field::random_uniform(shape, -1.0, 1.0, rng)
    }
}

impl<A: Probe, B: Probe> Probe for (A, B) {
    fn random(shape: Shape, rng: &mut ChaCha8Rng) -> Self {
        (A::random(shape, rng), B::random(shape, rng))
    }
}

fn max_gap<A: LinearMap>(op: &A, shape: Shape, trials: usize, rng: &mut ChaCha8Rng) -> f64
where
    A::Domain: Probe,
    A::Codomain: Probe,
{
    (0..trials.max(1))
        .map(|_| {
            let x = A::Domain::random(shape, rng);
            let y = A::Codomain::random(shape, rng);
            adjointness_gap(op, &x, &y)
        })
        .fold(0.0, f64::max)
}

pub fn run(args: &CheckOpsArgs) -> Result<(), CliError> {
    let shape = Shape::square(args.size)?;
    let variant = match args.variant {
        Variant::Conservative => DiscretizationVariant::ConservationPreserving,
        Variant::Bredies => DiscretizationVariant::BrediesReference,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let t = args.trials;
    let beta = BetaVector::new([1.0, 0.5, 2.0, 0.25], 1.0)?;
    let gaps = [
        ("grad", max_gap(&diffops::GRAD, shape, t, &mut rng)),
        ("div", max_gap(&diffops::DIV, shape, t, &mut rng)),
        ("curl", max_gap(&diffops::CURL, shape, t, &mut rng)),
        ("sh1", max_gap(&diffops::SHEAR1, shape, t, &mut rng)),
        ("sh2", max_gap(&diffops::SHEAR2, shape, t, &mut rng)),
        ("sym_grad", max_gap(variant.sym_grad_stencil(), shape, t, &mut rng)),
        ("model", max_gap(&ModelOperator::new(shape, &beta), shape, t, &mut rng)),
    ];
    println!("adjointness (relative, {} trials on {}×{}):", t.max(1), args.size, args.size);
    let mut violations = Vec::new();
    for (name, gap) in gaps {
        let ok = gap <= ADJOINT_TOL;
        println!("  {name:<9} {gap:.3e} {}", if ok { "ok" } else { "FAIL" });
        if !ok {
            violations.push(format!("{name} adjoint gap {gap:.3e}"));
        }
    }

    let report = check_conservation(args.size, t, args.seed, variant)?;
    let bound = CONSERVATION_TOL * report.input_max;
    let laws = [
        ("curl∘grad", report.curl_grad),
        ("div∘curl*", report.div_curl_adjoint),
        ("sh1∘sh2*", report.shear1_shear2_adjoint),
        ("sh2∘sh1*", report.shear2_shear1_adjoint),
    ];
    let counterexample = variant == DiscretizationVariant::BrediesReference;
    println!(
        "conservation ({} stencils, max|u| = {:.3}):",
        if counterexample { "all-backward" } else { "conservative" },
        report.input_max
    );
    for (name, r) in laws {
        let ok = r <= bound;
        let tag = match (ok, counterexample) {
            (true, _) => "ok",
            (false, true) => "nonzero",
            (false, false) => "FAIL",
        };
        println!("  {name:<10} {r:.3e} {tag}");
        if !ok && !counterexample {
            violations.push(format!("{name} residual {r:.3e}"));
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(CliError::Violation(violations.join("; ")))
    }
}
