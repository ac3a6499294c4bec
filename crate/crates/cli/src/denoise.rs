use std::fs::File;
use std::io::BufWriter;
use std::time::Instant;

use vos_core::imaging;
use vos_core::solver::write_log_csv;
use vos_core::{DiscretizationVariant, QualityTriple};

use crate::args::{DenoiseArgs, Discretization};
use crate::common::{self, Job};
use crate::error::CliError;
use crate::provenance::{sidecar_path, Provenance};

pub fn run(args: &DenoiseArgs) -> Result<(), CliError> {
    let mut prov = Provenance::new("denoise");
    let variant = match args.discretization {
        None => None,
        Some(Discretization::Conservative) => Some(DiscretizationVariant::ConservationPreserving),
        Some(Discretization::Bredies) => Some(DiscretizationVariant::BrediesReference),
        Some(Discretization::Both) => return Err(CliError::usage("--discretization both is only available in compare")),
    };
    let betas = args.beta.as_deref().map(common::parse_betas).transpose()?;
    let model = match (&args.model, betas) {
        (Some(m), _) => m.as_str(),
        (None, Some(_)) => "vos",
        (None, None) => return Err(CliError::usage("give --model NAME or --beta b1,b2,b3,b4")),
    };
    if variant.is_some() && !model.eq_ignore_ascii_case("tgv") {
        return Err(CliError::usage("--discretization applies to --model tgv only"));
    }
    let job = Job::from_model(model, args.alpha, betas, args.svf_beta, variant)?;
    if let Job::Vos { beta, .. } = &job {
        if let Some(msg) = common::artefact_warning(&beta.betas()) {
            log::warn!("{msg}");
        }
    }
    let mut cfg = common::solver_config(&args.solver, &mut prov)?;
    cfg.log_every = args.log_every;
    job.record(&mut prov, "");

    let input = common::prepare_input(&args.input, &mut prov)?;
    if let Some(path) = &args.save_noisy {
        imaging::save_field(&input.noisy, path)?;
        prov.set("noisy_raw", path.display());
    }

    let start = Instant::now();
    let out = job.run(&input.noisy, &cfg)?;
    let seconds = start.elapsed().as_secs_f64();

    imaging::save_image(&out.u, &args.output, common::bit_depth(args.depth))?;
    prov.set("output", args.output.display());
    prov.set("depth", if args.depth == crate::args::Depth::Eight { 8 } else { 16 });
    if let Some(path) = &args.raw {
        imaging::save_field(&out.u, path)?;
        prov.set("raw", path.display());
    }
    if let Some(path) = &args.log {
        let file = File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        write_log_csv(&out.log, BufWriter::new(file))?;
        prov.set("log", path.display());
    }

    prov.set("iterations", out.iterations);
    prov.set("converged", out.converged);
    prov.set("final_residual", out.final_residual);
    prov.set("operator_norm", out.operator_norm);
    println!(
        "{}: {} iterations, converged {}, residual {:.3e}, {:.2}s",
        job.label(),
        out.iterations,
        out.converged,
        out.final_residual,
        seconds
    );
    if !out.converged {
        log::warn!("stopped at --max-iters {} before reaching --tol {}", cfg.max_iters, cfg.tolerance);
    }
    if let Some(truth) = &input.truth {
        let q = QualityTriple::measure(&out.u, truth)?;
        println!("SSIM {:.4}  PSNR {:.2} dB  rel. error {:.4}", q.ssim, q.psnr, q.rel_error);
        prov.set("ssim", q.ssim);
        prov.set("psnr", q.psnr);
        prov.set("rel_error", q.rel_error);
    }
    prov.write(&sidecar_path(&args.output))
}
