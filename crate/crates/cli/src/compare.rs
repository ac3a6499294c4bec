use std::fs;
use std::time::Instant;

use rayon::prelude::*;
use vos_core::imaging;
use vos_core::{DiscretizationVariant, QualityTriple, ScalarField};

use crate::args::{CompareArgs, Discretization};
use crate::common::{self, Job};
use crate::error::CliError;
use crate::provenance::Provenance;

pub const METRICS_FILE: &str = "metrics.csv";
pub const METRICS_HEADER: &str = "model,alpha,ssim,psnr,rel_error,iterations,converged,seconds";

struct Row {
    job: Job,
    quality: QualityTriple,
    iterations: usize,
    converged: bool,
    seconds: f64,
    u: ScalarField,
}

/// `name=value` pairs from `--alphas`.
fn per_model_alpha(specs: &[String], name: &str) -> Result<Option<f64>, CliError> {
    for spec in specs {
        let (k, v) = spec
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("--alphas entries look like tv=0.3, got '{spec}'")))?;
        if k.trim().eq_ignore_ascii_case(name) {
            let a = v.trim().parse().map_err(|_| CliError::usage(format!("bad alpha in '{spec}'")))?;
            return Ok(Some(a));
        }
    }
    Ok(None)
}

fn jobs(args: &CompareArgs) -> Result<Vec<Job>, CliError> {
    let betas = args.beta.as_deref().map(common::parse_betas).transpose()?;
    for spec in &args.alphas {
        let name = spec.split_once('=').map_or(spec.as_str(), |(k, _)| k.trim());
        if !args.models.iter().any(|m| m.eq_ignore_ascii_case(name)) {
            return Err(CliError::usage(format!("--alphas names '{name}', which is not in --models")));
        }
    }
    let mut out = Vec::new();
    let mut saw_tgv = false;
    for name in &args.models {
        let alpha = per_model_alpha(&args.alphas, name)?.unwrap_or(args.alpha);
        let is_tgv = name.eq_ignore_ascii_case("tgv");
        saw_tgv |= is_tgv;
        let variants: Vec<Option<DiscretizationVariant>> = match (is_tgv, args.discretization) {
            (true, Discretization::Both) => vec![
                Some(DiscretizationVariant::ConservationPreserving),
                Some(DiscretizationVariant::BrediesReference),
            ],
            (true, Discretization::Bredies) => vec![Some(DiscretizationVariant::BrediesReference)],
            _ => vec![None],
        };
        for v in variants {
            out.push(Job::from_model(name, alpha, betas, args.svf_beta, v)?);
        }
    }
    if args.discretization != Discretization::Conservative && !saw_tgv {
        return Err(CliError::usage("--discretization bredies|both needs tgv in --models"));
    }
    if out.is_empty() {
        return Err(CliError::usage("--models is empty"));
    }
    let mut labels: Vec<_> = out.iter().map(Job::label).collect();
    labels.sort();
    if labels.windows(2).any(|w| w[0] == w[1]) {
        return Err(CliError::usage("--models lists a model twice"));
    }
    Ok(out)
}

pub fn run(args: &CompareArgs) -> Result<(), CliError> {
    let mut prov = Provenance::new("compare");
    let jobs = jobs(args)?;
    let cfg = common::solver_config(&args.solver, &mut prov)?;
    for job in &jobs {
        job.record(&mut prov, &format!("{}.", job.label()));
    }
    let input = common::prepare_input(&args.input, &mut prov)?;
    let truth = input
        .truth
        .as_ref()
        .ok_or_else(|| CliError::usage("compare needs a ground truth: use --synth, --noise-var or --truth"))?;
    common::ensure_dir(&args.out_dir)?;
    prov.set("out_dir", args.out_dir.display());
    let depth = common::bit_depth(args.depth);
    imaging::save_image(&input.noisy, args.out_dir.join("noisy.png"), depth)?;

    let results: Vec<Result<Row, CliError>> = jobs
        .par_iter()
        .map(|job| {
            let start = Instant::now();
            let out = job.run(&input.noisy, &cfg)?;
            let seconds = start.elapsed().as_secs_f64();
            let quality = QualityTriple::measure(&out.u, truth)?;
            Ok(Row {
                job: job.clone(),
                quality,
                iterations: out.iterations,
                converged: out.converged,
                seconds,
                u: out.u,
            })
        })
        .collect();
    let mut rows = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    rows.sort_by(|a, b| b.quality.ssim.total_cmp(&a.quality.ssim));

    // One scale for every difference image so they can be compared by eye.
    let diffs: Vec<ScalarField> = rows.iter().map(|r| r.u.zip_map(truth, |a, b| [(a[0] - b[0]).abs()])).collect();
    let diff_max = diffs.iter().map(|d| d.max_abs()).fold(0.0, f64::max);
    let diff_scale = if diff_max > 0.0 { 1.0 / diff_max } else { 1.0 };
    prov.set("diff_scale", diff_scale);

    let mut csv = format!("{METRICS_HEADER}\n");
    println!("{:<18} {:>7} {:>8} {:>9} {:>9} {:>7} {:>9}", "model", "alpha", "SSIM", "PSNR", "rel", "iters", "converged");
    for (row, diff) in rows.iter().zip(&diffs) {
        let label = row.job.label();
        imaging::save_image(&row.u, args.out_dir.join(format!("{label}.png")), depth)?;
        imaging::save_field(&row.u, args.out_dir.join(format!("{label}.vosf")))?;
        imaging::save_image(&diff.scaled(diff_scale), args.out_dir.join(format!("diff_{label}.png")), depth)?;
        let q = row.quality;
        csv.push_str(&format!(
            "{label},{},{},{},{},{},{},{:.3}\n",
            row.job.alpha(),
            q.ssim,
            q.psnr,
            q.rel_error,
            row.iterations,
            row.converged,
            row.seconds
        ));
        println!(
            "{:<18} {:>7.4} {:>8.4} {:>9.2} {:>9.4} {:>7} {:>9}",
            label,
            row.job.alpha(),
            q.ssim,
            q.psnr,
            q.rel_error,
            row.iterations,
            row.converged
        );
        prov.set(&format!("{label}.iterations"), row.iterations);
        prov.set(&format!("{label}.converged"), row.converged);
        prov.set(&format!("{label}.ssim"), q.ssim);
    }
    let path = args.out_dir.join(METRICS_FILE);
    fs::write(&path, csv).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    prov.write(&args.out_dir.join("provenance.txt"))
}
