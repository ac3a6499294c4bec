use std::fs::File;
use std::io::BufWriter;
use std::str::FromStr;

use vos_core::sweep::{self, Binning, ImageSource, Measure, ZeroPattern};
use vos_core::{NoiseSpec, SweepPlan, SyntheticKind, SyntheticSpec};

use crate::args::{MeasureArg, SweepArgs};
use crate::common;
use crate::error::CliError;
use crate::provenance::Provenance;

pub const HISTOGRAM_FILE: &str = "histogram.csv";

/// `lo:hi:n` or a comma-separated list of edges.
pub fn parse_bins(spec: &str) -> Result<Binning, CliError> {
    let bad = || CliError::usage(format!("--bins expects lo:hi:n or e0,e1,...; got '{spec}'"));
    let parts: Vec<&str> = spec.split(':').collect();
    match parts[..] {
        [lo, hi, n] => Ok(Binning::Uniform {
            lo: lo.trim().parse().map_err(|_| bad())?,
            hi: hi.trim().parse().map_err(|_| bad())?,
            bins: n.trim().parse().map_err(|_| bad())?,
        }),
        [list] => list
            .split(',')
            .map(|e| e.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<Vec<_>, _>>()
            .map(Binning::Edges),
        _ => Err(bad()),
    }
}

fn measure(m: MeasureArg) -> Measure {
    match m {
        MeasureArg::Ssim => Measure::Ssim,
        MeasureArg::Psnr => Measure::Psnr,
        MeasureArg::Rel => Measure::RelError,
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

pub fn run(args: &SweepArgs) -> Result<(), CliError> {
    let mut prov = Provenance::new("sweep");
    let input = &args.input;
    if input.truth.is_some() {
        return Err(CliError::usage("sweep treats --input as the ground truth; --truth is not used"));
    }
    let source = match (&input.input, &input.synth) {
        (Some(p), None) => {
            prov.set("input", p.display());
            ImageSource::File(p.clone())
        }
        (None, Some(kind)) => {
            let kind = SyntheticKind::from_str(kind)?;
            prov.set("synth", kind.cli_name());
            prov.set("size", input.size);
            ImageSource::Synthetic(SyntheticSpec::new(kind, input.size))
        }
        _ => return Err(CliError::usage("give exactly one of --input and --synth")),
    };
    let noise = NoiseSpec::zero_mean(input.noise_var, input.seed)?;
    prov.set("noise_var", input.noise_var);
    prov.set("noise_seed", input.seed);

    let binning = parse_bins(&args.bins)?;
    binning.edges()?;
    let pick = |o: &Option<Vec<f64>>| o.clone().unwrap_or_else(|| args.betas.clone());
    let mut plan = SweepPlan::uniform(args.alphas.clone(), args.betas.clone(), source, noise, args.out_dir.clone());
    plan.beta_grid = [pick(&args.beta1), pick(&args.beta2), pick(&args.beta3), pick(&args.beta4)];
    plan.solver = common::solver_config(&args.solver, &mut prov)?;
    plan.threads = args.threads;
    plan.validate()?;

    prov.set("alphas", join(&plan.alphas));
    for (k, g) in plan.beta_grid.iter().enumerate() {
        prov.set(&format!("beta{}", k + 1), join(g));
    }
    prov.set("threads", args.threads.map_or("auto".to_owned(), |t| t.to_string()));
    prov.set("out_dir", args.out_dir.display());
    prov.set("measure", format!("{:?}", args.measure).to_lowercase());
    prov.set("bins", &args.bins);
    println!("sweep: {} combinations", plan.total_combinations());

    common::ensure_dir(&args.out_dir)?;
    let records = sweep::run_sweep(&plan)?;
    let failed = records.iter().filter(|r| r.failed()).count();
    let m = measure(args.measure);
    let rows = sweep::classify_and_bin(&records, m, &binning)?;
    let hist_path = args.out_dir.join(HISTOGRAM_FILE);
    let file = File::create(&hist_path).map_err(|e| CliError::Io(format!("{}: {e}", hist_path.display())))?;
    sweep::write_histogram_csv(&rows, BufWriter::new(file))?;

    let medians = sweep::median_by_class(&records, m);
    for (zeros, med) in medians.iter().enumerate() {
        let n = records.iter().filter(|r| !r.failed() && ZeroPattern::of(&r.betas()).zeros() == zeros).count();
        match med {
            Some(v) => println!("{zeros} zero weights: {n:>5} runs, median {v:.4}"),
            None => println!("{zeros} zero weights: {n:>5} runs"),
        }
    }
    if failed > 0 {
        log::warn!("{failed} runs diverged and are excluded from the histogram");
    }
    prov.set("runs", records.len());
    prov.set("failed", failed);
    prov.write(&args.out_dir.join("provenance.txt"))
}
