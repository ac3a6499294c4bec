//! Pieces shared by the subcommands: input preparation, model selection
//! and the uniform result of a solve.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use vos_core::imaging::{self, add_gaussian_noise};
use vos_core::models::{self, ModelName, PresetOverrides};
use vos_core::solver::IterationLog;
use vos_core::{BetaVector, BitDepth, DiscretizationVariant, NoiseSpec, ScalarField, SolverConfig, SyntheticKind, SyntheticSpec};

use crate::args::{Depth, InputArgs, SolverArgs};
use crate::error::CliError;
use crate::provenance::Provenance;

/// CLI-only model name for the exact ROF solver.
pub const ROF: &str = "rof";

pub struct Prepared {
    /// Solver input.
    pub noisy: ScalarField,
    pub truth: Option<ScalarField>,
}

/// Loads or synthesises the input, adds noise and finds the ground truth.
///
/// Synthetic images are their own truth. A file input is the truth when
/// noise is added to it, unless `--truth` names another image.
pub fn prepare_input(args: &InputArgs, prov: &mut Provenance) -> Result<Prepared, CliError> {
    let noise = NoiseSpec::zero_mean(args.noise_var, args.seed)?;
    let (base, synthetic) = match (&args.input, &args.synth) {
        (Some(path), None) => {
            prov.set("input", path.display());
            (load(path)?, false)
        }
        (None, Some(kind)) => {
            let kind = SyntheticKind::from_str(kind)?;
            prov.set("synth", kind.cli_name());
            prov.set("size", args.size);
            (imaging::synthesize(&SyntheticSpec::new(kind, args.size))?, true)
        }
        _ => return Err(CliError::usage("give exactly one of --input and --synth")),
    };
    prov.set("noise_var", args.noise_var);
    prov.set("noise_seed", args.seed);
    prov.set("clamp_noisy", false);
    let noisy = if args.noise_var > 0.0 { add_gaussian_noise(&base, &noise) } else { base.clone() };
    let truth = match &args.truth {
        Some(path) => {
            prov.set("truth", path.display());
            Some(load(path)?)
        }
        None if synthetic || args.noise_var > 0.0 => Some(base),
        None => None,
    };
    if let Some(t) = &truth {
        if t.shape() != noisy.shape() {
            return Err(CliError::Io(format!(
                "ground truth is {}×{} but the input is {}×{}",
                t.height(),
                t.width(),
                noisy.height(),
                noisy.width()
            )));
        }
    }
    Ok(Prepared { noisy, truth })
}

/// Loads an image or raw field, naming the file in I/O errors.
pub fn load(path: &Path) -> Result<ScalarField, CliError> {
    imaging::load_any(path).map_err(|e| match CliError::from(e) {
        CliError::Io(m) => CliError::Io(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn solver_config(args: &SolverArgs, prov: &mut Provenance) -> Result<SolverConfig, CliError> {
    let cfg = SolverConfig::default().with_tolerance(args.tol).with_max_iters(args.max_iters);
    cfg.validate()?;
    prov.set("tol", cfg.tolerance);
    prov.set("max_iters", cfg.max_iters);
    prov.set("norm_seed", cfg.norm_seed);
    prov.set("norm_power_iters", cfg.norm_power_iters);
    Ok(cfg)
}

pub fn bit_depth(d: Depth) -> BitDepth {
    match d {
        Depth::Eight => BitDepth::Eight,
        Depth::Sixteen => BitDepth::Sixteen,
    }
}

pub fn variant_name(v: DiscretizationVariant) -> &'static str {
    match v {
        DiscretizationVariant::ConservationPreserving => "conservative",
        DiscretizationVariant::BrediesReference => "bredies",
    }
}

/// One solve as requested on the command line.
#[derive(Debug, Clone)]
pub enum Job {
    /// Exact TV denoising.
    Rof { alpha: f64 },
    /// The joint operator model with a preset or custom weight vector.
    Vos { model: String, beta: BetaVector },
    /// Direct second-order TGV with a chosen symmetrised gradient.
    Tgv { alpha: f64, variant: DiscretizationVariant },
}

pub struct Outcome {
    pub u: ScalarField,
    pub iterations: usize,
    pub converged: bool,
    pub final_residual: f64,
    pub operator_norm: f64,
    pub log: Vec<IterationLog>,
}

impl Job {
    /// Resolves a model name. `betas` only applies to `vos`.
    pub fn from_model(
        name: &str,
        alpha: f64,
        betas: Option<[f64; 4]>,
        svf_beta: Option<f64>,
        variant: Option<DiscretizationVariant>,
    ) -> Result<Self, CliError> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(CliError::usage(format!("--alpha must be positive, got {alpha}")));
        }
        if name.eq_ignore_ascii_case(ROF) {
            return Ok(Self::Rof { alpha });
        }
        let model = ModelName::from_str(name)?;
        if let (ModelName::TgvSym, Some(variant)) = (model, variant) {
            return Ok(Self::Tgv { alpha, variant });
        }
        let overrides = PresetOverrides {
            alpha: Some(alpha),
            betas: if model == ModelName::VosCustom { betas } else { None },
            svf_beta,
        };
        let beta = models::preset(model, &overrides)?;
        Ok(Self::Vos { model: model.cli_name().to_owned(), beta })
    }

    pub fn label(&self) -> String {
        match self {
            Self::Rof { .. } => ROF.to_owned(),
            Self::Vos { model, .. } => model.clone(),
            Self::Tgv { variant, .. } => format!("tgv-{}", variant_name(*variant)),
        }
    }

    pub fn alpha(&self) -> f64 {
        match self {
            Self::Rof { alpha } | Self::Tgv { alpha, .. } => *alpha,
            Self::Vos { beta, .. } => beta.alpha(),
        }
    }

    pub fn record(&self, prov: &mut Provenance, prefix: &str) {
        prov.set(&format!("{prefix}model"), self.label());
        prov.set(&format!("{prefix}alpha"), self.alpha());
        match self {
            Self::Vos { beta, .. } => {
                let b = beta.betas();
                prov.set(&format!("{prefix}beta"), format!("{},{},{},{}", b[0], b[1], b[2], b[3]));
                prov.set(&format!("{prefix}solver"), "vos");
            }
            Self::Rof { .. } => prov.set(&format!("{prefix}solver"), "rof"),
            Self::Tgv { variant, .. } => {
                prov.set(&format!("{prefix}solver"), "tgv");
                prov.set(&format!("{prefix}discretization"), variant_name(*variant));
            }
        }
    }

    pub fn run(&self, f: &ScalarField, cfg: &SolverConfig) -> Result<Outcome, CliError> {
        Ok(match self {
            Self::Rof { alpha } => {
                let r = models::solve_tv_reference(f, *alpha, cfg)?;
                Outcome {
                    u: r.primal,
                    iterations: r.iterations,
                    converged: r.converged,
                    final_residual: r.final_residual,
                    operator_norm: r.operator_norm,
                    log: r.log,
                }
            }
            Self::Tgv { alpha, variant } => {
                let r = models::solve_tgv(f, *alpha, *variant, cfg)?;
                Outcome {
                    u: r.primal.0,
                    iterations: r.iterations,
                    converged: r.converged,
                    final_residual: r.final_residual,
                    operator_norm: r.operator_norm,
                    log: r.log,
                }
            }
            Self::Vos { beta, .. } => {
                let r = vos_core::solve(f, beta, cfg)?;
                Outcome {
                    u: r.u,
                    iterations: r.iterations,
                    converged: r.converged,
                    final_residual: r.final_residual,
                    operator_norm: r.operator_norm,
                    log: r.log,
                }
            }
        })
    }
}

/// Artefact class expected from a degenerate weight vector.
pub fn artefact_warning(betas: &[f64; 4]) -> Option<&'static str> {
    let nonzero: Vec<usize> = (0..4).filter(|&k| betas[k] > 0.0).collect();
    match nonzero[..] {
        [] => Some("all weights are zero: w = ∇u is free and the data is reproduced unchanged"),
        [0] => Some("only the curl is penalised: w = ∇u has zero curl, so the data is reproduced unchanged"),
        [1] => Some("only the divergence is penalised: expect point artefacts"),
        [2] => Some("only sh1 is penalised: expect stripe artefacts in diagonal directions"),
        [3] => Some("only sh2 is penalised: expect structures parallel to the coordinate axes"),
        _ => None,
    }
}

pub fn parse_betas(values: &[f64]) -> Result<[f64; 4], CliError> {
    <[f64; 4]>::try_from(values).map_err(|_| CliError::usage(format!("--beta needs 4 values, got {}", values.len())))
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}
