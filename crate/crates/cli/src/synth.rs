use std::str::FromStr;

use vos_core::imaging::{self, add_gaussian_noise};
use vos_core::{NoiseSpec, SyntheticKind, SyntheticSpec};

use crate::args::{Depth, SynthArgs};
use crate::common;
use crate::error::CliError;
use crate::provenance::{sidecar_path, Provenance};

pub fn run(args: &SynthArgs) -> Result<(), CliError> {
    let mut prov = Provenance::new("synth");
    let kind = SyntheticKind::from_str(&args.kind)?;
    let noise = NoiseSpec::zero_mean(args.noise_var, args.seed)?;
    let clean = imaging::synthesize(&SyntheticSpec::new(kind, args.size))?;
    let image = if args.noise_var > 0.0 { add_gaussian_noise(&clean, &noise) } else { clean };
    prov.set("kind", kind.cli_name());
    prov.set("size", args.size);
    prov.set("noise_var", args.noise_var);
    prov.set("noise_seed", args.seed);

    imaging::save_image(&image, &args.output, common::bit_depth(args.depth))?;
    prov.set("output", args.output.display());
    prov.set("depth", if args.depth == Depth::Eight { 8 } else { 16 });
    if let Some(path) = &args.raw {
        imaging::save_field(&image, path)?;
        prov.set("raw", path.display());
    }
    let (lo, hi) = image.min_max();
    println!("{}: {}×{}, range [{lo:.4}, {hi:.4}]", kind.cli_name(), args.size, args.size);
    prov.write(&sidecar_path(&args.output))
}
