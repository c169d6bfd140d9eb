use std::path::PathBuf;

use clap::Args;
use inae_core::dataset::write_csv_file;
use inae_core::{corrupt, gen_two_moons, CorruptionKind, CorruptionSpec};

use crate::error::{CliError, CliResult};

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct GenArgs {
    /// Samples per moon.
    #[arg(long)]
    pub moons: usize,
    /// Ambient dimension the 2-D moons are embedded in.
    #[arg(long, default_value_t = 9)]
    pub dim: usize,
    #[arg(long, default_value_t = 0.1)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV: one sample per row, label in the last column.
    #[arg(short, long)]
    pub output: PathBuf,
    /// Write corrupted copies instead of the clean samples.
    #[arg(long, value_parser = parse_kind)]
    pub corruption: Option<CorruptionKind>,
    #[arg(long, default_value_t = 0.1)]
    pub level: f64,
    #[arg(long, default_value_t = 1)]
    pub copies: usize,
}

fn parse_kind(s: &str) -> Result<CorruptionKind, String> {
    match s {
        "gaussian" => Ok(CorruptionKind::Gaussian),
        "masking" => Ok(CorruptionKind::Masking),
        "salt_pepper" | "salt-pepper" => Ok(CorruptionKind::SaltPepper),
        other => Err(format!("unknown corruption {other:?} (gaussian, masking, salt_pepper)")),
    }
}

pub fn run(args: &GenArgs) -> CliResult<()> {
    let mut ds = gen_two_moons(args.moons, args.dim, args.noise, args.seed)?;
    if let Some(kind) = args.corruption {
        let spec = CorruptionSpec {
            kind,
            level: args.level,
            seed: args.seed,
        };
        ds = corrupt(&ds, &spec, args.copies)?;
    }
    write_csv_file(&ds, &args.output).map_err(|e| match e {
        inae_core::InaeError::Io(io) => {
            CliError::Usage(format!("cannot write {}: {io}", args.output.display()))
        }
        other => other.into(),
    })?;
    let counts = ds
        .class_counts()
        .iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join(",");
    println!("n={} D={} classes=[{counts}]", ds.len(), ds.feature_dim());
    Ok(())
}
