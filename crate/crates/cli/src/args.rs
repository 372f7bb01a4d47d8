use std::path::PathBuf;

use arsrg_core::matching::MatchParams;
use arsrg_core::pipeline::{BuildParams, LeafMode};
use arsrg_core::segmentation::{Connectivity, SegmentationParams};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::CliResult;

#[derive(Parser, Debug)]
#[command(name = "arsrg", version, about = "Region/keypoint image graphs: build, match, retrieve, embed")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build one graph document per input image.
    Build(BuildCmd),
    /// Compare a query graph against a target graph.
    Match(MatchCmd),
    /// Rank the database entries of a manifest for every query entry.
    Retrieve(RetrieveCmd),
    /// Train a descriptor codebook.
    Codebook(CodebookCmd),
    /// Embed every manifest entry as a word histogram.
    Embed(EmbedCmd),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum LeafConfigArg {
    Region,
    RegionGraph,
}

/// Pipeline flags shared by every command that may build graphs from images.
#[derive(Args, Debug, Clone)]
pub struct BuildArgs {
    /// Palette size of the color quantizer.
    #[arg(long, default_value_t = 16)]
    pub colors: usize,
    /// Pixel connectivity for region labeling (4 or 8).
    #[arg(long, default_value_t = 8, value_parser = parse_connectivity)]
    pub connectivity: u8,
    /// Region size threshold in pixels, used for merging and for match filtering.
    #[arg(long, default_value_t = 50)]
    pub min_region_size: usize,
    #[arg(long, value_enum, default_value_t = LeafConfigArg::Region)]
    pub leaf_config: LeafConfigArg,
    /// Leaf proximity threshold in pixels (default: 0.1 x image diagonal).
    #[arg(long)]
    pub tau: Option<f64>,
    /// Resample every image to WxH before processing.
    #[arg(long, value_parser = parse_size)]
    pub resize: Option<(usize, usize)>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn parse_connectivity(s: &str) -> Result<u8, String> {
    match s {
        "4" => Ok(4),
        "8" => Ok(8),
        _ => Err(format!("connectivity must be 4 or 8, got `{s}`")),
    }
}

fn parse_size(s: &str) -> Result<(usize, usize), String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected WxH, got `{s}`"))?;
    let parse = |v: &str| v.trim().parse::<usize>().ok().filter(|&n| n > 0);
    match (parse(w), parse(h)) {
        (Some(w), Some(h)) => Ok((w, h)),
        _ => Err(format!("expected positive WxH, got `{s}`")),
    }
}

impl BuildArgs {
    pub fn to_params(&self) -> CliResult<BuildParams> {
        if let Some(t) = self.tau {
            if !(t > 0.0) {
                return Err(crate::error::CliError::Usage(format!("--tau must be positive, got {t}")));
            }
        }
        Ok(BuildParams {
            segmentation: SegmentationParams {
                num_colors: self.colors,
                connectivity: Connectivity::try_from(self.connectivity)?,
                min_region_px: self.min_region_size,
                seed: self.seed,
            },
            leaf_mode: match self.leaf_config {
                LeafConfigArg::Region => LeafMode::Region,
                LeafConfigArg::RegionGraph => LeafMode::RegionGraph,
            },
            tau: self.tau,
            resize: self.resize,
            ..BuildParams::default()
        })
    }
}

#[derive(Args, Debug)]
pub struct BuildCmd {
    /// Input images (PNG, PGM, PPM).
    pub images: Vec<PathBuf>,
    /// Add every entry of a manifest as an input.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Use keypoints from an ARSRG-KP file instead of the built-in detector.
    #[arg(long)]
    pub keypoints_from: Option<PathBuf>,
    #[command(flatten)]
    pub build: BuildArgs,
}

fn parse_rho(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("not a number: `{s}`"))?;
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("rho must lie in (0, 1], got {v}"))
    }
}

#[derive(Args, Debug)]
pub struct MatchCmd {
    /// Query graph (.arsrg.json) or image.
    pub query: PathBuf,
    /// Target graph (.arsrg.json) or image.
    pub target: PathBuf,
    #[arg(long, default_value_t = 0.7, value_parser = parse_rho)]
    pub rho: f64,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub build: BuildArgs,
}

impl MatchCmd {
    pub fn match_params(&self) -> MatchParams {
        MatchParams {
            rho: self.rho,
            min_region_px: self.build.min_region_size,
            ..MatchParams::default()
        }
    }
}

#[derive(Args, Debug)]
pub struct RetrieveCmd {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, default_value_t = 0.7, value_parser = parse_rho, conflicts_with = "rho_grid")]
    pub rho: f64,
    /// Sweep several rho values; without a value the grid is 0.6,0.7,0.8.
    #[arg(long, num_args = 0..=1, value_delimiter = ',', default_missing_value = "0.6,0.7,0.8", value_parser = parse_rho)]
    pub rho_grid: Option<Vec<f64>>,
    /// Rank cutoff for precision and recall.
    #[arg(long, default_value_t = 10)]
    pub cutoff: usize,
    /// Directory for rankings and summary CSV files.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[command(flatten)]
    pub build: BuildArgs,
}

impl RetrieveCmd {
    pub fn rhos(&self) -> Vec<f64> {
        match &self.rho_grid {
            Some(grid) if !grid.is_empty() => grid.clone(),
            _ => vec![self.rho],
        }
    }
}

#[derive(Args, Debug)]
pub struct CodebookCmd {
    /// Entries with role `train` are used; if there are none, all entries.
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub build: BuildArgs,
}

#[derive(Args, Debug)]
pub struct EmbedCmd {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub codebook: PathBuf,
    /// L1-normalize every histogram.
    #[arg(long)]
    pub normalize: bool,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub build: BuildArgs,
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn size_parsing() {
        assert_eq!(parse_size("64x48"), Ok((64, 48)));
        assert!(parse_size("64").is_err());
        assert!(parse_size("0x5").is_err());
    }

    #[test]
    fn rho_grid_defaults() {
        let cli = Cli::try_parse_from(["arsrg", "retrieve", "--manifest", "m.csv", "--rho-grid"]).unwrap();
        let Command::Retrieve(r) = cli.command else { panic!() };
        assert_eq!(r.rhos(), vec![0.6, 0.7, 0.8]);
        let cli = Cli::try_parse_from(["arsrg", "retrieve", "--manifest", "m.csv"]).unwrap();
        let Command::Retrieve(r) = cli.command else { panic!() };
        assert_eq!(r.rhos(), vec![0.7]);
        let cli = Cli::try_parse_from(["arsrg", "retrieve", "--manifest", "m", "--rho-grid", "0.5,0.9"]).unwrap();
        let Command::Retrieve(r) = cli.command else { panic!() };
        assert_eq!(r.rhos(), vec![0.5, 0.9]);
        assert!(Cli::try_parse_from(["arsrg", "retrieve", "--manifest", "m", "--rho", "1.5"]).is_err());
    }
}
