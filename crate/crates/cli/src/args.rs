use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use crm_core::angmom::HalfInt;
use crm_core::basis::Parity;

#[derive(Debug, Parser)]
#[command(
    name = "crm",
    version,
    about = "Spin-rotational wavepacket dynamics of kicked diatomic molecules"
)]
pub struct Cli {
    /// Preset name or path to a molecule TOML file.
    #[arg(long, global = true, default_value = "krb", value_name = "PRESET|PATH")]
    pub molecule: String,

    /// Highest rotational quantum number kept in the basis.
    #[arg(long, global = true, default_value_t = 40)]
    pub nmax: u32,

    /// Worker threads for propagation (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Directory that relative output paths are resolved against.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,

    /// Floating-point precision of the Hamiltonian, eigensolver and propagation.
    #[arg(long, global = true, value_enum, default_value_t = Precision::F64)]
    pub precision: Precision,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Precision {
    F64,
    F32,
}

impl Precision {
    pub fn name(self) -> &'static str {
        match self {
            Precision::F64 => "f64",
            Precision::F32 => "f32",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ParityArg {
    Even,
    Odd,
}

impl From<ParityArg> for Parity {
    fn from(p: ParityArg) -> Self {
        match p {
            ParityArg::Even => Parity::Even,
            ParityArg::Odd => Parity::Odd,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Eigenvalues of one symmetry block.
    Levels(LevelsArgs),
    /// Rotational amplitudes after an impulsive kick.
    Kick(KickArgs),
    /// Time series of observables after the kick.
    Evolve(EvolveArgs),
    /// Observables at fixed probe times for a list of field strengths.
    SweepField(SweepArgs),
    /// Render columns of a CSV file as an SVG line plot.
    Plot(PlotArgs),
    /// Check the molecule's constants and the quadrupole ratio diagnostic.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct LevelsArgs {
    /// Total projection M_F, e.g. -7/2 (defaults to the kicked ground state's block).
    #[arg(long = "m-f", allow_hyphen_values = true)]
    pub m_f: Option<HalfInt>,

    #[arg(long, value_enum, default_value_t = ParityArg::Even)]
    pub parity: ParityArg,

    /// Magnetic field in gauss.
    #[arg(long = "B-gauss", default_value_t = 0.0)]
    pub b_gauss: f64,

    /// Write H_total as row-major little-endian f64.
    #[arg(long)]
    pub dump_hamiltonian: Option<PathBuf>,

    /// CSV output file (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct KickArgs {
    /// Dimensionless pulse strength.
    #[arg(long = "P")]
    pub p: f64,

    /// Rotor truncation used for the kick (defaults to nmax + 20).
    #[arg(long)]
    pub n_kick: Option<u32>,

    /// CSV output file (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SpinArgs {
    /// Initial projection of nucleus 1 (defaults to -I1).
    #[arg(long = "m-i1", allow_hyphen_values = true)]
    pub m_i1: Option<HalfInt>,

    /// Initial projection of nucleus 2 (defaults to the smallest non-negative value).
    #[arg(long = "m-i2", allow_hyphen_values = true)]
    pub m_i2: Option<HalfInt>,
}

#[derive(Debug, Args)]
pub struct EvolveArgs {
    /// Dimensionless pulse strength.
    #[arg(long = "P")]
    pub p: f64,

    /// Magnetic field in gauss.
    #[arg(long = "B-gauss", default_value_t = 0.0)]
    pub b_gauss: f64,

    /// Window start in units of t_R.
    #[arg(long, default_value_t = 0.0)]
    pub window_start_tr: f64,

    /// Window length in units of t_R.
    #[arg(long, default_value_t = 20.0)]
    pub window_length_tr: f64,

    #[arg(long, default_value_t = 2000)]
    pub samples: usize,

    /// Space the window samples logarithmically (start must be positive).
    #[arg(long)]
    pub log_spaced: bool,

    /// Explicit sample times in t_R, comma separated; overrides the window.
    #[arg(long, value_delimiter = ',')]
    pub times_tr: Option<Vec<f64>>,

    /// Comma-separated list from alignment, purity, entropy, mean_N, populations.
    #[arg(long, default_value = "alignment,purity,entropy,mean_N")]
    pub observables: String,

    #[command(flatten)]
    pub spins: SpinArgs,

    /// Write H_total as row-major little-endian f64.
    #[arg(long)]
    pub dump_hamiltonian: Option<PathBuf>,

    #[arg(long, default_value = "evolve.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Dimensionless pulse strength.
    #[arg(long = "P")]
    pub p: f64,

    /// Comma-separated field strengths in gauss.
    #[arg(long = "B-list", allow_hyphen_values = true)]
    pub b_list: String,

    /// Explicit probe times in t_R, comma separated; overrides the log grid.
    #[arg(long, value_delimiter = ',')]
    pub probe_times_tr: Option<Vec<f64>>,

    #[arg(long, default_value_t = 1.0)]
    pub probe_first_tr: f64,

    #[arg(long, default_value_t = 2e6)]
    pub probe_last_tr: f64,

    #[arg(long, default_value_t = 50)]
    pub probe_samples: usize,

    /// Comma-separated list from alignment, purity, entropy, mean_N, populations.
    #[arg(long, default_value = "alignment,purity,entropy,mean_N")]
    pub observables: String,

    #[command(flatten)]
    pub spins: SpinArgs,

    #[arg(long, default_value = "sweep.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// CSV file written by evolve or sweep-field.
    #[arg(long)]
    pub input: PathBuf,

    #[arg(long, default_value = "t_over_tR")]
    pub x: String,

    /// Column(s) to draw, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub y: Vec<String>,

    /// Draw one curve per distinct value of this column (e.g. B_gauss).
    #[arg(long)]
    pub group_by: Option<String>,

    #[arg(long)]
    pub x_label: Option<String>,

    #[arg(long)]
    pub y_label: Option<String>,

    #[arg(long)]
    pub title: Option<String>,

    #[arg(long)]
    pub log_x: bool,

    #[arg(long, default_value_t = 900)]
    pub width: u32,

    #[arg(long, default_value_t = 540)]
    pub height: u32,

    #[arg(long, default_value = "plot.svg")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Check every built-in preset instead of --molecule.
    #[arg(long)]
    pub all: bool,

    /// Exit with status 2 when the ratio diagnostic is flagged.
    #[arg(long)]
    pub strict: bool,
}
