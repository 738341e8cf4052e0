use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "spirallab",
    version,
    about = "Numerical checks for spirallike domains, polynomial hulls, Loewner chains and composition operators"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Spectral stability of the equilibrium at 0, with sampled decay.
    Stability(StabilityArgs),
    /// Integrate one trajectory of the field.
    Flow(FlowArgs),
    /// Strict spirallikeness of the domain with respect to the field.
    Spirallike(SpirallikeArgs),
    /// Polynomial-hull probes against a boundary sample of the domain.
    Hull(HullArgs),
    /// Loewner chain built from the field and the maps f, psi.
    Loewner(LoewnerArgs),
    /// Orbit experiments for an automorphism of the domain.
    Operators(OperatorsArgs),
    /// Built-in domains and fields.
    #[command(subcommand)]
    Catalog(CatalogCommand),
}

#[derive(Debug, Subcommand)]
pub enum CatalogCommand {
    /// Print the names of all built-in entries.
    List,
    /// Print one entry as a spec file.
    Show {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Options shared by every checking subcommand.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Spec JSON with "domain", "field" and "maps".
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Built-in entry, e.g. "hartogs-spiral(5)" or "ball(2)".
    #[arg(long)]
    pub catalog: Option<String>,
    /// Field components separated by ';', overriding --spec or --catalog.
    #[arg(long, allow_hyphen_values = true)]
    pub field: Option<String>,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long)]
    pub tmax: Option<f64>,
    /// Comma-separated times; defaults to tmax·10^-k for k = 0..3.
    #[arg(long)]
    pub tgrid: Option<String>,
    #[arg(long, default_value_t = 8)]
    pub degree: u32,
    #[arg(long, default_value_t = 2000)]
    pub budget: usize,
    /// Report path; the report goes to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Plot plane as two real coordinates, e.g. "re1,re2" or "re1,im1".
    #[arg(long)]
    pub proj: Option<String>,
    /// Record wall-clock time in the report.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Clone, Args)]
pub struct StabilityArgs {
    #[command(flatten)]
    pub common: Common,
    /// Radius of the ball the decay starts are drawn from.
    #[arg(long, default_value_t = 0.5)]
    pub radius: f64,
}

#[derive(Debug, Clone, Args)]
pub struct FlowArgs {
    #[command(flatten)]
    pub common: Common,
    /// Start point, e.g. "1,0.2" or "0.5+i, 0".
    #[arg(long, allow_hyphen_values = true)]
    pub point: String,
}

#[derive(Debug, Clone, Args)]
pub struct SpirallikeArgs {
    #[command(flatten)]
    pub common: Common,
    /// Also require strong convexity of the boundary sample.
    #[arg(long)]
    pub convexity: bool,
}

#[derive(Debug, Clone, Args)]
pub struct HullArgs {
    #[command(flatten)]
    pub common: Common,
    /// Query point; repeat the flag for several.
    #[arg(long, allow_hyphen_values = true)]
    pub probe: Vec<String>,
    /// Also run the neighbourhood-basis check with U = SCALE·domain.
    #[arg(long, value_name = "SCALE")]
    pub runge: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct LoewnerArgs {
    #[command(flatten)]
    pub common: Common,
    /// Neighbourhood U = SCALE·domain for the filtering window.
    #[arg(long, default_value_t = 1.5)]
    pub u_scale: f64,
    /// Points whose absorption time into f(D) is measured.
    #[arg(long, allow_hyphen_values = true)]
    pub probe: Vec<String>,
    /// Horizon for absorption times.
    #[arg(long, default_value_t = 20.0)]
    pub tcap: f64,
}

#[derive(Debug, Clone, Args)]
pub struct OperatorsArgs {
    #[command(flatten)]
    pub common: Common,
    /// Built-in disc automorphism ("mobius(a)", "rotation(theta)",
    /// "identity"); ignored when the spec file has maps "tau" and "tau_inv".
    #[arg(long, default_value = "mobius(0.5)")]
    pub auto: String,
    /// Target g, components separated by ';'.
    #[arg(long, allow_hyphen_values = true)]
    pub g: Option<String>,
    /// Target h, components separated by ';'.
    #[arg(long, allow_hyphen_values = true)]
    pub h: Option<String>,
    #[arg(long, default_value_t = 1e-3)]
    pub eps: f64,
    #[arg(long, default_value_t = 30)]
    pub jmax: usize,
    /// H = K = RADIUS·domain for the divergence check.
    #[arg(long, default_value_t = 0.9)]
    pub div_radius: f64,
    /// K = RADIUS·domain for translation and transitivity.
    #[arg(long, default_value_t = 0.3)]
    pub k_radius: f64,
    /// Degree cap for the polynomial fit in the transitivity search.
    #[arg(long, default_value_t = 20)]
    pub fit_degree: u32,
    /// Two points whose Carathéodory lower bound is reported.
    #[arg(long, allow_hyphen_values = true)]
    pub probe: Vec<String>,
}
