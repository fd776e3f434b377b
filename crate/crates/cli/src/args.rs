use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use exfact_core::grid::Stencil;
use exfact_core::units::UnitSystem;
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "exfact", version, about = "Exact factorization of electron-nuclear systems in a uniform magnetic field")]
pub struct Cli {
    /// JSON object whose keys (flag names, `-` or `_`) override the flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Coefficient of the residual connection versus mass ratio or field.
    HarmoniumScan(ScanArgs),
    /// Constancy of A_tot and ε over the nuclear grid.
    Compensate(CompensateArgs),
    /// Closed-form versus numerical Berry curvature of the hydrogen wave-packet.
    Counterexample(CounterexampleArgs),
    /// Residuals of the coupled equations of motion at two resolutions.
    EomResidual(EomArgs),
    /// Factorizes a wavefunction read from a WFN-CSV file.
    EfExtract(ExtractArgs),
    /// Writes a model wavefunction on a product grid as WFN-CSV.
    ExportWfn(ExportArgs),
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CommonArgs {
    /// Output directory.
    #[arg(long, default_value = "exfact-out")]
    pub out: PathBuf,
    /// Seed for randomly sampled check points.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub hbar: f64,
    /// Elementary charge.
    #[arg(long, default_value_t = 1.0)]
    pub e: f64,
    /// Speed of light.
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// Mass unit.
    #[arg(long, default_value_t = 1.0)]
    pub unit_mass: f64,
}

impl CommonArgs {
    pub fn units(&self) -> exfact_core::Result<UnitSystem> {
        UnitSystem::new(self.hbar, self.e, self.c, self.unit_mass)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StencilArg {
    Central2,
    Richardson,
}

impl From<StencilArg> for Stencil {
    fn from(s: StencilArg) -> Self {
        match s {
            StencilArg::Central2 => Stencil::Central2,
            StencilArg::Richardson => Stencil::Richardson,
        }
    }
}

/// Physical parameters of the two-body harmonic atom.
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct HarmoniumArgs {
    /// Nuclear mass M (model default when omitted).
    #[arg(long)]
    pub mass: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub electron_mass: f64,
    #[arg(long, default_value_t = 1.0)]
    pub omega0: f64,
    /// Field strength along z.
    #[arg(long, default_value_t = 1.0)]
    pub b: f64,
    /// Pseudo-momentum K as `x,y,z`.
    #[arg(long, default_value = "0,1,0", allow_hyphen_values = true)]
    pub k: String,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct DecoupledArgs {
    /// Nuclear spring constant of the decoupled-oscillator model.
    #[arg(long, default_value_t = 1.0)]
    pub k_nuclear: f64,
    /// Electronic spring constant of the decoupled-oscillator model.
    #[arg(long, default_value_t = 1.0)]
    pub k_electron: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct GridArgs {
    /// Points per nuclear axis.
    #[arg(long)]
    pub n: Option<usize>,
    /// Points per electronic axis (defaults to `--n` or the model default).
    #[arg(long)]
    pub n_electronic: Option<usize>,
    /// Half-width of the electronic grid.
    #[arg(long)]
    pub extent: Option<f64>,
    /// Half-width of the nuclear grid.
    #[arg(long)]
    pub nuclear_extent: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanModeArg {
    MassRatio,
    Field,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ScanArgs {
    #[arg(long, value_enum, default_value = "mass-ratio")]
    pub mode: ScanModeArg,
    /// Field values in units of m c ω₀ / e: `a,b,c` or `start:stop:count`.
    #[arg(long, default_value = "0.5,1,2,8")]
    pub b: String,
    /// Mass ratios M/m: `a,b,c` or `start:stop:count`.
    #[arg(long, default_value = "1:2000:200")]
    pub ratio: String,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompensateModel {
    Harmonium,
    HarmoniumBo,
    HydrogenPacket,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CompensateArgs {
    #[arg(long, value_enum)]
    pub model: CompensateModel,
    #[command(flatten)]
    #[serde(flatten)]
    pub harmonium: HarmoniumArgs,
    /// Spatial dimension of the grids (default 2 for the harmonium models; the packet is 3D).
    #[arg(long)]
    pub dim: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
    #[arg(long, value_enum, default_value = "richardson")]
    pub stencil: StencilArg,
    /// Constancy tolerance.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Exit 0 when the check fails and 1 when it passes.
    #[arg(long)]
    pub expect_fail: bool,
    /// Wave-packet momentum P₁.
    #[arg(long, default_value = "1,0,0", allow_hyphen_values = true)]
    pub p1: String,
    /// Wave-packet momentum P₂.
    #[arg(long, default_value = "-1,0,0", allow_hyphen_values = true)]
    pub p2: String,
    /// Time at which the wave-packet is factorized.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub t: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CounterexampleArgs {
    #[arg(long, default_value = "1,0,0", allow_hyphen_values = true)]
    pub p1: String,
    #[arg(long, default_value = "-1,0,0", allow_hyphen_values = true)]
    pub p2: String,
    /// Nuclear mass M.
    #[arg(long, default_value_t = 1836.15267343)]
    pub mass: f64,
    #[arg(long, default_value_t = 1.0)]
    pub electron_mass: f64,
    /// Energy of the 1s state (hydrogenic when omitted).
    #[arg(long, allow_hyphen_values = true)]
    pub e1: Option<f64>,
    /// Energy of the 2p state (hydrogenic when omitted).
    #[arg(long, allow_hyphen_values = true)]
    pub e2: Option<f64>,
    /// R_x samples: `a,b,c` or `start:stop:count`.
    #[arg(long, default_value = "-3:3:13", allow_hyphen_values = true)]
    pub rx: String,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub ry: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub rz: f64,
    /// Time samples: `a,b,c` or `start:stop:count`.
    #[arg(long, default_value = "0:20:5", allow_hyphen_values = true)]
    pub t: String,
    /// Step of the numerical curl.
    #[arg(long, default_value_t = 1e-3)]
    pub h: f64,
    /// Largest accepted |closed form - numerical curl|.
    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,
    /// Use the general closed form, which does not need P₁ - P₂ along x.
    #[arg(long)]
    pub general_curl: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EomModel {
    Harmonium,
    Decoupled,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct EomArgs {
    #[arg(long, value_enum, default_value = "harmonium")]
    pub model: EomModel,
    #[command(flatten)]
    #[serde(flatten)]
    pub harmonium: HarmoniumArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub decoupled: DecoupledArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
    #[arg(long, value_enum)]
    pub stencil: Option<StencilArg>,
    /// Adds δ·R_x to ε before evaluating the residuals.
    #[arg(long, allow_hyphen_values = true)]
    pub corrupt_epsilon: Option<f64>,
    /// Also evaluates the pair after χ → e^{iθ}χ with
    /// `θ = c_x X + c_y Y + c_xx X² + c_xy XY + c_yy Y²`, given as `c_x,c_y,c_xx,c_xy,c_yy`.
    #[arg(long, allow_hyphen_values = true)]
    pub gauge: Option<String>,
    /// Accepted window of the refinement ratio.
    #[arg(long, default_value = "3,5")]
    pub ratio_window: String,
    /// Largest accepted residual for the decoupled model.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HamiltonianArg {
    None,
    Harmonium,
    Decoupled,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ExtractArgs {
    /// WFN-CSV file on a product grid (`# nuclear_dims` header required).
    #[arg(long)]
    pub input: PathBuf,
    /// Electronic point whose phase fixes the gauge of χ.
    #[arg(long, default_value = "0,0,0", allow_hyphen_values = true)]
    pub r_ref: String,
    /// Node threshold for |χ| relative to max |χ|.
    #[arg(long)]
    pub chi_floor: Option<f64>,
    #[arg(long, value_enum, default_value = "central2")]
    pub stencil: StencilArg,
    /// Electronic Hamiltonian used for ε; none skips ε.
    #[arg(long, value_enum, default_value = "none")]
    pub hamiltonian: HamiltonianArg,
    #[command(flatten)]
    #[serde(flatten)]
    pub harmonium: HarmoniumArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub decoupled: DecoupledArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExportModel {
    Harmonium,
    HarmoniumBo,
    Decoupled,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ExportArgs {
    #[arg(long, value_enum)]
    pub model: ExportModel,
    #[command(flatten)]
    #[serde(flatten)]
    pub harmonium: HarmoniumArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub decoupled: DecoupledArgs,
    /// Spatial dimension of each grid.
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
    /// Name of the written file inside the output directory.
    #[arg(long, default_value = "psi.csv")]
    pub file: String,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
}
