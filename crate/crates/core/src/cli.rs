//! Batch runner: a JSON experiment description in, a CSV table or a
//! verification report out.
//!
//! Exit codes: 0 when everything ran and passed, 1 when a verification
//! check failed, 2 for malformed input or a model error.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::assembly::{
    assemble_box, assemble_coupled, assemble_separating, decoupling_check, hermiticity_defect,
    projection_commutator_norm, HamiltonianMatrix,
};
use crate::bc::{CouplingSpec, PointCoupling, SeparatedBc, SideCondition};
use crate::distributional::{in_domain, BoundaryPotentialSpec, PotentialSpec};
use crate::dynamics::{evolve_dofs, gaussian_packet};
use crate::error::Error;
use crate::extensions::{classify, deficiency_report, EndStatus, ExtensionClass};
use crate::grid::{Block, Decomposition, GammaPoint, Region, Side};
use crate::scalar::C;
use crate::spectral::{eigensolve, reference_spectrum, EndCondition, Support};

#[derive(Debug, Parser)]
#[command(name = "confine", version, about = "Confining Hamiltonians on a discretized interval")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Lowest eigenvalues with block labels and analytic references.
    Spectrum(Paths),
    /// Crank–Nicolson trajectory of the configured initial state.
    Evolve(Paths),
    /// Domain, decoupling, Hermiticity and commutator checks.
    Verify(Paths),
    /// Deficiency indices per subdomain component.
    Deficiency(Paths),
}

#[derive(Debug, Args)]
pub struct Paths {
    /// JSON experiment description.
    pub config: PathBuf,
    /// Output CSV path.
    pub output: PathBuf,
}

impl Command {
    pub fn paths(&self) -> &Paths {
        match self {
            Command::Spectrum(p) | Command::Evolve(p) | Command::Verify(p) | Command::Deficiency(p) => p,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("{0}")]
    Model(#[from] Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
}

// ---------------------------------------------------------------- config

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(rename = "box")]
    pub domain: BoxConfig,
    pub omega: OmegaConfig,
    #[serde(default)]
    pub potential: PotentialConfig,
    #[serde(default)]
    pub bc: Option<BcConfig>,
    #[serde(default)]
    pub coupling: Option<CouplingConfig>,
    #[serde(default)]
    pub evolve: Option<EvolveConfig>,
    #[serde(default)]
    pub spectrum: Option<SpectrumConfig>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxConfig {
    #[serde(rename = "L")]
    pub length: f64,
    #[serde(rename = "N")]
    pub cells: usize,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OmegaConfig {
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialConfig {
    #[default]
    Zero,
    Constant { value: f64 },
    Harmonic { omega: f64, x0: f64 },
    Table { values: Vec<f64> },
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SideConfig {
    Dirichlet,
    Neumann,
    Robin(f64),
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointBcConfig {
    pub side1: SideConfig,
    pub side2: SideConfig,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BcConfig {
    pub point_a: PointBcConfig,
    pub point_b: PointBcConfig,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointCouplingConfig {
    Transparent,
    Delta(f64),
    DeltaPrime(f64),
    Separated(PointBcConfig),
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingConfig {
    pub point_a: PointCouplingConfig,
    pub point_b: PointCouplingConfig,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveConfig {
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default)]
    pub initial: InitialConfig,
}

fn default_steps() -> usize {
    1000
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    Gaussian {
        #[serde(default)]
        x0: Option<f64>,
        #[serde(default = "default_sigma")]
        sigma: f64,
        #[serde(default = "default_k0")]
        k0: f64,
    },
    Eigenstate {
        #[serde(default)]
        index: usize,
    },
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig::Gaussian { x0: None, sigma: default_sigma(), k0: default_k0() }
    }
}

fn default_sigma() -> f64 {
    0.05
}

fn default_k0() -> f64 {
    20.0
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    #[serde(default = "default_count")]
    pub count: usize,
}

fn default_count() -> usize {
    10
}

fn side(c: SideConfig) -> SideCondition<f64> {
    match c {
        SideConfig::Dirichlet => SideCondition::Dirichlet,
        SideConfig::Neumann => SideCondition::Neumann,
        SideConfig::Robin(f) => SideCondition::Robin(f),
    }
}

fn point_bc(p: PointBcConfig) -> (SideCondition<f64>, SideCondition<f64>) {
    (side(p.side1), side(p.side2))
}

fn point_coupling(p: PointCouplingConfig) -> PointCoupling<f64> {
    match p {
        PointCouplingConfig::Transparent => PointCoupling::Transparent,
        PointCouplingConfig::Delta(alpha) => PointCoupling::Delta(alpha),
        PointCouplingConfig::DeltaPrime(beta) => PointCoupling::DeltaPrime(beta),
        PointCouplingConfig::Separated(s) => {
            let (side1, side2) = point_bc(s);
            PointCoupling::Separated { side1, side2 }
        }
    }
}

/// A validated experiment.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub dec: Decomposition<f64>,
    pub potential: PotentialSpec<f64>,
    pub coupling: CouplingSpec<f64>,
    pub config: Config,
}

impl Experiment {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: Config = serde_path_to_error::deserialize(de).map_err(|e| CliError::Config {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        Self::from_config(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
        Self::from_json(&text)
    }

    pub fn from_config(config: Config) -> Result<Self, CliError> {
        let dec = Decomposition::new(config.domain.length, config.domain.cells, config.omega.a, config.omega.b)?;
        let potential = match &config.potential {
            PotentialConfig::Zero => PotentialSpec::Zero,
            PotentialConfig::Constant { value } => PotentialSpec::Constant(*value),
            PotentialConfig::Harmonic { omega, x0 } => PotentialSpec::Harmonic { omega: *omega, center: *x0 },
            PotentialConfig::Table { values } => PotentialSpec::Table(values.clone()),
        };
        potential.validate(&dec)?;
        let coupling = match (&config.bc, &config.coupling) {
            (Some(bc), None) => {
                CouplingSpec::separated(&SeparatedBc::new(point_bc(bc.point_a), point_bc(bc.point_b)))
            }
            (None, Some(c)) => CouplingSpec::new(point_coupling(c.point_a), point_coupling(c.point_b)),
            _ => {
                return Err(CliError::Config {
                    path: ".".into(),
                    message: "exactly one of `bc` and `coupling` is required".into(),
                })
            }
        };
        coupling.validate()?;
        Ok(Experiment { dec, potential, coupling, config })
    }

    pub fn assemble(&self) -> Result<HamiltonianMatrix<f64>, Error> {
        match self.coupling.as_separated() {
            Some(bc) => assemble_separating(&self.dec, &self.potential, &bc),
            None => assemble_coupled(&self.dec, &self.potential, &self.coupling),
        }
    }
}

// ---------------------------------------------------------------- output

/// C `%.17g` formatting: 17 significant digits, trailing zeros removed.
pub fn fmt_g17(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{x:.16e}");
    let (mant, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if !(-4..17).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim(mant), exp.abs())
    } else {
        trim(&format!("{x:.*}", (16 - exp) as usize))
    }
}

fn write_output(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io { path: path.into(), source })
}

// ---------------------------------------------------------------- spectrum

fn end(c: SideCondition<f64>) -> EndCondition {
    match c {
        SideCondition::Dirichlet => EndCondition::Dirichlet,
        SideCondition::Neumann => EndCondition::Neumann,
        SideCondition::Robin(f) => EndCondition::Robin(f),
    }
}

/// Analytic levels of one block of a separating operator with a constant
/// potential, or of the transparent operator in special cases.
fn references(exp: &Experiment, support: Support, count: usize) -> Result<Option<Vec<f64>>, Error> {
    let shift = match exp.potential {
        PotentialSpec::Zero => 0.0,
        PotentialSpec::Constant(c) => c,
        PotentialSpec::Harmonic { omega, .. } => {
            let transparent = GammaPoint::ALL.iter().all(|p| exp.coupling.at(*p) == PointCoupling::Transparent);
            if transparent && support == Support::Mixed {
                return Ok(Some((0..count).map(|n| omega.abs() * (2.0 * n as f64 + 1.0)).collect()));
            }
            return Ok(None);
        }
        PotentialSpec::Table(_) => return Ok(None),
    };
    let d = &exp.dec;
    let levels = match (exp.coupling.as_separated(), support) {
        (Some(bc), Support::Block(Block::Interior)) => reference_spectrum(
            end(bc.at(GammaPoint::A, Side::One)),
            end(bc.at(GammaPoint::B, Side::One)),
            d.b() - d.a(),
            count,
        )?,
        (Some(bc), Support::Block(Block::ExteriorLeft)) => {
            reference_spectrum(EndCondition::Dirichlet, end(bc.at(GammaPoint::A, Side::Two)), d.a(), count)?
        }
        (Some(bc), Support::Block(Block::ExteriorRight)) => reference_spectrum(
            end(bc.at(GammaPoint::B, Side::Two)),
            EndCondition::Dirichlet,
            d.length() - d.b(),
            count,
        )?,
        (None, Support::Mixed)
            if GammaPoint::ALL.iter().all(|p| exp.coupling.at(*p) == PointCoupling::Transparent) =>
        {
            reference_spectrum(EndCondition::Dirichlet, EndCondition::Dirichlet, d.length(), count)?
        }
        _ => return Ok(None),
    };
    Ok(Some(levels.into_iter().map(|l| l + shift).collect()))
}

pub fn spectrum_csv(exp: &Experiment) -> Result<String, Error> {
    let hm = exp.assemble()?;
    let count = exp.config.spectrum.map_or(default_count(), |s| s.count).min(hm.dim());
    let res = eigensolve(&hm, count)?;
    let mut seen: Vec<(Support, usize)> = Vec::new();
    let mut out = String::from("n,lambda,block,reference,rel_error\n");
    for (n, (lambda, support)) in res.eigenvalues.iter().zip(&res.support).enumerate() {
        let k = match seen.iter_mut().find(|(s, _)| s == support) {
            Some((_, c)) => {
                *c += 1;
                *c - 1
            }
            None => {
                seen.push((*support, 1));
                0
            }
        };
        let reference = references(exp, *support, k + 1)?.and_then(|r| r.get(k).copied());
        let (rs, es) = match reference {
            Some(r) => {
                let err = if r == 0.0 { lambda.abs() } else { (lambda - r).abs() / r.abs() };
                (fmt_g17(r), fmt_g17(err))
            }
            None => (String::new(), String::new()),
        };
        let _ = writeln!(out, "{},{},{},{rs},{es}", n + 1, fmt_g17(*lambda), support.label());
    }
    Ok(out)
}

// ---------------------------------------------------------------- evolve

pub fn evolve_csv(exp: &Experiment) -> Result<String, CliError> {
    let ev = exp.config.evolve.ok_or_else(|| CliError::Config {
        path: "evolve".into(),
        message: "the evolve subcommand needs an `evolve` section".into(),
    })?;
    let d = &exp.dec;
    let hm = exp.assemble()?;
    let v0 = match ev.initial {
        InitialConfig::Gaussian { x0, sigma, k0 } => {
            let x0 = x0.unwrap_or_else(|| {
                let x = d.b() - 0.2;
                if x > d.a() { x } else { 0.5 * (d.a() + d.b()) }
            });
            hm.gather(&gaussian_packet(d, x0, sigma, k0, Region::Omega1)?)?
        }
        InitialConfig::Eigenstate { index } => {
            if index >= hm.dim() {
                return Err(CliError::Config {
                    path: "evolve.initial.index".into(),
                    message: format!("index {index} exceeds the operator dimension {}", hm.dim()),
                });
            }
            eigensolve(&hm, index + 1)?.eigenvectors.swap_remove(index)
        }
    };
    let dt = ev.dt.unwrap_or(1e-4 * (d.b() - d.a()) * (d.b() - d.a()));
    if !(dt > 0.0) {
        return Err(CliError::Config { path: "evolve.dt".into(), message: format!("must be positive, got {dt}") });
    }
    let tr = evolve_dofs(&hm, &v0, dt, ev.steps)?;
    let mut out = String::from("t,norm,p_omega,energy\n");
    for r in &tr.records {
        let _ = writeln!(out, "{},{},{},{}", fmt_g17(r.t), fmt_g17(r.norm), fmt_g17(r.p_omega), fmt_g17(r.energy));
    }
    Ok(out)
}

// ---------------------------------------------------------------- verify

/// Number of random domain elements drawn by `verify`.
pub const VERIFY_SAMPLES: usize = 20;

struct Report {
    text: String,
    failed: bool,
}

impl Report {
    fn new() -> Self {
        Report { text: String::from("check,value,status\n"), failed: false }
    }

    fn line(&mut self, check: &str, value: f64, pass: bool) {
        self.failed |= !pass;
        let _ = writeln!(self.text, "{check},{},{}", fmt_g17(value), if pass { "PASS" } else { "FAIL" });
    }
}

pub fn verify_report(exp: &Experiment) -> Result<(String, Outcome), Error> {
    let d = &exp.dec;
    let hm = exp.assemble()?;
    let mut rep = Report::new();

    rep.line("hermiticity_defect", hermiticity_defect(&hm), hermiticity_defect(&hm) <= 1e-12);

    let comm = projection_commutator_norm(&hm);
    let class = classify(&exp.coupling);
    let ih2 = 1.0 / (d.h() * d.h());
    let strong = GammaPoint::ALL
        .iter()
        .any(|p| matches!(exp.coupling.at(*p), PointCoupling::Transparent | PointCoupling::Delta(_)));
    let comm_ok = match class {
        ExtensionClass::Separating => comm == 0.0,
        ExtensionClass::Transversal => comm > 0.0 && (!strong || comm >= ih2),
    };
    rep.line("projection_commutator", comm, comm_ok);

    match exp.coupling.as_separated() {
        Some(bc) => {
            let spec = BoundaryPotentialSpec::from_separated(&bc);
            let mut rng = ChaCha8Rng::seed_from_u64(exp.config.seed);
            let mut singular = 0.0f64;
            let mut action = 0.0f64;
            let mut rejected = f64::INFINITY;
            for _ in 0..VERIFY_SAMPLES {
                let psi = bc.sample_member(d, &mut rng)?;
                let c = decoupling_check(d, &exp.potential, &bc, &hm, &psi)?;
                singular = singular.max(c.singular_relative);
                action = action.max(c.action_relative);
                for p in GammaPoint::ALL {
                    for s in Side::ALL {
                        let mut bad = psi.clone();
                        let (k, _) = d.gamma_local(p, s);
                        bad.block_mut(d.block_at(p, s))[k] += C::new(1.0, 0.0);
                        let check = in_domain(d, &bad, &exp.potential, &spec, 1e-10)?;
                        rejected = rejected.min(check.relative_singular);
                    }
                }
            }
            rep.line("domain_singular_max", singular, singular <= 1e-10);
            rep.line("decoupling_action_max", action, action <= 1e-12);
            rep.line("domain_rejection_min", rejected, rejected > 1e-10);

            let res = eigensolve(&hm, hm.dim().min(6))?;
            let cross = res
                .block_mass
                .iter()
                .map(|m| {
                    let total: f64 = m.iter().sum();
                    let top = m.iter().fold(0.0f64, |a, x| a.max(*x));
                    (total - top) / total
                })
                .fold(0.0f64, f64::max);
            rep.line("eigenvector_cross_block_mass", cross, cross <= 1e-12);
        }
        None => {
            if GammaPoint::ALL.iter().all(|p| exp.coupling.at(*p) == PointCoupling::Transparent) {
                let b = assemble_box(d, &exp.potential)?;
                let same = b.matrix() == hm.matrix() && b.weights() == hm.weights();
                let diff = b.matrix().diag.iter().zip(&hm.matrix().diag).fold(0.0f64, |m, (x, y)| m.max((x - y).norm()));
                rep.line("box_identity", diff, same);
            }
        }
    }
    let outcome = if rep.failed { Outcome::Fail } else { Outcome::Pass };
    Ok((rep.text, outcome))
}

// ---------------------------------------------------------------- deficiency

pub fn deficiency_csv(exp: &Experiment) -> Result<(String, Outcome), Error> {
    let r = deficiency_report(&exp.dec, &exp.potential)?;
    let status = |s: EndStatus| match s {
        EndStatus::Fixed => "fixed",
        EndStatus::Free => "free",
    };
    let mut out = String::from("component,first,last,lower,upper,m_plus,m_minus\n");
    for (b, c, d) in &r.components {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            b.label(),
            c.first,
            c.last,
            status(c.lower),
            status(c.upper),
            d.m_plus,
            d.m_minus
        );
    }
    let _ = writeln!(out, "omega2,,,,,{},{}", r.omega2.0, r.omega2.1);
    let _ = writeln!(out, "total,,,,,{},{}", r.total.0, r.total.1);
    let outcome = if r.sum_rule_holds() { Outcome::Pass } else { Outcome::Fail };
    Ok((out, outcome))
}

// ---------------------------------------------------------------- entry

pub fn run(command: &Command) -> Result<Outcome, CliError> {
    let paths = command.paths();
    let exp = Experiment::load(&paths.config)?;
    let (text, outcome) = match command {
        Command::Spectrum(_) => (spectrum_csv(&exp)?, Outcome::Pass),
        Command::Evolve(_) => (evolve_csv(&exp)?, Outcome::Pass),
        Command::Verify(_) => verify_report(&exp)?,
        Command::Deficiency(_) => deficiency_csv(&exp)?,
    };
    write_output(&paths.output, &text)?;
    Ok(outcome)
}

/// Parses `args`, runs the command and maps the result to an exit code.
pub fn main_with<I, S>(args: I) -> ExitCode
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli.command) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => {
            eprintln!("verification failed; see {}", cli.command.paths().output.display());
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
