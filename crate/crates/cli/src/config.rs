//! Run configuration: JSON file, command-line overrides, per-command defaults.

use std::fmt;
use std::path::PathBuf;

use conformal_poisson::bubble::make_flat_k;
use conformal_poisson::functional::ScalarField;
use conformal_poisson::kernel::{Normalization, OperatorMode, DEFAULT_MEMORY_BUDGET};
use conformal_poisson::solver::SolverConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Prescribed curvature `K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KSpec {
    Constant { value: f64 },
    /// `K₀ + δ min(|ξ-ξ₁|, |ξ+ξ₁|)^q`.
    Flat { k0: f64, delta: f64, q: f64, center: Vec<f64> },
    ZnPlus2,
    Zn2Plus1,
}

impl Default for KSpec {
    fn default() -> Self {
        KSpec::Constant { value: 1.0 }
    }
}

impl KSpec {
    /// `constant`, `constant:<c>`, `zn_plus_2`, `zn2_plus_1`, or
    /// `flat:<K0>,<delta>,<q>` (centred at the north pole).
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let (head, args) = split_tag(s);
        match (head, args) {
            ("constant", None) => Ok(KSpec::Constant { value: 1.0 }),
            ("constant", Some(a)) => Ok(KSpec::Constant { value: parse_f64(a, "K constant")? }),
            ("zn_plus_2", None) => Ok(KSpec::ZnPlus2),
            ("zn2_plus_1", None) => Ok(KSpec::Zn2Plus1),
            ("flat", Some(a)) => {
                let v = parse_list(a, "flat K parameters")?;
                if v.len() != 3 {
                    return Err(CliError::usage(format!("flat K needs K0,delta,q; got `{a}`")));
                }
                Ok(KSpec::Flat { k0: v[0], delta: v[1], q: v[2], center: Vec::new() })
            }
            _ => Err(CliError::usage(format!(
                "unknown K `{s}` (expected constant[:c], zn_plus_2, zn2_plus_1 or flat:K0,delta,q)"
            ))),
        }
    }

    pub fn build(&self, n: usize) -> Result<ScalarField, CliError> {
        match self {
            KSpec::Constant { value } => {
                if !(*value > 0.0 && value.is_finite()) {
                    return Err(CliError::usage(format!("constant K must be positive, got {value}")));
                }
                Ok(ScalarField::constant(n, *value))
            }
            KSpec::Flat { k0, delta, q, center } => {
                let c = if center.is_empty() { north(n) } else { center.clone() };
                if c.len() != n {
                    return Err(CliError::usage(format!("flat K centre has {} coordinates, n = {n}", c.len())));
                }
                Ok(make_flat_k(*k0, *delta, *q, &c)?)
            }
            KSpec::ZnPlus2 => Ok(ScalarField::zn_plus_2(n)),
            KSpec::Zn2Plus1 => Ok(ScalarField::zn2_plus_1(n)),
        }
    }

    fn resolve(&mut self, n: usize) {
        if let KSpec::Flat { center, .. } = self {
            if center.is_empty() {
                *center = north(n);
            }
        }
    }
}

/// Boundary field for `kazdan-warner`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum VSpec {
    Constant { value: f64 },
    /// Glued two-cap trial function at concentration `lambda`.
    Glued { lambda: f64 },
    /// Even random start as used by the solver, from the run seed.
    Random,
}

impl Default for VSpec {
    fn default() -> Self {
        VSpec::Constant { value: 1.0 }
    }
}

impl VSpec {
    /// `constant`, `constant:<c>`, `glued:<lambda>` or `random`.
    pub fn parse(s: &str) -> Result<Self, CliError> {
        match split_tag(s) {
            ("constant", None) => Ok(VSpec::Constant { value: 1.0 }),
            ("constant", Some(a)) => Ok(VSpec::Constant { value: parse_f64(a, "v constant")? }),
            ("glued", Some(a)) => Ok(VSpec::Glued { lambda: parse_f64(a, "glued lambda")? }),
            ("random", None) => Ok(VSpec::Random),
            _ => Err(CliError::usage(format!("unknown v `{s}` (expected constant[:c], glued:lambda or random)"))),
        }
    }
}

/// Solver settings; `initial_step` defaults to `1/p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub p: f64,
    pub initial_step: Option<f64>,
    pub backtrack: f64,
    pub min_step: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub residual_tolerance: f64,
    pub stall_residual: f64,
    pub positivity: bool,
    pub symmetrize: bool,
}

pub const DEFAULT_P: f64 = 3.7;

impl Default for SolverSection {
    fn default() -> Self {
        let c = SolverConfig::new(DEFAULT_P);
        SolverSection {
            p: c.p,
            initial_step: None,
            backtrack: c.backtrack,
            min_step: c.min_step,
            max_iterations: c.max_iterations,
            tolerance: c.tolerance,
            residual_tolerance: c.residual_tolerance,
            stall_residual: c.stall_residual,
            positivity: c.positivity,
            symmetrize: c.symmetrize,
        }
    }
}

impl SolverSection {
    pub fn to_config(&self) -> SolverConfig {
        SolverConfig {
            p: self.p,
            initial_step: self.initial_step.unwrap_or(1.0 / self.p),
            backtrack: self.backtrack,
            min_step: self.min_step,
            max_iterations: self.max_iterations,
            tolerance: self.tolerance,
            residual_tolerance: self.residual_tolerance,
            stall_residual: self.stall_residual,
            positivity: self.positivity,
            symmetrize: self.symmetrize,
        }
    }
}

/// Everything a run depends on. Unset options are filled per command by
/// [`RunConfig::resolve`], and the resolved config is echoed in every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub n: Option<usize>,
    pub resolution: Option<usize>,
    pub radial_order: Option<usize>,
    pub grading: f64,
    /// Cached when the matrix fits `memory_budget`, else matrix-free.
    pub operator_mode: Option<OperatorMode>,
    pub normalization: Option<Normalization>,
    pub memory_budget: usize,
    pub k: KSpec,
    pub v: VSpec,
    pub solver: SolverSection,
    /// Concentration parameters for `trial-energy` and `blowup-diagnostic`.
    pub lambda: Vec<f64>,
    /// Strictly decreasing exponents for `continuation`.
    pub schedule: Vec<f64>,
    /// Sphere resolutions for `grid-convergence`.
    pub resolutions: Vec<usize>,
    /// Size of the random panel (`verify-inequality`, `carleman`) or number
    /// of solver starts (`solve`).
    pub samples: Option<usize>,
    /// Gauss points per panel for `trial-energy`.
    pub trial_order: usize,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n: None,
            resolution: None,
            radial_order: None,
            grading: 2.0,
            operator_mode: None,
            normalization: None,
            memory_budget: DEFAULT_MEMORY_BUDGET,
            k: KSpec::default(),
            v: VSpec::default(),
            solver: SolverSection::default(),
            lambda: Vec::new(),
            schedule: Vec::new(),
            resolutions: Vec::new(),
            samples: None,
            trial_order: 10,
            output_dir: PathBuf::from("out"),
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    VerifyInequality,
    Carleman,
    Solve,
    Continuation,
    KazdanWarner,
    TrialEnergy,
    BlowupDiagnostic,
    GridConvergence,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Command::VerifyInequality => "verify-inequality",
            Command::Carleman => "carleman",
            Command::Solve => "solve",
            Command::Continuation => "continuation",
            Command::KazdanWarner => "kazdan-warner",
            Command::TrialEnergy => "trial-energy",
            Command::BlowupDiagnostic => "blowup-diagnostic",
            Command::GridConvergence => "grid-convergence",
        };
        f.write_str(s)
    }
}

impl RunConfig {
    /// Parse a JSON config and check the ranges that do not depend on the
    /// command.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::usage(format!("config: {e}")))?;
        cfg.validate_common()?;
        Ok(cfg)
    }

    pub fn validate_common(&self) -> Result<(), CliError> {
        if let Some(n) = self.n {
            if !(2..=3).contains(&n) {
                return Err(CliError::usage(format!("n = {n}: supported dimensions are 2 and 3")));
            }
        }
        for r in self.resolution.iter().chain(&self.resolutions) {
            if *r < 4 || r % 2 != 0 {
                return Err(CliError::usage(format!("resolution {r} must be even and at least 4")));
            }
        }
        if let Some(r) = self.radial_order {
            if r < 4 {
                return Err(CliError::usage(format!("radial_order {r} must be at least 4")));
            }
        }
        if !(self.grading >= 1.0 && self.grading.is_finite()) {
            return Err(CliError::usage(format!("grading {} must be finite and >= 1", self.grading)));
        }
        if self.lambda.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            return Err(CliError::usage("lambda values must be positive"));
        }
        if self.samples == Some(0) {
            return Err(CliError::usage("samples must be positive"));
        }
        if self.trial_order < 4 {
            return Err(CliError::usage(format!("trial_order {} must be at least 4", self.trial_order)));
        }
        if !(self.solver.p.is_finite()) {
            return Err(CliError::usage("solver.p must be finite"));
        }
        Ok(())
    }

    /// Fill every unset option with the command's default and validate the result.
    pub fn resolve(mut self, cmd: Command) -> Result<Self, CliError> {
        self.validate_common()?;
        let default_n = if cmd == Command::Carleman { 2 } else { 3 };
        let n = *self.n.get_or_insert(default_n);
        match cmd {
            Command::Carleman if n != 2 => return Err(CliError::usage("carleman runs in dimension n = 2")),
            Command::Carleman => {}
            _ if n != 3 => return Err(CliError::usage(format!("{cmd} runs in dimension n = 3"))),
            _ => {}
        }
        let res = *self.resolution.get_or_insert(if cmd == Command::Carleman { 512 } else { 16 });
        self.radial_order.get_or_insert(if cmd == Command::Carleman { 32 } else { res });
        self.normalization.get_or_insert(match cmd {
            Command::VerifyInequality | Command::Carleman => Normalization::Moments,
            Command::Solve | Command::Continuation => Normalization::Balanced,
            _ => Normalization::Rows,
        });
        // grid-convergence chooses per resolution
        if self.operator_mode.is_none() && cmd != Command::GridConvergence {
            self.operator_mode = Some(mode_for_budget(n, res, self.radial_order(), self.memory_budget));
        }
        self.samples.get_or_insert(match cmd {
            Command::VerifyInequality => 200,
            Command::Carleman => 100,
            _ => 5,
        });
        if self.lambda.is_empty() {
            self.lambda = match cmd {
                Command::TrialEnergy => vec![0.005, 0.0075, 0.01, 0.015],
                _ => vec![0.05],
            };
        }
        if self.schedule.is_empty() {
            self.schedule = vec![3.9, 3.85, 3.8, 3.75, 3.7];
        }
        if self.resolutions.is_empty() {
            self.resolutions = vec![8, 16, 32];
        }
        self.k.resolve(n);
        match cmd {
            Command::Solve => self.solver.to_config().validate(n)?,
            Command::Continuation => {
                if self.schedule.windows(2).any(|w| !(w[1] < w[0])) {
                    return Err(CliError::usage("schedule must be strictly decreasing"));
                }
                for &p in &self.schedule {
                    SolverSection { p, ..self.solver }.to_config().validate(n)?;
                }
            }
            Command::GridConvergence if self.resolutions.len() < 2 => {
                return Err(CliError::usage("grid-convergence needs at least two resolutions"));
            }
            Command::TrialEnergy if self.lambda.iter().any(|l| !(0.001..=0.5).contains(l)) => {
                return Err(CliError::usage("trial-energy needs 0.001 <= lambda <= 0.5"));
            }
            _ => {}
        }
        Ok(self)
    }

    /// Concrete values of the options [`resolve`](Self::resolve) fills.
    pub fn n(&self) -> usize {
        self.n.unwrap_or(3)
    }
    pub fn resolution(&self) -> usize {
        self.resolution.unwrap_or(16)
    }
    pub fn radial_order(&self) -> usize {
        self.radial_order.unwrap_or_else(|| self.resolution())
    }
    pub fn normalization(&self) -> Normalization {
        self.normalization.unwrap_or_default()
    }
    pub fn operator_mode(&self) -> OperatorMode {
        self.operator_mode.unwrap_or_default()
    }
    pub fn samples(&self) -> usize {
        self.samples.unwrap_or(1)
    }
}

/// Cached when the dense matrix fits in `budget` bytes.
pub fn mode_for_budget(n: usize, resolution: usize, radial_order: usize, budget: usize) -> OperatorMode {
    let m = if n == 2 { resolution } else { 2usize.saturating_mul(resolution).saturating_mul(resolution) };
    let bytes = m.saturating_mul(m).saturating_mul(radial_order).saturating_mul(8);
    if bytes <= budget {
        OperatorMode::Cached
    } else {
        OperatorMode::MatrixFree
    }
}

fn north(n: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[n - 1] = 1.0;
    e
}

fn split_tag(s: &str) -> (&str, Option<&str>) {
    match s.split_once(':') {
        Some((h, a)) => (h.trim(), Some(a.trim())),
        None => (s.trim(), None),
    }
}

fn parse_f64(s: &str, what: &str) -> Result<f64, CliError> {
    s.trim().parse::<f64>().map_err(|_| CliError::usage(format!("{what}: `{s}` is not a number")))
}

/// Comma-separated numbers.
pub fn parse_list(s: &str, what: &str) -> Result<Vec<f64>, CliError> {
    s.split(',').filter(|t| !t.trim().is_empty()).map(|t| parse_f64(t, what)).collect()
}
