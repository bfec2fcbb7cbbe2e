//! Subcommand arguments and their executors.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use hardy_blowup::asymptotics::{classify as classify_fit, fit_power, fit_power_log, window_sensitivity};
use hardy_blowup::barriers::{
    ko_supersolution, nonlinear_residual_scaled, validity_radius, BarrierRole, BarrierSpec,
    DistanceWindow, NamedBarrier,
};
use hardy_blowup::geometry::Geometry;
use hardy_blowup::grid::{Grid, DEFAULT_DELTA_MIN, DEFAULT_GRADING, DEFAULT_MAX_SPACING};
use hardy_blowup::ode_engine::{
    default_eta, default_eta_eps, default_rho, detect_blowup_radius, integrate_left, kappa_sweep, ode_comparison_check,
    solve_bvp_eps, ComparisonMode, OdeProblem, Terminal, Trajectory, DEFAULT_V_MAX, DEFAULT_V_MAX_SEQUENCE,
};
use hardy_blowup::radial_solver::{
    build_subsuper_pair, discrete_comparison_check, discretize, exhaustion_solve, ko_grid_supersolution, solve_bvp,
    ExhaustionOptions, InnerBoundary, PairTarget, SolveOptions,
};
use hardy_blowup::regime::{critical_mu, threshold_margins};
use hardy_blowup::reproduce::{run_criterion, run_suite, Suite, DEFAULT_SEED, EXHAUSTION_M};
use hardy_blowup::{existence_verdict, ProblemParams};

use crate::output::{Output, Table};
use crate::{CliError, Io};

fn need<T: Copy>(v: Option<T>, flag: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("missing required --{flag}")))
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct ParamArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub mu: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub p: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub s: Option<f64>,
}

impl ParamArgs {
    fn params(&self) -> Result<ProblemParams, CliError> {
        Ok(ProblemParams::new(need(self.mu, "mu")?, need(self.p, "p")?, need(self.s, "s")?)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeometryArg {
    #[default]
    Slab,
    Ball,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct GeometryArgs {
    #[arg(long, value_enum)]
    pub geometry: Option<GeometryArg>,
    /// Ball dimension (default 3).
    #[arg(long)]
    pub dim: Option<usize>,
}

impl GeometryArgs {
    fn geometry(&self) -> Result<Geometry, CliError> {
        match self.geometry.unwrap_or_default() {
            GeometryArg::Slab => Ok(Geometry::Slab),
            GeometryArg::Ball => Ok(Geometry::ball(self.dim.unwrap_or(3))?),
        }
    }
}

fn verdict_json(params: ProblemParams) -> Value {
    let report = existence_verdict(params);
    let margins = threshold_margins(params).map(|(s, p, mu)| json!({ "s": s, "p": p, "mu": mu }));
    let mut v = serde_json::to_value(&report).unwrap_or(Value::Null);
    if let Value::Object(map) = &mut v {
        map.insert("critical_mu".into(), json!(critical_mu(params.p(), params.s())));
        map.insert("margins".into(), margins.unwrap_or(Value::Null));
    }
    v
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct RegimeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    #[serde(skip)]
    pub io: Io,
}

pub fn regime(a: &RegimeArgs) -> Result<Output, CliError> {
    let params = a.params.params()?;
    let report = existence_verdict(params);
    let summary = verdict_json(params);
    let roots = report.roots;
    let mut t = Table::new(&["mu", "p", "s", "verdict", "beta_minus", "beta_plus", "threshold_s", "ko_exponent", "mu_star"]);
    t.push(vec![
        json!(params.mu()),
        json!(params.p()),
        json!(params.s()),
        json!(report.verdict),
        json!(roots.map(|r| r.beta_minus)),
        json!(roots.map(|r| r.beta_plus)),
        json!(report.threshold_s),
        json!(report.ko_exponent),
        json!(report.mu_star),
    ]);
    Ok(Output::summary(summary).with_csv_view(t))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NamedArg {
    SmallSuper,
    LargeSuper,
    SmallSub,
    LargeSub,
}

impl From<NamedArg> for NamedBarrier {
    fn from(n: NamedArg) -> Self {
        match n {
            NamedArg::SmallSuper => NamedBarrier::SmallSuper,
            NamedArg::LargeSuper => NamedBarrier::LargeSuper,
            NamedArg::SmallSub => NamedBarrier::SmallSub,
            NamedArg::LargeSub => NamedBarrier::LargeSub,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HarmonicRole {
    SubHarmonic,
    SuperHarmonic,
}

/// Selects one barrier: a named one, or a pure power / log power with a role.
#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct BarrierSel {
    #[arg(long, value_enum)]
    pub named: Option<NamedArg>,
    /// Exponent of `delta^beta`.
    #[arg(long, allow_negative_numbers = true)]
    pub pure_power: Option<f64>,
    /// Log exponent of `delta^{1/2} log(1/delta)^beta`.
    #[arg(long, allow_negative_numbers = true)]
    pub log_power: Option<f64>,
    /// Correction exponent of a named barrier (default 1/2).
    #[arg(long)]
    pub eps: Option<f64>,
    /// Claimed role of a pure or log power (default super-harmonic).
    #[arg(long, value_enum)]
    pub role: Option<HarmonicRole>,
    #[arg(long, allow_negative_numbers = true)]
    pub mu: Option<f64>,
}

impl BarrierSel {
    fn spec(&self) -> Result<BarrierSpec, CliError> {
        let role = match self.role.unwrap_or(HarmonicRole::SuperHarmonic) {
            HarmonicRole::SubHarmonic => BarrierRole::SubHarmonic,
            HarmonicRole::SuperHarmonic => BarrierRole::SuperHarmonic,
        };
        match (self.named, self.pure_power, self.log_power) {
            (Some(n), None, None) => {
                Ok(BarrierSpec::named(n.into(), need(self.mu, "mu")?, self.eps.unwrap_or(0.5))?)
            }
            (None, Some(beta), None) => Ok(BarrierSpec::pure_power(beta, role)),
            (None, None, Some(beta)) => Ok(BarrierSpec::log_power(beta, role)),
            _ => Err(CliError::Usage("give exactly one of --named, --pure-power, --log-power".into())),
        }
    }

    fn params(&self) -> Result<ProblemParams, CliError> {
        // The linear roles only use mu.
        Ok(ProblemParams::new(need(self.mu, "mu")?, 2.0, 0.0)?)
    }
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct WindowArgs {
    #[arg(long)]
    pub delta_min: Option<f64>,
    #[arg(long)]
    pub delta_max: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
}

impl WindowArgs {
    fn window(&self) -> Result<DistanceWindow, CliError> {
        Ok(DistanceWindow::new(
            self.delta_min.unwrap_or(1e-6),
            self.delta_max.unwrap_or(0.05),
            self.samples.unwrap_or(1000),
        )?)
    }
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct BarrierEvalArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub barrier: BarrierSel,
    /// Distances; defaults to the window samples.
    #[arg(long, value_delimiter = ',')]
    pub deltas: Option<Vec<f64>>,
    #[command(flatten)]
    #[serde(flatten)]
    pub window: WindowArgs,
    #[command(flatten)]
    #[serde(skip)]
    pub io: Io,
}

pub fn barrier_eval(a: &BarrierEvalArgs) -> Result<Output, CliError> {
    let spec = a.barrier.spec()?;
    let params = a.barrier.params()?;
    let deltas = match &a.deltas {
        Some(d) => d.clone(),
        None => a.window.window()?.samples(),
    };
    let mut t = Table::new(&["delta", "value", "residual", "scale", "sign_holds"]);
    let mut all = true;
    for &d in &deltas {
        let value = spec.eval(d)?;
        let (r, scale) = spec.role_residual(&params, d)?;
        let holds = spec.sign_holds(&params, d)?;
        all &= holds;
        t.push(vec![json!(d), json!(value), json!(r), json!(scale), json!(holds)]);
    }
    Ok(Output::summary(json!({ "spec": spec, "family": spec.family(), "all_signs_hold": all })).with_table(t))
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct BarrierVerifyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub barrier: BarrierSel,
    #[command(flatten)]
    #[serde(flatten)]
    pub window: WindowArgs,
    #[command(flatten)]
    #[serde(skip)]
    pub io: Io,
}

pub fn barrier_verify(a: &BarrierVerifyArgs) -> Result<Output, CliError> {
    let spec = a.barrier.spec()?;
    let window = a.window.window()?;
    let v = validity_radius(&spec, &a.barrier.params()?, &window);
    let holds = v.first_failure.is_none();
    Ok(Output::summary(json!({
        "spec": spec,
        "window": [window.delta_min(), window.delta_max()],
        "holds": holds,
        "rho0": v.rho0,
        "first_failure": v.first_failure,
    }))
    .failing_if(!holds))
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct KoArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub params: ParamArgs,
    /// Shift of the pole.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub deltas: Option<Vec<f64>>,
    #[command(flatten)]
    #[serde(skip)]
    pub io: Io,
}

pub fn barrier_ko(a: &KoArgs) -> Result<Output, CliError> {
    let params = a.params.params()?;
    let spec = ko_supersolution(&params, a.eps.unwrap_or(0.0))?;
    let mut out = Output::summary(json!({ "gamma": spec.gamma, "exponent": params.ko_exponent(), "spec": spec }));
    if let Some(ds) = &a.deltas {
        let mut t = Table::new(&["delta", "value"]);
        for &d in ds {
            t.push(vec![json!(d), json!(spec.eval(d)?)]);
        }
        out = out.with_table(t);
    }
    Ok(out)
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct ResidualArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub params: ParamArgs,
    #[arg(long)]
    pub u: Option<f64>,
    /// Second derivative of u with respect to delta.
    #[arg(long, allow_negative_numbers = true)]
    pub u2: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[command(flatten)]
    #[serde(skip)]
    pub io: Io,
}

pub fn barrier_residual(a: &ResidualArgs) -> Result<Output, CliError> {
    let params = a.params.params()?;
    let (r, scale) = nonlinear_residual_scaled(need(a.u, "u")?, need(a.u2, "u2")?, &params, need(a.delta, "delta")?)?;
    Ok(Output::summary(json!({ "residual": r, "scale": scale })))
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct OdeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub geometry: GeometryArgs,
    /// Correction exponent of the weight.
    #[arg(long)]
    pub eta_eps: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
}

impl OdeArgs {
    fn problem(&self, kappa: f64) -> Result<OdeProblem, CliError> {
        let params = self.params.params()?;
        let mu = params.mu();
        let eta = default_eta(mu, self.eta_eps.unwrap_or_else(|| default_eta_eps(mu)))?;
        let rho = self.rho.unwrap_or_else(|| default_rho(mu));
        let h_bar = self.geometry.geometry()?.curvature_bound(rho);
        Ok(OdeProblem::new(params, eta, h_bar, rho, kappa)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    Ivp,
    Bvp,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct ShootArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub ode: OdeArgs,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub r_min: Option<f64>,
    #[arg(long)]
    pub v_max: Option<f64>,
    /// With --target-eps: find the slope with v(r_star) = target.
    #[arg(long)]
    pub r_star: Option<f64>,
    #[arg(long)]
    pub target_eps: Option<f64>,
    /// Compare with the trajectory of this slope (exit 2 if unordered).
    #[arg(long)]
    pub compare_kappa: Option<f64>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[command(flatten)]
    #[serde(skip)]
    pub io: Io,
}

fn trajectory_table(t: &Trajectory) -> Table {
    let mut table = Table::new(&["r", "v", "v_dot"]);
    for s in &t.samples {
        table.push(vec![json!(s.r), json!(s.v), json!(s.v_dot)]);
    }
    table
}

pub fn shoot(a: &ShootArgs) -> Result<Output, CliError> {
    let r_min = a.r_min.unwrap_or(1e-6);
    let v_max = a.v_max.unwrap_or(DEFAULT_V_MAX);
    let (kappa, traj) = match (a.r_star, a.target_eps) {
        (Some(r_star), Some(eps)) => {
            let template = a.ode.problem(a.kappa.unwrap_or(1.0))?;
            let (k, _) = solve_bvp_eps(&template, r_star, eps)?;
            (k, integrate_left(&template.with_kappa(k)?, r_min, v_max)?)
        }
        (None, None) => {
            let k = need(a.kappa, "kappa")?;
            (k, integrate_left(&a.ode.problem(k)?, r_min, v_max)?)
        }
        _ => return Err(CliError::Usage("--r-star and --target-eps go together".into())),
    };
    let (extrapolated, error_estimate) = match traj.terminal {
        Terminal::BlowUp { .. } => {
            let est = detect_blowup_radius(&traj.problem, &DEFAULT_V_MAX_SEQUENCE)?;
            (Some(est.radius), Some(est.error_estimate))
        }
        _ => (None, None),
    };
    let mut summary = json!({
        "kappa": kappa,
        "rho": traj.problem.rho(),
        "terminal": traj.terminal,
        "R_kappa": traj.r_kappa(),
        "R_kappa_extrapolated": extrapolated,
        "error_estimate": error_estimate,
    });
    let mut failed = false;
    if let Some(k2) = a.compare_kappa {
        let other = integrate_left(&traj.problem.with_kappa(k2)?, r_min, v_max)?;
        let mode = match a.mode.unwrap_or(ModeArg::Bvp) {
            ModeArg::Ivp => ComparisonMode::Ivp,
            ModeArg::Bvp => ComparisonMode::Bvp,
        };
        let (lo, hi) = if k2 <= kappa { (&other, &traj) } else { (&traj, &other) };
        let ordered = ode_comparison_check(lo, hi, mode)?;
        failed = !ordered;
        summary["comparison"] = json!({ "kappa": k2, "mode": mode, "ordered": ordered });
    }
    Ok(Output::summary(summary).with_table(trajectory_table(&traj)).failing_if(failed))
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct SweepArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub ode: OdeArgs,
    /// Strictly decreasing slopes.
    #[arg(long, value_delimiter = ',')]
    pub kappas: Option<Vec<f64>>,
    /// Left end of the tail on which sup v is taken (default rho/2).
    #[arg(long)]
    pub r_star: Option<f64>,
    #[command(flatten)]
    #[serde(skip)]
    pub io: Io,
}

pub fn sweep(a: &SweepArgs) -> Result<Output, CliError> {
    let kappas = a.kappas.clone().unwrap_or_else(|| vec![1.0, 0.1, 0.01, 0.001]);
    let template = a.ode.problem(*kappas.first().ok_or_else(|| CliError::Usage("empty --kappas".into()))?)?;
    let r_star = a.r_star.unwrap_or(0.5 * template.rho());
    let entries = kappa_sweep(&template, &kappas, r_star)?;
    let mut t = Table::new(&["kappa", "R_kappa", "resolved", "sup_v"]);
    for e in &entries {
        t.push(vec![json!(e.kappa), json!(e.r_kappa), json!(e.resolved), json!(e.sup_v)]);
    }
    Ok(Output::summary(json!({ "rho": template.rho(), "r_star": r_star })).with_table(t))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMode {
    #[default]
    Bvp,
    Pair,
    Exhaust,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetArg {
    Xxl,
    Ml,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct SolveArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub geometry: GeometryArgs,
    #[arg(long, value_enum)]
    pub mode: Option<SolveMode>,
    #[arg(long)]
    pub delta_min: Option<f64>,
    #[arg(long)]
    pub grading: Option<f64>,
    #[arg(long)]
    pub max_spacing: Option<f64>,
    /// Dirichlet value at the first node (bvp mode).
    #[arg(long)]
    pub inner: Option<f64>,
    /// Dirichlet value at delta = 1 (slab).
    #[arg(long)]
    pub outer: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Pair mode target.
    #[arg(long, value_enum)]
    pub target: Option<TargetArg>,
    /// Pair mode: run the discrete comparison check (exit 2 on failure).
    #[arg(long)]
    pub check: bool,
    /// Exhaustion levels, decreasing.
    #[arg(long, value_delimiter = ',')]
    pub eps: Option<Vec<f64>>,
    /// Boundary values, increasing.
    #[arg(long = "m", value_delimiter = ',')]
    pub m: Option<Vec<f64>>,
    #[command(flatten)]
    #[serde(skip)]
    pub io: Io,
}

impl SolveArgs {
    fn grid(&self) -> Result<Grid, CliError> {
        Ok(Grid::graded(
            self.delta_min.unwrap_or(DEFAULT_DELTA_MIN),
            self.grading.unwrap_or(DEFAULT_GRADING),
            self.max_spacing.unwrap_or(DEFAULT_MAX_SPACING),
        )?)
    }

    fn solve_options(&self) -> SolveOptions {
        let mut o = SolveOptions::default();
        if let Some(tol) = self.tol {
            o.tol = tol;
        }
        o
    }
}

pub fn solve(a: &SolveArgs) -> Result<Output, CliError> {
    let params = a.params.params()?;
    let geometry = a.geometry.geometry()?;
    match a.mode.unwrap_or_default() {
        SolveMode::Bvp => {
            let grid = a.grid()?;
            let (gamma, ko) = ko_grid_supersolution(geometry, params, &grid)?;
            let inner = a.inner.unwrap_or(0.0);
            let op = discretize(geometry, params, grid, InnerBoundary::DirichletValue { value: inner }, a.outer.unwrap_or(0.0))?;
            // Starting above every solution with these data selects the largest one.
            let mut initial = ko.values.clone();
            for v in &mut initial {
                *v = v.max(inner);
            }
            let u = solve_bvp(&op, &initial, &a.solve_options())?;
            let mut t = Table::new(&["delta", "u"]);
            for (&d, &v) in u.nodes().iter().zip(&u.values) {
                t.push(vec![json!(d), json!(v)]);
            }
            Ok(Output::summary(json!({
                "iterations": u.iterations,
                "residual_norm": u.residual_norm,
                "used_fallback": u.used_fallback,
                "max_value": u.values.iter().cloned().fold(0.0, f64::max),
                "ko_amplitude": gamma,
                "ko_exceedances": u.exceedances(&ko.values).len(),
            }))
            .with_table(t))
        }
        SolveMode::Pair => {
            let grid = a.grid()?;
            let target = match a.target.unwrap_or(TargetArg::Xxl) {
                TargetArg::Xxl => PairTarget::Xxl,
                TargetArg::Ml => PairTarget::Ml,
            };
            let pair = build_subsuper_pair(geometry, params, &grid, target)?;
            let mut summary = json!({ "target": target, "ordered": pair.ordered });
            let mut header = vec!["delta", "sub", "sup"];
            let solution = if a.check {
                let ok = discrete_comparison_check(&pair.sub, &pair.sup)?;
                summary["comparison"] = json!(ok);
                header.push("u");
                Some((ok, pair.solve(&a.solve_options())?))
            } else {
                None
            };
            let mut t = Table::new(&header);
            for i in 0..grid.len() {
                let mut row = vec![json!(grid.nodes()[i]), json!(pair.sub.values[i]), json!(pair.sup.values[i])];
                if let Some((_, u)) = &solution {
                    row.push(json!(u.values[i]));
                }
                t.push(row);
            }
            let failed = !pair.ordered || solution.as_ref().is_some_and(|(ok, _)| !ok);
            Ok(Output::summary(summary).with_table(t).failing_if(failed))
        }
        SolveMode::Exhaust => {
            let eps = a.eps.clone().unwrap_or_else(|| hardy_blowup::reproduce::existence_eps().to_vec());
            let m = a.m.clone().unwrap_or_else(|| EXHAUSTION_M.to_vec());
            let mut options = ExhaustionOptions { solve: a.solve_options(), ..ExhaustionOptions::default() };
            if let Some(g) = a.grading {
                options.grading = g;
            }
            if let Some(h) = a.max_spacing {
                options.max_spacing = h;
            }
            if let Some(o) = a.outer {
                options.bc_outer = o;
            }
            let run = exhaustion_solve(params, geometry, &eps, &m, &options)?;
            let mut t = Table::new(&["delta", "limit"]);
            for (&d, &v) in run.limit.delta.iter().zip(&run.limit.values) {
                t.push(vec![json!(d), json!(v)]);
            }
            Ok(Output::summary(json!({
                "eps": run.levels.iter().map(|l| l.eps).collect::<Vec<_>>(),
                "boundary_values": run.levels.iter().map(|l| l.boundary_values.clone()).collect::<Vec<_>>(),
                "cauchy_gaps": run.levels.iter().map(|l| l.cauchy_gap).collect::<Vec<_>>(),
                "cauchy_in_m": run.cauchy_in_m,
                "monotone_in_eps": run.monotone_in_eps,
                "probes": run.probes,
                "probe_values": run.probe_values,
                "collapse": run.collapse,
                "ko_gamma": run.ko_gamma,
            }))
            .with_table(t))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelArg {
    Power,
    PowerLog,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct ClassifyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub params: ParamArgs,
    /// CSV file with columns `delta,value` (header row required).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Fit window `lo,hi`.
    #[arg(long, value_delimiter = ',')]
    pub window: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    #[command(flatten)]
    #[serde(skip)]
    pub io: Io,
}

fn read_samples(path: &PathBuf) -> Result<Vec<(f64, f64)>, CliError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let header = reader.headers().map_err(|e| CliError::Io(e.to_string()))?.clone();
    let col = |names: &[&str]| header.iter().position(|h| names.contains(&h.trim()));
    let (Some(di), Some(vi)) = (col(&["delta"]), col(&["value", "u", "limit"])) else {
        return Err(CliError::Usage("input needs columns delta and value".into()));
    };
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| CliError::Io(e.to_string()))?;
        let parse = |i: usize| rec.get(i).and_then(|v| v.trim().parse::<f64>().ok());
        match (parse(di), parse(vi)) {
            (Some(d), Some(v)) => out.push((d, v)),
            _ => return Err(CliError::Usage(format!("unparsable row {:?}", rec))),
        }
    }
    Ok(out)
}

pub fn classify(a: &ClassifyArgs) -> Result<Output, CliError> {
    let params = a.params.params()?;
    let input = a.input.as_ref().ok_or_else(|| CliError::Usage("missing required --input".into()))?;
    let samples = read_samples(input)?;
    let window = match a.window.as_deref() {
        Some([lo, hi]) => (*lo, *hi),
        Some(_) => return Err(CliError::Usage("--window takes two values lo,hi".into())),
        None => {
            let dmin = samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
            hardy_blowup::asymptotics::default_window(dmin)
        }
    };
    let fit = match a.model.unwrap_or(ModelArg::Power) {
        ModelArg::Power => fit_power(&samples, window)?,
        ModelArg::PowerLog => fit_power_log(&samples, window)?,
    };
    let report = existence_verdict(params);
    let class = classify_fit(&fit, &report);
    let sensitivity = window_sensitivity(&samples, window).ok();
    let summary: Value = json!({ "fit": fit, "class": class, "window_sensitivity": sensitivity });
    Ok(Output::summary(summary))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteArg {
    Thresholds,
    #[value(name = "ode_lemma")]
    OdeLemma,
    #[value(name = "xxl_slab")]
    XxlSlab,
    Exhaustion,
    All,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct ReproduceArgs {
    #[arg(long, value_enum)]
    pub suite: Option<SuiteArg>,
    /// Run a single criterion (1-10) instead of a suite.
    #[arg(long)]
    pub criterion: Option<u8>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Report zero elapsed times, for byte-identical reruns.
    #[arg(long)]
    pub omit_timing: bool,
    #[command(flatten)]
    #[serde(skip)]
    pub io: Io,
}

pub fn reproduce(a: &ReproduceArgs) -> Result<Output, CliError> {
    let seed = a.seed.unwrap_or(DEFAULT_SEED);
    let reports = match (a.criterion, a.suite) {
        (Some(id), None) => vec![run_criterion(id, seed).ok_or_else(|| CliError::Usage(format!("no criterion {id}")))?],
        (None, suite) => {
            let suites: Vec<Suite> = match suite.unwrap_or(SuiteArg::All) {
                SuiteArg::Thresholds => vec![Suite::Thresholds],
                SuiteArg::OdeLemma => vec![Suite::OdeLemma],
                SuiteArg::XxlSlab => vec![Suite::XxlSlab],
                SuiteArg::Exhaustion => vec![Suite::Exhaustion],
                SuiteArg::All => Suite::ALL.to_vec(),
            };
            let mut all: Vec<_> = suites.into_iter().flat_map(|s| run_suite(s, seed).criteria).collect();
            all.sort_by_key(|r| r.id);
            all
        }
        (Some(_), Some(_)) => return Err(CliError::Usage("give --suite or --criterion, not both".into())),
    };
    let mut reports = reports;
    if a.omit_timing {
        for r in &mut reports {
            r.seconds = 0.0;
        }
    }
    let passed = reports.iter().all(|r| r.passed);
    let mut t = Table::new(&["id", "title", "passed", "seconds"]);
    for r in &reports {
        t.push(vec![json!(r.id), json!(r.title), json!(r.passed), json!(r.seconds)]);
    }
    Ok(Output::summary(json!({ "seed": seed, "passed": passed, "criteria": reports })).with_table(t).failing_if(!passed))
}
