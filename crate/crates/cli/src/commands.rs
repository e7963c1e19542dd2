use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use log::info;
use ouexec_core::continuous::{self, schedule, GAP_FALLBACK_PERIODS};
use ouexec_core::discrete::{
    brute_force, convergence_study, discrete_value, resolution_bound, solve_admissible, BRUTE_FORCE_POINTS,
    MAX_BRUTE_FORCE_PERIODS,
};
use ouexec_core::manipulation::{l_root, scan, scan_grid, DEFAULT_SCAN_POINTS};
use ouexec_core::model::within_standing_assumption;
use ouexec_core::montecarlo::{simulate, simulate_discrete};
use ouexec_core::proceeds::expected_proceeds_smoothed;
use ouexec_core::{
    derive, expected_proceeds, DeltaFamily, DiscreteProblem, DiscreteSolution, ExecutionStrategy, Impulse, Mode,
    OptimalSchedule, ParameterSet, Regime, SimulationReport, SolveOptions, Valuation,
};
use serde::Serialize;

use crate::config::Settings;
use crate::error::CliError;
use crate::svg::{Plot, Series};

const HOLDINGS_SAMPLES: usize = 400;
const VALUE_MATCH_TOL: f64 = 1e-9;
const CONSERVATION_TOL: f64 = 1e-8;
const DISCRETE_MATCH_TOL: f64 = 1e-2;
const MC_SIGMAS: f64 = 3.0;
const L_ROOT_STEP: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self { name: name.into(), passed, detail }
    }
}

/// The optimal strategy in whatever form the regime provides.
pub enum Plan {
    Block(ExecutionStrategy),
    Mixed(OptimalSchedule),
    Discrete { problem: DiscreteProblem, solution: DiscreteSolution },
}

pub struct Optimum {
    pub valuation: Valuation,
    pub plan: Plan,
}

impl Optimum {
    pub fn strategy(&self, horizon: f64) -> Result<ExecutionStrategy, CliError> {
        Ok(match &self.plan {
            Plan::Block(s) => s.clone(),
            Plan::Mixed(sched) => sched.strategy()?,
            Plan::Discrete { problem, solution } => {
                let n = problem.n() as f64;
                let impulses = solution
                    .psi
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(k, &size)| Impulse { time: k as f64 / n, size })
                    .collect();
                ExecutionStrategy::new(horizon, impulses, Vec::new(), Mode::Standard)?
            }
        })
    }
}

pub fn optimum(settings: &Settings) -> Result<Optimum, CliError> {
    let (p, s) = (&settings.params, &settings.state);
    let d = derive(p, s)?;
    let regime = ouexec_core::model::classify_derived(p, &d, s.holdings);
    info!("regime {regime:?}");
    if regime == Regime::Gap {
        let problem = DiscreteProblem::new(*p, *s, GAP_FALLBACK_PERIODS)?;
        let solution = solve_admissible(&problem)?;
        let valuation = Valuation {
            value: discrete_value(&problem, &solution),
            regime,
            closed_form: false,
            within_standing_assumption: within_standing_assumption(&d),
            discrete_periods: Some(problem.periods()),
        };
        return Ok(Optimum { valuation, plan: Plan::Discrete { problem, solution } });
    }
    let valuation = continuous::value(p, s)?;
    let plan = match regime {
        Regime::SmallHoldings => Plan::Block(ExecutionStrategy::initial_block(s.holdings, p.horizon)?),
        _ => {
            let opts = SolveOptions { cells: settings.grid_points, quad_tol: settings.tol, mode: Mode::Standard };
            Plan::Mixed(schedule(p, s, &opts)?)
        }
    };
    Ok(Optimum { valuation, plan })
}

fn write(out: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    fs::create_dir_all(out)?;
    fs::write(out.join(name), contents)?;
    info!("wrote {}", out.join(name).display());
    Ok(())
}

fn write_json<T: Serialize>(out: &Path, name: &str, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write(out, name, &text)
}

fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn holdings_plot(settings: &Settings, strategy: &ExecutionStrategy) -> Plot {
    let t = settings.params.horizon;
    let phi = settings.state.holdings;
    let mut points = vec![(0.0, phi)];
    points.extend((0..=HOLDINGS_SAMPLES).map(|j| {
        let r = t * j as f64 / HOLDINGS_SAMPLES as f64;
        (r, phi - strategy.sold_by(r))
    }));
    Plot {
        title: "Remaining holdings".into(),
        x_label: "time r".into(),
        y_label: "shares held".into(),
        series: vec![Series::new("holdings", points)],
        ..Plot::default()
    }
}

#[derive(Debug, Serialize)]
struct SolveReport {
    parameters: ParameterSet,
    regime: Regime,
    closed_form: bool,
    within_standing_assumption: bool,
    value: f64,
    evaluator_value: f64,
    lambda_star: Option<f64>,
    p_star: f64,
    q_star: f64,
    gradual_total: f64,
    total_sold: f64,
    cells: Option<usize>,
    discrete_periods: Option<usize>,
    checks: Vec<Check>,
}

pub fn cmd_solve(settings: &Settings) -> Result<Vec<Check>, CliError> {
    let (p, s) = (&settings.params, &settings.state);
    let opt = optimum(settings)?;
    let strategy = opt.strategy(p.horizon)?;
    let evaluator_value = expected_proceeds(p, s, &strategy)?;
    let v = opt.valuation.value;
    let total = strategy.total_sold();
    let mut checks = vec![
        Check::new(
            "conservation",
            (total - s.holdings).abs() <= CONSERVATION_TOL * s.holdings.abs().max(1.0),
            format!("sold {total:e} of {:e}", s.holdings),
        ),
        Check::new(
            "evaluator_matches_value",
            relative_gap(evaluator_value, v) <= VALUE_MATCH_TOL,
            format!("evaluator {evaluator_value:e}, value {v:e}"),
        ),
    ];
    let out = &settings.out;
    let (lambda_star, p_star, q_star, gradual_total, cells) = match &opt.plan {
        Plan::Block(_) => (None, s.holdings, 0.0, 0.0, None),
        Plan::Mixed(sched) => {
            checks.push(Check::new(
                "nonnegative_components",
                sched.p_star >= 0.0 && sched.q_star >= 0.0 && sched.zeta_cell_mean.iter().all(|z| *z >= 0.0),
                format!("p* {:e}, q* {:e}", sched.p_star, sched.q_star),
            ));
            write(out, "schedule.csv", &sched.to_csv())?;
            let zeta: Vec<(f64, f64)> = sched.grid.iter().copied().zip(sched.zeta_grid.iter().copied()).collect();
            let plot = Plot {
                title: "Optimal selling rate".into(),
                x_label: "time r".into(),
                y_label: "zeta*".into(),
                series: vec![Series::new("zeta*", zeta)],
                ..Plot::default()
            };
            write(out, "zeta.svg", &plot.render())?;
            (Some(sched.lambda_star), sched.p_star, sched.q_star, sched.gradual_total(), Some(sched.grid.len()))
        }
        Plan::Discrete { problem, solution } => {
            let n = problem.n() as f64;
            let mut csv = String::from("k,r,psi\n");
            for (k, v) in solution.psi.iter().enumerate() {
                let _ = writeln!(csv, "{k},{},{v}", k as f64 / n);
            }
            write(out, "psi.csv", &csv)?;
            let m = solution.psi.len();
            let rate: Vec<(f64, f64)> = (1..m.saturating_sub(1)).map(|k| (k as f64 / n, n * solution.psi[k])).collect();
            let plot = Plot {
                title: "Discrete selling rate (n psi_k)".into(),
                x_label: "time r".into(),
                y_label: "n psi_k".into(),
                series: vec![Series::new("n psi_k", rate)],
                ..Plot::default()
            };
            write(out, "zeta.svg", &plot.render())?;
            let interior: f64 = solution.psi[1..m.saturating_sub(1).max(1)].iter().sum();
            (Some(solution.lambda_hat), solution.psi[0], if m > 1 { solution.psi[m - 1] } else { 0.0 }, interior, None)
        }
    };
    write(out, "strategy.csv", &strategy.to_csv())?;
    write(out, "holdings.svg", &holdings_plot(settings, &strategy).render())?;
    let report = SolveReport {
        parameters: settings.parameters,
        regime: opt.valuation.regime,
        closed_form: opt.valuation.closed_form,
        within_standing_assumption: opt.valuation.within_standing_assumption,
        value: v,
        evaluator_value,
        lambda_star,
        p_star,
        q_star,
        gradual_total,
        total_sold: total,
        cells,
        discrete_periods: opt.valuation.discrete_periods,
        checks: checks.clone(),
    };
    write_json(out, "schedule.json", &report)?;
    Ok(checks)
}

#[derive(Debug, Serialize)]
struct ConvergeFailure {
    n: usize,
    reason: String,
}

#[derive(Debug, Serialize)]
struct ConvergeSummary {
    parameters: ParameterSet,
    continuous_value: f64,
    n_list: Vec<usize>,
    smallest_successful_n: Option<usize>,
    failures: Vec<ConvergeFailure>,
    checks: Vec<Check>,
}

pub fn cmd_converge(settings: &Settings) -> Result<Vec<Check>, CliError> {
    let report = convergence_study(&settings.params, &settings.state, &settings.n_list)?;
    let out = &settings.out;
    write(out, "converge.csv", &report.to_csv())?;
    let errors: Vec<(f64, f64)> = report
        .rows
        .iter()
        .filter(|r| r.failure.is_none())
        .map(|r| (r.n as f64, r.err_vs_continuous))
        .collect();
    let plot = Plot {
        title: "Discrete value error vs n".into(),
        x_label: "n".into(),
        y_label: "|discrete value - V|".into(),
        log_x: true,
        log_y: true,
        series: vec![Series::new("error", errors)],
    };
    write(out, "converge.svg", &plot.render())?;
    let checks = vec![Check::new(
        "some_n_succeeded",
        report.smallest_successful_n.is_some(),
        format!("smallest successful n: {:?}", report.smallest_successful_n),
    )];
    let summary = ConvergeSummary {
        parameters: settings.parameters,
        continuous_value: report.continuous_value,
        n_list: settings.n_list.clone(),
        smallest_successful_n: report.smallest_successful_n,
        failures: report
            .rows
            .iter()
            .filter_map(|r| r.failure.as_ref().map(|f| ConvergeFailure { n: r.n, reason: f.clone() }))
            .collect(),
        checks: checks.clone(),
    };
    write_json(out, "converge.json", &summary)?;
    Ok(checks)
}

fn run_simulation(settings: &Settings, opt: &Optimum) -> Result<SimulationReport, CliError> {
    let (p, s) = (&settings.params, &settings.state);
    Ok(match &opt.plan {
        Plan::Discrete { problem, solution } => simulate_discrete(problem, &solution.psi, settings.paths, settings.seed)?,
        _ => simulate(p, s, &opt.strategy(p.horizon)?, settings.paths, settings.steps, settings.seed)?,
    })
}

fn mc_check(report: &SimulationReport, value: f64) -> Check {
    let tolerance = MC_SIGMAS * report.std_error + VALUE_MATCH_TOL * value.abs().max(1.0);
    let diff = (report.mean_cash - value).abs();
    Check::new(
        "monte_carlo_within_3_se",
        diff <= tolerance,
        format!("mean {:e} ± {:e}, value {value:e}", report.mean_cash, report.std_error),
    )
}

#[derive(Debug, Serialize)]
struct SimulationOutput {
    parameters: ParameterSet,
    regime: Regime,
    paths: usize,
    steps: Option<usize>,
    discrete_periods: Option<usize>,
    seed: u64,
    mean_cash: f64,
    std_error: f64,
    value: f64,
    z_score: Option<f64>,
    checks: Vec<Check>,
}

pub fn cmd_simulate(settings: &Settings) -> Result<Vec<Check>, CliError> {
    let opt = optimum(settings)?;
    let report = run_simulation(settings, &opt)?;
    info!("simulated {} paths in {:?}", report.paths, report.elapsed);
    let value = opt.valuation.value;
    let checks = vec![mc_check(&report, value)];
    let discrete = matches!(opt.plan, Plan::Discrete { .. });
    let output = SimulationOutput {
        parameters: settings.parameters,
        regime: opt.valuation.regime,
        paths: report.paths,
        steps: (!discrete).then_some(settings.steps),
        discrete_periods: opt.valuation.discrete_periods,
        seed: report.seed,
        mean_cash: report.mean_cash,
        std_error: report.std_error,
        value,
        z_score: (report.std_error > 0.0).then(|| (report.mean_cash - value) / report.std_error),
        checks: checks.clone(),
    };
    write_json(&settings.out, "simulation.json", &output)?;
    Ok(checks)
}

/// One line of the verification table.
#[derive(Debug, Clone, Serialize)]
struct VerifyRow {
    method: &'static str,
    parameter: String,
    value: f64,
    std_error: Option<f64>,
    reference: f64,
    abs_error: f64,
    tolerance: Option<f64>,
    passed: bool,
}

#[derive(Debug, Serialize)]
struct VerifyOutput {
    parameters: ParameterSet,
    regime: Regime,
    closed_form: bool,
    rows: Vec<VerifyRow>,
    checks: Vec<Check>,
}

fn opt_str(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn cmd_verify(settings: &Settings) -> Result<Vec<Check>, CliError> {
    let (p, s) = (&settings.params, &settings.state);
    let opt = optimum(settings)?;
    let v = opt.valuation.value;
    let mut rows = vec![VerifyRow {
        method: "continuous",
        parameter: String::new(),
        value: v,
        std_error: None,
        reference: v,
        abs_error: 0.0,
        tolerance: None,
        passed: true,
    }];

    let n_max = *settings.n_list.iter().max().unwrap_or(&1);
    let problem = DiscreteProblem::new(*p, *s, n_max)?;
    let solution = solve_admissible(&problem)?;
    let dv = discrete_value(&problem, &solution);
    let tol = DISCRETE_MATCH_TOL * v.abs().max(1.0);
    rows.push(VerifyRow {
        method: "discrete",
        parameter: n_max.to_string(),
        value: dv,
        std_error: None,
        reference: v,
        abs_error: (dv - v).abs(),
        tolerance: Some(tol),
        passed: (dv - v).abs() <= tol,
    });

    if let Ok(small) = DiscreteProblem::new(*p, *s, MAX_BRUTE_FORCE_PERIODS) {
        let recovered = solve_admissible(&small)?;
        let brute = brute_force(&small, BRUTE_FORCE_POINTS)?;
        let scale = (p.fundamental_log + small.derived().y).exp();
        let rv = discrete_value(&small, &recovered);
        let bv = s.cash + scale * brute.objective;
        let bound = scale * resolution_bound(&small, &brute) + 1e-12 * rv.abs().max(1.0);
        rows.push(VerifyRow {
            method: "brute_force",
            parameter: MAX_BRUTE_FORCE_PERIODS.to_string(),
            value: bv,
            std_error: None,
            reference: rv,
            abs_error: (bv - rv).abs(),
            tolerance: Some(bound),
            passed: (bv - rv).abs() <= bound && bv <= rv + 1e-12 * rv.abs().max(1.0),
        });
    }

    let report = run_simulation(settings, &opt)?;
    let mc = mc_check(&report, v);
    rows.push(VerifyRow {
        method: "monte_carlo",
        parameter: report.paths.to_string(),
        value: report.mean_cash,
        std_error: Some(report.std_error),
        reference: v,
        abs_error: (report.mean_cash - v).abs(),
        tolerance: Some(MC_SIGMAS * report.std_error + VALUE_MATCH_TOL * v.abs().max(1.0)),
        passed: mc.passed,
    });

    if !matches!(opt.plan, Plan::Discrete { .. }) {
        let strategy = opt.strategy(p.horizon)?;
        let exact = expected_proceeds(p, s, &strategy)?;
        let mut deltas = settings.delta_list.clone();
        deltas.sort_by(|a, b| b.total_cmp(a));
        let mut last = f64::INFINITY;
        for delta in deltas {
            let value = expected_proceeds_smoothed(p, s, &DeltaFamily::new(strategy.clone(), delta)?)?;
            let err = (value - exact).abs();
            rows.push(VerifyRow {
                method: "delta_smoothing",
                parameter: delta.to_string(),
                value,
                std_error: None,
                reference: exact,
                abs_error: err,
                tolerance: None,
                passed: err <= last,
            });
            last = err;
        }
    }

    let checks: Vec<Check> = rows
        .iter()
        .filter(|r| r.method != "continuous")
        .map(|r| {
            Check::new(
                &format!("{}_{}", r.method, r.parameter),
                r.passed,
                format!("value {:e}, reference {:e}, error {:e}", r.value, r.reference, r.abs_error),
            )
        })
        .collect();
    let mut csv = String::from("method,parameter,value,std_error,reference,abs_error,tolerance,passed\n");
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            r.method,
            r.parameter,
            r.value,
            opt_str(r.std_error),
            r.reference,
            r.abs_error,
            opt_str(r.tolerance),
            r.passed
        );
    }
    write(&settings.out, "verify.csv", &csv)?;
    let output = VerifyOutput {
        parameters: settings.parameters,
        regime: opt.valuation.regime,
        closed_form: opt.valuation.closed_form,
        rows,
        checks: checks.clone(),
    };
    write_json(&settings.out, "verify.json", &output)?;
    Ok(checks)
}

#[derive(Debug, Serialize)]
struct ManipulateOutput {
    parameters: ParameterSet,
    z_range: [f64; 2],
    points: usize,
    l_root: Option<f64>,
    first_profitable_z: Option<f64>,
    tail_monotone: bool,
    checks: Vec<Check>,
}

pub fn cmd_manipulate(settings: &Settings) -> Result<Vec<Check>, CliError> {
    let p = &settings.params;
    if settings.state.holdings != 0.0 {
        log::warn!("round trips start from phi = 0; ignoring phi = {}", settings.state.holdings);
    }
    let [z_min, z_max] = settings.z_range;
    let grid = scan_grid(z_min, z_max, DEFAULT_SCAN_POINTS)?;
    let report = scan(p, settings.state.cash, &grid)?;
    let out = &settings.out;
    write(out, "manipulate.csv", &report.to_csv())?;
    let l_curve = report.z_values.iter().copied().zip(report.l_values.iter().copied()).collect();
    // each scan point has s = e^{F+z}; dividing by s/α puts the bound on the scale of L(z)
    let bound_curve = report
        .z_values
        .iter()
        .zip(&report.profit_bounds)
        .map(|(&z, &b)| (z, b * p.alpha * (-(p.fundamental_log + z)).exp()))
        .collect();
    let plot = Plot {
        title: "Round-trip profit: L(z) and the normalized bound".into(),
        x_label: "z = log s - F".into(),
        y_label: "profit / (s/alpha)".into(),
        series: vec![Series::new("L(z)", l_curve), Series::new("bound / (s/alpha)", bound_curve)],
        ..Plot::default()
    };
    write(out, "manipulate.svg", &plot.render())?;
    let dominated = report
        .profit_bounds
        .iter()
        .zip(&report.weak_bounds)
        .all(|(b, w)| *b >= *w - 1e-9 * w.abs().max(1.0));
    let certified = report.first_profitable_z.is_none_or(|z0| {
        let j = report.z_values.iter().position(|z| *z == z0).unwrap_or(0);
        report.verified_profits[j] > 0.0 && report.profit_bounds[j] > 0.0
    });
    let checks = vec![
        Check::new("bound_dominates_weak_bound", dominated, format!("{} points", report.z_values.len())),
        Check::new("profit_certified_twice", certified, format!("first profitable z {:?}", report.first_profitable_z)),
    ];
    let output = ManipulateOutput {
        parameters: settings.parameters,
        z_range: settings.z_range,
        points: report.z_values.len(),
        l_root: l_root(p.beta, p.horizon, z_max, L_ROOT_STEP).ok(),
        first_profitable_z: report.first_profitable_z,
        tail_monotone: report.tail_monotone,
        checks: checks.clone(),
    };
    write_json(out, "manipulate.json", &output)?;
    Ok(checks)
}
