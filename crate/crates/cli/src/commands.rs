//! The figure pipelines, the verification suite and the parameter sweep.

use std::fmt::Write as _;
use std::time::Instant;

use nh_sta::biorthogonal::DerivativeScheme;
use nh_sta::gauge::rotations;
use nh_sta::grid::TimeGrid;
use nh_sta::pipeline::{run_shortcut, ShortcutOptions, ShortcutRun};
use nh_sta::two_level::{
    hamiltonian, mixing_angle_path, pulse_regime, radicand, two_level_system, AllenEberly, AllenEberlyParams, Pulse,
};
use rayon::prelude::*;

use crate::config::{Command, ExperimentConfig, InitialTag, PolicyTag, PulseSource};
use crate::error::{CliError, Result};
use crate::manifest::{OutputDir, RunRecord};
use crate::table::{Cell, Table};

/// Thresholds of the verification suite.
pub mod thresholds {
    pub const BIORTHOGONALITY: f64 = 1e-10;
    pub const EIGEN_RESIDUAL: f64 = 1e-10;
    pub const INVERSE_FRAME: f64 = 1e-12;
    pub const NULLIFICATION: f64 = 1e-10;
    pub const FRAME_BLOCKED_ENTRY: f64 = 1e-6;
    pub const G_MINUS: f64 = 1e-5;
    pub const G_PLUS_SQ_DEVIATION: f64 = 0.05;
    pub const CLOSED_FORM: f64 = 1e-5;
    pub const CONVERGENCE: f64 = 1e-7;
}

/// What a command produced; `failure` decides the exit status.
#[derive(Debug)]
pub struct Outcome {
    pub report: String,
    pub failure: Option<CliError>,
}

impl Outcome {
    pub fn exit_code(&self) -> u8 {
        self.failure.as_ref().map_or(0, CliError::exit_code)
    }
}

pub fn pulse_for(cfg: &ExperimentConfig, gamma: f64) -> Result<Box<dyn Pulse<f64>>> {
    Ok(match &cfg.pulse {
        PulseSource::AllenEberly { omega0, delta0, tau } => Box::new(AllenEberly::new(AllenEberlyParams {
            omega0: *omega0,
            delta0: *delta0,
            tau: *tau,
            gamma,
            t0: cfg.t0,
            t_f: cfg.t_final,
        })?),
        PulseSource::Tabulated { .. } => Box::new(cfg.pulse.tabulated(gamma).expect("tabulated source")?),
    })
}

fn grid(cfg: &ExperimentConfig) -> Result<TimeGrid<f64>> {
    Ok(TimeGrid::new(cfg.t0, cfg.t_final, cfg.steps)?)
}

fn options(cfg: &ExperimentConfig, policy: PolicyTag, initial: InitialTag, check_frame: bool) -> ShortcutOptions<f64> {
    ShortcutOptions {
        rule: policy.rule(cfg.trapped, cfg.common_shift),
        trapped: cfg.trapped,
        initial: initial.condition(),
        scheme: DerivativeScheme::Richardson,
        check_convergence: true,
        check_frame,
        ..Default::default()
    }
}

fn shortcut(cfg: &ExperimentConfig, gamma: f64, policy: PolicyTag, initial: InitialTag) -> Result<ShortcutRun<f64>> {
    let pulse = pulse_for(cfg, gamma)?;
    Ok(run_shortcut(pulse.as_ref(), &grid(cfg)?, &options(cfg, policy, initial, false))?)
}

fn file_name(cfg: &ExperimentConfig, gamma: f64) -> String {
    format!("{}_gamma_{gamma}.{}", cfg.command.name(), cfg.format.extension())
}

fn record(label: &str, gamma: f64, convergence: Option<f64>, started: Instant, status: &str) -> RunRecord {
    RunRecord {
        label: label.to_string(),
        gamma,
        convergence,
        wall_time_s: started.elapsed().as_secs_f64(),
        status: status.to_string(),
    }
}

fn figure1(cfg: &ExperimentConfig, gamma: f64) -> Result<Table> {
    let pulse = pulse_for(cfg, gamma)?;
    let regime = pulse_regime(pulse.as_ref())?;
    let mut table = Table::new(&["t", "re_z", "im_z", "eta", "regime"]);
    for t in grid(cfg)?.times() {
        let z = radicand(pulse.as_ref(), t);
        table.push(vec![t.into(), z.re.into(), z.im.into(), regime.argument(z).into(), regime.label().into()]);
    }
    Ok(table)
}

fn figure2(cfg: &ExperimentConfig, gamma: f64) -> Result<Table> {
    let pulse = pulse_for(cfg, gamma)?;
    let grid = grid(cfg)?;
    let theta = mixing_angle_path(pulse.as_ref(), &grid)?;
    let mut table = Table::new(&["t", "re_theta", "im_theta"]);
    for (t, th) in grid.times().zip(&theta.theta) {
        table.push(vec![t.into(), th.re.into(), th.im.into()]);
    }
    Ok(table)
}

fn figure3(run: &ShortcutRun<f64>) -> Table {
    let a = &run.amplitudes;
    let mut table = Table::new(&["t", "c_plus_sq", "c_minus_sq", "g_plus_sq", "g_minus_sq"]);
    for (k, t) in run.grid.times().enumerate() {
        table.push(vec![
            t.into(),
            a.c_plus[k].norm_sqr().into(),
            a.c_minus[k].norm_sqr().into(),
            a.pop_phi_plus[k].into(),
            a.pop_phi_minus[k].into(),
        ]);
    }
    table
}

fn figure4(run: &ShortcutRun<f64>) -> Table {
    let a = &run.amplitudes;
    let mut table = Table::new(&["t", "p0", "p1", "p_sum", "p0_renorm", "p1_renorm"]);
    for (k, t) in run.grid.times().enumerate() {
        table.push(vec![
            t.into(),
            a.pop_bare_0[k].into(),
            a.pop_bare_1[k].into(),
            (a.pop_bare_0[k] + a.pop_bare_1[k]).into(),
            a.pop_bare_0_renorm[k].into(),
            a.pop_bare_1_renorm[k].into(),
        ]);
    }
    table
}

/// Runs one figure command over the configured decay rates.
fn figures(cfg: &ExperimentConfig, out: &mut OutputDir, runs: &mut Vec<RunRecord>) -> Result<String> {
    let mut report = String::new();
    for &gamma in &cfg.gammas {
        let started = Instant::now();
        let (table, convergence) = match cfg.command {
            Command::Figure1 => (figure1(cfg, gamma)?, None),
            Command::Figure2 => (figure2(cfg, gamma)?, None),
            Command::Figure3 | Command::Figure4 => {
                let run = shortcut(cfg, gamma, cfg.policies[0], cfg.initial_states[0])?;
                let table = if cfg.command == Command::Figure3 { figure3(&run) } else { figure4(&run) };
                (table, run.convergence)
            }
            Command::Verify | Command::Sweep => unreachable!("not a figure command"),
        };
        let name = file_name(cfg, gamma);
        let path = out.write(&name, &table.render(cfg.format))?;
        runs.push(record(cfg.command.name(), gamma, convergence, started, "ok"));
        let _ = writeln!(report, "wrote {} ({} rows)", path.display(), table.rows.len());
    }
    Ok(report)
}

struct Check {
    name: &'static str,
    value: Option<f64>,
    threshold: f64,
}

impl Check {
    fn status(&self) -> &'static str {
        match self.value {
            None => "skipped",
            Some(v) if v <= self.threshold => "pass",
            Some(_) => "fail",
        }
    }
}

fn verify_checks(cfg: &ExperimentConfig, gamma: f64) -> Result<(Vec<Check>, Option<f64>)> {
    use thresholds::*;
    let pulse = pulse_for(cfg, gamma)?;
    let grid = grid(cfg)?;
    let run = run_shortcut(pulse.as_ref(), &grid, &options(cfg, cfg.policies[0], cfg.initial_states[0], true))?;

    let (mut biorth, mut eigen) = (0.0f64, 0.0f64);
    for (k, t) in grid.times().enumerate() {
        let sys = two_level_system(run.theta.theta[k], run.eigs.e_plus[k], run.eigs.e_minus[k])?;
        biorth = biorth.max(sys.biorthogonality_defect());
        eigen = eigen.max(sys.eigen_residual(&hamiltonian(pulse.as_ref(), t)?));
    }
    let inverse = rotations(&run.theta, &run.gauges)?.iter().fold(0.0f64, |m, r| m.max(r.inverse_defect()));
    let g_plus_dev = run.amplitudes.pop_phi_plus.iter().fold(0.0f64, |m, p| m.max((p - 1.0).abs()));
    let check = |name, value, threshold| Check { name, value, threshold };
    let checks = vec![
        check("biorthogonality", Some(biorth), BIORTHOGONALITY),
        check("eigen_residual", Some(eigen), EIGEN_RESIDUAL),
        check("inverse_frame", Some(inverse), INVERSE_FRAME),
        check("nullification_residual", run.residual.as_ref().map(|r| r.max_abs_residual), NULLIFICATION),
        check("frame_blocked_entry", run.frame.as_ref().map(|f| f.max_blocked), FRAME_BLOCKED_ENTRY),
        check("max_abs_g_minus", Some(run.max_abs_g_minus()), G_MINUS),
        check("g_plus_sq_deviation", Some(g_plus_dev), G_PLUS_SQ_DEVIATION),
        check("closed_form_vs_ode", run.closed_form_deviation(), CLOSED_FORM),
        check("convergence", run.convergence, CONVERGENCE),
    ];
    Ok((checks, run.convergence))
}

fn verify(cfg: &ExperimentConfig, out: &mut OutputDir, runs: &mut Vec<RunRecord>) -> Result<(String, Option<CliError>)> {
    let mut report = String::new();
    let mut table = Table::new(&["gamma", "check", "value", "threshold", "status"]);
    let (mut failed, mut total, mut error) = (0, 0, None);
    for &gamma in &cfg.gammas {
        let started = Instant::now();
        match verify_checks(cfg, gamma) {
            Ok((checks, convergence)) => {
                for c in &checks {
                    let status = c.status();
                    total += usize::from(status != "skipped");
                    failed += usize::from(status == "fail");
                    let shown = c.value.map_or_else(|| "n/a".to_string(), |v| format!("{v:.3e}"));
                    let _ = writeln!(
                        report,
                        "{:<7} gamma={gamma:<6} {:<24} {shown:>10}  (threshold {:e})",
                        status.to_uppercase(),
                        c.name,
                        c.threshold
                    );
                    table.push(vec![gamma.into(), c.name.into(), c.value.into(), c.threshold.into(), status.into()]);
                }
                runs.push(record("verify", gamma, convergence, started, "ok"));
            }
            Err(e) => {
                let _ = writeln!(report, "ERROR   gamma={gamma:<6} {e}");
                table.push(vec![gamma.into(), "run".into(), Cell::Missing, Cell::Missing, format!("error: {e}").into()]);
                runs.push(record("verify", gamma, None, started, &format!("error: {e}")));
                error.get_or_insert(e);
            }
        }
    }
    let path = out.write(&format!("verify.{}", cfg.format.extension()), &table.render(cfg.format))?;
    let _ = writeln!(report, "{} of {total} checks passed; wrote {}", total - failed, path.display());
    let failure = match error {
        Some(e) => Some(e),
        None if failed > 0 => Some(CliError::ChecksFailed { failed, total }),
        None => None,
    };
    Ok((report, failure))
}

struct SweepRow {
    gamma: f64,
    policy: PolicyTag,
    initial: InitialTag,
    regime: String,
    result: std::result::Result<ShortcutRun<f64>, CliError>,
    seconds: f64,
}

fn sweep(cfg: &ExperimentConfig, out: &mut OutputDir, runs: &mut Vec<RunRecord>) -> Result<(String, Option<CliError>)> {
    let mut combos = Vec::new();
    for &gamma in &cfg.gammas {
        for &policy in &cfg.policies {
            for &initial in &cfg.initial_states {
                combos.push((gamma, policy, initial));
            }
        }
    }
    let rows: Vec<SweepRow> = combos
        .par_iter()
        .map(|&(gamma, policy, initial)| {
            let started = Instant::now();
            let regime = pulse_for(cfg, gamma)
                .ok()
                .and_then(|p| pulse_regime(p.as_ref()).ok())
                .map_or("degenerate", |r| r.label())
                .to_string();
            let result = shortcut(cfg, gamma, policy, initial);
            SweepRow { gamma, policy, initial, regime, result, seconds: started.elapsed().as_secs_f64() }
        })
        .collect();

    let mut table = Table::new(&[
        "gamma",
        "policy",
        "initial_state",
        "regime",
        "status",
        "g_plus_sq_final",
        "max_abs_g_minus",
        "p0_renorm_final",
        "max_residual",
        "convergence",
    ]);
    let mut report = String::new();
    let mut failed = 0;
    for row in &rows {
        let label = format!("{}/{}", row.policy, row.initial);
        let (status, cells, convergence) = match &row.result {
            Ok(run) => {
                let last = run.grid.steps();
                let a = &run.amplitudes;
                let cells: Vec<Cell> = vec![
                    a.pop_phi_plus[last].into(),
                    run.max_abs_g_minus().into(),
                    a.pop_bare_0_renorm[last].into(),
                    run.residual.as_ref().map(|r| r.max_abs_residual).into(),
                    run.convergence.into(),
                ];
                ("ok".to_string(), cells, run.convergence)
            }
            Err(e) => {
                failed += 1;
                (format!("error: {e}"), vec![Cell::Missing; 5], None)
            }
        };
        let _ = writeln!(report, "gamma={:<6} {label:<28} {:<14} {status}", row.gamma, row.regime);
        let mut cells_row: Vec<Cell> = vec![
            row.gamma.into(),
            row.policy.to_string().into(),
            row.initial.to_string().into(),
            row.regime.as_str().into(),
            status.as_str().into(),
        ];
        cells_row.extend(cells);
        table.push(cells_row);
        runs.push(RunRecord {
            label,
            gamma: row.gamma,
            convergence,
            wall_time_s: row.seconds,
            status,
        });
    }
    let path = out.write(&format!("sweep.{}", cfg.format.extension()), &table.render(cfg.format))?;
    let _ = writeln!(report, "{} of {} runs completed; wrote {}", rows.len() - failed, rows.len(), path.display());
    let failure = (failed > 0).then_some(CliError::RunsFailed { failed, total: rows.len() });
    Ok((report, failure))
}

/// Runs the configured command, writing data files and the manifest.
pub fn execute(cfg: &ExperimentConfig) -> Outcome {
    let mut out = match OutputDir::create(&cfg.out_dir) {
        Ok(out) => out,
        Err(e) => return Outcome { report: String::new(), failure: Some(e) },
    };
    let mut runs = Vec::new();
    let result = match cfg.command {
        Command::Verify => verify(cfg, &mut out, &mut runs),
        Command::Sweep => sweep(cfg, &mut out, &mut runs),
        _ => figures(cfg, &mut out, &mut runs).map(|report| (report, None)),
    };
    let (mut report, mut failure) = match result {
        Ok(pair) => pair,
        Err(e) => (String::new(), Some(e)),
    };
    match out.finish(cfg.echo(), runs) {
        Ok(path) => {
            let _ = writeln!(report, "manifest {}", path.display());
        }
        Err(e) => {
            failure.get_or_insert(e);
        }
    }
    Outcome { report, failure }
}
