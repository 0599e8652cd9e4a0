//! Figure scenarios and the single-point `custom` evaluation shared with sweeps.
//!
//! Temperatures, frequencies and times are in units of ω₀ (`ω₀ = 1`).

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use reservoir_sense::dynamics::{
    markovian_moments, markovian_steady_state, steady_state_moments, MomentSolver,
};
use reservoir_sense::oracle::{compare_states, oracle_trajectory, Deviation};
use reservoir_sense::qfi::{
    max_qfi, max_qfi_over_time, scaling_scan, theta_sweep, QfiEvaluator, QfiSettings, Target,
};
use reservoir_sense::{resource_count, Drive, Error, ProbeSpec, ReservoirSpec, Result, SimGrid};

use crate::config::{linspace, Config};
use crate::output::{Cell, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    Custom,
}

impl Scenario {
    pub const ALL: [Scenario; 7] = [
        Self::Fig2,
        Self::Fig3,
        Self::Fig4,
        Self::Fig5,
        Self::Fig6,
        Self::Fig7,
        Self::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Fig2 => "fig2",
            Self::Fig3 => "fig3",
            Self::Fig4 => "fig4",
            Self::Fig5 => "fig5",
            Self::Fig6 => "fig6",
            Self::Fig7 => "fig7",
            Self::Custom => "custom",
        }
    }

    /// Parameter defaults layered over the global ones.
    pub fn preset(self) -> &'static str {
        match self {
            // QFI dynamics at three temperatures, exact against Markovian
            Self::Fig2 => {
                "[reservoir]\ngamma = 3.0\ncutoff = 10.0\ntemperature = 1.0\n\
                 [probe]\nsqueeze = 2.5\n\
                 [scenario]\ntemperatures = [1.0, 3.0, 5.0]\n"
            }
            // coupling-angle optimisation
            Self::Fig3 => {
                "[reservoir]\ngamma = 3.0\ncutoff = 10.0\ntemperature = 1.0\n\
                 [probe]\nsqueeze = 2.5\n\
                 [grid]\nn_points = 201\n\
                 [scenario]\ntemperatures = [1.0, 3.0, 5.0]\nthetas = 33\n"
            }
            // SQL scaling with the squeezing ratio
            Self::Fig4 => {
                "[reservoir]\ngamma = 1.0\ncutoff = 10.0\ntemperature = 3.0\n\
                 [grid]\nn_points = 201\n\
                 [scenario]\nn_bar_max = 10.0\nn_bar_points = 11\nzetas = [0.0, 0.5, 1.0]\n"
            }
            // steady state against temperature
            Self::Fig5 => {
                "[reservoir]\ngamma = 3.0\ncutoff = 10.0\ntemperature = 1.0\n\
                 [probe]\nsqueeze = 0.5\n\
                 [scenario]\ntemperatures = [0.1, 0.2, 0.3, 0.5, 0.7, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0]\n"
            }
            // drive enhancement
            Self::Fig6 => {
                "[reservoir]\ngamma = 3.0\ncutoff = 10.0\ntemperature = 1.0\n\
                 [probe]\nsqueeze = 2.5\n\
                 [grid]\nn_points = 201\n\
                 [scenario]\ndrive_amplitudes = [0.0, 0.5, 1.0, 2.0, 5.0]\ndrive_frequencies = [0.5, 1.0, 2.0, 5.0]\n"
            }
            // validity of the Markovian moments
            Self::Fig7 => {
                "[reservoir]\ngamma = 1.0\ncutoff = 10.0\ntemperature = 1.0\n\
                 [probe]\nsqueeze = 1.0\n\
                 [scenario]\ntemperatures = [0.1, 0.3, 0.7, 1.6, 5.0]\n"
            }
            Self::Custom => "",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| format!("unknown scenario `{s}` (expected fig2..fig7 or custom)"))
    }
}

/// Tables and extra manifest entries produced by a run. Tables are pushed
/// before they are filled so that a failure leaves the rows computed so far.
#[derive(Debug, Default)]
pub struct RunOutput {
    pub tables: Vec<Table>,
    pub notes: Vec<(String, String)>,
}

impl RunOutput {
    fn add(&mut self, table: Table) -> usize {
        self.tables.push(table);
        self.tables.len() - 1
    }

    fn note(&mut self, key: &str, value: impl ToString) {
        self.notes.push((key.to_owned(), value.to_string()));
    }
}

fn invalid(name: &'static str, value: f64, reason: &'static str) -> Error {
    Error::InvalidParameter {
        name,
        value,
        reason,
    }
}

/// Checks every parameter a scenario will use before any work starts.
pub fn validate(scenario: Scenario, cfg: &Config) -> Result<()> {
    cfg.probe().validate()?;
    cfg.reservoir().validate()?;
    cfg.grid().validate()?;
    let d = cfg.qfi.delta_rel;
    if !(d > 0.0 && d < 0.1) {
        return Err(invalid("delta_rel", d, "must lie in (0, 0.1)"));
    }
    let sc = &cfg.scenario;
    if matches!(
        scenario,
        Scenario::Fig2 | Scenario::Fig3 | Scenario::Fig5 | Scenario::Fig7
    ) {
        if sc.temperatures.is_empty() {
            return Err(invalid(
                "temperatures",
                0.0,
                "need at least one temperature",
            ));
        }
        for &temp in &sc.temperatures {
            at_temperature(cfg, temp).validate()?;
        }
    }
    match scenario {
        Scenario::Fig3 if sc.thetas < 1 => Err(invalid("thetas", 0.0, "need at least one angle")),
        Scenario::Fig4 => {
            if sc.n_bar_points < 2 || sc.n_bar_max.is_nan() || sc.n_bar_max <= 0.0 {
                return Err(invalid(
                    "n_bar_points",
                    sc.n_bar_points as f64,
                    "need two or more points up to n_bar_max > 0",
                ));
            }
            match sc.zetas.iter().find(|z| !(0.0..=1.0).contains(*z)) {
                Some(&z) => Err(invalid("zetas", z, "must lie in [0, 1]")),
                None if sc.zetas.is_empty() => {
                    Err(invalid("zetas", 0.0, "need at least one ratio"))
                }
                None => Ok(()),
            }
        }
        Scenario::Fig6 => {
            if let Some(&a) = sc
                .drive_amplitudes
                .iter()
                .find(|a| !(**a >= 0.0 && a.is_finite()))
            {
                return Err(invalid("drive_amplitudes", a, "must be finite and >= 0"));
            }
            if let Some(&w) = sc
                .drive_frequencies
                .iter()
                .find(|w| !(**w > 0.0 && w.is_finite()))
            {
                return Err(invalid(
                    "drive_frequencies",
                    w,
                    "must be finite and positive",
                ));
            }
            if sc.drive_amplitudes.is_empty() || sc.drive_frequencies.is_empty() {
                return Err(invalid(
                    "drive_amplitudes",
                    0.0,
                    "need a non-empty drive grid",
                ));
            }
            Ok(())
        }
        _ => Ok(()),
    }
}

pub fn run(scenario: Scenario, cfg: &Config, out: &mut RunOutput) -> Result<()> {
    match scenario {
        Scenario::Fig2 => fig2(cfg, out),
        Scenario::Fig3 => fig3(cfg, out),
        Scenario::Fig4 => fig4(cfg, out),
        Scenario::Fig5 => fig5(cfg, out),
        Scenario::Fig6 => fig6(cfg, out),
        Scenario::Fig7 => fig7(cfg, out),
        Scenario::Custom => custom(cfg, out),
    }
}

fn at_temperature(cfg: &Config, temp: f64) -> ReservoirSpec {
    ReservoirSpec {
        temperature: temp,
        ..cfg.reservoir()
    }
}

/// Markovian QFI curve; NaN where the Markovian moments are unavailable (θ ≠ 0).
fn markov_curve(
    probe: &ProbeSpec,
    res: &ReservoirSpec,
    target: Target,
    grid: &SimGrid,
    s: QfiSettings,
) -> Result<Vec<f64>> {
    match QfiEvaluator::new(probe, res, target, s).and_then(|ev| ev.curve(grid)) {
        Ok(c) => Ok(c.values),
        Err(Error::Unsupported(msg)) => {
            log::warn!("Markovian curve skipped: {msg}");
            Ok(vec![f64::NAN; grid.n_points])
        }
        Err(e) => Err(e),
    }
}

fn markov_stationary(
    probe: &ProbeSpec,
    res: &ReservoirSpec,
    target: Target,
    s: QfiSettings,
) -> Result<f64> {
    match QfiEvaluator::new(probe, res, target, s).and_then(|ev| ev.stationary()) {
        Err(Error::Unsupported(_)) => Ok(f64::NAN),
        other => other,
    }
}

fn fig2(cfg: &Config, out: &mut RunOutput) -> Result<()> {
    let curves = out.add(
        Table::new(
            "fig2",
            &[
                "T",
                "t",
                "F_gamma",
                "F_Omega",
                "F_gamma_markov",
                "F_Omega_markov",
            ],
        )
        .with_curves("T", "t", "F_gamma"),
    );
    let summary = out.add(Table::new(
        "fig2_summary",
        &[
            "T",
            "target",
            "t_star",
            "F_star",
            "local_maxima",
            "on_boundary",
            "F_end",
            "F_inf",
            "F_inf_markov",
        ],
    ));
    let (probe, grid) = (cfg.probe(), cfg.grid());
    for &temp in &cfg.scenario.temperatures {
        let res = at_temperature(cfg, temp);
        let mut exact = Vec::new();
        let mut markov = Vec::new();
        for target in [Target::Gamma, Target::Omega] {
            let ev = QfiEvaluator::new(&probe, &res, target, cfg.exact_settings())?;
            let curve = ev.curve(&grid)?;
            let m = max_qfi(&curve.times, &curve.values, |t| ev.at(t))?;
            let f_inf = if probe.drive.is_none() {
                ev.stationary()?
            } else {
                f64::NAN
            };
            let f_inf_m = markov_stationary(&probe, &res, target, cfg.markov_settings())?;
            out.tables[summary].push(vec![
                temp.into(),
                target.name().into(),
                m.t_star.into(),
                m.f_star.into(),
                (m.local_maxima as f64).into(),
                m.on_boundary.into(),
                (*curve.values.last().expect("grid has points")).into(),
                f_inf.into(),
                f_inf_m.into(),
            ]);
            markov.push(markov_curve(
                &probe,
                &res,
                target,
                &grid,
                cfg.markov_settings(),
            )?);
            exact.push(curve);
        }
        for (k, &t) in exact[0].times.iter().enumerate() {
            out.tables[curves].push(vec![
                temp.into(),
                t.into(),
                exact[0].values[k].into(),
                exact[1].values[k].into(),
                markov[0][k].into(),
                markov[1][k].into(),
            ]);
        }
    }
    Ok(())
}

fn fig3(cfg: &Config, out: &mut RunOutput) -> Result<()> {
    let target = cfg.target();
    let rows = out.add(
        Table::new("fig3", &["T", "theta", "maxF", "t_star", "on_boundary"])
            .with_curves("T", "theta", "maxF"),
    );
    let summary = out.add(Table::new(
        "fig3_summary",
        &["T", "best_theta", "best_maxF", "theta0_maxF", "margin"],
    ));
    let thetas = linspace(0.0, PI, cfg.scenario.thetas.max(1));
    for &temp in &cfg.scenario.temperatures {
        let res = at_temperature(cfg, temp);
        let sweep = theta_sweep(
            &cfg.probe(),
            &res,
            target,
            &thetas,
            &cfg.grid(),
            cfg.exact_settings(),
        )?;
        for (th, m) in sweep.thetas.iter().zip(&sweep.maxima) {
            out.tables[rows].push(vec![
                temp.into(),
                (*th).into(),
                m.f_star.into(),
                m.t_star.into(),
                m.on_boundary.into(),
            ]);
        }
        let base = sweep.maxima[0].f_star;
        out.tables[summary].push(vec![
            temp.into(),
            sweep.best_theta.into(),
            sweep.best.into(),
            base.into(),
            (sweep.best / base - 1.0).into(),
        ]);
    }
    out.note("scenario.target_used", target.name());
    Ok(())
}

fn fig4(cfg: &Config, out: &mut RunOutput) -> Result<()> {
    let target = cfg.target();
    let rows = out.add(
        Table::new("fig4", &["n_bar", "zeta", "maxF", "t_star"])
            .with_curves("zeta", "n_bar", "maxF"),
    );
    let fits_at = out.add(Table::new(
        "fig4_fit",
        &["zeta", "slope", "intercept", "r_squared"],
    ));
    let n_bars = linspace(
        0.0,
        cfg.scenario.n_bar_max,
        cfg.scenario.n_bar_points.max(2),
    );
    let fits = scaling_scan(
        &cfg.probe(),
        &cfg.reservoir(),
        target,
        &n_bars,
        &cfg.scenario.zetas,
        &cfg.grid(),
        cfg.exact_settings(),
    )?;
    // zeta-major, so each curve is a contiguous block
    for fit in &fits {
        for (n, m) in fit.n_bar.iter().zip(&fit.maxima) {
            out.tables[rows].push(vec![
                (*n).into(),
                fit.zeta.into(),
                m.f_star.into(),
                m.t_star.into(),
            ]);
        }
        out.tables[fits_at].push(vec![
            fit.zeta.into(),
            fit.slope.into(),
            fit.intercept.into(),
            fit.r_squared.into(),
        ]);
    }
    out.note("scenario.target_used", target.name());
    Ok(())
}

fn fig5(cfg: &Config, out: &mut RunOutput) -> Result<()> {
    let target = cfg.target();
    let rows = out.add(Table::new(
        "fig5",
        &[
            "T",
            "sxx_inf",
            "spp_inf",
            "F_inf_exact",
            "F_inf_markov",
            "sxp_inf",
            "sxx_markov",
            "spp_markov",
        ],
    ));
    let probe = cfg.probe();
    for &temp in &cfg.scenario.temperatures {
        let res = at_temperature(cfg, temp);
        let exact = steady_state_moments(&probe, &res, cfg.solver_options())?;
        let markov_sigma = match markovian_steady_state(&probe, &res, cfg.markov_noise()) {
            Ok(m) => [m.sigma[(0, 0)], m.sigma[(1, 1)]],
            Err(Error::Unsupported(_)) => [f64::NAN; 2],
            Err(e) => return Err(e),
        };
        let f_exact =
            QfiEvaluator::new(&probe, &res, target, cfg.exact_settings())?.stationary()?;
        let f_markov = markov_stationary(&probe, &res, target, cfg.markov_settings())?;
        out.tables[rows].push(vec![
            temp.into(),
            exact.sigma[(0, 0)].into(),
            exact.sigma[(1, 1)].into(),
            f_exact.into(),
            f_markov.into(),
            exact.sigma[(0, 1)].into(),
            markov_sigma[0].into(),
            markov_sigma[1].into(),
        ]);
    }
    out.note("scenario.target_used", target.name());
    Ok(())
}

fn fig6(cfg: &Config, out: &mut RunOutput) -> Result<()> {
    let target = cfg.target();
    let rows = out.add(Table::new(
        "fig6",
        &["F0", "omega_f", "deltaF", "maxF", "t_star", "on_boundary"],
    ));
    let (res, grid, settings) = (cfg.reservoir(), cfg.grid(), cfg.exact_settings());
    let bare_probe = cfg.probe().with_drive(None);
    let bare = max_qfi_over_time(&bare_probe, &res, target, &grid, settings)?;
    let points: Vec<(f64, f64)> = cfg
        .scenario
        .drive_amplitudes
        .iter()
        .flat_map(|&a| cfg.scenario.drive_frequencies.iter().map(move |&w| (a, w)))
        .collect();
    let maxima: Vec<Result<_>> = points
        .par_iter()
        .map(|&(amplitude, frequency)| {
            let p = bare_probe.with_drive(Some(Drive {
                amplitude,
                frequency,
            }));
            max_qfi_over_time(&p, &res, target, &grid, settings)
        })
        .collect();
    for (&(a, w), m) in points.iter().zip(maxima) {
        let m = m?;
        out.tables[rows].push(vec![
            a.into(),
            w.into(),
            (m.f_star - bare.f_star).into(),
            m.f_star.into(),
            m.t_star.into(),
            m.on_boundary.into(),
        ]);
    }
    // the drive only shifts the means, so covariances must agree exactly
    let strongest = points
        .iter()
        .copied()
        .max_by(|x, y| x.0.total_cmp(&y.0))
        .unwrap_or((1.0, 1.0));
    let driven = MomentSolver::new(
        &bare_probe.with_drive(Some(Drive {
            amplitude: strongest.0.max(1.0),
            frequency: strongest.1,
        })),
        &res,
        cfg.solver_options(),
    )?;
    let undriven = MomentSolver::new(&bare_probe, &res, cfg.solver_options())?;
    let mut diff: f64 = 0.0;
    for t in grid.times() {
        let (a, b) = (driven.state_at(t)?, undriven.state_at(t)?);
        diff = diff.max((a.sigma - b.sigma).abs().max());
    }
    out.note("scenario.target_used", target.name());
    out.note("check.drive_covariance_max_diff", diff);
    Ok(())
}

fn fig7(cfg: &Config, out: &mut RunOutput) -> Result<()> {
    let rows = out.add(
        Table::new(
            "fig7",
            &["T", "t", "sxx", "sxx_markov", "spp", "spp_markov"],
        )
        .with_curves("T", "t", "sxx"),
    );
    let summary = out.add(Table::new("fig7_summary", &["T", "max_rel_dev_sxx"]));
    let (probe, grid) = (cfg.probe(), cfg.grid());
    for &temp in &cfg.scenario.temperatures {
        let res = at_temperature(cfg, temp);
        let exact = MomentSolver::new(&probe, &res, cfg.solver_options())?.trajectory(&grid)?;
        let markov = exact
            .times
            .par_iter()
            .map(|&t| markovian_moments(&probe, &res, t, cfg.markov_noise()))
            .collect::<Result<Vec<_>>>()?;
        let mut worst: f64 = 0.0;
        for ((t, e), m) in exact.times.iter().zip(&exact.states).zip(&markov) {
            let (sxx, sxx_m) = (e.sigma[(0, 0)], m.sigma[(0, 0)]);
            worst = worst.max((sxx_m - sxx).abs() / sxx);
            out.tables[rows].push(vec![
                temp.into(),
                (*t).into(),
                sxx.into(),
                sxx_m.into(),
                e.sigma[(1, 1)].into(),
                m.sigma[(1, 1)].into(),
            ]);
        }
        out.tables[summary].push(vec![temp.into(), worst.into()]);
    }
    Ok(())
}

/// Columns of a single-point evaluation, shared by `run custom` and sweeps.
pub const POINT_COLUMNS: [&str; 12] = [
    "n_bar",
    "zeta",
    "maxF",
    "t_star",
    "on_boundary",
    "F_end",
    "F_inf",
    "sxx_end",
    "sxp_end",
    "spp_end",
    "dx_end",
    "dp_end",
];

/// `max_t F`, late-time moments and the stationary QFI for one parameter set.
pub fn evaluate_point(cfg: &Config) -> Result<Vec<Cell>> {
    let (probe, res, grid) = (cfg.probe(), cfg.reservoir(), cfg.grid());
    probe.validate()?;
    res.validate()?;
    grid.validate()?;
    let ev = QfiEvaluator::new(&probe, &res, cfg.target(), cfg.exact_settings())?;
    let curve = ev.curve(&grid)?;
    let m = max_qfi(&curve.times, &curve.values, |t| ev.at(t))?;
    let end = MomentSolver::new(&probe, &res, cfg.solver_options())?.state_at(grid.t_max)?;
    let f_inf = if probe.drive.is_none() {
        ev.stationary()?
    } else {
        f64::NAN
    };
    let rc = resource_count(&probe);
    Ok(vec![
        rc.n_bar.into(),
        rc.zeta.into(),
        m.f_star.into(),
        m.t_star.into(),
        m.on_boundary.into(),
        (*curve.values.last().expect("grid has points")).into(),
        f_inf.into(),
        end.sigma[(0, 0)].into(),
        end.sigma[(0, 1)].into(),
        end.sigma[(1, 1)].into(),
        end.d[0].into(),
        end.d[1].into(),
    ])
}

fn custom(cfg: &Config, out: &mut RunOutput) -> Result<()> {
    let point = out.add(Table::new("custom", &POINT_COLUMNS));
    let curve_at = out.add(Table::new(
        "custom_curve",
        &["t", "dx", "dp", "sxx", "sxp", "spp", "F"],
    ));
    out.tables[point].push(evaluate_point(cfg)?);
    let (probe, res, grid) = (cfg.probe(), cfg.reservoir(), cfg.grid());
    let traj = MomentSolver::new(&probe, &res, cfg.solver_options())?.trajectory(&grid)?;
    let f = QfiEvaluator::new(&probe, &res, cfg.target(), cfg.exact_settings())?.curve(&grid)?;
    for ((t, s), fv) in traj.times.iter().zip(&traj.states).zip(&f.values) {
        out.tables[curve_at].push(vec![
            (*t).into(),
            s.d[0].into(),
            s.d[1].into(),
            s.sigma[(0, 0)].into(),
            s.sigma[(0, 1)].into(),
            s.sigma[(1, 1)].into(),
            (*fv).into(),
        ]);
    }
    out.note("scenario.target_used", cfg.target().name());
    Ok(())
}

/// Oracle check of the analytic moments for the base parameter set on
/// `oracle.steps` uniform steps up to `grid.t_max`.
pub fn verify(cfg: &Config) -> Result<Deviation> {
    let (probe, res) = (cfg.probe(), cfg.reservoir());
    let steps = cfg.oracle.steps.max(1);
    let dt = cfg.grid.t_max / steps as f64;
    let reference = oracle_trajectory(&probe, &res, cfg.oracle(), dt, steps)?;
    let solver = MomentSolver::new(&probe, &res, cfg.solver_options())?;
    let analytic = (0..=steps)
        .into_par_iter()
        .map(|k| solver.state_at(k as f64 * dt))
        .collect::<Result<Vec<_>>>()?;
    Ok(compare_states(&reference, &analytic))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ConfigLayers;

    fn small(scenario: Scenario, extra: &[(&str, &str)]) -> Config {
        let mut layers = ConfigLayers::new(scenario);
        layers.set_text("t_max", "2.0").unwrap();
        layers.set_text("n_points", "21").unwrap();
        for (k, v) in extra {
            layers.set_text(k, v).unwrap();
        }
        layers.resolve().unwrap()
    }

    #[test]
    fn validation_catches_bad_axes() {
        assert!(validate(
            Scenario::Fig4,
            &small(Scenario::Fig4, &[("zetas", "[0.0, 1.5]")])
        )
        .is_err());
        assert!(validate(
            Scenario::Fig6,
            &small(Scenario::Fig6, &[("drive_frequencies", "[0.0]")])
        )
        .is_err());
        assert!(validate(
            Scenario::Fig2,
            &small(Scenario::Fig2, &[("delta_rel", "0.5")])
        )
        .is_err());
        for sc in Scenario::ALL {
            validate(sc, &small(sc, &[])).unwrap();
        }
    }

    #[test]
    fn names_round_trip() {
        for sc in Scenario::ALL {
            assert_eq!(sc.name().parse::<Scenario>().unwrap(), sc);
            assert!(toml::from_str::<toml::Table>(sc.preset()).is_ok());
        }
        assert!("fig9".parse::<Scenario>().is_err());
    }

    #[test]
    fn presets_carry_reference_parameters() {
        let fig4 = ConfigLayers::new(Scenario::Fig4).resolve().unwrap();
        assert_eq!(
            (
                fig4.reservoir.gamma,
                fig4.reservoir.cutoff,
                fig4.reservoir.temperature
            ),
            (1.0, 10.0, 3.0)
        );
        let fig2 = ConfigLayers::new(Scenario::Fig2).resolve().unwrap();
        assert_eq!((fig2.reservoir.gamma, fig2.reservoir.cutoff), (3.0, 10.0));
        assert_eq!(fig2.scenario.temperatures, vec![1.0, 3.0, 5.0]);
    }

    #[test]
    fn fig2_curves_start_at_zero() {
        let cfg = small(Scenario::Fig2, &[("temperatures", "[3.0]")]);
        let mut out = RunOutput::default();
        run(Scenario::Fig2, &cfg, &mut out).unwrap();
        let t = &out.tables[0];
        assert_eq!(t.rows.len(), 21);
        assert_eq!(t.rows[0][2], Cell::Num(0.0));
        assert_eq!(t.rows[0][3], Cell::Num(0.0));
    }

    #[test]
    fn fig6_zero_amplitude_gives_zero_gain() {
        let cfg = small(
            Scenario::Fig6,
            &[
                ("drive_amplitudes", "[0.0, 1.0]"),
                ("drive_frequencies", "[2.0]"),
            ],
        );
        let mut out = RunOutput::default();
        run(Scenario::Fig6, &cfg, &mut out).unwrap();
        assert_eq!(out.tables[0].rows[0][2], Cell::Num(0.0));
        let diff = out
            .notes
            .iter()
            .find(|(k, _)| k == "check.drive_covariance_max_diff")
            .unwrap();
        assert_eq!(diff.1, "0");
    }

    #[test]
    fn failure_keeps_rows_already_computed() {
        // the second temperature is rejected by the library mid-run
        let cfg = small(Scenario::Fig5, &[("temperatures", "[1.0, 0.001]")]);
        assert!(validate(Scenario::Fig5, &cfg).is_err());
        let mut out = RunOutput::default();
        assert!(run(Scenario::Fig5, &cfg, &mut out).is_err());
        assert_eq!(out.tables[0].rows.len(), 1);
    }
}
