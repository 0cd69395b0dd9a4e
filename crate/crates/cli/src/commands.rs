//! The subcommands. Each returns its tables, summary lines and per-point failures.

use std::f64::consts::PI;

use openbath::bath::{ddos, dissipation_range};
use openbath::driven::DrivenEmitter;
use openbath::green::{find_poles_with, time_domain, two_emitter_dynamics, Method, PoleOptions};
use openbath::model::{BandKind, Channel, QuasiboundState};
use openbath::oracle::{finite_size_alpha, subspace_dynamics};
use openbath::scaling::{classify_band, fit_exponent, full_band_pole, sweep, SweepRecord};
use openbath::twoexc::{find_pair_poles, pair_time_domain};
use openbath::Config;

use crate::config::RunFile;
use crate::output::{Cell, Table};
use crate::{CliError, Command, Settings};

/// Finite-size parameters `α` compared by `oracle-compare` when no ring sizes are given.
pub const DEFAULT_ALPHAS: [f64; 3] = [0.1, 0.9, 5.7];

/// Result of one subcommand.
#[derive(Debug, Default)]
pub struct Outcome {
    pub tables: Vec<Table>,
    pub summary: Vec<(String, String)>,
    pub failures: Vec<String>,
}

impl Outcome {
    fn note(&mut self, key: &str, value: impl ToString) {
        self.summary.push((key.to_string(), value.to_string()));
    }
}

pub fn run(command: Command, file: &RunFile, settings: &Settings) -> Result<Outcome, CliError> {
    let cfg = file.config()?;
    match command {
        Command::Ddos => ddos_table(&cfg, file),
        Command::Poles => poles(&cfg, file, settings),
        Command::Dynamics => dynamics(&cfg, file),
        Command::Pair => pair(&cfg, file),
        Command::G2 => g2(&cfg, file),
        Command::Sweep => sweep_table(&cfg, file),
        Command::Classify => classify(&cfg, file),
        Command::OracleCompare => oracle_compare(&cfg, file),
    }
}

fn ddos_table(cfg: &Config, file: &RunFile) -> Result<Outcome, CliError> {
    let n = file.run.points.unwrap_or(201);
    let (lo, hi) = dissipation_range(&cfg.bath);
    let method = match cfg.bath.band_kind {
        BandKind::Cosine3d | BandKind::CustomGrid => "histogram",
        _ => Method::ClosedForm.tag(),
    };
    let mut out = Outcome::default();
    let mut t = Table::new("ddos", &["gamma", "ddos", "method"]);
    for i in 0..n {
        let g = lo + (hi - lo) * (i as f64 + 0.5) / n as f64;
        t.push(vec![g.into(), ddos(g, &cfg.bath)?.into(), method.into()]);
    }
    out.note("band", cfg.bath.band_kind.name());
    out.note("gamma_min", lo);
    out.note("gamma_max", hi);
    out.tables.push(t);
    Ok(out)
}

fn pole_options(settings: &Settings) -> PoleOptions {
    PoleOptions {
        seed_grid: settings.seed_grid,
        residual_tol: settings.profile.residual_tol(),
        ..PoleOptions::default()
    }
}

fn channels(cfg: &Config, file: &RunFile) -> Vec<Channel> {
    match file.run.channel {
        Some(c) => vec![c],
        None if cfg.emitter.positions.len() == 2 => vec![Channel::Even, Channel::Odd],
        None => vec![Channel::Single],
    }
}

fn pole_row(x: f64, p: &QuasiboundState, method: &str) -> Vec<Cell> {
    vec![
        x.into(),
        p.energy().into(),
        p.decay().into(),
        p.residue.re.into(),
        p.residue.im.into(),
        p.channel.name().into(),
        method.into(),
    ]
}

const POLE_COLUMNS: [&str; 7] = ["x", "energy", "decay", "residue_re", "residue_im", "channel", "method"];

fn poles(cfg: &Config, file: &RunFile, settings: &Settings) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    let mut t = Table::new("poles", &POLE_COLUMNS);
    if file.run.sweep.is_some() {
        let records = run_sweep(cfg, file)?;
        out.note("variable", records[0].variable);
        for r in &records {
            if let Some(e) = &r.error {
                out.failures.push(format!("{} = {}: {e}", r.variable, r.value));
            }
            let method = r.method.map_or("none", |m| m.tag());
            for p in &r.poles {
                t.push(pole_row(r.value, p, method));
            }
        }
        fit_summary(&records, file, &mut out);
    } else if cfg.bath.band_kind.is_cosine_1d() {
        for ch in channels(cfg, file) {
            let report = find_poles_with(cfg, ch, pole_options(settings))?;
            for p in &report.poles {
                t.push(pole_row(cfg.bath.gamma, p, Method::ClosedForm.tag()));
            }
            out.note(&format!("poles_{}", ch.name()), report.poles.len());
            out.note(&format!("seed_failures_{}", ch.name()), report.failures.len());
        }
    } else {
        let p = full_band_pole(cfg)?;
        t.push(pole_row(cfg.bath.gamma, &p, Method::Quadrature.tag()));
    }
    out.tables.push(t);
    Ok(out)
}

fn dynamics(cfg: &Config, file: &RunFile) -> Result<Outcome, CliError> {
    let times = file.times()?;
    let mut out = Outcome::default();
    if cfg.emitter.positions.len() == 2 && file.run.channel.is_none() {
        let s = two_emitter_dynamics(cfg, &times)?;
        let mut t = Table::new(
            "dynamics",
            &["t", "population_1", "population_2", "correlation", "method"],
        );
        let (p2, corr) = (s.transferred(), s.correlation());
        for i in 0..times.len() {
            t.push(vec![
                times[i].into(),
                s.g11[i].norm_sqr().into(),
                p2[i].into(),
                corr[i].into(),
                Method::ResiduesCut.tag().into(),
            ]);
        }
        out.note("max_population_2", p2.iter().copied().fold(0.0, f64::max));
        out.tables.push(t);
        return Ok(out);
    }
    let ch = channels(cfg, file)[0];
    let s = time_domain(cfg, &times, ch)?;
    let mut t = Table::new("dynamics", &["t", "amplitude_re", "amplitude_im", "population", "method"]);
    for (tt, v) in s.times.iter().zip(&s.values) {
        t.push(vec![
            (*tt).into(),
            v.re.into(),
            v.im.into(),
            v.norm_sqr().into(),
            s.method.tag().into(),
        ]);
    }
    out.note("channel", ch.name());
    out.note("final_population", s.values.last().map_or(f64::NAN, |v| v.norm_sqr()));
    out.tables.push(t);
    Ok(out)
}

fn pair(cfg: &Config, file: &RunFile) -> Result<Outcome, CliError> {
    let times = file.times()?;
    let mut out = Outcome::default();
    let mut poles = Table::new("pair_poles", &POLE_COLUMNS);
    for p in find_pair_poles(cfg)? {
        poles.push(pole_row(cfg.bath.gamma, &p, Method::ClosedForm.tag()));
    }
    out.note("pair_poles", poles.rows.len());
    let d = pair_time_domain(cfg, &times)?;
    let mut t = Table::new(
        "pair_dynamics",
        &["t", "amplitude_re", "amplitude_im", "population", "method"],
    );
    for (tt, v) in d.times.iter().zip(&d.values) {
        t.push(vec![
            (*tt).into(),
            v.re.into(),
            v.im.into(),
            v.norm_sqr().into(),
            d.method.tag().into(),
        ]);
    }
    out.tables.push(poles);
    out.tables.push(t);
    Ok(out)
}

fn g2(cfg: &Config, file: &RunFile) -> Result<Outcome, CliError> {
    let taus = file.times()?;
    let driven = DrivenEmitter::new(cfg)?;
    let curve = driven.g2_curve(&taus)?;
    let mut out = Outcome::default();
    let mut t = Table::new("g2", &["tau", "g2", "method"]);
    for (tau, g) in taus.iter().zip(&curve) {
        t.push(vec![(*tau).into(), (*g).into(), Method::ClosedForm.tag().into()]);
    }
    out.note("omega_d", driven.setup.omega_d);
    out.note("g2_zero", driven.g2_zero()?);
    out.note("single_pole_decay", driven.setup.gap);
    out.note("weak_drive", driven.setup.weak_drive);
    out.tables.push(t);
    Ok(out)
}

fn run_sweep(cfg: &Config, file: &RunFile) -> Result<Vec<SweepRecord>, CliError> {
    let spec = file.sweep()?;
    let grid = spec.grid()?;
    sweep(cfg, spec.variable, &grid).map_err(|e| CliError::Config(e.to_string()))
}

fn fit_summary(records: &[SweepRecord], file: &RunFile, out: &mut Outcome) {
    let Ok(spec) = file.sweep() else { return };
    let y = spec.fit.as_deref().unwrap_or("decay");
    let window = spec.window.map(|w| (w[0], w[1]));
    match fit_exponent(records, "value", y, window) {
        Ok(fit) => {
            out.note("fit_field", y);
            out.note("fit_exponent", fit.exponent);
            out.note("fit_prefactor", fit.prefactor);
            out.note("fit_r_squared", fit.r_squared);
            out.note("fit_window", format!("{} {}", fit.window.0, fit.window.1));
            out.note("fit_points", fit.n_points);
        }
        Err(e) => out.note("fit_error", e),
    }
}

fn sweep_table(cfg: &Config, file: &RunFile) -> Result<Outcome, CliError> {
    let records = run_sweep(cfg, file)?;
    let mut out = Outcome::default();
    let mut t = Table::new(
        "sweep",
        &[
            "value",
            "energy",
            "decay",
            "pair_energy",
            "pair_decay",
            "g2_zero",
            "config_sha256",
            "error",
            "method",
        ],
    );
    let num = |x: Option<f64>| Cell::Num(x.unwrap_or(f64::NAN));
    for r in &records {
        if let Some(e) = &r.error {
            out.failures.push(format!("{} = {}: {e}", r.variable, r.value));
        }
        t.push(vec![
            r.value.into(),
            num(r.field("energy")),
            num(r.field("decay")),
            num(r.field("pair_energy")),
            num(r.field("pair_decay")),
            num(r.field("g2_zero")),
            r.config_hash.clone().into(),
            r.error.clone().unwrap_or_default().into(),
            r.method.map_or("none", |m| m.tag()).into(),
        ]);
    }
    out.note("variable", records[0].variable);
    out.note("points", records.len());
    fit_summary(&records, file, &mut out);
    out.tables.push(t);
    Ok(out)
}

fn classify(cfg: &Config, file: &RunFile) -> Result<Outcome, CliError> {
    let row = classify_band(&cfg.bath, cfg.emitter.delta)?;
    let mut out = Outcome::default();
    let mut t = Table::new(
        "classify",
        &["ratio", "gapped", "regime", "predicted_exponent", "formula", "method"],
    );
    let regime = serde_json::to_value(row.regime)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default();
    t.push(vec![
        row.ratio.into(),
        row.gapped.to_string().into(),
        regime.clone().into(),
        row.exponent.into(),
        row.formula.clone().into(),
        Method::ClosedForm.tag().into(),
    ]);
    out.note("d_over_mu", row.ratio);
    out.note("gapped", row.gapped);
    out.note("regime", regime);
    out.note("predicted_exponent", row.exponent);
    out.note("formula", &row.formula);
    if file.run.sweep.is_some() {
        let records = run_sweep(cfg, file)?;
        for r in &records {
            if let Some(e) = &r.error {
                out.failures.push(format!("{} = {}: {e}", r.variable, r.value));
            }
        }
        fit_summary(&records, file, &mut out);
    }
    out.tables.push(t);
    Ok(out)
}

fn oracle_compare(cfg: &Config, file: &RunFile) -> Result<Outcome, CliError> {
    let times = file.times()?;
    let sizes: Vec<usize> = match &file.run.nb {
        Some(v) => v.clone(),
        None => DEFAULT_ALPHAS
            .iter()
            .map(|a| {
                (2.0 * PI * PI * cfg.bath.gamma * a / cfg.emitter.omega)
                    .sqrt()
                    .round() as usize
            })
            .collect(),
    };
    let green = time_domain(cfg, &times, Channel::Single)?.populations();
    let mut columns = vec!["t".to_string(), "green".to_string()];
    let mut oracle = Vec::new();
    let mut out = Outcome::default();
    for &nb in &sizes {
        let p = subspace_dynamics(cfg, nb, 1, &times)?.populations();
        let dev = p
            .iter()
            .zip(&green)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        out.note(&format!("alpha_nb{nb}"), finite_size_alpha(cfg, nb));
        out.note(&format!("max_deviation_nb{nb}"), dev);
        columns.push(format!("oracle_nb{nb}"));
        oracle.push(p);
    }
    columns.push("method".into());
    let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
    let mut t = Table::new("oracle_compare", &cols);
    for i in 0..times.len() {
        let mut row: Vec<Cell> = vec![times[i].into(), green[i].into()];
        row.extend(oracle.iter().map(|p| Cell::Num(p[i])));
        row.push("residues+cut|oracle".into());
        t.push(row);
    }
    out.tables.push(t);
    Ok(out)
}
