//! Subcommand drivers. Each returns a table; numerical failures truncate the
//! table with a marker instead of discarding finished rows.

use collective_ramsey::analytic::{closed_form_sensitivity, Branch, TwoAtomParams};
use collective_ramsey::ramsey::{sensitivity_from_fringe, FringeEngine, SensitivityOptions};
use collective_ramsey::spectral::mean_decay_rate;
use collective_ramsey::{
    decompose, independent_sensitivity, pair_couplings, population_histogram, sensitivity, PulseSequence,
    SensitivityResult,
};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::table::Table;
use crate::CliError;

/// Output scaling: `sqrt(N) / Gamma` for sensitivities, `Gamma` for times.
#[derive(Debug, Clone, Copy)]
pub struct Units {
    raw: bool,
    gamma: f64,
    sqrt_n: f64,
}

impl Units {
    pub fn new(raw: bool, gamma: f64, n: usize) -> Self {
        Self {
            raw,
            gamma,
            sqrt_n: (n as f64).sqrt(),
        }
    }

    fn time(&self, t: f64) -> f64 {
        if self.raw {
            t
        } else {
            t * self.gamma
        }
    }

    fn rate(&self, r: f64) -> f64 {
        if self.raw {
            r
        } else {
            r / self.gamma
        }
    }

    fn sensitivity(&self, d: f64) -> f64 {
        if self.raw {
            d
        } else {
            d * self.sqrt_n / self.gamma
        }
    }

    fn pick(&self, normalized: &'static str, raw: &'static str) -> &'static str {
        if self.raw {
            raw
        } else {
            normalized
        }
    }
}

fn numerical(e: collective_ramsey::Error) -> CliError {
    CliError::Numerical(e)
}

fn config(e: collective_ramsey::Error) -> CliError {
    CliError::Config(e.to_string())
}

pub fn couplings(cfg: &RunConfig) -> Result<Table, CliError> {
    let section = cfg.section(&cfg.couplings, "couplings")?;
    let rs = section.r.values("couplings.r")?;
    let mut table = Table::new(vec!["r_per_lambda", "gamma12_per_gamma", "omega12_per_gamma"]);
    for r in rs {
        let (g, o) = pair_couplings(r, section.cos_theta).map_err(config)?;
        table.push(vec![r.into(), g.into(), o.into()]);
    }
    Ok(table)
}

pub fn sensitivity_sweep(cfg: &RunConfig, raw: bool) -> Result<Table, CliError> {
    let c = cfg.couplings()?;
    let n = c.len();
    let section = cfg.section(&cfg.sensitivity, "sensitivity")?;
    section.validate_schemes(n)?;
    let taus = section.tau.times("sensitivity.tau")?;
    let opts = section.options()?;
    let method = cfg.integrator.method()?;
    let seqs = section
        .schemes
        .iter()
        .map(|&m| PulseSequence::new(n, m))
        .collect::<collective_ramsey::Result<Vec<_>>>()
        .map_err(config)?;
    let engine = FringeEngine::with_method(&c, method).map_err(numerical)?;
    let results = sweep(&engine, &seqs, &taus, &opts);

    let u = Units::new(raw, c.gamma(), n);
    let mut table = Table::new(vec![
        u.pick("tau_gamma", "tau"),
        "m",
        u.pick("delta_omega_sqrt_n_per_gamma", "delta_omega"),
        u.pick("omega_star_per_gamma", "omega_star"),
        "boundary",
        u.pick("independent_sqrt_n_per_gamma", "independent"),
    ]);
    for (i, r) in results.into_iter().enumerate() {
        let (t, m) = (taus[i / seqs.len()], section.schemes[i % seqs.len()]);
        match r {
            Ok(r) => table.push(vec![
                u.time(t).into(),
                m.into(),
                u.sensitivity(r.delta_omega).into(),
                u.rate(r.omega_star).into(),
                r.boundary.into(),
                u.sensitivity(independent_sensitivity(n, c.gamma(), t)).into(),
            ]),
            Err(e) => {
                table.fail(format!("tau = {t}, m = {m}: {e}"));
                break;
            }
        }
    }
    Ok(table)
}

/// Sensitivities in `[tau][sequence]` order. The shared-propagator grid path
/// runs first; if it fails, points are evaluated one by one so the failure
/// can be located.
fn sweep(
    engine: &FringeEngine,
    seqs: &[PulseSequence],
    taus: &[f64],
    opts: &SensitivityOptions,
) -> Vec<collective_ramsey::Result<SensitivityResult>> {
    match engine.fringes(seqs, taus) {
        Ok(grid) => (0..taus.len())
            .flat_map(|t| (0..seqs.len()).map(move |s| (t, s)))
            .collect::<Vec<_>>()
            .par_iter()
            .map(|&(t, s)| sensitivity_from_fringe(&grid[s][t], opts))
            .collect(),
        Err(e) => {
            log::warn!("grid evaluation failed ({e}); retrying point by point");
            (0..taus.len())
                .flat_map(|t| (0..seqs.len()).map(move |s| (t, s)))
                .collect::<Vec<_>>()
                .par_iter()
                .map(|&(t, s)| {
                    engine
                        .fringe(&seqs[s], taus[t])
                        .and_then(|f| sensitivity_from_fringe(&f, opts))
                })
                .collect()
        }
    }
}

pub fn two_atom(cfg: &RunConfig, raw: bool) -> Result<Table, CliError> {
    let section = cfg.section(&cfg.two_atom, "two_atom")?;
    let p = TwoAtomParams::from_separation(section.separation, section.gamma).map_err(config)?;
    let c = p.couplings().map_err(config)?;
    let taus = section.tau.times("two_atom.tau")?;
    let u = Units::new(raw, p.gamma, 2);

    let rows: Vec<collective_ramsey::Result<[f64; 4]>> = taus
        .par_iter()
        .map(|&t| {
            let mut row = [0.0; 4];
            for (i, b) in [Branch::S, Branch::A].into_iter().enumerate() {
                row[i] = closed_form_sensitivity(&p, t, b)?;
                row[i + 2] = sensitivity(&c, &b.sequence(), t)?.delta_omega;
            }
            Ok(row)
        })
        .collect();

    let mut table = Table::new(vec![
        u.pick("tau_gamma", "tau"),
        u.pick("analytic_s_sqrt_n_per_gamma", "analytic_s"),
        u.pick("analytic_a_sqrt_n_per_gamma", "analytic_a"),
        u.pick("numeric_s_sqrt_n_per_gamma", "numeric_s"),
        u.pick("numeric_a_sqrt_n_per_gamma", "numeric_a"),
        "rel_dev_s",
        "rel_dev_a",
    ]);
    let mut ratios = [Vec::new(), Vec::new()];
    for (&t, r) in taus.iter().zip(rows) {
        match r {
            Ok([cs, ca, ns, na]) => {
                ratios[0].push(ns / cs);
                ratios[1].push(na / ca);
                table.push(vec![
                    u.time(t).into(),
                    u.sensitivity(cs).into(),
                    u.sensitivity(ca).into(),
                    u.sensitivity(ns).into(),
                    u.sensitivity(na).into(),
                    (ns / cs - 1.0).into(),
                    (na / ca - 1.0).into(),
                ]);
            }
            Err(e) => {
                table.fail(format!("tau = {t}: {e}"));
                break;
            }
        }
    }
    for (name, r) in ["S", "A"].iter().zip(&ratios) {
        if !r.is_empty() {
            let mean = r.iter().sum::<f64>() / r.len() as f64;
            let spread = r.iter().map(|x| (x / mean - 1.0).abs()).fold(0.0, f64::max);
            log::info!("branch {name}: numeric / closed form = {mean:.6} (spread {spread:.3e})");
        }
    }
    Ok(table)
}

pub fn dicke_spectrum(cfg: &RunConfig, raw: bool) -> Result<Table, CliError> {
    let c = cfg.couplings()?;
    let n = c.len();
    let section = cfg.section(&cfg.spectrum, "spectrum")?;
    if section.m == 0 || section.m > n / 2 {
        return Err(CliError::Config(format!(
            "spectrum.m must be in 1..={} for N = {n}",
            n / 2
        )));
    }
    let symmetric = PulseSequence::symmetric(n)
        .and_then(|s| s.prepared_state())
        .map_err(config)?;
    let asymmetric = PulseSequence::new(n, section.m)
        .and_then(|s| s.prepared_state())
        .map_err(config)?;
    let d = decompose(&c, section.detuning).map_err(numerical)?;
    if !d.is_simultaneous() {
        log::warn!(
            "Hamiltonian and dissipator do not commute (norm {:.3e}); rates are diagonal expectations only",
            d.commutator_norm()
        );
    }
    let ws = population_histogram(&d, &symmetric).map_err(numerical)?;
    let wa = population_histogram(&d, &asymmetric).map_err(numerical)?;
    let u = Units::new(raw, c.gamma(), n);
    log::info!(
        "mean decay rate: symmetric {:.6}, m = {} {:.6}",
        u.rate(mean_decay_rate(&d, &symmetric).map_err(numerical)?),
        section.m,
        u.rate(mean_decay_rate(&d, &asymmetric).map_err(numerical)?)
    );

    let mut table = Table::new(vec![
        "index",
        "excitations",
        u.pick("rate_per_gamma", "rate"),
        "w_symmetric",
        "w_asymmetric",
    ]);
    for (j, s) in d.states().iter().enumerate() {
        table.push(vec![
            j.into(),
            s.excitations.into(),
            u.rate(s.decay_rate).into(),
            ws[j].into(),
            wa[j].into(),
        ]);
    }
    Ok(table)
}
