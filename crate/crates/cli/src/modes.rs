//! Sweep evaluation for every output mode.

use rayon::prelude::*;
use subnyq_core::oracle::{block_idrf_oracle, finite_window_mmse_averaged};
use subnyq_core::sampling::{maximal_af_sets, mmse_multi, mmse_optimal, mmse_single, optimal_sampler, SamplerSpec};
use subnyq_core::spectra::snr_ratio;
use subnyq_core::waterfill::{
    d_dagger, d_star_lower_bound, drf_sampled_multi, drf_sampled_optimal, drf_sampled_single, idrf_stationary,
    polyphase_lower_bound, WaterfillSolution,
};
use subnyq_core::{ComplexGainProfile, RateSpec};

use crate::config::{ExperimentConfig, Filters};
use crate::table::{Cell, Table};
use crate::{CliError, Mode};

pub const DRF_HEADER: [&str; 7] = [
    "fs",
    "P",
    "rate_bits_per_time",
    "theta",
    "distortion",
    "mmse_part",
    "lossy_part",
];

/// Evaluates `f` on every point in parallel and concatenates the rows in
/// input order; the first failing point (in input order) wins.
pub fn sweep<T, F>(points: &[T], f: F) -> Result<Vec<Vec<Cell>>, CliError>
where
    T: Sync,
    F: Fn(&T) -> Result<Vec<Vec<Cell>>, CliError> + Sync + Send,
{
    let results: Vec<_> = points.par_iter().map(f).collect();
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    Ok(rows)
}

fn grid_points(cfg: &ExperimentConfig) -> Vec<(f64, RateSpec)> {
    cfg.fs
        .iter()
        .flat_map(|&fs| cfg.rates.iter().map(move |&r| (fs, r)))
        .collect()
}

fn single_filter(cfg: &ExperimentConfig, fs: f64) -> Result<ComplexGainProfile, CliError> {
    if cfg.branches != 1 {
        return Err(CliError::Config(
            "sampler.branches: this mode needs a single-branch sampler".into(),
        ));
    }
    Ok(match &cfg.filters {
        Filters::AllPass => ComplexGainProfile::all_pass(),
        Filters::Optimal => optimal_sampler(&cfg.source, &cfg.noise, fs, 1)?.branches()[0].clone(),
        Filters::Supports(sets) => ComplexGainProfile::indicator(&sets[0]),
    })
}

fn bank(cfg: &ExperimentConfig, fs: f64) -> Result<SamplerSpec, CliError> {
    Ok(match &cfg.filters {
        Filters::AllPass => SamplerSpec::new(fs, vec![ComplexGainProfile::all_pass(); cfg.branches])?,
        Filters::Optimal => optimal_sampler(&cfg.source, &cfg.noise, fs, cfg.branches)?,
        Filters::Supports(sets) => SamplerSpec::new(fs, sets.iter().map(ComplexGainProfile::indicator).collect())?,
    })
}

fn drf_row(fs: f64, p: Cell, rate: f64, s: &WaterfillSolution) -> Vec<Cell> {
    vec![
        Cell::Num(fs),
        p,
        Cell::Num(rate),
        Cell::Num(s.theta),
        Cell::Num(s.distortion),
        Cell::Num(s.mmse_part),
        Cell::Num(s.lossy_part),
    ]
}

pub fn run(mode: Mode, cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let (sx, sn) = (&cfg.source, &cfg.noise);
    let p = cfg.branches;
    match mode {
        Mode::Mmse => {
            let rows = sweep(&cfg.fs, |&fs| {
                let m = match (&cfg.filters, p) {
                    (Filters::Optimal, _) => mmse_optimal(sx, sn, fs, p)?.0,
                    (_, 1) => mmse_single(sx, sn, &single_filter(cfg, fs)?, fs)?,
                    _ => mmse_multi(sx, sn, &bank(cfg, fs)?, cfg.grid)?,
                };
                Ok(vec![vec![Cell::Num(fs), Cell::Int(p), Cell::Num(m)]])
            })?;
            Ok(Table {
                header: vec!["fs", "P", "mmse"],
                rows,
            })
        }
        Mode::Drf | Mode::DrfOptimal => {
            cfg.require_rates()?;
            let rows = sweep(&grid_points(cfg), |&(fs, rate)| {
                let r = rate.to_bits_per_time(fs)?;
                let s = match (mode, &cfg.filters, p) {
                    (Mode::DrfOptimal, _, _) | (_, Filters::Optimal, _) => drf_sampled_optimal(sx, sn, fs, p, r)?,
                    (_, _, 1) => drf_sampled_single(sx, sn, &single_filter(cfg, fs)?, fs, r)?,
                    _ => drf_sampled_multi(sx, sn, &bank(cfg, fs)?, r, cfg.grid)?,
                };
                Ok(vec![drf_row(fs, Cell::Int(p), r, &s)])
            })?;
            Ok(Table {
                header: DRF_HEADER.to_vec(),
                rows,
            })
        }
        Mode::DDagger => {
            cfg.require_rates()?;
            let rows = sweep(&grid_points(cfg), |&(fs, rate)| {
                let r = rate.to_bits_per_time(fs)?;
                Ok(vec![drf_row(
                    fs,
                    Cell::Text("inf".into()),
                    r,
                    &d_dagger(sx, sn, fs, r)?,
                )])
            })?;
            Ok(Table {
                header: DRF_HEADER.to_vec(),
                rows,
            })
        }
        Mode::AfSets => {
            let ratio = snr_ratio(sx, sn)?;
            let rows = sweep(&cfg.fs, |&fs| {
                let sets = maximal_af_sets(&ratio, fs, p)?;
                let mut rows = Vec::new();
                for (b, set) in sets.iter().enumerate() {
                    for (lo, hi) in set.pairs() {
                        rows.push(vec![
                            Cell::Num(fs),
                            Cell::Int(p),
                            Cell::Int(b + 1),
                            Cell::Num(lo),
                            Cell::Num(hi),
                        ]);
                    }
                }
                Ok(rows)
            })?;
            Ok(Table {
                header: vec!["fs", "P", "branch", "lo", "hi"],
                rows,
            })
        }
        Mode::Bounds => {
            cfg.require_rates()?;
            if cfg.oracle.offsets < 8 {
                return Err(CliError::Config(
                    "oracle.offsets: the polyphase bound needs at least 8".into(),
                ));
            }
            let rows = sweep(&grid_points(cfg), |&(fs, rate)| {
                let r = rate.to_bits_per_time(fs)?;
                let h = single_filter(cfg, fs)?;
                Ok(vec![vec![
                    Cell::Num(fs),
                    Cell::Num(r),
                    Cell::Num(drf_sampled_single(sx, sn, &h, fs, r)?.distortion),
                    Cell::Num(idrf_stationary(sx, sn, &h, r)?.distortion),
                    Cell::Num(mmse_single(sx, sn, &h, fs)?),
                    Cell::Num(polyphase_lower_bound(sx, sn, &h, fs, r, cfg.oracle.offsets)?),
                    Cell::Num(d_star_lower_bound(sx, sn, fs, r)?.distortion),
                    Cell::Num(d_dagger(sx, sn, fs, r)?.distortion),
                ]])
            })?;
            Ok(Table {
                header: vec![
                    "fs",
                    "rate_bits_per_time",
                    "drf",
                    "idrf_stationary",
                    "mmse",
                    "polyphase_lower_bound",
                    "d_star_lower_bound",
                    "d_dagger",
                ],
                rows,
            })
        }
        Mode::OracleCheck => {
            let o = &cfg.oracle;
            let rows = sweep(&cfg.fs, |&fs| {
                let h = single_filter(cfg, fs)?;
                let exact = mmse_single(sx, sn, &h, fs)?;
                let oracle = finite_window_mmse_averaged(sx, sn, &h, fs, o.offsets, o.window)?.mmse;
                let mut rows = vec![check_row(fs, 0.0, "mmse", exact, oracle)];
                for rate in &cfg.rates {
                    let r = rate.to_bits_per_time(fs)?;
                    let exact = drf_sampled_single(sx, sn, &h, fs, r)?.distortion;
                    let oracle = block_idrf_oracle(sx, sn, &h, fs, r, o.block_window)?.distortion;
                    rows.push(check_row(fs, r, "drf", exact, oracle));
                }
                Ok(rows)
            })?;
            Ok(Table {
                header: vec!["fs", "rate_bits_per_time", "quantity", "pipeline", "oracle", "abs_diff"],
                rows,
            })
        }
        Mode::Figure => Err(CliError::Config("figure mode takes --figure, not a config".into())),
    }
}

fn check_row(fs: f64, rate: f64, what: &str, pipeline: f64, oracle: f64) -> Vec<Cell> {
    vec![
        Cell::Num(fs),
        Cell::Num(rate),
        Cell::Text(what.into()),
        Cell::Num(pipeline),
        Cell::Num(oracle),
        Cell::Num((pipeline - oracle).abs()),
    ]
}
