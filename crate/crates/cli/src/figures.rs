//! Built-in figure sweeps.

use subnyq_core::sampling::{landau_mmse_bound, mmse_optimal, mmse_single};
use subnyq_core::waterfill::{d_dagger, drf_sampled_optimal, drf_sampled_single, idrf_stationary};
use subnyq_core::{presets, ComplexGainProfile, SpectralDensity};

use crate::config::{ExperimentConfig, Filters, OracleSettings};
use crate::modes::{run, sweep};
use crate::table::{Cell, Table};
use crate::{CliError, Mode};

pub const FIGURES: [&str; 6] = ["rect", "nonmonotone", "mmse-opt", "opsf", "multi-branch", "af-sets"];

fn steps(step: f64, from: usize, to: usize) -> Vec<f64> {
    (from..=to).map(|i| step * i as f64).collect()
}

fn check_closed_form(got: f64, want: f64, what: &str) -> Result<(), CliError> {
    if (got - want).abs() <= 1e-6 * want.abs().max(1e-12) {
        Ok(())
    } else {
        Err(CliError::Numerical(format!(
            "{what}: pipeline {got} disagrees with closed form {want}"
        )))
    }
}

fn rect_closed_form(fs: f64, snr: f64, rate: f64) -> f64 {
    if fs < 1.0 {
        1.0 - fs * snr * (1.0 - (-2.0 * rate / fs).exp2())
    } else {
        1.0 - snr * (1.0 - (-2.0 * rate).exp2())
    }
}

fn band_pass_closed_form(fs: f64, rate: f64) -> f64 {
    let (width, bits) = if fs >= 4.0 {
        (2.0, 1.0)
    } else if fs >= 3.0 {
        ((fs - 2.0) / 2.0, 2.0 / (fs - 2.0))
    } else if fs >= 2.0 {
        ((4.0 - fs) / 2.0, 2.0 / (4.0 - fs))
    } else if fs >= 1.5 {
        (fs - 1.0, 1.0 / (fs - 1.0))
    } else if fs >= 4.0 / 3.0 {
        (2.0 - fs, 1.0 / (2.0 - fs))
    } else {
        (fs / 2.0, 2.0 / fs)
    };
    if fs >= 4.0 {
        (-rate).exp2()
    } else {
        1.0 - width * (1.0 - (-bits * rate).exp2())
    }
}

pub fn figure(name: &str) -> Result<Table, CliError> {
    let none = SpectralDensity::zero();
    let all_pass = ComplexGainProfile::all_pass();
    match name {
        "rect" => {
            let sx = presets::rectangular(1.0, 0.5)?;
            let noisy = presets::rectangular_noise(1.0, 0.5, 5.0)?;
            let series = [("noiseless", &none, 1.0), ("noisy", &noisy, 5.0 / 6.0)];
            let points: Vec<(usize, f64)> = (0..series.len())
                .flat_map(|s| steps(0.02, 1, 100).into_iter().map(move |fs| (s, fs)))
                .collect();
            let rows = sweep(&points, |&(s, fs)| {
                let (label, sn, snr) = series[s];
                let d = drf_sampled_single(&sx, sn, &all_pass, fs, 1.0)?.distortion;
                check_closed_form(d, rect_closed_form(fs, snr, 1.0), "rect")?;
                let idrf = idrf_stationary(&sx, sn, &all_pass, 1.0)?.distortion;
                Ok(vec![vec![
                    Cell::Text(label.into()),
                    Cell::Num(fs),
                    Cell::Num(1.0),
                    Cell::Num(d),
                    Cell::Num(idrf),
                ]])
            })?;
            Ok(Table {
                header: vec!["series", "fs", "rate_bits_per_time", "distortion", "idrf_stationary"],
                rows,
            })
        }
        "nonmonotone" => {
            let sx = presets::band_pass(1.0)?;
            let points: Vec<(f64, f64)> = [1.0, 2.0]
                .iter()
                .flat_map(|&r| steps(0.05, 2, 100).into_iter().map(move |fs| (fs, r)))
                .collect();
            let rows = sweep(&points, |&(fs, r)| {
                let d = drf_sampled_single(&sx, &none, &all_pass, fs, r)?.distortion;
                check_closed_form(d, band_pass_closed_form(fs, r), "nonmonotone")?;
                Ok(vec![vec![Cell::Num(fs), Cell::Num(r), Cell::Num(d)]])
            })?;
            Ok(Table {
                header: vec!["fs", "rate_bits_per_time", "distortion"],
                rows,
            })
        }
        "mmse-opt" => {
            let sx = presets::bimodal()?;
            let rows = sweep(&steps(0.02, 1, 110), |&fs| {
                Ok(vec![vec![
                    Cell::Num(fs),
                    Cell::Num(mmse_single(&sx, &none, &all_pass, fs)?),
                    Cell::Num(mmse_optimal(&sx, &none, fs, 1)?.0),
                    Cell::Num(landau_mmse_bound(&sx, &none, fs)?),
                ]])
            })?;
            Ok(Table {
                header: vec!["fs", "mmse_allpass", "mmse_optimal", "landau_bound"],
                rows,
            })
        }
        "opsf" => {
            let sx = presets::bimodal()?;
            let points: Vec<(f64, f64)> = [1.0, 2.0]
                .iter()
                .flat_map(|&r| steps(0.02, 1, 110).into_iter().map(move |fs| (fs, r)))
                .collect();
            let rows = sweep(&points, |&(fs, r)| {
                Ok(vec![vec![
                    Cell::Num(fs),
                    Cell::Num(r),
                    Cell::Num(drf_sampled_single(&sx, &none, &all_pass, fs, r)?.distortion),
                    Cell::Num(drf_sampled_optimal(&sx, &none, fs, 1, r)?.distortion),
                ]])
            })?;
            Ok(Table {
                header: vec!["fs", "rate_bits_per_time", "d_allpass", "d_optimal"],
                rows,
            })
        }
        "multi-branch" => {
            let sx = presets::bimodal()?;
            let points: Vec<(f64, f64)> = [1.0, 2.0]
                .iter()
                .flat_map(|&r| steps(0.04, 1, 55).into_iter().map(move |fs| (fs, r)))
                .collect();
            let rows = sweep(&points, |&(fs, r)| {
                let mut rows = Vec::new();
                for p in 1..=3 {
                    let d = drf_sampled_optimal(&sx, &none, fs, p, r)?.distortion;
                    rows.push(vec![Cell::Num(fs), Cell::Int(p), Cell::Num(r), Cell::Num(d)]);
                }
                let d = d_dagger(&sx, &none, fs, r)?.distortion;
                rows.push(vec![
                    Cell::Num(fs),
                    Cell::Text("inf".into()),
                    Cell::Num(r),
                    Cell::Num(d),
                ]);
                Ok(rows)
            })?;
            Ok(Table {
                header: vec!["fs", "P", "rate_bits_per_time", "distortion"],
                rows,
            })
        }
        "af-sets" => {
            let sx = presets::bimodal()?;
            let mut out: Option<Table> = None;
            for p in 1..=3 {
                let cfg = ExperimentConfig {
                    source: sx.clone(),
                    noise: none.clone(),
                    fs: vec![sx.nyquist_rate() / 3.0, 0.6 * sx.nyquist_rate()],
                    branches: p,
                    filters: Filters::Optimal,
                    rates: Vec::new(),
                    grid: 16,
                    output: None,
                    oracle: OracleSettings {
                        window: 1,
                        offsets: 8,
                        block_window: 1,
                    },
                };
                let t = run(Mode::AfSets, &cfg)?;
                match out.as_mut() {
                    Some(acc) => acc.rows.extend(t.rows),
                    None => out = Some(t),
                }
            }
            Ok(out.expect("at least one branch count"))
        }
        other => Err(CliError::Config(format!(
            "--figure: unknown figure '{other}' (expected one of {})",
            FIGURES.join(", ")
        ))),
    }
}
