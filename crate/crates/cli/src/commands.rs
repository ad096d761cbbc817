//! The five subcommands. Each validates the config blocks it needs,
//! runs the corresponding library capability, writes its files into the
//! output directory, and prints a summary JSON (which embeds the fully
//! resolved configuration) to stdout.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use darsim_core::analysis::{
    amplitude_sweep, bootstrap_cohens_d_paired, permutation_ttest_paired, EffectSize,
    PermutationResult, SweepBase,
};
use darsim_core::psychophysics::{run_sessions_batch, QuestParams, SessionDesign, SessionResult};
use darsim_core::resonator::{
    classify_region, predict_comparator, predict_lcd_level, run_pipeline, triangle_slope,
    InteriorLevels, Region, RegionLabel, ThresholdElementConfig,
};
use darsim_core::signals::{generate_binary, generate_carrier, mix, CarrierKind};
use serde::Serialize;

use crate::config::{CliError, CliResult, OutputFormat, RunConfig};

/// Writes `value` as pretty JSON (plus trailing newline) to `path`.
fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Io(format!("cannot serialize {}: {e}", path.display())))?;
    fs::write(path, text + "\n")
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}

/// Prints the summary JSON to stdout.
fn print_summary<T: Serialize>(value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Io(format!("cannot serialize summary: {e}")))?;
    println!("{text}");
    Ok(())
}

fn ensure_out_dir(config: &RunConfig) -> CliResult<()> {
    fs::create_dir_all(config.out_dir()).map_err(|e| {
        CliError::Io(format!(
            "cannot create output directory {}: {e}",
            config.out_dir().display()
        ))
    })
}

/// Writes tabular rows as CSV (via `write_csv`) or as a JSON array,
/// returning the file name used.
fn write_table<T, F>(
    config: &RunConfig,
    stem: &str,
    rows: &[T],
    write_csv: F,
) -> CliResult<PathBuf>
where
    T: Serialize,
    F: FnOnce(&mut Vec<u8>) -> CliResult<()>,
{
    let name = match config.format() {
        OutputFormat::Csv => format!("{stem}.csv"),
        OutputFormat::Json => format!("{stem}.json"),
    };
    let path = config.out_dir().join(&name);
    match config.format() {
        OutputFormat::Csv => {
            let mut buf = Vec::new();
            write_csv(&mut buf)?;
            fs::write(&path, buf)
                .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        }
        OutputFormat::Json => write_json(&path, &rows)?,
    }
    Ok(PathBuf::from(name))
}

// ---------------------------------------------------------------------------
// predict

#[derive(Serialize)]
struct PredictReport<'a> {
    region: Region,
    condition: &'static str,
    /// Smoothed output level from the closed form.
    level: f64,
    /// Comparator on a triangle carrier: time above threshold per period.
    #[serde(skip_serializing_if = "Option::is_none")]
    t_h: Option<f64>,
    /// Comparator on a triangle carrier: time from carrier minimum to
    /// threshold crossing.
    #[serde(skip_serializing_if = "Option::is_none")]
    t_r: Option<f64>,
    /// Triangle carrier rise rate, 2·f_t·U_t.
    #[serde(skip_serializing_if = "Option::is_none")]
    slope: Option<f64>,
    resolved_config: &'a RunConfig,
}

pub fn cmd_predict(config: &RunConfig) -> CliResult<()> {
    let te = config.require(config.threshold_element.as_ref(), "threshold_element", "predict")?;
    let carrier = config.require(config.carrier.as_ref(), "carrier", "predict")?;
    let section = config.require(config.predict.as_ref(), "predict", "predict")?;
    te.validate()?;
    carrier.validate()?;

    let f_t = carrier.frequency_hz().ok_or_else(|| {
        CliError::Config("closed-form prediction requires a periodic carrier".into())
    })?;
    let u_s = section.u_s;
    let u_t = carrier.amplitude();
    let label = classify_region(te.kind(), u_s, u_t, te.threshold());
    if label.region == Region::ANoOutput {
        return Err(CliError::Domain(format!(
            "operating region violated: U_s + U_t < U_th ({u_s} + {u_t} vs {}): \
             the input never reaches the threshold and no output is produced",
            te.threshold()
        )));
    }

    let report = match te {
        ThresholdElementConfig::Lcd {
            spike_height,
            spike_duration_s,
            ..
        } => {
            te.validate_carrier_frequency(f_t)?;
            PredictReport {
                region: label.region,
                condition: label.condition,
                level: predict_lcd_level(f_t, *spike_duration_s, *spike_height)?,
                t_h: None,
                t_r: None,
                slope: None,
                resolved_config: config,
            }
        }
        ThresholdElementConfig::Comparator {
            threshold,
            high_output,
        } => {
            if carrier.kind() != CarrierKind::Triangle {
                return Err(CliError::Config(format!(
                    "comparator closed forms assume a triangle carrier, got {}",
                    carrier.kind()
                )));
            }
            let prediction = predict_comparator(u_s, u_t, *threshold, *high_output, f_t)?;
            PredictReport {
                region: label.region,
                condition: label.condition,
                level: prediction.level,
                t_h: Some(prediction.supra_time_s),
                t_r: Some(prediction.rise_time_s),
                slope: Some(triangle_slope(f_t, u_t)),
                resolved_config: config,
            }
        }
    };
    print_summary(&report)
}

// ---------------------------------------------------------------------------
// simulate

#[derive(Serialize)]
struct SimulateSummary<'a> {
    region: RegionLabel,
    measured: InteriorLevels,
    /// Closed-form level for the high phase, when one applies (restoring
    /// region with a periodic carrier; comparator forms need triangle).
    #[serde(skip_serializing_if = "Option::is_none")]
    predicted_level: Option<f64>,
    /// |measured − predicted| / predicted.
    #[serde(skip_serializing_if = "Option::is_none")]
    relative_error: Option<f64>,
    n_crossings: usize,
    trace_file: PathBuf,
    resolved_config: &'a RunConfig,
}

#[derive(Serialize)]
struct TraceRow {
    time: f64,
    input: f64,
    te_output: f64,
    smoothed: f64,
}

pub fn cmd_simulate(config: &RunConfig) -> CliResult<()> {
    let signal_spec = config.require(config.signal.as_ref(), "signal", "simulate")?;
    let carrier_spec = config.require(config.carrier.as_ref(), "carrier", "simulate")?;
    let te = config.require(config.threshold_element.as_ref(), "threshold_element", "simulate")?;
    let lpf = config.require(config.lpf.as_ref(), "lpf", "simulate")?;
    let duration_s = *config.require(config.duration_s.as_ref(), "duration_s", "simulate")?;
    let rate = *config.require(config.sample_rate_hz.as_ref(), "sample_rate_hz", "simulate")?;

    let signal = generate_binary(signal_spec, duration_s, rate)?;
    let carrier = generate_carrier(carrier_spec, duration_s, rate)?;
    let mixed = mix(&signal, &carrier)?;
    let run = run_pipeline(&signal, &carrier, te, lpf, carrier_spec.frequency_hz())?;
    let measured = run.interior_levels(&signal)?;

    let u_s = signal_spec.high_value;
    let u_t = carrier_spec.amplitude();
    let label = classify_region(te.kind(), u_s, u_t, te.threshold());
    let predicted_level = match (te, label.region, carrier_spec.kind()) {
        (_, Region::ANoOutput, _) | (_, _, CarrierKind::GaussianNoise) => None,
        (
            ThresholdElementConfig::Lcd {
                spike_height,
                spike_duration_s,
                ..
            },
            Region::BSignalRestored,
            _,
        ) => {
            let f_t = carrier_spec.frequency_hz().expect("periodic carrier");
            predict_lcd_level(f_t, *spike_duration_s, *spike_height).ok()
        }
        (
            ThresholdElementConfig::Comparator {
                threshold,
                high_output,
            },
            Region::BSignalRestored,
            CarrierKind::Triangle,
        ) => {
            let f_t = carrier_spec.frequency_hz().expect("periodic carrier");
            predict_comparator(u_s, u_t, *threshold, *high_output, f_t)
                .ok()
                .map(|p| p.level)
        }
        _ => None,
    };
    let relative_error =
        predicted_level.map(|p| (measured.high_level - p).abs() / p);

    ensure_out_dir(config)?;
    let rows: Vec<TraceRow> = (0..mixed.len())
        .map(|i| TraceRow {
            time: signal.time_at(i),
            input: mixed.samples()[i],
            te_output: run.te_output.samples()[i],
            smoothed: run.smoothed_output.samples()[i],
        })
        .collect();
    let trace_file = write_table(config, "simulate_trace", &rows, |buf| {
        writeln!(buf, "time,input,te_output,smoothed").map_err(|e| CliError::Io(e.to_string()))?;
        for r in &rows {
            writeln!(buf, "{},{},{},{}", r.time, r.input, r.te_output, r.smoothed)
                .map_err(|e| CliError::Io(e.to_string()))?;
        }
        Ok(())
    })?;

    let summary = SimulateSummary {
        region: label,
        measured,
        predicted_level,
        relative_error,
        n_crossings: run.crossing_times.len(),
        trace_file,
        resolved_config: config,
    };
    write_json(&config.out_dir().join("simulate_summary.json"), &summary)?;
    print_summary(&summary)
}

// ---------------------------------------------------------------------------
// sweep

#[derive(Serialize)]
struct SweepSummary<'a> {
    n_points: usize,
    /// Grid amplitude with the highest spectral SNR.
    best_snr_u_t: f64,
    best_snr_db: f64,
    /// Grid amplitude with the largest transferred amplitude.
    best_transfer_u_t: f64,
    best_transferred_amplitude: f64,
    sweep_file: PathBuf,
    resolved_config: &'a RunConfig,
}

pub fn cmd_sweep(config: &RunConfig) -> CliResult<()> {
    let signal = config.require(config.signal.as_ref(), "signal", "sweep")?;
    let carrier = config.require(config.carrier.as_ref(), "carrier", "sweep")?;
    let te = config.require(config.threshold_element.as_ref(), "threshold_element", "sweep")?;
    let lpf = config.require(config.lpf.as_ref(), "lpf", "sweep")?;
    let duration_s = *config.require(config.duration_s.as_ref(), "duration_s", "sweep")?;
    let rate = *config.require(config.sample_rate_hz.as_ref(), "sample_rate_hz", "sweep")?;
    let section = config.require(config.sweep.as_ref(), "sweep", "sweep")?;

    let base = SweepBase {
        signal: signal.clone(),
        duration_s,
        sample_rate_hz: rate,
        te: te.clone(),
        lpf: lpf.clone(),
        carrier_template: carrier.clone(),
        snr: section.snr,
        linearity_grid: section.linearity_grid.clone(),
    };
    let points = amplitude_sweep(&base, &section.u_t_grid, config.seed(), section.repeats)?;

    ensure_out_dir(config)?;
    let sweep_file = write_table(config, "sweep", &points, |buf| {
        darsim_core::analysis::write_sweep_csv(&points, buf)
            .map_err(|e| CliError::Io(e.to_string()))
    })?;

    let best_snr = points
        .iter()
        .max_by(|a, b| a.snr.snr_db.partial_cmp(&b.snr.snr_db).expect("finite snr"))
        .expect("nonempty sweep");
    let best_transfer = points
        .iter()
        .max_by(|a, b| {
            a.transferred_amplitude
                .partial_cmp(&b.transferred_amplitude)
                .expect("finite transfer")
        })
        .expect("nonempty sweep");
    let summary = SweepSummary {
        n_points: points.len(),
        best_snr_u_t: best_snr.u_t,
        best_snr_db: best_snr.snr.snr_db,
        best_transfer_u_t: best_transfer.u_t,
        best_transferred_amplitude: best_transfer.transferred_amplitude,
        sweep_file,
        resolved_config: config,
    };
    write_json(&config.out_dir().join("sweep_summary.json"), &summary)?;
    print_summary(&summary)
}

// ---------------------------------------------------------------------------
// quest

#[derive(Serialize)]
struct QuestSummary<'a> {
    /// Carrier amplitude per condition.
    conditions: Vec<f64>,
    /// Threshold estimates, indexed [session][condition][block].
    vct: Vec<Vec<Vec<f64>>>,
    /// Normalized threshold modulation (%), indexed [session][condition].
    modulation: Vec<Vec<f64>>,
    /// Mean modulation (%) per condition across sessions.
    mean_modulation: Vec<f64>,
    n_sessions: usize,
    trials_file: PathBuf,
    resolved_config: &'a RunConfig,
}

#[derive(Serialize)]
struct TrialRow {
    session: usize,
    block: usize,
    condition: usize,
    trial: usize,
    intensity: f64,
    target_quadrant: usize,
    response: usize,
    correct: bool,
}

pub fn cmd_quest(config: &mut RunConfig) -> CliResult<()> {
    // Materialize the psychophysics defaults into the echoed config.
    config.quest.get_or_insert_with(QuestParams::default);
    config.session.get_or_insert_with(SessionDesign::default);
    config.n_sessions.get_or_insert(1);

    let observer = config.require(config.observer.as_ref(), "observer", "quest")?;
    let quest = config.quest.as_ref().expect("just materialized");
    let design = config.session.as_ref().expect("just materialized");
    let n_sessions = config.n_sessions.expect("just materialized");

    let sessions: Vec<SessionResult> =
        run_sessions_batch(design, observer, quest, config.seed(), n_sessions)?;

    let rows: Vec<TrialRow> = sessions
        .iter()
        .enumerate()
        .flat_map(|(s, session)| {
            session.trials.iter().map(move |t| TrialRow {
                session: s + 1,
                block: t.block,
                condition: t.condition,
                trial: t.trial,
                intensity: t.intensity,
                target_quadrant: t.target_quadrant,
                response: t.response,
                correct: t.correct,
            })
        })
        .collect();

    ensure_out_dir(config)?;
    let trials_file = write_table(config, "quest_trials", &rows, |buf| {
        writeln!(
            buf,
            "session,block,condition,trial,intensity,target_quadrant,response,correct"
        )
        .map_err(|e| CliError::Io(e.to_string()))?;
        for r in &rows {
            writeln!(
                buf,
                "{},{},{},{},{},{},{},{}",
                r.session,
                r.block,
                r.condition,
                r.trial,
                r.intensity,
                r.target_quadrant,
                r.response,
                r.correct
            )
            .map_err(|e| CliError::Io(e.to_string()))?;
        }
        Ok(())
    })?;

    let n_conditions = design.conditions.len();
    let mean_modulation: Vec<f64> = (0..n_conditions)
        .map(|c| {
            sessions.iter().map(|s| s.modulation[c]).sum::<f64>() / sessions.len() as f64
        })
        .collect();
    let summary = QuestSummary {
        conditions: design.conditions.clone(),
        vct: sessions.iter().map(|s| s.vct.clone()).collect(),
        modulation: sessions.iter().map(|s| s.modulation.clone()).collect(),
        mean_modulation,
        n_sessions,
        trials_file,
        resolved_config: config,
    };
    write_json(&config.out_dir().join("quest_summary.json"), &summary)?;
    print_summary(&summary)
}

// ---------------------------------------------------------------------------
// analyze

#[derive(Serialize)]
struct AnalyzeSummary<'a> {
    n_pairs: usize,
    permutation: PermutationResult,
    effect_size: EffectSize,
    resolved_config: &'a RunConfig,
}

pub fn cmd_analyze(config: &RunConfig) -> CliResult<()> {
    let section = config.require(config.analyze.as_ref(), "analyze", "analyze")?;

    let mut reader = csv::Reader::from_path(&section.input).map_err(|e| {
        CliError::Config(format!("cannot open {}: {e}", section.input.display()))
    })?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::Config(format!("{}: {e}", section.input.display())))?
        .clone();
    let column = |name: &str| -> CliResult<usize> {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            CliError::Config(format!(
                "{}: no column named '{name}' (found: {})",
                section.input.display(),
                headers.iter().collect::<Vec<_>>().join(", ")
            ))
        })
    };
    let control_idx = column(&section.control_column)?;
    let test_idx = column(&section.test_column)?;

    let mut control = Vec::new();
    let mut test = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| {
            CliError::Config(format!(
                "{}: row {}: {e}",
                section.input.display(),
                row_idx + 2
            ))
        })?;
        let parse = |idx: usize, name: &str| -> CliResult<f64> {
            let cell = record.get(idx).ok_or_else(|| {
                CliError::Config(format!(
                    "{}: row {}: missing column '{name}'",
                    section.input.display(),
                    row_idx + 2
                ))
            })?;
            cell.trim().parse::<f64>().map_err(|_| {
                CliError::Config(format!(
                    "{}: row {}, column '{name}': cannot parse {cell:?} as a number",
                    section.input.display(),
                    row_idx + 2
                ))
            })
        };
        control.push(parse(control_idx, &section.control_column)?);
        test.push(parse(test_idx, &section.test_column)?);
    }

    let permutation =
        permutation_ttest_paired(&control, &test, section.n_reshuffles, config.seed())?;
    let effect_size =
        bootstrap_cohens_d_paired(&control, &test, section.n_bootstrap, config.seed())?;

    ensure_out_dir(config)?;
    let summary = AnalyzeSummary {
        n_pairs: control.len(),
        permutation,
        effect_size,
        resolved_config: config,
    };
    write_json(&config.out_dir().join("analyze_summary.json"), &summary)?;
    print_summary(&summary)
}
