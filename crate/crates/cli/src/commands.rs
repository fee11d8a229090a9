//! Implementations of the subcommands: each takes the validated run
//! configuration, drives the library, prints a summary, and emits the
//! figure-style CSV for anything curve-shaped.

use epsim_core::analysis::{
    chsh, coincidence_time_histogram, count_coincidences, find_delta, smax_vs_window,
    AnalysisConfig, CoincidenceRule, HistogramSpec, PairingMode,
};
use epsim_core::calibrate::calibrate_d;
use epsim_core::config::{RunConfig, RunKind};
use epsim_core::curve::emit_curve;
use epsim_core::dataset::{read_dataset, DatasetWriter, StationDataset};
use epsim_core::dlm::{Channel, DlmBeamSplitter};
use epsim_core::eprb::{generate, ExperimentConfig, SourceMode, StationConfig};
use epsim_core::message::PhaseMessage;
use epsim_core::mzi::{run_mzi_traced, InputPhasePolicy};
use epsim_core::oracle::{
    bell_triangle_e, bs_intensities, mzi_probabilities, singlet_e, BsInput, CHSH_QUANTUM_MAX,
};
use epsim_core::stream::{RandomStream, StreamRole};
use epsim_core::{Error, Result};

pub fn run(cfg: &RunConfig) -> Result<()> {
    cfg.validate()?;
    match cfg.kind {
        RunKind::Bs => run_bs(cfg),
        RunKind::Mzi => run_mzi_sweep(cfg),
        RunKind::EprbGenerate => run_generate(cfg),
        RunKind::EprbAnalyze => run_analyze(cfg),
        RunKind::SmaxSweep => run_smax_sweep(cfg),
        RunKind::Histogram => run_histogram(cfg),
        RunKind::Oracle => run_oracle(cfg),
        RunKind::CalibrateD => run_calibrate(cfg),
    }
}

fn out_path(cfg: &RunConfig, fallback: &str) -> String {
    cfg.out.clone().unwrap_or_else(|| fallback.to_string())
}

fn run_bs(cfg: &RunConfig) -> Result<()> {
    let psi0 = cfg.psi0_deg.unwrap_or(30.0).to_radians();
    let psi1 = cfg.psi1_deg.to_radians();
    let mut arrivals = RandomStream::for_role(cfg.seed, StreamRole::Source);
    let mut emission = RandomStream::for_role(cfg.seed, StreamRole::DlmEmission);
    let mut bs = DlmBeamSplitter::new(cfg.alpha)?;
    let transient = (cfg.events / 10).min(1_000);
    let mut c0_settled = 0u64;
    for n in 0..cfg.events {
        let (ch, psi) = if arrivals.next_uniform() < cfg.p0 {
            (Channel::C0, psi0)
        } else {
            (Channel::C1, psi1)
        };
        let (out, _) = bs.process(ch, PhaseMessage::from_angle(psi), &mut emission)?;
        if out == Channel::C0 && n >= transient {
            c0_settled += 1;
        }
    }
    let settled_events = cfg.events - transient;
    let fraction = c0_settled as f64 / settled_events as f64;
    let (i0, i1) = bs_intensities(&BsInput::new(cfg.p0, psi0, psi1)?);
    println!(
        "beam splitter: {} events, p0 = {}, psi0 - psi1 = {} deg",
        cfg.events,
        cfg.p0,
        cfg.psi0_deg.unwrap_or(30.0) - cfg.psi1_deg
    );
    println!(
        "  channel-0 fraction {:.5} (after {}-event transient), reference I0 = {:.5}, |err| = {:.5}",
        fraction,
        transient,
        i0,
        (fraction - i0).abs()
    );
    if let Some(out) = &cfg.out {
        emit_curve(
            out,
            "bs run",
            &[
                "p0",
                "psi0_deg",
                "psi1_deg",
                "events",
                "n0_frac",
                "i0_ref",
                "i1_ref",
            ],
            &[vec![
                cfg.p0,
                cfg.psi0_deg.unwrap_or(30.0),
                cfg.psi1_deg,
                cfg.events as f64,
                fraction,
                i0,
                i1,
            ]],
            cfg,
        )?;
        println!("  wrote {out}");
    }
    Ok(())
}

fn run_mzi_sweep(cfg: &RunConfig) -> Result<()> {
    let policy = if cfg.psi0_per_event {
        InputPhasePolicy::RandomPerEvent
    } else if let Some(psi0) = cfg.psi0_deg {
        InputPhasePolicy::Fixed(psi0.to_radians())
    } else {
        InputPhasePolicy::RandomPerRun
    };
    if cfg.trace.is_some() && cfg.phi0_start_deg + cfg.phi0_step_deg < cfg.phi0_stop_deg {
        return Err(Error::invalid(
            "key 'trace': per-event tracing needs a single grid point",
        ));
    }
    let mut trace_rows: Vec<Vec<f64>> = Vec::new();
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    let mut phi0_deg = cfg.phi0_start_deg;
    let mut point = 0u64;
    while phi0_deg < cfg.phi0_stop_deg {
        // Each grid point runs a fresh network on its own derived seed.
        let counts = run_mzi_traced(
            cfg.events_per_point,
            phi0_deg.to_radians(),
            cfg.phi1_deg.to_radians(),
            policy,
            cfg.alpha,
            cfg.seed.wrapping_add(point),
            |n, route| {
                if cfg.trace.is_some() {
                    trace_rows.push(vec![
                        n as f64,
                        route.path.index() as f64,
                        route.detector.index() as f64,
                    ]);
                }
            },
        )?;
        let (p2, _) = mzi_probabilities(phi0_deg.to_radians(), cfg.phi1_deg.to_radians());
        let phi_deg = phi0_deg - cfg.phi1_deg;
        worst = worst.max((counts.n2_fraction() - p2).abs());
        rows.push(vec![
            phi0_deg,
            phi_deg,
            counts.n0_fraction(),
            counts.n2_fraction(),
            p2,
        ]);
        phi0_deg += cfg.phi0_step_deg;
        point += 1;
    }
    if let Some(trace_path) = &cfg.trace {
        emit_curve(
            trace_path,
            "per-event route trace",
            &["event", "path", "detector"],
            &trace_rows,
            cfg,
        )?;
        println!("  wrote {trace_path}");
    }
    let out = out_path(cfg, "mzi.csv");
    emit_curve(
        &out,
        "mzi sweep",
        &["phi0_deg", "phi_deg", "n0_frac", "n2_frac", "quantum_ref"],
        &rows,
        cfg,
    )?;
    println!(
        "interferometer sweep: {} points x {} events, phi1 = {} deg, worst |n2_frac - ref| = {:.4}",
        rows.len(),
        cfg.events_per_point,
        cfg.phi1_deg,
        worst
    );
    println!("  wrote {out}");
    Ok(())
}

fn station_configs(cfg: &RunConfig) -> Result<(StationConfig, StationConfig)> {
    let station1 = match &cfg.angles1_deg {
        Some(angles) => StationConfig::new(angles.clone(), cfg.t0, cfg.d)?,
        None => {
            let mut s = RandomStream::for_role(cfg.seed, StreamRole::SettingsStation1);
            StationConfig::with_random_angles(cfg.settings_per_station, cfg.t0, cfg.d, &mut s)?
        }
    };
    let station2 = match &cfg.angles2_deg {
        Some(angles) => StationConfig::new(angles.clone(), cfg.t0, cfg.d)?,
        None => {
            let mut s = RandomStream::for_role(cfg.seed, StreamRole::SettingsStation2);
            StationConfig::with_random_angles(cfg.settings_per_station, cfg.t0, cfg.d, &mut s)?
        }
    };
    Ok((station1, station2))
}

fn source_mode(cfg: &RunConfig) -> SourceMode {
    if cfg.source_mode == "fixed" {
        SourceMode::FixedPolarization {
            xi1: cfg.xi1_deg.to_radians(),
            xi2: cfg.xi2_deg.to_radians(),
        }
    } else {
        SourceMode::SingletRandom
    }
}

fn run_generate(cfg: &RunConfig) -> Result<()> {
    let (station1, station2) = station_configs(cfg)?;
    let experiment = ExperimentConfig {
        events: cfg.events,
        mode: source_mode(cfg),
        station1: station1.clone(),
        station2: station2.clone(),
        seed: cfg.seed,
    };
    let prefix = cfg.out_prefix.clone().unwrap_or_else(|| "eprb".to_string());
    let path1 = format!("{prefix}.station1.txt");
    let path2 = format!("{prefix}.station2.txt");
    let digest = cfg.digest();
    let create = |path: &str| {
        std::fs::File::create(path)
            .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{path}: {e}"))))
    };
    let mut w1 = DatasetWriter::new(create(&path1)?, 1, &station1, cfg.seed, cfg.events, Some(&digest))?;
    let mut w2 = DatasetWriter::new(create(&path2)?, 2, &station2, cfg.seed, cfg.events, Some(&digest))?;
    generate(&experiment, |r1, r2| {
        w1.write_record(r1)?;
        w2.write_record(r2)
    })?;
    w1.finish()?;
    w2.finish()?;
    println!(
        "generated {} events per station (mode = {}, d = {}, seed = {})",
        cfg.events, cfg.source_mode, cfg.d, cfg.seed
    );
    println!("  wrote {path1}");
    println!("  wrote {path2}");
    Ok(())
}

fn load_pair(cfg: &RunConfig) -> Result<(StationDataset, StationDataset)> {
    let p1 = cfg
        .station1_path
        .as_ref()
        .ok_or_else(|| Error::invalid("key 'station1_path': required for this command"))?;
    let p2 = cfg
        .station2_path
        .as_ref()
        .ok_or_else(|| Error::invalid("key 'station2_path': required for this command"))?;
    Ok((read_dataset(p1)?, read_dataset(p2)?))
}

fn analysis_config(cfg: &RunConfig) -> Result<AnalysisConfig> {
    let pairing = if cfg.pairing == "by-time-matching" {
        PairingMode::ByTimeMatching
    } else {
        PairingMode::ByIndex
    };
    let rule = if cfg.rule == "continuous" {
        CoincidenceRule::Continuous
    } else {
        CoincidenceRule::Discretized
    };
    Ok(AnalysisConfig::new(cfg.tau, cfg.window)?
        .with_delta(cfg.delta)
        .with_pairing(pairing)
        .with_rule(rule))
}

fn run_analyze(cfg: &RunConfig) -> Result<()> {
    let (d1, d2) = load_pair(cfg)?;
    let mut analysis = analysis_config(cfg)?;
    if cfg.auto_delta {
        let delta = find_delta(&d1, &d2, cfg.resolution)?;
        println!("estimated clock shift delta = {delta} (resolution {})", cfg.resolution);
        analysis = analysis.with_delta(delta);
    }
    let table = count_coincidences(&d1, &d2, &analysis)?;
    println!(
        "coincidences: {} of {} pairs (tau = {}, W = {}, delta = {}, rule = {}, pairing = {})",
        table.total(),
        table.pairs_considered(),
        analysis.tau,
        analysis.window,
        analysis.delta,
        cfg.rule,
        cfg.pairing
    );
    println!("  m1  m2  alpha_deg  beta_deg  count      E1       E2        E      rho");
    let mut rows = Vec::new();
    for m1 in 1..=table.settings1() {
        for m2 in 1..=table.settings2() {
            let a = d1.angles_deg[(m1 - 1) as usize];
            let b = d2.angles_deg[(m2 - 1) as usize];
            match table.stats(m1, m2) {
                Some(s) => {
                    let rho_text = s
                        .rho
                        .map_or("   --  ".to_string(), |r| format!("{r:+.4}"));
                    println!(
                        "  {m1:>2}  {m2:>2}  {a:>9.3} {b:>9.3}  {:>5}  {:+.4}  {:+.4}  {:+.4}  {rho_text}",
                        s.coincidences, s.e1, s.e2, s.e
                    );
                    rows.push(vec![
                        f64::from(m1),
                        f64::from(m2),
                        a,
                        b,
                        s.coincidences as f64,
                        s.e1,
                        s.e2,
                        s.e,
                        s.rho.unwrap_or(f64::NAN),
                    ]);
                }
                None => {
                    println!("  {m1:>2}  {m2:>2}  {a:>9.3} {b:>9.3}      0  (no coincidences)");
                    rows.push(vec![
                        f64::from(m1),
                        f64::from(m2),
                        a,
                        b,
                        0.0,
                        f64::NAN,
                        f64::NAN,
                        f64::NAN,
                        f64::NAN,
                    ]);
                }
            }
        }
    }
    match chsh(&table.e_matrix()) {
        Ok(r) => {
            let (a, b, c, d) = r.quadruple;
            println!(
                "CHSH: Smax = {:.4} (signed S = {:+.4}) at station-1 settings ({}, {}) and station-2 settings ({}, {}), {} quadruples evaluated",
                r.smax,
                r.s_value,
                d1.angles_deg[a],
                d1.angles_deg[b],
                d2.angles_deg[c],
                d2.angles_deg[d],
                r.evaluated
            );
        }
        Err(Error::NoValidQuadruple) => {
            println!("CHSH: undefined (no quadruple with coincidences in all four cells)")
        }
        Err(e) => return Err(e),
    }
    if let Some(out) = &cfg.out {
        emit_curve(
            out,
            "coincidence table",
            &[
                "m1",
                "m2",
                "alpha_deg",
                "beta_deg",
                "coincidences",
                "e1",
                "e2",
                "e",
                "rho",
            ],
            &rows,
            cfg,
        )?;
        println!("  wrote {out}");
    }
    Ok(())
}

fn run_smax_sweep(cfg: &RunConfig) -> Result<()> {
    let (d1, d2) = load_pair(cfg)?;
    let windows = match &cfg.windows {
        Some(w) => w.clone(),
        None => {
            // Default: 20 geometrically spaced windows from tau up to 2 T0.
            let lo = cfg.tau;
            let hi = 2.0 * d1.t0;
            let points = 20;
            (0..points)
                .map(|k| lo * (hi / lo).powf(k as f64 / (points - 1) as f64))
                .collect()
        }
    };
    let analysis = analysis_config(cfg)?;
    let curve = smax_vs_window(&d1, &d2, &windows, &analysis)?;
    let rows: Vec<Vec<f64>> = curve
        .iter()
        .map(|p| vec![p.window, p.smax, p.coincidences as f64])
        .collect();
    let out = out_path(cfg, "smax.csv");
    emit_curve(&out, "smax vs window", &["W", "Smax", "n_coincidences"], &rows, cfg)?;
    println!(
        "window sweep: {} points, W in [{}, {}], Smax range [{:.3}, {:.3}]",
        curve.len(),
        windows.first().unwrap(),
        windows.last().unwrap(),
        curve.iter().map(|p| p.smax).fold(f64::INFINITY, f64::min),
        curve.iter().map(|p| p.smax).fold(0.0, f64::max),
    );
    println!("  wrote {out}");
    Ok(())
}

fn run_histogram(cfg: &RunConfig) -> Result<()> {
    let (d1, d2) = load_pair(cfg)?;
    let settings = match (cfg.filter_m1, cfg.filter_m2) {
        (Some(a), Some(b)) => Some((a, b)),
        (None, None) => None,
        _ => {
            return Err(Error::invalid(
                "keys 'filter_m1'/'filter_m2': give both or neither",
            ))
        }
    };
    let spec = HistogramSpec {
        outcomes: Some((cfg.filter_x, cfg.filter_y)),
        settings,
        bin_width: cfg.bin_width,
        match_window: cfg.match_window,
        delta: cfg.delta,
        pairing: if cfg.pairing == "by-time-matching" {
            PairingMode::ByTimeMatching
        } else {
            PairingMode::ByIndex
        },
    };
    let hist = coincidence_time_histogram(&d1, &d2, &spec)?;
    if hist.is_empty() {
        println!("histogram: no pairs pass the filters (empty histogram)");
        return Ok(());
    }
    let rows: Vec<Vec<f64>> = hist
        .bins()
        .map(|(center, count, fraction)| vec![center, count as f64, fraction])
        .collect();
    let out = out_path(cfg, "histogram.csv");
    emit_curve(
        &out,
        "time-difference histogram",
        &["bin_center", "count", "normalized_count"],
        &rows,
        cfg,
    )?;
    println!(
        "histogram: {} matched pairs, peak at {}, bin width {}",
        hist.total(),
        hist.peak().unwrap(),
        hist.bin_width()
    );
    println!("  wrote {out}");
    Ok(())
}

fn run_oracle(cfg: &RunConfig) -> Result<()> {
    let mut rows = Vec::new();
    let mut angle = 0.0f64;
    while angle < 360.0 {
        let rad = angle.to_radians();
        let (p2, p3) = mzi_probabilities(rad, 0.0);
        rows.push(vec![
            angle,
            singlet_e(rad, 0.0),
            bell_triangle_e(rad, 0.0),
            p2,
            p3,
        ]);
        angle += cfg.grid_step_deg;
    }
    let out = out_path(cfg, "oracle.csv");
    emit_curve(
        &out,
        &format!("reference table (chsh_quantum_max = {CHSH_QUANTUM_MAX})"),
        &[
            "angle_deg",
            "singlet_e",
            "bell_triangle_e",
            "mzi_p2",
            "mzi_p3",
        ],
        &rows,
        cfg,
    )?;
    println!("oracle table: {} rows, step {} deg", rows.len(), cfg.grid_step_deg);
    println!("  wrote {out}");
    Ok(())
}

fn run_calibrate(cfg: &RunConfig) -> Result<()> {
    let cal = calibrate_d(
        cfg.events,
        cfg.settings_per_station,
        &cfg.d_values,
        cfg.tau,
        cfg.window,
        cfg.seed,
    )?;
    let rows: Vec<Vec<f64>> = cal
        .points
        .iter()
        .map(|p| {
            vec![
                p.d,
                p.coincidences as f64,
                p.qualifying_pairs as f64,
                p.max_abs_err.unwrap_or(f64::NAN),
                p.mean_x1,
                p.mean_x2,
            ]
        })
        .collect();
    let out = out_path(cfg, "calibrate_d.csv");
    emit_curve(
        &out,
        "delay exponent calibration",
        &[
            "d",
            "coincidences",
            "qualifying_pairs",
            "max_abs_err",
            "mean_x1",
            "mean_x2",
        ],
        &rows,
        cfg,
    )?;
    for p in &cal.points {
        match p.max_abs_err {
            Some(err) => println!(
                "  d = {}: {} coincidences, {} qualifying pairs, max |E - E_singlet| = {:.4}",
                p.d, p.coincidences, p.qualifying_pairs, err
            ),
            None => println!(
                "  d = {}: {} coincidences, {} qualifying pairs (too few to score)",
                p.d, p.coincidences, p.qualifying_pairs
            ),
        }
    }
    match cal.best {
        Some(best) => println!(
            "selected d* = {} (max |E - E_singlet| = {:.4})",
            best.d,
            best.max_abs_err.unwrap()
        ),
        None => println!("no exponent collected enough well-sampled setting pairs"),
    }
    println!("  wrote {out}");
    Ok(())
}
