use std::ffi::OsString;
use std::f64::consts::PI;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::time::Instant;

use aeta::analysis::output::{fmt_float, write_fig1, write_fig4_5, write_fig6c, write_fig7, write_seqs};
use aeta::analysis::{
    angle_variance_curve, kpa_trial, n_sigma_mc, opaque_sequence, pe_eve_curve, pe_pure_pair,
    quarter_window, run_transmission, CurvePoint, EveMode, TransmissionOptions, TrialReport,
};
use aeta::keystream::expand_running_key;
use aeta::parties::check_mapping;
use aeta::photonics::{truncation_dim, DEFAULT_TAIL_BOUND};
use aeta::rng::random_bits;
use aeta::wire::{self, ReceiverRole, TapMode};
use aeta::Execution;
use serde_json::{json, Value};

use crate::config::{parse_m_list, parse_range, Defaults, RunConfig, Settings};
use crate::svg::{emit_svg, Series, Style};
use crate::{AttackKind, Cli, CliError, Command, EveArg, FigureKind, Flags, RoleArg};

/// Fock dimension above which `figure fig1` needs `--heavy`.
pub const LIGHT_MAX_DIM: usize = 512;

const EXEC: Execution = Execution::Parallel;

fn flag_settings(f: &Flags) -> Settings {
    Settings {
        m: f.m,
        alpha2: f.alpha2,
        t: f.t,
        dark: f.dark,
        key: f.key.clone(),
        taps: f.taps.clone(),
        vpi: f.vpi,
        phi0: f.phi0,
        seed: f.seed,
        trials: f.trials,
        bits: f.bits,
        m_list: f.m_list.clone(),
        n_list: f.n_list.clone(),
        out: f.out.clone(),
        svg: f.svg,
    }
}

/// Everything one command needs to write its artifacts.
struct Run<'a> {
    cfg: RunConfig,
    settings: Settings,
    argv: &'a [OsString],
    started: Instant,
}

impl Run<'_> {
    fn path(&self, name: &str) -> Result<PathBuf, CliError> {
        fs::create_dir_all(&self.cfg.output_dir)?;
        Ok(self.cfg.output_dir.join(name))
    }

    fn csv<F>(&self, name: &str, write: F) -> Result<PathBuf, CliError>
    where
        F: FnOnce(BufWriter<File>) -> aeta::Result<()>,
    {
        let path = self.path(name)?;
        write(BufWriter::new(File::create(&path)?))?;
        Ok(path)
    }

    fn svg(&self, name: &str, series: &[Series], style: &Style) -> Result<Option<PathBuf>, CliError> {
        if !self.cfg.svg {
            return Ok(None);
        }
        let path = self.path(name)?;
        fs::write(&path, emit_svg(series, style)?)?;
        Ok(Some(path))
    }

    /// Writes `<csv>.meta.json` and prints the summary on stdout.
    fn finish(&self, csv: &Path, svg: Option<&Path>, summary: Value) -> Result<(), CliError> {
        let meta = json!({
            "tool": "aeta",
            "version": env!("CARGO_PKG_VERSION"),
            "argv": self.argv.iter().map(|a| a.to_string_lossy().into_owned()).collect::<Vec<_>>(),
            "settings": self.settings,
            "parameters": self.cfg,
            "seed": self.cfg.master_seed,
            "outputs": {
                "csv": csv.file_name().map(|n| n.to_string_lossy().into_owned()),
                "svg": svg.and_then(|p| p.file_name()).map(|n| n.to_string_lossy().into_owned()),
            },
            "summary": summary,
            "wall_clock_seconds": self.started.elapsed().as_secs_f64(),
        });
        let mut name = csv.as_os_str().to_owned();
        name.push(".meta.json");
        fs::write(PathBuf::from(name), serde_json::to_string_pretty(&meta).expect("json") + "\n")?;
        println!("{summary}");
        Ok(())
    }
}

pub fn run(cli: &Cli, argv: &[OsString]) -> Result<(), CliError> {
    let file = match &cli.flags.config {
        Some(path) => Settings::from_file(path)?,
        None => Settings::default(),
    };
    let settings = file.overlay(flag_settings(&cli.flags));
    let defaults = |m, alpha2, trials, bits| Defaults {
        m,
        alpha2,
        trials,
        bits,
    };
    let d = match &cli.command {
        Command::Figure { which, .. } => match which {
            FigureKind::Fig1 => defaults(2, 1.0, 0, 0),
            FigureKind::Fig4 | FigureKind::Fig5 => defaults(50, 27.0, 0, 10_000),
            FigureKind::Fig6c => defaults(2, 38.0, 100_000, 0),
            FigureKind::Fig7 => defaults(500, 100.0, 100_000, 0),
            FigureKind::SeqS => defaults(200, 113.0, 0, 25_000),
        },
        Command::Attack { kind } => match kind {
            AttackKind::Povm => defaults(2, 1.0, 0, 0),
            AttackKind::Opaque => defaults(200, 113.0, 0, 25_000),
            AttackKind::Kpa => defaults(200, 113.0, 0, 50),
        },
        Command::Expand => defaults(50, 27.0, 0, 1000),
        Command::Simulate { .. } | Command::Tx | Command::Rx { .. } | Command::Tap { .. } => {
            defaults(50, 27.0, 0, 10_000)
        }
    };
    let run = Run {
        cfg: RunConfig::resolve(&settings, d)?,
        settings,
        argv,
        started: Instant::now(),
    };
    match &cli.command {
        Command::Expand => expand(&run),
        Command::Simulate { eve } => simulate(&run, *eve),
        Command::Attack { kind } => match kind {
            AttackKind::Povm => povm(&run, "povm.csv", false),
            AttackKind::Opaque => opaque(&run, "opaque.csv"),
            AttackKind::Kpa => kpa(&run),
        },
        Command::Figure { which, heavy } => match which {
            FigureKind::Fig1 => povm(&run, "fig1.csv", *heavy),
            FigureKind::Fig4 => transmission_figure(&run, true),
            FigureKind::Fig5 => transmission_figure(&run, false),
            FigureKind::Fig6c => fig6c(&run),
            FigureKind::Fig7 => fig7(&run),
            FigureKind::SeqS => opaque(&run, "seqS.csv"),
        },
        Command::Tx => tx(&run, &cli.flags),
        Command::Tap { fraction, eve_out } => tap(&run, &cli.flags, *fraction, eve_out.as_deref()),
        Command::Rx { role } => rx(&run, &cli.flags, *role),
    }
}

fn expand(run: &Run) -> Result<(), CliError> {
    let cfg = &run.cfg;
    let rk = expand_running_key(&cfg.key()?, cfg.m, cfg.bits as usize)?;
    let path = run.csv("running_key.csv", |w| rk.write_csv(w))?;
    run.finish(&path, None, json!({ "symbols": rk.len(), "m": cfg.m, "key": cfg.key_hex }))
}

fn transmission(run: &Run, eve: EveArg) -> Result<TrialReport, CliError> {
    let cfg = &run.cfg;
    check_mapping(cfg.m)?;
    let bits = random_bits(cfg.master_seed, cfg.bits as usize);
    let opts = TransmissionOptions {
        eve: match eve {
            EveArg::Unkeyed => EveMode::Unkeyed,
            EveArg::Keyed => EveMode::Keyed,
        },
        exec: EXEC,
    };
    Ok(run_transmission(&bits, &cfg.key()?, cfg.m, &cfg.amplitude()?, cfg.master_seed, opts)?)
}

fn report_summary(r: &TrialReport) -> Value {
    json!({
        "symbols": r.records.len(),
        "m": r.m,
        "received_photons": r.mean_photons * r.transmissivity,
        "bob_ber": r.bob_ber,
        "eve_ber": r.eve_ber,
        "bob_erasures": r.bob_erasures,
        "eve_erasures": r.eve_erasures,
        "bob_mass_within_4": r.bob_histogram.mass_in(-4, 4),
        "eve_mass_within_4": r.eve_histogram.mass_in(-4, 4),
    })
}

fn simulate(run: &Run, eve: EveArg) -> Result<(), CliError> {
    let r = transmission(run, eve)?;
    let path = run.csv("simulate.csv", |w| write_fig4_5(w, &r))?;
    run.finish(&path, None, report_summary(&r))
}

fn histogram_points(r: &TrialReport, bob: bool, bit: u8) -> Vec<CurvePoint> {
    let h: aeta::analysis::stats::Histogram = r
        .records
        .iter()
        .filter(|s| s.bit == bit)
        .map(|s| if bob { s.bob.vh_difference } else { s.eve_vh_difference })
        .collect();
    h.bins()
        .map(|(v, c)| CurvePoint {
            abscissa: v as f64,
            theory: f64::NAN,
            mc: Some(c as f64),
            stderr: Some((c as f64).sqrt()),
            samples: c,
            excluded: 0,
        })
        .collect()
}

fn transmission_figure(run: &Run, bob: bool) -> Result<(), CliError> {
    let r = transmission(run, EveArg::Unkeyed)?;
    let path = run.csv("fig4_5.csv", |w| write_fig4_5(w, &r))?;
    let (p0, p1) = (histogram_points(&r, bob, 0), histogram_points(&r, bob, 1));
    let who = if bob { "Bob" } else { "Eve" };
    let svg = run.svg(
        if bob { "fig4.svg" } else { "fig5.svg" },
        &[
            Series { label: "bit 0".into(), points: &p0 },
            Series { label: "bit 1".into(), points: &p1 },
        ],
        &Style {
            title: format!("{who}: V-H counts, M={}", r.m),
            x_label: "n_V - n_H".into(),
            y_label: "symbols".into(),
            log_x: false,
        },
    )?;
    run.finish(&path, svg.as_deref(), report_summary(&r))
}

fn povm(run: &Run, name: &str, heavy: bool) -> Result<(), CliError> {
    let cfg = &run.cfg;
    let alphas = match run.settings.alpha2 {
        Some(a) => vec![a],
        None if name == "fig1.csv" => vec![1.0, 10.0, 100.0],
        None => vec![cfg.alpha2],
    };
    let ms = parse_m_list(run.settings.m_list.as_deref().unwrap_or("2:130:4"))?;
    if ms.is_empty() {
        return Err(CliError::Parameter("--m-list is empty".into()));
    }
    ms.iter().try_for_each(|&m| check_mapping(m))?;
    let mut series = Vec::new();
    for &a in &alphas {
        let dim = truncation_dim(a, DEFAULT_TAIL_BOUND)?;
        if dim > LIGHT_MAX_DIM && !heavy {
            return Err(CliError::Capacity(format!(
                "|alpha|^2 = {a} needs Fock dimension {dim} > {LIGHT_MAX_DIM}; rerun with `figure fig1 --heavy`"
            )));
        }
        series.push((a, pe_eve_curve(a, &ms, EXEC)?));
    }
    let path = run.csv(name, |w| write_fig1(w, &series))?;
    let plotted: Vec<Series> = series
        .iter()
        .map(|(a, pts)| Series {
            label: format!("|alpha|^2 = {a}"),
            points: pts,
        })
        .collect();
    let svg = run.svg(
        &name.replace(".csv", ".svg"),
        &plotted,
        &Style {
            title: "Eve's optimal bit-error probability".into(),
            x_label: "M".into(),
            y_label: "P_e".into(),
            log_x: false,
        },
    )?;
    let summary: Vec<Value> = series
        .iter()
        .map(|(a, pts)| {
            json!({
                "alpha0_sq": a,
                "pe_first": pts.first().map(|p| p.theory),
                "pe_last": pts.last().map(|p| p.theory),
                "pure_pair": pe_pure_pair(*a),
            })
        })
        .collect();
    run.finish(&path, svg.as_deref(), json!({ "curves": summary }))
}

fn fig6c(run: &Run) -> Result<(), CliError> {
    let cfg = &run.cfg;
    let grid: Vec<f64> = (0..=40).map(|i| i as f64 * PI / 80.0).collect();
    let curve = angle_variance_curve(cfg.alpha2, &grid, cfg.trials, cfg.master_seed, EXEC)?;
    let path = run.csv("fig6c.csv", |w| write_fig6c(w, &curve))?;
    let svg = run.svg(
        "fig6c.svg",
        &[Series { label: format!("<n> = {}", cfg.alpha2), points: &curve }],
        &Style {
            title: "Variance of the reconstructed angle".into(),
            x_label: "phi (rad)".into(),
            y_label: "variance".into(),
            log_x: false,
        },
    )?;
    let peak = curve.iter().filter_map(|p| p.mc).fold(0.0, f64::max);
    run.finish(&path, svg.as_deref(), json!({ "points": curve.len(), "max_variance": peak }))
}

fn fig7(run: &Run) -> Result<(), CliError> {
    let cfg = &run.cfg;
    let ns = parse_range(run.settings.n_list.as_deref().unwrap_or("10,20,50,100,200,500,1000"))?;
    if ns.is_empty() || ns.iter().any(|&n| n.is_nan() || n <= 0.0) {
        return Err(CliError::Parameter("--n-list entries must be > 0".into()));
    }
    let curve = ns
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let seed = cfg.master_seed.wrapping_add((k as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
            n_sigma_mc(cfg.m, n, cfg.trials, seed, EXEC)
        })
        .collect::<aeta::Result<Vec<_>>>()?;
    let path = run.csv("fig7.csv", |w| write_fig7(w, &curve))?;
    let svg = run.svg(
        "fig7.svg",
        &[Series { label: format!("M = {}", cfg.m), points: &curve }],
        &Style {
            title: "Bases within one standard deviation".into(),
            x_label: "<n>".into(),
            y_label: "N_sigma".into(),
            log_x: true,
        },
    )?;
    let ratios: Vec<String> = curve
        .iter()
        .map(|p| fmt_float(p.mc.unwrap_or(f64::NAN) / p.theory))
        .collect();
    run.finish(&path, svg.as_deref(), json!({ "mc_over_theory": ratios }))
}

fn opaque(run: &Run, name: &str) -> Result<(), CliError> {
    let cfg = &run.cfg;
    let seq = opaque_sequence(cfg.m, cfg.alpha2 * cfg.transmissivity, quarter_window(cfg.m), cfg.bits, cfg.master_seed, EXEC)?;
    let path = run.csv(name, |w| write_seqs(w, &seq))?;
    let shown: Vec<CurvePoint> = seq
        .pairs
        .iter()
        .take(200)
        .enumerate()
        .map(|(i, &(a, e))| CurvePoint {
            abscissa: i as f64,
            theory: a as f64,
            mc: Some(e as f64),
            stderr: None,
            samples: 1,
            excluded: 0,
        })
        .collect();
    let svg = run.svg(
        &name.replace(".csv", ".svg"),
        &[Series { label: "Alice (line), Eve (points)".into(), points: &shown }],
        &Style {
            title: format!("Opaque attack, M = {}", cfg.m),
            x_label: "symbol".into(),
            y_label: "basis index".into(),
            log_x: false,
        },
    )?;
    run.finish(
        &path,
        svg.as_deref(),
        json!({
            "symbols": seq.pairs.len(),
            "mean_abs_error": seq.mean_abs_error,
            "error_std": seq.error_std,
            "erasures": seq.erasures,
        }),
    )
}

fn kpa(run: &Run) -> Result<(), CliError> {
    let cfg = &run.cfg;
    let t = kpa_trial(&cfg.key()?, cfg.m, &cfg.amplitude()?, cfg.bits as usize, cfg.master_seed, EXEC)?;
    let path = run.csv("kpa.csv", |w| {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["rank", "seed", "log_likelihood"])?;
        for (i, c) in t.top.iter().enumerate() {
            w.write_record([(i + 1).to_string(), format!("{:x}", c.seed), fmt_float(c.log_likelihood)])?;
        }
        w.flush()?;
        Ok(())
    })?;
    run.finish(
        &path,
        None,
        json!({
            "true_seed": format!("{:x}", t.true_seed),
            "rank": t.rank,
            "rivals": t.rivals,
            "outscored_by": t.outscored_by,
            "candidates": t.candidates,
        }),
    )
}

fn input(flags: &Flags) -> Result<Box<dyn Read>, CliError> {
    Ok(match &flags.listen {
        Some(addr) => {
            let listener = TcpListener::bind(addr)?;
            eprintln!("aeta: listening on {}", listener.local_addr()?);
            let (stream, peer) = listener.accept()?;
            eprintln!("aeta: connection from {peer}");
            Box::new(BufReader::new(stream))
        }
        None => Box::new(BufReader::new(io::stdin().lock())),
    })
}

fn output(flags: &Flags) -> Result<Box<dyn Write>, CliError> {
    Ok(match &flags.connect {
        Some(addr) => Box::new(BufWriter::new(TcpStream::connect(addr)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn tx(run: &Run, flags: &Flags) -> Result<(), CliError> {
    let cfg = &run.cfg;
    check_mapping(cfg.m)?;
    let eom = cfg.eom()?;
    let bits = random_bits(cfg.master_seed, cfg.bits as usize);
    let plans = wire::transmit(&mut output(flags)?, &cfg.key()?, &bits, cfg.m, cfg.alpha2, cfg.transmissivity)?;
    if run.settings.out.is_some() {
        run.csv("tx.csv", |w| {
            let mut w = csv::Writer::from_writer(w);
            w.write_record(["symbol", "bit", "basis", "point", "circle_angle", "eom_voltage"])?;
            for (i, p) in plans.iter().enumerate() {
                let theta = 2.0 * PI * p.point as f64 / cfg.m as f64;
                w.write_record([
                    i.to_string(),
                    p.bit.to_string(),
                    p.basis.to_string(),
                    p.point.to_string(),
                    fmt_float(theta),
                    fmt_float(eom.eom_voltage(theta)),
                ])?;
            }
            w.flush()?;
            Ok(())
        })?;
    }
    eprintln!("aeta: sent {} symbols", plans.len());
    Ok(())
}

fn tap(run: &Run, flags: &Flags, fraction: Option<f64>, eve_out: Option<&Path>) -> Result<(), CliError> {
    let mode = match fraction {
        Some(f) if (0.0..=1.0).contains(&f) => TapMode::Beamsplit(f),
        Some(f) => return Err(CliError::Parameter(format!("--fraction {f} outside [0, 1]"))),
        None => TapMode::Opaque,
    };
    let eve_path = match eve_out {
        Some(p) => p.to_path_buf(),
        None => run.path("eve.aeta")?,
    };
    let mut eve = BufWriter::new(File::create(&eve_path)?);
    let header = wire::tap_stream(&mut input(flags)?, &mut output(flags)?, &mut eve, mode)?;
    eprintln!(
        "aeta: tapped {} symbols ({mode:?}); Eve's stream in {}",
        header.symbol_count,
        eve_path.display()
    );
    Ok(())
}

fn rx(run: &Run, flags: &Flags, role: RoleArg) -> Result<(), CliError> {
    let cfg = &run.cfg;
    let role = match role {
        RoleArg::Bob => ReceiverRole::Bob(cfg.key()?),
        RoleArg::Eve => ReceiverRole::Eve,
    };
    let (header, symbols) = wire::receive(&mut input(flags)?, &role, cfg.dark_rate, cfg.master_seed)?;
    let path = run.csv("rx.csv", |w| {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["symbol", "n_h", "n_v", "vh_diff", "decided_bit", "erasure"])?;
        for s in &symbols {
            w.write_record([
                s.symbol_index.to_string(),
                s.n_h.to_string(),
                s.n_v.to_string(),
                s.vh_difference.to_string(),
                s.decided_bit.to_string(),
                u8::from(s.erasure).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    })?;
    // The transmitter draws its data bits from the same master seed.
    let reference = random_bits(cfg.master_seed, symbols.len());
    let errors = symbols.iter().zip(&reference).filter(|(s, &b)| s.decided_bit != b).count();
    run.finish(
        &path,
        None,
        json!({
            "role": if matches!(role, ReceiverRole::Bob(_)) { "bob" } else { "eve" },
            "m": header.m,
            "symbols": symbols.len(),
            "erasures": symbols.iter().filter(|s| s.erasure).count(),
            "ber_vs_seeded_bits": errors as f64 / symbols.len().max(1) as f64,
        }),
    )
}
