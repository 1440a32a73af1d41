//! Acceptance criteria. Prints one PASS/FAIL line each and exits non-zero if
//! any criterion fails.

use std::f64::consts::{FRAC_PI_4, PI};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use aeta::analysis::output::write_fig4_5;
use aeta::analysis::*;
use aeta::keystream::SeedKey;
use aeta::parties::{decode_point, encode_point};
use aeta::photonics::*;
use aeta::rng::random_bits;
use aeta::wire::{decode_frame, encode_frame, tap, Frame, SymbolFrame, TapMode};
use aeta::Execution;
use nalgebra::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EXEC: Execution = Execution::Parallel;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

fn key() -> SeedKey {
    SeedKey::from_hex("ace1", None).unwrap()
}

fn fig4_5_run(seed: u64) -> TrialReport {
    let amp = CoherentAmplitude::from_mean_photons(27.0).unwrap();
    run_transmission(
        &random_bits(seed, 10_000),
        &key(),
        50,
        &amp,
        seed,
        TransmissionOptions::default(),
    )
    .unwrap()
}

fn c1_bob_error_free() -> Outcome {
    let t = Instant::now();
    let r = fig4_5_run(1);
    let el = t.elapsed();
    let mass = r.bob_histogram.mass_in(-4, 4);
    check(
        r.bob_ber == 0.0 && mass == 0 && within(el, 5.0),
        format!("bob_ber={} mass[-4,4]={mass} t={el:.2?}", r.bob_ber),
    )
}

fn c2_eve_guessing() -> Outcome {
    let t = Instant::now();
    let r = fig4_5_run(1);
    let el = t.elapsed();
    let centre = r.eve_histogram.mass_in(-4, 4);
    let spread_ok = r.eve_histogram.min().unwrap() < -4 && r.eve_histogram.max().unwrap() > 4;
    // Eve's V−H must look the same whichever bit was sent.
    let by_bit = |b: u8| -> Vec<f64> {
        r.records
            .iter()
            .filter(|s| s.bit == b)
            .map(|s| s.eve_vh_difference as f64)
            .collect()
    };
    let (_, p) = aeta::analysis::stats::ks_two_sample(&by_bit(0), &by_bit(1));
    check(
        (0.4..=0.6).contains(&r.eve_ber) && centre > 0 && spread_ok && p > 1e-3 && within(el, 5.0),
        format!(
            "eve_ber={} mass[-4,4]={centre} range=[{},{}] ks_p(bit0,bit1)={p:.3} t={el:.2?}",
            r.eve_ber,
            r.eve_histogram.min().unwrap(),
            r.eve_histogram.max().unwrap()
        ),
    )
}

fn c3_fig1() -> Outcome {
    let t = Instant::now();
    let ms: Vec<u32> = (2..=130).step_by(4).collect();
    let mut ok = true;
    let mut detail = String::new();
    for a in [1.0, 10.0] {
        let curve = pe_eve_curve(a, &ms, EXEC).unwrap();
        let v: Vec<f64> = curve.iter().map(|p| p.theory).collect();
        let worst = v.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        ok &= worst >= -1e-12;
        if a == 1.0 {
            ok &= (v[0] - 0.00460).abs() <= 1e-4;
            ok &= *v.last().unwrap() >= 0.45;
        }
        detail += &format!("|a|²={a}: pe(2)={:.6} pe(130)={:.6} min_step={worst:.1e}; ", v[0], v.last().unwrap());
    }
    let el = t.elapsed();
    check(ok && within(el, 60.0), format!("{detail}t={el:.2?}"))
}

fn c4_n_sigma() -> Outcome {
    let t = Instant::now();
    let mut ok = true;
    let mut detail = String::new();
    for (i, n) in [10.0, 100.0, 1000.0].into_iter().enumerate() {
        let p = n_sigma_mc(500, n, 100_000, 40 + i as u64, EXEC).unwrap();
        let mc = p.mc.unwrap();
        let rel = mc / p.theory - 1.0;
        ok &= rel.abs() <= 0.15;
        detail += &format!("<n>={n}: mc={mc:.2} theory={:.2} rel={rel:+.3}; ", p.theory);
    }
    let el = t.elapsed();
    check(ok && within(el, 30.0), format!("{detail}t={el:.2?}"))
}

fn c5_sequence_s() -> Outcome {
    let t = Instant::now();
    let s = opaque_sequence(200, 113.0, quarter_window(200), 25_000, 5, EXEC).unwrap();
    let el = t.elapsed();
    check(
        (4.0..=9.0).contains(&s.mean_abs_error) && within(el, 10.0),
        format!(
            "mean|err|={:.3} std={:.3} erasures={} t={el:.2?}",
            s.mean_abs_error, s.error_std, s.erasures
        ),
    )
}

fn c6_fig6c() -> Outcome {
    let t = Instant::now();
    let c = angle_variance_curve(38.0, &[0.0, 0.05, FRAC_PI_4], 100_000, 6, EXEC).unwrap();
    let el = t.elapsed();
    let (v0, v05, v45) = (c[0].mc.unwrap(), c[1].mc.unwrap(), c[2].mc.unwrap());
    let rel = v45 * 152.0 - 1.0;
    check(
        v0 == 0.0 && rel.abs() <= 0.15 && v05 < 0.5 * v45 && within(el, 30.0),
        format!("var(0)={v0} var(0.05)={v05:.5} var(π/4)={v45:.5} rel={rel:+.3} t={el:.2?}"),
    )
}

fn c7_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let d = truncation_dim(10.0, DEFAULT_TAIL_BOUND).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let mut draw = || Complex::from_polar(rng.random_range(0.0..10f64).sqrt(), rng.random_range(0.0..2.0 * PI));
        let (b, g) = (draw(), draw());
        let td = trace_distance(&fock_density(b, d).unwrap(), &fock_density(g, d).unwrap()).unwrap();
        let closed = (1.0 - coherent_overlap(b, g).norm_sqr()).sqrt();
        worst = worst.max((td - closed).abs());
    }
    let d1 = truncation_dim(1.0, DEFAULT_TAIL_BOUND).unwrap();
    let pe2 = helstrom_error(
        &mixture_density(0, 2, 1.0, d1).unwrap(),
        &mixture_density(1, 2, 1.0, d1).unwrap(),
    )
    .unwrap();
    let closed2 = 0.5 * (1.0 - (1.0 - (-4.0f64).exp()).sqrt());
    let bob = pe_bob(1.0, 27.0);
    check(
        worst <= 1e-8 && (pe2 - closed2).abs() <= 1e-6 && (bob / 8.8e-25 - 1.0).abs() < 0.01,
        format!(
            "trace_distance max_dev={worst:.1e} helstrom(m=2)={pe2:.8} closed={closed2:.8} pe_bob={bob:.3e}"
        ),
    )
}

fn kpa_runs(mean: f64, runs: u64) -> Vec<KpaTrial> {
    let amp = CoherentAmplitude::from_mean_photons(mean).unwrap();
    (0..runs)
        .map(|run| {
            let value = (run.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15) >> 48) | 1;
            let key = SeedKey::with_default_taps(value, 16).unwrap();
            kpa_trial(&key, 200, &amp, 50, 800 + run, EXEC).unwrap()
        })
        .collect()
}

fn c8_kpa_masking() -> Outcome {
    let t = Instant::now();
    let bright = kpa_runs(1e6, 20);
    let first = bright.iter().filter(|k| k.outscored_by == 0).count();
    let dim = kpa_runs(113.0, 20);
    let masked = dim.iter().filter(|k| k.rivals * 100 >= k.candidates).count();
    let max_rivals = dim.iter().map(|k| k.rivals).max().unwrap();
    let el = t.elapsed();
    check(
        first * 100 >= 95 * 20 && masked * 100 >= 80 * 20 && within(el, 300.0),
        format!(
            "<n>=1e6 first in {first}/20; <n>=113 masked (>=1% rivals) in {masked}/20, max rivals {max_rivals}/{} t={el:.2?}",
            dim[0].candidates
        ),
    )
}

fn report_bytes(threads: usize) -> Vec<u8> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    pool.install(|| {
        let r = fig4_5_run(9);
        let mut out = r.to_json().into_bytes();
        write_fig4_5(&mut out, &r).unwrap();
        let p = n_sigma_mc(500, 100.0, 5_000, 9, EXEC).unwrap();
        out.extend(serde_json::to_vec(&p).unwrap());
        out
    })
}

fn c9_properties() -> Outcome {
    let mut ok = true;
    for m in [2u32, 6, 10, 50, 102] {
        let mut seen = vec![false; m as usize];
        for r in 0..m / 2 {
            for b in 0..2u8 {
                let p = encode_point(b, r, m).unwrap().index();
                ok &= !seen[p as usize] && decode_point(p, m) == (b, r);
                seen[p as usize] = true;
            }
        }
        ok &= seen.iter().all(|&s| s);
        ok &= (0..m).all(|p| decode_point(p, m).0 != decode_point((p + 1) % m, m).0);
    }
    let mapping = ok;

    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut frames_ok = true;
    for i in 0..10_000u64 {
        let mean = rng.random_range(0.0..1e7);
        let f = SymbolFrame {
            symbol_index: i,
            circle_angle: rng.random_range(0.0..2.0 * PI),
            mean_photons: mean,
        };
        let frame = Frame::Symbol(f);
        let bytes = encode_frame(&frame).unwrap();
        frames_ok &= decode_frame(&bytes).unwrap() == (frame, bytes.len());
        for mode in [TapMode::Opaque, TapMode::Beamsplit(rng.random_range(0.0..=1.0))] {
            let (e, b) = tap(f, mode).unwrap();
            frames_ok &= e.mean_photons + b.mean_photons == mean;
        }
    }

    let one = report_bytes(1);
    let eight = report_bytes(8);
    let again = report_bytes(8);
    let identical = one == eight && eight == again;
    check(
        mapping && frames_ok && identical,
        format!("mapping={mapping} frames+energy={frames_ok} byte-identical(1,8,8)={identical} ({} bytes)", one.len()),
    )
}

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 9] = [
        ("1 bob error-free regime", c1_bob_error_free),
        ("2 eve guessing regime", c2_eve_guessing),
        ("3 eavesdropper bit-error curve", c3_fig1),
        ("4 N_sigma line", c4_n_sigma),
        ("5 sequence-S statistics", c5_sequence_s),
        ("6 angle variance shape", c6_fig6c),
        ("7 oracle equivalences", c7_oracles),
        ("8 known-plaintext noise masking", c8_kpa_masking),
        ("9 protocol/property suite", c9_properties),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let o = run();
        println!("{} criterion {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
