use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::montecarlo::quarter_window;
use super::stats::{Histogram, Moments};
use crate::error::Result;
use crate::exec::Execution;
use crate::keystream::{expand_running_key, SeedKey};
use crate::parties::{basis_axis, bob_decide, eve_opaque, plan_symbol, BobDecision};
use crate::photonics::{CoherentAmplitude, DetectionRecord};
use crate::rng::{substream, Domain};

/// What the eavesdropper knows.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum EveMode {
    /// Opaque attack without the key: fixed analyzer, angle reconstruction.
    #[default]
    Unkeyed,
    /// Control experiment: Eve holds the running key and decodes like Bob.
    Keyed,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct TransmissionOptions {
    pub eve: EveMode,
    pub exec: Execution,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolRecord {
    pub symbol: u64,
    pub bit: u8,
    pub basis: u32,
    pub point: u32,
    pub bob_n_h: u64,
    pub bob_n_v: u64,
    pub bob: BobDecision,
    pub eve_n_h: u64,
    pub eve_n_v: u64,
    pub eve_vh_difference: i64,
    pub eve_bit: u8,
    pub eve_erasure: bool,
    pub eve_phi_hat: Option<f64>,
    pub eve_point: Option<u32>,
}

/// Outcome of one Alice → {Bob, Eve} run.
///
/// Bob and Eve are two scenarios over the same symbols: Bob receives the
/// channel output with the key; Eve, in the opaque attack, receives that same
/// power instead of him.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub m: u32,
    pub mean_photons: f64,
    pub transmissivity: f64,
    pub eve_mode: EveMode,
    pub records: Vec<SymbolRecord>,
    pub bob_ber: f64,
    pub eve_ber: f64,
    pub bob_erasures: u64,
    pub eve_erasures: u64,
    pub bob_histogram: Histogram,
    pub eve_histogram: Histogram,
    /// Eve's point-index error against the folded true point (unkeyed only).
    pub eve_point_mean_abs_error: f64,
    pub eve_point_error_std: f64,
}

impl TrialReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

fn eve_tie_seed(master_seed: u64) -> u64 {
    master_seed.rotate_left(17) ^ 0x9e37_79b9_7f4a_7c15
}

pub fn run_transmission(
    bits: &[u8],
    key: &SeedKey,
    m: u32,
    amp: &CoherentAmplitude,
    master_seed: u64,
    opts: TransmissionOptions,
) -> Result<TrialReport> {
    let running = expand_running_key(key, m, bits.len())?;
    let plans = bits
        .iter()
        .zip(running.bases())
        .map(|(&b, &r)| plan_symbol(b, r, m))
        .collect::<Result<Vec<_>>>()?;
    let window = quarter_window(m);

    let records: Vec<Result<SymbolRecord>> = opts.exec.map(plans.len() as u64, |i| {
        let plan = &plans[i as usize];
        let phi = PI * plan.point as f64 / m as f64;
        let axis = basis_axis(plan.basis, m);

        let mut rng = substream(master_seed, Domain::BobDetect, i);
        let bob_rec = DetectionRecord::measure(phi, axis, amp, i, &mut rng);
        let bob = bob_decide(&bob_rec, plan.basis, m, master_seed);

        let mut rng = substream(master_seed, Domain::EveDetect, i);
        let (eve_rec, eve_bit, eve_erasure, eve_phi_hat, eve_point) = match opts.eve {
            EveMode::Unkeyed => {
                let rec = DetectionRecord::measure(phi, 0.0, amp, i, &mut rng);
                let est = eve_opaque(&rec, m, window.clone(), eve_tie_seed(master_seed))?;
                (rec, est.bit_guess, est.point_estimate.is_none(), est.phi_hat, est.point_estimate)
            }
            EveMode::Keyed => {
                let rec = DetectionRecord::measure(phi, axis, amp, i, &mut rng);
                let d = bob_decide(&rec, plan.basis, m, eve_tie_seed(master_seed));
                (rec, d.bit_estimate, d.erasure, None, None)
            }
        };
        Ok(SymbolRecord {
            symbol: i,
            bit: plan.bit,
            basis: plan.basis,
            point: plan.point,
            bob_n_h: bob_rec.n_h,
            bob_n_v: bob_rec.n_v,
            bob,
            eve_n_h: eve_rec.n_h,
            eve_n_v: eve_rec.n_v,
            eve_vh_difference: eve_rec.vh_difference(),
            eve_bit,
            eve_erasure,
            eve_phi_hat,
            eve_point,
        })
    });
    let records = records.into_iter().collect::<Result<Vec<_>>>()?;

    let n = records.len().max(1) as f64;
    let bob_errors = records.iter().filter(|r| r.bob.bit_estimate != r.bit).count();
    let eve_errors = records.iter().filter(|r| r.eve_bit != r.bit).count();
    let point_errors: Vec<f64> = records
        .iter()
        .filter_map(|r| {
            let folded = if 2 * r.point > m { m - r.point } else { r.point };
            r.eve_point.map(|p| p as f64 - folded as f64)
        })
        .collect();
    let mom = Moments::of(&point_errors);
    let mean_abs = if point_errors.is_empty() {
        0.0
    } else {
        point_errors.iter().map(|e| e.abs()).sum::<f64>() / point_errors.len() as f64
    };

    Ok(TrialReport {
        m,
        mean_photons: amp.mean_photons(),
        transmissivity: amp.transmissivity(),
        eve_mode: opts.eve,
        bob_ber: bob_errors as f64 / n,
        eve_ber: eve_errors as f64 / n,
        bob_erasures: records.iter().filter(|r| r.bob.erasure).count() as u64,
        eve_erasures: records.iter().filter(|r| r.eve_erasure).count() as u64,
        bob_histogram: records.iter().map(|r| r.bob.vh_difference).collect(),
        eve_histogram: records.iter().map(|r| r.eve_vh_difference).collect(),
        eve_point_mean_abs_error: mean_abs,
        eve_point_error_std: mom.std(),
        records,
    })
}
