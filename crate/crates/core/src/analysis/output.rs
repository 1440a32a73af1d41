//! CSV writers for the figure outputs. Floats carry 12 significant digits.

use std::io::Write;

use super::montecarlo::OpaqueSequence;
use super::theory::CurvePoint;
use super::transmission::TrialReport;
use crate::error::Result;

/// `x` with 12 significant digits in exponent form; integers stay integral.
pub fn fmt_float(x: f64) -> String {
    if x.is_finite() && x == x.trunc() && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else if x.is_nan() {
        "NaN".to_string()
    } else {
        format!("{x:.11e}")
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

/// `m,alpha0_sq,pe_eve`, one series per `|α₀|²`.
pub fn write_fig1<W: Write>(out: W, series: &[(f64, Vec<CurvePoint>)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["m", "alpha0_sq", "pe_eve"])?;
    for (alpha0_sq, points) in series {
        for p in points {
            w.write_record([fmt_float(p.abscissa), fmt_float(*alpha0_sq), fmt_float(p.theory)])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `symbol,party,vh_diff,true_bit,decided_bit`: Bob's rows then Eve's.
pub fn write_fig4_5<W: Write>(out: W, report: &TrialReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["symbol", "party", "vh_diff", "true_bit", "decided_bit"])?;
    for r in &report.records {
        w.write_record([
            r.symbol.to_string(),
            "bob".into(),
            r.bob.vh_difference.to_string(),
            r.bit.to_string(),
            r.bob.bit_estimate.to_string(),
        ])?;
    }
    for r in &report.records {
        w.write_record([
            r.symbol.to_string(),
            "eve".into(),
            r.eve_vh_difference.to_string(),
            r.bit.to_string(),
            r.eve_bit.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `phi_rad,variance_mc,variance_theory,stderr,trials`.
pub fn write_fig6c<W: Write>(out: W, curve: &[CurvePoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["phi_rad", "variance_mc", "variance_theory", "stderr", "trials"])?;
    for p in curve {
        w.write_record([
            fmt_float(p.abscissa),
            fmt_opt(p.mc),
            fmt_float(p.theory),
            fmt_opt(p.stderr),
            (p.samples + p.excluded).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `mean_photons,n_sigma_theory,n_sigma_mc,stderr`.
pub fn write_fig7<W: Write>(out: W, curve: &[CurvePoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["mean_photons", "n_sigma_theory", "n_sigma_mc", "stderr"])?;
    for p in curve {
        w.write_record([fmt_float(p.abscissa), fmt_float(p.theory), fmt_opt(p.mc), fmt_opt(p.stderr)])?;
    }
    w.flush()?;
    Ok(())
}

/// `alice_basis,eve_basis`.
pub fn write_seqs<W: Write>(out: W, seq: &OpaqueSequence) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["alice_basis", "eve_basis"])?;
    for (a, e) in &seq.pairs {
        w.write_record([a.to_string(), e.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
