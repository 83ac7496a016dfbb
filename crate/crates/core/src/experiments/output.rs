use std::io::{Read, Write};

use crate::dynamics::DensityMatrix;
use crate::error::{Error, Result};
use crate::observables::ThermoReadout;
use crate::scalar::{Operator, C, DIM};

use super::config::format_zeta;
use super::run::{CurrentsRun, SteadyRun};
use super::sweep::SweepResult;

pub const THERMO_HEADER: [&str; 11] = [
    "t", "theta_c", "theta_h", "theta_w", "qdot_c", "qdot_h", "qdot_w", "cop", "coh_c", "coh_h", "coh_w",
];

pub const SWEEP_HEADER: [&str; 8] = [
    "zeta",
    "theta_ss",
    "delta_theta",
    "theta_min",
    "min_at_steady",
    "qdot_c_ss",
    "qdot_w_ss",
    "cop_ss",
];

pub const CURRENTS_HEADER: [&str; 5] = ["zeta", "t", "qdot_c", "qdot_h", "qdot_w"];

pub const COP_HEADER: [&str; 3] = ["zeta", "t", "cop"];

pub const CROSSINGS_HEADER: [&str; 4] = ["zeta", "crossings", "first_crossing_time", "initial_difference"];

fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:e}")
    }
}

fn thermo_record(t: String, r: &ThermoReadout<f64>) -> Vec<String> {
    let mut rec = vec![t];
    rec.extend(r.theta.iter().map(|x| x.to_string()));
    rec.extend(r.qdot.iter().map(|&x| num(x)));
    rec.push(r.cop.to_string());
    rec.extend(r.coherence.iter().map(|&x| num(x)));
    rec
}

/// One row per sample with the fixed thermodynamic header.
pub fn write_thermo_csv<W: Write>(writer: W, times: &[f64], readouts: &[ThermoReadout<f64>]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(THERMO_HEADER)?;
    for (&t, r) in times.iter().zip(readouts) {
        csv.write_record(thermo_record(num(t), r))?;
    }
    csv.flush()?;
    Ok(())
}

/// The steady readout as a single row at `t = inf`.
pub fn write_steady_csv<W: Write>(writer: W, run: &SteadyRun) -> Result<()> {
    write_thermo_csv(writer, &[f64::INFINITY], std::slice::from_ref(&run.readout))
}

pub fn write_sweep_csv<W: Write>(writer: W, result: &SweepResult) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(SWEEP_HEADER)?;
    for point in &result.points {
        let rec = match point {
            Ok(p) => {
                let (theta_min, at_steady) = match &p.minimum {
                    Some(m) => (num(m.theta_min), m.at_steady.to_string()),
                    None => ("nan".into(), String::new()),
                };
                vec![
                    format_zeta(p.zeta),
                    num(p.theta_ss),
                    num(p.delta_theta),
                    theta_min,
                    at_steady,
                    num(p.qdot_ss[0]),
                    num(p.qdot_ss[2]),
                    p.cop_ss.to_string(),
                ]
            }
            Err(f) => {
                let mut rec = vec![format_zeta(f.zeta)];
                rec.extend(["nan", "nan", "nan", "", "nan", "nan", "nan"].map(String::from));
                rec
            }
        };
        csv.write_record(rec)?;
    }
    csv.flush()?;
    Ok(())
}

pub fn write_currents_csv<W: Write>(writer: W, run: &CurrentsRun) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(CURRENTS_HEADER)?;
    for s in &run.series {
        for (&t, r) in run.times.iter().zip(&s.readouts) {
            let mut rec = vec![format_zeta(s.zeta), num(t)];
            rec.extend(r.qdot.iter().map(|&q| num(q)));
            csv.write_record(rec)?;
        }
    }
    csv.flush()?;
    Ok(())
}

pub fn write_cop_csv<W: Write>(writer: W, run: &CurrentsRun) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(COP_HEADER)?;
    for s in &run.series {
        for (&t, r) in run.times.iter().zip(&s.readouts) {
            csv.write_record([format_zeta(s.zeta), num(t), r.cop.to_string()])?;
        }
    }
    csv.flush()?;
    Ok(())
}

pub fn write_crossings_csv<W: Write>(writer: W, run: &CurrentsRun) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(CROSSINGS_HEADER)?;
    for c in &run.crossings {
        csv.write_record([
            format_zeta(c.zeta),
            c.count.to_string(),
            c.first_time.map_or("nan".into(), num),
            c.initial_difference.map_or("nan".into(), num),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

fn state_header() -> Vec<String> {
    let mut h = vec!["t".to_string()];
    for i in 0..DIM {
        for j in i..DIM {
            h.push(format!("re_{i}{j}"));
            h.push(format!("im_{i}{j}"));
        }
    }
    h
}

/// Upper triangle of each state, enough to rebuild it exactly.
pub fn write_states_csv<W: Write>(writer: W, times: &[f64], states: &[DensityMatrix<f64>]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(state_header())?;
    for (&t, rho) in times.iter().zip(states) {
        let m = rho.matrix();
        let mut rec = vec![num(t)];
        for i in 0..DIM {
            for j in i..DIM {
                rec.push(num(m[(i, j)].re));
                rec.push(num(m[(i, j)].im));
            }
        }
        csv.write_record(rec)?;
    }
    csv.flush()?;
    Ok(())
}

pub fn read_states_csv<R: Read>(reader: R) -> Result<Vec<(f64, DensityMatrix<f64>)>> {
    let mut csv = csv::Reader::from_reader(reader);
    let expected = state_header();
    if csv.headers()?.iter().ne(expected.iter().map(String::as_str)) {
        return Err(Error::Config("unexpected state CSV header".into()));
    }
    let mut out = Vec::new();
    for record in csv.records() {
        let record = record?;
        let field = |k: usize| -> Result<f64> {
            record
                .get(k)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Config(format!("bad field {k} in state CSV row {:?}", record.position())))
        };
        let mut m = Operator::<f64>::zeros();
        let mut k = 1;
        for i in 0..DIM {
            for j in i..DIM {
                let z = C::new(field(k)?, field(k + 1)?);
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
                k += 2;
            }
        }
        out.push((field(0)?, DensityMatrix::new(m)?));
    }
    Ok(out)
}
