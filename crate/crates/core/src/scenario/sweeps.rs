use std::io::Write;

use crate::model::{build_space, ModelParams};
use crate::par::{self, Execution};
use crate::perturbation::{energy_correction2, transition_element, Transition};
use crate::spectrum::{dressed_coefficients, jc_level, solve};
use crate::Result;

/// Rows of numbers under a header, written as CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(f64::to_string))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Second-order results against exact diagonalisation, one row per coupling.
///
/// Energy shifts are measured from the Jaynes-Cummings levels (`0` and
/// `E-_1`); matrix elements are magnitudes, `|mu c|` for the exact side.
pub fn perturbation_table(
    params: &ModelParams,
    photon_cutoff: usize,
    couplings: &[f64],
    exec: Execution,
) -> Result<Table> {
    let mut header: Vec<String> = [
        "coupling",
        "delta0_pert",
        "delta0_exact",
        "delta1_pert",
        "delta1_exact",
    ]
    .map(String::from)
    .to_vec();
    for t in Transition::ALL {
        header.push(format!("{t}_pert"));
        header.push(format!("{t}_exact"));
    }
    let space = build_space(photon_cutoff, 2)?;
    let rows = par::map(exec, couplings, |&coupling| -> Result<Vec<f64>> {
        let p = params.with_coupling(coupling);
        let eig = solve(&p, &space)?;
        let e0 = eig.rabi_index(0)?;
        let e1 = eig.rabi_index(1)?;
        let c0 = dressed_coefficients(&eig, e0)?;
        let c1 = dressed_coefficients(&eig, e1)?;
        let mut row = vec![
            coupling,
            energy_correction2(&p, 0)?,
            eig.energy(e0),
            energy_correction2(&p, 1)?,
            eig.energy(e1) - jc_level(&p, 1)?.energy_minus,
        ];
        for t in Transition::ALL {
            let coeffs = if t.dressed_level() == 0 { &c0 } else { &c1 };
            let amp = match t.atom() {
                crate::model::AtomState::G => coeffs.c_g[t.target_photons()],
                _ => coeffs.d_e[t.target_photons()],
            };
            row.push(transition_element(&p, t)?.abs());
            row.push(t.dipole(&p).abs() * amp.norm());
        }
        Ok(row)
    });
    Ok(Table {
        header,
        rows: rows.into_iter().collect::<Result<_>>()?,
    })
}

/// Lowest `levels` interacting-sector energies, one row per coupling.
pub fn spectrum_table(
    params: &ModelParams,
    photon_cutoff: usize,
    couplings: &[f64],
    levels: usize,
    exec: Execution,
) -> Result<Table> {
    let mut header = vec!["coupling".to_string()];
    header.extend((0..levels).map(|k| format!("E{k}")));
    let space = build_space(photon_cutoff, 2)?;
    let rows = par::map(exec, couplings, |&coupling| -> Result<Vec<f64>> {
        let eig = solve(&params.with_coupling(coupling), &space)?;
        let mut row = vec![coupling];
        for k in 0..levels {
            row.push(eig.energy(eig.rabi_index(k)?));
        }
        Ok(row)
    });
    Ok(Table {
        header,
        rows: rows.into_iter().collect::<Result<_>>()?,
    })
}
