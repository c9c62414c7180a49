//! Grid reports: one row of covers, masses, hitting and cover times per scale.

use std::io::{self, Write};

use serde::Serialize;

use crate::bounds::{coupon_envelope, default_eps, main_envelope};
use crate::dynamics::{all_hitting_exact, cover_time_mc};
use crate::error::{Error, Result};
use crate::gibbs::{mmin_bracket, WeightModel};
use crate::metric::{depth_for_scale, MetricParams};
use crate::natcover::NatCover;
use crate::product::{ProductCover, DEFAULT_CELL_BUDGET};
use crate::stats::Estimate;

pub const CSV_HEADER: &str =
    "delta,K,k,cells,min_mass,mmin_lo,mmin_hi,Ehit_exact,Ecov_mean,Ecov_se,coupon,main_lo,main_hi,dim_ratio";

/// Largest cover whose every cell gets an exact hitting time.
pub const EXACT_HITTING_CELLS: u64 = 1 << 16;

#[derive(Debug, Clone)]
pub struct ReportSettings {
    pub params: MetricParams,
    pub model: WeightModel,
    pub trials: u64,
    pub master_seed: u64,
    /// Defaults to `1/(2T)`.
    pub eps: Option<f64>,
    /// Cell budget for simulated covers.
    pub budget: u64,
}

impl ReportSettings {
    pub fn new(params: MetricParams, model: WeightModel, trials: u64, master_seed: u64) -> Self {
        ReportSettings {
            params,
            model,
            trials,
            master_seed,
            eps: None,
            budget: DEFAULT_CELL_BUDGET,
        }
    }
}

/// `None` marks a value that was refused or is not finite.
#[derive(Debug, Clone, Serialize)]
pub struct ReportRow {
    pub delta: f64,
    pub alphabet: usize,
    pub depth: usize,
    pub cells: u128,
    pub min_mass: f64,
    pub mmin_lo: f64,
    pub mmin_hi: f64,
    pub ehit_exact: Option<f64>,
    pub ecov: Option<Estimate>,
    pub coupon: Option<f64>,
    pub main_lo: Option<f64>,
    pub main_hi: Option<f64>,
    pub dim_ratio: f64,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// Fill one row. Refusals become `None` and a warning; only invalid input is an error.
pub fn report_row(delta: f64, s: &ReportSettings) -> Result<(ReportRow, Vec<String>)> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("grid points must lie in (0, 1), got {delta}")));
    }
    let mut warnings = Vec::new();
    let mut warn = |what: &str, e: &dyn std::fmt::Display| {
        warnings.push(format!("delta={delta}: {what} n/a ({e})"));
    };

    let shape = ProductCover::build(delta, s.params, u64::MAX);
    let (alphabet, depth, cells) = match &shape {
        Ok(c) => (c.alphabet_size(), c.depth(), c.cell_count() as u128),
        // more cells than a u64 holds
        Err(Error::CellBudget { cells, .. }) => {
            let base = NatCover::anchored(delta, s.params.base())?;
            (base.len(), depth_for_scale(delta, &s.params)?, *cells)
        }
        Err(e) => return Err(e.clone()),
    };

    let bracket = mmin_bracket(delta, s.params, &s.model)?;
    let cover = match shape {
        Ok(c) if c.cell_count() <= s.budget => Some(c),
        Ok(c) => {
            warn("simulation", &Error::CellBudget { cells: c.cell_count() as u128, budget: s.budget });
            None
        }
        Err(e) => {
            warn("simulation", &e);
            None
        }
    };

    let mut ehit = None;
    let mut coupon = None;
    if let Some(c) = &cover {
        if c.cell_count() <= EXACT_HITTING_CELLS {
            match all_hitting_exact(c, &s.model).and_then(|e| {
                let worst = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                Ok((worst, coupon_envelope(c, &e)?))
            }) {
                Ok((w, cp)) => {
                    ehit = finite(w);
                    coupon = finite(cp);
                }
                Err(e) => warn("Ehit_exact", &e),
            }
        } else {
            warn("Ehit_exact", &format!("{} cells exceed {}", c.cell_count(), EXACT_HITTING_CELLS));
        }
    }

    let ecov = match &cover {
        Some(c) => match cover_time_mc(c, &s.model, s.trials, s.master_seed) {
            Ok(e) => Some(e),
            Err(e @ (Error::Infeasible { .. } | Error::CellBudget { .. })) => {
                warn("Ecov", &e);
                None
            }
            Err(e) => return Err(e),
        },
        None => None,
    };

    let eps = s.eps.unwrap_or_else(|| default_eps(&s.params));
    let (main_lo, main_hi) = match main_envelope(delta, eps, &s.model, s.params) {
        Ok(env) => {
            let (lo, hi) = (finite(env.lo()), finite(env.hi()));
            if hi.is_none() {
                warn("main_hi", &"1/M underflows a double");
            }
            (lo, hi)
        }
        Err(e) => {
            warn("main envelope", &e);
            (None, None)
        }
    };

    Ok((
        ReportRow {
            delta,
            alphabet,
            depth,
            cells,
            min_mass: bracket.hi(),
            mmin_lo: bracket.lo(),
            mmin_hi: bracket.hi(),
            ehit_exact: ehit,
            ecov,
            coupon,
            main_lo,
            main_hi,
            dim_ratio: bracket.ln_hi / delta.ln(),
        },
        warnings,
    ))
}

/// Twelve significant digits, or `n/a`.
pub fn format_number(x: Option<f64>) -> String {
    match x {
        Some(v) if v.is_finite() => format!("{v:.11e}"),
        _ => "n/a".to_string(),
    }
}

impl ReportRow {
    pub fn csv_line(&self) -> String {
        let f = |x: f64| format_number(Some(x));
        [
            f(self.delta),
            self.alphabet.to_string(),
            self.depth.to_string(),
            self.cells.to_string(),
            f(self.min_mass),
            f(self.mmin_lo),
            f(self.mmin_hi),
            format_number(self.ehit_exact),
            format_number(self.ecov.map(|e| e.mean)),
            format_number(self.ecov.map(|e| e.stderr)),
            format_number(self.coupon),
            format_number(self.main_lo),
            format_number(self.main_hi),
            f(self.dim_ratio),
        ]
        .join(",")
    }
}

pub fn write_csv<W: Write>(rows: &[ReportRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(out, "{}", r.csv_line())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings() -> ReportSettings {
        ReportSettings::new(MetricParams::d1(0.5).unwrap(), WeightModel::Geometric, 200, 7)
    }

    #[test]
    fn header_has_fourteen_columns() {
        assert_eq!(CSV_HEADER.split(',').count(), 14);
    }

    #[test]
    fn number_format() {
        assert_eq!(format_number(Some(0.25)), "2.50000000000e-1");
        assert_eq!(format_number(Some(f64::INFINITY)), "n/a");
        assert_eq!(format_number(None), "n/a");
    }

    #[test]
    fn quarter_row() {
        let (row, _) = report_row(0.25, &settings()).unwrap();
        assert_eq!((row.alphabet, row.depth, row.cells), (4, 3, 64));
        assert!(row.mmin_lo <= row.min_mass && row.min_mass <= row.mmin_hi);
        assert!((row.ehit_exact.unwrap() - 582.0).abs() < 1e-8);
        assert!(row.ecov.is_some());
        assert!(row.main_lo.unwrap() <= row.main_hi.unwrap());
        assert_eq!(row.csv_line().split(',').count(), 14);
    }

    #[test]
    fn refused_row_has_gaps() {
        let (row, warnings) = report_row(0.125, &settings()).unwrap();
        assert!(row.ecov.is_none());
        assert!(!warnings.is_empty());
        assert!(row.csv_line().contains("n/a"));
    }

    #[test]
    fn bad_delta() {
        assert!(report_row(1.5, &settings()).is_err());
    }
}
