//! Harvesting traces and power profiles over the `N x M` block horizon.
//!
//! Energy bookkeeping convention: blocks have unit length, so power and
//! per-block energy coincide. During period `i` (0-based) the transmitter
//! harvests `Q_i` per block, hence the energy available through block `j` of
//! period `i` is `M * sum_{k<i} Q_k + (j+1) * Q_i`. A profile is feasible
//! when every such prefix covers the power spent so far, and it is
//! exhaustive when the final budget is spent exactly (leftover energy could
//! always buy a lower outage in the last block).

use std::io::Write;
use std::path::Path;

use crate::curve::OutageCurve;
use crate::error::{Error, Result};

/// Per-period harvesting rates `Q_1..Q_N` with `M` blocks per period.
#[derive(Debug, Clone, PartialEq)]
pub struct EhTrace {
    rates: Vec<f64>,
    m: usize,
}

impl EhTrace {
    pub fn new(rates: Vec<f64>, m: usize) -> Result<Self> {
        if rates.is_empty() {
            return Err(Error::Domain("trace needs at least one period".into()));
        }
        if m == 0 {
            return Err(Error::Domain("need at least one block per period".into()));
        }
        if let Some(bad) = rates.iter().find(|q| !q.is_finite() || **q < 0.0) {
            return Err(Error::Domain(format!("harvest rates must be nonnegative, got {bad}")));
        }
        Ok(EhTrace { rates, m })
    }

    /// Load from CSV `period,rate` with a one-line header. Periods must be
    /// consecutive starting at 1; `m` is supplied by the caller.
    pub fn from_csv(path: &Path, m: usize) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| Error::parse(path, 0, e.to_string()))?;
        let mut rates = Vec::new();
        for (idx, record) in reader.records().enumerate() {
            let row = idx + 1;
            let record = record.map_err(|e| Error::parse(path, row, e.to_string()))?;
            if record.len() != 2 {
                return Err(Error::parse(path, row, format!("expected 2 columns, got {}", record.len())));
            }
            let period: usize = record[0]
                .parse()
                .map_err(|_| Error::parse(path, row, format!("bad period index {:?}", &record[0])))?;
            if period != row {
                return Err(Error::parse(
                    path,
                    row,
                    format!("period indices must be consecutive from 1, got {period}"),
                ));
            }
            let rate: f64 = record[1]
                .parse()
                .map_err(|_| Error::parse(path, row, format!("bad rate value {:?}", &record[1])))?;
            if !rate.is_finite() || rate < 0.0 {
                return Err(Error::parse(path, row, format!("rate must be nonnegative, got {rate}")));
            }
            rates.push(rate);
        }
        if rates.is_empty() {
            return Err(Error::parse(path, 0, "no data rows"));
        }
        EhTrace::new(rates, m)
    }

    /// Write in the same `period,rate` format that [`EhTrace::from_csv`] reads.
    pub fn write_csv(&self, writer: &mut impl Write) -> Result<()> {
        writeln!(writer, "period,rate")?;
        for (i, q) in self.rates.iter().enumerate() {
            writeln!(writer, "{},{}", i + 1, q)?;
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.rates.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn rate(&self, period: usize) -> f64 {
        self.rates[period]
    }

    pub fn n_blocks(&self) -> usize {
        self.rates.len() * self.m
    }

    /// Total harvested energy over the horizon.
    pub fn total_energy(&self) -> f64 {
        self.m as f64 * self.rates.iter().sum::<f64>()
    }

    /// Energy harvested through global block index `block` (0-based),
    /// inclusive.
    pub fn harvest_through(&self, block: usize) -> f64 {
        let period = block / self.m;
        let within = (block % self.m) + 1;
        let before: f64 = self.rates[..period].iter().sum::<f64>() * self.m as f64;
        before + within as f64 * self.rates[period]
    }
}

/// An `N x M` matrix of nonnegative block powers in block order.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerProfile {
    powers: Vec<f64>,
    n: usize,
    m: usize,
}

impl PowerProfile {
    pub fn zeros(n: usize, m: usize) -> Self {
        PowerProfile { powers: vec![0.0; n * m], n, m }
    }

    pub fn from_blocks(powers: Vec<f64>, n: usize, m: usize) -> Result<Self> {
        if powers.len() != n * m {
            return Err(Error::Domain(format!(
                "profile has {} blocks, expected {n} x {m}",
                powers.len()
            )));
        }
        if let Some(bad) = powers.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::Domain(format!("block powers must be nonnegative, got {bad}")));
        }
        Ok(PowerProfile { powers, n, m })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn blocks(&self) -> &[f64] {
        &self.powers
    }

    pub fn get(&self, period: usize, block: usize) -> f64 {
        self.powers[period * self.m + block]
    }

    pub(crate) fn set(&mut self, global_block: usize, power: f64) {
        self.powers[global_block] = power;
    }

    pub fn total_power(&self) -> f64 {
        self.powers.iter().sum()
    }

    /// Average outage probability of the profile under `curve`.
    pub fn average_outage(&self, curve: &OutageCurve) -> f64 {
        self.powers.iter().map(|&p| curve.f(p)).sum::<f64>() / self.powers.len() as f64
    }
}

/// One defect found by [`validate_profile`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// Spending through `(period, block)` exceeds the energy harvested by then.
    EhConstraint { period: usize, block: usize, spent: f64, available: f64 },
    /// The final budget is not spent exactly.
    TerminalMismatch { spent: f64, harvested: f64 },
    /// The power sequence decreases at this block boundary.
    Decrease { period: usize, block: usize, from: f64, to: f64 },
}

/// Feasibility report for a profile against a trace.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    /// True when no harvesting constraint is violated (the profile may still
    /// leave energy unused or be non-monotone).
    pub fn is_feasible(&self) -> bool {
        !self
            .violations
            .iter()
            .any(|v| matches!(v, Violation::EhConstraint { .. }))
    }
}

/// Check a profile against the harvesting constraints of a trace.
///
/// Energy comparisons use an absolute tolerance of `1e-9` after normalizing
/// by the total harvest, power comparisons after normalizing by the mean
/// block power.
pub fn validate_profile(profile: &PowerProfile, trace: &EhTrace) -> Result<ValidationReport> {
    if profile.n() != trace.n() || profile.m() != trace.m() {
        return Err(Error::Domain(format!(
            "profile is {}x{}, trace is {}x{}",
            profile.n(),
            profile.m(),
            trace.n(),
            trace.m()
        )));
    }
    let total = trace.total_energy();
    let energy_tol = 1e-9 * total.max(1.0);
    let power_tol = 1e-9 * (total / trace.n_blocks() as f64).max(1.0);

    let mut report = ValidationReport::default();
    let mut spent = 0.0;
    for (g, &p) in profile.blocks().iter().enumerate() {
        spent += p;
        let available = trace.harvest_through(g);
        if spent > available + energy_tol {
            report.violations.push(Violation::EhConstraint {
                period: g / trace.m(),
                block: g % trace.m(),
                spent,
                available,
            });
        }
        if g + 1 < profile.blocks().len() {
            let next = profile.blocks()[g + 1];
            if next < p - power_tol {
                report.violations.push(Violation::Decrease {
                    period: (g + 1) / trace.m(),
                    block: (g + 1) % trace.m(),
                    from: p,
                    to: next,
                });
            }
        }
    }
    if (spent - total).abs() > energy_tol {
        report.violations.push(Violation::TerminalMismatch { spent, harvested: total });
    }
    Ok(report)
}
