//! Causal scheduling: only past and present harvesting rates are known.
//!
//! The harvesting process is a first-order Markov chain over finitely many
//! rate states. With the battery level discretized to a uniform grid, the
//! minimum expected outage satisfies a backward recursion: the last period
//! spends everything it has, and every earlier period minimizes the
//! within-period cost of spending `b + M Q_i - B'` plus the expected
//! value-to-go at carry-out `B'`, where the expectation runs over the
//! transition row of the current state. The within-period subproblem is the
//! single-period optimum, so the value table is built directly on top of
//! [`solve_p3`].
//!
//! The look-ahead heuristics skip the table: they stretch the current
//! battery into a virtual harvesting rate, predict the next `q - 1` rates by
//! conditional means, solve the offline problem on that short virtual trace,
//! and keep only the current period's blocks. `q = 1` degenerates to the
//! greedy rule that drains the battery every period.

use rayon::prelude::*;

use crate::curve::{OutageCurve, Thresholds};
use crate::error::{Error, Result};
use crate::offline::{solve_p1_optimal, solve_p1_suboptimal};
use crate::single::solve_p3;
use crate::trace::EhTrace;

/// Finite-state Markov model of the harvesting rate.
#[derive(Debug, Clone, PartialEq)]
pub struct EhModel {
    states: Vec<f64>,
    /// Row-major `S x S`, `transition[s*S + s']` is `P(Q' = s' | Q = s)`.
    transition: Vec<f64>,
    initial: Vec<f64>,
}

const PROB_TOL: f64 = 1e-12;

impl EhModel {
    pub fn new(states: Vec<f64>, transition: Vec<Vec<f64>>, initial: Vec<f64>) -> Result<Self> {
        let s = states.len();
        if s == 0 {
            return Err(Error::Domain("model needs at least one state".into()));
        }
        if states.iter().any(|q| !q.is_finite() || *q < 0.0) {
            return Err(Error::Domain("harvest states must be nonnegative".into()));
        }
        if transition.len() != s {
            return Err(Error::Domain(format!(
                "transition matrix has {} rows for {s} states",
                transition.len()
            )));
        }
        let mut flat = Vec::with_capacity(s * s);
        for (r, row) in transition.iter().enumerate() {
            if row.len() != s {
                return Err(Error::Domain(format!("transition row {r} has {} entries", row.len())));
            }
            validate_prob_row(row, &format!("transition row {r}"))?;
            flat.extend_from_slice(row);
        }
        validate_prob_row(&initial, "initial distribution")?;
        if initial.len() != s {
            return Err(Error::Domain("initial distribution size mismatch".into()));
        }
        Ok(EhModel { states, transition: flat, initial })
    }

    /// Independent draws each period: every row equals `probs`.
    pub fn iid(states: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        let rows = vec![probs.clone(); states.len()];
        EhModel::new(states, rows, probs)
    }

    /// Deterministic single-state model.
    pub fn constant(rate: f64) -> Result<Self> {
        EhModel::new(vec![rate], vec![vec![1.0]], vec![1.0])
    }

    /// Load from CSV: the first row lists the states; a single following row
    /// is an i.i.d. probability row, while `S` following rows form the full
    /// transition matrix (initial distribution then defaults to uniform).
    pub fn from_csv(path: &std::path::Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .flexible(true)
            .from_path(path)
            .map_err(|e| Error::parse(path, 0, e.to_string()))?;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (idx, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::parse(path, idx + 1, e.to_string()))?;
            if record.iter().all(|c| c.is_empty()) {
                continue;
            }
            let row: Vec<f64> = record
                .iter()
                .map(|c| {
                    c.parse::<f64>()
                        .map_err(|_| Error::parse(path, idx + 1, format!("bad number {c:?}")))
                })
                .collect::<Result<_>>()?;
            rows.push(row);
        }
        if rows.len() < 2 {
            return Err(Error::parse(path, 0, "need a state row plus probability rows"));
        }
        let states = rows.remove(0);
        let s = states.len();
        if rows.len() == 1 {
            let probs = rows.remove(0);
            if probs.len() != s {
                return Err(Error::parse(path, 2, "probability row size mismatch"));
            }
            EhModel::iid(states, probs)
        } else if rows.len() == s {
            let uniform = vec![1.0 / s as f64; s];
            EhModel::new(states, rows, uniform)
        } else {
            Err(Error::parse(
                path,
                rows.len() + 1,
                format!("expected 1 or {s} probability rows, got {}", rows.len()),
            ))
        }
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[f64] {
        &self.states
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn transition_row(&self, state: usize) -> &[f64] {
        let s = self.states.len();
        &self.transition[state * s..(state + 1) * s]
    }

    pub fn max_state(&self) -> f64 {
        self.states.iter().cloned().fold(0.0, f64::max)
    }

    /// `E[Q_{i+steps} | Q_i = states[state]]`, composing the transition
    /// matrix `steps` times.
    pub fn cond_mean(&self, state: usize, steps: usize) -> Result<f64> {
        if state >= self.states.len() {
            return Err(Error::Domain(format!("state {state} out of range")));
        }
        if steps == 0 {
            return Ok(self.states[state]);
        }
        let s = self.states.len();
        let mut dist = self.transition_row(state).to_vec();
        for _ in 1..steps {
            let mut next = vec![0.0; s];
            for (i, &p) in dist.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                for (j, slot) in next.iter_mut().enumerate() {
                    *slot += p * self.transition[i * s + j];
                }
            }
            dist = next;
        }
        Ok(dist.iter().zip(&self.states).map(|(p, q)| p * q).sum())
    }
}

fn validate_prob_row(row: &[f64], what: &str) -> Result<()> {
    if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::Domain(format!("{what}: probabilities must be nonnegative")));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > PROB_TOL {
        return Err(Error::Domain(format!("{what}: probabilities sum to {sum}, not 1")));
    }
    Ok(())
}

/// Backward-recursion value table over (period, state, battery grid point).
///
/// `values` holds the minimum expected outage sum over the remaining blocks;
/// `policy` the arg-minimizing carry-out battery as a grid index.
#[derive(Debug, Clone)]
pub struct MdpValueTable {
    n: usize,
    m: usize,
    states: Vec<f64>,
    delta: f64,
    grid_len: usize,
    values: Vec<f64>,
    policy: Vec<u32>,
    saturated: bool,
}

/// Cap on `periods x states x grid` table entries.
const TABLE_ENTRY_CAP: usize = 50_000_000;

impl MdpValueTable {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn grid_len(&self) -> usize {
        self.grid_len
    }

    /// True when the battery grid cannot represent the largest reachable
    /// battery level, so carry-outs saturate at the cap.
    pub fn saturated(&self) -> bool {
        self.saturated
    }

    #[inline]
    fn idx(&self, period: usize, state: usize, grid: usize) -> usize {
        (period * self.states.len() + state) * self.grid_len + grid
    }

    /// Value at a grid point.
    pub fn value(&self, period: usize, state: usize, grid: usize) -> f64 {
        self.values[self.idx(period, state, grid)]
    }

    /// Value at an arbitrary battery level, linearly interpolated between
    /// grid points (the value function is continuous and piecewise smooth in
    /// the battery, so nearest-neighbor would break its monotonicity).
    pub fn value_at(&self, period: usize, state: usize, battery: f64) -> f64 {
        let pos = (battery / self.delta).clamp(0.0, (self.grid_len - 1) as f64);
        let lo = pos.floor() as usize;
        let hi = (lo + 1).min(self.grid_len - 1);
        let frac = pos - lo as f64;
        self.value(period, state, lo) * (1.0 - frac) + self.value(period, state, hi) * frac
    }

    fn nearest_grid(&self, battery: f64) -> usize {
        ((battery / self.delta).round().max(0.0) as usize).min(self.grid_len - 1)
    }
}

/// Build the value table by backward recursion.
///
/// `b_max` caps the battery grid; pass at least `(n-1) * m * max_state` to
/// keep every reachable carry-out representable (the table reports
/// saturation otherwise). The within-period subproblem is solved by
/// [`solve_p3`] on the spend implied by each carry-out choice.
pub fn build_value_table(
    curve: &OutageCurve,
    th: &Thresholds,
    model: &EhModel,
    n: usize,
    m: usize,
    delta: f64,
    b_max: f64,
) -> Result<MdpValueTable> {
    if n == 0 || m == 0 {
        return Err(Error::Domain("horizon and blocks per period must be positive".into()));
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::Domain(format!("battery step must be positive, got {delta}")));
    }
    if !(b_max >= 0.0) || !b_max.is_finite() {
        return Err(Error::Domain(format!("battery cap must be nonnegative, got {b_max}")));
    }
    let s = model.n_states();
    let grid_len = (b_max / delta + 1e-9).floor() as usize + 1;
    let entries = n
        .checked_mul(s)
        .and_then(|v| v.checked_mul(grid_len))
        .ok_or_else(|| Error::Resource("table size overflow".into()))?;
    if entries > TABLE_ENTRY_CAP {
        return Err(Error::Resource(format!(
            "value table needs {entries} entries, cap is {TABLE_ENTRY_CAP}"
        )));
    }
    let reachable = (n.saturating_sub(1) * m) as f64 * model.max_state();
    let saturated = b_max < reachable - 1e-12;

    // Within-period cost per state, indexed by the spend in grid steps:
    // spend = d * delta + offset_s with d = (battery index) - (carry index).
    // d can go negative when the period harvests more than it spends.
    let harvest: Vec<f64> = model.states().iter().map(|q| m as f64 * q).collect();
    let d_min: Vec<isize> = harvest.iter().map(|h| -((h / delta + 1e-9).floor() as isize)).collect();
    let cost: Vec<Vec<f64>> = (0..s)
        .into_par_iter()
        .map(|state| {
            let lo = d_min[state];
            (lo..grid_len as isize)
                .map(|d| {
                    let spend = (d as f64 * delta + harvest[state]).max(0.0);
                    within_period_cost(curve, th, spend, m)
                })
                .collect()
        })
        .collect();
    let cost_at = |state: usize, d: isize| -> f64 { cost[state][(d - d_min[state]) as usize] };

    let mut values = vec![0.0f64; entries];
    let mut policy = vec![0u32; entries];

    // Last period: everything is spent, carry-out 0.
    for state in 0..s {
        let base = (n - 1) * s + state;
        for ib in 0..grid_len {
            values[base * grid_len + ib] = cost_at(state, ib as isize);
        }
    }

    for period in (0..n.saturating_sub(1)).rev() {
        // Expected value-to-go per (current state, carry-out grid point).
        let mut to_go = vec![0.0f64; s * grid_len];
        for state in 0..s {
            let row = model.transition_row(state);
            for (next, &p) in row.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                let src = &values[((period + 1) * s + next) * grid_len..][..grid_len];
                let dst = &mut to_go[state * grid_len..][..grid_len];
                for (d, v) in dst.iter_mut().zip(src) {
                    *d += p * v;
                }
            }
        }

        let layer: Vec<(f64, u32)> = (0..s * grid_len)
            .into_par_iter()
            .map(|flat| {
                let state = flat / grid_len;
                let ib = (flat % grid_len) as isize;
                let carry_cap =
                    (ib + (harvest[state] / delta + 1e-9).floor() as isize).min(grid_len as isize - 1);
                let mut best = f64::INFINITY;
                let mut best_carry = 0u32;
                for carry in 0..=carry_cap {
                    let v = cost_at(state, ib - carry) + to_go[state * grid_len + carry as usize];
                    if v < best {
                        best = v;
                        best_carry = carry as u32;
                    }
                }
                (best, best_carry)
            })
            .collect();
        for (flat, (v, c)) in layer.into_iter().enumerate() {
            let state = flat / grid_len;
            let ib = flat % grid_len;
            let idx = (period * s + state) * grid_len + ib;
            values[idx] = v;
            policy[idx] = c;
        }
    }

    Ok(MdpValueTable {
        n,
        m,
        states: model.states().to_vec(),
        delta,
        grid_len,
        values,
        policy,
        saturated,
    })
}

/// Outage sum of the optimal split of `spend` over the `m` blocks of one
/// period.
fn within_period_cost(curve: &OutageCurve, th: &Thresholds, spend: f64, m: usize) -> f64 {
    if m == 1 {
        return curve.f(spend);
    }
    let q1 = spend / m as f64;
    let step = (th.p_b * 1e-3).max(1e-9);
    match solve_p3(curve, th, q1, m, step) {
        Ok(sol) => sol.objective * m as f64,
        Err(_) => m as f64,
    }
}

/// Largest absolute Bellman residual over every (period, state, grid point):
/// the stored value minus a fresh scan of the recursion it claims to solve.
pub fn bellman_consistency(
    curve: &OutageCurve,
    th: &Thresholds,
    model: &EhModel,
    table: &MdpValueTable,
) -> Result<f64> {
    let s = model.n_states();
    if s != table.states.len() {
        return Err(Error::Domain("model does not match the table".into()));
    }
    let grid_len = table.grid_len;
    let delta = table.delta;
    let m = table.m;
    let residual = (0..table.n * s * grid_len)
        .into_par_iter()
        .map(|flat| {
            let period = flat / (s * grid_len);
            let state = (flat / grid_len) % s;
            let ib = flat % grid_len;
            let battery = ib as f64 * delta;
            let budget = battery + m as f64 * table.states[state];
            let carry_cap = ((budget / delta + 1e-9).floor() as usize).min(grid_len - 1);
            let mut best = f64::INFINITY;
            for carry in 0..=carry_cap {
                if period + 1 < table.n {
                    let spend = (budget - carry as f64 * delta).max(0.0);
                    let to_go: f64 = model
                        .transition_row(state)
                        .iter()
                        .enumerate()
                        .map(|(next, p)| p * table.value(period + 1, next, carry))
                        .sum();
                    best = best.min(within_period_cost(curve, th, spend, m) + to_go);
                } else {
                    best = best.min(within_period_cost(curve, th, budget, m));
                    break;
                }
            }
            (table.value(period, state, ib) - best).abs()
        })
        .reduce(|| 0.0, f64::max);
    Ok(residual)
}

/// One causal step of the table policy: nearest-grid lookup of the stored
/// carry-out, then the single-period optimal split of the implied spend.
/// Returns the block powers for the period and the carry-out battery.
pub fn mdp_policy_step(
    curve: &OutageCurve,
    th: &Thresholds,
    table: &MdpValueTable,
    period: usize,
    state: usize,
    battery: f64,
) -> Result<(Vec<f64>, f64)> {
    if period >= table.n {
        return Err(Error::Domain(format!("period {period} out of range")));
    }
    if state >= table.states.len() {
        return Err(Error::Domain(format!("state {state} not in the model")));
    }
    if !(battery >= 0.0) || !battery.is_finite() {
        return Err(Error::Domain(format!("battery must be nonnegative, got {battery}")));
    }
    let budget = battery + table.m as f64 * table.states[state];
    let carry_out = if period + 1 == table.n {
        0.0
    } else {
        let ib = table.nearest_grid(battery);
        let stored = table.policy[table.idx(period, state, ib)] as f64 * table.delta;
        stored.min(budget)
    };
    let spend = (budget - carry_out).max(0.0);
    let q1 = spend / table.m as f64;
    let step = if th.p_b > 0.0 { th.p_b * 1e-3 } else { 1e-3 };
    let sol = solve_p3(curve, th, q1, table.m, step)?;
    Ok((sol.profile, carry_out))
}

/// Which offline solver the look-ahead heuristic runs on its virtual trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LookaheadSolver {
    Optimal,
    Suboptimal,
}

/// `q`-period look-ahead: fold the battery into the current rate, predict
/// the next `q - 1` rates by conditional means, solve offline on that
/// virtual trace, and keep the current period's blocks.
#[allow(clippy::too_many_arguments)]
pub fn lookahead_policy(
    curve: &OutageCurve,
    th: &Thresholds,
    model: &EhModel,
    q: usize,
    period: usize,
    state: usize,
    battery: f64,
    n: usize,
    m: usize,
    solver: LookaheadSolver,
    grid_step: f64,
) -> Result<Vec<f64>> {
    if q < 1 {
        return Err(Error::Domain("look-ahead window must be at least 1".into()));
    }
    if period >= n {
        return Err(Error::Domain(format!("period {period} out of range")));
    }
    if state >= model.n_states() {
        return Err(Error::Domain(format!("state {state} not in the model")));
    }
    if !(battery >= 0.0) || !battery.is_finite() {
        return Err(Error::Domain(format!("battery must be nonnegative, got {battery}")));
    }
    let ahead = (q - 1).min(n - 1 - period);
    let mut rates = Vec::with_capacity(1 + ahead);
    rates.push(model.states()[state] + battery / m as f64);
    for t in 1..=ahead {
        rates.push(model.cond_mean(state, t)?);
    }
    let virtual_trace = EhTrace::new(rates, m)?;
    let profile = match solver {
        LookaheadSolver::Optimal => solve_p1_optimal(curve, th, &virtual_trace, grid_step)?,
        LookaheadSolver::Suboptimal => solve_p1_suboptimal(curve, th, &virtual_trace)?,
    };
    Ok(profile.blocks()[..m].to_vec())
}
