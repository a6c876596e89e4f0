//! Brute-force reference minimizers on a power grid.
//!
//! These exist to certify the structured schedulers on small instances, so
//! they must not share any structure with them: no thresholds, no curve
//! shape, no save-then-transmit assumptions. Both oracles explore every
//! gridded allocation through a plain tabulation over (block, cumulative
//! energy) states; the only fact they rely on is that the objective is a sum
//! of per-block terms. Rounding residue left by the grid goes to the last
//! block so the budget is met exactly.

use crate::curve::OutageCurve;
use crate::error::{Error, Result};
use crate::trace::{EhTrace, PowerProfile};

/// Default work cap, counted in tabulation transitions.
pub const DEFAULT_WORK_CAP: u64 = 10_000_000_000;

/// Best gridded allocation of `m * q1` over `m <= 6` interchangeable blocks.
/// Returns the non-decreasing profile and its average outage.
pub fn brute_force_p3(
    curve: &OutageCurve,
    q1: f64,
    m: usize,
    grid_step: f64,
) -> Result<(Vec<f64>, f64)> {
    brute_force_p3_capped(curve, q1, m, grid_step, DEFAULT_WORK_CAP)
}

pub fn brute_force_p3_capped(
    curve: &OutageCurve,
    q1: f64,
    m: usize,
    grid_step: f64,
    work_cap: u64,
) -> Result<(Vec<f64>, f64)> {
    if m == 0 || m > 6 {
        return Err(Error::Domain(format!("block count must be in 1..=6, got {m}")));
    }
    if !(q1 >= 0.0) || !q1.is_finite() {
        return Err(Error::Domain(format!("budget rate must be nonnegative, got {q1}")));
    }
    if !(grid_step > 0.0) {
        return Err(Error::Domain(format!("grid step must be positive, got {grid_step}")));
    }
    let total = q1 * m as f64;
    let units = (total / grid_step + 1e-9).floor() as usize;
    let residue = (total - units as f64 * grid_step).max(0.0);
    let work = (m as u64) * (units as u64 + 1) * (units as u64 + 1);
    if work > work_cap {
        return Err(Error::Resource(format!(
            "p3 oracle needs {work} transitions, cap is {work_cap}"
        )));
    }

    // f_plain[u] = F(u * step); f_res[u] additionally carries the residue,
    // pinned to the block evaluated in the first layer.
    let f_plain: Vec<f64> = (0..=units).map(|u| curve.f(u as f64 * grid_step)).collect();
    let f_res: Vec<f64> = (0..=units)
        .map(|u| curve.f(u as f64 * grid_step + residue))
        .collect();

    let mut value = f_res.clone();
    let mut parents: Vec<Vec<u32>> = Vec::with_capacity(m.saturating_sub(1));
    for _layer in 1..m {
        let mut next = vec![f64::INFINITY; units + 1];
        let mut parent = vec![0u32; units + 1];
        for (budget, slot) in next.iter_mut().enumerate() {
            let mut best = f64::INFINITY;
            let mut best_u = 0usize;
            // Smallest block power wins ties, keeping the result deterministic.
            for u in 0..=budget {
                let v = f_plain[u] + value[budget - u];
                if v < best {
                    best = v;
                    best_u = u;
                }
            }
            *slot = best;
            parent[budget] = best_u as u32;
        }
        value = next;
        parents.push(parent);
    }

    let mut profile = Vec::with_capacity(m);
    let mut budget = units;
    for parent in parents.iter().rev() {
        let u = parent[budget] as usize;
        profile.push(u as f64 * grid_step);
        budget -= u;
    }
    profile.push(budget as f64 * grid_step + residue);
    profile.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let objective = profile.iter().map(|&p| curve.f(p)).sum::<f64>() / m as f64;
    Ok((profile, objective))
}

/// Best gridded profile for a full trace with `N * M <= 9` blocks,
/// respecting every harvesting prefix constraint and spending the final
/// budget exactly. The result is canonicalized to non-decreasing block order
/// whenever the reordering stays feasible.
pub fn brute_force_p1(
    curve: &OutageCurve,
    trace: &EhTrace,
    grid_step: f64,
) -> Result<(PowerProfile, f64)> {
    brute_force_p1_capped(curve, trace, grid_step, DEFAULT_WORK_CAP)
}

pub fn brute_force_p1_capped(
    curve: &OutageCurve,
    trace: &EhTrace,
    grid_step: f64,
    work_cap: u64,
) -> Result<(PowerProfile, f64)> {
    let blocks = trace.n_blocks();
    if blocks > 9 {
        return Err(Error::Domain(format!(
            "trace has {blocks} blocks; the oracle handles at most 9"
        )));
    }
    if !(grid_step > 0.0) {
        return Err(Error::Domain(format!("grid step must be positive, got {grid_step}")));
    }

    // Cumulative-spend cap per block, in grid units.
    let caps: Vec<usize> = (0..blocks)
        .map(|g| (trace.harvest_through(g) / grid_step + 1e-9).floor() as usize)
        .collect();
    let total = trace.total_energy();
    let work: u64 = caps.iter().map(|&c| (c as u64 + 1) * (c as u64 + 1)).sum();
    if work > work_cap {
        return Err(Error::Resource(format!(
            "p1 oracle needs {work} transitions, cap is {work_cap}"
        )));
    }

    let flast = |spend: f64| curve.f(spend.max(0.0));
    if blocks == 1 {
        let profile = PowerProfile::from_blocks(vec![total], trace.n(), trace.m())?;
        let objective = flast(total);
        return Ok((profile, objective));
    }

    let max_units = caps[blocks - 2];
    let f_unit: Vec<f64> = (0..=max_units).map(|u| curve.f(u as f64 * grid_step)).collect();

    // value[c] = least outage sum over blocks 0..=k with c grid units spent.
    let mut value = vec![f64::INFINITY; max_units + 1];
    for (c, slot) in value.iter_mut().enumerate().take(caps[0] + 1) {
        *slot = f_unit[c];
    }
    let mut parents: Vec<Vec<u32>> = Vec::new();
    for k in 1..blocks - 1 {
        let mut next = vec![f64::INFINITY; max_units + 1];
        let mut parent = vec![u32::MAX; max_units + 1];
        for c in 0..=caps[k] {
            let mut best = f64::INFINITY;
            let mut best_prev = usize::MAX;
            for prev in 0..=c.min(caps[k - 1]) {
                let v = value[prev] + f_unit[c - prev];
                if v < best {
                    best = v;
                    best_prev = prev;
                }
            }
            if best_prev != usize::MAX {
                next[c] = best;
                parent[c] = best_prev as u32;
            }
        }
        value = next;
        parents.push(parent);
    }

    // Last block spends whatever is left of the exact budget.
    let mut best = f64::INFINITY;
    let mut best_c = 0usize;
    for (c, &partial) in value.iter().enumerate().take(caps[blocks - 2] + 1) {
        if !partial.is_finite() {
            continue;
        }
        let v = partial + flast(total - c as f64 * grid_step);
        if v < best {
            best = v;
            best_c = c;
        }
    }

    let mut powers = vec![0.0; blocks];
    powers[blocks - 1] = (total - best_c as f64 * grid_step).max(0.0);
    let mut c = best_c;
    for (k, parent) in parents.iter().enumerate().rev() {
        let prev = parent[c] as usize;
        powers[k + 1] = (c - prev) as f64 * grid_step;
        c = prev;
    }
    powers[0] = c as f64 * grid_step;

    let objective = powers.iter().map(|&p| curve.f(p)).sum::<f64>() / blocks as f64;
    let profile = canonicalize(powers, trace)?;
    Ok((profile, objective))
}

/// Sort the optimum into non-decreasing block order when the harvesting
/// constraints permit the reordering; otherwise keep it as found.
fn canonicalize(powers: Vec<f64>, trace: &EhTrace) -> Result<PowerProfile> {
    let mut sorted = powers.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let tol = 1e-9 * trace.total_energy().max(1.0);
    let mut spent = 0.0;
    let feasible = sorted.iter().enumerate().all(|(g, &p)| {
        spent += p;
        spent <= trace.harvest_through(g) + tol
    });
    let chosen = if feasible { sorted } else { powers };
    PowerProfile::from_blocks(chosen, trace.n(), trace.m())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::validate_profile;

    fn rayleigh1() -> OutageCurve {
        OutageCurve::rayleigh(1.0).unwrap()
    }

    /// Plain recursive enumeration of non-decreasing grid tuples; the slow
    /// twin the tabulation is checked against.
    fn enumerate_p3(curve: &OutageCurve, q1: f64, m: usize, step: f64) -> f64 {
        let total = q1 * m as f64;
        let units = (total / step + 1e-9).floor() as usize;
        let residue = total - units as f64 * step;
        fn rec(
            curve: &OutageCurve,
            step: f64,
            residue: f64,
            left: usize,
            budget: usize,
            min_u: usize,
            acc: f64,
            best: &mut f64,
        ) {
            if left == 1 {
                // Last coordinate absorbs the remaining units plus residue.
                if budget >= min_u {
                    let v = acc + curve.f(budget as f64 * step + residue);
                    if v < *best {
                        *best = v;
                    }
                }
                return;
            }
            for u in min_u..=budget / left {
                rec(curve, step, residue, left - 1, budget - u, u, acc + curve.f(u as f64 * step), best);
            }
        }
        let mut best = f64::INFINITY;
        rec(curve, step, residue, m, units, 0, 0.0, &mut best);
        best / m as f64
    }

    /// Recursive enumeration over all gridded feasible profiles of a trace.
    fn enumerate_p1(curve: &OutageCurve, trace: &EhTrace, step: f64) -> f64 {
        let blocks = trace.n_blocks();
        let caps: Vec<usize> = (0..blocks)
            .map(|g| (trace.harvest_through(g) / step + 1e-9).floor() as usize)
            .collect();
        let total = trace.total_energy();
        fn rec(
            curve: &OutageCurve,
            caps: &[usize],
            step: f64,
            total: f64,
            k: usize,
            cum: usize,
            acc: f64,
            best: &mut f64,
        ) {
            if k == caps.len() - 1 {
                let spend = total - cum as f64 * step;
                if spend >= -1e-12 {
                    let v = acc + curve.f(spend.max(0.0));
                    if v < *best {
                        *best = v;
                    }
                }
                return;
            }
            for c in cum..=caps[k] {
                rec(curve, caps, step, total, k + 1, c, acc + curve.f((c - cum) as f64 * step), best);
            }
        }
        let mut best = f64::INFINITY;
        if blocks == 1 {
            best = curve.f(total);
        } else {
            rec(curve, &caps, step, total, 0, 0, 0.0, &mut best);
        }
        best / blocks as f64
    }

    #[test]
    fn p3_zero_budget() {
        let curve = rayleigh1();
        let (profile, obj) = brute_force_p3(&curve, 0.0, 3, 1e-2).unwrap();
        assert_eq!(profile, vec![0.0; 3]);
        assert_eq!(obj, 1.0);
    }

    #[test]
    fn p3_high_budget_is_uniform() {
        // Both blocks sit in the convex region; equal split wins.
        let curve = rayleigh1();
        let (profile, _) = brute_force_p3(&curve, 2.0, 2, 1e-3).unwrap();
        assert!((profile[0] - 2.0).abs() < 2e-3, "profile {profile:?}");
        assert!((profile[1] - 2.0).abs() < 2e-3);
    }

    #[test]
    fn p3_low_budget_beats_uniform() {
        let curve = rayleigh1();
        let (_, obj) = brute_force_p3(&curve, 0.35, 4, 1e-3).unwrap();
        let uniform = curve.f(0.35);
        assert!(obj <= uniform - 1e-3, "oracle {obj} vs uniform {uniform}");
    }

    #[test]
    fn p3_matches_plain_enumeration() {
        let curve = rayleigh1();
        for &(q1, m) in &[(0.3, 3usize), (0.8, 4), (1.4, 2)] {
            let (_, dp) = brute_force_p3(&curve, q1, m, 0.05).unwrap();
            let slow = enumerate_p3(&curve, q1, m, 0.05);
            assert!((dp - slow).abs() < 1e-12, "q1={q1} m={m}: dp {dp} vs slow {slow}");
        }
    }

    #[test]
    fn p3_work_cap() {
        let curve = rayleigh1();
        let err = brute_force_p3_capped(&curve, 5.0, 6, 1e-4, 1_000_000).unwrap_err();
        assert!(matches!(err, Error::Resource(_)));
    }

    #[test]
    fn p1_single_block() {
        let curve = rayleigh1();
        let trace = EhTrace::new(vec![1.0], 1).unwrap();
        let (profile, obj) = brute_force_p1(&curve, &trace, 1e-2).unwrap();
        assert_eq!(profile.blocks(), &[1.0]);
        assert!((obj - curve.f(1.0)).abs() < 1e-15);
    }

    #[test]
    fn p1_output_is_feasible_and_canonical() {
        let curve = rayleigh1();
        let trace = EhTrace::new(vec![3.0, 1.0], 1).unwrap();
        let (profile, _) = brute_force_p1(&curve, &trace, 1e-2).unwrap();
        let report = validate_profile(&profile, &trace).unwrap();
        assert!(report.is_clean(), "violations: {:?}", report.violations);
        // Front-loaded harvest: the optimum evens out and sorting stays feasible.
        assert!(profile.blocks()[0] <= profile.blocks()[1] + 1e-12);
    }

    #[test]
    fn p1_matches_plain_enumeration() {
        let curve = rayleigh1();
        for rates in [vec![0.4, 1.1], vec![1.0, 0.2, 0.9]] {
            let trace = EhTrace::new(rates, 1).unwrap();
            let (_, dp) = brute_force_p1(&curve, &trace, 0.05).unwrap();
            let slow = enumerate_p1(&curve, &trace, 0.05);
            assert!((dp - slow).abs() < 1e-12, "dp {dp} vs slow {slow}");
        }
    }

    #[test]
    fn p1_rejects_oversized_traces() {
        let curve = rayleigh1();
        let trace = EhTrace::new(vec![1.0; 5], 2).unwrap();
        assert!(matches!(
            brute_force_p1(&curve, &trace, 1e-2),
            Err(Error::Domain(_))
        ));
    }
}
