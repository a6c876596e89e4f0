//! Offline scheduling: the whole harvesting trace is known in advance.
//!
//! The optimal profile is non-decreasing and follows a save-then-transmit
//! shape: a silent prefix, at most one block below the inflection `P_b`,
//! then powers at or above `P_b` that step up exactly where the harvested
//! energy runs out. The solver walks the trace forward through its
//! power-exhausting segments (prefix-average minimizers). A segment whose
//! average reaches the tangent power `P_a` is transmitted as-is ("best
//! effort"); below `P_a`, consecutive segments are pooled into a scope and
//! the pooled budget is laid out like the single-period optimum: zeros, one
//! searched power, then trailing blocks near `P_a`. Two enlargement loops
//! decide how far the pooling extends - a forced loop while the layout is
//! degenerate or its level tops the next segment, and a speculative loop
//! that keeps extending while the total outage strictly improves, rolling
//! back to the best stored scope otherwise.
//!
//! Inside a scope the searched block's position comes from the budget-over-
//! tangent count `k_0 = floor(E / P_a)`; when a harvesting prefix binds
//! (possible once segments at or above `P_a` have been pooled in), the
//! position is also tried at every period boundary, and the trailing region
//! is laid out by the exhaust-point staircase of the remaining energy rather
//! than a single flat level. Every candidate keeps the layout inside the
//! harvesting prefixes by construction.

use crate::curve::{OutageCurve, Thresholds};
use crate::error::{Error, Result};
use crate::search::grid_min;
use crate::trace::{EhTrace, PowerProfile};

/// A maximal stretch of periods over which the optimal constant power is the
/// prefix-average minimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    /// First period, 0-based.
    pub start: usize,
    /// Last period, inclusive.
    pub end: usize,
    /// Per-block power sustained by the segment (carry included).
    pub avg: f64,
}

/// Next power-exhausting period from period `i` on: the argmin over `n` of
/// the average rate `(q0/M + sum_{k=i..=n} Q_k) / (n - i + 1)`, ties to the
/// smallest `n`. `q0` is carry-in energy, nonzero only while every earlier
/// block is silent. Returns the 0-based argmin period and the achieved
/// average.
pub fn next_exhaust(trace: &EhTrace, i: usize, q0: f64) -> Result<(usize, f64)> {
    if i >= trace.n() {
        return Err(Error::Domain(format!(
            "period {i} out of range for a {}-period trace",
            trace.n()
        )));
    }
    if !(q0 >= 0.0) || !q0.is_finite() {
        return Err(Error::Domain(format!("carry energy must be nonnegative, got {q0}")));
    }
    let mut sum = q0 / trace.m() as f64;
    let mut best = (i, f64::INFINITY);
    for n in i..trace.n() {
        sum += trace.rate(n);
        let avg = sum / (n - i + 1) as f64;
        if avg < best.1 {
            best = (n, avg);
        }
    }
    Ok(best)
}

/// Decompose `[start, N)` into power-exhausting segments. Segment averages
/// are non-decreasing; only the first segment sees the carry.
pub fn staircase(trace: &EhTrace, start: usize, carry: f64) -> Result<Vec<Segment>> {
    let mut segments = Vec::new();
    let mut i = start;
    let mut q0 = carry;
    while i < trace.n() {
        let (end, avg) = next_exhaust(trace, i, q0)?;
        segments.push(Segment { start: i, end, avg });
        i = end + 1;
        q0 = 0.0;
    }
    Ok(segments)
}

/// `floor(x)` with a nudge so values a hair under an integer (from the
/// tangent-power tolerance) land on it.
fn floor_nudged(x: f64) -> usize {
    (x + 1e-9).floor().max(0.0) as usize
}

/// Layout of one pooled scope: `blocks` covers the scope's blocks in order
/// and spends its energy exactly.
#[derive(Debug, Clone)]
struct Plan {
    /// Index of the last staircase segment included.
    t: usize,
    /// Last period of the scope, inclusive.
    end: usize,
    /// Pooled energy of the scope.
    energy: f64,
    /// Scope-local block powers.
    blocks: Vec<f64>,
    /// Sum of per-block outages over the scope.
    outage_sum: f64,
    /// The searched (possibly sub-inflection) power.
    p0: f64,
    /// Zero-based position of `p0` inside the scope.
    z: usize,
    /// Number of positive blocks after `p0`.
    tail_blocks: usize,
    /// First and last trailing levels (equal when the tail is flat).
    first_level: f64,
    last_level: f64,
}

impl Plan {
    fn tail_is_flat(&self) -> bool {
        self.tail_blocks == 0
            || (self.last_level - self.first_level).abs() <= 1e-9 * (1.0 + self.last_level)
    }
}

struct Solver<'a> {
    curve: &'a OutageCurve,
    th: &'a Thresholds,
    trace: &'a EhTrace,
    grid_step: f64,
}

/// Period-end spending caps of a scope tail, relative to the scope's first
/// block: `(blocks_through, cap)` pairs, the last one being the scope end
/// where the cap equals the pooled energy.
struct TailCaps {
    bounds: Vec<(f64, f64)>,
}

impl TailCaps {
    /// Staircase (uniform-as-possible) layout of `budget` over the blocks
    /// after local position `z`, with `shift` already spent at or before
    /// `z`. Calls `emit(count, level)` per run and returns the outage sum,
    /// or `None` when some prefix cannot cover its share.
    fn staircase_cost(
        &self,
        curve: &OutageCurve,
        z: usize,
        shift: f64,
        mut emit: impl FnMut(f64, f64),
    ) -> Option<f64> {
        let start = z as f64 + 1.0;
        let mut done = start;
        let mut spent = 0.0;
        let mut cost = 0.0;
        let from = self.bounds.partition_point(|&(b, _)| b < start - 0.5);
        let mut idx = from;
        while idx < self.bounds.len() {
            // Lowest prefix average from the current block on.
            let mut level = f64::INFINITY;
            let mut stop = idx;
            for (j, &(blocks, cap)) in self.bounds.iter().enumerate().skip(idx) {
                let avg = (cap - shift - spent) / (blocks - done + 1.0);
                if avg < level {
                    level = avg;
                    stop = j;
                }
            }
            if level < -1e-12 {
                return None;
            }
            let level = level.max(0.0);
            let count = self.bounds[stop].0 - done + 1.0;
            cost += count * curve.f(level);
            emit(count, level);
            spent += count * level;
            done = self.bounds[stop].0 + 1.0;
            idx = stop + 1;
        }
        Some(cost)
    }
}

impl Solver<'_> {
    fn m(&self) -> usize {
        self.trace.m()
    }

    /// Pooled layout for segments `segs[0..=t]`. `prev_z` carries the
    /// searched-block position of the plan this one enlarges, so the
    /// enlarged scope can always reproduce the smaller plan's shape.
    fn plan(
        &self,
        segs: &[Segment],
        t: usize,
        carry: f64,
        spent_before: f64,
        prev_z: Option<usize>,
    ) -> Plan {
        let m = self.m() as f64;
        let start = segs[0].start;
        let end = segs[t].end;
        let m_tot = (end - start + 1) * self.m();
        let energy = carry + m * self.trace.rates()[start..=end].iter().sum::<f64>();
        let scope_first = start * self.m();

        if energy <= 0.0 {
            return Plan {
                t,
                end,
                energy: 0.0,
                blocks: vec![0.0; m_tot],
                outage_sum: m_tot as f64,
                p0: 0.0,
                z: m_tot - 1,
                tail_blocks: 0,
                first_level: 0.0,
                last_level: 0.0,
            };
        }

        let k0 = floor_nudged(energy / self.th.p_a).min(m_tot - 1);
        let z_pooled = m_tot - k0 - 1;
        let caps = TailCaps {
            bounds: (scope_first / self.m()..=end)
                .map(|p| {
                    let g = p * self.m() + self.m() - 1;
                    ((g - scope_first) as f64, self.trace.harvest_through(g) - spent_before)
                })
                .collect(),
        };

        // The flat layout with k0 trailing blocks is optimal whenever no
        // harvesting prefix binds it; that is the common case and needs no
        // alternative positions.
        let p0_cap = energy / (k0 as f64 + 1.0);
        let unconstrained = {
            let avail0 = self.trace.harvest_through(scope_first + z_pooled) - spent_before;
            let kf = k0 as f64;
            let mut slack = avail0 >= p0_cap - 1e-12 * (1.0 + p0_cap);
            if slack && k0 > 0 {
                for &(blocks, cap) in &caps.bounds {
                    let cnt = blocks - z_pooled as f64;
                    if cnt <= 0.0 || cnt >= kf {
                        continue;
                    }
                    if p0_cap * (1.0 - cnt / kf) > cap - cnt * energy / kf + 1e-12 {
                        slack = false;
                        break;
                    }
                }
            }
            slack
        };

        let mut candidates: Vec<usize> = vec![z_pooled];
        if !unconstrained {
            if let Some(z) = prev_z {
                if z < m_tot {
                    candidates.push(z);
                }
            }
            for &(blocks, _) in &caps.bounds {
                let z = blocks as usize;
                if z < m_tot {
                    candidates.push(z);
                }
            }
            candidates.push(m_tot - 1);
            candidates.sort_unstable();
            candidates.dedup();
        }

        let mut best: Option<(f64, usize, f64)> = None; // (outage_sum, z, p0)
        for &z in &candidates {
            // Zero blocks alone already cost `z`, so deeper positions cannot
            // beat the incumbent.
            if let Some((incumbent, _, _)) = best {
                if z as f64 >= incumbent {
                    continue;
                }
            }
            if let Some((sum, p0)) =
                self.eval_candidate(&caps, z, scope_first, m_tot, energy, spent_before)
            {
                if best.is_none() || sum < best.unwrap().0 - 1e-15 {
                    best = Some((sum, z, p0));
                }
            }
        }
        let (_, z, p0) = best.expect("the last-block candidate is always feasible");

        // Materialize the winning layout.
        let mut blocks = vec![0.0; m_tot];
        blocks[z] = p0;
        let mut runs: Vec<(f64, f64)> = Vec::new();
        let mut outage_sum = z as f64 + self.curve.f(p0);
        if z + 1 < m_tot {
            let tail = caps
                .staircase_cost(self.curve, z, p0, |count, level| runs.push((count, level)))
                .expect("winning candidate was feasible");
            outage_sum += tail;
            let mut g = z + 1;
            for &(count, level) in &runs {
                for slot in blocks.iter_mut().skip(g).take(count as usize) {
                    *slot = level;
                }
                g += count as usize;
            }
        }
        let first_level = runs.first().map_or(0.0, |r| r.1);
        let last_level = runs.last().map_or(0.0, |r| r.1);
        Plan {
            t,
            end,
            energy,
            blocks,
            outage_sum,
            p0,
            z,
            tail_blocks: m_tot - 1 - z,
            first_level,
            last_level,
        }
    }

    /// Best searched power for position `z`: a grid over the sub-inflection
    /// interval plus the single at-or-above candidate, which is the level
    /// that merges `p0` into the first trailing run (capped by the
    /// harvesting prefix at `z`). Returns `(outage_sum, p0)`.
    fn eval_candidate(
        &self,
        caps: &TailCaps,
        z: usize,
        scope_first: usize,
        m_tot: usize,
        energy: f64,
        spent_before: f64,
    ) -> Option<(f64, f64)> {
        let cap0 = (self.trace.harvest_through(scope_first + z) - spent_before).min(energy);
        if cap0 < -1e-12 {
            return None;
        }
        let zeros = z as f64;
        if z + 1 == m_tot {
            if energy <= cap0 + 1e-9 * (1.0 + energy) {
                return Some((zeros + self.curve.f(energy), energy));
            }
            return None;
        }

        let objective = |p0: f64| {
            caps.staircase_cost(self.curve, z, p0, |_, _| {})
                .map_or(f64::INFINITY, |tail| self.curve.f(p0) + tail)
        };

        // Merge cap: the searched power may not exceed the first trailing
        // level it induces, or the profile would decrease into the tail.
        // `p0 <= (cap_j - p0) / count_j` for every tail boundary gives
        // `p0 <= min_j cap_j / (count_j + 1)`.
        let zf = z as f64;
        let merge = caps
            .bounds
            .iter()
            .filter(|&&(b, _)| b >= zf + 0.5)
            .map(|&(b, cap)| cap / (b - zf + 1.0))
            .fold(f64::INFINITY, f64::min);

        let upper = cap0.min(merge).max(0.0);
        let mut best = (upper, objective(upper));
        if let Some(hit) = grid_min(&objective, 0.0, self.th.p_b.min(upper), self.grid_step) {
            if hit.1 < best.1 {
                best = hit;
            }
        }
        if !best.1.is_finite() {
            return None;
        }
        Some((zeros + best.1, best.0))
    }

    /// Outage sum of continuing from the stored plan with each later segment
    /// transmitted at its own average.
    fn continuation_cost(&self, base: &Plan, segs: &[Segment], through: usize) -> f64 {
        let m = self.m() as f64;
        let mut cost = base.outage_sum;
        for seg in &segs[base.t + 1..=through] {
            cost += (seg.end - seg.start + 1) as f64 * m * self.curve.f(seg.avg);
        }
        cost
    }
}

/// Globally optimal offline profile for a trace under a concave-convex
/// outage curve. `grid_step` is the resolution of the one-dimensional
/// searches (see [`Thresholds::default_grid_step`]).
pub fn solve_p1_optimal(
    curve: &OutageCurve,
    th: &Thresholds,
    trace: &EhTrace,
    grid_step: f64,
) -> Result<PowerProfile> {
    if !(grid_step > 0.0) {
        return Err(Error::Domain(format!("grid step must be positive, got {grid_step}")));
    }
    let solver = Solver { curve, th, trace, grid_step };
    let m = trace.m();
    let mut profile = PowerProfile::zeros(trace.n(), m);
    let mut period = 0usize;
    let mut spent = 0.0f64;

    while period < trace.n() {
        let carry = (trace_harvest_before(trace, period) - spent).max(0.0);
        let segs = staircase(trace, period, carry)?;

        if segs[0].avg >= th.p_a {
            // Best effort: the segment sustains the tangent power on its own.
            let seg = segs[0];
            for g in seg.start * m..=(seg.end * m + m - 1) {
                profile.set(g, seg.avg);
            }
            spent += (seg.end - seg.start + 1) as f64 * m as f64 * seg.avg;
            period = seg.end + 1;
            continue;
        }

        let first_high = segs.iter().position(|s| s.avg >= th.p_a);
        let plan = match first_high {
            None => {
                // Every remaining segment is below the tangent power: pool
                // the whole tail and lay it out in one shot.
                solver.plan(&segs, segs.len() - 1, carry, spent, None)
            }
            Some(cut) => {
                let t0 = cut - 1;
                let mut plan = solver.plan(&segs, t0, carry, spent, None);

                // Forced enlargement: while the layout is degenerate (no
                // trailing blocks) or its level tops the next segment,
                // pooling with that segment can only help.
                while plan.t + 1 < segs.len()
                    && (plan.tail_blocks == 0 || plan.last_level > segs[plan.t + 1].avg)
                {
                    plan = solver.plan(&segs, plan.t + 1, carry, spent, Some(plan.z));
                }

                // Speculative enlargement with rollback: extending is only
                // attractive while shifting the whole searched power into a
                // flat trailing run could top the next segment.
                let mut best = plan.clone();
                while plan.t + 1 < segs.len()
                    && plan.tail_is_flat()
                    && plan.p0 > plan.tail_blocks as f64 * (segs[plan.t + 1].avg - plan.last_level)
                {
                    let cand = solver.plan(&segs, plan.t + 1, carry, spent, Some(plan.z));
                    let keep_cost = solver.continuation_cost(&best, &segs, cand.t);
                    if cand.outage_sum < keep_cost - 1e-12 {
                        best = cand.clone();
                        plan = cand;
                    } else {
                        break;
                    }
                }
                best
            }
        };

        for (offset, &p) in plan.blocks.iter().enumerate() {
            profile.set(segs[0].start * m + offset, p);
        }
        spent += plan.energy;
        period = plan.end + 1;
    }

    Ok(profile)
}

fn trace_harvest_before(trace: &EhTrace, period: usize) -> f64 {
    if period == 0 {
        0.0
    } else {
        trace.harvest_through(period * trace.m() - 1)
    }
}

/// Low-complexity offline profile: each power-exhausting segment is served
/// independently - at its average when that reaches the tangent power, and
/// with an on-off layout (silence, then `k_0` trailing blocks sharing the
/// whole segment budget) otherwise.
pub fn solve_p1_suboptimal(
    curve: &OutageCurve,
    th: &Thresholds,
    trace: &EhTrace,
) -> Result<PowerProfile> {
    let _ = curve;
    let m = trace.m();
    let mut profile = PowerProfile::zeros(trace.n(), m);
    let mut period = 0usize;
    while period < trace.n() {
        let (end, avg) = next_exhaust(trace, period, 0.0)?;
        let blocks = (end - period + 1) * m;
        let first_block = period * m;
        if avg >= th.p_a {
            for g in first_block..first_block + blocks {
                profile.set(g, avg);
            }
        } else {
            let energy = blocks as f64 * avg;
            if energy > 0.0 {
                let k0 = floor_nudged(energy / th.p_a).min(blocks - 1);
                if k0 == 0 {
                    profile.set(first_block + blocks - 1, energy);
                } else {
                    let level = energy / k0 as f64;
                    for g in first_block + blocks - k0..first_block + blocks {
                        profile.set(g, level);
                    }
                }
            }
        }
        period = end + 1;
    }
    Ok(profile)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::Thresholds;
    use crate::oracle::brute_force_p1;
    use crate::single::{solve_p3, suboptimal_onoff_n1};
    use crate::trace::validate_profile;

    fn rayleigh1() -> (OutageCurve, Thresholds) {
        let curve = OutageCurve::rayleigh(1.0).unwrap();
        let th = Thresholds::compute(&curve, 1e-9).unwrap();
        (curve, th)
    }

    #[test]
    fn next_exhaust_examples() {
        let trace = EhTrace::new(vec![1.0, 1.0, 1.0], 1).unwrap();
        assert_eq!(next_exhaust(&trace, 0, 0.0).unwrap(), (0, 1.0));

        let trace = EhTrace::new(vec![3.0, 1.0, 2.0], 1).unwrap();
        assert_eq!(next_exhaust(&trace, 0, 0.0).unwrap(), (1, 2.0));

        let trace = EhTrace::new(vec![1.0, 5.0], 1).unwrap();
        assert_eq!(next_exhaust(&trace, 0, 0.0).unwrap(), (0, 1.0));

        assert!(next_exhaust(&trace, 2, 0.0).is_err());
    }

    #[test]
    fn carry_lowers_the_split() {
        // Carry of 2 energy units on one block per period: [1+2, 5] averages
        // to 3, 4 -> still splits at period 0 but with the lifted level.
        let trace = EhTrace::new(vec![1.0, 5.0], 1).unwrap();
        assert_eq!(next_exhaust(&trace, 0, 2.0).unwrap(), (0, 3.0));
    }

    #[test]
    fn constant_trace_above_tangent_is_uniform() {
        let (curve, th) = rayleigh1();
        let trace = EhTrace::new(vec![2.0, 2.0], 2).unwrap();
        let profile = solve_p1_optimal(&curve, &th, &trace, 1e-4).unwrap();
        assert_eq!(profile.blocks(), &[2.0, 2.0, 2.0, 2.0]);
    }

    #[test]
    fn optimal_profile_is_clean_on_small_traces() {
        let (curve, th) = rayleigh1();
        for rates in [
            vec![0.2, 0.2, 2.0],
            vec![0.35, 0.1, 0.9],
            vec![0.0, 0.0, 5.0],
            vec![0.99, 1.5],
            vec![0.1, 10.0],
            vec![0.95, 0.95, 1.8],
            vec![1.8, 0.0],
            vec![0.6, 0.6],
        ] {
            let trace = EhTrace::new(rates.clone(), 1).unwrap();
            let profile = solve_p1_optimal(&curve, &th, &trace, 1e-4).unwrap();
            let report = validate_profile(&profile, &trace).unwrap();
            assert!(
                report.is_clean(),
                "trace {rates:?} -> {:?}: {:?}",
                profile.blocks(),
                report.violations
            );
        }
    }

    #[test]
    fn matches_oracle_on_named_traces() {
        let (curve, th) = rayleigh1();
        for rates in [
            vec![0.2, 0.2, 2.0],
            vec![1.0, 3.0],
            vec![3.0, 1.0],
            vec![0.99, 1.5],
            vec![0.1, 10.0],
            vec![0.95, 0.95, 1.8],
            vec![0.6, 0.6],
            vec![1.8, 0.0, 0.0],
        ] {
            let trace = EhTrace::new(rates.clone(), 1).unwrap();
            let profile = solve_p1_optimal(&curve, &th, &trace, 1e-4).unwrap();
            let (_, oracle_obj) = brute_force_p1(&curve, &trace, 1e-3).unwrap();
            let obj = profile.average_outage(&curve);
            assert!(
                obj <= oracle_obj + 1e-3,
                "trace {rates:?}: solver {obj} vs oracle {oracle_obj} ({:?})",
                profile.blocks()
            );
        }
    }

    #[test]
    fn pools_across_a_slack_boundary() {
        // Two lean periods, then a rich stretch whose level the lone block
        // would top: the optimum evens everything after the silent prefix.
        let rates = vec![
            0.6318702496046237,
            0.0,
            1.4950735502116737,
            2.38254230633899,
            0.42902684887536496,
            0.4060478414737422,
            2.9973338633586595,
        ];
        let (curve, th) = rayleigh1();
        let trace = EhTrace::new(rates.clone(), 2).unwrap();
        let profile = solve_p1_optimal(&curve, &th, &trace, 1e-3).unwrap();
        let blocks = profile.blocks();
        for w in blocks.windows(2) {
            assert!(w[1] >= w[0] - 1e-9, "profile decreases: {blocks:?}");
        }
        // Everything harvested through period 5 spread over blocks 3..=11.
        let level = 2.0 * rates[..6].iter().sum::<f64>() / 9.0;
        for &b in &blocks[3..12] {
            assert!((b - level).abs() < 1e-6, "expected pooled level {level}, got {b}");
        }
    }

    #[test]
    fn reduces_to_single_period_solver() {
        let (curve, th) = rayleigh1();
        let trace = EhTrace::new(vec![0.35], 10).unwrap();
        let profile = solve_p1_optimal(&curve, &th, &trace, 1e-4).unwrap();
        let sol = solve_p3(&curve, &th, 0.35, 10, 1e-4).unwrap();
        assert!(
            (profile.average_outage(&curve) - sol.objective).abs() < 1e-12,
            "full-horizon {} vs single-period {}",
            profile.average_outage(&curve),
            sol.objective
        );

        let sub = solve_p1_suboptimal(&curve, &th, &trace).unwrap();
        let onoff = suboptimal_onoff_n1(&curve, &th, 0.35, 10).unwrap();
        assert_eq!(sub.blocks(), onoff.profile.as_slice());
    }

    #[test]
    fn suboptimal_above_tangent_is_uniform() {
        let (curve, th) = rayleigh1();
        let trace = EhTrace::new(vec![2.0, 2.0], 3).unwrap();
        let profile = solve_p1_suboptimal(&curve, &th, &trace).unwrap();
        assert_eq!(profile.blocks(), &[2.0; 6]);
    }

    #[test]
    fn optimal_dominates_suboptimal_and_uniform_greedy() {
        let (curve, th) = rayleigh1();
        for rates in [vec![0.3, 0.5, 1.2], vec![0.4, 0.4, 0.4, 0.4], vec![2.5, 0.1, 0.7]] {
            let trace = EhTrace::new(rates.clone(), 2).unwrap();
            let opt = solve_p1_optimal(&curve, &th, &trace, 1e-4)
                .unwrap()
                .average_outage(&curve);
            let sub = solve_p1_suboptimal(&curve, &th, &trace)
                .unwrap()
                .average_outage(&curve);
            // Greedy per-period uniform: spend each period's harvest evenly.
            let greedy = rates.iter().map(|&q| curve.f(q)).sum::<f64>() / rates.len() as f64;
            assert!(opt <= sub + 1e-9, "trace {rates:?}: optimal {opt} vs suboptimal {sub}");
            assert!(opt <= greedy + 1e-9, "trace {rates:?}: optimal {opt} vs greedy {greedy}");
        }
    }

    #[test]
    fn all_zero_trace_returns_silence() {
        let (curve, th) = rayleigh1();
        let trace = EhTrace::new(vec![0.0, 0.0], 2).unwrap();
        let profile = solve_p1_optimal(&curve, &th, &trace, 1e-4).unwrap();
        assert_eq!(profile.blocks(), &[0.0; 4]);
        assert_eq!(profile.average_outage(&curve), 1.0);
    }

    #[test]
    fn save_then_transmit_structure() {
        let (curve, th) = rayleigh1();
        // Rising trace akin to two lean periods, one moderate, three rich.
        let trace = EhTrace::new(vec![0.1, 0.15, 0.5, 1.4, 1.6, 1.8], 4).unwrap();
        let profile = solve_p1_optimal(&curve, &th, &trace, 1e-4).unwrap();
        let blocks = profile.blocks();
        for w in blocks.windows(2) {
            assert!(w[1] >= w[0] - 1e-9, "profile must be non-decreasing: {blocks:?}");
        }
        let sub_inflection = blocks.iter().filter(|&&p| p > 1e-12 && p < th.p_b).count();
        assert!(sub_inflection <= 1, "at most one power below the inflection: {blocks:?}");
    }
}
