//! Power allocation for a single harvesting period: `M` blocks sharing an
//! average power budget `Q_1`.
//!
//! With the whole budget available up front, the problem is to minimize the
//! average outage `(1/M) sum_j F(P_j)` subject to `sum_j P_j <= M Q_1`.
//! For a concave-convex curve the optimum has a threshold structure:
//!
//! * `Q_1 >= P_a`: transmit uniformly at `Q_1`;
//! * `Q_1 < P_a`: stay silent on most blocks, spend at most one block with a
//!   power below `P_b`, and split the rest equally over `k_0` trailing
//!   blocks, where `k_0 = floor(Q_1 / P_a * M)`. The single sub-`P_b` power
//!   comes from a one-dimensional search (the objective is not monotone
//!   there, so the scan is exhaustive).
//!
//! The on-off variant skips the search and spreads the whole budget evenly
//! over the `k_0` trailing blocks; its objective converges to the optimum as
//! `M` grows.

use crate::curve::{OutageCurve, Thresholds};
use crate::error::{Error, Result};
use crate::search::grid_min;

/// Solution of the single-period problem.
#[derive(Debug, Clone)]
pub struct N1Solution {
    /// Per-block powers, non-decreasing over the block index.
    pub profile: Vec<f64>,
    /// Number of trailing blocks sharing the identical high power.
    pub k0: usize,
    /// The one power that may lie below the inflection (0 when unused).
    pub p_hat0: f64,
    /// Average outage probability of the profile.
    pub objective: f64,
}

impl N1Solution {
    fn from_profile(curve: &OutageCurve, profile: Vec<f64>, k0: usize, p_hat0: f64) -> N1Solution {
        let objective = profile.iter().map(|&p| curve.f(p)).sum::<f64>() / profile.len() as f64;
        N1Solution { profile, k0, p_hat0, objective }
    }
}

/// Average outage of `k + 1` blocks where one carries `p` and the other `k`
/// share the remaining `total_energy - p` equally:
/// `(1/(k+1)) [F(p) + k F((total_energy - p)/k)]`.
pub fn f_k_objective(curve: &OutageCurve, total_energy: f64, k: usize, p: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::Domain("k must be a positive integer".into()));
    }
    if !(total_energy >= 0.0) {
        return Err(Error::Domain(format!("total energy must be nonnegative, got {total_energy}")));
    }
    let cap = total_energy / (k as f64 + 1.0);
    if !(0.0..=cap + 1e-12 * (1.0 + cap)).contains(&p) {
        return Err(Error::Domain(format!(
            "p = {p} outside [0, total/(k+1)] = [0, {cap}]"
        )));
    }
    let kf = k as f64;
    Ok((curve.f(p) + kf * curve.f((total_energy - p) / kf)) / (kf + 1.0))
}

/// Split of `floor(q1 / p_a * m)` with a one-ulp-scale nudge so exact
/// multiples do not fall on the wrong side of the floor.
fn k0_blocks(q1: f64, p_a: f64, m: usize) -> usize {
    ((q1 / p_a * m as f64 + 1e-9).floor() as usize).min(m)
}

/// Optimal single-period allocation.
///
/// `grid_step` is the scan resolution for the sub-inflection search (see
/// [`Thresholds::default_grid_step`]).
pub fn solve_p3(
    curve: &OutageCurve,
    th: &Thresholds,
    q1: f64,
    m: usize,
    grid_step: f64,
) -> Result<N1Solution> {
    if m == 0 {
        return Err(Error::Domain("need at least one block per period".into()));
    }
    if !(q1 >= 0.0) || !q1.is_finite() {
        return Err(Error::Domain(format!("harvest rate must be nonnegative, got {q1}")));
    }
    if !(grid_step > 0.0) {
        return Err(Error::Domain(format!("grid step must be positive, got {grid_step}")));
    }
    if q1 == 0.0 {
        return Ok(N1Solution::from_profile(curve, vec![0.0; m], 0, 0.0));
    }
    if q1 >= th.p_a {
        return Ok(N1Solution::from_profile(curve, vec![q1; m], m, 0.0));
    }

    let total = q1 * m as f64;
    let k0 = k0_blocks(q1, th.p_a, m);
    if k0 == 0 {
        // Less than one tangent-level block of energy: spend it all at the
        // last block (one positive power is allowed below the inflection).
        let mut profile = vec![0.0; m];
        profile[m - 1] = total;
        return Ok(N1Solution::from_profile(curve, profile, 0, total));
    }

    let p_hat0 = search_low_power(curve, th, total, k0, grid_step).0;
    let level = (total - p_hat0) / k0 as f64;
    let mut profile = vec![0.0; m];
    profile[m - k0 - 1] = p_hat0;
    for slot in profile.iter_mut().skip(m - k0) {
        *slot = level;
    }
    Ok(N1Solution::from_profile(curve, profile, k0, p_hat0))
}

/// Minimize `F(p) + k0 F((total - p)/k0)` over `[0, P_b) U {total/(k0+1)}`.
/// Ties go to the smallest power. Returns `(p, objective_sum)`.
pub(crate) fn search_low_power(
    curve: &OutageCurve,
    th: &Thresholds,
    total: f64,
    k0: usize,
    grid_step: f64,
) -> (f64, f64) {
    let kf = k0 as f64;
    let objective = |p: f64| curve.f(p) + kf * curve.f((total - p) / kf);
    let equal_share = total / (kf + 1.0);
    // Candidates are the sub-inflection interval plus the equal split, which
    // always sits at or above the inflection. Ties go to the smallest power,
    // so the equal split only wins on a strict improvement.
    let mut best = match grid_min(&objective, 0.0, th.p_b, grid_step) {
        Some(hit) => hit,
        None => return (equal_share, objective(equal_share)),
    };
    let split_value = objective(equal_share);
    if split_value < best.1 {
        best = (equal_share, split_value);
    }
    best
}

/// On-off single-period allocation: `k_0` trailing blocks at the common
/// level `M Q_1 / k_0`, everything before them silent.
pub fn suboptimal_onoff_n1(
    curve: &OutageCurve,
    th: &Thresholds,
    q1: f64,
    m: usize,
) -> Result<N1Solution> {
    if m == 0 {
        return Err(Error::Domain("need at least one block per period".into()));
    }
    if !(q1 >= 0.0) || !q1.is_finite() {
        return Err(Error::Domain(format!("harvest rate must be nonnegative, got {q1}")));
    }
    if q1 == 0.0 {
        return Ok(N1Solution::from_profile(curve, vec![0.0; m], 0, 0.0));
    }
    if q1 >= th.p_a {
        return Ok(N1Solution::from_profile(curve, vec![q1; m], m, 0.0));
    }
    let total = q1 * m as f64;
    let k0 = k0_blocks(q1, th.p_a, m);
    let mut profile = vec![0.0; m];
    if k0 == 0 {
        profile[m - 1] = total;
        return Ok(N1Solution::from_profile(curve, profile, 0, total));
    }
    let level = total / k0 as f64;
    for slot in profile.iter_mut().skip(m - k0) {
        *slot = level;
    }
    Ok(N1Solution::from_profile(curve, profile, k0, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::Thresholds;
    use crate::curve::OutageCurve;

    fn rayleigh1() -> (OutageCurve, Thresholds) {
        let curve = OutageCurve::rayleigh(1.0).unwrap();
        let th = Thresholds::compute(&curve, 1e-9).unwrap();
        (curve, th)
    }

    #[test]
    fn f_k_objective_values() {
        let (curve, _) = rayleigh1();
        // Symmetric split: both blocks at 1, objective F(1).
        let v = f_k_objective(&curve, 2.0, 1, 1.0).unwrap();
        assert!((v - 0.6321205588285577).abs() < 1e-15, "got {v}");

        // Zero budget: every block silent, certain outage.
        let v = f_k_objective(&curve, 0.0, 1, 0.0).unwrap();
        assert_eq!(v, 1.0);

        // One silent block plus three at 3.5/3.
        let v = f_k_objective(&curve, 3.5, 3, 0.0).unwrap();
        let expect = (1.0 + 3.0 * curve.f(3.5 / 3.0)) / 4.0;
        assert!((v - expect).abs() < 1e-15);

        assert!(f_k_objective(&curve, 2.0, 1, 1.5).is_err());
        assert!(f_k_objective(&curve, 2.0, 0, 0.0).is_err());
    }

    #[test]
    fn uniform_above_tangent() {
        let (curve, th) = rayleigh1();
        let sol = solve_p3(&curve, &th, 2.0, 5, 1e-4).unwrap();
        assert_eq!(sol.profile, vec![2.0; 5]);
        assert!((sol.objective - curve.f(2.0)).abs() < 1e-15);
    }

    #[test]
    fn k0_from_tangent_ratio() {
        let (curve, th) = rayleigh1();
        let sol = solve_p3(&curve, &th, 0.35, 10, 1e-4).unwrap();
        assert_eq!(sol.k0, 3);
        // Budget is spent exactly.
        let spent: f64 = sol.profile.iter().sum();
        assert!((spent - 3.5).abs() < 1e-9, "spent {spent}");
        // Profile is non-decreasing with at most one power below P_b.
        for w in sol.profile.windows(2) {
            assert!(w[1] >= w[0] - 1e-12);
        }
        let below = sol.profile.iter().filter(|&&p| p > 0.0 && p < th.p_b).count();
        assert!(below <= 1);
    }

    #[test]
    fn tiny_budget_goes_to_last_block() {
        let (curve, th) = rayleigh1();
        let sol = solve_p3(&curve, &th, 0.05, 3, 1e-4).unwrap();
        assert_eq!(sol.k0, 0);
        assert_eq!(sol.profile[0..2], [0.0, 0.0]);
        assert!((sol.profile[2] - 0.15).abs() < 1e-12);
    }

    #[test]
    fn onoff_values() {
        let (curve, th) = rayleigh1();
        let sol = suboptimal_onoff_n1(&curve, &th, 1.5, 4).unwrap();
        assert_eq!(sol.profile, vec![1.5; 4]);

        let sol = suboptimal_onoff_n1(&curve, &th, 0.35, 10).unwrap();
        assert_eq!(sol.k0, 3);
        assert_eq!(&sol.profile[..7], &[0.0; 7]);
        for &p in &sol.profile[7..] {
            assert!((p - 3.5 / 3.0).abs() < 1e-12, "on level {p}");
        }
    }

    #[test]
    fn onoff_level_converges_to_tangent_power() {
        let (curve, th) = rayleigh1();
        let m = 10_000;
        let sol = suboptimal_onoff_n1(&curve, &th, 0.35, m).unwrap();
        let level = sol.profile[m - 1];
        assert!((level - 1.0).abs() <= 1e-3, "on level {level}");
    }

    #[test]
    fn dominates_uniform_allocation() {
        let (curve, th) = rayleigh1();
        for step in 1..=12 {
            let q1 = 0.08 * step as f64;
            let sol = solve_p3(&curve, &th, q1, 8, 1e-4).unwrap();
            let uniform = curve.f(q1);
            assert!(
                sol.objective <= uniform + 1e-12,
                "q1 = {q1}: optimal {} vs uniform {uniform}",
                sol.objective
            );
        }
    }

    #[test]
    fn objective_monotone_in_budget() {
        let (curve, th) = rayleigh1();
        let mut last = f64::INFINITY;
        for step in 1..=30 {
            let q1 = 0.05 * step as f64;
            let sol = solve_p3(&curve, &th, q1, 6, 1e-4).unwrap();
            assert!(
                sol.objective <= last + 1e-9,
                "objective increased at q1 = {q1}"
            );
            last = sol.objective;
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let (curve, th) = rayleigh1();
        assert!(solve_p3(&curve, &th, -1.0, 4, 1e-4).is_err());
        assert!(solve_p3(&curve, &th, 1.0, 0, 1e-4).is_err());
        assert!(suboptimal_onoff_n1(&curve, &th, f64::NAN, 4).is_err());
    }
}
