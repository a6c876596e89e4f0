//! Monte Carlo validation: channel-gain sampling, empirical outage of a
//! profile, and policy evaluation over random harvesting traces.
//!
//! Reproducibility contract: every entry point takes an explicit 64-bit seed
//! and derives one ChaCha12 stream per trial (the counter-based stream index
//! is the trial number), so results are bit-identical for a given seed and
//! configuration no matter how trials are scheduled across threads.
//! Accumulation happens in fixed-size chunks that are reduced in order.
//!
//! Policy evaluation scores a block analytically through `F(P)` by default:
//! the channel is independent of every policy's information set, so swapping
//! the indicator for its expectation changes nothing but the variance. The
//! sampled-indicator mode stays available as a cross-check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;

use crate::curve::{Family, OutageCurve, Thresholds};
use crate::error::{Error, Result};
use crate::offline::{solve_p1_optimal, solve_p1_suboptimal};
use crate::online::{lookahead_policy, mdp_policy_step, EhModel, LookaheadSolver, MdpValueTable};
use crate::trace::{EhTrace, PowerProfile};

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
    pub trials: u64,
}

/// Simulation settings shared by the Monte Carlo entry points.
#[derive(Debug, Clone, Copy)]
pub struct SimConfig {
    pub trials: u64,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(trials: u64, seed: u64) -> Result<Self> {
        if trials == 0 {
            return Err(Error::Domain("need at least one trial".into()));
        }
        Ok(SimConfig { trials, seed })
    }
}

/// Draw the squared channel gain `|h|^2` for a Weibull curve: with
/// `E ~ Exp(1)` and `|h| = E^(1/beta)`, the squared gain is `E^(2/beta)`,
/// so `Pr(|h|^2 < x) = 1 - exp(-x^(beta/2))` matches the outage formula.
pub fn sample_gain_sq(curve: &OutageCurve, rng: &mut impl Rng) -> Result<f64> {
    match curve.family() {
        Family::Weibull { beta } => {
            let e: f64 = Exp1.sample(rng);
            Ok(e.powf(2.0 / beta))
        }
        Family::Tabulated { .. } => Err(Error::Unsupported(
            "gain sampling needs a parametric family; tabulated curves only define F".into(),
        )),
    }
}

/// ChaCha12 stream for one trial: the seed picks the key, the trial index
/// picks the stream, so trials never share state no matter the scheduling.
pub fn seeded_rng(seed: u64, trial: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn trial_rng(seed: u64, trial: u64) -> ChaCha12Rng {
    seeded_rng(seed, trial)
}

/// Chunked deterministic mean/standard error over per-trial values.
fn run_trials<F>(trials: u64, per_trial: F) -> Estimate
where
    F: Fn(u64) -> f64 + Sync,
{
    const CHUNK: u64 = 1024;
    let chunks = trials.div_ceil(CHUNK);
    let partials: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = ((c + 1) * CHUNK).min(trials);
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for t in lo..hi {
                let x = per_trial(t);
                sum += x;
                sum_sq += x * x;
            }
            (sum, sum_sq)
        })
        .collect();
    let (sum, sum_sq) = partials
        .into_iter()
        .fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
    let nf = trials as f64;
    let mean = sum / nf;
    let var = if trials > 1 {
        ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0)
    } else {
        0.0
    };
    Estimate { mean, std_err: (var / nf).sqrt(), trials }
}

/// Empirical average outage of a fixed profile: one gain draw per block per
/// trial, outage when `log2(1 + |h|^2 P) < R`, i.e. `|h|^2 P < 2^R - 1`.
pub fn simulate_outage(
    curve: &OutageCurve,
    profile: &PowerProfile,
    config: SimConfig,
) -> Result<Estimate> {
    if !matches!(curve.family(), Family::Weibull { .. }) {
        return Err(Error::Unsupported("simulation needs a samplable fading family".into()));
    }
    let c = curve.rate_term();
    let blocks = profile.blocks();
    let estimate = run_trials(config.trials, |t| {
        let mut rng = trial_rng(config.seed, t);
        let mut outages = 0u32;
        for &p in blocks {
            let gain = sample_gain_sq(curve, &mut rng).expect("family checked above");
            if gain * p < c {
                outages += 1;
            }
        }
        outages as f64 / blocks.len() as f64
    });
    Ok(estimate)
}

/// Sample a state-index path of length `n` from the model.
pub fn sample_state_path(model: &EhModel, n: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut path = Vec::with_capacity(n);
    let mut state = sample_index(model.initial(), rng);
    for _ in 0..n {
        path.push(state);
        state = sample_index(model.transition_row(state), rng);
    }
    path
}

/// Sample a harvesting trace of `n` periods (with `m` blocks each) from the
/// model.
pub fn gen_trace(model: &EhModel, n: usize, m: usize, rng: &mut impl Rng) -> Result<EhTrace> {
    if n == 0 {
        return Err(Error::Domain("trace needs at least one period".into()));
    }
    let rates = sample_state_path(model, n, rng)
        .into_iter()
        .map(|s| model.states()[s])
        .collect();
    EhTrace::new(rates, m)
}

fn sample_index(probs: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Scheduling policy under evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    /// Optimal offline profile computed on the realized trace.
    OfflineOpt,
    /// Per-segment on-off offline profile on the realized trace.
    OfflineSub,
    /// Value-table policy walking the trace causally.
    Mdp,
    /// `q`-period look-ahead walking the trace causally.
    Lookahead(usize),
    /// Shorthand for 1-period look-ahead.
    Greedy,
}

impl PolicyKind {
    pub fn label(&self) -> String {
        match self {
            PolicyKind::OfflineOpt => "offline-opt".into(),
            PolicyKind::OfflineSub => "offline-sub".into(),
            PolicyKind::Mdp => "mdp".into(),
            PolicyKind::Lookahead(q) => format!("lookahead{q}"),
            PolicyKind::Greedy => "greedy".into(),
        }
    }
}

/// How a block contributes to the score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scoring {
    /// Expected outage `F(P)` per block (low variance; the default).
    #[default]
    Analytic,
    /// Sampled channel indicator per block.
    Sampled,
}

/// Everything a policy evaluation needs besides the policy itself.
pub struct EvalContext<'a> {
    pub curve: &'a OutageCurve,
    pub th: &'a Thresholds,
    pub model: &'a EhModel,
    pub n: usize,
    pub m: usize,
    /// Resolution of the offline searches run inside policies.
    pub grid_step: f64,
    /// Prebuilt value table; required for [`PolicyKind::Mdp`].
    pub table: Option<&'a MdpValueTable>,
    pub scoring: Scoring,
}

/// Mean outage of a policy over random traces. Identical seeds sample
/// identical traces for every policy, so differences between policies are
/// paired comparisons.
pub fn evaluate_policy(policy: PolicyKind, ctx: &EvalContext, config: SimConfig) -> Result<Estimate> {
    if ctx.n == 0 || ctx.m == 0 {
        return Err(Error::Domain("horizon and blocks per period must be positive".into()));
    }
    if matches!(policy, PolicyKind::Mdp) && ctx.table.is_none() {
        return Err(Error::Domain("mdp policy needs a prebuilt value table".into()));
    }
    if let PolicyKind::Lookahead(0) = policy {
        return Err(Error::Domain("look-ahead window must be at least 1".into()));
    }
    // Probe one trial up front so per-trial errors cannot hide inside the
    // parallel loop (they would otherwise have to panic).
    run_policy_trial(policy, ctx, trial_rng(config.seed, 0))?;
    let estimate = run_trials(config.trials, |t| {
        run_policy_trial(policy, ctx, trial_rng(config.seed, t)).expect("probe trial succeeded")
    });
    Ok(estimate)
}

fn run_policy_trial(policy: PolicyKind, ctx: &EvalContext, mut rng: ChaCha12Rng) -> Result<f64> {
    let path = sample_state_path(ctx.model, ctx.n, &mut rng);
    let rates: Vec<f64> = path.iter().map(|&s| ctx.model.states()[s]).collect();
    let trace = EhTrace::new(rates, ctx.m)?;

    let score_profile = |blocks: &[f64], rng: &mut ChaCha12Rng| -> Result<f64> {
        match ctx.scoring {
            Scoring::Analytic => {
                Ok(blocks.iter().map(|&p| ctx.curve.f(p)).sum::<f64>() / blocks.len() as f64)
            }
            Scoring::Sampled => {
                let c = ctx.curve.rate_term();
                let mut outages = 0u32;
                for &p in blocks {
                    if sample_gain_sq(ctx.curve, rng)? * p < c {
                        outages += 1;
                    }
                }
                Ok(outages as f64 / blocks.len() as f64)
            }
        }
    };

    match policy {
        PolicyKind::OfflineOpt => {
            let profile = solve_p1_optimal(ctx.curve, ctx.th, &trace, ctx.grid_step)?;
            score_profile(profile.blocks(), &mut rng)
        }
        PolicyKind::OfflineSub => {
            let profile = solve_p1_suboptimal(ctx.curve, ctx.th, &trace)?;
            score_profile(profile.blocks(), &mut rng)
        }
        PolicyKind::Mdp => {
            let table = ctx.table.expect("checked by evaluate_policy");
            let mut battery = 0.0f64;
            let mut blocks = Vec::with_capacity(ctx.n * ctx.m);
            for (period, &state) in path.iter().enumerate() {
                let (step_blocks, carry) =
                    mdp_policy_step(ctx.curve, ctx.th, table, period, state, battery)?;
                blocks.extend_from_slice(&step_blocks);
                battery = carry.max(0.0);
            }
            score_profile(&blocks, &mut rng)
        }
        PolicyKind::Lookahead(_) | PolicyKind::Greedy => {
            let q = if let PolicyKind::Lookahead(q) = policy { q } else { 1 };
            let mut battery = 0.0f64;
            let mut blocks = Vec::with_capacity(ctx.n * ctx.m);
            for (period, &state) in path.iter().enumerate() {
                let step_blocks = lookahead_policy(
                    ctx.curve,
                    ctx.th,
                    ctx.model,
                    q,
                    period,
                    state,
                    battery,
                    ctx.n,
                    ctx.m,
                    LookaheadSolver::Optimal,
                    ctx.grid_step,
                )?;
                let spent: f64 = step_blocks.iter().sum();
                battery = (battery + ctx.m as f64 * ctx.model.states()[state] - spent).max(0.0);
                blocks.extend_from_slice(&step_blocks);
            }
            score_profile(&blocks, &mut rng)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::Thresholds;
    use crate::online::build_value_table;

    fn rayleigh1() -> (OutageCurve, Thresholds) {
        let curve = OutageCurve::rayleigh(1.0).unwrap();
        let th = Thresholds::compute(&curve, 1e-9).unwrap();
        (curve, th)
    }

    #[test]
    fn rayleigh_gain_is_exponential() {
        // For beta = 2 the squared gain is Exp(1): check the mean.
        let (curve, _) = rayleigh1();
        let mut rng = trial_rng(7, 0);
        let n = 200_000;
        let mean: f64 =
            (0..n).map(|_| sample_gain_sq(&curve, &mut rng).unwrap()).sum::<f64>() / n as f64;
        // 3 sigma of an Exp(1) mean over n draws.
        assert!((mean - 1.0).abs() < 3.0 / (n as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn gain_sq_mean_is_gamma_moment() {
        // E[|h|^2] = E[E^(2/beta)] = Gamma(1 + 2/beta) for E ~ Exp(1);
        // frozen moments: Gamma(1.25) for beta = 8, Gamma(1.5) for beta = 4.
        for (beta, moment, sd) in [(8.0, 0.9064024770554770, 0.26), (4.0, 0.8862269254527580, 0.32)] {
            let curve = OutageCurve::weibull(beta, 1.0).unwrap();
            let mut rng = trial_rng(13, 0);
            let n = 400_000;
            let mean: f64 =
                (0..n).map(|_| sample_gain_sq(&curve, &mut rng).unwrap()).sum::<f64>() / n as f64;
            let tol = 3.0 * sd / (n as f64).sqrt();
            assert!((mean - moment).abs() < tol, "beta {beta}: mean {mean} vs {moment}");
        }
    }

    #[test]
    fn solver_profile_matches_its_analytic_objective() {
        // Monte Carlo over a structured (non-uniform) profile.
        let (curve, th) = rayleigh1();
        let sol = crate::single::solve_p3(&curve, &th, 0.35, 10, 1e-4).unwrap();
        let profile = PowerProfile::from_blocks(sol.profile.clone(), 1, 10).unwrap();
        let est = simulate_outage(&curve, &profile, SimConfig::new(200_000, 29).unwrap()).unwrap();
        assert!(
            (est.mean - sol.objective).abs() <= 3.0 * est.std_err,
            "simulated {} +/- {} vs analytic {}",
            est.mean,
            est.std_err,
            sol.objective
        );
    }

    #[test]
    fn gain_cdf_matches_outage_formula() {
        let curve = OutageCurve::weibull(8.0, 3.0).unwrap();
        let mut rng = trial_rng(11, 0);
        let n = 200_000u32;
        for x in [0.5, 1.0, 2.0] {
            let hits = (0..n)
                .filter(|_| sample_gain_sq(&curve, &mut rng).unwrap() < x)
                .count() as f64;
            let p_hat = hits / n as f64;
            let p = 1.0 - (-x.powf(4.0)).exp();
            let sigma = (p * (1.0 - p) / n as f64).sqrt();
            assert!((p_hat - p).abs() < 3.0 * sigma + 1e-9, "x={x}: {p_hat} vs {p}");
        }
    }

    #[test]
    fn tabulated_curves_cannot_be_sampled() {
        let grid: Vec<(f64, f64)> = (1..40).map(|k| (0.1 * k as f64, (-0.1 * k as f64).exp())).collect();
        let curve = OutageCurve::tabulated(grid, 1.0).unwrap();
        let mut rng = trial_rng(0, 0);
        assert!(matches!(
            sample_gain_sq(&curve, &mut rng),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn zero_profile_always_in_outage() {
        let (curve, _) = rayleigh1();
        let profile = PowerProfile::zeros(2, 2);
        let est = simulate_outage(&curve, &profile, SimConfig::new(500, 3).unwrap()).unwrap();
        assert_eq!(est.mean, 1.0);
        assert_eq!(est.std_err, 0.0);
    }

    #[test]
    fn uniform_profile_matches_closed_form() {
        let (curve, _) = rayleigh1();
        let p = 0.8;
        let profile = PowerProfile::from_blocks(vec![p; 4], 2, 2).unwrap();
        let trials = 100_000;
        let est = simulate_outage(&curve, &profile, SimConfig::new(trials, 42).unwrap()).unwrap();
        let expect = curve.f(p);
        assert!(
            (est.mean - expect).abs() <= 3.0 * est.std_err,
            "simulated {} +/- {} vs F(P) = {expect}",
            est.mean,
            est.std_err
        );
    }

    #[test]
    fn identical_seeds_are_bit_identical() {
        let (curve, _) = rayleigh1();
        let profile = PowerProfile::from_blocks(vec![0.5, 1.0], 2, 1).unwrap();
        let a = simulate_outage(&curve, &profile, SimConfig::new(10_000, 9).unwrap()).unwrap();
        let b = simulate_outage(&curve, &profile, SimConfig::new(10_000, 9).unwrap()).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.std_err.to_bits(), b.std_err.to_bits());
    }

    #[test]
    fn constant_model_sampling() {
        let model = EhModel::constant(0.7).unwrap();
        let mut rng = trial_rng(1, 0);
        let trace = gen_trace(&model, 6, 2, &mut rng).unwrap();
        assert_eq!(trace.rates(), &[0.7; 6]);
    }

    #[test]
    fn iid_state_frequencies() {
        let model = EhModel::iid(vec![0.0, 1.0, 2.0], vec![1.0 / 3.0; 3]).unwrap();
        let mut rng = trial_rng(5, 0);
        let n = 90_000;
        let path = sample_state_path(&model, n, &mut rng);
        for state in 0..3 {
            let freq = path.iter().filter(|&&s| s == state).count() as f64 / n as f64;
            let sigma = (1.0 / 3.0 * 2.0 / 3.0 / n as f64).sqrt();
            assert!(
                (freq - 1.0 / 3.0).abs() < 3.0 * sigma,
                "state {state} frequency {freq}"
            );
        }
    }

    #[test]
    fn offline_beats_greedy_per_trace() {
        let (curve, th) = rayleigh1();
        let model = EhModel::iid(vec![0.0, 0.5, 1.0], vec![1.0 / 3.0; 3]).unwrap();
        let ctx = EvalContext {
            curve: &curve,
            th: &th,
            model: &model,
            n: 6,
            m: 1,
            grid_step: 1e-3,
            table: None,
            scoring: Scoring::Analytic,
        };
        let config = SimConfig::new(300, 17).unwrap();
        let offline = evaluate_policy(PolicyKind::OfflineOpt, &ctx, config).unwrap();
        let greedy = evaluate_policy(PolicyKind::Greedy, &ctx, config).unwrap();
        assert!(
            offline.mean <= greedy.mean + 1e-12,
            "offline {} vs greedy {}",
            offline.mean,
            greedy.mean
        );
    }

    #[test]
    fn analytic_and_sampled_scores_agree() {
        let (curve, th) = rayleigh1();
        let model = EhModel::iid(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
        let mut ctx = EvalContext {
            curve: &curve,
            th: &th,
            model: &model,
            n: 4,
            m: 1,
            grid_step: 1e-3,
            table: None,
            scoring: Scoring::Analytic,
        };
        let config = SimConfig::new(30_000, 23).unwrap();
        let analytic = evaluate_policy(PolicyKind::Greedy, &ctx, config).unwrap();
        ctx.scoring = Scoring::Sampled;
        let sampled = evaluate_policy(PolicyKind::Greedy, &ctx, config).unwrap();
        assert!(
            (analytic.mean - sampled.mean).abs() <= 3.0 * sampled.std_err,
            "analytic {} vs sampled {} +/- {}",
            analytic.mean,
            sampled.mean,
            sampled.std_err
        );
    }

    #[test]
    fn mdp_policy_close_to_offline_on_deterministic_model() {
        let (curve, th) = rayleigh1();
        let model = EhModel::constant(0.4).unwrap();
        let n = 5;
        let delta = 0.01;
        let table = build_value_table(&curve, &th, &model, n, 1, delta, 2.0).unwrap();
        let ctx = EvalContext {
            curve: &curve,
            th: &th,
            model: &model,
            n,
            m: 1,
            grid_step: 1e-4,
            table: Some(&table),
            scoring: Scoring::Analytic,
        };
        let config = SimConfig::new(2, 1).unwrap();
        let mdp = evaluate_policy(PolicyKind::Mdp, &ctx, config).unwrap();
        let offline = evaluate_policy(PolicyKind::OfflineOpt, &ctx, config).unwrap();
        assert!(
            (mdp.mean - offline.mean).abs() <= 2.0 * delta * n as f64,
            "mdp {} vs offline {}",
            mdp.mean,
            offline.mean
        );
        assert!(offline.mean <= mdp.mean + 1e-12);
    }
}
