//! The experiment runners and their CSV emitters.
//!
//! Column schemas (stable):
//! * `fig3.csv`:   `m,q1,optimal,uniform,asymptote`
//! * `fig4.csv`:   `m,optimal,suboptimal,gap`
//! * `fig5.csv`:   `policy,param,mean_outage,stderr,trials,seed`
//! * `profile.csv`: `period,block,power` (custom runs)
//!
//! Every run directory also gets a `manifest.toml` holding the resolved
//! settings, the seed, the SHA-256 of the resolved configuration, and the
//! crate version - enough to reproduce the run bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use outage_alloc::sim::{evaluate_policy, EvalContext, PolicyKind, Scoring, SimConfig};
use outage_alloc::{
    build_value_table, solve_p1_optimal, solve_p1_suboptimal, solve_p3, suboptimal_onoff_n1,
    validate_profile, EhModel, EhTrace, OutageCurve, PowerProfile, Thresholds,
};

use crate::config::{Config, Resolved};
use crate::CliError;

const CLASSIFY_TOL: f64 = 1e-9;

pub struct Runner {
    pub out_dir: PathBuf,
    pub resolved: Resolved,
}

impl Runner {
    pub fn run(&self) -> Result<(), CliError> {
        fs::create_dir_all(&self.out_dir)
            .map_err(|e| CliError::Config(format!("cannot create {}: {e}", self.out_dir.display())))?;
        match self.resolved.experiment.as_str() {
            "fig3" => self.fig3(),
            "fig4" => self.fig4(),
            "fig5" => self.fig5(),
            "custom" => self.custom(),
            other => Err(CliError::Config(format!(
                "unknown experiment {other:?}; expected fig3 | fig4 | fig5 | custom"
            ))),
        }?;
        self.write_manifest()
    }

    fn config(&self) -> &Config {
        &self.resolved.config
    }

    fn curve(&self, beta: f64, rate: f64) -> Result<(OutageCurve, Thresholds), CliError> {
        let curve = OutageCurve::weibull(beta, rate).map_err(CliError::config)?;
        let th = Thresholds::compute(&curve, CLASSIFY_TOL).map_err(CliError::numerical)?;
        Ok((curve, th))
    }

    /// Outage vs average budget: optimal against uniform for several block
    /// counts, with the infinite-block chord as the shared reference line.
    fn fig3(&self) -> Result<(), CliError> {
        let cfg = &self.config().fig3;
        let (curve, th) = self.curve(cfg.beta, cfg.rate)?;
        let mut csv = String::from("m,q1,optimal,uniform,asymptote\n");
        let f_pa = curve.f(th.p_a);
        for &m in &cfg.m_values {
            for k in 1..=cfg.q1_points {
                let q1 = th.p_a * k as f64 / (cfg.q1_points + 1) as f64;
                let sol = solve_p3(&curve, &th, q1, m, th.default_grid_step())
                    .map_err(CliError::numerical)?;
                let uniform = curve.f(q1);
                let asymptote = 1.0 + q1 * (f_pa - 1.0) / th.p_a;
                writeln!(csv, "{m},{q1},{},{uniform},{asymptote}", sol.objective).unwrap();
            }
        }
        self.write(&self.out_dir.join("fig3.csv"), &csv)
    }

    /// Optimal vs on-off objective as the block count grows.
    fn fig4(&self) -> Result<(), CliError> {
        let cfg = &self.config().fig4;
        let (curve, th) = self.curve(cfg.beta, cfg.rate)?;
        let mut csv = String::from("m,optimal,suboptimal,gap\n");
        for &m in &cfg.m_values {
            let opt = solve_p3(&curve, &th, cfg.q1, m, th.default_grid_step())
                .map_err(CliError::numerical)?
                .objective;
            let sub = suboptimal_onoff_n1(&curve, &th, cfg.q1, m)
                .map_err(CliError::numerical)?
                .objective;
            writeln!(csv, "{m},{opt},{sub},{}", (opt - sub).abs()).unwrap();
        }
        self.write(&self.out_dir.join("fig4.csv"), &csv)
    }

    /// Offline, value-table, and look-ahead policies over the three-state
    /// i.i.d. harvesting model, swept over the mean rate.
    fn fig5(&self) -> Result<(), CliError> {
        let cfg = &self.config().fig5;
        let (curve, th) = self.curve(cfg.beta, cfg.rate)?;
        let trials = self.resolved.trials;
        let seed = self.resolved.seed;
        let sim = SimConfig::new(trials, seed).map_err(CliError::config)?;
        let mut csv = String::from("policy,param,mean_outage,stderr,trials,seed\n");
        for &p in &cfg.p_values {
            let model =
                EhModel::iid(vec![0.0, p, 2.0 * p], vec![1.0 / 3.0; 3]).map_err(CliError::config)?;
            let b_max = 2.0 * p * (cfg.n.saturating_sub(1) * cfg.m) as f64;
            let table = build_value_table(&curve, &th, &model, cfg.n, cfg.m, cfg.delta, b_max)
                .map_err(CliError::from_lib)?;
            let ctx = EvalContext {
                curve: &curve,
                th: &th,
                model: &model,
                n: cfg.n,
                m: cfg.m,
                grid_step: th.p_b * 1e-2,
                table: Some(&table),
                scoring: Scoring::Analytic,
            };
            let mut policies = vec![PolicyKind::OfflineOpt, PolicyKind::OfflineSub, PolicyKind::Mdp];
            policies.extend(cfg.lookahead.iter().map(|&q| PolicyKind::Lookahead(q)));
            for kind in policies {
                let est = evaluate_policy(kind, &ctx, sim).map_err(CliError::from_lib)?;
                writeln!(
                    csv,
                    "{},{p},{},{},{trials},{seed}",
                    kind.label(),
                    est.mean,
                    est.std_err
                )
                .unwrap();
            }
        }
        self.write(&self.out_dir.join("fig5.csv"), &csv)
    }

    /// Run one offline allocator on a trace from a file or a generator and
    /// write the profile with a feasibility summary.
    fn custom(&self) -> Result<(), CliError> {
        let cfg = &self.config().custom;
        let (curve, th) = self.curve(cfg.beta, cfg.rate)?;
        let trace = if let Some(path) = &cfg.trace {
            EhTrace::from_csv(Path::new(path), cfg.m).map_err(CliError::config)?
        } else if let Some(n) = cfg.n {
            let states = cfg.states.clone().ok_or_else(|| {
                CliError::Config("generator needs `states` alongside `n`".into())
            })?;
            let probs = cfg
                .probs
                .clone()
                .unwrap_or_else(|| vec![1.0 / states.len() as f64; states.len()]);
            let model = EhModel::iid(states, probs).map_err(CliError::config)?;
            let mut rng = outage_alloc::sim::seeded_rng(self.resolved.seed, 0);
            let trace = outage_alloc::sim::gen_trace(&model, n, cfg.m, &mut rng)
                .map_err(CliError::config)?;
            let mut buf = Vec::new();
            trace.write_csv(&mut buf).map_err(CliError::config)?;
            self.write(&self.out_dir.join("trace.csv"), &String::from_utf8(buf).unwrap())?;
            trace
        } else {
            return Err(CliError::Config(
                "custom experiment needs either `trace` or the generator fields".into(),
            ));
        };

        let profile: PowerProfile = match cfg.algorithm.as_str() {
            "optimal" => solve_p1_optimal(&curve, &th, &trace, th.default_grid_step())
                .map_err(CliError::from_lib)?,
            "suboptimal" => {
                solve_p1_suboptimal(&curve, &th, &trace).map_err(CliError::from_lib)?
            }
            other => {
                return Err(CliError::Config(format!(
                    "unknown algorithm {other:?}; expected optimal | suboptimal"
                )))
            }
        };

        let mut csv = String::from("period,block,power\n");
        for period in 0..trace.n() {
            for block in 0..trace.m() {
                writeln!(csv, "{},{},{}", period + 1, block + 1, profile.get(period, block))
                    .unwrap();
            }
        }
        self.write(&self.out_dir.join("profile.csv"), &csv)?;

        let report = validate_profile(&profile, &trace).map_err(CliError::numerical)?;
        let mut summary = String::new();
        writeln!(summary, "algorithm = {}", cfg.algorithm).unwrap();
        writeln!(summary, "objective = {}", profile.average_outage(&curve)).unwrap();
        writeln!(summary, "p_a = {}", th.p_a).unwrap();
        writeln!(summary, "p_b = {}", th.p_b).unwrap();
        writeln!(summary, "feasible = {}", report.is_clean()).unwrap();
        for v in &report.violations {
            writeln!(summary, "violation = {v:?}").unwrap();
        }
        self.write(&self.out_dir.join("summary.txt"), &summary)
    }

    fn write_manifest(&self) -> Result<(), CliError> {
        let resolved = toml::to_string_pretty(&self.resolved)
            .map_err(|e| CliError::Config(format!("manifest serialization: {e}")))?;
        let mut hasher = Sha256::new();
        hasher.update(resolved.as_bytes());
        let digest = hasher.finalize();
        let mut manifest = String::new();
        writeln!(manifest, "# Re-running with these settings reproduces the CSVs bit for bit.").unwrap();
        writeln!(manifest, "version = {:?}", env!("CARGO_PKG_VERSION")).unwrap();
        writeln!(manifest, "config_sha256 = {:?}", hex_string(&digest)).unwrap();
        writeln!(manifest, "\n{resolved}").unwrap();
        self.write(&self.out_dir.join("manifest.toml"), &manifest)
    }

    fn write(&self, path: &Path, text: &str) -> Result<(), CliError> {
        fs::write(path, text)
            .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
    }
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().fold(String::new(), |mut acc, b| {
        write!(acc, "{b:02x}").unwrap();
        acc
    })
}
