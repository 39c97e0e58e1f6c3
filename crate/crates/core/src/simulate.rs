//! Seeded Monte Carlo estimation of `E_{p,σ,τ}[f]`.
//!
//! Episode `n` draws its randomness from a seed derived by SHA-256 from
//! `(master_seed, n)`, with separate ChaCha streams for nature, Player I
//! and Player II, so results do not depend on how episodes are scheduled.

use std::io::Write;
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::belief::BlockEvent;
use crate::engine::play_out;
use crate::error::{Error, Result};
use crate::game::{GameSpec, LassoPlay};
use crate::payoff::PayoffEvaluator;
use crate::strategy::{InformedStrategy, UninformedStrategy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub horizon: usize,
    pub episodes: usize,
    pub master_seed: u64,
    pub lasso_detection: bool,
    /// Rollouts used by exploit strategies built from this config.
    pub exploit_rollouts: usize,
    /// Allocate episodes to states in proportion to the prior instead of
    /// sampling `k*`.
    pub stratify_states: bool,
    /// Keep per-stage belief rows for trajectory output.
    pub capture_trajectory: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            horizon: 10_000,
            episodes: 10_000,
            master_seed: 0,
            lasso_detection: true,
            exploit_rollouts: 64,
            stratify_states: false,
            capture_trajectory: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 || self.episodes == 0 {
            return Err(Error::InvalidParameter("horizon and episodes must be at least 1".into()));
        }
        Ok(())
    }
}

/// Player II's posterior and block state after a stage.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRow {
    pub stage: usize,
    pub belief: Vec<f64>,
    pub block_index: usize,
    pub event: BlockEvent,
}

#[derive(Debug, Clone, Serialize)]
pub struct EpisodeResult {
    pub index: usize,
    pub seed: u64,
    pub state: usize,
    pub payoff: f64,
    /// Whether the payoff is the exact lasso value rather than the
    /// truncated surrogate.
    pub exact: bool,
    pub stages: usize,
    pub new_blocks: usize,
    pub theta_stage: Option<usize>,
    #[serde(skip)]
    pub lasso: Option<LassoPlay>,
    #[serde(skip)]
    pub trajectory: Vec<TrajectoryRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub mean_payoff: f64,
    pub ci95_halfwidth: f64,
    pub episodes: usize,
    pub stratified: bool,
    /// Mean payoff given `k*`, `None` for states never drawn.
    pub per_state_means: Vec<Option<f64>>,
    pub per_state_counts: Vec<usize>,
    pub block_count_mean: f64,
    pub block_count_max: usize,
    pub theta_hit_rate: f64,
    pub exact_fraction: f64,
    /// True when some episode fell back to the truncated surrogate.
    pub approximate: bool,
}

/// First eight bytes of `SHA-256(master_seed ‖ index)`, little endian.
pub fn episode_seed(master_seed: u64, index: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(master_seed.to_le_bytes());
    h.update((index as u64).to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

fn stream(seed: u64, n: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(n);
    rng
}

/// Plays one episode. `forced_state` replaces the draw of `k*`.
#[allow(clippy::too_many_arguments)]
pub fn run_episode(
    spec: &GameSpec,
    f: &PayoffEvaluator,
    sigma: &dyn InformedStrategy,
    tau: &dyn UninformedStrategy,
    config: &SimConfig,
    index: usize,
    seed: u64,
    forced_state: Option<usize>,
) -> Result<EpisodeResult> {
    let state = match forced_state {
        Some(k) if k < spec.num_states() => k,
        Some(k) => return Err(Error::InvalidParameter(format!("state {k} out of range"))),
        None => {
            let prior = WeightedIndex::new(&spec.prior)
                .map_err(|e| Error::InvalidParameter(format!("prior: {e}")))?;
            prior.sample(&mut stream(seed, 0))
        }
    };
    let mut rng_i = stream(seed, 1);
    let mut rng_j = stream(seed, 2);
    let mut sigma_c = sigma.start();
    let mut tau_c = tau.start();
    let mut trajectory = Vec::new();
    let capture = config.capture_trajectory;
    let out = play_out(
        spec.timing,
        0,
        state,
        sigma_c.as_mut(),
        tau_c.as_mut(),
        config.horizon,
        config.lasso_detection,
        &mut rng_i,
        &mut rng_j,
        &mut |stage, tau| {
            if capture {
                if let Some(view) = tau.tracker() {
                    trajectory.push(TrajectoryRow {
                        stage,
                        belief: view.belief.as_slice().to_vec(),
                        block_index: view.block_index,
                        event: view.event,
                    });
                }
            }
        },
    );
    let (payoff, exact) = match &out.lasso {
        Some(lasso) => (f.eval_lasso(state, lasso)?, true),
        None => (f.eval_truncated(state, &out.history)?, false),
    };
    let (new_blocks, theta_stage) = tau_c
        .tracker()
        .map_or((0, None), |v| (v.log.new_blocks, v.log.theta_stage));
    Ok(EpisodeResult {
        index,
        seed,
        state,
        payoff,
        exact,
        stages: out.history.len(),
        new_blocks,
        theta_stage,
        lasso: out.lasso,
        trajectory,
    })
}

/// Compensated sum in slice order.
fn kahan_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut c) = (0.0, 0.0);
    for v in values {
        let y = v - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

fn mean_and_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = kahan_sum(xs.iter().copied()) / n;
    let var = if xs.len() > 1 {
        kahan_sum(xs.iter().map(|x| (x - mean) * (x - mean))) / (n - 1.0)
    } else {
        0.0
    };
    (mean, var)
}

/// Runs the configured episodes and returns them in index order.
pub fn run_episodes(
    spec: &GameSpec,
    f: &PayoffEvaluator,
    sigma: &dyn InformedStrategy,
    tau: &dyn UninformedStrategy,
    config: &SimConfig,
) -> Result<Vec<EpisodeResult>> {
    config.validate()?;
    spec.validate().map_err(Error::Validation)?;
    f.check_compatible(spec)?;
    let plan: Vec<Option<usize>> = if config.stratify_states {
        stratum_sizes(&spec.prior, config.episodes)
            .into_iter()
            .enumerate()
            .flat_map(|(k, n)| std::iter::repeat_n(Some(k), n))
            .collect()
    } else {
        vec![None; config.episodes]
    };
    plan.into_par_iter()
        .enumerate()
        .map(|(n, forced)| {
            let seed = episode_seed(config.master_seed, n);
            run_episode(spec, f, sigma, tau, config, n, seed, forced)
        })
        .collect()
}

/// Episodes per state: `round(N p_k)`, at least one for every state in the
/// support.
fn stratum_sizes(prior: &[f64], n: usize) -> Vec<usize> {
    prior
        .iter()
        .map(|&p| if p > 0.0 { ((n as f64 * p).round() as usize).max(1) } else { 0 })
        .collect()
}

pub fn estimate_payoff(
    spec: &GameSpec,
    f: &PayoffEvaluator,
    sigma: &dyn InformedStrategy,
    tau: &dyn UninformedStrategy,
    config: &SimConfig,
) -> Result<SimResult> {
    Ok(estimate_payoff_detailed(spec, f, sigma, tau, config)?.0)
}

/// As [`estimate_payoff`], also returning the episodes.
pub fn estimate_payoff_detailed(
    spec: &GameSpec,
    f: &PayoffEvaluator,
    sigma: &dyn InformedStrategy,
    tau: &dyn UninformedStrategy,
    config: &SimConfig,
) -> Result<(SimResult, Vec<EpisodeResult>)> {
    let episodes = run_episodes(spec, f, sigma, tau, config)?;
    Ok((summarize(&spec.prior, &episodes, config.stratify_states), episodes))
}

/// Aggregates episodes. Stratified runs weight each state's mean by the
/// prior; the half-width is `1.96 · sqrt(Σ p_k² s_k² / N_k)`.
pub fn summarize(prior: &[f64], episodes: &[EpisodeResult], stratified: bool) -> SimResult {
    let n = episodes.len();
    let k = prior.len();
    let mut by_state: Vec<Vec<f64>> = vec![Vec::new(); k];
    for e in episodes {
        by_state[e.state].push(e.payoff);
    }
    let stats: Vec<Option<(f64, f64)>> = by_state
        .iter()
        .map(|xs| (!xs.is_empty()).then(|| mean_and_var(xs)))
        .collect();
    let (mean, ci) = if stratified {
        let mean = kahan_sum(prior.iter().zip(&stats).map(|(p, s)| s.map_or(0.0, |(m, _)| p * m)));
        let var = kahan_sum(
            prior
                .iter()
                .zip(&stats)
                .zip(&by_state)
                .map(|((p, s), xs)| s.map_or(0.0, |(_, v)| p * p * v / xs.len() as f64)),
        );
        (mean, 1.96 * var.sqrt())
    } else {
        let all: Vec<f64> = episodes.iter().map(|e| e.payoff).collect();
        let (mean, var) = mean_and_var(&all);
        (mean, 1.96 * (var / n as f64).sqrt())
    };
    let exact = episodes.iter().filter(|e| e.exact).count();
    SimResult {
        mean_payoff: mean,
        ci95_halfwidth: ci,
        episodes: n,
        stratified,
        per_state_means: stats.iter().map(|s| s.map(|(m, _)| m)).collect(),
        per_state_counts: by_state.iter().map(Vec::len).collect(),
        block_count_mean: kahan_sum(episodes.iter().map(|e| e.new_blocks as f64)) / n as f64,
        block_count_max: episodes.iter().map(|e| e.new_blocks).max().unwrap_or(0),
        theta_hit_rate: episodes.iter().filter(|e| e.theta_stage.is_some()).count() as f64 / n as f64,
        exact_fraction: exact as f64 / n as f64,
        approximate: exact < n,
    }
}

/// Which player's panel is searched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PanelSide {
    /// Minimum over the panel: an upper bound on the infimum over all
    /// opponents.
    Min,
    /// Maximum over the panel: a lower bound on the supremum.
    Max,
}

#[derive(Debug, Clone, Serialize)]
pub struct PanelBound {
    pub side: PanelSide,
    pub bound: f64,
    pub extremal_index: usize,
    pub results: Vec<SimResult>,
}

/// `min` (or `max`) of [`estimate_payoff`] over strategy pairs. Every
/// pairing uses the same episode seeds.
pub fn panel_bound(
    spec: &GameSpec,
    f: &PayoffEvaluator,
    pairings: &[(&dyn InformedStrategy, &dyn UninformedStrategy)],
    side: PanelSide,
    config: &SimConfig,
) -> Result<PanelBound> {
    if pairings.is_empty() {
        return Err(Error::InvalidParameter("empty panel".into()));
    }
    let results = pairings
        .iter()
        .map(|(s, t)| estimate_payoff(spec, f, *s, *t, config))
        .collect::<Result<Vec<_>>>()?;
    let better = |a: f64, b: f64| match side {
        PanelSide::Min => a < b,
        PanelSide::Max => a > b,
    };
    let mut best = 0;
    for (n, r) in results.iter().enumerate() {
        if better(r.mean_payoff, results[best].mean_payoff) {
            best = n;
        }
    }
    Ok(PanelBound {
        side,
        bound: results[best].mean_payoff,
        extremal_index: best,
        results,
    })
}

/// Per-episode CSV: `index,seed,state,payoff,exact,stages,blocks,theta_stage`.
pub fn write_episodes_csv<W: Write>(out: W, episodes: &[EpisodeResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["index", "seed", "state", "payoff", "exact", "stages", "blocks", "theta_stage"])?;
    for e in episodes {
        w.write_record([
            e.index.to_string(),
            e.seed.to_string(),
            e.state.to_string(),
            e.payoff.to_string(),
            e.exact.to_string(),
            e.stages.to_string(),
            e.new_blocks.to_string(),
            e.theta_stage.map_or(String::new(), |t| t.to_string()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Trajectory CSV: `episode,stage,p0..p{K-1},block_index,event`.
pub fn write_trajectory_csv<W: Write>(out: W, num_states: usize, episodes: &[EpisodeResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["episode".to_string(), "stage".to_string()];
    header.extend((0..num_states).map(|k| format!("p{k}")));
    header.extend(["block_index".to_string(), "event".to_string()]);
    w.write_record(&header)?;
    for e in episodes {
        for row in &e.trajectory {
            let mut rec = vec![e.index.to_string(), row.stage.to_string()];
            rec.extend(row.belief.iter().map(|x| x.to_string()));
            rec.push(row.block_index.to_string());
            rec.push(
                match row.event {
                    BlockEvent::Continue => "continue",
                    BlockEvent::NewBlock => "new_block",
                    BlockEvent::Theta => "theta",
                }
                .to_string(),
            );
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_json(path: &Path, result: &impl Serialize) -> Result<()> {
    let file = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(file, result)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{LEFT, RIGHT};
    use crate::strategy::{pure_informed, pure_uninformed};

    fn config(n: usize) -> SimConfig {
        SimConfig {
            horizon: 1000,
            episodes: n,
            ..SimConfig::default()
        }
    }

    #[test]
    fn seeds_are_stable() {
        assert_eq!(episode_seed(7, 3), episode_seed(7, 3));
        assert_ne!(episode_seed(7, 3), episode_seed(7, 4));
        assert_ne!(episode_seed(7, 3), episode_seed(8, 3));
    }

    #[test]
    fn forced_k2_always_left_vs_always_right() {
        let spec = GameSpec::example1(0.5);
        let f = PayoffEvaluator::example1();
        let sigma = pure_informed(2, &[LEFT, LEFT]).unwrap();
        let tau = pure_uninformed(2, RIGHT).unwrap();
        let e = run_episode(&spec, &f, sigma.as_ref(), tau.as_ref(), &config(1), 0, 1, Some(1)).unwrap();
        assert_eq!(e.payoff, 1.0);
        assert!(e.exact);
    }

    #[test]
    fn all_right_pays_zero() {
        let spec = GameSpec::example1(0.5);
        let f = PayoffEvaluator::example1();
        let sigma = pure_informed(2, &[RIGHT, RIGHT]).unwrap();
        let tau = pure_uninformed(2, RIGHT).unwrap();
        for k in 0..2 {
            let e = run_episode(&spec, &f, sigma.as_ref(), tau.as_ref(), &config(1), 0, 9, Some(k)).unwrap();
            assert_eq!((e.payoff, e.exact), (0.0, true));
        }
    }

    #[test]
    fn single_deterministic_episode_matches_mean() {
        let spec = GameSpec::example1(0.5);
        let f = PayoffEvaluator::example1();
        let sigma = pure_informed(2, &[LEFT, LEFT]).unwrap();
        let tau = pure_uninformed(2, RIGHT).unwrap();
        let (r, eps) = estimate_payoff_detailed(&spec, &f, sigma.as_ref(), tau.as_ref(), &config(1)).unwrap();
        assert_eq!(r.mean_payoff, eps[0].payoff);
        assert_eq!(r.ci95_halfwidth, 0.0);
    }

    #[test]
    fn stratified_sizes() {
        assert_eq!(stratum_sizes(&[0.5, 0.5], 10), vec![5, 5]);
        assert_eq!(stratum_sizes(&[1.0, 0.0], 10), vec![10, 0]);
        assert_eq!(stratum_sizes(&[0.999, 0.001], 10), vec![10, 1]);
    }

    #[test]
    fn kahan_is_accurate() {
        let xs = std::iter::once(1e16).chain(std::iter::repeat_n(1.0, 1000));
        assert_eq!(kahan_sum(xs), 1e16 + 1000.0);
    }
}
