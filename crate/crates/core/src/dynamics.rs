//! Path simulation for dogmatic modelers and switchers, Bayes-factor
//! bookkeeping, and the seeded Monte Carlo harness.
//!
//! Every path owns a counter-based ChaCha8 stream derived from the master
//! seed and its path index, so results are bit-identical across thread
//! counts and across the parallel/sequential backends. Aggregation walks the
//! records in path order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::{DecisionProblem, Outcome};
use crate::model::{normalize_log_weights, Belief, SubjectiveModel};
use crate::numeric::{log_sum_exp, mean_se, wilson_interval};
use crate::policy::Policy;
use crate::Error;

/// One subjective model with its prior and solved policy.
#[derive(Debug, Clone)]
pub struct ModelSlot {
    pub model: SubjectiveModel,
    pub prior: Belief,
    pub policy: Policy,
}

impl ModelSlot {
    pub fn new(model: SubjectiveModel, prior: Belief, policy: Policy) -> Result<Self, Error> {
        prior.validate_prior()?;
        if prior.probs.len() != model.n_params() {
            return Err(Error::InvalidConfig(format!(
                "prior length {} does not match model {} with {} parameters",
                prior.probs.len(),
                model.id,
                model.n_params()
            )));
        }
        Ok(ModelSlot { model, prior, policy })
    }
}

/// Likelihood references for ratio diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LikRef {
    /// The initial model.
    Initial,
    /// The k-th competing model.
    Competing { index: usize },
    /// The true data-generating process.
    Truth,
}

/// Track the ratio l^num / l^den at checkpoints, and optionally the
/// frequency with which its running supremum exceeds a threshold.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RatioCheck {
    pub label: String,
    pub num: LikRef,
    pub den: LikRef,
    pub checkpoints: Vec<u64>,
    pub sup_threshold: Option<f64>,
}

/// Track the initial model's posterior mass on a parameter set at
/// checkpoints.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MassCheck {
    pub params: Vec<usize>,
    pub checkpoints: Vec<u64>,
}

/// Per-path absorption test: actions remain in `support` and the initial
/// model's posterior keeps mass at least 1 - eps on `params` at every
/// period.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AbsorbSpec {
    pub support: Vec<usize>,
    pub params: Vec<usize>,
    pub eps: f64,
}

/// Switcher configuration: initial model, competing models, threshold.
#[derive(Debug, Clone)]
pub struct SwitcherConfig {
    pub problem: DecisionProblem,
    pub initial: ModelSlot,
    pub competing: Vec<ModelSlot>,
    /// Switching threshold, must exceed one.
    pub alpha: f64,
    /// Dogmatic mode: likelihoods are tracked but no switch ever happens.
    pub dogmatic: bool,
    /// Persistence-proxy window length; defaults to half the horizon.
    pub persist_window: Option<u64>,
    pub ratio_checks: Vec<RatioCheck>,
    pub mass_check: Option<MassCheck>,
    pub absorb_check: Option<AbsorbSpec>,
}

impl SwitcherConfig {
    pub fn new(
        problem: DecisionProblem,
        initial: ModelSlot,
        competing: Vec<ModelSlot>,
        alpha: f64,
    ) -> Result<Self, Error> {
        if !(alpha > 1.0) {
            return Err(Error::InvalidConfig(format!("switching threshold {alpha} must exceed 1")));
        }
        Ok(SwitcherConfig {
            problem,
            initial,
            competing,
            alpha,
            dogmatic: false,
            persist_window: None,
            ratio_checks: Vec::new(),
            mass_check: None,
            absorb_check: None,
        })
    }

    pub fn dogmatic(mut self) -> Self {
        self.dogmatic = true;
        self
    }

    fn slots(&self) -> impl Iterator<Item = &ModelSlot> {
        std::iter::once(&self.initial).chain(self.competing.iter())
    }

    pub fn slot(&self, index: usize) -> &ModelSlot {
        if index == 0 {
            &self.initial
        } else {
            &self.competing[index - 1]
        }
    }

    pub fn n_models(&self) -> usize {
        1 + self.competing.len()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SwitchEvent {
    pub t: u64,
    pub from: usize,
    pub to: usize,
    pub log_bayes_factor: f64,
}

/// Running state of one path.
#[derive(Debug, Clone)]
pub struct PathState {
    pub t: u64,
    /// Model in use: 0 = initial, k = competing[k - 1].
    pub current: usize,
    /// Per model, per parameter: ln prior + accumulated log densities.
    pub log_terms: Vec<Vec<f64>>,
    pub log_lik_truth: f64,
    pub action_counts: Vec<u64>,
    pub last: Option<(usize, Outcome)>,
    pub cumulative_utility: f64,
    pub switches: Vec<SwitchEvent>,
}

impl PathState {
    pub fn new(config: &SwitcherConfig) -> Self {
        let log_terms = config
            .slots()
            .map(|s| s.prior.probs.iter().map(|p| p.ln()).collect())
            .collect();
        PathState {
            t: 0,
            current: 0,
            log_terms,
            log_lik_truth: 0.0,
            action_counts: vec![0; config.problem.n_actions()],
            last: None,
            cumulative_utility: 0.0,
            switches: Vec::new(),
        }
    }

    /// ln l_t for one model.
    pub fn log_likelihood(&self, model: usize) -> f64 {
        log_sum_exp(&self.log_terms[model])
    }

    pub fn log_lik_ref(&self, what: LikRef) -> f64 {
        match what {
            LikRef::Initial => self.log_likelihood(0),
            LikRef::Competing { index } => self.log_likelihood(index + 1),
            LikRef::Truth => self.log_lik_truth,
        }
    }

    pub fn posterior(&self, model: usize) -> Vec<f64> {
        normalize_log_weights(&self.log_terms[model])
    }

    /// Empirical action frequency sigma_t.
    pub fn action_frequency(&self) -> Vec<f64> {
        let total: u64 = self.action_counts.iter().sum();
        if total == 0 {
            return vec![0.0; self.action_counts.len()];
        }
        self.action_counts.iter().map(|&c| c as f64 / total as f64).collect()
    }
}

/// Advance one period: Bayes-factor switching (for t >= 1), action choice
/// under the current model's posterior, an outcome draw, and incremental
/// likelihood updates for every model and the truth.
pub fn step(
    config: &SwitcherConfig,
    state: &mut PathState,
    rng: &mut ChaCha8Rng,
) -> Result<(), Error> {
    // Model switching happens at the start of every period t >= 1 using the
    // history through t - 1, which is exactly what log_terms hold.
    if state.t >= 1 && !config.dogmatic && config.n_models() > 1 {
        let log_current = state.log_likelihood(state.current);
        let mut best = state.current;
        let mut best_log_bf = 0.0;
        for m in 0..config.n_models() {
            if m == state.current {
                continue;
            }
            let log_bf = state.log_likelihood(m) - log_current;
            // Strictly larger wins; the incumbent keeps exact ties, and ties
            // between challengers go to the lowest index.
            if log_bf > best_log_bf {
                best = m;
                best_log_bf = log_bf;
            }
        }
        if best != state.current && best_log_bf > config.alpha.ln() {
            state.switches.push(SwitchEvent {
                t: state.t,
                from: state.current,
                to: best,
                log_bayes_factor: best_log_bf,
            });
            state.current = best;
        }
    }

    let slot = config.slot(state.current);
    let probs = state.posterior(state.current);
    let action = slot.policy.act(&config.problem, &slot.model, &probs)?;
    let outcome = config.problem.true_dgp[action].sample(rng);
    state.cumulative_utility += config.problem.utility.evaluate(action, &outcome)?;
    state.action_counts[action] += 1;

    for (m, terms) in state.log_terms.iter_mut().enumerate() {
        let model = &config.slot(m).model;
        for (w, term) in terms.iter_mut().enumerate() {
            *term += model.distribution(w, action).log_density(&outcome)?;
        }
    }
    state.log_lik_truth += config.problem.true_dgp[action].log_density(&outcome)?;
    state.last = Some((action, outcome));
    state.t += 1;
    Ok(())
}

/// Thinned trajectory sample.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajPoint {
    pub t: u64,
    pub model: usize,
    pub action: usize,
    pub outcome_head: f64,
    pub log_lik_initial: f64,
    pub log_lik_truth: f64,
}

/// Summary of one simulated path.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathRecord {
    pub path_id: u64,
    pub n_switches: u32,
    pub switch_times: Vec<u64>,
    pub switch_events: Vec<SwitchEvent>,
    pub final_model_index: usize,
    pub final_model: String,
    pub persist_proxy: bool,
    /// Distinct actions played in the trailing window, sorted.
    pub absorbed_into: Vec<usize>,
    pub final_beliefs: Vec<Vec<f64>>,
    pub final_action_frequency: Vec<f64>,
    pub cumulative_utility: f64,
    /// Per ratio check, the ratio value at each checkpoint <= horizon.
    pub ratio_values: Vec<Vec<f64>>,
    /// Per ratio check, whether sup_t l_num/l_den exceeded the threshold.
    pub ratio_sup_exceeded: Vec<bool>,
    /// Per mass checkpoint, posterior mass of the initial model on the set.
    pub mass_values: Vec<f64>,
    pub absorb_ok: Option<bool>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub trajectory: Vec<TrajPoint>,
}

/// Options controlling per-path data collection.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Record a trajectory point every `k` periods (and the final period).
    pub trajectory_every: Option<u64>,
}

/// Simulate one path of `horizon` periods.
pub fn run_path(
    config: &SwitcherConfig,
    horizon: u64,
    rng: &mut ChaCha8Rng,
    path_id: u64,
    opts: &RunOptions,
) -> Result<PathRecord, Error> {
    if horizon < 1 {
        return Err(Error::InvalidConfig("horizon must be at least 1".into()));
    }
    let mut state = PathState::new(config);
    let window = config.persist_window.unwrap_or(horizon / 2).min(horizon);
    let window_start = horizon - window; // actions at t > window_start count
    let mut absorbed = vec![false; config.problem.n_actions()];

    let n_checks = config.ratio_checks.len();
    let mut ratio_values: Vec<Vec<f64>> = vec![Vec::new(); n_checks];
    let mut sup_log: Vec<f64> = vec![0.0; n_checks]; // ratio is 1 at t = 0
    let mut mass_values: Vec<f64> = Vec::new();
    let mut absorb_ok = config.absorb_check.as_ref().map(|_| true);
    let mut trajectory = Vec::new();

    let capture =
        |state: &PathState, ratio_values: &mut Vec<Vec<f64>>, mass_values: &mut Vec<f64>| {
            for (c, check) in config.ratio_checks.iter().enumerate() {
                if check.checkpoints.contains(&state.t) {
                    let log_ratio =
                        state.log_lik_ref(check.num) - state.log_lik_ref(check.den);
                    ratio_values[c].push(log_ratio.exp());
                }
            }
            if let Some(mc) = &config.mass_check {
                if mc.checkpoints.contains(&state.t) {
                    let post = state.posterior(0);
                    mass_values.push(mc.params.iter().map(|&w| post[w]).sum());
                }
            }
        };

    for _ in 0..horizon {
        capture(&state, &mut ratio_values, &mut mass_values);
        step(config, &mut state, rng)?;
        let (action, outcome) = state.last.as_ref().expect("step records an outcome");
        if state.t > window_start {
            absorbed[*action] = true;
        }
        for (c, check) in config.ratio_checks.iter().enumerate() {
            if check.sup_threshold.is_some() {
                let log_ratio = state.log_lik_ref(check.num) - state.log_lik_ref(check.den);
                sup_log[c] = sup_log[c].max(log_ratio);
            }
        }
        if let (Some(ok), Some(spec)) = (absorb_ok.as_mut(), config.absorb_check.as_ref()) {
            if *ok {
                let in_support = spec.support.contains(action);
                let mass: f64 = {
                    let post = state.posterior(0);
                    spec.params.iter().map(|&w| post[w]).sum()
                };
                if !in_support || mass < 1.0 - spec.eps {
                    *ok = false;
                }
            }
        }
        if let Some(every) = opts.trajectory_every {
            if every > 0 && (state.t % every == 0 || state.t == horizon) {
                let head = match outcome {
                    Outcome::Atom(i) => *i as f64,
                    Outcome::Real(v) => v.first().copied().unwrap_or(f64::NAN),
                };
                trajectory.push(TrajPoint {
                    t: state.t,
                    model: state.current,
                    action: *action,
                    outcome_head: head,
                    log_lik_initial: state.log_likelihood(0),
                    log_lik_truth: state.log_lik_truth,
                });
            }
        }
    }
    capture(&state, &mut ratio_values, &mut mass_values);

    let ratio_sup_exceeded = config
        .ratio_checks
        .iter()
        .enumerate()
        .map(|(c, check)| check.sup_threshold.map(|th| sup_log[c] > th.ln()).unwrap_or(false))
        .collect();

    let persist_proxy =
        state.current == 0 && state.switches.iter().all(|s| s.t <= window_start);
    let absorbed_into: Vec<usize> =
        absorbed.iter().enumerate().filter(|(_, &b)| b).map(|(a, _)| a).collect();

    Ok(PathRecord {
        path_id,
        n_switches: state.switches.len() as u32,
        switch_times: state.switches.iter().map(|s| s.t).collect(),
        switch_events: state.switches.clone(),
        final_model_index: state.current,
        final_model: config.slot(state.current).model.id.clone(),
        persist_proxy,
        absorbed_into,
        final_beliefs: (0..config.n_models()).map(|m| state.posterior(m)).collect(),
        final_action_frequency: state.action_frequency(),
        cumulative_utility: state.cumulative_utility,
        ratio_values,
        ratio_sup_exceeded,
        mass_values,
        absorb_ok,
        trajectory,
    })
}

fn path_rng(master_seed: u64, path_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(path_id);
    rng
}

/// Run `n_paths` independent paths with counter-based streams. With the
/// `parallel` feature (default) the paths run on the current rayon pool;
/// output is independent of scheduling either way.
pub fn run_paths(
    config: &SwitcherConfig,
    n_paths: u64,
    horizon: u64,
    master_seed: u64,
    opts: &RunOptions,
) -> Result<Vec<PathRecord>, Error> {
    #[cfg(feature = "parallel")]
    {
        (0..n_paths)
            .into_par_iter()
            .map(|i| run_path(config, horizon, &mut path_rng(master_seed, i), i, opts))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        run_paths_sequential(config, n_paths, horizon, master_seed, opts)
    }
}

/// Strictly sequential runner; the benchmark baseline and the `parallel`-less
/// fallback. Produces bit-identical records to [`run_paths`].
pub fn run_paths_sequential(
    config: &SwitcherConfig,
    n_paths: u64,
    horizon: u64,
    master_seed: u64,
    opts: &RunOptions,
) -> Result<Vec<PathRecord>, Error> {
    (0..n_paths)
        .map(|i| run_path(config, horizon, &mut path_rng(master_seed, i), i, opts))
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RatioReport {
    pub label: String,
    pub checkpoints: Vec<u64>,
    pub means: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub sup_threshold: Option<f64>,
    pub sup_exceed_count: u64,
    pub sup_exceed_frequency: f64,
    pub sup_exceed_se: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AbsorbReport {
    pub count: u64,
    pub frequency: f64,
    pub wilson95: (f64, f64),
}

/// Aggregate Monte Carlo summary; deterministic for a fixed seed regardless
/// of thread count.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MCSummary {
    pub n_paths: u64,
    pub horizon: u64,
    pub master_seed: u64,
    pub alpha: f64,
    pub initial_model: String,
    pub competing_models: Vec<String>,
    pub dogmatic: bool,
    pub persist_count: u64,
    pub persist_frequency: f64,
    pub persist_wilson95: (f64, f64),
    pub mean_switch_count: f64,
    pub switch_histogram: Vec<(u32, u64)>,
    pub absorbed_frequencies: Vec<(Vec<usize>, f64)>,
    pub final_model_frequencies: Vec<(String, f64)>,
    pub mean_cumulative_utility: f64,
    pub ratio_reports: Vec<RatioReport>,
    pub mass_checkpoints: Vec<u64>,
    pub mass_medians: Vec<f64>,
    pub absorb: Option<AbsorbReport>,
}

pub struct McOutput {
    pub summary: MCSummary,
    pub records: Vec<PathRecord>,
}

/// Run the harness and summarize.
pub fn monte_carlo(
    config: &SwitcherConfig,
    n_paths: u64,
    horizon: u64,
    master_seed: u64,
    opts: &RunOptions,
) -> Result<McOutput, Error> {
    if n_paths < 1 {
        return Err(Error::InvalidConfig("need at least one path".into()));
    }
    let records = run_paths(config, n_paths, horizon, master_seed, opts)?;
    let summary = summarize(config, &records, horizon, master_seed);
    Ok(McOutput { summary, records })
}

fn summarize(
    config: &SwitcherConfig,
    records: &[PathRecord],
    horizon: u64,
    master_seed: u64,
) -> MCSummary {
    let n = records.len() as u64;
    let persist_count = records.iter().filter(|r| r.persist_proxy).count() as u64;
    let mut switch_histogram = std::collections::BTreeMap::new();
    let mut absorbed = std::collections::BTreeMap::new();
    let mut final_models = std::collections::BTreeMap::new();
    for r in records {
        *switch_histogram.entry(r.n_switches).or_insert(0u64) += 1;
        *absorbed.entry(r.absorbed_into.clone()).or_insert(0u64) += 1;
        *final_models.entry(r.final_model.clone()).or_insert(0u64) += 1;
    }
    let mut ratio_reports = Vec::new();
    for (c, check) in config.ratio_checks.iter().enumerate() {
        let k = check.checkpoints.len();
        let mut means = Vec::with_capacity(k);
        let mut ses = Vec::with_capacity(k);
        for idx in 0..k {
            let values: Vec<f64> = records
                .iter()
                .filter_map(|r| r.ratio_values[c].get(idx).copied())
                .collect();
            let (m, s) = mean_se(&values);
            means.push(m);
            ses.push(s);
        }
        let exceed = records.iter().filter(|r| r.ratio_sup_exceeded[c]).count() as u64;
        let p = exceed as f64 / n as f64;
        ratio_reports.push(RatioReport {
            label: check.label.clone(),
            checkpoints: check.checkpoints.clone(),
            means,
            standard_errors: ses,
            sup_threshold: check.sup_threshold,
            sup_exceed_count: exceed,
            sup_exceed_frequency: p,
            sup_exceed_se: (p * (1.0 - p) / n as f64).sqrt(),
        });
    }
    let (mass_checkpoints, mass_medians) = match &config.mass_check {
        Some(mc) => {
            let mut medians = Vec::with_capacity(mc.checkpoints.len());
            for idx in 0..mc.checkpoints.len() {
                let mut values: Vec<f64> =
                    records.iter().filter_map(|r| r.mass_values.get(idx).copied()).collect();
                values.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let median =
                    if values.is_empty() { f64::NAN } else { values[values.len() / 2] };
                medians.push(median);
            }
            (mc.checkpoints.clone(), medians)
        }
        None => (Vec::new(), Vec::new()),
    };
    let absorb = config.absorb_check.as_ref().map(|_| {
        let count = records.iter().filter(|r| r.absorb_ok == Some(true)).count() as u64;
        AbsorbReport {
            count,
            frequency: count as f64 / n as f64,
            wilson95: wilson_interval(count, n),
        }
    });
    MCSummary {
        n_paths: n,
        horizon,
        master_seed,
        alpha: config.alpha,
        initial_model: config.initial.model.id.clone(),
        competing_models: config.competing.iter().map(|s| s.model.id.clone()).collect(),
        dogmatic: config.dogmatic,
        persist_count,
        persist_frequency: persist_count as f64 / n as f64,
        persist_wilson95: wilson_interval(persist_count, n),
        mean_switch_count: records.iter().map(|r| r.n_switches as f64).sum::<f64>() / n as f64,
        switch_histogram: switch_histogram.into_iter().collect(),
        absorbed_frequencies: absorbed
            .into_iter()
            .map(|(k, v)| (k, v as f64 / n as f64))
            .collect(),
        final_model_frequencies: final_models
            .into_iter()
            .map(|(k, v)| (k, v as f64 / n as f64))
            .collect(),
        mean_cumulative_utility: records.iter().map(|r| r.cumulative_utility).sum::<f64>()
            / n as f64,
        ratio_reports,
        mass_checkpoints,
        mass_medians,
        absorb,
    }
}
