//! Parameterized builders for the worked examples and applications, with
//! machine-checkable expected assertions carrying provenance tags.

use serde::{Deserialize, Serialize};

use crate::dynamics::{monte_carlo, LikRef, ModelSlot, RatioCheck, RunOptions, SwitcherConfig};
use crate::env::{ActionSpec, DecisionProblem, OutcomeDistribution, UtilityFn};
use crate::equilibrium::{enumerate_and_classify, enumerate_mixed_bne, enumerate_pure_bne};
use crate::model::{
    Belief, GridPredicate, MeanFn, ParamEmbedding, QFamily, QKernel, SubjectiveModel,
};
use crate::numeric::bisect;
use crate::policy::{solve_policy, PolicyMode};
use crate::robustness::{constrained_verdict, global_verdict, McBudget, VerdictKind};
use crate::Error;

fn gaussian(mean: f64, variance: f64) -> Result<OutcomeDistribution, Error> {
    OutcomeDistribution::gaussian(mean, variance)
}

/// Where an expected value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Paper,
    Trivial,
    Derived,
}

/// A machine-checkable claim about a scenario. The runner refuses untagged
/// assertions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExpectedAssertion {
    pub id: String,
    pub provenance: Option<Provenance>,
    pub check: Check,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Check {
    /// Exact set of pure Berk-Nash equilibrium actions.
    PureBneActions { expect: Vec<usize> },
    /// The witness belief of the pure BN-E at `action` concentrates on
    /// `param`.
    PureWitness { action: usize, param: usize },
    /// Classification flags of the record with the given support.
    RecordFlags {
        support: Vec<usize>,
        sce: Option<bool>,
        quasi_strict: Option<bool>,
        uniformly_quasi_strict: Option<bool>,
    },
    /// Number of mixed components.
    MixedComponents { expect: usize },
    GlobalVerdict { expect: VerdictKind, certified: Option<bool> },
    ConstrainedVerdict { family: String, expect: VerdictKind },
    /// alpha versus K (and optionally K^(1/d)).
    MultiModelGate { d: Option<f64>, global_ok: bool, constrained_ok: Option<bool> },
    /// The overfitting switch trigger (1 - 1/M - (M-1) eta) / (1/M).
    OverfittingTrigger { expect: f64, tol: f64 },
    Simulate(SimCheck),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimCheck {
    pub n_paths: u64,
    pub horizon: u64,
    pub seed: u64,
    pub dogmatic: bool,
    /// Restrict the competing set to these indices (default: all).
    pub competing_subset: Option<Vec<usize>>,
    pub initial_prior_override: Option<Vec<f64>>,
    pub assert: SimAssert,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SimAssert {
    /// At least this fraction of paths switch exactly at t = 1.
    SwitchAtOneFrequencyAtLeast { min: f64 },
    /// Every path switches exactly once and ends away from the initial
    /// model.
    AllPathsOneSwitchAwayFromInitial,
    PersistFrequencyAtMost { max: f64 },
    PersistFrequencyAtLeast { min: f64 },
    /// The 95% Wilson lower bound of the persistence frequency is positive.
    PersistWilsonLbPositive,
    /// Fraction of paths whose trailing-window action set is exactly
    /// `actions`.
    AbsorbedIntoFrequencyAtLeast { actions: Vec<usize>, min: f64 },
    AbsorbedIntoFrequencyAtMost { actions: Vec<usize>, max: f64 },
    /// Mean of l_num/l_den within `ses` standard errors of 1 at every
    /// checkpoint.
    RatioMeanNearOne { num: LikRef, den: LikRef, checkpoints: Vec<u64>, ses: f64 },
    /// Frequency of sup_t l_num/l_den > threshold at most 1/threshold plus
    /// `ses` standard errors.
    SupRatioWithinVilleBound { num: LikRef, den: LikRef, threshold: f64, ses: f64 },
}

/// One fully built scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub problem: DecisionProblem,
    pub initial_model: SubjectiveModel,
    pub initial_prior: Vec<f64>,
    pub competing: Vec<CompetingSpec>,
    pub families: Vec<(String, QFamily)>,
    pub alpha: f64,
    pub assume_convergence: bool,
    pub policy_mode: PolicyMode,
    pub expected: Vec<ExpectedAssertion>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompetingSpec {
    pub model: SubjectiveModel,
    pub prior: Vec<f64>,
}

impl Scenario {
    pub fn family(&self, name: &str) -> Result<&QFamily, Error> {
        self.families
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, f)| f)
            .ok_or_else(|| Error::InvalidConfig(format!("scenario has no family {name:?}")))
    }

    /// Build the switcher configuration, optionally restricting the
    /// competing set and overriding the initial prior.
    pub fn switcher_config(
        &self,
        competing_subset: Option<&[usize]>,
        initial_prior_override: Option<&[f64]>,
        dogmatic: bool,
        alpha_override: Option<f64>,
    ) -> Result<SwitcherConfig, Error> {
        let prior = initial_prior_override.unwrap_or(&self.initial_prior).to_vec();
        let initial = ModelSlot::new(
            self.initial_model.clone(),
            Belief::new(self.initial_model.id.clone(), prior)?,
            solve_policy(&self.problem, &self.initial_model, self.policy_mode)?,
        )?;
        let indices: Vec<usize> = match competing_subset {
            Some(subset) => subset.to_vec(),
            None => (0..self.competing.len()).collect(),
        };
        let mut competing = Vec::with_capacity(indices.len());
        for &i in &indices {
            let spec = self
                .competing
                .get(i)
                .ok_or_else(|| Error::InvalidConfig(format!("no competing model {i}")))?;
            competing.push(ModelSlot::new(
                spec.model.clone(),
                Belief::new(spec.model.id.clone(), spec.prior.clone())?,
                solve_policy(&self.problem, &spec.model, self.policy_mode)?,
            )?);
        }
        let alpha = alpha_override.unwrap_or(self.alpha);
        let mut config = SwitcherConfig::new(self.problem.clone(), initial, competing, alpha)?;
        config.dogmatic = dogmatic;
        Ok(config)
    }
}

/// Names understood by [`build`].
pub fn catalog() -> Vec<&'static str> {
    vec![
        "example1",
        "overconfidence1",
        "overconfidence2",
        "overfitting",
        "investment_pessimism",
        "investment_optimism",
        "team_over",
        "team_under",
        "mixed_sce",
        "appendix_c1",
        "appendix_c2",
        "martingale_check",
    ]
}

/// Build a named scenario with its canonical parameters.
pub fn build(name: &str) -> Result<Scenario, Error> {
    match name {
        "example1" => example1(),
        "overconfidence1" => overconfidence1(),
        "overconfidence2" => overconfidence2(),
        "overfitting" => overfitting(2.5, 1e-3, 2e-3),
        "investment_pessimism" => investment(0.5),
        "investment_optimism" => investment(3.5),
        "team_over" => team(3.0, 1.0, 2.0),
        "team_under" => team(0.8, 2.0, 1.0),
        "mixed_sce" => mixed_sce(),
        "appendix_c1" => appendix_c1(),
        "appendix_c2" => appendix_c2(),
        "martingale_check" => martingale_check(),
        _ => Err(Error::UnknownScenario(name.to_string())),
    }
}

fn tagged(id: &str, provenance: Provenance, check: Check) -> ExpectedAssertion {
    ExpectedAssertion { id: id.to_string(), provenance: Some(provenance), check }
}

fn effort_actions(n: usize) -> Vec<ActionSpec> {
    (0..n).map(|a| ActionSpec::new(format!("effort-{a}"), a as f64)).collect()
}

fn quadratic_costs(n: usize) -> Vec<f64> {
    (0..n).map(|a| 0.5 * (a as f64).powi(2)).collect()
}

/// Two actions, payoff |y|, truth N(1, 1); the model predicts
/// y ~ N(w - a, 1) over w in {1, 2, 3}. Its unique self-confirming
/// equilibrium (low action, belief on w = 2) fails to absorb: the high
/// action recurs forever.
pub fn example1() -> Result<Scenario, Error> {
    let actions = vec![ActionSpec::new("low", 1.0), ActionSpec::new("high", 3.0)];
    let dgp = vec![gaussian(1.0, 1.0)?, gaussian(1.0, 1.0)?];
    let problem = DecisionProblem::new(actions, dgp, UtilityFn::AbsOutcome, 0.0)?;
    let params: Vec<Vec<f64>> = (1..=3).map(|w| vec![w as f64]).collect();
    let kernel = params
        .iter()
        .map(|p| {
            Ok(vec![gaussian(p[0] - 1.0, 1.0)?, gaussian(p[0] - 3.0, 1.0)?])
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let model = SubjectiveModel::new("absolute-payoff", params, kernel)?;
    let expected = vec![
        tagged(
            "unique-pure-bne-low-action",
            Provenance::Paper,
            Check::PureBneActions { expect: vec![0] },
        ),
        tagged(
            "low-action-supported-by-middle-parameter",
            Provenance::Paper,
            Check::PureWitness { action: 0, param: 1 },
        ),
        tagged(
            "sce-but-not-uniformly-quasi-strict",
            Provenance::Paper,
            Check::RecordFlags {
                support: vec![0],
                sce: Some(true),
                quasi_strict: Some(false),
                uniformly_quasi_strict: Some(false),
            },
        ),
        tagged(
            "one-mixed-component-on-both-actions",
            Provenance::Derived,
            Check::MixedComponents { expect: 1 },
        ),
        tagged(
            "high-action-recurs",
            Provenance::Paper,
            Check::Simulate(SimCheck {
                n_paths: 300,
                horizon: 2000,
                seed: 2024,
                dogmatic: true,
                competing_subset: None,
                initial_prior_override: Some(vec![0.025, 0.95, 0.025]),
                assert: SimAssert::AbsorbedIntoFrequencyAtMost {
                    actions: vec![0],
                    max: 0.9,
                },
            }),
        ),
    ];
    Ok(Scenario {
        name: "example1".into(),
        description: "absolute-value payoff with a non-absorbing self-confirming equilibrium"
            .into(),
        problem,
        initial_model: model,
        initial_prior: vec![1.0 / 3.0; 3],
        competing: vec![],
        families: vec![],
        alpha: 2.0,
        assume_convergence: false,
        policy_mode: PolicyMode::Myopic,
        expected,
    })
}

/// Worker with overconfident self-assessment (believes ability 3, truth 1)
/// learning the return to effort; truth y = (a + 1) * 2 + noise, model
/// y = (a + 3) w + noise, w in {1, 2, 3}.
pub fn overconfidence1() -> Result<Scenario, Error> {
    let n = 4;
    let problem = DecisionProblem::new(
        effort_actions(n),
        (0..n).map(|a| gaussian((a as f64 + 1.0) * 2.0, 1.0)).collect::<Result<_, _>>()?,
        UtilityFn::LinearInOutcome { coord: 0, action_cost: quadratic_costs(n) },
        0.0,
    )?;
    let params: Vec<Vec<f64>> = (1..=3).map(|w| vec![w as f64]).collect();
    let kernel = params
        .iter()
        .map(|p| {
            (0..n).map(|a| gaussian((a as f64 + 3.0) * p[0], 1.0)).collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let model = SubjectiveModel::new("overconfident-worker", params, kernel)?;
    // The paper's competing model: correct ability, w in {1, 2}.
    let comp_params: Vec<Vec<f64>> = (1..=2).map(|w| vec![w as f64]).collect();
    let comp_kernel = comp_params
        .iter()
        .map(|p| {
            (0..n).map(|a| gaussian((a as f64 + 1.0) * p[0], 1.0)).collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let competing = SubjectiveModel::new("correct-ability", comp_params, comp_kernel)?;
    let expected = vec![
        tagged(
            "unique-pure-bne-low-effort",
            Provenance::Paper,
            Check::PureBneActions { expect: vec![1] },
        ),
        tagged(
            "witness-concentrates-on-low-return",
            Provenance::Paper,
            Check::PureWitness { action: 1, param: 0 },
        ),
        tagged(
            "uniformly-quasi-strict-sce",
            Provenance::Paper,
            Check::RecordFlags {
                support: vec![1],
                sce: Some(true),
                quasi_strict: Some(true),
                uniformly_quasi_strict: Some(true),
            },
        ),
        tagged(
            "globally-robust-certified",
            Provenance::Paper,
            Check::GlobalVerdict { expect: VerdictKind::GloballyRobust, certified: Some(true) },
        ),
        tagged("no-mixed-components", Provenance::Derived, Check::MixedComponents { expect: 0 }),
    ];
    Ok(Scenario {
        name: "overconfidence1".into(),
        description: "overconfident worker globally trapped in low effort".into(),
        problem,
        initial_model: model,
        initial_prior: vec![1.0 / 3.0; 3],
        competing: vec![CompetingSpec { model: competing, prior: vec![0.5, 0.5] }],
        families: vec![],
        alpha: 2.0,
        assume_convergence: false,
        policy_mode: PolicyMode::Myopic,
        expected,
    })
}

/// Teamwork extension with performance reviews: outcome (y, s) with
/// y = (a + 1) * 3 + noise and s = 1 + noise; the worker believes his
/// ability is 2 and learns the teammate's ability w in {1, 2, 3}.
pub fn overconfidence2() -> Result<Scenario, Error> {
    let n = 4;
    let truth = (0..n)
        .map(|a| {
            OutcomeDistribution::product(vec![
                gaussian(3.0 * (a as f64 + 1.0), 1.0)?,
                gaussian(1.0, 2.0)?,
            ])
        })
        .collect::<Result<Vec<_>, _>>()?;
    let problem = DecisionProblem::new(
        effort_actions(n),
        truth,
        UtilityFn::LinearInOutcome { coord: 0, action_cost: quadratic_costs(n) },
        0.0,
    )?;
    let params: Vec<Vec<f64>> = (1..=3).map(|w| vec![w as f64]).collect();
    let kernel = params
        .iter()
        .map(|p| {
            (0..n)
                .map(|a| {
                    OutcomeDistribution::product(vec![
                        gaussian((a as f64 + 2.0) * p[0], 1.0)?,
                        gaussian(4.0, 2.0)?,
                    ])
                })
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let model = SubjectiveModel::new("team-overconfident", params, kernel)?;
    let kernel_spec = QKernel::TeamOutputWithReview { y_var: 1.0, s_var: 2.0 };
    let constrained = QFamily::from_box(
        &[(0.0, 4.0, 0.2), (0.0, 4.0, 0.2)],
        kernel_spec.clone(),
        GridPredicate::FirstAtLeastSecond,
        ParamEmbedding::PrependConstant { value: 2.0 },
    )?;
    let unconstrained = QFamily::from_box(
        &[(0.0, 4.0, 0.2), (0.0, 4.0, 0.2)],
        kernel_spec,
        GridPredicate::All,
        ParamEmbedding::PrependConstant { value: 2.0 },
    )?;
    let expected = vec![
        tagged(
            "uniformly-strict-bne-at-effort-2",
            Provenance::Paper,
            Check::RecordFlags {
                support: vec![2],
                sce: Some(false),
                quasi_strict: Some(true),
                uniformly_quasi_strict: Some(true),
            },
        ),
        tagged(
            "not-globally-robust",
            Provenance::Paper,
            Check::GlobalVerdict {
                expect: VerdictKind::NotGloballyRobust,
                certified: Some(true),
            },
        ),
        tagged(
            "constrained-robust-in-better-than-average-family",
            Provenance::Paper,
            Check::ConstrainedVerdict {
                family: "b_ge_omega".into(),
                expect: VerdictKind::ConstrainedLocallyRobust,
            },
        ),
        tagged(
            "not-constrained-robust-in-unrestricted-family",
            Provenance::Paper,
            Check::ConstrainedVerdict {
                family: "r2".into(),
                expect: VerdictKind::NotConstrainedLocallyRobust,
            },
        ),
    ];
    Ok(Scenario {
        name: "overconfidence2".into(),
        description: "teamwork with reviews: no SCE, robust only inside the better-than-average family".into(),
        problem,
        initial_model: model,
        initial_prior: vec![1.0 / 3.0; 3],
        competing: vec![],
        families: vec![("b_ge_omega".into(), constrained), ("r2".into(), unconstrained)],
        alpha: 2.0,
        assume_convergence: true,
        policy_mode: PolicyMode::Myopic,
        expected,
    })
}

/// The overfitting trap: the true model competes against M single-parameter
/// models, each predicting one outcome of a uniform distribution almost
/// surely. M is the smallest integer exceeding alpha + 1.
pub fn overfitting(alpha: f64, eta: f64, cost: f64) -> Result<Scenario, Error> {
    if !(alpha > 1.0) {
        return Err(Error::InvalidConfig("alpha must exceed 1".into()));
    }
    let m = (alpha + 1.0).floor() as usize + 1;
    if !(eta > 0.0) || eta * (m as f64 - 1.0) >= 1.0 - 1.0 / m as f64 {
        return Err(Error::InvalidConfig("eta out of range".into()));
    }
    if !(cost > 0.0) || cost >= m as f64 * eta {
        return Err(Error::InvalidConfig(
            "cost must be positive and below M * eta so the risky action stays attractive only under the truth".into(),
        ));
    }
    let uniform = OutcomeDistribution::categorical(vec![1.0 / m as f64; m])?;
    let actions = vec![ActionSpec::new("costly", 0.0), ActionSpec::new("free", 1.0)];
    // u(costly, y) = -M 1{y = atom0} - cost; u(free, y) = -M 1{y = atom0}.
    let mut costly_row = vec![-cost; m];
    costly_row[0] = -(m as f64) - cost;
    let mut free_row = vec![0.0; m];
    free_row[0] = -(m as f64);
    let problem = DecisionProblem::new(
        actions,
        vec![uniform.clone(), uniform.clone()],
        UtilityFn::Table { rows: vec![costly_row, free_row] },
        0.0,
    )?;
    let initial = SubjectiveModel::new(
        "true-uniform",
        vec![vec![0.0]],
        vec![vec![uniform.clone(), uniform.clone()]],
    )?;
    let mut competing = Vec::with_capacity(m);
    for outcome in 0..m {
        let mut probs = vec![eta; m];
        if outcome == 0 {
            probs[0] = 1.0 - (m as f64 - 1.0) * eta;
        } else {
            probs[outcome] = 1.0 - 1.0 / m as f64 - (m as f64 - 1.0) * eta;
            probs[0] = 1.0 / m as f64 + eta;
        }
        let dist = OutcomeDistribution::categorical(probs)?;
        competing.push(CompetingSpec {
            model: SubjectiveModel::new(
                format!("peak-{}", outcome + 1),
                vec![vec![outcome as f64]],
                vec![vec![uniform.clone(), dist]],
            )?,
            prior: vec![1.0],
        });
    }
    let trigger = (1.0 - 1.0 / m as f64 - (m as f64 - 1.0) * eta) * m as f64;
    let expected = vec![
        tagged(
            "switch-trigger-arithmetic",
            Provenance::Paper,
            Check::OverfittingTrigger { expect: trigger, tol: 1e-12 },
        ),
        tagged(
            "all-paths-switch-at-period-one",
            Provenance::Paper,
            Check::Simulate(SimCheck {
                n_paths: 1000,
                horizon: 200,
                seed: 31,
                dogmatic: false,
                competing_subset: None,
                initial_prior_override: None,
                assert: SimAssert::SwitchAtOneFrequencyAtLeast { min: 1.0 },
            }),
        ),
        tagged(
            "trapped-forever-in-a-wrong-model",
            Provenance::Paper,
            Check::Simulate(SimCheck {
                n_paths: 1000,
                horizon: 200,
                seed: 31,
                dogmatic: false,
                competing_subset: None,
                initial_prior_override: None,
                assert: SimAssert::AllPathsOneSwitchAwayFromInitial,
            }),
        ),
        tagged(
            "never-persists",
            Provenance::Paper,
            Check::Simulate(SimCheck {
                n_paths: 1000,
                horizon: 200,
                seed: 31,
                dogmatic: false,
                competing_subset: None,
                initial_prior_override: None,
                assert: SimAssert::PersistFrequencyAtMost { max: 0.0 },
            }),
        ),
        tagged(
            "threshold-gate-fails",
            Provenance::Paper,
            Check::MultiModelGate { d: None, global_ok: false, constrained_ok: None },
        ),
    ];
    Ok(Scenario {
        name: "overfitting".into(),
        description: format!(
            "true uniform model against {m} peaked competitors; switching threshold {alpha}"
        ),
        problem,
        initial_model: initial,
        initial_prior: vec![1.0],
        competing,
        families: vec![],
        alpha,
        assume_convergence: false,
        policy_mode: PolicyMode::Myopic,
        expected,
    })
}

/// Financial investment with a dogmatic market-condition view `b_hat`:
/// two risky assets with returns N(b* + w*_n, 1) and a safe asset
/// returning N(G, 1). The model predicts risky returns N(b_hat + w_n, 1)
/// over a per-asset grid.
pub fn investment(b_hat: f64) -> Result<Scenario, Error> {
    let g = MeanFn::Sum;
    let (b_star, safe_return) = (2.0, 3.0);
    let omega_star = [1.2, 0.6];
    let (omega_lo, omega_hi) = (0.0, 2.0);
    let (b_lo, b_hi) = (0.0, 4.0);
    let noise = 1.0;
    let n_risky = omega_star.len();
    let g_star =
        omega_star.iter().map(|&w| g.eval(b_star, w)).fold(f64::NEG_INFINITY, f64::max);
    // Thresholds from the monotone root-finding oracle:
    // g(beta_low, omega_hi) = G and g(beta_high, omega_lo) = g*.
    let beta_low = bisect(|b| g.eval(b, omega_hi) - safe_return, b_lo, b_hi, 1e-12)
        .ok_or_else(|| Error::InvalidConfig("no pessimism threshold in range".into()))?;
    let beta_high = bisect(|b| g.eval(b, omega_lo) - g_star, b_lo, b_hi, 1e-12)
        .ok_or_else(|| Error::InvalidConfig("no optimism threshold in range".into()))?;

    let mut actions: Vec<ActionSpec> =
        (0..n_risky).map(|i| ActionSpec::new(format!("risky-{}", i + 1), i as f64)).collect();
    actions.push(ActionSpec::new("safe", n_risky as f64));
    let mut dgp: Vec<OutcomeDistribution> = omega_star
        .iter()
        .map(|&w| gaussian(g.eval(b_star, w), noise))
        .collect::<Result<_, _>>()?;
    dgp.push(gaussian(safe_return, noise)?);
    let problem = DecisionProblem::new(
        actions,
        dgp,
        UtilityFn::LinearInOutcome { coord: 0, action_cost: vec![0.0; n_risky + 1] },
        0.0,
    )?;

    // Per-asset grid {0, 1, 2}; parameters are (w_1, w_2) vectors. The
    // exact-match value is included whenever it exists in range.
    let mut axis = vec![0.0, 1.0, 2.0];
    for &ws in &omega_star {
        if let Some(exact) =
            bisect(|w| g.eval(b_hat, w) - g.eval(b_star, ws), omega_lo, omega_hi, 1e-12)
        {
            if !axis.iter().any(|&v| (v - exact).abs() < 1e-9) {
                axis.push(exact);
            }
        }
    }
    axis.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut params: Vec<Vec<f64>> = vec![];
    for &w1 in &axis {
        for &w2 in &axis {
            params.push(vec![w1, w2]);
        }
    }
    let kernel = params
        .iter()
        .map(|p| {
            let mut row: Vec<OutcomeDistribution> = p
                .iter()
                .map(|&w| gaussian(g.eval(b_hat, w), noise))
                .collect::<Result<_, _>>()?;
            row.push(gaussian(safe_return, noise)?);
            Ok(row)
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let model = SubjectiveModel::new(format!("investor-b{b_hat}"), params.clone(), kernel)?;

    let family = QFamily::from_box(
        &[(b_lo, b_hi, 0.25), (omega_lo, omega_hi, 0.25), (omega_lo, omega_hi, 0.25)],
        QKernel::Investment { g, safe_return, noise_var: noise },
        GridPredicate::All,
        ParamEmbedding::PrependConstant { value: b_hat },
    )?;

    let safe_index = n_risky;
    let expected = if b_hat < beta_low {
        vec![
            tagged(
                "safe-asset-uniformly-strict-sce",
                Provenance::Paper,
                Check::RecordFlags {
                    support: vec![safe_index],
                    sce: Some(true),
                    quasi_strict: Some(true),
                    uniformly_quasi_strict: Some(true),
                },
            ),
            tagged(
                "extreme-pessimism-globally-robust",
                Provenance::Paper,
                Check::GlobalVerdict {
                    expect: VerdictKind::GloballyRobust,
                    certified: Some(true),
                },
            ),
        ]
    } else if b_hat > beta_high {
        vec![
            tagged(
                "extreme-optimism-not-globally-robust",
                Provenance::Paper,
                Check::GlobalVerdict {
                    expect: VerdictKind::NotGloballyRobust,
                    certified: Some(true),
                },
            ),
            tagged(
                "extreme-optimism-not-constrained-robust",
                Provenance::Paper,
                Check::ConstrainedVerdict {
                    family: "market".into(),
                    expect: VerdictKind::NotConstrainedLocallyRobust,
                },
            ),
        ]
    } else {
        vec![tagged(
            "mild-misperception-globally-robust",
            Provenance::Paper,
            Check::GlobalVerdict { expect: VerdictKind::GloballyRobust, certified: None },
        )]
    };
    Ok(Scenario {
        name: if b_hat < beta_low {
            "investment_pessimism".into()
        } else if b_hat > beta_high {
            "investment_optimism".into()
        } else {
            "investment_mild".into()
        },
        description: format!(
            "asset choice with market-condition view {b_hat} (thresholds {beta_low:.3}/{beta_high:.3})"
        ),
        problem,
        initial_model: model,
        initial_prior: vec![1.0 / params.len() as f64; params.len()],
        competing: vec![],
        families: vec![("market".into(), family)],
        alpha: 2.0,
        assume_convergence: true,
        policy_mode: PolicyMode::Myopic,
        expected,
    })
}

/// Team production y = (a + b*) w* + noise with a dogmatic self-view
/// `b_hat`; the parameter grid carries the exact-match teammate ability for
/// each effort level, as the richness condition requires.
pub fn team(b_hat: f64, b_star: f64, omega_star: f64) -> Result<Scenario, Error> {
    let n = 3;
    let problem = DecisionProblem::new(
        effort_actions(n),
        (0..n)
            .map(|a| gaussian((a as f64 + b_star) * omega_star, 1.0))
            .collect::<Result<_, _>>()?,
        UtilityFn::LinearInOutcome { coord: 0, action_cost: quadratic_costs(n) },
        0.0,
    )?;
    let mut params: Vec<Vec<f64>> = vec![];
    for a in 0..n {
        let exact = (a as f64 + b_star) * omega_star / (a as f64 + b_hat);
        if !params.iter().any(|p| (p[0] - exact).abs() < 1e-12) {
            params.push(vec![exact]);
        }
    }
    let kernel = params
        .iter()
        .map(|p| {
            (0..n)
                .map(|a| gaussian((a as f64 + b_hat) * p[0], 1.0))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let model =
        SubjectiveModel::new(format!("team-b{b_hat}"), params.clone(), kernel)?;
    let overconfident = b_hat > b_star;
    let family = QFamily::from_box(
        &[(0.2, 3.2, 0.1), (0.2, 2.8, 0.1)],
        QKernel::TeamOutput { noise_var: 1.0 },
        GridPredicate::All,
        ParamEmbedding::PrependConstant { value: b_hat },
    )?;
    let expected = if overconfident {
        vec![
            tagged(
                "pure-uniformly-strict-sce",
                Provenance::Derived,
                Check::RecordFlags {
                    support: vec![1],
                    sce: Some(true),
                    quasi_strict: Some(true),
                    uniformly_quasi_strict: Some(true),
                },
            ),
            tagged(
                "overconfidence-globally-robust",
                Provenance::Paper,
                Check::GlobalVerdict {
                    expect: VerdictKind::GloballyRobust,
                    certified: Some(true),
                },
            ),
        ]
    } else {
        vec![
            tagged("no-pure-bne", Provenance::Derived, Check::PureBneActions { expect: vec![] }),
            tagged(
                "unique-mixed-component",
                Provenance::Derived,
                Check::MixedComponents { expect: 1 },
            ),
            tagged(
                "underconfidence-not-constrained-robust",
                Provenance::Paper,
                Check::ConstrainedVerdict {
                    family: "ability".into(),
                    expect: VerdictKind::NotConstrainedLocallyRobust,
                },
            ),
        ]
    };
    Ok(Scenario {
        name: if overconfident { "team_over".into() } else { "team_under".into() },
        description: format!(
            "team production with self-view {b_hat} against true ability {b_star}"
        ),
        problem,
        initial_model: model,
        initial_prior: vec![1.0 / params.len() as f64; params.len()],
        competing: vec![],
        families: vec![("ability".into(), family)],
        alpha: 2.0,
        assume_convergence: true,
        policy_mode: PolicyMode::Myopic,
        expected,
    })
}

/// Every strategy is a self-confirming equilibrium: truth N(0.25, 1), model
/// y ~ N((a - w)^2, 1) with w in {1, 1.5, 2}. The middle parameter matches
/// both actions, so mixed equilibria are uniformly quasi-strict and
/// certified absorbing.
pub fn mixed_sce() -> Result<Scenario, Error> {
    let actions = vec![ActionSpec::new("one", 1.0), ActionSpec::new("two", 2.0)];
    let dgp = vec![gaussian(0.25, 1.0)?, gaussian(0.25, 1.0)?];
    let problem = DecisionProblem::new(
        actions,
        dgp,
        UtilityFn::LinearInOutcome { coord: 0, action_cost: vec![0.0, 0.0] },
        0.0,
    )?;
    let params = vec![vec![1.0], vec![1.5], vec![2.0]];
    let kernel = params
        .iter()
        .map(|p| {
            vec![1.0, 2.0]
                .into_iter()
                .map(|a| gaussian((a - p[0]) * (a - p[0]), 1.0))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let model = SubjectiveModel::new("quadratic-gap", params, kernel)?;
    let expected = vec![
        tagged(
            "one-mixed-component-covering-the-simplex",
            Provenance::Paper,
            Check::MixedComponents { expect: 1 },
        ),
        tagged(
            "mixed-sce-uniformly-quasi-strict",
            Provenance::Paper,
            Check::RecordFlags {
                support: vec![0, 1],
                sce: Some(true),
                quasi_strict: Some(true),
                uniformly_quasi_strict: Some(true),
            },
        ),
        tagged(
            "globally-robust-via-mixed-sce",
            Provenance::Derived,
            Check::GlobalVerdict { expect: VerdictKind::GloballyRobust, certified: Some(true) },
        ),
    ];
    Ok(Scenario {
        name: "mixed_sce".into(),
        description: "p-absorbing mixed self-confirming equilibria".into(),
        problem,
        initial_model: model,
        initial_prior: vec![1.0 / 3.0; 3],
        competing: vec![],
        families: vec![],
        alpha: 2.0,
        assume_convergence: false,
        policy_mode: PolicyMode::Myopic,
        expected,
    })
}

fn mean_product(means: (f64, f64)) -> Result<OutcomeDistribution, Error> {
    OutcomeDistribution::product(vec![gaussian(means.0, 1.0)?, gaussian(means.1, 1.0)?])
}

/// Persistence against each competitor separately but not against the pair:
/// two-coordinate signals observed per action, with each competitor
/// correcting one coordinate of the initial model.
pub fn appendix_c1() -> Result<Scenario, Error> {
    let actions = vec![ActionSpec::new("one", 1.0), ActionSpec::new("two", 2.0)];
    // Observed coordinates: action one -> (x1, x3), action two -> (x2, x4);
    // true means x1 = x2 = 0, x3 = x4 = 1. Payoff is the second coordinate.
    let dgp = vec![mean_product((0.0, 1.0))?, mean_product((0.0, 1.0))?];
    let problem = DecisionProblem::new(
        actions,
        dgp,
        UtilityFn::LinearInOutcome { coord: 1, action_cost: vec![0.0, 0.0] },
        0.0,
    )?;
    // Prediction table rows (x1, x2, x3, x4) per parameter.
    let build_model = |id: &str, rows: [[f64; 4]; 2]| -> Result<SubjectiveModel, Error> {
        let params: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
        let kernel = rows
            .iter()
            .map(|r| Ok(vec![mean_product((r[0], r[2]))?, mean_product((r[1], r[3]))?]))
            .collect::<Result<Vec<_>, Error>>()?;
        SubjectiveModel::new(id, params, kernel)
    };
    let theta = build_model("both-signals-high", [[1.0, 1.0, 1.0, 0.0], [1.0, 1.0, 0.0, 1.0]])?;
    let theta1 = build_model("second-signal-low", [[1.0, 0.0, 1.0, 0.0], [1.0, 0.0, 0.0, 1.0]])?;
    let theta2 = build_model("first-signal-low", [[0.0, 1.0, 1.0, 0.0], [0.0, 1.0, 0.0, 1.0]])?;
    let sim = |subset: Option<Vec<usize>>, prior: Vec<f64>, assert: SimAssert| {
        Check::Simulate(SimCheck {
            n_paths: 400,
            horizon: 300,
            seed: 17,
            dogmatic: false,
            competing_subset: subset,
            initial_prior_override: Some(prior),
            assert,
        })
    };
    let expected = vec![
        tagged(
            "persists-against-first-competitor-alone",
            Provenance::Paper,
            sim(Some(vec![0]), vec![0.95, 0.05], SimAssert::PersistWilsonLbPositive),
        ),
        tagged(
            "persists-against-second-competitor-alone",
            Provenance::Paper,
            sim(Some(vec![1]), vec![0.05, 0.95], SimAssert::PersistWilsonLbPositive),
        ),
        tagged(
            "never-persists-against-the-pair-at-first-prior",
            Provenance::Paper,
            sim(None, vec![0.95, 0.05], SimAssert::PersistFrequencyAtMost { max: 0.0 }),
        ),
        tagged(
            "never-persists-against-the-pair-at-second-prior",
            Provenance::Paper,
            sim(None, vec![0.05, 0.95], SimAssert::PersistFrequencyAtMost { max: 0.0 }),
        ),
    ];
    Ok(Scenario {
        name: "appendix_c1".into(),
        description: "persists against each competitor separately, never against the pair"
            .into(),
        problem,
        initial_model: theta,
        initial_prior: vec![0.95, 0.05],
        competing: vec![
            CompetingSpec { model: theta1, prior: vec![0.95, 0.05] },
            CompetingSpec { model: theta2, prior: vec![0.05, 0.95] },
        ],
        families: vec![],
        alpha: 3.0,
        assume_convergence: false,
        policy_mode: PolicyMode::Myopic,
        expected,
    })
}

/// Persistence against the pair but not against the exact-truth competitor
/// alone: an early detour through the second competitor can entrench the
/// matching parameter.
pub fn appendix_c2() -> Result<Scenario, Error> {
    let actions = vec![ActionSpec::new("one", 1.0), ActionSpec::new("two", 2.0)];
    let dgp = vec![gaussian(0.0, 1.0)?, gaussian(0.0, 1.0)?];
    // Payoff a * y via the per-action scaled coordinate.
    let problem = DecisionProblem::new(
        actions,
        dgp,
        UtilityFn::Custom { tag: "scaled_coord".into(), params: vec![0.0, 1.0, 2.0] },
        0.0,
    )?;
    let theta = SubjectiveModel::new(
        "matching-at-one",
        vec![vec![1.0], vec![2.0]],
        vec![
            vec![gaussian(0.0, 1.0)?, gaussian(-2.0, 1.0)?],
            vec![gaussian(1.0, 1.0)?, gaussian(1.0, 1.0)?],
        ],
    )?;
    let theta1 = SubjectiveModel::new(
        "exact-truth",
        vec![vec![0.0]],
        vec![vec![gaussian(0.0, 1.0)?, gaussian(0.0, 1.0)?]],
    )?;
    let theta2 = SubjectiveModel::new(
        "high-mean",
        vec![vec![2.0]],
        vec![vec![gaussian(2.0, 1.0)?, gaussian(2.0, 1.0)?]],
    )?;
    let alpha = 2.0;
    let prior = vec![0.5 / alpha, 1.0 - 0.5 / alpha];
    let expected = vec![
        tagged(
            "fails-against-the-exact-truth-alone",
            Provenance::Paper,
            Check::Simulate(SimCheck {
                n_paths: 2000,
                horizon: 400,
                seed: 5,
                dogmatic: false,
                competing_subset: Some(vec![0]),
                initial_prior_override: None,
                assert: SimAssert::PersistFrequencyAtMost { max: 0.0 },
            }),
        ),
        tagged(
            "persists-against-the-pair",
            Provenance::Paper,
            Check::Simulate(SimCheck {
                n_paths: 4000,
                horizon: 400,
                seed: 5,
                dogmatic: false,
                competing_subset: None,
                initial_prior_override: None,
                assert: SimAssert::PersistWilsonLbPositive,
            }),
        ),
    ];
    Ok(Scenario {
        name: "appendix_c2".into(),
        description: "persists against the pair of competitors but not against the truth alone"
            .into(),
        problem,
        initial_model: theta,
        initial_prior: prior,
        competing: vec![
            CompetingSpec { model: theta1, prior: vec![1.0] },
            CompetingSpec { model: theta2, prior: vec![1.0] },
        ],
        families: vec![],
        alpha,
        assume_convergence: false,
        policy_mode: PolicyMode::Myopic,
        expected,
    })
}

/// Statistical invariant surface: a mildly misspecified worker model against
/// an exact-truth competitor (ratio martingale with finite variance, so the
/// sample standard error is meaningful) and a correctly specified
/// two-parameter competitor (maximal-inequality exceedance bound, a
/// frequency statistic that is robust regardless of ratio tails).
pub fn martingale_check() -> Result<Scenario, Error> {
    let base = overconfidence1()?;
    let problem = base.problem.clone();
    // Misspecified: return-to-effort off by two percent either way, never
    // exactly right.
    let mild = {
        let params = vec![vec![1.98], vec![2.02]];
        let kernel = params
            .iter()
            .map(|p| {
                (0..4)
                    .map(|a| gaussian((a as f64 + 1.0) * p[0], 1.0))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, Error>>()?;
        SubjectiveModel::new("mild-misperception", params, kernel)?
    };
    let truth_singleton = SubjectiveModel::new(
        "exact-truth",
        vec![vec![0.0]],
        vec![problem.true_dgp.clone()],
    )?;
    let correct2 = {
        let params: Vec<Vec<f64>> = (1..=2).map(|w| vec![w as f64]).collect();
        let kernel = params
            .iter()
            .map(|p| {
                (0..4)
                    .map(|a| gaussian((a as f64 + 1.0) * p[0], 1.0))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, Error>>()?;
        SubjectiveModel::new("correct-two-point", params, kernel)?
    };
    let expected = vec![
        tagged(
            "likelihood-ratio-martingale-mean-one",
            Provenance::Paper,
            Check::Simulate(SimCheck {
                n_paths: 5000,
                horizon: 200,
                seed: 404,
                dogmatic: true,
                competing_subset: None,
                initial_prior_override: None,
                assert: SimAssert::RatioMeanNearOne {
                    num: LikRef::Initial,
                    den: LikRef::Competing { index: 0 },
                    checkpoints: vec![50, 100, 200],
                    ses: 3.0,
                },
            }),
        ),
        tagged(
            "maximal-inequality-bound",
            Provenance::Paper,
            Check::Simulate(SimCheck {
                n_paths: 5000,
                horizon: 1000,
                seed: 405,
                dogmatic: true,
                competing_subset: None,
                initial_prior_override: None,
                assert: SimAssert::SupRatioWithinVilleBound {
                    num: LikRef::Competing { index: 1 },
                    den: LikRef::Truth,
                    threshold: 3.0,
                    ses: 3.0,
                },
            }),
        ),
    ];
    Ok(Scenario {
        name: "martingale_check".into(),
        description: "ratio-martingale and maximal-inequality diagnostics".into(),
        problem,
        initial_model: mild,
        initial_prior: vec![0.5, 0.5],
        competing: vec![
            CompetingSpec { model: truth_singleton, prior: vec![1.0] },
            CompetingSpec { model: correct2, prior: vec![0.5, 0.5] },
        ],
        families: vec![],
        alpha: 2.0,
        assume_convergence: false,
        policy_mode: PolicyMode::Myopic,
        expected,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssertionOutcome {
    pub id: String,
    pub provenance: Provenance,
    pub passed: bool,
    pub detail: String,
}

/// Execute every expected assertion of a scenario. Untagged assertions are
/// refused with an error.
pub fn run_scenario_assertions(scenario: &Scenario) -> Result<Vec<AssertionOutcome>, Error> {
    let mut outcomes = Vec::with_capacity(scenario.expected.len());
    let mut cached_records = None;
    let mut cached_global = None;
    for assertion in &scenario.expected {
        let provenance = assertion.provenance.ok_or_else(|| {
            Error::InvalidConfig(format!(
                "assertion {:?} has no provenance tag; refusing to run it",
                assertion.id
            ))
        })?;
        let (passed, detail) = evaluate_check(
            scenario,
            &assertion.check,
            &mut cached_records,
            &mut cached_global,
        )?;
        outcomes.push(AssertionOutcome { id: assertion.id.clone(), provenance, passed, detail });
    }
    Ok(outcomes)
}

type RecordsCache = Option<Vec<crate::equilibrium::EquilibriumRecord>>;

fn records<'a>(
    scenario: &Scenario,
    cache: &'a mut RecordsCache,
) -> Result<&'a Vec<crate::equilibrium::EquilibriumRecord>, Error> {
    if cache.is_none() {
        *cache = Some(enumerate_and_classify(&scenario.problem, &scenario.initial_model)?);
    }
    Ok(cache.as_ref().expect("just filled"))
}

fn evaluate_check(
    scenario: &Scenario,
    check: &Check,
    cached_records: &mut RecordsCache,
    cached_global: &mut Option<crate::robustness::Verdict>,
) -> Result<(bool, String), Error> {
    match check {
        Check::PureBneActions { expect } => {
            let pure = enumerate_pure_bne(&scenario.problem, &scenario.initial_model)?;
            let got: Vec<usize> = pure.iter().map(|r| r.support[0]).collect();
            Ok((got == *expect, format!("pure BN-E actions {got:?}, expected {expect:?}")))
        }
        Check::PureWitness { action, param } => {
            let pure = enumerate_pure_bne(&scenario.problem, &scenario.initial_model)?;
            match pure.iter().find(|r| r.support == vec![*action]) {
                Some(r) => {
                    let w = &r.supporting_beliefs[0];
                    let ok = w[*param] > 1.0 - 1e-6;
                    Ok((ok, format!("witness {w:?}, expected concentration on {param}")))
                }
                None => Ok((false, format!("no pure BN-E at action {action}"))),
            }
        }
        Check::RecordFlags { support, sce, quasi_strict, uniformly_quasi_strict } => {
            let recs = records(scenario, cached_records)?;
            match recs.iter().find(|r| &r.support == support) {
                Some(r) => {
                    let mut ok = true;
                    if let Some(e) = sce {
                        ok &= r.flags.sce == *e;
                    }
                    if let Some(e) = quasi_strict {
                        ok &= r.flags.quasi_strict == *e;
                    }
                    if let Some(e) = uniformly_quasi_strict {
                        ok &= r.flags.uniformly_quasi_strict == *e;
                    }
                    Ok((ok, format!("flags {:?}", r.flags)))
                }
                None => Ok((false, format!("no record with support {support:?}"))),
            }
        }
        Check::MixedComponents { expect } => {
            let mixed = enumerate_mixed_bne(&scenario.problem, &scenario.initial_model)?;
            Ok((mixed.len() == *expect, format!("{} mixed components, expected {expect}", mixed.len())))
        }
        Check::GlobalVerdict { expect, certified } => {
            if cached_global.is_none() {
                *cached_global = Some(global_verdict(
                    &scenario.problem,
                    &scenario.initial_model,
                    McBudget::default(),
                )?);
            }
            let v = cached_global.as_ref().expect("just filled");
            let mut ok = v.kind == *expect;
            if let Some(c) = certified {
                ok &= (v.certainty == crate::robustness::Certainty::Certified) == *c;
            }
            Ok((ok, format!("verdict {:?} ({:?}) via {:?}", v.kind, v.certainty, v.basis)))
        }
        Check::ConstrainedVerdict { family, expect } => {
            let fam = scenario.family(family)?;
            let v = constrained_verdict(
                &scenario.problem,
                fam,
                &scenario.initial_model,
                scenario.assume_convergence,
                McBudget::default(),
                None,
                &[],
            )?;
            Ok((v.kind == *expect, format!("verdict {:?} via {:?}", v.kind, v.basis)))
        }
        Check::MultiModelGate { d, global_ok, constrained_ok } => {
            let gate = crate::robustness::multi_model_gate(
                scenario.alpha,
                scenario.competing.len().max(1) as u64,
                *d,
            )?;
            let ok = gate.global_ok == *global_ok && gate.constrained_ok == *constrained_ok;
            Ok((ok, format!("gate {gate:?}")))
        }
        Check::OverfittingTrigger { expect, tol } => {
            // Recompute the trigger from the first competing model's peaked
            // distribution: min over non-loss outcomes of the peak mass over
            // the uniform mass.
            let m = match scenario.problem.outcome_space {
                crate::env::OutcomeSpace::Categorical(m) => m,
                _ => return Ok((false, "overfitting trigger needs categorical outcomes".into())),
            };
            let peak = scenario
                .competing
                .iter()
                .skip(1)
                .map(|c| {
                    c.model.kernel[0][1]
                        .log_density(&crate::env::Outcome::Atom(1))
                        .map(f64::exp)
                })
                .next()
                .transpose()?
                .unwrap_or(f64::NAN);
            let got = peak * m as f64;
            Ok((
                (got - expect).abs() <= *tol,
                format!("trigger {got} vs expected {expect} (tol {tol})"),
            ))
        }
        Check::Simulate(sim) => run_sim_check(scenario, sim),
    }
}

fn run_sim_check(scenario: &Scenario, sim: &SimCheck) -> Result<(bool, String), Error> {
    let mut config = scenario.switcher_config(
        sim.competing_subset.as_deref(),
        sim.initial_prior_override.as_deref(),
        sim.dogmatic,
        None,
    )?;
    match &sim.assert {
        SimAssert::RatioMeanNearOne { num, den, checkpoints, .. } => {
            config.ratio_checks.push(RatioCheck {
                label: "ratio-mean".into(),
                num: *num,
                den: *den,
                checkpoints: checkpoints.clone(),
                sup_threshold: None,
            });
        }
        SimAssert::SupRatioWithinVilleBound { num, den, threshold, .. } => {
            config.ratio_checks.push(RatioCheck {
                label: "sup-ratio".into(),
                num: *num,
                den: *den,
                checkpoints: vec![],
                sup_threshold: Some(*threshold),
            });
        }
        _ => {}
    }
    let out = monte_carlo(&config, sim.n_paths, sim.horizon, sim.seed, &RunOptions::default())?;
    let s = &out.summary;
    match &sim.assert {
        SimAssert::SwitchAtOneFrequencyAtLeast { min } => {
            let count = out
                .records
                .iter()
                .filter(|r| r.switch_times.first() == Some(&1))
                .count() as f64;
            let freq = count / s.n_paths as f64;
            Ok((freq >= *min, format!("switch-at-1 frequency {freq}, need >= {min}")))
        }
        SimAssert::AllPathsOneSwitchAwayFromInitial => {
            let ok = out
                .records
                .iter()
                .all(|r| r.n_switches == 1 && r.final_model_index != 0);
            Ok((ok, format!("switch histogram {:?}, final models {:?}", s.switch_histogram, s.final_model_frequencies)))
        }
        SimAssert::PersistFrequencyAtMost { max } => Ok((
            s.persist_frequency <= *max + 1e-12,
            format!("persist frequency {}, need <= {max}", s.persist_frequency),
        )),
        SimAssert::PersistFrequencyAtLeast { min } => Ok((
            s.persist_frequency >= *min - 1e-12,
            format!("persist frequency {}, need >= {min}", s.persist_frequency),
        )),
        SimAssert::PersistWilsonLbPositive => Ok((
            s.persist_wilson95.0 > 0.0,
            format!(
                "persist frequency {} (95% Wilson [{}, {}])",
                s.persist_frequency, s.persist_wilson95.0, s.persist_wilson95.1
            ),
        )),
        SimAssert::AbsorbedIntoFrequencyAtLeast { actions, min } => {
            let freq = s
                .absorbed_frequencies
                .iter()
                .find(|(set, _)| set == actions)
                .map(|(_, f)| *f)
                .unwrap_or(0.0);
            Ok((freq >= *min, format!("absorbed-into {actions:?} frequency {freq}, need >= {min}")))
        }
        SimAssert::AbsorbedIntoFrequencyAtMost { actions, max } => {
            let freq = s
                .absorbed_frequencies
                .iter()
                .find(|(set, _)| set == actions)
                .map(|(_, f)| *f)
                .unwrap_or(0.0);
            Ok((freq <= *max, format!("absorbed-into {actions:?} frequency {freq}, need <= {max}")))
        }
        SimAssert::RatioMeanNearOne { ses, .. } => {
            let report = &s.ratio_reports[s.ratio_reports.len() - 1];
            let mut ok = true;
            let mut detail = String::new();
            for ((t, mean), se) in report
                .checkpoints
                .iter()
                .zip(&report.means)
                .zip(&report.standard_errors)
            {
                let within = (mean - 1.0).abs() <= ses * se;
                ok &= within;
                detail.push_str(&format!("t={t}: mean {mean:.6} (se {se:.6}); "));
            }
            Ok((ok, detail))
        }
        SimAssert::SupRatioWithinVilleBound { threshold, ses, .. } => {
            let report = &s.ratio_reports[s.ratio_reports.len() - 1];
            let bound = 1.0 / threshold + ses * report.sup_exceed_se;
            Ok((
                report.sup_exceed_frequency <= bound,
                format!(
                    "sup-exceed frequency {} vs bound {bound} (1/{threshold} + {ses} se)",
                    report.sup_exceed_frequency
                ),
            ))
        }
    }
}
