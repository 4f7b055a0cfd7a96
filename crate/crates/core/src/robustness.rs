//! Verdict engine: composes equilibrium classifications into global and
//! constrained robustness conclusions, and builds the adversarial competing
//! models used by falsification runs.

use serde::{Deserialize, Serialize};

use crate::env::DecisionProblem;
use crate::equilibrium::{
    check_local_dominance, check_locally_kl_minimizing, enumerate_and_classify,
    estimate_p_absorbing, EquilibriumRecord,
};
use crate::model::{QFamily, SubjectiveModel};
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictKind {
    GloballyRobust,
    NotGloballyRobust,
    ConstrainedLocallyRobust,
    NotConstrainedLocallyRobust,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Certainty {
    Certified,
    Empirical,
}

/// Monte Carlo budget for the p-absorption estimator.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct McBudget {
    pub n_paths: u64,
    pub horizon: u64,
    pub seed: u64,
    /// Belief-neighborhood radius for the absorption event.
    pub eps: f64,
}

impl Default for McBudget {
    fn default() -> Self {
        McBudget { n_paths: 400, horizon: 1000, seed: 7, eps: 0.05 }
    }
}

/// An adversarial competing model together with suggested full-support
/// priors for a sweep of adversary mass values.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Adversary {
    pub model: SubjectiveModel,
    /// (adversary mass eps, full prior vector over the adversary's
    /// parameters) pairs, reported for the default sensitivity sweep.
    pub priors: Vec<(f64, Vec<f64>)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub certainty: Certainty,
    /// The decision rules that produced the verdict; never empty.
    pub basis: Vec<String>,
    pub notes: Vec<String>,
    pub equilibria: Vec<EquilibriumRecord>,
    pub adversary: Option<Adversary>,
}

/// Adversary prior masses reported by default.
pub const ADVERSARY_EPS_SWEEP: [f64; 2] = [1e-2, 1e-4];

fn fresh_point(model: &SubjectiveModel) -> Vec<f64> {
    let dim = model.parameters[0].len();
    (0..dim)
        .map(|j| {
            model.parameters.iter().map(|p| p[j]).fold(f64::NEG_INFINITY, f64::max) + 1.0
        })
        .collect()
}

/// The truth-augmented adversary over a chosen parameter subset: those
/// parameters keep the model's kernels, one fresh point carries the true
/// DGP exactly.
fn truth_augmented_adversary(
    problem: &DecisionProblem,
    model: &SubjectiveModel,
    shared: &[usize],
    shared_weights: &[f64],
) -> Result<Adversary, Error> {
    let mut parameters: Vec<Vec<f64>> =
        shared.iter().map(|&w| model.parameters[w].clone()).collect();
    let mut kernel: Vec<_> = shared.iter().map(|&w| model.kernel[w].clone()).collect();
    parameters.push(fresh_point(model));
    kernel.push(problem.true_dgp.clone());
    let adversary = SubjectiveModel::new(format!("{}+truth", model.id), parameters, kernel)?;
    let total: f64 = shared_weights.iter().sum();
    let priors = ADVERSARY_EPS_SWEEP
        .iter()
        .map(|&eps| {
            let mut prior: Vec<f64> = if total > 0.0 {
                shared_weights.iter().map(|w| (1.0 - eps) * w / total).collect()
            } else {
                vec![(1.0 - eps) / shared.len().max(1) as f64; shared.len()]
            };
            prior.push(eps);
            (eps, prior)
        })
        .collect();
    Ok(Adversary { model: adversary, priors })
}

/// Global robustness decision tree.
///
/// 1. correctly specified -> robust, certified;
/// 2. no self-confirming equilibrium -> not robust, certified;
/// 3. a uniformly quasi-strict SCE -> robust, certified;
/// 4. an SCE with a positive Monte Carlo absorption lower bound -> robust,
///    empirical;
/// 5. otherwise inconclusive.
pub fn global_verdict(
    problem: &DecisionProblem,
    model: &SubjectiveModel,
    budget: McBudget,
) -> Result<Verdict, Error> {
    let records = enumerate_and_classify(problem, model)?;
    if model.correctly_specified(problem) {
        return Ok(Verdict {
            kind: VerdictKind::GloballyRobust,
            certainty: Certainty::Certified,
            basis: vec!["correctly-specified-model".into()],
            notes: vec![],
            equilibria: records,
            adversary: None,
        });
    }
    let has_sce = records.iter().any(|r| r.flags.sce);
    if !has_sce {
        // The convex-mixture neighbor model is the universal falsifier when
        // no self-confirming equilibrium exists.
        let mixture = crate::model::convex_mix_model(model, problem, 0.5)?;
        let n = model.n_params() as f64;
        let adversary = Adversary {
            model: mixture,
            priors: vec![(0.5, vec![1.0 / n; model.n_params()])],
        };
        return Ok(Verdict {
            kind: VerdictKind::NotGloballyRobust,
            certainty: Certainty::Certified,
            basis: vec!["no-self-confirming-equilibrium".into()],
            notes: vec![],
            equilibria: records,
            adversary: Some(adversary),
        });
    }
    if records.iter().any(|r| r.flags.uniformly_quasi_strict_sce) {
        return Ok(Verdict {
            kind: VerdictKind::GloballyRobust,
            certainty: Certainty::Certified,
            basis: vec!["uniformly-quasi-strict-sce-is-absorbing".into()],
            notes: vec![],
            equilibria: records,
            adversary: None,
        });
    }
    // Monte Carlo route: estimate absorption for each SCE.
    let mut estimated = Vec::with_capacity(records.len());
    let mut positive = false;
    for r in &records {
        if r.flags.sce {
            let r2 = estimate_p_absorbing(
                problem,
                model,
                r,
                budget.eps,
                budget.n_paths,
                budget.horizon,
                budget.seed,
            )?;
            if let Some(pa) = &r2.p_absorbing {
                if pa.certified || pa.wilson95.map(|(lo, _)| lo > 0.0).unwrap_or(false) {
                    positive = true;
                }
            }
            estimated.push(r2);
        } else {
            estimated.push(r.clone());
        }
    }
    if positive {
        return Ok(Verdict {
            kind: VerdictKind::GloballyRobust,
            certainty: Certainty::Empirical,
            basis: vec!["positive-p-absorption-estimate-for-sce".into()],
            notes: vec![
                "finite-horizon Monte Carlo evidence only; not a certificate".into(),
            ],
            equilibria: estimated,
            adversary: None,
        });
    }
    Ok(Verdict {
        kind: VerdictKind::Inconclusive,
        certainty: Certainty::Empirical,
        basis: vec!["sce-exists-but-absorption-unresolved".into()],
        notes: vec![],
        equilibria: estimated,
        adversary: None,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PriorMassGate {
    pub passes: bool,
    pub mass: f64,
    pub bound: f64,
    /// Union of KL-minimizer indices over the absorbing SCEs.
    pub union: Vec<usize>,
    pub adversary: Adversary,
}

/// Concentration requirement on the own prior: persistence against every
/// competing model forces prior mass at least 1/alpha on the union of
/// KL-minimizer sets of absorbing self-confirming equilibria. The returned
/// adversary (shared parameters plus an exact-truth point at tiny mass) is
/// the falsifier when the gate fails.
pub fn prior_mass_gate(
    problem: &DecisionProblem,
    model: &SubjectiveModel,
    prior: &[f64],
    alpha: f64,
    records: &[EquilibriumRecord],
) -> Result<PriorMassGate, Error> {
    if !(alpha > 1.0) {
        return Err(Error::InvalidConfig(format!("alpha {alpha} must exceed 1")));
    }
    let mut union: Vec<usize> = records
        .iter()
        .filter(|r| {
            r.flags.sce
                && r.p_absorbing
                    .as_ref()
                    .map(|p| p.certified || p.wilson95.map(|(lo, _)| lo > 0.0).unwrap_or(false))
                    .unwrap_or(false)
        })
        .flat_map(|r| r.kl_minimizers.iter().copied())
        .collect();
    union.sort_unstable();
    union.dedup();
    let mass: f64 = union.iter().map(|&w| prior[w]).sum();
    let bound = 1.0 / alpha;
    let weights: Vec<f64> = union.iter().map(|&w| prior[w]).collect();
    let adversary = truth_augmented_adversary(problem, model, &union, &weights)?;
    Ok(PriorMassGate { passes: mass >= bound - 1e-12, mass, bound, union, adversary })
}

/// Constrained (within-family) robustness decision tree.
///
/// 1. a pure, p-absorbing Berk-Nash equilibrium at which the model is
///    locally dominant -> constrained locally robust;
/// 2. when the action frequency is assumed to converge (asserted by the
///    caller, or automatic for binary actions with a myopic agent) and no
///    equilibrium is locally KL-minimizing -> not constrained locally
///    robust, with a family-witness adversary;
/// 3. otherwise inconclusive.
pub fn constrained_verdict(
    problem: &DecisionProblem,
    family: &QFamily,
    model: &SubjectiveModel,
    assume_convergence: bool,
    budget: McBudget,
    eps: Option<f64>,
    d_candidates: &[f64],
) -> Result<Verdict, Error> {
    let records = enumerate_and_classify(problem, model)?;
    let mut notes = Vec::new();

    // Sufficient route: pure + absorbing + locally dominant.
    let mut checked = Vec::with_capacity(records.len());
    for r in &records {
        let mut r = r.clone();
        if r.strategy.is_pure().is_some() {
            r = estimate_p_absorbing(
                problem,
                model,
                &r,
                budget.eps,
                budget.n_paths,
                budget.horizon,
                budget.seed,
            )?;
            r = check_local_dominance(problem, family, model, &r, eps, d_candidates)?;
        }
        checked.push(r);
    }
    for r in &checked {
        let absorbing = r
            .p_absorbing
            .as_ref()
            .map(|p| p.certified || p.wilson95.map(|(lo, _)| lo > 0.0).unwrap_or(false))
            .unwrap_or(false);
        let dominant = r.local_dominance.as_ref().map(|d| d.passed).unwrap_or(false);
        if r.strategy.is_pure().is_some() && absorbing && dominant {
            let certified = r.p_absorbing.as_ref().map(|p| p.certified).unwrap_or(false);
            let d = r.local_dominance.as_ref().and_then(|c| c.d).unwrap_or(1.0);
            return Ok(Verdict {
                kind: VerdictKind::ConstrainedLocallyRobust,
                certainty: if certified { Certainty::Certified } else { Certainty::Empirical },
                basis: vec![format!("pure-p-absorbing-bne-locally-dominant(d={d})")],
                notes,
                equilibria: checked,
                adversary: None,
            });
        }
    }

    // Necessary route requires convergence of the action frequency.
    let binary_myopic = problem.n_actions() == 2 && problem.discount == 0.0;
    let convergence = assume_convergence || binary_myopic;
    if binary_myopic && !assume_convergence {
        notes.push("action-frequency convergence holds automatically: binary actions, myopic agent".into());
    }
    let mut kl_checked = Vec::with_capacity(checked.len());
    let mut all_fail = true;
    let mut witness_points: Vec<Vec<f64>> = Vec::new();
    for r in &checked {
        let r2 = check_locally_kl_minimizing(problem, family, model, r, eps)?;
        if let Some(c) = &r2.local_kl_minimizing {
            if c.passed {
                all_fail = false;
            } else {
                for w in &c.witnesses {
                    if !witness_points.contains(&w.better_neighbor) {
                        witness_points.push(w.better_neighbor.clone());
                    }
                }
            }
        }
        kl_checked.push(r2);
    }
    if convergence && all_fail && !kl_checked.is_empty() {
        // Family-witness adversary: the model's parameters plus the
        // strictly-better neighbors, with total mass eps spread evenly over
        // the witnesses. Witnesses colliding with an embedded model
        // parameter add nothing and are dropped.
        let embedded: Vec<Vec<f64>> = model.parameters.iter().map(|p| family.embed(p)).collect();
        witness_points.retain(|w| !embedded.contains(w));
        let extra: Vec<(Vec<f64>, Vec<crate::env::OutcomeDistribution>)> = witness_points
            .iter()
            .map(|point| {
                let dists = (0..problem.n_actions())
                    .map(|a| family.distribution(problem, a, point))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok((point.clone(), dists))
            })
            .collect::<Result<_, Error>>()?;
        // The witness coordinates live in family space; remap the model's
        // own parameters there so the union model is well-formed.
        let base = SubjectiveModel::new(model.id.clone(), embedded, model.kernel.clone())?;
        let adversary_model = crate::model::augment_model(&base, &extra)?;
        let n_base = model.n_params();
        let n_extra = extra.len().max(1);
        let priors = ADVERSARY_EPS_SWEEP
            .iter()
            .map(|&eps_mass| {
                let mut prior = vec![(1.0 - eps_mass) / n_base as f64; n_base];
                prior.extend(vec![eps_mass / n_extra as f64; extra.len()]);
                (eps_mass, prior)
            })
            .collect();
        return Ok(Verdict {
            kind: VerdictKind::NotConstrainedLocallyRobust,
            certainty: Certainty::Certified,
            basis: vec!["no-bne-is-locally-kl-minimizing".into()],
            notes,
            equilibria: kl_checked,
            adversary: Some(Adversary { model: adversary_model, priors }),
        });
    }
    if all_fail && !convergence {
        notes.push(
            "every equilibrium fails local KL-minimization, but action-frequency convergence was not assumed"
                .into(),
        );
    }
    Ok(Verdict {
        kind: VerdictKind::Inconclusive,
        certainty: Certainty::Empirical,
        basis: vec!["no-sufficient-or-necessary-route-applied".into()],
        notes,
        equilibria: kl_checked,
        adversary: None,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultiModelGate {
    pub alpha: f64,
    pub k: u64,
    pub d: Option<f64>,
    /// Global robustness characterization survives iff alpha > K.
    pub global_ok: bool,
    /// Constrained sufficiency survives iff alpha > K^(1/d).
    pub constrained_ok: Option<bool>,
}

/// Threshold adjustment for evaluating K competing models at once.
pub fn multi_model_gate(alpha: f64, k: u64, d: Option<f64>) -> Result<MultiModelGate, Error> {
    if k < 1 {
        return Err(Error::InvalidConfig("need at least one competing model".into()));
    }
    if !(alpha > 1.0) {
        return Err(Error::InvalidConfig(format!("alpha {alpha} must exceed 1")));
    }
    Ok(MultiModelGate {
        alpha,
        k,
        d,
        global_ok: alpha > k as f64,
        constrained_ok: d.map(|d| alpha > (k as f64).powf(1.0 / d)),
    })
}
