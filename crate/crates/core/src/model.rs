//! Subjective models, beliefs, Bayesian updating, likelihoods, KL machinery,
//! parameter-space metrics, and the competing-model constructors used by the
//! robustness engine.
//!
//! All likelihood accounting is done in log space with log-sum-exp; raw
//! probability products are never formed.

use serde::{Deserialize, Serialize};

use crate::env::{DecisionProblem, Outcome, OutcomeDistribution, OutcomeSpace};
use crate::numeric::{integrate, log_sum_exp};
use crate::Error;

/// Default tolerance for identifying KL minimizers.
pub const KL_MIN_TOL: f64 = 1e-9;

/// A subjective model: a finite ordered parameter set (points in R^k) and a
/// conditional outcome distribution per (parameter, action).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectiveModel {
    pub id: String,
    /// Parameter points; all of equal dimension, pairwise distinct.
    pub parameters: Vec<Vec<f64>>,
    /// kernel[param][action].
    pub kernel: Vec<Vec<OutcomeDistribution>>,
}

impl SubjectiveModel {
    pub fn new(
        id: impl Into<String>,
        parameters: Vec<Vec<f64>>,
        kernel: Vec<Vec<OutcomeDistribution>>,
    ) -> Result<Self, Error> {
        let id = id.into();
        if parameters.is_empty() {
            return Err(Error::InvalidModel(format!("{id}: empty parameter set")));
        }
        let dim = parameters[0].len();
        for (i, p) in parameters.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::InvalidModel(format!("{id}: parameter {i} has wrong dimension")));
            }
            for q in parameters.iter().skip(i + 1) {
                if p == q {
                    return Err(Error::InvalidModel(format!("{id}: duplicate parameter {p:?}")));
                }
            }
        }
        if kernel.len() != parameters.len() {
            return Err(Error::InvalidModel(format!("{id}: kernel must cover every parameter")));
        }
        let n_actions = kernel[0].len();
        let space = kernel[0][0].space();
        for row in &kernel {
            if row.len() != n_actions {
                return Err(Error::InvalidModel(format!("{id}: kernel must cover every action")));
            }
            for d in row {
                d.validate()?;
                if d.space() != space {
                    return Err(Error::InvalidModel(format!(
                        "{id}: kernel distributions on different outcome spaces"
                    )));
                }
            }
        }
        Ok(SubjectiveModel { id, parameters, kernel })
    }

    pub fn n_params(&self) -> usize {
        self.parameters.len()
    }

    pub fn distribution(&self, param: usize, action: usize) -> &OutcomeDistribution {
        &self.kernel[param][action]
    }

    /// True when some parameter reproduces the true DGP at every action.
    pub fn correctly_specified(&self, problem: &DecisionProblem) -> bool {
        (0..self.n_params()).any(|w| {
            (0..problem.n_actions())
                .all(|a| distributions_equal(&problem.true_dgp[a], self.distribution(w, a)))
        })
    }
}

/// A probability vector over one model's parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Belief {
    pub model: String,
    pub probs: Vec<f64>,
}

impl Belief {
    pub fn new(model: impl Into<String>, probs: Vec<f64>) -> Result<Self, Error> {
        let model = model.into();
        if probs.iter().any(|&p| p < 0.0 || !p.is_finite()) {
            return Err(Error::InvalidModel(format!("{model}: negative belief entry")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > crate::env::PROB_SUM_TOL {
            return Err(Error::InvalidModel(format!("{model}: belief sums to {sum}")));
        }
        Ok(Belief { model, probs })
    }

    pub fn uniform(model: &SubjectiveModel) -> Self {
        let n = model.n_params();
        Belief { model: model.id.clone(), probs: vec![1.0 / n as f64; n] }
    }

    /// Priors must have full support.
    pub fn validate_prior(&self) -> Result<(), Error> {
        if self.probs.iter().any(|&p| !(p > 0.0)) {
            return Err(Error::InvalidModel(format!("{}: prior lacks full support", self.model)));
        }
        Ok(())
    }
}

/// One Bayes step: posterior proportional to prior times the kernel density,
/// computed in log space. Entries are floored at 1e-300 before renormalizing
/// so full support survives floating-point underflow.
pub fn bayes_update(
    model: &SubjectiveModel,
    belief: &Belief,
    action: usize,
    y: &Outcome,
) -> Result<Belief, Error> {
    if belief.probs.len() != model.n_params() {
        return Err(Error::DimensionMismatch("belief/model size".into()));
    }
    let mut log_post = Vec::with_capacity(model.n_params());
    for (w, p) in belief.probs.iter().enumerate() {
        log_post.push(p.ln() + model.distribution(w, action).log_density(y)?);
    }
    Ok(Belief { model: belief.model.clone(), probs: normalize_log_weights(&log_post) })
}

/// Normalized probabilities from unnormalized log weights, floored at 1e-300.
pub fn normalize_log_weights(log_w: &[f64]) -> Vec<f64> {
    let total = log_sum_exp(log_w);
    let mut probs: Vec<f64> = log_w.iter().map(|l| (l - total).exp().max(1e-300)).collect();
    let sum: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= sum;
    }
    probs
}

/// Running per-parameter log weights ln pi_0(w) + sum_t ln q(y_t | a_t, w).
/// Carries both the marginal likelihood and the posterior of one model.
#[derive(Debug, Clone)]
pub struct LikelihoodState {
    pub log_terms: Vec<f64>,
}

impl LikelihoodState {
    pub fn new(prior: &Belief) -> Result<Self, Error> {
        prior.validate_prior()?;
        Ok(LikelihoodState { log_terms: prior.probs.iter().map(|p| p.ln()).collect() })
    }

    pub fn update(&mut self, model: &SubjectiveModel, action: usize, y: &Outcome) -> Result<(), Error> {
        for (w, term) in self.log_terms.iter_mut().enumerate() {
            *term += model.distribution(w, action).log_density(y)?;
        }
        Ok(())
    }

    /// ln l_t = ln sum_w pi_0(w) prod_tau q(y|a,w).
    pub fn log_likelihood(&self) -> f64 {
        log_sum_exp(&self.log_terms)
    }

    pub fn posterior(&self, model: &SubjectiveModel) -> Belief {
        Belief { model: model.id.clone(), probs: normalize_log_weights(&self.log_terms) }
    }
}

/// Prior-weighted log marginal likelihood of a history, direct form.
pub fn log_likelihood(
    model: &SubjectiveModel,
    prior: &Belief,
    history: &[(usize, Outcome)],
) -> Result<f64, Error> {
    let mut state = LikelihoodState::new(prior)?;
    for (a, y) in history {
        state.update(model, *a, y)?;
    }
    Ok(state.log_likelihood())
}

/// Same quantity accumulated through the one-step-ahead predictive factors
/// l_t = l_{t-1} * sum_w pi_{t-1}(w) q(y|a,w).
pub fn log_likelihood_recursive(
    model: &SubjectiveModel,
    prior: &Belief,
    history: &[(usize, Outcome)],
) -> Result<f64, Error> {
    prior.validate_prior()?;
    let mut belief = prior.clone();
    let mut log_l = 0.0;
    for (a, y) in history {
        let mut terms = Vec::with_capacity(model.n_params());
        for (w, p) in belief.probs.iter().enumerate() {
            terms.push(p.ln() + model.distribution(w, *a).log_density(y)?);
        }
        log_l += log_sum_exp(&terms);
        belief = bayes_update(model, &belief, *a, y)?;
    }
    Ok(log_l)
}

/// Structural distribution equality: same variant with parameters within
/// 1e-12, with a KL < 1e-10 fallback across variants on a shared space.
pub fn distributions_equal(p: &OutcomeDistribution, q: &OutcomeDistribution) -> bool {
    const TOL: f64 = 1e-12;
    let structural = match (p, q) {
        (
            OutcomeDistribution::Categorical { probs: a },
            OutcomeDistribution::Categorical { probs: b },
        ) => a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= TOL),
        (
            OutcomeDistribution::Gaussian { mean: m1, variance: v1 },
            OutcomeDistribution::Gaussian { mean: m2, variance: v2 },
        ) => (m1 - m2).abs() <= TOL && (v1 - v2).abs() <= TOL,
        (
            OutcomeDistribution::Product { components: a },
            OutcomeDistribution::Product { components: b },
        ) => a.len() == b.len() && a.iter().zip(b).all(|(x, y)| distributions_equal(x, y)),
        (
            OutcomeDistribution::Mixture { weights: wa, components: a },
            OutcomeDistribution::Mixture { weights: wb, components: b },
        ) => {
            wa.len() == wb.len()
                && wa.iter().zip(wb).all(|(x, y)| (x - y).abs() <= TOL)
                && a.iter().zip(b).all(|(x, y)| distributions_equal(x, y))
        }
        _ => false,
    };
    if structural {
        return true;
    }
    if p.space() != q.space() {
        return false;
    }
    matches!(kl_divergence(p, q), Ok(d) if d < 1e-10)
}

/// D_KL(p || q). Exact for categorical spaces and Gaussian pairs, sums over
/// independent product components, adaptive quadrature (1e-8 tolerance)
/// otherwise on scalar spaces, nested quadrature on 2-d spaces.
pub fn kl_divergence(p: &OutcomeDistribution, q: &OutcomeDistribution) -> Result<f64, Error> {
    if p.space() != q.space() {
        return Err(Error::DimensionMismatch("KL of distributions on different spaces".into()));
    }
    match p.space() {
        OutcomeSpace::Categorical(n) => {
            let mut total = 0.0;
            for i in 0..n {
                let atom = Outcome::Atom(i);
                let lp = p.log_density(&atom)?;
                let lq = q.log_density(&atom)?;
                total += lp.exp() * (lp - lq);
            }
            Ok(total.max(0.0))
        }
        OutcomeSpace::Real(1) => match (p, q) {
            (
                OutcomeDistribution::Gaussian { mean: m1, variance: v1 },
                OutcomeDistribution::Gaussian { mean: m2, variance: v2 },
            ) => Ok(0.5 * ((v2 / v1).ln() + (v1 + (m1 - m2) * (m1 - m2)) / v2 - 1.0)),
            _ => {
                let (lo_p, hi_p) = p.bracket()?;
                let (lo_q, hi_q) = q.bracket()?;
                let f = |y: f64| {
                    let out = Outcome::scalar(y);
                    let lp = p.log_density(&out).unwrap_or(f64::NEG_INFINITY);
                    let lq = q.log_density(&out).unwrap_or(f64::NEG_INFINITY);
                    if lp == f64::NEG_INFINITY {
                        0.0
                    } else {
                        lp.exp() * (lp - lq)
                    }
                };
                Ok(integrate(&f, lo_p.min(lo_q), hi_p.max(hi_q), 1e-8).max(0.0))
            }
        },
        OutcomeSpace::Real(dim) => match (p, q) {
            (
                OutcomeDistribution::Product { components: a },
                OutcomeDistribution::Product { components: b },
            ) => {
                let mut total = 0.0;
                for (x, y) in a.iter().zip(b) {
                    total += kl_divergence(x, y)?;
                }
                Ok(total)
            }
            _ if dim == 2 => {
                let (b0, b1) = component_brackets(p, q)?;
                let f_outer = |y0: f64| {
                    integrate(
                        &|y1: f64| {
                            let out = Outcome::Real(vec![y0, y1]);
                            let lp = p.log_density(&out).unwrap_or(f64::NEG_INFINITY);
                            let lq = q.log_density(&out).unwrap_or(f64::NEG_INFINITY);
                            if lp == f64::NEG_INFINITY {
                                0.0
                            } else {
                                lp.exp() * (lp - lq)
                            }
                        },
                        b1.0,
                        b1.1,
                        1e-9,
                    )
                };
                Ok(integrate(&f_outer, b0.0, b0.1, 1e-7).max(0.0))
            }
            _ => Err(Error::DimensionMismatch(format!("KL unsupported in dimension {dim}"))),
        },
    }
}

fn component_brackets(
    p: &OutcomeDistribution,
    q: &OutcomeDistribution,
) -> Result<((f64, f64), (f64, f64)), Error> {
    fn per_axis(d: &OutcomeDistribution) -> Result<Vec<(f64, f64)>, Error> {
        match d {
            OutcomeDistribution::Product { components } => {
                components.iter().map(|c| c.bracket()).collect()
            }
            OutcomeDistribution::Mixture { components, .. } => {
                let mut axes = per_axis(&components[0])?;
                for c in components.iter().skip(1) {
                    for (axis, b) in axes.iter_mut().zip(per_axis(c)?) {
                        axis.0 = axis.0.min(b.0);
                        axis.1 = axis.1.max(b.1);
                    }
                }
                Ok(axes)
            }
            _ => Err(Error::DimensionMismatch("expected a 2-d distribution".into())),
        }
    }
    let pa = per_axis(p)?;
    let qa = per_axis(q)?;
    Ok((
        (pa[0].0.min(qa[0].0), pa[0].1.max(qa[0].1)),
        (pa[1].0.min(qa[1].0), pa[1].1.max(qa[1].1)),
    ))
}

/// sigma-weighted KL divergence of parameter `param` from the true DGP.
pub fn weighted_kl(
    problem: &DecisionProblem,
    model: &SubjectiveModel,
    sigma: &[f64],
    param: usize,
) -> Result<f64, Error> {
    if sigma.len() != problem.n_actions() {
        return Err(Error::DimensionMismatch("strategy/action size".into()));
    }
    let mut total = 0.0;
    for (a, &w) in sigma.iter().enumerate() {
        if w > 0.0 {
            total += w * kl_divergence(&problem.true_dgp[a], model.distribution(param, a))?;
        }
    }
    Ok(total)
}

/// Per-(action, parameter) KL divergences from the true DGP; weighted KL is
/// a dot product against a strategy.
pub fn kl_table(problem: &DecisionProblem, model: &SubjectiveModel) -> Result<Vec<Vec<f64>>, Error> {
    let mut table = Vec::with_capacity(problem.n_actions());
    for a in 0..problem.n_actions() {
        let mut row = Vec::with_capacity(model.n_params());
        for w in 0..model.n_params() {
            row.push(kl_divergence(&problem.true_dgp[a], model.distribution(w, a))?);
        }
        table.push(row);
    }
    Ok(table)
}

/// All parameter indices within `tol` of the minimum sigma-weighted KL.
pub fn kl_minimizers(
    problem: &DecisionProblem,
    model: &SubjectiveModel,
    sigma: &[f64],
    tol: f64,
) -> Result<Vec<usize>, Error> {
    let values: Vec<f64> = (0..model.n_params())
        .map(|w| weighted_kl(problem, model, sigma, w))
        .collect::<Result<_, _>>()?;
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v <= min + tol)
        .map(|(i, _)| i)
        .collect())
}

/// Result of a d-th moment computation that may diverge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MomentValue {
    Finite(f64),
    Divergent,
}

impl MomentValue {
    pub fn finite(&self) -> Option<f64> {
        match self {
            MomentValue::Finite(v) => Some(*v),
            MomentValue::Divergent => None,
        }
    }
}

/// E under `truth` of (num/den)^d for outcome densities num and den.
/// Closed forms for categorical triples and Gaussian triples (with exact
/// divergence detection); independent products multiply componentwise;
/// scalar quadrature otherwise with an endpoint-decay divergence heuristic.
pub fn density_ratio_moment(
    truth: &OutcomeDistribution,
    num: &OutcomeDistribution,
    den: &OutcomeDistribution,
    d: f64,
) -> Result<MomentValue, Error> {
    if !(d > 0.0) {
        return Err(Error::InvalidConfig(format!("moment order d = {d} must be positive")));
    }
    if truth.space() != num.space() || truth.space() != den.space() {
        return Err(Error::DimensionMismatch("moment of distributions on different spaces".into()));
    }
    match (truth, num, den) {
        (
            OutcomeDistribution::Categorical { probs: t },
            OutcomeDistribution::Categorical { probs: n },
            OutcomeDistribution::Categorical { probs: q },
        ) => {
            let mut total = 0.0;
            for i in 0..t.len() {
                total += t[i] * (n[i] / q[i]).powf(d);
            }
            Ok(MomentValue::Finite(total))
        }
        (
            OutcomeDistribution::Gaussian { mean: m0, variance: v0 },
            OutcomeDistribution::Gaussian { mean: m1, variance: v1 },
            OutcomeDistribution::Gaussian { mean: m2, variance: v2 },
        ) => Ok(gaussian_ratio_moment(*m0, *v0, *m1, *v1, *m2, *v2, d)),
        (
            OutcomeDistribution::Product { components: t },
            OutcomeDistribution::Product { components: n },
            OutcomeDistribution::Product { components: q },
        ) if t.len() == n.len() && t.len() == q.len() => {
            let mut total = 1.0;
            for i in 0..t.len() {
                match density_ratio_moment(&t[i], &n[i], &q[i], d)? {
                    MomentValue::Finite(v) => total *= v,
                    MomentValue::Divergent => return Ok(MomentValue::Divergent),
                }
            }
            Ok(MomentValue::Finite(total))
        }
        _ if truth.space() == OutcomeSpace::Real(1) => {
            let (lo_t, hi_t) = truth.bracket()?;
            let (lo_n, hi_n) = num.bracket()?;
            let (lo_d, hi_d) = den.bracket()?;
            let lo = lo_t.min(lo_n).min(lo_d);
            let hi = hi_t.max(hi_n).max(hi_d);
            let f = |y: f64| {
                let out = Outcome::scalar(y);
                let lt = truth.log_density(&out).unwrap_or(f64::NEG_INFINITY);
                let ln = num.log_density(&out).unwrap_or(f64::NEG_INFINITY);
                let ld = den.log_density(&out).unwrap_or(f64::NEG_INFINITY);
                (lt + d * (ln - ld)).exp()
            };
            let value = integrate(&f, lo, hi, 1e-8);
            // A ratio moment whose integrand has not decayed at the bracket
            // ends is blowing up in the tails.
            let edge = f(lo).max(f(hi));
            if !value.is_finite() || edge > 1e-8 * value.max(1.0) {
                Ok(MomentValue::Divergent)
            } else {
                Ok(MomentValue::Finite(value))
            }
        }
        _ => Err(Error::DimensionMismatch("unsupported distribution triple for moments".into())),
    }
}

/// Closed-form E_{y~N(m0,v0)} (N(y;m1,v1)/N(y;m2,v2))^d with divergence check.
fn gaussian_ratio_moment(m0: f64, v0: f64, m1: f64, v1: f64, m2: f64, v2: f64, d: f64) -> MomentValue {
    let a = 0.5 * d * (1.0 / v2 - 1.0 / v1);
    let b = d * (m1 / v1 - m2 / v2);
    let c = d * (m2 * m2 / (2.0 * v2) - m1 * m1 / (2.0 * v1)) + 0.5 * d * (v2 / v1).ln();
    let p = 1.0 / (2.0 * v0) - a;
    if p <= 0.0 {
        return MomentValue::Divergent;
    }
    let s = m0 / v0 + b;
    let log_value = c - m0 * m0 / (2.0 * v0) + s * s / (4.0 * p) - (2.0 * v0 * p).ln() / 2.0;
    MomentValue::Finite(log_value.exp())
}

/// E under q*(.|a) of (q(.|a,w')/q(.|a,w))^d for two points of a q-family.
pub fn dominance_moment(
    problem: &DecisionProblem,
    family: &QFamily,
    action: usize,
    omega_num: &[f64],
    omega_den: &[f64],
    d: f64,
) -> Result<MomentValue, Error> {
    let num = family.distribution(problem, action, omega_num)?;
    let den = family.distribution(problem, action, omega_den)?;
    density_ratio_moment(&problem.true_dgp[action], &num, &den, d)
}

/// E under q*(.|a) of ln(q(.|a,w')/q(.|a,w)), computed as the KL difference
/// D(q* || q(w)) - D(q* || q(w')).
pub fn log_ratio_mean(
    problem: &DecisionProblem,
    family: &QFamily,
    action: usize,
    omega_num: &[f64],
    omega_den: &[f64],
) -> Result<f64, Error> {
    let num = family.distribution(problem, action, omega_num)?;
    let den = family.distribution(problem, action, omega_den)?;
    let truth = &problem.true_dgp[action];
    Ok(kl_divergence(truth, &den)? - kl_divergence(truth, &num)?)
}

/// Exact Levy-Prokhorov distance between categorical distributions on a
/// shared atom set under the discrete metric, by brute force over subsets.
/// Equal to the total variation distance; kept in the event form as a check.
pub fn prokhorov_categorical(
    p: &OutcomeDistribution,
    q: &OutcomeDistribution,
) -> Result<f64, Error> {
    let (pp, qq) = match (p, q) {
        (
            OutcomeDistribution::Categorical { probs: a },
            OutcomeDistribution::Categorical { probs: b },
        ) if a.len() == b.len() => (a, b),
        _ => return Err(Error::DimensionMismatch("prokhorov needs a shared atom set".into())),
    };
    let n = pp.len();
    if n > 16 {
        return Err(Error::InvalidConfig(format!("prokhorov brute force capped at 16 atoms, got {n}")));
    }
    let mut worst: f64 = 0.0;
    for mask in 1u32..(1 << n) {
        let mut gap = 0.0;
        for (i, (a, b)) in pp.iter().zip(qq).enumerate() {
            if mask & (1 << i) != 0 {
                gap += a - b;
            }
        }
        worst = worst.max(gap);
    }
    Ok(worst)
}

/// Symmetric Hausdorff distance between finite point sets under the
/// Euclidean norm.
pub fn hausdorff_params(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<f64, Error> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidConfig("hausdorff of an empty set".into()));
    }
    fn one_sided(from: &[Vec<f64>], to: &[Vec<f64>]) -> f64 {
        from.iter()
            .map(|p| {
                to.iter()
                    .map(|q| {
                        p.iter().zip(q).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    }
    Ok(one_sided(a, b).max(one_sided(b, a)))
}

/// Competing model with the same parameter set whose kernels are the convex
/// mixtures (1 - eps) q_theta + eps q*. The boundary values collapse to the
/// pure components.
pub fn convex_mix_model(
    model: &SubjectiveModel,
    problem: &DecisionProblem,
    eps: f64,
) -> Result<SubjectiveModel, Error> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::InvalidConfig(format!("mixture weight {eps} outside [0, 1]")));
    }
    let id = format!("{}+mix{eps}", model.id);
    if eps == 0.0 {
        return Ok(SubjectiveModel { id, ..model.clone() });
    }
    let mut kernel = Vec::with_capacity(model.n_params());
    for w in 0..model.n_params() {
        let mut row = Vec::with_capacity(problem.n_actions());
        for a in 0..problem.n_actions() {
            let dist = if eps == 1.0 {
                problem.true_dgp[a].clone()
            } else {
                OutcomeDistribution::mixture(
                    vec![1.0 - eps, eps],
                    vec![model.distribution(w, a).clone(), problem.true_dgp[a].clone()],
                )?
            };
            row.push(dist);
        }
        kernel.push(row);
    }
    SubjectiveModel::new(id, model.parameters.clone(), kernel)
}

/// Union model: the original parameters plus `extra` (point, per-action
/// distributions) entries. Duplicate points are rejected.
pub fn augment_model(
    model: &SubjectiveModel,
    extra: &[(Vec<f64>, Vec<OutcomeDistribution>)],
) -> Result<SubjectiveModel, Error> {
    let mut parameters = model.parameters.clone();
    let mut kernel = model.kernel.clone();
    for (point, dists) in extra {
        parameters.push(point.clone());
        kernel.push(dists.clone());
    }
    SubjectiveModel::new(format!("{}+aug", model.id), parameters, kernel)
}

/// Mean function g(b, w) for the investment kernel; strictly increasing and
/// continuous in both arguments (Product assumes a positive domain).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanFn {
    Sum,
    Product,
}

impl MeanFn {
    pub fn eval(&self, b: f64, w: f64) -> f64 {
        match self {
            MeanFn::Sum => b + w,
            MeanFn::Product => b * w,
        }
    }
}

/// Parametric kernels shared by a q-family; continuous in the parameter
/// point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QKernel {
    /// point (b, w): y ~ N((a_value + b) w, noise_var).
    TeamOutput { noise_var: f64 },
    /// point (b, w): (y, s) with y ~ N((a_value + b) w, y_var) and
    /// s ~ N(b^2, s_var).
    TeamOutputWithReview { y_var: f64, s_var: f64 },
    /// point (b, w_1, ..., w_N): risky action i in 0..N returns
    /// N(g(b, w_i), noise_var); the final action is safe with return
    /// N(safe_return, noise_var).
    Investment { g: MeanFn, safe_return: f64, noise_var: f64 },
}

impl QKernel {
    pub fn distribution(
        &self,
        problem: &DecisionProblem,
        action: usize,
        point: &[f64],
    ) -> Result<OutcomeDistribution, Error> {
        let a_val = problem
            .actions
            .get(action)
            .ok_or_else(|| Error::DimensionMismatch(format!("action {action}")))?
            .value;
        match self {
            QKernel::TeamOutput { noise_var } => {
                let (b, w) = two(point)?;
                OutcomeDistribution::gaussian((a_val + b) * w, *noise_var)
            }
            QKernel::TeamOutputWithReview { y_var, s_var } => {
                let (b, w) = two(point)?;
                OutcomeDistribution::product(vec![
                    OutcomeDistribution::gaussian((a_val + b) * w, *y_var)?,
                    OutcomeDistribution::gaussian(b * b, *s_var)?,
                ])
            }
            QKernel::Investment { g, safe_return, noise_var } => {
                let b = *point
                    .first()
                    .ok_or_else(|| Error::DimensionMismatch("empty family point".into()))?;
                let n_risky = problem.n_actions() - 1;
                if point.len() != n_risky + 1 {
                    return Err(Error::DimensionMismatch(format!(
                        "investment point needs 1 + {n_risky} coordinates"
                    )));
                }
                if action < n_risky {
                    OutcomeDistribution::gaussian(g.eval(b, point[1 + action]), *noise_var)
                } else {
                    OutcomeDistribution::gaussian(*safe_return, *noise_var)
                }
            }
        }
    }
}

fn two(point: &[f64]) -> Result<(f64, f64), Error> {
    if point.len() != 2 {
        return Err(Error::DimensionMismatch(format!("expected a 2-d point, got {point:?}")));
    }
    Ok((point[0], point[1]))
}

/// Membership predicate for grid generation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridPredicate {
    All,
    /// Keep points with x[0] >= x[1] (e.g. own ability at least the peer's).
    FirstAtLeastSecond,
}

impl GridPredicate {
    pub fn admits(&self, point: &[f64]) -> bool {
        match self {
            GridPredicate::All => true,
            GridPredicate::FirstAtLeastSecond => point.first().zip(point.get(1)).map_or(false, |(a, b)| a >= b),
        }
    }
}

/// How model parameters embed into the family's parameter space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParamEmbedding {
    Identity,
    /// Model parameters are (w, ...); family points are (c, w, ...) for a
    /// fixed first coordinate (a dogmatic self-perception, say).
    PrependConstant { value: f64 },
}

impl ParamEmbedding {
    pub fn embed(&self, param: &[f64]) -> Vec<f64> {
        match self {
            ParamEmbedding::Identity => param.to_vec(),
            ParamEmbedding::PrependConstant { value } => {
                let mut v = Vec::with_capacity(param.len() + 1);
                v.push(*value);
                v.extend_from_slice(param);
                v
            }
        }
    }
}

/// A q-family: a finite grid inside the family parameter space plus the
/// shared parametric kernel. `step` is the largest per-axis grid step, used
/// for the default neighborhood radius of two grid steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QFamily {
    pub grid: Vec<Vec<f64>>,
    pub kernel: QKernel,
    pub predicate: GridPredicate,
    pub embedding: ParamEmbedding,
    pub step: f64,
}

impl QFamily {
    /// Regular grid over a box, filtered by the predicate.
    pub fn from_box(
        axes: &[(f64, f64, f64)],
        kernel: QKernel,
        predicate: GridPredicate,
        embedding: ParamEmbedding,
    ) -> Result<Self, Error> {
        if axes.is_empty() {
            return Err(Error::InvalidConfig("empty grid box".into()));
        }
        let mut axis_values: Vec<Vec<f64>> = Vec::with_capacity(axes.len());
        let mut step: f64 = 0.0;
        for &(lo, hi, h) in axes {
            if !(h > 0.0) || hi < lo {
                return Err(Error::InvalidConfig(format!("bad grid axis ({lo}, {hi}, {h})")));
            }
            let n = ((hi - lo) / h).round() as usize;
            axis_values.push((0..=n).map(|i| lo + i as f64 * h).collect());
            step = step.max(h);
        }
        let mut grid = vec![vec![]];
        for axis in &axis_values {
            let mut next = Vec::with_capacity(grid.len() * axis.len());
            for point in &grid {
                for &v in axis {
                    let mut p = point.clone();
                    p.push(v);
                    next.push(p);
                }
            }
            grid = next;
        }
        grid.retain(|p| predicate.admits(p));
        if grid.is_empty() {
            return Err(Error::InvalidConfig("grid predicate admits no points".into()));
        }
        Ok(QFamily { grid, kernel, predicate, embedding, step })
    }

    pub fn distribution(
        &self,
        problem: &DecisionProblem,
        action: usize,
        point: &[f64],
    ) -> Result<OutcomeDistribution, Error> {
        self.kernel.distribution(problem, action, point)
    }

    pub fn embed(&self, param: &[f64]) -> Vec<f64> {
        self.embedding.embed(param)
    }

    /// Default neighborhood radius: two grid steps.
    pub fn default_radius(&self) -> f64 {
        2.0 * self.step
    }

    /// Grid points within Euclidean distance `radius` of any of `centers`.
    pub fn neighborhood(&self, centers: &[Vec<f64>], radius: f64) -> Vec<&Vec<f64>> {
        self.grid
            .iter()
            .filter(|p| {
                centers.iter().any(|c| {
                    c.len() == p.len()
                        && c.iter().zip(p.iter()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
                            <= radius + 1e-12
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{ActionSpec, UtilityFn};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gaussian(mean: f64, var: f64) -> OutcomeDistribution {
        OutcomeDistribution::gaussian(mean, var).unwrap()
    }

    /// Overconfidence setup: truth y = (a + 1) * 2 + noise over efforts
    /// {0,1,2,3}; model y = (a + 3) w + noise with w in {1,2,3}.
    fn overconfidence_problem() -> (DecisionProblem, SubjectiveModel) {
        let actions: Vec<ActionSpec> =
            (0..4).map(|a| ActionSpec::new(format!("{a}"), a as f64)).collect();
        let dgp: Vec<_> = (0..4).map(|a| gaussian((a as f64 + 1.0) * 2.0, 1.0)).collect();
        let costs: Vec<f64> = (0..4).map(|a| 0.5 * (a as f64).powi(2)).collect();
        let problem = DecisionProblem::new(
            actions,
            dgp,
            UtilityFn::LinearInOutcome { coord: 0, action_cost: costs },
            0.0,
        )
        .unwrap();
        let params: Vec<Vec<f64>> = (1..=3).map(|w| vec![w as f64]).collect();
        let kernel: Vec<Vec<_>> = (1..=3)
            .map(|w| (0..4).map(|a| gaussian((a as f64 + 3.0) * w as f64, 1.0)).collect())
            .collect();
        let model = SubjectiveModel::new("theta", params, kernel).unwrap();
        (problem, model)
    }

    #[test]
    fn bayes_identical_kernels_keep_uniform() {
        let actions = vec![ActionSpec::new("a", 0.0)];
        let dgp = vec![gaussian(0.0, 1.0)];
        let problem = DecisionProblem::new(
            actions,
            dgp,
            UtilityFn::LinearInOutcome { coord: 0, action_cost: vec![0.0] },
            0.0,
        )
        .unwrap();
        let _ = &problem;
        let model = SubjectiveModel::new(
            "m",
            vec![vec![0.0], vec![1.0]],
            vec![vec![gaussian(0.0, 1.0)], vec![gaussian(0.0, 1.0)]],
        )
        .unwrap();
        let prior = Belief::uniform(&model);
        let post = bayes_update(&model, &prior, 0, &Outcome::scalar(0.7)).unwrap();
        assert_abs_diff_eq!(post.probs[0], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn bayes_overconfidence_posterior() {
        // a = 1, y = 4: posterior over {1,2,3} proportional to
        // (phi(0), phi(4), phi(8)); direct three-term oracle.
        let (_, model) = overconfidence_problem();
        let prior = Belief::uniform(&model);
        let post = bayes_update(&model, &prior, 1, &Outcome::scalar(4.0)).unwrap();
        let phi = |z: f64| (-0.5 * z * z).exp();
        let weights = [phi(0.0), phi(4.0), phi(8.0)];
        let total: f64 = weights.iter().sum();
        for (p, w) in post.probs.iter().zip(&weights) {
            assert_abs_diff_eq!(*p, w / total, epsilon = 1e-12);
        }
        assert!((post.probs[0] - 0.99966).abs() < 1e-4);
    }

    #[test]
    fn bayes_near_degenerate_prior_is_stable() {
        let (_, model) = overconfidence_problem();
        let eps = 1e-6;
        let prior = Belief::new("theta", vec![1.0 - 2.0 * eps, eps, eps]).unwrap();
        // One observation at the matched parameter's mean (w = 1, a = 1).
        let post = bayes_update(&model, &prior, 1, &Outcome::scalar(4.0)).unwrap();
        for (a, b) in post.probs.iter().zip(&prior.probs) {
            assert!((a - b).abs() < 1e-3);
        }
    }

    #[test]
    fn bayes_preserves_positivity_under_underflow() {
        let (_, model) = overconfidence_problem();
        let prior = Belief::uniform(&model);
        // A wildly extreme observation underflows naive exponentials.
        let post = bayes_update(&model, &prior, 3, &Outcome::scalar(60.0)).unwrap();
        assert!(post.probs.iter().all(|&p| p > 0.0));
        assert_abs_diff_eq!(post.probs.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn log_likelihood_empty_history_is_zero() {
        let (_, model) = overconfidence_problem();
        let prior = Belief::uniform(&model);
        assert_eq!(log_likelihood(&model, &prior, &[]).unwrap(), 0.0);
    }

    #[test]
    fn log_likelihood_single_param_categorical() {
        let model = SubjectiveModel::new(
            "m",
            vec![vec![0.0]],
            vec![vec![OutcomeDistribution::categorical(vec![0.9, 0.1]).unwrap()]],
        )
        .unwrap();
        let prior = Belief::new("m", vec![1.0]).unwrap();
        let history = vec![(0, Outcome::Atom(0)), (0, Outcome::Atom(0))];
        assert_abs_diff_eq!(
            log_likelihood(&model, &prior, &history).unwrap(),
            2.0 * 0.9f64.ln(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn recursive_likelihood_matches_direct() {
        let (problem, model) = overconfidence_problem();
        let prior = Belief::new("theta", vec![0.5, 0.3, 0.2]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..20 {
            let mut history = Vec::new();
            for t in 0..200 {
                let a = t % 4;
                history.push((a, problem.true_dgp[a].sample(&mut rng)));
            }
            let direct = log_likelihood(&model, &prior, &history).unwrap();
            let recursive = log_likelihood_recursive(&model, &prior, &history).unwrap();
            assert!((direct - recursive).abs() / direct.abs().max(1.0) < 1e-8);
        }
    }

    #[test]
    fn sequential_updates_match_batch_posterior() {
        let (problem, model) = overconfidence_problem();
        let prior = Belief::new("theta", vec![0.2, 0.5, 0.3]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut history = Vec::new();
        for t in 0..300 {
            let a = (t * 7) % 4;
            history.push((a, problem.true_dgp[a].sample(&mut rng)));
        }
        let mut belief = prior.clone();
        let mut state = LikelihoodState::new(&prior).unwrap();
        for (a, y) in &history {
            belief = bayes_update(&model, &belief, *a, y).unwrap();
            state.update(&model, *a, y).unwrap();
        }
        let batch = state.posterior(&model);
        for (s, b) in belief.probs.iter().zip(&batch.probs) {
            let gap = (s.ln() - b.ln()).abs();
            assert!(gap < 1e-8, "sequential {s} vs batch {b}");
        }
    }

    #[test]
    fn kl_divergence_examples() {
        let g = gaussian(0.0, 1.0);
        assert_abs_diff_eq!(kl_divergence(&g, &g).unwrap(), 0.0, epsilon = 1e-15);
        let h = gaussian(1.0, 1.0);
        assert_abs_diff_eq!(kl_divergence(&g, &h).unwrap(), 0.5, epsilon = 1e-12);
        // Quadrature oracle for the same pair via the mixture fallback path.
        let g_as_mixture = OutcomeDistribution::mixture(
            vec![0.5, 0.5],
            vec![g.clone(), g.clone()],
        )
        .unwrap();
        assert_abs_diff_eq!(kl_divergence(&g_as_mixture, &h).unwrap(), 0.5, epsilon = 1e-7);
        // Overconfidence at a = 1: D(N(4,1) || N(4w,1)) = (4 - 4w)^2 / 2.
        let truth = gaussian(4.0, 1.0);
        for (w, expect) in [(1.0, 0.0), (2.0, 8.0), (3.0, 32.0)] {
            assert_abs_diff_eq!(
                kl_divergence(&truth, &gaussian(4.0 * w, 1.0)).unwrap(),
                expect,
                epsilon = 1e-12
            );
        }
        let c1 = OutcomeDistribution::categorical(vec![0.3, 0.7]).unwrap();
        let c2 = OutcomeDistribution::categorical(vec![0.6, 0.4]).unwrap();
        let direct = 0.3 * (0.3f64 / 0.6).ln() + 0.7 * (0.7f64 / 0.4).ln();
        assert_abs_diff_eq!(kl_divergence(&c1, &c2).unwrap(), direct, epsilon = 1e-14);
        assert!(kl_divergence(&c1, &g).is_err());
    }

    #[test]
    fn kl_nonnegative_zero_iff_equal() {
        let pairs = [
            (gaussian(0.3, 1.2), gaussian(0.3, 1.2), true),
            (gaussian(0.3, 1.2), gaussian(0.301, 1.2), false),
            (gaussian(0.0, 1.0), gaussian(0.0, 2.0), false),
        ];
        for (p, q, equal) in pairs {
            let d = kl_divergence(&p, &q).unwrap();
            assert!(d >= 0.0);
            assert_eq!(d < 1e-10, equal);
        }
    }

    #[test]
    fn weighted_kl_linearity_and_pure_reduction() {
        let (problem, model) = overconfidence_problem();
        let pure: Vec<f64> = vec![0.0, 1.0, 0.0, 0.0];
        let w = weighted_kl(&problem, &model, &pure, 1).unwrap();
        assert_abs_diff_eq!(
            w,
            kl_divergence(&problem.true_dgp[1], model.distribution(1, 1)).unwrap(),
            epsilon = 1e-12
        );
        // Overconfidence I at sigma = delta_{a=1}: (0, 8, 32).
        for (idx, expect) in [(0usize, 0.0), (1, 8.0), (2, 32.0)] {
            assert_abs_diff_eq!(
                weighted_kl(&problem, &model, &pure, idx).unwrap(),
                expect,
                epsilon = 1e-12
            );
        }
        let s1 = vec![1.0, 0.0, 0.0, 0.0];
        let s2 = vec![0.0, 0.0, 1.0, 0.0];
        let mix: Vec<f64> = s1.iter().zip(&s2).map(|(a, b)| 0.5 * a + 0.5 * b).collect();
        for idx in 0..3 {
            let lhs = weighted_kl(&problem, &model, &mix, idx).unwrap();
            let rhs = 0.5 * weighted_kl(&problem, &model, &s1, idx).unwrap()
                + 0.5 * weighted_kl(&problem, &model, &s2, idx).unwrap();
            assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-10);
        }
    }

    #[test]
    fn kl_minimizers_cases() {
        let (problem, model) = overconfidence_problem();
        let pure = vec![0.0, 1.0, 0.0, 0.0];
        assert_eq!(kl_minimizers(&problem, &model, &pure, KL_MIN_TOL).unwrap(), vec![0]);
        // Two identical parameters tie.
        let twin = SubjectiveModel::new(
            "twin",
            vec![vec![0.0], vec![1.0]],
            vec![
                vec![gaussian(0.0, 1.0), gaussian(0.0, 1.0), gaussian(0.0, 1.0), gaussian(0.0, 1.0)],
                vec![gaussian(0.0, 1.0), gaussian(0.0, 1.0), gaussian(0.0, 1.0), gaussian(0.0, 1.0)],
            ],
        )
        .unwrap();
        assert_eq!(kl_minimizers(&problem, &twin, &pure, KL_MIN_TOL).unwrap(), vec![0, 1]);
    }

    #[test]
    fn example1_kl_minimizer_is_omega_two() {
        // Truth N(1,1); model y ~ N(w - a, 1) with actions {1,3}, w in {1,2,3}.
        let actions = vec![ActionSpec::new("1", 1.0), ActionSpec::new("3", 3.0)];
        let dgp = vec![gaussian(1.0, 1.0), gaussian(1.0, 1.0)];
        let problem =
            DecisionProblem::new(actions, dgp, UtilityFn::AbsOutcome, 0.0).unwrap();
        let params: Vec<Vec<f64>> = (1..=3).map(|w| vec![w as f64]).collect();
        let kernel: Vec<Vec<_>> = (1..=3)
            .map(|w| {
                vec![gaussian(w as f64 - 1.0, 1.0), gaussian(w as f64 - 3.0, 1.0)]
            })
            .collect();
        let model = SubjectiveModel::new("ex1", params, kernel).unwrap();
        let pure = vec![1.0, 0.0];
        assert_eq!(kl_minimizers(&problem, &model, &pure, KL_MIN_TOL).unwrap(), vec![1]);
    }

    fn review_family() -> (DecisionProblem, QFamily) {
        // Overconfidence with reviews: truth y ~ N(3(a+1), 1), s ~ N(1, 2).
        let actions: Vec<ActionSpec> =
            (0..4).map(|a| ActionSpec::new(format!("{a}"), a as f64)).collect();
        let dgp: Vec<_> = (0..4)
            .map(|a| {
                OutcomeDistribution::product(vec![
                    gaussian(3.0 * (a as f64 + 1.0), 1.0),
                    gaussian(1.0, 2.0),
                ])
                .unwrap()
            })
            .collect();
        let costs: Vec<f64> = (0..4).map(|a| 0.5 * (a as f64).powi(2)).collect();
        let problem = DecisionProblem::new(
            actions,
            dgp,
            UtilityFn::LinearInOutcome { coord: 0, action_cost: costs },
            0.0,
        )
        .unwrap();
        let family = QFamily::from_box(
            &[(0.0, 4.0, 0.2), (0.0, 4.0, 0.2)],
            QKernel::TeamOutputWithReview { y_var: 1.0, s_var: 2.0 },
            GridPredicate::FirstAtLeastSecond,
            ParamEmbedding::PrependConstant { value: 2.0 },
        )
        .unwrap();
        (problem, family)
    }

    #[test]
    fn dominance_moment_identity_and_paper_values() {
        let (problem, family) = review_family();
        // Identical points give exactly one for any d.
        for d in [0.5, 1.0, 2.0] {
            let m = dominance_moment(&problem, &family, 2, &[2.0, 2.0], &[2.0, 2.0], d).unwrap();
            assert_eq!(m, MomentValue::Finite(1.0));
        }
        // d = 1 moment vs the displayed closed form exp((2+b)w - 1.5 b^2 - 2)
        // at the equilibrium action a = 2.
        for (b, w) in [(2.0, 2.0), (3.0, 1.0), (2.5, 0.5), (4.0, 4.0)] {
            let m = dominance_moment(&problem, &family, 2, &[b, w], &[2.0, 2.0], 1.0)
                .unwrap()
                .finite()
                .unwrap();
            let expect = ((2.0 + b) * w - 1.5 * b * b - 2.0).exp();
            assert!((m - expect).abs() <= 1e-9 * expect.max(1.0), "({b},{w}): {m} vs {expect}");
        }
        let at_truthy = dominance_moment(&problem, &family, 2, &[3.0, 1.0], &[2.0, 2.0], 1.0)
            .unwrap()
            .finite()
            .unwrap();
        assert_abs_diff_eq!(at_truthy.ln(), -10.5, epsilon = 1e-9);
    }

    #[test]
    fn dominance_moment_monte_carlo_oracle() {
        // 10^6 draws at (b, w) = (3, 1) against (2, 2). The ratio is heavy
        // tailed, so the tolerance uses the exact standard error from the
        // closed-form second moment rather than the (downward-biased)
        // sample estimate.
        let (problem, family) = review_family();
        let num = family.distribution(&problem, 2, &[3.0, 1.0]).unwrap();
        let den = family.distribution(&problem, 2, &[2.0, 2.0]).unwrap();
        let truth = &problem.true_dgp[2];
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 1_000_000usize;
        let mut sum = 0.0;
        for _ in 0..n {
            let y = truth.sample(&mut rng);
            sum += (num.log_density(&y).unwrap() - den.log_density(&y).unwrap()).exp();
        }
        let mean = sum / n as f64;
        let closed = (-10.5f64).exp();
        let second = density_ratio_moment(truth, &num, &den, 2.0).unwrap().finite().unwrap();
        let se = ((second - closed * closed) / n as f64).sqrt();
        assert!((mean - closed).abs() <= 3.0 * se, "mc {mean} vs closed {closed} (se {se})");

        // A tame nearby pair where the sample standard error is trustworthy.
        let num2 = family.distribution(&problem, 2, &[2.2, 1.8]).unwrap();
        let mut xs = Vec::with_capacity(100_000);
        for _ in 0..100_000 {
            let y = truth.sample(&mut rng);
            xs.push((num2.log_density(&y).unwrap() - den.log_density(&y).unwrap()).exp());
        }
        let (mean2, se2) = crate::numeric::mean_se(&xs);
        let closed2 = density_ratio_moment(truth, &num2, &den, 1.0).unwrap().finite().unwrap();
        assert!((mean2 - closed2).abs() <= 3.0 * se2, "mc {mean2} vs closed {closed2} (se {se2})");
    }

    #[test]
    fn gaussian_moment_divergence_flagged() {
        // Large d with a wider numerator diverges; flagged, not thrown.
        let m = density_ratio_moment(&gaussian(0.0, 1.0), &gaussian(0.0, 4.0), &gaussian(0.0, 1.0), 3.0)
            .unwrap();
        assert_eq!(m, MomentValue::Divergent);
    }

    #[test]
    fn dominance_implies_nonpositive_log_ratio() {
        // Jensen direction on the constrained grid.
        let (problem, family) = review_family();
        for point in &family.grid {
            let m = dominance_moment(&problem, &family, 2, point, &[2.0, 2.0], 1.0).unwrap();
            if let MomentValue::Finite(v) = m {
                if v <= 1.0 + 1e-9 {
                    let lr = log_ratio_mean(&problem, &family, 2, point, &[2.0, 2.0]).unwrap();
                    assert!(lr <= 1e-9, "moment {v} but log ratio {lr} at {point:?}");
                }
            }
        }
    }

    #[test]
    fn log_ratio_mean_identity() {
        let (problem, family) = review_family();
        assert_abs_diff_eq!(
            log_ratio_mean(&problem, &family, 1, &[2.0, 2.0], &[2.0, 2.0]).unwrap(),
            0.0,
            epsilon = 1e-12
        );
        // Sign equals the sign of the KL improvement.
        let lr = log_ratio_mean(&problem, &family, 1, &[2.0, 3.0], &[2.0, 2.0]).unwrap();
        let truth = &problem.true_dgp[1];
        let better = kl_divergence(truth, &family.distribution(&problem, 1, &[2.0, 2.0]).unwrap())
            .unwrap()
            - kl_divergence(truth, &family.distribution(&problem, 1, &[2.0, 3.0]).unwrap())
                .unwrap();
        assert_abs_diff_eq!(lr, better, epsilon = 1e-10);
    }

    #[test]
    fn prokhorov_examples() {
        let p = OutcomeDistribution::categorical(vec![0.7, 0.3]).unwrap();
        let q = OutcomeDistribution::categorical(vec![0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(prokhorov_categorical(&p, &p).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(prokhorov_categorical(&p, &q).unwrap(), 0.2, epsilon = 1e-12);
        // Disjoint masses at distance one under the discrete metric; built
        // from near-degenerate vectors since supports must be full.
        let a = OutcomeDistribution::categorical(vec![1.0 - 1e-13, 1e-13]).unwrap();
        let b = OutcomeDistribution::categorical(vec![1e-13, 1.0 - 1e-13]).unwrap();
        assert!((prokhorov_categorical(&a, &b).unwrap() - 1.0).abs() < 1e-10);
        let big = OutcomeDistribution::categorical(vec![1.0 / 20.0; 20]).unwrap();
        assert!(prokhorov_categorical(&big, &big).is_err());
    }

    #[test]
    fn hausdorff_examples() {
        let a = vec![vec![0.0]];
        let b = vec![vec![1.0]];
        assert_abs_diff_eq!(hausdorff_params(&a, &a).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(hausdorff_params(&a, &b).unwrap(), 1.0, epsilon = 1e-15);
        let c = vec![vec![0.0], vec![2.0]];
        assert_abs_diff_eq!(hausdorff_params(&c, &b).unwrap(), 1.0, epsilon = 1e-15);
        assert!(hausdorff_params(&[], &b).is_err());
    }

    #[test]
    fn convex_mix_boundary_and_matched_means() {
        let (problem, model) = overconfidence_problem();
        let full = convex_mix_model(&model, &problem, 1.0).unwrap();
        for w in 0..model.n_params() {
            for a in 0..4 {
                assert!(distributions_equal(full.distribution(w, a), &problem.true_dgp[a]));
            }
        }
        // eps = 0.5 at (a=1, w=1): matched means collapse to phi(0) at y = 4.
        let half = convex_mix_model(&model, &problem, 0.5).unwrap();
        let ld = half.distribution(0, 1).log_density(&Outcome::scalar(4.0)).unwrap();
        assert_abs_diff_eq!(ld, -0.5 * crate::numeric::LN_2PI, epsilon = 1e-12);
    }

    #[test]
    fn convex_mix_likelihood_ratio_bounds() {
        // Per-period mixture kernels obey the pointwise sandwich
        // log l^{theta_c} >= max(log l^theta + t ln(1-eps), log l* + t ln eps)
        // on every history, while the exact ratio identity
        // l^{theta_c}/l^theta = (1 - eps) + eps l*/l^theta holds for the
        // truth-augmented model with prior mass eps on the added point.
        let (problem, model) = overconfidence_problem();
        let eps = 0.3;
        let mixed = convex_mix_model(&model, &problem, eps).unwrap();
        let augmented =
            augment_model(&model, &[(vec![-1.0], problem.true_dgp.clone())]).unwrap();
        let prior = Belief::new("theta", vec![0.5, 0.25, 0.25]).unwrap();
        let aug_prior = Belief::new(
            augmented.id.clone(),
            vec![0.5 * (1.0 - eps), 0.25 * (1.0 - eps), 0.25 * (1.0 - eps), eps],
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..10 {
            let mut history = Vec::new();
            let mut log_star = 0.0;
            for t in 0..60 {
                let a = (t * 3) % 4;
                let y = problem.true_dgp[a].sample(&mut rng);
                log_star += problem.true_dgp[a].log_density(&y).unwrap();
                history.push((a, y));
            }
            let log_theta = log_likelihood(&model, &prior, &history).unwrap();
            let rhs = (1.0 - eps) + eps * (log_star - log_theta).exp();

            let t = history.len() as f64;
            let prior_c = Belief::new(mixed.id.clone(), prior.probs.clone()).unwrap();
            let log_mixed = log_likelihood(&mixed, &prior_c, &history).unwrap();
            assert!(log_mixed >= log_theta + t * (1.0 - eps).ln() - 1e-9);
            assert!(log_mixed >= log_star + t * eps.ln() - 1e-9);

            let log_aug = log_likelihood(&augmented, &aug_prior, &history).unwrap();
            let aug_ratio = (log_aug - log_theta).exp();
            assert!((aug_ratio - rhs).abs() < 1e-10 * rhs.max(1.0), "{aug_ratio} vs {rhs}");
        }
    }

    #[test]
    fn augment_identity_duplicates_and_likelihood_bound() {
        let (problem, model) = overconfidence_problem();
        let same = augment_model(&model, &[]).unwrap();
        assert_eq!(same.parameters, model.parameters);
        let dup = augment_model(
            &model,
            &[(vec![1.0], model.kernel[0].clone())],
        );
        assert!(dup.is_err());
        // Theorem-2-style adversary: add the true DGP as a new point.
        let truth_row: Vec<_> = problem.true_dgp.clone();
        let adversary = augment_model(&model, &[(vec![99.0], truth_row)]).unwrap();
        assert!(adversary.correctly_specified(&problem));
        assert!(!model.correctly_specified(&problem));
        // Augmented likelihood dominates the shared-mass-weighted original.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let eps = 1e-4;
        let prior = Belief::new("theta", vec![0.4, 0.3, 0.3]).unwrap();
        let aug_prior = Belief::new(
            adversary.id.clone(),
            vec![0.4 * (1.0 - eps), 0.3 * (1.0 - eps), 0.3 * (1.0 - eps), eps],
        )
        .unwrap();
        for _ in 0..10 {
            let mut history = Vec::new();
            for t in 0..40 {
                let a = t % 4;
                history.push((a, problem.true_dgp[a].sample(&mut rng)));
            }
            let base = log_likelihood(&model, &prior, &history).unwrap();
            let aug = log_likelihood(&adversary, &aug_prior, &history).unwrap();
            assert!(aug >= (1.0f64 - eps).ln() + base - 1e-10);
        }
    }

    #[test]
    fn qfamily_grid_respects_predicate() {
        let fam = QFamily::from_box(
            &[(0.0, 1.0, 0.5), (0.0, 1.0, 0.5)],
            QKernel::TeamOutput { noise_var: 1.0 },
            GridPredicate::FirstAtLeastSecond,
            ParamEmbedding::Identity,
        )
        .unwrap();
        assert!(fam.grid.iter().all(|p| p[0] >= p[1]));
        assert_eq!(fam.grid.len(), 6);
        assert_abs_diff_eq!(fam.default_radius(), 1.0, epsilon = 1e-15);
        let near = fam.neighborhood(&[vec![0.5, 0.5]], 0.5);
        assert_eq!(near.len(), 3); // (0.5,0), (0.5,0.5), (1,0.5)
    }
}
