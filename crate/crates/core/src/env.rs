//! Objective environment: actions, outcome spaces, the true data-generating
//! process, utilities, and sampling.
//!
//! Outcomes are either an atom index into a finite set or a fixed-length real
//! vector. The base measure is implicit in the space: counting measure for
//! atoms, Lebesgue for real vectors.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::numeric::{self, folded_normal_mean, integrate, log_sum_exp, normal_log_pdf};
use crate::Error;

/// Tolerance for probability vectors summing to one.
pub const PROB_SUM_TOL: f64 = 1e-12;

/// A realized outcome: an atom of a finite space or a real vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Outcome {
    Atom(usize),
    Real(Vec<f64>),
}

impl Outcome {
    pub fn scalar(y: f64) -> Self {
        Outcome::Real(vec![y])
    }
}

/// Descriptor of an outcome space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutcomeSpace {
    /// Finite set of `n` atoms under counting measure.
    Categorical(usize),
    /// Real vectors of fixed dimension under Lebesgue measure.
    Real(usize),
}

/// A full-support outcome distribution on one of the supported spaces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OutcomeDistribution {
    Categorical { probs: Vec<f64> },
    Gaussian { mean: f64, variance: f64 },
    Product { components: Vec<OutcomeDistribution> },
    Mixture { weights: Vec<f64>, components: Vec<OutcomeDistribution> },
}

fn check_prob_vector(probs: &[f64], what: &str) -> Result<(), Error> {
    if probs.is_empty() {
        return Err(Error::InvalidDistribution(format!("{what}: empty probability vector")));
    }
    if probs.iter().any(|&p| !(p > 0.0) || !p.is_finite()) {
        return Err(Error::InvalidDistribution(format!(
            "{what}: probabilities must be strictly positive and finite"
        )));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > PROB_SUM_TOL {
        return Err(Error::InvalidDistribution(format!(
            "{what}: probabilities sum to {sum}, not 1"
        )));
    }
    Ok(())
}

impl OutcomeDistribution {
    pub fn categorical(probs: Vec<f64>) -> Result<Self, Error> {
        check_prob_vector(&probs, "categorical")?;
        Ok(OutcomeDistribution::Categorical { probs })
    }

    pub fn gaussian(mean: f64, variance: f64) -> Result<Self, Error> {
        if !(variance > 0.0) || !variance.is_finite() || !mean.is_finite() {
            return Err(Error::InvalidDistribution(format!(
                "gaussian: mean {mean}, variance {variance}"
            )));
        }
        Ok(OutcomeDistribution::Gaussian { mean, variance })
    }

    /// Independent product across real-valued components. Outcome dimension is
    /// the number of components; each component must be scalar-valued.
    pub fn product(components: Vec<OutcomeDistribution>) -> Result<Self, Error> {
        if components.is_empty() {
            return Err(Error::InvalidDistribution("product: no components".into()));
        }
        for c in &components {
            c.validate()?;
            if c.space() != OutcomeSpace::Real(1) {
                return Err(Error::InvalidDistribution(
                    "product: components must be scalar real distributions".into(),
                ));
            }
        }
        Ok(OutcomeDistribution::Product { components })
    }

    /// Finite mixture over a common outcome space. `weights` strictly positive
    /// and summing to one; boundary weights are rejected, collapse them first.
    pub fn mixture(weights: Vec<f64>, components: Vec<OutcomeDistribution>) -> Result<Self, Error> {
        check_prob_vector(&weights, "mixture")?;
        if weights.len() != components.len() {
            return Err(Error::InvalidDistribution(
                "mixture: weights/components length mismatch".into(),
            ));
        }
        let space = components[0].space();
        for c in &components {
            c.validate()?;
            if c.space() != space {
                return Err(Error::InvalidDistribution(
                    "mixture: components on different outcome spaces".into(),
                ));
            }
        }
        Ok(OutcomeDistribution::Mixture { weights, components })
    }

    pub fn validate(&self) -> Result<(), Error> {
        match self {
            OutcomeDistribution::Categorical { probs } => check_prob_vector(probs, "categorical"),
            OutcomeDistribution::Gaussian { mean, variance } => {
                Self::gaussian(*mean, *variance).map(|_| ())
            }
            OutcomeDistribution::Product { components } => {
                Self::product(components.clone()).map(|_| ())
            }
            OutcomeDistribution::Mixture { weights, components } => {
                Self::mixture(weights.clone(), components.clone()).map(|_| ())
            }
        }
    }

    pub fn space(&self) -> OutcomeSpace {
        match self {
            OutcomeDistribution::Categorical { probs } => OutcomeSpace::Categorical(probs.len()),
            OutcomeDistribution::Gaussian { .. } => OutcomeSpace::Real(1),
            OutcomeDistribution::Product { components } => OutcomeSpace::Real(components.len()),
            OutcomeDistribution::Mixture { components, .. } => components[0].space(),
        }
    }

    /// Draw one outcome. Reproducible given the stream state.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Outcome {
        match self {
            OutcomeDistribution::Categorical { probs } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (i, &p) in probs.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        return Outcome::Atom(i);
                    }
                }
                Outcome::Atom(probs.len() - 1)
            }
            OutcomeDistribution::Gaussian { mean, variance } => {
                let normal = Normal::new(*mean, variance.sqrt()).expect("validated");
                Outcome::scalar(normal.sample(rng))
            }
            OutcomeDistribution::Product { components } => {
                let mut ys = Vec::with_capacity(components.len());
                for c in components {
                    match c.sample(rng) {
                        Outcome::Real(v) => ys.extend(v),
                        Outcome::Atom(_) => unreachable!("product components are real"),
                    }
                }
                Outcome::Real(ys)
            }
            OutcomeDistribution::Mixture { weights, components } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (w, c) in weights.iter().zip(components) {
                    acc += w;
                    if u < acc {
                        return c.sample(rng);
                    }
                }
                components.last().expect("nonempty").sample(rng)
            }
        }
    }

    /// Log density (or log mass) of `y`. Finite on the whole space by the
    /// full-support invariants. Product sums over components, Mixture combines
    /// components by log-sum-exp.
    pub fn log_density(&self, y: &Outcome) -> Result<f64, Error> {
        match (self, y) {
            (OutcomeDistribution::Categorical { probs }, Outcome::Atom(i)) => probs
                .get(*i)
                .map(|p| p.ln())
                .ok_or_else(|| Error::DimensionMismatch(format!("atom {i} of {}", probs.len()))),
            (OutcomeDistribution::Gaussian { mean, variance }, Outcome::Real(v)) if v.len() == 1 => {
                Ok(normal_log_pdf(v[0], *mean, *variance))
            }
            (OutcomeDistribution::Product { components }, Outcome::Real(v))
                if v.len() == components.len() =>
            {
                let mut total = 0.0;
                for (c, &yi) in components.iter().zip(v) {
                    total += c.log_density(&Outcome::scalar(yi))?;
                }
                Ok(total)
            }
            (OutcomeDistribution::Mixture { weights, components }, y) => {
                let mut terms = Vec::with_capacity(components.len());
                for (w, c) in weights.iter().zip(components) {
                    terms.push(w.ln() + c.log_density(y)?);
                }
                Ok(log_sum_exp(&terms))
            }
            _ => Err(Error::DimensionMismatch(format!(
                "outcome {y:?} does not live on {:?}",
                self.space()
            ))),
        }
    }

    /// Mean of coordinate `i` on a real-valued space.
    pub fn coordinate_mean(&self, i: usize) -> Result<f64, Error> {
        match self {
            OutcomeDistribution::Gaussian { mean, .. } if i == 0 => Ok(*mean),
            OutcomeDistribution::Product { components } => components
                .get(i)
                .ok_or_else(|| Error::DimensionMismatch(format!("coordinate {i}")))?
                .coordinate_mean(0),
            OutcomeDistribution::Mixture { weights, components } => {
                let mut total = 0.0;
                for (w, c) in weights.iter().zip(components) {
                    total += w * c.coordinate_mean(i)?;
                }
                Ok(total)
            }
            _ => Err(Error::DimensionMismatch(format!(
                "coordinate mean {i} undefined on {:?}",
                self.space()
            ))),
        }
    }

    /// Integration bracket covering all but ~1e-20 of the mass of every
    /// scalar-valued component (mean +/- 10 standard deviations).
    pub fn bracket(&self) -> Result<(f64, f64), Error> {
        match self {
            OutcomeDistribution::Gaussian { mean, variance } => {
                let sd = variance.sqrt();
                Ok((mean - 10.0 * sd, mean + 10.0 * sd))
            }
            OutcomeDistribution::Mixture { components, .. } => {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for c in components {
                    let (a, b) = c.bracket()?;
                    lo = lo.min(a);
                    hi = hi.max(b);
                }
                Ok((lo, hi))
            }
            _ => Err(Error::DimensionMismatch(
                "bracket is defined for scalar continuous distributions".into(),
            )),
        }
    }
}

/// One action: a stable label plus the numeric level used by parametric
/// kernels and cost functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionSpec {
    pub label: String,
    pub value: f64,
}

impl ActionSpec {
    pub fn new(label: impl Into<String>, value: f64) -> Self {
        ActionSpec { label: label.into(), value }
    }
}

/// Flow payoff u(a, y).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UtilityFn {
    /// Per-action payoff vector over categorical outcomes.
    Table { rows: Vec<Vec<f64>> },
    /// y[coord] minus a per-action cost.
    LinearInOutcome { coord: usize, action_cost: Vec<f64> },
    /// |y[0]|.
    AbsOutcome,
    /// Tagged extension point; `power_abs` is |y[coord]|^p with params=[coord, p].
    Custom { tag: String, params: Vec<f64> },
}

impl UtilityFn {
    /// Deterministic payoff of (action index, outcome).
    pub fn evaluate(&self, action: usize, y: &Outcome) -> Result<f64, Error> {
        match (self, y) {
            (UtilityFn::Table { rows }, Outcome::Atom(i)) => rows
                .get(action)
                .and_then(|r| r.get(*i))
                .copied()
                .ok_or_else(|| Error::DimensionMismatch(format!("table entry ({action}, {i})"))),
            (UtilityFn::LinearInOutcome { coord, action_cost }, Outcome::Real(v)) => {
                let yc = v
                    .get(*coord)
                    .ok_or_else(|| Error::DimensionMismatch(format!("coordinate {coord}")))?;
                let cost = action_cost
                    .get(action)
                    .ok_or_else(|| Error::DimensionMismatch(format!("action cost {action}")))?;
                Ok(yc - cost)
            }
            (UtilityFn::AbsOutcome, Outcome::Real(v)) if !v.is_empty() => Ok(v[0].abs()),
            (UtilityFn::Custom { tag, params }, Outcome::Real(v)) if tag == "power_abs" => {
                let coord = params.first().copied().unwrap_or(0.0) as usize;
                let p = params.get(1).copied().unwrap_or(1.0);
                let yc = v
                    .get(coord)
                    .ok_or_else(|| Error::DimensionMismatch(format!("coordinate {coord}")))?;
                Ok(yc.abs().powf(p))
            }
            (UtilityFn::Custom { tag, .. }, _) => {
                Err(Error::InvalidConfig(format!("unknown custom utility tag {tag:?}")))
            }
            _ => Err(Error::DimensionMismatch("utility/outcome mismatch".into())),
        }
    }
}

/// The objective decision problem: finite actions, a true DGP per action, a
/// utility, and a discount factor in [0, 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionProblem {
    pub actions: Vec<ActionSpec>,
    pub outcome_space: OutcomeSpace,
    pub true_dgp: Vec<OutcomeDistribution>,
    pub utility: UtilityFn,
    pub discount: f64,
}

impl DecisionProblem {
    pub fn new(
        actions: Vec<ActionSpec>,
        true_dgp: Vec<OutcomeDistribution>,
        utility: UtilityFn,
        discount: f64,
    ) -> Result<Self, Error> {
        if actions.is_empty() {
            return Err(Error::InvalidConfig("no actions".into()));
        }
        if true_dgp.len() != actions.len() {
            return Err(Error::InvalidConfig("true DGP must cover every action".into()));
        }
        if !(0.0..1.0).contains(&discount) {
            return Err(Error::InvalidConfig(format!("discount {discount} outside [0, 1)")));
        }
        let space = true_dgp[0].space();
        for d in &true_dgp {
            d.validate()?;
            if d.space() != space {
                return Err(Error::InvalidConfig(
                    "true DGP distributions on different outcome spaces".into(),
                ));
            }
        }
        Ok(DecisionProblem { actions, outcome_space: space, true_dgp, utility, discount })
    }

    pub fn n_actions(&self) -> usize {
        self.actions.len()
    }

    /// Expected flow payoff of `action` under the true DGP.
    pub fn expected_true_utility(&self, action: usize) -> Result<f64, Error> {
        expected_utility(&self.true_dgp[action], &self.utility, action)
    }
}

/// E_{y ~ dist}[u(action, y)]: exact for tables and linear utilities, folded
/// normal closed form for |y| on Gaussians, adaptive quadrature otherwise.
pub fn expected_utility(
    dist: &OutcomeDistribution,
    utility: &UtilityFn,
    action: usize,
) -> Result<f64, Error> {
    match (utility, dist) {
        (UtilityFn::Table { rows }, OutcomeDistribution::Categorical { probs }) => {
            let row = rows
                .get(action)
                .ok_or_else(|| Error::DimensionMismatch(format!("table row {action}")))?;
            if row.len() != probs.len() {
                return Err(Error::DimensionMismatch("table/outcome size".into()));
            }
            Ok(row.iter().zip(probs).map(|(u, p)| u * p).sum())
        }
        (UtilityFn::Table { .. }, OutcomeDistribution::Mixture { weights, components }) => {
            let mut total = 0.0;
            for (w, c) in weights.iter().zip(components) {
                total += w * expected_utility(c, utility, action)?;
            }
            Ok(total)
        }
        (UtilityFn::LinearInOutcome { coord, action_cost }, _) => {
            let cost = action_cost
                .get(action)
                .ok_or_else(|| Error::DimensionMismatch(format!("action cost {action}")))?;
            Ok(dist.coordinate_mean(*coord)? - cost)
        }
        (UtilityFn::AbsOutcome, OutcomeDistribution::Gaussian { mean, variance }) => {
            Ok(folded_normal_mean(*mean, *variance))
        }
        (UtilityFn::AbsOutcome, OutcomeDistribution::Mixture { weights, components }) => {
            let mut total = 0.0;
            for (w, c) in weights.iter().zip(components) {
                total += w * expected_utility(c, utility, action)?;
            }
            Ok(total)
        }
        // Generic scalar continuous fallback: quadrature on the 10-sigma
        // bracket with 1e-10 tolerance.
        (_, d) if d.space() == OutcomeSpace::Real(1) => {
            let (lo, hi) = d.bracket()?;
            let f = |y: f64| {
                let out = Outcome::scalar(y);
                let u = utility.evaluate(action, &out).unwrap_or(f64::NAN);
                u * d.log_density(&out).map(f64::exp).unwrap_or(f64::NAN)
            };
            Ok(integrate(&f, lo, hi, 1e-10))
        }
        _ => Err(Error::DimensionMismatch(
            "no evaluation rule for this utility/distribution pair".into(),
        )),
    }
}

/// Numerically check that exp(log_density) integrates (sums) to one.
/// Continuous variants use quadrature on the 10-sigma bracket.
pub fn density_total_mass(dist: &OutcomeDistribution) -> Result<f64, Error> {
    match dist.space() {
        OutcomeSpace::Categorical(n) => {
            let mut total = 0.0;
            for i in 0..n {
                total += dist.log_density(&Outcome::Atom(i))?.exp();
            }
            Ok(total)
        }
        OutcomeSpace::Real(1) => {
            let (lo, hi) = dist.bracket()?;
            Ok(integrate(
                &|y: f64| dist.log_density(&Outcome::scalar(y)).map(f64::exp).unwrap_or(0.0),
                lo,
                hi,
                1e-12,
            ))
        }
        OutcomeSpace::Real(_) => {
            // Products integrate component-wise.
            if let OutcomeDistribution::Product { components } = dist {
                let mut total = 1.0;
                for c in components {
                    total *= density_total_mass(c)?;
                }
                Ok(total)
            } else {
                Err(Error::DimensionMismatch(
                    "total mass check only for products in higher dimension".into(),
                ))
            }
        }
    }
}

/// Chi-square upper-tail p-value helper for categorical sampling checks.
pub fn chi_square_p_value(statistic: f64, dof: f64) -> f64 {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let chi = ChiSquared::new(dof).expect("dof > 0");
    1.0 - chi.cdf(statistic)
}

pub use numeric::mean_se;

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn degenerate_categorical_always_atom_zero() {
        let d = OutcomeDistribution::categorical(vec![1.0]).unwrap();
        let mut r = rng(0);
        for _ in 0..100 {
            assert_eq!(d.sample(&mut r), Outcome::Atom(0));
        }
    }

    #[test]
    fn categorical_requires_full_support() {
        assert!(OutcomeDistribution::categorical(vec![0.5, 0.5, 0.0]).is_err());
        assert!(OutcomeDistribution::categorical(vec![0.5, 0.4]).is_err());
        assert!(OutcomeDistribution::gaussian(0.0, 0.0).is_err());
    }

    #[test]
    fn gaussian_sample_mean_within_clt_bound() {
        // CLT oracle: 3 sigma / sqrt(N) = 0.0095 for N = 1e5.
        let d = OutcomeDistribution::gaussian(1.0, 1.0).unwrap();
        let mut r = rng(7);
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            if let Outcome::Real(v) = d.sample(&mut r) {
                sum += v[0];
            }
        }
        let mean = sum / n as f64;
        assert!((mean - 1.0).abs() < 0.01, "sample mean {mean}");
    }

    #[test]
    fn mixture_sample_mean_matches_analytic() {
        // Analytic mean 2.0; CLT bound 3*sd/sqrt(N) with sd^2 = 1 + 4 = 5.
        let d = OutcomeDistribution::mixture(
            vec![0.5, 0.5],
            vec![
                OutcomeDistribution::gaussian(0.0, 1.0).unwrap(),
                OutcomeDistribution::gaussian(4.0, 1.0).unwrap(),
            ],
        )
        .unwrap();
        let mut r = rng(11);
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            if let Outcome::Real(v) = d.sample(&mut r) {
                sum += v[0];
            }
        }
        assert!((sum / n as f64 - 2.0).abs() < 0.03);
    }

    #[test]
    fn log_density_examples() {
        let c = OutcomeDistribution::categorical(vec![0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(
            c.log_density(&Outcome::Atom(0)).unwrap(),
            0.5_f64.ln(),
            epsilon = 1e-15
        );
        let g = OutcomeDistribution::gaussian(0.0, 1.0).unwrap();
        assert_abs_diff_eq!(
            g.log_density(&Outcome::scalar(0.0)).unwrap(),
            -0.5 * crate::numeric::LN_2PI,
            epsilon = 1e-15
        );
        // Identical mixture components collapse to the component density.
        let m = OutcomeDistribution::mixture(
            vec![0.5, 0.5],
            vec![g.clone(), g.clone()],
        )
        .unwrap();
        assert_abs_diff_eq!(
            m.log_density(&Outcome::scalar(1.0)).unwrap(),
            g.log_density(&Outcome::scalar(1.0)).unwrap(),
            epsilon = 1e-12
        );
        assert!(c.log_density(&Outcome::Atom(5)).is_err());
        assert!(g.log_density(&Outcome::Atom(0)).is_err());
    }

    #[test]
    fn product_log_density_sums_components() {
        let p = OutcomeDistribution::product(vec![
            OutcomeDistribution::gaussian(0.0, 1.0).unwrap(),
            OutcomeDistribution::gaussian(4.0, 2.0).unwrap(),
        ])
        .unwrap();
        let y = Outcome::Real(vec![0.3, 3.1]);
        let expect = normal_log_pdf(0.3, 0.0, 1.0) + normal_log_pdf(3.1, 4.0, 2.0);
        assert_abs_diff_eq!(p.log_density(&y).unwrap(), expect, epsilon = 1e-12);
        assert!(p.log_density(&Outcome::Real(vec![0.0])).is_err());
    }

    #[test]
    fn densities_integrate_to_one() {
        let dists = vec![
            OutcomeDistribution::categorical(vec![0.2, 0.3, 0.5]).unwrap(),
            OutcomeDistribution::gaussian(-3.0, 0.25).unwrap(),
            OutcomeDistribution::mixture(
                vec![0.25, 0.75],
                vec![
                    OutcomeDistribution::gaussian(0.0, 1.0).unwrap(),
                    OutcomeDistribution::gaussian(5.0, 4.0).unwrap(),
                ],
            )
            .unwrap(),
            OutcomeDistribution::product(vec![
                OutcomeDistribution::gaussian(1.0, 1.0).unwrap(),
                OutcomeDistribution::gaussian(2.0, 2.0).unwrap(),
            ])
            .unwrap(),
        ];
        for d in dists {
            assert_abs_diff_eq!(density_total_mass(&d).unwrap(), 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn empirical_histogram_matches_categorical() {
        let probs = vec![0.1, 0.2, 0.3, 0.4];
        let d = OutcomeDistribution::categorical(probs.clone()).unwrap();
        let mut r = rng(3);
        let n = 100_000usize;
        let mut counts = vec![0usize; probs.len()];
        for _ in 0..n {
            if let Outcome::Atom(i) = d.sample(&mut r) {
                counts[i] += 1;
            }
        }
        let stat: f64 = counts
            .iter()
            .zip(&probs)
            .map(|(&c, &p)| {
                let e = p * n as f64;
                (c as f64 - e).powi(2) / e
            })
            .sum();
        assert!(chi_square_p_value(stat, (probs.len() - 1) as f64) > 0.001);
    }

    #[test]
    fn empirical_gaussian_moments_within_four_se() {
        let d = OutcomeDistribution::gaussian(2.0, 3.0).unwrap();
        let mut r = rng(5);
        let n = 100_000;
        let mut xs = Vec::with_capacity(n);
        for _ in 0..n {
            if let Outcome::Real(v) = d.sample(&mut r) {
                xs.push(v[0]);
            }
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n as f64 - 1.0);
        let se_mean = (3.0f64 / n as f64).sqrt();
        // SE of the sample variance of a normal: sqrt(2 sigma^4 / (n - 1)).
        let se_var = (2.0 * 9.0 / (n as f64 - 1.0)).sqrt();
        assert!((mean - 2.0).abs() < 4.0 * se_mean);
        assert!((var - 3.0).abs() < 4.0 * se_var);
    }

    #[test]
    fn expected_true_utility_overconfidence_effort() {
        // Truth y = (a + 1) * 2 + noise, u = y - 0.5 a^2; efficient effort 2.
        let actions: Vec<ActionSpec> =
            (0..4).map(|a| ActionSpec::new(format!("a{a}"), a as f64)).collect();
        let dgp: Vec<_> = (0..4)
            .map(|a| OutcomeDistribution::gaussian((a as f64 + 1.0) * 2.0, 1.0).unwrap())
            .collect();
        let costs: Vec<f64> = (0..4).map(|a| 0.5 * (a as f64).powi(2)).collect();
        let problem = DecisionProblem::new(
            actions,
            dgp,
            UtilityFn::LinearInOutcome { coord: 0, action_cost: costs },
            0.0,
        )
        .unwrap();
        assert_abs_diff_eq!(problem.expected_true_utility(2).unwrap(), 4.0, epsilon = 1e-12);
        let best = (0..4)
            .max_by(|&a, &b| {
                problem
                    .expected_true_utility(a)
                    .unwrap()
                    .partial_cmp(&problem.expected_true_utility(b).unwrap())
                    .unwrap()
            })
            .unwrap();
        assert_eq!(best, 2);
    }

    #[test]
    fn expected_abs_utility_folded_normal() {
        let d = OutcomeDistribution::gaussian(1.0, 1.0).unwrap();
        let e = expected_utility(&d, &UtilityFn::AbsOutcome, 0).unwrap();
        assert_abs_diff_eq!(e, 1.1666, epsilon = 5e-5);
    }

    #[test]
    fn table_utility_degenerate_categorical() {
        let d = OutcomeDistribution::categorical(vec![1.0]).unwrap();
        let u = UtilityFn::Table { rows: vec![vec![3.25]] };
        assert_abs_diff_eq!(expected_utility(&d, &u, 0).unwrap(), 3.25, epsilon = 1e-15);
    }
}
