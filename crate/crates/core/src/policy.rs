//! Subjective best responses: myopic action sets, discounted value iteration
//! on a regular belief-simplex grid, pure policy extraction, and LP-based
//! simplex-wide optimality certificates.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::env::{expected_utility, DecisionProblem, Outcome, OutcomeSpace};
use crate::model::{Belief, SubjectiveModel};
use crate::numeric::{integrate, log_sum_exp};
use crate::simplex::max_min_margin;
use crate::Error;

/// Ties in expected utility closer than this are included in best sets.
pub const TIE_TOL: f64 = 1e-9;

/// Sup-norm convergence tolerance for value iteration.
pub const DP_TOL: f64 = 1e-8;

/// E_{q_theta(.|a,w)} u(a, y) for one parameter and action.
pub fn subjective_eu(
    problem: &DecisionProblem,
    model: &SubjectiveModel,
    param: usize,
    action: usize,
) -> Result<f64, Error> {
    expected_utility(model.distribution(param, action), &problem.utility, action)
}

/// Per-(action, parameter) subjective expected utilities.
pub fn subjective_eu_matrix(
    problem: &DecisionProblem,
    model: &SubjectiveModel,
) -> Result<Vec<Vec<f64>>, Error> {
    let mut matrix = Vec::with_capacity(problem.n_actions());
    for a in 0..problem.n_actions() {
        let mut row = Vec::with_capacity(model.n_params());
        for w in 0..model.n_params() {
            row.push(subjective_eu(problem, model, w, a)?);
        }
        matrix.push(row);
    }
    Ok(matrix)
}

fn belief_eu(eu_row: &[f64], probs: &[f64]) -> f64 {
    eu_row.iter().zip(probs).map(|(u, p)| u * p).sum()
}

/// Myopically optimal actions at `belief`, ties within 1e-9 included.
pub fn myopic_best_set(
    problem: &DecisionProblem,
    model: &SubjectiveModel,
    belief: &Belief,
) -> Result<Vec<usize>, Error> {
    let eu = subjective_eu_matrix(problem, model)?;
    Ok(myopic_best_set_from(&eu, &belief.probs))
}

pub fn myopic_best_set_from(eu: &[Vec<f64>], probs: &[f64]) -> Vec<usize> {
    let values: Vec<f64> = eu.iter().map(|row| belief_eu(row, probs)).collect();
    let best = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v >= best - TIE_TOL)
        .map(|(a, _)| a)
        .collect()
}

/// True iff `action` is weakly optimal at every vertex belief of
/// `param_subset`. Expected utility is linear in the belief, so vertex
/// checks certify the whole face.
pub fn action_optimal_on_face(
    eu: &[Vec<f64>],
    action: usize,
    param_subset: &[usize],
) -> bool {
    param_subset.iter().all(|&w| {
        let u = eu[action][w];
        eu.iter().all(|row| u >= row[w] - TIE_TOL)
    })
}

/// Max over beliefs on `param_subset` of the worst-case utility margin of
/// `action`, with the maximizing belief (padded to full parameter length).
pub fn somewhere_optimal_witness(
    eu: &[Vec<f64>],
    action: usize,
    param_subset: &[usize],
) -> Result<(Vec<f64>, f64), Error> {
    let n = param_subset.len();
    let rows: Vec<Vec<f64>> = (0..eu.len())
        .filter(|&b| b != action)
        .map(|b| param_subset.iter().map(|&w| eu[action][w] - eu[b][w]).collect())
        .collect();
    if rows.is_empty() {
        // Single-action problems: trivially optimal under any belief.
        let mut belief = vec![0.0; eu[0].len()];
        belief[param_subset[0]] = 1.0;
        return Ok((belief, f64::INFINITY));
    }
    let (x, margin) = max_min_margin(n, &rows)?;
    let mut belief = vec![0.0; eu[0].len()];
    for (xi, &w) in x.iter().zip(param_subset) {
        belief[w] = *xi;
    }
    Ok((belief, margin))
}

/// True iff some belief on `param_subset` makes `action` weakly optimal.
pub fn action_somewhere_optimal(
    eu: &[Vec<f64>],
    action: usize,
    param_subset: &[usize],
) -> Result<bool, Error> {
    let (_, margin) = somewhere_optimal_witness(eu, action, param_subset)?;
    Ok(margin >= -TIE_TOL)
}

/// Policy mode: myopic argmax, or value iteration on a belief grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicyMode {
    Myopic,
    GridDp { resolution: usize, discount: f64 },
}

/// A solved pure policy. The tie-break is always the lowest action index so
/// runs are reproducible.
#[derive(Debug, Clone)]
pub struct Policy {
    pub model_id: String,
    pub mode: PolicyMode,
    eu: Vec<Vec<f64>>,
    table: Option<DpSolution>,
}

#[derive(Debug, Clone)]
pub struct DpSolution {
    pub grid: SimplexGrid,
    pub values: Vec<f64>,
    pub actions: Vec<usize>,
    pub sweeps: usize,
    pub residuals: Vec<f64>,
}

/// Solve a policy for `model` on `problem`.
pub fn solve_policy(
    problem: &DecisionProblem,
    model: &SubjectiveModel,
    mode: PolicyMode,
) -> Result<Policy, Error> {
    let eu = subjective_eu_matrix(problem, model)?;
    let table = match mode {
        PolicyMode::Myopic => None,
        PolicyMode::GridDp { resolution, discount } => {
            if resolution < 2 {
                return Err(Error::InvalidConfig(format!(
                    "grid resolution {resolution} below 2 points per simplex edge"
                )));
            }
            if !(0.0..1.0).contains(&discount) {
                return Err(Error::InvalidConfig(format!("discount {discount} outside [0, 1)")));
            }
            Some(value_iteration(problem, model, &eu, resolution, discount)?)
        }
    };
    Ok(Policy { model_id: model.id.clone(), mode, eu, table })
}

impl Policy {
    /// Pure action at `probs`, lowest index among ties.
    pub fn act(
        &self,
        problem: &DecisionProblem,
        model: &SubjectiveModel,
        probs: &[f64],
    ) -> Result<usize, Error> {
        match (&self.mode, &self.table) {
            (PolicyMode::Myopic, _) => {
                let values: Vec<f64> =
                    self.eu.iter().map(|row| belief_eu(row, probs)).collect();
                Ok(argmax_lowest(&values))
            }
            (PolicyMode::GridDp { discount, .. }, Some(table)) => {
                if *discount == 0.0 {
                    let values: Vec<f64> =
                        self.eu.iter().map(|row| belief_eu(row, probs)).collect();
                    return Ok(argmax_lowest(&values));
                }
                let q = q_values(problem, model, &self.eu, table, *discount, probs)?;
                Ok(argmax_lowest(&q))
            }
            _ => Err(Error::InvalidConfig("grid policy without a solved table".into())),
        }
    }

    pub fn dp_solution(&self) -> Option<&DpSolution> {
        self.table.as_ref()
    }

    pub fn eu_matrix(&self) -> &[Vec<f64>] {
        &self.eu
    }
}

/// Exact argmax, lowest index among exact ties. The policy deliberately uses
/// no tolerance: a deadband would freeze knife-edge action switches whose
/// recurrence the learning dynamics depend on.
fn argmax_lowest(values: &[f64]) -> usize {
    let best = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    values.iter().position(|&v| v == best).expect("nonempty action set")
}

/// Regular grid on the probability simplex with `resolution` subdivisions
/// per edge, plus barycentric interpolation over its Freudenthal
/// triangulation.
#[derive(Debug, Clone)]
pub struct SimplexGrid {
    pub n: usize,
    pub resolution: usize,
    points: Vec<Vec<usize>>,
    index: HashMap<Vec<usize>, usize>,
}

impl SimplexGrid {
    pub fn new(n: usize, resolution: usize) -> Self {
        let mut points = Vec::new();
        let mut current = vec![0usize; n];
        enumerate_compositions(resolution, n, 0, &mut current, &mut points);
        let index = points.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
        SimplexGrid { n, resolution, points, index }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> Vec<f64> {
        let r = self.resolution as f64;
        self.points[i].iter().map(|&c| c as f64 / r).collect()
    }

    pub fn iter_points(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }

    /// Barycentric weights of `probs` over the containing Freudenthal
    /// simplex: a list of (grid index, weight) with weights summing to one.
    pub fn interpolation(&self, probs: &[f64]) -> Vec<(usize, f64)> {
        let n = self.n;
        let r = self.resolution;
        // Cumulative coordinates x_k = R * sum_{j >= k} probs_j; x_0 = R.
        let mut x = vec![0.0; n];
        let mut acc = 0.0;
        for k in (0..n).rev() {
            acc += probs[k];
            x[k] = (self.resolution as f64) * acc;
        }
        x[0] = r as f64;
        // Snap near-integer coordinates so exact grid points map to a single
        // vertex instead of a sliver simplex.
        for xi in &mut x {
            let rounded = xi.round();
            if (*xi - rounded).abs() < 1e-9 {
                *xi = rounded;
            }
            *xi = xi.clamp(0.0, r as f64);
        }
        let mut v: Vec<usize> = x.iter().map(|&xi| (xi.floor() as usize).min(r)).collect();
        v[0] = r;
        let mut d: Vec<f64> = x
            .iter()
            .zip(&v)
            .map(|(&xi, &vi)| (xi - vi as f64).clamp(0.0, 1.0))
            .collect();
        d[0] = 0.0;
        let mut order: Vec<usize> = (1..n).collect();
        order.sort_by(|&a, &b| d[b].partial_cmp(&d[a]).unwrap().then(a.cmp(&b)));

        let mut result = Vec::with_capacity(n + 1);
        let mut weights = Vec::with_capacity(n + 1);
        weights.push(1.0 - order.first().map_or(0.0, |&p| d[p]));
        for w in 0..order.len() {
            let next = if w + 1 < order.len() { d[order[w + 1]] } else { 0.0 };
            weights.push(d[order[w]] - next);
        }
        let mut u = v;
        for (k, weight) in weights.iter().enumerate() {
            if k > 0 {
                u[order[k - 1]] += 1;
            }
            if *weight <= 1e-12 {
                continue;
            }
            // Map the cumulative vertex back to simplex counts.
            let mut counts = vec![0usize; n];
            for i in 0..n {
                let next = if i + 1 < n { u[i + 1] } else { 0 };
                counts[i] = u[i].saturating_sub(next);
            }
            if let Some(&idx) = self.index.get(&counts) {
                result.push((idx, *weight));
            }
        }
        // Guard against floating-point dust: renormalize.
        let total: f64 = result.iter().map(|(_, w)| w).sum();
        if total > 0.0 {
            for (_, w) in &mut result {
                *w /= total;
            }
        }
        result
    }

    pub fn interpolate_values(&self, values: &[f64], probs: &[f64]) -> f64 {
        self.interpolation(probs).iter().map(|&(i, w)| values[i] * w).sum()
    }
}

fn enumerate_compositions(
    remaining: usize,
    n: usize,
    pos: usize,
    current: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if pos == n - 1 {
        current[pos] = remaining;
        out.push(current.clone());
        return;
    }
    for c in 0..=remaining {
        current[pos] = c;
        enumerate_compositions(remaining - c, n, pos + 1, current, out);
    }
}

/// One-step lookahead values Q(a, probs) with interpolated continuation.
fn q_values(
    problem: &DecisionProblem,
    model: &SubjectiveModel,
    eu: &[Vec<f64>],
    table: &DpSolution,
    discount: f64,
    probs: &[f64],
) -> Result<Vec<f64>, Error> {
    let mut q = Vec::with_capacity(problem.n_actions());
    for a in 0..problem.n_actions() {
        let flow = belief_eu(&eu[a], probs);
        let cont = expected_continuation(model, table, a, probs)?;
        q.push(flow + discount * cont);
    }
    Ok(q)
}

/// E over outcomes of V(posterior) under the predictive mixture at `probs`.
fn expected_continuation(
    model: &SubjectiveModel,
    table: &DpSolution,
    action: usize,
    probs: &[f64],
) -> Result<f64, Error> {
    match model.distribution(0, action).space() {
        OutcomeSpace::Categorical(n_atoms) => {
            let mut total = 0.0;
            for atom in 0..n_atoms {
                let y = Outcome::Atom(atom);
                let mut post = Vec::with_capacity(model.n_params());
                let mut pred = 0.0;
                for w in 0..model.n_params() {
                    let mass = model.distribution(w, action).log_density(&y)?.exp();
                    pred += probs[w] * mass;
                    post.push(probs[w] * mass);
                }
                if pred <= 0.0 {
                    continue;
                }
                for p in &mut post {
                    *p /= pred;
                }
                total += pred * table.grid.interpolate_values(&table.values, &post);
            }
            Ok(total)
        }
        OutcomeSpace::Real(1) => {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for w in 0..model.n_params() {
                let (a, b) = model.distribution(w, action).bracket()?;
                lo = lo.min(a);
                hi = hi.max(b);
            }
            let f = |y: f64| {
                let out = Outcome::scalar(y);
                let mut log_terms = Vec::with_capacity(model.n_params());
                for w in 0..model.n_params() {
                    let ld = model
                        .distribution(w, action)
                        .log_density(&out)
                        .unwrap_or(f64::NEG_INFINITY);
                    log_terms.push(probs[w].max(1e-300).ln() + ld);
                }
                let log_pred = log_sum_exp(&log_terms);
                let pred = log_pred.exp();
                if pred <= 0.0 {
                    return 0.0;
                }
                let post: Vec<f64> =
                    log_terms.iter().map(|t| (t - log_pred).exp()).collect();
                pred * table.grid.interpolate_values(&table.values, &post)
            };
            Ok(integrate(&f, lo, hi, 1e-8))
        }
        OutcomeSpace::Real(d) => Err(Error::InvalidConfig(format!(
            "belief-grid value iteration needs categorical or scalar outcomes, got dimension {d}"
        ))),
    }
}

fn value_iteration(
    problem: &DecisionProblem,
    model: &SubjectiveModel,
    eu: &[Vec<f64>],
    resolution: usize,
    discount: f64,
) -> Result<DpSolution, Error> {
    let grid = SimplexGrid::new(model.n_params(), resolution);
    // Myopic values as the starting point; for discount 0 they are exact.
    let mut values: Vec<f64> = grid
        .iter_points()
        .map(|p| {
            eu.iter().map(|row| belief_eu(row, &p)).fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let mut actions: Vec<usize> = grid
        .iter_points()
        .map(|p| argmax_lowest(&eu.iter().map(|row| belief_eu(row, &p)).collect::<Vec<_>>()))
        .collect();
    let mut residuals = Vec::new();
    let mut table = DpSolution { grid, values: values.clone(), actions: actions.clone(), sweeps: 0, residuals: vec![] };
    if discount == 0.0 {
        return Ok(table);
    }
    let max_sweeps = 10_000;
    for sweep in 1..=max_sweeps {
        let mut residual: f64 = 0.0;
        for g in 0..table.grid.len() {
            let p = table.grid.point(g);
            let q = q_values(problem, model, eu, &table, discount, &p)?;
            let best = argmax_lowest(&q);
            let v = q[best];
            residual = residual.max((v - values[g]).abs());
            values[g] = v;
            actions[g] = best;
        }
        table.values.clone_from(&values);
        table.actions.clone_from(&actions);
        residuals.push(residual);
        table.sweeps = sweep;
        if residual <= DP_TOL {
            break;
        }
    }
    table.residuals = residuals;
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{ActionSpec, OutcomeDistribution, UtilityFn};
    use approx::assert_abs_diff_eq;

    fn gaussian(mean: f64, var: f64) -> OutcomeDistribution {
        OutcomeDistribution::gaussian(mean, var).unwrap()
    }

    fn overconfidence() -> (DecisionProblem, SubjectiveModel) {
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
        (problem, SubjectiveModel::new("theta", params, kernel).unwrap())
    }

    fn example1() -> (DecisionProblem, SubjectiveModel) {
        let actions = vec![ActionSpec::new("1", 1.0), ActionSpec::new("3", 3.0)];
        let dgp = vec![gaussian(1.0, 1.0), gaussian(1.0, 1.0)];
        let problem = DecisionProblem::new(actions, dgp, UtilityFn::AbsOutcome, 0.0).unwrap();
        let params: Vec<Vec<f64>> = (1..=3).map(|w| vec![w as f64]).collect();
        let kernel: Vec<Vec<_>> = (1..=3)
            .map(|w| vec![gaussian(w as f64 - 1.0, 1.0), gaussian(w as f64 - 3.0, 1.0)])
            .collect();
        (problem, SubjectiveModel::new("ex1", params, kernel).unwrap())
    }

    #[test]
    fn myopic_overconfidence_picks_low_effort() {
        // Subjective payoffs at delta_{w=1}: (3, 3.5, 3, 1.5) -> {1}.
        let (problem, model) = overconfidence();
        let eu = subjective_eu_matrix(&problem, &model).unwrap();
        for (a, expect) in [(0, 3.0), (1, 3.5), (2, 3.0), (3, 1.5)] {
            assert_abs_diff_eq!(eu[a][0], expect, epsilon = 1e-12);
        }
        let belief = Belief::new("theta", vec![1.0, 0.0, 0.0]).unwrap();
        assert_eq!(myopic_best_set(&problem, &model, &belief).unwrap(), vec![1]);
    }

    #[test]
    fn myopic_example1_indifference() {
        // At delta_{w=2} both actions give E|N(1,1)| = E|N(-1,1)|.
        let (problem, model) = example1();
        let belief = Belief::new("ex1", vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(myopic_best_set(&problem, &model, &belief).unwrap(), vec![0, 1]);
    }

    #[test]
    fn myopic_single_action() {
        let problem = DecisionProblem::new(
            vec![ActionSpec::new("only", 0.0)],
            vec![gaussian(0.0, 1.0)],
            UtilityFn::AbsOutcome,
            0.0,
        )
        .unwrap();
        let model = SubjectiveModel::new("m", vec![vec![0.0]], vec![vec![gaussian(0.0, 1.0)]])
            .unwrap();
        let belief = Belief::new("m", vec![1.0]).unwrap();
        assert_eq!(myopic_best_set(&problem, &model, &belief).unwrap(), vec![0]);
    }

    #[test]
    fn myopic_invariant_to_affine_rescaling() {
        let (problem, model) = overconfidence();
        let mut scaled = problem.clone();
        if let UtilityFn::LinearInOutcome { coord, action_cost } = &problem.utility {
            // alpha u + beta with u = y - cost: scale outcome impossible, so
            // emulate via a table-free transform: compare best sets under
            // u and 2u + 7 by scaling EU rows directly.
            let eu = subjective_eu_matrix(&problem, &model).unwrap();
            let scaled_eu: Vec<Vec<f64>> =
                eu.iter().map(|r| r.iter().map(|u| 2.0 * u + 7.0).collect()).collect();
            for probs in [vec![1.0, 0.0, 0.0], vec![0.2, 0.5, 0.3], vec![0.4, 0.1, 0.5]] {
                assert_eq!(
                    myopic_best_set_from(&eu, &probs),
                    myopic_best_set_from(&scaled_eu, &probs)
                );
            }
            let _ = (coord, action_cost);
        }
        scaled.discount = 0.0;
    }

    #[test]
    fn face_and_somewhere_optimality() {
        let (problem, model) = overconfidence();
        let eu = subjective_eu_matrix(&problem, &model).unwrap();
        // Singleton face reduces to myopic membership at the vertex.
        assert!(action_optimal_on_face(&eu, 1, &[0]));
        assert!(!action_optimal_on_face(&eu, 2, &[0]));
        assert!(action_somewhere_optimal(&eu, 1, &[0]).unwrap());
        assert!(!action_somewhere_optimal(&eu, 3, &[0]).unwrap());

        let (problem1, model1) = example1();
        let eu1 = subjective_eu_matrix(&problem1, &model1).unwrap();
        // Ties allowed: a = 1 (index 0) optimal on {w=2}, and the high action
        // is somewhere-optimal there too.
        assert!(action_optimal_on_face(&eu1, 0, &[1]));
        assert!(action_somewhere_optimal(&eu1, 1, &[1]).unwrap());
    }

    #[test]
    fn somewhere_optimal_lp_agrees_with_dense_grid() {
        // Randomized instances, |subset| <= 3: identical verdicts required.
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        for _ in 0..200 {
            let n_actions = rng.random_range(2..=4usize);
            let n_params = rng.random_range(1..=3usize);
            let eu: Vec<Vec<f64>> = (0..n_actions)
                .map(|_| (0..n_params).map(|_| rng.random_range(-2.0..2.0)).collect())
                .collect();
            let subset: Vec<usize> = (0..n_params).collect();
            for a in 0..n_actions {
                let lp = action_somewhere_optimal(&eu, a, &subset).unwrap();
                let grid = dense_grid_somewhere_optimal(&eu, a, &subset, 200);
                assert_eq!(lp, grid, "eu {eu:?} action {a}");
            }
        }
    }

    fn dense_grid_somewhere_optimal(
        eu: &[Vec<f64>],
        action: usize,
        subset: &[usize],
        resolution: usize,
    ) -> bool {
        let grid = SimplexGrid::new(subset.len(), resolution);
        let found = grid.iter_points().any(|p| {
            let mut probs = vec![0.0; eu[0].len()];
            for (x, &w) in p.iter().zip(subset) {
                probs[w] = *x;
            }
            let u_a = belief_eu(&eu[action], &probs);
            eu.iter().all(|row| u_a >= belief_eu(row, &probs) - 1e-7)
        });
        found
    }

    #[test]
    fn interpolation_is_exact_for_linear_functions() {
        for n in 2..=4 {
            let grid = SimplexGrid::new(n, 7);
            let coefs: Vec<f64> = (0..n).map(|i| (i as f64) * 1.3 - 0.4).collect();
            let values: Vec<f64> = grid
                .iter_points()
                .map(|p| p.iter().zip(&coefs).map(|(x, c)| x * c).sum())
                .collect();
            let probe = match n {
                2 => vec![vec![0.31, 0.69], vec![1.0, 0.0]],
                3 => vec![vec![0.2, 0.45, 0.35], vec![0.0, 0.5, 0.5]],
                _ => vec![vec![0.1, 0.2, 0.3, 0.4], vec![0.25, 0.25, 0.25, 0.25]],
            };
            for p in probe {
                let direct: f64 = p.iter().zip(&coefs).map(|(x, c)| x * c).sum();
                let interp = grid.interpolate_values(&values, &p);
                assert_abs_diff_eq!(interp, direct, epsilon = 1e-10);
                let weights = grid.interpolation(&p);
                let total: f64 = weights.iter().map(|(_, w)| w).sum();
                assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
                assert!(weights.iter().all(|&(_, w)| w >= 0.0));
            }
        }
    }

    #[test]
    fn grid_points_interpolate_to_themselves() {
        let grid = SimplexGrid::new(3, 5);
        for i in 0..grid.len() {
            let p = grid.point(i);
            let weights = grid.interpolation(&p);
            assert_eq!(weights.len(), 1);
            assert_eq!(weights[0].0, i);
            assert_abs_diff_eq!(weights[0].1, 1.0, epsilon = 1e-12);
        }
    }

    /// Known-prior bandit where experimentation pays: safe action worth a
    /// flat 0.55, risky pays 1 with probability 0.9 (good) or 0.1 (bad).
    fn bandit() -> (DecisionProblem, SubjectiveModel) {
        let actions = vec![ActionSpec::new("safe", 0.0), ActionSpec::new("risky", 1.0)];
        let half = OutcomeDistribution::categorical(vec![0.5, 0.5]).unwrap();
        let dgp = vec![half.clone(), OutcomeDistribution::categorical(vec![0.1, 0.9]).unwrap()];
        let utility = UtilityFn::Table { rows: vec![vec![0.55, 0.55], vec![0.0, 1.0]] };
        let problem = DecisionProblem::new(actions, dgp, utility, 0.9).unwrap();
        let model = SubjectiveModel::new(
            "bandit",
            vec![vec![1.0], vec![0.0]],
            vec![
                vec![half.clone(), OutcomeDistribution::categorical(vec![0.1, 0.9]).unwrap()],
                vec![half, OutcomeDistribution::categorical(vec![0.9, 0.1]).unwrap()],
            ],
        )
        .unwrap();
        (problem, model)
    }

    #[test]
    fn zero_discount_grid_dp_equals_myopic_everywhere() {
        let (problem, model) = overconfidence();
        let myopic = solve_policy(&problem, &model, PolicyMode::Myopic).unwrap();
        let dp = solve_policy(
            &problem,
            &model,
            PolicyMode::GridDp { resolution: 6, discount: 0.0 },
        )
        .unwrap();
        let table = dp.dp_solution().unwrap();
        for g in 0..table.grid.len() {
            let p = table.grid.point(g);
            assert_eq!(
                dp.act(&problem, &model, &p).unwrap(),
                myopic.act(&problem, &model, &p).unwrap()
            );
        }
    }

    #[test]
    fn degenerate_belief_dp_value_is_static_maximum() {
        // At a vertex belief the problem is static: V = max_a EU / (1 - d).
        let (problem, model) = bandit();
        let dp = solve_policy(
            &problem,
            &model,
            PolicyMode::GridDp { resolution: 64, discount: 0.9 },
        )
        .unwrap();
        let table = dp.dp_solution().unwrap();
        let eu = subjective_eu_matrix(&problem, &model).unwrap();
        for (w, vertex) in [(0usize, vec![1.0, 0.0]), (1usize, vec![0.0, 1.0])] {
            let g = table
                .grid
                .iter_points()
                .position(|p| p.iter().zip(&vertex).all(|(a, b)| (a - b).abs() < 1e-12))
                .unwrap();
            let static_best = eu.iter().map(|row| row[w]).fold(f64::NEG_INFINITY, f64::max);
            assert_abs_diff_eq!(table.values[g], static_best / 0.1, epsilon = 1e-5);
        }
    }

    #[test]
    fn experimentation_beats_myopic_at_interior_belief() {
        let (problem, model) = bandit();
        let probs = vec![0.5, 0.5];
        let myopic = solve_policy(&problem, &model, PolicyMode::Myopic).unwrap();
        assert_eq!(myopic.act(&problem, &model, &probs).unwrap(), 0); // safe
        let dp = solve_policy(
            &problem,
            &model,
            PolicyMode::GridDp { resolution: 100, discount: 0.9 },
        )
        .unwrap();
        assert_eq!(dp.act(&problem, &model, &probs).unwrap(), 1); // risky
        // Three-step lookahead oracle with myopic terminal values agrees on
        // the direction.
        assert_eq!(three_step_oracle(&problem, &model, &probs), 1);
    }

    fn three_step_oracle(
        problem: &DecisionProblem,
        model: &SubjectiveModel,
        probs: &[f64],
    ) -> usize {
        let eu = subjective_eu_matrix(problem, model).unwrap();
        fn value(
            problem: &DecisionProblem,
            model: &SubjectiveModel,
            eu: &[Vec<f64>],
            probs: &[f64],
            depth: usize,
        ) -> f64 {
            let myopic_value = |p: &[f64]| {
                eu.iter().map(|row| belief_eu(row, p)).fold(f64::NEG_INFINITY, f64::max)
            };
            if depth == 0 {
                return myopic_value(probs) / (1.0 - problem.discount);
            }
            let mut best = f64::NEG_INFINITY;
            for a in 0..problem.n_actions() {
                let mut q = belief_eu(&eu[a], probs);
                for atom in 0..2 {
                    let y = Outcome::Atom(atom);
                    let mut post = Vec::new();
                    let mut pred = 0.0;
                    for w in 0..model.n_params() {
                        let mass = model.distribution(w, a).log_density(&y).unwrap().exp();
                        pred += probs[w] * mass;
                        post.push(probs[w] * mass);
                    }
                    for p in &mut post {
                        *p /= pred;
                    }
                    q += problem.discount * pred * value(problem, model, eu, &post, depth - 1);
                }
                best = best.max(q);
            }
            best
        }
        let per_action: Vec<f64> = (0..problem.n_actions())
            .map(|a| {
                let mut q = belief_eu(&eu[a], probs);
                for atom in 0..2 {
                    let y = Outcome::Atom(atom);
                    let mut post = Vec::new();
                    let mut pred = 0.0;
                    for w in 0..model.n_params() {
                        let mass = model.distribution(w, a).log_density(&y).unwrap().exp();
                        pred += probs[w] * mass;
                        post.push(probs[w] * mass);
                    }
                    for p in &mut post {
                        *p /= pred;
                    }
                    q += problem.discount * pred * value(&problem, model, &eu, &post, 2);
                }
                q
            })
            .collect();
        argmax_lowest(&per_action)
    }

    #[test]
    fn bellman_residuals_contract_at_rate_discount() {
        let (problem, model) = bandit();
        let dp = solve_policy(
            &problem,
            &model,
            PolicyMode::GridDp { resolution: 40, discount: 0.9 },
        )
        .unwrap();
        let res = &dp.dp_solution().unwrap().residuals;
        assert!(res.len() >= 3);
        for pair in res.windows(2) {
            if pair[0] > 1e-7 {
                assert!(
                    pair[1] <= 0.9 * pair[0] + 1e-9,
                    "residuals {:?} violate the contraction rate",
                    pair
                );
            }
        }
    }

    #[test]
    fn small_resolution_rejected() {
        let (problem, model) = bandit();
        assert!(solve_policy(
            &problem,
            &model,
            PolicyMode::GridDp { resolution: 1, discount: 0.5 }
        )
        .is_err());
    }
}
