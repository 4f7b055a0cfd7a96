//! Berk-Nash equilibrium enumeration over finite action and parameter sets,
//! classification (self-confirming, quasi-strict, uniformly quasi-strict),
//! p-absorption estimation, and local dominance / local KL-minimization
//! checks against a parametric family.
//!
//! Mixed equilibria are found by exact support-pattern enumeration: for a
//! candidate action support S and KL-minimizer subset O, the feasible
//! strategies form a polytope that is linear in sigma, and the supporting
//! beliefs form a polytope that is linear in pi. The two feasibility
//! problems decouple, so each (S, O) pair costs two small LPs. Feasible
//! patterns with intersecting strategy polytopes are merged into connected
//! components reported with a representative and an exact bounding box.
//! A strategy-simplex grid scan is kept as an independent oracle.

use serde::{Deserialize, Serialize};

use crate::dynamics::{monte_carlo, AbsorbSpec, ModelSlot, RunOptions, SwitcherConfig};
use crate::env::DecisionProblem;
use crate::model::{
    distributions_equal, dominance_moment, kl_minimizers, kl_table, log_ratio_mean, Belief,
    MomentValue, QFamily, SubjectiveModel, KL_MIN_TOL,
};
use crate::policy::{
    action_optimal_on_face, solve_policy, somewhere_optimal_witness, subjective_eu_matrix,
    PolicyMode, SimplexGrid, TIE_TOL,
};
use crate::simplex::{extremize_over_polytope, LpBuilder, LpOutcome, Relation};
use crate::Error;

/// Margins smaller than this (in absolute value) are flagged knife-edge
/// rather than asserted: ten times the working numerical tolerance.
pub const KNIFE_EDGE_TOL: f64 = 1e-8;

/// A mixed strategy over the problem's actions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Strategy {
    pub probs: Vec<f64>,
}

impl Strategy {
    pub fn pure(n_actions: usize, action: usize) -> Self {
        let mut probs = vec![0.0; n_actions];
        probs[action] = 1.0;
        Strategy { probs }
    }

    pub fn new(probs: Vec<f64>) -> Result<Self, Error> {
        if probs.iter().any(|&p| p < -TIE_TOL) {
            return Err(Error::InvalidConfig("strategy has negative weight".into()));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!("strategy sums to {sum}")));
        }
        Ok(Strategy { probs })
    }

    /// Support at tolerance 1e-9.
    pub fn support(&self) -> Vec<usize> {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > TIE_TOL)
            .map(|(a, _)| a)
            .collect()
    }

    pub fn is_pure(&self) -> Option<usize> {
        let support = self.support();
        if support.len() == 1 {
            Some(support[0])
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flags {
    pub bne: bool,
    pub quasi_strict: bool,
    pub uniformly_quasi_strict: bool,
    pub sce: bool,
    pub uniformly_quasi_strict_sce: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PAbsorbing {
    /// True when certified analytically (uniformly quasi-strict routes).
    pub certified: bool,
    pub estimate: Option<f64>,
    pub wilson95: Option<(f64, f64)>,
    pub n_paths: Option<u64>,
    pub horizon: Option<u64>,
    pub eps: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DominanceFailure {
    pub d: f64,
    pub action: usize,
    pub neighbor: Vec<f64>,
    pub against: Vec<f64>,
    pub moment: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalDominance {
    pub passed: bool,
    /// First moment order that certifies dominance, when one does.
    pub d: Option<f64>,
    pub eps: f64,
    pub d_candidates: Vec<f64>,
    /// For mixed records: whether the minimizer set is constant over the
    /// support sub-simplex (required for the mixed route).
    pub mixed_support_condition: Option<bool>,
    pub n_neighbors: usize,
    pub failure: Option<DominanceFailure>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KlWitness {
    pub minimizer: Vec<f64>,
    pub better_neighbor: Vec<f64>,
    /// sigma-weighted KL improvement of the neighbor (positive = strictly
    /// better fit).
    pub improvement: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalKlMinimizing {
    pub passed: bool,
    pub eps: f64,
    pub n_neighbors: usize,
    pub witnesses: Vec<KlWitness>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixedComponent {
    /// Actions appearing in any strategy of the component.
    pub support: Vec<usize>,
    /// Per-action exact [min, max] of sigma_a over the component polytopes.
    pub bounding_box: Vec<(f64, f64)>,
    /// Number of merged support patterns.
    pub n_patterns: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquilibriumRecord {
    pub strategy: Strategy,
    pub support: Vec<usize>,
    pub kl_minimizers: Vec<usize>,
    pub supporting_beliefs: Vec<Vec<f64>>,
    pub flags: Flags,
    pub knife_edge: bool,
    /// Optimality margin of the witness belief (for diagnostics).
    pub margin: f64,
    pub p_absorbing: Option<PAbsorbing>,
    pub local_dominance: Option<LocalDominance>,
    pub local_kl_minimizing: Option<LocalKlMinimizing>,
    pub component: Option<MixedComponent>,
}

/// Enumerate pure Berk-Nash equilibria: action a qualifies iff it is
/// somewhere-optimal on the face spanned by its KL minimizers.
pub fn enumerate_pure_bne(
    problem: &DecisionProblem,
    model: &SubjectiveModel,
) -> Result<Vec<EquilibriumRecord>, Error> {
    let eu = subjective_eu_matrix(problem, model)?;
    let mut records = Vec::new();
    for a in 0..problem.n_actions() {
        let sigma = Strategy::pure(problem.n_actions(), a);
        let minimizers = kl_minimizers(problem, model, &sigma.probs, KL_MIN_TOL)?;
        let (witness, margin) = somewhere_optimal_witness(&eu, a, &minimizers)?;
        if margin >= -TIE_TOL {
            records.push(EquilibriumRecord {
                strategy: sigma,
                support: vec![a],
                kl_minimizers: minimizers,
                supporting_beliefs: vec![witness],
                flags: Flags { bne: true, ..Flags::default() },
                knife_edge: margin.abs() < KNIFE_EDGE_TOL,
                // Infinite margins (no competing action) clamp to stay JSON
                // representable.
                margin: margin.min(f64::MAX),
                p_absorbing: None,
                local_dominance: None,
                local_kl_minimizing: None,
                component: None,
            });
        }
    }
    Ok(records)
}

/// One feasible (support, minimizer-subset) pattern.
#[derive(Debug, Clone)]
struct Pattern {
    support: Vec<usize>,
    minimizer_subset: Vec<usize>,
    sigma: Vec<f64>,
    interiority: f64,
    witness: Vec<f64>,
    witness_margin: f64,
}

fn subsets_up_to(n: usize, max_size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for mask in 1u32..(1 << n) {
        let size = mask.count_ones() as usize;
        if size <= max_size {
            out.push((0..n).filter(|i| mask & (1 << i) != 0).collect());
        }
    }
    out
}

/// Strategy polytope for a pattern: sigma on Delta(S) with every omega in O
/// a weighted-KL minimizer. Returns the interior representative that
/// maximizes min_a sigma_a, when it is strictly mixed.
fn sigma_polytope_representative(
    kl: &[Vec<f64>],
    support: &[usize],
    minimizer_subset: &[usize],
    n_params: usize,
) -> Result<Option<(Vec<f64>, f64)>, Error> {
    let ns = support.len();
    // Variables: sigma over S, then t split into positive/negative parts.
    let mut objective = vec![0.0; ns + 2];
    objective[ns] = 1.0;
    objective[ns + 1] = -1.0;
    let mut lp = LpBuilder::maximize(objective);
    let mut sum_row = vec![1.0; ns];
    sum_row.extend_from_slice(&[0.0, 0.0]);
    lp.constraint(sum_row, Relation::Eq, 1.0);
    let anchor = minimizer_subset[0];
    for &w in &minimizer_subset[1..] {
        let mut row: Vec<f64> =
            support.iter().map(|&a| kl[a][w] - kl[a][anchor]).collect();
        row.extend_from_slice(&[0.0, 0.0]);
        lp.constraint(row, Relation::Eq, 0.0);
    }
    for w in 0..n_params {
        if minimizer_subset.contains(&w) {
            continue;
        }
        let mut row: Vec<f64> =
            support.iter().map(|&a| kl[a][w] - kl[a][anchor]).collect();
        row.extend_from_slice(&[0.0, 0.0]);
        lp.constraint(row, Relation::Ge, 0.0);
    }
    // Interiority: sigma_a >= t for each supported action.
    for i in 0..ns {
        let mut row = vec![0.0; ns + 2];
        row[i] = 1.0;
        row[ns] = -1.0;
        row[ns + 1] = 1.0;
        lp.constraint(row, Relation::Ge, 0.0);
    }
    match lp.solve()? {
        LpOutcome::Optimal(sol) => {
            let t = sol.objective;
            if t <= TIE_TOL {
                return Ok(None);
            }
            Ok(Some((sol.x[..ns].to_vec(), t)))
        }
        LpOutcome::Infeasible => Ok(None),
        LpOutcome::Unbounded => Err(Error::Lp("sigma polytope unbounded".into())),
    }
}

/// Belief polytope for a pattern: pi on Delta(O) making every supported
/// action indifferent-and-weakly-dominant. Returns a witness and its margin.
fn belief_witness(
    eu: &[Vec<f64>],
    support: &[usize],
    minimizer_subset: &[usize],
) -> Result<Option<(Vec<f64>, f64)>, Error> {
    let n = minimizer_subset.len();
    let anchor = support[0];
    let eq_rows: Vec<Vec<f64>> = support[1..]
        .iter()
        .map(|&a| minimizer_subset.iter().map(|&w| eu[a][w] - eu[anchor][w]).collect())
        .collect();
    let ge_rows: Vec<Vec<f64>> = (0..eu.len())
        .filter(|b| !support.contains(b))
        .map(|b| minimizer_subset.iter().map(|&w| eu[anchor][w] - eu[b][w]).collect())
        .collect();
    let out = crate::simplex::max_margin_with_equalities(n, &eq_rows, &ge_rows)?;
    Ok(out.and_then(|(x, margin)| {
        if margin >= -TIE_TOL {
            let mut full = vec![0.0; eu[0].len()];
            for (xi, &w) in x.iter().zip(minimizer_subset) {
                full[w] = *xi;
            }
            Some((full, margin))
        } else {
            None
        }
    }))
}

/// Whether the strategy polytopes of two patterns intersect.
fn polytopes_intersect(
    kl: &[Vec<f64>],
    a: &Pattern,
    b: &Pattern,
    n_params: usize,
) -> Result<bool, Error> {
    let common: Vec<usize> =
        a.support.iter().copied().filter(|x| b.support.contains(x)).collect();
    if common.is_empty() {
        return Ok(false);
    }
    // sigma lives on the common support and must satisfy both minimizer
    // conditions.
    let mut eq_rows = Vec::new();
    let mut ge_rows = Vec::new();
    for pattern in [a, b] {
        let anchor = pattern.minimizer_subset[0];
        for &w in &pattern.minimizer_subset[1..] {
            eq_rows.push(
                common.iter().map(|&x| kl[x][w] - kl[x][anchor]).collect::<Vec<f64>>(),
            );
        }
        for w in 0..n_params {
            if pattern.minimizer_subset.contains(&w) {
                continue;
            }
            ge_rows.push(
                common.iter().map(|&x| kl[x][w] - kl[x][anchor]).collect::<Vec<f64>>(),
            );
        }
    }
    Ok(extremize_over_polytope(common.len(), &vec![0.0; common.len()], true, &eq_rows, &ge_rows)?
        .is_some())
}

/// Enumerate mixed Berk-Nash equilibria as connected components.
///
/// `grid_resolution` drives the independent grid-scan oracle exposed by
/// [`grid_scan_mixed`]; the enumeration itself is exact.
pub fn enumerate_mixed_bne(
    problem: &DecisionProblem,
    model: &SubjectiveModel,
) -> Result<Vec<EquilibriumRecord>, Error> {
    let eu = subjective_eu_matrix(problem, model)?;
    let kl = kl_table(problem, model)?;
    let n_actions = problem.n_actions();
    let n_params = model.n_params();

    let mut patterns: Vec<Pattern> = Vec::new();
    for support in subsets_up_to(n_actions, n_actions) {
        if support.len() < 2 {
            continue;
        }
        // A basic feasible witness never needs more parameters than actions.
        for minimizer_subset in subsets_up_to(n_params, n_actions) {
            let Some((sigma_s, interiority)) =
                sigma_polytope_representative(&kl, &support, &minimizer_subset, n_params)?
            else {
                continue;
            };
            let Some((witness, witness_margin)) =
                belief_witness(&eu, &support, &minimizer_subset)?
            else {
                continue;
            };
            let mut sigma = vec![0.0; n_actions];
            for (x, &a) in sigma_s.iter().zip(&support) {
                sigma[a] = *x;
            }
            patterns.push(Pattern {
                support: support.clone(),
                minimizer_subset,
                sigma,
                interiority,
                witness,
                witness_margin,
            });
        }
    }

    // Union-find over patterns by polytope intersection.
    let mut parent: Vec<usize> = (0..patterns.len()).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let root = find(parent, parent[i]);
            parent[i] = root;
        }
        parent[i]
    }
    for i in 0..patterns.len() {
        for j in (i + 1)..patterns.len() {
            if polytopes_intersect(&kl, &patterns[i], &patterns[j], n_params)? {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }

    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..patterns.len() {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(i);
    }

    let mut records = Vec::new();
    for group in groups.values() {
        // Representative: the most interior pattern strategy.
        let rep = group
            .iter()
            .copied()
            .max_by(|&i, &j| {
                patterns[i]
                    .interiority
                    .partial_cmp(&patterns[j].interiority)
                    .unwrap()
                    .then(patterns[j].support.len().cmp(&patterns[i].support.len()))
            })
            .expect("nonempty group");
        let rep_pattern = &patterns[rep];
        let mut support_union: Vec<usize> = group
            .iter()
            .flat_map(|&i| patterns[i].support.iter().copied())
            .collect();
        support_union.sort_unstable();
        support_union.dedup();

        let mut bounding_box = vec![(f64::INFINITY, f64::NEG_INFINITY); n_actions];
        for &i in group {
            let p = &patterns[i];
            let anchor = p.minimizer_subset[0];
            let mut eq_rows = Vec::new();
            let mut ge_rows = Vec::new();
            for &w in &p.minimizer_subset[1..] {
                eq_rows.push(
                    p.support.iter().map(|&a| kl[a][w] - kl[a][anchor]).collect::<Vec<f64>>(),
                );
            }
            for w in 0..n_params {
                if p.minimizer_subset.contains(&w) {
                    continue;
                }
                ge_rows.push(
                    p.support.iter().map(|&a| kl[a][w] - kl[a][anchor]).collect::<Vec<f64>>(),
                );
            }
            for a in 0..n_actions {
                let objective: Vec<f64> = p
                    .support
                    .iter()
                    .map(|&x| if x == a { 1.0 } else { 0.0 })
                    .collect();
                let lo =
                    extremize_over_polytope(p.support.len(), &objective, false, &eq_rows, &ge_rows)?
                        .unwrap_or(0.0);
                let hi =
                    extremize_over_polytope(p.support.len(), &objective, true, &eq_rows, &ge_rows)?
                        .unwrap_or(0.0);
                bounding_box[a].0 = bounding_box[a].0.min(lo);
                bounding_box[a].1 = bounding_box[a].1.max(hi);
            }
        }

        let strategy = Strategy::new(rep_pattern.sigma.clone())?;
        let minimizers = kl_minimizers(problem, model, &strategy.probs, KL_MIN_TOL)?;
        records.push(EquilibriumRecord {
            support: strategy.support(),
            kl_minimizers: minimizers,
            supporting_beliefs: vec![rep_pattern.witness.clone()],
            flags: Flags { bne: true, ..Flags::default() },
            knife_edge: rep_pattern.witness_margin.abs() < KNIFE_EDGE_TOL,
            margin: rep_pattern.witness_margin.min(f64::MAX),
            p_absorbing: None,
            local_dominance: None,
            local_kl_minimizing: None,
            component: Some(MixedComponent {
                support: support_union,
                bounding_box,
                n_patterns: group.len(),
            }),
            strategy,
        });
    }
    Ok(records)
}

/// Independent brute-force oracle: all strategy-grid points admitting a
/// supporting belief at exact minimizer tolerance.
pub fn grid_scan_mixed(
    problem: &DecisionProblem,
    model: &SubjectiveModel,
    resolution: usize,
) -> Result<Vec<Vec<f64>>, Error> {
    if resolution < 10 {
        return Err(Error::InvalidConfig(format!(
            "grid resolution {resolution} below 10 per simplex edge"
        )));
    }
    let eu = subjective_eu_matrix(problem, model)?;
    let grid = SimplexGrid::new(problem.n_actions(), resolution);
    let mut feasible = Vec::new();
    for sigma in grid.iter_points() {
        let strategy = Strategy { probs: sigma.clone() };
        let support = strategy.support();
        if support.len() < 2 {
            continue;
        }
        let minimizers = kl_minimizers(problem, model, &sigma, KL_MIN_TOL)?;
        if belief_witness(&eu, &support, &minimizers)?.is_some() {
            feasible.push(sigma);
        }
    }
    Ok(feasible)
}

/// Fill in the classification flags of a Berk-Nash record.
pub fn classify(
    problem: &DecisionProblem,
    model: &SubjectiveModel,
    record: &EquilibriumRecord,
) -> Result<EquilibriumRecord, Error> {
    let mut record = record.clone();
    if !record.flags.bne {
        return Ok(record);
    }
    let eu = subjective_eu_matrix(problem, model)?;
    let support = &record.support;
    let minimizers = &record.kl_minimizers;

    // Quasi-strict: some supporting belief whose myopic best set equals the
    // support exactly (strict margin against the complement).
    {
        let anchor = support[0];
        let eq_rows: Vec<Vec<f64>> = support[1..]
            .iter()
            .map(|&a| minimizers.iter().map(|&w| eu[a][w] - eu[anchor][w]).collect())
            .collect();
        let ge_rows: Vec<Vec<f64>> = (0..eu.len())
            .filter(|b| !support.contains(b))
            .map(|b| minimizers.iter().map(|&w| eu[anchor][w] - eu[b][w]).collect())
            .collect();
        if let Some((x, margin)) =
            crate::simplex::max_margin_with_equalities(minimizers.len(), &eq_rows, &ge_rows)?
        {
            if margin > TIE_TOL {
                record.flags.quasi_strict = true;
                let mut full = vec![0.0; model.n_params()];
                for (xi, &w) in x.iter().zip(minimizers) {
                    full[w] = *xi;
                }
                if !record.supporting_beliefs.contains(&full) {
                    record.supporting_beliefs.push(full);
                }
            } else if margin.abs() <= KNIFE_EDGE_TOL {
                record.knife_edge = true;
            }
        }
    }

    // Uniformly quasi-strict: every supported action optimal on the whole
    // minimizer face, and no outside action optimal anywhere on it.
    {
        let all_supported_on_face =
            support.iter().all(|&a| action_optimal_on_face(&eu, a, minimizers));
        let mut outside_never_optimal = true;
        for b in 0..eu.len() {
            if support.contains(&b) {
                continue;
            }
            let (_, margin) = somewhere_optimal_witness(&eu, b, minimizers)?;
            if margin >= -TIE_TOL {
                outside_never_optimal = false;
            }
            if margin.abs() <= KNIFE_EDGE_TOL {
                record.knife_edge = true;
            }
        }
        record.flags.uniformly_quasi_strict = all_supported_on_face && outside_never_optimal;
    }

    // Self-confirming: a supporting belief on parameters that reproduce the
    // true DGP exactly at every supported action.
    {
        let matching: Vec<usize> = minimizers
            .iter()
            .copied()
            .filter(|&w| {
                support
                    .iter()
                    .all(|&a| distributions_equal(&problem.true_dgp[a], model.distribution(w, a)))
            })
            .collect();
        if !matching.is_empty() {
            if let Some((x, margin)) = belief_witness(&eu, support, &matching)? {
                if margin >= -TIE_TOL {
                    record.flags.sce = true;
                    if !record.supporting_beliefs.contains(&x) {
                        record.supporting_beliefs.push(x);
                    }
                }
            }
        }
    }

    record.flags.uniformly_quasi_strict_sce =
        record.flags.uniformly_quasi_strict && record.flags.sce;
    Ok(record)
}

/// Estimate (or certify) p-absorption of a classified record.
///
/// Uniformly quasi-strict equilibria are certified without simulation.
/// Otherwise a dogmatic modeler is simulated from a prior placing mass
/// 1 - eps on the KL minimizers (spread as the witness belief suggests);
/// the estimate is one-sided evidence, never a negative certificate.
pub fn estimate_p_absorbing(
    problem: &DecisionProblem,
    model: &SubjectiveModel,
    record: &EquilibriumRecord,
    eps: f64,
    n_paths: u64,
    horizon: u64,
    seed: u64,
) -> Result<EquilibriumRecord, Error> {
    let mut record = record.clone();
    if !record.flags.bne {
        return Ok(record);
    }
    if record.flags.uniformly_quasi_strict {
        record.p_absorbing = Some(PAbsorbing {
            certified: true,
            estimate: None,
            wilson95: None,
            n_paths: None,
            horizon: None,
            eps: None,
        });
        return Ok(record);
    }
    let witness = record
        .supporting_beliefs
        .first()
        .cloned()
        .unwrap_or_else(|| vec![1.0 / model.n_params() as f64; model.n_params()]);
    let n = model.n_params() as f64;
    let prior: Vec<f64> =
        witness.iter().map(|w| (1.0 - eps) * w + eps / n).collect();
    let slot = ModelSlot::new(
        model.clone(),
        Belief::new(model.id.clone(), prior)?,
        solve_policy(problem, model, PolicyMode::Myopic)?,
    )?;
    let mut config = SwitcherConfig::new(problem.clone(), slot, vec![], 2.0)?.dogmatic();
    config.absorb_check = Some(AbsorbSpec {
        support: record.support.clone(),
        params: record.kl_minimizers.clone(),
        eps,
    });
    let out = monte_carlo(&config, n_paths, horizon, seed, &RunOptions::default())?;
    let report = out.summary.absorb.expect("absorb check configured");
    record.p_absorbing = Some(PAbsorbing {
        certified: false,
        estimate: Some(report.frequency),
        wilson95: Some(report.wilson95),
        n_paths: Some(n_paths),
        horizon: Some(horizon),
        eps: Some(eps),
    });
    Ok(record)
}

/// Default moment orders tried for local dominance.
pub const DEFAULT_D_CANDIDATES: [f64; 3] = [1.0, 0.5, 2.0];

/// Check local dominance of the model at a record's strategy with respect to
/// a q-family grid neighborhood of the KL minimizers.
pub fn check_local_dominance(
    problem: &DecisionProblem,
    family: &QFamily,
    model: &SubjectiveModel,
    record: &EquilibriumRecord,
    eps: Option<f64>,
    d_candidates: &[f64],
) -> Result<EquilibriumRecord, Error> {
    let mut record = record.clone();
    let eps = eps.unwrap_or_else(|| family.default_radius());
    let d_candidates =
        if d_candidates.is_empty() { DEFAULT_D_CANDIDATES.to_vec() } else { d_candidates.to_vec() };

    // Mixed strategies need the minimizer set to be constant across the
    // support sub-simplex; vertex checks certify this by linearity.
    let mixed_support_condition = if record.support.len() > 1 {
        let mut ok = true;
        for &a in &record.support {
            let vertex = Strategy::pure(problem.n_actions(), a);
            let m = kl_minimizers(problem, model, &vertex.probs, KL_MIN_TOL)?;
            if m != record.kl_minimizers {
                ok = false;
            }
        }
        Some(ok)
    } else {
        None
    };

    let centers: Vec<Vec<f64>> = record
        .kl_minimizers
        .iter()
        .map(|&w| family.embed(&model.parameters[w]))
        .collect();
    let neighbors = family.neighborhood(&centers, eps);
    let n_neighbors = neighbors.len();

    let mut passing_d = None;
    let mut failure = None;
    if mixed_support_condition != Some(false) {
        'outer: for &d in &d_candidates {
            for center in &centers {
                for neighbor in &neighbors {
                    for &a in &record.support {
                        let m = dominance_moment(problem, family, a, neighbor, center, d)?;
                        let bad = match m {
                            MomentValue::Finite(v) => v > 1.0 + TIE_TOL,
                            MomentValue::Divergent => true,
                        };
                        if bad {
                            failure = Some(DominanceFailure {
                                d,
                                action: a,
                                neighbor: (*neighbor).clone(),
                                against: center.clone(),
                                moment: m.finite(),
                            });
                            continue 'outer;
                        }
                    }
                }
            }
            passing_d = Some(d);
            failure = None;
            break;
        }
    }

    record.local_dominance = Some(LocalDominance {
        passed: passing_d.is_some(),
        d: passing_d,
        eps,
        d_candidates,
        mixed_support_condition,
        n_neighbors,
        failure,
    });
    Ok(record)
}

/// Check local KL-minimization of the model at a record's strategy with
/// respect to a q-family grid neighborhood of the KL minimizers.
pub fn check_locally_kl_minimizing(
    problem: &DecisionProblem,
    family: &QFamily,
    model: &SubjectiveModel,
    record: &EquilibriumRecord,
    eps: Option<f64>,
) -> Result<EquilibriumRecord, Error> {
    let mut record = record.clone();
    let eps = eps.unwrap_or_else(|| family.default_radius());
    let centers: Vec<Vec<f64>> = record
        .kl_minimizers
        .iter()
        .map(|&w| family.embed(&model.parameters[w]))
        .collect();
    let neighbors = family.neighborhood(&centers, eps);
    let mut witnesses = Vec::new();
    for center in &centers {
        for neighbor in &neighbors {
            // sigma-weighted E ln(q(neighbor)/q(center)) under the truth.
            let mut weighted = 0.0;
            for (a, &w) in record.strategy.probs.iter().enumerate() {
                if w > 0.0 {
                    weighted += w * log_ratio_mean(problem, family, a, neighbor, center)?;
                }
            }
            if weighted > TIE_TOL && witnesses.len() < 16 {
                witnesses.push(KlWitness {
                    minimizer: center.clone(),
                    better_neighbor: (*neighbor).clone(),
                    improvement: weighted,
                });
            }
        }
    }
    record.local_kl_minimizing = Some(LocalKlMinimizing {
        passed: witnesses.is_empty(),
        eps,
        n_neighbors: neighbors.len(),
        witnesses,
    });
    Ok(record)
}

/// Enumerate and classify all equilibria (pure plus mixed components).
pub fn enumerate_and_classify(
    problem: &DecisionProblem,
    model: &SubjectiveModel,
) -> Result<Vec<EquilibriumRecord>, Error> {
    let mut records = enumerate_pure_bne(problem, model)?;
    records.extend(enumerate_mixed_bne(problem, model)?);
    records
        .into_iter()
        .map(|r| classify(problem, model, &r))
        .collect()
}
