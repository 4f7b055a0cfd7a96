//! Textbook two-phase simplex on dense tableaus with Bland pivoting.
//!
//! The instances here are tiny (a handful of variables, a handful of rows),
//! so determinism wins over speed. All structural variables are nonnegative;
//! callers split free variables into positive and negative parts.

use crate::Error;

const PIVOT_EPS: f64 = 1e-11;
const FEAS_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

#[derive(Debug, Clone)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn optimal(&self) -> Option<&LpSolution> {
        match self {
            LpOutcome::Optimal(s) => Some(s),
            _ => None,
        }
    }
}

/// maximize objective . x subject to rows, x >= 0.
#[derive(Debug, Clone)]
pub struct LpBuilder {
    n: usize,
    objective: Vec<f64>,
    rows: Vec<(Vec<f64>, Relation, f64)>,
}

impl LpBuilder {
    pub fn maximize(objective: Vec<f64>) -> Self {
        LpBuilder { n: objective.len(), objective, rows: Vec::new() }
    }

    pub fn constraint(&mut self, coefs: Vec<f64>, rel: Relation, rhs: f64) -> &mut Self {
        debug_assert_eq!(coefs.len(), self.n);
        self.rows.push((coefs, rel, rhs));
        self
    }

    pub fn solve(&self) -> Result<LpOutcome, Error> {
        let n = self.n;
        let m = self.rows.len();
        let n_slack = self.rows.iter().filter(|(_, r, _)| *r != Relation::Eq).count();
        let total = n + n_slack + m; // structural + slack/surplus + artificial
        let art0 = n + n_slack;

        // Tableau rows: [structural | slack | artificial | rhs]
        let mut tab = vec![vec![0.0; total + 1]; m];
        let mut basis = vec![0usize; m];
        let mut slack_idx = n;
        for (i, (coefs, rel, rhs)) in self.rows.iter().enumerate() {
            let mut row = vec![0.0; total + 1];
            let flip = *rhs < 0.0;
            let sign = if flip { -1.0 } else { 1.0 };
            for (j, &c) in coefs.iter().enumerate() {
                row[j] = sign * c;
            }
            row[total] = sign * rhs;
            match rel {
                Relation::Le => {
                    row[slack_idx] = sign;
                    slack_idx += 1;
                }
                Relation::Ge => {
                    row[slack_idx] = -sign;
                    slack_idx += 1;
                }
                Relation::Eq => {}
            }
            row[art0 + i] = 1.0;
            basis[i] = art0 + i;
            tab[i] = row;
        }

        // Phase 1: minimize the sum of artificials.
        let mut phase1 = vec![0.0; total];
        for j in art0..total {
            phase1[j] = 1.0;
        }
        let p1 = run_simplex(&mut tab, &mut basis, &phase1, total, |_| true)?;
        if p1 > FEAS_EPS {
            return Ok(LpOutcome::Infeasible);
        }
        // Drive basic artificials out where a structural/slack pivot exists.
        for i in 0..m {
            if basis[i] >= art0 {
                if let Some(j) = (0..art0).find(|&j| tab[i][j].abs() > PIVOT_EPS) {
                    pivot(&mut tab, &mut basis, i, j);
                }
            }
        }

        // Phase 2: minimize -objective over non-artificial columns.
        let mut phase2 = vec![0.0; total];
        for j in 0..n {
            phase2[j] = -self.objective[j];
        }
        let allowed = |j: usize| j < art0;
        let neg_obj = run_simplex_bounded(&mut tab, &mut basis, &phase2, total, allowed)?;
        let neg_obj = match neg_obj {
            Some(v) => v,
            None => return Ok(LpOutcome::Unbounded),
        };
        let mut x = vec![0.0; n];
        for (i, &b) in basis.iter().enumerate() {
            if b < n {
                x[b] = tab[i][total];
            }
        }
        Ok(LpOutcome::Optimal(LpSolution { x, objective: -neg_obj }))
    }
}

/// Bland-rule simplex minimizing cost . x_B; panics-free, returns objective.
fn run_simplex(
    tab: &mut [Vec<f64>],
    basis: &mut [usize],
    cost: &[f64],
    total: usize,
    allowed: impl Fn(usize) -> bool,
) -> Result<f64, Error> {
    match run_simplex_bounded(tab, basis, cost, total, allowed)? {
        Some(v) => Ok(v),
        None => Err(Error::Lp("phase-1 problem cannot be unbounded".into())),
    }
}

/// Returns None when unbounded.
fn run_simplex_bounded(
    tab: &mut [Vec<f64>],
    basis: &mut [usize],
    cost: &[f64],
    total: usize,
    allowed: impl Fn(usize) -> bool,
) -> Result<Option<f64>, Error> {
    let m = tab.len();
    let max_iters = 50_000usize;
    for _ in 0..max_iters {
        // Reduced costs: c_j - c_B . B^{-1} A_j, computed from the tableau.
        let mut entering = None;
        for j in 0..total {
            if !allowed(j) || basis.contains(&j) {
                continue;
            }
            let mut red = cost[j];
            for i in 0..m {
                red -= cost[basis[i]] * tab[i][j];
            }
            if red < -1e-9 {
                entering = Some(j);
                break; // Bland: lowest index
            }
        }
        let j = match entering {
            Some(j) => j,
            None => {
                let mut obj = 0.0;
                for i in 0..m {
                    obj += cost[basis[i]] * tab[i][total];
                }
                return Ok(Some(obj));
            }
        };
        // Ratio test, ties broken by lowest basis variable index (Bland).
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            if tab[i][j] > PIVOT_EPS {
                let ratio = tab[i][total] / tab[i][j];
                match leave {
                    None => leave = Some((i, ratio)),
                    Some((bi, br)) => {
                        if ratio < br - PIVOT_EPS
                            || ((ratio - br).abs() <= PIVOT_EPS && basis[i] < basis[bi])
                        {
                            leave = Some((i, ratio));
                        }
                    }
                }
            }
        }
        let (i, _) = match leave {
            Some(l) => l,
            None => return Ok(None),
        };
        pivot(tab, basis, i, j);
    }
    Err(Error::Lp("simplex iteration cap exceeded".into()))
}

fn pivot(tab: &mut [Vec<f64>], basis: &mut [usize], row: usize, col: usize) {
    let m = tab.len();
    let width = tab[0].len();
    let p = tab[row][col];
    for v in tab[row].iter_mut() {
        *v /= p;
    }
    for i in 0..m {
        if i != row {
            let factor = tab[i][col];
            if factor != 0.0 {
                for j in 0..width {
                    let delta = factor * tab[row][j];
                    tab[i][j] -= delta;
                }
            }
        }
    }
    basis[row] = col;
}

/// maximize t subject to: x in the probability simplex over `n` points and
/// rows . x >= t for each row. Returns (x, t). Always feasible; an empty row
/// set leaves t unconstrained and reports an infinite margin.
///
/// This is the workhorse for "is action a optimal somewhere on this face"
/// style questions: rows are utility differences.
pub fn max_min_margin(n: usize, rows: &[Vec<f64>]) -> Result<(Vec<f64>, f64), Error> {
    if rows.is_empty() {
        let mut x = vec![0.0; n];
        x[0] = 1.0;
        return Ok((x, f64::INFINITY));
    }
    // Variables: x (n), t = tp - tm.
    let mut objective = vec![0.0; n + 2];
    objective[n] = 1.0;
    objective[n + 1] = -1.0;
    let mut lp = LpBuilder::maximize(objective);
    let mut simplex_row = vec![1.0; n];
    simplex_row.extend_from_slice(&[0.0, 0.0]);
    lp.constraint(simplex_row, Relation::Eq, 1.0);
    for row in rows {
        debug_assert_eq!(row.len(), n);
        let mut r = row.clone();
        r.extend_from_slice(&[-1.0, 1.0]);
        lp.constraint(r, Relation::Ge, 0.0);
    }
    match lp.solve()? {
        LpOutcome::Optimal(sol) => Ok((sol.x[..n].to_vec(), sol.objective)),
        LpOutcome::Unbounded => Err(Error::Lp("bounded-by-construction program unbounded".into())),
        LpOutcome::Infeasible => Err(Error::Lp("simplex-feasible program reported infeasible".into())),
    }
}

/// maximize t subject to x in the simplex over n points, eq_rows . x = 0,
/// ge_rows . x >= t. Returns None when infeasible. With no ge rows this is a
/// pure feasibility problem and the margin is reported as infinite.
pub fn max_margin_with_equalities(
    n: usize,
    eq_rows: &[Vec<f64>],
    ge_rows: &[Vec<f64>],
) -> Result<Option<(Vec<f64>, f64)>, Error> {
    if ge_rows.is_empty() {
        let feasible = extremize_over_polytope(n, &vec![0.0; n], true, eq_rows, &[])?;
        if feasible.is_none() {
            return Ok(None);
        }
        // Recover a witness point via a harmless objective.
        let mut lp = LpBuilder::maximize(vec![0.0; n]);
        lp.constraint(vec![1.0; n], Relation::Eq, 1.0);
        for row in eq_rows {
            lp.constraint(row.clone(), Relation::Eq, 0.0);
        }
        return match lp.solve()? {
            LpOutcome::Optimal(sol) => Ok(Some((sol.x[..n].to_vec(), f64::INFINITY))),
            _ => Ok(None),
        };
    }
    let mut objective = vec![0.0; n + 2];
    objective[n] = 1.0;
    objective[n + 1] = -1.0;
    let mut lp = LpBuilder::maximize(objective);
    let mut simplex_row = vec![1.0; n];
    simplex_row.extend_from_slice(&[0.0, 0.0]);
    lp.constraint(simplex_row, Relation::Eq, 1.0);
    for row in eq_rows {
        let mut r = row.clone();
        r.extend_from_slice(&[0.0, 0.0]);
        lp.constraint(r, Relation::Eq, 0.0);
    }
    for row in ge_rows {
        let mut r = row.clone();
        r.extend_from_slice(&[-1.0, 1.0]);
        lp.constraint(r, Relation::Ge, 0.0);
    }
    match lp.solve()? {
        LpOutcome::Optimal(sol) => Ok(Some((sol.x[..n].to_vec(), sol.objective))),
        LpOutcome::Infeasible => Ok(None),
        LpOutcome::Unbounded => Err(Error::Lp("margin program unbounded".into())),
    }
}

/// Minimize or maximize a linear functional over {x in simplex : eq . x = 0,
/// ge . x >= 0}. Returns None when infeasible.
pub fn extremize_over_polytope(
    n: usize,
    objective: &[f64],
    maximize: bool,
    eq_rows: &[Vec<f64>],
    ge_rows: &[Vec<f64>],
) -> Result<Option<f64>, Error> {
    let sign = if maximize { 1.0 } else { -1.0 };
    let obj: Vec<f64> = objective.iter().map(|c| sign * c).collect();
    let mut lp = LpBuilder::maximize(obj);
    lp.constraint(vec![1.0; n], Relation::Eq, 1.0);
    for row in eq_rows {
        lp.constraint(row.clone(), Relation::Eq, 0.0);
    }
    for row in ge_rows {
        lp.constraint(row.clone(), Relation::Ge, 0.0);
    }
    match lp.solve()? {
        LpOutcome::Optimal(sol) => Ok(Some(sign * sol.objective)),
        LpOutcome::Infeasible => Ok(None),
        LpOutcome::Unbounded => Err(Error::Lp("simplex-bounded program unbounded".into())),
    }
}
