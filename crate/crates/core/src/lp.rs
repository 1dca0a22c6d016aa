//! Exact rational linear programming.
//!
//! A dense two-phase simplex over `BigRational` with Bland's anti-cycling
//! rule. Variables are free; they are split into non-negative pairs
//! internally. This is used for region feasibility certificates, pointedness
//! checks, and the norm-minimization subproblems — all of which are tiny, so
//! a dense exact tableau is the right trade-off.

use crate::error::Error;
use crate::scalar::{rat, Rat};
use num_traits::{Signed, Zero};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Cmp {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub coeffs: Vec<Rat>,
    pub cmp: Cmp,
    pub rhs: Rat,
}

impl Constraint {
    pub fn new(coeffs: Vec<Rat>, cmp: Cmp, rhs: Rat) -> Self {
        Constraint { coeffs, cmp, rhs }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LpOutcome {
    Infeasible,
    Unbounded,
    Optimal { value: Rat, point: Vec<Rat> },
}

/// Maximizes `objective . x` over free variables subject to `constraints`.
pub fn maximize(objective: &[Rat], constraints: &[Constraint]) -> Result<LpOutcome, Error> {
    let n = objective.len();
    for c in constraints {
        if c.coeffs.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: c.coeffs.len(),
            });
        }
    }
    // Split x_i = u_i - v_i with u, v >= 0: columns 0..n are u, n..2n are v.
    let split = |coeffs: &[Rat]| -> Vec<Rat> {
        let mut row = Vec::with_capacity(2 * n);
        row.extend(coeffs.iter().cloned());
        row.extend(coeffs.iter().map(|c| -c.clone()));
        row
    };
    let mut tab = Tableau::new(2 * n);
    for c in constraints {
        tab.add_row(split(&c.coeffs), c.cmp, c.rhs.clone());
    }
    match tab.solve(&split(objective))? {
        TabOutcome::Infeasible => Ok(LpOutcome::Infeasible),
        TabOutcome::Unbounded => Ok(LpOutcome::Unbounded),
        TabOutcome::Optimal { value, point } => {
            let x: Vec<Rat> = (0..n)
                .map(|i| point[i].clone() - point[n + i].clone())
                .collect();
            Ok(LpOutcome::Optimal { value, point: x })
        }
    }
}

/// Minimizes `objective . x` over free variables subject to `constraints`.
pub fn minimize(objective: &[Rat], constraints: &[Constraint]) -> Result<LpOutcome, Error> {
    let negated: Vec<Rat> = objective.iter().map(|c| -c.clone()).collect();
    Ok(match maximize(&negated, constraints)? {
        LpOutcome::Optimal { value, point } => LpOutcome::Optimal {
            value: -value,
            point,
        },
        other => other,
    })
}

/// A feasible point of the constraint system, if one exists.
pub fn feasible_point(nvars: usize, constraints: &[Constraint]) -> Result<Option<Vec<Rat>>, Error> {
    match maximize(&vec![rat(0); nvars], constraints)? {
        LpOutcome::Optimal { point, .. } => Ok(Some(point)),
        LpOutcome::Infeasible => Ok(None),
        LpOutcome::Unbounded => Err(Error::LpFailure(
            "zero objective cannot be unbounded".into(),
        )),
    }
}

enum TabOutcome {
    Infeasible,
    Unbounded,
    Optimal { value: Rat, point: Vec<Rat> },
}

/// Simplex tableau over non-negative structural variables.
struct Tableau {
    nstruct: usize,
    /// Row-major: each row is structural coeffs ++ slack coeffs, built lazily.
    rows: Vec<Vec<Rat>>,
    rhs: Vec<Rat>,
    cmps: Vec<Cmp>,
}

impl Tableau {
    fn new(nstruct: usize) -> Self {
        Tableau {
            nstruct,
            rows: Vec::new(),
            rhs: Vec::new(),
            cmps: Vec::new(),
        }
    }

    fn add_row(&mut self, coeffs: Vec<Rat>, cmp: Cmp, rhs: Rat) {
        self.rows.push(coeffs);
        self.rhs.push(rhs);
        self.cmps.push(cmp);
    }

    fn solve(&self, objective: &[Rat]) -> Result<TabOutcome, Error> {
        let m = self.rows.len();
        let n = self.nstruct;
        // Column layout: structural | slacks (one per inequality) | artificials.
        let nslack = self.cmps.iter().filter(|c| !matches!(c, Cmp::Eq)).count();
        // Normalize rows to b >= 0, attach slack, decide on artificials.
        let mut a: Vec<Vec<Rat>> = Vec::with_capacity(m);
        let mut b: Vec<Rat> = Vec::with_capacity(m);
        let mut basis: Vec<usize> = Vec::with_capacity(m);
        let mut nart = 0usize;
        let mut slack_idx = 0usize;
        // First pass to count artificials so total width is known.
        let mut plans: Vec<(bool, Option<(usize, Rat)>)> = Vec::with_capacity(m);
        for i in 0..m {
            let neg = self.rhs[i].is_negative();
            let slack = match self.cmps[i] {
                Cmp::Eq => None,
                Cmp::Le => {
                    let s = if neg { rat(-1) } else { rat(1) };
                    Some((slack_idx, s))
                }
                Cmp::Ge => {
                    let s = if neg { rat(1) } else { rat(-1) };
                    Some((slack_idx, s))
                }
            };
            if slack.is_some() {
                slack_idx += 1;
            }
            // The slack column can serve as the initial basic variable only
            // if its coefficient is +1 after sign normalization.
            let basic_slack = matches!(&slack, Some((_, s)) if s == &rat(1));
            if !basic_slack {
                nart += 1;
            }
            plans.push((neg, slack));
        }
        let width = n + nslack + nart;
        let mut art_idx = n + nslack;
        for i in 0..m {
            let (neg, ref slack) = plans[i];
            let mut row = vec![rat(0); width];
            for (j, c) in self.rows[i].iter().enumerate() {
                row[j] = if neg { -c.clone() } else { c.clone() };
            }
            let bi = if neg {
                -self.rhs[i].clone()
            } else {
                self.rhs[i].clone()
            };
            let mut basic = None;
            if let Some((si, sc)) = slack {
                row[n + si] = sc.clone();
                if sc == &rat(1) {
                    basic = Some(n + si);
                }
            }
            if basic.is_none() {
                row[art_idx] = rat(1);
                basic = Some(art_idx);
                art_idx += 1;
            }
            a.push(row);
            b.push(bi);
            basis.push(basic.unwrap());
        }
        let art_start = n + nslack;

        // Phase 1: maximize -sum(artificials).
        if nart > 0 {
            let mut cost = vec![rat(0); width];
            for j in art_start..width {
                cost[j] = rat(-1);
            }
            let mut value = rat(0);
            price_out(&mut cost, &mut value, &a, &b, &basis);
            run_simplex(&mut a, &mut b, &mut basis, &mut cost, &mut value)?;
            if value.is_negative() {
                return Ok(TabOutcome::Infeasible);
            }
            // Drive remaining artificials out of the basis.
            for r in 0..a.len() {
                if basis[r] >= art_start {
                    if let Some(j) = (0..art_start).find(|&j| !a[r][j].is_zero()) {
                        pivot(&mut a, &mut b, &mut basis, None, r, j);
                    }
                }
            }
            // Rows still basic in an artificial are redundant zero rows.
            let keep: Vec<usize> = (0..a.len()).filter(|&r| basis[r] < art_start).collect();
            a = keep.iter().map(|&r| a[r].clone()).collect();
            b = keep.iter().map(|&r| b[r].clone()).collect();
            basis = keep.iter().map(|&r| basis[r]).collect();
            for row in &mut a {
                row.truncate(art_start);
            }
        }
        let width = art_start;

        // Phase 2.
        let mut cost = vec![rat(0); width];
        for (j, c) in objective.iter().enumerate() {
            cost[j] = c.clone();
        }
        let mut value = rat(0);
        price_out(&mut cost, &mut value, &a, &b, &basis);
        if !run_simplex(&mut a, &mut b, &mut basis, &mut cost, &mut value)? {
            return Ok(TabOutcome::Unbounded);
        }
        let mut point = vec![rat(0); width];
        for (r, &j) in basis.iter().enumerate() {
            point[j] = b[r].clone();
        }
        point.truncate(n);
        Ok(TabOutcome::Optimal { value, point })
    }
}

/// Makes the cost row consistent with the current basis (zero reduced cost
/// on basic columns), accumulating the objective value.
fn price_out(cost: &mut [Rat], value: &mut Rat, a: &[Vec<Rat>], b: &[Rat], basis: &[usize]) {
    for (r, &j) in basis.iter().enumerate() {
        if !cost[j].is_zero() {
            let f = cost[j].clone();
            for k in 0..cost.len() {
                let delta = &f * &a[r][k];
                cost[k] -= delta;
            }
            *value += &f * &b[r];
        }
    }
}

fn pivot(
    a: &mut [Vec<Rat>],
    b: &mut [Rat],
    basis: &mut [usize],
    cost_value: Option<(&mut [Rat], &mut Rat)>,
    r: usize,
    j: usize,
) {
    let p = a[r][j].clone();
    for x in a[r].iter_mut() {
        *x /= &p;
    }
    b[r] /= &p;
    for i in 0..a.len() {
        if i == r || a[i][j].is_zero() {
            continue;
        }
        let f = a[i][j].clone();
        for k in 0..a[i].len() {
            let delta = &f * &a[r][k];
            a[i][k] -= delta;
        }
        let delta = &f * &b[r];
        b[i] -= delta;
    }
    if let Some((cost, value)) = cost_value {
        if !cost[j].is_zero() {
            let f = cost[j].clone();
            for k in 0..cost.len() {
                let delta = &f * &a[r][k];
                cost[k] -= delta;
            }
            *value += &f * &b[r];
        }
    }
    basis[r] = j;
}

/// Runs simplex iterations with Bland's rule. Returns `false` on an
/// unbounded direction.
fn run_simplex(
    a: &mut Vec<Vec<Rat>>,
    b: &mut Vec<Rat>,
    basis: &mut Vec<usize>,
    cost: &mut Vec<Rat>,
    value: &mut Rat,
) -> Result<bool, Error> {
    loop {
        // Bland: entering column is the smallest index with positive reduced cost.
        let enter = match cost.iter().position(|c| c.is_positive()) {
            Some(j) => j,
            None => return Ok(true),
        };
        // Ratio test; Bland tie-break on smallest basic variable index.
        let mut best: Option<(Rat, usize, usize)> = None;
        for r in 0..a.len() {
            if a[r][enter].is_positive() {
                let ratio = &b[r] / &a[r][enter];
                let better = match &best {
                    None => true,
                    Some((br, bvar, _)) => ratio < *br || (ratio == *br && basis[r] < *bvar),
                };
                if better {
                    best = Some((ratio, basis[r], r));
                }
            }
        }
        match best {
            None => return Ok(false),
            Some((_, _, r)) => pivot(a, b, basis, Some((cost, value)), r, enter),
        }
    }
}
