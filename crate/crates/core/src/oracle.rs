//! Brute-force counting oracles and the differential test harness.
//!
//! The oracles are deliberately naive: exhaustive enumeration with just
//! enough pruning to finish on desk-scale inputs. `diff_test` compares a
//! symbolic box spline against the matching oracle on a full grid and
//! reports every mismatch exactly.

use crate::dio::{self, DioSystem};
use crate::dm::{self, DMInstance};
use crate::error::Error;
use crate::scalar::{self, int, rat_of, Int, Rat};
use crate::semilinear::{self, GrowthSpec, SemiSimpleSet};
use crate::spline::BoxSpline;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Exhaustive count of `{x in N^k : matrix x + offsets = n}` for an all-Eq
/// system. Depth-first: the bound on each variable is the minimum over rows
/// with a positive coefficient of the remaining budget divided by it.
pub fn oracle_count_nonneg(sys: &DioSystem, n: &[Int]) -> Result<Int, Error> {
    sys.validate()?;
    if !sys.is_all_eq() {
        return Err(Error::InvalidInput(
            "counting oracle requires an all-equality system".into(),
        ));
    }
    if n.len() != sys.rows {
        return Err(Error::DimensionMismatch {
            expected: sys.rows,
            got: n.len(),
        });
    }
    for j in 0..sys.cols {
        if (0..sys.rows).all(|i| sys.matrix[i][j].is_zero()) {
            return Err(Error::ZeroColumn(j));
        }
    }
    let mut residual: Vec<Int> = (0..sys.rows).map(|i| &n[i] - &sys.offsets[i]).collect();
    let mut count = int(0);
    dfs_eq(sys, 0, &mut residual, &mut count);
    Ok(count)
}

fn dfs_eq(sys: &DioSystem, j: usize, residual: &mut Vec<Int>, count: &mut Int) {
    if residual.iter().any(|r| r.is_negative()) {
        return;
    }
    if j == sys.cols {
        if residual.iter().all(|r| r.is_zero()) {
            *count += 1;
        }
        return;
    }
    let mut bound: Option<Int> = None;
    for i in 0..sys.rows {
        let a = &sys.matrix[i][j];
        if a.is_positive() {
            let q = residual[i].div_floor(a);
            bound = Some(match bound {
                Some(b) => b.min(q),
                None => q,
            });
        }
    }
    let bound = bound.expect("zero columns are rejected upfront");
    let mut x = int(0);
    while x <= bound {
        dfs_eq(sys, j + 1, residual, count);
        if x == bound {
            break;
        }
        for i in 0..sys.rows {
            residual[i] -= &sys.matrix[i][j];
        }
        x += 1;
    }
    // restore the residuals mutated by the loop above
    for i in 0..sys.rows {
        let d = &sys.matrix[i][j] * &bound;
        residual[i] += d;
    }
}

/// Exhaustive count of `{X in N^n : A X = b}` for a pointed mixed-sign
/// matrix, scanning the box `[0, floor(h * max|b_j|)]^n` with interval
/// pruning per row.
pub fn oracle_count_pointed(matrix: &[Vec<Int>], b: &[Int], h: &Rat) -> Result<Int, Error> {
    let t = matrix.len();
    let n = matrix.first().map(|r| r.len()).unwrap_or(0);
    if b.len() != t {
        return Err(Error::DimensionMismatch {
            expected: t,
            got: b.len(),
        });
    }
    let maxabs = b.iter().map(|v| v.abs()).max().unwrap_or_else(|| int(0));
    let cap = scalar::rat_floor(&(h * rat_of(&maxabs))).max(int(0));
    // per-row reachable range of the suffix columns j..n over the box
    let mut lo = vec![vec![int(0); t]; n + 1];
    let mut hi = vec![vec![int(0); t]; n + 1];
    for j in (0..n).rev() {
        for i in 0..t {
            let c = &matrix[i][j] * &cap;
            lo[j][i] = &lo[j + 1][i] + c.clone().min(int(0));
            hi[j][i] = &hi[j + 1][i] + c.max(int(0));
        }
    }
    let mut residual = b.to_vec();
    let mut count = int(0);
    dfs_pointed(matrix, &cap, &lo, &hi, 0, &mut residual, &mut count);
    Ok(count)
}

fn dfs_pointed(
    matrix: &[Vec<Int>],
    cap: &Int,
    lo: &[Vec<Int>],
    hi: &[Vec<Int>],
    j: usize,
    residual: &mut Vec<Int>,
    count: &mut Int,
) {
    let t = matrix.len();
    let n = matrix.first().map(|r| r.len()).unwrap_or(0);
    for i in 0..t {
        if residual[i] < lo[j][i] || residual[i] > hi[j][i] {
            return;
        }
    }
    if j == n {
        if residual.iter().all(|r| r.is_zero()) {
            *count += 1;
        }
        return;
    }
    let mut x = int(0);
    loop {
        dfs_pointed(matrix, cap, lo, hi, j + 1, residual, count);
        if &x == cap {
            break;
        }
        for i in 0..t {
            residual[i] -= &matrix[i][j];
        }
        x += 1;
    }
    for i in 0..t {
        let d = &matrix[i][j] * cap;
        residual[i] += d;
    }
}

/// Counts the points of `X` in the box `{|x_i| = eta_i for i <= t1,
/// |x_{t1+i}| <= eta_{t1+i}}` by membership scanning. A point belonging to
/// two pieces breaks the disjointness contract and is reported as an error.
pub fn oracle_growth(x: &SemiSimpleSet, spec: &GrowthSpec, eta: &[Int]) -> Result<Int, Error> {
    if eta.len() != x.dim || spec.t1 + spec.t2 != x.dim {
        return Err(Error::SpecMismatch {
            t1: spec.t1,
            t2: spec.t2,
            dim: x.dim,
        });
    }
    if eta.iter().any(|v| v.is_negative()) {
        return Err(Error::InvalidInput("box bounds must be non-negative".into()));
    }
    let choices: Vec<Vec<Int>> = (0..x.dim)
        .map(|i| {
            if i < spec.t1 {
                if eta[i].is_zero() {
                    vec![int(0)]
                } else {
                    vec![eta[i].clone(), -eta[i].clone()]
                }
            } else {
                let m = eta[i].to_i64().expect("desk-scale box bound");
                (-m..=m).map(int).collect()
            }
        })
        .collect();
    let mut count = int(0);
    let mut idx = vec![0usize; x.dim];
    loop {
        let point: Vec<Int> = (0..x.dim).map(|i| choices[i][idx[i]].clone()).collect();
        let hits = x.pieces.iter().filter(|p| p.membership(&point)).count();
        if hits > 1 {
            return Err(Error::DisjointnessViolated(point, hits));
        }
        if hits == 1 {
            count += 1;
        }
        let mut i = x.dim;
        loop {
            if i == 0 {
                return Ok(count);
            }
            i -= 1;
            idx[i] += 1;
            if idx[i] < choices[i].len() {
                break;
            }
            idx[i] = 0;
        }
    }
}

/// A counting problem in one of the three supported kinds, as read from a
/// problem file.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "lowercase")]
pub enum Problem {
    Diophantine(DioSystem),
    Growth(GrowthProblem),
    Dm(DMInstance),
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct GrowthProblem {
    pub set: SemiSimpleSet,
    pub spec: GrowthSpec,
}

impl Problem {
    pub fn describe(&self) -> String {
        match self {
            Problem::Diophantine(s) => {
                format!("diophantine system, {} rows x {} cols", s.rows, s.cols)
            }
            Problem::Growth(g) => format!(
                "growth of a {}-piece semi-simple set, spec ({}, {})",
                g.set.pieces.len(),
                g.spec.t1,
                g.spec.t2
            ),
            Problem::Dm(d) => format!("vector partition function, {} x {} matrix", d.t, d.n),
        }
    }

    /// Builds the symbolic box spline for this problem.
    pub fn construct(&self) -> Result<BoxSpline, Error> {
        match self {
            Problem::Diophantine(sys) => {
                sys.validate()?;
                dio::count_system(&dio::slackify(sys))
            }
            Problem::Growth(g) => match g.set.lattice {
                crate::arrangement::Domain::N => semilinear::growth_plus(&g.set, &g.spec),
                crate::arrangement::Domain::Z => semilinear::growth_z(&g.set, &g.spec),
            },
            Problem::Dm(inst) => dm::build_ca(inst),
        }
    }

    /// The evaluation grid for a bound `B`: `[0,B]^t` for the N-domain
    /// kinds, `[-B,B]^t` for the vector partition function.
    fn grid(&self, bound: i64) -> (usize, i64, i64) {
        match self {
            Problem::Diophantine(s) => (s.rows, 0, bound),
            Problem::Growth(g) => (g.set.dim, 0, bound),
            Problem::Dm(d) => (d.t, -bound, bound),
        }
    }

    fn oracle_at(&self, point: &[Int], ha: Option<&Rat>) -> Result<Int, Error> {
        match self {
            Problem::Diophantine(sys) => oracle_count_nonneg(&dio::slackify(sys), point),
            Problem::Growth(g) => oracle_growth(&g.set, &g.spec, point),
            Problem::Dm(inst) => {
                let h = match ha {
                    Some(h) => h.clone(),
                    None => dm::compute_ha(&inst.matrix)?,
                };
                oracle_count_pointed(&inst.matrix, point, &h)
            }
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Mismatch {
    #[serde(
        serialize_with = "scalar::serialize_int_vec",
        deserialize_with = "scalar::deserialize_int_vec"
    )]
    pub point: Vec<Int>,
    #[serde(
        serialize_with = "scalar::serialize_rat",
        deserialize_with = "scalar::deserialize_rat"
    )]
    pub symbolic: Rat,
    #[serde(
        serialize_with = "scalar::serialize_int",
        deserialize_with = "scalar::deserialize_int"
    )]
    pub oracle: Int,
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct DiffReport {
    pub instance: String,
    pub bound: i64,
    pub checked_points: u64,
    pub mismatches: Vec<Mismatch>,
}

/// Compares a given box spline against the problem's oracle on the full
/// grid. Exposed separately so corrupted artifacts can be replayed.
pub fn diff_test_with(
    problem: &Problem,
    spline: &BoxSpline,
    bound: i64,
) -> Result<DiffReport, Error> {
    if bound < 0 {
        return Err(Error::InvalidInput("grid bound must be non-negative".into()));
    }
    let (t, lo, hi) = problem.grid(bound);
    // the pointed-scan bound depends only on the matrix, not the point
    let ha = match problem {
        Problem::Dm(inst) => Some(dm::compute_ha(&inst.matrix)?),
        _ => None,
    };
    let width = (hi - lo + 1) as u64;
    let total = width.pow(t as u32);
    let mismatches: Result<Vec<Option<Mismatch>>, Error> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let mut rem = flat;
            let mut point = vec![int(0); t];
            for i in (0..t).rev() {
                point[i] = int(lo + (rem % width) as i64);
                rem /= width;
            }
            let symbolic = spline.eval(&point)?;
            let oracle = problem.oracle_at(&point, ha.as_ref())?;
            Ok(if symbolic == rat_of(&oracle) {
                None
            } else {
                Some(Mismatch {
                    point,
                    symbolic,
                    oracle,
                })
            })
        })
        .collect();
    let mut mismatches: Vec<Mismatch> = mismatches?.into_iter().flatten().collect();
    mismatches.sort_by(|a, b| a.point.cmp(&b.point));
    Ok(DiffReport {
        instance: problem.describe(),
        bound,
        checked_points: total,
        mismatches,
    })
}

pub fn diff_test(problem: &Problem, bound: i64) -> Result<DiffReport, Error> {
    let spline = problem.construct()?;
    diff_test_with(problem, &spline, bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arrangement::Domain;
    use crate::dio::Relation;
    use crate::scalar::rat;
    use crate::semilinear::SimpleSet;

    fn iv(vals: &[i64]) -> Vec<Int> {
        vals.iter().map(|&v| int(v)).collect()
    }

    fn sys(matrix: &[&[i64]], offsets: &[i64]) -> DioSystem {
        let m: Vec<Vec<Int>> = matrix.iter().map(|r| iv(r)).collect();
        let rows = m.len();
        DioSystem::new(m, iv(offsets), vec![Relation::Eq; rows]).unwrap()
    }

    #[test]
    fn nonneg_oracle_examples() {
        // {x1 + 2 x2 = n1, 2 x1 + 3 x2 = n2}
        let s = sys(&[&[1, 2], &[2, 3]], &[0, 0]);
        assert_eq!(oracle_count_nonneg(&s, &iv(&[2, 3])).unwrap(), int(1));
        assert_eq!(oracle_count_nonneg(&s, &iv(&[0, 0])).unwrap(), int(1));
        // {2 x = n1, 3 x = n2}
        let s = sys(&[&[2], &[3]], &[0, 0]);
        assert_eq!(oracle_count_nonneg(&s, &iv(&[2, 3])).unwrap(), int(1));
        assert_eq!(oracle_count_nonneg(&s, &iv(&[2, 4])).unwrap(), int(0));
        // two coins of size 1 and 2
        let s = sys(&[&[1, 2]], &[0]);
        assert_eq!(oracle_count_nonneg(&s, &iv(&[7])).unwrap(), int(4));
    }

    #[test]
    fn nonneg_oracle_rejects_zero_column() {
        let s = sys(&[&[1, 0]], &[0]);
        assert!(matches!(
            oracle_count_nonneg(&s, &iv(&[3])),
            Err(Error::ZeroColumn(1))
        ));
    }

    #[test]
    fn pointed_oracle_examples() {
        let a = vec![iv(&[1, 0, 1]), iv(&[0, 1, 1])];
        let h = rat(1);
        assert_eq!(oracle_count_pointed(&a, &iv(&[3, 5]), &h).unwrap(), int(4));
        assert_eq!(oracle_count_pointed(&a, &iv(&[0, 0]), &h).unwrap(), int(1));
        let a = vec![iv(&[1]), iv(&[-1])];
        assert_eq!(oracle_count_pointed(&a, &iv(&[2, -2]), &rat(1)).unwrap(), int(1));
        assert_eq!(oracle_count_pointed(&a, &iv(&[2, -1]), &rat(1)).unwrap(), int(0));
    }

    #[test]
    fn growth_oracle_examples() {
        // Z^1 as three pieces: negatives, zero, positives.
        let z1 = SemiSimpleSet {
            dim: 1,
            lattice: Domain::Z,
            pieces: vec![
                SimpleSet { offset: iv(&[0]), generators: vec![] },
                SimpleSet { offset: iv(&[1]), generators: vec![iv(&[1])] },
                SimpleSet { offset: iv(&[-1]), generators: vec![iv(&[-1])] },
            ],
        };
        let spec = GrowthSpec { t1: 0, t2: 1 };
        assert_eq!(oracle_growth(&z1, &spec, &iv(&[4])).unwrap(), int(9));

        let origin = SemiSimpleSet {
            dim: 2,
            lattice: Domain::N,
            pieces: vec![SimpleSet { offset: iv(&[0, 0]), generators: vec![] }],
        };
        let spec = GrowthSpec { t1: 0, t2: 2 };
        assert_eq!(oracle_growth(&origin, &spec, &iv(&[3, 7])).unwrap(), int(1));

        let ray = SemiSimpleSet {
            dim: 2,
            lattice: Domain::N,
            pieces: vec![SimpleSet { offset: iv(&[1, 1]), generators: vec![iv(&[1, 2])] }],
        };
        assert_eq!(
            oracle_growth(&ray, &GrowthSpec { t1: 0, t2: 2 }, &iv(&[5, 5])).unwrap(),
            int(3)
        );
    }

    #[test]
    fn growth_oracle_reports_overlap() {
        let overlap = SemiSimpleSet {
            dim: 1,
            lattice: Domain::N,
            pieces: vec![
                SimpleSet { offset: iv(&[0]), generators: vec![iv(&[1])] },
                SimpleSet { offset: iv(&[2]), generators: vec![iv(&[1])] },
            ],
        };
        assert!(matches!(
            oracle_growth(&overlap, &GrowthSpec { t1: 0, t2: 1 }, &iv(&[4])),
            Err(Error::DisjointnessViolated(_, _))
        ));
    }

    #[test]
    fn diff_example_system_clean() {
        let problem = Problem::Diophantine(sys(&[&[1, 2], &[2, 3]], &[0, 0]));
        let report = diff_test(&problem, 40).unwrap();
        assert_eq!(report.checked_points, 41 * 41);
        assert!(report.mismatches.is_empty());
    }

    #[test]
    fn diff_detects_corruption() {
        let problem = Problem::Diophantine(sys(&[&[1, 2], &[2, 3]], &[0, 0]));
        let good = problem.construct().unwrap();
        let j = serde_json::to_string(&good).unwrap();
        // flip a constant-1 piece to constant 2
        let corrupted = j.replacen("\"1/1\"", "\"2/1\"", 1);
        assert_ne!(corrupted, j);
        let bad: BoxSpline = serde_json::from_str(&corrupted).unwrap();
        let report = diff_test_with(&problem, &bad, 10).unwrap();
        assert!(!report.mismatches.is_empty());
        // sorted lexicographically
        for w in report.mismatches.windows(2) {
            assert!(w[0].point < w[1].point);
        }
    }

    #[test]
    fn diff_pointed_clean() {
        let inst = DMInstance::new(vec![iv(&[1, 0, 1]), iv(&[0, 1, 1])]).unwrap();
        let report = diff_test(&Problem::Dm(inst), 12).unwrap();
        assert_eq!(report.checked_points, 25 * 25);
        assert!(report.mismatches.is_empty());
    }

    #[test]
    fn diff_growth_clean() {
        let ray = SemiSimpleSet {
            dim: 2,
            lattice: Domain::N,
            pieces: vec![SimpleSet { offset: iv(&[1, 1]), generators: vec![iv(&[1, 2])] }],
        };
        let problem = Problem::Growth(GrowthProblem {
            set: ray,
            spec: GrowthSpec { t1: 0, t2: 2 },
        });
        let report = diff_test(&problem, 12).unwrap();
        assert_eq!(report.checked_points, 13 * 13);
        assert!(report.mismatches.is_empty());
    }

    #[test]
    fn problem_serde_round_trip() {
        let p = Problem::Diophantine(sys(&[&[1, 2], &[2, 3]], &[0, 0]));
        let j = serde_json::to_string(&p).unwrap();
        assert!(j.contains("\"kind\":\"diophantine\""));
        let back: Problem = serde_json::from_str(&j).unwrap();
        assert_eq!(p, back);
        let d = Problem::Dm(DMInstance::new(vec![iv(&[1, -1])]).unwrap());
        let jd = serde_json::to_string(&d).unwrap();
        assert!(jd.contains("\"kind\":\"dm\""));
        assert_eq!(d, serde_json::from_str::<Problem>(&jd).unwrap());
    }
}
