//! The vector partition function of a pointed integer matrix.
//!
//! For `A` (t x n, mixed-sign entries) whose columns admit no non-trivial
//! non-negative kernel vector, `C_A(b) = Card{X in N^n : A X = b}` is finite
//! for every `b in Z^t`. It is computed as a box spline over `Z^t` by
//! eliminating columns right to left: the eliminated coordinate of any
//! solution is at most `h * max_i |b_i|`, where `h` is a dual-LP bound for
//! the remaining columns, so each elimination is a line sum with the
//! region-wise affine bound `h * (+-b_{j0})` read off the arrangement that
//! fixes all comparisons between the `|b_i|`.

use crate::arrangement::{Arrangement, Domain, Hyperplane, SignVector};
use crate::error::Error;
use crate::lp::{self, Cmp, Constraint, LpOutcome};
use crate::poly::AffineForm;
use crate::scalar::{self, int, rat, Int, Rat};
use crate::spline::{bs_line_sum, BoundSpec, BoxSpline};
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct DMInstance {
    pub t: usize,
    pub n: usize,
    #[serde(
        serialize_with = "serialize_matrix",
        deserialize_with = "deserialize_matrix"
    )]
    pub matrix: Vec<Vec<Int>>,
}

fn serialize_matrix<S: serde::Serializer>(m: &[Vec<Int>], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(m.len()))?;
    for row in m {
        let ns: Vec<serde_json::Number> = row
            .iter()
            .map(|v| {
                std::str::FromStr::from_str(&v.to_string())
                    .map_err(<S::Error as serde::ser::Error>::custom)
            })
            .collect::<Result<_, _>>()?;
        seq.serialize_element(&ns)?;
    }
    seq.end()
}

fn deserialize_matrix<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Vec<Vec<Int>>, D::Error> {
    use serde::de::Error as _;
    let rows = Vec::<Vec<serde_json::Number>>::deserialize(d)?;
    rows.iter()
        .map(|r| {
            r.iter()
                .map(|n| std::str::FromStr::from_str(&n.to_string()).map_err(D::Error::custom))
                .collect()
        })
        .collect()
}

impl DMInstance {
    pub fn new(matrix: Vec<Vec<Int>>) -> Result<Self, Error> {
        let t = matrix.len();
        let n = matrix.first().map(|r| r.len()).unwrap_or(0);
        for r in &matrix {
            if r.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: r.len(),
                });
            }
        }
        Ok(DMInstance { t, n, matrix })
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.matrix.len() != self.t {
            return Err(Error::DimensionMismatch {
                expected: self.t,
                got: self.matrix.len(),
            });
        }
        for r in &self.matrix {
            if r.len() != self.n {
                return Err(Error::DimensionMismatch {
                    expected: self.n,
                    got: r.len(),
                });
            }
        }
        Ok(())
    }

    fn columns(&self, from: usize) -> Vec<Vec<Int>> {
        self.matrix
            .iter()
            .map(|row| row[from..].to_vec())
            .collect()
    }
}

/// Pointedness: the only non-negative kernel vector is zero, decided by the
/// rational infeasibility of `{X >= 0, sum X = 1, A X = 0}` (equivalent over
/// the integers by homogeneity). Returns a rational witness when not pointed.
pub fn pointedness_witness(matrix: &[Vec<Int>]) -> Result<Option<Vec<Rat>>, Error> {
    let n = matrix.first().map(|r| r.len()).unwrap_or(0);
    if n == 0 {
        return Ok(None);
    }
    let mut cs: Vec<Constraint> = Vec::new();
    for j in 0..n {
        let mut c = vec![rat(0); n];
        c[j] = rat(1);
        cs.push(Constraint::new(c, Cmp::Ge, rat(0)));
    }
    cs.push(Constraint::new(vec![rat(1); n], Cmp::Eq, rat(1)));
    for row in matrix {
        cs.push(Constraint::new(
            row.iter().map(scalar::rat_of).collect(),
            Cmp::Eq,
            rat(0),
        ));
    }
    lp::feasible_point(n, &cs)
}

pub fn check_pointed(matrix: &[Vec<Int>]) -> Result<bool, Error> {
    Ok(pointedness_witness(matrix)?.is_none())
}

/// The coordinate bound `h`: for every `i`, the minimum of `sum |y|` over
/// dual vectors `y` with `y^T A >= e_i`; any non-negative solution of
/// `A X = b` then satisfies `X_i <= y . b <= h * max_j |b_j|`.
pub fn compute_ha(matrix: &[Vec<Int>]) -> Result<Rat, Error> {
    let t = matrix.len();
    let n = matrix.first().map(|r| r.len()).unwrap_or(0);
    let mut best = rat(0);
    for i in 0..n {
        // variables u_1..u_t, v_1..v_t >= 0 with y = u - v.
        let mut cs: Vec<Constraint> = Vec::new();
        for j in 0..2 * t {
            let mut c = vec![rat(0); 2 * t];
            c[j] = rat(1);
            cs.push(Constraint::new(c, Cmp::Ge, rat(0)));
        }
        for l in 0..n {
            let mut c = vec![rat(0); 2 * t];
            for j in 0..t {
                c[j] = scalar::rat_of(&matrix[j][l]);
                c[t + j] = -c[j].clone();
            }
            cs.push(Constraint::new(c, Cmp::Ge, rat((l == i) as i64)));
        }
        match lp::minimize(&vec![rat(1); 2 * t], &cs)? {
            LpOutcome::Optimal { value, .. } => {
                if value > best {
                    best = value;
                }
            }
            _ => {
                return Err(Error::LpFailure(format!(
                    "dual bound LP unsolvable for column {i} (matrix not pointed?)"
                )))
            }
        }
    }
    Ok(best)
}

/// The `Z^t` arrangement fixing the sign of every coordinate and every
/// comparison `|b_i| <=> |b_j|`: planes `b_i`, `b_i - b_j`, `b_i + b_j`.
pub fn abs_arrangement(t: usize) -> Arrangement {
    let mut planes = Vec::new();
    for i in 0..t {
        for j in i + 1..t {
            for s in [1i64, -1] {
                let mut normal = vec![int(0); t];
                normal[i] = int(1);
                normal[j] = int(s);
                planes.push(Hyperplane::new(normal, int(0)).unwrap());
            }
        }
    }
    Arrangement::new(t, Domain::Z, planes).unwrap()
}

/// Per-region data of `abs_arrangement`: the affine form `+-b_{j0}` whose
/// value is `max_i |b_i|` on the region.
fn abs_max_forms(t: usize) -> Result<BTreeMap<SignVector, AffineForm>, Error> {
    let arr = abs_arrangement(t);
    let mut out = BTreeMap::new();
    for (signs, w) in arr.enumerate_regions_real()? {
        let (j0, _) = (0..t)
            .map(|i| (i, w[i].abs()))
            .max_by(|a, b| a.1.cmp(&b.1))
            .unwrap();
        let sigma = if w[j0].is_negative() { rat(-1) } else { rat(1) };
        out.insert(signs, AffineForm::coordinate(t, j0).scale(&sigma));
    }
    Ok(out)
}

/// The counting box spline `C` over `Z^t` with
/// `C(b) = Card{X in N^n : A X = b}`.
pub fn build_ca(inst: &DMInstance) -> Result<BoxSpline, Error> {
    inst.validate()?;
    if let Some(witness) = pointedness_witness(&inst.matrix)? {
        return Err(Error::NonPointed(witness));
    }
    let t = inst.t;
    let reference = abs_arrangement(t);
    let base_forms = abs_max_forms(t)?;
    let mut c = BoxSpline::indicator_point(t, Domain::Z, &vec![int(0); t])?;
    for j in (0..inst.n).rev() {
        let suffix = inst.columns(j);
        if !check_pointed(&suffix)? {
            return Err(Error::LpFailure(
                "column suffix of a pointed matrix must stay pointed".into(),
            ));
        }
        let h = compute_ha(&suffix)?;
        let forms: BTreeMap<SignVector, AffineForm> = base_forms
            .iter()
            .map(|(k, f)| (k.clone(), f.scale(&h)))
            .collect();
        let a: Vec<Int> = (0..t).map(|i| inst.matrix[i][j].clone()).collect();
        if a.iter().all(|v| v.is_zero()) {
            return Err(Error::ZeroColumn(j));
        }
        c = bs_line_sum(&c, &a, &BoundSpec::closed_per_region(reference.clone(), forms))?;
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[i64]]) -> Vec<Vec<Int>> {
        rows.iter()
            .map(|r| r.iter().map(|&v| int(v)).collect())
            .collect()
    }

    #[test]
    fn pointedness_examples() {
        assert!(check_pointed(&m(&[&[1, 0, 1], &[0, 1, 1]])).unwrap());
        assert!(!check_pointed(&m(&[&[1, -1]])).unwrap());
        assert!(check_pointed(&m(&[&[1], &[-1]])).unwrap());
        let w = pointedness_witness(&m(&[&[1, -1]])).unwrap().unwrap();
        assert_eq!(w[0], w[1]);
    }

    #[test]
    fn h_bound_examples() {
        assert_eq!(compute_ha(&m(&[&[1, 0, 1], &[0, 1, 1]])).unwrap(), rat(1));
        assert_eq!(
            compute_ha(&m(&[&[2]])).unwrap(),
            scalar::rat_fr(1, 2)
        );
        assert_eq!(compute_ha(&m(&[&[1], &[-1]])).unwrap(), rat(1));
    }

    #[test]
    fn abs_arrangement_shape() {
        let a1 = abs_arrangement(1);
        assert_eq!(a1.planes().len(), 1);
        assert_eq!(a1.enumerate_regions().unwrap().len(), 3);
        let a2 = abs_arrangement(2);
        assert_eq!(a2.planes().len(), 4);
        // witness (3,-5): j0 = 2nd coordinate, negative sign.
        let forms = abs_max_forms(2).unwrap();
        let key = a2.sign_vector_of(&[int(3), int(-5)]).unwrap();
        let f = &forms[&key];
        assert_eq!(f.eval(&[rat(3), rat(-5)]), rat(5));
    }

    #[test]
    fn min_of_two_sides() {
        // A = [[1,0,1],[0,1,1]]: C(b1,b2) = min(b1,b2)+1 for b >= 0, 0 otherwise.
        let inst = DMInstance::new(m(&[&[1, 0, 1], &[0, 1, 1]])).unwrap();
        let c = build_ca(&inst).unwrap();
        assert_eq!(c.eval_i64(&[3, 5]).unwrap(), rat(4));
        assert_eq!(c.eval_i64(&[5, 3]).unwrap(), rat(4));
        assert_eq!(c.eval_i64(&[2, -1]).unwrap(), rat(0));
        assert_eq!(c.eval_i64(&[0, 0]).unwrap(), rat(1));
        for b1 in -6..=8i64 {
            for b2 in -6..=8i64 {
                let expect = if b1 >= 0 && b2 >= 0 { b1.min(b2) + 1 } else { 0 };
                assert_eq!(c.eval_i64(&[b1, b2]).unwrap(), rat(expect), "({b1},{b2})");
            }
        }
    }

    #[test]
    fn opposite_rows_single_column() {
        let inst = DMInstance::new(m(&[&[1], &[-1]])).unwrap();
        let c = build_ca(&inst).unwrap();
        for b1 in -8..=8i64 {
            for b2 in -8..=8i64 {
                let expect = (b2 == -b1 && b1 >= 0) as i64;
                assert_eq!(c.eval_i64(&[b1, b2]).unwrap(), rat(expect), "({b1},{b2})");
            }
        }
    }

    #[test]
    fn even_doubler() {
        let inst = DMInstance::new(m(&[&[2]])).unwrap();
        let c = build_ca(&inst).unwrap();
        for b in -10..=10i64 {
            let expect = (b >= 0 && b % 2 == 0) as i64;
            assert_eq!(c.eval_i64(&[b]).unwrap(), rat(expect), "b={b}");
        }
    }

    #[test]
    fn mixed_sign_two_columns() {
        // A = [[1, -1]], pointedness fails -> error with witness.
        let inst = DMInstance::new(m(&[&[1, -1]])).unwrap();
        assert!(matches!(build_ca(&inst), Err(Error::NonPointed(_))));
        // A = [[1, -2], [1, 1]] is pointed; compare to direct enumeration.
        let inst = DMInstance::new(m(&[&[1, -2], &[1, 1]])).unwrap();
        let c = build_ca(&inst).unwrap();
        for b1 in -8..=8i64 {
            for b2 in -8..=8i64 {
                let mut direct = 0i64;
                for x1 in 0..=30i64 {
                    for x2 in 0..=30i64 {
                        if x1 - 2 * x2 == b1 && x1 + x2 == b2 {
                            direct += 1;
                        }
                    }
                }
                assert_eq!(c.eval_i64(&[b1, b2]).unwrap(), rat(direct), "({b1},{b2})");
            }
        }
    }

    #[test]
    fn column_swap_symmetry() {
        let a = DMInstance::new(m(&[&[1, 0, 1], &[0, 1, 1]])).unwrap();
        let b = DMInstance::new(m(&[&[1, 1, 0], &[1, 0, 1]])).unwrap();
        let ca = build_ca(&a).unwrap();
        let cb = build_ca(&b).unwrap();
        for b1 in -5..=7i64 {
            for b2 in -5..=7i64 {
                assert_eq!(
                    ca.eval_i64(&[b1, b2]).unwrap(),
                    cb.eval_i64(&[b1, b2]).unwrap()
                );
            }
        }
    }

    #[test]
    fn serde_round_trip() {
        let inst = DMInstance::new(m(&[&[1, -2], &[0, 3]])).unwrap();
        let j = serde_json::to_string(&inst).unwrap();
        let back: DMInstance = serde_json::from_str(&j).unwrap();
        assert_eq!(inst, back);
    }
}
