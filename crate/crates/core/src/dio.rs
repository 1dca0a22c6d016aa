//! Counting solutions of non-negative Diophantine linear systems.
//!
//! For a system `A x = n` (componentwise, `A` non-negative, `x` ranging over
//! `N^k`, optionally with constant offsets added on the left), the number of
//! solutions as a function of `n` is produced as a box spline: eliminate the
//! first unknown by summing the count of the remaining system along the
//! first column, with the summation interval `[0, min_i (n_i - c_i)/a_i1]`.
//! Inequality rows are reduced to equations by slack unknowns.

use crate::arrangement::Domain;
use crate::error::Error;
use crate::poly::AffineForm;
use crate::scalar::{self, int, rat, Int};
use crate::spline::{bs_line_sum, BoundSpec, BoxSpline};
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "eq")]
    Eq,
    #[serde(rename = "le")]
    Le,
}

/// A system of `rows` linear conditions `sum_j a_ij x_j + offset_i (=|<=) n_i`
/// over unknowns `x in N^cols`, with all `a_ij >= 0`.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct DioSystem {
    pub rows: usize,
    pub cols: usize,
    #[serde(
        serialize_with = "serialize_matrix",
        deserialize_with = "deserialize_matrix"
    )]
    pub matrix: Vec<Vec<Int>>,
    #[serde(
        serialize_with = "scalar::serialize_int_vec",
        deserialize_with = "scalar::deserialize_int_vec"
    )]
    pub offsets: Vec<Int>,
    pub relations: Vec<Relation>,
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

impl DioSystem {
    pub fn new(
        matrix: Vec<Vec<Int>>,
        offsets: Vec<Int>,
        relations: Vec<Relation>,
    ) -> Result<Self, Error> {
        let rows = matrix.len();
        let cols = matrix.first().map(|r| r.len()).unwrap_or(0);
        for r in &matrix {
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    got: r.len(),
                });
            }
        }
        if offsets.len() != rows || relations.len() != rows {
            return Err(Error::DimensionMismatch {
                expected: rows,
                got: offsets.len().max(relations.len()),
            });
        }
        let sys = DioSystem {
            rows,
            cols,
            matrix,
            offsets,
            relations,
        };
        sys.validate()?;
        Ok(sys)
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.matrix.len() != self.rows
            || self.offsets.len() != self.rows
            || self.relations.len() != self.rows
        {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                got: self.matrix.len(),
            });
        }
        for (i, row) in self.matrix.iter().enumerate() {
            if row.len() != self.cols {
                return Err(Error::DimensionMismatch {
                    expected: self.cols,
                    got: row.len(),
                });
            }
            if row.iter().any(|v| v.is_negative()) {
                return Err(Error::InvalidInput(format!(
                    "negative coefficient in row {i}"
                )));
            }
            if self.offsets[i].is_negative() {
                return Err(Error::NegativeOffset(i));
            }
        }
        Ok(())
    }

    pub fn is_all_eq(&self) -> bool {
        self.relations.iter().all(|r| *r == Relation::Eq)
    }
}

/// Turns every inequality row into an equation by adding a fresh slack
/// unknown with unit coefficient; solution counts per right-hand side are
/// unchanged.
pub fn slackify(sys: &DioSystem) -> DioSystem {
    let slack_rows: Vec<usize> = (0..sys.rows)
        .filter(|&i| sys.relations[i] == Relation::Le)
        .collect();
    let mut matrix = sys.matrix.clone();
    for row in matrix.iter_mut() {
        row.extend(std::iter::repeat_with(|| int(0)).take(slack_rows.len()));
    }
    for (j, &i) in slack_rows.iter().enumerate() {
        matrix[i][sys.cols + j] = int(1);
    }
    DioSystem {
        rows: sys.rows,
        cols: sys.cols + slack_rows.len(),
        matrix,
        offsets: sys.offsets.clone(),
        relations: vec![Relation::Eq; sys.rows],
    }
}

/// The counting box spline `S` over `N^rows` with
/// `S(n) = Card{ x in N^cols : matrix x + offsets = n }`.
pub fn count_system(sys: &DioSystem) -> Result<BoxSpline, Error> {
    sys.validate()?;
    if !sys.is_all_eq() {
        return Err(Error::InvalidInput(
            "count_system requires all rows to be equations (use slackify)".into(),
        ));
    }
    for j in 0..sys.cols {
        if (0..sys.rows).all(|i| sys.matrix[i][j].is_zero()) {
            return Err(Error::ZeroColumn(j));
        }
    }
    count_from(sys, 0)
}

/// Counting spline of the column suffix `col..`.
fn count_from(sys: &DioSystem, col: usize) -> Result<BoxSpline, Error> {
    let t = sys.rows;
    if col == sys.cols {
        return BoxSpline::indicator_point(t, Domain::N, &sys.offsets);
    }
    let g = count_from(sys, col + 1)?;
    let a: Vec<Int> = (0..t).map(|i| sys.matrix[i][col].clone()).collect();
    let forms: Vec<AffineForm> = (0..t)
        .filter(|&i| !a[i].is_zero())
        .map(|i| {
            AffineForm::coordinate(t, i)
                .add_constant(&-scalar::rat_of(&sys.offsets[i]))
                .scale(&(rat(1) / scalar::rat_of(&a[i])))
        })
        .collect();
    bs_line_sum(&g, &a, &BoundSpec::closed_min_ratio(forms))
}
