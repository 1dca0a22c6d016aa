//! Semi-linear sets and their growth functions.
//!
//! A simple set is `a + N b_1 + ... + N b_n` with rationally independent
//! generators; a semi-simple set is a finite disjoint union of simple sets.
//! The `lattice` tag fixes the ambient space (`N^t` or `Z^t`); coefficients
//! always range over the naturals, so a `Z`-ambient piece lies in the cone
//! spanned by its representation. The growth function counts, per bound
//! vector, the points whose first `t1` absolute values are prescribed and
//! whose remaining `t2` absolute values are bounded; it is computed exactly
//! as a box spline by translating each piece into a Diophantine system.

use crate::arrangement::Domain;
use crate::dio::{count_system, slackify, DioSystem, Relation};
use crate::error::Error;
use crate::scalar::{self, int, Int, Rat};
use crate::spline::{bs_add, BoxSpline};
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct SimpleSet {
    #[serde(
        serialize_with = "scalar::serialize_int_vec",
        deserialize_with = "scalar::deserialize_int_vec"
    )]
    pub offset: Vec<Int>,
    #[serde(
        serialize_with = "serialize_gens",
        deserialize_with = "deserialize_gens"
    )]
    pub generators: Vec<Vec<Int>>,
}

fn serialize_gens<S: serde::Serializer>(g: &[Vec<Int>], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(g.len()))?;
    for v in g {
        let ns: Vec<serde_json::Number> = v
            .iter()
            .map(|x| {
                std::str::FromStr::from_str(&x.to_string())
                    .map_err(<S::Error as serde::ser::Error>::custom)
            })
            .collect::<Result<_, _>>()?;
        seq.serialize_element(&ns)?;
    }
    seq.end()
}

fn deserialize_gens<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Vec<Vec<Int>>, D::Error> {
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

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct SemiSimpleSet {
    pub dim: usize,
    pub lattice: Domain,
    pub pieces: Vec<SimpleSet>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct GrowthSpec {
    pub t1: usize,
    pub t2: usize,
}

impl SimpleSet {
    fn validate(&self, dim: usize, lattice: Domain) -> Result<(), Error> {
        if self.offset.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: self.offset.len(),
            });
        }
        for g in &self.generators {
            if g.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: g.len(),
                });
            }
        }
        if lattice == Domain::N {
            let neg = self.offset.iter().any(|v| v.is_negative())
                || self
                    .generators
                    .iter()
                    .any(|g| g.iter().any(|v| v.is_negative()));
            if neg {
                return Err(Error::InvalidInput(
                    "N-lattice representation must be componentwise non-negative".into(),
                ));
            }
        }
        if !rationally_independent(&self.generators, dim) {
            return Err(Error::DependentGenerators);
        }
        Ok(())
    }

    /// Solves `x = offset + sum m_i b_i` over the rationals (the solution is
    /// unique by independence) and accepts iff every `m_i` is a natural number.
    pub fn membership(&self, x: &[Int]) -> bool {
        let dim = self.offset.len();
        if x.len() != dim {
            return false;
        }
        let n = self.generators.len();
        // Gaussian elimination on the t x (n+1) augmented system.
        let mut aug: Vec<Vec<Rat>> = (0..dim)
            .map(|i| {
                let mut row: Vec<Rat> = self
                    .generators
                    .iter()
                    .map(|g| scalar::rat_of(&g[i]))
                    .collect();
                row.push(scalar::rat_of(&(&x[i] - &self.offset[i])));
                row
            })
            .collect();
        let mut pivot_rows: Vec<usize> = Vec::new();
        let mut r = 0usize;
        for c in 0..n {
            let Some(pr) = (r..dim).find(|&i| !aug[i][c].is_zero()) else {
                // independence guarantees a pivot in every column
                return false;
            };
            aug.swap(r, pr);
            let p = aug[r][c].clone();
            for v in aug[r].iter_mut() {
                *v /= &p;
            }
            for i in 0..dim {
                if i != r && !aug[i][c].is_zero() {
                    let f = aug[i][c].clone();
                    for k in 0..=n {
                        let d = &f * &aug[r][k];
                        aug[i][k] -= d;
                    }
                }
            }
            pivot_rows.push(r);
            r += 1;
        }
        // consistency of the remaining rows
        for i in r..dim {
            if !aug[i][n].is_zero() {
                return false;
            }
        }
        (0..n).all(|c| {
            let m = &aug[c][n];
            m.is_integer() && !m.is_negative()
        })
    }
}

fn rationally_independent(gens: &[Vec<Int>], dim: usize) -> bool {
    let n = gens.len();
    if n > dim {
        return false;
    }
    let mut m: Vec<Vec<Rat>> = (0..dim)
        .map(|i| gens.iter().map(|g| scalar::rat_of(&g[i])).collect())
        .collect();
    let mut rank = 0usize;
    for c in 0..n {
        let Some(pr) = (rank..dim).find(|&i| !m[i][c].is_zero()) else {
            return false;
        };
        m.swap(rank, pr);
        let p = m[rank][c].clone();
        for v in m[rank].iter_mut() {
            *v /= &p;
        }
        for i in 0..dim {
            if i != rank && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for k in 0..n {
                    let d = &f * &m[rank][k];
                    m[i][k] -= d;
                }
            }
        }
        rank += 1;
    }
    true
}

impl SemiSimpleSet {
    pub fn validate(&self) -> Result<(), Error> {
        for p in &self.pieces {
            p.validate(self.dim, self.lattice)?;
        }
        Ok(())
    }

    pub fn membership(&self, x: &[Int]) -> bool {
        self.pieces.iter().any(|p| p.membership(x))
    }
}

impl GrowthSpec {
    fn validate(&self, dim: usize) -> Result<(), Error> {
        if self.t1 + self.t2 != dim {
            return Err(Error::SpecMismatch {
                t1: self.t1,
                t2: self.t2,
                dim,
            });
        }
        Ok(())
    }
}

/// The restricted generalized growth function of an `N^t` semi-simple set:
/// `G(n_1..n_{t1}, m_1..m_{t2})` counts the points `x` of the set with
/// `x_i = n_i` for `i <= t1` and `x_{t1+i} <= m_i`.
pub fn growth_plus(x: &SemiSimpleSet, spec: &GrowthSpec) -> Result<BoxSpline, Error> {
    if x.lattice != Domain::N {
        return Err(Error::LatticeMismatch);
    }
    x.validate()?;
    spec.validate(x.dim)?;
    let t = x.dim;
    let mut acc = BoxSpline::zero(t, Domain::N);
    for piece in &x.pieces {
        let matrix: Vec<Vec<Int>> = (0..t)
            .map(|i| piece.generators.iter().map(|g| g[i].clone()).collect())
            .collect();
        let relations: Vec<Relation> = (0..t)
            .map(|i| if i < spec.t1 { Relation::Eq } else { Relation::Le })
            .collect();
        let sys = DioSystem::new(matrix, piece.offset.clone(), relations)?;
        let s = count_system(&slackify(&sys))?;
        acc = bs_add(&acc, &s)?;
    }
    Ok(acc)
}

/// A reflection certificate: signs `alpha` such that flipping each
/// coordinate by `alpha` maps the representation (offset and generators)
/// into `N^t`. Coordinates with no nonzero entry take `+1`.
pub fn check_orthant_compatible(piece: &SimpleSet) -> Result<Vec<i64>, Error> {
    let dim = piece.offset.len();
    let mut alpha = Vec::with_capacity(dim);
    for i in 0..dim {
        let mut pos = false;
        let mut neg = false;
        let mut note = |v: &Int| {
            if v.is_positive() {
                pos = true;
            } else if v.is_negative() {
                neg = true;
            }
        };
        note(&piece.offset[i]);
        for g in &piece.generators {
            note(&g[i]);
        }
        if pos && neg {
            return Err(Error::OrthantIncompatible { coord: i });
        }
        alpha.push(if neg { -1 } else { 1 });
    }
    Ok(alpha)
}

/// The generalized growth function of a `Z^t` semi-simple set, counting
/// points by their absolute-value pattern. Each piece must lie in one closed
/// orthant (certified from its representation); its reflection into `N^t`
/// has the same absolute values, so the piece contributes its reflected
/// restricted growth.
pub fn growth_z(x: &SemiSimpleSet, spec: &GrowthSpec) -> Result<BoxSpline, Error> {
    x.validate()?;
    spec.validate(x.dim)?;
    let t = x.dim;
    let mut acc = BoxSpline::zero(t, Domain::N);
    for piece in &x.pieces {
        let alpha = check_orthant_compatible(piece)?;
        let reflected = SimpleSet {
            offset: piece
                .offset
                .iter()
                .zip(&alpha)
                .map(|(v, &s)| v * int(s))
                .collect(),
            generators: piece
                .generators
                .iter()
                .map(|g| g.iter().zip(&alpha).map(|(v, &s)| v * int(s)).collect())
                .collect(),
        };
        let single = SemiSimpleSet {
            dim: t,
            lattice: Domain::N,
            pieces: vec![reflected],
        };
        acc = bs_add(&acc, &growth_plus(&single, spec)?)?;
    }
    Ok(acc)
}

/// The plain growth function: all coordinates bounded (`t1 = 0`).
pub fn growth(x: &SemiSimpleSet) -> Result<BoxSpline, Error> {
    let spec = GrowthSpec { t1: 0, t2: x.dim };
    match x.lattice {
        Domain::N => growth_plus(x, &spec),
        Domain::Z => growth_z(x, &spec),
    }
}

/// Scans `[-B, B]^t` (intersected with the lattice) and reports every point
/// belonging to two or more pieces, with the count of pieces containing it.
pub fn check_disjoint_sampled(x: &SemiSimpleSet, b: u64) -> Vec<(Vec<Int>, usize)> {
    let lo = match x.lattice {
        Domain::N => 0i64,
        Domain::Z => -(b as i64),
    };
    let hi = b as i64;
    let mut out = Vec::new();
    let mut point = vec![lo; x.dim];
    loop {
        let p: Vec<Int> = point.iter().map(|&v| int(v)).collect();
        let hits = x.pieces.iter().filter(|s| s.membership(&p)).count();
        if hits >= 2 {
            out.push((p, hits));
        }
        let mut i = x.dim;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            point[i] += 1;
            if point[i] <= hi {
                break;
            }
            point[i] = lo;
        }
    }
}
