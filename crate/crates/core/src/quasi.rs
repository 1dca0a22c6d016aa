//! Quasi-polynomials: residue-dispatched families of rational polynomials.
//!
//! A quasi-polynomial of dimension `t` dispatches on the residues of its
//! argument modulo a period and evaluates the selected polynomial. The
//! public serialized form carries one scalar period `d`; internally the
//! period is tracked per coordinate, which keeps residue tables small, and
//! `period()` reports the least common multiple.
//!
//! Besides the value type this module houses the summation primitives that
//! the box-spline layer is built on: closed-form prefix sums of a
//! quasi-polynomial along a lattice direction with an affine upper bound,
//! and singleton sums at an affine crossing value.

use crate::error::Error;
use crate::poly::{poly_sum_over_index, AffineForm, MultiPoly};
use crate::scalar::{self, int, lcm_u64, rat, Int, Rat};
use num_integer::Integer;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::BTreeMap;

/// Iterates the cartesian product of residue ranges `[0, periods[i])`.
pub(crate) struct GridIter {
    periods: Vec<u64>,
    cur: Vec<u64>,
    done: bool,
}

pub(crate) fn grid(periods: &[u64]) -> GridIter {
    GridIter {
        periods: periods.to_vec(),
        cur: vec![0; periods.len()],
        done: periods.iter().any(|&p| p == 0),
    }
}

impl Iterator for GridIter {
    type Item = Vec<u64>;
    fn next(&mut self) -> Option<Vec<u64>> {
        if self.done {
            return None;
        }
        let out = self.cur.clone();
        let mut i = self.periods.len();
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            self.cur[i] += 1;
            if self.cur[i] < self.periods[i] {
                break;
            }
            self.cur[i] = 0;
        }
        Some(out)
    }
}

/// A quasi-polynomial `F : Z^t -> Q`.
///
/// Residue dispatch uses the mathematical (non-negative) remainder, so the
/// function is defined on all of `Z^t` even though counting interpretations
/// live on `N^t`. Absent table entries denote the zero polynomial.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct QuasiPolynomial {
    dim: usize,
    periods: Vec<u64>,
    table: BTreeMap<Vec<u64>, MultiPoly>,
}

impl QuasiPolynomial {
    pub fn zero(dim: usize) -> Self {
        QuasiPolynomial {
            dim,
            periods: vec![1; dim],
            table: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: Rat) -> Self {
        Self::from_poly(dim, MultiPoly::constant(dim, c))
    }

    pub fn from_poly(dim: usize, p: MultiPoly) -> Self {
        assert_eq!(p.nvars(), dim);
        let mut out = Self::zero(dim);
        if !p.is_zero() {
            out.table.insert(vec![0; dim], p);
        }
        out
    }

    /// Builds from an explicit residue table modulo a single scalar period.
    pub fn from_table(dim: usize, d: u64, table: BTreeMap<Vec<u64>, MultiPoly>) -> Self {
        assert!(d >= 1);
        for k in table.keys() {
            assert_eq!(k.len(), dim);
            assert!(k.iter().all(|&r| r < d));
        }
        let mut out = QuasiPolynomial {
            dim,
            periods: vec![d; dim],
            table: table.into_iter().filter(|(_, p)| !p.is_zero()).collect(),
        };
        out.normalize();
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The scalar period: least common multiple of the per-coordinate periods.
    pub fn period(&self) -> u64 {
        self.periods.iter().copied().fold(1, lcm_u64)
    }

    pub fn is_zero(&self) -> bool {
        self.table.is_empty()
    }

    fn residues_of(&self, x: &[Int]) -> Vec<u64> {
        x.iter()
            .zip(&self.periods)
            .map(|(xi, &d)| scalar::rem_euclid(xi, d))
            .collect()
    }

    /// The polynomial governing the residue class of `x` (zero if absent).
    pub fn class_poly(&self, x: &[Int]) -> MultiPoly {
        match self.table.get(&self.residues_of(x)) {
            Some(p) => p.clone(),
            None => MultiPoly::zero(self.dim),
        }
    }

    /// Exact evaluation at a lattice point.
    pub fn eval(&self, x: &[Int]) -> Result<Rat, Error> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        match self.table.get(&self.residues_of(x)) {
            Some(p) => p.eval_int(x),
            None => Ok(rat(0)),
        }
    }

    pub fn eval_i64(&self, x: &[i64]) -> Result<Rat, Error> {
        let xi: Vec<Int> = x.iter().map(|&v| int(v)).collect();
        self.eval(&xi)
    }

    /// Pointwise sum without period reduction; the result's period is the
    /// per-coordinate lcm of the operand periods.
    pub fn add_raw(&self, other: &Self) -> Result<Self, Error> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        let periods: Vec<u64> = self
            .periods
            .iter()
            .zip(&other.periods)
            .map(|(&a, &b)| lcm_u64(a, b))
            .collect();
        let mut table: BTreeMap<Vec<u64>, MultiPoly> = BTreeMap::new();
        let lift = |src: &Self, out: &mut BTreeMap<Vec<u64>, MultiPoly>| {
            for (k, p) in &src.table {
                let ranges: Vec<Vec<u64>> = (0..src.dim)
                    .map(|i| {
                        (0..periods[i])
                            .filter(|u| u % src.periods[i] == k[i])
                            .collect()
                    })
                    .collect();
                for u in cartesian(&ranges) {
                    let entry = out.entry(u).or_insert_with(|| MultiPoly::zero(src.dim));
                    *entry = entry.add(p);
                }
            }
        };
        lift(self, &mut table);
        lift(other, &mut table);
        table.retain(|_, p| !p.is_zero());
        Ok(QuasiPolynomial {
            dim: self.dim,
            periods,
            table,
        })
    }

    /// Pointwise sum, normalized.
    pub fn add(&self, other: &Self) -> Result<Self, Error> {
        let mut out = self.add_raw(other)?;
        out.normalize();
        Ok(out)
    }

    pub fn neg(&self) -> Self {
        QuasiPolynomial {
            dim: self.dim,
            periods: self.periods.clone(),
            table: self.table.iter().map(|(k, p)| (k.clone(), p.neg())).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self, Error> {
        self.add(&other.neg())
    }

    pub fn scale(&self, k: &Rat) -> Self {
        if k.is_zero() {
            return Self::zero(self.dim);
        }
        QuasiPolynomial {
            dim: self.dim,
            periods: self.periods.clone(),
            table: self
                .table
                .iter()
                .map(|(r, p)| (r.clone(), p.scale(k)))
                .collect(),
        }
    }

    /// Reduces every per-coordinate period to the smallest divisor on which
    /// the residue classes collapse, and drops zero entries.
    pub fn normalize(&mut self) {
        self.table.retain(|_, p| !p.is_zero());
        // Collapsing one coordinate only merges identical entries, so a
        // second sweep catches collapses enabled by the first.
        for _ in 0..2 {
            let mut changed = false;
            for i in 0..self.dim {
                let d = self.periods[i];
                if d == 1 {
                    continue;
                }
                for dp in divisors(d) {
                    if dp == d {
                        break;
                    }
                    if self.try_collapse(i, dp) {
                        changed = true;
                        break;
                    }
                }
            }
            if !changed {
                break;
            }
        }
    }

    fn try_collapse(&mut self, i: usize, dp: u64) -> bool {
        let d = self.periods[i];
        let lifts = d / dp;
        let mut groups: BTreeMap<Vec<u64>, (u64, MultiPoly)> = BTreeMap::new();
        for (k, p) in &self.table {
            let mut g = k.clone();
            g[i] %= dp;
            match groups.get_mut(&g) {
                None => {
                    groups.insert(g, (1, p.clone()));
                }
                Some((n, rep)) => {
                    if rep != p {
                        return false;
                    }
                    *n += 1;
                }
            }
        }
        if groups.values().any(|(n, _)| *n != lifts) {
            return false;
        }
        self.periods[i] = dp;
        self.table = groups.into_iter().map(|(k, (_, p))| (k, p)).collect();
        true
    }

    /// Expands to a table modulo the scalar period (used for serialization).
    pub fn expanded_table(&self) -> (u64, BTreeMap<Vec<u64>, MultiPoly>) {
        let d = self.period();
        let mut out = BTreeMap::new();
        for u in grid(&vec![d; self.dim]) {
            let key: Vec<u64> = u
                .iter()
                .zip(&self.periods)
                .map(|(&ui, &di)| ui % di)
                .collect();
            if let Some(p) = self.table.get(&key) {
                out.insert(u, p.clone());
            }
        }
        (d, out)
    }

    pub fn render(&self, names: &[String]) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let d = self.period();
        if d == 1 {
            return self.table.values().next().unwrap().render(names);
        }
        let (_, table) = self.expanded_table();
        let mut lines = Vec::new();
        for (r, p) in &table {
            let cond: Vec<String> = names
                .iter()
                .zip(r)
                .map(|(n, ri)| format!("{n}={ri}"))
                .collect();
            lines.push(format!(
                "[{} (mod {d})] {}",
                cond.join(","),
                p.render(names)
            ));
        }
        lines.join("; ")
    }
}

fn cartesian(ranges: &[Vec<u64>]) -> Vec<Vec<u64>> {
    let mut out = vec![Vec::new()];
    for r in ranges {
        let mut next = Vec::with_capacity(out.len() * r.len());
        for prefix in &out {
            for &v in r {
                let mut p = prefix.clone();
                p.push(v);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

fn divisors(n: u64) -> Vec<u64> {
    let mut out: Vec<u64> = (1..=n).filter(|d| n % d == 0).collect();
    out.sort_unstable();
    out
}

/// Reassembles a residue-indexed family into one quasi-polynomial
/// agreeing with the dispatched family on every lattice point.
///
/// `outer[i]` is the dispatch period in coordinate `i`: the member at key
/// `r` governs the points `x` with `x_i = r_i (mod outer[i])`.
pub(crate) fn assemble(
    dim: usize,
    outer: &[u64],
    members: &BTreeMap<Vec<u64>, QuasiPolynomial>,
) -> QuasiPolynomial {
    let mut periods: Vec<u64> = outer.to_vec();
    for m in members.values() {
        for i in 0..dim {
            periods[i] = lcm_u64(periods[i], m.periods[i]);
        }
    }
    let mut table: BTreeMap<Vec<u64>, MultiPoly> = BTreeMap::new();
    for (r, m) in members {
        for (s, p) in &m.table {
            let ranges: Vec<Vec<u64>> = (0..dim)
                .map(|i| {
                    (0..periods[i])
                        .filter(|u| u % outer[i] == r[i] && u % m.periods[i] == s[i])
                        .collect()
                })
                .collect();
            for u in cartesian(&ranges) {
                table.insert(u, p.clone());
            }
        }
    }
    let mut out = QuasiPolynomial {
        dim,
        periods,
        table,
    };
    out.normalize();
    out
}

/// Single quasi-polynomial agreeing with a family dispatched on residue
/// vectors modulo a scalar period `d`.
pub fn qp_rebase(
    dim: usize,
    d: u64,
    family: &BTreeMap<Vec<u64>, QuasiPolynomial>,
) -> QuasiPolynomial {
    assemble(dim, &vec![d; dim], family)
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum RoundMode {
    Floor,
    Ceil,
}

/// The quasi-polynomial `x -> floor(form(x))` (or ceiling).
pub fn floor_affine(form: &AffineForm, mode: RoundMode) -> QuasiPolynomial {
    nested_floor(form, mode, &int(0), 1)
}

/// The quasi-polynomial `x -> floor((round(form(x)) + offset) / div)` where
/// `round` is floor or ceiling. This is the shape required by the
/// residue-class decomposition of prefix sums.
pub fn nested_floor(form: &AffineForm, inner: RoundMode, offset: &Int, div: u64) -> QuasiPolynomial {
    let dim = form.dimension();
    let div_int = int(div as i64);
    // Per-coordinate period: smallest D_i with coeff_i * D_i in div * Z.
    let periods: Vec<u64> = form
        .coeffs
        .iter()
        .map(|c| {
            if c.is_zero() {
                1
            } else {
                let num = c.numer().abs();
                let qd: Int = c.denom() * &div_int;
                let g = num.gcd(&qd);
                let d: Int = qd / g;
                u64::try_from(&d).expect("period fits u64")
            }
        })
        .collect();
    let mut table = BTreeMap::new();
    for r in grid(&periods) {
        let ri: Vec<Int> = r.iter().map(|&v| int(v as i64)).collect();
        let val = form.eval_int(&ri);
        let rounded = match inner {
            RoundMode::Floor => scalar::rat_floor(&val),
            RoundMode::Ceil => scalar::rat_ceil(&val),
        };
        let shifted: Int = rounded + offset;
        let const_part = shifted.div_floor(&div_int);
        // On the class of r: value = const_part + sum_i (c_i/div)(x_i - r_i).
        let mut constant = scalar::rat_of(&const_part);
        let mut coeffs = Vec::with_capacity(dim);
        for (c, rv) in form.coeffs.iter().zip(&ri) {
            let ci = c / scalar::rat_of(&div_int);
            constant -= ci.clone() * scalar::rat_of(rv);
            coeffs.push(ci);
        }
        let poly = AffineForm::new(coeffs, constant).to_poly();
        if !poly.is_zero() {
            table.insert(r, poly);
        }
    }
    let mut out = QuasiPolynomial {
        dim,
        periods,
        table,
    };
    out.normalize();
    out
}

/// Composition `h(x) = p(x_1..x_t, g(x))`: the polynomial `p` evaluated with
/// its `slot` variable replaced by an integer-valued quasi-polynomial.
pub fn compose_poly_qp(
    p: &MultiPoly,
    slot: usize,
    g: &QuasiPolynomial,
) -> Result<QuasiPolynomial, Error> {
    let dim = g.dim;
    if p.nvars() != dim + 1 || slot >= p.nvars() {
        return Err(Error::DimensionMismatch {
            expected: dim + 1,
            got: p.nvars(),
        });
    }
    // Witness integrality check per residue class.
    for (r, cls) in &g.table {
        let ri: Vec<Int> = r.iter().map(|&v| int(v as i64)).collect();
        let v = cls.eval_int(&ri)?;
        if !v.is_integer() {
            return Err(Error::NotIntegerValued(ri));
        }
    }
    let coeffs = p.coefficients_of(slot)?;
    // Reindex the coefficient polynomials from arity dim+1 (slot zeroed)
    // down to arity dim.
    let reindexed: Vec<MultiPoly> = coeffs
        .iter()
        .map(|a| {
            let mut out = MultiPoly::zero(dim);
            for (e, c) in a.terms() {
                let mut e2 = Vec::with_capacity(dim);
                for (i, &ei) in e.iter().enumerate() {
                    if i != slot {
                        e2.push(ei);
                    }
                }
                out.add_term(e2, c.clone());
            }
            out
        })
        .collect();
    // Fast path: when every class of `g` shares one non-constant part `L`
    // (true for floors of a fixed affine form), precompute the products
    // `a_j * L^i` once and expand `(L + c)^j` binomially per class, leaving
    // only scalar-scaled additions in the grid loop.
    let mut shared_lin: Option<MultiPoly> = None;
    let mut fast = !g.table.is_empty();
    for cls in g.table.values() {
        let mut lin = MultiPoly::zero(dim);
        for (e, c) in cls.terms() {
            if e.iter().any(|&x| x != 0) {
                lin.add_term(e.clone(), c.clone());
            }
        }
        match &shared_lin {
            None => shared_lin = Some(lin),
            Some(l) => {
                if l != &lin {
                    fast = false;
                    break;
                }
            }
        }
    }
    let mut table = BTreeMap::new();
    if fast {
        let lin = shared_lin.unwrap();
        let deg = reindexed.len().saturating_sub(1);
        let mut lin_pow = vec![MultiPoly::one(dim)];
        for _ in 1..=deg {
            lin_pow.push(lin_pow.last().unwrap().mul(&lin));
        }
        let prods: Vec<Vec<MultiPoly>> = reindexed
            .iter()
            .enumerate()
            .map(|(j, a_j)| (0..=j).map(|i| a_j.mul(&lin_pow[i])).collect())
            .collect();
        for r in grid(&g.periods) {
            let acc = match g.table.get(&r) {
                // zero class: p(x, 0) is the slot-free coefficient
                None => reindexed[0].clone(),
                Some(cls) => {
                    let c = cls
                        .terms()
                        .find(|(e, _)| e.iter().all(|&x| x == 0))
                        .map(|(_, v)| v.clone())
                        .unwrap_or_else(|| rat(0));
                    let mut c_pow = vec![rat(1)];
                    for _ in 1..=deg {
                        c_pow.push(c_pow.last().unwrap() * &c);
                    }
                    let mut acc = MultiPoly::zero(dim);
                    for (j, a_j) in reindexed.iter().enumerate() {
                        if a_j.is_zero() {
                            continue;
                        }
                        for i in 0..=j {
                            let b = scalar::rat_of(&num_integer::binomial(
                                int(j as i64),
                                int(i as i64),
                            ));
                            let coef = b * &c_pow[j - i];
                            if !coef.is_zero() {
                                acc = acc.add(&prods[j][i].scale(&coef));
                            }
                        }
                    }
                    acc
                }
            };
            if !acc.is_zero() {
                table.insert(r, acc);
            }
        }
    } else {
        for r in grid(&g.periods) {
            let cls = match g.table.get(&r) {
                Some(p) => p.clone(),
                None => MultiPoly::zero(dim),
            };
            let mut acc = MultiPoly::zero(dim);
            let mut power = MultiPoly::one(dim);
            for (j, a_j) in reindexed.iter().enumerate() {
                if j > 0 {
                    power = power.mul(&cls);
                }
                if !a_j.is_zero() {
                    acc = acc.add(&a_j.mul(&power));
                }
            }
            if !acc.is_zero() {
                table.insert(r, acc);
            }
        }
    }
    let mut out = QuasiPolynomial {
        dim,
        periods: g.periods.clone(),
        table,
    };
    out.normalize();
    Ok(out)
}

/// Precomposition with an integer affine map: `h(x) = p(maps(x))` where
/// every map has integer coefficients and constant (so residue dispatch
/// carries through the substitution).
pub fn qp_int_affine(
    p: &QuasiPolynomial,
    maps: &[AffineForm],
    out_dim: usize,
) -> Result<QuasiPolynomial, Error> {
    if maps.len() != p.dim {
        return Err(Error::DimensionMismatch {
            expected: p.dim,
            got: maps.len(),
        });
    }
    let mut coeffs: Vec<Vec<Int>> = Vec::with_capacity(p.dim);
    let mut consts: Vec<Int> = Vec::with_capacity(p.dim);
    for m in maps {
        if m.dimension() != out_dim {
            return Err(Error::DimensionMismatch {
                expected: out_dim,
                got: m.dimension(),
            });
        }
        if !m.constant.is_integer() || m.coeffs.iter().any(|c| !c.is_integer()) {
            return Err(Error::InvalidInput(
                "affine substitution must have integer coefficients".into(),
            ));
        }
        coeffs.push(m.coeffs.iter().map(|c| c.to_integer()).collect());
        consts.push(m.constant.to_integer());
    }
    // Output period E_i: maps_j(x) mod d_j must be determined by x_i mod E_i.
    let periods: Vec<u64> = (0..out_dim)
        .map(|i| {
            let mut e = 1u64;
            for (j, &dj) in p.periods.iter().enumerate() {
                let c = scalar::rem_euclid(&coeffs[j][i], dj);
                let g = if c == 0 { dj } else { c.gcd(&dj) };
                e = lcm_u64(e, dj / g);
            }
            e
        })
        .collect();
    let mut table = BTreeMap::new();
    for r in grid(&periods) {
        let ri: Vec<Int> = r.iter().map(|&v| int(v as i64)).collect();
        let key: Vec<u64> = (0..p.dim)
            .map(|j| {
                let mut acc = consts[j].clone();
                for (c, x) in coeffs[j].iter().zip(&ri) {
                    acc += c * x;
                }
                scalar::rem_euclid(&acc, p.periods[j])
            })
            .collect();
        if let Some(q) = p.table.get(&key) {
            let poly = q.substitute_affine(maps);
            if !poly.is_zero() {
                table.insert(r, poly);
            }
        }
    }
    let mut out = QuasiPolynomial {
        dim: out_dim,
        periods,
        table,
    };
    out.normalize();
    Ok(out)
}

/// Upper-end mode of a prefix sum interval starting at 0.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum UpperEnd {
    /// `0 <= lambda < beta`
    Strict,
    /// `0 <= lambda <= beta`
    Closed,
}

/// Closed form of `sum_{lambda in Z, 0 <= lambda (<|<=) beta(x)} p(x - lambda a)`.
///
/// Valid on any set of lattice points where `beta(x) >= 0` (the sum is empty
/// when the integer range is); outside that set the returned
/// quasi-polynomial extrapolates and carries no meaning.
/// The non-constant part shared by every class polynomial, when one exists
/// (floors of a fixed affine form qualify by construction).
fn shared_linear_part(g: &QuasiPolynomial) -> Option<MultiPoly> {
    let mut shared: Option<MultiPoly> = None;
    for cls in g.table.values() {
        let mut lin = MultiPoly::zero(g.dim);
        for (e, c) in cls.terms() {
            if e.iter().any(|&x| x != 0) {
                lin.add_term(e.clone(), c.clone());
            }
        }
        match &shared {
            None => shared = Some(lin),
            Some(l) => {
                if l != &lin {
                    return None;
                }
            }
        }
    }
    shared.or_else(|| Some(MultiPoly::zero(g.dim)))
}

fn constant_term(p: &MultiPoly) -> Rat {
    p.terms()
        .find(|(e, _)| e.iter().all(|&x| x == 0))
        .map(|(_, c)| c.clone())
        .unwrap_or_else(|| rat(0))
}

/// One lambda-class step of `prefix_line_sum`, fused over the combined
/// residue grid: the table entry of `p` hit by a class is determined by the
/// class itself, so the floor's grid is walked once instead of once per
/// entry, and `(L + c)^m` powers are expanded binomially from shared
/// precomputed products. Returns `None` (fall back to the generic path)
/// when the floor's classes do not share their non-constant part.
fn fused_prefix_step(
    p: &QuasiPolynomial,
    a: &[Int],
    j: u64,
    delta: u64,
    n_j: &QuasiPolynomial,
) -> Result<Option<QuasiPolynomial>, Error> {
    let dim = p.dim;
    let Some(lin) = shared_linear_part(n_j) else {
        return Ok(None);
    };
    // substitute x_i <- x_i - a_i (j + delta * mu), mu the fresh slot
    let subst: Vec<AffineForm> = (0..dim)
        .map(|i| {
            let mut coeffs = vec![rat(0); dim + 1];
            coeffs[i] = rat(1);
            coeffs[dim] = -scalar::rat_of(&a[i]) * rat(delta as i64);
            AffineForm::new(coeffs, -scalar::rat_of(&a[i]) * rat(j as i64))
        })
        .collect();
    let mut raw: BTreeMap<Vec<u64>, Vec<MultiPoly>> = BTreeMap::new();
    let mut max_deg = 0usize;
    for (k, q) in &p.table {
        let shifted = q.substitute_affine(&subst);
        let prefix = poly_sum_over_index(&shifted, dim)?;
        let coeffs = prefix.coefficients_of(dim)?;
        let reindexed: Vec<MultiPoly> = coeffs
            .iter()
            .map(|c| {
                let mut out = MultiPoly::zero(dim);
                for (e, v) in c.terms() {
                    out.add_term(e[..dim].to_vec(), v.clone());
                }
                out
            })
            .collect();
        max_deg = max_deg.max(reindexed.len().saturating_sub(1));
        raw.insert(k.clone(), reindexed);
    }
    let mut lin_pow = vec![MultiPoly::one(dim)];
    for _ in 1..=max_deg {
        lin_pow.push(lin_pow.last().unwrap().mul(&lin));
    }
    struct Entry {
        coeffs: Vec<MultiPoly>,
        prods: Vec<Vec<MultiPoly>>,
    }
    let entries: BTreeMap<Vec<u64>, Entry> = raw
        .into_iter()
        .map(|(k, reindexed)| {
            let prods = reindexed
                .iter()
                .enumerate()
                .map(|(m, am)| (0..=m).map(|i| am.mul(&lin_pow[i])).collect())
                .collect();
            (
                k,
                Entry {
                    coeffs: reindexed,
                    prods,
                },
            )
        })
        .collect();
    let periods: Vec<u64> = (0..dim)
        .map(|i| lcm_u64(p.periods[i], n_j.periods[i]))
        .collect();
    let shift: Vec<u64> = (0..dim)
        .map(|i| scalar::rem_euclid(&(&a[i] * int(j as i64)), p.periods[i]))
        .collect();
    let mut table = BTreeMap::new();
    for r in grid(&periods) {
        let k: Vec<u64> = (0..dim)
            .map(|i| {
                let d = p.periods[i];
                ((r[i] % d) + d - shift[i]) % d
            })
            .collect();
        let Some(entry) = entries.get(&k) else {
            continue;
        };
        let ckey: Vec<u64> = (0..dim).map(|i| r[i] % n_j.periods[i]).collect();
        let acc = match n_j.table.get(&ckey) {
            // zero floor on this class: only the slot-free coefficient stays
            None => entry
                .coeffs
                .first()
                .cloned()
                .unwrap_or_else(|| MultiPoly::zero(dim)),
            Some(cls) => {
                let c = constant_term(cls);
                let deg = entry.coeffs.len().saturating_sub(1);
                let mut c_pow = vec![rat(1)];
                for _ in 1..=deg {
                    c_pow.push(c_pow.last().unwrap() * &c);
                }
                let mut acc = MultiPoly::zero(dim);
                for (m, am) in entry.coeffs.iter().enumerate() {
                    if am.is_zero() {
                        continue;
                    }
                    for i in 0..=m {
                        let b = scalar::rat_of(&num_integer::binomial(
                            int(m as i64),
                            int(i as i64),
                        ));
                        let coef = b * &c_pow[m - i];
                        if !coef.is_zero() {
                            acc = acc.add(&entry.prods[m][i].scale(&coef));
                        }
                    }
                }
                acc
            }
        };
        if !acc.is_zero() {
            table.insert(r, acc);
        }
    }
    let mut out = QuasiPolynomial {
        dim,
        periods,
        table,
    };
    out.normalize();
    Ok(Some(out))
}

pub fn prefix_line_sum(
    p: &QuasiPolynomial,
    a: &[Int],
    beta: &AffineForm,
    end: UpperEnd,
) -> Result<QuasiPolynomial, Error> {
    let dim = p.dim;
    if a.len() != dim || beta.dimension() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: a.len(),
        });
    }
    if p.is_zero() {
        return Ok(QuasiPolynomial::zero(dim));
    }
    // Dispatch period for lambda: the residue of x_i - lambda a_i modulo
    // periods[i] is determined by lambda modulo periods[i]/gcd(a_i, periods[i]).
    let delta: u64 = p
        .periods
        .iter()
        .zip(a)
        .map(|(&d, ai)| {
            let am = scalar::rem_euclid(ai, d);
            let g = if am == 0 { d } else { am.gcd(&d) };
            d / g
        })
        .fold(1, lcm_u64);
    let mut result = QuasiPolynomial::zero(dim);
    for j in 0..delta {
        // lambda = j + delta * mu, mu = 0..N_j(x).
        let n_j = match end {
            UpperEnd::Strict => nested_floor(beta, RoundMode::Ceil, &int(-1 - j as i64), delta),
            UpperEnd::Closed => nested_floor(beta, RoundMode::Floor, &int(-(j as i64)), delta),
        };
        if let Some(s_j) = fused_prefix_step(p, a, j, delta, &n_j)? {
            result = result.add(&s_j)?;
            continue;
        }
        let mut family: BTreeMap<Vec<u64>, QuasiPolynomial> = BTreeMap::new();
        for (k, q) in &p.table {
            // Classes r of x that hit this table entry: r = k + j*a mod periods.
            let r: Vec<u64> = k
                .iter()
                .zip(p.periods.iter().zip(a))
                .map(|(&ki, (&di, ai))| {
                    let shift = scalar::rem_euclid(&(ai * int(j as i64)), di);
                    (ki + shift) % di
                })
                .collect();
            // Substitute x_i <- x_i - a_i (j + delta*mu), mu a fresh variable.
            let subst: Vec<AffineForm> = (0..dim)
                .map(|i| {
                    let mut coeffs = vec![rat(0); dim + 1];
                    coeffs[i] = rat(1);
                    coeffs[dim] = -scalar::rat_of(&a[i]) * rat(delta as i64);
                    AffineForm::new(coeffs, -scalar::rat_of(&a[i]) * rat(j as i64))
                })
                .collect();
            let shifted = q.substitute_affine(&subst);
            let prefix = poly_sum_over_index(&shifted, dim)?;
            let composed = compose_poly_qp(&prefix, dim, &n_j)?;
            match family.remove(&r) {
                None => {
                    family.insert(r, composed);
                }
                Some(prev) => {
                    family.insert(r, prev.add(&composed)?);
                }
            }
        }
        let s_j = assemble(dim, &p.periods, &family);
        result = result.add(&s_j)?;
    }
    Ok(result)
}

/// Closed form of the singleton sum `sum_{lambda in Z, lambda = v(x)} p(x - lambda a)`,
/// i.e. `[v(x) integer] * p(x - v(x) a)`.
pub fn singleton_line_sum(
    p: &QuasiPolynomial,
    a: &[Int],
    v: &AffineForm,
) -> Result<QuasiPolynomial, Error> {
    let dim = p.dim;
    if a.len() != dim || v.dimension() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: a.len(),
        });
    }
    if p.is_zero() {
        return Ok(QuasiPolynomial::zero(dim));
    }
    let delta: u64 = p
        .periods
        .iter()
        .zip(a)
        .map(|(&d, ai)| {
            let am = scalar::rem_euclid(ai, d);
            let g = if am == 0 { d } else { am.gcd(&d) };
            d / g
        })
        .fold(1, lcm_u64);
    // Period E_i: the class of x must determine v(x) modulo delta (and its
    // integrality), and x_i modulo periods[i].
    let delta_int = int(delta as i64);
    let periods: Vec<u64> = v
        .coeffs
        .iter()
        .zip(&p.periods)
        .map(|(c, &di)| {
            let e = if c.is_zero() {
                1
            } else {
                let num = c.numer().abs();
                let qd: Int = c.denom() * &delta_int;
                let g = num.gcd(&qd);
                u64::try_from(&(qd / g)).expect("period fits u64")
            };
            lcm_u64(e, di)
        })
        .collect();
    let mut table = BTreeMap::new();
    for r in grid(&periods) {
        let ri: Vec<Int> = r.iter().map(|&x| int(x as i64)).collect();
        let val = v.eval_int(&ri);
        if !val.is_integer() {
            continue;
        }
        let lam = val.numer().clone();
        let key: Vec<u64> = (0..dim)
            .map(|i| scalar::rem_euclid(&(&ri[i] - &lam * &a[i]), p.periods[i]))
            .collect();
        let q = match p.table.get(&key) {
            Some(q) => q,
            None => continue,
        };
        // poly = q(x - v(x) * a), an affine substitution within x.
        let subst: Vec<AffineForm> = (0..dim)
            .map(|i| {
                let ai = scalar::rat_of(&a[i]);
                let mut f = v.scale(&-ai);
                f.coeffs[i] += rat(1);
                f
            })
            .collect();
        let poly = q.substitute_affine(&subst);
        if !poly.is_zero() {
            table.insert(r, poly);
        }
    }
    let mut out = QuasiPolynomial {
        dim,
        periods,
        table,
    };
    out.normalize();
    Ok(out)
}

// --- serde: {dim, period, table: [{residues, poly}]} ---

#[derive(Serialize, Deserialize)]
struct QpEntry {
    residues: Vec<u64>,
    poly: MultiPoly,
}

#[derive(Serialize, Deserialize)]
struct QpRepr {
    dim: usize,
    period: u64,
    table: Vec<QpEntry>,
}

impl Serialize for QuasiPolynomial {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let (d, table) = self.expanded_table();
        let repr = QpRepr {
            dim: self.dim,
            period: d,
            table: table
                .into_iter()
                .map(|(residues, poly)| QpEntry { residues, poly })
                .collect(),
        };
        repr.serialize(s)
    }
}

impl<'de> Deserialize<'de> for QuasiPolynomial {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = QpRepr::deserialize(d)?;
        if repr.period == 0 {
            return Err(D::Error::custom("period must be positive"));
        }
        let mut table = BTreeMap::new();
        for e in repr.table {
            if e.residues.len() != repr.dim || e.residues.iter().any(|&r| r >= repr.period) {
                return Err(D::Error::custom("bad residue vector"));
            }
            let poly = e.poly.with_arity(repr.dim).map_err(D::Error::custom)?;
            table.insert(e.residues, poly);
        }
        Ok(QuasiPolynomial::from_table(repr.dim, repr.period, table))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat_fr};

    /// Parity indicator of x: 1 if x even, 0 if odd.
    fn parity_qp() -> QuasiPolynomial {
        let mut t = BTreeMap::new();
        t.insert(vec![0], MultiPoly::one(1));
        QuasiPolynomial::from_table(1, 2, t)
    }

    fn identity_qp() -> QuasiPolynomial {
        QuasiPolynomial::from_poly(1, MultiPoly::var(1, 0))
    }

    #[test]
    fn add_examples() {
        let f1 = identity_qp();
        let f2 = parity_qp();
        let sum = f1.add(&f2).unwrap();
        for x in 0..=20i64 {
            let expect = rat(x) + if x % 2 == 0 { rat(1) } else { rat(0) };
            assert_eq!(sum.eval_i64(&[x]).unwrap(), expect, "x={x}");
        }
        assert_eq!(sum.eval_i64(&[3]).unwrap(), rat(3));
        // identity + zero
        let z = QuasiPolynomial::zero(1);
        assert_eq!(f1.add(&z).unwrap(), f1);
    }

    #[test]
    fn add_construction_period_is_lcm() {
        // periods 2 and 3 -> construction period 6 before normalization
        let mut t2 = BTreeMap::new();
        t2.insert(vec![0], MultiPoly::one(1));
        let f2 = QuasiPolynomial::from_table(1, 2, t2);
        let mut t3 = BTreeMap::new();
        t3.insert(vec![1], MultiPoly::one(1));
        let f3 = QuasiPolynomial::from_table(1, 3, t3);
        let raw = f2.add_raw(&f3).unwrap();
        assert_eq!(raw.period(), 6);
        for x in 0..=30i64 {
            let expect = rat(i64::from(x % 2 == 0) + i64::from(x % 3 == 1));
            assert_eq!(raw.eval_i64(&[x]).unwrap(), expect);
        }
    }

    #[test]
    fn rebase_examples() {
        // d=1, single member -> itself
        let f = parity_qp();
        let mut fam = BTreeMap::new();
        fam.insert(vec![0], f.clone());
        assert_eq!(qp_rebase(1, 1, &fam), f);
        // d=2, residue 0 -> 1, residue 1 -> 0: parity indicator
        let mut fam = BTreeMap::new();
        fam.insert(vec![0], QuasiPolynomial::constant(1, rat(1)));
        let g = qp_rebase(1, 2, &fam);
        for x in 0..=10i64 {
            assert_eq!(
                g.eval_i64(&[x]).unwrap(),
                if x % 2 == 0 { rat(1) } else { rat(0) }
            );
        }
        assert_eq!(g.period(), 2);
        // d=2 members with internal period 3 -> result period 6
        let mut t3 = BTreeMap::new();
        t3.insert(vec![0], MultiPoly::one(1));
        let h3 = QuasiPolynomial::from_table(1, 3, t3); // 1 iff x % 3 == 0
        let mut fam = BTreeMap::new();
        fam.insert(vec![0], h3.clone());
        fam.insert(vec![1], h3.scale(&rat(5)));
        let g = qp_rebase(1, 2, &fam);
        assert_eq!(g.period(), 6);
        for x in 0..=30i64 {
            let member = if x % 2 == 0 { rat(1) } else { rat(5) };
            let expect = if x % 3 == 0 { member } else { rat(0) };
            assert_eq!(g.eval_i64(&[x]).unwrap(), expect, "x={x}");
        }
    }

    #[test]
    fn floor_affine_examples() {
        // (x-1)/2 floor
        let form = AffineForm::new(vec![rat_fr(1, 2)], rat_fr(-1, 2));
        let f = floor_affine(&form, RoundMode::Floor);
        for x in -10..=10i64 {
            let expect = (x - 1).div_euclid(2);
            assert_eq!(f.eval_i64(&[x]).unwrap(), rat(expect), "x={x}");
        }
        assert_eq!(f.period(), 2);
        // integer form x+3 -> itself, period 1
        let form = AffineForm::new(vec![rat(1)], rat(3));
        let f = floor_affine(&form, RoundMode::Floor);
        assert_eq!(f.period(), 1);
        for x in -5..=5i64 {
            assert_eq!(f.eval_i64(&[x]).unwrap(), rat(x + 3));
        }
        // x at x=-3 -> -3 (mathematical remainder convention)
        let form = AffineForm::coordinate(1, 0);
        let f = floor_affine(&form, RoundMode::Floor);
        assert_eq!(f.eval_i64(&[-3]).unwrap(), rat(-3));
        // ceil mode
        let form = AffineForm::new(vec![rat_fr(1, 3)], rat(0));
        let f = floor_affine(&form, RoundMode::Ceil);
        for x in -9..=9i64 {
            let expect = scalar::rat_ceil(&rat_fr(x, 3));
            assert_eq!(f.eval_i64(&[x]).unwrap(), scalar::rat_of(&expect));
        }
    }

    #[test]
    fn floor_affine_random_forms() {
        // pseudo-random rational forms with denominators <= 6, t = 2
        let mut seed = 0x9e3779b9u64;
        let mut next = move || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (seed >> 33) as i64
        };
        for _ in 0..40 {
            let c1 = rat_fr(next() % 7, 1 + (next() % 6).abs());
            let c2 = rat_fr(next() % 7, 1 + (next() % 6).abs());
            let c0 = rat_fr(next() % 7, 1 + (next() % 6).abs());
            let form = AffineForm::new(vec![c1, c2], c0);
            let f = floor_affine(&form, RoundMode::Floor);
            for x in (-12..=12i64).step_by(3) {
                for y in (-12..=12i64).step_by(4) {
                    let v = form.eval(&[rat(x), rat(y)]);
                    assert_eq!(
                        f.eval_i64(&[x, y]).unwrap(),
                        scalar::rat_of(&scalar::rat_floor(&v))
                    );
                }
            }
        }
    }

    #[test]
    fn compose_examples() {
        // p = slot -> g itself
        let g = floor_affine(&AffineForm::new(vec![rat_fr(1, 2)], rat(0)), RoundMode::Floor);
        let p = MultiPoly::var(2, 1);
        let h = compose_poly_qp(&p, 1, &g).unwrap();
        for x in 0..=10i64 {
            assert_eq!(h.eval_i64(&[x]).unwrap(), g.eval_i64(&[x]).unwrap());
        }
        // p = slot^2, g = floor(x/2): at 5 -> 4
        let p = MultiPoly::var(2, 1).pow(2);
        let h = compose_poly_qp(&p, 1, &g).unwrap();
        assert_eq!(h.eval_i64(&[5]).unwrap(), rat(4));
        for x in 0..=10i64 {
            let fl = x.div_euclid(2);
            assert_eq!(h.eval_i64(&[x]).unwrap(), rat(fl * fl));
        }
        // p = x1 + slot, g = parity: at 3 -> 3 + 0 = 3... parity(3)=0
        let p = MultiPoly::var(2, 0).add(&MultiPoly::var(2, 1));
        let h = compose_poly_qp(&p, 1, &parity_qp()).unwrap();
        assert_eq!(h.eval_i64(&[3]).unwrap(), rat(3));
        assert_eq!(h.eval_i64(&[4]).unwrap(), rat(5));
    }

    #[test]
    fn compose_rejects_non_integer_valued() {
        let mut t = BTreeMap::new();
        t.insert(vec![0], MultiPoly::constant(1, rat_fr(1, 2)));
        let g = QuasiPolynomial::from_table(1, 1, t);
        let p = MultiPoly::var(2, 1);
        assert!(matches!(
            compose_poly_qp(&p, 1, &g),
            Err(Error::NotIntegerValued(_))
        ));
    }

    #[test]
    fn prefix_line_sum_matches_direct() {
        // p = 1 over N^2, a = (1,0), beta = x1, closed: sum_{0..x1} 1 = x1+1
        let p = QuasiPolynomial::constant(2, rat(1));
        let a = [int(1), int(0)];
        let beta = AffineForm::coordinate(2, 0);
        let s = prefix_line_sum(&p, &a, &beta, UpperEnd::Closed).unwrap();
        for x in 0..=15i64 {
            assert_eq!(s.eval_i64(&[x, 3]).unwrap(), rat(x + 1));
        }
        // strict end: sum_{0 <= l < x1} 1 = x1
        let s = prefix_line_sum(&p, &a, &beta, UpperEnd::Strict).unwrap();
        for x in 0..=15i64 {
            assert_eq!(s.eval_i64(&[x, 3]).unwrap(), rat(x));
        }
    }

    #[test]
    fn prefix_line_sum_periodic_piece() {
        // p = parity of x1 (2-dim), a = (1,1), beta = x1/2 closed.
        let mut t = BTreeMap::new();
        t.insert(vec![0, 0], MultiPoly::one(2));
        t.insert(vec![0, 1], MultiPoly::one(2));
        let p = QuasiPolynomial::from_table(2, 2, t);
        let a = [int(1), int(1)];
        let beta = AffineForm::new(vec![rat_fr(1, 2), rat(0)], rat(0));
        let s = prefix_line_sum(&p, &a, &beta, UpperEnd::Closed).unwrap();
        for x in 0..=20i64 {
            for y in 0..=6i64 {
                let bound = x / 2; // floor(x/2) since x >= 0
                let mut direct = 0;
                for l in 0..=bound {
                    if (x - l).rem_euclid(2) == 0 {
                        direct += 1;
                    }
                }
                assert_eq!(s.eval_i64(&[x, y]).unwrap(), rat(direct), "x={x} y={y}");
            }
        }
    }

    #[test]
    fn singleton_line_sum_matches_direct() {
        // p = x1 + x2 as polynomial, a = (2,3), v = x1/2.
        let p = QuasiPolynomial::from_poly(
            2,
            MultiPoly::var(2, 0).add(&MultiPoly::var(2, 1)),
        );
        let a = [int(2), int(3)];
        let v = AffineForm::new(vec![rat_fr(1, 2), rat(0)], rat(0));
        let s = singleton_line_sum(&p, &a, &v).unwrap();
        for x in 0..=12i64 {
            for y in 0..=12i64 {
                let expect = if x % 2 == 0 {
                    let l = x / 2;
                    rat((x - 2 * l) + (y - 3 * l))
                } else {
                    rat(0)
                };
                assert_eq!(s.eval_i64(&[x, y]).unwrap(), expect, "x={x} y={y}");
            }
        }
    }

    #[test]
    fn int_affine_substitution() {
        // h(x) = parity(2 - x): residue flips through the map.
        let g = parity_qp();
        let m = AffineForm::new(vec![rat(-1)], rat(2));
        let h = qp_int_affine(&g, &[m], 1).unwrap();
        for x in -6..=6i64 {
            assert_eq!(h.eval_i64(&[x]).unwrap(), g.eval_i64(&[2 - x]).unwrap());
        }
        // dimension change: p(x1, x2) = x1 * [x2 even], maps (y, 3y).
        let mut t = BTreeMap::new();
        t.insert(vec![0, 0], MultiPoly::var(2, 0));
        t.insert(vec![1, 0], MultiPoly::var(2, 0));
        let p = QuasiPolynomial::from_table(2, 2, t);
        let maps = [
            AffineForm::new(vec![rat(1)], rat(0)),
            AffineForm::new(vec![rat(3)], rat(0)),
        ];
        let h = qp_int_affine(&p, &maps, 1).unwrap();
        for y in 0..=10i64 {
            let expect = if (3 * y) % 2 == 0 { rat(y) } else { rat(0) };
            assert_eq!(h.eval_i64(&[y]).unwrap(), expect);
        }
        // non-integer map rejected
        let bad = AffineForm::new(vec![rat_fr(1, 2)], rat(0));
        assert!(qp_int_affine(&g, &[bad], 1).is_err());
    }

    #[test]
    fn serde_round_trip() {
        let f = floor_affine(
            &AffineForm::new(vec![rat_fr(1, 2), rat_fr(2, 3)], rat_fr(-1, 6)),
            RoundMode::Floor,
        );
        let j = serde_json::to_string(&f).unwrap();
        let g: QuasiPolynomial = serde_json::from_str(&j).unwrap();
        assert_eq!(f, g);
        let j2 = serde_json::to_string(&g).unwrap();
        assert_eq!(j, j2);
    }

    #[test]
    fn normalization_collapses_redundant_period() {
        let mut t = BTreeMap::new();
        t.insert(vec![0], MultiPoly::one(1));
        t.insert(vec![1], MultiPoly::one(1));
        t.insert(vec![2], MultiPoly::one(1));
        let f = QuasiPolynomial::from_table(1, 3, t);
        assert_eq!(f.period(), 1);
        assert_eq!(f, QuasiPolynomial::constant(1, rat(1)));
    }
}
