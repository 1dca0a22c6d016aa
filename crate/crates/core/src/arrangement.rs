//! Rational hyperplane arrangements and their sign-vector regions.
//!
//! An arrangement is a finite family of integer hyperplanes (normals with an
//! optional constant offset) over `N^t` or `Z^t` that always includes the
//! coordinate planes. Points are equivalent when every plane assigns them the
//! same sign; the classes are the *regions*. Region enumeration produces a
//! lattice witness per nonempty region using exact rational LP feasibility,
//! and `line_refinement` adds the crossing planes needed to sum a piecewise
//! quasi-polynomial along a lattice line.

use crate::error::Error;
use crate::intlin::solve_int_linear;
use crate::lp::{self, Cmp, Constraint, LpOutcome};
use crate::poly::AffineForm;
use crate::scalar::{self, int, rat, Int, Rat};
use num_integer::Integer;
use num_traits::{Signed, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum Domain {
    /// The natural orthant `N^t`.
    N,
    /// The full lattice `Z^t`.
    Z,
}

impl Serialize for Domain {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Domain::N => s.serialize_str("N"),
            Domain::Z => s.serialize_str("Z"),
        }
    }
}

impl<'de> Deserialize<'de> for Domain {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match String::deserialize(d)?.as_str() {
            "N" => Ok(Domain::N),
            "Z" => Ok(Domain::Z),
            other => Err(D::Error::custom(format!("unknown domain {other:?}"))),
        }
    }
}

/// An integer hyperplane `normal . x + constant = 0` in canonical form:
/// the gcd of all entries (normal and constant) is 1 and the first nonzero
/// normal entry is positive.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct Hyperplane {
    normal: Vec<Int>,
    constant: Int,
}

impl Hyperplane {
    /// Canonicalizes; returns `None` for a zero normal.
    pub fn new(normal: Vec<Int>, constant: Int) -> Option<Self> {
        if normal.iter().all(|v| v.is_zero()) {
            return None;
        }
        let mut g = constant.abs();
        for v in &normal {
            g = g.gcd(v);
        }
        let mut normal: Vec<Int> = normal.iter().map(|v| v / &g).collect();
        let mut constant = constant / &g;
        let lead = normal.iter().find(|v| !v.is_zero()).unwrap();
        if lead.is_negative() {
            for v in &mut normal {
                *v = -v.clone();
            }
            constant = -constant;
        }
        Some(Hyperplane { normal, constant })
    }

    /// Clears denominators of a rational affine form. `None` when the linear
    /// part vanishes.
    pub fn from_affine(f: &AffineForm) -> Option<Self> {
        let m = f.denominator_lcm();
        let mr = scalar::rat_of(&m);
        let normal: Vec<Int> = f
            .coeffs
            .iter()
            .map(|c| (c * &mr).to_integer())
            .collect();
        let constant = (&f.constant * mr).to_integer();
        Self::new(normal, constant)
    }

    pub fn coordinate(dim: usize, i: usize) -> Self {
        let mut normal = vec![int(0); dim];
        normal[i] = int(1);
        Hyperplane {
            normal,
            constant: int(0),
        }
    }

    pub fn normal(&self) -> &[Int] {
        &self.normal
    }

    pub fn constant(&self) -> &Int {
        &self.constant
    }

    pub fn dimension(&self) -> usize {
        self.normal.len()
    }

    pub fn is_through_origin(&self) -> bool {
        self.constant.is_zero()
    }

    pub fn eval(&self, x: &[Int]) -> Int {
        let mut acc = self.constant.clone();
        for (n, xi) in self.normal.iter().zip(x) {
            acc += n * xi;
        }
        acc
    }

    pub fn eval_rat(&self, x: &[Rat]) -> Rat {
        let mut acc = scalar::rat_of(&self.constant);
        for (n, xi) in self.normal.iter().zip(x) {
            acc += scalar::rat_of(n) * xi;
        }
        acc
    }

    pub fn to_affine(&self) -> AffineForm {
        AffineForm::new(
            self.normal.iter().map(scalar::rat_of).collect(),
            scalar::rat_of(&self.constant),
        )
    }

    pub fn render(&self, names: &[String]) -> String {
        format!("{} = 0", self.to_affine().to_poly().render(names))
    }
}

#[derive(Serialize, Deserialize)]
struct HyperplaneRepr {
    #[serde(
        serialize_with = "scalar::serialize_int_vec",
        deserialize_with = "scalar::deserialize_int_vec"
    )]
    normal: Vec<Int>,
    #[serde(
        serialize_with = "scalar::serialize_int",
        deserialize_with = "scalar::deserialize_int"
    )]
    constant: Int,
}

impl Serialize for Hyperplane {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        HyperplaneRepr {
            normal: self.normal.clone(),
            constant: self.constant.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Hyperplane {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = HyperplaneRepr::deserialize(d)?;
        let h = Hyperplane::new(r.normal.clone(), r.constant.clone())
            .ok_or_else(|| D::Error::custom("zero normal"))?;
        if h.normal != r.normal || h.constant != r.constant {
            return Err(D::Error::custom("hyperplane not in canonical form"));
        }
        Ok(h)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum Sign {
    Neg,
    Zero,
    Pos,
}

impl Sign {
    pub fn of_int(v: &Int) -> Sign {
        if v.is_zero() {
            Sign::Zero
        } else if v.is_positive() {
            Sign::Pos
        } else {
            Sign::Neg
        }
    }

    pub fn of_rat(v: &Rat) -> Sign {
        if v.is_zero() {
            Sign::Zero
        } else if v.is_positive() {
            Sign::Pos
        } else {
            Sign::Neg
        }
    }

    pub fn chr(self) -> char {
        match self {
            Sign::Pos => '+',
            Sign::Zero => '0',
            Sign::Neg => '-',
        }
    }
}

/// One sign per plane of an arrangement; a feasible sign vector names a region.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct SignVector(pub Vec<Sign>);

impl SignVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_string(&self) -> String {
        self.0.iter().map(|s| s.chr()).collect()
    }

    pub fn parse(s: &str) -> Result<Self, Error> {
        s.chars()
            .map(|c| match c {
                '+' => Ok(Sign::Pos),
                '0' => Ok(Sign::Zero),
                '-' => Ok(Sign::Neg),
                other => Err(Error::InvalidInput(format!(
                    "invalid sign character {other:?}"
                ))),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(SignVector)
    }
}

impl fmt::Display for SignVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.as_string())
    }
}

impl Serialize for SignVector {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.as_string())
    }
}

impl<'de> Deserialize<'de> for SignVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        SignVector::parse(&String::deserialize(d)?).map_err(D::Error::custom)
    }
}

/// A region certificate: a sign vector together with a lattice point
/// realizing it inside the domain.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegionWitness {
    pub sign_vector: SignVector,
    #[serde(
        serialize_with = "scalar::serialize_int_vec",
        deserialize_with = "scalar::deserialize_int_vec"
    )]
    pub point: Vec<Int>,
}

/// A finite plane family over `N^t` or `Z^t` including all coordinate planes,
/// kept sorted and duplicate-free. The sorted order is the linear order used
/// for refinement bookkeeping.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct Arrangement {
    dim: usize,
    domain: Domain,
    planes: Vec<Hyperplane>,
}

impl Arrangement {
    /// Builds from any plane list; coordinate planes are added, duplicates
    /// removed, and the list sorted into canonical order.
    pub fn new(dim: usize, domain: Domain, planes: Vec<Hyperplane>) -> Result<Self, Error> {
        let mut all = planes;
        for h in &all {
            if h.dimension() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: h.dimension(),
                });
            }
        }
        for i in 0..dim {
            all.push(Hyperplane::coordinate(dim, i));
        }
        all.sort();
        all.dedup();
        Ok(Arrangement {
            dim,
            domain,
            planes: all,
        })
    }

    pub fn coordinate_only(dim: usize, domain: Domain) -> Self {
        Arrangement::new(dim, domain, Vec::new()).unwrap()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn planes(&self) -> &[Hyperplane] {
        &self.planes
    }

    pub fn is_through_origin(&self) -> bool {
        self.planes.iter().all(Hyperplane::is_through_origin)
    }

    pub fn contains_point(&self, x: &[Int]) -> bool {
        x.len() == self.dim && (self.domain == Domain::Z || x.iter().all(|v| !v.is_negative()))
    }

    pub fn sign_vector_of(&self, x: &[Int]) -> Result<SignVector, Error> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        if !self.contains_point(x) {
            return Err(Error::PointOutsideDomain);
        }
        Ok(SignVector(
            self.planes.iter().map(|h| Sign::of_int(&h.eval(x))).collect(),
        ))
    }

    pub(crate) fn sign_vector_of_rat(&self, x: &[Rat]) -> SignVector {
        SignVector(
            self.planes
                .iter()
                .map(|h| Sign::of_rat(&h.eval_rat(x)))
                .collect(),
        )
    }

    /// Union of plane families over the same space.
    pub fn refine(&self, other: &Arrangement) -> Result<Arrangement, Error> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        if self.domain != other.domain {
            return Err(Error::DomainMismatch);
        }
        let mut planes = self.planes.clone();
        planes.extend(other.planes.iter().cloned());
        Arrangement::new(self.dim, self.domain, planes)
    }

    /// The refinement on which summation along direction `a` is piecewise
    /// regular: for each plane not parallel to `a` the crossing functional
    /// `lambda_pi(x) = pi(x) / (normal . a)` is formed, and planes are added
    /// for every difference of two crossing functionals, every difference of
    /// a crossing functional and a bound form, every bound form itself, and
    /// every difference of two bound forms.
    pub fn line_refinement(
        &self,
        a: &[Int],
        extra_forms: &[AffineForm],
    ) -> Result<Arrangement, Error> {
        if a.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: a.len(),
            });
        }
        if a.iter().all(|v| v.is_zero()) {
            return Err(Error::ZeroDirection);
        }
        let mut functionals: Vec<AffineForm> = Vec::new();
        for h in &self.planes {
            let gamma: Int = h.normal.iter().zip(a).map(|(n, ai)| n * ai).sum();
            if gamma.is_zero() {
                continue;
            }
            functionals.push(h.to_affine().scale(&(rat(1) / scalar::rat_of(&gamma))));
        }
        let mut planes = self.planes.clone();
        let mut push = |f: &AffineForm| {
            if let Some(h) = Hyperplane::from_affine(f) {
                planes.push(h);
            }
        };
        for i in 0..functionals.len() {
            for j in i + 1..functionals.len() {
                push(&functionals[i].sub(&functionals[j]));
            }
        }
        for g in extra_forms {
            if g.dimension() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    got: g.dimension(),
                });
            }
            push(g);
            for f in &functionals {
                push(&f.sub(g));
            }
        }
        for i in 0..extra_forms.len() {
            for j in i + 1..extra_forms.len() {
                push(&extra_forms[i].sub(&extra_forms[j]));
            }
        }
        Arrangement::new(self.dim, self.domain, planes)
    }

    /// Feasibility of a (possibly partial) sign assignment over the reals
    /// within the domain orthant: maximizes the minimum strict slack, capped
    /// at 1. Returns an interior rational point if one exists.
    fn real_witness(&self, signs: &[Sign]) -> Result<Option<Vec<Rat>>, Error> {
        let t = self.dim;
        // Variables: x_0..x_{t-1}, s.
        let mut cs: Vec<Constraint> = Vec::new();
        if self.domain == Domain::N {
            for i in 0..t {
                let mut c = vec![rat(0); t + 1];
                c[i] = rat(1);
                cs.push(Constraint::new(c, Cmp::Ge, rat(0)));
            }
        }
        for (h, &sg) in self.planes.iter().zip(signs) {
            let mut c: Vec<Rat> = h.normal.iter().map(scalar::rat_of).collect();
            c.push(rat(0));
            let rhs = -scalar::rat_of(&h.constant);
            match sg {
                Sign::Zero => cs.push(Constraint::new(c, Cmp::Eq, rhs)),
                Sign::Pos => {
                    c[t] = rat(-1);
                    cs.push(Constraint::new(c, Cmp::Ge, rhs));
                }
                Sign::Neg => {
                    for v in c.iter_mut().take(t) {
                        *v = -v.clone();
                    }
                    c[t] = rat(-1);
                    cs.push(Constraint::new(c, Cmp::Ge, -rhs));
                }
            }
        }
        let mut obj = vec![rat(0); t + 1];
        obj[t] = rat(1);
        let mut cap = vec![rat(0); t + 1];
        cap[t] = rat(1);
        cs.push(Constraint::new(cap, Cmp::Le, rat(1)));
        match lp::maximize(&obj, &cs)? {
            LpOutcome::Infeasible => Ok(None),
            LpOutcome::Unbounded => Err(Error::LpFailure("capped slack unbounded".into())),
            LpOutcome::Optimal { value, point } => {
                if value.is_positive() {
                    Ok(Some(point[..t].to_vec()))
                } else {
                    Ok(None)
                }
            }
        }
    }

    /// A closure point of the partial cell where the next unassigned plane
    /// takes the sign opposite to `free` (which must be strict), or `None`
    /// when the plane keeps `free`'s sign over the whole closure — in which
    /// case neither the zero nor the opposite child cell can be nonempty.
    fn far_side_point(&self, signs: &[Sign], free: Sign) -> Result<Option<Vec<Rat>>, Error> {
        let t = self.dim;
        let h = &self.planes[signs.len()];
        let sigma = if free == Sign::Pos { rat(1) } else { rat(-1) };
        let mut cs: Vec<Constraint> = Vec::new();
        if self.domain == Domain::N {
            for i in 0..t {
                let mut c = vec![rat(0); t];
                c[i] = rat(1);
                cs.push(Constraint::new(c, Cmp::Ge, rat(0)));
            }
        }
        for (p, &sg) in self.planes.iter().zip(signs) {
            let mut c: Vec<Rat> = p.normal.iter().map(scalar::rat_of).collect();
            let rhs = -scalar::rat_of(&p.constant);
            match sg {
                Sign::Zero => cs.push(Constraint::new(c, Cmp::Eq, rhs)),
                Sign::Pos => cs.push(Constraint::new(c, Cmp::Ge, rhs)),
                Sign::Neg => {
                    for v in c.iter_mut() {
                        *v = -v.clone();
                    }
                    cs.push(Constraint::new(c, Cmp::Ge, -rhs));
                }
            }
        }
        let obj: Vec<Rat> = h
            .normal
            .iter()
            .map(|n| scalar::rat_of(n) * &sigma)
            .collect();
        // a floor on the value keeps the problem bounded; only the sign of
        // the minimum matters
        let cap_rhs = -scalar::rat_of(&h.constant) * &sigma - rat(1);
        cs.push(Constraint::new(obj.clone(), Cmp::Ge, cap_rhs));
        match lp::minimize(&obj, &cs)? {
            LpOutcome::Infeasible => Err(Error::LpFailure(
                "cell with a witness reported infeasible".into(),
            )),
            LpOutcome::Unbounded => Err(Error::LpFailure("capped objective unbounded".into())),
            LpOutcome::Optimal { value, point } => {
                let total = value + scalar::rat_of(&h.constant) * &sigma;
                Ok(total.is_negative().then_some(point))
            }
        }
    }

    /// Whether a rational point realizes a partial sign assignment (and lies
    /// in the domain orthant for `N`).
    fn rat_signs_match(&self, signs: &[Sign], x: &[Rat]) -> bool {
        (self.domain == Domain::Z || x.iter().all(|v| !v.is_negative()))
            && self
                .planes
                .iter()
                .zip(signs)
                .all(|(h, &sg)| Sign::of_rat(&h.eval_rat(x)) == sg)
    }

    /// The direction along which the newest unassigned plane can be crossed
    /// while staying on every equality plane of `signs`: its normal with the
    /// equality-normal components projected out. `None` when the normal lies
    /// in the equality span, in which case the plane's sign is constant over
    /// the whole cell.
    fn crossing_direction(&self, signs: &[Sign]) -> Option<Vec<Rat>> {
        let h = &self.planes[signs.len()];
        let mut d: Vec<Rat> = h.normal.iter().map(scalar::rat_of).collect();
        let mut basis: Vec<Vec<Rat>> = Vec::new();
        for (p, &sg) in self.planes.iter().zip(signs) {
            if sg != Sign::Zero {
                continue;
            }
            let mut v: Vec<Rat> = p.normal.iter().map(scalar::rat_of).collect();
            for b in &basis {
                let num: Rat = v.iter().zip(b).map(|(a, c)| a * c).sum();
                let den: Rat = b.iter().map(|c| c * c).sum();
                let f = num / den;
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= &f * bi;
                }
            }
            if v.iter().any(|c| !c.is_zero()) {
                basis.push(v);
            }
        }
        for b in &basis {
            let num: Rat = d.iter().zip(b).map(|(a, c)| a * c).sum();
            let den: Rat = b.iter().map(|c| c * c).sum();
            let f = num / den;
            for (di, bi) in d.iter_mut().zip(b) {
                *di -= &f * bi;
            }
        }
        d.iter().any(|c| !c.is_zero()).then_some(d)
    }

    /// Tries to reach the newest child cell by walking from the parent's
    /// witness across the newest plane along `d`. Exact and cheap; any
    /// candidate is verified sign by sign, so `None` only means "fall back
    /// to the LP".
    fn crossing_witness(&self, signs: &[Sign], witness: &[Rat], d: &[Rat]) -> Option<Vec<Rat>> {
        let idx = signs.len() - 1;
        let target = signs[idx];
        let h = &self.planes[idx];
        let t = self.dim;
        let hd: Rat = h
            .normal
            .iter()
            .zip(d)
            .map(|(n, di)| scalar::rat_of(n) * di)
            .sum();
        if hd.is_zero() {
            return None;
        }
        let lam0 = -h.eval_rat(witness) / &hd;
        let at = |lam: &Rat| -> Vec<Rat> {
            witness
                .iter()
                .zip(d)
                .map(|(w, di)| w + lam * di)
                .collect()
        };
        if target == Sign::Zero {
            let cand = at(&lam0);
            return self.rat_signs_match(signs, &cand).then_some(cand);
        }
        // nearest other crossing on either side of lam0 along the ray
        let mut above: Option<Rat> = None;
        let mut below: Option<Rat> = None;
        let mut note = |lam: Rat| {
            if lam > lam0 {
                if above.as_ref().map_or(true, |a| &lam < a) {
                    above = Some(lam);
                }
            } else if lam < lam0 && below.as_ref().map_or(true, |b| &lam > b) {
                below = Some(lam);
            }
        };
        for (p, &sg) in self.planes.iter().zip(signs).take(idx) {
            if sg == Sign::Zero {
                continue;
            }
            let pd: Rat = p
                .normal
                .iter()
                .zip(d)
                .map(|(n, di)| scalar::rat_of(n) * di)
                .sum();
            if !pd.is_zero() {
                note(-p.eval_rat(witness) / pd);
            }
        }
        if self.domain == Domain::N {
            for i in 0..t {
                if !d[i].is_zero() {
                    note(-witness[i].clone() / &d[i]);
                }
            }
        }
        let two = rat(2);
        let candidates = [
            above.map_or_else(|| &lam0 + rat(1), |a| (&lam0 + a) / &two),
            below.map_or_else(|| &lam0 - rat(1), |b| (&lam0 + b) / &two),
        ];
        for lam in candidates {
            let cand = at(&lam);
            if self.rat_signs_match(signs, &cand) {
                return Some(cand);
            }
        }
        None
    }

    fn signs_match(&self, signs: &[Sign], x: &[Int]) -> bool {
        self.contains_point(x)
            && self
                .planes
                .iter()
                .zip(signs)
                .all(|(h, &sg)| Sign::of_int(&h.eval(x)) == sg)
    }

    /// Searches for a lattice witness of a fully assigned sign vector.
    fn lattice_witness(&self, signs: &[Sign], real: &[Rat]) -> Option<Vec<Int>> {
        let t = self.dim;
        if self.is_through_origin() {
            // Regions are cones: clear denominators of the rational witness.
            let mut m = int(1);
            for v in real {
                m = m.lcm(v.denom());
            }
            let x: Vec<Int> = real
                .iter()
                .map(|v| (v * scalar::rat_of(&m)).to_integer())
                .collect();
            return self.signs_match(signs, &x).then_some(x);
        }
        // Solve the equality planes over the integers, then look for an
        // integer point of the strict system in the kernel parameters.
        let mut eq_a: Vec<Vec<Int>> = Vec::new();
        let mut eq_c: Vec<Int> = Vec::new();
        for (h, &sg) in self.planes.iter().zip(signs) {
            if sg == Sign::Zero {
                eq_a.push(h.normal.clone());
                eq_c.push(-h.constant.clone());
            }
        }
        let sol = solve_int_linear(&eq_a, &eq_c)?;
        let (z0, kernel) = if eq_a.is_empty() {
            (vec![int(0); t], (0..t)
                .map(|i| {
                    let mut v = vec![int(0); t];
                    v[i] = int(1);
                    v
                })
                .collect::<Vec<_>>())
        } else {
            (sol.particular, sol.kernel)
        };
        let d = kernel.len();
        // Rows over u: strict planes sigma*(pi(z0 + K u)) >= 1 and, for N,
        // coordinates z0_i + (K u)_i >= 0. All data is integral, so LP
        // infeasibility certifies there is no lattice point either.
        let mut rows: Vec<(Vec<Rat>, Rat)> = Vec::new();
        for (h, &sg) in self.planes.iter().zip(signs) {
            let sigma = match sg {
                Sign::Pos => int(1),
                Sign::Neg => int(-1),
                Sign::Zero => continue,
            };
            let coeffs: Vec<Rat> = (0..d)
                .map(|j| {
                    let mut acc = Int::zero();
                    for (ni, kij) in h.normal.iter().zip(&kernel[j]) {
                        acc += ni * kij;
                    }
                    scalar::rat_of(&(&sigma * acc))
                })
                .collect();
            let at_z0: Int = &sigma * h.eval(&z0);
            rows.push((coeffs, rat(1) - scalar::rat_of(&at_z0)));
        }
        if self.domain == Domain::N {
            for i in 0..t {
                let coeffs: Vec<Rat> = (0..d).map(|j| scalar::rat_of(&kernel[j][i])).collect();
                rows.push((coeffs, -scalar::rat_of(&z0[i])));
            }
        }
        let to_int_point = |u: &[Rat]| -> Vec<Int> {
            (0..t)
                .map(|i| {
                    let mut acc = scalar::rat_of(&z0[i]);
                    for (j, uj) in u.iter().enumerate() {
                        acc += scalar::rat_of(&kernel[j][i]) * uj;
                    }
                    acc.to_integer()
                })
                .collect()
        };
        let round = |u: &[Rat]| -> Vec<Rat> {
            u.iter()
                .map(|v| scalar::rat_of(&scalar::rat_floor(&(v + scalar::rat_fr(1, 2)))))
                .collect()
        };
        let cs: Vec<Constraint> = rows
            .iter()
            .map(|(c, rhs)| Constraint::new(c.clone(), Cmp::Ge, rhs.clone()))
            .collect();
        let u0 = lp::feasible_point(d, &cs).ok()??;
        let candidate = to_int_point(&round(&u0));
        if self.signs_match(signs, &candidate) {
            return Some(candidate);
        }
        // Push for extra slack so that rounding is safe, then retry.
        let mut cs2: Vec<Constraint> = Vec::new();
        for (c, rhs) in &rows {
            let margin: Rat = c.iter().map(|v| v.abs()).sum::<Rat>() / rat(2);
            let mut row = c.clone();
            row.push(-margin);
            cs2.push(Constraint::new(row, Cmp::Ge, rhs.clone()));
        }
        let mut cap = vec![rat(0); d + 1];
        cap[d] = rat(1);
        cs2.push(Constraint::new(cap.clone(), Cmp::Le, rat(1)));
        cs2.push(Constraint::new(cap, Cmp::Ge, rat(0)));
        let mut obj = vec![rat(0); d + 1];
        obj[d] = rat(1);
        if let Ok(LpOutcome::Optimal { point, .. }) = lp::maximize(&obj, &cs2) {
            let candidate = to_int_point(&round(&point[..d]));
            if self.signs_match(signs, &candidate) {
                return Some(candidate);
            }
        }
        // Last resort: search a small integer box around the rounded point.
        let base: Vec<Int> = round(&u0).iter().map(|v| v.to_integer()).collect();
        for radius in [1i64, 2, 4, 8] {
            let offsets = vec![-radius..=radius; d];
            let mut stack = vec![Vec::<i64>::new()];
            while let Some(prefix) = stack.pop() {
                if prefix.len() == d {
                    let u: Vec<Rat> = base
                        .iter()
                        .zip(&prefix)
                        .map(|(b, &o)| scalar::rat_of(b) + rat(o))
                        .collect();
                    let candidate = to_int_point(&u);
                    if self.signs_match(signs, &candidate) {
                        return Some(candidate);
                    }
                } else {
                    let r = offsets[prefix.len()].clone();
                    for o in r {
                        let mut p = prefix.clone();
                        p.push(o);
                        stack.push(p);
                    }
                }
            }
        }
        None
    }

    /// All regions meeting the domain lattice, each with an integer witness,
    /// sorted by sign vector.
    pub fn enumerate_regions(&self) -> Result<Vec<RegionWitness>, Error> {
        let mut out = Vec::new();
        for (signs, real) in self.enumerate_regions_real()? {
            if let Some(point) = self.lattice_witness(&signs.0, &real) {
                out.push(RegionWitness {
                    sign_vector: signs,
                    point,
                });
            }
        }
        out.sort_by(|a, b| a.sign_vector.cmp(&b.sign_vector));
        Ok(out)
    }

    /// All regions nonempty over the reals (within the domain orthant), with
    /// rational interior witnesses. Sorted by sign vector.
    pub(crate) fn enumerate_regions_real(&self) -> Result<Vec<(SignVector, Vec<Rat>)>, Error> {
        let mut out: Vec<(SignVector, Vec<Rat>)> = Vec::new();
        let mut partial: Vec<Sign> = Vec::new();
        if let Some(w) = self.real_witness(&partial)? {
            self.dfs(&mut partial, w, &mut out)?;
        }
        out.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(out)
    }

    fn dfs(
        &self,
        partial: &mut Vec<Sign>,
        witness: Vec<Rat>,
        out: &mut Vec<(SignVector, Vec<Rat>)>,
    ) -> Result<(), Error> {
        if partial.len() == self.planes.len() {
            out.push((SignVector(partial.clone()), witness));
            return Ok(());
        }
        // The parent's witness already realizes one child sign strictly (or
        // exactly, for zero), so that branch needs no feasibility check. And
        // when the next plane's normal lies in the span of the equality
        // normals, its sign is constant over the whole cell, so the other
        // two children are empty without any check either.
        let h = &self.planes[partial.len()];
        let free = Sign::of_rat(&h.eval_rat(&witness));
        let direction = self.crossing_direction(partial);
        let mut pending: Vec<Sign> = Vec::new();
        for sg in [Sign::Zero, Sign::Pos, Sign::Neg] {
            if sg != free && direction.is_none() {
                continue;
            }
            partial.push(sg);
            if sg == free {
                self.dfs(partial, witness.clone(), out)?;
            } else if let Some(w) =
                self.crossing_witness(partial, &witness, direction.as_ref().unwrap())
            {
                self.dfs(partial, w, out)?;
            } else {
                pending.push(sg);
            }
            partial.pop();
        }
        if pending.is_empty() {
            return Ok(());
        }
        if free == Sign::Zero {
            for sg in pending {
                partial.push(sg);
                if let Some(w) = self.real_witness(partial)? {
                    self.dfs(partial, w, out)?;
                }
                partial.pop();
            }
            return Ok(());
        }
        // One weak LP settles both remaining children at once: the infimum
        // of the plane's value (toward the witness's opposite side) over the
        // cell closure is negative exactly when the plane cuts the open cell.
        match self.far_side_point(partial, free)? {
            Some(xm) => {
                let hw = h.eval_rat(&witness);
                let hx = h.eval_rat(&xm);
                // h crosses zero on the open segment witness -> xm
                let lam0 = &hw / (&hw - &hx);
                let half = (&lam0 + rat(1)) / rat(2);
                for sg in pending {
                    let lam = if sg == Sign::Zero { &lam0 } else { &half };
                    let cand: Vec<Rat> = witness
                        .iter()
                        .zip(&xm)
                        .map(|(a, b)| a + lam * (b - a))
                        .collect();
                    partial.push(sg);
                    if self.rat_signs_match(partial, &cand) {
                        self.dfs(partial, cand, out)?;
                    } else if let Some(w) = self.real_witness(partial)? {
                        self.dfs(partial, w, out)?;
                    }
                    partial.pop();
                }
            }
            None => {
                // sign constant over the closure: both children are empty
            }
        }
        Ok(())
    }

    pub fn render(&self, names: &[String]) -> String {
        let planes: Vec<String> = self.planes.iter().map(|h| h.render(names)).collect();
        format!(
            "dim {} over {} with planes [{}]",
            self.dim,
            match self.domain {
                Domain::N => "N",
                Domain::Z => "Z",
            },
            planes.join(", ")
        )
    }
}

impl<'de> Deserialize<'de> for Arrangement {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            dim: usize,
            domain: Domain,
            planes: Vec<Hyperplane>,
        }
        let r = Repr::deserialize(d)?;
        let arr = Arrangement::new(r.dim, r.domain, r.planes.clone()).map_err(D::Error::custom)?;
        if arr.planes != r.planes {
            return Err(D::Error::custom(
                "planes must be sorted, duplicate-free, and include coordinate planes",
            ));
        }
        Ok(arr)
    }
}
