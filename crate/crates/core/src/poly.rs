//! Sparse multivariate polynomials and affine forms over exact rationals.

use crate::error::Error;
use crate::scalar::{self, int, rat, Int, Rat};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::ser::SerializeSeq;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::BTreeMap;
use std::fmt;

/// A sparse multivariate polynomial with rational coefficients.
///
/// Variables are identified by index `0..nvars`. No stored coefficient is
/// zero; the zero polynomial has an empty term map.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MultiPoly {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, Rat>,
}

impl MultiPoly {
    pub fn zero(nvars: usize) -> Self {
        MultiPoly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: Rat) -> Self {
        let mut p = Self::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(vec![0; nvars], c);
        }
        p
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, rat(1))
    }

    /// The monomial `x_i`.
    pub fn var(nvars: usize, i: usize) -> Self {
        assert!(i < nvars);
        let mut e = vec![0u32; nvars];
        e[i] = 1;
        let mut p = Self::zero(nvars);
        p.terms.insert(e, rat(1));
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &Rat)> {
        self.terms.iter()
    }

    pub fn add_term(&mut self, exps: Vec<u32>, coeff: Rat) {
        assert_eq!(exps.len(), self.nvars);
        if coeff.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(exps) {
            Entry::Vacant(v) => {
                v.insert(coeff);
            }
            Entry::Occupied(mut o) => {
                let s = o.get().clone() + coeff;
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.nvars, other.nvars);
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            out.terms.insert(e.clone(), -c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, k: &Rat) -> Self {
        if k.is_zero() {
            return Self::zero(self.nvars);
        }
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            out.terms.insert(e.clone(), c.clone() * k);
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.nvars, other.nvars);
        let mut out = Self::zero(self.nvars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(e, c1.clone() * c2.clone());
            }
        }
        out
    }

    pub fn pow(&self, mut n: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one(self.nvars);
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Exact evaluation at a rational point.
    pub fn eval(&self, x: &[Rat]) -> Result<Rat, Error> {
        if x.len() != self.nvars {
            return Err(Error::DimensionMismatch {
                expected: self.nvars,
                got: x.len(),
            });
        }
        let mut acc = rat(0);
        for (e, c) in &self.terms {
            let mut term = c.clone();
            for (i, &ei) in e.iter().enumerate() {
                for _ in 0..ei {
                    term *= x[i].clone();
                }
            }
            acc += term;
        }
        Ok(acc)
    }

    pub fn eval_int(&self, x: &[Int]) -> Result<Rat, Error> {
        let xr: Vec<Rat> = x.iter().map(scalar::rat_of).collect();
        self.eval(&xr)
    }

    /// Polynomial composition: replace every variable by an affine form over a
    /// (possibly different) variable set. `subst[i]` is the image of `x_i`.
    pub fn substitute_affine(&self, subst: &[AffineForm]) -> Self {
        assert_eq!(subst.len(), self.nvars);
        let out_vars = subst
            .first()
            .map(|f| f.dimension())
            .unwrap_or(self.nvars);
        for f in subst {
            assert_eq!(f.dimension(), out_vars);
        }
        let images: Vec<MultiPoly> = subst.iter().map(|f| f.to_poly()).collect();
        let mut out = Self::zero(out_vars);
        for (e, c) in &self.terms {
            let mut term = Self::constant(out_vars, c.clone());
            for (i, &ei) in e.iter().enumerate() {
                if ei > 0 {
                    term = term.mul(&images[i].pow(ei));
                }
            }
            out = out.add(&term);
        }
        out
    }

    /// Writes the polynomial as `sum_j a_j(rest) * x_v^j` and returns the
    /// coefficient polynomials `a_j` (with the exponent of `x_v` zeroed out).
    pub fn coefficients_of(&self, v: usize) -> Result<Vec<MultiPoly>, Error> {
        if v >= self.nvars {
            return Err(Error::SummationVarNotFound(v));
        }
        let deg = self.terms.keys().map(|e| e[v]).max().unwrap_or(0) as usize;
        let mut out = vec![Self::zero(self.nvars); deg + 1];
        for (e, c) in &self.terms {
            let j = e[v] as usize;
            let mut e2 = e.clone();
            e2[v] = 0;
            out[j].add_term(e2, c.clone());
        }
        Ok(out)
    }

    /// Degree in variable `v`.
    pub fn degree_in(&self, v: usize) -> u32 {
        self.terms.keys().map(|e| e[v]).max().unwrap_or(0)
    }

    /// Renders with variable names `names[i]`.
    pub fn render(&self, names: &[String]) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let mut parts = Vec::new();
        for (e, c) in self.terms.iter().rev() {
            let mut monos = Vec::new();
            for (i, &ei) in e.iter().enumerate() {
                if ei == 1 {
                    monos.push(names[i].clone());
                } else if ei > 1 {
                    monos.push(format!("{}^{}", names[i], ei));
                }
            }
            let coeff_str = if c.is_one() && !monos.is_empty() {
                String::new()
            } else if (-c.clone()).is_one() && !monos.is_empty() {
                "-".to_string()
            } else if c.is_integer() {
                c.numer().to_string()
            } else {
                format!("{}/{}", c.numer(), c.denom())
            };
            let body = if monos.is_empty() {
                coeff_str
            } else if coeff_str.is_empty() || coeff_str == "-" {
                format!("{}{}", coeff_str, monos.join("*"))
            } else {
                format!("{}*{}", coeff_str, monos.join("*"))
            };
            parts.push(body);
        }
        let mut s = String::new();
        for (k, p) in parts.iter().enumerate() {
            if k == 0 {
                s.push_str(p);
            } else if let Some(stripped) = p.strip_prefix('-') {
                s.push_str(" - ");
                s.push_str(stripped);
            } else {
                s.push_str(" + ");
                s.push_str(p);
            }
        }
        s
    }
}

impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = (1..=self.nvars).map(|i| format!("x{i}")).collect();
        write!(f, "{}", self.render(&names))
    }
}

/// The Faulhaber polynomial `p_j` with `p_j(x) = sum_{l=0..x} l^j` for
/// integer `x >= 0` and `p_j(-1) = 0`.
///
/// Built from the telescoping identity
/// `sum_{i<=j} C(j+1,i) p_i(x) = (x+1)^{j+1}`.
pub fn faulhaber(j: u32) -> MultiPoly {
    let x_plus_1 = MultiPoly::var(1, 0).add(&MultiPoly::one(1));
    let mut ps: Vec<MultiPoly> = Vec::with_capacity(j as usize + 1);
    for jj in 0..=j {
        let mut rhs = x_plus_1.pow(jj + 1);
        for (i, pi) in ps.iter().enumerate() {
            let c = binomial(jj + 1, i as u32);
            rhs = rhs.sub(&pi.scale(&c));
        }
        ps.push(rhs.scale(&(rat(1) / rat(jj as i64 + 1))));
    }
    ps.pop().unwrap()
}

fn binomial(n: u32, k: u32) -> Rat {
    let mut num = int(1);
    let mut den = int(1);
    for i in 0..k {
        num *= int((n - i) as i64);
        den *= int((i + 1) as i64);
    }
    Rat::new(num, den)
}

/// Closed form for the prefix sum over one designated variable.
///
/// Given `q` in variables `(.., lambda, ..)` with summation index `lambda = v`,
/// returns `p` with `p(.., N, ..) = sum_{lambda=0..N} q(.., lambda, ..)` for
/// all integers `N >= 0` and `p(.., -1, ..) = 0` identically.
pub fn poly_sum_over_index(q: &MultiPoly, v: usize) -> Result<MultiPoly, Error> {
    if v >= q.nvars() {
        return Err(Error::SummationVarNotFound(v));
    }
    let coeffs = q.coefficients_of(v)?;
    let mut out = MultiPoly::zero(q.nvars());
    for (j, a_j) in coeffs.into_iter().enumerate() {
        if a_j.is_zero() {
            continue;
        }
        // Embed faulhaber(j), a univariate polynomial, into slot v.
        let f = faulhaber(j as u32);
        let mut f_embedded = MultiPoly::zero(q.nvars());
        for (e, c) in f.terms() {
            let mut e2 = vec![0u32; q.nvars()];
            e2[v] = e[0];
            f_embedded.add_term(e2, c.clone());
        }
        out = out.add(&a_j.mul(&f_embedded));
    }
    Ok(out)
}

/// A rational affine form `sum_i coeff_i x_i + constant`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct AffineForm {
    pub coeffs: Vec<Rat>,
    pub constant: Rat,
}

impl AffineForm {
    pub fn new(coeffs: Vec<Rat>, constant: Rat) -> Self {
        AffineForm { coeffs, constant }
    }

    pub fn zero(dim: usize) -> Self {
        AffineForm {
            coeffs: vec![rat(0); dim],
            constant: rat(0),
        }
    }

    pub fn constant_form(dim: usize, c: Rat) -> Self {
        AffineForm {
            coeffs: vec![rat(0); dim],
            constant: c,
        }
    }

    /// The coordinate form `x_i`.
    pub fn coordinate(dim: usize, i: usize) -> Self {
        let mut f = Self::zero(dim);
        f.coeffs[i] = rat(1);
        f
    }

    pub fn dimension(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_zero(&self) -> bool {
        self.constant.is_zero() && self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn eval(&self, x: &[Rat]) -> Rat {
        let mut acc = self.constant.clone();
        for (c, xi) in self.coeffs.iter().zip(x) {
            acc += c.clone() * xi.clone();
        }
        acc
    }

    pub fn eval_int(&self, x: &[Int]) -> Rat {
        let mut acc = self.constant.clone();
        for (c, xi) in self.coeffs.iter().zip(x) {
            acc += c.clone() * scalar::rat_of(xi);
        }
        acc
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dimension(), other.dimension());
        AffineForm {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a.clone() + b.clone())
                .collect(),
            constant: self.constant.clone() + other.constant.clone(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        AffineForm {
            coeffs: self.coeffs.iter().map(|c| -c.clone()).collect(),
            constant: -self.constant.clone(),
        }
    }

    pub fn scale(&self, k: &Rat) -> Self {
        AffineForm {
            coeffs: self.coeffs.iter().map(|c| c.clone() * k).collect(),
            constant: self.constant.clone() * k,
        }
    }

    pub fn add_constant(&self, k: &Rat) -> Self {
        AffineForm {
            coeffs: self.coeffs.clone(),
            constant: self.constant.clone() + k,
        }
    }

    pub fn to_poly(&self) -> MultiPoly {
        let n = self.dimension();
        let mut p = MultiPoly::constant(n, self.constant.clone());
        for (i, c) in self.coeffs.iter().enumerate() {
            if !c.is_zero() {
                let mut e = vec![0u32; n];
                e[i] = 1;
                p.add_term(e, c.clone());
            }
        }
        p
    }

    /// Least common multiple of all coefficient and constant denominators.
    pub fn denominator_lcm(&self) -> Int {
        let mut l = self.constant.denom().clone();
        for c in &self.coeffs {
            l = l.lcm(c.denom());
        }
        l.abs()
    }
}

/// Composition `p(subst(x))` where every variable of `p` has an affine image.
pub fn poly_affine_substitute(p: &MultiPoly, subst: &[AffineForm]) -> MultiPoly {
    p.substitute_affine(subst)
}

// --- serde: polynomials as lists of {exponents, coeff} ---

#[derive(Serialize, Deserialize)]
struct TermRepr {
    exponents: Vec<u32>,
    coeff: String,
}

impl Serialize for MultiPoly {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.terms.len()))?;
        for (e, c) in &self.terms {
            seq.serialize_element(&TermRepr {
                exponents: e.clone(),
                coeff: scalar::rat_to_string(c),
            })?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for MultiPoly {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error as _;
        let terms = Vec::<TermRepr>::deserialize(d)?;
        let nvars = terms
            .first()
            .map(|t| t.exponents.len())
            .ok_or_else(|| D::Error::custom("cannot infer arity of empty polynomial"));
        // Zero polynomials serialize as empty lists; arity is recovered from
        // the enclosing quasi-polynomial, so default to 0 here and let the
        // caller re-embed.
        let nvars = match nvars {
            Ok(n) => n,
            Err(_) => 0,
        };
        let mut p = MultiPoly::zero(nvars);
        for t in terms {
            if t.exponents.len() != nvars {
                return Err(D::Error::custom("inconsistent exponent vector length"));
            }
            let c = scalar::rat_from_str(&t.coeff).map_err(D::Error::custom)?;
            p.add_term(t.exponents, c);
        }
        Ok(p)
    }
}

impl MultiPoly {
    /// Re-embeds a deserialized polynomial into arity `nvars` (used when the
    /// stored term list was empty and the arity could not be inferred).
    pub fn with_arity(self, nvars: usize) -> Result<Self, String> {
        if self.terms.is_empty() {
            return Ok(Self::zero(nvars));
        }
        if self.nvars != nvars {
            return Err(format!(
                "polynomial arity {} does not match expected {}",
                self.nvars, nvars
            ));
        }
        Ok(self)
    }
}
