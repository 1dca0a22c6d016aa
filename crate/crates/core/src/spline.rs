//! Box splines: piecewise quasi-polynomials over hyperplane-arrangement
//! regions, and the calculus used by all counting constructions.
//!
//! A box spline is a function `F` on the domain lattice given by one
//! quasi-polynomial per region of its arrangement (absent region = zero).
//! The central operation is `bs_line_sum`, the closed form of
//! `S(x) = sum_lambda F(x - lambda a)` over an integer interval `[0, L(x)]`:
//! the line through `x` in direction `a` crosses region walls at affine
//! functionals of `x`, the crossing order is constant per refined region, and
//! each open segment between crossings is summed in closed form.

use crate::arrangement::{Arrangement, Domain, Hyperplane, Sign, SignVector};
use crate::error::Error;
use crate::poly::AffineForm;
use crate::quasi::{
    prefix_line_sum, qp_int_affine, singleton_line_sum, QuasiPolynomial, UpperEnd,
};
use crate::scalar::{self, int, rat, Int, Rat};
use num_traits::{Signed, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::BTreeMap;

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BoxSpline {
    arrangement: Arrangement,
    pieces: BTreeMap<SignVector, QuasiPolynomial>,
}

impl BoxSpline {
    pub fn new(
        arrangement: Arrangement,
        pieces: BTreeMap<SignVector, QuasiPolynomial>,
    ) -> Result<Self, Error> {
        let nplanes = arrangement.planes().len();
        let dim = arrangement.dim();
        let mut clean = BTreeMap::new();
        for (k, p) in pieces {
            if k.len() != nplanes {
                return Err(Error::DimensionMismatch {
                    expected: nplanes,
                    got: k.len(),
                });
            }
            if p.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.dim(),
                });
            }
            if !p.is_zero() {
                clean.insert(k, p);
            }
        }
        Ok(BoxSpline {
            arrangement,
            pieces: clean,
        })
    }

    pub fn zero(dim: usize, domain: Domain) -> Self {
        BoxSpline {
            arrangement: Arrangement::coordinate_only(dim, domain),
            pieces: BTreeMap::new(),
        }
    }

    /// The indicator of the single point `c` (which must lie in the domain).
    pub fn indicator_point(dim: usize, domain: Domain, c: &[Int]) -> Result<Self, Error> {
        let planes: Vec<Hyperplane> = (0..dim)
            .filter_map(|i| {
                let mut normal = vec![int(0); dim];
                normal[i] = int(1);
                Hyperplane::new(normal, -c[i].clone())
            })
            .collect();
        let arrangement = Arrangement::new(dim, domain, planes)?;
        let key = arrangement.sign_vector_of(c)?;
        let mut pieces = BTreeMap::new();
        pieces.insert(key, QuasiPolynomial::constant(dim, rat(1)));
        BoxSpline::new(arrangement, pieces)
    }

    /// The constant function 1 on the whole domain.
    pub fn constant_one(dim: usize, domain: Domain) -> Result<Self, Error> {
        let arrangement = Arrangement::coordinate_only(dim, domain);
        let mut pieces = BTreeMap::new();
        for (signs, _) in arrangement.enumerate_regions_real()? {
            pieces.insert(signs, QuasiPolynomial::constant(dim, rat(1)));
        }
        BoxSpline::new(arrangement, pieces)
    }

    pub fn arrangement(&self) -> &Arrangement {
        &self.arrangement
    }

    pub fn pieces(&self) -> &BTreeMap<SignVector, QuasiPolynomial> {
        &self.pieces
    }

    pub fn dim(&self) -> usize {
        self.arrangement.dim()
    }

    pub fn domain(&self) -> Domain {
        self.arrangement.domain()
    }

    /// Exact evaluation at a lattice point of the domain.
    pub fn eval(&self, x: &[Int]) -> Result<Rat, Error> {
        let signs = self.arrangement.sign_vector_of(x)?;
        match self.pieces.get(&signs) {
            Some(p) => p.eval(x),
            None => Ok(rat(0)),
        }
    }

    pub fn eval_i64(&self, x: &[i64]) -> Result<Rat, Error> {
        let xi: Vec<Int> = x.iter().map(|&v| int(v)).collect();
        self.eval(&xi)
    }

    /// The quasi-polynomial governing the region of a rational point.
    pub(crate) fn piece_at_rat(&self, w: &[Rat]) -> QuasiPolynomial {
        let signs = self.arrangement.sign_vector_of_rat(w);
        match self.pieces.get(&signs) {
            Some(p) => p.clone(),
            None => QuasiPolynomial::zero(self.dim()),
        }
    }

    pub fn render(&self, names: &[String]) -> String {
        let mut out = vec![self.arrangement.render(names)];
        let regions: Vec<SignVector> = self.pieces.keys().cloned().collect();
        let mut sorted = regions;
        sorted.sort_by_key(|s| s.as_string());
        for signs in sorted {
            out.push(format!(
                "  region {}: {}",
                signs.as_string(),
                self.pieces[&signs].render(names)
            ));
        }
        if self.pieces.is_empty() {
            out.push("  (identically zero)".to_string());
        }
        out.join("\n")
    }
}

/// Builds a box spline from a full region table (zeros included), dropping
/// every non-coordinate plane across which no piece changes.
fn from_region_table(
    dim: usize,
    domain: Domain,
    arrangement: &Arrangement,
    full: BTreeMap<SignVector, QuasiPolynomial>,
) -> Result<BoxSpline, Error> {
    let mut planes: Vec<Hyperplane> = arrangement.planes().to_vec();
    let mut table: BTreeMap<Vec<Sign>, QuasiPolynomial> =
        full.into_iter().map(|(k, p)| (k.0, p)).collect();
    let coordinate: Vec<Hyperplane> = (0..dim).map(|i| Hyperplane::coordinate(dim, i)).collect();
    'outer: loop {
        for idx in 0..planes.len() {
            if coordinate.contains(&planes[idx]) {
                continue;
            }
            let mut groups: BTreeMap<Vec<Sign>, QuasiPolynomial> = BTreeMap::new();
            let mut mergeable = true;
            for (key, piece) in &table {
                let mut reduced = key.clone();
                reduced.remove(idx);
                match groups.get(&reduced) {
                    None => {
                        groups.insert(reduced, piece.clone());
                    }
                    Some(existing) => {
                        if existing != piece {
                            mergeable = false;
                            break;
                        }
                    }
                }
            }
            if mergeable {
                planes.remove(idx);
                table = groups;
                continue 'outer;
            }
        }
        break;
    }
    let arrangement = Arrangement::new(dim, domain, planes)?;
    let pieces = table
        .into_iter()
        .map(|(k, p)| (SignVector(k), p))
        .collect();
    BoxSpline::new(arrangement, pieces)
}

/// Pointwise sum over the common refinement.
pub fn bs_add(f1: &BoxSpline, f2: &BoxSpline) -> Result<BoxSpline, Error> {
    let arrangement = f1.arrangement.refine(&f2.arrangement)?;
    let mut full = BTreeMap::new();
    for (signs, w) in arrangement.enumerate_regions_real()? {
        let p = f1.piece_at_rat(&w).add(&f2.piece_at_rat(&w))?;
        full.insert(signs, p);
    }
    from_region_table(f1.dim(), f1.domain(), &arrangement, full)
}

/// The summation interval of `bs_line_sum`.
#[derive(Clone, Debug)]
pub enum BoundKind {
    /// `L(x) = min_i forms_i(x)`; requires `a >= 0` and domain `N^t`.
    MinRatio { forms: Vec<AffineForm> },
    /// `L(x)` is the form attached to the region of `x` in a reference
    /// arrangement (which must be refined into the output).
    PerRegionAffine {
        reference: Arrangement,
        forms: BTreeMap<SignVector, AffineForm>,
    },
}

#[derive(Clone, Debug)]
pub struct BoundSpec {
    pub kind: BoundKind,
    pub closed_lower: bool,
    pub closed_upper: bool,
}

impl BoundSpec {
    pub fn closed_min_ratio(forms: Vec<AffineForm>) -> Self {
        BoundSpec {
            kind: BoundKind::MinRatio { forms },
            closed_lower: true,
            closed_upper: true,
        }
    }

    pub fn closed_per_region(
        reference: Arrangement,
        forms: BTreeMap<SignVector, AffineForm>,
    ) -> Self {
        BoundSpec {
            kind: BoundKind::PerRegionAffine { reference, forms },
            closed_lower: true,
            closed_upper: true,
        }
    }
}

/// Closed form of `S(x) = sum_{lambda in Z, lambda in [0, L(x)]} G(x - lambda a)`
/// (interval ends open or closed per the bound spec).
///
/// With a `MinRatio` bound, regions where the bound is negative carry an
/// empty interval and contribute the zero piece; with a `PerRegionAffine`
/// bound a negative value at a region witness is an error.
pub fn bs_line_sum(g: &BoxSpline, a: &[Int], bound: &BoundSpec) -> Result<BoxSpline, Error> {
    let dim = g.dim();
    if a.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: a.len(),
        });
    }
    if a.iter().all(|v| v.is_zero()) {
        return Err(Error::ZeroDirection);
    }
    let (base, bound_forms) = match &bound.kind {
        BoundKind::MinRatio { forms } => {
            if forms.is_empty() {
                return Err(Error::InvalidInput(
                    "MinRatio bound needs at least one form".into(),
                ));
            }
            if g.domain() != Domain::N || a.iter().any(|v| v.is_negative()) {
                return Err(Error::InvalidInput(
                    "MinRatio bound requires a >= 0 over the natural orthant".into(),
                ));
            }
            (g.arrangement.clone(), forms.clone())
        }
        BoundKind::PerRegionAffine { reference, forms } => {
            let mut fs: Vec<AffineForm> = forms.values().cloned().collect();
            fs.dedup();
            (g.arrangement.refine(reference)?, fs)
        }
    };
    let arr_hat = base.line_refinement(a, &bound_forms)?;
    // Crossing functionals lambda_pi = pi(x) / (normal_pi . a) from G's planes.
    let mut crossings: Vec<AffineForm> = Vec::new();
    for h in g.arrangement.planes() {
        let gamma: Int = h.normal().iter().zip(a).map(|(n, ai)| n * ai).sum();
        if !gamma.is_zero() {
            crossings.push(h.to_affine().scale(&(rat(1) / scalar::rat_of(&gamma))));
        }
    }
    let a_rat: Vec<Rat> = a.iter().map(scalar::rat_of).collect();
    let shifted = |w: &[Rat], lam: &Rat| -> Vec<Rat> {
        w.iter().zip(&a_rat).map(|(wi, ai)| wi - lam * ai).collect()
    };
    let mut full: BTreeMap<SignVector, QuasiPolynomial> = BTreeMap::new();
    // Many regions share the same (piece, marker form) pair; the expensive
    // prefix/singleton sums are memoized on it.
    let mut prefix_cache: BTreeMap<(SignVector, String, bool), QuasiPolynomial> = BTreeMap::new();
    let mut singleton_cache: BTreeMap<(SignVector, String), QuasiPolynomial> = BTreeMap::new();
    for (signs, w) in arr_hat.enumerate_regions_real()? {
        let lam_form = match &bound.kind {
            BoundKind::MinRatio { forms } => forms
                .iter()
                .min_by(|f1, f2| f1.eval(&w).cmp(&f2.eval(&w)))
                .unwrap()
                .clone(),
            BoundKind::PerRegionAffine { reference, forms } => {
                let key = reference.sign_vector_of_rat(&w);
                forms
                    .get(&key)
                    .ok_or_else(|| {
                        Error::InvalidInput(format!("no bound form for region {key}"))
                    })?
                    .clone()
            }
        };
        let upper = lam_form.eval(&w);
        if upper.is_negative() {
            match &bound.kind {
                BoundKind::MinRatio { .. } => {
                    full.insert(signs, QuasiPolynomial::zero(dim));
                    continue;
                }
                BoundKind::PerRegionAffine { .. } => {
                    return Err(Error::BoundNegative(signs.as_string()));
                }
            }
        }
        // Markers: interval ends plus every crossing value inside [0, upper];
        // their relative order (including ties) is constant on the region.
        let mut markers: Vec<(Rat, AffineForm)> = vec![
            (rat(0), AffineForm::zero(dim)),
            (upper.clone(), lam_form.clone()),
        ];
        for c in &crossings {
            let v = c.eval(&w);
            if !v.is_negative() && v <= upper {
                markers.push((v, c.clone()));
            }
        }
        markers.sort_by(|x, y| x.0.cmp(&y.0));
        markers.dedup_by(|x, y| x.0 == y.0);
        let mut acc = QuasiPolynomial::zero(dim);
        for i in 0..markers.len() {
            let (v, form) = &markers[i];
            let skip = (v.is_zero() && !bound.closed_lower)
                || (*v == upper && !bound.closed_upper);
            if !skip {
                let sv = g.arrangement.sign_vector_of_rat(&shifted(&w, v));
                if let Some(piece) = g.pieces.get(&sv) {
                    let key = (sv.clone(), format!("{form:?}"));
                    if !singleton_cache.contains_key(&key) {
                        let s = singleton_line_sum(piece, a, form)?;
                        singleton_cache.insert(key.clone(), s);
                    }
                    acc = acc.add(&singleton_cache[&key])?;
                }
            }
            if i + 1 < markers.len() {
                let (nv, nform) = &markers[i + 1];
                let mid = (v + nv) / rat(2);
                let sv = g.arrangement.sign_vector_of_rat(&shifted(&w, &mid));
                if let Some(piece) = g.pieces.get(&sv) {
                    let hi_key = (sv.clone(), format!("{nform:?}"), true);
                    if !prefix_cache.contains_key(&hi_key) {
                        let p = prefix_line_sum(piece, a, nform, UpperEnd::Strict)?;
                        prefix_cache.insert(hi_key.clone(), p);
                    }
                    let lo_key = (sv.clone(), format!("{form:?}"), false);
                    if !prefix_cache.contains_key(&lo_key) {
                        let p = prefix_line_sum(piece, a, form, UpperEnd::Closed)?;
                        prefix_cache.insert(lo_key.clone(), p);
                    }
                    let diff = prefix_cache[&hi_key].sub(&prefix_cache[&lo_key])?;
                    acc = acc.add(&diff)?;
                }
            }
        }
        full.insert(signs, acc);
    }
    from_region_table(dim, g.domain(), &arr_hat, full)
}

/// `G(x_1..x_{t1}) = F(x_1..x_{t1}, h*x_1, ..., h*x_1)`: specialization of
/// the last `t2` coordinates to `h` times the first.
pub fn bs_specialize(f: &BoxSpline, t1: usize, h: u64) -> Result<BoxSpline, Error> {
    let t = f.dim();
    if t1 == 0 || t1 > t {
        return Err(Error::SpecMismatch {
            t1,
            t2: t - t1.min(t),
            dim: t,
        });
    }
    let maps: Vec<AffineForm> = (0..t)
        .map(|j| {
            if j < t1 {
                AffineForm::coordinate(t1, j)
            } else {
                AffineForm::coordinate(t1, 0).scale(&rat(h as i64))
            }
        })
        .collect();
    substituted(f, t1, f.domain(), &maps)
}

/// `R(x) = F(alpha_1 x_1, ..., alpha_t x_t)` for `alpha` over `{+1, -1}`.
pub fn bs_reflect(f: &BoxSpline, alpha: &[i64]) -> Result<BoxSpline, Error> {
    let t = f.dim();
    if alpha.len() != t {
        return Err(Error::DimensionMismatch {
            expected: t,
            got: alpha.len(),
        });
    }
    if alpha.iter().any(|&s| s != 1 && s != -1) {
        return Err(Error::InvalidInput("reflection signs must be +1 or -1".into()));
    }
    let maps: Vec<AffineForm> = (0..t)
        .map(|i| AffineForm::coordinate(t, i).scale(&rat(alpha[i])))
        .collect();
    substituted(f, t, f.domain(), &maps)
}

/// Precomposition with an integer affine map: planes are pulled back, and
/// each region of the pulled-back arrangement inherits the substituted piece
/// of the region its image lies in.
fn substituted(
    f: &BoxSpline,
    out_dim: usize,
    domain: Domain,
    maps: &[AffineForm],
) -> Result<BoxSpline, Error> {
    let planes: Vec<Hyperplane> = f
        .arrangement
        .planes()
        .iter()
        .filter_map(|h| {
            let img = h
                .to_affine()
                .to_poly()
                .substitute_affine(maps)
                .clone();
            // the image of an affine form under an affine map is affine
            let mut coeffs = vec![rat(0); out_dim];
            let mut constant = rat(0);
            for (e, c) in img.terms() {
                match e.iter().position(|&x| x > 0) {
                    None => constant = c.clone(),
                    Some(i) => coeffs[i] = c.clone(),
                }
            }
            Hyperplane::from_affine(&AffineForm::new(coeffs, constant))
        })
        .collect();
    let arrangement = Arrangement::new(out_dim, domain, planes)?;
    let mut full = BTreeMap::new();
    for (signs, w) in arrangement.enumerate_regions_real()? {
        let image: Vec<Rat> = maps.iter().map(|m| m.eval(&w)).collect();
        let piece = f.piece_at_rat(&image);
        let piece = if piece.is_zero() {
            QuasiPolynomial::zero(out_dim)
        } else {
            qp_int_affine(&piece, maps, out_dim)?
        };
        full.insert(signs, piece);
    }
    from_region_table(out_dim, domain, &arrangement, full)
}

// --- serde: {arrangement, pieces: [{signs, quasipoly}]} ---

#[derive(Serialize, Deserialize)]
struct PieceRepr {
    signs: SignVector,
    quasipoly: QuasiPolynomial,
}

#[derive(Serialize, Deserialize)]
struct BoxSplineRepr {
    arrangement: Arrangement,
    pieces: Vec<PieceRepr>,
}

impl Serialize for BoxSpline {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut pieces: Vec<PieceRepr> = self
            .pieces
            .iter()
            .map(|(signs, quasipoly)| PieceRepr {
                signs: signs.clone(),
                quasipoly: quasipoly.clone(),
            })
            .collect();
        pieces.sort_by_key(|p| p.signs.as_string());
        BoxSplineRepr {
            arrangement: self.arrangement.clone(),
            pieces,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for BoxSpline {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = BoxSplineRepr::deserialize(d)?;
        let mut pieces = BTreeMap::new();
        for p in repr.pieces {
            if pieces.insert(p.signs.clone(), p.quasipoly).is_some() {
                return Err(D::Error::custom(format!(
                    "duplicate region {}",
                    p.signs.as_string()
                )));
            }
        }
        BoxSpline::new(repr.arrangement, pieces).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::MultiPoly;
    use crate::scalar::rat_fr;

    fn pts(v: &[i64]) -> Vec<Int> {
        v.iter().map(|&x| int(x)).collect()
    }

    #[test]
    fn indicator_and_constant() {
        let origin = BoxSpline::indicator_point(2, Domain::N, &pts(&[0, 0])).unwrap();
        assert_eq!(origin.eval_i64(&[0, 0]).unwrap(), rat(1));
        assert_eq!(origin.eval_i64(&[1, 0]).unwrap(), rat(0));
        let pt = BoxSpline::indicator_point(2, Domain::N, &pts(&[2, 1])).unwrap();
        assert_eq!(pt.eval_i64(&[2, 1]).unwrap(), rat(1));
        assert_eq!(pt.eval_i64(&[2, 2]).unwrap(), rat(0));
        assert_eq!(pt.eval_i64(&[0, 0]).unwrap(), rat(0));
        let one = BoxSpline::constant_one(2, Domain::N).unwrap();
        for x in 0..=5i64 {
            for y in 0..=5i64 {
                assert_eq!(one.eval_i64(&[x, y]).unwrap(), rat(1));
            }
        }
    }

    #[test]
    fn add_examples() {
        let origin = BoxSpline::indicator_point(2, Domain::N, &pts(&[0, 0])).unwrap();
        let z = BoxSpline::zero(2, Domain::N);
        let same = bs_add(&origin, &z).unwrap();
        for x in 0..=4i64 {
            for y in 0..=4i64 {
                assert_eq!(
                    same.eval_i64(&[x, y]).unwrap(),
                    origin.eval_i64(&[x, y]).unwrap()
                );
            }
        }
        let double = bs_add(&origin, &origin).unwrap();
        assert_eq!(double.eval_i64(&[0, 0]).unwrap(), rat(2));
        assert_eq!(double.eval_i64(&[1, 2]).unwrap(), rat(0));
    }

    #[test]
    fn line_sum_diagonal_indicator() {
        // sum of origin indicator along (1,1) over [0, min(x,y)]:
        // S(x,y) = 1 iff x = y.
        let origin = BoxSpline::indicator_point(2, Domain::N, &pts(&[0, 0])).unwrap();
        let forms = vec![AffineForm::coordinate(2, 0), AffineForm::coordinate(2, 1)];
        let s = bs_line_sum(
            &origin,
            &pts(&[1, 1]),
            &BoundSpec::closed_min_ratio(forms),
        )
        .unwrap();
        for x in 0..=8i64 {
            for y in 0..=8i64 {
                let expect = rat((x == y) as i64);
                assert_eq!(s.eval_i64(&[x, y]).unwrap(), expect, "({x},{y})");
            }
        }
    }

    #[test]
    fn line_sum_constant_gives_count() {
        // G = 1 on N^2, a = (1,0), closed [0, x]: S(x,y) = x + 1.
        let one = BoxSpline::constant_one(2, Domain::N).unwrap();
        let s = bs_line_sum(
            &one,
            &pts(&[1, 0]),
            &BoundSpec::closed_min_ratio(vec![AffineForm::coordinate(2, 0)]),
        )
        .unwrap();
        for x in 0..=10i64 {
            for y in 0..=3i64 {
                assert_eq!(s.eval_i64(&[x, y]).unwrap(), rat(x + 1));
            }
        }
    }

    #[test]
    fn line_sum_singleton_interval_is_identity() {
        // Bound identically 0 with closed ends: S = G.
        let pt = BoxSpline::indicator_point(2, Domain::N, &pts(&[1, 2])).unwrap();
        let s = bs_line_sum(
            &pt,
            &pts(&[1, 1]),
            &BoundSpec::closed_min_ratio(vec![AffineForm::constant_form(2, rat(0))]),
        )
        .unwrap();
        for x in 0..=5i64 {
            for y in 0..=5i64 {
                assert_eq!(
                    s.eval_i64(&[x, y]).unwrap(),
                    pt.eval_i64(&[x, y]).unwrap()
                );
            }
        }
    }

    #[test]
    fn line_sum_matches_brute_force_on_half_ratio() {
        // G = indicator(x = y) summed along (2,1) over [0, min(x/2, y)]:
        // brute-force comparison against the defining sum.
        let origin = BoxSpline::indicator_point(2, Domain::N, &pts(&[0, 0])).unwrap();
        let eq_diag = bs_line_sum(
            &origin,
            &pts(&[1, 1]),
            &BoundSpec::closed_min_ratio(vec![
                AffineForm::coordinate(2, 0),
                AffineForm::coordinate(2, 1),
            ]),
        )
        .unwrap();
        let s = bs_line_sum(
            &eq_diag,
            &pts(&[2, 1]),
            &BoundSpec::closed_min_ratio(vec![
                AffineForm::coordinate(2, 0).scale(&rat_fr(1, 2)),
                AffineForm::coordinate(2, 1),
            ]),
        )
        .unwrap();
        for x in 0..=12i64 {
            for y in 0..=12i64 {
                let bound = (x / 2).min(y);
                let mut direct = 0i64;
                for l in 0..=bound {
                    if x - 2 * l == y - l {
                        direct += 1;
                    }
                }
                assert_eq!(s.eval_i64(&[x, y]).unwrap(), rat(direct), "({x},{y})");
            }
        }
    }

    #[test]
    fn specialize_examples() {
        // indicator(x1 = x2) with t1 = 1, h = 2 -> indicator(x1 = 0).
        let origin = BoxSpline::indicator_point(2, Domain::N, &pts(&[0, 0])).unwrap();
        let diag = bs_line_sum(
            &origin,
            &pts(&[1, 1]),
            &BoundSpec::closed_min_ratio(vec![
                AffineForm::coordinate(2, 0),
                AffineForm::coordinate(2, 1),
            ]),
        )
        .unwrap();
        let g = bs_specialize(&diag, 1, 2).unwrap();
        assert_eq!(g.eval_i64(&[0]).unwrap(), rat(1));
        for x in 1..=10i64 {
            assert_eq!(g.eval_i64(&[x]).unwrap(), rat(0));
        }
        // h = 1 on the constant-1 spline stays constant 1
        let one = BoxSpline::constant_one(2, Domain::N).unwrap();
        let g = bs_specialize(&one, 1, 1).unwrap();
        for x in 0..=10i64 {
            assert_eq!(g.eval_i64(&[x]).unwrap(), rat(1));
        }
    }

    #[test]
    fn reflect_examples() {
        // identity reflection
        let one = BoxSpline::constant_one(2, Domain::N).unwrap();
        let r = bs_reflect(&one, &[1, 1]).unwrap();
        for x in 0..=5i64 {
            for y in 0..=5i64 {
                assert_eq!(r.eval_i64(&[x, y]).unwrap(), rat(1));
            }
        }
        // indicator of x >= 0 half of Z^1 flipped to x <= 0
        let arr = Arrangement::coordinate_only(1, Domain::Z);
        let mut pieces = BTreeMap::new();
        pieces.insert(
            SignVector::parse("+").unwrap(),
            QuasiPolynomial::constant(1, rat(1)),
        );
        pieces.insert(
            SignVector::parse("0").unwrap(),
            QuasiPolynomial::constant(1, rat(1)),
        );
        let f = BoxSpline::new(arr, pieces).unwrap();
        let r = bs_reflect(&f, &[-1]).unwrap();
        for x in -6..=6i64 {
            assert_eq!(r.eval_i64(&[x]).unwrap(), rat((x <= 0) as i64));
        }
    }

    #[test]
    fn reflect_periodic_piece() {
        // F(x) = x * [x even] on x >= 0 of Z^1; R(x) = F(-x).
        let arr = Arrangement::coordinate_only(1, Domain::Z);
        let mut t = BTreeMap::new();
        t.insert(vec![0], MultiPoly::var(1, 0));
        let qp = QuasiPolynomial::from_table(1, 2, t);
        let mut pieces = BTreeMap::new();
        pieces.insert(SignVector::parse("+").unwrap(), qp);
        let f = BoxSpline::new(arr, pieces).unwrap();
        let r = bs_reflect(&f, &[-1]).unwrap();
        for x in -8..=8i64 {
            let expect = if -x > 0 && x % 2 == 0 { rat(-x) } else { rat(0) };
            assert_eq!(r.eval_i64(&[x]).unwrap(), expect, "x={x}");
        }
    }

    #[test]
    fn serde_round_trip_is_byte_identical() {
        let origin = BoxSpline::indicator_point(2, Domain::N, &pts(&[0, 0])).unwrap();
        let diag = bs_line_sum(
            &origin,
            &pts(&[1, 2]),
            &BoundSpec::closed_min_ratio(vec![
                AffineForm::coordinate(2, 0),
                AffineForm::coordinate(2, 1).scale(&rat_fr(1, 2)),
            ]),
        )
        .unwrap();
        let j = serde_json::to_string_pretty(&diag).unwrap();
        let back: BoxSpline = serde_json::from_str(&j).unwrap();
        assert_eq!(diag, back);
        let j2 = serde_json::to_string_pretty(&back).unwrap();
        assert_eq!(j, j2);
    }
}
