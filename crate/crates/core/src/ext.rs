//! Extended reals `[-inf, +inf]` with Moreau's upper and lower additions,
//! finite point sets, grid functions and Dirac indicator functions.
//!
//! The two additions only differ on the pair `{+inf, -inf}`:
//!
//! | operation   | `+inf` with `-inf` | absorbing value |
//! |-------------|--------------------|-----------------|
//! | upper (`∔`) | `+inf`             | `+inf`          |
//! | lower (`∔̣`) | `-inf`             | `-inf`          |

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Default absolute tolerance used for float comparisons.
pub const DEFAULT_TOL: f64 = 1e-9;

/// An element of `[-inf, +inf]`. NaN is not representable.
#[derive(Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct ExtReal(f64);

impl ExtReal {
    pub const INF: ExtReal = ExtReal(f64::INFINITY);
    pub const NEG_INF: ExtReal = ExtReal(f64::NEG_INFINITY);
    pub const ZERO: ExtReal = ExtReal(0.0);

    /// Wraps a float; fails on NaN.
    pub fn new(value: f64) -> Result<Self> {
        if value.is_nan() {
            Err(Error::NaN)
        } else {
            Ok(ExtReal(value))
        }
    }

    /// Wraps a float that is known not to be NaN.
    ///
    /// Panics on NaN.
    pub fn from_f64(value: f64) -> Self {
        assert!(!value.is_nan(), "NaN is not an extended real");
        ExtReal(value)
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }

    #[inline]
    pub fn is_pos_inf(self) -> bool {
        self.0 == f64::INFINITY
    }

    #[inline]
    pub fn is_neg_inf(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    /// The finite value, if any.
    pub fn finite(self) -> Option<f64> {
        self.is_finite().then_some(self.0)
    }

    /// Upper addition `a ∔ b`: `+inf` is absorbing.
    #[inline]
    pub fn upper_add(self, other: ExtReal) -> ExtReal {
        if self.is_pos_inf() || other.is_pos_inf() {
            ExtReal::INF
        } else {
            ExtReal(self.0 + other.0)
        }
    }

    /// Lower addition `a ∔̣ b`: `-inf` is absorbing.
    #[inline]
    pub fn lower_add(self, other: ExtReal) -> ExtReal {
        if self.is_neg_inf() || other.is_neg_inf() {
            ExtReal::NEG_INF
        } else {
            ExtReal(self.0 + other.0)
        }
    }

    /// Upper subtraction `a ∸ b = a ∔ (-b)`.
    #[inline]
    pub fn upper_sub(self, other: ExtReal) -> ExtReal {
        self.upper_add(-other)
    }

    /// Lower subtraction `a ∸̣ b = a ∔̣ (-b)`.
    #[inline]
    pub fn lower_sub(self, other: ExtReal) -> ExtReal {
        self.lower_add(-other)
    }

    /// `x / 2`, with `(±inf)/2 = ±inf`.
    #[inline]
    pub fn half(self) -> ExtReal {
        ExtReal(self.0 * 0.5)
    }

    pub fn max(self, other: ExtReal) -> ExtReal {
        if self >= other {
            self
        } else {
            other
        }
    }

    pub fn min(self, other: ExtReal) -> ExtReal {
        if self <= other {
            self
        } else {
            other
        }
    }

    /// Equality up to an absolute tolerance on finite values; infinities
    /// must match exactly.
    pub fn approx_eq(self, other: ExtReal, tol: f64) -> bool {
        if self.is_finite() && other.is_finite() {
            (self.0 - other.0).abs() <= tol
        } else {
            self.0 == other.0
        }
    }

    /// `self <= other + tol` on finite values, exact order otherwise.
    pub fn approx_le(self, other: ExtReal, tol: f64) -> bool {
        if self.is_finite() && other.is_finite() {
            self.0 <= other.0 + tol
        } else {
            self <= other
        }
    }
}

impl Eq for ExtReal {}

impl Ord for ExtReal {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl std::ops::Neg for ExtReal {
    type Output = ExtReal;

    fn neg(self) -> ExtReal {
        ExtReal(-self.0)
    }
}

impl From<i32> for ExtReal {
    fn from(v: i32) -> Self {
        ExtReal(v as f64)
    }
}

impl TryFrom<f64> for ExtReal {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        ExtReal::new(v)
    }
}

impl From<ExtReal> for f64 {
    fn from(v: ExtReal) -> f64 {
        v.0
    }
}

impl fmt::Debug for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_pos_inf() {
            f.write_str("inf")
        } else if self.is_neg_inf() {
            f.write_str("-inf")
        } else {
            fmt::Display::fmt(&(self.0 + 0.0), f)
        }
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.is_pos_inf() {
            s.serialize_str("inf")
        } else if self.is_neg_inf() {
            s.serialize_str("-inf")
        } else {
            // adding 0.0 turns -0.0 into 0.0
            s.serialize_f64(self.0 + 0.0)
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct ExtVisitor;

        impl Visitor<'_> for ExtVisitor {
            type Value = ExtReal;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number or one of \"inf\", \"+inf\", \"-inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<ExtReal, E> {
                if v.is_finite() {
                    Ok(ExtReal(v))
                } else {
                    Err(E::custom("non-finite JSON number"))
                }
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<ExtReal, E> {
                Ok(ExtReal(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<ExtReal, E> {
                Ok(ExtReal(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<ExtReal, E> {
                match v {
                    "inf" | "+inf" => Ok(ExtReal::INF),
                    "-inf" => Ok(ExtReal::NEG_INF),
                    other => Err(E::invalid_value(de::Unexpected::Str(other), &self)),
                }
            }
        }

        d.deserialize_any(ExtVisitor)
    }
}

/// Supremum of an iterator; `sup ∅ = -inf`.
pub fn sup<I: IntoIterator<Item = ExtReal>>(it: I) -> ExtReal {
    it.into_iter().fold(ExtReal::NEG_INF, ExtReal::max)
}

/// Infimum of an iterator; `inf ∅ = +inf`.
pub fn inf<I: IntoIterator<Item = ExtReal>>(it: I) -> ExtReal {
    it.into_iter().fold(ExtReal::INF, ExtReal::min)
}

/// A finite, ordered set of pairwise distinct points of `R^d`.
///
/// When `spacetime` is set, coordinate 0 is time and the remaining
/// coordinates are space.
#[derive(Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
    spacetime: bool,
    index: HashMap<Vec<u64>, usize>,
}

fn coord_key(p: &[f64]) -> Vec<u64> {
    // -0.0 and 0.0 name the same point
    p.iter().map(|&c| (c + 0.0).to_bits()).collect()
}

impl PointSet {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        Self::build(points, false)
    }

    /// Spacetime points `(t, r_1, .., r_d)`.
    pub fn spacetime(points: Vec<Vec<f64>>) -> Result<Self> {
        let set = Self::build(points, true)?;
        if set.dim < 2 {
            return Err(Error::Invalid(
                "spacetime points need a time and at least one space coordinate".into(),
            ));
        }
        Ok(set)
    }

    /// One-dimensional points.
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| vec![v]).collect())
    }

    fn build(points: Vec<Vec<f64>>, spacetime: bool) -> Result<Self> {
        let dim = points.first().map_or(1, Vec::len);
        if dim == 0 {
            return Err(Error::Invalid("points must have at least one coordinate".into()));
        }
        let mut coords = Vec::with_capacity(points.len() * dim);
        let mut index = HashMap::with_capacity(points.len());
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::Invalid(format!(
                    "point {i} has {} coordinates, expected {dim}",
                    p.len()
                )));
            }
            if p.iter().any(|c| !c.is_finite()) {
                return Err(Error::Invalid(format!("point {i} has a non-finite coordinate")));
            }
            if index.insert(coord_key(p), i).is_some() {
                return Err(Error::Invalid(format!("point {i} is a duplicate: {p:?}")));
            }
            coords.extend_from_slice(p);
        }
        Ok(PointSet { dim, coords, spacetime, index })
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_spacetime(&self) -> bool {
        self.spacetime
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn index_of(&self, p: &[f64]) -> Option<usize> {
        if p.len() != self.dim {
            return None;
        }
        self.index.get(&coord_key(p)).copied()
    }

    /// Like [`index_of`](Self::index_of) but reports a domain error.
    pub fn require(&self, p: &[f64]) -> Result<usize> {
        self.index_of(p)
            .ok_or_else(|| Error::Domain(format!("point {p:?} is not in the point set")))
    }

    /// Time coordinate of point `i` (spacetime sets only).
    pub fn time(&self, i: usize) -> f64 {
        self.point(i)[0]
    }

    /// Space coordinates of point `i` (spacetime sets only).
    pub fn space(&self, i: usize) -> &[f64] {
        &self.point(i)[1..]
    }

    pub fn to_vecs(&self) -> Vec<Vec<f64>> {
        self.iter().map(<[f64]>::to_vec).collect()
    }
}

impl fmt::Debug for PointSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PointSet")
            .field("dim", &self.dim)
            .field("spacetime", &self.spacetime)
            .field("points", &self.to_vecs())
            .finish()
    }
}

/// A total function from a [`PointSet`] to the extended reals.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    domain: Arc<PointSet>,
    values: Vec<ExtReal>,
}

impl GridFunction {
    pub fn new(domain: Arc<PointSet>, values: Vec<ExtReal>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(Error::Domain(format!(
                "{} values for a domain of {} points",
                values.len(),
                domain.len()
            )));
        }
        Ok(GridFunction { domain, values })
    }

    /// Builds from raw floats; NaN is rejected.
    pub fn from_f64(domain: Arc<PointSet>, values: &[f64]) -> Result<Self> {
        let values = values.iter().map(|&v| ExtReal::new(v)).collect::<Result<Vec<_>>>()?;
        Self::new(domain, values)
    }

    pub fn constant(domain: Arc<PointSet>, value: ExtReal) -> Self {
        let values = vec![value; domain.len()];
        GridFunction { domain, values }
    }

    pub fn from_fn(domain: Arc<PointSet>, mut f: impl FnMut(&[f64]) -> ExtReal) -> Self {
        let values = domain.iter().map(&mut f).collect();
        GridFunction { domain, values }
    }

    pub fn domain(&self) -> &Arc<PointSet> {
        &self.domain
    }

    pub fn values(&self) -> &[ExtReal] {
        &self.values
    }

    pub fn into_values(self) -> Vec<ExtReal> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, i: usize) -> ExtReal {
        self.values[i]
    }

    pub fn at(&self, p: &[f64]) -> Result<ExtReal> {
        Ok(self.values[self.domain.require(p)?])
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.value()).collect()
    }

    pub fn same_domain(&self, other: &GridFunction) -> bool {
        Arc::ptr_eq(&self.domain, &other.domain) || *self.domain == *other.domain
    }

    pub(crate) fn check_domain(&self, domain: &PointSet) -> Result<()> {
        if std::ptr::eq(&*self.domain, domain) || *self.domain == *domain {
            Ok(())
        } else {
            Err(Error::Domain("function is defined on a different point set".into()))
        }
    }

    pub fn map(&self, f: impl Fn(ExtReal) -> ExtReal) -> GridFunction {
        GridFunction {
            domain: self.domain.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(
        &self,
        other: &GridFunction,
        f: impl Fn(ExtReal, ExtReal) -> ExtReal,
    ) -> Result<GridFunction> {
        if !self.same_domain(other) {
            return Err(Error::Domain("functions live on different point sets".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(GridFunction { domain: self.domain.clone(), values })
    }

    pub fn approx_eq(&self, other: &GridFunction, tol: f64) -> bool {
        self.values.len() == other.values.len()
            && self.values.iter().zip(&other.values).all(|(a, b)| a.approx_eq(*b, tol))
    }

    /// Pointwise `self <= other` up to `tol`.
    pub fn approx_le(&self, other: &GridFunction, tol: f64) -> bool {
        self.values.len() == other.values.len()
            && self.values.iter().zip(&other.values).all(|(a, b)| a.approx_le(*b, tol))
    }
}

impl std::ops::Neg for &GridFunction {
    type Output = GridFunction;

    fn neg(self) -> GridFunction {
        self.map(|v| -v)
    }
}

/// Which Dirac indicator to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiracKind {
    /// `0` at the point, `-inf` elsewhere.
    Bottom,
    /// `0` at the point, `+inf` elsewhere.
    Top,
}

/// Dirac indicator `δ⊥_x` or `δ⊤_x` on `domain`.
pub fn dirac(domain: &Arc<PointSet>, x: &[f64], kind: DiracKind) -> Result<GridFunction> {
    let at = domain.require(x)?;
    Ok(dirac_at(domain, at, kind))
}

/// Dirac indicator at the point with index `at`.
pub fn dirac_at(domain: &Arc<PointSet>, at: usize, kind: DiracKind) -> GridFunction {
    let off = match kind {
        DiracKind::Bottom => ExtReal::NEG_INF,
        DiracKind::Top => ExtReal::INF,
    };
    let mut values = vec![off; domain.len()];
    values[at] = ExtReal::ZERO;
    GridFunction { domain: domain.clone(), values }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(v: f64) -> ExtReal {
        ExtReal::from_f64(v)
    }

    const INF: ExtReal = ExtReal::INF;
    const NEG: ExtReal = ExtReal::NEG_INF;

    #[test]
    fn upper_add_examples() {
        assert_eq!(INF.upper_add(NEG), INF);
        assert_eq!(e(2.0).upper_add(e(3.0)), e(5.0));
        assert_eq!(NEG.upper_add(NEG), NEG);
        // ∞ ∸ ∞ = +∞
        assert_eq!(INF.upper_sub(INF), INF);
    }

    #[test]
    fn lower_add_examples() {
        assert_eq!(INF.lower_add(NEG), NEG);
        assert_eq!(e(-1.5).lower_add(e(0.0)), e(-1.5));
        assert_eq!(INF.lower_add(INF), INF);
        assert_eq!(INF.lower_sub(INF), NEG);
    }

    #[test]
    fn nan_is_rejected() {
        assert_eq!(ExtReal::new(f64::NAN), Err(Error::NaN));
        assert!(GridFunction::from_f64(Arc::new(PointSet::from_scalars(&[0.0]).unwrap()), &[f64::NAN]).is_err());
    }

    #[test]
    fn order_is_total() {
        let mut v = vec![INF, e(1.0), NEG, e(-3.0)];
        v.sort();
        assert_eq!(v, vec![NEG, e(-3.0), e(1.0), INF]);
        assert_eq!(sup(std::iter::empty()), NEG);
        assert_eq!(inf(std::iter::empty()), INF);
    }

    #[test]
    fn json_encoding() {
        let v = vec![e(1.5), INF, NEG];
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"[1.5,"inf","-inf"]"#);
        let back: Vec<ExtReal> = serde_json::from_str(r#"[1.5,"inf","-inf",2,"+inf"]"#).unwrap();
        assert_eq!(back, vec![e(1.5), INF, NEG, e(2.0), INF]);
        assert!(serde_json::from_str::<ExtReal>(r#""nan""#).is_err());
    }

    #[test]
    fn dirac_examples() {
        let three = Arc::new(PointSet::from_scalars(&[0.0, 1.0, 2.0]).unwrap());
        let d = dirac(&three, &[1.0], DiracKind::Bottom).unwrap();
        assert_eq!(d.values(), &[NEG, e(0.0), NEG]);

        let two = Arc::new(PointSet::from_scalars(&[0.0, 1.0]).unwrap());
        let d = dirac(&two, &[0.0], DiracKind::Top).unwrap();
        assert_eq!(d.values(), &[e(0.0), INF]);

        let one = Arc::new(PointSet::from_scalars(&[4.0]).unwrap());
        for kind in [DiracKind::Bottom, DiracKind::Top] {
            assert_eq!(dirac(&one, &[4.0], kind).unwrap().values(), &[e(0.0)]);
        }
        assert!(matches!(dirac(&one, &[5.0], DiracKind::Top), Err(Error::Domain(_))));
    }

    #[test]
    fn point_set_rejects_duplicates_and_ragged_input() {
        assert!(PointSet::from_scalars(&[0.0, 1.0, 0.0]).is_err());
        assert!(PointSet::from_scalars(&[0.0, -0.0]).is_err());
        assert!(PointSet::new(vec![vec![0.0, 1.0], vec![1.0]]).is_err());
        let p = PointSet::new(vec![vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(p.index_of(&[1.0, 1.0]), Some(1));
        assert_eq!(p.index_of(&[1.0]), None);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn ext() -> impl Strategy<Value = ExtReal> {
            prop_oneof![
                1 => Just(ExtReal::INF),
                1 => Just(ExtReal::NEG_INF),
                6 => (-50i32..50).prop_map(ExtReal::from),
            ]
        }

        proptest! {
            #[test]
            fn additions_commute_and_associate(a in ext(), b in ext(), c in ext()) {
                prop_assert_eq!(a.upper_add(b), b.upper_add(a));
                prop_assert_eq!(a.lower_add(b), b.lower_add(a));
                prop_assert_eq!(a.upper_add(b).upper_add(c), a.upper_add(b.upper_add(c)));
                prop_assert_eq!(a.lower_add(b).lower_add(c), a.lower_add(b.lower_add(c)));
            }

            #[test]
            fn additions_agree_off_the_conflict(a in ext(), b in ext()) {
                let conflict = (a.is_pos_inf() && b.is_neg_inf()) || (a.is_neg_inf() && b.is_pos_inf());
                if !conflict {
                    prop_assert_eq!(a.upper_add(b), a.lower_add(b));
                }
            }

            #[test]
            fn de_morgan(a in ext(), b in ext()) {
                prop_assert_eq!(-(a.upper_add(b)), (-a).lower_add(-b));
            }

            #[test]
            fn adding_neg_inf(a in ext()) {
                prop_assert_eq!(a.upper_add(ExtReal::NEG_INF) == ExtReal::NEG_INF, !a.is_pos_inf());
            }
        }
    }
}
