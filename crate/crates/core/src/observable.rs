//! Classical observables `f` sampled on a carrier, plus the builtin function
//! families used by the CLI.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{GroupCarrier, GroupElement};
use crate::operator::C64;

/// Carrier part of a system descriptor (`M` and `d` are ignored on input).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CarrierDescriptor {
    Finite {
        #[serde(rename = "N")]
        n: usize,
    },
    Planar {
        #[serde(rename = "L")]
        l: f64,
        h: f64,
    },
}

impl CarrierDescriptor {
    pub fn of(carrier: &GroupCarrier) -> Self {
        match *carrier {
            GroupCarrier::FiniteTorus { n } => Self::Finite { n },
            GroupCarrier::PlanarGrid { half_extent, step, .. } => Self::Planar {
                l: half_extent,
                h: step,
            },
        }
    }

    pub fn to_carrier(&self) -> Result<GroupCarrier> {
        match *self {
            Self::Finite { n } => GroupCarrier::finite(n),
            Self::Planar { l, h } => GroupCarrier::planar(l, h),
        }
    }
}

/// A function on the carrier, stored in enumeration order.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalObservable {
    carrier: GroupCarrier,
    values: Vec<C64>,
    declared_sup: Option<f64>,
}

impl ClassicalObservable {
    pub fn new(carrier: GroupCarrier, values: Vec<C64>, declared_sup: Option<f64>) -> Result<Self> {
        if values.len() != carrier.size() {
            return Err(Error::LengthMismatch {
                expected: carrier.size(),
                found: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFiniteValue { index });
        }
        if let Some(sup) = declared_sup {
            let found = values.iter().map(|z| z.norm()).fold(0.0, f64::max);
            if found > sup + 1e-12 {
                return Err(Error::SupExceeded { declared: sup, found });
            }
        }
        Ok(Self {
            carrier,
            values,
            declared_sup,
        })
    }

    pub fn real(carrier: GroupCarrier, values: &[f64]) -> Result<Self> {
        Self::new(carrier, values.iter().map(|&x| C64::new(x, 0.0)).collect(), None)
    }

    /// Evaluates `f(q, p)` at every grid point.
    pub fn from_fn<F: Fn(f64, f64) -> C64>(carrier: GroupCarrier, f: F) -> Result<Self> {
        let values = (0..carrier.size())
            .map(|i| {
                let (q, p) = carrier.coordinates(carrier.element(i));
                f(q, p)
            })
            .collect();
        Self::new(carrier, values, None)
    }

    pub fn constant(carrier: GroupCarrier, c: C64) -> Self {
        let n = carrier.size();
        Self {
            carrier,
            values: vec![c; n],
            declared_sup: Some(c.norm()),
        }
    }

    pub fn indicator(carrier: GroupCarrier, indices: &[usize]) -> Result<Self> {
        let mut values = vec![C64::new(0.0, 0.0); carrier.size()];
        for &i in indices {
            if i >= values.len() {
                return Err(Error::InvalidFunction(format!("index {i} out of range")));
            }
            values[i] = C64::new(1.0, 0.0);
        }
        Self::new(carrier, values, Some(1.0))
    }

    pub fn with_declared_sup(mut self, sup: f64) -> Result<Self> {
        let found = self.sup_norm();
        if found > sup + 1e-12 {
            return Err(Error::SupExceeded { declared: sup, found });
        }
        self.declared_sup = Some(sup);
        Ok(self)
    }

    pub fn carrier(&self) -> &GroupCarrier {
        &self.carrier
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn declared_sup(&self) -> Option<f64> {
        self.declared_sup
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `Σ_g w_g |f(g)|`.
    pub fn l1_norm(&self) -> f64 {
        self.carrier.weight() * self.values.iter().map(|z| z.norm()).sum::<f64>()
    }

    pub fn is_real(&self) -> bool {
        self.values.iter().all(|z| z.im == 0.0)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|z| z.im == 0.0 && z.re >= 0.0)
    }

    /// Pointwise `α f + β h`.
    pub fn linear_combination(&self, alpha: C64, other: &Self, beta: C64) -> Result<Self> {
        if self.carrier != other.carrier {
            return Err(Error::CarrierMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(f, h)| alpha * f + beta * h)
            .collect();
        Self::new(self.carrier.clone(), values, None)
    }

    pub fn map_values<F: Fn(C64) -> C64>(&self, f: F) -> Result<Self> {
        Self::new(self.carrier.clone(), self.values.iter().map(|&z| f(z)).collect(), None)
    }

    /// The translate `g' ↦ f(g g')`.
    ///
    /// On a grid, values that would come from outside the window are taken as
    /// zero, and the part of `f` that no longer appears must carry at most
    /// `mass_tol · max(1, ‖f‖₁)` of the L¹ mass.
    pub fn translate(&self, g: GroupElement, mass_tol: f64) -> Result<Self> {
        let car = &self.carrier;
        let g = car
            .normalize(g)
            .or_else(|e| if car.is_finite() { Err(e) } else { Ok(g) })?;
        let n = car.size();
        let mut values = vec![C64::new(0.0, 0.0); n];
        let mut used = vec![false; n];
        for (i, v) in values.iter_mut().enumerate() {
            let src = car.compose(g, car.element(i));
            if let Ok(j) = car.index_of(src) {
                *v = self.values[j];
                used[j] = true;
            }
        }
        if !car.is_finite() {
            let lost = car.weight()
                * self
                    .values
                    .iter()
                    .zip(&used)
                    .filter(|(_, &u)| !u)
                    .map(|(z, _)| z.norm())
                    .sum::<f64>();
            if lost > mass_tol * self.l1_norm().max(1.0) {
                return Err(Error::TranslationLeavesGrid { mass: lost });
            }
        }
        Ok(Self {
            carrier: car.clone(),
            values,
            declared_sup: self.declared_sup,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct ObservableJson {
    carrier: CarrierDescriptor,
    values: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    declared_sup: Option<f64>,
}

impl Serialize for ClassicalObservable {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ObservableJson {
            carrier: CarrierDescriptor::of(&self.carrier),
            values: self.values.iter().map(|z| [z.re, z.im]).collect(),
            declared_sup: self.declared_sup,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ClassicalObservable {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = ObservableJson::deserialize(d)?;
        let carrier = raw.carrier.to_carrier().map_err(D::Error::custom)?;
        let values = raw.values.iter().map(|&[re, im]| C64::new(re, im)).collect();
        ClassicalObservable::new(carrier, values, raw.declared_sup).map_err(D::Error::custom)
    }
}

/// Builtin function families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum FunctionSpec {
    /// `f ≡ 1`.
    One,
    /// Indicator of a list of lattice points.
    Indicator { points: Vec<GroupElement> },
    /// Indicator of the rectangle `[q0, q1) × [p0, p1)` (planar only).
    Rectangle { q0: f64, q1: f64, p0: f64, p1: f64 },
    /// `Σ c q^a p^b` over `(a, b, c)` terms (planar only).
    PolyQp { terms: Vec<(u32, u32, f64)> },
    /// `exp(-((q - q_c)² + (p - p_c)²) / (2 w²))`.
    GaussBump { center: (f64, f64), width: f64 },
}

impl FunctionSpec {
    /// Parses the CLI syntax: `one`, `indicator:a,b[;a,b...]`,
    /// `rect:q0,q1,p0,p1`, `poly-qp:a,b,c[;a,b,c...]`, `gauss-bump:qc,pc,w`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = |msg: &str| Error::InvalidFunction(format!("{s}: {msg}"));
        let (name, args) = s.split_once(':').unwrap_or((s, ""));
        let nums = |chunk: &str| -> Result<Vec<f64>> {
            chunk
                .split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|_| bad("expected numbers")))
                .collect()
        };
        match name {
            "one" => Ok(Self::One),
            "indicator" => {
                let points = args
                    .split(';')
                    .map(|chunk| {
                        let v = nums(chunk)?;
                        match v.as_slice() {
                            [a, b] if a.fract() == 0.0 && b.fract() == 0.0 => {
                                Ok(GroupElement::new(*a as i64, *b as i64))
                            }
                            _ => Err(bad("indicator points are integer pairs a,b")),
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Self::Indicator { points })
            }
            "rect" => match nums(args)?.as_slice() {
                [q0, q1, p0, p1] => Ok(Self::Rectangle {
                    q0: *q0,
                    q1: *q1,
                    p0: *p0,
                    p1: *p1,
                }),
                _ => Err(bad("rect needs q0,q1,p0,p1")),
            },
            "poly-qp" => {
                let terms = args
                    .split(';')
                    .map(|chunk| match nums(chunk)?.as_slice() {
                        [a, b, c] if *a >= 0.0 && *b >= 0.0 && a.fract() == 0.0 && b.fract() == 0.0 => {
                            Ok((*a as u32, *b as u32, *c))
                        }
                        _ => Err(bad("poly-qp terms are a,b,coefficient")),
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Self::PolyQp { terms })
            }
            "gauss-bump" => match nums(args)?.as_slice() {
                [qc, pc, w] if *w > 0.0 => Ok(Self::GaussBump {
                    center: (*qc, *pc),
                    width: *w,
                }),
                _ => Err(bad("gauss-bump needs qc,pc,width with width > 0")),
            },
            _ => Err(bad("unknown family")),
        }
    }

    /// Samples the function on a carrier.
    pub fn observable(&self, carrier: &GroupCarrier) -> Result<ClassicalObservable> {
        let planar_only = |name: &str| {
            if carrier.is_finite() {
                Err(Error::InvalidFunction(format!(
                    "{name} is only defined on planar grids"
                )))
            } else {
                Ok(())
            }
        };
        match self {
            Self::One => Ok(ClassicalObservable::constant(carrier.clone(), C64::new(1.0, 0.0))),
            Self::Indicator { points } => {
                let idx = points
                    .iter()
                    .map(|&g| carrier.index_of(g))
                    .collect::<Result<Vec<_>>>()?;
                ClassicalObservable::indicator(carrier.clone(), &idx)
            }
            Self::Rectangle { q0, q1, p0, p1 } => {
                planar_only("rect")?;
                let f = ClassicalObservable::from_fn(carrier.clone(), |q, p| {
                    let inside = q >= *q0 && q < *q1 && p >= *p0 && p < *p1;
                    C64::new(if inside { 1.0 } else { 0.0 }, 0.0)
                })?;
                f.with_declared_sup(1.0)
            }
            Self::PolyQp { terms } => {
                planar_only("poly-qp")?;
                ClassicalObservable::from_fn(carrier.clone(), |q, p| {
                    C64::new(
                        terms
                            .iter()
                            .map(|&(a, b, c)| c * q.powi(a as i32) * p.powi(b as i32))
                            .sum(),
                        0.0,
                    )
                })
            }
            Self::GaussBump { center, width } => {
                let (qc, pc) = *center;
                let f = ClassicalObservable::from_fn(carrier.clone(), |q, p| {
                    C64::new(
                        (-((q - qc).powi(2) + (p - pc).powi(2)) / (2.0 * width * width)).exp(),
                        0.0,
                    )
                })?;
                f.with_declared_sup(1.0)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nan_rejected_at_construction() {
        let car = GroupCarrier::finite(2).unwrap();
        let r = ClassicalObservable::real(car, &[0.0, f64::NAN, 1.0, 2.0]);
        assert!(matches!(r, Err(Error::NonFiniteValue { index: 1 })));
    }

    #[test]
    fn length_and_sup_checked() {
        let car = GroupCarrier::finite(2).unwrap();
        assert!(ClassicalObservable::real(car.clone(), &[1.0]).is_err());
        let f = ClassicalObservable::real(car, &[1.0, -3.0, 0.0, 2.0]).unwrap();
        assert!(f.clone().with_declared_sup(2.0).is_err());
        assert_eq!(f.with_declared_sup(3.0).unwrap().declared_sup(), Some(3.0));
    }

    #[test]
    fn finite_translation_is_index_arithmetic() {
        let car = GroupCarrier::finite(3).unwrap();
        let f = ClassicalObservable::real(car.clone(), &(0..9).map(|i| i as f64).collect::<Vec<_>>()).unwrap();
        let g = GroupElement::new(1, 2);
        let t = f.translate(g, 0.0).unwrap();
        for i in 0..9 {
            let src = car.compose(g, car.element(i));
            assert_eq!(t.values()[i], f.values()[car.index_of(src).unwrap()]);
        }
    }

    #[test]
    fn planar_translation_detects_lost_mass() {
        let car = GroupCarrier::planar(2.0, 0.5).unwrap();
        let f = FunctionSpec::One.observable(&car).unwrap();
        assert!(matches!(
            f.translate(GroupElement::new(1, 0), 1e-6),
            Err(Error::TranslationLeavesGrid { .. })
        ));
        let bump = FunctionSpec::GaussBump {
            center: (0.0, 0.0),
            width: 0.2,
        }
        .observable(&car)
        .unwrap();
        assert!(bump.translate(GroupElement::new(1, 0), 1e-6).is_ok());
    }

    #[test]
    fn parse_builtins() {
        assert_eq!(FunctionSpec::parse("one").unwrap(), FunctionSpec::One);
        assert_eq!(
            FunctionSpec::parse("indicator:1,0;0,2").unwrap(),
            FunctionSpec::Indicator {
                points: vec![GroupElement::new(1, 0), GroupElement::new(0, 2)]
            }
        );
        assert_eq!(
            FunctionSpec::parse("poly-qp:2,0,0.5;0,2,0.5").unwrap(),
            FunctionSpec::PolyQp {
                terms: vec![(2, 0, 0.5), (0, 2, 0.5)]
            }
        );
        assert!(FunctionSpec::parse("gauss-bump:0,0,-1").is_err());
        assert!(FunctionSpec::parse("nope").is_err());
        let car = GroupCarrier::finite(3).unwrap();
        assert!(FunctionSpec::PolyQp {
            terms: vec![(1, 0, 1.0)]
        }
        .observable(&car)
        .is_err());
    }

    #[test]
    fn json_round_trip() {
        let car = GroupCarrier::finite(2).unwrap();
        let f = ClassicalObservable::new(car, vec![C64::new(1.0, 0.5); 4], None).unwrap();
        let s = serde_json::to_string(&f).unwrap();
        assert!(s.starts_with(r#"{"carrier":{"kind":"finite","N":2},"values":[[1.0,0.5]"#));
        assert_eq!(serde_json::from_str::<ClassicalObservable>(&s).unwrap(), f);
    }
}
