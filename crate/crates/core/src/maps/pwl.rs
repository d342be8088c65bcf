//! Piecewise-linear maps.
//!
//! Segments are half-open `[lo, hi)`; at and beyond the last `hi` the map is the
//! constant `tail`. Coefficients only need field arithmetic, so the same map can
//! be evaluated in `f64` or in exact rationals.

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{approx, decimal, Scalar};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment<T> {
    pub lo: T,
    pub hi: T,
    pub slope: T,
    pub intercept: T,
}

impl<T: Scalar> Segment<T> {
    pub fn value(&self, x: &T) -> T {
        self.slope.clone() * x.clone() + self.intercept.clone()
    }
}

/// Partition data for multi-interval certificates: breakpoints `a_0 = K > a_1 > … > a_m`
/// with one-sided constants for each `[a_{i+1}, a_i]` and its right-hand image.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Partition<T> {
    pub a: Vec<T>,
    pub l_minus: Vec<T>,
    pub l_plus: Vec<T>,
}

impl<T: Scalar> Partition<T> {
    pub fn validate(&self) -> Result<()> {
        if self.a.len() < 2 {
            return Err(Error::Input(
                "partition needs at least two breakpoints".into(),
            ));
        }
        if self.l_minus.len() != self.a.len() - 1 || self.l_plus.len() != self.a.len() - 1 {
            return Err(Error::Input(format!(
                "partition with {} breakpoints needs {} constants per side",
                self.a.len(),
                self.a.len() - 1
            )));
        }
        if self.a.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Input(
                "partition breakpoints must be strictly decreasing".into(),
            ));
        }
        if self.a.last().is_none_or(|a| *a <= T::zero()) {
            return Err(Error::Input(
                "partition breakpoints must be positive".into(),
            ));
        }
        if self
            .l_minus
            .iter()
            .chain(&self.l_plus)
            .any(|l| *l <= T::zero())
        {
            return Err(Error::Input("Lipschitz constants must be positive".into()));
        }
        Ok(())
    }
}

/// One affine piece on `[lo, hi)`, `hi = None` meaning unbounded.
#[derive(Clone, Debug, PartialEq)]
pub struct AffinePiece<T> {
    pub lo: T,
    pub hi: Option<T>,
    pub slope: T,
    pub intercept: T,
}

impl<T: Scalar> AffinePiece<T> {
    pub fn contains(&self, x: &T) -> bool {
        *x >= self.lo && self.hi.as_ref().is_none_or(|h| x < h)
    }

    pub fn value(&self, x: &T) -> T {
        self.slope.clone() * x.clone() + self.intercept.clone()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinear<T> {
    pub segments: Vec<Segment<T>>,
    pub tail: T,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition: Option<Partition<T>>,
}

impl<T: Scalar> PiecewiseLinear<T> {
    pub fn new(segments: Vec<Segment<T>>, tail: T) -> Result<Self> {
        let map = Self {
            segments,
            tail,
            partition: None,
        };
        map.validate()?;
        Ok(map)
    }

    pub fn with_partition(mut self, partition: Partition<T>) -> Result<Self> {
        partition.validate()?;
        self.partition = Some(partition);
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let first = self.segments.first().ok_or_else(|| {
            Error::Input("piecewise-linear map needs at least one segment".into())
        })?;
        if !first.lo.is_zero() {
            return Err(Error::Input("first segment must start at 0".into()));
        }
        for (i, s) in self.segments.iter().enumerate() {
            if s.hi <= s.lo {
                return Err(Error::Input(format!("segment {i} is empty")));
            }
        }
        for (i, w) in self.segments.windows(2).enumerate() {
            if w[0].hi != w[1].lo {
                return Err(Error::Input(format!(
                    "segments {i} and {} are not contiguous",
                    i + 1
                )));
            }
        }
        if let Some(p) = &self.partition {
            p.validate()?;
        }
        Ok(())
    }

    pub fn eval(&self, x: &T) -> Result<T> {
        if *x < T::zero() {
            return Err(Error::Domain(format!("x = {} is negative", approx(x))));
        }
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &T) -> T {
        match self.segments.iter().find(|s| *x < s.hi) {
            Some(s) => s.value(x),
            None => self.tail.clone(),
        }
    }

    /// Interior breakpoints plus the tail start.
    pub fn breakpoints(&self) -> impl Iterator<Item = &T> {
        self.segments.iter().map(|s| &s.hi)
    }

    pub fn is_breakpoint(&self, x: &T) -> bool {
        self.segments.iter().any(|s| s.hi == *x)
    }

    /// Slope of the piece containing `x`.
    pub fn slope_at(&self, x: &T) -> T {
        match self.segments.iter().find(|s| *x < s.hi) {
            Some(s) => s.slope.clone(),
            None => T::zero(),
        }
    }

    /// The map as a list of affine pieces, tail included.
    pub fn pieces(&self) -> Vec<AffinePiece<T>> {
        let mut out: Vec<AffinePiece<T>> = self
            .segments
            .iter()
            .map(|s| AffinePiece {
                lo: s.lo.clone(),
                hi: Some(s.hi.clone()),
                slope: s.slope.clone(),
                intercept: s.intercept.clone(),
            })
            .collect();
        let last = self.segments.last().expect("validated").hi.clone();
        out.push(AffinePiece {
            lo: last,
            hi: None,
            slope: T::zero(),
            intercept: self.tail.clone(),
        });
        out
    }

    /// Pieces of the controlled map `G(β, x) = (1-β) f(x) + β x`.
    pub fn controlled_pieces(&self, beta: &T) -> Vec<AffinePiece<T>> {
        let keep = T::one() - beta.clone();
        self.pieces()
            .into_iter()
            .map(|p| AffinePiece {
                slope: keep.clone() * p.slope + beta.clone(),
                intercept: keep.clone() * p.intercept,
                ..p
            })
            .collect()
    }
}

impl PiecewiseLinear<f64> {
    /// Exact copy, reading each coefficient through its shortest decimal form.
    pub fn to_exact(&self) -> Result<PiecewiseLinear<BigRational>> {
        let conv = |x: f64| -> Result<BigRational> {
            decimal(&format!("{x}"))
                .ok_or_else(|| Error::Input(format!("coefficient {x} is not finite")))
        };
        let segments = self
            .segments
            .iter()
            .map(|s| {
                Ok(Segment {
                    lo: conv(s.lo)?,
                    hi: conv(s.hi)?,
                    slope: conv(s.slope)?,
                    intercept: conv(s.intercept)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let partition = match &self.partition {
            Some(p) => Some(Partition {
                a: p.a.iter().map(|&x| conv(x)).collect::<Result<_>>()?,
                l_minus: p.l_minus.iter().map(|&x| conv(x)).collect::<Result<_>>()?,
                l_plus: p.l_plus.iter().map(|&x| conv(x)).collect::<Result<_>>()?,
            }),
            None => None,
        };
        Ok(PiecewiseLinear {
            segments,
            tail: conv(self.tail)?,
            partition,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let map: Self = serde_json::from_str(text)
            .map_err(|e| Error::Input(format!("piecewise-linear JSON: {e}")))?;
        map.validate()?;
        Ok(map)
    }
}

fn seg<T: Scalar>(lo: &str, hi: &str, slope: &str, intercept: &str) -> Segment<T> {
    Segment {
        lo: decimal(lo).expect("literal"),
        hi: decimal(hi).expect("literal"),
        slope: decimal(slope).expect("literal"),
        intercept: decimal(intercept).expect("literal"),
    }
}

fn dec<T: Scalar>(xs: &[&str]) -> Vec<T> {
    xs.iter().map(|s| decimal(s).expect("literal")).collect()
}

/// Chaotic map with `K = 32` whose local gain already gives global stability.
pub fn exglob_pwl<T: Scalar>() -> PiecewiseLinear<T> {
    let segments = vec![
        Segment {
            lo: T::zero(),
            hi: decimal("28").unwrap(),
            slope: decimal::<T>("51").unwrap() / decimal("28").unwrap(),
            intercept: T::zero(),
        },
        seg("28", "29", "-6", "219"),
        seg("29", "31", "-5", "190"),
        seg("31", "32", "-3", "128"),
        seg("32", "33", "-2", "96"),
        seg("33", "38", "-1.4", "76.2"),
        seg("38", "50", "-1.2", "68.6"),
    ];
    PiecewiseLinear::new(segments, decimal("8.6").unwrap())
        .and_then(|m| {
            m.with_partition(Partition {
                a: dec(&["32", "31", "29", "28"]),
                l_minus: dec(&["3", "5", "6"]),
                l_plus: dec(&["2", "1.4", "1.2"]),
            })
        })
        .expect("built-in map is valid")
}

/// Same local constants as [`exglob_pwl`], but with a stable two-cycle at the local gain.
pub fn exnotglob_pwl<T: Scalar>() -> PiecewiseLinear<T> {
    let segments = vec![
        Segment {
            lo: T::zero(),
            hi: decimal("28").unwrap(),
            slope: decimal::<T>("50").unwrap() / decimal("28").unwrap(),
            intercept: T::zero(),
        },
        seg("28", "31", "-5", "190"),
        seg("31", "32", "-3", "128"),
        seg("32", "33", "-2", "96"),
        seg("33", "45", "-1.7", "86.1"),
    ];
    PiecewiseLinear::new(segments, decimal("9.6").unwrap())
        .and_then(|m| {
            m.with_partition(Partition {
                a: dec(&["32", "31", "28"]),
                l_minus: dec(&["3", "5"]),
                l_plus: dec(&["2", "1.7"]),
            })
        })
        .expect("built-in map is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;

    #[test]
    fn breakpoints_use_left_closed_pieces() {
        let f = exglob_pwl::<f64>();
        assert_eq!(f.eval(&32.0).unwrap(), 32.0);
        assert_eq!(f.eval(&28.0).unwrap(), 51.0);
        assert_eq!(f.eval(&50.0).unwrap(), 8.6);
        assert!((f.eval(&27.999999).unwrap() - 51.0).abs() < 1e-4);
        assert!(f.eval(&-1.0).is_err());
    }

    #[test]
    fn exact_evaluation() {
        let f = exnotglob_pwl::<BigRational>();
        let x: BigRational = ratio(245, 6);
        // -1.7 * 245/6 + 86.1
        let expected: BigRational =
            ratio::<BigRational>(-17, 10) * x.clone() + ratio::<BigRational>(861, 10);
        assert_eq!(f.eval(&x).unwrap(), expected);
    }

    #[test]
    fn json_round_trip_and_exact_copy() {
        let f = exglob_pwl::<f64>();
        let text = serde_json::to_string(&f).unwrap();
        let back = PiecewiseLinear::from_json(&text).unwrap();
        assert_eq!(back, f);
        let exact = back.to_exact().unwrap();
        assert_eq!(exact.segments[5].slope, ratio::<BigRational>(-7, 5));
        assert_eq!(
            exact.partition.unwrap().l_plus[1],
            ratio::<BigRational>(7, 5)
        );
    }

    #[test]
    fn rejects_gaps_and_bad_partitions() {
        let text = r#"{"segments":[{"lo":0,"hi":1,"slope":2,"intercept":0},
                                   {"lo":1.5,"hi":2,"slope":-1,"intercept":3}],"tail":0.5}"#;
        assert!(PiecewiseLinear::from_json(text).is_err());
        let p = Partition::<f64> {
            a: vec![32.0, 33.0],
            l_minus: vec![1.0],
            l_plus: vec![1.0],
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn controlled_pieces_blend_with_identity() {
        let f = exglob_pwl::<BigRational>();
        let beta: BigRational = ratio(5, 12);
        let g = f.controlled_pieces(&beta);
        // -3x+128 becomes (-3·7/12 + 5/12) x + 7/12·128
        assert_eq!(g[3].slope, ratio::<BigRational>(-4, 3));
        assert_eq!(g.last().unwrap().slope, beta);
    }
}
