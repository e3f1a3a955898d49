//! Hechler conditions with eventually constant bounds, and their finite-support iteration.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ForcingError {
    #[error("conditions {first} and {second} have different stems at coordinate {coord}")]
    StemMismatch {
        first: usize,
        second: usize,
        coord: u64,
    },
    #[error(
        "r does not extend the restriction of condition {index} at coordinate {coord}: {reason}"
    )]
    NotBelow {
        index: usize,
        coord: u64,
        reason: String,
    },
    #[error("dom lists {dom:?} but coords has {coords:?}")]
    DomainMismatch { dom: Vec<u64>, coords: Vec<u64> },
}

/// `head` followed by `tail` forever. Trailing head entries equal to `tail` are trimmed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "EvConstRaw", into = "EvConstRaw")]
pub struct EvConstFn {
    head: Vec<u64>,
    tail: u64,
}

#[derive(Serialize, Deserialize)]
struct EvConstRaw {
    head: Vec<u64>,
    tail: u64,
}

impl From<EvConstRaw> for EvConstFn {
    fn from(r: EvConstRaw) -> Self {
        EvConstFn::new(r.head, r.tail)
    }
}

impl From<EvConstFn> for EvConstRaw {
    fn from(f: EvConstFn) -> Self {
        EvConstRaw {
            head: f.head,
            tail: f.tail,
        }
    }
}

impl EvConstFn {
    pub fn new(mut head: Vec<u64>, tail: u64) -> Self {
        while head.last() == Some(&tail) {
            head.pop();
        }
        EvConstFn { head, tail }
    }

    pub fn constant(c: u64) -> Self {
        EvConstFn {
            head: Vec::new(),
            tail: c,
        }
    }

    pub fn head(&self) -> &[u64] {
        &self.head
    }

    pub fn tail(&self) -> u64 {
        self.tail
    }

    pub fn at(&self, i: usize) -> u64 {
        self.head.get(i).copied().unwrap_or(self.tail)
    }

    /// Pointwise `self ≤ other` on all of ω.
    pub fn le(&self, other: &EvConstFn) -> bool {
        let span = self.head.len().max(other.head.len());
        (0..=span).all(|i| self.at(i) <= other.at(i))
    }

    pub fn max(&self, other: &EvConstFn) -> EvConstFn {
        let span = self.head.len().max(other.head.len());
        EvConstFn::new(
            (0..span).map(|i| self.at(i).max(other.at(i))).collect(),
            self.tail.max(other.tail),
        )
    }
}

impl fmt::Display for EvConstFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let head: Vec<String> = self.head.iter().map(u64::to_string).collect();
        write!(f, "[{}]{}^ω", head.join(","), self.tail)
    }
}

/// A Hechler condition `(s, f)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HechlerCond {
    pub stem: Vec<u64>,
    pub bound: EvConstFn,
}

impl HechlerCond {
    pub fn new(stem: Vec<u64>, bound: EvConstFn) -> Self {
        HechlerCond { stem, bound }
    }

    /// `self ≤ p`: the stem extends `s_p`, the bound dominates `f_p`, and new stem values exceed `f_p`.
    pub fn extends(&self, p: &HechlerCond) -> bool {
        extension_failure(self, p).is_none()
    }
}

fn extension_failure(q: &HechlerCond, p: &HechlerCond) -> Option<String> {
    if !q.stem.starts_with(&p.stem) {
        return Some("stem does not extend".into());
    }
    if !p.bound.le(&q.bound) {
        return Some("bound is not above".into());
    }
    (p.stem.len()..q.stem.len())
        .find(|&i| q.stem[i] <= p.bound.at(i))
        .map(|i| {
            format!(
                "stem value {} at {i} is not above the bound {}",
                q.stem[i],
                p.bound.at(i)
            )
        })
}

impl fmt::Display for HechlerCond {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?}, {})", self.stem, self.bound)
    }
}

/// A common extension of `p` and `q` when their stems are comparable and the merge works.
pub fn compatible(p: &HechlerCond, q: &HechlerCond) -> Option<HechlerCond> {
    let stem = if q.stem.starts_with(&p.stem) {
        q.stem.clone()
    } else if p.stem.starts_with(&q.stem) {
        p.stem.clone()
    } else {
        return None;
    };
    let w = HechlerCond::new(stem, p.bound.max(&q.bound));
    (w.extends(p) && w.extends(q)).then_some(w)
}

/// A finite-support condition: one Hechler condition per coordinate.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IterCond {
    pub coords: BTreeMap<u64, HechlerCond>,
}

impl IterCond {
    pub fn dom(&self) -> impl Iterator<Item = u64> + '_ {
        self.coords.keys().copied()
    }

    /// `p↾α`: the coordinates below `α`.
    pub fn restrict(&self, alpha: u64) -> IterCond {
        IterCond {
            coords: self
                .coords
                .range(..alpha)
                .map(|(&k, v)| (k, v.clone()))
                .collect(),
        }
    }

    pub fn extends(&self, p: &IterCond) -> bool {
        self.extension_failure(p).is_none()
    }

    fn extension_failure(&self, p: &IterCond) -> Option<(u64, String)> {
        p.coords
            .iter()
            .find_map(|(&a, pc)| match self.coords.get(&a) {
                None => Some((a, "coordinate missing".to_string())),
                Some(qc) => extension_failure(qc, pc).map(|r| (a, r)),
            })
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CondFile {
    stem: Vec<u64>,
    head: Vec<u64>,
    tail: u64,
}

/// `{"dom": [..], "coords": {"α": {"stem": [..], "head": [..], "tail": k}}}`.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IterCondFile {
    dom: Vec<u64>,
    coords: BTreeMap<u64, CondFile>,
}

impl From<&IterCond> for IterCondFile {
    fn from(p: &IterCond) -> Self {
        IterCondFile {
            dom: p.dom().collect(),
            coords: p
                .coords
                .iter()
                .map(|(&a, c)| {
                    (
                        a,
                        CondFile {
                            stem: c.stem.clone(),
                            head: c.bound.head.clone(),
                            tail: c.bound.tail,
                        },
                    )
                })
                .collect(),
        }
    }
}

impl TryFrom<IterCondFile> for IterCond {
    type Error = ForcingError;

    fn try_from(f: IterCondFile) -> Result<Self, ForcingError> {
        let dom: BTreeSet<u64> = f.dom.iter().copied().collect();
        if dom.len() != f.dom.len() || !dom.iter().eq(f.coords.keys()) {
            return Err(ForcingError::DomainMismatch {
                dom: f.dom,
                coords: f.coords.keys().copied().collect(),
            });
        }
        Ok(IterCond {
            coords: f
                .coords
                .into_iter()
                .map(|(a, c)| (a, HechlerCond::new(c.stem, EvConstFn::new(c.head, c.tail))))
                .collect(),
        })
    }
}

impl Serialize for IterCond {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        IterCondFile::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for IterCond {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        IterCond::try_from(IterCondFile::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

/// A lower bound for `A ∪ {r}`: `r` below `max dom(r) + 1`, and above it the
/// shared stem with the pointwise maximum of the bounds in `A`.
pub fn iter_lower_bound(a: &[IterCond], r: &IterCond) -> Result<IterCond, ForcingError> {
    for (i, p) in a.iter().enumerate() {
        for (j, q) in a.iter().enumerate().skip(i + 1) {
            if let Some((&coord, _)) = p
                .coords
                .iter()
                .find(|(k, pc)| q.coords.get(k).is_some_and(|qc| qc.stem != pc.stem))
            {
                return Err(ForcingError::StemMismatch {
                    first: i,
                    second: j,
                    coord,
                });
            }
        }
    }
    let cut = r.coords.keys().next_back().map_or(0, |&m| m + 1);
    for (index, p) in a.iter().enumerate() {
        if let Some((coord, reason)) = r.extension_failure(&p.restrict(cut)) {
            return Err(ForcingError::NotBelow {
                index,
                coord,
                reason,
            });
        }
    }
    let mut q = r.clone();
    for p in a {
        for (&alpha, pc) in p.coords.range(cut..) {
            q.coords
                .entry(alpha)
                .and_modify(|c| c.bound = c.bound.max(&pc.bound))
                .or_insert_with(|| pc.clone());
        }
    }
    Ok(q)
}

/// Random generators for property tests and fixtures.
pub mod gen {
    use super::*;

    pub fn bound<R: Rng>(rng: &mut R) -> EvConstFn {
        let len = rng.gen_range(0..4);
        EvConstFn::new(
            (0..len).map(|_| rng.gen_range(0..6)).collect(),
            rng.gen_range(0..6),
        )
    }

    pub fn cond<R: Rng>(rng: &mut R) -> HechlerCond {
        let len = rng.gen_range(0..4);
        HechlerCond::new((0..len).map(|_| rng.gen_range(0..8)).collect(), bound(rng))
    }

    /// A random condition below `p`.
    pub fn extension<R: Rng>(rng: &mut R, p: &HechlerCond) -> HechlerCond {
        let mut stem = p.stem.clone();
        for i in 0..rng.gen_range(0..3) {
            stem.push(p.bound.at(p.stem.len() + i) + rng.gen_range(1..4));
        }
        HechlerCond::new(stem, p.bound.max(&bound(rng)))
    }

    /// A family `A` of at most four conditions on `{0..9}` and a condition `r` meeting the premises of [`iter_lower_bound`].
    pub fn premise<R: Rng>(rng: &mut R) -> (Vec<IterCond>, IterCond) {
        let r_dom: BTreeSet<u64> = (0..5).filter(|_| rng.gen_bool(0.4)).collect();
        let cut = r_dom.iter().next_back().map_or(0, |&m| m + 1);
        let stems: Vec<Vec<u64>> = (0..10)
            .map(|_| {
                (0..rng.gen_range(0..3))
                    .map(|_| rng.gen_range(0..8))
                    .collect()
            })
            .collect();
        let size = rng.gen_range(1..=4);
        let mut a = Vec::with_capacity(size);
        for _ in 0..size {
            let mut coords = BTreeMap::new();
            for alpha in 0..10u64 {
                if (alpha >= cut || r_dom.contains(&alpha)) && rng.gen_bool(0.4) {
                    coords.insert(
                        alpha,
                        HechlerCond::new(stems[alpha as usize].clone(), bound(rng)),
                    );
                }
            }
            a.push(IterCond { coords });
        }
        let r = IterCond {
            coords: r_dom
                .iter()
                .map(|&alpha| {
                    let top = a
                        .iter()
                        .filter_map(|p| p.coords.get(&alpha))
                        .fold(EvConstFn::constant(0), |f, c| f.max(&c.bound));
                    let base = HechlerCond::new(stems[alpha as usize].clone(), top);
                    (alpha, extension(rng, &base))
                })
                .collect(),
        };
        (a, r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(stem: &[u64], c: u64) -> HechlerCond {
        HechlerCond::new(stem.to_vec(), EvConstFn::constant(c))
    }

    #[test]
    fn extends_examples() {
        assert!(h(&[5, 7], 9).extends(&h(&[5], 3)));
        assert!(!h(&[5, 2], 9).extends(&h(&[5], 3)));
        assert!(h(&[5], 3).extends(&h(&[5], 3)));
        assert!(!h(&[5], 2).extends(&h(&[5], 3)));
        assert!(!h(&[6], 3).extends(&h(&[5], 3)));
    }

    #[test]
    fn compatible_examples() {
        let w = compatible(&h(&[1], 2), &h(&[1], 5)).unwrap();
        assert_eq!(w, h(&[1], 5));
        assert!(compatible(&h(&[1], 0), &h(&[2], 0)).is_none());
        assert_eq!(compatible(&h(&[], 3), &h(&[5], 0)), Some(h(&[5], 3)));
        assert!(compatible(&h(&[], 3), &h(&[2], 0)).is_none());
    }

    #[test]
    fn normalization() {
        let f = EvConstFn::new(vec![1, 4, 4], 4);
        assert_eq!(f.head(), &[1]);
        assert_eq!(f.at(10), 4);
        let g = EvConstFn::new(vec![5], 0);
        assert_eq!(f.max(&g), EvConstFn::new(vec![5], 4));
        assert!(EvConstFn::constant(1).le(&f));
        assert!(!g.le(&f) && !f.le(&g));
    }

    #[test]
    fn lower_bound_examples() {
        let p = IterCond {
            coords: [(2, h(&[1], 3))].into(),
        };
        assert_eq!(
            iter_lower_bound(std::slice::from_ref(&p), &IterCond::default()).unwrap(),
            p
        );

        let p1 = IterCond {
            coords: [(3, h(&[1], 2))].into(),
        };
        let p2 = IterCond {
            coords: [(3, h(&[1], 4))].into(),
        };
        let r = IterCond {
            coords: [(0, h(&[0], 0))].into(),
        };
        let q = iter_lower_bound(&[p1.clone(), p2.clone()], &r).unwrap();
        assert_eq!(q.coords[&3], h(&[1], 4));
        assert_eq!(q.restrict(1), r);
        assert!(q.extends(&p1) && q.extends(&p2) && q.extends(&r));
    }

    #[test]
    fn lower_bound_rejects_bad_premises() {
        let p1 = IterCond {
            coords: [(3, h(&[1], 2))].into(),
        };
        let p2 = IterCond {
            coords: [(3, h(&[2], 4))].into(),
        };
        assert_eq!(
            iter_lower_bound(&[p1.clone(), p2], &IterCond::default()),
            Err(ForcingError::StemMismatch {
                first: 0,
                second: 1,
                coord: 3
            })
        );
        let r = IterCond {
            coords: [(4, h(&[], 0))].into(),
        };
        assert!(matches!(
            iter_lower_bound(&[p1], &r),
            Err(ForcingError::NotBelow {
                index: 0,
                coord: 3,
                ..
            })
        ));
    }

    #[test]
    fn json_shape() {
        let p = IterCond {
            coords: [(3, HechlerCond::new(vec![1], EvConstFn::new(vec![0, 2], 1)))].into(),
        };
        let text = serde_json::to_string(&p).unwrap();
        assert_eq!(
            text,
            r#"{"dom":[3],"coords":{"3":{"stem":[1],"head":[0,2],"tail":1}}}"#
        );
        assert_eq!(serde_json::from_str::<IterCond>(&text).unwrap(), p);
        assert!(serde_json::from_str::<IterCond>(r#"{"dom":[4],"coords":{}}"#).is_err());
    }
}
