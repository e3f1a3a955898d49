//! JSON instance files for families and trivializations.

use serde::{Deserialize, Serialize};

use super::grid::{join, GridFn, TruncFn};
use super::{Family, FamilyError, Trivialization};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyFile {
    #[serde(rename = "N")]
    pub n_cols: usize,
    pub kstar: usize,
    pub n: usize,
    pub registry: Vec<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub entries: Vec<EntryFile>,
    /// Dense column lists of a global `ψ`; only for `n = 0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi: Option<Vec<Vec<i64>>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntryFile {
    pub tuple: Vec<usize>,
    pub values: Vec<(usize, u32, i64)>,
}

impl FamilyFile {
    pub fn from_family(f: &Family) -> Self {
        FamilyFile {
            n_cols: f.n_cols(),
            kstar: f.kstar(),
            n: f.arity(),
            registry: f.registry().iter().map(|g| g.values().to_vec()).collect(),
            entries: f
                .entries()
                .map(|(t, g)| EntryFile {
                    tuple: t.clone(),
                    values: g.support().map(|((i, j), v)| (i, j, v)).collect(),
                })
                .collect(),
            psi: None,
        }
    }

    pub fn from_trivialization(t: &Trivialization, like: &Family) -> Self {
        match t {
            Trivialization::Family(f) => FamilyFile::from_family(f),
            Trivialization::Global(psi) => {
                let dom = psi.domain();
                let dense = (0..dom.n_cols())
                    .map(|i| (0..=dom.height(i)).map(|j| psi.get((i, j))).collect())
                    .collect();
                FamilyFile {
                    n_cols: like.n_cols(),
                    kstar: like.kstar(),
                    n: 0,
                    registry: like
                        .registry()
                        .iter()
                        .map(|g| g.values().to_vec())
                        .collect(),
                    entries: Vec::new(),
                    psi: Some(dense),
                }
            }
        }
    }

    fn registry(&self) -> Result<Vec<TruncFn>, FamilyError> {
        for (k, r) in self.registry.iter().enumerate() {
            if r.len() != self.n_cols {
                return Err(FamilyError::Format(format!(
                    "registry[{k}] has {} columns, N = {}",
                    r.len(),
                    self.n_cols
                )));
            }
        }
        Ok(self
            .registry
            .iter()
            .map(|r| TruncFn::new(r.clone()))
            .collect())
    }

    pub fn to_family(&self) -> Result<Family, FamilyError> {
        if self.psi.is_some() {
            return Err(FamilyError::Format(
                "a family file carries no \"psi\"".into(),
            ));
        }
        let mut fam = Family::new(self.registry()?, self.n, self.kstar)?;
        for (k, e) in self.entries.iter().enumerate() {
            for &(i, j, v) in &e.values {
                fam.add_value(&e.tuple, (i, j), v)
                    .map_err(|err| FamilyError::Format(format!("entries[{k}]: {err}")))?;
            }
        }
        Ok(fam)
    }

    pub fn to_trivialization(&self) -> Result<Trivialization, FamilyError> {
        if self.n > 0 {
            return Ok(Trivialization::Family(self.to_family()?));
        }
        let registry = self.registry()?;
        let dense = self
            .psi
            .as_ref()
            .ok_or_else(|| FamilyError::Format("arity 0 requires a \"psi\" array".into()))?;
        let dom = join(&registry)?;
        if dense.len() != dom.n_cols() {
            return Err(FamilyError::Format(format!(
                "psi has {} columns, N = {}",
                dense.len(),
                dom.n_cols()
            )));
        }
        let heights: Vec<u32> = dense
            .iter()
            .map(|c| c.len().saturating_sub(1) as u32)
            .collect();
        let wide = join([&dom, &TruncFn::new(heights)])?;
        let mut psi = GridFn::zero(wide);
        for (i, col) in dense.iter().enumerate() {
            for (j, &v) in col.iter().enumerate() {
                psi.set((i, j as u32), v)?;
            }
        }
        Ok(Trivialization::Global(psi))
    }
}

pub fn family_from_json(text: &str) -> Result<Family, FamilyError> {
    let file: FamilyFile = serde_json::from_str(text).map_err(json_error)?;
    file.to_family()
}

pub fn trivialization_from_json(text: &str) -> Result<Trivialization, FamilyError> {
    let file: FamilyFile = serde_json::from_str(text).map_err(json_error)?;
    file.to_trivialization()
}

pub fn family_to_json(f: &Family) -> String {
    serde_json::to_string_pretty(&FamilyFile::from_family(f)).expect("serializable")
}

pub fn trivialization_to_json(t: &Trivialization, like: &Family) -> String {
    serde_json::to_string_pretty(&FamilyFile::from_trivialization(t, like)).expect("serializable")
}

fn json_error(e: serde_json::Error) -> FamilyError {
    FamilyError::Format(format!("line {}, column {}: {e}", e.line(), e.column()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_round_trip() {
        let text = r#"{"N":2,"kstar":1,"n":1,"registry":[[1,0],[0,2]],
            "entries":[{"tuple":[1],"values":[[1,2,5],[0,0,-1]]}]}"#;
        let fam = family_from_json(text).unwrap();
        assert_eq!(fam.get(&[1]).unwrap().get((1, 2)), 5);
        let again = family_from_json(&family_to_json(&fam)).unwrap();
        assert_eq!(fam, again);
    }

    #[test]
    fn global_psi_round_trip() {
        let fam = family_from_json(r#"{"N":2,"kstar":1,"n":1,"registry":[[1,0]]}"#).unwrap();
        let text = r#"{"N":2,"kstar":1,"n":0,"registry":[[1,0]],"psi":[[3,0],[7]]}"#;
        let t = trivialization_from_json(text).unwrap();
        let Trivialization::Global(psi) = &t else {
            panic!()
        };
        assert_eq!(psi.get((0, 0)), 3);
        assert_eq!(psi.get((1, 0)), 7);
        assert_eq!(
            trivialization_from_json(&trivialization_to_json(&t, &fam)).unwrap(),
            t
        );
    }

    #[test]
    fn errors_carry_positions() {
        let err = family_from_json("{\"N\": 2,\n \"kstar\": }").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = family_from_json(r#"{"N":2,"kstar":0,"n":1,"registry":[[1]]}"#).unwrap_err();
        assert!(err.to_string().contains("registry[0]"));
        let err = family_from_json(
            r#"{"N":1,"kstar":0,"n":1,"registry":[[0]],"entries":[{"tuple":[0],"values":[[0,3,1]]}]}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("entries[0]"));
    }
}
