//! JSON instance files.
//!
//! Set median: `{"d": 2, "sets": [[[x, y], ...], ...]}`.
//! Probabilistic: `{"d": 2, "distributions": [{"entries": [{"loc": [x, y], "p": 0.3}, {"loc": null, "p": 0.7}]}]}`.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::geometry::{Point, PointSet, SetFamily};
use crate::probseb::{DiscreteDistribution, Entry, ProbInstance};

#[derive(Debug, thiserror::Error)]
pub enum InputError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid instance: {0}")]
    Invalid(#[from] Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetMedianFile {
    pub d: usize,
    pub sets: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EntryFile {
    pub loc: Option<Vec<f64>>,
    pub p: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistributionFile {
    pub entries: Vec<EntryFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbFile {
    pub d: usize,
    pub distributions: Vec<DistributionFile>,
}

/// Either kind of instance, told apart by its `sets` or `distributions` key.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum AnyFile {
    SetMedian(SetMedianFile),
    Prob(ProbFile),
}

fn point(coords: Vec<f64>, d: usize) -> Result<Point, Error> {
    let p = Point::new(coords)?;
    p.check_dim(d)?;
    Ok(p)
}

impl SetMedianFile {
    pub fn into_family(self) -> Result<SetFamily, Error> {
        if self.d == 0 {
            return Err(Error::ZeroDimension);
        }
        let d = self.d;
        let sets = self
            .sets
            .into_iter()
            .map(|rows| PointSet::new(rows.into_iter().map(|r| point(r, d)).collect::<Result<_, _>>()?))
            .collect::<Result<Vec<_>, _>>()?;
        SetFamily::new(sets)
    }

    pub fn from_family(family: &SetFamily) -> Self {
        SetMedianFile {
            d: family.dim(),
            sets: family
                .sets()
                .iter()
                .map(|s| s.iter().map(|p| p.coords().to_vec()).collect())
                .collect(),
        }
    }
}

impl ProbFile {
    pub fn into_instance(self) -> Result<ProbInstance, Error> {
        if self.d == 0 {
            return Err(Error::ZeroDimension);
        }
        let d = self.d;
        let dists = self
            .distributions
            .into_iter()
            .enumerate()
            .map(|(i, dist)| {
                let entries = dist
                    .entries
                    .into_iter()
                    .map(|e| {
                        Ok(Entry {
                            loc: e.loc.map(|l| point(l, d)).transpose()?,
                            p: e.p,
                        })
                    })
                    .collect::<Result<Vec<_>, Error>>()?;
                DiscreteDistribution::new(entries, i)
            })
            .collect::<Result<Vec<_>, _>>()?;
        ProbInstance::new(d, dists)
    }

    pub fn from_instance(inst: &ProbInstance) -> Self {
        ProbFile {
            d: inst.dim(),
            distributions: inst
                .distributions()
                .iter()
                .map(|dist| DistributionFile {
                    entries: dist
                        .entries()
                        .iter()
                        .map(|e| EntryFile {
                            loc: e.loc.as_ref().map(|p| p.coords().to_vec()),
                            p: e.p,
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

pub fn parse_set_median(text: &str) -> Result<SetFamily, InputError> {
    let file: SetMedianFile = serde_json::from_str(text)?;
    Ok(file.into_family()?)
}

pub fn parse_prob(text: &str) -> Result<ProbInstance, InputError> {
    let file: ProbFile = serde_json::from_str(text)?;
    Ok(file.into_instance()?)
}

pub fn read_file(path: &str) -> Result<String, InputError> {
    std::fs::read_to_string(path).map_err(|source| InputError::Io {
        path: path.to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_set_median() {
        let f = parse_set_median(r#"{"d": 2, "sets": [[[0, 0], [1, 1]], [[2, 0]]]}"#).unwrap();
        assert_eq!(f.len(), 2);
        assert_eq!(f.max_set_size(), 2);
        let back = SetMedianFile::from_family(&f);
        assert_eq!(back.sets[0][1], vec![1.0, 1.0]);
    }

    #[test]
    fn parses_prob_with_absent() {
        let inst = parse_prob(
            r#"{"d": 2, "distributions": [{"entries": [{"loc": [1, 2], "p": 0.3}, {"loc": null, "p": 0.7}]}]}"#,
        )
        .unwrap();
        assert_eq!(inst.len(), 1);
        assert!((inst.distributions()[0].absent_probability() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn malformed_json_reports_position() {
        let err = parse_set_median("{\"d\": 2,\n \"sets\": [[[0, 0]]").unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, InputError::Json(_)));
        assert!(msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn wrong_dimension_is_invalid() {
        let err = parse_set_median(r#"{"d": 2, "sets": [[[0, 0, 1]]]}"#).unwrap_err();
        assert!(matches!(err, InputError::Invalid(Error::DimensionMismatch { expected: 2, got: 3 })));
    }

    #[test]
    fn bad_probability_sum() {
        let err = parse_prob(r#"{"d": 1, "distributions": [{"entries": [{"loc": [1], "p": 0.5}]}]}"#).unwrap_err();
        assert!(matches!(err, InputError::Invalid(Error::ProbabilitySum { index: 0, .. })));
    }

    #[test]
    fn any_file_dispatch() {
        let a: AnyFile = serde_json::from_str(r#"{"d": 1, "sets": [[[0]]]}"#).unwrap();
        assert!(matches!(a, AnyFile::SetMedian(_)));
        let b: AnyFile =
            serde_json::from_str(r#"{"d": 1, "distributions": [{"entries": [{"loc": [0], "p": 1}]}]}"#).unwrap();
        assert!(matches!(b, AnyFile::Prob(_)));
    }
}
