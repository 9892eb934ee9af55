//! JSON description of a density, as read by the command line tool.

use serde::{Deserialize, Serialize};

use super::{Component, DensityProfile};
use crate::error::{Error, Result};

/// `{"d": 3, "kind": "cospower", "k": 1}` and friends. Mixture components are
/// objects such as `{"kind": "cospower", "k": 2}`; tabulated grids are lists
/// of `[theta0, value]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensitySpec {
    pub d: Option<usize>,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub components: Option<Vec<Component>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<[f64; 2]>>,
}

fn need<T: Clone>(field: &Option<T>, name: &str, kind: &str) -> Result<T> {
    field.clone().ok_or_else(|| Error::invalid(format!("density kind '{kind}' needs field '{name}'")))
}

impl DensitySpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::invalid(format!("bad density spec: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("density specs serialize")
    }

    /// `d` may be omitted for the sigma family, where it follows from `q`.
    pub fn build(&self) -> Result<DensityProfile> {
        let kind = self.kind.as_str();
        let d = || need(&self.d, "d", kind);
        match kind {
            "uniform" => DensityProfile::uniform(d()?),
            "cospower" => DensityProfile::cos_power(d()?, need(&self.k, "k", kind)?),
            "sinpower" => {
                if let Some(d) = self.d {
                    if d != 1 {
                        return Err(Error::invalid("sinpower densities need d = 1"));
                    }
                }
                DensityProfile::sin_power(need(&self.k, "k", kind)?)
            }
            "sigma" => {
                let sigma = need(&self.sigma, "sigma", kind)?;
                let q = match (self.q, self.d) {
                    (Some(q), _) => q,
                    (None, Some(d)) if d % 2 == 1 => (d as u32 + 1) / 2,
                    _ => return Err(Error::invalid("sigma densities need 'q' or an odd 'd'")),
                };
                if let Some(d) = self.d {
                    if d != 2 * q as usize - 1 {
                        return Err(Error::invalid(format!("sigma density with q = {q} lives on S^{}", 2 * q - 1)));
                    }
                }
                DensityProfile::sigma_family(sigma, q)
            }
            "mixture" => DensityProfile::mixture(
                d()?,
                need(&self.weights, "weights", kind)?,
                need(&self.components, "components", kind)?,
            ),
            "tabulated" => {
                let grid: Vec<(f64, f64)> = need(&self.grid, "grid", kind)?.iter().map(|p| (p[0], p[1])).collect();
                DensityProfile::tabulated(d()?, &grid)
            }
            other => Err(Error::invalid(format!("unknown density kind '{other}'"))),
        }
    }
}

impl std::str::FromStr for DensitySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_json(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densities::{variance, DensityKind};
    use crate::quadrature::QuadratureConfig;

    #[test]
    fn parses_every_kind() {
        let cfg = QuadratureConfig::default();
        let cases = [
            (r#"{"d": 4, "kind": "uniform"}"#, 2.0),
            (r#"{"d": 7, "kind": "cospower", "k": 1}"#, 1.75),
            (r#"{"d": 1, "kind": "sinpower", "k": 3}"#, 2.0),
            (r#"{"kind": "sigma", "sigma": 0.5, "q": 2}"#, 1.0),
            (r#"{"d": 3, "kind": "sigma", "sigma": 0.1}"#, 1.8),
            (
                r#"{"d": 3, "kind": "mixture", "weights": [0.5, 0.5],
                    "components": [{"kind": "cospower", "k": 1}, {"kind": "cospower", "k": 2}]}"#,
                1.75,
            ),
        ];
        for (text, expected) in cases {
            let p = DensitySpec::from_json(text).unwrap().build().unwrap();
            let v = variance(&p, &cfg).unwrap().value;
            assert!((v - expected).abs() < 1e-8, "{text}: {v}");
        }
        let grid: Vec<[f64; 2]> = (0..=64).map(|i| [std::f64::consts::PI * i as f64 / 64.0, 1.0]).collect();
        let spec = DensitySpec {
            d: Some(2),
            kind: "tabulated".into(),
            k: None,
            sigma: None,
            q: None,
            weights: None,
            components: None,
            grid: Some(grid),
        };
        let round = DensitySpec::from_json(&spec.to_json()).unwrap();
        assert_eq!(round, spec);
        assert!(matches!(round.build().unwrap().kind(), DensityKind::Tabulated(_)));
    }

    #[test]
    fn rejects_bad_specs() {
        for text in [
            r#"{"d": 3, "kind": "cospower"}"#,
            r#"{"d": 3, "kind": "bogus"}"#,
            r#"{"d": 2, "kind": "sinpower", "k": 1}"#,
            r#"{"d": 5, "kind": "sigma", "sigma": 0.5, "q": 2}"#,
            r#"{"d": 3, "kind": "uniform", "extra": 1}"#,
            r#"not json"#,
        ] {
            assert!(DensitySpec::from_json(text).and_then(|s| s.build()).is_err(), "{text}");
        }
    }
}
