//! JSON description of a branching mechanism.
//!
//! ```json
//! {"alpha": 0, "beta": 1, "levy": {"family": "finite_atoms", "params": {"atoms": [[1, 1]]}}}
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanism::{BranchingMechanism, LevyFamily, LevyMeasure};
use crate::real::{cst, to_f64, Real};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum LevyConfig {
    Zero,
    StablePower { gamma: f64, c: f64 },
    ExpDensity { rho: f64, mu: f64 },
    FiniteAtoms { atoms: Vec<(f64, f64)> },
    TabulatedDensity { theta: Vec<f64>, density: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MechanismConfig {
    pub alpha: f64,
    #[serde(default)]
    pub beta: f64,
    #[serde(default = "zero_levy")]
    pub levy: LevyConfig,
}

fn zero_levy() -> LevyConfig {
    LevyConfig::Zero
}

impl MechanismConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidParameter(format!("mechanism config: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serialises")
    }

    pub fn build<T: Real>(&self) -> Result<BranchingMechanism<T>> {
        let c = |v: f64| cst::<T>(v);
        let levy = match &self.levy {
            LevyConfig::Zero => LevyMeasure::zero(),
            LevyConfig::StablePower { gamma, c: k } => LevyMeasure::stable(c(*gamma), c(*k))?,
            LevyConfig::ExpDensity { rho, mu } => LevyMeasure::exp_density(c(*rho), c(*mu))?,
            LevyConfig::FiniteAtoms { atoms } => LevyMeasure::atoms(atoms.iter().map(|&(a, m)| (c(a), c(m))).collect())?,
            LevyConfig::TabulatedDensity { theta, density } => {
                LevyMeasure::tabulated(theta.iter().map(|&v| c(v)).collect(), density.iter().map(|&v| c(v)).collect())?
            }
        };
        BranchingMechanism::new(c(self.alpha), c(self.beta), levy)
    }

    /// Inverse of [`build`](Self::build) for untilted, untruncated mechanisms.
    pub fn from_mechanism<T: Real>(mech: &BranchingMechanism<T>) -> Option<Self> {
        let levy = mech.levy();
        if levy.tilt() != T::zero() || levy.cutoff().is_some() {
            return None;
        }
        let f = |v: &T| to_f64(*v);
        let levy = match levy.family() {
            LevyFamily::Zero => LevyConfig::Zero,
            LevyFamily::StablePower { gamma, c } => LevyConfig::StablePower { gamma: f(gamma), c: f(c) },
            LevyFamily::ExpDensity { rho, mu } => LevyConfig::ExpDensity { rho: f(rho), mu: f(mu) },
            LevyFamily::FiniteAtoms(a) => LevyConfig::FiniteAtoms {
                atoms: a.iter().map(|(x, m)| (f(x), f(m))).collect(),
            },
            LevyFamily::TabulatedDensity { theta, density } => LevyConfig::TabulatedDensity {
                theta: theta.iter().map(f).collect(),
                density: density.iter().map(f).collect(),
            },
        };
        Some(Self {
            alpha: f(&mech.alpha()),
            beta: f(&mech.beta()),
            levy,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_round_trips() {
        let cfg = MechanismConfig::from_json(
            r#"{"alpha": 0, "beta": 1, "levy": {"family": "finite_atoms", "params": {"atoms": [[1, 1]]}}}"#,
        )
        .unwrap();
        let m: BranchingMechanism<f64> = cfg.build().unwrap();
        assert!((m.phi(1.0).unwrap() - (1.0 + (-1.0f64).exp())).abs() < 1e-14);
        assert_eq!(MechanismConfig::from_mechanism(&m).unwrap(), cfg);
        assert_eq!(MechanismConfig::from_json(&cfg.to_json()).unwrap(), cfg);

        let s = MechanismConfig::from_json(r#"{"alpha": 0, "levy": {"family": "stable_power", "params": {"gamma": 1.5, "c": 1}}}"#)
            .unwrap();
        let m: BranchingMechanism<f32> = s.build().unwrap();
        assert!((m.phi(4.0).unwrap() - 8.0).abs() < 1e-4);
        let z = MechanismConfig::from_json(r#"{"alpha": 1, "beta": 2}"#).unwrap();
        assert_eq!(z.levy, LevyConfig::Zero);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(MechanismConfig::from_json("{}").is_err());
        assert!(MechanismConfig::from_json(r#"{"alpha": 0, "gamma": 1}"#).is_err());
        let bad = MechanismConfig::from_json(r#"{"alpha": 0, "levy": {"family": "stable_power", "params": {"gamma": 2.5, "c": 1}}}"#)
            .unwrap();
        assert!(bad.build::<f64>().is_err());
        let neg = MechanismConfig::from_json(r#"{"alpha": 0, "beta": -1}"#).unwrap();
        assert!(neg.build::<f64>().is_err());
    }
}
