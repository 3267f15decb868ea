use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kv::{parse_list, KeyValues};

/// How the factor vectors are seeded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitMode {
    /// `θ⁽ʲ⁾ = u_qⱼ⁽ʲ⁾`, the `qⱼ`-th (1-based) left singular vector of the
    /// mode-j unfolding of the clean input.
    HosvdColumn {
        q: [usize; 4],
    },
    Gaussian,
}

/// Which zeroth-order estimator drives the factor updates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GradMode {
    /// Perturb one mode's factor at a time (four distance evaluations per probe).
    PerFactor,
    /// Estimate the gradient w.r.t. the full outer product, then contract it
    /// back onto each factor (one distance evaluation per probe).
    ChainRule,
}

impl fmt::Display for GradMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GradMode::PerFactor => "per-factor",
            GradMode::ChainRule => "chain-rule",
        })
    }
}

impl FromStr for GradMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-factor" => Ok(GradMode::PerFactor),
            "chain-rule" => Ok(GradMode::ChainRule),
            other => Err(Error::Config(format!("unknown grad_mode {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackConfig {
    /// Number of rank-one terms `l`.
    pub rank: usize,
    /// Hard cap on model queries, including the initial label query and the
    /// final confirming query.
    pub query_budget: u64,
    /// Initial step size.
    pub alpha: f64,
    /// Initial smoothing parameter of the finite-difference probes.
    pub beta: f64,
    /// The attack stops once `beta` decays below this.
    pub beta_floor: f64,
    /// Relative bisection tolerance on the boundary distance.
    pub lambda_tol: f64,
    /// First step of the coarse boundary search; `None` means `0.1 * ‖x‖_F`.
    pub lambda0: Option<f64>,
    /// The coarse search gives up beyond `lambda_cap_factor * ‖x‖_F`.
    pub lambda_cap_factor: f64,
    pub init: InitMode,
    pub grad_mode: GradMode,
    /// Random probes averaged per gradient estimate.
    pub directions_per_step: usize,
    pub seed: u64,
    /// Optional post-hoc clamp of the adversarial tensor to `[lo, hi]`.
    pub clamp: Option<[f64; 2]>,
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self {
            rank: 1,
            query_budget: 10_000,
            alpha: 0.2,
            beta: 0.05,
            beta_floor: 1e-6,
            lambda_tol: 1e-4,
            lambda0: None,
            lambda_cap_factor: 10.0,
            init: InitMode::HosvdColumn { q: [1, 1, 1, 1] },
            grad_mode: GradMode::PerFactor,
            directions_per_step: 1,
            seed: 0,
            clamp: None,
        }
    }
}

pub(crate) const ATTACK_KEYS: &[&str] = &[
    "rank",
    "query_budget",
    "alpha",
    "beta",
    "beta_floor",
    "lambda_tol",
    "lambda0",
    "lambda_cap_factor",
    "init",
    "init_q",
    "grad_mode",
    "directions_per_step",
    "seed",
    "clamp",
];

impl AttackConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.rank == 0 {
            return bad("rank must be >= 1");
        }
        if self.query_budget == 0 {
            return bad("query_budget must be positive");
        }
        for (name, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("beta_floor", self.beta_floor),
            ("lambda_cap_factor", self.lambda_cap_factor),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive and finite")));
            }
        }
        if !(self.lambda_tol > 0.0 && self.lambda_tol < 1.0) {
            return bad("lambda_tol must lie in (0, 1)");
        }
        if let Some(l0) = self.lambda0 {
            if !(l0.is_finite() && l0 > 0.0) {
                return bad("lambda0 must be positive and finite");
            }
        }
        if self.directions_per_step == 0 {
            return bad("directions_per_step must be >= 1");
        }
        if let InitMode::HosvdColumn { q } = self.init {
            if q.contains(&0) {
                return bad("init_q indices are 1-based");
            }
        }
        if let Some([lo, hi]) = self.clamp {
            if !(lo < hi) {
                return bad("clamp needs lo < hi");
            }
        }
        Ok(())
    }

    /// Overlays the recognized keys of `kv` on the defaults.
    pub fn from_kv(kv: &KeyValues) -> Result<Self> {
        kv.expect_only(ATTACK_KEYS)?;
        let mut c = AttackConfig::default();
        if let Some(v) = kv.parsed("rank")? {
            c.rank = v;
        }
        if let Some(v) = kv.parsed("query_budget")? {
            c.query_budget = v;
        }
        if let Some(v) = kv.parsed("alpha")? {
            c.alpha = v;
        }
        if let Some(v) = kv.parsed("beta")? {
            c.beta = v;
        }
        if let Some(v) = kv.parsed("beta_floor")? {
            c.beta_floor = v;
        }
        if let Some(v) = kv.parsed("lambda_tol")? {
            c.lambda_tol = v;
        }
        if let Some(v) = kv.get("lambda0") {
            c.lambda0 = match v {
                "auto" => None,
                _ => Some(v.parse().map_err(|e| Error::Config(format!("lambda0: {e}")))?),
            };
        }
        if let Some(v) = kv.parsed("lambda_cap_factor")? {
            c.lambda_cap_factor = v;
        }
        let q = match kv.get("init_q") {
            Some(v) => {
                let q: Vec<usize> = parse_list(v)?;
                <[usize; 4]>::try_from(q).map_err(|_| Error::Config("init_q needs 4 entries".into()))?
            }
            None => [1, 1, 1, 1],
        };
        c.init = match kv.get("init").unwrap_or("hosvd-column") {
            "hosvd-column" => InitMode::HosvdColumn { q },
            "gaussian" => InitMode::Gaussian,
            other => return Err(Error::Config(format!("unknown init {other:?}"))),
        };
        if let Some(v) = kv.parsed("grad_mode")? {
            c.grad_mode = v;
        }
        if let Some(v) = kv.parsed("directions_per_step")? {
            c.directions_per_step = v;
        }
        if let Some(v) = kv.parsed("seed")? {
            c.seed = v;
        }
        if let Some(v) = kv.get("clamp") {
            c.clamp = match v {
                "off" | "none" => None,
                _ => {
                    let r: Vec<f64> = parse_list(v)?;
                    Some(<[f64; 2]>::try_from(r).map_err(|_| Error::Config("clamp needs `lo, hi`".into()))?)
                }
            };
        }
        c.validate()?;
        Ok(c)
    }

    pub fn to_kv(&self) -> KeyValues {
        let mut kv = KeyValues::default();
        kv.insert("rank", self.rank.to_string());
        kv.insert("query_budget", self.query_budget.to_string());
        kv.insert("alpha", self.alpha.to_string());
        kv.insert("beta", self.beta.to_string());
        kv.insert("beta_floor", self.beta_floor.to_string());
        kv.insert("lambda_tol", self.lambda_tol.to_string());
        kv.insert("lambda0", self.lambda0.map_or("auto".to_string(), |v| v.to_string()));
        kv.insert("lambda_cap_factor", self.lambda_cap_factor.to_string());
        match self.init {
            InitMode::HosvdColumn { q } => {
                kv.insert("init", "hosvd-column");
                kv.insert("init_q", format!("{},{},{},{}", q[0], q[1], q[2], q[3]));
            }
            InitMode::Gaussian => kv.insert("init", "gaussian"),
        }
        kv.insert("grad_mode", self.grad_mode.to_string());
        kv.insert("directions_per_step", self.directions_per_step.to_string());
        kv.insert("seed", self.seed.to_string());
        kv.insert("clamp", self.clamp.map_or("off".to_string(), |[lo, hi]| format!("{lo},{hi}")));
        kv
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_text() {
        let c = AttackConfig::default();
        let kv = KeyValues::parse(&c.to_kv().to_text()).unwrap();
        assert_eq!(AttackConfig::from_kv(&kv).unwrap(), c);
    }

    #[test]
    fn overlay_and_validation() {
        let kv = KeyValues::parse("rank = 2\ninit = gaussian\ngrad_mode = chain-rule\nclamp = 0, 255\n").unwrap();
        let c = AttackConfig::from_kv(&kv).unwrap();
        assert_eq!(c.rank, 2);
        assert_eq!(c.init, InitMode::Gaussian);
        assert_eq!(c.grad_mode, GradMode::ChainRule);
        assert_eq!(c.clamp, Some([0.0, 255.0]));

        for bad in ["rank = 0", "beta = -1", "lambda_tol = 1.5", "init_q = 0,1,1,1", "grad_mode = adam", "bogus = 1"] {
            assert!(AttackConfig::from_kv(&KeyValues::parse(bad).unwrap()).is_err(), "{bad}");
        }
    }
}
