//! Study configuration: JSON with fixed field names, unknown keys rejected.

use fracfem::mesh::DomainKind;
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub domain: Domain,
    pub s: f64,
    #[serde(default)]
    pub mesh: MeshPolicy,
    pub levels: Vec<usize>,
    #[serde(default)]
    pub truncation: TruncationPolicy,
    #[serde(default)]
    pub operator: Option<OperatorCoeffs>,
    #[serde(default = "default_tol")]
    pub solver_tol: f64,
    #[serde(default)]
    pub quadrature: QuadratureOrders,
    #[serde(default = "default_output")]
    pub output: String,
}

fn default_tol() -> f64 {
    1e-8
}

fn default_output() -> String {
    "study.csv".into()
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Interval,
    Square,
}

impl Domain {
    pub fn kind(self) -> DomainKind {
        match self {
            Domain::Interval => DomainKind::UnitInterval,
            Domain::Square => DomainKind::UnitSquare,
        }
    }

    pub fn dim(self) -> usize {
        match self {
            Domain::Interval => 1,
            Domain::Square => 2,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(tag = "policy", rename_all = "lowercase", deny_unknown_fields)]
pub enum MeshPolicy {
    Uniform,
    Graded {
        #[serde(default)]
        gamma: GammaSpec,
    },
}

impl Default for MeshPolicy {
    fn default() -> Self {
        MeshPolicy::Graded { gamma: GammaSpec::default() }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
pub enum GammaSpec {
    Value(f64),
    Auto(AutoWord),
}

impl Default for GammaSpec {
    fn default() -> Self {
        GammaSpec::Auto(AutoWord::Auto)
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoWord {
    Auto,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "policy", rename_all = "lowercase", deny_unknown_fields)]
pub enum TruncationPolicy {
    Fixed {
        y: f64,
    },
    Auto {
        #[serde(default = "default_trunc_c")]
        c: f64,
    },
}

fn default_trunc_c() -> f64 {
    1.0
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy::Auto { c: 1.0 }
    }
}

/// Polynomial coefficients in ascending order; a(x) must stay positive and
/// c(x) nonnegative on [0,1] for the operator to be admissible.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorCoeffs {
    pub a: Vec<f64>,
    pub c: Vec<f64>,
}

impl OperatorCoeffs {
    pub fn eval_a(&self, x: f64) -> f64 {
        horner(&self.a, x)
    }

    pub fn eval_c(&self, x: f64) -> f64 {
        horner(&self.c, x)
    }
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureOrders {
    #[serde(default = "default_x_order")]
    pub x_order: usize,
    #[serde(default = "default_y_order")]
    pub y_order: usize,
    #[serde(default = "default_bottom_order")]
    pub bottom_order: usize,
    /// Override for the assembly x-rule on variable coefficients.
    #[serde(default)]
    pub assembly_x_order: Option<usize>,
    /// Override for the assembly load rule.
    #[serde(default)]
    pub rhs_order: Option<usize>,
}

fn default_x_order() -> usize {
    4
}

fn default_y_order() -> usize {
    4
}

fn default_bottom_order() -> usize {
    6
}

impl Default for QuadratureOrders {
    fn default() -> Self {
        QuadratureOrders {
            x_order: 4,
            y_order: 4,
            bottom_order: 6,
            assembly_x_order: None,
            rhs_order: None,
        }
    }
}

impl StudyConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.s > 0.0 && self.s < 1.0) {
            return Err(format!("s must lie in (0,1), got {}", self.s));
        }
        if self.levels.is_empty() {
            return Err("levels must not be empty".into());
        }
        for w in self.levels.windows(2) {
            if w[1] <= w[0] {
                return Err(format!("levels must be strictly increasing, got {:?}", self.levels));
            }
        }
        if self.levels[0] < 2 {
            return Err("levels must start at M >= 2".into());
        }
        if !(self.solver_tol > 0.0 && self.solver_tol < 1.0) {
            return Err(format!("solver_tol must lie in (0,1), got {}", self.solver_tol));
        }
        if let MeshPolicy::Graded { gamma: GammaSpec::Value(g) } = &self.mesh {
            if !(*g >= 1.0 && g.is_finite()) {
                return Err(format!("gamma must be >= 1, got {g}"));
            }
        }
        match &self.truncation {
            TruncationPolicy::Fixed { y } => {
                if !(*y > 0.0 && y.is_finite()) {
                    return Err(format!("fixed truncation height must be positive, got {y}"));
                }
            }
            TruncationPolicy::Auto { c } => {
                if !(*c > 0.0 && c.is_finite()) {
                    return Err(format!("truncation constant must be positive, got {c}"));
                }
            }
        }
        if let Some(op) = &self.operator {
            if self.domain != Domain::Interval {
                return Err("operator coefficients require the interval domain".into());
            }
            if op.a.is_empty() || op.c.is_empty() {
                return Err("operator coefficient polynomials must not be empty".into());
            }
        }
        let q = &self.quadrature;
        if q.x_order == 0 || q.y_order == 0 || q.bottom_order == 0 {
            return Err("quadrature orders must be positive".into());
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let cfg: StudyConfig = serde_json::from_str(text).map_err(|e| e.to_string())?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_config() {
        let cfg = StudyConfig::from_json(
            r#"{"domain":"interval","s":0.4,"levels":[8,16,32]}"#,
        )
        .unwrap();
        assert_eq!(cfg.domain, Domain::Interval);
        assert!(matches!(cfg.mesh, MeshPolicy::Graded { .. }));
        assert!(matches!(cfg.truncation, TruncationPolicy::Auto { .. }));
        assert_eq!(cfg.solver_tol, 1e-8);
        assert_eq!(cfg.output, "study.csv");
    }

    #[test]
    fn parses_full_config() {
        let cfg = StudyConfig::from_json(
            r#"{
                "domain": "interval",
                "s": 0.3,
                "mesh": {"policy": "graded", "gamma": 4.5},
                "levels": [8, 16],
                "truncation": {"policy": "fixed", "y": 3.0},
                "operator": {"a": [1.0, 0.5], "c": [0.0, 1.0]},
                "solver_tol": 1e-9,
                "quadrature": {"x_order": 5},
                "output": "out.csv"
            }"#,
        )
        .unwrap();
        match cfg.mesh {
            MeshPolicy::Graded { gamma: GammaSpec::Value(g) } => assert_eq!(g, 4.5),
            _ => panic!("wrong mesh policy"),
        }
        let op = cfg.operator.as_ref().unwrap();
        assert_eq!(op.eval_a(1.0), 1.5);
        assert_eq!(op.eval_c(0.25), 0.25);
        assert_eq!(cfg.quadrature.x_order, 5);
        assert_eq!(cfg.quadrature.y_order, 4);
    }

    #[test]
    fn accepts_literal_auto_gamma() {
        let cfg = StudyConfig::from_json(
            r#"{"domain":"square","s":0.8,"mesh":{"policy":"graded","gamma":"auto"},"levels":[4,8]}"#,
        )
        .unwrap();
        assert!(matches!(cfg.mesh, MeshPolicy::Graded { gamma: GammaSpec::Auto(_) }));
    }

    #[test]
    fn rejects_bad_configs() {
        // unknown key
        assert!(StudyConfig::from_json(
            r#"{"domain":"interval","s":0.4,"levels":[8],"extra":1}"#
        )
        .is_err());
        // s out of range
        assert!(StudyConfig::from_json(r#"{"domain":"interval","s":1.4,"levels":[8]}"#).is_err());
        // nonmonotone levels
        assert!(
            StudyConfig::from_json(r#"{"domain":"interval","s":0.4,"levels":[16,8]}"#).is_err()
        );
        // operator on the square
        assert!(StudyConfig::from_json(
            r#"{"domain":"square","s":0.4,"levels":[8],"operator":{"a":[1.0],"c":[0.0]}}"#
        )
        .is_err());
        // bad gamma word
        assert!(StudyConfig::from_json(
            r#"{"domain":"interval","s":0.4,"levels":[8],"mesh":{"policy":"graded","gamma":"full"}}"#
        )
        .is_err());
    }
}
