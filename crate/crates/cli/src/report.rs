use std::collections::BTreeMap;

use caplab::optimize::OptimizerConfig;
use serde::{Deserialize, Serialize};

/// One checked relation `lhs ≤ rhs`, allowing `tolerance` of slack.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Inequality {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    pub tolerance: f64,
}

impl Inequality {
    pub fn new(name: &str, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        Self { name: name.to_string(), lhs, rhs, holds: lhs <= rhs + tolerance, tolerance }
    }

    /// `|a − b| ≤ 0` within `tolerance`.
    pub fn equal(name: &str, a: f64, b: f64, tolerance: f64) -> Self {
        Self::new(name, (a - b).abs(), 0.0, tolerance)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub gate_descriptor: String,
    pub capacities: BTreeMap<String, f64>,
    pub inequalities: Vec<Inequality>,
    pub config_echo: OptimizerConfig,
    pub wall_time_ms: u64,
}

impl RunReport {
    pub fn all_hold(&self) -> bool {
        self.inequalities.iter().all(|i| i.holds)
    }

    /// Plain-text table; omits the wall time so equal runs print equal text.
    pub fn to_table(&self) -> String {
        let mut out = format!("gate: {}\n", self.gate_descriptor);
        let width = self.capacities.keys().map(String::len).max().unwrap_or(0);
        if !self.capacities.is_empty() {
            out.push_str("\ncapacities (ebits)\n");
        }
        for (name, value) in &self.capacities {
            out.push_str(&format!("  {name:<width$}  {value:.9}\n"));
        }
        if !self.inequalities.is_empty() {
            out.push_str("\ninequalities (lhs <= rhs)\n");
        }
        let width = self.inequalities.iter().map(|i| i.name.len()).max().unwrap_or(0);
        for i in &self.inequalities {
            let verdict = if i.holds { "holds" } else { "FAILS" };
            out.push_str(&format!("  {:<width$}  {:>12.9}  {:>12.9}  {verdict}\n", i.name, i.lhs, i.rhs));
        }
        let c = &self.config_echo;
        out.push_str(&format!(
            "\nrestarts {}, max iterations {}, tolerance {:e}, seed {}\n",
            c.restarts, c.max_iterations, c.tolerance, c.seed
        ));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn holds_follows_tolerance() {
        assert!(Inequality::new("a", 1.0, 1.0, 0.0).holds);
        assert!(Inequality::new("a", 1.0 + 1e-7, 1.0, 1e-6).holds);
        assert!(!Inequality::new("a", 1.0 + 1e-5, 1.0, 1e-6).holds);
        let eq = Inequality::equal("b", 0.3, 0.3 + 1e-10, 1e-9);
        assert!(eq.holds && eq.rhs == 0.0);
        assert!(!Inequality::equal("b", 0.3, 0.4, 1e-9).holds);
    }

    #[test]
    fn table_has_no_wall_time() {
        let mut report = RunReport {
            gate_descriptor: "swap".into(),
            capacities: BTreeMap::from([("e_u_psi".to_string(), 2.0)]),
            inequalities: vec![Inequality::new("x <= y", 1.0, 2.0, 0.0)],
            config_echo: OptimizerConfig::default(),
            wall_time_ms: 5,
        };
        let first = report.to_table();
        report.wall_time_ms = 900;
        assert_eq!(first, report.to_table());
        assert!(first.contains("e_u_psi  2.000000000"));
    }
}
