//! `--gate` argument: a builtin name or a gate file path.

use std::path::Path;

use caplab::unitary::{self, gate_zz, BipartiteGate};

use crate::CliError;

pub const BUILTINS: &str = "identity, swap, cnot, cz, zz:<alpha>";

/// Resolves `source` to a gate. Names win over paths, so a file called `swap`
/// needs a `./` prefix.
pub fn resolve(source: &str) -> Result<BipartiteGate, CliError> {
    match source {
        "identity" => return Ok(BipartiteGate::identity(2, 2)),
        "swap" => return Ok(BipartiteGate::swap(2)),
        "cnot" => return Ok(BipartiteGate::cnot()),
        "cz" => return Ok(BipartiteGate::cz()),
        _ => {}
    }
    if let Some(angle) = source.strip_prefix("zz:") {
        let alpha: f64 =
            angle.trim().parse().map_err(|_| CliError::Usage(format!("cannot parse angle {angle:?} in {source:?}")))?;
        if !alpha.is_finite() {
            return Err(CliError::Usage(format!("angle in {source:?} must be finite")));
        }
        return Ok(gate_zz(alpha));
    }
    let path = Path::new(source);
    if !path.exists() {
        return Err(CliError::Usage(format!("{source:?} is neither a builtin gate ({BUILTINS}) nor a readable file")));
    }
    Ok(unitary::load_gate_file(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_resolve() {
        assert_eq!(resolve("swap").unwrap().matrix(), BipartiteGate::swap(2).matrix());
        assert_eq!(resolve("identity").unwrap().dim(), 4);
        let g = resolve("zz:0.25").unwrap();
        assert_eq!(g.matrix(), gate_zz(0.25).matrix());
    }

    #[test]
    fn bad_sources_are_usage_errors() {
        assert!(matches!(resolve("zz:abc"), Err(CliError::Usage(_))));
        assert!(matches!(resolve("zz:inf"), Err(CliError::Usage(_))));
        assert!(matches!(resolve("/no/such/gate.json"), Err(CliError::Usage(_))));
    }
}
