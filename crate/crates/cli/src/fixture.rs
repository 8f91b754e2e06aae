//! Trajectory fixtures: one state label per line, the origin line prefixed by `>`.

use std::path::Path;

use skorokhod::{ChainSpec, Error, Result, Trajectory};

pub fn parse_fixture(spec: &ChainSpec, text: &str) -> Result<Trajectory> {
    let mut states = Vec::new();
    let mut origin = None;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let label = match line.strip_prefix('>') {
            Some(rest) => {
                if origin.replace(states.len()).is_some() {
                    return Err(Error::Parse("fixture marks more than one origin".into()));
                }
                rest.trim()
            }
            None => line,
        };
        states.push(spec.parse_state(label)?);
    }
    let origin =
        origin.ok_or_else(|| Error::Parse("fixture does not mark index 0 with `>`".into()))?;
    Trajectory::fixed(states, origin)
}

pub fn load_fixture(spec: &ChainSpec, path: &Path) -> Result<Trajectory> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_fixture(spec, &text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use skorokhod::{Scalar, State};

    #[test]
    fn origin_marker_sets_index_zero() {
        let spec = ChainSpec::coin(Scalar::ratio(1, 2)).unwrap();
        let traj = parse_fixture(&spec, "head\n> tail\ntail\n# note\nhead\n").unwrap();
        assert_eq!(traj.lo(), -1);
        assert_eq!(traj.hi(), 2);
        assert_eq!(traj.get(0), Some(State::Finite(0)));
        assert_eq!(traj.get(-1), Some(State::Finite(1)));
    }

    #[test]
    fn missing_or_repeated_origin_is_an_error() {
        let spec = ChainSpec::coin(Scalar::ratio(1, 2)).unwrap();
        assert!(parse_fixture(&spec, "tail\nhead\n").is_err());
        assert!(parse_fixture(&spec, ">tail\n>head\n").is_err());
        assert!(parse_fixture(&spec, ">coin\n").is_err());
    }
}
