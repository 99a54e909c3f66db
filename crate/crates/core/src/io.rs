//! File formats: JSON state vectors, JSON standard-state specifications, and
//! the line-oriented gate-script text format.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};
use crate::gate::GateScript;
use crate::script;
use crate::standard::StandardStateSpec;
use crate::state::StateVector;

/// On-disk state layout: `{"n": .., "amplitudes": [[re, im], ..]}` with
/// `2^n` entries in the documented index convention. Doubles are printed in
/// shortest round-trip form, so save/load is bit-exact.
#[derive(Serialize, Deserialize)]
struct StateFile {
    n: usize,
    amplitudes: Vec<[f64; 2]>,
}

pub fn state_to_json(state: &StateVector) -> String {
    let file = StateFile {
        n: state.num_qubits(),
        amplitudes: state.amplitudes().iter().map(|a| [a.re, a.im]).collect(),
    };
    serde_json::to_string_pretty(&file).expect("state serialization cannot fail")
}

pub fn state_from_json(text: &str) -> Result<StateVector> {
    let file: StateFile = serde_json::from_str(text)?;
    let amps = file
        .amplitudes
        .into_iter()
        .map(|[re, im]| Complex64::new(re, im))
        .collect();
    StateVector::from_amplitudes(file.n, amps)
}

pub fn save_state(path: &Path, state: &StateVector) -> Result<()> {
    std::fs::write(path, state_to_json(state))?;
    Ok(())
}

pub fn load_state(path: &Path) -> Result<StateVector> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    state_from_json(&text)
}

pub fn save_spec(path: &Path, spec: &StandardStateSpec) -> Result<()> {
    spec.validate()?;
    std::fs::write(path, serde_json::to_string_pretty(spec)?)?;
    Ok(())
}

pub fn load_spec(path: &Path) -> Result<StandardStateSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    let spec: StandardStateSpec = serde_json::from_str(&text)?;
    spec.validate()?;
    Ok(spec)
}

pub fn save_script(path: &Path, script: &GateScript) -> Result<()> {
    std::fs::write(path, script::format_script(script))?;
    Ok(())
}

pub fn load_script(path: &Path) -> Result<GateScript> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    script::parse_script(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;

    #[test]
    fn state_roundtrip_is_bit_exact() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let spec = StandardStateSpec::random_minimal(4, &mut rng);
        let (state, _) = crate::standard::build_minimal(&spec).unwrap();
        let text = state_to_json(&state);
        let back = state_from_json(&text).unwrap();
        assert_eq!(back.amplitudes(), state.amplitudes());
        assert_eq!(text, state_to_json(&back));
    }

    #[test]
    fn state_json_rejects_bad_lengths() {
        let text = r#"{"n": 2, "amplitudes": [[1.0, 0.0]]}"#;
        assert!(matches!(
            state_from_json(text),
            Err(Error::AmplitudeCountMismatch { .. })
        ));
    }

    #[test]
    fn spec_roundtrip_keeps_variants() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let mut spec = StandardStateSpec::random_minimal(5, &mut rng);
        spec.variants.push(crate::standard::VariantSpec {
            level_k: 3,
            pattern: vec![true, false],
            pair: crate::standard::LevelPair::random(&mut rng),
        });
        let text = serde_json::to_string_pretty(&spec).unwrap();
        assert!(text.contains("\"pattern\": \"10\""));
        let back: StandardStateSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
    }

    proptest! {
        #[test]
        fn arbitrary_doubles_survive_the_state_format(values in proptest::collection::vec(-1.0f64..1.0, 8)) {
            let amps: Vec<Complex64> = values
                .chunks(2)
                .map(|c| Complex64::new(c[0], c[1]))
                .collect();
            let state = StateVector::from_amplitudes(2, amps).unwrap();
            let back = state_from_json(&state_to_json(&state)).unwrap();
            prop_assert_eq!(back.amplitudes(), state.amplitudes());
        }
    }
}
