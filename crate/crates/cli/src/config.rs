use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::args::Global;
use crate::Failure;

pub fn load(path: &Path) -> Result<Map<String, Value>, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
    match serde_json::from_str(&text) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(Failure::Usage(format!("config {} must hold a JSON object", path.display()))),
        Err(e) => Err(Failure::Usage(format!("config {}: {e}", path.display()))),
    }
}

/// Fills every unset flag of `global` and `args` from `config`. Keys that
/// match no flag are a usage error.
pub fn merge<T: Serialize + DeserializeOwned>(
    global: &Global,
    args: &T,
    config: &Map<String, Value>,
) -> Result<(Global, T), Failure> {
    let mut g = to_object(global)?;
    let mut a = to_object(args)?;
    for (key, value) in config {
        let target = if g.contains_key(key) {
            &mut g
        } else if a.contains_key(key) {
            &mut a
        } else {
            return Err(Failure::Usage(format!("unknown config key {key:?}")));
        };
        if target[key].is_null() {
            target.insert(key.clone(), value.clone());
        }
    }
    let global = serde_json::from_value(Value::Object(g)).map_err(|e| Failure::Usage(format!("config: {e}")))?;
    let args = serde_json::from_value(Value::Object(a)).map_err(|e| Failure::Usage(format!("config: {e}")))?;
    Ok((global, args))
}

fn to_object<T: Serialize>(value: &T) -> Result<Map<String, Value>, Failure> {
    match serde_json::to_value(value) {
        Ok(Value::Object(map)) => Ok(map),
        _ => Err(Failure::Usage("internal: arguments do not form an object".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::args::DetectArgs;

    #[test]
    fn flags_win_over_config() {
        let mut args = DetectArgs::default();
        args.thresholds.knn = Some(5);
        let config: Map<String, Value> =
            serde_json::from_str(r#"{"knn": 9, "g_min": 0.4, "seed": 3, "detector": "type4"}"#).unwrap();
        let (global, merged) = merge(&Global::default(), &args, &config).unwrap();
        assert_eq!(merged.thresholds.knn, Some(5));
        assert_eq!(merged.thresholds.g_min, Some(0.4));
        assert_eq!(merged.detector.as_deref(), Some("type4"));
        assert_eq!(global.seed, Some(3));
    }

    #[test]
    fn unknown_key_is_rejected() {
        let config: Map<String, Value> = serde_json::from_str(r#"{"k_nn": 9}"#).unwrap();
        assert!(matches!(merge(&Global::default(), &DetectArgs::default(), &config), Err(Failure::Usage(_))));
    }
}
