//! On-disk cache of rendered subcommand results, keyed by the full argument set.

use std::fmt::Debug;
use std::path::Path;

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::{Failure, Rendered};

fn key(name: &str, args: &impl Debug) -> String {
    let text = format!("{} {name} {args:?}", env!("CARGO_PKG_VERSION"));
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Runs `compute` unless a result for the same arguments is stored in `dir`.
/// Parse failures are never stored; computation failures are, with their exit code.
pub fn cached(
    dir: Option<&Path>,
    name: &str,
    args: &impl Debug,
    compute: impl FnOnce() -> Result<Rendered, Failure>,
) -> Result<Rendered, Failure> {
    let Some(dir) = dir else {
        return compute();
    };
    let path = dir.join(format!("{}.json", key(name, args)));
    if let Some(hit) = std::fs::read_to_string(&path).ok().and_then(|s| serde_json::from_str::<Value>(&s).ok()) {
        let code = hit["exit"].as_u64().unwrap_or(3) as u8;
        let text = hit["output"].as_str().unwrap_or_default().to_string();
        return if hit["ok"].as_bool() == Some(true) {
            Ok(Rendered { text, code })
        } else {
            Err(Failure { code, message: text })
        };
    }
    let result = compute();
    let entry = match &result {
        Ok(r) => Some(json!({"ok": true, "exit": r.code, "output": r.text})),
        Err(f) if f.code != 2 => Some(json!({"ok": false, "exit": f.code, "output": f.message})),
        Err(_) => None,
    };
    if let Some(entry) = entry {
        // A cache that cannot be written only costs a recomputation.
        if std::fs::create_dir_all(dir).is_ok() {
            let _ = std::fs::write(&path, entry.to_string());
        }
    }
    result
}
