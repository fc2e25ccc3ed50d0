//! TOML run files.
//!
//! ```toml
//! format = "csv"
//! threads = 4
//! command = "weight"
//!
//! [args]
//! n = 3
//! V = "one"
//! W = { kind = "constant", value = 1.0 }
//! ```
//!
//! Every key of `[args]` is the long flag of the same name. Tables are passed
//! on as inline JSON (potential records), arrays as comma-separated lists,
//! `true` as a bare flag.

use toml::Value;

const GLOBAL_KEYS: [&str; 4] = ["format", "out", "verbose", "threads"];

fn scalar(v: &Value) -> Result<Option<String>, String> {
    Ok(match v {
        Value::String(s) => Some(s.clone()),
        Value::Integer(i) => Some(i.to_string()),
        Value::Float(f) => Some(format!("{f:?}")),
        Value::Boolean(_) => None,
        Value::Array(a) => {
            let parts = a
                .iter()
                .map(|x| scalar(x)?.ok_or_else(|| "nested booleans".to_string()))
                .collect::<Result<Vec<_>, _>>()?;
            Some(parts.join(","))
        }
        Value::Table(_) => Some(serde_json::to_string(v).map_err(|e| e.to_string())?),
        Value::Datetime(d) => Some(d.to_string()),
    })
}

fn push_flag(argv: &mut Vec<String>, key: &str, v: &Value) -> Result<(), String> {
    match (v, scalar(v)?) {
        (Value::Boolean(true), _) => argv.push(format!("--{key}")),
        (Value::Boolean(false), _) => {}
        (_, Some(s)) => {
            argv.push(format!("--{key}"));
            argv.push(s);
        }
        _ => {}
    }
    Ok(())
}

/// Argument vector equivalent to the run file.
pub fn config_to_argv(bin: &str, text: &str) -> Result<Vec<String>, String> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| e.to_string())?;
    let mut argv = vec![bin.to_string()];
    for key in GLOBAL_KEYS {
        if let Some(v) = table.get(key) {
            if key == "verbose" {
                let count = v.as_integer().ok_or("`verbose` must be an integer")?;
                argv.extend((0..count).map(|_| "-v".to_string()));
            } else {
                push_flag(&mut argv, key, v)?;
            }
        }
    }
    for key in table.keys() {
        if !GLOBAL_KEYS.contains(&key.as_str()) && key != "command" && key != "args" {
            return Err(format!("unknown top-level key `{key}`"));
        }
    }
    let command = table
        .get("command")
        .and_then(Value::as_str)
        .ok_or("run file needs a `command` string")?;
    argv.push(command.to_string());
    if let Some(args) = table.get("args") {
        let args = args.as_table().ok_or("`args` must be a table")?;
        for (k, v) in args {
            push_flag(&mut argv, k, v)?;
        }
    }
    Ok(argv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flattens_run_file() {
        let text = r#"
format = "csv"
verbose = 2
command = "sweep"
[args]
n = 5
R = 1.0
W = { kind = "power", m = 1.0 }
values = [0.0, 0.5]
no-closed-form = true
"#;
        let argv = config_to_argv("bp", text).unwrap();
        assert_eq!(
            argv,
            [
                "bp",
                "--format",
                "csv",
                "-v",
                "-v",
                "sweep",
                "--R",
                "1.0",
                "--W",
                r#"{"kind":"power","m":1.0}"#,
                "--n",
                "5",
                "--no-closed-form",
                "--values",
                "0.0,0.5"
            ]
        );
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(config_to_argv("bp", "command = \"mu\"\nfoo = 1").is_err());
        assert!(config_to_argv("bp", "format = \"json\"").is_err());
    }
}
