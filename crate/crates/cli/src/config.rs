//! `--config FILE`: plain `key=value` lines turned into flags.
//!
//! The generated flags are placed right after the subcommand name, ahead of
//! everything typed on the command line, and the parser lets a later
//! occurrence of a flag override an earlier one.

use std::fs;

fn config_path(argv: &[String]) -> Option<String> {
    let mut it = argv.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(p.to_owned());
        }
    }
    None
}

/// Flags for one `key=value` file. `true`/`false` toggle switches.
pub fn parse(text: &str) -> Result<Vec<String>, String> {
    let mut flags = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {} is not key=value: `{line}`", n + 1))?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() || key == "config" {
            return Err(format!("config line {} has an invalid key `{key}`", n + 1));
        }
        // `L` is the one flag that is not lowercase
        let flag = if key == "L" { "L".to_owned() } else { key.replace('_', "-") };
        match value {
            "true" => flags.push(format!("--{flag}")),
            "false" => {}
            _ => flags.push(format!("--{flag}={value}")),
        }
    }
    Ok(flags)
}

pub fn expand(argv: Vec<String>) -> Result<Vec<String>, String> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let text = fs::read_to_string(&path).map_err(|e| format!("cannot read config {path}: {e}"))?;
    let flags = parse(&text)?;
    // argv[1] is the subcommand unless the user only asked for help
    if argv.len() < 2 || argv[1].starts_with('-') {
        return Ok(argv);
    }
    let mut out = argv[..2].to_vec();
    out.extend(flags);
    out.extend_from_slice(&argv[2..]);
    Ok(out)
}
