//! `--config PATH` support. The file holds `key = value` lines whose keys are
//! long flag names of the chosen command. Its entries are spliced into the
//! argument list ahead of the real flags, and since every flag overrides
//! itself, anything given on the command line wins.

use std::path::Path;

use clap::{ArgAction, Command};

use crate::commands::CliError;

pub fn inject(cmd: &Command, argv: Vec<String>) -> Result<Vec<String>, CliError> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    // the subcommand is the first non-flag argument after the program name
    let Some(pos) = argv.iter().skip(1).position(|a| !a.starts_with('-')).map(|p| p + 1) else {
        return Ok(argv);
    };
    let Some(sub) = cmd.find_subcommand(&argv[pos]) else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(&path).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    let extra = flags_from(sub, &text, Path::new(&path))?;
    let mut out = argv[..=pos].to_vec();
    out.extend(extra);
    out.extend_from_slice(&argv[pos + 1..]);
    Ok(out)
}

fn config_path(argv: &[String]) -> Option<String> {
    let mut it = argv.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(p.to_string());
        }
    }
    None
}

fn flags_from(sub: &Command, text: &str, path: &Path) -> Result<Vec<String>, CliError> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |why: &str| {
            CliError::Usage(format!("{}:{}: {why}: {raw:?}", path.display(), n + 1))
        };
        let (key, value) = line.split_once('=').ok_or_else(|| bad("expected key = value"))?;
        let (key, value) = (key.trim(), value.trim());
        if key == "config" {
            return Err(bad("config files cannot include other config files"));
        }
        let arg = sub
            .get_arguments()
            .find(|a| a.get_long() == Some(key))
            .ok_or_else(|| bad("unknown key"))?;
        match arg.get_action() {
            ArgAction::SetTrue => match value {
                "true" => out.push(format!("--{key}")),
                "false" => {}
                _ => return Err(bad("expected true or false")),
            },
            _ => out.push(format!("--{key}={value}")),
        }
    }
    Ok(out)
}
