//! `key = value` configuration files. Every key is the long name of a flag
//! of the chosen subcommand; flags given on the command line win.

use std::path::{Path, PathBuf};

use clap::{ArgAction, Command};

#[derive(Debug)]
pub struct ConfigError(pub String);

/// Parse `key = value` lines. `#` starts a comment; blank lines are skipped.
pub fn parse(text: &str, path: &Path) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or_default().trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError(format!(
                "{}:{}: expected `key = value`",
                path.display(),
                i + 1
            )));
        };
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        if key.is_empty() {
            return Err(ConfigError(format!("{}:{}: empty key", path.display(), i + 1)));
        }
        out.push((key, value.trim().to_string()));
    }
    Ok(out)
}

/// The value of `--config` in a raw argument vector, if any.
pub fn find_config_path(args: &[String]) -> Option<PathBuf> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(v) = a.strip_prefix("--config=") {
            return Some(PathBuf::from(v));
        }
    }
    None
}

fn mentions(args: &[String], key: &str) -> bool {
    let flag = format!("--{key}");
    let with_value = format!("--{key}=");
    args.iter().any(|a| *a == flag || a.starts_with(&with_value))
}

/// Splice file entries into `args` right after the subcommand, so that any
/// later command-line occurrence of the same flag overrides them. Entries
/// for flags that appear anywhere on the command line are dropped.
pub fn merge(
    args: Vec<String>,
    entries: &[(String, String)],
    cmd: &Command,
) -> Result<Vec<String>, ConfigError> {
    let Some(pos) = args
        .iter()
        .skip(1)
        .position(|a| cmd.find_subcommand(a).is_some())
        .map(|p| p + 1)
    else {
        return Ok(args);
    };
    let sub = cmd.find_subcommand(&args[pos]).expect("found above");
    let mut injected = Vec::new();
    for (key, value) in entries {
        if key == "config" || mentions(&args, key) {
            continue;
        }
        let arg = sub
            .get_arguments()
            .chain(cmd.get_arguments())
            .find(|a| a.get_long() == Some(key.as_str()));
        let Some(arg) = arg else {
            return Err(ConfigError(format!("unknown configuration key `{key}`")));
        };
        if matches!(arg.get_action(), ArgAction::SetTrue) {
            match value.as_str() {
                "true" | "yes" | "1" => injected.push(format!("--{key}")),
                "false" | "no" | "0" => {}
                other => return Err(ConfigError(format!("`{key}` expects true or false, got `{other}`"))),
            }
        } else {
            injected.push(format!("--{key}={value}"));
        }
    }
    let mut merged = args;
    merged.splice(pos + 1..pos + 1, injected);
    Ok(merged)
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::{Arg, ArgAction, Command};

    fn cmd() -> Command {
        Command::new("t")
            .args_override_self(true)
            .arg(Arg::new("threads").long("threads").global(true))
            .subcommand(
                Command::new("go")
                    .arg(Arg::new("window").long("window"))
                    .arg(Arg::new("flag").long("flag").action(ArgAction::SetTrue)),
            )
    }

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn parses_comments_and_underscores() {
        let e = parse("# c\nmin_snps = 5\n\nwindow=10 # trailing\n", Path::new("f")).unwrap();
        assert_eq!(e, vec![("min-snps".into(), "5".into()), ("window".into(), "10".into())]);
        assert!(parse("nonsense\n", Path::new("f")).is_err());
    }

    #[test]
    fn command_line_wins() {
        let entries = vec![("window".to_string(), "5".to_string()), ("flag".to_string(), "true".to_string())];
        let args = strings(&["t", "go", "--window", "9"]);
        let merged = merge(args, &entries, &cmd()).unwrap();
        assert_eq!(merged, strings(&["t", "go", "--flag", "--window", "9"]));
        let m = cmd().try_get_matches_from(merged).unwrap();
        let (_, sub) = m.subcommand().unwrap();
        assert_eq!(sub.get_one::<String>("window").unwrap(), "9");
    }

    #[test]
    fn unknown_key_rejected() {
        let entries = vec![("bogus".to_string(), "1".to_string())];
        assert!(merge(strings(&["t", "go"]), &entries, &cmd()).is_err());
    }

    #[test]
    fn config_path_forms() {
        assert_eq!(find_config_path(&strings(&["t", "--config", "a"])), Some(PathBuf::from("a")));
        assert_eq!(find_config_path(&strings(&["t", "go", "--config=b"])), Some(PathBuf::from("b")));
        assert_eq!(find_config_path(&strings(&["t"])), None);
    }
}
