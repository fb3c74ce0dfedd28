//! Grid parsing and the optional TOML experiment file.

use std::fmt;
use std::path::PathBuf;

use serde::Deserialize;
use toml::Spanned;

/// Largest grid value accepted without `--allow-large`.
pub const DESK_MAX_N: u64 = 10_000_000;

/// Input the user can fix; reported with exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Parses one grid value; scientific notation is allowed but the value must
/// be an integer.
pub fn parse_grid_value(text: &str) -> Result<u64, String> {
    let text = text.trim();
    if let Ok(v) = text.parse::<u64>() {
        return Ok(v);
    }
    let x: f64 = text
        .parse()
        .map_err(|_| format!("'{text}' is not a number"))?;
    check_integral(x).ok_or_else(|| format!("'{text}' is not a positive integer below 2^53"))
}

fn check_integral(x: f64) -> Option<u64> {
    (x.is_finite() && x >= 0.0 && x.fract() == 0.0 && x < 9_007_199_254_740_992.0)
        .then_some(x as u64)
}

/// Parses a comma-separated grid such as `1e4,1e5,1e6`.
pub fn parse_grid(text: &str) -> Result<Vec<u64>, String> {
    if text.trim().is_empty() {
        return Err("grid is empty".into());
    }
    let grid = text
        .split(',')
        .map(parse_grid_value)
        .collect::<Result<Vec<_>, _>>()?;
    check_grid(&grid)?;
    Ok(grid)
}

pub fn check_grid(grid: &[u64]) -> Result<(), String> {
    if grid.is_empty() {
        return Err("grid is empty".into());
    }
    if let Some(&n) = grid.iter().find(|&&n| n < 2) {
        return Err(format!("grid values must be at least 2, got {n}"));
    }
    if let Some(w) = grid.windows(2).find(|w| w[1] <= w[0]) {
        return Err(format!(
            "grid must be strictly increasing ({} then {})",
            w[0], w[1]
        ));
    }
    Ok(())
}

pub fn check_desk_scale(grid: &[u64], allow_large: bool) -> anyhow::Result<()> {
    match grid.last() {
        Some(&n) if n > DESK_MAX_N && !allow_large => Err(usage(format!(
            "grid value {n} exceeds {DESK_MAX_N}; pass --allow-large to run it anyway"
        ))),
        _ => Ok(()),
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum GridField {
    List(Vec<f64>),
    Text(String),
}

/// Contents of a `--config` file. Every key is optional and command-line
/// flags take precedence.
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    pair: Option<Spanned<String>>,
    s: Option<Spanned<f64>>,
    t: Option<Spanned<f64>>,
    h: Option<Spanned<i64>>,
    grid: Option<Spanned<GridField>>,
    tail_target: Option<Spanned<f64>>,
    pair_file: Option<PathBuf>,
    allow_large: Option<bool>,
}

#[derive(Debug, Default, PartialEq)]
pub struct FileConfig {
    pub pair: Option<String>,
    pub s: Option<f64>,
    pub t: Option<f64>,
    pub h: Option<u64>,
    pub grid: Option<Vec<u64>>,
    pub tail_target: Option<f64>,
    pub pair_file: Option<PathBuf>,
    pub allow_large: Option<bool>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parses a TOML experiment file; errors name the file and line.
pub fn parse_config(name: &str, text: &str) -> anyhow::Result<FileConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let line = e
            .span()
            .map(|s| format!(" line {}", line_of(text, s.start)))
            .unwrap_or_default();
        usage(format!("{name}:{line}: {}", e.message()))
    })?;
    let at = |span: std::ops::Range<usize>, msg: String| {
        usage(format!("{name}: line {}: {msg}", line_of(text, span.start)))
    };

    let positive = |v: &Option<Spanned<f64>>, key: &str| -> anyhow::Result<Option<f64>> {
        match v {
            Some(x) if !(*x.get_ref() > 0.0) => Err(at(
                x.span(),
                format!("{key} must be positive, got {}", x.get_ref()),
            )),
            Some(x) => Ok(Some(*x.get_ref())),
            None => Ok(None),
        }
    };
    let h = match &raw.h {
        Some(x) if *x.get_ref() < 0 => {
            return Err(at(
                x.span(),
                format!("h must be nonnegative, got {}", x.get_ref()),
            ))
        }
        Some(x) => Some(*x.get_ref() as u64),
        None => None,
    };
    let grid = match &raw.grid {
        Some(g) => {
            let parsed = match g.get_ref() {
                GridField::Text(t) => parse_grid(t),
                GridField::List(xs) => xs
                    .iter()
                    .map(|&x| {
                        check_integral(x).ok_or_else(|| format!("grid value {x} is not an integer"))
                    })
                    .collect::<Result<Vec<_>, _>>()
                    .and_then(|v| check_grid(&v).map(|_| v)),
            };
            Some(parsed.map_err(|msg| at(g.span(), msg))?)
        }
        None => None,
    };
    if let Some(p) = &raw.pair {
        if !["sigma", "jordan", "custom"].contains(&p.get_ref().as_str()) {
            return Err(at(
                p.span(),
                format!(
                    "unknown pair '{}' (expected sigma, jordan or custom)",
                    p.get_ref()
                ),
            ));
        }
    }
    Ok(FileConfig {
        pair: raw.pair.map(|p| p.into_inner()),
        s: positive(&raw.s, "s")?,
        t: positive(&raw.t, "t")?,
        h,
        grid,
        tail_target: positive(&raw.tail_target, "tail_target")?,
        pair_file: raw.pair_file,
        allow_large: raw.allow_large,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_values() {
        assert_eq!(
            parse_grid("1e4,1e5, 1000000").unwrap(),
            vec![10_000, 100_000, 1_000_000]
        );
        assert!(parse_grid("").is_err());
        assert!(parse_grid("1e4,1e4").is_err());
        assert!(parse_grid("1e5,1e4").is_err());
        assert!(parse_grid("12.5").is_err());
        assert_eq!(parse_grid("1.5e1,1e2").unwrap(), vec![15, 100]);
        assert!(parse_grid("abc").is_err());
        assert!(parse_grid("1").is_err());
        assert_eq!(parse_grid_value("2.5e1").unwrap(), 25);
    }

    #[test]
    fn config_file() {
        let text = "pair = \"jordan\"\ns = 2\nt = 1.0\nh = 6\ngrid = [1e3, 1e4, 100000]\n";
        let c = parse_config("exp.toml", text).unwrap();
        assert_eq!(c.pair.as_deref(), Some("jordan"));
        assert_eq!((c.s, c.t, c.h), (Some(2.0), Some(1.0), Some(6)));
        assert_eq!(c.grid, Some(vec![1000, 10_000, 100_000]));
        let c = parse_config("exp.toml", "grid = \"1e4,1e5\"").unwrap();
        assert_eq!(c.grid, Some(vec![10_000, 100_000]));
    }

    #[test]
    fn config_errors_name_the_line() {
        let err = parse_config("exp.toml", "pair = \"sigma\"\n\ngrid = [100, 10]\n").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        let err = parse_config("exp.toml", "s = 1\nt = -1\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = parse_config("exp.toml", "s = 1\nbogus = 3\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = parse_config("exp.toml", "pair = \"nope\"").unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");
        assert!(err.downcast_ref::<UsageError>().is_some());
    }
}
