//! JSON run configuration and grid parsing.

use serde::Deserialize;

use crate::Format;

/// Values a config file may set. Every field is optional and yields to the
/// matching command-line flag.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub restarts: Option<usize>,
    pub max_iterations: Option<usize>,
    pub tolerance: Option<f64>,
    pub out: Option<String>,
    pub format: Option<Format>,
    pub witness: Option<String>,
    pub scheme: Option<String>,
    pub w: Option<f64>,
    pub eta: Option<f64>,
    pub eta_grid: Option<String>,
    pub w_grid: Option<String>,
    pub grid: Option<String>,
    pub mode: Option<String>,
    pub x: Option<usize>,
    pub y: Option<usize>,
    pub px: Option<String>,
    pub py: Option<String>,
    pub protocol: Option<String>,
    pub samples: Option<usize>,
    pub rotation: Option<String>,
    pub pool: Option<usize>,
    pub gamma_points: Option<usize>,
    pub table: Option<String>,
}

impl FileConfig {
    pub fn load(path: &str) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {path}: {e}"))?;
        serde_json::from_str(&text).map_err(|e| format!("bad config {path}: {e}"))
    }
}

/// `start:stop:step`, inclusive of `stop` up to rounding, or a comma list.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return parse_list(text);
    }
    let nums = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|_| format!("bad grid '{text}'")))
        .collect::<Result<Vec<_>, _>>()?;
    let (start, stop, step) = (nums[0], nums[1], nums[2]);
    if step.is_nan() || step <= 0.0 || stop < start {
        return Err(format!("grid '{text}' needs step > 0 and stop ≥ start"));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| start + step * i as f64).collect())
}

pub fn parse_list(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| format!("bad number '{p}' in '{text}'")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0:1:0.5").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_grid("0:1:0.1").unwrap().len(), 11);
        assert_eq!(parse_grid("0.2, 0.4").unwrap(), vec![0.2, 0.4]);
        assert!(parse_grid("1:0:0.1").is_err());
        assert!(parse_grid("a:b:c").is_err());
    }
}
