//! Parameter checkpoint format.
//!
//! A checkpoint is a single self-describing text file:
//!
//! ```text
//! dicnet-checkpoint v1
//! [config]
//! view_dims = 5 7
//! hidden_dims = 6
//! latent_dim = 4
//! label_count = 3
//! seed = 11
//! [params]
//! param cls.b 1 3
//! 0 0 0
//! param cls.w 4 3
//! ...
//! ```
//!
//! Parameters appear in name order; each `param <name> <rows> <cols>` header
//! is followed by `rows` lines of `cols` values. Floats use shortest
//! round-trip formatting, so save -> load is bit-exact. The format is stable.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};

use dicnet_core::matrix::Matrix;
use dicnet_core::model::{DicNetModel, ModelConfig};
use dicnet_core::params::ParamStore;

const HEADER: &str = "dicnet-checkpoint v1";

pub fn save_checkpoint(path: &Path, model: &DicNetModel) -> Result<()> {
    let config = model.config();
    let mut out = String::new();
    writeln!(out, "{HEADER}").unwrap();
    writeln!(out, "[config]").unwrap();
    writeln!(out, "view_dims = {}", join_usizes(&config.view_dims)).unwrap();
    writeln!(out, "hidden_dims = {}", join_usizes(&config.hidden_dims)).unwrap();
    writeln!(out, "latent_dim = {}", config.latent_dim).unwrap();
    writeln!(out, "label_count = {}", config.label_count).unwrap();
    writeln!(out, "seed = {}", config.seed).unwrap();
    writeln!(out, "[params]").unwrap();
    for (name, value) in model.params().iter() {
        writeln!(out, "param {name} {} {}", value.rows(), value.cols()).unwrap();
        for i in 0..value.rows() {
            let row = value.row(i);
            for (j, v) in row.iter().enumerate() {
                if j > 0 {
                    out.push(' ');
                }
                write!(out, "{v}").unwrap();
            }
            out.push('\n');
        }
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

pub fn load_checkpoint(path: &Path) -> Result<DicNetModel> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines().enumerate().peekable();

    let expect = |got: Option<(usize, &str)>, want: &str| -> Result<()> {
        match got {
            Some((_, line)) if line.trim() == want => Ok(()),
            Some((n, line)) => bail!("{}:{}: expected '{want}', got '{line}'", path.display(), n + 1),
            None => bail!("{}: truncated before '{want}'", path.display()),
        }
    };
    expect(lines.next(), HEADER)?;
    expect(lines.next(), "[config]")?;

    let mut view_dims = None;
    let mut hidden_dims = None;
    let mut latent_dim = None;
    let mut label_count = None;
    let mut seed = None;
    loop {
        let Some(&(n, line)) = lines.peek() else {
            bail!("{}: missing [params] section", path.display());
        };
        if line.trim() == "[params]" {
            lines.next();
            break;
        }
        lines.next();
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("{}:{}: expected 'key = value'", path.display(), n + 1))?;
        let value = value.trim();
        match key.trim() {
            "view_dims" => view_dims = Some(parse_usizes(value)?),
            "hidden_dims" => hidden_dims = Some(parse_usizes(value)?),
            "latent_dim" => latent_dim = Some(value.parse()?),
            "label_count" => label_count = Some(value.parse()?),
            "seed" => seed = Some(value.parse()?),
            other => bail!("{}:{}: unknown config key '{other}'", path.display(), n + 1),
        }
    }
    let config = ModelConfig {
        view_dims: view_dims.ok_or_else(|| anyhow!("checkpoint missing view_dims"))?,
        hidden_dims: hidden_dims.ok_or_else(|| anyhow!("checkpoint missing hidden_dims"))?,
        latent_dim: latent_dim.ok_or_else(|| anyhow!("checkpoint missing latent_dim"))?,
        label_count: label_count.ok_or_else(|| anyhow!("checkpoint missing label_count"))?,
        seed: seed.ok_or_else(|| anyhow!("checkpoint missing seed"))?,
    };

    let mut params = ParamStore::new();
    while let Some((n, line)) = lines.next() {
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        if parts.next() != Some("param") {
            bail!("{}:{}: expected 'param <name> <rows> <cols>'", path.display(), n + 1);
        }
        let name = parts
            .next()
            .ok_or_else(|| anyhow!("{}:{}: missing parameter name", path.display(), n + 1))?;
        let rows: usize = parts
            .next()
            .ok_or_else(|| anyhow!("{}:{}: missing rows", path.display(), n + 1))?
            .parse()?;
        let cols: usize = parts
            .next()
            .ok_or_else(|| anyhow!("{}:{}: missing cols", path.display(), n + 1))?
            .parse()?;
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let Some((rn, row_line)) = lines.next() else {
                bail!("{}: truncated inside parameter '{name}'", path.display());
            };
            let values: Vec<f64> = row_line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>()
                        .map_err(|_| anyhow!("{}:{}: malformed value '{tok}'", path.display(), rn + 1))
                })
                .collect::<Result<_>>()?;
            if values.len() != cols {
                bail!(
                    "{}:{}: parameter '{name}' row has {} values, expected {cols}",
                    path.display(),
                    rn + 1,
                    values.len()
                );
            }
            data.extend(values);
        }
        let matrix = Matrix::from_vec(rows, cols, data).map_err(|e| anyhow!("{e}"))?;
        params
            .register(name, matrix)
            .map_err(|e| anyhow!("{}: {e}", path.display()))?;
    }

    DicNetModel::from_parts(config, params).map_err(|e| anyhow!("{}: {e}", path.display()))
}

fn join_usizes(values: &[usize]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn parse_usizes(text: &str) -> Result<Vec<usize>> {
    text.split_whitespace()
        .map(|tok| tok.parse::<usize>().map_err(|_| anyhow!("malformed integer '{tok}'")))
        .collect()
}
