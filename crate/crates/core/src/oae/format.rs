//! Plain-text model files.
//!
//! ```text
//! oae layers=4,8,3 lambda=1.0000000000000001e-1 hidden=tanh bottleneck=linear output=linear
//! layer0.weight 8 4 <row-major values>
//! layer0.bias 8 <values>
//! ...
//! ```
//!
//! Values are written with 17 significant digits, so `save(load(save(m)))`
//! reproduces the file byte for byte.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use super::{Activation, OaeArchitecture, OaeModel};
use crate::dataset::fmt_f64;
use crate::{Error, Result};

pub fn to_text(model: &OaeModel) -> String {
    let arch = model.architecture();
    let sizes: Vec<String> = arch.layer_sizes.iter().map(|s| s.to_string()).collect();
    let mut out = format!(
        "oae layers={} lambda={} hidden={} bottleneck=linear output=linear\n",
        sizes.join(","),
        fmt_f64(model.lambda()),
        arch.hidden_activation
    );
    for (i, layer) in model.layers().iter().enumerate() {
        let w = &layer.weights;
        let _ = write!(out, "layer{i}.weight {} {}", w.nrows(), w.ncols());
        for r in 0..w.nrows() {
            for c in 0..w.ncols() {
                let _ = write!(out, " {}", fmt_f64(w[(r, c)]));
            }
        }
        out.push('\n');
        let _ = write!(out, "layer{i}.bias {}", layer.bias.len());
        for b in layer.bias.iter() {
            let _ = write!(out, " {}", fmt_f64(*b));
        }
        out.push('\n');
    }
    out
}

fn format_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Format {
        line,
        msg: msg.into(),
    }
}

pub fn from_text(text: &str) -> Result<OaeModel> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| format_err(1, "empty file"))?;
    let mut tokens = header.split_whitespace();
    if tokens.next() != Some("oae") {
        return Err(format_err(1, "missing `oae` magic"));
    }
    let mut sizes = None;
    let mut lambda = None;
    let mut hidden = Activation::Tanh;
    for tok in tokens {
        let (key, value) = tok
            .split_once('=')
            .ok_or_else(|| format_err(1, format!("bad header field `{tok}`")))?;
        match key {
            "layers" => {
                let parsed: std::result::Result<Vec<usize>, _> =
                    value.split(',').map(str::parse).collect();
                sizes = Some(parsed.map_err(|_| format_err(1, "bad layer sizes"))?);
            }
            "lambda" => {
                lambda = Some(value.parse::<f64>().map_err(|_| format_err(1, "bad lambda"))?);
            }
            "hidden" => hidden = value.parse()?,
            "bottleneck" | "output" => {
                if value != "linear" {
                    return Err(format_err(1, format!("{key} activation must be linear")));
                }
            }
            _ => return Err(format_err(1, format!("unknown header field `{key}`"))),
        }
    }
    let arch = OaeArchitecture {
        layer_sizes: sizes.ok_or_else(|| format_err(1, "missing layers"))?,
        hidden_activation: hidden,
    };
    let mut model = OaeModel::zeros(arch, lambda.ok_or_else(|| format_err(1, "missing lambda"))?)?;

    for i in 0..model.layers().len() {
        let (ln, line) = lines.next().ok_or_else(|| format_err(0, "truncated file"))?;
        let mut t = line.split_whitespace();
        if t.next() != Some(format!("layer{i}.weight").as_str()) {
            return Err(format_err(ln, format!("expected layer{i}.weight")));
        }
        let rows: usize = parse_tok(t.next(), ln)?;
        let cols: usize = parse_tok(t.next(), ln)?;
        let layer = &mut model.layers_mut()[i];
        if (rows, cols) != layer.weights.shape() {
            return Err(format_err(ln, format!("weight shape {rows}x{cols} does not match architecture")));
        }
        let vals: Vec<f64> = t.map(|v| parse_tok(Some(v), ln)).collect::<Result<_>>()?;
        if vals.len() != rows * cols {
            return Err(format_err(ln, "wrong number of weight values"));
        }
        layer.weights = DMatrix::from_row_slice(rows, cols, &vals);

        let (ln, line) = lines.next().ok_or_else(|| format_err(0, "truncated file"))?;
        let mut t = line.split_whitespace();
        if t.next() != Some(format!("layer{i}.bias").as_str()) {
            return Err(format_err(ln, format!("expected layer{i}.bias")));
        }
        let len: usize = parse_tok(t.next(), ln)?;
        let vals: Vec<f64> = t.map(|v| parse_tok(Some(v), ln)).collect::<Result<_>>()?;
        if len != layer.bias.len() || vals.len() != len {
            return Err(format_err(ln, "wrong bias length"));
        }
        layer.bias = DVector::from_vec(vals);
    }
    if model
        .layers()
        .iter()
        .any(|l| l.weights.iter().chain(l.bias.iter()).any(|v| !v.is_finite()))
    {
        return Err(Error::NonFiniteValue("model parameters".into()));
    }
    Ok(model)
}

fn parse_tok<T: std::str::FromStr>(tok: Option<&str>, line: usize) -> Result<T> {
    tok.and_then(|t| t.parse().ok())
        .ok_or_else(|| format_err(line, format!("cannot parse {:?}", tok.unwrap_or(""))))
}

pub fn save_model(model: &OaeModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_text(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<OaeModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_text(&text)
}
