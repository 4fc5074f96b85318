//! Plain-text model checkpoints.
//!
//! ```text
//! layer_sizes 2 4 2
//! activation leaky_relu 1.0000000000000001e-1
//! head softmax
//! weights 0 4 2
//! <4 lines of 2 values>
//! bias 0 4
//! <1 line of 4 values>
//! ...
//! ```
//!
//! Values are written with 17 significant digits so `f64` parameters survive a
//! round trip bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use super::matrix::Matrix;
use super::model::{Activation, Dense, MlpModel, OutputHead};
use crate::{Error, Result, Scalar};

pub fn to_text<T: Scalar>(model: &MlpModel<T>) -> String {
    let mut s = String::new();
    let sizes: Vec<String> = model.layer_sizes().iter().map(usize::to_string).collect();
    let _ = writeln!(s, "layer_sizes {}", sizes.join(" "));
    match model.activation() {
        Activation::Relu => s.push_str("activation relu\n"),
        Activation::LeakyRelu { slope } => {
            let _ = writeln!(s, "activation leaky_relu {slope:.16e}");
        }
    }
    let head = match model.head() {
        OutputHead::Linear => "linear",
        OutputHead::Softmax => "softmax",
    };
    let _ = writeln!(s, "head {head}");
    for (l, layer) in model.layers().iter().enumerate() {
        let _ = writeln!(s, "weights {l} {} {}", layer.weights.rows(), layer.weights.cols());
        for row in layer.weights.iter_rows() {
            write_values(&mut s, row);
        }
        let _ = writeln!(s, "bias {l} {}", layer.bias.len());
        write_values(&mut s, &layer.bias);
    }
    s
}

fn write_values<T: Scalar>(s: &mut String, values: &[T]) {
    let parts: Vec<String> = values.iter().map(|v| format!("{v:.16e}")).collect();
    s.push_str(&parts.join(" "));
    s.push('\n');
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn next_tokens(&mut self, what: &str) -> Result<(usize, Vec<&'a str>)> {
        for (i, line) in self.inner.by_ref() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            return Ok((i + 1, line.split_whitespace().collect()));
        }
        Err(Error::Parse(format!("unexpected end of checkpoint, expected {what}")))
    }
}

fn parse_num<N: std::str::FromStr>(line: usize, tok: &str) -> Result<N> {
    tok.parse().map_err(|_| Error::Parse(format!("line {line}: cannot parse '{tok}'")))
}

fn expect_header<'a>(line: usize, toks: &[&'a str], key: &str) -> Result<()> {
    if toks.first() != Some(&key) {
        return Err(Error::Parse(format!("line {line}: expected '{key}', found '{}'", toks.join(" "))));
    }
    Ok(())
}

pub fn from_text<T: Scalar>(text: &str) -> Result<MlpModel<T>> {
    let mut lines = Lines { inner: text.lines().enumerate() };

    let (ln, toks) = lines.next_tokens("layer_sizes")?;
    expect_header(ln, &toks, "layer_sizes")?;
    let sizes: Vec<usize> = toks[1..].iter().map(|t| parse_num(ln, t)).collect::<Result<_>>()?;
    if sizes.len() < 2 {
        return Err(Error::Parse(format!("line {ln}: need at least two layer sizes")));
    }

    let (ln, toks) = lines.next_tokens("activation")?;
    expect_header(ln, &toks, "activation")?;
    let activation = match toks.get(1).copied() {
        Some("relu") => Activation::Relu,
        Some("leaky_relu") => {
            let slope = toks.get(2).ok_or_else(|| Error::Parse(format!("line {ln}: leaky_relu needs a slope")))?;
            Activation::LeakyRelu { slope: parse_num(ln, slope)? }
        }
        other => return Err(Error::Parse(format!("line {ln}: unknown activation {other:?}"))),
    };

    let (ln, toks) = lines.next_tokens("head")?;
    expect_header(ln, &toks, "head")?;
    let head = match toks.get(1).copied() {
        Some("linear") => OutputHead::Linear,
        Some("softmax") => OutputHead::Softmax,
        other => return Err(Error::Parse(format!("line {ln}: unknown head {other:?}"))),
    };

    let mut layers = Vec::with_capacity(sizes.len() - 1);
    for (l, pair) in sizes.windows(2).enumerate() {
        let (ln, toks) = lines.next_tokens("weights")?;
        expect_header(ln, &toks, "weights")?;
        let dims: Vec<usize> = toks[1..].iter().map(|t| parse_num(ln, t)).collect::<Result<_>>()?;
        if dims != [l, pair[1], pair[0]] {
            return Err(Error::Parse(format!("line {ln}: weight block header {dims:?} disagrees with layer_sizes")));
        }
        let mut data = Vec::with_capacity(pair[0] * pair[1]);
        for _ in 0..pair[1] {
            let (ln, toks) = lines.next_tokens("weight row")?;
            if toks.len() != pair[0] {
                return Err(Error::Parse(format!("line {ln}: expected {} values", pair[0])));
            }
            for t in toks {
                data.push(parse_num(ln, t)?);
            }
        }
        let (ln, toks) = lines.next_tokens("bias")?;
        expect_header(ln, &toks, "bias")?;
        let dims: Vec<usize> = toks[1..].iter().map(|t| parse_num(ln, t)).collect::<Result<_>>()?;
        if dims != [l, pair[1]] {
            return Err(Error::Parse(format!("line {ln}: bias block header {dims:?} disagrees with layer_sizes")));
        }
        let (ln, toks) = lines.next_tokens("bias values")?;
        if toks.len() != pair[1] {
            return Err(Error::Parse(format!("line {ln}: expected {} bias values", pair[1])));
        }
        let bias = toks.iter().map(|t| parse_num(ln, t)).collect::<Result<Vec<T>>>()?;
        let weights = Matrix::from_vec(pair[1], pair[0], data)?;
        weights.ensure_finite("checkpoint weights")?;
        layers.push(Dense { weights, bias });
    }
    MlpModel::from_layers(layers, activation, head)
}

pub fn save<T: Scalar>(model: &MlpModel<T>, path: &Path) -> Result<()> {
    std::fs::write(path, to_text(model)).map_err(|source| Error::Io { path: path.to_owned(), source })
}

pub fn load<T: Scalar>(path: &Path) -> Result<MlpModel<T>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_owned(), source })?;
    from_text(&text)
}
