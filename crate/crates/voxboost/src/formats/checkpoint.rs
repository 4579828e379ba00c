//! Encoder checkpoint: an ASCII manifest terminated by a `data` line, then
//! the raw parameters as little-endian `f64`. Per layer, in manifest order:
//! weight, bias, weight velocity, bias velocity.
//!
//! ```text
//! voxckpt v1
//! input_size 24
//! channels 4 4
//! kernel 3
//! best_epoch 5
//! norm intensity_mean <x>
//! norm intensity_std <x>
//! layer 0 4 2 3 same
//! ...
//! data
//! ```

use std::fs;
use std::path::Path;

use voxboost_core::encoder::{Conv3dLayer, EncoderConfig, EncoderModel, Padding};
use voxboost_core::pipeline::InputNorm;

use crate::error::{CliError, CliResult};

const MAGIC: &str = "voxckpt v1";

/// What a checkpoint stores besides the model itself.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: EncoderModel,
    pub input_norm: InputNorm,
    pub best_epoch: usize,
}

fn padding_name(p: Padding) -> &'static str {
    match p {
        Padding::Same => "same",
        Padding::Valid => "valid",
    }
}

pub fn encode(ck: &Checkpoint) -> Vec<u8> {
    let cfg = ck.model.config();
    let mut head = format!("{MAGIC}\ninput_size {}\nchannels", cfg.input_size);
    for c in &cfg.channel_schedule {
        head += &format!(" {c}");
    }
    head += &format!("\nkernel {}\nbest_epoch {}\n", cfg.kernel, ck.best_epoch);
    head += &format!("norm intensity_mean {:e}\n", ck.input_norm.intensity_mean);
    head += &format!("norm intensity_std {:e}\n", ck.input_norm.intensity_std);
    for (i, l) in ck.model.layers().iter().enumerate() {
        head += &format!(
            "layer {i} {} {} {} {}\n",
            l.out_channels(),
            l.in_channels(),
            l.kernel(),
            padding_name(l.padding())
        );
    }
    head += "data\n";
    let mut out = head.into_bytes();
    for (l, v) in ck.model.layers().iter().zip(ck.model.velocity()) {
        for buf in [&l.weight, &l.bias, &v.0, &v.1] {
            for x in buf.iter() {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
    }
    out
}

fn take_line<'a>(bytes: &mut &'a [u8]) -> Result<&'a str, String> {
    let nl = bytes.iter().position(|&b| b == b'\n').ok_or("truncated manifest")?;
    let line = std::str::from_utf8(&bytes[..nl]).map_err(|_| "manifest is not ASCII")?;
    *bytes = &bytes[nl + 1..];
    Ok(line)
}

fn expect<'a>(line: &'a str, key: &str) -> Result<Vec<&'a str>, String> {
    let mut parts = line.split_whitespace();
    if parts.next() != Some(key) {
        return Err(format!("expected `{key}` line, found {line:?}"));
    }
    Ok(parts.collect())
}

fn one<T: std::str::FromStr>(parts: &[&str], what: &str) -> Result<T, String> {
    match parts {
        [v] => v.parse().map_err(|_| format!("{what}: cannot parse {v:?}")),
        _ => Err(format!("{what}: expected one value")),
    }
}

pub fn decode(bytes: &[u8]) -> Result<Checkpoint, String> {
    let mut rest = bytes;
    if take_line(&mut rest)? != MAGIC {
        return Err(format!("missing `{MAGIC}` header"));
    }
    let input_size = one(&expect(take_line(&mut rest)?, "input_size")?, "input_size")?;
    let channel_schedule = expect(take_line(&mut rest)?, "channels")?
        .iter()
        .map(|t| t.parse().map_err(|_| format!("channels: cannot parse {t:?}")))
        .collect::<Result<Vec<usize>, String>>()?;
    let kernel = one(&expect(take_line(&mut rest)?, "kernel")?, "kernel")?;
    let best_epoch = one(&expect(take_line(&mut rest)?, "best_epoch")?, "best_epoch")?;
    let mean = expect(take_line(&mut rest)?, "norm")?;
    let std = expect(take_line(&mut rest)?, "norm")?;
    let input_norm = match (mean.as_slice(), std.as_slice()) {
        (["intensity_mean", m], ["intensity_std", s]) => InputNorm {
            intensity_mean: m.parse().map_err(|_| "bad intensity_mean")?,
            intensity_std: s.parse().map_err(|_| "bad intensity_std")?,
        },
        _ => return Err("expected intensity_mean and intensity_std norm lines".into()),
    };
    let config = EncoderConfig { input_size, channel_schedule, kernel };
    config.validate().map_err(|e| e.to_string())?;
    let shapes = EncoderModel::shapes(&config);
    for (i, &(o, inp, k, p)) in shapes.iter().enumerate() {
        let got = expect(take_line(&mut rest)?, "layer")?;
        let want = [i.to_string(), o.to_string(), inp.to_string(), k.to_string(), padding_name(p).to_string()];
        if got != want.iter().map(String::as_str).collect::<Vec<_>>() {
            return Err(format!("layer {i}: manifest {got:?} does not match the configured architecture"));
        }
    }
    if take_line(&mut rest)? != "data" {
        return Err("expected `data` line after the layer list".into());
    }
    let total: usize = shapes.iter().map(|&(o, i, k, _)| 2 * (o * i * k.pow(3) + o)).sum();
    if rest.len() != total * 8 {
        return Err(format!("expected {} parameter bytes, found {}", total * 8, rest.len()));
    }
    let mut values = rest.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")));
    let mut take = |n: usize| -> Vec<f64> { values.by_ref().take(n).collect() };
    let mut layers = Vec::with_capacity(shapes.len());
    let mut velocity = Vec::with_capacity(shapes.len());
    for &(o, i, k, p) in &shapes {
        let nw = o * i * k.pow(3);
        let (w, b) = (take(nw), take(o));
        velocity.push((take(nw), take(o)));
        layers.push(Conv3dLayer::new(o, i, k, p, w, b).map_err(|e| e.to_string())?);
    }
    let model = EncoderModel::from_parts(config, layers, velocity).map_err(|e| e.to_string())?;
    Ok(Checkpoint { model, input_norm, best_epoch })
}

pub fn write(path: &Path, ck: &Checkpoint) -> CliResult<()> {
    fs::write(path, encode(ck)).map_err(|e| CliError::io(path, e))
}

pub fn read(path: &Path) -> CliResult<Checkpoint> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    decode(&bytes).map_err(|m| CliError::format(path, m))
}
