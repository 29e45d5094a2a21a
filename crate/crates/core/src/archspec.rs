//! Static analysis of the residual UNet: graph construction, shape
//! inference, parameter counting and receptive field. No tensors are
//! involved; every quantity is derived from layer geometry alone.
//!
//! Spatial layers are square and use "same" padding, so both image axes
//! behave identically and the receptive field is reported once per axis.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum UpsampleMode {
    /// 2× nearest-neighbor repeat followed by a convolution.
    #[default]
    NearestConv,
    /// 2×2 transposed convolution with stride 2.
    Transposed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ShortcutPolicy {
    /// 1×1 projection only where the block changes the channel count.
    #[default]
    WhenChannelsChange,
    /// 1×1 projection on every residual shortcut.
    Always,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ArchConfig {
    /// Number of pooling levels.
    pub depth: usize,
    pub base_filters: usize,
    pub filter_growth: usize,
    /// Leading 1×1 convolution mapping the color channels to one.
    pub colorspace_conv: bool,
    /// Second bottleneck residual block with `bottleneck_kernel` filters.
    pub extra_bottleneck_block: bool,
    pub bottleneck_kernel: usize,
    pub standard_kernel: usize,
    pub input_channels: usize,
    pub upsample: UpsampleMode,
    pub shortcut: ShortcutPolicy,
}

impl Default for ArchConfig {
    fn default() -> Self {
        Self {
            depth: 4,
            base_filters: 16,
            filter_growth: 2,
            colorspace_conv: true,
            extra_bottleneck_block: true,
            bottleneck_kernel: 5,
            standard_kernel: 3,
            input_channels: 3,
            upsample: UpsampleMode::NearestConv,
            shortcut: ShortcutPolicy::WhenChannelsChange,
        }
    }
}

impl ArchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.depth < 1 {
            return Err(invalid("depth", "must be at least 1"));
        }
        if self.base_filters < 1 || self.filter_growth < 1 || self.input_channels < 1 {
            return Err(invalid("filters", "base_filters, filter_growth and input_channels must be at least 1"));
        }
        for (name, k) in [
            ("bottleneck_kernel", self.bottleneck_kernel),
            ("standard_kernel", self.standard_kernel),
        ] {
            if k % 2 == 0 {
                return Err(invalid(name, format!("must be odd, got {k}")));
            }
        }
        Ok(())
    }

    fn filters(&self, level: usize) -> usize {
        self.base_filters * self.filter_growth.pow(level as u32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Activation {
    Relu,
    Sigmoid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum LayerKind {
    Input {
        channels: usize,
    },
    Conv {
        kernel: usize,
        stride: usize,
        in_channels: usize,
        out_channels: usize,
    },
    /// Only `kernel == stride` is supported: every output pixel receives
    /// exactly one input pixel.
    TransposedConv {
        kernel: usize,
        stride: usize,
        in_channels: usize,
        out_channels: usize,
    },
    BatchNorm {
        channels: usize,
    },
    Activation {
        function: Activation,
    },
    MaxPool {
        size: usize,
    },
    Upsample {
        factor: usize,
    },
    Add,
    Concat,
}

impl LayerKind {
    fn params(&self) -> u64 {
        match *self {
            LayerKind::Conv {
                kernel,
                in_channels,
                out_channels,
                ..
            }
            | LayerKind::TransposedConv {
                kernel,
                in_channels,
                out_channels,
                ..
            } => (kernel * kernel * in_channels * out_channels + out_channels) as u64,
            LayerKind::BatchNorm { channels } => 2 * channels as u64,
            _ => 0,
        }
    }

    /// Positions of this layer's input needed for output positions `lo..=hi`.
    fn input_interval(&self, lo: i64, hi: i64) -> (i64, i64) {
        match *self {
            LayerKind::Conv { kernel, stride, .. } => {
                let r = (kernel as i64 - 1) / 2;
                let s = stride as i64;
                (s * lo - r, s * hi + r)
            }
            LayerKind::MaxPool { size } => {
                let p = size as i64;
                (p * lo, p * hi + p - 1)
            }
            LayerKind::Upsample { factor: f } | LayerKind::TransposedConv { stride: f, .. } => {
                let f = f as i64;
                (lo.div_euclid(f), hi.div_euclid(f))
            }
            _ => (lo, hi),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Node {
    pub id: usize,
    pub name: String,
    pub layer: LayerKind,
    pub inputs: Vec<usize>,
}

/// A layer DAG. Nodes are stored in topological order: every input id is
/// smaller than the id of the node consuming it. Node 0 is the input.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ArchGraph {
    nodes: Vec<Node>,
    output: usize,
}

impl ArchGraph {
    pub fn new(input_channels: usize) -> Self {
        Self {
            nodes: vec![Node {
                id: 0,
                name: "input".into(),
                layer: LayerKind::Input {
                    channels: input_channels,
                },
                inputs: Vec::new(),
            }],
            output: 0,
        }
    }

    /// Appends a node and makes it the output.
    pub fn push(&mut self, name: impl Into<String>, layer: LayerKind, inputs: &[usize]) -> Result<usize> {
        let id = self.nodes.len();
        if let Some(&bad) = inputs.iter().find(|&&i| i >= id) {
            return Err(Error::InvalidGraph(format!("node {id} reads from later node {bad}")));
        }
        let arity_ok = match layer {
            LayerKind::Input { .. } => false,
            LayerKind::Add | LayerKind::Concat => inputs.len() >= 2,
            _ => inputs.len() == 1,
        };
        if !arity_ok {
            return Err(Error::InvalidGraph(format!(
                "node {id} ({layer:?}) cannot take {} inputs",
                inputs.len()
            )));
        }
        if let LayerKind::TransposedConv { kernel, stride, .. } = layer {
            if kernel != stride {
                return Err(invalid("kernel", "transposed convolutions need kernel == stride"));
            }
        }
        self.nodes.push(Node {
            id,
            name: name.into(),
            layer,
            inputs: inputs.to_vec(),
        });
        self.output = id;
        Ok(id)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn output(&self) -> usize {
        self.output
    }

    pub fn input_channels(&self) -> usize {
        match self.nodes[0].layer {
            LayerKind::Input { channels } => channels,
            _ => unreachable!("node 0 is always the input"),
        }
    }

    pub fn count(&self, pred: impl Fn(&LayerKind) -> bool) -> usize {
        self.nodes.iter().filter(|n| pred(&n.layer)).count()
    }

    /// Input height and width must be multiples of this: the largest
    /// cumulative downsampling factor reached by any node.
    pub fn required_multiple(&self) -> usize {
        let mut scale = vec![1usize; self.nodes.len()];
        for n in &self.nodes[1..] {
            let s = n.inputs.iter().map(|&i| scale[i]).max().unwrap_or(1);
            scale[n.id] = match n.layer {
                LayerKind::MaxPool { size } => s * size,
                LayerKind::Conv { stride, .. } => s * stride,
                LayerKind::Upsample { factor: f } | LayerKind::TransposedConv { stride: f, .. } => (s / f).max(1),
                _ => s,
            };
        }
        scale.into_iter().max().unwrap_or(1)
    }
}

/// `(height, width, channels)`
pub type Shape = (usize, usize, usize);

fn residual_block(
    g: &mut ArchGraph,
    name: &str,
    input: usize,
    in_ch: usize,
    out_ch: usize,
    kernel: usize,
    shortcut: ShortcutPolicy,
) -> Result<usize> {
    let relu = LayerKind::Activation {
        function: Activation::Relu,
    };
    let conv = |k: usize, i: usize, o: usize| LayerKind::Conv {
        kernel: k,
        stride: 1,
        in_channels: i,
        out_channels: o,
    };
    let mut x = input;
    let mut ch = in_ch;
    for step in 1..=2 {
        x = g.push(format!("{name}.bn{step}"), LayerKind::BatchNorm { channels: ch }, &[x])?;
        x = g.push(format!("{name}.act{step}"), relu, &[x])?;
        x = g.push(format!("{name}.conv{step}"), conv(kernel, ch, out_ch), &[x])?;
        ch = out_ch;
    }
    let skip = if shortcut == ShortcutPolicy::Always || in_ch != out_ch {
        g.push(format!("{name}.shortcut"), conv(1, in_ch, out_ch), &[input])?
    } else {
        input
    };
    g.push(format!("{name}.add"), LayerKind::Add, &[x, skip])
}

/// Builds the residual UNet described by `cfg`.
///
/// Encoder: one residual block then a 2×2 max-pool per level. Bottleneck:
/// one residual block, plus a second one with `bottleneck_kernel` filters
/// when `extra_bottleneck_block` is set. Decoder: upsample, concatenate the
/// encoder output of the same level, residual block. Head: 1×1 convolution
/// to one channel and a sigmoid.
pub fn build_resunet(cfg: &ArchConfig) -> Result<ArchGraph> {
    cfg.validate()?;
    let k = cfg.standard_kernel;
    let mut g = ArchGraph::new(cfg.input_channels);
    let mut x = 0;
    let mut ch = cfg.input_channels;
    if cfg.colorspace_conv {
        x = g.push(
            "colorspace",
            LayerKind::Conv {
                kernel: 1,
                stride: 1,
                in_channels: ch,
                out_channels: 1,
            },
            &[x],
        )?;
        ch = 1;
    }

    let mut skips = Vec::with_capacity(cfg.depth);
    for level in 0..cfg.depth {
        let f = cfg.filters(level);
        x = residual_block(&mut g, &format!("enc{level}"), x, ch, f, k, cfg.shortcut)?;
        ch = f;
        skips.push(x);
        x = g.push(format!("enc{level}.pool"), LayerKind::MaxPool { size: 2 }, &[x])?;
    }

    let fb = cfg.filters(cfg.depth);
    x = residual_block(&mut g, "bottleneck", x, ch, fb, k, cfg.shortcut)?;
    ch = fb;
    if cfg.extra_bottleneck_block {
        x = residual_block(&mut g, "bottleneck.wide", x, ch, fb, cfg.bottleneck_kernel, cfg.shortcut)?;
    }

    for level in (0..cfg.depth).rev() {
        let f = cfg.filters(level);
        x = match cfg.upsample {
            UpsampleMode::NearestConv => {
                let up = g.push(format!("dec{level}.upsample"), LayerKind::Upsample { factor: 2 }, &[x])?;
                g.push(
                    format!("dec{level}.upconv"),
                    LayerKind::Conv {
                        kernel: k,
                        stride: 1,
                        in_channels: ch,
                        out_channels: f,
                    },
                    &[up],
                )?
            }
            UpsampleMode::Transposed => g.push(
                format!("dec{level}.upconv"),
                LayerKind::TransposedConv {
                    kernel: 2,
                    stride: 2,
                    in_channels: ch,
                    out_channels: f,
                },
                &[x],
            )?,
        };
        x = g.push(format!("dec{level}.concat"), LayerKind::Concat, &[x, skips[level]])?;
        x = residual_block(&mut g, &format!("dec{level}"), x, 2 * f, f, k, cfg.shortcut)?;
        ch = f;
    }

    x = g.push(
        "head.conv",
        LayerKind::Conv {
            kernel: 1,
            stride: 1,
            in_channels: ch,
            out_channels: 1,
        },
        &[x],
    )?;
    g.push(
        "head.sigmoid",
        LayerKind::Activation {
            function: Activation::Sigmoid,
        },
        &[x],
    )?;
    Ok(g)
}

/// Output shape of every node for an input of `input` = `(h, w, c)`.
pub fn shape_inference(g: &ArchGraph, input: Shape) -> Result<Vec<Shape>> {
    let (h, w, c) = input;
    let multiple = g.required_multiple();
    if h == 0 || w == 0 || h % multiple != 0 || w % multiple != 0 {
        return Err(Error::NotDivisible {
            height: h,
            width: w,
            multiple,
            levels: multiple.trailing_zeros() as usize,
        });
    }
    if c != g.input_channels() {
        return Err(Error::ChannelMismatch {
            expected: g.input_channels(),
            actual: c,
        });
    }
    let mut shapes: Vec<Shape> = Vec::with_capacity(g.nodes.len());
    shapes.push(input);
    for n in &g.nodes[1..] {
        let first = shapes[n.inputs[0]];
        let bad = |msg: String| Error::InvalidGraph(format!("node {} ({}): {msg}", n.id, n.name));
        let check_channels = |expected: usize| {
            if first.2 == expected {
                Ok(())
            } else {
                Err(bad(format!("expects {expected} channels, gets {}", first.2)))
            }
        };
        let shape = match n.layer {
            LayerKind::Input { .. } => return Err(bad("second input node".into())),
            LayerKind::Conv {
                stride,
                in_channels,
                out_channels,
                ..
            } => {
                check_channels(in_channels)?;
                (first.0.div_ceil(stride), first.1.div_ceil(stride), out_channels)
            }
            LayerKind::TransposedConv {
                stride,
                in_channels,
                out_channels,
                ..
            } => {
                check_channels(in_channels)?;
                (first.0 * stride, first.1 * stride, out_channels)
            }
            LayerKind::BatchNorm { channels } => {
                check_channels(channels)?;
                first
            }
            LayerKind::Activation { .. } => first,
            LayerKind::MaxPool { size } => {
                if !first.0.is_multiple_of(size) || !first.1.is_multiple_of(size) {
                    return Err(bad(format!("{}x{} not divisible by {size}", first.0, first.1)));
                }
                (first.0 / size, first.1 / size, first.2)
            }
            LayerKind::Upsample { factor } => (first.0 * factor, first.1 * factor, first.2),
            LayerKind::Add => {
                if let Some(&i) = n.inputs.iter().find(|&&i| shapes[i] != first) {
                    return Err(bad(format!("adds {:?} to {:?}", first, shapes[i])));
                }
                first
            }
            LayerKind::Concat => {
                let mut channels = 0;
                for &i in &n.inputs {
                    let s = shapes[i];
                    if (s.0, s.1) != (first.0, first.1) {
                        return Err(bad(format!("concatenates {:?} with {:?}", first, s)));
                    }
                    channels += s.2;
                }
                (first.0, first.1, channels)
            }
        };
        shapes.push(shape);
    }
    Ok(shapes)
}

/// Learnable parameters: convolution weights and biases, batch-norm scale
/// and shift.
pub fn param_count(g: &ArchGraph) -> u64 {
    g.nodes.iter().map(|n| n.layer.params()).sum()
}

/// Input interval `(lo, hi)` that output position `position` depends on,
/// along one axis, ignoring image borders.
pub fn dependency_interval(g: &ArchGraph, position: i64) -> (i64, i64) {
    let mut need: Vec<Option<(i64, i64)>> = vec![None; g.nodes.len()];
    need[g.output] = Some((position, position));
    for n in g.nodes.iter().rev() {
        let Some((lo, hi)) = need[n.id] else { continue };
        let (ilo, ihi) = n.layer.input_interval(lo, hi);
        for &i in &n.inputs {
            need[i] = Some(match need[i] {
                Some((a, b)) => (a.min(ilo), b.max(ihi)),
                None => (ilo, ihi),
            });
        }
    }
    need[0].expect("output is reachable from the input")
}

/// Receptive field `(rf_h, rf_w)` at the output: the widest input extent any
/// single output pixel depends on. Pooling makes the extent depend on the
/// output position modulo the total downsampling factor, so every phase is
/// examined.
pub fn receptive_field(g: &ArchGraph) -> (usize, usize) {
    let period = g.required_multiple() as i64;
    let rf = (0..period)
        .map(|o| {
            let (lo, hi) = dependency_interval(g, o);
            (hi - lo + 1) as usize
        })
        .max()
        .unwrap_or(1);
    (rf, rf)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ArchSummary {
    pub input: Shape,
    pub output: Shape,
    pub shapes: Vec<Shape>,
    pub param_count: u64,
    pub receptive_field: (usize, usize),
    pub required_multiple: usize,
}

pub fn summarize(g: &ArchGraph, input: Shape) -> Result<ArchSummary> {
    let shapes = shape_inference(g, input)?;
    Ok(ArchSummary {
        input,
        output: shapes[g.output],
        param_count: param_count(g),
        receptive_field: receptive_field(g),
        required_multiple: g.required_multiple(),
        shapes,
    })
}
