//! Plain-text GBM model. Reals are written with 17 significant digits, so a
//! decoded model predicts bit-identically.
//!
//! ```text
//! gbmmodel v1
//! learning_rate 1.0000000000000001e-1
//! ...
//! stages 2
//! stage <rho> node <feature> <threshold> leaf <value> leaf <value>
//! ```
//!
//! Tree nodes are listed in pre-order; `node` is a split whose left subtree
//! follows immediately, `leaf` a leaf.

use std::fs;
use std::path::Path;

use voxboost_core::gbm::{GbmHyperparams, GbmModel, Node, RegressionTree, Stage};

use crate::error::{CliError, CliResult};

const MAGIC: &str = "gbmmodel v1";

pub fn encode(m: &GbmModel) -> String {
    let h = m.hyperparams();
    let mut s = String::new();
    s.push_str(MAGIC);
    s.push('\n');
    s += &format!("learning_rate {:.16e}\n", h.learning_rate);
    s += &format!("n_trees {}\n", h.n_trees);
    s += &format!("max_depth {}\n", h.max_depth);
    s += &format!("lambda {:.16e}\n", h.lambda);
    s += &format!("alpha {:.16e}\n", h.alpha);
    s += &format!("subsample {:.16e}\n", h.subsample);
    s += &format!("seed {}\n", h.seed);
    s += &format!("n_features {}\n", m.n_features());
    s += &format!("f0 {:.16e}\n", m.f0());
    s += &format!("gamma {:.16e}\n", m.gamma());
    s += &format!("stages {}\n", m.stages().len());
    for st in m.stages() {
        s += &format!("stage {:.16e}", st.rho);
        push_node(&mut s, st.tree.nodes(), 0);
        s.push('\n');
    }
    s
}

fn push_node(s: &mut String, nodes: &[Node], i: usize) {
    match nodes[i] {
        Node::Leaf { value } => *s += &format!(" leaf {value:.16e}"),
        Node::Split { feature, threshold, left, right } => {
            *s += &format!(" node {feature} {threshold:.16e}");
            push_node(s, nodes, left);
            push_node(s, nodes, right);
        }
    }
}

struct Lines<'a> {
    it: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn field(&mut self, key: &str) -> Result<&'a str, String> {
        let (no, line) = self.it.next().ok_or_else(|| format!("unexpected end of file, expected {key}"))?;
        let mut parts = line.splitn(2, ' ');
        match (parts.next(), parts.next()) {
            (Some(k), Some(v)) if k == key => Ok(v),
            _ => Err(format!("line {}: expected `{key} <value>`", no + 1)),
        }
    }

    fn parse<T: std::str::FromStr>(&mut self, key: &str) -> Result<T, String> {
        let v = self.field(key)?;
        v.trim().parse().map_err(|_| format!("{key}: cannot parse {v:?}"))
    }
}

pub fn decode(text: &str) -> Result<GbmModel, String> {
    let mut lines = Lines { it: text.lines().enumerate() };
    match lines.it.next() {
        Some((_, l)) if l == MAGIC => {}
        _ => return Err(format!("missing `{MAGIC}` header")),
    }
    let hp = GbmHyperparams {
        learning_rate: lines.parse("learning_rate")?,
        n_trees: lines.parse("n_trees")?,
        max_depth: lines.parse("max_depth")?,
        lambda: lines.parse("lambda")?,
        alpha: lines.parse("alpha")?,
        subsample: lines.parse("subsample")?,
        seed: lines.parse("seed")?,
    };
    let n_features: usize = lines.parse("n_features")?;
    let f0: f64 = lines.parse("f0")?;
    let gamma: f64 = lines.parse("gamma")?;
    let n_stages: usize = lines.parse("stages")?;
    let mut stages = Vec::with_capacity(n_stages.min(1 << 20));
    for m in 0..n_stages {
        let body = lines.field("stage").map_err(|e| format!("stage {m}: {e}"))?;
        let mut tokens = body.split_whitespace();
        let rho = tokens.next().and_then(|t| t.parse::<f64>().ok()).ok_or_else(|| format!("stage {m}: bad rho"))?;
        let mut nodes = Vec::new();
        parse_node(&mut tokens, &mut nodes).map_err(|e| format!("stage {m}: {e}"))?;
        if tokens.next().is_some() {
            return Err(format!("stage {m}: trailing tokens"));
        }
        let tree = RegressionTree::from_nodes(nodes).map_err(|e| format!("stage {m}: {e}"))?;
        stages.push(Stage { tree, rho });
    }
    if let Some((no, _)) = lines.it.find(|(_, l)| !l.trim().is_empty()) {
        return Err(format!("line {}: unexpected content after the last stage", no + 1));
    }
    GbmModel::from_parts(f0, gamma, stages, hp, n_features).map_err(|e| e.to_string())
}

fn parse_node<'a>(tokens: &mut impl Iterator<Item = &'a str>, nodes: &mut Vec<Node>) -> Result<usize, String> {
    let idx = nodes.len();
    let num = |t: Option<&str>| -> Result<f64, String> {
        t.and_then(|t| t.parse::<f64>().ok()).ok_or_else(|| "bad number".to_string())
    };
    match tokens.next() {
        Some("leaf") => {
            nodes.push(Node::Leaf { value: num(tokens.next())? });
        }
        Some("node") => {
            let feature = tokens.next().and_then(|t| t.parse::<usize>().ok()).ok_or("bad feature index")?;
            let threshold = num(tokens.next())?;
            nodes.push(Node::Leaf { value: 0.0 });
            let left = parse_node(tokens, nodes)?;
            let right = parse_node(tokens, nodes)?;
            nodes[idx] = Node::Split { feature, threshold, left, right };
        }
        Some(t) => return Err(format!("unknown node tag {t:?}")),
        None => return Err("truncated tree".into()),
    }
    Ok(idx)
}

pub fn write(path: &Path, m: &GbmModel) -> CliResult<()> {
    fs::write(path, encode(m)).map_err(|e| CliError::io(path, e))
}

pub fn read(path: &Path) -> CliResult<GbmModel> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    decode(&text).map_err(|m| CliError::format(path, m))
}
