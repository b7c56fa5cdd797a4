//! XML encoding of a trained model.
//!
//! ```xml
//! <hmm word="save" states="2" dim="1">
//!   <initial><p>1</p><p>0</p></initial>
//!   <transitions><row><p>0.5</p><p>0.5</p></row>...</transitions>
//!   <state id="0">
//!     <mean><v>0</v></mean>
//!     <covariance><row><v>1</v></row></covariance>
//!   </state>
//! </hmm>
//! ```
//!
//! Reals are written with 17 significant digits so every `f64` survives the
//! trip exactly.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use roxmltree::{Document, Node};

use super::{RegistryError, Result};
use crate::hmm::{GaussianState, HmmModel};

/// Rows (and the initial vector) whose sum is within this of 1 are renormalized on load.
pub const LOAD_STOCHASTIC_TOL: f64 = 1e-6;

/// Plain-data image of a model, as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelDocument {
    pub word: String,
    pub dim: usize,
    pub initial: Vec<f64>,
    pub transitions: Vec<Vec<f64>>,
    pub means: Vec<Vec<f64>>,
    pub covariances: Vec<Vec<Vec<f64>>>,
}

fn schema(msg: impl Into<String>) -> RegistryError {
    RegistryError::Schema(msg.into())
}

fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

fn escape_attr(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

impl ModelDocument {
    pub fn from_model(model: &HmmModel) -> Self {
        let states = model.states();
        Self {
            word: model.word().to_string(),
            dim: model.dim(),
            initial: model.initial().to_vec(),
            transitions: model.transitions().to_vec(),
            means: states.iter().map(|s| s.mean().to_vec()).collect(),
            covariances: states
                .iter()
                .map(|s| {
                    let c = s.covariance();
                    (0..c.nrows()).map(|r| c.row(r).iter().copied().collect()).collect()
                })
                .collect(),
        }
    }

    pub fn n_states(&self) -> usize {
        self.initial.len()
    }

    fn check_finite(&self) -> Result<()> {
        let all = self
            .initial
            .iter()
            .chain(self.transitions.iter().flatten())
            .chain(self.means.iter().flatten())
            .chain(self.covariances.iter().flatten().flatten());
        for v in all {
            if !v.is_finite() {
                return Err(RegistryError::Validation(format!("model '{}' contains a non-finite value", self.word)));
            }
        }
        Ok(())
    }

    fn check_shape(&self) -> Result<()> {
        let n = self.n_states();
        if n == 0 {
            return Err(schema("model has no states"));
        }
        if self.transitions.len() != n || self.transitions.iter().any(|r| r.len() != n) {
            return Err(schema(format!("transition matrix is not {n}x{n}")));
        }
        if self.means.len() != n || self.covariances.len() != n {
            return Err(schema(format!("expected {n} state elements, found {}", self.means.len())));
        }
        for (i, (m, c)) in self.means.iter().zip(&self.covariances).enumerate() {
            if m.len() != self.dim {
                return Err(schema(format!("state {i} mean has {} values, expected {}", m.len(), self.dim)));
            }
            if c.len() != self.dim || c.iter().any(|r| r.len() != self.dim) {
                return Err(schema(format!("state {i} covariance is not {0}x{0}", self.dim)));
            }
        }
        Ok(())
    }

    pub fn to_xml(&self) -> Result<String> {
        self.check_shape()?;
        self.check_finite()?;
        let n = self.n_states();
        let mut out = String::new();
        let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
        let _ = writeln!(out, r#"<hmm word="{}" states="{}" dim="{}">"#, escape_attr(&self.word), n, self.dim);
        let values = |tag: &str, xs: &[f64]| -> String {
            xs.iter().map(|&x| format!("<{tag}>{}</{tag}>", fmt_real(x))).collect()
        };
        let _ = writeln!(out, "  <initial>{}</initial>", values("p", &self.initial));
        let _ = writeln!(out, "  <transitions>");
        for row in &self.transitions {
            let _ = writeln!(out, "    <row>{}</row>", values("p", row));
        }
        let _ = writeln!(out, "  </transitions>");
        for (i, (mean, cov)) in self.means.iter().zip(&self.covariances).enumerate() {
            let _ = writeln!(out, r#"  <state id="{i}">"#);
            let _ = writeln!(out, "    <mean>{}</mean>", values("v", mean));
            let _ = writeln!(out, "    <covariance>");
            for row in cov {
                let _ = writeln!(out, "      <row>{}</row>", values("v", row));
            }
            let _ = writeln!(out, "    </covariance>");
            let _ = writeln!(out, "  </state>");
        }
        out.push_str("</hmm>\n");
        Ok(out)
    }

    pub fn from_xml(text: &str) -> Result<Self> {
        let doc = Document::parse(text).map_err(|e| RegistryError::Xml(e.to_string()))?;
        let root = doc.root_element();
        if root.tag_name().name() != "hmm" {
            return Err(schema(format!("root element is <{}>, expected <hmm>", root.tag_name().name())));
        }
        let attr = |name: &str| root.attribute(name).ok_or_else(|| schema(format!("<hmm> lacks attribute '{name}'")));
        let count = |name: &str| -> Result<usize> {
            attr(name)?.trim().parse().map_err(|_| schema(format!("attribute '{name}' is not a non-negative integer")))
        };
        let word = attr("word")?.to_string();
        let n = count("states")?;
        let dim = count("dim")?;

        let initial = values_of(single_child(root, "initial")?, "p")?;
        let transitions = rows_of(single_child(root, "transitions")?, "p")?;
        let state_nodes: Vec<Node> = elements(root).filter(|c| c.has_tag_name("state")).collect();
        if state_nodes.len() != n {
            return Err(schema(format!("states=\"{n}\" but {} <state> elements", state_nodes.len())));
        }
        let mut means = Vec::with_capacity(n);
        let mut covariances = Vec::with_capacity(n);
        for (i, node) in state_nodes.iter().enumerate() {
            let id = node.attribute("id").map(str::trim);
            if id != Some(i.to_string().as_str()) {
                return Err(schema(format!("state element {i} has id {id:?}, expected \"{i}\"")));
            }
            means.push(values_of(single_child(*node, "mean")?, "v")?);
            covariances.push(rows_of(single_child(*node, "covariance")?, "v")?);
        }
        if initial.len() != n {
            return Err(schema(format!("states=\"{n}\" but initial has {} entries", initial.len())));
        }
        let docm = Self { word, dim, initial, transitions, means, covariances };
        docm.check_shape()?;
        docm.check_finite()?;
        Ok(docm)
    }

    /// Validates and builds the model. Stochastic vectors within
    /// [`LOAD_STOCHASTIC_TOL`] of summing to 1 are renormalized.
    pub fn into_model(self) -> Result<HmmModel> {
        self.check_shape()?;
        self.check_finite()?;
        let initial = renormalize("initial distribution", self.initial)?;
        let transitions = self
            .transitions
            .into_iter()
            .enumerate()
            .map(|(i, r)| renormalize(&format!("transition row {i}"), r))
            .collect::<Result<Vec<_>>>()?;
        let states = self
            .means
            .into_iter()
            .zip(self.covariances)
            .map(|(m, c)| {
                let d = m.len();
                let cov = DMatrix::from_fn(d, d, |r, col| c[r][col]);
                GaussianState::new(m, cov)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(HmmModel::new(self.word, initial, transitions, states)?)
    }
}

fn renormalize(what: &str, mut p: Vec<f64>) -> Result<Vec<f64>> {
    if let Some(&v) = p.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(RegistryError::Validation(format!("{what} has probability {v} outside [0, 1]")));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > LOAD_STOCHASTIC_TOL {
        return Err(RegistryError::Validation(format!("{what} sums to {sum}, not 1")));
    }
    p.iter_mut().for_each(|v| *v /= sum);
    Ok(p)
}

fn elements<'a, 'i>(node: Node<'a, 'i>) -> impl Iterator<Item = Node<'a, 'i>> {
    node.children().filter(|c| c.is_element())
}

fn single_child<'a, 'i>(node: Node<'a, 'i>, tag: &str) -> Result<Node<'a, 'i>> {
    let mut found = elements(node).filter(|c| c.has_tag_name(tag));
    let first = found.next().ok_or_else(|| schema(format!("<{}> lacks a <{tag}> element", node.tag_name().name())))?;
    if found.next().is_some() {
        return Err(schema(format!("<{}> has more than one <{tag}>", node.tag_name().name())));
    }
    Ok(first)
}

fn values_of(node: Node, tag: &str) -> Result<Vec<f64>> {
    elements(node)
        .map(|c| {
            if !c.has_tag_name(tag) {
                return Err(schema(format!(
                    "unexpected <{}> inside <{}>",
                    c.tag_name().name(),
                    node.tag_name().name()
                )));
            }
            let text = c.text().unwrap_or("").trim();
            text.parse::<f64>().map_err(|_| schema(format!("'{text}' is not a number")))
        })
        .collect()
}

fn rows_of(node: Node, tag: &str) -> Result<Vec<Vec<f64>>> {
    elements(node)
        .map(|row| {
            if !row.has_tag_name("row") {
                return Err(schema(format!(
                    "unexpected <{}> inside <{}>",
                    row.tag_name().name(),
                    node.tag_name().name()
                )));
            }
            values_of(row, tag)
        })
        .collect()
}
