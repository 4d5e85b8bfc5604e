//! Functional programs: a topologically ordered list of module nodes whose last node is
//! the root.
//!
//! The document form is a JSON list of `{function, value_inputs, inputs}` records:
//!
//! ```text
//! [{"function": "scene", "value_inputs": [], "inputs": []},
//!  {"function": "filter_color", "value_inputs": ["cyan"], "inputs": [0]},
//!  {"function": "ordinal", "value_inputs": ["2", "front"], "inputs": [1]}]
//! ```
//!
//! | function        | inputs | value_inputs               |
//! |-----------------|--------|----------------------------|
//! | scene           | 0      | none                       |
//! | filter_{kind}   | 1      | one canonical value        |
//! | unique          | 1      | none                       |
//! | relate          | 1      | direction                  |
//! | same_{kind}     | 1      | none                       |
//! | and, or         | 2      | none                       |
//! | ordinal         | 1      | 1-based rank, direction    |
//! | visible         | 1      | `fully` or `partially`     |

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::vocab::{AttributeKind, AttributeValue, Direction, Visibility};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Op {
    Scene,
    Filter(AttributeValue),
    Unique,
    Relate(Direction),
    Same(AttributeKind),
    And,
    Or,
    Ordinal { rank: usize, direction: Direction },
    Visible(Visibility),
}

pub const FUNCTION_NAMES: &[&str] = &[
    "scene",
    "filter_color",
    "filter_size",
    "filter_shape",
    "filter_material",
    "unique",
    "relate",
    "same_color",
    "same_size",
    "same_shape",
    "same_material",
    "and",
    "or",
    "ordinal",
    "visible",
];

impl Op {
    pub fn function_name(&self) -> &'static str {
        match self {
            Op::Scene => "scene",
            Op::Filter(v) => match v.kind() {
                AttributeKind::Color => "filter_color",
                AttributeKind::Size => "filter_size",
                AttributeKind::Shape => "filter_shape",
                AttributeKind::Material => "filter_material",
            },
            Op::Unique => "unique",
            Op::Relate(_) => "relate",
            Op::Same(kind) => match kind {
                AttributeKind::Color => "same_color",
                AttributeKind::Size => "same_size",
                AttributeKind::Shape => "same_shape",
                AttributeKind::Material => "same_material",
            },
            Op::And => "and",
            Op::Or => "or",
            Op::Ordinal { .. } => "ordinal",
            Op::Visible(_) => "visible",
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            Op::Scene => 0,
            Op::And | Op::Or => 2,
            _ => 1,
        }
    }

    pub fn value_inputs(&self) -> Vec<String> {
        match self {
            Op::Filter(v) => vec![v.as_str().to_string()],
            Op::Relate(d) => vec![d.as_str().to_string()],
            Op::Ordinal { rank, direction } => vec![rank.to_string(), direction.as_str().to_string()],
            Op::Visible(v) => vec![v.as_str().to_string()],
            Op::Scene | Op::Unique | Op::Same(_) | Op::And | Op::Or => Vec::new(),
        }
    }

    fn parse(index: usize, function: &str, values: &[String]) -> Result<Op> {
        let name = FUNCTION_NAMES
            .iter()
            .copied()
            .find(|n| *n == function)
            .ok_or_else(|| Error::UnknownFunction {
                index,
                name: function.to_string(),
            })?;
        let bad = |detail: String| Error::ValueInputs {
            index,
            function: name,
            detail,
        };
        let expect_len = |n: usize| {
            if values.len() == n {
                Ok(())
            } else {
                Err(bad(format!("expected {n} value(s), got {}", values.len())))
            }
        };
        let kind_of = |suffix: &str| -> AttributeKind { suffix.parse().expect("name table matches kinds") };

        Ok(match name {
            "scene" | "unique" | "and" | "or" => {
                expect_len(0)?;
                match name {
                    "scene" => Op::Scene,
                    "unique" => Op::Unique,
                    "and" => Op::And,
                    _ => Op::Or,
                }
            }
            "relate" => {
                expect_len(1)?;
                Op::Relate(values[0].parse().map_err(|e: Error| bad(e.to_string()))?)
            }
            "ordinal" => {
                expect_len(2)?;
                let rank: usize = values[0]
                    .parse()
                    .map_err(|_| bad(format!("rank `{}` is not a positive integer", values[0])))?;
                if rank == 0 {
                    return Err(bad("ranks are 1-based".into()));
                }
                let direction = values[1].parse().map_err(|e: Error| bad(e.to_string()))?;
                Op::Ordinal { rank, direction }
            }
            "visible" => {
                expect_len(1)?;
                Op::Visible(values[0].parse().map_err(|e: Error| bad(e.to_string()))?)
            }
            other if other.starts_with("filter_") => {
                expect_len(1)?;
                let kind = kind_of(&other["filter_".len()..]);
                Op::Filter(AttributeValue::parse(kind, &values[0]).map_err(|e| bad(e.to_string()))?)
            }
            other => {
                expect_len(0)?;
                Op::Same(kind_of(&other["same_".len()..]))
            }
        })
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let values = self.value_inputs();
        if values.is_empty() {
            f.write_str(self.function_name())
        } else {
            write!(f, "{}[{}]", self.function_name(), values.join(","))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProgramNode {
    pub op: Op,
    pub inputs: Vec<usize>,
}

impl ProgramNode {
    pub fn new(op: Op, inputs: Vec<usize>) -> Self {
        ProgramNode { op, inputs }
    }
}

/// Untyped node as it appears in documents.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawNode {
    pub function: String,
    #[serde(default)]
    pub value_inputs: Vec<String>,
    #[serde(default)]
    pub inputs: Vec<usize>,
}

impl From<&ProgramNode> for RawNode {
    fn from(node: &ProgramNode) -> Self {
        RawNode {
            function: node.op.function_name().to_string(),
            value_inputs: node.op.value_inputs(),
            inputs: node.inputs.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    Chain,
    Tree,
}

/// A validated program. Construct through [`Program::new`] or by parsing.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<RawNode>", into = "Vec<RawNode>")]
pub struct Program {
    nodes: Vec<ProgramNode>,
}

impl Program {
    pub fn new(nodes: Vec<ProgramNode>) -> Result<Self> {
        validate(&nodes)?;
        Ok(Program { nodes })
    }

    pub fn from_raw(raw: &[RawNode]) -> Result<Self> {
        let nodes = raw
            .iter()
            .enumerate()
            .map(|(index, r)| {
                let op = Op::parse(index, &r.function, &r.value_inputs)?;
                Ok(ProgramNode::new(op, r.inputs.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        Program::new(nodes)
    }

    pub fn nodes(&self) -> &[ProgramNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn topology(&self) -> Topology {
        if self.nodes.iter().any(|n| matches!(n.op, Op::And | Op::Or)) {
            Topology::Tree
        } else {
            Topology::Chain
        }
    }

    pub fn count(&self, pred: impl Fn(&Op) -> bool) -> usize {
        self.nodes.iter().filter(|n| pred(&n.op)).count()
    }

    pub fn to_raw(&self) -> Vec<RawNode> {
        self.nodes.iter().map(RawNode::from).collect()
    }
}

impl TryFrom<Vec<RawNode>> for Program {
    type Error = Error;

    fn try_from(raw: Vec<RawNode>) -> Result<Self> {
        Program::from_raw(&raw)
    }
}

impl From<Program> for Vec<RawNode> {
    fn from(p: Program) -> Self {
        p.to_raw()
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, node) in self.nodes.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{i}:{}", node.op)?;
            if !node.inputs.is_empty() {
                let ins: Vec<String> = node.inputs.iter().map(usize::to_string).collect();
                write!(f, "({})", ins.join(","))?;
            }
        }
        Ok(())
    }
}

fn validate(nodes: &[ProgramNode]) -> Result<()> {
    if nodes.is_empty() {
        return Err(Error::EmptyProgram);
    }
    for (index, node) in nodes.iter().enumerate() {
        if node.inputs.len() != node.op.arity() {
            return Err(Error::Arity {
                index,
                function: node.op.function_name(),
                expected: node.op.arity(),
                found: node.inputs.len(),
            });
        }
        if let Some(&input) = node.inputs.iter().find(|&&i| i >= nodes.len()) {
            return Err(Error::DanglingInput { index, input });
        }
    }
    if let Some(index) = find_cycle(nodes) {
        return Err(Error::Cycle { index });
    }
    for (index, node) in nodes.iter().enumerate() {
        if let Some(&input) = node.inputs.iter().find(|&&i| i >= index) {
            return Err(Error::NotTopological { index, input });
        }
    }
    let mut reached = vec![false; nodes.len()];
    let mut stack = vec![nodes.len() - 1];
    while let Some(i) = stack.pop() {
        if !std::mem::replace(&mut reached[i], true) {
            stack.extend(&nodes[i].inputs);
        }
    }
    if let Some(index) = reached.iter().position(|r| !r) {
        return Err(Error::Unreachable { index });
    }
    Ok(())
}

/// Returns a node on a cycle, if any.
fn find_cycle(nodes: &[ProgramNode]) -> Option<usize> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    let mut marks = vec![Mark::New; nodes.len()];
    for start in 0..nodes.len() {
        if marks[start] != Mark::New {
            continue;
        }
        // Iterative DFS: (node, next input position).
        let mut stack = vec![(start, 0usize)];
        marks[start] = Mark::Active;
        while let Some((node, pos)) = stack.pop() {
            if let Some(&next) = nodes[node].inputs.get(pos) {
                stack.push((node, pos + 1));
                match marks[next] {
                    Mark::Active => return Some(next),
                    Mark::New => {
                        marks[next] = Mark::Active;
                        stack.push((next, 0));
                    }
                    Mark::Done => {}
                }
            } else {
                marks[node] = Mark::Done;
            }
        }
    }
    None
}

/// Parses and validates a program document.
pub fn parse_program(document: &str) -> Result<Program> {
    let raw: Vec<RawNode> = serde_json::from_str(document)?;
    Program::from_raw(&raw)
}

/// Compact JSON document for a program.
pub fn emit_program(program: &Program) -> String {
    serde_json::to_string(&program.to_raw()).expect("program nodes always serialize")
}
