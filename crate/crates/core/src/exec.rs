//! Symbolic program execution over a scene.

use serde::{Deserialize, Serialize};

use crate::program::{Op, Program};
use crate::render::RenderResult;
use crate::scene::{order_along, spatial_related, ObjectSet, SceneGraph};
use crate::{Error, Result};

/// Referent set of every program node, in node order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StepTrace {
    pub steps: Vec<ObjectSet>,
}

impl StepTrace {
    pub fn final_set(&self) -> &ObjectSet {
        self.steps.last().expect("programs are never empty")
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

fn single(set: &ObjectSet, function: &'static str) -> Result<usize> {
    match set.len() {
        1 => Ok(*set.iter().next().expect("len checked")),
        size => Err(Error::SingletonRequired { function, size }),
    }
}

/// Evaluates one module on already computed input sets.
pub fn eval_node(
    op: &Op,
    inputs: &[&ObjectSet],
    scene: &SceneGraph,
    render: Option<&RenderResult>,
) -> Result<ObjectSet> {
    if inputs.len() != op.arity() {
        return Err(Error::Arity {
            index: 0,
            function: op.function_name(),
            expected: op.arity(),
            found: inputs.len(),
        });
    }
    let objects = &scene.objects;
    Ok(match *op {
        Op::Scene => scene.all_ids(),
        Op::Filter(value) => inputs[0]
            .iter()
            .copied()
            .filter(|&id| objects.get(id).is_some_and(|o| o.has(value)))
            .collect(),
        Op::Unique => {
            if inputs[0].len() != 1 {
                return Err(Error::NonUniqueReferent(inputs[0].len()));
            }
            inputs[0].clone()
        }
        Op::Relate(direction) => spatial_related(scene, single(inputs[0], "relate")?, direction)?,
        Op::Same(kind) => {
            let anchor = single(inputs[0], op.function_name())?;
            let value = scene.object(anchor)?.attribute(kind);
            (0..objects.len())
                .filter(|&id| id != anchor && objects[id].has(value))
                .collect()
        }
        Op::And => inputs[0].intersection(inputs[1]).copied().collect(),
        Op::Or => inputs[0].union(inputs[1]).copied().collect(),
        Op::Ordinal { rank, direction } => {
            let ordered = order_along(scene, inputs[0], direction)?;
            match ordered.get(rank - 1) {
                Some(&id) => ObjectSet::from([id]),
                None => {
                    return Err(Error::RankOutOfRange {
                        rank,
                        size: ordered.len(),
                    })
                }
            }
        }
        Op::Visible(flag) => {
            let render = render.ok_or(Error::MissingRender)?;
            inputs[0]
                .iter()
                .copied()
                .filter(|&id| render.visibility(id).and_then(|v| v.flag()) == Some(flag))
                .collect()
        }
    })
}

/// Runs every node in order. Errors carry the failing node index.
pub fn execute(program: &Program, scene: &SceneGraph, render: Option<&RenderResult>) -> Result<StepTrace> {
    let mut steps: Vec<ObjectSet> = Vec::with_capacity(program.len());
    for (index, node) in program.nodes().iter().enumerate() {
        let inputs: Vec<&ObjectSet> = node.inputs.iter().map(|&i| &steps[i]).collect();
        let out = eval_node(&node.op, &inputs, scene, render).map_err(|e| Error::at_node(index, e))?;
        steps.push(out);
    }
    Ok(StepTrace { steps })
}
