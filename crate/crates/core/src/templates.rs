//! Expression families: a program skeleton with named slots plus several text
//! realizations of it.
//!
//! Families live as JSON files under `templates/` (one per family). Skeleton nodes refer
//! to earlier skeleton nodes by index; the last node must be a non-unique `describe`.
//! Text templates reference slots as `<D1>`, `<R1>`, ...
//!
//! A `describe` slot expands to zero or more attribute filters, optionally followed by one
//! `ordinal` or one `visible` node, and then `unique` when the slot is an anchor.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::program::{Op, Program, ProgramNode};
use crate::vocab::{self, AttributeKind, AttributeValue, Direction, Visibility};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    ZeroRelate,
    OneRelate,
    TwoRelate,
    ThreeRelate,
    AndLogic,
    OrLogic,
    SameRelate,
}

impl Category {
    pub const ALL: [Category; 7] = [
        Category::ZeroRelate,
        Category::OneRelate,
        Category::TwoRelate,
        Category::ThreeRelate,
        Category::AndLogic,
        Category::OrLogic,
        Category::SameRelate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::ZeroRelate => "zero_relate",
            Category::OneRelate => "one_relate",
            Category::TwoRelate => "two_relate",
            Category::ThreeRelate => "three_relate",
            Category::AndLogic => "and_logic",
            Category::OrLogic => "or_logic",
            Category::SameRelate => "same_relate",
        }
    }

    /// Number of chained spatial relations for the `*_relate` categories.
    pub fn relation_depth(self) -> Option<usize> {
        match self {
            Category::ZeroRelate => Some(0),
            Category::OneRelate => Some(1),
            Category::TwoRelate => Some(2),
            Category::ThreeRelate => Some(3),
            _ => None,
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SkeletonNode {
    Scene,
    Describe {
        slot: String,
        input: usize,
        #[serde(default)]
        unique: bool,
    },
    Relate {
        slot: String,
        input: usize,
    },
    Same {
        attribute: AttributeKind,
        input: usize,
    },
    And {
        inputs: [usize; 2],
    },
    Or {
        inputs: [usize; 2],
    },
}

impl SkeletonNode {
    fn inputs(&self) -> Vec<usize> {
        match self {
            SkeletonNode::Scene => vec![],
            SkeletonNode::Describe { input, .. }
            | SkeletonNode::Relate { input, .. }
            | SkeletonNode::Same { input, .. } => {
                vec![*input]
            }
            SkeletonNode::And { inputs } | SkeletonNode::Or { inputs } => inputs.to_vec(),
        }
    }

    fn slot(&self) -> Option<&str> {
        match self {
            SkeletonNode::Describe { slot, .. } | SkeletonNode::Relate { slot, .. } => Some(slot),
            _ => None,
        }
    }
}

/// Extra selector on a description: pick the k-th along a direction, or keep one
/// visibility class. Never both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decoration {
    Ordinal { rank: usize, direction: Direction },
    Visible(Visibility),
}

impl Decoration {
    pub fn op(self) -> Op {
        match self {
            Decoration::Ordinal { rank, direction } => Op::Ordinal { rank, direction },
            Decoration::Visible(v) => Op::Visible(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Description {
    pub filters: Vec<AttributeValue>,
    pub decoration: Option<Decoration>,
}

impl Description {
    pub fn is_empty(&self) -> bool {
        self.filters.is_empty() && self.decoration.is_none()
    }

    pub fn value(&self, kind: AttributeKind) -> Option<AttributeValue> {
        self.filters.iter().copied().find(|v| v.kind() == kind)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlotValue {
    Describe(Description),
    Relate(Direction),
}

/// Concrete values for every slot of a family.
pub type Binding = BTreeMap<String, SlotValue>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateFamily {
    pub name: String,
    pub category: Category,
    pub skeleton: Vec<SkeletonNode>,
    pub texts: Vec<String>,
}

impl TemplateFamily {
    fn error(&self, detail: impl Into<String>) -> Error {
        Error::Template {
            family: self.name.clone(),
            detail: detail.into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.skeleton.is_empty() {
            return Err(self.error("empty skeleton"));
        }
        for (i, node) in self.skeleton.iter().enumerate() {
            if node.inputs().iter().any(|&j| j >= i) {
                return Err(self.error(format!("skeleton node {i} reads a later node")));
            }
        }
        match self.skeleton.last() {
            Some(SkeletonNode::Describe { unique: false, .. }) => {}
            _ => return Err(self.error("root must be a non-unique describe slot")),
        }
        let mut reached = BTreeSet::new();
        let mut stack = vec![self.skeleton.len() - 1];
        while let Some(i) = stack.pop() {
            if reached.insert(i) {
                stack.extend(self.skeleton[i].inputs());
            }
        }
        if reached.len() != self.skeleton.len() {
            return Err(self.error("skeleton node unreachable from root"));
        }

        let slots = self.slots();
        let unique: BTreeSet<&str> = slots.iter().copied().collect();
        if unique.len() != slots.len() {
            return Err(self.error("duplicate slot name"));
        }
        if self.texts.len() < 2 {
            return Err(self.error("at least two text templates are required"));
        }
        for text in &self.texts {
            let used = placeholders(text).map_err(|d| self.error(d))?;
            for slot in &unique {
                if !used.contains(*slot) {
                    return Err(self.error(format!("text `{text}` is missing slot {slot}")));
                }
            }
            if let Some(extra) = used.iter().find(|s| !unique.contains(s.as_str())) {
                return Err(self.error(format!("text `{text}` names unknown slot {extra}")));
            }
        }

        let relates = self
            .skeleton
            .iter()
            .filter(|n| matches!(n, SkeletonNode::Relate { .. }))
            .count();
        let has_and = self.skeleton.iter().any(|n| matches!(n, SkeletonNode::And { .. }));
        let has_or = self.skeleton.iter().any(|n| matches!(n, SkeletonNode::Or { .. }));
        let has_same = self.skeleton.iter().any(|n| matches!(n, SkeletonNode::Same { .. }));
        let plain = !has_and && !has_or && !has_same;
        let consistent = match self.category {
            Category::ZeroRelate => plain && relates == 0,
            Category::OneRelate => plain && relates == 1,
            Category::TwoRelate => plain && relates == 2,
            Category::ThreeRelate => plain && relates == 3,
            Category::AndLogic => has_and && !has_or,
            Category::OrLogic => has_or && !has_and,
            Category::SameRelate => has_same && !has_and && !has_or && relates == 0,
        };
        if !consistent {
            return Err(self.error(format!("skeleton does not match category {}", self.category)));
        }
        Ok(())
    }

    pub fn slots(&self) -> Vec<&str> {
        self.skeleton.iter().filter_map(SkeletonNode::slot).collect()
    }

    /// Skeleton indices read by an `and`/`or` node.
    pub(crate) fn logic_operands(&self) -> BTreeSet<usize> {
        self.skeleton
            .iter()
            .filter(|n| matches!(n, SkeletonNode::And { .. } | SkeletonNode::Or { .. }))
            .flat_map(SkeletonNode::inputs)
            .collect()
    }

    /// Builds the program for a binding. Descriptions feeding `and`/`or` directly must
    /// be non-empty, otherwise the program could not be bound back unambiguously.
    pub fn instantiate(&self, binding: &Binding) -> Result<Program> {
        let operands = self.logic_operands();
        let mut nodes: Vec<ProgramNode> = Vec::new();
        let mut out: Vec<usize> = Vec::with_capacity(self.skeleton.len());
        for node in &self.skeleton {
            let id = match node {
                SkeletonNode::Scene => push(&mut nodes, Op::Scene, vec![]),
                SkeletonNode::Describe { slot, input, unique } => {
                    let desc = match binding.get(slot) {
                        Some(SlotValue::Describe(d)) => d,
                        _ => return Err(self.error(format!("binding lacks description {slot}"))),
                    };
                    if desc.is_empty() && operands.contains(&out.len()) {
                        return Err(self.error(format!("description {slot} feeds a logic node and must not be empty")));
                    }
                    let mut cur = out[*input];
                    for &value in &desc.filters {
                        cur = push(&mut nodes, Op::Filter(value), vec![cur]);
                    }
                    if let Some(dec) = desc.decoration {
                        cur = push(&mut nodes, dec.op(), vec![cur]);
                    }
                    if *unique {
                        cur = push(&mut nodes, Op::Unique, vec![cur]);
                    }
                    cur
                }
                SkeletonNode::Relate { slot, input } => match binding.get(slot) {
                    Some(SlotValue::Relate(d)) => push(&mut nodes, Op::Relate(*d), vec![out[*input]]),
                    _ => return Err(self.error(format!("binding lacks direction {slot}"))),
                },
                SkeletonNode::Same { attribute, input } => push(&mut nodes, Op::Same(*attribute), vec![out[*input]]),
                SkeletonNode::And { inputs } => push(&mut nodes, Op::And, vec![out[inputs[0]], out[inputs[1]]]),
                SkeletonNode::Or { inputs } => push(&mut nodes, Op::Or, vec![out[inputs[0]], out[inputs[1]]]),
            };
            out.push(id);
        }
        Program::new(nodes)
    }

    /// Recovers slot values from a program built from this family's skeleton.
    pub fn bind(&self, program: &Program) -> Result<Binding> {
        let nodes = program.nodes();
        let mismatch =
            |at: usize, what: &str| self.error(format!("program node {at} does not match skeleton: expected {what}"));
        let mut binding = Binding::new();
        let mut out: Vec<usize> = Vec::with_capacity(self.skeleton.len());
        let mut cursor = 0usize;
        let take = |cursor: &mut usize, expect_inputs: &[usize]| -> Option<Op> {
            let node = nodes.get(*cursor)?;
            if node.inputs != expect_inputs {
                return None;
            }
            *cursor += 1;
            Some(node.op)
        };

        for node in &self.skeleton {
            let id = match node {
                SkeletonNode::Scene => match take(&mut cursor, &[]) {
                    Some(Op::Scene) => cursor - 1,
                    _ => return Err(mismatch(cursor, "scene")),
                },
                SkeletonNode::Describe { slot, input, unique } => {
                    let mut cur = out[*input];
                    let mut desc = Description::default();
                    while let Some(ProgramNode {
                        op: Op::Filter(value),
                        inputs,
                    }) = nodes.get(cursor)
                    {
                        if inputs != &[cur] {
                            break;
                        }
                        desc.filters.push(*value);
                        cur = cursor;
                        cursor += 1;
                    }
                    if let Some(node) = nodes.get(cursor).filter(|n| n.inputs == [cur]) {
                        let dec = match node.op {
                            Op::Ordinal { rank, direction } => Some(Decoration::Ordinal { rank, direction }),
                            Op::Visible(v) => Some(Decoration::Visible(v)),
                            _ => None,
                        };
                        if dec.is_some() {
                            desc.decoration = dec;
                            cur = cursor;
                            cursor += 1;
                        }
                    }
                    if *unique {
                        match take(&mut cursor, &[cur]) {
                            Some(Op::Unique) => cur = cursor - 1,
                            _ => return Err(mismatch(cursor, "unique")),
                        }
                    }
                    binding.insert(slot.clone(), SlotValue::Describe(desc));
                    cur
                }
                SkeletonNode::Relate { slot, input } => match take(&mut cursor, &[out[*input]]) {
                    Some(Op::Relate(d)) => {
                        binding.insert(slot.clone(), SlotValue::Relate(d));
                        cursor - 1
                    }
                    _ => return Err(mismatch(cursor, "relate")),
                },
                SkeletonNode::Same { attribute, input } => match take(&mut cursor, &[out[*input]]) {
                    Some(Op::Same(k)) if k == *attribute => cursor - 1,
                    _ => return Err(mismatch(cursor, "same")),
                },
                SkeletonNode::And { inputs } => match take(&mut cursor, &[out[inputs[0]], out[inputs[1]]]) {
                    Some(Op::And) => cursor - 1,
                    _ => return Err(mismatch(cursor, "and")),
                },
                SkeletonNode::Or { inputs } => match take(&mut cursor, &[out[inputs[0]], out[inputs[1]]]) {
                    Some(Op::Or) => cursor - 1,
                    _ => return Err(mismatch(cursor, "or")),
                },
            };
            out.push(id);
        }
        if cursor != nodes.len() || out.last() != Some(&program.root()) {
            return Err(self.error("program has nodes beyond the skeleton"));
        }
        Ok(binding)
    }

    /// Renders `program` through text template `template`. Synonyms and relation wording
    /// are drawn from `rng`.
    pub fn realize<R: Rng + ?Sized>(&self, program: &Program, template: usize, rng: &mut R) -> Result<String> {
        let text = self
            .texts
            .get(template)
            .ok_or_else(|| self.error(format!("no text template {template}")))?;
        let binding = self.bind(program)?;
        let anchors: BTreeSet<&str> = self
            .skeleton
            .iter()
            .filter_map(|n| match n {
                SkeletonNode::Describe { slot, unique: true, .. } => Some(slot.as_str()),
                _ => None,
            })
            .collect();

        let mut phrases = BTreeMap::new();
        for slot in self.slots() {
            let phrase = match &binding[slot] {
                SlotValue::Describe(d) => describe_phrase(d, anchors.contains(slot), rng),
                SlotValue::Relate(dir) => relation_phrase(*dir, rng).to_string(),
            };
            phrases.insert(slot.to_string(), phrase);
        }
        let filled = fill(text, &phrases).map_err(|d| self.error(d))?;
        Ok(capitalize_sentences(&filled))
    }
}

fn push(nodes: &mut Vec<ProgramNode>, op: Op, inputs: Vec<usize>) -> usize {
    nodes.push(ProgramNode::new(op, inputs));
    nodes.len() - 1
}

/// Free-function form of [`TemplateFamily::realize`].
pub fn realize_text<R: Rng + ?Sized>(
    program: &Program,
    family: &TemplateFamily,
    template: usize,
    rng: &mut R,
) -> Result<String> {
    family.realize(program, template, rng)
}

fn placeholders(text: &str) -> std::result::Result<BTreeSet<String>, String> {
    let mut out = BTreeSet::new();
    let mut rest = text;
    while let Some(start) = rest.find('<') {
        let end = rest[start..]
            .find('>')
            .ok_or_else(|| format!("unterminated placeholder in `{text}`"))?;
        out.insert(rest[start + 1..start + end].to_string());
        rest = &rest[start + end + 1..];
    }
    Ok(out)
}

fn fill(text: &str, phrases: &BTreeMap<String, String>) -> std::result::Result<String, String> {
    let mut out = String::with_capacity(text.len() * 2);
    let mut rest = text;
    while let Some(start) = rest.find('<') {
        out.push_str(&rest[..start]);
        let end = rest[start..].find('>').ok_or("unterminated placeholder")?;
        let slot = &rest[start + 1..start + end];
        out.push_str(phrases.get(slot).ok_or_else(|| format!("unknown slot {slot}"))?);
        rest = &rest[start + end + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

fn capitalize_sentences(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut upper_next = true;
    for ch in text.chars() {
        if upper_next && ch.is_alphabetic() {
            out.extend(ch.to_uppercase());
            upper_next = false;
        } else {
            out.push(ch);
        }
        if ch == ';' {
            upper_next = true;
        }
    }
    out
}

pub const FULLY_VISIBLE_PHRASE: &str = "fully visible";
pub const PARTIALLY_VISIBLE_PHRASE: &str = "partially visible";

pub fn relation_phrases(direction: Direction) -> &'static [&'static str] {
    match direction {
        Direction::Left => &["to the left of", "left of", "on the left side of"],
        Direction::Right => &["to the right of", "right of", "on the right side of"],
        Direction::Front => &["in front of"],
        Direction::Behind => &["behind"],
    }
}

fn relation_phrase<R: Rng + ?Sized>(direction: Direction, rng: &mut R) -> &'static str {
    relation_phrases(direction).choose(rng).expect("non-empty")
}

fn word<R: Rng + ?Sized>(value: AttributeValue, rng: &mut R) -> &'static str {
    vocab::synonyms(value).choose(rng).expect("non-empty")
}

/// Noun phrase for a description. Anchors are singular ("the brown sphere"), sets plural
/// ("the green cylinders"), ordinals "the second one of the big thing(s) from front".
fn describe_phrase<R: Rng + ?Sized>(desc: &Description, anchor: bool, rng: &mut R) -> String {
    let mut words: Vec<&str> = Vec::new();
    if let Some(Decoration::Visible(v)) = desc.decoration {
        words.push(match v {
            Visibility::Fully => FULLY_VISIBLE_PHRASE,
            Visibility::Partially => PARTIALLY_VISIBLE_PHRASE,
        });
    }
    for kind in [AttributeKind::Size, AttributeKind::Color, AttributeKind::Material] {
        if let Some(value) = desc.value(kind) {
            words.push(word(value, rng));
        }
    }
    let noun = match desc.value(AttributeKind::Shape) {
        Some(shape) => word(shape, rng),
        None => vocab::GENERIC_NOUNS.choose(rng).expect("non-empty"),
    };
    let adjectives = words.join(" ");
    let head = |noun: String| {
        if adjectives.is_empty() {
            noun
        } else {
            format!("{adjectives} {noun}")
        }
    };
    match desc.decoration {
        Some(Decoration::Ordinal { rank, direction }) => format!(
            "the {} one of the {} from {}",
            vocab::ordinal_word(rank),
            head(format!("{noun}(s)")),
            direction
        ),
        _ if anchor => format!("the {}", head(noun.to_string())),
        _ => format!("the {}", head(format!("{noun}s"))),
    }
}

/// The family catalog with sampling weights.
#[derive(Debug, Clone)]
pub struct Catalog {
    families: Vec<TemplateFamily>,
}

const BUILTIN: &[&str] = &[
    include_str!("../templates/zero_relate.json"),
    include_str!("../templates/one_relate.json"),
    include_str!("../templates/two_relate.json"),
    include_str!("../templates/three_relate.json"),
    include_str!("../templates/and_relate.json"),
    include_str!("../templates/or_filter.json"),
    include_str!("../templates/or_relate.json"),
    include_str!("../templates/same_color.json"),
    include_str!("../templates/same_size.json"),
    include_str!("../templates/same_shape.json"),
    include_str!("../templates/same_material.json"),
];

impl Catalog {
    pub fn new(families: Vec<TemplateFamily>) -> Result<Self> {
        if families.is_empty() {
            return Err(Error::Config("template catalog is empty".into()));
        }
        let mut names = BTreeSet::new();
        for f in &families {
            f.validate()?;
            if !names.insert(f.name.clone()) {
                return Err(Error::Config(format!("duplicate family name {}", f.name)));
            }
        }
        Ok(Catalog { families })
    }

    pub fn builtin() -> Self {
        let families = BUILTIN
            .iter()
            .map(|text| serde_json::from_str(text).expect("builtin template parses"))
            .collect();
        Catalog::new(families).expect("builtin catalog is valid")
    }

    /// Loads every `*.json` file in `dir`, sorted by file name.
    pub fn from_dir(dir: &Path) -> Result<Self> {
        let mut paths: Vec<_> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        let families = paths
            .iter()
            .map(|p| Ok(serde_json::from_str(&std::fs::read_to_string(p)?)?))
            .collect::<Result<Vec<TemplateFamily>>>()?;
        Catalog::new(families)
    }

    pub fn families(&self) -> &[TemplateFamily] {
        &self.families
    }

    pub fn family(&self, name: &str) -> Option<&TemplateFamily> {
        self.families.iter().find(|f| f.name == name)
    }

    pub fn family_counts(&self) -> BTreeMap<Category, usize> {
        let mut counts = BTreeMap::new();
        for f in &self.families {
            *counts.entry(f.category).or_insert(0) += 1;
        }
        counts
    }

    /// Categories with fewer families than the mean family count get a ×2 multiplier.
    pub fn category_multipliers(&self) -> BTreeMap<Category, f64> {
        let counts = self.family_counts();
        let mean = counts.values().sum::<usize>() as f64 / counts.len() as f64;
        counts
            .into_iter()
            .map(|(c, n)| (c, if (n as f64) < mean { 2.0 } else { 1.0 }))
            .collect()
    }

    /// Per-family sampling weight; `overrides` replaces a category's multiplier.
    pub fn family_weights(&self, overrides: &BTreeMap<Category, f64>) -> Vec<f64> {
        let multipliers = self.category_multipliers();
        self.families
            .iter()
            .map(|f| overrides.get(&f.category).copied().unwrap_or(multipliers[&f.category]))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vocab::{Color, Material, Shape, Size};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn desc(filters: &[AttributeValue], decoration: Option<Decoration>) -> SlotValue {
        SlotValue::Describe(Description {
            filters: filters.to_vec(),
            decoration,
        })
    }

    #[test]
    fn builtin_catalog_is_valid() {
        let catalog = Catalog::builtin();
        assert_eq!(catalog.families().len(), 11);
        let counts = catalog.family_counts();
        assert_eq!(counts.len(), 7);
        assert_eq!(counts[&Category::SameRelate], 4);
        assert_eq!(counts[&Category::OrLogic], 2);
    }

    #[test]
    fn small_categories_doubled() {
        let m = Catalog::builtin().category_multipliers();
        for c in [
            Category::ZeroRelate,
            Category::OneRelate,
            Category::TwoRelate,
            Category::ThreeRelate,
            Category::AndLogic,
        ] {
            assert_eq!(m[&c], 2.0, "{c}");
        }
        assert_eq!(m[&Category::OrLogic], 1.0);
        assert_eq!(m[&Category::SameRelate], 1.0);
    }

    #[test]
    fn cyan_cubes() {
        let family = Catalog::builtin().family("zero_relate").unwrap().clone();
        let binding = Binding::from([(
            "D1".to_string(),
            desc(
                &[AttributeValue::Color(Color::Cyan), AttributeValue::Shape(Shape::Cube)],
                None,
            ),
        )]);
        let program = family.instantiate(&binding).unwrap();
        let mut seen = BTreeSet::new();
        for seed in 0..64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            seen.insert(family.realize(&program, 0, &mut rng).unwrap());
        }
        assert_eq!(
            seen,
            BTreeSet::from(["The cyan cubes".to_string(), "The cyan blocks".to_string()])
        );
    }

    #[test]
    fn green_cylinders_left_of_brown_sphere() {
        let family = Catalog::builtin().family("one_relate").unwrap().clone();
        let binding = Binding::from([
            (
                "D1".to_string(),
                desc(
                    &[
                        AttributeValue::Color(Color::Brown),
                        AttributeValue::Shape(Shape::Sphere),
                    ],
                    None,
                ),
            ),
            ("R1".to_string(), SlotValue::Relate(Direction::Left)),
            (
                "D2".to_string(),
                desc(
                    &[
                        AttributeValue::Color(Color::Green),
                        AttributeValue::Shape(Shape::Cylinder),
                    ],
                    None,
                ),
            ),
        ]);
        let program = family.instantiate(&binding).unwrap();
        let texts: BTreeSet<String> = (0..200)
            .map(|s| family.realize(&program, 0, &mut ChaCha8Rng::seed_from_u64(s)).unwrap())
            .collect();
        assert!(
            texts.contains("The green cylinders to the left of the brown sphere"),
            "{texts:?}"
        );
        assert!(texts
            .iter()
            .all(|t| t.starts_with("The green cylinders ") && t.contains(" the brown ")));
    }

    #[test]
    fn ordinal_phrase() {
        let d = Description {
            filters: vec![AttributeValue::Size(Size::Large)],
            decoration: Some(Decoration::Ordinal {
                rank: 2,
                direction: Direction::Front,
            }),
        };
        let phrases: BTreeSet<String> = (0..64)
            .map(|s| describe_phrase(&d, true, &mut ChaCha8Rng::seed_from_u64(s)))
            .collect();
        assert!(
            phrases.contains("the second one of the big thing(s) from front"),
            "{phrases:?}"
        );
    }

    #[test]
    fn visible_and_anchor_forms() {
        let d = Description {
            filters: vec![
                AttributeValue::Color(Color::Red),
                AttributeValue::Material(Material::Rubber),
            ],
            decoration: Some(Decoration::Visible(Visibility::Partially)),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = describe_phrase(&d, true, &mut rng);
        assert!(p.starts_with("the partially visible red "), "{p}");
        assert!(p.ends_with(" thing") || p.ends_with(" object"), "{p}");
    }

    #[test]
    fn two_templates_two_strings() {
        let family = Catalog::builtin().family("one_relate").unwrap().clone();
        let binding = Binding::from([
            ("D1".to_string(), desc(&[AttributeValue::Color(Color::Red)], None)),
            ("R1".to_string(), SlotValue::Relate(Direction::Behind)),
            ("D2".to_string(), desc(&[], None)),
        ]);
        let program = family.instantiate(&binding).unwrap();
        let a = family.realize(&program, 0, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let b = family.realize(&program, 1, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn two_sentence_template_capitalizes() {
        let family = Catalog::builtin().family("two_relate").unwrap().clone();
        let binding = Binding::from([
            ("D1".to_string(), desc(&[AttributeValue::Color(Color::Red)], None)),
            ("R1".to_string(), SlotValue::Relate(Direction::Behind)),
            ("D2".to_string(), desc(&[], None)),
            ("R2".to_string(), SlotValue::Relate(Direction::Front)),
            ("D3".to_string(), desc(&[AttributeValue::Shape(Shape::Cylinder)], None)),
        ]);
        let program = family.instantiate(&binding).unwrap();
        let text = family.realize(&program, 2, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(text.starts_with("Look at the "), "{text}");
        assert!(text.contains("; The cylinders that are in front of it"), "{text}");
    }

    #[test]
    fn bind_rejects_foreign_program() {
        let catalog = Catalog::builtin();
        let zero = catalog.family("zero_relate").unwrap();
        let one = catalog.family("one_relate").unwrap();
        let binding = Binding::from([
            ("D1".to_string(), desc(&[AttributeValue::Color(Color::Red)], None)),
            ("R1".to_string(), SlotValue::Relate(Direction::Behind)),
            ("D2".to_string(), desc(&[], None)),
        ]);
        let program = one.instantiate(&binding).unwrap();
        assert!(matches!(zero.bind(&program), Err(Error::Template { .. })));
        assert!(matches!(
            zero.realize(&program, 0, &mut ChaCha8Rng::seed_from_u64(0)),
            Err(Error::Template { .. })
        ));
        assert_eq!(one.bind(&program).unwrap(), binding);
    }

    #[test]
    fn invalid_families_rejected() {
        let mut f = Catalog::builtin().family("one_relate").unwrap().clone();
        f.texts = vec!["<D2> <R1>".into(), "<D2> <R1> <D1>".into()];
        assert!(f.validate().is_err());
        let mut f = Catalog::builtin().family("one_relate").unwrap().clone();
        f.category = Category::TwoRelate;
        assert!(f.validate().is_err());
        let mut f = Catalog::builtin().family("one_relate").unwrap().clone();
        f.texts.truncate(1);
        assert!(f.validate().is_err());
        let mut f = Catalog::builtin().family("one_relate").unwrap().clone();
        f.texts[0] = "<D2> <R1> <D1> <D9>".into();
        assert!(f.validate().is_err());
    }
}
