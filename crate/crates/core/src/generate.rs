//! Expression sampling: walk a family skeleton over a scene, pick attribute combinations
//! with uniform survivor counts, reject failures, and package datasets.

use std::collections::{BTreeMap, BTreeSet};

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{scene_seed, stream_rng, GenerationConfig, GeneratorConfig, Stream};
use crate::exec::{eval_node, execute, StepTrace};
use crate::program::{Op, Program};
use crate::render::{rasterize, RenderResult};
use crate::scene::{order_along, sample_scene, spatial_related, ObjectId, ObjectSet, SceneGraph};
use crate::templates::{Binding, Catalog, Category, Decoration, Description, SkeletonNode, SlotValue, TemplateFamily};
use crate::vocab::{AttributeKind, AttributeValue, Direction};
use crate::{Error, Result};

pub const MANIFEST_FORMAT_VERSION: &str = crate::io::FORMAT_VERSION;

/// Probabilities of decorating a description with an ordinal or a visibility selector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecorationOdds {
    pub ordinal: f64,
    pub visible: f64,
}

impl DecorationOdds {
    pub const NONE: DecorationOdds = DecorationOdds {
        ordinal: 0.0,
        visible: 0.0,
    };

    pub fn from_config(config: &GenerationConfig) -> Self {
        DecorationOdds {
            ordinal: config.ordinal_probability,
            visible: config.visible_probability,
        }
    }
}

enum DecorationDraw {
    Ordinal,
    Visible,
    Plain,
}

impl DecorationOdds {
    fn draw<R: Rng + ?Sized>(self, rng: &mut R) -> DecorationDraw {
        let u: f64 = rng.gen();
        if u < self.ordinal {
            DecorationDraw::Ordinal
        } else if u < self.ordinal + self.visible {
            DecorationDraw::Visible
        } else {
            DecorationDraw::Plain
        }
    }
}

/// Result of describing one target object within a candidate set.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeChoice {
    /// The object whose visibility decides a visibility decoration; `None` when nothing
    /// survives.
    pub target: Option<ObjectId>,
    pub description: Description,
    /// Candidates matching the attribute filters.
    pub survivors: ObjectSet,
    /// Candidates left after the decoration, if any.
    pub selected: ObjectSet,
}

/// The target's values for the attribute kinds selected by the bits of `subset`,
/// in canonical kind order.
pub fn subset_filters(scene: &SceneGraph, target: ObjectId, subset: u8) -> Vec<AttributeValue> {
    let object = &scene.objects[target];
    AttributeKind::ALL
        .iter()
        .enumerate()
        .filter(|(bit, _)| subset & (1 << bit) != 0)
        .map(|(_, &kind)| object.attribute(kind))
        .collect()
}

fn apply_filters(scene: &SceneGraph, candidates: &ObjectSet, filters: &[AttributeValue]) -> ObjectSet {
    candidates
        .iter()
        .copied()
        .filter(|&id| filters.iter().all(|&v| scene.objects[id].has(v)))
        .collect()
}

/// Survivor sets for all 16 attribute subsets, indexed by subset bits.
pub fn subset_survivors(scene: &SceneGraph, candidates: &ObjectSet, target: ObjectId) -> Vec<ObjectSet> {
    (0u8..16)
        .map(|s| apply_filters(scene, candidates, &subset_filters(scene, target, s)))
        .collect()
}

fn visibility_flags_defined(render: Option<&RenderResult>, set: &ObjectSet) -> bool {
    render.is_some_and(|r| set.iter().all(|&id| r.visibility(id).and_then(|v| v.flag()).is_some()))
}

/// Every attribute description, with the candidates it keeps. A description fixes each of
/// the four kinds to one value or leaves it open, so combinations naming values no
/// candidate has are included and keep nothing.
pub fn distinct_descriptions(scene: &SceneGraph, candidates: &ObjectSet) -> BTreeMap<Vec<AttributeValue>, ObjectSet> {
    let mut descriptions: Vec<Vec<AttributeValue>> = vec![Vec::new()];
    for &kind in AttributeKind::ALL {
        let mut next = Vec::with_capacity(descriptions.len() * 4);
        for prefix in &descriptions {
            next.push(prefix.clone());
            for value in AttributeValue::values_of(kind) {
                let mut d = prefix.clone();
                d.push(value);
                next.push(d);
            }
        }
        descriptions = next;
    }
    descriptions
        .into_iter()
        .map(|filters| {
            let survivors = apply_filters(scene, candidates, &filters);
            (filters, survivors)
        })
        .collect()
}

/// Survivor counts reachable by some description of `candidates`.
pub fn achievable_counts(scene: &SceneGraph, candidates: &ObjectSet) -> BTreeSet<usize> {
    distinct_descriptions(scene, candidates)
        .values()
        .map(|s| s.len())
        .collect()
}

/// Describes part of `candidates`: a distinct survivor count (zero included) is drawn
/// uniformly, then a description achieving it, then an optional decoration. With
/// `require_filter` the empty description is excluded. A zero count yields a choice with
/// no survivors, which callers reject.
fn describe_set<R: Rng + ?Sized>(
    scene: &SceneGraph,
    render: Option<&RenderResult>,
    candidates: &ObjectSet,
    odds: DecorationOdds,
    require_filter: bool,
    excluded: Option<AttributeKind>,
    rng: &mut R,
) -> Option<AttributeChoice> {
    let mut by_count: BTreeMap<usize, Vec<(Vec<AttributeValue>, ObjectSet)>> = BTreeMap::new();
    for (filters, set) in distinct_descriptions(scene, candidates) {
        let redundant = filters.iter().any(|v| Some(v.kind()) == excluded);
        if !(require_filter && filters.is_empty()) && !redundant {
            by_count.entry(set.len()).or_default().push((filters, set));
        }
    }
    let counts: Vec<usize> = by_count.keys().copied().collect();
    let count = *counts.choose(rng)?;
    let (filters, chosen) = by_count[&count].choose(rng)?.clone();
    let pool: Vec<ObjectId> = chosen.iter().copied().collect();
    let Some(&target) = pool.choose(rng) else {
        return Some(AttributeChoice {
            target: None,
            description: Description {
                filters,
                decoration: None,
            },
            survivors: chosen,
            selected: ObjectSet::new(),
        });
    };

    let mut decoration = None;
    let mut selected = chosen.clone();
    match odds.draw(rng) {
        DecorationDraw::Ordinal => {
            let direction = *Direction::ALL.choose(rng).expect("directions");
            let rank = rng.gen_range(1..=chosen.len());
            let ordered = order_along(scene, &chosen, direction).expect("ids come from the scene");
            selected = ObjectSet::from([ordered[rank - 1]]);
            decoration = Some(Decoration::Ordinal { rank, direction });
        }
        DecorationDraw::Visible if visibility_flags_defined(render, &chosen) => {
            let render = render.expect("checked");
            let flag = render.visibility(target).and_then(|v| v.flag()).expect("checked");
            selected = chosen
                .iter()
                .copied()
                .filter(|&id| render.visibility(id).and_then(|v| v.flag()) == Some(flag))
                .collect();
            decoration = Some(Decoration::Visible(flag));
        }
        _ => {}
    }
    Some(AttributeChoice {
        target: Some(target),
        description: Description { filters, decoration },
        survivors: chosen,
        selected,
    })
}

/// Describes a subset of a non-empty candidate set with survivor counts drawn uniformly
/// from the achievable ones, zero included. `target` in the result is a survivor picked
/// uniformly; it decides the visibility flag when that decoration is drawn.
pub fn choose_attribute_combo<R: Rng + ?Sized>(
    scene: &SceneGraph,
    render: Option<&RenderResult>,
    candidates: &ObjectSet,
    odds: DecorationOdds,
    rng: &mut R,
) -> Result<AttributeChoice> {
    describe_set(scene, render, candidates, odds, false, None, rng)
        .ok_or_else(|| Error::Config("cannot describe an empty candidate set".into()))
}

/// Describes a target so that exactly that object remains, or `None` when the scene
/// offers no way to single it out.
pub fn choose_unique<R: Rng + ?Sized>(
    scene: &SceneGraph,
    render: Option<&RenderResult>,
    candidates: &ObjectSet,
    odds: DecorationOdds,
    rng: &mut R,
) -> Option<AttributeChoice> {
    let pool: Vec<ObjectId> = candidates.iter().copied().collect();
    let target = *pool.choose(rng)?;
    let survivors = subset_survivors(scene, candidates, target);
    let only_target = ObjectSet::from([target]);
    let finish = |subset: u8, decoration| AttributeChoice {
        target: Some(target),
        description: Description {
            filters: subset_filters(scene, target, subset),
            decoration,
        },
        survivors: survivors[subset as usize].clone(),
        selected: only_target.clone(),
    };

    match odds.draw(rng) {
        DecorationDraw::Ordinal => {
            let subset = rng.gen_range(0u8..16);
            let direction = *Direction::ALL.choose(rng).expect("directions");
            let ordered = order_along(scene, &survivors[subset as usize], direction).expect("ids come from the scene");
            let rank = ordered
                .iter()
                .position(|&id| id == target)
                .expect("target survives its own filters")
                + 1;
            return Some(finish(subset, Some(Decoration::Ordinal { rank, direction })));
        }
        DecorationDraw::Visible => {
            if let Some(render) = render {
                let flag = render.visibility(target).and_then(|v| v.flag());
                let options: Vec<u8> = (0u8..16)
                    .filter(|&s| {
                        let set = &survivors[s as usize];
                        flag.is_some()
                            && visibility_flags_defined(Some(render), set)
                            && set
                                .iter()
                                .filter(|&&id| render.visibility(id).and_then(|v| v.flag()) == flag)
                                .count()
                                == 1
                    })
                    .collect();
                if let (Some(&subset), Some(flag)) = (options.choose(rng), flag) {
                    return Some(finish(subset, Some(Decoration::Visible(flag))));
                }
            }
        }
        DecorationDraw::Plain => {}
    }
    let options: Vec<u8> = (0u8..16).filter(|&s| survivors[s as usize] == only_target).collect();
    options.choose(rng).map(|&subset| finish(subset, None))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefExpression {
    pub expression_id: usize,
    pub scene_id: usize,
    pub text: String,
    pub family: String,
    pub template_index: usize,
    pub category: Category,
    pub program: Program,
    pub referred_ids: ObjectSet,
    pub step_referents: StepTrace,
    pub is_single_object: bool,
    pub is_false_premise: bool,
}

impl RefExpression {
    /// Checks the record against a fresh execution of its program.
    pub fn check(&self, scene: &SceneGraph, render: &RenderResult) -> Result<()> {
        let fail = |detail: String| Error::Validation {
            subject: format!("expression {}", self.expression_id),
            detail,
        };
        let trace = execute(&self.program, scene, Some(render)).map_err(|e| fail(format!("program fails: {e}")))?;
        if trace != self.step_referents {
            return Err(fail("stored step referents differ from execution".into()));
        }
        if &self.referred_ids != trace.final_set() {
            return Err(fail("stored referred ids differ from execution".into()));
        }
        if self.is_single_object != (self.referred_ids.len() == 1) {
            return Err(fail("is_single_object flag is wrong".into()));
        }
        if self.is_false_premise != self.referred_ids.is_empty() {
            return Err(fail("false-premise flag disagrees with the referred set".into()));
        }
        let ordinal = self.program.count(|op| matches!(op, Op::Ordinal { .. }));
        let visible = self.program.count(|op| matches!(op, Op::Visible(_)));
        if ordinal > 0 && visible > 0 {
            return Err(fail("combines ordinal and visibility selectors".into()));
        }
        Ok(())
    }
}

/// Samples expressions from a catalog with category-balanced family weights.
#[derive(Debug, Clone)]
pub struct Generator<'a> {
    catalog: &'a Catalog,
    config: GenerationConfig,
    weights: Vec<f64>,
    index: WeightedIndex<f64>,
}

impl<'a> Generator<'a> {
    pub fn new(catalog: &'a Catalog, config: &GenerationConfig) -> Result<Self> {
        config.validate()?;
        let weights = catalog.family_weights(&config.category_weights);
        let index = WeightedIndex::new(&weights).map_err(|e| Error::Config(format!("family weights unusable: {e}")))?;
        Ok(Generator {
            catalog,
            config: config.clone(),
            weights,
            index,
        })
    }

    pub fn catalog(&self) -> &Catalog {
        self.catalog
    }

    /// Sampling probability of each family, in catalog order.
    pub fn family_probabilities(&self) -> Vec<f64> {
        let total: f64 = self.weights.iter().sum();
        self.weights.iter().map(|w| w / total).collect()
    }

    fn run<R, F>(&self, scene: &SceneGraph, rng: &mut R, mut attempt: F) -> Result<RefExpression>
    where
        R: Rng + ?Sized,
        F: FnMut(&TemplateFamily, &mut R) -> Result<Option<RefExpression>>,
    {
        let mut attempts = 0;
        while attempts < self.config.retry_cap {
            let family = &self.catalog.families()[self.index.sample(rng)];
            for _ in 0..self.config.attempts_per_family {
                if attempts == self.config.retry_cap {
                    break;
                }
                attempts += 1;
                if let Some(expr) = attempt(family, rng)? {
                    return Ok(expr);
                }
            }
        }
        Err(Error::GenerationExhausted {
            scene_id: scene.scene_id,
            attempts,
        })
    }

    /// Draws one expression whose referent set is non-empty.
    pub fn sample_expression<R: Rng + ?Sized>(
        &self,
        scene: &SceneGraph,
        render: &RenderResult,
        expression_id: usize,
        rng: &mut R,
    ) -> Result<RefExpression> {
        self.run(scene, rng, |family, rng| {
            self.attempt(family, scene, render, expression_id, false, rng)
        })
    }

    /// Draws one expression whose final referent set is empty while its first
    /// non-scene step is not.
    pub fn generate_false_premise<R: Rng + ?Sized>(
        &self,
        scene: &SceneGraph,
        render: &RenderResult,
        expression_id: usize,
        rng: &mut R,
    ) -> Result<RefExpression> {
        self.run(scene, rng, |family, rng| {
            self.attempt(family, scene, render, expression_id, true, rng)
        })
    }

    /// A single attempt on a given family; `Ok(None)` means the draw was rejected.
    pub fn attempt<R: Rng + ?Sized>(
        &self,
        family: &TemplateFamily,
        scene: &SceneGraph,
        render: &RenderResult,
        expression_id: usize,
        false_premise: bool,
        rng: &mut R,
    ) -> Result<Option<RefExpression>> {
        let Some(binding) = self.walk(family, scene, render, false_premise, rng) else {
            return Ok(None);
        };
        let program = family.instantiate(&binding)?;
        let trace = match execute(&program, scene, Some(render)) {
            Ok(trace) => trace,
            Err(_) => return Ok(None),
        };
        let referred = trace.final_set().clone();
        if false_premise {
            let first = program.nodes().iter().position(|n| n.op != Op::Scene);
            if !referred.is_empty() || first.is_none_or(|i| trace.steps[i].is_empty()) {
                return Ok(None);
            }
        } else if referred.is_empty() {
            return Ok(None);
        }
        let template_index = rng.gen_range(0..family.texts.len());
        let text = family.realize(&program, template_index, rng)?;
        let expr = RefExpression {
            expression_id,
            scene_id: scene.scene_id,
            text,
            family: family.name.clone(),
            template_index,
            category: family.category,
            is_single_object: referred.len() == 1,
            is_false_premise: false_premise,
            referred_ids: referred,
            program,
            step_referents: trace,
        };
        expr.check(scene, render)?;
        Ok(Some(expr))
    }

    /// Fills every slot while tracking intermediate referent sets. Returns `None` as soon
    /// as a choice leaves nothing to continue with.
    fn walk<R: Rng + ?Sized>(
        &self,
        family: &TemplateFamily,
        scene: &SceneGraph,
        render: &RenderResult,
        false_premise: bool,
        rng: &mut R,
    ) -> Option<Binding> {
        let operands = family.logic_operands();
        let root = family.skeleton.len() - 1;
        let mut odds = DecorationOdds::from_config(&self.config);
        let mut sets: Vec<ObjectSet> = Vec::with_capacity(family.skeleton.len());
        let mut binding = Binding::new();
        for (i, node) in family.skeleton.iter().enumerate() {
            let out = match node {
                SkeletonNode::Scene => scene.all_ids(),
                SkeletonNode::Describe { slot, input, unique } => {
                    let candidates = &sets[*input];
                    if candidates.is_empty() {
                        return None;
                    }
                    if false_premise && i == root {
                        let description = absent_description(scene, candidates, rng)?;
                        binding.insert(slot.clone(), SlotValue::Describe(description));
                        ObjectSet::new()
                    } else {
                        let choice = if *unique {
                            choose_unique(scene, Some(render), candidates, odds, rng)?
                        } else {
                            // Objects read from `same X` already share X with the anchor.
                            let excluded = match family.skeleton[*input] {
                                SkeletonNode::Same { attribute, .. } => Some(attribute),
                                _ => None,
                            };
                            describe_set(
                                scene,
                                Some(render),
                                candidates,
                                odds,
                                operands.contains(&i),
                                excluded,
                                rng,
                            )?
                        };
                        match choice.description.decoration {
                            Some(Decoration::Ordinal { .. }) => odds.visible = 0.0,
                            Some(Decoration::Visible(_)) => odds.ordinal = 0.0,
                            None => {}
                        }
                        binding.insert(slot.clone(), SlotValue::Describe(choice.description));
                        choice.selected
                    }
                }
                SkeletonNode::Relate { slot, input } => {
                    let anchor = single(&sets[*input])?;
                    let direction = *Direction::ALL.choose(rng).expect("directions");
                    let set = spatial_related(scene, anchor, direction).ok()?;
                    binding.insert(slot.clone(), SlotValue::Relate(direction));
                    set
                }
                SkeletonNode::Same { attribute, input } => {
                    eval_node(&Op::Same(*attribute), &[&sets[*input]], scene, Some(render)).ok()?
                }
                SkeletonNode::And { inputs } => {
                    eval_node(&Op::And, &[&sets[inputs[0]], &sets[inputs[1]]], scene, None).ok()?
                }
                SkeletonNode::Or { inputs } => {
                    eval_node(&Op::Or, &[&sets[inputs[0]], &sets[inputs[1]]], scene, None).ok()?
                }
            };
            if out.is_empty() && !(false_premise && i == root) {
                return None;
            }
            sets.push(out);
        }
        Some(binding)
    }
}

fn single(set: &ObjectSet) -> Option<ObjectId> {
    (set.len() == 1).then(|| *set.iter().next().expect("len checked"))
}

/// Two to four attribute filters matching none of `candidates`. The first filter is taken
/// from an existing candidate so the description is partly grounded.
fn absent_description<R: Rng + ?Sized>(scene: &SceneGraph, candidates: &ObjectSet, rng: &mut R) -> Option<Description> {
    let k = rng.gen_range(2..=4);
    let mut kinds: Vec<AttributeKind> = AttributeKind::ALL.choose_multiple(rng, k).copied().collect();
    kinds.sort();
    let pool: Vec<ObjectId> = candidates.iter().copied().collect();
    let anchor = *pool.choose(rng)?;
    let mut filters = vec![scene.objects[anchor].attribute(kinds[0])];
    for &kind in &kinds[1..] {
        filters.push(*AttributeValue::values_of(kind).choose(rng)?);
    }
    if !apply_filters(scene, candidates, &filters).is_empty() {
        return None;
    }
    Some(Description {
        filters,
        decoration: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpressionKind {
    Standard,
    FalsePremise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: String,
    pub seed: u64,
    pub config_hash: String,
    pub config: GeneratorConfig,
    pub kind: ExpressionKind,
    pub n_per_image: usize,
    pub num_scenes: usize,
    pub num_expressions: usize,
    pub category_counts: BTreeMap<Category, usize>,
    pub single_object_count: usize,
    pub false_premise_count: usize,
    pub scenes: Vec<SceneGraph>,
    pub expressions: Vec<RefExpression>,
}

impl DatasetManifest {
    pub fn scene(&self, scene_id: usize) -> Option<&SceneGraph> {
        self.scenes.iter().find(|s| s.scene_id == scene_id)
    }

    /// Renders every scene, in manifest order.
    pub fn renders(&self) -> Vec<RenderResult> {
        self.scenes.par_iter().map(rasterize).collect()
    }

    /// Every inconsistency found, with the offending scene or expression named.
    pub fn validate(&self) -> Vec<Error> {
        let mut problems = Vec::new();
        let manifest = |detail: String| Error::Validation {
            subject: "manifest".into(),
            detail,
        };
        if self.format_version.split('.').next() != MANIFEST_FORMAT_VERSION.split('.').next() {
            problems.push(manifest(format!("unsupported format version {}", self.format_version)));
        }
        if self.config.hash() != self.config_hash {
            problems.push(manifest("config hash does not match the embedded config".into()));
        }
        if self.num_scenes != self.scenes.len() || self.num_expressions != self.expressions.len() {
            problems.push(manifest(
                "scene or expression count does not match the listed records".into(),
            ));
        }
        let summary = Summary::of(&self.expressions);
        if summary.category_counts != self.category_counts
            || summary.single_object_count != self.single_object_count
            || summary.false_premise_count != self.false_premise_count
        {
            problems.push(manifest("summary counts do not match the listed expressions".into()));
        }
        let ids: BTreeSet<usize> = self.expressions.iter().map(|e| e.expression_id).collect();
        if ids.len() != self.expressions.len() {
            problems.push(manifest("duplicate expression ids".into()));
        }

        let mut per_scene: BTreeMap<usize, usize> = BTreeMap::new();
        for e in &self.expressions {
            *per_scene.entry(e.scene_id).or_default() += 1;
        }
        let renders = self.renders();
        let by_id: BTreeMap<usize, (&SceneGraph, &RenderResult)> = self
            .scenes
            .iter()
            .zip(&renders)
            .map(|(s, r)| (s.scene_id, (s, r)))
            .collect();
        for scene in &self.scenes {
            let n = per_scene.get(&scene.scene_id).copied().unwrap_or(0);
            if n != self.n_per_image {
                problems.push(Error::Validation {
                    subject: format!("scene {}", scene.scene_id),
                    detail: format!("{n} expressions, expected {}", self.n_per_image),
                });
            }
        }
        let checks: Vec<Error> = self
            .expressions
            .par_iter()
            .filter_map(|e| match by_id.get(&e.scene_id) {
                None => Some(Error::Validation {
                    subject: format!("expression {}", e.expression_id),
                    detail: format!("unknown scene {}", e.scene_id),
                }),
                Some((scene, render)) => {
                    let kind_ok = e.is_false_premise == (self.kind == ExpressionKind::FalsePremise);
                    if !kind_ok {
                        return Some(Error::Validation {
                            subject: format!("expression {}", e.expression_id),
                            detail: "expression kind differs from the manifest kind".into(),
                        });
                    }
                    e.check(scene, render).err()
                }
            })
            .collect();
        problems.extend(checks);
        problems
    }
}

struct Summary {
    category_counts: BTreeMap<Category, usize>,
    single_object_count: usize,
    false_premise_count: usize,
}

impl Summary {
    fn of(expressions: &[RefExpression]) -> Self {
        let mut category_counts = BTreeMap::new();
        for e in expressions {
            *category_counts.entry(e.category).or_insert(0) += 1;
        }
        Summary {
            category_counts,
            single_object_count: expressions.iter().filter(|e| e.is_single_object).count(),
            false_premise_count: expressions.iter().filter(|e| e.is_false_premise).count(),
        }
    }
}

/// Samples scenes `0..n`, each from its own derived seed.
pub fn generate_scenes(config: &GeneratorConfig, n: usize) -> Result<Vec<SceneGraph>> {
    config.validate()?;
    (0..n)
        .into_par_iter()
        .map(|i| sample_scene(i, scene_seed(config.seed, i), &config.scene))
        .collect()
}

/// Generates `config.n_per_image` expressions for every scene. Scenes are processed in
/// parallel, each with its own random stream, so the output does not depend on the
/// number of workers.
pub fn generate_dataset(
    scenes: Vec<SceneGraph>,
    catalog: &Catalog,
    config: &GeneratorConfig,
    kind: ExpressionKind,
) -> Result<DatasetManifest> {
    config.validate()?;
    let generator = Generator::new(catalog, &config.generation)?;
    let n = config.n_per_image;
    let per_scene: Vec<Vec<RefExpression>> = scenes
        .par_iter()
        .enumerate()
        .map(|(position, scene)| {
            let render = rasterize(scene);
            let stream = match kind {
                ExpressionKind::Standard => Stream::Expression,
                ExpressionKind::FalsePremise => Stream::FalsePremise,
            };
            let mut rng = stream_rng(config.seed, stream, scene.scene_id);
            (0..n)
                .map(|k| {
                    let id = position * n + k;
                    match kind {
                        ExpressionKind::Standard => generator.sample_expression(scene, &render, id, &mut rng),
                        ExpressionKind::FalsePremise => generator.generate_false_premise(scene, &render, id, &mut rng),
                    }
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let expressions: Vec<RefExpression> = per_scene.into_iter().flatten().collect();
    let summary = Summary::of(&expressions);
    Ok(DatasetManifest {
        format_version: MANIFEST_FORMAT_VERSION.into(),
        seed: config.seed,
        config_hash: config.hash(),
        config: config.clone(),
        kind,
        n_per_image: n,
        num_scenes: scenes.len(),
        num_expressions: expressions.len(),
        category_counts: summary.category_counts,
        single_object_count: summary.single_object_count,
        false_premise_count: summary.false_premise_count,
        scenes,
        expressions,
    })
}
