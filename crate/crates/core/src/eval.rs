//! Scoring of external predictions: segmentation IoU, detection accuracy, step-wise IoU,
//! the diagnostic slices, and an expression-blind bias audit.
//!
//! IoU convention: two empty masks score 1, exactly one empty mask scores 0. False-premise
//! expressions have empty ground truth, so predicting no foreground is rewarded.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::generate::{DatasetManifest, RefExpression};
use crate::io::PredictionRecord;
use crate::mask::Mask;
use crate::program::{Op, Topology};
use crate::render::{rasterize, RenderResult};
use crate::scene::{ObjectId, SceneGraph};
use crate::templates::Category;
use crate::vocab::{AttributeKind, AttributeValue};
use crate::{Error, Result};

pub fn iou(pred: &Mask, gt: &Mask) -> Result<f64> {
    let inter = pred.intersection_count(gt)?;
    let union = pred.union_count(gt)?;
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}

/// A manifest with its renders and lookup tables.
pub struct EvalDataset<'a> {
    pub manifest: &'a DatasetManifest,
    renders: Vec<RenderResult>,
    scene_pos: HashMap<usize, usize>,
    expr_pos: HashMap<usize, usize>,
}

impl<'a> EvalDataset<'a> {
    pub fn new(manifest: &'a DatasetManifest) -> Result<Self> {
        let renders = manifest.scenes.par_iter().map(rasterize).collect();
        Self::with_renders(manifest, renders)
    }

    /// Uses precomputed renders, one per manifest scene in order.
    pub fn with_renders(manifest: &'a DatasetManifest, renders: Vec<RenderResult>) -> Result<Self> {
        if renders.len() != manifest.scenes.len() {
            return Err(Error::Format("one render per scene is required".into()));
        }
        let scene_pos = manifest
            .scenes
            .iter()
            .enumerate()
            .map(|(i, s)| (s.scene_id, i))
            .collect();
        let expr_pos = manifest
            .expressions
            .iter()
            .enumerate()
            .map(|(i, e)| (e.expression_id, i))
            .collect();
        Ok(EvalDataset {
            manifest,
            renders,
            scene_pos,
            expr_pos,
        })
    }

    pub fn expressions(&self) -> &[RefExpression] {
        &self.manifest.expressions
    }

    pub fn expression(&self, id: usize) -> Result<&RefExpression> {
        self.expr_pos
            .get(&id)
            .map(|&i| &self.manifest.expressions[i])
            .ok_or(Error::UnknownExpression(id))
    }

    fn pos(&self, expr: &RefExpression) -> Result<usize> {
        self.scene_pos.get(&expr.scene_id).copied().ok_or_else(|| {
            Error::Format(format!(
                "expression {} names unknown scene {}",
                expr.expression_id, expr.scene_id
            ))
        })
    }

    pub fn scene(&self, expr: &RefExpression) -> Result<&SceneGraph> {
        Ok(&self.manifest.scenes[self.pos(expr)?])
    }

    pub fn render(&self, expr: &RefExpression) -> Result<&RenderResult> {
        Ok(&self.renders[self.pos(expr)?])
    }

    pub fn renders(&self) -> &[RenderResult] {
        &self.renders
    }

    /// Union of the visible masks of the referred objects.
    pub fn gt_mask(&self, expr: &RefExpression) -> Result<Mask> {
        self.render(expr)?.union_visible(&expr.referred_ids)
    }

    /// Ground-truth mask of every program node.
    pub fn step_masks(&self, expr: &RefExpression) -> Result<Vec<Mask>> {
        let render = self.render(expr)?;
        expr.step_referents
            .steps
            .iter()
            .map(|set| render.union_visible(set))
            .collect()
    }

    /// Detection candidates: objects with at least one pixel in the image.
    pub fn candidates(&self, expr: &RefExpression) -> Result<Vec<ObjectId>> {
        Ok(self
            .render(expr)?
            .objects
            .iter()
            .filter(|o| o.bbox.is_some())
            .map(|o| o.id)
            .collect())
    }
}

/// Score totals over a group of expressions. For detection `intersection`/`union` stay 0
/// and `cumulative` is `None`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SliceScore {
    pub count: usize,
    pub mean: f64,
    pub cumulative: Option<f64>,
    pub sum: f64,
    pub intersection: u64,
    pub union: u64,
}

impl SliceScore {
    fn add(&mut self, s: &Scored, segmentation: bool) {
        self.count += 1;
        self.sum += s.score;
        self.intersection += s.intersection;
        self.union += s.union;
        self.mean = self.sum / self.count as f64;
        self.cumulative = segmentation.then(|| {
            if self.union == 0 {
                1.0
            } else {
                self.intersection as f64 / self.union as f64
            }
        });
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct IncludeExclude {
    pub include: Option<SliceScore>,
    pub exclude: Option<SliceScore>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pair {
    pub left: Option<SliceScore>,
    pub right: Option<SliceScore>,
}

/// Predicted foreground sizes on false-premise expressions.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FalsePremiseStats {
    pub count: usize,
    pub zero_foreground: usize,
    pub at_most_8: usize,
    pub zero_fraction: f64,
    pub at_most_8_fraction: f64,
    /// Upper bucket bound (inclusive) → count; the last bucket is open ended.
    pub histogram: BTreeMap<String, usize>,
}

const FOREGROUND_BUCKETS: &[(usize, &str)] = &[
    (0, "0"),
    (8, "1-8"),
    (64, "9-64"),
    (512, "65-512"),
    (usize::MAX, ">512"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Track {
    Segmentation,
    Detection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub track: Track,
    pub overall: SliceScore,
    pub by_category: BTreeMap<Category, SliceScore>,
    /// Modules present vs absent, over `zero_relate` expressions only.
    pub include_exclude: BTreeMap<String, IncludeExclude>,
    pub by_relation_depth: BTreeMap<usize, SliceScore>,
    pub by_topology: BTreeMap<String, SliceScore>,
    /// `two_relate` (chain) vs `and_logic` (tree).
    pub chain_vs_tree: Pair,
    /// `two_relate` (spatial) vs `same_relate`.
    pub spatial_vs_same: Pair,
    pub by_object_count: BTreeMap<usize, SliceScore>,
    pub false_premise: Option<FalsePremiseStats>,
}

struct Scored<'e> {
    expr: &'e RefExpression,
    score: f64,
    intersection: u64,
    union: u64,
    objects: usize,
    foreground: usize,
}

const MODULE_KINDS: &[&str] = &["color", "size", "material", "shape", "ordinal", "visible"];

fn has_module(expr: &RefExpression, module: &str) -> bool {
    expr.program.nodes().iter().any(|n| match n.op {
        Op::Filter(v) => v.kind().as_str() == module,
        Op::Ordinal { .. } => module == "ordinal",
        Op::Visible(_) => module == "visible",
        _ => false,
    })
}

fn slice<K: Ord>(
    records: &[Scored],
    segmentation: bool,
    key: impl Fn(&Scored) -> Option<K>,
) -> BTreeMap<K, SliceScore> {
    let mut out: BTreeMap<K, SliceScore> = BTreeMap::new();
    for r in records {
        if let Some(k) = key(r) {
            out.entry(k).or_default().add(r, segmentation);
        }
    }
    out
}

fn build_report(track: Track, records: &[Scored]) -> EvalReport {
    let seg = track == Track::Segmentation;
    let mut overall = SliceScore::default();
    for r in records {
        overall.add(r, seg);
    }
    let by_category = slice(records, seg, |r| Some(r.expr.category));
    let include_exclude = MODULE_KINDS
        .iter()
        .map(|&m| {
            let split = slice(records, seg, |r| {
                (r.expr.category == Category::ZeroRelate).then(|| has_module(r.expr, m))
            });
            (
                m.to_string(),
                IncludeExclude {
                    include: split.get(&true).copied(),
                    exclude: split.get(&false).copied(),
                },
            )
        })
        .collect();
    let by_relation_depth = slice(records, seg, |r| r.expr.category.relation_depth());
    let by_topology = slice(records, seg, |r| {
        Some(match r.expr.program.topology() {
            Topology::Chain => "chain".to_string(),
            Topology::Tree => "tree".to_string(),
        })
    });
    let pair = |a: Category, b: Category| Pair {
        left: by_category.get(&a).copied(),
        right: by_category.get(&b).copied(),
    };
    let chain_vs_tree = pair(Category::TwoRelate, Category::AndLogic);
    let spatial_vs_same = pair(Category::TwoRelate, Category::SameRelate);
    let by_object_count = slice(records, seg, |r| Some(r.objects));

    let fp: Vec<&Scored> = records.iter().filter(|r| r.expr.is_false_premise).collect();
    let false_premise = (seg && !fp.is_empty()).then(|| {
        let mut histogram: BTreeMap<String, usize> =
            FOREGROUND_BUCKETS.iter().map(|(_, l)| (l.to_string(), 0)).collect();
        for r in &fp {
            let label = FOREGROUND_BUCKETS
                .iter()
                .find(|(hi, _)| r.foreground <= *hi)
                .expect("open bucket")
                .1;
            *histogram.get_mut(label).expect("bucket") += 1;
        }
        let zero = fp.iter().filter(|r| r.foreground == 0).count();
        let small = fp.iter().filter(|r| r.foreground <= 8).count();
        FalsePremiseStats {
            count: fp.len(),
            zero_foreground: zero,
            at_most_8: small,
            zero_fraction: zero as f64 / fp.len() as f64,
            at_most_8_fraction: small as f64 / fp.len() as f64,
            histogram,
        }
    });

    EvalReport {
        track,
        overall,
        by_category,
        include_exclude,
        by_relation_depth,
        by_topology,
        chain_vs_tree,
        spatial_vs_same,
        by_object_count,
        false_premise,
    }
}

/// Checks ids and returns predictions keyed by expression id.
fn index_predictions(predictions: &[PredictionRecord]) -> Result<BTreeMap<usize, &PredictionRecord>> {
    let mut by_id = BTreeMap::new();
    for p in predictions {
        if by_id.insert(p.expression_id, p).is_some() {
            return Err(Error::DuplicatePrediction(p.expression_id));
        }
    }
    Ok(by_id)
}

/// Scores one mask prediction per expression.
pub fn score_segmentation(predictions: &[PredictionRecord], data: &EvalDataset) -> Result<EvalReport> {
    let by_id = index_predictions(predictions)?;
    for &id in by_id.keys() {
        data.expression(id)?;
    }
    let records = data
        .expressions()
        .par_iter()
        .map(|expr| {
            let p = by_id
                .get(&expr.expression_id)
                .ok_or(Error::MissingPrediction(expr.expression_id))?;
            let mask = p.rle_mask.as_ref().ok_or(Error::WrongTrack(expr.expression_id))?;
            let gt = data.gt_mask(expr)?;
            let intersection = mask.intersection_count(&gt)? as u64;
            let union = mask.union_count(&gt)? as u64;
            Ok(Scored {
                expr,
                score: iou(mask, &gt)?,
                intersection,
                union,
                objects: data.scene(expr)?.len(),
                foreground: mask.count(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(build_report(Track::Segmentation, &records))
}

/// Scores candidate choices on single-object expressions. Every single-object expression
/// needs a prediction; predictions for other expressions are rejected.
pub fn score_detection(predictions: &[PredictionRecord], data: &EvalDataset) -> Result<EvalReport> {
    let by_id = index_predictions(predictions)?;
    for &id in by_id.keys() {
        if !data.expression(id)?.is_single_object {
            return Err(Error::MultiObjectDetection(id));
        }
    }
    let records = data
        .expressions()
        .iter()
        .filter(|e| e.is_single_object)
        .map(|expr| {
            let p = by_id
                .get(&expr.expression_id)
                .ok_or(Error::MissingPrediction(expr.expression_id))?;
            let chosen = p.candidate_id.ok_or(Error::WrongTrack(expr.expression_id))?;
            if !data.candidates(expr)?.contains(&chosen) {
                return Err(Error::BadCandidate {
                    expression: expr.expression_id,
                    candidate: chosen,
                    scene_id: expr.scene_id,
                });
            }
            let correct = expr.referred_ids.contains(&chosen);
            Ok(Scored {
                expr,
                score: if correct { 1.0 } else { 0.0 },
                intersection: 0,
                union: 0,
                objects: data.scene(expr)?.len(),
                foreground: 0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(build_report(Track::Detection, &records))
}

/// Mean IoU going into and coming out of one module kind.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StepScore {
    pub nodes: usize,
    /// Mean over nodes of the mean out-IoU of their inputs; `None` for input-less modules.
    pub in_iou: Option<f64>,
    pub out_iou: f64,
    #[serde(skip)]
    in_sum: f64,
    #[serde(skip)]
    in_nodes: usize,
    #[serde(skip)]
    out_sum: f64,
}

/// Per-module in/out IoU from per-node mask predictions.
pub fn stepwise_iou(predictions: &[PredictionRecord], data: &EvalDataset) -> Result<BTreeMap<String, StepScore>> {
    let by_id = index_predictions(predictions)?;
    let mut table: BTreeMap<String, StepScore> = BTreeMap::new();
    for (&id, p) in &by_id {
        let expr = data.expression(id)?;
        let steps = p.step_rle_masks.as_ref().ok_or(Error::TraceLength {
            expression: id,
            expected: expr.program.len(),
            found: 0,
        })?;
        if steps.len() != expr.program.len() {
            return Err(Error::TraceLength {
                expression: id,
                expected: expr.program.len(),
                found: steps.len(),
            });
        }
        let gt = data.step_masks(expr)?;
        let out: Vec<f64> = steps.iter().zip(&gt).map(|(p, g)| iou(p, g)).collect::<Result<_>>()?;
        for (i, node) in expr.program.nodes().iter().enumerate() {
            let entry = table.entry(node.op.function_name().to_string()).or_default();
            entry.nodes += 1;
            entry.out_sum += out[i];
            if !node.inputs.is_empty() {
                entry.in_nodes += 1;
                entry.in_sum += node.inputs.iter().map(|&j| out[j]).sum::<f64>() / node.inputs.len() as f64;
            }
        }
    }
    for s in table.values_mut() {
        s.out_iou = s.out_sum / s.nodes as f64;
        s.in_iou = (s.in_nodes > 0).then(|| s.in_sum / s.in_nodes as f64);
    }
    Ok(table)
}

/// The expression-blind mask that maximizes cumulative IoU over the dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantMaskBaseline {
    pub cumulative_iou: f64,
    pub pixels: usize,
    /// Fewest expressions whose ground truth covers a chosen pixel.
    pub min_coverage: usize,
    #[serde(skip)]
    pub mask: Option<Mask>,
}

/// Exact optimum: for a fixed pixel count the best mask takes the most-covered pixels,
/// so scanning prefixes of the coverage-sorted pixels finds the global maximum.
pub fn best_constant_mask(gts: &[Mask]) -> Result<ConstantMaskBaseline> {
    let Some(first) = gts.first() else {
        return Ok(ConstantMaskBaseline {
            cumulative_iou: 0.0,
            pixels: 0,
            min_coverage: 0,
            mask: None,
        });
    };
    let (w, h) = first.dims();
    let mut coverage = vec![0usize; w * h];
    let mut gt_total = 0u64;
    for g in gts {
        if g.dims() != (w, h) {
            return Err(Error::DimensionMismatch((w, h), g.dims()));
        }
        gt_total += g.count() as u64;
        for i in g.ones() {
            coverage[i] += 1;
        }
    }
    let n = gts.len() as u64;
    let mut order: Vec<usize> = (0..w * h).collect();
    order.sort_by(|&a, &b| coverage[b].cmp(&coverage[a]).then(a.cmp(&b)));
    let score = |inter: u64, union: u64| if union == 0 { 1.0 } else { inter as f64 / union as f64 };
    let (mut inter, mut union) = (0u64, gt_total);
    let (mut best, mut best_k) = (score(0, gt_total), 0usize);
    for (k, &p) in order.iter().enumerate() {
        inter += coverage[p] as u64;
        union += n - coverage[p] as u64;
        let s = score(inter, union);
        if s > best {
            best = s;
            best_k = k + 1;
        }
    }
    let mut mask = Mask::new(w, h);
    for &p in &order[..best_k] {
        mask.set(p % w, p / w, true);
    }
    Ok(ConstantMaskBaseline {
        cumulative_iou: best,
        pixels: best_k,
        min_coverage: order[..best_k].iter().map(|&p| coverage[p]).min().unwrap_or(0),
        mask: Some(mask),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeMarginal {
    pub referred: f64,
    pub all: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub expressions: usize,
    pub referred_set_sizes: BTreeMap<usize, usize>,
    /// Keyed `kind:value`; frequencies among referred objects vs all scene objects, both
    /// counted once per expression.
    pub attribute_marginals: BTreeMap<String, AttributeMarginal>,
    pub constant_mask: ConstantMaskBaseline,
    pub single_object_expressions: usize,
    /// Picks the candidate whose attributes are most typical of referred objects.
    pub most_frequent_candidate_accuracy: f64,
    pub largest_visible_accuracy: f64,
    /// Closed-form expectation of a uniformly random candidate choice.
    pub uniform_random_expected_accuracy: f64,
}

fn marginal_key(v: AttributeValue) -> String {
    format!("{}:{}", v.kind(), v)
}

/// Expression-blind statistics a biased dataset would reward.
pub fn bias_audit(data: &EvalDataset) -> Result<BiasReport> {
    let exprs = data.expressions();
    let mut sizes = BTreeMap::new();
    let mut referred_counts: BTreeMap<AttributeValue, usize> = BTreeMap::new();
    let mut all_counts: BTreeMap<AttributeValue, usize> = BTreeMap::new();
    let (mut referred_total, mut all_total) = (0usize, 0usize);
    for e in exprs {
        *sizes.entry(e.referred_ids.len()).or_insert(0) += 1;
        let scene = data.scene(e)?;
        for o in &scene.objects {
            let referred = e.referred_ids.contains(&o.id);
            all_total += 1;
            if referred {
                referred_total += 1;
            }
            for &kind in AttributeKind::ALL {
                let v = o.attribute(kind);
                *all_counts.entry(v).or_insert(0) += 1;
                if referred {
                    *referred_counts.entry(v).or_insert(0) += 1;
                }
            }
        }
    }
    let frac = |c: Option<&usize>, total: usize| {
        if total == 0 {
            0.0
        } else {
            *c.unwrap_or(&0) as f64 / total as f64
        }
    };
    let attribute_marginals = AttributeValue::all()
        .map(|v| {
            (
                marginal_key(v),
                AttributeMarginal {
                    referred: frac(referred_counts.get(&v), referred_total),
                    all: frac(all_counts.get(&v), all_total),
                },
            )
        })
        .collect();

    let gts: Vec<Mask> = exprs.par_iter().map(|e| data.gt_mask(e)).collect::<Result<_>>()?;
    let constant_mask = best_constant_mask(&gts)?;

    let singles: Vec<&RefExpression> = exprs.iter().filter(|e| e.is_single_object).collect();
    let typicality = |v: AttributeValue| {
        let kind_values = AttributeValue::values_of(v.kind()).len() as f64;
        (*referred_counts.get(&v).unwrap_or(&0) as f64 + 1.0) / (referred_total as f64 + kind_values)
    };
    let (mut mfc, mut largest, mut uniform) = (0usize, 0usize, 0.0f64);
    for e in &singles {
        let scene = data.scene(e)?;
        let render = data.render(e)?;
        let candidates = data.candidates(e)?;
        if candidates.is_empty() {
            continue;
        }
        let score = |id: ObjectId| -> f64 {
            AttributeKind::ALL
                .iter()
                .map(|&k| typicality(scene.objects[id].attribute(k)).ln())
                .sum()
        };
        let pick = *candidates
            .iter()
            .max_by(|&&a, &&b| score(a).total_cmp(&score(b)).then(b.cmp(&a)))
            .expect("non-empty");
        mfc += e.referred_ids.contains(&pick) as usize;
        let big = *candidates
            .iter()
            .max_by(|&&a, &&b| {
                render.objects[a]
                    .visible_mask
                    .count()
                    .cmp(&render.objects[b].visible_mask.count())
                    .then(b.cmp(&a))
            })
            .expect("non-empty");
        largest += e.referred_ids.contains(&big) as usize;
        uniform += 1.0 / candidates.len() as f64;
    }
    let n = singles.len().max(1) as f64;
    Ok(BiasReport {
        expressions: exprs.len(),
        referred_set_sizes: sizes,
        attribute_marginals,
        constant_mask,
        single_object_expressions: singles.len(),
        most_frequent_candidate_accuracy: mfc as f64 / n,
        largest_visible_accuracy: largest as f64 / n,
        uniform_random_expected_accuracy: uniform / n,
    })
}

/// Ground truth as predictions: masks (with step masks) for every expression.
pub fn oracle_segmentation(data: &EvalDataset) -> Result<Vec<PredictionRecord>> {
    data.expressions()
        .par_iter()
        .map(|e| {
            let mut p = PredictionRecord::mask(e.expression_id, data.gt_mask(e)?);
            p.step_rle_masks = Some(data.step_masks(e)?);
            Ok(p)
        })
        .collect()
}

/// Ground truth as candidate choices on single-object expressions.
pub fn oracle_detection(data: &EvalDataset) -> Vec<PredictionRecord> {
    data.expressions()
        .iter()
        .filter(|e| e.is_single_object)
        .map(|e| PredictionRecord::candidate(e.expression_id, *e.referred_ids.iter().next().expect("single")))
        .collect()
}

/// A uniformly random candidate for every single-object expression.
pub fn random_detection<R: Rng + ?Sized>(data: &EvalDataset, rng: &mut R) -> Result<Vec<PredictionRecord>> {
    data.expressions()
        .iter()
        .filter(|e| e.is_single_object)
        .map(|e| {
            let candidates = data.candidates(e)?;
            let pick = *candidates
                .choose(rng)
                .ok_or_else(|| Error::Format(format!("expression {} has no candidates", e.expression_id)))?;
            Ok(PredictionRecord::candidate(e.expression_id, pick))
        })
        .collect()
}

fn fmt_slice(f: &mut fmt::Formatter<'_>, label: &str, s: &SliceScore) -> fmt::Result {
    match s.cumulative {
        Some(c) => writeln!(f, "  {label:<22} n={:<7} cumIoU={c:.4} meanIoU={:.4}", s.count, s.mean),
        None => writeln!(f, "  {label:<22} n={:<7} acc={:.4}", s.count, s.mean),
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "track: {:?}", self.track)?;
        fmt_slice(f, "overall", &self.overall)?;
        writeln!(f, "by category")?;
        for (k, s) in &self.by_category {
            fmt_slice(f, k.as_str(), s)?;
        }
        writeln!(f, "zero_relate include / exclude")?;
        for (m, ie) in &self.include_exclude {
            if let Some(s) = &ie.include {
                fmt_slice(f, &format!("{m} include"), s)?;
            }
            if let Some(s) = &ie.exclude {
                fmt_slice(f, &format!("{m} exclude"), s)?;
            }
        }
        writeln!(f, "by relation depth")?;
        for (d, s) in &self.by_relation_depth {
            fmt_slice(f, &d.to_string(), s)?;
        }
        writeln!(f, "by topology")?;
        for (t, s) in &self.by_topology {
            fmt_slice(f, t, s)?;
        }
        writeln!(f, "by object count")?;
        for (n, s) in &self.by_object_count {
            fmt_slice(f, &n.to_string(), s)?;
        }
        if let Some(fp) = &self.false_premise {
            writeln!(
                f,
                "false premise: n={} zero-foreground={:.4} <=8px={:.4}",
                fp.count, fp.zero_fraction, fp.at_most_8_fraction
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rect(w: usize, h: usize, x0: usize, x1: usize) -> Mask {
        Mask::from_fn(w, h, |x, _| x >= x0 && x < x1)
    }

    #[test]
    fn iou_conventions() {
        let a = rect(8, 4, 0, 4);
        assert_eq!(iou(&a, &a).unwrap(), 1.0);
        assert_eq!(iou(&a, &rect(8, 4, 4, 8)).unwrap(), 0.0);
        let empty = Mask::new(8, 4);
        assert_eq!(iou(&empty, &empty).unwrap(), 1.0);
        assert_eq!(iou(&empty, &a).unwrap(), 0.0);
        assert!(matches!(iou(&a, &Mask::new(4, 4)), Err(Error::DimensionMismatch(..))));
    }

    #[test]
    fn half_overlap_is_one_third() {
        // Oracle: equal areas A overlapping in A/2 give (A/2) / (3A/2).
        let a = rect(8, 4, 0, 4);
        let b = rect(8, 4, 2, 6);
        let inter = (0..8).filter(|&x| x >= 2 && x < 4).count() * 4;
        let union = (0..8).filter(|&x| x < 6).count() * 4;
        assert_eq!(iou(&a, &b).unwrap(), inter as f64 / union as f64);
        assert!((iou(&a, &b).unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn constant_mask_optimum_matches_brute_force() {
        let w = 3;
        let h = 2;
        let gts = vec![
            Mask::from_fn(w, h, |x, y| x == 0 || y == 1),
            Mask::from_fn(w, h, |x, _| x == 0),
            Mask::from_fn(w, h, |x, y| x == 2 && y == 0),
            Mask::new(w, h),
        ];
        let best = best_constant_mask(&gts).unwrap();
        let mut brute: f64 = 0.0;
        for bits in 0u32..(1 << (w * h)) {
            let m = Mask::from_fn(w, h, |x, y| bits & (1 << (y * w + x)) != 0);
            let inter: usize = gts.iter().map(|g| m.intersection_count(g).unwrap()).sum();
            let union: usize = gts.iter().map(|g| m.union_count(g).unwrap()).sum();
            brute = brute.max(inter as f64 / union as f64);
        }
        assert!(
            (best.cumulative_iou - brute).abs() < 1e-12,
            "{} vs {brute}",
            best.cumulative_iou
        );
    }
}
