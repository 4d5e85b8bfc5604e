//! Block-world scenes: objects, camera, direction vectors, and seeded sampling.

use std::collections::{BTreeMap, BTreeSet};

use glam::DVec3;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::vocab::{Color, Direction, Material, Shape, Size};
use crate::{Error, Result};

pub type ObjectId = usize;
pub type ObjectSet = BTreeSet<ObjectId>;

/// Footprint radius in world units for each size class.
pub fn size_radius(size: Size) -> f64 {
    match size {
        Size::Large => 0.7,
        Size::Small => 0.35,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub id: ObjectId,
    pub shape: Shape,
    pub size: Size,
    pub color: Color,
    pub material: Material,
    /// Centre of the object; `z` equals [`ObjectSpec::base_radius`].
    #[serde(rename = "3d_coords")]
    pub position: DVec3,
    /// Degrees about the vertical axis.
    pub rotation: f64,
}

impl ObjectSpec {
    /// Radius of the circle enclosing the object's ground footprint.
    pub fn footprint_radius(&self) -> f64 {
        size_radius(self.size)
    }

    /// Sphere and cylinder radius, or cube half-side. Cubes are shrunk by √2 so their
    /// footprint diagonal matches the other shapes.
    pub fn base_radius(&self) -> f64 {
        match self.shape {
            Shape::Cube => size_radius(self.size) / std::f64::consts::SQRT_2,
            Shape::Sphere | Shape::Cylinder => size_radius(self.size),
        }
    }

    pub fn attribute(&self, kind: crate::vocab::AttributeKind) -> crate::vocab::AttributeValue {
        use crate::vocab::{AttributeKind as K, AttributeValue as V};
        match kind {
            K::Size => V::Size(self.size),
            K::Color => V::Color(self.color),
            K::Material => V::Material(self.material),
            K::Shape => V::Shape(self.shape),
        }
    }

    pub fn has(&self, value: crate::vocab::AttributeValue) -> bool {
        self.attribute(value.kind()) == value
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraSpec {
    pub eye: DVec3,
    pub look_at: DVec3,
    pub up: DVec3,
    /// Degrees.
    pub vertical_fov: f64,
    pub image_size: (usize, usize),
}

impl Default for CameraSpec {
    fn default() -> Self {
        CameraSpec {
            eye: DVec3::new(0.0, -9.0, 7.5),
            look_at: DVec3::new(0.0, 0.4, 0.0),
            up: DVec3::Z,
            vertical_fov: 42.0,
            image_size: (320, 320),
        }
    }
}

impl CameraSpec {
    pub fn validate(&self) -> Result<()> {
        if (self.eye - self.look_at).length() < 1e-9 {
            return Err(Error::Config("camera eye coincides with look_at".into()));
        }
        if !(self.vertical_fov > 0.0 && self.vertical_fov < 180.0) {
            return Err(Error::Config(format!(
                "vertical_fov {} outside (0, 180)",
                self.vertical_fov
            )));
        }
        if self.image_size.0 == 0 || self.image_size.1 == 0 {
            return Err(Error::Config("image size must be positive".into()));
        }
        if self.forward().cross(self.up).length() < 1e-9 {
            return Err(Error::Config(
                "camera up vector is parallel to the view direction".into(),
            ));
        }
        Ok(())
    }

    pub fn forward(&self) -> DVec3 {
        (self.look_at - self.eye).normalize()
    }

    /// Ground-plane directions implied by this camera: `right` is the camera's right axis
    /// and `behind` its viewing direction, both flattened onto the ground.
    pub fn directions(&self) -> Directions {
        let forward = self.forward();
        let right = forward.cross(self.up);
        let right = DVec3::new(right.x, right.y, 0.0).normalize();
        let behind = DVec3::new(forward.x, forward.y, 0.0);
        // Looking straight down leaves no horizontal component; fall back to up's projection.
        let behind = if behind.length() > 1e-9 {
            behind.normalize()
        } else {
            DVec3::new(self.up.x, self.up.y, 0.0).normalize()
        };
        Directions {
            left: -right,
            right,
            front: -behind,
            behind,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Directions {
    pub left: DVec3,
    pub right: DVec3,
    pub front: DVec3,
    pub behind: DVec3,
}

impl Directions {
    pub fn vector(&self, direction: Direction) -> DVec3 {
        match direction {
            Direction::Left => self.left,
            Direction::Right => self.right,
            Direction::Front => self.front,
            Direction::Behind => self.behind,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for d in Direction::ALL {
            let v = self.vector(*d);
            if (v.length() - 1.0).abs() > 1e-9 {
                return Err(Error::Format(format!("direction {d} is not unit length")));
            }
        }
        if (self.left.dot(self.right) + 1.0).abs() > 1e-9 || (self.front.dot(self.behind) + 1.0).abs() > 1e-9 {
            return Err(Error::Format("direction vectors are not pairwise opposite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SplitCondition {
    A,
    B,
    #[default]
    #[serde(rename = "none")]
    None,
}

impl std::str::FromStr for SplitCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(SplitCondition::A),
            "B" | "b" => Ok(SplitCondition::B),
            "none" => Ok(SplitCondition::None),
            other => Err(Error::UnknownValue {
                kind: "split condition",
                value: other.into(),
            }),
        }
    }
}

/// Which colors each shape may take under a compositional split. Shapes missing from a
/// table are unconstrained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitTables {
    pub condition_a: BTreeMap<Shape, Vec<Color>>,
    pub condition_b: BTreeMap<Shape, Vec<Color>>,
}

impl Default for SplitTables {
    fn default() -> Self {
        use Color::*;
        let first = vec![Gray, Blue, Brown, Yellow];
        let second = vec![Red, Green, Purple, Cyan];
        SplitTables {
            condition_a: BTreeMap::from([(Shape::Cube, first.clone()), (Shape::Cylinder, second.clone())]),
            condition_b: BTreeMap::from([(Shape::Cube, second), (Shape::Cylinder, first)]),
        }
    }
}

impl SplitTables {
    pub fn allowed_colors(&self, condition: SplitCondition, shape: Shape) -> &[Color] {
        let table = match condition {
            SplitCondition::A => &self.condition_a,
            SplitCondition::B => &self.condition_b,
            SplitCondition::None => return Color::ALL,
        };
        table.get(&shape).map(Vec::as_slice).unwrap_or(Color::ALL)
    }

    pub fn allows(&self, condition: SplitCondition, shape: Shape, color: Color) -> bool {
        self.allowed_colors(condition, shape).contains(&color)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneConfig {
    pub min_objects: usize,
    pub max_objects: usize,
    /// Object centres are drawn from `[-plane_extent, plane_extent]²`.
    pub plane_extent: f64,
    /// Minimum centre-to-centre ground distance. Footprints may never overlap either.
    pub min_distance: f64,
    /// Separation along a direction must exceed this for the relation to hold.
    pub relation_margin: f64,
    pub max_attempts_per_object: usize,
    pub split_condition: SplitCondition,
    pub split_tables: SplitTables,
    pub camera: CameraSpec,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            min_objects: 3,
            max_objects: 10,
            plane_extent: 3.0,
            min_distance: 0.8,
            relation_margin: 0.15,
            max_attempts_per_object: 50,
            split_condition: SplitCondition::None,
            split_tables: SplitTables::default(),
            camera: CameraSpec::default(),
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_objects == 0 || self.min_objects > self.max_objects {
            return Err(Error::Config(format!(
                "object count range [{}, {}] is empty or starts at zero",
                self.min_objects, self.max_objects
            )));
        }
        if self.max_objects > 64 {
            return Err(Error::Config("at most 64 objects per scene are supported".into()));
        }
        if !(self.plane_extent > 0.0) || !(self.min_distance >= 0.0) || !(self.relation_margin >= 0.0) {
            return Err(Error::Config(
                "plane extent must be positive; distance and margin non-negative".into(),
            ));
        }
        if self.max_attempts_per_object == 0 {
            return Err(Error::Config("max_attempts_per_object must be at least 1".into()));
        }
        for (shape, colors) in self
            .split_tables
            .condition_a
            .iter()
            .chain(&self.split_tables.condition_b)
        {
            if colors.is_empty() {
                return Err(Error::Config(format!("split table allows no colors for {shape}")));
            }
        }
        self.camera.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneGraph {
    pub scene_id: usize,
    pub seed: u64,
    pub objects: Vec<ObjectSpec>,
    pub directions: Directions,
    pub camera: CameraSpec,
    pub relation_margin: f64,
    pub split_condition: SplitCondition,
}

impl SceneGraph {
    /// Builds a scene from explicit objects with directions derived from the camera.
    pub fn new(scene_id: usize, objects: Vec<ObjectSpec>, camera: CameraSpec, relation_margin: f64) -> Self {
        SceneGraph {
            scene_id,
            seed: 0,
            directions: camera.directions(),
            objects,
            camera,
            relation_margin,
            split_condition: SplitCondition::None,
        }
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn all_ids(&self) -> ObjectSet {
        (0..self.objects.len()).collect()
    }

    pub fn object(&self, id: ObjectId) -> Result<&ObjectSpec> {
        self.objects.get(id).ok_or(Error::InvalidReference(id))
    }

    /// Checks the structural invariants that do not depend on a sampling config.
    pub fn validate(&self) -> Result<()> {
        self.directions.validate()?;
        self.camera.validate()?;
        for (index, obj) in self.objects.iter().enumerate() {
            if obj.id != index {
                return Err(Error::Format(format!("object at index {index} has id {}", obj.id)));
            }
            if !(obj.base_radius() > 0.0) || !obj.position.is_finite() || !obj.rotation.is_finite() {
                return Err(Error::Format(format!("object {index} has invalid geometry")));
            }
        }
        Ok(())
    }

    /// Also checks the config-dependent invariants: count range, plane extent, spacing, split.
    pub fn validate_against(&self, config: &SceneConfig) -> Result<()> {
        self.validate()?;
        let n = self.objects.len();
        if n < config.min_objects || n > config.max_objects {
            return Err(Error::Format(format!("{n} objects outside configured range")));
        }
        for obj in &self.objects {
            if obj.position.x.abs() > config.plane_extent || obj.position.y.abs() > config.plane_extent {
                return Err(Error::Format(format!(
                    "object {} lies outside the ground plane",
                    obj.id
                )));
            }
            if !config.split_tables.allows(self.split_condition, obj.shape, obj.color) {
                return Err(Error::Format(format!("object {} violates split condition", obj.id)));
            }
        }
        for (i, a) in self.objects.iter().enumerate() {
            for b in &self.objects[i + 1..] {
                if let Some(c) = spacing_violation(a, b, config.min_distance) {
                    return Err(Error::Format(format!("objects {} and {}: {c}", a.id, b.id)));
                }
            }
        }
        Ok(())
    }

    fn separation(&self, from: ObjectId, to: ObjectId, direction: Direction) -> f64 {
        (self.objects[to].position - self.objects[from].position).dot(self.directions.vector(direction))
    }
}

fn ground_distance(a: &ObjectSpec, b: &ObjectSpec) -> f64 {
    let d = a.position - b.position;
    (d.x * d.x + d.y * d.y).sqrt()
}

fn spacing_violation(a: &ObjectSpec, b: &ObjectSpec, min_distance: f64) -> Option<&'static str> {
    let d = ground_distance(a, b);
    if d < min_distance {
        Some("minimum distance")
    } else if d < a.footprint_radius() + b.footprint_radius() {
        Some("footprint overlap")
    } else {
        None
    }
}

/// Samples a scene. Identical `(seed, config)` always yields an identical scene.
pub fn sample_scene(scene_id: usize, seed: u64, config: &SceneConfig) -> Result<SceneGraph> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = rng.gen_range(config.min_objects..=config.max_objects);
    let mut objects: Vec<ObjectSpec> = Vec::with_capacity(count);

    for id in 0..count {
        let shape = *Shape::ALL.choose(&mut rng).expect("shapes");
        let color = *config
            .split_tables
            .allowed_colors(config.split_condition, shape)
            .choose(&mut rng)
            .expect("validated non-empty");
        let size = *Size::ALL.choose(&mut rng).expect("sizes");
        let material = *Material::ALL.choose(&mut rng).expect("materials");

        let mut last_failure = "";
        let mut placed = None;
        for _ in 0..config.max_attempts_per_object {
            let e = config.plane_extent;
            let candidate = ObjectSpec {
                id,
                shape,
                size,
                color,
                material,
                position: DVec3::new(rng.gen_range(-e..=e), rng.gen_range(-e..=e), 0.0),
                rotation: rng.gen_range(0.0..360.0),
            };
            match objects
                .iter()
                .find_map(|other| spacing_violation(&candidate, other, config.min_distance))
            {
                Some(reason) => last_failure = reason,
                None => {
                    placed = Some(candidate);
                    break;
                }
            }
        }
        let mut obj = placed.ok_or_else(|| Error::SamplingExhausted {
            object: id,
            attempts: config.max_attempts_per_object,
            constraint: last_failure.to_string(),
        })?;
        obj.position.z = obj.base_radius();
        objects.push(obj);
    }

    Ok(SceneGraph {
        scene_id,
        seed,
        objects,
        directions: config.camera.directions(),
        camera: config.camera.clone(),
        relation_margin: config.relation_margin,
        split_condition: config.split_condition,
    })
}

/// Objects whose displacement from `anchor` projects onto `direction` by more than the
/// scene's relation margin.
pub fn spatial_related(scene: &SceneGraph, anchor: ObjectId, direction: Direction) -> Result<ObjectSet> {
    scene.object(anchor)?;
    Ok((0..scene.len())
        .filter(|&other| other != anchor && scene.separation(anchor, other, direction) > scene.relation_margin)
        .collect())
}

/// Orders `ids` starting from the extreme end in `direction`: "from left" puts the
/// leftmost object first. Ties go to the lower id.
pub fn order_along(scene: &SceneGraph, ids: &ObjectSet, direction: Direction) -> Result<Vec<ObjectId>> {
    let axis = scene.directions.vector(direction);
    let mut keyed = ids
        .iter()
        .map(|&id| Ok((scene.object(id)?.position.dot(axis), id)))
        .collect::<Result<Vec<_>>>()?;
    keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    Ok(keyed.into_iter().map(|(_, id)| id).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vocab::AttributeKind;

    fn obj(id: usize, x: f64, y: f64) -> ObjectSpec {
        ObjectSpec {
            id,
            shape: Shape::Sphere,
            size: Size::Small,
            color: Color::Red,
            material: Material::Rubber,
            position: DVec3::new(x, y, 0.35),
            rotation: 0.0,
        }
    }

    fn line_scene(xs: &[f64]) -> SceneGraph {
        let objects = xs.iter().enumerate().map(|(i, &x)| obj(i, x, 0.0)).collect();
        SceneGraph::new(0, objects, CameraSpec::default(), 0.15)
    }

    #[test]
    fn default_directions_are_consistent() {
        let d = CameraSpec::default().directions();
        d.validate().unwrap();
        assert!((d.right - DVec3::X).length() < 1e-12);
        assert!((d.behind - DVec3::Y).length() < 1e-12);
    }

    #[test]
    fn left_of_right_object() {
        let scene = line_scene(&[-2.0, 2.0]);
        let left = spatial_related(&scene, 1, Direction::Left).unwrap();
        assert_eq!(left, ObjectSet::from([0]));
        assert!(spatial_related(&scene, 0, Direction::Left).unwrap().is_empty());
        assert!(matches!(
            spatial_related(&scene, 7, Direction::Left),
            Err(Error::InvalidReference(7))
        ));
    }

    #[test]
    fn margin_band_is_unrelated() {
        let scene = line_scene(&[0.0, 0.1, -0.1, 1.0, -1.0]);
        let left = spatial_related(&scene, 0, Direction::Left).unwrap();
        let right = spatial_related(&scene, 0, Direction::Right).unwrap();
        assert_eq!(left, ObjectSet::from([4]));
        assert_eq!(right, ObjectSet::from([3]));
    }

    #[test]
    fn ordering_examples() {
        let scene = line_scene(&[3.0, -1.0, 0.0]);
        let all = scene.all_ids();
        assert_eq!(order_along(&scene, &all, Direction::Left).unwrap(), vec![1, 2, 0]);
        assert_eq!(order_along(&scene, &all, Direction::Right).unwrap(), vec![0, 2, 1]);
        assert_eq!(
            order_along(&scene, &ObjectSet::from([2]), Direction::Front).unwrap(),
            vec![2]
        );
        assert!(order_along(&scene, &ObjectSet::new(), Direction::Front)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn ties_break_by_id() {
        let scene = line_scene(&[1.0, 1.0, 1.0]);
        let all = scene.all_ids();
        assert_eq!(order_along(&scene, &all, Direction::Left).unwrap(), vec![0, 1, 2]);
        assert_eq!(order_along(&scene, &all, Direction::Right).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn sampled_scene_meets_config() {
        let config = SceneConfig::default();
        let scene = sample_scene(0, 7, &config).unwrap();
        assert!((3..=10).contains(&scene.len()));
        scene.validate_against(&config).unwrap();
        for o in &scene.objects {
            assert_eq!(o.position.z, o.base_radius());
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let config = SceneConfig::default();
        let a = serde_json::to_string(&sample_scene(0, 11, &config).unwrap()).unwrap();
        let b = serde_json::to_string(&sample_scene(0, 11, &config).unwrap()).unwrap();
        assert_eq!(a, b);
        let c = serde_json::to_string(&sample_scene(0, 12, &config).unwrap()).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn impossible_spacing_reports_constraint() {
        let config = SceneConfig {
            min_objects: 10,
            max_objects: 10,
            plane_extent: 0.5,
            max_attempts_per_object: 5,
            ..SceneConfig::default()
        };
        match sample_scene(0, 1, &config) {
            Err(Error::SamplingExhausted {
                constraint, attempts, ..
            }) => {
                assert_eq!(attempts, 5);
                assert!(constraint == "minimum distance" || constraint == "footprint overlap");
            }
            other => panic!("expected exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn split_condition_respected() {
        for condition in [SplitCondition::A, SplitCondition::B] {
            let config = SceneConfig {
                split_condition: condition,
                ..SceneConfig::default()
            };
            for seed in 0..50 {
                let scene = sample_scene(0, seed, &config).unwrap();
                for o in &scene.objects {
                    assert!(config.split_tables.allows(condition, o.shape, o.color));
                }
            }
        }
    }

    #[test]
    fn serialized_object_uses_3d_coords() {
        let json = serde_json::to_value(obj(0, 1.0, 2.0)).unwrap();
        assert_eq!(json["3d_coords"], serde_json::json!([1.0, 2.0, 0.35]));
        assert_eq!(json["shape"], "sphere");
        assert!(obj(0, 0.0, 0.0).has(crate::vocab::AttributeValue::Color(Color::Red)));
        assert_eq!(
            obj(0, 0.0, 0.0).attribute(AttributeKind::Shape),
            crate::vocab::AttributeValue::Shape(Shape::Sphere)
        );
    }

    #[test]
    fn bad_configs_rejected() {
        let mut c = SceneConfig::default();
        c.min_objects = 11;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let mut c = SceneConfig::default();
        c.camera.vertical_fov = 180.0;
        assert!(c.validate().is_err());
        let mut c = SceneConfig::default();
        c.camera.look_at = c.camera.eye;
        assert!(c.validate().is_err());
    }
}
